from typing import NamedTuple
import numpy as np
from scipy.special import gamma as gamma_fn
from .errors import DomainError, RetryLimitError
from .path import SampledPath
from .rng import get_rng

JUMP_SIGNS = ("positive", "negative")
TRUNCATION_KINDS = ("fixed_duration", "min_height", "min_max_jump")
TRUNCATION_ALIASES = {"min_jump": "min_max_jump"}
# relative duration window for fixed-duration excursions
DURATION_WINDOW = 0.1


class StableSpec(NamedTuple):
    stable_index: float
    jump_sign: str

    @property
    def positivity_rho(self):
        return 1.0 - 1.0 / self.stable_index

    @property
    def sign(self):
        return 1.0 if self.jump_sign == "positive" else -1.0

    def negated(self):
        other = "negative" if self.jump_sign == "positive" else "positive"
        return StableSpec(self.stable_index, other)


def make_stable_spec(stable_index=1.5, jump_sign="positive"):
    stable_index = float(stable_index)
    if not (1 < stable_index < 2):
        raise DomainError(f"stable_index must lie in (1, 2), got {stable_index}")
    if jump_sign not in JUMP_SIGNS:
        raise DomainError(f"jump_sign must be one of {JUMP_SIGNS}, got {jump_sign}")
    return StableSpec(stable_index, jump_sign)


def stable_jump_constant(alpha):
    # Levy density c u^(-1-alpha) of the unit-scale totally skewed law
    return alpha * (1.0 - alpha) / (gamma_fn(2.0 - alpha) * np.cos(np.pi * alpha / 2.0))


def laplace_constant(alpha):
    # E exp(-lambda X_1) = exp(c lambda^alpha) for the spectrally positive law
    return 1.0 / abs(np.cos(np.pi * alpha / 2.0))


def default_jump_threshold(dt, alpha):
    return 10.0 * dt ** (1.0 / alpha)


def skewed_stable_variates(alpha, size, rng):
    """
    Totally skewed (beta = 1) stable variates, unit scale and zero mean
    (S1 parameterization), by the Chambers-Mallows-Stuck transform.
    """
    v = rng.uniform(-np.pi / 2.0, np.pi / 2.0, size)
    w = rng.standard_exponential(size)
    t = np.tan(np.pi * alpha / 2.0)
    b = np.arctan(t) / alpha
    s = (1.0 + t**2) ** (1.0 / (2.0 * alpha))
    out = (
        s
        * np.sin(alpha * (v + b))
        / np.cos(v) ** (1.0 / alpha)
        * (np.cos(v - alpha * (v + b)) / w) ** ((1.0 - alpha) / alpha)
    )
    return out


def sample_stable_increment(spec, dt, seed=None, size=None):
    """
    Increment over a time step dt of the spectrally one-sided stable process.

    Args:
        spec (StableSpec): index and jump sign.
        dt (float): time step, > 0.
        seed: integer seed or numpy Generator.
        size: None for a single float, otherwise the output shape.
    """
    if dt <= 0:
        raise DomainError(f"dt must be positive, got {dt}")
    rng = get_rng(seed, "stable")
    alpha = spec.stable_index
    out = spec.sign * dt ** (1.0 / alpha) * skewed_stable_variates(alpha, size, rng)
    return float(out) if size is None else out


def positive_stable_variates(index, size, rng):
    """
    Positive stable variates with E exp(-q S) = exp(-q^index), index in (0, 1),
    from Kanter's representation.
    """
    u = rng.uniform(0.0, np.pi, size)
    w = rng.standard_exponential(size)
    a = index
    return (
        np.sin(a * u)
        / np.sin(u) ** (1.0 / a)
        * (np.sin((1.0 - a) * u) / w) ** ((1.0 - a) / a)
    )


def first_passage_oracle(spec, x0, size, seed=None):
    """
    Exact law of the first passage below 0 from x0 of the spectrally positive
    process: tau = x0^alpha / c * S with S positive (1/alpha)-stable.
    """
    if spec.jump_sign != "positive":
        raise DomainError("first passage below 0 is continuous only for positive jumps")
    alpha = spec.stable_index
    rng = get_rng(seed, "stable")
    s = positive_stable_variates(1.0 / alpha, size, rng)
    return x0**alpha / laplace_constant(alpha) * s


def _record_jumps(increments, t0, dt, threshold, sign, rng):
    # one jump per step whose increment exceeds the splitting threshold,
    # placed at a uniform time inside the step
    steps = np.flatnonzero(sign * increments > threshold)
    times = t0 + (steps + rng.uniform(size=len(steps))) * dt
    return np.stack([times, np.abs(increments[steps])], axis=1)


def sample_stable_path(spec, horizon, n_steps, x0=0.0, seed=None, jump_threshold=None):
    """
    Stable path from exact increments on a uniform grid, with the jumps above
    the threshold recorded individually.

    Returns:
        SampledPath, jumps (k, 2) array of (time, size)
    """
    if horizon <= 0 or n_steps < 1:
        raise DomainError("horizon must be positive and n_steps >= 1")
    rng = get_rng(seed, "stable")
    dt = horizon / n_steps
    alpha = spec.stable_index
    threshold = default_jump_threshold(dt, alpha) if jump_threshold is None else jump_threshold
    incr = sample_stable_increment(spec, dt, rng, n_steps)
    values = np.concatenate([[0.0], np.cumsum(incr)]) + x0
    times = np.linspace(0.0, horizon, n_steps + 1)
    jumps = _record_jumps(incr, 0.0, dt, threshold, spec.sign, rng)
    meta = {
        "stable_index": alpha,
        "jump_sign": spec.jump_sign,
        "dt": dt,
        "jump_threshold": threshold,
    }
    return SampledPath(times, values, meta), jumps


def sample_stable_jumps(
    spec, horizon, n_steps, seed=None, jump_threshold=None, chunk=2**20
):
    # recorded jumps of a long path, generated chunk by chunk without the path
    rng = get_rng(seed, "stable")
    dt = horizon / n_steps
    alpha = spec.stable_index
    threshold = default_jump_threshold(dt, alpha) if jump_threshold is None else jump_threshold
    out = []
    for start in range(0, n_steps, chunk):
        n = min(chunk, n_steps - start)
        incr = sample_stable_increment(spec, dt, rng, n)
        out.append(_record_jumps(incr, start * dt, dt, threshold, spec.sign, rng))
    return np.concatenate(out) if out else np.zeros((0, 2))


class StableExcursion:
    def __init__(self, duration, path, jumps, metadata=None):
        self.duration = duration
        self.path = path
        # (k, 2): time, size; sorted by time
        self.jumps = np.zeros((0, 2)) if jumps is None else np.asarray(jumps)
        self.metadata = {} if metadata is None else dict(metadata)

    @property
    def height(self):
        return float(self.path.values.max())

    @property
    def max_jump(self):
        return float(self.jumps[:, 1].max()) if len(self.jumps) else 0.0

    def check(self):
        self.path.check()
        v = self.path.values
        assert v[0] == 0 and v[-1] == 0
        assert np.all(v[1:-1] > 0)
        if len(self.jumps):
            assert np.all(self.jumps[:, 1] > 0)
            assert np.all(np.diff(self.jumps[:, 0]) >= 0)
            assert self.jumps[0, 0] > 0 and self.jumps[-1, 0] < self.duration
        return self

    def print_info(self):
        print(f"Excursion duration: {self.duration:.4g}, height: {self.height:.4g}")
        print(f"Recorded jumps: {len(self.jumps)}, max jump: {self.max_jump:.4g}")


def rescale_excursion(excursion, duration):
    # (1/alpha, 1) self-similarity: time x f, space and jumps x f^(1/alpha)
    alpha = excursion.metadata["stable_index"]
    f = duration / excursion.duration
    g = f ** (1.0 / alpha)
    path = SampledPath(
        excursion.path.times * f, excursion.path.values * g, excursion.path.metadata
    )
    jumps = excursion.jumps * np.array([f, g])
    meta = dict(excursion.metadata)
    meta["rescale_factor"] = f * meta.get("rescale_factor", 1.0)
    if "jump_threshold" in meta:
        meta["jump_threshold"] *= g
    return StableExcursion(duration, path, jumps, meta)


class ReflectedStream:
    """
    Streams the reflected process X - I of a spectrally positive stable
    process chunk by chunk. Grid indices where X reaches a new running minimum
    cut the path into excursions; the open excursion is carried over.
    """

    def __init__(self, spec, dt, rng, chunk=4096):
        if spec.jump_sign != "positive":
            raise DomainError("excursions of X - I are sampled for positive jumps")
        self.spec = spec
        self.dt = dt
        self.rng = rng
        self.chunk = chunk
        # increments since the last new minimum
        self.carry = np.zeros(0)
        self.n_steps = 0

    @property
    def open_length(self):
        return len(self.carry)

    def drop_open(self):
        # the process restarts afresh at its next minimum (strong Markov)
        self.carry = np.zeros(0)

    def next_chunk(self):
        """
        Returns:
            x: reflected-frame values, x[0] = 0 at the current minimum
            incr: increments, x = [0, cumsum(incr)]
            marks: new-minimum indices into x, marks[0] = 0; consecutive marks
                bound completed excursions, the last one opens the carry
        """
        new = sample_stable_increment(self.spec, self.dt, self.rng, self.chunk)
        self.n_steps += self.chunk
        incr = np.concatenate([self.carry, new])
        x = np.concatenate([[0.0], np.cumsum(incr)])
        prev_min = np.minimum.accumulate(x)[:-1]
        hits = 1 + np.flatnonzero(x[1:] <= prev_min)
        marks = np.concatenate([[0], hits])
        self.carry = incr[marks[-1]:]
        return x, incr, marks


def _segment_stats(x, incr, marks):
    # per completed segment [a, b]: length in steps, height, max increment
    a, b = marks[:-1], marks[1:]
    if len(a) == 0:
        return a, b, np.zeros(0), np.zeros(0), np.zeros(0)
    length = b - a
    # segments end at the last mark; the carry is excluded
    height = np.maximum.reduceat(x[: b[-1]], a) - x[a]
    max_inc = np.maximum.reduceat(incr[: b[-1]], a)
    return a, b, length, height, max_inc


def _build_excursion(spec, x, incr, a, b, dt, threshold, rng, meta):
    values = x[a : b + 1] - x[a]
    values[-1] = 0.0
    times = dt * np.arange(b - a + 1)
    jumps = _record_jumps(incr[a:b], 0.0, dt, threshold, 1.0, rng)
    path = SampledPath(times, values, {"dt": dt})
    meta = dict(meta, stable_index=spec.stable_index, jump_threshold=threshold)
    return StableExcursion(times[-1], path, jumps, meta)


def sample_stable_excursion(
    spec,
    truncation,
    n_steps=1024,
    seed=None,
    max_tries=10**4,
    jump_threshold=None,
    max_open_factor=64,
    chunk=4096,
):
    """
    Sample one excursion of X - I from the excursion measure under a truncation.

    Args:
        spec (StableSpec): positive jumps.
        truncation: (kind, value) with kind one of
            "fixed_duration": duration exactly `value`; the first excursion
                longer than (1 - w) is kept if shorter than (1 + w), then
                rescaled exactly (w = DURATION_WINDOW);
            "min_height": the first excursion with height >= value;
            "min_max_jump": the first excursion whose largest jump is >= value
                ("min_jump" is accepted as an alias).
        n_steps (int): grid steps per characteristic duration of the truncation.
        max_open_factor (int): open excursions longer than this many multiples
            of n_steps are dropped (min_height, min_max_jump).

    Returns:
        StableExcursion
    """
    kind, value = truncation
    kind = TRUNCATION_ALIASES.get(kind, kind)
    if kind not in TRUNCATION_KINDS:
        raise DomainError(f"unknown truncation {kind}, expected one of {TRUNCATION_KINDS}")
    if value <= 0:
        raise DomainError(f"truncation value must be positive, got {value}")
    alpha = spec.stable_index
    rng = get_rng(seed, "stable")
    if kind == "fixed_duration":
        dt = 1.0 / n_steps
        lower, upper = (1 - DURATION_WINDOW) * n_steps, (1 + DURATION_WINDOW) * n_steps
        cap = upper
    else:
        dt = value**alpha / n_steps
        cap = max_open_factor * n_steps
    threshold = default_jump_threshold(dt, alpha) if jump_threshold is None else jump_threshold
    meta = {"truncation": kind, "truncation_value": value}

    n_tries = 0
    stream = ReflectedStream(spec, dt, rng, chunk)
    while n_tries < max_tries:
        x, incr, marks = stream.next_chunk()
        a, b, length, height, max_inc = _segment_stats(x, incr, marks)
        if kind == "fixed_duration":
            decisive = np.flatnonzero(length >= lower)
        elif kind == "min_height":
            decisive = np.flatnonzero((height >= value) & (length >= 2))
        else:
            decisive = np.flatnonzero((max_inc >= value) & (length >= 2))
        if len(decisive):
            i = decisive[0]
            n_tries += 1
            if length[i] <= cap:
                exc = _build_excursion(spec, x, incr, a[i], b[i], dt, threshold, rng, meta)
                exc.metadata["n_tries"] = n_tries
                if kind == "fixed_duration":
                    exc = rescale_excursion(exc, value)
                return exc
            stream.drop_open()
        elif stream.open_length > cap:
            n_tries += 1
            stream.drop_open()
    raise RetryLimitError("no excursion met the truncation", n_tries, 0)


def sample_stable_excursions(spec, truncation, n_samples, seed=None, **kwargs):
    rng = get_rng(seed, "stable")
    return [
        sample_stable_excursion(spec, truncation, seed=rng, **kwargs) for _ in range(n_samples)
    ]


def stable_excursion_lifetimes(
    spec, min_duration, max_duration, size, seed=None, steps_per_min=16, chunk=2**16
):
    """
    Durations of completed excursions of X - I in [min_duration, max_duration].

    Excursions still open past max_duration are dropped and the stream restarts
    at the next minimum, so the kept durations are i.i.d. from the excursion
    measure restricted to the window.
    """
    if not (0 < min_duration < max_duration):
        raise DomainError("need 0 < min_duration < max_duration")
    rng = get_rng(seed, "stable")
    dt = min_duration / steps_per_min
    lo, hi = steps_per_min, int(np.floor(max_duration / dt))
    stream = ReflectedStream(spec, dt, rng, chunk)
    out = []
    n_found = 0
    while n_found < size:
        x, incr, marks = stream.next_chunk()
        length = np.diff(marks)
        keep = length[(length >= lo) & (length <= hi)]
        out.append(keep * dt)
        n_found += len(keep)
        if stream.open_length > hi:
            stream.drop_open()
    return np.concatenate(out)[:size]


class DualityReport:
    def __init__(self, x0, n_forward, n_conditioned, ks, metadata=None, degenerate=False):
        self.x0 = x0
        self.n_forward = n_forward
        self.n_conditioned = n_conditioned
        # name -> KsReport
        self.ks = ks
        self.metadata = {} if metadata is None else dict(metadata)
        self.degenerate = degenerate

    def passed(self, threshold=0.01, names=("jump_size", "lifetime")):
        if self.degenerate:
            return True
        return all(self.ks[name].p_value > threshold for name in names)

    def to_dict(self):
        return {
            "x0": self.x0,
            "n_forward": self.n_forward,
            "n_conditioned": self.n_conditioned,
            "degenerate": self.degenerate,
            "ks": {k: v._asdict() for k, v in self.ks.items()},
            "metadata": self.metadata,
        }

    def print_report(self):
        print(f"x0\t: {self.x0}")
        print(f"trials\t: {self.n_forward} forward, {self.n_conditioned} conditioned")
        for name, rep in self.ks.items():
            print(f"{name}\t: D={rep.statistic:.4f}, p={rep.p_value:.4f}")
        print("-----------------")


class _Functionals(NamedTuple):
    lifetime: float
    maximum: float
    half_life_value: float
    jumps: np.ndarray


def _functionals(values, incr, stop, dt, threshold, sign):
    # path functionals on [0, stop] of a grid path
    big = np.flatnonzero(sign * incr[:stop] > threshold)
    return _Functionals(
        stop * dt,
        float(values[: stop + 1].max()),
        float(values[int(round(stop / 2))]),
        np.abs(incr[big]),
    )


def _grow(spec, dt, rng, values, incr, n):
    new = sample_stable_increment(spec, dt, rng, n)
    incr = np.concatenate([incr, new])
    values = np.concatenate([values, values[-1] + np.cumsum(new)])
    return values, incr


def _forward_trial(spec, x0, dt, t_max, threshold, rng, chunk):
    # X from x0 until X <= 0; None if it survives past t_max
    n_max = int(np.ceil(t_max / dt))
    values, incr = np.array([x0]), np.zeros(0)
    n = chunk
    while len(incr) < n_max:
        start = len(incr)
        values, incr = _grow(spec, dt, rng, values, incr, min(n, n_max - start))
        hit = np.flatnonzero(values[start + 1 :] <= 0)
        if len(hit):
            stop = start + 1 + hit[0]
            return _functionals(values, incr, stop, dt, threshold, 1.0)
        n *= 2
    return None


def _conditioned_trial(spec, x0, dt, t_max, threshold, level, start, cap, rng, chunk):
    # negative-jump process from start; None on death below 0, else the
    # functionals up to the last passage at or below x0 before exiting above level
    neg = spec.negated()
    n_max = int(np.ceil(cap / dt))
    values, incr = np.array([start]), np.zeros(0)
    n = chunk
    while len(incr) < n_max:
        begin = len(incr)
        values, incr = _grow(neg, dt, rng, values, incr, min(n, n_max - begin))
        seg = values[begin + 1 :]
        dead = np.flatnonzero(seg <= 0)
        out = np.flatnonzero(seg >= level)
        if len(dead) and (not len(out) or dead[0] < out[0]):
            return None
        if len(out):
            exit_index = begin + 1 + out[0]
            break
        n *= 2
    else:
        if values[-1] <= x0:
            return None
        exit_index = len(values) - 1
    below = np.flatnonzero(values[:exit_index] <= x0)
    if len(below) == 0:
        return None
    stop = int(below[-1])
    if stop * dt > t_max or stop == 0:
        return None
    return _functionals(values, incr, stop, dt, threshold, -1.0)


def check_time_reversal_duality(
    spec,
    x0,
    n_trials,
    seed=None,
    dt=1e-2,
    t_max=10.0,
    level_factor=20.0,
    start_eps=1e-2,
    max_tries=None,
    chunk=256,
    verbose=False,
):
    """
    Compare the time-reversal of X (positive jumps, from x0, killed at its first
    passage below 0) with the negative-jump process conditioned to stay
    positive, started near 0 and stopped at its last passage below x0.

    The conditioned process is approximated by accepting upward exits of
    (0, level_factor * x0) from start_eps * x0. Both sides keep only lifetimes
    up to t_max. Lifetimes, maxima, the value at half the lifetime and the
    pooled jump sizes are compared by two-sample KS tests; forward lifetimes
    are also compared with the exact first-passage law.

    Returns:
        DualityReport
    """
    from .stats import two_sample_ks

    if spec.jump_sign != "positive":
        raise DomainError("the forward process must have positive jumps")
    if x0 < 0:
        raise DomainError(f"x0 must be nonnegative, got {x0}")
    if x0 == 0:
        return DualityReport(0.0, n_trials, n_trials, {}, {"lifetime": 0.0}, degenerate=True)
    rng = get_rng(seed, "stable")
    alpha = spec.stable_index
    threshold = default_jump_threshold(dt, alpha)
    max_tries = 1000 * n_trials if max_tries is None else max_tries

    # 1. forward: time-reversal functionals equal forward ones
    forward = []
    for i in range(n_trials):
        res = _forward_trial(spec, x0, dt, t_max, threshold, rng, chunk)
        if res is not None:
            forward.append(res)
    if verbose:
        print(f"Forward: {len(forward)}/{n_trials} reached 0 before {t_max}")

    # 2. conditioned side
    conditioned = []
    n_tries = 0
    while len(conditioned) < n_trials:
        if n_tries >= max_tries:
            raise RetryLimitError("conditioned duality side", n_tries, len(conditioned))
        n_tries += 1
        res = _conditioned_trial(
            spec, x0, dt, t_max, threshold, level_factor * x0,
            start_eps * x0, 10.0 * t_max, rng, chunk,
        )
        if res is not None:
            conditioned.append(res)
    if verbose:
        print(f"Conditioned: {len(conditioned)} accepted of {n_tries} tries")

    # 3. two-sample tests
    ks = {}
    for name in ("lifetime", "maximum", "half_life_value"):
        ks[name] = two_sample_ks(
            [getattr(f, name) for f in forward], [getattr(f, name) for f in conditioned]
        )
    ks["jump_size"] = two_sample_ks(
        np.concatenate([f.jumps for f in forward]),
        np.concatenate([f.jumps for f in conditioned]),
    )
    oracle = first_passage_oracle(spec, x0, 20 * n_trials, rng)
    ks["lifetime_oracle"] = two_sample_ks([f.lifetime for f in forward], oracle[oracle <= t_max])
    meta = {
        "dt": dt,
        "t_max": t_max,
        "level_factor": level_factor,
        "start_eps": start_eps,
        "conditioned_acceptance": len(conditioned) / n_tries,
    }
    return DualityReport(x0, len(forward), len(conditioned), ks, meta)


class TimeEstimate(NamedTuple):
    estimate: float
    count: int
    infinite_variance: bool


def jump_bin_counts(jumps, j_values):
    # counts of jump sizes in [e^(-j-1), e^(-j))
    sizes = np.asarray(jumps).reshape(-1, 2)[:, 1]
    return np.array(
        [np.count_nonzero((sizes >= np.exp(-j - 1.0)) & (sizes < np.exp(-j))) for j in j_values]
    )


def recover_elapsed_time(jumps, j_max, c0):
    """
    Elapsed time from the jump counts of a 3/2-stable path:
    N(e^(-j-1), e^(-j)) / ((2/3) c0 e^(3j/2) (e^(3/2) - 1)) at j = j_max.

    :param jumps: (k, 2) array of (time, size)
    :param j_max: size level
    :param c0: Levy density constant, jumps ~ c0 u^(-5/2) du
    :return: TimeEstimate
    """
    jumps = np.asarray(jumps).reshape(-1, 2)
    if len(jumps) == 0:
        return TimeEstimate(0.0, 0, True)
    count = int(jump_bin_counts(jumps, [j_max])[0])
    norm = (2.0 / 3.0) * c0 * np.exp(1.5 * j_max) * (np.exp(1.5) - 1.0)
    return TimeEstimate(count / norm, count, count == 0)


def sample_jump_ppp(c0, alpha, horizon, min_size, seed=None, max_size=np.inf):
    """
    Poisson point process on [0, horizon] x [min_size, max_size) with
    intensity c0 u^(-1-alpha) dt du, sorted by time.
    """
    if not (0 < min_size < max_size):
        raise DomainError(f"need 0 < min_size < max_size, got {min_size}, {max_size}")
    rng = get_rng(seed, "levy")
    lo, hi = min_size ** (-alpha), max_size ** (-alpha)
    mean = horizon * c0 * (lo - hi) / alpha
    n = rng.poisson(mean)
    # inverse CDF of the truncated Pareto law
    sizes = (lo - rng.uniform(size=n) * (lo - hi)) ** (-1.0 / alpha)
    times = rng.uniform(0.0, horizon, n)
    order = np.argsort(times)
    return np.stack([times[order], sizes[order]], axis=1)


def calibrate_jump_constant(jumps, horizon, size_window, alpha=1.5):
    # c0 from the count of recorded jumps with size in [a, b]
    a, b = size_window
    sizes = np.asarray(jumps).reshape(-1, 2)[:, 1]
    count = np.count_nonzero((sizes >= a) & (sizes <= b))
    return count / (horizon * (a ** (-alpha) - b ** (-alpha)) / alpha)
