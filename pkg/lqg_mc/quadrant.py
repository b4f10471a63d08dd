from typing import NamedTuple, Tuple
import numpy as np
from .brownian import correlation_factor, correlated_bridge_values, correlated_increments
from .errors import DomainError, RetryLimitError
from .path import SampledPath
from .rng import get_rng, run_tasks
from .stats import proportion_stderr

# offset-start cone loops keep the start offset below this share of epsilon
CONE_OFFSET_SHARE = 0.1


class QuadrantBridgeSpec(NamedTuple):
    correlation_alpha: float
    endpoint: Tuple[float, float] = (0.0, 0.0)
    relaxation_delta: float = 0.1
    start_offset: float = 0.0
    n_steps: int = 2**12

    @property
    def route(self):
        return "relaxed_floor" if self.relaxation_delta > 0 else "offset_start"

    @property
    def floor(self):
        # lowest allowed coordinate value
        return -self.relaxation_delta if self.relaxation_delta > 0 else 0.0

    @property
    def start(self):
        s = self.start_offset
        return np.array([s, s])

    @property
    def end(self):
        # offset route: zero endpoint coordinates are pushed into the quadrant
        end = np.asarray(self.endpoint, dtype=float)
        if self.start_offset > 0:
            end = np.where(end == 0, self.start_offset, end)
        return end

    def check(self):
        if not (-1 < self.correlation_alpha < 1):
            raise DomainError(f"correlation must lie in (-1, 1), got {self.correlation_alpha}")
        x1, y1 = self.endpoint
        if min(x1, y1) != 0 or max(x1, y1) < 0:
            raise DomainError(f"endpoint must lie on the quadrant boundary, got {self.endpoint}")
        if (self.relaxation_delta > 0) == (self.start_offset > 0):
            raise DomainError("exactly one of relaxation_delta, start_offset must be positive")
        if min(self.relaxation_delta, self.start_offset) < 0:
            raise DomainError("relaxation parameters must be nonnegative")
        n = self.n_steps
        if n < 2 or n & (n - 1):
            raise DomainError(f"n_steps must be a power of two, got {n}")
        return self


def make_quadrant_spec(alpha, endpoint=(0.0, 0.0), delta=0.1, start_offset=0.0, n_steps=2**12):
    return QuadrantBridgeSpec(float(alpha), tuple(endpoint), delta, start_offset, n_steps).check()


def dyadic_bridge_batch(start, end, n_steps, correlation, floor, size, rng):
    """
    Correlated Brownian bridges on [0, 1] by dyadic midpoint refinement,
    dropping a proposal as soon as a refined point falls below `floor`.

    Returns:
        (n_accepted, n_steps + 1, 2) array of surviving bridges.
    """
    factor = correlation_factor(correlation)
    levels = int(np.log2(n_steps))
    vals = np.zeros((size, n_steps + 1, 2))
    vals[:, 0] = start
    vals[:, -1] = end
    alive = np.arange(size)
    for level in range(1, levels + 1):
        h = n_steps >> level
        idx = np.arange(h, n_steps, 2 * h)
        # midpoint of an interval of length 2h/n: variance (2h/n)/4
        scale = np.sqrt(0.5 * h / n_steps)
        z = rng.standard_normal((len(alive), len(idx), 2)) @ factor.T
        sub = vals[alive]
        mid = 0.5 * (sub[:, idx - h] + sub[:, idx + h]) + scale * z
        vals[alive[:, None], idx[None, :]] = mid
        alive = alive[(mid >= floor).all(axis=(1, 2))]
        if len(alive) == 0:
            break
    return vals[alive]


def sample_quadrant_loop(spec, seed=None, max_tries=10**6, batch=256):
    """
    Correlated Brownian bridge from the start to the endpoint on [0, 1],
    conditioned by rejection to stay above the floor of its route: -delta
    (relaxed floor) or 0 when started at (s, s) (offset start).

    Args:
        spec (QuadrantBridgeSpec): endpoint (0, 0) gives the Brownian loop.
        seed: integer seed or numpy Generator.
        max_tries (int): proposal budget.
        batch (int): proposals per batch.

    Returns:
        SampledPath: planar path, metadata holds the acceptance statistics.
    """
    spec.check()
    rng = get_rng(seed, "quadrant")
    n_tries = 0
    while n_tries < max_tries:
        size = min(batch, max_tries - n_tries)
        ok = dyadic_bridge_batch(
            spec.start, spec.end, spec.n_steps, spec.correlation_alpha, spec.floor, size, rng
        )
        if len(ok):
            # first survivor in proposal order
            n_tries += size
            times = np.linspace(0.0, 1.0, spec.n_steps + 1)
            meta = {
                "correlation": spec.correlation_alpha,
                "route": spec.route,
                "floor": spec.floor,
                "n_tries": n_tries,
                "acceptance_rate": len(ok) / size,
            }
            return SampledPath(times, ok[0], meta)
        n_tries += size
    raise RetryLimitError("quadrant bridge rejection", n_tries, 0)


def acceptance_rate(spec, n_proposals, seed=None, batch=4096):
    # empirical probability that a proposal survives the floor
    spec.check()
    rng = get_rng(seed, "quadrant")
    n_ok = 0
    for start in range(0, n_proposals, batch):
        size = min(batch, n_proposals - start)
        n_ok += len(
            dyadic_bridge_batch(
                spec.start, spec.end, spec.n_steps, spec.correlation_alpha, spec.floor, size, rng
            )
        )
    return n_ok / n_proposals


def _loop_task(rng, index, spec, max_tries):
    return sample_quadrant_loop(spec, rng, max_tries)


def sample_quadrant_loops(spec, n_samples, seed=0, threads=1, max_tries=10**6):
    return run_tasks(
        _loop_task, n_samples, seed, "quadrant", threads, spec=spec, max_tries=max_tries
    )


def resample_middle_segment(path, s, t, spec, seed=None, max_tries=10**5, batch=64):
    """
    Replace the path on [s, t] by a fresh correlated bridge between Z_s and
    Z_t conditioned to stay above the floor of the route; endpoints are kept.
    """
    if not (0 < s < t < 1):
        raise DomainError(f"need 0 < s < t < 1, got {s}, {t}")
    rng = get_rng(seed, "quadrant")
    i_s = int(np.searchsorted(path.times, s))
    i_t = int(np.searchsorted(path.times, t))
    out = path.copy()
    if i_t - i_s < 2:
        return out
    times = path.times[i_s : i_t + 1]
    n_tries = 0
    while n_tries < max_tries:
        cand = correlated_bridge_values(
            path.values[i_s], path.values[i_t], times, spec.correlation_alpha, rng, batch
        )
        ok = np.flatnonzero((cand[:, 1:-1] >= spec.floor).all(axis=(1, 2)))
        if len(ok):
            out.values[i_s : i_t + 1] = cand[ok[0]]
            return out
        n_tries += batch
    raise RetryLimitError("middle-segment resampling", n_tries, 0)


def cone_excursion_as_loop(epsilon, spec, seed=None, orientation=None, max_tries=10**6):
    """
    Cone excursion of length 1 with terminal displacement epsilon, relative
    to its base: a conditioned bridge to (0, epsilon) ("left": X closes) or
    (epsilon, 0) ("right"). Orientation is a fair coin when not given.

    On the offset-start route the zero coordinate of the endpoint moves to the
    offset s, so s must stay below CONE_OFFSET_SHARE * epsilon.
    """
    if epsilon <= 0:
        raise DomainError(f"epsilon must be positive, got {epsilon}")
    if spec.start_offset > CONE_OFFSET_SHARE * epsilon:
        raise DomainError(
            f"start offset {spec.start_offset} too large for epsilon {epsilon}, "
            f"need at most {CONE_OFFSET_SHARE} epsilon"
        )
    rng = get_rng(seed, "quadrant")
    if orientation is None:
        orientation = "left" if rng.uniform() < 0.5 else "right"
    endpoint = (0.0, epsilon) if orientation == "left" else (epsilon, 0.0)
    spec = spec._replace(endpoint=endpoint)
    loop = sample_quadrant_loop(spec, rng, max_tries)
    loop.metadata.update(
        {
            "orientation": orientation,
            "terminal_displacement": epsilon,
            "start_offset": spec.start_offset,
            "endpoint": tuple(float(v) for v in spec.end),
        }
    )
    return loop


class EkEstimate(NamedTuple):
    k: int
    p_hat: float
    stderr: float
    n_trials: int


def _ek_batch(alpha, k, size, dt, horizon_factor, rng):
    # E_k on a batch of two-sided paths: some start in [-k-1, -k] opens a cone
    # excursion of length >= k+1 closing with terminal displacement <= 1
    n_window = int(round(1.0 / dt))
    n_total = n_window + int(round(horizon_factor * (k + 1) / dt))
    steps = correlated_increments(alpha, np.full(n_total, dt), rng, size)
    z = np.zeros((size, n_total + 1, 2))
    z[:, 1:] = np.cumsum(steps, axis=1)
    min_len = int(np.ceil((k + 1) / dt))
    hit = np.zeros(size, dtype=bool)
    for i in range(n_window + 1):
        base = z[:, i : i + 1]
        after = z[:, i + 1 :] - base
        closed = (after <= 0).any(axis=2)
        first = np.where(closed.any(axis=1), closed.argmax(axis=1), n_total)
        end = i + 1 + first
        done = end <= n_total
        long_enough = (first + 1) >= min_len
        endc = np.minimum(end, n_total)
        disp = (z[np.arange(size), endc] - z[:, i]).max(axis=1)
        hit |= done & long_enough & (disp <= 1.0)
    return hit


def estimate_ek_probability(
    alpha, k_values, n_trials, seed=0, dt=1.0 / 16, horizon_factor=4.0, batch=1000
):
    """
    Monte Carlo estimate of P[E_k] on a two-sided correlated Brownian motion.

    Paths run on [-k-1, -k + horizon_factor (k+1)]; excursions still open at
    the horizon do not count.

    Returns:
        list of EkEstimate(k, p_hat, stderr, n_trials)
    """
    if not (-1 < alpha < 1):
        raise DomainError(f"correlation must lie in (-1, 1), got {alpha}")
    out = []
    for j, k in enumerate(k_values):
        if k < 1:
            raise DomainError(f"k must be >= 1, got {k}")
        rng = get_rng(seed, "quadrant", j + 1)
        n_hit = 0
        for start in range(0, n_trials, batch):
            size = min(batch, n_trials - start)
            n_hit += int(_ek_batch(alpha, k, size, dt, horizon_factor, rng).sum())
        p = n_hit / n_trials
        out.append(EkEstimate(int(k), p, proportion_stderr(p, n_trials), n_trials))
    return out


class WedgeMap(NamedTuple):
    theta: float
    zeta: float
    lambda_matrix: np.ndarray

    @classmethod
    def from_alpha(cls, alpha):
        if not (-1 < alpha < 1):
            raise DomainError(f"correlation must lie in (-1, 1), got {alpha}")
        theta = np.arccos(-alpha)
        r = np.sqrt(1.0 - alpha**2)
        lam = np.array([[r, 0.0], [-alpha, 1.0]]) / r
        return cls(float(theta), float(np.pi / theta), lam)


def wedge_transform(path, wedge_map):
    # Lambda maps the correlated motion to a standard planar one
    values = path.values @ wedge_map.lambda_matrix.T
    meta = dict(path.metadata, theta=wedge_map.theta, zeta=wedge_map.zeta)
    return SampledPath(path.times, values, meta)
