import numpy as np
from .errors import DomainError, RetryLimitError
from .path import SampledPath
from .rng import get_rng

BOUNDARY_MODES = ("reflecting", "absorbing")
GRID_KINDS = ("uniform", "log")


class BesselExcursion:
    # An excursion of the Bessel excursion measure nu_delta, i.e. a Bessel
    # bridge of dimension 4 - delta from 0 to 0.
    def __init__(self, duration, path, dimension, metadata=None):
        self.duration = float(duration)
        self.path = path
        self.dimension = float(dimension)
        self.metadata = {} if metadata is None else dict(metadata)

    @property
    def bridge_dimension(self):
        return 4.0 - self.dimension

    @property
    def maximum(self):
        return float(self.path.values.max())

    def check(self):
        self.path.check()
        values = self.path.values
        assert values[0] == 0 and values[-1] == 0
        assert np.all(values[1:-1] > 0)
        return self

    def print_info(self):
        print(f"Excursion of nu_delta, delta = {self.dimension:.4f}")
        print(f"duration\t: {self.duration:.4g}")
        print(f"maximum\t: {self.maximum:.4g}")
        print("-----------------")


def besq_transition(y, dt, dimension, rng, killed=False):
    """
    One exact step of a squared Bessel process BESQ^dimension over time dt.

    Reflecting steps draw dt * chi2'(dimension, y/dt). Killed steps (dimension < 2)
    use the Poisson-Gamma mixture of the killed kernel: with a = 1 - dimension/2
    and lam = y/(2 dt), draw G ~ Gamma(a); the path is absorbed if G >= lam,
    otherwise K ~ Poisson(lam - G) and the new value is 2 dt Gamma(K + 1).

    Returns:
        (y_new, absorbed) arrays shaped like y.
    """
    y = np.asarray(y, dtype=float)
    if not killed:
        y_new = dt * rng.noncentral_chisquare(dimension, y / dt, size=y.shape or None)
        return np.asarray(y_new, dtype=float), np.zeros(y.shape, dtype=bool)
    assert dimension < 2
    a = 1.0 - dimension / 2.0
    lam = y / (2.0 * dt)
    g = rng.gamma(a, size=y.shape or None)
    absorbed = np.asarray(g >= lam)
    k = rng.poisson(np.where(absorbed, 0.0, lam - g))
    y_new = np.where(absorbed, 0.0, 2.0 * dt * rng.gamma(k + 1.0))
    return np.asarray(y_new, dtype=float), absorbed


def sample_besq_batch(dimension, y0, times, seed=None, boundary="reflecting", size=None):
    """
    Squared Bessel paths on an arbitrary grid.

    Returns:
        values: (size, len(times)) or (len(times),); absorbed paths stay at 0.
        absorbed_index: first grid index at 0 after absorption (-1 if never).
    """
    if boundary not in BOUNDARY_MODES:
        raise DomainError(f"unknown boundary mode: {boundary}")
    killed = dimension <= 0 or (boundary == "absorbing" and dimension < 2)
    if dimension <= 0 and boundary == "reflecting":
        raise DomainError(
            f"dimension {dimension} <= 0 is absorbed at 0; continuation is undefined"
        )
    rng = get_rng(seed, "bessel")
    times = np.asarray(times, dtype=float)
    shape = () if size is None else (int(size),)
    out = np.zeros(shape + (len(times),))
    out[..., 0] = y0
    absorbed_index = np.full(shape, -1, dtype=np.int64)
    alive = np.ones(shape, dtype=bool)
    for i, dt in enumerate(np.diff(times)):
        y_new, hit = besq_transition(out[..., i], dt, dimension, rng, killed)
        newly = hit & alive
        absorbed_index = np.where(newly, i + 1, absorbed_index)
        alive = alive & ~hit
        out[..., i + 1] = np.where(alive, y_new, 0.0)
    return out, absorbed_index


def sample_bessel(
    dimension, x0, horizon, n_steps, seed=None, boundary="reflecting", size=None
):
    """
    Exact Bessel process of a given dimension via squared-Bessel transitions.

    :param dimension: Bessel dimension delta
    :param x0: starting point (>= 0)
    :param horizon: final time
    :param n_steps: number of uniform steps
    :param boundary: "reflecting" or "absorbing" (delta in (0, 2)); delta <= 0 is always absorbed
    :param size: None for a single SampledPath, or a batch size (returns times, values)
    """
    if x0 < 0 or horizon <= 0 or n_steps < 1:
        raise DomainError("need x0 >= 0, horizon > 0 and n_steps >= 1")
    if x0 == 0 and (dimension <= 0 or (boundary == "absorbing" and dimension < 2)):
        raise DomainError("an absorbed Bessel process cannot start at 0")
    times = np.linspace(0.0, horizon, n_steps + 1)
    besq, absorbed_index = sample_besq_batch(
        dimension, x0**2, times, seed, boundary, size
    )
    values = np.sqrt(besq)
    if size is not None:
        return times, values
    metadata = {"dimension": dimension, "boundary": boundary}
    stop = int(absorbed_index)
    if stop > 0:
        metadata["absorbed_at"] = float(times[stop])
        return SampledPath(times[: stop + 1], values[: stop + 1], metadata)
    return SampledPath(times, values, metadata)


def bessel_via_exponentiation(
    drift_a,
    horizon_qv,
    n_steps,
    seed=None,
    x0=1.0,
    max_log_time=200.0,
    chunk=256,
    floor=1e-12,
):
    """
    Bessel process of dimension 2 + 2a from the exponential of a drifted
    Brownian motion X_s = log x0 + B_s + a s, time-changed by
    tau(s) = int_0^s exp(2 X_r) dr onto a uniform grid of [0, horizon_qv].

    The log-time step adapts per chunk so that a grid cell in tau spans
    several log-time steps. Paths that reach `floor` (dimension < 2) or run
    past `max_log_time` are cut at the last resolved tau.
    """
    rng = get_rng(seed, "bessel")
    dtau = horizon_qv / n_steps
    s_total, x_cur, tau_cur = 0.0, np.log(x0), 0.0
    taus, xs = [np.array([0.0])], [np.array([x_cur])]
    absorbed = False
    while tau_cur < horizon_qv and s_total < max_log_time:
        ds = min(1e-2, 0.25 * dtau * np.exp(-2.0 * x_cur))
        steps = drift_a * ds + np.sqrt(ds) * rng.standard_normal(chunk)
        x = x_cur + np.cumsum(steps)
        e2 = np.exp(2.0 * np.concatenate([[x_cur], x]))
        # trapezoid rule for the clock
        tau = tau_cur + np.cumsum(0.5 * (e2[1:] + e2[:-1]) * ds)
        taus.append(tau)
        xs.append(x)
        s_total += chunk * ds
        x_cur, tau_cur = x[-1], tau[-1]
        if x_cur < np.log(floor):
            absorbed = True
            break
    tau = np.concatenate(taus)
    x = np.concatenate(xs)
    end = min(horizon_qv, tau[-1])
    n_keep = n_steps if end >= horizon_qv else max(1, int(end / dtau))
    grid = dtau * np.arange(n_keep + 1)
    values = np.exp(np.interp(grid, tau, x))
    metadata = {"dimension": 2.0 + 2.0 * drift_a, "drift_a": drift_a}
    if absorbed:
        metadata["absorbed_at"] = float(tau[-1])
    elif end < horizon_qv:
        metadata["truncated_at"] = float(end)
    return SampledPath(grid, values, metadata)


def bridge_grid(duration, n_steps, grid="uniform", log_depth=14.0):
    """
    Time grid on [0, duration]. "log" spaces points geometrically from
    duration * exp(-log_depth) to duration / 2 and mirrors them, which
    resolves both ends of an excursion.
    """
    if grid == "uniform":
        return np.linspace(0.0, duration, n_steps + 1)
    if grid != "log":
        raise DomainError(f"unknown grid kind: {grid}, expected one of {GRID_KINDS}")
    if n_steps < 4 or n_steps % 2:
        raise DomainError("a log grid needs an even n_steps >= 4")
    half = n_steps // 2
    left = np.geomspace(duration * np.exp(-log_depth), duration / 2.0, half)
    return np.concatenate([[0.0], left, duration - left[-2::-1], [duration]])


def sample_bessel_bridges(
    dimension, duration, n_steps, size=None, seed=None, grid="uniform", log_depth=14.0
):
    """
    Bessel bridges 0 -> 0 of a given dimension (> 0) over [0, duration].

    Uses the space-time transform of a squared Bessel process Q started at 0:
    Y_u = ((T - u)/T)^2 Q(T u / (T - u)), with exact noncentral chi-square
    transitions of Q, so every grid is sampled without bias.

    Returns:
        times (n + 1,), values (size, n + 1) or (n + 1,)
    """
    if dimension <= 0:
        raise DomainError(f"bridge dimension must be positive, got {dimension}")
    rng = get_rng(seed, "bessel")
    times = bridge_grid(duration, n_steps, grid, log_depth)
    u = times[1:-1]
    s = duration * u / (duration - u)
    ds = np.diff(np.concatenate([[0.0], s]))
    shape = () if size is None else (int(size),)
    q = np.zeros(shape + (len(s),))
    prev = np.zeros(shape)
    for i, dt in enumerate(ds):
        prev = dt * rng.noncentral_chisquare(dimension, prev / dt, size=shape or None)
        q[..., i] = prev
    values = np.zeros(shape + (len(times),))
    values[..., 1:-1] = np.sqrt(((duration - u) / duration) ** 2 * q)
    return times, values


def _check_excursion_dimension(dimension):
    if dimension >= 2:
        raise DomainError(
            f"nu_delta needs delta < 2 (bridge dimension 4 - delta > 2), got {dimension}"
        )


def _reference_max(bridge_dimension):
    # unit bridges rarely exceed this; the size bias is capped above it
    return np.sqrt(bridge_dimension) + 3.0


def sample_bessel_excursion(
    dimension,
    duration=None,
    min_max=None,
    n_steps=1024,
    seed=None,
    grid="uniform",
    log_depth=14.0,
    max_tries=10**4,
):
    """
    Sample a truncated excursion of the Bessel excursion measure nu_delta.

    Args:
        dimension (float): delta < 2.
        duration (float): fixed lifetime t; the excursion is a BES^(4-delta)
            bridge 0 -> 0 on [0, t].
        min_max (float): keep excursions with maximum >= m. The lifetime and the
            unit excursion are drawn jointly: a unit bridge is size-biased by
            M1^(2-delta) (rejection), then t = (m/M1)^2 U^(-1/(1-delta/2)).
        grid (str): "uniform" or "log".

    Returns:
        BesselExcursion
    """
    _check_excursion_dimension(dimension)
    if (duration is None) == (min_max is None):
        raise DomainError("give exactly one truncation: duration or min_max")
    rng = get_rng(seed, "bessel")
    bridge_dim = 4.0 - dimension
    if duration is not None:
        if duration <= 0:
            raise DomainError("duration must be positive")
        times, values = sample_bessel_bridges(
            bridge_dim, duration, n_steps, None, rng, grid, log_depth
        )
        path = SampledPath(times, values, {"dimension": dimension, "grid": grid})
        return BesselExcursion(duration, path, dimension, {"truncation": "duration"})

    if min_max <= 0:
        raise DomainError("min_max must be positive")
    m_ref = _reference_max(bridge_dim)
    for n_try in range(1, max_tries + 1):
        times, values = sample_bessel_bridges(
            bridge_dim, 1.0, n_steps, None, rng, grid, log_depth
        )
        m1 = values.max()
        if rng.uniform() < min(1.0, (m1 / m_ref) ** (2.0 - dimension)):
            t = (min_max / m1) ** 2 * (1.0 - rng.uniform()) ** (-1.0 / (1.0 - dimension / 2.0))
            path = SampledPath(
                times * t, values * np.sqrt(t), {"dimension": dimension, "grid": grid}
            )
            return BesselExcursion(
                t, path, dimension, {"truncation": "min_max", "min_max": min_max, "tries": n_try}
            )
    raise RetryLimitError("Bessel excursion size-bias rejection", max_tries, 0)


def sample_excursion_lifetimes(
    dimension, min_max, size, seed=None, n_steps=256, batch=4096, max_tries=10**3
):
    """
    Lifetimes of nu_delta excursions with maximum >= min_max (vectorized).
    The density is proportional to t^(delta/2 - 2) for t >> min_max^2.
    """
    _check_excursion_dimension(dimension)
    rng = get_rng(seed, "bessel")
    bridge_dim = 4.0 - dimension
    m_ref = _reference_max(bridge_dim)
    out = np.zeros(0)
    for _ in range(max_tries):
        _, values = sample_bessel_bridges(bridge_dim, 1.0, n_steps, batch, rng)
        m1 = values.max(axis=1)
        accept = rng.uniform(size=batch) < np.minimum(1.0, (m1 / m_ref) ** (2.0 - dimension))
        m1 = m1[accept]
        t = (min_max / m1) ** 2 * (1.0 - rng.uniform(size=len(m1))) ** (
            -1.0 / (1.0 - dimension / 2.0)
        )
        out = np.concatenate([out, t])
        if len(out) >= size:
            return out[:size]
    raise RetryLimitError("excursion lifetime batches", max_tries * batch, len(out))
