from typing import NamedTuple, Tuple
import numpy as np
from .errors import DomainError
from .params import GammaParams
from .path import SampledPath
from .rng import get_rng


def correlation_factor(correlation):
    # lower Cholesky factor of [[1, rho], [rho, 1]]
    if not (-1 < correlation < 1):
        raise DomainError(f"correlation must lie in (-1, 1), got {correlation}")
    return np.array([[1.0, 0.0], [correlation, np.sqrt(1.0 - correlation**2)]])


def _get_correlation(params):
    return params.bm_correlation if isinstance(params, GammaParams) else float(params)


def correlated_increments(correlation, dt, rng, size=()):
    """
    Planar Gaussian increments with covariance dt * [[1, rho], [rho, 1]].

    `dt` is a scalar or an array of step lengths; the output has shape
    size + dt.shape + (2,).
    """
    factor = correlation_factor(correlation)
    dt = np.asarray(dt, dtype=float)
    shape = tuple(np.atleast_1d(size)) if size != () else ()
    z = rng.standard_normal(shape + dt.shape + (2,))
    return (z @ factor.T) * np.sqrt(dt)[..., None]


def sample_correlated_bm(params, horizon, n_steps, seed=None, start=(0.0, 0.0)):
    """
    Planar Brownian motion (L, R) with var L_t = var R_t = t and
    cov(L_t, R_t) = rho t.

    Args:
        params: GammaParams (rho = bm_correlation) or the correlation itself.
        horizon (float): final time.
        n_steps (int): number of uniform steps.
        seed: integer seed or numpy Generator.
        start: initial point.

    Returns:
        SampledPath: planar path on n_steps + 1 points.
    """
    if horizon <= 0 or n_steps < 1:
        raise DomainError("horizon must be positive and n_steps >= 1")
    rho = _get_correlation(params)
    rng = get_rng(seed, "brownian")
    times = np.linspace(0.0, horizon, n_steps + 1)
    dt = horizon / n_steps
    steps = correlated_increments(rho, np.full(n_steps, dt), rng)
    values = np.zeros((n_steps + 1, 2))
    values[1:] = np.cumsum(steps, axis=0)
    values += np.asarray(start, dtype=float)
    return SampledPath(times, values, {"correlation": rho, "dt": dt})


def correlated_bridge_values(start, end, times, correlation, rng, size=()):
    """
    Correlated Brownian bridge from `start` at times[0] to `end` at times[-1]
    on an arbitrary increasing grid, built as W - linear correction.
    """
    times = np.asarray(times, dtype=float)
    start = np.asarray(start, dtype=float)
    end = np.asarray(end, dtype=float)
    steps = correlated_increments(correlation, np.diff(times), rng, size)
    walk = np.zeros(steps.shape[:-2] + (len(times), 2))
    walk[..., 1:, :] = np.cumsum(steps, axis=-2)
    frac = ((times - times[0]) / (times[-1] - times[0]))[:, None]
    bridge = walk - frac * walk[..., -1:, :]
    bridge = bridge + start + frac * (end - start)
    # pin the endpoints exactly
    bridge[..., 0, :] = start
    bridge[..., -1, :] = end
    return bridge


def sample_correlated_bridge(
    correlation, start, end, duration, n_steps, seed=None, size=()
):
    rng = get_rng(seed, "brownian")
    times = np.linspace(0.0, duration, n_steps + 1)
    values = correlated_bridge_values(start, end, times, correlation, rng, size)
    if size != ():
        return times, values
    return SampledPath(times, values, {"correlation": correlation, "bridge": True})


class ConeExcursionRecord(NamedTuple):
    start_index: int
    end_index: int
    base: Tuple[float, float]
    orientation: str
    terminal_displacement: float
    gap: float
    tolerance: float
    length: float


def next_lower_or_equal(values):
    """
    For every index i, the first j > i with values[j] <= values[i]
    (len(values) if there is none). Monotonic stack, O(n).
    """
    n = len(values)
    out = np.full(n, n, dtype=np.int64)
    stack = []
    for j in range(n):
        v = values[j]
        while stack and values[stack[-1]] >= v:
            out[stack.pop()] = j
        stack.append(j)
    return out


def find_cone_excursions(path, min_terminal=0.0, max_terminal=np.inf, min_length=0.0):
    """
    Find the pi/2-cone excursions of a planar path on its grid.

    An excursion starts at a grid index i where both coordinates increase and
    closes at the first index where one coordinate returns to (or below) its
    value at i. The closing coordinate sets the orientation: "left" when X
    closes, "right" when Y closes (X on ties).

    Args:
        path (SampledPath): planar path.
        min_terminal, max_terminal (float): window for the terminal displacement
            max(X_end - X_start, Y_end - Y_start).
        min_length (float): minimal excursion duration.

    Returns:
        list of ConeExcursionRecord, sorted by start index.
    """
    if path.dim_tag != "planar":
        raise DomainError("cone excursions need a planar path")
    x, y = path.x, path.y
    n = len(x)
    next_x = next_lower_or_equal(x)
    next_y = next_lower_or_equal(y)
    close = np.minimum(next_x, next_y)
    tolerance = 2.0 * np.sqrt(np.max(np.diff(path.times)))

    index = np.arange(n)
    # closed, with at least one interior grid point
    valid = (close < n) & (close >= index + 2)
    start = index[valid]
    end = close[valid]
    dx = x[end] - x[start]
    dy = y[end] - y[start]
    terminal = np.maximum(np.maximum(dx, dy), 0.0)
    length = path.times[end] - path.times[start]
    keep = (
        (terminal >= min_terminal) & (terminal <= max_terminal) & (length >= min_length)
    )

    records = []
    for i in np.where(keep)[0]:
        s, e = int(start[i]), int(end[i])
        records.append(
            ConeExcursionRecord(
                start_index=s,
                end_index=e,
                base=(float(x[s]), float(y[s])),
                orientation="left" if next_x[s] <= next_y[s] else "right",
                terminal_displacement=float(terminal[i]),
                gap=float(min(dx[i], dy[i])),
                tolerance=float(tolerance),
                length=float(length[i]),
            )
        )
    return records
