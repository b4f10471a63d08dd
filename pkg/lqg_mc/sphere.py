from typing import NamedTuple, Optional
import numpy as np
from .bessel import sample_bessel_excursion
from .errors import DomainError, RetryLimitError, UnsupportedParameterError
from .field import (
    CylinderField,
    assemble_disk_field,
    assemble_sphere_field,
    compute_area_measure,
    compute_boundary_measure,
    default_dx,
    sample_h2_on_grid,
)
from .params import is_sqrt_8_3, shift_for_area, shift_for_boundary
from .rng import child_seed, get_rng
from .stable import make_stable_spec, sample_stable_excursion, stable_jump_constant
from .stats import proportion_stderr

OBSERVABLE_KINDS = ("iqr_width", "h1_median")
# excursion truncation as a share of the window scale (sqrt of area, boundary length)
MIN_MAX_FACTOR = 0.05


def default_epsilon(field):
    return 4.0 * max(field.dx, field.dtheta)


class SphereSample:
    # A field on the cylinder whose ends are the two marked points, with its
    # measured total area; `shift_c` maps it to the unit-area representative.
    def __init__(self, field, area, measure=None, provenance="bessel", metadata=None):
        self.field = field
        self.area = float(area)
        self.measure = measure
        self.provenance = provenance
        self.metadata = {} if metadata is None else dict(metadata)
        self.gamma = field.metadata["gamma"]

    @property
    def shift_c(self):
        return -np.log(self.area) / self.gamma

    def unit_area_field(self):
        return self.field.shifted(self.shift_c)

    def unit_area_cells(self):
        # exact e^(gamma C) rescaling of the measured cells
        return self.measure.cell_mass * np.exp(self.gamma * self.shift_c)

    def save_h5(self, output_file):
        self.field.metadata.update(
            {"area": self.area, "provenance": self.provenance, "sample": self.metadata}
        )
        self.field.save_h5(output_file)

    def print_info(self):
        print(f"Sphere ({self.provenance}), area: {self.area:.4g}, shift C: {self.shift_c:.4f}")
        print(f"x window: ({self.field.x[0]:.3f}, {self.field.x[-1]:.3f})")
        for key, val in self.metadata.items():
            print(f"{key}\t: {val}")
        print("-----------------")


def _measure(field, params, epsilon_reg):
    eps = default_epsilon(field) if epsilon_reg is None else epsilon_reg
    return compute_area_measure(field, eps, params)


def window_min_max(params, lower, power=0.5, height_floor=None, factor=MIN_MAX_FACTOR):
    """
    Excursion truncation for a window whose lower edge is `lower`: area scales
    like max^2 (power 1/2) and boundary length like max (power 1), so the
    truncation follows the window. It never drops below the height at which
    h1 = (2/gamma) log Z reaches the height floor; lower excursions do not
    assemble into a field.
    """
    floor = -10.0 / params.gamma if height_floor is None else height_floor
    return float(max(factor * lower**power, np.exp(params.gamma * floor / 2.0)))


def sample_sphere_bessel(
    params,
    area_window=(1.0, 100.0),
    min_max=None,
    n_steps=2048,
    grid="log",
    log_depth=24.0,
    n_theta=64,
    n_modes=24,
    epsilon_reg=None,
    height_floor=None,
    seed=None,
    max_tries=10**4,
    verbose=False,
):
    """
    Sphere from the Bessel excursion measure with delta = 4 - 8/gamma^2:
    sample an excursion with maximum >= min_max, assemble the field, measure
    its area, accept if the area falls in area_window. The default min_max
    follows the window (`window_min_max`).

    Returns:
        SphereSample
    """
    a_lo, a_hi = area_window
    if not (0 < a_lo < a_hi):
        raise DomainError(f"need 0 < a_lo < a_hi, got {area_window}")
    if min_max is None:
        min_max = window_min_max(params, a_lo, 0.5, height_floor)
    rng = get_rng(seed, "sphere")
    dimension = 4.0 - 8.0 / params.gamma**2
    n_short = 0
    for n_try in range(1, max_tries + 1):
        exc = sample_bessel_excursion(
            dimension, min_max=min_max, n_steps=n_steps, seed=rng, grid=grid, log_depth=log_depth
        )
        try:
            field = assemble_sphere_field(params, exc, None, rng, n_theta, n_modes, height_floor)
        except DomainError:
            n_short += 1
            continue
        measure = _measure(field, params, epsilon_reg)
        area = measure.total
        if verbose:
            print(f"Try {n_try}: area {area:.4g}")
        if a_lo <= area <= a_hi:
            meta = {
                "n_tries": n_try,
                "n_short": n_short,
                "area_window": list(area_window),
                "min_max": min_max,
                "excursion_max": exc.maximum,
            }
            return SphereSample(field, area, measure, "bessel", meta)
    raise RetryLimitError("Bessel sphere area window", max_tries, 0)


class TruncationLeakage(NamedTuple):
    min_max: float
    n_draws: int
    n_in_window: int
    n_below: int

    @property
    def fraction(self):
        # share of the in-window draws whose excursion stays below min_max
        return self.n_below / max(self.n_in_window, 1)


def truncation_leakage(
    params,
    area_window=(1.0, 100.0),
    min_max=None,
    n_draws=1000,
    n_steps=2048,
    n_theta=64,
    n_modes=24,
    epsilon_reg=None,
    height_floor=None,
    seed=None,
):
    """
    Doubling check of the sphere truncation: draw excursions with maximum
    >= min_max / 2 and count the window hits whose maximum is below min_max.
    A small fraction means the truncation at min_max drops a negligible part
    of the window mass.
    """
    if min_max is None:
        min_max = window_min_max(params, area_window[0], 0.5, height_floor)
    rng = get_rng(seed, "sphere", 1)
    dimension = 4.0 - 8.0 / params.gamma**2
    n_in, n_below = 0, 0
    for _ in range(n_draws):
        exc = sample_bessel_excursion(
            dimension, min_max=min_max / 2.0, n_steps=n_steps, seed=rng, grid="log"
        )
        try:
            field = assemble_sphere_field(params, exc, None, rng, n_theta, n_modes, height_floor)
        except DomainError:
            continue
        area = _measure(field, params, epsilon_reg).total
        if area_window[0] <= area <= area_window[1]:
            n_in += 1
            n_below += exc.maximum < min_max
    return TruncationLeakage(float(min_max), n_draws, n_in, int(n_below))


def sphere_observable(sample, kind="iqr_width"):
    """
    Observables invariant under horizontal translation, on the unit-area
    representative.

    "iqr_width": x-distance between the 25% and 75% area quantiles.
    "h1_median": line average of the unit-area field at the area median.
    """
    if kind == "iqr_width":
        return sample.measure.area_quantile(0.75) - sample.measure.area_quantile(0.25)
    if kind == "h1_median":
        x_med = sample.measure.area_quantile(0.5)
        return float(np.interp(x_med, sample.field.x, sample.field.h1) + sample.shift_c)
    raise DomainError(f"unknown observable: {kind}, expected one of {OBSERVABLE_KINDS}")


def _drifted_bm(start, drift, n, dx, rng):
    steps = drift * dx + np.sqrt(dx) * rng.standard_normal(n)
    return start + np.concatenate([[0.0], np.cumsum(steps)])


def _first_below(start, drift, level, dx, rng, chunk=1024, max_steps=10**7):
    # drifted BM on the dx grid until it is <= level
    values = np.array([start])
    while len(values) < max_steps:
        more = _drifted_bm(values[-1], drift, chunk, dx, rng)[1:]
        hit = np.flatnonzero(more <= level)
        if len(hit):
            return np.concatenate([values, more[: hit[0] + 1]])
        values = np.concatenate([values, more])
    raise RetryLimitError("drifted Brownian motion never reached the level", max_steps, 0)


def _first_above(start, drift, level, dx, rng, chunk=1024, max_steps=10**7):
    return -_first_below(-start, -drift, -level, dx, rng, chunk, max_steps)


def sample_cone_profile(params, alpha_weight, window, dx, rng, burn_factor=40.0):
    """
    Line average of an alpha-quantum cone on the cylinder, x = 0 where it
    first reaches 0 coming from -infinity.

    x >= 0: Brownian motion with drift -(Q - alpha) from 0.
    x <= 0: h1(-v) is a Brownian motion with drift +(Q - alpha) observed after
    its last visit to 0, i.e. conditioned to stay positive.
    """
    mu = params.q_charge - alpha_weight
    if mu <= 0:
        raise DomainError(f"need alpha_weight < Q, got {alpha_weight}")
    x_lo, x_hi = window
    k_lo = int(np.ceil(-x_lo / dx))
    k_hi = int(np.floor(x_hi / dx))
    right = _drifted_bm(0.0, -mu, k_hi, dx, rng)
    # the last visit happens by time ~ 1/mu^2; run far past it
    n_long = k_lo + int(np.ceil(burn_factor * (1.0 / mu**2 + 1.0 / mu) / dx))
    walk = _drifted_bm(0.0, mu, n_long, dx, rng)
    last = int(np.flatnonzero(walk <= 0)[-1])
    left = walk[last : last + k_lo + 1] - walk[last]
    x = dx * np.arange(-k_lo, k_hi + 1)
    h1 = np.concatenate([left[::-1], right[1:]])
    return x, h1


def sample_quantum_cone_field(
    params, alpha_weight, window=(-10.0, 20.0), n_theta=64, n_modes=24, seed=None
):
    rng = get_rng(seed, "sphere")
    dx = default_dx(n_theta)
    x, h1 = sample_cone_profile(params, alpha_weight, window, dx, rng)
    h2 = sample_h2_on_grid(x, n_theta, n_modes, rng)
    meta = {"gamma": params.gamma, "alpha_weight": alpha_weight, "shift_c": 0.0}
    return CylinderField(x, h2.theta, h1, h2.h2_modes, h2.h2, "cylinder", meta)


def h2_circle_variance(epsilon_reg, n_modes, n_circle=64):
    """
    Variance of the circle average of the cylinder h2 of radius epsilon_reg:
    Cov(h2(p), h2(p')) = sum_n (1/n) exp(-n |dx|) cos(n dtheta).
    """
    phase = np.exp(2j * np.pi * np.arange(n_circle) / n_circle) * epsilon_reg
    d = phase[:, None] - phase[None, :]
    n = np.arange(1, n_modes + 1)[:, None, None]
    cov = (np.exp(-n * np.abs(d.real)) * np.cos(n * d.imag) / n).sum(axis=0)
    return float(cov.mean())


def _bottleneck_profile(r, level, mu, dx, rng):
    # 1. cone profile from x = 0 to tau_r
    before = _first_below(0.0, -mu, r, dx, rng)
    tau_r = dx * (len(before) - 1)
    # 2. conditioned climb to the level, then descent back to r
    climb = _first_above(before[-1], mu, level, dx, rng)
    descent = _first_below(climb[-1], -mu, r, dx, rng)
    return np.concatenate([climb, descent[1:]]), tau_r


def sample_sphere_bottleneck(
    params,
    r=None,
    epsilon=0.05,
    beta=None,
    n_theta=64,
    n_modes=24,
    epsilon_reg=None,
    prefilter=4.0,
    seed=None,
    max_tries=10**5,
    verbose=False,
):
    """
    Sphere from a gamma-quantum cone: locate tau_r, the first x where the line
    average is <= r, and keep the half-cylinder to its right when its area lies
    in [1, 1 + epsilon].

    The profile after tau_r is conditioned to climb to gamma^-1 log(1/beta)
    (beta defaults to exp(-gamma r / 2), the level r/2): drift +(Q - gamma)
    until that level, then drift -(Q - gamma) until it returns to r.

    Args:
        prefilter (float): reject without building h2 when the h2-averaged area
            of the profile is off [1, 1 + epsilon] by more than this factor
            (None disables).

    Returns:
        SphereSample re-windowed so that tau_r = 0.
    """
    gamma = params.gamma
    r = -8.0 / gamma if r is None else r
    if r >= 0 or epsilon <= 0:
        raise DomainError("need r < 0 and epsilon > 0")
    beta = np.exp(-gamma * r / 2.0) if beta is None else beta
    level = np.log(1.0 / beta) / gamma
    if level <= r:
        raise DomainError("the conditioning level must lie above r")
    mu = params.q_charge - gamma
    rng = get_rng(seed, "sphere")
    dx = default_dx(n_theta)
    eps = 4.0 * dx if epsilon_reg is None else epsilon_reg
    # E[exp(gamma h2_eps)] for the circle-averaged lateral part
    h2_var = h2_circle_variance(eps, n_modes)
    proxy_factor = eps ** (gamma**2 / 2.0) * np.exp(gamma**2 * h2_var / 2.0)
    n_prefiltered = 0
    for n_try in range(1, max_tries + 1):
        h1, tau_r = _bottleneck_profile(r, level, mu, dx, rng)
        x = dx * np.arange(len(h1))
        if prefilter is not None:
            proxy = proxy_factor * 2.0 * np.pi * dx * np.exp(gamma * h1).sum()
            if not (1.0 / prefilter <= proxy <= (1.0 + epsilon) * prefilter):
                n_prefiltered += 1
                continue
        # 3. full field and its area
        h2 = sample_h2_on_grid(x, n_theta, n_modes, rng)
        meta = {"gamma": gamma, "alpha_weight": gamma, "shift_c": 0.0}
        field = CylinderField(x, h2.theta, h1, h2.h2_modes, h2.h2, "cylinder", meta)
        measure = compute_area_measure(field, eps, params)
        area = measure.total
        if verbose:
            print(f"Try {n_try}: tau_r {tau_r:.3f}, area {area:.4g}")
        if 1.0 <= area <= 1.0 + epsilon:
            info = {
                "r": r,
                "epsilon": epsilon,
                "beta": beta,
                "tau_r": tau_r,
                "n_tries": n_try,
                "n_prefiltered": n_prefiltered,
            }
            return SphereSample(field, area, measure, "bottleneck", info)
    raise RetryLimitError("bottleneck area window", max_tries, 0)


def bottleneck_acceptance_rates(
    params, epsilons, n_proposals, r=None, n_theta=64, n_modes=24, epsilon_reg=None, seed=None
):
    """
    Acceptance rate of the bottleneck window [1, 1 + epsilon] for several
    epsilon, on one shared set of proposals (no prefilter).

    Returns:
        (k, 3) array of (epsilon, rate, standard error), sorted by epsilon.
    """
    gamma = params.gamma
    r = -8.0 / gamma if r is None else r
    if r >= 0 or n_proposals < 1:
        raise DomainError("need r < 0 and n_proposals >= 1")
    epsilons = np.sort(np.asarray(epsilons, dtype=float))
    if len(epsilons) == 0 or epsilons[0] <= 0:
        raise DomainError("epsilons must be positive")
    level = r / 2.0
    mu = params.q_charge - gamma
    rng = get_rng(seed, "sphere", 2)
    dx = default_dx(n_theta)
    eps = 4.0 * dx if epsilon_reg is None else epsilon_reg
    meta = {"gamma": gamma, "alpha_weight": gamma, "shift_c": 0.0}
    areas = np.empty(n_proposals)
    for i in range(n_proposals):
        h1, _ = _bottleneck_profile(r, level, mu, dx, rng)
        x = dx * np.arange(len(h1))
        h2 = sample_h2_on_grid(x, n_theta, n_modes, rng)
        field = CylinderField(x, h2.theta, h1, h2.h2_modes, h2.h2, "cylinder", meta)
        areas[i] = compute_area_measure(field, eps, params).total
    accepted = (areas[None, :] >= 1.0) & (areas[None, :] <= 1.0 + epsilons[:, None])
    rates = accepted.mean(axis=1)
    stderr = [proportion_stderr(p, n_proposals) for p in rates]
    return np.stack([epsilons, rates, stderr], axis=1)


def bottleneck_hitting_times(params, r_values, seed=None, n_theta=64):
    # tau_r along a single cone profile for several levels
    rng = get_rng(seed, "sphere")
    dx = default_dx(n_theta)
    path = _first_below(0.0, -(params.q_charge - params.gamma), min(r_values), dx, rng)
    return [dx * int(np.flatnonzero(path <= r)[0]) for r in r_values]


class DiskSample:
    def __init__(
        self, field, boundary_length, area, shift_c, marked_point, metadata=None
    ):
        # field already shifted by shift_c; lengths and areas are of the shifted field
        self.field = field
        self.boundary_length = float(boundary_length)
        self.area = float(area)
        self.shift_c = float(shift_c)
        # (x, theta) on one of the two edges
        self.marked_point = marked_point
        self.metadata = {} if metadata is None else dict(metadata)

    def print_info(self):
        print(f"Disk boundary: {self.boundary_length:.4g}, area: {self.area:.4g}")
        print(f"shift C: {self.shift_c:.4f}, marked point: {self.marked_point}")
        print("-----------------")


def _disk_constraint(constraint):
    if constraint in ("unit_boundary", "unit_area"):
        return constraint, 1.0
    kind, value = constraint
    if kind != "boundary_length" or value <= 0:
        raise DomainError(f"unknown disk constraint: {constraint}")
    return kind, float(value)


def sample_quantum_disk(
    params,
    constraint="unit_boundary",
    boundary_window=(2.0, 4.0),
    area_window=(1.0, 100.0),
    unweight_scale=0.25,
    min_max=None,
    n_steps=1024,
    log_depth=24.0,
    n_theta=32,
    n_modes=12,
    epsilon_reg=None,
    seed=None,
    max_tries=10**4,
):
    """
    Quantum disk on the strip: h1 from the Bessel excursion measure with
    delta = 3 - 4/gamma^2 at quadratic variation 2 du, h2 with cosine modes.

    Boundary constraints accept the raw boundary length nu in boundary_window
    and shift by C = (2/gamma) ln(b / nu). The unit-area constraint accepts the
    raw area A in area_window with probability min(1, unweight_scale sqrt(A) / nu),
    then shifts by C = -ln(A) / gamma.
    The default min_max follows the window the constraint is checked on.

    Returns:
        DiskSample
    """
    kind, target = _disk_constraint(constraint)
    gamma = params.gamma
    if min_max is None and kind == "unit_area":
        min_max = window_min_max(params, area_window[0], 0.5)
    elif min_max is None:
        min_max = window_min_max(params, boundary_window[0], 1.0)
    rng = get_rng(seed, "disk")
    dimension = 3.0 - 4.0 / gamma**2
    n_capped = 0
    for n_try in range(1, max_tries + 1):
        exc = sample_bessel_excursion(
            dimension, min_max=min_max, n_steps=n_steps, seed=rng, grid="log", log_depth=log_depth
        )
        try:
            field = assemble_disk_field(params, exc, None, rng, n_theta, n_modes)
        except DomainError:
            continue
        eps = default_epsilon(field) if epsilon_reg is None else epsilon_reg
        boundary = compute_boundary_measure(field, eps, params)
        nu = boundary.total
        if kind == "unit_area":
            area = compute_area_measure(field, eps, params).total
            if not (area_window[0] <= area <= area_window[1]):
                continue
            ratio = unweight_scale * np.sqrt(area) / nu
            n_capped += ratio > 1
            if rng.uniform() >= min(1.0, ratio):
                continue
            shift_c = shift_for_area(area, params)
        else:
            if not (boundary_window[0] <= nu <= boundary_window[1]):
                continue
            area = compute_area_measure(field, eps, params).total
            shift_c = shift_for_boundary(nu, params, target)
        # marked boundary point from the boundary measure
        weights = boundary.edge_mass.ravel() / nu
        pick = rng.choice(len(weights), p=weights)
        edge, ix = divmod(pick, field.n_x)
        marked = (float(field.x[ix]), float(edge * np.pi))
        meta = {
            "constraint": kind,
            "raw_boundary": nu,
            "raw_area": area,
            "n_tries": n_try,
            "n_capped": int(n_capped),
        }
        return DiskSample(
            field.shifted(shift_c),
            nu * np.exp(gamma * shift_c / 2.0),
            area * np.exp(gamma * shift_c),
            shift_c,
            marked,
            meta,
        )
    raise RetryLimitError(f"quantum disk constraint {kind}", max_tries, 0)


class DiskAreaLaw:
    # Empirical law of the area of unit-boundary disks; b^2 A_1 for boundary b.
    def __init__(self, areas=None, input_file=None):
        if input_file is not None:
            self.load_npz(input_file)
            return
        self.areas = np.asarray(areas, dtype=float)

    @property
    def mean(self):
        return float(self.areas.mean())

    def sample(self, boundary_length, rng):
        boundary_length = np.asarray(boundary_length, dtype=float)
        return boundary_length**2 * rng.choice(self.areas, boundary_length.shape)

    def save_npz(self, output_file):
        np.savez_compressed(output_file, areas=self.areas)

    def load_npz(self, input_file):
        self.areas = np.load(input_file)["areas"]

    def print_info(self):
        print(f"Disk area law: {len(self.areas)} samples, mean {self.mean:.4g}")


def calibrate_disk_area_law(params, n_samples, seed=None, **disk_kwargs):
    rng = get_rng(seed, "disk")
    areas = [
        sample_quantum_disk(params, "unit_boundary", seed=rng, **disk_kwargs).area
        for _ in range(n_samples)
    ]
    return DiskAreaLaw(areas)


class JumpDecoration(NamedTuple):
    boundary_length: float
    orientation: str
    marked_point: float
    disk: Optional[DiskSample]


class LevySphereSample:
    def __init__(self, excursion, decorations, areas, small_jump_area, metadata=None):
        self.excursion = excursion
        self.decorations = decorations
        # area per jump, from the materialized disk or the area law
        self.areas = np.asarray(areas, dtype=float)
        self.small_jump_area = float(small_jump_area)
        self.metadata = {} if metadata is None else dict(metadata)

    @property
    def total_area(self):
        return float(self.areas.sum() + self.small_jump_area)

    @property
    def n_materialized(self):
        return sum(d.disk is not None for d in self.decorations)

    def to_table(self):
        # columns: time, boundary_length, clockwise, marked_point, materialized, area
        jumps = self.excursion.jumps
        return np.stack(
            [
                jumps[:, 0],
                [d.boundary_length for d in self.decorations],
                [d.orientation == "cw" for d in self.decorations],
                [d.marked_point for d in self.decorations],
                [d.disk is not None for d in self.decorations],
                self.areas,
            ],
            axis=1,
        ).astype(float)

    def print_info(self):
        print(f"Levy sphere, duration: {self.excursion.duration:.4g}")
        print(f"jumps: {len(self.decorations)}, materialized: {self.n_materialized}")
        print(f"total area: {self.total_area:.4g} (small jumps {self.small_jump_area:.4g})")
        print("-----------------")


def _materialized_indices(sizes, materialize, threshold):
    if materialize == "none":
        return np.zeros(0, dtype=int)
    kind, value = materialize
    if kind == "top_k":
        return np.argsort(-sizes, kind="stable")[: int(value)]
    if kind == "all_above":
        if value < threshold:
            raise DomainError(
                f"cannot materialize disks below the jump resolution {threshold:.4g}"
            )
        return np.flatnonzero(sizes >= value)
    raise DomainError(f"unknown materialize option: {materialize}")


def assemble_levy_sphere(
    params,
    excursion_truncation=("min_height", 1.0),
    materialize="none",
    area_law=None,
    c0=None,
    n_steps=1024,
    seed=None,
    disk_kwargs=None,
    **excursion_kwargs,
):
    """
    Sphere assembled from a 3/2-stable excursion: every jump bounds a quantum
    disk with boundary length equal to the jump size, an orientation from a
    fair coin and a uniform marked boundary point.

    Args:
        params: GammaParams with gamma = sqrt(8/3).
        excursion_truncation: truncation of sample_stable_excursion.
        materialize: "none", ("top_k", k) or ("all_above", s); selected jumps
            get a DiskSample, the others an area drawn from area_law.
        area_law (DiskAreaLaw): area of unit-boundary disks.
        c0: jump density constant for the unresolved small jumps (defaults
            to the unit-scale stable constant).

    Returns:
        LevySphereSample
    """
    if not is_sqrt_8_3(params):
        raise UnsupportedParameterError(
            f"Levy spheres need gamma = sqrt(8/3), got {params.gamma}"
        )
    rng = get_rng(seed, "levy")
    spec = make_stable_spec(1.5, "positive")
    exc = sample_stable_excursion(spec, excursion_truncation, n_steps, rng, **excursion_kwargs)
    sizes = exc.jumps[:, 1]
    threshold = exc.metadata["jump_threshold"]
    chosen = _materialized_indices(sizes, materialize, threshold)
    if area_law is None and len(chosen) < len(sizes):
        raise DomainError("an area law is needed for jumps without a materialized disk")

    orient = np.where(rng.uniform(size=len(sizes)) < 0.5, "cw", "ccw")
    marks = rng.uniform(size=len(sizes))
    areas = np.zeros(len(sizes))
    disks = {}
    # per-jump streams keyed by (disk seed, jump index)
    disk_seed = child_seed(rng)
    for i in chosen:
        disk = sample_quantum_disk(
            params,
            ("boundary_length", float(sizes[i])),
            seed=get_rng(disk_seed, "disk", int(i)),
            **(disk_kwargs or {}),
        )
        disks[int(i)] = disk
        areas[i] = disk.area
    rest = np.setdiff1d(np.arange(len(sizes)), chosen)
    if len(rest):
        areas[rest] = area_law.sample(sizes[rest], rng)

    decorations = [
        JumpDecoration(float(sizes[i]), str(orient[i]), float(marks[i]), disks.get(i))
        for i in range(len(sizes))
    ]
    c0 = stable_jump_constant(1.5) if c0 is None else c0
    mean_unit = area_law.mean if area_law is not None else 0.0
    # E[sum of b^2 A_1] over jumps below the threshold: T c0 2 sqrt(threshold) E[A_1]
    small = exc.duration * c0 * 2.0 * np.sqrt(threshold) * mean_unit
    meta = {"materialize": str(materialize), "jump_threshold": threshold, "c0": c0}
    return LevySphereSample(exc, decorations, areas, small, meta)


class AreaWeight(NamedTuple):
    exponent: float

    def __call__(self, area):
        return np.asarray(area, dtype=float) ** self.exponent


def sphere_marked_point_weight(k):
    # area density A^(-7/2 + k) of spheres with k marked points
    if k < 0:
        raise DomainError(f"k must be >= 0, got {k}")
    return AreaWeight(-3.5 + k)


def reweight_areas(areas, k_from, k_to):
    # importance weights turning k_from-marked area samples into k_to-marked ones
    areas = np.asarray(areas, dtype=float)
    w = sphere_marked_point_weight(k_to)(areas) / sphere_marked_point_weight(k_from)(areas)
    return w / w.sum()


class ExceedanceTable(NamedTuple):
    thresholds: np.ndarray
    frequency: np.ndarray
    stderr: np.ndarray
    monotone: bool


def area_exceedance_table(areas, thresholds, n_sigma=2.0):
    from .stats import is_nonincreasing

    areas = np.asarray(areas, dtype=float)
    thresholds = np.asarray(thresholds, dtype=float)
    freq = np.array([np.mean(areas > a) for a in thresholds])
    stderr = np.sqrt(freq * (1 - freq) / len(areas))
    return ExceedanceTable(thresholds, freq, stderr, is_nonincreasing(freq, stderr, n_sigma))
