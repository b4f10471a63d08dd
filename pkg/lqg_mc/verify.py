import time
from typing import NamedTuple, Optional
import numpy as np
from .brownian import sample_correlated_bm
from .bessel import sample_excursion_lifetimes
from .errors import DomainError, LqgError
from .field import IdentityMap, PsiMap, TranslationMap, coordinate_change_check
from .params import GAMMA_SQRT_8_3, ScalingAction, apply_scaling, make_params, shift_for_area
from .quadrant import (
    CONE_OFFSET_SHARE,
    cone_excursion_as_loop,
    estimate_ek_probability,
    make_quadrant_spec,
    resample_middle_segment,
    sample_quadrant_loops,
)
from .rng import get_rng, run_tasks
from .sphere import (
    assemble_levy_sphere,
    calibrate_disk_area_law,
    sample_quantum_cone_field,
    sample_sphere_bessel,
    sample_sphere_bottleneck,
    sphere_observable,
    truncation_leakage,
)
from .stable import (
    check_time_reversal_duality,
    make_stable_spec,
    recover_elapsed_time,
    sample_jump_ppp,
    sample_stable_jumps,
    stable_excursion_lifetimes,
)
from .stats import (
    P_THRESHOLD,
    dyadic_convergence_study,
    fit_tail_exponent,
    loglog_slope,
    two_sample_ks,
)

SCALING_RTOL = 1e-12
# largest share of window hits allowed below the sphere excursion truncation
LEAKAGE_MAX = 0.01


class Check(NamedTuple):
    name: str
    value: float
    target: str
    passed: bool
    p_value: Optional[float] = None


class VerifyReport:
    def __init__(self, suite, checks, artifacts=None, timings=None):
        self.suite = suite
        self.checks = checks
        # artifact name -> numeric table
        self.artifacts = {} if artifacts is None else artifacts
        self.timings = {} if timings is None else timings

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def to_dict(self):
        return {
            "suite": self.suite,
            "passed": self.passed,
            "checks": [c._asdict() for c in self.checks],
        }

    def print_report(self):
        for c in self.checks:
            status = "ok" if c.passed else "FAILED"
            pv = "" if c.p_value is None else f", p = {c.p_value:.4f}"
            print(f"{c.name}\t: {c.value:.6g} (target {c.target}{pv}) {status}")
        print(f"{self.suite}\t: {'passed' if self.passed else 'FAILED'}")
        print("-----------------")


def _size(config, base, floor=50):
    return max(floor, int(round(base * config.verify_scale)))


def _rel_check(name, value, expected, rtol=SCALING_RTOL):
    err = abs(value - expected) / abs(expected)
    return Check(name, float(value), f"{expected:.12g} (rtol {rtol:g})", bool(err <= rtol))


def _slope_check(name, fit, target, tol):
    return Check(name, fit.slope, f"{target:g} +/- {tol:g}", bool(fit.within(target, tol)))


def _ks_check(name, report, threshold=P_THRESHOLD):
    passed = bool(report.p_value > threshold)
    return Check(name, report.statistic, f"p > {threshold:g}", passed, report.p_value)


def suite_scaling(config, rng):
    # exact algebra of the shift h -> h + C
    params = make_params(GAMMA_SQRT_8_3)
    checks = []
    for c in (-1.0, 0.5, (2.0 / params.gamma) * np.log(2.0)):
        act = ScalingAction(c)
        checks.append(
            _rel_check(
                f"area_factor[C={c:.4f}]",
                apply_scaling(act, 1.0, "area", params),
                np.exp(params.gamma * c),
            )
        )
        checks.append(
            _rel_check(
                f"boundary_factor[C={c:.4f}]",
                apply_scaling(act, 1.0, "boundary", params),
                np.exp(params.gamma * c / 2.0),
            )
        )
        checks.append(
            _rel_check(
                f"natural_time_factor[C={c:.4f}]",
                apply_scaling(act, 1.0, "natural_time", params),
                act.boundary_factor(params) ** 1.5,
            )
        )
    a, b = ScalingAction(0.3), ScalingAction(-1.1)
    checks.append(
        _rel_check(
            "compose_area",
            a.compose(b).area_factor(params),
            a.area_factor(params) * b.area_factor(params),
        )
    )
    for area in (0.01, 1.0, 250.0):
        act = ScalingAction(shift_for_area(area, params))
        checks.append(_rel_check(f"unit_area[A={area:g}]", area * act.area_factor(params), 1.0))
    return checks, {}


def suite_covariance(config, rng):
    checks = []
    rows = []
    n_steps = _size(config, 10**6)
    for i, gamma in enumerate((np.sqrt(2.0), GAMMA_SQRT_8_3, 1.8)):
        params = make_params(gamma)
        path = sample_correlated_bm(params, 1.0, n_steps, get_rng(config.seed, "verify", i + 1))
        incr = np.diff(path.values, axis=0)
        rho_hat = float(np.corrcoef(incr.T)[0, 1])
        target = params.bm_correlation
        sigma = (1.0 - target**2) / np.sqrt(n_steps)
        checks.append(
            Check(
                f"correlation[gamma={gamma:.4f}]",
                rho_hat,
                f"{target:.6f} +/- {3 * sigma:.2e}",
                bool(abs(rho_hat - target) <= 3 * sigma),
            )
        )
        rows.append([gamma, target, rho_hat, sigma])
    return checks, {"verify_covariance": np.array(rows)}


def suite_jumps(config, rng):
    spec = make_stable_spec(1.5, "positive")
    n_jumps = _size(config, 10**6, 10**4)
    # unit steps: about 1.26% of the steps carry a jump above the threshold 10
    n_steps = int(n_jumps / 0.0126 * 1.05)
    jumps = sample_stable_jumps(spec, float(n_steps), n_steps, rng)
    threshold = 10.0
    fit = fit_tail_exponent(jumps[:, 1], (4 * threshold, 100 * threshold), seed=config.seed)
    checks = [
        Check(
            "n_recorded_jumps",
            float(len(jumps)),
            f">= {0.9 * n_jumps:.0f}",
            bool(len(jumps) >= 0.9 * n_jumps),
        ),
        _slope_check("jump_density_slope", fit, -2.5, 0.05),
    ]
    return checks, {}


def _ppp_time_estimate(c0, j_max, horizon, size_factor, rng, n_chunks=256):
    # estimator of the elapsed time, after multiplying every jump by size_factor;
    # the estimate is linear in the bin count, so chunk estimates add up
    lo = np.exp(-j_max - 1.0) / size_factor
    hi = np.exp(-j_max) / size_factor
    total = 0.0
    for _ in range(n_chunks):
        jumps = sample_jump_ppp(c0, 1.5, horizon / n_chunks, lo, rng, max_size=hi)
        jumps[:, 1] *= size_factor
        total += recover_elapsed_time(jumps, j_max, c0).estimate
    return total


def suite_time(config, rng):
    params = make_params(GAMMA_SQRT_8_3)
    c0 = config.resolved()["c0"]
    j_max = 12
    t_hat = _ppp_time_estimate(c0, j_max, 1.0, 1.0, rng)
    # C = (2/gamma) ln 2 doubles boundary lengths
    act = ScalingAction((2.0 / params.gamma) * np.log(2.0))
    factor = act.boundary_factor(params)
    t_scaled = _ppp_time_estimate(c0, j_max, 1.0, factor, rng)
    expected = act.natural_time_factor(params)
    checks = [
        Check("time_recovery", t_hat, "1 +/- 5%", bool(abs(t_hat - 1.0) <= 0.05)),
        Check(
            "time_scaling",
            t_scaled,
            f"{expected:.6f} +/- 5%",
            bool(abs(t_scaled - expected) <= 0.05 * expected),
        ),
    ]
    return checks, {}


def suite_lifetimes(config, rng):
    size = _size(config, 10**5, 5000)
    bessel = sample_excursion_lifetimes(1.0, 1.0, size, rng)
    min_samples = min(1000, size // 10)
    fit_b = fit_tail_exponent(bessel, (20.0, 2000.0), seed=config.seed, min_samples=min_samples)
    spec = make_stable_spec(1.5, "positive")
    stable = stable_excursion_lifetimes(spec, 1.0, 1000.0, size, rng)
    fit_s = fit_tail_exponent(stable, (4.0, 1000.0), seed=config.seed, min_samples=min_samples)
    checks = [
        _slope_check("bessel_lifetime_slope[delta=1]", fit_b, -1.5, 0.07),
        _slope_check("stable_lifetime_slope[alpha=1.5]", fit_s, -5.0 / 3.0, 0.07),
    ]
    n = min(len(bessel), len(stable))
    return checks, {"verify_lifetimes": np.stack([bessel[:n], stable[:n]], axis=1)}


def suite_loop(config, rng):
    trunc = config.truncation("quadrant")
    n_steps = min(config.n_steps, 2**9)
    spec = make_quadrant_spec(
        config.resolved()["alpha"],
        (0.0, 0.0),
        trunc["relaxation_delta"],
        trunc["start_offset"],
        n_steps,
    )
    n_loops = _size(config, 10**4, 200)
    threads = config.resolved()["threads"]
    loops = sample_quadrant_loops(spec, n_loops, config.seed, threads, config.max_tries)
    half = n_loops // 2
    fresh = np.array([loop.value_at(0.5) for loop in loops[:half]])
    # one stream per resampled loop, independent of the thread count
    moved = np.array(
        [
            resample_middle_segment(
                loop, 0.25, 0.75, spec, get_rng(config.seed, "verify", 1000 + i)
            ).value_at(0.5)
            for i, loop in enumerate(loops[half:])
        ]
    )
    ks = two_sample_ks(fresh[:, 0], moved[:, 0])

    def sampler(eps, n, sub_rng):
        # offset-start route: the offset shrinks with the rung
        rung = spec._replace(start_offset=min(spec.start_offset, CONE_OFFSET_SHARE * eps))
        return [
            cone_excursion_as_loop(eps, rung, sub_rng, "left", config.max_tries).value_at(0.5)[0]
            for _ in range(n)
        ]

    ladder = [0.4, 0.2, 0.1, 0.05]
    table = dyadic_convergence_study(sampler, ladder, _size(config, 2000, 100), seed=config.seed)
    checks = [
        _ks_check("gibbs_resampling_midpoint", ks),
        Check(
            "epsilon_ladder_monotone",
            float(table.to_finest[0]),
            "KS distances to the finest rung nonincreasing",
            table.monotone,
        ),
    ]
    return checks, {"verify_loop_ladder": table.to_table()}


def suite_ek(config, rng):
    k_values = [2, 4, 8, 16]
    n_trials = _size(config, 10**5, 1000)
    checks = []
    rows = []
    for alpha in (0.0, 0.5):
        est = estimate_ek_probability(alpha, k_values, n_trials, config.seed)
        p = np.array([e.p_hat for e in est])
        rows.extend([[alpha, e.k, e.p_hat, e.stderr] for e in est])
        if np.any(p <= 0):
            checks.append(Check(f"ek_slope[alpha={alpha:g}]", np.nan, "< -1", False))
            continue
        fit = loglog_slope(k_values, p)
        passed = bool(fit.slope < -1.0)
        checks.append(Check(f"ek_slope[alpha={alpha:g}]", fit.slope, "< -1", passed))
    return checks, {"verify_ek": np.array(rows)}


def suite_duality(config, rng):
    spec = make_stable_spec(1.5, "positive")
    report = check_time_reversal_duality(spec, 1.0, _size(config, 10**4, 200), rng)
    checks = [_ks_check(f"duality_{name}", report.ks[name]) for name in ("jump_size", "lifetime")]
    return checks, {}


def suite_coordinate(config, rng):
    params = config.params
    n_modes = min(config.n_modes, config.n_theta // 2 - 1)
    field = sample_quantum_cone_field(
        params, params.gamma, (-8.0, 16.0), config.n_theta, n_modes, rng
    )
    dx = field.dx
    # region edges halfway between grid columns
    i0 = int(np.searchsorted(field.x, 0.0))
    region = (field.x[i0] - 0.5 * dx, field.x[i0 + int(round(2.0 / dx))] - 0.5 * dx)
    ident = coordinate_change_check(field, IdentityMap(), region, params)
    trans = coordinate_change_check(field, TranslationMap(16 * dx), region, params)
    psi = coordinate_change_check(field, PsiMap(8.0 + 1.0j), (-6.0, -4.0), params)
    checks = [
        Check("identity_map", ident.discrepancy, "<= 1e-10", bool(ident.discrepancy <= 1e-10)),
        Check("translation_map", trans.discrepancy, "<= 1e-8", bool(trans.discrepancy <= 1e-8)),
        Check("psi_far_field", psi.discrepancy, "< 0.1", bool(psi.discrepancy < 0.1)),
    ]
    return checks, {}


def _bessel_sphere_task(rng, index, params, config):
    trunc = config.resolved()["truncations"]["sphere"]
    sample = sample_sphere_bessel(
        params,
        area_window=tuple(trunc["area_window"]),
        min_max=trunc["min_max"],
        n_theta=config.n_theta,
        n_modes=config.n_modes,
        epsilon_reg=config.epsilon_reg,
        height_floor=trunc["height_floor"],
        seed=rng,
    )
    return sample.area, sphere_observable(sample)


def _bottleneck_task(rng, index, params, config):
    trunc = config.resolved()["truncations"]["bottleneck"]
    sample = sample_sphere_bottleneck(
        params,
        r=trunc["r"],
        epsilon=trunc["epsilon"],
        n_theta=config.n_theta,
        n_modes=config.n_modes,
        epsilon_reg=config.epsilon_reg,
        seed=rng,
    )
    return sample.area, sphere_observable(sample)


def suite_crossval(config, rng):
    n = _size(config, 2000, 100)
    threads = config.resolved()["threads"]
    kwargs = {"params": config.params, "config": config}
    bes = run_tasks(_bessel_sphere_task, n, config.seed, "sphere", threads, **kwargs)
    bot = run_tasks(_bottleneck_task, n, config.seed, "crossval", threads, **kwargs)
    ks = two_sample_ks([o for _, o in bes], [o for _, o in bot])
    table = np.array([[a, o, b, p] for (a, o), (b, p) in zip(bes, bot)])
    return [_ks_check("sphere_iqr_width", ks)], {"verify_crossval": table}


def suite_area(config, rng):
    params = config.params
    n = _size(config, 5000, 200)
    threads = config.resolved()["threads"]
    out = run_tasks(
        _bessel_sphere_task, n, config.seed, "sphere", threads, params=params, config=config
    )
    areas = np.array([a for a, _ in out])
    window = tuple(config.truncation("sphere")["area_window"])
    fit = fit_tail_exponent(areas, window, seed=config.seed, min_samples=min(1000, n // 2))
    target = -4.0 / params.gamma**2
    trunc = config.resolved()["truncations"]["sphere"]
    leak = truncation_leakage(
        params,
        window,
        trunc["min_max"],
        _size(config, 1000, 100),
        n_theta=config.n_theta,
        n_modes=config.n_modes,
        epsilon_reg=config.epsilon_reg,
        height_floor=trunc["height_floor"],
        seed=rng,
    )
    checks = [
        _slope_check("sphere_area_slope", fit, target, 0.1),
        Check(
            "sphere_truncation_leakage",
            leak.fraction,
            f"<= {LEAKAGE_MAX}",
            bool(leak.n_in_window > 0 and leak.fraction <= LEAKAGE_MAX),
        ),
    ]
    return checks, {"verify_areas": areas}


def _levy_task(rng, index, params, area_law, min_height):
    sample = assemble_levy_sphere(
        params,
        ("min_height", min_height),
        "none",
        area_law,
        n_steps=256,
        seed=rng,
        max_open_factor=1024,
    )
    return sample.total_area


def suite_levy_area(config, rng):
    params = make_params(GAMMA_SQRT_8_3)
    area_law = calibrate_disk_area_law(params, _size(config, 200, 50), rng)
    n = _size(config, 5000, 200)
    totals = np.array(
        run_tasks(
            _levy_task,
            n,
            config.seed,
            "levy",
            config.resolved()["threads"],
            params=params,
            area_law=area_law,
            min_height=config.truncation("levy")["min_height"],
        )
    )
    lo = 2.0 * float(np.median(totals))
    fit = fit_tail_exponent(
        totals, (lo, 100.0 * lo), n_bins=10, seed=config.seed, min_samples=min(1000, n // 5)
    )
    return [_slope_check("levy_area_slope", fit, -1.5, 0.1)], {"verify_levy_areas": totals}


SUITES = {
    "scaling": suite_scaling,
    "covariance": suite_covariance,
    "jumps": suite_jumps,
    "time": suite_time,
    "lifetimes": suite_lifetimes,
    "loop": suite_loop,
    "ek": suite_ek,
    "duality": suite_duality,
    "coordinate": suite_coordinate,
    "crossval": suite_crossval,
    "area": suite_area,
    "levy-area": suite_levy_area,
}

SUITE_GROUPS = {
    "fast": ["scaling", "covariance", "time", "coordinate"],
    "all": list(SUITES),
}


def suite_names(name):
    if name in SUITES:
        return [name]
    if name in SUITE_GROUPS:
        return SUITE_GROUPS[name]
    known = list(SUITES) + list(SUITE_GROUPS)
    raise DomainError(f"unknown verify suite: {name}, expected one of {known}")


def run_suite(name, config, verbose=False):
    """
    Run one verify suite (or a group) and collect its checks.

    Every suite draws from its own stream (seed, "verify", suite index).
    A suite that cannot produce its statistic (too few in-window samples,
    exhausted rejection budget) is reported as one failed check.

    Returns:
        VerifyReport
    """
    checks = []
    artifacts = {}
    timings = {}
    for sub in suite_names(name):
        if verbose:
            print(f"Suite {sub}")
        rng = get_rng(config.seed, "verify", 100 + list(SUITES).index(sub))
        start = time.perf_counter()
        try:
            sub_checks, sub_artifacts = SUITES[sub](config, rng)
        except LqgError as err:
            sub_checks, sub_artifacts = [Check(f"{sub}_error", np.nan, str(err), False)], {}
        timings[sub] = time.perf_counter() - start
        checks.extend(sub_checks)
        artifacts.update(sub_artifacts)
    report = VerifyReport(name, checks, artifacts, timings)
    if verbose:
        report.print_report()
    return report
