import argparse
import numpy as np
import pytest
from lqg_mc.errors import DomainError
from lqg_mc.quadrant import (
    WedgeMap,
    acceptance_rate,
    cone_excursion_as_loop,
    estimate_ek_probability,
    make_quadrant_spec,
    resample_middle_segment,
    sample_quadrant_loop,
    sample_quadrant_loops,
    wedge_transform,
)
from lqg_mc.stats import two_sample_ks


def test_spec_domain():
    with pytest.raises(DomainError):
        make_quadrant_spec(1.0)
    with pytest.raises(DomainError):
        make_quadrant_spec(0.2, endpoint=(1.0, 1.0))
    with pytest.raises(DomainError):
        make_quadrant_spec(0.2, delta=0.0, start_offset=0.0)
    with pytest.raises(DomainError):
        make_quadrant_spec(0.2, delta=0.1, start_offset=0.1)
    with pytest.raises(DomainError):
        make_quadrant_spec(0.2, n_steps=48)


def test_relaxed_loop(alpha=0.5, n_steps=64, seed=0):
    spec = make_quadrant_spec(alpha, n_steps=n_steps)
    loop = sample_quadrant_loop(spec, seed).check()
    assert loop.n_points == n_steps + 1
    assert np.array_equal(loop.values[0], [0, 0]) and np.array_equal(loop.values[-1], [0, 0])
    assert loop.values.min() >= -0.1
    assert loop.metadata["route"] == "relaxed_floor"
    assert loop.metadata["n_tries"] >= 1
    assert 0 < loop.metadata["acceptance_rate"] <= 1


def test_offset_loop(alpha=0.0, offset=0.25, seed=1):
    spec = make_quadrant_spec(alpha, delta=0.0, start_offset=offset, n_steps=64)
    loop = sample_quadrant_loop(spec, seed)
    assert np.array_equal(loop.values[0], [offset, offset])
    assert np.array_equal(loop.values[-1], [offset, offset])
    assert loop.values.min() >= 0
    assert loop.metadata["route"] == "offset_start"


def test_loops_thread_invariance(n_samples=4, seed=2):
    spec = make_quadrant_spec(0.3, n_steps=32)
    serial = sample_quadrant_loops(spec, n_samples, seed, threads=1)
    parallel = sample_quadrant_loops(spec, n_samples, seed, threads=2)
    for a, b in zip(serial, parallel):
        assert np.array_equal(a.values, b.values)
    assert not np.array_equal(serial[0].values, serial[1].values)


def test_resample_middle(seed=3):
    spec = make_quadrant_spec(0.2, n_steps=64)
    loop = sample_quadrant_loop(spec, seed)
    new = resample_middle_segment(loop, 0.25, 0.75, spec, seed + 1)
    assert np.array_equal(new.values[:17], loop.values[:17])
    assert np.array_equal(new.values[48:], loop.values[48:])
    assert new.values.min() >= spec.floor
    with pytest.raises(DomainError):
        resample_middle_segment(loop, 0.5, 0.5, spec)


def test_cone_excursion_loop(epsilon=0.5, seed=4):
    spec = make_quadrant_spec(0.4, n_steps=64)
    loop = cone_excursion_as_loop(epsilon, spec, seed, orientation="left")
    assert np.array_equal(loop.values[-1], [0.0, epsilon])
    assert loop.metadata["orientation"] == "left"
    loop = cone_excursion_as_loop(epsilon, spec, seed)
    assert loop.metadata["orientation"] in ("left", "right")
    with pytest.raises(DomainError):
        cone_excursion_as_loop(0.0, spec)


def test_cone_excursion_offset(epsilon=0.5, offset=0.04, seed=7):
    spec = make_quadrant_spec(0.0, delta=0.0, start_offset=offset, n_steps=32)
    loop = cone_excursion_as_loop(epsilon, spec, seed, orientation="left")
    assert loop.metadata["start_offset"] == offset
    assert loop.metadata["endpoint"] == (offset, epsilon)
    assert np.array_equal(loop.values[-1], [offset, epsilon])
    # the offset must stay small against epsilon
    with pytest.raises(DomainError):
        cone_excursion_as_loop(0.2, spec, seed)


def test_loop_time_reversal(alpha=0.5, n_samples=400, n_steps=64, seed=8):
    # X at 1/4 against the swapped coordinate Y at 3/4, on disjoint loops
    spec = make_quadrant_spec(alpha, n_steps=n_steps)
    loops = sample_quadrant_loops(spec, n_samples, seed)
    half = n_samples // 2
    early = np.array([loop.values[n_steps // 4, 0] for loop in loops[:half]])
    late = np.array([loop.values[3 * n_steps // 4, 1] for loop in loops[half:]])
    report = two_sample_ks(early, late)
    print(f"ks = {report.statistic:.4f}\tp = {report.p_value:.4g}")
    print("-----------------")
    assert report.p_value > 1e-3


def test_acceptance_rate(seed=5):
    spec = make_quadrant_spec(0.0, n_steps=32)
    rate = acceptance_rate(spec, 2000, seed)
    assert 0 < rate < 1
    # a lower floor accepts more often
    wide = make_quadrant_spec(0.0, delta=1.0, n_steps=32)
    assert acceptance_rate(wide, 2000, seed) > rate


def test_wedge_map(alpha=-0.3):
    wedge = WedgeMap.from_alpha(alpha)
    sigma = np.array([[1.0, alpha], [alpha, 1.0]])
    lam = wedge.lambda_matrix
    assert np.allclose(lam @ sigma @ lam.T, np.eye(2))
    assert np.isclose(wedge.zeta, np.pi / wedge.theta)
    # alpha = 0 keeps the quadrant
    assert np.isclose(WedgeMap.from_alpha(0.0).theta, np.pi / 2)
    spec = make_quadrant_spec(alpha, n_steps=32)
    out = wedge_transform(sample_quadrant_loop(spec, 0), wedge)
    assert out.metadata["theta"] == wedge.theta
    with pytest.raises(DomainError):
        WedgeMap.from_alpha(-1.0)


def test_ek_probability(alpha=0.0, n_trials=200, seed=6):
    out = estimate_ek_probability(alpha, [1, 2], n_trials, seed, batch=100)
    assert [e.k for e in out] == [1, 2]
    for est in out:
        assert 0 <= est.p_hat <= 1 and est.n_trials == n_trials
    with pytest.raises(DomainError):
        estimate_ek_probability(alpha, [0], 10)


def get_arguments():
    """
    The function `get_arguments()` is used to parse command line arguments for the E_k study.
    :return: The function `get_arguments` returns the parsed command-line arguments.
    """
    parser = argparse.ArgumentParser(description="Long cone excursion probabilities")
    parser.add_argument("-a", "--alpha", type=float, help="correlation", default=0.5)
    parser.add_argument(
        "-k", "--k-values", type=str, help="comma-separated k values", default="2,4,8,16"
    )
    parser.add_argument("-n", "--n-trials", type=int, help="trials per k", default=10000)
    parser.add_argument("-s", "--seed", type=int, help="random seed", default=0)
    return parser.parse_args()


if __name__ == "__main__":
    # python tests/test_quadrant.py -a 0.5 -k 2,4,8,16 -n 10000
    args = get_arguments()
    k_values = [int(x) for x in args.k_values.split(",")]
    for est in estimate_ek_probability(args.alpha, k_values, args.n_trials, args.seed):
        print(f"k = {est.k}\t: {est.p_hat:.5f} +- {est.stderr:.5f}")
