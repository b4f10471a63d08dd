import sys
import argparse
import numpy as np
from .bessel import sample_bessel_excursion
from .config import DEFAULTS, load_config
from .data_io import (
    Manifest,
    get_file_path,
    paths_to_table,
    schema_columns,
    write_artifact,
    write_csv,
    write_json,
)
from .errors import ConfigError, LqgError
from .field import metadata_path
from .quadrant import make_quadrant_spec, sample_quadrant_loops
from .rng import get_rng, run_tasks
from .sphere import (
    assemble_levy_sphere,
    calibrate_disk_area_law,
    sample_quantum_disk,
    sample_sphere_bessel,
    sample_sphere_bottleneck,
    sphere_observable,
)
from .stable import make_stable_spec, sample_stable_excursions, sample_stable_path
from .verify import run_suite

COMMANDS = (
    "loop",
    "bessel",
    "stable",
    "sphere-bessel",
    "sphere-bottleneck",
    "disk",
    "levy-sphere",
    "verify",
)
# points kept per loop in the CSV batch
LOOP_CSV_POINTS = 512
N_HIST_BINS = 50
EXIT_CHECKS_FAILED = 3


def get_arguments(argv=None):
    """
    The function `get_arguments` is used to parse command line arguments for
    the samplers and the verify suites.

    Every config key has a flag of the same name; flags override the JSON
    config file, which overrides the built-in defaults.
    """
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-c", "--config", type=str, default=None, help="JSON config file")
    for key, default in DEFAULTS.items():
        if key in ("truncations", "verbose"):
            continue
        kind = type(default) if default is not None else float
        if key == "output_dir":
            kind = str
        common.add_argument(
            "--" + key.replace("_", "-"),
            dest=key,
            type=kind,
            default=None,
            help=f"overrides config key {key}",
        )
    common.add_argument(
        "-t",
        "--truncation",
        action="append",
        default=[],
        help="truncation entry as module.key=value (repeatable)",
    )
    common.add_argument("-v", "--verbose", action="store_true", default=None)

    parser = argparse.ArgumentParser(
        prog="lqg-mc", description="Monte Carlo samplers for mated-CRT and LQG surfaces"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "verify":
            p.add_argument("suite", type=str, help="suite name, 'fast' or 'all'")
    return parser.parse_args(argv)


def _overrides(args):
    return {key: getattr(args, key) for key in DEFAULTS if key != "truncations"}


def run_loop(config, resolved, manifest):
    trunc = config.truncation("quadrant")
    spec = make_quadrant_spec(
        resolved["alpha"],
        (0.0, 0.0),
        trunc["relaxation_delta"],
        trunc["start_offset"],
        config.n_steps,
    )
    print(f"Step 1: sample {config.n_samples} quadrant loops")
    loops = sample_quadrant_loops(
        spec, config.n_samples, config.seed, resolved["threads"], config.max_tries
    )
    stride = max(1, config.n_steps // LOOP_CSV_POINTS)
    thinned = []
    for loop in loops:
        out = loop.copy()
        out.times, out.values = loop.times[::stride], loop.values[::stride]
        thinned.append(out)
    print("Step 2: write the loop batch and the midpoint histogram")
    folder = resolved["output_dir"]
    write_artifact(folder, "loops", paths_to_table(thinned), manifest)
    mid = np.array([loop.value_at(0.5) for loop in loops])
    edges = np.linspace(min(mid.min(), 0.0), mid.max(), N_HIST_BINS + 1)
    count_x, _ = np.histogram(mid[:, 0], edges)
    count_y, _ = np.histogram(mid[:, 1], edges)
    hist = np.stack([edges[:-1], edges[1:], count_x, count_y], axis=1)
    write_artifact(folder, "loop_midpoint_hist", hist, manifest)
    rates = [loop.metadata["acceptance_rate"] for loop in loops]
    manifest.results.update(
        {"n_loops": len(loops), "route": spec.route, "acceptance_rate": float(np.mean(rates))}
    )


def _bessel_task(rng, index, dimension, min_max, n_steps):
    return sample_bessel_excursion(
        dimension, min_max=min_max, n_steps=n_steps, seed=rng, grid="log", log_depth=24.0
    )


def run_bessel(config, resolved, manifest):
    dimension = 4.0 - 8.0 / config.gamma**2
    min_max = config.truncation("bessel")["min_max"]
    print(f"Step 1: sample {config.n_samples} Bessel excursions, delta = {dimension:.4f}")
    excursions = run_tasks(
        _bessel_task,
        config.n_samples,
        config.seed,
        "bessel",
        resolved["threads"],
        dimension=dimension,
        min_max=min_max,
        n_steps=config.n_steps,
    )
    print("Step 2: write lifetimes and the first excursion")
    folder = resolved["output_dir"]
    table = np.array([[i, e.duration, e.maximum] for i, e in enumerate(excursions)])
    write_artifact(folder, "bessel_lifetimes", table, manifest)
    write_artifact(folder, "bessel_excursion", excursions[0].path.to_table(), manifest)
    manifest.results.update({"dimension": dimension, "min_max": min_max})


def run_stable(config, resolved, manifest):
    trunc = config.truncation("stable")
    spec = make_stable_spec(1.5, "positive")
    rng = get_rng(config.seed, "stable")
    folder = resolved["output_dir"]
    print(f"Step 1: stable path on [0, {trunc['horizon']}]")
    path, jumps = sample_stable_path(spec, trunc["horizon"], config.n_steps, seed=rng)
    write_artifact(folder, "stable_path", path.to_table(), manifest)
    write_artifact(folder, "stable_jumps", jumps, manifest)
    print(f"Step 2: {config.n_samples} excursions with height >= {trunc['min_height']}")
    excursions = sample_stable_excursions(
        spec, ("min_height", trunc["min_height"]), config.n_samples, rng
    )
    table = np.array(
        [[i, e.duration, e.height, e.max_jump, len(e.jumps)] for i, e in enumerate(excursions)]
    )
    write_artifact(folder, "stable_excursions", table, manifest)
    write_artifact(folder, "stable_excursion", excursions[0].path.to_table(), manifest)
    manifest.results.update(
        {"n_path_jumps": len(jumps), "jump_threshold": path.metadata["jump_threshold"]}
    )


def _sphere_bessel_task(rng, index, params, config, resolved):
    trunc = resolved["truncations"]["sphere"]
    return sample_sphere_bessel(
        params,
        area_window=tuple(trunc["area_window"]),
        min_max=trunc["min_max"],
        n_steps=config.n_steps,
        n_theta=config.n_theta,
        n_modes=config.n_modes,
        epsilon_reg=config.epsilon_reg,
        height_floor=trunc["height_floor"],
        seed=rng,
        max_tries=config.max_tries,
    )


def _sphere_bottleneck_task(rng, index, params, config, resolved):
    trunc = resolved["truncations"]["bottleneck"]
    return sample_sphere_bottleneck(
        params,
        r=trunc["r"],
        epsilon=trunc["epsilon"],
        n_theta=config.n_theta,
        n_modes=config.n_modes,
        epsilon_reg=config.epsilon_reg,
        seed=rng,
        max_tries=config.max_tries,
    )


def _run_spheres(config, resolved, manifest, task, name):
    print(f"Step 1: sample {config.n_samples} spheres ({name})")
    spheres = run_tasks(
        task,
        config.n_samples,
        config.seed,
        "sphere",
        resolved["threads"],
        params=config.params,
        config=config,
        resolved=resolved,
    )
    print("Step 2: write areas, observables and the first field")
    folder = resolved["output_dir"]
    rows = []
    for i, s in enumerate(spheres):
        row = [i, s.area, s.shift_c, sphere_observable(s), s.metadata["n_tries"]]
        if name == "sphere_bottleneck":
            row.insert(4, s.metadata["tau_r"])
        rows.append(row)
    write_artifact(folder, name, np.array(rows), manifest)
    field_file = get_file_path(folder, "field") % (name, 0)
    spheres[0].save_h5(field_file)
    manifest.add(field_file)
    manifest.add(metadata_path(field_file))
    manifest.results["mean_tries"] = float(np.mean([s.metadata["n_tries"] for s in spheres]))


def run_sphere_bessel(config, resolved, manifest):
    _run_spheres(config, resolved, manifest, _sphere_bessel_task, "sphere_bessel")


def run_sphere_bottleneck(config, resolved, manifest):
    _run_spheres(config, resolved, manifest, _sphere_bottleneck_task, "sphere_bottleneck")


def _disk_task(rng, index, params, config, window):
    return sample_quantum_disk(
        params,
        "unit_boundary",
        boundary_window=window,
        n_theta=min(config.n_theta, 32),
        n_modes=min(config.n_modes, 12),
        epsilon_reg=config.epsilon_reg,
        seed=rng,
        max_tries=config.max_tries,
    )


def run_disk(config, resolved, manifest):
    window = tuple(config.truncation("disk")["boundary_window"])
    print(f"Step 1: sample {config.n_samples} unit-boundary quantum disks")
    disks = run_tasks(
        _disk_task,
        config.n_samples,
        config.seed,
        "disk",
        resolved["threads"],
        params=config.params,
        config=config,
        window=window,
    )
    print("Step 2: write the disk table")
    rows = [
        [i, d.boundary_length, d.area, d.shift_c, *d.marked_point, d.metadata["n_tries"]]
        for i, d in enumerate(disks)
    ]
    write_artifact(resolved["output_dir"], "disks", np.array(rows), manifest)
    manifest.results["mean_area"] = float(np.mean([d.area for d in disks]))


def _levy_task(rng, index, params, area_law, min_height, materialize, c0, n_steps):
    return assemble_levy_sphere(
        params, ("min_height", min_height), materialize, area_law, c0, n_steps, rng
    )


def run_levy_sphere(config, resolved, manifest):
    params = config.params
    trunc = config.truncation("levy")
    materialize = trunc["materialize"]
    if not isinstance(materialize, str):
        materialize = tuple(materialize)
    folder = resolved["output_dir"]
    n_law = min(config.n_samples, 200)
    print(f"Step 1: calibrate the disk area law from {n_law} disks")
    area_law = calibrate_disk_area_law(params, n_law, get_rng(config.seed, "disk"))
    law_file = get_file_path(folder, "disk_area_law")
    area_law.save_npz(law_file)
    manifest.add(law_file)
    print(f"Step 2: assemble {config.n_samples} Levy spheres")
    spheres = run_tasks(
        _levy_task,
        config.n_samples,
        config.seed,
        "levy",
        resolved["threads"],
        params=params,
        area_law=area_law,
        min_height=trunc["min_height"],
        materialize=materialize,
        c0=resolved["c0"],
        n_steps=min(config.n_steps, 1024),
    )
    print("Step 3: write sphere totals and the jump table of the first sphere")
    rows = [
        [i, s.excursion.duration, len(s.decorations), s.n_materialized, s.total_area,
         s.small_jump_area]
        for i, s in enumerate(spheres)
    ]
    write_artifact(folder, "levy_spheres", np.array(rows), manifest)
    jump_file = get_file_path(folder, "levy_jumps") % 0
    write_csv(jump_file, spheres[0].to_table().reshape(-1, 6), schema_columns("levy_jumps"))
    manifest.add(jump_file)
    manifest.results["mean_total_area"] = float(np.mean([s.total_area for s in spheres]))


def run_verify(config, resolved, manifest, suite):
    print(f"Step 1: verify suite {suite}")
    report = run_suite(suite, config, verbose=bool(config.verbose))
    print("Step 2: write the report")
    folder = resolved["output_dir"]
    for name, table in report.artifacts.items():
        write_artifact(folder, name, table, manifest)
    report_file = get_file_path(folder, "report")
    write_json(report_file, report.to_dict())
    manifest.add(report_file)
    manifest.timings.update(report.timings)
    manifest.results.update(report.to_dict())
    report.print_report()
    return 0 if report.passed else EXIT_CHECKS_FAILED


RUNNERS = {
    "loop": run_loop,
    "bessel": run_bessel,
    "stable": run_stable,
    "sphere-bessel": run_sphere_bessel,
    "sphere-bottleneck": run_sphere_bottleneck,
    "disk": run_disk,
    "levy-sphere": run_levy_sphere,
}


def main(argv=None):
    args = get_arguments(argv)
    try:
        config = load_config(args.config, _overrides(args), args.truncation)
        resolved = config.resolved()
        if config.verbose:
            config.print_info()
        manifest = Manifest(resolved["output_dir"], config.to_dict())
        manifest.start(args.command)
        if args.command == "verify":
            status = run_verify(config, resolved, manifest, args.suite)
        else:
            RUNNERS[args.command](config, resolved, manifest)
            status = 0
        manifest.stop(args.command)
        manifest.save()
        return status
    except ConfigError as err:
        print(f"lqg-mc: config error: {err}", file=sys.stderr)
        return 2
    except (LqgError, OSError) as err:
        print(f"lqg-mc: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    # lqg-mc loop --alpha 0.5 --n-samples 1000
    # lqg-mc verify fast --seed 1
    sys.exit(main())
