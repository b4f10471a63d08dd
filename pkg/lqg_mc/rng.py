import os
import concurrent.futures as cf
import numpy as np

# stream ids: (seed, module, task index) -> independent Philox stream
MODULE_ID = {
    "core": 0,
    "brownian": 1,
    "bessel": 2,
    "quadrant": 3,
    "stable": 4,
    "field": 5,
    "sphere": 6,
    "disk": 7,
    "levy": 8,
    "stats": 9,
    "verify": 10,
    "crossval": 11,
}


def get_rng(seed=0, module="core", task_index=0):
    """
    Counter-based generator keyed by (seed, module, task_index).

    A numpy Generator passed as `seed` is returned unchanged.
    """
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None:
        seed = 0
    module_id = MODULE_ID[module] if isinstance(module, str) else int(module)
    entropy = [int(seed), module_id, int(task_index)]
    assert min(entropy) >= 0
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def child_seed(rng):
    # derive an integer seed from a parent generator (for nested task streams)
    return int(rng.integers(0, 2**63 - 1))


def resolve_threads(threads):
    if threads is None or threads <= 0:
        return os.cpu_count() or 1
    return int(threads)


def _run_one(args):
    func, seed, module, index, kwargs = args
    return func(rng=get_rng(seed, module, index), index=index, **kwargs)


def run_tasks(func, n_tasks, seed=0, module="core", threads=1, **kwargs):
    """
    Run `func(rng=..., index=i, **kwargs)` for i in range(n_tasks).

    Every task gets its own stream, so results are identical for any
    thread count. `func` must be a module-level function when threads > 1.

    Returns:
        list: task results in index order.
    """
    if isinstance(seed, np.random.Generator):
        seed = child_seed(seed)
    jobs = [(func, seed, module, i, kwargs) for i in range(n_tasks)]
    threads = resolve_threads(threads)
    if threads == 1 or n_tasks <= 1:
        return [_run_one(job) for job in jobs]
    with cf.ProcessPoolExecutor(max_workers=min(threads, n_tasks)) as ex:
        # map keeps submission order
        return list(ex.map(_run_one, jobs, chunksize=max(1, n_tasks // (4 * threads))))
