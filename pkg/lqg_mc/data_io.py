import os
import json
import time
import hashlib
import numpy as np
from em_util.io import mkdir
from .errors import ConfigError

SCHEMA_FILE = os.path.join(os.path.dirname(__file__), "data", "csv_schema.json")


def get_file_path(folder, name):
    if name == "manifest":
        return os.path.join(folder, "manifest.json")
    elif name == "report":
        return os.path.join(folder, "report.json")
    elif name == "field":
        return os.path.join(folder, "fields", "%s_%04d.h5")
    elif name == "levy_jumps":
        return os.path.join(folder, "levy_jumps", "levy_jumps_%04d.csv")
    elif name == "disk_area_law":
        return os.path.join(folder, "disk_area_law.npz")
    return os.path.join(folder, f"{name}.csv")


def load_csv_schema():
    with open(SCHEMA_FILE) as fid:
        return json.load(fid)


def schema_columns(name):
    schema = load_csv_schema()
    if name not in schema:
        raise ConfigError(f"no CSV schema for artifact: {name}")
    return schema[name]["columns"]


def write_csv(output_file, table, columns):
    """
    Write a 2D table with a header line. Values are written with 17
    significant digits so that reruns give byte-identical files.
    """
    table = np.asarray(table, dtype=float)
    if table.ndim == 1:
        table = table.reshape(-1, 1)
    assert table.shape[1] == len(columns)
    mkdir(output_file, "parent")
    np.savetxt(
        output_file, table, fmt="%.17g", delimiter=",", header=",".join(columns), comments=""
    )


def write_artifact(folder, name, table, manifest=None):
    # CSV artifact whose columns come from the shipped schema
    output_file = get_file_path(folder, name)
    write_csv(output_file, table, schema_columns(name))
    if manifest is not None:
        manifest.add(output_file)
    return output_file


def read_csv(input_file):
    with open(input_file) as fid:
        columns = fid.readline().strip().split(",")
    table = np.loadtxt(input_file, delimiter=",", skiprows=1, ndmin=2)
    return columns, table


def _to_builtin(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if hasattr(obj, "_asdict"):
        return obj._asdict()
    return str(obj)


def write_json(output_file, obj):
    mkdir(output_file, "parent")
    with open(output_file, "w") as fid:
        json.dump(obj, fid, indent=2, sort_keys=True, default=_to_builtin)


def read_json(input_file):
    with open(input_file) as fid:
        return json.load(fid)


def file_hash(path, chunk=2**20):
    sha = hashlib.sha256()
    with open(path, "rb") as fid:
        for block in iter(lambda: fid.read(chunk), b""):
            sha.update(block)
    return sha.hexdigest()


class Manifest:
    # {config, seed, hashes, timings, results} of one run
    def __init__(self, folder, config=None):
        self.folder = folder
        self.config = {} if config is None else config
        self.hashes = {}
        self.timings = {}
        self.results = {}
        self._start = {}

    def add(self, path):
        self.hashes[os.path.relpath(path, self.folder)] = file_hash(path)

    def start(self, stage):
        self._start[stage] = time.perf_counter()

    def stop(self, stage):
        self.timings[stage] = time.perf_counter() - self._start.pop(stage)

    def save(self):
        output_file = get_file_path(self.folder, "manifest")
        write_json(
            output_file,
            {
                "config": self.config,
                "seed": self.config.get("seed"),
                "hashes": self.hashes,
                "timings": self.timings,
                "results": self.results,
            },
        )
        return output_file


def paths_to_table(paths):
    # stacked (sample, t, x[, y]) rows of several sampled paths
    rows = []
    for i, path in enumerate(paths):
        table = path.to_table()
        rows.append(np.hstack([np.full((len(table), 1), i), table]))
    return np.vstack(rows)
