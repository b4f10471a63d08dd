import json
import numpy as np
from .errors import DomainError


class SampledPath:
    # A time grid plus values: (n,) for scalar paths, (n, 2) for planar paths.
    # values.ravel() of a planar path is the interleaved (x, y) layout.
    def __init__(self, times=None, values=None, metadata=None, input_file=None):
        if input_file is not None:
            self.load_npz(input_file)
            return
        self.times = None if times is None else np.asarray(times, dtype=float)
        self.values = None if values is None else np.asarray(values, dtype=float)
        self.metadata = {} if metadata is None else dict(metadata)

    @property
    def dim_tag(self):
        return "planar" if self.values.ndim == 2 else "scalar"

    @property
    def n_points(self):
        return len(self.times)

    @property
    def duration(self):
        return self.times[-1] - self.times[0]

    @property
    def x(self):
        return self.values[:, 0] if self.values.ndim == 2 else self.values

    @property
    def y(self):
        assert self.values.ndim == 2
        return self.values[:, 1]

    def check(self):
        # structural invariants of a sampled path
        if self.times is None or self.values is None:
            raise DomainError("empty path")
        if self.times.ndim != 1 or len(self.times) < 2:
            raise DomainError("a path needs at least two grid points")
        if np.any(np.diff(self.times) <= 0):
            raise DomainError("time grid must be strictly increasing")
        if self.values.shape[0] != len(self.times) or self.values.ndim > 2:
            raise DomainError(
                f"values shape {self.values.shape} does not match {len(self.times)} times"
            )
        if self.values.ndim == 2 and self.values.shape[1] != 2:
            raise DomainError("planar paths carry (x, y) pairs")
        if not (np.all(np.isfinite(self.values)) and np.all(np.isfinite(self.times))):
            raise DomainError("path contains NaN/Inf")
        return self

    def value_at(self, t):
        # linear interpolation on the grid
        if self.values.ndim == 1:
            return np.interp(t, self.times, self.values)
        return np.stack(
            [np.interp(t, self.times, self.values[:, i]) for i in range(2)], axis=-1
        )

    def copy(self):
        return SampledPath(self.times.copy(), self.values.copy(), dict(self.metadata))

    def interleaved(self):
        return self.values.ravel()

    def save_npz(self, output_file):
        assert self.times is not None
        np.savez_compressed(
            output_file,
            times=self.times,
            values=self.values,
            metadata=np.array(json.dumps(self.metadata, default=float)),
        )

    def load_npz(self, input_file):
        data = np.load(input_file)
        self.times = data["times"]
        self.values = data["values"]
        self.metadata = json.loads(str(data["metadata"])) if "metadata" in data else {}

    def to_table(self):
        # columns: t, x[, y]
        if self.values.ndim == 1:
            return np.stack([self.times, self.values], axis=1)
        return np.hstack([self.times.reshape(-1, 1), self.values])

    def print_info(self):
        print(f"Path type: {self.dim_tag}, points: {self.n_points}")
        print(f"Time range: ({self.times[0]:.4g}, {self.times[-1]:.4g})")
        print(
            f"Value (min, max): ({self.values.min():.4g}, {self.values.max():.4g})"
        )
        for key, val in self.metadata.items():
            print(f"{key}\t: {val}")
