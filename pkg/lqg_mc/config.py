import os
import json
import numpy as np
from .errors import ConfigError, DomainError
from .params import GAMMA_SQRT_8_3, make_params
from .rng import resolve_threads
from .sphere import window_min_max
from .stable import stable_jump_constant

OUTPUT_DIR_ENV = "LQG_MC_OUTPUT_DIR"

# None: derived from the other keys (see RunConfig.resolved)
DEFAULTS = {
    "gamma": GAMMA_SQRT_8_3,
    "seed": 0,
    "n_samples": 1000,
    "n_steps": 2**12,
    "n_x": 0,
    "n_theta": 64,
    "n_modes": 24,
    "epsilon_reg": None,
    "alpha": None,
    "c0": None,
    "truncations": None,
    "output_dir": None,
    "threads": 1,
    "max_tries": 10**6,
    "verify_scale": 1.0,
    "verbose": False,
}

TRUNCATION_DEFAULTS = {
    "quadrant": {"relaxation_delta": 0.1, "start_offset": 0.0},
    "bessel": {"min_max": 1.0},
    "stable": {"min_height": 1.0, "horizon": 1e4},
    "sphere": {"area_window": [1.0, 100.0], "min_max": None, "height_floor": None},
    "bottleneck": {"r": None, "epsilon": 0.05},
    "disk": {"boundary_window": [2.0, 4.0]},
    "levy": {"min_height": 1.0, "materialize": "none"},
}

COUNT_KEYS = ("n_samples", "n_steps", "n_theta", "n_modes", "max_tries")


def _parse_value(text):
    # JSON literal when possible, raw string otherwise
    try:
        return json.loads(text)
    except ValueError:
        return text


class RunConfig:
    """
    Run configuration: built-in defaults, then a JSON file, then flags.
    Unknown keys raise ConfigError.
    """

    def __init__(self, values=None):
        self.values = dict(DEFAULTS)
        self.values["truncations"] = json.loads(json.dumps(TRUNCATION_DEFAULTS))
        if values:
            self.update(values)

    def __getattr__(self, key):
        values = self.__dict__.get("values", {})
        if key in values:
            return values[key]
        raise AttributeError(key)

    @classmethod
    def from_json(cls, config_file):
        try:
            with open(config_file) as fid:
                values = json.load(fid)
        except ValueError as err:
            raise ConfigError(f"malformed config file {config_file}: {err}")
        if not isinstance(values, dict):
            raise ConfigError(f"config file {config_file} must hold a JSON object")
        return cls(values)

    def update(self, values):
        for key, val in values.items():
            if key not in DEFAULTS:
                raise ConfigError(f"unknown config key: {key}")
            if key == "truncations":
                for module, entries in (val or {}).items():
                    for name, item in entries.items():
                        self.set_truncation(module, name, item)
            else:
                self.values[key] = val
        return self

    def set_truncation(self, module, name, value):
        if module not in TRUNCATION_DEFAULTS:
            raise ConfigError(f"unknown truncation module: {module}")
        if name not in TRUNCATION_DEFAULTS[module]:
            raise ConfigError(f"unknown truncation key: {module}.{name}")
        self.values["truncations"][module][name] = value

    def set_truncation_flag(self, text):
        # "module.key=value"
        if "=" not in text or "." not in text.split("=", 1)[0]:
            raise ConfigError(f"truncation flags look like module.key=value, got {text}")
        lhs, rhs = text.split("=", 1)
        module, name = lhs.split(".", 1)
        self.set_truncation(module, name, _parse_value(rhs))

    def truncation(self, module):
        return self.values["truncations"][module]

    def check(self):
        for key in COUNT_KEYS:
            if not isinstance(self.values[key], (int, np.integer)) or self.values[key] < 1:
                raise ConfigError(f"{key} must be an integer >= 1, got {self.values[key]}")
        seed = self.values["seed"]
        if not isinstance(seed, (int, np.integer)) or not (0 <= seed < 2**64):
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {seed}")
        try:
            make_params(self.values["gamma"])
        except DomainError as err:
            raise ConfigError(str(err))
        if self.values["verify_scale"] <= 0:
            raise ConfigError("verify_scale must be positive")
        return self

    @property
    def params(self):
        return make_params(self.values["gamma"])

    def resolved(self):
        # every derived default filled in
        out = json.loads(json.dumps(self.values, default=float))
        params = self.params
        if out["alpha"] is None:
            out["alpha"] = params.bm_correlation
        if out["epsilon_reg"] is None:
            out["epsilon_reg"] = 4.0 * 2.0 * np.pi / out["n_theta"]
        if out["c0"] is None:
            out["c0"] = stable_jump_constant(1.5)
        if out["output_dir"] is None:
            out["output_dir"] = os.environ.get(OUTPUT_DIR_ENV, "lqg_mc_out")
        out["threads"] = resolve_threads(out["threads"])
        trunc = out["truncations"]
        if trunc["sphere"]["height_floor"] is None:
            trunc["sphere"]["height_floor"] = -10.0 / params.gamma
        if trunc["sphere"]["min_max"] is None:
            trunc["sphere"]["min_max"] = window_min_max(
                params, trunc["sphere"]["area_window"][0], 0.5, trunc["sphere"]["height_floor"]
            )
        if trunc["bottleneck"]["r"] is None:
            trunc["bottleneck"]["r"] = -8.0 / params.gamma
        return out

    def to_dict(self):
        return json.loads(json.dumps(self.values, default=float))

    def print_info(self):
        for key, val in self.resolved().items():
            if key != "truncations":
                print(f"{key}\t: {val}")
        for module, entries in self.values["truncations"].items():
            print(f"{module}\t: {entries}")
        print("-----------------")


def load_config(config_file=None, overrides=None, truncation_flags=()):
    config = RunConfig() if config_file is None else RunConfig.from_json(config_file)
    if overrides:
        config.update({k: v for k, v in overrides.items() if v is not None})
    for text in truncation_flags or ():
        config.set_truncation_flag(text)
    return config.check()
