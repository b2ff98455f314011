"""Experiment configuration: strict JSON with named presets.

Configuration files are plain JSON (nested key/value); unknown keys are
rejected everywhere so a typo cannot silently change an experiment.  CLI
flags (--out, --workers) override file values; --preset selects a built-in
configuration and an optional --config file is deep-merged on top.
"""

from __future__ import annotations

import copy
import json

HOUR = 3600.0


class ConfigError(ValueError):
    pass


_VISCOSITY_KEYS = {"order", "coeff"}
_STEPPER_KEYS = {"M", "dt", "scheme", "viscosity", "settls_mode",
                 "coriolis_treatment"}
_PINT_KEYS = {"nlevels", "cfactor", "nrelax", "max_iters", "chunk_size",
              "cycle", "coarse"}
_COARSE_KEYS = {"M", "scheme", "viscosity", "settls_mode"}
_DIAG_KEYS = {"rnorms", "spectrum_iterations", "l2"}
_SCAN_KEYS = {"name", "scheme", "xi_l", "variant", "re_axis", "im_axis", "pint"}
_SCAN_PINT_KEYS = {"n", "k", "nf", "nc", "nrelax", "fine_scheme", "coarse_scheme"}
_VISC_TABLE_KEYS = {"orders", "truncations", "tau_hours", "dt", "damping"}
_DAMPING_KEYS = {"q", "nu", "M", "dt"}
_GEOMETRY_KEYS = {"radius_a", "omega", "gravity_g"}
_TOP_KEYS = {"scenario", "geometry", "T", "fine", "pint", "reference",
             "dt_sweep", "diagnostics", "stability", "viscosity"}


def _check_keys(section: dict, allowed: set, path: str):
    if not isinstance(section, dict):
        raise ConfigError(f"{path}: expected an object")
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")


def validate(cfg: dict) -> dict:
    """Validate nesting and key names; returns the config unchanged."""
    _check_keys(cfg, _TOP_KEYS, "config")
    if "geometry" in cfg:
        _check_keys(cfg["geometry"], _GEOMETRY_KEYS, "geometry")
    for key in ("fine", "reference"):
        if key in cfg:
            _check_keys(cfg[key], _STEPPER_KEYS, key)
            if "viscosity" in cfg[key]:
                _check_keys(cfg[key]["viscosity"], _VISCOSITY_KEYS,
                            f"{key}.viscosity")
    if "pint" in cfg:
        _check_keys(cfg["pint"], _PINT_KEYS, "pint")
        if "coarse" in cfg["pint"]:
            _check_keys(cfg["pint"]["coarse"], _COARSE_KEYS, "pint.coarse")
            if "viscosity" in cfg["pint"]["coarse"]:
                _check_keys(cfg["pint"]["coarse"]["viscosity"],
                            _VISCOSITY_KEYS, "pint.coarse.viscosity")
    if "diagnostics" in cfg:
        _check_keys(cfg["diagnostics"], _DIAG_KEYS, "diagnostics")
    if "stability" in cfg:
        _check_keys(cfg["stability"], {"scans"}, "stability")
        for i, scan in enumerate(cfg["stability"].get("scans", [])):
            _check_keys(scan, _SCAN_KEYS, f"stability.scans[{i}]")
            if "pint" in scan:
                _check_keys(scan["pint"], _SCAN_PINT_KEYS,
                            f"stability.scans[{i}].pint")
    if "viscosity" in cfg:
        _check_keys(cfg["viscosity"], _VISC_TABLE_KEYS, "viscosity")
        for i, d in enumerate(cfg["viscosity"].get("damping", [])):
            _check_keys(d, _DAMPING_KEYS, f"viscosity.damping[{i}]")
    return cfg


def _deep_merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def load(path=None, preset=None) -> dict:
    """Resolve preset and/or file into one validated configuration."""
    if path is None and preset is None:
        raise ConfigError("provide --config and/or --preset")
    cfg: dict = {}
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; "
                              f"available: {sorted(PRESETS)}")
        cfg = copy.deepcopy(PRESETS[preset])
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                file_cfg = json.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file {path} not found") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path}: {exc}") from None
        cfg = _deep_merge(cfg, file_cfg)
    return validate(cfg)


PRESETS = {
    # scaled reproduction of the Gaussian-bumps convergence experiment
    "bumps-pint-desk": {
        "scenario": "gaussian_bumps",
        "T": 6.0 * HOUR,
        "fine": {"M": 64, "dt": 240.0, "scheme": "imex",
                 "viscosity": {"order": 2, "coeff": 0.0}},
        "pint": {"nlevels": 2, "cfactor": 2, "nrelax": 0, "max_iters": 6,
                 "chunk_size": 0, "cycle": "F_then_V",
                 "coarse": {"M": 32, "scheme": "imex",
                            "viscosity": {"order": 2, "coeff": 1.0e5}}},
        "diagnostics": {"rnorms": [8, 32], "spectrum_iterations": [0, 5],
                        "l2": True},
    },
    # aggressive 3-level variant whose convergence is reported, not asserted
    "bumps-pint-aggressive": {
        "scenario": "gaussian_bumps",
        "T": 3.2 * HOUR,
        "fine": {"M": 64, "dt": 240.0, "scheme": "imex",
                 "viscosity": {"order": 2, "coeff": 0.0}},
        "pint": {"nlevels": 3, "cfactor": 4, "nrelax": 0, "max_iters": 5,
                 "chunk_size": 0, "cycle": "F_then_V",
                 "coarse": {"M": 32, "scheme": "imex",
                            "viscosity": {"order": 2, "coeff": 1.0e5}}},
        "diagnostics": {"rnorms": [8, 32], "spectrum_iterations": [0, 5],
                        "l2": False},
    },
    # SL-SI-SETTLS on the coarse level
    "bumps-pint-settls": {
        "scenario": "gaussian_bumps",
        "T": 6.0 * HOUR,
        "fine": {"M": 64, "dt": 240.0, "scheme": "imex",
                 "viscosity": {"order": 2, "coeff": 0.0}},
        "pint": {"nlevels": 2, "cfactor": 2, "nrelax": 0, "max_iters": 6,
                 "chunk_size": 0, "cycle": "F_then_V",
                 "coarse": {"M": 32, "scheme": "sl_si_settls",
                            "viscosity": {"order": 2, "coeff": 1.0e6}}},
        "diagnostics": {"rnorms": [8, 32], "spectrum_iterations": [0, 5],
                        "l2": False},
    },
    # time-step sweep against a refined reference (serial protocol)
    "bumps-serial-sweep": {
        "scenario": "gaussian_bumps",
        "T": 2.0 * HOUR,
        "fine": {"M": 32, "dt": 240.0, "scheme": "imex",
                 "viscosity": {"order": 2, "coeff": 0.0}},
        "reference": {"M": 48, "dt": 30.0, "scheme": "imex",
                      "viscosity": {"order": 2, "coeff": 0.0}},
        "dt_sweep": [1800.0, 900.0, 450.0, 225.0],
        "diagnostics": {"rnorms": [8, 16], "spectrum_iterations": [], "l2": True},
    },
    # unstable jet at desk scale
    "jet-pint-desk": {
        "scenario": "unstable_jet",
        "T": 12.0 * HOUR,
        "fine": {"M": 64, "dt": 240.0, "scheme": "imex",
                 "viscosity": {"order": 2, "coeff": 0.0}},
        "pint": {"nlevels": 2, "cfactor": 2, "nrelax": 0, "max_iters": 5,
                 "chunk_size": 0, "cycle": "F_then_V",
                 "coarse": {"M": 32, "scheme": "imex",
                            "viscosity": {"order": 4, "coeff": 1.0e16}}},
        "diagnostics": {"rnorms": [8, 32], "spectrum_iterations": [0, 5],
                        "l2": False},
    },
    # stability-region protocol: serial schemes, Parareal iterations,
    # two-level MGRIT relaxation sweep
    "stability-paper": {
        "stability": {"scans": (
            [{"name": f"serial_imex_xl{tag}", "scheme": "imex",
              "xi_l": [0.0, mult]}
             for tag, mult in [("0", 0.0), ("5e3", 5e3), ("1e4", 1e4),
                               ("2.5e4", 2.5e4)]]
            + [{"name": f"serial_settls_xl{tag}", "scheme": "settls",
                "xi_l": [0.0, mult]}
               for tag, mult in [("0", 0.0), ("1e4", 1e4)]]
            + [{"name": f"parareal_imex_k{k}", "scheme": "imex",
                "xi_l": [0.0, 0.0],
                "pint": {"n": 100, "k": k, "nf": 2, "nc": 1, "nrelax": 0,
                         "fine_scheme": "imex", "coarse_scheme": "imex"}}
               for k in (0, 1, 5, 10)]
            + [{"name": f"parareal_settls_k{k}", "scheme": "imex",
                "xi_l": [0.0, 0.0],
                "pint": {"n": 100, "k": k, "nf": 2, "nc": 1, "nrelax": 0,
                         "fine_scheme": "imex", "coarse_scheme": "settls"}}
               for k in (0, 1, 5)]
            + [{"name": f"mgrit_imex_nr{nr}", "scheme": "imex",
                "xi_l": [0.0, 0.0],
                "pint": {"n": 100, "k": 5, "nf": 2, "nc": 1, "nrelax": nr,
                         "fine_scheme": "imex", "coarse_scheme": "imex"}}
               for nr in (0, 1, 2, 3)]
        )},
    },
    # viscosity coefficient and damping-factor tables
    "viscosity-appendix": {
        "viscosity": {
            "orders": [2, 4, 6],
            "truncations": [51, 128],
            "tau_hours": [0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0],
            "dt": 120.0,
            "damping": [
                {"q": 2, "nu": 1.0e5, "M": 128, "dt": 120.0},
                {"q": 2, "nu": 1.0e6, "M": 128, "dt": 120.0},
                {"q": 4, "nu": 1.0e15, "M": 128, "dt": 120.0},
                {"q": 4, "nu": 1.0e16, "M": 128, "dt": 120.0},
                {"q": 6, "nu": 1.0e25, "M": 128, "dt": 120.0},
                {"q": 6, "nu": 1.0e26, "M": 128, "dt": 120.0},
            ],
        },
    },
}

# the xi_l entry of a stability scan is [re, im_multiplier]: the imaginary
# part is a multiple of the characteristic gravity-mode value
# xi_l_tilde = i*sqrt(phibar)/a with phibar = 1e5 m^2/s^2 on the Earth.
