"""The two worked case studies as config dictionaries.

``SYS_A`` is the 2-state system with constant couplings, ``SYS_B`` the
3-state system with polynomial couplings. The committed files under
``configs/`` are these dictionaries serialized verbatim.
"""

from __future__ import annotations

import copy
import math

from .config import config_from_dict

SYS_A = {
    "dimension": 2,
    "disturbance_dim": 1,
    "control_dim": 1,
    "value_function": "0.5*x1^2 + 0.5*x2^2",
    "g1": [["1"], ["5"]],
    "g2": [["-1"], ["0"]],
    "E": [["10", "0"], ["0", "20"]],
    "gamma": ["-x2", "x1"],
    "alpha1": 10.0,
    "alpha2": 20.0,
    "b": math.sqrt(0.5),
    "simulation": {
        "x0": [3.0, -2.0],
        "T": 2.0,
        "dt": 1e-3,
        "control_mode": "open_loop",
        "disturbance_mode": "zero",
    },
    "verify": {"samples": 1000, "box_half_width": 10.0, "seed": 42},
}

SYS_B = {
    "dimension": 3,
    "disturbance_dim": 1,
    "control_dim": 1,
    "value_function": "0.5*x1^2 + 0.5*x2^2 + 0.5*x3^2",
    "g1": [["-x2^2"], ["x1*x2"], ["x3"]],
    "g2": [["x3"], ["1"], ["-x2"]],
    "E": [["10", "0", "0"], ["0", "5", "0"], ["0", "0", "5"]],
    "gamma": ["-x2", "x1", "0"],
    "alpha1": 5.0,
    "alpha2": 10.0,
    "b": math.sqrt(0.5),
    "simulation": {
        "x0": [5.0, 4.0, -1.0],
        "T": 10.0,
        "dt": 1e-3,
        "control_mode": "optimal",
        "disturbance_mode": "uniform",
        "lo": -5.0,
        "hi": 5.0,
        "seed": 7,
    },
    "verify": {"samples": 1000, "box_half_width": 10.0, "seed": 42},
}

OPEN_LOOP_STATES = ((3.0, -2.0), (-5.0, 5.0), (1.0, 4.0))


def case_config(name: str):
    table = {"sysA-2d": SYS_A, "sysB-3d": SYS_B}
    return config_from_dict(copy.deepcopy(table[name]))


def sys_a_spec():
    return case_config("sysA-2d").spec


def sys_b_spec():
    return case_config("sysB-3d").spec
