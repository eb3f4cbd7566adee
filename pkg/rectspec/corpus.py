from __future__ import annotations

"""Builtin curves and strips, addressed as `builtin:<name>` on the command line."""

import cmath
import math
from typing import Callable, Dict, List

from . import curve_model as cm
from .curve_model import JordanCurve
from .strip_mesh import DomeStrip

BUILTIN_PREFIX = "builtin:"
RANDOM_SEEDS = (1, 2, 3, 4, 5)

CURVES: Dict[str, Callable[[], JordanCurve]] = {
    "circle": cm.unit_circle,
    "ellipse-2-1": lambda: cm.ellipse(2.0, 1.0, name="ellipse-2-1"),
    "ellipse-4-1": lambda: cm.ellipse(4.0, 1.0, name="ellipse-4-1"),
    **{f"random-{s}": (lambda s=s: cm.random_smooth_curve(s)) for s in RANDOM_SEEDS},
}

DOMES: Dict[str, DomeStrip] = {
    "dome-1": DomeStrip(1.0, 1.0 + 0j),
    "dome-2": DomeStrip(2.0, cmath.exp(2j * math.pi / 3)),
    "dome-3": DomeStrip(3.0, cmath.exp(4j * math.pi / 3)),
    "dome-2-rot-half": DomeStrip(2.0, -1.0 + 0j),
}


def is_builtin(ref: str) -> bool:
    return ref.startswith(BUILTIN_PREFIX)


def builtin_name(ref: str) -> str:
    return ref[len(BUILTIN_PREFIX):] if is_builtin(ref) else ref


def curve(name: str) -> JordanCurve:
    key = builtin_name(name)
    if key not in CURVES:
        raise KeyError(f"unknown builtin curve {name!r}; choose from {sorted(CURVES)}")
    return CURVES[key]()


def dome(name: str) -> DomeStrip:
    key = builtin_name(name)
    if key not in DOMES:
        raise KeyError(f"unknown builtin strip {name!r}; choose from {sorted(DOMES)}")
    return DOMES[key]


def random_corpus() -> List[JordanCurve]:
    return [curve(f"random-{s}") for s in RANDOM_SEEDS]
