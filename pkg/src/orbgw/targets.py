"""Built-in target geometries, written in the GeometryConfig schema."""

from __future__ import annotations

import copy

from .chowring import TargetGeometry, build_target

# Weighted projective plane P(1,1,2). h = c1(O(1)), p the point class,
# g the fundamental class of the twisted sector (age 1) at the Z/2 point.
# c1(T) = 4h, so one half-unit of degree carries c1 = 2 and h = 1/2.
P112 = {
    "name": "p112",
    "dim": 2,
    "degree_step": "1/2",
    "c1_per_step": "2",
    "basis": [
        {"name": "1", "cr_degree": 0, "sector": "untwisted"},
        {"name": "h", "cr_degree": 1, "sector": "untwisted"},
        {"name": "g", "cr_degree": 1, "sector": "twisted"},
        {"name": "p", "cr_degree": 2, "sector": "untwisted"},
    ],
    "pairing": [
        [0, 0, 0, 1],
        [0, "1/2", 0, 0],
        [0, 0, "1/2", 0],
        [1, 0, 0, 0],
    ],
    "products": {
        "h·h": {"p": "1/2"},
        "g·g": {"p": "1/2"},
        "h·g": {},
    },
    "divisor_per_step": {"h": "1/2"},
    "relations": [{"h·h": 1, "g·g": -1}],
    "seeds": [{"insertions": ["p", "g"], "degree_steps": 1, "value": "1"}],
    "vanishing_rules": ["deg0-twisted-pair", "deg0-twisted-divisor", "deg0-n4", "parity"],
    # only the degree-1/2 sector is seeded
    "solve_max_degree_steps": 1,
    "audit": {"extras_class": "g", "max_extras": 9, "degree_steps": [1]},
}

P2 = {
    "name": "p2",
    "dim": 2,
    "degree_step": "1",
    "c1_per_step": "3",
    "basis": [
        {"name": "1", "cr_degree": 0, "sector": "untwisted"},
        {"name": "H", "cr_degree": 1, "sector": "untwisted"},
        {"name": "P", "cr_degree": 2, "sector": "untwisted"},
    ],
    "pairing": [
        [0, 0, 1],
        [0, 1, 0],
        [1, 0, 0],
    ],
    "products": {"H·H": {"P": 1}},
    "divisor_per_step": {"H": 1},
    "relations": [{"H·H·H": 1}],
    "seeds": [{"insertions": ["P", "P"], "degree_steps": 1, "value": "1"}],
    "vanishing_rules": ["deg0-n4"],
    "audit": {"extras_class": "P", "max_extras": 14, "degree_steps": [0, 1, 2, 3, 4]},
}

BUILTIN_CONFIGS = {"p112": P112, "p2": P2}

_built: dict[str, TargetGeometry] = {}


def builtin_config(name: str) -> dict:
    return copy.deepcopy(BUILTIN_CONFIGS[name])


def builtin(name: str) -> TargetGeometry:
    if name not in _built:
        _built[name] = build_target(builtin_config(name))
    return _built[name]


def p112() -> TargetGeometry:
    return builtin("p112")


def p2() -> TargetGeometry:
    return builtin("p2")
