"""Initial-profile catalog.

Each profile documents the largest Gevrey class exponent s for which the
exponential-decay hypothesis exp(eps <x>^{1/s}) u0 in H^theta can hold:

* gaussian  -- s = 1/2 (decays like a Gaussian, the endpoint class);
* sech      -- s = 1 (plain exponential decay);
* exp-bracket(eps, s) -- s by construction;
* poly      -- none; polynomial decay sits outside every exponential class
  and serves as the negative control.
"""

from __future__ import annotations

import numpy as np

from .grid import Field, Grid1D

PROFILE_KINDS = ("gaussian", "sech", "exp-bracket", "poly")


_PROFILE_PARAMS = {
    "gaussian": {"width": 1.0},
    "sech": {"scale": 1.0},
    "exp-bracket": {"eps": 1.0, "s": 1.0},
    "poly": {"power": 3.0},
}


def profile(grid: Grid1D, kind: str, **params) -> Field:
    """Sample a catalog profile on the grid.

    gaussian(width=1):        exp(-x^2 / (2 width^2))
    sech(scale=1):            sech(x / scale)
    exp-bracket(eps=1, s=1):  exp(-eps <x>^{1/s})
    poly(power=3):            <x>^{-power}
    """
    if kind not in _PROFILE_PARAMS:
        raise ValueError(f"unknown profile kind {kind!r}; choose from {PROFILE_KINDS}")
    extras = set(params) - set(_PROFILE_PARAMS[kind])
    if extras:
        raise ValueError(f"unknown parameters for {kind!r}: {sorted(extras)}")
    p = {**_PROFILE_PARAMS[kind], **{k: float(v) for k, v in params.items()}}
    x = grid.points
    if kind == "gaussian":
        return Field(grid, np.exp(-(x**2) / (2.0 * p["width"] ** 2)))
    if kind == "sech":
        return Field(grid, 1.0 / np.cosh(x / p["scale"]))
    if kind == "exp-bracket":
        return Field(grid, np.exp(-p["eps"] * (1.0 + x**2) ** (1.0 / (2.0 * p["s"]))))
    return Field(grid, (1.0 + x**2) ** (-p["power"] / 2.0))


def class_exponent(kind: str, **params) -> float | None:
    """Largest s with exp(eps<x>^{1/s}) u0 in H^theta, or None (poly)."""
    if kind == "gaussian":
        return 0.5
    if kind == "sech":
        return 1.0
    if kind == "exp-bracket":
        return float(params.get("s", 1.0))
    if kind == "poly":
        return None
    raise ValueError(f"unknown profile kind {kind!r}")
