"""Numerical witnesses for the commutator and product inequalities.

The inequalities assert the existence of uniform constants; no specific
value is checkable.  The witnesses therefore measure ratios

    lhs / (claimed majorant with constant 1)

over sampled corpora and assert STABILITY of the sup-ratio across
independent corpora, never a particular number.  Products are always
computed with 2x zero padding, so aliasing cannot leak into the ratios.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np

from .grid import (
    Field,
    Grid1D,
    bessel_potential,
    dealiased_multiply,
    derivative,
    l2_norm,
    sobolev_norm,
)


def random_resolved_field(
    grid: Grid1D,
    rng: np.random.Generator,
    bandwidth: float = 0.15,
    envelope_fraction: float = 0.125,
) -> Field:
    """A random band-limited field with a Gaussian decay envelope.

    Coefficients are complex standard normal on modes |k| <= bandwidth*N/2,
    then the field is localized by exp(-(x/w)^2) with w a fraction of the
    domain, keeping it both resolved and boundary-clean.
    """
    n = grid.num_points
    kmax = max(1, int(bandwidth * n / 2))
    coeffs = np.zeros(n, dtype=complex)
    live = (rng.standard_normal(2 * kmax + 1) + 1j * rng.standard_normal(2 * kmax + 1)) / math.sqrt(2)
    coeffs[: kmax + 1] = live[: kmax + 1]
    coeffs[-kmax:] = live[kmax + 1 :]
    samples = np.fft.ifft(coeffs) * n / math.sqrt(2 * kmax + 1)
    w = envelope_fraction * grid.length
    samples = samples * np.exp(-((grid.points / w) ** 2))
    return Field(grid, samples)


def sup_norm(f: Field) -> float:
    return float(np.abs(f.samples).max())


def kato_ponce_ratio(f: Field, g: Field, theta: float) -> float:
    """||<D>^t(fg) - f <D>^t g|| over the commutator majorant
    ||df||_inf ||g||_{t-1} + ||f||_t ||g||_inf."""
    if theta <= 0:
        raise ValueError("theta must be positive")
    fg = dealiased_multiply(f, g)
    commutator = bessel_potential(fg, theta) - dealiased_multiply(f, bessel_potential(g, theta))
    num = l2_norm(commutator)
    den = sup_norm(derivative(f)) * sobolev_norm(g, theta - 1.0) + sobolev_norm(
        f, theta
    ) * sup_norm(g)
    return num / den if den > 0 else 0.0


def _dealiased_product(fields: Sequence[Field]) -> Field:
    return reduce(dealiased_multiply, fields)


def leibniz_ratios(
    fields: Sequence[Field], multiplier_order: int, theta: float
) -> tuple[float, float]:
    """(chain_ratio, leibniz_ratio) for p(D) = <D>^m on a k-fold product.

    chain:   ||p(D) prod f_j||   vs  sum_v ||f_v||_m prod_{j!=v} ||f_j||_{theta-1}
    leibniz: ||p(D) prod f_j - sum_v prod_{j!=v} f_j p(D) f_v||
             vs  sum_v ||f_v||_{m-1} prod_{j!=v} ||f_j||_theta

    Needs k >= 2 factors, m >= 1 and theta > 3/2 (one dimension).
    """
    k = len(fields)
    if k < 2:
        raise ValueError("need at least two factors")
    if multiplier_order < 1:
        raise ValueError("multiplier order must be >= 1")
    if theta <= 1.5:
        raise ValueError("theta must exceed 3/2 in one dimension")
    product = _dealiased_product(fields)
    p_product = bessel_potential(product, multiplier_order)

    chain_den = 0.0
    leibniz_den = 0.0
    leibniz_num_field = p_product
    norms_theta = [sobolev_norm(f, theta) for f in fields]
    norms_thetam1 = [sobolev_norm(f, theta - 1.0) for f in fields]
    for v in range(k):
        others = [f for j, f in enumerate(fields) if j != v]
        chain_den += sobolev_norm(fields[v], float(multiplier_order)) * math.prod(
            norms_thetam1[j] for j in range(k) if j != v
        )
        leibniz_den += sobolev_norm(fields[v], float(multiplier_order - 1)) * math.prod(
            norms_theta[j] for j in range(k) if j != v
        )
        term = _dealiased_product(others + [bessel_potential(fields[v], multiplier_order)])
        leibniz_num_field = leibniz_num_field - term

    chain = l2_norm(p_product) / chain_den if chain_den > 0 else 0.0
    leibniz = l2_norm(leibniz_num_field) / leibniz_den if leibniz_den > 0 else 0.0
    return chain, leibniz


@dataclass(frozen=True)
class WitnessReport:
    """Ratio statistics over one corpus; sup_ratio is the fitted constant."""

    name: str
    trials: int
    ratios: tuple[float, ...]
    corpus: str
    seed: int

    def __post_init__(self) -> None:
        if len(self.ratios) != self.trials:
            raise ValueError("one ratio per trial")
        if any((not math.isfinite(r)) or r < 0 for r in self.ratios):
            raise ValueError("ratios must be finite and non-negative")

    @property
    def sup_ratio(self) -> float:
        return max(self.ratios)


def kato_ponce_witness(
    grid: Grid1D, theta: float, trials: int, seed: int
) -> WitnessReport:
    rng = np.random.default_rng(seed)
    ratios = []
    for _ in range(trials):
        f = random_resolved_field(grid, rng)
        g = random_resolved_field(grid, rng)
        ratios.append(kato_ponce_ratio(f, g, theta))
    corpus = f"band-limited gaussian-envelope N={grid.num_points} L={grid.length}"
    return WitnessReport("kato-ponce", trials, tuple(ratios), corpus, seed)


def leibniz_witness(
    grid: Grid1D,
    factor_count: int,
    multiplier_order: int,
    theta: float,
    trials: int,
    seed: int,
) -> tuple[WitnessReport, WitnessReport]:
    rng = np.random.default_rng(seed)
    chain_ratios = []
    leibniz_ratios_ = []
    for _ in range(trials):
        fields = [random_resolved_field(grid, rng) for _ in range(factor_count)]
        c, l = leibniz_ratios(fields, multiplier_order, theta)
        chain_ratios.append(c)
        leibniz_ratios_.append(l)
    corpus = f"band-limited gaussian-envelope N={grid.num_points} L={grid.length} k={factor_count}"
    return (
        WitnessReport("leibniz-chain", trials, tuple(chain_ratios), corpus, seed),
        WitnessReport("leibniz-split", trials, tuple(leibniz_ratios_), corpus, seed),
    )
