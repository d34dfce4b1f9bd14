"""Sparsity penalties and their exact proximal (thresholding) operators.

Three penalties are supported: the l1 norm, the l0 counting "norm", and the
transformed-l1 (TL1) penalty

    rho_a(x) = (a + 1)|x| / (a + |x|),    a > 0,

which interpolates l0 (a -> 0) and l1 (a -> infinity).  For each penalty the
scalar prox

    prox(x) = argmin_y  (1/2)(y - x)^2 + tau * rho(y)

is available in closed form: soft thresholding for l1, hard thresholding at
sqrt(2*tau) for l0, and a trigonometric formula for TL1.  A brute-force grid
minimizer is provided as an independent oracle for verifying the closed
forms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "PenaltySpec",
    "penalty_value",
    "prox_scalar",
    "prox_vector",
    "tl1_threshold",
    "brute_force_prox",
]

KINDS = ("l1", "l0", "tl1")


@dataclass(frozen=True)
class PenaltySpec:
    """Which sparsity penalty to use, plus the TL1 shape parameter ``a``.

    ``a`` is only consulted when ``kind == "tl1"``.
    """

    kind: str
    a: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown penalty kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "tl1" and not self.a > 0:
            raise ValueError(f"TL1 shape parameter must be positive, got a={self.a}")


def _check_tau(tau: float) -> float:
    tau = float(tau)
    if not tau > 0:
        raise ValueError(f"prox threshold strength must be positive, got tau={tau}")
    return tau


def penalty_value(spec: PenaltySpec, v) -> float:
    """Sum of the scalar penalty over the components of ``v``.

    Nonnegative, and zero exactly when ``v`` is the zero vector.
    """
    v = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(v)):
        raise ValueError("penalty_value requires finite input")
    if spec.kind == "l1":
        return float(np.sum(np.abs(v)))
    if spec.kind == "l0":
        return float(np.count_nonzero(v))
    av = np.abs(v)
    return float(np.sum((spec.a + 1.0) * av / (spec.a + av)))


def tl1_threshold(a: float, tau: float) -> float:
    """Dead-zone radius of the TL1 prox: prox(x) = 0 iff |x| <= t(a, tau)."""
    a = float(a)
    tau = _check_tau(tau)
    if not a > 0:
        raise ValueError(f"TL1 shape parameter must be positive, got a={a}")
    if tau <= a * a / (2.0 * (a + 1.0)):
        return tau * (a + 1.0) / a
    return np.sqrt(2.0 * tau * (a + 1.0)) - a / 2.0


def _tl1_g(a: float, tau: float, x):
    """Nonzero branch of the TL1 prox (valid for |x| above the threshold)."""
    ax = np.abs(x)
    # Analytically in [-1, 1] above threshold; clamp to absorb rounding.
    arg = np.clip(1.0 - 27.0 * tau * a * (a + 1.0) / (2.0 * (a + ax) ** 3), -1.0, 1.0)
    phi = np.arccos(arg)
    return np.sign(x) * (2.0 / 3.0 * (a + ax) * np.cos(phi / 3.0) - 2.0 * a / 3.0 + ax / 3.0)


def prox_scalar(spec: PenaltySpec, tau: float, x: float) -> float:
    """Exact scalar prox of the selected penalty at strength ``tau``."""
    tau = _check_tau(tau)
    x = float(x)
    if not np.isfinite(x):
        raise ValueError("prox_scalar requires finite input")
    if spec.kind == "l1":
        return float(np.sign(x) * max(abs(x) - tau, 0.0))
    if spec.kind == "l0":
        # Strict inequality: the zero branch is taken at |x| = sqrt(2*tau).
        return x if abs(x) > np.sqrt(2.0 * tau) else 0.0
    if abs(x) > tl1_threshold(spec.a, tau):
        return float(_tl1_g(spec.a, tau, x))
    return 0.0


def prox_vector(spec: PenaltySpec, tau: float, x) -> np.ndarray:
    """Componentwise prox; never decreases the number of zero entries."""
    tau = _check_tau(tau)
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("prox_vector requires finite input")
    if spec.kind == "l1":
        return np.sign(x) * np.maximum(np.abs(x) - tau, 0.0)
    if spec.kind == "l0":
        return np.where(np.abs(x) > np.sqrt(2.0 * tau), x, 0.0)
    return np.where(np.abs(x) > tl1_threshold(spec.a, tau), _tl1_g(spec.a, tau, x), 0.0)


def brute_force_prox(spec: PenaltySpec, tau: float, x: float,
                     lo: float, hi: float, step: float) -> float:
    """Grid-search oracle for the scalar prox.

    Evaluates (1/2)(y - x)^2 + tau * rho(y) on the integer multiples of
    ``step`` inside [lo, hi] and returns the minimizing grid point.  Building
    the grid on multiples of ``step`` guarantees that 0.0 is a candidate
    whenever lo <= 0 <= hi, which matters for l0 and TL1 where the dead-zone
    minimizer is exactly zero.  Exact ties are broken toward the value of
    smaller magnitude, then toward the smaller grid point.  The true
    minimizer is guaranteed to lie inside any interval containing
    [-|x|, |x|], since the prox shrinks toward zero.
    """
    tau = _check_tau(tau)
    if not lo < hi:
        raise ValueError(f"empty grid: lo={lo} must be < hi={hi}")
    if not step > 0:
        raise ValueError(f"grid step must be positive, got {step}")
    first = int(np.ceil(lo / step))
    last = int(np.floor(hi / step))
    if last < first:
        raise ValueError(f"no multiple of step={step} lies in [{lo}, {hi}]")
    grid = step * np.arange(first, last + 1)
    half_sq = 0.5 * (grid - x) ** 2
    if spec.kind == "l1":
        vals = half_sq + tau * np.abs(grid)
    elif spec.kind == "l0":
        vals = half_sq + tau * (grid != 0.0)
    else:
        ag = np.abs(grid)
        vals = half_sq + tau * (spec.a + 1.0) * ag / (spec.a + ag)
    ties = np.flatnonzero(vals == vals.min())
    best = ties[np.lexsort((grid[ties], np.abs(grid[ties])))[0]]
    return float(grid[best])
