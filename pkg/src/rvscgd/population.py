"""Closed-form population quantities for the Gaussian-input model.

With i.i.d. standard normal patches, the population risk depends on the
filter only through its angle to the teacher: f(w) = k * theta(w, w*) / (2*pi).
Both the true gradient of f and the expectation of the straight-through
surrogate gradient have closed forms; for unit-norm filters the expected
surrogate gradient collapses to (k / 2*pi) * (w - w*).
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "angle",
    "population_loss",
    "true_grad",
    "expected_coarse_grad",
    "grad_correlation",
]

ZERO_TOL = 1e-12


def _unit(v, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n <= ZERO_TOL:
        raise ValueError(f"degenerate angle: {name} has near-zero norm {n}")
    return v / n


def angle(a, b) -> float:
    """Angle in [0, pi] between two vectors, scale invariant.

    Equals arccos of the clamped normalized inner product; computed via the
    atan2 half-angle form, which keeps full relative accuracy near 0 and pi
    where arccos loses digits.  Raises on (near-)zero-norm input.
    """
    ah = _unit(a, "first vector")
    bh = _unit(b, "second vector")
    return 2.0 * np.arctan2(np.linalg.norm(ah - bh), np.linalg.norm(ah + bh))


def population_loss(w, wstar, k: int) -> float:
    """Population risk k * theta(w, w*) / (2*pi).

    Defined through the angle, hence valid (and scale invariant) for any
    nonzero ``w``, matching the scale invariance of the forward pass.
    """
    return k * angle(w, wstar) / (2.0 * np.pi)


def true_grad(w, wstar, k: int) -> np.ndarray:
    """Gradient of the population risk at ``w``.

    Singular at theta in {0, pi} where the normalized rejection of the
    teacher from ``w`` is undefined.
    """
    w = np.asarray(w, dtype=float)
    norm_w = np.linalg.norm(w)
    if norm_w <= ZERO_TOL:
        raise ValueError("singular gradient: w has near-zero norm")
    wstar = np.asarray(wstar, dtype=float)
    what = w / norm_w
    reject = wstar - (what @ wstar) * what
    norm_r = np.linalg.norm(reject)
    if norm_r <= ZERO_TOL:
        raise ValueError("singular gradient: theta(w, w*) is 0 or pi")
    return (-k / (2.0 * np.pi * norm_w)) * (reject / norm_r)


def expected_coarse_grad(w, wstar, k: int) -> np.ndarray:
    """Expectation over Gaussian patches of the surrogate gradient.

    Uses the general closed form valid for any nonzero ``w``; for unit
    ``w`` it agrees with (k / 2*pi) * (w - w*) to rounding.  Undefined at
    theta = pi, where the bisector direction degenerates.
    """
    what = _unit(w, "w")
    wstar = np.asarray(wstar, dtype=float)
    theta = angle(what, wstar)
    mid = what + wstar
    norm_mid = np.linalg.norm(mid)
    if norm_mid <= ZERO_TOL:
        raise ValueError("singular direction: theta(w, w*) = pi")
    return (k / np.pi) * (what - np.cos(theta / 2.0) * mid / norm_mid)


def grad_correlation(w, wstar, k: int) -> float:
    """Inner product of the expected surrogate gradient and the true gradient.

    Strictly positive for theta in (0, pi), so the negated surrogate is a
    descent direction for the population risk; vanishes proportionally to
    sin(theta) at the endpoints.
    """
    return float(expected_coarse_grad(w, wstar, k) @ true_grad(w, wstar, k))
