"""Gaussian patch data and sample-level network quantities.

The network under study takes an input of k non-overlapping patches of
dimension d, stacked as a matrix Z of i.i.d. standard normal entries, applies
a shared filter w to every patch, and counts how many patch responses are
strictly positive (binarized ReLU).  Responses are generated by a unit-norm
teacher filter, so zero loss is attainable.  Because the activation has zero
derivative almost everywhere, training uses a straight-through surrogate
gradient with the regular ReLU subderivative in place of the activation's.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "sample_patches",
    "Dataset",
    "forward",
    "sample_loss",
    "coarse_grad_sample",
    "coarse_grad_batch",
    "empirical_risk",
    "empirical_coarse_grad",
]

SQRT_2_OVER_PI = np.sqrt(2.0 / np.pi)

DATASET_FORMAT_VERSION = 1


def sample_patches(k: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """Draw one k x d patch matrix of i.i.d. N(0, 1) entries from ``rng``."""
    if k < 1 or d < 1:
        raise ValueError(f"patch dimensions must be >= 1, got k={k}, d={d}")
    return rng.standard_normal((k, d))


@dataclass(frozen=True)
class Dataset:
    """An ordered collection of patch matrices, reproducible from its seed.

    ``samples`` has shape (m, k, d).  The same (seed, k, d, m) always
    regenerates identical samples; empirical averages over a dataset are
    computed in fixed index order, so they are bit-reproducible as well.
    """

    samples: np.ndarray
    seed: int

    def __post_init__(self):
        if self.samples.ndim != 3:
            raise ValueError("samples must have shape (m, k, d)")
        if self.samples.shape[0] < 1:
            raise ValueError("dataset must contain at least one sample")

    @property
    def m(self) -> int:
        return self.samples.shape[0]

    @property
    def k(self) -> int:
        return self.samples.shape[1]

    @property
    def d(self) -> int:
        return self.samples.shape[2]

    @classmethod
    def generate(cls, k: int, d: int, m: int, seed: int) -> "Dataset":
        if m < 1:
            raise ValueError(f"dataset size must be >= 1, got m={m}")
        rng = np.random.default_rng(seed)
        return cls(samples=rng.standard_normal((m, k, d)), seed=seed)

    def save(self, path) -> None:
        """Write the dataset as a versioned .npz file.

        Format v1: arrays ``samples`` (m, k, d float64), scalar ``seed``
        (uint64), scalar ``version``.  k, d, m are implied by the shape.
        """
        np.savez(path, version=np.uint32(DATASET_FORMAT_VERSION),
                 seed=np.uint64(self.seed), samples=self.samples)

    @classmethod
    def load(cls, path) -> "Dataset":
        with np.load(path) as f:
            version = int(f["version"])
            if version != DATASET_FORMAT_VERSION:
                raise ValueError(f"unsupported dataset format version {version}")
            return cls(samples=f["samples"], seed=int(f["seed"]))


def _check_dims(w, Z):
    if Z.shape[-1] != w.shape[0]:
        raise ValueError(f"filter dimension {w.shape[0]} does not match patch dimension {Z.shape[-1]}")


def forward(w, Z) -> int:
    """Network output: the number of patches with strictly positive response.

    Invariant under positive rescaling of ``w``; forward(0, Z) = 0 because
    the activation uses a strict inequality.
    """
    w = np.asarray(w, dtype=float)
    Z = np.asarray(Z, dtype=float)
    _check_dims(w, Z)
    return int(np.count_nonzero(Z @ w > 0.0))


def sample_loss(w, wstar, Z) -> float:
    """Half squared mismatch of the student and teacher patch counts."""
    diff = forward(w, Z) - forward(wstar, Z)
    return 0.5 * diff * diff


def coarse_grad_sample(w, wstar, Z) -> np.ndarray:
    """Straight-through surrogate gradient of the sample loss at ``w``.

    Rows of Z with non-positive student response contribute nothing (the
    ReLU subderivative gates them out).
    """
    w = np.asarray(w, dtype=float)
    wstar = np.asarray(wstar, dtype=float)
    Z = np.asarray(Z, dtype=float)
    _check_dims(w, Z)
    _check_dims(wstar, Z)
    fired = Z @ w > 0.0
    mismatch = fired.astype(float) - (Z @ wstar > 0.0)
    return SQRT_2_OVER_PI * (Z.T @ (fired * mismatch))


def coarse_grad_batch(w, wstar, samples: np.ndarray) -> np.ndarray:
    """Per-sample surrogate gradients for a (m, k, d) batch, shape (m, d)."""
    w = np.asarray(w, dtype=float)
    wstar = np.asarray(wstar, dtype=float)
    _check_dims(w, samples)
    _check_dims(wstar, samples)
    fired = samples @ w > 0.0
    mismatch = fired.astype(float) - (samples @ wstar > 0.0)
    return SQRT_2_OVER_PI * np.einsum("mkd,mk->md", samples, fired * mismatch)


def empirical_risk(w, wstar, dataset: Dataset) -> float:
    """Mean sample loss over the dataset, summed in fixed index order."""
    counts_w = np.count_nonzero(dataset.samples @ np.asarray(w, float) > 0.0, axis=1)
    counts_s = np.count_nonzero(dataset.samples @ np.asarray(wstar, float) > 0.0, axis=1)
    diff = (counts_w - counts_s).astype(float)
    return float(np.sum(0.5 * diff * diff) / dataset.m)


def empirical_coarse_grad(w, wstar, dataset: Dataset) -> np.ndarray:
    """Mean surrogate gradient over the dataset, fixed summation order."""
    grads = coarse_grad_batch(w, wstar, dataset.samples)
    return np.sum(grads, axis=0) / dataset.m
