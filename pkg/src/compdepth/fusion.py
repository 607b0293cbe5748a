"""Uncertainty-weighted soft fusion of depth branches.

Each branch carries an uncertainty sigma; its weight is the normalized
inverse uncertainty w_i = (1/sigma_i) / sum_j (1/sigma_j), and the fused
depth is the weighted sum. Normalized weights make the fusion a convex
combination: the result always lies between the smallest and largest branch
depth, and scaling every sigma by a common factor changes nothing.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import AllBranchesInvalid, EmptyEnsemble, LengthMismatch, NonPositiveSigma


@dataclass(frozen=True)
class FusedDepth:
    """Fusion result: the fused depth and the weights that produced it."""

    z_soft: float
    weights: tuple[float, ...]


def soft_fuse(branches: Sequence[tuple[float, float]]) -> FusedDepth:
    """Fuse (z, sigma) pairs into a single depth.

    Raises:
        EmptyEnsemble: no branches given.
        NonPositiveSigma: any sigma <= 0.
    """
    branches = list(branches)
    if not branches:
        raise EmptyEnsemble("fusion needs at least one branch")
    for _, sigma in branches:
        if sigma <= 0:
            raise NonPositiveSigma(f"sigma must be positive, got {sigma}")
    inverse = [1.0 / sigma for _, sigma in branches]
    total = sum(inverse)
    weights = tuple(w / total for w in inverse)
    z_soft = sum(w * z for w, (z, _) in zip(weights, branches))
    return FusedDepth(z_soft=z_soft, weights=weights)


def fuse_with_mask(branches: Sequence[tuple[float, float]],
                   valid: Sequence[bool]) -> FusedDepth:
    """soft_fuse restricted to branches whose mask entry is True.

    The returned weights cover the surviving branches only (in order).

    Raises AllBranchesInvalid when the mask excludes everything.
    """
    branches = list(branches)
    valid = list(valid)
    if len(branches) != len(valid):
        raise LengthMismatch(f"{len(branches)} branches vs {len(valid)} mask entries")
    kept = [b for b, ok in zip(branches, valid) if ok]
    if not kept:
        raise AllBranchesInvalid("mask excludes every branch")
    return soft_fuse(kept)


def soft_fuse_array(z: np.ndarray, sigma: np.ndarray, axis: int = -1) -> np.ndarray:
    """Vectorized soft fusion along an axis of matching z / sigma arrays.

    Used by the sweep experiments, where the same branches are fused for
    tens of thousands of objects at once.
    """
    z = np.asarray(z, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if z.shape != sigma.shape:
        raise LengthMismatch(f"z shape {z.shape} vs sigma shape {sigma.shape}")
    if z.shape[axis] == 0:
        raise EmptyEnsemble("fusion needs at least one branch")
    if np.any(sigma <= 0):
        raise NonPositiveSigma("all sigmas must be positive")
    inverse = 1.0 / sigma
    weights = inverse / inverse.sum(axis=axis, keepdims=True)
    return (weights * z).sum(axis=axis)
