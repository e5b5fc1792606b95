"""PCA whitening for anisotropic embedding clouds.

Fit once over all token embeddings of a dataset, then apply to every bundle,
so distances stay comparable across pairs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch
from .measures import SentenceBundle

EIGENVALUE_FLOOR = 1e-8


@dataclass(frozen=True)
class WhiteningTransform:
    """Affine map y = transform @ (x - mean) giving identity sample covariance
    on the fitting population (up to the eigenvalue floor when degenerate)."""

    mean: np.ndarray
    transform: np.ndarray
    regularized: bool = False

    @property
    def dim(self) -> int:
        return self.mean.size


def fit_whitening(rows) -> WhiteningTransform:
    """Fit a PCA whitening transform to a population of embedding rows.

    Rank-deficient covariances (fewer than d+1 rows, or collinear data) get
    their eigenvalues floored at 1e-8 and the transform flagged
    ``regularized``.
    """
    x = np.asarray(rows, dtype=float)
    if x.ndim != 2:
        raise DimensionMismatch(f"expected a 2-D row matrix, got shape {x.shape}")
    n, d = x.shape
    if n < 2:
        raise ValueError(f"need at least 2 rows to estimate covariance, got {n}")
    mean = x.mean(axis=0)
    cov = np.cov(x, rowvar=False).reshape(d, d)
    eigvals, eigvecs = np.linalg.eigh(cov)
    regularized = bool(np.any(eigvals < EIGENVALUE_FLOOR)) or n < d + 1
    eigvals = np.maximum(eigvals, EIGENVALUE_FLOOR)
    transform = (eigvecs / np.sqrt(eigvals)).T  # rows scaled: Lambda^{-1/2} E^T
    return WhiteningTransform(mean=mean, transform=transform, regularized=regularized)


def whiten_rows(rows: np.ndarray, t: WhiteningTransform) -> np.ndarray:
    return (np.asarray(rows, dtype=float) - t.mean) @ t.transform.T


def apply_whitening(bundle: SentenceBundle, t: WhiteningTransform) -> SentenceBundle:
    """Whitened copy of a bundle: embeddings change, tokens and the attention
    matrix do not.  Precomputed norm weights are dropped (they describe the
    raw embeddings)."""
    if bundle.dim != t.dim:
        raise DimensionMismatch(
            f"bundle {bundle.id!r} has d={bundle.dim}, transform expects d={t.dim}"
        )
    return SentenceBundle(
        id=bundle.id,
        tokens=list(bundle.tokens),
        embeddings=whiten_rows(bundle.embeddings, t),
        sam=bundle.sam.copy(),
        norm_weights=None,
    )
