"""Eigenface basis extraction and projection.

The covariance of n centered d-vectors is never materialized on the batch
path: eigenvectors come from the n x n inner-product matrix and are mapped
back to length d, which is the standard trick when n << d. Eigenvalues are
reported under the 1/n covariance convention.

Determinism rules: eigenvalues are sorted non-increasing with ties kept in
original order, and each eigenvector is flipped so its largest-magnitude
component (first such index on ties) is positive. Components requested past
the data rank are filled with an orthonormal completion of the standard basis
and flagged in ``completed_``.
"""

from __future__ import annotations

import logging

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .exceptions import DimensionMismatch, NoConvergence, NotSymmetric, TooFewImages
from .ingest import Image, LabeledDataset
from .validation import as_matrix, as_vector, check_fitted

logger = logging.getLogger(__name__)

_RANK_RTOL = 1e-12


def _fix_signs(V: np.ndarray) -> np.ndarray:
    """Flip columns so the largest-magnitude entry of each is positive."""
    lead = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[lead, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return V * signs


def symmetric_eig(S) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (non-increasing) and orthonormal eigenvector columns of S.

    Ties keep their original index order; each column's sign is normalized.
    """
    S = np.asarray(S, dtype=np.float64)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {S.shape}")
    if np.max(np.abs(S - S.T)) > 1e-9:
        raise NotSymmetric("matrix is not symmetric within 1e-9")
    try:
        w, V = np.linalg.eigh((S + S.T) / 2.0)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from exc
    order = np.argsort(-w, kind="stable")
    return w[order], _fix_signs(V[:, order])


def _orthonormal_completion(rows: np.ndarray, n_extra: int, d: int) -> np.ndarray:
    """Deterministic unit vectors orthogonal to ``rows`` and to each other."""
    basis = list(rows)
    extra = []
    candidate = 0
    while len(extra) < n_extra:
        if candidate >= d:
            raise TooFewImages("cannot complete basis: dimension exhausted")
        v = np.zeros(d)
        v[candidate] = 1.0
        candidate += 1
        for b in basis:
            v -= (v @ b) * b
        norm = np.linalg.norm(v)
        if norm > 0.5:
            v /= norm
            basis.append(v)
            extra.append(v)
    return np.stack(extra)


class EigenfaceProjector(BaseEstimator, TransformerMixin):
    """PCA basis over flattened face vectors, fit batch-wise or from partitions.

    Parameters
    ----------
    n_components : requested basis size; silently clamped to min(n_samples, d)
        at fit time.
    covariance_cap : largest flattened dimension for which the partition path
        may materialize its d x d moment matrix.

    Fitted attributes: ``mean_face_`` (d,), ``components_`` (nc, d) with unit
    rows, ``eigenvalues_`` (nc,) non-increasing and >= 0, ``completed_``
    boolean mask of rank-completed components, ``image_shape_`` (h, w, c) when
    known.
    """

    def __init__(self, n_components: int = 128, covariance_cap: int = 16384):
        self.n_components = n_components
        self.covariance_cap = covariance_cap

    # internal: shared by the batch and partition paths
    def _finalize(self, mean, eigenvalues, vectors_by_column, n_samples, image_shape):
        d = mean.shape[0]
        nc = min(self.n_components, n_samples, d)
        if nc < self.n_components:
            logger.info(
                "n_components clamped from %d to %d (n=%d, d=%d)",
                self.n_components,
                nc,
                n_samples,
                d,
            )
        rank_floor = max(eigenvalues[0], 0.0) * _RANK_RTOL
        usable = eigenvalues > rank_floor
        components = np.empty((nc, d))
        completed = np.zeros(nc, dtype=bool)
        kept = 0
        for k in range(nc):
            if usable[k]:
                components[k] = vectors_by_column(k)
                kept = k + 1
            else:
                break
        if kept < nc:
            components[kept:] = _orthonormal_completion(components[:kept], nc - kept, d)
            completed[kept:] = True
        vals = np.clip(eigenvalues[:nc], 0.0, None)
        vals[completed] = 0.0
        self.mean_face_ = mean
        self.components_ = _fix_signs(components.T).T
        self.eigenvalues_ = vals
        self.completed_ = completed
        self.n_samples_ = n_samples
        self.n_features_in_ = d
        self.image_shape_ = image_shape
        return self

    def fit(self, X, y=None, image_shape: tuple[int, int, int] | None = None):
        """Fit from an (n_samples, d) matrix via the inner-product route."""
        X = as_matrix(X)
        n, d = X.shape
        if n < 2:
            raise TooFewImages(f"need at least 2 images, got {n}")
        mean = X.mean(axis=0)
        A = X - mean
        gram = A @ A.T
        w, U = symmetric_eig((gram + gram.T) / 2.0)
        # Unit-normalizing A.T @ u divides by sqrt(u' A A' u) = sqrt(w).
        def column(k):
            e = A.T @ U[:, k]
            return e / np.linalg.norm(e)

        return self._finalize(mean, w / n, column, n, image_shape)

    def fit_partitions(self, partitions, image_shape: tuple[int, int, int] | None = None):
        """Fit from per-partition vector lists through merged moment statistics.

        Equivalent to ``fit`` on the concatenation; materializes a d x d
        matrix, so d is capped by ``covariance_cap``.
        """
        from .merge import compute_partition_stats, merge_stats

        if not partitions:
            raise TooFewImages("no partitions given")
        stats = [compute_partition_stats(p) for p in partitions]
        folded = stats[0]
        for s in stats[1:]:
            folded = merge_stats(folded, s)
        n = folded.count
        if n < 2:
            raise TooFewImages(f"need at least 2 images in total, got {n}")
        d = folded.mean.shape[0]
        if d > self.covariance_cap:
            raise DimensionMismatch(
                f"flattened dimension {d} exceeds covariance_cap={self.covariance_cap}; "
                "use the batch fit"
            )
        w, V = symmetric_eig(folded.comoment / n)
        return self._finalize(folded.mean, w, lambda k: V[:, k], n, image_shape)

    def transform(self, X) -> np.ndarray:
        """Coefficients of (X - mean) on the eigenface basis, shape (n, nc)."""
        check_fitted(self, "components_")
        X = as_matrix(X)
        if X.shape[1] != self.n_features_in_:
            raise DimensionMismatch(
                f"X has {X.shape[1]} features, model expects {self.n_features_in_}"
            )
        return (X - self.mean_face_) @ self.components_.T

    @property
    def n_components_(self) -> int:
        check_fitted(self, "components_")
        return self.components_.shape[0]


def fit_eigenfaces(dataset: LabeledDataset, nc: int) -> EigenfaceProjector:
    """Batch eigenface model for a dataset."""
    return EigenfaceProjector(n_components=nc).fit(
        dataset.to_matrix(), image_shape=dataset.image_shape
    )


def project(model: EigenfaceProjector, img: Image) -> np.ndarray:
    """Coefficient vector of one image under a fitted model."""
    flat = as_vector(img.pixels, "image pixels")
    if flat.shape[0] != model.n_features_in_:
        raise DimensionMismatch(
            f"image has {flat.shape[0]} values, model expects {model.n_features_in_}"
        )
    return model.transform(flat.reshape(1, -1))[0]
