"""Local-differential-privacy core: min-max scaling and Laplace perturbation.

Coefficient vectors are scaled index-wise into [0, 1] using bounds fitted on
training projections only; test-time values are clamped into the same range.
Each index of a scaled vector is then perturbed with Laplace noise centered
on the value itself, scale sensitivity/epsilon. The per-index sensitivity is
fixed at 1 (the width of the scaled range), so the noise scale is 1/epsilon.

Perturbed outputs are deliberately not clamped: clamping would bias the
mechanism. Note that releasing all nc indices at scale 1/epsilon means the
whole vector is epsilon-private per index; under sequential composition the
vector-level budget is nc * epsilon. ``budget_report`` states both figures.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .exceptions import DataError, DimensionMismatch
from .rng import derive_rng
from .validation import as_matrix, check_fitted


@dataclass(frozen=True)
class PrivacyParams:
    """Privacy budget and (fixed) per-index sensitivity."""

    epsilon: float
    sensitivity: float = 1.0

    def __post_init__(self):
        if self.epsilon <= 0:
            raise DataError(f"epsilon must be positive, got {self.epsilon}")
        if self.sensitivity != 1.0:
            raise DataError("per-index sensitivity is fixed to 1.0 for [0,1]-scaled data")

    @property
    def noise_scale(self) -> float:
        return self.sensitivity / self.epsilon

    def budget_report(self, n_indices: int) -> dict:
        """Per-index budget versus the sequentially composed vector budget."""
        return {
            "epsilon_per_index": self.epsilon,
            "sensitivity_per_index": self.sensitivity,
            "noise_scale": self.noise_scale,
            "n_indices": int(n_indices),
            "epsilon_composed_over_indices": self.epsilon * n_indices,
        }


class CoefficientScaler(BaseEstimator, TransformerMixin):
    """Per-index min-max scaler to [0, 1] with clamping at transform time.

    Indices that are constant on the fit data map to 0 for any input.
    """

    def fit(self, X, y=None):
        X = as_matrix(X)
        self.data_min_ = X.min(axis=0)
        self.data_max_ = X.max(axis=0)
        self.n_features_in_ = X.shape[1]
        return self

    def _check(self, X):
        check_fitted(self, "data_min_")
        X = as_matrix(X)
        if X.shape[1] != self.n_features_in_:
            raise DimensionMismatch(
                f"X has {X.shape[1]} features, scaler expects {self.n_features_in_}"
            )
        return X

    def transform(self, X) -> np.ndarray:
        X = self._check(X)
        span = self.data_max_ - self.data_min_
        degenerate = span == 0
        out = (X - self.data_min_) / np.where(degenerate, 1.0, span)
        out[:, degenerate] = 0.0
        return np.clip(out, 0.0, 1.0)

    def inverse_transform(self, X) -> np.ndarray:
        """Map scaled values back; degenerate indices return their fit value."""
        X = self._check(X)
        return self.data_min_ + X * (self.data_max_ - self.data_min_)


def fit_scaler(train_coefficients) -> CoefficientScaler:
    return CoefficientScaler().fit(train_coefficients)


def laplace_sample(rng: np.random.Generator, location, scale: float):
    """Inverse-CDF Laplace draw(s): location - scale * sgn(u) * ln(1 - 2|u|).

    ``u`` is uniform on (-0.5, 0.5); u = 0 returns the location exactly.
    Accepts scalar or array locations; one uniform is consumed per output in
    array order, so a fixed generator state yields a bit-exact sequence.
    """
    if scale <= 0:
        raise DataError(f"scale must be positive, got {scale}")
    loc = np.asarray(location, dtype=np.float64)
    u = rng.random(loc.size) - 0.5
    neg2abs = -2.0 * np.abs(u)
    # 1 - 2|u| == 0 would take log(0); probability ~2^-53 per draw, redraw.
    while (bad := neg2abs <= -1.0).any():
        u[bad] = rng.random(int(bad.sum())) - 0.5
        neg2abs[bad] = -2.0 * np.abs(u[bad])
    draws = loc.reshape(-1) - scale * np.sign(u) * np.log1p(neg2abs)
    if loc.ndim == 0:
        return float(draws[0])
    return draws.reshape(loc.shape)


def perturb(scaled, params: PrivacyParams, rng: np.random.Generator) -> np.ndarray:
    """Independent per-index Laplace noise on a [0, 1]-scaled vector.

    The output is unbounded; no clamping happens after noise.
    """
    v = np.asarray(scaled, dtype=np.float64)
    if v.min() < -1e-12 or v.max() > 1.0 + 1e-12:
        raise DataError("perturb expects values scaled into [0, 1]")
    return laplace_sample(rng, v, params.noise_scale)


def perturb_rows(
    X, params: PrivacyParams, seed: int, stream: str = "perturb"
) -> np.ndarray:
    """Perturb each row under its own (seed, stream, row-index) RNG stream.

    Row streams are independent, so rows may be processed in any order or in
    parallel and the result is still reproducible.
    """
    X = as_matrix(X)
    out = np.empty_like(X)
    for i in range(X.shape[0]):
        out[i] = perturb(X[i], params, derive_rng(seed, stream, i))
    return out
