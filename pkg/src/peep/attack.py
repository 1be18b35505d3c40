"""Eigenface reconstruction attack: rebuild a face from a perturbed vector.

The attacker holds an eigenface basis, intercepts a perturbed representation,
projects it onto every basis vector, and sums the weighted eigenfaces plus
the mean face. The attack quantifies how much noise actually destroys:
root-mean-square pixel error against the original, which falls as the privacy
budget grows.

Two perturbation entry points exist. ``domain="pixel"`` noises the centered
pixel vector itself (the vector the attacker intercepts in the harshest
threat model: pixel values are already bounded by [0, 1], so no re-scaling
happens). ``domain="coefficient"`` instead perturbs the projected coefficient
vector, optionally round-tripping through a fitted scaler, which probes the
deployed pipeline's own release path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dp import CoefficientScaler, PrivacyParams, laplace_sample, perturb
from .eigen import EigenfaceProjector
from .exceptions import DataError, DimensionMismatch
from .ingest import Image, image_from_array
from .validation import as_vector


@dataclass(frozen=True)
class ReconstructionResult:
    image: Image
    rmse: float
    epsilon_used: float | None


def rmse(a: Image, b: Image) -> float:
    """Root-mean-square pixel difference between two equal-size images."""
    if (a.width, a.height, a.channels) != (b.width, b.height, b.channels):
        raise DimensionMismatch("images differ in size")
    diff = a.pixels - b.pixels
    return float(np.sqrt(np.mean(diff * diff)))


def _reconstruct_flat(model: EigenfaceProjector, coefficients: np.ndarray) -> np.ndarray:
    return model.mean_face_ + coefficients @ model.components_


def reconstruct(model: EigenfaceProjector, coefficients) -> Image:
    """Mean face plus the coefficient-weighted eigenfaces, clamped to [0, 1]."""
    c = as_vector(coefficients, "coefficients")
    if c.shape[0] != model.n_components_:
        raise DimensionMismatch(
            f"{c.shape[0]} coefficients for a {model.n_components_}-component model"
        )
    if model.image_shape_ is None:
        raise DataError("model carries no image shape; fit it from images")
    flat = np.clip(_reconstruct_flat(model, c), 0.0, 1.0)
    return image_from_array(flat.reshape(model.image_shape_))


def attack_pipeline(
    model: EigenfaceProjector,
    img: Image,
    eps: float | None,
    rng: np.random.Generator,
    domain: str = "pixel",
    scaler: CoefficientScaler | None = None,
) -> ReconstructionResult:
    """Perturb, project, reconstruct, and score one image.

    ``eps=None`` runs the no-privacy baseline. See the module docstring for
    the two ``domain`` modes.
    """
    flat = img.pixels
    if flat.shape[0] != model.n_features_in_:
        raise DimensionMismatch(
            f"image has {flat.shape[0]} values, model expects {model.n_features_in_}"
        )
    if domain == "pixel":
        centered = flat - model.mean_face_
        if eps is not None:
            centered = laplace_sample(rng, centered, PrivacyParams(eps).noise_scale)
        coeffs = model.components_ @ centered
    elif domain == "coefficient":
        coeffs = model.transform(flat.reshape(1, -1))[0]
        if eps is not None:
            params = PrivacyParams(eps)
            if scaler is not None:
                noisy = perturb(scaler.transform(coeffs.reshape(1, -1))[0], params, rng)
                coeffs = scaler.inverse_transform(noisy.reshape(1, -1))[0]
            else:
                coeffs = laplace_sample(rng, coeffs, params.noise_scale)
    else:
        raise DataError(f"unknown attack domain {domain!r}")
    recovered = reconstruct(model, coeffs)
    return ReconstructionResult(image=recovered, rmse=rmse(recovered, img), epsilon_used=eps)


def fit_attack_basis(
    images, n_components: int | None = None, mirror: bool = True
) -> EigenfaceProjector:
    """Eigenface basis for the attack, optionally augmented with mirror images.

    Horizontal flips double the corpus the way the attack model is usually
    trained; ``n_components=None`` keeps the full centered rank (n - 1).
    """
    if not images:
        raise DataError("no images to fit the attack basis on")
    arrays = [img.as_array() for img in images]
    if mirror:
        arrays += [a[:, ::-1, :] for a in arrays]
    X = np.stack([a.reshape(-1) for a in arrays])
    if n_components is None:
        n_components = min(X.shape[0] - 1, X.shape[1])
    h, w, c = arrays[0].shape
    return EigenfaceProjector(n_components=n_components).fit(X, image_shape=(h, w, c))
