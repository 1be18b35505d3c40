"""Binary persistence for trained models and partition statistics.

Bundle layout (all integers little-endian, all floats IEEE-754 doubles):

    bytes 0..5    magic b"PEEP1\\n"
    bytes 6..13   uint64 length L of the JSON metadata
    L bytes       UTF-8 JSON, sorted keys (deterministic)
    rest          raw '<f8' arrays, concatenated in metadata["sections"] order

Only privacy-safe artifacts are ever written: the mean face, the eigenface
basis, scaler bounds, and network weights trained on perturbed vectors. Raw
pixels and clean projections never reach a bundle.

Partition-statistics files use the same envelope with magic b"PEEPS1\\n" and
sections ``mean`` and ``comoment``, so separate processes can exchange
summaries and a coordinator can fold them.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .classifier import MlpClassifier
from .dp import CoefficientScaler
from .eigen import EigenfaceProjector
from .exceptions import BadMagic, BundleError, TruncatedBundle, VersionMismatch
from .ingest import PipelineConfig
from .merge import PartitionStats

BUNDLE_MAGIC = b"PEEP1\n"
STATS_MAGIC = b"PEEPS1\n"
FORMAT_VERSION = 1


@dataclass
class ModelBundle:
    """Everything recognition needs; ``scaler`` and ``mlp`` are None for an
    eigen-basis-only bundle (as used by the attack harness)."""

    config: PipelineConfig
    projector: EigenfaceProjector
    scaler: CoefficientScaler | None
    mlp: MlpClassifier | None
    class_names: tuple[str, ...]
    privacy: dict

    @property
    def kind(self) -> str:
        return "pipeline" if self.mlp is not None else "eigen-basis"


def _write_envelope(path, magic: bytes, metadata: dict, arrays: list[np.ndarray]) -> None:
    blob = json.dumps(metadata, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(magic)
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for arr in arrays:
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def _read_envelope(path, magic: bytes) -> tuple[dict, bytes]:
    buf = Path(path).read_bytes()
    if not buf.startswith(magic):
        raise BadMagic(f"{path} does not start with {magic!r}")
    offset = len(magic)
    if len(buf) < offset + 8:
        raise TruncatedBundle(f"{path} ends inside the header")
    (meta_len,) = struct.unpack_from("<Q", buf, offset)
    offset += 8
    if len(buf) < offset + meta_len:
        raise TruncatedBundle(f"{path} ends inside the metadata")
    try:
        metadata = json.loads(buf[offset : offset + meta_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise BundleError(f"{path} has undecodable metadata: {exc}") from exc
    return metadata, buf[offset + meta_len :]


def _sections_from(metadata: dict, payload: bytes, path) -> dict[str, np.ndarray]:
    sections = {}
    offset = 0
    for entry in metadata["sections"]:
        shape = tuple(entry["shape"])
        size = int(np.prod(shape)) * 8
        if offset + size > len(payload):
            raise TruncatedBundle(f"{path} ends inside section {entry['name']!r}")
        arr = np.frombuffer(payload[offset : offset + size], dtype="<f8").reshape(shape)
        sections[entry["name"]] = arr.copy()
        offset += size
    return sections


def save_bundle(bundle: ModelBundle, path) -> None:
    proj = bundle.projector
    nc = proj.n_components_
    sections = [
        ("mean_face", proj.mean_face_),
        ("eigenfaces", proj.components_),
        ("eigenvalues", proj.eigenvalues_),
    ]
    metadata = {
        "format_version": FORMAT_VERSION,
        "kind": bundle.kind,
        "config": {
            "irw": bundle.config.irw,
            "irh": bundle.config.irh,
            "nc": bundle.config.nc,
            "imthresh": bundle.config.imthresh,
            "epsilon": bundle.config.epsilon,
            "seed": bundle.config.seed,
            "train_fraction": bundle.config.train_fraction,
            "hidden_layer_sizes": list(bundle.config.hidden_layer_sizes),
            "batch_size": bundle.config.batch_size,
            "max_epochs": bundle.config.max_epochs,
        },
        "class_names": list(bundle.class_names),
        "privacy": bundle.privacy,
        "n_components": int(nc),
        "image_shape": list(proj.image_shape_) if proj.image_shape_ else None,
        "eigen": {
            "n_samples": int(proj.n_samples_),
            "completed": [int(v) for v in proj.completed_],
        },
    }
    if bundle.mlp is not None:
        if bundle.scaler is None:
            raise BundleError("pipeline bundle needs a scaler")
        if bundle.scaler.n_features_in_ != nc or bundle.mlp.n_features_in_ != nc:
            raise VersionMismatch(
                "component-count mismatch between basis, scaler, and classifier"
            )
        sections += [
            ("scaler_min", bundle.scaler.data_min_),
            ("scaler_max", bundle.scaler.data_max_),
        ]
        for l, (W, b) in enumerate(zip(bundle.mlp.coefs_, bundle.mlp.intercepts_)):
            sections += [(f"mlp_w{l}", W), (f"mlp_b{l}", b)]
        metadata["mlp"] = {
            "layer_dims": [int(v) for v in bundle.mlp.layer_dims_],
            "classes": [int(v) for v in bundle.mlp.classes_],
            "params": {
                "hidden_layer_sizes": list(bundle.mlp.hidden_layer_sizes),
                "batch_size": bundle.mlp.batch_size,
                "learning_rate": bundle.mlp.learning_rate,
                "alpha": bundle.mlp.alpha,
                "max_epochs": bundle.mlp.max_epochs,
                "tol": bundle.mlp.tol,
                "random_state": bundle.mlp.random_state,
            },
        }
    metadata["sections"] = [
        {"name": name, "shape": list(arr.shape)} for name, arr in sections
    ]
    _write_envelope(path, BUNDLE_MAGIC, metadata, [arr for _, arr in sections])


def load_bundle(path) -> ModelBundle:
    metadata, payload = _read_envelope(path, BUNDLE_MAGIC)
    if metadata.get("format_version") != FORMAT_VERSION:
        raise VersionMismatch(
            f"bundle format {metadata.get('format_version')!r}, expected {FORMAT_VERSION}"
        )
    sections = _sections_from(metadata, payload, path)

    cfg_raw = dict(metadata["config"])
    cfg_raw["hidden_layer_sizes"] = tuple(cfg_raw["hidden_layer_sizes"])
    config = PipelineConfig(**cfg_raw)

    nc = int(metadata["n_components"])
    proj = EigenfaceProjector(n_components=nc)
    proj.mean_face_ = sections["mean_face"]
    proj.components_ = sections["eigenfaces"]
    proj.eigenvalues_ = sections["eigenvalues"]
    proj.completed_ = np.asarray(metadata["eigen"]["completed"], dtype=bool)
    proj.n_samples_ = int(metadata["eigen"]["n_samples"])
    proj.n_features_in_ = proj.components_.shape[1]
    proj.image_shape_ = (
        tuple(metadata["image_shape"]) if metadata["image_shape"] else None
    )
    if proj.components_.shape[0] != nc:
        raise VersionMismatch("eigenface section disagrees with declared n_components")

    scaler = mlp = None
    if metadata["kind"] == "pipeline":
        scaler = CoefficientScaler()
        scaler.data_min_ = sections["scaler_min"]
        scaler.data_max_ = sections["scaler_max"]
        scaler.n_features_in_ = scaler.data_min_.shape[0]

        info = metadata["mlp"]
        params = dict(info["params"])
        params["hidden_layer_sizes"] = tuple(params["hidden_layer_sizes"])
        mlp = MlpClassifier(**params)
        dims = info["layer_dims"]
        mlp.coefs_ = [sections[f"mlp_w{l}"] for l in range(len(dims) - 1)]
        mlp.intercepts_ = [sections[f"mlp_b{l}"] for l in range(len(dims) - 1)]
        mlp.classes_ = np.asarray(info["classes"], dtype=np.int64)
        mlp.layer_dims_ = [int(v) for v in dims]
        mlp.n_features_in_ = int(dims[0])
        if scaler.n_features_in_ != nc or mlp.n_features_in_ != nc:
            raise VersionMismatch(
                "component-count mismatch between basis, scaler, and classifier"
            )
    return ModelBundle(
        config=config,
        projector=proj,
        scaler=scaler,
        mlp=mlp,
        class_names=tuple(metadata["class_names"]),
        privacy=metadata["privacy"],
    )


def save_partition_stats(stats: PartitionStats, path) -> None:
    metadata = {
        "format_version": FORMAT_VERSION,
        "count": int(stats.count),
        "d": int(stats.d),
        "sections": [
            {"name": "mean", "shape": [stats.d]},
            {"name": "comoment", "shape": [stats.d, stats.d]},
        ],
    }
    _write_envelope(path, STATS_MAGIC, metadata, [stats.mean, stats.comoment])


def load_partition_stats(path) -> PartitionStats:
    metadata, payload = _read_envelope(path, STATS_MAGIC)
    if metadata.get("format_version") != FORMAT_VERSION:
        raise VersionMismatch(
            f"stats format {metadata.get('format_version')!r}, expected {FORMAT_VERSION}"
        )
    sections = _sections_from(metadata, payload, path)
    return PartitionStats(
        count=int(metadata["count"]),
        mean=sections["mean"],
        comoment=sections["comoment"],
    )
