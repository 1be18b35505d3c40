"""End-to-end orchestration: train, recognize, benchmark, merge demo.

Training follows one fixed order: assemble the dataset (class threshold,
resolution guard), split stratified 70/30, fit the eigenface basis on the
training images (batch, or folded partition statistics when a partition count
is given), project, fit the coefficient scaler on training projections only,
perturb every training vector, and train the classifier on perturbed vectors
alone. Only the basis, scaler bounds, classifier weights, and metadata are
persisted; raw pixels and clean projections never leave the process.

Recognition perturbs the probe image's scaled coefficients with a fresh
stream before prediction, so test inputs get the same protection as training
data.
"""

from __future__ import annotations

import csv
import dataclasses
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bundle import ModelBundle, load_partition_stats, save_partition_stats
from .classifier import EvalReport, MlpClassifier, evaluate
from .dp import PrivacyParams, fit_scaler, perturb, perturb_rows
from .eigen import EigenfaceProjector
from .exceptions import DimensionMismatch, EquivalenceCheckFailed
from .ingest import (
    Image,
    LabeledDataset,
    PipelineConfig,
    build_dataset,
    resize_bilinear,
    stratified_split,
)
from .merge import compute_partition_stats, merge_stats
from .rng import derive_rng

logger = logging.getLogger(__name__)


def clamp_component_count(nc: int, irw: int, irh: int, n_train: int, d: int) -> int:
    """Cap the component count at min(width, height), then at min(n, d).

    The resolution cap is a fixed pipeline rule; the rank bound is enforced
    on top because a basis cannot hold more vectors than the data rank.
    Both clamps log, since a silently shrunk basis surprises people.
    """
    out = nc
    if nc > irw or nc > irh:
        out = min(irw, irh)
        logger.warning("nc=%d exceeds resolution %dx%d; clamped to %d", nc, irw, irh, out)
    natural = min(n_train, d)
    if out > natural:
        logger.warning("nc=%d exceeds rank bound min(n=%d, d=%d)", out, n_train, d)
        out = natural
    return out


@dataclass
class TrainOutcome:
    bundle: ModelBundle
    report: EvalReport | None  # held-out evaluation at the training epsilon
    heldout: LabeledDataset | None


def train_bundle(
    dataset: LabeledDataset,
    cfg: PipelineConfig,
    n_partitions: int | None = None,
    evaluate_heldout: bool = True,
) -> TrainOutcome:
    """Fit the full privacy-preserving recognition model on a dataset."""
    train_ds, test_ds = stratified_split(
        dataset, cfg.train_fraction, derive_rng(cfg.seed, "split")
    )
    X_train = train_ds.to_matrix()
    nc = clamp_component_count(
        cfg.nc, train_ds.width, train_ds.height, X_train.shape[0], X_train.shape[1]
    )

    if n_partitions and n_partitions > 1:
        chunks = np.array_split(X_train, n_partitions)
        projector = EigenfaceProjector(n_components=nc).fit_partitions(
            [c for c in chunks if len(c)], image_shape=train_ds.image_shape
        )
    else:
        projector = EigenfaceProjector(n_components=nc).fit(
            X_train, image_shape=train_ds.image_shape
        )

    coeffs = projector.transform(X_train)
    scaler = fit_scaler(coeffs)
    params = PrivacyParams(epsilon=cfg.epsilon)
    perturbed = perturb_rows(scaler.transform(coeffs), params, cfg.seed, "perturb-train")

    mlp = MlpClassifier(
        hidden_layer_sizes=cfg.hidden_layer_sizes,
        batch_size=cfg.batch_size,
        max_epochs=cfg.max_epochs,
        random_state=cfg.seed,
    ).fit(perturbed, train_ds.labels)

    bundle = ModelBundle(
        config=cfg,
        projector=projector,
        scaler=scaler,
        mlp=mlp,
        class_names=dataset.class_names,
        privacy=params.budget_report(nc),
    )
    report = None
    if evaluate_heldout:
        scaled_test = scaler.transform(projector.transform(test_ds.to_matrix()))
        noisy_test = perturb_rows(scaled_test, params, cfg.seed, "perturb-test")
        report = evaluate(mlp, noisy_test, test_ds.labels)
    return TrainOutcome(bundle=bundle, report=report, heldout=test_ds)


def train_bundle_from_directory(
    root, cfg: PipelineConfig, n_partitions: int | None = None
) -> TrainOutcome:
    return train_bundle(build_dataset(root, cfg), cfg, n_partitions=n_partitions)


@dataclass(frozen=True)
class Recognition:
    label: int
    class_name: str
    probabilities: np.ndarray


def recognize(
    bundle: ModelBundle, img: Image, epsilon: float | None = None, seed: int = 0
) -> Recognition:
    """Perturb a probe image's representation and classify it."""
    if bundle.mlp is None or bundle.scaler is None:
        raise DimensionMismatch("bundle holds no classifier; train a pipeline bundle")
    h, w, c = bundle.projector.image_shape_
    if img.channels != c:
        raise DimensionMismatch(f"probe has {img.channels} channels, model expects {c}")
    if (img.width, img.height) != (w, h):
        img = resize_bilinear(img, w, h)
    coeffs = bundle.projector.transform(img.pixels.reshape(1, -1))
    scaled = bundle.scaler.transform(coeffs)[0]
    eps = bundle.config.epsilon if epsilon is None else epsilon
    noisy = perturb(scaled, PrivacyParams(epsilon=eps), derive_rng(seed, "recognize", 0))
    probs = bundle.mlp.predict_proba(noisy.reshape(1, -1))[0]
    label = int(bundle.mlp.classes_[int(np.argmax(probs))])
    return Recognition(
        label=label, class_name=bundle.class_names[label], probabilities=probs
    )


# -- benchmark harness -------------------------------------------------------

CSV_COLUMNS = (
    "epsilon",
    "nc",
    "imthresh",
    "seed",
    "accuracy",
    "weighted_precision",
    "weighted_recall",
    "weighted_f1",
    "perturb_time_per_image_s",
    "predict_time_per_image_s",
)


@dataclass(frozen=True)
class BenchmarkRow:
    epsilon: float | None  # None is the no-privacy baseline
    nc: int
    imthresh: int
    seed: int
    accuracy: float
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float
    perturb_time_per_image_s: float
    predict_time_per_image_s: float


def time_perturbation(nc: int, epsilon: float, calls: int = 200) -> float:
    """Mean wall-clock seconds to perturb one nc-length vector."""
    params = PrivacyParams(epsilon=epsilon)
    vec = np.full(nc, 0.5)
    rng = derive_rng(0, "timing", nc)
    perturb(vec, params, rng)  # warm up
    start = time.perf_counter()
    for _ in range(calls):
        perturb(vec, params, rng)
    return (time.perf_counter() - start) / calls


def time_prediction(mlp: MlpClassifier, vec: np.ndarray, calls: int = 100) -> float:
    """Mean wall-clock seconds to classify one vector."""
    row = vec.reshape(1, -1)
    mlp.predict(row)  # warm up
    start = time.perf_counter()
    for _ in range(calls):
        mlp.predict(row)
    return (time.perf_counter() - start) / calls


def run_single(
    dataset: LabeledDataset,
    cfg: PipelineConfig,
    epsilon: float | None,
    seed: int,
    timing_calls: int = 100,
) -> BenchmarkRow:
    """One grid point: train with (or without) noise, evaluate, time."""
    train_ds, test_ds = stratified_split(
        dataset, cfg.train_fraction, derive_rng(seed, "split")
    )
    X_train = train_ds.to_matrix()
    nc = clamp_component_count(
        cfg.nc, train_ds.width, train_ds.height, X_train.shape[0], X_train.shape[1]
    )
    projector = EigenfaceProjector(n_components=nc).fit(
        X_train, image_shape=train_ds.image_shape
    )
    scaler = fit_scaler(projector.transform(X_train))
    scaled_train = scaler.transform(projector.transform(X_train))
    scaled_test = scaler.transform(projector.transform(test_ds.to_matrix()))
    if epsilon is not None:
        params = PrivacyParams(epsilon=epsilon)
        features_train = perturb_rows(scaled_train, params, seed, "perturb-train")
        features_test = perturb_rows(scaled_test, params, seed, "perturb-test")
    else:
        features_train, features_test = scaled_train, scaled_test

    mlp = MlpClassifier(
        hidden_layer_sizes=cfg.hidden_layer_sizes,
        batch_size=cfg.batch_size,
        max_epochs=cfg.max_epochs,
        random_state=seed,
    ).fit(features_train, train_ds.labels)
    report = evaluate(mlp, features_test, test_ds.labels)

    t_perturb = time_perturbation(
        nc, epsilon if epsilon is not None else cfg.epsilon, calls=max(100, timing_calls)
    )
    t_predict = time_prediction(mlp, features_test[0], calls=max(100, timing_calls))
    return BenchmarkRow(
        epsilon=epsilon,
        nc=nc,
        imthresh=cfg.imthresh,
        seed=seed,
        accuracy=report.accuracy,
        weighted_precision=report.weighted_precision,
        weighted_recall=report.weighted_recall,
        weighted_f1=report.weighted_f1,
        perturb_time_per_image_s=t_perturb,
        predict_time_per_image_s=t_predict,
    )


def run_benchmark(
    root,
    cfg: PipelineConfig,
    epsilons: tuple[float, ...],
    nc_values: tuple[int, ...] | None = None,
    imthresh_values: tuple[int, ...] | None = None,
    repeats: int = 1,
    jobs: int = 1,
    dataset: LabeledDataset | None = None,
) -> list[BenchmarkRow]:
    """Full sweep; every (imthresh, nc, repeat) adds a no-privacy baseline row.

    Grid points run under independent derived seeds, so ``jobs`` only changes
    wall-clock time, never results; rows come back in grid order.
    """
    nc_values = nc_values or (cfg.nc,)
    imthresh_values = imthresh_values or (cfg.imthresh,)
    datasets = {}
    for it in imthresh_values:
        sub_cfg = _with(cfg, imthresh=it)
        datasets[it] = dataset if dataset is not None else build_dataset(root, sub_cfg)

    tasks = []
    for it in imthresh_values:
        for nc in nc_values:
            for eps in tuple(epsilons) + (None,):
                for r in range(repeats):
                    tasks.append((it, nc, eps, cfg.seed + r))

    def _run(task):
        it, nc, eps, seed = task
        return run_single(datasets[it], _with(cfg, imthresh=it, nc=nc), eps, seed)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_run, tasks))
    return [_run(t) for t in tasks]


def _with(cfg: PipelineConfig, **overrides) -> PipelineConfig:
    return dataclasses.replace(cfg, **overrides)


def write_benchmark_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow(
                [
                    "" if row.epsilon is None else row.epsilon,
                    row.nc,
                    row.imthresh,
                    row.seed,
                    f"{row.accuracy:.6f}",
                    f"{row.weighted_precision:.6f}",
                    f"{row.weighted_recall:.6f}",
                    f"{row.weighted_f1:.6f}",
                    f"{row.perturb_time_per_image_s:.9f}",
                    f"{row.predict_time_per_image_s:.9f}",
                ]
            )


# -- distributed-statistics demo ----------------------------------------------


def run_merge_demo(
    dataset: LabeledDataset, n_partitions: int, stats_dir
) -> dict:
    """Exchange partition statistics through files and verify batch equivalence.

    Raises EquivalenceCheckFailed when the folded statistics drift beyond
    1e-9 relative of the batch values.
    """
    stats_dir = Path(stats_dir)
    stats_dir.mkdir(parents=True, exist_ok=True)
    X = dataset.to_matrix()
    chunks = [c for c in np.array_split(X, n_partitions) if len(c)]
    paths = []
    for i, chunk in enumerate(chunks):
        p = stats_dir / f"partition_{i:03d}.peepstats"
        save_partition_stats(compute_partition_stats(chunk), p)
        paths.append(p)

    folded = load_partition_stats(paths[0])
    for p in paths[1:]:
        folded = merge_stats(folded, load_partition_stats(p))
    batch = compute_partition_stats(X)

    mean_err = float(
        np.max(np.abs(folded.mean - batch.mean)) / max(np.max(np.abs(batch.mean)), 1e-30)
    )
    com_err = float(
        np.max(np.abs(folded.comoment - batch.comoment))
        / max(np.max(np.abs(batch.comoment)), 1e-30)
    )
    if folded.count != batch.count or mean_err > 1e-9 or com_err > 1e-9:
        raise EquivalenceCheckFailed(
            f"merged statistics diverge: mean rel {mean_err:.3e}, "
            f"comoment rel {com_err:.3e}"
        )
    return {
        "n_partitions": len(paths),
        "count": folded.count,
        "mean_rel_err": mean_err,
        "comoment_rel_err": com_err,
        "files": [str(p) for p in paths],
    }
