"""Locally differentially private eigenface recognition.

Pipeline: load face images, extract an eigenface basis (batch or via merged
partition statistics), scale the projection coefficients to [0, 1], perturb
every index with Laplace noise at scale 1/epsilon, and train a classifier on
the perturbed vectors only. A reconstruction-attack harness measures how much
the noise actually protects.
"""

from .attack import ReconstructionResult, attack_pipeline, fit_attack_basis, reconstruct, rmse
from .bundle import ModelBundle, load_bundle, load_partition_stats, save_bundle, save_partition_stats
from .classifier import EvalReport, MlpClassifier, evaluate
from .dp import CoefficientScaler, PrivacyParams, fit_scaler, laplace_sample, perturb, perturb_rows
from .eigen import EigenfaceProjector, fit_eigenfaces, project, symmetric_eig
from .ingest import (
    Image,
    LabeledDataset,
    PipelineConfig,
    build_dataset,
    image_from_array,
    load_image,
    resize_bilinear,
    save_image,
    stratified_split,
)
from .merge import (
    PartitionStats,
    compute_partition_stats,
    fit_eigenfaces_incremental,
    merge_means,
    merge_stats,
    merged_sample_covariance,
    prenormalized_merge_covariance,
)
from .pipeline import (
    BenchmarkRow,
    Recognition,
    TrainOutcome,
    recognize,
    run_benchmark,
    run_merge_demo,
    run_single,
    train_bundle,
    train_bundle_from_directory,
    write_benchmark_csv,
)
from .rng import derive_rng
from .synthetic import generate_corpus, synthetic_dataset

__version__ = "0.1.0"
