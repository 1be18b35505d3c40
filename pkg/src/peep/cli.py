"""Command-line surface.

Subcommands: train, recognize, benchmark, attack, merge-demo.
Exit codes: 0 success, 1 usage error, 2 data error, 3 internal failure.
"""

from __future__ import annotations

import csv
import logging
import sys
from pathlib import Path

import click

from .attack import attack_pipeline, fit_attack_basis
from .bundle import ModelBundle, load_bundle, save_bundle
from .exceptions import DataError, InternalError
from .ingest import PipelineConfig, build_dataset, load_image, resize_bilinear, save_image
from .pipeline import (
    recognize as run_recognize,
    run_benchmark,
    run_merge_demo,
    train_bundle,
    write_benchmark_csv,
)
from .rng import derive_rng


class EpsilonOrNone(click.ParamType):
    """Float epsilon, or 'none' for the no-privacy baseline."""

    name = "epsilon"

    def convert(self, value, param, ctx):
        if isinstance(value, (float, int)) or value is None:
            return value
        if str(value).lower() in {"none", "wp"}:
            return None
        try:
            return float(value)
        except ValueError:
            self.fail(f"{value!r} is neither a number nor 'none'", param, ctx)


def _config(width, height, nc, imthresh, epsilon, seed, train_fraction, hidden,
            batch_size, max_epochs) -> PipelineConfig:
    layers = tuple(int(v) for v in hidden.split(",") if v.strip()) if hidden else None
    kwargs = dict(
        irw=width,
        irh=height,
        nc=nc,
        imthresh=imthresh,
        epsilon=epsilon,
        seed=seed,
        train_fraction=train_fraction,
        batch_size=batch_size,
        max_epochs=max_epochs,
    )
    if layers is not None:
        kwargs["hidden_layer_sizes"] = layers
    return PipelineConfig(**kwargs)


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log pipeline details.")
def cli(verbose):
    logging.basicConfig(
        level=logging.INFO if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )


_shared = [
    click.option("--epsilon", type=float, default=8.0, show_default=True,
                 help="Per-index privacy budget."),
    click.option("--nc", type=int, default=128, show_default=True,
                 help="Number of eigenface components."),
    click.option("--imthresh", type=int, default=100, show_default=True,
                 help="Minimum images per class."),
    click.option("--width", type=int, default=47, show_default=True),
    click.option("--height", type=int, default=62, show_default=True),
    click.option("--seed", type=int, default=0, show_default=True),
    click.option("--train-fraction", type=float, default=0.7, show_default=True),
    click.option("--hidden", type=str, default="",
                 help="Comma-separated hidden layer widths (default 512,1024,2014,1024,512)."),
    click.option("--batch-size", type=int, default=100, show_default=True),
    click.option("--max-epochs", type=int, default=200, show_default=True),
]


def shared_options(fn):
    for opt in reversed(_shared):
        fn = opt(fn)
    return fn


@cli.command()
@click.argument("dataset_root", type=click.Path(exists=True, file_okay=False))
@shared_options
@click.option("--partitions", type=int, default=0,
              help="Fit the basis from N merged partition summaries instead of one batch.")
@click.option("--out", type=click.Path(dir_okay=False), required=True,
              help="Bundle file to write.")
def train(dataset_root, epsilon, nc, imthresh, width, height, seed, train_fraction,
          hidden, batch_size, max_epochs, partitions, out):
    """Train the privacy-preserving recognizer and persist a model bundle."""
    cfg = _config(width, height, nc, imthresh, epsilon, seed, train_fraction,
                  hidden, batch_size, max_epochs)
    if not 0 < epsilon <= 9:
        click.echo(f"warning: epsilon={epsilon} outside the recommended (0, 9]", err=True)
    dataset = build_dataset(dataset_root, cfg)
    outcome = train_bundle(dataset, cfg, n_partitions=partitions or None)
    save_bundle(outcome.bundle, out)
    click.echo(f"classes: {', '.join(outcome.bundle.class_names)}")
    click.echo(f"images: {len(dataset.images)} at {dataset.width}x{dataset.height}")
    click.echo(f"components: {outcome.bundle.projector.n_components_}")
    rep = outcome.bundle.privacy
    click.echo(
        f"privacy: epsilon {rep['epsilon_per_index']} per index "
        f"({rep['epsilon_composed_over_indices']} composed over {rep['n_indices']})"
    )
    if outcome.report is not None:
        click.echo(
            f"held-out weighted F1 at training epsilon: {outcome.report.weighted_f1:.4f}"
        )
    click.echo(f"bundle written to {out}")


@cli.command()
@click.argument("bundle_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("image_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--epsilon", type=float, default=None,
              help="Probe perturbation budget (default: the bundle's).")
@click.option("--seed", type=int, default=0, show_default=True)
def recognize(bundle_path, image_path, epsilon, seed):
    """Classify one image; the probe is perturbed before prediction."""
    bundle = load_bundle(bundle_path)
    result = run_recognize(bundle, load_image(image_path), epsilon=epsilon, seed=seed)
    click.echo(f"predicted: {result.class_name} (class {result.label})")
    for name, p in zip(bundle.class_names, result.probabilities):
        click.echo(f"  {name}: {p:.4f}")


@cli.command()
@click.argument("dataset_root", type=click.Path(exists=True, file_okay=False))
@shared_options
@click.option("--epsilon-grid", "epsilon_grid", multiple=True, type=float,
              default=(0.5, 4.0, 8.0), show_default=True)
@click.option("--nc-grid", "nc_grid", multiple=True, type=int)
@click.option("--imthresh-grid", "imthresh_grid", multiple=True, type=int)
@click.option("--repeats", type=int, default=1, show_default=True)
@click.option("--jobs", type=int, default=1, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True,
              help="CSV file to write.")
def benchmark(dataset_root, epsilon, nc, imthresh, width, height, seed, train_fraction,
              hidden, batch_size, max_epochs, epsilon_grid, nc_grid, imthresh_grid,
              repeats, jobs, out):
    """Sweep budgets/components/thresholds; one CSV row per run plus baselines."""
    cfg = _config(width, height, nc, imthresh, epsilon, seed, train_fraction,
                  hidden, batch_size, max_epochs)
    rows = run_benchmark(
        dataset_root,
        cfg,
        epsilons=tuple(epsilon_grid),
        nc_values=tuple(nc_grid) or None,
        imthresh_values=tuple(imthresh_grid) or None,
        repeats=repeats,
        jobs=jobs,
    )
    write_benchmark_csv(rows, out)
    click.echo(f"{len(rows)} rows written to {out}")


@cli.command()
@click.argument("image_paths", nargs=-1, required=True,
                type=click.Path(exists=True, dir_okay=False))
@click.option("--model", "model_path", type=click.Path(exists=True, dir_okay=False),
              help="Bundle (pipeline or eigen-basis) providing the attack basis.")
@click.option("--fit-root", type=click.Path(exists=True, file_okay=False),
              help="Fit the attack basis on this directory-per-class corpus.")
@click.option("--mirror/--no-mirror", default=True, show_default=True,
              help="Augment the attack corpus with horizontal flips.")
@click.option("--attack-nc", type=int, default=0,
              help="Attack basis size (default: full rank).")
@click.option("--save-model", type=click.Path(dir_okay=False),
              help="Persist the fitted attack basis as an eigen-basis bundle.")
@click.option("--width", type=int, default=1,
              help="Attack-corpus resolution (default: native minimum).")
@click.option("--height", type=int, default=1,
              help="Attack-corpus resolution (default: native minimum).")
@click.option("--epsilon-grid", "epsilon_grid", multiple=True, type=EpsilonOrNone(),
              default=("none", "8", "4", "0.5"), show_default=True)
@click.option("--seeds", type=int, default=1, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), required=True,
              help="Directory for reconstructions and the RMSE table.")
def attack(image_paths, model_path, fit_root, mirror, attack_nc, save_model,
           width, height, epsilon_grid, seeds, out):
    """Reconstruct images from perturbed representations and tabulate RMSE."""
    if (model_path is None) == (fit_root is None):
        raise click.UsageError("give exactly one of --model or --fit-root")
    if model_path:
        model = load_bundle(model_path).projector
    else:
        # irw=irh=1 lets the resolution guard raise to the corpus minimum
        cfg = PipelineConfig(irw=width, irh=height, imthresh=1)
        corpus = build_dataset(fit_root, cfg)
        model = fit_attack_basis(
            list(corpus.images), n_components=attack_nc or None, mirror=mirror
        )
        if save_model:
            basis_bundle = ModelBundle(
                config=cfg, projector=model, scaler=None, mlp=None,
                class_names=corpus.class_names, privacy={},
            )
            save_bundle(basis_bundle, save_model)
            click.echo(f"attack basis written to {save_model}")

    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    model_h, model_w, model_c = model.image_shape_
    grid = [e for e in epsilon_grid]
    rows = []
    for image_path in image_paths:
        stem = Path(image_path).stem
        img = load_image(image_path)
        if img.channels != model_c:
            raise DataError(
                f"{image_path} has {img.channels} channels, basis expects {model_c}"
            )
        if (img.width, img.height) != (model_w, model_h):
            img = resize_bilinear(img, model_w, model_h)
        ext = ".pgm" if model_c == 1 else ".ppm"
        save_image(img, out_dir / f"{stem}_original{ext}")
        for eps in grid:
            for s in range(seeds):
                rng = derive_rng(s, "attack", stem, "none" if eps is None else eps)
                res = attack_pipeline(model, img, eps, rng)
                tag = "np" if eps is None else f"eps{eps:g}"
                suffix = ".pgm" if res.image.channels == 1 else ".ppm"
                save_image(res.image, out_dir / f"{stem}_{tag}_seed{s}{suffix}")
                rows.append((stem, "" if eps is None else eps, s, res.rmse))
    with open(out_dir / "rmse.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("image", "epsilon", "seed", "rmse"))
        writer.writerows(rows)
    click.echo(f"{len(rows)} reconstructions written under {out_dir}")


@cli.command("merge-demo")
@click.argument("dataset_root", type=click.Path(exists=True, file_okay=False))
@click.option("--partitions", type=int, default=4, show_default=True)
@click.option("--imthresh", type=int, default=1, show_default=True)
@click.option("--width", type=int, default=32, show_default=True)
@click.option("--height", type=int, default=32, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), required=True,
              help="Directory for the exchanged partition-statistics files.")
def merge_demo(dataset_root, partitions, imthresh, width, height, out):
    """Exchange partition statistics via files and assert batch equivalence."""
    cfg = PipelineConfig(irw=width, irh=height, imthresh=imthresh)
    dataset = build_dataset(dataset_root, cfg)
    report = run_merge_demo(dataset, partitions, out)
    click.echo(
        f"merged {report['n_partitions']} partitions covering {report['count']} vectors"
    )
    click.echo(
        f"mean rel err {report['mean_rel_err']:.3e}, "
        f"comoment rel err {report['comoment_rel_err']:.3e}"
    )
    click.echo("batch equivalence: PASS")


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.Abort:
        click.echo("aborted", err=True)
        return 1
    except InternalError as exc:
        click.echo(f"internal error: {exc}", err=True)
        return 3
    except DataError as exc:
        click.echo(f"data error: {exc}", err=True)
        return 2
    except Exception as exc:  # anything unexpected is an internal failure
        click.echo(f"internal error: {exc}", err=True)
        return 3


if __name__ == "__main__":
    sys.exit(main())
