"""Evaluation grid, ablation sweeps and report serialisation."""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional

import numpy as np

from ._seeding import derive_seed
from .cloud import PointCloud
from .inference import estimate_normals, msae, pca_baseline_normals
from .nn import EncoderNet, EstimatorNet
from .patches import PatchConfig
from .training import (
    Corpus,
    DatasetSpec,
    TrainConfig,
    build_dataset,
    noisy_variant,
    train_encoder,
    train_estimator,
)

METHODS = ("ours", "ours-no-encoder", "pca-baseline")
PATCH_SIZE_SWEEP = ((0.01, 20), (0.02, 50), (0.03, 100), (0.04, 250), (0.05, 500), (0.06, 500))
DEFAULT_EXPONENTS = (2, 4, 6, 8, 10)
CSV_COLUMNS = ("method", "shape", "noise_level", "n_points", "msae_rad2", "seconds",
               "degenerate_count")


@dataclass
class EvalReport:
    method: str
    shape: str
    noise_level: float
    n_points: int
    msae: float
    seconds: float
    degenerate_count: int = 0
    config_hash: str = ""
    tags: dict = field(default_factory=dict)


@dataclass(eq=False)
class Model:
    encoder: EncoderNet
    estimator: EstimatorNet

    @classmethod
    def load(cls, encoder_path, estimator_path):
        return cls(EncoderNet.load(encoder_path), EstimatorNet.load(estimator_path))


def evaluate_cloud(cloud: PointCloud, method: str, model: Optional[Model],
                   patch_config: PatchConfig, pca_k: int = 20):
    """Predict normals for ``cloud`` with one method; returns ``(msae, seconds, degenerate)``."""
    start = time.perf_counter()
    if method == "pca-baseline":
        pred, flags = pca_baseline_normals(cloud, pca_k)
    else:
        if model is None:
            raise FileNotFoundError(f"method {method!r} needs trained model files")
        pred, flags = estimate_normals(cloud, model.encoder, model.estimator, patch_config)
    seconds = time.perf_counter() - start
    return msae(pred, cloud.normals), seconds, int(flags.sum())


def run_evaluation(shapes: Iterable[PointCloud], noise_levels, methods, models: dict,
                   patch_config: PatchConfig, seed: int = 0, pca_k: int = 20,
                   config_hash: str = "", tags: Optional[dict] = None) -> list[EvalReport]:
    """Evaluate every (shape, noise level, method) combination.

    ``shapes`` are clean clouds carrying ground-truth normals; noise is added
    here with seeds derived from ``seed``. ``models`` maps learned method
    names to :class:`Model` instances.
    """
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}; expected one of {METHODS}")
        if m != "pca-baseline" and models.get(m) is None:
            raise FileNotFoundError(f"no model supplied for method {m!r}")
    reports = []
    for clean in shapes:
        if clean.normals is None:
            raise ValueError(f"{clean.name}: evaluation needs ground-truth normals")
        for level in noise_levels:
            cloud = noisy_variant(clean, level, derive_seed(seed, "eval"))
            for method in methods:
                err, secs, degen = evaluate_cloud(cloud, method, models.get(method),
                                                  patch_config, pca_k)
                reports.append(EvalReport(method, clean.name, float(level), len(cloud), err,
                                          secs, degen, config_hash, dict(tags or {})))
    return reports


def patch_size_sweep(spec: DatasetSpec, config: TrainConfig, test_shapes, noise_levels,
                     sizes=PATCH_SIZE_SWEEP, seed: int = 0) -> list[EvalReport]:
    """Retrain and evaluate once per ``(r_fraction, k)`` pair."""
    reports = []
    for r_fraction, k in sizes:
        patch = replace(spec.patch, r_fraction=r_fraction, k=k)
        sized = replace(spec, patch=patch)
        corpus = build_dataset(sized)
        encoder = train_encoder(corpus, config).encoder
        estimator = train_estimator(corpus, encoder, config).estimator
        reports += run_evaluation(test_shapes, noise_levels, ["ours"],
                                  {"ours": Model(encoder, estimator)}, patch, seed,
                                  config_hash=config.digest("sweep"),
                                  tags={"r_fraction": r_fraction, "k": k})
    return reports


def ablate_exponent(corpus: Corpus, encoder: EncoderNet, config: TrainConfig, val_clouds,
                    patch_config: PatchConfig, exponents=DEFAULT_EXPONENTS) -> list[EvalReport]:
    """Train one estimator per loss exponent on a shared frozen encoder.

    ``val_clouds`` are evaluated as given (already corrupted). Every report
    carries the encoder digest so callers can confirm it was shared.
    """
    digest = encoder.digest()
    reports = []
    for e in exponents:
        est = train_estimator(corpus, encoder, replace(config, ablation_no_encoder=False),
                              exponent=e).estimator
        if encoder.digest() != digest:
            raise RuntimeError("encoder changed during exponent ablation")
        model = Model(encoder, est)
        for cloud in val_clouds:
            err, secs, degen = evaluate_cloud(cloud, "ours", model, patch_config)
            reports.append(EvalReport("ours", cloud.name, float("nan"), len(cloud), err, secs,
                                      degen, config.digest(f"exp{e}"),
                                      {"exponent": e, "encoder_digest": digest}))
    return reports


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def _tag_columns(reports):
    cols = []
    for r in reports:
        for key in r.tags:
            if key not in cols:
                cols.append(key)
    return cols


def reports_to_csv(reports, fh=None) -> str:
    buf = fh or io.StringIO()
    tags = _tag_columns(reports)
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(CSV_COLUMNS) + ["config_hash"] + tags)
    for r in reports:
        w.writerow([r.method, r.shape, repr(r.noise_level), r.n_points, repr(r.msae),
                    f"{r.seconds:.3f}", r.degenerate_count, r.config_hash]
                   + [r.tags.get(t, "") for t in tags])
    return buf.getvalue() if fh is None else ""


def format_table(reports) -> str:
    tags = _tag_columns(reports)
    header = ["method", "shape", "noise", "points", "MSAE (rad^2)", "RMS (deg)", "seconds",
              "degenerate"] + tags
    rows = [[r.method, r.shape, f"{r.noise_level:g}", str(r.n_points), f"{r.msae:.6f}",
             f"{np.degrees(np.sqrt(r.msae)):.2f}", f"{r.seconds:.2f}", str(r.degenerate_count)]
            + [str(r.tags.get(t, "")) for t in tags] for r in reports]
    widths = [max(len(str(x)) for x in col) for col in zip(header, *rows)]
    lines = ["  ".join(str(x).ljust(w) for x, w in zip(row, widths)).rstrip()
             for row in [header, ["-" * w for w in widths], *rows]]
    return "\n".join(lines)
