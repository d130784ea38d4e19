"""Dataset assembly and the two training phases."""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import warnings
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np

from ._seeding import derive_rng, derive_seed
from .cloud import NoiseSpec, PointCloud, add_gaussian_noise, load_cloud
from .errors import (
    ConfigHashError,
    CorruptFileError,
    DegeneratePatchError,
    MalformedFileError,
    NumericError,
)
from .losses import DEFAULT_EXPONENT, DEFAULT_SUPPORT_ANGLE, normal_loss, triplet_loss
from .nn import SGD, DenseLayer, EncoderNet, EstimatorNet, PlateauScheduler
from .patches import PatchConfig, preprocess_patch
from .shapes import generate_shape
from .spatial import build_index
from .triplets import TripletConfig, sample_triplets

log = logging.getLogger(__name__)

DEFAULT_NOISE_LEVELS = (0.0, 0.0025, 0.005, 0.01, 0.015, 0.025)
FORWARD_CHUNK = 256


@dataclass(frozen=True)
class ShapeSpec:
    kind: str
    n: int
    seed: int

    @property
    def name(self) -> str:
        return f"{self.kind}-s{self.seed}"

    def generate(self) -> PointCloud:
        return generate_shape(self.kind, self.n, self.seed, self.name)

    @classmethod
    def parse(cls, text: str) -> "ShapeSpec":
        kind, n, seed = text.strip().split(":")
        return cls(kind, int(n), int(seed))

    def __str__(self):
        return f"{self.kind}:{self.n}:{self.seed}"


@dataclass(frozen=True)
class CloudFile:
    """A training shape read from disk; it must carry ground-truth normals."""

    path: str

    @property
    def name(self) -> str:
        return Path(self.path).stem

    def generate(self) -> PointCloud:
        cloud = load_cloud(self.path).with_name(self.name)
        if cloud.normals is None:
            raise MalformedFileError(self.path, None, "ground-truth normals required (use .xyzn or PLY with normals)")
        return cloud

    def __str__(self):
        return self.path


def parse_shape(text: str):
    """``kind:n:seed`` for a synthetic shape, anything else is a file path."""
    text = text.strip()
    if text.count(":") == 2 and not Path(text).exists():
        return ShapeSpec.parse(text)
    return CloudFile(text)


@dataclass(frozen=True)
class DatasetSpec:
    train_shapes: tuple
    val_shapes: tuple = ()
    noise_levels: tuple = DEFAULT_NOISE_LEVELS
    patches_per_shape: int = 8000
    val_patches_per_shape: Optional[int] = None
    patch: PatchConfig = PatchConfig()
    triplet: TripletConfig = TripletConfig()
    seed: int = 0

    def __post_init__(self):
        if not self.train_shapes:
            raise ValueError("at least one training shape is required")
        if any(level < 0 for level in self.noise_levels):
            raise ValueError("noise levels must be non-negative")
        clash = {s.name for s in self.train_shapes} & {s.name for s in self.val_shapes}
        if clash:
            raise ValueError(f"shapes in both train and validation splits: {sorted(clash)}")


@dataclass(frozen=True)
class TrainConfig:
    encoder_epochs: int = 5
    estimator_epochs: int = 50
    batch_size: int = 64
    lr: float = 0.01
    momentum: float = 0.9
    plateau_factor: float = 0.1
    plateau_patience: int = 3
    margin: float = 0.0
    support_angle: float = DEFAULT_SUPPORT_ANGLE
    exponent: int = DEFAULT_EXPONENT
    seed: int = 0
    ablation_no_encoder: bool = False

    def __post_init__(self):
        if self.encoder_epochs < 1 or self.estimator_epochs < 1:
            raise ValueError("epoch counts must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")

    def digest(self, phase: str) -> str:
        payload = json.dumps({"phase": phase, **asdict(self)}, sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# corpus
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class TripletArrays:
    anchors: np.ndarray
    positives: np.ndarray
    negatives: np.ndarray
    sources: list

    def __len__(self):
        return len(self.anchors)


@dataclass(eq=False)
class LabeledPatches:
    """Aligned patches with ground-truth normals expressed in each patch frame."""

    points: np.ndarray  # (M, k, 3)
    normals: np.ndarray  # (M, k, 3)
    centers: np.ndarray  # (M, 3)
    rotations: np.ndarray  # (M, 3, 3)
    sources: list

    def __len__(self):
        return len(self.points)


@dataclass(eq=False)
class Corpus:
    train_triplets: TripletArrays
    train_patches: LabeledPatches
    val_triplets: TripletArrays
    val_patches: LabeledPatches
    shape_names: list = field(default_factory=list)
    val_shape_names: list = field(default_factory=list)


def _stack_triplets(triplets, k) -> TripletArrays:
    if not triplets:
        empty = np.zeros((0, k, 3))
        return TripletArrays(empty, empty.copy(), empty.copy(), [])
    return TripletArrays(
        np.stack([t.anchor.points for t in triplets]),
        np.stack([t.positive.points for t in triplets]),
        np.stack([t.negative.points for t in triplets]),
        [t.anchor.source_name for t in triplets],
    )


def _concat_triplets(parts, k) -> TripletArrays:
    parts = [p for p in parts if len(p)]
    if not parts:
        return _stack_triplets([], k)
    return TripletArrays(
        np.concatenate([p.anchors for p in parts]),
        np.concatenate([p.positives for p in parts]),
        np.concatenate([p.negatives for p in parts]),
        [s for p in parts for s in p.sources],
    )


def sample_labeled_patches(cloud: PointCloud, count: int, patch_config: PatchConfig,
                           seed: int, index=None) -> LabeledPatches:
    """Independently drawn anchor patches labelled with rotated ground truth."""
    index = index or build_index(cloud)
    radius = patch_config.radius(cloud)
    rng = derive_rng(seed, "labeled", cloud.name)
    n = len(cloud)
    centers = rng.choice(n, size=count, replace=count > n)
    pts, nrm, ctr, rot = [], [], [], []
    for c in centers:
        try:
            patch = preprocess_patch(index, cloud, int(c), patch_config, radius)
        except DegeneratePatchError:
            continue
        R = patch.rotation
        pts.append(patch.points)
        nrm.append(cloud.normals[patch.indices] @ R.T)
        ctr.append(R @ cloud.normals[int(c)])
        rot.append(R)
    k = patch_config.k
    if not pts:
        return LabeledPatches(np.zeros((0, k, 3)), np.zeros((0, k, 3)), np.zeros((0, 3)),
                              np.zeros((0, 3, 3)), [])
    return LabeledPatches(np.stack(pts), np.stack(nrm), np.stack(ctr), np.stack(rot),
                          [cloud.name] * len(pts))


def _concat_labeled(parts, k) -> LabeledPatches:
    parts = [p for p in parts if len(p)]
    if not parts:
        return LabeledPatches(np.zeros((0, k, 3)), np.zeros((0, k, 3)), np.zeros((0, 3)),
                              np.zeros((0, 3, 3)), [])
    return LabeledPatches(
        np.concatenate([p.points for p in parts]),
        np.concatenate([p.normals for p in parts]),
        np.concatenate([p.centers for p in parts]),
        np.concatenate([p.rotations for p in parts]),
        [s for p in parts for s in p.sources],
    )


def noisy_variant(clean: PointCloud, level: float, seed: int) -> PointCloud:
    noisy = add_gaussian_noise(clean, NoiseSpec(level, derive_seed(seed, "noise", clean.name, str(level))))
    return noisy.with_name(f"{clean.name}@{level:g}")


def _build_split(shapes, spec: DatasetSpec, count: int):
    trip_parts, patch_parts, names = [], [], []
    for shape in shapes:
        clean = shape.generate()
        for level in spec.noise_levels:
            cloud = noisy_variant(clean, level, spec.seed)
            index = build_index(cloud)
            tcfg = replace(spec.triplet, seed=derive_seed(spec.seed, "triplets"))
            pcfg = replace(spec.patch, seed=derive_seed(spec.seed, "patches"))
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                triplets, report = sample_triplets(cloud, count, pcfg, tcfg, index)
            if not triplets:
                log.warning("%s yielded no triplets; it contributes labelled patches only",
                            cloud.name)
            trip_parts.append(_stack_triplets(triplets, spec.patch.k))
            patch_parts.append(sample_labeled_patches(cloud, count, pcfg, spec.seed, index))
            names.append(cloud.name)
            log.info("%s: %d triplets, %d labelled patches", cloud.name, report.succeeded,
                     len(patch_parts[-1]))
    return _concat_triplets(trip_parts, spec.patch.k), _concat_labeled(patch_parts, spec.patch.k), names


def build_dataset(spec: DatasetSpec) -> Corpus:
    """Generate every shape at every noise level and mine both corpora.

    Validation shapes are built separately and never mixed into training data.
    """
    train_t, train_p, names = _build_split(spec.train_shapes, spec, spec.patches_per_shape)
    val_count = spec.val_patches_per_shape or spec.patches_per_shape
    val_t, val_p, val_names = _build_split(spec.val_shapes, spec, val_count)
    return Corpus(train_t, train_p, val_t, val_p, names, val_names)


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class Checkpoint:
    phase: str
    epoch: int  # epochs completed
    config_hash: str
    encoder: Optional[EncoderNet]
    estimator: Optional[EstimatorNet]
    optimizer: dict
    scheduler: dict
    history: list


def _layers_to_arrays(prefix, net, arrays, meta):
    if net is None:
        return
    meta[prefix] = [l.activation for l in net.layers]
    for i, l in enumerate(net.layers):
        arrays[f"{prefix}_W{i}"] = l.W
        arrays[f"{prefix}_b{i}"] = l.b


def _arrays_to_layers(prefix, data, meta):
    if prefix not in meta:
        return None
    return [DenseLayer(np.array(data[f"{prefix}_W{i}"]), np.array(data[f"{prefix}_b{i}"]), act)
            for i, act in enumerate(meta[prefix])]


def save_checkpoint(path, ckpt: Checkpoint) -> None:
    arrays, meta = {}, {}
    _layers_to_arrays("encoder", ckpt.encoder, arrays, meta)
    _layers_to_arrays("estimator", ckpt.estimator, arrays, meta)
    vel = ckpt.optimizer.get("velocity")
    for i, v in enumerate(vel or []):
        arrays[f"velocity_{i}"] = v
    meta.update(
        phase=ckpt.phase, epoch=ckpt.epoch, config_hash=ckpt.config_hash,
        optimizer={k: v for k, v in ckpt.optimizer.items() if k != "velocity"},
        n_velocity=None if vel is None else len(vel),
        scheduler=ckpt.scheduler, history=ckpt.history,
    )
    arrays["meta"] = np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8)
    with open(Path(path), "wb") as fh:
        np.savez(fh, **arrays)


def load_checkpoint(path) -> Checkpoint:
    try:
        with np.load(Path(path)) as data:
            meta = json.loads(bytes(data["meta"]).decode())
            enc = _arrays_to_layers("encoder", data, meta)
            est = _arrays_to_layers("estimator", data, meta)
            nvel = meta["n_velocity"]
            vel = None if nvel is None else [np.array(data[f"velocity_{i}"]) for i in range(nvel)]
    except Exception as exc:  # zipfile.BadZipFile, KeyError, json errors, ...
        raise CorruptFileError(f"{path}: unreadable checkpoint ({exc})") from None
    opt = dict(meta["optimizer"], velocity=vel)
    return Checkpoint(
        meta["phase"], int(meta["epoch"]), meta["config_hash"],
        EncoderNet(enc) if enc else None, EstimatorNet(est) if est else None,
        opt, meta["scheduler"], [tuple(row) for row in meta["history"]],
    )


def _restore(path, phase, config: TrainConfig):
    ckpt = load_checkpoint(path)
    expected = config.digest(phase)
    if ckpt.phase != phase or ckpt.config_hash != expected:
        raise ConfigHashError(
            f"checkpoint {path} was written for {ckpt.phase}/{ckpt.config_hash}, "
            f"current run is {phase}/{expected}")
    return ckpt


# ---------------------------------------------------------------------------
# training loops
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class EncoderResult:
    encoder: EncoderNet
    history: list  # (epoch, train_loss, val_loss, lr)


@dataclass(eq=False)
class EstimatorResult:
    estimator: EstimatorNet
    encoder: EncoderNet
    history: list


def _batches(n, batch_size, seed, tag, epoch):
    order = derive_rng(seed, tag, epoch).permutation(n)
    for start in range(0, n, batch_size):
        yield order[start:start + batch_size]


def encode(encoder: EncoderNet, patches: np.ndarray, chunk: int = FORWARD_CHUNK) -> np.ndarray:
    """Latents for a stack of patches, computed in fixed-size chunks."""
    out = np.empty((len(patches), encoder.layers[-1].W.shape[0]))
    for s in range(0, len(patches), chunk):
        out[s:s + chunk] = encoder.forward(patches[s:s + chunk])[0]
    return out


def triplet_batch_loss(encoder: EncoderNet, a, p, n, margin=0.0, with_grads=True):
    """Mean triplet loss over a batch and, optionally, encoder gradients."""
    B = len(a)
    latent, cache = encoder.forward(np.concatenate([a, p, n]))
    loss, (ga, gp, gn) = triplet_loss(latent[:B], latent[B:2 * B], latent[2 * B:], margin)
    mean = float(loss.mean())
    if not with_grads:
        return mean, None
    grads = encoder.backward(cache, np.concatenate([ga, gp, gn]) / B)
    return mean, grads


def _triplet_eval(encoder, trips: TripletArrays, margin):
    if len(trips) == 0:
        return math.nan
    total = 0.0
    step = FORWARD_CHUNK // 3 or 1
    for s in range(0, len(trips), step):
        sl = slice(s, s + step)
        loss, _ = triplet_batch_loss(encoder, trips.anchors[sl], trips.positives[sl],
                                     trips.negatives[sl], margin, with_grads=False)
        total += loss * len(trips.anchors[sl])
    return total / len(trips)


def _check_finite(value, what, epoch):
    if not np.isfinite(value):
        raise NumericError(f"non-finite {what} at epoch {epoch}: {value}")


def _plateau_metric(val, train):
    return train if math.isnan(val) else val


def train_encoder(corpus: Corpus, config: TrainConfig, checkpoint: Optional[str] = None,
                  resume: Optional[str] = None, stop_after: Optional[int] = None) -> EncoderResult:
    """Triplet-train the shared encoder.

    ``checkpoint`` is rewritten after every epoch. ``resume`` continues from a
    checkpoint written under the same config. ``stop_after`` ends the run
    early after that many completed epochs (used to exercise resumption).
    """
    trips = corpus.train_triplets
    if len(trips) == 0:
        raise ValueError("the training corpus contains no triplets")
    phase = "encoder"
    if resume:
        ck = _restore(resume, phase, config)
        encoder, history, start = ck.encoder, list(ck.history), ck.epoch
        opt = SGD(config.lr, config.momentum)
        opt.load_state_dict(ck.optimizer)
        sched = PlateauScheduler(config.lr, config.plateau_factor, config.plateau_patience)
        sched.load_state_dict(ck.scheduler)
    else:
        encoder = EncoderNet.create(derive_seed(config.seed, "encoder-init"))
        opt = SGD(config.lr, config.momentum)
        sched = PlateauScheduler(config.lr, config.plateau_factor, config.plateau_patience)
        history, start = [], 0
    params = encoder.params()
    for epoch in range(start, config.encoder_epochs):
        lr_used = opt.lr
        total = 0.0
        for idx in _batches(len(trips), config.batch_size, config.seed, "encoder-epoch", epoch):
            loss, grads = triplet_batch_loss(encoder, trips.anchors[idx], trips.positives[idx],
                                             trips.negatives[idx], config.margin)
            _check_finite(loss, "triplet loss", epoch + 1)
            if not opt.step(params, grads):
                log.warning("skipped encoder step with non-finite gradient (epoch %d)", epoch + 1)
            total += loss * len(idx)
        train_loss = total / len(trips)
        val_loss = _triplet_eval(encoder, corpus.val_triplets, config.margin)
        opt.lr = sched.update(_plateau_metric(val_loss, train_loss))
        history.append((epoch + 1, train_loss, val_loss, lr_used))
        log.info("encoder epoch %d: train %.6g val %.6g lr %.3g", epoch + 1, train_loss,
                 val_loss, lr_used)
        if checkpoint:
            save_checkpoint(checkpoint, Checkpoint(
                phase, epoch + 1, config.digest(phase), encoder, None,
                opt.state_dict(), sched.state_dict(), history))
        if stop_after is not None and epoch + 1 >= stop_after:
            break
    return EncoderResult(encoder, history)


def _normal_eval(estimator, latents, patches: LabeledPatches, config: TrainConfig, exponent):
    if len(patches) == 0:
        return math.nan
    total = 0.0
    for s in range(0, len(patches), FORWARD_CHUNK):
        sl = slice(s, s + FORWARD_CHUNK)
        pred, _ = estimator.forward(latents[sl])
        loss, _ = normal_loss(pred, patches.normals[sl], patches.centers[sl],
                              config.support_angle, exponent)
        total += float(loss.sum())
    return total / len(patches)


def train_estimator(corpus: Corpus, encoder: Optional[EncoderNet], config: TrainConfig,
                    exponent: Optional[int] = None, checkpoint: Optional[str] = None,
                    resume: Optional[str] = None,
                    stop_after: Optional[int] = None) -> EstimatorResult:
    """Fit the normal regressor on the weighted cosine-power loss.

    With a frozen ``encoder`` the latents are computed once up front and the
    encoder is never touched. With ``config.ablation_no_encoder`` a fresh
    encoder is trained jointly with the estimator from the same loss.
    """
    exponent = config.exponent if exponent is None else exponent
    data = corpus.train_patches
    if len(data) == 0:
        raise ValueError("the training corpus contains no labelled patches")
    joint = config.ablation_no_encoder
    if not joint and encoder is None:
        raise ValueError("a trained encoder is required unless ablation_no_encoder is set")
    phase = f"estimator-e{exponent}" + ("-joint" if joint else "")

    if resume:
        ck = _restore(resume, phase, config)
        estimator, history, start = ck.estimator, list(ck.history), ck.epoch
        if joint:
            encoder = ck.encoder
        opt = SGD(config.lr, config.momentum)
        opt.load_state_dict(ck.optimizer)
        sched = PlateauScheduler(config.lr, config.plateau_factor, config.plateau_patience)
        sched.load_state_dict(ck.scheduler)
    else:
        estimator = EstimatorNet.create(derive_seed(config.seed, "estimator-init"))
        if joint:
            encoder = EncoderNet.create(derive_seed(config.seed, "joint-encoder-init"))
        opt = SGD(config.lr, config.momentum)
        sched = PlateauScheduler(config.lr, config.plateau_factor, config.plateau_patience)
        history, start = [], 0

    if joint:
        params = encoder.params() + estimator.params()
        train_latents = val_latents = None
    else:
        params = estimator.params()
        train_latents = encode(encoder, data.points)
        val_latents = encode(encoder, corpus.val_patches.points)

    for epoch in range(start, config.estimator_epochs):
        lr_used = opt.lr
        total = 0.0
        for idx in _batches(len(data), config.batch_size, config.seed, "estimator-epoch", epoch):
            B = len(idx)
            if joint:
                latent, enc_cache = encoder.forward(data.points[idx])
            else:
                latent = train_latents[idx]
            pred, cache = estimator.forward(latent)
            loss, dpred = normal_loss(pred, data.normals[idx], data.centers[idx],
                                      config.support_angle, exponent)
            mean = float(loss.mean())
            _check_finite(mean, "normal loss", epoch + 1)
            if joint:
                est_grads, dlatent = estimator.backward(cache, dpred / B, return_input_grad=True)
                grads = encoder.backward(enc_cache, dlatent) + est_grads
            else:
                grads = estimator.backward(cache, dpred / B)
            if not opt.step(params, grads):
                log.warning("skipped estimator step with non-finite gradient (epoch %d)", epoch + 1)
            total += mean * B
        train_loss = total / len(data)
        if joint:
            val_latents = encode(encoder, corpus.val_patches.points)
        val_loss = _normal_eval(estimator, val_latents, corpus.val_patches, config, exponent)
        opt.lr = sched.update(_plateau_metric(val_loss, train_loss))
        history.append((epoch + 1, train_loss, val_loss, lr_used))
        log.info("estimator epoch %d: train %.6g val %.6g lr %.3g", epoch + 1, train_loss,
                 val_loss, lr_used)
        if checkpoint:
            save_checkpoint(checkpoint, Checkpoint(
                phase, epoch + 1, config.digest(phase), encoder if joint else None, estimator,
                opt.state_dict(), sched.state_dict(), history))
        if stop_after is not None and epoch + 1 >= stop_after:
            break
    return EstimatorResult(estimator, encoder, history)


def estimator_val_loss(corpus: Corpus, encoder: EncoderNet, estimator: EstimatorNet,
                       config: TrainConfig, exponent: Optional[int] = None) -> float:
    exponent = config.exponent if exponent is None else exponent
    latents = encode(encoder, corpus.val_patches.points)
    return _normal_eval(estimator, latents, corpus.val_patches, config, exponent)


# ---------------------------------------------------------------------------
# text config + history
# ---------------------------------------------------------------------------


def _parse_bool(text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


_FLOAT_LIST = lambda s: tuple(float(v) for v in s.replace(",", " ").split())  # noqa: E731
_SHAPE_LIST = lambda s: tuple(parse_shape(v) for v in s.split(",") if v.strip())  # noqa: E731

CONFIG_KEYS = {
    # TrainConfig
    "encoder_epochs": int, "estimator_epochs": int, "batch_size": int, "lr": float,
    "momentum": float, "plateau_factor": float, "plateau_patience": int, "margin": float,
    "support_angle": float, "exponent": int, "seed": int, "ablation_no_encoder": _parse_bool,
    # DatasetSpec
    "train_shapes": _SHAPE_LIST, "val_shapes": _SHAPE_LIST, "noise_levels": _FLOAT_LIST,
    "patches_per_shape": int, "val_patches_per_shape": int,
    # PatchConfig / TripletConfig
    "k": int, "r_fraction": float, "theta_th": float, "search_growth": float,
    "max_search_factor": float,
}


def parse_config_text(text: str, origin: str = "<config>") -> dict:
    """Parse ``key = value`` lines ('#' starts a comment) into typed values."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{origin}:{lineno}: expected 'key = value'")
        key, _, raw = line.partition("=")
        key = key.strip()
        if key not in CONFIG_KEYS:
            raise ValueError(f"{origin}:{lineno}: unknown key {key!r}")
        try:
            values[key] = CONFIG_KEYS[key](raw.strip())
        except ValueError as exc:
            raise ValueError(f"{origin}:{lineno}: bad value for {key!r}: {exc}") from None
    return values


def load_config_file(path) -> dict:
    return parse_config_text(Path(path).read_text(), str(path))


def apply_overrides(spec: DatasetSpec, config: TrainConfig, values: dict):
    """Return ``(spec, config)`` with the given flat keys applied."""
    train_keys = {f.name for f in fields(TrainConfig)}
    spec_keys = {"train_shapes", "val_shapes", "noise_levels", "patches_per_shape",
                 "val_patches_per_shape"}
    config = replace(config, **{k: v for k, v in values.items() if k in train_keys})
    patch = replace(spec.patch, **{k: v for k, v in values.items() if k in ("k", "r_fraction")})
    trip = replace(spec.triplet, **{k: v for k, v in values.items()
                                    if k in ("theta_th", "search_growth", "max_search_factor")})
    spec_updates = {k: v for k, v in values.items() if k in spec_keys}
    if "seed" in values:
        spec_updates["seed"] = values["seed"]
    spec = replace(spec, patch=patch, triplet=trip, **spec_updates)
    return spec, config


def write_history(path, history) -> None:
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch", "train_loss", "val_loss", "lr"])
        for epoch, train, val, lr in history:
            w.writerow([epoch, repr(float(train)), repr(float(val)), repr(float(lr))])
