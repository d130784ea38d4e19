"""Command-line driver: ``tripnorm <subcommand> [flags]``.

Exit status is 0 on success, 2 for usage errors (bad flags, bad values,
unknown config keys), 3 for data errors (missing or malformed files,
incompatible weights) and 4 for numeric failures during training or
inference.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from ._seeding import derive_seed
from .cloud import FORMATS, NoiseSpec, add_gaussian_noise, load_cloud, save_cloud
from .errors import NumericError, TripnormError
from .evaluation import (
    DEFAULT_EXPONENTS,
    METHODS,
    PATCH_SIZE_SWEEP,
    Model,
    ablate_exponent,
    format_table,
    patch_size_sweep,
    reports_to_csv,
    run_evaluation,
)
from .inference import estimate_normals
from .nn import EncoderNet
from .profiles import PROFILES, get_profile
from .shapes import SHAPES, generate_shape
from .training import (
    apply_overrides,
    build_dataset,
    load_config_file,
    noisy_variant,
    parse_shape,
    train_encoder,
    train_estimator,
    write_history,
)

log = logging.getLogger("tripnorm")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# argument types
# ---------------------------------------------------------------------------


def _float_list(text):
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _int_list(text):
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _shape_list(text):
    try:
        return tuple(parse_shape(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected kind:n:seed entries or paths, got {text!r}")


def _size_list(text):
    sizes = []
    for item in text.split(","):
        try:
            r, k = item.split(":")
            sizes.append((float(r), int(k)))
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected r_fraction:k pairs, got {item!r}")
    return tuple(sizes)


def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        value = 0
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return value


def _methods(text):
    items = tuple(m.strip() for m in text.split(",") if m.strip())
    bad = [m for m in items if m not in METHODS]
    if bad or not items:
        raise argparse.ArgumentTypeError(f"methods must be drawn from {', '.join(METHODS)}")
    return items


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="master seed (default 0)")
    common.add_argument("--profile", choices=sorted(PROFILES), default="toy")
    common.add_argument("--config", help="key = value file; explicit flags take precedence")
    common.add_argument("--threads", type=_positive_int, default=1,
                        help="BLAS thread cap; 1 gives bit-reproducible runs")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="tripnorm", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    def add(name, help_text):
        return sub.add_parser(name, parents=[common], help=help_text, description=help_text)

    p = add("generate", "sample a synthetic shape with analytic normals")
    p.add_argument("--kind", choices=SHAPES, required=True)
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=FORMATS)

    p = add("corrupt", "add Gaussian noise scaled by the bounding-box diagonal")
    p.add_argument("--input", required=True)
    p.add_argument("--level", type=float, required=True, help="e.g. 0.005 for 0.5%%")
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=FORMATS)

    def training_flags(p):
        p.add_argument("--train-shapes", type=_shape_list,
                       help="comma list of kind:n:seed or cloud files with normals")
        p.add_argument("--val-shapes", type=_shape_list)
        p.add_argument("--epochs", type=_positive_int)
        p.add_argument("--checkpoint", help="write a resumable checkpoint after every epoch")
        p.add_argument("--resume", help="continue from this checkpoint")
        p.add_argument("--history", help="write the per-epoch loss history as CSV")

    p = add("train-encoder", "phase one: triplet feature encoder")
    p.add_argument("--out", required=True, help="encoder weight file")
    training_flags(p)

    p = add("train-estimator", "phase two: normal regressor on a frozen encoder")
    p.add_argument("--encoder", help="trained encoder weights")
    p.add_argument("--no-encoder", action="store_true",
                   help="ablation: train a fresh encoder jointly on the normal loss")
    p.add_argument("--out", required=True, help="estimator weight file")
    p.add_argument("--out-encoder", help="jointly trained encoder (with --no-encoder)")
    p.add_argument("--exponent", type=int)
    training_flags(p)

    p = add("estimate", "predict a normal for every point of a cloud")
    p.add_argument("--model-encoder", required=True)
    p.add_argument("--model-estimator", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True, help="output cloud with normals")
    p.add_argument("--flags-out", help="per-point PCA-fallback flags, one 0/1 per line")

    p = add("evaluate", "MSAE of one or more methods over shapes and noise levels")
    p.add_argument("--methods", type=_methods, default=("ours",))
    p.add_argument("--shapes", type=_shape_list,
                   help="clouds with ground-truth normals (default: profile test shapes)")
    p.add_argument("--noise", type=_float_list, help="noise levels (default: profile levels)")
    p.add_argument("--model-encoder")
    p.add_argument("--model-estimator")
    p.add_argument("--ablation-encoder", help="encoder for ours-no-encoder")
    p.add_argument("--ablation-estimator", help="estimator for ours-no-encoder")
    p.add_argument("--pca-k", type=_positive_int, default=20)
    p.add_argument("--csv", help="write CSV here and print a table instead")

    p = add("ablate-exponent", "one estimator per loss exponent on a shared encoder")
    p.add_argument("--encoder", help="frozen encoder (default: train one first)")
    p.add_argument("--exponents", type=_int_list, default=DEFAULT_EXPONENTS)
    p.add_argument("--val-noise", type=float, default=0.005)
    p.add_argument("--epochs", type=_positive_int)
    p.add_argument("--csv", help="write CSV here and print a table instead")

    p = add("ablate-patch-size", "retrain and evaluate per (r_fraction, k) pair")
    p.add_argument("--sizes", type=_size_list, default=PATCH_SIZE_SWEEP,
                   help="comma list of r_fraction:k")
    p.add_argument("--shapes", type=_shape_list, help="test shapes (default: profile's)")
    p.add_argument("--noise", type=_float_list, help="noise levels (default: profile levels)")
    p.add_argument("--csv", help="write CSV here and print a table instead")
    return parser


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _require_inputs(*paths):
    for path in paths:
        if path and not Path(path).is_file():
            raise FileNotFoundError(f"no such file: {path}")


def _require_outputs(*paths):
    for path in paths:
        if path and not Path(path).resolve().parent.is_dir():
            raise UsageError(f"output directory does not exist: {Path(path).parent}")


def _shape_inputs(shapes):
    _require_inputs(*[s.path for s in shapes or () if hasattr(s, "path")])


def _settings(args):
    """Profile defaults, then the config file, then explicit flags."""
    values = load_config_file(args.config) if args.config else {}
    seed = args.seed if args.seed is not None else values.get("seed", 0)
    values.pop("seed", None)
    profile = get_profile(args.profile, seed)
    spec, config = apply_overrides(profile.dataset, profile.train, values)
    flag_spec = {}
    if getattr(args, "train_shapes", None):
        flag_spec["train_shapes"] = args.train_shapes
    if getattr(args, "val_shapes", None) is not None:
        flag_spec["val_shapes"] = args.val_shapes
    spec = replace(spec, **flag_spec)
    return profile, spec, config


def _emit(reports, csv_path):
    if csv_path:
        with open(csv_path, "w", newline="") as fh:
            reports_to_csv(reports, fh)
        print(format_table(reports))
    else:
        sys.stdout.write(reports_to_csv(reports))


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_generate(args):
    _require_outputs(args.out)
    seed = args.seed if args.seed is not None else 0
    cloud = generate_shape(args.kind, args.n, seed)
    save_cloud(cloud, args.out, args.format)
    log.info("wrote %d points to %s", len(cloud), args.out)


def cmd_corrupt(args):
    _require_inputs(args.input)
    _require_outputs(args.out)
    if args.level < 0:
        raise UsageError(f"--level must be >= 0, got {args.level}")
    cloud = load_cloud(args.input)
    seed = args.seed if args.seed is not None else 0
    noisy = add_gaussian_noise(cloud, NoiseSpec(args.level, derive_seed(seed, "corrupt")))
    save_cloud(noisy, args.out, args.format)


def cmd_train_encoder(args):
    _require_inputs(args.resume)
    _require_outputs(args.out, args.checkpoint, args.history)
    _, spec, config = _settings(args)
    _shape_inputs(spec.train_shapes + spec.val_shapes)
    if args.epochs:
        config = replace(config, encoder_epochs=args.epochs)
    corpus = build_dataset(spec)
    result = train_encoder(corpus, config, checkpoint=args.checkpoint, resume=args.resume)
    result.encoder.save(args.out)
    if args.history:
        write_history(args.history, result.history)


def cmd_train_estimator(args):
    if args.no_encoder:
        if args.encoder:
            raise UsageError("--encoder and --no-encoder are mutually exclusive")
        if not args.out_encoder:
            raise UsageError("--no-encoder needs --out-encoder for the jointly trained encoder")
    elif not args.encoder:
        raise UsageError("--encoder is required (or pass --no-encoder for the ablation)")
    _require_inputs(args.encoder, args.resume)
    _require_outputs(args.out, args.out_encoder, args.checkpoint, args.history)
    _, spec, config = _settings(args)
    _shape_inputs(spec.train_shapes + spec.val_shapes)
    config = replace(config, ablation_no_encoder=args.no_encoder)
    if args.epochs:
        config = replace(config, estimator_epochs=args.epochs)
    encoder = EncoderNet.load(args.encoder) if args.encoder else None
    corpus = build_dataset(spec)
    result = train_estimator(corpus, encoder, config, exponent=args.exponent,
                             checkpoint=args.checkpoint, resume=args.resume)
    result.estimator.save(args.out)
    if args.out_encoder:
        result.encoder.save(args.out_encoder)
    if args.history:
        write_history(args.history, result.history)


def cmd_estimate(args):
    _require_inputs(args.model_encoder, args.model_estimator, args.input)
    _require_outputs(args.out, args.flags_out)
    _, spec, _ = _settings(args)
    model = Model.load(args.model_encoder, args.model_estimator)
    cloud = load_cloud(args.input)
    normals, flags = estimate_normals(cloud, model.encoder, model.estimator, spec.patch)
    save_cloud(replace(cloud, normals=normals), args.out)
    if args.flags_out:
        np.savetxt(args.flags_out, flags.astype(int), fmt="%d")
    if flags.any():
        log.warning("%d of %d points used the PCA fallback", int(flags.sum()), len(cloud))


def _load_model(encoder, estimator, method, needed):
    if method not in needed:
        return None
    if not (encoder and estimator):
        raise UsageError(f"method {method!r} needs both its encoder and estimator files")
    _require_inputs(encoder, estimator)
    return Model.load(encoder, estimator)


def cmd_evaluate(args):
    _require_outputs(args.csv)
    profile, spec, config = _settings(args)
    models = {
        "ours": _load_model(args.model_encoder, args.model_estimator, "ours", args.methods),
        "ours-no-encoder": _load_model(args.ablation_encoder, args.ablation_estimator,
                                       "ours-no-encoder", args.methods),
    }
    shapes = args.shapes or profile.test_shapes
    _shape_inputs(shapes)
    noise = args.noise if args.noise is not None else spec.noise_levels
    clouds = [s.generate() for s in shapes]
    reports = run_evaluation(clouds, noise, args.methods, models, spec.patch,
                             seed=config.seed, pca_k=args.pca_k,
                             config_hash=config.digest("evaluate"))
    _emit(reports, args.csv)


def cmd_ablate_exponent(args):
    _require_inputs(args.encoder)
    _require_outputs(args.csv)
    for e in args.exponents:
        if e <= 0 or e % 2:
            raise UsageError(f"exponents must be even and positive, got {e}")
    _, spec, config = _settings(args)
    if args.epochs:
        config = replace(config, estimator_epochs=args.epochs)
    corpus = build_dataset(spec)
    if args.encoder:
        encoder = EncoderNet.load(args.encoder)
    else:
        encoder = train_encoder(corpus, config).encoder
    val = [noisy_variant(s.generate(), args.val_noise, config.seed) for s in spec.val_shapes]
    if not val:
        raise UsageError("the exponent ablation needs validation shapes")
    reports = ablate_exponent(corpus, encoder, config, val, spec.patch, args.exponents)
    _emit(reports, args.csv)


def cmd_ablate_patch_size(args):
    _require_outputs(args.csv)
    profile, spec, config = _settings(args)
    shapes = args.shapes or profile.test_shapes
    _shape_inputs(shapes)
    noise = args.noise if args.noise is not None else spec.noise_levels
    clouds = [s.generate() for s in shapes]
    reports = patch_size_sweep(spec, config, clouds, noise, args.sizes, seed=config.seed)
    _emit(reports, args.csv)


COMMANDS = {
    "generate": cmd_generate,
    "corrupt": cmd_corrupt,
    "train-encoder": cmd_train_encoder,
    "train-estimator": cmd_train_estimator,
    "estimate": cmd_estimate,
    "evaluate": cmd_evaluate,
    "ablate-exponent": cmd_ablate_exponent,
    "ablate-patch-size": cmd_ablate_patch_size,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed the message
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        with threadpool_limits(limits=args.threads):
            COMMANDS[args.command](args)
    except (UsageError, ValueError) as exc:
        print(f"tripnorm {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericError, FloatingPointError) as exc:
        print(f"tripnorm {args.command}: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (TripnormError, OSError) as exc:
        print(f"tripnorm {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
