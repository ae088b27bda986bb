"""neurocine command line: synth, frames, train, cv, viz.

Every command writes ``manifest.json`` into its ``--out`` directory before
any other artifact. Exit codes: 0 success, 1 runtime/IO error, 2 usage error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .architectures import VARIANTS, build
from .errors import ConfigError, NeurocineError
from .harness import (CachedBands, MetricsLog, TrainConfig, evaluate, fold_table, load_checkpoint, mean_error,
                      run_cv, save_checkpoint, train)
from .ingest import (DEFAULT_CONFIG_PATH, generate_synthetic, load_montage, load_synth_config, load_trials,
                     save_montage, save_trials)
from .ingest.data import FrameSet
from .ingest.split import split_leave_subject_out
from .topomap import Renderer, Standardizer, load_frames, project, render_frames, save_frames
from .topomap.projection import PROJECTIONS

log = logging.getLogger("neurocine")


class UsageError(Exception):
    pass


def _digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def write_manifest(out: Path, command: str, config: dict, seed, inputs, outputs) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "command": command,
        "config": config,
        "seed": seed,
        "inputs": {str(p): _digest(p) for p in inputs},
        "outputs": [str(out / o) for o in outputs],
        "version": __version__,
    }
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _config_path(value: str) -> Path:
    path = DEFAULT_CONFIG_PATH if value == "default" else Path(value)
    if not path.is_file():
        raise UsageError(f"config file not found: {value}")
    return path


def _window(value: str) -> float | None:
    if value == "full":
        return None
    try:
        w = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError("window must be a number of seconds or 'full'") from None
    if w <= 0:
        raise argparse.ArgumentTypeError("window must be positive")
    return w


def _sidecar(frames_path: Path) -> Path:
    return frames_path.with_suffix(".bands.npz")


def _train_config(args) -> TrainConfig:
    return TrainConfig(max_epochs=args.epochs, patience=args.patience, seed=args.seed,
                       augment_sigma=args.augment_sigma, max_steps=args.max_steps)


def cmd_synth(args) -> None:
    cfg_path = _config_path(args.config)
    cfg = load_synth_config(cfg_path)
    out = Path(args.out)
    names = ["trials.eegt", "montage.csv"]
    write_manifest(out, "synth", {"config": str(cfg_path), **cfg.summary()}, args.seed, [cfg_path], names)
    trials, montage = generate_synthetic(cfg, args.seed)
    save_trials(trials, out / names[0])
    save_montage(montage, out / names[1])
    log.info("wrote %d trials to %s", len(trials), out / names[0])


def _frames_from(trials_path, montage_path, projection: str, window):
    trials = load_trials(trials_path)
    montage = load_montage(montage_path)
    trials.check_montage(montage)
    bands = CachedBands.from_trials(trials, window)
    projected = project(montage, projection)
    renderer = Renderer(projected)
    std = Standardizer.fit(bands.band_powers)
    frames = render_frames(bands.band_powers, bands.labels, bands.subjects, renderer, std)
    return bands, projected, std, frames


def cmd_frames(args) -> None:
    out = Path(args.out)
    names = ["frames.eegf", "frames.bands.npz"]
    config = {"projection": args.projection, "window": args.window_raw}
    write_manifest(out, "frames", config, None, [args.trials, args.montage], names)
    bands, projected, std, frames = _frames_from(args.trials, args.montage, args.projection, args.window)
    save_frames(frames, out / names[0])
    with open(out / names[1], "wb") as fh:
        np.savez(fh, band_powers=bands.band_powers, labels=bands.labels, subjects=bands.subjects,
                 points=projected.points, projection=np.array(args.projection), mean=std.mean, std=std.std)
    log.info("wrote %d trials x %d frames to %s", len(frames), frames.n_frames, out / names[0])


def _load_bands(frames_path: Path):
    side = _sidecar(frames_path)
    if not side.is_file():
        raise FileNotFoundError(f"band-power sidecar {side} not found next to {frames_path}")
    with np.load(side) as z:
        bands = CachedBands(z["band_powers"], z["labels"], z["subjects"])
        points = z["points"]
    return bands, points, side


def _shuffle(labels: np.ndarray, seed: int) -> np.ndarray:
    return np.random.default_rng(np.random.SeedSequence([seed, 0x5EED])).permutation(labels)


def cmd_train(args) -> None:
    out = Path(args.out)
    spec = build(args.variant)
    cfg = _train_config(args)
    inputs = [args.frames] if args.frames else [args.trials, args.montage]
    names = ["checkpoint.eegn", "metrics.jsonl", "summary.json"]
    config = {"variant": args.variant, "train": cfg.to_dict(), "held_out": args.held_out}
    if not args.frames:
        config.update(projection=args.projection, window=args.window_raw)
    write_manifest(out, "train", config, args.seed, inputs, names)
    if args.frames:
        frames = load_frames(args.frames)
    else:
        frames = _frames_from(args.trials, args.montage, args.projection, args.window)[3]
    if frames.n_frames != spec.n_frames:
        raise ConfigError(f"{args.variant} needs {spec.n_frames} frame(s) per trial; the data has {frames.n_frames}")
    subjects = np.asarray(frames.subjects)
    test = None
    if args.held_out is not None:
        plan = split_leave_subject_out(subjects, args.held_out, args.seed)
        tr, va, test = plan.train, plan.validation, plan.test
    else:
        perm = np.random.default_rng(args.seed).permutation(len(frames))
        n_val = max(1, len(frames) // max(2, len(np.unique(subjects))))
        va, tr = np.sort(perm[:n_val]), np.sort(perm[n_val:])
    metrics = MetricsLog()
    params, hist = train(spec, frames.subset(tr), frames.subset(va), cfg, metrics.callback(0))
    save_checkpoint(out / names[0], params, args.seed)
    metrics.write(out / names[1])
    summary = {"variant": args.variant, "history": hist.to_dict()}
    if test is not None:
        ev = evaluate(params, spec, frames.subset(test))
        summary.update(test_error_pct=ev.error_pct, confusion=ev.confusion.tolist())
    _json(out / names[2], summary)
    log.info("best epoch %d, validation loss %.4f", hist.best_epoch, hist.val_loss[hist.best_epoch])


def cmd_cv(args) -> None:
    out = Path(args.out)
    cfg = _train_config(args)
    names = ["metrics.jsonl", "folds.json", "report.txt", "summary.json"]
    config = {"variant": args.variant, "train": cfg.to_dict(), "subjects": args.subjects,
              "shuffle_labels": args.shuffle_labels}
    if args.frames:
        inputs = [args.frames, _sidecar(Path(args.frames))]
    else:
        inputs = [args.trials, args.montage]
        config.update(projection=args.projection, window=args.window_raw)
    write_manifest(out, "cv", config, args.seed, inputs, names)
    if args.frames:
        bands, points, _ = _load_bands(Path(args.frames))
        montage = points
    else:
        trials = load_trials(args.trials)
        montage = load_montage(args.montage)
        trials.check_montage(montage)
        bands = CachedBands.from_trials(trials, args.window)
    if args.shuffle_labels:
        bands = CachedBands(bands.band_powers, _shuffle(bands.labels, args.seed), bands.subjects)
    metrics = MetricsLog()
    projection = args.projection if not args.frames else "aep"
    reports = run_cv(bands, montage, args.variant, cfg, args.seed, projection=projection,
                     subjects=args.subjects, log=metrics)
    metrics.write(out / names[0])
    _json(out / names[1], [r.to_dict() for r in reports])
    (out / names[2]).write_text(fold_table(reports, args.variant))
    _json(out / names[3], {"variant": args.variant, "mean_error_pct": mean_error(reports),
                           "fold_error_pct": {str(r.held_out_subject): r.error_pct for r in reports}})
    print(f"{args.variant}: mean test error {mean_error(reports):.2f}% over {len(reports)} folds")


def infer_variant(params: dict, n_frames: int | None = None) -> str:
    """single-d and multi-maxpool share every parameter shape; ``n_frames``
    of the data decides between them (multi-frame when unknown)."""
    names = set(params)
    if "fc.W" not in names:
        raise ConfigError("checkpoint has no fc layer; cannot infer the variant")
    if "lstm.W_xi" in names:
        return "multi-mix" if "tconv.W" in names else "multi-lstm"
    if "tconv.W" in names:
        return f"multi-conv{params['tconv.W'].shape[0]}"
    n_conv = sum(1 for n in names if n.startswith("conv") and n.endswith(".W"))
    config = {2: "a", 4: "b", 5: "c"}.get(n_conv)
    if config:
        return f"single-{config}"
    return "single-d" if n_frames == 1 else "multi-maxpool"


def cmd_viz(args) -> None:
    from .deconv import back_project, emit_image, image_name, select_top_activations

    out = Path(args.out)
    params, seed = load_checkpoint(args.checkpoint)
    frames = load_frames(args.frames)
    variant = args.variant or infer_variant(params, frames.n_frames)
    spec = build(variant)
    valid = spec.stack_outputs()
    if args.layer not in valid:
        raise UsageError(f"layer {args.layer} is not a stack output; valid layers: {{{', '.join(map(str, valid))}}}")
    names = []
    for r in range(1, args.topk + 1):
        for part in ("input", "fmap", ""):
            names.append(image_name(args.layer, args.kernel, r, part))
    config = {"variant": variant, "layer": args.layer, "kernel": args.kernel, "topk": args.topk,
              "scale": args.scale}
    write_manifest(out, "viz", config, seed, [args.checkpoint, args.frames], names)
    if frames.n_frames != spec.n_frames:
        raise ConfigError(f"{variant} needs {spec.n_frames} frame(s) per trial; the data has {frames.n_frames}")
    top = select_top_activations(params, spec, frames, args.layer, args.kernel, args.topk)
    from .architectures import Model
    model = Model(spec)
    for rank, hit in enumerate(top, 1):
        img = frames.frames[hit.trial, hit.frame]
        fmap = model.conv_features(params, img[None].astype(np.float32), upto=args.layer)[0, :, :, args.kernel]
        bp = back_project(params, spec, img, args.layer, args.kernel, hit.trial)
        emit_image(img, out / image_name(args.layer, args.kernel, rank, "input"), args.scale)
        emit_image(fmap, out / image_name(args.layer, args.kernel, rank, "fmap"), args.scale)
        emit_image(bp, out / image_name(args.layer, args.kernel, rank), args.scale)
    _json(out / "top.json", [{"rank": r, "trial": h.trial, "frame": h.frame, "score": h.score}
                             for r, h in enumerate(top, 1)])


def _add_data_args(p, need_frames: bool = True) -> None:
    if need_frames:
        p.add_argument("--frames", help="EEGF frame file (with its .bands.npz sidecar for cv)")
    p.add_argument("--trials", help="EEGT trial file")
    p.add_argument("--montage", help="montage CSV")
    p.add_argument("--projection", choices=sorted(PROJECTIONS), default="aep")
    p.add_argument("--window", dest="window_raw", default="0.5", help="seconds per frame or 'full'")


def _add_train_args(p) -> None:
    p.add_argument("--variant", required=True, choices=VARIANTS, metavar="VARIANT",
                   help=f"one of: {', '.join(VARIANTS)}")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=60)
    p.add_argument("--patience", type=int, default=5)
    p.add_argument("--max-steps", type=int, default=None)
    p.add_argument("--augment-sigma", type=float, default=0.0)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="neurocine", description="EEG movies and recurrent-convolutional nets")
    ap.add_argument("--version", action="version", version=f"neurocine {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic EEG dataset")
    p.add_argument("config", help="synthetic config file, or 'default'")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("frames", help="render EEG movies from trials")
    _add_data_args(p, need_frames=False)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_frames)

    p = sub.add_parser("train", help="train one model")
    _add_data_args(p)
    _add_train_args(p)
    p.add_argument("--held-out", type=int, default=None, help="subject used as test set")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("cv", help="leave-subject-out cross-validation")
    _add_data_args(p)
    _add_train_args(p)
    p.add_argument("--subjects", type=int, nargs="+", default=None, help="restrict folds to these subjects")
    p.add_argument("--shuffle-labels", action="store_true", help="permute labels (chance control)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("viz", help="deconvnet back-projections of top-activating trials")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--frames", required=True)
    p.add_argument("--variant", choices=VARIANTS, default=None, metavar="VARIANT")
    p.add_argument("--layer", type=int, required=True)
    p.add_argument("--kernel", type=int, required=True)
    p.add_argument("--topk", type=int, default=9)
    p.add_argument("--scale", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_viz)
    return ap


def _validate(ap, args) -> None:
    if hasattr(args, "window_raw"):
        try:
            args.window = _window(args.window_raw)
        except argparse.ArgumentTypeError as exc:
            ap.error(str(exc))
    if args.command in ("frames", "train", "cv"):
        frames = getattr(args, "frames", None)
        if not frames and not (args.trials and args.montage):
            ap.error("provide --frames or both --trials and --montage")
    if args.command in ("train", "cv") and (args.epochs < 1 or args.patience < 1):
        ap.error("--epochs and --patience must be >= 1")
    if args.command == "viz" and (args.topk < 1 or args.scale < 1):
        ap.error("--topk and --scale must be >= 1")


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    _validate(ap, args)
    try:
        args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"neurocine {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (OSError, NeurocineError, ValueError) as exc:
        print(f"neurocine {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
