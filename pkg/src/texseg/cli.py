"""Command-line entry point: ``texseg synth|train|segment|compare``.

Exit codes: 0 success, 1 usage error, 2 bad input data or I/O failure,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace

import numpy as np

from .classifier import DEFAULT_RIDGE, load_model, save_model
from .errors import DataError, NumericalError
from .image import WindowSpec, load_image, load_label_map, save_label_map, save_label_png
from .mosaic import PRESETS, mosaic_from_dict, preset_mosaic
from .pipeline import EXTRACTORS, RunConfig, compare, compare_mosaics, segment_image, train_segmenter, write_synthetic
from .quality import format_report, quality_report, write_report_csv

log = logging.getLogger("texseg")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _common(p: argparse.ArgumentParser, extractor_choices=EXTRACTORS + ("all",)) -> None:
    p.add_argument("--config", help="JSON run configuration; command-line flags override it")
    p.add_argument("--extractor", choices=extractor_choices)
    p.add_argument("--window-size", type=int)
    p.add_argument("--step", type=int, help="window step when segmenting (1 = every pixel)")
    p.add_argument("--train-step", type=int, help="window stride over reference images")
    p.add_argument("--levels", type=int, help="grey levels after quantization")
    p.add_argument("--diagonal-covariance", action="store_true", default=None)
    p.add_argument("--ridge", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--out-dir")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="texseg", description="Supervised texture segmentation with four feature extractors.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    s = sub.add_parser("synth", help="write a synthetic mosaic, its truth map and reference textures")
    s.add_argument("--preset", choices=PRESETS, default="five")
    s.add_argument("--mosaic", help="JSON mosaic description (overrides --preset)")
    s.add_argument("--size", type=int, default=256)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--levels", type=int, default=32)
    s.add_argument("--out-dir", required=True)
    s.add_argument("-v", "--verbose", action="store_true")

    t = sub.add_parser("train", help="fit a segmenter from reference images")
    _common(t, EXTRACTORS)
    t.add_argument("--reference", action="append", default=[], metavar="CLASS=PATH",
                   help="reference image for a class; repeat per image")
    t.add_argument("--model", required=True, help="output model file (JSON)")

    g = sub.add_parser("segment", help="label every pixel of an image with a trained model")
    _common(g, EXTRACTORS)
    g.add_argument("--model", required=True)
    g.add_argument("--image", required=True)
    g.add_argument("--truth", help="ground-truth label map for a quality report")

    c = sub.add_parser("compare", help="run all extractors on the same data and report quality")
    _common(c)
    c.add_argument("--preset", action="append", choices=PRESETS,
                   help="synthetic mosaic preset; repeat to compare several")
    c.add_argument("--reference", action="append", default=[], metavar="CLASS=PATH")
    c.add_argument("--image")
    c.add_argument("--truth")
    c.add_argument("--no-png", action="store_true", help="skip colour label-map PNGs")
    return p


def _load_json(path: str) -> dict:
    try:
        with open(path) as fh:
            d = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(d, dict):
        raise DataError(f"{path}: configuration must be a JSON object")
    return d


def _parse_references(items) -> tuple[tuple[str, int], ...]:
    out = []
    for item in items:
        cls, sep, path = item.partition("=")
        if not sep or not cls.strip().lstrip("-").isdigit():
            raise UsageError(f"--reference expects CLASS=PATH, got {item!r}")
        out.append((path, int(cls)))
    return tuple(out)


_KEYS = {"extractor", "window_size", "step", "padding", "train_step", "levels", "diagonal_covariance",
         "ridge", "seed", "workers", "training", "target", "truth", "mosaic", "out_dir"}


def make_config(args, base: dict | None = None) -> RunConfig:
    """Merge a JSON config (``base``) with command-line flags into a :class:`RunConfig`."""
    d = dict(base or {})
    unknown = set(d) - _KEYS
    if unknown:
        raise DataError(f"unknown configuration keys: {', '.join(sorted(unknown))}")
    for key in ("extractor", "window_size", "step", "train_step", "levels", "diagonal_covariance",
                "ridge", "seed", "workers", "out_dir"):
        v = getattr(args, key, None)
        if v is not None:
            d[key] = v
    try:
        window = WindowSpec(int(d.get("window_size", 32)), int(d.get("step", 1)), d.get("padding", "mirror"))
        training = tuple((str(t["image"]), int(t["class"])) for t in d.get("training", []))
    except (KeyError, TypeError) as exc:
        raise DataError(f"malformed configuration: {exc}") from exc
    refs = _parse_references(getattr(args, "reference", []) or [])
    if refs:
        training = refs
    mosaic = d.get("mosaic")
    if isinstance(mosaic, dict):
        mosaic = mosaic_from_dict({**mosaic, "seed": mosaic.get("seed", d.get("seed", 0))})
    return RunConfig(
        extractor=d.get("extractor", "all"),
        window=window,
        train_step=int(d.get("train_step", 8)),
        levels=int(d.get("levels", 32)),
        diagonal=bool(d.get("diagonal_covariance", False)),
        ridge=float(d.get("ridge", DEFAULT_RIDGE)),
        seed=int(d.get("seed", 0)),
        workers=int(d.get("workers", 1)),
        training=training,
        target=getattr(args, "image", None) or d.get("target"),
        truth=getattr(args, "truth", None) or d.get("truth"),
        mosaic=mosaic,
        out_dir=d.get("out_dir"),
        write_png=not getattr(args, "no_png", False),
    )


def cmd_synth(args) -> int:
    if args.mosaic:
        d = _load_json(args.mosaic)
        d.setdefault("seed", args.seed)
        spec = mosaic_from_dict(d)
    else:
        spec = preset_mosaic(args.preset, args.seed, args.size, args.levels)
    paths = write_synthetic(spec, args.out_dir)
    for k, v in paths.items():
        print(f"{k}: {v}")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = make_config(args, _load_json(args.config) if args.config else None)
    if cfg.extractor == "all":
        raise UsageError("train needs a single --extractor")
    cfg.validate()
    refs = {}
    for path, c in cfg.training:
        try:
            refs.setdefault(c, []).append(load_image(path, cfg.levels))
        except DataError as exc:
            raise DataError(f"class {c}: {exc}") from exc
    seg = train_segmenter(refs, cfg.extractor, cfg)
    save_model(args.model, seg)
    print(f"trained {cfg.extractor} model on {len(refs)} classes -> {args.model}")
    return EXIT_OK


def cmd_segment(args) -> int:
    cfg = make_config(args, _load_json(args.config) if args.config else None)
    seg = load_model(args.model)
    md = seg.metadata
    # unless given explicitly, take levels and window size from the model
    if args.levels is None and "levels" in md:
        cfg = replace(cfg, levels=int(md["levels"]))
    if args.window_size is None and "window_size" in md:
        cfg = replace(cfg, window=replace(cfg.window, size=int(md["window_size"])))
    if cfg.workers < 1:
        raise DataError("workers must be >= 1")
    extractor = args.extractor or seg.extractor
    img = load_image(args.image, cfg.levels)
    labels, feats = segment_image(img, seg, cfg, extractor)
    out_dir = cfg.out_dir or "."
    os.makedirs(out_dir, exist_ok=True)
    save_label_map(os.path.join(out_dir, f"labels_{extractor}.pgm"), labels)
    save_label_png(os.path.join(out_dir, f"labels_{extractor}.png"), labels)
    if args.truth:
        truth = load_label_map(args.truth)
        if truth.shape != labels.shape:
            raise DataError("ground-truth label map and image differ in size")
        n = max(truth.num_classes, labels.num_classes)
        rep = quality_report(labels.labels, truth.labels, feats, feats, ridge=cfg.ridge)
        write_report_csv(os.path.join(out_dir, f"report_{extractor}.csv"), {extractor: rep}, n)
        print(format_report(extractor, rep))
    print(f"labels written to {out_dir}")
    return EXIT_OK


def cmd_compare(args) -> int:
    base = _load_json(args.config) if args.config else None
    cfg = make_config(args, base)
    if args.preset:
        mosaics = {name: preset_mosaic(name, cfg.seed, levels=cfg.levels) for name in args.preset}
        if len(mosaics) == 1:
            (spec,) = mosaics.values()
            results = {args.preset[0]: compare(replace(cfg, mosaic=spec))}
        else:
            results = compare_mosaics(mosaics, cfg)
    else:
        results = {"": compare(cfg)}
    failed = 0
    for name, res in results.items():
        for r in res:
            head = f"[{name}] " if name else ""
            if r.error:
                failed += 1
                print(f"{head}{r.extractor}: FAILED ({r.error})")
            elif r.report is not None:
                print(head + format_report(r.extractor, r.report))
            else:
                print(f"{head}{r.extractor}: done (no ground truth)")
    if cfg.out_dir:
        print(f"outputs written to {cfg.out_dir}")
    total = sum(len(r) for r in results.values())
    return EXIT_NUMERIC if failed == total else EXIT_OK


COMMANDS = {"synth": cmd_synth, "train": cmd_train, "segment": cmd_segment, "compare": cmd_compare}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"texseg: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"texseg: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, OSError) as exc:
        print(f"texseg: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
