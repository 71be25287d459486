"""Command-line surface: synth, fit, svd, confidence, metrics, contour, export.

Every subcommand writes its outputs under a run directory and exits 0 on
success, 2 on a usage error, 1 on a runtime error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import confidence as conf
from . import dataio, fidelity, svd_variant, synth, trainer
from .contour import trace_contour
from .model_core import PredictionTable, SubsetMask, TrainConfig, subset_table

log = logging.getLogger("distillmap")


class UsageError(ValueError):
    pass


def _common_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--deterministic", action="store_true")
    sub.add_argument("--quiet", action="store_true")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="distillmap",
        description="Distill classifier prediction vectors into an explorable 2-D map",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("synth", help="generate a synthetic teacher table")
    p.add_argument("--classes", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--confusable", default="", help="pairs i:j:strength, comma separated")
    p.add_argument("--outlier-fraction", type=float, default=0.0)
    p.add_argument("--radius", type=float, default=4.0)
    p.add_argument("--blob-sd", type=float, default=0.55)
    p.add_argument("--softness", type=float, default=4.0)
    _common_flags(p)

    p = subs.add_parser("fit", help="train embeddings and the student model")
    p.add_argument("--input", required=True)
    p.add_argument("--run-dir", required=True)
    p.add_argument("--epochs", type=int, default=600)
    p.add_argument("--batch-size", type=int, default=500)
    p.add_argument("--lr-means", type=float, default=1e-2)
    p.add_argument("--lr-prior", type=float, default=5e-3)
    p.add_argument("--lr-embed", type=float, default=5e-2)
    p.add_argument("--mode", choices=("joint", "coordinate"), default="joint")
    p.add_argument("--init", choices=("random", "cluster-center"), default="cluster-center")
    p.add_argument("--anneal", default="", help="temperature breakpoints epoch:T,...")
    p.add_argument("--keep", default="", help="restrict to a class subset, e.g. 0,1,4")
    _common_flags(p)

    p = subs.add_parser("svd", help="closed-form rank-2 factorization of the logits")
    p.add_argument("--input", required=True)
    p.add_argument("--run-dir", required=True)
    _common_flags(p)

    p = subs.add_parser("confidence", help="fit confidence models and score rows")
    p.add_argument("--run-dir", required=True)
    p.add_argument("--kinds", default="kde,entropy")
    p.add_argument("--components", type=int, default=0, help="mixture size; 0 = K")
    p.add_argument("--bandwidth", type=float, default=0.0, help="override KDE bandwidth")
    _common_flags(p)

    p = subs.add_parser("metrics", help="compression quality and local fidelity")
    p.add_argument("--run-dir", required=True)
    p.add_argument("--knn", default="1,5,10")
    _common_flags(p)

    p = subs.add_parser("contour", help="iso-curves of the student marginal")
    p.add_argument("--run-dir", required=True)
    p.add_argument("--level", type=float, default=0.001)
    p.add_argument("--resolution", type=int, default=200)
    p.add_argument("--margin", type=float, default=2.0)
    _common_flags(p)

    p = subs.add_parser("export", help="bundle the run into a viewer artifact")
    p.add_argument("--run-dir", required=True)
    p.add_argument("--out", default="")
    p.add_argument("--classes", default="", help="comma-separated class names")
    _common_flags(p)

    return parser


def _parse_confusable(text: str):
    pairs = []
    if not text:
        return pairs
    for chunk in text.split(","):
        try:
            i, j, s = chunk.split(":")
            pairs.append((int(i), int(j), float(s)))
        except ValueError:
            raise UsageError(f"bad confusable pair {chunk!r}; expected i:j:strength") from None
    return pairs


def _parse_schedule(text: str):
    if not text:
        return None
    points = []
    for chunk in text.split(","):
        try:
            e, t = chunk.split(":")
            points.append((int(e), float(t)))
        except ValueError:
            raise UsageError(f"bad schedule point {chunk!r}; expected epoch:T") from None
    return tuple(points)


def _parse_int_list(text: str):
    try:
        return [int(v) for v in text.split(",") if v != ""]
    except ValueError:
        raise UsageError(f"expected a comma-separated integer list, got {text!r}") from None


def _run_path(args, name: str) -> str:
    return os.path.join(args.run_dir, name)


def _load_run(args):
    preds = dataio.load_predictions(_run_path(args, "predictions.csv"))
    emb, params, config = dataio.load_model(_run_path(args, "model.json"))
    return preds, emb, params, config


def _cmd_synth(args) -> int:
    table = synth.synth_teacher(
        classes=args.classes,
        n=args.n,
        confusable_pairs=_parse_confusable(args.confusable),
        outlier_fraction=args.outlier_fraction,
        seed=args.seed,
        radius=args.radius,
        blob_sd=args.blob_sd,
        softness=args.softness,
    )
    os.makedirs(os.path.dirname(os.path.abspath(args.out)), exist_ok=True)
    dataio.save_predictions(table, args.out)
    log.info("wrote %d x %d prediction table to %s", table.n_rows, table.n_classes, args.out)
    return 0


def _cmd_fit(args) -> int:
    table = dataio.load_predictions(args.input)
    if args.keep:
        mask = SubsetMask.from_indices(_parse_int_list(args.keep), table.n_classes)
        table = subset_table(table, mask)
    cfg = TrainConfig(
        epochs=args.epochs,
        batch_size=min(args.batch_size, table.n_rows),
        lr_means=args.lr_means,
        lr_prior=args.lr_prior,
        lr_embed=args.lr_embed,
        mode=args.mode,
        temperature_schedule=_parse_schedule(args.anneal),
        seed=args.seed,
        deterministic=args.deterministic,
        init=args.init,
    )
    os.makedirs(args.run_dir, exist_ok=True)
    emb, params, trace = trainer.train(table, cfg, trace_path=_run_path(args, "trace.csv"))
    dataio.save_predictions(table, _run_path(args, "predictions.csv"))
    config_echo = {
        "input": os.path.basename(args.input),
        "epochs": cfg.epochs,
        "batch_size": cfg.batch_size,
        "lr_means": cfg.lr_means,
        "lr_prior": cfg.lr_prior,
        "lr_embed": cfg.lr_embed,
        "mode": cfg.mode,
        "init": cfg.init,
        "anneal": args.anneal,
        "keep": args.keep,
        "seed": cfg.seed,
        "deterministic": cfg.deterministic,
    }
    dataio.save_model(_run_path(args, "model.json"), emb, params, config_echo)
    if trace.records:
        last = trace.records[-1]
        log.info(
            "fit finished: loss %.4f, teacher agreement %.3f", last.loss, last.acc_teacher
        )
    return 0


def _cmd_svd(args) -> int:
    table = dataio.load_predictions(args.input)
    model = svd_variant.fit_svd(table.effective_logits())
    os.makedirs(args.run_dir, exist_ok=True)
    doc = {
        "embed": model.embed.tolist(),
        "weights": model.weights.tolist(),
        "singular_values": model.singular_values.tolist(),
        "residual": model.residual,
        "teacher_agreement": svd_variant.teacher_agreement(
            model, table.effective_logits()
        ),
    }
    with open(_run_path(args, "svd.json"), "w") as fh:
        json.dump(doc, fh)
        fh.write("\n")
    log.info("rank-2 residual %.4g", model.residual)
    return 0


def _cmd_confidence(args) -> int:
    preds, emb, params, _ = _load_run(args)
    kinds = [k.strip() for k in args.kinds.split(",") if k.strip()]
    components = args.components or preds.n_classes
    scores = {}
    for kind in kinds:
        if kind == "kde":
            model = conf.fit_kde(
                emb, bandwidth=[args.bandwidth] * 2 if args.bandwidth else None
            )
        elif kind == "gmm":
            model = conf.fit_gmm(emb, components, seed=args.seed)
        elif kind == "dmm":
            model = conf.fit_dmm(preds, components, seed=args.seed)
        elif kind == "entropy":
            model = conf.entropy_model()
        else:
            raise UsageError(f"unknown confidence kind {kind!r}")
        scores[kind] = conf.score(model, emb=emb, preds=preds)
    with open(_run_path(args, "confidence.json"), "w") as fh:
        json.dump({k: [float(v) for v in s] for k, s in scores.items()}, fh)
        fh.write("\n")
    if preds.labels is not None:
        teacher_argmax = np.argmax(preds.probs, axis=1)
        for kind, s in scores.items():
            curve = conf.rejection_curve(s, preds.labels, teacher_argmax)
            dataio.write_rejection_csv(curve, _run_path(args, f"rejection_{kind}.csv"))
    else:
        log.info("no labels in the table; skipping rejection curves")
    return 0


def _cmd_metrics(args) -> int:
    preds, emb, params, _ = _load_run(args)
    knn = tuple(_parse_int_list(args.knn))
    report = fidelity.metrics_report(preds, emb, params, knn=knn)
    with open(_run_path(args, "metrics.json"), "w") as fh:
        json.dump(report.to_json_dict(), fh)
        fh.write("\n")
    if report.confusion is not None:
        dataio.write_confusion_csv(report.confusion, _run_path(args, "confusion.csv"))
    log.info(
        "kl_sym %.4f, teacher agreement %.3f", report.kl_sym_final, report.acc_teacher
    )
    return 0


def _cmd_contour(args) -> int:
    preds, emb, params, _ = _load_run(args)
    lo = np.minimum(emb.points.min(axis=0), params.means.min(axis=0)) - args.margin
    hi = np.maximum(emb.points.max(axis=0), params.means.max(axis=0)) + args.margin
    contour_set = trace_contour(
        params,
        level=args.level,
        bbox=(lo[0], hi[0], lo[1], hi[1]),
        resolution=args.resolution,
    )
    doc = [
        {
            "level": contour_set.level,
            "paths": [
                [[float(x), float(y)] for x, y in poly]
                for poly in contour_set.polylines
            ],
        }
    ]
    with open(_run_path(args, "contours.json"), "w") as fh:
        json.dump(doc, fh)
        fh.write("\n")
    log.info("extracted %d polylines", len(contour_set.polylines))
    return 0


def _cmd_export(args) -> int:
    preds, emb, params, config = _load_run(args)
    conf_scores = {}
    conf_path = _run_path(args, "confidence.json")
    if os.path.exists(conf_path):
        with open(conf_path) as fh:
            conf_scores = {k: np.asarray(v) for k, v in json.load(fh).items()}
    metrics_doc = {}
    metrics_path = _run_path(args, "metrics.json")
    if os.path.exists(metrics_path):
        with open(metrics_path) as fh:
            metrics_doc = json.load(fh)
    contours = []
    contours_path = _run_path(args, "contours.json")
    if os.path.exists(contours_path):
        with open(contours_path) as fh:
            contours = json.load(fh)
    classes = [c for c in args.classes.split(",") if c] or None
    artifact = dataio.build_artifact(
        preds,
        emb,
        params,
        metrics=metrics_doc,
        conf_scores=conf_scores,
        contours=contours,
        classes=classes,
        seed=args.seed,
        config=config,
        deterministic=args.deterministic,
    )
    out = args.out or _run_path(args, "artifact.json")
    dataio.export_run(artifact, out)
    log.info("wrote artifact with %d points to %s", len(artifact.points), out)
    return 0


_COMMANDS = {
    "synth": _cmd_synth,
    "fit": _cmd_fit,
    "svd": _cmd_svd,
    "confidence": _cmd_confidence,
    "metrics": _cmd_metrics,
    "contour": _cmd_contour,
    "export": _cmd_export,
}


def cli(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(message)s",
        stream=sys.stderr,
    )
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (dataio.ParseError, trainer.TrainingDiverged, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
