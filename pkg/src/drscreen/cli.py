"""Command-line entry point: train, evaluate, infer, verify-data, serve, report.

Experiments are driven by a YAML config file; a handful of flags override
file values, and the effective merged config is echoed into the output
directory for provenance. Unknown config keys are hard errors."""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np
import yaml

from . import datasets, metrics, model as model_mod, trainer
from .grading import stage_name
from .imaging import AugmentConfig, preprocess_for_inference
from .model import ModelConfig
from .trainer import TrainConfig

KNOWN_SECTIONS = {"model", "train", "augment", "data", "out_dir"}
KNOWN_DATA_KEYS = {"train_manifest", "validation_manifest", "image_dir",
                   "holdout_fraction"}


class CliError(ValueError):
    pass


def _build_section(cls, raw: dict, section: str):
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(raw) - known
    if unknown:
        raise CliError(f"unknown keys in config section {section!r}: {sorted(unknown)}")
    if section == "model" and "block_layers" in raw:
        raw = dict(raw, block_layers=tuple(raw["block_layers"]))
    if section == "augment" and "zoom_range" in raw:
        raw = dict(raw, zoom_range=tuple(raw["zoom_range"]))
    return cls(**raw)


def load_config(path) -> dict:
    raw = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
    if not isinstance(raw, dict):
        raise CliError(f"{path}: config must be a key/value tree")
    unknown = set(raw) - KNOWN_SECTIONS
    if unknown:
        raise CliError(f"{path}: unknown top-level config keys: {sorted(unknown)}")
    data = raw.get("data", {})
    bad = set(data) - KNOWN_DATA_KEYS
    if bad:
        raise CliError(f"{path}: unknown keys in config section 'data': {sorted(bad)}")
    return {
        "model": _build_section(ModelConfig, raw.get("model", {}), "model"),
        "train": _build_section(TrainConfig, raw.get("train", {}), "train"),
        "augment": _build_section(AugmentConfig, raw.get("augment", {}), "augment"),
        "data": data,
        "out_dir": raw.get("out_dir", "out"),
    }


def _echo_config(cfg: dict, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    merged = {
        "model": cfg["model"].to_dict(),
        "train": dataclasses.asdict(cfg["train"]),
        "augment": dataclasses.asdict(cfg["augment"]),
        "data": cfg["data"],
        "out_dir": str(out_dir),
    }
    merged["augment"]["zoom_range"] = list(merged["augment"]["zoom_range"])
    (out_dir / "effective-config.yaml").write_text(
        yaml.safe_dump(merged, sort_keys=True), encoding="utf-8")


def _load_images(records, side: int):
    out = []
    for rec in records:
        data = Path(rec.image_path).read_bytes()
        crop = getattr(rec, "crop", None)
        img = preprocess_for_inference(data, crop, target=side)
        grade = rec.diagnosis if hasattr(rec, "diagnosis") else rec.specialist_grade
        out.append((img, grade))
    return out


def cmd_train(args) -> int:
    cfg = load_config(args.config)
    out_dir = Path(args.out_dir or cfg["out_dir"])
    _echo_config(cfg, out_dir)
    records, summary = datasets.load_training_manifest(
        cfg["data"]["train_manifest"], cfg["data"]["image_dir"])
    pairs = _load_images(records, cfg["model"].input_side)

    frac = float(cfg["data"].get("holdout_fraction", 0.2))
    rng = np.random.default_rng(cfg["train"].seed)
    order = rng.permutation(len(pairs))
    n_test = max(1, int(round(frac * len(pairs))))
    test_set = [pairs[i] for i in order[:n_test]]
    train_set = [pairs[i] for i in order[n_test:]]
    if not train_set:
        raise CliError("holdout fraction leaves no training samples")

    ckpt_dir = out_dir / "checkpoints"
    ckpt_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "train-log.txt", "w", encoding="utf-8") as log:
        best, results = trainer.run_protocol(
            train_set, test_set, cfg["model"], cfg["train"],
            augment_cfg=cfg["augment"], progress_log=log)
    for res in results:
        meta = {"seed": cfg["train"].seed + res.run_index,
                "epochs": cfg["train"].epochs,
                "holdout_accuracy": res.holdout_accuracy,
                "loss_history": res.loss_history}
        model_mod.save_checkpoint(ckpt_dir / f"run-{res.run_index}.ckpt",
                                  res.model, meta)
    model_mod.save_checkpoint(ckpt_dir / "best.ckpt", best.model, {
        "seed": cfg["train"].seed + best.run_index,
        "epochs": cfg["train"].epochs,
        "run_index": best.run_index,
        "holdout_accuracy": best.holdout_accuracy,
        "loss_history": best.loss_history,
    })
    print(f"trained {len(results)} runs on {summary.total} images; "
          f"best run {best.run_index} holdout accuracy {best.holdout_accuracy:.4f}")
    return 0


def cmd_evaluate(args) -> int:
    net, _ = model_mod.load_checkpoint(args.checkpoint)
    records = datasets.load_validation_manifest(args.manifest, args.image_dir)
    pairs = []
    for rec in records:
        img = preprocess_for_inference(Path(rec.image_path).read_bytes(),
                                       rec.crop, target=net.config.input_side)
        pred = model_mod.predict(net, img)
        pairs.append(metrics.LabeledPrediction(
            true_grade=rec.specialist_grade,
            predicted_grade=pred.grade,
            dr_score=model_mod.dr_score(pred.probabilities)))
    n_patients = len({r.patient_code for r in records})
    report = metrics.build_report(pairs, n_patients=n_patients)

    out_dir = Path(args.out_dir)
    data_dir = out_dir / "report-data"
    data_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_text(metrics.report_to_json(report), encoding="utf-8")
    rendered = metrics.render_report(report, title=f"Evaluation: {args.manifest}")
    (out_dir / "report.txt").write_text(rendered, encoding="utf-8")
    (data_dir / "classwise-accuracy.csv").write_text(
        metrics.classwise_plot_data(report), encoding="utf-8")
    (data_dir / "roc-points.csv").write_text(
        metrics.roc_plot_data(report), encoding="utf-8")
    print(rendered, end="")
    return 0


def cmd_infer(args) -> int:
    net, _ = model_mod.load_checkpoint(args.checkpoint)
    img = preprocess_for_inference(Path(args.image).read_bytes(),
                                   target=net.config.input_side)
    pred = model_mod.predict(net, img)
    print(f"grade: {int(pred.grade)}")
    print(f"stage: {stage_name(pred.grade)}")
    print("probabilities: " + " ".join(f"{p:.6f}" for p in pred.probabilities))
    return 0


def cmd_verify_data(args) -> int:
    if args.kind == "training":
        records, _ = datasets.load_training_manifest(args.manifest, args.image_dir)
    else:
        records = datasets.load_validation_manifest(args.manifest, args.image_dir)
    report = datasets.verify_dataset(records)
    print(datasets.render_verification(report), end="")
    return 0 if not report.issues else 1


def cmd_serve(args) -> int:
    from .service import ServiceConfig, serve

    serve(ServiceConfig(checkpoint_path=Path(args.checkpoint),
                        store_path=Path(args.store),
                        host=args.host, port=args.port,
                        retain_images=args.retain_images))
    return 0


def cmd_report(args) -> int:
    report = metrics.report_from_json(Path(args.report).read_text(encoding="utf-8"))
    print(metrics.render_report(report, title=f"Evaluation: {args.report}"), end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="drscreen",
                                     description="DR screening toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="run the multi-run training protocol")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", default=None)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("evaluate", help="evaluate a checkpoint on a validation manifest")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--image-dir", required=True)
    p.add_argument("--out-dir", default="out")
    p.set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("infer", help="grade a single image")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--image", required=True)
    p.set_defaults(fn=cmd_infer)

    p = sub.add_parser("verify-data", help="check a dataset's images and labels")
    p.add_argument("--manifest", required=True)
    p.add_argument("--image-dir", required=True)
    p.add_argument("--kind", choices=["training", "validation"], default="training")
    p.set_defaults(fn=cmd_verify_data)

    p = sub.add_parser("serve", help="start the screening service")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--store", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--retain-images", action="store_true")
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("report", help="re-render a stored evaluation report")
    p.add_argument("--report", required=True)
    p.set_defaults(fn=cmd_report)

    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.fn(args)
    except (CliError, model_mod.ConfigError, model_mod.CheckpointError,
            model_mod.ShapeError, datasets.ManifestError,
            metrics.DataError, trainer.DataError, OSError, ValueError) as exc:
        print(f"error [{args.command}]: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
