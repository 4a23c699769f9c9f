"""Command-line entry point.

Subcommands cover the whole workflow: synthesize data, segment and extract,
train and predict, cross-validated evaluation, ablation tables, PCA
projections, benchmarks, and the feature layout manifest. All tabular output
is CSV with headers; bench emits JSON. Repeated runs with the same flags and
seed produce byte-identical files (bench timings excepted).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

from . import evalkit, pipeline, pose, synthgen
from .aggregate import DescriptorConfig, descriptor_layout, descriptor_matrix
from .ensemble import TrainParams


def _write_csv(path, header, rows) -> None:
    def emit(fh):
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)

    if path in (None, "-"):
        emit(sys.stdout)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            emit(fh)


def _add_train_params(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--rounds", type=int, default=100, help="boosting rounds")
    parser.add_argument("--max-depth", type=int, default=6)
    parser.add_argument("--learning-rate", type=float, default=0.3)
    parser.add_argument("--min-split-gain", type=float, default=0.0)
    parser.add_argument("--min-leaf-samples", type=int, default=1)
    parser.add_argument("--subsample", type=float, default=1.0)
    parser.add_argument("--seed", type=int, default=42)


def _params_from(args) -> TrainParams:
    return TrainParams(
        rounds=args.rounds,
        max_depth=args.max_depth,
        learning_rate=args.learning_rate,
        min_split_gain=args.min_split_gain,
        min_leaf_samples=args.min_leaf_samples,
        subsample_fraction=args.subsample,
        seed=args.seed,
    )


def _load_valid(path) -> pose.Dataset:
    return pose.validate_dataset(pose.load_sequences(path))


def _cmd_synth(args) -> int:
    config = synthgen.SynthConfig(
        n_subjects=args.subjects,
        n_objects=args.objects,
        sequences_per_cell=args.sequences_per_cell,
        fps=args.fps,
        grasp_seconds=args.grasp_seconds,
        use_seconds=args.use_seconds,
        noise_std=args.noise_std,
        seed=args.seed,
    )
    dataset = synthgen.generate(config)
    pose.save_sequences(dataset, args.out)
    print(f"wrote {len(dataset)} sequences to {args.out}")
    return 0


def _cmd_segment(args) -> int:
    dataset = _load_valid(args.input)
    segments = []
    for seq in dataset:
        segments.extend(
            pose.segment_sequence(seq, args.window_seconds, args.overlap)
        )
    pose.save_sequences(pose.Dataset(tuple(segments)), args.out)
    print(f"wrote {len(segments)} segments to {args.out}")
    return 0


def _cmd_extract(args) -> int:
    config = DescriptorConfig.from_string(args.features)
    dataset = _load_valid(args.input)
    matrix = descriptor_matrix(dataset, config)
    names = [name for _, name in descriptor_layout(config)]
    header = ["id", "subject", "object", "interaction"] + names
    rows = (
        [seq.id, seq.subject, seq.object, seq.interaction] + list(matrix[i])
        for i, seq in enumerate(dataset)
    )
    _write_csv(args.out, header, rows)
    return 0


def _cmd_train(args) -> int:
    config = DescriptorConfig.from_string(args.features)
    dataset = _load_valid(args.input)
    model = pipeline.train_pipeline(
        dataset, config, _params_from(args), augment=args.augment
    )
    total = pipeline.save_pipeline(model, args.out)
    print(f"wrote pipeline model ({total} bytes) to {args.out}")
    return 0


def _cmd_predict(args) -> int:
    model = pipeline.load_pipeline(args.model)
    dataset = _load_valid(args.input)
    rows = []
    for seq in dataset:
        pred = pipeline.predict_pipeline(model, seq)
        rows.append([seq.id, pred.object, pred.hoi, pred.subject])
    _write_csv(args.out, ["id", "object", "hoi", "subject"], rows)
    return 0


def _cmd_evaluate(args) -> int:
    config = DescriptorConfig.from_string(args.features)
    dataset = _load_valid(args.input)
    result = evalkit.cross_validate(
        dataset, config, _params_from(args), k=args.k, seed=args.seed,
        augment=args.augment,
    )
    rows = []
    for stage in evalkit.STAGES:
        report = result.stages[stage]
        for cls in report.classes:
            m = report.per_class[cls]
            rows.append(
                [stage, cls, m.accuracy, m.precision, m.recall, m.f1, m.support]
            )
        rows.append([stage, "__macro__", "", "", "", report.macro_f1, ""])
    _write_csv(
        args.out,
        ["stage", "class", "accuracy", "precision", "recall", "f1", "support"],
        rows,
    )
    return 0


def _cmd_ablate(args) -> int:
    configs = [
        DescriptorConfig.from_string(part)
        for part in args.feature_sets.split(",")
        if part.strip()
    ]
    dataset = _load_valid(args.input)
    rows = evalkit.run_ablation(
        dataset, configs, _params_from(args), k=args.k, seed=args.seed,
        augment=args.augment,
    )
    text = evalkit.ablation_csv(rows)
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return 0


def _cmd_pca(args) -> int:
    config = DescriptorConfig.from_string(args.features)
    dataset = _load_valid(args.input)
    matrix = descriptor_matrix(dataset, config)
    projection = evalkit.pca2(matrix)
    rows = []
    for i, seq in enumerate(dataset):
        label = getattr(seq, args.label_field)
        rows.append([seq.id, label, projection[i, 0], projection[i, 1]])
    _write_csv(args.out, ["id", "label", "pc1", "pc2"], rows)
    return 0


def _cmd_bench(args) -> int:
    config = DescriptorConfig.from_string(args.features)
    dataset = _load_valid(args.input)
    report = evalkit.bench(dataset, config, _params_from(args))
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    return 0


def _cmd_manifest(args) -> int:
    config = DescriptorConfig.from_string(args.features)
    layout = descriptor_layout(config)
    rows = [[i, fam, name] for i, (fam, name) in enumerate(layout)]
    _write_csv(args.out, ["index", "family", "name"], rows)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="i2s",
        description="Hand-pose descriptors and the three-stage "
        "object/interaction/subject classification pipeline.",
        epilog="Set I2S_THREADS to cap worker parallelism "
        "(default: machine parallelism).",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a synthetic JSONL dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--subjects", type=int, default=6)
    p.add_argument("--objects", type=int, default=4)
    p.add_argument("--sequences-per-cell", type=int, default=10)
    p.add_argument("--fps", type=float, default=30.0)
    p.add_argument("--grasp-seconds", type=float, default=5.0)
    p.add_argument("--use-seconds", type=float, default=11.0)
    p.add_argument("--noise-std", type=float, default=0.002)
    p.add_argument("--seed", type=int, default=42)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("segment", help="validate and window sequences")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--window-seconds", type=float, required=True)
    p.add_argument("--overlap", type=float, default=0.5)
    p.set_defaults(func=_cmd_segment)

    p = sub.add_parser("extract", help="descriptor matrix as CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--features", default="SOKFI")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_extract)

    p = sub.add_parser("train", help="train the three-stage pipeline")
    p.add_argument("--input", required=True)
    p.add_argument("--features", default="SOKI")
    p.add_argument("--out", required=True, help="model directory")
    p.add_argument("--augment", choices=pipeline.AUGMENT_MODES, default="truth")
    _add_train_params(p)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("predict", help="per-sequence predictions as CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("evaluate", help="stratified k-fold metrics as CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--features", default="SOKI")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--augment", choices=pipeline.AUGMENT_MODES, default="truth")
    p.add_argument("--out", default=None)
    _add_train_params(p)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("ablate", help="per-feature-set F1 table as CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--feature-sets", required=True, help="comma list, e.g. K,I,SOKI")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--augment", choices=pipeline.AUGMENT_MODES, default="truth")
    p.add_argument("--out", default=None)
    _add_train_params(p)
    p.set_defaults(func=_cmd_ablate)

    p = sub.add_parser("pca", help="2-D principal component projection as CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--features", default="FI")
    p.add_argument(
        "--label-field",
        choices=("subject", "object", "interaction"),
        default="subject",
    )
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_pca)

    p = sub.add_parser("bench", help="training/inference timing and model size (JSON)")
    p.add_argument("--input", required=True)
    p.add_argument("--features", default="SOKI")
    p.add_argument("--out", default=None)
    _add_train_params(p)
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("manifest", help="feature layout (index, family, name) as CSV")
    p.add_argument("--features", default="SOKFI")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_manifest)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
