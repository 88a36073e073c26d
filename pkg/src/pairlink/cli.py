"""Command-line interface: stage subcommands plus the full pipeline run.

Every subcommand accepts --config PATH (flat key=value file) and a set of
flags that override the file, so a run is always reproducible from one
effective config. Exit codes: 0 on success (and WELL_FIT where a fit
diagnosis applies), 2 when a diagnosis reports anything other than
WELL_FIT, 1 on any error including bad usage.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import ConfigError, PairlinkError
from .evaluate import confusion, emit_report, fit_diagnosis, metrics, render_csv, render_text
from .ingest import COLUMNS, load_corpus, serialize_row
from .models import load_model, predict, save_model, train
from .pairgen import build_comparison_vector, generate_candidate_pairs, load_raw_records
from .pipeline import (
    SPLIT_ORDER,
    PipelineConfig,
    run_pipeline,
    validate_config,
)
from .preprocess import (
    filter_rows,
    impute_and_vectorize,
    preprocess_report,
    profile_columns,
    select_columns,
)
from .sampling import rebalance_negatives, split_report, stratified_split


class _Parser(argparse.ArgumentParser):
    """argparse parser whose usage errors surface as exit code 1, not 2."""

    def error(self, message):
        raise ConfigError(message)


# flag destination -> PipelineConfig field, for flags that shadow config keys
_FLAG_ATTRS = {
    "input": "input_dir",
    "out_dir": "output_dir",
    "pattern": "pattern",
    "missing_token": "missing_token",
    "partitions": "partitions",
    "workers": "workers",
    "seed": "seed",
    "neg_fraction": "negative_fraction",
    "impute": "impute",
    "lr": "learning_rate",
    "epochs": "epochs",
    "l2": "l2",
    "tol": "tolerance",
}


def _config_from_args(args: argparse.Namespace) -> PipelineConfig:
    overrides = {}
    for flag, attr in _FLAG_ATTRS.items():
        value = getattr(args, flag, None)
        if value is not None:
            overrides[attr] = value
    return validate_config(getattr(args, "config", None), **overrides)


def _write_or_print(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _load(cfg: PipelineConfig):
    return load_corpus(
        cfg.input_dir,
        cfg.pattern,
        missing_token=cfg.missing_token,
        partitions=cfg.partitions,
        workers=cfg.workers,
    )


def _prepare_split(cfg: PipelineConfig):
    """Shared front half of train/evaluate: load, preprocess, rebalance, split."""
    table, _ = _load(cfg)
    table = table.cache()
    profiles = profile_columns(table)
    retained = select_columns(profiles, cfg.col_missing_max, strict=cfg.col_missing_strict)
    full = filter_rows(table, retained, cfg.row_min_present)
    plan = cfg.plan()
    rebalanced = rebalance_negatives(full, plan.negative_fraction, plan.seed)
    return stratified_split(rebalanced, plan), tuple(retained)


def cmd_ingest(args) -> int:
    cfg = _config_from_args(args)
    _, manifest = _load(cfg)
    _write_or_print(manifest.to_text(), args.out)
    if args.out is not None:
        print(f"files={len(manifest.file_names)} rows={manifest.total_rows}")
    return 0


def cmd_preprocess(args) -> int:
    cfg = _config_from_args(args)
    table, _ = _load(cfg)
    table = table.cache()
    profiles = profile_columns(table)
    retained = select_columns(profiles, cfg.col_missing_max, strict=cfg.col_missing_strict)
    full = filter_rows(table, retained, cfg.row_min_present)
    _write_or_print(preprocess_report(profiles, retained, len(full)), args.out)
    if args.out is not None:
        print(f"columns={','.join(retained)} rows={len(full)}")
    return 0


def cmd_sample(args) -> int:
    cfg = _config_from_args(args)
    split, _ = _prepare_split(cfg)
    _write_or_print(split_report(split, cfg.plan()), args.out)
    if args.out is not None:
        totals = {name: sum(counts.values()) for name, counts in split.class_counts.items()}
        print(" ".join(f"{name}={n}" for name, n in totals.items()))
    return 0


def cmd_pairgen(args) -> int:
    records = load_raw_records(args.input)
    by_id = {r.id: r for r in records}
    pairs = sorted(generate_candidate_pairs(records, args.phonetic))
    header = ",".join(c for c in COLUMNS if c != "is_match")
    lines = [header]
    for id_1, id_2 in pairs:
        vec = build_comparison_vector(by_id[id_1], by_id[id_2], args.name_sim)
        lines.append(serialize_row(vec, include_label=False))
    _write_or_print("\n".join(lines) + "\n", args.out)
    if args.out is not None:
        print(f"records={len(records)} pairs={len(pairs)}")
    return 0


def cmd_train(args) -> int:
    cfg = _config_from_args(args)
    split, retained = _prepare_split(cfg)
    matrix = impute_and_vectorize(split.train, retained, cfg.impute)
    model = train(matrix, cfg.train_config(args.loss))
    save_model(model, args.out)
    print(
        f"loss={model.loss} epochs_run={model.epochs_run} "
        f"converged={str(model.converged).lower()} final_loss={model.final_loss:.6f}"
    )
    return 0


def cmd_evaluate(args) -> int:
    cfg = _config_from_args(args)
    model = load_model(args.model)
    split, _ = _prepare_split(cfg)
    wanted = SPLIT_ORDER if args.split == "all" else (args.split,)
    splits = split.splits()
    train_means = None
    if cfg.impute == "mean":
        train_means = impute_and_vectorize(split.train, model.columns, "mean").means
    reports = {}
    for name in wanted:
        fm = impute_and_vectorize(splits[name], model.columns, cfg.impute, means=train_means)
        labels, _ = predict(model, fm)
        reports[name] = metrics(confusion(labels, fm.y), model=model.loss, split=name)
    diagnosis = None
    if args.split == "all":
        diagnosis = fit_diagnosis(
            reports["train"],
            reports["validation"],
            reports["test"],
            gap_threshold=cfg.gap_threshold,
            underfit_floor=cfg.underfit_floor,
        )
    ordered = [reports[name] for name in wanted]
    diagnoses = [diagnosis] if diagnosis is not None else ()
    if args.out is None:
        text = render_csv(ordered) if args.format == "csv" else render_text(ordered, diagnoses)
        sys.stdout.write(text)
    else:
        emit_report(ordered, args.out, args.format, diagnoses=diagnoses)
    if diagnosis is not None:
        print(f"diagnosis={diagnosis.status}")
        if diagnosis.status != "WELL_FIT":
            return 2
    return 0


def cmd_run(args) -> int:
    cfg = _config_from_args(args)
    manifest, diagnoses = run_pipeline(cfg, progress=print)
    out_dir = Path(cfg.output_dir)
    for name in manifest.report_paths:
        print(f"report: {out_dir / name}")
    ok = True
    for name, diagnosis in diagnoses.items():
        print(f"diagnosis {name}: {diagnosis.status} ({diagnosis.reason})")
        ok = ok and diagnosis.status == "WELL_FIT"
    return 0 if ok else 2


def _add_config_flags(p: _Parser, *, data: bool = True) -> None:
    p.add_argument("--config", metavar="PATH", help="flat key=value config file")
    if data:
        p.add_argument("--input", metavar="DIR", help="corpus directory")
        p.add_argument("--pattern", metavar="GLOB", help="corpus file glob")
        p.add_argument("--missing-token", dest="missing_token", metavar="TOK")
        p.add_argument("--partitions", type=int, metavar="N")
        p.add_argument("--workers", type=int, metavar="N")
        p.add_argument("--seed", type=int, metavar="N")


def build_parser() -> _Parser:
    parser = _Parser(prog="pairlink", description="record-linkage pipeline over comparison patterns")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("ingest", parents=[], help="scan a corpus and write its manifest")
    _add_config_flags(p)
    p.add_argument("--out", metavar="FILE", help="manifest destination (default stdout)")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("preprocess", help="column/row filtering report")
    _add_config_flags(p)
    p.add_argument("--out", metavar="FILE", help="report destination (default stdout)")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("sample", help="rebalance negatives and split; report counts")
    _add_config_flags(p)
    p.add_argument("--neg-fraction", dest="neg_fraction", type=float, metavar="F")
    p.add_argument("--out", metavar="FILE", help="report destination (default stdout)")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("pairgen", help="blocked comparison patterns from raw person records")
    p.add_argument("--input", required=True, metavar="FILE", help="raw person records CSV")
    p.add_argument("--phonetic", default="soundex", metavar="ALG")
    p.add_argument("--name-sim", dest="name_sim", default="jaro-winkler", metavar="SIM")
    p.add_argument("--out", metavar="FILE", help="patterns destination (default stdout)")
    p.set_defaults(func=cmd_pairgen)

    p = sub.add_parser("train", help="train one model on the train split")
    _add_config_flags(p)
    p.add_argument("--loss", choices=("logistic", "hinge"), default="logistic")
    p.add_argument("--lr", type=float, metavar="R", help="learning rate")
    p.add_argument("--epochs", type=int, metavar="N", help="gradient-descent epochs")
    p.add_argument("--l2", type=float, metavar="S", help="L2 penalty strength")
    p.add_argument("--tol", type=float, metavar="T", help="convergence tolerance")
    p.add_argument("--impute", choices=("zero", "mean"))
    p.add_argument("--out", required=True, metavar="FILE", help="model destination")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score a saved model on one or all splits")
    _add_config_flags(p)
    p.add_argument("--model", required=True, metavar="FILE", help="saved model path")
    p.add_argument("--split", choices=SPLIT_ORDER + ("all",), default="test")
    p.add_argument("--format", choices=("csv", "text"), default="csv")
    p.add_argument("--impute", choices=("zero", "mean"))
    p.add_argument("--out", metavar="FILE", help="report destination (default stdout)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("run", help="full pipeline: ingest through reports")
    _add_config_flags(p)
    p.add_argument("--neg-fraction", dest="neg_fraction", type=float, metavar="F")
    p.add_argument("--impute", choices=("zero", "mean"))
    p.add_argument("--out", dest="out_dir", metavar="DIR", help="output directory")
    p.set_defaults(func=cmd_run)

    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except PairlinkError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
