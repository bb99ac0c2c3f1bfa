"""Command-line front end.

Subcommands: simulate | pendulum | compare | train | generate | probtable.
Every run writes a manifest (subcommand, seed, config hash, tool version)
into its output directory; rerunning with an identical manifest reproduces
all JSON/CSV outputs byte for byte.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .datatable import SplitSpec, Table, normalize, read_csv, write_csv
from .errors import InvalidArgumentError, ScmTestError, TableParseError
from .graph import hamming, prior_from_json
from .harness import (
    RunRecord,
    SimConfig,
    TrainConfig,
    compare_report,
    evaluate,
    prob_table,
    records_from_jsonl,
    records_to_jsonl,
    run_hypothesis_battery,
    run_simulation_sweep,
    train,
)
from .models import attach_context, load_checkpoint, save_checkpoint, summarize_columns, synthesize
from .synthgen import NoiseSpec, PENDULUM_COLUMNS, pendulum_prior, pendulum_table

DEFAULT_SEED = 1


class UsageError(Exception):
    """Configuration or argument problem; maps to exit code 2."""


def _canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_hash(obj) -> str:
    return hashlib.sha256(_canonical_json(obj).encode("utf-8")).hexdigest()


def _load_json(path) -> dict:
    p = Path(path)
    if not p.exists():
        raise UsageError(f"config file not found: {path}")
    try:
        return json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise UsageError(f"invalid JSON in {path}: {exc}") from exc


def _resolve_seed(flag_seed, config_seed=None) -> int:
    if flag_seed is not None:
        return int(flag_seed)
    if config_seed is not None:
        return int(config_seed)
    env = os.environ.get("CHT_SEED")
    if env:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"CHT_SEED must be an integer, got {env!r}") from None
    return DEFAULT_SEED


def _write_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=1)
        fh.write("\n")


def write_manifest(out_dir: Path, subcommand: str, seed: int,
                   config_obj, config_path=None) -> None:
    manifest = {
        "tool": "scmtest",
        "version": __version__,
        "subcommand": subcommand,
        "master_seed": seed,
        "config_path": str(config_path) if config_path else None,
        "config_hash": config_hash(config_obj),
        "config": config_obj,
        "out_dir": str(out_dir),
    }
    _write_json(out_dir / "manifest.json", manifest)


def _parse_split(text: str) -> SplitSpec:
    """Split syntax: 'random:<test_fraction>' or '<column>@<q>'."""
    if text.startswith("random:"):
        try:
            return SplitSpec.random(float(text.split(":", 1)[1]))
        except (ValueError, InvalidArgumentError) as exc:
            raise UsageError(f"bad random split {text!r}: {exc}") from exc
    if "@" in text:
        column, _, q_text = text.rpartition("@")
        try:
            return SplitSpec.quantile(column, float(q_text), allow_custom_q=True)
        except (ValueError, InvalidArgumentError) as exc:
            raise UsageError(f"bad quantile split {text!r}: {exc}") from exc
    raise UsageError(f"unrecognized split {text!r}; use 'random:0.25' or 'col@0.75'")


def _load_data(source: str, seed: int, n: int, snr_db: float) -> Table:
    if source == "builtin:pendulum":
        rng = np.random.default_rng(seed)
        return pendulum_table(n, NoiseSpec(snr_db), rng)
    if source.startswith("builtin:"):
        raise UsageError(f"unknown builtin dataset {source!r}")
    if not Path(source).exists():
        raise UsageError(f"data file not found: {source}")
    try:
        return read_csv(source)
    except TableParseError as exc:
        raise UsageError(f"bad data file {source}: {exc}") from exc


def _load_hypothesis(path) -> tuple[str, object]:
    p = Path(path)
    if not p.exists():
        raise UsageError(f"hypothesis file not found: {path}")
    try:
        prior = prior_from_json(json.loads(p.read_text(encoding="utf-8")))
    except (json.JSONDecodeError, InvalidArgumentError) as exc:
        raise UsageError(f"bad hypothesis file {path}: {exc}") from exc
    return p.stem, prior


def _snr_value(text: str) -> float:
    if str(text).lower() in ("inf", "none", "noiseless"):
        return math.inf
    try:
        return float(text)
    except ValueError:
        raise UsageError(f"bad SNR value {text!r}") from None


def prob_table_svg(pt) -> str:
    """Small standalone heatmap of the win-probability matrix."""
    cell, margin = 64, 96
    n = len(pt.tuples)
    size_w = margin + n * cell + 8
    size_h = margin + n * cell + 8

    def color(p: float) -> str:
        # blue (0) -> white (0.5) -> red (1)
        if p <= 0.5:
            t = p / 0.5
            r, g, b = int(70 + t * 185), int(115 + t * 140), 255
        else:
            t = (p - 0.5) / 0.5
            r, g, b = 255, int(255 - t * 155), int(255 - t * 185)
        return f"rgb({r},{g},{b})"

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size_w}" height="{size_h}" '
        f'font-family="monospace" font-size="11">',
        '<text x="4" y="14">P(row beats col), OOD test loss</text>',
    ]
    for k, t in enumerate(pt.tuples):
        label = f"({t[0]}+,{t[1]}-)"
        x = margin + k * cell + cell // 2
        parts.append(f'<text x="{x}" y="{margin - 8}" text-anchor="middle">{label}</text>')
        y = margin + k * cell + cell // 2
        parts.append(f'<text x="{margin - 8}" y="{y + 4}" text-anchor="end">{label}</text>')
    for i, rt in enumerate(pt.tuples):
        for j, ct in enumerate(pt.tuples):
            x, y = margin + j * cell, margin + i * cell
            got = pt.cell(rt, ct)
            if got is None:
                parts.append(f'<rect x="{x}" y="{y}" width="{cell}" height="{cell}" '
                             'fill="rgb(238,238,238)" stroke="white"/>')
                continue
            prob = got[0]
            parts.append(f'<rect x="{x}" y="{y}" width="{cell}" height="{cell}" '
                         f'fill="{color(prob)}" stroke="white"/>')
            parts.append(f'<text x="{x + cell // 2}" y="{y + cell // 2 + 4}" '
                         f'text-anchor="middle">{prob:.2f}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _emit_prob_table(pt, out_dir: Path, svg: bool) -> None:
    _write_json(out_dir / "probtable.json", pt.to_json())
    (out_dir / "probtable.csv").write_text(pt.to_csv(), encoding="utf-8")
    if svg:
        (out_dir / "probtable.svg").write_text(prob_table_svg(pt), encoding="utf-8")


def cmd_simulate(args) -> int:
    config_obj = _load_json(args.config)
    try:
        sim = SimConfig.from_json(config_obj)
    except (InvalidArgumentError, TypeError, KeyError) as exc:
        raise UsageError(f"bad simulate config: {exc}") from exc
    if args.seed is not None:
        sim = SimConfig.from_json({**sim.to_json(), "seed": int(args.seed)})
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    records = run_simulation_sweep(sim, jobs=args.jobs)
    records_to_jsonl(records, out_dir / "records.jsonl")
    _emit_prob_table(prob_table(records, mode=args.pairing), out_dir, args.svg)
    write_manifest(out_dir, "simulate", sim.seed, sim.to_json(), args.config)
    trained = sum(1 for r in records if not r.skipped)
    print(f"simulate: {trained} runs ({len(records) - trained} skipped) -> {out_dir}")
    return 0


def cmd_pendulum(args) -> int:
    seed = _resolve_seed(args.seed)
    snr = _snr_value(args.snr)
    if args.n == 0:
        table = Table(PENDULUM_COLUMNS, np.empty((0, 4)))
    elif args.n < 0:
        raise UsageError("--n must be >= 0")
    else:
        table = pendulum_table(args.n, NoiseSpec(snr), np.random.default_rng(seed))
    out = Path(args.out)
    if out.parent and not out.parent.exists():
        out.parent.mkdir(parents=True, exist_ok=True)
    write_csv(table, out)
    print(f"pendulum: {table.n} rows -> {out}")
    if table.n:
        for name, info in summarize_columns(table).items():
            print(f"  {name:>9}: mean {info['mean']:+.4f}  std {info['std']:.4f}  "
                  f"range [{info['min']:+.4f}, {info['max']:+.4f}]")
    return 0


def _train_config_from_args(args) -> TrainConfig:
    obj = _load_json(args.config) if args.config else {}
    try:
        cfg = TrainConfig.from_json(obj)
    except (InvalidArgumentError, TypeError) as exc:
        raise UsageError(f"bad train config: {exc}") from exc
    overrides = {}
    for name in ("model_kind", "epochs", "iterations"):
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    if overrides:
        cfg = TrainConfig.from_json({**cfg.to_json(), **overrides})
    seed = _resolve_seed(args.seed, cfg.seed if args.config else None)
    return TrainConfig.from_json({**cfg.to_json(), "seed": seed})


def cmd_compare(args) -> int:
    config = _train_config_from_args(args)
    data = _load_data(args.data, config.seed, args.pendulum_n, _snr_value(args.pendulum_snr))
    hypotheses = [_load_hypothesis(p) for p in args.hypothesis]
    for hyp_id, prior in hypotheses:
        if prior.d != data.d:
            raise UsageError(
                f"hypothesis {hyp_id!r} has {prior.d} nodes but data has "
                f"columns {list(data.columns)}")
    splits = [_parse_split(s) for s in args.split]
    for spec in splits:
        if spec.kind == "quantile" and spec.column not in data.columns:
            raise UsageError(f"split column {spec.column!r} not in data columns "
                             f"{list(data.columns)}")
    if args.baseline and args.baseline not in {hyp_id for hyp_id, _ in hypotheses}:
        raise UsageError(f"baseline {args.baseline!r} is not among the hypotheses")
    gt = None
    if args.gt:
        gt = _load_hypothesis(args.gt)[1].adjacency
    elif args.data == "builtin:pendulum":
        gt = pendulum_prior().adjacency
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    records = run_hypothesis_battery(data, hypotheses, splits, config, gt=gt,
                                     jobs=args.jobs)
    records_to_jsonl(records, out_dir / "records.jsonl")
    report = compare_report(records, args.baseline or hypotheses[0][0])
    _write_json(out_dir / "report.json", report)
    (out_dir / "report.csv").write_text(_report_csv(report), encoding="utf-8")
    _write_trajectories(records, out_dir / "trajectories")
    config_obj = {
        "train": config.to_json(),
        "data": args.data,
        "hypotheses": [h for h in args.hypothesis],
        "splits": [s.to_json() for s in splits],
    }
    write_manifest(out_dir, "compare", config.seed, config_obj, args.config)
    print(f"compare: {len(records)} runs -> {out_dir}")
    for hyp, verdict in report.get("verdicts", {}).items():
        print(f"  {hyp}: {verdict}")
    return 0


def _report_csv(report: dict) -> str:
    lines = ["hypothesis,split,train_mean,train_std,test_mean,test_std,n,diverged,"
             "win_rate_vs_baseline"]
    for key, m in report["metrics"].items():
        hyp, label = key.split("|", 1)
        win = report["win_rate_vs_baseline"].get(hyp, {}).get(label)
        cells = [hyp, label]
        for value in (m["train_mean"], m["train_std"], m["test_mean"], m["test_std"]):
            cells.append("" if value is None else repr(value))
        cells.append(str(m["n"]))
        cells.append(str(m["diverged"]))
        cells.append("" if win is None else repr(win))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def _write_trajectories(records, traj_dir: Path) -> None:
    traj_dir.mkdir(parents=True, exist_ok=True)
    for rec in records:
        if rec.skipped or not rec.loss_history:
            continue
        it = rec.meta.get("iteration", rec.meta.get("draw", 0))
        name = f"{rec.hypothesis_id}__{rec.split_label()}__iter{it}.csv"
        name = name.replace("/", "-")
        lines = ["epoch,train_loss"]
        lines += [f"{e},{repr(v)}" for e, v in enumerate(rec.loss_history)]
        (traj_dir / name).write_text("\n".join(lines) + "\n", encoding="utf-8")


def cmd_train(args) -> int:
    config = _train_config_from_args(args)
    data = _load_data(args.data, config.seed, args.pendulum_n, _snr_value(args.pendulum_snr))
    hyp_id, prior = _load_hypothesis(args.hypothesis)
    if prior.d != data.d:
        raise UsageError(f"hypothesis {hyp_id!r} has {prior.d} nodes but data has "
                         f"columns {list(data.columns)}")
    normalized, stats = normalize(data)
    model, history = train(config.model_kind, prior, normalized, config)
    attach_context(model, data, stats)
    out = Path(args.out)
    if out.parent and not out.parent.exists():
        out.parent.mkdir(parents=True, exist_ok=True)
    save_checkpoint(model, out, config_hash=config_hash(config.to_json()))
    print(f"train: {config.model_kind} on {args.data} ({data.n} rows), "
          f"{config.epochs} epochs")
    print(f"  final train loss {history[-1]:.6f} -> {out}")
    return 0


def cmd_generate(args) -> int:
    ckpt = Path(args.checkpoint)
    if not ckpt.exists():
        raise UsageError(f"checkpoint not found: {args.checkpoint}")
    model = load_checkpoint(ckpt)
    if (args.n is None) == (args.exo is None):
        raise UsageError("supply exactly one of --n or --exo")
    seed = _resolve_seed(args.seed)
    rng = np.random.default_rng(seed)
    if getattr(model, "adjacency", None) is None:
        raise UsageError("checkpoint does not hold a causal model; "
                         "only csh/csvh checkpoints can synthesize")
    exo_table = None
    if args.exo is not None:
        if not Path(args.exo).exists():
            raise UsageError(f"exogenous file not found: {args.exo}")
        try:
            exo_table = read_csv(args.exo)
        except TableParseError as exc:
            raise UsageError(f"bad exogenous file {args.exo}: {exc}") from exc
        exo_names = [model.column_names[k] for k in range(model.d)
                     if model.exo_diag[k]]
        extra = [c for c in exo_table.columns if c not in exo_names]
        if extra:
            raise UsageError(
                f"exogenous table columns {list(exo_table.columns)} do not match "
                f"the checkpoint's exogenous variables {exo_names}")
    try:
        table = synthesize(model, exogenous=exo_table, n=args.n, rng=rng,
                           mode=args.mode)
    except ScmTestError as exc:
        raise UsageError(str(exc)) from exc
    out = Path(args.out)
    if out.parent and not out.parent.exists():
        out.parent.mkdir(parents=True, exist_ok=True)
    write_csv(table, out)
    summary = {
        "rows": table.n,
        "train": model.context.column_summary if model.context else None,
        "synthetic": summarize_columns(table) if table.n else None,
    }
    _write_json(out.with_suffix(".summary.json"), summary)
    print(f"generate: {table.n} rows -> {out}")
    return 0


def cmd_probtable(args) -> int:
    path = Path(args.records)
    if not path.exists():
        raise UsageError(f"records file not found: {args.records}")
    records = records_from_jsonl(path)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    _emit_prob_table(prob_table(records, mode=args.pairing), out_dir, args.svg)
    print(f"probtable: {len(records)} records -> {out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scmtest",
        description="Test structural causal hypotheses with masked neural nets "
                    "and out-of-distribution splits; synthesize data from the "
                    "trained models.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a synthetic DAG sweep and win-rate table")
    p.add_argument("--config", required=True, help="SimConfig JSON file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    p.add_argument("--pairing", choices=("matched", "pooled"), default="matched")
    p.add_argument("--svg", action="store_true", help="also write probtable.svg")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("pendulum", help="write the synthetic pendulum dataset")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--snr", default="10", help="SNR in dB, or 'inf'")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_pendulum)

    p = sub.add_parser("compare", help="train hypotheses over splits and report")
    p.add_argument("--data", required=True, help="CSV path or builtin:pendulum")
    p.add_argument("--hypothesis", nargs="+", required=True,
                   help="hypothesis JSON files")
    p.add_argument("--split", nargs="+", required=True,
                   help="splits like random:0.25 or x_sun@0.75")
    p.add_argument("--config", default=None, help="TrainConfig JSON file")
    p.add_argument("--model-kind", dest="model_kind",
                   choices=("csh", "csvh", "nn", "vae"), default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--iterations", type=int, default=None)
    p.add_argument("--baseline", default=None,
                   help="baseline hypothesis id (default: first)")
    p.add_argument("--gt", default=None, help="ground-truth hypothesis JSON")
    p.add_argument("--pendulum-n", type=int, default=1000)
    p.add_argument("--pendulum-snr", default="10")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("train", help="train one hypothesis, write a checkpoint")
    p.add_argument("--data", required=True, help="CSV path or builtin:pendulum")
    p.add_argument("--hypothesis", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--model-kind", dest="model_kind",
                   choices=("csh", "csvh", "nn", "vae"), default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--pendulum-n", type=int, default=1000)
    p.add_argument("--pendulum-snr", default="10")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True, help="checkpoint JSON path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("generate", help="synthesize a table from a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--n", type=int, default=None,
                   help="rows to sample from stored exogenous ranges")
    p.add_argument("--exo", default=None, help="CSV of exogenous inputs")
    p.add_argument("--mode", choices=("mean", "sample"), default="mean")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("probtable", help="recompute the win-rate table from records")
    p.add_argument("--records", required=True, help="records.jsonl path")
    p.add_argument("--pairing", choices=("matched", "pooled"), default="matched")
    p.add_argument("--svg", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_probtable)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ScmTestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
