"""Experiment orchestration: training loops, batteries, sweeps, win-rate tables.

The protocol throughout: train a reconstruction model under a structural
hypothesis on one side of a deliberate split, evaluate the reconstruction
error on the held-out side, repeat over re-initializations, and compare
hypotheses by their out-of-distribution test losses.
"""

from __future__ import annotations

import hashlib
import json
import math
import multiprocessing
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .datatable import NormStats, SplitSpec, Table, normalize, split
from .errors import (
    DivergenceError,
    InfeasibleTargetError,
    InvalidArgumentError,
    NormalizationError,
    SplitError,
)
from .graph import (
    Adjacency,
    HammingTuple,
    StructuralPrior,
    default_exo,
    hamming,
    perturb,
    random_dag,
)
from .models import BaselineVae, CshModel, CsvhModel
from .nnet import LrSchedule, init_optimizer, lr_at, optimizer_step
from .synthgen import LinearSem, NoiseSpec, NonlinearSem, sample_linear, sample_nonlinear

MODEL_KINDS = ("csh", "csvh", "nn", "vae")


def derive_seed(*parts) -> int:
    """Deterministic 64-bit seed from a mixed tuple of ints and strings."""
    entropy = []
    for p in parts:
        if isinstance(p, str):
            digest = hashlib.sha256(p.encode("utf-8")).digest()
            entropy.append(int.from_bytes(digest[:4], "big"))
        else:
            entropy.append(int(p) & 0x7FFFFFFF)
    ss = np.random.SeedSequence(entropy)
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters of one training run (and its re-initialization count)."""

    model_kind: str = "csh"
    epochs: int = 50
    iterations: int = 40
    optimizer: str = "adabelief"
    initial_lr: float = 0.01
    batch_size: int | None = 16  # None trains full-batch
    lr_period: int | None = None  # None: one cosine cycle over all epochs
    warm_restarts: bool = False
    eta_hidden: tuple[int, ...] = (4, 16, 4)
    enc_hidden: tuple[int, ...] = (4, 4)
    lambda_kl: float = 1e-3       # causal variational model: reconstruction dominates
    vae_lambda_kl: float = 1.0    # baseline VAE keeps the standard ELBO weight
    lambda_latent: float = 1.0
    seed: int = 1

    def __post_init__(self):
        if self.model_kind not in MODEL_KINDS:
            raise InvalidArgumentError(f"unknown model kind {self.model_kind!r}")
        if self.epochs < 1:
            raise InvalidArgumentError("epochs must be >= 1")
        if self.iterations < 1:
            raise InvalidArgumentError("iterations must be >= 1")
        object.__setattr__(self, "eta_hidden", tuple(self.eta_hidden))
        object.__setattr__(self, "enc_hidden", tuple(self.enc_hidden))

    def to_json(self) -> dict:
        return {
            "model_kind": self.model_kind,
            "epochs": self.epochs,
            "iterations": self.iterations,
            "optimizer": self.optimizer,
            "initial_lr": self.initial_lr,
            "batch_size": self.batch_size,
            "lr_period": self.lr_period,
            "warm_restarts": self.warm_restarts,
            "eta_hidden": list(self.eta_hidden),
            "enc_hidden": list(self.enc_hidden),
            "lambda_kl": self.lambda_kl,
            "vae_lambda_kl": self.vae_lambda_kl,
            "lambda_latent": self.lambda_latent,
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "TrainConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(obj) - known
        if unknown:
            raise InvalidArgumentError(f"unknown TrainConfig fields: {sorted(unknown)}")
        kwargs = dict(obj)
        for key in ("eta_hidden", "enc_hidden"):
            if key in kwargs:
                kwargs[key] = tuple(kwargs[key])
        return cls(**kwargs)


@dataclass
class RunRecord:
    """Provenance and outcome of a single training run (or a recorded skip)."""

    hypothesis_id: str
    hamming: tuple[int, int] | None
    split: dict
    seed: int
    final_train_loss: float | None
    final_test_loss: float | None
    loss_history: list[float] = field(default_factory=list)
    diverged: bool = False
    skipped: bool = False
    note: str = ""
    meta: dict = field(default_factory=dict)

    def split_label(self) -> str:
        return SplitSpec.from_json(self.split).label()

    def to_json(self) -> dict:
        return {
            "hypothesis_id": self.hypothesis_id,
            "hamming": list(self.hamming) if self.hamming is not None else None,
            "split": self.split,
            "seed": self.seed,
            "final_train_loss": self.final_train_loss,
            "final_test_loss": self.final_test_loss,
            "loss_history": self.loss_history,
            "diverged": self.diverged,
            "skipped": self.skipped,
            "note": self.note,
            "meta": self.meta,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "RunRecord":
        obj = dict(obj)
        if obj.get("hamming") is not None:
            obj["hamming"] = tuple(obj["hamming"])
        return cls(**obj)


def records_to_jsonl(records: Sequence[RunRecord], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_json()) + "\n")


def records_from_jsonl(path) -> list[RunRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(RunRecord.from_json(json.loads(line)))
    return records


def build_model(model_kind: str, prior: StructuralPrior | None, d: int,
                config: TrainConfig, rng: np.random.Generator,
                column_names: Sequence[str] | None = None):
    if model_kind in ("csh", "csvh"):
        if prior is None:
            raise InvalidArgumentError(f"model kind {model_kind!r} requires a prior")
        if prior.d != d:
            raise InvalidArgumentError(
                f"prior dimension {prior.d} does not match table width {d}")
    if model_kind == "csh":
        return CshModel.from_prior(prior, rng, config.eta_hidden, column_names)
    if model_kind == "nn":
        return CshModel.baseline_nn(d, rng, config.eta_hidden, column_names)
    if model_kind == "csvh":
        return CsvhModel.from_prior(prior, rng, config.eta_hidden, config.enc_hidden,
                                    column_names, config.lambda_kl, config.lambda_latent)
    if model_kind == "vae":
        return BaselineVae.create(d, rng, config.enc_hidden, column_names,
                                  config.vae_lambda_kl)
    raise InvalidArgumentError(f"unknown model kind {model_kind!r}")


def _objective(model, values: np.ndarray, noise_rng: np.random.Generator):
    """One full-batch loss/gradient evaluation; returns (scalar loss, grads)."""
    if isinstance(model, CsvhModel):
        losses, grads = model.loss_and_grads(values, rng=noise_rng, mode="sample")
        return losses.total, grads
    if isinstance(model, BaselineVae):
        (total, _, _), grads = model.loss_and_grads(values, rng=noise_rng, mode="sample")
        return total, grads
    return model.loss_and_grads(values)


def train(model_kind: str, prior: StructuralPrior | None, table: Table,
          config: TrainConfig):
    """Gradient descent on the reconstruction objective.

    Returns (model, history) where the history has epochs+1 entries: the
    mean objective seen during each epoch, then the full-table objective at
    the final parameters.  Batches are drawn by shuffling per epoch when
    config.batch_size is set (None trains full-batch); the learning rate is
    cosine-annealed per epoch.  A non-finite loss raises DivergenceError with
    the epoch it appeared in.
    """
    model = build_model(model_kind, prior, table.d, config,
                        np.random.default_rng(derive_seed(config.seed, "init")),
                        table.columns)
    noise_rng = np.random.default_rng(derive_seed(config.seed, "noise"))
    batch_rng = np.random.default_rng(derive_seed(config.seed, "batches"))
    params = model.parameters()
    opt = init_optimizer(config.optimizer, params)
    schedule = LrSchedule(config.initial_lr, config.lr_period or config.epochs,
                          config.warm_restarts)
    values = table.values
    n = values.shape[0]
    batch = config.batch_size
    history: list[float] = []
    for epoch in range(config.epochs):
        lr = lr_at(schedule, epoch)
        if batch is None or batch >= n:
            slices = [values]
        else:
            perm = batch_rng.permutation(n)
            slices = [values[perm[k:k + batch]] for k in range(0, n, batch)]
        epoch_loss = 0.0
        for part in slices:
            loss, grads = _objective(model, part, noise_rng)
            if not math.isfinite(loss):
                raise DivergenceError(epoch)
            epoch_loss += loss * part.shape[0]
            optimizer_step(opt, params, grads, lr)
        history.append(epoch_loss / n)
    final, _ = _objective(model, values, noise_rng)
    if not math.isfinite(final):
        raise DivergenceError(config.epochs)
    history.append(final)
    return model, history


def evaluate(model, table: Table) -> float:
    """Mean reconstruction error on a table, deterministic (mean mode)."""
    if table.n == 0:
        raise InvalidArgumentError("cannot evaluate on an empty table")
    if table.d != model.d:
        raise InvalidArgumentError(
            f"table width {table.d} does not match model dimension {model.d}")
    return model.reconstruction_mse(table.values)


@dataclass
class _TrainJob:
    """Self-contained unit of work; everything a worker needs, picklable."""

    index: int
    hypothesis_id: str
    hamming: tuple[int, int] | None
    split_json: dict
    meta: dict
    model_kind: str
    prior: StructuralPrior | None
    columns: tuple[str, ...]
    train_values: np.ndarray
    test_values: np.ndarray
    config: TrainConfig


def _run_job(job: _TrainJob) -> RunRecord:
    train_table = Table(job.columns, job.train_values)
    test_table = Table(job.columns, job.test_values)
    try:
        model, history = train(job.model_kind, job.prior, train_table, job.config)
    except DivergenceError as exc:
        return RunRecord(job.hypothesis_id, job.hamming, job.split_json,
                         job.config.seed, None, None, [], diverged=True,
                         note=str(exc), meta=job.meta)
    return RunRecord(
        job.hypothesis_id, job.hamming, job.split_json, job.config.seed,
        evaluate(model, train_table), evaluate(model, test_table),
        [float(v) for v in history], meta=job.meta,
    )


def _run_jobs(jobs_list: list[_TrainJob], jobs: int) -> list[RunRecord]:
    if jobs <= 1 or len(jobs_list) <= 1:
        return [_run_job(j) for j in jobs_list]
    with multiprocessing.Pool(processes=jobs) as pool:
        return list(pool.map(_run_job, jobs_list, chunksize=1))


def run_hypothesis_battery(table: Table, hypotheses: Sequence[tuple[str, StructuralPrior]],
                           splits: Sequence[SplitSpec], config: TrainConfig,
                           gt: Adjacency | None = None, jobs: int = 1) -> list[RunRecord]:
    """Train every hypothesis on every split, `iterations` times each.

    Within one (split, iteration) cell all hypotheses see identical train/test
    rows and identical normalization (train-side statistics only), so losses
    are directly comparable.  Deterministic in config.seed.
    """
    if not hypotheses or not splits:
        raise InvalidArgumentError("need at least one hypothesis and one split")
    jobs_list: list[_TrainJob] = []
    for s_idx, spec in enumerate(splits):
        for it in range(config.iterations):
            rng = np.random.default_rng(derive_seed(config.seed, "split", s_idx, it))
            train_t, test_t = split(table, spec, rng)
            train_n, stats = normalize(train_t)
            test_n, _ = normalize(test_t, stats)
            for h_idx, (hyp_id, prior) in enumerate(hypotheses):
                ham = None
                if gt is not None and prior is not None:
                    ham = hamming(prior.adjacency, gt).as_pair()
                run_cfg = replace(config, seed=derive_seed(
                    config.seed, "battery", h_idx, s_idx, it))
                jobs_list.append(_TrainJob(
                    len(jobs_list), hyp_id, ham, spec.to_json(),
                    {"iteration": it, "split_label": spec.label(),
                     "model_kind": config.model_kind},
                    config.model_kind, prior, table.columns,
                    train_n.values, test_n.values, run_cfg,
                ))
    return _run_jobs(jobs_list, jobs)


@dataclass(frozen=True)
class SimConfig:
    """One simulation sweep: random ground-truth DAGs, perturbed hypotheses,
    a quantile split per variable, and a training run for each combination."""

    d: int = 4
    m: int = 4
    sem: str = "linear"
    snr_db: float = 5.0
    n_samples: int = 100
    tuples: tuple[tuple[int, int], ...] = ((1, 0), (0, 1))
    gt_iterations: int = 10
    draws_per_tuple: int = 5
    split_q: float = 0.75
    exo_policy: str = "preserve"
    seed: int = 1
    train: TrainConfig = field(
        default_factory=lambda: TrainConfig(model_kind="csh", epochs=100,
                                            iterations=1, eta_hidden=(4, 4)))

    def __post_init__(self):
        if self.sem not in ("linear", "nonlinear"):
            raise InvalidArgumentError(f"unknown SEM kind {self.sem!r}")
        if self.gt_iterations < 1 or self.draws_per_tuple < 1:
            raise InvalidArgumentError("iteration counts must be >= 1")
        object.__setattr__(self, "tuples",
                           tuple((int(a), int(b)) for a, b in self.tuples))

    def to_json(self) -> dict:
        return {
            "d": self.d, "m": self.m, "sem": self.sem,
            "snr_db": "inf" if math.isinf(self.snr_db) else self.snr_db,
            "n_samples": self.n_samples,
            "tuples": [list(t) for t in self.tuples],
            "gt_iterations": self.gt_iterations,
            "draws_per_tuple": self.draws_per_tuple,
            "split_q": self.split_q,
            "exo_policy": self.exo_policy,
            "seed": self.seed,
            "train": self.train.to_json(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SimConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(obj) - known
        if unknown:
            raise InvalidArgumentError(f"unknown SimConfig fields: {sorted(unknown)}")
        kwargs = dict(obj)
        if "snr_db" in kwargs and kwargs["snr_db"] == "inf":
            kwargs["snr_db"] = math.inf
        if "tuples" in kwargs:
            kwargs["tuples"] = tuple(tuple(t) for t in kwargs["tuples"])
        if "train" in kwargs:
            kwargs["train"] = TrainConfig.from_json(kwargs["train"])
        return cls(**kwargs)


def _sweep_hypotheses(sim: SimConfig, g: int, a_gt: Adjacency):
    """Ground truth plus draws_per_tuple perturbations per requested tuple."""
    out = [("gt", StructuralPrior(a_gt, default_exo(a_gt)), (0, 0), 0, "")]
    for t_idx, t in enumerate(sim.tuples):
        if t == (0, 0):
            continue  # ground truth already covers it
        for k in range(sim.draws_per_tuple):
            rng = np.random.default_rng(
                derive_seed(sim.seed, "perturb", g, t_idx, k))
            try:
                a_h, exo_h = perturb(a_gt, HammingTuple(*t), rng, sim.exo_policy)
            except InfeasibleTargetError as exc:
                out.append((f"t{t[0]}+{t[1]}-/draw{k}", None, t, k, str(exc)))
                continue
            prior = StructuralPrior(a_h, exo_h, allow_exo_parents=True)
            out.append((f"t{t[0]}+{t[1]}-/draw{k}", prior, t, k, ""))
    return out


def run_simulation_sweep(sim: SimConfig, jobs: int = 1) -> list[RunRecord]:
    """The full synthetic protocol; returns one record per training run.

    Per ground-truth iteration: sample a DAG and an SEM, generate data, build
    the hypothesis set, and train each hypothesis on every per-variable
    quantile split.  Infeasible perturbations and degenerate splits become
    recorded skips.  All seeds derive from sim.seed.
    """
    jobs_list: list[_TrainJob] = []
    skip_records: list[RunRecord] = []
    for g in range(sim.gt_iterations):
        a_gt = random_dag(sim.d, sim.m, np.random.default_rng(
            derive_seed(sim.seed, "dag", g)))
        sem_rng = np.random.default_rng(derive_seed(sim.seed, "sem", g))
        data_rng = np.random.default_rng(derive_seed(sim.seed, "data", g))
        noise = NoiseSpec(sim.snr_db)
        if sim.sem == "linear":
            sem = LinearSem.random(a_gt, sem_rng)
            data = sample_linear(sem, sim.n_samples, noise, data_rng)
        else:
            sem = NonlinearSem.random(a_gt, sem_rng)
            data = sample_nonlinear(sem, sim.n_samples, noise, data_rng)
        hyps = _sweep_hypotheses(sim, g, a_gt)
        for s_idx, col in enumerate(data.columns):
            spec = SplitSpec.quantile(col, sim.split_q, allow_custom_q=True)
            try:
                train_t, test_t = split(data, spec)
                train_n, stats = normalize(train_t)
                test_n, _ = normalize(test_t, stats)
            except (SplitError, NormalizationError) as exc:
                for hyp_id, prior, t, k, note in hyps:
                    skip_records.append(RunRecord(
                        hyp_id, t, spec.to_json(), 0, None, None, [],
                        skipped=True, note=f"split failed: {exc}",
                        meta={"gt_index": g, "draw": k}))
                continue
            for hyp_id, prior, t, k, note in hyps:
                meta = {"gt_index": g, "draw": k, "split_label": spec.label(),
                        "model_kind": sim.train.model_kind}
                if prior is None:
                    skip_records.append(RunRecord(
                        hyp_id, t, spec.to_json(), 0, None, None, [],
                        skipped=True, note=note, meta=meta))
                    continue
                run_cfg = replace(sim.train, seed=derive_seed(
                    sim.seed, "train", g, t[0], t[1], k, s_idx))
                jobs_list.append(_TrainJob(
                    len(jobs_list), hyp_id, t, spec.to_json(), meta,
                    sim.train.model_kind, prior, data.columns,
                    train_n.values, test_n.values, run_cfg,
                ))
    return _run_jobs(jobs_list, jobs) + skip_records


def _usable(records: Sequence[RunRecord]) -> list[RunRecord]:
    return [r for r in records
            if not r.skipped and not r.diverged and r.final_test_loss is not None]


@dataclass
class ProbTable:
    """Pairwise win probabilities between Hamming tuples.

    cell (row, col) is the empirical probability that a run of the row tuple
    achieves strictly lower OOD test loss than a run of the column tuple,
    ties counting one half.  Cells with no comparisons are absent.
    """

    tuples: list[tuple[int, int]]
    cells: dict[tuple[tuple[int, int], tuple[int, int]], tuple[float, int]]
    mode: str

    def cell(self, row_t, col_t):
        return self.cells.get((tuple(row_t), tuple(col_t)))

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "tuples": [list(t) for t in self.tuples],
            "cells": [
                {"row": list(rt), "col": list(ct),
                 "prob": prob, "count": count}
                for (rt, ct), (prob, count) in sorted(self.cells.items())
            ],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ProbTable":
        cells = {}
        for cell in obj["cells"]:
            cells[(tuple(cell["row"]), tuple(cell["col"]))] = (cell["prob"], cell["count"])
        return cls([tuple(t) for t in obj["tuples"]], cells, obj["mode"])

    def to_csv(self) -> str:
        """Matrix rendering, rows beat columns; empty cell means no data."""
        def name(t):
            return f"{t[0]}+{t[1]}-"
        lines = ["row_beats_col," + ",".join(name(t) for t in self.tuples)]
        for rt in self.tuples:
            cells = []
            for ct in self.tuples:
                got = self.cells.get((rt, ct))
                cells.append("" if got is None else repr(got[0]))
            lines.append(name(rt) + "," + ",".join(cells))
        return "\n".join(lines) + "\n"


def _tuple_sort_key(t: tuple[int, int]):
    return (t[0] + t[1], t[1], t[0])


def prob_table(records: Sequence[RunRecord], mode: str = "matched") -> ProbTable:
    """Empirical win-rate matrix over Hamming tuples.

    mode "matched" compares only runs sharing (ground-truth index, split);
    mode "pooled" compares across everything.  Within a matched group all
    row-tuple runs are compared against all column-tuple runs.
    """
    if mode not in ("matched", "pooled"):
        raise InvalidArgumentError(f"unknown pairing mode {mode!r}")
    usable = [r for r in _usable(records) if r.hamming is not None]
    groups: dict = {}
    for rec in usable:
        key = (rec.meta.get("gt_index"), rec.split_label()) if mode == "matched" else 0
        groups.setdefault(key, {}).setdefault(tuple(rec.hamming), []).append(
            rec.final_test_loss)
    tuples = sorted({tuple(r.hamming) for r in usable}, key=_tuple_sort_key)
    wins: dict = {}
    counts: dict = {}
    for group in groups.values():
        for ta, losses_a in group.items():
            for tb, losses_b in group.items():
                if ta == tb:
                    continue
                key = (ta, tb)
                for la in losses_a:
                    for lb in losses_b:
                        score = 1.0 if la < lb else (0.5 if la == lb else 0.0)
                        wins[key] = wins.get(key, 0.0) + score
                        counts[key] = counts.get(key, 0) + 1
    cells = {key: (wins[key] / counts[key], counts[key]) for key in counts}
    return ProbTable(tuples, cells, mode)


def aggregate_records(records: Sequence[RunRecord]) -> dict:
    """Mean and sample standard deviation of losses per (hypothesis, split)."""
    by_key: dict[tuple[str, str], list[RunRecord]] = {}
    order: list[tuple[str, str]] = []
    for rec in records:
        if rec.skipped:
            continue
        key = (rec.hypothesis_id, rec.split_label())
        if key not in by_key:
            by_key[key] = []
            order.append(key)
        by_key[key].append(rec)

    def stats(values: list[float]) -> tuple[float | None, float | None]:
        if not values:
            return None, None
        mean = float(np.mean(values))
        std = float(np.std(values, ddof=1)) if len(values) > 1 else 0.0
        return mean, std

    out = {}
    for key in order:
        recs = by_key[key]
        ok = [r for r in recs if not r.diverged]
        train_mean, train_std = stats([r.final_train_loss for r in ok])
        test_mean, test_std = stats([r.final_test_loss for r in ok])
        out[key] = {
            "train_mean": train_mean, "train_std": train_std,
            "test_mean": test_mean, "test_std": test_std,
            "n": len(ok), "diverged": len(recs) - len(ok),
        }
    return out


def compare_report(records: Sequence[RunRecord], baseline_id: str) -> dict:
    """Per-hypothesis summary against a named baseline hypothesis.

    The verdict counts the quantile (non-random) splits on which a hypothesis
    reaches a lower mean test loss than the baseline: winning a majority
    makes it preferred, losing a majority leaves the baseline preferred, and
    an exact balance is called indistinguishable.
    """
    agg = aggregate_records(records)
    hypotheses: list[str] = []
    splits: list[str] = []
    for hyp, label in agg:
        if hyp not in hypotheses:
            hypotheses.append(hyp)
        if label not in splits:
            splits.append(label)
    if baseline_id not in hypotheses:
        raise InvalidArgumentError(f"baseline {baseline_id!r} not among hypotheses")
    ood_splits = sorted({
        r.split_label() for r in records if r.split.get("kind") == "quantile"})

    base_losses: dict[tuple[str, int], float] = {}
    for rec in records:
        if rec.hypothesis_id == baseline_id and not rec.skipped and not rec.diverged:
            base_losses[(rec.split_label(), rec.meta.get("iteration", 0))] = (
                rec.final_test_loss)

    win_rates: dict[str, dict[str, float | None]] = {}
    for hyp in hypotheses:
        if hyp == baseline_id:
            continue
        per_split: dict[str, float | None] = {}
        for label in splits:
            scores = []
            for rec in records:
                if (rec.hypothesis_id != hyp or rec.skipped or rec.diverged
                        or rec.split_label() != label):
                    continue
                base = base_losses.get((label, rec.meta.get("iteration", 0)))
                if base is None:
                    continue
                scores.append(1.0 if rec.final_test_loss < base
                              else (0.5 if rec.final_test_loss == base else 0.0))
            per_split[label] = float(np.mean(scores)) if scores else None
        win_rates[hyp] = per_split

    verdicts: dict[str, str] = {}
    ood_wins: dict[str, dict] = {}
    for hyp in hypotheses:
        if hyp == baseline_id:
            continue
        wins = losses = 0
        for label in ood_splits:
            h_mean = agg.get((hyp, label), {}).get("test_mean")
            b_mean = agg.get((baseline_id, label), {}).get("test_mean")
            if h_mean is None or b_mean is None:
                continue
            if h_mean < b_mean:
                wins += 1
            elif h_mean > b_mean:
                losses += 1
        ood_wins[hyp] = {"wins": wins, "losses": losses, "of": len(ood_splits)}
        if wins > losses:
            verdicts[hyp] = f"preferred over {baseline_id}"
        elif losses > wins:
            verdicts[hyp] = f"{baseline_id} preferred"
        else:
            verdicts[hyp] = "indistinguishable"

    return {
        "baseline": baseline_id,
        "hypotheses": hypotheses,
        "splits": splits,
        "ood_splits": ood_splits,
        "metrics": {f"{hyp}|{label}": agg[(hyp, label)] for hyp, label in agg},
        "win_rate_vs_baseline": win_rates,
        "ood_wins": ood_wins,
        "verdicts": verdicts,
    }
