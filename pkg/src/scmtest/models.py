"""Masked reconstruction architectures and synthesis from trained models.

Four model kinds share one idea: reconstruct every variable from the inputs a
structural hypothesis allows it to see.

* CshModel — per-variable nets eta_i applied to the masked input S_i * x.
* CsvhModel — variational variant: per-variable encoders map each scalar to a
  latent (mu, logvar), the masked eta layer acts on the latent vector, and
  per-variable decoders map back.
* baseline NN — a CshModel whose mask is all-ones minus the diagonal, so it
  sees everything except the target itself.
* BaselineVae — a joint VAE of the same hidden sizing, no mask at all.

All losses expose exact analytic gradients (checked against finite
differences in the test suite).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .datatable import NormStats, Table, denormalize
from .errors import ContractViolationError, InvalidArgumentError
from .graph import Adjacency, StructuralPrior, topological_order
from .nnet import Mlp, MlpSpec, backward, forward, init_mlp, mlp_from_json, mlp_to_json

DEFAULT_ETA_HIDDEN = (4, 16, 4)
DEFAULT_ENC_HIDDEN = (4, 4)
DEFAULT_LAMBDA_KL = 1e-3
DEFAULT_LAMBDA_LATENT = 1.0


def _as_batch(x, d: int) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    squeezed = arr.ndim == 1
    batch = np.atleast_2d(arr)
    if batch.shape[1] != d:
        raise InvalidArgumentError(f"input width {batch.shape[1]} != model dimension {d}")
    return batch, squeezed


@dataclass
class TrainingContext:
    """Everything synthesis needs besides the weights: units and marginals."""

    norm_stats: NormStats
    exo_ranges: dict[str, tuple[float, float]]
    column_summary: dict[str, dict[str, float]]


def summarize_columns(table: Table) -> dict[str, dict[str, float]]:
    """Per-column location/scale/quantile summary of a raw table."""
    out: dict[str, dict[str, float]] = {}
    for k, name in enumerate(table.columns):
        col = table.values[:, k]
        out[name] = {
            "mean": float(col.mean()),
            "std": float(col.std()),
            "min": float(col.min()),
            "q25": float(np.quantile(col, 0.25)),
            "median": float(np.quantile(col, 0.5)),
            "q75": float(np.quantile(col, 0.75)),
            "max": float(col.max()),
        }
    return out


class CshModel:
    """Per-variable nets reconstructing x_i from the mask-selected inputs."""

    kind = "csh"

    def __init__(self, mask: np.ndarray, exo_diag: np.ndarray, etas: Sequence[Mlp],
                 adjacency: Adjacency | None = None,
                 column_names: Sequence[str] | None = None):
        mask = np.asarray(mask, dtype=float)
        if mask.ndim != 2 or mask.shape[0] != mask.shape[1]:
            raise InvalidArgumentError("mask must be square")
        if mask.diagonal().any() and adjacency is None:
            # only the exogeneity diagonal may feed a variable to itself
            raise InvalidArgumentError("baseline mask must have zero diagonal")
        self.mask = mask
        self.exo_diag = np.asarray(exo_diag, dtype=np.int8)
        self.etas = list(etas)
        self.adjacency = adjacency
        self.column_names = tuple(column_names) if column_names else None
        self.context: TrainingContext | None = None
        if len(self.etas) != self.d:
            raise InvalidArgumentError("need one eta network per variable")
        for eta in self.etas:
            if eta.spec.in_size != self.d or eta.spec.out_size != 1:
                raise InvalidArgumentError(
                    f"eta networks must map {self.d} inputs to one output")

    @property
    def d(self) -> int:
        return self.mask.shape[0]

    @classmethod
    def from_prior(cls, prior: StructuralPrior, rng: np.random.Generator,
                   eta_hidden: Sequence[int] = DEFAULT_ETA_HIDDEN,
                   column_names: Sequence[str] | None = None) -> "CshModel":
        d = prior.d
        spec = MlpSpec((d, *eta_hidden, 1))
        etas = [init_mlp(spec, rng) for _ in range(d)]
        names = column_names or prior.adjacency.node_names
        return cls(prior.mask(), prior.exo.diag, etas, prior.adjacency, names)

    @classmethod
    def baseline_nn(cls, d: int, rng: np.random.Generator,
                    eta_hidden: Sequence[int] = DEFAULT_ETA_HIDDEN,
                    column_names: Sequence[str] | None = None) -> "CshModel":
        """Non-causal baseline: every variable sees all others, never itself."""
        mask = np.ones((d, d)) - np.eye(d)
        spec = MlpSpec((d, *eta_hidden, 1))
        etas = [init_mlp(spec, rng) for _ in range(d)]
        model = cls(mask, np.zeros(d, dtype=np.int8), etas, None, column_names)
        model.kind = "nn"
        return model

    def parameters(self) -> list[np.ndarray]:
        out: list[np.ndarray] = []
        for eta in self.etas:
            out.extend(eta.parameters())
        return out

    def forward(self, x) -> np.ndarray:
        batch, squeezed = _as_batch(x, self.d)
        cols = []
        for i, eta in enumerate(self.etas):
            out, _ = forward(eta, batch * self.mask[:, i])
            cols.append(out[:, 0])
        xhat = np.column_stack(cols)
        return xhat[0] if squeezed else xhat

    def loss_and_grads(
        self, x, rng: np.random.Generator | None = None
    ) -> tuple[float, list[np.ndarray]]:
        """Mean squared reconstruction error and its exact parameter gradients."""
        batch, _ = _as_batch(x, self.d)
        n, d = batch.shape
        grads: list[np.ndarray] = []
        total = 0.0
        for i, eta in enumerate(self.etas):
            out, cache = forward(eta, batch * self.mask[:, i])
            resid = out[:, 0] - batch[:, i]
            total += float(resid @ resid)
            g_out = (2.0 / (n * d)) * resid[:, None]
            g_params, _ = backward(eta, cache, g_out)
            grads.extend(g_params)
        return total / (n * d), grads

    def reconstruction_mse(self, x, rng: np.random.Generator | None = None) -> float:
        batch, _ = _as_batch(x, self.d)
        xhat = self.forward(batch)
        return csh_loss(batch, xhat)

    def input_gradients(self, x) -> np.ndarray:
        """Exact Jacobian G with G[j, i] = d xhat_i / d x_j at a single point."""
        vec = np.asarray(x, dtype=float).reshape(-1)
        if vec.shape[0] != self.d:
            raise InvalidArgumentError("input width must match model dimension")
        g = np.zeros((self.d, self.d))
        for i, eta in enumerate(self.etas):
            _, cache = forward(eta, vec * self.mask[:, i])
            _, g_in = backward(eta, cache, np.ones(1))
            g[:, i] = g_in * self.mask[:, i]
        return g


def csh_forward(model: CshModel, x) -> np.ndarray:
    return model.forward(x)


def csh_loss(x, xhat) -> float:
    """Squared error averaged over variables and batch rows."""
    a = np.atleast_2d(np.asarray(x, dtype=float))
    b = np.atleast_2d(np.asarray(xhat, dtype=float))
    if a.shape != b.shape:
        raise InvalidArgumentError(f"shape mismatch {a.shape} vs {b.shape}")
    return float(np.mean((a - b) ** 2))


def gaussian_kl(mu: np.ndarray, logvar: np.ndarray) -> float:
    """Mean per-element KL(N(mu, e^logvar) || N(0, 1))."""
    return float(np.mean(0.5 * (mu ** 2 + np.exp(logvar) - 1.0 - logvar)))


@dataclass
class CsvhForward:
    """Outputs of one variational forward pass plus the caches for backward."""

    xhat: np.ndarray
    z: np.ndarray
    zhat: np.ndarray
    mu: np.ndarray
    logvar: np.ndarray
    eps: np.ndarray
    enc_caches: list = field(repr=False, default_factory=list)
    eta_caches: list = field(repr=False, default_factory=list)
    dec_caches: list = field(repr=False, default_factory=list)


@dataclass(frozen=True)
class CsvhLoss:
    total: float
    mse: float
    kl: float
    latent: float


class CsvhModel:
    """Variational variant: encode per variable, mask in latent space, decode.

    The latent keeps the data dimension (one latent coordinate per variable)
    so the structural mask stays meaningful there.
    """

    kind = "csvh"

    def __init__(self, mask, exo_diag, encoders: Sequence[Mlp], etas: Sequence[Mlp],
                 decoders: Sequence[Mlp], adjacency: Adjacency | None = None,
                 column_names: Sequence[str] | None = None,
                 lambda_kl: float = DEFAULT_LAMBDA_KL,
                 lambda_latent: float = DEFAULT_LAMBDA_LATENT):
        self.mask = np.asarray(mask, dtype=float)
        self.exo_diag = np.asarray(exo_diag, dtype=np.int8)
        self.encoders = list(encoders)
        self.etas = list(etas)
        self.decoders = list(decoders)
        self.adjacency = adjacency
        self.column_names = tuple(column_names) if column_names else None
        self.lambda_kl = float(lambda_kl)
        self.lambda_latent = float(lambda_latent)
        self.context: TrainingContext | None = None
        d = self.d
        if not (len(self.encoders) == len(self.etas) == len(self.decoders) == d):
            raise InvalidArgumentError("need one encoder/eta/decoder per variable")
        for enc, eta, dec in zip(self.encoders, self.etas, self.decoders):
            ok = (enc.spec.in_size == 1 and enc.spec.out_size == 2
                  and eta.spec.in_size == d and eta.spec.out_size == 1
                  and dec.spec.in_size == 1 and dec.spec.out_size == 1)
            if not ok:
                raise InvalidArgumentError(
                    "per-variable nets must be scalar->(mu, logvar), "
                    f"{d}->1, and scalar->scalar")

    @property
    def d(self) -> int:
        return self.mask.shape[0]

    @classmethod
    def from_prior(cls, prior: StructuralPrior, rng: np.random.Generator,
                   eta_hidden: Sequence[int] = DEFAULT_ETA_HIDDEN,
                   enc_hidden: Sequence[int] = DEFAULT_ENC_HIDDEN,
                   column_names: Sequence[str] | None = None,
                   lambda_kl: float = DEFAULT_LAMBDA_KL,
                   lambda_latent: float = DEFAULT_LAMBDA_LATENT) -> "CsvhModel":
        d = prior.d
        enc_spec = MlpSpec((1, *enc_hidden, 2))  # two heads: mu, logvar
        eta_spec = MlpSpec((d, *eta_hidden, 1))
        dec_spec = MlpSpec((1, *enc_hidden, 1))
        encoders = [init_mlp(enc_spec, rng) for _ in range(d)]
        etas = [init_mlp(eta_spec, rng) for _ in range(d)]
        decoders = [init_mlp(dec_spec, rng) for _ in range(d)]
        names = column_names or prior.adjacency.node_names
        return cls(prior.mask(), prior.exo.diag, encoders, etas, decoders,
                   prior.adjacency, names, lambda_kl, lambda_latent)

    def parameters(self) -> list[np.ndarray]:
        out: list[np.ndarray] = []
        for net in (*self.encoders, *self.etas, *self.decoders):
            out.extend(net.parameters())
        return out

    def encode(self, batch: np.ndarray, want_caches: bool = False):
        mu = np.empty_like(batch)
        logvar = np.empty_like(batch)
        caches = []
        for i, enc in enumerate(self.encoders):
            out, cache = forward(enc, batch[:, i:i + 1])
            mu[:, i] = out[:, 0]
            logvar[:, i] = out[:, 1]
            if want_caches:
                caches.append(cache)
        return mu, logvar, caches

    def forward(self, x, rng: np.random.Generator | None = None,
                mode: str = "mean", eps: np.ndarray | None = None) -> CsvhForward:
        """Encode, reparameterize, apply the masked layer, decode.

        mode "sample" draws eps ~ N(0,1) (from rng unless an explicit eps is
        given, which the gradient checks use); mode "mean" sets z = mu.
        """
        if mode not in ("sample", "mean"):
            raise InvalidArgumentError(f"unknown mode {mode!r}")
        batch, _ = _as_batch(x, self.d)
        mu, logvar, enc_caches = self.encode(batch, want_caches=True)
        if mode == "sample":
            if eps is None:
                if rng is None:
                    raise InvalidArgumentError("sample mode requires an rng or eps")
                eps = rng.standard_normal(batch.shape)
            z = mu + np.exp(0.5 * logvar) * eps
        else:
            eps = np.zeros_like(batch)
            z = mu.copy()
        zhat = np.empty_like(z)
        eta_caches = []
        for i, eta in enumerate(self.etas):
            out, cache = forward(eta, z * self.mask[:, i])
            zhat[:, i] = out[:, 0]
            eta_caches.append(cache)
        xhat = np.empty_like(batch)
        dec_caches = []
        for i, dec in enumerate(self.decoders):
            out, cache = forward(dec, zhat[:, i:i + 1])
            xhat[:, i] = out[:, 0]
            dec_caches.append(cache)
        return CsvhForward(xhat, z, zhat, mu, logvar, eps,
                           enc_caches, eta_caches, dec_caches)

    def loss(self, x, fw: CsvhForward) -> CsvhLoss:
        batch, _ = _as_batch(x, self.d)
        mse = csh_loss(batch, fw.xhat)
        kl = gaussian_kl(fw.mu, fw.logvar)
        latent = csh_loss(fw.z, fw.zhat)
        total = mse + self.lambda_kl * kl + self.lambda_latent * latent
        return CsvhLoss(total, mse, kl, latent)

    def loss_and_grads(self, x, rng: np.random.Generator | None = None,
                       mode: str = "sample", eps: np.ndarray | None = None
                       ) -> tuple[CsvhLoss, list[np.ndarray]]:
        """Total loss and exact gradients through decode, mask, reparam, encode."""
        batch, _ = _as_batch(x, self.d)
        n, d = batch.shape
        fw = self.forward(batch, rng=rng, mode=mode, eps=eps)
        losses = self.loss(batch, fw)
        scale = 1.0 / (n * d)

        d_xhat = 2.0 * scale * (fw.xhat - batch)
        d_zhat = np.empty_like(fw.zhat)
        dec_grads = []
        for i, dec in enumerate(self.decoders):
            g_params, g_in = backward(dec, fw.dec_caches[i], d_xhat[:, i:i + 1])
            dec_grads.append(g_params)
            d_zhat[:, i] = g_in[:, 0]
        # latent alignment pulls zhat toward z (and z toward zhat below)
        d_zhat += self.lambda_latent * 2.0 * scale * (fw.zhat - fw.z)

        d_z = self.lambda_latent * 2.0 * scale * (fw.z - fw.zhat)
        eta_grads = []
        for i, eta in enumerate(self.etas):
            g_params, g_in = backward(eta, fw.eta_caches[i], d_zhat[:, i:i + 1])
            eta_grads.append(g_params)
            d_z += g_in * self.mask[:, i]

        d_mu = d_z + self.lambda_kl * scale * fw.mu
        d_logvar = (d_z * fw.eps * 0.5 * np.exp(0.5 * fw.logvar)
                    + self.lambda_kl * scale * 0.5 * (np.exp(fw.logvar) - 1.0))
        enc_grads = []
        for i, enc in enumerate(self.encoders):
            g_out = np.column_stack([d_mu[:, i], d_logvar[:, i]])
            g_params, _ = backward(enc, fw.enc_caches[i], g_out)
            enc_grads.append(g_params)

        grads: list[np.ndarray] = []
        for group in (enc_grads, eta_grads, dec_grads):
            for g_params in group:
                grads.extend(g_params)
        return losses, grads

    def reconstruction_mse(self, x, rng: np.random.Generator | None = None) -> float:
        batch, _ = _as_batch(x, self.d)
        fw = self.forward(batch, mode="mean")
        return csh_loss(batch, fw.xhat)

    def input_gradients(self, x) -> np.ndarray:
        """Mean-mode Jacobian G[j, i] = d xhat_i / d x_j at a single point."""
        vec = np.asarray(x, dtype=float).reshape(-1)
        fw = self.forward(vec[None, :], mode="mean")
        # dz_j / dx_j in mean mode is the mu-head gradient of encoder j
        enc_grad = np.empty(self.d)
        for j, enc in enumerate(self.encoders):
            _, g_in = backward(enc, fw.enc_caches[j], np.array([[1.0, 0.0]]))
            enc_grad[j] = g_in[0, 0]
        g = np.zeros((self.d, self.d))
        for i in range(self.d):
            _, g_dec = backward(self.decoders[i], fw.dec_caches[i], np.ones((1, 1)))
            _, g_eta = backward(self.etas[i], fw.eta_caches[i], g_dec)
            g[:, i] = g_eta[0] * self.mask[:, i] * enc_grad
        return g


def csvh_forward(model: CsvhModel, x, rng: np.random.Generator | None = None,
                 mode: str = "mean") -> CsvhForward:
    return model.forward(x, rng=rng, mode=mode)


def csvh_loss(model: CsvhModel, x, fw: CsvhForward) -> CsvhLoss:
    return model.loss(x, fw)


class BaselineVae:
    """Joint VAE baseline: one encoder and one decoder over all variables."""

    kind = "vae"

    def __init__(self, encoder: Mlp, decoder: Mlp, d: int,
                 column_names: Sequence[str] | None = None,
                 lambda_kl: float = DEFAULT_LAMBDA_KL):
        self.encoder = encoder
        self.decoder = decoder
        self._d = d
        self.column_names = tuple(column_names) if column_names else None
        self.lambda_kl = float(lambda_kl)
        self.adjacency = None
        self.context: TrainingContext | None = None

    @property
    def d(self) -> int:
        return self._d

    @classmethod
    def create(cls, d: int, rng: np.random.Generator,
               enc_hidden: Sequence[int] = DEFAULT_ENC_HIDDEN,
               column_names: Sequence[str] | None = None,
               lambda_kl: float = DEFAULT_LAMBDA_KL) -> "BaselineVae":
        # per-variable hidden sizing scaled up to the joint dimension
        hidden = tuple(h * d for h in enc_hidden)
        encoder = init_mlp(MlpSpec((d, *hidden, 2 * d)), rng)
        decoder = init_mlp(MlpSpec((d, *hidden, d)), rng)
        return cls(encoder, decoder, d, column_names, lambda_kl)

    def parameters(self) -> list[np.ndarray]:
        return self.encoder.parameters() + self.decoder.parameters()

    def forward(self, x, rng: np.random.Generator | None = None,
                mode: str = "mean", eps: np.ndarray | None = None):
        if mode not in ("sample", "mean"):
            raise InvalidArgumentError(f"unknown mode {mode!r}")
        batch, _ = _as_batch(x, self.d)
        enc_out, enc_cache = forward(self.encoder, batch)
        mu, logvar = enc_out[:, :self.d], enc_out[:, self.d:]
        if mode == "sample":
            if eps is None:
                if rng is None:
                    raise InvalidArgumentError("sample mode requires an rng or eps")
                eps = rng.standard_normal(batch.shape)
            z = mu + np.exp(0.5 * logvar) * eps
        else:
            eps = np.zeros_like(batch)
            z = mu.copy()
        xhat, dec_cache = forward(self.decoder, z)
        return xhat, z, mu, logvar, eps, enc_cache, dec_cache

    def loss_and_grads(self, x, rng: np.random.Generator | None = None,
                       mode: str = "sample", eps: np.ndarray | None = None):
        batch, _ = _as_batch(x, self.d)
        n, d = batch.shape
        xhat, z, mu, logvar, eps, enc_cache, dec_cache = self.forward(
            batch, rng=rng, mode=mode, eps=eps)
        mse = csh_loss(batch, xhat)
        kl = gaussian_kl(mu, logvar)
        total = mse + self.lambda_kl * kl
        scale = 1.0 / (n * d)
        d_xhat = 2.0 * scale * (xhat - batch)
        dec_grads, d_z = backward(self.decoder, dec_cache, d_xhat)
        d_mu = d_z + self.lambda_kl * scale * mu
        d_logvar = (d_z * eps * 0.5 * np.exp(0.5 * logvar)
                    + self.lambda_kl * scale * 0.5 * (np.exp(logvar) - 1.0))
        enc_grads, _ = backward(self.encoder, enc_cache,
                                np.concatenate([d_mu, d_logvar], axis=1))
        return (total, mse, kl), enc_grads + dec_grads

    def reconstruction_mse(self, x, rng: np.random.Generator | None = None) -> float:
        batch, _ = _as_batch(x, self.d)
        xhat, *_ = self.forward(batch, mode="mean")
        return csh_loss(batch, xhat)


def attach_context(model, train_table: Table, stats: NormStats) -> None:
    """Record units and training marginals on a freshly trained model."""
    if model.column_names is None:
        model.column_names = train_table.columns
    exo_ranges: dict[str, tuple[float, float]] = {}
    if hasattr(model, "exo_diag"):
        for k, name in enumerate(train_table.columns):
            if model.exo_diag[k]:
                col = train_table.values[:, k]
                exo_ranges[name] = (float(col.min()), float(col.max()))
    model.context = TrainingContext(stats, exo_ranges, summarize_columns(train_table))


def synthesize(model, exogenous: Table | None = None, n: int | None = None,
               rng: np.random.Generator | None = None, mode: str = "mean") -> Table:
    """Generate a table by evaluating variables in causal order.

    Exogenous variables (mask diagonal 1) pass straight through from the
    supplied table, or are drawn uniformly from the stored training ranges
    when only a row count is given.  Endogenous variables are produced by the
    trained networks from already-generated parents, then mapped back to
    original units.
    """
    if model.adjacency is None:
        raise ContractViolationError("synthesis requires a causal (DAG) model")
    if model.context is None:
        raise ContractViolationError("model has no training context; train it first")
    if (exogenous is None) == (n is None):
        raise InvalidArgumentError("supply exactly one of exogenous table or row count")
    if mode == "sample" and rng is None:
        raise InvalidArgumentError("sample mode requires an rng")
    stats = model.context.norm_stats
    columns = model.column_names
    exo_idx = [k for k in range(model.d) if model.exo_diag[k]]
    exo_names = [columns[k] for k in exo_idx]

    if exogenous is not None:
        missing = [name for name in exo_names if name not in exogenous.columns]
        if missing:
            raise InvalidArgumentError(f"exogenous table lacks columns {missing}")
        n_rows = exogenous.n
        raw_exo = {name: exogenous.column(name).copy() for name in exo_names}
    else:
        if n < 0:
            raise InvalidArgumentError("row count must be >= 0")
        if n > 0 and rng is None:
            raise InvalidArgumentError("sampling exogenous values requires an rng")
        n_rows = n
        raw_exo = {}
        for name in exo_names:
            lo, hi = model.context.exo_ranges[name]
            raw_exo[name] = rng.uniform(lo, hi, n_rows) if n_rows else np.empty(0)

    if n_rows == 0:
        return Table(columns, np.empty((0, model.d)))

    work = np.zeros((n_rows, model.d))
    for k, name in zip(exo_idx, exo_names):
        work[:, k] = (raw_exo[name] - stats.mean[k]) / stats.std[k]

    order = topological_order(model.adjacency)
    if isinstance(model, CsvhModel):
        z = np.zeros((n_rows, model.d))

        def encode_var(k: int) -> None:
            out, _ = forward(model.encoders[k], work[:, k:k + 1])
            z[:, k] = out[:, 0]
            if mode == "sample":
                z[:, k] += np.exp(0.5 * out[:, 1]) * rng.standard_normal(n_rows)

        for k in order:
            if model.exo_diag[k]:
                encode_var(k)
                continue
            zh, _ = forward(model.etas[k], z * model.mask[:, k])
            xh, _ = forward(model.decoders[k], zh)
            work[:, k] = xh[:, 0]
            encode_var(k)
    else:
        for k in order:
            if model.exo_diag[k]:
                continue
            out, _ = forward(model.etas[k], work * model.mask[:, k])
            work[:, k] = out[:, 0]

    table = denormalize(Table(columns, work), stats)
    values = table.values.copy()
    for k, name in zip(exo_idx, exo_names):
        values[:, k] = raw_exo[name]  # exact passthrough, no normalize round-trip
    return Table(columns, values)


def save_checkpoint(model, path, config_hash: str | None = None) -> None:
    """Write a JSON bundle: structure, weights, units, training marginals."""
    obj: dict = {
        "format": "scmtest-checkpoint-v1",
        "model_kind": model.kind,
        "d": model.d,
        "column_names": list(model.column_names) if model.column_names else None,
        "config_hash": config_hash,
    }
    if model.adjacency is not None:
        obj["adjacency"] = {
            "nodes": list(model.adjacency.node_names),
            "edges": [[i, j] for i, j in model.adjacency.edges()],
        }
    if isinstance(model, (CshModel, CsvhModel)):
        obj["mask"] = [[float(v) for v in row] for row in model.mask]
        obj["exo_diag"] = [int(v) for v in model.exo_diag]
        obj["etas"] = [mlp_to_json(m) for m in model.etas]
    if isinstance(model, CsvhModel):
        obj["encoders"] = [mlp_to_json(m) for m in model.encoders]
        obj["decoders"] = [mlp_to_json(m) for m in model.decoders]
        obj["lambda_kl"] = model.lambda_kl
        obj["lambda_latent"] = model.lambda_latent
    if isinstance(model, BaselineVae):
        obj["encoder"] = mlp_to_json(model.encoder)
        obj["decoder"] = mlp_to_json(model.decoder)
        obj["lambda_kl"] = model.lambda_kl
    if model.context is not None:
        obj["context"] = {
            "norm_stats": model.context.norm_stats.to_json(),
            "exo_ranges": {k: [lo, hi] for k, (lo, hi) in model.context.exo_ranges.items()},
            "column_summary": model.context.column_summary,
        }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=1)
        fh.write("\n")


def load_checkpoint(path):
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    if obj.get("format") != "scmtest-checkpoint-v1":
        raise InvalidArgumentError(f"not a model checkpoint: {path}")
    adjacency = None
    if "adjacency" in obj:
        adj = obj["adjacency"]
        adjacency = Adjacency.from_edges(
            len(adj["nodes"]), [tuple(e) for e in adj["edges"]], adj["nodes"]
        )
    names = obj.get("column_names")
    kind = obj["model_kind"]
    if kind in ("csh", "nn"):
        model = CshModel(np.asarray(obj["mask"], dtype=float),
                         np.asarray(obj["exo_diag"], dtype=np.int8),
                         [mlp_from_json(m) for m in obj["etas"]],
                         adjacency, names)
        model.kind = kind
    elif kind == "csvh":
        model = CsvhModel(np.asarray(obj["mask"], dtype=float),
                          np.asarray(obj["exo_diag"], dtype=np.int8),
                          [mlp_from_json(m) for m in obj["encoders"]],
                          [mlp_from_json(m) for m in obj["etas"]],
                          [mlp_from_json(m) for m in obj["decoders"]],
                          adjacency, names,
                          obj["lambda_kl"], obj["lambda_latent"])
    elif kind == "vae":
        model = BaselineVae(mlp_from_json(obj["encoder"]),
                            mlp_from_json(obj["decoder"]),
                            obj["d"], names, obj["lambda_kl"])
    else:
        raise InvalidArgumentError(f"unknown model kind {kind!r}")
    if obj.get("context"):
        ctx = obj["context"]
        model.context = TrainingContext(
            NormStats.from_json(ctx["norm_stats"]),
            {k: (float(v[0]), float(v[1])) for k, v in ctx["exo_ranges"].items()},
            ctx["column_summary"],
        )
    return model
