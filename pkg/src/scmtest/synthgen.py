"""Ground-truth data generators: linear/nonlinear SEM tables and the pendulum.

All generators do ancestral sampling in topological order and are pure
functions of (spec, seed).  Gaussian noise is added only to endogenous
variables; its variance is derived from the empirical variance of the
pre-noise column so a requested SNR is met on the generated sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .datatable import Table
from .errors import InvalidArgumentError
from .graph import Adjacency, ExoMask, StructuralPrior, default_exo, topological_order
from .nnet import Mlp, MlpSpec, forward, init_mlp, mlp_from_json, mlp_to_json

PENDULUM_COLUMNS = ("theta", "x_sun", "w_shadow", "x_shadow")


@dataclass(frozen=True)
class NoiseSpec:
    """Additive zero-mean Gaussian noise level as an SNR in decibels."""

    snr_db: float = math.inf

    @classmethod
    def noiseless(cls) -> "NoiseSpec":
        return cls(math.inf)

    @property
    def is_noiseless(self) -> bool:
        return math.isinf(self.snr_db)


def noise_variance(signal_variance: float, snr_db: float) -> float:
    """Noise variance that yields the requested SNR for the given signal power."""
    if signal_variance < 0:
        raise InvalidArgumentError("signal variance must be >= 0")
    return signal_variance / (10.0 ** (snr_db / 10.0))


@dataclass(frozen=True, eq=False)
class LinearSem:
    """Linear SEM: weight matrix supported on the adjacency."""

    adjacency: Adjacency
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.shape != self.adjacency.entries.shape:
            raise InvalidArgumentError("weights shape must match adjacency")
        if np.any((self.adjacency.entries == 0) & (w != 0.0)):
            raise InvalidArgumentError("weights outside the adjacency support")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def random(cls, adjacency: Adjacency, rng: np.random.Generator) -> "LinearSem":
        w = rng.standard_normal(adjacency.entries.shape) * adjacency.entries
        return cls(adjacency, w)


@dataclass(frozen=True, eq=False)
class NonlinearSem:
    """Per-node frozen random nets mapping masked parent vectors to scalars."""

    adjacency: Adjacency
    funcs: tuple[Mlp, ...]

    def __post_init__(self):
        if len(self.funcs) != self.adjacency.d:
            raise InvalidArgumentError("need one node function per variable")

    @classmethod
    def random(cls, adjacency: Adjacency, rng: np.random.Generator,
               hidden: Sequence[int] = (4, 16, 8, 2)) -> "NonlinearSem":
        d = adjacency.d
        spec = MlpSpec((d, *hidden, 1), activation="tanh", init="unit")
        funcs = tuple(init_mlp(spec, rng) for _ in range(d))
        return cls(adjacency, funcs)


def _ancestral_sample(adjacency: Adjacency, node_value, n: int, noise: NoiseSpec,
                      rng: np.random.Generator, names: Sequence[str]) -> Table:
    """Shared ancestral-sampling loop.

    ``node_value(j, X)`` returns the pre-noise column of endogenous node j
    given the partially filled sample matrix.  Exogenous nodes are drawn
    standard-normal; endogenous nodes get Gaussian noise at the requested SNR.
    """
    if n < 1:
        raise InvalidArgumentError("need n >= 1 samples")
    exo = default_exo(adjacency).diag
    x = np.zeros((n, adjacency.d))
    for j in topological_order(adjacency):
        if exo[j]:
            x[:, j] = rng.standard_normal(n)
            continue
        signal = node_value(j, x)
        x[:, j] = signal
        if not noise.is_noiseless:
            var = noise_variance(float(np.var(signal)), noise.snr_db)
            x[:, j] += rng.normal(0.0, math.sqrt(var), n)
    return Table(tuple(names), x)


def sample_linear(sem: LinearSem, n: int, noise: NoiseSpec,
                  rng: np.random.Generator) -> Table:
    """Sample the linear SEM; endogenous node j is the full-width dot x @ w[:, j]."""
    return _ancestral_sample(
        sem.adjacency,
        lambda j, x: x @ sem.weights[:, j],
        n, noise, rng, sem.adjacency.node_names,
    )


def sample_nonlinear(sem: NonlinearSem, n: int, noise: NoiseSpec,
                     rng: np.random.Generator) -> Table:
    """Sample the nonlinear SEM; node functions see only masked parent values."""
    mask = sem.adjacency.entries

    def node_value(j: int, x: np.ndarray) -> np.ndarray:
        out, _ = forward(sem.funcs[j], x * mask[:, j])
        return out[:, 0]

    return _ancestral_sample(sem.adjacency, node_value, n, noise, rng,
                             sem.adjacency.node_names)


@dataclass(frozen=True)
class PendulumScene:
    """Scene constants of the shadow-projection model.

    A rod of length ``rod_length`` hangs from a pivot at ``pivot_height``
    above the ground; a point sun at height ``sun_height`` casts the rod's
    shadow onto the ground line.  The sun's horizontal position follows from
    the light angle at the pivot.  Shadow width is clamped from below at
    ``width_floor``.
    """

    pivot_height: float = 10.0
    rod_length: float = 9.5
    sun_height: float = 20.0
    width_floor: float = 0.05
    angle_range_deg: float = 45.0

    def sun_position(self, light_angle_deg):
        """Horizontal sun position giving this ray angle at the pivot.

        The ray direction at the pivot is (sin phi, -cos phi), so the sun
        sits on the opposite side: x = -(sun_height - pivot_height)*tan(phi).
        """
        phi = np.deg2rad(np.asarray(light_angle_deg, dtype=float))
        return -(self.sun_height - self.pivot_height) * np.tan(phi)

    def to_json(self) -> dict:
        return {
            "pivot_height": self.pivot_height,
            "rod_length": self.rod_length,
            "sun_height": self.sun_height,
            "width_floor": self.width_floor,
            "angle_range_deg": self.angle_range_deg,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "PendulumScene":
        return cls(**{k: float(v) for k, v in obj.items()})


def pendulum_shadow(theta_deg, x_sun, scene: PendulumScene = PendulumScene()):
    """Noiseless shadow (width, position) for pendulum angle and sun position.

    The pivot and the rod tip are projected onto the ground along the lines
    through the sun point; the shadow spans the two projections.  The width
    clamps to the floor when sun, pivot, and tip are collinear (the rod lies
    along its own light ray, at theta equal to the pivot's light angle).
    """
    theta = np.deg2rad(np.asarray(theta_deg, dtype=float))
    xs = np.asarray(x_sun, dtype=float)
    h, ell, hs = scene.pivot_height, scene.rod_length, scene.sun_height
    tip_x = ell * np.sin(theta)
    tip_y = h - ell * np.cos(theta)
    proj_pivot = xs - xs * hs / (hs - h)
    proj_tip = xs + (tip_x - xs) * hs / (hs - tip_y)
    w_shadow = np.maximum(scene.width_floor, np.abs(proj_tip - proj_pivot))
    x_shadow = 0.5 * (proj_tip + proj_pivot)
    return w_shadow, x_shadow


def pendulum_prior() -> StructuralPrior:
    """Ground-truth structure: both angles drive both shadow variables."""
    adjacency = Adjacency.from_edges(
        4, [(0, 2), (0, 3), (1, 2), (1, 3)], PENDULUM_COLUMNS
    )
    return StructuralPrior(adjacency, ExoMask(np.array([1, 1, 0, 0])))


def pendulum_table(n: int, noise: NoiseSpec, rng: np.random.Generator,
                   scene: PendulumScene = PendulumScene()) -> Table:
    """Sample the pendulum dataset (theta, x_sun, w_shadow, x_shadow).

    Pendulum angle and light angle are independent uniforms on
    (-angle_range, +angle_range) degrees; the sun position follows from the
    light angle through the scene geometry.  Gaussian noise at the requested
    SNR goes on the two endogenous shadow columns only.
    """
    if n < 1:
        raise InvalidArgumentError("need n >= 1 samples")
    a = scene.angle_range_deg
    theta_deg = rng.uniform(-a, a, n)
    phi_deg = rng.uniform(-a, a, n)
    x_sun = scene.sun_position(phi_deg)
    w_shadow, x_shadow = pendulum_shadow(theta_deg, x_sun, scene)
    values = np.column_stack([theta_deg, x_sun, w_shadow, x_shadow])
    for j in (2, 3):
        if not noise.is_noiseless:
            var = noise_variance(float(np.var(values[:, j])), noise.snr_db)
            values[:, j] += rng.normal(0.0, math.sqrt(var), n)
    return Table(PENDULUM_COLUMNS, values)


def sem_to_json(sem) -> dict:
    """Serialize a generator spec (linear weights or frozen nets)."""
    base = {
        "nodes": list(sem.adjacency.node_names),
        "edges": [[i, j] for i, j in sem.adjacency.edges()],
    }
    if isinstance(sem, LinearSem):
        base["kind"] = "linear"
        base["weights"] = [[float(v) for v in row] for row in sem.weights]
    elif isinstance(sem, NonlinearSem):
        base["kind"] = "nonlinear"
        base["funcs"] = [mlp_to_json(f) for f in sem.funcs]
    else:
        raise InvalidArgumentError(f"unknown SEM type {type(sem).__name__}")
    return base


def sem_from_json(obj: dict):
    adjacency = Adjacency.from_edges(
        len(obj["nodes"]), [tuple(e) for e in obj["edges"]], obj["nodes"]
    )
    if obj["kind"] == "linear":
        return LinearSem(adjacency, np.asarray(obj["weights"], dtype=float))
    if obj["kind"] == "nonlinear":
        return NonlinearSem(adjacency, tuple(mlp_from_json(f) for f in obj["funcs"]))
    raise InvalidArgumentError(f"unknown SEM kind {obj['kind']!r}")
