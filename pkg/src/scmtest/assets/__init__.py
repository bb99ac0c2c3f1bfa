"""Shipped hypothesis files: the six pendulum structures and medical templates."""

from importlib import resources
from pathlib import Path

PENDULUM_HYPOTHESES = ("gt", "leaky", "lossy", "2leaky", "2lossy", "leak_loss")


def asset_path(relative: str) -> Path:
    """Filesystem path of a shipped asset, e.g. 'pendulum/gt.json'."""
    return Path(resources.files(__package__)) / relative


def pendulum_hypothesis_paths() -> dict[str, Path]:
    return {name: asset_path(f"pendulum/{name}.json") for name in PENDULUM_HYPOTHESES}
