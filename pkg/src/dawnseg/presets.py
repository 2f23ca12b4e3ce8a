"""Built-in per-dataset hyper-parameter presets.

Each preset fixes the encoding radii/spread, the pseudo-label thresholds, and
the detection match radius (which defaults to the nucleus radius r1).
Unknown dataset names require explicit parameters; there is no silent default.
"""

from __future__ import annotations

from dataclasses import dataclass

from .cpl import CplParams
from .encoding import EncodingParams
from .losses import LossWeights


@dataclass(frozen=True)
class DatasetConfig:
    """Named bundle of encoding + pseudo-label parameters for one dataset."""

    name: str
    encoding: EncodingParams
    cpl: CplParams
    match_radius: float
    magnification: str = "x40"

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("dataset name must be non-empty")
        if self.match_radius <= 0:
            raise ValueError("match_radius must be positive")


def _preset(name, r1, r2, sigma, theta, d, magnification="x40"):
    return DatasetConfig(
        name=name,
        encoding=EncodingParams(r1=r1, r2=r2, sigma=sigma, tag=name),
        cpl=CplParams(theta=theta, d=d),
        match_radius=r1,
        magnification=magnification,
    )


DATASETS: dict[str, DatasetConfig] = {
    "TNBC": _preset("TNBC", 11, 22, 2.75, 0.2, 25),
    "CryoNuSeg": _preset("CryoNuSeg", 11, 22, 2.75, 0.2, 25),
    "Lizard": _preset("Lizard", 8, 16, 2, 0.2, 25, magnification="x20"),
    "ConSeP": _preset("ConSeP", 11, 22, 5, 0.5, 25),
}

DEFAULT_LOSS_WEIGHTS = LossWeights(alpha=0.1, beta=0.15)


def get_dataset(name: str) -> DatasetConfig:
    try:
        return DATASETS[name]
    except KeyError:
        raise KeyError(
            f"unknown dataset {name!r}; known presets: {sorted(DATASETS)}. "
            "Provide explicit parameters instead."
        ) from None
