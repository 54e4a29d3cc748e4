"""Shared domain types, power-control laws, and the conditional success probability.

The product form evaluated here is the bridge between the analytic and the
simulation halves of the package: both reason about a link only through its
serving distance R and the interferer pairs (D_x, R_x).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "Direction",
    "PowerModel",
    "SystemConfig",
    "LinkGeometry",
    "MomentValue",
    "ConfigError",
    "AlphaOutOfRange",
    "NonPositiveParameter",
    "TruncationWithoutCap",
    "validate_config",
    "transmit_power",
    "conditional_ps",
]


class Direction(str, Enum):
    UPLINK = "uplink"
    DOWNLINK = "downlink"


class PowerModel(str, Enum):
    FPC = "fpc"
    TFPC = "tfpc"


class ConfigError(ValueError):
    pass


class AlphaOutOfRange(ConfigError):
    pass


class NonPositiveParameter(ConfigError):
    pass


class TruncationWithoutCap(ConfigError):
    pass


@dataclass(frozen=True)
class SystemConfig:
    """Network and power-control parameters.

    theta is stored on the linear scale; dB conversion belongs to the CLI
    boundary only. epsilon > 1 is admitted for over-compensation studies.
    """

    lam: float = 1.0
    alpha: float = 4.0
    epsilon: float = 0.0
    theta: float = 1.0
    direction: Direction = Direction.UPLINK
    power_model: PowerModel = PowerModel.FPC
    p_hat: float = math.inf

    @property
    def delta(self) -> float:
        return 2.0 / self.alpha


def validate_config(cfg: SystemConfig) -> SystemConfig:
    """Return cfg unchanged if all invariants hold, else raise a ConfigError."""
    if not cfg.alpha > 2.0:
        raise AlphaOutOfRange(f"alpha must exceed 2 for the integrals to converge, got {cfg.alpha}")
    if not cfg.lam > 0.0:
        raise NonPositiveParameter(f"lambda must be positive, got {cfg.lam}")
    if not cfg.theta > 0.0:
        raise NonPositiveParameter(f"theta must be positive, got {cfg.theta}")
    if cfg.epsilon < 0.0:
        raise NonPositiveParameter(f"epsilon must be nonnegative, got {cfg.epsilon}")
    if not cfg.p_hat > 0.0:
        raise NonPositiveParameter(f"p_hat must be positive, got {cfg.p_hat}")
    if cfg.power_model is PowerModel.TFPC and math.isinf(cfg.p_hat):
        raise TruncationWithoutCap("TFPC requires a finite p_hat")
    return cfg


def transmit_power(R, cfg: SystemConfig):
    """Transmit power of a node with serving-link distance R (p_0 normalized to 1).

    FPC: R**(alpha*epsilon). TFPC caps at p_hat. epsilon = 0 means no
    compensation regardless of model.
    """
    if cfg.epsilon == 0.0:
        return np.ones_like(np.asarray(R, dtype=float)) if np.ndim(R) else 1.0
    power = np.asarray(R, dtype=float) ** (cfg.alpha * cfg.epsilon)
    if cfg.power_model is PowerModel.TFPC:
        power = np.minimum(power, cfg.p_hat)
    return power if np.ndim(R) else float(power)


@dataclass(frozen=True)
class LinkGeometry:
    """A single link: serving distance R plus interferer distance pairs.

    d[i] is the distance from interferer i to the receiver of this link,
    rx[i] the serving-link distance inside interferer i's own cell.
    """

    R: float
    d: np.ndarray
    rx: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "d", np.asarray(self.d, dtype=float))
        object.__setattr__(self, "rx", np.asarray(self.rx, dtype=float))
        if self.d.shape != self.rx.shape:
            raise ValueError("d and rx must pair up one-to-one")
        if self.R <= 0.0 or np.any(self.d <= 0.0) or np.any(self.rx <= 0.0):
            raise ValueError("all distances must be positive")

    @classmethod
    def from_pairs(cls, R: float, pairs) -> "LinkGeometry":
        pairs = list(pairs)
        d = np.array([p[0] for p in pairs], dtype=float)
        rx = np.array([p[1] for p in pairs], dtype=float)
        return cls(R=float(R), d=d, rx=rx)

    def check(self, direction: Direction) -> None:
        if direction is Direction.UPLINK and np.any(self.rx > self.d + 1e-12):
            raise ValueError("uplink interferers must satisfy R_x <= D_x")
        if direction is Direction.DOWNLINK and np.any(self.d <= self.R - 1e-12):
            raise ValueError("downlink interferers must satisfy D_x > R")


@dataclass(frozen=True)
class MomentValue:
    value: complex
    abs_error: float


def conditional_ps(geom: LinkGeometry, cfg: SystemConfig) -> float:
    """Exact fading-averaged success probability of one link given its geometry.

    Rayleigh fading integrates out in closed form, leaving the product
    prod_x 1 / (1 + theta * (P_x / P_0) * (R / D_x)^alpha), with P_0 the
    transmit power of the serving side evaluated at distance R. The empty
    product is 1.
    """
    if geom.d.size == 0:
        return 1.0
    p0 = transmit_power(geom.R, cfg)
    px = transmit_power(geom.rx, cfg)
    ratio = cfg.theta * (px / p0) * (geom.R / geom.d) ** cfg.alpha
    return float(np.exp(-np.sum(np.log1p(ratio))))
