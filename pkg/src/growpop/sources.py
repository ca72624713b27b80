"""Distributions for incoming opinions.

Every source is parameterized by its mean vector m and the trace of its
covariance, sigma2 = E|X - m|^2. The three families share that normalization
so ensemble statistics of the mean and variance functionals depend on the
source only through (m, sigma2):

* ``gaussian``: isotropic normal, covariance (sigma2/d) * I,
* ``uniform``: independent coordinates uniform on a centered box with total
  variance sigma2,
* ``two_point``: m +/- u with equal probability, |u|^2 = sigma2 (u along the
  first coordinate axis).

sigma2 = 0 is allowed and degenerates every family to a point mass at m.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["OpinionSource", "gaussian_source", "uniform_source",
           "two_point_source", "source_from_config", "sample_incoming"]

_KINDS = ("gaussian", "uniform", "two_point")


@dataclass(frozen=True)
class OpinionSource:
    kind: str
    mean: tuple[float, ...]
    sigma2: float

    @property
    def dim(self) -> int:
        return len(self.mean)

    @property
    def mean_vector(self) -> np.ndarray:
        return np.array(self.mean, dtype=float)


def _make(kind: str, mean, sigma2: float) -> OpinionSource:
    if np.isscalar(mean):
        mean = (float(mean),)
    else:
        mean = tuple(float(c) for c in mean)
    if len(mean) < 1:
        raise ValueError("mean must have at least one coordinate")
    sigma2 = float(sigma2)
    if not (sigma2 >= 0.0) or not math.isfinite(sigma2):
        raise ValueError(f"sigma2 must be >= 0, got {sigma2}")
    return OpinionSource(kind=kind, mean=mean, sigma2=sigma2)


def gaussian_source(mean, sigma2: float) -> OpinionSource:
    return _make("gaussian", mean, sigma2)


def uniform_source(mean, sigma2: float) -> OpinionSource:
    return _make("uniform", mean, sigma2)


def two_point_source(mean, sigma2: float) -> OpinionSource:
    return _make("two_point", mean, sigma2)


def source_from_config(spec: dict, path: str = "source") -> OpinionSource:
    """Build a source from config, e.g. {"type": "gaussian", "mean": 0.0, "sigma2": 1.0}."""
    if not isinstance(spec, dict):
        raise ValueError(f"{path}: expected an object, got {type(spec).__name__}")
    kind = spec.get("type")
    if kind not in _KINDS:
        raise ValueError(f"{path}.type: unknown source type {kind!r}")
    if "mean" not in spec:
        raise ValueError(f"missing required field {path}.mean")
    if "sigma2" not in spec:
        raise ValueError(f"missing required field {path}.sigma2")
    mean = spec["mean"]
    if isinstance(mean, list):
        if not all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in mean):
            raise ValueError(f"{path}.mean: expected numbers")
    elif not isinstance(mean, (int, float)) or isinstance(mean, bool):
        raise ValueError(f"{path}.mean: expected a number or list of numbers, got {mean!r}")
    sigma2 = spec["sigma2"]
    if not isinstance(sigma2, (int, float)) or isinstance(sigma2, bool):
        raise ValueError(f"{path}.sigma2: expected a number, got {sigma2!r}")
    if sigma2 < 0:
        raise ValueError(f"{path}.sigma2: must be >= 0, got {sigma2}")
    try:
        return _make(kind, mean, sigma2)
    except ValueError as err:
        raise ValueError(f"{path}: {err}") from None


def sample_incoming(source: OpinionSource, rng: np.random.Generator) -> np.ndarray:
    """Draw one incoming opinion; advances rng by exactly one draw."""
    m = source.mean_vector
    d = m.size
    s2 = source.sigma2
    if source.kind == "gaussian":
        return m + rng.normal(0.0, math.sqrt(s2 / d), size=d)
    if source.kind == "uniform":
        half = math.sqrt(3.0 * s2 / d)
        return m + rng.uniform(-half, half, size=d)
    # two_point: a fair sign on a fixed offset along the first axis
    sign = 1.0 if rng.integers(0, 2) == 1 else -1.0
    x = m.copy()
    x[0] += sign * math.sqrt(s2)
    return x
