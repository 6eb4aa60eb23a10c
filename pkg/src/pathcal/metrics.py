"""
Prediction-quality metrics: MPE, RMSE, MAPE and the Grey Relational Grade blend GRG-MAPE.

Errors are always measured minus predicted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, DegenerateRange, ZeroMeasurement


@dataclass(frozen=True)
class GrgConfig:
    xi: float = 0.5      # distinguishing coefficient
    sigma: float = 0.1   # weight of the grey relational grade
    beta: float = 0.9    # weight of the MAPE score

    def __post_init__(self):
        if not 0.0 <= self.xi <= 1.0:
            raise ValueError(f"xi must lie in [0, 1], got {self.xi!r}")
        if self.sigma < 0 or self.beta < 0:
            raise ValueError("sigma and beta must be non-negative")


@dataclass(frozen=True, eq=False)
class GrgReport:
    normalized_mea: np.ndarray
    normalized_pre: np.ndarray
    deviation: np.ndarray
    zeta: np.ndarray
    rho_grg: float
    mean_abs_pct_err: float
    rho_mape: float
    rho_grg_mape: float

    def to_dict(self) -> dict:
        return {
            "normalized_mea": self.normalized_mea.tolist(),
            "normalized_pre": self.normalized_pre.tolist(),
            "deviation": self.deviation.tolist(),
            "zeta": self.zeta.tolist(),
            "rho_grg": self.rho_grg,
            "mean_abs_pct_err": self.mean_abs_pct_err,
            "rho_mape": self.rho_mape,
            "rho_grg_mape": self.rho_grg_mape,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GrgReport":
        return cls(
            np.array(d["normalized_mea"], dtype=float),
            np.array(d["normalized_pre"], dtype=float),
            np.array(d["deviation"], dtype=float),
            np.array(d["zeta"], dtype=float),
            float(d["rho_grg"]),
            float(d["mean_abs_pct_err"]),
            float(d["rho_mape"]),
            float(d["rho_grg_mape"]),
        )


def _pair(mea, pre, min_len=1):
    mea = np.asarray(mea, dtype=float).reshape(-1)
    pre = np.asarray(pre, dtype=float).reshape(-1)
    if mea.shape != pre.shape:
        raise DataError(f"length mismatch: {mea.size} measured vs {pre.size} predicted")
    if mea.size < min_len:
        raise DataError(f"need at least {min_len} samples, got {mea.size}")
    return mea, pre


def mpe(mea, pre) -> float:
    """Mean prediction error, mean of (measured - predicted)."""
    mea, pre = _pair(mea, pre)
    return float(np.mean(mea - pre))


def rmse(mea, pre) -> float:
    mea, pre = _pair(mea, pre)
    return float(np.sqrt(np.mean((mea - pre) ** 2)))


def mean_abs_pct_err(mea, pre) -> float:
    """Mean of |mea - pre| / mea, as a fraction (not percent)."""
    mea, pre = _pair(mea, pre)
    if np.any(mea == 0):
        k = int(np.flatnonzero(mea == 0)[0]) + 1
        raise ZeroMeasurement(f"measured value is zero at sample {k}; percentage error undefined")
    return float(np.mean(np.abs(mea - pre) / mea))


def max_normalize(x) -> np.ndarray:
    """Range normalization referenced to the maximum: the largest value maps to 0, the smallest to 1."""
    x = np.asarray(x, dtype=float)
    span = x.max() - x.min()
    if span == 0:
        raise DegenerateRange("sequence has max == min; range normalization undefined")
    return (x.max() - x) / span


def grey_relational_coefficients(deviation, xi: float = 0.5) -> np.ndarray:
    """Grey relational coefficient of each sample from its deviation; all ones when every deviation is 0."""
    delta = np.asarray(deviation, dtype=float)
    dmin, dmax = delta.min(), delta.max()
    if dmax == 0:
        return np.ones_like(delta)
    zeta = np.ones_like(delta)
    # samples at the minimum deviation score exactly 1, which also covers 0/0 when xi = 0
    off = delta != dmin
    zeta[off] = (dmin + xi * dmax) / (delta[off] + xi * dmax)
    return zeta


def grg_mape(mea, pre, cfg: GrgConfig | None = None) -> GrgReport:
    """
    Grey Relational Grade blended with a MAPE score.

    Both sequences are max-referenced range normalized, the absolute
    difference of the normalized sequences gives the deviation, the grey
    relational grade is the mean grey relational coefficient, and the MAPE
    score is ``1 - mean(|mea - pre| / mea)``.  The result is
    ``|sigma * grade + beta * mape_score|``.

    Raises
    ------
    DegenerateRange
        If either sequence is constant, unless both are constant and equal
        (scored as a perfect prediction).
    ZeroMeasurement
        If a measured value is zero.
    """
    cfg = cfg or GrgConfig()
    mea, pre = _pair(mea, pre, min_len=2)
    eps_a = mean_abs_pct_err(mea, pre)
    mea_flat = mea.max() == mea.min()
    pre_flat = pre.max() == pre.min()
    if mea_flat or pre_flat:
        if not (mea_flat and pre_flat and np.array_equal(mea, pre)):
            which = "measured" if mea_flat else "predicted"
            raise DegenerateRange(f"{which} sequence has max == min; grey relational normalization undefined")
        n_mea = n_pre = np.zeros_like(mea)
    else:
        n_mea = max_normalize(mea)
        n_pre = max_normalize(pre)
    deviation = np.abs(n_mea - n_pre)
    zeta = grey_relational_coefficients(deviation, cfg.xi)
    rho_grg = float(np.mean(zeta))
    rho_mape = 1.0 - eps_a
    score = abs(cfg.sigma * rho_grg + cfg.beta * rho_mape)
    return GrgReport(n_mea, n_pre, deviation, zeta, rho_grg, eps_a, rho_mape, float(score))
