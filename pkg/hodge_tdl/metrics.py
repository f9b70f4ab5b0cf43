"""
Reconstruction and topology metrics.
"""

import logging
from dataclasses import asdict, dataclass, field
from typing import Dict, Iterable, Optional, Sequence, Union

import numpy as np

from hodge_tdl.complex import PolygonSelector

logger = logging.getLogger(__name__)

Selector = Union[PolygonSelector, Sequence[float], np.ndarray]


def per_signal_nmse(Y: np.ndarray, Y_hat: np.ndarray) -> np.ndarray:
    """
    ||y_t - y_hat_t||^2 / ||y_t||^2 for every column, nan where y_t = 0.
    """

    Y = np.asarray(Y, dtype=float)
    Y_hat = np.asarray(Y_hat, dtype=float)
    if Y.shape != Y_hat.shape:
        raise ValueError(f"shape mismatch: {Y.shape} vs {Y_hat.shape}")
    if Y.ndim == 1:
        Y, Y_hat = Y[:, np.newaxis], Y_hat[:, np.newaxis]

    energy = np.sum(Y**2, axis=0)
    error = np.sum((Y - Y_hat) ** 2, axis=0)

    out = np.full(energy.shape, np.nan)
    live = energy > 0
    out[live] = error[live] / energy[live]
    return out


def nmse(Y: np.ndarray, Y_hat: np.ndarray) -> float:
    """
    Mean per-signal normalised squared error. Zero signals are left out of
    the mean and logged.
    """

    errors = per_signal_nmse(Y, Y_hat)
    excluded = np.flatnonzero(np.isnan(errors))

    if excluded.size:
        logger.warning("nmse: excluded zero-norm columns %s", excluded.tolist())
    if excluded.size == errors.size:
        raise ValueError("nmse is undefined: every true signal is zero")

    return float(np.nanmean(errors))


def _as_binary(p: Selector, name: str) -> np.ndarray:
    values = p.values if isinstance(p, PolygonSelector) else np.asarray(p, dtype=float)
    if not np.all((values == 0) | (values == 1)):
        raise ValueError(f"{name} must be binary")
    return values


def topology_error_rate(p_true: Selector, p_hat: Selector) -> float:
    """
    Fraction of candidate polygons whose presence is inferred wrongly.
    """

    a = _as_binary(p_true, "p_true")
    b = _as_binary(p_hat, "p_hat")

    if a.shape != b.shape:
        raise ValueError(f"selectors have {a.size} and {b.size} entries")
    if a.size == 0:
        return 0.0

    return float(np.count_nonzero(a != b)) / a.size


def laplacian_nmse(L_true: np.ndarray, L_hat: np.ndarray) -> float:
    """
    ||L - L_hat||_F / ||L||_F; nan when L is zero.
    """

    L_true = np.asarray(L_true, dtype=float)
    L_hat = np.asarray(L_hat, dtype=float)
    if L_true.shape != L_hat.shape:
        raise ValueError(f"shape mismatch: {L_true.shape} vs {L_hat.shape}")

    scale = np.linalg.norm(L_true)
    if scale == 0:
        logger.warning("laplacian nmse is undefined for a zero true Laplacian")
        return float("nan")

    return float(np.linalg.norm(L_true - L_hat) / scale)


@dataclass(frozen=True)
class EvalReport:
    method: str
    k0: int
    nmse: float
    per_signal: tuple = field(repr=False)
    error_rate: Optional[float] = None
    laplacian_nmse: Optional[float] = None

    def __post_init__(self):
        for name in ("nmse", "error_rate", "laplacian_nmse"):
            value = getattr(self, name)
            if value is not None and value < 0:
                raise ValueError(f"{name} must be non-negative, got {value}")
        if self.error_rate is not None and self.error_rate > 1:
            raise ValueError(f"error rate exceeds 1: {self.error_rate}")

    def to_dict(self) -> Dict:
        out = asdict(self)
        out["per_signal"] = [None if np.isnan(v) else v for v in self.per_signal]
        return out


def aggregate(reports: Iterable[EvalReport]) -> Dict[str, float]:
    """
    Mean and (population) standard deviation of each metric over reports,
    skipping metrics a report does not carry.
    """

    reports = list(reports)
    out: Dict[str, float] = {"count": len(reports)}

    for name in ("nmse", "error_rate", "laplacian_nmse"):
        values = np.array(
            [getattr(r, name) for r in reports if getattr(r, name) is not None],
            dtype=float,
        )
        values = values[~np.isnan(values)]
        if values.size:
            out[f"{name}_mean"] = float(values.mean())
            out[f"{name}_std"] = float(values.std())

    return out
