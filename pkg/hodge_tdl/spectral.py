"""
Spectrum of the edge Hodge Laplacian, the Topological Fourier Transform and
the constraint matrices evaluating polynomial kernels at every frequency.
"""

import logging
from dataclasses import dataclass
from enum import Enum, IntEnum
from typing import List, Tuple

import numpy as np
from scipy import linalg

from hodge_tdl.complex import HodgePair
from hodge_tdl.constants import TOL_ZERO

logger = logging.getLogger(__name__)


class FrequencyClass(IntEnum):
    HARMONIC = 0
    LOWER = 1
    UPPER = 2


class FilterKind(str, Enum):
    """
    Polynomial filter layouts.

    SEPARATED blocks are [h_id; h_up(1..J); h_down(1..J)] acting on the lower
    and upper Laplacians separately. JOINT blocks are [h_0; h_1..h_J] acting on
    powers of the full Laplacian.
    """

    SEPARATED = "separated"
    JOINT = "joint"

    def block_size(self, J: int) -> int:
        return 2 * J + 1 if self is FilterKind.SEPARATED else J + 1


@dataclass(frozen=True, eq=False)
class HodgeSpectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    classes: np.ndarray

    @property
    def n(self) -> int:
        return self.eigenvalues.size

    def mask(self, cls: FrequencyClass) -> np.ndarray:
        return self.classes == int(cls)

    def count(self, cls: FrequencyClass) -> int:
        return int(np.count_nonzero(self.mask(cls)))

    def extremes(self, cls: FrequencyClass) -> Tuple[float, float]:
        """
        Smallest and largest eigenvalue of a frequency class, (0, 0) when the
        class is empty.
        """
        values = self.eigenvalues[self.mask(cls)]
        if values.size == 0:
            return 0.0, 0.0
        return float(values.min()), float(values.max())


@dataclass(frozen=True, eq=False)
class ConstraintMatrix:
    f: np.ndarray
    J: int
    kind: FilterKind = FilterKind.SEPARATED


def _degenerate_groups(eigenvalues: np.ndarray, candidates: np.ndarray, tol: float):
    groups: List[List[int]] = []
    for idx in candidates:
        if groups and eigenvalues[idx] - eigenvalues[groups[-1][-1]] <= tol:
            groups[-1].append(int(idx))
        else:
            groups.append([int(idx)])
    return [g for g in groups if len(g) > 1]


def eigendecompose(hp: HodgePair, tol_zero: float = TOL_ZERO) -> HodgeSpectrum:
    """
    Eigenpairs of L_down + L_up in ascending order, each eigenvector labelled
    harmonic, lower or upper.

    An eigenvalue is harmonic when it is at most tol_zero * lambda_max. Inside
    a repeated eigenvalue the basis is rotated so that it diagonalises L_down,
    which separates the gradient and curl parts no matter which basis the
    eigensolver returned.
    """

    lap = hp.laplacian
    if not np.allclose(lap, lap.T, rtol=0.0, atol=1e-10):
        raise ValueError("Hodge Laplacian is not symmetric")

    try:
        eigenvalues, eigenvectors = linalg.eigh(lap)
    except linalg.LinAlgError as err:
        raise ValueError(f"eigendecomposition failed: {err}") from err

    scale = max(float(eigenvalues[-1]), 0.0) if eigenvalues.size else 0.0
    harmonic = eigenvalues <= tol_zero * (scale if scale > 0 else 1.0)
    eigenvalues = np.where(harmonic, 0.0, eigenvalues)

    cluster_tol = tol_zero * max(scale, 1.0)
    nonzero = np.flatnonzero(~harmonic)
    for group in _degenerate_groups(eigenvalues, nonzero, cluster_tol):
        block = eigenvectors[:, group]
        restricted = block.T @ hp.l_down @ block
        _, rotation = linalg.eigh(0.5 * (restricted + restricted.T))
        eigenvectors[:, group] = block @ rotation

    classes = np.full(eigenvalues.size, int(FrequencyClass.HARMONIC))
    for idx in np.flatnonzero(~harmonic):
        u = eigenvectors[:, idx]
        up = np.linalg.norm(hp.l_up @ u)
        down = np.linalg.norm(hp.l_down @ u)
        classes[idx] = int(FrequencyClass.UPPER if up > down else FrequencyClass.LOWER)

    logger.debug(
        "spectrum: %d harmonic, %d lower, %d upper",
        np.count_nonzero(classes == FrequencyClass.HARMONIC),
        np.count_nonzero(classes == FrequencyClass.LOWER),
        np.count_nonzero(classes == FrequencyClass.UPPER),
    )

    return HodgeSpectrum(eigenvalues, eigenvectors, classes)


def tft(spec: HodgeSpectrum, y: np.ndarray) -> np.ndarray:
    """
    Topological Fourier Transform U^T y. Accepts a signal or an N x T matrix.
    """

    y = np.asarray(y, dtype=float)
    if y.shape[0] != spec.n:
        raise ValueError(f"signal has {y.shape[0]} entries, spectrum has {spec.n}")
    return spec.eigenvectors.T @ y


def itft(spec: HodgeSpectrum, y_hat: np.ndarray) -> np.ndarray:
    y_hat = np.asarray(y_hat, dtype=float)
    if y_hat.shape[0] != spec.n:
        raise ValueError(
            f"coefficients have {y_hat.shape[0]} entries, spectrum has {spec.n}"
        )
    return spec.eigenvectors @ y_hat


def constraint_matrix(
    spec: HodgeSpectrum, J: int, kind: FilterKind = FilterKind.SEPARATED
) -> ConstraintMatrix:
    """
    N x block matrix F such that F h_i evaluates the kernel of block h_i at
    every eigenvalue.

    For separated filters row l is (1, upper powers, lower powers) where only
    the block matching the class of eigenvector l is non-zero. Joint filters
    use (1, lambda_l, ..., lambda_l^J) for every row.
    """

    if J < 1:
        raise ValueError(f"polynomial order J must be at least 1, got {J}")

    powers = spec.eigenvalues[:, np.newaxis] ** np.arange(1, J + 1)[np.newaxis, :]
    ones = np.ones((spec.n, 1))

    if kind is FilterKind.JOINT:
        return ConstraintMatrix(np.hstack([ones, powers]), J, kind)

    upper = spec.mask(FrequencyClass.UPPER)[:, np.newaxis]
    lower = spec.mask(FrequencyClass.LOWER)[:, np.newaxis]
    f = np.hstack([ones, powers * upper, powers * lower])

    return ConstraintMatrix(f, J, kind)
