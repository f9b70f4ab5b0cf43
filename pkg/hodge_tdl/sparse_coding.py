"""
K0-sparse coding of signals with Orthogonal Matching Pursuit.
"""

import logging
from concurrent import futures
from dataclasses import dataclass
from typing import List, Optional, Tuple, Union

import numpy as np
from scipy import linalg

from hodge_tdl.constants import RES_TOL, THREADS
from hodge_tdl.dictionary import Dictionary, normalize_columns

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class OmpResult:
    coefficients: np.ndarray
    support: Tuple[int, ...]
    residual_norms: Tuple[float, ...]


@dataclass(frozen=True, eq=False)
class SparseCode:
    s: np.ndarray
    supports: Tuple[Tuple[int, ...], ...]
    residual_norms: Tuple[Tuple[float, ...], ...]

    @property
    def max_support(self) -> int:
        return max((len(s) for s in self.supports), default=0)


def omp(
    d_w: np.ndarray, y: np.ndarray, k0: int, res_tol: Optional[float] = None
) -> OmpResult:
    """
    Orthogonal Matching Pursuit on a dictionary with unit-norm (or all-zero,
    hence masked) columns.

    Each round picks the atom most correlated with the residual (lowest index
    on ties), re-solves least squares on the whole support and updates the
    residual. Stops after k0 atoms, when the residual norm drops to res_tol
    (default 1e-12 ||y||) or when no remaining atom correlates with it.
    """

    if k0 < 1:
        raise ValueError(f"k0 must be at least 1, got {k0}")

    y = np.asarray(y, dtype=float)
    if y.shape != (d_w.shape[0],):
        raise ValueError(f"signal has shape {y.shape}, dictionary {d_w.shape}")

    y_norm = float(np.linalg.norm(y))
    tol = RES_TOL * y_norm if res_tol is None else res_tol
    floor = np.finfo(float).eps * max(y_norm, 1.0)

    selectable = np.linalg.norm(d_w, axis=0) > 0
    support: List[int] = []
    solution = np.zeros(0)
    residual = y.copy()
    history = [y_norm]

    while len(support) < min(k0, d_w.shape[1]) and history[-1] > tol:
        corr = np.abs(d_w.T @ residual)
        corr[~selectable] = -1.0
        corr[support] = -1.0

        atom = int(np.argmax(corr))
        if corr[atom] <= floor:
            logger.debug("omp stopped early: no atom correlates with the residual")
            break

        support.append(atom)
        sub = d_w[:, support]
        solution, *_ = linalg.lstsq(sub, y)
        residual = y - sub @ solution
        history.append(float(np.linalg.norm(residual)))

    coefficients = np.zeros(d_w.shape[1])
    coefficients[support] = solution

    return OmpResult(coefficients, tuple(support), tuple(history))


def sparse_code(
    dictionary: Union[Dictionary, np.ndarray],
    Y: np.ndarray,
    k0: int,
    res_tol: Optional[float] = None,
    threads: int = THREADS,
) -> SparseCode:
    """
    Codes every column of Y over the column-normalised dictionary D W and
    returns S = W S_w, so that D S = (D W) S_w.
    """

    matrix = dictionary.matrix if isinstance(dictionary, Dictionary) else dictionary
    d_w, weights = normalize_columns(matrix)

    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, np.newaxis]

    def code(t: int) -> OmpResult:
        return omp(d_w, Y[:, t], k0, res_tol)

    if threads > 1 and Y.shape[1] > 1:
        with futures.ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(code, range(Y.shape[1])))
    else:
        results = [code(t) for t in range(Y.shape[1])]

    if results:
        s_w = np.column_stack([r.coefficients for r in results])
    else:
        s_w = np.zeros((matrix.shape[1], 0))
    s = weights[:, np.newaxis] * s_w

    return SparseCode(
        s,
        tuple(r.support for r in results),
        tuple(r.residual_norms for r in results),
    )
