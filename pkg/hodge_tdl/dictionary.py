"""
Parametric topological dictionaries.

A dictionary is sqrt(N) [H_1, ..., H_M] where every H_i is a polynomial cell
complex filter. The sqrt(N) factor lives only in the assembled matrix; the
coefficient vector h and the spectral constraints always refer to the filters
H_i themselves.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple, Union

import numpy as np

from hodge_tdl.complex import HodgePair, PolygonSelector
from hodge_tdl.spectral import (
    FilterKind,
    FrequencyClass,
    HodgeSpectrum,
    constraint_matrix,
)

logger = logging.getLogger(__name__)

ZERO_ATOM_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class DictionaryParams:
    """
    Coefficients of M polynomial filters of order J, stored block after block.
    Separated blocks read [h_id; h_up(1..J); h_down(1..J)].
    """

    M: int
    J: int
    h: np.ndarray
    kind: FilterKind = FilterKind.SEPARATED

    def __post_init__(self):
        kind = FilterKind(self.kind)
        h = np.array(self.h, dtype=float).ravel()

        if self.M < 1 or self.J < 1:
            raise ValueError(f"need M >= 1 and J >= 1, got M={self.M}, J={self.J}")

        if h.size != self.M * kind.block_size(self.J):
            raise ValueError(
                f"coefficient vector has {h.size} entries, expected "
                f"{self.M * kind.block_size(self.J)} for M={self.M}, J={self.J}"
            )

        if not np.all(np.isfinite(h)):
            raise ValueError("dictionary coefficients must be finite")

        h.setflags(write=False)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "kind", kind)

    @property
    def block_size(self) -> int:
        return self.kind.block_size(self.J)

    @property
    def blocks(self) -> np.ndarray:
        return self.h.reshape(self.M, self.block_size)

    def block(self, i: int) -> np.ndarray:
        return self.blocks[i]

    @property
    def h_id(self) -> np.ndarray:
        return self.blocks[:, 0]

    @property
    def h_up(self) -> np.ndarray:
        if self.kind is FilterKind.JOINT:
            return self.blocks[:, 1:]
        return self.blocks[:, 1 : self.J + 1]

    @property
    def h_down(self) -> np.ndarray:
        if self.kind is FilterKind.JOINT:
            return self.blocks[:, 1:]
        return self.blocks[:, self.J + 1 :]

    def upper_mask(self) -> np.ndarray:
        """
        Boolean mask over h selecting the coefficients that multiply an
        operator depending on the polygon selector.
        """
        mask = np.zeros((self.M, self.block_size), dtype=bool)
        if self.kind is FilterKind.JOINT:
            mask[:, 1:] = True
        else:
            mask[:, 1 : self.J + 1] = True
        return mask.ravel()

    def with_h(self, h: np.ndarray) -> "DictionaryParams":
        return DictionaryParams(self.M, self.J, h, self.kind)

    @classmethod
    def from_blocks(
        cls,
        h_id: np.ndarray,
        h_up: np.ndarray,
        h_down: np.ndarray,
    ) -> "DictionaryParams":
        h_id = np.atleast_1d(np.asarray(h_id, dtype=float))
        h_up = np.atleast_2d(np.asarray(h_up, dtype=float))
        h_down = np.atleast_2d(np.asarray(h_down, dtype=float))
        blocks = np.hstack([h_id[:, np.newaxis], h_up, h_down])
        return cls(h_id.size, h_up.shape[1], blocks.ravel())


@dataclass(frozen=True, eq=False)
class Dictionary:
    matrix: np.ndarray
    params: DictionaryParams
    p: Optional[PolygonSelector] = None

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_atoms(self) -> int:
        return self.matrix.shape[1]

    def block(self, i: int) -> np.ndarray:
        return self.matrix[:, i * self.n : (i + 1) * self.n]


@dataclass(frozen=True)
class FrameReport:
    assumption1_ok: bool
    assumption2_ok: bool
    lower_bound: float
    upper_bound: float
    kernel_violations: Tuple[Tuple[int, int], ...]
    coverage_violations: Tuple[int, ...]

    @property
    def ok(self) -> bool:
        return self.assumption1_ok and self.assumption2_ok


def polynomial_basis(
    hp: HodgePair, J: int, kind: FilterKind = FilterKind.SEPARATED
) -> List[np.ndarray]:
    """
    The matrices multiplied by the entries of one coefficient block, in block
    order: [I, L_up, .., L_up^J, L_down, .., L_down^J] for separated filters,
    [I, L, .., L^J] for joint ones.
    """

    identity = np.eye(hp.n)

    def powers(op: np.ndarray) -> List[np.ndarray]:
        out = [op]
        for _ in range(J - 1):
            out.append(out[-1] @ op)
        return out

    if kind is FilterKind.JOINT:
        return [identity] + powers(hp.laplacian)

    return [identity] + powers(hp.l_up) + powers(hp.l_down)


def kernel_eval(
    h_i: np.ndarray, spec: HodgeSpectrum, kind: FilterKind = FilterKind.SEPARATED
) -> np.ndarray:
    """
    Frequency response of one filter block at every eigenvalue.
    """

    h_i = np.asarray(h_i, dtype=float)
    lam = spec.eigenvalues

    if kind is FilterKind.JOINT:
        J = h_i.size - 1
        return sum(h_i[j] * lam**j for j in range(1, J + 1)) + h_i[0]

    if h_i.size % 2 != 1:
        raise ValueError(f"separated filter block has even length {h_i.size}")

    J = (h_i.size - 1) // 2
    up = spec.mask(FrequencyClass.UPPER)
    low = spec.mask(FrequencyClass.LOWER)

    g_hat = np.full(spec.n, h_i[0])
    for j in range(1, J + 1):
        g_hat = g_hat + lam**j * (h_i[j] * up + h_i[J + j] * low)

    return g_hat


def fir_filter(
    h_i: np.ndarray,
    hp: HodgePair,
    kind: FilterKind = FilterKind.SEPARATED,
    basis: Optional[List[np.ndarray]] = None,
) -> np.ndarray:
    """
    Cell complex FIR filter H_i = sum_k h_i[k] basis[k].
    """

    h_i = np.asarray(h_i, dtype=float)
    J = h_i.size - 1 if kind is FilterKind.JOINT else (h_i.size - 1) // 2

    if basis is None:
        basis = polynomial_basis(hp, J, kind)

    if len(basis) != h_i.size:
        raise ValueError(f"filter block has {h_i.size} entries, basis {len(basis)}")

    out = np.zeros((hp.n, hp.n))
    for coef, op in zip(h_i, basis):
        if coef != 0.0:
            out += coef * op
    return out


def assemble(params: DictionaryParams, hp: HodgePair) -> Dictionary:
    """
    D = sqrt(N) [H_1, ..., H_M].
    """

    basis = polynomial_basis(hp, params.J, params.kind)
    filters = [
        fir_filter(params.block(i), hp, params.kind, basis) for i in range(params.M)
    ]
    matrix = np.sqrt(hp.n) * np.hstack(filters)
    return Dictionary(matrix, params, hp.p)


def translate(spec: HodgeSpectrum, g_hat: np.ndarray, m: int) -> np.ndarray:
    """
    Kernel g_hat translated to cell m (0-based):
    sqrt(N) sum_l g_hat(l) u_l(m) u_l.
    """

    if not 0 <= m < spec.n:
        raise IndexError(f"cell index {m} outside [0, {spec.n})")

    u = spec.eigenvectors
    return np.sqrt(spec.n) * (u @ (np.asarray(g_hat, dtype=float) * u[m, :]))


def check_frame(
    params: DictionaryParams, spec: HodgeSpectrum, d: float, eps: float
) -> FrameReport:
    """
    Checks that every kernel lies in [0, d] and that the kernels sum to within
    eps of d at every frequency, and reports the resulting frame bounds
    (d - eps)^2 / M and (d + eps)^2.
    """

    if d <= 0:
        raise ValueError(f"d must be positive, got {d}")
    if not 0 < eps < d:
        raise ValueError(f"eps must lie in (0, d), got eps={eps}, d={d}")

    f = constraint_matrix(spec, params.J, params.kind).f
    kernels = params.blocks @ f.T

    bad_kernel = np.argwhere((kernels < 0) | (kernels > d))
    total = kernels.sum(axis=0)
    bad_cover = np.flatnonzero((total < d - eps) | (total > d + eps))

    return FrameReport(
        assumption1_ok=bad_kernel.size == 0,
        assumption2_ok=bad_cover.size == 0,
        lower_bound=(d - eps) ** 2 / params.M,
        upper_bound=(d + eps) ** 2,
        kernel_violations=tuple((int(i), int(l)) for i, l in bad_kernel),
        coverage_violations=tuple(int(l) for l in bad_cover),
    )


def frame_energy(dictionary: Dictionary, y: np.ndarray) -> float:
    """
    sum over atoms of |<y, atom>|^2 for the atoms of D / sqrt(N), the scale on
    which the frame bounds of check_frame are stated.
    """

    coefs = dictionary.matrix.T @ np.asarray(y, dtype=float)
    return float(coefs @ coefs) / dictionary.n


def normalize_columns(
    matrix: Union[np.ndarray, Dictionary]
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Returns (D W, diag(W)) with W_ii = 1 / ||d_i||. Columns whose norm is
    negligible get W_ii = 0, so the atom can never be selected.
    """

    if isinstance(matrix, Dictionary):
        matrix = matrix.matrix

    norms = np.linalg.norm(matrix, axis=0)
    cutoff = ZERO_ATOM_RTOL * norms.max() if norms.size else 0.0
    live = norms > cutoff

    weights = np.zeros_like(norms)
    weights[live] = 1.0 / norms[live]

    if not np.all(live):
        logger.debug("masking %d zero-norm atoms", np.count_nonzero(~live))

    return matrix * weights[np.newaxis, :], weights
