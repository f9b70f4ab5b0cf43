"""
Topology update primitives: objective evaluation, the greedy one-polygon
removal step, the analytic gradient with respect to the polygon selector and
the boxed hard-threshold proximal step.
"""

import logging
from concurrent import futures
from dataclasses import dataclass
from typing import Callable, List, NamedTuple, Optional, Tuple

import numpy as np

from hodge_tdl.complex import (
    CellComplex2,
    HodgePair,
    PolygonSelector,
    SelectorMode,
    hodge_pair,
)
from hodge_tdl.constants import THREADS
from hodge_tdl.dictionary import Dictionary, DictionaryParams, assemble
from hodge_tdl.spectral import FilterKind

logger = logging.getLogger(__name__)

Prox = Callable[[np.ndarray, float], np.ndarray]
Evaluator = Callable[[PolygonSelector], float]

MAX_BACKTRACKS = 30
DESCENT_SLACK = 1e-12


@dataclass(frozen=True, eq=False)
class ObjectiveState:
    value: float
    residual: np.ndarray
    dictionary: Dictionary


class GreedyChoice(NamedTuple):
    polygon: int
    value: float
    candidates: Tuple[Tuple[int, float], ...]


@dataclass(frozen=True, eq=False)
class RtdlStep:
    p_next: PolygonSelector
    mu_used: float
    obj_before: float
    obj_after: float
    backtracks: int

    @property
    def accepted(self) -> bool:
        return self.obj_after <= self.obj_before + DESCENT_SLACK * max(
            1.0, abs(self.obj_before)
        )


def evaluate(
    params: DictionaryParams,
    S: np.ndarray,
    p: PolygonSelector,
    Y: np.ndarray,
    cx: CellComplex2,
    gamma: float = 0.0,
) -> ObjectiveState:
    """
    ||Y - D(h, p) S||_F^2 + gamma ||h||^2 together with the residual.
    """

    dictionary = assemble(params, hodge_pair(cx, p))
    Y = np.asarray(Y, dtype=float)

    if dictionary.matrix.shape[1] != S.shape[0] or Y.shape != (
        dictionary.n,
        S.shape[1],
    ):
        raise ValueError(
            f"dictionary {dictionary.matrix.shape}, codes {S.shape} and signals "
            f"{Y.shape} do not line up"
        )

    residual = Y - dictionary.matrix @ S
    value = float(np.sum(residual**2)) + gamma * float(params.h @ params.h)
    return ObjectiveState(value, residual, dictionary)


def objective(
    params: DictionaryParams,
    S: np.ndarray,
    p: PolygonSelector,
    Y: np.ndarray,
    cx: CellComplex2,
    gamma: float = 0.0,
) -> float:
    return evaluate(params, S, p, Y, cx, gamma).value


def greedy_step(
    params: DictionaryParams,
    S: np.ndarray,
    p: PolygonSelector,
    Y: np.ndarray,
    cx: CellComplex2,
    gamma: float = 0.0,
    evaluator: Optional[Evaluator] = None,
    threads: int = THREADS,
) -> GreedyChoice:
    """
    Tries removing every active polygon of p on its own and returns the
    removal with the smallest criterion value (smallest index on ties).

    The criterion defaults to the training objective; `evaluator` replaces it,
    for instance with a held-out reconstruction error.
    """

    active = p.active()
    if not active:
        raise ValueError("greedy step needs at least one active polygon")

    if evaluator is None:

        def evaluator(candidate: PolygonSelector) -> float:
            return objective(params, S, candidate, Y, cx, gamma)

    def score(j: int) -> float:
        return evaluator(p.without(j))

    if threads > 1 and len(active) > 1:
        with futures.ThreadPoolExecutor(max_workers=threads) as pool:
            values = list(pool.map(score, active))
    else:
        values = [score(j) for j in active]

    best = int(np.argmin(values))
    logger.debug(
        "greedy step over %d candidates picked polygon %d (%.6g)",
        len(active),
        active[best],
        values[best],
    )

    return GreedyChoice(active[best], float(values[best]), tuple(zip(active, values)))


def _upper_powers(
    params: DictionaryParams, hp: HodgePair
) -> Tuple[np.ndarray, np.ndarray]:
    """
    The operator whose powers depend on p, and the coefficients of those
    powers (M x J).
    """
    if params.kind is FilterKind.JOINT:
        return hp.laplacian, params.blocks[:, 1:]
    return hp.l_up, params.h_up


def _gradient(
    params: DictionaryParams,
    S: np.ndarray,
    values: np.ndarray,
    Y: np.ndarray,
    cx: CellComplex2,
) -> np.ndarray:
    b2 = cx.b2.astype(float)
    l_up = (b2 * values[np.newaxis, :]) @ b2.T
    hp = HodgePair(cx.lower_laplacian(), 0.5 * (l_up + l_up.T))

    n = hp.n
    if not np.any(params.h[params.upper_mask()]):
        return np.zeros(values.size)

    dictionary = assemble(params, hp)
    residual = np.asarray(Y, dtype=float) - dictionary.matrix @ S

    op, up_coef = _upper_powers(params, hp)
    blocks = [S[i * n : (i + 1) * n] for i in range(params.M)]

    powers: List[np.ndarray] = [np.eye(n)]
    for _ in range(params.J - 1):
        powers.append(powers[-1] @ op)

    # sum_n sum_a A^(n-1-a) G_n A^a with G_n = sum_i h_up[i, n] S_i R^T
    total = np.zeros((n, n))
    for order in range(1, params.J + 1):
        weights = up_coef[:, order - 1]
        if not np.any(weights):
            continue
        g = sum(w * (s_i @ residual.T) for w, s_i in zip(weights, blocks))
        for a in range(order):
            total += powers[order - 1 - a] @ g @ powers[a]

    return -2.0 * np.sqrt(n) * np.einsum("ej,ef,fj->j", b2, total, b2)


def grad_p(
    params: DictionaryParams,
    S: np.ndarray,
    p: PolygonSelector,
    Y: np.ndarray,
    cx: CellComplex2,
) -> np.ndarray:
    """
    Gradient of ||Y - D(h, p) S||_F^2 with respect to every entry of p.

    d(L_up^n)/dp_j expands by the product rule into
    sum_a L_up^a b_j b_j^T L_up^(n-1-a), so the whole gradient reduces to
    diag(B2^T K B2) for one N x N matrix K.
    """

    if len(p) != cx.n_polygons:
        raise ValueError(
            f"polygon selector has {len(p)} entries, complex has {cx.n_polygons}"
        )
    return _gradient(params, S, p.values, Y, cx)


def prox_hard_box(z: np.ndarray, lam: float) -> np.ndarray:
    """
    Hard threshold at sqrt(2 lam) boxed into [0, 1]: entries from 1 upward
    map to 1, entries in [sqrt(2 lam), 1) are kept and the rest are zeroed.
    """

    if not 0 < lam < 0.5:
        raise ValueError(f"lambda must lie in (0, 0.5), got {lam}")

    z = np.asarray(z, dtype=float)
    threshold = np.sqrt(2.0 * lam)
    return np.where(z >= 1.0, 1.0, np.where(z >= threshold, z, 0.0))


def estimate_lipschitz(
    params: DictionaryParams,
    S: np.ndarray,
    p: PolygonSelector,
    Y: np.ndarray,
    cx: CellComplex2,
    iters: int = 20,
    delta: float = 1e-4,
    seed: int = 0,
) -> float:
    """
    Curvature of f along p at the current iterate: power iteration on
    Hessian-vector products taken as central differences of the gradient.
    """

    if cx.n_polygons == 0:
        return 0.0

    rng = np.random.default_rng(seed)
    v = rng.standard_normal(cx.n_polygons)
    v /= np.linalg.norm(v)
    estimate = 0.0

    for _ in range(iters):
        hv = (
            _gradient(params, S, p.values + delta * v, Y, cx)
            - _gradient(params, S, p.values - delta * v, Y, cx)
        ) / (2.0 * delta)
        estimate = float(np.linalg.norm(hv))
        if estimate == 0.0:
            break
        v = hv / estimate

    logger.debug("lipschitz estimate %.6g", estimate)
    return estimate


def rtdl_step(
    params: DictionaryParams,
    S: np.ndarray,
    p: PolygonSelector,
    Y: np.ndarray,
    cx: CellComplex2,
    mu: float,
    lam: float,
    prox: Prox = prox_hard_box,
    max_backtracks: int = MAX_BACKTRACKS,
) -> RtdlStep:
    """
    p <- prox(p - mu grad f, lam) with mu halved until the unregularised
    objective does not increase. When no step size gives descent p is kept.
    """

    if mu <= 0:
        raise ValueError(f"step size mu must be positive, got {mu}")

    before = objective(params, S, p, Y, cx)
    grad = grad_p(params, S, p, Y, cx)
    limit = before + DESCENT_SLACK * max(1.0, abs(before))

    step = mu
    for attempt in range(max_backtracks + 1):
        candidate = PolygonSelector(
            np.clip(prox(p.values - step * grad, lam), 0.0, 1.0), SelectorMode.RELAXED
        )
        after = objective(params, S, candidate, Y, cx)

        if after <= limit:
            return RtdlStep(candidate, step, before, after, attempt)

        step *= 0.5

    logger.warning(
        "no descent after %d backtracks from mu=%g; keeping p", max_backtracks, mu
    )
    return RtdlStep(
        PolygonSelector(p.values, SelectorMode.RELAXED),
        0.0,
        before,
        before,
        max_backtracks + 1,
    )
