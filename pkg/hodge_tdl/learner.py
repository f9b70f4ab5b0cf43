"""
Learning drivers: greedy (GTDL) and relaxed (RTDL) topological dictionary
learning, the fixed-topology baselines and the choice of the spectral bounds
(d, eps).
"""

import logging
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, NamedTuple, Optional, Tuple

import numpy as np

from hodge_tdl import topo_opt
from hodge_tdl.complex import CellComplex2, PolygonSelector, SelectorMode, hodge_pair
from hodge_tdl.constants import (
    EARLY_EXIT_TOL,
    EPS_FLOOR,
    EPS_MARGIN,
    GAMMA,
    KKT_TOL,
    LAMBDA,
    REFIT_ROUNDS,
    THREADS,
    TOL_ZERO,
)
from hodge_tdl.dictionary import DictionaryParams, assemble
from hodge_tdl.exceptions import BoundsSelectionError, ConfigError, QpInfeasibleError
from hodge_tdl.qp import QpProblem, assemble_qp, solve_qp
from hodge_tdl.sparse_coding import SparseCode, sparse_code
from hodge_tdl.spectral import (
    FilterKind,
    HodgeSpectrum,
    constraint_matrix,
    eigendecompose,
)

logger = logging.getLogger(__name__)

# relative slack when comparing objectives of accepted steps
ACCEPT_SLACK = 1e-9
HOLDOUT_FRACTION = 0.2
FOURIER_D = 1.0


class Method(str, Enum):
    GTDL = "gtdl"
    RTDL = "rtdl"
    FOURIER = "fourier"
    EDGE = "edge"
    JOINT = "joint"
    SEPARATED = "separated"

    @classmethod
    def _missing_(cls, value):
        aliases = {
            "edge_laplacian": cls.EDGE,
            "joint_hodge": cls.JOINT,
            "separated_hodge": cls.SEPARATED,
        }
        return aliases.get(str(value).lower())

    @property
    def is_fixed(self) -> bool:
        return self not in (Method.GTDL, Method.RTDL)


class BoundsPolicy(str, Enum):
    FIXED = "fixed"
    TRUTH = "truth"
    FOURIER = "fourier"


class Criterion(str, Enum):
    OBJECTIVE = "objective"
    HOLDOUT = "holdout"


INT_FIELDS = (
    ("k0", "k0"),
    ("J", "J"),
    ("M", "M"),
    ("imax", "imax"),
    ("rtdl_iters", "rtdlIters"),
)


class TraceRow(NamedTuple):
    iteration: int
    objective: float
    phase: str


def _enum(enum_cls, value, name):
    try:
        return enum_cls(value)
    except ValueError as err:
        options = ", ".join(e.value for e in enum_cls)
        raise ConfigError(name, f"'{value}' is not one of {options}") from err


@dataclass(frozen=True)
class LearnConfig:
    method: Method = Method.GTDL
    k0: int = 5
    J: int = 2
    M: int = 3
    gamma: float = GAMMA
    lam: float = LAMBDA
    mu: Optional[float] = None
    imax: int = 10
    rtdl_iters: int = 50
    d: Optional[float] = None
    eps: Optional[float] = None
    bounds: BoundsPolicy = BoundsPolicy.FOURIER
    seed: int = 0
    tol_zero: float = TOL_ZERO
    kkt_tol: float = KKT_TOL
    res_tol: Optional[float] = None
    early_exit_tol: float = EARLY_EXIT_TOL
    criterion: Criterion = Criterion.OBJECTIVE
    freeze_upper: bool = False
    max_len: int = 3
    refit_rounds: int = REFIT_ROUNDS

    def __post_init__(self):
        object.__setattr__(self, "method", _enum(Method, self.method, "method"))
        object.__setattr__(self, "bounds", _enum(BoundsPolicy, self.bounds, "bounds"))
        object.__setattr__(
            self, "criterion", _enum(Criterion, self.criterion, "criterion")
        )

        for name, key in INT_FIELDS:
            value = getattr(self, name)
            if int(value) < 1:
                raise ConfigError(key, f"must be at least 1, got {value}")

        if self.gamma <= 0:
            raise ConfigError("gamma", f"must be positive, got {self.gamma}")

        if not 0 < self.lam < 0.5:
            raise ConfigError("lambda", f"must lie in (0, 0.5), got {self.lam}")

        if self.mu is not None and self.mu <= 0:
            raise ConfigError("mu", f"must be positive, got {self.mu}")

        if self.d is not None and self.d <= 0:
            raise ConfigError("d", f"must be positive, got {self.d}")

        if self.eps is not None:
            if self.eps <= 0:
                raise ConfigError("eps", f"must be positive, got {self.eps}")
            if self.d is not None and self.eps >= self.d:
                raise ConfigError("eps", f"must be smaller than d={self.d}")

        if self.bounds is BoundsPolicy.FIXED and (self.d is None or self.eps is None):
            raise ConfigError("bounds", "the fixed policy needs both d and eps")

        if self.max_len < 3:
            raise ConfigError("maxLen", f"must be at least 3, got {self.max_len}")

        if self.refit_rounds < 0:
            raise ConfigError(
                "refitRounds", f"must be at least 0, got {self.refit_rounds}"
            )

    @property
    def kind(self) -> FilterKind:
        return FilterKind.JOINT if self.method is Method.JOINT else FilterKind.SEPARATED

    @property
    def frozen_upper(self) -> bool:
        return self.freeze_upper or self.method is Method.EDGE


@dataclass(frozen=True, eq=False)
class LearnResult:
    method: Method
    params: Optional[DictionaryParams]
    dictionary: np.ndarray
    codes: np.ndarray
    p: PolygonSelector
    d: float
    eps: float
    trace: Tuple[TraceRow, ...]
    timings: Dict[str, float] = field(default_factory=dict)
    p_relaxed: Optional[np.ndarray] = None

    @property
    def final_objective(self) -> float:
        return self.trace[-1].objective if self.trace else float("nan")


def select_bounds(h_ref: DictionaryParams, spec: HodgeSpectrum) -> Tuple[float, float]:
    """
    The tightest (d, eps) under which the reference coefficients are feasible.

    Every kernel is evaluated at the eigenvalues of spec and at zero. d is the
    largest single kernel value, raised to the middle of the range of the
    kernel sums when that is higher; eps then covers the whole range of the
    sums with a 1% margin and lies in [1e-6 d, d).

    For non-negative coefficients the kernels grow with the eigenvalue, so
    bounds taken on the spectrum with every candidate polygon present hold
    for every subset of those polygons as well.
    """

    f = constraint_matrix(spec, h_ref.J, h_ref.kind).f
    kernels = h_ref.blocks @ f.T
    kernels = np.column_stack([kernels, h_ref.h_id])
    sums = kernels.sum(axis=0)

    top = float(kernels.max())
    if not top > 0:
        raise BoundsSelectionError(
            f"reference kernels peak at {top}; pass d and eps explicitly"
        )

    low, high = float(sums.min()), float(sums.max())
    d = max(top, 0.5 * (low + high))
    eps = (1.0 + EPS_MARGIN) * max(high - d, d - low)

    floor = EPS_FLOOR * d
    if eps < floor:
        logger.warning("eps=%g below the floor, clamped to %g", eps, floor)
        eps = floor
    eps = min(eps, d * (1.0 - EPS_FLOOR))

    return d, float(eps)


def fourier_bounds(cfg: LearnConfig) -> Tuple[float, float]:
    """
    The Fourier atoms have unit norm, so d = 1 and eps = d / 2 unless the
    config sets them.
    """
    d = cfg.d if cfg.d is not None else FOURIER_D
    eps = cfg.eps if cfg.eps is not None else 0.5 * d
    return d, eps


def resolve_bounds(
    cfg: LearnConfig,
    cx: CellComplex2,
    h_ref: Optional[DictionaryParams] = None,
) -> Tuple[float, float]:
    if cfg.d is not None and cfg.eps is not None:
        return float(cfg.d), float(cfg.eps)

    if cfg.bounds is BoundsPolicy.TRUTH:
        if h_ref is None:
            raise ConfigError("bounds", "the truth policy needs reference coefficients")
        spec = eigendecompose(
            hodge_pair(cx, PolygonSelector.ones(cx.n_polygons)), cfg.tol_zero
        )
        return select_bounds(h_ref, spec)

    return fourier_bounds(cfg)


class _Alternation:
    """
    Shared machinery of every learner: alternating QP and OMP updates at a
    fixed polygon selector, objective bookkeeping and the trace.
    """

    def __init__(
        self,
        Y: np.ndarray,
        cx: CellComplex2,
        cfg: LearnConfig,
        d: float,
        eps: float,
        threads: int,
    ):
        self.Y = np.asarray(Y, dtype=float)
        self.cx = cx
        self.cfg = cfg
        self.d = d
        self.eps = eps
        self.threads = threads
        self.kind = cfg.kind
        self.rng = np.random.default_rng(cfg.seed)
        self.trace: List[TraceRow] = []
        self.timings: Dict[str, float] = {}

        if self.Y.ndim != 2 or self.Y.shape[0] != cx.n_edges:
            raise ValueError(
                f"signals have shape {self.Y.shape}, complex has {cx.n_edges} edges"
            )

        template = DictionaryParams(
            cfg.M, cfg.J, np.zeros(cfg.M * self.kind.block_size(cfg.J)), self.kind
        )
        self.template = template
        self.free = (
            ~template.upper_mask()
            if cfg.frozen_upper
            else np.ones(template.h.size, dtype=bool)
        )

    def _tick(self, phase: str, start: float):
        self.timings[phase] = self.timings.get(phase, 0.0) + time.perf_counter() - start

    def record(self, iteration: int, value: float, phase: str):
        self.trace.append(TraceRow(iteration, float(value), phase))
        logger.debug("iteration %d %s: %.10g", iteration, phase, value)

    def objective(self, params: DictionaryParams, S: np.ndarray, p) -> float:
        return topo_opt.objective(params, S, p, self.Y, self.cx, self.cfg.gamma)

    def _solve(self, problem: QpProblem, h0: Optional[np.ndarray] = None):
        solution = solve_qp(problem, self.cfg.kkt_tol, h0=h0)
        if not solution.feasible:
            raise QpInfeasibleError(self.d, self.eps, solution.status)
        if not solution.ok:
            logger.warning(
                "QP solved with KKT residuals %.3g / %.3g above %g",
                solution.stationarity,
                solution.complementarity,
                self.cfg.kkt_tol,
            )
        return solution

    def initialize(self, p: PolygonSelector) -> Tuple[DictionaryParams, np.ndarray]:
        """
        Random coefficients projected onto the feasible set at p, then one
        sparse coding pass.
        """

        start = time.perf_counter()
        spec = eigendecompose(hodge_pair(self.cx, p), self.cfg.tol_zero)
        f = constraint_matrix(spec, self.cfg.J, self.kind).f

        h0 = self.rng.uniform(0.0, 1.0, self.template.h.size) * self.free
        n = h0.size
        projection = QpProblem(
            q=np.eye(n),
            r=2.0 * h0,
            a_box=np.kron(np.eye(self.cfg.M), f),
            a_sum=np.kron(np.ones((1, self.cfg.M)), f),
            d=self.d,
            eps=self.eps,
            gamma=0.0,
            y_norm_sq=0.0,
            free=self.free,
        )
        params = self.template.with_h(self._solve(projection).h)
        self._tick("qp", start)

        start = time.perf_counter()
        S = self.code(params, p).s
        self._tick("omp", start)

        return params, S

    def code(
        self,
        params: DictionaryParams,
        p: PolygonSelector,
        threads: Optional[int] = None,
    ) -> SparseCode:
        dictionary = assemble(params, hodge_pair(self.cx, p))
        return sparse_code(
            dictionary,
            self.Y,
            self.cfg.k0,
            self.cfg.res_tol,
            self.threads if threads is None else threads,
        )

    def _fit_h(self, params, S, p, spec) -> Tuple[DictionaryParams, float, bool]:
        """
        The QP minimiser over h at (S, p), its objective and whether the
        current h lies outside the feasible set at p.
        """

        hp = hodge_pair(self.cx, p)
        problem = assemble_qp(
            self.Y,
            np.sqrt(hp.n) * S,
            hp,
            self.cfg.J,
            self.cfg.M,
            self.cfg.gamma,
            self.d,
            self.eps,
            self.kind,
            constraint_matrix(spec, self.cfg.J, self.kind),
            self.free,
        )
        solution = self._solve(problem, params.h)

        candidate = params.with_h(solution.h)
        value = self.objective(candidate, S, p)
        moved = problem.violation(params.h) > self.cfg.kkt_tol * max(1.0, self.d)
        return candidate, value, moved

    def _accepts(self, value: float, current: float) -> bool:
        return value <= current + ACCEPT_SLACK * max(1.0, abs(current))

    def refit(
        self,
        params: DictionaryParams,
        S: np.ndarray,
        p: PolygonSelector,
        rounds: int,
    ) -> Tuple[DictionaryParams, np.ndarray, float]:
        """
        `rounds` QP and sparse coding updates at p under the usual acceptance
        rules, without touching the trace. Used to score a topology change.
        """

        spec = eigendecompose(hodge_pair(self.cx, p), self.cfg.tol_zero)
        current = self.objective(params, S, p)

        for _ in range(rounds):
            candidate, value, moved = self._fit_h(params, S, p, spec)
            if moved or self._accepts(value, current):
                params, current = candidate, value

            codes = self.code(params, p, threads=1).s
            value = self.objective(params, codes, p)
            if self._accepts(value, current):
                S, current = codes, value

        return params, S, current

    def qp_step(self, params, S, p, spec, current: float, iteration: int, phase="qp"):
        start = time.perf_counter()
        candidate, value, infeasible = self._fit_h(params, S, p, spec)
        self._tick("qp", start)

        if infeasible:
            # the constraint set moved with p; the previous h no longer counts
            if phase == "qp":
                phase = "project"
                logger.warning(
                    "coefficients infeasible after a topology change; re-projected"
                )
            self.record(iteration, value, phase)
            return candidate, value

        if self._accepts(value, current):
            self.record(iteration, value, phase)
            return candidate, value

        logger.debug("QP step rejected: %.10g > %.10g", value, current)
        self.record(iteration, current, phase)
        return params, current

    def omp_step(self, params, S, p, current: float, iteration: int, phase="omp"):
        start = time.perf_counter()
        candidate = self.code(params, p).s
        self._tick("omp", start)

        value = self.objective(params, candidate, p)
        if self._accepts(value, current):
            self.record(iteration, min(value, current), phase)
            return candidate, min(value, current)

        logger.debug("sparse coding rejected: %.10g > %.10g", value, current)
        self.record(iteration, current, phase)
        return S, current

    def inner(
        self,
        params: DictionaryParams,
        S: np.ndarray,
        p: PolygonSelector,
        iteration: int,
        rounds: int,
        current: Optional[float] = None,
    ) -> Tuple[DictionaryParams, np.ndarray, float]:
        spec = eigendecompose(hodge_pair(self.cx, p), self.cfg.tol_zero)
        if current is None:
            current = self.objective(params, S, p)

        for _ in range(rounds):
            before = current
            params, current = self.qp_step(params, S, p, spec, current, iteration)
            S, current = self.omp_step(params, S, p, current, iteration)

            if 0 <= before - current <= self.cfg.early_exit_tol * abs(before):
                logger.debug("inner loop converged at iteration %d", iteration)
                break

        return params, S, current

    def finish(
        self,
        params: Optional[DictionaryParams],
        S: np.ndarray,
        p: PolygonSelector,
        matrix: Optional[np.ndarray] = None,
        p_relaxed: Optional[np.ndarray] = None,
    ) -> LearnResult:
        if matrix is None:
            matrix = assemble(params, hodge_pair(self.cx, p)).matrix
        matrix.setflags(write=False)
        return LearnResult(
            method=self.cfg.method,
            params=params,
            dictionary=matrix,
            codes=S,
            p=p,
            d=self.d,
            eps=self.eps,
            trace=tuple(self.trace),
            timings=dict(self.timings),
            p_relaxed=p_relaxed,
        )


def _holdout_split(Y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    T = Y.shape[1]
    n_hold = max(1, int(round(HOLDOUT_FRACTION * T)))
    if n_hold >= T:
        raise ConfigError("criterion", f"need at least 2 signals for holdout, got {T}")
    return Y[:, : T - n_hold], Y[:, T - n_hold :]


def gtdl(
    Y: np.ndarray,
    cx: CellComplex2,
    cfg: LearnConfig,
    h_ref: Optional[DictionaryParams] = None,
    Y_holdout: Optional[np.ndarray] = None,
    threads: int = THREADS,
) -> LearnResult:
    """
    Greedy topological dictionary learning.

    Starts from every candidate polygon, alternates QP and sparse coding for
    imax rounds, then removes the single polygon whose removal lowers the
    criterion the most. Each candidate removal is scored after refit_rounds
    QP and sparse coding updates at the reduced topology; with zero rounds it
    is scored at the current (h, S). Removal continues while it does not
    increase the criterion and polygons remain.
    """

    Y = np.asarray(Y, dtype=float)
    if cfg.criterion is Criterion.HOLDOUT and Y_holdout is None:
        Y, Y_holdout = _holdout_split(Y)

    d, eps = resolve_bounds(cfg, cx, h_ref)
    run = _Alternation(Y, cx, cfg, d, eps, threads)
    started = time.perf_counter()

    p = PolygonSelector.ones(cx.n_polygons)
    params, S = run.initialize(p)
    current = run.objective(params, S, p)
    run.record(0, current, "init")

    def fitted(candidate: PolygonSelector):
        if cfg.refit_rounds:
            return run.refit(params, S, candidate, cfg.refit_rounds)
        return params, S, run.objective(params, S, candidate)

    def holdout_error(fit: DictionaryParams, candidate: PolygonSelector) -> float:
        dictionary = assemble(fit, hodge_pair(cx, candidate))
        code = sparse_code(dictionary, Y_holdout, cfg.k0, cfg.res_tol, threads=1)
        return float(np.sum((Y_holdout - dictionary.matrix @ code.s) ** 2))

    def score(candidate: PolygonSelector) -> float:
        fit, _, value = fitted(candidate)
        if cfg.criterion is Criterion.HOLDOUT:
            return holdout_error(fit, candidate)
        return value

    outer = 0
    while True:
        params, S, current = run.inner(params, S, p, outer, cfg.imax, current)

        if not p.active():
            break

        start = time.perf_counter()
        if cfg.criterion is Criterion.HOLDOUT:
            err = holdout_error(params, p)
        else:
            err = current
        choice = topo_opt.greedy_step(params, S, p, Y, cx, cfg.gamma, score, threads)
        run._tick("topology", start)

        if choice.value > err:
            logger.info(
                "stopping: removing polygon %d would raise the error to %.6g",
                choice.polygon,
                choice.value,
            )
            break

        p = p.without(choice.polygon)
        outer += 1
        params, S, current = fitted(p)
        run.record(outer, current, "topology")
        logger.info(
            "removed polygon %d, %d remain (objective %.6g)",
            choice.polygon,
            len(p.active()),
            current,
        )

    run.timings["total"] = time.perf_counter() - started
    return run.finish(params, S, p)


def rtdl(
    Y: np.ndarray,
    cx: CellComplex2,
    cfg: LearnConfig,
    h_ref: Optional[DictionaryParams] = None,
    threads: int = THREADS,
) -> LearnResult:
    """
    Relaxed topological dictionary learning.

    Every iteration runs one QP, one sparse coding pass and one proximal
    gradient step on the relaxed selector. The final selector is binarised at
    0.5 and (h, S) are re-fitted once at the binary topology.
    """

    d, eps = resolve_bounds(cfg, cx, h_ref)
    run = _Alternation(Y, cx, cfg, d, eps, threads)
    started = time.perf_counter()

    p = PolygonSelector.ones(cx.n_polygons, SelectorMode.RELAXED)
    params, S = run.initialize(p)
    current = run.objective(params, S, p)
    run.record(0, current, "init")

    mu = cfg.mu
    refresh = mu is None

    for t in range(cfg.rtdl_iters):
        params, S, current = run.inner(params, S, p, t, 1, current)

        start = time.perf_counter()
        if refresh:
            lipschitz = topo_opt.estimate_lipschitz(
                params, S, p, run.Y, cx, seed=cfg.seed + t
            )
            mu = 1.0 / lipschitz if lipschitz > 0 else 1.0
            refresh = False

        step = topo_opt.rtdl_step(params, S, p, run.Y, cx, mu, cfg.lam)
        run._tick("topology", start)

        if cfg.mu is None and step.mu_used < mu:
            # the curvature estimate was too optimistic
            refresh = True

        p = step.p_next
        current = run.objective(params, S, p)
        run.record(t + 1, current, "topology")
        logger.info(
            "rtdl iteration %d: %d active polygons, objective %.6g",
            t + 1,
            len(p.active()),
            current,
        )

    p_relaxed = p.values.copy()
    p = p.binarize()

    spec = eigendecompose(hodge_pair(cx, p), cfg.tol_zero)
    iteration = cfg.rtdl_iters + 1
    current = run.objective(params, S, p)
    params, current = run.qp_step(params, S, p, spec, current, iteration, "refit")
    S, current = run.omp_step(params, S, p, current, iteration, "refit")

    run.timings["total"] = time.perf_counter() - started
    return run.finish(params, S, p, p_relaxed=p_relaxed)


def learn_fixed(
    Y: np.ndarray,
    cx: CellComplex2,
    cfg: LearnConfig,
    h_ref: Optional[DictionaryParams] = None,
    threads: int = THREADS,
) -> LearnResult:
    """
    Baselines on the topology with every candidate polygon present.

    fourier codes the signals over the eigenvectors of the Hodge Laplacian;
    edge learns separated filters with the upper coefficients held at zero;
    joint learns polynomials of the full Laplacian; separated learns the
    separated filters without touching the topology.
    """

    if not cfg.method.is_fixed:
        raise ConfigError("method", f"'{cfg.method.value}' is not a fixed baseline")

    Y = np.asarray(Y, dtype=float)
    p = PolygonSelector.ones(cx.n_polygons)

    if cfg.method is Method.FOURIER:
        started = time.perf_counter()
        spec = eigendecompose(hodge_pair(cx, p), cfg.tol_zero)
        code = sparse_code(spec.eigenvectors, Y, cfg.k0, cfg.res_tol, threads)
        residual = Y - spec.eigenvectors @ code.s
        d, eps = fourier_bounds(cfg)
        matrix = spec.eigenvectors.copy()
        matrix.setflags(write=False)
        elapsed = time.perf_counter() - started
        return LearnResult(
            method=cfg.method,
            params=None,
            dictionary=matrix,
            codes=code.s,
            p=p,
            d=d,
            eps=eps,
            trace=(TraceRow(0, float(np.sum(residual**2)), "omp"),),
            timings={"omp": elapsed, "total": elapsed},
        )

    d, eps = resolve_bounds(cfg, cx, h_ref)
    run = _Alternation(Y, cx, cfg, d, eps, threads)
    started = time.perf_counter()

    params, S = run.initialize(p)
    current = run.objective(params, S, p)
    run.record(0, current, "init")

    spec = eigendecompose(hodge_pair(cx, p), cfg.tol_zero)
    for iteration in range(1, cfg.imax + 1):
        before = current
        params, current = run.qp_step(params, S, p, spec, current, iteration)
        S, current = run.omp_step(params, S, p, current, iteration)
        if 0 <= before - current <= cfg.early_exit_tol * abs(before):
            break

    run.timings["total"] = time.perf_counter() - started
    return run.finish(params, S, p)


def learn(
    Y: np.ndarray,
    cx: CellComplex2,
    cfg: LearnConfig,
    h_ref: Optional[DictionaryParams] = None,
    threads: int = THREADS,
) -> LearnResult:
    """
    Dispatches on cfg.method.
    """

    logger.info("learning with %s on %d signals", cfg.method.value, np.shape(Y)[1])
    if cfg.method is Method.GTDL:
        return gtdl(Y, cx, cfg, h_ref, threads=threads)
    if cfg.method is Method.RTDL:
        return rtdl(Y, cx, cfg, h_ref, threads=threads)
    return learn_fixed(Y, cx, cfg, h_ref, threads=threads)


def dictionary_matrix(
    method: Method,
    params: Optional[DictionaryParams],
    p: PolygonSelector,
    cx: CellComplex2,
    tol_zero: float = TOL_ZERO,
) -> np.ndarray:
    """
    Rebuilds the dictionary of a stored model on its complex.
    """

    hp = hodge_pair(cx, p)
    if Method(method) is Method.FOURIER:
        return eigendecompose(hp, tol_zero).eigenvectors
    if params is None:
        raise ValueError(f"method {Method(method).value} needs dictionary coefficients")
    return assemble(params, hp).matrix


def reconstruct(
    result: LearnResult, Y: np.ndarray, k0: int, threads: int = THREADS
) -> Tuple[np.ndarray, SparseCode]:
    """
    Codes new signals over a learned dictionary with k0 atoms each.
    """

    code = sparse_code(result.dictionary, Y, k0, threads=threads)
    return result.dictionary @ code.s, code
