"""
The dictionary-coefficient sub-problem as a strongly convex QP.

Scale convention: the QP models H(h) S_bar, where H = [H_1, ..., H_M] is the
dictionary without its sqrt(N) factor. Callers pass S_bar = sqrt(N) S so that
H(h) S_bar = D(h, p) S; the factor is absorbed into the unconstrained codes.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from cvxopt import matrix, solvers
from scipy import optimize

from hodge_tdl.complex import HodgePair
from hodge_tdl.constants import KKT_TOL
from hodge_tdl.dictionary import polynomial_basis
from hodge_tdl.spectral import (
    ConstraintMatrix,
    FilterKind,
    constraint_matrix,
    eigendecompose,
)

logger = logging.getLogger(__name__)

CVXOPT_OPTIONS = {
    "show_progress": False,
    "abstol": 1e-10,
    "reltol": 1e-10,
    "feastol": 1e-10,
    "maxiters": 200,
}


@dataclass(frozen=True, eq=False)
class QpProblem:
    """
    min h^T Q h - r^T h
    s.t. 0 <= (I_M kron F) h <= d, d - eps <= (1^T kron F) h <= d + eps,
    with coefficients outside `free` fixed at zero.
    """

    q: np.ndarray
    r: np.ndarray
    a_box: np.ndarray
    a_sum: np.ndarray
    d: float
    eps: float
    gamma: float
    y_norm_sq: float
    free: np.ndarray

    @property
    def n(self) -> int:
        return self.r.size

    def objective(self, h: np.ndarray) -> float:
        return float(h @ self.q @ h - self.r @ h)

    def fit_objective(self, h: np.ndarray) -> float:
        """||Y - H(h) S_bar||_F^2 + gamma ||h||^2."""
        return self.objective(h) + self.y_norm_sq

    def inequalities(self):
        """Stacked (G, b) with G h <= b."""
        g = np.vstack([self.a_box, -self.a_box, self.a_sum, -self.a_sum])
        m_box, m_sum = self.a_box.shape[0], self.a_sum.shape[0]
        b = np.concatenate(
            [
                np.full(m_box, self.d),
                np.zeros(m_box),
                np.full(m_sum, self.d + self.eps),
                np.full(m_sum, -(self.d - self.eps)),
            ]
        )
        return g, b

    def violation(self, h: np.ndarray) -> float:
        g, b = self.inequalities()
        excess = g @ h - b
        fixed = np.abs(h[~self.free])
        return float(max(excess.max(initial=0.0), fixed.max(initial=0.0)))


@dataclass(frozen=True, eq=False)
class QpSolution:
    h: np.ndarray
    status: str
    objective: float
    primal_violation: float
    stationarity: float
    complementarity: float

    @property
    def ok(self) -> bool:
        return self.status == "optimal"

    @property
    def feasible(self) -> bool:
        return self.status != "infeasible"


def build_v_vectors(
    s_bar: np.ndarray,
    hp: HodgePair,
    J: int,
    M: int,
    kind: FilterKind = FilterKind.SEPARATED,
) -> np.ndarray:
    """
    Returns V of shape (N, T, M * block) with V[e, t] . h = [H(h) S_bar]_{e,t}.

    Inside block i the entries follow the coefficient layout: the row of S_bar_i
    for the identity term, then the upper Laplacian powers applied to S_bar_i,
    then the lower ones.
    """

    n = hp.n
    s_bar = np.asarray(s_bar, dtype=float)
    if s_bar.ndim != 2 or s_bar.shape[0] != M * n:
        raise ValueError(f"codes have shape {s_bar.shape}, expected ({M * n}, T)")

    basis = polynomial_basis(hp, J, kind)
    block = len(basis)
    v = np.empty((n, s_bar.shape[1], M * block))

    for i in range(M):
        s_i = s_bar[i * n : (i + 1) * n]
        for k, op in enumerate(basis):
            v[:, :, i * block + k] = op @ s_i

    return v


def assemble_qp(
    Y: np.ndarray,
    s_bar: np.ndarray,
    hp: HodgePair,
    J: int,
    M: int,
    gamma: float,
    d: float,
    eps: float,
    kind: FilterKind = FilterKind.SEPARATED,
    constraint: Optional[ConstraintMatrix] = None,
    free: Optional[np.ndarray] = None,
) -> QpProblem:
    """
    Q = sum v v^T + gamma I and r = 2 sum Y_et v_et, so that
    h^T Q h - r^T h + ||Y||^2 = ||Y - H(h) S_bar||^2 + gamma ||h||^2.
    """

    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")

    Y = np.asarray(Y, dtype=float)
    v = build_v_vectors(s_bar, hp, J, M, kind)
    if Y.shape != v.shape[:2]:
        raise ValueError(f"signals have shape {Y.shape}, codes imply {v.shape[:2]}")

    v = v.reshape(-1, v.shape[2])
    y = Y.ravel()

    q = v.T @ v + gamma * np.eye(v.shape[1])
    q = 0.5 * (q + q.T)
    r = 2.0 * (v.T @ y)

    if constraint is None:
        constraint = constraint_matrix(eigendecompose(hp), J, kind)
    f = constraint.f

    if free is None:
        free = np.ones(v.shape[1], dtype=bool)

    return QpProblem(
        q=q,
        r=r,
        a_box=np.kron(np.eye(M), f),
        a_sum=np.kron(np.ones((1, M)), f),
        d=float(d),
        eps=float(eps),
        gamma=float(gamma),
        y_norm_sq=float(y @ y),
        free=np.asarray(free, dtype=bool),
    )


def _inert(q: np.ndarray, r: np.ndarray, g: np.ndarray) -> np.ndarray:
    """
    Coefficients that appear in neither the data term nor any constraint:
    their optimum is exactly zero.
    """
    off_diag = np.abs(q - np.diag(np.diag(q))).sum(axis=1)
    return (off_diag == 0) & (r == 0) & (np.abs(g).sum(axis=0) == 0)


def _slsqp(q, r, g, b, x0):
    result = optimize.minimize(
        lambda x: x @ q @ x - r @ x,
        x0,
        jac=lambda x: 2.0 * q @ x - r,
        method="SLSQP",
        constraints=[{"type": "ineq", "fun": lambda x: b - g @ x, "jac": lambda x: -g}],
        options={"ftol": 1e-14, "maxiter": 2000},
    )
    return result.x


def _multipliers(grad, g, b, slack, tol):
    """
    Non-negative multipliers on the rows active at x that best cancel the
    objective gradient, found by NNLS; the inactive rows get zero.
    """

    z = np.zeros(slack.size)
    active = slack <= tol * np.maximum(1.0, np.abs(b))
    if active.any():
        z[active], _ = optimize.nnls(g[active].T, -grad)
    return z


def _kkt(q, r, g, b, x, z, tol):
    """
    Stationarity and complementarity residuals of the QP scaled so that the
    largest diagonal entry of q is one.
    """

    grad = 2.0 * q @ x - r
    slack = b - g @ x
    if z is None:
        z = _multipliers(grad, g, b, slack, tol)

    stationarity = float(np.abs(grad + g.T @ z).max(initial=0.0))
    stationarity /= max(1.0, float(np.abs(r).max(initial=0.0)))
    complementarity = float(np.abs(z * slack).max(initial=0.0))
    return stationarity, complementarity


def solve_qp(
    problem: QpProblem, kkt_tol: float = KKT_TOL, h0: Optional[np.ndarray] = None
) -> QpSolution:
    """
    Solves the QP with the cvxopt interior point method, or with SLSQP when
    cvxopt fails, and checks the KKT conditions of the result.

    The returned status is "optimal" (feasible, stationary and complementary
    within kkt_tol), "inaccurate" (feasible but the KKT residuals exceed
    kkt_tol) or "infeasible".
    """

    g_full, b = problem.inequalities()
    keep = problem.free & ~_inert(problem.q, problem.r, g_full)

    q = problem.q[np.ix_(keep, keep)]
    r = problem.r[keep]
    g = g_full[:, keep]

    # rows without any free coefficient are constant constraints 0 <= b
    live = np.abs(g).sum(axis=1) > 0
    if np.any(b[~live] < -kkt_tol):
        return _finish(problem, np.zeros(problem.n), "infeasible", kkt_tol)
    g, b = g[live], b[live]

    h = np.zeros(problem.n)
    if not keep.any():
        return _finish(problem, h, "optimal", kkt_tol, 0.0, 0.0)

    # the objective scale does not move the minimiser; keep cvxopt well scaled
    scale = float(np.abs(np.diag(q)).max())
    q, r = q / scale, r / scale
    kwargs = {}
    if h0 is not None:
        kwargs["initvals"] = {"x": matrix(np.asarray(h0, dtype=float)[keep])}

    z = None
    try:
        sol = solvers.qp(
            matrix(2.0 * q),
            matrix(-r),
            matrix(g) if g.size else None,
            matrix(b) if g.size else None,
            options=CVXOPT_OPTIONS,
            **kwargs,
        )
        x = np.array(sol["x"]).ravel()
        status = sol["status"]
        if status == "optimal":
            z = np.array(sol["z"]).ravel() if g.size else np.zeros(0)
    except (ArithmeticError, ValueError) as err:
        logger.warning("cvxopt failed (%s); falling back to SLSQP", err)
        x0 = np.zeros(r.size) if h0 is None else np.asarray(h0, dtype=float)[keep]
        x = _slsqp(q, r, g, b, x0)
        status = "unknown"

    h[keep] = x

    if status == "primal infeasible":
        return _finish(problem, h, "infeasible", kkt_tol)

    stationarity, complementarity = _kkt(q, r, g, b, x, z, kkt_tol)
    if z is not None and max(stationarity, complementarity) > kkt_tol:
        # the solver's own multipliers may be loose; retry with recovered ones
        stationarity, complementarity = _kkt(q, r, g, b, x, None, kkt_tol)

    optimal = stationarity <= kkt_tol and complementarity <= kkt_tol * max(
        1.0, problem.d
    )
    return _finish(
        problem,
        h,
        "optimal" if optimal else "inaccurate",
        kkt_tol,
        stationarity,
        complementarity,
    )


def _finish(
    problem: QpProblem,
    h: np.ndarray,
    status: str,
    kkt_tol: float,
    stationarity: float = float("nan"),
    complementarity: float = float("nan"),
) -> QpSolution:
    violation = problem.violation(h)

    if status != "infeasible" and violation > kkt_tol * max(1.0, problem.d):
        status = "infeasible"

    if status == "infeasible":
        logger.warning(
            "QP infeasible for d=%g, eps=%g (violation %.3g)",
            problem.d,
            problem.eps,
            violation,
        )

    return QpSolution(
        h=h,
        status=status,
        objective=problem.objective(h),
        primal_violation=violation,
        stationarity=stationarity,
        complementarity=complementarity,
    )
