"""
Statistical downtilt beamforming (SDB)

Chooses one weight vector w, shared by every port, that maximizes the
minimum over users of the SIR surrogate

    SIR_k(w) = (tr R_k(w))^2 / sum_{j != k} tr(R_k(w) R_j(w)),
    R_k(w)   = beta_k (I_N (x) w)^H R^E_k (I_N (x) w).

With the lifted variable W = w w^H the square root of SIR_k is the ratio of
tr(A_k W) (linear) and a Euclidean norm of a linear map of W (convex), so
each Dinkelbach subproblem over {W >= 0, tr W = 1} is a conic program. A
rank-1 vector is recovered from the relaxed solution by Gaussian
randomization, and the best candidates are then polished by a local
SLSQP search over unit-norm vectors.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import cvxpy as cp
import numpy as np
from scipy.optimize import minimize

from app.config import settings
from app.models.antenna import ArrayGeometry
from app.models.optimization import SdbOptions
from app.core.beamforming import phase_fixed
from app.core.correlation import CovarianceMatrix, as_matrix
from app.core.errors import (
    ConvergenceError,
    DimensionMismatchError,
    EmptyInputError,
    InfeasibleLeakageError,
    InvalidParameterError,
    NotPsdError,
    SolverError,
)
from app.core.txru import TiltWeights

logger = logging.getLogger(__name__)

Covariance = Union[CovarianceMatrix, np.ndarray]

_SOLVED = (cp.OPTIMAL, cp.OPTIMAL_INACCURATE)
_INFEASIBLE = (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE)


@dataclass(frozen=True)
class DinkelbachStep:
    level: float   # lambda, on the square-root SIR scale
    value: float   # F(lambda)


@dataclass(frozen=True)
class SdbResult:
    """Optimized weights with the relaxed and achieved objectives"""
    weights: TiltWeights
    objective: float
    relaxed_objective: float
    iterations: int
    converged: bool
    trace: Tuple[DinkelbachStep, ...] = ()
    relaxed_matrix: Optional[np.ndarray] = field(default=None, repr=False, compare=False)


class _LiftedProblem:
    """
    Precomputed data of one cell

    Covariances are scaled by a common factor so the conic problems are
    well conditioned; SIR values do not depend on that factor.
    """

    def __init__(
        self,
        covariances: Sequence[Covariance],
        geometry: ArrayGeometry,
        gains: Optional[Sequence[float]] = None,
        leakage: Sequence[Covariance] = (),
        leakage_gains: Optional[Sequence[float]] = None,
        leakage_caps: Optional[Sequence[float]] = None,
    ):
        if len(covariances) == 0:
            raise EmptyInputError("the optimizer needs at least one user covariance")
        self.m = geometry.m_per_port
        self.n = geometry.n_ports
        size = self.m * self.n

        mats = np.stack([as_matrix(r) for r in covariances])
        if mats.shape[1:] != (size, size):
            raise DimensionMismatchError(
                f"element covariances must be {size} x {size}, got {mats.shape[1:]}"
            )
        beta = np.ones(len(mats)) if gains is None else np.asarray(gains, dtype=float)
        if beta.shape != (len(mats),) or np.any(beta <= 0):
            raise InvalidParameterError("need one positive large-scale gain per user")

        weighted = mats * beta[:, None, None]
        self.scale = float(np.max(np.real(np.trace(weighted, axis1=1, axis2=2))))
        if self.scale <= 0:
            raise InvalidParameterError("user covariances carry no power")
        self.r4 = (weighted / self.scale).reshape(len(mats), self.n, self.m, self.n, self.m)
        self.a = np.einsum("ksasb->kab", self.r4)
        self.k = len(mats)
        self.factors = [self._denominator_factor(k) for k in range(self.k)] if self.k > 1 else []

        self.leak_a = np.zeros((0, self.m, self.m), dtype=complex)
        self.leak_caps = np.zeros(0)
        if len(leakage):
            leak = np.stack([as_matrix(r) for r in leakage])
            lg = np.ones(len(leak)) if leakage_gains is None else np.asarray(leakage_gains, dtype=float)
            caps = np.full(len(leak), np.inf) if leakage_caps is None else np.asarray(leakage_caps, dtype=float)
            if caps.shape != (len(leak),) or lg.shape != (len(leak),):
                raise DimensionMismatchError("need one gain and one cap per leakage link")
            if np.any(caps <= 0):
                raise InvalidParameterError("leakage caps must be positive")
            active = np.isfinite(caps)
            leak4 = (leak * lg[:, None, None] / self.scale).reshape(len(leak), self.n, self.m, self.n, self.m)
            self.leak_a = np.einsum("ksasb->kab", leak4)[active]
            self.leak_caps = caps[active] / self.scale

    def _denominator_factor(self, k: int) -> np.ndarray:
        """
        L with ||L vec(W)||^2 = sum_{j != k} tr(R_k(W) R_j(W)), vec column-major
        """
        m = self.m
        gram = np.zeros((m * m, m * m), dtype=complex)
        for j in range(self.k):
            if j == k:
                continue
            g = np.einsum("sptP,sqtQ->pqPQ", self.r4[k], self.r4[j].conj())
            gram += g.transpose(1, 0, 3, 2).reshape(m * m, m * m)
        eigenvalues, vectors = np.linalg.eigh(0.5 * (gram + gram.conj().T))
        tol = settings.PSD_CLAMP_TOL * max(1.0, float(eigenvalues[-1]))
        if eigenvalues[0] < -tol:
            raise NotPsdError(float(eigenvalues[0]), tol)
        keep = eigenvalues > tol
        return np.sqrt(eigenvalues[keep])[:, None] * vectors[:, keep].conj().T

    def numerators(self, w_hat: np.ndarray) -> np.ndarray:
        return np.real(np.einsum("kab,ba->k", self.a, w_hat))

    def denominators(self, w_hat: np.ndarray) -> np.ndarray:
        vec = w_hat.reshape(-1, order="F")
        return np.array([np.linalg.norm(f @ vec) for f in self.factors])

    def ratios(self, w_hat: np.ndarray) -> np.ndarray:
        f, g = self.numerators(w_hat), self.denominators(w_hat)
        with np.errstate(divide="ignore"):
            return np.where(g > 0, f / np.where(g > 0, g, 1.0), np.inf)

    def user_values(self, candidates: np.ndarray) -> np.ndarray:
        """Per-user SIR_k of each row of candidates (C x K); signal power when K = 1"""
        rbs = np.einsum("ci,kaibj,cj->ckab", candidates.conj(), self.r4, candidates)
        traces = np.real(np.einsum("ckaa->ck", rbs))
        if self.k == 1:
            return traces * self.scale
        cross = np.real(np.einsum("ckab,cjba->ckj", rbs, rbs))
        idx = np.arange(self.k)
        cross[:, idx, idx] = 0.0
        interference = cross.sum(axis=2)
        with np.errstate(divide="ignore"):
            return np.where(interference > 0, traces ** 2 / np.where(interference > 0, interference, 1.0), np.inf)

    def rank1_objective(self, candidates: np.ndarray) -> np.ndarray:
        """min_k SIR_k for each row of candidates (C x M)"""
        return self.user_values(candidates).min(axis=1)

    def leakage_excess(self, candidates: np.ndarray) -> np.ndarray:
        """Largest leakage-to-cap ratio of each candidate (<= 1 is feasible)"""
        if self.leak_caps.size == 0:
            return np.zeros(candidates.shape[0])
        leakage = np.real(np.einsum("ci,lij,cj->cl", candidates.conj(), self.leak_a, candidates))
        return (leakage / self.leak_caps[None, :]).max(axis=1)


def _solve(problem: cp.Problem, opts: SdbOptions) -> str:
    """Solve with the configured solver, falling back once; returns the status"""
    status = "not solved"
    for solver in dict.fromkeys([opts.solver, opts.fallback_solver]):
        try:
            problem.solve(solver=solver)
        except cp.error.SolverError as exc:
            logger.debug(f"solver {solver} failed: {exc}")
            continue
        status = problem.status
        if status in _SOLVED or status in _INFEASIBLE:
            return status
        logger.debug(f"solver {solver} returned status {status}")
    raise SolverError(f"relaxation could not be solved (last status: {status})")


def _clean(w_hat: np.ndarray) -> np.ndarray:
    """Hermitian PSD unit-trace projection of a solver output"""
    w_hat = 0.5 * (w_hat + w_hat.conj().T)
    eigenvalues, vectors = np.linalg.eigh(w_hat)
    w_hat = (vectors * np.clip(eigenvalues, 0.0, None)) @ vectors.conj().T
    return w_hat / np.real(np.trace(w_hat))


_FEASIBLE_EXCESS = 1.0 + 1e-6
# Caps SIR values in the local search when a user sees no interference
_SIR_CEILING = 1e12


def _refine(start: np.ndarray, lifted: _LiftedProblem) -> Optional[np.ndarray]:
    """
    Local max-min search from a unit-norm start vector

    Epigraph form over x = [Re w, Im w]: maximize t subject to
    SIR_k(w / |w|) >= t for every user and the leakage caps. Values are
    divided by the start objective so t starts at 1. Returns None when the
    search fails.
    """
    m = lifted.m

    def unit(x: np.ndarray) -> np.ndarray:
        w = x[:m] + 1j * x[m:]
        return w / max(np.linalg.norm(w), 1e-300)

    base = float(lifted.rank1_objective(start[None, :])[0])
    if not np.isfinite(base) or base <= 0:
        return None

    def values(z: np.ndarray) -> np.ndarray:
        sir = lifted.user_values(unit(z[:-1])[None, :])[0]
        return np.minimum(sir, _SIR_CEILING) / base - z[-1]

    constraints = [{"type": "ineq", "fun": values}]
    if lifted.leak_caps.size:
        constraints.append({
            "type": "ineq",
            "fun": lambda z: _FEASIBLE_EXCESS - lifted.leakage_excess(unit(z[:-1])[None, :]),
        })

    x0 = np.concatenate([start.real, start.imag, [1.0]])
    solution = minimize(
        lambda z: -z[-1],
        x0,
        jac=lambda z: np.concatenate([np.zeros(2 * m), [-1.0]]),
        method="SLSQP",
        constraints=constraints,
        options={"maxiter": 200, "ftol": 1e-10},
    )
    if not np.all(np.isfinite(solution.x)):
        return None
    return unit(solution.x[:-1])


def _randomize(w_hat: np.ndarray, lifted: _LiftedProblem, opts: SdbOptions) -> Tuple[np.ndarray, float]:
    """
    Best unit-norm vector among the principal eigenvector and Gaussian
    candidates xi = U Lambda^(1/2) z drawn from a fixed-seed stream, after
    local refinement of the opts.refine_starts best feasible candidates
    """
    eigenvalues, vectors = np.linalg.eigh(w_hat)
    root = vectors * np.sqrt(np.clip(eigenvalues, 0.0, None))[None, :]

    rng = np.random.default_rng(opts.seed)
    shape = (lifted.m, opts.randomizations)
    z = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
    candidates = np.column_stack([vectors[:, -1], root @ z]).T
    norms = np.linalg.norm(candidates, axis=1)
    candidates = candidates[norms > 0] / norms[norms > 0, None]

    scores = lifted.rank1_objective(candidates)
    excess = lifted.leakage_excess(candidates)
    feasible = excess <= _FEASIBLE_EXCESS
    if not np.any(feasible):
        best = int(np.argmin(excess))
        logger.warning(f"no randomized candidate meets the leakage caps; best excess ratio {excess[best]:.4f}")
        return phase_fixed(candidates[best]), float(scores[best])

    ranked = np.argsort(np.where(feasible, scores, -np.inf))[::-1]
    best_w, best_score = candidates[ranked[0]], float(scores[ranked[0]])
    for idx in ranked[:opts.refine_starts]:
        if not feasible[idx]:
            break
        refined = _refine(candidates[idx], lifted)
        if refined is None:
            continue
        score = float(lifted.rank1_objective(refined[None, :])[0])
        if score > best_score and lifted.leakage_excess(refined[None, :])[0] <= _FEASIBLE_EXCESS:
            best_w, best_score = refined, score
    logger.debug(f"rank-1 recovery: randomized {float(scores[ranked[0]]):.6g}, refined {best_score:.6g}")
    return phase_fixed(best_w), best_score


def _dinkelbach(lifted: _LiftedProblem, opts: SdbOptions, label: str) -> SdbResult:
    m = lifted.m
    w_var = cp.Variable((m, m), hermitian=True)
    t = cp.Variable()
    level = cp.Parameter(nonneg=True)

    vec = cp.vec(w_var)
    constraints = [w_var >> 0, cp.real(cp.trace(w_var)) == 1]
    for a_k, factor in zip(lifted.a, lifted.factors or [None] * lifted.k):
        numerator = cp.real(cp.trace(a_k @ w_var))
        if factor is None or factor.shape[0] == 0:
            constraints.append(numerator >= t)
        else:
            constraints.append(numerator - level * cp.norm(factor @ vec, 2) >= t)
    for a_x, cap in zip(lifted.leak_a, lifted.leak_caps):
        constraints.append(cp.real(cp.trace(a_x @ w_var)) <= cap)
    problem = cp.Problem(cp.Maximize(t), constraints)

    lam = 0.0
    steps: List[DinkelbachStep] = []
    w_hat = np.eye(m, dtype=complex) / m
    converged = False

    for iteration in range(1, opts.max_iterations + 1):
        level.value = lam
        if _solve(problem, opts) in _INFEASIBLE:
            raise InfeasibleLeakageError([])
        w_hat = _clean(w_var.value)

        if lifted.k == 1:
            steps.append(DinkelbachStep(0.0, float(lifted.numerators(w_hat)[0])))
            converged = True
            break

        value = float(np.min(lifted.numerators(w_hat) - lam * lifted.denominators(w_hat)))
        steps.append(DinkelbachStep(lam, value))
        logger.debug(f"{label}: iteration {iteration}, lambda {lam:.6g}, F {value:.3e}")

        ratio = float(np.min(lifted.ratios(w_hat)))
        if iteration > 1 and value < opts.tolerance:
            lam = max(lam, ratio)
            converged = True
            break
        if not np.isfinite(ratio):
            lam = ratio
            converged = True
            break
        lam = ratio

    w, achieved = _randomize(w_hat, lifted, opts)
    relaxed = float(steps[-1].value * lifted.scale) if lifted.k == 1 else lam ** 2
    weights = TiltWeights.normalized(w)

    if not converged:
        raise ConvergenceError(
            f"{label}: Dinkelbach did not reach |F| < {opts.tolerance:g} in {opts.max_iterations} iterations",
            best_weights=weights.weights,
            best_objective=achieved,
        )

    logger.debug(f"{label}: relaxed {relaxed:.6g}, achieved {achieved:.6g} after {len(steps)} iterations")
    return SdbResult(
        weights=weights,
        objective=achieved,
        relaxed_objective=relaxed,
        iterations=len(steps),
        converged=converged,
        trace=tuple(steps),
        relaxed_matrix=w_hat,
    )


def weights_sdb(
    element_covariances: Sequence[Covariance],
    geometry: ArrayGeometry,
    opts: Optional[SdbOptions] = None,
    *,
    gains: Optional[Sequence[float]] = None,
) -> SdbResult:
    """
    Max-min SIR weight vector common to all ports

    With a single user the objective is the radiated power tr(A W) and the
    result coincides with the principal eigenvector of sum_s R^E_ss.

    Raises:
        SolverError: the relaxation failed with every solver tried
        ConvergenceError: Dinkelbach hit the iteration cap (carries the incumbent)
    """
    opts = opts or SdbOptions()
    lifted = _LiftedProblem(element_covariances, geometry, gains)
    return _dinkelbach(lifted, opts, "SDB")


def surrogate_min_sir(
    w: np.ndarray,
    element_covariances: Sequence[Covariance],
    geometry: ArrayGeometry,
    gains: Optional[Sequence[float]] = None,
) -> Union[float, np.ndarray]:
    """min_k SIR_k of a common weight vector, or of each row of a C x M stack"""
    lifted = _LiftedProblem(element_covariances, geometry, gains)
    w = np.asarray(w, dtype=complex)
    values = lifted.rank1_objective(np.atleast_2d(w))
    return float(values[0]) if w.ndim == 1 else values


def _per_link(values, count: int) -> Optional[np.ndarray]:
    if values is None:
        return None
    array = np.asarray(values, dtype=float)
    return np.full(count, float(array)) if array.ndim == 0 else array


def weights_sdb_multicell(
    intra_covariances: Sequence[Sequence[Covariance]],
    cross_covariances: Sequence[Sequence[Covariance]],
    geometry: ArrayGeometry,
    leakage_caps: Optional[Sequence[Union[float, Sequence[float]]]] = None,
    opts: Optional[SdbOptions] = None,
    *,
    intra_gains: Optional[Sequence[Sequence[float]]] = None,
    cross_gains: Optional[Sequence[Sequence[float]]] = None,
) -> List[SdbResult]:
    """
    Per-cell SDB with interference-leakage constraints

    Cell i maximizes the minimum intra-cell SIR of its own users subject to
    tr(R_BS(W_i)) <= cap for the covariance from BS i to every out-of-cell
    user. Cells are solved independently; an infinite cap drops the
    constraint.

    Raises:
        InfeasibleLeakageError: lists every cell whose caps cannot be met
    """
    if len(intra_covariances) < 2:
        raise EmptyInputError("multi-cell optimization needs at least two cells")
    if len(cross_covariances) != len(intra_covariances):
        raise DimensionMismatchError("need cross-link covariances for every cell")

    opts = opts or SdbOptions()
    results: List[SdbResult] = []
    infeasible: List[int] = []
    for cell, (own, cross) in enumerate(zip(intra_covariances, cross_covariances)):
        caps = None if leakage_caps is None else _per_link(leakage_caps[cell], len(cross))
        lifted = _LiftedProblem(
            own,
            geometry,
            gains=None if intra_gains is None else intra_gains[cell],
            leakage=cross,
            leakage_gains=None if cross_gains is None else cross_gains[cell],
            leakage_caps=caps,
        )
        try:
            results.append(_dinkelbach(lifted, opts, f"SDB cell {cell}"))
        except InfeasibleLeakageError:
            infeasible.append(cell)

    if infeasible:
        raise InfeasibleLeakageError(infeasible)
    return results
