"""
Small dense semidefinite programs.

A problem is stated in the standard form

    minimize    c^T x
    subject to  F0_b + sum_k x_k F_b,k  >= 0      for every block b
                A x = b

over real variables x.  Blocks may be complex Hermitian; they are embedded
as real symmetric blocks of doubled dimension and handed to the cvxopt
primal-dual interior-point solver (Nesterov-Todd scaling).

SdpBuilder is a thin modelling layer producing SdpProblem instances from
affine matrix expressions in Hermitian matrix variables.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg
from cvxopt import matrix, solvers

from system.core import ITER_MAX, SDP_TOL, STRUCT_TOL, SdpStatus
from system.errors import DimensionError, NotHermitianError, SdpError

logger = logging.getLogger("sdp")

SOLVER_OPTIONS = {
    "show_progress": False,
    "abstol": 1e-9,
    "reltol": 1e-8,
    "feastol": 1e-9,
    "maxiters": ITER_MAX,
}

BLOCK_PSD_TOL = 1e-8
RANK_TOL = 1e-10


@dataclass
class SdpProblem:
    """minimize c^T x s.t. F0 + sum x_k F_k >= 0 per block, A x = b"""
    objective: np.ndarray
    blocks: List[Tuple[np.ndarray, np.ndarray]]
    eq_matrix: Optional[np.ndarray] = None
    eq_rhs: Optional[np.ndarray] = None

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float).reshape(-1)
        n = self.objective.size
        if n == 0:
            raise DimensionError("SDP needs at least one variable")
        if not self.blocks:
            raise DimensionError("SDP needs at least one PSD block")
        checked = []
        for index, (f0, fk) in enumerate(self.blocks):
            f0 = np.asarray(f0)
            fk = np.asarray(fk)
            if fk.shape != (n,) + f0.shape or f0.shape[0] != f0.shape[1]:
                raise DimensionError(f"Block {index}: expected coefficients of shape {(n,) + f0.shape}, got {fk.shape}")
            scale = max(1.0, float(np.max(np.abs(fk))) if fk.size else 1.0, float(np.max(np.abs(f0))))
            residual = max(float(np.max(np.abs(f0 - f0.conj().T))),
                           float(np.max(np.abs(fk - np.conj(np.swapaxes(fk, 1, 2))))) if fk.size else 0.0)
            if residual > STRUCT_TOL * scale:
                raise NotHermitianError(f"Block {index} is not Hermitian", residual)
            checked.append((f0, fk))
        self.blocks = checked
        if self.eq_matrix is not None:
            self.eq_matrix = np.atleast_2d(np.asarray(self.eq_matrix, dtype=float))
            self.eq_rhs = np.asarray(self.eq_rhs, dtype=float).reshape(-1)
            if self.eq_matrix.shape != (self.eq_rhs.size, n):
                raise DimensionError(f"Equality matrix shape {self.eq_matrix.shape} does not match {n} variables")

    @property
    def n_vars(self) -> int:
        return self.objective.size

    def block_value(self, index: int, x: np.ndarray) -> np.ndarray:
        f0, fk = self.blocks[index]
        return f0 + np.tensordot(x, fk, axes=1)

    def scaled(self, factor: float) -> "SdpProblem":
        """Same feasible set with the objective multiplied by factor"""
        return SdpProblem(self.objective * factor, self.blocks, self.eq_matrix, self.eq_rhs)


@dataclass
class SdpSolution:
    """Solver outcome; only OPTIMAL values are certified"""
    x: np.ndarray
    primal_value: float
    dual_value: float
    status: SdpStatus
    iterations: int = 0
    dual_blocks: List[np.ndarray] = field(default_factory=list)
    dual_ray: Optional[List[np.ndarray]] = None
    message: str = ""

    @property
    def certified(self) -> bool:
        return self.status == SdpStatus.OPTIMAL

    @property
    def gap(self) -> float:
        return abs(self.primal_value - self.dual_value)


def _complex_embedding(a: np.ndarray) -> np.ndarray:
    """[[Re, -Im], [Im, Re]]"""
    a = np.asarray(a, dtype=complex)
    return np.block([[a.real, -a.imag], [a.imag, a.real]])


def _colmajor(a: np.ndarray) -> np.ndarray:
    return a.reshape(-1, order="F")


def _real_blocks(problem: SdpProblem) -> Tuple[List[np.ndarray], List[np.ndarray]]:
    hs, gs = [], []
    for f0, fk in problem.blocks:
        has_imag = max(np.max(np.abs(np.imag(f0)), initial=0.0), np.max(np.abs(np.imag(fk)), initial=0.0)) > 0
        embed = _complex_embedding if has_imag else np.real
        hs.append(embed(f0))
        gs.append(np.stack([-_colmajor(embed(f)) for f in fk], axis=1))
    return hs, gs


def _psd_margin(problem: SdpProblem, x: np.ndarray) -> float:
    """Smallest eigenvalue over blocks, relative to the block scale"""
    margin = np.inf
    for index in range(len(problem.blocks)):
        value = problem.block_value(index, x)
        value = (value + value.conj().T) / 2
        lowest = float(scipy.linalg.eigvalsh(value)[0])
        scale = 1.0 + float(np.max(np.abs(value)))
        margin = min(margin, lowest / scale)
    return margin


def solve_sdp(problem: SdpProblem) -> SdpSolution:
    """
    Solve a standard-form SDP.

    Rank-deficient variable maps are reduced first: a cost component along
    a direction that moves no constraint means the program is unbounded,
    otherwise the free directions are projected out.  Redundant equalities
    are removed; inconsistent ones give an infeasible status with the
    residual direction as certificate.

    Args:
        problem: The program

    Returns:
        SdpSolution: certified when status is OPTIMAL
    """
    n = problem.n_vars
    c = problem.objective
    hs, gs = _real_blocks(problem)
    constraint_map = np.vstack(gs + ([problem.eq_matrix] if problem.eq_matrix is not None else []))

    # free directions of x
    _, s, vt = scipy.linalg.svd(constraint_map, full_matrices=False)
    rank = int(np.sum(s > RANK_TOL * (s[0] if s.size else 1.0)))
    if rank < n:
        free = scipy.linalg.null_space(vt[:rank]) if rank else np.eye(n)
        if np.linalg.norm(free.T @ c) > 1e-9 * (1.0 + np.linalg.norm(c)):
            logger.debug("Objective has a component along a constraint-free direction")
            return SdpSolution(np.zeros(n), -np.inf, -np.inf, SdpStatus.UNBOUNDED,
                               message="objective unbounded along a free direction")
    basis = vt[:rank].T
    if rank == 0:
        return _solve_constant(problem, hs)

    c_red = basis.T @ c
    gs_red = [g @ basis for g in gs]
    a_red, b_red = None, None
    if problem.eq_matrix is not None:
        a_proj = problem.eq_matrix @ basis
        ua, sa, vta = scipy.linalg.svd(a_proj, full_matrices=False)
        eq_rank = int(np.sum(sa > RANK_TOL * (sa[0] if sa.size else 1.0)))
        rhs = problem.eq_rhs
        residual = rhs - ua[:, :eq_rank] @ (ua[:, :eq_rank].T @ rhs)
        if np.linalg.norm(residual) > 1e-9 * (1.0 + np.linalg.norm(rhs)):
            logger.debug(f"Inconsistent equalities, residual {np.linalg.norm(residual):.3e}")
            return SdpSolution(np.zeros(n), np.inf, np.inf, SdpStatus.INFEASIBLE,
                               dual_ray=[residual], message="inconsistent equality constraints")
        if eq_rank > 0:
            a_red = sa[:eq_rank, None] * vta[:eq_rank]
            b_red = ua[:, :eq_rank].T @ rhs

    kwargs = {
        "Gs": [matrix(np.ascontiguousarray(g, dtype=float)) for g in gs_red],
        "hs": [matrix(np.ascontiguousarray(h, dtype=float)) for h in hs],
    }
    if a_red is not None:
        kwargs["A"] = matrix(np.ascontiguousarray(a_red, dtype=float))
        kwargs["b"] = matrix(np.ascontiguousarray(b_red, dtype=float))

    try:
        result = solvers.sdp(matrix(np.ascontiguousarray(c_red, dtype=float)), options=dict(SOLVER_OPTIONS), **kwargs)
    except (ArithmeticError, ValueError) as e:
        raise SdpError(f"Interior-point solver broke down: {e}")

    return _interpret(problem, result, basis)


def _solve_constant(problem: SdpProblem, hs: List[np.ndarray]) -> SdpSolution:
    """No variable moves any constraint: feasibility of F0 alone"""
    x = np.zeros(problem.n_vars)
    lowest = min(float(scipy.linalg.eigvalsh(h)[0]) for h in hs)
    consistent = problem.eq_rhs is None or np.linalg.norm(problem.eq_rhs) <= 1e-9
    if lowest >= -BLOCK_PSD_TOL and consistent:
        return SdpSolution(x, 0.0, 0.0, SdpStatus.OPTIMAL, message="constant program")
    return SdpSolution(x, np.inf, np.inf, SdpStatus.INFEASIBLE, message="constant program infeasible")


def _to_float(value) -> float:
    return float("nan") if value is None else float(value)


def _interpret(problem: SdpProblem, result: Dict, basis: np.ndarray) -> SdpSolution:
    status_text = result["status"]
    iterations = int(result.get("iterations", 0) or 0)
    n = problem.n_vars

    if status_text == "primal infeasible":
        ray = [np.array(z) for z in result["zs"]] if result.get("zs") is not None else None
        return SdpSolution(np.zeros(n), np.inf, np.inf, SdpStatus.INFEASIBLE, iterations, dual_ray=ray,
                           message="primal infeasibility certificate found")
    if status_text == "dual infeasible":
        x = basis @ np.array(result["x"]).reshape(-1) if result.get("x") is not None else np.zeros(n)
        return SdpSolution(x, -np.inf, -np.inf, SdpStatus.UNBOUNDED, iterations,
                           message="dual infeasibility certificate found")

    x = basis @ np.array(result["x"]).reshape(-1)
    primal = _to_float(result["primal objective"])
    dual = _to_float(result["dual objective"])
    zs = [np.array(z) for z in result["zs"]] if result.get("zs") is not None else []

    status = SdpStatus.OPTIMAL
    message = status_text
    if status_text == "unknown":
        converged = (
            np.isfinite(primal) and np.isfinite(dual)
            and abs(primal - dual) <= SDP_TOL * (1.0 + abs(primal))
            and _to_float(result.get("primal infeasibility")) <= 1e-8
            and _to_float(result.get("dual infeasibility")) <= 1e-8
        )
        if not converged:
            status = SdpStatus.MAX_ITER
            message = "no certified convergence"
    if status == SdpStatus.OPTIMAL:
        if not (abs(primal - dual) <= SDP_TOL * (1.0 + abs(primal))):
            status = SdpStatus.MAX_ITER
            message = f"duality gap {abs(primal - dual):.3e} above tolerance"
        elif _psd_margin(problem, x) < -BLOCK_PSD_TOL:
            status = SdpStatus.MAX_ITER
            message = "block not PSD at the returned point"
    if status != SdpStatus.OPTIMAL:
        logger.warning(f"SDP not certified after {iterations} iterations: {message}")
    else:
        logger.debug(f"SDP solved in {iterations} iterations, primal {primal:.10g}, dual {dual:.10g}")
    return SdpSolution(x, primal, dual, status, iterations, dual_blocks=zs, message=message)


Const = Union[np.ndarray, float, complex]


class Affine:
    """
    Affine matrix-valued expression  const + sum_k x_k coeffs[k]
    in the real variables of an SdpBuilder
    """

    # numpy defers to the reflected operators, so ndarray - Affine stays an Affine
    __array_ufunc__ = None

    def __init__(self, const: np.ndarray, coeffs: Optional[Dict[int, np.ndarray]] = None):
        self.const = np.atleast_2d(np.asarray(const, dtype=complex))
        self.coeffs = coeffs or {}

    @property
    def shape(self) -> Tuple[int, int]:
        return self.const.shape

    @staticmethod
    def lift(value: Union["Affine", Const], shape: Optional[Tuple[int, int]] = None) -> "Affine":
        if isinstance(value, Affine):
            return value
        array = np.asarray(value, dtype=complex)
        if array.ndim == 0 and shape is not None:
            array = array * np.eye(shape[0], shape[1])
        return Affine(array)

    def _combine(self, other: "Affine", sign: float) -> "Affine":
        if self.shape != other.shape:
            raise DimensionError(f"Shape mismatch {self.shape} vs {other.shape}")
        coeffs = dict(self.coeffs)
        for key, value in other.coeffs.items():
            coeffs[key] = coeffs[key] + sign * value if key in coeffs else sign * value
        return Affine(self.const + sign * other.const, coeffs)

    def __add__(self, other):
        return self._combine(Affine.lift(other, self.shape), 1.0)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(Affine.lift(other, self.shape), -1.0)

    def __rsub__(self, other):
        return Affine.lift(other, self.shape)._combine(self, -1.0)

    def __neg__(self):
        return self * -1.0

    def __mul__(self, scalar: Union[float, complex]) -> "Affine":
        return Affine(self.const * scalar, {k: v * scalar for k, v in self.coeffs.items()})

    __rmul__ = __mul__

    def left(self, a: np.ndarray) -> "Affine":
        """a @ self"""
        return Affine(a @ self.const, {k: a @ v for k, v in self.coeffs.items()})

    def right(self, b: np.ndarray) -> "Affine":
        """self @ b"""
        return Affine(self.const @ b, {k: v @ b for k, v in self.coeffs.items()})

    @property
    def H(self) -> "Affine":
        return Affine(self.const.conj().T, {k: v.conj().T for k, v in self.coeffs.items()})

    def kron(self, a: np.ndarray) -> "Affine":
        """self ⊗ a"""
        return Affine(np.kron(self.const, a), {k: np.kron(v, a) for k, v in self.coeffs.items()})

    def rkron(self, a: np.ndarray) -> "Affine":
        """a ⊗ self"""
        return Affine(np.kron(a, self.const), {k: np.kron(a, v) for k, v in self.coeffs.items()})

    def trace(self) -> "Affine":
        return Affine(np.trace(self.const), {k: np.atleast_2d(np.trace(v)) for k, v in self.coeffs.items()})

    def partial_trace(self, dims: Sequence[int], keep: Sequence[int]) -> "Affine":
        from quantum.spectral import partial_trace
        return Affine(partial_trace(self.const, dims, keep),
                      {k: partial_trace(v, dims, keep) for k, v in self.coeffs.items()})

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        value = self.const.copy()
        for key, coeff in self.coeffs.items():
            value = value + x[key] * coeff
        return value

    @staticmethod
    def bmat(rows: List[List[Union["Affine", np.ndarray, None]]]) -> "Affine":
        """Block matrix from a grid of expressions; None is a zero block"""
        heights = []
        for row in rows:
            height = next(Affine.lift(e).shape[0] for e in row if e is not None)
            heights.append(height)
        widths = []
        for j in range(len(rows[0])):
            width = next(Affine.lift(row[j]).shape[1] for row in rows if row[j] is not None)
            widths.append(width)
        lifted = [[None if e is None else Affine.lift(e) for e in row] for row in rows]
        keys = sorted({k for row in lifted for e in row if e is not None for k in e.coeffs})

        def assemble(getter):
            return np.block([[getter(e, heights[i], widths[j]) for j, e in enumerate(row)]
                             for i, row in enumerate(lifted)])

        const = assemble(lambda e, h, w: np.zeros((h, w), dtype=complex) if e is None else e.const)
        coeffs = {}
        for key in keys:
            coeffs[key] = assemble(lambda e, h, w: e.coeffs.get(key, np.zeros((h, w), dtype=complex))
                                   if e is not None else np.zeros((h, w), dtype=complex))
        return Affine(const, coeffs)


class SdpBuilder:
    """Collects variables, PSD blocks, equalities and an objective"""

    def __init__(self):
        self.n_vars = 0
        self.psd_blocks: List[Affine] = []
        self.eq_rows: List[np.ndarray] = []
        self.eq_rhs: List[float] = []
        self.objective: Optional[Affine] = None
        self.sense = 1.0

    def _allocate(self, count: int) -> List[int]:
        indices = list(range(self.n_vars, self.n_vars + count))
        self.n_vars += count
        return indices

    def scalar(self) -> Affine:
        """A real scalar variable"""
        (index,) = self._allocate(1)
        return Affine(np.zeros((1, 1)), {index: np.ones((1, 1), dtype=complex)})

    def hermitian(self, dim: int, real: bool = False) -> Affine:
        """A dim x dim Hermitian (or real symmetric) matrix variable"""
        coeffs = {}
        for i in range(dim):
            (index,) = self._allocate(1)
            basis = np.zeros((dim, dim), dtype=complex)
            basis[i, i] = 1.0
            coeffs[index] = basis
        for i in range(dim):
            for j in range(i + 1, dim):
                (index,) = self._allocate(1)
                basis = np.zeros((dim, dim), dtype=complex)
                basis[i, j] = basis[j, i] = 1.0
                coeffs[index] = basis
                if real:
                    continue
                (index,) = self._allocate(1)
                basis = np.zeros((dim, dim), dtype=complex)
                basis[i, j] = 1j
                basis[j, i] = -1j
                coeffs[index] = basis
        return Affine(np.zeros((dim, dim)), coeffs)

    def psd(self, expr: Affine) -> None:
        """expr >= 0"""
        if expr.shape[0] != expr.shape[1]:
            raise DimensionError(f"PSD block must be square, got {expr.shape}")
        self.psd_blocks.append(expr)

    def equal(self, lhs: Affine, rhs: Union[Affine, Const] = 0.0) -> None:
        """Entrywise lhs == rhs (real and imaginary parts); a scalar rhs means rhs times identity"""
        diff = lhs - rhs
        size = diff.const.size
        for part in (np.real, np.imag):
            rows = np.zeros((size, self.n_vars))
            for key, coeff in diff.coeffs.items():
                rows[:, key] = part(coeff).reshape(-1)
            rhs_values = -part(diff.const).reshape(-1)
            keep = (np.max(np.abs(rows), axis=1) > 0) | (np.abs(rhs_values) > 0)
            for row, value in zip(rows[keep], rhs_values[keep]):
                self.eq_rows.append(row)
                self.eq_rhs.append(float(value))

    def minimize(self, expr: Affine) -> None:
        self.objective = expr
        self.sense = 1.0

    def maximize(self, expr: Affine) -> None:
        self.objective = expr
        self.sense = -1.0

    def build(self) -> SdpProblem:
        if self.objective is None or self.objective.shape != (1, 1):
            raise DimensionError("Objective must be a scalar expression")
        c = np.zeros(self.n_vars)
        for key, coeff in self.objective.coeffs.items():
            c[key] = self.sense * coeff[0, 0].real
        blocks = []
        for expr in self.psd_blocks:
            fk = np.zeros((self.n_vars,) + expr.shape, dtype=complex)
            for key, coeff in expr.coeffs.items():
                fk[key] = coeff
            blocks.append((expr.const, fk))
        eq_matrix, eq_rhs = None, None
        if self.eq_rows:
            eq_matrix = np.array([np.pad(row, (0, self.n_vars - row.size)) for row in self.eq_rows])
            eq_rhs = np.array(self.eq_rhs)
        return SdpProblem(c, blocks, eq_matrix, eq_rhs)

    def solve(self) -> "BuiltSolution":
        """Build, solve and report the objective in the caller's sense"""
        problem = self.build()
        solution = solve_sdp(problem)
        offset = float(self.objective.const[0, 0].real)
        return BuiltSolution(solution, self.sense * solution.primal_value + offset,
                             self.sense * solution.dual_value + offset)


@dataclass
class BuiltSolution:
    """Solution of a builder program with objective values in the original sense"""
    solution: SdpSolution
    value: float
    dual_value: float

    @property
    def status(self) -> SdpStatus:
        return self.solution.status

    @property
    def certified(self) -> bool:
        return self.solution.certified

    def __getitem__(self, expr: Affine) -> np.ndarray:
        return expr.evaluate(self.solution.x)
