"""
Dense complex linear algebra shared by every other quantum module:
Hermitian eigendecomposition with deterministic ordering, spectral
functions, norms and tensor/partial-trace algebra.

Every function accepts plain numpy arrays as well as Operator values.
"""

import logging
from dataclasses import dataclass, field
from functools import reduce
from typing import Callable, FrozenSet, Iterable, List, Sequence, Tuple, Union

import numpy as np
import scipy.linalg
from scipy.stats import unitary_group

from system.core import STRUCT_TOL
from system.errors import DimensionError, DomainError, NotHermitianError

logger = logging.getLogger(__name__)

HERMITIAN_TOL = 1e-12
ISOMETRY_TOL = 1e-10
PSD_TOL = 1e-10

KNOWN_TAGS = frozenset({"hermitian", "unitary", "isometry", "psd"})


@dataclass(frozen=True)
class Operator:
    """A dense complex matrix with optional structural assertions"""
    data: np.ndarray
    tags: FrozenSet[str] = field(default_factory=frozenset)

    def __post_init__(self):
        data = np.asarray(self.data, dtype=complex)
        if data.ndim != 2:
            raise DimensionError(f"Operator data must be 2-D, got shape {data.shape}")
        object.__setattr__(self, "data", data)
        tags = frozenset(self.tags)
        unknown = tags - KNOWN_TAGS
        if unknown:
            raise DomainError(f"Unknown operator tags {sorted(unknown)}")
        object.__setattr__(self, "tags", tags)
        self._check_tags()

    def _check_tags(self) -> None:
        if "hermitian" in self.tags or "psd" in self.tags:
            residual = hermiticity_residual(self.data)
            if residual > HERMITIAN_TOL * max(1.0, np.max(np.abs(self.data))):
                raise NotHermitianError("Operator tagged hermitian is not", residual)
        if "isometry" in self.tags or "unitary" in self.tags:
            residual = isometry_residual(self.data)
            if residual > ISOMETRY_TOL:
                raise DomainError("Operator tagged isometry is not", residual)
        if "unitary" in self.tags and self.dim_in != self.dim_out:
            raise DimensionError(f"Unitary must be square, got {self.data.shape}")
        if "psd" in self.tags:
            lowest = float(np.linalg.eigvalsh(_symmetrize(self.data))[0])
            if lowest < -PSD_TOL:
                raise DomainError(f"Operator tagged psd has eigenvalue {lowest:.3e}", lowest)

    @property
    def dim_out(self) -> int:
        return self.data.shape[0]

    @property
    def dim_in(self) -> int:
        return self.data.shape[1]

    def dag(self) -> "Operator":
        return Operator(self.data.conj().T, self.tags & {"hermitian", "unitary", "psd"})


@dataclass(frozen=True)
class Spectrum:
    """Ascending eigenvalues and matching orthonormal eigenvector columns"""
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.eigenvectors * self.eigenvalues) @ self.eigenvectors.conj().T


ArrayLike = Union[Operator, np.ndarray, Sequence]


def as_array(a: ArrayLike) -> np.ndarray:
    """Complex ndarray view of an Operator or array-like"""
    if isinstance(a, Operator):
        return a.data
    return np.asarray(a, dtype=complex)


def dag(a: ArrayLike) -> np.ndarray:
    return as_array(a).conj().T


def _symmetrize(a: np.ndarray) -> np.ndarray:
    return (a + a.conj().T) / 2


def hermiticity_residual(a: ArrayLike) -> float:
    """Largest entry of |A - A†|"""
    a = as_array(a)
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"Square matrix expected, got {a.shape}")
    return float(np.max(np.abs(a - a.conj().T))) if a.size else 0.0


def isometry_residual(a: ArrayLike) -> float:
    """Largest entry of |A†A - 1|"""
    a = as_array(a)
    return float(np.max(np.abs(a.conj().T @ a - np.eye(a.shape[1]))))


def check_hermitian(a: ArrayLike, tol: float = STRUCT_TOL) -> np.ndarray:
    """
    Validate hermiticity and return the exactly symmetrized matrix

    Args:
        a: Square matrix
        tol: Allowed entrywise residual, relative to max(1, max|A|)

    Returns:
        np.ndarray: (A + A†)/2

    Raises:
        NotHermitianError: residual above tolerance
    """
    a = as_array(a)
    residual = hermiticity_residual(a)
    scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
    if residual > tol * scale:
        raise NotHermitianError("Matrix is not Hermitian", residual)
    return _symmetrize(a)


def normalize_phase(vectors: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Rotate each column so its first non-negligible entry is real positive"""
    out = np.array(vectors, dtype=complex, copy=True)
    for j in range(out.shape[1]):
        column = out[:, j]
        nonzero = np.flatnonzero(np.abs(column) > tol)
        if nonzero.size:
            pivot = column[nonzero[0]]
            out[:, j] = column * (abs(pivot) / pivot)
    return out


def _tie_key(column: np.ndarray) -> Tuple[float, ...]:
    rounded = np.round(column, 10)
    return tuple(x for pair in zip(-np.abs(rounded.real), rounded.imag) for x in pair)


def eigh(a: ArrayLike, tol: float = STRUCT_TOL) -> Spectrum:
    """
    Hermitian eigendecomposition with deterministic ordering.

    Eigenvalues are ascending.  Eigenvectors are phase-normalized (first
    nonzero entry real positive); within a degenerate cluster the columns are
    ordered lexicographically by their entries.

    Args:
        a: Hermitian matrix
        tol: Hermiticity tolerance

    Returns:
        Spectrum: eigenvalues and eigenvectors
    """
    a = check_hermitian(a, tol)
    values, vectors = scipy.linalg.eigh(a)
    vectors = normalize_phase(vectors)
    scale = max(1.0, float(np.max(np.abs(values)))) if values.size else 1.0
    order: List[int] = []
    start = 0
    for stop in range(1, len(values) + 1):
        if stop == len(values) or values[stop] - values[stop - 1] > 1e-12 * scale:
            cluster = list(range(start, stop))
            if len(cluster) > 1:
                cluster.sort(key=lambda j: _tie_key(vectors[:, j]))
            order.extend(cluster)
            start = stop
    return Spectrum(values[order], vectors[:, order])


def eigvalsh(a: ArrayLike) -> np.ndarray:
    """Ascending eigenvalues of the Hermitian part"""
    return scipy.linalg.eigvalsh(_symmetrize(as_array(a)))


def spectral_range(a: ArrayLike) -> float:
    """λ_max - λ_min of a Hermitian matrix"""
    values = eigvalsh(check_hermitian(a))
    return float(values[-1] - values[0])


def herm_func(a: ArrayLike, f: Callable[[np.ndarray], np.ndarray], name: str = "f") -> np.ndarray:
    """
    Apply a real function to a Hermitian matrix through its eigenbasis

    Args:
        a: Hermitian matrix
        f: Vectorized real function of the eigenvalues
        name: Used in the error message

    Returns:
        np.ndarray: V f(Λ) V†

    Raises:
        DomainError: f is undefined at an eigenvalue
    """
    spectrum = eigh(a)
    with np.errstate(invalid="ignore", divide="ignore"):
        mapped = np.asarray(f(spectrum.eigenvalues), dtype=float)
    bad = ~np.isfinite(mapped)
    if np.any(bad):
        offending = float(spectrum.eigenvalues[np.flatnonzero(bad)[0]])
        raise DomainError(f"{name} undefined at eigenvalue {offending:.6e}", offending)
    return (spectrum.eigenvectors * mapped) @ spectrum.eigenvectors.conj().T


def psd_sqrt(a: ArrayLike) -> np.ndarray:
    """Matrix square root; eigenvalues in [-PSD_TOL, 0) are clipped to 0"""
    def _sqrt(values):
        clipped = np.where((values < 0) & (values >= -PSD_TOL), 0.0, values)
        return np.where(clipped >= 0, np.sqrt(np.abs(clipped)), np.nan)
    return herm_func(a, _sqrt, "sqrt")


def pinv_herm(a: ArrayLike, tol: float = 1e-12) -> Tuple[np.ndarray, np.ndarray]:
    """
    Pseudo-inverse of a Hermitian matrix on its support

    Args:
        a: Hermitian matrix
        tol: Eigenvalues with |λ| <= tol·max(1, max|λ|) are treated as zero

    Returns:
        Tuple of the pseudo-inverse and the boolean support mask over eigenvectors
    """
    spectrum = eigh(a)
    values = spectrum.eigenvalues
    cutoff = tol * max(1.0, float(np.max(np.abs(values)))) if values.size else tol
    support = np.abs(values) > cutoff
    inverted = np.zeros_like(values)
    inverted[support] = 1.0 / values[support]
    return (spectrum.eigenvectors * inverted) @ spectrum.eigenvectors.conj().T, support


def exp_herm(a: ArrayLike, theta: float) -> np.ndarray:
    """e^{-iθA} for Hermitian A"""
    spectrum = eigh(a)
    phases = np.exp(-1j * theta * spectrum.eigenvalues)
    return (spectrum.eigenvectors * phases) @ spectrum.eigenvectors.conj().T


def singular_values(a: ArrayLike) -> np.ndarray:
    return scipy.linalg.svdvals(as_array(a))


def trace_norm(a: ArrayLike) -> float:
    """Sum of singular values"""
    return float(np.sum(singular_values(a)))


def spectral_norm(a: ArrayLike) -> float:
    """Largest singular value"""
    values = singular_values(a)
    return float(values[0]) if values.size else 0.0


def kron(*operators: ArrayLike) -> np.ndarray:
    """Kronecker product of any number of operators"""
    if not operators:
        raise DimensionError("kron needs at least one operator")
    return reduce(np.kron, (as_array(op) for op in operators))


def partial_trace(a: ArrayLike, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """
    Trace out every subsystem not listed in keep

    Args:
        a: Square operator on the tensor product of dims
        dims: Subsystem dimensions
        keep: Indices of the subsystems to keep (order of dims is preserved)

    Returns:
        np.ndarray: Reduced operator
    """
    a = as_array(a)
    dims = [int(d) for d in dims]
    total = int(np.prod(dims))
    if a.shape != (total, total):
        raise DimensionError(f"dims {dims} do not match operator shape {a.shape}")
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= len(dims) for k in keep):
        raise DimensionError(f"keep {keep} out of range for {len(dims)} subsystems")
    tensor = a.reshape(dims + dims)
    count = len(dims)
    for index in reversed(range(len(dims))):
        if index in keep:
            continue
        tensor = np.trace(tensor, axis1=index, axis2=index + count)
        count -= 1
    kept = int(np.prod([dims[k] for k in keep])) if keep else 1
    return tensor.reshape(kept, kept)


def range_basis(a: ArrayLike, tol: float = 1e-10) -> np.ndarray:
    """Orthonormal columns spanning the range of A (relative singular cutoff)"""
    a = as_array(a)
    if a.size == 0:
        return np.zeros((a.shape[0], 0), dtype=complex)
    u, s, _ = scipy.linalg.svd(a, full_matrices=False)
    if not s.size or s[0] == 0:
        return np.zeros((a.shape[0], 0), dtype=complex)
    rank = int(np.sum(s > tol * s[0]))
    return u[:, :rank]


def null_space(a: ArrayLike, tol: float = 1e-10) -> np.ndarray:
    return scipy.linalg.null_space(as_array(a), rcond=tol)


def vec(a: ArrayLike) -> np.ndarray:
    """Row-major vectorization"""
    return as_array(a).reshape(-1)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary"""
    if dim == 1:
        return np.exp(2j * np.pi * rng.random()) * np.ones((1, 1), dtype=complex)
    return unitary_group.rvs(dim, random_state=rng)


def random_isometry(dim_out: int, dim_in: int, rng: np.random.Generator) -> np.ndarray:
    return random_unitary(dim_out, rng)[:, :dim_in]


def random_hermitian(dim: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return (g + g.conj().T) / 2


def random_density(dim: int, rng: np.random.Generator, rank: int = 0) -> np.ndarray:
    """Random density matrix of the given rank (full rank when 0)"""
    rank = rank or dim
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    psi = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return psi / np.linalg.norm(psi)


def is_density(rho: ArrayLike, tol: float = STRUCT_TOL) -> bool:
    rho = as_array(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        return False
    if hermiticity_residual(rho) > tol or abs(np.trace(rho) - 1) > tol:
        return False
    return float(eigvalsh(rho)[0]) >= -tol
