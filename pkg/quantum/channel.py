"""
Quantum channel algebra on Kraus representations: validation, Choi /
dual / complementary transforms, composition, and the stock channels
(erasure, dephasing, rotated dephasing, mixtures, tensor products,
unitary conjugation).  Also the U(1) representation type with its period.
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence

import numpy as np

from quantum.spectral import as_array, check_hermitian, eigh, exp_herm, spectral_range
from system.core import FIT_TOL, STRUCT_TOL
from system.errors import (
    ConfigError, DephasingFitError, DimensionError, DomainError, TracePreservationError
)

logger = logging.getLogger(__name__)

PAULI_Z = np.diag([1.0, -1.0]).astype(complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PERIOD_DENOMINATOR = 10 ** 6
PERIOD_TOL = 1e-8


class CPMap:
    """Completely positive map given by a stacked Kraus array (r, d_out, d_in)"""

    def __init__(self, kraus):
        if isinstance(kraus, np.ndarray) and kraus.ndim == 3:
            stacked = np.asarray(kraus, dtype=complex)
        else:
            operators = [as_array(k) for k in kraus]
            if not operators:
                raise DimensionError("At least one Kraus operator is required")
            shapes = {op.shape for op in operators}
            if len(shapes) != 1:
                raise DimensionError(f"Inconsistent Kraus shapes {sorted(shapes)}")
            stacked = np.stack(operators)
        if stacked.shape[0] == 0:
            raise DimensionError("At least one Kraus operator is required")
        self.kraus = stacked

    @property
    def dim_out(self) -> int:
        return self.kraus.shape[1]

    @property
    def dim_in(self) -> int:
        return self.kraus.shape[2]

    @property
    def n_kraus(self) -> int:
        return self.kraus.shape[0]

    def apply(self, rho: np.ndarray) -> np.ndarray:
        rho = as_array(rho)
        return np.einsum("aij,jk,alk->il", self.kraus, rho, self.kraus.conj())

    __call__ = apply

    def choi(self) -> np.ndarray:
        """Σ_ij |i><j| ⊗ Φ(|i><j|), input factor first"""
        vectors = np.transpose(self.kraus, (0, 2, 1)).reshape(self.n_kraus, -1)
        return vectors.T @ vectors.conj()

    def kraus_gram(self) -> np.ndarray:
        """Σ K†K"""
        return np.einsum("aji,ajk->ik", self.kraus.conj(), self.kraus)

    def dual(self) -> "CPMap":
        """Adjoint map X ↦ Σ K† X K"""
        return CPMap(np.conj(np.transpose(self.kraus, (0, 2, 1))))


class Channel(CPMap):
    """A trace-preserving CPMap; construction validates Σ K†K = 1"""

    def __init__(self, kraus, tol: float = STRUCT_TOL):
        super().__init__(kraus)
        residual = float(np.max(np.abs(self.kraus_gram() - np.eye(self.dim_in))))
        if residual > tol:
            raise TracePreservationError("Kraus operators are not trace preserving", residual)
        self.tp_residual = residual

    def __repr__(self) -> str:
        return f"Channel({self.dim_in}->{self.dim_out}, kraus={self.n_kraus})"

    @property
    def is_isometric(self) -> bool:
        """A single Kraus operator up to the Kraus gauge (rank-one Kraus Gram)"""
        if self.n_kraus == 1:
            return True
        flat = self.kraus.reshape(self.n_kraus, -1)
        values = np.linalg.eigvalsh(flat.conj() @ flat.T)
        return int(np.sum(values > 1e-10 * max(1.0, values[-1]))) == 1

    def isometry(self) -> np.ndarray:
        """The Kraus operator of an isometric channel"""
        if self.n_kraus == 1:
            return self.kraus[0]
        if not self.is_isometric:
            raise DomainError("Channel is not an isometry conjugation")
        flat = self.kraus.reshape(self.n_kraus, -1)
        weights = eigh(flat.conj() @ flat.T).eigenvectors[:, -1]
        return np.einsum("a,aij->ij", weights, self.kraus)


def make_channel(kraus, tol: float = STRUCT_TOL) -> Channel:
    """Validated channel from a list of Kraus operators"""
    channel = Channel(kraus, tol)
    logger.debug(f"Channel {channel.dim_in}->{channel.dim_out} with {channel.n_kraus} Kraus, "
                 f"TP residual {channel.tp_residual:.2e}")
    return channel


def identity_channel(dim: int) -> Channel:
    return Channel([np.eye(dim)])


def unitary_channel(u: np.ndarray) -> Channel:
    return Channel([as_array(u)])


def isometry_channel(w: np.ndarray) -> Channel:
    return Channel([as_array(w)])


def choi(channel: CPMap) -> np.ndarray:
    return channel.choi()


def choi_state(channel: CPMap) -> np.ndarray:
    """Choi matrix normalized to unit trace"""
    return channel.choi() / channel.dim_in


def channel_from_choi(j: np.ndarray, dim_in: int, dim_out: int, tol: float = 1e-12) -> Channel:
    """
    Kraus form of a Choi matrix in the input-first convention

    Args:
        j: PSD Choi matrix of size dim_in*dim_out
        dim_in: Input dimension
        dim_out: Output dimension
        tol: Relative eigenvalue cutoff

    Returns:
        Channel: validated with a loose tolerance, the Choi comes from a solver
    """
    spectrum = eigh(check_hermitian(j, 1e-8))
    values = spectrum.eigenvalues
    keep = values > tol * max(1.0, float(values[-1]))
    kraus = [np.sqrt(v) * spectrum.eigenvectors[:, i].reshape(dim_in, dim_out).T
             for i, v in zip(np.flatnonzero(keep), values[keep])]
    return Channel(kraus, tol=1e-6)


def dual_channel(channel: CPMap) -> CPMap:
    return channel.dual()


def dual_apply(channel: CPMap, x: np.ndarray) -> np.ndarray:
    """Φ†(X)"""
    return channel.dual().apply(x)


def complementary_channel(channel: Channel) -> Channel:
    """ρ ↦ Tr_out(V ρ V†) with the stacked-Kraus Stinespring isometry"""
    return Channel(np.transpose(channel.kraus, (1, 0, 2)))


def compose(outer: CPMap, inner: CPMap) -> Channel:
    """outer ∘ inner"""
    if outer.dim_in != inner.dim_out:
        raise DimensionError(f"Cannot compose {outer.dim_in}-input after {inner.dim_out}-output")
    kraus = np.einsum("aij,bjk->abik", outer.kraus, inner.kraus)
    return Channel(kraus.reshape(-1, outer.dim_out, inner.dim_in), tol=1e-9)


def tensor(first: CPMap, second: CPMap) -> Channel:
    kraus = [np.kron(a, b) for a in first.kraus for b in second.kraus]
    return Channel(kraus, tol=1e-9)


def mix(channels: Sequence[CPMap], probs: Sequence[float]) -> Channel:
    """Σ p_i Φ_i with Kraus lists concatenated and scaled by √p_i"""
    probs = np.asarray(probs, dtype=float)
    if len(channels) != probs.size or not channels:
        raise DimensionError("One probability per channel is required")
    if np.any(probs < 0):
        raise DomainError(f"Negative probability {probs.min()}")
    if abs(probs.sum() - 1) > 1e-12:
        raise DomainError(f"Probabilities sum to {probs.sum()}")
    shapes = {(c.dim_out, c.dim_in) for c in channels}
    if len(shapes) != 1:
        raise DimensionError(f"Mixed channels must share dimensions, got {sorted(shapes)}")
    kraus = np.concatenate([np.sqrt(p) * c.kraus for c, p in zip(channels, probs) if p > 0])
    return Channel(kraus, tol=1e-9)


def conjugate_by_unitary(channel: CPMap, u_out: np.ndarray, u_in: Optional[np.ndarray] = None) -> Channel:
    """ρ ↦ U_out Φ(U_in† ρ U_in) U_out†"""
    u_out = as_array(u_out)
    kraus = np.einsum("ij,ajk->aik", u_out, channel.kraus)
    if u_in is not None:
        kraus = np.einsum("aij,jk->aik", kraus, as_array(u_in).conj().T)
    return Channel(kraus, tol=1e-9)


def erasure_channel(dim: int, p: float = 1.0) -> Channel:
    """
    Erase a d-level system with probability p; output has an extra vacuum
    level |∅> appended as the last index.
    """
    if not 0 <= p <= 1:
        raise DomainError(f"Erasure probability {p} outside [0, 1]")
    embed = np.vstack([np.eye(dim), np.zeros((1, dim))])
    kraus = [math.sqrt(1 - p) * embed] if p < 1 else []
    for i in range(dim):
        k = np.zeros((dim + 1, dim), dtype=complex)
        k[dim, i] = math.sqrt(p)
        kraus.append(k)
    return Channel(kraus)


def dephasing_channel(p: float) -> Channel:
    """{√(1-p)·1, √p·Z}"""
    if not 0 <= p <= 1:
        raise DomainError(f"Dephasing probability {p} outside [0, 1]")
    return Channel([math.sqrt(1 - p) * np.eye(2), math.sqrt(p) * PAULI_Z])


def amplitude_damping_channel(gamma: float) -> Channel:
    k0 = np.array([[1, 0], [0, math.sqrt(1 - gamma)]], dtype=complex)
    k1 = np.array([[0, math.sqrt(gamma)], [0, 0]], dtype=complex)
    return Channel([k0, k1])


@dataclass(frozen=True)
class DephasingParams:
    """(1-p) R(·)R† + p Z R(·)R† Z with R = e^{-iφZ/2}"""
    p: float
    phi: float
    residual: float = 0.0

    @property
    def xi(self) -> complex:
        return (1 - 2 * self.p) * np.exp(-1j * self.phi)


def rotated_dephasing(p: float, phi: float) -> Channel:
    if not 0 <= p <= 1:
        raise DomainError(f"Dephasing probability {p} outside [0, 1]")
    rotation = np.diag([np.exp(-0.5j * phi), np.exp(0.5j * phi)])
    return Channel([math.sqrt(1 - p) * rotation, math.sqrt(p) * PAULI_Z @ rotation])


def extract_dephasing(channel: CPMap, tol: float = FIT_TOL) -> DephasingParams:
    """
    Fit a qubit channel to the rotated dephasing family.

    The family is not identifiable beyond p <= 1/2: (p, φ) and (1-p, φ+π)
    are the same channel, so p is returned in [0, 1/2] and φ in [0, 2π)
    (φ = 0 when p = 1/2).

    Raises:
        DephasingFitError: the channel moves populations or mixes coherences
    """
    if channel.dim_in != 2 or channel.dim_out != 2:
        raise DimensionError(f"Dephasing fit needs a qubit channel, got {channel.dim_in}->{channel.dim_out}")
    xi = complex(channel.apply(np.array([[0, 1], [0, 0]]))[0, 1])
    fitted = rotated_dephasing_from_xi(xi)
    residual = float(np.max(np.abs(channel.choi() - rotated_dephasing(fitted.p, fitted.phi).choi())))
    if residual > tol:
        raise DephasingFitError("Channel is not a rotated dephasing channel", residual)
    return DephasingParams(fitted.p, fitted.phi, residual)


def rotated_dephasing_from_xi(xi: complex) -> DephasingParams:
    """Invert ξ = (1-2p)e^{-iφ} with p in [0, 1/2]"""
    magnitude = min(abs(xi), 1.0)
    p = (1 - magnitude) / 2
    phi = float(np.mod(-np.angle(xi), 2 * np.pi)) if magnitude > 1e-15 else 0.0
    if phi >= 2 * np.pi - 1e-15:
        phi = 0.0
    return DephasingParams(p, phi)


@dataclass(frozen=True)
class U1Rep:
    """
    Charge observable H generating θ ↦ e^{-iHθ} with period tau.
    A one-dimensional H holds the diagonal of a charge that is diagonal in
    the computational basis; large physical systems are kept this way.
    """
    H: np.ndarray
    tau: float

    @property
    def diagonal(self) -> bool:
        return self.H.ndim == 1

    @property
    def dim(self) -> int:
        return self.H.shape[0]

    @property
    def spread(self) -> float:
        if self.diagonal:
            return float(np.max(self.H) - np.min(self.H))
        return spectral_range(self.H)

    def values(self) -> np.ndarray:
        """Ascending spectrum"""
        if self.diagonal:
            return np.sort(self.H)
        return np.linalg.eigvalsh(self.H)

    def matrix(self) -> np.ndarray:
        return np.diag(self.H).astype(complex) if self.diagonal else self.H

    def apply(self, x: np.ndarray) -> np.ndarray:
        """H @ x"""
        if self.diagonal:
            return self.H.reshape((-1,) + (1,) * (x.ndim - 1)) * x
        return self.H @ x

    def unitary(self, theta: float) -> np.ndarray:
        if self.diagonal:
            return np.diag(np.exp(-1j * theta * self.H))
        return exp_herm(self.H, theta)

    def rotate(self, theta: float, x: np.ndarray) -> np.ndarray:
        """e^{-iHθ} @ x"""
        if self.diagonal:
            phases = np.exp(-1j * theta * self.H)
            return phases.reshape((-1,) + (1,) * (x.ndim - 1)) * x
        return exp_herm(self.H, theta) @ x

    def expectation(self, w: np.ndarray, power: int = 1) -> np.ndarray:
        """W† H^power W for an isometry W"""
        x = w
        for _ in range(power):
            x = self.apply(x)
        return w.conj().T @ x

    def scaled(self, factor: float) -> "U1Rep":
        return U1Rep(self.H * factor, self.tau / factor)

    def shifted(self, constant: float) -> "U1Rep":
        if self.diagonal:
            return U1Rep(self.H + constant, self.tau)
        return U1Rep(self.H + constant * np.eye(self.dim), self.tau)


def _rational_gaps(values: np.ndarray) -> List[Fraction]:
    gaps = []
    for gap in values - values[0]:
        if abs(gap) <= PERIOD_TOL:
            continue
        fraction = Fraction(float(gap)).limit_denominator(PERIOD_DENOMINATOR)
        if abs(float(fraction) - gap) > PERIOD_TOL * max(1.0, abs(gap)):
            raise DomainError(f"Spectral gap {gap!r} has no rational form with denominator <= {PERIOD_DENOMINATOR}")
        gaps.append(fraction)
    return gaps


def _fraction_gcd(fractions: Sequence[Fraction]) -> Optional[Fraction]:
    result = None
    for f in fractions:
        if result is None:
            result = abs(f)
            continue
        numerator = math.gcd(result.numerator * f.denominator, f.numerator * result.denominator)
        result = Fraction(abs(numerator), result.denominator * f.denominator)
    return result


def _distinct_values(h: np.ndarray) -> np.ndarray:
    h = np.asarray(h)
    if h.ndim == 1:
        values = np.sort(np.real(h))
    else:
        values = np.linalg.eigvalsh(check_hermitian(h))
    keep = np.concatenate([[True], np.diff(values) > PERIOD_TOL])
    return values[keep]


def period_of(*hamiltonians: np.ndarray) -> float:
    """
    Common period τ = 2π / gcd of every spectral gap, after rational
    reconstruction of the gaps (denominator bound 10^6).
    One-dimensional inputs are diagonals.
    """
    gaps: List[Fraction] = []
    for h in hamiltonians:
        gaps.extend(_rational_gaps(_distinct_values(h)))
    common = _fraction_gcd(gaps)
    if common is None:
        return 2 * math.pi
    return 2 * math.pi / float(common)


def make_u1rep(h: np.ndarray, tau: Optional[float] = None) -> U1Rep:
    """U1Rep with its own period, or a supplied common one (checked)"""
    h = np.asarray(h)
    if h.ndim == 1:
        if np.max(np.abs(np.imag(h)), initial=0.0) > STRUCT_TOL:
            raise DomainError("Diagonal charge must be real")
        h = np.real(h).astype(float)
    else:
        h = check_hermitian(h)
    tau = period_of(h) if tau is None else float(tau)
    residual = periodicity_residual(h, tau)
    if residual > PERIOD_TOL:
        raise DomainError(f"e^(-iHτ) is not proportional to identity at τ={tau}", residual)
    return U1Rep(h, tau)


def periodicity_residual(h: np.ndarray, tau: float) -> float:
    values = _distinct_values(h)
    phases = np.exp(-1j * tau * values)
    return float(np.max(np.abs(phases - phases[0])))


def u1_unitary(rep: U1Rep, theta: float) -> np.ndarray:
    """U_θ = e^{-iHθ}"""
    return rep.unitary(theta)


def load_kraus_file(path: str) -> Channel:
    """
    Read a channel from a text file: a header line `dims <in> <out>`, then
    one Kraus operator per block of <out> rows, each row holding <in>
    whitespace-separated `re,im` pairs.  Blank lines and `#` comments are
    ignored.

    Raises:
        ConfigError: malformed file, with the offending line number
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            lines = f.readlines()
    except OSError as e:
        raise ConfigError(f"Cannot read Kraus file '{path}': {e}")

    rows = []
    dims = None
    for number, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if dims is None:
            parts = line.split()
            if len(parts) != 3 or parts[0] != "dims":
                raise ConfigError("Expected header 'dims <in> <out>'", line=number, key=path)
            try:
                dims = (int(parts[1]), int(parts[2]))
            except ValueError:
                raise ConfigError("Dimensions must be integers", line=number, key=path)
            continue
        try:
            row = [complex(float(re), float(im)) for re, im in (token.split(",") for token in line.split())]
        except ValueError:
            raise ConfigError(f"Malformed row '{line}'", line=number, key=path)
        if len(row) != dims[0]:
            raise ConfigError(f"Row has {len(row)} entries, expected {dims[0]}", line=number, key=path)
        rows.append(row)

    if dims is None:
        raise ConfigError("Empty Kraus file", key=path)
    dim_in, dim_out = dims
    if not rows or len(rows) % dim_out != 0:
        raise ConfigError(f"{len(rows)} rows do not split into blocks of {dim_out}", key=path)
    kraus = np.array(rows, dtype=complex).reshape(-1, dim_out, dim_in)
    try:
        return make_channel(kraus, tol=1e-9)
    except TracePreservationError as e:
        raise ConfigError(f"Kraus operators are not trace preserving (residual {e.residual:.3e})", key=path)
