"""
Explicit codes with closed-form covariance and error-correction figures:
the modified thermodynamic codes on Dicke states and the quantum
Reed-Muller [[2^t-1, 1, 3]] codes.

Bit strings map to indices with the leftmost bit (site 1) most
significant.  Sites carry the charge diag(-1/2, +1/2), so H_S = -½ΣZ_l and
a string's charge is its weight minus n/2.
"""

import itertools
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from quantum.channel import make_channel
from quantum.metric import dephasing_distances, trace_distance
from quantum.noise import (
    LocalNoise, Sector, SectorRecovery, complete_recovery, default_dump, encode_sectors, erasure_noise
)
from quantum.qec import RepetitionCode, corrects_bit_flips, repetition_code
from quantum.symmetry import U1Code, make_code
from system.errors import CertificationError, DimensionError, DomainError

logger = logging.getLogger(__name__)

SITE_CHARGE = np.array([-0.5, 0.5])
# dense state vectors
DICKE_MAX_SITES = 20
THERMO_DENSE_MAX_SITES = 16
RM_DENSE_MAX_T = 4
# agreement of the two evaluations of each closed form
CLOSED_FORM_TOL = 1e-12
PROFILE_GRID = 4096

__all__ = [
    "ThermoParams", "RmParams", "ClosedFormRecord", "dicke_state", "thermo_code", "thermo_closed_forms",
    "thermo_profile", "thermo_offdiag", "thermo_complementary_states", "thermo_optimal_recovery", "thermo_registered_lower",
    "rm_generator", "rm_codewords", "shortened_rm", "rm_code", "rm_closed_forms", "rm_profile",
    "rm_stabilizers", "rm_stabilizer_residual", "rm_transversal_denominator", "repetition_code",
    "RepetitionCode", "corrects_bit_flips",
]


def _weights(n: int) -> np.ndarray:
    """Hamming weight of every n-bit index"""
    index = np.arange(2 ** n)
    weights = np.zeros(2 ** n, dtype=int)
    for bit in range(n):
        weights += (index >> bit) & 1
    return weights


def _charge_diagonal(n: int) -> np.ndarray:
    return _weights(n) - n / 2


def _bits_to_index(bits: Sequence[int]) -> int:
    index = 0
    for bit in bits:
        index = (index << 1) | int(bit)
    return index


def dicke_state(n: int, m: int) -> np.ndarray:
    """
    |m_n>: uniform superposition of the n-bit strings of weight (n+m)/2,
    the eigenvector of ΣZ_l with eigenvalue -m

    Raises:
        DomainError: |m| > n or n + m odd
        DimensionError: n beyond the dense cap
    """
    if abs(m) > n or (n + m) % 2:
        raise DomainError(f"Dicke state |{m}_{n}> needs |m| <= n and n + m even")
    if n > DICKE_MAX_SITES:
        raise DimensionError(f"Dense Dicke states are limited to {DICKE_MAX_SITES} sites")
    weight = (n + m) // 2
    mask = _weights(n) == weight
    psi = np.zeros(2 ** n)
    psi[mask] = 1.0 / math.sqrt(math.comb(n, weight))
    return psi


@dataclass(frozen=True)
class ThermoParams:
    """Modified thermodynamic code on n qubits, charge offset m, interpolation q"""
    n: int
    m: int
    q: float

    def __post_init__(self):
        if self.m < 2:
            raise DomainError(f"Thermodynamic code needs m >= 2, got {self.m}")
        if self.n < 4 or self.n <= self.m:
            raise DomainError(f"Thermodynamic code needs n >= 4 and n > m, got n={self.n}, m={self.m}")
        if (self.n + self.m) % 2:
            raise DomainError(f"n + m must be even, got {self.n} + {self.m}")
        if not 0.0 <= self.q <= 1.0:
            raise DomainError(f"q must lie in [0, 1], got {self.q}")
        if 4 * self.m > self.n:
            logger.debug(f"m={self.m} is not small against n={self.n}; leading-order figures are loose")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class RmParams:
    """Quantum Reed-Muller code of length 2^t - 1"""
    t: int

    def __post_init__(self):
        if self.t < 3:
            raise DomainError(f"Reed-Muller codes need t >= 3, got {self.t}")

    @property
    def n(self) -> int:
        return 2 ** self.t - 1

    def to_dict(self) -> Dict[str, Any]:
        return {"t": self.t, "n": self.n}


@dataclass
class ClosedFormRecord:
    """Closed-form figures of an explicit code under single-erasure noise"""
    epsilon_tilde: float
    epsilon_leading: float
    epsilon_lower: float
    epsilon_diamond_upper: float
    delta_group: float
    delta_point: float
    delta_charge: float
    chi: float
    frak_b: float
    dual_HS_coeff: float
    dual_HS2_coeff: float
    delta_group_bound: Optional[float] = None
    offdiag: Optional[float] = None
    notes: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _agree(name: str, first: float, second: float) -> None:
    if abs(first - second) > CLOSED_FORM_TOL * max(1.0, abs(first)):
        raise CertificationError(f"Closed form {name} disagrees between evaluations: {first!r} vs {second!r}",
                                 abs(first - second))


def _profile_max(profile, period: float, known: float) -> float:
    """Largest value of a θ profile over one period, the known maximizer included"""
    thetas = np.concatenate([np.linspace(0.0, period, PROFILE_GRID, endpoint=False), [known]])
    return float(np.max(profile(thetas)))


def _group_bound(delta_hl: float, delta_hs: float) -> float:
    """√(ΔH_L(ΔH_S - ΔH_L/2))/ΔH_S, the exact-QEC lower bound on δ_G"""
    return math.sqrt(delta_hl * (delta_hs - 0.5 * delta_hl)) / delta_hs


# ----------------------------------------------------------------------------
# thermodynamic codes
# ----------------------------------------------------------------------------

def thermo_code(params: ThermoParams) -> U1Code:
    """
    Dense modified thermodynamic code

        |c_0> = √(n/(n+qm)) |m_n> + √(qm/(n+qm)) |(-n)_n>
        |c_1> = √(n/(n+qm)) |(-m)_n> + √(qm/(n+qm)) |n_n>

    with H_L = (m/2)Z_L and H_S = -½ΣZ_l.

    Raises:
        DimensionError: n beyond the dense cap; use thermo_closed_forms
    """
    n, m, q = params.n, params.m, params.q
    if n > THERMO_DENSE_MAX_SITES:
        raise DimensionError(f"Dense thermodynamic codes stop at n={THERMO_DENSE_MAX_SITES}; "
                             f"use thermo_closed_forms for n={n}")
    a = math.sqrt(n / (n + q * m))
    b = math.sqrt(q * m / (n + q * m))
    c0 = a * dicke_state(n, m) + b * dicke_state(n, -n)
    c1 = a * dicke_state(n, -m) + b * dicke_state(n, n)
    overlap = abs(float(np.dot(c0, c1)))
    if overlap > 1e-12:
        raise CertificationError("Thermodynamic codewords are not orthogonal", overlap)
    encoder = make_channel([np.stack([c0, c1], axis=1).astype(complex)])
    return make_code(encoder, np.array([m / 2, -m / 2]), _charge_diagonal(n), name="thermo",
                     params=params.to_dict(), n_sites=n, site_dim=2, site_charge=SITE_CHARGE)


def thermo_offdiag(params: ThermoParams) -> float:
    """|ξ| of the dephasing left by the optimal recovery"""
    n, m, q = params.n, params.m, params.q
    return math.sqrt((n + m) * (n + (2 * q - 1) * m)) / (n + q * m)


def thermo_profile(thetas: np.ndarray, params: ThermoParams) -> np.ndarray:
    """P(θ) between the two orders of rotation and encoding"""
    n, m, q = params.n, params.m, params.q
    overlap = (n + q * m * np.cos((m + n) * np.asarray(thetas) / 2)) / (n + q * m)
    return np.sqrt(np.maximum(0.0, 1 - np.abs(overlap) ** 2))


def thermo_complementary_states(params: ThermoParams) -> Tuple[np.ndarray, np.ndarray]:
    """States of the erased qubit given |c_0> and |c_1>"""
    n, m, q = params.n, params.m, params.q
    low = (n + (2 * q - 1) * m) / (2 * (n + q * m))
    high = (n + m) / (2 * (n + q * m))
    return np.diag([low, high]), np.diag([high, low])


def thermo_closed_forms(params: ThermoParams) -> ClosedFormRecord:
    """
    Closed-form figures of the modified thermodynamic code under the
    single-erasure mixture; valid for every n.

    Each of δ_G, δ_C, ℬ, ε̃, ε_⋄ and the ε lower bound is evaluated twice
    by independent routes.

    Raises:
        CertificationError: the two evaluations of an entry disagree
    """
    n, m, q = params.n, params.m, params.q
    s = n + q * m
    # 1 - ((n-qm)/s)² = 4nqm/s² and 1 - ξ² = m²(1-q)²/s², free of cancellation
    delta_group = 2 * math.sqrt(n * q * m) / s
    delta_point = math.sqrt(q * m * (m + n) ** 2 / s)
    delta_charge = q * m * (n + m) / s
    dual_hs = m * n * (1 - q) / (2 * s)
    dual_hs2 = m * n * (m + q * n) / (4 * s)
    chi = 2 * dual_hs
    frak_b = math.sqrt(2 * m * n * (m + q * n) / s)
    xi = thermo_offdiag(params)
    epsilon_diamond = (m * (1 - q) / s) ** 2 / (2 * (1 + xi))
    epsilon_tilde = math.sqrt(epsilon_diamond)
    epsilon_lower = (1 - q) * m / (2 * s)

    profile_max = _profile_max(lambda t: thermo_profile(t, params), 4 * math.pi / (m + n), 2 * math.pi / (m + n))
    _agree("delta_group^2", delta_group ** 2, profile_max ** 2)
    _agree("delta_charge", delta_charge, m - chi)
    _agree("frak_b", frak_b, math.sqrt(8 * dual_hs2))
    purified, diamond = dephasing_distances((1 - xi) / 2, 0.0)
    _agree("epsilon_tilde^2", epsilon_diamond, purified ** 2)
    _agree("epsilon_diamond_upper", epsilon_diamond, diamond)
    rho0, rho1 = thermo_complementary_states(params)
    _agree("epsilon_lower", epsilon_lower, 0.5 * trace_distance(rho0, rho1))

    notes = ["single-erasure mixture", "epsilon_leading is first order in m/n"]
    if 4 * m > n:
        notes.append("m not small against n")
    return ClosedFormRecord(
        epsilon_tilde=epsilon_tilde,
        epsilon_leading=(1 - q) * m / (2 * n),
        epsilon_lower=epsilon_lower,
        epsilon_diamond_upper=epsilon_diamond,
        delta_group=delta_group,
        delta_point=delta_point,
        delta_charge=delta_charge,
        chi=chi,
        frak_b=frak_b,
        dual_HS_coeff=dual_hs,
        dual_HS2_coeff=dual_hs2,
        offdiag=xi,
        notes=notes,
    )


def _single_erasure(noise: LocalNoise) -> bool:
    return noise.is_erasure and noise.model == "single" and bool(np.allclose(noise.probs, 1.0 / noise.n_sites))


def thermo_registered_lower(params: ThermoParams, noise: LocalNoise) -> Dict[str, float]:
    """Code-specific lower bounds on ε; empty unless the noise is the uniform single-erasure mixture"""
    if not _single_erasure(noise) or noise.n_sites != params.n:
        return {}
    return {"thermo_complementary": thermo_closed_forms(params).epsilon_lower}


def thermo_optimal_recovery(params: ThermoParams, code: Optional[U1Code] = None,
                            sectors: Optional[List[Sector]] = None) -> SectorRecovery:
    """
    Recovery of the thermodynamic code under the single-erasure mixture.

    On each erased site, with the flag projected out,

        A = |0_L><(m-1)_{n-1}| + |1_L><φ_1|
        B = |0_L><φ_0| + |1_L><(-m+1)_{n-1}|

    and the rest of the sector goes to |0_L>.  The corrected channel is a
    dephasing with off-diagonal factor thermo_offdiag(params).

    Raises:
        DomainError: n < m + 4, or sectors that are not single erasures
    """
    n, m, q = params.n, params.m, params.q
    if n < m + 4:
        raise DomainError(f"Recovery vectors coincide for n={n}, m={m}; n >= m + 4 is required")
    code = code or thermo_code(params)
    if sectors is None:
        sectors = encode_sectors(code, erasure_noise(n))
    denominator = n + (2 * q - 1) * m
    u = math.sqrt((n - m) / denominator)
    v = math.sqrt(2 * q * m / denominator)
    ones = np.zeros(2 ** (n - 1))
    ones[-1] = 1.0
    zeros = np.zeros(2 ** (n - 1))
    zeros[0] = 1.0
    phi1 = u * dicke_state(n - 1, -m - 1) + v * ones
    phi0 = u * dicke_state(n - 1, m + 1) + v * zeros
    e0, e1 = np.eye(2)
    a_op = np.outer(e0, dicke_state(n - 1, m - 1)) + np.outer(e1, phi1)
    b_op = np.outer(e0, phi0) + np.outer(e1, dicke_state(n - 1, -m + 1))
    dump = default_dump(code)

    blocks = []
    for sector in sectors:
        if not sector.label.startswith("erased[") or "," in sector.label:
            raise DomainError(f"Sector {sector.label} is not a single erasure")
        if sector.native_dim != 2 ** (n - 1):
            raise DimensionError(f"Sector {sector.label} has native dimension {sector.native_dim}")
        basis = np.eye(sector.native_dim) if sector.basis is None else sector.basis
        partial = np.stack([a_op @ basis, b_op @ basis]).astype(complex)
        blocks.append(complete_recovery(partial, dump))
    return SectorRecovery(blocks, "thermo_optimal")


# ----------------------------------------------------------------------------
# Reed-Muller codes
# ----------------------------------------------------------------------------

def rm_generator(r: int, t: int) -> np.ndarray:
    """
    Generator of the classical R(r, t): one row per Boolean monomial of
    degree <= r (by degree, then lexicographic), evaluated at the points of
    {0,1}^t in index order
    """
    if not 0 <= r <= t:
        raise DomainError(f"Reed-Muller order r={r} must lie in [0, {t}]")
    points = np.array(list(itertools.product([0, 1], repeat=t)), dtype=int)
    rows = []
    for degree in range(r + 1):
        for variables in itertools.combinations(range(t), degree):
            rows.append(np.prod(points[:, list(variables)], axis=1) if variables else np.ones(2 ** t, dtype=int))
    return np.array(rows, dtype=int)


def rm_codewords(generator: np.ndarray) -> np.ndarray:
    """Every codeword spanned by the generator rows, mod 2"""
    k = generator.shape[0]
    coefficients = np.array(list(itertools.product([0, 1], repeat=k)), dtype=int)
    return (coefficients @ generator) % 2


def shortened_rm(r: int, t: int) -> np.ndarray:
    """R̄(r, t): codewords of R(r, t) with first digit 0, that digit deleted"""
    words = rm_codewords(rm_generator(r, t))
    kept = words[words[:, 0] == 0][:, 1:]
    return np.unique(kept, axis=0)


def _basis_rows(words: np.ndarray) -> np.ndarray:
    """A row basis of a binary linear code given all its words"""
    basis: List[np.ndarray] = []
    pivots: List[int] = []
    for word in words:
        reduced = word.copy()
        for row, pivot in zip(basis, pivots):
            if reduced[pivot]:
                reduced = (reduced + row) % 2
        nonzero = np.flatnonzero(reduced)
        if len(nonzero):
            pivot = int(nonzero[0])
            for index, row in enumerate(basis):
                if row[pivot]:
                    basis[index] = (row + reduced) % 2
            basis.append(reduced)
            pivots.append(pivot)
    return np.array(basis, dtype=int)


def rm_code(params: RmParams) -> U1Code:
    """
    Quantum Reed-Muller code: |c_0> = 2^{-t/2} Σ_{x∈R̄(1,t)} |x>,
    |c_1> = 2^{-t/2} Σ_{x∈R̄(1,t)} |1+x>, with H_L = ½Z_L and H_S = -½ΣZ_l

    Raises:
        DimensionError: t beyond the dense cap
        CertificationError: the shortened code has the wrong weight spectrum
    """
    t, n = params.t, params.n
    if t > RM_DENSE_MAX_T:
        raise DimensionError(f"Dense Reed-Muller codes stop at t={RM_DENSE_MAX_T}; use rm_closed_forms")
    words = shortened_rm(1, t)
    if len(words) != 2 ** t:
        raise CertificationError(f"R̄(1,{t}) has {len(words)} words, expected {2 ** t}")
    weights = words.sum(axis=1)
    if not np.all((weights == 0) | (weights == 2 ** (t - 1))):
        raise CertificationError(f"Nonzero words of R̄(1,{t}) must have weight {2 ** (t - 1)}")
    amplitude = 2 ** (-t / 2)
    c0 = np.zeros(2 ** n)
    c1 = np.zeros(2 ** n)
    for word in words:
        c0[_bits_to_index(word)] = amplitude
        c1[_bits_to_index(1 - word)] = amplitude
    encoder = make_channel([np.stack([c0, c1], axis=1).astype(complex)])
    return make_code(encoder, np.array([0.5, -0.5]), _charge_diagonal(n), name="rm",
                     params=params.to_dict(), n_sites=n, site_dim=2, site_charge=SITE_CHARGE)


def rm_stabilizers(params: RmParams) -> Tuple[np.ndarray, np.ndarray]:
    """(X, Z) stabilizer generators as binary rows: R̄(1,t) and R̄(t-2,t)"""
    t = params.t
    return _basis_rows(shortened_rm(1, t)), _basis_rows(shortened_rm(t - 2, t))


def rm_stabilizer_residual(params: RmParams, code: Optional[U1Code] = None) -> float:
    """
    Largest deviation from the CSS structure: anticommuting generator
    pairs count 1, otherwise the largest ‖S|c> - |c>‖ over generators
    and codewords
    """
    code = code or rm_code(params)
    x_rows, z_rows = rm_stabilizers(params)
    if np.any((x_rows @ z_rows.T) % 2):
        return 1.0
    w = code.isometry
    index = np.arange(w.shape[0])
    residual = 0.0
    for row in x_rows:
        flipped = w[index ^ _bits_to_index(row)]
        residual = max(residual, float(np.max(np.abs(flipped - w))))
    for row in z_rows:
        parity = _weights_of(index & _bits_to_index(row))
        signed = np.where(parity[:, None] % 2 == 1, -w, w)
        residual = max(residual, float(np.max(np.abs(signed - w))))
    return residual


def _weights_of(values: np.ndarray) -> np.ndarray:
    weights = np.zeros_like(values)
    remaining = values.copy()
    while np.any(remaining):
        weights += remaining & 1
        remaining >>= 1
    return weights


def rm_profile(thetas: np.ndarray, params: RmParams) -> np.ndarray:
    """P(θ) = √(1 - |(n + cos((n+1)θ/2))/(n+1)|²)"""
    n = params.n
    overlap = (n + np.cos((n + 1) * np.asarray(thetas) / 2)) / (n + 1)
    return np.sqrt(np.maximum(0.0, 1 - np.abs(overlap) ** 2))


def rm_closed_forms(params: RmParams) -> ClosedFormRecord:
    """Closed-form figures of the Reed-Muller code; it corrects any single erasure exactly"""
    n = params.n
    delta_group = 2 * math.sqrt(n) / (n + 1)
    profile_max = _profile_max(lambda t: rm_profile(t, params), 4 * math.pi / (n + 1), 2 * math.pi / (n + 1))
    _agree("delta_group^2", delta_group ** 2, profile_max ** 2)
    frak_b = math.sqrt(2 * n)
    _agree("frak_b", frak_b, math.sqrt(8 * n / 4))
    return ClosedFormRecord(
        epsilon_tilde=0.0,
        epsilon_leading=0.0,
        epsilon_lower=0.0,
        epsilon_diamond_upper=0.0,
        delta_group=delta_group,
        delta_point=math.sqrt(n + 1),
        delta_charge=1.0,
        chi=0.0,
        frak_b=frak_b,
        dual_HS_coeff=0.0,
        dual_HS2_coeff=n / 4,
        delta_group_bound=_group_bound(1.0, float(n)),
        notes=["exact error correction of single erasures"],
    )


def rm_transversal_denominator(params: RmParams) -> int:
    """Denominator D of the transversal logical rotation exp(-iπZ/D)"""
    return 2 ** (params.t - 1)
