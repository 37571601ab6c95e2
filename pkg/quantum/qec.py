"""
Error-correction quantities of a noisy code.

The Choi inaccuracy ε̄ is solved exactly, one SDP per noise sector, since
the entanglement fidelity is linear in each sector's recovery Choi matrix.
The worst-case inaccuracy ε and its diamond variant are reported as
brackets: certified lower bounds against the worst case evaluated at a set
of candidate recoveries.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from quantum.bound import ell_inverse
from quantum.channel import (
    Channel, DephasingParams, extract_dephasing, identity_channel, make_channel
)
from quantum.metric import (
    dephasing_distances, diamond_distance, entanglement_infidelity, worst_case_purified_distance
)
from quantum.noise import (
    LocalNoise, Sector, SectorRecovery, complete_recovery, default_dump, encode_sectors
)
from quantum.sdp import Affine, SdpBuilder
from quantum.spectral import eigh, herm_func
from quantum.symmetry import U1Code, extreme_logical_states, scan_theta
from system.core import (
    FIT_TOL, NUM_TOL, SDP_THETA_GRID, Certification, DistanceResult
)
from system.errors import DephasingFitError, DimensionError, DomainError, SdpError

logger = logging.getLogger(__name__)

# largest recovery Choi matrix (d_L·k) solved exactly per sector
SDP_BLOCK_MAX = 40
DERIVATIVE_STEP = 1e-5
COVARIANCE_TEST_POINTS = 16


@dataclass
class ChoiInaccuracy:
    """ε̄ with the recovery achieving it"""
    value: float
    recovery: SectorRecovery
    certified: Certification
    method: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {"value": self.value, "certified": self.certified.value, "method": self.method}


@dataclass
class EpsilonBracket:
    """lower <= quantity <= upper, with the recovery achieving the upper side"""
    lower: float
    upper: float
    recovery_witness: Optional[SectorRecovery] = None
    method: Dict[str, str] = field(default_factory=dict)
    certified: bool = True

    def __post_init__(self):
        if self.lower > self.upper + 1e-9:
            logger.warning(f"Bracket inverted: lower {self.lower:.12f} > upper {self.upper:.12f}")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def to_dict(self) -> Dict[str, Any]:
        return {"lower": self.lower, "upper": self.upper, "certified": self.certified,
                "method": dict(sorted(self.method.items()))}


def _sectors(code: U1Code, noise: LocalNoise, sectors: Optional[List[Sector]]) -> List[Sector]:
    return encode_sectors(code, noise) if sectors is None else sectors


def _normalize_blocks(blocks: np.ndarray) -> np.ndarray:
    """R ← R G^{-1/2} with G = ΣR†R, making a near trace-preserving family exact"""
    gram = np.einsum("bji,bjk->ik", blocks.conj(), blocks)
    inverse_root = herm_func(gram, lambda values: 1.0 / np.sqrt(values), "inverse sqrt")
    return blocks @ inverse_root


def _sector_choi_sdp(sector: Sector, d_logical: int) -> Optional[np.ndarray]:
    """
    Recovery of one sector maximizing Σ_a |Tr(R F̃_a)|² as Tr(J T) with
    T = Σ_a vec(F̃_a†)vec(F̃_a†)†, J ⪰ 0 and Tr_out J = 1

    Returns:
        Kraus (b, d_L, k) or None when the solver does not certify
    """
    k = sector.dim
    n = d_logical * k
    vectors = np.conj(np.transpose(sector.kraus, (0, 2, 1))).reshape(sector.kraus.shape[0], -1)
    target = vectors.T @ vectors.conj()

    builder = SdpBuilder()
    j = builder.hermitian(n)
    builder.psd(j)
    builder.equal(j.partial_trace([d_logical, k], [1]), np.eye(k))
    objective = Affine(np.zeros((1, 1)), {key: np.atleast_2d(np.trace(basis @ target).real).astype(complex)
                                          for key, basis in j.coeffs.items()})
    builder.maximize(objective)
    try:
        result = builder.solve()
    except SdpError as e:
        logger.warning(f"Sector {sector.label}: recovery SDP failed: {e}")
        return None
    if not result.certified:
        logger.warning(f"Sector {sector.label}: recovery SDP not certified ({result.status.value})")
        return None
    spectrum = eigh(result[j], tol=1e-6)
    keep = spectrum.eigenvalues > 1e-10 * max(1.0, spectrum.eigenvalues[-1])
    blocks = np.stack([np.sqrt(value) * vector.reshape(d_logical, k)
                       for value, vector in zip(spectrum.eigenvalues[keep], spectrum.eigenvectors[:, keep].T)])
    return _normalize_blocks(blocks)


def transpose_recovery(sectors: Sequence[Sector], dump: np.ndarray) -> SectorRecovery:
    """
    Petz recovery for the uniform code state: R_a = F̃_a† σ^{-1/2}/√d_L with
    σ = Σ_a F̃_a F̃_a†/d_L, completed onto the dump state
    """
    blocks = []
    for sector in sectors:
        d_logical = sector.kraus.shape[2]
        sigma = np.einsum("aij,akj->ik", sector.kraus, sector.kraus.conj()) / d_logical
        inverse_root = herm_func(sigma, lambda v: np.where(v > 1e-12, 1.0 / np.sqrt(np.abs(v)), 0.0), "inverse sqrt")
        partial = np.conj(np.transpose(sector.kraus, (0, 2, 1))) @ inverse_root / np.sqrt(d_logical)
        blocks.append(complete_recovery(partial, dump))
    return SectorRecovery(blocks, "transpose")


def choi_inaccuracy_of(recovery: SectorRecovery, sectors: Sequence[Sector]) -> float:
    """ε̄ of ℛ∘𝒩∘ℰ at a given recovery"""
    return float(np.sqrt(entanglement_infidelity(recovery.corrected_kraus(sectors))))


def epsilon_choi(code: U1Code, noise: LocalNoise, sectors: Optional[List[Sector]] = None,
                 candidates: Optional[Dict[str, SectorRecovery]] = None) -> ChoiInaccuracy:
    """
    ε̄ = min_ℛ P̄(ℛ∘𝒩∘ℰ, 1_L) with the optimizing recovery.

    Sectors whose recovery Choi exceeds the exact-solve size use the
    transpose channel, and the value is then an upper bound.
    """
    sectors = _sectors(code, noise, sectors)
    dump = default_dump(code)
    transpose = transpose_recovery(sectors, dump)
    blocks = []
    certified = Certification.EXACT
    for index, sector in enumerate(sectors):
        solved = None
        if code.d_logical * sector.dim <= SDP_BLOCK_MAX:
            solved = _sector_choi_sdp(sector, code.d_logical)
        else:
            logger.info(f"Sector {sector.label} of dimension {sector.dim} uses the transpose channel")
        if solved is None:
            certified = Certification.UPPER_BOUND
            blocks.append(transpose.kraus[index])
        else:
            blocks.append(solved)
    options = {"choi_sdp": SectorRecovery(blocks, "choi_sdp"), "transpose": transpose}
    options.update(candidates or {})
    values = {name: choi_inaccuracy_of(recovery, sectors) for name, recovery in options.items()}
    best = min(values, key=lambda name: (values[name], name != "choi_sdp"))
    if best != "choi_sdp" and values[best] < values["choi_sdp"] - NUM_TOL and certified == Certification.EXACT:
        logger.warning(f"Candidate '{best}' beats the exact ε̄ SDP by {values['choi_sdp'] - values[best]:.3e}")
    return ChoiInaccuracy(values[best], options[best], certified, best)


def _worst_case_at(recovery: SectorRecovery, sectors: Sequence[Sector]) -> DistanceResult:
    corrected = recovery.corrected_channel(sectors)
    result = worst_case_purified_distance(corrected, identity_channel(corrected.dim_in))
    if corrected.dim_in == 2:
        try:
            params = extract_dephasing(corrected)
        except DephasingFitError:
            return result
        closed, _ = dephasing_distances(params.p, params.phi)
        if result.certified != Certification.EXACT or abs(closed - result.value) <= 1e-6:
            return DistanceResult(closed, Certification.EXACT, method="rotated_dephasing")
        logger.warning(f"Worst case {result.value:.9f} disagrees with the rotated-dephasing form {closed:.9f}")
    return result


def epsilon_bracket(code: U1Code, noise: LocalNoise, sectors: Optional[List[Sector]] = None,
                    choi: Optional[ChoiInaccuracy] = None, candidates: Optional[Dict[str, SectorRecovery]] = None,
                    registered_lower: Optional[Dict[str, float]] = None) -> EpsilonBracket:
    """
    Bracket on the worst-case inaccuracy ε.

    Lower side: max of ε̄ and registered code-specific lower bounds.  Upper
    side: the smallest worst-case distance over the candidate recoveries.
    """
    sectors = _sectors(code, noise, sectors)
    choi = choi or epsilon_choi(code, noise, sectors, candidates)
    lower, lower_method = (choi.value, "choi") if choi.certified == Certification.EXACT else (0.0, "none")
    for name, value in (registered_lower or {}).items():
        if value > lower:
            lower, lower_method = value, name

    options = {"choi_sdp": choi.recovery, "transpose": transpose_recovery(sectors, default_dump(code))}
    options.update(candidates or {})
    upper, upper_method, witness, certified = np.inf, "", None, False
    for name, recovery in options.items():
        result = _worst_case_at(recovery, sectors)
        if result.value < upper:
            upper, upper_method, witness = result.value, f"{name}:{result.method}", recovery
            certified = result.certified == Certification.EXACT
    if lower > upper + NUM_TOL:
        logger.warning(f"ε bracket inverted: [{lower:.9f}, {upper:.9f}]")
    return EpsilonBracket(lower, upper, witness, {"lower": lower_method, "upper": upper_method}, certified)


def epsilon_diamond_bracket(code: U1Code, noise: LocalNoise, bracket: EpsilonBracket,
                            sectors: Optional[List[Sector]] = None,
                            candidates: Optional[Dict[str, SectorRecovery]] = None) -> EpsilonBracket:
    """ε_⋄ ∈ [ε_lower², min over candidates of D⋄(ℛ∘𝒩∘ℰ, 1)]"""
    sectors = _sectors(code, noise, sectors)
    options = {}
    if bracket.recovery_witness is not None:
        options["witness"] = bracket.recovery_witness
    options.update(candidates or {})
    upper, method, witness, certified = np.inf, "", None, True
    for name, recovery in options.items():
        corrected = recovery.corrected_channel(sectors)
        try:
            result = diamond_distance(corrected, identity_channel(corrected.dim_in))
        except SdpError as e:
            logger.warning(f"Diamond SDP failed for candidate '{name}': {e}")
            continue
        if result.value < upper:
            upper, method, witness = result.value, name, recovery
            certified = result.certified == Certification.EXACT
    if witness is None:
        upper, certified = 1.0, False
    return EpsilonBracket(bracket.lower ** 2, upper, witness, {"lower": "epsilon_lower_squared", "upper": method},
                          certified)


@dataclass
class KlDeviation:
    """
    ΠK_i†K_jΠ = λ_ij Π + ΠB_ijΠ in logical coordinates, over the sector
    Kraus operators of the noisy encoding (cross-sector products vanish)
    """
    lam: np.ndarray
    b_matrices: np.ndarray
    b_norms: np.ndarray
    max_violation: float
    labels: List[str] = field(default_factory=list)

    def recombine(self, h: np.ndarray) -> np.ndarray:
        """Σ_ij h_ij ΠB_ijΠ"""
        return np.einsum("ij,ijkl->kl", h, self.b_matrices)

    @property
    def exact(self) -> bool:
        return self.max_violation <= 1e-8


def kl_deviation(code: U1Code, noise: LocalNoise, sectors: Optional[List[Sector]] = None) -> KlDeviation:
    if not code.isometric:
        raise DomainError("Knill-Laflamme deviation is defined for isometric encoders")
    sectors = _sectors(code, noise, sectors)
    d = code.d_logical
    kraus, labels, owner = [], [], []
    for index, sector in enumerate(sectors):
        for a, f in enumerate(sector.kraus):
            kraus.append(f)
            labels.append(f"{sector.label}#{a}")
            owner.append(index)
    r = len(kraus)
    products = np.zeros((r, r, d, d), dtype=complex)
    for i in range(r):
        for j in range(r):
            if owner[i] == owner[j]:
                products[i, j] = kraus[i].conj().T @ kraus[j]
    lam = np.einsum("ijkk->ij", products) / d
    b = products - lam[:, :, None, None] * np.eye(d)[None, None]
    norms = np.linalg.norm(b, ord=2, axis=(2, 3))
    residual = float(np.max(np.abs(lam[:, :, None, None] * np.eye(d) + b - products)))
    if residual > 1e-10:
        logger.warning(f"KL reconstruction residual {residual:.3e}")
    return KlDeviation(lam, b, norms, float(np.max(norms)), labels)


def _rotated_recovery_choi(block: np.ndarray, sector: Sector, code: U1Code, theta: float) -> np.ndarray:
    """Choi of 𝒰_{L,θ}†∘ℛ_s∘𝒰_{S,θ} on one sector"""
    u_l = code.logical.unitary(theta)
    rotated = u_l.conj().T @ block * sector.output_phases(theta)[None, None, :]
    vectors = np.transpose(rotated, (0, 2, 1)).reshape(rotated.shape[0], -1)
    return vectors.T @ vectors.conj()


def twirl_recovery(recovery: SectorRecovery, sectors: Sequence[Sector], code: U1Code,
                   resolution: int = 64) -> Tuple[SectorRecovery, float]:
    """
    ℛ^cov = (1/N) Σ_j 𝒰_{L,θ_j}†∘ℛ∘𝒰_{S,θ_j} over N uniform θ in one period

    Returns:
        Tuple of the twirled recovery and its covariance residual
        max_θ ‖Choi(𝒰_{L,θ}∘ℛ^cov) - Choi(ℛ^cov∘𝒰_{S,θ})‖ over test angles
    """
    if resolution < 2:
        raise DomainError("Twirl resolution must be at least 2")
    recovery.check(sectors)
    thetas = np.linspace(0.0, code.tau, resolution, endpoint=False)
    d = code.d_logical
    blocks = []
    for sector, block in zip(sectors, recovery.kraus):
        choi = sum(_rotated_recovery_choi(block, sector, code, theta) for theta in thetas) / resolution
        spectrum = eigh(choi, tol=1e-8)
        keep = spectrum.eigenvalues > 1e-12 * max(1.0, spectrum.eigenvalues[-1])
        twirled = np.stack([np.sqrt(v) * vec.reshape(sector.dim, d).T
                            for v, vec in zip(spectrum.eigenvalues[keep], spectrum.eigenvectors[:, keep].T)])
        blocks.append(_normalize_blocks(twirled))
    twirled_recovery = SectorRecovery(blocks, f"{recovery.label}_cov")
    return twirled_recovery, covariance_residual(twirled_recovery, sectors, code)


def covariance_residual(recovery: SectorRecovery, sectors: Sequence[Sector], code: U1Code) -> float:
    """max_θ ‖Choi(𝒰_{L,θ}∘ℛ) - Choi(ℛ∘𝒰_{S,θ})‖ on off-grid test angles"""
    step = code.tau / COVARIANCE_TEST_POINTS
    residual = 0.0
    for theta in (np.arange(COVARIANCE_TEST_POINTS) + 0.37) * step:
        u_l = code.logical.unitary(theta)
        for sector, block in zip(sectors, recovery.kraus):
            left = np.stack([u_l @ r for r in block])
            right = block * sector.output_phases(theta)[None, None, :]
            choi_left = _choi_of(left)
            choi_right = _choi_of(right)
            residual = max(residual, float(np.max(np.abs(choi_left - choi_right))))
    return residual


def _choi_of(kraus: np.ndarray) -> np.ndarray:
    vectors = np.transpose(kraus, (0, 2, 1)).reshape(kraus.shape[0], -1)
    return vectors.T @ vectors.conj()


@dataclass
class RepetitionCode:
    """Repetition encoding C → L⊗A and its recovery, in a chosen logical basis"""
    encoder: Channel
    recovery: Channel
    basis: np.ndarray

    @property
    def d_logical(self) -> int:
        return self.basis.shape[0]


def repetition_code(d_logical: int, basis: Optional[np.ndarray] = None) -> RepetitionCode:
    """
    ℰ^rep(|0_C>) = |0_L 0_A>, ℰ^rep(|1_C>) = |1_L 1_A> with a qubit ancilla A,
    and the recovery with Kraus R_0, R_1 and R_{i>1}.

    Args:
        d_logical: Logical dimension, at least 2
        basis: Columns |0_L>, |1_L>, |2_L>, ... (computational basis by default)
    """
    if d_logical < 2:
        raise DimensionError("Repetition code needs a logical dimension of at least 2")
    basis = np.eye(d_logical, dtype=complex) if basis is None else np.asarray(basis, dtype=complex)
    ket = [basis[:, i] for i in range(d_logical)]
    a0, a1 = np.array([1, 0], dtype=complex), np.array([0, 1], dtype=complex)
    c0, c1 = a0, a1
    encoder = np.stack([np.kron(ket[0], a0), np.kron(ket[1], a1)], axis=1)
    kraus = [np.outer(c0, np.kron(ket[0], a0).conj()) + np.outer(c1, np.kron(ket[1], a1).conj()),
             np.outer(c0, np.kron(ket[1], a0).conj()) + np.outer(c1, np.kron(ket[0], a1).conj())]
    for i in range(2, d_logical):
        kraus.append(np.outer(c0, np.kron(ket[i], a0).conj()) + np.outer(c1, np.kron(ket[i], a1).conj()))
    return RepetitionCode(make_channel([encoder]), make_channel(kraus), basis)


def corrects_bit_flips(rep: RepetitionCode) -> bool:
    """ℛ^rep∘(X_L ⊗ 1)∘ℰ^rep acts as the identity on C for the qubit logical X"""
    if rep.d_logical != 2:
        return False
    flip = rep.basis @ np.array([[0, 1], [1, 0]]) @ rep.basis.conj().T
    noisy = np.kron(flip, np.eye(2)) @ rep.encoder.kraus[0]
    composed = np.stack([r @ noisy for r in rep.recovery.kraus])
    channel = make_channel(composed)
    return bool(np.max(np.abs(channel.choi() - identity_channel(2).choi())) <= 1e-12)


@dataclass
class TwoLevelProtocol:
    """
    𝒩_{C,θ} = ℛ^rep∘(ℛ∘𝒩∘𝒰_{S,θ}∘ℰ ⊗ 1_A)∘ℰ^rep on a qubit C with
    H_C = (ΔH_L/2)Z
    """
    code: U1Code
    sectors: List[Sector]
    recovery: SectorRecovery
    repetition: RepetitionCode
    h_c: np.ndarray

    def logical_kraus(self, theta: float) -> np.ndarray:
        """Kraus of ℛ∘𝒩∘𝒰_{S,θ}∘ℰ"""
        u_l = self.code.logical.unitary(theta)
        return self.recovery.corrected_kraus(self.sectors, self.code, theta) @ u_l

    def _lift(self, logical: np.ndarray) -> np.ndarray:
        enc = self.repetition.encoder.kraus[0]
        out = []
        for r in self.repetition.recovery.kraus:
            for c in logical:
                out.append(r @ np.kron(c, np.eye(2)) @ enc)
        return np.stack(out)

    def kraus(self, theta: float) -> np.ndarray:
        return self._lift(self.logical_kraus(theta))

    def channel(self, theta: float) -> Channel:
        return make_channel(self.kraus(theta), tol=1e-8)

    def xi(self, theta: float) -> complex:
        """<0_C|𝒩_{C,θ}(|0_C><1_C|)|1_C>"""
        kraus = self.kraus(theta)
        return complex(np.sum(kraus[:, 0, 0] * np.conj(kraus[:, 1, 1])))

    def params(self, theta: float) -> DephasingParams:
        """Rotated-dephasing parameters of 𝒩_{C,θ}"""
        return extract_dephasing(self.channel(theta), FIT_TOL)

    def dxi(self, step: float = DERIVATIVE_STEP) -> Tuple[complex, float]:
        """∂ξ at θ = 0 by central differences with one Richardson level, and the error estimate"""
        coarse = (self.xi(step) - self.xi(-step)) / (2 * step)
        fine = (self.xi(step / 2) - self.xi(-step / 2)) / step
        return (4 * fine - coarse) / 3, abs(fine - coarse) / 3

    def local_qfi(self) -> float:
        """|∂ξ|²/(1 - |ξ|²) at θ = 0; infinite for a noiseless protocol"""
        xi0 = abs(self.xi(0.0))
        derivative, _ = self.dxi()
        gap = 1 - xi0 ** 2
        if gap <= 1e-14:
            return np.inf if abs(derivative) > 1e-12 else 0.0
        return abs(derivative) ** 2 / gap

    def family(self) -> Tuple[np.ndarray, np.ndarray]:
        """Kraus and θ-derivatives at 0 of 𝒩_{C,θ}"""
        h_l = self.code.logical.matrix()
        kraus, dkraus = [], []
        for sector, block in zip(self.sectors, self.recovery.kraus):
            # d/dθ Q†K U_S(θ) W at 0 = ∂F̃ - iF̃H_L
            derivative = sector.tangent - 1j * sector.kraus @ h_l
            kraus.append(np.einsum("bij,ajk->baik", block, sector.kraus).reshape(-1, block.shape[1], h_l.shape[0]))
            dkraus.append(np.einsum("bij,ajk->baik", block, derivative).reshape(-1, block.shape[1], h_l.shape[0]))
        return self._lift(np.concatenate(kraus)), self._lift(np.concatenate(dkraus))


def two_level_protocol(code: U1Code, noise: LocalNoise, recovery: SectorRecovery,
                       sectors: Optional[List[Sector]] = None,
                       check_thetas: Optional[Sequence[float]] = None) -> TwoLevelProtocol:
    """
    Assemble the two-level metrology protocol and check that 𝒩_{C,θ} is a
    rotated dephasing channel at the sampled θ

    Raises:
        DephasingFitError: the protocol channel leaves the rotated-dephasing family
    """
    if code.d_logical < 2:
        raise DimensionError("Two-level protocol needs a logical dimension of at least 2")
    sectors = _sectors(code, noise, sectors)
    top, bottom = extreme_logical_states(code)
    vectors = eigh(code.logical.matrix()).eigenvectors
    basis = np.concatenate([top[:, None], bottom[:, None], vectors[:, 1:-1]], axis=1)
    spread = code.logical.spread
    protocol = TwoLevelProtocol(code, sectors, recovery, repetition_code(code.d_logical, basis),
                                spread / 2 * np.diag([1.0, -1.0]))
    samples = np.linspace(0.0, code.tau, 8, endpoint=False) if check_thetas is None else check_thetas
    for theta in samples:
        protocol.params(theta)
    return protocol


def gate_error_bracket(code: U1Code, noise: LocalNoise, epsilon_upper: float, delta_g: float,
                       frak_f: Optional[float], candidates: Dict[str, SectorRecovery],
                       sectors: Optional[List[Sector]] = None, direct: bool = True) -> EpsilonBracket:
    """
    Bracket on the gate implementation error
    γ = min_ℛ max_θ P(ℛ∘𝒩∘𝒰_{S,θ}∘ℰ, 𝒰_{L,θ}).

    Lower: ℓ₁(ΔH_L/(2√𝔉)), or 0 when 𝔉 is unavailable (HKS violated).
    Upper: min(ε + δ_G, direct θ-scan at each candidate recovery).
    """
    sectors = _sectors(code, noise, sectors)
    method = {}
    if frak_f is None or not np.isfinite(frak_f):
        lower = 0.0
        method["lower"] = "hks_infeasible"
    elif frak_f <= 0:
        lower = ell_inverse("l1", np.inf).value
        method["lower"] = "ell1_saturated"
    else:
        lower = ell_inverse("l1", code.logical.spread / (2 * np.sqrt(frak_f))).value
        method["lower"] = "ell1"

    upper, method["upper"] = epsilon_upper + delta_g, "epsilon_plus_delta_group"
    witness = None
    if direct and all(s.covariant for s in sectors):
        for name, recovery in candidates.items():
            def distance(theta, recovery=recovery):
                kraus = recovery.corrected_kraus(sectors, code, theta)
                return worst_case_purified_distance(make_channel(kraus, tol=1e-7),
                                                    identity_channel(code.d_logical)).value

            value, _ = scan_theta(lambda ts: np.array([distance(t) for t in ts]), code.tau, distance,
                                  grid=SDP_THETA_GRID, top=1)
            if value < upper:
                upper, method["upper"], witness = value, f"direct:{name}", recovery
    return EpsilonBracket(lower, upper, witness, method, True)
