"""
Covariance-violation measures of a U(1) code.

A code carries its encoder, the logical and physical charges and their
common period.  The measures are the global ones (worst-case, Choi and
diamond variants maximized over θ), the local one at θ = 0 (square root of
a channel QFI), the charge-conservation violation δ_C, the charge
fluctuation χ and the variance quantity ℬ.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from quantum.channel import Channel, CPMap, U1Rep, make_u1rep, period_of
from quantum.metric import (
    channel_qfi_at_zero, choi_purified_distance, diamond_distance, numerical_range_distance,
    worst_case_purified_distance
)
from quantum.spectral import eigh, range_basis, spectral_range
from system.core import (
    NUM_TOL, RESTARTS, SDP_THETA_GRID, STRUCT_TOL, THETA_GRID, THETA_REFINE_TOP, THETA_TOL,
    Certification, DistanceResult, make_rng
)
from system.errors import CertificationError, DimensionError, DomainError, SdpError

logger = logging.getLogger(__name__)

# θ points per vectorized numerical-range batch
THETA_CHUNK = 64
BLOCH_GRID = (720, 360)
# agreement required between the diamond SDP scan and the numerical-range δ_G
DIAMOND_CHECK_TOL = 1e-5


@dataclass
class U1Code:
    """
    Encoder from the logical system L into the physical system S together
    with the charges H_L, H_S and their common period.

    The physical system may be split into `n_sites` identical sites of
    dimension `site_dim`, leftmost site most significant; `site_charge`
    is then the diagonal of the local charge so that H_S = Σ_l h_l.
    """
    encoder: Channel
    logical: U1Rep
    physical: U1Rep
    tau: float
    name: str = "code"
    params: Dict[str, Any] = field(default_factory=dict)
    n_sites: int = 1
    site_dim: int = 0
    site_charge: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.encoder.dim_in != self.logical.dim:
            raise DimensionError(f"Encoder input {self.encoder.dim_in} != logical dim {self.logical.dim}")
        if self.encoder.dim_out != self.physical.dim:
            raise DimensionError(f"Encoder output {self.encoder.dim_out} != physical dim {self.physical.dim}")
        if self.site_dim == 0:
            self.site_dim = self.physical.dim
        if self.site_dim ** self.n_sites != self.physical.dim:
            raise DimensionError(f"{self.n_sites} sites of dim {self.site_dim} do not make {self.physical.dim}")
        if self.logical.spread <= STRUCT_TOL or self.physical.spread <= STRUCT_TOL:
            raise DomainError("Logical and physical charges must both be non-constant")

    @property
    def d_logical(self) -> int:
        return self.logical.dim

    @property
    def d_physical(self) -> int:
        return self.physical.dim

    @property
    def isometric(self) -> bool:
        return self.encoder.is_isometric

    @property
    def isometry(self) -> Optional[np.ndarray]:
        """W with ℰ(ρ) = WρW†, or None"""
        return self.encoder.isometry() if self.isometric else None

    def scaled(self, factor: float) -> "U1Code":
        """Same encoder with both charges multiplied by factor"""
        charge = None if self.site_charge is None else self.site_charge * factor
        return U1Code(self.encoder, self.logical.scaled(factor), self.physical.scaled(factor),
                      self.tau / factor, self.name, dict(self.params), self.n_sites, self.site_dim, charge)

    def pulled_back_charge(self, power: int = 1) -> np.ndarray:
        """ℰ†(H_S^power)"""
        return sum(k.conj().T @ _apply_power(self.physical, k, power) for k in self.encoder.kraus)


def _apply_power(rep: U1Rep, x: np.ndarray, power: int) -> np.ndarray:
    for _ in range(power):
        x = rep.apply(x)
    return x


def make_code(encoder: Channel, h_logical: np.ndarray, h_physical: np.ndarray, name: str = "code",
              params: Optional[Dict[str, Any]] = None, n_sites: int = 1, site_dim: int = 0,
              site_charge: Optional[np.ndarray] = None) -> U1Code:
    """
    Build a U1Code with the common period of both charges.
    One-dimensional charge arrays are diagonals.
    """
    tau = period_of(np.asarray(h_logical), np.asarray(h_physical))
    logical = make_u1rep(h_logical, tau)
    physical = make_u1rep(h_physical, tau)
    return U1Code(encoder, logical, physical, tau, name, params or {}, n_sites, site_dim,
                  None if site_charge is None else np.asarray(site_charge, dtype=float))


def scan_theta(profile: Callable[[np.ndarray], np.ndarray], tau: float, refine: Optional[Callable[[float], float]] = None,
               grid: int = THETA_GRID, top: int = THETA_REFINE_TOP) -> Tuple[float, float]:
    """
    Maximize a function of θ over one period: uniform grid, then bounded
    scalar refinement around the top grid maxima

    Args:
        profile: Vectorized θ-profile evaluated on the grid
        tau: Period
        refine: Scalar profile used in refinement (defaults to profile)
        grid: Number of grid points on [0, tau)
        top: Number of grid maxima refined

    Returns:
        Tuple of the maximum and its θ in [0, tau)
    """
    thetas = np.linspace(0.0, tau, grid, endpoint=False)
    values = np.asarray(profile(thetas), dtype=float)
    if refine is None:
        def refine(theta):
            return float(profile(np.array([theta]))[0])

    step = tau / grid
    best_value, best_theta = -np.inf, 0.0
    for index in np.argsort(-values, kind="stable")[:top]:
        center = thetas[index]
        start = float(refine(center))
        if start > best_value:
            best_value, best_theta = start, center
        result = minimize_scalar(lambda th: -refine(th), bounds=(center - step, center + step), method="bounded",
                                 options={"xatol": THETA_TOL})
        if -result.fun > best_value:
            best_value, best_theta = float(-result.fun), float(result.x)
    return best_value, float(np.mod(best_theta, tau))


class EncodedRotation:
    """
    W†U_S(θ)W = Σ_η e^{-iθη} A_η for an isometric encoder, with A_η = W†P_ηW
    over the distinct physical charges η.  Also U_L(θ) from the logical
    spectrum.
    """

    def __init__(self, code: U1Code):
        w = code.isometry
        if w is None:
            raise DomainError("Encoded rotation requires an isometric encoder")
        self.w = w
        physical = code.physical
        if physical.diagonal:
            values = np.round(physical.H, 9)
            self.etas = np.unique(values)
            self.blocks = np.stack([w[values == eta].conj().T @ w[values == eta] for eta in self.etas])
        else:
            spectrum = eigh(physical.H)
            values = np.round(spectrum.eigenvalues, 9)
            self.etas = np.unique(values)
            projected = spectrum.eigenvectors.conj().T @ w
            self.blocks = np.stack([projected[values == eta].conj().T @ projected[values == eta]
                                    for eta in self.etas])
        logical = eigh(code.logical.matrix())
        self.logical_values = logical.eigenvalues
        self.logical_vectors = logical.eigenvectors

    def overlaps(self, thetas: np.ndarray) -> np.ndarray:
        """M(θ) = U_L(θ)† W† U_S(θ) W for a vector of θ -> (len, d_L, d_L)"""
        thetas = np.atleast_1d(thetas)
        phases = np.exp(-1j * np.outer(thetas, self.etas))
        rotated = np.einsum("te,eij->tij", phases, self.blocks)
        v = self.logical_vectors
        back = np.exp(1j * np.outer(thetas, self.logical_values))
        u_dag = np.einsum("ik,tk,jk->tij", v, back, v.conj())
        return u_dag @ rotated


def _numerical_range_profile(ms: np.ndarray, phi_grid: int = 256) -> np.ndarray:
    """max_φ λ_min(Re(e^{-iφ}M)) per stacked M on a φ grid, chunked"""
    phis = np.linspace(0.0, 2 * np.pi, phi_grid, endpoint=False)
    out = np.empty(len(ms))
    phases = np.exp(-1j * phis)[None, :, None, None]
    for start in range(0, len(ms), THETA_CHUNK):
        chunk = ms[start:start + THETA_CHUNK]
        rotated = phases * chunk[:, None, :, :]
        herm = (rotated + np.conj(np.swapaxes(rotated, -1, -2))) / 2
        out[start:start + THETA_CHUNK] = np.max(np.linalg.eigvalsh(herm)[..., 0], axis=1)
    return np.maximum(out, 0.0)


def delta_group(code: U1Code) -> DistanceResult:
    """δ_G = max_θ P(𝒰_{S,θ}∘ℰ, ℰ∘𝒰_{L,θ})"""
    if code.isometric:
        rotation = EncodedRotation(code)

        def profile(thetas):
            d = _numerical_range_profile(rotation.overlaps(thetas))
            return np.sqrt(np.maximum(0.0, 1.0 - d ** 2))

        def refine(theta):
            d, _ = numerical_range_distance(rotation.overlaps(np.array([theta]))[0])
            return float(np.sqrt(max(0.0, 1.0 - d * d)))

        value, theta = scan_theta(profile, code.tau, refine)
        return DistanceResult(value, Certification.EXACT, argmax=theta, method="numerical_range")

    logger.info(f"{code.name}: non-isometric encoder, δ_G from heuristic worst case on {SDP_THETA_GRID} θ")

    def distance(theta):
        first, second = _conjugated_encoders(code, theta)
        return worst_case_purified_distance(first, second).value

    value, theta = scan_theta(lambda ts: np.array([distance(t) for t in ts]), code.tau, distance,
                              grid=SDP_THETA_GRID, top=THETA_REFINE_TOP)
    return DistanceResult(value, Certification.HEURISTIC, argmax=theta, method="multistart")


def _conjugated_encoders(code: U1Code, theta: float) -> Tuple[CPMap, CPMap]:
    """(𝒰_{S,θ}∘ℰ, ℰ∘𝒰_{L,θ})"""
    kraus = code.encoder.kraus
    rotated = np.stack([code.physical.rotate(theta, k) for k in kraus])
    u_l = code.logical.unitary(theta)
    return CPMap(rotated), CPMap(kraus @ u_l)


def delta_group_choi(code: U1Code) -> float:
    """δ̄_G = max_θ P̄(𝒰_{S,θ}∘ℰ, ℰ∘𝒰_{L,θ})"""
    if code.isometric:
        rotation = EncodedRotation(code)
        d = code.d_logical

        def profile(thetas):
            f = np.abs(np.einsum("tii->t", rotation.overlaps(thetas))) / d
            return np.sqrt(np.maximum(0.0, 1.0 - f ** 2))

        value, _ = scan_theta(profile, code.tau)
        return value

    def distance(theta):
        return choi_purified_distance(*_conjugated_encoders(code, theta))

    value, _ = scan_theta(lambda ts: np.array([distance(t) for t in ts]), code.tau, distance)
    return value


def delta_group_diamond(code: U1Code, cross_check: bool = True,
                        reference: Optional[DistanceResult] = None) -> DistanceResult:
    """
    δ_{G,⋄} = max_θ D⋄(𝒰_{S,θ}∘ℰ, ℰ∘𝒰_{L,θ}) from a Watrous SDP per θ on a
    coarse grid, refined around the top maxima.

    For isometric encoders the diamond and worst-case purified distances of
    the two isometries coincide; with cross_check the scan is compared to the
    numerical-range δ_G and certified by it.  The coarse scan alone is
    reported as heuristic.

    Raises:
        CertificationError: the SDP scan and the numerical-range value disagree
    """
    solved = [True]

    def distance(theta):
        result = _diamond_at(code, theta)
        if result is None:
            solved[0] = False
            return 0.0
        if result.certified != Certification.EXACT:
            solved[0] = False
        return result.value

    value, theta = scan_theta(lambda ts: np.array([distance(t) for t in ts]), code.tau, distance,
                              grid=SDP_THETA_GRID, top=THETA_REFINE_TOP)
    if not (code.isometric and cross_check):
        return DistanceResult(value, Certification.HEURISTIC, argmax=theta, method="watrous_sdp_scan")

    exact = reference if reference is not None else delta_group(code)
    gap = abs(value - exact.value)
    if gap > DIAMOND_CHECK_TOL:
        raise CertificationError(f"{code.name}: diamond SDP scan {value:.9f} (θ={theta:.6f}) differs from the "
                                 f"numerical-range δ_G {exact.value:.9f} (θ={exact.argmax:.6f})", gap)
    if not solved[0]:
        logger.warning(f"{code.name}: some diamond SDPs were not certified; the scan agrees with δ_G")
    return DistanceResult(value, Certification.EXACT, argmax=theta, method="watrous_sdp_scan+numerical_range")


def _diamond_at(code: U1Code, theta: float) -> Optional[DistanceResult]:
    first, second = _conjugated_encoders(code, theta)
    columns = np.concatenate([np.concatenate(list(first.kraus), axis=1),
                              np.concatenate(list(second.kraus), axis=1)], axis=1)
    basis = range_basis(columns, 1e-12)
    first = CPMap(np.einsum("ji,ajk->aik", basis.conj(), first.kraus))
    second = CPMap(np.einsum("ji,ajk->aik", basis.conj(), second.kraus))
    try:
        return diamond_distance(first, second)
    except SdpError as e:
        logger.warning(f"{code.name}: diamond SDP failed at θ={theta:.6f}, point excluded: {e}")
        return None


def encoder_derivative(code: U1Code) -> Tuple[np.ndarray, np.ndarray]:
    """Kraus K_i of ℰ and ∂K_i = -i(H_S K_i - K_i H_L) of θ ↦ 𝒰_{S,θ}∘ℰ∘𝒰_{L,θ}†"""
    kraus = code.encoder.kraus
    h_l = code.logical.matrix()
    dkraus = np.stack([-1j * (code.physical.apply(k) - k @ h_l) for k in kraus])
    return kraus, dkraus


def delta_point(code: U1Code) -> DistanceResult:
    """δ_P = √F of the conjugated encoder family at θ = 0"""
    kraus, dkraus = encoder_derivative(code)
    qfi = channel_qfi_at_zero(kraus, dkraus)
    return DistanceResult(float(np.sqrt(max(0.0, qfi.value))), qfi.certified, method=qfi.method)


def delta_charge(code: U1Code) -> float:
    """δ_C = Δ(H_L - ℰ†(H_S))"""
    return spectral_range(code.logical.matrix() - code.pulled_back_charge())


def extreme_logical_states(code: U1Code) -> Tuple[np.ndarray, np.ndarray]:
    """(|0_L>, |1_L>): eigenvectors of the largest and smallest H_L eigenvalue"""
    if code.d_logical < 2:
        raise DimensionError("Charge fluctuation needs a logical dimension of at least 2")
    vectors = eigh(code.logical.matrix()).eigenvectors
    return vectors[:, -1], vectors[:, 0]


def charge_fluctuation(code: U1Code) -> float:
    """χ = <0_L|ℰ†(H_S)|0_L> - <1_L|ℰ†(H_S)|1_L>"""
    top, bottom = extreme_logical_states(code)
    pulled = code.pulled_back_charge()
    return float(np.vdot(top, pulled @ top).real - np.vdot(bottom, pulled @ bottom).real)


def frak_b(code: U1Code) -> DistanceResult:
    """
    ℬ = max_ψ √(8 Var_{H_S}(ℰ(ψ))) over pure logical ψ.

    Qubit codes scan the Bloch sphere and refine locally; larger logical
    dimensions use multi-start ascent and are labelled heuristic.
    """
    first = code.pulled_back_charge(1)
    second = code.pulled_back_charge(2)

    def variance(psi: np.ndarray) -> float:
        psi = psi / np.linalg.norm(psi)
        mean = np.vdot(psi, first @ psi).real
        return 8 * (np.vdot(psi, second @ psi).real - mean ** 2)

    cap = np.sqrt(2) * code.physical.spread
    if code.d_logical == 2:
        value, psi = _bloch_maximum(first, second, variance)
        certification = Certification.EXACT
    else:
        value, psi = _multistart_maximum(code.d_logical, variance)
        certification = Certification.HEURISTIC
    result = float(np.sqrt(max(0.0, value)))
    if result > cap + NUM_TOL:
        logger.warning(f"{code.name}: ℬ={result:.9f} exceeds its cap √2ΔH_S={cap:.9f}")
    return DistanceResult(result, certification, witness=psi, method="bloch_grid" if code.d_logical == 2 else "multistart")


def _bloch(theta, phi):
    return np.stack([np.cos(theta / 2) + 0j * phi, np.exp(1j * phi) * np.sin(theta / 2)], axis=-1)


def _bloch_maximum(first, second, variance) -> Tuple[float, np.ndarray]:
    thetas = np.linspace(0.0, np.pi, BLOCH_GRID[1] + 1)
    phis = np.linspace(0.0, 2 * np.pi, BLOCH_GRID[0], endpoint=False)
    grid_t, grid_p = np.meshgrid(thetas, phis, indexing="ij")
    states = _bloch(grid_t, grid_p)
    mean = np.einsum("...i,ij,...j->...", states.conj(), first, states).real
    square = np.einsum("...i,ij,...j->...", states.conj(), second, states).real
    values = 8 * (square - mean ** 2)
    index = np.unravel_index(int(np.argmax(values)), values.shape)
    start = np.array([grid_t[index], grid_p[index]])
    result = minimize(lambda x: -variance(_bloch(x[0], x[1])), start, method="Nelder-Mead",
                      options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 2000})
    best = float(values[index])
    psi = _bloch(start[0], start[1])
    if -result.fun > best:
        best = float(-result.fun)
        psi = _bloch(result.x[0], result.x[1])
    return best, psi


def _multistart_maximum(dim: int, variance, restarts: int = RESTARTS) -> Tuple[float, np.ndarray]:
    best, best_psi = -np.inf, None
    for seed in range(restarts):
        rng = make_rng(seed)
        x0 = rng.standard_normal(2 * dim)
        result = minimize(lambda x: -variance(x[:dim] + 1j * x[dim:]), x0, method="L-BFGS-B")
        if -result.fun > best:
            best = float(-result.fun)
            best_psi = result.x[:dim] + 1j * result.x[dim:]
    return best, best_psi / np.linalg.norm(best_psi)


def delta_point_star(kraus: np.ndarray, dkraus: np.ndarray) -> DistanceResult:
    """
    √F at θ = 0 of the recovered family ℛ∘𝒩∘𝒰_{S,θ}∘ℰ∘𝒰_{L,θ}†, given its
    Kraus operators and their derivatives (see SectorRecovery.corrected_family).
    Evaluated at a supplied recovery, so this is an upper bound on the
    minimum over recoveries achieving ε.
    """
    qfi = channel_qfi_at_zero(kraus, dkraus)
    return DistanceResult(float(np.sqrt(max(0.0, qfi.value))), qfi.certified, method=qfi.method)


@dataclass
class SymmetryReport:
    """All covariance-violation measures of one code"""
    delta_group: float
    delta_group_choi: float
    delta_group_diamond: float
    delta_point: float
    delta_charge: float
    chi: float
    frak_b: float
    flags: Dict[str, str] = field(default_factory=dict)
    theta_max: Optional[float] = None

    def check(self, isometric: bool) -> List[str]:
        """Consistency conditions between the measures; returns the failures"""
        problems = []
        if self.delta_group_diamond < self.delta_group ** 2 / 2 - NUM_TOL:
            problems.append("δ_G⋄ < δ_G²/2")
        if isometric and abs(self.delta_group_diamond - self.delta_group) > DIAMOND_CHECK_TOL:
            problems.append("δ_G⋄ != δ_G for an isometric encoder")
        if isometric and self.delta_point < self.delta_charge - NUM_TOL:
            problems.append("δ_P < δ_C for an isometric encoder")
        if self.delta_group_choi > self.delta_group + NUM_TOL and self.flags.get("delta_group") == "exact":
            problems.append("δ̄_G > δ_G")
        return problems

    def to_dict(self) -> Dict[str, Any]:
        return {
            "delta_group": self.delta_group,
            "delta_group_choi": self.delta_group_choi,
            "delta_group_diamond": self.delta_group_diamond,
            "delta_point": self.delta_point,
            "delta_charge": self.delta_charge,
            "chi": self.chi,
            "frak_b": self.frak_b,
            "theta_max": self.theta_max,
            "flags": dict(sorted(self.flags.items())),
        }


def symmetry_report(code: U1Code) -> SymmetryReport:
    """Evaluate every measure of the code"""
    group = delta_group(code)
    diamond = delta_group_diamond(code, reference=group)
    point = delta_point(code)
    variance = frak_b(code)
    report = SymmetryReport(
        delta_group=group.value,
        delta_group_choi=delta_group_choi(code),
        delta_group_diamond=diamond.value,
        delta_point=point.value,
        delta_charge=delta_charge(code),
        chi=charge_fluctuation(code),
        frak_b=variance.value,
        flags={"delta_group": group.certified.value, "delta_group_diamond": diamond.certified.value,
               "delta_point": point.certified.value, "frak_b": variance.certified.value},
        theta_max=group.argmax,
    )
    for problem in report.check(code.isometric):
        logger.warning(f"{code.name}: {problem}")
    return report
