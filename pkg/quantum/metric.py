"""
Distance and information measures: state and channel fidelity, purified
distance (worst-case and Choi), diamond distance and quantum Fisher
information of pure states and one-parameter channel families.
"""

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
from joblib import Parallel, delayed
from scipy.optimize import minimize, minimize_scalar

from quantum.channel import CPMap, Channel
from quantum.sdp import Affine, SdpBuilder
from quantum.spectral import (
    as_array, check_hermitian, is_density, psd_sqrt, range_basis, singular_values
)
from system.core import (
    NUM_TOL, PHI_GRID, RESTARTS, STRUCT_TOL, Certification, DistanceResult, SdpStatus, make_rng
)
from system.errors import DimensionError, DomainError

logger = logging.getLogger(__name__)


def _check_state(rho: np.ndarray, name: str) -> np.ndarray:
    rho = as_array(rho)
    if not is_density(rho, 1e-8):
        raise DomainError(f"{name} is not a density matrix")
    return check_hermitian(rho, 1e-8)


def state_fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """f(ρ,σ) = ‖√ρ √σ‖₁, clipped to [0, 1]"""
    rho = _check_state(rho, "rho")
    sigma = _check_state(sigma, "sigma")
    if rho.shape != sigma.shape:
        raise DimensionError(f"State shapes differ: {rho.shape} vs {sigma.shape}")
    value = float(np.sum(singular_values(psd_sqrt(rho) @ psd_sqrt(sigma))))
    return min(1.0, max(0.0, value))


def purified_distance_states(rho: np.ndarray, sigma: np.ndarray) -> float:
    f = state_fidelity(rho, sigma)
    return float(np.sqrt(max(0.0, 1.0 - f * f)))


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    """½‖ρ - σ‖₁"""
    diff = check_hermitian(as_array(rho) - as_array(sigma), 1e-8)
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(diff))))


def choi_fidelity(first: CPMap, second: CPMap) -> float:
    """Fidelity of the normalized Choi states"""
    if (first.dim_in, first.dim_out) != (second.dim_in, second.dim_out):
        raise DimensionError("Channels must have equal dimensions")
    a, b = _compress_outputs([first.kraus, second.kraus])
    return state_fidelity(CPMap(a).choi() / first.dim_in, CPMap(b).choi() / first.dim_in)


def choi_purified_distance(first: CPMap, second: CPMap) -> float:
    f = choi_fidelity(first, second)
    return float(np.sqrt(max(0.0, 1.0 - f * f)))


def entanglement_infidelity(kraus: np.ndarray) -> float:
    """
    1 - f̄² of a channel against the identity, Σ_k(Tr C†C/d - |Tr C|²/d²).
    The terms are individually nonnegative, so no cancellation occurs.
    """
    kraus = np.asarray(kraus)
    d = kraus.shape[1]
    traces = np.einsum("aii->a", kraus)
    norms = np.einsum("aij,aij->a", kraus.conj(), kraus).real
    return float(max(0.0, np.sum(norms / d - np.abs(traces) ** 2 / d ** 2)))


def _compress_outputs(kraus_sets: Sequence[np.ndarray]) -> List[np.ndarray]:
    """Restrict every Kraus output to the joint range"""
    columns = np.concatenate([np.concatenate(list(k), axis=1) for k in kraus_sets], axis=1)
    basis = range_basis(columns, 1e-12)
    if basis.shape[1] >= kraus_sets[0].shape[1]:
        return [np.asarray(k) for k in kraus_sets]
    return [np.einsum("ji,ajk->aik", basis.conj(), k) for k in kraus_sets]


def numerical_range_distance(m: np.ndarray, phi_grid: int = PHI_GRID) -> Tuple[float, float]:
    """
    Distance from 0 to the numerical range of M,
    max_φ max(0, λ_min(Re(e^{-iφ}M)))

    Returns:
        Tuple of the distance and the maximizing φ
    """
    m = as_array(m)
    phis = np.linspace(0.0, 2 * np.pi, phi_grid, endpoint=False)
    values = _min_real_part(m[None, :, :], phis)[0]
    best = int(np.argmax(values))
    step = 2 * np.pi / phi_grid

    def negative(phi):
        return -_min_real_part(m[None, :, :], np.array([phi]))[0, 0]

    refined = minimize_scalar(negative, bounds=(phis[best] - step, phis[best] + step), method="bounded",
                              options={"xatol": 1e-12})
    value, phi = float(values[best]), float(phis[best])
    if refined.success and -refined.fun > value:
        value, phi = float(-refined.fun), float(refined.x)
    return max(0.0, value), phi


def _min_real_part(ms: np.ndarray, phis: np.ndarray) -> np.ndarray:
    """λ_min((e^{-iφ}M + e^{iφ}M†)/2) for a stack of M and a grid of φ -> (len(ms), len(phis))"""
    phases = np.exp(-1j * phis)[None, :, None, None]
    rotated = phases * ms[:, None, :, :]
    herm = (rotated + np.conj(np.swapaxes(rotated, -1, -2))) / 2
    return np.linalg.eigvalsh(herm)[..., 0]


def isometric_purified_distance(v1: np.ndarray, v2: np.ndarray) -> DistanceResult:
    """Exact worst-case P between two isometry conjugations"""
    d, phi = numerical_range_distance(as_array(v2).conj().T @ as_array(v1))
    return DistanceResult(float(np.sqrt(max(0.0, 1.0 - d * d))), Certification.EXACT,
                          argmax=phi, method="numerical_range")


def one_sided_purified_distance(kraus: np.ndarray, v: np.ndarray) -> DistanceResult:
    """
    Worst-case P between a channel with Kraus C_a and the isometry V,
    from min_ρ Σ_a |Tr(V†C_a ρ)|² solved as an SDP over logical states ρ
    """
    kraus = np.asarray(kraus)
    v = as_array(v)
    a_ops = np.einsum("ji,ajk->aik", v.conj(), kraus)
    d = a_ops.shape[1]
    # Tr(A ρ) = vec(A^T)·vec(ρ); Gram over the Kraus index has rank <= d²
    rows = np.transpose(a_ops, (0, 2, 1)).reshape(a_ops.shape[0], -1)
    u, s, vh = scipy.linalg.svd(rows, full_matrices=False)
    keep = s > 1e-14 * max(1.0, s[0] if s.size else 1.0)
    factors = s[keep, None] * vh[keep]

    builder = SdpBuilder()
    rho = builder.hermitian(d)
    t = builder.scalar()
    builder.psd(rho)
    builder.equal(rho.trace(), 1.0)
    coeffs = {}
    const = np.zeros((factors.shape[0], 1), dtype=complex)
    for key, basis in rho.coeffs.items():
        coeffs[key] = (factors @ basis.reshape(-1))[:, None]
    w = Affine(const, coeffs)
    builder.psd(Affine.bmat([[t, w.H], [w, np.eye(factors.shape[0])]]))
    builder.minimize(t)
    result = builder.solve()
    if not result.certified:
        logger.warning(f"One-sided worst-case SDP not certified: {result.solution.message}")
        return _heuristic_vs_isometry(kraus, v)

    state = check_hermitian(result[rho], 1e-6)
    state = (state + state.conj().T) / 2
    overlaps = np.einsum("aij,ji->a", a_ops, state)
    if v.shape[0] == v.shape[1]:
        second = np.einsum("aji,ajk,ki->", a_ops.conj(), a_ops, state).real
        p_squared = float(second - np.sum(np.abs(overlaps) ** 2))
    else:
        p_squared = 1.0 - float(np.sum(np.abs(overlaps) ** 2))
    return DistanceResult(float(np.sqrt(max(0.0, p_squared))), Certification.EXACT,
                          witness=state, method="one_sided_sdp")


def _heuristic_vs_isometry(kraus: np.ndarray, v: np.ndarray) -> DistanceResult:
    return worst_case_purified_distance_heuristic(CPMap(kraus), CPMap(as_array(v)[None]))


def _pure_fidelity(first: CPMap, second: CPMap, psi: np.ndarray) -> float:
    d = first.dim_in
    mat = psi.reshape(d, d)
    # (Φ ⊗ 1)(|ψ><ψ|) with Kraus K ⊗ 1 acting on |ψ> = Σ mat[i,r]|i,r>
    out1 = np.einsum("aij,jr->air", first.kraus, mat).reshape(first.n_kraus, -1)
    out2 = np.einsum("aij,jr->air", second.kraus, mat).reshape(second.n_kraus, -1)
    # fidelity of rank-limited states via their factors: f = ‖X1 X2†‖₁ with ρ = X†X
    return float(np.sum(singular_values(out1.conj() @ out2.T)))


def _restart(first: CPMap, second: CPMap, seed: int) -> Tuple[float, np.ndarray]:
    d = first.dim_in
    rng = make_rng(seed)
    x0 = rng.standard_normal(2 * d * d)

    def objective(x):
        psi = x[: d * d] + 1j * x[d * d:]
        norm = np.linalg.norm(psi)
        if norm < 1e-12:
            return 1.0
        return _pure_fidelity(first, second, psi / norm)

    result = minimize(objective, x0, method="L-BFGS-B", options={"maxiter": 500})
    psi = result.x[: d * d] + 1j * result.x[d * d:]
    return float(result.fun), psi / np.linalg.norm(psi)


def worst_case_purified_distance_heuristic(first: CPMap, second: CPMap, restarts: int = RESTARTS,
                                           n_jobs: int = 1) -> DistanceResult:
    """Multi-start L-BFGS-B over pure inputs with a reference of equal dimension"""
    outcomes = Parallel(n_jobs=n_jobs)(delayed(_restart)(first, second, seed) for seed in range(restarts))
    fidelity, psi = min(outcomes, key=lambda item: item[0])
    fidelity = min(1.0, max(0.0, fidelity))
    return DistanceResult(float(np.sqrt(1.0 - fidelity ** 2)), Certification.HEURISTIC,
                          witness=psi, method="multistart")


def worst_case_purified_distance(first: CPMap, second: CPMap, restarts: int = RESTARTS,
                                 n_jobs: int = 1) -> DistanceResult:
    """
    P(Φ₁, Φ₂) = √(1 - f²) with f minimized over reference-extended inputs.

    Exact when both channels are isometry conjugations (numerical range),
    exact via SDP when one of them is, heuristic otherwise.
    """
    if (first.dim_in, first.dim_out) != (second.dim_in, second.dim_out):
        raise DimensionError("Channels must have equal dimensions")
    iso1 = _as_isometry(first)
    iso2 = _as_isometry(second)
    if iso1 is not None and iso2 is not None:
        return isometric_purified_distance(iso1, iso2)
    if iso2 is not None:
        return one_sided_purified_distance(first.kraus, iso2)
    if iso1 is not None:
        return one_sided_purified_distance(second.kraus, iso1)
    return worst_case_purified_distance_heuristic(first, second, restarts, n_jobs)


def _as_isometry(channel: CPMap) -> Optional[np.ndarray]:
    if channel.n_kraus == 1:
        return channel.kraus[0]
    if isinstance(channel, Channel) and channel.dim_in * channel.dim_out <= 4096 and channel.is_isometric:
        return channel.isometry()
    return None


def diamond_distance(first: CPMap, second: CPMap) -> DistanceResult:
    """
    ½‖Φ₁ - Φ₂‖⋄ from the SDP  max Tr(J X)  s.t.  0 ⪯ X ⪯ ρ ⊗ 1,  ρ ⪰ 0,  Tr ρ = 1
    on the Choi matrix J of the difference, outputs compressed to the joint range
    """
    if (first.dim_in, first.dim_out) != (second.dim_in, second.dim_out):
        raise DimensionError("Channels must have equal dimensions")
    a, b = _compress_outputs([first.kraus, second.kraus])
    j = CPMap(a).choi() - CPMap(b).choi()
    if np.max(np.abs(j)) < 1e-14:
        return DistanceResult(0.0, Certification.EXACT, method="identical")
    d_in, d_out = first.dim_in, a.shape[1]

    builder = SdpBuilder()
    x = builder.hermitian(d_in * d_out)
    rho = builder.hermitian(d_in)
    builder.psd(x)
    builder.psd(rho)
    builder.psd(rho.kron(np.eye(d_out)) - x)
    builder.equal(rho.trace(), 1.0)
    objective = Affine(np.zeros((1, 1)), {k: np.atleast_2d(np.trace(j @ v)).real.astype(complex)
                                          for k, v in x.coeffs.items()})
    builder.maximize(objective)
    result = builder.solve()
    certification = Certification.EXACT if result.certified else Certification.HEURISTIC
    if not result.certified:
        logger.warning(f"Diamond SDP not certified: {result.solution.message}")
    value = min(1.0, max(0.0, result.value))
    witness = result[rho] if result.status in (SdpStatus.OPTIMAL, SdpStatus.MAX_ITER) else None
    return DistanceResult(float(value), certification, witness=witness, method="watrous_sdp")


def dephasing_distances(p: float, phi: float) -> Tuple[float, float]:
    """Closed forms (P, D⋄) of a rotated dephasing channel against the identity"""
    purified = np.sqrt(max(0.0, 0.5 * (1 - (1 - 2 * p) * np.cos(phi))))
    diamond = 0.5 * np.sqrt(max(0.0, 1 - 2 * (1 - 2 * p) * np.cos(phi) + (1 - 2 * p) ** 2))
    return float(purified), float(diamond)


def pure_state_qfi(psi: np.ndarray, dpsi: np.ndarray) -> float:
    """F = 4(<∂ψ|∂ψ> - |<∂ψ|ψ>|²)"""
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    dpsi = np.asarray(dpsi, dtype=complex).reshape(-1)
    if abs(np.linalg.norm(psi) - 1) > STRUCT_TOL * 100:
        raise DomainError(f"State is not normalized (norm {np.linalg.norm(psi):.12f})")
    projected = dpsi - psi * np.vdot(psi, dpsi)
    return float(4 * np.vdot(projected, projected).real)


def channel_qfi_at_zero(kraus: np.ndarray, dkraus: np.ndarray) -> DistanceResult:
    """
    Channel QFI of a family at θ = 0, 4 min_h ‖(∂𝐊 - ih𝐊)†(∂𝐊 - ih𝐊)‖,
    from the Kraus operators and their θ-derivatives.

    Single-Kraus families reduce to a scalar convex minimization; otherwise
    an SDP over Hermitian h after compressing the Kraus index and outputs.
    """
    kraus = np.asarray(kraus, dtype=complex)
    dkraus = np.asarray(dkraus, dtype=complex)
    if kraus.shape != dkraus.shape:
        raise DimensionError(f"Kraus {kraus.shape} and derivative {dkraus.shape} differ")
    if np.max(np.abs(dkraus), initial=0.0) < 1e-15:
        return DistanceResult(0.0, Certification.EXACT, method="constant_family")

    # compress Kraus index: unitary remix leaving only the supported rows
    rows = np.concatenate([kraus.reshape(kraus.shape[0], -1), dkraus.reshape(kraus.shape[0], -1)], axis=1)
    u, s, _ = scipy.linalg.svd(rows, full_matrices=False)
    rank = int(np.sum(s > 1e-13 * max(1.0, s[0])))
    mix = u[:, :rank].conj().T
    kraus = np.einsum("ba,aij->bij", mix, kraus)
    dkraus = np.einsum("ba,aij->bij", mix, dkraus)
    kraus, dkraus = _compress_outputs([kraus, dkraus])

    if kraus.shape[0] == 1:
        return _single_kraus_qfi(kraus[0], dkraus[0])
    return _kraus_qfi_sdp(kraus, dkraus)


def _single_kraus_qfi(k: np.ndarray, dk: np.ndarray) -> DistanceResult:
    # ∂K - ibK with D = i∂K: λmax(D†D + b(D†K + K†D) + b²K†K) over real b
    d = 1j * dk
    dd = d.conj().T @ d
    cross = d.conj().T @ k + k.conj().T @ d
    kk = k.conj().T @ k

    def norm(b):
        return float(np.linalg.eigvalsh(dd + b * cross + b * b * kk)[-1])

    scale = 1.0 + float(np.sqrt(max(np.linalg.norm(dd, 2), 0.0)))
    result = minimize_scalar(norm, bracket=(-scale, scale), options={"xtol": 1e-12})
    value = min(norm(result.x), norm(0.0))
    return DistanceResult(4 * max(0.0, value), Certification.EXACT, method="scalar_gauge")


def _kraus_qfi_sdp(kraus: np.ndarray, dkraus: np.ndarray) -> DistanceResult:
    r, d_out, d_in = kraus.shape
    stacked = kraus.reshape(r * d_out, d_in)
    dstacked = dkraus.reshape(r * d_out, d_in)
    builder = SdpBuilder()
    h = builder.hermitian(r)
    t = builder.scalar()
    # ∂𝐊 - i(h ⊗ 1)𝐊
    residual = Affine(dstacked) - h.kron(np.eye(d_out)).right(stacked) * 1j
    builder.psd(Affine.bmat([[t.kron(np.eye(d_in)), residual.H],
                             [residual, np.eye(r * d_out)]]))
    builder.minimize(t)
    result = builder.solve()
    if not result.certified:
        logger.warning(f"Channel QFI SDP not certified: {result.solution.message}")
    certification = Certification.EXACT if result.certified else Certification.HEURISTIC
    return DistanceResult(4 * max(0.0, result.value), certification, witness=result[h], method="kraus_sdp")


def monotonicity_gap(first: CPMap, second: CPMap, post: CPMap) -> float:
    """P(ℛ∘Φ₁, ℛ∘Φ₂) - P(Φ₁, Φ₂) on Choi inputs; nonpositive up to tolerance"""
    from quantum.channel import compose
    before = choi_purified_distance(first, second)
    after = choi_purified_distance(compose(post, first), compose(post, second))
    return after - before


def fuchs_van_de_graaf(rho: np.ndarray, sigma: np.ndarray) -> Tuple[float, float, float]:
    """(1 - f, ½‖ρ-σ‖₁, P) for checking 1 - f ≤ T ≤ P"""
    f = state_fidelity(rho, sigma)
    return 1 - f, trace_distance(rho, sigma), float(np.sqrt(max(0.0, 1 - f * f)))


def is_numerically_zero(value: float) -> bool:
    return abs(value) <= NUM_TOL
