"""
Noise quantities entering the QEC/covariance trade-offs and the evaluator
of every trade-off inequality.

𝔍, 𝔉 and 𝔉̃ minimize over Hermitian h with H_S = Σ h_ij K_i†K_j (the HKS
condition).  When H_S is outside that span the quantities are infeasible,
which is a result and not an error.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from quantum.channel import CPMap
from quantum.noise import LocalNoise
from quantum.sdp import Affine, SdpBuilder
from quantum.spectral import eigvalsh, pinv_herm, random_unitary, range_basis, spectral_norm
from system.core import NUM_TOL, BoundEvaluation, Certification, SdpStatus, make_rng
from system.errors import DimensionError, DomainError, SdpError

logger = logging.getLogger(__name__)

HKS_TOL = 1e-8
GAUGE_TOL = 1e-5
BISECTION_TOL = 1e-12
SQRT_3_8 = math.sqrt(3.0 / 8.0)


@dataclass
class HksSolution:
    """Optimum of one HKS program; infeasible when H_S is outside the Kraus span"""
    feasible: bool
    value: float = math.inf
    h: Optional[np.ndarray] = None
    certified: Certification = Certification.EXACT
    residual: float = 0.0


def _charge_matrix(h_s: np.ndarray, dim: int) -> np.ndarray:
    h_s = np.asarray(h_s)
    if h_s.ndim == 1:
        h_s = np.diag(h_s)
    if h_s.shape != (dim, dim):
        raise DimensionError(f"Charge shape {h_s.shape} does not match channel input {dim}")
    return h_s.astype(complex)


def _stacked(noise: CPMap) -> np.ndarray:
    """Kraus operators restricted to their joint output range -> (r, d', d_in)"""
    kraus = noise.kraus
    basis = range_basis(np.concatenate(list(kraus), axis=1), 1e-12)
    if basis.shape[1] < kraus.shape[1]:
        kraus = np.einsum("ji,ajk->aik", basis.conj(), kraus)
    return kraus


def hks_residual(noise: CPMap, h_s: np.ndarray) -> float:
    """Distance of H_S from span{K_i†K_j}, relative to ‖H_S‖"""
    kraus = noise.kraus
    h_s = _charge_matrix(h_s, noise.dim_in)
    products = np.einsum("aji,bjk->abik", kraus.conj(), kraus).reshape(-1, noise.dim_in ** 2).T
    coefficients, *_ = np.linalg.lstsq(products, h_s.reshape(-1), rcond=None)
    residual = np.linalg.norm(products @ coefficients - h_s.reshape(-1))
    return float(residual / max(1.0, np.linalg.norm(h_s)))


def hks_holds(noise: CPMap, h_s: np.ndarray) -> bool:
    return hks_residual(noise, h_s) <= HKS_TOL


def _constraint(builder: SdpBuilder, kraus: np.ndarray, h_s: np.ndarray) -> Affine:
    r, d_out, d_in = kraus.shape
    stacked = kraus.reshape(r * d_out, d_in)
    h = builder.hermitian(r)
    builder.equal(h.kron(np.eye(d_out)).left(stacked.conj().T).right(stacked), h_s)
    return h


def _solve(builder: SdpBuilder, name: str) -> Optional[Any]:
    try:
        result = builder.solve()
    except SdpError as e:
        logger.warning(f"{name} SDP failed: {e}")
        return None
    if result.status == SdpStatus.INFEASIBLE:
        return None
    if not result.certified:
        logger.warning(f"{name} SDP not certified ({result.status.value})")
    return result


def _frak_j_kraus(kraus: np.ndarray, h_s: np.ndarray) -> HksSolution:
    r = kraus.shape[0]
    builder = SdpBuilder()
    h = _constraint(builder, kraus, h_s)
    x = builder.scalar()
    nu = builder.scalar()
    shifted = h - nu.kron(np.eye(r))
    builder.psd(Affine.bmat([[x.kron(np.eye(r)), shifted], [shifted, x.kron(np.eye(r))]]))
    builder.minimize(x * 2.0)
    result = _solve(builder, "𝔍")
    if result is None:
        return HksSolution(False)
    return HksSolution(True, max(0.0, result.value), result[h],
                       Certification.EXACT if result.certified else Certification.HEURISTIC)


def frak_j(noise: CPMap, h_s: np.ndarray, gauge_check: bool = True) -> HksSolution:
    """
    𝔍 = min Δh over Hermitian h with H_S = Σ h_ij K_i†K_j, as
    min 2x subject to ‖h - ν1‖ <= x.

    The value is re-solved under a random unitary remix of the Kraus
    operators; a gauge disagreement above 1e-5 is logged and stored as the
    residual.
    """
    h_s = _charge_matrix(h_s, noise.dim_in)
    if not hks_holds(noise, h_s):
        logger.info("HKS condition fails: H_S is outside the span of K_i†K_j")
        return HksSolution(False, residual=hks_residual(noise, h_s))
    kraus = _stacked(noise)
    solution = _frak_j_kraus(kraus, h_s)
    if gauge_check and solution.feasible and kraus.shape[0] > 1:
        mix = random_unitary(kraus.shape[0], make_rng(17))
        remixed = _frak_j_kraus(np.einsum("ab,bij->aij", mix, kraus), h_s)
        solution.residual = abs(remixed.value - solution.value) if remixed.feasible else math.inf
        if solution.residual > GAUGE_TOL:
            logger.warning(f"𝔍 depends on the Kraus representation: {solution.value:.9f} vs {remixed.value:.9f}")
    return solution


def _frak_f_program(noise: CPMap, h_s: np.ndarray, subtract: bool, name: str) -> HksSolution:
    h_s = _charge_matrix(h_s, noise.dim_in)
    if not hks_holds(noise, h_s):
        return HksSolution(False, residual=hks_residual(noise, h_s))
    kraus = _stacked(noise)
    r, d_out, d_in = kraus.shape
    stacked = kraus.reshape(r * d_out, d_in)
    square = h_s @ h_s if subtract else np.zeros_like(h_s)
    builder = SdpBuilder()
    h = _constraint(builder, kraus, h_s)
    t = builder.scalar()
    # h𝐊 stacked over the Kraus index
    mixed = h.kron(np.eye(d_out)).right(stacked)
    builder.psd(Affine.bmat([[t.kron(np.eye(d_in)) + square, mixed.H], [mixed, np.eye(r * d_out)]]))
    builder.minimize(t)
    result = _solve(builder, name)
    if result is None:
        return HksSolution(False)
    certified = Certification.EXACT if result.certified else Certification.HEURISTIC
    witness = result[h]
    if subtract:
        # the one-sided epigraph equals the norm only when Σ(h²)K†K - H² ⪰ 0
        alpha = stacked.conj().T @ np.kron(witness @ witness, np.eye(d_out)) @ stacked - square
        lowest = float(eigvalsh((alpha + alpha.conj().T) / 2)[0])
        if lowest < -HKS_TOL:
            logger.warning(f"{name}: Σ(h²)K†K - H² has eigenvalue {lowest:.3e}, one-sided value unverified")
            certified = Certification.HEURISTIC
    return HksSolution(True, 4 * max(0.0, result.value), witness, certified)


def frak_f(noise: CPMap, h_s: np.ndarray) -> HksSolution:
    """𝔉 = 4 min_h ‖Σ(h²)_ij K_i†K_j - H_S²‖ under the HKS constraint"""
    return _frak_f_program(noise, h_s, True, "𝔉")


def frak_f_tilde(noise: CPMap, h_s: np.ndarray) -> HksSolution:
    """𝔉̃ = 4 min_h ‖Σ(h²)_ij K_i†K_j‖ under the HKS constraint"""
    return _frak_f_program(noise, h_s, False, "𝔉̃")


def rld_channel_qfi(noise: CPMap, h_s: np.ndarray, tol: float = 1e-8) -> float:
    """
    F_R = ‖Tr_out(Γ' Γ⁺ Γ')‖ with Γ = Σ|K_a>><<K_a| and
    Γ' = Σ(|A_a>><<K_a| + |K_a>><<A_a|), A_a = -iK_a H_S.

    Returns +∞ when the range of Γ' leaves the support of Γ.
    """
    h_s = _charge_matrix(h_s, noise.dim_in)
    kraus = _stacked(noise)
    r, d_out, d_in = kraus.shape
    vectors = kraus.reshape(r, -1)
    moved = (-1j * kraus @ h_s).reshape(r, -1)
    gamma = vectors.T @ vectors.conj()
    derivative = moved.T @ vectors.conj() + vectors.T @ moved.conj()
    if np.max(np.abs(derivative)) <= tol:
        return 0.0
    inverse, _ = pinv_herm(gamma, 1e-12)
    support = range_basis(gamma, 1e-12)
    leak = derivative - support @ (support.conj().T @ derivative)
    if np.max(np.abs(leak)) > tol:
        return math.inf
    product = derivative @ inverse @ derivative
    reduced = np.einsum("ajak->jk", product.reshape(d_out, d_in, d_out, d_in))
    return spectral_norm((reduced + reduced.conj().T) / 2)


@dataclass
class HksQuantities:
    """𝔍, 𝔉, 𝔉̃ and F_R of one (noise, H_S) pair; None marks an infeasible program"""
    frak_j: Optional[float]
    frak_f: Optional[float]
    frak_f_tilde: Optional[float]
    rld_qfi: Optional[float] = None
    h_witness: Dict[str, np.ndarray] = field(default_factory=dict)
    gauge_residual: float = 0.0
    source: str = "global"
    certified: Dict[str, str] = field(default_factory=dict)

    @property
    def hks(self) -> bool:
        return self.frak_j is not None

    def check(self) -> List[str]:
        problems = []
        if self.frak_j is not None and self.frak_f is not None and self.frak_j ** 2 < self.frak_f - 1e-5:
            problems.append(f"𝔍² = {self.frak_j ** 2:.9f} < 𝔉 = {self.frak_f:.9f}")
        if self.gauge_residual > GAUGE_TOL:
            problems.append(f"𝔍 gauge residual {self.gauge_residual:.3e}")
        return problems

    def to_dict(self) -> Dict[str, Any]:
        return {"frak_j": self.frak_j, "frak_f": self.frak_f, "frak_f_tilde": self.frak_f_tilde,
                "rld_qfi": self.rld_qfi, "source": self.source, "hks": self.hks,
                "certified": dict(sorted(self.certified.items()))}


def hks_quantities(noise: CPMap, h_s: np.ndarray, rld: bool = True) -> HksQuantities:
    """All HKS quantities of a dense noise channel"""
    j = frak_j(noise, h_s)
    if not j.feasible:
        return HksQuantities(None, None, None, rld_channel_qfi(noise, h_s) if rld else None)
    f = frak_f(noise, h_s)
    f_tilde = frak_f_tilde(noise, h_s)
    quantities = HksQuantities(
        j.value, f.value if f.feasible else None, f_tilde.value if f_tilde.feasible else None,
        rld_channel_qfi(noise, h_s) if rld else None,
        {"frak_j": j.h, "frak_f": f.h, "frak_f_tilde": f_tilde.h}, j.residual, "global",
        {"frak_j": j.certified.value, "frak_f": f.certified.value, "frak_f_tilde": f_tilde.certified.value})
    for problem in quantities.check():
        logger.warning(problem)
    return quantities


@dataclass
class NoiseStructureBounds:
    """Upper bounds on 𝔍 and 𝔉 from the local structure of the noise"""
    model: str
    frak_j: Optional[float]
    frak_f: Optional[float]
    local: List[Dict[str, Optional[float]]] = field(default_factory=list)
    erasure: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {"model": self.model, "frak_j": self.frak_j, "frak_f": self.frak_f,
                "erasure": dict(self.erasure)}


def noise_structure_bounds(noise: LocalNoise, site_charge: Sequence[float]) -> NoiseStructureBounds:
    """
    Mixture over sites: 𝔍 <= max_l 𝔍_l/q_l and 𝔉 <= Σ_l 𝔉̃_l/q_l.
    Independent sites: 𝔍 <= Σ_l 𝔍_l and 𝔉 = Σ_l 𝔉_l.
    Erasure noise adds 𝔍 <= n max ΔH_l, 𝔉 <= n Σ ΔH_l² and
    √𝔉 + ℬ <= n(√(Σ ΔH_l²/n) + √2 ΔH_S/n).
    """
    site_charge = np.asarray(site_charge, dtype=float)
    local_j = frak_j(noise.local, site_charge)
    spread = float(site_charge.max() - site_charge.min())
    n = noise.n_sites
    if not local_j.feasible:
        logger.info(f"{noise.name}: HKS fails on a single site")
        return NoiseStructureBounds(noise.model, None, None)
    local_f = frak_f(noise.local, site_charge)
    local_f_tilde = frak_f_tilde(noise.local, site_charge)
    parts = noise.parts()
    record = [{"q": q, "frak_j": local_j.value, "frak_f": local_f.value, "frak_f_tilde": local_f_tilde.value}
              for q, _ in parts]
    if noise.model == "single":
        bound_j = max(local_j.value / q for q, _ in parts if q > 0)
        bound_f = sum(local_f_tilde.value / q for q, _ in parts if q > 0)
    else:
        bound_j = n * local_j.value
        bound_f = n * local_f.value
    erasure = {}
    if noise.is_erasure and noise.model == "single":
        squares = n * spread ** 2
        erasure = {"frak_j": n * spread, "frak_f": n * squares,
                   "sqrt_frak_f_plus_b": n * (math.sqrt(squares / n) + math.sqrt(2) * n * spread / n)}
    return NoiseStructureBounds(noise.model, bound_j, bound_f, record, erasure)


def structured_hks(noise: LocalNoise, site_charge: Sequence[float], h_s: Optional[np.ndarray] = None,
                   dense_max_sites: int = 3) -> Tuple[HksQuantities, NoiseStructureBounds]:
    """
    HKS quantities of n-site noise: the global programs for at most
    dense_max_sites sites (checked against the structure bounds), the
    structure bounds otherwise
    """
    structure = noise_structure_bounds(noise, site_charge)
    if noise.n_sites <= dense_max_sites:
        channel = noise.global_channel()
        if h_s is None:
            charge = np.asarray(site_charge, dtype=float)
            h_s = sum(np.kron(np.kron(np.ones(noise.site_dim ** l), charge), np.ones(noise.site_dim ** (noise.n_sites - l - 1)))
                      for l in range(noise.n_sites))
        quantities = hks_quantities(channel, h_s)
        if quantities.hks and structure.frak_j is not None:
            if quantities.frak_j > structure.frak_j + 1e-6:
                logger.warning(f"{noise.name}: global 𝔍 {quantities.frak_j:.9f} above its structure bound "
                               f"{structure.frak_j:.9f}")
            if quantities.frak_f is not None and quantities.frak_f > structure.frak_f + 1e-6:
                logger.warning(f"{noise.name}: global 𝔉 {quantities.frak_f:.9f} above its structure bound "
                               f"{structure.frak_f:.9f}")
        return quantities, structure
    quantities = HksQuantities(structure.frak_j, structure.frak_f, None, None, source="structure",
                               certified={"frak_j": Certification.UPPER_BOUND.value,
                                          "frak_f": Certification.UPPER_BOUND.value})
    return quantities, structure


@dataclass
class EllInverse:
    value: float
    saturated: bool = False


def _ell_forward(kind: str, params: Optional[Dict[str, float]]) -> Tuple[Callable[[float], float], float]:
    if kind == "l1":
        return (lambda y: y * math.sqrt(1 - y * y) / (1 - 2 * y * y)), 1 / math.sqrt(2)
    if kind == "l2":
        return (lambda y: y / math.sqrt((1 - 3 * y ** 2 + y ** 4) * (1 - 6 * math.sqrt(2) * y ** 2))), \
            1 / (6 * math.sqrt(2))
    if kind == "l3":
        if not params or not {"variance", "delta_l"} <= set(params):
            raise DomainError("ℓ₃ needs the logical charge variance and ΔH_L")
        variance, delta_l = params["variance"], params["delta_l"]
        if variance <= 0 or delta_l <= 0:
            raise DomainError("ℓ₃ needs a non-constant logical charge")
        scale = 3 * delta_l ** 2 / (math.sqrt(2) * variance)
        return (lambda y: y / math.sqrt((1 - 3 * y ** 2 + y ** 4) * (1 - scale * y))), 1 / scale
    raise DomainError(f"Unknown ℓ function '{kind}'")


def ell_forward(kind: str, y: float, params: Optional[Dict[str, float]] = None) -> float:
    forward, _ = _ell_forward(kind, params)
    return forward(y)


def ell_inverse(kind: str, x: float, params: Optional[Dict[str, float]] = None) -> EllInverse:
    """
    Invert the increasing map y ↦ x of ℓ₁, ℓ₂ or ℓ₃ by bisection on its domain.

    ℓ₂ is bounded on its stated domain; larger x returns the domain end
    flagged as saturated.

    Raises:
        DomainError: negative x or missing ℓ₃ parameters
    """
    if x < 0 or math.isnan(x):
        raise DomainError(f"ℓ argument must be nonnegative, got {x}")
    forward, end = _ell_forward(kind, params)
    if x == 0:
        return EllInverse(0.0)
    if math.isinf(x):
        return EllInverse(end, True)
    sup = _safe(forward, end)
    if sup is not None and x >= sup:
        return EllInverse(end, True)
    low, high = 0.0, end
    while high - low > BISECTION_TOL:
        mid = 0.5 * (low + high)
        value = _safe(forward, mid)
        if value is None or value > x:
            high = mid
        else:
            low = mid
    return EllInverse(0.5 * (low + high))


def _safe(forward: Callable[[float], float], y: float) -> Optional[float]:
    try:
        value = forward(y)
    except (ValueError, ZeroDivisionError):
        return None
    return value if math.isfinite(value) and value >= 0 else None


def grp(g: float, delta_s: float) -> Tuple[float, str]:
    """
    Lower bound on δ_G from G: √(G(ΔH_S - G/2))/ΔH_S capped at √(3/8) for
    0 <= G <= ΔH_S, √(3/8) above, nothing below 0

    Returns:
        Tuple of the bound and the active branch
    """
    if g <= 0:
        return 0.0, "trivial"
    if g <= delta_s:
        value = math.sqrt(g * (delta_s - g / 2)) / delta_s
        return (value, "sqrt") if value < SQRT_3_8 else (SQRT_3_8, "cap")
    return SQRT_3_8, "cap"


@dataclass
class BoundInputs:
    """Measures of one code/noise pair entering the trade-off inequalities"""
    delta_l: float
    delta_s: float
    eps_lower: float
    eps_upper: float
    eps_choi: Optional[float] = None
    eps_diamond_lower: Optional[float] = None
    eps_diamond_upper: Optional[float] = None
    delta_group: Optional[float] = None
    delta_group_choi: Optional[float] = None
    delta_group_diamond: Optional[float] = None
    delta_point: Optional[float] = None
    delta_point_star: Optional[float] = None
    delta_charge: Optional[float] = None
    delta_pulled: Optional[float] = None
    chi: Optional[float] = None
    frak_b: Optional[float] = None
    frak_j: Optional[float] = None
    frak_f: Optional[float] = None
    rld_qfi: Optional[float] = None
    logical_variance: Optional[float] = None
    isometric: bool = True
    covariant_noise: bool = False
    hks: bool = True

    def echo(self, *names: str) -> Dict[str, Any]:
        return {name: getattr(self, name) for name in names}


Evaluator = Callable[[float], Tuple[float, float, str]]


def _at_endpoints(name: str, evaluate: Evaluator, inputs: BoundInputs, echo: Sequence[str],
                  lower: Optional[float] = None, upper: Optional[float] = None) -> BoundEvaluation:
    """Evaluate lhs >= rhs at both ε endpoints; satisfied uses the harder one"""
    lower = inputs.eps_lower if lower is None else lower
    upper = inputs.eps_upper if upper is None else upper
    results = []
    for endpoint, eps in (("lower", lower), ("upper", upper)):
        lhs, rhs, branch = evaluate(eps)
        results.append((lhs - rhs, endpoint, lhs, rhs, branch))
    hard = min(results, key=lambda item: item[0])
    easy = max(results, key=lambda item: item[0])
    slack, endpoint, lhs, rhs, branch = hard
    return BoundEvaluation(name, lhs, rhs, slack >= -NUM_TOL, slack, inputs.echo(*echo), endpoint,
                           easy[0], branch)


def _skip(name: str, reason: str) -> BoundEvaluation:
    return BoundEvaluation(name, math.nan, math.nan, True, 0.0, skipped=True, reason=reason)


def _metrology_term(eps: float, frak_f: float, frak_b: float) -> float:
    return 2 * eps * (math.sqrt(max(0.0, 1 - eps * eps) * frak_f) + frak_b)


def evaluate_bounds(inputs: BoundInputs) -> List[BoundEvaluation]:
    """
    Every applicable trade-off inequality as a BoundEvaluation.  Inputs that
    are missing, or preconditions that fail, produce a skipped entry with
    its reason.
    """
    x = inputs
    out: List[BoundEvaluation] = []
    have_j = x.hks and x.frak_j is not None
    have_f = x.hks and x.frak_f is not None
    have_b = x.frak_b is not None

    def need(name: str, *conditions: Tuple[bool, str]) -> bool:
        for ok, reason in conditions:
            if not ok:
                out.append(_skip(name, reason))
                return False
        return True

    iso = (x.isometric, "encoder is not isometric")
    hks = (x.hks, "HKS condition fails")

    # global covariance through the charge fluctuation
    if need("global_kl", iso, hks, (have_j, "𝔍 unavailable"), (x.delta_group is not None, "δ_G missing")):
        def global_kl(eps):
            bound, branch = grp(x.delta_l - 2 * eps * x.frak_j, x.delta_s)
            return x.delta_group, bound, branch
        out.append(_at_endpoints("global_kl", global_kl, x, ("delta_group", "frak_j", "delta_l", "delta_s")))

    if need("global_metrology", iso, hks, (have_f and have_b, "𝔉 or ℬ unavailable"),
            (x.delta_group is not None, "δ_G missing")):
        def global_metrology(eps):
            bound, branch = grp(x.delta_l - _metrology_term(eps, x.frak_f, x.frak_b), x.delta_s)
            return x.delta_group, bound, branch
        out.append(_at_endpoints("global_metrology", global_metrology, x,
                                 ("delta_group", "frak_f", "frak_b", "delta_l", "delta_s")))

    if need("global_charge", iso, (x.delta_charge is not None and x.delta_group is not None, "δ_C or δ_G missing")):
        bound, branch = grp(x.delta_charge, x.delta_s)
        slack = x.delta_group - bound
        out.append(BoundEvaluation("global_charge", x.delta_group, bound, slack >= -NUM_TOL, slack,
                                   x.echo("delta_group", "delta_charge", "delta_s"), branch=branch))

    # exactly covariant codes
    covariant = x.delta_group is not None and x.delta_group <= NUM_TOL
    if need("covariant_kl", iso, hks, (have_j, "𝔍 unavailable"), (covariant, "code is not exactly covariant")):
        out.append(_at_endpoints("covariant_kl", lambda eps: (eps, x.delta_l / (2 * x.frak_j), "exact_covariance"),
                                 x, ("frak_j", "delta_l")))

    if need("covariant_metrology", hks, (have_f and have_b, "𝔉 or ℬ unavailable"),
            (covariant, "code is not exactly covariant")):
        def covariant_metrology(eps):
            if 2 * eps * x.frak_b >= x.delta_l:
                return 2 * eps * x.frak_b, x.delta_l, "b_dominant"
            lhs = eps * math.sqrt(max(0.0, 1 - eps * eps)) / (1 - 2 * eps * x.frak_b / x.delta_l)
            return lhs, _reference_rhs(x), "metrology"
        out.append(_at_endpoints("covariant_metrology", covariant_metrology, x, ("frak_f", "frak_b", "delta_l")))

    if need("reference", hks, (have_f, "𝔉 unavailable"), (covariant, "code is not exactly covariant")):
        def reference(eps):
            if 2 * eps * eps >= 1:
                return math.inf, _reference_rhs(x), "domain_end"
            return eps * math.sqrt(1 - eps * eps) / (1 - 2 * eps * eps), _reference_rhs(x), "reference"
        out.append(_at_endpoints("reference", reference, x, ("frak_f", "delta_l")))

    exact = x.eps_upper <= NUM_TOL
    if need("exact_qec_global", iso, hks, (exact, "code is not exactly error-correcting"),
            (x.delta_group is not None, "δ_G missing")):
        bound, branch = grp(x.delta_l, x.delta_s)
        slack = x.delta_group - bound
        out.append(BoundEvaluation("exact_qec_global", x.delta_group, bound, slack >= -NUM_TOL, slack,
                                   x.echo("delta_group", "delta_l", "delta_s"), branch=branch))

    # gate implementation error
    if need("gate_metrology", hks, (have_f, "𝔉 unavailable"), (x.delta_group is not None, "δ_G missing")):
        def gate_metrology(eps):
            ell = ell_inverse("l1", x.delta_l / (2 * math.sqrt(x.frak_f)) if x.frak_f > 0 else math.inf)
            return eps + x.delta_group, ell.value, "saturated" if ell.saturated else "l1"
        out.append(_at_endpoints("gate_metrology", gate_metrology, x, ("delta_group", "frak_f", "delta_l")))

    rld_ok = (x.rld_qfi is not None, "F_R unavailable")
    if need("gate_rld", (x.covariant_noise, "noise does not commute with the rotation"), rld_ok,
            (x.delta_group is not None, "δ_G missing")):
        def gate_rld(eps):
            argument = x.delta_l / math.sqrt(4 * x.rld_qfi) if x.rld_qfi > 0 else math.inf
            ell = ell_inverse("l2", argument)
            return eps + x.delta_group, ell.value, "saturated" if ell.saturated else "l2"
        out.append(_at_endpoints("gate_rld", gate_rld, x, ("delta_group", "rld_qfi", "delta_l")))

    if need("gate_rld_choi", (x.covariant_noise, "noise does not commute with the rotation"), rld_ok,
            (x.eps_choi is not None and x.delta_group_choi is not None, "ε̄ or δ̄_G missing"),
            (x.logical_variance is not None and x.logical_variance > 0, "logical charge variance missing")):
        params = {"variance": x.logical_variance, "delta_l": x.delta_l}
        argument = math.sqrt(x.logical_variance / x.rld_qfi) if x.rld_qfi > 0 else math.inf
        ell = ell_inverse("l3", argument, params)
        lhs = x.eps_choi + x.delta_group_choi
        out.append(BoundEvaluation("gate_rld_choi", lhs, ell.value, lhs - ell.value >= -NUM_TOL, lhs - ell.value,
                                   x.echo("eps_choi", "delta_group_choi", "rld_qfi", "logical_variance"),
                                   branch="saturated" if ell.saturated else "l3"))

    # local measures
    for measure in ("delta_point", "delta_charge"):
        value = getattr(x, measure)
        name = f"local_kl_{measure.split('_')[1]}"
        if need(name, iso, hks, (have_j, "𝔍 unavailable"), (value is not None, f"{measure} missing")):
            out.append(_at_endpoints(name, lambda eps, v=value: (v + 2 * eps * x.frak_j, x.delta_l, "kl"),
                                     x, (measure, "frak_j", "delta_l")))

    for measure, conditions in (("delta_charge", ()), ("delta_point", (iso,))):
        value = getattr(x, measure)
        name = f"local_metrology_{measure.split('_')[1]}"
        if need(name, *conditions, hks, (have_f and have_b, "𝔉 or ℬ unavailable"),
                (value is not None, f"{measure} missing")):
            out.append(_at_endpoints(
                name, lambda eps, v=value: (v + _metrology_term(eps, x.frak_f, x.frak_b), x.delta_l, "metrology"),
                x, (measure, "frak_f", "frak_b", "delta_l")))

    if need("local_point", hks, (have_f, "𝔉 unavailable"), (x.delta_point is not None, "δ_P missing")):
        def local_point(eps):
            term = 2 * eps * (math.sqrt(max(0.0, 1 - eps * eps) * x.frak_f) + eps * x.delta_l)
            return x.delta_point + term, x.delta_l, "point"
        out.append(_at_endpoints("local_point", local_point, x, ("delta_point", "frak_f", "delta_l")))

    if need("local_point_refined", hks, (have_f, "𝔉 unavailable"),
            (x.delta_point_star is not None, "δ_P★ missing")):
        def local_point_refined(eps):
            denominator = 1 - 2 * eps * eps - x.delta_point_star / x.delta_l
            if denominator <= 0:
                return math.inf, _reference_rhs(x), "outside_domain"
            return eps * math.sqrt(max(0.0, 1 - eps * eps)) / denominator, _reference_rhs(x), "refined"
        out.append(_at_endpoints("local_point_refined", local_point_refined, x,
                                 ("delta_point_star", "frak_f", "delta_l")))

    # charge fluctuation and its refinement by the pulled-back charge spread
    for quantity, label in (("chi", "charge_fluctuation"), ("delta_pulled", "pulled_charge")):
        value = getattr(x, quantity)
        if value is None:
            out.append(_skip(f"{label}_kl", f"{quantity} missing"))
            out.append(_skip(f"{label}_metrology", f"{quantity} missing"))
            continue
        if need(f"{label}_kl", iso, hks, (have_j, "𝔍 unavailable")):
            out.append(_at_endpoints(f"{label}_kl", lambda eps, v=value: (2 * eps * x.frak_j, abs(v), "kl"),
                                     x, (quantity, "frak_j")))
        if need(f"{label}_metrology", hks, (have_f and have_b, "𝔉 or ℬ unavailable")):
            out.append(_at_endpoints(
                f"{label}_metrology",
                lambda eps, v=value: (_metrology_term(eps, x.frak_f, x.frak_b), abs(v), "metrology"),
                x, (quantity, "frak_f", "frak_b")))

    if need("diamond_tradeoff", iso,
            (x.eps_diamond_lower is not None and x.eps_diamond_upper is not None, "ε⋄ bracket missing"),
            (x.delta_group is not None and x.delta_group_diamond is not None, "δ_G or δ_G⋄ missing")):
        pairs = [((x.eps_diamond_lower, x.eps_upper), "lower"), ((x.eps_diamond_upper, x.eps_lower), "upper")]
        rows = []
        for (eps_d, eps), endpoint in pairs:
            lhs = x.delta_group_diamond ** 2 + 2 * math.sqrt(max(0.0, eps_d))
            rhs = x.delta_group ** 2 + 2 * eps
            rows.append((lhs - rhs, endpoint, lhs, rhs))
        hard, easy = min(rows), max(rows)
        out.append(BoundEvaluation("diamond_tradeoff", hard[2], hard[3], hard[0] >= -NUM_TOL, hard[0],
                                   x.echo("delta_group", "delta_group_diamond", "eps_diamond_lower",
                                          "eps_diamond_upper"), hard[1], easy[0], "diamond"))

    for evaluation in out:
        if evaluation.violated:
            logger.warning(f"Bound {evaluation.name} violated: lhs {evaluation.lhs:.9f} < rhs {evaluation.rhs:.9f}")
        elif not evaluation.skipped and not evaluation.satisfied:
            logger.info(f"Bound {evaluation.name} undecided within the ε bracket")
    return out


def _reference_rhs(x: BoundInputs) -> float:
    return x.delta_l / (2 * math.sqrt(x.frak_f)) if x.frak_f > 0 else math.inf


def transversal_gate_bound(delta_tl: float, delta_ts: Sequence[float]) -> float:
    """
    Largest D compatible with a transversal implementation of e^{-i2πT_L/D}
    by ⊗_l e^{-i2πT_l/D} on a code of distance at least 2
    """
    if delta_tl <= 0:
        raise DomainError("ΔT_L must be positive")
    delta_ts = np.asarray(delta_ts, dtype=float)
    if np.any(delta_ts < 0):
        raise DomainError("Site charge spreads must be nonnegative")
    total = float(delta_ts.sum())
    first = 4 * math.pi * math.sqrt(2 / 3) * (delta_tl + total)
    second = 2 * math.sqrt(2) * math.pi * math.sqrt(total / delta_tl) * (delta_tl + total)
    return max(first, second)


def clifford_level_cap(d: float) -> int:
    """⌊log₂ D⌋: the highest Clifford-hierarchy level reachable with denominators up to D"""
    if d < 1:
        raise DomainError("D must be at least 1")
    return int(math.floor(math.log2(d) + 1e-12))
