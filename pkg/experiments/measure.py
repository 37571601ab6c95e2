"""
Full measurement of one code under one noise model: covariance measures,
the ε brackets, Knill-Laflamme deviation, HKS quantities, the two-level
protocol and every trade-off inequality, with per-stage timings.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np

from quantum.bound import BoundInputs, HksQuantities, evaluate_bounds, structured_hks
from quantum.channel import load_kraus_file
from quantum.codes import (
    RmParams, ThermoParams, rm_closed_forms, rm_code, rm_stabilizer_residual, thermo_closed_forms,
    thermo_code, thermo_optimal_recovery, thermo_registered_lower
)
from quantum.noise import (
    LocalNoise, SectorRecovery, dephasing_noise, encode_sectors, erasure_noise, identity_noise
)
from quantum.qec import (
    choi_inaccuracy_of, epsilon_bracket, epsilon_choi, epsilon_diamond_bracket, gate_error_bracket,
    kl_deviation, twirl_recovery, two_level_protocol
)
from quantum.spectral import spectral_range
from quantum.symmetry import U1Code, delta_point_star, make_code, symmetry_report
from system.core import NUM_TOL, BoundEvaluation, Certification
from system.errors import ConfigError, DephasingFitError, DomainError
from system.status_monitor import StatusMonitor

logger = logging.getLogger("measure")

# noise sites solved with the global HKS programs
HKS_DENSE_SITES = 3
CLOSED_FORM_TOL = 1e-6
CodeParams = Union[ThermoParams, RmParams, None]


@dataclass
class MeasureReport:
    """Everything measured for one (code, noise) pair"""
    code: Dict[str, Any]
    noise: Dict[str, Any]
    symmetry: Dict[str, Any]
    epsilon: Dict[str, Any]
    epsilon_choi: Dict[str, Any]
    epsilon_diamond: Dict[str, Any]
    kl: Dict[str, Any]
    hks: Dict[str, Any]
    bounds: List[BoundEvaluation]
    gate_error: Optional[Dict[str, Any]] = None
    protocol: Optional[Dict[str, Any]] = None
    twirl: Optional[Dict[str, Any]] = None
    closed_forms: Optional[Dict[str, Any]] = None
    checks: List[str] = field(default_factory=list)
    timings: Dict[str, float] = field(default_factory=dict)

    @property
    def violations(self) -> List[BoundEvaluation]:
        return [b for b in self.bounds if b.violated]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "code": self.code,
            "noise": self.noise,
            "symmetry": self.symmetry,
            "epsilon": self.epsilon,
            "epsilon_choi": self.epsilon_choi,
            "epsilon_diamond": self.epsilon_diamond,
            "gate_error": self.gate_error,
            "kl": self.kl,
            "hks": self.hks,
            "protocol": self.protocol,
            "twirl": self.twirl,
            "closed_forms": self.closed_forms,
            "bounds": [b.to_dict() for b in self.bounds],
            "checks": list(self.checks),
            "timings": dict(self.timings),
        }


def build_code(config: Dict[str, Any]) -> Tuple[U1Code, CodeParams]:
    """
    Code named by the code.* keys

    Raises:
        ConfigError: parameters outside the code's domain or above run.dense_max_sites
    """
    section = config["code"]
    cap = config["run"]["dense_max_sites"]
    kind = section["kind"]
    try:
        if kind == "thermo":
            params = ThermoParams(section["n"], section["m"], section["q"])
            if params.n > cap:
                raise ConfigError(f"n={params.n} exceeds run.dense_max_sites={cap}; use fig3 or saturation",
                                  key="code.n")
            return thermo_code(params), params
        if kind == "rm":
            params = RmParams(section["t"])
            if params.n > cap:
                raise ConfigError(f"t={params.t} gives n={params.n} above run.dense_max_sites={cap}", key="code.t")
            return rm_code(params), params
    except DomainError as e:
        raise ConfigError(e.message, key=f"code.{kind}")
    if kind == "custom":
        encoder = load_kraus_file(section["kraus_file"])
        h_logical = np.asarray(section["h_logical"], dtype=float)
        h_physical = np.asarray(section["h_physical"], dtype=float)
        if len(h_logical) != encoder.dim_in or len(h_physical) != encoder.dim_out:
            raise ConfigError(f"Charge spectra of length {len(h_logical)}/{len(h_physical)} do not match the "
                              f"encoder dimensions {encoder.dim_in}/{encoder.dim_out}", key="code.h_logical")
        try:
            code = make_code(encoder, h_logical, h_physical, name="custom", params={"kraus_file": section["kraus_file"]},
                             site_charge=h_physical)
        except DomainError as e:
            raise ConfigError(e.message, key="code.h_physical")
        return code, None
    raise ConfigError(f"Unknown code kind '{kind}'", key="code.kind")


def build_noise(config: Dict[str, Any], code: U1Code) -> LocalNoise:
    """Noise named by the noise.* keys, on the sites of the code"""
    section = config["noise"]
    kind, model, p = section["kind"], section["model"], section["p"]
    n, d = code.n_sites, code.site_dim
    if kind == "erasure":
        return erasure_noise(n, p, model, site_dim=d)
    if kind == "dephasing":
        if d != 2:
            raise ConfigError(f"Dephasing noise needs qubit sites, the code has dimension {d}", key="noise.kind")
        return dephasing_noise(n, p, model)
    if kind == "identity":
        return identity_noise(n, d)
    if kind == "custom":
        local = load_kraus_file(section["kraus_file"])
        if local.dim_in != d:
            raise ConfigError(f"Noise acts on dimension {local.dim_in}, sites have {d}", key="noise.kraus_file")
        return LocalNoise(local, n, model, name="custom")
    raise ConfigError(f"Unknown noise kind '{kind}'", key="noise.kind")


def _logical_variance(code: U1Code) -> float:
    """Variance of H_L in the maximally mixed logical state"""
    values = code.logical.values()
    return float(np.mean(values ** 2) - np.mean(values) ** 2)


def closed_form_mismatches(report: Dict[str, Any], record: Dict[str, Any], label: str) -> List[str]:
    problems = []
    for key, closed in (("delta_group", "delta_group"), ("delta_point", "delta_point"),
                        ("delta_charge", "delta_charge"), ("chi", "chi"), ("frak_b", "frak_b")):
        if abs(report[key] - record[closed]) > CLOSED_FORM_TOL:
            problems.append(f"{label} {key}: numerical {report[key]:.9f} vs closed form {record[closed]:.9f}")
    return problems


def run_measure(config: Dict[str, Any], monitor: Optional[StatusMonitor] = None) -> MeasureReport:
    """
    Measure the configured code and noise

    Args:
        config: Validated configuration with defaults applied
        monitor: Stage monitor; a private one by default

    Returns:
        MeasureReport: the assembled report; violated bounds and failed
        consistency checks are recorded, not raised
    """
    monitor = monitor or StatusMonitor()
    checks: List[str] = []

    with monitor.stage("encode", "Build code, noise and sectors"):
        code, params = build_code(config)
        noise = build_noise(config, code)
        sectors = encode_sectors(code, noise)
        covariant = all(s.covariant for s in sectors)
    logger.info(f"{code.name} {code.params} under {noise.name}: {len(sectors)} sectors, "
                f"covariant noise: {covariant}")

    with monitor.stage("symmetry", "Covariance-violation measures"):
        symmetry = symmetry_report(code)
        checks.extend(symmetry.check(code.isometric))
        delta_pulled = spectral_range(code.pulled_back_charge())

    candidates: Dict[str, SectorRecovery] = {}
    registered: Dict[str, float] = {}
    if isinstance(params, ThermoParams) and noise.is_erasure and noise.model == "single" and params.n >= params.m + 4:
        candidates["thermo_optimal"] = thermo_optimal_recovery(params, code, sectors)
        registered = thermo_registered_lower(params, noise)

    with monitor.stage("epsilon", "QEC inaccuracy brackets"):
        choi = epsilon_choi(code, noise, sectors, candidates)
        bracket = epsilon_bracket(code, noise, sectors, choi, candidates, registered)
        diamond = epsilon_diamond_bracket(code, noise, bracket, sectors, candidates)
    if bracket.lower > bracket.upper + NUM_TOL:
        checks.append(f"ε bracket inverted: [{bracket.lower:.9f}, {bracket.upper:.9f}]")
    witness = bracket.recovery_witness

    with monitor.stage("kl", "Knill-Laflamme deviation"):
        kl = kl_deviation(code, noise, sectors) if code.isometric else None

    with monitor.stage("hks", "HKS quantities"):
        if code.site_charge is not None:
            quantities, structure = structured_hks(noise, code.site_charge, dense_max_sites=HKS_DENSE_SITES)
        else:
            quantities, structure = HksQuantities(None, None, None, source="unavailable"), None
        checks.extend(quantities.check())

    protocol_summary, star = None, None
    if witness is not None and covariant:
        with monitor.stage("protocol", "Two-level metrology protocol"):
            protocol_summary, star = _protocol(code, noise, sectors, witness, bracket.upper, symmetry, checks)

    gate = None
    if witness is not None:
        with monitor.stage("gate_error", "Gate implementation error"):
            gate = gate_error_bracket(code, noise, bracket.upper, symmetry.delta_group, quantities.frak_f,
                                      {"witness": witness}, sectors, direct=config["run"]["gamma_scan"])

    twirl = None
    if witness is not None and covariant:
        with monitor.stage("twirl", "Covariant twirl of the witness recovery"):
            twirled, residual = twirl_recovery(witness, sectors, code, config["run"]["twirl_resolution"])
            twirl = {"residual": residual, "epsilon_choi": choi_inaccuracy_of(twirled, sectors)}

    closed = None
    if isinstance(params, ThermoParams):
        closed = thermo_closed_forms(params).to_dict()
    elif isinstance(params, RmParams):
        closed = rm_closed_forms(params).to_dict()
        closed["stabilizer_residual"] = rm_stabilizer_residual(params, code)
        if closed["stabilizer_residual"] > 1e-12:
            checks.append(f"Reed-Muller stabilizers: residual {closed['stabilizer_residual']:.3e}")
    if closed is not None and noise.is_erasure and noise.model == "single":
        checks.extend(closed_form_mismatches(symmetry.to_dict(), closed, code.name))
        if choi.value < closed["epsilon_lower"] - CLOSED_FORM_TOL:
            checks.append(f"ε̄ {choi.value:.9f} below the closed-form lower bound {closed['epsilon_lower']:.9f}")
        if bracket.upper > closed["epsilon_tilde"] + CLOSED_FORM_TOL and isinstance(params, ThermoParams):
            checks.append(f"ε upper {bracket.upper:.9f} above the closed-form ε̃ {closed['epsilon_tilde']:.9f}")

    with monitor.stage("bounds", "Trade-off inequalities"):
        inputs = BoundInputs(
            delta_l=code.logical.spread,
            delta_s=code.physical.spread,
            eps_lower=bracket.lower,
            eps_upper=bracket.upper,
            eps_choi=choi.value if choi.certified == Certification.EXACT else None,
            eps_diamond_lower=diamond.lower,
            eps_diamond_upper=diamond.upper if diamond.recovery_witness is not None else None,
            delta_group=symmetry.delta_group,
            delta_group_choi=symmetry.delta_group_choi,
            delta_group_diamond=symmetry.delta_group_diamond,
            delta_point=symmetry.delta_point,
            delta_point_star=star,
            delta_charge=symmetry.delta_charge,
            delta_pulled=delta_pulled,
            chi=symmetry.chi,
            frak_b=symmetry.frak_b,
            frak_j=quantities.frak_j,
            frak_f=quantities.frak_f,
            rld_qfi=quantities.rld_qfi,
            logical_variance=_logical_variance(code),
            isometric=code.isometric,
            covariant_noise=covariant,
            hks=quantities.hks,
        )
        bounds = evaluate_bounds(inputs)

    hks = quantities.to_dict()
    hks["structure"] = None if structure is None else structure.to_dict()
    symmetry_dict = symmetry.to_dict()
    symmetry_dict["delta_pulled"] = delta_pulled
    report = MeasureReport(
        code={"name": code.name, "params": dict(code.params), "d_logical": code.d_logical,
              "d_physical": code.d_physical, "isometric": code.isometric},
        noise={"name": noise.name, "model": noise.model, "n_sites": noise.n_sites, "covariant": covariant,
               "sectors": [{"label": s.label, "weight": s.weight, "dim": s.dim} for s in sectors]},
        symmetry=symmetry_dict,
        epsilon=bracket.to_dict(),
        epsilon_choi=choi.to_dict(),
        epsilon_diamond=diamond.to_dict(),
        kl={} if kl is None else {"max_violation": kl.max_violation, "exact": kl.exact},
        hks=hks,
        bounds=bounds,
        gate_error=None if gate is None else gate.to_dict(),
        protocol=protocol_summary,
        twirl=twirl,
        closed_forms=closed,
        checks=checks,
        timings=monitor.timings(),
    )
    for problem in checks:
        logger.warning(problem)
    logger.info(f"ε ∈ [{bracket.lower:.6g}, {bracket.upper:.6g}], ε̄ = {choi.value:.6g}, "
                f"{sum(not b.skipped for b in bounds)} bounds evaluated, {len(report.violations)} violated")
    return report


def _protocol(code: U1Code, noise: LocalNoise, sectors, witness: SectorRecovery, eps: float, symmetry,
              checks: List[str]) -> Tuple[Optional[Dict[str, Any]], Optional[float]]:
    """Two-level protocol at the witness recovery, its consistency checks and δ_P★"""
    star = delta_point_star(*witness.corrected_family(sectors)).value
    try:
        protocol = two_level_protocol(code, noise, witness, sectors)
    except DephasingFitError as e:
        checks.append(f"Two-level protocol is not a rotated dephasing: {e}")
        return None, star
    xi0 = abs(protocol.xi(0.0))
    dxi, dxi_error = protocol.dxi()
    summary = {"xi0": xi0, "dxi": abs(dxi), "dxi_error": dxi_error, "local_qfi": protocol.local_qfi(),
               "delta_point_star": star}
    if xi0 < 1 - 2 * eps ** 2 - NUM_TOL:
        checks.append(f"|ξ₀| = {xi0:.9f} < 1 - 2ε² = {1 - 2 * eps ** 2:.9f}")
    floor = abs(symmetry.chi) - 2 * eps * symmetry.frak_b
    if abs(dxi) < floor - max(NUM_TOL, 10 * dxi_error):
        checks.append(f"|∂ξ₀| = {abs(dxi):.9f} < |χ| - 2εℬ = {floor:.9f}")
    return summary, star
