"""
Acceptance suite: every numbered criterion as a list of named checks, run
in order with one monitored stage per criterion.

A criterion that raises is recorded as a single failed check carrying the
error message; the remaining criteria still run.
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from experiments.fig3 import fig3_rows, fit_slopes, n_ladder
from experiments.measure import closed_form_mismatches, run_measure
from experiments.saturation import rm_row, thermo_row
from experiments.transversal import run_transversal, transversal_row
from quantum.bound import frak_f, frak_j, hks_quantities, rld_channel_qfi
from quantum.channel import (
    Channel, choi_state, dephasing_channel, erasure_channel, identity_channel, isometry_channel, rotated_dephasing,
    tensor
)
from quantum.codes import (
    RmParams, ThermoParams, rm_closed_forms, rm_code, thermo_closed_forms, thermo_code, thermo_optimal_recovery,
    thermo_registered_lower
)
from quantum.metric import (
    choi_fidelity, diamond_distance, dephasing_distances, fuchs_van_de_graaf, trace_distance
)
from quantum.noise import encode_sectors, erasure_noise
from quantum.qec import epsilon_bracket, epsilon_choi, kl_deviation
from quantum.spectral import random_density, random_isometry
from quantum.symmetry import make_code, symmetry_report
from system.config_validator import ConfigValidator
from system.core import make_rng
from system.status_monitor import StatusMonitor

logger = logging.getLogger("verify")

HALF_Z = np.diag([0.5, -0.5])
SANDWICH_TOL = 1e-6
BOUND_SLACK = -1e-7


@dataclass
class CheckResult:
    """One named acceptance check"""
    criterion: str
    name: str
    passed: bool
    value: Optional[float] = None
    expected: str = ""
    detail: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class VerifyReport:
    checks: List[CheckResult] = field(default_factory=list)
    timings: Dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def failures(self) -> List[CheckResult]:
        return [check for check in self.checks if not check.passed]

    def summary(self) -> Dict[str, Dict[str, int]]:
        """Passed and total check counts per criterion"""
        counts: Dict[str, Dict[str, int]] = {}
        for check in self.checks:
            entry = counts.setdefault(check.criterion, {"passed": 0, "total": 0})
            entry["total"] += 1
            entry["passed"] += int(check.passed)
        return counts

    def to_dict(self) -> Dict[str, Any]:
        return {"passed": self.passed, "summary": self.summary(),
                "checks": [check.to_dict() for check in self.checks], "timings": dict(self.timings)}


def _within(criterion: str, name: str, value: float, low: float = -math.inf, high: float = math.inf,
            detail: str = "") -> CheckResult:
    passed = value is not None and math.isfinite(value) and low <= value <= high
    expected = f"[{low:.9g}, {high:.9g}]"
    return CheckResult(criterion, name, bool(passed), None if value is None else float(value), expected, detail)


def _holds(criterion: str, name: str, condition: bool, detail: str = "") -> CheckResult:
    return CheckResult(criterion, name, bool(condition), expected="true", detail=detail)


def _erasure_config(code: Dict[str, Any]) -> Dict[str, Any]:
    """Defaults with the given code section under the uniform single-erasure mixture"""
    return ConfigValidator().apply_defaults({"code": code, "noise": {"kind": "erasure", "model": "single", "p": 1.0}})


def check_fig3(quick: bool = False, jobs: int = 1) -> List[CheckResult]:
    """Log-log slopes of the closed-form measures over n = 64..1024"""
    rows = fig3_rows(n_ladder(64, 1024), 2, [1e-5, 0.25, 0.5, 0.75, 1 - 1e-5], jobs)
    return [
        _within("fig3", f"q={fit.q:g} {fit.measure} slope", fit.slope,
                fit.expected - fit.tolerance, fit.expected + fit.tolerance)
        for fit in fit_slopes(rows)
    ]


def check_thermo_sandwich(quick: bool = False, jobs: int = 1) -> List[CheckResult]:
    """lower closed form ≤ ε̄ ≤ bracket.upper ≤ ε̃ on small thermodynamic codes"""
    results = []
    for n in ((6, 8) if quick else (6, 8, 10, 12)):
        for q in (0.0, 0.5, 1.0):
            params = ThermoParams(n, 2, q)
            code = thermo_code(params)
            noise = erasure_noise(n)
            sectors = encode_sectors(code, noise)
            candidates = {"thermo_optimal": thermo_optimal_recovery(params, code, sectors)}
            choi = epsilon_choi(code, noise, sectors, candidates)
            bracket = epsilon_bracket(code, noise, sectors, choi, candidates, thermo_registered_lower(params, noise))
            record = thermo_closed_forms(params)
            label = f"n={n} q={q:g}"
            results.append(_within("thermo_sandwich", f"{label} ε̄", choi.value,
                                   record.epsilon_lower - SANDWICH_TOL, bracket.upper + SANDWICH_TOL))
            results.append(_within("thermo_sandwich", f"{label} ε upper", bracket.upper,
                                   choi.value - SANDWICH_TOL, record.epsilon_tilde + SANDWICH_TOL))
    return results


def check_exact_ends(quick: bool = False, jobs: int = 1) -> List[CheckResult]:
    """Exactly correcting instances: ε̄ ≈ 0 and Knill-Laflamme holds"""
    instances = [("rm t=3", rm_code(RmParams(3)))]
    instances += [(f"thermo n={n} q=1", thermo_code(ThermoParams(n, 2, 1.0))) for n in (6, 8)]
    results = []
    for label, code in instances:
        noise = erasure_noise(code.n_sites)
        sectors = encode_sectors(code, noise)
        results.append(_within("exact_qec", f"{label} ε̄", epsilon_choi(code, noise, sectors).value, high=1e-6))
        results.append(_within("exact_qec", f"{label} KL violation",
                               kl_deviation(code, noise, sectors).max_violation, high=1e-8))
    return results


def check_closed_forms(quick: bool = False, jobs: int = 1) -> List[CheckResult]:
    """Numerical covariance measures against the closed forms"""
    results = []
    instances: List[Tuple[str, Any, Dict[str, Any]]] = []
    for n in ((6, 8) if quick else (6, 8, 10, 12)):
        for q in (0.0, 0.5, 1.0):
            params = ThermoParams(n, 2, q)
            instances.append((f"thermo n={n} q={q:g}", thermo_code(params), thermo_closed_forms(params).to_dict()))
    instances.append(("rm t=3", rm_code(RmParams(3)), rm_closed_forms(RmParams(3)).to_dict()))
    for label, code, record in instances:
        mismatches = closed_form_mismatches(symmetry_report(code).to_dict(), record, label)
        results.append(_holds("closed_forms", label, not mismatches, "; ".join(mismatches)))
    return results


def check_saturation(quick: bool = False, jobs: int = 1) -> List[CheckResult]:
    thermo = thermo_row(1024, 2, 0.5)
    rm = rm_row(3)
    return [
        _within("saturation", "thermo n=1024 δ_G ratio", thermo["delta_group_ratio"], 1.9, 2.1),
        _within("saturation", "thermo n=1024 δ_C ratio", thermo["delta_charge_ratio"], 0.99, 1.01),
        _within("saturation", "rm t=3 δ_G ratio", rm["delta_group_ratio"], 1.816 - 0.01, 1.816 + 0.01),
    ]


def check_sdp_oracles(quick: bool = False, jobs: int = 1) -> List[CheckResult]:
    """HKS programs and the diamond SDP against closed forms"""
    results = [
        _within("sdp", "𝔍 qubit erasure", frak_j(erasure_channel(2), HALF_Z).value, 1 - 1e-5, 1 + 1e-5),
    ]
    single = frak_f(dephasing_channel(0.25), HALF_Z).value
    results.append(_within("sdp", "𝔉 dephasing p=0.25", single, 1 / 3 - 1e-4, 1 / 3 + 1e-4))
    pair = tensor(dephasing_channel(0.25), dephasing_channel(0.25))
    total = np.kron(HALF_Z, np.eye(2)) + np.kron(np.eye(2), HALF_Z)
    results.append(_within("sdp", "𝔉 additivity", frak_f(pair, total).value, 2 * single - 1e-4, 2 * single + 1e-4))

    steps = 4 if quick else 10
    worst = 0.0
    for p in np.linspace(0.0, 1.0, steps):
        for phi in np.linspace(0.0, np.pi, steps):
            numerical = diamond_distance(rotated_dephasing(p, phi), identity_channel(2)).value
            worst = max(worst, abs(numerical - dephasing_distances(p, phi)[1]))
    results.append(_within("sdp", f"rotated dephasing diamond {steps}x{steps}", worst, high=1e-6))
    return results


def _random_channel(rng: np.random.Generator, dim: int = 2, rank: int = 2) -> Channel:
    return Channel(random_isometry(dim * rank, dim, rng).reshape(rank, dim, dim))


def _random_code(rng: np.random.Generator):
    charges = rng.permutation(np.arange(4) - 1.5)
    encoder = isometry_channel(random_isometry(4, 2, rng))
    return make_code(encoder, [0.5, -0.5], charges, name="random")


def check_inequalities(quick: bool = False, jobs: int = 1) -> List[CheckResult]:
    """Property checks over random instances and the case-study grids"""
    rng = make_rng(101)
    results = []

    failures = []
    for index in range(10 if quick else 50):
        failures += [f"#{index}: {problem}" for problem in symmetry_report(_random_code(rng)).check(True)]
    results.append(_holds("inequalities", "random isometric codes: δ_P ≥ δ_C and δ_G⋄ = δ_G", not failures,
                          "; ".join(failures)))

    rows = fig3_rows(n_ladder(64, 1024), 2, [0.25, 0.5, 0.75], jobs)
    results.append(_holds("inequalities", "thermo closed forms: δ_P ≥ δ_C",
                          all(row.delta_point >= row.delta_charge for row in rows)))

    instances = [("erasure", erasure_channel(2), HALF_Z)]
    instances += [(f"dephasing p={p:g}", dephasing_channel(p), HALF_Z) for p in (0.1, 0.25, 0.4)]
    for label, channel, h in instances:
        quantities = hks_quantities(channel, h)
        results.append(_holds("inequalities", f"𝔍² ≥ 𝔉 {label}", quantities.hks and not quantities.check(),
                              "; ".join(quantities.check())))
        if label.startswith("dephasing"):
            results.append(_within("inequalities", f"F_R - 𝔉 {label}",
                                   rld_channel_qfi(channel, h) - quantities.frak_f, low=-1e-6))

    pairs = 20 if quick else 100
    state_worst, channel_worst = -math.inf, -math.inf
    for _ in range(pairs):
        rho, sigma = random_density(3, rng), random_density(3, rng)
        lower, t, purified = fuchs_van_de_graaf(rho, sigma)
        state_worst = max(state_worst, lower - t, t - purified)
        first, second = _random_channel(rng), _random_channel(rng)
        diamond = diamond_distance(first, second).value
        t_choi = trace_distance(choi_state(first), choi_state(second))
        channel_worst = max(channel_worst, 1 - choi_fidelity(first, second) - t_choi, t_choi - diamond)
    results.append(_within("inequalities", f"1 - f ≤ T ≤ P on {pairs} state pairs", state_worst, high=1e-9))
    results.append(_within("inequalities", f"1 - f̄ ≤ T̄ ≤ D⋄ on {pairs} channel pairs", channel_worst, high=1e-7))

    grid = [{"kind": "thermo", "n": n, "m": 2, "q": q} for n in ((6, 8) if quick else (6, 8, 10))
            for q in (0.0, 0.5, 1.0)]
    grid.append({"kind": "rm", "t": 3})
    for code in grid:
        report = run_measure(_erasure_config(code))
        label = " ".join(f"{k}={v}" for k, v in code.items())
        slack = min((b.slack if b.favorable_slack is None else max(b.slack, b.favorable_slack)
                     for b in report.bounds if not b.skipped), default=0.0)
        results.append(_within("inequalities", f"{label} bound slack", slack, low=BOUND_SLACK,
                               detail=", ".join(b.name for b in report.violations)))
        results.append(_holds("inequalities", f"{label} consistency", not report.checks, "; ".join(report.checks)))
    return results


def check_transversal(quick: bool = False, jobs: int = 1) -> List[CheckResult]:
    row = transversal_row(1.0, 7, 1.0)
    ladder = run_transversal({"transversal": {"delta_tl": 1.0, "site_charge": 1.0,
                                              "n": [2 ** k for k in range(3, 11)]}})
    return [
        _within("transversal", "cap at ΔT_L=1, n=7", row["cap"], 188.07 - 0.01, 188.07 + 0.01),
        _holds("transversal", "rm t=3 denominator within the cap", row["consistent"] is True,
               f"D={row['rm_denominator']}"),
        _within("transversal", "cap growth exponent", ladder["growth_exponent"], 0.0, 2.0),
    ]


CRITERIA: List[Tuple[str, Callable[..., List[CheckResult]]]] = [
    ("fig3", check_fig3),
    ("thermo_sandwich", check_thermo_sandwich),
    ("exact_qec", check_exact_ends),
    ("closed_forms", check_closed_forms),
    ("saturation", check_saturation),
    ("sdp", check_sdp_oracles),
    ("inequalities", check_inequalities),
    ("transversal", check_transversal),
]


def run_verify(quick: bool = False, jobs: int = 1, only: Optional[Sequence[str]] = None,
               monitor: Optional[StatusMonitor] = None) -> VerifyReport:
    """
    Run the acceptance criteria

    Args:
        quick: Smaller random samples and grids
        jobs: Worker processes for the closed-form grids
        only: Criterion names to run, all by default
        monitor: Stage monitor; a private one by default

    Returns:
        VerifyReport: every check, failed ones included
    """
    monitor = monitor or StatusMonitor()
    report = VerifyReport()
    for name, criterion in CRITERIA:
        if only and name not in only:
            continue
        try:
            with monitor.stage(name, f"Acceptance: {name}"):
                results = criterion(quick=quick, jobs=jobs)
        except Exception as e:
            logger.error(f"Criterion {name} raised {type(e).__name__}: {e}")
            results = [CheckResult(name, "run", False, detail=f"{type(e).__name__}: {e}")]
        report.checks.extend(results)
        passed = sum(r.passed for r in results)
        log = logger.info if passed == len(results) else logger.warning
        log(f"{name}: {passed}/{len(results)} checks passed")
    report.timings = monitor.timings()
    return report
