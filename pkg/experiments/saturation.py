"""
How closely the explicit codes saturate the covariance lower bounds:
δ_G against the global bound with 𝔍 from the single-erasure structure,
δ_C against ΔH_L - 2ε𝔍, and the Reed-Muller codes against the exact-QEC
bound.
"""

import logging
import math
from functools import lru_cache
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import statsmodels.api as sm
from joblib import Parallel, delayed

from experiments.fig3 import n_ladder
from quantum.bound import grp, noise_structure_bounds
from quantum.codes import SITE_CHARGE, RmParams, ThermoParams, rm_closed_forms, thermo_closed_forms
from quantum.noise import erasure_noise
from system.errors import ConfigError

logger = logging.getLogger(__name__)

COLUMNS = [
    "family", "n", "m", "q", "t", "frak_j", "epsilon_lower", "epsilon_upper",
    "delta_group", "delta_group_bound", "delta_group_ratio", "delta_group_ratio_lower_eps",
    "delta_charge", "delta_charge_bound", "delta_charge_ratio", "delta_charge_ratio_lower_eps",
]
TARGETS = {"delta_group_ratio": 2.0, "delta_charge_ratio": 1.0}


@lru_cache(maxsize=None)
def single_erasure_frak_j(n: int) -> float:
    """Structure bound on 𝔍 for the uniform single-erasure mixture with charges ±1/2"""
    bounds = noise_structure_bounds(erasure_noise(n), SITE_CHARGE)
    if bounds.frak_j is None:
        raise ConfigError("Single-erasure noise violates HKS", key="noise.kind")
    return float(bounds.frak_j)


def _ratio(value: float, bound: float) -> float:
    return value / bound if bound > 1e-15 else math.nan


def thermo_row(n: int, m: int, q: float, frak_j: Optional[float] = None) -> Dict[str, Any]:
    record = thermo_closed_forms(ThermoParams(n, m, q))
    j = single_erasure_frak_j(n) if frak_j is None else frak_j
    delta_l, delta_s = float(m), float(n)
    row = {"family": "thermo", "n": n, "m": m, "q": q, "t": None, "frak_j": j,
           "epsilon_lower": record.epsilon_lower, "epsilon_upper": record.epsilon_tilde,
           "delta_group": record.delta_group, "delta_charge": record.delta_charge}
    for suffix, eps in (("", record.epsilon_tilde), ("_lower_eps", record.epsilon_lower)):
        argument = delta_l - 2 * eps * j
        group_bound, _ = grp(argument, delta_s)
        row[f"delta_group_ratio{suffix}"] = _ratio(record.delta_group, group_bound)
        row[f"delta_charge_ratio{suffix}"] = _ratio(record.delta_charge, argument)
        if not suffix:
            row["delta_group_bound"] = group_bound
            row["delta_charge_bound"] = argument
    return row


def rm_row(t: int) -> Dict[str, Any]:
    params = RmParams(t)
    record = rm_closed_forms(params)
    group_bound, _ = grp(1.0, float(params.n))
    return {"family": "rm", "n": params.n, "m": None, "q": None, "t": t, "frak_j": None,
            "epsilon_lower": 0.0, "epsilon_upper": 0.0,
            "delta_group": record.delta_group, "delta_group_bound": group_bound,
            "delta_group_ratio": _ratio(record.delta_group, group_bound),
            "delta_group_ratio_lower_eps": _ratio(record.delta_group, group_bound),
            "delta_charge": record.delta_charge, "delta_charge_bound": 1.0,
            "delta_charge_ratio": record.delta_charge, "delta_charge_ratio_lower_eps": record.delta_charge}


def asymptote(ns: Sequence[float], ratios: Sequence[float]) -> Optional[Dict[str, float]]:
    """Intercept and slope of ratio ~ a + b/n; None with fewer than two finite points"""
    ns = np.asarray(ns, dtype=float)
    ratios = np.asarray(ratios, dtype=float)
    finite = np.isfinite(ratios)
    if finite.sum() < 2:
        return None
    design = sm.add_constant(1.0 / ns[finite])
    result = sm.OLS(ratios[finite], design).fit()
    return {"limit": float(result.params[0]), "coefficient": float(result.params[1])}


def run_saturation(config: Dict[str, Any], jobs: int = 1) -> Dict[str, Any]:
    """Thermodynamic rows over the n ladder and every grid.q, then Reed-Muller rows over grid.t"""
    grid = config["grid"]
    ns = n_ladder(grid["n_min"], grid["n_max"])
    m = grid["m"]
    qs = [q for q in grid["q"] if q > 0]
    # one structure SDP per n, shared with the workers
    js = {n: single_erasure_frak_j(n) for n in ns}
    thermo = Parallel(n_jobs=jobs)(delayed(thermo_row)(n, m, q, js[n]) for q in qs for n in ns)
    rm = [rm_row(t) for t in grid["t"]]

    fits: List[Dict[str, Any]] = []
    for q in qs:
        selected = [row for row in thermo if row["q"] == q]
        for column, target in TARGETS.items():
            fit = asymptote([row["n"] for row in selected], [row[column] for row in selected])
            if fit is None:
                continue
            fit.update({"q": q, "ratio": column, "target": target,
                        "at_largest_n": selected[-1][column]})
            fits.append(fit)
    for fit in fits:
        logger.info(f"q={fit['q']:g} {fit['ratio']}: {fit['at_largest_n']:.4f} at n={ns[-1]}, "
                    f"limit {fit['limit']:.4f} (target {fit['target']:g})")
    return {"rows": thermo + rm, "asymptotes": fits}
