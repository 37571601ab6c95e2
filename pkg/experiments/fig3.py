"""
Scaling of the thermodynamic-code figures with n: closed-form rows over a
power-of-two ladder of n and one log-log OLS slope per (q, measure).
"""

import logging
import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Sequence

import numpy as np
import statsmodels.api as sm
from joblib import Parallel, delayed

from quantum.codes import ThermoParams, thermo_closed_forms
from system.errors import ConfigError

logger = logging.getLogger(__name__)

MEASURES = ("delta_group", "delta_point", "delta_charge", "epsilon_tilde")
EXPECTED_SLOPES = {"delta_group": -0.5, "delta_point": 0.5, "delta_charge": 0.0, "epsilon_tilde": -1.0}
SLOPE_TOL = {"delta_group": 0.05, "delta_point": 0.05, "delta_charge": 0.02, "epsilon_tilde": 0.05}


@dataclass
class Fig3Row:
    n: int
    m: int
    q: float
    delta_group: float
    delta_point: float
    delta_charge: float
    epsilon_tilde: float

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class SlopeFit:
    """Least-squares slope of log(measure) against log(n) at fixed q"""
    q: float
    measure: str
    slope: float
    stderr: float
    expected: float
    tolerance: float

    @property
    def within(self) -> bool:
        return math.isfinite(self.slope) and abs(self.slope - self.expected) <= self.tolerance

    def to_dict(self) -> Dict[str, Any]:
        out = asdict(self)
        out["within"] = self.within
        return out


def n_ladder(n_min: int, n_max: int) -> List[int]:
    """Powers of two in [n_min, n_max]"""
    ladder = [2 ** k for k in range(2, 64) if n_min <= 2 ** k <= n_max]
    if len(ladder) < 2:
        raise ConfigError(f"Grid [{n_min}, {n_max}] holds fewer than two powers of two", key="grid.n_min")
    return ladder


def fig3_row(n: int, m: int, q: float) -> Fig3Row:
    record = thermo_closed_forms(ThermoParams(n, m, q))
    return Fig3Row(n, m, q, record.delta_group, record.delta_point, record.delta_charge, record.epsilon_tilde)


def fig3_rows(ns: Sequence[int], m: int, qs: Sequence[float], jobs: int = 1) -> List[Fig3Row]:
    """Rows ordered by q, then n, whatever the completion order of the workers"""
    tasks = [(n, m, q) for q in qs for n in ns]
    return Parallel(n_jobs=jobs)(delayed(fig3_row)(*task) for task in tasks)


def fit_slope(ns: Sequence[float], values: Sequence[float]) -> tuple:
    """(slope, standard error) of log(values) ~ 1 + log(ns); NaN when a value is not positive"""
    values = np.asarray(values, dtype=float)
    if np.any(values <= 0) or len(values) < 2:
        return math.nan, math.nan
    design = sm.add_constant(np.log(np.asarray(ns, dtype=float)))
    result = sm.OLS(np.log(values), design).fit()
    stderr = float(result.bse[1]) if len(values) > 2 else 0.0
    return float(result.params[1]), stderr


def fit_slopes(rows: Sequence[Fig3Row]) -> List[SlopeFit]:
    fits = []
    for q in sorted({row.q for row in rows}):
        selected = sorted((row for row in rows if row.q == q), key=lambda row: row.n)
        ns = [row.n for row in selected]
        for measure in MEASURES:
            slope, stderr = fit_slope(ns, [getattr(row, measure) for row in selected])
            fits.append(SlopeFit(q, measure, slope, stderr, EXPECTED_SLOPES[measure], SLOPE_TOL[measure]))
            if math.isfinite(slope) and not fits[-1].within:
                logger.warning(f"q={q:g}: {measure} slope {slope:.4f} outside "
                               f"{EXPECTED_SLOPES[measure]:+.2f} ± {SLOPE_TOL[measure]}")
    return fits


def run_fig3(config: Dict[str, Any], jobs: int = 1) -> Dict[str, Any]:
    """
    Closed-form rows over grid.n_min..grid.n_max (powers of two), grid.m
    and every grid.q, with the slope fits
    """
    grid = config["grid"]
    ns = n_ladder(grid["n_min"], grid["n_max"])
    m = grid["m"]
    if any((n + m) % 2 for n in ns):
        raise ConfigError(f"n + m must be even on the whole ladder, m={m}", key="grid.m")
    rows = fig3_rows(ns, m, grid["q"], jobs)
    fits = fit_slopes(rows)
    logger.info(f"fig3 grid: {len(rows)} rows, {sum(f.within for f in fits)}/{len(fits)} slopes on target")
    return {"rows": [row.to_dict() for row in rows], "slopes": [fit.to_dict() for fit in fits]}
