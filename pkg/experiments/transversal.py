"""
Precision caps on transversal logical rotations e^{-i2πT_L/D}: the
largest compatible denominator D, its power-of-two floor and the Clifford
hierarchy level it allows, over a ladder of code lengths.
"""

import logging
import math
from typing import Any, Dict, List, Optional

from experiments.fig3 import fit_slope
from quantum.bound import clifford_level_cap, transversal_gate_bound
from quantum.codes import RmParams, rm_transversal_denominator

logger = logging.getLogger(__name__)

COLUMNS = ["n", "delta_tl", "site_charge", "cap", "power_of_two_cap", "level_cap", "rm_t", "rm_denominator",
           "consistent"]


def _rm_t(n: int) -> Optional[int]:
    """t with n = 2^t - 1, t >= 3"""
    t = int(round(math.log2(n + 1)))
    return t if t >= 3 and 2 ** t - 1 == n else None


def transversal_row(delta_tl: float, n: int, site_charge: float) -> Dict[str, Any]:
    cap = transversal_gate_bound(delta_tl, [site_charge] * n)
    level = clifford_level_cap(cap)
    t = _rm_t(n)
    denominator = rm_transversal_denominator(RmParams(t)) if t is not None else None
    return {
        "n": n,
        "delta_tl": delta_tl,
        "site_charge": site_charge,
        "cap": cap,
        "power_of_two_cap": 2 ** level,
        "level_cap": level,
        "rm_t": t,
        "rm_denominator": denominator,
        "consistent": None if denominator is None else denominator <= cap,
    }


def run_transversal(config: Dict[str, Any]) -> Dict[str, Any]:
    section = config["transversal"]
    rows: List[Dict[str, Any]] = [transversal_row(section["delta_tl"], n, section["site_charge"])
                                  for n in sorted(section["n"])]
    for row in rows:
        if row["consistent"] is False:
            logger.warning(f"Reed-Muller n={row['n']}: D={row['rm_denominator']} exceeds the cap {row['cap']:.2f}")
    growth = None
    if len(rows) >= 2:
        growth, _ = fit_slope([row["n"] for row in rows], [row["cap"] for row in rows])
        logger.info(f"Transversal cap grows like n^{growth:.3f}")
    return {"rows": rows, "growth_exponent": growth}
