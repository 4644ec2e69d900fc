"""
Dropping numerically insignificant terms from synthesized candidates.
"""

import logging
from fractions import Fraction
from typing import Dict, List, Tuple

from src.core.errors import SynthesisError
from src.core.polynomial import Poly

logger = logging.getLogger(__name__)


def truncate_small_terms(p: Poly, rel_threshold: float) -> Tuple[Poly, Dict[str, object]]:
    """Remove terms whose |coefficient| is below rel_threshold * max |coefficient|"""
    if rel_threshold < 0:
        raise ValueError(f"threshold must be nonnegative, got {rel_threshold}")
    if p.is_zero():
        raise SynthesisError("cannot truncate the zero polynomial")

    cutoff = p.max_abs_coefficient() * Fraction(rel_threshold)
    kept = {}
    dropped: List[Dict[str, object]] = []
    for mono, c in p.items():
        if abs(c) < cutoff:
            dropped.append({"monomial": list(mono), "coefficient": str(c)})
        else:
            kept[mono] = c
    if not kept:
        raise SynthesisError("truncation would remove every term")

    if dropped:
        logger.info("truncated %d of %d terms below %s", len(dropped), len(dropped) + len(kept), cutoff)
    report = {
        "threshold": rel_threshold,
        "cutoff": str(cutoff),
        "kept": len(kept),
        "dropped": dropped,
    }
    return Poly(p.variables, kept), report
