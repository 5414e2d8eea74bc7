"""
Certified pseudo-unions of density-zero sets.

Given ``Z_1, Z_2, ..., Z_M`` with envelopes, :func:`pseudo_union` picks
cutoffs ``t_1 < t_2 < ...`` and returns

    Z = Z_1 ∪ (Z_2 \\ [0, t_2)) ∪ ... ∪ (Z_M \\ [0, t_M))

so that ``Z ∩ [t_m, t_{m+1}) = (Z_1 ∪ ... ∪ Z_m) ∩ [t_m, t_{m+1})`` and the
density of ``Z`` stays ``<= 1/(m+1)`` from ``t_m`` on. Each ``Z_m \\ Z`` lies in
``[0, t_m)``.
"""

from __future__ import annotations

import logging
from fractions import Fraction
from typing import List, Optional, Sequence

from .config import default_config
from .errors import BudgetExceeded, SpecError
from .index_sets import (
    IndexSet,
    TailUnion,
    density_threshold,
    scan_last_violation,
    union_count,
    union_members,
)
from .models import ContainmentEntry

logger = logging.getLogger(__name__)


def certify_union_cutoff(
    sets: Sequence[IndexSet],
    candidate: int,
    delta: Fraction,
    *,
    check_factor: int,
    iter_cap: int,
) -> int:
    """Advance *candidate* until ``∪ sets`` has density ``<= delta`` on ``[t, c·t]``."""
    t = candidate
    for _ in range(iter_cap):
        end = check_factor * t
        bad = scan_last_violation(
            union_count(sets, t, iter_cap), union_members(sets, t, end), t, end, delta, iter_cap
        )
        if bad is None:
            return t
        logger.warning(
            f"Cutoff {t} for delta={delta} failed the scan at n={bad}; advancing to {bad + 1}"
        )
        t = bad + 1
    raise BudgetExceeded(f"Cutoff for delta={delta} did not settle within {iter_cap} advances")


def pseudo_union(
    parts: Sequence[IndexSet],
    *,
    check_factor: Optional[int] = None,
    iter_cap: Optional[int] = None,
) -> TailUnion:
    """Diagonal pseudo-union; ``certified`` on the result holds ``t_1, t_2, ...``.

    Raises:
        SpecError: *parts* is empty.
        BudgetExceeded / CertificationError: a part's envelope search failed.
    """
    if not parts:
        raise SpecError("pseudo_union needs at least one part")
    cfg = default_config()
    factor = check_factor if check_factor is not None else cfg.check_factor
    cap = iter_cap if iter_cap is not None else cfg.iter_cap

    cutoffs: List[int] = []
    previous = 0
    for m in range(1, len(parts) + 1):
        budget = Fraction(1, (m + 1) * m)
        candidate = max(
            previous + 1,
            max(density_threshold(z, budget, check_factor=factor, iter_cap=cap) for z in parts[:m]),
        )
        t = certify_union_cutoff(
            parts[:m], candidate, Fraction(1, m + 1), check_factor=factor, iter_cap=cap
        )
        logger.debug(f"pseudo_union: part {m} candidate={candidate} certified={t}")
        cutoffs.append(t)
        previous = t

    tails = [(parts[0], 0)] + [(z, cutoffs[m]) for m, z in enumerate(parts) if m > 0]
    result = TailUnion(tuple(tails), tuple(cutoffs))
    logger.info(f"pseudo_union of {len(parts)} parts: cutoffs={cutoffs}")
    return result


def almost_containment(
    parts: Sequence[IndexSet], result: TailUnion, *, iter_cap: Optional[int] = None
) -> List[ContainmentEntry]:
    """``Z_m \\ result`` for every part, enumerated below its cutoff."""
    cap = iter_cap if iter_cap is not None else default_config().iter_cap
    entries = []
    for m, (z, cutoff) in enumerate(zip(parts, result.cutoffs), start=1):
        missed = []
        for seen, x in enumerate(z.members(0, cutoff)):
            if seen >= cap:
                raise BudgetExceeded(f"Part {m} has more than {cap} members below {cutoff}")
            if not result.contains(x):
                missed.append(x)
        entries.append(ContainmentEntry(part=m, cutoff=cutoff, missed=missed))
    return entries
