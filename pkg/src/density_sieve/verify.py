"""
Exact and statistical checks that an extracted subsequence still covers.

- :func:`truncated_residual`: exact measure of the part of ``X_ε`` hit by
  fewer than ``m`` of the chosen block unions ``j..K``.
- :func:`bc_bound_check`: seed ensemble average of that residual (``m = 1``)
  against the independence bound ``μ(X_ε)·(j-1)/K`` plus a slack of
  ``slack_sigmas`` standard errors.
- :func:`monte_carlo_points`: hit counts of random rational points.
- :func:`report` / :func:`render_report`: JSON document and Markdown table.

Usage::

    from density_sieve.verify import bc_bound_check, report
    entry = bc_bound_check(dyadic_family(), "1/8", depth=12, j=2, seeds=range(100))
    doc = report({"family": "dyadic"}, [entry])
"""

from __future__ import annotations

import math
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

from .config import SieveConfig, default_config
from .cover_family import CoverFamily, describe
from .errors import SpecError
from .extractor import (
    BlockStructure,
    ExtractionCertificate,
    block_intersection,
    build_blocks,
    select_subsequence,
)
from .index_sets import IndexSet
from .measure_sets import (
    IntervalUnion,
    RationalLike,
    contains_point,
    difference,
    format_rational,
    kfold_region,
    measure,
    union_all,
)
from .models import CheckEntry, VerificationReport
from .rng import RngStream, check_seed

UnionCache = Dict[Tuple[int, int], IntervalUnion]

# ------------------------------------------------------------------
# Exact residuals
# ------------------------------------------------------------------


def _chosen(
    family: CoverFamily, z_boundaries: Sequence[int], k: int, xi: int, cache: UnionCache
) -> IntervalUnion:
    key = (k, xi)
    if key not in cache:
        start, stop = z_boundaries[k - 1], z_boundaries[k]
        cache[key] = union_all(
            [family.get(n) for n in range(start + xi, stop, k)], family.window
        )
    return cache[key]


def chosen_union(family: CoverFamily, cert: ExtractionCertificate, k: int) -> IntervalUnion:
    """``∪_{n ∈ W^k_{ξ_k}} A_n``."""
    if not 1 <= k <= cert.z.depth:
        raise SpecError(f"Block {k} outside [1, {cert.z.depth}]")
    return _chosen(family, cert.z.boundaries, k, cert.z.choices[k - 1], {})


def _residual(
    family: CoverFamily,
    x_eps: IntervalUnion,
    boundaries: Sequence[int],
    choices: Sequence[int],
    j: int,
    K: int,
    m: int,
    cache: UnionCache,
) -> Fraction:
    unions = [_chosen(family, boundaries, k, choices[k - 1], cache) for k in range(j, K + 1)]
    covered = kfold_region(unions, m, family.window)
    return measure(difference(x_eps, covered))


def truncated_residual(
    family: CoverFamily, cert: ExtractionCertificate, j: int, K: int, m: int = 1
) -> Fraction:
    """Measure of ``{x ∈ X_ε : x lies in fewer than m chosen unions of blocks j..K}``."""
    if not 1 <= j <= K <= cert.blocks.depth:
        raise SpecError(f"Need 1 <= j <= K <= {cert.blocks.depth}, got j={j}, K={K}")
    if m < 1:
        raise SpecError(f"Multiplicity must be at least 1, got {m}")
    if cert.x_eps.window != family.window:
        raise SpecError("Certificate window differs from the family window")
    return _residual(family, cert.x_eps, cert.z.boundaries, cert.z.choices, j, K, m, {})


# ------------------------------------------------------------------
# Borel-Cantelli ensemble check
# ------------------------------------------------------------------


def sqrt_upper(x: Fraction, resolution: int = 10**9) -> Fraction:
    """Rational upper bound on ``sqrt(x)`` within ``1 / resolution``."""
    if x < 0:
        raise SpecError(f"sqrt of negative value {x}")
    scaled = math.ceil(x * resolution * resolution)
    root = math.isqrt(scaled)
    if root * root < scaled:
        root += 1
    return Fraction(root, resolution)


def bc_bound_check(
    family: CoverFamily,
    epsilon: RationalLike,
    depth: int,
    j: int,
    seeds: Iterable[int],
    *,
    workers: int = 1,
    config: Optional[SieveConfig] = None,
    blocks: Optional[BlockStructure] = None,
) -> CheckEntry:
    """Seed-averaged residual of blocks ``j..depth`` against ``μ(X_ε)·(j-1)/depth``.

    Blocks depend only on the family and ``ε``, so they are built once; each
    seed contributes its own ``ξ`` draws. Residuals are summed in seed order
    whatever the worker count.
    """
    cfg = config or default_config()
    seeds = [check_seed(s) for s in seeds]
    if len(seeds) < cfg.min_seeds:
        raise SpecError(f"bc_bound_check needs at least {cfg.min_seeds} seeds, got {len(seeds)}")
    if not 1 <= j <= depth:
        raise SpecError(f"Need 1 <= j <= depth, got j={j}, depth={depth}")

    blocks = blocks or build_blocks(family, epsilon, depth, iter_cap=cfg.iter_cap)
    x_eps = block_intersection(family, blocks)
    cache: UnionCache = {}

    def run(seed: int) -> Fraction:
        z = select_subsequence(blocks, seed)
        return _residual(family, x_eps, z.boundaries, z.choices, j, depth, 1, cache)

    with ThreadPoolExecutor(max_workers=max(1, workers)) as executor:
        residuals = list(executor.map(run, seeds))

    mu = measure(x_eps)
    bound = mu * Fraction(j - 1, depth)
    average = sum(residuals, Fraction(0)) / len(residuals)
    variance = statistics.variance(residuals) if len(residuals) > 1 else Fraction(0)
    slack = cfg.slack_sigmas * sqrt_upper(Fraction(variance) / len(residuals))
    margin = bound + slack - average
    return CheckEntry(
        name="bc_bound",
        verdict="pass" if margin >= 0 else "fail",
        metrics={
            "family": describe(family)["kind"],
            "epsilon": format_rational(blocks.epsilon),
            "j": str(j),
            "K": str(depth),
            "seeds": str(len(seeds)),
            "mu_x_eps": format_rational(mu),
            "bound": format_rational(bound),
            "average": format_rational(average),
            "slack": format_rational(slack),
            "margin": format_rational(margin),
        },
        per_seed=[format_rational(r) for r in residuals],
    )


def residual_entry(
    family: CoverFamily, cert: ExtractionCertificate, j: int, K: int, m: int = 1
) -> CheckEntry:
    """:func:`truncated_residual` as an informational report entry."""
    value = truncated_residual(family, cert, j, K, m)
    return CheckEntry(
        name="truncated_residual",
        verdict="info",
        metrics={
            "j": str(j),
            "K": str(K),
            "m": str(m),
            "residual": format_rational(value),
            "epsilon": format_rational(cert.epsilon),
        },
    )


# ------------------------------------------------------------------
# Monte Carlo
# ------------------------------------------------------------------


@dataclass
class PointStats:
    counts: List[int]
    histogram: Dict[int, int] = field(default_factory=dict)

    @property
    def minimum(self) -> int:
        return min(self.counts) if self.counts else 0

    @property
    def mean(self) -> Fraction:
        return Fraction(sum(self.counts), len(self.counts)) if self.counts else Fraction(0)

    def to_entry(self) -> CheckEntry:
        return CheckEntry(
            name="monte_carlo_points",
            verdict="info",
            metrics={
                "points": str(len(self.counts)),
                "min": str(self.minimum),
                "mean": format_rational(self.mean),
                "histogram": ",".join(f"{c}:{n}" for c, n in sorted(self.histogram.items())),
            },
        )


def sample_points(family: CoverFamily, points: int, seed: int) -> List[Fraction]:
    stream = RngStream(check_seed(seed), stream="points")
    w = family.window
    return [w.lo + w.length * stream.uniform_fraction(i) for i in range(points)]


def monte_carlo_points(
    family: CoverFamily, z: IndexSet, n_max: int, points: int, seed: int
) -> PointStats:
    """Hit counts ``|{n ∈ z, n < n_max : x ∈ A_n}|`` of uniform rational points."""
    if points < 1:
        raise SpecError(f"points must be positive, got {points}")
    xs = sample_points(family, points, seed)
    counts = [0] * points
    for n in z.members(0, n_max):
        a_n = family.get(n)
        for i, x in enumerate(xs):
            if contains_point(a_n, x):
                counts[i] += 1
    histogram: Dict[int, int] = {}
    for c in counts:
        histogram[c] = histogram.get(c, 0) + 1
    return PointStats(counts, histogram)


# ------------------------------------------------------------------
# Reports
# ------------------------------------------------------------------


def report(
    inputs: Dict[str, Any],
    results: Sequence[CheckEntry],
    config: Optional[SieveConfig] = None,
) -> VerificationReport:
    return VerificationReport(
        inputs=dict(inputs),
        checks=list(results),
        config=(config or default_config()).to_dict(),
    )


def render_report(doc: VerificationReport) -> str:
    """Markdown table of every check."""
    verdict = "PASS" if doc.passed else "FAIL"
    lines = [
        "## Verification",
        "",
        f"**Verdict:** {verdict} ({len(doc.checks)} checks)",
        "",
        "| Check | Verdict | Metrics |",
        "|-------|---------|---------|",
    ]
    for check in doc.checks:
        metrics = ", ".join(f"{k}={v}" for k, v in sorted(check.metrics.items()))
        lines.append(f"| {check.name} | {check.verdict} | {metrics} |")
    return "\n".join(lines) + "\n"

