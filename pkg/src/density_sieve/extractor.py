"""
Block construction and random progression selection.

``build_blocks`` finds boundaries ``0 = N_0 < N_1 < ...`` where block ``k``
leaves a residual of at most ``ε / 2^k`` and has length divisible by ``k``.
``select_subsequence`` keeps one residue class mod ``k`` per block, drawn
uniformly from ``RngStream(seed)``. The result has density about ``1/k`` in
block ``k``; on average it still covers the window infinitely often.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple

from .config import SieveConfig, default_config
from .cover_family import CoverFamily, SigmaFiniteFamily, describe, residual_trace
from .errors import SpecError
from .index_sets import APSelection, TailUnion, from_json
from .measure_sets import (
    IntervalUnion,
    RationalLike,
    as_rational,
    format_rational,
    intersect,
    measure,
    parse_rational,
    union_from_json,
    union_to_json,
    window_from_quad,
)
from .models import CertificateRecord
from .pideal import pseudo_union
from .rng import RngStream, check_seed, sub_seed

logger = logging.getLogger(__name__)


# ------------------------------------------------------------------
# Data structures
# ------------------------------------------------------------------


@dataclass(frozen=True)
class BlockStructure:
    """Boundaries with per-block residual certificates."""

    boundaries: Tuple[int, ...]
    residuals: Tuple[Fraction, ...]
    epsilon: Fraction
    minimal_ends: Tuple[int, ...] = ()

    def __post_init__(self) -> None:
        b = self.boundaries
        if not b or b[0] != 0:
            raise SpecError("Block boundaries must start at 0")
        if len(self.residuals) != len(b) - 1:
            raise SpecError(f"Expected {len(b) - 1} residuals, got {len(self.residuals)}")
        for k in range(1, len(b)):
            length = b[k] - b[k - 1]
            if length <= 0 or length % k:
                raise SpecError(f"Block {k} has length {length}, not a positive multiple of {k}")

    @property
    def depth(self) -> int:
        return len(self.boundaries) - 1

    @property
    def end(self) -> int:
        return self.boundaries[-1]

    def block(self, k: int) -> range:
        return range(self.boundaries[k - 1], self.boundaries[k])

    def violations(self) -> List[str]:
        """Blocks whose recorded residual exceeds ``ε / 2^k``."""
        return [
            f"block {k}: residual {r} > {self.epsilon / 2**k}"
            for k, r in enumerate(self.residuals, start=1)
            if r > self.epsilon / 2**k
        ]


@dataclass(frozen=True)
class ExtractionCertificate:
    epsilon: Fraction
    blocks: BlockStructure
    x_eps: IntervalUnion
    z: APSelection
    seed: int
    family: Dict[str, Any] = field(default_factory=dict)

    def to_record(self, config: Optional[SieveConfig] = None) -> CertificateRecord:
        return CertificateRecord(
            epsilon=format_rational(self.epsilon),
            boundaries=list(self.blocks.boundaries),
            minimal_ends=list(self.blocks.minimal_ends),
            residuals=[format_rational(r) for r in self.blocks.residuals],
            seed=self.seed,
            z=self.z.to_json(),
            x_eps=union_to_json(self.x_eps),
            window=self.x_eps.window.to_quad(),
            family=self.family,
            depth=self.blocks.depth,
            truncated=True,
            config=(config or default_config()).to_dict(),
        )

    @classmethod
    def from_record(cls, record: CertificateRecord) -> "ExtractionCertificate":
        """Rebuild and revalidate a certificate; inconsistencies raise SpecError."""
        epsilon = parse_rational(record.epsilon)
        blocks = BlockStructure(
            tuple(record.boundaries),
            tuple(parse_rational(r) for r in record.residuals),
            epsilon,
            tuple(record.minimal_ends),
        )
        z = from_json(record.z)
        if not isinstance(z, APSelection) or z.boundaries != blocks.boundaries:
            raise SpecError("Certificate z is not an APSelection over its own blocks")
        x_eps = union_from_json(record.x_eps)
        if x_eps.window != window_from_quad(record.window):
            raise SpecError("Certificate x_eps window differs from its declared window")
        cert = cls(epsilon, blocks, x_eps, z, check_seed(record.seed), dict(record.family))
        problems = cert.violations()
        if problems:
            raise SpecError(f"Certificate invariants fail: {'; '.join(problems)}")
        return cert

    def violations(self, family: Optional[CoverFamily] = None) -> List[str]:
        """Broken invariants; with *family*, residuals and X_eps are recomputed too."""
        problems = self.blocks.violations()
        uncovered = self.x_eps.window.length - measure(self.x_eps)
        if uncovered > self.epsilon:
            problems.append(f"measure of window minus X_eps is {uncovered} > {self.epsilon}")
        if self.blocks.minimal_ends and len(self.blocks.minimal_ends) != self.blocks.depth:
            problems.append("minimal_ends length differs from depth")
        if family is not None:
            trace = residual_trace(family, self.blocks.boundaries)
            for k, (recorded, actual) in enumerate(zip(self.blocks.residuals, trace), start=1):
                if recorded != actual:
                    problems.append(f"block {k}: recorded residual {recorded} != {actual}")
            if block_intersection(family, self.blocks) != self.x_eps:
                problems.append("X_eps differs from the intersection of block unions")
        return problems


# ------------------------------------------------------------------
# Operations
# ------------------------------------------------------------------


def build_blocks(
    family: CoverFamily,
    epsilon: RationalLike,
    depth: int,
    *,
    iter_cap: Optional[int] = None,
) -> BlockStructure:
    """Minimal residual-meeting endpoint per block, padded up to a multiple of ``k``.

    Raises:
        SpecError: ``epsilon <= 0`` or ``depth < 1``.
        BudgetExceeded: some block found no covering prefix within *iter_cap* sets.
    """
    epsilon = as_rational(epsilon)
    if epsilon <= 0:
        raise SpecError(f"epsilon must be positive, got {epsilon}")
    if depth < 1:
        raise SpecError(f"depth must be at least 1, got {depth}")
    cap = iter_cap if iter_cap is not None else default_config().iter_cap

    boundaries, residuals, minimal_ends = [0], [], []
    for k in range(1, depth + 1):
        start = boundaries[-1]
        target = epsilon / 2**k
        end = family.cover_endpoint(start, target, cap)
        length = end - start
        padded = start + -(-length // k) * k
        residual = family.residual(start, padded)
        logger.debug(f"block {k}: minimal end {end}, padded to {padded}, residual {residual}")
        minimal_ends.append(end)
        boundaries.append(padded)
        residuals.append(residual)

    logger.info(f"Built {depth} blocks for epsilon={epsilon}: N_K={boundaries[-1]}")
    return BlockStructure(tuple(boundaries), tuple(residuals), epsilon, tuple(minimal_ends))


def draw_choices(depth: int, seed: int) -> Tuple[int, ...]:
    """``ξ_k`` uniform on ``{0, ..., k-1}``, keyed by ``(seed, k)``."""
    stream = RngStream(seed)
    return tuple(stream.uniform_below(k, k) for k in range(1, depth + 1))


def select_subsequence(
    blocks: BlockStructure, seed: int, choices: Optional[Sequence[int]] = None
) -> APSelection:
    """``Z = ∪_k W^k_{ξ_k}``; *choices* overrides the random draws."""
    if choices is None:
        choices = draw_choices(blocks.depth, seed)
    return APSelection(blocks.boundaries, tuple(choices))


def block_intersection(family: CoverFamily, blocks: BlockStructure) -> IntervalUnion:
    """``X_ε = ∩_k (A_{N_{k-1}} ∪ ... ∪ A_{N_k - 1})`` to the built depth."""
    x_eps = IntervalUnion.full(family.window)
    for a, b in zip(blocks.boundaries, blocks.boundaries[1:]):
        x_eps = intersect(x_eps, family.union_range(a, b))
    return x_eps


def extract(
    family: CoverFamily,
    epsilon: RationalLike,
    depth: int,
    seed: Optional[int] = None,
    *,
    iter_cap: Optional[int] = None,
    choices: Optional[Sequence[int]] = None,
) -> ExtractionCertificate:
    """``build_blocks`` + ``select_subsequence`` with the resulting ``X_ε``."""
    seed = check_seed(seed if seed is not None else default_config().default_seed)
    blocks = build_blocks(family, epsilon, depth, iter_cap=iter_cap)
    z = select_subsequence(blocks, seed, choices)
    x_eps = block_intersection(family, blocks)
    return ExtractionCertificate(blocks.epsilon, blocks, x_eps, z, seed, describe(family))


@dataclass(frozen=True)
class AeExtraction:
    """Pseudo-union of ``Z_1, Z_{1/2}, ..., Z_{1/m_max}`` with its certificates."""

    z: TailUnion
    certificates: Tuple[ExtractionCertificate, ...]

    @property
    def cutoffs(self) -> Tuple[int, ...]:
        return self.z.certified


def extract_ae(
    family: CoverFamily,
    depth: int,
    seed: Optional[int] = None,
    m_max: int = 3,
    *,
    workers: int = 1,
    iter_cap: Optional[int] = None,
    check_factor: Optional[int] = None,
) -> AeExtraction:
    """Extract for ``ε = 1, 1/2, ..., 1/m_max`` and glue with a pseudo-union.

    Run ``m`` uses ``sub_seed(seed, "epsilon", m)``; runs are independent and
    may go through *workers* threads without changing the result.
    """
    if m_max < 1:
        raise SpecError(f"m_max must be at least 1, got {m_max}")
    seed = check_seed(seed if seed is not None else default_config().default_seed)

    def run(m: int) -> ExtractionCertificate:
        return extract(
            family, Fraction(1, m), depth, sub_seed(seed, "epsilon", m), iter_cap=iter_cap
        )

    with ThreadPoolExecutor(max_workers=max(1, workers)) as executor:
        certificates = tuple(executor.map(run, range(1, m_max + 1)))
    z = pseudo_union([c.z for c in certificates], check_factor=check_factor, iter_cap=iter_cap)
    return AeExtraction(z, certificates)


@dataclass(frozen=True)
class SigmaFiniteExtraction:
    z: TailUnion
    per_window: Tuple[AeExtraction, ...]


def extract_sigma_finite(
    sf: SigmaFiniteFamily,
    depth: int,
    seed: Optional[int] = None,
    window_count: Optional[int] = None,
    *,
    m_max: int = 2,
    workers: int = 1,
    iter_cap: Optional[int] = None,
    check_factor: Optional[int] = None,
) -> SigmaFiniteExtraction:
    """Per-window ``extract_ae`` glued by one more pseudo-union."""
    count = window_count if window_count is not None else len(sf)
    if not 1 <= count <= len(sf):
        raise SpecError(f"window_count must lie in [1, {len(sf)}], got {count}")
    seed = check_seed(seed if seed is not None else default_config().default_seed)
    per_window = tuple(
        extract_ae(
            sf.restrict(m),
            depth,
            sub_seed(seed, "window", m),
            m_max,
            workers=workers,
            iter_cap=iter_cap,
            check_factor=check_factor,
        )
        for m in range(count)
    )
    z = pseudo_union([r.z for r in per_window], check_factor=check_factor, iter_cap=iter_cap)
    return SigmaFiniteExtraction(z, per_window)
