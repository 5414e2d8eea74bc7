"""
Cantor-space block systems that every density-zero index set fails to cover.

Block 1 is the whole space. In block ``k+1`` the parents of block ``k`` are
taken in index order; parent ``i`` gets children ``t_i .. s_i`` (``t_0 = N_k``),
``2^w`` of them with ``2^w`` the smallest power of two ``>= t_i + 2``, which are
the ``w``-bit refinements of the parent's cylinder. Then ``s_i >= 2 t_i``.

A set ``z`` with density ``<= 1/2`` beyond ``n0`` cannot contain all of
``t..s`` once ``t >= n0``, so :func:`defeat` can walk down the tree avoiding
``z`` and produce a point covered only finitely often by ``{U_n : n ∈ z}``.

Block sizes grow like iterated doubling: a depth-4 system already has about
``2^127`` sets, so children are kept as ranges and cylinders are derived on
demand.
"""

from __future__ import annotations

import bisect
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, Iterator, List, Optional, Tuple

from .config import SieveConfig, default_config
from .errors import BudgetExceeded, CertificationError, SpecError
from .index_sets import IndexSet, density_threshold
from .models import CantorSystemRecord, DefeatRecord

logger = logging.getLogger(__name__)


# ------------------------------------------------------------------
# Data structures
# ------------------------------------------------------------------


@dataclass(frozen=True)
class Cylinder:
    """All infinite binary sequences extending ``prefix``."""

    prefix: str

    def __post_init__(self) -> None:
        if set(self.prefix) - {"0", "1"}:
            raise SpecError(f"Cylinder prefix must be a bit string, got {self.prefix!r}")

    def extends(self, other: "Cylinder") -> bool:
        """True iff this cylinder is contained in *other*."""
        return self.prefix.startswith(other.prefix)

    def disjoint(self, other: "Cylinder") -> bool:
        return not (self.extends(other) or other.extends(self))

    def contains(self, point: "CantorPoint") -> bool:
        return point.prefix(len(self.prefix)) == self.prefix

    @property
    def measure(self) -> Fraction:
        return Fraction(1, 2 ** len(self.prefix))


@dataclass(frozen=True)
class CantorPoint:
    """Finitely many bits; every later bit is 0."""

    bits: str

    def prefix(self, length: int) -> str:
        if length <= len(self.bits):
            return self.bits[:length]
        return self.bits + "0" * (length - len(self.bits))


@dataclass(frozen=True)
class ChildRange:
    """Parent ``U_parent`` has children ``U_t .. U_s`` extending it by ``width`` bits."""

    parent: int
    t: int
    s: int
    width: int
    prefix: str

    def child_prefix(self, n: int) -> str:
        if not self.t <= n <= self.s:
            raise SpecError(f"{n} is not a child of U_{self.parent}")
        suffix = format(n - self.t, "b").zfill(self.width) if self.width else ""
        return self.prefix + suffix

    def to_row(self) -> List[Any]:
        return [self.parent, self.t, self.s, self.width, self.prefix]


@dataclass(frozen=True)
class CantorBlockSystem:
    boundaries: Tuple[int, ...]
    child_ranges: Tuple[ChildRange, ...]
    _starts: Tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "boundaries", tuple(self.boundaries))
        object.__setattr__(self, "child_ranges", tuple(self.child_ranges))
        if not self.boundaries or self.boundaries[0] != 0:
            raise SpecError("Cantor system boundaries must start at 0")
        object.__setattr__(self, "_starts", tuple(r.t for r in self.child_ranges))

    @property
    def depth(self) -> int:
        return len(self.boundaries) - 1

    @property
    def size(self) -> int:
        return self.boundaries[-1]

    def block_of(self, n: int) -> int:
        if not 0 <= n < self.size:
            raise SpecError(f"Index {n} outside [0, {self.size})")
        return bisect.bisect_right(self.boundaries, n)

    def range_of_child(self, n: int) -> ChildRange:
        pos = bisect.bisect_right(self._starts, n) - 1
        if pos < 0 or not self.child_ranges[pos].t <= n <= self.child_ranges[pos].s:
            raise SpecError(f"U_{n} has no parent range")
        return self.child_ranges[pos]

    def range_of_parent(self, parent: int) -> Optional[ChildRange]:
        for r in self.child_ranges:
            if r.parent == parent:
                return r
        return None

    def cylinder(self, n: int) -> Cylinder:
        """``U_n``."""
        if n == 0:
            return Cylinder("")
        return Cylinder(self.range_of_child(n).child_prefix(n))

    def cylinders(self, k: int) -> Iterator[Cylinder]:
        """The cylinders of block ``k``, in index order."""
        for n in range(self.boundaries[k - 1], self.boundaries[k]):
            yield self.cylinder(n)

    def to_record(self) -> CantorSystemRecord:
        return CantorSystemRecord(
            boundaries=list(self.boundaries),
            child_ranges=[r.to_row() for r in self.child_ranges],
        )

    @classmethod
    def from_record(cls, record: CantorSystemRecord) -> "CantorBlockSystem":
        try:
            ranges = tuple(
                ChildRange(int(p), int(t), int(s), int(w), str(pre))
                for p, t, s, w, pre in record.child_ranges
            )
        except (TypeError, ValueError) as exc:
            raise SpecError(f"Malformed child range: {exc}") from exc
        return cls(tuple(record.boundaries), ranges)


# ------------------------------------------------------------------
# Construction and validation
# ------------------------------------------------------------------


def child_count(t: int) -> int:
    """Smallest power of two ``>= t + 2``."""
    return 1 << (t + 1).bit_length()


def build_cantor_system(depth: int, *, config: Optional[SieveConfig] = None) -> CantorBlockSystem:
    """Raises BudgetExceeded past the depth cap or the child-range cap."""
    cfg = config or default_config()
    if depth < 1:
        raise SpecError(f"depth must be at least 1, got {depth}")
    if depth > cfg.cantor_depth_cap:
        raise BudgetExceeded(f"Cantor depth {depth} exceeds cap {cfg.cantor_depth_cap}")

    boundaries = [0, 1]
    ranges: List[ChildRange] = []
    starts: List[int] = []

    def prefix_of(n: int) -> str:
        if n == 0:
            return ""
        return ranges[bisect.bisect_right(starts, n) - 1].child_prefix(n)

    for k in range(1, depth):
        parents = boundaries[k] - boundaries[k - 1]
        if len(ranges) + parents > cfg.cantor_range_cap:
            raise BudgetExceeded(
                f"Block {k + 1} needs {parents} more child ranges, above cap {cfg.cantor_range_cap}"
            )
        t = boundaries[k]
        for parent in range(boundaries[k - 1], boundaries[k]):
            count = child_count(t)
            width = count.bit_length() - 1
            r = ChildRange(parent, t, t + count - 1, width, prefix_of(parent))
            ranges.append(r)
            starts.append(r.t)
            t = r.s + 1
        boundaries.append(t)
        logger.debug(f"Cantor block {k + 1}: N={t}")

    logger.info(f"Built Cantor system of depth {depth}: N={boundaries[:4]}...")
    return CantorBlockSystem(tuple(boundaries), tuple(ranges))


@dataclass
class PropertyCheck:
    name: str
    passed: bool = True
    witness: Optional[str] = None

    def fail(self, witness: str) -> None:
        if self.passed:
            self.passed = False
            self.witness = witness


@dataclass
class ValidationReport:
    partition: PropertyCheck
    refinement: PropertyCheck
    growth: PropertyCheck

    @property
    def passed(self) -> bool:
        return self.partition.passed and self.refinement.passed and self.growth.passed

    def to_dict(self) -> Dict[str, Any]:
        return {
            c.name: {"passed": c.passed, "witness": c.witness}
            for c in (self.partition, self.refinement, self.growth)
        }


def validate_system(sys: CantorBlockSystem) -> ValidationReport:
    """Check partition, refinement and ``s >= 2t``, keeping the first counterwitness each.

    Block 1 must be the single empty-prefix cylinder. Given that, block ``k+1``
    partitions the space iff every parent of block ``k`` owns exactly one range,
    the ranges tile ``[N_k, N_{k+1})`` in order, and each range lists all
    ``2^width`` extensions of its parent.
    """
    report = ValidationReport(
        PropertyCheck("partition"), PropertyCheck("refinement"), PropertyCheck("s>=2t")
    )
    b = sys.boundaries
    if len(b) < 2 or b[1] != 1:
        report.partition.fail(f"block 1 must be the single set U_0, boundaries {list(b[:2])}")

    by_parent: Dict[int, ChildRange] = {}
    for r in sys.child_ranges:
        if r.parent in by_parent:
            report.partition.fail(f"U_{r.parent} has two child ranges")
        by_parent[r.parent] = r

    for k in range(1, sys.depth):
        cursor = b[k]
        for parent in range(b[k - 1], b[k]):
            r = by_parent.get(parent)
            if r is None:
                report.partition.fail(f"U_{parent} in block {k} has no children")
                break
            if r.t != cursor:
                report.partition.fail(f"children of U_{parent} start at {r.t}, expected {cursor}")
            count = r.s - r.t + 1
            if count != 1 << r.width:
                missing = format(count, "b").zfill(r.width) if count < 1 << r.width else "-"
                report.partition.fail(
                    f"U_{parent} has {count} children, not 2^{r.width}; "
                    f"missing cylinder {r.prefix}{missing}"
                )
            try:
                parent_prefix = sys.cylinder(parent).prefix
            except SpecError as exc:
                report.refinement.fail(str(exc))
                parent_prefix = r.prefix
            if not r.prefix.startswith(parent_prefix):
                report.refinement.fail(
                    f"children of U_{parent} extend {r.prefix!r}, not {parent_prefix!r}"
                )
            if r.s < 2 * r.t:
                report.growth.fail(f"U_{parent}: (t, s) = ({r.t}, {r.s})")
            cursor = r.s + 1
        if cursor != b[k + 1]:
            report.partition.fail(f"block {k + 1} ends at {cursor}, boundary says {b[k + 1]}")
    return report


# ------------------------------------------------------------------
# Defeat
# ------------------------------------------------------------------


def first_escape(z: IndexSet, t: int, s: int) -> Optional[int]:
    """Smallest ``n ∈ [t, s]`` with ``n ∉ z``."""
    expected = t
    for x in z.members(t, s + 1):
        if x != expected:
            break
        expected += 1
    return expected if expected <= s else None


def locate(sys: CantorBlockSystem, point: CantorPoint) -> List[int]:
    """The index of the set containing *point* in each block."""
    n = 0
    chain = [0]
    for _ in range(1, sys.depth):
        r = sys.range_of_parent(n)
        if r is None:
            raise SpecError(f"U_{n} has no children")
        offset = len(r.prefix)
        bits = point.prefix(offset + r.width)[offset:]
        n = r.t + (int(bits, 2) if bits else 0)
        chain.append(n)
    return chain


def coverage_count(sys: CantorBlockSystem, point: CantorPoint, z: IndexSet) -> int:
    """``|{n ∈ z, n < N_K : point ∈ U_n}|``; exactly one candidate per block."""
    return sum(1 for n in locate(sys, point) if z.contains(n))


@dataclass(frozen=True)
class DefeatResult:
    point: CantorPoint
    chain: Tuple[int, ...]
    n0: int
    start_block: int

    def to_record(
        self,
        sys: CantorBlockSystem,
        z: IndexSet,
        validation: Optional[ValidationReport] = None,
        config: Optional[SieveConfig] = None,
    ) -> DefeatRecord:
        return DefeatRecord(
            n0=self.n0,
            start_block=self.start_block,
            chain=list(self.chain),
            point=self.point.bits,
            coverage_count=coverage_count(sys, self.point, z),
            system=sys.to_record(),
            validation=validation.to_dict() if validation else {},
            z=z.to_json(),
            config=(config or default_config()).to_dict(),
        )


def defeat(
    sys: CantorBlockSystem,
    z: IndexSet,
    *,
    check_factor: Optional[int] = None,
    iter_cap: Optional[int] = None,
) -> DefeatResult:
    """Nested chain avoiding *z* from the first block wholly above ``n0``.

    Raises:
        CertificationError: no block starts at or above ``n0``, or some
            successor range lies inside *z*.
    """
    n0 = density_threshold(z, Fraction(1, 2), check_factor=check_factor, iter_cap=iter_cap)
    start = next((k for k in range(2, sys.depth + 1) if sys.boundaries[k - 1] >= n0), None)
    if start is None:
        raise CertificationError(
            f"Cantor system of depth {sys.depth} has no block above n0={n0} "
            f"(N_K={sys.size}); build a deeper system"
        )

    parent = sys.boundaries[start - 2]
    chain: List[int] = []
    for k in range(start, sys.depth + 1):
        r = sys.range_of_parent(parent)
        if r is None:
            raise SpecError(f"U_{parent} has no children")
        escape = first_escape(z, r.t, r.s)
        if escape is None:
            raise CertificationError(f"All successors {r.t}..{r.s} of U_{parent} lie in z")
        logger.debug(f"defeat: block {k} picks U_{escape} among {r.t}..{r.s}")
        chain.append(escape)
        parent = escape

    point = CantorPoint(sys.cylinder(chain[-1]).prefix)
    logger.info(f"defeat: n0={n0}, start block {start}, chain length {len(chain)}")
    return DefeatResult(point, tuple(chain), n0, start)
