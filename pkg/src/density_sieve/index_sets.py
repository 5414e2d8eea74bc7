"""
Finitely presented subsets of the naturals with exact counting.

Four presentations share the :class:`IndexSet` interface:

- :class:`APSelection`: one arithmetic progression of difference ``k`` chosen
  inside each block ``[N_{k-1}, N_k)``; what the extractor produces.
- :class:`ExplicitFinite`: a sorted list of naturals.
- :class:`FormulaSet`: closed-form infinite sets (shifted squares, powers).
- :class:`TailUnion`: ``∪_m (Z_m \\ [0, t_m))``; what pseudo-unions produce.

Density-zero membership is made checkable through a :class:`DensityEnvelope`:
for every ``δ > 0`` it returns ``t`` with ``|Z ∩ [0, n)| / n <= δ`` for all
``n >= t``. :func:`density_threshold` cross-checks the envelope by an exact
scan over ``[t, c·t]``.

JSON forms::

    {"ap": {"blocks": [...], "choices": [...]}}
    {"finite": [...]}
    {"formula": {"kind": "squares", "offset": 0, "base": 2}}
    {"tails": [[set, cutoff], ...], "certified": [...]}
"""

from __future__ import annotations

import bisect
import heapq
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

from .config import default_config
from .errors import BudgetExceeded, CertificationError, SpecError
from .measure_sets import RationalLike, as_rational

logger = logging.getLogger(__name__)


# ------------------------------------------------------------------
# Base interface
# ------------------------------------------------------------------


class IndexSet:
    """A subset of ℕ supporting membership, prefix counts and enumeration."""

    def contains(self, n: int) -> bool:
        raise NotImplementedError

    def count(self, n: int) -> int:
        """``|Z ∩ [0, n)|``."""
        raise NotImplementedError

    def members(self, lo: int, hi: int) -> Iterator[int]:
        """Members in ``[lo, hi)`` in increasing order."""
        raise NotImplementedError

    def envelope_threshold(self, delta: Fraction) -> int:
        """Some ``t >= 1`` with density ``<= delta`` at every ``n >= t``."""
        raise NotImplementedError

    def last_violation(
        self, a: int, b: int, delta: Fraction, cap: Optional[int] = None
    ) -> Optional[int]:
        """Largest ``n`` in ``[a, b]`` with ``count(n) > delta * n``, else None."""
        return scan_last_violation(self.count(a), self.members(a, b), a, b, delta, cap)

    def to_json(self) -> Dict[str, Any]:
        raise NotImplementedError


# ------------------------------------------------------------------
# Arithmetic-progression selections
# ------------------------------------------------------------------


@dataclass(frozen=True)
class APSelection(IndexSet):
    """``Z = ∪_k W^k_{ξ_k}`` over blocks ``0 = N_0 < N_1 < ... < N_K``.

    ``W^k_i = {N_{k-1} + i + j·k}`` and ``choices[k-1] = ξ_k``. The set ends at
    ``N_K``: nothing beyond the built depth belongs to it.
    """

    boundaries: Tuple[int, ...]
    choices: Tuple[int, ...]
    _cum: Tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "boundaries", tuple(self.boundaries))
        object.__setattr__(self, "choices", tuple(self.choices))
        b, c = self.boundaries, self.choices
        if not b or b[0] != 0:
            raise SpecError("APSelection boundaries must start at 0")
        if len(c) != len(b) - 1:
            raise SpecError(f"Expected {len(b) - 1} choices, got {len(c)}")
        cum = [0]
        for k in range(1, len(b)):
            length = b[k] - b[k - 1]
            if length <= 0 or length % k:
                raise SpecError(f"Block {k} has length {length}, not a positive multiple of {k}")
            if not 0 <= c[k - 1] < k:
                raise SpecError(f"Choice for block {k} must lie in [0, {k}), got {c[k - 1]}")
            cum.append(cum[-1] + length // k)
        object.__setattr__(self, "_cum", tuple(cum))

    @property
    def depth(self) -> int:
        return len(self.choices)

    @property
    def end(self) -> int:
        return self.boundaries[-1]

    def block_of(self, n: int) -> int:
        """Block index ``k`` with ``N_{k-1} <= n < N_k``."""
        if not 0 <= n < self.end:
            raise SpecError(f"{n} lies outside the built blocks [0, {self.end})")
        return bisect.bisect_right(self.boundaries, n)

    def progression(self, k: int, i: int) -> range:
        """``W^k_i`` as a range."""
        start, stop = self.boundaries[k - 1], self.boundaries[k]
        return range(start + i, stop, k)

    def count_at_boundary(self, k: int) -> int:
        """Closed form ``Σ_{i<=k} (N_i - N_{i-1}) / i``."""
        return self._cum[k]

    def contains(self, n: int) -> bool:
        if not 0 <= n < self.end:
            return False
        k = self.block_of(n)
        return (n - self.boundaries[k - 1]) % k == self.choices[k - 1]

    def count(self, n: int) -> int:
        if n <= 0:
            return 0
        if n >= self.end:
            return self._cum[-1]
        k = bisect.bisect_right(self.boundaries, n)
        offset = n - self.boundaries[k - 1] - self.choices[k - 1]
        within = (offset + k - 1) // k if offset > 0 else 0
        return self._cum[k - 1] + within

    def members(self, lo: int, hi: int) -> Iterator[int]:
        for k, first, last in self._segments(lo, hi):
            yield from range(first, last + 1, k)

    def _segments(self, lo: int, hi: int) -> Iterator[Tuple[int, int, int]]:
        """Per block: ``(k, first member, last member)`` inside ``[lo, hi)``."""
        lo, hi = max(lo, 0), min(hi, self.end)
        if lo >= hi:
            return
        k = bisect.bisect_right(self.boundaries, lo)
        while k <= self.depth and self.boundaries[k - 1] < hi:
            base = self.boundaries[k - 1] + self.choices[k - 1]
            stop = min(hi, self.boundaries[k])
            first = base if lo <= base else base + ((lo - base + k - 1) // k) * k
            if first < stop:
                last = first + ((stop - 1 - first) // k) * k
                yield k, first, last
            k += 1

    def last_violation(
        self, a: int, b: int, delta: Fraction, cap: Optional[int] = None
    ) -> Optional[int]:
        # On one progression (c + j + 1) / (x + j·k + 1) is monotone in j, so each
        # block needs only its endpoints plus a binary search.
        worst: Optional[int] = None
        if a >= 1 and self.count(a) > delta * a:
            worst = a
        for k, first, last in self._segments(a, b):
            c0 = self.count(first)
            steps = (last - first) // k

            def bad(j: int) -> bool:
                n = first + j * k + 1
                return n <= b and c0 + j + 1 > delta * n

            if bad(steps):
                worst = min(b, first + steps * k + 1)
            elif bad(0):
                lo_j, hi_j = 0, steps
                while hi_j - lo_j > 1:
                    mid = (lo_j + hi_j) // 2
                    if bad(mid):
                        lo_j = mid
                    else:
                        hi_j = mid
                worst = first + lo_j * k + 1
        if worst is None:
            return None
        # The count stays flat from the last violating step up to the next member.
        following = next(iter(self.members(worst, b)), b)
        return _flat_violation(self.count(worst), worst, min(following, b), delta)

    def envelope_threshold(self, delta: Fraction) -> int:
        if delta >= 1:
            return 1
        total = self._cum[-1]
        tail = math.ceil(Fraction(total) / delta)
        if tail > self.end:
            return max(1, tail)
        # Inside block k: count(n) <= C_{k-1} + 1 + (n - N_{k-1}) / k, whose ratio
        # to n is monotone, so the block bound is the larger endpoint value.
        t = max(1, self.end)
        for k in range(self.depth, 0, -1):
            a, b = self.boundaries[k - 1], self.boundaries[k]
            if a == 0:
                break
            bound = max(Fraction(self._cum[k - 1] + 1, a), Fraction(self._cum[k] + 1, b))
            if bound > delta:
                break
            t = a
        return t

    def to_json(self) -> Dict[str, Any]:
        return {"ap": {"blocks": list(self.boundaries), "choices": list(self.choices)}}


# ------------------------------------------------------------------
# Explicit finite sets
# ------------------------------------------------------------------


@dataclass(frozen=True)
class ExplicitFinite(IndexSet):
    """A finite set of naturals, stored sorted and deduplicated."""

    elements: Tuple[int, ...]

    def __post_init__(self) -> None:
        values = sorted(set(int(v) for v in self.elements))
        if values and values[0] < 0:
            raise SpecError(f"Index sets hold naturals only, got {values[0]}")
        object.__setattr__(self, "elements", tuple(values))

    def contains(self, n: int) -> bool:
        pos = bisect.bisect_left(self.elements, n)
        return pos < len(self.elements) and self.elements[pos] == n

    def count(self, n: int) -> int:
        return bisect.bisect_left(self.elements, n)

    def members(self, lo: int, hi: int) -> Iterator[int]:
        start = bisect.bisect_left(self.elements, lo)
        stop = bisect.bisect_left(self.elements, hi)
        return iter(self.elements[start:stop])

    def envelope_threshold(self, delta: Fraction) -> int:
        if delta >= 1:
            return 1
        # count is i + 1 on (x_i, x_{i+1}]; violations there are n < (i + 1) / delta.
        last_bad = 0
        xs = self.elements
        for i, x in enumerate(xs):
            upper = xs[i + 1] if i + 1 < len(xs) else None
            worst = math.ceil(Fraction(i + 1) / delta) - 1
            if upper is not None:
                worst = min(worst, upper)
            if worst >= x + 1:
                last_bad = max(last_bad, worst)
        return last_bad + 1

    def to_json(self) -> Dict[str, Any]:
        return {"finite": list(self.elements)}


# ------------------------------------------------------------------
# Closed-form infinite sets
# ------------------------------------------------------------------

FORMULA_KINDS = ("squares", "powers")


@dataclass(frozen=True)
class FormulaSet(IndexSet):
    """``{j² + offset}`` (``squares``) or ``{base^j + offset}`` (``powers``), j >= 0."""

    kind: str
    offset: int = 0
    base: int = 2

    def __post_init__(self) -> None:
        if self.kind not in FORMULA_KINDS:
            raise SpecError(f"Unknown formula kind {self.kind!r}; expected one of {FORMULA_KINDS}")
        if self.offset < 0:
            raise SpecError(f"Formula offset must be non-negative, got {self.offset}")
        if self.kind == "powers" and self.base < 2:
            raise SpecError(f"Powers need base >= 2, got {self.base}")

    def _term(self, j: int) -> int:
        if self.kind == "squares":
            return j * j + self.offset
        return self.base**j + self.offset

    def _terms_below(self, n: int) -> int:
        v = n - self.offset
        if v <= 0:
            return 0
        if self.kind == "squares":
            return math.isqrt(v - 1) + 1
        j, power = 0, 1
        while power < v:
            j += 1
            power *= self.base
        return j

    def contains(self, n: int) -> bool:
        v = n - self.offset
        if v < 0:
            return False
        if self.kind == "squares":
            return math.isqrt(v) ** 2 == v
        if v < 1:
            return False
        while v % self.base == 0:
            v //= self.base
        return v == 1

    def count(self, n: int) -> int:
        return self._terms_below(n)

    def members(self, lo: int, hi: int) -> Iterator[int]:
        j = self._terms_below(max(lo, 0))
        while True:
            x = self._term(j)
            if x >= hi:
                return
            yield x
            j += 1

    def envelope_threshold(self, delta: Fraction) -> int:
        if delta >= 1:
            return 1
        if self.kind == "squares":
            # count(n) <= sqrt(n) + 1 <= 2 sqrt(n) <= delta n once n >= 4 / delta².
            return max(1, math.ceil(4 / (delta * delta)))
        # count(n) <= bit_length(n) = L on [2^(L-1), 2^L), and L / 2^(L-1) decreases.
        bits = 1
        while Fraction(bits, 1 << (bits - 1)) > delta:
            bits += 1
        return 1 << (bits - 1)

    def to_json(self) -> Dict[str, Any]:
        return {"formula": {"kind": self.kind, "offset": self.offset, "base": self.base}}


# ------------------------------------------------------------------
# Tail unions
# ------------------------------------------------------------------


@dataclass(frozen=True)
class TailUnion(IndexSet):
    """``∪_m (Z_m \\ [0, t_m))`` with strictly increasing cutoffs ``t_m``.

    ``certified`` optionally lists cutoffs ``c_1 < c_2 < ...`` with density
    ``<= 1 / (m + 1)`` at every ``n >= c_m``; pseudo-unions fill it in.
    """

    parts: Tuple[Tuple[IndexSet, int], ...]
    certified: Tuple[int, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "parts", tuple((z, int(t)) for z, t in self.parts))
        object.__setattr__(self, "certified", tuple(self.certified))
        if not self.parts:
            raise SpecError("A tail union needs at least one part")
        cutoffs = [t for _, t in self.parts]
        if cutoffs[0] < 0 or any(b <= a for a, b in zip(cutoffs, cutoffs[1:])):
            raise SpecError(f"Tail-union cutoffs must be strictly increasing, got {cutoffs}")
        certified = list(self.certified)
        if any(b <= a for a, b in zip(certified, certified[1:])):
            raise SpecError(f"Certified cutoffs must be strictly increasing, got {certified}")

    @property
    def cutoffs(self) -> Tuple[int, ...]:
        return tuple(t for _, t in self.parts)

    def contains(self, n: int) -> bool:
        return any(n >= t and z.contains(n) for z, t in self.parts)

    def members(self, lo: int, hi: int) -> Iterator[int]:
        streams = [z.members(max(lo, t), hi) for z, t in self.parts]
        previous = None
        for x in heapq.merge(*streams):
            if x != previous:
                yield x
                previous = x

    def count(self, n: int) -> int:
        if len(self.parts) == 1:
            z, t = self.parts[0]
            return max(0, z.count(n) - z.count(min(t, n)))
        return tail_count(self.parts, n)

    def envelope_threshold(self, delta: Fraction) -> int:
        if delta >= 1:
            return 1
        m = math.ceil(1 / delta)
        if self.certified and m <= len(self.certified):
            return self.certified[m - 1]
        # |Z ∩ [0, n)| <= Σ_m |Z_m ∩ [0, n)|, so split delta evenly over the parts.
        share = delta / len(self.parts)
        t = max(z.envelope_threshold(share) for z, _ in self.parts)
        if self.certified:
            t = max(t, self.certified[-1])
        return max(1, t)

    def to_json(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"tails": [[z.to_json(), t] for z, t in self.parts]}
        if self.certified:
            data["certified"] = list(self.certified)
        return data


# ------------------------------------------------------------------
# Envelopes and scans
# ------------------------------------------------------------------


@dataclass(frozen=True)
class DensityEnvelope:
    """``δ ↦ t`` with density at most ``δ`` on ``[t, ∞)``."""

    index_set: IndexSet

    def __call__(self, delta: RationalLike) -> int:
        delta = as_rational(delta)
        if delta <= 0:
            raise SpecError(f"Density bound must be positive, got {delta}")
        return self.index_set.envelope_threshold(delta)


def density_envelope(z: IndexSet) -> DensityEnvelope:
    return DensityEnvelope(z)


def _flat_violation(count: int, lo: int, hi: int, delta: Fraction) -> Optional[int]:
    """Largest ``n ∈ [lo, hi]`` with ``count > delta * n``, else None."""
    n = min(hi, math.ceil(Fraction(count) / delta) - 1)
    return n if n >= lo else None


def scan_last_violation(
    count_at_a: int,
    members: Iterable[int],
    a: int,
    b: int,
    delta: Fraction,
    cap: Optional[int] = None,
) -> Optional[int]:
    """Largest ``n ∈ [a, b]`` whose running density exceeds *delta*.

    The count is constant on ``[a, x_1]``, ``[x_1 + 1, x_2]``, ... so each flat
    stretch is settled in closed form.
    """
    cap = cap if cap is not None else default_config().iter_cap
    worst: Optional[int] = None
    count = count_at_a
    start = max(a, 1)
    seen = 0
    for x in members:
        if x >= b:
            break
        seen += 1
        if seen > cap:
            raise BudgetExceeded(f"Density scan on [{a}, {b}] exceeded {cap} members")
        if start <= x:
            hit = _flat_violation(count, start, x, delta)
            worst = hit if hit is not None else worst
        count += 1
        start = max(x + 1, 1)
    if start <= b:
        hit = _flat_violation(count, start, b, delta)
        worst = hit if hit is not None else worst
    return worst


def membership(z: IndexSet, n: int) -> bool:
    return z.contains(n)


def prefix_count(z: IndexSet, n: int) -> int:
    return z.count(n)


def members(z: IndexSet, lo: int, hi: int) -> List[int]:
    return list(z.members(lo, hi))


def density_at(z: IndexSet, n: int) -> Fraction:
    """Exact running density ``|Z ∩ [0, n)| / n``."""
    if n < 1:
        raise SpecError(f"Density needs n >= 1, got {n}")
    return Fraction(z.count(n), n)


def density_threshold(
    z: IndexSet,
    delta: RationalLike,
    *,
    check_factor: Optional[int] = None,
    iter_cap: Optional[int] = None,
) -> int:
    """Envelope threshold for *delta*, cross-checked on ``[t, check_factor·t]``.

    Raises:
        BudgetExceeded: the scan enumerated more than *iter_cap* members.
        CertificationError: the scan contradicts the envelope.
    """
    cfg = default_config()
    factor = check_factor if check_factor is not None else cfg.check_factor
    cap = iter_cap if iter_cap is not None else cfg.iter_cap
    delta = as_rational(delta)
    t = density_envelope(z)(delta)
    bad = z.last_violation(t, factor * t, delta, cap)
    if bad is not None:
        raise CertificationError(
            f"Envelope threshold {t} for delta={delta} contradicted at n={bad}"
        )
    logger.debug(f"density_threshold: delta={delta} -> t={t} (scanned to {factor * t})")
    return t


def tail_union(parts: Sequence[Tuple[IndexSet, int]]) -> TailUnion:
    """``∪_m (Z_m \\ [0, t_m))``; cutoffs must be strictly increasing."""
    return TailUnion(tuple(parts))


# ------------------------------------------------------------------
# Unions of several sets (used by pseudo-union scans)
# ------------------------------------------------------------------


def union_members(sets: Sequence[IndexSet], lo: int, hi: int) -> Iterator[int]:
    previous = None
    for x in heapq.merge(*(z.members(lo, hi) for z in sets)):
        if x != previous:
            yield x
            previous = x


def union_count(sets: Sequence[IndexSet], n: int, cap: Optional[int] = None) -> int:
    if len(sets) == 1:
        return sets[0].count(n)
    return tail_count([(z, 0) for z in sets], n, cap)


def _join_classes(r1: int, m1: int, r2: int, m2: int) -> Optional[Tuple[int, int]]:
    """``x ≡ r1 (m1)`` and ``x ≡ r2 (m2)`` as one class, or None if disjoint."""
    g = math.gcd(m1, m2)
    if (r2 - r1) % g:
        return None
    step = m2 // g
    s = ((r2 - r1) // g * pow(m1 // g, -1, step)) % step
    lcm = m1 * step
    return (r1 + m1 * s) % lcm, lcm


def _class_count(r: int, m: int, lo: int, hi: int) -> int:
    """``|{x ∈ [lo, hi) : x ≡ r (m)}|``."""
    return (hi - r + m - 1) // m - (lo - r + m - 1) // m


def _classes_union_count(classes: Sequence[Tuple[int, int]], lo: int, hi: int) -> int:
    # Inclusion-exclusion; terms carry (-1)^|S| and start from the empty intersection.
    terms: List[Tuple[int, int, int]] = [(1, 0, 1)]
    for r, m in classes:
        joined = []
        for sign, r0, m0 in terms:
            both = _join_classes(r0, m0, r, m)
            if both is not None:
                joined.append((-sign, both[0], both[1]))
        terms += joined
    return sum(-sign * _class_count(r, m, lo, hi) for sign, r, m in terms[1:])


def tail_count(parts: Sequence[Tuple[IndexSet, int]], n: int, cap: Optional[int] = None) -> int:
    """``|∪_m (Z_m ∩ [t_m, n))|`` without walking progression members.

    Between consecutive cutoffs and block boundaries every APSelection part is
    one residue class, so each stretch is counted by inclusion-exclusion.
    Members of the other parts are enumerated and counted when no active
    progression holds them.

    Raises:
        BudgetExceeded: more than *cap* members of non-progression parts.
    """
    if n <= 0:
        return 0
    cap = cap if cap is not None else default_config().iter_cap
    progressions = [(z, t) for z, t in parts if isinstance(z, APSelection)]
    others = [(z, t) for z, t in parts if not isinstance(z, APSelection)]

    cuts = {0, n}
    cuts.update(t for _, t in parts if t < n)
    for z, _ in progressions:
        cuts.update(b for b in z.boundaries if b < n)
    points = sorted(cuts)

    total = 0
    for lo, hi in zip(points, points[1:]):
        classes = set()
        for z, t in progressions:
            if t <= lo < z.end:
                k = z.block_of(lo)
                classes.add(((z.boundaries[k - 1] + z.choices[k - 1]) % k, k))
        total += _classes_union_count(sorted(classes), lo, hi)

    def covered(x: int) -> bool:
        return any(x >= t and z.contains(x) for z, t in progressions)

    streams = [z.members(t, n) for z, t in others]
    previous = None
    for seen, x in enumerate(heapq.merge(*streams)):
        if seen >= cap:
            raise BudgetExceeded(f"Counting a union below {n} exceeded {cap} members")
        if x != previous and not covered(x):
            total += 1
        previous = x
    return total


# ------------------------------------------------------------------
# Builtins
# ------------------------------------------------------------------


def squares(offset: int = 0) -> FormulaSet:
    return FormulaSet("squares", offset=offset)


def powers(base: int = 2, offset: int = 0) -> FormulaSet:
    return FormulaSet("powers", offset=offset, base=base)


def explicit(values: Iterable[int]) -> ExplicitFinite:
    return ExplicitFinite(tuple(values))


BUILTIN_SETS: Dict[str, Callable[[], IndexSet]] = {
    "empty": lambda: ExplicitFinite(()),
    "squares": squares,
    "powers": powers,
}


# ------------------------------------------------------------------
# JSON
# ------------------------------------------------------------------


def to_json(z: IndexSet) -> Dict[str, Any]:
    return z.to_json()


def from_json(data: Any) -> IndexSet:
    """Rebuild an IndexSet from its tagged JSON form."""
    if not isinstance(data, dict) or len(set(data) - {"certified"}) != 1:
        raise SpecError(f"Expected a tagged index-set object, got {data!r}")
    try:
        if "ap" in data:
            body = data["ap"]
            return APSelection(tuple(body["blocks"]), tuple(body["choices"]))
        if "finite" in data:
            return ExplicitFinite(tuple(data["finite"]))
        if "formula" in data:
            body = data["formula"]
            return FormulaSet(
                str(body["kind"]), offset=int(body.get("offset", 0)), base=int(body.get("base", 2))
            )
        if "tails" in data:
            parts = [(from_json(z), int(t)) for z, t in data["tails"]]
            return TailUnion(tuple(parts), tuple(data.get("certified", ())))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, SpecError):
            raise
        raise SpecError(f"Malformed index-set document: {exc}") from exc
    raise SpecError(f"Unknown index-set tag in {sorted(data)}")
