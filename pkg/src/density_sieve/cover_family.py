"""
Lazy cover families ``n ↦ A_n`` over a bounded window.

A family is a pure generator: ``get(n)`` always returns the same normalized
:class:`IntervalUnion`. Builtins:

- :class:`DyadicFamily`: level ``L`` contributes the ``2^L`` dyadic intervals.
- :func:`rotation_family`: ``A_n = [n·step, n·step + length)`` mod the window.
- :func:`shrinking_random_family`: uniform left endpoints, shrinking lengths.
- :func:`family_from_file`: a finite list plus a continuation rule.

The block search in the extractor asks a family for ``cover_endpoint``; the
base class scans linearly, the dyadic family answers in closed form.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from .config import default_config
from .errors import BudgetExceeded, FamilyRangeError, SpecError
from .measure_sets import (
    IntervalUnion,
    RationalLike,
    Window,
    as_rational,
    format_rational,
    measure,
    normalize,
    union,
    union_all,
    union_from_json,
    window_from_quad,
)
from .models import FamilySpec
from .rng import RngStream, check_seed

logger = logging.getLogger(__name__)

CONTINUATION_RULES = ("repeat", "dyadic-after", "error-after")


# ------------------------------------------------------------------
# Base class
# ------------------------------------------------------------------


class CoverFamily:
    """``n ↦ A_n``; subclasses implement :meth:`get`."""

    window: Window
    descriptor: Dict[str, Any]

    def get(self, n: int) -> IntervalUnion:
        raise NotImplementedError

    def union_range(self, a: int, b: int) -> IntervalUnion:
        """``A_a ∪ ... ∪ A_{b-1}``."""
        return union_all([self.get(i) for i in range(a, b)], self.window)

    def residual(self, a: int, b: int) -> Fraction:
        """Measure of the window left uncovered by ``A_a..A_{b-1}``."""
        return self.window.length - measure(self.union_range(a, b))

    def cover_endpoint(self, start: int, target: Fraction, cap: Optional[int] = None) -> int:
        """Smallest ``e > start`` with ``residual(start, e) <= target``.

        Raises:
            BudgetExceeded: no such ``e`` within ``start + cap``.
        """
        cap = cap if cap is not None else default_config().iter_cap
        acc = IntervalUnion.empty(self.window)
        for e in range(start + 1, start + cap + 1):
            acc = union(acc, self.get(e - 1))
            if self.window.length - measure(acc) <= target:
                return e
        raise BudgetExceeded(
            f"No prefix of A_{start}, A_{start + 1}, ... reached residual <= {target} "
            f"within {cap} sets"
        )


def _scale(window: Window, lo: Fraction, hi: Fraction) -> Tuple[Fraction, Fraction]:
    """Map ``[lo, hi) ⊆ [0, 1]`` into *window*."""
    w = window.length
    return window.lo + w * lo, window.lo + w * hi


def _wrapped(window: Window, start: Fraction, length: Fraction) -> IntervalUnion:
    """``[start, start + length)`` on the unit circle, mapped into *window*."""
    if length >= 1:
        return IntervalUnion.full(window)
    end = start + length
    if end <= 1:
        pieces = [_scale(window, start, end)]
    else:
        pieces = [_scale(window, start, Fraction(1)), _scale(window, Fraction(0), end - 1)]
    return normalize(pieces, window)


# ------------------------------------------------------------------
# Dyadic family
# ------------------------------------------------------------------


@dataclass(frozen=True)
class DyadicFamily(CoverFamily):
    """``A_{2^L - 1 + p}`` is the ``p``-th dyadic interval of level ``L``."""

    window: Window = field(default_factory=Window.unit)

    @property
    def descriptor(self) -> Dict[str, Any]:
        return {"kind": "dyadic", "params": {}, "seed": None, "window": self.window.to_quad()}

    @staticmethod
    def locate(n: int) -> Tuple[int, int]:
        """``(L, p)`` with ``n = 2^L - 1 + p`` and ``0 <= p < 2^L``."""
        if n < 0:
            raise SpecError(f"Family index must be non-negative, got {n}")
        level = (n + 1).bit_length() - 1
        return level, n - ((1 << level) - 1)

    def get(self, n: int) -> IntervalUnion:
        level, p = self.locate(n)
        size = 1 << level
        piece = _scale(self.window, Fraction(p, size), Fraction(p + 1, size))
        return normalize([piece], self.window)

    def union_range(self, a: int, b: int) -> IntervalUnion:
        if b <= a:
            return IntervalUnion.empty(self.window)
        pieces: List[Tuple[Fraction, Fraction]] = []
        n = a
        while n < b:
            level, p = self.locate(n)
            size = 1 << level
            stop = min(b, (1 << (level + 1)) - 1)
            q = p + (stop - n)
            if p == 0 and q == size:
                return IntervalUnion.full(self.window)
            pieces.append(_scale(self.window, Fraction(p, size), Fraction(q, size)))
            n = stop
        return normalize(pieces, self.window)

    def cover_endpoint(self, start: int, target: Fraction, cap: Optional[int] = None) -> int:
        """Closed form; *cap* only bounds the linear scan of the base class."""
        level, p = self.locate(start)
        size = 1 << level
        tau = Fraction(target) / self.window.length
        # Within level L the first c sets from p cover c / 2^L of the unit window.
        needed = max(1, math.ceil((1 - tau) * size))
        if p + needed <= size:
            end = start + needed
        else:
            # Level L covers [p/2^L, 1); d sets of level L+1 add [0, d/2^(L+1)).
            extra = max(0, math.ceil(2 * p - 2 * size * tau))
            end = start + (size - p) + extra
        return end


def dyadic_family(window: Optional[Window] = None) -> DyadicFamily:
    return DyadicFamily(window or Window.unit())


# ------------------------------------------------------------------
# Generator-backed families
# ------------------------------------------------------------------


@dataclass(frozen=True)
class FunctionFamily(CoverFamily):
    """A family defined by an arbitrary pure function of ``n``."""

    window: Window
    generator: Callable[[int], IntervalUnion]
    descriptor: Dict[str, Any] = field(default_factory=dict)

    def get(self, n: int) -> IntervalUnion:
        if n < 0:
            raise SpecError(f"Family index must be non-negative, got {n}")
        result = self.generator(n)
        if result.window != self.window:
            raise SpecError(f"Generator produced a set outside window for n={n}")
        return result


def constant_family(u: IntervalUnion) -> FunctionFamily:
    """``A_n = u`` for every ``n``."""
    return FunctionFamily(
        u.window,
        lambda n: u,
        {"kind": "constant", "params": {}, "seed": None, "window": u.window.to_quad()},
    )


def rotation_family(
    step: RationalLike, length: RationalLike, window: Optional[Window] = None
) -> FunctionFamily:
    """``A_n = [n·step mod 1, n·step + length mod 1)``, wrapping into two pieces."""
    step, length = as_rational(step), as_rational(length)
    if not (0 < step < 1 and 0 < length < 1):
        raise SpecError(f"Rotation needs 0 < step, length < 1, got step={step}, length={length}")
    window = window or Window.unit()

    def generate(n: int) -> IntervalUnion:
        return _wrapped(window, (n * step) % 1, length)

    descriptor = {
        "kind": "rotation",
        "params": {"step": format_rational(step), "length": format_rational(length)},
        "seed": None,
        "window": window.to_quad(),
    }
    return FunctionFamily(window, generate, descriptor)


SCHEDULES: Dict[str, Callable[[int], Fraction]] = {
    "quarter-harmonic": lambda n: Fraction(1, n // 4 + 2),
    "harmonic": lambda n: Fraction(1, n + 2),
    "half": lambda n: Fraction(1, 2),
}


def shrinking_random_family(
    seed: int,
    length_of: Any = "quarter-harmonic",
    window: Optional[Window] = None,
) -> FunctionFamily:
    """Uniform dyadic left endpoints drawn from ``(seed, n)``, lengths from a schedule.

    *length_of* is a schedule name from :data:`SCHEDULES` or a callable
    ``n -> Fraction``. Infinitely-often coverage is not certified for this family.
    """
    check_seed(seed)
    if isinstance(length_of, str):
        if length_of not in SCHEDULES:
            raise SpecError(f"Unknown schedule {length_of!r}; expected one of {sorted(SCHEDULES)}")
        schedule_name, schedule = length_of, SCHEDULES[length_of]
    else:
        schedule_name, schedule = getattr(length_of, "__name__", "custom"), length_of
    window = window or Window.unit()
    stream = RngStream(seed, stream="family")

    def generate(n: int) -> IntervalUnion:
        length = as_rational(schedule(n))
        if length <= 0:
            raise SpecError(f"Schedule length must be positive, got {length} at n={n}")
        return _wrapped(window, stream.uniform_fraction(n), length)

    descriptor = {
        "kind": "random",
        "params": {"schedule": schedule_name},
        "seed": seed,
        "window": window.to_quad(),
    }
    return FunctionFamily(window, generate, descriptor)


# ------------------------------------------------------------------
# File-backed families
# ------------------------------------------------------------------


@dataclass(frozen=True)
class ListedFamily(CoverFamily):
    """Finitely many listed sets continued by a named rule."""

    window: Window
    sets: Tuple[IntervalUnion, ...]
    continuation: str
    source: str = ""

    def __post_init__(self) -> None:
        if self.continuation not in CONTINUATION_RULES:
            raise SpecError(
                f"Unknown continuation rule {self.continuation!r}; "
                f"expected one of {CONTINUATION_RULES}"
            )
        if not self.sets:
            raise SpecError("A listed family needs at least one set")

    @property
    def descriptor(self) -> Dict[str, Any]:
        return {
            "kind": "file",
            "params": {"path": self.source, "continuation": self.continuation},
            "seed": None,
            "window": self.window.to_quad(),
        }

    def get(self, n: int) -> IntervalUnion:
        if n < 0:
            raise SpecError(f"Family index must be non-negative, got {n}")
        count = len(self.sets)
        if n < count:
            return self.sets[n]
        if self.continuation == "repeat":
            return self.sets[n % count]
        if self.continuation == "dyadic-after":
            return DyadicFamily(self.window).get(n - count)
        raise FamilyRangeError(
            f"Family from {self.source or 'file'} has only {count} sets, got {n}"
        )


def family_from_document(data: Any, source: str = "") -> ListedFamily:
    """Build a listed family from ``{"window", "sets", "continuation"}``."""
    if not isinstance(data, dict):
        raise SpecError(f"Family file must hold an object, got {type(data).__name__}")
    try:
        window = window_from_quad(data["window"])
        raw_sets = data["sets"]
        continuation = data["continuation"]
    except KeyError as exc:
        raise SpecError(f"Family file is missing key {exc}") from exc
    if not isinstance(raw_sets, list):
        raise SpecError("Family file 'sets' must be a list")
    sets = []
    for item in raw_sets:
        intervals = item.get("intervals") if isinstance(item, dict) else item
        sets.append(union_from_json({"window": data["window"], "intervals": intervals}))
    return ListedFamily(window, tuple(sets), str(continuation), source)


def family_from_file(path: Path) -> ListedFamily:
    path = Path(path)
    if not path.exists():
        raise SpecError(f"Family file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SpecError(f"Invalid JSON in family file {path}: {exc}") from exc
    family = family_from_document(data, str(path))
    logger.info(f"Loaded {len(family.sets)} sets from {path} ({family.continuation})")
    return family


# ------------------------------------------------------------------
# Specs and σ-finite families
# ------------------------------------------------------------------


def family_from_spec(spec: FamilySpec) -> CoverFamily:
    """Instantiate the family a :class:`FamilySpec` describes."""
    window = window_from_quad(spec.window)
    params = spec.params
    if spec.kind == "dyadic":
        return DyadicFamily(window)
    if spec.kind == "rotation":
        try:
            return rotation_family(params["step"], params["length"], window)
        except KeyError as exc:
            raise SpecError(f"Rotation family needs parameter {exc}") from exc
    if spec.kind == "random":
        seed = spec.seed if spec.seed is not None else default_config().default_seed
        return shrinking_random_family(seed, params.get("schedule", "quarter-harmonic"), window)
    if "path" not in params:
        raise SpecError("File family needs parameter 'path'")
    return family_from_file(Path(params["path"]))


@dataclass(frozen=True)
class SigmaFiniteFamily:
    """Cover families on pairwise disjoint windows ``X_0, X_1, ...``."""

    families: Tuple[CoverFamily, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "families", tuple(self.families))
        if not self.families:
            raise SpecError("A sigma-finite family needs at least one window")
        ordered = sorted(self.windows, key=lambda w: w.lo)
        for left, right in zip(ordered, ordered[1:]):
            if right.lo < left.hi:
                raise SpecError(
                    f"Windows [{left.lo}, {left.hi}) and [{right.lo}, {right.hi}) overlap"
                )

    @property
    def windows(self) -> List[Window]:
        return [f.window for f in self.families]

    def restrict(self, m: int) -> CoverFamily:
        """The family on window ``m``."""
        if not 0 <= m < len(self.families):
            raise SpecError(f"Window index {m} out of range [0, {len(self.families)})")
        return self.families[m]

    def __len__(self) -> int:
        return len(self.families)


def unit_windows(count: int) -> List[Window]:
    """``[m, m + 1)`` for ``m < count``."""
    return [Window(Fraction(m), Fraction(m + 1)) for m in range(count)]


def sigma_finite_dyadic(count: int) -> SigmaFiniteFamily:
    return SigmaFiniteFamily(tuple(DyadicFamily(w) for w in unit_windows(count)))


def describe(family: CoverFamily) -> Dict[str, Any]:
    """Descriptor with a guaranteed window entry."""
    descriptor = dict(family.descriptor)
    descriptor.setdefault("window", family.window.to_quad())
    return descriptor


def residual_trace(family: CoverFamily, boundaries: Sequence[int]) -> List[Fraction]:
    """Per-block residuals recomputed from the family."""
    return [family.residual(a, b) for a, b in zip(boundaries, boundaries[1:])]
