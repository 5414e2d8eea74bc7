"""Tests for density_sieve.cover_family – lazy cover families.

Covers:
- DyadicFamily indexing, coverage multiplicity, closed-form endpoints
- rotation_family wrapping and periodic coverage
- shrinking_random_family determinism
- File-backed families and continuation rules
- FamilySpec dispatch and σ-finite windows
"""

from __future__ import annotations

import json
from fractions import Fraction as F

import pytest

from density_sieve.cover_family import (
    CoverFamily,
    DyadicFamily,
    SigmaFiniteFamily,
    constant_family,
    describe,
    dyadic_family,
    family_from_document,
    family_from_file,
    family_from_spec,
    residual_trace,
    rotation_family,
    shrinking_random_family,
    sigma_finite_dyadic,
    unit_windows,
)
from density_sieve.errors import BudgetExceeded, FamilyRangeError, SpecError
from density_sieve.measure_sets import (
    IntervalUnion,
    Window,
    contains_point,
    kfold_region,
    measure,
    normalize,
    union_all,
)
from density_sieve.models import FamilySpec

UNIT = Window.unit()


def pairs(u: IntervalUnion):
    return [(iv.lo, iv.hi) for iv in u]


class _Linear(CoverFamily):
    """Wraps a family so only the base-class scans are used."""

    def __init__(self, inner):
        self.inner = inner
        self.window = inner.window
        self.descriptor = {}

    def get(self, n):
        return self.inner.get(n)


# ========================================================================
# Dyadic
# ========================================================================


class TestDyadic:
    """Level-by-level dyadic intervals."""

    def test_first_sets(self):
        fam = dyadic_family()
        assert pairs(fam.get(0)) == [(F(0), F(1))]
        assert pairs(fam.get(1)) == [(F(0), F(1, 2))]
        assert pairs(fam.get(2)) == [(F(1, 2), F(1))]
        assert pairs(fam.get(4)) == [(F(1, 4), F(1, 2))]

    def test_locate(self):
        assert DyadicFamily.locate(0) == (0, 0)
        assert DyadicFamily.locate(6) == (2, 3)
        assert DyadicFamily.locate(7) == (3, 0)
        with pytest.raises(SpecError):
            DyadicFamily.locate(-1)

    @pytest.mark.parametrize("x", [F(1, 3), F(2, 5), F(7, 8)])
    def test_each_level_covers_once(self, x):
        fam = dyadic_family()
        for level in range(1, 8):
            hits = sum(1 for n in range((1 << level) - 1) if contains_point(fam.get(n), x))
            assert hits == level

    @pytest.mark.parametrize("level", range(1, 7))
    def test_kfold_full(self, level):
        fam = dyadic_family()
        sets = [fam.get(n) for n in range((1 << level) - 1)]
        assert kfold_region(sets, level, UNIT) == IntervalUnion.full(UNIT)
        assert kfold_region(sets, level + 1, UNIT).is_empty()

    def test_union_range_matches_linear(self):
        fam = dyadic_family()
        linear = _Linear(fam)
        for a in range(0, 40):
            for b in range(a, 70, 3):
                assert fam.union_range(a, b) == linear.union_range(a, b)

    @pytest.mark.parametrize("target", [F(0), F(1, 8), F(1, 4), F(1, 3), F(3, 4), F(1)])
    def test_cover_endpoint_matches_linear(self, target):
        fam = dyadic_family()
        linear = _Linear(fam)
        for start in range(0, 64):
            assert fam.cover_endpoint(start, target) == linear.cover_endpoint(start, target)

    def test_cover_endpoint_examples(self):
        fam = dyadic_family()
        assert fam.cover_endpoint(0, F(1, 4)) == 1
        assert fam.cover_endpoint(1, F(1, 4)) == 3
        assert fam.cover_endpoint(3, F(1, 4)) == 6
        assert fam.cover_endpoint(5, F(0)) == 11

    def test_cover_endpoint_ignores_cap(self):
        fam = dyadic_family()
        assert fam.cover_endpoint(1 << 20, F(0), cap=100) == (1 << 21) + 1
        assert fam.residual(1 << 20, (1 << 21) + 1) == 0
        assert fam.residual(1 << 20, 1 << 21) > 0

    @pytest.mark.parametrize("start", [255, 256, 300, 383, 500])
    def test_cover_endpoint_matches_linear_deep(self, start):
        fam = dyadic_family()
        target = F(1, 16)
        expected = _Linear(fam).cover_endpoint(start, target)
        assert fam.cover_endpoint(start, target, cap=10) == expected

    def test_shifted_window(self):
        w = Window(F(2), F(4))
        fam = dyadic_family(w)
        assert pairs(fam.get(1)) == [(F(2), F(3))]
        assert fam.residual(1, 3) == 0
        assert fam.cover_endpoint(3, F(1, 2)) == _Linear(fam).cover_endpoint(3, F(1, 2))

    def test_residual(self):
        fam = dyadic_family()
        assert fam.residual(1, 2) == F(1, 2)
        assert fam.residual(3, 6) == F(1, 4)
        assert residual_trace(fam, [0, 1, 3, 7]) == [0, 0, 0]


# ========================================================================
# Rotation
# ========================================================================


class TestRotation:
    """Wrapped arcs of fixed length."""

    def test_wrap(self):
        fam = rotation_family("1/3", "1/2")
        assert pairs(fam.get(0)) == [(F(0), F(1, 2))]
        assert pairs(fam.get(1)) == [(F(1, 3), F(5, 6))]
        assert pairs(fam.get(2)) == [(F(0), F(1, 6)), (F(2, 3), F(1))]

    def test_measure_is_length(self):
        fam = rotation_family("2/7", "3/5")
        for n in range(30):
            assert measure(fam.get(n)) == F(3, 5)

    @pytest.mark.parametrize("m", [1, 2, 3])
    def test_periodic_kfold(self, m):
        fam = rotation_family("1/3", "1/2")
        sets = [fam.get(n) for n in range(3 * m)]
        assert kfold_region(sets, m, UNIT) == IntervalUnion.full(UNIT)

    @pytest.mark.parametrize("step, length", [("0", "1/2"), ("1/3", "1"), ("1/2", "-1/4")])
    def test_invalid(self, step, length):
        with pytest.raises(SpecError):
            rotation_family(step, length)

    def test_descriptor(self):
        d = describe(rotation_family("1/3", "1/2"))
        assert d["kind"] == "rotation"
        assert d["params"] == {"step": "1/3", "length": "1/2"}
        assert d["window"] == [0, 1, 1, 1]


# ========================================================================
# Random
# ========================================================================


class TestRandom:
    """Seeded families."""

    def test_deterministic(self):
        a, b = shrinking_random_family(5), shrinking_random_family(5)
        assert [a.get(n) for n in range(20)] == [b.get(n) for n in range(20)]

    def test_access_order_irrelevant(self):
        fam = shrinking_random_family(9)
        forward = [fam.get(n) for n in range(10)]
        backward = [fam.get(n) for n in reversed(range(10))]
        assert forward == list(reversed(backward))

    def test_seeds_differ(self):
        a, b = shrinking_random_family(1), shrinking_random_family(2)
        assert any(a.get(n) != b.get(n) for n in range(10))

    def test_schedule_lengths(self):
        fam = shrinking_random_family(3, "quarter-harmonic")
        assert measure(fam.get(0)) == F(1, 2)
        assert measure(fam.get(4)) == F(1, 3)
        harmonic = shrinking_random_family(3, "harmonic")
        assert measure(harmonic.get(8)) == F(1, 10)

    def test_unknown_schedule(self):
        with pytest.raises(SpecError):
            shrinking_random_family(0, "cubic")

    def test_descriptor_carries_seed(self):
        assert describe(shrinking_random_family(42))["seed"] == 42


# ========================================================================
# File-backed
# ========================================================================


def _doc(continuation="repeat", intervals=None):
    return {
        "window": [0, 1, 1, 1],
        "sets": intervals or [[[0, 1, 1, 2]], [[1, 2, 1, 1]], [[1, 4, 3, 4]]],
        "continuation": continuation,
    }


class TestListedFamily:
    """Finite lists with continuation rules."""

    def test_repeat(self):
        fam = family_from_document(_doc("repeat"))
        assert fam.get(3) == fam.get(0)
        assert pairs(fam.get(5)) == [(F(1, 4), F(3, 4))]

    def test_dyadic_after(self):
        fam = family_from_document(_doc("dyadic-after"))
        assert fam.get(3) == dyadic_family().get(0)
        assert fam.get(7) == dyadic_family().get(4)

    def test_error_after(self):
        fam = family_from_document(_doc("error-after"))
        assert pairs(fam.get(2)) == [(F(1, 4), F(3, 4))]
        with pytest.raises(FamilyRangeError):
            fam.get(3)

    def test_sets_as_objects(self):
        doc = _doc(intervals=[{"intervals": [[0, 1, 1, 3]]}])
        assert pairs(family_from_document(doc).get(0)) == [(F(0), F(1, 3))]

    def test_escape_rejected(self):
        with pytest.raises(SpecError):
            family_from_document(_doc(intervals=[[[0, 1, 3, 2]]]))

    @pytest.mark.parametrize(
        "doc",
        [
            [],
            {"window": [0, 1, 1, 1], "sets": []},
            {"window": [0, 1, 1, 1], "sets": [], "continuation": "repeat"},
            {"window": [0, 1, 1, 1], "sets": [[[0, 1, 1, 2]]], "continuation": "cycle"},
            {"window": [0, 1, 1, 1], "sets": "x", "continuation": "repeat"},
        ],
    )
    def test_malformed(self, doc):
        with pytest.raises(SpecError):
            family_from_document(doc)

    def test_from_file(self, tmp_path):
        path = tmp_path / "family.json"
        path.write_text(json.dumps(_doc("repeat")), encoding="utf-8")
        fam = family_from_file(path)
        assert len(fam.sets) == 3
        assert describe(fam)["params"]["path"] == str(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(SpecError):
            family_from_file(tmp_path / "nope.json")

    def test_bad_json(self, tmp_path):
        path = tmp_path / "family.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(SpecError):
            family_from_file(path)


# ========================================================================
# Specs, constants, σ-finite
# ========================================================================


class TestFamilySpec:
    """Declarative dispatch."""

    def test_dyadic(self):
        assert isinstance(family_from_spec(FamilySpec(kind="dyadic")), DyadicFamily)

    def test_rotation(self):
        fam = family_from_spec(
            FamilySpec(kind="rotation", params={"step": "1/3", "length": "1/2"})
        )
        assert pairs(fam.get(1)) == [(F(1, 3), F(5, 6))]

    def test_rotation_missing_param(self):
        with pytest.raises(SpecError):
            family_from_spec(FamilySpec(kind="rotation", params={"step": "1/3"}))

    def test_random_seed(self):
        fam = family_from_spec(FamilySpec(kind="random", seed=11))
        assert fam.get(4) == shrinking_random_family(11).get(4)

    def test_file_needs_path(self):
        with pytest.raises(SpecError):
            family_from_spec(FamilySpec(kind="file"))

    def test_file(self, tmp_path):
        path = tmp_path / "f.json"
        path.write_text(json.dumps(_doc("error-after")), encoding="utf-8")
        fam = family_from_spec(FamilySpec(kind="file", params={"path": str(path)}))
        assert len(fam.sets) == 3


class TestConstantAndSigmaFinite:
    """Constant families and disjoint windows."""

    def test_constant(self):
        u = normalize([(F(0), F(1, 2))], UNIT)
        fam = constant_family(u)
        assert fam.get(0) == fam.get(100) == u
        assert fam.residual(0, 5) == F(1, 2)

    def test_constant_never_covers(self):
        u = normalize([(F(0), F(1, 2))], UNIT)
        with pytest.raises(BudgetExceeded):
            constant_family(u).cover_endpoint(0, F(1, 4), cap=50)

    def test_unit_windows(self):
        assert unit_windows(3) == [Window(F(0), F(1)), Window(F(1), F(2)), Window(F(2), F(3))]

    def test_sigma_finite_dyadic(self):
        sf = sigma_finite_dyadic(3)
        assert len(sf) == 3
        assert pairs(sf.restrict(2).get(1)) == [(F(2), F(5, 2))]
        with pytest.raises(SpecError):
            sf.restrict(3)

    def test_overlap_rejected(self):
        with pytest.raises(SpecError):
            SigmaFiniteFamily(
                (dyadic_family(Window(F(0), F(2))), dyadic_family(Window(F(1), F(3))))
            )

    def test_empty_rejected(self):
        with pytest.raises(SpecError):
            SigmaFiniteFamily(())

    def test_union_range_generic(self):
        fam = rotation_family("1/3", "1/2")
        expected = union_all([fam.get(n) for n in range(2, 5)], UNIT)
        assert fam.union_range(2, 5) == expected
