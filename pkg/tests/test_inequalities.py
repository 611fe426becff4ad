"""
GNS-type and Poincare-Wirtinger-type checks and the field corpus.
"""

import numpy as np
import pandas as pd
import pytest

from src.core.errors import GridError
from src.core.fields import GridDomain, GridFunction
from src.core.inequalities import (
    CORPUS_SIZE,
    InequalityReport,
    build_corpus,
    cached_corpus,
    default_corpus_domain,
    dilate,
    gns_check,
    load_corpus,
    pw_check,
    ratio_spread,
    save_corpus,
)


@pytest.fixture
def corpus_domain():
    """[-1, 1]^2 with h = 1/32."""
    return default_corpus_domain()


@pytest.fixture
def tent(corpus_domain):
    def cone(x):
        return np.clip(1.0 - np.linalg.norm(x - 0.1, axis=-1) / 0.5, 0.0, None)
    return GridFunction.from_callable(corpus_domain, cone, exterior=[0.0])


class TestGNSCheck:

    def test_ratio_is_scale_invariant(self, tent):
        base = gns_check(tent, 0.25, 1.0, 1.5)
        scaled = gns_check(tent.scaled(3.0), 0.25, 1.0, 1.5)
        assert base.ratio > 0.0
        assert scaled.lhs == pytest.approx(3.0 ** 1.5 * base.lhs, rel=1e-12)
        assert scaled.ratio == pytest.approx(base.ratio, rel=1e-12)

    def test_ratio_is_dilation_invariant(self, tent):
        """Dilating the field by 2 and doubling eps rescales both sides by 2^(d-p)."""
        base = gns_check(tent, 0.25, 1.0, 1.5)
        dilated, lam = dilate(tent, 2.0)
        stretched = gns_check(dilated, 0.25 * lam, 1.0, 1.5)
        assert stretched.lhs == pytest.approx(2.0 ** 0.5 * base.lhs, rel=1e-12)
        assert stretched.ratio == pytest.approx(base.ratio, rel=1e-12)

    def test_exterior_value_required(self, corpus_domain):
        u = GridFunction.constant(corpus_domain, [1.0])
        with pytest.raises(GridError, match="exterior value 0"):
            gns_check(u, 0.25, 1.0, 1.5)

    def test_exponent_below_dimension(self, tent):
        with pytest.raises(GridError, match="p\\*"):
            gns_check(tent, 0.25, 1.0, 2.0)

    def test_zero_field_is_trivial(self, corpus_domain):
        report = gns_check(GridFunction.zeros(corpus_domain, exterior=[0.0]), 0.25, 1.0, 1.5, corpus_id=7)
        assert report.trivial
        assert report.to_dict()["corpus_id"] == 7


class TestPoincareCheck:

    def test_constant_field_is_trivial(self, corpus_domain):
        u = GridFunction.constant(corpus_domain, [2.0])
        A = corpus_domain.ball([0.0, 0.0], 0.5)
        report = pw_check(u, A, A.active, 0.125, 1.0, 2.0)
        assert report.trivial
        assert report.ratio == 0.0

    def test_lambda_scales_right_side(self, tent, corpus_domain):
        A = corpus_domain.ball([0.0, 0.0], 0.75)
        E = corpus_domain.ball([0.0, 0.0], 0.25).active
        one = pw_check(tent, A, E, 0.125, 1.0, 2.0)
        two = pw_check(tent, A, E, 0.125, 1.0, 2.0, lam=2.0)
        assert two.rhs_raw == pytest.approx(4.0 * one.rhs_raw, rel=1e-14)
        assert two.lhs == one.lhs

    def test_empty_mean_set(self, tent, corpus_domain):
        A = corpus_domain.ball([0.0, 0.0], 0.5)
        with pytest.raises(GridError, match="nonempty"):
            pw_check(tent, A, np.zeros(corpus_domain.shape, dtype=bool), 0.125, 1.0, 2.0)


class TestRatioSpread:

    def test_nontrivial_ratios_only(self):
        reports = [InequalityReport(1.0, 1.0, 1.0), InequalityReport(4.0, 1.0, 4.0),
                   InequalityReport(0.0, 0.0, 0.0, trivial=True)]
        assert ratio_spread(reports) == 4.0

    def test_single_report(self):
        assert ratio_spread([InequalityReport(1.0, 2.0, 0.5)]) == 1.0


class TestCorpus:

    def test_size_and_kinds(self, corpus_domain):
        corpus = build_corpus(corpus_domain, seed=0)
        assert len(corpus) == CORPUS_SIZE
        assert [c.kind for c in corpus[:3]] == ["smooth", "tent", "indicator"]
        assert all(not c.field.is_zero() for c in corpus)
        assert all(c.field.exterior[0] == 0.0 for c in corpus)

    def test_fields_vanish_outside_support(self, corpus_domain):
        radius = np.linalg.norm(corpus_domain.centers(), axis=-1)
        for entry in build_corpus(corpus_domain, seed=1, size=6, support=0.5):
            assert not np.any(entry.field.values[radius >= 0.5])

    def test_seeded(self, corpus_domain):
        first = build_corpus(corpus_domain, seed=5, size=4)
        second = build_corpus(corpus_domain, seed=5, size=4)
        other = build_corpus(corpus_domain, seed=6, size=4)
        for a, b in zip(first, second):
            np.testing.assert_array_equal(a.field.values, b.field.values)
        assert not np.array_equal(first[0].field.values, other[0].field.values)

    def test_support_must_fit(self, corpus_domain):
        with pytest.raises(GridError, match="does not fit"):
            build_corpus(corpus_domain, support=1.0)

    def test_cache_round_trip(self, tmp_path, corpus_domain):
        corpus = build_corpus(corpus_domain, seed=2, size=3)
        save_corpus(tmp_path, corpus)
        loaded = load_corpus(tmp_path)
        assert [c.kind for c in loaded] == [c.kind for c in corpus]
        np.testing.assert_array_equal(loaded[2].field.values, corpus[2].field.values)

    def test_tampered_index_is_rejected(self, tmp_path, corpus_domain):
        save_corpus(tmp_path, build_corpus(corpus_domain, seed=2, size=2))
        index = pd.read_csv(tmp_path / "index.csv")
        index.loc[0, "l2"] *= 2.0
        index.to_csv(tmp_path / "index.csv", index=False)
        with pytest.raises(GridError, match="does not match"):
            load_corpus(tmp_path)

    def test_missing_index(self, tmp_path):
        with pytest.raises(GridError, match="No corpus index"):
            load_corpus(tmp_path)

    def test_cached_corpus_builds_once(self, tmp_path, corpus_domain):
        built = cached_corpus(tmp_path / "corpus", corpus_domain, seed=3)
        assert (tmp_path / "corpus" / "index.csv").exists()
        reloaded = cached_corpus(tmp_path / "corpus", corpus_domain, seed=3)
        assert reloaded[0].seed == 3
        np.testing.assert_array_equal(reloaded[0].field.values, built[0].field.values)

    def test_cached_corpus_rebuilds_for_another_seed(self, tmp_path, corpus_domain):
        built = cached_corpus(tmp_path / "corpus", corpus_domain, seed=3)
        other = cached_corpus(tmp_path / "corpus", corpus_domain, seed=99)
        assert not np.array_equal(other[0].field.values, built[0].field.values)
        np.testing.assert_array_equal(other[0].field.values,
                                      build_corpus(corpus_domain, seed=99)[0].field.values)
        assert set(pd.read_csv(tmp_path / "corpus" / "index.csv")["seed"]) == {99}

    def test_cached_corpus_rebuilds_for_another_grid(self, tmp_path, corpus_domain):
        cached_corpus(tmp_path / "corpus", corpus_domain, seed=3)
        coarser = GridDomain.cube(2, 1.0, corpus_domain.h * 2.0)
        rebuilt = cached_corpus(tmp_path / "corpus", coarser, seed=3)
        assert rebuilt[0].field.domain.shape == coarser.shape
        assert load_corpus(tmp_path / "corpus")[0].field.domain.shape == coarser.shape
