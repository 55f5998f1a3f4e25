import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blockconformal.errors import CsvParseError, DimensionError, ValidationError
from blockconformal.permutations import Permutation
from blockconformal.series import (
    AugmentedSeries,
    ObservedSeries,
    apply_permutation,
    augment,
    format_series_csv,
    parse_series_csv,
)


def _series(T0, T1, p=2, seed=0):
    rng = np.random.default_rng(seed)
    return ObservedSeries(rng.standard_normal(T0), rng.standard_normal((T0 + T1, p)))


class TestObservedSeries:
    def test_counts(self):
        s = _series(5, 2, p=3)
        assert (s.T0, s.T1, s.T, s.p) == (5, 2, 7, 3)

    def test_needs_future_rows(self):
        with pytest.raises(DimensionError):
            ObservedSeries(np.zeros(3), np.zeros((3, 1)))

    def test_rejects_nan(self):
        with pytest.raises(ValidationError):
            ObservedSeries(np.array([1.0, np.nan]), np.zeros((3, 1)))

    def test_arrays_are_read_only(self):
        s = _series(3, 1)
        with pytest.raises(ValueError):
            s.responses[0] = 1.0


class TestAugment:
    def test_single_future_point(self):
        s = ObservedSeries(np.array([1.0, 2.0]), np.array([[1.0], [2.0], [3.0]]))
        z = augment(s, [5.0])
        np.testing.assert_array_equal(z.responses, [1.0, 2.0, 5.0])
        np.testing.assert_array_equal(z.features, s.features)

    def test_wrong_length(self):
        s = ObservedSeries(np.array([1.0, 2.0]), np.zeros((3, 1)))
        with pytest.raises(DimensionError):
            augment(s, [1.0, 2.0])

    def test_two_future_points(self):
        s = _series(3, 2)
        z = augment(s, [0.0, 0.0])
        np.testing.assert_array_equal(z.responses[3:], [0.0, 0.0])
        np.testing.assert_array_equal(z.responses[:3], s.responses)

    def test_non_finite_candidate(self):
        with pytest.raises(ValidationError):
            augment(_series(3, 1), [np.inf])

    def test_reaugment_from_tail_is_identical(self):
        s = _series(6, 2)
        z = augment(s, [0.3, -1.2])
        z2 = augment(s, z.hypothesized_tail)
        np.testing.assert_array_equal(z.responses, z2.responses)
        np.testing.assert_array_equal(z.features, z2.features)


class TestApplyPermutation:
    def test_identity(self):
        z = augment(_series(4, 2), [1.0, 2.0])
        out = apply_permutation(z, Permutation.identity(6))
        np.testing.assert_array_equal(out.responses, z.responses)
        np.testing.assert_array_equal(out.features, z.features)

    def test_block_swap(self):
        z = AugmentedSeries(np.array([10.0, 20.0, 30.0, 40.0]), np.zeros((4, 0)), 3)
        out = apply_permutation(z, (3, 4, 1, 2))
        np.testing.assert_array_equal(out.responses, [30.0, 40.0, 10.0, 20.0])

    def test_inverse_restores(self):
        z = augment(_series(5, 1), [0.5])
        pi = Permutation((2, 5, 1, 6, 3, 4))
        back = apply_permutation(apply_permutation(z, pi), pi.inverse())
        np.testing.assert_array_equal(back.responses, z.responses)
        np.testing.assert_array_equal(back.features, z.features)

    def test_size_mismatch(self):
        z = augment(_series(3, 1), [0.0])
        with pytest.raises(DimensionError):
            apply_permutation(z, (1, 2, 3))

    @pytest.mark.parametrize("T", [2, 3, 4])
    def test_composition_matches_reindexing_oracle(self, T):
        z = augment(_series(T - 1, 1, p=1, seed=T), [7.0])
        perms = list(itertools.permutations(range(1, T + 1)))
        for m1, m2 in itertools.product(perms, repeat=2):
            p1, p2 = Permutation(m1), Permutation(m2)
            # brute force: position t of Z^(p1 o p2) holds Z at p1(p2(t))
            expected = [z.responses[m1[m2[t] - 1] - 1] for t in range(T)]
            got = apply_permutation(z, p1.compose(p2)).responses
            np.testing.assert_array_equal(got, expected)
            # and acting twice: (Z^p1)^p2 = Z^(p1 o p2)
            twice = apply_permutation(apply_permutation(z, p1), p2).responses
            np.testing.assert_array_equal(twice, expected)

    @given(st.integers(5, 6).flatmap(lambda T: st.permutations(list(range(1, T + 1)))))
    @settings(max_examples=50, deadline=None)
    def test_preserves_pairs(self, mapping):
        T = len(mapping)
        z = augment(_series(T - 1, 1, p=2, seed=1), [3.0])
        out = apply_permutation(z, mapping)
        before = sorted(zip(z.responses, map(tuple, z.features)))
        after = sorted(zip(out.responses, map(tuple, out.features)))
        assert before == after


class TestCsv:
    GOOD = "t,y,x1,x2\n1,1.0,0.5,0.1\n2,2.0,0.2,0.3\n3,,1.0,1.0\n"

    def test_parse(self):
        s = parse_series_csv(self.GOOD)
        assert (s.T0, s.T1, s.p) == (2, 1, 2)
        np.testing.assert_array_equal(s.features[2], [1.0, 1.0])

    def test_comment_lines_skipped(self):
        s = parse_series_csv("# config: {}\n" + self.GOOD)
        assert s.T == 3

    def test_round_trip(self):
        s = _series(4, 2, p=3)
        back = parse_series_csv(format_series_csv(s, ["hello"]))
        np.testing.assert_array_equal(back.responses, s.responses)
        np.testing.assert_array_equal(back.features, s.features)

    @pytest.mark.parametrize(
        "text, line",
        [
            ("t,y,x1\n1,1.0,0.5\n2,,0.2\n3,3.0,1.0\n", 4),
            ("t,y,x1\n1,1.0,0.5\n3,,0.2\n", 3),
            ("t,y,z\n1,1.0,0.5\n", 1),
            ("t,y,x1\n1,abc,0.5\n2,,1\n", 2),
            ("t,y,x1\n1,1.0\n", 2),
            ("t,y,x1\n1,1.0,nan\n2,,1\n", 2),
        ],
    )
    def test_errors_carry_line_numbers(self, text, line):
        with pytest.raises(CsvParseError) as info:
            parse_series_csv(text)
        assert info.value.line == line
        assert f"line {line}" in str(info.value)

    def test_missing_future_rows(self):
        with pytest.raises(CsvParseError, match="future"):
            parse_series_csv("t,y,x1\n1,1.0,0.5\n")
