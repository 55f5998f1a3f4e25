import itertools

import numpy as np
import pytest

from blockconformal.errors import DimensionError, DivisibilityError, ValidationError
from blockconformal.permutations import (
    Permutation,
    PermutationSet,
    Scheme,
    make_cso,
    make_nob,
    make_ob,
    make_split,
    verify_group,
)


def nob_map(T, b, j):
    """The case-split formula, written out."""
    return tuple(t + (j - 1) * b if t <= T - (j - 1) * b else t + (j - 1) * b - T for t in range(1, T + 1))


def cso_map(T, j):
    return tuple(t + (j - 1) if t <= T - (j - 1) else t + (j - 1) - T for t in range(1, T + 1))


class TestNob:
    def test_first_element_is_identity(self):
        assert make_nob(6, 2)[0].mapping == (1, 2, 3, 4, 5, 6)

    def test_second_element(self):
        assert make_nob(6, 2)[1].mapping == (3, 4, 5, 6, 1, 2)

    def test_single_block(self):
        pis = make_nob(4, 4)
        assert pis.n == 1 and pis[0].is_identity()

    @pytest.mark.parametrize("T,b", [(6, 1), (6, 2), (6, 3), (12, 4), (20, 5)])
    def test_matches_case_split_formula(self, T, b):
        pis = make_nob(T, b)
        assert pis.n == T // b
        assert [p.mapping for p in pis] == [nob_map(T, b, j) for j in range(1, T // b + 1)]
        assert len(pis.mapping_set()) == pis.n

    def test_non_divisible_strict(self):
        with pytest.raises(DivisibilityError):
            make_nob(7, 2)

    def test_block_larger_than_T(self):
        with pytest.raises(DimensionError):
            make_nob(3, 4)

    def test_trim_fixes_oldest_points(self):
        pis = make_nob(7, 2, mode="trim")
        assert pis.n == 3
        for p in pis:
            assert p(1) == 1
        assert pis[1].mapping == (1, 4, 5, 6, 7, 2, 3)
        assert verify_group(pis)

    def test_nob_elements_are_cso_elements(self):
        T, b = 12, 3
        cso = make_cso(T)
        for k, p in enumerate(make_nob(T, b), start=1):
            assert p == cso[b * (k - 1)]


class TestCso:
    def test_identity(self):
        assert make_cso(3)[0].mapping == (1, 2, 3)

    def test_shift(self):
        assert make_cso(3)[1].mapping == (2, 3, 1)

    def test_size(self):
        assert len(make_cso(3).mapping_set()) == 3

    @pytest.mark.parametrize("T", range(1, 13))
    def test_composition_table(self, T):
        pis = make_cso(T)
        for j1, j2 in itertools.product(range(1, T + 1), repeat=2):
            j = j1 + j2 - 1 - T * (j1 + j2 > T + 1)
            assert pis[j1 - 1].compose(pis[j2 - 1]) == pis[j - 1]
        assert [p.mapping for p in pis] == [cso_map(T, j) for j in range(1, T + 1)]


class TestOb:
    def test_equals_cso(self):
        assert make_ob(6, 2).mapping_set() == make_cso(6).mapping_set()

    def test_single_block(self):
        assert make_ob(4, 4).mapping_set() == make_cso(4).mapping_set()

    def test_raw_and_deduplicated_counts(self):
        T, b = 6, 2
        raw = [c.compose(n) for c in make_cso(T) for n in make_nob(T, b)]
        assert len(raw) == T * (T // b)
        assert len(set(raw)) == T
        assert make_ob(T, b).n == T

    def test_identity_first(self):
        assert make_ob(8, 2)[0].is_identity()


class TestSplit:
    def test_training_set_nonempty(self):
        with pytest.raises(ValidationError):
            make_split(8, 6, 1, 2)

    def test_two_blocks(self):
        pis = make_split(8, 6, 5, 2)
        assert pis.n == 2
        assert pis[1].mapping == (1, 2, 3, 4, 7, 8, 5, 6)

    @pytest.mark.parametrize("T,T0,start,b", [(8, 6, 5, 2), (10, 9, 3, 4), (12, 11, 2, 1)])
    def test_prefix_fixed(self, T, T0, start, b):
        for p in make_split(T, T0, start, b):
            assert all(p(t) == t for t in range(1, start))

    def test_divisibility(self):
        with pytest.raises(ValidationError):
            make_split(8, 6, 4, 2)

    def test_start_beyond_history(self):
        with pytest.raises(ValidationError):
            make_split(8, 5, 6, 1)


class TestVerifyGroup:
    def test_nob(self):
        assert verify_group(make_nob(6, 2))

    def test_cso(self):
        assert verify_group(make_cso(5))

    def test_not_closed(self):
        assert not verify_group([Permutation((1, 2, 3)), Permutation((2, 3, 1))])

    def test_missing_identity(self):
        assert not verify_group([Permutation((2, 3, 1)), Permutation((3, 1, 2))])

    def test_full_symmetric_group(self):
        perms = [Permutation(m) for m in itertools.permutations(range(1, 5))]
        assert verify_group(perms)

    @pytest.mark.parametrize("T", [4, 6, 9])
    def test_all_schemes(self, T):
        for b in [d for d in range(1, T + 1) if T % d == 0]:
            assert verify_group(make_nob(T, b))
            assert verify_group(make_ob(T, b))
        assert verify_group(make_cso(T))
        assert verify_group(make_split(T, T - 1, 2, 1))


class TestPermutationSet:
    def test_requires_identity(self):
        with pytest.raises(ValidationError):
            PermutationSet([[1, 0, 2]], Scheme.NOB)

    def test_rejects_duplicates(self):
        with pytest.raises(ValidationError):
            PermutationSet([[0, 1], [0, 1]], Scheme.NOB)

    def test_rejects_non_bijection(self):
        with pytest.raises(ValidationError):
            PermutationSet([[0, 1], [0, 0]], Scheme.NOB)

    def test_table_read_only(self):
        with pytest.raises(ValueError):
            make_cso(3).table[0, 0] = 2

    def test_permutation_validation(self):
        with pytest.raises(ValidationError):
            Permutation((1, 1, 3))

    def test_inverse(self):
        p = Permutation((3, 1, 4, 2))
        assert p.compose(p.inverse()).is_identity()
        assert p.inverse().compose(p).is_identity()

    def test_table_and_elements_agree(self):
        pis = make_nob(6, 3)
        np.testing.assert_array_equal(pis.table + 1, [p.mapping for p in pis.elements])
