import itertools
from math import comb

import pytest

from splitmspe.core import Partition
from splitmspe.errors import ParameterError, TooManySplitsError
from splitmspe.partitions import (
    adaptive_split_set,
    block_size_profiles,
    count_splits,
    count_splits_with_leftout,
    enumerate_splits,
)


def bell_numbers(n):
    """Bell triangle; independent of the block-size formula."""
    row = [1]
    bells = [1]
    for _ in range(n):
        new = [row[-1]]
        for v in row:
            new.append(new[-1] + v)
        row = new
        bells.append(row[0])
    return bells


def stirling2(p, G):
    """Recurrence S(p, G) = G S(p-1, G) + S(p-1, G-1)."""
    table = [[0] * (G + 1) for _ in range(p + 1)]
    table[0][0] = 1
    for i in range(1, p + 1):
        for k in range(1, min(i, G) + 1):
            table[i][k] = k * table[i - 1][k] + table[i - 1][k - 1]
    return table[p][G]


def brute_force_splits(p, G):
    """Label assignments modulo relabelling, counted as canonical partitions."""
    seen = set()
    for labels in itertools.product(range(G), repeat=p):
        if len(set(labels)) == G:
            seen.add(Partition.from_groups([[j for j in range(p) if labels[j] == g] for g in range(G)]))
    return seen


class TestCounts:
    @pytest.mark.parametrize("p,G,expected", [(6, 2, 31), (6, 3, 90), (4, 2, 7), (5, 5, 1), (5, 1, 1)])
    def test_known_values(self, p, G, expected):
        assert count_splits(p, G).value == expected

    @pytest.mark.parametrize("p", range(1, 13))
    def test_rows_sum_to_bell_numbers(self, p):
        assert sum(count_splits(p, G).value for G in range(1, p + 1)) == bell_numbers(p)[p]

    @pytest.mark.parametrize("p,G", [(9, 4), (12, 5), (15, 3), (20, 7)])
    def test_matches_stirling_recurrence(self, p, G):
        assert count_splits(p, G).value == stirling2(p, G)

    def test_large_values_are_exact(self):
        v = count_splits(30, 3).value
        assert isinstance(v, int) and v == (3**30 - 3 * 2**30 + 3) // 6

    def test_fifteen_into_three(self):
        assert count_splits(15, 3).value == 2_375_101

    def test_leftout(self):
        assert count_splits_with_leftout(3, 2).value == 6
        assert count_splits_with_leftout(6, 2).value == sum(comb(6, j) * stirling2(j, 2) for j in range(2, 7))

    @pytest.mark.parametrize("p,G", [(3, 0), (3, 4), (0, 0)])
    def test_range(self, p, G):
        with pytest.raises(ParameterError):
            count_splits(p, G)

    def test_profiles(self):
        assert list(block_size_profiles(6, 3)) == [(1, 1, 4), (1, 2, 3), (2, 2, 2)]


class TestEnumeration:
    @pytest.mark.parametrize("p", range(1, 10))
    def test_lengths_equal_counts(self, p):
        for G in range(1, p + 1):
            parts = list(enumerate_splits(p, G))
            assert len(parts) == count_splits(p, G).value
            assert len(set(parts)) == len(parts)

    @pytest.mark.parametrize("p,G", [(4, 2), (5, 3), (6, 3)])
    def test_matches_brute_force(self, p, G):
        assert set(enumerate_splits(p, G)) == brute_force_splits(p, G)

    def test_every_split_is_canonical_and_covering(self):
        for part in enumerate_splits(6, 3):
            assert len(part) == 3
            assert part.covers(6)
            assert part == part.canonical()

    def test_order_is_lexicographic(self):
        parts = list(enumerate_splits(3, 2))
        assert [str(q) for q in parts] == ["{1,2}{3}", "{1,3}{2}", "{1}{2,3}"]

    def test_cap(self):
        with pytest.raises(TooManySplitsError) as exc:
            enumerate_splits(15, 3, cap=1000)
        assert exc.value.count == 2_375_101
        assert exc.value.exit_code == 4


class TestAdaptiveSet:
    def test_size(self):
        s = adaptive_split_set(6, 3)
        assert len(s) == 1 + 31 + 90 == 122
        assert s[0] == Partition.single(6)
        assert len(set(s)) == 122

    def test_cap(self):
        with pytest.raises(TooManySplitsError):
            adaptive_split_set(12, 4, cap=100)

    def test_gmax_range(self):
        with pytest.raises(ParameterError):
            adaptive_split_set(3, 4)
