"""Counting and enumerating splits of p variables into G unordered groups.

``count_splits`` evaluates the block-size formula

    a(p, G) = sum over p_1 <= ... <= p_G, sum p_g = p, p_g > 0 of
              p! / (p_1! ... p_G!) * prod_i 1 / h_i!

where h_i is the number of groups of size i. This is the Stirling number
of the second kind S(p, G). For p = 15, G = 3 it gives 2,375,101, which is
not the 6,137,951 sometimes quoted for that case; the formula is kept as
written and cross-checked by enumeration.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from math import comb, factorial, prod
from typing import Iterator

from .core import Partition
from .errors import ParameterError, TooManySplitsError

DEFAULT_CAP = 10**7


@dataclass(frozen=True)
class SplitCount:
    p: int
    G: int
    value: int

    def __int__(self):
        return self.value


def _check(p: int, G: int) -> None:
    if not (isinstance(p, int) and isinstance(G, int)):
        raise ParameterError("p and G must be integers")
    if G < 1 or G > p:
        raise ParameterError(f"need 1 <= G <= p, got p={p}, G={G}")


def block_size_profiles(p: int, G: int) -> Iterator[tuple[int, ...]]:
    """Non-decreasing positive tuples of length G summing to p."""

    def rec(remaining, slots, smallest):
        if slots == 1:
            if remaining >= smallest:
                yield (remaining,)
            return
        for s in range(smallest, remaining // slots + 1):
            for rest in rec(remaining - s, slots - 1, s):
                yield (s,) + rest

    yield from rec(p, G, 1)


def count_splits(p: int, G: int) -> SplitCount:
    _check(p, G)
    top = (p - (G - 2)) // 2
    total = 0
    for sizes in block_size_profiles(p, G):
        h = Counter(sizes)
        # sizes above `top` occur at most once, so h_i! = 1 for them
        denom = prod(factorial(s) for s in sizes) * prod(
            factorial(h.get(i, 0)) for i in range(1, top + 1)
        )
        num = factorial(p)
        assert num % denom == 0
        total += num // denom
    return SplitCount(p, G, total)


def count_splits_with_leftout(p: int, G: int) -> SplitCount:
    """``b(p, G) = sum_{j=G}^{p} C(p, j) a(j, G)``: splits of any subset of
    at least G variables."""
    _check(p, G)
    return SplitCount(p, G, sum(comb(p, j) * count_splits(j, G).value for j in range(G, p + 1)))


def _restricted_growth(p: int, G: int) -> Iterator[list[int]]:
    """Restricted-growth strings of length p using exactly G labels, in
    lexicographic order."""
    a = [0] * p

    def rec(i, used):
        if i == p:
            if used == G:
                yield a
            return
        # not enough positions left to open the remaining labels
        if G - used > p - i:
            return
        for v in range(min(used + 1, G)):
            a[i] = v
            yield from rec(i + 1, max(used, v + 1))

    yield from rec(0, 0)


def enumerate_splits(p: int, G: int, cap: int = DEFAULT_CAP) -> Iterator[Partition]:
    """Yield every split of {0..p-1} into G groups exactly once.

    Order is lexicographic in the restricted-growth string, which lists
    groups by their smallest element. Raises TooManySplitsError up front if
    the count exceeds ``cap``.
    """
    count = count_splits(p, G).value
    if count > cap:
        raise TooManySplitsError(count, cap)
    return _enumerate(p, G)


def _enumerate(p, G):
    for rgs in _restricted_growth(p, G):
        groups: list[list[int]] = [[] for _ in range(G)]
        for j, label in enumerate(rgs):
            groups[label].append(j)
        yield Partition(tuple(tuple(g) for g in groups))


def adaptive_split_set(p: int, Gmax: int, cap: int = DEFAULT_CAP) -> list[Partition]:
    """The single-group partition followed by all splits into 2..Gmax groups."""
    if Gmax < 1 or Gmax > p:
        raise ParameterError(f"need 1 <= Gmax <= p, got p={p}, Gmax={Gmax}")
    total = sum(count_splits(p, G).value for G in range(1, Gmax + 1))
    if total > cap:
        raise TooManySplitsError(total, cap)
    out: list[Partition] = []
    seen: set[Partition] = set()
    for G in range(1, Gmax + 1):
        for part in _enumerate(p, G):
            if part not in seen:
                seen.add(part)
                out.append(part)
    return out

