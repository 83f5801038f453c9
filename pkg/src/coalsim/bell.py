"""Set partitions, integer compositions and Bell polynomials.

Enumeration is used at small sizes only: it is the reference against which
the recurrence-based evaluators are checked.  Sequences of weights are
1-indexed in meaning but passed as ordinary Python sequences, so ``w[0]`` is
``w_1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Sequence

from .errors import BudgetError, DomainError

MAX_PARTITION_SIZE = 12
MAX_ORACLE_SIZE = 10
MAX_COMPOSITION_SIZE = 64
# below or at this size partial_bell enumerates partitions
ENUMERATION_CUTOFF = 10


@dataclass(frozen=True)
class SetPartition:
    ground_size: int
    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        seen = sorted(x for blk in self.blocks for x in blk)
        if any(len(blk) == 0 for blk in self.blocks):
            raise ValueError("empty block")
        if seen != list(range(1, self.ground_size + 1)):
            raise ValueError(f"blocks do not partition 1..{self.ground_size}: {self.blocks}")

    @classmethod
    def from_blocks(cls, blocks) -> "SetPartition":
        """Canonical form: sorted blocks, ordered by least element."""
        canon = tuple(sorted(tuple(sorted(blk)) for blk in blocks))
        return cls(sum(len(blk) for blk in canon), canon)

    def block_sizes(self) -> list[int]:
        return [len(blk) for blk in self.blocks]

    def __len__(self) -> int:
        return len(self.blocks)


@dataclass(frozen=True)
class WeightedComposition:
    """Count vector l = (l_1..l_d): l_k parts of size k."""

    counts: tuple[int, ...]

    @property
    def size(self) -> int:
        return sum(self.counts)

    @property
    def weight(self) -> int:
        return sum((k + 1) * c for k, c in enumerate(self.counts))


def enumerate_partitions(i: int, num_blocks: int | None = None) -> Iterator[SetPartition]:
    """All partitions of {1..i}, optionally only those with ``num_blocks`` blocks.

    Walks restricted growth strings, so every partition appears once.
    """
    if i < 1:
        raise DomainError(f"ground size must be >= 1, got {i}")
    if i > MAX_PARTITION_SIZE:
        raise BudgetError(f"partition enumeration is limited to i <= {MAX_PARTITION_SIZE}, got {i}")
    if num_blocks is not None and not (1 <= num_blocks <= i):
        return
    for rgs in _growth_strings(i, num_blocks):
        nb = max(rgs) + 1
        blocks = [[] for _ in range(nb)]
        for elem, label in enumerate(rgs, start=1):
            blocks[label].append(elem)
        yield SetPartition(i, tuple(tuple(blk) for blk in blocks))


def _growth_strings(i: int, num_blocks: int | None) -> Iterator[list[int]]:
    rgs = [0] * i
    cap = num_blocks if num_blocks is not None else i

    def rec(pos: int, nb: int):
        if pos == i:
            if num_blocks is None or nb == num_blocks:
                yield list(rgs)
            return
        # not enough positions left to open the required blocks
        if num_blocks is not None and nb + (i - pos) < num_blocks:
            return
        for label in range(min(nb + 1, cap)):
            rgs[pos] = label
            yield from rec(pos + 1, max(nb, label + 1))

    rgs[0] = 0
    yield from rec(1, 1)


@lru_cache(maxsize=None)
def stirling2(i: int, l: int) -> int:
    if i == 0 and l == 0:
        return 1
    if i <= 0 or l <= 0 or l > i:
        return 0
    return l * stirling2(i - 1, l) + stirling2(i - 1, l - 1)


def bell_number(i: int) -> int:
    return sum(stirling2(i, l) for l in range(0, i + 1))


def lah(i: int, k: int) -> int:
    """Unsigned Lah number C(i-1,k-1) i!/k!."""
    if not (1 <= k <= i):
        return 0
    return math.comb(i - 1, k - 1) * math.factorial(i) // math.factorial(k)


def _check_bell_args(i: int, l: int, w: Sequence) -> None:
    if not (1 <= l <= i):
        raise DomainError(f"need 1 <= l <= i, got i={i}, l={l}")
    if len(w) < i - l + 1:
        raise DomainError(f"need at least {i - l + 1} weights, got {len(w)}")


def _block_size_lists(i: int, num_blocks: int | None) -> Iterator[list[int]]:
    """Block sizes of every partition of {1..i}, one list per partition.

    Same walk as :func:`enumerate_partitions` without building the blocks.
    The yielded list is reused; copy it to keep it.
    """
    sizes = [1]

    def rec(pos: int):
        nb = len(sizes)
        if pos == i:
            if num_blocks is None or nb == num_blocks:
                yield sizes
            return
        if num_blocks is not None and nb + (i - pos) < num_blocks:
            return
        for label in range(nb):
            sizes[label] += 1
            yield from rec(pos + 1)
            sizes[label] -= 1
        if num_blocks is None or nb < num_blocks:
            sizes.append(1)
            yield from rec(pos + 1)
            sizes.pop()

    yield from rec(1)


def partial_bell_enumerated(i: int, l: int, w: Sequence[float]) -> float:
    _check_bell_args(i, l, w)
    if i > MAX_PARTITION_SIZE:
        raise BudgetError(f"partition enumeration is limited to i <= {MAX_PARTITION_SIZE}, got {i}")
    terms = []
    for sizes in _block_size_lists(i, l):
        prod = 1.0
        for s in sizes:
            prod *= w[s - 1]
        terms.append(prod)
    return math.fsum(terms)


def partial_bell_table(n: int, w: Sequence):
    """Table B[i][l] for 0 <= l <= i <= n via the first-block convolution.

    Works with any number type supporting + and * (floats, mpmath, Fractions).
    """
    if len(w) < n:
        raise DomainError(f"need {n} weights, got {len(w)}")
    zero = w[0] * 0
    one = zero + 1
    table = [[zero] * (n + 1) for _ in range(n + 1)]
    table[0][0] = one
    for i in range(1, n + 1):
        for l in range(1, i + 1):
            acc = zero
            # block containing element 1 has size j
            for j in range(1, i - l + 2):
                prev = table[i - j][l - 1]
                if prev:
                    acc += math.comb(i - 1, j - 1) * w[j - 1] * prev
            table[i][l] = acc
    return table


def partial_bell_recurrence(i: int, l: int, w: Sequence[float]) -> float:
    _check_bell_args(i, l, w)
    return partial_bell_table(i, list(w[:i]) + [0.0] * max(0, i - len(w)))[i][l]


def partial_bell(i: int, l: int, w: Sequence[float]) -> float:
    """B_{i,l}(w): sum over partitions of {1..i} into l blocks of prod w_|B|."""
    _check_bell_args(i, l, w)
    if i <= ENUMERATION_CUTOFF:
        return partial_bell_enumerated(i, l, w)
    return partial_bell_recurrence(i, l, w)


def complete_bell(i: int, v: Sequence[float], w: Sequence[float]) -> float:
    """B_i(v, w) = sum_l v_l B_{i,l}(w)."""
    if i < 1:
        raise DomainError(f"i must be >= 1, got {i}")
    if len(v) < i:
        raise DomainError(f"need {i} outer coefficients, got {len(v)}")
    if i <= ENUMERATION_CUTOFF:
        by_blocks = [[] for _ in range(i + 1)]
        for sizes in _block_size_lists(i, None):
            prod = 1.0
            for s in sizes:
                prod *= w[s - 1]
            by_blocks[len(sizes)].append(prod)
        return math.fsum(v[l - 1] * math.fsum(by_blocks[l]) for l in range(1, i + 1))
    table = partial_bell_table(i, list(w[:i]))
    return math.fsum(v[l - 1] * table[i][l] for l in range(1, i + 1))


def faa_di_bruno_oracle(i: int, f_derivs: Sequence[float], g_derivs: Sequence[float], g0: float) -> float:
    """i-th derivative of f(g(x)) at a point where g = g0, by summing over all set partitions.

    ``f_derivs[j-1]`` is f^(j)(g0) and ``g_derivs[j-1]`` is g^(j) at the point.
    ``g0`` only documents where ``f_derivs`` were taken.
    """
    del g0
    if i < 1:
        raise DomainError(f"i must be >= 1, got {i}")
    if i > MAX_ORACLE_SIZE:
        raise BudgetError(f"Faa di Bruno enumeration is limited to i <= {MAX_ORACLE_SIZE}")
    terms = []
    for sizes in _block_size_lists(i, None):
        prod = f_derivs[len(sizes) - 1]
        for s in sizes:
            prod *= g_derivs[s - 1]
        terms.append(prod)
    return math.fsum(terms)


def enumerate_weighted_compositions(i: int, m: int, d: int) -> Iterator[WeightedComposition]:
    """All l in N_0^d with |l| = m and <l> = i, i.e. partitions of i into m parts of size <= d."""
    if d < 1:
        raise DomainError(f"d must be >= 1, got {d}")
    if not (1 <= m <= i):
        raise DomainError(f"need 1 <= m <= i, got i={i}, m={m}")
    if i > MAX_COMPOSITION_SIZE:
        raise BudgetError(f"composition enumeration is limited to i <= {MAX_COMPOSITION_SIZE}")
    for parts in _partitions_into(i, m, min(d, i)):
        counts = [0] * d
        for p in parts:
            counts[p - 1] += 1
        yield WeightedComposition(tuple(counts))


def _partitions_into(total: int, parts: int, largest: int) -> Iterator[list[int]]:
    # non-increasing sequences of `parts` positive integers <= largest summing to total
    if parts == 0:
        if total == 0:
            yield []
        return
    if total < parts or total > parts * largest:
        return
    for first in range(min(largest, total - parts + 1), 0, -1):
        for rest in _partitions_into(total - first, parts - 1, first):
            yield [first] + rest
