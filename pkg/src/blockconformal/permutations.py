"""Block permutation groups: NOB, CSO, OB and the split (inductive) restriction.

Composition convention: ``(p1 o p2)(t) = p1(p2(t))``.  ``Permutation.mapping``
is 1-based; ``PermutationSet.table`` stores the same maps 0-based, one row per
element, which is what the scoring code indexes with.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Sequence

import numpy as np

from .errors import DimensionError, DivisibilityError, ValidationError


class Scheme(str, Enum):
    NOB = "NOB"
    CSO = "CSO"
    OB = "OB"
    SPLIT = "SPLIT"


@dataclass(frozen=True)
class Permutation:
    """A bijection of ``{1, ..., T}``; ``mapping[t - 1] = pi(t)``."""

    mapping: tuple[int, ...]

    def __post_init__(self):
        m = tuple(int(v) for v in self.mapping)
        if sorted(m) != list(range(1, len(m) + 1)):
            raise ValidationError(f"{m} is not a permutation of 1..{len(m)}")
        object.__setattr__(self, "mapping", m)

    @classmethod
    def identity(cls, T: int) -> Permutation:
        return cls(tuple(range(1, T + 1)))

    @property
    def T(self) -> int:
        return len(self.mapping)

    def __call__(self, t: int) -> int:
        return self.mapping[t - 1]

    def compose(self, other: Permutation) -> Permutation:
        """``self o other``, i.e. ``t -> self(other(t))``."""
        if other.T != self.T:
            raise DimensionError("cannot compose permutations of different sizes")
        return Permutation(tuple(self.mapping[j - 1] for j in other.mapping))

    def inverse(self) -> Permutation:
        inv = [0] * self.T
        for t, v in enumerate(self.mapping, start=1):
            inv[v - 1] = t
        return Permutation(tuple(inv))

    def is_identity(self) -> bool:
        return self.mapping == tuple(range(1, self.T + 1))


class PermutationSet:
    """Ordered, duplicate-free collection of permutations that contains the identity."""

    def __init__(self, table: np.ndarray | Sequence[Sequence[int]], scheme: Scheme | str, *, zero_based: bool = True):
        tab = np.array(table, dtype=np.intp, ndmin=2)
        if not zero_based:
            tab = tab - 1
        n, T = tab.shape
        if n < 1 or T < 1:
            raise ValidationError("a permutation set needs at least one element of size >= 1")
        ref = np.arange(T)
        if not np.all(np.sort(tab, axis=1) == ref):
            raise ValidationError("every row must be a permutation of 0..T-1")
        if len({row.tobytes() for row in tab}) != n:
            raise ValidationError("permutation set contains duplicates")
        identity = np.flatnonzero(np.all(tab == ref, axis=1))
        if identity.size == 0:
            raise ValidationError("permutation set must contain the identity")
        tab.flags.writeable = False
        self._table = tab
        self._identity_index = int(identity[0])
        self.scheme = Scheme(scheme)

    @classmethod
    def from_permutations(cls, perms: Sequence[Permutation], scheme: Scheme | str) -> PermutationSet:
        return cls([p.mapping for p in perms], scheme, zero_based=False)

    @property
    def table(self) -> np.ndarray:
        return self._table

    @property
    def T(self) -> int:
        return self._table.shape[1]

    @property
    def n(self) -> int:
        return self._table.shape[0]

    @property
    def identity_index(self) -> int:
        return self._identity_index

    @property
    def elements(self) -> tuple[Permutation, ...]:
        return tuple(self)

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, i: int) -> Permutation:
        return Permutation(tuple(int(v) + 1 for v in self._table[i]))

    def __iter__(self) -> Iterator[Permutation]:
        for i in range(self.n):
            yield self[i]

    def mapping_set(self) -> set[tuple[int, ...]]:
        return {tuple(int(v) + 1 for v in row) for row in self._table}

    def __repr__(self) -> str:
        return f"PermutationSet(scheme={self.scheme.value}, n={self.n}, T={self.T})"


def _rotations(length: int, step: int, count: int) -> np.ndarray:
    # row j (0-based): t -> mod(t + j*step, length), 0-based
    t = np.arange(length)
    return (t[None, :] + step * np.arange(count)[:, None]) % length


def _fixed_prefix(prefix: int, rotations: np.ndarray) -> np.ndarray:
    n = rotations.shape[0]
    head = np.broadcast_to(np.arange(prefix), (n, prefix))
    return np.hstack([head, rotations + prefix])


def make_nob(T: int, b: int, *, mode: str = "strict") -> PermutationSet:
    """Non-overlapping block rotations: element ``j`` maps ``t -> mod(t + (j-1)b - 1, T) + 1``.

    With ``mode="trim"`` and ``T mod b = r > 0`` the oldest ``r`` time points
    are left fixed and the rotations act on the remaining ``T - r``.
    """
    if T < 1 or b < 1:
        raise ValidationError("T and b must be positive")
    if b > T:
        raise DimensionError(f"block size b={b} exceeds T={T}")
    r = T % b
    if r and mode == "strict":
        raise DivisibilityError(f"b={b} does not divide T={T}; use mode='trim'")
    if mode not in ("strict", "trim"):
        raise ValidationError(f"unknown mode {mode!r}")
    length = T - r
    table = _fixed_prefix(r, _rotations(length, b, length // b))
    return PermutationSet(table, Scheme.NOB)


def make_cso(T: int) -> PermutationSet:
    """Cyclic sliding operations: element ``j`` shifts by ``j - 1`` (mod ``T``)."""
    if T < 1:
        raise ValidationError("T must be positive")
    return PermutationSet(_rotations(T, 1, T), Scheme.CSO)


def make_ob(T: int, b: int) -> PermutationSet:
    """Overlapping blocks: every ``cso o nob`` composition, deduplicated.

    For cyclic shifts this collapses back onto the CSO group; the collapse is
    asserted rather than assumed.  Requires ``b`` to divide ``T``.
    """
    nob = make_nob(T, b).table
    cso = make_cso(T).table
    # composed[i, k, t] = cso_i(nob_k(t))
    composed = cso[:, nob].reshape(-1, T)
    _, first = np.unique(composed, axis=0, return_index=True)
    table = composed[np.sort(first)]
    got = {row.tobytes() for row in table}
    assert got == {row.tobytes() for row in cso}, "OB composition did not reproduce the CSO group"
    return PermutationSet(table, Scheme.OB)


def make_split(T: int, T0: int, calibration_start: int, b: int) -> PermutationSet:
    """Inductive restriction: fix ``1..calibration_start-1``, rotate the rest in blocks of ``b``."""
    if not 1 < calibration_start <= T0 < T:
        raise ValidationError(
            f"need 1 < calibration_start ({calibration_start}) <= T0 ({T0}) < T ({T})"
        )
    if b < 1:
        raise ValidationError("b must be positive")
    length = T - calibration_start + 1
    if length % b:
        raise ValidationError(f"calibration length {length} is not a multiple of b={b}")
    prefix = calibration_start - 1
    table = _fixed_prefix(prefix, _rotations(length, b, length // b))
    return PermutationSet(table, Scheme.SPLIT)


def verify_group(pis: PermutationSet | Sequence[Permutation]) -> bool:
    """Brute-force check of identity, inverses and closure under composition."""
    if isinstance(pis, PermutationSet):
        tab = pis.table
    else:
        tab = np.array([p.mapping for p in pis], dtype=np.intp) - 1
    n, T = tab.shape
    members = {row.tobytes() for row in tab}
    if np.arange(T).tobytes() not in members:
        return False
    for row in tab:
        inv = np.empty_like(row)
        inv[row] = np.arange(T)
        if inv.tobytes() not in members:
            return False
    for row in tab:
        # row o every element, all at once
        products = row[tab]
        if any(prod.tobytes() not in members for prod in products):
            return False
    return True
