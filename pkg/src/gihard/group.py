"""Finite Abelian groups ``Z_n1 x ... x Z_nk`` with subgroup and coset machinery.

Group elements are plain tuples of residues.  Elements of a power ``G^k`` are
tuples of ``k`` group elements.  Subgroups are always materialized as sorted
element tuples; the groups in scope are tiny, so this keeps membership O(1)
and iteration order deterministic.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from math import prod
from typing import Iterable, Sequence

from .errors import ArityError, DomainError

Element = tuple[int, ...]
Tuple = tuple[Element, ...]


@dataclass(frozen=True)
class FiniteAbelianGroup:
    moduli: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "moduli", tuple(int(n) for n in self.moduli))
        if any(n < 2 for n in self.moduli):
            raise DomainError(f"every modulus must be >= 2, got {self.moduli}")

    @classmethod
    def cyclic(cls, n: int) -> "FiniteAbelianGroup":
        return cls((n,))

    @classmethod
    def parse(cls, text: str) -> "FiniteAbelianGroup":
        """Parse ``z2``, ``z3``, ``z2xz3`` (case-insensitive)."""
        parts = text.lower().replace(" ", "").split("x")
        try:
            return cls(tuple(int(p.lstrip("z")) for p in parts if p))
        except ValueError as exc:
            raise DomainError(f"cannot parse group {text!r}") from exc

    @property
    def order(self) -> int:
        return prod(self.moduli)

    @property
    def rank(self) -> int:
        return len(self.moduli)

    @property
    def zero(self) -> Element:
        return (0,) * len(self.moduli)

    @cached_property
    def elements(self) -> tuple[Element, ...]:
        return tuple(itertools.product(*(range(n) for n in self.moduli)))

    def element(self, residues: Iterable[int]) -> Element:
        residues = tuple(residues)
        if len(residues) != len(self.moduli):
            raise ArityError(f"element {residues} does not match moduli {self.moduli}")
        return tuple(r % n for r, n in zip(residues, self.moduli))

    def contains(self, a: Element) -> bool:
        return len(a) == len(self.moduli) and all(0 <= r < n for r, n in zip(a, self.moduli))

    def add(self, a: Element, b: Element) -> Element:
        return tuple((x + y) % n for x, y, n in zip(a, b, self.moduli))

    def sub(self, a: Element, b: Element) -> Element:
        return tuple((x - y) % n for x, y, n in zip(a, b, self.moduli))

    def neg(self, a: Element) -> Element:
        return tuple((-x) % n for x, n in zip(a, self.moduli))

    def scale(self, c: int, a: Element) -> Element:
        return tuple((c * x) % n for x, n in zip(a, self.moduli))

    def total(self, items: Iterable[Element]) -> Element:
        acc = [0] * len(self.moduli)
        for a in items:
            for i, x in enumerate(a):
                acc[i] += x
        return tuple(x % n for x, n in zip(acc, self.moduli))

    def element_order(self, a: Element) -> int:
        k, cur = 1, a
        while cur != self.zero:
            cur = self.add(cur, a)
            k += 1
        return k

    # -- powers G^k -------------------------------------------------------

    def power_elements(self, k: int) -> Iterable[Tuple]:
        return itertools.product(self.elements, repeat=k)

    def tuple_add(self, a: Tuple, b: Tuple) -> Tuple:
        return tuple(self.add(x, y) for x, y in zip(a, b))

    def tuple_sub(self, a: Tuple, b: Tuple) -> Tuple:
        return tuple(self.sub(x, y) for x, y in zip(a, b))

    def tuple_neg(self, a: Tuple) -> Tuple:
        return tuple(self.neg(x) for x in a)

    def check_tuple(self, a: Sequence, k: int) -> Tuple:
        a = tuple(tuple(x) for x in a)
        if len(a) != k or not all(self.contains(x) for x in a):
            raise ArityError(f"{a} is not an element of the {k}-th power of Z{self.moduli}")
        return a

    def to_json(self) -> dict:
        return {"moduli": list(self.moduli)}

    @classmethod
    def from_json(cls, data: dict) -> "FiniteAbelianGroup":
        return cls(tuple(data["moduli"]))

    def __str__(self) -> str:
        return "x".join(f"Z{n}" for n in self.moduli) or "1"


@dataclass(frozen=True)
class Subgroup:
    """A subgroup of ``group^arity`` with its materialized, sorted element set."""

    group: FiniteAbelianGroup
    arity: int
    generators: tuple[Tuple, ...]
    elements: tuple[Tuple, ...] = field(compare=False)

    @cached_property
    def element_set(self) -> frozenset[Tuple]:
        return frozenset(self.elements)

    @property
    def order(self) -> int:
        return len(self.elements)

    def __contains__(self, x: Tuple) -> bool:
        return x in self.element_set

    def __eq__(self, other) -> bool:
        if not isinstance(other, Subgroup):
            return NotImplemented
        return (self.group, self.arity, self.elements) == (other.group, other.arity, other.elements)

    def __hash__(self) -> int:
        return hash((self.group, self.arity, self.elements))


def span(group: FiniteAbelianGroup, arity: int, generators: Iterable[Sequence]) -> Subgroup:
    """Smallest subgroup of ``group^arity`` containing ``generators``."""
    gens = tuple(group.check_tuple(g, arity) for g in generators)
    zero = (group.zero,) * arity
    seen = {zero}
    frontier = [zero]
    # closure under adding generators suffices: in a finite group -g is a multiple of g
    while frontier:
        nxt = []
        for a in frontier:
            for g in gens:
                b = group.tuple_add(a, g)
                if b not in seen:
                    seen.add(b)
                    nxt.append(b)
        frontier = nxt
    return Subgroup(group, arity, gens, tuple(sorted(seen)))


def sum_kernel(group: FiniteAbelianGroup, arity: int, signs: Sequence[int]) -> Subgroup:
    """All tuples ``x`` in ``group^arity`` with ``sum_i signs[i] * x[i] == 0``."""
    signs = tuple(signs)
    if len(signs) != arity:
        raise ArityError(f"{len(signs)} signs for arity {arity}")
    if any(s not in (1, -1) for s in signs):
        raise DomainError(f"signs must be +1/-1, got {signs}")
    if arity == 0:
        return Subgroup(group, 0, (), ((),))
    last = signs[-1]
    elements = []
    for head in group.power_elements(arity - 1):
        partial = group.total(group.scale(s, x) for s, x in zip(signs, head))
        # signs are +-1, so dividing by the last sign is multiplying by it
        elements.append(head + (group.scale(-last, partial),))
    gens = []
    for i in range(arity - 1):
        for j, n in enumerate(group.moduli):
            unit = tuple(1 if t == j else 0 for t in range(group.rank))
            g = [group.zero] * arity
            g[i] = unit
            g[-1] = group.scale(-last * signs[i], unit)
            gens.append(tuple(g))
    return Subgroup(group, arity, tuple(gens), tuple(sorted(elements)))


def trivial_subgroup(group: FiniteAbelianGroup, arity: int) -> Subgroup:
    return Subgroup(group, arity, (), ((group.zero,) * arity,))


@dataclass(frozen=True)
class Coset:
    """The coset ``subgroup + shift``; the shift is normalized to the least coset element."""

    subgroup: Subgroup
    shift: Tuple

    def __post_init__(self):
        g = self.subgroup.group
        shift = g.check_tuple(self.shift, self.subgroup.arity)
        canon = min(g.tuple_add(d, shift) for d in self.subgroup.elements)
        object.__setattr__(self, "shift", canon)

    @property
    def group(self) -> FiniteAbelianGroup:
        return self.subgroup.group

    @property
    def arity(self) -> int:
        return self.subgroup.arity

    @cached_property
    def elements(self) -> tuple[Tuple, ...]:
        g = self.group
        return tuple(sorted(g.tuple_add(d, self.shift) for d in self.subgroup.elements))

    @cached_property
    def element_set(self) -> frozenset[Tuple]:
        return frozenset(self.elements)

    def __len__(self) -> int:
        return self.subgroup.order

    def __contains__(self, x: Tuple) -> bool:
        return coset_contains(self, x)

    def is_subgroup(self) -> bool:
        return self.shift == (self.group.zero,) * self.arity

    def homogeneous(self) -> "Coset":
        return Coset(self.subgroup, (self.group.zero,) * self.arity)

    def to_json(self) -> dict:
        return {
            "arity": self.arity,
            "generators": [[list(x) for x in g] for g in self.subgroup.generators],
            "shift": [list(x) for x in self.shift],
        }

    @classmethod
    def from_json(cls, group: FiniteAbelianGroup, data: dict) -> "Coset":
        arity = data["arity"]
        sub = span(group, arity, [[tuple(x) for x in g] for g in data["generators"]])
        return cls(sub, tuple(tuple(x) for x in data["shift"]))


def coset_contains(coset: Coset, x: Sequence) -> bool:
    """Whether ``x - shift`` lies in the subgroup."""
    g = coset.group
    x = tuple(tuple(a) for a in x)
    if len(x) != coset.arity:
        raise ArityError(f"tuple of arity {len(x)} tested against coset of arity {coset.arity}")
    return g.tuple_sub(x, coset.shift) in coset.subgroup


def singleton_coset(group: FiniteAbelianGroup, point: Sequence) -> Coset:
    point = group.check_tuple(point, len(point))
    return Coset(trivial_subgroup(group, len(point)), point)


def is_p_group(order: int) -> int | None:
    """Return the prime ``p`` if ``order`` is a power of ``p`` (``order > 1``), else None."""
    if order < 2:
        return None
    p = 2
    while p * p <= order and order % p:
        p += 1
    if order % p:
        p = order
    n = order
    while n % p == 0:
        n //= p
    return p if n == 1 else None


def element_to_json(x: Element) -> list[int]:
    return list(x)


def element_str(x: Element) -> str:
    return ",".join(map(str, x))
