"""Finite groupoids as dense integer tables, with bitmask arrow-set algebra.

Arrows are integers ``0..m-1``; ids ``0..n_units-1`` are reserved for the
identity arrows, so a unit and its identity arrow share an id.  Sets of
arrows and units are bitmasks wrapped in :class:`ArrowSet` / :class:`UnitSet`.
Groupoids and sets are immutable after construction and every operation here
is a pure function, so values can be shared freely between threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator


class GroupoidError(Exception):
    """Malformed tables or misused operations."""


class OwnerMismatchError(GroupoidError):
    """Sets owned by different groupoids were combined."""


def iter_bits(mask: int) -> Iterator[int]:
    """Yield the set bit positions of ``mask`` in increasing order."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def mask_of(ids: Iterable[int]) -> int:
    out = 0
    for i in ids:
        out |= 1 << i
    return out


class Groupoid:
    """Source/range/inverse/composition tables over dense arrow ids.

    ``comp`` is a partial map defined exactly on pairs ``(a, b)`` with
    ``src(a) == rng(b)``; it is stored flat under the key ``a * m + b``.
    The constructor checks table shapes only; the groupoid axioms are
    checked by :func:`validate`, which reports violations as data.
    """

    __slots__ = (
        "n_units",
        "n_arrows",
        "src",
        "rng",
        "inv",
        "comp",
        "by_src",
        "by_rng",
        "units_mask",
        "arrows_mask",
        "parent",
        "parent_arrows",
        "parent_units",
        "_pair_arrow",
        "_principal",
    )

    def __init__(
        self,
        n_units: int,
        src: Iterable[int],
        rng: Iterable[int],
        inv: Iterable[int],
        comp,
        *,
        parent: "Groupoid | None" = None,
        parent_arrows: "tuple[int, ...] | None" = None,
        parent_units: "tuple[int, ...] | None" = None,
    ):
        self.src = tuple(int(x) for x in src)
        self.rng = tuple(int(x) for x in rng)
        self.inv = tuple(int(x) for x in inv)
        m = len(self.src)
        if not 0 <= n_units <= m:
            raise GroupoidError(f"n_units={n_units} out of range for {m} arrows")
        if len(self.rng) != m or len(self.inv) != m:
            raise GroupoidError("src/rng/inv tables must have equal length")
        self.n_units = n_units
        self.n_arrows = m
        for name, table, bound in (
            ("src", self.src, n_units),
            ("rng", self.rng, n_units),
            ("inv", self.inv, m),
        ):
            for a, v in enumerate(table):
                if not 0 <= v < bound:
                    raise GroupoidError(f"{name}[{a}]={v} out of range")

        flat: dict[int, int] = {}
        items = comp.items() if isinstance(comp, dict) else ((t[:2], t[2]) for t in comp)
        for key, c in items:
            a, b = key
            if not (0 <= a < m and 0 <= b < m and 0 <= c < m):
                raise GroupoidError(f"comp entry ({a},{b})->{c} out of range")
            k = a * m + b
            if k in flat and flat[k] != c:
                raise GroupoidError(f"conflicting comp entries for ({a},{b})")
            flat[k] = c
        self.comp = flat

        by_src = [0] * n_units
        by_rng = [0] * n_units
        for a in range(m):
            by_src[self.src[a]] |= 1 << a
            by_rng[self.rng[a]] |= 1 << a
        self.by_src = tuple(by_src)
        self.by_rng = tuple(by_rng)
        self.units_mask = (1 << n_units) - 1
        self.arrows_mask = (1 << m) - 1
        self.parent = parent
        self.parent_arrows = parent_arrows
        self.parent_units = parent_units
        self._pair_arrow = None
        self._principal = None

    # -- basic queries -------------------------------------------------

    def is_unit(self, a: int) -> bool:
        return a < self.n_units

    def compose(self, a: int, b: int) -> int:
        c = self.comp.get(a * self.n_arrows + b)
        if c is None:
            raise GroupoidError(f"arrows {a} and {b} are not composable")
        return c

    def compose_or_none(self, a: int, b: int) -> "int | None":
        return self.comp.get(a * self.n_arrows + b)

    def pair_arrow(self, u: int, v: int) -> "int | None":
        """The minimum-id arrow with source ``u`` and range ``v`` (unique when principal)."""
        if self._pair_arrow is None:
            table: dict[tuple[int, int], int] = {}
            for a in range(self.n_arrows - 1, -1, -1):
                table[(self.src[a], self.rng[a])] = a
            self._pair_arrow = table
        return self._pair_arrow.get((u, v))

    # -- set constructors ----------------------------------------------

    def arrow_set(self, ids: Iterable[int] = ()) -> "ArrowSet":
        return ArrowSet(self, mask_of(ids))

    def unit_set(self, ids: Iterable[int] = ()) -> "UnitSet":
        return UnitSet(self, mask_of(ids))

    def all_arrows(self) -> "ArrowSet":
        return ArrowSet(self, self.arrows_mask)

    def all_units(self) -> "UnitSet":
        return UnitSet(self, self.units_mask)

    def unit_arrows(self) -> "ArrowSet":
        return ArrowSet(self, self.units_mask)

    # -- restriction back-maps -----------------------------------------

    def to_parent_arrows(self, aset: "ArrowSet") -> "ArrowSet":
        if self.parent is None:
            raise GroupoidError("groupoid has no parent")
        _same_owner(self, aset.owner)
        return ArrowSet(self.parent, mask_of(self.parent_arrows[a] for a in aset))

    def from_parent_arrows(self, aset: "ArrowSet") -> "ArrowSet":
        if self.parent is None:
            raise GroupoidError("groupoid has no parent")
        _same_owner(self.parent, aset.owner)
        out = 0
        for local, orig in enumerate(self.parent_arrows):
            if aset.mask >> orig & 1:
                out |= 1 << local
        return ArrowSet(self, out)

    def to_parent_units(self, uset: "UnitSet") -> "UnitSet":
        if self.parent is None:
            raise GroupoidError("groupoid has no parent")
        _same_owner(self, uset.owner)
        return UnitSet(self.parent, mask_of(self.parent_units[u] for u in uset))

    def from_parent_units(self, uset: "UnitSet") -> "UnitSet":
        if self.parent is None:
            raise GroupoidError("groupoid has no parent")
        _same_owner(self.parent, uset.owner)
        out = 0
        for local, orig in enumerate(self.parent_units):
            if uset.mask >> orig & 1:
                out |= 1 << local
        return UnitSet(self, out)

    def __repr__(self):
        return f"Groupoid(units={self.n_units}, arrows={self.n_arrows})"


def _same_owner(g: Groupoid, h: Groupoid) -> None:
    if g is not h:
        raise OwnerMismatchError("sets belong to different groupoids")


class ArrowSet:
    """An immutable subset of a groupoid's arrows, stored as a bitmask."""

    __slots__ = ("owner", "mask")

    def __init__(self, owner: Groupoid, mask: int = 0):
        if mask >> owner.n_arrows:
            raise GroupoidError("arrow mask exceeds owner's arrow range")
        self.owner = owner
        self.mask = mask

    def __or__(self, other: "ArrowSet") -> "ArrowSet":
        _same_owner(self.owner, other.owner)
        return ArrowSet(self.owner, self.mask | other.mask)

    def __and__(self, other: "ArrowSet") -> "ArrowSet":
        _same_owner(self.owner, other.owner)
        return ArrowSet(self.owner, self.mask & other.mask)

    def __sub__(self, other: "ArrowSet") -> "ArrowSet":
        _same_owner(self.owner, other.owner)
        return ArrowSet(self.owner, self.mask & ~other.mask)

    def __le__(self, other: "ArrowSet") -> bool:
        _same_owner(self.owner, other.owner)
        return self.mask & ~other.mask == 0

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, ArrowSet)
            and self.owner is other.owner
            and self.mask == other.mask
        )

    def __hash__(self):
        return hash((id(self.owner), self.mask))

    def __contains__(self, a: int) -> bool:
        return bool(self.mask >> a & 1)

    def __iter__(self) -> Iterator[int]:
        return iter_bits(self.mask)

    def __len__(self) -> int:
        return self.mask.bit_count()

    def __bool__(self) -> bool:
        return self.mask != 0

    def inverse(self) -> "ArrowSet":
        inv = self.owner.inv
        return ArrowSet(self.owner, mask_of(inv[a] for a in self))

    def sources(self) -> "UnitSet":
        src = self.owner.src
        return UnitSet(self.owner, mask_of(src[a] for a in self))

    def ranges(self) -> "UnitSet":
        rng = self.owner.rng
        return UnitSet(self.owner, mask_of(rng[a] for a in self))

    def endpoint_units(self) -> "UnitSet":
        s = self.sources()
        return UnitSet(self.owner, s.mask | self.ranges().mask)

    def is_oc_normal(self) -> bool:
        """Symmetric, closed under endpoints and containing every unit."""
        if self.mask & self.owner.units_mask != self.owner.units_mask:
            return False
        return self.inverse().mask == self.mask

    def __repr__(self):
        ids = list(self)
        shown = ",".join(map(str, ids[:8])) + (",..." if len(ids) > 8 else "")
        return f"ArrowSet[{len(ids)}]{{{shown}}}"


class UnitSet:
    """An immutable subset of a groupoid's units, stored as a bitmask."""

    __slots__ = ("owner", "mask")

    def __init__(self, owner: Groupoid, mask: int = 0):
        if mask >> owner.n_units:
            raise GroupoidError("unit mask exceeds owner's unit range")
        self.owner = owner
        self.mask = mask

    def __or__(self, other: "UnitSet") -> "UnitSet":
        _same_owner(self.owner, other.owner)
        return UnitSet(self.owner, self.mask | other.mask)

    def __and__(self, other: "UnitSet") -> "UnitSet":
        _same_owner(self.owner, other.owner)
        return UnitSet(self.owner, self.mask & other.mask)

    def __sub__(self, other: "UnitSet") -> "UnitSet":
        _same_owner(self.owner, other.owner)
        return UnitSet(self.owner, self.mask & ~other.mask)

    def __le__(self, other: "UnitSet") -> bool:
        _same_owner(self.owner, other.owner)
        return self.mask & ~other.mask == 0

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, UnitSet)
            and self.owner is other.owner
            and self.mask == other.mask
        )

    def __hash__(self):
        return hash((id(self.owner), self.mask, "u"))

    def __contains__(self, u: int) -> bool:
        return bool(self.mask >> u & 1)

    def __iter__(self) -> Iterator[int]:
        return iter_bits(self.mask)

    def __len__(self) -> int:
        return self.mask.bit_count()

    def __bool__(self) -> bool:
        return self.mask != 0

    def identity_arrows(self) -> ArrowSet:
        # unit u and its identity arrow share the id u, so the mask carries over
        return ArrowSet(self.owner, self.mask)

    def __repr__(self):
        ids = list(self)
        shown = ",".join(map(str, ids[:8])) + (",..." if len(ids) > 8 else "")
        return f"UnitSet[{len(ids)}]{{{shown}}}"


# -- arrow-set algebra ----------------------------------------------------


def compose_sets(a: ArrowSet, b: ArrowSet) -> ArrowSet:
    """All defined products x*y with x in ``a`` and y in ``b``."""
    _same_owner(a.owner, b.owner)
    g = a.owner
    m = g.n_arrows
    comp = g.comp
    by_rng = g.by_rng
    src = g.src
    out = 0
    for x in iter_bits(a.mask):
        partners = by_rng[src[x]] & b.mask
        base = x * m
        for y in iter_bits(partners):
            out |= 1 << comp[base + y]
    return ArrowSet(g, out)


def symmetrize(k: ArrowSet) -> ArrowSet:
    """Smallest superset of ``k`` that is symmetric and contains all units."""
    g = k.owner
    return ArrowSet(g, k.mask | k.inverse().mask | g.units_mask)


def power(k: ArrowSet, n: int) -> ArrowSet:
    """n-fold set product of ``k``; the 0-th power is the unit set."""
    if n < 0:
        raise GroupoidError("power exponent must be nonnegative")
    g = k.owner
    acc = ArrowSet(g, g.units_mask)
    for _ in range(n):
        nxt = compose_sets(k, acc)
        if nxt.mask == acc.mask:
            break
        acc = nxt
    return acc


def arrows_within(g: Groupoid, units: UnitSet) -> ArrowSet:
    """Arrows with both endpoints inside ``units`` (the restriction G|_U as a set)."""
    _same_owner(g, units.owner)
    src_in = 0
    rng_in = 0
    for u in units:
        src_in |= g.by_src[u]
        rng_in |= g.by_rng[u]
    return ArrowSet(g, src_in & rng_in)


def generated(k: ArrowSet, units: UnitSet) -> ArrowSet:
    """Subgroupoid generated by the arrows of ``k`` with both endpoints in ``units``.

    Computed as the closure fixpoint of the seed set under inversion and
    all defined compositions.
    """
    _same_owner(k.owner, units.owner)
    g = k.owner
    m = g.n_arrows
    comp = g.comp
    src = g.src
    rng = g.rng
    inv = g.inv
    by_src = g.by_src
    by_rng = g.by_rng

    seed = (k & arrows_within(g, units)).mask
    els = 0
    queue = list(iter_bits(seed))
    for x in queue:
        els |= 1 << x
    idx = 0
    while idx < len(queue):
        x = queue[idx]
        idx += 1
        y = inv[x]
        if not els >> y & 1:
            els |= 1 << y
            queue.append(y)
        base = x * m
        for y in iter_bits(by_rng[src[x]] & els):
            c = comp[base + y]
            if not els >> c & 1:
                els |= 1 << c
                queue.append(c)
        for y in iter_bits(by_src[rng[x]] & els):
            c = comp[y * m + x]
            if not els >> c & 1:
                els |= 1 << c
                queue.append(c)
    return ArrowSet(g, els)


def restrict(g: Groupoid, units: UnitSet) -> Groupoid:
    """The restriction of ``g`` to ``units``: all arrows with both endpoints inside.

    Arrow and unit ids are re-indexed densely; the result keeps back-maps to
    the parent ids (``parent_arrows`` / ``parent_units``).
    """
    _same_owner(g, units.owner)
    kept_units = list(units)
    unit_rank = {u: i for i, u in enumerate(kept_units)}
    keep_mask = arrows_within(g, units).mask
    kept = list(iter_bits(keep_mask))
    arrow_rank = {a: i for i, a in enumerate(kept)}
    src = [unit_rank[g.src[a]] for a in kept]
    rng = [unit_rank[g.rng[a]] for a in kept]
    inv = [arrow_rank[g.inv[a]] for a in kept]
    m = g.n_arrows
    comp: dict[tuple[int, int], int] = {}
    for a in kept:
        partners = g.by_rng[g.src[a]] & keep_mask
        base = a * m
        ra = arrow_rank[a]
        for b in iter_bits(partners):
            comp[(ra, arrow_rank[b])] = arrow_rank[g.comp[base + b]]
    return Groupoid(
        len(kept_units),
        src,
        rng,
        inv,
        comp,
        parent=g,
        parent_arrows=tuple(kept),
        parent_units=tuple(kept_units),
    )


# -- orbits, principality, fundamental domains ----------------------------


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        p = self.parent
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return x

    def union(self, x: int, y: int) -> None:
        rx, ry = self.find(x), self.find(y)
        if rx != ry:
            if ry < rx:
                rx, ry = ry, rx
            self.parent[ry] = rx


def orbits(g: Groupoid) -> list[UnitSet]:
    """Partition of the units: u, v share a block iff some arrow joins them."""
    uf = _UnionFind(g.n_units)
    for a in range(g.n_units, g.n_arrows):
        uf.union(g.src[a], g.rng[a])
    blocks: dict[int, int] = {}
    for u in range(g.n_units):
        blocks.setdefault(uf.find(u), 0)
        blocks[uf.find(u)] |= 1 << u
    return [UnitSet(g, blocks[r]) for r in sorted(blocks)]


def is_principal(g: Groupoid) -> bool:
    """True iff the only arrows with equal endpoints are the identities."""
    if g._principal is None:
        g._principal = all(
            g.src[a] != g.rng[a] for a in range(g.n_units, g.n_arrows)
        )
    return g._principal


def fundamental_domain(g: Groupoid) -> UnitSet:
    """Minimum-id representative of each orbit; requires a principal groupoid."""
    if not is_principal(g):
        raise GroupoidError("fundamental domain requires a principal groupoid")
    out = 0
    for block in orbits(g):
        out |= 1 << next(iter(block))
    return UnitSet(g, out)


# -- axiom validation ------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    arrows: tuple[int, ...] = ()


class ValidationReport:
    """Axiom violations as data; empty iff the tables form a groupoid."""

    def __init__(self, violations: list[Violation]):
        self.violations = tuple(violations)

    @property
    def ok(self) -> bool:
        return not self.violations

    def codes(self) -> set[str]:
        return {v.code for v in self.violations}

    def __iter__(self):
        return iter(self.violations)

    def __len__(self):
        return len(self.violations)

    def __str__(self):
        if self.ok:
            return "ok"
        return "\n".join(f"{v.code}: {v.message}" for v in self.violations)


def validate(g: Groupoid) -> ValidationReport:
    """Check every groupoid axiom; violations are returned, never raised."""
    out: list[Violation] = []
    m = g.n_arrows
    n = g.n_units
    src, rng, inv, comp = g.src, g.rng, g.inv, g.comp

    for u in range(n):
        if src[u] != u or rng[u] != u:
            out.append(
                Violation(
                    "identity-endpoints",
                    f"identity arrow {u} has src={src[u]}, rng={rng[u]}",
                    (u,),
                )
            )

    for a in range(m):
        if inv[inv[a]] != a:
            out.append(
                Violation(
                    "inv-involution", f"inv(inv({a}))={inv[inv[a]]} != {a}", (a,)
                )
            )
        if src[inv[a]] != rng[a] or rng[inv[a]] != src[a]:
            out.append(
                Violation(
                    "inv-endpoints",
                    f"inv({a})={inv[a]} does not swap endpoints",
                    (a,),
                )
            )

    expected_pairs = sum(
        g.by_src[u].bit_count() * g.by_rng[u].bit_count() for u in range(n)
    )
    bad_keys = 0
    for key, c in comp.items():
        a, b = divmod(key, m)
        if src[a] != rng[b]:
            bad_keys += 1
            out.append(
                Violation(
                    "comp-domain",
                    f"comp({a},{b}) defined but src({a})={src[a]} != rng({b})={rng[b]}",
                    (a, b),
                )
            )
            continue
        if src[c] != src[b] or rng[c] != rng[a]:
            out.append(
                Violation(
                    "comp-endpoints",
                    f"comp({a},{b})={c} has wrong endpoints",
                    (a, b, c),
                )
            )
    if len(comp) - bad_keys != expected_pairs:
        out.append(
            Violation(
                "comp-domain",
                f"comp defined on {len(comp) - bad_keys} composable pairs, expected {expected_pairs}",
            )
        )

    for a in range(m):
        left = comp.get(rng[a] * m + a)
        right = comp.get(a * m + src[a])
        if left != a:
            out.append(
                Violation("identity-law", f"id_rng*{a} = {left}, expected {a}", (a,))
            )
        if right != a:
            out.append(
                Violation("identity-law", f"{a}*id_src = {right}, expected {a}", (a,))
            )
        if comp.get(a * m + inv[a]) != rng[a]:
            out.append(
                Violation(
                    "inverse-law",
                    f"{a}*inv({a}) is not the identity at rng({a})",
                    (a,),
                )
            )
        if comp.get(inv[a] * m + a) != src[a]:
            out.append(
                Violation(
                    "inverse-law",
                    f"inv({a})*{a} is not the identity at src({a})",
                    (a,),
                )
            )

    for key, c in comp.items():
        a, b = divmod(key, m)
        if src[a] != rng[b]:
            continue
        for d in iter_bits(g.by_rng[src[b]]):
            bd = comp.get(b * m + d)
            left = comp.get(c * m + d)
            right = None if bd is None else comp.get(a * m + bd)
            if left != right or left is None:
                out.append(
                    Violation(
                        "associativity",
                        f"({a}*{b})*{d} = {left} but {a}*({b}*{d}) = {right}",
                        (a, b, d),
                    )
                )
    return ValidationReport(out)
