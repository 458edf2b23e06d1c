"""The canonical coarse structure on arrows, (E,F)-decompositions, treeable
covers, and the two bridges between dad witnesses and coarse decompositions.

Points of the coarse spaces here are arrows of a groupoid; gauges relate two
arrows in the same range fiber when the quotient ``g^-1 h`` lies in a window
set.  Arrows in different fibers are never gauge-related.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from ._search import partition_search
from .covers import Cover
from .dad import DadWitness, kl_dad_check
from .groupoid import (
    ArrowSet,
    Groupoid,
    GroupoidError,
    UnitSet,
    _UnionFind,
    _same_owner,
    compose_sets,
    generated,
    is_principal,
    iter_bits,
    mask_of,
    restrict,
    symmetrize,
)


class CoarseError(GroupoidError):
    pass


EXACT_POINT_LIMIT = 24  # beyond this the auto search mode falls back to greedy


class Gauge:
    """A symmetric reflexive relation on points 0..n-1, one bitmask per point."""

    __slots__ = ("n", "rel")

    def __init__(self, n: int, rel: Sequence[int]):
        if len(rel) != n:
            raise CoarseError("gauge relation must list one mask per point")
        self.n = n
        self.rel = tuple(rel)
        for p, mask in enumerate(self.rel):
            if mask >> n:
                raise CoarseError(f"gauge mask of point {p} out of range")
            if not mask >> p & 1:
                raise CoarseError(f"gauge is not reflexive at point {p}")
        for p, mask in enumerate(self.rel):
            for q in iter_bits(mask):
                if not self.rel[q] >> p & 1:
                    raise CoarseError(f"gauge is not symmetric at ({p},{q})")

    @classmethod
    def diagonal(cls, n: int) -> "Gauge":
        return cls(n, [1 << p for p in range(n)])

    def related(self, p: int, q: int) -> bool:
        return bool(self.rel[p] >> q & 1)

    def __or__(self, other: "Gauge") -> "Gauge":
        if self.n != other.n:
            raise CoarseError("gauges live on different point sets")
        return Gauge(self.n, [a | b for a, b in zip(self.rel, other.rel)])

    def __le__(self, other: "Gauge") -> bool:
        if self.n != other.n:
            raise CoarseError("gauges live on different point sets")
        return all(a & ~b == 0 for a, b in zip(self.rel, other.rel))

    def __eq__(self, other) -> bool:
        return isinstance(other, Gauge) and self.n == other.n and self.rel == other.rel

    def __hash__(self):
        return hash((self.n, self.rel))

    def __repr__(self):
        pairs = sum(m.bit_count() for m in self.rel)
        return f"Gauge(n={self.n}, pairs={pairs})"


@dataclass
class CoarseSpace:
    """A finite point set (labels are arrow ids or abstract) with named gauges."""

    labels: tuple[int, ...]
    gauges: dict[str, Gauge] = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.labels)

    def add_gauge(self, name: str, gauge: Gauge) -> None:
        if gauge.n != self.n:
            raise CoarseError("gauge size does not match the point set")
        self.gauges[name] = gauge

    def index_of(self, label: int) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise CoarseError(f"label {label} not a point of this space") from None


def gauge_from(g: Groupoid, k_set: ArrowSet) -> Gauge:
    """Pairs of same-fiber arrows whose quotient lies in the window, plus the diagonal."""
    _same_owner(g, k_set.owner)
    if not k_set.is_oc_normal():
        raise CoarseError("gauge windows must be symmetric and contain every unit")
    m = g.n_arrows
    rel = [1 << p for p in range(m)]
    comp = g.comp
    for p in range(m):
        partners = g.by_rng[g.src[p]] & k_set.mask
        base = p * m
        acc = rel[p]
        for q in iter_bits(partners):
            acc |= 1 << comp[base + q]
        rel[p] = acc
    return Gauge(m, rel)


def arrow_space(g: Groupoid) -> CoarseSpace:
    return CoarseSpace(tuple(range(g.n_arrows)))


def fiber(g: Groupoid, x: int, gauge_sets: "dict[str, ArrowSet] | None" = None) -> CoarseSpace:
    """The range fiber at a unit as a coarse space; gauges restrict fiberwise."""
    if not 0 <= x < g.n_units:
        raise CoarseError(f"unit {x} out of range")
    labels = tuple(iter_bits(g.by_rng[x]))
    space = CoarseSpace(labels)
    for name, k_set in (gauge_sets or {}).items():
        space.add_gauge(name, fiber_gauge(g, labels, k_set))
    return space


def fiber_gauge(g: Groupoid, points: Sequence[int], k_set: ArrowSet) -> Gauge:
    """Gauge induced by a window on an explicit list of same-fiber arrows."""
    _same_owner(g, k_set.owner)
    index = {a: i for i, a in enumerate(points)}
    n = len(points)
    m = g.n_arrows
    rel = [1 << i for i in range(n)]
    for i, a in enumerate(points):
        partners = g.by_rng[g.src[a]] & k_set.mask
        base = a * m
        acc = rel[i]
        for q in iter_bits(partners):
            j = index.get(g.comp[base + q])
            if j is not None:
                acc |= 1 << j
        rel[i] = acc
    return Gauge(n, rel)


# -- (E,F)-asdim -----------------------------------------------------------


def _normalize_families(n: int, families) -> list[list[int]]:
    out = []
    for fam in families:
        members = []
        for member in fam:
            mask = member if isinstance(member, int) else mask_of(member)
            if mask >> n:
                raise CoarseError("family member exceeds the point range")
            if mask:
                members.append(mask)
        out.append(members)
    return out


def ef_asdim_check(e_gauge: Gauge, f_gauge: Gauge, families) -> bool:
    """Cover + F-bounded members + pairwise E-separated families."""
    if e_gauge.n != f_gauge.n:
        raise CoarseError("E and F live on different point sets")
    n = e_gauge.n
    fams = _normalize_families(n, families)
    covered = 0
    for members in fams:
        for mask in members:
            covered |= mask
            for p in iter_bits(mask):
                if mask & ~f_gauge.rel[p]:
                    return False
        for i, m1 in enumerate(members):
            for m2 in members[i + 1 :]:
                for p in iter_bits(m1):
                    if e_gauge.rel[p] & m2:
                        return False
    return covered == (1 << n) - 1


def ef_asdim_search(
    space: CoarseSpace,
    e_gauge: Gauge,
    f_gauge: Gauge,
    d_max: int,
    mode: "str | None" = None,
) -> "list[list[frozenset[int]]] | None":
    """Decompose the space into up to d_max+1 E-separated families of F-bounded members.

    Members are the E-components of each family, which is the finest (hence
    easiest to bound) choice; partitions suffice because dropping a point from
    a family never breaks separation or boundedness.  Exact mode is complete
    and returns the lexicographically least partition; greedy is first-fit.
    The auto mode picks exact up to 24 points.
    """
    if d_max < 0:
        raise CoarseError("d_max must be nonnegative")
    n = space.n
    if e_gauge.n != n or f_gauge.n != n:
        raise CoarseError("gauges do not match the space")
    if mode is None:
        mode = "exact" if n <= EXACT_POINT_LIMIT else "greedy"
    if mode not in ("exact", "greedy"):
        raise CoarseError(f"unknown search mode: {mode!r}")
    self_free = [e_gauge.rel[p] & ~(1 << p) for p in range(n)]
    ok = list(f_gauge.rel)
    for d in range(d_max + 1):
        states = partition_search(n, d + 1, self_free, ok, mode)
        if states is not None:
            families = [
                sorted((frozenset(iter_bits(cmask)) for cmask, _ in comps), key=min)
                for _, comps in states
            ]
            if not ef_asdim_check(e_gauge, f_gauge, families):
                raise CoarseError("search produced an invalid decomposition (internal error)")
            return families
    return None


# -- graphings and treeable covers ------------------------------------------


class Graphing:
    """A symmetric generating arrow set off the units, with word-length data.

    Treeability (unique reduced factorizations) holds exactly when the unit
    multigraph induced by the generator pairs is a forest; the check records
    the offending arrow otherwise.
    """

    def __init__(self, owner: Groupoid, q_set: ArrowSet):
        _same_owner(owner, q_set.owner)
        if q_set.mask & owner.units_mask:
            raise CoarseError("graphing must not contain unit arrows")
        if q_set.inverse() != q_set:
            raise CoarseError("graphing must be symmetric")
        self.owner = owner
        self.q = q_set
        self._balls: list[ArrowSet] = [ArrowSet(owner, owner.units_mask)]
        self.lengths = self._compute_lengths()
        self.treeable, self.failure = self._check_treeable()
        self._paths: dict[int, list[int]] = {}

    def _compute_lengths(self) -> tuple[int, ...]:
        g = self.owner
        lengths = [-1] * g.n_arrows
        level = 0
        current = self._balls[0]
        for a in iter_bits(current.mask):
            lengths[a] = 0
        step = symmetrize(self.q)
        while True:
            nxt = compose_sets(step, current)
            if nxt.mask == current.mask:
                break
            level += 1
            for a in iter_bits(nxt.mask & ~current.mask):
                lengths[a] = level
            current = nxt
            self._balls.append(current)
        if current.mask != g.arrows_mask:
            raise CoarseError("graphing does not generate the groupoid")
        return tuple(lengths)

    def _check_treeable(self):
        g = self.owner
        uf = _UnionFind(g.n_units)
        seen_edges = set()
        for a in iter_bits(self.q.mask):
            u, v = g.src[a], g.rng[a]
            if u == v:
                return False, f"generator {a} is a loop at unit {u}"
            edge = (min(u, v), max(u, v), min(a, g.inv[a]))
            if edge in seen_edges:
                continue
            if any(e[0] == edge[0] and e[1] == edge[1] for e in seen_edges):
                return False, f"parallel generators between units {edge[0]} and {edge[1]}"
            if uf.find(u) == uf.find(v):
                return False, f"generator {a} closes a cycle"
            uf.union(u, v)
            seen_edges.add(edge)
        return True, None

    def ball(self, r: int) -> ArrowSet:
        """All arrows of word length at most r."""
        if r < 0:
            raise CoarseError("ball radius must be nonnegative")
        idx = min(r, len(self._balls) - 1)
        return self._balls[idx]

    def length(self, a: int) -> int:
        return self.lengths[a]

    def _unit_adjacency(self) -> list[int]:
        g = self.owner
        adj = [0] * g.n_units
        for a in iter_bits(self.q.mask):
            adj[g.src[a]] |= 1 << g.rng[a]
            adj[g.rng[a]] |= 1 << g.src[a]
        return adj

    def path_vertex(self, a: int, t: int) -> int:
        """The t-th unit on the unique reduced path from rng(a) to src(a)."""
        if not self.treeable:
            raise CoarseError("paths require a treeable graphing")
        g = self.owner
        root = g.rng[a]
        parents = self._paths.get(root)
        if parents is None:
            adj = self._unit_adjacency()
            parents = [-1] * g.n_units
            parents[root] = root
            frontier = [root]
            while frontier:
                nxt = []
                for u in frontier:
                    for v in iter_bits(adj[u]):
                        if parents[v] == -1:
                            parents[v] = u
                            nxt.append(v)
                frontier = nxt
            self._paths[root] = parents
        path = [g.src[a]]
        while path[-1] != root:
            path.append(parents[path[-1]])
        path.reverse()
        if not 0 <= t < len(path):
            raise CoarseError(f"path position {t} out of range for arrow {a}")
        return path[t]


@dataclass(frozen=True)
class TreeCoverResult:
    """Even/odd annuli decomposition with its brute-force certificate.

    Rows carry (family, class id, annulus, fiber, size, diameter) per class.
    """

    families: tuple[tuple[frozenset[int], ...], ...]
    rows: tuple[tuple[int, int, int, int, int, int], ...]
    max_diameter: int
    min_separation: int
    min_same_annulus_separation: int
    scale: int
    certified: bool


def treeable_cover(g: Groupoid, graphing: Graphing, n_scale: int) -> TreeCoverResult:
    """Split annuli of width N into same-past classes; certify bounds exactly.

    Classes are fiberwise.  The certificate checks, by exhaustive pairwise
    word-length computation: every class has diameter <= 4N, distinct classes
    in one family are at distance >= N (so the families are
    gauge(ball(N-1))-separated), and distinct classes inside one annulus are
    at distance >= 2N.  The decomposition is also re-checked with
    ``ef_asdim_check`` at E = gauge(ball(N-1)), F = gauge(ball(4N)).
    """
    if graphing.owner is not g:
        raise CoarseError("graphing belongs to a different groupoid")
    if not graphing.treeable:
        raise CoarseError(f"graphing is not treeable: {graphing.failure}")
    if n_scale < 1:
        raise CoarseError("annulus width must be positive")
    n = n_scale
    classes: dict[tuple, list[int]] = {}
    for a in range(g.n_arrows):
        length = graphing.length(a)
        ks = {length // n}
        if length % n == 0 and length > 0:
            ks.add(length // n - 1)
        for k in ks:
            if k >= 2:
                key = (k, g.rng[a], graphing.path_vertex(a, n * (k - 1)))
            else:
                key = (k, g.rng[a], -1)
            classes.setdefault(key, []).append(a)

    family_members: list[list[frozenset[int]]] = [[], []]
    keys = sorted(classes)
    for key in keys:
        family_members[key[0] % 2].append(frozenset(classes[key]))

    # exhaustive pairwise certificate
    def dist(a: int, b: int) -> "int | None":
        if g.rng[a] != g.rng[b]:
            return None
        return graphing.length(g.compose(g.inv[a], b))

    max_diameter = 0
    diameters: dict[tuple, int] = {}
    for key, members in classes.items():
        diam = 0
        for i, a in enumerate(members):
            for b in members[i + 1 :]:
                d = dist(a, b)
                if d is None:
                    raise CoarseError("class spans two fibers (internal error)")
                diam = max(diam, d)
        diameters[key] = diam
        max_diameter = max(max_diameter, diam)

    min_separation = None
    min_same_annulus = None
    for i, k1 in enumerate(keys):
        for k2 in keys[i + 1 :]:
            if k1[0] % 2 != k2[0] % 2 or k1[1] != k2[1]:
                continue
            best = None
            for a in classes[k1]:
                for b in classes[k2]:
                    d = dist(a, b)
                    if d is not None and (best is None or d < best):
                        best = d
            if best is None:
                continue
            if min_separation is None or best < min_separation:
                min_separation = best
            if k1[0] == k2[0] and (min_same_annulus is None or best < min_same_annulus):
                min_same_annulus = best

    e_gauge = gauge_from(g, graphing.ball(n - 1))
    f_gauge = gauge_from(g, graphing.ball(4 * n))
    certified = (
        max_diameter <= 4 * n
        and (min_separation is None or min_separation >= n)
        and (min_same_annulus is None or min_same_annulus >= 2 * n)
        and ef_asdim_check(e_gauge, f_gauge, family_members)
    )

    rows = []
    for idx, key in enumerate(keys):
        members = classes[key]
        rows.append((key[0] % 2, idx, key[0], key[1], len(members), diameters[key]))
    return TreeCoverResult(
        families=tuple(tuple(f) for f in family_members),
        rows=tuple(rows),
        max_diameter=max_diameter,
        min_separation=min_separation if min_separation is not None else -1,
        min_same_annulus_separation=(
            min_same_annulus if min_same_annulus is not None else -1
        ),
        scale=n,
        certified=certified,
    )


# -- dad -> asdim -----------------------------------------------------------


@dataclass(frozen=True)
class AsdimBridge:
    """Decomposition of the arrow space induced by a dad witness."""

    families: tuple[tuple[frozenset[int], ...], ...]
    e_window: ArrowSet
    f_window: ArrowSet
    e_gauge: Gauge
    f_gauge: Gauge
    certified: bool


def dad_to_asdim(g: Groupoid, witness: DadWitness) -> AsdimBridge:
    """Turn a certified witness into an (E,F)-decomposition of the arrow space.

    Family i collects, fiber by fiber, the classes of the relation
    "same range and quotient inside the generated subgroupoid H_i" on the
    arrows with source in class i.  E is the gauge of the witness window, F
    the gauge of the symmetrized union of the H_i; the result is re-verified.
    """
    _same_owner(g, witness.owner)
    if not witness.certified:
        raise CoarseError("bridge requires a certified witness")

    f_union = g.arrow_set()
    for gen in witness.generated_per_class:
        f_union = f_union | gen
    f_window = symmetrize(f_union)

    families = []
    for cls, h_i in zip(witness.cover.classes, witness.generated_per_class):
        members: list[frozenset[int]] = []
        src_mask = 0
        for u in cls:
            src_mask |= g.by_src[u]
        for x in range(g.n_units):
            pts = list(iter_bits(g.by_rng[x] & src_mask))
            blocks: list[list[int]] = []
            for a in pts:
                placed = False
                for block in blocks:
                    if g.compose(g.inv[block[0]], a) in h_i:
                        block.append(a)
                        placed = True
                        break
                if not placed:
                    blocks.append([a])
            # re-check that the relation is a genuine equivalence on these points
            for i, b1 in enumerate(blocks):
                for a in b1:
                    for b in b1:
                        if g.compose(g.inv[a], b) not in h_i:
                            raise CoarseError(
                                "relation is not transitive; generated class is not a subgroupoid"
                            )
                for b2 in blocks[i + 1 :]:
                    for a in b1:
                        for b in b2:
                            if g.compose(g.inv[a], b) in h_i:
                                raise CoarseError(
                                    "relation is not transitive; generated class is not a subgroupoid"
                                )
            members.extend(frozenset(b) for b in blocks)
        families.append(tuple(members))

    e_gauge = gauge_from(g, witness.K)
    f_gauge = gauge_from(g, f_window)
    certified = ef_asdim_check(e_gauge, f_gauge, families)
    return AsdimBridge(
        families=tuple(families),
        e_window=witness.K,
        f_window=f_window,
        e_gauge=e_gauge,
        f_gauge=f_gauge,
        certified=certified,
    )


# -- asdim -> dad -----------------------------------------------------------


def _orbit_minima(g: Groupoid, h_arrows: ArrowSet, y: UnitSet) -> list[int]:
    uf = _UnionFind(g.n_units)
    for a in h_arrows:
        uf.union(g.src[a], g.rng[a])
    minima: dict[int, int] = {}
    for u in y:
        root = uf.find(u)
        if root not in minima:
            minima[root] = u
    return sorted(minima.values())


def asdim_fiber_decompositions(
    g: Groupoid,
    y: UnitSet,
    k_set: ArrowSet,
    l_set: ArrowSet,
    d_max: int,
    mode: "str | None" = None,
    workers: "int | None" = None,
) -> dict[int, list[list[frozenset[int]]]]:
    """(E,F)-decompose each fundamental-domain fiber of the Y-confined subgroupoid.

    E and F are the fiber gauges of the window and the bound; the returned
    members carry absolute arrow ids.  Fibers are independent; with
    ``workers`` they are solved in a thread pool and merged by unit id.
    """
    h_arrows = generated(k_set, y)
    xs = _orbit_minima(g, h_arrows, y)

    def solve(x: int) -> tuple[int, list[list[frozenset[int]]]]:
        points = [a for a in iter_bits(g.by_rng[x]) if a in h_arrows]
        e_gauge = fiber_gauge(g, points, k_set)
        f_gauge = fiber_gauge(g, points, l_set)
        space = CoarseSpace(tuple(points))
        fams = ef_asdim_search(space, e_gauge, f_gauge, d_max, mode)
        if fams is None:
            raise CoarseError(f"fiber at unit {x} admits no decomposition at d_max={d_max}")
        absolute = [
            [frozenset(points[i] for i in member) for member in fam] for fam in fams
        ]
        return x, absolute

    if workers and workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = dict(pool.map(solve, xs))
    else:
        results = dict(solve(x) for x in xs)
    return {x: results[x] for x in sorted(results)}


def asdim_to_dad(
    g: Groupoid,
    y: UnitSet,
    k_set: ArrowSet,
    l_set: ArrowSet,
    fiber_families: "dict[int, list[list[Iterable[int]]]]",
) -> DadWitness:
    """Rebuild a dad witness on the restriction to Y from fiberwise decompositions.

    For each fundamental-domain unit x of the subgroupoid generated by the
    window over Y, the supplied families must partition the H-fiber at x into
    window-separated blocks whose quotients stay inside the bound.  Class i
    collects the sources of the family-i arrows; the witness is re-certified
    on ``restrict(g, y)``.  Requires a principal groupoid.
    """
    if not is_principal(g):
        raise CoarseError("the reconstruction requires a principal groupoid")
    _same_owner(g, y.owner)
    h_arrows = generated(k_set, y)
    xs = _orbit_minima(g, h_arrows, y)

    n_classes = 0
    checked: dict[int, list[list[int]]] = {}
    for x in xs:
        fams = fiber_families.get(x)
        if fams is None:
            raise CoarseError(f"missing fiber decomposition at unit {x}")
        fiber_pts = mask_of(a for a in iter_bits(g.by_rng[x]) if a in h_arrows)
        masks = [[mask_of(member) for member in fam] for fam in fams]
        total = 0
        for i, fam in enumerate(masks):
            for j, member in enumerate(fam):
                if member & ~fiber_pts:
                    raise CoarseError(
                        f"fiber {x}, family {i}, block {j} leaves the H-fiber"
                    )
                if member & total:
                    raise CoarseError(f"fiber {x} blocks overlap at family {i}")
                total |= member
                for a in iter_bits(member):
                    for b in iter_bits(member):
                        if g.compose(g.inv[a], b) not in l_set:
                            raise CoarseError(
                                f"fiber {x}, family {i}, block {j}: quotient of "
                                f"arrows {a},{b} escapes the bound"
                            )
            for j1, m1 in enumerate(fam):
                for j2 in range(j1 + 1, len(fam)):
                    for a in iter_bits(m1):
                        for b in iter_bits(fam[j2]):
                            if g.compose(g.inv[a], b) in k_set:
                                raise CoarseError(
                                    f"fiber {x}, family {i}: blocks {j1},{j2} are "
                                    "not window-separated"
                                )
        if total != fiber_pts:
            raise CoarseError(f"fiber {x} blocks do not partition the H-fiber")
        checked[x] = masks
        n_classes = max(n_classes, len(masks))

    class_units = [0] * n_classes
    for x in xs:
        for i, fam in enumerate(checked[x]):
            for member in fam:
                for a in iter_bits(member):
                    class_units[i] |= 1 << g.src[a]

    covered = 0
    for mask in class_units:
        covered |= mask
    if covered != y.mask:
        raise CoarseError("class sources do not cover Y (invalid fiber data)")

    gy = restrict(g, y)
    k_local = gy.from_parent_arrows(k_set)
    l_local = gy.from_parent_arrows(l_set)
    classes = tuple(
        gy.from_parent_units(UnitSet(g, mask)) for mask in class_units
    )
    witness = kl_dad_check(gy, k_local, l_local, Cover(gy, classes, gy.all_units()))
    if not witness.certified:
        _explain_reconstruction_failure(g, gy, witness, h_arrows, xs, checked, k_set, l_set)
    return witness


def _explain_reconstruction_failure(g, gy, witness, h_arrows, xs, checked, k_set, l_set):
    for i, gen in enumerate(witness.generated_per_class):
        escape = gen - witness.L
        for a_local in escape:
            a = gy.parent_arrows[a_local]
            u, v = g.src[a], g.rng[a]
            h = next(
                (b for b in iter_bits(g.by_src[u] & h_arrows.mask) if g.rng[b] in xs),
                None,
            )
            hp = next(
                (b for b in iter_bits(g.by_src[v] & h_arrows.mask) if g.rng[b] in xs),
                None,
            )
            raise CoarseError(
                f"class {i}: arrow {a} = inv(h')h escapes the bound; the witnesses "
                f"h={h}, h'={hp} of its endpoints lie in different blocks"
            )
    raise CoarseError("reconstruction failed: classes do not cover the window endpoints")
