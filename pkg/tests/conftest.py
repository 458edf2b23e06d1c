"""Shared instance generators and brute-force oracles for the test suite.

The oracles here are deliberately dumb: word enumeration by repeated set
products, and exhaustive enumeration of color assignments.  They are the
reference against which the engine's closures and searches are judged.
"""

from __future__ import annotations

import random
from itertools import product as iproduct

from grpdim import (
    ArrowSet,
    Cover,
    Groupoid,
    UnitSet,
    arrows_within,
    compose_sets,
    kl_dad_check,
    symmetrize,
)


# -- generators --------------------------------------------------------------


def disjoint_union(components: list[Groupoid]) -> Groupoid:
    """Disjoint union; unit and non-identity arrow ids are concatenated in order."""
    n = sum(c.n_units for c in components)
    unit_off = []
    arrow_maps = []
    acc = 0
    for c in components:
        unit_off.append(acc)
        acc += c.n_units
    src = list(range(n))
    rng = list(range(n))
    inv = list(range(n))
    nxt = n
    for c, off in zip(components, unit_off):
        amap = {}
        for a in range(c.n_units):
            amap[a] = off + c.src[a]
        for a in range(c.n_units, c.n_arrows):
            amap[a] = nxt
            nxt += 1
            src.append(off + c.src[a])
            rng.append(off + c.rng[a])
            inv.append(0)
        arrow_maps.append(amap)
    for c, amap in zip(components, arrow_maps):
        for a in range(c.n_units, c.n_arrows):
            inv[amap[a]] = amap[c.inv[a]]
    comp = {}
    for c, amap in zip(components, arrow_maps):
        m = c.n_arrows
        for key, val in c.comp.items():
            a, b = divmod(key, m)
            comp[(amap[a], amap[b])] = amap[val]
    return Groupoid(n, src, rng, inv, comp)


def pair_blocks_groupoid(blocks: list[list[int]], n_units: int, shuffle_rng=None) -> Groupoid:
    """Equivalence-relation groupoid with the given blocks on 0..n_units-1."""
    pairs = []
    for block in blocks:
        for i in block:
            for j in block:
                if i != j:
                    pairs.append((i, j))
    if shuffle_rng is not None:
        shuffle_rng.shuffle(pairs)
    index = {(i, i): i for i in range(n_units)}
    for idx, p in enumerate(pairs):
        index[p] = n_units + idx
    m = n_units + len(pairs)
    src = [0] * m
    rng = [0] * m
    inv = [0] * m
    for (i, j), a in index.items():
        src[a] = j
        rng[a] = i
        inv[a] = index[(j, i)]
    comp = {}
    for (i, j), a in index.items():
        for k in range(n_units):
            if (j, k) in index and (i, k) in index:
                comp[(a, index[(j, k)])] = index[(i, k)]
    return Groupoid(n_units, src, rng, inv, comp)


def random_principal_groupoid(rng: random.Random, target_arrows: int = 40) -> Groupoid:
    """Random disjoint union of pair blocks with about target_arrows arrows."""
    blocks = []
    units = 0
    arrows = 0
    while arrows < target_arrows - 4:
        size = rng.randint(1, 5)
        blocks.append(list(range(units, units + size)))
        units += size
        arrows += size * size
    return pair_blocks_groupoid(blocks, units, shuffle_rng=rng)


def random_groupoid(rng: random.Random, max_arrows: int = 200) -> Groupoid:
    """Random mix of pair blocks and cyclic isotropy components."""
    from grpdim import action_groupoid, cyclic_table, rotation_perms, trivial_perms

    comps = []
    arrows = 0
    while arrows < max_arrows - 30:
        kind = rng.random()
        if kind < 0.5:
            size = rng.randint(1, 5)
            comps.append(pair_blocks_groupoid([list(range(size))], size))
            arrows += size * size
        elif kind < 0.8:
            k = rng.randint(2, 4)
            comps.append(action_groupoid(cyclic_table(k), rotation_perms(k, k)))
            arrows += k * k
        else:
            k = rng.randint(2, 4)
            comps.append(action_groupoid(cyclic_table(k), trivial_perms(k, 1)))
            arrows += k
    return disjoint_union(comps)


def random_arrow_set(rng: random.Random, g: Groupoid, density: float = 0.3) -> ArrowSet:
    mask = 0
    for a in range(g.n_arrows):
        if rng.random() < density:
            mask |= 1 << a
    return symmetrize(ArrowSet(g, mask))


def random_unit_set(rng: random.Random, g: Groupoid, density: float = 0.5) -> UnitSet:
    mask = 0
    for u in range(g.n_units):
        if rng.random() < density:
            mask |= 1 << u
    return UnitSet(g, mask)


# -- oracles -----------------------------------------------------------------


def oracle_generated(g: Groupoid, k_set: ArrowSet, units: UnitSet) -> ArrowSet:
    """Word enumeration: all products of seed arrows and their inverses."""
    seed = k_set & arrows_within(g, units)
    seed = seed | seed.inverse()
    acc = seed
    while True:
        products = compose_sets(acc, seed)
        if products <= acc:
            return acc
        acc = acc | products


def brute_dad_search(g: Groupoid, k_set: ArrowSet, l_set: ArrowSet, d_max: int):
    """Exhaustive search over unit -> nonempty color subset assignments.

    Returns (d, cover) for the least d with a certified assignment, taking the
    lexicographically least assignment (per-unit subset masks in increasing
    order); None if every assignment fails up to d_max.
    """
    n = g.n_units
    for d in range(d_max + 1):
        subsets = list(range(1, 1 << (d + 1)))
        for assign in iproduct(subsets, repeat=n):
            masks = [0] * (d + 1)
            for u, chosen in enumerate(assign):
                for c in range(d + 1):
                    if chosen >> c & 1:
                        masks[c] |= 1 << u
            cover = Cover(g, tuple(UnitSet(g, m) for m in masks), g.all_units())
            witness = kl_dad_check(g, k_set, l_set, cover)
            if witness.certified:
                return d, cover
    return None


def brute_ef_exists(e_gauge, f_gauge, n_points: int, d_max: int) -> bool:
    """Exhaustive feasibility of a d_max decomposition over family partitions."""
    for d in range(d_max + 1):
        for assign in iproduct(range(d + 1), repeat=n_points):
            ok = True
            for fam in range(d + 1):
                pts = [p for p in range(n_points) if assign[p] == fam]
                remaining = set(pts)
                while remaining and ok:
                    comp = {remaining.pop()}
                    frontier = set(comp)
                    while frontier:
                        nxt = set()
                        for p in frontier:
                            for q in list(remaining):
                                if e_gauge.related(p, q):
                                    nxt.add(q)
                                    remaining.discard(q)
                        comp |= nxt
                        frontier = nxt
                    for p in comp:
                        for q in comp:
                            if not f_gauge.related(p, q):
                                ok = False
                if not ok:
                    break
            if ok:
                return True
    return False
