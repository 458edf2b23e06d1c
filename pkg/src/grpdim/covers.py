"""n-fold covers of the unit space and the control-function calculus.

A cover is an ordered family of unit sets together with the base set it is
required to cover.  Control functions map windows to containment bounds and
are the driver for the fold-increasing lift in :func:`ostrand_lift`.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Callable

from .groupoid import (
    ArrowSet,
    Groupoid,
    GroupoidError,
    UnitSet,
    _same_owner,
    compose_sets,
    generated,
    iter_bits,
    mask_of,
    power,
)


class CoverError(GroupoidError):
    pass


MAX_LIFT_LEVEL = 12  # residual-class subset enumeration is binomial in the level


@dataclass(frozen=True)
class Cover:
    """Ordered classes ``U_0..U_k`` over ``base``, all owned by one groupoid."""

    owner: Groupoid
    classes: tuple[UnitSet, ...]
    base: UnitSet

    def __post_init__(self):
        _same_owner(self.owner, self.base.owner)
        for c in self.classes:
            _same_owner(self.owner, c.owner)

    @property
    def k(self) -> int:
        return len(self.classes) - 1

    def union_mask(self) -> int:
        out = 0
        for c in self.classes:
            out |= c.mask
        return out

    def to_json_obj(self) -> dict:
        return {
            "base": sorted(self.base),
            "classes": [sorted(c) for c in self.classes],
        }

    @staticmethod
    def from_json_obj(g: Groupoid, obj: dict) -> "Cover":
        classes = tuple(g.unit_set(ids) for ids in obj["classes"])
        return Cover(g, classes, g.unit_set(obj["base"]))


def fold_number(cover: Cover) -> int:
    """Minimum multiplicity of the classes over base points; 0 if uncovered.

    An empty base is vacuously covered with the maximal fold, the number of
    classes.
    """
    if not cover.base:
        return len(cover.classes)
    best = None
    for x in cover.base:
        count = sum(1 for c in cover.classes if x in c)
        if count == 0:
            return 0
        if best is None or count < best:
            best = count
    return best


def check_nfold_subfamilies(cover: Cover, n: int) -> bool:
    """Subfamily criterion: every (k+2-n)-subset of the classes covers base."""
    k = cover.k
    if n > k + 1:
        raise CoverError(f"n={n} exceeds the number of classes {k + 1}")
    size = k + 2 - n
    masks = [c.mask for c in cover.classes]
    base = cover.base.mask
    for sub in combinations(masks, size):
        u = 0
        for m in sub:
            u |= m
        if base & ~u:
            return False
    return True


def shrink_nfold(cover: Cover, n: int) -> Cover:
    """Greedy pruning: drop points while every base point stays in >= n classes.

    Units are scanned in increasing id; memberships are dropped from the
    highest class index first, so each point keeps its lowest classes.
    """
    if fold_number(cover) < n:
        raise CoverError(f"cover is not {n}-fold")
    masks = [c.mask for c in cover.classes]
    for x in cover.base:
        bit = 1 << x
        count = sum(1 for m in masks if m & bit)
        for i in range(len(masks) - 1, -1, -1):
            if count <= n:
                break
            if masks[i] & bit:
                masks[i] &= ~bit
                count -= 1
    # points outside the base contribute nothing to the fold number
    keep = cover.base.mask
    masks = [m & keep for m in masks]
    g = cover.owner
    return Cover(g, tuple(UnitSet(g, m) for m in masks), cover.base)


class ControlFunction:
    """Window-to-bound map with witness covers, memoized per window.

    ``provider(K)`` returns a pair ``(bound, cover)`` where the ``d+1``-class
    ``cover`` of the unit space satisfies ``generated(K, U_i) <= bound`` for
    every class.  Bounds must be symmetric-with-units supersets of ``K``.
    """

    def __init__(self, d: int, provider: Callable[[ArrowSet], tuple[ArrowSet, Cover]], label: str = ""):
        if d < 0:
            raise CoverError("dimension parameter must be nonnegative")
        self.d = d
        self.label = label
        self._provider = provider
        self._memo: dict[int, tuple[ArrowSet, Cover]] = {}
        self._apply_memo: dict[tuple[int, int], ArrowSet] = {}

    def _entry(self, k_set: ArrowSet) -> tuple[ArrowSet, Cover]:
        key = k_set.mask
        hit = self._memo.get(key)
        if hit is None:
            bound, cover = self._provider(k_set)
            if not bound.is_oc_normal():
                raise CoverError("control bound is not symmetric with units")
            if not k_set <= bound:
                raise CoverError("control bound does not contain its window")
            if len(cover.classes) != self.d + 1:
                raise CoverError(
                    f"control cover has {len(cover.classes)} classes, expected {self.d + 1}"
                )
            hit = (bound, cover)
            self._memo[key] = hit
        return hit

    def bound(self, k_set: ArrowSet) -> ArrowSet:
        return self._entry(k_set)[0]

    def cover_for(self, k_set: ArrowSet) -> Cover:
        return self._entry(k_set)[1]

    def __repr__(self):
        return f"ControlFunction(d={self.d}{', ' + self.label if self.label else ''})"


def control_apply(ctrl: ControlFunction, k_set: ArrowSet, k: int) -> ArrowSet:
    """Iterated bound: level d is the base bound, each level wraps K . (K^3) . K."""
    if k < ctrl.d:
        raise CoverError(f"level {k} below base dimension {ctrl.d}")
    if k == ctrl.d:
        return ctrl.bound(k_set)
    key = (k_set.mask, k)
    hit = ctrl._apply_memo.get(key)
    if hit is None:
        inner = control_apply(ctrl, power(k_set, 3), k - 1)
        hit = compose_sets(k_set, compose_sets(inner, k_set))
        ctrl._apply_memo[key] = hit
    return hit


def saturate(k_set: ArrowSet, units: UnitSet) -> UnitSet:
    """The K-orbit of a unit set: ranges of K-arrows with source inside it."""
    _same_owner(k_set.owner, units.owner)
    g = k_set.owner
    reach = 0
    for u in units:
        reach |= g.by_src[u] & k_set.mask
    return UnitSet(g, mask_of(g.rng[a] for a in iter_bits(reach)))


def _level_cover(g: Groupoid, ctrl: ControlFunction, k_set: ArrowSet, k: int) -> Cover:
    if k == ctrl.d:
        return ctrl.cover_for(k_set)
    return ostrand_lift(g, ctrl, k_set, k - 1)


def _verify_level(g: Groupoid, ctrl: ControlFunction, k_set: ArrowSet, k: int, cover: Cover) -> None:
    if fold_number(cover) < k + 1 - ctrl.d:
        raise CoverError(
            f"level-{k} cover is not {k + 1 - ctrl.d}-fold (fold={fold_number(cover)})"
        )
    bound = control_apply(ctrl, k_set, k)
    for i, cls in enumerate(cover.classes):
        if not generated(k_set, cls) <= bound:
            raise CoverError(f"level-{k} class {i} generates outside the control bound")


def ostrand_lift(g: Groupoid, ctrl: ControlFunction, k_set: ArrowSet, k: int) -> Cover:
    """Lift a level-k cover family to level k+1, gaining one fold.

    The level-k cover for the cubed window is shrunk, saturated by the window,
    and completed by a residual class assembled from all subsets of size
    ``k+1-d``.  The returned ``k+2``-class cover is ``(k+2-d)``-fold and every
    class generates inside ``control_apply(ctrl, k_set, k+1)``; both facts are
    re-verified before returning.
    """
    if k < ctrl.d:
        raise CoverError(f"lift level {k} below base dimension {ctrl.d}")
    if k > MAX_LIFT_LEVEL:
        raise CoverError(f"lift level {k} exceeds cap {MAX_LIFT_LEVEL}")
    if not k_set.is_oc_normal():
        raise CoverError("window must be symmetric with units")
    d = ctrl.d
    cubed = power(k_set, 3)
    level = _level_cover(g, ctrl, cubed, k)
    _verify_level(g, ctrl, cubed, k, level)

    shrunk = shrink_nfold(level, k + 1 - d)
    saturated = [saturate(k_set, v) for v in shrunk.classes]

    # residual class: points deep inside every V_j for some index set S while
    # clear of the saturations of the complementary classes
    residual = 0
    idx = range(k + 1)
    for subset in combinations(idx, k + 1 - d):
        inside = g.units_mask
        for j in subset:
            inside &= shrunk.classes[j].mask
        if not inside:
            continue
        chosen = set(subset)
        for i in idx:
            if i not in chosen:
                inside &= ~saturated[i].mask
        residual |= inside

    classes = tuple(saturated) + (UnitSet(g, residual),)
    lifted = Cover(g, classes, g.all_units())

    new_fold = fold_number(lifted)
    if new_fold < k + 2 - d:
        raise CoverError(f"lifted cover is only {new_fold}-fold, expected {k + 2 - d}")
    bound = control_apply(ctrl, k_set, k + 1)
    for i, cls in enumerate(lifted.classes):
        if not generated(k_set, cls) <= bound:
            raise CoverError(f"lifted class {i} generates outside the level-{k + 1} bound")
    return lifted
