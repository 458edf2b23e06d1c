"""(K,L)-dad witnesses: checking, exact and greedy search, witness transfer.

A witness certifies that a cover of the unit space confines every generated
subgroupoid of the window ``K`` inside the bound ``L``.  All transfer
operations (gluing, union, product, pullback, blow-up) re-verify their
hypotheses and re-certify their outputs from scratch; certificates are
computed, never trusted.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from ._search import partition_search
from .covers import ControlFunction, Cover, CoverError, fold_number
from .groupoid import (
    ArrowSet,
    Groupoid,
    GroupoidError,
    UnitSet,
    _same_owner,
    compose_sets,
    generated,
    is_principal,
    iter_bits,
    mask_of,
    power,
    symmetrize,
)


class WitnessError(GroupoidError):
    """Ill-posed witness request (owners, normality, base mismatch)."""


class HypothesisError(GroupoidError):
    """A transfer operation's preconditions failed re-verification."""


@dataclass(frozen=True)
class DadWitness:
    """A cover with its per-class generated subgroupoids and the verdict."""

    cover: Cover
    K: ArrowSet
    L: ArrowSet
    generated_per_class: tuple[ArrowSet, ...]
    certified: bool

    @property
    def d(self) -> int:
        return len(self.cover.classes) - 1

    @property
    def owner(self) -> Groupoid:
        return self.cover.owner

    def to_json_obj(self) -> dict:
        return {
            "format": "dad-witness",
            "version": 1,
            "d": self.d,
            "k": sorted(self.K),
            "l": sorted(self.L),
            "cover": self.cover.to_json_obj(),
            "generated_sizes": [len(s) for s in self.generated_per_class],
            "certified": self.certified,
        }

    @staticmethod
    def from_json_obj(g: Groupoid, obj: dict) -> "DadWitness":
        cover = Cover.from_json_obj(g, obj["cover"])
        return kl_dad_check(g, g.arrow_set(obj["k"]), g.arrow_set(obj["l"]), cover)


def _require_oc(name: str, aset: ArrowSet) -> None:
    if not aset.is_oc_normal():
        raise WitnessError(f"{name} must be symmetric and contain every unit")


def kl_dad_check(g: Groupoid, k_set: ArrowSet, l_set: ArrowSet, cover: Cover) -> DadWitness:
    """Certify a cover: every class must generate inside the bound.

    The witness is certified iff the classes cover the base and each
    ``generated(K, U_i)`` lies inside ``L``.
    """
    _same_owner(g, k_set.owner)
    _same_owner(g, l_set.owner)
    _same_owner(g, cover.owner)
    _require_oc("K", k_set)
    _require_oc("L", l_set)
    needed = k_set.endpoint_units()
    if not needed <= cover.base:
        raise WitnessError("cover base does not contain s(K) | r(K)")
    gens = tuple(generated(k_set, cls) for cls in cover.classes)
    covered = cover.base.mask & ~cover.union_mask() == 0
    certified = covered and all(gen <= l_set for gen in gens)
    return DadWitness(cover, k_set, l_set, gens, certified)


# -- search ---------------------------------------------------------------


def _principal_tables(g: Groupoid, k_set: ArrowSet, l_set: ArrowSet):
    n = g.n_units
    adj = [0] * n
    for a in iter_bits(k_set.mask):
        if a < n:
            continue
        adj[g.src[a]] |= 1 << g.rng[a]
        adj[g.rng[a]] |= 1 << g.src[a]
    ok = [0] * n
    for a in iter_bits(l_set.mask):
        ok[g.src[a]] |= 1 << g.rng[a]
    return adj, ok


def _generic_try_add(g, k_mask, l_mask, state, u):
    units, srcm, rngm, closure = state
    units2 = units | 1 << u
    srcm2 = srcm | g.by_src[u]
    rngm2 = rngm | g.by_rng[u]
    seeds = k_mask & ((g.by_src[u] & rngm2) | (g.by_rng[u] & srcm2)) & ~closure
    if seeds & ~l_mask:
        return None
    m = g.n_arrows
    comp = g.comp
    src = g.src
    rng = g.rng
    inv = g.inv
    by_src = g.by_src
    by_rng = g.by_rng
    els = closure | seeds
    queue = list(iter_bits(seeds))
    idx = 0
    while idx < len(queue):
        x = queue[idx]
        idx += 1
        y = inv[x]
        if not els >> y & 1:
            if not l_mask >> y & 1:
                return None
            els |= 1 << y
            queue.append(y)
        base = x * m
        for y in iter_bits(by_rng[src[x]] & els):
            c = comp[base + y]
            if not els >> c & 1:
                if not l_mask >> c & 1:
                    return None
                els |= 1 << c
                queue.append(c)
        for y in iter_bits(by_src[rng[x]] & els):
            c = comp[y * m + x]
            if not els >> c & 1:
                if not l_mask >> c & 1:
                    return None
                els |= 1 << c
                queue.append(c)
    return (units2, srcm2, rngm2, els)


def _generic_search(g: Groupoid, k_set: ArrowSet, l_set: ArrowSet, d: int, mode: str):
    """Closure-tracking partition search for arbitrary (possibly non-principal) groupoids."""
    n = g.n_units
    k_mask, l_mask = k_set.mask, l_set.mask
    empty = (0, 0, 0, 0)

    if mode == "greedy":
        states = [empty] * (d + 1)
        for u in range(n):
            for c in range(d + 1):
                ns = _generic_try_add(g, k_mask, l_mask, states[c], u)
                if ns is not None:
                    states[c] = ns
                    break
            else:
                return None
        return [s[0] for s in states]

    def dfs(u, states, used):
        if u == n:
            return states
        limit = min(used + 1, d + 1)
        for c in range(limit):
            ns = _generic_try_add(g, k_mask, l_mask, states[c], u)
            if ns is None:
                continue
            nxt = list(states)
            nxt[c] = ns
            res = dfs(u + 1, nxt, used + 1 if c == used else used)
            if res is not None:
                return res
        return None

    res = dfs(0, [empty] * (d + 1), 0)
    return None if res is None else [s[0] for s in res]


def kl_dad_search(
    g: Groupoid,
    k_set: ArrowSet,
    l_set: ArrowSet,
    d_max: int,
    mode: str = "exact",
) -> "DadWitness | None":
    """Search for a certified witness of minimal d <= d_max.

    Exact mode is complete over unit color assignments: since shrinking a
    class preserves certification, it suffices to explore partitions, in
    lexicographic order with colors canonicalized by first use.  The returned
    witness is the minimum of that order at the least feasible d.  Greedy
    mode is a first-fit pass per d: sound but incomplete.
    """
    if d_max < 0:
        raise WitnessError("d_max must be nonnegative")
    if mode not in ("exact", "greedy"):
        raise WitnessError(f"unknown search mode: {mode!r}")
    _same_owner(g, k_set.owner)
    _same_owner(g, l_set.owner)
    _require_oc("K", k_set)
    _require_oc("L", l_set)

    principal = is_principal(g)
    if principal:
        adj, ok = _principal_tables(g, k_set, l_set)

    for d in range(d_max + 1):
        if principal:
            states = partition_search(g.n_units, d + 1, adj, ok, mode)
            masks = None if states is None else [s[0] for s in states]
        else:
            masks = _generic_search(g, k_set, l_set, d, mode)
        if masks is not None:
            cover = Cover(g, tuple(UnitSet(g, m) for m in masks), g.all_units())
            witness = kl_dad_check(g, k_set, l_set, cover)
            if not witness.certified:
                raise WitnessError("search produced an uncertifiable cover (internal error)")
            return witness
    return None


# -- gluing ----------------------------------------------------------------


@dataclass(frozen=True)
class GluingCertificate:
    """Outcome of a gluing containment check, with proof-shaped diagnostics."""

    holds: bool
    generated_set: ArrowSet
    bound: ArrowSet
    escape: ArrowSet
    cases: "dict[str, ArrowSet] | None" = None

    def __bool__(self):
        return self.holds


def glue_two(
    g: Groupoid,
    v0: UnitSet,
    v1: UnitSet,
    k0: ArrowSet,
    k1: ArrowSet,
    k2: ArrowSet,
    h0: "ArrowSet | None" = None,
    h1: "ArrowSet | None" = None,
) -> GluingCertificate:
    """Two-set gluing: confine the window's subgroupoid over V0 | V1 in K2^5.

    Hypotheses (re-verified): K0 <= K1 <= K2 symmetric with units,
    generated(K0, V0) <= K1 and generated(K1^3, V1) <= K2.  Optional ``h0`` /
    ``h1`` are caller-supplied generated sets; they must match the
    recomputation.  The certificate also carries the three case sets of the
    underlying factorization argument for diagnostics.
    """
    for name, s in (("K0", k0), ("K1", k1), ("K2", k2)):
        _require_oc(name, s)
    if not (k0 <= k1 and k1 <= k2):
        raise HypothesisError("window chain K0 <= K1 <= K2 violated")
    gh0 = generated(k0, v0)
    if h0 is not None and h0 != gh0:
        raise HypothesisError("supplied H0 does not match generated(K0, V0)")
    if not gh0 <= k1:
        raise HypothesisError("generated(K0, V0) escapes K1")
    gh1 = generated(power(k1, 3), v1)
    if h1 is not None and h1 != gh1:
        raise HypothesisError("supplied H1 does not match generated(K1^3, V1)")
    if not gh1 <= k2:
        raise HypothesisError("generated(K1^3, V1) escapes K2")

    gen = generated(k0, v0 | v1)
    bound = power(k2, 5)
    h0k0 = compose_sets(gh0, k0)
    k0h0 = compose_sets(k0, gh0)
    middle = compose_sets(h0k0, compose_sets(gh1, k0h0))
    cases = {
        "prefix": gen & h0k0,
        "suffix": gen & k0h0,
        "split": gen & middle,
    }
    return GluingCertificate(gen <= bound, gen, bound, gen - bound, cases)


def glue_chain(
    g: Groupoid,
    v_list: Sequence[UnitSet],
    k_list: Sequence[ArrowSet],
) -> GluingCertificate:
    """Chained gluing over finitely many unit sets.

    Requires one more window than unit sets, increasing and symmetric with
    units, with ``generated(K_i^15, V_i) <= K_{i+1}`` at every link; the
    certificate confines ``generated(K_0, union V_i)`` in the 5th power of the
    last window.
    """
    if len(k_list) != len(v_list) + 1:
        raise HypothesisError("need exactly one more window than unit sets")
    for i, s in enumerate(k_list):
        _require_oc(f"K{i}", s)
        if i and not k_list[i - 1] <= s:
            raise HypothesisError(f"window chain not increasing at index {i}")
    for i, v in enumerate(v_list):
        if not generated(power(k_list[i], 15), v) <= k_list[i + 1]:
            raise HypothesisError(f"generated(K{i}^15, V{i}) escapes K{i + 1}")
    g0 = g.unit_set()
    union = g0
    for v in v_list:
        union = union | v
    gen = generated(k_list[0], union)
    bound = power(k_list[-1], 5)
    return GluingCertificate(gen <= bound, gen, bound, gen - bound)


def union_combine(
    g: Groupoid,
    parts: Sequence[UnitSet],
    witnesses: Sequence[DadWitness],
    k_list: Sequence[ArrowSet],
) -> DadWitness:
    """Merge per-part witnesses over a clopen partition into one global witness.

    Part ``i`` must carry a certified witness on ``restrict(g, parts[i])`` for
    the window ``K_i^15`` restricted there, with generated classes inside
    ``K_{i+1}``.  Classes are merged index-wise; the result is re-certified at
    ``(K_0, K_n^5)`` where ``n = len(parts)``.
    """
    if len(witnesses) != len(parts):
        raise HypothesisError("one witness per part required")
    if len(k_list) != len(parts) + 1:
        raise HypothesisError("need exactly one more window than parts")
    seen = 0
    for p in parts:
        _same_owner(g, p.owner)
        if seen & p.mask:
            raise HypothesisError("parts are not disjoint")
        seen |= p.mask
    if seen != g.units_mask:
        raise HypothesisError("parts do not cover the unit space")
    for i, s in enumerate(k_list):
        _require_oc(f"K{i}", s)
        if i and not k_list[i - 1] <= s:
            raise HypothesisError(f"window chain not increasing at index {i}")

    d = max(w.d for w in witnesses)
    merged = [0] * (d + 1)
    for i, (part, w) in enumerate(zip(parts, witnesses)):
        sub = w.owner
        if sub.parent is not g or set(sub.parent_units) != set(part):
            raise HypothesisError(f"witness {i} is not a witness on restrict(g, parts[{i}])")
        expected_k = sub.from_parent_arrows(power(k_list[i], 15))
        if w.K != expected_k:
            raise HypothesisError(f"witness {i} window is not K{i}^15 restricted to its part")
        recheck = kl_dad_check(sub, expected_k, sub.from_parent_arrows(k_list[i + 1]), w.cover)
        if not recheck.certified:
            raise HypothesisError(f"witness {i} fails re-certification against K{i + 1}")
        for j, cls in enumerate(w.cover.classes):
            merged[j] |= sub.to_parent_units(cls).mask

    cover = Cover(g, tuple(UnitSet(g, m) for m in merged), g.all_units())
    out = kl_dad_check(g, k_list[0], power(k_list[-1], 5), cover)
    if not out.certified:
        offender = next(
            i for i, gen in enumerate(out.generated_per_class) if not gen <= out.L
        )
        raise HypothesisError(
            f"merged class {offender} escapes the final bound; "
            "the window chain grows too slowly"
        )
    return out


# -- product ---------------------------------------------------------------


def product_combine(
    prod,
    d_left: int,
    cover_left: Cover,
    k_left: ArrowSet,
    l_left: ArrowSet,
    d_right: int,
    cover_right: Cover,
    k_right: ArrowSet,
    l_right: ArrowSet,
) -> DadWitness:
    """Build a product witness from fold-lifted factor covers.

    Both covers must sit at level ``k = d_left + d_right``: ``k+1`` classes,
    ``(k+1-d)``-fold for their own ``d``, with every class generating inside
    the factor bound.  The product witness has classes ``U_i x V_i`` and bound
    ``L_left x L_right``; the pigeonhole cover property is re-verified
    pointwise by the final certification.
    """
    k = d_left + d_right
    for side, cov, dd in (("left", cover_left, d_left), ("right", cover_right, d_right)):
        if len(cov.classes) != k + 1:
            raise HypothesisError(f"{side} cover must have {k + 1} classes")
        fold = fold_number(cov)
        if fold < k + 1 - dd:
            raise HypothesisError(f"{side} cover is only {fold}-fold, need {k + 1 - dd}")
    for side, cov, kk, ll in (
        ("left", cover_left, k_left, l_left),
        ("right", cover_right, k_right, l_right),
    ):
        for i, cls in enumerate(cov.classes):
            if not generated(kk, cls) <= ll:
                raise HypothesisError(f"{side} class {i} generates outside its bound")

    gp = prod.groupoid
    k_prod = prod.lift_sets(k_left, k_right)
    l_prod = prod.lift_sets(l_left, l_right)
    classes = []
    for ul, ur in zip(cover_left.classes, cover_right.classes):
        mask = 0
        for u in ul:
            for v in ur:
                mask |= 1 << prod.unit_id(u, v)
        classes.append(UnitSet(gp, mask))
    cover = Cover(gp, tuple(classes), gp.all_units())
    out = kl_dad_check(gp, k_prod, l_prod, cover)
    if not out.certified:
        raise HypothesisError("product witness failed re-certification")
    return out


# -- functor transfer ------------------------------------------------------


def check_functor(g: Groupoid, h: Groupoid, pi: Sequence[int]) -> None:
    """Verify that ``pi`` is a groupoid homomorphism arrow map g -> h."""
    if len(pi) != g.n_arrows:
        raise HypothesisError("functor map must cover every arrow")
    for a in range(g.n_arrows):
        if not 0 <= pi[a] < h.n_arrows:
            raise HypothesisError(f"functor image of arrow {a} out of range")
    for u in range(g.n_units):
        if not h.is_unit(pi[u]):
            raise HypothesisError(f"functor sends identity {u} to a non-identity arrow")
    for a in range(g.n_arrows):
        if pi[g.inv[a]] != h.inv[pi[a]]:
            raise HypothesisError(f"functor does not preserve inverse at arrow {a}")
        if h.src[pi[a]] != pi[g.src[a]] or h.rng[pi[a]] != pi[g.rng[a]]:
            raise HypothesisError(f"functor does not preserve endpoints at arrow {a}")
    m = g.n_arrows
    for key, c in g.comp.items():
        a, b = divmod(key, m)
        img = h.compose_or_none(pi[a], pi[b])
        if img != pi[c]:
            raise HypothesisError(f"functor does not preserve composition at ({a},{b})")


def map_arrows_forward(h: Groupoid, pi: Sequence[int], aset: ArrowSet) -> ArrowSet:
    return ArrowSet(h, mask_of(pi[a] for a in aset))


def map_arrows_back(g: Groupoid, pi: Sequence[int], aset: ArrowSet) -> ArrowSet:
    return ArrowSet(g, mask_of(a for a in range(g.n_arrows) if pi[a] in aset))


def pullback_witness(
    g: Groupoid,
    h: Groupoid,
    pi: Sequence[int],
    k_g: ArrowSet,
    witness_h: DadWitness,
    l_g: "ArrowSet | None" = None,
) -> DadWitness:
    """Pull a witness back along a homomorphism into the domain groupoid.

    Classes become unit preimages; the default bound is the preimage of the
    union of the target's generated subgroupoids.  The result is re-certified
    directly.
    """
    check_functor(g, h, pi)
    _same_owner(g, k_g.owner)
    if not map_arrows_forward(h, pi, k_g) <= witness_h.K:
        raise HypothesisError("functor image of the window escapes the target window")
    recheck = kl_dad_check(h, witness_h.K, witness_h.L, witness_h.cover)
    if not recheck.certified:
        raise HypothesisError("target witness fails re-certification")

    if l_g is None:
        union = h.arrow_set()
        for gen in witness_h.generated_per_class:
            union = union | gen
        l_g = symmetrize(map_arrows_back(g, pi, union))
    classes = tuple(
        UnitSet(g, mask_of(u for u in range(g.n_units) if pi[u] in cls))
        for cls in witness_h.cover.classes
    )
    out = kl_dad_check(g, k_g, l_g, Cover(g, classes, g.all_units()))
    if not out.certified:
        raise HypothesisError("pulled-back witness failed re-certification")
    return out


# -- blow-up transfer ------------------------------------------------------


def blowup_lift(bl, witness: DadWitness, k_psi: "ArrowSet | None" = None) -> DadWitness:
    """Lift a witness to the blow-up through the projection (a pullback)."""
    gb = bl.groupoid
    if k_psi is None:
        k_psi = map_arrows_back(gb, bl.pi, witness.K)
    return pullback_witness(gb, bl.base, bl.pi, k_psi, witness)


def blowup_transfer(
    bl,
    witness_psi: DadWitness,
    k_set: ArrowSet,
    l_g: "ArrowSet | None" = None,
) -> DadWitness:
    """Push a blow-up witness down: classes map through the unit surjection.

    The blow-up witness window must contain the lift of ``k_set``; the default
    bound on the base is the projection of the blow-up bound.  The result is
    re-certified directly.
    """
    g = bl.base
    gb = bl.groupoid
    _same_owner(g, k_set.owner)
    _same_owner(gb, witness_psi.owner)
    if set(bl.psi) != set(range(g.n_units)):
        raise HypothesisError("unit map of the blow-up is not surjective")
    lifted = map_arrows_back(gb, bl.pi, k_set)
    if not lifted <= witness_psi.K:
        raise HypothesisError("blow-up witness window does not contain the lifted window")
    recheck = kl_dad_check(gb, witness_psi.K, witness_psi.L, witness_psi.cover)
    if not recheck.certified:
        raise HypothesisError("blow-up witness fails re-certification")

    if l_g is None:
        l_g = symmetrize(map_arrows_forward(g, bl.pi, witness_psi.L))
    classes = tuple(
        UnitSet(g, mask_of(bl.psi[x] for x in cls))
        for cls in witness_psi.cover.classes
    )
    out = kl_dad_check(g, k_set, l_g, Cover(g, classes, g.all_units()))
    if not out.certified:
        raise HypothesisError("transferred witness failed re-certification")
    return out


# -- control-function discovery -------------------------------------------


def discover_control_function(
    g: Groupoid,
    d: int,
    mode: str = "exact",
    label: str = "",
) -> ControlFunction:
    """Control function whose bounds are minimal powers found by witness search.

    For each window the provider searches ``L = K^j`` for j = 1, 2, ... until
    a d-witness certifies, so the bound is the least power of the window that
    the search can confine.
    """

    def provider(k_set: ArrowSet) -> tuple[ArrowSet, Cover]:
        if not k_set.is_oc_normal():
            raise CoverError("control windows must be symmetric with units")
        j = 1
        while True:
            bound = power(k_set, j)
            witness = kl_dad_search(g, k_set, bound, d, mode)
            if witness is not None:
                # pad lower-dimensional witnesses with empty classes
                classes = witness.cover.classes
                classes += tuple(g.unit_set() for _ in range(d + 1 - len(classes)))
                return bound, Cover(g, classes, witness.cover.base)
            if bound == power(k_set, j + 1):
                raise CoverError(
                    f"no {d}-dimensional witness exists even at the stable power"
                )
            j += 1

    return ControlFunction(d, provider, label=label or f"min-power({mode})")
