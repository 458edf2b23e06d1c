import random

import pytest

from grpdim import (
    BuilderError,
    LoadError,
    action_groupoid,
    blowup,
    cyclic_table,
    fiber,
    is_principal,
    load,
    load_graphing,
    pair_groupoid,
    partial_action_groupoid,
    product,
    replicate_psi,
    rotation_perms,
    save,
    save_graphing,
    tree_window,
    trivial_perms,
    validate,
    z_shift_partial_spec,
)
from grpdim.builders import canonical_dumps, instance_to_obj, obj_to_instance


def test_pair_groupoid_shapes():
    g1 = pair_groupoid(1)
    assert g1.n_arrows == 1 and validate(g1).ok
    g3 = pair_groupoid(3)
    assert g3.n_arrows == 9 and is_principal(g3)
    for n in (2, 5, 12):
        assert validate(pair_groupoid(n)).ok


def test_action_groupoid_families():
    trivial = action_groupoid(cyclic_table(1), trivial_perms(1, 4))
    assert trivial.n_arrows == 4  # unit groupoid
    z8 = action_groupoid(cyclic_table(8), rotation_perms(8, 8))
    assert z8.n_arrows == 64 and is_principal(z8) and validate(z8).ok
    z2_iso = action_groupoid(cyclic_table(2), trivial_perms(2, 2))
    assert validate(z2_iso).ok and not is_principal(z2_iso)


def test_action_groupoid_rejects_non_action():
    bad_perms = [(0, 1), (0, 0)]  # not a permutation
    with pytest.raises(BuilderError):
        action_groupoid(cyclic_table(2), bad_perms)
    swap = [(0, 1), (1, 0)]
    bad_table = [[0, 1], [1, 1]]  # not a group table
    with pytest.raises(BuilderError):
        action_groupoid(bad_table, swap)


def test_partial_action_full_domains_equals_global():
    z4 = action_groupoid(cyclic_table(4), rotation_perms(4, 4))
    # build the same action as a partial action with full domains
    pts = frozenset(range(4))
    elements = tuple(str(t) for t in range(4))
    inv = {str(t): str((-t) % 4) for t in range(4)}
    mul = {(str(a), str(b)): str((a + b) % 4) for a in range(4) for b in range(4)}
    domains = {str(t): pts for t in range(4)}
    theta = {str(t): {x: (x + t) % 4 for x in range(4)} for t in range(4)}
    from grpdim import PartialActionSpec

    spec = PartialActionSpec(4, elements, inv, mul, domains, theta)
    g = partial_action_groupoid(spec)
    assert validate(g).ok
    assert g.n_arrows == z4.n_arrows and g.n_units == z4.n_units


def test_partial_shift_window():
    g = partial_action_groupoid(z_shift_partial_spec(10))
    assert validate(g).ok and is_principal(g)
    assert g.n_units == 10 and g.n_arrows == 100  # full pair relation on a line


def test_partial_action_empty_domains():
    spec = z_shift_partial_spec(1)
    g = partial_action_groupoid(spec)
    assert g.n_arrows == 1


def test_partial_action_rejects_broken_extension():
    spec = z_shift_partial_spec(4)
    mul = dict(spec.mul)
    del mul[("1", "1")]  # the product 2 is needed on overlapping domains
    broken = type(spec)(
        spec.n_points, spec.elements, spec.inv, mul, spec.domains, spec.theta
    )
    with pytest.raises(BuilderError):
        partial_action_groupoid(broken)


def test_blowup_counts_and_projection():
    g = pair_groupoid(3)
    bl = blowup(g, replicate_psi(g, 2))
    assert bl.groupoid.n_units == 6
    assert validate(bl.groupoid).ok and is_principal(bl.groupoid)
    expected = sum(
        bl.psi.count(g.rng[a]) * bl.psi.count(g.src[a]) for a in range(g.n_arrows)
    )
    assert bl.groupoid.n_arrows == expected == 36
    for b in range(bl.groupoid.n_arrows):
        assert g.src[bl.pi[b]] == bl.psi[bl.groupoid.src[b]]
        assert g.rng[bl.pi[b]] == bl.psi[bl.groupoid.rng[b]]
    with pytest.raises(BuilderError):
        blowup(g, (0, 0, 1, 1))


def test_product_shapes():
    g2 = pair_groupoid(2)
    prod = product(g2, g2)
    assert prod.groupoid.n_units == 4
    assert prod.groupoid.n_arrows == 16  # the pair groupoid on four points
    assert validate(prod.groupoid).ok and is_principal(prod.groupoid)
    unit = pair_groupoid(1)
    same = product(pair_groupoid(3), unit)
    assert same.groupoid.n_arrows == 9
    units_only = product(unit, unit)
    assert units_only.groupoid.n_arrows == 1


def test_product_fibers_multiply():
    gl, gr = pair_groupoid(2), pair_groupoid(3)
    prod = product(gl, gr)
    for u in range(2):
        for v in range(3):
            assert (
                fiber(prod.groupoid, prod.unit_id(u, v)).n
                == fiber(gl, u).n * fiber(gr, v).n
            )


def test_tree_window_shapes():
    g, graphing = tree_window("path", 2)
    assert len(graphing.q) == 2 and graphing.treeable
    gb, graphing_b = tree_window("binary", 3)
    assert gb.n_units == 15 and graphing_b.treeable
    assert validate(gb).ok


def test_save_load_roundtrip(tmp_path):
    g = pair_groupoid(7)
    path = tmp_path / "p7.json"
    save(g, path)
    loaded = load(path)
    assert loaded.n_units == 7 and loaded.n_arrows == 49
    assert loaded.src == g.src and loaded.rng == g.rng and loaded.inv == g.inv
    assert loaded.comp == g.comp
    # canonical writer is byte-stable across a round trip
    second = tmp_path / "again.json"
    save(loaded, second)
    assert path.read_bytes() == second.read_bytes()


def test_golden_bytes_p3():
    golden = (
        '{"arrows":[{"id":3,"rng":0,"src":1},{"id":4,"rng":0,"src":2},'
        '{"id":5,"rng":1,"src":0},{"id":6,"rng":1,"src":2},'
        '{"id":7,"rng":2,"src":0},{"id":8,"rng":2,"src":1}],'
        '"comp":[[3,5,0],[3,6,4],[4,7,0],[4,8,3],[5,3,1],[5,4,6],'
        '[6,7,5],[6,8,1],[7,3,8],[7,4,2],[8,5,7],[8,6,2]],'
        '"inv":[0,1,2,5,7,3,8,4,6],"units":3}\n'
    )
    assert canonical_dumps(instance_to_obj(pair_groupoid(3))) == golden


def test_loader_rejects_corrupt_comp(tmp_path):
    g = pair_groupoid(3)
    obj = instance_to_obj(g)
    obj["comp"][0][2] = (obj["comp"][0][2] + 1) % g.n_arrows
    path = tmp_path / "bad.json"
    path.write_text(canonical_dumps(obj), encoding="utf-8")
    with pytest.raises(LoadError) as err:
        load(path)
    assert "axiom" in str(err.value) or "conflict" in str(err.value)


def test_loader_rejects_schema_violations():
    with pytest.raises(LoadError):
        obj_to_instance({"units": 2, "arrows": [], "inv": [0], "comp": []})
    with pytest.raises(LoadError):
        obj_to_instance(
            {
                "units": 1,
                "arrows": [{"id": 0, "src": 0, "rng": 0}],  # identity range
                "inv": [0, 0],
                "comp": [],
            }
        )


def test_graphing_sidecar_roundtrip(tmp_path):
    g, graphing = tree_window("binary", 2)
    gpath = tmp_path / "g.json"
    save_graphing(graphing, gpath)
    again = load_graphing(g, gpath)
    assert again.q == graphing.q and again.treeable


def test_every_builder_output_validates():
    outputs = [
        pair_groupoid(5),
        action_groupoid(cyclic_table(4), rotation_perms(4, 8)),
        action_groupoid(cyclic_table(3), trivial_perms(3, 2)),
        partial_action_groupoid(z_shift_partial_spec(6)),
        blowup(pair_groupoid(3), replicate_psi(pair_groupoid(3), 2)).groupoid,
        product(pair_groupoid(2), pair_groupoid(3)).groupoid,
        tree_window("binary", 3)[0],
    ]
    for g in outputs:
        assert validate(g).ok


def test_partial_action_listed_empty_domain_gives_unit_groupoid():
    from grpdim import PartialActionSpec

    pts = frozenset(range(3))
    spec = PartialActionSpec(
        3,
        ("e", "g"),
        {"e": "e", "g": "g"},
        {("e", "e"): "e", ("e", "g"): "g", ("g", "e"): "g"},
        {"e": pts, "g": frozenset()},
        {"e": {x: x for x in range(3)}, "g": {}},
    )
    g = partial_action_groupoid(spec)
    assert g.n_arrows == g.n_units == 3


def test_save_load_fuzz_roundtrip(tmp_path):
    from conftest import random_groupoid

    rng = random.Random(2)
    for i in range(10):
        g = random_groupoid(rng, max_arrows=60)
        path = tmp_path / f"r{i}.json"
        save(g, path)
        back = load(path)
        assert back.src == g.src and back.rng == g.rng
        assert back.inv == g.inv and back.comp == g.comp
