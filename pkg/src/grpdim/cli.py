"""Batch CLI: validate instances, run searches and theorem pipelines, emit
TSV rows on stdout and re-verifiable JSON artifacts under --out.

Exit codes: 0 success/certified, 1 refuted/none, 2 input error.  Artifacts
never contain timing, so repeated runs are byte-identical; wall time appears
only in the stdout report row.
"""

from __future__ import annotations

import hashlib
import json
import os
import sys
import time
from pathlib import Path

import click

from . import builders
from .builders import BuilderError, canonical_dumps, load, load_graphing
from .covers import fold_number
from .dad import DadWitness, kl_dad_search
from .coarse import ef_asdim_search, fiber_gauge, treeable_cover, CoarseSpace
from .groupoid import GroupoidError
from .pipelines import (
    PipelineError,
    bridge_theorem,
    morita_theorem,
    product_theorem,
    sweep_rows,
    union_theorem,
)
from .setspec import parse_arrow_spec

EXIT_OK = 0
EXIT_REFUTED = 1
EXIT_INPUT = 2


class InputError(click.ClickException):
    """Bad inputs exit with code 2; refutations keep code 1."""

    exit_code = EXIT_INPUT


def _digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()[:16]


def _row(instance, operation, params, result, witness_path, started) -> None:
    wall_ms = int((time.monotonic() - started) * 1000)
    click.echo(
        "\t".join(
            [str(instance), operation, params, result, witness_path or "-", str(wall_ms)]
        )
    )


def _write_artifact(out_dir, name, obj) -> str:
    if out_dir is None:
        return ""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_text(canonical_dumps(obj), encoding="utf-8")
    return str(path)


def _load_instance(path):
    try:
        return load(path)
    except (BuilderError, OSError) as exc:
        raise InputError(str(exc)) from exc


def _load_graphing(g, path):
    if path is None:
        return None
    try:
        return load_graphing(g, path)
    except (GroupoidError, OSError) as exc:
        raise InputError(str(exc)) from exc


def _specs(g, k_spec, l_spec, graphing):
    k_set = parse_arrow_spec(g, k_spec, graphing=graphing)
    l_set = parse_arrow_spec(g, l_spec, k_set=k_set, graphing=graphing)
    return k_set, l_set


def _workers() -> "int | None":
    raw = os.environ.get("GRPDIM_WORKERS")
    if not raw:
        return None
    try:
        return max(1, int(raw))
    except ValueError:
        return None


@click.group()
def main():
    """Dimension witnesses for finite groupoid windows."""


@main.command("validate")
@click.argument("paths", nargs=-1, required=True, type=click.Path(exists=True))
def cmd_validate(paths):
    """Validate instance files; directories are swept recursively."""
    files = []
    for p in paths:
        p = Path(p)
        files.extend(sorted(p.rglob("*.json")) if p.is_dir() else [p])
    worst = EXIT_OK
    for f in files:
        started = time.monotonic()
        try:
            load(f)
            _row(f, "validate", "-", "ok", None, started)
        except BuilderError as exc:
            first = str(exc).splitlines()[0]
            _row(f, "validate", "-", f"invalid: {first}", None, started)
            worst = EXIT_REFUTED
    sys.exit(worst)


@main.command("build")
@click.option("--family", required=True,
              type=click.Choice(["pair", "action", "partial", "tree", "product", "blowup"]))
@click.option("--n", type=int, default=None, help="units / points / window size")
@click.option("--group", default=None, help="finite group, e.g. cyclic:8")
@click.option("--points", type=int, default=None, help="points acted on")
@click.option("--trivial-action", is_flag=True, help="let the group act trivially")
@click.option("--shape", default=None, help="tree shape, path:<n> or binary:<depth>")
@click.option("--left", type=click.Path(exists=True), default=None)
@click.option("--right", type=click.Path(exists=True), default=None)
@click.option("--path", "base_path", type=click.Path(exists=True), default=None)
@click.option("--multiplicity", type=int, default=2)
@click.option("--out", required=True, type=click.Path())
@click.option("--graphing-out", type=click.Path(), default=None)
def cmd_build(family, n, group, points, trivial_action, shape, left, right,
              base_path, multiplicity, out, graphing_out):
    """Build an instance file (and optionally a graphing sidecar)."""
    graphing = None
    try:
        if family == "pair":
            if n is None:
                raise InputError("--family pair needs --n")
            g, graphing = builders.tree_window("path", n)
        elif family == "tree":
            if not shape or ":" not in shape:
                raise InputError("--family tree needs --shape path:<n>|binary:<d>")
            kind, _, size = shape.partition(":")
            g, graphing = builders.tree_window(kind, int(size))
        elif family == "action":
            if not group or not group.startswith("cyclic:"):
                raise InputError("--family action needs --group cyclic:<k>")
            order = int(group.split(":", 1)[1])
            npts = points if points is not None else order
            perms = (
                builders.trivial_perms(order, npts)
                if trivial_action
                else builders.rotation_perms(order, npts)
            )
            g = builders.action_groupoid(builders.cyclic_table(order), perms)
        elif family == "partial":
            if n is None:
                raise InputError("--family partial needs --n")
            g = builders.partial_action_groupoid(builders.z_shift_partial_spec(n))
        elif family == "product":
            if not left or not right:
                raise InputError("--family product needs --left and --right")
            g = builders.product(_load_instance(left), _load_instance(right)).groupoid
        else:  # blowup
            if not base_path:
                raise InputError("--family blowup needs --path")
            base = _load_instance(base_path)
            g = builders.blowup(base, builders.replicate_psi(base, multiplicity)).groupoid
        builders.save(g, out)
        if graphing is not None and graphing_out:
            builders.save_graphing(graphing, graphing_out)
        click.echo(f"{out}\tbuild\t{family}\tok\t-\t0")
    except (GroupoidError, ValueError) as exc:
        raise InputError(str(exc)) from exc


@main.command("dad")
@click.argument("path", type=click.Path(exists=True))
@click.option("--k-spec", default="ball:1", show_default=True)
@click.option("--l-spec", default="power:K:2", show_default=True)
@click.option("--d-max", type=int, default=2, show_default=True)
@click.option("--mode", type=click.Choice(["exact", "greedy"]), default="exact")
@click.option("--graphing", type=click.Path(exists=True), default=None)
@click.option("--out", type=click.Path(), default=None)
@click.option("--recheck", type=click.Path(exists=True), default=None,
              help="re-verify a serialized witness instead of searching")
def cmd_dad(path, k_spec, l_spec, d_max, mode, graphing, out, recheck):
    """Search a (K,L)-dad witness, or re-verify one with --recheck."""
    started = time.monotonic()
    g = _load_instance(path)
    gr = _load_graphing(g, graphing)
    try:
        if recheck:
            obj = json.loads(Path(recheck).read_text(encoding="utf-8"))
            witness = DadWitness.from_json_obj(g, obj)
            result = "certified" if witness.certified else "refuted"
            _row(path, "dad-recheck", f"{recheck}", result, recheck, started)
            sys.exit(EXIT_OK if witness.certified else EXIT_REFUTED)
        k_set, l_set = _specs(g, k_spec, l_spec, gr)
        witness = kl_dad_search(g, k_set, l_set, d_max, mode)
    except GroupoidError as exc:
        raise InputError(str(exc)) from exc
    params = f"k={k_spec};l={l_spec};d_max={d_max};mode={mode}"
    if witness is None:
        _row(path, "dad", params, "none", None, started)
        sys.exit(EXIT_REFUTED)
    obj = witness.to_json_obj()
    obj["instance_digest"] = _digest(path)
    obj["k_spec"] = k_spec
    obj["l_spec"] = l_spec
    wpath = _write_artifact(out, "dad-witness.json", obj)
    gens = ",".join(str(n) for n in obj["generated_sizes"])
    result = f"d={witness.d};fold={fold_number(witness.cover)};gens={gens}"
    _row(path, "dad", params, result, wpath, started)
    sys.exit(EXIT_OK)


@main.command("asdim")
@click.argument("path", type=click.Path(exists=True))
@click.option("--points", "points_spec", default="fiber:0", show_default=True,
              help="fiber:<unit> or arrows")
@click.option("--e-spec", default="ball:1", show_default=True)
@click.option("--f-spec", default="ball:4", show_default=True)
@click.option("--d-max", type=int, default=2, show_default=True)
@click.option("--mode", default=None,
              help="exact, greedy, or tree:<N> for the annuli certificate")
@click.option("--graphing", type=click.Path(exists=True), default=None)
@click.option("--out", type=click.Path(), default=None)
def cmd_asdim(path, points_spec, e_spec, f_spec, d_max, mode, graphing, out):
    """Decompose a coarse space, or certify a treeable annuli cover."""
    started = time.monotonic()
    g = _load_instance(path)
    gr = _load_graphing(g, graphing)
    try:
        if mode and mode.startswith("tree:"):
            if gr is None:
                raise InputError("tree mode needs --graphing")
            n_scale = int(mode.split(":", 1)[1])
            res = treeable_cover(g, gr, n_scale)
            params = f"mode={mode}"
            obj = {
                "format": "tree-cover",
                "version": 1,
                "scale": n_scale,
                "families": [[sorted(m) for m in fam] for fam in res.families],
                "max_diameter": res.max_diameter,
                "min_separation": res.min_separation,
                "certified": res.certified,
            }
            wpath = _write_artifact(out, "tree-cover.json", obj)
            for fam_i, cls_i, annulus, fib, size, diam in res.rows:
                click.echo(f"{fam_i}\t{cls_i}\t{annulus}\t{fib}\t{size}\t{diam}")
            result = "certified" if res.certified else "failed"
            _row(path, "asdim-tree", params, result, wpath, started)
            sys.exit(EXIT_OK if res.certified else EXIT_REFUTED)

        if points_spec == "arrows":
            pts = list(range(g.n_arrows))
        elif points_spec.startswith("fiber:"):
            x = int(points_spec.split(":", 1)[1])
            if not 0 <= x < g.n_units:
                raise InputError(f"unit {x} out of range")
            pts = [a for a in range(g.n_arrows) if g.rng[a] == x]
        else:
            raise InputError(f"bad --points spec {points_spec!r}")
        e_set = parse_arrow_spec(g, e_spec, graphing=gr)
        f_set = parse_arrow_spec(g, f_spec, k_set=e_set, graphing=gr)
        e_gauge = fiber_gauge(g, pts, e_set)
        f_gauge = fiber_gauge(g, pts, f_set)
        space = CoarseSpace(tuple(pts))
        families = ef_asdim_search(space, e_gauge, f_gauge, d_max, mode)
    except GroupoidError as exc:
        raise InputError(str(exc)) from exc
    params = f"points={points_spec};e={e_spec};f={f_spec};d_max={d_max}"
    if families is None:
        _row(path, "asdim", params, "none", None, started)
        sys.exit(EXIT_REFUTED)
    obj = {
        "format": "asdim-decomposition",
        "version": 1,
        "instance_digest": _digest(path),
        "points": pts,
        "families": [[sorted(pts[i] for i in m) for m in fam] for fam in families],
        "e_spec": e_spec,
        "f_spec": f_spec,
        "certified": True,
    }
    wpath = _write_artifact(out, "asdim-decomposition.json", obj)
    _row(path, "asdim", params, f"d={len(families) - 1}", wpath, started)
    sys.exit(EXIT_OK)


@main.command("theorem")
@click.argument("which", type=click.Choice(["product", "union", "morita", "bridge"]))
@click.option("--path", "base_path", type=click.Path(exists=True), default=None)
@click.option("--left", type=click.Path(exists=True), default=None)
@click.option("--right", type=click.Path(exists=True), default=None)
@click.option("--graphing", type=click.Path(exists=True), default=None)
@click.option("--left-graphing", type=click.Path(exists=True), default=None)
@click.option("--right-graphing", type=click.Path(exists=True), default=None)
@click.option("--k-spec", default="ball:1", show_default=True)
@click.option("--l-spec", default="power:K:2", show_default=True)
@click.option("--l-power", type=int, default=2, show_default=True)
@click.option("--d-max", type=int, default=2, show_default=True)
@click.option("--parts", default=None, help="unit ranges, e.g. 0-6;7-12")
@click.option("--multiplicity", type=int, default=2, show_default=True)
@click.option("--refute-units", default=None, help="unit list/range for the refutation stage")
@click.option("--out", type=click.Path(), default=None)
def cmd_theorem(which, base_path, left, right, graphing, left_graphing,
                right_graphing, k_spec, l_spec, l_power, d_max, parts,
                multiplicity, refute_units, out):
    """Run a permanence pipeline end to end and certify the inequality."""
    started = time.monotonic()
    try:
        if which == "product":
            if not left or not right:
                raise InputError("product needs --left and --right")
            gl = _load_instance(left)
            gr_ = _load_instance(right)
            gl_graph = _load_graphing(gl, left_graphing or graphing)
            gr_graph = _load_graphing(gr_, right_graphing or graphing)
            k_l = parse_arrow_spec(gl, k_spec, graphing=gl_graph)
            k_r = parse_arrow_spec(gr_, k_spec, graphing=gr_graph)
            units = _parse_units(refute_units) if refute_units else None
            report = product_theorem(gl, k_l, gr_, k_r, l_power, d_max, units)
            instance = f"{left}|{right}"
        elif which == "union":
            if not base_path or not parts:
                raise InputError("union needs --path and --parts")
            g = _load_instance(base_path)
            gr0 = _load_graphing(g, graphing)
            part_sets = [g.unit_set(_parse_units(p)) for p in parts.split(";")]
            k_set = parse_arrow_spec(g, k_spec, graphing=gr0)
            report = union_theorem(g, part_sets, k_set, l_power, d_max)
            instance = base_path
        elif which == "morita":
            if not base_path:
                raise InputError("morita needs --path")
            g = _load_instance(base_path)
            gr0 = _load_graphing(g, graphing)
            k_set, l_set = _specs(g, k_spec, l_spec, gr0)
            report = morita_theorem(g, multiplicity, k_set, l_set, d_max)
            instance = base_path
        else:
            if not base_path:
                raise InputError("bridge needs --path")
            g = _load_instance(base_path)
            gr0 = _load_graphing(g, graphing)
            k_set, l_set = _specs(g, k_spec, l_spec, gr0)
            report = bridge_theorem(g, k_set, l_set, d_max, workers=_workers())
            instance = base_path
    except (GroupoidError, PipelineError) as exc:
        raise InputError(str(exc)) from exc

    paths = {}
    for name, obj in report["artifacts"].items():
        paths[name] = _write_artifact(out, f"{which}-{name}.json", obj)
    summary = {k: v for k, v in report.items() if k != "artifacts"}
    spath = _write_artifact(out, f"{which}-report.json", summary)
    certified = report.get("certified", False)
    result = f"d={report.get('d')};certified={certified}"
    if "refuted_below" in report:
        result += f";refuted_below={report['refuted_below']}"
    _row(instance, f"theorem-{which}", f"k={k_spec}", result, spath, started)
    sys.exit(EXIT_OK if certified else EXIT_REFUTED)


def _parse_units(text: str) -> list[int]:
    out = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if "-" in chunk:
            lo, hi = chunk.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        elif chunk:
            out.append(int(chunk))
    return out


@main.command("sweep")
@click.argument("path", type=click.Path(exists=True))
@click.option("--windows", required=True, help="sizes, e.g. 4-16 or 4,8,12")
@click.option("--what", type=click.Choice(["dad", "asdim"]), default="dad")
@click.option("--k-spec", default="ball:1", show_default=True)
@click.option("--l-spec", default="power:K:2", show_default=True)
@click.option("--d-max", type=int, default=3, show_default=True)
@click.option("--n-scale", type=int, default=1, show_default=True)
@click.option("--graphing", type=click.Path(exists=True), default=None)
@click.option("--out", type=click.Path(), default=None)
def cmd_sweep(path, windows, what, k_spec, l_spec, d_max, n_scale, graphing, out):
    """Window sweep over unit-prefix restrictions; TSV rows per window."""
    started = time.monotonic()
    g = _load_instance(path)
    gr = _load_graphing(g, graphing)
    try:
        rows = sweep_rows(
            g, gr, _parse_units(windows), what, k_spec, l_spec, d_max, n_scale
        )
    except (GroupoidError, PipelineError) as exc:
        raise InputError(str(exc)) from exc
    lines = []
    for row in rows:
        lines.append(f"{row['window']}\t{row['result']}")
        click.echo(lines[-1])
    _write_artifact(
        out,
        f"sweep-{what}.json",
        {"format": "sweep", "what": what, "k_spec": k_spec, "l_spec": l_spec,
         "rows": rows},
    )
    _row(path, f"sweep-{what}", f"windows={windows}", f"rows={len(rows)}", None, started)
    sys.exit(EXIT_OK)


if __name__ == "__main__":
    main()
