"""Command line driver.  Angles are given in units of pi.

Exit codes: 0 ok, 1 usage or input error, 2 a check failed.
"""
from __future__ import annotations

import json
import math
import os
import sys

import click
import numpy as np

from . import covers as cv
from .configurations import (LensConfiguration, SlitConfiguration, gamma_w, is_admissible,
                             is_separated, lens_to_slits)
from .experiments import (ExperimentConfig, SEPARATING_VECTOR, compare_summary, ergodic_summary,
                          inside_lens, load_model, pillow_chip_summary, start_point, separated_slits,
                          summary_json, trapping_summary)
from .flow import FlowState, trace, write_svg
from .iet import ExactPeriodicity, Section, cocycle, extract_iet, rigidity_scan
from .planar import GeometryError, Vec2
from .skeleton import Skeleton, SlitFold, UnknownName

EXIT_CHECK = 2


def _fail_check(msg: str):
    click.echo(msg)
    raise SystemExit(EXIT_CHECK)


def _emit(text: str, out):
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        click.echo(text)


@click.group()
@click.option("--threads", type=int, default=None, help="Worker processes (overrides FLATLENS_THREADS).")
def cli(threads):
    """Flat-surface and Eaton-lens dynamics toolkit."""
    if threads is not None:
        if threads < 1:
            raise click.BadParameter("must be positive", param_hint="--threads")
        os.environ["FLATLENS_THREADS"] = str(threads)


# ---------------------------------------------------------------------------
# covers

@cli.group()
def covers():
    """Cyclic pillowcase covers."""


@covers.command("table")
@click.option("--format", "fmt", type=click.Choice(["csv", "md"]), default="csv")
@click.option("--dmax", type=int, default=6, show_default=True)
def covers_table(fmt, dmax):
    """Genus-one covers up to unit renaming."""
    rows = cv.census_table(dmax)
    head = ["d", "w_h", "w_v", "n1", "n2", "n3", "genus"]
    lines = []
    if fmt == "md":
        lines.append("| " + " | ".join(head) + " |")
        lines.append("|" + "---|" * len(head))
    else:
        lines.append(",".join(head))
    for r in rows:
        vals = list(r) + [cv.genus(cv.CyclicCover(*r[:3]))]
        lines.append("| " + " | ".join(map(str, vals)) + " |" if fmt == "md" else ",".join(map(str, vals)))
    click.echo("\n".join(lines))


@covers.command("oracle")
@click.option("--dmax", type=int, default=12, show_default=True)
def covers_oracle(dmax):
    """Genus formula and fiber counts against the glued complex."""
    bad = cv.oracle_mismatches(dmax)
    for b in bad:
        click.echo(b)
    if bad:
        _fail_check(f"FAIL {len(bad)} mismatches")
    click.echo("OK 0 mismatches")


@covers.command("orbit")
@click.argument("d", type=int)
@click.argument("w_h", type=int)
@click.argument("w_v", type=int)
def covers_orbit(d, w_h, w_v):
    """SL2(Z) orbit of the weights."""
    for c in sorted(cv.sl2z_orbit(cv.CyclicCover(d, w_h, w_v))):
        click.echo(f"{c.d},{c.w_h},{c.w_v}")


@covers.command("genus")
@click.argument("d", type=int)
@click.argument("w_h", type=int)
@click.argument("w_v", type=int)
def covers_genus(d, w_h, w_v):
    """Genus, fiber counts and branching orders."""
    c = cv.CyclicCover(d, w_h, w_v)
    click.echo(json.dumps({"cover": str(c), "genus": cv.genus(c),
                           "fibers": list(cv.fiber_counts(c)),
                           "branching": list(cv.branching_orders(c))}))


# ---------------------------------------------------------------------------
# configurations

@cli.group()
def config():
    """Lens and slit configurations."""


@config.command("gamma-w")
@click.option("--theta", type=float, required=True, help="Direction in units of pi.")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def config_gamma_w(theta, out):
    """The configuration gamma_W(theta) as JSON."""
    _emit(json.dumps(gamma_w(theta * math.pi).to_json()), out)


def _read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise click.BadParameter(str(exc))


@config.command("check-admissible")
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@click.option("--tol", type=float, default=1e-9, show_default=True)
def config_check(path, tol):
    """Check that no two lenses overlap."""
    cfg = LensConfiguration.from_json(_read_json(path))
    rep = is_admissible(cfg, tol)
    click.echo(json.dumps({"admissible": rep.ok, "worst_pair": list(rep.worst_pair), "slack": rep.slack}))
    if not rep.ok:
        raise SystemExit(EXIT_CHECK)


@config.command("to-slits")
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@click.option("--theta", type=float, required=True, help="Direction in units of pi.")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def config_to_slits(path, theta, out):
    """Flat lenses perpendicular to theta, as a skeleton JSON."""
    cfg = LensConfiguration.from_json(_read_json(path))
    _emit(json.dumps(lens_to_slits(cfg, theta * math.pi).to_skeleton().to_json()), out)


def _slits_from_json(data) -> SlitConfiguration:
    if "centers" in data:
        from .planar import Lattice
        g = data["lattice"]
        return SlitConfiguration(Lattice(g[0], g[1]), data["v"], data["centers"], data["radii"])
    sk = Skeleton.from_json(data)
    if not sk.folds or not all(isinstance(f, SlitFold) for f in sk.folds):
        raise click.BadParameter("expected a skeleton made of slit-folds")
    v = sk.folds[0].seg.direction
    if any(abs(f.seg.direction.cross(v)) > 1e-9 for f in sk.folds):
        raise click.BadParameter("slits must be parallel")
    return SlitConfiguration(sk.lattice, v, [f.center for f in sk.folds],
                             [f.seg.half_length for f in sk.folds])


@config.command("separated")
@click.argument("path", type=click.Path(exists=True, dir_okay=False), required=False)
@click.option("--w", nargs=2, type=float, default=SEPARATING_VECTOR, show_default=True)
def config_separated(path, w):
    """Whether the slit shadows along w are disjoint cylinders (default: the two-slit example)."""
    slits = _slits_from_json(_read_json(path)) if path else separated_slits()
    ok = is_separated(slits, Vec2(*w))
    click.echo(json.dumps({"separated": ok, "w": list(w)}))
    if not ok:
        raise SystemExit(EXIT_CHECK)


# ---------------------------------------------------------------------------
# trace

@cli.command("trace")
@click.option("--builtin", "name", default=None, help="wollmilchsau, x2, x4, c6_3_1, single-lens, gamma-w, ...")
@click.option("--model", "model_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--theta", type=float, required=True, help="Direction in units of pi.")
@click.option("--path", "path_len", type=float, default=1000.0, show_default=True)
@click.option("--start", nargs=2, type=float, default=None,
              help="Start point (default: a seeded point outside every lens).")
@click.option("--sign", type=click.Choice(["1", "-1"]), default="1")
@click.option("--out", default="trajectory", show_default=True, help="Output prefix for .csv and .svg.")
def trace_cmd(name, model_path, theta, path_len, start, sign, out):
    """Trace one leaf; write its event CSV and an SVG."""
    if (name is None) == (model_path is None):
        raise click.UsageError("give exactly one of --builtin and --model")
    th = theta * math.pi
    model = load_model(model_path or name, th)
    if start is None:
        p = start_point(model, np.random.default_rng(0))
    else:
        p = Vec2(*start)
        if inside_lens(model, p):
            raise click.BadParameter("start point lies inside a lens", param_hint="--start")
    traj = trace(FlowState(p, int(sign), th), model, path_len)
    traj.to_csv(out + ".csv")
    write_svg(traj, out + ".svg", model)
    click.echo(json.dumps({"events": traj.n_events, "terminated": traj.terminated,
                           "cells": traj.cell_count(), "csv": out + ".csv", "svg": out + ".svg"}))


# ---------------------------------------------------------------------------
# experiments

@cli.group()
def experiment():
    """Seeded sweeps over directions."""


def _sweep_options(f):
    for opt in reversed([
        click.option("--thetas", type=int, default=50, show_default=True),
        click.option("--path", "path_len", type=float, default=1e5, show_default=True),
        click.option("--seed", type=int, default=7, show_default=True),
        click.option("--out", type=click.Path(dir_okay=False), default=None),
    ]):
        f = opt(f)
    return f


def _finish(summary, out):
    _emit(summary_json(summary), out)
    if not summary["pass"]:
        raise SystemExit(EXIT_CHECK)


@experiment.command("trapping")
@click.option("--builtin", "name", default="single-lens", show_default=True)
@_sweep_options
@click.option("--max-exponent", type=float, default=0.1, show_default=True)
@click.option("--floor", type=float, default=0.8, show_default=True)
def exp_trapping(name, thetas, path_len, seed, out, max_exponent, floor):
    """Fraction of directions with bounded min-width growth."""
    cfg = ExperimentConfig(model=name, thetas=thetas, path=path_len, seed=seed,
                           exponent_max=max_exponent, fraction_floor=floor)
    _finish(trapping_summary(cfg), out)


@experiment.command("ergodic")
@click.option("--curve", default="gamma-w", show_default=True)
@_sweep_options
@click.option("--min-exponent", type=float, default=0.3, show_default=True)
@click.option("--min-cells", type=int, default=50, show_default=True)
@click.option("--floor", type=float, default=0.6, show_default=True)
def exp_ergodic(curve, thetas, path_len, seed, out, min_exponent, min_cells, floor):
    """Fraction of directions whose orbit keeps spreading."""
    cfg = ExperimentConfig(model=curve, thetas=thetas, path=path_len, seed=seed,
                           exponent_min=min_exponent, cells_min=min_cells, fraction_floor=floor)
    _finish(ergodic_summary(cfg), out)


@experiment.command("compare")
@click.option("--thetas", type=int, default=20, show_default=True)
@click.option("--rays", type=int, default=1000, show_default=True)
@click.option("--path", "path_len", type=float, default=100.0, show_default=True)
@click.option("--seed", type=int, default=6, show_default=True)
@click.option("--floor", type=float, default=0.99, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def exp_compare(thetas, rays, path_len, seed, floor, out):
    """Eaton lenses of gamma_W(theta) against their flat lenses."""
    cfg = ExperimentConfig(model="gamma-w", thetas=thetas, rays=rays, path=path_len, seed=seed,
                           match_floor=floor)
    _finish(compare_summary(cfg), out)


@experiment.command("pillow-chip")
@click.option("--rays", type=int, default=500, show_default=True)
@click.option("--path", "path_len", type=float, default=200.0, show_default=True)
@click.option("--seed", type=int, default=8, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def exp_pillow(rays, path_len, seed, out):
    """Unit pillow-fold against its chip-fold replacement."""
    _finish(pillow_chip_summary(rays, path_len, seed), out)


# ---------------------------------------------------------------------------
# iet

@cli.group()
def iet():
    """Return maps on a section and their cocycles."""


def _skeleton(name, model_path, theta):
    model = load_model(model_path or name, theta)
    if not isinstance(model, Skeleton):
        raise click.UsageError("IET extraction needs a skeleton model")
    return model


def _section(opt, theta):
    if not opt:
        return None
    ox, oy, length = opt
    return Section.perpendicular(theta, (ox, oy), length)


_iet_opts = [
    click.option("--builtin", "name", default="wollmilchsau", show_default=True),
    click.option("--model", "model_path", type=click.Path(exists=True, dir_okay=False), default=None),
    click.option("--theta", type=float, required=True, help="Direction in units of pi."),
    click.option("--section", nargs=3, type=float, default=None,
                 help="Origin x, y and length of a section perpendicular to theta."),
]


def _with_iet_opts(f):
    for opt in reversed(_iet_opts):
        f = opt(f)
    return f


@iet.command("extract")
@_with_iet_opts
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def iet_extract(name, model_path, theta, section, out):
    """First-return IET with return times and deck classes, as JSON."""
    th = theta * math.pi
    it = extract_iet(_skeleton(name, model_path, th), th, _section(section, th))
    bad = it.check()
    _emit(it.to_json(), out)
    if bad:
        _fail_check("; ".join(bad))


@iet.command("rigidity")
@_with_iet_opts
@click.option("--hmax", type=int, default=500, show_default=True)
@click.option("--tol", type=float, default=1e-2, show_default=True)
@click.option("--floor", type=float, default=0.02, show_default=True)
@click.option("--samples", type=int, default=4000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
def iet_rigidity(name, model_path, theta, section, hmax, tol, floor, samples, seed):
    """Near-rigid times and essential value candidates (Monte Carlo)."""
    th = theta * math.pi
    it = extract_iet(_skeleton(name, model_path, th), th, _section(section, th))
    psi = cocycle(it, [(1, 0), (0, 1)])
    try:
        rep = rigidity_scan(it, psi, hmax, tol, floor, samples=samples, seed=seed)
    except ExactPeriodicity as exc:
        click.echo(json.dumps({"exact_periodicity": exc.period}))
        return
    click.echo(json.dumps(rep.to_dict(), sort_keys=True))


def main(argv=None):
    try:
        rv = cli.main(args=argv, prog_name="flatlens", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except (UnknownName, GeometryError, ValueError, KeyError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 0
    return rv if isinstance(rv, int) else 0


def entry():
    sys.exit(main())
