"""Command-line front end.

Exit codes: 0 success, 1 bad configuration, 2 numerical non-convergence
(outputs are still written), 3 I/O failure.
"""

from __future__ import annotations

import argparse
import io
import json
import logging
import math
import os
import sys
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .analysis import energy_curve, force, ratio_curves, slope_mu, slope_nu
from .asymptotics import (
    QuadratureError,
    casimir_polder_integral,
    coefficients,
    hamaker_energies,
    pfa_energy,
    power_laws,
)
from .energy import (
    EnergyCache,
    Geometry,
    NumericsSpec,
    SpectralRadiusError,
    casimir_energy_exact,
)
from .materials import default_plane, default_sphere, load_material_config, material_to_dict, parse_key_value_config, permittivity
from .roundtrip import dump_block_csv, roundtrip_block

SCHEMA = "casimir-scatter.v1"
FIGURE_RADII = (2.0, 5.0, 10.0, 20.0)

EXIT_OK, EXIT_CONFIG, EXIT_NONCONVERGED, EXIT_IO = 0, 1, 2, 3

log = logging.getLogger("casimir_scatter")

_NUMERIC_KEYS = {
    "numerics.ell_max": ("ell_max", int),
    "numerics.m_rel_cutoff": ("m_rel_cutoff", float),
    "numerics.xi_nodes": ("xi_nodes", int),
    "numerics.x_nodes": ("x_nodes", int),
    "numerics.target_rel_err": ("target_rel_err", float),
    "numerics.xi_scale": ("xi_scale", float),
}


class ConfigError(ValueError):
    pass


@dataclass
class Table:
    columns: list
    rows: list
    converged: bool = True
    extra: dict = field(default_factory=dict)


def _float_list(text: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}")
    if not vals or any(not v > 0 for v in vals):
        raise argparse.ArgumentTypeError("radii must be positive")
    return vals


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("geometry and grid")
    g.add_argument("--radius-nm", type=float)
    g.add_argument("--distance-nm", type=float)
    g.add_argument("--l-min-nm", type=float, default=1.0)
    g.add_argument("--l-max-nm", type=float, default=500.0)
    g.add_argument("--points", type=int, default=30)
    g.add_argument("--radii-nm", type=_float_list)
    n = common.add_argument_group("numerics")
    n.add_argument("--lmax", type=int)
    n.add_argument("--xi-nodes", type=int)
    n.add_argument("--x-nodes", type=int)
    n.add_argument("--rel-tol", type=float, help="target relative error of the refinement check")
    n.add_argument("--check-every", type=int, default=10, help="refine every k-th curve point (0: never)")
    n.add_argument("--workers", type=int, default=1)
    o = common.add_argument_group("input and output")
    o.add_argument("--config", help="key = value file with material.* and numerics.* keys")
    o.add_argument("--output", "-o", help="output file (default: stdout)")
    o.add_argument("--format", choices=("csv", "json"))
    o.add_argument("--cache-dir", help="cache directory (default: $CASIMIR_CACHE_DIR or ./cache)")
    o.add_argument("--no-cache", action="store_true")
    o.add_argument("--dump-block", metavar="PATH", help="energy: write the m-block at xi_hat = 1/(L+R) as CSV")
    o.add_argument("--dump-m", type=int, default=0)
    o.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="casimir-scatter", description="Sphere-plane Casimir energies.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("energy", parents=[common], help="single exact energy")
    sub.add_parser("curve", parents=[common], help="E, F and nu over a distance grid")
    sub.add_parser("slopes", parents=[common], help="nu and mu over a distance grid")
    sub.add_parser("ratios", parents=[common], help="E over the Hamaker forms")
    sub.add_parser("asymptotics", parents=[common], help="power-law coefficients and models")
    fig = sub.add_parser("figures", parents=[common], help="figure data")
    fig.add_argument("figure", choices=("fig1", "fig2", "fig3", "fig4", "fig5"))
    sub.add_parser("cache-clear", parents=[common], help="delete cached energies")
    return parser


@dataclass
class RunConfig:
    command: str
    args: argparse.Namespace
    plane: object
    sphere: object
    num: NumericsSpec
    cache: EnergyCache | None

    def provenance(self) -> dict:
        a = self.args
        params = {
            k: getattr(a, k)
            for k in ("radius_nm", "distance_nm", "l_min_nm", "l_max_nm", "points", "radii_nm", "check_every", "figure")
            if getattr(a, k, None) is not None
        }
        return {
            "tool": "casimir-scatter",
            "version": __version__,
            "command": self.command,
            "parameters": params,
            "plane": material_to_dict(self.plane),
            "sphere": material_to_dict(self.sphere),
            "numerics": self.num.key(),
            "cache_hits": self.cache.hits if self.cache else 0,
            "cache_misses": self.cache.misses if self.cache else 0,
        }


def make_config(args: argparse.Namespace) -> RunConfig:
    plane, sphere = default_plane(), default_sphere()
    overrides = {}
    if args.config:
        try:
            text = open(args.config).read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}")
        cfg = parse_key_value_config(text)
        unknown = [k for k in cfg if not (k.startswith("material.") or k in _NUMERIC_KEYS)]
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        plane, sphere = load_material_config(cfg)
        for key, (name, conv) in _NUMERIC_KEYS.items():
            if key in cfg:
                overrides[name] = conv(cfg[key])
    for flag, name in (("lmax", "ell_max"), ("xi_nodes", "xi_nodes"), ("x_nodes", "x_nodes"), ("rel_tol", "target_rel_err")):
        if getattr(args, flag) is not None:
            overrides[name] = getattr(args, flag)
    overrides["workers"] = 1
    num = NumericsSpec(**overrides)
    if args.points < 2:
        raise ConfigError("--points must be >= 2")
    if not 0 < args.l_min_nm < args.l_max_nm:
        raise ConfigError("need 0 < --l-min-nm < --l-max-nm")
    if args.workers < 1 or args.check_every < 0:
        raise ConfigError("--workers must be >= 1 and --check-every >= 0")
    for name in ("radius_nm", "distance_nm"):
        v = getattr(args, name)
        if v is not None and not v > 0:
            raise ConfigError(f"--{name.replace('_', '-')} must be positive")
    cache = None
    if not args.no_cache:
        cache = EnergyCache(args.cache_dir or os.environ.get("CASIMIR_CACHE_DIR") or "cache")
    return RunConfig(args.command, args, plane, sphere, num, cache)


def _grid(args) -> np.ndarray:
    return np.geomspace(args.l_min_nm, args.l_max_nm, args.points)


def _radii(args, default) -> list[float]:
    if args.radii_nm:
        return list(args.radii_nm)
    if args.radius_nm is not None:
        return [args.radius_nm]
    return list(default)


def _curve(cfg: RunConfig, R: float, Ls):
    return energy_curve(R, Ls, cfg.plane, cfg.sphere, cfg.num, cfg.cache, cfg.args.workers, cfg.args.check_every)


def _energy_fn(cfg: RunConfig, L: float):
    return lambda r: casimir_energy_exact(Geometry(r, L), cfg.plane, cfg.sphere, cfg.num, cfg.cache).energy_ev


def cmd_energy(cfg: RunConfig) -> Table:
    a = cfg.args
    if a.radius_nm is None or a.distance_nm is None:
        raise ConfigError("energy needs --radius-nm and --distance-nm")
    geom = Geometry(a.radius_nm, a.distance_nm)
    res = casimir_energy_exact(geom, cfg.plane, cfg.sphere, NumericsSpec(**{**asdict(cfg.num), "refine": True}), cfg.cache)
    if a.dump_block:
        block = roundtrip_block(geom.R, geom.L, cfg.plane, cfg.sphere, 1.0 / geom.script_L, a.dump_m, res.lmax_used, cfg.num.x_nodes)
        dump_block_csv(block, a.dump_block)
    row = [geom.L, geom.R, res.energy_ev, res.energy_natural, res.lmax_used, res.m_used, res.rel_err_estimate, res.converged]
    cols = ["L_nm", "R_nm", "E_eV", "E_hbar_c_per_nm", "lmax_used", "m_used", "rel_err_estimate", "converged"]
    return Table(cols, [row], res.converged, {"notes": res.notes, "nodes_used": list(res.nodes_used)})


def cmd_curve(cfg: RunConfig) -> Table:
    rows, ok = [], True
    Ls = _grid(cfg.args)
    for R in _radii(cfg.args, [10.0]):
        c = _curve(cfg, R, Ls)
        nu = slope_nu(c, check_monotonic=False)
        F = force(c)
        for L, r, f, v in zip(Ls, c.results, F, nu):
            rows.append([L, R, r.energy_ev, f, v, r.converged])
            ok &= r.converged
    return Table(["L_nm", "R_nm", "E_eV", "F_eV_per_nm", "nu", "converged"], rows, ok)


def cmd_slopes(cfg: RunConfig) -> Table:
    rows, ok = [], True
    Ls = _grid(cfg.args)
    for R in _radii(cfg.args, [10.0]):
        c = _curve(cfg, R, Ls)
        nu = slope_nu(c, check_monotonic=False)
        for L, r, v in zip(Ls, c.results, nu):
            rows.append([L, R, r.energy_ev, v, slope_mu(_energy_fn(cfg, L), R), r.converged])
            ok &= r.converged
    return Table(["L_nm", "R_nm", "E_eV", "nu", "mu", "converged"], rows, ok)


def cmd_ratios(cfg: RunConfig) -> Table:
    rows, ok = [], True
    Ls = _grid(cfg.args)
    coeff = coefficients(cfg.plane, cfg.sphere, with_c3_prime=False)
    for R in _radii(cfg.args, [10.0]):
        c = _curve(cfg, R, Ls)
        rat = ratio_curves(R, Ls, cfg.plane, cfg.sphere, coeff=coeff, curve=c)
        for (L, r_cp, r_vdw), res in zip(rat, c.results):
            rows.append([L, R, res.energy_ev, r_cp, r_vdw, res.converged])
            ok &= res.converged
    return Table(["L_nm", "R_nm", "E_eV", "E_over_Ecp_bar", "E_over_Evdw_bar", "converged"], rows, ok)


def cmd_asymptotics(cfg: RunConfig) -> Table:
    a = cfg.args
    c = coefficients(cfg.plane, cfg.sphere)
    cols = ["c3_eV", "c4_eV_nm", "L_star_nm", "c3_prime_eV", "c3_prime_over_c3", "alpha0"]
    row = [c.c3, c.c4, c.L_star, c.c3_prime, c.c3_prime / c.c3, c.alpha0]
    if a.radius_nm is not None and a.distance_nm is not None:
        R, L = a.radius_nm, a.distance_nm
        e_cp, e_vdw = power_laws(c, R, L)
        h_vdw, h_cp = hamaker_energies(c, R, L)
        e1 = casimir_polder_integral(R, L, cfg.plane, cfg.sphere, cfg.num)
        cols += ["R_nm", "L_nm", "E_CP_eV", "E_vdW_eV", "E_CP_bar_eV", "E_vdW_bar_eV", "E_1_eV", "E_PFA_eV"]
        row += [R, L, e_cp, e_vdw, h_cp, h_vdw, e1, pfa_energy(R, L, cfg.plane, cfg.sphere)]
    return Table(cols, [row])


def _radius_tag(R: float) -> str:
    return f"R{R:g}nm"


def cmd_figures(cfg: RunConfig) -> Table:
    a = cfg.args
    which = a.figure
    if which == "fig1":
        plane = cfg.plane
        wp = getattr(plane, "omega_p", None) or default_plane().omega_p
        ratio = np.geomspace(1e-3, 1e2, a.points if a.points != 30 else 200)
        xi = ratio * wp
        rows = [[r, x, float(permittivity(cfg.plane, x)), float(permittivity(cfg.sphere, x))] for r, x in zip(ratio, xi)]
        return Table(["xi_over_omega_p", "xi_hat_per_nm", "eps_plane", "eps_sphere"], rows)

    Ls = _grid(a)
    if which == "fig5":
        R = a.radius_nm if a.radius_nm is not None else 10.0
        c = _curve(cfg, R, Ls)
        rat = ratio_curves(R, Ls, cfg.plane, cfg.sphere, curve=c)
        rows = [[L, rc, rv, res.converged] for (L, rc, rv), res in zip(rat, c.results)]
        ok = all(res.converged for res in c.results)
        return Table(["L_nm", "E_over_Ecp_bar", "E_over_Evdw_bar", "converged"], rows, ok)

    radii = _radii(a, FIGURE_RADII) if a.radii_nm else list(FIGURE_RADII)
    curves = [_curve(cfg, R, Ls) for R in radii]
    ok = all(r.converged for c in curves for r in c.results)
    conv = [all(c.results[i].converged for c in curves) for i in range(len(Ls))]
    tags = [_radius_tag(R) for R in radii]
    if which == "fig2":
        cols = ["L_nm"] + [f"absE_eV_{t}" for t in tags] + ["converged"]
        data = [np.abs(c.energy) for c in curves]
    elif which == "fig3":
        # atomic limit: the dipole energy has R^3 as a pure prefactor
        e1 = np.array([casimir_polder_integral(1.0, L, cfg.plane, cfg.sphere, cfg.num) for L in Ls])
        cols = ["L_nm"] + [f"nu_{t}" for t in tags] + ["nu_atomic", "converged"]
        data = [slope_nu(c, check_monotonic=False) for c in curves] + [slope_nu(Ls, e1)]
    else:
        cols = ["L_nm"] + [f"mu_{t}" for t in tags] + ["mu_atomic", "converged"]
        data = [np.array([slope_mu(_energy_fn(cfg, L), R) for L in Ls]) for R in radii]
        data.append(np.full(len(Ls), 3.0))
    rows = [[L] + [d[i] for d in data] + [conv[i]] for i, L in enumerate(Ls)]
    return Table(cols, rows, ok)


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _json_value(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    v = float(v)
    return v if math.isfinite(v) else None


def render(table: Table, fmt: str, provenance: dict) -> str:
    if fmt == "json":
        records = [{c: _json_value(v) for c, v in zip(table.columns, row)} for row in table.rows]
        doc = {"schema": SCHEMA, "provenance": provenance, "records": records}
        doc.update(table.extra)
        return json.dumps(doc, indent=2, sort_keys=False) + "\n"
    buf = io.StringIO()
    buf.write(f"# schema={SCHEMA}\n")
    buf.write("# provenance=" + json.dumps(provenance, sort_keys=True) + "\n")
    buf.write(",".join(table.columns) + "\n")
    for row in table.rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


COMMANDS = {
    "energy": cmd_energy,
    "curve": cmd_curve,
    "slopes": cmd_slopes,
    "ratios": cmd_ratios,
    "asymptotics": cmd_asymptotics,
    "figures": cmd_figures,
}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = make_config(args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "cache-clear":
        if cfg.cache is None:
            print("error: --no-cache given to cache-clear", file=sys.stderr)
            return EXIT_CONFIG
        try:
            n = cfg.cache.clear()
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_IO
        print(f"removed {n} cached records")
        return EXIT_OK

    status = EXIT_OK
    try:
        table = COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SpectralRadiusError, QuadratureError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if not table.converged:
        log.warning("some points did not meet the refinement tolerance")
        status = EXIT_NONCONVERGED

    fmt = args.format or ("json" if args.command in ("energy", "asymptotics") else "csv")
    text = render(table, fmt, cfg.provenance())
    try:
        if args.output:
            with open(args.output, "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO
    return status


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
