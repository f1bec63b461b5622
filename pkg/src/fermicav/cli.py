"""``simulate`` command line front end.

Usage::

    simulate <mode> --config <path|preset:NAME> [--out <path>] [--seed <int>]

Exit codes: 0 success, 1 numerical failure (partial output is flagged),
2 configuration or output-path error.
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from dataclasses import replace
from importlib import resources

import numpy as np

from . import __version__
from .config import MODES, ConfigError, emit_config, load_config, parse_config
from .dynamics import IntegrationError, basin_scan, integrate
from .fermisea import (MomentumGrid, build_fermi_sea, fermi_sea_summary,
                       variational_stability_check)
from .model import gaussian_coefficients, photons_to_y
from .steadystate import (classify_stability, find_branches, sweep_atoms, sweep_pump)

EXIT_OK, EXIT_NUMERIC, EXIT_CONFIG = 0, 1, 2

COLUMNS = {
    "coeffs": ["y", "n_bar", "E", "J", "E1", "J1", "dE", "dJ", "dE1", "dJ1", "valid_tb"],
    "steady": ["n_atoms", "branch_id", "n_bar", "y", "xi", "stability", "valid_tb", "status"],
    "sweep-atoms": ["n_atoms", "branch_id", "n_bar", "y", "xi", "stability", "valid_tb",
                    "status"],
    "sweep-pump": ["eta", "inv_eta", "branch_id", "n_bar", "y", "xi", "stability",
                   "valid_tb", "status"],
    "dynamics": ["t", "re_alpha", "im_alpha", "n_bar", "abs_alpha_sq", "y", "valid_tb"],
    "basins": ["n0", "attractor", "converged", "status", "cluster"],
    "stability-check": ["n_atoms", "b_tilde", "n_bar", "energy", "trials", "n_lower",
                        "min_delta"],
}


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return repr(v) if math.isfinite(v) else ("nan" if math.isnan(v) else repr(v))
    return str(value)


def preset_names() -> list[str]:
    files = resources.files("fermicav") / "presets"
    return sorted(p.name[:-5] for p in files.iterdir() if p.name.endswith(".yaml"))


def read_preset(name: str) -> str:
    path = resources.files("fermicav") / "presets" / f"{name}.yaml"
    if not path.is_file():
        raise ConfigError("--config", f"no preset named {name!r}; have {preset_names()}")
    return path.read_text(encoding="utf-8")


def _valid(y, params) -> bool:
    return bool(np.isfinite(y) and y <= params.y_max)


def _branch_rows(lead, branches, status):
    if not branches:
        return [lead + [None] * 6 + [status]]
    return [lead + [i, b.n_bar, b.y, b.xi, b.stability.value, b.valid_tb, status]
            for i, b in enumerate(branches)]


def _branch_kwargs(opts):
    stability = {"epsilon": opts["epsilon"], "band": opts["band"], "dt": opts["dt"],
                 "t_max": opts["t_max"]}
    return dict(y_lo=opts["y_lo"], y_hi=opts["y_hi"], n_scan=opts["n_scan"],
                classify=opts["classify"], commutator=opts["commutator"],
                stability_kw=stability)


def _traj_kwargs(opts):
    return dict(stride=opts["stride"], commutator=opts["commutator"], rtol=opts["rtol"],
                window=opts["window"], detect_convergence=opts["detect_convergence"])


def compute(cfg):
    """Return (rows, notes, failed) for a validated configuration."""
    p, o = cfg.params, cfg.options
    notes, failed = [], False
    rows = []
    if cfg.mode == "coeffs":
        for y in np.linspace(o["y_start"], o["y_stop"], o["count"]):
            n = 1.0 / (abs(p.u0) * y * y)
            c = gaussian_coefficients(n, p)
            rows.append([c.y, n, c.e_onsite, c.j_onsite, c.e_hop, c.j_hop,
                         c.d_e, c.d_j, c.d_e_hop, c.d_j_hop, _valid(c.y, p)])
    elif cfg.mode == "steady":
        kw = _branch_kwargs(o)
        summary = fermi_sea_summary(p.n_atoms, p.n_sites)
        branches = find_branches(summary, p, kw["y_lo"], kw["y_hi"], kw["n_scan"],
                                 kw["commutator"])
        if kw["classify"]:
            branches = [classify_stability(b, summary, p, **kw["stability_kw"])
                        for b in branches]
        rows = _branch_rows([p.n_atoms], branches, "ok" if branches else "no_roots")
    elif cfg.mode in ("sweep-atoms", "sweep-pump"):
        kw = _branch_kwargs(o)
        if cfg.mode == "sweep-atoms":
            table = sweep_atoms(p, o["n_list"], **kw)
        else:
            table = sweep_pump(p, o["eta_list"], **kw)
        for row in table:
            failed |= row.status.startswith("error")
            if cfg.mode == "sweep-atoms":
                lead = [int(row.value)]
            else:
                lead = [row.value, 1.0 / row.value if row.value else math.inf]
            rows.extend(_branch_rows(lead, row.branches, row.status))
    elif cfg.mode == "dynamics":
        summary = fermi_sea_summary(p.n_atoms, p.n_sites)
        try:
            traj = integrate(o["n0"], summary, p, o["dt"], o["t_max"], **_traj_kwargs(o))
        except IntegrationError as exc:
            notes.append(f"status: failed ({exc})")
            return rows, notes, True
        notes.append(f"status: {traj.status}")
        notes.append(f"attractor: {fmt(traj.attractor)}")
        notes.append(f"max_truncation_gap: {fmt(float(np.max(traj.truncation_gap)))}")
        for t, a, n in zip(traj.times, traj.alpha, traj.n_bar):
            y = float(photons_to_y(n, p.u0)) if (p.u0 and n > 0) else math.inf
            rows.append([t, a.real, a.imag, n, abs(a) ** 2, y, _valid(y, p)])
    elif cfg.mode == "basins":
        summary = fermi_sea_summary(p.n_atoms, p.n_sites)
        scan = basin_scan(o["n0_list"], summary, p, o["dt"], o["t_max"],
                          merge_rtol=o["merge_rtol"], **_traj_kwargs(o))
        notes.append("attractors: " + ", ".join(fmt(a) for a in scan.attractors))
        for r in scan.rows:
            failed |= r.status.startswith("error")
            rows.append([r.n0, r.attractor, r.converged, r.status, r.cluster])
    elif cfg.mode == "stability-check":
        grid = MomentumGrid(p.n_sites)
        state = build_fermi_sea(p.n_atoms, grid)
        coeffs = gaussian_coefficients(o["n_bar"], p)
        rep = variational_stability_check(state, coeffs, p, o["trials"], cfg.seed)
        rows.append([p.n_atoms, fermi_sea_summary(p.n_atoms, p.n_sites).b_tilde, o["n_bar"],
                     rep.reference_energy, rep.trials, rep.n_lower, rep.min_delta])
    return rows, notes, failed


def render(cfg, rows, notes) -> str:
    buf = io.StringIO()
    buf.write(f"# fermicav {__version__}\n")
    buf.write(f"# mode: {cfg.mode}\n")
    buf.write(f"# seed: {cfg.seed}\n")
    buf.write("# config:\n")
    for line in emit_config(cfg).splitlines():
        buf.write(f"#   {line}\n")
    for note in notes:
        buf.write(f"# {note}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS[cfg.mode])
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def config_from_header(text: str):
    """Rebuild the RunConfig recorded in the header of a CSV produced by :func:`render`."""
    lines, inside = [], False
    for line in text.splitlines():
        if not line.startswith("#"):
            break
        if line == "# config:":
            inside = True
        elif inside and line.startswith("#   "):
            lines.append(line[4:])
        else:
            inside = False
    if not lines:
        raise ConfigError("<header>", "no recorded configuration")
    return parse_config("\n".join(lines))


def run(cfg, out=None) -> int:
    """Execute ``cfg`` and write the CSV to ``out`` (path) or stdout."""
    target = out or cfg.output
    handle = None
    if target:
        try:
            handle = open(target, "w", encoding="utf-8", newline="")
        except OSError as exc:
            print(f"error: cannot write {target}: {exc}", file=sys.stderr)
            return EXIT_CONFIG
    try:
        try:
            rows, notes, failed = compute(cfg)
        except (ValueError, ArithmeticError) as exc:
            rows, notes, failed = [], [f"status: failed ({exc})"], True
        text = render(cfg, rows, notes)
        (handle or sys.stdout).write(text)
    finally:
        if handle:
            handle.close()
    return EXIT_NUMERIC if failed else EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="simulate", description=__doc__.split("\n")[0])
    parser.add_argument("mode", choices=MODES)
    parser.add_argument("--config", required=True,
                        help="YAML run configuration, or preset:NAME for a shipped preset")
    parser.add_argument("--out", help="CSV destination (default: config output or stdout)")
    parser.add_argument("--seed", type=int, help="override the configuration seed")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        if args.config.startswith("preset:"):
            cfg = parse_config(read_preset(args.config[len("preset:"):]))
        else:
            cfg = load_config(args.config)
        if cfg.mode != args.mode:
            raise ConfigError("mode", f"config is for '{cfg.mode}', command asked for "
                                      f"'{args.mode}'")
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("--seed", "must be >= 0")
            cfg = replace(cfg, seed=args.seed)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(cfg, args.out)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
