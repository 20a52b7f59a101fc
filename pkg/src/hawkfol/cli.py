"""Batch command-line front end: config in, JSON/CSV out.

Subcommands: energy | solve | foliate | smallsphere | check.
Exit codes: 0 ok, 2 config error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .background import preset
from .errors import ContinuationBroken, HawkfolError
from .functionals import hawking_energy
from .grid import SphereGrid
from .harmonics import HarmonicField
from .reduction import (CriticalSurfaceSolution, FoliationTrace, foliate,
                        solve_critical)
from .smallsphere import SpacetimeCurvatureAtPoint, comparison_report
from .surface import geodesic_sphere, graph_surface


class ConfigError(Exception):
    pass


_SECTIONS = {
    "preset": {"name", "params"},
    "grid": {"n_theta", "n_phi", "band_limit"},
    "surface": {"center", "tau", "radius", "phi_coeffs", "phi_band_limit"},
    "solve": {"center", "radius", "band_limit", "tol", "max_iter"},
    "foliate": {"center", "r_min", "r_max", "n_steps", "band_limit", "tol",
                "max_iter", "resume"},
    "smallsphere": {"rm4", "ric4", "sc4", "k", "l_values", "sample_direction"},
}


def _validate(config: dict) -> None:
    if not isinstance(config, dict):
        raise ConfigError("config root must be a JSON object")
    for key, value in config.items():
        if key not in _SECTIONS:
            raise ConfigError(f"unknown config section {key!r}")
        if not isinstance(value, dict):
            raise ConfigError(f"config section {key!r} must be an object")
        unknown = set(value) - _SECTIONS[key]
        if unknown:
            raise ConfigError(f"unknown keys in section {key!r}: {sorted(unknown)}")


def _config_hash(config: dict) -> str:
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            config = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")
    _validate(config)
    return config


def _dataset(config):
    section = config.get("preset")
    if not section or "name" not in section:
        raise ConfigError("config needs a preset section with a name")
    try:
        return preset(section["name"], **{
            key: (np.asarray(val, dtype=float) if isinstance(val, list) else val)
            for key, val in section.get("params", {}).items()})
    except HawkfolError:
        raise
    except TypeError as exc:
        raise ConfigError(str(exc))


def _grid(config, override=None):
    section = dict(config.get("grid", {}))
    if override:
        section["n_theta"], section["n_phi"] = override
    return SphereGrid(section.get("n_theta", 32), section.get("n_phi", 64),
                      section.get("band_limit"))


def _write_json(out_dir: Path, name: str, payload: dict, config: dict) -> Path:
    payload = {"tool_version": __version__, "config_sha256": _config_hash(config),
               **payload}
    path = out_dir / f"{name}.json"
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1)
    return path


def _write_csv(out_dir: Path, name: str, header, rows, config: dict) -> Path:
    path = out_dir / f"{name}.csv"
    with open(path, "w", newline="") as fh:
        fh.write(f"# hawkfol {__version__} config_sha256={_config_hash(config)}\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    return path


# ----------------------------------------------------------------------
# subcommands
# ----------------------------------------------------------------------

def cmd_energy(config, grid, out_dir, fmt):
    ds = _dataset(config)
    section = config.get("surface")
    if not section or "radius" not in section:
        raise ConfigError("energy needs a surface section with a radius")
    center = section.get("center", [0.0, 0.0, 0.0])
    tau = section.get("tau", [0.0, 0.0, 0.0])
    radius = float(section["radius"])
    phi = None
    if "phi_coeffs" in section:
        band = section.get("phi_band_limit")
        if band is None:
            raise ConfigError("phi_coeffs requires phi_band_limit")
        phi = HarmonicField(np.asarray(section["phi_coeffs"], dtype=float), int(band))
    surf = graph_surface(ds, center, tau, radius, phi, grid)
    report = hawking_energy(surf)
    if fmt in ("json", "both"):
        _write_json(out_dir, "energy_result", {"energy": report.to_dict()}, config)
    if fmt in ("csv", "both"):
        d = report.to_dict()
        _write_csv(out_dir, "energy_result", list(d), [list(d.values())], config)
    print(f"hawking energy: {report.hawking_energy:.12g}  "
          f"(area {report.area:.12g}, willmore {report.willmore_value:.12g})")
    return 0


def cmd_solve(config, grid, out_dir, fmt):
    ds = _dataset(config)
    section = config.get("solve")
    if not section or "radius" not in section:
        raise ConfigError("solve needs a solve section with a radius")
    sol = solve_critical(
        ds, section.get("center", [0.0, 0.0, 0.0]), float(section["radius"]),
        grid=grid, band_limit=int(section.get("band_limit", 8)),
        tol=float(section.get("tol", 1e-7)), max_iter=int(section.get("max_iter", 25)))
    if fmt in ("json", "both"):
        _write_json(out_dir, "solve_result", {"solution": sol.to_dict()}, config)
    if fmt in ("csv", "both"):
        _write_csv(out_dir, "solve_result",
                   ["r", "tau1", "tau2", "tau3", "lambda", "residual_norm",
                    "newton_iterations"],
                   [[sol.r, *sol.tau, sol.lam, sol.residual_norm,
                     sol.newton_iterations]], config)
    print(f"solved r={sol.r:g}: lambda={sol.lam:.10g}, |tau|={np.linalg.norm(sol.tau):.3e}, "
          f"residual={sol.residual_norm:.3e} ({sol.newton_iterations} iterations)")
    return 0


def _trace_rows(trace: FoliationTrace):
    rows = []
    for i in range(trace.r.size):
        rows.append([trace.r[i], *trace.tau[i], trace.lam[i], trace.lapse_min[i],
                     trace.hawking_functional[i], trace.hawking_energy[i],
                     trace.area[i]])
    return rows


_TRACE_HEADER = ["r", "tau1", "tau2", "tau3", "lambda", "lapse_min",
                 "hawking_functional", "hawking_energy", "area"]


def _emit_trace(trace, out_dir, fmt, config, name="foliate_result"):
    if fmt in ("json", "both"):
        _write_json(out_dir, name, {"trace": trace.to_dict()}, config)
    if fmt in ("csv", "both"):
        _write_csv(out_dir, name, _TRACE_HEADER, _trace_rows(trace), config)


def cmd_foliate(config, grid, out_dir, fmt):
    ds = _dataset(config)
    section = config.get("foliate")
    if not section or "r_min" not in section or "r_max" not in section:
        raise ConfigError("foliate needs a foliate section with r_min and r_max")
    warm = None
    if section.get("resume"):
        with open(section["resume"]) as fh:
            previous = json.load(fh)["trace"]["solutions"]
        warm = [CriticalSurfaceSolution(
            r=s["r"], tau=np.asarray(s["tau"]), lam=s["lambda"],
            phi=HarmonicField(np.asarray(s["phi_coeffs"]), s["phi_band_limit"]),
            residual_norm=s["residual_norm"],
            residual_norm_full=s["residual_norm_full"],
            newton_iterations=s["newton_iterations"], converged=s["converged"],
            energy=None) for s in previous]
        # re-attach energies for resumed leaves
        for sol in warm:
            full_phi = HarmonicField(sol.r ** 2 * sol.phi.coeffs, sol.phi.band_limit)
            surf = graph_surface(ds, section.get("center", [0.0, 0.0, 0.0]), sol.tau,
                                 sol.r, full_phi, grid)
            sol.energy = hawking_energy(surf)
    try:
        trace = foliate(ds, section.get("center", [0.0, 0.0, 0.0]),
                        (float(section["r_min"]), float(section["r_max"])),
                        int(section.get("n_steps", 6)), grid=grid,
                        band_limit=int(section.get("band_limit", 8)),
                        tol=float(section.get("tol", 1e-7)),
                        max_iter=int(section.get("max_iter", 25)),
                        warm_start=warm)
    except ContinuationBroken as exc:
        if exc.trace is not None:
            _emit_trace(exc.trace, out_dir, fmt, config, name="foliate_partial")
            print(f"continuation broken: {exc}; partial trace flushed", file=sys.stderr)
        raise
    _emit_trace(trace, out_dir, fmt, config)
    print(f"foliation: {trace.r.size} leaves, lambda(0) ~ {trace.lambda0_extrapolated:.10g}, "
          f"lapse_min {trace.lapse_min.min():.6f}, valid={trace.foliation_valid}")
    return 0


def cmd_smallsphere(config, grid, out_dir, fmt):
    section = config.get("smallsphere")
    if not section or "l_values" not in section:
        raise ConfigError("smallsphere needs a smallsphere section with l_values")
    stc = SpacetimeCurvatureAtPoint.from_components(
        rm4=section.get("rm4"), ric4=section.get("ric4"), sc4=section.get("sc4"),
        k=section.get("k"))
    report = comparison_report(stc, section["l_values"],
                               sample_direction=section.get("sample_direction",
                                                            (1.0, 0.0, 0.0)))
    if np.any(report.no_root):
        print(f"warning: area matching failed for "
              f"{int(np.count_nonzero(report.no_root))} parameter value(s); "
              "rows flagged no_root", file=sys.stderr)
    if fmt in ("json", "both"):
        _write_json(out_dir, "smallsphere_result", {"report": report.to_dict()},
                    config)
    if fmt in ("csv", "both"):
        rows = [[row["l"], row["r"], row["no_root"], row["energy_geodesic"],
                 row["energy_lightcut"], row["excess"], row["h_difference"],
                 row["sc_difference"]] for row in report.rows()]
        _write_csv(out_dir, "smallsphere_result",
                   ["l", "r", "no_root", "E_geo", "E_lc", "excess",
                    "H_G_minus_H_lc", "Sc_G_minus_Sc_lc"], rows, config)
    print(f"excess l^3 coefficient: fitted {report.excess_coefficient_fit:.10g}; "
          f"candidates {report.excess_candidate_quoted:.10g} (quoted) / "
          f"{report.excess_candidate_derived:.10g} (derived)")
    return 0


def cmd_check(config, grid, out_dir, fmt, seed=0):
    """Fast invariant suite: quadrature, transforms, moments, baseline energies."""
    from itertools import combinations_with_replacement

    from .background import preset as mk
    from .harmonics import analyze, biharmonic_apply, moment_value, synthesize

    rng = np.random.default_rng(seed)
    checks = []

    checks.append(("quadrature weights sum to 4 pi",
                   abs(grid.weights.sum() - 4 * np.pi) < 1e-12))

    ok = True
    for deg in range(0, 7):
        for combo in combinations_with_replacement(range(3), deg):
            mono = np.prod(grid.nodes[:, combo], axis=1) if deg else np.ones(grid.n_nodes)
            quad = float(np.sum(grid.weights * mono))
            ok &= abs(quad - moment_value(combo)) < 1e-12
    checks.append(("moment integrals match quadrature to 1e-12", ok))

    coeffs = rng.normal(size=grid.n_coeffs)
    field = HarmonicField(coeffs, grid.band_limit)
    round_trip = analyze(grid, synthesize(field, grid))
    checks.append(("analysis/synthesis roundtrip at 1e-12",
                   np.abs(round_trip.coeffs - coeffs).max() < 1e-12))

    y1 = HarmonicField.from_coeff_dict(grid.band_limit, {(1, 0): 1.0, (1, 1): 0.5})
    checks.append(("biharmonic operator annihilates the kernel",
                   biharmonic_apply(y1).l2_norm() == 0.0))

    flat = mk("flat")
    ok = True
    for r in (0.1, 1.0, 10.0):
        surf = geodesic_sphere(flat, [0, 0, 0], [0, 0, 0], r, grid)
        from .functionals import willmore
        ok &= abs(willmore(surf) - 4 * np.pi) < 1e-10
    checks.append(("flat round spheres have Willmore energy 4 pi", ok))

    from .el_operator import el_residual
    surf = geodesic_sphere(flat, [0, 0, 0], [0, 0, 0], 1.0, grid)
    res = el_residual(flat, surf, 0.0)
    checks.append(("flat-sphere residual vanishes to 1e-9", res.l2_norm < 1e-9))

    failed = [name for name, good in checks if not good]
    for name, good in checks:
        print(f"{'PASS' if good else 'FAIL'}  {name}")
    if fmt in ("json", "both"):
        _write_json(out_dir, "check_result",
                    {"checks": [{"name": n, "passed": bool(g)} for n, g in checks]},
                    config)
    return 0 if not failed else 3


# ----------------------------------------------------------------------
# driver
# ----------------------------------------------------------------------

def _parse_grid_flag(text):
    try:
        n_theta, n_phi = text.lower().split("x")
        return int(n_theta), int(n_phi)
    except ValueError:
        raise ConfigError(f"--grid expects NTHETAxNPHI, got {text!r}")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="hawkfol",
        description="Critical spheres of the Hawking energy: energies, "
                    "foliations and small-sphere comparisons.")
    parser.add_argument("command",
                        choices=["energy", "solve", "foliate", "smallsphere", "check"])
    parser.add_argument("--config", default=None, help="JSON configuration file")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--format", choices=["json", "csv", "both"], default="both")
    parser.add_argument("--grid", default=None, help="override grid as NTHETAxNPHI")
    parser.add_argument("--seed", type=int, default=0,
                        help="seed for randomized invariant checks")
    args = parser.parse_args(argv)

    try:
        config = _load_config(args.config) if args.config else {}
        grid_override = _parse_grid_flag(args.grid) if args.grid else None
        grid = _grid(config, grid_override)
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        if args.command == "energy":
            return cmd_energy(config, grid, out_dir, args.format)
        if args.command == "solve":
            return cmd_solve(config, grid, out_dir, args.format)
        if args.command == "foliate":
            return cmd_foliate(config, grid, out_dir, args.format)
        if args.command == "smallsphere":
            return cmd_smallsphere(config, grid, out_dir, args.format)
        return cmd_check(config, grid, out_dir, args.format, seed=args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (HawkfolError, ValueError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
