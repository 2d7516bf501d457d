"""``qlm analyze|sequence|verify|level --config <path>``.

Exit codes: 0 when every check passes, 1 when an inequality or invariant
fails beyond tolerance, 2 on configuration errors.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import warnings
from dataclasses import dataclass, field as dc_field

from ._validation import ConfigError, QLMError
from .families import FamilySpec, instantiate

DEFAULT_CONFIG = {
    "family": {"kind": "schwarzschild", "n": 3, "R": 8.0, "params": {"m": 1.0}},
    "mode": "analytic",
    "grid": {"resolution": 64, "source": "analytic", "boundary": "one-sided"},
    "ladder": {"K": 200},
    "xi": 1.0,
    "tolerances": {},
    "out": "qlm-out",
    "sequence": {"param": "m", "values": [0.2, 0.1, 0.05, 0.025, 0.0125]},
    "heights": None,
    "verify": {"invariants": None, "sweep_R": 16.0},
}

_TOP_KEYS = set(DEFAULT_CONFIG)


@dataclass
class RunConfig:
    family: FamilySpec
    mode: str = "analytic"
    resolution: int = 64
    source: str = "analytic"
    boundary: str = "one-sided"
    K: int = 200
    xi: float = 1.0
    tolerances: dict = dc_field(default_factory=dict)
    out: str = "qlm-out"
    sequence: object = None
    heights: list | None = None
    invariants: list | None = None
    sweep_R: float = 16.0

    def instantiate(self, spec=None):
        return instantiate(spec or self.family, mode=self.mode, resolution=self.resolution, source=self.source,
                           boundary=self.boundary)

    def tol(self, name, default):
        t = self.tolerances
        return float(t.get(name, t.get("all", default)))


def _positive(x, what):
    try:
        v = float(x)
    except (TypeError, ValueError):
        raise ConfigError(f"{what} must be a number") from None
    if not (math.isfinite(v) and v > 0):
        raise ConfigError(f"{what} must be positive, got {x!r}")
    return v


def load_config(path=None, overrides=None) -> RunConfig:
    raw = json.loads(json.dumps(DEFAULT_CONFIG))
    if path is not None:
        try:
            with open(path) as fh:
                user = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        if not isinstance(user, dict):
            raise ConfigError("config must be a JSON object")
        extra = set(user) - _TOP_KEYS
        if extra:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(extra))}")
        for k, v in user.items():
            if isinstance(v, dict) and isinstance(raw.get(k), dict) and k != "family":
                raw[k].update(v)
            else:
                raw[k] = v
    o = overrides or {}
    fam = dict(raw["family"])
    if o.get("family"):
        if o["family"] != fam.get("kind"):
            fam["params"] = {}
        fam["kind"] = o["family"]
    if o.get("dim") is not None:
        fam["n"] = o["dim"]
    if o.get("resolution") is not None:
        raw["grid"]["resolution"] = o["resolution"]
    if o.get("xi") is not None:
        raw["xi"] = o["xi"]
    if o.get("out"):
        raw["out"] = o["out"]

    spec = FamilySpec.from_dict(fam)
    grid = raw["grid"] or {}
    res = int(grid.get("resolution", 64))
    if res < 8:
        raise ConfigError("grid resolution must be >= 8")
    K = int((raw["ladder"] or {}).get("K", 200))
    if K < 16:
        raise ConfigError("ladder K must be >= 16")
    mode = raw["mode"]
    if mode not in ("analytic", "grid"):
        raise ConfigError("mode must be 'analytic' or 'grid'")
    xi = float(raw["xi"])
    if not xi >= 1:
        raise ConfigError("xi must be >= 1")
    tols = raw["tolerances"] or {}
    if not isinstance(tols, dict):
        raise ConfigError("tolerances must be an object")
    for k, v in tols.items():
        try:
            fv = float(v)
        except (TypeError, ValueError):
            raise ConfigError(f"tolerance {k!r} must be a number") from None
        if not (math.isfinite(fv) and fv >= 0):
            raise ConfigError(f"tolerance {k!r} must be >= 0")
    ver = raw["verify"] or {}
    heights = raw["heights"]
    if heights is not None and not isinstance(heights, list):
        raise ConfigError("heights must be a list")
    return RunConfig(spec, mode, res, grid.get("source", "analytic"), grid.get("boundary", "one-sided"), K, xi,
                     dict(tols), str(raw["out"]), raw["sequence"], heights, ver.get("invariants"),
                     _positive(ver.get("sweep_R", 16.0), "verify.sweep_R"))


# --------------------------------------------------------------------------- subcommands

def _outdir(cfg):
    os.makedirs(cfg.out, exist_ok=True)
    return cfg.out


def cmd_analyze(cfg: RunConfig) -> int:
    from .flat import decompose, flat_bound
    from .geometry import check_admissibility
    from .level_sets import area_profile
    from .mass import mass_report
    from .reports import write_json
    from .stability import stability_report

    g = cfg.instantiate()
    adm = check_admissibility(g)
    mrep = mass_report(g, K=cfg.K, tol=cfg.tol("mass", 0.01))
    prof = area_profile(g, K=cfg.K)
    srep = stability_report(g, xi=cfg.xi, K=cfg.K, tol=cfg.tol("ode", 1e-6))
    lb = flat_bound(g, xi=cfg.xi)
    dec = decompose(g, lb.h_o)

    admissible = adm.verdict == "pass"
    checks = {"admissibility": adm.verdict != "fail", "vol_graph_ge_vol_U": bool(srep.volume["lower_ok"])}
    if admissible:
        mk_tol = cfg.tol("minkowski", 0.005)
        defs = [d for d, r, c in zip(mrep.minkowski_deficit, mrep.regular, mrep.mean_convex) if r and c]
        checks["mass_dominates_L"] = bool(mrep.mass_dominates_L)
        checks["minkowski"] = all(d >= -mk_tol for d in defs)
        checks["area_monotone"] = prof.monotonicity_violation() <= cfg.tol("area", 0.01)
        checks["area_bounded_by_boundary"] = prof.boundary_excess() <= cfg.tol("area", 0.01)
        if mrep.L_monotone is not None:
            checks["L_monotone"] = bool(mrep.L_monotone)
        if mrep.penrose is not None:
            checks["penrose"] = mrep.penrose["margin"] > 0
        if srep.ode is not None:
            checks["ode_comparison"] = bool(srep.ode["ok"])
    status = 0 if all(checks.values()) else 1

    out = _outdir(cfg)
    write_json(os.path.join(out, "admissibility.json"), adm)
    write_json(os.path.join(out, "mass.json"), mrep)
    mrep.to_csv(os.path.join(out, "mass.csv"))
    prof.to_csv(os.path.join(out, "area_profile.csv"))
    write_json(os.path.join(out, "stability.json"), srep)
    write_json(os.path.join(out, "flat.json"), {"decomposition": dec, "bound": lb})
    write_json(os.path.join(out, "report.json"), {"family": cfg.family.to_dict(), "mode": cfg.mode,
                                                  "checks": checks, "exit": status})
    return status


def _check_ladder(cfg):
    lad = cfg.sequence
    if lad is None:
        raise ConfigError("sequence needs a parameter ladder")
    entries = lad.get("values", []) if isinstance(lad, dict) else lad
    if not isinstance(entries, list) or not entries:
        raise ConfigError("empty parameter ladder")
    if isinstance(lad, list):
        for e in lad:
            if not isinstance(e, dict):
                raise ConfigError("ladder entries must be parameter objects")
            if e.get("kind", cfg.family.kind) != cfg.family.kind or e.get("n", cfg.family.n) != cfg.family.n:
                raise ConfigError("a sequence must use a single family; mixed kinds or dimensions given")
        return [{k: v for k, v in e.items() if k not in ("kind", "n")} for e in lad]
    return lad


def cmd_sequence(cfg: RunConfig) -> int:
    from .flat import convergence_run
    from .reports import write_dat, write_gnuplot, write_json
    from .stability import stability_sweep

    ladder = _check_ladder(cfg)
    run = convergence_run(cfg.family, ladder, xi=cfg.xi, mode=cfg.mode, resolution=cfg.resolution)
    sweep = None
    if cfg.family.n >= 3 and all(m > 0 for m in run.m_BY):
        sweep = stability_sweep(cfg.family, ladder, xi=cfg.xi, mode=cfg.mode, resolution=cfg.resolution,
                                tol=cfg.tol("ode", 1e-6), K=cfg.K)
    out = _outdir(cfg)
    run.to_csv(os.path.join(out, "sequence.csv"))
    write_json(os.path.join(out, "sequence.json"), run.summary())
    dat = os.path.join(out, "dF_vs_m.dat")
    write_dat(dat, run.dat_rows(), "log m_BY  log dF_bound")
    ratio = os.path.join(out, "dF_over_sup.dat")
    write_dat(ratio, list(zip(run.ladder, run.dF_over_sup)), f"{run.param}  dF_bound / sup distance")
    write_gnuplot(os.path.join(out, "plot_dF.gp"), [dat], "log m_BY", "log d_F bound")
    status = 0
    if sweep is not None:
        sweep.to_csv(os.path.join(out, "stability_sweep.csv"))
        status = 0 if sum(sweep.Y_violations) == 0 else 1
    return status


def cmd_verify(cfg: RunConfig) -> int:
    from .reports import write_json
    from .suites import INVARIANTS, run_invariant

    names = list(INVARIANTS) if cfg.invariants is None else list(cfg.invariants)
    unknown = [n for n in names if n not in INVARIANTS]
    if unknown:
        raise ConfigError(f"unknown invariant(s): {', '.join(map(str, unknown))}")
    extra = set(cfg.tolerances) - set(INVARIANTS) - {"all"}
    if extra:
        raise ConfigError(f"tolerances for unknown invariant(s): {', '.join(sorted(extra))}")
    results = []
    for n in names:
        tol = cfg.tolerances.get(n, cfg.tolerances.get("all"))
        results.append(run_invariant(n, cfg, tol))
    out = _outdir(cfg)
    write_json(os.path.join(out, "verify.json"),
               {"results": [r.to_dict() for r in results], "passed": all(r.passed for r in results)})
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}  value={r.value:.6g}  tol={r.tolerance:.6g}")
    return 0 if all(r.passed for r in results) else 1


def cmd_level(cfg: RunConfig) -> int:
    from .level_sets import default_ladder, extract_level_set, first_variation, regularity_threshold
    from .mass import MeanConvexityWarning, brown_york_mass, lam_functional, minkowski_check
    from .reports import write_csv
    from ._validation import check_heights

    g = cfg.instantiate()
    heights = default_ladder(g, cfg.K) if cfg.heights is None else check_heights(cfg.heights)
    eps = regularity_threshold(g)
    sets = [extract_level_set(g, h, eps_reg=eps) for h in heights]
    rows = []
    for i, ls in enumerate(sets):
        nan = float("nan")
        vfd = nan
        if 0 < i < len(sets) - 1 and sets[i - 1].regular and sets[i + 1].regular and len(sets) == len(heights):
            vfd = (sets[i + 1].area - sets[i - 1].area) / (sets[i + 1].height - sets[i - 1].height)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", MeanConvexityWarning)
            m, L = brown_york_mass(ls), lam_functional(ls)
        vvar = first_variation(ls) if ls.regular else nan
        mk = minkowski_check(ls).relative_deficit if ls.mean_convex and not ls.empty else nan
        rows.append((float(ls.height), ls.area, vfd, vvar, m, L, mk, bool(ls.regular)))
    out = _outdir(cfg)
    write_csv(os.path.join(out, "level.csv"),
              ["h", "V", "Vprime_fd", "Vprime_var", "m_BY", "L", "minkowski_deficit", "regular"], rows)
    return 0


COMMANDS = {"analyze": cmd_analyze, "sequence": cmd_sequence, "verify": cmd_verify, "level": cmd_level}


def build_parser():
    p = argparse.ArgumentParser(prog="qlm", description="Quasi-local mass and stability diagnostics for graphs.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", help="JSON run configuration (built-in defaults if omitted)")
    p.add_argument("--resolution", type=int)
    p.add_argument("--xi", type=float)
    p.add_argument("--out")
    p.add_argument("--dim", type=int)
    p.add_argument("--family")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and 2
    try:
        cfg = load_config(args.config, {"resolution": args.resolution, "xi": args.xi, "out": args.out,
                                        "dim": args.dim, "family": args.family})
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"qlm: configuration error: {exc}", file=sys.stderr)
        return 2
    except QLMError as exc:
        print(f"qlm: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
