"""Command-line front end: config ingestion, stage orchestration, CSV/JSON output.

Subcommands ``solve``, ``barriers``, ``check-identity``, ``penrose-table``,
``decay`` and ``spinor`` run one stage each; ``report`` runs them all and
writes one CSV and one JSON file per stage plus ``report.json``. Stages
recompute the blowup solution they need (deterministically) instead of
reading earlier CSVs, since the solution is cheap and its dense form is
not recoverable from a table.

Output is deterministic: CSV floats use '%.17g', JSON keys are sorted and
non-finite floats become null. MOTSLAB_THREADS caps the BLAS/OpenMP thread
pools; all stages themselves run sequentially.

Exit codes: 0 success, 1 a certificate check failed (``report``), 2 usage or
configuration error, 3 a stage raised.
"""

from __future__ import annotations

import os
import sys

_THREADS = os.environ.get("MOTSLAB_THREADS")
if _THREADS is not None and _THREADS.strip().isdigit() and int(_THREADS) > 0:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, _THREADS.strip())

import argparse
from dataclasses import dataclass, replace
import io
import json
import math
from pathlib import Path

import numpy as np

from .profile_expr import ProfileDomainError, ProfileSyntaxError
from .radial_data import DataError, from_config


SCHEMA_VERSION = 1

# reference values of the Schwarzschild θ table at r/m = 2.001, 2.01, 2.1, 2.5, 3.0
REFERENCE_THETA = (0.3198, 0.3922, 0.5084, 0.6466, 0.7292)
REFERENCE_WINDOW_THETA = 0.5084
REFERENCE_DIRICHLET = 0.6795
REFERENCE_FULL = 1.0193

_TOP_KEYS = {"schema_version", "data", "grids", "tolerances", "output", "seed"}
_GRID_KEYS = {"per_decade", "radii", "penrose_window", "n_window"}
_TOL_KEYS = {"solver", "identity"}
_OUT_KEYS = {"dir", "format"}


class ConfigError(ValueError):
    """Invalid configuration (syntax, unknown keys, bad values)."""


class StageError(RuntimeError):
    def __init__(self, stage, exc):
        super().__init__(f"stage {stage!r} failed: {type(exc).__name__}: {exc}")
        self.stage = stage


@dataclass(frozen=True)
class RunConfig:
    data_entry: dict
    data: object
    per_decade: int = 200
    radii: tuple = None
    penrose_window: tuple = None
    n_window: int = 41
    solver_tol: float = 1e-12
    identity_tol: float = 1e-6
    out: str = None
    format: str = "csv"
    seed: int = 0


# configuration ------------------------------------------------------------

def _strict(obj, allowed, where):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where} must be an object")
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {unknown}")
    return obj


def _positive(value, name, integer=False):
    kind = int if integer else (int, float)
    if isinstance(value, bool) or not isinstance(value, kind) or not value > 0:
        raise ConfigError(f"{name} must be a positive {'integer' if integer else 'number'}, got {value!r}")
    if not integer and not math.isfinite(value):
        raise ConfigError(f"{name} must be finite")
    return value


def _radius_list(values, name):
    if not isinstance(values, (list, tuple)) or not values:
        raise ConfigError(f"{name} must be a non-empty list of radii")
    return tuple(float(_positive(v, name)) for v in values)


def _build_data(entry):
    try:
        return from_config(entry)
    except (DataError, ProfileSyntaxError, ProfileDomainError) as exc:
        raise ConfigError(f"data: {exc}") from exc


def config_from_dict(obj):
    """RunConfig from a parsed JSON object (strict: unknown keys rejected)."""
    _strict(obj, _TOP_KEYS, "config")
    if obj.get("schema_version", SCHEMA_VERSION) != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {obj['schema_version']!r}")
    if "data" not in obj:
        raise ConfigError("config requires a 'data' entry")
    data = _build_data(obj["data"])
    kw = {}
    grids = _strict(obj.get("grids", {}), _GRID_KEYS, "grids")
    if "per_decade" in grids:
        kw["per_decade"] = _positive(grids["per_decade"], "grids.per_decade", integer=True)
    if "radii" in grids:
        kw["radii"] = _radius_list(grids["radii"], "grids.radii")
    if "penrose_window" in grids:
        win = _radius_list(grids["penrose_window"], "grids.penrose_window")
        if len(win) != 2 or not win[0] < win[1]:
            raise ConfigError("grids.penrose_window must be [lo, hi] with lo < hi")
        kw["penrose_window"] = win
    if "n_window" in grids:
        kw["n_window"] = _positive(grids["n_window"], "grids.n_window", integer=True)
    tols = _strict(obj.get("tolerances", {}), _TOL_KEYS, "tolerances")
    if "solver" in tols:
        kw["solver_tol"] = float(_positive(tols["solver"], "tolerances.solver"))
    if "identity" in tols:
        kw["identity_tol"] = float(_positive(tols["identity"], "tolerances.identity"))
    out = _strict(obj.get("output", {}), _OUT_KEYS, "output")
    if "dir" in out:
        if not isinstance(out["dir"], str):
            raise ConfigError("output.dir must be a string")
        kw["out"] = out["dir"]
    if "format" in out:
        if out["format"] not in ("csv", "json"):
            raise ConfigError("output.format must be 'csv' or 'json'")
        kw["format"] = out["format"]
    if "seed" in obj:
        seed = obj["seed"]
        if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        kw["seed"] = seed
    cfg = RunConfig(dict(obj["data"]), data, **kw)
    _check_nesting(cfg)
    return cfg


def _check_nesting(cfg):
    r_min = cfg.data.r_min
    for name, radii in (("radii", cfg.radii), ("penrose_window", cfg.penrose_window)):
        if radii is not None and min(radii) <= r_min:
            raise ConfigError(f"grids.{name} must lie inside the data domain r > {r_min!r}")


def validate_config(path):
    """Read, parse and check a JSON config file."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"JSON syntax error at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return config_from_dict(obj)


def config_from_args(args):
    if args.config is not None:
        cfg = validate_config(args.config)
        if args.family is not None or args.mass is not None:
            raise ConfigError("--family/--mass cannot be combined with --config")
    else:
        family = args.family or "schwarzschild"
        if family == "schwarzschild":
            entry = {"family": family, "mass": 1.0 if args.mass is None else args.mass}
        elif family == "flat":
            entry = {"family": family}
        else:
            raise ConfigError("custom data needs --config with F, k_nn, k_tan and r_min")
        cfg = RunConfig(entry, _build_data(entry))
    kw = {}
    if args.radii is not None:
        try:
            kw["radii"] = tuple(float(x) for x in args.radii.split(",") if x.strip())
        except ValueError as exc:
            raise ConfigError(f"--radii: {exc}") from exc
        _radius_list(list(kw["radii"]), "--radii")
    if args.tol is not None:
        kw["solver_tol"] = float(_positive(args.tol, "--tol"))
    if args.out is not None:
        kw["out"] = args.out
    if args.format is not None:
        kw["format"] = args.format
    cfg = replace(cfg, **kw)
    _check_nesting(cfg)
    return cfg


# serialization ------------------------------------------------------------

def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def dumps_json(obj):
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def format_csv(columns, rows):
    buf = io.StringIO()
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join("%.17g" % float(x) for x in row) + "\n")
    return buf.getvalue()


# stages -------------------------------------------------------------------

def _check(name, value, threshold, passed):
    return {"name": name, "value": value, "threshold": threshold, "pass": bool(passed)}


class Pipeline:
    """Lazily computed shared state of one run."""

    def __init__(self, cfg):
        self.cfg = cfg
        self.data = cfg.data
        self._cache = {}

    def _get(self, key, fn):
        if key not in self._cache:
            self._cache[key] = fn()
        return self._cache[key]

    @property
    def chart(self):
        from .foliation import build_chart
        return self._get("chart", lambda: build_chart(self.data))

    @property
    def sol(self):
        from .jang_radial import solve_blowup
        return self._get("sol", lambda: solve_blowup(
            self.data, tol=self.cfg.solver_tol, per_decade=self.cfg.per_decade, chart=self.chart))

    @property
    def mass_scale(self):
        """m for Schwarzschild data (reference values scale with it), else None."""
        if self.data.label == "schwarzschild":
            return self.data.params["mass"]
        return None

    @property
    def decay(self):
        from .cylinder_decay import fit_decay_constants, to_cylinder
        return self._get("decay", lambda: (lambda cg: (cg, fit_decay_constants(cg)))(to_cylinder(self.sol)))

    # each stage returns (tables, summary, checks, references)

    def stage_solve(self):
        from .jang_radial import verify_blowup_rate
        sol = self.sol
        rate = verify_blowup_rate(sol, window=(1e-6 * sol.r_h / 2, 1e-3 * sol.r_h / 2))
        summary = {"data": self.data.to_config(), "r_h": sol.r_h, "lambda": sol.lam,
                   "chart": self.chart.to_dict(), "far_field": list(sol.far_field),
                   "normalization": sol.normalization,
                   "blowup_rate": {"slope": rate.slope, "expected": rate.expected,
                                   "sup_deviation": rate.sup_bounded, "window": list(rate.window),
                                   "samples": rate.samples}}
        rel = abs(rate.slope / rate.expected - 1)
        checks = [_check("blowup_rate", rel, 0.01, rel <= 0.01)]
        refs = []
        m = self.mass_scale
        if m is not None:
            dev = abs(sol.lam * m * m - 0.25)
            refs.append(_check("lambda_m2_quarter", sol.lam * m * m, 1e-6, dev <= 1e-6))
        return {"solution": (sol.columns, sol.rows())}, summary, checks, refs

    def stage_barriers(self):
        from .barriers import build_W, certify_w_eps, find_constants, sandwich_check, upper_bound_check
        data, chart, sol = self.data, self.chart, self.sol
        cert = certify_w_eps(data, chart)
        consts = find_constants(data, chart)
        sandwich = sandwich_check(sol, consts, strict=False)
        r, _ = chart.points_at([(1 + cert.alpha) * cert.eps0])
        W = build_W(0.5, cert.eps0, cert.alpha, float(sol.height(r)[0]))
        w_margin = upper_bound_check(sol, W)
        sel = sol.tau <= sandwich.s1
        s = sol.tau[sel]
        base = sandwich_base(sol, sandwich.s1)[sel]
        rows = np.column_stack([s, sol.f[sel], base + consts.a_sub * (s - sandwich.s1),
                                base + consts.a_super * (s - sandwich.s1)])
        summary = {"w_eps": cert.to_dict(), "constants": consts.to_dict(),
                   "sandwich": sandwich.to_dict(), "iterated_W_margin": w_margin}
        checks = [
            _check("w_eps_supersolution", cert.worst, 0.0, cert.worst < 0),
            _check("v_super_sign", consts.worst_super, 0.0, consts.worst_super <= 0),
            _check("v_sub_sign", consts.worst_sub, 0.0, consts.worst_sub >= 0),
            _check("sandwich", min(sandwich.upper_margin, sandwich.lower_margin), 0.0,
                   min(sandwich.upper_margin, sandwich.lower_margin) >= 0),
            _check("gradient_corollary", sandwich.gradient_margin, 0.0, sandwich.gradient_margin >= 0),
            _check("iterated_W_upper_bound", w_margin, 0.0, w_margin >= 0),
        ]
        return {"sandwich": (("s", "f", "lower", "upper"), rows)}, summary, checks, []

    def stage_identity(self):
        from .slice_geometry import SLICE_COLUMNS, dominant_energy_margins, sample_slice
        sol = self.sol
        r = sol.r_h * np.geomspace(1.005, 25.0, 200)
        samples = sample_slice(self.data, sol, r)
        rows = np.array([s.row() for s in samples])
        ratio = np.abs(rows[:, 6]) / (1 + np.abs(rows[:, 5]))
        minus, plus = dominant_energy_margins(self.data, sol, r)
        tol = self.cfg.identity_tol
        summary = {"radii": [float(r[0]), float(r[-1])], "samples": int(r.size),
                   "max_relative_residual": float(ratio.max()),
                   "min_Rbar_plus_2divq_minus_2q2": float(np.min(plus)),
                   "min_Rbar_minus_2divq_minus_2q2": float(np.min(minus))}
        checks = [
            _check("scalar_identity", float(ratio.max()), tol, ratio.max() <= tol),
            _check("dominant_energy_corrected", float(np.min(plus)), -1e-8, np.min(plus) >= -1e-8),
        ]
        refs = [_check("dominant_energy_literal", float(np.min(minus)), 0.0, np.min(minus) >= 0)]
        return {"slice": (SLICE_COLUMNS, rows)}, summary, checks, refs

    def stage_penrose(self):
        from .penrose import (capacity_sigma, harmonic_trial, implied_sigma, penrose_report,
                              random_trials, rayleigh_quotient, schwarzschild_C)
        sol, data = self.sol, self.data
        _, consts = self.decay
        report = penrose_report(sol, decay=consts, radii=self.cfg.radii,
                                window=self.cfg.penrose_window, n_window=self.cfg.n_window)
        rows = np.array([row.row() for row in report.rows])
        summary = report.to_dict()
        r0 = 1.05 * sol.r_h
        sigma = capacity_sigma(data, sol, r0)
        f, df = harmonic_trial(data, sol, r0)
        harmonic = rayleigh_quotient(data, sol, r0, f, df)
        trials = min(rayleigh_quotient(data, sol, r0, g, dg)
                     for g, dg in random_trials(r0, n=20, seed=self.cfg.seed))
        summary["capacity"] = {"r0": r0, "sigma": sigma, "harmonic_quotient": harmonic,
                               "min_random_quotient": trials, "seed": self.cfg.seed}
        bounded = math.isfinite(report.mass_bound)
        checks = [
            _check("capacity_harmonic", abs(harmonic / sigma - 1), 1e-6, abs(harmonic / sigma - 1) <= 1e-6),
            _check("capacity_random_trials", trials - sigma, -1e-4, trials >= sigma - 1e-4),
            _check("penrose_condition", report.conditions.holding, "condition1|condition2",
                   report.conditions.any_holds),
            _check("mass_bound_below_adm", report.slack if bounded else None, 0.0,
                   bounded and report.slack > 0),
        ]
        refs = []
        m = self.mass_scale
        if m is not None and self.cfg.radii is None:
            for row, ref in zip(report.rows, REFERENCE_THETA):
                x = row.r / m
                refs.append(dict(_check(f"theta_table_r{x:g}", row.theta, 5e-3,
                                        abs(row.theta - ref) <= 5e-3),
                                 reference=ref,
                                 sigma_ratio_to_reference=row.sigma / implied_sigma(x, ref, float(schwarzschild_C(x)))))
            if self.cfg.penrose_window is None:
                refs.append(dict(_check("theta_window", report.theta, 5e-3,
                                        abs(report.theta - REFERENCE_WINDOW_THETA) <= 5e-3),
                                 reference=REFERENCE_WINDOW_THETA))
        return {"penrose": (("r", "C", "sigma", "theta"), rows)}, summary, checks, refs

    def stage_decay(self):
        from .cylinder_decay import CYLINDER_COLUMNS, cylinder_rows, foliation_C, gradient_bounds_check
        sol = self.sol
        cg, consts = self.decay
        grad = gradient_bounds_check(sol, consts, strict=False)
        fol = foliation_C(sol)
        summary = {"constants": consts.to_dict(), "z_bar": cg.z_bar, "s0": cg.s0,
                   "gradient": grad.to_dict(),
                   "foliation_C": {"alpha1": fol.alpha1, "alpha2": fol.alpha2, "window": list(fol.window)}}
        limit = grad.s_limit * math.sqrt(sol.lam)
        checks = [
            _check("decay_rate", consts.relative_rate_error, 0.01, consts.relative_rate_error <= 0.01),
            _check("gradient_bounds", min(grad.lower_margin, grad.upper_margin), 0.0, grad.holds),
            _check("s_dsf_limit", abs(limit - 1), 0.02, abs(limit - 1) <= 0.02),
        ]
        return {"cylinder": (CYLINDER_COLUMNS, cylinder_rows(cg, consts))}, summary, checks, []

    def stage_spinor(self):
        from .spinor import (SPINOR_COLUMNS, boundary_dirac_eigenvalue, dirichlet_energy, frame_check,
                             full_spinor_energy, h_profile)
        sol, data = self.sol, self.data
        profile = h_profile(data, sol)
        dirichlet = dirichlet_energy(profile)
        literal = dirichlet_energy(profile, weight="sqrt")
        full = full_spinor_energy(profile, data, sol)
        frame = [frame_check(profile, sol.r_h * x, th, ph, 0.6, 0.8j)
                 for x in (1 + 1e-6, 1.001, 1.5, 6.0) for th, ph in ((0.4, 0.3), (2.2, 4.0))]
        frame_res = max(f[0] for f in frame)
        density = max(abs(f[1] / f[2] - 1) for f in frame if f[2] > 0)
        ode = profile.ode_residual()
        summary = {"dirichlet": dirichlet.to_dict(), "dirichlet_sqrt_weight": literal.to_dict(),
                   "full_energy_over_4pi": full.to_dict(), "frame_residual": frame_res,
                   "density_mismatch": density, "ode_residual": ode,
                   "boundary_dirac_eigenvalue": boundary_dirac_eigenvalue(sol.r_h),
                   "tail_mass": profile.tail_mass}
        checks = [
            _check("spinor_ode_residual", ode, 1e-8, ode <= 1e-8),
            _check("dirac_frame_residual", frame_res, 1e-8, frame_res <= 1e-8),
            _check("energy_dominance", full.limit - dirichlet.limit, 0.0, full.limit >= dirichlet.limit),
        ]
        refs = []
        m = self.mass_scale
        if m is not None:
            refs.append(dict(_check("dirichlet_limit", dirichlet.limit / m, 1e-3,
                                    abs(dirichlet.limit / m - REFERENCE_DIRICHLET) <= 1e-3),
                             reference=REFERENCE_DIRICHLET))
            refs.append(dict(_check("full_energy_limit", full.limit / m, 5e-3,
                                    abs(full.limit / m - REFERENCE_FULL) <= 5e-3),
                             reference=REFERENCE_FULL))
        return {"spinor": (SPINOR_COLUMNS, profile.rows())}, summary, checks, refs


def sandwich_base(sol, s1):
    i1 = int(np.nonzero(sol.tau <= s1)[0][-1])
    return sol.f[i1] - np.log(sol.tau / s1) / math.sqrt(sol.lam)


STAGES = {
    "solve": "stage_solve",
    "barriers": "stage_barriers",
    "check-identity": "stage_identity",
    "penrose-table": "stage_penrose",
    "decay": "stage_decay",
    "spinor": "stage_spinor",
}
_FILE_STEM = {"solve": "solve", "barriers": "barriers", "check-identity": "identity",
              "penrose-table": "penrose", "decay": "decay", "spinor": "spinor"}


def run_stage(pipe, name):
    try:
        return getattr(pipe, STAGES[name])()
    except Exception as exc:  # stage errors propagate with the stage name
        raise StageError(name, exc) from exc


def _write_stage(out, name, tables, summary, checks, refs):
    out.mkdir(parents=True, exist_ok=True)
    for table, (columns, rows) in tables.items():
        (out / f"{table}.csv").write_text(format_csv(columns, rows), encoding="utf-8")
    payload = {"schema_version": SCHEMA_VERSION, "stage": name, "summary": summary,
               "checks": checks, "references": refs}
    (out / f"{_FILE_STEM[name]}.json").write_text(dumps_json(payload), encoding="utf-8")


def run_report(cfg, out=None, strict_reference=False):
    """Run every stage; write per-stage files as they finish and report.json.

    Returns the report dict; ``ok`` is True iff every check passed (and
    every reference comparison, with ``strict_reference``). A failing stage
    is recorded and the remaining stages still run.
    """
    out = Path(out or cfg.out or "motslab-report")
    pipe = Pipeline(cfg)
    report = {"schema_version": SCHEMA_VERSION, "data": cfg.data.to_config(),
              "stages": {}, "checks": [], "references": [], "errors": []}
    for name in STAGES:
        try:
            tables, summary, checks, refs = run_stage(pipe, name)
        except StageError as exc:
            report["errors"].append({"stage": exc.stage, "message": str(exc)})
            continue
        _write_stage(out, name, tables, summary, checks, refs)
        report["stages"][name] = summary
        report["checks"] += [dict(c, stage=name) for c in checks]
        report["references"] += [dict(c, stage=name) for c in refs]
    ok = not report["errors"] and all(c["pass"] for c in report["checks"])
    if strict_reference:
        ok = ok and all(c["pass"] for c in report["references"])
    report["ok"] = ok
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(dumps_json(report), encoding="utf-8")
    return report


# argument parsing -----------------------------------------------------------

def _common(p):
    p.add_argument("--family", choices=["schwarzschild", "flat"], help="built-in data family")
    p.add_argument("--mass", type=float, help="Schwarzschild mass (default 1)")
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--out", help="output directory (stdout when omitted, except for report)")
    p.add_argument("--format", choices=["csv", "json"], help="stdout format (default csv)")
    p.add_argument("--radii", help="comma-separated radii for the penrose table")
    p.add_argument("--tol", type=float, help="relative tolerance of the blowup ODE solve")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="motslab",
        description="Radial Jang blowup solutions near a stable MOTS: barriers, slice geometry, "
                    "Penrose coefficient and spinor energies.")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "report": "run every stage and write the report bundle",
        "solve": "blowup solution f(r) and its rate",
        "barriers": "barrier certificates and the two-sided sandwich",
        "check-identity": "slice geometry and the scalar-curvature identity",
        "penrose-table": "rows (r, C, sigma, theta), conditions and the mass bound",
        "decay": "cylinder graph decay constants and gradient bounds",
        "spinor": "radial harmonic spinor profile and its energies",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text, description=text)
        _common(p)
        if name == "report":
            p.add_argument("--strict-reference", action="store_true",
                           help="also fail on mismatches with the reference Schwarzschild values")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if _THREADS is not None and not (_THREADS.strip().isdigit() and int(_THREADS) > 0):
        print(f"motslab: MOTSLAB_THREADS must be a positive integer, got {_THREADS!r}", file=sys.stderr)
        return 2
    try:
        cfg = config_from_args(args)
    except ConfigError as exc:
        print(f"motslab: config error: {exc}", file=sys.stderr)
        return 2

    if args.command == "report":
        report = run_report(cfg, strict_reference=args.strict_reference)
        for err in report["errors"]:
            print(f"motslab: {err['message']}", file=sys.stderr)
        for kind in ("checks", "references"):
            for c in report[kind]:
                print(f"{'PASS' if c['pass'] else 'FAIL'} {kind[:-1]} {c['stage']}/{c['name']}")
        return 0 if report["ok"] else (3 if report["errors"] else 1)

    pipe = Pipeline(cfg)
    try:
        tables, summary, checks, refs = run_stage(pipe, args.command)
    except StageError as exc:
        print(f"motslab: {exc}", file=sys.stderr)
        return 3
    if cfg.out is not None:
        _write_stage(Path(cfg.out), args.command, tables, summary, checks, refs)
    elif cfg.format == "json":
        sys.stdout.write(dumps_json({"schema_version": SCHEMA_VERSION, "stage": args.command,
                                     "summary": summary, "checks": checks, "references": refs}))
    else:
        columns, rows = next(iter(tables.values()))
        sys.stdout.write(format_csv(columns, rows))
    return 0


if __name__ == "__main__":
    sys.exit(main())
