"""Configuration-driven command line entry point.

Usage::

    hessquot --config run.json --out results/ [--seed N] [--strict]

The config is ``{"command": ..., "params": {...}}``.  Exit codes: 0 all
certificates pass, 2 a certificate failed, 64 configuration error,
70 numerical nonconvergence, 74 output directory problem.
"""

from __future__ import annotations

import argparse
import concurrent.futures as cf
import copy
import csv
import json
import logging
import os
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__, barrier, construct, pipeline, radial, symfun
from .errors import HessquotError, NonconvergenceError, NumericalError
from .symfun import QuotientIndices

log = logging.getLogger("hessquot")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 64, 70, 74

COMMANDS = [
    "check-matrix",
    "construct-sub",
    "construct-super",
    "barriers",
    "solve-radial",
    "sandwich",
    "asymptotics",
    "sweep",
]

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}

PARAM_PROPERTIES = {
    "n": {"type": "integer", "minimum": 3},
    "k": {"type": "integer", "minimum": 1},
    "l": {"type": "integer", "minimum": 0},
    "a": {"oneOf": [_pos, {"type": "array", "items": _pos, "minItems": 3}]},
    "C0": {"type": "number", "minimum": 0},
    "beta": _pos,
    "s0": {"type": "number", "minimum": 1},
    "c1": _num,
    "c2": _num,
    "c": _num,
    "c_offset": _pos,
    "s_in": {"type": "number", "minimum": 1},
    "s_out": _pos,
    "s_max": _pos,
    "samples": {"type": "integer", "minimum": 2},
    "N": {"type": "integer", "minimum": 4},
    "grid": {"enum": ["uniform", "geometric"]},
    "outer": {"enum": ["asymptote", "subsolution"]},
    "bc_in": _num,
    "bc_out": _num,
    "phi0": _num,
    "phi": {"type": "object"},
    "axes": {"type": "array", "items": _pos, "minItems": 3},
    "n_xi": {"type": "integer", "minimum": 8},
    "source": {"enum": ["one", "radial", "oscillating"]},
    "far_field": {"type": "boolean"},
    "s_outs": {"type": "array", "items": _pos, "minItems": 2},
    "nodes_per_decade": {"type": "integer", "minimum": 20},
    "tol": _pos,
    "seed": {"type": "integer", "minimum": 0},
    "runs": {"type": "array", "items": {"type": "object"}},
}

REQUIRED = {
    "check-matrix": ["n", "k", "l", "a"],
    "construct-sub": ["n", "k", "l", "beta"],
    "construct-super": ["n", "k", "l", "beta"],
    "barriers": ["n", "k", "l", "beta"],
    "solve-radial": ["n", "k", "l", "s_out"],
    "sandwich": ["n", "k", "l", "beta"],
    "asymptotics": ["n", "k", "l", "beta"],
    "sweep": ["runs"],
}


def config_schema(strict: bool) -> dict:
    params = {"type": "object", "properties": PARAM_PROPERTIES}
    if strict:
        params["additionalProperties"] = False
    return {
        "type": "object",
        "properties": {"command": {"enum": COMMANDS}, "params": params},
        "required": ["command", "params"],
        "additionalProperties": not strict,
        "allOf": [
            {"if": {"properties": {"command": {"const": c}}}, "then": {"properties": {"params": {"required": r}}}}
            for c, r in REQUIRED.items()
        ],
    }


class ConfigError(Exception):
    pass


def validate_config(cfg, strict: bool) -> None:
    try:
        jsonschema.validate(cfg, config_schema(strict))
    except jsonschema.ValidationError as exc:
        raise ConfigError(exc.message) from exc


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

DEFAULTS = {
    "C0": 0.0,
    "s0": None,
    "c2": 0.0,
    "c_offset": 1.0,
    "s_in": 1.0,
    "s_max": 1e3,
    "samples": 50,
    "N": 800,
    "grid": "geometric",
    "outer": "asymptote",
    "phi0": 0.0,
    "n_xi": 256,
    "source": "one",
    "far_field": False,
    "s_outs": [1e2, 1e3, 1e4],
    "nodes_per_decade": 400,
    "seed": 0,
}


def resolve(params: dict, seed: int | None) -> dict:
    p = copy.deepcopy(DEFAULTS)
    p.update(params)
    if seed is not None and "seed" not in params:
        p["seed"] = seed
    if p["s0"] is None:
        p["s0"] = max(1.0, float(p["s_in"]))
    return p


def _indices(p) -> QuotientIndices:
    try:
        return QuotientIndices(p["n"], p["k"], p["l"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _diag(p, idx):
    a = p.get("a")
    if a is None:
        return symfun.SpdDiagonal.isotropic(idx.n, symfun.c_star(idx))
    if isinstance(a, (int, float)):
        return symfun.SpdDiagonal.isotropic(idx.n, float(a))
    if len(a) != idx.n:
        raise ConfigError(f"a has length {len(a)}, expected {idx.n}")
    return symfun.SpdDiagonal(a)


def _envelope(p, A) -> construct.SourceEnvelope:
    try:
        if p["source"] == "radial":
            return construct.radial_source(p["C0"], p["beta"], p["s0"], A)
        if p["source"] == "oscillating":
            return construct.oscillating_source(A, p["C0"], p["beta"], p["s0"])
        return construct.SourceEnvelope(p["C0"], p["beta"], p["s0"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _phi(p, n) -> barrier.BoundaryData:
    data = p.get("phi")
    if data is None:
        return barrier.BoundaryData.constant(p["phi0"])
    kind = data.get("type")
    if kind == "constant":
        return barrier.BoundaryData.constant(data.get("value", 0.0))
    if kind == "linear":
        return barrier.BoundaryData.linear(data["coef"], data.get("const", 0.0))
    if kind == "quadratic":
        return barrier.BoundaryData.quadratic(data["diag"], data.get("coef"), data.get("const", 0.0))
    raise ConfigError(f"unknown boundary data type {kind!r}")


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(header)
        for row in rows:
            wr.writerow(["%.17g" % float(v) for v in row])


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    return x


def write_json(path: Path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# commands; each returns (result dict, passed flag)
# ---------------------------------------------------------------------------


def cmd_check_matrix(p, out: Path):
    idx = _indices(p)
    A = _diag(p, idx)
    mem = symfun.membership(idx, A)
    res = {
        "in_A": mem.in_A,
        "in_script_A": mem.in_script_A,
        "in_tilde_A": mem.in_tilde_A,
        "quotient": mem.quotient,
        "H_k": mem.H_k,
        "h_l": mem.h_l,
        "c_star": symfun.c_star(idx),
        "index_condition": idx.index_condition_holds,
    }
    write_json(out / "check_matrix.json", res)
    return res, True


def _family_rows(f, gfun, s):
    rows = []
    for v in s:
        w, w1, w2 = f.w(v), f.w1(v), f.w2(v)
        q = f.ode_lhs(v)
        rows.append((v, w, w1, w2, f.ode_residual(v), q, gfun(v)))
    return rows


def _family_checks(f, s, kind):
    s = np.asarray(s)
    res = np.array([f.ode_residual(v) for v in s])
    w2 = np.array([f.w2(v) for v in s])
    shape_ok = bool(np.all(w2 < 0)) if kind == "sub" else bool(np.all(w2 >= 0))
    return {"max_ode_residual": float(np.max(np.abs(res))), "curvature_sign_ok": shape_ok}


def cmd_construct(p, out: Path, kind: str):
    idx = _indices(p)
    A = _diag(p, idx)
    env = _envelope(p, A)
    # s = 1 is excluded: the supersolution profile is boundary-degenerate there
    s = np.geomspace(1.0 + 1e-3, p["s_max"], p["samples"])
    if kind == "sub":
        c1 = p.get("c1", construct.default_alpha(idx, A, env))
        f = construct.SubFamily(idx, A, env, c1, p["c2"])
        gfun = lambda v: float(env.g_bar(v))  # noqa: E731
    else:
        f = construct.SuperFamily(idx, A, env, p["c2"])
        gfun = lambda v: float(env.g_under(v))  # noqa: E731
    rows = _family_rows(f, gfun, s)
    write_csv(out / f"{kind}_profile.csv", ["s", "w", "w1", "w2", "ode_residual", "quotient_bound", "g_envelope"], rows)
    checks = _family_checks(f, s, kind)
    passed = checks["max_ode_residual"] <= 1e-8 and checks["curvature_sign_ok"]
    res = {"record": f.to_record(), "mu": f.mu, "mu_error": f.mu_error, "checks": checks, "verdict": "PASS" if passed else "FAIL"}
    if kind == "sub":
        res["threshold_c1"] = f.C_tilde
    else:
        res["deficit_integral"] = f.deficit
    write_json(out / f"{kind}_family.json", res)
    return res, passed


def _exterior_problem(p, idx, A, env):
    if "axes" in p:
        D = barrier.Ellipsoid(p["axes"])
    else:
        D = barrier.Ellipsoid.ball(idx.n, float(np.sqrt(2 * p["s_in"] / A.a[0])))
    try:
        return barrier.ExteriorProblem(idx, A, D, _phi(p, idx.n), env, n_xi=p["n_xi"], seed=p["seed"])
    except HessquotError as exc:
        raise ConfigError(str(exc)) from exc


def cmd_barriers(p, out: Path):
    idx = _indices(p)
    A = _diag(p, idx)
    env = _envelope(p, A)
    prob = _exterior_problem(p, idx, A, env)
    pl = barrier.run_pipeline(prob, c_offset=p["c_offset"], c=p.get("c"))
    dirs = barrier.sphere_mesh(idx.n, 2 * p["n_xi"], seed=p["seed"] + 7)
    P = barrier.shell_points(prob, dirs, 4)
    barrier.write_envelope_csv(out / "envelope.csv", P, pl.barriers.envelope(P))
    chain = barrier.ordering_chain(pl.spliced, pl.sup, pl.cstar)
    jumps = pl.spliced.interface_jumps(dirs)
    berr = pl.spliced.boundary_error()
    far = np.vstack([barrier.level_points(A, s, dirs[:64]) for s in np.geomspace(prob.s0, 50 * prob.s0, 12)])
    below = pl.below_super(far)
    passed = chain["holds"] and max(jumps.values()) <= barrier.JUMP_TOL and berr <= 1e-9 and below <= 1e-9
    res = {
        "m_s0": pl.cstar.m_s0,
        "M_s0": pl.cstar.M_s0,
        "c_star": pl.cstar.c_star,
        "alpha": pl.cstar.alpha,
        "c": pl.c,
        "c1": pl.spliced.sub.c1,
        "c2_super": pl.sup.c2,
        "s_bar": pl.spliced.s_bar,
        "apex_bound": pl.summary.apex_bound,
        "ordering_chain": chain,
        "interface_jumps": jumps,
        "boundary_error": berr,
        "max_sub_minus_super": below,
        "verdict": "PASS" if passed else "FAIL",
    }
    write_json(out / "barriers.json", res)
    return res, passed


def cmd_solve_radial(p, out: Path):
    idx = _indices(p)
    a = float(p["a"]) if isinstance(p.get("a"), (int, float)) else symfun.c_star(idx)
    C0, beta, s0 = p["C0"], p.get("beta", 4.0), p["s0"]

    def g(s):
        return 1.0 + C0 * np.maximum(s, s0) ** (-beta / 2)

    slope = symfun.c_star(idx) / a
    bc_in = p.get("bc_in", slope * p["s_in"])
    bc_out = p.get("bc_out", slope * p["s_out"])
    prob = radial.RadialProblem(idx, a, p["s_in"], p["s_out"], g, bc_in, bc_out)
    sol = radial.solve_bvp(prob, p["N"], grid=p["grid"])
    radial.write_solution_csv(out / "radial_solution.csv", prob, sol)
    (out / "convergence.json").write_text(radial.history_json(sol) + "\n")
    passed = bool(np.all(sol.admissibility_flags)) and sol.residual_norm <= radial.NEWTON_TOL
    res = {"residual_norm": sol.residual_norm, "iterations": len(sol.history) - 1, "verdict": "PASS" if passed else "FAIL"}
    write_json(out / "solve_radial.json", res)
    return res, passed


def _radial_pipeline(p):
    idx = _indices(p)
    A = symfun.SpdDiagonal.isotropic(idx.n, symfun.c_star(idx))
    env = _envelope(p, A)
    try:
        return pipeline.build_radial_pipeline(idx, env, p["s_in"], p["phi0"], p["c_offset"], p["n_xi"], p["seed"])
    except HessquotError as exc:
        if isinstance(exc, (NonconvergenceError, NumericalError)):
            raise
        raise ConfigError(str(exc)) from exc


def cmd_sandwich(p, out: Path):
    rp = _radial_pipeline(p)
    s_out = p.get("s_out", 200.0)
    sol = rp.solve(s_out, p["N"], grid=p["grid"], outer=p["outer"])
    cert = rp.sandwich(sol, p.get("tol"))
    radial.write_solution_csv(out / "sandwich.csv", rp.problem(s_out, p["outer"]), sol, cert)
    (out / "convergence.json").write_text(radial.history_json(sol) + "\n")
    res = {
        "c_star": rp.core.cstar.c_star,
        "c": rp.c,
        "verdict": cert.verdict,
        "worst_s": cert.worst_s,
        "worst_violation": cert.worst_violation,
        "tol": cert.tol,
        "residual_norm": sol.residual_norm,
    }
    write_json(out / "sandwich.json", res)
    return res, cert.passed


def cmd_asymptotics(p, out: Path):
    idx = _indices(p)
    A = _diag(p, idx)
    env = _envelope(p, A)
    sub = construct.SubFamily(idx, A, env, p.get("c1", construct.default_alpha(idx, A, env)), p["c2"])
    sup = construct.SuperFamily(idx, A, env, p["c2"])
    tol = p.get("tol", 0.1)
    res, passed = {}, True
    for name, f in (("sub", sub), ("super", sup)):
        cert = construct.asymptotic_certificate(f)
        ok = cert.within(tol)
        passed &= ok
        res[name] = {
            "exponent_fit": cert.exponent_fit,
            "predicted": cert.predicted,
            "log_case": cert.log_case,
            "max_weighted_err": cert.max_weighted_err,
            "verdict": "PASS" if ok else "FAIL",
        }
    if p["far_field"]:
        rp = _radial_pipeline(p)
        ff = pipeline.far_field(rp, p["s_outs"], p["nodes_per_decade"])
        ok = ff.within(0.15)
        passed &= ok
        res["far_field"] = {
            "exponent_fit": ff.exponent,
            "predicted": ff.predicted,
            "log_case": ff.log_case,
            "s_eval": ff.s_eval,
            "deviation": ff.deviation,
            "verdict": "PASS" if ok else "FAIL",
        }
        write_csv(out / "far_field.csv", ["s", "deviation"], zip(ff.s_eval, ff.deviation))
    res["verdict"] = "PASS" if passed else "FAIL"
    write_json(out / "asymptotics.json", res)
    return res, passed


def _sweep_worker(args):
    cfg, out, seed, strict = args
    return run_config(cfg, Path(out), seed, strict)


def cmd_sweep(p, out: Path, seed, strict):
    runs = p["runs"]
    workers = int(os.environ.get("HQ_THREADS", "0")) or min(4, os.cpu_count() or 1)
    jobs = []
    for i, cfg in enumerate(runs):
        if cfg.get("command") == "sweep":
            raise ConfigError("nested sweeps are not allowed")
        rdir = out / f"run-{i:03d}"
        rdir.mkdir(parents=True, exist_ok=True)
        jobs.append((cfg, str(rdir), seed, strict))
    if workers <= 1:
        codes = [_sweep_worker(j) for j in jobs]
    else:
        with cf.ProcessPoolExecutor(max_workers=workers) as ex:
            codes = list(ex.map(_sweep_worker, jobs))
    res = {"runs": [{"run_id": f"run-{i:03d}", "exit_code": c} for i, c in enumerate(codes)]}
    res["verdict"] = "PASS" if all(c == EXIT_OK for c in codes) else "FAIL"
    res["failing_runs"] = [r["run_id"] for r in res["runs"] if r["exit_code"] != EXIT_OK]
    write_json(out / "sweep.json", res)
    return res, res["verdict"] == "PASS"


# ---------------------------------------------------------------------------
# driver
# ---------------------------------------------------------------------------


def run_config(cfg, out: Path, seed: int | None = None, strict: bool = False) -> int:
    """Validate, execute and write the manifest; returns the exit code."""
    manifest = {"version": __version__, "config": cfg, "strict": strict}
    try:
        if not out.is_dir():
            log.error("output directory %s does not exist", out)
            return EXIT_IO
        validate_config(cfg, strict)
        params = resolve(cfg["params"], seed)
        manifest["resolved_params"] = params
        cmd = cfg["command"]
        if cmd == "sweep":
            res, passed = cmd_sweep(params, out, seed, strict)
        else:
            handler = {
                "check-matrix": cmd_check_matrix,
                "construct-sub": lambda p, o: cmd_construct(p, o, "sub"),
                "construct-super": lambda p, o: cmd_construct(p, o, "super"),
                "barriers": cmd_barriers,
                "solve-radial": cmd_solve_radial,
                "sandwich": cmd_sandwich,
                "asymptotics": cmd_asymptotics,
            }[cmd]
            res, passed = handler(params, out)
        code = EXIT_OK if passed else EXIT_FAIL
        manifest["verdict"] = res.get("verdict", "PASS") if isinstance(res, dict) else "PASS"
        if code == EXIT_FAIL:
            manifest["failing_certificate"] = sorted(p.name for p in out.glob("*.json") if p.name != "manifest.json")
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        manifest["error"] = f"config: {exc}"
        code = EXIT_CONFIG
    except (NonconvergenceError, NumericalError) as exc:
        log.error("numerical failure: %s", exc)
        manifest["error"] = f"numerical: {exc}"
        code = EXIT_NUMERIC
    except HessquotError as exc:
        log.error("configuration rejected: %s", exc)
        manifest["error"] = f"config: {exc}"
        code = EXIT_CONFIG
    manifest["exit_code"] = code
    if out.is_dir():
        write_json(out / "manifest.json", manifest)
    return code


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="hessquot", description="Sub/supersolution constructions for Hessian quotient equations")
    ap.add_argument("--config", required=True, help="JSON run configuration")
    ap.add_argument("--out", default=".", help="existing output directory")
    ap.add_argument("--seed", type=int, default=None, help="seed for quasi-random meshes")
    ap.add_argument("--strict", action="store_true", help="reject unknown configuration keys")
    ap.add_argument("-v", "--verbose", action="store_true")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        log.error("cannot read config: %s", exc)
        return EXIT_CONFIG
    return run_config(cfg, Path(args.out), args.seed, args.strict)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
