"""``axion-ed`` command line: residual campaigns, transforms, reductions and FDTD runs.

Every verb except ``list`` reads one JSON campaign file. Unknown keys are
rejected. Exit codes: 0 when everything passes, 1 on any verification
failure, 2 on usage or configuration errors.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

from . import fdtd_oracle as fd
from . import reduction_engine as red
from . import solution_catalog as cat
from . import symmetry_engine as sym
from .fields_core import StencilScheme, vacuum
from .pde_residuals import COMPONENTS, SourceProfile, residual_batch

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
DEFAULT_SEED = 42
DEFAULT_SAMPLES = 100
TRANSFORM_FACTOR = 10.0  # transformed and reconstructed fields pass at 10 tol
MIN_ORDER = 1.9


class ConfigError(ValueError):
    pass


# ------------------------------------------------------------- config

def _check_keys(d: Any, allowed: set, where: str) -> dict:
    if not isinstance(d, dict):
        raise ConfigError(f"{where}: expected a JSON object")
    unknown = sorted(set(d) - allowed)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {unknown}")
    return d


def _num(v, where: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}: expected a number")
    return float(v)


def _int(v, where: str, lo: int = 0) -> int:
    if isinstance(v, bool) or not isinstance(v, int) or v < lo:
        raise ConfigError(f"{where}: expected an integer >= {lo}")
    return v


def _vec(v, n: int, where: str) -> list:
    if not isinstance(v, list) or len(v) != n:
        raise ConfigError(f"{where}: expected a list of {n} numbers")
    return [_num(x, where) for x in v]


@dataclass
class CampaignConfig:
    families: Any = "all"
    overrides: dict = field(default_factory=dict)
    stencil: StencilScheme = field(default_factory=StencilScheme)
    samples: int = DEFAULT_SAMPLES
    seed: int = DEFAULT_SEED
    out: Optional[str] = None
    transform: Optional[dict] = None
    reduce: Optional[dict] = None
    evolve: Optional[dict] = None

    _KEYS = {"families", "overrides", "stencil", "samples", "seed", "out", "transform", "reduce", "evolve"}

    @classmethod
    def from_dict(cls, d: Any) -> "CampaignConfig":
        _check_keys(d, cls._KEYS, "config")
        cfg = cls()
        fams = d.get("families", "all")
        if fams != "all" and not (isinstance(fams, list) and all(isinstance(f, str) for f in fams)):
            raise ConfigError("families: expected \"all\" or a list of family ids")
        cfg.families = fams
        ov = d.get("overrides", {})
        if not isinstance(ov, dict) or not all(isinstance(v, dict) for v in ov.values()):
            raise ConfigError("overrides: expected an object of per-family objects")
        cfg.overrides = ov
        st = _check_keys(d.get("stencil", {}), {"order", "h"}, "stencil")
        try:
            cfg.stencil = StencilScheme(_int(st.get("order", 4), "stencil.order", 2),
                                        None if st.get("h") is None else _num(st["h"], "stencil.h"))
        except ValueError as e:
            raise ConfigError(f"stencil: {e}") from None
        cfg.samples = _int(d.get("samples", DEFAULT_SAMPLES), "samples", 1)
        cfg.seed = _int(d.get("seed", DEFAULT_SEED), "seed")
        if d.get("out") is not None and not isinstance(d["out"], str):
            raise ConfigError("out: expected a path string")
        cfg.out = d.get("out")
        cfg.transform = _check_keys(d["transform"], {"family", "params", "transforms"}, "transform") \
            if "transform" in d else None
        cfg.reduce = _check_keys(d["reduce"], {"subalgebra", "branch", "params", "range", "initial", "x_init",
                                               "value"}, "reduce") if "reduce" in d else None
        cfg.evolve = _check_keys(d["evolve"], {"family", "params", "grid", "steps", "refine", "refine_axes",
                                               "kappa"}, "evolve") if "evolve" in d else None
        return cfg

    @classmethod
    def load(cls, path: Optional[str]) -> "CampaignConfig":
        if path is None:
            return cls()
        try:
            text = Path(path).read_text()
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e.strerror or e}") from None
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as e:
            raise ConfigError(f"config {path} is not valid JSON: {e}") from None


# ------------------------------------------------------------- output

def _fmt(v: float) -> str:
    if math.isnan(v):
        return '"nan"'
    if math.isinf(v):
        return '"inf"' if v > 0 else '"-inf"'
    return format(v, ".17g")


def dumps(obj: Any, indent: int = 0) -> str:
    """JSON with floats at 17 significant digits and sorted keys."""
    pad, inner = "  " * indent, "  " * (indent + 1)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {dumps(obj[k], indent + 1)}" for k in sorted(obj)]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        if all(isinstance(x, (int, float, np.number)) and not isinstance(x, bool) for x in obj):
            return "[" + ", ".join(dumps(x) for x in obj) + "]"
        return "[\n" + ",\n".join(inner + dumps(x, indent + 1) for x in obj) + "\n" + pad + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _write(out: Path, name: str, text: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    p = out / name
    p.write_text(text)
    return p


def _out_dir(args, cfg: CampaignConfig) -> Path:
    return Path(args.out or cfg.out or ".")


# ------------------------------------------------------------- residual suites

def family_seed(seed: int, fid: str) -> int:
    return (int(seed) + zlib.crc32(fid.encode())) % 2 ** 64


def _residual_entry(cfg, X, src, stencil: StencilScheme, system: str, factor: float = 1.0) -> tuple[dict, np.ndarray]:
    R = residual_batch(cfg, X, src, 1.0, stencil, system)
    tol = np.array([stencil.tol(x) for x in X])
    norms = np.max(np.abs(R), axis=1)
    ratio = norms / tol
    i = int(np.argmax(ratio))
    entry = {
        "points": int(len(X)),
        "max_residual": float(norms.max()),
        "tol": float(tol[i]),
        "max_ratio": float(ratio[i]),
        "worst_point": X[i].tolist(),
        "worst_component": COMPONENTS[int(np.argmax(np.abs(R[i])))],
        "pass": bool(np.all(norms <= factor * tol)),
    }
    return entry, R


def verify_family(fid: str, params: dict, n: int, seed: int, stencil: StencilScheme):
    """Residual entry and per-point residual array for one family."""
    desc = cat.get_family(fid)
    try:
        cfg = cat.instantiate(fid, params)
    except cat.ConstraintViolation as e:
        failed = next((expr for expr, ok, _ in cat.check_constraints(fid, params) if not ok), "")
        return {"pass": False, "error": "ConstraintViolation", "constraint": failed, "message": str(e)}, None, None
    X = cat.sample_points(desc, cfg, n, seed=family_seed(seed, fid))
    entry, R = _residual_entry(cfg, X, desc.source(cfg.metadata["params"]), stencil, desc.system)
    return entry, X, R


def _residual_rows(fid: str, X: np.ndarray, R: np.ndarray):
    for x, r in zip(X, R):
        for comp, v in zip(COMPONENTS, r):
            yield [fid, *(f"{c:.17g}" for c in x), comp, f"{v:.17g}"]


def cmd_list(args) -> int:
    fams = cat.list_families()
    if args.family:
        try:
            desc = cat.get_family(args.family)
        except cat.UnknownFamily:
            print(f"unknown family {args.family!r}", file=sys.stderr)
            return EXIT_USAGE
        if args.json:
            print(dumps(desc.to_dict()))
            return EXIT_OK
        d = desc.to_dict()
        print(f"{d['id']}  [{d['required_source']}, {d['system']}]")
        print(f"  anchor: {d['anchor']}")
        for p in d["params"]:
            print(f"  param {p['name']} ({p['kind']}) default={d['defaults'].get(p['name'])}")
        for c in d["constraints"]:
            print(f"  constraint: {c}")
        print(f"  singular loci: {d['singular_loci']}")
        return EXIT_OK
    if args.json:
        print(cat.registry_json())
        return EXIT_OK
    for d in fams:
        params = ", ".join(f"{p.name}:{p.kind}" for p in d.params)
        print(f"{d.id}\t{d.anchor}\t{params}")
    return EXIT_OK


def cmd_verify(args, cfg: CampaignConfig) -> int:
    ids = [d.id for d in cat.list_families()] if cfg.families == "all" else list(cfg.families)
    for fid in ids:
        cat.get_family(fid)
    unknown = sorted(set(cfg.overrides) - set(ids))
    if unknown:
        raise ConfigError(f"overrides for families not in the campaign: {unknown}")
    for fid, ov in cfg.overrides.items():
        try:
            cat._merge(cat.get_family(fid), ov)
        except (ValueError, TypeError) as e:
            raise ConfigError(f"overrides.{fid}: {e}") from None
    seed = cfg.seed if args.seed is None else args.seed

    def job(fid):
        try:
            return fid, verify_family(fid, cfg.overrides.get(fid, {}), cfg.samples, seed, cfg.stencil)
        except (ValueError, ArithmeticError) as e:
            # a family that cannot even be sampled counts as a failure
            return fid, ({"pass": False, "error": type(e).__name__, "message": str(e)}, None, None)

    with ThreadPoolExecutor(max_workers=max(1, args.workers)) as pool:
        results = dict(pool.map(job, ids))

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["family", "point_x0", "point_x1", "point_x2", "point_x3", "component", "value"])
    families = {}
    for fid in sorted(results):
        entry, X, R = results[fid]
        families[fid] = entry
        if X is not None:
            w.writerows(_residual_rows(fid, X, R))
    failed = sorted(f for f, e in families.items() if not e["pass"])
    report = {"verb": "verify", "seed": seed, "samples": cfg.samples,
              "stencil": {"order": cfg.stencil.order, "h": cfg.stencil.h},
              "families": families,
              "summary": {"families": len(families), "passed": len(families) - len(failed), "failed": failed,
                          "pass": not failed}}
    out = _out_dir(args, cfg)
    _write(out, "residuals.csv", buf.getvalue())
    _write(out, "report.json", dumps(report) + "\n")
    _summarise(args, report, [f"{fid}: {'pass' if e['pass'] else 'FAIL'}"
                              + (f" ({e.get('constraint') or e.get('message')})" if not e["pass"] else "")
                              for fid, e in families.items()])
    return EXIT_OK if not failed else EXIT_FAIL


def _summarise(args, report: dict, lines: list) -> None:
    if args.json:
        print(dumps(report))
    else:
        for ln in lines:
            print(ln)


# ------------------------------------------------------------- transforms

def _parse_transform(t: Any, i: int):
    """``(config transform, point map)`` for one list entry."""
    where = f"transform.transforms[{i}]"
    _check_keys(t, {"rotate", "boost", "translate"}, where)
    if len(t) != 1:
        raise ConfigError(f"{where}: exactly one of rotate, boost, translate")
    kind, v = next(iter(t.items()))
    if kind == "rotate":
        _check_keys(v, {"axis", "angle", "matrix"}, where)
        if "matrix" in v:
            R = sym.validate_rotation(np.array(v["matrix"], dtype=float))
        else:
            R = sym.rotation_matrix(_vec(v.get("axis"), 3, where), _num(v.get("angle"), where))

        def pts(X, R=R):
            Y = X.copy()
            Y[:, 1:] = X[:, 1:] @ R.T
            return Y
        return (lambda c: sym.rotate(c, R)), pts
    if kind == "boost":
        lam = np.array(_vec(v, 3, where))
        L = sym.lorentz_matrix(lam)
        return (lambda c: sym.boost(c, lam)), (lambda X: X @ L.T)
    a = np.array(_vec(v, 4, where))
    return (lambda c: sym.translate(c, a)), (lambda X: X + a)


def cmd_transform(args, cfg: CampaignConfig) -> int:
    t = cfg.transform
    if t is None or "family" not in t:
        raise ConfigError("transform: section with a family is required")
    fid = t["family"]
    desc = cat.get_family(fid)
    steps = [_parse_transform(x, i) for i, x in enumerate(t.get("transforms", []))]
    base = cat.instantiate(fid, t.get("params", {}))
    seed = cfg.seed if args.seed is None else args.seed
    X = cat.sample_points(desc, base, cfg.samples, seed=family_seed(seed, fid))
    src = desc.source(base.metadata["params"])
    before, _ = _residual_entry(base, X, src, cfg.stencil, desc.system)
    moved, Y = base, X
    for apply, pts in steps:
        moved, Y = apply(moved), pts(Y)
    after, _ = _residual_entry(moved, Y, src, cfg.stencil, desc.system, TRANSFORM_FACTOR)
    ok = before["pass"] and after["pass"]
    report = {"verb": "transform", "family": fid, "seed": seed, "transforms": t.get("transforms", []),
              "before": before, "after": after, "threshold_factor": TRANSFORM_FACTOR, "pass": ok}
    _write(_out_dir(args, cfg), "report.json", dumps(report) + "\n")
    _summarise(args, report, [f"{fid} before: max ratio {before['max_ratio']:.3g}",
                              f"{fid} after:  max ratio {after['max_ratio']:.3g}",
                              "pass" if ok else "FAIL"])
    return EXIT_OK if ok else EXIT_FAIL


# ------------------------------------------------------------- reductions

def cmd_reduce(args, cfg: CampaignConfig) -> int:
    r = cfg.reduce
    if r is None or "subalgebra" not in r:
        raise ConfigError("reduce: section with a subalgebra is required")
    sub = r["subalgebra"]
    params = r.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError("reduce.params: expected an object")
    span = _vec(r["range"], 2, "reduce.range") if "range" in r else None
    x_init = _num(r["x_init"], "reduce.x_init") if "x_init" in r else None
    seed = cfg.seed if args.seed is None else args.seed
    closed_err, case = None, None
    if "branch" in r:
        name = f"{sub}-{r['branch']}"
        if name not in red.closed_form_ids():
            raise red.UnknownSubalgebra(f"no closed-form branch {name!r}")
        case = red.closed_form_case(name, params, span, x_init)
        profile = case.solve()
        closed_err = case.max_error(profile)
        recon_sub, reals = case.sub_id, case.reals
    else:
        try:
            spec = red.reduced_spec(sub, params)
        except red.UnknownSubalgebra:
            raise
        except (ValueError, TypeError) as e:
            raise ConfigError(f"reduce.params: {e}") from None
        if spec.order == 0:
            value = _num(r["value"], "reduce.value") if "value" in r else None
            profile = red.constant_profile(spec, value)
            residual = float(spec.algebraic(float(profile.coeffs[0][0])))
        else:
            if span is None or "initial" not in r:
                raise ConfigError("reduce: range and initial are required without a branch")
            profile = red.integrate(spec, span, r["initial"], x_init)
        recon_sub, reals = (sub if sub in cat.ansatz_ids() else None), params
    recon = None
    if recon_sub is not None:
        try:
            s = red.reconstruction_residual(recon_sub, profile, reals, n=min(cfg.samples, 50), seed=seed)
        except KeyError as e:
            raise ConfigError(f"reduce.params: reconstruction needs parameter {e}") from None
        recon = {"points": s.points, "max_residual": s.max_residual, "max_ratio": s.max_ratio,
                 "worst_point": list(s.worst_point), "pass": s.passed(TRANSFORM_FACTOR)}
    checks = []
    if closed_err is not None:
        checks.append(closed_err <= 1e-7)
    if recon is not None:
        checks.append(recon["pass"])
    if "branch" not in r and profile.spec_id == "A11":
        checks.append(abs(residual) <= 1e-12)
    ok = all(checks)
    report = {"verb": "reduce", "subalgebra": sub, "branch": r.get("branch"),
              "profile": {"components": list(profile.names), "range": [profile.lo, profile.hi],
                          "degree": max(len(c) for c in profile.coeffs) - 1},
              "closed_form_max_error": closed_err, "reconstruction": recon, "pass": ok}
    out = _out_dir(args, cfg)
    if profile.spec_id == "A11":
        csv_text = profile.to_csv(np.array([profile.lo, 0.0, profile.hi]))
    else:
        csv_text = profile.to_csv()
    _write(out, "profile.csv", csv_text)
    _write(out, "report.json", dumps(report) + "\n")
    lines = [f"{sub}{'-' + r['branch'] if 'branch' in r else ''}: profile on [{profile.lo:g}, {profile.hi:g}]"]
    if closed_err is not None:
        lines.append(f"closed-form max error {closed_err:.3g}")
    if recon is not None:
        lines.append(f"reconstruction max ratio {recon['max_ratio']:.3g}")
    lines.append("pass" if ok else "FAIL")
    _summarise(args, report, lines)
    return EXIT_OK if ok else EXIT_FAIL


# ------------------------------------------------------------- FDTD

def _grid(g: Any, nodes_override=None, dt_override=None) -> fd.GridSpec:
    _check_keys(g, {"extent", "nodes", "dt", "courant", "boundary", "origin"}, "evolve.grid")
    extent = _vec(g.get("extent"), 3, "evolve.grid.extent")
    nodes = nodes_override or [_int(n, "evolve.grid.nodes", 1) for n in g.get("nodes", [])]
    if len(nodes) != 3:
        raise ConfigError("evolve.grid.nodes: expected three integers")
    dx = min(e / n for e, n in zip(extent, nodes))
    if dt_override is not None:
        dt = dt_override
    elif "dt" in g:
        dt = _num(g["dt"], "evolve.grid.dt")
    else:
        dt = _num(g.get("courant", 0.4), "evolve.grid.courant") * dx
    origin = _vec(g.get("origin", [0.0, 0.0, 0.0]), 3, "evolve.grid.origin")
    try:
        return fd.GridSpec(tuple(extent), tuple(nodes), dt, g.get("boundary", "periodic"), tuple(origin))
    except fd.CourantViolation:
        raise
    except ValueError as e:
        raise ConfigError(f"evolve.grid: {e}") from None


def cmd_evolve(args, cfg: CampaignConfig) -> int:
    e = cfg.evolve
    if e is None or "family" not in e or "grid" not in e:
        raise ConfigError("evolve: section with family and grid is required")
    kappa = _num(e.get("kappa", 1.0), "evolve.kappa")
    if e["family"] == "vacuum":
        field_cfg, src = vacuum(), SourceProfile.zero()
    else:
        desc = cat.get_family(e["family"])
        field_cfg = cat.instantiate(e["family"], e.get("params", {}))
        src = desc.source(field_cfg.metadata["params"])
    steps = _int(e.get("steps", 100), "evolve.steps", 1)
    base = _grid(e["grid"])
    levels = [_int(n, "evolve.refine", 8) for n in e.get("refine", [])]
    axes = [_int(a, "evolve.refine_axes") for a in e.get("refine_axes", [0, 1, 2])]
    if any(a > 2 for a in axes):
        raise ConfigError("evolve.refine_axes: axes are 0, 1, 2")
    t_end = steps * base.dt
    if not levels:
        runs = [fd.evolve_against_exact(field_cfg, base, t_end, src, kappa)]
        orders = []
    else:
        specs = []
        for n in levels:
            nodes = [n if a in axes else base.nodes[a] for a in range(3)]
            k = steps * n / levels[0]
            if k != int(k):
                raise ConfigError("evolve.refine: steps * level / first level must be a whole number")
            specs.append(_grid(e["grid"], nodes, t_end / int(k)))
        runs = [fd.evolve_against_exact(field_cfg, s, t_end, src, kappa) for s in specs]
        orders = []
        for (a, na), (b, nb) in zip(zip(runs, levels), zip(runs[1:], levels[1:])):
            if a.L2_total == 0.0 and b.L2_total == 0.0:
                orders.append(math.inf)
            elif b.L2_total == 0.0 or a.L2_total == 0.0:
                orders.append(math.nan)
            else:
                orders.append(math.log(a.L2_total / b.L2_total) / math.log(nb / na))
    finite = all(math.isfinite(x.L2_total) for x in runs)
    ok = finite and all(o >= MIN_ORDER for o in orders)
    report = {"verb": "evolve", "family": e["family"], "t_end": t_end, "kappa": kappa,
              "runs": [{"nodes": x.nodes, "dt": x.dt, "steps": x.steps, "L2_E": x.L2_E, "L2_B": x.L2_B,
                        "L2_theta": x.L2_theta, "divB_drift": x.divB_drift} for x in runs],
              "orders": orders, "min_order": MIN_ORDER, "pass": ok}
    out = _out_dir(args, cfg)
    _write(out, "evolve.csv", fd.summaries_csv(runs))
    _write(out, "report.json", dumps(report) + "\n")
    lines = [f"n={x.nodes} dt={x.dt:.4g} L2={x.L2_total:.4g} divB drift={x.divB_drift:.3g}" for x in runs]
    lines += [f"order {o:.4f}" for o in orders] + ["pass" if ok else "FAIL"]
    _summarise(args, report, lines)
    return EXIT_OK if ok else EXIT_FAIL


# ------------------------------------------------------------- entry point

_USAGE_ERRORS = (ConfigError, cat.UnknownFamily, red.UnknownSubalgebra, sym.RangeError, sym.InvalidRotation,
                 fd.CourantViolation, red.UnsupportedBranch, cat.MissingFunctionParam)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="axion-ed", description="Exact-solution verification for axion electrodynamics")
    sub = p.add_subparsers(dest="verb", required=True)

    def common(sp, config=True):
        if config:
            sp.add_argument("--config", help="JSON campaign file")
        sp.add_argument("--json", action="store_true", help="print the report as JSON")
        sp.add_argument("--seed", type=int, default=None, help="override the campaign seed")
        sp.add_argument("--workers", type=int, default=1, help="concurrent campaign items")
        sp.add_argument("--out", default=None, help="directory for report files")

    lp = sub.add_parser("list", help="list registered families")
    common(lp, config=False)
    lp.add_argument("--family", default=None, help="show one family in detail")
    for verb, text in (("verify", "run residual suites"), ("transform", "apply Poincare transforms"),
                       ("reduce", "integrate a reduced ODE"), ("evolve", "FDTD comparison run")):
        common(sub.add_parser(verb, help=text))
    return p


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    if args.seed is not None and not 0 <= args.seed < 2 ** 64:
        print("error: --seed must fit in an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_USAGE
    if args.workers < 1:
        print("error: --workers must be at least 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        if args.verb == "list":
            return cmd_list(args)
        cfg = CampaignConfig.load(args.config)
        return {"verify": cmd_verify, "transform": cmd_transform,
                "reduce": cmd_reduce, "evolve": cmd_evolve}[args.verb](args, cfg)
    except _USAGE_ERRORS as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_USAGE
    except cat.ConstraintViolation as e:
        print(f"FAIL: ConstraintViolation: {e}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
