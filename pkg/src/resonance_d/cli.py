"""Command line interface: resonance-d <command> --config FILE [--threads N] [--out PATH]."""
from __future__ import annotations

import argparse
import cmath
import csv
import io
import json
import math
import os
import sys
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from typing import List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from . import __version__
from .dfun import DConfig, DEvaluator, bbD, check_equivalence, evans, select_theta
from .errors import ConfigError, DecayViolation, ResonanceError
from .locate import ContourSpec, eigen_data, find_resonances, muller
from .oracle import (poschl_teller_roots, squarewell_bbD_closed, squarewell_bound_states,
                     squarewell_second_sheet_roots)
from .potential import PoschlTeller, SquareWell, zero_potential
from .resolvent import parallel_defect, riesz_projection
from .surface import Sheet, SurfacePoint

SCHEMA = "resonance-d/1"
ComplexPair = Tuple[float, float]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SquareWellCfg(_Strict):
    kind: Literal["square_well"]
    h: ComplexPair
    a1: float
    a2: float

    @model_validator(mode="after")
    def _order(self):
        if not self.a1 < self.a2:
            raise ValueError("a1 must be smaller than a2")
        return self


class PoschlTellerCfg(_Strict):
    kind: Literal["poschl_teller"]
    V0: ComplexPair
    half_angle: float = Field(1.2, ge=0.0, lt=math.pi / 2)


class ZeroCfg(_Strict):
    kind: Literal["zero"]


PotentialCfg = Union[SquareWellCfg, PoschlTellerCfg, ZeroCfg]


class RegionCfg(_Strict):
    k_min: ComplexPair
    k_max: ComplexPair
    max_depth: int = Field(8, ge=1)
    boundary_samples: int = Field(64, ge=2)
    exclusion_margin: float = Field(1e-3, gt=0)

    @model_validator(mode="after")
    def _nondegenerate(self):
        if not (self.k_min[0] != self.k_max[0] and self.k_min[1] != self.k_max[1]):
            raise ValueError("region rectangle is degenerate")
        return self


class Tolerances(_Strict):
    ode_tol: float = Field(1e-10, gt=0)
    quad_tol: float = Field(1e-10, gt=0)
    root_tol: float = Field(1e-8, gt=0)
    eig_tol: float = Field(1e-6, gt=0)


class OutputCfg(_Strict):
    format: Literal["json", "csv"] = "json"
    path: Optional[str] = None


class GridCfg(_Strict):
    k_re: ComplexPair
    k_im: ComplexPair
    steps: Tuple[int, int] = (21, 21)

    @field_validator("steps")
    @classmethod
    def _pos(cls, v):
        if min(v) < 1:
            raise ValueError("steps must be positive")
        return v


class PhiCfg(_Strict):
    kind: Literal["indicator", "gaussian", "polynomial"]
    a: float = 0.0
    b: float = 1.0
    center: float = 0.5
    width: float = 0.3
    coeffs: List[float] = [1.0]


class ProjectionCfg(_Strict):
    radius: float = Field(0.5, gt=0)
    M: int = Field(64, ge=3)
    N: int = Field(200, ge=8)
    phis: List[PhiCfg] = [PhiCfg(kind="indicator")]


class OracleCfg(_Strict):
    n_range: Tuple[int, int] = (0, 10)


class RunConfig(_Strict):
    potential: PotentialCfg = Field(discriminator="kind")
    region: Optional[RegionCfg] = None
    method: Literal["real_axis", "rotated_ray", "auto"] = "auto"
    tolerances: Tolerances = Tolerances()
    output: OutputCfg = OutputCfg()
    grid: Optional[GridCfg] = None
    points: Optional[List[ComplexPair]] = None
    root: Optional[ComplexPair] = None
    sample_xs: Optional[List[float]] = None
    projection: ProjectionCfg = ProjectionCfg()
    oracle: OracleCfg = OracleCfg()
    seed: int = 0

    @model_validator(mode="after")
    def _method(self):
        if self.method == "rotated_ray":
            alpha = self.potential.half_angle if isinstance(self.potential, PoschlTellerCfg) else 0.0
            if isinstance(self.potential, ZeroCfg):
                alpha = 1.0
            if alpha <= 0:
                raise ValueError("method rotated_ray needs a potential with half_angle > 0")
        return self

    def spec(self):
        p = self.potential
        if isinstance(p, SquareWellCfg):
            return SquareWell(complex(*p.h), p.a1, p.a2)
        if isinstance(p, PoschlTellerCfg):
            return PoschlTeller(complex(*p.V0), p.half_angle)
        return zero_potential()

    def dconfig(self) -> DConfig:
        t = self.tolerances
        return DConfig(quad_tol=t.quad_tol, ode_tol=t.ode_tol, method=self.method)

    def contour(self) -> ContourSpec:
        if self.region is None:
            raise ConfigError("this command needs a 'region'")
        r = self.region
        return ContourSpec((complex(*r.k_min), complex(*r.k_max)), r.max_depth,
                           r.boundary_samples, r.exclusion_margin)


def _line_of(text: str, loc) -> Optional[int]:
    keys = [k for k in loc if isinstance(k, str)]
    for key in reversed(keys):
        idx = text.find(f'"{key}"')
        if idx >= 0:
            return text.count("\n", 0, idx) + 1
    return None


def load_config(path: str) -> RunConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from exc
    try:
        return RunConfig.model_validate(raw)
    except ValidationError as exc:
        lines = []
        for err in exc.errors():
            line = _line_of(text, err["loc"])
            where = ".".join(str(x) for x in err["loc"]) or "<root>"
            prefix = f"{path}:{line}" if line else path
            lines.append(f"{prefix}: {where}: {err['msg']}")
        raise ConfigError("\n".join(lines)) from exc


# ---------------------------------------------------------------------------
# serialization


def cpair(z) -> list:
    z = complex(z)
    return [_num(z.real), _num(z.imag)]


def _num(x):
    x = float(x)
    return x if math.isfinite(x) else None


def _dump(doc) -> str:
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def _write(text: str, path: Optional[str]):
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def _fmt(x) -> str:
    if isinstance(x, float):
        return "nan" if math.isnan(x) else format(x, ".17g")
    return str(x)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def _document(command, cfg: RunConfig, data, meta):
    meta = dict(meta)
    meta["tolerances"] = cfg.tolerances.model_dump()
    meta["version"] = __version__
    return {"schema": SCHEMA, "command": command, "data": data, "metadata": meta}


def _result_record(r):
    return {"k": cpair(r.point.k), "lambda": cpair(r.point.lam), "sheet": r.point.sheet.value,
            "abs_D": _num(r.abs_D), "multiplicity": r.multiplicity, "C1": cpair(r.C1),
            "C2": cpair(r.C2), "eigen_residual": _num(r.eigen_residual),
            "newton_iters": r.newton_iters, "theta": _num(r.theta)}


# ---------------------------------------------------------------------------
# commands


def cmd_resonances(cfg: RunConfig, threads: int):
    spec, dc = cfg.spec(), cfg.dconfig()
    ev = DEvaluator(spec, dc)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        res = find_resonances(cfg.contour(), spec, dc, cfg.tolerances.root_tol,
                              cfg.tolerances.eig_tol, threads, ev)
    data = {"resonances": [_result_record(r) for r in res],
            "clusters": [{"lo": cpair(c.lo), "hi": cpair(c.hi), "count": c.count,
                          "reason": c.reason} for c in res.clusters]}
    warned = sorted({str(w.message) for w in caught})
    meta = {"evaluation_count": ev.n_evals,
            "warnings": warned,
            "messages": [m for m in res.messages if m not in warned],
            "regions": [[cpair(c.lo), cpair(c.hi)] for c in res.regions]}
    return data, meta, (2 if res.clusters else 0)


def _scan_row(ev, spec, dc, kre_vals, kim):
    rows = []
    pts, idx = [], []
    for i, kre in enumerate(kre_vals):
        k = complex(kre, kim)
        rows.append([kre, kim, float("nan"), float("nan"), "", float("nan"), float("nan"), ""])
        if k == 0:
            rows[-1][7] = "BranchPoint"
            continue
        p = SurfacePoint(k)
        rows[-1][2:5] = [p.lam.real, p.lam.imag, p.sheet.value]
        pts.append(k)
        idx.append(i)
    # evaluate per point so one failure only blanks its own cell
    for i, k in zip(idx, pts):
        try:
            v = ev.value(k)
            rows[i][5] = abs(v)
            rows[i][6] = cmath.phase(v)
        except ResonanceError as exc:
            rows[i][7] = type(exc).__name__
    return rows


def cmd_scan(cfg: RunConfig, threads: int):
    if cfg.grid is None:
        raise ConfigError("scan needs a 'grid'")
    g = cfg.grid
    spec, dc = cfg.spec(), cfg.dconfig()
    ev = DEvaluator(spec, dc)
    kre = np.linspace(g.k_re[0], g.k_re[1], g.steps[0])
    kim = np.linspace(g.k_im[0], g.k_im[1], g.steps[1])
    # warm the cache in batches, then read cells in order
    allk = [complex(a, b) for b in kim for a in kre if complex(a, b) != 0]
    ok = []
    for k in allk:
        try:
            select_theta(k, spec, dc)
            ok.append(k)
        except ResonanceError:
            pass
    chunks = [ok[i:i + 64] for i in range(0, len(ok), 64)]

    def warm(chunk):
        try:
            ev(chunk)
        except ResonanceError:
            pass
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        if threads > 1:
            with ThreadPoolExecutor(threads) as pool:
                list(pool.map(warm, chunks))
        else:
            for c in chunks:
                warm(c)
        rows = []
        for b in kim:
            rows.extend(_scan_row(ev, spec, dc, kre, float(b)))
    header = ["k_re", "k_im", "lambda_re", "lambda_im", "sheet", "absD", "argD", "error"]
    return (header, rows), {"evaluation_count": ev.n_evals}, 0


def _points(cfg: RunConfig, default_n=20):
    if cfg.points:
        return [complex(*p) for p in cfg.points]
    rng = np.random.default_rng(cfg.seed)
    re = rng.uniform(0.2, 3.0, default_n)
    im = rng.uniform(-2.0, 2.0, default_n)
    return [complex(a, b) for a, b in zip(re, im)]


def cmd_evans(cfg: RunConfig, threads: int):
    spec, dc = cfg.spec(), cfg.dconfig()
    out = []
    for k in _points(cfg):
        p = SurfacePoint(k)
        rec = {"k": cpair(k), "sheet": p.sheet.value}
        try:
            rec["evans"] = cpair(evans(p, spec, dc))
        except ResonanceError as exc:
            rec["error"] = f"{type(exc).__name__}: {exc}"
        out.append(rec)
    return {"points": out}, {}, 0


def cmd_compare(cfg: RunConfig, threads: int):
    spec, dc = cfg.spec(), cfg.dconfig()
    rows = []
    worst = 0.0
    for k in _points(cfg):
        p = SurfacePoint(k)
        rec = {"k": cpair(k)}
        try:
            d = check_equivalence(p, spec, dc)
            rec["discrepancy"] = _num(d)
            worst = max(worst, d)
        except DecayViolation as exc:
            rec["skipped"] = str(exc)
        rows.append(rec)
    oracle = []
    if isinstance(spec, SquareWell):
        for k in _points(cfg):
            p = SurfacePoint(k)
            v, _ = bbD(p, spec, dc)
            c = squarewell_bbD_closed(p, spec.h, spec.a1, spec.a2)
            oracle.append({"k": cpair(k), "relative_error": _num(abs(v - c) / abs(c))})
    elif isinstance(spec, PoschlTeller):
        for r in poschl_teller_roots(spec.V0, Sheet.FIRST, cfg.oracle.n_range):
            v, _ = bbD(r.point, spec, dc)
            oracle.append({"k": cpair(r.point.k), "n": r.n, "abs_D": _num(abs(v))})
    return {"equivalence": rows, "max_discrepancy": _num(worst), "oracle": oracle}, {}, 0


def _root(cfg: RunConfig, spec, dc):
    if cfg.root is None:
        raise ConfigError("this command needs a 'root'")
    k0 = complex(*cfg.root)
    ev = DEvaluator(spec, dc)
    d = 1e-3 * max(1.0, abs(k0))
    k, absD, its = muller(ev.value, k0 - d, k0 + 1j * d, k0)
    return SurfacePoint(k), absD, its


def cmd_eigenfunction(cfg: RunConfig, threads: int):
    spec, dc = cfg.spec(), cfg.dconfig()
    p, absD, its = _root(cfg, spec, dc)
    C1, C2, xs, mu, res, theta = eigen_data(p, spec, dc, cfg.sample_xs)
    data = {"k": cpair(p.k), "lambda": cpair(p.lam), "sheet": p.sheet.value, "abs_D": _num(absD),
            "C1": cpair(C1), "C2": cpair(C2), "eigen_residual": _num(res), "theta": _num(theta),
            "samples": [{"x": _num(x), "mu": cpair(m)} for x, m in zip(xs, mu)]}
    return data, {"muller_iterations": its}, 0


def _phi(pc: PhiCfg):
    if pc.kind == "indicator":
        return (lambda y: np.ones_like(np.asarray(y, dtype=float))), (pc.a, pc.b)
    if pc.kind == "gaussian":
        return (lambda y: np.exp(-((np.asarray(y) - pc.center) / pc.width) ** 2)), (pc.a, pc.b)
    return (lambda y: np.polyval(pc.coeffs, np.asarray(y, dtype=float))), (pc.a, pc.b)


def cmd_project(cfg: RunConfig, threads: int):
    spec, dc = cfg.spec(), cfg.dconfig()
    p, absD, _ = _root(cfg, spec, dc)
    pr = cfg.projection
    xs = cfg.sample_xs if cfg.sample_xs is not None else list(np.linspace(-1.0, 2.0, 20))
    if spec.support is not None and cfg.sample_xs is None:
        a1, a2 = spec.support
        xs = list(np.linspace(a1 - 1.0, a2 + 1.0, 20))
    outs = []
    for pc in pr.phis:
        f, sup = _phi(pc)
        vals = np.array([v for _, v in riesz_projection(p, pr.radius, pr.M, spec, f, xs, sup, pr.N)])
        outs.append(vals)
    _, _, _, mu, _, _ = eigen_data(p, spec, dc, xs)
    data = {"k": cpair(p.k), "abs_D": _num(absD),
            "projections": [[cpair(v) for v in o] for o in outs],
            "x": [_num(x) for x in xs],
            "defect_vs_eigenfunction": [_num(parallel_defect(mu, o)) for o in outs],
            "defect_between_phis": [_num(parallel_defect(outs[0], o)) for o in outs[1:]]}
    return data, {}, 0


def cmd_oracle(cfg: RunConfig, threads: int):
    spec = cfg.spec()
    data = {}
    if isinstance(spec, SquareWell):
        if spec.h.imag == 0 and spec.h.real < 0:
            data["bound_states"] = [cpair(p.k) for p in
                                    squarewell_bound_states(spec.h.real, spec.a1, spec.a2)]
        if cfg.region is not None:
            lo = cfg.contour().lo
            hi = cfg.contour().hi
            im_max = max(abs(lo.imag), abs(hi.imag))
            roots = squarewell_second_sheet_roots(spec.h, spec.a1, spec.a2, lo.real, im_max)
            data["second_sheet"] = [{"k": cpair(r.point.k), "residual": _num(r.residual)}
                                    for r in roots]
    elif isinstance(spec, PoschlTeller):
        for sheet in (Sheet.FIRST, Sheet.SECOND):
            data[sheet.value] = [{"k": cpair(r.point.k), "n": r.n, "residual": _num(r.residual)}
                                 for r in poschl_teller_roots(spec.V0, sheet, cfg.oracle.n_range)]
    return data, {}, 0


COMMANDS = {"resonances": cmd_resonances, "scan": cmd_scan, "evans": cmd_evans,
            "compare": cmd_compare, "eigenfunction": cmd_eigenfunction,
            "project": cmd_project, "oracle": cmd_oracle}


def build_parser():
    ap = argparse.ArgumentParser(prog="resonance-d",
                                 description="Resonances of -d^2/dx^2 + V via the D-determinant.")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", required=True, help="JSON configuration file")
    ap.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    ap.add_argument("--out", default=None, help="output path (default: config or stdout)")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        t0 = time.perf_counter()
        data, meta, code = COMMANDS[args.command](cfg, max(1, args.threads))
        meta["wall_time_s"] = time.perf_counter() - t0
        meta["threads"] = max(1, args.threads)
        path = args.out or cfg.output.path
        if args.command == "scan" and cfg.output.format == "csv":
            header, rows = data
            _write(_csv(header, rows), path)
            print(_dump({"schema": SCHEMA, "command": "scan", "metadata": meta}), file=sys.stderr,
                  end="")
        else:
            if args.command == "scan":
                header, rows = data
                data = {"columns": header,
                        "rows": [[_num(v) if isinstance(v, float) else v for v in r] for r in rows]}
            _write(_dump(_document(args.command, cfg, data, meta)), path)
        return code
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except ResonanceError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
