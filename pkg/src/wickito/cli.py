"""Command-line front end.

Every output embeds the library version and a hash of the run configuration
and contains no timestamps, so identical arguments give byte-identical files.
Exit codes: 0 success, 2 parameter error, 3 accuracy error.
"""
from __future__ import annotations

import argparse
import hashlib
import io
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .chaos import ChaosVector, dual_norm, norm, wick, wiener_norm
from .errors import AccuracyError, ParameterError
from .integrator import IntegrandFn, convergence_study
from .ito import NAMED_FUNCTIONS, default_t0, ito_exponential, ito_pathwise, ito_polynomial
from .process import CACHE_ENV, ProcessModel, TimeGrid, paths_csv_text, sample_paths, time_points
from .spectral import fbm_constant, parse_preset, quartic_r_printed, quartic_variance


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    preset: str | None
    modes: int | None
    grid: str | None
    seed: int | None
    output: str | None
    fmt: str
    options: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def header(self) -> dict:
        return {"version": __version__, "config_hash": self.hash, "config": self.to_dict()}


# ----------------------------------------------------------------------------


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ParameterError(f"expected comma-separated integers, got {text!r}") from exc


def _chaos_arg(text: str) -> ChaosVector:
    if text.startswith("@"):
        with open(text[1:]) as fh:
            text = fh.read()
    try:
        return ChaosVector.from_json(text)
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ParameterError(f"cannot parse chaos vector JSON: {exc}") from exc


def _grid_for(times: np.ndarray, base: TimeGrid | None = None) -> TimeGrid:
    if base is not None:
        return base
    default = TimeGrid()
    if default.contains(times):
        return default
    lo, hi = float(np.min(times)), float(np.max(times))
    pad = max(1.0, 0.1 * (hi - lo))
    return TimeGrid(min(lo, 0.0) - pad, max(hi, 0.0) + pad, 801)


def _model(args, times) -> ProcessModel:
    grid = TimeGrid.parse(args.grid) if args.grid else None
    model = ProcessModel(parse_preset(args.preset), args.modes, _grid_for(np.atleast_1d(times), grid))
    if not model.grid.contains(np.atleast_1d(times)):
        raise ParameterError(f"times fall outside the grid {args.grid}")
    if os.environ.get(CACHE_ENV):
        model.coeff_table()
    return model


def _emit_json(cfg: RunConfig, payload: dict, out) -> None:
    doc = {"meta": cfg.header(), **payload}
    out.write(json.dumps(doc, indent=2, sort_keys=True, allow_nan=True))
    out.write("\n")


def _header_lines(cfg: RunConfig) -> list[str]:
    return [f"wickito {__version__} config_hash={cfg.hash}", "config=" + json.dumps(cfg.to_dict(), sort_keys=True)]


# ----------------------------------------------------------------------------
# subcommands


def cmd_simulate(args, cfg, out):
    times = time_points(args.times)
    model = _model(args, times)
    paths = sample_paths(model, times, args.paths, args.seed)
    out.write(paths_csv_text(times, paths, _header_lines(cfg)))


def cmd_covariance(args, cfg, out):
    model = _model(args, [args.t, args.s])
    d = model.density
    t, s = args.t, args.s
    payload = {"t": t, "s": s, "preset": d.spec,
               "quadrature": model.covariance(t, s),
               "series_raw": model.series_covariance(t, s, corrected=False),
               "series_corrected": model.series_covariance(t, s, corrected=True),
               "modes": model.modes}
    if d.name == "fbm":
        H = d.params["H"]
        v = fbm_constant(H)
        bracket = abs(t) ** (2 * H) + abs(s) ** (2 * H) - abs(t - s) ** (2 * H)
        payload.update({"V_H": v, "closed_form_VH": v * bracket, "closed_form_half_VH": 0.5 * v * bracket})
    elif d.name == "white":
        payload["closed_form_min"] = min(t, s) if t * s > 0 else 0.0
    elif d.name == "quartic":
        payload.update({"closed_form_variance_t": quartic_variance(t), "printed_r_t": quartic_r_printed(t),
                        "quadrature_variance_t": model.r(t)})
    _emit_json(cfg, payload, out)


def cmd_wick(args, cfg, out):
    F, G = _chaos_arg(args.left), _chaos_arg(args.right)
    P = wick(F, G)
    payload = {"result": P.to_json(), "truncation": list(P.truncation),
               "wiener_norm": wiener_norm(P)}
    if args.k is not None:
        payload.update({"norm_k": norm(P, args.k), "dual_norm_k": dual_norm(P, args.k), "k": args.k})
    _emit_json(cfg, payload, out)


def cmd_integrate(args, cfg, out):
    model = _model(args, [args.a, args.b])
    if args.integrand == "one":
        Y = IntegrandFn.constant_value(1.0, p=model.N + 4)
    elif args.integrand == "X":
        Y = IntegrandFn.process(model)
    else:
        raise ParameterError(f"unknown integrand {args.integrand!r}")
    p = args.p if args.p is not None else model.N + 5
    rep = convergence_study(Y, model, args.a, args.b, _ints(args.n), p=p, tol=args.tol)
    if cfg.fmt == "csv":
        out.write(rep.csv_text(_header_lines(cfg)))
    else:
        _emit_json(cfg, {"report": rep.to_dict()}, out)


def cmd_ito_check(args, cfg, out):
    model = _model(args, [args.t, args.t0 if args.t0 is not None else 0.0])
    t0 = default_t0(model) if args.t0 is None else args.t0
    name = args.f
    regime = args.regime
    if regime is None:
        regime = "exact" if name in ("x", "x2", "x3", "x4") else "wick-exp" if name == "exp" else "monte-carlo"
    if regime == "exact":
        degree = {"x": 1, "x2": 2, "x3": 3, "x4": 4}.get(name)
        if degree is None:
            raise ParameterError("exact regime needs f in x, x2, x3, x4")
        rep = ito_polynomial(model, degree, t0, args.t, args.steps, variance=args.variance,
                             drop_correction=args.drop_correction)
    elif regime == "wick-exp":
        if name not in ("exp", "cos", "sin"):
            raise ParameterError("wick-exp regime needs f in exp, cos, sin")
        rep = ito_exponential(model, args.alpha, t0, args.t, args.steps, order=args.order,
                              variance=args.variance, tol=args.tol)
    elif regime == "monte-carlo":
        if name not in NAMED_FUNCTIONS:
            raise ParameterError(f"unknown function {name!r}; choose from {sorted(NAMED_FUNCTIONS)}")
        f, fp, fpp = NAMED_FUNCTIONS[name]
        rep = ito_pathwise(model, f, fp, fpp, t0, args.t, args.steps, args.paths, args.seed or 0, name=name)
    else:
        raise ParameterError(f"unknown regime {regime!r}")
    payload = rep.to_dict()
    if not args.full:
        payload.pop("terms")
        payload["term_expectations"] = {k: (v.expectation() if isinstance(v, ChaosVector) else v["mean"])
                                        for k, v in rep.terms.items()}
    _emit_json(cfg, {"report": payload}, out)


def cmd_convergence(args, cfg, out):
    modes = _ints(args.modes_list)
    if any(b <= a for a, b in zip(modes, modes[1:])):
        raise ParameterError("mode list must increase")
    d = parse_preset(args.preset)
    grid = TimeGrid.parse(args.grid) if args.grid else _grid_for(np.array([args.t, args.s]))
    exact = ProcessModel(d, modes[0], grid).covariance(args.t, args.s)
    rows = []
    for K in modes:
        m = ProcessModel(d, K, grid)
        raw = m.series_covariance(args.t, args.s, corrected=False)
        cor = m.series_covariance(args.t, args.s, corrected=True)
        rows.append({"modes": K, "series_raw": raw, "series_corrected": cor,
                     "rel_error_raw": abs(raw - exact) / abs(exact) if exact else math.nan,
                     "rel_error_corrected": abs(cor - exact) / abs(exact) if exact else math.nan})
    if cfg.fmt == "csv":
        for line in _header_lines(cfg):
            out.write(f"# {line}\n")
        out.write(f"# quadrature={exact!r}\n")
        out.write("modes,series_raw,series_corrected,rel_error_raw,rel_error_corrected\n")
        for r in rows:
            out.write(",".join([str(r["modes"])] + [repr(float(r[k])) for k in
                                                    ("series_raw", "series_corrected", "rel_error_raw",
                                                     "rel_error_corrected")]) + "\n")
    else:
        _emit_json(cfg, {"t": args.t, "s": args.s, "quadrature": exact, "table": rows}, out)


# ----------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wickito", description="Wick-Ito calculus experiments")
    parser.add_argument("--version", action="version", version=f"wickito {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p, fmt="json", seed=False):
        p.add_argument("--preset", default="white", help="white | quartic | fbm:H=<x>")
        p.add_argument("--modes", type=int, default=200, help="number of Hermite modes K")
        p.add_argument("--grid", default=None, help="model time grid start:stop:step")
        p.add_argument("--out", default=None, help="output file (default stdout)")
        p.add_argument("--format", dest="fmt", default=fmt, choices=["json", "csv"])
        if seed:
            p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("simulate", help="sample paths of X as CSV")
    common(p, fmt="csv", seed=True)
    p.add_argument("--paths", type=int, default=1)
    p.add_argument("--times", default="0:1:0.01", help="start:stop:step")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("covariance", help="covariance by quadrature, series and closed form")
    common(p)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--s", type=float, required=True)
    p.set_defaults(func=cmd_covariance)

    p = sub.add_parser("wick", help="Wick product of two chaos vectors given as JSON (or @file)")
    p.add_argument("--left", required=True)
    p.add_argument("--right", required=True)
    p.add_argument("--k", type=float, default=None, help="also report norms at this index")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_wick, fmt="json", preset=None, modes=None, grid=None)

    p = sub.add_parser("integrate", help="Wick-Riemann convergence study")
    common(p)
    p.add_argument("--integrand", default="X", choices=["one", "X"])
    p.add_argument("--a", type=float, default=0.0)
    p.add_argument("--b", type=float, default=1.0)
    p.add_argument("--n", default="8,16,32,64,128,256,512,1024")
    p.add_argument("--p", type=float, default=None, help="dual index (default N+5)")
    p.add_argument("--tol", type=float, default=1e-10)
    p.set_defaults(func=cmd_integrate)

    p = sub.add_parser("ito-check", help="verify the Ito formula")
    common(p, seed=True)
    p.add_argument("--f", default="x2", help="x, x2, x3, x4, exp, cos, sin")
    p.add_argument("--regime", default=None, choices=["exact", "wick-exp", "monte-carlo"])
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--t0", type=float, default=None)
    p.add_argument("--steps", type=int, default=1024)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--order", type=int, default=12)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--paths", type=int, default=10_000)
    p.add_argument("--variance", default="exact", choices=["exact", "series"])
    p.add_argument("--drop-correction", action="store_true")
    p.add_argument("--full", action="store_true", help="include every term as a chaos vector")
    p.set_defaults(func=cmd_ito_check)

    p = sub.add_parser("convergence", help="series covariance against quadrature as K grows")
    common(p)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--s", type=float, default=1.0)
    p.add_argument("--modes-list", default="50,100,200")
    p.set_defaults(func=cmd_convergence)
    return parser


def _config(args) -> RunConfig:
    skip = {"func", "subcommand", "preset", "modes", "grid", "seed", "out", "fmt"}
    options = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    return RunConfig(args.subcommand, args.preset, args.modes, args.grid, getattr(args, "seed", None),
                     args.out, args.fmt, options)


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    cfg = _config(args)
    buf = io.StringIO()
    try:
        args.func(args, cfg, buf)
    except AccuracyError as exc:
        print(f"wickito: accuracy error: {exc}", file=sys.stderr)
        return 3
    except (ParameterError, ValueError) as exc:
        print(f"wickito: {exc}", file=sys.stderr)
        return 2
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
