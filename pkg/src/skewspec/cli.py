"""Command-line surface: reproducible experiments with CSV/PGM/JSON outputs.

Exit codes: 0 success, 2 argument/validation error, 3 numeric failure.
Every subcommand writes a `<out>.config.json` sidecar with the resolved
configuration; identical configurations produce identical outputs
regardless of the thread count (the density table's runtime column is the
one timing-dependent field).
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .dynamics import (Frequency, SamplingFunction, SampledCurve, TorusPoint,
                       sqrt2_frequency)
from .operators import ModelParams
from .greens import (SuitabilityParams, resonance_grid, unsuitability_grid,
                     write_grid_csv, write_grid_pgm)
from .density import (appendix_a_model, certify_interval, density_table,
                      edge_bounds, figure1_model, write_density_csv)
from .eigensolve import EigensolveError, eigenvalues_all
from .greens import SingularEnergyError
from .operators import build_restriction
from .perturb import (AnchorConditionError, PreconditionError, good_x_set,
                      perturbation_suite, trace_curve, write_curve_csv,
                      write_perturbation_csv)
from .fastvar import FastVarConfig, RectUnionMask, resonant_measure, write_resonant_csv
from .ioformats import fmt12, resolve_threads, write_csv_rows, write_json_sidecar

PAPER_N_SEQUENCE = (320, 640, 1280, 2560, 5120, 10240, 20480, 40960)


@dataclass
class RunConfig:
    command: str
    options: dict = field(default_factory=dict)
    out: str = "out.csv"
    seed: int = 0
    threads: int = 1


def _positive(kind=float, name="value"):
    def conv(text):
        v = kind(text)
        if v <= 0:
            raise argparse.ArgumentTypeError(f"{name} must be positive, got {text}")
        return v
    return conv


def _int_list(text):
    try:
        return [int(tok) for tok in text.split(",") if tok]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad integer list {text!r}") from exc


def _float_list(text):
    try:
        return [float(tok) for tok in text.split(",") if tok]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad float list {text!r}") from exc


def _add_model_flags(p: argparse.ArgumentParser, default_model: str,
                     default_h: float):
    p.add_argument("--model", choices=("appendixA", "figure1"),
                   default=default_model,
                   help="builtin model (sampling function, frequency, form)")
    p.add_argument("--f-json", metavar="FILE",
                   help="sampling function JSON overriding the builtin one")
    p.add_argument("--alpha", type=float, help="frequency in [0,1)")
    p.add_argument("--h", type=_positive(float, "--h"), default=default_h,
                   help="coupling strength")
    p.add_argument("--form", choices=("skew", "square"),
                   help="potential form override")
    p.add_argument("--x", type=float, default=0.0, help="phase x")
    p.add_argument("--y", type=float, default=0.0, help="phase y")


def _resolve_model(args) -> ModelParams:
    base = appendix_a_model(args.h) if args.model == "appendixA" else figure1_model(args.h)
    f = base.f
    if args.f_json:
        with open(args.f_json) as fh:
            f = SamplingFunction.from_json(fh.read())
    alpha = base.alpha if args.alpha is None else Frequency(args.alpha)
    form = base.form if args.form is None else args.form
    return ModelParams(f, alpha, args.h, TorusPoint(args.x, args.y), form)


def _model_config(params: ModelParams) -> dict:
    return {
        "f_coeffs": sorted((k, c.real, c.imag) for k, c in params.f.coeffs.items()),
        "loja_F": params.f.loja_F,
        "loja_exp": params.f.loja_exp,
        "alpha": params.alpha.alpha,
        "h": params.h,
        "x": params.phase.x,
        "y": params.phase.y,
        "form": params.form,
    }


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="skewspec",
        description="Spectral experiments for skew-shift Schrodinger operators")
    ap.add_argument("--version", action="version", version=f"skewspec {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("density", help="density-of-spectrum table over window sizes")
    _add_model_flags(p, "appendixA", 1.0)
    p.add_argument("--N", type=_int_list, default=list(PAPER_N_SEQUENCE),
                   help="comma-separated window half-widths")
    p.add_argument("--tol", type=_positive(float, "--tol"), default=None)
    p.add_argument("--naive-phase", action="store_true",
                   help="plain double phase arithmetic (precision comparison)")
    p.add_argument("--count-threshold", type=int, default=6,
                   help="eigenvalue count certifying an interval")
    p.add_argument("--certify", nargs=2, type=float, metavar=("LO", "HI"),
                   help="also certify the interval [LO,HI] at the largest N")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--out", default="density.csv")

    p = sub.add_parser("edges", help="extreme eigenvalues vs the range of f")
    _add_model_flags(p, "figure1", 0.1)
    p.add_argument("--N", type=int, default=2000, help="window half-width")
    p.add_argument("--h-list", type=_float_list, default=None,
                   help="comma-separated couplings (overrides --h)")
    p.add_argument("--out", default="edges.csv")

    p = sub.add_parser("resonance-grid",
                       help="(x,y) cells where E is within tol of the window spectrum")
    _add_model_flags(p, "figure1", 0.1)
    p.add_argument("--window", type=int, default=1, help="window half-width")
    p.add_argument("--E", type=float, default=0.0)
    p.add_argument("--nx", type=_positive(int, "--nx"), default=400)
    p.add_argument("--ny", type=_positive(int, "--ny"), default=400)
    p.add_argument("--tol", type=_positive(float, "--tol"), default=0.01,
                   help="spectrum-membership tolerance")
    p.add_argument("--out", default="resonance.pgm")

    p = sub.add_parser("suitability-grid", help="unsuitable (x,y) cells for H - E")
    _add_model_flags(p, "figure1", 0.05)
    p.add_argument("--N", type=_positive(int, "--N"), default=20)
    p.add_argument("--E", type=float, default=0.0)
    p.add_argument("--gamma", type=_positive(float, "--gamma"), default=1.0)
    p.add_argument("--Gamma", type=float, default=None,
                   help="resolvent exponent (default gamma*N/2)")
    p.add_argument("--p", type=int, default=5)
    p.add_argument("--nx", type=_positive(int, "--nx"), default=100)
    p.add_argument("--ny", type=_positive(int, "--ny"), default=100)
    p.add_argument("--hs", action="store_true",
                   help="Hilbert-Schmidt threshold on the truncated potential")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--out", default="suitability.pgm")

    p = sub.add_parser("trace-curve", help="trace xi(x) with lambda(x, xi(x)) = E0")
    _add_model_flags(p, "figure1", 0.1)
    p.add_argument("--window", type=int, default=1)
    p.add_argument("--E0", type=float, default=0.0)
    p.add_argument("--y0", type=float, default=0.25, help="anchor height")
    p.add_argument("--x0", type=float, default=None,
                   help="anchor x (default: scan for a valid anchor)")
    p.add_argument("--delta", type=_positive(float, "--delta"), default=2.9)
    p.add_argument("--epsilon", type=_positive(float, "--epsilon"), default=0.03)
    p.add_argument("--nx", type=_positive(int, "--nx"), default=500)
    p.add_argument("--out", default="curve.csv")

    p = sub.add_parser("fastvar-check", help="double-resonance measure vs its bound")
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--R", type=_int_list, default=[2, 3, 4, 5, 6, 7, 8],
                   help="comma-separated scales")
    p.add_argument("--M", type=int, default=None,
                   help="section bound (default: measured from the mask)")
    p.add_argument("--rect", action="append", type=_float_list, metavar="X,Y,WX,WY",
                   help="rectangle of the mask; repeatable")
    p.add_argument("--random", type=int, default=0, metavar="K",
                   help="use K random rectangles instead of --rect")
    p.add_argument("--area", type=_positive(float, "--area"), default=1e-4,
                   help="total area of random rectangles")
    p.add_argument("--xi-amp", type=float, default=0.03,
                   help="amplitude of the sinusoidal test curve (slope <= 1/3)")
    p.add_argument("--y-level", type=float, default=0.3, help="curve base height")
    p.add_argument("--nx", type=_positive(int, "--nx"), default=20000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="fastvar.csv")

    p = sub.add_parser("perturb-suite", help="randomized eigenvalue-stability suite")
    p.add_argument("--trials", type=_positive(int, "--trials"), default=100)
    p.add_argument("--t-max", type=float, default=0.24)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="perturb.csv")

    p = sub.add_parser("good-x", help="x-set where the potential avoids E0 off-center")
    _add_model_flags(p, "appendixA", 1e-4)
    p.add_argument("--M", type=int, default=1, help="window half-width")
    p.add_argument("--y0", type=float, default=0.3, help="anchor height, E0 = f(y0)")
    p.add_argument("--E0", type=float, default=None, help="override E0")
    p.add_argument("--nx", type=_positive(int, "--nx"), default=4000)
    p.add_argument("--out", default="goodx.csv")

    return ap


def _cmd_density(args) -> int:
    params = _resolve_model(args)
    threads = resolve_threads(args.threads)
    reports = density_table(args.N, params, tol=args.tol, threads=threads,
                            naive_phase=args.naive_phase)
    write_density_csv(reports, args.out)
    cfg = {"command": "density", "N": args.N, "tol": args.tol,
           "naive_phase": args.naive_phase, "threads": threads,
           "count_threshold": args.count_threshold, "model": _model_config(params)}
    if args.certify:
        lo, hi = args.certify
        spec = eigenvalues_all(build_restriction(params, -max(args.N), max(args.N)))
        ok = certify_interval(spec, lo, hi, args.count_threshold)
        cfg["certify"] = {"lo": lo, "hi": hi, "certified": ok}
        print(f"certify [{fmt12(lo)}, {fmt12(hi)}]: {'yes' if ok else 'no'}")
    write_json_sidecar(args.out, cfg, __version__)
    for r in reports:
        print(f"N={r.N}  delta={fmt12(r.delta)}  range=[{fmt12(r.e_low)}, "
              f"{fmt12(r.e_high)}]  {r.runtime_s:.1f}s")
    return 0


def _cmd_edges(args) -> int:
    hs = args.h_list if args.h_list else [args.h]
    rows = []
    for h in hs:
        if h <= 0:
            raise ValueError("couplings must be positive")
        params = _resolve_model(args)
        params = ModelParams(params.f, params.alpha, h, params.phase, params.form)
        rep = edge_bounds(params, args.N)
        rows.append([fmt12(h), fmt12(rep.max_f), fmt12(rep.min_f),
                     fmt12(rep.emax_N), fmt12(rep.emin_N)])
        print(f"h={fmt12(h)}  top={fmt12(rep.emax_N)} in [{fmt12(rep.max_f + h)}, "
              f"{fmt12(rep.max_f + 2 * h)}]  bottom={fmt12(rep.emin_N)}")
    write_csv_rows(args.out, ["h", "max_f", "min_f", "emax_N", "emin_N"], rows)
    write_json_sidecar(args.out, {"command": "edges", "N": args.N, "h_list": hs,
                                  "model": _model_config(_resolve_model(args))},
                       __version__)
    return 0


def _grid_outputs(mask, out, value_name, config) -> None:
    out = str(out)
    csv_path = out[:-4] + ".csv" if out.endswith(".pgm") else out + ".csv"
    write_grid_pgm(mask, out)
    write_grid_csv(mask, csv_path, value_name=value_name,
                   value_map=(lambda marked: int(marked)) if value_name == "marked"
                   else (lambda marked: int(not marked)))
    write_json_sidecar(out, config, __version__)


def _cmd_resonance_grid(args) -> int:
    params = _resolve_model(args)
    grid = resonance_grid(params, args.window, args.E, args.nx, args.ny, args.tol)
    cfg = {"command": "resonance-grid", "window": args.window, "E": args.E,
           "nx": args.nx, "ny": args.ny, "tol": args.tol,
           "marked_fraction": float(grid.mask.mean()), "model": _model_config(params)}
    _grid_outputs(grid.mask, args.out, "marked", cfg)
    print(f"marked fraction: {fmt12(grid.mask.mean())}")
    return 0


def _cmd_suitability_grid(args) -> int:
    params = _resolve_model(args)
    gamma = args.gamma
    Gamma = args.Gamma if args.Gamma is not None else gamma * args.N / 2.0
    sp = SuitabilityParams(gamma, Gamma, args.p)
    threads = resolve_threads(args.threads)
    grid = unsuitability_grid(params, args.E, args.N, sp, args.nx, args.ny,
                              use_hs=args.hs, threads=threads)
    cfg = {"command": "suitability-grid", "N": args.N, "E": args.E,
           "gamma": gamma, "Gamma": Gamma, "p": args.p, "nx": args.nx,
           "ny": args.ny, "hs": args.hs, "threads": threads,
           "measure_estimate": grid.measure_estimate, "model": _model_config(params)}
    _grid_outputs(grid.mask, args.out, "suitable", cfg)
    print(f"unsuitable measure estimate: {fmt12(grid.measure_estimate)}")
    return 0


def _cmd_trace_curve(args) -> int:
    params = _resolve_model(args)
    w = (-args.window, args.window)
    xs = np.arange(args.nx) / args.nx
    candidates = [args.x0] if args.x0 is not None else list(xs[:: max(1, args.nx // 100)])
    sample = None
    anchor_x = None
    last_err = None
    for x0 in candidates:
        anchored = ModelParams(params.f, params.alpha, params.h,
                               TorusPoint(x0, args.y0), params.form)
        i0 = int(np.searchsorted(xs, x0 % 1.0))
        order = np.concatenate([xs[i0:], xs[:i0]])
        try:
            sample = trace_curve(anchored, w, args.E0, order,
                                 delta=args.delta, epsilon=args.epsilon)
            anchor_x = x0
            break
        except AnchorConditionError as exc:
            last_err = exc
    if sample is None:
        raise AnchorConditionError(f"no valid anchor found: {last_err}")
    order_idx = np.argsort(sample.xs, kind="stable")
    from .perturb import CurveSample
    sorted_sample = CurveSample(sample.xs[order_idx], sample.xis[order_idx],
                                sample.residuals[order_idx],
                                sample.accepted[order_idx],
                                sample.deriv_bound, sample.E0)
    write_curve_csv(sorted_sample, args.out)
    cfg = {"command": "trace-curve", "window": args.window, "E0": args.E0,
           "y0": args.y0, "anchor_x": anchor_x, "delta": args.delta,
           "epsilon": args.epsilon, "nx": args.nx,
           "acceptance_fraction": sample.acceptance_fraction,
           "model": _model_config(params)}
    write_json_sidecar(args.out, cfg, __version__)
    print(f"anchor x0={fmt12(anchor_x)}  accepted "
          f"{fmt12(100 * sample.acceptance_fraction)}% of {args.nx} samples")
    return 0


def _random_rects(rng, count: int, total_area: float):
    rects = []
    per = total_area / count
    for _ in range(1000):
        if len(rects) == count:
            break
        aspect = float(rng.uniform(0.2, 5.0))
        wx = min(np.sqrt(per * aspect), 0.5)
        wy = per / wx
        cand = (float(rng.uniform(0, 1)), float(rng.uniform(0, 1)), wx, wy)
        try:
            RectUnionMask(rects + [cand])
        except ValueError:
            continue
        rects.append(cand)
    if len(rects) != count:
        raise ValueError("could not place disjoint random rectangles")
    return rects


def _cmd_fastvar_check(args) -> int:
    alpha = sqrt2_frequency() if args.alpha is None else Frequency(args.alpha)
    if abs(args.xi_amp) * 2 * np.pi > 1.0 / 3.0:
        raise ValueError("--xi-amp too large: the curve slope must stay <= 1/3")
    if args.random:
        rng = np.random.default_rng(args.seed)
        rects = _random_rects(rng, args.random, args.area)
    elif args.rect:
        rects = [tuple(r) for r in args.rect]
        for r in rects:
            if len(r) != 4:
                raise ValueError("--rect needs X,Y,WX,WY")
    else:
        raise ValueError("provide --rect or --random K")
    mask = RectUnionMask(rects)
    amp, lvl = args.xi_amp, args.y_level
    xi = SampledCurve.from_function(lambda t: lvl + amp * np.sin(2 * np.pi * t))
    reports = []
    for R in args.R:
        M = args.M if args.M is not None else mask.max_section_intervals()
        cfg = FastVarConfig(xi, alpha, R, M)
        reports.append(resonant_measure(cfg, mask, args.nx))
    write_resonant_csv(reports, args.out)
    write_json_sidecar(args.out, {"command": "fastvar-check", "R": args.R,
                                  "M": args.M, "rects": [list(r) for r in rects],
                                  "nx": args.nx, "seed": args.seed,
                                  "alpha": alpha.alpha, "xi_amp": amp,
                                  "y_level": lvl}, __version__)
    failures = [r for r in reports if not r.passed]
    for r in reports:
        print(f"R={r.R}  measured={fmt12(r.measured)}  bound={fmt12(r.bound)}  "
              f"{'pass' if r.passed else 'FAIL'}")
    return 3 if failures else 0


def _cmd_perturb_suite(args) -> int:
    reports = perturbation_suite(args.trials, args.seed, args.t_max)
    write_perturbation_csv(reports, args.out)
    write_json_sidecar(args.out, {"command": "perturb-suite", "trials": args.trials,
                                  "t_max": args.t_max, "seed": args.seed},
                       __version__)
    failures = sum(1 for r in reports if not r.passed)
    print(f"{args.trials - failures}/{args.trials} trials satisfied all conclusions")
    return 3 if failures else 0


def _cmd_good_x(args) -> int:
    params = _resolve_model(args)
    params = ModelParams(params.f, params.alpha, params.h,
                         TorusPoint(params.phase.x, args.y0), "skew")
    E0 = args.E0 if args.E0 is not None else float(params.f.value(args.y0))
    report = good_x_set(params, E0, args.M, args.nx)
    write_csv_rows(args.out, ["start", "length"],
                   [[fmt12(s), fmt12(ln)] for s, ln in report.intervals])
    write_json_sidecar(args.out, {"command": "good-x", "M": args.M, "E0": E0,
                                  "nx": args.nx, "measure": report.measure,
                                  "meets_half": report.meets_half,
                                  "h_threshold": report.h_threshold,
                                  "model": _model_config(params)}, __version__)
    print(f"good-x measure {fmt12(report.measure)} over {len(report.intervals)} "
          f"interval(s); half-circle expectation "
          f"{'met' if report.meets_half else 'not met'}")
    return 0


_DISPATCH = {
    "density": _cmd_density,
    "edges": _cmd_edges,
    "resonance-grid": _cmd_resonance_grid,
    "suitability-grid": _cmd_suitability_grid,
    "trace-curve": _cmd_trace_curve,
    "fastvar-check": _cmd_fastvar_check,
    "perturb-suite": _cmd_perturb_suite,
    "good-x": _cmd_good_x,
}

_NUMERIC_FAILURES = (AnchorConditionError, PreconditionError,
                     EigensolveError, SingularEnergyError, ArithmeticError)


def dispatch(args) -> int:
    return _DISPATCH[args.command](args)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else 0
    try:
        return dispatch(args)
    except (ValueError, OSError) as exc:
        if isinstance(exc, _NUMERIC_FAILURES):
            print(f"numeric failure: {exc}", file=sys.stderr)
            return 3
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except _NUMERIC_FAILURES as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
