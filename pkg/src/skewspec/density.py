"""Density-of-spectrum certification for growing windows and spectral edges.

Removing the coupling across the window boundary is a rank-4 change, so an
interval holding more than 5 eigenvalues of the restriction must meet the
full-line spectrum.  The density figure reported for a window is 2.5x the
largest adjacent eigenvalue gap inside it.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dynamics import SamplingFunction, TorusPoint, sqrt2_frequency
from .operators import ModelParams, WindowOperator, build_restriction
from .eigensolve import Spectrum, eigenvalues_all


def appendix_a_model(h: float = 1.0) -> ModelParams:
    """2cos(2 pi t) sampled along alpha n^2, the density-table model."""
    return ModelParams(SamplingFunction.cosine(2.0), sqrt2_frequency(), h,
                       TorusPoint(0.0, 0.0), "square")


def figure1_model(h: float = 0.1) -> ModelParams:
    """cos(2 pi t) along the skew-shift, the resonance-picture model."""
    return ModelParams(SamplingFunction.cosine(1.0), sqrt2_frequency(), h,
                       TorusPoint(0.0, 0.0), "skew")


@dataclass(frozen=True)
class DensityReport:
    N: int
    delta: float
    e_low: float   # 5th smallest eigenvalue: left end of the certified range
    e_high: float  # 5th largest eigenvalue: right end of the certified range
    runtime_s: float

    def __post_init__(self):
        if self.delta < 0:
            raise ValueError("delta must be nonnegative")
        if self.e_low > self.e_high:
            raise ValueError("certified range is empty")


def delta_density(spec: Spectrum) -> float:
    """Density figure of a window spectrum: 2.5x the largest adjacent gap."""
    ev = spec.eigenvalues
    if ev.size < 6:
        raise ValueError("need at least 6 eigenvalues")
    return 2.5 * float(np.max(np.diff(ev)))


def certify_interval(spec: Spectrum, a: float, b: float,
                     count_threshold: int = 6) -> bool:
    """True iff [a,b] holds >= count_threshold eigenvalues of the restriction.

    With the default threshold 6 ("more than 5"), a True verdict certifies
    that the full-line spectrum intersects [a,b] by the rank-4 decomposition.
    """
    if b < a:
        raise ValueError("need a <= b")
    ev = spec.eigenvalues
    n = int(np.searchsorted(ev, b, side="right") - np.searchsorted(ev, a, side="left"))
    return n >= count_threshold


def _naive_square_diag(params: ModelParams, N: int) -> np.ndarray:
    # plain double phase arithmetic, for precision comparisons only
    n = np.arange(-N, N + 1, dtype=float)
    al = params.alpha.alpha
    if params.form == "square":
        args = (al * n * n + params.phase.y) % 1.0
    else:
        args = (params.phase.y + n * params.phase.x + al * n * (n - 1)) % 1.0
    return params.f.value(args)


def density_report(params: ModelParams, N: int, tol: float | None = None,
                   naive_phase: bool = False) -> DensityReport:
    """Density figure and certified range for the window [-N, N]."""
    if N < 3:
        raise ValueError("need N >= 3 for a certified range")
    t0 = time.perf_counter()
    if naive_phase:
        op = WindowOperator(-N, N, _naive_square_diag(params, N), params.h)
    else:
        op = build_restriction(params, -N, N)
    spec = eigenvalues_all(op, tol)
    ev = spec.eigenvalues
    return DensityReport(N, delta_density(spec), float(ev[4]), float(ev[-5]),
                         time.perf_counter() - t0)


def density_table(Ns, params: ModelParams, tol: float | None = None,
                  threads: int = 1, naive_phase: bool = False) -> list[DensityReport]:
    """One density report per window size, computed independently."""
    Ns = list(Ns)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(
                lambda N: density_report(params, N, tol, naive_phase), Ns))
    return [density_report(params, N, tol, naive_phase) for N in Ns]


def write_density_csv(reports, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("N,delta,E_low,E_high,runtime_s\r\n")
        for r in reports:
            fh.write(f"{r.N},{r.delta:.12g},{r.e_low:.12g},{r.e_high:.12g},"
                     f"{r.runtime_s:.12g}\r\n")


def argmax_on_circle(f: SamplingFunction, n_grid: int = 8192,
                     refine_tol: float = 1e-12) -> float:
    """Location of the maximum of f, grid search plus golden-section refinement."""
    ts = np.arange(n_grid) / n_grid
    vals = f.value(ts)
    t0 = float(ts[int(np.argmax(vals))])
    lo, hi = t0 - 2.0 / n_grid, t0 + 2.0 / n_grid
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - invphi * (hi - lo)
    x2 = lo + invphi * (hi - lo)
    f1, f2 = float(f.value(x1 % 1.0)), float(f.value(x2 % 1.0))
    while hi - lo > refine_tol:
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + invphi * (hi - lo)
            f2 = float(f.value(x2 % 1.0))
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - invphi * (hi - lo)
            f1 = float(f.value(x1 % 1.0))
    return (0.5 * (lo + hi)) % 1.0


def argmin_on_circle(f: SamplingFunction) -> float:
    neg = SamplingFunction({k: -c for k, c in f.coeffs.items()},
                           loja_F=f.loja_F, loja_exp=f.loja_exp)
    return argmax_on_circle(neg)


@dataclass(frozen=True)
class EdgeReport:
    h: float
    max_f: float
    min_f: float
    emax_N: float
    emin_N: float

    def __post_init__(self):
        if self.emax_N > self.max_f + 2.0 * self.h + 1e-12:
            raise ValueError("top eigenvalue exceeds the max(f) + 2h envelope")
        if self.emin_N < self.min_f - 2.0 * self.h - 1e-12:
            raise ValueError("bottom eigenvalue undercuts the min(f) - 2h envelope")


def edge_bounds(params: ModelParams, N: int) -> EdgeReport:
    """Extreme finite-window eigenvalues at phases aligned with extrema of f.

    At phase (0, y0) the potential takes the value f(y0) at both sites 0 and
    1, so the two-site test vector pins the top eigenvalue above max(f) + h;
    the mirrored construction at the argmin pins the bottom below min(f) - h.
    """
    if N < 1:
        raise ValueError("need N >= 1")
    if params.form != "skew":
        raise ValueError("edge bounds use the skew form (sites 0,1 share the phase)")
    f = params.f
    y_top = argmax_on_circle(f)
    y_bot = argmin_on_circle(f)
    max_f = float(f.value(y_top))
    min_f = float(f.value(y_bot))
    op_top = build_restriction(params.replace_phase(x=0.0, y=y_top), -N, N)
    op_bot = build_restriction(params.replace_phase(x=0.0, y=y_bot), -N, N)
    emax = float(eigenvalues_all(op_top).eigenvalues[-1])
    emin = float(eigenvalues_all(op_bot).eigenvalues[0])
    return EdgeReport(params.h, max_f, min_f, emax, emin)
