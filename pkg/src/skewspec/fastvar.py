"""Fast-variable coordinates along a curve and double-resonance elimination.

For ell between R and 2R the orbit coordinate psi_ell(x) = xi(x) + ell*x +
ell(ell-1)*alpha wraps the circle ell times, so its branches decorrelate the
two torus coordinates; `resonant_measure` checks the resulting measure bound
120 R^4 sqrt(|U|) + 2M/R on grids.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import Frequency, mod1_int_mult
from .greens import ResonanceGrid, UnsuitabilityGrid
from .perturb import PreconditionError

_SLOPE_CAP = 1.0 / 3.0


def _vectorize_curve(fn):
    probe = np.array([0.0, 0.25])
    try:
        out = np.asarray(fn(probe), dtype=float)
        if out.shape == probe.shape:
            return fn
    except Exception:
        pass
    return np.vectorize(lambda t: float(fn(t)), otypes=[float])


@dataclass
class FastVarConfig:
    """A traced curve xi with |xi'| <= 1/3, the frequency, and the scale R."""

    xi: object  # callable on the circle, real-valued continuous lift
    alpha: Frequency
    R: int
    M_intervals: int
    grid_check: int = 4096

    def __post_init__(self):
        if self.R < 1:
            raise ValueError("R must be >= 1")
        if self.M_intervals < 0:
            raise ValueError("M_intervals must be >= 0")
        self._xi = _vectorize_curve(self.xi)
        ts = np.arange(self.grid_check + 1) / self.grid_check
        vals = self._xi(ts % 1.0)
        slopes = np.abs(np.diff(vals)) * self.grid_check
        worst = float(np.max(slopes))
        if worst > _SLOPE_CAP + 1e-9:
            raise ValueError(f"curve slope {worst:.4f} exceeds 1/3 on the check grid")

    def xi_values(self, x):
        return self._xi(np.asarray(x, dtype=float) % 1.0)


def fast_coords(cfg: FastVarConfig, x: float, ell: int) -> tuple[float, float]:
    """(phi_ell, psi_ell)(x): the orbit point reached after ell steps from (x, xi(x))."""
    if not cfg.R <= ell <= 2 * cfg.R:
        raise ValueError(f"ell={ell} outside [R, 2R] = [{cfg.R}, {2 * cfg.R}]")
    a = cfg.alpha.alpha
    phi = (x + mod1_int_mult(a, 2 * ell)) % 1.0
    psi = (float(cfg.xi_values(x)) + ell * x + mod1_int_mult(a, ell * (ell - 1))) % 1.0
    return phi, psi


def branch_inverses(cfg: FastVarConfig, ell: int, y: float,
                    tol: float = 1e-12, max_iter: int = 80) -> np.ndarray:
    """All ell solutions of psi_ell(x) = y (mod 1), one per lift branch.

    The lift Psi(x) = xi(x) + ell*x + c increases by exactly ell over one
    period with slope in [ell - 1/3, ell + 1/3], so each of the ell integer
    translates of y admits one monotone-bisection root.
    """
    if ell < 1:
        raise ValueError("ell must be >= 1")
    c = mod1_int_mult(cfg.alpha.alpha, ell * (ell - 1))

    def lift(x):
        return cfg.xi_values(x) + ell * np.asarray(x, dtype=float) + c

    p0 = float(lift(0.0))
    m0 = int(np.ceil(p0 - y))
    if m0 + y < p0 - 1e-12:  # guard the ceil against rounding at exact hits
        m0 += 1
    targets = y + m0 + np.arange(ell, dtype=float)
    lo = np.zeros(ell)
    hi = np.ones(ell)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        below = lift(mid) < targets
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.max(hi - lo) <= tol:
            break
    else:
        raise RuntimeError("branch bisection stalled; curve slope may violate 1/3")
    roots = 0.5 * (lo + hi)
    roots = np.sort(roots % 1.0)
    return roots


class RectUnionMask:
    """Union of pairwise-disjoint axis rectangles on the torus (wraparound ok)."""

    def __init__(self, rects):
        self.rects = [(float(x0) % 1.0, float(y0) % 1.0, float(wx), float(wy))
                      for x0, y0, wx, wy in rects]
        for x0, y0, wx, wy in self.rects:
            if not (0.0 < wx <= 1.0 and 0.0 < wy <= 1.0):
                raise ValueError("rectangle sides must lie in (0, 1]")
        for i in range(len(self.rects)):
            for j in range(i + 1, len(self.rects)):
                if (self._axis_overlap(self.rects[i], self.rects[j], 0) > 0
                        and self._axis_overlap(self.rects[i], self.rects[j], 1) > 0):
                    raise ValueError(f"rectangles {i} and {j} overlap")

    @staticmethod
    def _axis_overlap(r0, r1, axis: int) -> float:
        s0, w0 = r0[axis], r0[axis + 2]
        s1, w1 = r1[axis], r1[axis + 2]
        total = 0.0
        for k in (-1.0, 0.0, 1.0):
            lo = max(s0, s1 + k)
            hi = min(s0 + w0, s1 + k + w1)
            total += max(hi - lo, 0.0)
        return total

    @property
    def measure(self) -> float:
        return sum(wx * wy for _, _, wx, wy in self.rects)

    def contains(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        hit = np.zeros(np.broadcast(x, y).shape, dtype=bool)
        for x0, y0, wx, wy in self.rects:
            hit |= ((x - x0) % 1.0 < wx) & ((y - y0) % 1.0 < wy)
        return hit if hit.ndim else bool(hit)

    def section_interval_count(self, y: float) -> int:
        return int(sum(1 for x0, y0, wx, wy in self.rects if (y - y0) % 1.0 < wy))

    def max_section_intervals(self) -> int:
        # coverage is piecewise constant; its maximum is attained at a start
        return max((self.section_interval_count(y0) for _, y0, _, _ in self.rects),
                   default=0)


class GridMask:
    """Adapter exposing an unsuitability/resonance grid as a torus mask."""

    def __init__(self, grid: UnsuitabilityGrid | ResonanceGrid):
        self.mask = np.asarray(grid.mask, dtype=bool)
        self.ny, self.nx = self.mask.shape

    @property
    def measure(self) -> float:
        return float(self.mask.mean())

    def contains(self, x, y):
        i = (np.asarray(x, dtype=float) % 1.0 * self.nx).astype(int) % self.nx
        j = (np.asarray(y, dtype=float) % 1.0 * self.ny).astype(int) % self.ny
        out = self.mask[j, i]
        return out if np.ndim(out) else bool(out)

    def max_section_intervals(self) -> int:
        worst = 0
        for row in self.mask:
            if row.all():
                worst = max(worst, 1)
            else:
                worst = max(worst, int(np.sum(row & ~np.roll(row, 1))))
        return worst


def _as_mask(U):
    if isinstance(U, (UnsuitabilityGrid, ResonanceGrid)):
        return GridMask(U)
    return U


@dataclass(frozen=True)
class ResonantMeasureReport:
    R: int
    mask_measure: float
    measured: float
    bound: float
    passed: bool
    grid_slack: float


def resonant_measure(cfg: FastVarConfig, U, nx: int) -> ResonantMeasureReport:
    """Fraction of x whose orbit visits U at some step ell in [R, 2R].

    The measured fraction must stay below 120 R^4 sqrt(|U|) + 2M/R up to the
    x-grid resolution; a failure signals an implementation bug, not a sharp
    bound.
    """
    mask = _as_mask(U)
    sections = mask.max_section_intervals()
    if sections > cfg.M_intervals:
        raise PreconditionError(
            f"mask sections have up to {sections} intervals > M = {cfg.M_intervals}")
    xs = (np.arange(nx) + 0.5) / nx
    xi_vals = cfg.xi_values(xs)
    a = cfg.alpha.alpha
    hits = np.zeros(nx, dtype=bool)
    for ell in range(cfg.R, 2 * cfg.R + 1):
        phi = (xs + mod1_int_mult(a, 2 * ell)) % 1.0
        psi = (xi_vals + ell * xs + mod1_int_mult(a, ell * (ell - 1))) % 1.0
        hits |= mask.contains(phi, psi)
    measured = float(hits.mean())
    m = float(mask.measure)
    bound = 120.0 * cfg.R ** 4 * np.sqrt(m) + 2.0 * cfg.M_intervals / cfg.R
    slack = 2.0 / nx
    return ResonantMeasureReport(cfg.R, m, measured, float(bound),
                                 measured <= bound + slack, slack)


def write_resonant_csv(reports, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("R,mask_measure,measured,bound,pass\r\n")
        for r in reports:
            fh.write(f"{r.R},{r.mask_measure:.12g},{r.measured:.12g},"
                     f"{r.bound:.12g},{int(r.passed)}\r\n")
