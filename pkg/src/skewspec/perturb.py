"""Isolation certificates, eigenvalue continuation, and curve machinery.

The operations here track a single isolated eigenvalue: certify isolation,
quantify its stability under perturbation, follow the level set
lambda(x, xi(x)) = E0 across the circle, and glue locally traced curves
into one differentiable function on the torus.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import SamplingFunction, SampledCurve
from .operators import (ModelParams, PotentialTable, SiteVector, WindowOperator,
                        apply, derivative_diagonal, weighted_norm)
from .eigensolve import (eigenpair_nearest, eigenvalues_in_interval,
                         nearest_eigenvalue, sturm_count_many)
from .greens import SuitabilityParams, is_suitable


class IsolationFailure(Exception):
    """Isolation check failed; `count` is the number of eigenvalues found."""

    def __init__(self, count: int, reason: str = "count"):
        self.count = count
        self.reason = reason
        super().__init__(f"isolation failed ({reason}): {count} eigenvalue(s) in window")


class PreconditionError(ValueError):
    """A stated hypothesis of the operation does not hold."""


class AnchorConditionError(RuntimeError):
    """Curve tracing cannot start: anchor certificate or slope bounds fail."""


class ResonantSiteError(ValueError):
    def __init__(self, sites):
        self.sites = list(sites)
        super().__init__(f"potential too close to E0 at site(s) {self.sites}")


@dataclass(frozen=True)
class IsolationCertificate:
    """Witness that [E0-eps, E0+eps] traps exactly one (simple) eigenvalue."""

    E0: float
    epsilon: float
    eta: float | None
    lam: float
    a: int
    b: int


def check_isolated(op: WindowOperator, E0: float, epsilon: float,
                   eta: float | None = None) -> IsolationCertificate:
    """Certify that exactly one eigenvalue lies in [E0-eps, E0+eps].

    Simplicity is automatic for tridiagonal operators with nonzero coupling.
    With eta given, additionally require |lam - E0| <= eta.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if eta is not None and not 0.0 <= eta < epsilon:
        raise ValueError("eta must lie in [0, epsilon)")
    evs = eigenvalues_in_interval(op, E0 - epsilon, E0 + epsilon)
    if evs.size != 1:
        raise IsolationFailure(int(evs.size))
    lam = float(evs[0])
    if eta is not None and abs(lam - E0) > eta:
        raise IsolationFailure(1, reason="approximation")
    return IsolationCertificate(E0, epsilon, eta, lam, op.a, op.b)


@dataclass(frozen=True)
class ExtensionBudget:
    """Slope floor d, derivative cap C1, and the extension threshold d^5/(2 C1)."""

    d: float
    C1: float
    delta_cap: float

    def __post_init__(self):
        for name in ("d", "C1", "delta_cap"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


def extension_budget(f: SamplingFunction, y0: float) -> ExtensionBudget:
    d = max(abs(float(f.derivative(y0))), 1.0) / 10.0
    c1 = 10.0 * f.sup_derivative()
    return ExtensionBudget(d, c1, d ** 5 / (2.0 * c1))


def _tridiag_diff_norm(A: WindowOperator, B: WindowOperator) -> float:
    """Max row sum of A - B (upper bound for the operator norm)."""
    dd = np.abs(A.diag - B.diag)
    de = abs(A.offdiag - B.offdiag)
    L = A.size
    ncoup = np.full(L, 2.0)
    if L > 1:
        ncoup[0] = ncoup[-1] = 1.0
    else:
        ncoup[0] = 0.0
    return float(np.max(dd + de * ncoup))


@dataclass(frozen=True)
class PerturbationReport:
    t: float
    epsilon: float
    lambda_shift: float          # |lambda_B - E_A|, must be <= t*eps
    unique_in_shrunk: bool       # single eigenvalue of B in [E0 +- 3eps/4]
    vector_deviation: float      # min over |a|=1 of ||phi - a psi||
    passed: bool

    @property
    def lambda_shift_bound(self) -> float:
        return self.t * self.epsilon

    @property
    def vector_deviation_bound(self) -> float:
        return 8.0 * self.t


def verify_perturbation_bound(A: WindowOperator, B: WindowOperator, E0: float,
                              epsilon: float, t: float) -> PerturbationReport:
    """Measure the three conclusions of the isolated-eigenvalue stability lemma.

    Hypotheses are checked first: A has a unique simple eigenvalue E in
    [E0-eps, E0+eps] with |E-E0| <= eps/4, ||A-B|| <= t*eps (max row sum of
    the tridiagonal difference), and t in (0, 1/4).
    """
    if not 0.0 < t < 0.25:
        raise PreconditionError(f"t must lie in (0, 1/4), got {t}")
    if (A.a, A.b) != (B.a, B.b):
        raise PreconditionError("windows of A and B differ")
    evs = eigenvalues_in_interval(A, E0 - epsilon, E0 + epsilon)
    if evs.size != 1:
        raise PreconditionError(
            f"A must have exactly one eigenvalue in [E0-eps, E0+eps]; found {evs.size}")
    E = float(evs[0])
    if abs(E - E0) > 0.25 * epsilon * (1 + 1e-12):
        raise PreconditionError("|E - E0| <= eps/4 fails for A")
    if _tridiag_diff_norm(A, B) > t * epsilon * (1 + 1e-12):
        raise PreconditionError("||A - B|| <= t*eps fails")

    lam = nearest_eigenvalue(B, E)
    shrunk = eigenvalues_in_interval(B, E0 - 0.75 * epsilon, E0 + 0.75 * epsilon)
    unique = shrunk.size == 1 and abs(float(shrunk[0]) - lam) < 1e-8 * max(1.0, abs(lam))

    psi = eigenpair_nearest(A, E).psi.values
    phi = eigenpair_nearest(B, lam).psi.values
    # the optimal unimodular phase for real vectors is the overlap sign
    a = 1.0 if float(np.dot(phi, psi)) >= 0 else -1.0
    deviation = float(np.linalg.norm(phi - a * psi))

    shift = abs(lam - E)
    slack = 1e-9
    passed = (shift <= t * epsilon * (1 + slack) and unique
              and deviation <= 8.0 * t * (1 + slack))
    return PerturbationReport(t, epsilon, shift, unique, deviation, passed)


def random_isolated_instance(rng, L_range=(5, 13), gap_floor: float = 1e-3):
    """Random tridiagonal operator with a well-isolated eigenvalue.

    Returns (A, E0, epsilon, E): E is an eigenvalue of A, unique in
    [E0 - eps, E0 + eps], and |E - E0| <= eps/4.
    """
    while True:
        L = int(rng.integers(L_range[0], L_range[1]))
        a0 = -(L // 2)
        diag = rng.uniform(-2.0, 2.0, L)
        h = float(rng.uniform(0.2, 1.0))
        A = WindowOperator(a0, a0 + L - 1, diag, h)
        ev = np.sort(np.linalg.eigvalsh(A.to_dense()))
        j = int(rng.integers(0, L))
        gap_lo = ev[j] - ev[j - 1] if j > 0 else math.inf
        gap_hi = ev[j + 1] - ev[j] if j < L - 1 else math.inf
        eps = 0.6 * min(gap_lo, gap_hi)
        if not math.isfinite(eps) or eps < gap_floor:
            continue
        E0 = float(ev[j] + rng.uniform(-0.25, 0.25) * eps)
        return A, E0, float(eps), float(ev[j])


def perturbation_suite(trials: int, seed: int, t_max: float = 0.24) -> list:
    """Randomized stability suite: measure the lemma conclusions on `trials` cases."""
    if not 0.0 < t_max < 0.25:
        raise ValueError("t_max must lie in (0, 1/4)")
    rng = np.random.default_rng(seed)
    reports = []
    for _ in range(trials):
        A, E0, eps, _ = random_isolated_instance(rng)
        t = float(rng.uniform(0.02, t_max))
        dd = rng.uniform(-1.0, 1.0, A.size)
        de = float(rng.uniform(-0.5, 0.5))
        ncoup = np.full(A.size, 2.0)
        if A.size > 1:
            ncoup[0] = ncoup[-1] = 1.0
        row_norm = float(np.max(np.abs(dd) + abs(de) * ncoup))
        s = 0.95 * t * eps / row_norm
        de_s = de * s
        if abs(de_s) >= 0.5 * abs(A.offdiag):  # keep the coupling away from zero
            de_s = 0.0
        B = WindowOperator(A.a, A.b, A.diag + dd * s, A.offdiag + de_s)
        reports.append(verify_perturbation_bound(A, B, E0, eps, t))
    return reports


def write_perturbation_csv(reports, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("t,epsilon,lambda_shift,lambda_shift_bound,unique_in_shrunk,"
                 "vector_deviation,vector_deviation_bound,passed\r\n")
        for r in reports:
            fh.write(f"{r.t:.12g},{r.epsilon:.12g},{r.lambda_shift:.12g},"
                     f"{r.lambda_shift_bound:.12g},{int(r.unique_in_shrunk)},"
                     f"{r.vector_deviation:.12g},{r.vector_deviation_bound:.12g},"
                     f"{int(r.passed)}\r\n")


def hellmann_feynman(params: ModelParams, window: tuple[int, int], E0: float,
                     epsilon: float) -> tuple[float, float]:
    """(d lambda/dx, d lambda/dy) of the isolated eigenvalue near E0.

    First-order derivatives of a simple eigenvalue are inner products of its
    unit eigenvector against the diagonal derivative operators.
    """
    a, b = window
    from .operators import build_restriction

    op = build_restriction(params, a, b)
    cert = check_isolated(op, E0, epsilon)
    psi2 = eigenpair_nearest(op, cert.lam).psi.values ** 2
    ddx = derivative_diagonal(params, a, b, "x")
    ddy = derivative_diagonal(params, a, b, "y")
    return float(psi2 @ ddx), float(psi2 @ ddy)


def max_step(epsilon: float, delta: float, C: float) -> float:
    """Continuation step budget eps*delta^2 / (50 C^2) for derivative cap C."""
    return epsilon * delta ** 2 / (50.0 * C ** 2)


@dataclass(frozen=True)
class CurveSample:
    """A traced level set lambda(x, xi(x)) = E0 with per-sample diagnostics.

    `deriv_bound` is the slope cap enforced by the tracking bracket
    (twice the requested delta); rejected samples carry NaN entries.
    """

    xs: np.ndarray
    xis: np.ndarray
    residuals: np.ndarray
    accepted: np.ndarray
    deriv_bound: float
    E0: float

    @property
    def acceptance_fraction(self) -> float:
        return float(np.mean(self.accepted))

    def accepted_curve(self) -> SampledCurve:
        if int(self.accepted.sum()) < 2:
            raise ValueError("need at least two accepted samples")
        return SampledCurve(self.xs[self.accepted], self.xis[self.accepted])


class _EigTracker:
    """Shared scratch for repeated eigenvalue/slope queries on one window."""

    def __init__(self, params: ModelParams, a: int, b: int, E0: float):
        if params.form != "skew":
            raise ValueError("curve tracing needs form='skew'")
        self.params = params
        self.table = PotentialTable(params.alpha, a, b, "skew")
        self.a, self.b, self.E0 = a, b, E0
        self.sites = np.arange(a, b + 1).astype(float)

    def operator(self, x: float, y: float) -> WindowOperator:
        return WindowOperator(self.a, self.b,
                              self.table.diag(self.params.f, x, y), self.params.h)

    def lam(self, x: float, y: float) -> float:
        return nearest_eigenvalue(self.operator(x, y), self.E0)

    def lam_and_slopes(self, x: float, y: float):
        op = self.operator(x, y)
        pair = eigenpair_nearest(op, self.E0)
        fp = self.params.f.derivative(self.table.phases(x, y))
        psi2 = pair.psi.values ** 2
        return pair.lam, float(psi2 @ (self.sites * fp)), float(psi2 @ fp), op

    def isolated(self, op: WindowOperator, epsilon: float) -> bool:
        lo, hi = sturm_count_many(op, [self.E0 - epsilon, self.E0 + epsilon])
        return int(hi - lo) == 1


def _solve_level(tracker: _EigTracker, x: float, lo: float, hi: float,
                 y_init: float, rtol: float, max_iter: int):
    """Safeguarded Newton for lambda(x, y) = E0 inside [lo, hi].

    Newton uses the eigenvector slope; steps leaving the bracket fall back
    to bisection when the bracket endpoints straddle the level.
    """
    E0 = tracker.E0
    glo = tracker.lam(x, lo) - E0
    ghi = tracker.lam(x, hi) - E0
    bracketed = (glo < 0.0 < ghi) or (ghi < 0.0 < glo)
    y = min(max(y_init, lo), hi)
    for _ in range(max_iter):
        lam, _, dy, op = tracker.lam_and_slopes(x, y)
        g = lam - E0
        if abs(g) <= rtol:
            return y, abs(g), op
        if bracketed:
            if (g < 0.0) == (glo < 0.0):
                lo, glo = y, g
            else:
                hi, ghi = y, g
        y_new = y - g / dy if dy != 0.0 else None
        if y_new is None or not lo <= y_new <= hi:
            if not bracketed:
                return None
            y_new = 0.5 * (lo + hi)
        y = y_new
    return None


def trace_curve(params: ModelParams, window: tuple[int, int], E0: float,
                xs, delta: float, epsilon: float, rtol: float = 1e-12,
                max_iter: int = 120, anchor_halfwidth: float = 0.05) -> CurveSample:
    """Trace xi(x) with lambda(x, xi(x)) = E0, anchored at params.phase.

    The anchor must admit an isolation certificate and satisfy the slope
    conditions |<psi, dH/dy psi>| >= 2*delta and |<psi, dH/dx psi>| <= delta^2/2.
    Each subsequent sample is solved inside [xi_prev - 2 delta dx, xi_prev +
    2 delta dx], dx measured from the last accepted sample, so the bracket
    widens across rejected stretches.  A sample is accepted when the level
    solve converges and E0 stays epsilon-isolated there.
    """
    a, b = window
    tracker = _EigTracker(params, a, b, E0)
    x0, y0 = params.phase.x, params.phase.y

    anchor = _solve_level(tracker, x0, y0 - anchor_halfwidth, y0 + anchor_halfwidth,
                          y0, rtol, max_iter)
    if anchor is None:
        raise AnchorConditionError("no level-set root near the anchor")
    y_anchor, _, op0 = anchor
    if not tracker.isolated(op0, epsilon):
        raise AnchorConditionError("E0 is not epsilon-isolated at the anchor")
    _, dx_slope, dy_slope, _ = tracker.lam_and_slopes(x0, y_anchor)
    if abs(dy_slope) < 2.0 * delta:
        raise AnchorConditionError(
            f"anchor slope |<psi,dH/dy psi>| = {abs(dy_slope):.3g} < 2*delta")
    if abs(dx_slope) > 0.5 * delta ** 2:
        raise AnchorConditionError(
            f"anchor slope |<psi,dH/dx psi>| = {abs(dx_slope):.3g} > delta^2/2")

    xs = np.asarray(xs, dtype=float)
    xis = np.full(xs.shape, np.nan)
    residuals = np.full(xs.shape, np.nan)
    accepted = np.zeros(xs.shape, dtype=bool)
    x_prev, y_prev = x0, y_anchor
    for i, x in enumerate(xs):
        dx = (x - x_prev) % 1.0
        half = 2.0 * delta * dx + 1e-12
        sol = _solve_level(tracker, x, y_prev - half, y_prev + half, y_prev,
                           rtol, max_iter)
        if sol is None:
            continue
        y, resid, op = sol
        if not tracker.isolated(op, epsilon):
            continue
        xis[i] = y
        residuals[i] = resid
        accepted[i] = True
        x_prev, y_prev = x, y
    return CurveSample(xs, xis, residuals, accepted, 2.0 * delta, E0)


def write_curve_csv(sample: CurveSample, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("x,xi,residual,accepted\r\n")
        for x, xi, r, acc in zip(sample.xs, sample.xis, sample.residuals,
                                 sample.accepted):
            fh.write(f"{x:.12g},{xi:.12g},{r:.12g},{int(acc)}\r\n")


class ClampedCurve:
    """A traced arc held constant outside [a, b] (constant extension)."""

    def __init__(self, xs: np.ndarray, values: np.ndarray, a: float, b: float):
        order = np.argsort(xs)
        self.xs = np.asarray(xs, dtype=float)[order]
        self.values = np.asarray(values, dtype=float)[order]
        self.a, self.b = a, b
        self.left = float(np.interp(a, self.xs, self.values))
        self.right = float(np.interp(b, self.xs, self.values))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        inner = np.interp(np.clip(x, self.a, self.b), self.xs, self.values)
        out = np.where(x <= self.a, self.left,
                       np.where(x >= self.b, self.right, inner))
        return float(out) if out.ndim == 0 else out


def clamp_extend(sample: CurveSample, a: float, b: float) -> ClampedCurve:
    """Extend the accepted samples by constants outside [a, b]."""
    if not a <= b:
        raise ValueError("need a <= b")
    mask = sample.accepted
    if int(mask.sum()) < 2:
        raise ValueError("need at least two accepted samples")
    xs, vals = sample.xs[mask], sample.xis[mask]
    if a < xs.min() or b > xs.max():
        raise ValueError("[a, b] must lie inside the sampled range")
    return ClampedCurve(xs, vals, a, b)


def _normalize_intervals(intervals) -> list[tuple[float, float]]:
    out = []
    for start, length in intervals:
        if length <= 0 or length > 1.0:
            raise PreconditionError(f"interval length {length} outside (0, 1]")
        out.append((float(start) % 1.0, float(length)))
    return out


def select_separated(intervals, eps: float, weights=None) -> list[int]:
    """Pick a pairwise eps-separated subfamily carrying >= 1/3 of the weight.

    The circularly ordered family is split into even-position, odd-position
    and last-interval classes; disjointness plus the per-interval length
    floor |I_q| >= eps makes each class eps-separated, and the best of the
    three carries at least a third of the total weight.
    """
    ivals = _normalize_intervals(intervals)
    q = len(ivals)
    if q == 0:
        raise PreconditionError("empty interval family")
    if weights is None:
        weights = [length for _, length in ivals]
    weights = np.asarray(weights, dtype=float)
    order = sorted(range(q), key=lambda i: ivals[i][0])
    for i, length in ((i, ivals[i][1]) for i in order):
        if length < eps * (1.0 - 1e-12):
            raise PreconditionError(f"interval {i} shorter than eps")
    for pos in range(q):
        s0, l0 = ivals[order[pos]]
        s1, _ = ivals[order[(pos + 1) % q]]
        if pos + 1 < q:
            gap = s1 - (s0 + l0)
        else:
            gap = (s1 + 1.0) - (s0 + l0)
        if q > 1 and gap < -1e-12:
            raise PreconditionError("overlapping intervals")

    if q % 2 == 0:
        classes = [order[1::2], order[0::2], []]
    else:
        classes = [order[1:-1:2], order[0:-1:2], [order[-1]]]
    totals = [float(weights[list(cls)].sum()) if cls else -1.0 for cls in classes]
    best = classes[int(np.argmax(totals))]
    return sorted(best)


def _circle_overlap(i0: tuple[float, float], i1: tuple[float, float]) -> float:
    """Measure of the intersection of two circle intervals (lengths <= 1)."""
    s0, l0 = i0
    s1, l1 = i1
    total = 0.0
    for k in (-1.0, 0.0, 1.0):
        lo = max(s0, s1 + k)
        hi = min(s0 + l0, s1 + k + l1)
        if hi > lo:
            total += hi - lo
    return total


@dataclass(frozen=True)
class GlueStats:
    sup_deviation: float
    deviation_bound: float
    sup_slope: float
    slope_bound: float
    selected_measure: float
    family_measure: float
    passed: bool

    @property
    def measure_ratio(self) -> float:
        return self.selected_measure / self.family_measure if self.family_measure else 1.0


class GluedCurve:
    """base + offset: equals the local curves on selected intervals, bridged between.

    Bridges interpolate the offset from the base with a cubic Hermite ramp of
    zero end slopes, so a gap of length g contributes offset slope at most
    1.5 * |offset jump| / g.
    """

    def __init__(self, base, segments):
        # segments: (start, end, curve) sorted by start in [0,1), end = start+len
        self.base = base
        self.segments = segments
        ends = [(e, curve) for _, e, curve in segments]
        starts = [(s, curve) for s, _, curve in segments]
        self._eta_end = [float(c(e)) - float(base(e % 1.0)) for e, c in ends]
        self._eta_start = [float(c(s)) - float(base(s % 1.0)) for s, c in starts]

    def __call__(self, x):
        scalar = np.asarray(x).ndim == 0
        xarr = np.atleast_1d(np.asarray(x, dtype=float)) % 1.0
        out = np.array([self._eval_one(v) for v in xarr.ravel()]).reshape(xarr.shape)
        return float(out[0]) if scalar else out

    def _eval_one(self, x: float) -> float:
        segs = self.segments
        n = len(segs)
        s0 = segs[0][0]
        xl = x if x >= s0 else x + 1.0  # lift into [s0, s0 + 1)
        for i, (s, e, curve) in enumerate(segs):
            if xl <= e:
                return float(curve(xl))
            s_next = segs[i + 1][0] if i + 1 < n else s0 + 1.0
            if xl <= s_next:
                gap = s_next - e
                eta0 = self._eta_end[i]
                eta1 = self._eta_start[(i + 1) % n]
                if gap <= 0.0:
                    return float(self.base(x)) + eta1
                u = (xl - e) / gap
                ramp = u * u * (3.0 - 2.0 * u)
                return float(self.base(x)) + eta0 + (eta1 - eta0) * ramp
        # xl can round to exactly s0 + 1.0
        return float(self.segments[0][2](s0))


def glue_curves(base, locals_, eps: float, delta: float, L0: float, frakX,
                n_check: int = 257, n_grid: int = 10_000):
    """Glue local level-set curves over a base curve on the circle.

    `locals_` is a list of ((start, length), curve) with each curve defined on
    the lifted interval [start, start+length].  After validating the per-curve
    slope cap L0 and deviation cap delta, an eps-separated subfamily carrying
    at least 1/3 of the frakX-intersected measure is selected, and its curves
    are joined by offset bridges.  Returns (selected indices, glued curve,
    measured stats).
    """
    if not locals_:
        raise PreconditionError("no local curves supplied")
    ivals: list[tuple[float, float]] = []
    curves = []
    for (start, length), curve in locals_:
        s_norm = float(start) % 1.0
        shift = float(start) - s_norm
        ivals.append((s_norm, float(length)))
        if shift != 0.0:
            curve = (lambda t, c=curve, sh=shift: c(t + sh))
        curves.append(curve)

    for qi, ((s, ln), curve) in enumerate(zip(ivals, curves)):
        ts = s + np.linspace(0.0, ln, n_check)
        vals = np.array([float(curve(t)) for t in ts])
        bvals = np.array([float(base(t % 1.0)) for t in ts])
        dev = float(np.max(np.abs(vals - bvals)))
        if dev >= delta * (1.0 + 1e-9):
            raise PreconditionError(
                f"local curve {qi} deviates {dev:.3g} >= delta from the base")
        slope = float(np.max(np.abs(np.diff(vals) / np.diff(ts))))
        if slope > L0 * (1.0 + 1e-6) + 1e-12:
            raise PreconditionError(f"local curve {qi} slope {slope:.3g} > L0")

    fX = _normalize_intervals(frakX)
    weights = [sum(_circle_overlap(iv, J) for J in fX) for iv in ivals]
    selected = select_separated(ivals, eps, weights=weights)
    segments = sorted(((ivals[q][0], ivals[q][0] + ivals[q][1], curves[q])
                       for q in selected), key=lambda t: t[0])
    glued = GluedCurve(base, segments)

    gx = np.arange(n_grid) / n_grid
    gv = glued(gx)
    bv = np.array([float(base(v)) for v in gx])
    sup_dev = float(np.max(np.abs(gv - bv)))
    dv = np.diff(np.append(gv, gv[0]))
    sup_slope = float(np.max(np.abs(dv))) * n_grid
    dev_bound = 5.0 * delta
    slope_bound = L0 + 3.0 * delta / eps
    sel_measure = float(sum(weights[q] for q in selected))
    fam_measure = float(sum(weights))
    passed = (sup_dev <= dev_bound * (1.0 + 1e-9)
              and sup_slope <= slope_bound * (1.0 + 1e-6) + 1e-9
              and sel_measure >= fam_measure / 3.0 - 1e-12)
    stats = GlueStats(sup_dev, dev_bound, sup_slope, slope_bound,
                      sel_measure, fam_measure, passed)
    return selected, glued, stats


@dataclass(frozen=True)
class Psi0Report:
    raw_norm: float
    residual: float
    residual_bound: float   # sqrt(6) * h^(1 - 1/1000), treated as an upper bound
    residual_ok: bool
    norm_ok: bool


def psi0_approx(params: ModelParams, E0: float,
                window: tuple[int, int]) -> tuple[SiteVector, Psi0Report]:
    """Three-site trial eigenvector 1 at 0, h/(E0 - V(+-1)) at +-1, else 0.

    Requires the guard |V(+-1) - E0| >= h^(1/1000); returns the normalized
    vector plus a report with the residual measured against its bound.
    """
    from .operators import build_restriction

    a, b = window
    if a != -b or b < 1:
        raise ValueError("window must be symmetric [-M, M] with M >= 1")
    op = build_restriction(params, a, b)
    h = params.h
    guard = h ** (1.0 / 1000.0)
    v_m1 = float(op.diag[-1 - a])
    v_p1 = float(op.diag[1 - a])
    bad = [n for n, v in ((-1, v_m1), (1, v_p1)) if abs(v - E0) < guard]
    if bad:
        raise ResonantSiteError(bad)
    raw = np.zeros(op.size)
    raw[0 - a] = 1.0
    raw[-1 - a] = h / (E0 - v_m1)
    raw[1 - a] = h / (E0 - v_p1)
    vec = SiteVector(a, b, raw)
    resid = float(np.linalg.norm(apply(op, vec).values - E0 * raw))
    raw_norm = float(np.linalg.norm(raw))
    bound = math.sqrt(6.0) * h ** (1.0 - 1.0 / 1000.0)
    norm_ok = 1.0 <= raw_norm <= 1.0 + h ** (2.0 - 1.0 / 500.0)
    psi = SiteVector(a, b, raw / raw_norm)
    return psi, Psi0Report(raw_norm, resid, bound, resid <= bound, norm_ok)


@dataclass(frozen=True)
class GoodXReport:
    intervals: list
    measure: float
    meets_half: bool
    h_threshold: float  # below this h the measure >= 1/2 is expected (can underflow)


def good_x_set(params: ModelParams, E0: float, M: int, nx: int) -> GoodXReport:
    """Scan x for |V_{x,y0}(n) - E0| >= h^(1/1000) at all 0 < |n| <= M.

    Returns the maximal circular runs of good cells and their measure; the
    half-circle expectation is reported, never enforced.
    """
    if params.form != "skew":
        raise ValueError("good-x scans need form='skew'")
    if M < 0 or nx < 1:
        raise ValueError("need M >= 0 and nx >= 1")
    f, y0, h = params.f, params.phase.y, params.h
    guard = h ** (1.0 / 1000.0)
    xs = (np.arange(nx) + 0.5) / nx
    ok = np.ones(nx, dtype=bool)
    table = PotentialTable(params.alpha, -M, M, "skew") if M >= 1 else None
    if table is not None:
        for j, n in enumerate(range(-M, M + 1)):
            if n == 0:
                continue
            vals = f.value((y0 + n * xs + table.offsets[j]) % 1.0)
            ok &= np.abs(vals - E0) >= guard
    intervals = []
    if ok.all():
        intervals.append((0.0, 1.0))
    elif ok.any():
        # maximal circular runs of good cells, cell-aligned
        start = None
        idx = np.arange(nx)
        # rotate so position 0 is bad: runs never wrap
        first_bad = int(np.argmin(ok))
        rot = np.roll(ok, -first_bad)
        run_start = None
        for i in range(nx + 1):
            val = rot[i % nx] if i < nx else False
            if val and run_start is None:
                run_start = i
            elif not val and run_start is not None:
                s = ((run_start + first_bad) % nx) / nx
                intervals.append((s, (i - run_start) / nx))
                run_start = None
    measure = float(ok.mean())
    loja_f, loja_e = f.loja_F, f.loja_exp
    with np.errstate(under="ignore"):
        h_thr = float((1.0 / (4.0 * max(M, 1) * loja_f)) ** (1000.0 / loja_e))
    return GoodXReport(intervals, measure, measure >= 0.5, h_thr)


@dataclass(frozen=True)
class ContinuationReport:
    """Desk-scale log of one eigenvalue continuation from scale M to scale R."""

    M: int
    N: int
    R: int
    cert_small: IsolationCertificate
    cert_large: IsolationCertificate
    lam_shift: float             # |lam_R - lam_M|
    eta_measured: float          # |lam_R - E0|
    vector_deviation: float      # min over signs of ||psi_M - a psi_R||
    vector_deviation_weighted: float
    windows_checked: int
    windows_suitable: int
    chain: dict

    @property
    def all_suitable(self) -> bool:
        return self.windows_checked == self.windows_suitable


def continue_eigenvalue(params: ModelParams, E0: float, M: int, N: int, R: int,
                        sp: SuitabilityParams, epsilon: float,
                        eta: float | None = None) -> ContinuationReport:
    """Extend an isolated eigenvalue of H^[-M,M] to H^[-R,R], logging evidence.

    Verifies the isolation certificate at scale M, suitability of every
    shifted window [n-N, n+N] in [-R,R] with |n| > M/10, the certificate at
    scale R, and the eigenvector proximity in plain and weighted norms.  The
    asymptotic constant chain is recorded in `chain`, not enforced.
    """
    from .operators import build_restriction

    if not (R >= M >= N >= 1):
        raise ValueError("need R >= M >= N >= 1")
    op_small = build_restriction(params, -M, M)
    cert_small = check_isolated(op_small, E0, epsilon, eta)

    checked = suitable = 0
    for n in range(-R, R + 1):
        if abs(n) <= M / 10.0 or n - N < -R or n + N > R:
            continue
        op_n = build_restriction(params, n - N, n + N)
        checked += 1
        if is_suitable(op_n, E0, sp).suitable:
            suitable += 1

    op_large = build_restriction(params, -R, R)
    cert_large = check_isolated(op_large, E0, epsilon / 2.0)

    pair_small = eigenpair_nearest(op_small, cert_small.lam)
    pair_large = eigenpair_nearest(op_large, cert_large.lam)
    emb = np.zeros(op_large.size)
    emb[(-M) - (-R): M - (-R) + 1] = pair_small.psi.values
    sign = 1.0 if float(np.dot(emb, pair_large.psi.values)) >= 0 else -1.0
    diff = emb - sign * pair_large.psi.values
    dev = float(np.linalg.norm(diff))
    dev_w = weighted_norm(SiteVector(-R, R, diff))

    g, m = sp.gamma, float(M)
    chain = {
        "40*exp(-gamma*M/5) <= eps": bool(40.0 * math.exp(-g * m / 5.0) <= epsilon),
        "eps <= exp(-3*gamma*N)": bool(epsilon <= math.exp(-3.0 * g * N)),
        "lam_shift <= 2*exp(-gamma*M/5)": bool(
            abs(cert_large.lam - cert_small.lam) <= 2.0 * math.exp(-g * m / 5.0)),
    }
    return ContinuationReport(M, N, R, cert_small, cert_large,
                              abs(cert_large.lam - cert_small.lam),
                              abs(cert_large.lam - E0), dev, dev_w,
                              checked, suitable, chain)
