"""Eigensolvers for symmetric tridiagonal window operators.

Full spectra go through LAPACK's QL sweep without eigenvectors (O(L^2),
L ~ 8e4 in minutes); counting and interval extraction use Sturm-sequence
bisection; individual eigenvectors come from inverse iteration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigvalsh_tridiagonal, lapack

from .operators import SiteVector, WindowOperator, apply

_MACHEPS = float(np.finfo(float).eps)


class EigensolveError(RuntimeError):
    pass


def _sturm_kernel_py(diag, h2, shifts, omega):
    counts = np.zeros(shifts.shape, dtype=np.int64)
    d = diag[0] - shifts
    counts += d < 0.0
    for i in range(1, diag.shape[0]):
        d = np.where(d == 0.0, omega, d)
        d = diag[i] - shifts - h2 / d
        counts += d < 0.0
    return counts


try:  # numba shaves the inner loop from ~ms to ~us per shift; optional
    import numba

    @numba.njit(cache=True)
    def _sturm_kernel_nb(diag, h2, shifts, omega):  # pragma: no cover
        counts = np.zeros(shifts.shape, dtype=np.int64)
        for j in range(shifts.shape[0]):
            E = shifts[j]
            c = 0
            d = diag[0] - E
            if d < 0.0:
                c += 1
            for i in range(1, diag.shape[0]):
                if d == 0.0:
                    d = omega
                d = diag[i] - E - h2 / d
                if d < 0.0:
                    c += 1
            counts[j] = c
        return counts

    _sturm_kernel = _sturm_kernel_nb
except ImportError:  # pragma: no cover
    _sturm_kernel = _sturm_kernel_py


def sturm_count_many(op: WindowOperator, shifts) -> np.ndarray:
    """Eigenvalue counts strictly below each shift (LDL^T pivot signs)."""
    shifts = np.atleast_1d(np.asarray(shifts, dtype=float))
    # zero pivots are replaced by +omega: an exact hit counts as not-below
    omega = _MACHEPS * max(op.norm1(), 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        return _sturm_kernel(op.diag, op.offdiag ** 2, shifts, omega)


def sturm_count(op: WindowOperator, E: float) -> int:
    return int(sturm_count_many(op, [E])[0])


@dataclass(frozen=True)
class Spectrum:
    """All eigenvalues of a window operator, ascending."""

    a: int
    b: int
    eigenvalues: np.ndarray
    tol: float

    def __post_init__(self):
        ev = np.asarray(self.eigenvalues, dtype=float)
        if ev.shape != (self.b - self.a + 1,):
            raise ValueError("eigenvalue count must equal the window length")
        if np.any(np.diff(ev) < 0):
            raise ValueError("eigenvalues must be sorted ascending")
        object.__setattr__(self, "eigenvalues", ev)

    @property
    def count(self) -> int:
        return self.eigenvalues.size


@dataclass(frozen=True)
class EigenPair:
    lam: float
    psi: SiteVector
    residual: float


def default_tol(op: WindowOperator) -> float:
    return 1e-10 * max(1.0, op.norm1())


def eigenvalues_all(op: WindowOperator, tol: float | None = None) -> Spectrum:
    """Full spectrum via LAPACK ?sterf (QL/QR without eigenvectors)."""
    if tol is None:
        tol = default_tol(op)
    if tol <= 0:
        raise ValueError("tol must be positive")
    L = op.size
    if L == 1:
        ev = op.diag.copy()
    else:
        ev = eigvalsh_tridiagonal(op.diag, np.full(L - 1, op.offdiag),
                                  lapack_driver="sterf")
        ev = np.sort(ev)
    return Spectrum(op.a, op.b, ev, tol)


def gershgorin_interval(op: WindowOperator) -> tuple[float, float]:
    lo = float(np.min(op.diag)) - 2.0 * abs(op.offdiag)
    hi = float(np.max(op.diag)) + 2.0 * abs(op.offdiag)
    return lo, hi


def _bisect_index(op: WindowOperator, k: int, lo: float, hi: float, tol: float) -> float:
    """Bisection for the (k+1)-th smallest eigenvalue inside [lo, hi]."""
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if sturm_count(op, mid) >= k + 1:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def eigenvalues_in_interval(op: WindowOperator, lo: float, hi: float,
                            tol: float | None = None) -> np.ndarray:
    """Eigenvalues in [lo, hi], exact up to tol-fuzz at the endpoints."""
    if hi < lo:
        raise ValueError("need lo <= hi")
    if tol is None:
        tol = default_tol(op)
    n_lo, n_hi = (int(c) for c in sturm_count_many(op, [lo - tol, hi + tol]))
    if n_hi <= n_lo:
        return np.zeros(0)
    glo, ghi = gershgorin_interval(op)
    bis_tol = tol * 0.25
    out = [_bisect_index(op, k, max(lo - tol, glo) - bis_tol, min(hi + tol, ghi) + bis_tol, bis_tol)
           for k in range(n_lo, n_hi)]
    return np.array(out)


def nearest_eigenvalue(op: WindowOperator, E: float, tol: float | None = None) -> float:
    """The eigenvalue closest to E (bisection from the Sturm bracket)."""
    if tol is None:
        tol = 1e-14 * max(1.0, op.norm1())
    glo, ghi = gershgorin_interval(op)
    k = sturm_count(op, E)
    cands = []
    if k >= 1:
        cands.append(_bisect_index(op, k - 1, glo - tol, E + tol, tol))
    if k < op.size:
        cands.append(_bisect_index(op, k, E - tol, ghi + tol, tol))
    return min(cands, key=lambda lam: abs(lam - E))


def spectral_distance(op: WindowOperator, E: float) -> float:
    """dist(E, spectrum)."""
    return abs(nearest_eigenvalue(op, E) - E)


def solve_shifted(op: WindowOperator, E: float, rhs: np.ndarray) -> np.ndarray:
    """Solve (H - E) u = rhs by tridiagonal LU with partial pivoting."""
    L = op.size
    d = op.diag - E
    if L == 1:
        if d[0] == 0.0:
            raise EigensolveError("singular 1x1 shift")
        return rhs / d[0]
    e = np.full(L - 1, op.offdiag)
    b = np.array(rhs, dtype=float, copy=True)
    squeeze = b.ndim == 1
    if squeeze:
        b = b[:, None]
    _, _, _, x, info = lapack.dgtsv(e.copy(), d.copy(), e.copy(), b)
    if info != 0:
        raise EigensolveError(f"tridiagonal solve failed (info={info})")
    return x[:, 0] if squeeze else x


def eigenpair_nearest(op: WindowOperator, E0: float, tol: float | None = None,
                      max_iter: int = 5, seed: int = 0) -> EigenPair:
    """Eigenvalue nearest E0 plus its unit eigenvector by inverse iteration."""
    if tol is None:
        tol = default_tol(op)
    lam = nearest_eigenvalue(op, E0)
    scale = op.norm1() + abs(lam)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(op.size)
    v /= np.linalg.norm(v)
    shift = lam
    best = None
    for _ in range(max_iter):
        try:
            w = solve_shifted(op, shift, v)
        except EigensolveError:
            # dead-on singular shift: nudge by one rounding unit
            shift = lam * (1.0 + _MACHEPS) + _MACHEPS * scale
            continue
        v = w / np.linalg.norm(w)
        psi = SiteVector(op.a, op.b, v)
        resid = float(np.linalg.norm(apply(op, psi).values - lam * v))
        if best is None or resid < best[0]:
            best = (resid, v.copy())
        if resid <= tol * scale:
            break
    resid, v = best
    if resid > tol * scale:
        raise EigensolveError(
            f"inverse iteration stalled at residual {resid:.3e} "
            f"(limit {tol * scale:.3e}); near-degenerate numerics")
    return EigenPair(lam, SiteVector(op.a, op.b, v), resid)
