"""Green's-function entries, resolvent norms, and suitability of windows.

A symmetric window [-N,N] is suitable for H - E when three bounds hold:
the size condition Gamma <= gamma*N, a resolvent-norm bound, and edge-to-
bulk decay of Green's-function entries.  Unsuitability sets are measured
empirically on deterministic cell-center grids over the torus.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dynamics import truncate_sampling
from .operators import ModelParams, PotentialTable, WindowOperator
from .eigensolve import solve_shifted, spectral_distance


class SingularEnergyError(ValueError):
    """E is numerically indistinguishable from an eigenvalue."""


@dataclass(frozen=True)
class SuitabilityParams:
    gamma: float
    Gamma: float
    p: int

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.Gamma <= 1:
            raise ValueError("Gamma must exceed 1")
        if self.p < 0:
            raise ValueError("p must be >= 0")


@dataclass(frozen=True)
class SuitabilityVerdict:
    suitable: bool
    failed_condition: str | None  # "size" | "resolvent" | "decay"
    worst_margin: float  # log(bound/actual), minimized over all checks

    def __post_init__(self):
        if self.suitable != (self.failed_condition is None):
            raise ValueError("suitable verdicts carry no failed condition")


@dataclass(frozen=True)
class UnsuitabilityGrid:
    N: int
    E: float
    params: SuitabilityParams
    nx: int
    ny: int
    mask: np.ndarray  # (ny, nx) bool, True = unsuitable; row = fixed y
    measure_estimate: float


def _check_regular(op: WindowOperator, E: float) -> float:
    dist = spectral_distance(op, E)
    if dist <= 1e-13 * op.norm1():
        raise SingularEnergyError(f"E={E} within 1e-13*|H| of the spectrum")
    return dist


def greens_entry(op: WindowOperator, E: float, k: int, l: int) -> float:
    """G(E,k,l) = <e_k, (H-E)^(-1) e_l> for absolute sites k, l."""
    if not (op.a <= k <= op.b and op.a <= l <= op.b):
        raise ValueError("sites outside window")
    _check_regular(op, E)
    rhs = np.zeros(op.size)
    rhs[l - op.a] = 1.0
    g = solve_shifted(op, E, rhs)
    return float(g[k - op.a])


def resolvent_norm(op: WindowOperator, E: float) -> float:
    """||(H-E)^(-1)|| = 1/dist(E, spectrum), exact for self-adjoint H."""
    return 1.0 / _check_regular(op, E)


def hs_norm(op: WindowOperator, E: float) -> float:
    """Hilbert-Schmidt norm of the resolvent via one multi-RHS solve."""
    _check_regular(op, E)
    inv = solve_shifted(op, E, np.eye(op.size))
    return float(np.linalg.norm(inv))


def _edge_decay_margin(op: WindowOperator, E: float, sp: SuitabilityParams,
                       N: int, center: int) -> float:
    """min over edge k, bulk l of log(bound/|G(E,k,l)|)."""
    lmax = (2 * N) // 3
    rel = np.arange(-lmax, lmax + 1)
    rhs = np.zeros((op.size, 2))
    rhs[0, 0] = 1.0
    rhs[-1, 1] = 1.0
    g = solve_shifted(op, E, rhs)  # columns: solves for e_{-N}, e_{+N}
    logs = []
    pln2 = sp.p * math.log(2.0)
    for col, k in ((0, -N), (1, N)):
        entries = np.abs(g[rel + center - op.a, col])
        with np.errstate(divide="ignore"):
            logs.append(np.min(-pln2 - sp.gamma * np.abs(k - rel) - np.log(entries)))
    return float(min(logs))


def is_suitable(op: WindowOperator, E: float, sp: SuitabilityParams,
                hs: bool = False) -> SuitabilityVerdict:
    """Suitability verdict for a symmetric window (or a shifted copy).

    With hs=True, the resolvent condition is replaced by the Hilbert-Schmidt
    threshold 2^-p * exp(gamma*N/2); callers pair this with a potential
    truncated at R = N^2 so unsuitability sections stay semialgebraic.
    """
    if op.size % 2 != 1:
        raise ValueError("suitability needs an odd window (a symmetric copy)")
    N = (op.size - 1) // 2
    center = (op.a + op.b) // 2
    margin_size = math.log(sp.gamma * N / sp.Gamma) if N >= 1 else -math.inf

    pln2 = sp.p * math.log(2.0)
    try:
        if hs:
            actual = hs_norm(op, E)
            log_bound = sp.gamma * N / 2.0 - pln2
        else:
            actual = resolvent_norm(op, E)
            log_bound = sp.Gamma - pln2
        margin_res = log_bound - math.log(actual) if actual > 0 else math.inf
        margin_decay = _edge_decay_margin(op, E, sp, N, center)
    except SingularEnergyError:
        margin_res = -math.inf
        margin_decay = -math.inf

    for name, margin in (("size", margin_size), ("resolvent", margin_res),
                         ("decay", margin_decay)):
        if margin < 0:
            return SuitabilityVerdict(False, name,
                                      min(margin_size, margin_res, margin_decay))
    return SuitabilityVerdict(True, None, min(margin_size, margin_res, margin_decay))


def unsuitability_grid(params: ModelParams, E: float, N: int, sp: SuitabilityParams,
                       nx: int, ny: int, use_hs: bool = False,
                       threads: int = 1) -> UnsuitabilityGrid:
    """Evaluate suitability on an nx-by-ny grid of cell centers in (x,y)."""
    if params.form != "skew":
        raise ValueError("unsuitability grids need form='skew'")
    f = params.f
    if use_hs:
        f = truncate_sampling(f, N * N).f
    table = PotentialTable(params.alpha, -N, N, "skew")
    xs = (np.arange(nx) + 0.5) / nx
    ys = (np.arange(ny) + 0.5) / ny

    def scan_row(y: float) -> np.ndarray:
        row = np.empty(nx, dtype=bool)
        for i, x in enumerate(xs):
            op = WindowOperator(-N, N, table.diag(f, x, y), params.h)
            row[i] = not is_suitable(op, E, sp, hs=use_hs).suitable
        return row

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(scan_row, ys))
    else:
        rows = [scan_row(y) for y in ys]
    mask = np.stack(rows)
    return UnsuitabilityGrid(N, E, sp, nx, ny, mask,
                             float(mask.sum()) / (nx * ny))


def section_interval_count(grid: UnsuitabilityGrid, row: int) -> int:
    """Number of maximal circular runs of unsuitable cells in one y-row."""
    m = np.asarray(grid.mask[row], dtype=bool)
    if m.all():
        return 1
    return int(np.sum(m & ~np.roll(m, 1)))


@dataclass(frozen=True)
class ResonanceGrid:
    """Cells where dist(E, spectrum of the window restriction) < tol."""

    halfwidth: int
    E: float
    tol: float
    nx: int
    ny: int
    mask: np.ndarray  # (ny, nx) bool, True = marked


def resonance_grid(params: ModelParams, halfwidth: int, E: float,
                   nx: int, ny: int, tol: float = 0.01) -> ResonanceGrid:
    """Spectrum-membership grid for small windows [-w, w] over the torus."""
    if params.form != "skew":
        raise ValueError("resonance grids need form='skew'")
    if halfwidth < 0:
        raise ValueError("halfwidth must be >= 0")
    L = 2 * halfwidth + 1
    if L > 32:
        raise ValueError("resonance grids are meant for small windows (w <= 15)")
    table = PotentialTable(params.alpha, -halfwidth, halfwidth, "skew")
    xs = (np.arange(nx) + 0.5) / nx
    ys = (np.arange(ny) + 0.5) / ny
    X, Y = np.meshgrid(xs, ys)
    mats = np.zeros((ny, nx, L, L))
    for j, n in enumerate(range(-halfwidth, halfwidth + 1)):
        args = (Y + n * X + table.offsets[j]) % 1.0
        mats[..., j, j] = params.f.value(args)
    idx = np.arange(L - 1)
    mats[..., idx, idx + 1] = params.h
    mats[..., idx + 1, idx] = params.h
    ev = np.linalg.eigvalsh(mats)
    mask = np.min(np.abs(ev - E), axis=-1) < tol
    return ResonanceGrid(halfwidth, E, tol, nx, ny, mask)


def write_grid_pgm(mask: np.ndarray, path) -> None:
    """Binary P5 image: 0 = clear, 255 = set; row 0 = smallest y."""
    mask = np.asarray(mask, dtype=bool)
    ny, nx = mask.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{nx} {ny}\n255\n".encode())
        fh.write((mask.astype(np.uint8) * 255).tobytes())


def write_grid_csv(mask: np.ndarray, path, value_name: str = "suitable",
                   value_map=lambda marked: int(not marked)) -> None:
    """Cell-center CSV (x, y, <value_name>); deterministic row order."""
    mask = np.asarray(mask, dtype=bool)
    ny, nx = mask.shape
    with open(path, "w", newline="") as fh:
        fh.write(f"x,y,{value_name}\r\n")
        for j in range(ny):
            y = (j + 0.5) / ny
            for i in range(nx):
                x = (i + 0.5) / nx
                fh.write(f"{x:.12g},{y:.12g},{value_map(bool(mask[j, i]))}\r\n")
