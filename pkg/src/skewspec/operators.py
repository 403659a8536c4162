"""Finite restrictions H^[a,b] = h*Delta + V with Dirichlet truncation.

Windows carry absolute site indices: the weighted norm and the x-derivative
diagonal both depend on the true site position n, not the array offset.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .dynamics import Frequency, SamplingFunction, TorusPoint, mod1_int_mult


class WindowMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class ModelParams:
    """Everything that pins down one operator family member."""

    f: SamplingFunction
    alpha: Frequency
    h: float
    phase: TorusPoint = TorusPoint(0.0, 0.0)
    form: str = "skew"

    def __post_init__(self):
        if self.h <= 0:
            raise ValueError("coupling h must be positive")
        if self.form not in ("skew", "square"):
            raise ValueError(f"unknown form {self.form!r}")

    def replace_phase(self, x: float | None = None, y: float | None = None) -> "ModelParams":
        p = TorusPoint(self.phase.x if x is None else x,
                       self.phase.y if y is None else y)
        return ModelParams(self.f, self.alpha, self.h, p, self.form)


class PotentialTable:
    """Per-window cache of the exact alpha-dependent phase offsets.

    The n(n-1)*alpha (or n^2*alpha) part of the phase is independent of the
    torus point, so grids over (x,y) reuse it.  The remaining y + n*x piece
    involves only |n| <= window size, where plain double arithmetic is
    already accurate to ~1e-12.
    """

    def __init__(self, alpha: Frequency | float, a: int, b: int, form: str = "skew"):
        if b < a:
            raise ValueError("window must satisfy b >= a")
        al = alpha.alpha if isinstance(alpha, Frequency) else float(alpha)
        self.a, self.b, self.form = a, b, form
        self.sites = np.arange(a, b + 1)
        if form == "skew":
            self.offsets = np.array([mod1_int_mult(al, n * (n - 1)) for n in range(a, b + 1)])
        elif form == "square":
            self.offsets = np.array([mod1_int_mult(al, n * n) for n in range(a, b + 1)])
        else:
            raise ValueError(f"unknown form {form!r}")

    def phases(self, x: float, y: float) -> np.ndarray:
        if self.form == "skew":
            return (y + self.sites * x + self.offsets) % 1.0
        return (y + self.offsets) % 1.0

    def diag(self, f: SamplingFunction, x: float, y: float) -> np.ndarray:
        return f.value(self.phases(x, y))


@dataclass(frozen=True)
class WindowOperator:
    """Symmetric tridiagonal restriction: diagonal = potential, offdiagonal = h."""

    a: int
    b: int
    diag: np.ndarray
    offdiag: float

    def __post_init__(self):
        if self.b < self.a:
            raise ValueError("window must satisfy b >= a")
        d = np.asarray(self.diag, dtype=float)
        if d.shape != (self.b - self.a + 1,):
            raise ValueError("diagonal length does not match the window")
        object.__setattr__(self, "diag", d)

    @property
    def size(self) -> int:
        return self.b - self.a + 1

    @property
    def sites(self) -> np.ndarray:
        return np.arange(self.a, self.b + 1)

    def norm1(self) -> float:
        """Max row sum; an upper bound for the operator norm."""
        L = self.size
        if L == 1:
            return abs(float(self.diag[0]))
        ncoup = np.full(L, 2.0)
        ncoup[0] = ncoup[-1] = 1.0
        return float(np.max(np.abs(self.diag) + self.offdiag * ncoup))

    def to_dense(self) -> np.ndarray:
        m = np.diag(self.diag)
        L = self.size
        if L > 1:
            idx = np.arange(L - 1)
            m[idx, idx + 1] = self.offdiag
            m[idx + 1, idx] = self.offdiag
        return m

    def with_diag(self, diag: np.ndarray) -> "WindowOperator":
        return WindowOperator(self.a, self.b, diag, self.offdiag)


@dataclass(frozen=True)
class SiteVector:
    """Finitely supported vector on the sites a..b."""

    a: int
    b: int
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.shape != (self.b - self.a + 1,):
            raise ValueError("value array does not match the window")
        object.__setattr__(self, "values", v)

    @property
    def sites(self) -> np.ndarray:
        return np.arange(self.a, self.b + 1)

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))


def basis_vector(a: int, b: int, n: int) -> SiteVector:
    """Standard basis vector e_n on the window [a,b]."""
    if not a <= n <= b:
        raise ValueError("site outside window")
    v = np.zeros(b - a + 1)
    v[n - a] = 1.0
    return SiteVector(a, b, v)


def build_restriction(params: ModelParams, a: int, b: int) -> WindowOperator:
    """Dirichlet restriction of h*Delta + V to the sites a..b."""
    table = PotentialTable(params.alpha, a, b, params.form)
    diag = table.diag(params.f, params.phase.x, params.phase.y)
    return WindowOperator(a, b, diag, params.h)


def apply(op: WindowOperator, v: SiteVector) -> SiteVector:
    """(Hv)(n) = h(v(n+1) + v(n-1)) + V(n) v(n), couplings outside dropped."""
    if (v.a, v.b) != (op.a, op.b):
        raise WindowMismatchError(f"vector window [{v.a},{v.b}] vs operator [{op.a},{op.b}]")
    w = op.diag * v.values
    if op.size > 1:
        w = w.astype(np.result_type(w, v.values))
        w[:-1] += op.offdiag * v.values[1:]
        w[1:] += op.offdiag * v.values[:-1]
    return SiteVector(op.a, op.b, w)


def weighted_norm(v: SiteVector) -> float:
    """(sum (1 + n^2) |v(n)|^2)^(1/2) over absolute site indices n."""
    w = 1.0 + v.sites.astype(float) ** 2
    return float(np.sqrt(np.sum(w * np.abs(v.values) ** 2)))


def derivative_diagonal(params: ModelParams, a: int, b: int, which: str) -> np.ndarray:
    """Diagonal of dH/dx (entries n*f') or dH/dy (entries f') on [a,b]."""
    if which not in ("x", "y"):
        raise ValueError(f"which must be 'x' or 'y', got {which!r}")
    if params.form == "square":
        raise ValueError("phase derivatives need form='skew'; 'square' has no x")
    table = PotentialTable(params.alpha, a, b, params.form)
    fp = params.f.derivative(table.phases(params.phase.x, params.phase.y))
    if which == "x":
        return table.sites * fp
    return fp


def rayleigh_quotient(op: WindowOperator, v: SiteVector) -> float:
    """<v, Hv> / <v, v>."""
    nrm2 = float(np.vdot(v.values, v.values).real)
    if nrm2 == 0.0:
        raise ValueError("Rayleigh quotient of the zero vector")
    hv = apply(op, v)
    return float(np.vdot(v.values, hv.values).real) / nrm2


def write_operator_csv(op: WindowOperator, path) -> None:
    """Debug dump (site, diag) of the restriction."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["site", "diag"])
        for n, d in zip(op.sites, op.diag):
            w.writerow([int(n), repr(float(d))])
