"""Torus arithmetic, the skew-shift map, and trigonometric sampling functions.

Phase arguments of the form y + n*x + n*(n-1)*alpha are reduced mod 1 in
exact integer arithmetic so that potentials stay accurate for site indices
up to ~2e9, where naive double multiplication already loses ~5e-7.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

TWO_PI = 2.0 * math.pi


def _frac_exact(offset: float, terms) -> float:
    """frac(offset + sum k_i * a_i) for integer k_i and float a_i.

    Every float is treated as the exact rational m / 2^e it represents, the
    combination is accumulated in arbitrary-precision integers, and a single
    correctly rounded division produces the result.  Total error is at most
    one rounding of the final quotient (<= 1 ulp of 1.0).
    """
    num, den = offset.as_integer_ratio()
    for k, a in terms:
        if k == 0:
            continue
        m, d = float(a).as_integer_ratio()
        if d > den:
            num *= d // den
            den = d
        num += k * m * (den // d)
    r = (num % den) / den
    # the true value is < 1; a result rounded up to 1.0 folds to 0.0
    return r if r < 1.0 else 0.0


def mod1_int_mult(alpha: float, k: int) -> float:
    """k * alpha mod 1, exact for |k| < 2**62.

    The double `alpha` is interpreted as the exact dyadic rational it
    stores, so the reduction commits only the final rounding error.
    """
    if abs(k) >= 1 << 62:
        raise ValueError(f"integer multiple too large: {k}")
    if k == 0:
        return 0.0
    m, d = float(alpha).as_integer_ratio()
    r = ((k * m) % d) / d
    return r if r < 1.0 else 0.0


def mod1(x: float) -> float:
    """Reduce a float into [0, 1)."""
    r = x % 1.0
    return r if r < 1.0 else 0.0


@dataclass(frozen=True)
class Frequency:
    """Rotation number alpha in [0,1), optionally with a Diophantine constant.

    When `dioph_c` is set, ||q*alpha|| >= dioph_c / q^2 is expected for all
    q >= 1; `verify_diophantine` checks this for q up to a finite cutoff.
    """

    alpha: float
    dioph_c: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.alpha < 1.0:
            raise ValueError(f"alpha must lie in [0,1), got {self.alpha}")
        if self.dioph_c is not None and self.dioph_c <= 0:
            raise ValueError("dioph_c must be positive")

    def verify_diophantine(self, q_max: int = 10_000) -> bool:
        """Check ||q*alpha|| >= dioph_c/q^2 for 1 <= q <= q_max."""
        if self.dioph_c is None:
            raise ValueError("no Diophantine constant attached")
        for q in range(1, q_max + 1):
            r = mod1_int_mult(self.alpha, q)
            if min(r, 1.0 - r) < self.dioph_c / (q * q):
                return False
        return True


def sqrt2_frequency(dioph_c: float = 0.29) -> Frequency:
    """sqrt(2) mod 1; c = 0.29 is safe since ||q*sqrt(2)|| >= 1/((2+sqrt2)q)."""
    return Frequency(math.sqrt(2.0) - 1.0, dioph_c=dioph_c)


@dataclass(frozen=True)
class TorusPoint:
    """A point of the two-torus, coordinates reduced into [0,1)."""

    x: float
    y: float

    def __post_init__(self):
        object.__setattr__(self, "x", mod1(self.x))
        object.__setattr__(self, "y", mod1(self.y))


class SamplingFunction:
    """Real trigonometric polynomial f(t) = sum_k c_k e(k t), e(t)=exp(2*pi*i*t).

    Hermitian symmetry c_{-k} = conj(c_k) is enforced at construction by
    symmetrizing the supplied coefficients, so evaluations are exactly real.

    `loja_F` / `loja_exp` are user-supplied sublevel-set constants: the
    measure of {t : |f(t)-E| < eps} is expected to be <= loja_F * eps**loja_exp.
    They are metadata used for guard thresholds, not derived symbolically.
    """

    def __init__(self, coeffs: Mapping[int, complex], loja_F: float = 2.0,
                 loja_exp: float = 0.5):
        if loja_F <= 0 or loja_exp <= 0:
            raise ValueError("loja_F and loja_exp must be positive")
        self.loja_F = float(loja_F)
        self.loja_exp = float(loja_exp)
        sym: dict[int, complex] = {}
        for k in {abs(int(k)) for k in coeffs}:
            c = (complex(coeffs.get(k, 0.0)) + complex(coeffs.get(-k, 0.0)).conjugate()) / 2.0
            if k == 0:
                sym[0] = complex(c.real, 0.0)
            else:
                sym[k] = c
                sym[-k] = c.conjugate()
        self._coeffs = sym
        ks = sorted(k for k in sym if k > 0)
        self._ks = np.array(ks, dtype=float)
        self._cos_amp = np.array([2.0 * sym[k].real for k in ks])
        self._sin_amp = np.array([-2.0 * sym[k].imag for k in ks])
        self._c0 = sym.get(0, 0.0 + 0.0j).real

    @property
    def coeffs(self) -> dict[int, complex]:
        return dict(self._coeffs)

    @property
    def degree(self) -> int:
        return int(self._ks[-1]) if self._ks.size else 0

    def value(self, t):
        """Evaluate f at t (scalar or array); t is reduced mod 1 implicitly."""
        t = np.asarray(t, dtype=float)
        if self._ks.size == 0:
            out = np.full(t.shape, self._c0)
            return float(out) if out.ndim == 0 else out
        ang = TWO_PI * np.multiply.outer(t, self._ks)
        out = self._c0 + np.cos(ang) @ self._cos_amp + np.sin(ang) @ self._sin_amp
        return float(out) if out.ndim == 0 else out

    def derivative(self, t):
        """Evaluate f'(t)."""
        t = np.asarray(t, dtype=float)
        if self._ks.size == 0:
            out = np.zeros(t.shape)
            return float(out) if out.ndim == 0 else out
        ang = TWO_PI * np.multiply.outer(t, self._ks)
        w = TWO_PI * self._ks
        out = -np.sin(ang) @ (w * self._cos_amp) + np.cos(ang) @ (w * self._sin_amp)
        return float(out) if out.ndim == 0 else out

    __call__ = value

    def sup_derivative(self, n_grid: int = 8192) -> float:
        """Grid estimate of ||f'||_inf (exact bound: 2*pi*sum|k||c_k| nearby)."""
        ts = np.arange(n_grid) / n_grid
        return float(np.max(np.abs(self.derivative(ts))))

    def to_json(self) -> str:
        entries = [[int(k), c.real, c.imag] for k, c in sorted(self._coeffs.items())]
        return json.dumps({"coeffs": entries, "loja_F": self.loja_F,
                           "loja_exp": self.loja_exp})

    @classmethod
    def from_json(cls, text: str) -> "SamplingFunction":
        obj = json.loads(text)
        coeffs = {int(k): complex(re, im) for k, re, im in obj["coeffs"]}
        return cls(coeffs, loja_F=obj["loja_F"], loja_exp=obj["loja_exp"])

    @classmethod
    def cosine(cls, amplitude: float = 2.0, loja_F: float | None = None,
               loja_exp: float = 0.5) -> "SamplingFunction":
        """amplitude * cos(2*pi*t).  Default sublevel constants suit |A| <= 2."""
        if loja_F is None:
            # worst window sits at the extrema: measure ~ (2/pi)*sqrt(2 eps/A)
            loja_F = 1.5 / math.sqrt(abs(amplitude))
        half = amplitude / 2.0
        return cls({1: half, -1: half}, loja_F=loja_F, loja_exp=loja_exp)


def eval_sampling(f: SamplingFunction, t: float):
    """f(t); thin wrapper so the sampling surface mirrors the rest of the API."""
    return f.value(t)


def eval_sampling_deriv(f: SamplingFunction, t: float):
    return f.derivative(t)


def skew_shift_iterate(p: TorusPoint, alpha: Frequency | float, n: int) -> TorusPoint:
    """n-th iterate of T(x,y) = (x + 2 alpha, x + y) in closed form.

    T^n(x,y) = (x + 2 n alpha, y + n x + n(n-1) alpha), all mod 1.
    """
    a = alpha.alpha if isinstance(alpha, Frequency) else float(alpha)
    x = _frac_exact(p.x, [(2 * n, a)])
    y = _frac_exact(p.y, [(n, p.x), (n * (n - 1), a)])
    return TorusPoint(x, y)


def potential_phase(alpha: Frequency | float, p: TorusPoint, n: int,
                    form: str = "skew") -> float:
    """Argument fed to the sampling function at site n."""
    a = alpha.alpha if isinstance(alpha, Frequency) else float(alpha)
    if form == "skew":
        return _frac_exact(p.y, [(n, p.x), (n * (n - 1), a)])
    if form == "square":
        return _frac_exact(p.y, [(n * n, a)])
    raise ValueError(f"unknown potential form: {form!r}")


def potential_value(f: SamplingFunction, alpha: Frequency | float, p: TorusPoint,
                    n: int, form: str = "skew") -> float:
    """Potential sample V(n): f(y + n x + n(n-1) alpha) or f(alpha n^2 + y)."""
    return float(f.value(potential_phase(alpha, p, n, form)))


class SampledCurve:
    """Piecewise-linear function on the circle built from samples.

    Sample positions live in [0,1); evaluation wraps around, so the curve is
    continuous on the torus.  Values are taken as real numbers (a continuous
    lift), not reduced mod 1.
    """

    def __init__(self, xs, values):
        xs = np.asarray(xs, dtype=float) % 1.0
        values = np.asarray(values, dtype=float)
        if xs.shape != values.shape or xs.ndim != 1 or xs.size < 2:
            raise ValueError("need matching 1-d sample arrays with >= 2 points")
        order = np.argsort(xs)
        self.xs = xs[order]
        self.values = values[order]

    def __call__(self, x):
        out = np.interp(np.asarray(x, dtype=float) % 1.0, self.xs, self.values,
                        period=1.0)
        return float(out) if out.ndim == 0 else out

    @classmethod
    def constant(cls, c: float) -> "SampledCurve":
        return cls(np.array([0.0, 0.5]), np.array([float(c), float(c)]))

    @classmethod
    def from_function(cls, fn, n: int = 2048) -> "SampledCurve":
        xs = np.arange(n) / n
        return cls(xs, np.asarray(fn(xs), dtype=float))

    def max_slope(self) -> float:
        """Max finite-difference slope including the wraparound segment."""
        dx = np.diff(np.append(self.xs, self.xs[0] + 1.0))
        dv = np.diff(np.append(self.values, self.values[0]))
        good = dx > 0
        return float(np.max(np.abs(dv[good] / dx[good])))


@dataclass(frozen=True)
class TruncationResult:
    f: SamplingFunction
    sup_error: float


def truncate_sampling(f: SamplingFunction, R: int, n_grid: int = 10_000) -> TruncationResult:
    """Drop Fourier modes |k| > R; report the sup error on an n_grid grid."""
    if R < 0:
        raise ValueError("R must be >= 0")
    if f.degree <= R:
        return TruncationResult(f, 0.0)
    kept = {k: c for k, c in f.coeffs.items() if abs(k) <= R}
    if not kept:
        kept = {0: 0.0}
    fr = SamplingFunction(kept, loja_F=f.loja_F, loja_exp=f.loja_exp)
    ts = np.arange(n_grid) / n_grid
    err = float(np.max(np.abs(f.value(ts) - fr.value(ts))))
    return TruncationResult(fr, err)
