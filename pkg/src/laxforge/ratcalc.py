"""Rational-function calculus over complex floats.

Provides dense polynomials, num/den rational functions, partial-fraction
("pole sum") representations and truncated Laurent series at finite points
and at infinity.  All pole/polynomial-part extraction goes through local
series division about the expansion point, never through global solves.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

#: marker for the point at infinity (shared convention across the package)
INF = "inf"

ExtendedPoint = Union[complex, str]

#: relative threshold below which a leading/trailing coefficient is treated
#: as an exact zero when detecting orders of vanishing
LEADING_TOL = 1e-10
CHOP_TOL = 1e-12


class RatcalcError(ValueError):
    """Malformed input to a rational-calculus operation."""


class DegenerateConfigurationError(RatcalcError):
    """Nearly coincident roots/poles make the requested operation singular."""


# ---------------------------------------------------------------------------
# polynomials
# ---------------------------------------------------------------------------


class Poly:
    """Dense polynomial in one variable, ascending complex coefficients."""

    __slots__ = ("c",)

    def __init__(self, coeffs: Iterable[complex] = ()):  # noqa: D107
        c = np.asarray(list(coeffs) if not isinstance(coeffs, np.ndarray) else coeffs,
                       dtype=complex)
        if c.ndim != 1:
            raise RatcalcError("polynomial coefficients must be one-dimensional")
        # drop exactly-zero trailing coefficients
        nz = np.nonzero(c)[0]
        self.c = c[: nz[-1] + 1] if nz.size else np.zeros(0, dtype=complex)

    @staticmethod
    def zero() -> "Poly":
        return Poly()

    @staticmethod
    def one() -> "Poly":
        return Poly([1.0])

    @staticmethod
    def monomial(k: int, coeff: complex = 1.0) -> "Poly":
        c = np.zeros(k + 1, dtype=complex)
        c[k] = coeff
        return Poly(c)

    @staticmethod
    def from_roots(roots: Sequence[complex], lead: complex = 1.0) -> "Poly":
        c = np.array([lead], dtype=complex)
        for r in roots:
            c = np.convolve(c, np.array([-r, 1.0], dtype=complex))
        return Poly(c)

    @property
    def is_zero(self) -> bool:
        return self.c.size == 0

    def degree(self) -> int:
        """Degree; -1 for the zero polynomial."""
        return self.c.size - 1

    def chop(self, rel: float = CHOP_TOL) -> "Poly":
        """Drop trailing coefficients that are negligible relative to the largest."""
        if self.is_zero:
            return self
        scale = np.max(np.abs(self.c))
        keep = np.abs(self.c) > rel * scale
        nz = np.nonzero(keep)[0]
        return Poly(self.c[: nz[-1] + 1]) if nz.size else Poly()

    def __call__(self, x: complex) -> complex:
        out = 0.0 + 0.0j
        for ck in self.c[::-1]:
            out = out * x + ck
        return out

    def __add__(self, other: "Poly") -> "Poly":
        n = max(self.c.size, other.c.size)
        a = np.zeros(n, dtype=complex)
        a[: self.c.size] += self.c
        a[: other.c.size] += other.c
        return Poly(a)

    def __sub__(self, other: "Poly") -> "Poly":
        return self + (other * (-1.0))

    def __mul__(self, other):
        if isinstance(other, Poly):
            if self.is_zero or other.is_zero:
                return Poly()
            return Poly(np.convolve(self.c, other.c))
        return Poly(self.c * complex(other))

    __rmul__ = __mul__

    def __neg__(self) -> "Poly":
        return self * (-1.0)

    def deriv(self) -> "Poly":
        if self.c.size <= 1:
            return Poly()
        return Poly(self.c[1:] * np.arange(1, self.c.size))

    def taylor_at(self, a: complex, nterms: int) -> np.ndarray:
        """First ``nterms`` coefficients of self(a + u) as a series in u.

        Synthetic (Horner) division; exact up to rounding.
        """
        out = np.zeros(nterms, dtype=complex)
        if self.is_zero:
            return out
        work = self.c.copy()
        for j in range(nterms):
            if work.size == 0:
                break
            # synthetic division of work by (x - a); remainder is the j-th coeff
            q = np.zeros(max(work.size - 1, 0), dtype=complex)
            acc = 0.0 + 0.0j
            for k in range(work.size - 1, 0, -1):
                acc = work[k] + acc * a
                q[k - 1] = acc
            out[j] = work[0] + acc * a
            work = q
        return out

    def shifted(self, a: complex) -> "Poly":
        """Polynomial p(u) with p(u) = self(a + u)."""
        return Poly(self.taylor_at(a, self.c.size if self.c.size else 1))

    def roots(self) -> np.ndarray:
        p = self.chop()
        if p.degree() < 1:
            return np.zeros(0, dtype=complex)
        return np.roots(p.c[::-1])

    def __repr__(self) -> str:  # pragma: no cover
        return f"Poly({list(self.c)})"


# ---------------------------------------------------------------------------
# truncated Laurent series
# ---------------------------------------------------------------------------


class Series:
    """Truncated Laurent series in the local parameter of a point.

    At a finite point ``a`` the parameter is ``z = lam - a`` and the series is
    ``sum c[i] z**(v+i)``.  At infinity the parameter is ``z = 1/lam``; order
    ``k`` then multiplies ``lam**(-k)``, matching the convention used for
    expansions of eigenvalues at poles.
    """

    __slots__ = ("point", "v", "c")

    def __init__(self, point: ExtendedPoint, v: int, coeffs: Iterable[complex]):
        self.point = point
        self.v = int(v)
        self.c = np.asarray(list(coeffs) if not isinstance(coeffs, np.ndarray) else coeffs,
                            dtype=complex)

    # -- basic access -------------------------------------------------------

    def nterms(self) -> int:
        return self.c.size

    def top(self) -> int:
        """Highest z-order carried by the truncation (inclusive)."""
        return self.v + self.c.size - 1

    def coeff(self, order: int) -> complex:
        """Coefficient of z**order; zero below valuation, error above coverage."""
        if order < self.v:
            return 0.0 + 0.0j
        if order > self.top():
            raise RatcalcError(
                f"series truncated at order {self.top()}, coefficient {order} requested")
        return complex(self.c[order - self.v])

    def window(self, k_lo: int, k_hi: int) -> np.ndarray:
        return np.array([self.coeff(k) for k in range(k_lo, k_hi + 1)])

    # -- arithmetic ---------------------------------------------------------

    def _check(self, other: "Series") -> None:
        if self.point != other.point:
            raise RatcalcError("series expanded at different points")

    def __add__(self, other: "Series") -> "Series":
        self._check(other)
        v = min(self.v, other.v)
        hi = min(self.top(), other.top())
        if hi < v:
            return Series(self.point, v, [])
        n = hi - v + 1
        c = np.zeros(n, dtype=complex)
        for s in (self, other):
            lo = s.v - v
            m = min(s.c.size, n - lo)
            if m > 0:
                c[lo: lo + m] += s.c[:m]
        return Series(self.point, v, c)

    def __sub__(self, other: "Series") -> "Series":
        return self + other.scale(-1.0)

    def scale(self, k: complex) -> "Series":
        return Series(self.point, self.v, self.c * complex(k))

    def __mul__(self, other: "Series") -> "Series":
        self._check(other)
        n = min(self.c.size, other.c.size)
        if n == 0 or self.c.size == 0 or other.c.size == 0:
            return Series(self.point, self.v + other.v, [])
        full = np.convolve(self.c, other.c)
        return Series(self.point, self.v + other.v, full[:n])

    def trim_leading(self, rel: float = LEADING_TOL) -> "Series":
        """Promote the valuation past leading coefficients that are noise."""
        if self.c.size == 0:
            return self
        scale = np.max(np.abs(self.c))
        if scale == 0.0:
            return Series(self.point, self.v + self.c.size, [])
        k = 0
        while k < self.c.size and abs(self.c[k]) <= rel * scale:
            k += 1
        return Series(self.point, self.v + k, self.c[k:])

    def inverse(self) -> "Series":
        s = self.trim_leading()
        if s.c.size == 0:
            raise DegenerateConfigurationError("cannot invert a vanishing series")
        n = s.c.size
        a = s.c / s.c[0]
        inv = np.zeros(n, dtype=complex)
        inv[0] = 1.0
        for k in range(1, n):
            inv[k] = -np.dot(a[1: k + 1], inv[k - 1:: -1][: k])
        return Series(self.point, -s.v, inv / s.c[0])

    def __truediv__(self, other: "Series") -> "Series":
        return self * other.inverse()

    def deriv(self) -> "Series":
        """Derivative with respect to lam (not the local parameter)."""
        if self.point == INF:
            # d/dlam lam**(-k) = -k lam**(-k-1)
            orders = -np.arange(self.v, self.v + self.c.size)
            return Series(INF, self.v + 1, (orders * self.c))
        orders = np.arange(self.v, self.v + self.c.size)
        c = orders * self.c
        return Series(self.point, self.v - 1, c)

    def sqrt(self, lead: complex | None = None) -> "Series":
        """Series square root; valuation must be even.

        ``lead`` selects the branch: the root whose leading coefficient is
        closer to ``lead`` is returned (principal branch if omitted).
        """
        s = self.trim_leading()
        if s.c.size == 0:
            raise DegenerateConfigurationError("square root of a vanishing series")
        if s.v % 2:
            raise RatcalcError("square root of a series of odd valuation")
        n = s.c.size
        r0 = cmath.sqrt(s.c[0])
        if lead is not None and abs(-r0 - lead) < abs(r0 - lead):
            r0 = -r0
        out = np.zeros(n, dtype=complex)
        out[0] = r0
        for k in range(1, n):
            acc = s.c[k] - np.dot(out[1:k], out[k - 1: 0: -1])
            out[k] = acc / (2.0 * r0)
        return Series(self.point, s.v // 2, out)

    def __repr__(self) -> str:  # pragma: no cover
        return f"Series(point={self.point}, v={self.v}, c={list(self.c)})"


def poly_series(p: Poly, point: ExtendedPoint, nterms: int) -> Series:
    """Expand a polynomial as a truncated series at ``point``."""
    if point == INF:
        # p = sum p_k lam**k -> order -k in the z = 1/lam convention
        if p.is_zero:
            return Series(INF, 0, np.zeros(nterms, dtype=complex))
        d = p.degree()
        c = np.zeros(nterms, dtype=complex)
        for k in range(d, -1, -1):
            idx = d - k
            if idx < nterms:
                c[idx] = p.c[k]
        return Series(INF, -d, c)
    return Series(point, 0, p.taylor_at(complex(point), nterms))


def _principal_series_at(a: complex, b: complex, k: int, nterms: int) -> np.ndarray:
    """Taylor coefficients of (lam-b)**(-k) about a regular point a != b."""
    c = a - b
    out = np.zeros(nterms, dtype=complex)
    base = c ** (-k)
    for i in range(nterms):
        out[i] = base * math.comb(k - 1 + i, i) * (-1.0) ** i / c**i
    return out


def _principal_series_at_inf(b: complex, k: int, nterms: int) -> Series:
    """(lam-b)**(-k) expanded at infinity (z-order k upward)."""
    c = np.zeros(nterms, dtype=complex)
    for i in range(nterms):
        c[i] = math.comb(k - 1 + i, i) * b**i
    return Series(INF, k, c)


# ---------------------------------------------------------------------------
# partial-fraction ("pole sum") representation
# ---------------------------------------------------------------------------


class PoleSum:
    """Rational function stored as polynomial part plus principal parts.

    ``parts[a][j]`` multiplies ``(lam - a)**-(j+1)``.  The representation is
    closed under addition, multiplication, differentiation and multiplication
    by polynomials, and yields exact Laurent windows at every stored pole and
    at infinity, which is what the Lax-matrix formulas consume.
    """

    __slots__ = ("poly", "parts")

    def __init__(self, poly: Poly | None = None,
                 parts: Mapping[complex, Sequence[complex]] | None = None):
        self.poly = poly if poly is not None else Poly()
        self.parts: dict[complex, np.ndarray] = {}
        if parts:
            for a, cs in parts.items():
                arr = np.asarray(list(cs) if not isinstance(cs, np.ndarray) else cs,
                                 dtype=complex)
                if arr.size and np.any(arr != 0.0):
                    self.parts[complex(a)] = arr.copy()

    @staticmethod
    def zero() -> "PoleSum":
        return PoleSum()

    @staticmethod
    def constant(value: complex) -> "PoleSum":
        return PoleSum(Poly([value]))

    def copy(self) -> "PoleSum":
        return PoleSum(Poly(self.poly.c.copy()), {a: c.copy() for a, c in self.parts.items()})

    def pole_order(self, a: complex) -> int:
        arr = self.parts.get(complex(a))
        if arr is None:
            return 0
        nz = np.nonzero(arr)[0]
        return int(nz[-1] + 1) if nz.size else 0

    # -- evaluation ---------------------------------------------------------

    def __call__(self, lam: complex) -> complex:
        out = self.poly(lam)
        for a, cs in self.parts.items():
            u = 1.0 / (lam - a)
            out += np.polyval(cs[::-1], u) * u
        return out

    # -- linear structure ----------------------------------------------------

    def __add__(self, other: "PoleSum") -> "PoleSum":
        out = self.copy()
        out.poly = out.poly + other.poly
        for a, cs in other.parts.items():
            if a in out.parts:
                n = max(out.parts[a].size, cs.size)
                acc = np.zeros(n, dtype=complex)
                acc[: out.parts[a].size] += out.parts[a]
                acc[: cs.size] += cs
                out.parts[a] = acc
            else:
                out.parts[a] = cs.copy()
        return out

    def __sub__(self, other: "PoleSum") -> "PoleSum":
        return self + other.scale(-1.0)

    def scale(self, k: complex) -> "PoleSum":
        return PoleSum(self.poly * k, {a: c * complex(k) for a, c in self.parts.items()})

    def __neg__(self) -> "PoleSum":
        return self.scale(-1.0)

    # -- calculus ------------------------------------------------------------

    def deriv(self) -> "PoleSum":
        parts = {}
        for a, cs in self.parts.items():
            d = np.zeros(cs.size + 1, dtype=complex)
            for j, c in enumerate(cs):
                d[j + 1] = -(j + 1) * c
            parts[a] = d
        return PoleSum(self.poly.deriv(), parts)

    def mul_linear(self, a1: complex, a0: complex) -> "PoleSum":
        """Exact product with the linear polynomial ``a1*lam + a0``."""
        poly = self.poly * Poly([a0, a1])
        out = PoleSum(poly)
        for b, cs in self.parts.items():
            # (a1 lam + a0) / (lam-b)**(j+1)
            #   = a1/(lam-b)**j + (a1 b + a0)/(lam-b)**(j+1)
            acc = np.zeros(cs.size, dtype=complex)
            extra_poly = 0.0 + 0.0j
            for j, c in enumerate(cs):
                acc[j] += (a1 * b + a0) * c
                if j == 0:
                    extra_poly += a1 * c
                else:
                    acc[j - 1] += a1 * c
            out = out + PoleSum(Poly([extra_poly]), {b: acc})
        return out

    def __mul__(self, other: "PoleSum") -> "PoleSum":
        points = set(self.parts) | set(other.parts)
        orders = {a: self.pole_order(a) + other.pole_order(a) for a in points}
        parts = {}
        for a in points:
            m = orders[a]
            if m == 0:
                continue
            # with n = m + guard terms both factors cover product orders < 0
            n = m + 1
            sa = self.series_at(a, n)
            sb = other.series_at(a, n)
            prod = sa * sb
            window = prod.window(-m, -1)
            parts[a] = window[::-1]
        deg = self.poly.degree() + other.poly.degree()
        deg = max(deg, self.poly.degree(), other.poly.degree(), 0)
        n_inf = deg + 2
        sa = self.series_at_infinity(n_inf + 2)
        sb = other.series_at_infinity(n_inf + 2)
        prod = sa * sb
        top = -prod.v  # top lam power
        coeffs = []
        for k in range(0, top + 1):
            if -k > prod.top():
                coeffs.append(0.0)
            else:
                coeffs.append(prod.coeff(-k))
        return PoleSum(Poly(coeffs), parts)

    # -- expansions ----------------------------------------------------------

    def series_at(self, a: complex, nterms: int) -> Series:
        a = complex(a)
        m = self.parts[a].size if a in self.parts else 0
        n_reg = nterms  # regular orders 0 .. nterms-1 relative to -m offset
        total = np.zeros(m + n_reg, dtype=complex)
        if m:
            total[:m] = self.parts[a][::-1]  # order -m first
        reg = self.poly.taylor_at(a, n_reg)
        for b, cs in self.parts.items():
            if b == a:
                continue
            for j, c in enumerate(cs):
                if c != 0.0:
                    reg = reg + c * _principal_series_at(a, b, j + 1, n_reg)
        total[m:] += reg
        return Series(a, -m, total)

    def series_at_infinity(self, nterms: int) -> Series:
        d = max(self.poly.degree(), 0)
        out = poly_series(self.poly, INF, nterms + d)
        v = out.v
        n = nterms + d
        acc = np.zeros(n, dtype=complex)
        acc[: out.c.size] = out.c
        for b, cs in self.parts.items():
            for j, c in enumerate(cs):
                if c != 0.0:
                    s = _principal_series_at_inf(b, j + 1, n)
                    lo = s.v - v
                    take = n - lo
                    if take > 0:
                        acc[lo:] += c * s.c[:take]
        return Series(INF, v, acc)

    def __repr__(self) -> str:  # pragma: no cover
        return f"PoleSum(poly={self.poly!r}, parts={ {a: list(c) for a, c in self.parts.items()} })"


# ---------------------------------------------------------------------------
# num/den rational functions (public calculus API)
# ---------------------------------------------------------------------------


@dataclass
class LaurentSlice:
    """Laurent coefficients of a function at a point, orders k_lo..k_hi.

    At a finite point order ``k`` multiplies ``(lam-a)**k``; at infinity it
    multiplies ``lam**(-k)``.
    """

    point: ExtendedPoint
    k_lo: int
    coeffs: np.ndarray

    @property
    def k_hi(self) -> int:
        return self.k_lo + len(self.coeffs) - 1

    def coeff(self, k: int) -> complex:
        if not self.k_lo <= k <= self.k_hi:
            raise RatcalcError(f"order {k} outside slice [{self.k_lo}, {self.k_hi}]")
        return complex(self.coeffs[k - self.k_lo])


class RationalFunction:
    """Quotient of two polynomials, denominator kept monic."""

    __slots__ = ("num", "den")

    def __init__(self, num: Poly, den: Poly | None = None):
        den = den if den is not None else Poly.one()
        if den.is_zero:
            raise RatcalcError("denominator is identically zero")
        lead = den.c[-1]
        self.num = num * (1.0 / lead)
        self.den = den * (1.0 / lead)

    @staticmethod
    def from_const(value: complex) -> "RationalFunction":
        return RationalFunction(Poly([value]))

    @staticmethod
    def from_pole_sum(ps: PoleSum) -> "RationalFunction":
        num = ps.poly
        den = Poly.one()
        out = RationalFunction(num, den)
        for a, cs in ps.parts.items():
            m = cs.size
            den_a = Poly.from_roots([a] * m)
            num_a = Poly()
            for j, c in enumerate(cs):
                num_a = num_a + Poly.from_roots([a] * (m - j - 1)) * c
            out = out + RationalFunction(num_a, den_a)
        return out

    def __call__(self, lam: complex) -> complex:
        return self.num(lam) / self.den(lam)

    def __add__(self, other: "RationalFunction") -> "RationalFunction":
        if _same_poly(self.den, other.den):
            return RationalFunction(self.num + other.num, self.den)
        return RationalFunction(self.num * other.den + other.num * self.den,
                                self.den * other.den)

    def __sub__(self, other: "RationalFunction") -> "RationalFunction":
        return self + other.scale(-1.0)

    def scale(self, k: complex) -> "RationalFunction":
        return RationalFunction(self.num * k, self.den)

    def __mul__(self, other: "RationalFunction") -> "RationalFunction":
        return RationalFunction(self.num * other.num, self.den * other.den)

    def __truediv__(self, other: "RationalFunction") -> "RationalFunction":
        if other.num.is_zero:
            raise RatcalcError("division by the zero function")
        return RationalFunction(self.num * other.den, self.den * other.num)

    def deriv(self) -> "RationalFunction":
        return RationalFunction(self.num.deriv() * self.den - self.num * self.den.deriv(),
                                self.den * self.den)

    def deflate(self, rel: float = 1e-12) -> "RationalFunction":
        """Cancel near-common roots of num and den (keeps degrees minimal)."""
        num, den = self.num.chop(), self.den.chop()
        if num.is_zero or den.degree() < 1 or num.degree() < 1:
            return RationalFunction(num, den)
        scale = max(1.0, float(np.max(np.abs(den.roots()))) if den.degree() else 1.0)
        changed = True
        while changed and den.degree() >= 1 and num.degree() >= 1:
            changed = False
            for r in den.roots():
                nroots = num.roots()
                if nroots.size and np.min(np.abs(nroots - r)) < rel * scale:
                    num = Poly(np.polydiv(num.c[::-1], np.array([1.0, -r]))[0][::-1])
                    den = Poly(np.polydiv(den.c[::-1], np.array([1.0, -r]))[0][::-1])
                    changed = True
                    break
        return RationalFunction(num, den)

    def series_at(self, point: ExtendedPoint, nterms: int) -> Series:
        num, den = self.num.chop(), self.den.chop()
        if num.is_zero:
            return Series(point, 0, np.zeros(nterms, dtype=complex))
        if point == INF:
            sn = poly_series(num, INF, nterms + den.degree() + 1)
            sd = poly_series(den, INF, nterms + den.degree() + 1)
        else:
            guard = den.degree() + 1
            sn = poly_series(num, point, nterms + guard)
            sd = poly_series(den, point, nterms + guard)
        return sn * sd.inverse()

    def __repr__(self) -> str:  # pragma: no cover
        return f"RationalFunction(num={self.num!r}, den={self.den!r})"


def _same_poly(p: Poly, q: Poly) -> bool:
    return p.c.size == q.c.size and bool(np.array_equal(p.c, q.c))


# ---------------------------------------------------------------------------
# the projector operations
# ---------------------------------------------------------------------------


def laurent_slice(f: RationalFunction, point: ExtendedPoint,
                  k_lo: int, k_hi: int) -> LaurentSlice:
    """Laurent coefficients of ``f`` at ``point`` for orders ``k_lo..k_hi``."""
    if k_lo > k_hi:
        raise RatcalcError("k_lo must not exceed k_hi")
    if point == INF:
        # order k multiplies lam**-k; series already uses this convention
        s = f.series_at(INF, k_hi - min(k_lo, 0) + f.num.chop().degree()
                        + f.den.chop().degree() + 4)
    else:
        s = f.series_at(point, k_hi - min(k_lo, 0) + f.den.chop().degree() + 4)
    s = s.trim_leading()
    coeffs = np.array([s.coeff(k) if s.v <= k <= s.top() else
                       (0.0 if k < s.v else _overflow(k, s))
                       for k in range(k_lo, k_hi + 1)])
    return LaurentSlice(point, k_lo, coeffs)


def _overflow(k, s):
    raise RatcalcError(f"coefficient {k} beyond computed truncation {s.top()}")


def singular_part(f: RationalFunction, a: complex) -> RationalFunction:
    """Principal part of ``f`` at the finite point ``a`` (zero if regular)."""
    den = f.den.chop()
    max_order = den.degree()
    if max_order == 0:
        return RationalFunction(Poly())
    s = f.series_at(a, max_order + 2).trim_leading()
    m = -s.v
    if m <= 0:
        return RationalFunction(Poly())
    num = Poly()
    for k in range(1, m + 1):
        num = num + Poly.from_roots([a] * (m - k)) * s.coeff(-k)
    return RationalFunction(num, Poly.from_roots([a] * m))


def polynomial_part_at_infinity(f: RationalFunction) -> Poly:
    """Polynomial part of ``f`` at infinity, constant term included."""
    num, den = f.num.chop(), f.den.chop()
    if num.is_zero:
        return Poly()
    d = num.degree() - den.degree()
    if d < 0:
        return Poly()
    s = f.series_at(INF, d + 2).trim_leading()
    coeffs = [s.coeff(-k) if s.v <= -k <= s.top() else 0.0 for k in range(0, d + 1)]
    return Poly(coeffs)


def partial_fractions(f: RationalFunction, profile) -> dict:
    """Decompose ``f`` over the poles declared by ``profile``.

    Returns ``{(s, k): coeff}`` for finite-pole principal parts (pole index
    ``s``, order ``k``) and ``{(INF, k): coeff}`` for the polynomial part.
    Raises if ``f`` has a pole outside the profile or one of excessive order.
    """
    out: dict = {}
    recon = PoleSum()
    for s, (x, r) in enumerate(iter_finite_poles(profile)):
        sp = f.series_at(x, r + 2).trim_leading()
        order = -sp.v
        if order > r:
            raise RatcalcError(f"pole at {x} exceeds declared order {r}")
        coeffs = np.zeros(r, dtype=complex)
        for k in range(1, order + 1):
            coeffs[k - 1] = sp.coeff(-k)
        for k in range(1, r + 1):
            out[(s, k)] = complex(coeffs[k - 1])
        if order:
            recon = recon + PoleSum(parts={x: coeffs})
    ppart = polynomial_part_at_infinity(f)
    max_deg = max(profile_r_inf(profile) - 3, 0)
    if ppart.degree() > max_deg:
        raise RatcalcError(
            f"polynomial part degree {ppart.degree()} exceeds profile bound {max_deg}")
    for k in range(0, max_deg + 1):
        out[(INF, k)] = complex(ppart.c[k]) if k <= ppart.degree() else 0.0 + 0.0j
    recon = recon + PoleSum(ppart)
    # residual check: the decomposition must reproduce f
    sample = 1.73 + 0.41j
    ref = f(sample)
    if abs(recon(sample) - ref) > 1e-8 * (1.0 + abs(ref)):
        raise RatcalcError("function has singular content outside the declared profile")
    return out


def iter_finite_poles(profile):
    """Yield (x, r) pairs from a PoleProfile-like object."""
    for p in profile.finite:
        yield complex(p.x), int(p.r)


def profile_r_inf(profile) -> int:
    return int(profile.r_inf)
