"""Explicit time dependence of the chart coordinates: profile matrices.

The triangular differential systems fixing how (Q, R) depend on the
irregular times are integrated symbolically in an exact monomial calculus
(rational coefficients, fractional powers of the leading time only).  The
resulting profile matrices define the isospectral coordinates (u, v) and
feed the isospectral-condition verification.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from .coords import LaxCoords
from .model import (DeformationVector, PoleProfile, TimeChart,
                    apply_deformation, check_deformation)
from .ratcalc import INF


class ProfileSolveError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# exact monomial calculus
# ---------------------------------------------------------------------------
#
# A monomial maps symbol index -> exponent; exponents are Fractions (only
# the designated Euler symbol ever acquires non-integer ones).  A MonoPoly
# maps monomial keys to Fraction coefficients.

MonoKey = tuple  # sorted tuple of (symbol, Fraction exponent)


def _key(d: dict) -> MonoKey:
    return tuple(sorted((s, e) for s, e in d.items() if e != 0))


class MonoPoly(dict):
    @staticmethod
    def const(c) -> "MonoPoly":
        out = MonoPoly()
        if c:
            out[()] = Fraction(c)
        return out

    @staticmethod
    def symbol(s, expo=1) -> "MonoPoly":
        return MonoPoly({_key({s: Fraction(expo)}): Fraction(1)})

    def __add__(self, other: "MonoPoly") -> "MonoPoly":
        out = MonoPoly(self)
        for k, c in other.items():
            acc = out.get(k, Fraction(0)) + c
            if acc:
                out[k] = acc
            else:
                out.pop(k, None)
        return out

    def __sub__(self, other: "MonoPoly") -> "MonoPoly":
        return self + other.scale(Fraction(-1))

    def scale(self, c) -> "MonoPoly":
        c = Fraction(c)
        if not c:
            return MonoPoly()
        return MonoPoly({k: v * c for k, v in self.items()})

    def __mul__(self, other: "MonoPoly") -> "MonoPoly":
        out = MonoPoly()
        for k1, c1 in self.items():
            d1 = dict(k1)
            for k2, c2 in other.items():
                d = dict(d1)
                for s, e in k2:
                    d[s] = d.get(s, Fraction(0)) + e
                k = _key(d)
                acc = out.get(k, Fraction(0)) + c1 * c2
                if acc:
                    out[k] = acc
                else:
                    out.pop(k, None)
        return out

    def diff(self, sym) -> "MonoPoly":
        out = MonoPoly()
        for k, c in self.items():
            d = dict(k)
            e = d.get(sym, Fraction(0))
            if e == 0:
                continue
            d[sym] = e - 1
            out[_key(d)] = out.get(_key(d), Fraction(0)) + c * e
        return MonoPoly({k: v for k, v in out.items() if v})

    def integrate(self, sym) -> "MonoPoly":
        out = MonoPoly()
        for k, c in self.items():
            d = dict(k)
            e = d.get(sym, Fraction(0))
            if e == -1:
                raise ProfileSolveError("logarithmic term in profile integration")
            d[sym] = e + 1
            out[_key(d)] = c / (e + 1)
        return out

    def div_symbol(self, sym) -> "MonoPoly":
        out = MonoPoly()
        for k, c in self.items():
            d = dict(k)
            d[sym] = d.get(sym, Fraction(0)) - 1
            out[_key(d)] = c
        return out

    def depends_only_on(self, sym) -> bool:
        return all(all(s == sym for s, _ in k) for k in self)

    def evaluate(self, values: dict) -> complex:
        out = 0.0 + 0.0j
        for k, c in self.items():
            term = complex(c)
            for s, e in k:
                base = complex(values[s])
                term *= base ** float(e) if e.denominator == 1 else \
                    np.exp(float(e) * np.log(base))
            out += term
        return out


class Affine(dict):
    """Linear combination over free-constant ids; id 0 is the '1' slot."""

    @staticmethod
    def of(cid: int, poly: MonoPoly) -> "Affine":
        return Affine({cid: poly}) if poly else Affine()

    def __add__(self, other: "Affine") -> "Affine":
        out = Affine(self)
        for cid, p in other.items():
            acc = out.get(cid, MonoPoly()) + p
            if acc:
                out[cid] = acc
            else:
                out.pop(cid, None)
        return out

    def __sub__(self, other: "Affine") -> "Affine":
        return self + other.apply(lambda p: p.scale(-1))

    def apply(self, fn: Callable[[MonoPoly], MonoPoly]) -> "Affine":
        out = Affine()
        for cid, p in self.items():
            q = fn(p)
            if q:
                out[cid] = q
        return out

    def scale(self, c) -> "Affine":
        return self.apply(lambda p: p.scale(c))

    def mul_poly(self, poly: MonoPoly) -> "Affine":
        return self.apply(lambda p: p * poly)

    def is_zero(self) -> bool:
        return not self


def _reconstruct(partials: dict, symbols: list) -> Affine:
    """Potential reconstruction from exact partial derivatives."""
    acc = Affine()
    for sym in symbols:
        residue = partials[sym] - acc.apply(lambda p: p.diff(sym))
        acc = acc + residue.apply(lambda p: p.integrate(sym))
    for sym in symbols:
        if (partials[sym] - acc.apply(lambda p: p.diff(sym))):
            raise ProfileSolveError("inconsistent partials in profile recursion")
    return acc


# ---------------------------------------------------------------------------
# the three triangular systems
# ---------------------------------------------------------------------------


@dataclass
class ProfileMatrix:
    """Solution bundle of one triangular system.

    ``F[a][d]`` multiplies the d-th free constant in the a-th solved row;
    ``shift[a]`` is the inhomogeneous part.  ``symbols`` lists the time
    subscripts entering the entries; ``verified`` records that the exact
    equations were recomputed after the solve.
    """

    kind: str
    order: int
    rows: list          # list of Affine
    n_consts: int
    symbols: list
    verified: bool

    def f_entry(self, a: int, d: int) -> MonoPoly:
        """Profile coefficient with 1-based matrix indices (a >= d)."""
        if self.kind == "finite":
            row = self.rows[a - 1]
            return row.get(d, MonoPoly())
        row = self.rows[a - 3]
        return row.get(d, MonoPoly())

    def matrix(self, times: dict) -> np.ndarray:
        m = len(self.rows)
        F = np.zeros((m, self.n_consts), dtype=complex)
        for a, row in enumerate(self.rows):
            for cid, poly in row.items():
                if cid >= 1:
                    F[a, cid - 1] = poly.evaluate(times)
        return F

    def shift_vector(self, times: dict) -> np.ndarray:
        out = np.zeros(len(self.rows), dtype=complex)
        for a, row in enumerate(self.rows):
            if 0 in row:
                out[a] = row[0].evaluate(times)
        return out


def solve_profile_finite(r: int) -> ProfileMatrix:
    """Triangular system at a finite pole of order r (size r-1).

    Symbols are the time subscripts 1..r-1; the leading time r-1 is the
    Euler direction carrying fractional powers.  Rows come out in the order
    of the coordinates Q_r .. Q_2 (equivalently R_r .. R_2).
    """
    m = r - 1
    if m < 1:
        raise ValueError("no irregular times at a simple pole")
    special = r - 1
    other_syms = [r - b for b in range(2, m + 1)]  # integration order r-2 .. 1

    def tsym(k):  # t_{X,k} as a MonoPoly
        return MonoPoly.symbol(k)

    rows: list[Affine] = []
    partial_cache: dict = {}  # (row a, symbol) -> Affine
    next_const = 1

    def toep_rhs(a, b):
        if a < b:
            return Affine()
        idx = a - b + 1
        return rows[idx - 1]

    for a in range(1, m + 1):
        partials = {}
        for b in range(2, m + 1):
            sym = r - b
            rhs = toep_rhs(a, b).scale(Fraction(1, r - b))
            for c in range(1, a):
                coeff = r - 1 - a + c
                if 1 <= coeff <= r - 1:
                    rhs = rhs - partial_cache[(c, sym)].mul_poly(
                        tsym(coeff)).scale(Fraction(1, r - c))
            partials[sym] = rhs.apply(
                lambda p: p.div_symbol(special)).scale(Fraction(r - a))
        acc = _reconstruct(partials, other_syms) if m > 1 else Affine()
        # Euler direction: t h' - ((r-a)/(r-1)) h = K(t_{r-1})
        S = Affine()
        for c in range(1, a):
            coeff = r - 1 - a + c
            if 1 <= coeff <= r - 1:
                S = S + partial_cache[(c, special)].mul_poly(
                    tsym(coeff)).scale(Fraction(1, r - c))
        K = (acc.scale(Fraction(1, r - 1)) - S
             - acc.apply(lambda p: p.diff(special) * tsym(special))
             .scale(Fraction(1, r - a)))
        h = Affine()
        gamma = Fraction(r - a, r - 1)
        for cid, poly in K.items():
            for key, c in poly.items():
                if any(s != special for s, _ in key):
                    raise ProfileSolveError("Euler residual not pure in leading time")
                beta = dict(key).get(special, Fraction(0))
                denom = beta * Fraction(1, r - a) - Fraction(1, r - 1)
                if denom == 0:
                    raise ProfileSolveError("resonant Euler exponent")
                h = h + Affine.of(cid, MonoPoly({key: c / denom}))
        h = h + Affine.of(next_const, MonoPoly.symbol(special, gamma))
        next_const += 1
        row = acc + h
        rows.append(row)
        for b in range(1, m + 1):
            sym = r - b
            partial_cache[(a, sym)] = row.apply(lambda p: p.diff(sym))
    _verify_finite(rows, partial_cache, r, m)
    return ProfileMatrix("finite", r, rows, next_const - 1,
                         [r - b for b in range(1, m + 1)], True)


def _verify_finite(rows, partial_cache, r, m):
    for a in range(1, m + 1):
        for b in range(1, m + 1):
            lhs = Affine()
            for c in range(1, a + 1):
                coeff = r - 1 - a + c
                if 1 <= coeff <= r - 1:
                    lhs = lhs + partial_cache[(c, r - b)].mul_poly(
                        MonoPoly.symbol(coeff)).scale(Fraction(1, r - c))
            rhs = (rows[a - b].scale(Fraction(1, r - b)) if a >= b else Affine())
            if not (lhs - rhs).is_zero():
                raise ProfileSolveError(f"finite system check failed at ({a},{b})")


def _solve_infinity(m: int, w_sym, col_syms, dl, dr, prefix) -> list:
    """Unit-diagonal explicit recursion shared by the infinity systems.

    ``w_sym(j)`` gives the LHS Toeplitz symbol for offsets j >= 3 (w1 = 1,
    w2 = 0); ``col_syms[b-1]`` is the time symbol of column b; ``dl``/``dr``
    are the diagonal weights; ``prefix`` holds the two leading entries of
    the RHS Toeplitz column as Affine values.
    """
    rows: list[Affine] = []
    partial_cache: dict = {}

    def z(i):
        if i <= 0:
            return Affine()
        if i <= 2:
            return prefix[i - 1]
        return rows[i - 3]

    next_const = max([0] + [cid for p in prefix for cid in p]) + 1
    for a in range(1, m + 1):
        partials = {}
        for b in range(1, m + 1):
            sym = col_syms[b - 1]
            rhs = z(a - b + 1).scale(Fraction(1, dr(b))) if a >= b else Affine()
            for c in range(1, a):
                j = a - c + 1
                w = w_sym(j)
                if w is not None:
                    rhs = rhs - partial_cache[(c, sym)].mul_poly(w).scale(
                        Fraction(1, dl(c)))
            partials[sym] = rhs.scale(Fraction(dl(a)))
        row = _reconstruct(partials, col_syms)
        row = row + Affine.of(next_const, MonoPoly.const(1))
        next_const += 1
        rows.append(row)
        for b in range(1, m + 1):
            sym = col_syms[b - 1]
            partial_cache[(a, sym)] = row.apply(lambda p: p.diff(sym))
    # exact re-verification
    for a in range(1, m + 1):
        for b in range(1, m + 1):
            sym = col_syms[b - 1]
            lhs = partial_cache[(a, sym)].scale(Fraction(1, dl(a)))
            for c in range(1, a):
                w = w_sym(a - c + 1)
                if w is not None:
                    lhs = lhs + partial_cache[(c, sym)].mul_poly(w).scale(
                        Fraction(1, dl(c)))
            rhs = z(a - b + 1).scale(Fraction(1, dr(b))) if a >= b else Affine()
            if not (lhs - rhs).is_zero():
                raise ProfileSolveError(f"infinity system check failed at ({a},{b})")
    return rows


def solve_profile_infinity(r_inf: int) -> ProfileMatrix:
    """Q-system at infinity (size r_inf - 4); trivial below r_inf = 5.

    Rows follow Q_{inf,r_inf-5} .. Q_{inf,0} in units of omega; constant 1
    is the frozen normalization slot and constant id 1 plays u_{inf,r_inf-4}.
    """
    if r_inf < 4:
        raise ValueError("infinity profile needs r_inf >= 4")
    m = r_inf - 4
    prefix = [Affine.of(0, MonoPoly.const(1)),
              Affine.of(1, MonoPoly.const(1))]  # omega slot, u_{r_inf-4}

    def w_sym(j):
        k = r_inf - j
        return MonoPoly.symbol(k) if 2 <= k <= r_inf - 3 else None

    col_syms = [r_inf - 2 - b for b in range(1, m + 1)]
    rows = _solve_infinity(m, w_sym, col_syms,
                           dl=lambda c: r_inf - 3 - c,
                           dr=lambda b: r_inf - 2 - b,
                           prefix=prefix) if m else []
    return ProfileMatrix("inf_Q", r_inf, rows, m + 1, col_syms, True)


def solve_profile_infinity_R(r_inf: int) -> ProfileMatrix:
    """R-system at infinity (size r_inf - 3): same recursion, shifted data.

    Rows follow R_{inf,r_inf-4} .. R_{inf,0}; the id-0 slots carry the
    constant shift -(t_{inf,r_inf-3}, ..., t_{inf,1}).
    """
    if r_inf < 4:
        raise ValueError("infinity profile needs r_inf >= 4")
    m = r_inf - 3
    prefix = [Affine.of(0, MonoPoly.const(-1)), Affine()]

    def w_sym(j):
        k = r_inf - j
        return MonoPoly.symbol(k) if 2 <= k <= r_inf - 3 else None

    col_syms = [r_inf - 2 - b for b in range(1, m + 1)]
    rows = _solve_infinity(m, w_sym, col_syms,
                           dl=lambda c: r_inf - 2 - c,
                           dr=lambda b: r_inf - 2 - b,
                           prefix=prefix)
    return ProfileMatrix("inf_R", r_inf, rows, m, col_syms, True)


_finite_cache: dict = {}
_inf_cache: dict = {}


def finite_profile(r: int) -> ProfileMatrix:
    if r not in _finite_cache:
        _finite_cache[r] = solve_profile_finite(r)
    return _finite_cache[r]


def infinity_profiles(r_inf: int):
    if r_inf not in _inf_cache:
        _inf_cache[r_inf] = (solve_profile_infinity(r_inf),
                             solve_profile_infinity_R(r_inf))
    return _inf_cache[r_inf]


def solve_R_profiles(profile: PoleProfile):
    """Profile matrices for the R coordinates: finite poles reuse the
    Q-side matrices verbatim; infinity gets the shifted system."""
    out = {}
    for s, p in enumerate(profile.finite):
        if p.r >= 2:
            out[s] = finite_profile(p.r)
    if profile.r_inf >= 4:
        out[INF] = infinity_profiles(profile.r_inf)[1]
    return out


# ---------------------------------------------------------------------------
# isospectral coordinates
# ---------------------------------------------------------------------------


@dataclass
class IsoCoords:
    u: dict
    v: dict


def _finite_times(chart: TimeChart, s: int, r: int) -> dict:
    return {k: chart.time(s, k) for k in range(1, r)}


def _inf_times(chart: TimeChart, r_inf: int) -> dict:
    return {k: chart.time(INF, k) for k in range(1, r_inf - 2)}


def omega_profile(u: dict, chart: TimeChart, profile: PoleProfile,
                  omega: complex = 1.0) -> complex:
    """Time-dependent normalization for r_inf = 1; the constant otherwise."""
    if profile.r_inf >= 2:
        return omega
    total = sum(u.get((s, 1), 0.0) for s in range(profile.n))
    if abs(total) > 1e-9:
        raise ValueError("isospectral chart requires sum of leading u to vanish")
    acc = 0.0 + 0.0j
    for s, p in enumerate(profile.finite):
        acc += p.x * u.get((s, 1), 0.0)
        if p.r >= 2:
            pm = finite_profile(p.r)
            tvals = _finite_times(chart, s, p.r)
            F = pm.matrix(tvals)
            uvec = np.array([u[(s, p.r - i)] for i in range(p.r - 1)])
            acc += (F @ uvec)[-1]  # the Q_{X_s,2} row
    return acc


def iso_to_lax(iso: IsoCoords, chart: TimeChart, profile: PoleProfile,
               omega: complex = 1.0) -> tuple:
    """Assemble (Q, R) from the time-constant coordinates; returns
    (LaxCoords, omega(t))."""
    om = omega_profile(iso.u, chart, profile, omega)
    Q: dict = {}
    R: dict = {}
    for s, p in enumerate(profile.finite):
        Q[(s, 1)] = complex(iso.u[(s, 1)])
        R[(s, 1)] = complex(iso.v[(s, 1)])
        if p.r >= 2:
            pm = finite_profile(p.r)
            tvals = _finite_times(chart, s, p.r)
            F = pm.matrix(tvals)
            uvec = np.array([iso.u[(s, p.r - i)] for i in range(p.r - 1)])
            vvec = np.array([iso.v[(s, p.r - i)] for i in range(p.r - 1)])
            qv = F @ uvec
            rv = F @ vvec
            for i in range(p.r - 1):
                Q[(s, p.r - i)] = complex(qv[i])
                R[(s, p.r - i)] = complex(rv[i])
    r_inf = profile.r_inf
    if r_inf >= 4:
        pmQ, pmR = infinity_profiles(r_inf)
        tvals = _inf_times(chart, r_inf)
        Q[(INF, r_inf - 4)] = om * complex(iso.u[(INF, r_inf - 4)])
        if r_inf >= 5:
            F = pmQ.matrix(tvals)
            shift = pmQ.shift_vector(tvals)  # the frozen omega-slot column
            uvec = np.array([iso.u[(INF, r_inf - 4 - i)] for i in range(r_inf - 3)])
            vals = shift + F @ uvec
            for i in range(r_inf - 4):
                Q[(INF, r_inf - 5 - i)] = om * complex(vals[i])
        G = pmR.matrix(tvals)
        gshift = pmR.shift_vector(tvals)
        vvec = np.array([iso.v[(INF, r_inf - 4 - i)] for i in range(r_inf - 3)])
        rv = gshift + G @ vvec
        for i in range(r_inf - 3):
            R[(INF, r_inf - 4 - i)] = complex(rv[i])
    return LaxCoords(Q, R), om


def lax_to_iso(lax: LaxCoords, chart: TimeChart, profile: PoleProfile,
               omega: complex = 1.0) -> IsoCoords:
    """Extract the time-constant coordinates from a (Q, R) chart point."""
    u: dict = {}
    v: dict = {}
    for s, p in enumerate(profile.finite):
        u[(s, 1)] = complex(lax.Q[(s, 1)])
        v[(s, 1)] = complex(lax.R[(s, 1)])
        if p.r >= 2:
            pm = finite_profile(p.r)
            F = pm.matrix(_finite_times(chart, s, p.r))
            qv = np.array([lax.Q[(s, p.r - i)] for i in range(p.r - 1)])
            rv = np.array([lax.R[(s, p.r - i)] for i in range(p.r - 1)])
            uu = np.linalg.solve(F, qv)
            vv = np.linalg.solve(F, rv)
            for i in range(p.r - 1):
                u[(s, p.r - i)] = complex(uu[i])
                v[(s, p.r - i)] = complex(vv[i])
    r_inf = profile.r_inf
    if r_inf >= 4:
        pmQ, pmR = infinity_profiles(r_inf)
        tvals = _inf_times(chart, r_inf)
        u[(INF, r_inf - 4)] = complex(lax.Q[(INF, r_inf - 4)] / omega)
        if r_inf >= 5:
            F = pmQ.matrix(tvals)
            shift = pmQ.shift_vector(tvals)
            qv = np.array([lax.Q[(INF, r_inf - 5 - i)] / omega
                           for i in range(r_inf - 4)])
            rest = qv - shift - F[:, 0] * u[(INF, r_inf - 4)]
            uu = np.linalg.solve(F[:, 1:], rest)
            for i in range(r_inf - 4):
                u[(INF, r_inf - 5 - i)] = complex(uu[i])
        G = pmR.matrix(tvals)
        gshift = pmR.shift_vector(tvals)
        rv = np.array([lax.R[(INF, r_inf - 4 - i)] for i in range(r_inf - 3)])
        vv = np.linalg.solve(G, rv - gshift)
        for i in range(r_inf - 3):
            v[(INF, r_inf - 4 - i)] = complex(vv[i])
    return IsoCoords(u, v)


# ---------------------------------------------------------------------------
# residual checks
# ---------------------------------------------------------------------------


def ode_residual(pm: ProfileMatrix, times: dict, h: float = 1e-5,
                 rng: np.random.Generator | None = None) -> float:
    """FD residual of the defining matrix ODE at the supplied times."""
    rng = rng if rng is not None else np.random.default_rng(0)
    m = len(pm.rows)
    if m == 0:
        return 0.0
    consts = rng.standard_normal(pm.n_consts) + 1j * rng.standard_normal(pm.n_consts)

    def coords_at(tv: dict) -> np.ndarray:
        return pm.shift_vector(tv) + pm.matrix(tv) @ consts

    syms = pm.symbols
    delta = np.zeros((m, len(syms)), dtype=complex)
    for b, sym in enumerate(syms):
        tp, tm = dict(times), dict(times)
        tp[sym] = tp[sym] + h
        tm[sym] = tm[sym] - h
        delta[:, b] = (coords_at(tp) - coords_at(tm)) / (2.0 * h)
    vals = coords_at(times)
    if pm.kind == "finite":
        r = pm.order
        M = np.zeros((m, m), dtype=complex)
        T = np.zeros((m, m), dtype=complex)
        for i in range(m):
            for j in range(i + 1):
                M[i, j] = times[r - 1 - (i - j)]
                T[i, j] = vals[i - j]
        DL = np.diag([1.0 / (r - 1 - i) for i in range(m)])
        lhs = M @ DL @ delta
        rhs = T @ DL
    else:
        r_inf = pm.order
        if pm.kind == "inf_Q":
            # column (omega, Q_{r-4}, rows...) in omega units; consts[0] is u_{r-4}
            dl = [1.0 / (r_inf - 3 - (c + 1)) for c in range(m)]
            dr = [1.0 / (r_inf - 2 - (b + 1)) for b in range(m)]
            zcol = np.concatenate([[1.0, consts[0]], vals])[: m]
        else:
            dl = [1.0 / (r_inf - 2 - (c + 1)) for c in range(m)]
            dr = dl
            zcol = np.concatenate([[-1.0, 0.0], vals])[: m]
        W = np.zeros((m, m), dtype=complex)
        Z = np.zeros((m, m), dtype=complex)
        for i in range(m):
            for j in range(i + 1):
                d = i - j + 1
                W[i, j] = 1.0 if d == 1 else (0.0 if d == 2 else times[r_inf - d])
                Z[i, j] = zcol[d - 1]
        lhs = W @ np.diag(dl) @ delta
        rhs = Z @ np.diag(dr)
    scale = 1.0 + float(np.max(np.abs(rhs)))
    return float(np.max(np.abs(lhs - rhs)) / scale)


def isospectral_residual(iso: IsoCoords, alpha: DeformationVector,
                         chart: TimeChart, profile: PoleProfile,
                         omega: complex = 1.0, h: float = 1e-6,
                         n_samples: int = 20,
                         rng: np.random.Generator | None = None,
                         freeze_profiles: bool = False,
                         nu_perturb: float = 0.0,
                         absolute: bool = False) -> float:
    """Max-entry defect of the isospectral condition along direction alpha.

    The coordinates (u, v) are held fixed; times and positions move.  With
    ``freeze_profiles`` the chart is read as (Q, R) = (u, v) directly, the
    negative control with generic (wrong) time dependence; ``nu_perturb``
    shifts every deformation coefficient before the A build (fault hook).
    """
    from . import geogauge, opergauge
    check_deformation(profile, chart, alpha)
    rng = rng if rng is not None else np.random.default_rng(0)

    def lax_at(chart_pt, profile_pt):
        if freeze_profiles:
            return LaxCoords(dict(iso.u), dict(iso.v)), omega
        return iso_to_lax(iso, chart_pt, profile_pt, omega)

    lax0, om0 = lax_at(chart, profile)
    L0 = geogauge.build_geo_L_QR(lax0, chart, profile, om0)
    nu = opergauge.nu_coeffs(alpha, chart, profile, lax0.Q, om0)
    lie_om = -om0 * nu[(INF, -1)] if profile.r_inf == 1 else 0.0
    A = geogauge.build_geo_A(alpha, lax0, chart, profile, om0,
                             lie_om=lie_om, L=L0)
    if nu_perturb:
        nu_bad = {k: v + nu_perturb for k, v in nu.items()}
        A12 = geogauge.build_A12_geo(nu_bad, lax0.Q, profile, om0)
        A11 = geogauge.build_A11_geo_QR(nu_bad, lax0, chart, profile, om0, lie_om)
        A21 = geogauge.build_A21_geo(nu_bad, L0.L11, L0.L12, A11, A12, lax0.Q,
                                     chart, profile, om0, L0.g0, lie_om)
        A = geogauge.GeoDeformation(A11, A12, A21, nu_bad, complex(lie_om))
    prof_p, chart_p = apply_deformation(profile, chart, alpha, h)
    prof_m, chart_m = apply_deformation(profile, chart, alpha, -h)
    lax_p, om_p = lax_at(chart_p, prof_p)
    lax_m, om_m = lax_at(chart_m, prof_m)
    Lp = geogauge.build_geo_L_QR(lax_p, chart_p, prof_p, om_p)
    Lm = geogauge.build_geo_L_QR(lax_m, chart_m, prof_m, om_m)
    lams = opergauge.sample_lambdas(rng, profile.positions, n_samples)
    worst = 0.0
    for lam in lams:
        dL = (Lp.entries(lam) - Lm.entries(lam)) / (2.0 * h)
        dA = np.array([[A.A11.deriv()(lam), A.A12.deriv()(lam)],
                       [A.A21.deriv()(lam), -A.A11.deriv()(lam)]])
        scale = (1.0 if absolute
                 else 1.0 + max(np.max(np.abs(dL)), np.max(np.abs(dA))))
        worst = max(worst, float(np.max(np.abs(dL - dA)) / scale))
    return worst
