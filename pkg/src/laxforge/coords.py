"""Darboux charts and transition maps.

Charts: oper-gauge (q, p), geometric (Q, P), geometric Lax (Q, R).  The
(q, p) <-> (Q, P) map is symplectic and time independent; (Q, P) <-> (Q, R)
is time independent but not symplectic.  Root labelling of q is fixed by
sorting on (Re, Im) after every inversion so round trips compare.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import PoleProfile, TimeChart, chart_keys, genus
from .ratcalc import (INF, DegenerateConfigurationError, Poly, PoleSum,
                      RationalFunction, partial_fractions)


@dataclass
class OperCoords:
    q: np.ndarray
    p: np.ndarray

    def copy(self) -> "OperCoords":
        return OperCoords(self.q.copy(), self.p.copy())


@dataclass
class GeoCoords:
    Q: dict
    P: dict


@dataclass
class LaxCoords:
    Q: dict
    R: dict


def canonical_order(q: np.ndarray, p: np.ndarray | None = None):
    """Sort apparent singularities by (Re, Im), re-indexing momenta alongside."""
    idx = np.lexsort((q.imag, q.real))
    if p is None:
        return q[idx]
    return q[idx], p[idx]


# ---------------------------------------------------------------------------
# building blocks shared with the gauge modules
# ---------------------------------------------------------------------------


def L12_pole_sum(Q: dict, profile: PoleProfile, omega: complex) -> PoleSum:
    """The upper-right geometric entry as a pole sum."""
    poly = Poly()
    if profile.r_inf >= 3:
        poly = Poly.monomial(profile.r_inf - 3, omega)
    for k in range(0, profile.r_inf - 3):
        poly = poly + Poly.monomial(k, Q.get((INF, k), 0.0))
    parts = {}
    for s, pole in enumerate(profile.finite):
        parts[pole.x] = [Q.get((s, k), 0.0) for k in range(1, pole.r + 1)]
    return PoleSum(poly, parts)


def gauge_numerator(Q: dict, profile: PoleProfile, omega: complex) -> Poly:
    """Numerator polynomial of L12 over prod (lam - X_s)^{r_s}; degree g."""
    xs = profile.positions
    orders = profile.orders
    full = Poly.one()
    for x, r in zip(xs, orders):
        full = full * Poly.from_roots([x] * r)
    num = Poly()
    ppart = Poly()
    if profile.r_inf >= 3:
        ppart = Poly.monomial(profile.r_inf - 3, omega)
    for k in range(0, profile.r_inf - 3):
        ppart = ppart + Poly.monomial(k, Q.get((INF, k), 0.0))
    num = ppart * full
    for s, (x, r) in enumerate(zip(xs, orders)):
        others = Poly.one()
        for t, (xt, rt) in enumerate(zip(xs, orders)):
            if t != s:
                others = others * Poly.from_roots([xt] * rt)
        for k in range(1, r + 1):
            num = num + others * Poly.from_roots([x] * (r - k)) * Q.get((s, k), 0.0)
    return num


# ---------------------------------------------------------------------------
# (q,p) -> (Q,P)
# ---------------------------------------------------------------------------


def q_to_Q(q: np.ndarray, profile: PoleProfile, omega: complex) -> dict:
    """Partial-fraction coefficients of omega prod(lam-q_j) / prod(lam-X_s)^{r_s}."""
    num = Poly.from_roots(list(q), omega)
    den = Poly.one()
    for x, r in zip(profile.positions, profile.orders):
        den = den * Poly.from_roots([x] * r)
    pf = partial_fractions(RationalFunction(num, den), profile)
    Q = {}
    for key, val in pf.items():
        pole, k = key
        if pole == INF:
            if k <= profile.r_inf - 4:
                Q[(INF, k)] = val
            # the top coefficient is the frozen omega slot; not a coordinate
        else:
            Q[key] = val
    return Q


def jacobian_dQ_dq(oper: OperCoords, omega: complex, profile: PoleProfile,
                   Q: dict | None = None) -> np.ndarray:
    """Closed-form d Q_{p,k} / d q_i; rows follow chart_keys ordering."""
    if Q is None:
        Q = q_to_Q(oper.q, profile, omega)
    keys = chart_keys(profile)
    g = len(oper.q)
    J = np.zeros((len(keys), g), dtype=complex)
    r_inf = profile.r_inf
    for row, key in enumerate(keys):
        pole, k = key
        for i, qi in enumerate(oper.q):
            if pole == INF:
                if k == r_inf - 4:
                    J[row, i] = -omega
                else:
                    acc = -omega * qi ** (r_inf - 4 - k)
                    for j in range(k + 1, r_inf - 3):
                        acc -= Q.get((INF, j), 0.0) * qi ** (j - 1 - k)
                    J[row, i] = acc
            else:
                x = profile.finite[pole].x
                r = profile.finite[pole].r
                acc = 0.0 + 0.0j
                for j in range(k, r + 1):
                    acc += (qi - x) ** (k - j - 1) * Q.get((pole, j), 0.0)
                J[row, i] = acc
    return J


def _constraint_rows(Q: dict, profile: PoleProfile):
    """Rows of the bilinear P-constraints, as coefficient maps over chart keys."""
    keys = chart_keys(profile)
    idx = {key: i for i, key in enumerate(keys)}
    rows = []
    if profile.r_inf == 2:
        row = np.zeros(len(keys), dtype=complex)
        for s, p in enumerate(profile.finite):
            for m in range(1, p.r + 1):
                row[idx[(s, m)]] = Q.get((s, m), 0.0)
        rows.append(row)
    elif profile.r_inf == 1:
        row = np.zeros(len(keys), dtype=complex)
        for s, p in enumerate(profile.finite):
            for m in range(1, p.r + 1):
                row[idx[(s, m)]] = Q.get((s, m), 0.0)
        rows.append(row)
        row2 = np.zeros(len(keys), dtype=complex)
        for s, p in enumerate(profile.finite):
            x = p.x
            for m in range(1, p.r + 1):
                row2[idx[(s, m)]] = x * Q.get((s, m), 0.0)
                if m <= p.r - 1:
                    row2[idx[(s, m)]] += Q.get((s, m + 1), 0.0)
        rows.append(row2)
    return rows


def qp_to_geo(oper: OperCoords, omega: complex, profile: PoleProfile) -> GeoCoords:
    """Transfer (q, p) to the geometric chart.

    Q is the polar form of the gauge function; P solves the linear system
    p_i = sum P dQ/dq_i, padded with the bilinear constraints whenever the
    chart carries redundant coordinates (r_inf <= 2).
    """
    g = genus(profile)
    if len(oper.q) != g:
        raise ValueError("coordinate count does not match profile genus")
    if np.min(np.abs(oper.q[:, None] - oper.q[None, :])
              + np.eye(g)) < 1e-10:
        raise DegenerateConfigurationError("coincident apparent singularities")
    Q = q_to_Q(oper.q, profile, omega)
    J = jacobian_dQ_dq(oper, omega, profile, Q)
    rows = _constraint_rows(Q, profile)
    A = J.T if not rows else np.vstack([J.T, np.array(rows)])
    b = np.concatenate([oper.p, np.zeros(len(rows), dtype=complex)])
    if A.shape[0] != A.shape[1]:
        raise ValueError("malformed constrained chart")
    try:
        Pvec = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:
        raise DegenerateConfigurationError(str(exc)) from exc
    keys = chart_keys(profile)
    P = {key: complex(Pvec[i]) for i, key in enumerate(keys)}
    Qfull = {key: complex(Q.get(key, 0.0)) for key in keys}
    return GeoCoords(Qfull, P)


def geo_to_qp(geo: GeoCoords, omega: complex, profile: PoleProfile) -> OperCoords:
    """Invert the geometric chart: q as roots of the gauge numerator, then p."""
    g = genus(profile)
    num = gauge_numerator(geo.Q, profile, omega).chop(1e-11)
    if num.degree() != g:
        raise DegenerateConfigurationError(
            f"gauge numerator degree {num.degree()} != genus {g}")
    q = num.roots()
    dnum = num.deriv()
    for _ in range(2):  # Newton polish
        q = np.array([qi - num(qi) / dnum(qi) for qi in q])
    if np.min(np.abs(q[:, None] - q[None, :]) + np.eye(g)) < 1e-8:
        raise DegenerateConfigurationError("multiple roots in gauge numerator")
    q = canonical_order(q)
    oper = OperCoords(q, np.zeros(g, dtype=complex))
    J = jacobian_dQ_dq(oper, omega, profile, geo.Q)
    keys = chart_keys(profile)
    Pvec = np.array([geo.P[key] for key in keys])
    p = J.T @ Pvec
    return OperCoords(q, p)


# ---------------------------------------------------------------------------
# (Q,P) <-> (Q,R)
# ---------------------------------------------------------------------------


def g0_from_Q(Q: dict, chart: TimeChart, profile: PoleProfile,
              omega: complex) -> complex:
    """Normalization constant from the Q data (valid for r_inf >= 2)."""
    r_inf = profile.r_inf
    n = profile.n
    if r_inf >= 4:
        return (chart.time(INF, r_inf - 2)
                - chart.time(INF, r_inf - 1) / omega * Q.get((INF, r_inf - 4), 0.0))
    if r_inf == 3:
        return (chart.time(INF, 1)
                - chart.time(INF, 2) / omega * sum(Q.get((s, 1), 0.0) for s in range(n)))
    if r_inf == 2:
        acc = sum(Q.get((s, 2), 0.0) + profile.finite[s].x * Q.get((s, 1), 0.0)
                  for s in range(n))
        return chart.t0[INF] - chart.time(INF, 1) / omega * acc
    raise ValueError("g0 for r_inf = 1 requires the residue or R-chart formula")


def g0_from_QR(lax: LaxCoords, chart: TimeChart, profile: PoleProfile,
               omega: complex) -> complex:
    """Normalization constant; for r_inf = 1 the R-linear expression."""
    if profile.r_inf >= 2:
        return g0_from_Q(lax.Q, chart, profile, omega)
    acc = 0.0 + 0.0j
    mom = 0.0 + 0.0j
    for s, p in enumerate(profile.finite):
        x = p.x
        acc += x * lax.R.get((s, 1), 0.0)
        if p.r >= 2:
            acc += lax.R.get((s, 2), 0.0)
        mom += (x * x * lax.Q.get((s, 1), 0.0) + 2.0 * x * lax.Q.get((s, 2), 0.0)
                + lax.Q.get((s, 3), 0.0))
    return -acc - chart.t0[INF] / omega * mom


def _toeplitz(first_col: np.ndarray) -> np.ndarray:
    m = first_col.size
    T = np.zeros((m, m), dtype=complex)
    for i in range(m):
        T[i:, i] = first_col[: m - i]
    return T


def _lax_blocks(Q: dict, chart: TimeChart, profile: PoleProfile,
                omega: complex, g0: complex):
    """Per-pole (T, shift) data of the affine maps P-vector -> R-vector.

    Finite pole s (vectors ordered R_{s,r}..R_{s,1} and P_{s,1}..P_{s,r}):
    ``R = T_s P - shift_s``.  Infinity (R_{inf,r-4}..R_{inf,0} against
    P_{inf,0}..P_{inf,r-4}): ``R = -T_inf P - shift_inf``.

    For r_inf = 1 the leading coefficient at infinity is the monodromy
    t_{inf,0}, which chart.time already folds in at k = 0.
    """
    t_top = chart.time(INF, profile.r_inf - 1)
    blocks = {}
    for s, p in enumerate(profile.finite):
        x, r = p.x, p.r
        qcol = np.array([Q.get((s, r - d), 0.0) for d in range(r)])
        qcol2 = np.array([0.0] + [Q.get((s, r + 1 - d), 0.0) for d in range(1, r)])
        T = _toeplitz(qcol)
        shift = (g0 + t_top * x) / omega * qcol + t_top / omega * qcol2
        blocks[s] = (T, shift)
    if profile.r_inf >= 4:
        m = profile.r_inf - 3
        col = np.array([omega] + [Q.get((INF, profile.r_inf - 3 - d), 0.0)
                                  for d in range(1, m)])
        qcol = np.array([Q.get((INF, profile.r_inf - 4 - i), 0.0) for i in range(m)])
        qcol2 = np.array([Q.get((INF, profile.r_inf - 5 - i), 0.0)
                          for i in range(m - 1)]
                         + [sum(Q.get((s, 1), 0.0) for s in range(profile.n))])
        T = _toeplitz(col)
        shift = g0 / omega * qcol + t_top / omega * qcol2
        blocks[INF] = (T, shift)
    return blocks


def geo_to_lax(geo: GeoCoords, omega: complex, g0: complex,
               chart: TimeChart, profile: PoleProfile) -> LaxCoords:
    """R coordinates from (Q, P): the polar data of the diagonal Lax entry."""
    blocks = _lax_blocks(geo.Q, chart, profile, omega, g0)
    R: dict = {}
    for s, p in enumerate(profile.finite):
        T, shift = blocks[s]
        pvec = np.array([geo.P[(s, m)] for m in range(1, p.r + 1)])
        rvec = T @ pvec - shift
        for i in range(p.r):
            R[(s, p.r - i)] = complex(rvec[i])
    if profile.r_inf >= 4:
        m = profile.r_inf - 3
        T, shift = blocks[INF]
        pvec = np.array([geo.P[(INF, k)] for k in range(m)])
        rvec = -T @ pvec - shift
        for i in range(m):
            R[(INF, profile.r_inf - 4 - i)] = complex(rvec[i])
    return LaxCoords(dict(geo.Q), R)


def lax_to_geo(lax: LaxCoords, omega: complex, g0: complex,
               chart: TimeChart, profile: PoleProfile) -> GeoCoords:
    """Invert geo_to_lax by the displayed triangular solves."""
    if omega == 0.0:
        raise ValueError("omega must be nonzero")
    for s, p in enumerate(profile.finite):
        if lax.Q.get((s, p.r), 0.0) == 0.0:
            raise DegenerateConfigurationError(f"leading Q at pole {s} vanishes")
    blocks = _lax_blocks(lax.Q, chart, profile, omega, g0)
    P: dict = {}
    for s, p in enumerate(profile.finite):
        T, shift = blocks[s]
        rvec = np.array([lax.R[(s, p.r - i)] for i in range(p.r)])
        pvec = np.linalg.solve(T, rvec + shift)
        for m in range(1, p.r + 1):
            P[(s, m)] = complex(pvec[m - 1])
    if profile.r_inf >= 4:
        m = profile.r_inf - 3
        T, shift = blocks[INF]
        rvec = np.array([lax.R[(INF, profile.r_inf - 4 - i)] for i in range(m)])
        pvec = np.linalg.solve(T, -(rvec + shift))
        for k in range(m):
            P[(INF, k)] = complex(pvec[k])
    return GeoCoords(dict(lax.Q), P)


# ---------------------------------------------------------------------------
# symplectic defect
# ---------------------------------------------------------------------------


def standard_form(g: int) -> np.ndarray:
    omega = np.zeros((2 * g, 2 * g), dtype=complex)
    omega[:g, g:] = np.eye(g)
    omega[g:, :g] = -np.eye(g)
    return omega


def fd_jacobian(fn, z0: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian of a holomorphic map C^n -> C^m."""
    z0 = np.asarray(z0, dtype=complex)
    cols = []
    for i in range(z0.size):
        step = h * max(1.0, abs(z0[i]))
        zp, zm = z0.copy(), z0.copy()
        zp[i] += step
        zm[i] -= step
        cols.append((np.asarray(fn(zp)) - np.asarray(fn(zm))) / (2.0 * step))
    return np.array(cols).T


def symplectic_defect(transform, z0: np.ndarray, h: float = 1e-6) -> float:
    """|J^T W J - w| for a chart map packing (positions, momenta) blocks.

    ``transform`` maps a 2g vector to a 2m vector (m >= g when the target
    chart carries redundant constrained coordinates); both are measured
    against their standard forms.
    """
    z0 = np.asarray(z0, dtype=complex)
    g = z0.size // 2
    J = fd_jacobian(transform, z0, h)
    m = J.shape[0] // 2
    defect = J.T @ standard_form(m) @ J - standard_form(g)
    return float(np.max(np.abs(defect)))


# -- packing helpers ---------------------------------------------------------


def pack_qp(oper: OperCoords) -> np.ndarray:
    return np.concatenate([oper.q, oper.p])


def unpack_qp(z: np.ndarray) -> OperCoords:
    g = z.size // 2
    return OperCoords(z[:g].copy(), z[g:].copy())


def pack_chart(profile: PoleProfile, first: dict, second: dict) -> np.ndarray:
    keys = chart_keys(profile)
    return np.array([first[k] for k in keys] + [second[k] for k in keys])


def unpack_chart(profile: PoleProfile, z: np.ndarray):
    keys = chart_keys(profile)
    m = len(keys)
    first = {k: complex(z[i]) for i, k in enumerate(keys)}
    second = {k: complex(z[m + i]) for i, k in enumerate(keys)}
    return first, second
