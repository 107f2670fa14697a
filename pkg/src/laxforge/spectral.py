"""Determinant calculus, spectral invariants and their Hamiltonian relations.

The eigenvalue branch is expanded as a truncated Laurent series at every
pole by a series square root; its coefficients recover the irregular times
and monodromies and define the spectral invariants beyond them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import opergauge
from .geogauge import GeoLax
from .model import PoleProfile, TimeChart
from .ratcalc import INF, PoleSum, RatcalcError
from .structlin import toeplitz_from_times, toeplitz_solve


class BranchAmbiguityError(RatcalcError):
    pass


def det_geo_L(L: GeoLax) -> PoleSum:
    """Exact rational determinant -L11^2 - L12 L21."""
    return (L.L11 * L.L11 + L.L12 * L.L21).scale(-1.0)


def det_reconstructed(L: GeoLax, H: dict, chart: TimeChart,
                      profile: PoleProfile) -> PoleSum:
    """Projector-form reconstruction of the determinant from H data."""
    from .ratcalc import Poly
    out = opergauge.build_tdP2(chart, profile)
    r_inf = profile.r_inf
    poly = Poly()
    for j in range(0, r_inf - 3):
        poly = poly + Poly.monomial(j, -H[(INF, j)])
    if r_inf >= 3:
        poly = poly + Poly.monomial(r_inf - 3, chart.time(INF, r_inf - 1))
    out = out + PoleSum(poly)
    for s, p in enumerate(profile.finite):
        out = out + PoleSum(parts={p.x: [-H[(s, j)] for j in range(1, p.r + 1)]})
    # gauge-term projections
    n = 2 * max(profile.orders, default=1) + profile.r_inf + 8
    s11 = L.L11.series_at_infinity(n)
    s12 = L.L12.series_at_infinity(n)
    gauge = s12 * (s11 * s12.inverse()).deriv()
    top = max(r_inf - 3, 0)
    coeffs = [gauge.coeff(-k) if gauge.v <= -k <= gauge.top() else 0.0
              for k in range(top + 1)]
    out = out + PoleSum(Poly(coeffs))
    for s, p in enumerate(profile.finite):
        x = p.x
        s11 = L.L11.series_at(x, n)
        s12 = L.L12.series_at(x, n)
        gauge = s12 * (s11 * s12.inverse()).deriv()
        window = gauge.window(-p.r, -1)[::-1]
        out = out + PoleSum(parts={x: window})
    return out


@dataclass
class SpectralInvariants:
    I: dict
    recovered_times: dict

    def recovery_residual(self, chart: TimeChart) -> float:
        worst = 0.0
        for (pole, k), val in self.recovered_times.items():
            ref = chart.time(pole, k)
            worst = max(worst, abs(val - ref) / (1.0 + abs(ref)))
        return worst


def _eigen_series(det: PoleSum, point, lead: complex, nterms: int) -> Series:
    neg = det.scale(-1.0)
    s = (neg.series_at_infinity(nterms) if point == INF
         else neg.series_at(point, nterms))
    s = s.trim_leading()
    if s.c.size == 0 or abs(s.c[0]) < 1e-13:
        raise BranchAmbiguityError("vanishing leading determinant coefficient")
    return s.sqrt(lead=lead)


def spectral_invariants(L: GeoLax, chart: TimeChart,
                        profile: PoleProfile) -> SpectralInvariants:
    """Expansion data of the eigenvalue branch at every pole.

    The branch is fixed so the leading coefficient matches the leading
    irregular time (+ at infinity, - at finite poles); coefficients below
    the time window define the invariants with the k * I_{p,k} scaling.
    """
    det = det_geo_L(L)
    I: dict = {}
    rec: dict = {}
    r_inf = profile.r_inf
    lead = chart.time(INF, r_inf - 1)
    if lead == 0.0:
        raise BranchAmbiguityError("leading time at infinity vanishes")
    lam_plus = _eigen_series(det, INF, lead, 2 * r_inf + 8)
    # order k multiplies lam**-k: t_{inf,j} sits at lam**(j-1), I at lam**(-j-1)
    for j in range(0, r_inf):
        rec[(INF, j)] = lam_plus.coeff(1 - j)
    for j in range(1, r_inf):
        I[(INF, j)] = lam_plus.coeff(j + 1) / j
    for s, p in enumerate(profile.finite):
        lead = -chart.time(s, p.r - 1)
        if lead == 0.0:
            raise BranchAmbiguityError(f"leading time at pole {s} vanishes")
        lam_plus = _eigen_series(det, p.x, lead, 2 * p.r + 8)
        for j in range(0, p.r):
            rec[(s, j)] = -lam_plus.coeff(-(j + 1))
        for j in range(1, p.r):
            I[(s, j)] = -lam_plus.coeff(j - 1) / j
    return SpectralInvariants(I, rec)


def det_window_residuals(L: GeoLax, chart: TimeChart,
                         profile: PoleProfile) -> dict:
    """Coefficient-wise defects of the determinant's time-convolution windows."""
    det = det_geo_L(L)
    p2 = opergauge.tdP2_coeffs(chart, profile)
    out = {}
    r_inf = profile.r_inf
    s_inf = det.series_at_infinity(2 * r_inf + 8)
    if r_inf >= 3:
        for k in range(r_inf - 3, 2 * r_inf - 3):
            ref = p2[(INF, k)]
            out[("inf", k)] = (s_inf.coeff(-k) - ref) / (1.0 + abs(ref))
    elif r_inf == 2:
        t1, t0 = chart.time(INF, 1), chart.t0[INF]
        out[("inf", 0)] = (s_inf.coeff(0) + t1 ** 2) / (1.0 + abs(t1) ** 2)
        out[("inf", -1)] = ((s_inf.coeff(1) + 2.0 * t1 * t0)
                            / (1.0 + 2.0 * abs(t1 * t0)))
    else:
        t0 = chart.t0[INF]
        out[("inf", -1)] = s_inf.coeff(1) / (1.0 + abs(t0) ** 2)
        out[("inf", -2)] = (s_inf.coeff(2) + t0 ** 2) / (1.0 + abs(t0) ** 2)
    for s, p in enumerate(profile.finite):
        ser = det.series_at(p.x, 2 * p.r + 6)
        for k in range(p.r + 1, 2 * p.r + 1):
            ref = p2[(s, k)]
            out[(s, k)] = (ser.coeff(-k) - ref) / (1.0 + abs(ref))
    return {k: complex(v) for k, v in out.items()}


def ham_vs_invariants(L: GeoLax, H: dict, chart: TimeChart,
                      profile: PoleProfile) -> dict:
    """Per-time discrepancy between Hamiltonians and corrected invariants.

    Compares k Ham^{t_{p,k}} against 2 k I_{p,k} plus the Toeplitz-solved
    correction (time convolutions and the gauge-term residues).
    """
    ham = opergauge.hamiltonians_oper(H, chart, profile)
    inv = spectral_invariants(L, chart, profile)
    out = {}
    r_inf = profile.r_inf
    n_ser = 2 * (max(profile.orders, default=1) + r_inf) + 8
    if r_inf >= 4:
        s11 = L.L11.series_at_infinity(n_ser)
        s12 = L.L12.series_at_infinity(n_ser)
        gauge = s12 * (s11 * s12.inverse()).deriv()
        rows = []
        for k in range(r_inf - 4, -1, -1):
            conv = sum(chart.time(INF, k + 2 - j) * chart.time(INF, j)
                       for j in range(0, k + 3))
            res = -gauge.coeff(-k)  # Res at infinity of lam^{-k-1} * gauge
            rows.append(conv - res)
        M = toeplitz_from_times(chart, INF, profile)
        corr = toeplitz_solve(M, np.array(rows))
        for k in range(1, r_inf - 2):
            lhs = k * ham[(INF, k)]
            rhs = 2.0 * k * inv.I[(INF, k)] + corr[k - 1]
            out[(INF, k)] = (lhs - rhs) / (1.0 + abs(lhs))
    for s, p in enumerate(profile.finite):
        if p.r < 2:
            continue
        x = p.x
        s11 = L.L11.series_at(x, n_ser)
        s12 = L.L12.series_at(x, n_ser)
        gauge = s12 * (s11 * s12.inverse()).deriv()
        rows = []
        for k in range(p.r, 1, -1):
            conv = sum(chart.time(s, j) * chart.time(s, k - j - 2)
                       for j in range(0, k - 1))
            rows.append(conv + gauge.coeff(-k))
        M = toeplitz_from_times(chart, s, profile)
        corr = toeplitz_solve(M, np.array(rows))
        for k in range(1, p.r):
            lhs = k * ham[(s, k)]
            rhs = 2.0 * k * inv.I[(s, k)] + corr[k - 1]
            out[(s, k)] = (lhs - rhs) / (1.0 + abs(lhs))
    return {k: complex(v) for k, v in out.items()}
