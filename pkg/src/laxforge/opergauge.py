"""Companion-gauge Lax pair: L from (q, p, t), deformation matrix, Hamiltonians.

Everything dynamical lives in the lower-left entry of the companion matrix;
its pole coefficients H are obtained from a transposed Vandermonde-stack
solve (augmented with the extra linear relations when the chart at infinity
degenerates, r_inf <= 2).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coords import OperCoords, q_to_Q
from .model import (DeformationVector, PoleProfile, TimeChart,
                    apply_deformation, chart_keys, check_deformation, genus)
from .ratcalc import INF, DegenerateConfigurationError, Poly, PoleSum
from .structlin import VandermondeStack, toeplitz_from_times, toeplitz_solve


class InternalConsistencyError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# the quadratic time polynomial
# ---------------------------------------------------------------------------


def tdP2_coeffs(chart: TimeChart, profile: PoleProfile) -> dict:
    """Convolution coefficients of the squared-eigenvalue polynomial.

    Keys (INF, j) for j in [max(0, r_inf-3), 2 r_inf - 4] and (s, j) for
    j in [r_s + 1, 2 r_s].
    """
    out = {}
    r_inf = profile.r_inf
    for k in range(0, r_inf):
        j = 2 * r_inf - 4 - k
        if j < max(0, r_inf - 3):
            continue
        out[(INF, j)] = -sum(chart.time(INF, r_inf - 1 - m)
                             * chart.time(INF, r_inf - 1 - (k - m))
                             for m in range(k + 1))
    for s, p in enumerate(profile.finite):
        r = p.r
        for k in range(0, r):
            j = 2 * r - k
            out[(s, j)] = -sum(chart.time(s, r - 1 - m) * chart.time(s, r - 1 - (k - m))
                               for m in range(k + 1))
    return out


def build_tdP2(chart: TimeChart, profile: PoleProfile) -> PoleSum:
    """The polynomial-plus-principal-parts time function itself."""
    coeffs = tdP2_coeffs(chart, profile)
    poly = Poly()
    for (pole, j), val in coeffs.items():
        if pole == INF:
            poly = poly + Poly.monomial(j, val)
    parts = {}
    for s, p in enumerate(profile.finite):
        arr = np.zeros(2 * p.r, dtype=complex)
        for j in range(p.r + 1, 2 * p.r + 1):
            arr[j - 1] = coeffs[(s, j)]
        parts[p.x] = arr
    return PoleSum(poly, parts)


def t_window_inf(chart: TimeChart, profile: PoleProfile) -> Poly:
    """Polynomial window sum_j (-P2_{inf,j}) lam^j over j in [r_inf-3, 2r_inf-4]."""
    coeffs = tdP2_coeffs(chart, profile)
    poly = Poly()
    for (pole, j), val in coeffs.items():
        if pole == INF and j >= profile.r_inf - 3:
            poly = poly + Poly.monomial(j, -val)
    return poly


def t_window_finite(chart: TimeChart, profile: PoleProfile, s: int) -> PoleSum:
    """Principal window sum_j (-P2_{X_s,j}) (lam-X_s)^-j, j in [r_s+1, 2r_s]."""
    coeffs = tdP2_coeffs(chart, profile)
    p = profile.finite[s]
    arr = np.zeros(2 * p.r, dtype=complex)
    for j in range(p.r + 1, 2 * p.r + 1):
        arr[j - 1] = -coeffs[(s, j)]
    return PoleSum(parts={p.x: arr})


# ---------------------------------------------------------------------------
# the H coefficients and g0
# ---------------------------------------------------------------------------


def g0_oper(oper: OperCoords, chart: TimeChart, profile: PoleProfile,
            H: dict | None = None) -> complex:
    """Normalization constant in the oper chart."""
    shift = sum(oper.q) - sum(p.r * p.x for p in profile.finite)
    r_inf = profile.r_inf
    if r_inf >= 2:
        return chart.time(INF, r_inf - 2) + chart.time(INF, r_inf - 1) * shift
    if H is None:
        raise ValueError("g0 for r_inf = 1 needs the solved H coefficients")
    t0 = chart.t0[INF]
    p2 = tdP2_coeffs(chart, profile)
    acc = 0.0 + 0.0j
    for s, p in enumerate(profile.finite):
        x = p.x
        if p.r == 1:
            acc -= 2.0 * x * p2[(s, 2)]
        if p.r == 2:
            acc -= p2[(s, 3)]
        acc += x * x * H[(s, 1)]
        if p.r >= 2:
            acc += 2.0 * x * H[(s, 2)]
        if p.r >= 3:
            acc += H[(s, 3)]
    acc -= np.sum(oper.p * oper.q ** 2)
    acc += t0 * (2.0 * t0 - 1.0) * shift
    return acc / (2.0 * t0)


def solve_H(oper: OperCoords, chart: TimeChart, profile: PoleProfile):
    """Pole coefficients H of the companion entry, plus g0.

    Solves the transposed Vandermonde-stack system with the interaction
    right-hand side; for r_inf <= 2 the system is augmented with the extra
    linear relations and solved square.
    """
    g = genus(profile)
    q, p = oper.q, oper.p
    if len(q) != g:
        raise ValueError("coordinate count does not match genus")
    if np.min(np.abs(q[:, None] - q[None, :]) + np.eye(g)) < 1e-10:
        raise DegenerateConfigurationError("coincident apparent singularities")
    tdP2 = build_tdP2(chart, profile)
    r_inf = profile.r_inf
    rhs = np.zeros(g, dtype=complex)
    for i in range(g):
        acc = p[i] ** 2 + tdP2(q[i])
        acc += p[i] * sum(pp.r / (q[i] - pp.x) for pp in profile.finite)
        acc += sum((p[j] - p[i]) / (q[i] - q[j]) for j in range(g) if j != i)
        if r_inf >= 3:
            acc += chart.time(INF, r_inf - 1) * q[i] ** (r_inf - 3)
        rhs[i] = acc
    keys = chart_keys(profile)
    stack = VandermondeStack(q, profile)
    A = stack.dense().T  # rows: evaluation at q_i; columns follow chart_keys
    extra_rows = []
    extra_rhs = []
    if r_inf == 2:
        row = np.zeros(len(keys), dtype=complex)
        for s in range(profile.n):
            row[keys.index((s, 1))] = 1.0
        extra_rows.append(row)
        t1, t0 = chart.time(INF, 1), chart.t0[INF]
        extra_rhs.append(np.sum(p) + 2.0 * t1 * t0 - t1)
    elif r_inf == 1:
        row = np.zeros(len(keys), dtype=complex)
        for s in range(profile.n):
            row[keys.index((s, 1))] = 1.0
        extra_rows.append(row)
        extra_rhs.append(np.sum(p))
        row2 = np.zeros(len(keys), dtype=complex)
        const = 0.0 + 0.0j
        for s, pp in enumerate(profile.finite):
            row2[keys.index((s, 1))] = pp.x
            if pp.r >= 2:
                row2[keys.index((s, 2))] = 1.0
            else:
                const += chart.t0[s] ** 2
        extra_rows.append(row2)
        t0 = chart.t0[INF]
        extra_rhs.append(np.sum(q * p) + const + t0 * (t0 - 1.0))
    if extra_rows:
        A = np.vstack([A, np.array(extra_rows)])
        rhs = np.concatenate([rhs, np.array(extra_rhs, dtype=complex)])
    if A.shape[0] != A.shape[1]:
        raise InternalConsistencyError(f"H system is {A.shape}, not square")
    try:
        Hvec = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError as exc:
        raise DegenerateConfigurationError(str(exc)) from exc
    resid = np.max(np.abs(A @ Hvec - rhs)) / (1.0 + np.max(np.abs(rhs)))
    if resid > 1e-8:
        raise InternalConsistencyError(f"augmented H system inconsistent: {resid}")
    H = {key: complex(Hvec[i]) for i, key in enumerate(keys)}
    g0 = g0_oper(oper, chart, profile, H)
    return H, g0


# ---------------------------------------------------------------------------
# the Lax matrix
# ---------------------------------------------------------------------------


@dataclass
class OperLax:
    L21: PoleSum
    L22: PoleSum
    H: dict
    g0: complex
    tdP2: PoleSum

    def entries(self, lam: complex) -> np.ndarray:
        return np.array([[0.0, 1.0], [self.L21(lam), self.L22(lam)]], dtype=complex)


def build_oper_L(oper: OperCoords, chart: TimeChart, profile: PoleProfile,
                 H: dict | None = None, g0: complex | None = None) -> OperLax:
    if H is None or g0 is None:
        H, g0 = solve_H(oper, chart, profile)
    tdP2 = build_tdP2(chart, profile)
    r_inf = profile.r_inf
    L21 = tdP2.scale(-1.0)
    poly = Poly()
    for k in range(0, r_inf - 3):
        poly = poly + Poly.monomial(k, H[(INF, k)])
    if r_inf >= 3:
        poly = poly + Poly.monomial(r_inf - 3, -chart.time(INF, r_inf - 1))
    L21 = L21 + PoleSum(poly)
    for s, p in enumerate(profile.finite):
        arr = np.array([H[(s, k)] for k in range(1, p.r + 1)])
        L21 = L21 + PoleSum(parts={p.x: arr})
    L21 = L21 + PoleSum(parts={qi: [-pi] for qi, pi in zip(oper.q, oper.p)})
    L22 = PoleSum(parts={qi: [1.0] for qi in oper.q})
    L22 = L22 + PoleSum(parts={p.x: [-float(p.r)] for p in profile.finite})
    return OperLax(L21, L22, H, g0, tdP2)


# ---------------------------------------------------------------------------
# deformation coefficients
# ---------------------------------------------------------------------------


def nu_coeffs(alpha: DeformationVector, chart: TimeChart, profile: PoleProfile,
              Q: dict | None = None, omega: complex = 1.0) -> dict:
    """Expansion coefficients of the deformation upper-right entry.

    Always returns the Toeplitz-determined block: (s, k) for k in
    [0, r_s - 1] and (INF, k) for k in [1, r_inf - 3].  With ``Q`` supplied
    the chart-dependent extensions are appended: (INF, r_inf-2) and
    (INF, r_inf-1) for r_inf >= 3, (INF, 0) for r_inf <= 2 and (INF, -1)
    for r_inf = 1.
    """
    check_deformation(profile, chart, alpha)
    at = alpha.time_map()
    ax = alpha.position_map()
    nu: dict = {}
    for s, p in enumerate(profile.finite):
        nu[(s, 0)] = -complex(ax.get(s, 0.0))
        m = p.r - 1
        if m > 0:
            M = toeplitz_from_times(chart, s, profile)
            if M.singular:
                raise DegenerateConfigurationError(f"singular Toeplitz at pole {s}")
            b = np.array([-at.get((s, p.r - 1 - d), 0.0) / (p.r - 1 - d)
                          for d in range(m)], dtype=complex)
            sol = toeplitz_solve(M, b)
            for k in range(1, p.r):
                nu[(s, k)] = complex(sol[k - 1])
    m_inf = profile.r_inf - 3
    if m_inf > 0:
        M = toeplitz_from_times(chart, INF, profile)
        b = np.array([at.get((INF, profile.r_inf - 3 - d), 0.0)
                      / (profile.r_inf - 3 - d) for d in range(m_inf)], dtype=complex)
        sol = toeplitz_solve(M, b)
        for k in range(1, profile.r_inf - 2):
            nu[(INF, k)] = complex(sol[k - 1])
    if Q is not None:
        _extend_nu(nu, chart, profile, Q, omega)
    return nu


def _extend_nu(nu: dict, chart: TimeChart, profile: PoleProfile,
               Q: dict, omega: complex) -> None:
    r_inf = profile.r_inf
    n = profile.n

    def pairing(shift: int) -> complex:
        # sum_s sum_k nu_{X_s, k-shift} Q_{X_s,k}
        acc = 0.0 + 0.0j
        for s, p in enumerate(profile.finite):
            for k in range(shift, p.r + 1):
                acc += nu[(s, k - shift)] * Q.get((s, k), 0.0)
        return acc

    def moment_pairing() -> complex:
        acc = 0.0 + 0.0j
        for s, p in enumerate(profile.finite):
            x = p.x
            for k in range(2, p.r + 1):
                acc += nu[(s, k - 2)] * Q.get((s, k), 0.0)
            for k in range(1, p.r + 1):
                acc += x * nu[(s, k - 1)] * Q.get((s, k), 0.0)
        return acc

    if r_inf >= 3:
        val = pairing(1) - sum(nu[(INF, j)] * Q.get((INF, j - 1), 0.0)
                               for j in range(1, r_inf - 2))
        nu[(INF, r_inf - 2)] = val / omega
        val2 = (moment_pairing()
                - sum(nu[(INF, j)] * Q.get((INF, j - 2), 0.0)
                      for j in range(2, r_inf - 1))
                - (nu[(INF, 1)] if r_inf >= 4 else nu[(INF, r_inf - 2)])
                * sum(Q.get((s, 1), 0.0) for s in range(n)))
        nu[(INF, r_inf - 1)] = val2 / omega
    elif r_inf == 2:
        nu[(INF, 0)] = pairing(1) / omega
    else:
        nu[(INF, -1)] = pairing(1) / omega
        mom = sum(p.x ** 2 * Q.get((s, 1), 0.0) + 2.0 * p.x * Q.get((s, 2), 0.0)
                  + Q.get((s, 3), 0.0) for s, p in enumerate(profile.finite))
        nu[(INF, 0)] = (moment_pairing() - mom * nu[(INF, -1)]) / omega


def lie_omega(alpha: DeformationVector, chart: TimeChart, profile: PoleProfile,
              Q: dict, omega: complex) -> complex:
    """Deformation of the normalization constant: zero unless r_inf = 1."""
    if profile.r_inf >= 2:
        return 0.0 + 0.0j
    nu = nu_coeffs(alpha, chart, profile, Q, omega)
    return -omega * nu[(INF, -1)]


@dataclass
class OperDeformation:
    A11: PoleSum
    A12: PoleSum
    A21: PoleSum
    A22: PoleSum
    nu: dict
    mu: np.ndarray
    c_inf0: complex

    def entries(self, lam: complex) -> np.ndarray:
        return np.array([[self.A11(lam), self.A12(lam)],
                         [self.A21(lam), self.A22(lam)]], dtype=complex)


def solve_mu(alpha: DeformationVector, oper: OperCoords, chart: TimeChart,
             profile: PoleProfile, nu: dict | None = None):
    """Residues of the deformation entry at the apparent singularities.

    For r_inf <= 2 the linear-in-lambda coefficients of that entry join the
    unknown vector, which keeps the stacked system square; they are returned
    as the second element ((nu_{inf,0}, nu_{inf,-1}) or subsets).
    """
    if nu is None:
        nu = nu_coeffs(alpha, chart, profile)
    g = genus(profile)
    q = oper.q
    r_inf = profile.r_inf
    stack = VandermondeStack(q, profile)
    A = stack.dense()
    rhs = []
    for i in range(max(r_inf - 3, 0)):
        rhs.append(nu[(INF, i + 1)])
    for s, p in enumerate(profile.finite):
        for k in range(1, p.r + 1):
            rhs.append(-nu.get((s, k - 1), 0.0))
    rhs = np.array(rhs, dtype=complex)
    n_extra = {1: 2, 2: 1}.get(r_inf, 0)
    if n_extra:
        # columns for nu_{inf,0} (and nu_{inf,-1} when r_inf = 1)
        cols = np.zeros((A.shape[0], n_extra), dtype=complex)
        row = 0
        for s, p in enumerate(profile.finite):
            for k in range(1, p.r + 1):
                if k == 1:
                    cols[row, 0] = -1.0
                    if r_inf == 1:
                        cols[row, 1] = -p.x
                if k == 2 and r_inf == 1:
                    cols[row, 1] = -1.0
                row += 1
        A = np.hstack([A, cols])
    if A.shape[0] != A.shape[1]:
        raise InternalConsistencyError(f"mu system is {A.shape}, not square")
    sol = np.linalg.solve(A, rhs)
    mu = sol[:g]
    extras = {}
    if n_extra >= 1:
        extras[(INF, 0)] = complex(sol[g])
    if n_extra == 2:
        extras[(INF, -1)] = complex(sol[g + 1])
    return mu, extras


def build_oper_A(alpha: DeformationVector, oper: OperCoords, chart: TimeChart,
                 profile: PoleProfile, omega: complex = 1.0,
                 L: OperLax | None = None) -> OperDeformation:
    """Deformation companion of the oper Lax matrix.

    The lower row is forced by the upper one through the first line of the
    compatibility equation, so only nu and mu are actually solved for.
    """
    check_deformation(profile, chart, alpha)
    if L is None:
        L = build_oper_L(oper, chart, profile)
    nu = nu_coeffs(alpha, chart, profile)
    mu, extras = solve_mu(alpha, oper, chart, profile, nu)
    nu.update(extras)
    r_inf = profile.r_inf
    Q = q_to_Q(oper.q, profile, omega)
    lom = lie_omega(alpha, chart, profile, Q, omega)
    c_inf0 = lom / (2.0 * omega)
    if r_inf == 1:
        c_inf0 += 0.5 * nu[(INF, -1)]
    A12 = PoleSum(parts={qi: [mi] for qi, mi in zip(oper.q, mu)})
    if r_inf <= 2:
        A12 = A12 + PoleSum(Poly([nu[(INF, 0)]]))
    if r_inf == 1:
        A12 = A12 + PoleSum(Poly([0.0, nu[(INF, -1)]]))
    A11 = PoleSum(Poly([c_inf0]))
    A11 = A11 + PoleSum(parts={qi: [-pi * mi]
                               for qi, pi, mi in zip(oper.q, oper.p, mu)})
    A21 = A11.deriv() + A12 * L.L21
    A22 = A12.deriv() + A11 + A12 * L.L22
    return OperDeformation(A11, A12, A21, A22, nu, mu, c_inf0)


# ---------------------------------------------------------------------------
# Hamiltonians and the compatibility check
# ---------------------------------------------------------------------------


def hamiltonians_oper(H: dict, chart: TimeChart, profile: PoleProfile) -> dict:
    """Hamiltonians per deformation direction from the solved H coefficients.

    Keys: (pole, k) for irregular-time flows, ("pos", s) for position flows.
    """
    out = {}
    r_inf = profile.r_inf
    if r_inf >= 4:
        M = toeplitz_from_times(chart, INF, profile)
        b = np.array([H[(INF, r_inf - 4 - d)] for d in range(r_inf - 3)])
        vec = toeplitz_solve(M, b)
        for k in range(1, r_inf - 2):
            out[(INF, k)] = complex(vec[k - 1] / k)
    for s, p in enumerate(profile.finite):
        if p.r >= 2:
            M = toeplitz_from_times(chart, s, profile)
            b = np.array([H[(s, p.r - d)] for d in range(p.r - 1)])
            vec = toeplitz_solve(M, b)
            for k in range(1, p.r):
                out[(s, k)] = complex(vec[k - 1] / k)
        out[("pos", s)] = complex(H[(s, 1)])
    return out


def hamiltonian_for(alpha: DeformationVector, H: dict, chart: TimeChart,
                    profile: PoleProfile) -> complex:
    ham = hamiltonians_oper(H, chart, profile)
    acc = 0.0 + 0.0j
    for key, val in alpha.times:
        acc += val * ham[key]
    for s, val in alpha.positions:
        acc += val * ham[("pos", s)]
    return acc


def _ham_value(z: np.ndarray, alpha, chart, profile) -> complex:
    g = z.size // 2
    oper = OperCoords(z[:g], z[g:])
    H, _ = solve_H(oper, chart, profile)
    return hamiltonian_for(alpha, H, chart, profile)


def hamilton_gradient(oper: OperCoords, alpha: DeformationVector,
                      chart: TimeChart, profile: PoleProfile,
                      h: float = 1e-6):
    """(dHam/dq, dHam/dp) by central differences of the Hamiltonian map."""
    z0 = np.concatenate([oper.q, oper.p])
    g = oper.q.size
    grad = np.zeros(2 * g, dtype=complex)
    for i in range(2 * g):
        step = h * max(1.0, abs(z0[i]))
        zp, zm = z0.copy(), z0.copy()
        zp[i] += step
        zm[i] -= step
        grad[i] = (_ham_value(zp, alpha, chart, profile)
                   - _ham_value(zm, alpha, chart, profile)) / (2.0 * step)
    return grad[:g], grad[g:]


def evolve_qp(oper: OperCoords, alpha: DeformationVector, chart: TimeChart,
              profile: PoleProfile, h: complex, grad=None) -> OperCoords:
    """One first-order Hamilton step of size h along the alpha flow."""
    if grad is None:
        grad = hamilton_gradient(oper, alpha, chart, profile)
    dq, dp = grad
    return OperCoords(oper.q + h * dp, oper.p - h * dq)


def sample_lambdas(rng: np.random.Generator, exclude, n: int = 20,
                   radius_factor: float = 2.0) -> np.ndarray:
    """Sample points on a circle enclosing all supplied special points."""
    exclude = np.asarray(list(exclude), dtype=complex)
    radius = radius_factor * ((np.max(np.abs(exclude)) if exclude.size else 0.0) + 1.0)
    out = []
    while len(out) < n:
        lam = radius * np.exp(1j * rng.uniform(-np.pi, np.pi))
        if exclude.size == 0 or np.min(np.abs(lam - exclude)) > 1e-3:
            out.append(lam)
    return np.array(out)


def compatibility_residual(alpha: DeformationVector, oper: OperCoords,
                           chart: TimeChart, profile: PoleProfile,
                           h: float = 1e-6, n_samples: int = 20,
                           rng: np.random.Generator | None = None,
                           h_inject: complex = 0.0,
                           absolute: bool = False) -> float:
    """Max-norm defect of the zero-curvature equation under a total FD flow.

    Times/positions move by h*alpha while (q, p) take one Hamilton step; the
    result compares the flow derivative of L against the A-side.  A nonzero
    ``h_inject`` perturbs every H coefficient before building L (negative
    control for the harness).
    """
    check_deformation(profile, chart, alpha)
    if alpha.is_zero():
        return 0.0
    rng = rng if rng is not None else np.random.default_rng(0)

    def build(oper_pt, chart_pt, profile_pt):
        H, g0 = solve_H(oper_pt, chart_pt, profile_pt)
        if h_inject != 0.0:
            H = {k: v + h_inject for k, v in H.items()}
        return build_oper_L(oper_pt, chart_pt, profile_pt, H, g0)

    L0 = build(oper, chart, profile)
    A = build_oper_A(alpha, oper, chart, profile, L=L0)
    grad = hamilton_gradient(oper, alpha, chart, profile)
    prof_p, chart_p = apply_deformation(profile, chart, alpha, h)
    prof_m, chart_m = apply_deformation(profile, chart, alpha, -h)
    Lp = build(evolve_qp(oper, alpha, chart, profile, h, grad), chart_p, prof_p)
    Lm = build(evolve_qp(oper, alpha, chart, profile, -h, grad), chart_m, prof_m)
    special = list(profile.positions) + list(oper.q)
    lams = sample_lambdas(rng, special, n_samples,
                          radius_factor=1.2 if absolute else 2.0)
    worst = 0.0
    for lam in lams:
        dL = (Lp.entries(lam) - Lm.entries(lam)) / (2.0 * h)
        Lmat = L0.entries(lam)
        Amat = A.entries(lam)
        dA = np.array([[A.A11.deriv()(lam), A.A12.deriv()(lam)],
                       [A.A21.deriv()(lam), A.A22.deriv()(lam)]])
        resid = dL - dA + Lmat @ Amat - Amat @ Lmat
        if absolute:
            worst = max(worst, float(np.max(np.abs(resid))))
            continue
        scale = 1.0 + max(np.max(np.abs(dL)), np.max(np.abs(dA)),
                          np.max(np.abs(Lmat @ Amat)))
        worst = max(worst, float(np.max(np.abs(resid)) / scale))
    return worst
