import numpy as np
import pytest

from laxforge import opergauge, spectral
from laxforge.coords import qp_to_geo
from laxforge.geogauge import GeoLax, build_geo_L_QP
from laxforge.model import FinitePole, PoleProfile, TimeChart, normalize
from laxforge.ratcalc import INF, Poly, PoleSum
from laxforge.spectral import (BranchAmbiguityError, det_geo_L,
                               det_reconstructed, det_window_residuals,
                               ham_vs_invariants, spectral_invariants)
from conftest import ALL_CASES, instance


def setup(case, seed=1):
    inst = instance(case, seed)
    geo = qp_to_geo(inst.oper, inst.omega, inst.profile)
    Lt = build_geo_L_QP(geo, inst.chart, inst.profile, inst.omega)
    return inst, Lt


class TestDeterminant:
    @pytest.mark.parametrize("case", ALL_CASES, ids=str)
    def test_two_forms_agree(self, case):
        inst, Lt = setup(case)
        H, _ = opergauge.solve_H(inst.oper, inst.chart, inst.profile)
        d1 = det_geo_L(Lt)
        d2 = det_reconstructed(Lt, H, inst.chart, inst.profile)
        rng = np.random.default_rng(3)
        for lam in opergauge.sample_lambdas(rng, inst.profile.positions, 10):
            assert abs(d1(lam) - d2(lam)) < 1e-9 * (1 + abs(d1(lam)))

    def test_leading_coefficient_at_infinity(self):
        inst, Lt = setup((5, ()))
        det = det_geo_L(Lt)
        s = det.series_at_infinity(3)
        t = inst.chart.time(INF, 4)
        assert abs(s.coeff(-(2 * 5 - 4)) + t ** 2) < 1e-10

    def test_leading_coefficient_at_finite_pole(self):
        inst, Lt = setup((3, (2,)))
        det = det_geo_L(Lt)
        s = det.series_at(inst.profile.finite[0].x, 2)
        t = inst.chart.time(0, 1)
        assert abs(s.coeff(-4) + t ** 2) < 1e-10 * (1 + abs(t) ** 2)

    @pytest.mark.parametrize("case", ALL_CASES, ids=str)
    def test_windows(self, case):
        inst, Lt = setup(case)
        res = det_window_residuals(Lt, inst.chart, inst.profile)
        assert max(abs(v) for v in res.values()) < 1e-9

    def test_oper_interaction_term_drops_out(self):
        # the sum over apparent singularities contributes to no pole window
        inst, Lt = setup((3, (1, 1)))
        det = det_geo_L(Lt)
        extra = PoleSum(parts={qi: [pi] for qi, pi
                               in zip(inst.oper.q, inst.oper.p)})
        for s, p in enumerate(inst.profile.finite):
            w1 = det.series_at(p.x, 2).window(-p.r, -1)
            w2 = (det + extra).series_at(p.x, 2).window(-p.r, -1)
            assert np.allclose(w1, w2)


class TestInvariants:
    @pytest.mark.parametrize("case", ALL_CASES, ids=str)
    def test_time_recovery(self, case):
        inst, Lt = setup(case)
        inv = spectral_invariants(Lt, inst.chart, inst.profile)
        assert inv.recovery_residual(inst.chart) < 1e-8

    @pytest.mark.parametrize("case", ALL_CASES, ids=str)
    def test_square_is_minus_det(self, case):
        inst, Lt = setup(case)
        det = det_geo_L(Lt)
        r_inf = inst.profile.r_inf
        lam_plus = spectral._eigen_series(det, INF,
                                          inst.chart.time(INF, r_inf - 1),
                                          2 * r_inf + 8)
        sq = lam_plus * lam_plus
        sdet = det.series_at_infinity(2 * r_inf + 8)
        for k in range(sq.v, min(sq.top(), r_inf) + 1):
            ref = -sdet.coeff(k)
            assert abs(sq.coeff(k) - ref) < 1e-9 * (1 + abs(ref))

    def test_synthetic_perfect_square_has_zero_invariants(self):
        # -det = f^2 with f carrying only the time profile: no invariants
        profile = PoleProfile((), 4)
        chart = normalize(profile, TimeChart.empty(profile))
        chart.t[(INF, 1)] = 0.6 - 0.2j
        chart.t0[INF] = 1.1 + 0.4j
        f = PoleSum(Poly([chart.t[(INF, 1)], 0.0, 1.0]),
                    {})  # t3 lam^2 + t2 lam + t1 with frozen t3=1, t2=0
        f = f + PoleSum(parts={0.0 + 0j: [chart.t0[INF]]})
        L = GeoLax(f.scale(-1.0), PoleSum(), PoleSum(), 0.0)
        inv = spectral_invariants(L, chart, profile)
        assert inv.recovery_residual(chart) < 1e-12
        assert max(abs(v) for v in inv.I.values()) < 1e-12

    def test_branch_ambiguity_detected(self):
        profile = PoleProfile((FinitePole(0.0, 1),), 4)
        chart = normalize(profile, TimeChart.empty(profile))
        chart.t0[0] = 0.0  # vanishing leading coefficient at the simple pole
        inst, _ = setup((4, ()))
        L = GeoLax(PoleSum(Poly([0.0, 0.0, -1.0])), PoleSum(Poly([1.0])),
                   PoleSum(), 0.0)
        with pytest.raises(BranchAmbiguityError):
            spectral_invariants(L, chart, profile)


class TestHamInvariants:
    @pytest.mark.parametrize("case", ALL_CASES, ids=str)
    def test_relation(self, case):
        inst, Lt = setup(case)
        H, _ = opergauge.solve_H(inst.oper, inst.chart, inst.profile)
        rel = ham_vs_invariants(Lt, H, inst.chart, inst.profile)
        if rel:
            assert max(abs(v) for v in rel.values()) < 1e-8

    def test_zero_momentum_degenerate_instance(self):
        inst = instance((4, ()))
        from laxforge.coords import OperCoords
        oper0 = OperCoords(inst.oper.q, np.zeros_like(inst.oper.p))
        geo = qp_to_geo(oper0, inst.omega, inst.profile)
        Lt = build_geo_L_QP(geo, inst.chart, inst.profile, inst.omega)
        H, _ = opergauge.solve_H(oper0, inst.chart, inst.profile)
        rel = ham_vs_invariants(Lt, H, inst.chart, inst.profile)
        assert max(abs(v) for v in rel.values()) < 1e-8
