from fractions import Fraction

import numpy as np
import pytest

from laxforge import isospectral as iso
from laxforge import model
from laxforge.harness import iso_instance
from laxforge.isospectral import (IsoCoords, MonoPoly, finite_profile,
                                  infinity_profiles, iso_to_lax, lax_to_iso,
                                  ode_residual, omega_profile,
                                  isospectral_residual)
from laxforge.model import DeformationVector, deformation_directions
from laxforge.ratcalc import INF


def tsym(k, e=1):
    return MonoPoly.symbol(k, Fraction(e))


class TestClosedForms:
    @pytest.mark.parametrize("r", [2, 3, 4, 5])
    def test_diagonal_fractional_powers(self, r):
        pm = finite_profile(r)
        for a in range(1, r):
            expect = MonoPoly.symbol(r - 1, Fraction(r - a, r - 1))
            assert pm.rows[a - 1].get(a, MonoPoly()) == expect

    @pytest.mark.parametrize("r", [2, 3, 4, 5])
    def test_first_column_is_plain_times(self, r):
        pm = finite_profile(r)
        for a in range(1, r):
            assert pm.rows[a - 1].get(1, MonoPoly()) == tsym(r - a)

    @pytest.mark.parametrize("r", [3, 4, 5])
    def test_first_subdiagonal(self, r):
        pm = finite_profile(r)
        for j in range(1, r - 1):
            got = pm.rows[j].get(j, MonoPoly())
            expect = (MonoPoly.symbol(r - 1, Fraction(1 - j, r - 1))
                      * tsym(r - 2)).scale(Fraction(r - j - 1, r - 2))
            assert got == expect

    def test_double_pole_is_pure_rescaling(self):
        pm = finite_profile(2)
        assert len(pm.rows) == 1
        assert pm.rows[0].get(1) == tsym(1)  # Q_{X,2} = t_{X,1} u_{X,2}

    def test_worked_value_square_root(self):
        pm = finite_profile(3)
        val = pm.rows[1].get(2).evaluate({2: 9.0, 1: 0.0})
        assert abs(val - 3.0) < 1e-12

    def test_order_four_third_row_first_column(self):
        pm = finite_profile(4)  # f_{3,1} = t_{X,1}
        assert pm.rows[2].get(1) == tsym(1)

    @pytest.mark.parametrize("r_inf", [5, 6, 7])
    def test_infinity_Q_band(self, r_inf):
        pmQ, _ = infinity_profiles(r_inf)
        for k in range(1, r_inf - 3):
            cid = 0 if k == 1 else k - 1
            got = pmQ.rows[k - 1].get(cid, MonoPoly())
            expect = tsym(r_inf - 3).scale(Fraction(r_inf - 3 - k, r_inf - 3))
            assert got == expect

    def test_r7_spot_values(self):
        pmQ, pmR = infinity_profiles(7)
        got = pmQ.rows[0].get(0)  # f_{3,1} = (3/4) t_{inf,4}
        assert got == tsym(4).scale(Fraction(3, 4))
        got = pmR.rows[2].get(1)  # g_{3,1} = (2/4) t_{inf,4}
        assert got == tsym(4).scale(Fraction(2, 4))

    @pytest.mark.parametrize("r_inf", [4, 5, 6])
    def test_R_shift_vector(self, r_inf):
        _, pmR = infinity_profiles(r_inf)
        for a in range(1, r_inf - 2):
            assert pmR.rows[a - 1].get(0, MonoPoly()) == tsym(
                r_inf - 2 - a).scale(-1)

    def test_finite_R_reuses_Q_matrices(self):
        profile = model.PoleProfile((model.FinitePole(0.1, 3),), 4)
        out = iso.solve_R_profiles(profile)
        assert out[0] is finite_profile(3)  # literally the same object


class TestODE:
    @pytest.mark.parametrize("r", [2, 3, 4])
    def test_finite_system(self, r, rng):
        pm = finite_profile(r)
        times = {k: complex(rng.uniform(0.4, 1.5), rng.uniform(-0.6, 0.6))
                 for k in range(1, r)}
        assert ode_residual(pm, times, rng=rng) < 1e-6

    @pytest.mark.parametrize("r_inf", [4, 5, 6])
    def test_infinity_systems(self, r_inf, rng):
        pmQ, pmR = infinity_profiles(r_inf)
        times = {k: complex(rng.uniform(0.4, 1.5), rng.uniform(-0.6, 0.6))
                 for k in range(1, r_inf - 2)}
        if pmQ.rows:
            assert ode_residual(pmQ, times, rng=rng) < 1e-6
        assert ode_residual(pmR, times, rng=rng) < 1e-6

    def test_double_pole_linear_solution_exact(self, rng):
        pm = finite_profile(2)
        times = {1: 0.9 + 0.2j}
        assert ode_residual(pm, times, rng=rng) < 1e-10


class TestIsoChart:
    def test_R_at_zero_v_is_minus_times(self):
        inst, ic = iso_instance((5, ()), 3)
        zero = IsoCoords(dict(ic.u), {k: 0.0 for k in ic.v})
        lax, _ = iso_to_lax(zero, inst.chart, inst.profile, inst.omega)
        for k in range(0, 4 - 2):
            assert abs(lax.R[(INF, k)] + inst.chart.time(INF, k + 1)) < 1e-12

    def test_round_trip(self):
        for case in [(5, (1, 2)), (3, (2,)), (1, (2, 2))]:
            inst, ic = iso_instance(case, 2)
            lax, om = iso_to_lax(ic, inst.chart, inst.profile, inst.omega)
            back = lax_to_iso(lax, inst.chart, inst.profile, om)
            assert max(abs(back.u[k] - ic.u[k]) for k in ic.u) < 1e-10
            assert max(abs(back.v[k] - ic.v[k]) for k in ic.v) < 1e-10

    def test_time_constancy_along_flow(self):
        inst, ic = iso_instance((3, (2,)), 4)
        alpha = deformation_directions(inst.profile, inst.chart)[0]
        prof2, chart2 = model.apply_deformation(inst.profile, inst.chart,
                                                alpha, 1e-3)
        lax2, om2 = iso_to_lax(ic, chart2, prof2, inst.omega)
        back = lax_to_iso(lax2, chart2, prof2, om2)
        assert max(abs(back.u[k] - ic.u[k]) for k in ic.u) < 1e-12

    def test_leading_coordinates_time_constant(self):
        inst, ic = iso_instance((2, (1, 2)), 5)
        lax, _ = iso_to_lax(ic, inst.chart, inst.profile, inst.omega)
        assert lax.Q[(0, 1)] == ic.u[(0, 1)]
        assert lax.R[(1, 1)] == ic.v[(1, 1)]


class TestOmega:
    def test_constant_for_high_order(self):
        inst, ic = iso_instance((3, (2,)), 1)
        assert omega_profile(ic.u, inst.chart, inst.profile, 2.5) == 2.5

    def test_two_pole_formula(self):
        inst, ic = iso_instance((1, (2, 2)), 1)
        chart, profile = inst.chart, inst.profile
        om = omega_profile(ic.u, chart, profile)
        x1, x2 = profile.positions
        expect = (x1 * ic.u[(0, 1)] + x2 * ic.u[(1, 1)]
                  + chart.time(0, 1) * ic.u[(0, 2)]
                  + chart.time(1, 1) * ic.u[(1, 2)])
        assert abs(om - expect) < 1e-12

    def test_constraint_violation_rejected(self):
        inst, ic = iso_instance((1, (2, 2)), 1)
        bad = dict(ic.u)
        bad[(0, 1)] = bad[(0, 1)] + 1.0
        with pytest.raises(ValueError):
            omega_profile(bad, inst.chart, inst.profile)

    def test_omega_flow_matches_nu(self):
        from laxforge import opergauge
        inst, ic = iso_instance((1, (2, 2)), 6)
        chart, profile = inst.chart, inst.profile
        alpha = deformation_directions(profile, chart)[0]
        lax, om = iso_to_lax(ic, chart, profile, inst.omega)
        nu = opergauge.nu_coeffs(alpha, chart, profile, lax.Q, om)
        h = 1e-6
        pp, cp = model.apply_deformation(profile, chart, alpha, h)
        pm, cm = model.apply_deformation(profile, chart, alpha, -h)
        fd = (omega_profile(ic.u, cp, pp) - omega_profile(ic.u, cm, pm)) / (2 * h)
        assert abs(fd - (-om * nu[(INF, -1)])) < 1e-6 * (1 + abs(fd))


class TestIsoCondition:
    def test_zero_direction(self):
        inst, ic = iso_instance((3, (2,)), 1)
        res = isospectral_residual(ic, DeformationVector(), inst.chart,
                                   inst.profile, inst.omega)
        assert res == 0.0

    @pytest.mark.parametrize("case", [(3, (2,)), (2, (2,)), (1, (3,))], ids=str)
    def test_condition_holds(self, case):
        inst, ic = iso_instance(case, 2)
        rng = np.random.default_rng(9)
        for alpha in deformation_directions(inst.profile, inst.chart):
            res = isospectral_residual(ic, alpha, inst.chart, inst.profile,
                                       inst.omega, rng=rng)
            assert res < 1e-5

    def test_negative_control(self):
        inst, ic = iso_instance((3, (2,)), 2)
        alpha = deformation_directions(inst.profile, inst.chart)[0]
        res = isospectral_residual(ic, alpha, inst.chart, inst.profile,
                                   inst.omega, freeze_profiles=True)
        assert res > 1e-2
