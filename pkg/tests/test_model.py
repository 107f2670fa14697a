import json

import pytest

from laxforge import model
from laxforge.model import (DeformationVector, FinitePole,
                            NormalizationConflictError, PoleProfile,
                            TimeChart, UnsupportedProfileError, chart_keys,
                            deformation_directions, dimension_report, genus,
                            load_problem, normalize)
from laxforge.ratcalc import INF
from conftest import ALL_CASES, instance


class TestGenus:
    @pytest.mark.parametrize("r_inf,orders,expected",
                             [(3, (2,), 2), (4, (), 1), (1, (3,), 1)])
    def test_formula(self, r_inf, orders, expected):
        prof = PoleProfile(tuple(FinitePole(float(i), r)
                                 for i, r in enumerate(orders)), r_inf)
        assert genus(prof) == expected

    def test_trivial_profile_rejected(self):
        with pytest.raises(UnsupportedProfileError):
            genus(PoleProfile((), 3))


class TestNormalize:
    def test_rinf5_freezes_top_times(self):
        prof = PoleProfile((), 5)
        chart = normalize(prof, TimeChart.empty(prof))
        assert chart.t[(INF, 4)] == 1.0 and chart.t[(INF, 3)] == 0.0
        assert (INF, 4) in chart.frozen_times and (INF, 3) in chart.frozen_times
        free = {k for k in chart.t if k not in chart.frozen_times}
        assert free == {(INF, 1), (INF, 2)}

    def test_rinf1_single_pole(self):
        prof = PoleProfile((FinitePole(0.0, 3),), 1)
        chart = normalize(prof, TimeChart.empty(prof))
        assert chart.t[(0, 2)] == 1.0
        assert 0 in chart.frozen_positions

    def test_idempotent(self):
        prof = PoleProfile((FinitePole(0.0, 2), FinitePole(1.3, 1)), 2)
        chart = normalize(prof, TimeChart.empty(prof))
        again = normalize(prof, chart)
        assert again.t == chart.t and again.frozen_times == chart.frozen_times

    def test_conflicting_value_rejected(self):
        prof = PoleProfile((), 5)
        chart = TimeChart.empty(prof)
        chart.t[(INF, 4)] = 2.0
        with pytest.raises(NormalizationConflictError):
            normalize(prof, chart)

    def test_misplaced_pole_rejected(self):
        prof = PoleProfile((FinitePole(0.5, 2),), 2)
        with pytest.raises(NormalizationConflictError):
            normalize(prof, TimeChart.empty(prof))


class TestBookkeeping:
    @pytest.mark.parametrize("case", ALL_CASES, ids=str)
    def test_dimension_identities(self, case):
        inst = instance(case)
        rep = dimension_report(inst.profile)
        assert rep["identity_g"] and rep["identity_dim"]
        assert rep["identity_directions"]
        assert rep["dim_ambient"] == 4 * rep["r"] - 7

    @pytest.mark.parametrize("case", ALL_CASES, ids=str)
    def test_chart_counts(self, case):
        inst = instance(case)
        g = genus(inst.profile)
        keys = chart_keys(inst.profile)
        extra = {1: 2, 2: 1}.get(inst.profile.r_inf, 0)
        assert len(keys) == g + extra
        assert model.constraint_count(inst.profile) == extra

    def test_directions_exclude_frozen(self):
        inst = instance((1, (3,)))
        dirs = deformation_directions(inst.profile, inst.chart)
        keys = [dict(a.times) for a in dirs]
        assert all((0, 2) not in k for k in keys)
        assert all(not a.position_map() for a in dirs)


class TestConstraints:
    def test_rinf3_no_constraints(self):
        inst = instance((3, (2,)))
        from laxforge.coords import qp_to_geo
        geo = qp_to_geo(inst.oper, inst.omega, inst.profile)
        viol = model.validate_chart_constraints(geo, inst.profile, inst.omega,
                                                inst.chart)
        assert viol == {}

    def test_rinf2_zero_momentum(self):
        inst = instance((2, (2,)))
        from laxforge.coords import GeoCoords, qp_to_geo
        geo = qp_to_geo(inst.oper, inst.omega, inst.profile)
        zeroP = GeoCoords(geo.Q, {k: 0.0 for k in geo.P})
        viol = model.validate_chart_constraints(zeroP, inst.profile, inst.omega)
        assert abs(viol["sum_Q1_minus_omega"]) < 1e-12
        assert abs(viol["bilinear_PQ"]) < 1e-12

    def test_rinf2_detects_violation(self):
        inst = instance((2, (2,)))
        from laxforge.coords import GeoCoords, qp_to_geo
        geo = qp_to_geo(inst.oper, inst.omega, inst.profile)
        geo.Q[(0, 1)] += 1.0
        viol = model.validate_chart_constraints(geo, inst.profile, inst.omega)
        assert abs(abs(viol["sum_Q1_minus_omega"]) - 1.0) < 1e-12


class TestDeformationGuards:
    def test_frozen_time_rejected(self):
        inst = instance((4, ()))
        alpha = DeformationVector.from_dicts({(INF, 3): 1.0})
        with pytest.raises(ValueError):
            model.check_deformation(inst.profile, inst.chart, alpha)

    def test_frozen_position_rejected(self):
        inst = instance((2, (2,)))
        alpha = DeformationVector.from_dicts(positions={0: 1.0})
        with pytest.raises(ValueError):
            model.check_deformation(inst.profile, inst.chart, alpha)

    def test_out_of_range_time_rejected(self):
        inst = instance((3, (2,)))
        alpha = DeformationVector.from_dicts({(0, 5): 1.0})
        with pytest.raises(ValueError):
            model.check_deformation(inst.profile, inst.chart, alpha)

    def test_apply_deformation_moves_data(self):
        inst = instance((3, (2,)))
        alpha = DeformationVector.from_dicts({(0, 1): 2.0}, {0: 1.0})
        prof2, chart2 = model.apply_deformation(inst.profile, inst.chart,
                                                alpha, 0.5)
        assert prof2.finite[0].x == inst.profile.finite[0].x + 0.5
        assert chart2.t[(0, 1)] == inst.chart.t[(0, 1)] + 1.0


class TestDescriptor:
    def test_round_trip(self):
        doc = {"r_inf": 3,
               "poles": [{"x": [0.2, -0.1], "r": 2}],
               "times": {"inf": {"2": [1.0, 0.0]}, "0": {"1": [0.7, 0.3]}},
               "monodromies": {"inf": [0.5, 0.0], "0": [0.1, -0.2]},
               "seed": 7}
        profile, chart, seed = load_problem(json.dumps(doc))
        assert profile.r_inf == 3 and profile.finite[0].r == 2
        assert chart.t[(0, 1)] == complex(0.7, 0.3)
        assert chart.t0[INF] == 0.5
        assert seed == 7
        assert chart.t[(INF, 2)] == 1.0  # frozen slot enforced

    def test_random_chart_respects_leading_time_guard(self, rng):
        prof = model.random_profile(3, (3,), rng)
        chart = model.random_chart(prof, rng)
        assert chart.t[(0, 2)].real > 0.25
        model.check_leading_times(prof, chart)
