"""Problem setup: pole profiles, time charts, normalization and bookkeeping.

Pole bookkeeping conventions used across the package:

* finite poles are addressed by their index ``s`` (0-based) in the profile,
  the pole at infinity by the string ``"inf"`` (:data:`laxforge.ratcalc.INF`);
* irregular times are keyed ``(pole, k)`` with ``k >= 1``; monodromies are
  the ``k = 0`` coefficients and are stored separately;
* chart coordinates (Q, P, R, u, v) are keyed ``(s, k)`` with
  ``k = 1..r_s`` at finite poles and ``("inf", k)`` with
  ``k = 0..r_inf-4`` at infinity.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .ratcalc import INF

PoleKey = object  # int for finite poles, INF for infinity


class UnsupportedProfileError(ValueError):
    pass


class NormalizationConflictError(ValueError):
    pass


@dataclass(frozen=True)
class FinitePole:
    x: complex
    r: int


@dataclass(frozen=True)
class PoleProfile:
    """The set of poles with orders; fixes the genus and chart shapes."""

    finite: tuple[FinitePole, ...]
    r_inf: int

    def __post_init__(self):
        if self.r_inf < 1 or any(p.r < 1 for p in self.finite):
            raise UnsupportedProfileError("pole orders must be positive")
        xs = [p.x for p in self.finite]
        for i in range(len(xs)):
            for j in range(i + 1, len(xs)):
                if xs[i] == xs[j]:
                    raise UnsupportedProfileError("finite poles must be distinct")

    @property
    def n(self) -> int:
        return len(self.finite)

    @property
    def positions(self) -> np.ndarray:
        return np.array([p.x for p in self.finite], dtype=complex)

    @property
    def orders(self) -> tuple[int, ...]:
        return tuple(p.r for p in self.finite)

    def with_positions(self, xs: Mapping[int, complex]) -> "PoleProfile":
        new = tuple(FinitePole(xs.get(s, p.x), p.r) for s, p in enumerate(self.finite))
        return PoleProfile(new, self.r_inf)

    def total_order(self) -> int:
        return self.r_inf + sum(self.orders)


def genus(profile: PoleProfile) -> int:
    """g = r_inf - 3 + sum(r_s); the dimension of each Darboux chart."""
    g = profile.r_inf - 3 + sum(profile.orders)
    if g < 1:
        raise UnsupportedProfileError(f"profile has genus {g} < 1")
    return g


def dimension_report(profile: PoleProfile) -> dict:
    """Arithmetic bookkeeping of the ambient connection space.

    The ambient space has dimension ``4r - 7`` with ``r`` the total pole
    order; since ``g = r - 3`` this reads ``4g + 5``.  The number of
    admissible deformation directions (unfrozen irregular times plus free
    pole positions) always equals ``g``.
    """
    r = profile.total_order()
    g = genus(profile)
    dim = 4 * r - 7
    chart = normalize(profile, TimeChart.empty(profile))
    n_dirs = len(deformation_directions(profile, chart))
    report = {
        "r": r,
        "genus": g,
        "dim_ambient": dim,
        "n_deformation_directions": n_dirs,
        "n_monodromies": profile.n + 1,
        "identity_g": g == r - 3,
        "identity_dim": dim == 4 * g + 5,
        "identity_directions": n_dirs == g,
    }
    return report


# ---------------------------------------------------------------------------
# time charts
# ---------------------------------------------------------------------------


@dataclass
class TimeChart:
    """Irregular times t[(pole, k)] (k>=1), monodromies t0[pole], frozen data."""

    t: dict
    t0: dict
    frozen_times: frozenset = frozenset()
    frozen_positions: frozenset = frozenset()

    @staticmethod
    def empty(profile: PoleProfile) -> "TimeChart":
        t = {}
        for k in range(1, profile.r_inf):
            t[(INF, k)] = 0.0 + 0.0j
        for s, p in enumerate(profile.finite):
            for k in range(1, p.r):
                t[(s, k)] = 0.0 + 0.0j
        t0 = {INF: 0.0 + 0.0j}
        for s in range(profile.n):
            t0[s] = 0.0 + 0.0j
        return TimeChart(t, t0)

    def copy(self) -> "TimeChart":
        return TimeChart(dict(self.t), dict(self.t0),
                         self.frozen_times, self.frozen_positions)

    def time(self, pole: PoleKey, k: int) -> complex:
        """t_{p,k} with the k = 0 monodromy convention folded in."""
        if k == 0:
            return complex(self.t0[pole])
        return complex(self.t.get((pole, k), 0.0))


def _frozen_values(profile: PoleProfile):
    """Case split of the trivial-time normalization.

    Returns (frozen time assignments, frozen position assignments).
    """
    r_inf, n = profile.r_inf, profile.n
    ftimes: dict = {}
    fpos: dict = {}
    if r_inf >= 3:
        ftimes[(INF, r_inf - 1)] = 1.0 + 0.0j
        ftimes[(INF, r_inf - 2)] = 0.0 + 0.0j
    elif r_inf == 2:
        ftimes[(INF, 1)] = 1.0 + 0.0j
        fpos[0] = 0.0 + 0.0j
    elif n >= 2:  # r_inf == 1
        fpos[0] = 0.0 + 0.0j
        fpos[1] = 1.0 + 0.0j
    else:  # r_inf == 1, single finite pole
        fpos[0] = 0.0 + 0.0j
        r1 = profile.finite[0].r
        if r1 < 2:
            raise UnsupportedProfileError("r_inf = 1 with a single simple pole is trivial")
        ftimes[(0, r1 - 1)] = 1.0 + 0.0j
    return ftimes, fpos


def normalize(profile: PoleProfile, raw: TimeChart) -> TimeChart:
    """Enforce the case-dependent frozen times; idempotent.

    Raises :class:`NormalizationConflictError` when the raw chart carries a
    different value on a frozen slot (zero-initialised slots are overwritten
    silently so partially-specified charts normalize cleanly).
    """
    ftimes, fpos = _frozen_values(profile)
    chart = raw.copy()
    for key, val in ftimes.items():
        cur = chart.t.get(key)
        if cur is not None and cur != 0.0 and cur != val:
            raise NormalizationConflictError(f"time {key} must equal {val}, got {cur}")
        chart.t[key] = val
    for s, val in fpos.items():
        if profile.finite[s].x != val:
            raise NormalizationConflictError(
                f"pole {s} must sit at {val} for this case (got {profile.finite[s].x})")
    chart.frozen_times = frozenset(ftimes)
    chart.frozen_positions = frozenset(fpos)
    return chart


def check_leading_times(profile: PoleProfile, chart: TimeChart) -> None:
    """t_{X_s, r_s-1} != 0 is required wherever a Toeplitz solve appears."""
    for s, p in enumerate(profile.finite):
        if p.r >= 2 and chart.time(s, p.r - 1) == 0.0:
            raise UnsupportedProfileError(f"leading time at pole {s} vanishes")


# ---------------------------------------------------------------------------
# deformation directions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DeformationVector:
    """Coefficients of a deformation: irregular times and position shifts.

    ``times[(pole, k)]`` pairs with d/dt_{p,k}; ``positions[s]`` with d/dX_s.
    """

    times: tuple = ()
    positions: tuple = ()

    @staticmethod
    def from_dicts(times: Mapping | None = None,
                   positions: Mapping | None = None) -> "DeformationVector":
        return DeformationVector(tuple(sorted((times or {}).items(), key=repr)),
                                 tuple(sorted((positions or {}).items())))

    def time_map(self) -> dict:
        return dict(self.times)

    def position_map(self) -> dict:
        return dict(self.positions)

    def is_zero(self) -> bool:
        return (all(v == 0 for _, v in self.times)
                and all(v == 0 for _, v in self.positions))


def deformation_directions(profile: PoleProfile, chart: TimeChart) -> list:
    """Unit deformation vectors along every unfrozen time and position."""
    out = []
    for k in range(1, profile.r_inf):
        key = (INF, k)
        if key not in chart.frozen_times:
            out.append(DeformationVector.from_dicts({key: 1.0}))
    for s, p in enumerate(profile.finite):
        for k in range(1, p.r):
            key = (s, k)
            if key not in chart.frozen_times:
                out.append(DeformationVector.from_dicts({key: 1.0}))
    for s in range(profile.n):
        if s not in chart.frozen_positions:
            out.append(DeformationVector.from_dicts(positions={s: 1.0}))
    return out


def check_deformation(profile: PoleProfile, chart: TimeChart,
                      alpha: DeformationVector) -> None:
    """Reject deformations supported on frozen times or positions."""
    for key, val in alpha.times:
        if val != 0 and key in chart.frozen_times:
            raise ValueError(f"deformation along frozen time {key}")
        pole, k = key
        if pole == INF and not 1 <= k <= profile.r_inf - 1:
            raise ValueError(f"no irregular time {key} in this profile")
        if pole != INF and not 1 <= k <= profile.finite[pole].r - 1:
            raise ValueError(f"no irregular time {key} in this profile")
    for s, val in alpha.positions:
        if val != 0 and s in chart.frozen_positions:
            raise ValueError(f"deformation along frozen position X_{s}")


def apply_deformation(profile: PoleProfile, chart: TimeChart,
                      alpha: DeformationVector, h: complex):
    """Shift times and positions by ``h * alpha``; returns (profile, chart)."""
    new_chart = chart.copy()
    for key, val in alpha.times:
        new_chart.t[key] = new_chart.t.get(key, 0.0) + h * val
    moved = {s: profile.finite[s].x + h * val for s, val in alpha.positions if val != 0}
    return profile.with_positions(moved), new_chart


# ---------------------------------------------------------------------------
# chart constraint validation
# ---------------------------------------------------------------------------


def validate_chart_constraints(coords, profile: PoleProfile, omega: complex,
                               chart: TimeChart | None = None) -> dict:
    """Residuals of the redundancy constraints of a coordinate bundle.

    ``coords`` is any object with ``Q`` plus either ``P`` or ``R`` mappings
    over the standard chart keys.  r_inf >= 3 charts carry no constraints.
    """
    out: dict = {}
    r_inf = profile.r_inf
    Q = coords.Q
    P = getattr(coords, "P", None)
    R = getattr(coords, "R", None)
    xs = profile.positions

    def q(s, k):
        return Q.get((s, k), 0.0)

    if r_inf == 2:
        out["sum_Q1_minus_omega"] = sum(q(s, 1) for s in range(profile.n)) - omega
        if P is not None:
            out["bilinear_PQ"] = sum(P[(s, k)] * q(s, k)
                                     for s in range(profile.n)
                                     for k in range(1, profile.finite[s].r + 1))
        if R is not None and chart is not None:
            out["sum_R1_plus_t_inf0"] = (sum(R[(s, 1)] for s in range(profile.n))
                                         + chart.t0[INF])
    elif r_inf == 1:
        out["sum_Q1"] = sum(q(s, 1) for s in range(profile.n))
        out["moment_Q_minus_omega"] = (sum(xs[s] * q(s, 1) + q(s, 2)
                                           for s in range(profile.n)) - omega)
        if P is not None:
            out["bilinear_PQ"] = sum(P[(s, k)] * q(s, k)
                                     for s in range(profile.n)
                                     for k in range(1, profile.finite[s].r + 1))
            out["bilinear_PQ_moment"] = (
                sum(P[(s, k)] * q(s, k + 1)
                    for s in range(profile.n)
                    for k in range(1, profile.finite[s].r))
                + sum(xs[s] * P[(s, k)] * q(s, k)
                      for s in range(profile.n)
                      for k in range(1, profile.finite[s].r + 1)))
        if R is not None and chart is not None:
            out["sum_R1_plus_t_inf0"] = (sum(R[(s, 1)] for s in range(profile.n))
                                         + chart.t0[INF])
    return {k: complex(v) for k, v in out.items()}


# ---------------------------------------------------------------------------
# chart key layout helpers
# ---------------------------------------------------------------------------


def chart_keys(profile: PoleProfile) -> list:
    """Canonical ordering of (Q, P/R) coordinate keys for vectorization."""
    keys = [(INF, k) for k in range(0, profile.r_inf - 3)]
    for s, p in enumerate(profile.finite):
        keys.extend((s, k) for k in range(1, p.r + 1))
    return keys


def constraint_count(profile: PoleProfile) -> int:
    return {1: 2, 2: 1}.get(profile.r_inf, 0)


# ---------------------------------------------------------------------------
# random instances and the JSON descriptor
# ---------------------------------------------------------------------------


def random_chart(profile: PoleProfile, rng: np.random.Generator) -> TimeChart:
    """Normalized chart with free times on the annulus 0.5 <= |t| <= 2.

    Leading finite-pole times are redrawn until Re t > 0.25 so fractional
    powers of them stay away from the branch cut.
    """
    def draw():
        rad = rng.uniform(0.5, 2.0)
        ang = rng.uniform(-np.pi, np.pi)
        return rad * np.exp(1j * ang)

    chart = normalize(profile, TimeChart.empty(profile))
    for key in list(chart.t):
        if key not in chart.frozen_times:
            chart.t[key] = draw()
    for s, p in enumerate(profile.finite):
        if p.r >= 2 and (s, p.r - 1) not in chart.frozen_times:
            while chart.t[(s, p.r - 1)].real <= 0.25:
                chart.t[(s, p.r - 1)] = draw()
    for pole in chart.t0:
        chart.t0[pole] = draw()
    return normalize(profile, chart)


def random_profile(r_inf: int, orders, rng: np.random.Generator,
                   separation: float = 0.5) -> PoleProfile:
    """Positions in a small disk, pairwise separation enforced, frozen slots fixed."""
    n = len(orders)
    xs: list[complex] = []
    fixed = {}
    if r_inf == 2 and n >= 1:
        fixed[0] = 0.0 + 0.0j
    if r_inf == 1:
        fixed[0] = 0.0 + 0.0j
        if n >= 2:
            fixed[1] = 1.0 + 0.0j
    for s in range(n):
        if s in fixed:
            xs.append(fixed[s])
            continue
        for _ in range(100):
            cand = complex(rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2))
            if all(abs(cand - x) >= separation for x in xs):
                xs.append(cand)
                break
        else:
            raise RuntimeError("failed to place separated pole positions")
    return PoleProfile(tuple(FinitePole(x, int(r)) for x, r in zip(xs, orders)), r_inf)


def load_problem(text: str):
    """Parse the JSON problem descriptor; returns (profile, chart, seed).

    Schema: ``{"r_inf": int, "poles": [{"x": [re, im], "r": int}],
    "times": {"inf": {"1": [re, im], ...}, "0": {...}},
    "monodromies": {"inf": [re, im], "0": [...]}, "seed": int}``.
    """
    doc = json.loads(text)
    poles = tuple(FinitePole(complex(p["x"][0], p["x"][1]), int(p["r"]))
                  for p in doc.get("poles", []))
    profile = PoleProfile(poles, int(doc["r_inf"]))
    chart = TimeChart.empty(profile)
    for pole_label, entries in doc.get("times", {}).items():
        pole = INF if pole_label == "inf" else int(pole_label)
        for k, val in entries.items():
            chart.t[(pole, int(k))] = complex(val[0], val[1])
    for pole_label, val in doc.get("monodromies", {}).items():
        pole = INF if pole_label == "inf" else int(pole_label)
        chart.t0[pole] = complex(val[0], val[1])
    return profile, normalize(profile, chart), int(doc.get("seed", 0))
