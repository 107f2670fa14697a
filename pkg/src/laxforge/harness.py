"""Suite orchestration: seeded instances, checks, tolerances, reports.

Every check returns a scale-aware residual compared against its tolerance;
reports are deterministic given (config, seed) apart from wall times.
"""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import coords, geogauge, isospectral, model, opergauge, spectral
from .coords import OperCoords
from .ratcalc import INF

ALL_SUITES = ("gauge", "symplectic", "hamiltonian-equivalence",
              "compatibility", "spectral", "isospectral", "ode")

DEFAULT_CASES = ((4, ()), (3, (2,)), (2, (2,)), (1, (3,)), (5, (1, 2)))

DEFAULT_TOL = {
    "gauge": 1e-8,
    "gauge-qr": 1e-8,
    "symplectic": 1e-6,
    "non-symplectic-witness": 1e-3,   # lower bound
    "hamiltonian-equivalence": 1e-8,
    "compatibility": 1e-5,
    "fault-floor": 1e-4,              # lower bound under injection
    "det-windows": 1e-9,
    "time-recovery": 1e-8,
    "ham-invariants": 1e-8,
    "isospectral": 1e-5,
    "iso-negative-floor": 1e-2,       # lower bound
    "montreal": 1e-6,
    "ode": 1e-6,
}


class ConfigError(ValueError):
    pass


@dataclass
class SuiteConfig:
    cases: tuple = DEFAULT_CASES
    instances_per_case: int = 10
    seed: int = 0
    tol: dict = field(default_factory=dict)
    suites: tuple = ALL_SUITES
    fault_inject: str | None = None
    threads: int | None = None

    def tolerances(self) -> dict:
        out = dict(DEFAULT_TOL)
        out.update(self.tol)
        return out

    @staticmethod
    def from_json(doc: dict) -> "SuiteConfig":
        cases = tuple((int(c[0]), tuple(int(r) for r in c[1]))
                      for c in doc.get("cases", DEFAULT_CASES))
        return SuiteConfig(
            cases=cases,
            instances_per_case=int(doc.get("instances_per_case", 10)),
            seed=int(doc.get("seed", 0)),
            tol={str(k): float(v) for k, v in doc.get("tol", {}).items()},
            suites=tuple(doc.get("suites", ALL_SUITES)),
            fault_inject=doc.get("fault_inject"),
        )


@dataclass
class CheckRecord:
    suite: str
    case: str
    seed: int
    name: str
    residual: float
    tol: float
    passed: bool
    lower_bound: bool = False
    wall_time: float = 0.0

    def row(self) -> dict:
        return {"suite": self.suite, "case": self.case, "seed": self.seed,
                "name": self.name, "residual": self.residual, "tol": self.tol,
                "passed": self.passed, "lower_bound": self.lower_bound,
                "wall_time": self.wall_time}


@dataclass
class Report:
    config: dict
    checks: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def summary(self) -> dict:
        return {"total": len(self.checks),
                "passed": sum(c.passed for c in self.checks),
                "failed": sum(not c.passed for c in self.checks)}

    def to_json(self, strip_wall_times: bool = False) -> str:
        rows = [c.row() for c in self.checks]
        if strip_wall_times:
            for r in rows:
                r.pop("wall_time")
        return json.dumps({"config": self.config, "checks": rows,
                           "summary": self.summary()}, indent=2, sort_keys=True)

    def to_csv(self) -> str:
        cols = ["suite", "case", "seed", "name", "residual", "tol",
                "passed", "lower_bound", "wall_time"]
        lines = [",".join(cols)]
        for c in self.checks:
            row = c.row()
            lines.append(",".join(str(row[k]) for k in cols))
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# instance generation
# ---------------------------------------------------------------------------


@dataclass
class Instance:
    profile: model.PoleProfile
    chart: model.TimeChart
    oper: OperCoords
    omega: complex
    rng: np.random.Generator


def generate_instance(case, seed: int, min_p: float = 0.0) -> Instance:
    """Seeded random instance of a case; identical seeds give identical data."""
    r_inf, orders = case
    rng = np.random.default_rng(np.random.SeedSequence([seed, r_inf, *orders, 91]))
    for _ in range(100):
        try:
            profile = model.random_profile(r_inf, tuple(orders), rng)
            chart = model.random_chart(profile, rng)
            g = model.genus(profile)
            q: list[complex] = []
            tries = 0
            while len(q) < g and tries < 400:
                tries += 1
                cand = complex(rng.uniform(-1.6, 1.6), rng.uniform(-1.6, 1.6))
                if all(abs(cand - x) > 0.25 for x in profile.positions) and \
                   all(abs(cand - qq) > 0.2 for qq in q):
                    q.append(cand)
            if len(q) < g:
                continue
            qa = coords.canonical_order(np.array(q))
            p = rng.uniform(-1.5, 1.5, g) + 1j * rng.uniform(-1.5, 1.5, g)
            if min_p and np.linalg.norm(p) < min_p:
                p = p + min_p
            return Instance(profile, chart, OperCoords(qa, p), 1.0 + 0.0j, rng)
        except model.UnsupportedProfileError:
            raise
    raise ConfigError(f"failed to generate an instance of case {case}")


def instance_from_problem(profile, chart, seed: int) -> Instance:
    """Instance for a user-described problem: coordinates drawn from the seed."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 77]))
    g = model.genus(profile)
    model.check_leading_times(profile, chart)
    q: list[complex] = []
    tries = 0
    while len(q) < g and tries < 500:
        tries += 1
        cand = complex(rng.uniform(-1.6, 1.6), rng.uniform(-1.6, 1.6))
        if all(abs(cand - x) > 0.25 for x in profile.positions) and \
           all(abs(cand - qq) > 0.2 for qq in q):
            q.append(cand)
    if len(q) < g:
        raise ConfigError("could not place apparent singularities for problem")
    qa = coords.canonical_order(np.array(q))
    p = rng.uniform(-1.5, 1.5, g) + 1j * rng.uniform(-1.5, 1.5, g)
    return Instance(profile, chart, OperCoords(qa, p), 1.0 + 0.0j, rng)


def run_problem(profile, chart, seed: int,
                config: SuiteConfig | None = None) -> Report:
    """Run the per-instance suites on a single described problem."""
    config = config or SuiteConfig()
    tol = config.tolerances()
    inst = instance_from_problem(profile, chart, seed)
    label = f"({profile.r_inf},{list(profile.orders)})"
    records = []
    suite_fns = {
        "gauge": lambda: check_gauge(inst, tol),
        "symplectic": lambda: check_symplectic(inst, tol),
        "hamiltonian-equivalence": lambda: check_hamiltonian(inst, tol),
        "compatibility": lambda: check_compatibility(inst, tol,
                                                     config.fault_inject),
        "spectral": lambda: check_spectral(inst, tol),
    }
    for suite in config.suites:
        fn = suite_fns.get(suite)
        if fn is None:
            continue
        t0 = time.perf_counter()
        for name, res, tolerance, lower in fn():
            ok = res > tolerance if lower else res <= tolerance
            records.append(CheckRecord(suite, label, seed, name, float(res),
                                       float(tolerance), bool(ok), lower,
                                       time.perf_counter() - t0))
    cfg = {"problem": label, "seed": seed, "suites": list(config.suites),
           "tol": tol}
    return Report(cfg, records)


def iso_instance(case, seed: int):
    """Random isospectral-chart data (u, v) honoring the head constraints."""
    r_inf, orders = case
    inst = generate_instance(case, seed)
    profile, chart = inst.profile, inst.chart
    rng = inst.rng
    keys = model.chart_keys(profile)
    u = {k: complex(rng.uniform(-1, 1), rng.uniform(-1, 1)) for k in keys}
    v = {k: complex(rng.uniform(-1, 1), rng.uniform(-1, 1)) for k in keys}
    n = profile.n
    if r_inf == 2:
        u[(0, 1)] = inst.omega - sum(u[(s, 1)] for s in range(1, n))
        v[(0, 1)] = -chart.t0[INF] - sum(v[(s, 1)] for s in range(1, n))
    elif r_inf == 1:
        u[(0, 1)] = -sum(u[(s, 1)] for s in range(1, n))
        v[(0, 1)] = -chart.t0[INF] - sum(v[(s, 1)] for s in range(1, n))
    return inst, isospectral.IsoCoords(u, v)


# ---------------------------------------------------------------------------
# per-suite checks
# ---------------------------------------------------------------------------


def _case_label(case) -> str:
    r_inf, orders = case
    return f"({r_inf},{list(orders)})"


def _sample(inst: Instance, n=20):
    rng = np.random.default_rng(np.random.SeedSequence([inst.rng.integers(2**31), 7]))
    return opergauge.sample_lambdas(
        rng, list(inst.profile.positions) + list(inst.oper.q), n)


def check_gauge(inst: Instance, tol: dict):
    profile, chart, oper, omega = inst.profile, inst.chart, inst.oper, inst.omega
    H, g0 = opergauge.solve_H(oper, chart, profile)
    L = opergauge.build_oper_L(oper, chart, profile, H, g0)
    geo = coords.qp_to_geo(oper, omega, profile)
    Lt = geogauge.build_geo_L_QP(geo, chart, profile, omega)
    conj = geogauge.conjugated_L(oper, chart, profile, omega, L, H, g0)
    lams = _sample(inst)
    worst = max(float(np.max(np.abs(Lt.entries(lam) - conj(lam)))
                      / (1.0 + np.max(np.abs(conj(lam))))) for lam in lams)
    yield ("oper-conjugation", worst, tol["gauge"], False)
    lax = coords.geo_to_lax(geo, omega, Lt.g0, chart, profile)
    LtR = geogauge.build_geo_L_QR(lax, chart, profile, omega)
    worst = max(float(np.max(np.abs(LtR.entries(lam) - Lt.entries(lam)))
                      / (1.0 + np.max(np.abs(Lt.entries(lam))))) for lam in lams)
    yield ("qr-path", worst, tol["gauge-qr"], False)


def check_symplectic(inst: Instance, tol: dict):
    profile, chart, oper, omega = inst.profile, inst.chart, inst.oper, inst.omega

    def to_geo(z):
        geo = coords.qp_to_geo(coords.unpack_qp(z), omega, profile)
        return coords.pack_chart(profile, geo.Q, geo.P)

    defect = coords.symplectic_defect(to_geo, coords.pack_qp(oper))
    yield ("qp-QP-defect", defect, tol["symplectic"], False)
    geo0 = coords.qp_to_geo(oper, omega, profile)
    g0 = (coords.g0_from_Q(geo0.Q, chart, profile, omega) if profile.r_inf >= 2
          else geogauge.g0_residue_rinf1(geo0, chart, profile, omega))

    def to_lax(z):
        geo = coords.qp_to_geo(coords.unpack_qp(z), omega, profile)
        g0x = (coords.g0_from_Q(geo.Q, chart, profile, omega)
               if profile.r_inf >= 2
               else geogauge.g0_residue_rinf1(geo, chart, profile, omega))
        lax = coords.geo_to_lax(geo, omega, g0x, chart, profile)
        return coords.pack_chart(profile, lax.Q, lax.R)

    if np.linalg.norm(inst.oper.p) > 0.1:
        witness = coords.symplectic_defect(to_lax, coords.pack_qp(oper))
        yield ("QR-non-symplectic", witness, tol["non-symplectic-witness"], True)


def check_hamiltonian(inst: Instance, tol: dict):
    profile, chart, oper, omega = inst.profile, inst.chart, inst.oper, inst.omega
    H, g0 = opergauge.solve_H(oper, chart, profile)
    ham_o = opergauge.hamiltonians_oper(H, chart, profile)
    geo = coords.qp_to_geo(oper, omega, profile)
    ham_g = geogauge.hamiltonians_geo(geo, chart, profile, omega)
    worst = max(abs(ham_o[k] - ham_g[k]) / (1.0 + abs(ham_o[k])) for k in ham_o)
    yield ("oper-vs-geo", worst, tol["hamiltonian-equivalence"], False)


def check_compatibility(inst: Instance, tol: dict, fault: str | None):
    profile, chart, oper = inst.profile, inst.chart, inst.oper
    inject = 1e-3 if fault == "H" else 0.0
    rng = np.random.default_rng(np.random.SeedSequence([inst.rng.integers(2**31), 3]))
    worst = 0.0
    for alpha in model.deformation_directions(profile, chart):
        worst = max(worst, opergauge.compatibility_residual(
            alpha, oper, chart, profile, rng=rng, h_inject=inject,
            absolute=bool(inject)))
    if inject:
        yield ("zero-curvature-fault", worst, tol["fault-floor"], True)
    else:
        yield ("zero-curvature", worst, tol["compatibility"], False)


def check_spectral(inst: Instance, tol: dict):
    profile, chart, oper, omega = inst.profile, inst.chart, inst.oper, inst.omega
    H, g0 = opergauge.solve_H(oper, chart, profile)
    geo = coords.qp_to_geo(oper, omega, profile)
    Lt = geogauge.build_geo_L_QP(geo, chart, profile, omega)
    windows = spectral.det_window_residuals(Lt, chart, profile)
    worst = max(abs(v) for v in windows.values())
    yield ("det-windows", worst, tol["det-windows"], False)
    inv = spectral.spectral_invariants(Lt, chart, profile)
    yield ("time-recovery", inv.recovery_residual(chart), tol["time-recovery"], False)
    det1 = spectral.det_geo_L(Lt)
    det2 = spectral.det_reconstructed(Lt, H, chart, profile)
    lams = _sample(inst, 10)
    worst = max(abs(det1(lam) - det2(lam)) / (1.0 + abs(det1(lam))) for lam in lams)
    yield ("det-two-forms", worst, tol["det-windows"], False)
    rel = spectral.ham_vs_invariants(Lt, H, chart, profile)
    if rel:
        worst = max(abs(v) for v in rel.values())
        yield ("ham-vs-invariants", worst, tol["ham-invariants"], False)


def check_ode(case, seed: int, tol: dict):
    r_inf, orders = case
    rng = np.random.default_rng(np.random.SeedSequence([seed, 11]))

    def draw_times(m):
        return {k: complex(rng.uniform(0.4, 1.5), rng.uniform(-0.6, 0.6))
                for k in range(1, m + 1)}

    for r in sorted(set(list(orders) + [2, 3, 4])):
        if r < 2:
            continue
        pm = isospectral.finite_profile(r)
        res = isospectral.ode_residual(pm, draw_times(r - 1), rng=rng)
        yield (f"ode-finite-r{r}", res, tol["ode"], False)
    for rr in sorted({r_inf, 4, 5, 6}):
        if rr < 4:
            continue
        pmQ, pmR = isospectral.infinity_profiles(rr)
        times = draw_times(rr - 3)
        if pmQ.rows:
            yield (f"ode-inf-Q-r{rr}",
                   isospectral.ode_residual(pmQ, times, rng=rng), tol["ode"], False)
        yield (f"ode-inf-R-r{rr}",
               isospectral.ode_residual(pmR, times, rng=rng), tol["ode"], False)


def montreal_flow_residual(inst: Instance, alpha, key) -> float:
    """Flow check of the invariant-as-Hamiltonian statement.

    In the isospectral chart the deformation flow must be Hamiltonian for
    twice the spectral invariant with the symplectic form pulled back from
    the base Darboux chart (the factor matches the time normalization).
    """
    profile, chart, oper, omega = inst.profile, inst.chart, inst.oper, inst.omega
    g = model.genus(profile)
    geo = coords.qp_to_geo(oper, omega, profile)
    g0 = coords.g0_from_Q(geo.Q, chart, profile, omega)
    lax = coords.geo_to_lax(geo, omega, g0, chart, profile)
    ic = isospectral.lax_to_iso(lax, chart, profile, omega)
    keys = model.chart_keys(profile)
    m = len(keys)

    def pack(u, v):
        return np.array([u[k] for k in keys] + [v[k] for k in keys])

    def unpack(z):
        return ({k: complex(z[i]) for i, k in enumerate(keys)},
                {k: complex(z[m + i]) for i, k in enumerate(keys)})

    def to_qp(z):
        u, v = unpack(z)
        lx, om = isospectral.iso_to_lax(isospectral.IsoCoords(u, v),
                                        chart, profile, omega)
        g0x = coords.g0_from_QR(lx, chart, profile, om)
        geo_x = coords.lax_to_geo(lx, om, g0x, chart, profile)
        return coords.pack_qp(coords.geo_to_qp(geo_x, om, profile))

    z0 = pack(ic.u, ic.v)
    J = coords.fd_jacobian(to_qp, z0)
    W = J.T @ coords.standard_form(g) @ J
    h = 1e-5
    grad = opergauge.hamilton_gradient(oper, alpha, chart, profile)

    def uv_at(sign):
        prof_s, chart_s = model.apply_deformation(profile, chart, alpha, sign * h)
        op_s = opergauge.evolve_qp(oper, alpha, chart, profile, sign * h, grad)
        geo_s = coords.qp_to_geo(op_s, omega, prof_s)
        g0_s = coords.g0_from_Q(geo_s.Q, chart_s, prof_s, omega)
        lax_s = coords.geo_to_lax(geo_s, omega, g0_s, chart_s, prof_s)
        ic_s = isospectral.lax_to_iso(lax_s, chart_s, prof_s, omega)
        return pack(ic_s.u, ic_s.v)

    V = (uv_at(1.0) - uv_at(-1.0)) / (2.0 * h)

    def I_of(z):
        u, v = unpack(z)
        lx, om = isospectral.iso_to_lax(isospectral.IsoCoords(u, v),
                                        chart, profile, omega)
        L = geogauge.build_geo_L_QR(lx, chart, profile, om)
        return spectral.spectral_invariants(L, chart, profile).I[key]

    gradI = np.zeros(2 * m, dtype=complex)
    for i in range(2 * m):
        step = 1e-5 * max(1.0, abs(z0[i]))
        zp, zm = z0.copy(), z0.copy()
        zp[i] += step
        zm[i] -= step
        gradI[i] = (I_of(zp) - I_of(zm)) / (2.0 * step)
    resid = W @ V + 2.0 * gradI
    scale = 1.0 + max(float(np.max(np.abs(W @ V))), float(np.max(np.abs(gradI))))
    return float(np.max(np.abs(resid)) / scale)


def check_isospectral(case, seed: int, tol: dict, fault: str | None,
                      heavy: bool = True):
    r_inf, orders = case
    inst, ic = iso_instance(case, seed)
    profile, chart, omega = inst.profile, inst.chart, inst.omega
    dirs = model.deformation_directions(profile, chart)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 13]))
    worst = 0.0
    for alpha in dirs:
        worst = max(worst, isospectral.isospectral_residual(
            ic, alpha, chart, profile, omega, rng=rng,
            freeze_profiles=(fault == "F"),
            nu_perturb=(1e-3 if fault == "nu" else 0.0),
            absolute=fault in ("F", "nu")))
    if fault in ("F", "nu"):
        floor = tol["iso-negative-floor"] if fault == "F" else tol["fault-floor"]
        yield ("iso-condition-fault", worst, floor, True)
        return
    yield ("iso-condition", worst, tol["isospectral"], False)
    # negative control needs a nontrivial profile matrix to bite
    if dirs and (any(r >= 2 for r in orders) or r_inf >= 4):
        timedirs = [a for a in dirs if a.time_map()]
        if timedirs:
            neg = isospectral.isospectral_residual(
                ic, timedirs[0], chart, profile, omega, rng=rng,
                freeze_profiles=True)
            yield ("iso-negative-control", neg, tol["iso-negative-floor"], True)
    if heavy and r_inf >= 3:
        timedirs = [a for a in dirs if a.time_map()]
        for alpha in timedirs[:2]:
            key = next(iter(alpha.time_map()))
            res = montreal_flow_residual(inst, alpha, key)
            yield (f"montreal-flow-{key[0]},{key[1]}", res, tol["montreal"], False)


# ---------------------------------------------------------------------------
# the suite runner
# ---------------------------------------------------------------------------


def _run_cell(config: SuiteConfig, suite: str, case, idx: int):
    tol = config.tolerances()
    label = _case_label(case)
    seed = config.seed * 1000 + idx
    records = []
    t0 = time.perf_counter()

    def emit(name, residual, tolerance, lower):
        ok = residual > tolerance if lower else residual <= tolerance
        records.append(CheckRecord(suite, label, seed, name, float(residual),
                                   float(tolerance), bool(ok), lower,
                                   time.perf_counter() - t0))

    try:
        if suite in ("gauge", "symplectic", "hamiltonian-equivalence",
                     "compatibility", "spectral"):
            inst = generate_instance(case, seed,
                                     min_p=0.2 if suite == "symplectic" else 0.0)
            fn = {"gauge": lambda: check_gauge(inst, tol),
                  "symplectic": lambda: check_symplectic(inst, tol),
                  "hamiltonian-equivalence": lambda: check_hamiltonian(inst, tol),
                  "compatibility": lambda: check_compatibility(
                      inst, tol, config.fault_inject),
                  "spectral": lambda: check_spectral(inst, tol)}[suite]
            for name, res, tolerance, lower in fn():
                emit(name, res, tolerance, lower)
        elif suite == "ode":
            if idx == 0:  # profile matrices are instance independent
                for name, res, tolerance, lower in check_ode(case, seed, tol):
                    emit(name, res, tolerance, lower)
        elif suite == "isospectral":
            heavy = idx < 2
            for name, res, tolerance, lower in check_isospectral(
                    case, seed, tol, config.fault_inject, heavy):
                emit(name, res, tolerance, lower)
    except Exception as exc:  # noqa: BLE001 - a failed build is a failed check
        records.append(CheckRecord(suite, label, seed, f"error:{type(exc).__name__}",
                                   float("inf"), 0.0, False, False,
                                   time.perf_counter() - t0))
    return records


def run_suite(config: SuiteConfig) -> Report:
    """Execute the selected suites over seeded instances of every case."""
    for suite in config.suites:
        if suite not in ALL_SUITES:
            raise ConfigError(f"unknown suite {suite!r}")
    for case in config.cases:
        profile_probe = model.PoleProfile(
            tuple(model.FinitePole(float(i), int(r))
                  for i, r in enumerate(case[1])), int(case[0]))
        model.genus(profile_probe)  # raises on unsupported cases
    threads = config.threads
    if threads is None:
        threads = int(os.environ.get("LAXFORGE_THREADS", "0")) or None
    cells = [(suite, case, idx)
             for suite in config.suites
             for case in config.cases
             for idx in range(config.instances_per_case)]
    results: list[CheckRecord] = []
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(_run_cell, config, *cell) for cell in cells]
            for fut in futures:
                results.extend(fut.result())
    else:
        for cell in cells:
            results.extend(_run_cell(config, *cell))
    results.sort(key=lambda c: (c.suite, c.case, c.seed, c.name))
    cfg = {"cases": [[c[0], list(c[1])] for c in config.cases],
           "instances_per_case": config.instances_per_case,
           "seed": config.seed, "suites": list(config.suites),
           "fault_inject": config.fault_inject,
           "tol": config.tolerances()}
    return Report(cfg, results)
