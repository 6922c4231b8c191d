"""Acceptance criteria 1-10. Each criterion prints one line:

    CRITERION <k> PASS|FAIL <summary>

Run with ``pytest tests/test_acceptance.py -v`` (the lines are repeated in the
terminal summary) or ``python3 tests/test_acceptance.py``.
"""
from __future__ import annotations

import json
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest
import scipy.optimize

from ncmap.cli import _construct, build_objective, load_preset
from ncmap.engine import ObjectivePort, run
from ncmap.genfun import make_pair
from ncmap.sequence import (
    MapParameters,
    TargetSpec,
    calc_theta,
    compute_T_direct,
    compute_T_via_P,
    construct_W,
    reference_coordinate_sequence,
)
from ncmap.spectral import orthogonality_defect, skew_deltas
from ncmap.verify import (
    brockett_check,
    catalog_sweep,
    default_catalog,
    gradient_order_check,
    interlacing_check,
    shoelace_check,
)

try:
    from .conftest import ACCEPTANCE_LINES
except ImportError:  # run as a script
    ACCEPTANCE_LINES = []

ORACLES = json.loads((Path(__file__).parent / "data" / "oracles.json").read_text())
TWO = MapParameters.two_point()
ONE = MapParameters.single_point()
CENTER = np.array([1.0, 2.0])

# values printed in the source text
PAPER_T_SINGLE = [[-1.0, -1.0], [1.0, -1.0]]
PAPER_T_TWO = [[0.0, -1.0], [1.0, 0.0]]
PAPER_PERIODS = {
    "sim1 sigma=(1,1,1,1)": 8,
    "sim1 sigma=(1.5,0.2,1.5,0.2)": 21,
    "sim2 sigma=(2,2)": 4,
    "sim2 sigma=(0.2,0.2)": 154,
    "sim3 sigma=(1,1,1,1)": 8,
}


def _zero_sum(rng, d, m):
    W = rng.standard_normal((d, m))
    W[:, -1] = -W[:, :-1].sum(axis=1)
    return W


def criterion_1():
    t0 = time.perf_counter()
    cases = [c for c in default_catalog()]
    rep = catalog_sweep(cases, tolerance=1e-7)
    dt = time.perf_counter() - t0
    infos = rep.details["cases"]
    ok = [i for i in infos if i["outcome"] == "ok"]
    recon = max(i["recon"] for i in ok)
    zs = max(i["zero_sum"] for i in ok)
    ns = sorted({c.target.n for c, i in zip(cases, infos) if i["outcome"] == "ok"})
    passed = rep.passed and len(ok) >= 40 and ns == [1, 2, 3] and recon <= 1e-7 and zs <= 1e-9 and dt < 30
    return passed, (f"{len(ok)} admissible cases n={ns}, {rep.details['expected_rejections']} expected rejections, "
                    f"max recon {recon:.2e}, max |W1| {zs:.2e}, {dt:.1f}s")


def criterion_2():
    t0 = time.perf_counter()
    rng = np.random.default_rng(20240602)
    worst = 0.0
    for _ in range(1000):
        n, m = int(rng.integers(1, 5)), int(rng.integers(2, 21))
        W = _zero_sum(rng, 2 * n, m)
        for params in (TWO, ONE):
            worst = max(worst, float(np.abs(compute_T_direct(W, params) - compute_T_via_P(W, params)).max()))
    dt = time.perf_counter() - t0
    return worst <= 1e-9 and dt < 10, f"1000 zero-sum W x 2 weightings, max gap {worst:.2e}, {dt:.2f}s"


def criterion_3():
    W = reference_coordinate_sequence(1).w
    e1 = float(np.abs(compute_T_direct(W, ONE) - PAPER_T_SINGLE).max())
    e2 = float(np.abs(compute_T_direct(W, TWO) - PAPER_T_TWO).max())
    return max(e1, e2) <= 1e-12, f"single-point err {e1:.1e}, two-point err {e2:.1e}"


def criterion_4():
    h1, h2 = TargetSpec("H1", 2), TargetSpec("H2", 2)
    got = {
        "sim1 sigma=(1,1,1,1)": construct_W(h1, TWO, (1, 1, 1, 1)).m,
        "sim1 sigma=(1.5,0.2,1.5,0.2)": construct_W(h1, TWO, (1.5, 0.2, 1.5, 0.2)).m,
        "sim2 sigma=(2,2)": construct_W(h2, TWO, (2, 2)).m,
        "sim2 sigma=(0.2,0.2)": construct_W(h2, TWO, (0.2, 0.2)).m,
        "sim3 sigma=(1,1,1,1)": construct_W(TargetSpec.tde_from_sigma(2, (1, 1), ONE), ONE, (1, 1, 1, 1)).m,
    }
    bad = [f"{k}: m={got[k]} vs {v}" for k, v in PAPER_PERIODS.items() if got[k] != v]
    summary = "; ".join(f"{k} m={v}" for k, v in got.items())
    return not bad, (f"mismatches {len(bad)}/5 [{'; '.join(bad)}]" if bad else summary)


def _order_combos():
    # fixed before measuring; every combination is reported
    h1, h2 = TargetSpec("H1", 2), TargetSpec("H2", 2)
    return [
        ("sim1", construct_W(h1, TWO, (1, 1, 1, 1)), make_pair("H2_sincos"), TWO),
        ("sim1 elongated", construct_W(h1, TWO, (1.5, 0.2, 1.5, 0.2)), make_pair("H2_sincos"), TWO),
        ("sim2", construct_W(h2, TWO, (2, 2)), make_pair("H2_sincos"), TWO),
        ("sim4 W", construct_W(h2, TWO, (1, 1)), make_pair("H2_sincos"), TWO),
        ("H1 balanced", construct_W(h1, TWO), make_pair("H2_sincos"), TWO),
        ("H1 log-spiral", construct_W(h1, TWO), make_pair("LOG_SPIRAL", {"mu": 1}), TWO),
        ("H2 a=2 b=.5", construct_W(TargetSpec("H2", 2, {"a": 2, "b": 0.5}), TWO),
         make_pair("H2_sincos", {"a": 2, "b": 0.5}), TWO),
        ("H4", construct_W(TargetSpec("H4", 2), TWO), make_pair("H4_const_lin", {"a": 1}), TWO),
        ("H5", construct_W(TargetSpec("H5", 2), TWO), make_pair("H5_lin_const", {"a": 1}), TWO),
        ("H7", construct_W(TargetSpec("H7", 2, {"a": 2, "b": 1, "c": 0.5}), TWO),
         make_pair("H7_shifted", {"a": 2, "b": 1, "c": 0.5}), TWO),
        ("sim3", construct_W(TargetSpec.tde_from_sigma(2, (1, 1), ONE), ONE, (1, 1, 1, 1)),
         make_pair("H2_sincos"), ONE),
        ("E1", construct_W(TargetSpec("E1", 2, {"a": -1}), ONE), make_pair("E1_radial", {"a": -1}), ONE),
    ]


def criterion_5():
    t0 = time.perf_counter()
    port = lambda: ObjectivePort(lambda x: float(np.sum((x - CENTER) ** 2)), lambda x: 2 * (x - CENTER))
    slopes = {}
    for name, em, pair, params in _order_combos():
        slopes[name] = gradient_order_check(em, pair, params, port(), [0, 1]).details["slope"]
    W = construct_W(TargetSpec("H1", 2), TWO, (1, 1, 1, 1)).w.copy()
    W[:, 0] = 0.0
    neg = gradient_order_check(W, make_pair("H2_sincos"), TWO, port(), [0, 1]).details["slope"]
    dt = time.perf_counter() - t0
    good = [k for k, s in slopes.items() if s >= 1.4]
    passed = len(good) >= 6 and neg < 1.2 and dt < 20
    listing = ", ".join(f"{k}={s:.3f}" for k, s in slopes.items())
    return passed, f"{len(good)}/{len(slopes)} combos >= 1.4 ({listing}); corrupted W slope {neg:.3f}; {dt:.1f}s"


def criterion_6():
    t0 = time.perf_counter()
    rep = interlacing_check(200)
    dt = time.perf_counter() - t0
    margin = rep.details["min_margin"]
    return rep.passed and margin > 1e-12 and dt < 60, (
        f"m<=200, {len(rep.details['violations'])} violations, min margin {margin:.3e}, {dt:.1f}s ({rep.note})")


def criterion_7():
    rng = np.random.default_rng(77)
    worst = 0.0
    for _ in range(200):
        n, m = int(rng.integers(1, 4)), int(rng.integers(2, 17))
        worst = max(worst, shoelace_check(_zero_sum(rng, 2 * n, m)).max_residual)
    return worst <= 1e-10, f"200 random zero-sum W, max area mismatch {worst:.2e}"


def criterion_8():
    built = []
    for case in default_catalog():
        if case.expect_reject:
            continue
        built.append((construct_W(case.target, case.params, case.sigma_free), case.params))
    for k in (1, 2, 3, 4, 5):
        cfg = load_preset(k)
        built.append((_construct(cfg), cfg.map_params))
    worst_y = worst_z = 0.0
    fails = 0
    for em, params in built:
        rep = brockett_check(em, em.target, params)
        worst_y = max(worst_y, rep.details["y_m"])
        worst_z = max(worst_z, rep.details["Z_m_minus_Td"])
        fails += not rep.passed
    return fails == 0, f"{len(built)} constructed W, max |y_m| {worst_y:.1e} (<=1e-9), max |Z_m-T_d| {worst_z:.1e} (<=1e-7)"


def _run_preset(cfg):
    t0 = time.perf_counter()
    em = _construct(cfg)
    rec = run(cfg.engine_config(em), build_objective(cfg), cfg.x0)
    return em, rec, time.perf_counter() - t0


def _ripple_local_min(cfg, x):
    fn = build_objective(cfg)
    res = scipy.optimize.minimize(fn._fn, x, jac=fn.gradient, method="BFGS", options={"gtol": 1e-10})
    return res.x, float(res.fun)


def sim4_outcome(cfg):
    em, rec, dt = _run_preset(cfg)
    xm = rec.iterates[min(em.m, rec.iterations)]
    xloc, jloc = _ripple_local_min(cfg, xm)
    return rec, xm, xloc, jloc, dt


def criterion_9():
    radius = ORACLES["convergence_radius"]
    parts, ok, times = [], True, []
    for k in (1, 2, 3):
        _, rec, dt = _run_preset(load_preset(k))
        d = float(np.linalg.norm(rec.final - CENTER))
        ok &= d <= radius
        times.append(dt)
        parts.append(f"sim{k} |x_K-x*|={d:.3f}")
    rec, xm, xloc, jloc, dt = sim4_outcome(load_preset(4))
    jfin = float(rec.objective_values[-1])
    ok &= jfin < jloc
    times.append(dt)
    parts.append(f"sim4 final J={jfin:.3g} vs local-min J={jloc:.3g} near x_m={np.round(xm, 3).tolist()}")
    _, rec, dt = _run_preset(load_preset(5))
    nrm = float(np.linalg.norm(rec.final))
    ok &= nrm <= 0.3
    times.append(dt)
    parts.append(f"sim5 |x_K|={nrm:.3f}")
    ok &= max(times) < 5
    return ok, f"{'; '.join(parts)}; radius {radius}; slowest run {max(times):.2f}s"


def sim4_alternative_start():
    rec, xm, xloc, jloc, _ = sim4_outcome(replace(load_preset(4), x0=(0.0, 1.0)))
    jfin = float(rec.objective_values[-1])
    verdict = "below" if jfin < jloc else "not below"
    return f"NOTE sim4 with x0=[0,1] (not counted): final J={jfin:.3g} {verdict} local-min J={jloc:.3g}"


def criterion_10():
    rng = np.random.default_rng(1010)
    worst_orth = worst_spec = 0.0
    for _ in range(50):
        p = int(rng.integers(2, 13))
        A = rng.standard_normal((p, p))
        C = A - A.T
        eta = skew_deltas(C)
        g = eta.size
        q = int(rng.integers(1, p // 2 + 1))
        t = np.sort([rng.uniform(eta[g - q + k], eta[k]) for k in range(q)])[::-1]
        th = calc_theta(C, t)
        worst_orth = max(worst_orth, orthogonality_defect(th))
        sub = (th.T @ C @ th)[: 2 * q, : 2 * q]
        got = np.sort(np.abs(np.linalg.eigvals(sub).imag))[::-1][0::2]
        worst_spec = max(worst_spec, float(np.abs(got - t).max()))
    return worst_orth <= 1e-9 and worst_spec <= 1e-7, (
        f"50 random instances p<=12, max orthogonality defect {worst_orth:.1e}, max spectrum error {worst_spec:.1e}")


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9, criterion_10]


def _line(k, passed, detail):
    return f"CRITERION {k} {'PASS' if passed else 'FAIL'} {detail}"


@pytest.mark.parametrize("k", range(1, 11))
def test_criterion(k):
    passed, detail = CRITERIA[k - 1]()
    line = _line(k, passed, detail)
    ACCEPTANCE_LINES.append(line)
    print(line)
    if k == 9:
        note = sim4_alternative_start()
        ACCEPTANCE_LINES.append(note)
        print(note)
    assert passed, line


if __name__ == "__main__":
    for k, fn in enumerate(CRITERIA, 1):
        print(_line(k, *fn()), flush=True)
        if k == 9:
            print(sim4_alternative_start())
