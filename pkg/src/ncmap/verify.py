"""Numerical certification of the structural identities behind the method.

Every check returns a :class:`VerificationReport`. Checks with two
thresholds report each residual divided by its own threshold against a
threshold of 1.
"""
from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .engine import ObjectivePort, transition_step
from .genfun import bracket_residual, chebyshev_grid, make_pair
from .sequence import (
    ExplorationMatrix,
    IncompatibleParams,
    MapParameters,
    TargetSpec,
    ZeroSumViolated,
    check_interlacing,
    compute_T_direct,
    construct_W,
)

__all__ = [
    "CatalogCase",
    "VerificationReport",
    "brockett_check",
    "catalog_sweep",
    "default_catalog",
    "fit_slope",
    "gradient_order_check",
    "interlacing_check",
    "shoelace_areas",
    "shoelace_check",
]


@dataclass(frozen=True)
class VerificationReport:
    check_name: str
    residuals: tuple[tuple[str, float], ...]
    threshold: float
    runtime_ms: float
    details: dict = field(default_factory=dict, compare=False)
    note: str = ""

    @property
    def max_residual(self) -> float:
        return max((v for _, v in self.residuals), default=0.0)

    @property
    def passed(self) -> bool:
        return bool(self.residuals) and self.max_residual <= self.threshold

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return f"CHECK {self.check_name} {verdict} max_residual={self.max_residual:.6g} threshold={self.threshold:.6g}"


def _w(W) -> np.ndarray:
    return W.w if isinstance(W, ExplorationMatrix) else np.asarray(W, dtype=float)


# ---------------------------------------------------------------------------
# order of the m-step gradient approximation


def fit_slope(hs: Sequence[float], errors: Sequence[float]) -> float:
    lh = np.log(np.asarray(hs, dtype=float))
    le = np.log(np.maximum(np.asarray(errors, dtype=float), 1e-300))
    return float(np.polyfit(lh, le, 1)[0])


def gradient_order_check(W, pair, params: MapParameters, J: ObjectivePort, x0,
                         h_list: Sequence[float] = (0.1, 0.05, 0.025, 0.0125),
                         min_slope: float = 1.4, name: str = "order") -> VerificationReport:
    """Fit the log-log slope of ``e(h) = |x_m - (x0 - h grad J(x0))|``.

    The residual is ``min_slope - slope`` so the report passes when the slope
    reaches ``min_slope``.
    """
    if J.gradient is None:
        raise ValueError("gradient_order_check needs an objective with a gradient oracle")
    t0 = time.perf_counter()
    Wm = _w(W)
    m = Wm.shape[1]
    x0 = np.asarray(x0, dtype=float)
    grad = np.asarray(J.gradient(x0), dtype=float)
    errors = []
    for h in h_list:
        x = x0.copy()
        for k in range(m):
            x = transition_step(x, k, Wm, pair, params, h, J)
        errors.append(float(np.linalg.norm(x - (x0 - h * grad))))
    slope = fit_slope(h_list, errors)
    finite = math.isfinite(errors[-1]) and math.isfinite(slope)
    resid = min_slope - slope if finite else math.inf
    return VerificationReport(
        name, (("slope_deficit", resid),), 0.0, (time.perf_counter() - t0) * 1e3,
        details={"slope": slope, "errors": errors, "h": list(h_list)},
    )


# ---------------------------------------------------------------------------
# shoelace areas


def shoelace_areas(W) -> tuple[np.ndarray, np.ndarray]:
    """Signed polygon areas of the partial-sum paths for every coordinate pair.

    Returns ``(A, corners)`` where ``corners[i]`` is the sum of the first i
    columns (i = 0..m). Coordinate pair (p, q) uses corners[:, p] as x and
    corners[:, q] as y.
    """
    Wm = _w(W)
    d, m = Wm.shape
    corners = np.zeros((m + 1, d))
    corners[1:] = np.cumsum(Wm.T, axis=0)
    A = np.zeros((d, d))
    for p in range(d):
        x = corners[:, p]
        for q in range(d):
            y = corners[:, q]
            A[p, q] = 0.5 * np.sum(x[1:] * y[:-1] - x[:-1] * y[1:])
    return A, corners


def shoelace_check(W, tol: float = 1e-10, name: str = "shoelace") -> VerificationReport:
    """Compare polygon areas with T(W) under the two-point weights."""
    t0 = time.perf_counter()
    Wm = _w(W)
    if isinstance(W, ExplorationMatrix) and W.params is not None and W.params != MapParameters.two_point():
        raise ValueError("the area identity holds for alpha = [1/2, 1/2] only")
    defect = float(np.abs(Wm.sum(axis=1)).max(initial=0.0))
    if defect > 1e-9:
        raise ZeroSumViolated(f"|W 1|_max = {defect:.3e}")
    A, _ = shoelace_areas(Wm)
    T = compute_T_direct(Wm, MapParameters.two_point())
    resid = float(np.abs(A - T).max(initial=0.0))
    return VerificationReport(name, (("areas_vs_T", resid),), tol, (time.perf_counter() - t0) * 1e3,
                              details={"areas": A})


# ---------------------------------------------------------------------------
# discrete nonholonomic integrator


def brockett_check(W, target: TargetSpec | np.ndarray | None, params: MapParameters,
                   y_tol: float = 1e-9, z_tol: float = 1e-7, name: str = "brockett") -> VerificationReport:
    """Drive (y, Z) from zero through the columns of W and compare with (0, T_d)."""
    t0 = time.perf_counter()
    Wm = _w(W)
    d, m = Wm.shape
    if target is None:
        Td = np.zeros((d, d))
    elif isinstance(target, TargetSpec):
        Td = target.materialize()
    else:
        Td = np.asarray(target, dtype=float)
    y = np.zeros(d)
    Z = np.zeros((d, d))
    for k in range(m):
        w = Wm[:, k]
        Z = Z + params.s2 * np.outer(w, y) + params.alpha2 * np.outer(w, w)
        y = y + w
    ry = float(np.linalg.norm(y))
    rz = float(np.abs(Z - Td).max(initial=0.0))
    return VerificationReport(
        name, (("y_m/y_tol", ry / y_tol), ("Z_m/z_tol", rz / z_tol)), 1.0,
        (time.perf_counter() - t0) * 1e3, details={"y_m": ry, "Z_m_minus_Td": rz},
    )


# ---------------------------------------------------------------------------
# interlacing scan


def interlacing_check(m_max: int = 200, margin: float = 1e-12, name: str = "interlacing") -> VerificationReport:
    """Strict interlacing of consecutive C(m). Numerical evidence, not a proof."""
    t0 = time.perf_counter()
    rep = check_interlacing(m_max)
    resid = margin - rep.min_margin if rep.passed else math.inf
    return VerificationReport(
        name, (("margin_deficit", resid),), 0.0, (time.perf_counter() - t0) * 1e3,
        details={"min_margin": rep.min_margin, "violations": list(rep.violations), "m_max": m_max},
        note="numerical evidence only; the property has no proof",
    )


# ---------------------------------------------------------------------------
# catalog sweep


@dataclass(frozen=True)
class CatalogCase:
    label: str
    target: TargetSpec
    params: MapParameters
    pair_family: str
    pair_params: dict
    sigma_free: tuple[float, ...] = ()
    expect_reject: bool = False


TWO_POINT = MapParameters.two_point()
SINGLE_POINT = MapParameters.single_point()


def _normal_q(n: int, g: float, tau: float) -> np.ndarray:
    # g I plus a scaled anti-diagonal skew part; normal because the skew
    # part commutes with the identity
    from .sequence import antidiagonal_skew

    return g * np.eye(n) + tau * antidiagonal_skew(n)


def default_catalog() -> list[CatalogCase]:
    cases: list[CatalogCase] = []
    h_variants = {
        "H1": [({}, "H2_sincos", {})],
        "H2": [({"a": 1.0, "b": 1.0}, "H2_sincos", {"a": 1.0, "b": 1.0}),
               ({"a": 2.0, "b": 0.5}, "H2_sincos", {"a": 2.0, "b": 0.5, "phi": 0.3})],
        "H3": [({"a": 1.0, "b": 1.0}, "H3_coshsinh", {"a": 1.0, "b": 1.0}),
               ({"a": 0.5, "b": 2.0}, "H3_coshsinh", {"a": 0.5, "b": 2.0})],
        "H4": [({}, "H4_const_lin", {"a": 2.0})],
        "H5": [({}, "H5_lin_const", {"a": 0.5})],
        "H6": [({}, "H6_exp", {"a": 2.0})],
        "H7": [({"a": 2.0, "b": 1.0, "c": 0.5}, "H7_shifted", {"a": 2.0, "b": 1.0, "c": 0.5}),
               ({"a": 1.0, "b": 1.0, "c": 0.0}, "H7_shifted", {"a": 1.0, "b": 1.0})],
    }
    for n in (1, 2, 3):
        for fam, variants in h_variants.items():
            for tparams, pfam, pparams in variants:
                tgt = TargetSpec(fam, n, tparams)
                tag = ",".join(f"{k}={v}" for k, v in tparams.items())
                cases.append(CatalogCase(f"{fam}[{tag}] n={n} two-point", tgt, TWO_POINT, pfam, pparams))
                cases.append(CatalogCase(f"{fam}[{tag}] n={n} single-point", tgt, SINGLE_POINT, pfam,
                                         pparams, expect_reject=True))
        r = 2 * n
        cases.append(CatalogCase(f"H1 n={n} two-point sigma=1", TargetSpec("H1", n), TWO_POINT,
                                 "H2_sincos", {}, sigma_free=(1.0,) * r))
        cases.append(CatalogCase(f"H2 n={n} two-point sigma-half", TargetSpec("H2", n), TWO_POINT,
                                 "H2_sincos", {}, sigma_free=tuple(1.0 + 0.5 * i for i in range(numerical_half_rank("H2", n)))))
        for a in (-1.0, -0.5):
            tgt = TargetSpec("E1", n, {"a": a})
            cases.append(CatalogCase(f"E1[a={a}] n={n} single-point", tgt, SINGLE_POINT, "E1_radial",
                                     {"a": a, "r0": 1.0}))
        cases.append(CatalogCase(f"E1[a=-1] n={n} two-point", TargetSpec("E1", n, {"a": -1.0}), TWO_POINT,
                                 "E1_radial", {"a": -1.0}, expect_reject=True))
        tgt = TargetSpec("E2", n, q_matrix=_normal_q(n, -0.8, 0.5))
        cases.append(CatalogCase(f"E2 n={n} single-point", tgt, SINGLE_POINT, "E2_sincos", {"b": 1.5}))
        for sig in ((1.0,) * n, tuple(1.2 - 0.3 * i for i in range(n))):
            tgt = TargetSpec.tde_from_sigma(n, sig, SINGLE_POINT)
            cases.append(CatalogCase(f"TdE[sigma={sig}] n={n} single-point", tgt, SINGLE_POINT,
                                     "E2_sincos", {"b": 1.0}))
        cases.append(CatalogCase(f"TdE[minimal] n={n} single-point", TargetSpec.tde_minimal(n, SINGLE_POINT),
                                 SINGLE_POINT, "E2_sincos", {"b": 1.0}))
        cases.append(CatalogCase(f"TdE n={n} two-point", TargetSpec.tde_from_sigma(n, (1.0,) * n, SINGLE_POINT),
                                 TWO_POINT, "E2_sincos", {}, expect_reject=True))
    return cases


def numerical_half_rank(family: str, n: int) -> int:
    from .sequence import numerical_rank

    return numerical_rank(TargetSpec(family, n).materialize()) // 2


def _run_case(case: CatalogCase, tol: float, zgrid: np.ndarray) -> tuple[str, float, dict]:
    info: dict = {"label": case.label, "expect_reject": case.expect_reject}
    try:
        em = construct_W(case.target, case.params, case.sigma_free)
    except IncompatibleParams as exc:
        info["outcome"] = "rejected"
        info["reason"] = str(exc)
        # an expected rejection scores 0, an unexpected one fails the sweep
        return case.label, 0.0 if case.expect_reject else math.inf, info
    except Exception as exc:  # recorded, never thrown
        info["outcome"] = f"error: {type(exc).__name__}: {exc}"
        return case.label, math.inf, info
    if case.expect_reject:
        info["outcome"] = "accepted but rejection expected"
        return case.label, math.inf, info
    Td = case.target.materialize()
    recon = float(np.abs(compute_T_direct(em.w, case.params) - Td).max())
    zero_sum = em.zero_sum_defect()
    brock = brockett_check(em, Td, case.params)
    pair = make_pair(case.pair_family, case.pair_params)
    lo, hi = pair.domain
    grid = zgrid if (lo, hi) == (-10.0, 10.0) else chebyshev_grid(lo, hi, zgrid.size)
    br = 0.0
    for z in grid:
        f, g, df, dg = pair(float(z))
        scale = 1.0 + abs(df * f) + abs(df * g) + abs(dg * f) + abs(dg * g)
        br = max(br, float(np.abs(bracket_residual(pair, case.target, None, z)).max()) / scale)
    info.update(outcome="ok", m=em.m, case=em.case, recon=recon, zero_sum=zero_sum,
                brockett=brock.max_residual, bracket=br)
    # everything is expressed relative to its own threshold
    score = max(recon / tol, zero_sum / 1e-9, brock.max_residual, br / 1e-9)
    return case.label, score, info


def catalog_sweep(params_grid: Iterable[CatalogCase] | None = None, tolerance: float = 1e-7,
                  workers: int = 1, name: str = "catalog") -> VerificationReport:
    """Construct, reconstruct, integrate and bracket-check every catalog case.

    Residuals are normalised so that 1.0 is the pass boundary. Expected
    rejections contribute 0.
    """
    t0 = time.perf_counter()
    cases = list(params_grid) if params_grid is not None else default_catalog()
    zgrid = chebyshev_grid(-10.0, 10.0, 128)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(lambda c: _run_case(c, tolerance, zgrid), cases))
    else:
        results = [_run_case(c, tolerance, zgrid) for c in cases]
    residuals = tuple((label, score) for label, score, _ in results)
    infos = [info for _, _, info in results]
    accepted = sum(1 for i in infos if i.get("outcome") == "ok")
    rejected = sum(1 for i in infos if i.get("outcome") == "rejected" and i["expect_reject"])
    return VerificationReport(
        name, residuals, 1.0, (time.perf_counter() - t0) * 1e3,
        details={"cases": infos, "accepted": accepted, "expected_rejections": rejected},
    )
