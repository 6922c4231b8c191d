"""Gradient-generating function pairs (f, g) and the identity they must meet.

For a target T_d split into n x n blocks T11, T12, T21, T22, a certified pair
satisfies ``f'f T11 + f'g T12 + g'f T21 + g'g T22 = -I`` for every z. For the
skew families this includes the Wronskian condition ``g'f - f'g = -1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .sequence import MapParameters, TargetSpec

__all__ = [
    "ConstraintViolation",
    "DomainError",
    "GeneratingPair",
    "PAIR_FAMILIES",
    "WronskianFailed",
    "bracket_residual",
    "chebyshev_grid",
    "evaluate",
    "lie_bracket",
    "make_pair",
]

PAIR_FAMILIES = (
    "H1_custom", "H2_sincos", "H3_coshsinh", "H4_const_lin", "H5_lin_const",
    "H6_exp", "H7_shifted", "E1_radial", "E2_sincos", "LOG_SPIRAL",
)

# natural target for each pair family; used by the catalog sweep
CERTIFIED_TARGET = {
    "H2_sincos": "H2", "H3_coshsinh": "H3", "H4_const_lin": "H4", "H5_lin_const": "H5",
    "H6_exp": "H6", "H7_shifted": "H7", "E1_radial": "E1", "E2_sincos": "E2",
}


class ConstraintViolation(ValueError):
    pass


class WronskianFailed(ValueError):
    pass


class DomainError(ValueError):
    pass


Quad = Callable[[np.ndarray], tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]]


@dataclass(frozen=True)
class GeneratingPair:
    family: str
    params: Mapping[str, object] = field(default_factory=dict)
    sign: int = 1
    _fn: Quad | None = field(default=None, repr=False, compare=False)
    domain: tuple[float, float] = (-10.0, 10.0)

    def __call__(self, z):
        return evaluate(self, z)


def chebyshev_grid(lo: float, hi: float, count: int = 128) -> np.ndarray:
    k = np.arange(count)
    nodes = np.cos((2 * k + 1) * np.pi / (2 * count))[::-1]
    return 0.5 * (lo + hi) + 0.5 * (hi - lo) * nodes


def _positive(name: str, value: float) -> float:
    value = float(value)
    if not (value > 0 and math.isfinite(value)):
        raise ConstraintViolation(f"{name} must be positive and finite, got {value}")
    return value


def _sign(sign) -> int:
    if sign not in (1, -1):
        raise ConstraintViolation(f"sign must be +1 or -1, got {sign!r}")
    return int(sign)


def _sincos(amp_f, amp_g, rate, phase) -> Quad:
    def fn(z):
        th = rate * z + phase
        s, c = np.sin(th), np.cos(th)
        return amp_f * s, amp_g * c, amp_f * rate * c, -amp_g * rate * s
    return fn


def make_pair(family: str, params: Mapping[str, object] | None = None, sign: int = 1) -> GeneratingPair:
    """Validated generating pair.

    Parameters by family: H2/H3 ``a, b, phi``; H4/H5/H6 ``a``; H7 ``a, b, c,
    phi`` with ``a b > c^2``; E1 ``a, r0, phi`` (constant radius r0); E2
    ``b, phi``; LOG_SPIRAL ``mu``; H1_custom ``f, g, df, dg`` callables.
    """
    params = dict(params or {})
    sign = _sign(sign)
    phi = float(params.get("phi", 0.0))
    domain = (-10.0, 10.0)

    if family == "H2_sincos":
        a, b = _positive("a", params.get("a", 1.0)), _positive("b", params.get("b", 1.0))
        fn = _sincos(a**-0.5, b**-0.5, math.sqrt(a * b), phi)
    elif family == "H3_coshsinh":
        a, b = _positive("a", params.get("a", 1.0)), _positive("b", params.get("b", 1.0))
        k = math.sqrt(a * b)

        def fn(z, a=a, b=b, k=k):
            th = k * z + phi
            ch, sh = np.cosh(th), np.sinh(th)
            return (sign * a**-0.5 * ch, -sign * b**-0.5 * sh,
                    sign * math.sqrt(b) * sh, -sign * math.sqrt(a) * ch)
    elif family == "H4_const_lin":
        a = _positive("a", params.get("a", 1.0))
        ra = math.sqrt(a)

        def fn(z):
            one = np.ones_like(z)
            return sign * ra * one, -sign * z / ra, 0.0 * one, -sign * one / ra
    elif family == "H5_lin_const":
        a = _positive("a", params.get("a", 1.0))
        ra = math.sqrt(a)

        def fn(z):
            one = np.ones_like(z)
            return sign * z / ra, sign * ra * one, sign * one / ra, 0.0 * one
    elif family == "H6_exp":
        a = _positive("a", params.get("a", 1.0))
        amp = a**-0.5

        def fn(z):
            em, ep = np.exp(-0.5 * a * z), np.exp(0.5 * a * z)
            return (sign * amp * em, -sign * amp * ep,
                    -sign * 0.5 * a * amp * em, -sign * 0.5 * a * amp * ep)
    elif family == "H7_shifted":
        a, b = _positive("a", params.get("a", 1.0)), _positive("b", params.get("b", 1.0))
        c = float(params.get("c", 0.0))
        if a * b <= c * c:
            raise ConstraintViolation(f"H7 needs a*b > c^2, got a={a}, b={b}, c={c}")
        k = math.sqrt(a * b - c * c)
        rb = math.sqrt(b)

        def fn(z):
            th = k * z + phi
            s, co = np.sin(th), np.cos(th)
            f = rb / k * s
            g = (co + c / k * s) / rb
            df = rb * co
            dg = (c * co - k * s) / rb
            return f, g, df, dg
    elif family == "E1_radial":
        a = float(params.get("a", -1.0))
        if a == 0:
            raise ConstraintViolation("E1 needs a != 0")
        r0 = _positive("r0", params.get("r0", 1.0))
        phase = 0.5 * a * math.log(r0) + phi
        fn = _sincos(math.sqrt(r0), math.sqrt(r0), 1.0 / r0, phase)
    elif family == "E2_sincos":
        b = _positive("b", params.get("b", 1.0))
        fn = _sincos(b**-0.5, b**-0.5, b, phi)
    elif family == "LOG_SPIRAL":
        mu = float(params.get("mu", 1.0))
        domain = (1e-3, 10.0)

        def fn(z):
            z = np.asarray(z, dtype=float)
            if np.any(z <= 0):
                raise DomainError("LOG_SPIRAL is defined for z > 0 only")
            rz = np.sqrt(z)
            th = mu * np.log(z)
            s, c = np.sin(th), np.cos(th)
            return rz * s, rz * c, (0.5 * s + mu * c) / rz, (0.5 * c - mu * s) / rz
    elif family == "H1_custom":
        try:
            f, g, df, dg = (params[k] for k in ("f", "g", "df", "dg"))
        except KeyError as exc:
            raise ConstraintViolation(f"H1_custom needs callables f, g, df, dg ({exc})") from None
        lo, hi = params.get("domain", (-10.0, 10.0))
        domain = (float(lo), float(hi))

        def fn(z):
            z = np.asarray(z, dtype=float)
            return (np.asarray(f(z), float), np.asarray(g(z), float),
                    np.asarray(df(z), float), np.asarray(dg(z), float))

        grid = chebyshev_grid(*domain, 64)
        fv, gv, dfv, dgv = fn(grid)
        wr = dgv * fv - dfv * gv
        if not np.all(np.isfinite(wr)) or np.abs(wr + 1.0).max() > 1e-8:
            raise WronskianFailed(f"g'f - f'g deviates from -1 by {np.nanmax(np.abs(wr + 1.0)):.3e}")
    else:
        raise ConstraintViolation(f"unknown pair family {family!r}")

    return GeneratingPair(family=family, params=params, sign=sign, _fn=fn, domain=domain)


def evaluate(pair: GeneratingPair, z):
    """Return ``(f, g, df, dg)`` at z (scalar or array)."""
    scalar = np.ndim(z) == 0
    zz = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(zz)):
        raise DomainError(f"non-finite argument {z!r}")
    out = pair._fn(zz)
    if scalar:
        return tuple(float(v) for v in out)
    return tuple(np.broadcast_to(np.asarray(v, float), zz.shape).copy() for v in out)


def lie_bracket(pair: GeneratingPair, z):
    f, g, df, dg = evaluate(pair, z)
    return dg * f - df * g


def bracket_residual(pair: GeneratingPair, target: TargetSpec, params: MapParameters | None, z) -> np.ndarray:
    """``f'f T11 + f'g T12 + g'f T21 + g'g T22 + I`` at a scalar z."""
    T = target.materialize(params)
    n = target.n
    f, g, df, dg = evaluate(pair, float(z))
    T11, T12 = T[:n, :n], T[:n, n:]
    T21, T22 = T[n:, :n], T[n:, n:]
    return df * f * T11 + df * g * T12 + dg * f * T21 + dg * g * T22 + np.eye(n)
