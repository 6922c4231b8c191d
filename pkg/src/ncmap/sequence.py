"""Exploration sequences: the quadratic form T(W), its matrix factorization
T(W) = W P W^T, and the SVD-based construction of W for a prescribed target.

Columns of W are ``w_l = [u_l; v_l]`` indexed from 0. All constructions keep
``W @ 1 = 0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .spectral import (
    ConvergenceFailure,
    normal_block_diagonalize,
    orthogonality_defect,
    skew_block_diagonalize,
    skew_deltas,
)

__all__ = [
    "BadPeriod",
    "ExplorationMatrix",
    "IncompatibleParams",
    "InterlacingReport",
    "InterlacingViolated",
    "MapParameters",
    "SearchExhausted",
    "TargetSpec",
    "TargetsInfeasible",
    "ZeroSumViolated",
    "antidiagonal_skew",
    "build_C",
    "build_P",
    "build_P_tilde",
    "calc_ps_matrix",
    "calc_theta",
    "calc_theta_sub",
    "check_interlacing",
    "compute_T_direct",
    "compute_T_via_P",
    "construct_W",
    "epsilon",
    "find_sequence_length",
    "load_w",
    "numerical_rank",
    "reference_coordinate_sequence",
    "save_w",
]

H_FAMILIES = ("H1", "H2", "H3", "H4", "H5", "H6", "H7")
E_FAMILIES = ("E1", "E2", "TdE")
FAMILIES = H_FAMILIES + E_FAMILIES

ZERO_SUM_TOL = 1e-9
RECON_TOL = 1e-7
SKEW_REGIME_TOL = 1e-12


class BadPeriod(ValueError):
    pass


class ZeroSumViolated(ValueError):
    pass


class IncompatibleParams(ValueError):
    pass


class SearchExhausted(RuntimeError):
    pass


class TargetsInfeasible(ValueError):
    pass


class InterlacingViolated(ValueError):
    pass


# ---------------------------------------------------------------------------
# parameters and targets


@dataclass(frozen=True)
class MapParameters:
    """Weights of the two objective evaluations in one transition map.

    ``c1 = 2 a2 - s^2``, ``c2 = a2 - s^2`` and ``mu = a2 - s^2 / 2`` with
    ``s = a1 + a2``. They are derived here and never passed in.
    """

    alpha1: float
    alpha2: float
    c1: float = field(init=False)
    c2: float = field(init=False)
    mu: float = field(init=False)

    def __post_init__(self):
        a1, a2 = float(self.alpha1), float(self.alpha2)
        if not (math.isfinite(a1) and math.isfinite(a2)):
            raise IncompatibleParams("alpha values must be finite")
        if a1 + a2 == 0:
            raise IncompatibleParams("alpha1 + alpha2 must be nonzero")
        s2 = (a1 + a2) ** 2
        object.__setattr__(self, "alpha1", a1)
        object.__setattr__(self, "alpha2", a2)
        object.__setattr__(self, "c1", 2 * a2 - s2)
        object.__setattr__(self, "c2", a2 - s2)
        object.__setattr__(self, "mu", a2 - 0.5 * s2)

    @property
    def s2(self) -> float:
        return (self.alpha1 + self.alpha2) ** 2

    @property
    def skew_regime(self) -> bool:
        """True when targets must be skew-symmetric (c1 vanishes)."""
        return abs(self.c1) <= SKEW_REGIME_TOL

    @property
    def evals_per_iter(self) -> int:
        return 1 if self.alpha2 == 0 else 2

    @classmethod
    def two_point(cls) -> "MapParameters":
        return cls(0.5, 0.5)

    @classmethod
    def single_point(cls) -> "MapParameters":
        return cls(1.0, 0.0)


def antidiagonal_skew(n: int) -> np.ndarray:
    """Skew n x n matrix with +1 below and -1 above the anti-diagonal."""
    Q = np.zeros((n, n))
    for i in range(n):
        j = n - 1 - i
        if i > j:
            Q[i, j] = 1.0
        elif i < j:
            Q[i, j] = -1.0
    return Q


@dataclass(frozen=True)
class TargetSpec:
    """A target matrix T_d from the catalog.

    ``params`` holds the scalars the template needs: ``a``, ``b``, ``c`` for
    the H families, ``a`` for E1, and ``gamma`` (length n) for TdE.
    ``q_matrix`` is the n x n ingredient Q. It defaults to
    :func:`antidiagonal_skew` for the H families and is required for E2.
    """

    family: str
    n: int
    params: Mapping[str, object] = field(default_factory=dict)
    q_matrix: np.ndarray | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise IncompatibleParams(f"unknown target family {self.family!r}")
        if int(self.n) < 1:
            raise IncompatibleParams("n must be at least 1")
        object.__setattr__(self, "params", dict(self.params))
        if self.q_matrix is not None:
            q = np.array(self.q_matrix, dtype=float)
            if q.shape != (self.n, self.n):
                raise IncompatibleParams(f"Q must be {self.n}x{self.n}, got {q.shape}")
            q.setflags(write=False)
            object.__setattr__(self, "q_matrix", q)

    @property
    def is_skew_family(self) -> bool:
        return self.family in H_FAMILIES

    def _q(self) -> np.ndarray:
        if self.q_matrix is not None:
            return np.array(self.q_matrix)
        if self.family == "E2":
            raise IncompatibleParams("E2 needs an explicit normal Q")
        return antidiagonal_skew(self.n)

    def _scalar(self, key: str, default: float | None = None) -> float:
        if key in self.params:
            return float(self.params[key])
        if default is None:
            raise IncompatibleParams(f"{self.family} needs parameter {key!r}")
        return default

    def materialize(self, params: MapParameters | None = None) -> np.ndarray:
        """Return T_d. With ``params`` given, also check the admissibility gate."""
        n, fam = self.n, self.family
        I, Z = np.eye(n), np.zeros((n, n))
        if fam in H_FAMILIES and fam != "H1":
            Q = self._q()
            if np.abs(Q + Q.T).max() > 1e-12:
                raise IncompatibleParams(f"{fam} requires a skew-symmetric Q")
        if fam == "H1":
            T = np.block([[Z, -I], [I, Z]])
        elif fam == "H2":
            a, b = self._scalar("a", 1.0), self._scalar("b", 1.0)
            T = np.block([[a * Q, -I], [I, b * Q]])
        elif fam == "H3":
            a, b = self._scalar("a", 1.0), self._scalar("b", 1.0)
            T = np.block([[a * Q, -I], [I, -b * Q]])
        elif fam == "H4":
            T = np.block([[Q, -I], [I, Z]])
        elif fam == "H5":
            T = np.block([[Z, -I], [I, Q]])
        elif fam == "H6":
            T = np.block([[Z, -I - Q], [I - Q, Z]])
        elif fam == "H7":
            a, b, c = self._scalar("a", 1.0), self._scalar("b", 1.0), self._scalar("c", 0.0)
            T = np.block([[a * Q, -I - c * Q], [I - c * Q, b * Q]])
        elif fam == "E1":
            a = self._scalar("a")
            T = np.block([[a * I, -I], [I, a * I]])
        elif fam == "E2":
            Q = self._q()
            if np.abs(Q @ Q.T - Q.T @ Q).max() > 1e-10:
                raise IncompatibleParams("E2 requires a normal Q")
            T = np.block([[Q, -I], [I, Q]])
        else:  # TdE
            gamma = np.asarray(self.params.get("gamma", ()), dtype=float).ravel()
            if gamma.size != n:
                raise IncompatibleParams(f"TdE needs {n} gamma values, got {gamma.size}")
            D = np.diag(gamma)
            T = np.block([[D, -I], [I, D]])
        if params is not None:
            check_admissible(T, params, family=fam)
        return T

    @classmethod
    def tde_from_sigma(cls, n: int, sigma_pairs: Sequence[float], params: MapParameters) -> "TargetSpec":
        """Diagonal normal target whose singular-value pairs are ``sigma_pairs``."""
        s = np.asarray(sigma_pairs, dtype=float).ravel()
        if s.size != n or np.any(s <= 0):
            raise IncompatibleParams(f"need {n} positive sigma values")
        return cls("TdE", n, {"gamma": tuple(params.mu * s**2)})

    @classmethod
    def tde_minimal(cls, n: int, params: MapParameters) -> "TargetSpec":
        """Diagonal normal target reachable with the shortest period 2n + 1."""
        omega = skew_deltas(build_P_tilde(params, 2 * n + 1) - params.mu * np.eye(2 * n))[:n]
        return cls("TdE", n, {"gamma": tuple(params.mu / omega)})


def check_admissible(T: np.ndarray, params: MapParameters, family: str = "") -> None:
    """Raise IncompatibleParams unless T can be realized under ``params``."""
    scale = max(1.0, float(np.abs(T).max()))
    if params.skew_regime:
        if np.abs(T + T.T).max() > 1e-12 * scale:
            raise IncompatibleParams(
                f"target {family} is not skew-symmetric but 2*alpha2 - (alpha1+alpha2)^2 = 0"
            )
        return
    if np.abs(T @ T.T - T.T @ T).max() > 1e-10 * scale**2:
        raise IncompatibleParams(f"target {family} is not normal")
    sym = params.c1 * (T + T.T)
    lam_min = float(np.linalg.eigvalsh(0.5 * (sym + sym.T)).min())
    if lam_min <= 1e-12 * scale:
        raise IncompatibleParams(
            f"(2*alpha2 - (alpha1+alpha2)^2)(T + T^T) is not positive definite for {family} "
            f"(min eigenvalue {lam_min:.3g})"
        )


def numerical_rank(T) -> int:
    s = np.linalg.svd(np.asarray(T, dtype=float), compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > 1e-10 * s[0]))


# ---------------------------------------------------------------------------
# the quadratic form


def epsilon(k: int) -> float:
    """(1 - k^{-1/2}) / (k - 1), the centring weight for period k."""
    if k < 2:
        raise BadPeriod(f"epsilon needs k >= 2, got {k}")
    return (1.0 - k**-0.5) / (k - 1)


def build_P(params: MapParameters, m: int) -> np.ndarray:
    if m < 2:
        raise BadPeriod(f"period must be at least 2, got {m}")
    k = m - 1
    P = np.zeros((m, m))
    block = np.full((k, k), params.alpha2)
    block[np.triu_indices(k, 1)] = params.c2
    np.fill_diagonal(block, params.c1)
    P[:k, :k] = block
    return P


def compute_T_direct(W, params: MapParameters) -> np.ndarray:
    """Sum over columns of a2 w_i w_i^T + s^2 sum_{j<i} w_i w_j^T."""
    W = np.asarray(W, dtype=float)
    d, m = W.shape
    T = np.zeros((d, d))
    for i in range(m):
        wi = W[:, i]
        earlier = W[:, :i].sum(axis=1)
        T += params.alpha2 * np.outer(wi, wi) + params.s2 * np.outer(wi, earlier)
    return T


def compute_T_via_P(W, params: MapParameters) -> np.ndarray:
    W = np.asarray(W, dtype=float)
    defect = float(np.abs(W.sum(axis=1)).max(initial=0.0))
    if defect > ZERO_SUM_TOL:
        raise ZeroSumViolated(f"|W 1|_max = {defect:.3e}")
    return W @ build_P(params, W.shape[1]) @ W.T


def build_C(m: int) -> np.ndarray:
    if m < 2:
        raise BadPeriod(f"period must be at least 2, got {m}")
    i, j = np.indices((m, m))
    A = np.sign(j - i).astype(float)
    B = 2.0 * (j - i)
    return A + epsilon(m + 1) * B


def build_P_tilde(params: MapParameters, m: int) -> np.ndarray:
    """Leading (m-1) x (m-1) block of P after centring with epsilon(m)."""
    if m < 3:
        raise BadPeriod(f"P_tilde needs m >= 3, got {m}")
    P = build_P(params, m)
    eps = epsilon(m)
    J = np.ones((m, m))
    full = P - eps * (J @ P + P @ J) + eps**2 * (J @ P @ J)
    return full[: m - 1, : m - 1]


# ---------------------------------------------------------------------------
# interlacing


@dataclass(frozen=True)
class InterlacingReport:
    m_max: int
    violations: tuple[tuple[int, int, float, float, float], ...]
    min_margin: float

    @property
    def passed(self) -> bool:
        return not self.violations


def check_interlacing(m_max: int, params: MapParameters | None = None) -> InterlacingReport:
    """Scan C(m) against C(m+1) for 2 <= m <= m_max.

    A violation is recorded as ``(m, k, upper, value, lower)`` with 1-based k.
    The scan is numerical evidence only. ``params`` is accepted for interface
    symmetry; C(m) does not depend on the map weights.
    """
    if m_max < 3:
        raise BadPeriod(f"m_max must be at least 3, got {m_max}")
    violations = []
    margin = math.inf
    nxt = skew_deltas(build_C(2))
    for m in range(2, m_max + 1):
        cur = nxt
        nxt = skew_deltas(build_C(m + 1))
        upper = np.append(nxt, 0.0)
        for k in range(m // 2):
            hi, val, lo = upper[k], cur[k], upper[k + 1]
            gap = min(hi - val, val - lo)
            margin = min(margin, gap)
            if not (hi > val > lo >= 0):
                violations.append((m, k + 1, float(hi), float(val), float(lo)))
    return InterlacingReport(m_max, tuple(violations), float(margin))


def _interlaces(eta: np.ndarray, targets: np.ndarray, tol: float) -> bool:
    g, q = eta.size, targets.size
    if q > g:
        return False
    for k in range(q):
        if eta[k] < targets[k] - tol or targets[k] < eta[g - q + k] - tol:
            return False
    return True


def _pad(values: np.ndarray, size: int) -> np.ndarray:
    out = np.zeros(size)
    out[: values.size] = values[:size]
    return out


def p_tilde_spectrum(params: MapParameters, m: int) -> np.ndarray:
    """Imaginary parts of the eigenvalues of P_tilde(m), descending, length ceil((m-1)/2)."""
    Pt = build_P_tilde(params, m)
    return skew_deltas(Pt - params.mu * np.eye(m - 1))


def find_sequence_length(omega_hat, r: int, params: MapParameters, *, n: int | None = None,
                         m_cap: int | None = None, tol: float = 1e-9) -> tuple[int, np.ndarray]:
    """Smallest m >= r + 1 whose P_tilde spectrum interlaces the targets.

    Uses the admissibility test of the principal-submatrix embedding with
    p = m - 1. The targets must hold ``floor(r / 2)`` values sorted in
    descending order.
    """
    targets = np.asarray(omega_hat, dtype=float).ravel()
    if np.any(targets < 0) or np.any(np.diff(targets) > 0):
        raise TargetsInfeasible("targets must be non-negative and sorted descending")
    if targets.size != r // 2:
        raise TargetsInfeasible(f"expected {r // 2} targets for rank {r}, got {targets.size}")
    if m_cap is None:
        m_cap = max(64 * (n if n is not None else max(1, (r + 1) // 2)), 512)
    slack = tol * max(1.0, float(targets.max(initial=0.0)))
    for m in range(max(r + 1, 3), m_cap + 1):
        eta = p_tilde_spectrum(params, m)
        if _interlaces(eta, targets, slack):
            return m, eta
    raise SearchExhausted(f"no period up to {m_cap} interlaces targets {targets.tolist()}")


# ---------------------------------------------------------------------------
# principal-submatrix embedding


def _block_deltas(D: np.ndarray) -> np.ndarray:
    """Deltas of a matrix already in 2x2 skew block-diagonal form."""
    s = D.shape[0]
    if s % 2:
        raise InterlacingViolated("block-diagonal matrix must have even size")
    expect = np.zeros_like(D)
    deltas = np.array([D[2 * j + 1, 2 * j] for j in range(s // 2)])
    for j, d in enumerate(deltas):
        expect[2 * j : 2 * j + 2, 2 * j : 2 * j + 2] = [[0, -d], [d, 0]]
    if s and np.abs(D - expect).max() > 1e-12 * max(1.0, np.abs(D).max()):
        raise InterlacingViolated("matrix is not in 2x2 skew block-diagonal form")
    if np.any(deltas < 0):
        raise InterlacingViolated("block deltas must be non-negative")
    return deltas


def _blockdiag(deltas) -> np.ndarray:
    deltas = np.asarray(deltas, dtype=float)
    D = np.zeros((2 * deltas.size, 2 * deltas.size))
    for j, d in enumerate(deltas):
        D[2 * j, 2 * j + 1] = -d
        D[2 * j + 1, 2 * j] = d
    return D


def calc_ps_matrix(D, omega_hat, tol: float = 1e-9) -> np.ndarray:
    """Block-diagonal principal submatrix two sizes smaller that keeps the targets reachable.

    ``nu_j`` is taken from ``[lo_j, hi_j]`` where ``lo_j = max(gamma_{j+1},
    w_j)`` and ``hi_j = min(gamma_j, w_{j-R})`` with ``R = g - 1 - q``. It is
    the largest target inside the interval, or ``lo_j`` when none fits.
    """
    D = np.asarray(D, dtype=float)
    targets = np.asarray(omega_hat, dtype=float).ravel()
    t = D.shape[0]
    g = (t + 1) // 2
    q = targets.size
    gamma = _pad(skew_deltas(D), g)
    slack = tol * max(1.0, float(gamma.max(initial=0.0)))
    if q > g - 1:
        raise TargetsInfeasible(f"{q} targets do not fit a {2 * (g - 1)}-dimensional submatrix")
    if not _interlaces(gamma, targets, slack):
        raise TargetsInfeasible(f"targets {targets.tolist()} do not interlace {gamma.tolist()}")
    R = g - 1 - q
    nu = np.empty(g - 1)
    for j in range(g - 1):  # 0-based: gamma[j] >= nu[j] >= gamma[j+1]
        lo = gamma[j + 1]
        hi = gamma[j]
        if j < q:
            lo = max(lo, targets[j])
        if j >= R:
            hi = min(hi, targets[j - R])
        inside = [w for w in targets if lo - slack <= w <= hi + slack]
        nu[j] = max([lo] + inside)
    return _blockdiag(nu)


def _log_ratio_product(num: np.ndarray, den: np.ndarray) -> float:
    """prod(num) / prod(den) evaluated through logs to avoid overflow."""
    if np.any(num == 0):
        return 0.0
    if np.any(den == 0):
        raise InterlacingViolated("coincident sub-spectrum values after deflation")
    sign = np.prod(np.sign(num)) * np.prod(np.sign(den))
    return float(sign * math.exp(np.sum(np.log(np.abs(num))) - np.sum(np.log(np.abs(den)))))


def _deflate(delta: np.ndarray, zeta: np.ndarray, tol: float):
    """Split off sub-spectrum values that coincide with a spectrum value."""
    d_order = np.argsort(-delta, kind="stable")
    z_order = np.argsort(-zeta, kind="stable")
    i = j = 0
    d_keep, z_keep = [], []
    while i < d_order.size and j < z_order.size:
        dv, zv = delta[d_order[i]], zeta[z_order[j]]
        if abs(dv - zv) <= tol:
            i += 1
            j += 1
        elif dv > zv:
            d_keep.append(d_order[i])
            i += 1
        else:
            z_keep.append(z_order[j])
            j += 1
    d_keep += list(d_order[i:])
    z_keep += list(z_order[j:])
    return np.array(d_keep, dtype=int), np.array(z_keep, dtype=int)


def calc_theta_sub(D1, D2, tol: float = 1e-8) -> np.ndarray:
    """Orthogonal Theta with ``(Theta^T D1 Theta)[:s, :s] == D2``.

    D2 must be 2x2 skew block-diagonal of size ``s = 2 floor((r - 1) / 2)``
    and its deltas must interlace those of D1. The method builds a bordered
    matrix with D2 in the corner and the spectrum of D1, then maps both to
    the same canonical block form.
    """
    D1 = np.asarray(D1, dtype=float)
    D2 = np.asarray(D2, dtype=float)
    r = D1.shape[0]
    s = 2 * ((r - 1) // 2)
    if D2.shape != (s, s):
        raise InterlacingViolated(f"D2 must be {s}x{s} for r={r}, got {D2.shape}")
    zeta = _block_deltas(D2)
    spec1 = skew_block_diagonalize(D1)
    a = r // 2  # number of genuine 2x2 blocks in D1
    delta = _pad(spec1.deltas, a)
    scale = max(1.0, float(delta.max(initial=0.0)))
    slack = 1e-9 * scale

    d_sorted = np.sort(delta)[::-1]
    z_sorted = np.sort(zeta)[::-1]
    for k, zv in enumerate(z_sorted):
        lower = d_sorted[k + 1] if k + 1 < a else 0.0
        if zv > d_sorted[k] + slack or zv < lower - slack:
            raise InterlacingViolated(
                f"sub-spectrum {z_sorted.tolist()} does not interlace {d_sorted.tolist()}"
            )

    d_idx, z_idx = _deflate(delta, zeta, slack)
    dd = delta[d_idx] ** 2
    zz = zeta[z_idx] ** 2
    w = np.zeros(zeta.size)
    neg_tol = 1e-12 * scale**2
    for pos, j in enumerate(z_idx):
        others = np.delete(zz, pos)
        num = dd - zz[pos]
        den = others - zz[pos]
        if r % 2:
            val = _log_ratio_product(num, den)
        else:
            if zz[pos] == 0:
                raise InterlacingViolated("zero sub-spectrum value left after deflation")
            val = -_log_ratio_product(num, np.append(den, zz[pos]))
        if val < -neg_tol:
            raise InterlacingViolated(f"negative border weight {val:.3e}")
        w[j] = max(val, 0.0)

    z = np.repeat(np.sqrt(0.5 * w), 2)
    Dbar = np.zeros((r, r))
    Dbar[:s, :s] = D2
    Dbar[:s, r - 1] = z
    Dbar[r - 1, :s] = -z
    if r % 2 == 0:
        z0 = _log_ratio_product(np.sqrt(dd), np.sqrt(zz)) if dd.size else 0.0
        Dbar[r - 2, r - 1] = z0
        Dbar[r - 1, r - 2] = -z0

    specb = skew_block_diagonalize(Dbar)
    theta = spec1.theta @ specb.theta.T
    resid = float(np.abs((theta.T @ D1 @ theta)[:s, :s] - D2).max(initial=0.0))
    if resid > tol * scale:
        raise ConvergenceFailure(f"embedded submatrix residual {resid:.3e}")
    return theta


def calc_theta(C, omega_hat, tol: float = 1e-9) -> np.ndarray:
    """Orthogonal Theta whose leading 2q x 2q block of Theta^T C Theta is
    ``blockdiag([[0, -w_k], [w_k, 0]])``.

    The targets must be sorted descending and satisfy
    ``eta_k >= w_k >= eta_{ceil(p/2) - q + k}``.
    """
    C = np.asarray(C, dtype=float)
    p = C.shape[0]
    targets = np.asarray(omega_hat, dtype=float).ravel()
    q = targets.size
    if 2 * q > p:
        raise InterlacingViolated(f"{q} targets need p >= {2 * q}, got p={p}")
    if np.any(targets < 0) or np.any(np.diff(targets) > 0):
        raise InterlacingViolated("targets must be non-negative and sorted descending")
    eta = skew_deltas(C)
    slack = tol * max(1.0, float(eta.max(initial=0.0)))
    if not _interlaces(eta, targets, slack):
        raise InterlacingViolated(f"targets {targets.tolist()} do not interlace {eta.tolist()}")
    if p == 2 * q:
        return skew_block_diagonalize(C).theta
    theta = np.eye(p)
    D_prev = C
    for _ in range((p + 1) // 2 - q):
        D_next = calc_ps_matrix(D_prev, targets, tol=tol)
        sub = calc_theta_sub(D_prev, D_next)
        step = np.eye(p)
        size = sub.shape[0]
        step[:size, :size] = sub
        theta = theta @ step
        D_prev = D_next
    return theta


# ---------------------------------------------------------------------------
# exploration matrices


@dataclass(frozen=True)
class ExplorationMatrix:
    """W = U Sigma V^T with period m.

    ``case`` records how the singular values were chosen: ``skew-minimal``
    (m = r + 1, half of the values free), ``skew-free`` (all r values
    free), ``normal`` (values fixed by the target), or ``reference`` (the
    coordinate-wise sequence).
    """

    w: np.ndarray
    m: int
    u_factor: np.ndarray
    sigma: tuple[float, ...]
    v_factor: np.ndarray
    target: TargetSpec | None
    params: MapParameters | None
    omega_hat: tuple[float, ...] = ()
    case: str = ""

    @property
    def n(self) -> int:
        return self.w.shape[0] // 2

    def zero_sum_defect(self) -> float:
        return float(np.abs(self.w.sum(axis=1)).max(initial=0.0))

    def reconstruction_residual(self) -> float:
        if self.target is None or self.params is None:
            raise ValueError("no target attached")
        T = self.target.materialize()
        return float(np.abs(compute_T_direct(self.w, self.params) - T).max())

    def save(self, path) -> None:
        p = self.params or MapParameters.two_point()
        save_w(path, self.w, p)


def save_w(path, W, params: MapParameters) -> None:
    W = np.asarray(W, dtype=float)
    header = f"# ncmap W n={W.shape[0] // 2} m={W.shape[1]} alpha1={params.alpha1!r} alpha2={params.alpha2!r}\n"
    rows = (" ".join(format(v, ".17g") for v in row) for row in W)
    Path(path).write_text(header + "\n".join(rows) + "\n")


def load_w(path) -> tuple[np.ndarray, dict[str, float]]:
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith("# ncmap W"):
        raise ValueError(f"{path}: missing '# ncmap W' header")
    meta: dict[str, float] = {}
    for token in lines[0].split()[3:]:
        key, _, value = token.partition("=")
        meta[key] = float(value)
    W = np.array([[float(v) for v in ln.split()] for ln in lines[1:] if ln.strip()])
    if W.shape != (2 * int(meta["n"]), int(meta["m"])):
        raise ValueError(f"{path}: header says {meta} but matrix is {W.shape}")
    return W, meta


def reference_coordinate_sequence(n: int) -> ExplorationMatrix:
    """The 4n-periodic coordinate-wise sequence (one coordinate per block of 4)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    m = 4 * n
    W = np.zeros((2 * n, m))
    ubar = (1.0, 0.0, -1.0, 0.0)
    vbar = (0.0, 1.0, 0.0, -1.0)
    for ell in range(m):
        i = (ell // 4) % n
        W[i, ell] = ubar[ell % 4]
        W[n + i, ell] = vbar[ell % 4]
    U, s, Vt = np.linalg.svd(W)
    return ExplorationMatrix(W, m, U, tuple(s), Vt.T, None, None, case="reference")


def _pair_permutation(order: np.ndarray, p: int) -> np.ndarray:
    """Permutation R with column pair l equal to unit pair order[l], padded with I."""
    R = np.eye(p)
    q = order.size
    R[: 2 * q, : 2 * q] = 0.0
    for ell, pos in enumerate(order):
        R[2 * pos, 2 * ell] = 1.0
        R[2 * pos + 1, 2 * ell + 1] = 1.0
    return R


def construct_W(target: TargetSpec, params: MapParameters, sigma_free: Sequence[float] = (),
                *, m_cap: int | None = None) -> ExplorationMatrix:
    """Build W with ``W 1 = 0`` and ``T(W) = T_d``.

    In the skew regime ``sigma_free`` may hold r/2 values (period r + 1, the
    partner values are computed), r values (free singular values, period from
    the interlacing search) or nothing (balanced minimal-period choice). In
    the normal regime the singular values are fixed by the target and
    ``sigma_free`` must be empty or agree with them.
    """
    T = target.materialize(params)
    sigma_free = np.asarray(sigma_free, dtype=float).ravel()
    if sigma_free.size and (np.any(sigma_free <= 0) or not np.all(np.isfinite(sigma_free))):
        raise IncompatibleParams("singular values must be positive and finite")

    r = numerical_rank(T)
    if r == 0:
        raise IncompatibleParams("target has rank 0")
    if r % 2:
        raise IncompatibleParams(f"odd target rank {r} is not supported")
    spec = skew_block_diagonalize(T) if params.skew_regime else normal_block_diagonalize(T)
    if spec.singles or 2 * len(spec.pairs) != r:
        raise IncompatibleParams(
            f"target rank {r} does not match its block structure ({len(spec.pairs)} blocks, "
            f"{len(spec.singles)} unpaired real eigenvalues)"
        )
    q = r // 2
    gam = spec.gammas
    dlt = spec.deltas
    U = spec.theta

    if params.skew_regime:
        if sigma_free.size == q or sigma_free.size == 0:
            m = r + 1
            omega = p_tilde_spectrum(params, m)[:q]
            if np.any(omega <= 0):
                raise IncompatibleParams("minimal period spectrum has a zero value")
            if sigma_free.size:
                odd = sigma_free
                even = dlt / (omega * odd)
                case = "skew-minimal"
            else:
                odd = even = np.sqrt(dlt / omega)
                case = "skew-minimal"
            sigma = np.column_stack([odd, even]).ravel()
            omega_hat = omega.copy()
        elif sigma_free.size == r:
            sigma = sigma_free
            omega_hat = dlt / (sigma[0::2] * sigma[1::2])
            m = None
            case = "skew-free"
        else:
            raise IncompatibleParams(
                f"skew target of rank {r} takes {q} or {r} singular values, got {sigma_free.size}"
            )
    else:
        ratio = gam / params.mu
        if np.any(ratio <= 0):
            raise IncompatibleParams("gamma / mu must be positive for every block")
        sig = np.sqrt(ratio)
        sigma = np.repeat(sig, 2)
        if sigma_free.size and (sigma_free.size != r or np.abs(sigma_free - sigma).max() > 1e-9):
            raise IncompatibleParams(f"singular values are fixed by the target: {sigma.tolist()}")
        omega_hat = dlt * params.mu / gam
        m = None
        case = "normal"

    order = np.argsort(-omega_hat, kind="stable")
    sorted_targets = omega_hat[order]
    if m is None:
        m, _ = find_sequence_length(sorted_targets, r, params, n=target.n, m_cap=m_cap)
    p = m - 1

    K = build_P_tilde(params, m) - params.mu * np.eye(p)
    K = 0.5 * (K - K.T)
    theta_sorted = calc_theta(K, sorted_targets)
    # rank[l] = position of block l in the sorted order
    rank = np.empty(q, dtype=int)
    rank[order] = np.arange(q)
    theta = theta_sorted @ _pair_permutation(rank, p)

    eps = epsilon(m)
    ones = np.ones((p, 1))
    V = np.zeros((m, m))
    V[:p, :p] = theta - eps * ones @ (ones.T @ theta)
    V[p, :p] = -(m**-0.5) * (ones.T @ theta).ravel()
    V[:, p] = m**-0.5

    d = 2 * target.n
    Sigma = np.zeros((d, m))
    Sigma[np.arange(r), np.arange(r)] = sigma
    W = U @ Sigma @ V.T

    em = ExplorationMatrix(
        w=W, m=m, u_factor=U, sigma=tuple(float(x) for x in sigma), v_factor=V,
        target=target, params=params, omega_hat=tuple(float(x) for x in omega_hat), case=case,
    )
    if orthogonality_defect(V) > 1e-9:
        raise ConvergenceFailure("V lost orthogonality")
    zs = em.zero_sum_defect()
    if zs > ZERO_SUM_TOL:
        raise ConvergenceFailure(f"|W 1|_max = {zs:.3e}")
    recon = float(np.abs(compute_T_direct(W, params) - T).max())
    if recon > RECON_TOL:
        raise ConvergenceFailure(f"reconstruction residual {recon:.3e} exceeds {RECON_TOL:g}")
    return em
