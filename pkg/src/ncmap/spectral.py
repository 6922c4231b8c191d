"""Orthogonal block-diagonalization of real skew-symmetric and real normal matrices.

Both routines return a :class:`BlockSpectrum` holding an orthogonal ``theta``
with ``theta.T @ M @ theta`` block diagonal. Every 2x2 block has the form
``[[gamma, -delta], [delta, gamma]]`` with ``delta >= 0``. Real eigenvalue
pairs become blocks with ``delta = 0``. Zero eigenvalues are collected at the
end as 1x1 blocks.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

__all__ = [
    "BlockSpectrum",
    "ConvergenceFailure",
    "NotNormal",
    "NotSkewSymmetric",
    "TIE_TOL",
    "TOL_BLOCK",
    "TOL_ORTH",
    "normal_block_diagonalize",
    "orthogonality_defect",
    "skew_block_diagonalize",
    "skew_deltas",
]

TOL_ORTH = 1e-9
TOL_BLOCK = 1e-8
TIE_TOL = 1e-10


class NotSkewSymmetric(ValueError):
    pass


class NotNormal(ValueError):
    pass


class ConvergenceFailure(ArithmeticError):
    pass


@dataclass(frozen=True)
class BlockSpectrum:
    """Real block form ``theta.T @ M @ theta = block_matrix()``.

    ``singles`` holds nonzero real eigenvalues that could not be paired. They
    sit between the 2x2 blocks and the trailing zeros. Skew-symmetric input
    never produces any.
    """

    theta: np.ndarray
    pairs: tuple[tuple[float, float], ...]
    zero_count: int
    singles: tuple[float, ...] = ()

    @property
    def size(self) -> int:
        return self.theta.shape[0]

    @property
    def deltas(self) -> np.ndarray:
        return np.array([d for _, d in self.pairs], dtype=float)

    @property
    def gammas(self) -> np.ndarray:
        return np.array([g for g, _ in self.pairs], dtype=float)

    def padded_deltas(self) -> np.ndarray:
        """Deltas padded with zeros to ``ceil(size / 2)`` entries."""
        out = np.zeros((self.size + 1) // 2)
        d = self.deltas
        out[: d.size] = d
        return out

    def block_matrix(self) -> np.ndarray:
        p = self.size
        out = np.zeros((p, p))
        i = 0
        for gamma, delta in self.pairs:
            out[i : i + 2, i : i + 2] = [[gamma, -delta], [delta, gamma]]
            i += 2
        for value in self.singles:
            out[i, i] = value
            i += 1
        return out


def orthogonality_defect(M) -> float:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    return float(np.abs(M.T @ M - np.eye(M.shape[0])).max(initial=0.0))


def skew_deltas(C) -> np.ndarray:
    """Imaginary parts of the eigenvalues of a skew matrix, descending.

    Returns ``ceil(p / 2)`` values (a trailing zero for odd ``p``). The
    singular values of a real skew matrix come in equal pairs, so this only
    needs an SVD and never forms eigenvectors.
    """
    C = np.asarray(C, dtype=float)
    p = C.shape[0]
    if p == 0:
        return np.zeros(0)
    try:
        s = scipy.linalg.svdvals(C)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc
    return np.sort(s)[::-1][0::2].copy()


def _schur(M: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if not np.all(np.isfinite(M)):
        raise ConvergenceFailure("matrix has non-finite entries")
    try:
        T, Z = scipy.linalg.schur(M, output="real")
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise ConvergenceFailure(str(exc)) from exc
    return T, Z


def _cluster(values: list[float]) -> dict[int, float]:
    # Snap values closer than TIE_TOL onto a shared representative so that the
    # sort falls back to the next key instead of rounding noise.
    order = sorted(range(len(values)), key=lambda i: -values[i])
    rep: dict[int, float] = {}
    current = None
    for i in order:
        if current is None or current - values[i] >= TIE_TOL:
            current = values[i]
        rep[i] = current
    return rep


def _block_form(M: np.ndarray, skew: bool) -> BlockSpectrum:
    p = M.shape[0]
    if p == 0:
        return BlockSpectrum(np.zeros((0, 0)), (), 0)
    T, Z = _schur(M)
    scale = float(np.abs(M).max())
    zero_tol = 1e-10 * scale

    pairs = []  # (gamma, delta, col_a, col_b, first index)
    reals = []  # (value, col, index)
    zero_cols = []
    i = 0
    while i < p:
        if i + 1 < p and T[i + 1, i] != 0.0:
            a, b, c, d = T[i, i], T[i, i + 1], T[i + 1, i], T[i + 1, i + 1]
            gamma = 0.5 * (a + d)
            delta = 0.5 * (c - b)
            ca, cb = Z[:, i], Z[:, i + 1]
            if delta < 0:
                ca, cb = cb, ca
                delta = -delta
            if abs(gamma) <= zero_tol and delta <= zero_tol:
                zero_cols += [ca, cb]
            else:
                pairs.append((0.0 if skew else gamma, delta, ca, cb, i))
            i += 2
        else:
            value = T[i, i]
            if abs(value) <= zero_tol:
                zero_cols.append(Z[:, i])
            else:
                reals.append((value, Z[:, i], i))
            i += 1

    # equal real eigenvalues pair up into delta = 0 blocks
    singles = []
    reals.sort(key=lambda t: -t[0])
    j = 0
    while j < len(reals):
        if j + 1 < len(reals) and abs(reals[j][0] - reals[j + 1][0]) <= max(zero_tol, TIE_TOL):
            v = 0.5 * (reals[j][0] + reals[j + 1][0])
            pairs.append((v, 0.0, reals[j][1], reals[j + 1][1], min(reals[j][2], reals[j + 1][2])))
            j += 2
        else:
            singles.append(reals[j])
            j += 1
    if skew and singles:
        raise ConvergenceFailure("skew input produced an unpaired real eigenvalue")

    drep = _cluster([t[1] for t in pairs])
    grep = _cluster([t[0] for t in pairs])
    order = sorted(range(len(pairs)), key=lambda k: (-drep[k], -grep[k], pairs[k][4]))
    singles.sort(key=lambda t: (-t[0], t[2]))

    cols = []
    for k in order:
        cols += [pairs[k][2], pairs[k][3]]
    cols += [t[1] for t in singles]
    cols += zero_cols
    theta = np.column_stack(cols)
    return BlockSpectrum(
        theta=theta,
        pairs=tuple((float(pairs[k][0]), float(pairs[k][1])) for k in order),
        zero_count=len(zero_cols),
        singles=tuple(float(t[0]) for t in singles),
    )


def _certify(M: np.ndarray, spec: BlockSpectrum, tol_orth: float, tol_block: float) -> None:
    defect = orthogonality_defect(spec.theta)
    if defect > tol_orth:
        raise ConvergenceFailure(f"orthogonality defect {defect:.3e} exceeds {tol_orth:.1e}")
    scale = max(1.0, float(np.abs(M).max(initial=0.0)))
    resid = float(np.abs(spec.theta.T @ M @ spec.theta - spec.block_matrix()).max(initial=0.0))
    if resid > tol_block * scale:
        raise ConvergenceFailure(f"block residual {resid:.3e} exceeds {tol_block * scale:.1e}")


def skew_block_diagonalize(C, tol: float = 1e-10, *, tol_orth: float = TOL_ORTH,
                           tol_block: float = TOL_BLOCK) -> BlockSpectrum:
    C = np.asarray(C, dtype=float)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise NotSkewSymmetric(f"expected a square matrix, got shape {C.shape}")
    asym = float(np.abs(C + C.T).max(initial=0.0))
    if asym > tol * max(1.0, float(np.abs(C).max(initial=0.0))):
        raise NotSkewSymmetric(f"|C + C^T|_max = {asym:.3e}")
    C = 0.5 * (C - C.T)
    spec = _block_form(C, skew=True)
    _certify(C, spec, tol_orth, tol_block)
    return spec


def normal_block_diagonalize(T, tol: float = 1e-10, *, tol_orth: float = TOL_ORTH,
                             tol_block: float = TOL_BLOCK) -> BlockSpectrum:
    T = np.asarray(T, dtype=float)
    if T.ndim != 2 or T.shape[0] != T.shape[1]:
        raise NotNormal(f"expected a square matrix, got shape {T.shape}")
    comm = float(np.abs(T @ T.T - T.T @ T).max(initial=0.0))
    if comm > tol * max(1.0, float(np.abs(T).max(initial=0.0)) ** 2):
        raise NotNormal(f"|T T^T - T^T T|_max = {comm:.3e}")
    spec = _block_form(T, skew=False)
    _certify(T, spec, tol_orth, tol_block)
    return spec
