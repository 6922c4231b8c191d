"""The optimization loop: transition maps, step-size schedules, stop rules and
bookkeeping of objective evaluations."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .genfun import GeneratingPair, evaluate
from .sequence import ExplorationMatrix, MapParameters

__all__ = [
    "EngineConfig",
    "NonFiniteObjective",
    "ObjectivePort",
    "RunRecord",
    "Schedule",
    "constant_schedule",
    "harmonic_schedule",
    "run",
    "transition_step",
]


class NonFiniteObjective(ArithmeticError):
    pass


class ObjectivePort:
    """Counts calls to a black-box objective and can add seeded Gaussian noise."""

    def __init__(self, fn: Callable[[np.ndarray], float],
                 gradient: Callable[[np.ndarray], np.ndarray] | None = None,
                 noise_std: float = 0.0, seed: int | None = None):
        self._fn = fn
        self.gradient = gradient
        self.noise_std = float(noise_std)
        self._rng = np.random.default_rng(seed) if self.noise_std > 0 else None
        self.eval_count = 0

    def evaluate(self, x) -> float:
        self.eval_count += 1
        value = float(self._fn(np.asarray(x, dtype=float)))
        if self._rng is not None:
            value += self.noise_std * float(self._rng.standard_normal())
        return value

    __call__ = evaluate


@dataclass(frozen=True)
class Schedule:
    h0: float
    period: int = 1
    harmonic: bool = False

    def __call__(self, k: int) -> float:
        if not self.harmonic:
            return self.h0
        return self.h0 / (k // self.period + 1)


def constant_schedule(h0: float) -> Schedule:
    if not h0 > 0:
        raise ValueError(f"h0 must be positive, got {h0}")
    return Schedule(float(h0))


def harmonic_schedule(h0: float, m: int) -> Schedule:
    """h_k = h0 / (floor(k / m) + 1), constant over each period."""
    if not h0 > 0:
        raise ValueError(f"h0 must be positive, got {h0}")
    if m < 1:
        raise ValueError(f"m must be at least 1, got {m}")
    return Schedule(float(h0), int(m), True)


def _matrix(W) -> np.ndarray:
    return W.w if isinstance(W, ExplorationMatrix) else np.asarray(W, dtype=float)


def _checked(value: float) -> float:
    if not math.isfinite(value):
        raise NonFiniteObjective(f"objective returned {value}")
    return value


def _direction(pair: GeneratingPair, jval: float, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    f, g, _, _ = evaluate(pair, jval)
    return f * u + g * v


def transition_step(x, k: int, W, pair: GeneratingPair, params: MapParameters, h: float,
                    J: ObjectivePort, jx: float | None = None) -> np.ndarray:
    """One map x_k -> x_{k+1} using column k mod m of W.

    ``jx`` lets the caller pass a cached J(x_k). When it is omitted J(x_k) is
    evaluated here.
    """
    if not h > 0:
        raise ValueError(f"step size must be positive, got {h}")
    Wm = _matrix(W)
    x = np.asarray(x, dtype=float)
    n = x.size
    if Wm.shape[0] != 2 * n:
        raise ValueError(f"W has {Wm.shape[0]} rows, expected {2 * n}")
    col = Wm[:, k % Wm.shape[1]]
    u, v = col[:n], col[n:]
    rh = math.sqrt(h)
    if jx is None:
        jx = J.evaluate(x)
    s_now = _direction(pair, _checked(jx), u, v)
    step = params.alpha1 * s_now
    if params.alpha2 != 0:
        x_hat = x + rh * s_now
        step = step + params.alpha2 * _direction(pair, _checked(J.evaluate(x_hat)), u, v)
    return x + rh * step


@dataclass(frozen=True)
class EngineConfig:
    w: ExplorationMatrix | np.ndarray
    pair: GeneratingPair
    params: MapParameters
    h0: float = 0.05
    schedule: str = "constant"
    max_iters: int = 10_000
    max_evals: int | None = None
    j_threshold: float | None = None
    stall_tol: float | None = None
    stall_patience: int = 5

    def make_schedule(self) -> Schedule:
        m = _matrix(self.w).shape[1]
        if self.schedule == "constant":
            return constant_schedule(self.h0)
        if self.schedule == "harmonic":
            return harmonic_schedule(self.h0, m)
        raise ValueError(f"unknown schedule {self.schedule!r}")


@dataclass(frozen=True)
class RunRecord:
    iterates: np.ndarray
    objective_values: np.ndarray
    h_trace: np.ndarray
    evals_per_iter: int
    stop_reason: str
    evals_cum: np.ndarray

    @property
    def iterations(self) -> int:
        return self.iterates.shape[0] - 1

    @property
    def final(self) -> np.ndarray:
        return self.iterates[-1]

    def to_csv(self, path=None) -> str:
        n = self.iterates.shape[1]
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["k", *[f"x_{i + 1}" for i in range(n)], "J", "h", "evals_cum"])
        for k in range(self.iterates.shape[0]):
            h = self.h_trace[k] if k < self.h_trace.size else float("nan")
            writer.writerow([k, *(format(v, ".17g") for v in self.iterates[k]),
                             format(self.objective_values[k], ".17g"), format(h, ".17g"),
                             int(self.evals_cum[k])])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


def run(config: EngineConfig, J: ObjectivePort, x0: Sequence[float]) -> RunRecord:
    """Iterate until a stop rule fires.

    Rules, checked before every step: iteration budget, evaluation budget,
    objective threshold, and stall (the iterate moved less than ``stall_tol``
    over a whole period for ``stall_patience`` consecutive periods). A
    non-finite objective ends the run with ``stop_reason = "diverged"``.

    Each recorded iterate has its objective value. That costs one evaluation
    for x0 plus ``evals_per_iter`` per step, and J(x_k) is reused inside the
    next step.
    """
    Wm = _matrix(config.w)
    m = Wm.shape[1]
    x = np.asarray(x0, dtype=float).copy()
    n = x.size
    sched = config.make_schedule()
    per_iter = config.params.evals_per_iter
    stall_tol = config.stall_tol if config.stall_tol is not None else 1e-6 * math.sqrt(n)

    iterates = [x.copy()]
    h_trace = []
    stop = "max_iters"
    try:
        jx = _checked(J.evaluate(x))
    except NonFiniteObjective:
        return RunRecord(np.array(iterates), np.array([math.nan]), np.array([sched(0)]),
                         per_iter, "diverged", np.array([J.eval_count]))
    values = [jx]
    counts = [J.eval_count]
    stalled = 0
    k = 0
    while True:
        if k >= config.max_iters:
            stop = "max_iters"
            break
        if config.max_evals is not None and J.eval_count + per_iter > config.max_evals:
            stop = "max_evals"
            break
        if config.j_threshold is not None and jx <= config.j_threshold:
            stop = "threshold"
            break
        if k >= m and k % m == 0:
            if np.linalg.norm(iterates[k] - iterates[k - m]) < stall_tol:
                stalled += 1
                if stalled >= config.stall_patience:
                    stop = "stalled"
                    break
            else:
                stalled = 0
        h = sched(k)
        try:
            x = transition_step(x, k, Wm, config.pair, config.params, h, J, jx=jx)
            if not np.all(np.isfinite(x)):
                raise NonFiniteObjective("iterate left the finite range")
            jx = _checked(J.evaluate(x))
        except NonFiniteObjective:
            h_trace.append(h)
            stop = "diverged"
            break
        h_trace.append(h)
        iterates.append(x.copy())
        values.append(jx)
        counts.append(J.eval_count)
        k += 1

    if len(h_trace) < len(iterates):
        h_trace.append(sched(len(iterates) - 1))
    return RunRecord(
        iterates=np.array(iterates),
        objective_values=np.array(values),
        h_trace=np.array(h_trace[: len(iterates)]),
        evals_per_iter=per_iter,
        stop_reason=stop,
        evals_cum=np.array(counts),
    )
