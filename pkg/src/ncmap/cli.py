"""Command-line front end.

    ncmap <construct|run|simulate|verify> [--config FILE] [--preset N] [--out DIR]
          [--seed S] [--sigma LIST] [key=value ...]

Configs are plain text with one dotted key per line (``map.alpha1 = 0.5``)
and ``#`` comments. Overrides use the same keys; a bare suffix such as
``max_iters=0`` works when it names exactly one key.

Exit codes: 0 ok, 1 verification failure, 2 invalid or incompatible config,
3 construction search exhausted, 4 runtime or numeric failure.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .engine import EngineConfig, NonFiniteObjective, ObjectivePort, RunRecord, run
from .genfun import ConstraintViolation, DomainError, GeneratingPair, WronskianFailed, make_pair
from .sequence import (
    ExplorationMatrix,
    IncompatibleParams,
    InterlacingViolated,
    MapParameters,
    SearchExhausted,
    TargetSpec,
    TargetsInfeasible,
    construct_W,
)
from .spectral import ConvergenceFailure
from .verify import (
    brockett_check,
    catalog_sweep,
    gradient_order_check,
    interlacing_check,
    shoelace_areas,
    shoelace_check,
)

__all__ = [
    "ConfigError",
    "OBJECTIVES",
    "PRESETS",
    "RunConfig",
    "build_objective",
    "load_preset",
    "main",
    "parse_config",
]

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_SEARCH, EXIT_RUNTIME = 0, 1, 2, 3, 4
PRESETS = (1, 2, 3, 4, 5)
SUITES = ("order", "shoelace", "brockett", "catalog", "interlacing")


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# objectives used by the presets


def _quadratic(center):
    c = np.asarray(center, dtype=float)
    return (lambda x: float(np.sum((x - c) ** 2))), (lambda x: 2.0 * (x - c))


def _ripple(center):
    c = np.asarray(center, dtype=float)

    def fn(x):
        return float(np.sum((x - c + 0.5 * np.sin(10 * np.pi * x)) ** 2))

    def grad(x):
        inner = x - c + 0.5 * np.sin(10 * np.pi * x)
        return 2.0 * inner * (1.0 + 5 * np.pi * np.cos(10 * np.pi * x))

    return fn, grad


def _norm(center):
    return (lambda x: float(np.linalg.norm(x))), None


OBJECTIVES: dict[str, Callable] = {"quadratic": _quadratic, "ripple": _ripple, "norm": _norm}


# ---------------------------------------------------------------------------
# configuration


@dataclass
class RunConfig:
    n: int = 2
    alpha1: float = 0.5
    alpha2: float = 0.5
    h0: float = 0.05
    schedule: str = "constant"
    pair_family: str = "H2_sincos"
    pair_params: dict = field(default_factory=dict)
    target_family: str = "H1"
    target_params: dict = field(default_factory=dict)
    sigma: tuple = ()
    objective: str = "quadratic"
    center: tuple = (1.0, 2.0)
    noise_std: float = 0.0
    x0: tuple = (0.0, 1.0)
    max_iters: int = 1000
    max_evals: int | None = None
    j_threshold: float | None = None
    stall_tol: float | None = None
    stall_patience: int = 5
    seed: int | None = None
    out: str = "out"

    @property
    def map_params(self) -> MapParameters:
        return MapParameters(self.alpha1, self.alpha2)

    def target_spec(self) -> TargetSpec:
        params = dict(self.target_params)
        q = params.pop("q", None)
        if self.target_family == "TdE" and "gamma" not in params:
            if len(self.sigma) != 2 * self.n:
                raise IncompatibleParams("TdE without target.gamma needs 2n singular values in design.sigma")
            return TargetSpec.tde_from_sigma(self.n, self.sigma[0::2], self.map_params)
        return TargetSpec(self.target_family, self.n, params, q_matrix=q)

    def pair(self) -> GeneratingPair:
        return make_pair(self.pair_family, self.pair_params)

    def validate(self) -> None:
        """Check everything that can be checked without running the construction."""
        if self.n < 1:
            raise ConfigError("map.n must be at least 1")
        if self.schedule not in ("constant", "harmonic"):
            raise ConfigError(f"map.schedule must be constant or harmonic, got {self.schedule!r}")
        if not self.h0 > 0:
            raise ConfigError("map.h0 must be positive")
        if self.objective not in OBJECTIVES:
            raise ConfigError(f"objective.kind must be one of {sorted(OBJECTIVES)}")
        if len(self.x0) != self.n:
            raise ConfigError(f"run.x0 has {len(self.x0)} entries, expected {self.n}")
        if self.objective != "norm" and len(self.center) != self.n:
            raise ConfigError(f"objective.center has {len(self.center)} entries, expected {self.n}")
        if self.max_iters < 0:
            raise ConfigError("stop.max_iters must be non-negative")
        self.pair()
        self.target_spec().materialize(self.map_params)

    def engine_config(self, w: ExplorationMatrix) -> EngineConfig:
        return EngineConfig(
            w=w, pair=self.pair(), params=self.map_params, h0=self.h0, schedule=self.schedule,
            max_iters=self.max_iters, max_evals=self.max_evals, j_threshold=self.j_threshold,
            stall_tol=self.stall_tol, stall_patience=self.stall_patience,
        )

    def to_text(self) -> str:
        lines = []
        for key, attr, _ in _SCALAR_KEYS:
            lines.append(f"{key} = {_format(getattr(self, attr))}")
            if key == "pair.family":
                lines += [f"pair.{k} = {_format(v)}" for k, v in sorted(self.pair_params.items())]
            if key == "target.family":
                lines += [f"target.{k} = {_format(v)}" for k, v in sorted(self.target_params.items())]
        return "\n".join(lines) + "\n"


def _opt(conv):
    return lambda s: None if s.strip().lower() == "none" else conv(s)


def _floats(s: str) -> tuple:
    s = s.strip()
    if not s:
        return ()
    return tuple(float(t) for t in s.split(","))


def _matrix(s: str) -> tuple:
    return tuple(_floats(row) for row in s.split(";"))


def _param_value(key: str, s: str):
    if key == "q":
        return _matrix(s)
    if "," in s:
        return _floats(s)
    return float(s)


_SCALAR_KEYS: tuple[tuple[str, str, Callable], ...] = (
    ("map.n", "n", int),
    ("map.alpha1", "alpha1", float),
    ("map.alpha2", "alpha2", float),
    ("map.h0", "h0", float),
    ("map.schedule", "schedule", str),
    ("pair.family", "pair_family", str),
    ("target.family", "target_family", str),
    ("design.sigma", "sigma", _floats),
    ("objective.kind", "objective", str),
    ("objective.center", "center", _floats),
    ("objective.noise_std", "noise_std", float),
    ("run.x0", "x0", _floats),
    ("run.seed", "seed", _opt(int)),
    ("run.out", "out", str),
    ("stop.max_iters", "max_iters", int),
    ("stop.max_evals", "max_evals", _opt(int)),
    ("stop.j_threshold", "j_threshold", _opt(float)),
    ("stop.stall_tol", "stall_tol", _opt(float)),
    ("stop.stall_patience", "stall_patience", int),
)
_BY_KEY = {k: (a, c) for k, a, c in _SCALAR_KEYS}


def _format(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, tuple):
        if value and isinstance(value[0], tuple):
            return "; ".join(_format(row) for row in value)
        return ", ".join(repr(float(v)) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _resolve_key(key: str) -> str:
    if key in _BY_KEY or key.startswith(("pair.", "target.")):
        return key
    hits = [k for k in _BY_KEY if k.split(".", 1)[1] == key]
    if len(hits) != 1:
        raise ConfigError(f"unknown config key {key!r}")
    return hits[0]


def apply_setting(cfg: RunConfig, key: str, value: str) -> RunConfig:
    key = _resolve_key(key.strip())
    value = value.strip()
    try:
        if key in _BY_KEY:
            attr, conv = _BY_KEY[key]
            return replace(cfg, **{attr: conv(value)})
        section, name = key.split(".", 1)
        attr = "pair_params" if section == "pair" else "target_params"
        params = dict(getattr(cfg, attr))
        params[name] = _param_value(name, value)
        return replace(cfg, **{attr: params})
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {value!r} ({exc})") from None


def parse_config(text: str, base: RunConfig | None = None) -> RunConfig:
    cfg = base if base is not None else RunConfig()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        cfg = apply_setting(cfg, key, value)
    return cfg


def load_preset(number: int) -> RunConfig:
    if number not in PRESETS:
        raise ConfigError(f"preset must be one of {PRESETS}, got {number}")
    text = resources.files("ncmap.presets").joinpath(f"sim{number}.cfg").read_text()
    return parse_config(text)


def build_objective(cfg: RunConfig, seed: int | None = None) -> ObjectivePort:
    fn, grad = OBJECTIVES[cfg.objective](cfg.center)
    return ObjectivePort(fn, grad, noise_std=cfg.noise_std, seed=cfg.seed if seed is None else seed)


# ---------------------------------------------------------------------------
# subcommands


def _construct(cfg: RunConfig) -> ExplorationMatrix:
    return construct_W(cfg.target_spec(), cfg.map_params, cfg.sigma)


def _summary(em: ExplorationMatrix) -> list[str]:
    return [
        f"m={em.m}",
        "sigma=" + ",".join(f"{s:.12g}" for s in em.sigma),
        f"case={em.case}",
        f"reconstruction_residual={em.reconstruction_residual():.3e}",
        f"zero_sum_defect={em.zero_sum_defect():.3e}",
    ]


def cmd_construct(cfg: RunConfig, out: Path) -> int:
    em = _construct(cfg)
    out.mkdir(parents=True, exist_ok=True)
    em.save(out / "W.txt")
    print("\n".join(_summary(em)))
    return EXIT_OK


def _run_summary(rec: RunRecord, cfg: RunConfig, J: ObjectivePort) -> list[str]:
    lines = [
        f"iterations={rec.iterations}",
        f"stop={rec.stop_reason}",
        "final_x=" + ",".join(f"{v:.12g}" for v in rec.final),
        f"final_J={rec.objective_values[-1]:.12g}",
        f"evaluations={J.eval_count}",
    ]
    if cfg.objective == "quadratic":
        lines.append(f"distance_to_center={np.linalg.norm(rec.final - np.asarray(cfg.center)):.12g}")
    return lines


def _write_plot_data(em: ExplorationMatrix, out: Path) -> None:
    A, corners = shoelace_areas(em)
    d = A.shape[0]
    rows = ["p,q,area"] + [f"{p + 1},{q + 1},{A[p, q]:.17g}" for p in range(d) for q in range(d)]
    (out / "areas.csv").write_text("\n".join(rows) + "\n")
    header = "i," + ",".join(f"s_{j + 1}" for j in range(d))
    rows = [header] + [f"{i}," + ",".join(format(v, ".17g") for v in c) for i, c in enumerate(corners)]
    (out / "partial_sums.csv").write_text("\n".join(rows) + "\n")


def cmd_run(cfg: RunConfig, out: Path, plot_data: bool = False) -> int:
    em = _construct(cfg)
    J = build_objective(cfg)
    rec = run(cfg.engine_config(em), J, cfg.x0)
    out.mkdir(parents=True, exist_ok=True)
    rec.to_csv(out / "trajectory.csv")
    (out / "config.cfg").write_text(cfg.to_text())
    if plot_data:
        em.save(out / "W.txt")
        if cfg.map_params == MapParameters.two_point():
            _write_plot_data(em, out)
    print("\n".join(_summary(em) + _run_summary(rec, cfg, J)))
    return EXIT_RUNTIME if rec.stop_reason == "diverged" else EXIT_OK


def cmd_verify(suite: str, cfg: RunConfig, m_max: int, workers: int) -> int:
    if suite == "interlacing":
        report = interlacing_check(m_max)
    elif suite == "catalog":
        report = catalog_sweep(workers=workers)
    else:
        params = cfg.map_params
        if suite == "shoelace" and params != MapParameters.two_point():
            raise ConfigError("verify shoelace is only defined for alpha = [1/2, 1/2]")
        em = _construct(cfg)
        if suite == "shoelace":
            report = shoelace_check(em)
        elif suite == "brockett":
            report = brockett_check(em, em.target, params)
        else:
            fn, grad = _quadratic(cfg.center)
            report = gradient_order_check(em, cfg.pair(), params, ObjectivePort(fn, grad), cfg.x0)
    print(report.line())
    if report.note:
        print(f"# {report.note}")
    return EXIT_OK if report.passed else EXIT_VERIFY


# ---------------------------------------------------------------------------
# entry point


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="config file (dotted keys)")
    common.add_argument("--preset", type=int, choices=PRESETS, help="simulation preset 1-5")
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--seed", type=int, help="seed for objective noise")
    common.add_argument("--sigma", help="comma-separated singular values (design.sigma)")

    parser = argparse.ArgumentParser(prog="ncmap", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("construct", parents=[common], help="build W and write W.txt")
    sub.add_parser("run", parents=[common], help="construct W and run the optimizer")
    sub.add_parser("simulate", parents=[common], help="run a preset and write plot data")
    v = sub.add_parser("verify", parents=[common], help="run a verification suite")
    v.add_argument("suite", choices=SUITES)
    v.add_argument("--m-max", type=int, default=200, help="largest m for the interlacing scan")
    v.add_argument("--workers", type=int, default=1, help="threads for the catalog sweep")
    return parser


def _load(args) -> RunConfig:
    if args.config is not None:
        cfg = parse_config(args.config.read_text(), load_preset(args.preset) if args.preset else None)
    elif args.preset is not None:
        cfg = load_preset(args.preset)
    elif args.command == "simulate":
        raise ConfigError("simulate needs --preset or --config")
    else:
        cfg = load_preset(1)
    for item in args.overrides:
        cfg = apply_setting(cfg, *item.split("=", 1))
    if args.sigma is not None:
        cfg = apply_setting(cfg, "design.sigma", args.sigma)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.out is not None:
        cfg = replace(cfg, out=str(args.out))
    return cfg


def main(argv: Sequence[str] | None = None) -> int:
    parser = _parser()
    args, extra = parser.parse_known_args(argv)
    bad = [item for item in extra if item.startswith("-") or "=" not in item]
    if bad:
        parser.error(f"unrecognized arguments: {' '.join(bad)}")
    args.overrides = extra
    try:
        cfg = _load(args)
        if args.command != "verify" or args.suite not in ("catalog", "interlacing"):
            cfg.validate()
        out = Path(cfg.out)
        if args.command == "construct":
            return cmd_construct(cfg, out)
        if args.command == "run":
            return cmd_run(cfg, out)
        if args.command == "simulate":
            return cmd_run(cfg, out, plot_data=True)
        return cmd_verify(args.suite, cfg, args.m_max, args.workers)
    except (ConfigError, IncompatibleParams, ConstraintViolation, WronskianFailed, OSError) as exc:
        print(f"ncmap: invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SearchExhausted as exc:
        print(f"ncmap: construction search exhausted: {exc}", file=sys.stderr)
        return EXIT_SEARCH
    except (NonFiniteObjective, ConvergenceFailure, InterlacingViolated, TargetsInfeasible,
            DomainError, ArithmeticError) as exc:
        print(f"ncmap: runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
