"""Compute reference values with routes that do not touch the package, then
freeze them to tests/data/oracles.json.

Sequence lengths come from the closed-form spectrum (s^2 / 2) cot(k pi / m) of
the reduced skew matrix and a plain-Python interlacing test. Target deltas come
from numpy.linalg.eigvals rather than the Schur route the package uses.

The reference runs at the bottom pin the convergence neighbourhood used by the
acceptance test. They do use the package: they record what the engine does,
they do not certify it.

    python3 scripts/freeze_oracles.py [--check]
"""
from __future__ import annotations

import argparse
import json
import math
from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parents[1] / "tests" / "data" / "oracles.json"


def antidiag(n):
    Q = np.zeros((n, n))
    for i in range(n):
        Q[i, n - 1 - i] = 1.0 if i > n - 1 - i else (-1.0 if i < n - 1 - i else 0.0)
    return Q


def target(family, n, **kw):
    I, Z, Q = np.eye(n), np.zeros((n, n)), antidiag(n)
    if family == "H1":
        return np.block([[Z, -I], [I, Z]])
    if family == "H2":
        return np.block([[kw.get("a", 1.0) * Q, -I], [I, kw.get("b", 1.0) * Q]])
    if family == "TdE":
        D = np.diag(kw["gamma"])
        return np.block([[D, -I], [I, D]])
    raise KeyError(family)


def block_pairs(T):
    """(gamma, delta) per conjugate pair, delta descending, from plain eigvals."""
    ev = np.linalg.eigvals(T)
    ev = [z for z in ev if abs(z) > 1e-9 and z.imag > 1e-12]
    return sorted(((z.real, z.imag) for z in ev), key=lambda t: -t[1])


def closed_form_eta(m, s2):
    p = m - 1
    g = (p + 1) // 2
    return [0.5 * s2 / math.tan(k * math.pi / m) if 2 * k != m else 0.0 for k in range(1, g + 1)]


def minimal_period(targets, r, s2, cap=5000):
    t = sorted(targets, reverse=True)
    q = len(t)
    for m in range(r + 1, cap):
        eta = closed_form_eta(m, s2)
        g = len(eta)
        if q > g:
            continue
        tol = 1e-9 * max(1.0, t[0])
        if all(eta[k] >= t[k] - tol and t[k] >= eta[g - q + k] - tol for k in range(q)):
            return m
    raise RuntimeError("no period found")


def skew_free_targets(T, sigma):
    deltas = [d for _, d in block_pairs(T)]
    return [d / (sigma[2 * k] * sigma[2 * k + 1]) for k, d in enumerate(deltas)]


def sequence_lengths():
    s2_two = 1.0  # (alpha1 + alpha2)^2 for both schemes used here
    cases = {
        "sim1": (target("H1", 2), (1, 1, 1, 1), s2_two),
        "sim1_elongated": (target("H1", 2), (1.5, 0.2, 1.5, 0.2), s2_two),
        "sim2": (target("H2", 2), (2, 2), s2_two),
        "sim2_small": (target("H2", 2), (0.2, 0.2), s2_two),
        "sim4": (target("H2", 2), (1, 1), s2_two),
        "sim5": (target("H2", 2), (0.4, 0.4), s2_two),
    }
    out = {}
    for name, (T, sigma, s2) in cases.items():
        r = int(np.linalg.matrix_rank(T))
        out[name] = minimal_period(skew_free_targets(T, sigma), r, s2)
    # single-point scheme, diagonal normal target: gamma = mu sigma^2 and the
    # embedded targets are delta mu / gamma
    mu = 0.0 - 0.5
    sig = (1.0, 1.0)
    T = target("TdE", 2, gamma=[mu * s * s for s in sig])
    targets = [d * mu / g for g, d in block_pairs(T)]
    out["sim3"] = minimal_period(targets, int(np.linalg.matrix_rank(T)), 1.0)
    return out


def coordinate_sequence_T():
    # n = 1 sequence u = (1, 0, -1, 0), v = (0, 1, 0, -1), literal double sum
    W = np.array([[1.0, 0.0, -1.0, 0.0], [0.0, 1.0, 0.0, -1.0]])
    out = {}
    for name, (a1, a2) in {"single_point": (1.0, 0.0), "two_point": (0.5, 0.5)}.items():
        s2 = (a1 + a2) ** 2
        T = np.zeros((2, 2))
        for i in range(4):
            T += a2 * np.outer(W[:, i], W[:, i])
            for j in range(i):
                T += s2 * np.outer(W[:, i], W[:, j])
        out[name] = T.tolist()
    return out


def reference_runs():
    from dataclasses import replace

    from ncmap.cli import _construct, build_objective, load_preset
    from ncmap.engine import run

    out = {}
    for preset in (1, 2, 3):
        cfg = load_preset(preset)
        em = _construct(cfg)
        rec = run(cfg.engine_config(em), build_objective(cfg), cfg.x0)
        d = np.linalg.norm(rec.iterates - np.asarray(cfg.center), axis=1)
        out[f"sim{preset}"] = {
            "iterations": rec.iterations,
            "final_distance": float(d[-1]),
            "last_period_max_distance": float(d[-em.m:].max()),
        }
    cfg = load_preset(1)
    em = _construct(replace(cfg, sigma=(1.5, 0.2, 1.5, 0.2)))
    rec = run(cfg.engine_config(em), build_objective(cfg), cfg.x0)
    out["sim1_elongated"] = {"iterations": rec.iterations,
                             "final_distance": float(np.linalg.norm(rec.final - np.asarray(cfg.center)))}
    return out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--check", action="store_true", help="compare with the frozen file instead of writing")
    args = ap.parse_args()
    data = {
        "sequence_lengths": sequence_lengths(),
        "coordinate_sequence_T": coordinate_sequence_T(),
        "reference_runs": reference_runs(),
        "convergence_radius": 0.25,
    }
    if args.check:
        frozen = json.loads(OUT.read_text())
        same = frozen["sequence_lengths"] == data["sequence_lengths"]
        print("sequence lengths", "match" if same else "DIFFER", data["sequence_lengths"])
        return
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    print(json.dumps(data, indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
