"""Fitted log-log slope of the m-step error against x0 - h grad J(x0) on
several step grids, to separate pre-asymptotic behaviour from the h^{3/2}
remainder.

    python3 scripts/order_study.py
"""
import numpy as np

from ncmap.engine import ObjectivePort
from ncmap.genfun import make_pair
from ncmap.sequence import MapParameters, TargetSpec, construct_W
from ncmap.verify import gradient_order_check

CENTER = np.array([1.0, 2.0])
GRIDS = [(0.1, 0.05, 0.025, 0.0125), (1e-3, 5e-4, 2.5e-4, 1.25e-4), (1e-5, 5e-6, 2.5e-6, 1.25e-6)]


def port():
    return ObjectivePort(lambda x: float(np.sum((x - CENTER) ** 2)), lambda x: 2 * (x - CENTER))


def main():
    two, one = MapParameters.two_point(), MapParameters.single_point()
    triples = {
        "sim1": (construct_W(TargetSpec("H1", 2), two, (1, 1, 1, 1)), make_pair("H2_sincos"), two),
        "sim2": (construct_W(TargetSpec("H2", 2), two, (2, 2)), make_pair("H2_sincos"), two),
        "sim3": (construct_W(TargetSpec.tde_from_sigma(2, (1, 1), one), one, (1, 1, 1, 1)),
                 make_pair("H2_sincos"), one),
        "H7": (construct_W(TargetSpec("H7", 2, {"a": 2, "b": 1, "c": 0.5}), two),
               make_pair("H7_shifted", {"a": 2, "b": 1, "c": 0.5}), two),
    }
    starts = ([0, 1], [0.2, 1.4], [-0.3, 0.8], [-0.84, -0.93])
    print("triple   x0              " + "  ".join(f"h0={g[0]:<7g}" for g in GRIDS))
    for name, (em, pair, params) in triples.items():
        for x0 in starts:
            slopes = [gradient_order_check(em, pair, params, port(), x0, h_list=g).details["slope"] for g in GRIDS]
            print(f"{name:8s} {str(x0):15s} " + "  ".join(f"{s:10.3f}" for s in slopes))


if __name__ == "__main__":
    main()
