"""Rippled objective: compare the final objective value with the value of the
local minimum reached by BFGS from the end of the first period, for several
starting points.

    python3 scripts/sim4_starts.py
"""
from dataclasses import replace

import numpy as np
import scipy.optimize

from ncmap.cli import _construct, build_objective, load_preset
from ncmap.engine import run


def main():
    base = load_preset(4)
    em = _construct(base)
    print(f"m={em.m}")
    for x0 in ((1.0, 2.0), (0.0, 1.0), (0.5, 1.5), (1.3, 2.4), (2.0, 3.0)):
        for stall in (None, 0.0):
            cfg = replace(base, x0=x0, stall_tol=stall)
            J = build_objective(cfg)
            rec = run(cfg.engine_config(em), J, cfg.x0)
            xm = rec.iterates[min(em.m, rec.iterations)]
            loc = scipy.optimize.minimize(J._fn, xm, jac=J.gradient, method="BFGS")
            last = rec.objective_values[-em.m:]
            print(f"x0={x0} stall_tol={stall}: J(x0)={J._fn(np.array(x0)):.3g} local-min J={loc.fun:.3g} "
                  f"final J={rec.objective_values[-1]:.3g} (last period {last.min():.3g}..{last.max():.3g}) "
                  f"iterations={rec.iterations} stop={rec.stop_reason}")


if __name__ == "__main__":
    main()
