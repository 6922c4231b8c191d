"""Sequence length m for the simulation settings, next to the values printed
in the source text, with the spectrum bound that decides each case.

    python3 scripts/period_table.py
"""
import math

from ncmap.sequence import MapParameters, TargetSpec, construct_W, p_tilde_spectrum

TWO, ONE = MapParameters.two_point(), MapParameters.single_point()
ROWS = [
    ("sim1", TargetSpec("H1", 2), TWO, (1, 1, 1, 1), 8),
    ("sim1 elongated", TargetSpec("H1", 2), TWO, (1.5, 0.2, 1.5, 0.2), 21),
    ("sim2", TargetSpec("H2", 2), TWO, (2, 2), 4),
    ("sim2 small", TargetSpec("H2", 2), TWO, (0.2, 0.2), 154),
    ("sim3", TargetSpec.tde_from_sigma(2, (1, 1), ONE), ONE, (1, 1, 1, 1), 8),
    ("sim4", TargetSpec("H2", 2), TWO, (1, 1), None),
    ("sim5", TargetSpec("H2", 2), TWO, (0.4, 0.4), None),
]


def main():
    print(f"{'case':16s} {'m':>5s} {'printed':>8s}  targets / top spectrum at printed m")
    for name, target, params, sigma, printed in ROWS:
        em = construct_W(target, params, sigma)
        note = ""
        if printed:
            eta = p_tilde_spectrum(params, printed)
            q = len(em.omega_hat)
            need = sorted(em.omega_hat, reverse=True)
            note = f"need {[round(float(v), 3) for v in need]}, have {[round(float(v), 3) for v in eta[:q]]}"
        print(f"{name:16s} {em.m:5d} {str(printed or '-'):>8s}  {note}")
    print("closed form of the spectrum: (s^2/2) cot(k pi / m); e.g. m=8 gives",
          [round(0.5 / math.tan(k * math.pi / 8), 3) for k in (1, 2, 3)])


if __name__ == "__main__":
    main()
