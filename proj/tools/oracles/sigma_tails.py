#!/usr/bin/env python3
"""Design check for the sigma-tail bound verifier: random discrete
distributions honoring the dyadic tail condition Pr[sigma >= rho*alpha] <=
beta/rho must satisfy both claimed upper bounds (outlier / exsquared).
Scans 20000 random instances; prints worst slack."""
import math
import random

rng = random.Random(20260816)


def gen():
    lam = math.exp(rng.uniform(math.log(1e-3), math.log(0.9)))
    p = rng.uniform(0.01, 0.5)
    amax = lam * (1 - p) / (2 * p)
    alpha = math.exp(rng.uniform(math.log(1e-4), math.log(min(0.2, amax))))
    beta = rng.uniform(0.0, 0.3)
    vals = sorted({min(1.0, rng.uniform(alpha * 0.2, 1.2)) for _ in range(rng.randint(1, 8))},
                  reverse=True)
    atoms = []
    t_prev = 0.0
    for v in vals:
        cap = beta / max(1.0, v / alpha) if v >= alpha else 1.0
        if cap < t_prev:
            continue
        t = rng.uniform(t_prev, cap)
        if t > t_prev:
            atoms.append((v, t - t_prev))
            t_prev = t
    if t_prev < 1.0:
        atoms.append((rng.uniform(0, alpha * 0.95), 1.0 - t_prev))
    return atoms, alpha, beta, lam, p


def main():
    worst_o = worst_e = -1e9
    for _ in range(20000):
        atoms, a, b, lam, p = gen()
        M = (1 - p) * lam / p
        lhs_o = sum(v * pr for v, pr in atoms if v >= M)
        bnd_o = 2 * a * b * math.log2(1 / lam) + 2 * a * b
        lhs_e = sum(v * v * pr for v, pr in atoms if a <= v <= M)
        bnd_e = 4 * (1 - p) * lam * a * b / p
        worst_o = max(worst_o, lhs_o - bnd_o)
        worst_e = max(worst_e, lhs_e - bnd_e)
    print(f"worst outlier slack (lhs-bound, must be <=0): {worst_o:.3e}")
    print(f"worst exsquared slack (must be <=0):          {worst_e:.3e}")


if __name__ == "__main__":
    main()
