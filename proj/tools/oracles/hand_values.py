#!/usr/bin/env python3
"""Hand/closed-form oracle values frozen into C++ unit and acceptance tests:
Laplace tails, first-success distributions, the identity sum, and the
adversarial sampling-instance anchors (threshold reward, Laplace scale,
simulated LapExp reward ballpark)."""
import math
import random


def laplace_tail(lam, t):
    if t >= 0:
        return 0.5 * math.exp(-t / lam)
    return 1.0 - 0.5 * math.exp(t / lam)


def first_success(p):
    q = []
    alive = 1.0
    for pi in p:
        q.append(pi * alive)
        alive *= 1.0 - pi
    return q


def main():
    print("— Laplace —")
    for lam in (0.1, 1.0):
        for x in (0.0, 0.5, 1.0, 2.0):
            print(f"  tail(lam={lam}, t={x}) = {laplace_tail(lam, x):.9f}")
    print(f"  tail(1, 1)  = {0.5 * math.exp(-1):.9f}")
    print(f"  tail(2, -2) = {1 - 0.5 * math.exp(-1):.9f}")
    print(f"  E|Lap(2)| = 2 (by integration)")
    print(f"  ratio p/p' for g=0.5,g'=0.6: {math.exp(0.1):.9f} in 1±0.5")

    print("— first-success —")
    for p in ([1.0], [0.5, 1.0], [0.2, 0.5, 1.0]):
        q = first_success(p)
        ident = sum(qi * sum(p[: i + 1]) for i, qi in enumerate(q))
        print(f"  p={p} -> q={q}   sum q_i*(sum_{{j<=i}} p_j) = {ident}")

    print("— adversarial instance r=100, tsh=0.15, sigma=0.1, gamma=0.2 —")
    r, tsh, sig, gam = 100, 0.15, 0.1, 0.2
    n = r - 1
    lam = gam / (4 * math.log2(r))
    p = 1.0 / n
    print(f"  n={n}  lambda={lam:.9f}  p={p:.9f}")
    print(f"  threshold reward tsh-sigma = {tsh - sig!r}")
    vals = [[(tsh - sig) if i == h else tsh for h in range(1, n + 1)]
            for i in range(1, r)] + [[gam] * n]
    rng = random.Random(7)
    tot = 0.0
    halts = 0
    runs = 20000
    for _ in range(runs):
        h = rng.randrange(n)
        sh = None
        for i in range(r - 1):
            si = sum(vals[i]) / n
            loo = (si - p * vals[i][h]) / (1 - p)
            u = rng.random() - 0.5
            nu = -math.copysign(lam * math.log(1 - 2 * abs(u)), u) if u != 0 else 0.0
            if loo + nu >= gam:
                sh = vals[i][h]
                halts += 1
                break
        tot += vals[r - 1][h] if sh is None else sh
    print(f"  LapExp mean reward ~= {tot / runs:.5f}  halt frac ~= {halts / runs:.4f}")
    # Theorem bound pieces: sigma^h = max_i |s_i - s_i^h|.
    means = [sum(v) / n for v in vals]
    boundary = lam * (1 - p) / p
    vs = []
    for h in range(n):
        sh = max(abs(means[i] - vals[i][h]) for i in range(r))
        assert sh <= boundary
        # halt prob per party is ~the same; use the global halt fraction
        vs.append((halts / runs) * (gam / 2 - 40 * sh * sh * p / (lam * (1 - p))))
    bound = sum(vs) / n - r * math.exp(-gam / (2 * lam))
    print(f"  sigma^h = {max(abs(means[i] - vals[i][0]) for i in range(r)):.6f}"
          f"  similar boundary lam(1-p)/p = {boundary:.6f}")
    print(f"  theorem-4.2 bound ~= {bound:.5f}  (penalty r*e^-g/2l = {r * math.exp(-gam / (2 * lam)):.5f})")


if __name__ == "__main__":
    main()
