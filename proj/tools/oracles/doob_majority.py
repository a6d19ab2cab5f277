#!/usr/bin/env python3
"""Exact values for the majority-of-r-fair-coins Doob martingale.

T[i][s] = P(majority == 1 | s ones among first i coins), computed by the
backward recursion T[i][s] = (T[i+1][s] + T[i+1][s+1]) / 2 with
T[r][s] = [s > r/2].  Prints the anchors frozen into the C++ unit tests.
"""
from fractions import Fraction


def table(r):
    T = [[None] * (i + 1) for i in range(r + 1)]
    for s in range(r + 1):
        T[r][s] = Fraction(1 if 2 * s > r else 0)
    for i in range(r - 1, -1, -1):
        for s in range(i + 1):
            T[i][s] = (T[i + 1][s] + T[i + 1][s + 1]) / 2
    return T


def main():
    for r in (3, 9):
        T = table(r)
        print(f"r={r}: X_0 = {T[0][0]}")
        print(f"r={r}: X_1 | first coin 1 -> {T[1][1]}  (= {float(T[1][1]):.6f})")
        print(f"r={r}: X_1 | first coin 0 -> {T[1][0]}  (= {float(T[1][0]):.6f})")

    # r=3 exhaustive: jump threshold 1/(4*sqrt(3)) ~= 0.14434; the first coin
    # always moves X by |1/4| >= threshold, so p_jump = 1 exactly.
    T = table(3)
    jumps = []
    import itertools, math
    th = 1 / (4 * math.sqrt(3))
    for coins in itertools.product((0, 1), repeat=3):
        xs = [T[0][0]]
        s = 0
        for i, c in enumerate(coins, 1):
            s += c
            xs.append(T[i][s])
        ys = [float(b - a) for a, b in zip(xs, xs[1:])]
        jumps.append(any(abs(y) >= th for y in ys))
        sos = sum(y * y for y in ys)
    print(f"r=3 exhaustive p_jump = {sum(jumps)}/8")

    # Lemma 3.1 anchor: X_r in {0,1} uniform, X_0 = 1/2 -> both sides 1/4.
    print("lemma-3.1 anchor: E[X_r^2 - X_0^2] = 1/2 - 1/4 = 1/4")


if __name__ == "__main__":
    main()
