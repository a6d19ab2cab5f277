#!/usr/bin/env python3
"""MC estimate of Pr[sum Y^2 >= 1/16] and Pr[exists |Y_i| >= 1/(4 sqrt r)]
for the majority-vote Doob sequence, to confirm both clear 1/20 with margin."""
import math
import random


def tables(r):
    T = [[0.0] * (r + 2) for _ in range(r + 1)]
    for s in range(r + 1):
        T[r][s] = 1.0 if 2 * s > r else 0.0
    for i in range(r - 1, -1, -1):
        for s in range(i + 1):
            T[i][s] = 0.5 * (T[i + 1][s] + T[i + 1][s + 1])
    return T


def main():
    rng = random.Random(7)
    for r in (11, 51, 101):
        T = tables(r)
        n = 20000
        sos_hits = jump_hits = 0
        th = 1.0 / (4 * math.sqrt(r))
        for _ in range(n):
            s = 0
            prev = T[0][0]
            sos = 0.0
            jump = False
            for i in range(1, r + 1):
                s += 1 if rng.random() < 0.5 else 0
                x = T[i][s]
                y = x - prev
                sos += y * y
                if abs(y) >= th:
                    jump = True
                prev = x
            if sos >= 1 / 16:
                sos_hits += 1
            if jump:
                jump_hits += 1
        ps, pj = sos_hits / n, jump_hits / n
        se = math.sqrt(0.25 / n)
        print(f"r={r:3d}  p_sos={ps:.4f}  p_jump={pj:.4f}  (1/20 + 3se = {0.05 + 3 * se:.4f})")


if __name__ == "__main__":
    main()
