#!/usr/bin/env python3
"""Generates the scripted-protocol JSON fixtures and computes, by full coin
enumeration, the exact game-value tables for the tiny 3-party protocol.
Prints frozen table entries plus the exact stopped-value expectation of the
game-value attack (checked against 1/2 +- 1/(200r)), so the C++ exact mode
has an independent oracle."""
import itertools
import json
import math
import os

HERE = os.path.dirname(os.path.abspath(__file__))
CONFIGS = os.path.join(HERE, "..", "..", "configs")


def majority(*bits):
    return 1 if sum(bits) * 2 > len(bits) else 0


def write_tiny():
    n, r, rb, eb = 3, 3, 3, 1
    out = [majority(c & 1, (c >> 1) & 1, (c >> 2) & 1) for c in range(8)]
    backup = []
    # i=0: completion bit alone
    backup.append([d for d in range(2)])
    # i=1: c1 xor d
    backup.append([(cp ^ d) for d in range(2) for cp in range(2)][:])
    b1 = [0] * 4
    for cp in range(2):
        for d in range(2):
            b1[cp | d << 1] = cp ^ d
    backup[1] = b1
    # i=2: majority(c1, c2, d)
    b2 = [0] * 8
    for cp in range(4):
        for d in range(2):
            b2[cp | d << 2] = majority(cp & 1, (cp >> 1) & 1, d)
    backup.append(b2)
    # i=3 = r: honest output regardless of d
    b3 = [0] * 16
    for cp in range(8):
        for d in range(2):
            b3[cp | d << 3] = out[cp]
    backup.append(b3)
    doc = {"name": "tiny3", "n": n, "r": r, "round_bits": rb,
           "residual_bits": eb, "out": out, "backup": backup}
    with open(os.path.join(CONFIGS, "scripted_tiny.json"), "w") as f:
        json.dump(doc, f, indent=1)
    return doc


def write_parity2():
    doc = {"name": "parity2", "n": 2, "r": 1, "round_bits": 1,
           "residual_bits": 1,
           "out": [0, 1],
           "backup": [[0, 1], [0, 1, 0, 1]]}
    # backup[1][c|d<<1] = out[c]
    doc["backup"][1] = [0, 1, 0, 1]
    with open(os.path.join(CONFIGS, "scripted_parity2.json"), "w") as f:
        json.dump(doc, f, indent=1)


def write_bad():
    doc = {"name": "always1", "n": 2, "r": 1, "round_bits": 1,
           "residual_bits": 1, "out": [1, 1], "backup": [[1, 1], [1, 1, 1, 1]]}
    with open(os.path.join(CONFIGS, "scripted_bad.json"), "w") as f:
        json.dump(doc, f, indent=1)


# --- exact machinery for tiny3 with S = {{0},{1}} ------------------------

R = 3
DEN = 200 * R      # x grid denominator
TH = 1 / (64 * math.sqrt(R))


def trajectories(doc):
    """Yield (b_num[0..r] over denom 2, out) for all 4096 coin assignments."""
    rb, eb = doc["round_bits"], doc["residual_bits"]
    bits = rb + eb
    n, r = doc["n"], doc["r"]
    for a in range(1 << (n * bits)):
        pc = [(a >> (p * bits)) & ((1 << bits) - 1) for p in range(n)]
        rounds = [pc[p] & ((1 << rb) - 1) for p in range(n)]
        res = [pc[p] >> rb for p in range(n)]
        c = 0
        for j in range(r):
            cj = 0
            for p in range(n):
                cj ^= (rounds[p] >> j) & 1
            c |= cj << j
        bnum = []
        for i in range(r + 1):
            cpfx = c & ((1 << i) - 1)
            tot = 0
            for u in (0, 1):          # S = {{0},{1}}
                d = res[u]            # single member XOR = own residual bits
                tot += doc["backup"][i][cpfx | d << i]
            bnum.append(tot)
        yield bnum, doc["out"][c]


def trigger(x, y, yp, nojump):
    if abs(y - x) < TH or abs(yp - x) < TH:
        return nojump
    return 0


def replay_prefix(bnum, mu, upto):
    """Fold rounds 1..upto-1 through built tables; return context for round upto."""
    xi = DEN // 2
    sos = 0
    g = 1
    for i in range(1, upto):
        key = (bnum[i], bnum[i - 1], xi, sos, g)
        nxt = mu[i][key]
        sos += (nxt - xi) ** 2
        g = trigger(nxt / DEN, bnum[i] / 2, bnum[i - 1] / 2, g)
        xi = nxt
    return (bnum[upto], bnum[upto - 1], xi, sos, g)


def build_exact(doc):
    trajs = list(trajectories(doc))
    tables = [None] * (R + 1)
    allcnt = [None] * (R + 1)
    for i in range(1, R + 1):
        counts = {}
        for bnum, out in trajs:
            key = replay_prefix(bnum, tables, i)
            q, p = counts.get(key, (0, 0))
            counts[key] = (q + 1, p + out)
        tables[i] = {k: (p * DEN) // q for k, (q, p) in counts.items()}
        allcnt[i] = counts
    return trajs, tables, allcnt


def mart_exact(trajs, tables, z):
    """Exact stopped expectation of the game-value attack over all coins."""
    tot = 0
    aborts = 0
    sgn = 1 if z == 1 else -1
    for bnum, out in trajs:
        xi, sos, g = DEN // 2, 0, 1
        xat = None
        jstar = None
        for j in range(1, R + 1):
            if j == 1:
                if sgn * (bnum[1] / 2 - 0.5) > TH:
                    xat = tables[1][(bnum[1], bnum[0], DEN // 2, 0, 1)]
                    jstar = 1
                    break
                nxt = tables[1][(bnum[1], bnum[0], DEN // 2, 0, 1)]
            else:
                nxt = tables[j][(bnum[j], bnum[j - 1], xi, sos, g)]
                if g == 1 and sgn * (bnum[j - 1] / 2 - nxt / DEN) > TH:
                    xat, jstar = nxt, j
                    break
                if g == 1 and sgn * (bnum[j] / 2 - nxt / DEN) > TH:
                    xat, jstar = nxt, j
                    break
            sos += (nxt - xi) ** 2
            g = trigger(nxt / DEN, bnum[j] / 2, bnum[j - 1] / 2, g)
            xi = nxt
        if xat is None:
            xat = xi
        else:
            aborts += 1
        tot += xat / DEN
    return tot / len(trajs), aborts / len(trajs)


def main():
    doc = write_tiny()
    write_parity2()
    write_bad()
    print("wrote scripted_tiny.json, scripted_parity2.json, scripted_bad.json")
    print(f"tiny3 out-table bias: {abs(sum(doc['out']) / 8 - 0.5)}")

    trajs, tables, counts = build_exact(doc)
    for i in (1, 2, 3):
        print(f"round {i}: {len(tables[i])} contexts")
    print("frozen round-1 entries (b1,b0,x,sos,g) -> mu  [q_c]:")
    for k in sorted(tables[1]):
        q, p = counts[1][k]
        print(f"  {k} -> {tables[1][k]}   [q={q}, p={p}]")
    for i in (2, 3):
        print(f"frozen first round-{i} entries:")
        for k in sorted(tables[i])[:5]:
            q, p = counts[i][k]
            print(f"  {k} -> {tables[i][k]}   [q={q}, p={p}]")

    for z in (1, 0):
        ex, ab = mart_exact(trajs, tables, z)
        lo, hi = 0.5 - 1 / DEN, 0.5 + 1 / DEN
        print(f"z={z}: exact E[Xhat at decision] = {ex:.8f} "
              f"(target [{lo:.6f},{hi:.6f}])  Pr[abort] = {ab:.6f}")


if __name__ == "__main__":
    main()
