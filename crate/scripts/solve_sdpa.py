#!/usr/bin/env python3
"""Solve an SDPA sparse (.dat-s) file with cvxpy and write one value per line.

Usage: solve_sdpa.py problem.dat-s solution.txt [--solver CLARABEL]

Diagonal blocks whose entries come in negated pairs are treated as equalities.
The optimal objective is printed on stdout.
"""

import argparse
import re
import sys
from collections import defaultdict

import cvxpy as cp
import numpy as np


def read_sdpa(path):
    with open(path) as fh:
        lines = [l.strip() for l in fh]
    lines = [re.sub(r"[{}(),]", " ", l) for l in lines if l and l[0] not in '"*']
    m = int(lines[0].split()[0])
    nblock = int(lines[1].split()[0])
    sizes = [int(t) for t in lines[2].split()[:nblock]]
    c, k = [], 3
    while len(c) < m:
        c.extend(float(t) for t in lines[k].split())
        k += 1
    entries = []
    for l in lines[k:]:
        mat, blk, i, j, v = l.split()
        entries.append((int(mat), int(blk), int(i), int(j), float(v)))
    return m, sizes, np.array(c), entries


def build(m, sizes, c, entries):
    x = cp.Variable(m)
    per_block = defaultdict(list)
    for e in entries:
        per_block[e[1]].append(e)
    constraints = []
    for b, size in enumerate(sizes, start=1):
        if size > 0:
            mats = defaultdict(lambda: np.zeros((size, size)))
            for mat, _, i, j, v in per_block[b]:
                mats[mat][i - 1, j - 1] += v
                if i != j:
                    mats[mat][j - 1, i - 1] += v
            expr = -mats[0] if 0 in mats else np.zeros((size, size))
            for mat, f in mats.items():
                if mat:
                    expr = expr + x[mat - 1] * f
            s = cp.Variable((size, size), PSD=True)
            constraints.append(s == expr)
            continue
        n = -size
        rows = [defaultdict(float) for _ in range(n)]
        for mat, _, i, _, v in per_block[b]:
            rows[i - 1][mat] += v
        k = 0
        while k < n:
            a, nxt = rows[k], rows[k + 1] if k + 1 < n else None
            paired = nxt is not None and a and set(a) == set(nxt) and all(nxt[t] == -a[t] for t in a)
            lhs = sum(v * x[t - 1] for t, v in a.items() if t) - a.get(0, 0.0)
            constraints.append(lhs == 0 if paired else lhs >= 0)
            k += 2 if paired else 1
    return x, cp.Problem(cp.Minimize(c @ x), constraints)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("problem")
    ap.add_argument("solution")
    ap.add_argument("--solver", default="CLARABEL")
    args = ap.parse_args()
    x, prob = build(*read_sdpa(args.problem))
    prob.solve(solver=args.solver)
    if prob.status not in ("optimal", "optimal_inaccurate"):
        print(f"solver status: {prob.status}", file=sys.stderr)
        return 1
    with open(args.solution, "w") as fh:
        for v in x.value:
            fh.write(f"{v:.17e}\n")
    print(f"{prob.value:.17e}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
