#!/usr/bin/env python3
"""Solve an SDPA sparse file with cvxpy and print an SDPA-style result.

Problem form: minimize c^T x subject to sum_k x_k F_k - F_0 >= 0.
"""
import argparse
import sys

import numpy as np


def read_sdpa(path):
    with open(path) as fh:
        lines = [ln.strip() for ln in fh]
    body = [ln for ln in lines if ln and ln[0] not in '*"']

    def numbers(line):
        for ch in ',{}()=':
            line = line.replace(ch, ' ')
        out = []
        for tok in line.split():
            try:
                out.append(float(tok))
            except ValueError:
                break
        return out

    m = int(numbers(body[0])[0])
    nblocks = int(numbers(body[1])[0])
    sizes = [int(v) for v in numbers(body[2])[:nblocks]]
    c = np.array(numbers(body[3])[:m])
    mats = [[np.zeros((abs(s), abs(s))) for s in sizes] for _ in range(m + 1)]
    for line in body[4:]:
        vals = numbers(line)
        if len(vals) < 5:
            continue
        k, b, i, j, v = int(vals[0]), int(vals[1]) - 1, int(vals[2]) - 1, int(vals[3]) - 1, vals[4]
        mats[k][b][i, j] = v
        mats[k][b][j, i] = v
    return c, sizes, mats


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("path")
    ap.add_argument("--solver", default="CLARABEL")
    args = ap.parse_args()

    import cvxpy as cp

    c, sizes, mats = read_sdpa(args.path)
    m = len(c)
    x = cp.Variable(m)
    cons = []
    for b, s in enumerate(sizes):
        expr = -mats[0][b]
        terms = [x[k - 1] * mats[k][b] for k in range(1, m + 1) if np.any(mats[k][b])]
        if terms:
            expr = expr + cp.sum(terms) if len(terms) > 1 else expr + terms[0]
        if s < 0:
            cons.append(cp.diag(expr) >= 0)
        else:
            cons.append((expr + expr.T) / 2 >> 0)
    prob = cp.Problem(cp.Minimize(c @ x), cons)
    prob.solve(solver=args.solver)
    phase = "pdOPT" if prob.status == cp.OPTIMAL else prob.status
    print(f"phase.value = {phase}")
    print(f"objValPrimal = {prob.value:.16e}")
    print(f"objValDual   = {prob.value:.16e}")
    if x.value is not None:
        print("xVec = ")
        print("{" + ",".join(f"{v:.16e}" for v in x.value) + "}")
    return 0 if prob.status == cp.OPTIMAL else 2


if __name__ == "__main__":
    sys.exit(main())
