"""Solve an LP given as JSON with scipy's HiGHS interface.

usage: highs_adapter.py <model.json> <solution.json>
"""
import json
import sys

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import coo_matrix


def build(rows, n, relation):
    r, c, v, rhs = [], [], [], []
    for row in rows:
        if row["relation"] not in relation:
            continue
        sign = relation[row["relation"]]
        i = len(rhs)
        for j, a in row["terms"]:
            r.append(i)
            c.append(j)
            v.append(sign * a)
        rhs.append(sign * row["rhs"])
    if not rhs:
        return None, None
    return coo_matrix((v, (r, c)), shape=(len(rhs), n)).tocsr(), np.array(rhs)


def main(src, dst):
    with open(src) as f:
        model = json.load(f)
    n = len(model["variables"])
    sign = 1.0 if model["sense"] == "min" else -1.0
    c = np.zeros(n)
    for j, a in model["objective"]:
        c[j] += sign * a
    a_ub, b_ub = build(model["rows"], n, {"<=": 1.0, ">=": -1.0})
    a_eq, b_eq = build(model["rows"], n, {"=": 1.0})
    bounds = [(v["lower"], v["upper"]) for v in model["variables"]]
    for method in ("highs", "highs-ipm"):
        res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq, bounds=bounds, method=method)
        if res.status != 4:
            break
    out = {"status": {0: "optimal", 2: "infeasible", 3: "unbounded"}.get(res.status, "error")}
    if res.status == 0:
        out["x"] = list(map(float, res.x))
        ub = iter(res.ineqlin.marginals) if a_ub is not None else iter(())
        eq = iter(res.eqlin.marginals) if a_eq is not None else iter(())
        duals = []
        for row in model["rows"]:
            if row["relation"] == "<=":
                duals.append(float(next(ub)))
            elif row["relation"] == ">=":
                duals.append(-float(next(ub)))
            else:
                duals.append(float(next(eq)))
        out["duals"] = duals
    elif out["status"] == "error":
        sys.stderr.write(res.message + "\n")
        return 1
    with open(dst, "w") as f:
        json.dump(out, f)
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1], sys.argv[2]))
