"""Independent reference implementations used as test oracles.

Deliberately naive: plain loops over python lists, no numpy, and no imports
from the package under test apart from the instance dataclasses.
"""

import math


def graph_oracle(n, edges):
    deg = [0] * (n + 1)
    for u, v in edges:
        deg[u] += 1
        deg[v] += 1
    deg = deg[1:]
    m = len(edges)
    total = 0
    for d in deg:
        total += d
    return {
        "feat_nodes": n,
        "feat_edges": m,
        "feat_degree_1": deg[0],
        "feat_density": (2.0 * m) / (n * (n - 1)) if n > 1 else None,
        "feat_ratio_1": n / m if m > 0 else None,
        "feat_ratio_2": m / n,
        "feat_degree_mean": total / n,
        "feat_degree_max": max(deg),
        "feat_degree_min": min(deg),
    }


def _mean(xs):
    s = 0
    for x in xs:
        s += x
    return s / len(xs)


def bpp_oracle(capacity, weights):
    return {
        "feat_capacity": capacity,
        "feat_items": len(weights),
        "feat_weight_max": max(weights),
        "feat_weight_min": min(weights),
        "feat_weight_mean": _mean(weights),
    }


def jssp_oracle(jobs, machines, operations):
    durations = []
    for job in operations:
        for _, d in job:
            durations.append(d)
    return {
        "feat_jobs": jobs,
        "feat_machines": machines,
        "feat_operations": len(durations),
        "feat_duration_max": max(durations),
        "feat_duration_min": min(durations),
        "feat_duration_mean": _mean(durations),
    }


def kp_oracle(capacity, items):
    weights = [w for w, _ in items]
    profits = [p for _, p in items]
    eff = [p / w for w, p in items]
    return {
        "feat_capacity": capacity,
        "feat_weight_max": max(weights),
        "feat_weight_min": min(weights),
        "feat_profit_max": max(profits),
        "feat_profit_min": min(profits),
        "feat_weight_1": weights[0],
        "feat_profit_1": profits[0],
        "feat_efficiency_1": eff[0],
        "feat_weight_mean": _mean(weights),
        "feat_profit_mean": _mean(profits),
        "feat_efficiency_mean": _mean(eff),
    }


def feature_oracle(inst):
    name = type(inst).__name__
    if name == "GraphInstance":
        return graph_oracle(inst.num_nodes, list(inst.edges))
    if name == "BinPackingInstance":
        return bpp_oracle(inst.capacity, list(inst.weights))
    if name == "JobShopInstance":
        return jssp_oracle(inst.num_jobs, inst.num_machines, inst.operations)
    return kp_oracle(inst.capacity, list(inst.items))


def rel_close(a, b, rel):
    if a is None or b is None:
        return a is None and b is None
    if a == b:
        return True
    return abs(a - b) <= rel * max(abs(a), abs(b))


def pool_oracle(rows, strategy):
    """rows: list of lists of floats."""
    d = len(rows[0])
    if strategy == "last":
        return list(rows[-1])
    out = []
    for j in range(d):
        col = [r[j] for r in rows]
        if strategy == "max":
            best = col[0]
            for x in col[1:]:
                if x > best:
                    best = x
            out.append(best)
        else:
            out.append(math.fsum(col) / len(col))
    return out


def set_aware_oracle(preds, sets):
    hits = 0
    for p, s in zip(preds, sets):
        for member in s:
            if member == p:
                hits += 1
                break
    return hits / len(preds)


def naive_argbest(row, sense):
    best = None
    for v in row.values():
        if best is None or (v < best if sense == "minimize" else v > best):
            best = v
    return {a for a, v in row.items() if v == best}
