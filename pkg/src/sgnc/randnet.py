"""Random small acyclic networks with random kernels, for property tests and sweeps."""
from __future__ import annotations

import numpy as np

from .netmodel import NetworkError, NetworkSpec, is_valid_code, min_cut, parse_network


def random_network_text(rng: np.random.Generator, max_nodes: int = 10, p: int = 2, m: int = 1) -> str:
    q = p**m
    N = int(rng.integers(3, max_nodes + 1))
    names = ["s"] + [f"u{i}" for i in range(1, N)]
    edges = []
    # a spine so every node is reachable, then extra forward edges (parallel allowed)
    for j in range(1, N):
        i = int(rng.integers(0, j))
        edges.append((names[i], names[j]))
    for _ in range(int(rng.integers(1, 2 * N))):
        i, j = sorted(rng.choice(N, size=2, replace=False))
        edges.append((names[i], names[j]))
    for _ in range(int(rng.integers(1, 3))):
        j = int(rng.integers(1, N))
        edges.append(("s", names[j]))
    outdeg = {v: 0 for v in names}
    for t, _ in edges:
        outdeg[t] += 1
    leaves = [v for v in names[1:] if outdeg[v] == 0]
    others = [v for v in names[1:] if v not in leaves]
    k = int(rng.integers(1, 3))
    sinks = list(leaves)
    if len(sinks) < k and others:
        sinks += list(rng.choice(others, size=min(k - len(sinks), len(others)), replace=False))
    sinks = [v for v in names if v in sinks][:3]
    lines = [f"field {p} {m}", "node " + " ".join(names), "source s", "sink " + " ".join(sinks)]
    ids = []
    for idx, (t, h) in enumerate(edges, 1):
        ids.append((f"e{idx}", t, h))
        lines.append(f"edge e{idx} {t} {h}")
    text = "\n".join(lines) + "\n"
    probe = parse_network(text)
    n = min(min_cut(probe, t) for t in probe.sinks)
    if n < 1:
        raise NetworkError("a sink is unreachable")
    n = min(n, 3) if rng.random() < 0.7 else int(rng.integers(1, min(n, 3) + 1))
    lines.append(f"dim {n}")

    def coef() -> int:
        # mostly nonzero so that codes tend to be valid
        return int(rng.integers(1, q)) if rng.random() < 0.85 else 0

    for e, t, h in ids:
        if t == "s":
            for i in range(1, n + 1):
                c = coef()
                if c:
                    lines.append(f"A {i} {e} {c}")
    for e1, _, h1 in ids:
        for e2, t2, _ in ids:
            if h1 == t2:
                c = coef()
                if c:
                    lines.append(f"K {e1} {e2} {c}")
    for t in sinks:
        for e, _, h in ids:
            if h == t:
                for i in range(1, n + 1):
                    c = coef()
                    if c:
                        lines.append(f"B {t} {e} {i} {c}")
    return "\n".join(lines) + "\n"


def random_valid_network(seed: int, max_nodes: int = 10, fields=((2, 1), (2, 2)), tries: int = 200) -> NetworkSpec:
    """Draw networks from ``seed`` until one carries a valid code."""
    rng = np.random.default_rng(seed)
    for _ in range(tries):
        p, m = fields[int(rng.integers(0, len(fields)))]
        try:
            net = parse_network(random_network_text(rng, max_nodes, p, m), name=f"rand{seed}")
        except NetworkError:
            continue
        if is_valid_code(net):
            return net
    raise RuntimeError(f"no valid random network for seed {seed}")
