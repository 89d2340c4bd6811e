"""Acyclic unit-delay networks, their linear network code and transfer matrices.

Convention: the transfer matrix is ``A F(z) B^T`` with ``F(z) = (I - zK)^{-1}``,
so a symbol leaving the source reaches the head of a path of k edges after
k - 1 time steps. Global kernels follow the same recursion,
``f_{e_j} = sum_i z K_{e_i,e_j} f_{e_i}``, with source edges carrying the
columns of A directly.

Virtual edges: ``in:i`` (i = 1..n) enter the source, ``out:T:i`` leave sink T.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Iterable

from .galois import FieldSpec, make_field
from .polyalg import (
    PolyMatrix,
    Polynomial,
    max_degree,
    monomial_uniform,
    nilpotent_inverse,
    rank,
)

if TYPE_CHECKING:
    from .memplace import MemoryPlacement

Vector = tuple[Polynomial, ...]


class NetworkError(ValueError):
    def __init__(self, msg: str, lineno: int | None = None):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {msg}" if lineno else msg)


@dataclass(frozen=True)
class Edge:
    id: str
    tail: str | None
    head: str | None

    @property
    def virtual(self) -> bool:
        return self.tail is None or self.head is None


def in_edge_id(i: int) -> str:
    return f"in:{i}"


def out_edge_id(sink: str, i: int) -> str:
    return f"out:{sink}:{i}"


@dataclass
class NetworkSpec:
    field: FieldSpec
    nodes: list[str]
    edges: list[Edge]
    source: str
    sinks: list[str]
    n: int
    A: dict[tuple[int, str], int] = field(default_factory=dict)
    K: dict[tuple[str, str], int] = field(default_factory=dict)
    B: dict[tuple[str, str, int], int] = field(default_factory=dict)
    name: str = ""

    def __post_init__(self):
        self._index()

    def _index(self) -> None:
        self.edge_by_id: dict[str, Edge] = {}
        for e in self.edges:
            if e.id in self.edge_by_id:
                raise NetworkError(f"duplicate edge id {e.id!r}")
            self.edge_by_id[e.id] = e
        self._in: dict[str, list[str]] = {v: [] for v in self.nodes}
        self._out: dict[str, list[str]] = {v: [] for v in self.nodes}
        for e in self.edges:
            self._out[e.tail].append(e.id)
            self._in[e.head].append(e.id)
        self.virtual_inputs = [Edge(in_edge_id(i), None, self.source) for i in range(1, self.n + 1)]
        self.virtual_outputs = {
            t: [Edge(out_edge_id(t, i), t, None) for i in range(1, self.n + 1)] for t in self.sinks
        }
        for e in self.virtual_inputs:
            self.edge_by_id[e.id] = e
        for lst in self.virtual_outputs.values():
            for e in lst:
                self.edge_by_id[e.id] = e
        self.edge_ids = [e.id for e in self.edges]
        self.edge_pos = {e: i for i, e in enumerate(self.edge_ids)}
        self._topo = topological_nodes(self.nodes, self.edges)
        self._topo_pos = {v: i for i, v in enumerate(self._topo)}
        self._coef_cache: dict[tuple[str, str], int] = {}

    # -- structure ----------------------------------------------------------------

    def edge(self, eid: str) -> Edge:
        return self.edge_by_id[eid]

    def head(self, eid: str) -> str | None:
        return self.edge_by_id[eid].head

    def tail(self, eid: str) -> str | None:
        return self.edge_by_id[eid].tail

    def in_edges(self, v: str) -> list[str]:
        return list(self._in[v])

    def out_edges(self, v: str) -> list[str]:
        return list(self._out[v])

    def inputs(self, v: str) -> list[str]:
        """Real plus virtual incoming edges of v."""
        virt = [e.id for e in self.virtual_inputs] if v == self.source else []
        return virt + self._in[v]

    def outputs(self, v: str) -> list[str]:
        virt = [e.id for e in self.virtual_outputs[v]] if v in self.virtual_outputs else []
        return self._out[v] + virt

    def node_order(self) -> list[str]:
        return list(self._topo)

    def node_pos(self, v: str) -> int:
        return self._topo_pos[v]

    def coef(self, ei: str, ej: str) -> int:
        """Local kernel coefficient between ei and ej (A, K or B entry)."""
        key = (ei, ej)
        if key in self._coef_cache:
            return self._coef_cache[key]
        e_in, e_out = self.edge_by_id[ei], self.edge_by_id[ej]
        val = 0
        if e_in.head is not None and e_in.head == e_out.tail:
            if e_in.tail is None:
                val = self.A.get((int(ei.split(":")[1]), ej), 0)
            elif e_out.head is None:
                k = int(ej.rsplit(":", 1)[1])
                val = self.B.get((e_out.tail, ei, k), 0)
            else:
                val = self.K.get((ei, ej), 0)
        self._coef_cache[key] = val
        return val

    def all_edges_extended(self) -> list[str]:
        """Ancestral order on real + virtual edges."""
        return ancestral_order(self)


def topological_nodes(nodes: list[str], edges: Iterable[Edge]) -> list[str]:
    """Kahn's algorithm, ties broken by declaration order; raises on cycles."""
    pos = {v: i for i, v in enumerate(nodes)}
    indeg = {v: 0 for v in nodes}
    succ: dict[str, list[str]] = {v: [] for v in nodes}
    for e in edges:
        indeg[e.head] += 1
        succ[e.tail].append(e.head)
    import heapq

    ready = [(pos[v], v) for v in nodes if indeg[v] == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        _, v = heapq.heappop(ready)
        order.append(v)
        for w in succ[v]:
            indeg[w] -= 1
            if indeg[w] == 0:
                heapq.heappush(ready, (pos[w], w))
    if len(order) != len(nodes):
        raise NetworkError("network contains a directed cycle")
    return order


def ancestral_order(net: NetworkSpec) -> list[str]:
    """Virtual inputs, then real edges by tail position (file order on ties),
    then virtual outputs by sink position."""
    real = sorted(net.edges, key=lambda e: (net.node_pos(e.tail), net.edge_pos[e.id]))
    out = [e.id for e in net.virtual_inputs] + [e.id for e in real]
    for t in sorted(net.sinks, key=net.node_pos):
        out += [e.id for e in net.virtual_outputs[t]]
    return out


# -- parsing --------------------------------------------------------------------


def parse_network(text: str, name: str = "") -> NetworkSpec:
    """Parse the line-oriented network document (see README for the grammar)."""
    p = m = None
    nodes: list[str] = []
    edges: list[Edge] = []
    source = None
    sinks: list[str] = []
    n = None
    A_raw, K_raw, B_raw = [], [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        kw, args = tok[0], tok[1:]
        try:
            if kw == "field":
                p, m = int(args[0]), int(args[1]) if len(args) > 1 else 1
            elif kw == "node":
                for v in args:
                    if v in nodes:
                        raise NetworkError(f"duplicate node {v!r}", lineno)
                    nodes.append(v)
            elif kw == "edge":
                eid, t, h = args
                if ":" in eid:
                    raise NetworkError(f"edge id {eid!r} uses the reserved ':'", lineno)
                edges.append((Edge(eid, t, h), lineno))
            elif kw == "source":
                source = args[0]
            elif kw == "sink":
                sinks.extend(args)
            elif kw == "dim":
                n = int(args[0])
            elif kw == "A":
                A_raw.append((int(args[0]), args[1], int(args[2]), lineno))
            elif kw == "K":
                K_raw.append((args[0], args[1], int(args[2]), lineno))
            elif kw == "B":
                B_raw.append((args[0], args[1], int(args[2]), int(args[3]), lineno))
            elif kw == "name":
                name = " ".join(args)
            else:
                raise NetworkError(f"unknown keyword {kw!r}", lineno)
        except (IndexError, ValueError) as exc:
            if isinstance(exc, NetworkError):
                raise
            raise NetworkError(f"malformed {kw!r} line: {exc}", lineno) from None

    if p is None:
        p, m = 2, 1
    fld = make_field(p, m)
    if source is None:
        raise NetworkError("no source declared")
    node_set = set(nodes)
    for v in [source, *sinks]:
        if v not in node_set:
            raise NetworkError(f"unknown node {v!r}")
    for e, ln in edges:
        for v in (e.tail, e.head):
            if v not in node_set:
                raise NetworkError(f"edge {e.id} references unknown node {v!r}", ln)
    for e, ln in edges:
        if e.head == source:
            raise NetworkError(f"edge {e.id} enters the source", ln)
    plain_edges = [e for e, _ in edges]
    topological_nodes(nodes, plain_edges)

    by_id = {e.id: e for e in plain_edges}
    A: dict[tuple[int, str], int] = {}
    K: dict[tuple[str, str], int] = {}
    B: dict[tuple[str, str, int], int] = {}

    def check_coef(c: int, ln: int) -> int:
        if not 0 <= c < fld.order:
            raise NetworkError(f"coefficient {c} not in {fld!r}", ln)
        return c

    for i, eid, c, ln in A_raw:
        if eid not in by_id or by_id[eid].tail != source:
            raise NetworkError(f"A coefficient on {eid!r}, which does not leave the source", ln)
        if c:
            A[(i, eid)] = check_coef(c, ln)
    for ei, ej, c, ln in K_raw:
        if ei not in by_id or ej not in by_id:
            raise NetworkError(f"K coefficient references unknown edge", ln)
        if by_id[ei].head != by_id[ej].tail:
            raise NetworkError(f"K coefficient on non-adjacent pair ({ei}, {ej})", ln)
        if c:
            K[(ei, ej)] = check_coef(c, ln)
    for t, eid, i, c, ln in B_raw:
        if t not in sinks:
            raise NetworkError(f"B coefficient for non-sink {t!r}", ln)
        if eid not in by_id or by_id[eid].head != t:
            raise NetworkError(f"B coefficient on {eid!r}, which does not enter {t}", ln)
        if c:
            B[(t, eid, i)] = check_coef(c, ln)

    # n defaults to the multicast capacity
    probe = NetworkSpec(fld, nodes, plain_edges, source, sinks, 1, name=name)
    n_min = min((min_cut(probe, t) for t in sinks), default=0)
    if n is None:
        n = n_min
    if n > n_min:
        raise NetworkError(f"dimension {n} exceeds the multicast min-cut {n_min}")
    for i, _ in A:
        if not 1 <= i <= n:
            raise NetworkError(f"A input index {i} outside 1..{n}")
    for _, _, i in B:
        if not 1 <= i <= n:
            raise NetworkError(f"B output index {i} outside 1..{n}")
    return NetworkSpec(fld, nodes, plain_edges, source, sinks, n, A, K, B, name=name)


def load_network(path_or_text: str | Path) -> NetworkSpec:
    """Load a network document from a path, or parse it if given the text itself."""
    if isinstance(path_or_text, Path) or ("\n" not in str(path_or_text) and Path(path_or_text).exists()):
        path = Path(path_or_text)
        return parse_network(path.read_text(), name=path.stem)
    return parse_network(str(path_or_text))


def dump_network(net: NetworkSpec) -> str:
    lines = [f"field {net.field.p} {net.field.m}"]
    if net.name:
        lines.append(f"name {net.name}")
    lines += [f"node {v}" for v in net.nodes]
    lines += [f"edge {e.id} {e.tail} {e.head}" for e in net.edges]
    lines.append(f"source {net.source}")
    lines += [f"sink {t}" for t in net.sinks]
    lines.append(f"dim {net.n}")
    lines += [f"A {i} {e} {c}" for (i, e), c in net.A.items()]
    lines += [f"K {a} {b} {c}" for (a, b), c in net.K.items()]
    lines += [f"B {t} {e} {i} {c}" for (t, e, i), c in net.B.items()]
    return "\n".join(lines) + "\n"


# -- min cut ----------------------------------------------------------------------


def min_cut(net: NetworkSpec, sink: str) -> int:
    """Maximum number of edge-disjoint source-sink paths (BFS augmenting paths)."""
    src = net.source
    if sink == src:
        return 0
    # residual arcs: per edge a forward arc with capacity 1 and its reverse
    cap: list[int] = []
    to: list[str] = []
    adj: dict[str, list[int]] = {v: [] for v in net.nodes}
    for e in net.edges:
        adj[e.tail].append(len(cap))
        cap.append(1)
        to.append(e.head)
        adj[e.head].append(len(cap))
        cap.append(0)
        to.append(e.tail)
    flow = 0
    while True:
        parent: dict[str, int] = {src: -1}
        dq = deque([src])
        while dq and sink not in parent:
            u = dq.popleft()
            for a in adj[u]:
                if cap[a] > 0 and to[a] not in parent:
                    parent[to[a]] = a
                    dq.append(to[a])
        if sink not in parent:
            return flow
        v = sink
        while v != src:
            a = parent[v]
            cap[a] -= 1
            cap[a ^ 1] += 1
            v = to[a ^ 1]
        flow += 1


def n_min(net: NetworkSpec) -> int:
    return min(min_cut(net, t) for t in net.sinks)


# -- kernels and transfer matrices ----------------------------------------------


def _zero_vec(net: NetworkSpec) -> Vector:
    z = Polynomial.zero(net.field)
    return (z,) * net.n


def _vec_axpy(acc: list[Polynomial], c: int, shift: int, v: Vector) -> None:
    for k, p in enumerate(v):
        if p:
            acc[k] = acc[k] + p.scale(c).shift(shift)


def global_kernels(net: NetworkSpec, placement: MemoryPlacement | None = None) -> dict[str, Vector]:
    """Global kernel f_e(z) of every real and virtual edge.

    Placement delays scale each local coefficient by
    z^(pair delay + outgoing-edge delay).
    """
    fld = net.field
    pair = placement.pair if placement is not None else {}
    outm = placement.out if placement is not None else {}
    f: dict[str, Vector] = {}
    for i, e in enumerate(net.virtual_inputs):
        vec = [Polynomial.zero(fld)] * net.n
        vec[i] = Polynomial.one(fld)
        f[e.id] = tuple(vec)
    for ej in ancestral_order(net):
        if ej in f:
            continue
        v = net.tail(ej)
        acc = list(_zero_vec(net))
        base = 0 if (v == net.source or net.head(ej) is None) else 1
        om = outm.get(ej, 0)
        for ei in net.inputs(v):
            c = net.coef(ei, ej)
            if c:
                _vec_axpy(acc, c, base + pair.get((ei, ej), 0) + om, f[ei])
        f[ej] = tuple(acc)
    return f


@dataclass
class TransferMatrix:
    sink: str
    M: PolyMatrix
    single_gen: tuple[int, list[list[int]]] | None = None

    @property
    def L(self) -> int | None:
        return self.single_gen[0] if self.single_gen else None


def transfer_matrix(
    net: NetworkSpec, sink: str, placement: MemoryPlacement | None = None
) -> TransferMatrix:
    """M_T(z): row i = input i, column k = output k of the sink."""
    f = global_kernels(net, placement)
    cols = [f[e.id] for e in net.virtual_outputs[sink]]
    M = PolyMatrix(net.field, [[cols[k][i] for k in range(net.n)] for i in range(net.n)])
    return TransferMatrix(sink, M, monomial_uniform(M))


def kernel_matrices(
    net: NetworkSpec, placement: MemoryPlacement | None = None
) -> tuple[PolyMatrix, PolyMatrix, dict[str, PolyMatrix]]:
    """A (n x |E|), K (|E| x |E|) and B^T (|E| x n per sink) with placement delays applied."""
    fld = net.field
    pair = placement.pair if placement is not None else {}
    outm = placement.out if placement is not None else {}
    E = net.edge_ids
    nE = len(E)

    def mono(c: int, k: int) -> Polynomial:
        return Polynomial.monomial(fld, k, c)

    A = [[Polynomial.zero(fld)] * nE for _ in range(net.n)]
    for e in net.virtual_inputs:
        i = int(e.id.split(":")[1])
        for ej in net.out_edges(net.source):
            c = net.coef(e.id, ej)
            if c:
                A[i - 1][net.edge_pos[ej]] = mono(c, pair.get((e.id, ej), 0) + outm.get(ej, 0))
    K = [[Polynomial.zero(fld)] * nE for _ in range(nE)]
    for ej in E:
        v = net.tail(ej)
        for ei in net.in_edges(v):
            c = net.coef(ei, ej)
            if c:
                K[net.edge_pos[ei]][net.edge_pos[ej]] = mono(c, pair.get((ei, ej), 0) + outm.get(ej, 0))
    Bt = {}
    for t in net.sinks:
        b = [[Polynomial.zero(fld)] * net.n for _ in range(nE)]
        for k, eo in enumerate(net.virtual_outputs[t]):
            for ei in net.in_edges(t):
                c = net.coef(ei, eo.id)
                if c:
                    b[net.edge_pos[ei]][k] = mono(c, pair.get((ei, eo.id), 0) + outm.get(eo.id, 0))
        Bt[t] = PolyMatrix(fld, b)
    return PolyMatrix(fld, A), PolyMatrix(fld, K), Bt


def F_matrix(net: NetworkSpec, placement: MemoryPlacement | None = None) -> PolyMatrix:
    _, K, _ = kernel_matrices(net, placement)
    return nilpotent_inverse(K)


def transfer_matrix_via_F(
    net: NetworkSpec, sink: str, placement: MemoryPlacement | None = None
) -> PolyMatrix:
    """A F(z) B^T computed by matrix algebra (independent of global_kernels)."""
    A, K, Bt = kernel_matrices(net, placement)
    return A @ nilpotent_inverse(K) @ Bt[sink]


def instantaneous_transfer(net: NetworkSpec, sink: str) -> list[list[int]]:
    """Transfer matrix over F_q of the delay-free counterpart."""
    fld = net.field
    g: dict[str, list[int]] = {}
    for i, e in enumerate(net.virtual_inputs):
        vec = [0] * net.n
        vec[i] = 1
        g[e.id] = vec
    for ej in ancestral_order(net):
        if ej in g:
            continue
        acc = [0] * net.n
        for ei in net.inputs(net.tail(ej)):
            c = net.coef(ei, ej)
            if c:
                for k, x in enumerate(g[ei]):
                    acc[k] = fld.add(acc[k], fld.mul(c, x))
        g[ej] = acc
    cols = [g[e.id] for e in net.virtual_outputs[sink]]
    return [[cols[k][i] for k in range(net.n)] for i in range(net.n)]


def scalar_rank(fld: FieldSpec, rows: list[list[int]]) -> int:
    a = [list(r) for r in rows]
    r = 0
    ncols = len(a[0]) if a else 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(a)) if a[i][c]), None)
        if piv is None:
            continue
        a[r], a[piv] = a[piv], a[r]
        inv = fld.inv(a[r][c])
        a[r] = [fld.mul(inv, x) for x in a[r]]
        for i in range(len(a)):
            if i != r and a[i][c]:
                t = a[i][c]
                a[i] = [fld.sub(x, fld.mul(t, y)) for x, y in zip(a[i], a[r])]
        r += 1
    return r


def is_valid_code(net: NetworkSpec) -> bool:
    """Every sink's instantaneous transfer matrix has full rank n."""
    return all(scalar_rank(net.field, instantaneous_transfer(net, t)) == net.n for t in net.sinks)


def longest_path_edges(net: NetworkSpec) -> int:
    """Number of edges on the longest directed path."""
    best: dict[str, int] = {v: 0 for v in net.nodes}
    for v in net.node_order():
        for e in net.out_edges(v):
            h = net.head(e)
            best[h] = max(best[h], best[v] + 1)
    return max(best.values(), default=0)


def t_delay(net: NetworkSpec, placement: MemoryPlacement | None = None) -> int:
    """One plus the maximum entry degree of F(z)."""
    return max_degree(F_matrix(net, placement)) + 1


@dataclass
class NodeClasses:
    strata: list[list[str]]
    forwarding: list[str]

    @property
    def coding(self) -> list[str]:
        return [v for s in self.strata for v in s]


def is_coding_node(net: NetworkSpec, v: str, kernels: dict[str, Vector] | None = None) -> bool:
    """Some real outgoing edge mixes at least two incoming edges carrying data."""
    if v == net.source:
        return False
    if kernels is None:
        kernels = global_kernels(net)
    for ej in net.out_edges(v):
        live = [ei for ei in net.inputs(v) if net.coef(ei, ej) and any(kernels[ei])]
        if len(live) >= 2:
            return True
    return False


def classify_nodes(net: NetworkSpec) -> NodeClasses:
    """Coding nodes stratified by the longest chain of coding ancestors."""
    kernels = global_kernels(net)
    coding = {v for v in net.nodes if is_coding_node(net, v, kernels)}
    # depth[v] = number of coding nodes strictly upstream on the deepest path
    depth: dict[str, int] = {v: -1 for v in net.nodes}  # -1: no coding ancestor
    level: dict[str, int] = {}
    for v in net.node_order():
        up = depth[v]
        if v in coding:
            level[v] = up + 1
            mine = up + 1
        else:
            mine = up
        for e in net.out_edges(v):
            h = net.head(e)
            depth[h] = max(depth[h], mine)
    strata: list[list[str]] = []
    for v in net.node_order():
        if v in coding:
            while len(strata) <= level[v]:
                strata.append([])
            strata[level[v]].append(v)
    fwd = [v for v in net.node_order() if v != net.source and v not in coding]
    return NodeClasses(strata, fwd)


def matrix_rank(M: PolyMatrix) -> int:
    return rank(M)
