"""Memory placement at nodes for single-generation network coding.

A placement holds two kinds of delays:

* ``pair[(e_i, e_j)]``: memory at head(e_i) delaying the symbols of e_i before
  they are combined into e_j,
* ``out[e_j]``: memory at tail(e_j) delaying the coded symbol put on e_j.

Pair delays of one incoming edge share a tapped delay line, so a node pays
``max_j pair[(e_i, e_j)]`` per incoming edge plus its outgoing-edge delays.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field

from .netmodel import (
    NetworkSpec,
    Vector,
    classify_nodes,
    global_kernels,
    instantaneous_transfer,
    kernel_matrices,
    scalar_rank,
    transfer_matrix,
)

log = logging.getLogger(__name__)

EdgeSet = tuple[str, ...]


@dataclass
class MemoryPlacement:
    pair: dict[tuple[str, str], int] = field(default_factory=dict)
    out: dict[str, int] = field(default_factory=dict)

    def copy(self) -> MemoryPlacement:
        return MemoryPlacement(dict(self.pair), dict(self.out))

    def get_pair(self, ei: str, ej: str) -> int:
        return self.pair.get((ei, ej), 0)

    def add_pair(self, ei: str, ej: str, k: int) -> None:
        val = self.pair.get((ei, ej), 0) + k
        if val < 0:
            raise ValueError(f"negative delay on pair ({ei}, {ej})")
        if val:
            self.pair[(ei, ej)] = val
        else:
            self.pair.pop((ei, ej), None)

    def add_out(self, ej: str, k: int) -> None:
        val = self.out.get(ej, 0) + k
        if val < 0:
            raise ValueError(f"negative delay on edge {ej}")
        if val:
            self.out[ej] = val
        else:
            self.out.pop(ej, None)

    def normalized(self) -> tuple:
        return (tuple(sorted(self.pair.items())), tuple(sorted(self.out.items())))

    def __eq__(self, other) -> bool:
        return isinstance(other, MemoryPlacement) and self.normalized() == other.normalized()

    def validate(self, net: NetworkSpec) -> None:
        for (ei, ej), k in self.pair.items():
            if ei not in net.edge_by_id or ej not in net.edge_by_id:
                raise ValueError(f"placement references unknown pair ({ei}, {ej})")
            if net.coef(ei, ej) == 0:
                raise ValueError(f"placement on pair ({ei}, {ej}) with zero local kernel")
            if k < 0:
                raise ValueError("negative delay")
        for ej, k in self.out.items():
            if ej not in net.edge_by_id or ej.startswith("in:"):
                raise ValueError(f"placement references unknown outgoing edge {ej}")
            if k < 0:
                raise ValueError("negative delay")


# -- edge-set helpers ---------------------------------------------------------------


def gamma_in(net: NetworkSpec, v: str, ej: str) -> list[str]:
    """Incoming (real or virtual) edges of v with a nonzero local kernel into ej."""
    if net.tail(ej) != v:
        raise ValueError(f"edge {ej} does not leave {v}")
    return [ei for ei in net.inputs(v) if net.coef(ei, ej)]


def gamma_out(net: NetworkSpec, v: str, ei: str) -> list[str]:
    if net.head(ei) != v:
        raise ValueError(f"edge {ei} does not enter {v}")
    return [ej for ej in net.outputs(v) if net.coef(ei, ej)]


def edge_max(net: NetworkSpec, pl: MemoryPlacement, ei: str) -> int:
    v = net.head(ei)
    if v is None:
        return 0
    return max((pl.get_pair(ei, ej) for ej in gamma_out(net, v, ei)), default=0)


def edge_min(net: NetworkSpec, pl: MemoryPlacement, ei: str) -> int:
    v = net.head(ei)
    if v is None:
        return 0
    return min((pl.get_pair(ei, ej) for ej in gamma_out(net, v, ei)), default=0)


def set_min(net: NetworkSpec, pl: MemoryPlacement, edges) -> int:
    return min((edge_min(net, pl, e) for e in edges), default=0)


@dataclass
class NodeMemoryStats:
    node: str
    edge_max: dict[str, int]
    edge_min: dict[str, int]
    out: dict[str, int]
    total: int


def node_stats(net: NetworkSpec, pl: MemoryPlacement, v: str) -> NodeMemoryStats:
    mx = {ei: edge_max(net, pl, ei) for ei in net.inputs(v)}
    mn = {ei: edge_min(net, pl, ei) for ei in net.inputs(v)}
    out = {ej: pl.out.get(ej, 0) for ej in net.outputs(v)}
    return NodeMemoryStats(v, mx, mn, out, sum(mx.values()) + sum(out.values()))


def node_memory(net: NetworkSpec, pl: MemoryPlacement, v: str) -> int:
    return sum(edge_max(net, pl, ei) for ei in net.inputs(v)) + sum(
        pl.out.get(ej, 0) for ej in net.outputs(v)
    )


def naive_node_memory(net: NetworkSpec, pl: MemoryPlacement, v: str) -> int:
    """Memory at v when every pair delay has its own delay line."""
    pairs = sum(k for (ei, _), k in pl.pair.items() if net.head(ei) == v)
    return pairs + sum(pl.out.get(ej, 0) for ej in net.outputs(v))


def total_memory(net: NetworkSpec, pl: MemoryPlacement) -> int:
    return sum(node_memory(net, pl, v) for v in net.nodes)


def sink_memory(net: NetworkSpec, pl: MemoryPlacement) -> int:
    return sum(node_memory(net, pl, t) for t in net.sinks)


def memory_by_node(net: NetworkSpec, pl: MemoryPlacement) -> dict[str, int]:
    return {v: node_memory(net, pl, v) for v in net.node_order()}


def memcap_violations(net: NetworkSpec, pl: MemoryPlacement, cap: int) -> dict[str, int]:
    """Nodes whose memory exceeds ``cap`` (report only, nothing is removed)."""
    return {v: m for v, m in memory_by_node(net, pl).items() if m > cap}


def apply_placement(net: NetworkSpec, pl: MemoryPlacement):
    """A, K and B^T matrices with every kernel scaled by z^(pair + out delay)."""
    pl.validate(net)
    return kernel_matrices(net, pl)


def vec_exponent(vec: Vector) -> int | None:
    """l if vec = z^l * (constant vector); None for the zero vector."""
    exp = None
    for p in vec:
        if p.is_zero():
            continue
        k = p.monomial_exponent()
        if k is None or (exp is not None and k != exp):
            raise NonMonomialKernel(f"kernel {vec} is not single-generation")
        exp = k
    return exp


class NonMonomialKernel(ValueError):
    pass


# -- audit -------------------------------------------------------------------------


@dataclass
class AuditEntry:
    step: str
    node: str
    detail: str
    before: int
    after: int

    def line(self) -> str:
        return f"{self.step} {self.node} {self.detail} total {self.before} -> {self.after}"


# -- single-generation processing --------------------------------------------------


def single_gen_process_node(
    net: NetworkSpec,
    pl: MemoryPlacement,
    v: str,
    outputs: list[str] | None = None,
    common: bool = False,
    kernels: dict[str, Vector] | None = None,
) -> MemoryPlacement:
    """Add pair delays at v so every output combines one generation only.

    For output e_j each contributing input e_i is delayed up to the largest
    accumulated delay among e_j's inputs. With ``common`` all outputs are
    aligned to one shared delay (sink-side condition M_T(z) = z^L M_T).
    """
    if kernels is None:
        kernels = global_kernels(net, pl)
    if outputs is None:
        outputs = net.out_edges(v)
    pl = pl.copy()
    eff: dict[str, dict[str, int]] = {}
    for ej in outputs:
        eff[ej] = {}
        for ei in gamma_in(net, v, ej):
            l = vec_exponent(kernels[ei])
            if l is None:
                continue
            eff[ej][ei] = l + pl.get_pair(ei, ej)
    if common:
        target = max((x for d in eff.values() for x in d.values()), default=0)
    for ej, d in eff.items():
        if not d:
            continue
        top = target if common else max(d.values())
        for ei, x in d.items():
            if top > x:
                pl.add_pair(ei, ej, top - x)
    return pl


def reduce_node(net: NetworkSpec, pl: MemoryPlacement, v: str) -> tuple[MemoryPlacement, int, int]:
    """Share one delay line per incoming edge; returns (placement, M_v before, M_v after).

    Pair delays become taps on a line of length max_j M_{e_i,e_j}, so the
    placement itself does not change, only how it is counted.
    """
    return pl, naive_node_memory(net, pl, v), node_memory(net, pl, v)


# -- reduction between adjacent nodes ------------------------------------------------


def _line_growth(net: NetworkSpec, old: MemoryPlacement, new: MemoryPlacement, edges) -> dict[str, int]:
    return {e: edge_max(net, new, e) - edge_max(net, old, e) for e in edges}


def reduce_adjacent(
    net: NetworkSpec, pl: MemoryPlacement, v: str, subset: EdgeSet, strict: bool = False
) -> tuple[MemoryPlacement, bool]:
    """Absorb M_{Γ'} delay units per edge of ``subset`` from the downstream heads into v.

    The cost at v is the growth of the shared delay lines of the inputs feeding
    ``subset``; it is applied when that cost does not exceed the
    ``M_{Γ'} |Γ'|`` elements released downstream.
    """
    subset = tuple(subset)
    if not subset:
        return pl, False
    m = set_min(net, pl, subset)
    if m <= 0:
        return pl, False
    inputs = sorted({ei for ej in subset for ei in gamma_in(net, v, ej)}, key=net.inputs(v).index)
    new = pl.copy()
    for ej in subset:
        for ei in gamma_in(net, v, ej):
            new.add_pair(ei, ej, m)
        for ek in gamma_out(net, net.head(ej), ej):
            new.add_pair(ej, ek, -m)
    added = sum(max(0, g) for g in _line_growth(net, pl, new, inputs).values())
    if added < m * len(subset) or (not strict and added == m * len(subset)):
        return new, True
    return pl, False


def absorb_targets(net: NetworkSpec, subset) -> list[str]:
    """Edges whose global kernels an absorption over ``subset`` must preserve."""
    heads = []
    for ej in subset:
        h = net.head(ej)
        if h is not None and h not in heads:
            heads.append(h)
    return [e for h in heads for e in net.outputs(h)]


# -- reduction between non-adjacent nodes ----------------------------------------------


@dataclass(frozen=True)
class EdgeSetPair:
    E_I: EdgeSet
    E_O: EdgeSet
    closed: bool = True

    def __str__(self) -> str:
        close = "]" if self.closed else ")"
        return f"[{{{','.join(self.E_I)}}},{{{','.join(self.E_O)}}}{close}"


def _sorted_edges(net: NetworkSpec, edges) -> EdgeSet:
    order = {e: i for i, e in enumerate(net.all_edges_extended())}
    return tuple(sorted(set(edges), key=order.__getitem__))


def _union_in(net: NetworkSpec, edges) -> set[str]:
    out = set()
    for ej in edges:
        t = net.tail(ej)
        if t is not None:
            out.update(gamma_in(net, t, ej))
    return out


def _union_out(net: NetworkSpec, edges) -> set[str]:
    out = set()
    for ei in edges:
        h = net.head(ei)
        if h is not None:
            out.update(gamma_out(net, h, ei))
    return out


def classify_pair(net: NetworkSpec, E_I, E_O) -> str | None:
    """'closed', 'half-open' or None for a candidate pair of edge sets."""
    E_I, E_O = set(E_I), set(E_O)
    if _union_in(net, E_O) != E_I:
        return None
    downstream = _union_out(net, E_I)
    if downstream == E_O:
        return "closed"
    if E_O < downstream:
        return "half-open"
    return None


def compute_Pv(net: NetworkSpec, v: str) -> list[EdgeSetPair]:
    """Disjoint closed input/output pairs at v by the fixed-point iteration."""
    remaining = list(net.outputs(v))
    pairs = []
    while remaining:
        seed = remaining[0]
        E_I = set(gamma_in(net, v, seed))
        E_O = {seed}
        while True:
            new_O = set(E_O) | {ej for ei in E_I for ej in gamma_out(net, v, ei)}
            new_I = set(E_I) | {ei for ej in new_O for ei in gamma_in(net, v, ej)}
            if new_O == E_O and new_I == E_I:
                break
            E_I, E_O = new_I, new_O
        pairs.append(EdgeSetPair(_sorted_edges(net, E_I), _sorted_edges(net, E_O)))
        remaining = [e for e in remaining if e not in E_O]
    return pairs


def build_sequence(net: NetworkSpec, pair: EdgeSetPair) -> list[EdgeSetPair]:
    """Longest backward chain of pairs ending at ``pair``, most upstream first.

    Every element but the first is closed; the first may be half-open.
    """
    seq = [pair]
    cur = set(pair.E_I)
    while cur:
        if any(net.tail(e) is None for e in cur):
            break
        E_I = _union_in(net, cur)
        if not E_I:
            break
        kind = classify_pair(net, E_I, cur)
        if kind is None:  # pragma: no cover - cannot happen by construction
            break
        seq.append(EdgeSetPair(_sorted_edges(net, E_I), _sorted_edges(net, cur), kind == "closed"))
        if kind == "half-open":
            break
        cur = E_I
    seq.reverse()
    return seq


def reduce_nonadjacent(
    net: NetworkSpec, pl: MemoryPlacement, v: str, pair: EdgeSetPair, strict: bool = False
) -> tuple[MemoryPlacement, bool, dict]:
    """Move the delays held downstream of Γ_{O_i}(v) to the narrowest edge set
    of the backward sequence of ``pair``."""
    seq = build_sequence(net, pair)
    # seq[-1] is [E_i1, E_o1]; index j (1-based) counts from v upwards
    chain = list(reversed(seq))
    sizes = [len(p.E_I) for p in chain]
    k = sizes.index(min(sizes))  # smallest j on ties
    target = chain[k]
    m = set_min(net, pl, pair.E_O)
    info = {"k": k + 1, "E_ik": target.E_I, "M": m, "length": len(seq)}
    if m <= 0:
        return pl, False, info
    new = pl.copy()
    for ej in pair.E_O:
        for ek in gamma_out(net, net.head(ej), ej):
            new.add_pair(ej, ek, -m)
    for e in target.E_I:
        h = net.head(e)
        for ej in gamma_out(net, h, e):
            if ej in target.E_O:
                new.add_pair(e, ej, m)
    added = sum(max(0, g) for g in _line_growth(net, pl, new, target.E_I).values())
    info["added"] = added
    if added < m * len(pair.E_O) or (not strict and added == m * len(pair.E_O)):
        return new, True, info
    return pl, False, info


# -- distribution ----------------------------------------------------------------------


def distribute(
    net: NetworkSpec, pl: MemoryPlacement, v: str, ej: str, m: int | None = None
) -> tuple[MemoryPlacement, int]:
    """Move m delays of e_j from head(e_j) to the output of v; returns (placement, m used).

    With ``m=None`` the largest admissible m is used.
    """
    if net.tail(ej) != v:
        raise ValueError(f"edge {ej} does not leave {v}")
    vp = net.head(ej)
    if vp is None:
        return pl, 0
    mv, mvp = node_memory(net, pl, v), node_memory(net, pl, vp)
    cap = edge_min(net, pl, ej)
    if m is None:
        m = min(cap, (mvp - mv) // 2)
    if m <= 0 or m > cap or mv + m > mvp - m:
        return pl, 0
    new = pl.copy()
    for ek in gamma_out(net, vp, ej):
        new.add_pair(ej, ek, -m)
    new.add_out(ej, m)
    return new, m


# -- verification ----------------------------------------------------------------------


@dataclass
class VerifyReport:
    ok: bool
    per_sink: dict[str, tuple[int, list[list[int]]]]
    failures: list[str]


def verify_single_generation(net: NetworkSpec, pl: MemoryPlacement) -> VerifyReport:
    per_sink = {}
    failures = []
    for t in net.sinks:
        tm = transfer_matrix(net, t, pl)
        if tm.single_gen is None:
            failures.append(f"{t}: transfer matrix {tm.M} mixes generations")
            continue
        L, C = tm.single_gen
        if scalar_rank(net.field, C) != net.n:
            failures.append(f"{t}: constant part is rank deficient")
        if C != instantaneous_transfer(net, t):
            failures.append(f"{t}: constant part differs from the instantaneous transfer matrix")
        per_sink[t] = (L, C)
    return VerifyReport(not failures, per_sink, failures)


# -- the full pipeline -------------------------------------------------------------------


@dataclass
class SingleGenResult:
    placement: MemoryPlacement
    per_sink: dict[str, tuple[int, list[list[int]]]]
    total_memory: int
    sink_memory: int
    stage_totals: dict[str, int]
    audit_log: list[AuditEntry]

    def sink_breakdown(self, net: NetworkSpec) -> dict[str, int]:
        return {t: node_memory(net, self.placement, t) for t in net.sinks}


class VerificationError(RuntimeError):
    pass


def _per_node_stage(net: NetworkSpec, audit: list[AuditEntry]) -> MemoryPlacement:
    pl = MemoryPlacement()
    for v in classify_nodes(net).coding:
        before = total_memory(net, pl)
        pl = single_gen_process_node(net, pl, v)
        pl, naive, shared = reduce_node(net, pl, v)
        audit.append(
            AuditEntry("singlegen", v, f"naive {naive} shared {shared}", before, total_memory(net, pl))
        )
    for t in sorted(net.sinks, key=net.node_pos):
        before = total_memory(net, pl)
        pl = single_gen_process_node(net, pl, t, outputs=net.outputs(t)[len(net.out_edges(t)):], common=True)
        audit.append(AuditEntry("sink", t, "align outputs", before, total_memory(net, pl)))
    return pl


def _subsets(outputs: list[str], cap: int):
    if len(outputs) > cap:
        yield tuple(outputs)
        for e in outputs:
            yield (e,)
        return
    for size in range(len(outputs), 0, -1):
        yield from itertools.combinations(outputs, size)


def _reduction_passes(
    net: NetworkSpec, pl: MemoryPlacement, audit: list[AuditEntry], subset_cap: int, strict: bool, hook=None
) -> MemoryPlacement:
    """One round of nonadjacent, adjacent and distribution moves.

    ``hook(kind, v, old, new, targets)`` is called after every applied move;
    ``targets`` are the edges whose global kernels the move must preserve.
    """
    rev = list(reversed(net.node_order()))
    for v in rev:
        for pair in compute_Pv(net, v):
            before = total_memory(net, pl)
            new, ok, info = reduce_nonadjacent(net, pl, v, pair, strict)
            if ok:
                if hook:
                    hook("nonadjacent", v, pl, new, absorb_targets(net, pair.E_O))
                pl = new
                audit.append(
                    AuditEntry(
                        "nonadjacent", v, f"{pair} via {{{','.join(info['E_ik'])}}} M={info['M']}",
                        before, total_memory(net, pl),
                    )
                )
    for v in rev:
        for subset in _subsets(net.outputs(v), subset_cap):
            before = total_memory(net, pl)
            new, ok = reduce_adjacent(net, pl, v, subset, strict)
            if ok:
                if hook:
                    hook("adjacent", v, pl, new, absorb_targets(net, subset))
                pl = new
                audit.append(
                    AuditEntry("adjacent", v, "{" + ",".join(subset) + "}", before, total_memory(net, pl))
                )
    for v in net.node_order():
        for ej in net.out_edges(v):
            before = total_memory(net, pl)
            new, m = distribute(net, pl, v, ej)
            if m:
                if hook:
                    hook("distribute", v, pl, new, absorb_targets(net, [ej]))
                pl = new
                audit.append(AuditEntry("distribute", v, f"{ej} m={m}", before, total_memory(net, pl)))
    return pl


def _finish(net: NetworkSpec, pl: MemoryPlacement, stage: dict, audit: list[AuditEntry]) -> SingleGenResult:
    rep = verify_single_generation(net, pl)
    if not rep.ok:
        raise VerificationError("; ".join(rep.failures))
    return SingleGenResult(
        pl, rep.per_sink, total_memory(net, pl), sink_memory(net, pl), stage, audit
    )


def algorithm2(
    net: NetworkSpec,
    fixed_point: bool = False,
    subset_cap: int = 12,
    strict: bool = True,
    max_rounds: int = 50,
    hook=None,
) -> SingleGenResult:
    """Single-generation network code with inter-node memory reduction and distribution."""
    audit: list[AuditEntry] = []
    pl = _per_node_stage(net, audit)
    stage = {"per_node": total_memory(net, pl)}
    pl = _reduction_passes(net, pl, audit, subset_cap, strict, hook)
    if fixed_point:
        for _ in range(max_rounds):
            new = _reduction_passes(net, pl, audit, subset_cap, strict, hook)
            if new == pl:
                break
            pl = new
    stage["final"] = total_memory(net, pl)
    log.debug("algorithm2 %s: %s", net.name, stage)
    return _finish(net, pl, stage, audit)


def wzy_baseline(net: NetworkSpec) -> SingleGenResult:
    """Per-node processing only (no memory moved between nodes)."""
    audit: list[AuditEntry] = []
    pl = _per_node_stage(net, audit)
    stage = {"per_node": total_memory(net, pl), "final": total_memory(net, pl)}
    return _finish(net, pl, stage, audit)


def placement_report(net: NetworkSpec, res: SingleGenResult) -> str:
    pl = res.placement
    lines = []
    for v in net.node_order():
        for (ei, ej), k in sorted(pl.pair.items(), key=lambda kv: _pair_key(net, kv[0])):
            if net.head(ei) == v:
                lines.append(f"mem {v} pair {ei} {ej} {k}")
        for ej in net.outputs(v):
            if pl.out.get(ej):
                lines.append(f"mem {v} out {ej} {pl.out[ej]}")
    lines.append(f"total {res.total_memory}")
    for t in net.sinks:
        lines.append(f"singlegen {t} L={res.per_sink[t][0]}")
    return "\n".join(lines) + "\n"


def _pair_key(net: NetworkSpec, key: tuple[str, str]):
    order = {e: i for i, e in enumerate(net.all_edges_extended())}
    return order[key[0]], order[key[1]]


def parse_placement(text: str) -> MemoryPlacement:
    """Read the ``mem`` lines of a placement report (other lines are ignored)."""
    pl = MemoryPlacement()
    for ln, raw in enumerate(text.splitlines(), 1):
        tok = raw.split("#", 1)[0].split()
        if not tok or tok[0] != "mem":
            continue
        try:
            if tok[2] == "pair":
                pl.add_pair(tok[3], tok[4], int(tok[5]))
            elif tok[2] == "out":
                pl.add_out(tok[3], int(tok[4]))
            else:
                raise ValueError(tok[2])
        except (IndexError, ValueError) as exc:
            raise ValueError(f"line {ln}: bad placement entry {raw.strip()!r}") from exc
    return pl
