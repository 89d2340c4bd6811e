"""Convolutional network-error-correcting codes.

Input convolutional codes over F_q, their free distance and T_dfree, the
sink processing matrices, error vector reflections and a hard-decision
Viterbi decoder.
"""
from __future__ import annotations

import heapq
import itertools
import logging
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numba
import numpy as np

from .galois import FieldSpec, make_field
from .netmodel import NetworkSpec, kernel_matrices, transfer_matrix
from .polyalg import (
    PolyMatrix,
    Polynomial,
    RationalFunction,
    nilpotent_inverse,
    poly_lcm,
    rat_inverse,
    rank,
)

log = logging.getLogger(__name__)

MAX_STATES = 2**16


class CatastrophicCodeError(ValueError):
    pass


class CodeParseError(ValueError):
    pass


@dataclass(frozen=True)
class ErrorPattern:
    edges: frozenset

    @classmethod
    def of(cls, *edges: str) -> ErrorPattern:
        return cls(frozenset(edges))


@dataclass(frozen=True)
class CodeParams:
    d_free: int
    T_dfree: int


@dataclass(frozen=True)
class Trellis:
    """Controller-form state graph.

    ``next_state[s, u]`` and ``outputs[s, u, :]`` for every state s and input
    index u (the b input symbols in base q, first input least significant).
    """

    next_state: np.ndarray
    outputs: np.ndarray
    weights: np.ndarray

    @property
    def n_states(self) -> int:
        return self.next_state.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.next_state.shape[1]


@dataclass(frozen=True, eq=False)
class ConvCode:
    """Rate b/c convolutional code with polynomial generator matrix G (b x c)."""

    field: FieldSpec
    G: tuple[tuple[Polynomial, ...], ...]
    name: str = ""

    def __post_init__(self):
        if not self.G or not self.G[0]:
            raise ValueError("empty generator matrix")
        c = len(self.G[0])
        if any(len(r) != c for r in self.G):
            raise ValueError("ragged generator matrix")
        if self.b > self.c:
            raise ValueError("need b <= c")
        if rank(PolyMatrix(self.field, self.G)) != self.b:
            raise ValueError("generator matrix is not full rank")

    @classmethod
    def from_lists(cls, field: FieldSpec, rows, name: str = "") -> ConvCode:
        """``rows`` holds coefficient lists (low-to-high) per entry."""
        G = tuple(tuple(Polynomial(field, tuple(e)) for e in r) for r in rows)
        return cls(field, G, name)

    @property
    def b(self) -> int:
        return len(self.G)

    @property
    def c(self) -> int:
        return len(self.G[0])

    @property
    def row_memory(self) -> tuple[int, ...]:
        return tuple(max(max(int(p.degree), 0) for p in r) for r in self.G)

    @property
    def memory_order(self) -> int:
        return max(self.row_memory)

    @property
    def n_states(self) -> int:
        return self.field.q ** sum(self.row_memory)

    def coeff_array(self) -> np.ndarray:
        """G_k as an array of shape (m+1, b, c)."""
        m = self.memory_order
        out = np.zeros((m + 1, self.b, self.c), dtype=np.int64)
        for i, r in enumerate(self.G):
            for j, p in enumerate(r):
                for k, x in enumerate(p.coeffs):
                    out[k, i, j] = x
        return out

    def __eq__(self, other) -> bool:
        return isinstance(other, ConvCode) and self.field == other.field and self.G == other.G

    def __hash__(self) -> int:
        return hash((self.field, self.G))

    def __str__(self) -> str:
        rows = ["[" + "  ".join(str(p) for p in r) + "]" for r in self.G]
        return " ; ".join(rows)

    @cached_property
    def trellis(self) -> Trellis:
        return build_trellis(self)

    @cached_property
    def catastrophic(self) -> bool:
        return is_catastrophic(self)


# -- text format -------------------------------------------------------------------


def parse_code(text: str, name: str = "") -> ConvCode:
    """Parse ``[name <id>] [field p m] G b c ; <poly> ; <poly> ...`` (row-major).

    Polynomials are coefficient lists ``c0,c1,...``. Lines starting with '#'
    are comments; everything else is joined before parsing.
    """
    body = []
    fld = make_field(2, 1)
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        if tok[0] == "name":
            name = tok[1] if len(tok) > 1 else name
        elif tok[0] == "field":
            try:
                fld = make_field(int(tok[1]), int(tok[2]) if len(tok) > 2 else 1)
            except (IndexError, ValueError) as exc:
                raise CodeParseError(f"bad field line: {line!r}") from exc
        else:
            body.append(line)
    parts = [p.strip() for p in " ".join(body).split(";")]
    head = parts[0].split()
    if len(head) != 3 or head[0] != "G":
        raise CodeParseError("expected 'G b c' header")
    b, c = int(head[1]), int(head[2])
    polys = [p for p in parts[1:] if p]
    if len(polys) != b * c:
        raise CodeParseError(f"expected {b * c} polynomials, got {len(polys)}")
    try:
        entries = [Polynomial.parse(fld, p.replace(" ", "")) for p in polys]
    except ValueError as exc:
        raise CodeParseError(str(exc)) from exc
    G = tuple(tuple(entries[i * c:(i + 1) * c]) for i in range(b))
    return ConvCode(fld, G, name)


def load_code(path_or_text: str | Path) -> ConvCode:
    p = Path(path_or_text)
    if "\n" not in str(path_or_text) and p.exists():
        return parse_code(p.read_text(), p.stem)
    return parse_code(str(path_or_text))


def dump_code(code: ConvCode) -> str:
    lines = []
    if code.name:
        lines.append(f"name {code.name}")
    lines.append(f"field {code.field.p} {code.field.m}")
    polys = " ; ".join(p.serialize() for r in code.G for p in r)
    lines.append(f"G {code.b} {code.c} ; {polys}")
    return "\n".join(lines) + "\n"


# -- encoding ------------------------------------------------------------------------


def encode(code: ConvCode, msg) -> np.ndarray:
    """Convolve message blocks (L x b) with G; returns (L + m) x c blocks."""
    fld = code.field
    u = np.asarray(msg, dtype=np.int64).reshape(-1, code.b)
    L = u.shape[0]
    Gk = code.coeff_array()
    m = code.memory_order
    v = np.zeros((L + m, code.c), dtype=np.int64)
    for k in range(m + 1):
        for i in range(code.b):
            for j in range(code.c):
                g = Gk[k, i, j]
                if g:
                    prod = fld.mul_table[g, u[:, i]]
                    v[k:k + L, j] = fld.add_table[v[k:k + L, j], prod]
    return v


def build_trellis(code: ConvCode) -> Trellis:
    """State = the last nu_i inputs of every row, newest digit least significant."""
    fld = code.field
    q = fld.q
    nus = code.row_memory
    if code.n_states > MAX_STATES:
        raise ValueError(f"{code.n_states} states exceeds the supported {MAX_STATES}")
    S = code.n_states
    U = q**code.b
    Gk = code.coeff_array()
    nxt = np.zeros((S, U), dtype=np.int64)
    outs = np.zeros((S, U, code.c), dtype=np.int64)

    def split_state(s: int) -> list[list[int]]:
        regs = []
        for nu in nus:
            r = []
            for _ in range(nu):
                r.append(s % q)
                s //= q
            regs.append(r)
        return regs

    def join_state(regs: list[list[int]]) -> int:
        s = 0
        mult = 1
        for r in regs:
            for d in r:
                s += d * mult
                mult *= q
        return s

    for s in range(S):
        regs = split_state(s)
        for u in range(U):
            ins = [(u // q**i) % q for i in range(code.b)]
            out = [0] * code.c
            for i in range(code.b):
                hist = [ins[i]] + regs[i]  # u_i(t), u_i(t-1), ...
                for k, x in enumerate(hist):
                    if not x:
                        continue
                    for j in range(code.c):
                        g = int(Gk[k, i, j]) if k < Gk.shape[0] else 0
                        if g:
                            out[j] = fld.add(out[j], fld.mul(g, x))
            new = [([ins[i]] + regs[i])[: nus[i]] for i in range(code.b)]
            nxt[s, u] = join_state(new)
            outs[s, u] = out
    weights = np.count_nonzero(outs, axis=2)
    for a in (nxt, outs, weights):
        a.setflags(write=False)
    return Trellis(nxt, outs, weights)


# -- distance properties ---------------------------------------------------------------


def is_catastrophic(code: ConvCode) -> bool:
    """True if some cycle of zero-weight branches carries nonzero input.

    Equivalently: the zero-weight subgraph, minus the zero-input self-loop at
    the zero state, contains a cycle.
    """
    tr = code.trellis
    S, U = tr.n_states, tr.n_inputs
    adj: list[list[int]] = [[] for _ in range(S)]
    for s in range(S):
        for u in range(U):
            if tr.weights[s, u] == 0 and not (s == 0 and u == 0):
                adj[s].append(int(tr.next_state[s, u]))
    # iterative three-colour DFS
    color = [0] * S
    for root in range(S):
        if color[root]:
            continue
        stack = [(root, iter(adj[root]))]
        color[root] = 1
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                color[node] = 2
                stack.pop()
            elif color[nxt] == 1:
                return True
            elif color[nxt] == 0:
                color[nxt] = 1
                stack.append((nxt, iter(adj[nxt])))
    return False


def _require_noncatastrophic(code: ConvCode) -> None:
    if code.catastrophic:
        raise CatastrophicCodeError(f"generator {code} is catastrophic")


def free_distance(code: ConvCode) -> int:
    """Lowest weight of a path leaving the zero state and coming back to it."""
    _require_noncatastrophic(code)
    tr = code.trellis
    INF = 1 << 60
    dist = np.full(tr.n_states, INF, dtype=np.int64)
    best = INF
    heap: list[tuple[int, int]] = []
    for u in range(1, tr.n_inputs):
        s2 = int(tr.next_state[0, u])
        w = int(tr.weights[0, u])
        if s2 == 0:
            best = min(best, w)
        elif w < dist[s2]:
            dist[s2] = w
            heapq.heappush(heap, (w, s2))
    while heap:
        d, s = heapq.heappop(heap)
        if d > dist[s] or d >= best:
            continue
        for u in range(tr.n_inputs):
            s2 = int(tr.next_state[s, u])
            nd = d + int(tr.weights[s, u])
            if s2 == 0:
                best = min(best, nd)
            elif nd < dist[s2]:
                dist[s2] = nd
                heapq.heappush(heap, (nd, s2))
    if best >= INF:  # pragma: no cover - a full-rank code always returns to zero
        raise ValueError("no codeword returns to the zero state")
    return int(best)


def t_dfree(code: ConvCode, d_free: int | None = None) -> int:
    """One plus the longest truncated codeword of weight < d_free.

    Only sequences that leave the zero state on the first branch count: the
    all-zero prefix has weight 0 for every length. Such a sequence never
    re-merges (that would be a codeword of weight < d_free), and with no
    zero-weight cycles the (state, weight) graph below d_free is acyclic.
    """
    _require_noncatastrophic(code)
    if d_free is None:
        d_free = free_distance(code)
    tr = code.trellis
    frontier = set()
    for u in range(1, tr.n_inputs):
        w = int(tr.weights[0, u])
        s2 = int(tr.next_state[0, u])
        if w < d_free and s2 != 0:
            frontier.add((s2, w))
    if not frontier:
        # every diverging branch already reaches d_free on its own
        return 1
    j = 1
    limit = tr.n_states * d_free + 1
    while frontier:
        nxt = set()
        for s, w in frontier:
            for u in range(tr.n_inputs):
                nw = w + int(tr.weights[s, u])
                s2 = int(tr.next_state[s, u])
                if nw < d_free and s2 != 0:
                    nxt.add((s2, nw))
        if not nxt:
            break
        frontier = nxt
        j += 1
        if j > limit:  # pragma: no cover - guarded by the catastrophic check
            raise CatastrophicCodeError("unbounded low-weight path")
    return j + 1


def code_params(code: ConvCode) -> CodeParams:
    d = free_distance(code)
    return CodeParams(d, t_dfree(code, d))


# -- processing matrices and error reflections ----------------------------------------


def processing_matrix(M) -> tuple[Polynomial, PolyMatrix]:
    """(p_T, P_T) with p_T the monic lcm of the denominators of M^-1."""
    M = getattr(M, "M", M)
    inv = rat_inverse(M)
    p = Polynomial.one(M.field)
    for row in inv.entries:
        for x in row:
            if not x.is_zero():
                p = poly_lcm(p, x.den)
    P = inv.scale(RationalFunction.of(p))
    assert P.is_polynomial()
    return p, P


def output_code(code: ConvCode, M) -> ConvCode:
    """Generator G_I(z) M_T(z) of the code seen at a sink."""
    M = getattr(M, "M", M)
    if M.rows != code.c or M.cols != M.rows:
        raise ValueError(f"dimension mismatch: code has c={code.c}, M is {M.rows}x{M.cols}")
    GM = PolyMatrix(code.field, code.G) @ M
    if not GM.is_polynomial():
        raise ValueError("transfer matrix must be polynomial")
    G = tuple(tuple(GM.poly(i, j) for j in range(GM.cols)) for i in range(GM.rows))
    out = ConvCode(code.field, G, code.name + "_out" if code.name else "")
    if out.n_states <= MAX_STATES and out.catastrophic:
        log.warning("output code %s is catastrophic", out)
    return out


def edge_to_sink(net: NetworkSpec, placement=None) -> dict[str, PolyMatrix]:
    """F_T(z) = F(z) B_T^T per sink: row e maps an error on edge e to the sink outputs."""
    _, K, Bt = kernel_matrices(net, placement)
    F = nilpotent_inverse(K)
    return {t: F @ Bt[t] for t in net.sinks}


def ts_bound(n: int, r: int, T_delay: int) -> int:
    if r < 1:
        raise ValueError("r must be >= 1")
    return r * n * ((n + 1) * (T_delay - 1) + 1)


def error_vectors(net: NetworkSpec, pattern: ErrorPattern, exact: bool = False):
    """Yield the error vectors w (dict edge -> nonzero value) that match a pattern.

    Default: support(w) is any nonempty subset of the pattern. With ``exact`` the
    support must equal the pattern. The empty pattern yields the zero vector.
    """
    unknown = set(pattern.edges) - set(net.edge_ids)
    if unknown:
        raise ValueError(f"pattern references unknown edges {sorted(unknown)}")
    edges = sorted(pattern.edges, key=net.edge_pos.__getitem__)
    if not edges:
        yield {}
        return
    sizes = [len(edges)] if exact else range(1, len(edges) + 1)
    nz = range(1, net.field.q)
    for k in sizes:
        for sub in itertools.combinations(edges, k):
            for vals in itertools.product(nz, repeat=k):
                yield dict(zip(sub, vals))


def reflection_weight(row) -> int:
    return sum(x.num.weight() for x in row)


@dataclass
class ReflectionResult:
    W_s: set
    t_s: int
    per_sink: dict[str, int]
    p_T: dict[str, Polynomial]
    P_T: dict[str, PolyMatrix]
    r: int

    @property
    def reflections(self) -> set:
        return self.W_s


def error_reflections(net: NetworkSpec, placement, patterns, exact: bool = False) -> ReflectionResult:
    """W_s = { w F_T(z) P_T(z) } over sinks and patterns; t_s its max Hamming weight."""
    fld = net.field
    FT = edge_to_sink(net, placement)
    W: set = set()
    per_sink: dict[str, int] = {}
    pT: dict[str, Polynomial] = {}
    PT: dict[str, PolyMatrix] = {}
    patterns = list(patterns)
    for t in net.sinks:
        p, P = processing_matrix(transfer_matrix(net, t, placement).M)
        pT[t], PT[t] = p, P
        H = FT[t] @ P  # |E| x n, polynomial
        best = 0
        for rho in patterns:
            for w in error_vectors(net, rho, exact):
                acc = [Polynomial.zero(fld)] * net.n
                for e, val in w.items():
                    i = net.edge_pos[e]
                    for k in range(net.n):
                        acc[k] = acc[k] + H.poly(i, k).scale(val)
                key = tuple(a.coeffs for a in acc)
                W.add(key)
                best = max(best, sum(a.weight() for a in acc))
        per_sink[t] = best
    r = max(p.weight() for p in pT.values()) if pT else 1
    return ReflectionResult(W, max(per_sink.values(), default=0), per_sink, pT, PT, r)


def single_edge_patterns(net: NetworkSpec) -> list[ErrorPattern]:
    return [ErrorPattern.of(e) for e in net.edge_ids]


def double_edge_patterns(net: NetworkSpec) -> list[ErrorPattern]:
    return [ErrorPattern.of(a, b) for a, b in itertools.combinations(net.edge_ids, 2)]


def parse_patterns(text: str) -> list[ErrorPattern]:
    """One ``pattern e1 e2 ...`` per line; ``pattern`` alone is the empty pattern.

    The shorthands ``singles`` / ``doubles`` are expanded by :func:`resolve_patterns`.
    """
    out = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        if tok[0] == "pattern":
            out.append(ErrorPattern(frozenset(tok[1:])))
        elif tok[0] in ("singles", "doubles"):
            out.append(tok[0])
        else:
            raise ValueError(f"bad pattern line: {line!r}")
    return out


def resolve_patterns(net: NetworkSpec, items) -> list[ErrorPattern]:
    out = []
    for it in items:
        if it == "singles":
            out.extend(single_edge_patterns(net))
        elif it == "doubles":
            out.extend(double_edge_patterns(net))
        else:
            out.append(it)
    return out


def load_patterns(net: NetworkSpec, path_or_text: str | Path) -> list[ErrorPattern]:
    p = Path(path_or_text)
    text = p.read_text() if "\n" not in str(path_or_text) and p.exists() else str(path_or_text)
    return resolve_patterns(net, parse_patterns(text))


# -- Viterbi ---------------------------------------------------------------------------


@numba.njit(cache=True, nogil=True)
def _viterbi_kernel(nxt, outs, rx, traceback, terminated):
    S, U = nxt.shape
    N, c = rx.shape
    W = traceback + 1
    big = np.int64(1) << 50
    pm = np.full(S, big, dtype=np.int64)
    pm[0] = 0
    new = np.empty(S, dtype=np.int64)
    prev_s = np.zeros((W, S), dtype=np.int64)
    prev_u = np.zeros((W, S), dtype=np.int64)
    decided = np.zeros(N, dtype=np.int64)
    for t in range(N):
        slot = t % W
        for s in range(S):
            new[s] = big
        for s in range(S):
            base = pm[s]
            if base >= big:
                continue
            for u in range(U):
                bm = 0
                for j in range(c):
                    if outs[s, u, j] != rx[t, j]:
                        bm += 1
                ns = nxt[s, u]
                m = base + bm
                if m < new[ns]:
                    new[ns] = m
                    prev_s[slot, ns] = s
                    prev_u[slot, ns] = u
        for s in range(S):
            pm[s] = new[s]
        if t >= traceback:
            best = 0
            for s in range(1, S):
                if pm[s] < pm[best]:
                    best = s
            st = best
            for k in range(traceback):
                sl = (t - k) % W
                st = prev_s[sl, st]
            decided[t - traceback] = prev_u[(t - traceback) % W, st]
    # flush the undecided tail
    if terminated:
        st = 0
    else:
        st = 0
        for s in range(1, S):
            if pm[s] < pm[st]:
                st = s
    start = N - traceback if N > traceback else 0
    for t in range(N - 1, start - 1, -1):
        sl = t % W
        decided[t] = prev_u[sl, st]
        st = prev_s[sl, st]
    return decided


def default_traceback(code: ConvCode) -> int:
    return 5 * (code.memory_order + 1)


def viterbi_decode(
    code: ConvCode, received, traceback: int | None = None, terminated: bool = True
) -> np.ndarray:
    """Minimum Hamming distance path decoding with a sliding traceback window.

    ``received`` is N x c. With ``terminated`` the path is forced to end in the
    zero state and the last ``memory_order`` blocks (the flush) are dropped,
    giving N - m message blocks; otherwise N blocks are returned.
    """
    tr = code.trellis
    rx = np.ascontiguousarray(np.asarray(received, dtype=np.int64).reshape(-1, code.c))
    if rx.shape[0] < 1:
        raise ValueError("empty received stream")
    if traceback is None:
        traceback = default_traceback(code)
    traceback = max(int(traceback), 1)
    dec = _viterbi_kernel(tr.next_state, tr.outputs, rx, traceback, terminated)
    q = code.field.q
    blocks = np.stack([(dec // q**i) % q for i in range(code.b)], axis=1)
    if terminated:
        blocks = blocks[: max(rx.shape[0] - code.memory_order, 0)]
    return blocks


def brute_force_decode(code: ConvCode, received) -> tuple[np.ndarray, int]:
    """Exhaustive minimum-distance decoding over all terminated messages (tiny inputs)."""
    rx = np.asarray(received, dtype=np.int64).reshape(-1, code.c)
    L = rx.shape[0] - code.memory_order
    q = code.field.q
    best, best_d = None, None
    for digits in itertools.product(range(q), repeat=L * code.b):
        msg = np.array(digits, dtype=np.int64).reshape(L, code.b)
        d = int(np.count_nonzero(encode(code, msg) != rx))
        if best_d is None or d < best_d:
            best, best_d = msg, d
    return best, best_d
