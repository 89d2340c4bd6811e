"""Probabilistic edge-error model and Monte Carlo BER harness.

At every time instant exactly i edges are in error with probability p^i
(i = 1..|E|) and no edge errs with probability q = 1 - sum p^i. Errors are
additive, uniform over the nonzero field elements, and i.i.d. across time.

Two simulation engines are provided. :class:`NetworkSimulator` steps the
network symbol by symbol with explicit delay lines. The BER harness uses the
linear "filter" engine instead, which convolves the input stream and every
edge's error stream with the corresponding sink responses; the two agree
exactly (checked in the tests).
"""
from __future__ import annotations

import csv
import io
import logging
import os
import struct
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .cnecc import ConvCode, edge_to_sink, encode, processing_matrix, viterbi_decode
from .galois import FieldSpec
from .memplace import MemoryPlacement, algorithm2
from .netmodel import NetworkSpec, ancestral_order, transfer_matrix
from .polyalg import PolyMatrix

log = logging.getLogger(__name__)

MODES = ("nomem", "mem")
MODE_ALIASES = {
    "nomem": "nomem",
    "memory-free": "nomem",
    "mem": "mem",
    "with-memory": "mem",
}
CSV_HEADER = ["sink", "code", "p", "mode", "bits", "errors", "ber"]
N_BATCHES = 50


@dataclass(frozen=True)
class ErrorModel:
    p: float
    edge_count: int
    field_q: int = 2

    def __post_init__(self):
        if not 0 <= self.p < 1:
            raise ValueError("p must lie in [0, 1)")
        if self.edge_count < 1:
            raise ValueError("need at least one edge")
        if self.q < 0:
            raise ValueError(f"p = {self.p} too large: no-error probability would be negative")

    @property
    def q(self) -> float:
        return 1.0 - float(self.error_probs().sum())

    def error_probs(self) -> np.ndarray:
        """Probabilities of exactly i = 1..|E| edges in error."""
        return self.p ** np.arange(1, self.edge_count + 1, dtype=float)

    def count_distribution(self) -> np.ndarray:
        """P(i edges in error) for i = 0..|E|; sums to one by construction."""
        pi = self.error_probs()
        return np.concatenate([[1.0 - pi.sum()], pi])


def _rows_random_subsets(rng: np.random.Generator, counts: np.ndarray, E: int) -> np.ndarray:
    """Boolean mask (len(counts) x E) with a uniform counts[r]-subset set in row r."""
    keys = rng.random((len(counts), E))
    ranks = keys.argsort(axis=1).argsort(axis=1)
    return ranks < counts[:, None]


def sample_error_matrix(model: ErrorModel, rng: np.random.Generator, steps: int) -> np.ndarray:
    """Edge-error values for ``steps`` instants, shape (steps, |E|)."""
    E = model.edge_count
    counts = rng.choice(E + 1, size=steps, p=model.count_distribution())
    out = np.zeros((steps, E), dtype=np.int64)
    hit = np.flatnonzero(counts)
    if hit.size:
        mask = _rows_random_subsets(rng, counts[hit], E)
        vals = rng.integers(1, model.field_q, size=mask.shape)
        out[hit] = np.where(mask, vals, 0)
    return out


def sample_errors(model: ErrorModel, rng: np.random.Generator) -> np.ndarray:
    """Edge-error vector for one time instant."""
    return sample_error_matrix(model, rng, 1)[0]


# -- step simulator ----------------------------------------------------------------


class NetworkSimulator:
    """Symbol-level simulation with per-edge delay lines.

    Each real edge e_j carries, at time t,
        sum_i c(e_i, e_j) * sym(e_i, t - d(e_i, e_j)) + err_j(t)
    with d = edge delay (1, or 0 out of the source) + pair delay + outgoing-edge
    delay. Sink outputs use the pair/out delays of their virtual output edges.
    """

    def __init__(self, net: NetworkSpec, placement: MemoryPlacement | None = None):
        self.net = net
        self.fld: FieldSpec = net.field
        pair = placement.pair if placement is not None else {}
        outm = placement.out if placement is not None else {}
        self.order = [e for e in ancestral_order(net) if not e.startswith("in:") and net.head(e) is not None]
        self.taps: dict[str, list[tuple[str, int, int]]] = {}
        maxd = 0
        for ej in list(self.order) + [e.id for t in net.sinks for e in net.virtual_outputs[t]]:
            v = net.tail(ej)
            base = 0 if (v == net.source or net.head(ej) is None) else 1
            taps = []
            for ei in net.inputs(v):
                c = net.coef(ei, ej)
                if c:
                    d = base + pair.get((ei, ej), 0) + outm.get(ej, 0)
                    taps.append((ei, c, d))
                    maxd = max(maxd, d)
            self.taps[ej] = taps
        self.depth = maxd + 1
        self.sources = [e.id for e in net.virtual_inputs] + self.order
        self.reset()

    def reset(self) -> None:
        self.t = 0
        self.hist = {e: np.zeros(self.depth, dtype=np.int64) for e in self.sources}

    def _read(self, e: str, d: int) -> int:
        if d > self.t:
            return 0
        return int(self.hist[e][(self.t - d) % self.depth])

    def _combine(self, ej: str) -> int:
        add, mul = self.fld.add, self.fld.mul
        acc = 0
        for ei, c, d in self.taps[ej]:
            x = self._read(ei, d)
            if x:
                acc = add(acc, mul(c, x))
        return acc

    def step(self, x_block, err=None) -> dict[str, np.ndarray]:
        net = self.net
        slot = self.t % self.depth
        for i, e in enumerate(net.virtual_inputs):
            self.hist[e.id][slot] = int(x_block[i])
        for e in self.order:
            val = self._combine(e)
            if err is not None:
                w = int(err[net.edge_pos[e]])
                if w:
                    val = self.fld.add(val, w)
            self.hist[e][slot] = val
        out = {}
        for t in net.sinks:
            out[t] = np.array([self._combine(eo.id) for eo in net.virtual_outputs[t]], dtype=np.int64)
        self.t += 1
        return out

    def run(self, x, errs=None, steps: int | None = None) -> dict[str, np.ndarray]:
        """Feed x (N x n) then zeros up to ``steps``; returns per-sink (steps x n)."""
        x = np.asarray(x, dtype=np.int64).reshape(-1, self.net.n)
        steps = x.shape[0] if steps is None else steps
        outs = {t: np.zeros((steps, self.net.n), dtype=np.int64) for t in self.net.sinks}
        zero = np.zeros(self.net.n, dtype=np.int64)
        for k in range(steps):
            xb = x[k] if k < x.shape[0] else zero
            eb = errs[k] if errs is not None and k < len(errs) else None
            y = self.step(xb, eb)
            for t in self.net.sinks:
                outs[t][k] = y[t]
        return outs


def simulate_network_step(sim: NetworkSimulator, x_block, err=None) -> dict[str, np.ndarray]:
    return sim.step(x_block, err)


def error_arrival_times(
    net: NetworkSpec, placement: MemoryPlacement | None, edge: str, sink: str, t1: int = 0, horizon: int = 64
) -> list[int | None]:
    """First time each output of ``sink`` is disturbed by a single error on ``edge`` at t1."""
    sim = NetworkSimulator(net, placement)
    errs = np.zeros((horizon, len(net.edge_ids)), dtype=np.int64)
    errs[t1, net.edge_pos[edge]] = 1
    out = sim.run(np.zeros((0, net.n)), errs, steps=horizon)[sink]
    times = []
    for k in range(net.n):
        nz = np.flatnonzero(out[:, k])
        times.append(int(nz[0]) if nz.size else None)
    return times


# -- filter engine ------------------------------------------------------------------


def conv_stream(fld: FieldSpec, s: np.ndarray, coeffs, out: np.ndarray) -> None:
    """out[k + t] += coeffs[k] * s[t] over the field, in place."""
    T = len(s)
    for k, h in enumerate(coeffs):
        if not h or k >= len(out):
            continue
        n = min(T, len(out) - k)
        prod = fld.mul_table[h, s[:n]]
        out[k:k + n] = fld.add_table[out[k:k + n], prod]


def apply_poly_matrix(fld: FieldSpec, stream: np.ndarray, P: PolyMatrix, length: int | None = None) -> np.ndarray:
    """Row-vector stream (T x r) times polynomial matrix P (r x c)."""
    T = stream.shape[0]
    length = T + max(0, _max_deg(P)) if length is None else length
    out = np.zeros((length, P.cols), dtype=np.int64)
    for i in range(P.rows):
        for j in range(P.cols):
            p = P.poly(i, j)
            if p:
                conv_stream(fld, stream[:, i], p.coeffs, out[:, j])
    return out


def _max_deg(P: PolyMatrix) -> int:
    d = 0
    for i in range(P.rows):
        for j in range(P.cols):
            p = P.poly(i, j)
            if p:
                d = max(d, int(p.degree))
    return d


@dataclass
class SinkChannel:
    """Processed response of one sink: input map M_T P_T and error map F_T P_T."""

    sink: str
    delay: int
    MP: PolyMatrix
    H: PolyMatrix

    def process(self, fld: FieldSpec, x: np.ndarray, errs: np.ndarray, length: int) -> np.ndarray:
        out = np.zeros((length, self.MP.cols), dtype=np.int64)
        for i in range(self.MP.rows):
            for j in range(self.MP.cols):
                p = self.MP.poly(i, j)
                if p:
                    conv_stream(fld, x[:, i], p.coeffs, out[:, j])
        for e in range(self.H.rows):
            col = errs[:, e]
            if not col.any():
                continue
            for j in range(self.H.cols):
                p = self.H.poly(e, j)
                if p:
                    conv_stream(fld, col, p.coeffs, out[:, j])
        return out


def sink_channels(net: NetworkSpec, placement: MemoryPlacement | None) -> dict[str, SinkChannel]:
    FT = edge_to_sink(net, placement)
    chans = {}
    for t in net.sinks:
        M = transfer_matrix(net, t, placement).M
        p, P = processing_matrix(M)
        L = p.monomial_exponent()
        if L is None:
            raise ValueError(f"sink {t}: processing function {p} is not a monomial")
        chans[t] = SinkChannel(t, L, M @ P, FT[t] @ P)
    return chans


# -- BER harness ---------------------------------------------------------------------


@dataclass
class SimConfig:
    net: NetworkSpec
    code: ConvCode
    p_list: list[float]
    modes: tuple[str, ...] = MODES
    time_steps: int = 10**6
    seed: int = 0
    traceback: int | None = None
    placement: MemoryPlacement | None = None

    def __post_init__(self):
        if self.time_steps < 1:
            raise ValueError("time_steps must be >= 1")
        self.modes = tuple(normalize_mode(m) for m in self.modes)
        if self.code.c != self.net.n:
            raise ValueError(f"code length c={self.code.c} must equal network dimension n={self.net.n}")
        if self.time_steps <= self.code.memory_order:
            raise ValueError("time_steps must exceed the code memory")


@dataclass(frozen=True)
class BerRecord:
    sink: str
    code: str
    p: float
    mode: str
    bit_errors: int
    bits_total: int
    sigma: float = field(default=0.0, compare=False)

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits_total if self.bits_total else 0.0

    def row(self) -> list[str]:
        return [self.sink, self.code, repr(float(self.p)), self.mode, str(self.bits_total), str(self.bit_errors), f"{self.ber:.6e}"]


def normalize_mode(mode: str) -> str:
    try:
        return MODE_ALIASES[mode]
    except KeyError:
        raise ValueError(f"unknown placement mode {mode!r}") from None


def cell_rng(seed: int, code_name: str, p: float, mode: str) -> np.random.Generator:
    """PCG64 substream derived from the seed and the (code, p, mode) cell key."""
    pbits = struct.unpack("<Q", struct.pack("<d", float(p)))[0]
    key = (zlib.crc32(code_name.encode()), pbits & 0xFFFFFFFF, pbits >> 32, MODES.index(mode))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


def _bit_errors(fld: FieldSpec, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Per-symbol count of differing bits (p = 2) or differing symbols (odd p)."""
    if fld.p == 2:
        x = np.bitwise_xor(a, b).astype(np.uint64)
        return np.bitwise_count(x).astype(np.int64) if hasattr(np, "bitwise_count") else np.vectorize(lambda v: bin(int(v)).count("1"))(x)
    return (a != b).astype(np.int64)


def _batch_sigma(err_per_block: np.ndarray, bits_per_block: int) -> float:
    n = len(err_per_block)
    nb = min(N_BATCHES, n)
    if nb < 2:
        return 0.0
    batches = np.array_split(err_per_block, nb)
    rates = np.array([b.sum() / (len(b) * bits_per_block) for b in batches])
    return float(rates.std(ddof=1) / np.sqrt(nb))


def simulate_cell(
    net: NetworkSpec,
    code: ConvCode,
    chans: dict[str, SinkChannel],
    p: float,
    mode: str,
    steps: int,
    seed: int,
    traceback: int | None,
) -> list[BerRecord]:
    fld = net.field
    rng = cell_rng(seed, code.name, p, mode)
    m = code.memory_order
    msg = rng.integers(0, fld.q, size=(steps - m, code.b))
    x = encode(code, msg)  # steps x n, already terminated
    model = ErrorModel(p, len(net.edge_ids), fld.q)
    span = max(c.delay for c in chans.values())
    errs = sample_error_matrix(model, rng, steps + span)
    recs = []
    bits_per_sym = fld.m if fld.p == 2 else 1
    for t in net.sinks:
        ch = chans[t]
        y = ch.process(fld, x, errs, steps + ch.delay)
        rx = y[ch.delay:ch.delay + steps]
        dec = viterbi_decode(code, rx, traceback)
        bit_err = _bit_errors(fld, dec, msg).sum(axis=1)
        bits = msg.size * bits_per_sym
        recs.append(
            BerRecord(t, code.name, p, mode, int(bit_err.sum()), bits, _batch_sigma(bit_err, code.b * bits_per_sym))
        )
    return recs


def _threads() -> int:
    env = os.environ.get("NETGEN_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            log.warning("ignoring bad NETGEN_THREADS=%r", env)
    return os.cpu_count() or 1


def mode_placement(net: NetworkSpec, mode: str, placement: MemoryPlacement | None = None):
    if normalize_mode(mode) == "nomem":
        return None
    return placement if placement is not None else algorithm2(net).placement


def run_sweep(
    net: NetworkSpec,
    codes: list[ConvCode],
    p_list,
    modes=MODES,
    time_steps: int = 10**6,
    seed: int = 0,
    traceback: int | None = None,
    placement: MemoryPlacement | None = None,
    threads: int | None = None,
) -> list[BerRecord]:
    """All (code, p, mode) cells, concurrently; rows ordered by (sink, code, p, mode)."""
    modes = tuple(normalize_mode(m) for m in modes)
    chans = {m: sink_channels(net, mode_placement(net, m, placement)) for m in modes}
    cells = [(ci, pi, mi) for ci in range(len(codes)) for pi in range(len(p_list)) for mi in range(len(modes))]

    def work(cell):
        ci, pi, mi = cell
        return cell, simulate_cell(
            net, codes[ci], chans[modes[mi]], float(p_list[pi]), modes[mi], time_steps, seed, traceback
        )

    nthreads = min(threads or _threads(), len(cells)) or 1
    if nthreads > 1:
        with ThreadPoolExecutor(nthreads) as ex:
            results = dict(ex.map(work, cells))
    else:
        results = dict(work(c) for c in cells)
    sink_idx = {t: i for i, t in enumerate(net.sinks)}
    rows = []
    for cell, recs in results.items():
        for r in recs:
            rows.append(((sink_idx[r.sink],) + cell, r))
    rows.sort(key=lambda kv: kv[0])
    return [r for _, r in rows]


def run_ber(cfg: SimConfig) -> list[BerRecord]:
    return run_sweep(
        cfg.net, [cfg.code], cfg.p_list, cfg.modes, cfg.time_steps, cfg.seed, cfg.traceback, cfg.placement
    )


def records_to_csv(records: list[BerRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in records:
        w.writerow(r.row())
    return buf.getvalue()


def write_csv(records: list[BerRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(records_to_csv(records))
