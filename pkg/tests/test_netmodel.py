import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sgnc.galois import GF2
from sgnc.netmodel import (
    NetworkError,
    ancestral_order,
    classify_nodes,
    dump_network,
    F_matrix,
    global_kernels,
    instantaneous_transfer,
    longest_path_edges,
    matrix_rank,
    min_cut,
    n_min,
    parse_network,
    scalar_rank,
    t_delay,
    transfer_matrix,
    transfer_matrix_via_F,
)
from sgnc.polyalg import PolyMatrix, Polynomial, max_degree
from sgnc.randnet import random_valid_network

z = Polynomial.monomial(GF2, 1)

TRIVIAL = """
node s T
source s
sink T
edge e1 s T
A 1 e1 1
B T e1 1 1
"""


def test_trivial_network():
    net = parse_network(TRIVIAL)
    assert net.n == 1 and min_cut(net, "T") == 1
    assert transfer_matrix(net, "T").M == PolyMatrix(GF2, [[1]])


def test_butterfly_shape(bfly):
    assert len(bfly.edge_ids) == 10
    assert bfly.sinks == ["T1", "T2"]
    assert [min_cut(bfly, t) for t in bfly.sinks] == [2, 2]


@pytest.mark.parametrize(
    "extra,msg",
    [
        ("edge x T s\n", "source"),
        ("edge x s nowhere\n", "unknown"),
        ("K e1 e1 1\n", "adjacent"),
        ("dim 2\n", "min-cut"),
        ("A 1 e1 7\n", "coefficient"),
    ],
)
def test_validation_errors(extra, msg):
    with pytest.raises(NetworkError) as ei:
        parse_network(TRIVIAL + extra)
    assert msg in str(ei.value)


def test_cycle_rejected():
    text = "node s a b T\nsource s\nsink T\nedge e1 s a\nedge e2 a b\nedge e3 b a\nedge e4 b T\n"
    with pytest.raises(NetworkError, match="cycle"):
        parse_network(text)


def test_disconnected_sink_has_zero_cut():
    text = "node s T U\nsource s\nsink T\nedge e1 s T\n"
    net = parse_network(text)
    assert min_cut(net, "U") == 0


def test_parallel_edges_keep_file_order():
    net = parse_network("node s T\nsource s\nsink T\nedge b s T\nedge a s T\n")
    assert [e for e in ancestral_order(net) if not ":" in e] == ["b", "a"]
    assert min_cut(net, "T") == 2


def test_ancestral_order_is_topological(dbf):
    order = ancestral_order(dbf)
    pos = {e: i for i, e in enumerate(order)}
    assert order[: dbf.n] == ["in:1", "in:2"]
    assert all(e.startswith("out:") for e in order[-2 * len(dbf.sinks):])
    for ei in order:
        h = dbf.head(ei)
        if h is None:
            continue
        for ej in dbf.outputs(h):
            assert pos[ei] < pos[ej]


def test_chain_kernels(chain):
    f = global_kernels(chain)
    # no delay on the edge leaving the source, one per later hop
    assert f["c1"] == (Polynomial.one(GF2),)
    assert f["c3"] == (z**2,)
    assert transfer_matrix(chain, "t").L == 2
    assert instantaneous_transfer(chain, "t") == [[1]]
    assert classify_nodes(chain).coding == []


def test_table_matrices_two_routes(dbf):
    for t in dbf.sinks:
        assert transfer_matrix(dbf, t).M == transfer_matrix_via_F(dbf, t)


def test_dbf_t1_and_t3(dbf):
    assert transfer_matrix(dbf, "T1").M == PolyMatrix(GF2, [[z, z**3], [0, z**4]])
    assert transfer_matrix(dbf, "T3").M == PolyMatrix(GF2, [[z**5 + z**8, z**5], [z**9, z**6]])
    assert instantaneous_transfer(dbf, "T1") == [[1, 1], [0, 1]]


def test_classification(dbf, bfly):
    cls = classify_nodes(dbf)
    assert cls.strata == [["v3"], ["v9"]]
    assert classify_nodes(bfly).strata == [["v3"]]


def test_butterfly_instantaneous_full_rank(bfly):
    for t in bfly.sinks:
        assert scalar_rank(bfly.field, instantaneous_transfer(bfly, t)) == 2


def test_t_delay(dbf, bfly):
    assert max_degree(F_matrix(dbf)) == longest_path_edges(dbf) - 1
    assert t_delay(bfly) == 5


def test_dump_roundtrip(dbf):
    again = parse_network(dump_network(dbf))
    for t in dbf.sinks:
        assert transfer_matrix(again, t).M == transfer_matrix(dbf, t).M
    assert n_min(again) == 2


@settings(max_examples=60)
@given(st.integers(0, 10**6))
def test_rank_matches_instantaneous(seed):
    net = random_valid_network(seed, max_nodes=8)
    for t in net.sinks:
        M = transfer_matrix(net, t).M
        assert matrix_rank(M) == scalar_rank(net.field, instantaneous_transfer(net, t)) == net.n
        assert M == transfer_matrix_via_F(net, t)
    assert max_degree(F_matrix(net)) <= max(longest_path_edges(net) - 1, 0)
