import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import load_example
from sgnc.memplace import (
    MemoryPlacement,
    algorithm2,
    build_sequence,
    classify_pair,
    compute_Pv,
    distribute,
    naive_node_memory,
    node_memory,
    parse_placement,
    placement_report,
    reduce_adjacent,
    reduce_nonadjacent,
    total_memory,
    verify_single_generation,
    wzy_baseline,
)
from sgnc.netmodel import global_kernels, transfer_matrix
from sgnc.randnet import random_valid_network


def kernel_checker(net):
    calls = []

    def hook(kind, v, old, new, targets):
        before, after = global_kernels(net, old), global_kernels(net, new)
        for e in targets:
            assert before[e] == after[e], (kind, v, e)
        calls.append(kind)

    return hook, calls


def test_placement_bookkeeping():
    pl = MemoryPlacement()
    pl.add_pair("a", "b", 2)
    pl.add_pair("a", "b", -2)
    assert pl.pair == {}
    with pytest.raises(ValueError):
        pl.add_out("x", -1)


def test_example3_shared_line():
    net, pl = load_example(3)
    assert naive_node_memory(net, pl, "v") == 3
    assert node_memory(net, pl, "v") == 2


def test_example4_pairs():
    net, _ = load_example(4)
    pairs = compute_Pv(net, "v")
    assert [(p.E_I, p.E_O) for p in pairs] == [
        (("e1", "e2", "e3"), ("e5",)),
        (("e4",), ("e6", "e7", "e8")),
    ]


@pytest.mark.parametrize("k", [4, 5, 6, 8])
def test_pv_partitions_edges(k):
    net, _ = load_example(k)
    for v in net.node_order():
        pairs = compute_Pv(net, v)
        outs = [e for p in pairs for e in p.E_O]
        ins = [e for p in pairs for e in p.E_I]
        assert sorted(outs) == sorted(net.outputs(v))
        assert len(ins) == len(set(ins))
        for p in pairs:
            assert classify_pair(net, p.E_I, p.E_O) == "closed"


def test_example5_adjacent():
    net, pl = load_example(5)
    assert total_memory(net, pl) == 3
    new, ok = reduce_adjacent(net, pl, "v1", ("e3", "e4", "e5"), strict=True)
    assert ok
    assert total_memory(net, new) == 2 and node_memory(net, new, "v1") == 2
    for t in net.sinks:
        assert transfer_matrix(net, t, new).M == transfer_matrix(net, t, pl).M


def test_example6_nonadjacent():
    net, pl = load_example(6)
    pair = compute_Pv(net, "v3")[0]
    seq = build_sequence(net, pair)
    assert [str(p) for p in seq] == [
        "[{e1},{e2,e3})",
        "[{e2,e3},{e5,e6,e7,e8}]",
        "[{e5,e6,e7,e8},{e9,e10,e11,e12}]",
        "[{e9,e10,e11,e12},{e13,e14,e15}]",
    ]
    new, ok, info = reduce_nonadjacent(net, pl, "v3", pair, strict=True)
    assert ok and info["E_ik"] == ("e1",)
    assert (total_memory(net, pl), total_memory(net, new)) == (3, 1)
    assert transfer_matrix(net, "T", new).M == transfer_matrix(net, "T", pl).M


def test_example7_adjacent_subset_only():
    net, pl = load_example(7)
    new, ok = reduce_adjacent(net, pl, "v", ("e6", "e7"), strict=True)
    assert ok and (total_memory(net, pl), total_memory(net, new)) == (2, 1)
    assert not reduce_adjacent(net, pl, "v", ("e6", "e7", "e8"), strict=True)[1]
    second = compute_Pv(net, "v")[1]
    assert not reduce_nonadjacent(net, pl, "v", second, strict=True)[1]


def test_example8_distribution():
    net, pl = load_example(8)
    assert (node_memory(net, pl, "v1"), node_memory(net, pl, "v2")) == (0, 3)
    new, m = distribute(net, pl, "v1", "e2")
    assert m == 1
    assert (node_memory(net, new, "v1"), node_memory(net, new, "v2")) == (1, 2)
    assert transfer_matrix(net, "T", new).M == transfer_matrix(net, "T", pl).M


def test_double_butterfly_totals(dbf):
    res = algorithm2(dbf)
    assert res.stage_totals == {"per_node": 20, "final": 12}
    assert res.sink_memory == 7
    base = wzy_baseline(dbf)
    assert base.total_memory == 20 and base.sink_memory == 15


def test_report_roundtrip(dbf):
    res = algorithm2(dbf)
    assert parse_placement(placement_report(dbf, res)) == res.placement


def test_butterfly_delay_unchanged(bfly):
    res = algorithm2(bfly)
    assert res.total_memory == 6
    assert {t: L for t, (L, _) in res.per_sink.items()} == {"T1": 4, "T2": 4}


@pytest.mark.parametrize("k", [3, 5, 6, 7, 8])
def test_examples_kernel_preservation(k):
    net, _ = load_example(k)
    hook, _ = kernel_checker(net)
    res = algorithm2(net, fixed_point=True, hook=hook)
    assert verify_single_generation(net, res.placement).ok


@settings(max_examples=200)
@given(st.integers(0, 2**31 - 1), st.booleans())
def test_random_networks(seed, fixed_point):
    net = random_valid_network(seed, max_nodes=9)
    hook, _ = kernel_checker(net)
    res = algorithm2(net, fixed_point=fixed_point, hook=hook)
    base = wzy_baseline(net)
    # every reduction move only ever lowers the total
    totals = [(a.before, a.after) for a in res.audit_log if a.step in ("nonadjacent", "adjacent", "distribute")]
    assert all(after <= before for before, after in totals)
    assert res.total_memory <= base.total_memory
    assert verify_single_generation(net, res.placement).ok
    for t, (L, C) in res.per_sink.items():
        assert transfer_matrix(net, t, res.placement).single_gen == (L, C)


def test_sequence_on_chain(chain):
    assert [len(build_sequence(chain, p)) for v in chain.node_order() for p in compute_Pv(chain, v)] == [1, 2, 3, 4]
