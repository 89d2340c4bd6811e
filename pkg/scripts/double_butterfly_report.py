"""Transfer matrices, processing matrices and memory counts on the
modified double-butterfly, before and after single-generation placement."""
from sgnc import data_path
from sgnc.cnecc import processing_matrix
from sgnc.memplace import algorithm2, placement_report, wzy_baseline
from sgnc.netmodel import load_network, transfer_matrix


def show(M):
    return "[" + "; ".join(", ".join(str(x) for x in M.row(i)) for i in range(M.rows)) + "]"


def row_degrees(P):
    return sum(max((p.degree for j in range(P.cols) if not (p := P.poly(i, j)).is_zero()), default=0) for i in range(P.rows))


def main():
    net = load_network(data_path("double_butterfly.net"))
    res = algorithm2(net)
    base = wzy_baseline(net)
    per_sink = res.sink_breakdown(net)
    free_total = 0
    for t in net.sinks:
        M = transfer_matrix(net, t).M
        p, P = processing_matrix(M)
        after = transfer_matrix(net, t, res.placement).M
        deg = row_degrees(P)
        free_total += deg
        print(f"{t}: before {show(M)}")
        print(f"    p_T = {p}, P_T = {show(P)}, row degrees {deg}")
        print(f"    after {show(after)} (L={res.per_sink[t][0]}), sink memory {per_sink[t]}")
    print(f"memory-free sinks: {free_total}")
    print(f"per-node stage {res.stage_totals['per_node']}, final {res.total_memory}, "
          f"at sinks {res.sink_memory}, per-node baseline {base.total_memory}")
    print(placement_report(net, res), end="")


if __name__ == "__main__":
    main()
