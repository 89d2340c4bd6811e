"""Command-line driver: analyze, singlegen, cnecc, simulate."""
from __future__ import annotations

import argparse
import logging
import sys

from . import cnecc, errsim, memplace, netmodel
from .polyalg import SingularMatrixError, format_poly

log = logging.getLogger("sgnc")


def _matrix_lines(M, indent: str = "    ") -> list[str]:
    return [indent + "[" + ", ".join(str(x) for x in M.row(i)) + "]" for i in range(M.rows)]


def cmd_analyze(args) -> int:
    net = netmodel.load_network(args.netfile)
    out = [f"network {net.name} over GF({net.field.q}) n={net.n}"]
    out.append(f"n_min {netmodel.n_min(net)}")
    out.append(f"T_delay {netmodel.t_delay(net)}")
    for t in net.sinks:
        tm = netmodel.transfer_matrix(net, t)
        out.append(f"sink {t} mincut {netmodel.min_cut(net, t)} rank {netmodel.matrix_rank(tm.M)}")
        out.append(f"  M_{t}(z) =")
        out.extend(_matrix_lines(tm.M))
        if tm.L is not None:
            out.append(f"  single-generation L={tm.L}")
    cls = netmodel.classify_nodes(net)
    for k, stratum in enumerate(cls.strata):
        out.append(f"coding stratum {k}: {' '.join(stratum)}")
    out.append(f"forwarding: {' '.join(cls.forwarding)}")
    print("\n".join(out))
    return 0


def cmd_singlegen(args) -> int:
    net = netmodel.load_network(args.netfile)
    if args.baseline:
        res = memplace.wzy_baseline(net)
    else:
        res = memplace.algorithm2(net, fixed_point=args.fixed_point)
    print(memplace.placement_report(net, res), end="")
    for k, v in res.stage_totals.items():
        print(f"stage {k} {v}")
    print(f"sinks {res.sink_memory} " + " ".join(f"{t}={m}" for t, m in res.sink_breakdown(net).items()))
    if args.audit:
        for a in res.audit_log:
            print(a.line())
    if args.memcap is not None:
        viol = memplace.memcap_violations(net, res.placement, args.memcap)
        if viol:
            for v, m in viol.items():
                print(f"memcap violation {v} {m} > {args.memcap}")
        else:
            print(f"memcap {args.memcap} ok")
    return 0


def _placements(net, mode: str):
    modes = errsim.MODES if mode == "both" else (errsim.normalize_mode(mode),)
    pl = memplace.algorithm2(net).placement if "mem" in modes else None
    return [(m, pl if m == "mem" else None) for m in modes]


def cmd_cnecc(args) -> int:
    net = netmodel.load_network(args.netfile)
    code = cnecc.load_code(args.codefile)
    patterns = cnecc.load_patterns(net, args.patternfile)
    params = cnecc.code_params(code)
    print(f"code {code.name or '-'} G = {code}")
    print(f"d_free {params.d_free}")
    print(f"T_dfree {params.T_dfree}")
    print(f"patterns {len(patterns)}")
    for mode, pl in _placements(net, args.mode):
        res = cnecc.error_reflections(net, pl, patterns, exact=args.exact)
        td = netmodel.t_delay(net, pl)
        bound = cnecc.ts_bound(net.n, res.r, td)
        print(f"mode {mode}")
        for t in net.sinks:
            print(f"  sink {t} p_T = {format_poly(res.p_T[t])} t_s = {res.per_sink[t]}")
            print(f"  P_{t}(z) =")
            print("\n".join(_matrix_lines(res.P_T[t], "    ")))
        print(f"  t_s {res.t_s} |W_s| {len(res.W_s)}")
        print(f"  bound r={res.r} T_delay={td} -> {bound} {'ok' if res.t_s <= bound else 'VIOLATED'}")
        need = 2 * res.t_s + 1
        verdict = "sufficient" if params.d_free >= need else "insufficient"
        print(f"  d_free {params.d_free} vs 2t_s+1 = {need}: {verdict}")
    return 0


def cmd_simulate(args) -> int:
    net = netmodel.load_network(args.netfile)
    codes = [cnecc.load_code(c) for c in args.codefile]
    p_list = [float(x) for x in args.p_list.split(",") if x.strip()]
    modes = errsim.MODES if args.mode == "both" else (errsim.normalize_mode(args.mode),)
    recs = errsim.run_sweep(net, codes, p_list, modes, args.steps, args.seed, args.traceback)
    text = errsim.records_to_csv(recs)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    print(f"{'sink':<6}{'code':<8}{'p':>8}  {'mode':<6}{'errors':>10}{'bits':>10}  ber")
    for r in recs:
        print(f"{r.sink:<6}{r.code:<8}{r.p:>8g}  {r.mode:<6}{r.bit_errors:>10}{r.bits_total:>10}  {r.ber:.4e}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sgnc", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="transfer matrices, min-cuts and node classes")
    a.add_argument("netfile")
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("singlegen", help="memory placement for single-generation coding")
    s.add_argument("netfile")
    s.add_argument("--baseline", action="store_true", help="per-node processing only")
    s.add_argument("--fixed-point", action="store_true", help="repeat reductions until nothing changes")
    s.add_argument("--memcap", type=int, default=None, help="report nodes holding more than N elements")
    s.add_argument("--audit", action="store_true", help="print the audit log")
    s.set_defaults(func=cmd_singlegen)

    c = sub.add_parser("cnecc", help="code parameters and error reflections")
    c.add_argument("netfile")
    c.add_argument("codefile")
    c.add_argument("patternfile")
    c.add_argument("--mode", choices=["both", "mem", "nomem"], default="both")
    c.add_argument("--exact", action="store_true", help="error support must equal the pattern")
    c.set_defaults(func=cmd_cnecc)

    m = sub.add_parser("simulate", help="Monte Carlo BER sweep")
    m.add_argument("netfile")
    m.add_argument("codefile", nargs="+")
    m.add_argument("--p-list", default="0.02,0.05,0.1")
    m.add_argument("--steps", type=int, default=10**6)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--mode", choices=["both", "mem", "nomem"], default="both")
    m.add_argument("--traceback", type=int, default=None)
    m.add_argument("--out", default=None, help="CSV output path")
    m.set_defaults(func=cmd_simulate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except netmodel.NetworkError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (cnecc.CatastrophicCodeError, SingularMatrixError, cnecc.CodeParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, memplace.VerificationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
