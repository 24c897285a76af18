"""Command-line front end: lifting, Monte-Carlo runs, floor estimation, search.

Outputs are plain CSV files; reruns with the same flags and seed are
byte-identical.  Frame randomness is drawn from per-block streams derived
from (seed, block index), so batching does not change results.
"""

import argparse
import os
import sys

import numpy as np

from . import search, statespace, trapping
from .codes import BaseGraph, lift, load_exponent_matrix
from .de import AveragedDistributions, de_run, partial_gain_tables
from .decoder import DecoderConfig, channel_llrs, decode_batch, sigma_from_snr

_FRAME_BLOCK = 1000     # frames per RNG stream


def _parse_snr(text):
    """Either a comma list "4.0,4.5" or a range "start:step:stop" (inclusive)."""
    if ":" in text:
        start, step, stop = (float(x) for x in text.split(":"))
        n = int(np.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + k * step, 10) for k in range(n)]
    return [float(x) for x in text.split(",")]


def _parse_schedule(text):
    if text in ("flooding", "row", "column"):
        return text, None
    return "column", tuple(int(x) for x in text.split(","))


def _load_config_file(path):
    out = {}
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, val = line.partition("=")
            out[key.strip()] = val.strip()
    return out


def _apply_config(args, parser):
    """Plain key=value file fills in flags the command line left at default."""
    if not args.config:
        return args
    cfg = _load_config_file(args.config)
    for key, val in cfg.items():
        dest = key.replace("-", "_")
        if not hasattr(args, dest):
            parser.error("unknown config key %r" % key)
        if parser.get_default(dest) == getattr(args, dest):
            setattr(args, dest, type(parser.get_default(dest))(val)
                    if parser.get_default(dest) is not None else val)
    return args


def _load_graph(path):
    em = load_exponent_matrix(path)
    g = lift(em)
    return em, g


def _rate(em):
    return (em.n_b - em.m_b) / em.n_b


def _mc_point(g, rate, snr, cfg, min_errors, max_frames, seed):
    """FER at one SNR; deterministic per-block RNG streams."""
    sigma = sigma_from_snr(snr, rate)
    errors = frames = 0
    block = 0
    while errors < min_errors and frames < max_frames:
        count = min(_FRAME_BLOCK, max_frames - frames)
        rng = np.random.default_rng(np.random.SeedSequence([seed, block]))
        y = 1.0 + sigma * rng.standard_normal((count, g.n))
        llrs = channel_llrs(y, sigma, cfg.sat)
        bits, conv, _, _ = decode_batch(g, llrs, cfg)
        errors += int(np.sum(~conv | bits.any(axis=1)))
        frames += count
        block += 1
    return sigma, frames, errors


def _write_csv(path, header, rows):
    with open(path, "w") as f:
        f.write(header + "\n")
        for row in rows:
            f.write(",".join(str(x) for x in row) + "\n")


def _fmt_sched(schedule, perm):
    return "-".join(str(z) for z in perm) if perm else schedule


def cmd_lift(args, parser):
    em, g = _load_graph(args.code)
    out = args.out or "."
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, "alist.txt")
    cn, vn = g.H.nonzero()
    with open(path, "w") as f:
        f.write("%d %d %d\n" % (g.m, g.n, g.p))
        for j, i in zip(cn.tolist(), vn.tolist()):
            f.write("%d %d\n" % (j, i))
    print("lifted %dx%d (p=%d, rate %.4f) -> %s"
          % (g.m, g.n, g.p, _rate(em), path))


def cmd_enumerate(args, parser):
    em, g = _load_graph(args.code)
    ts_list = trapping.enumerate_lets(g, args.a_max, args.b_max)
    groups = trapping.group_by_tslp(g, ts_list)
    out = args.out or "."
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, "trapping.csv")
    rows = []
    for gid, grp in enumerate(groups):
        ts = grp.representative
        rows.append((gid, ts.a, ts.b, grp.multiplicity, grp.tslp.j_count,
                     " ".join(str(v) for v in ts.vns)))
    _write_csv(path, "group,a,b,multiplicity,layers,representative_vns", rows)
    print("found %d trapping sets in %d groups -> %s"
          % (len(ts_list), len(groups), path))


def cmd_simulate(args, parser):
    em, g = _load_graph(args.code)
    schedule, perm = _parse_schedule(args.schedule)
    cfg = DecoderConfig(schedule=schedule, perm=perm, max_iter=args.iters,
                        sat=args.sat)
    rate = _rate(em)
    rows = []
    for snr in _parse_snr(args.snr):
        sigma, frames, errors = _mc_point(g, rate, snr, cfg, args.min_errors,
                                          args.max_frames, args.seed)
        fer = errors / frames
        flag = "ok" if errors >= args.min_errors else "budget"
        rows.append((snr, "%.6g" % sigma, frames, errors, "%.6g" % fer, flag))
        print("snr %.2f dB: FER %.3g (%d/%d) [%s]"
              % (snr, fer, errors, frames, flag))
    out = args.out or "."
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, "fer.csv")
    _write_csv(path, "snr_db,sigma,frames,errors,fer,status", rows)
    print("wrote %s" % path)


def _groups_for(g, args):
    ts_list = trapping.enumerate_lets(g, args.a_max, args.b_max)
    keep = [t for t in ts_list if t.is_lets]
    return trapping.group_by_tslp(g, keep)


def cmd_estimate(args, parser):
    em, g = _load_graph(args.code)
    bg = BaseGraph(em)
    schedule, perm = _parse_schedule(args.schedule)
    if schedule != "column":
        parser.error("estimation targets column-layered schedules")
    perm0 = [z - 1 for z in perm] if perm else list(range(em.n_b))
    rate = _rate(em)
    groups = _groups_for(g, args)
    rows = []
    sched_txt = _fmt_sched(schedule, perm)
    for snr in _parse_snr(args.snr):
        sigma = sigma_from_snr(snr, rate)
        dists = de_run(bg, perm0, sigma, args.iters)
        inputs = statespace.ExactModelInputs(dists)
        total = 0.0
        for gid, grp in enumerate(groups):
            model = statespace.build_model(grp.tslp, perm0)
            M = statespace.layered_transition_matrix(model)
            r = float(np.max(np.abs(np.linalg.eigvals(M))))
            est = statespace.beta_statistics(model, inputs, sigma)
            total += grp.multiplicity * est.p_e
            rows.append((os.path.basename(args.code), sched_txt, snr, gid,
                         grp.multiplicity, "%.6g" % r, "%.6g" % est.p_e, ""))
        rows.append((os.path.basename(args.code), sched_txt, snr, "all",
                     "", "", "", "%.6g" % total))
        print("snr %.2f dB: P_f %.4g" % (snr, total))
    out = args.out or "."
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, "estimate.csv")
    _write_csv(path, "code,schedule,snr_db,group,multiplicity,r,p_e,p_f", rows)
    print("wrote %s" % path)


def cmd_optimize(args, parser):
    em, g = _load_graph(args.code)
    bg = BaseGraph(em)
    rate = _rate(em)
    snrs = _parse_snr(args.snr)
    sigma = sigma_from_snr(snrs[0], rate)
    groups = _groups_for(g, args)
    budget = search.SearchBudget(samples_per_order=args.samples,
                                 shortlist=args.shortlist, seed=args.seed)
    report = search.optimize_schedule(bg, groups, sigma, budget=budget,
                                      de_iters=args.iters)
    out = args.out or "."
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, "search.csv")
    rows = []
    exact_by_sched = {e.schedule: e for e in report.exact}
    for cid, entry in enumerate(report.screened):
        ex = exact_by_sched.get(entry.schedule)
        rows.append((cid, "-".join(str(z + 1) for z in entry.schedule),
                     "%.6g" % report.classes[0].r, "%.6g" % entry.score,
                     "%.6g" % ex.p_f if ex else ""))
    _write_csv(path, "candidate,schedule,stage1_r,stage2_score,stage3_p_f", rows)
    best = "-".join(str(z + 1) for z in report.best)
    print("best schedule: %s" % best)
    print("exact floor: %.4g" % exact_by_sched[report.best].p_f
          if report.best in exact_by_sched else "")
    print("wrote %s" % path)


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="qcldpc",
        description="Quasi-cyclic LDPC layered decoding, trapping-set floor "
                    "estimation and schedule search.",
        epilog="CSV outputs: fer.csv (snr_db,sigma,frames,errors,fer,status), "
               "estimate.csv (code,schedule,snr_db,group,multiplicity,r,p_e,"
               "p_f), search.csv (candidate,schedule,stage1_r,stage2_score,"
               "stage3_p_f).")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--code", required=True, help="exponent matrix file")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--config", default=None,
                       help="key=value file; explicit flags win")

    p = sub.add_parser("lift", help="expand the exponent matrix")
    common(p)
    p.set_defaults(func=cmd_lift)

    p = sub.add_parser("enumerate-ts", help="enumerate trapping sets")
    common(p)
    p.add_argument("--a-max", type=int, default=8)
    p.add_argument("--b-max", type=int, default=5)
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("simulate", help="Monte-Carlo frame error rates")
    common(p)
    p.add_argument("--schedule", default="flooding",
                   help='"flooding", "row", "column", or "2,9,7,..."')
    p.add_argument("--snr", default="4.0", help='"a,b,c" or "start:step:stop"')
    p.add_argument("--iters", type=int, default=30)
    p.add_argument("--sat", type=float, default=15.75)
    p.add_argument("--min-errors", type=int, default=100)
    p.add_argument("--max-frames", type=int, default=1000000)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="analytic error-floor estimate")
    common(p)
    p.add_argument("--schedule", default="column")
    p.add_argument("--snr", default="4.0")
    p.add_argument("--iters", type=int, default=30)
    p.add_argument("--sat", type=float, default=15.75)
    p.add_argument("--a-max", type=int, default=8)
    p.add_argument("--b-max", type=int, default=5)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("optimize", help="search for a low-floor schedule")
    common(p)
    p.add_argument("--snr", default="6.0")
    p.add_argument("--iters", type=int, default=30)
    p.add_argument("--sat", type=float, default=15.75)
    p.add_argument("--a-max", type=int, default=8)
    p.add_argument("--b-max", type=int, default=5)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--shortlist", type=int, default=10)
    p.set_defaults(func=cmd_optimize)

    args = parser.parse_args(argv)
    # defaults live on the subcommand parser, so resolve config against it
    sp = sub.choices[args.command]
    args = _apply_config(args, sp)
    return args.func(args, sp)


if __name__ == "__main__":
    sys.exit(main())
