"""Trapping-set extraction: (a,b) classification, LETS enumeration, layer profiles."""

import itertools
from dataclasses import dataclass, field

import numpy as np


@dataclass
class TrappingSet:
    vns: tuple                 # sorted VN indices
    a: int
    b: int
    sat_cns: tuple             # even-degree (mis-satisfied) CNs
    unsat_cns: tuple           # odd-degree CNs
    cn_degrees: dict           # internal degree of every touched CN
    is_ets: bool
    is_lets: bool


def classify(g, vn_set):
    """Populate the (a,b) class and ETS/LETS flags of a VN subset."""
    vns = sorted(set(int(v) for v in vn_set))
    if not vns:
        raise ValueError("empty VN set")
    if vns[0] < 0 or vns[-1] >= g.n:
        raise ValueError("VN index out of range")
    deg = {}
    for v in vns:
        for c in g.vn_neighbors[v]:
            deg[c] = deg.get(c, 0) + 1
    sat = tuple(sorted(c for c, d in deg.items() if d % 2 == 0))
    unsat = tuple(sorted(c for c, d in deg.items() if d % 2 == 1))
    is_ets = all(d <= 2 for d in deg.values())
    is_lets = is_ets and all(
        sum(1 for c in g.vn_neighbors[v] if deg[c] == 2) >= 2 for v in vns)
    return TrappingSet(tuple(vns), len(vns), len(unsat), sat, unsat,
                       deg, is_ets, is_lets)


def _vn_pair_graph(g):
    """VN adjacency through shared CNs: dict v -> {u: [shared CNs]}."""
    adj = {v: {} for v in range(g.n)}
    for j in range(g.m):
        nb = g.cn_neighbors[j]
        for u, v in itertools.combinations(nb.tolist(), 2):
            adj[u].setdefault(v, []).append(j)
            adj[v].setdefault(u, []).append(j)
    return adj


def _shift_vns(vns, p, t):
    return tuple(sorted((v // p) * p + (v % p + t) % p for v in vns))


def enumerate_lets(g, a_max, b_max, max_states=2_000_000):
    """All LETSs with a <= a_max and b <= b_max; exact within bounds.

    Strategy: seed from chordless cycles (pure-cycle VN sets), grow by single
    VNs that attach to a degree-1 internal CN without touching any degree-2
    CN, prune with a lower bound on the final number of unsatisfied CNs.
    Seeds are anchored at shift-0 VNs of each column block; the result list
    is closed under the p cyclic-shift automorphisms at the end.
    Disconnected LETSs are unions of CN-disjoint connected ones and are
    composed from the connected results.
    """
    if a_max <= 0:
        return []
    adj = _vn_pair_graph(g)
    adjset = [set(adj[v]) for v in range(g.n)]
    dv = g.vn_degree
    vn_nb = [set(int(c) for c in g.vn_neighbors[v]) for v in range(g.n)]
    # max CNs shared by one VN pair: a later VN covers at most this many
    # open slots of any single current VN
    cap = max((len(sh) for v in range(g.n) for sh in adj[v].values()),
              default=1)

    # ---- seeds: chordless cycles through one anchor VN per column block ----
    seeds = set()
    anchors = [i * g.p for i in range(g.n_b)]
    # multi-edge pairs (two VNs sharing >= 2 CNs) seed (2,b) structures
    for v0 in anchors:
        for u, shared in adj[v0].items():
            if len(shared) >= 2:
                seeds.add((min(v0, u), max(v0, u)))

    for v0 in anchors:
        stack = [(v0, (v0,))]
        while stack:
            v, path = stack.pop()
            k = len(path)
            if k >= 3 and v0 in adjset[v] and path[1] < path[-1]:
                cand = tuple(sorted(path))
                if cand not in seeds and _is_pure_cycle(g, cand):
                    seeds.add(cand)
            if k >= a_max:
                continue
            # deficiency prune: a chordless cycle closing at length >= k+1
            # and grown to at most a_max VNs keeps at least this many
            # unsatisfied CNs (each later VN covers <= 1 slot per cycle VN)
            slack = a_max - (k + 1)
            base_def = sum(max(0, dv[w] - 2 - slack) for w in path)
            if base_def > b_max:
                continue
            cands = adjset[v] if k < a_max - 1 else (adjset[v] & adjset[v0])
            pset = set(path)
            mid = path[1:-1]
            for u in cands:
                if u in pset or u == v0:
                    continue
                if base_def + max(0, dv[u] - 2 - slack) > b_max:
                    continue
                au = adjset[u]
                if any(w in au for w in mid):  # keep the cycle chordless
                    continue
                stack.append((u, path + (u,)))

    # ---- connected growth: attach VNs to degree-1 CNs ----
    vn_nb_t = [tuple(nb) for nb in vn_nb]
    cn_nb_t = [tuple(int(u) for u in g.cn_neighbors[c]) for c in range(g.m)]

    def cn_degrees(vns):
        deg = bytearray(g.m)
        for v in vns:
            for c in vn_nb_t[v]:
                deg[c] += 1
        return deg

    def b_lower_bound(vns, cn_deg):
        slack = (a_max - len(vns)) * cap
        tot = 0
        for v in vns:
            d2 = 0
            for c in vn_nb_t[v]:
                if cn_deg[c] == 2:
                    d2 += 1
            tot += max(0, dv[v] - d2 - slack)
        return tot

    found = {}
    visited = set()
    queue = []
    for s in seeds:
        deg = cn_degrees(s)
        if max(deg) > 2:
            continue
        if b_lower_bound(s, deg) <= b_max:
            visited.add(s)
            queue.append((s, deg))
    while queue:
        s, cn_deg = queue.pop()
        if len(visited) > max_states:
            raise RuntimeError("enumeration state budget exceeded")
        # one pass: open (degree-1) CNs, leaflessness, and forced coverage --
        # a VN whose open slots exceed what later additions could still pair
        # must be served by the very next VN
        slack1 = (a_max - len(s) - 1) * cap
        open_cns = []
        forced_open = None
        leafless = True
        for v in s:
            d2 = 0
            opens = []
            for c in vn_nb_t[v]:
                dc = cn_deg[c]
                if dc == 2:
                    d2 += 1
                elif dc == 1:
                    opens.append(c)
            if d2 < 2:
                leafless = False
            if forced_open is None and dv[v] - d2 - slack1 > b_max:
                forced_open = opens
            open_cns.extend(opens)
        if leafless and len(open_cns) <= b_max:
            found[s] = classify(g, s)
        if len(s) == a_max:
            continue
        sset = set(s)
        cands = set()
        for c in (open_cns if forced_open is None else forced_open):
            cands.update(u for u in cn_nb_t[c] if u not in sset)
        for u in cands:
            ok = True
            for c in vn_nb_t[u]:
                if cn_deg[c] >= 2:
                    ok = False
                    break
            if not ok:
                continue
            ns = tuple(sorted(s + (u,)))
            if ns in visited:
                continue
            ndeg = bytearray(cn_deg)
            for c in vn_nb_t[u]:
                ndeg[c] += 1
            if b_lower_bound(ns, ndeg) > b_max:
                continue
            visited.add(ns)
            queue.append((ns, ndeg))

    # close under the cyclic lifting automorphisms
    complete = {}
    for s, ts in found.items():
        for t in range(g.p):
            sh = _shift_vns(s, g.p, t)
            if sh not in complete:
                complete[sh] = classify(g, sh) if t else ts

    # disconnected LETSs: CN-disjoint unions of connected ones
    conn = sorted(complete)
    for i, s1 in enumerate(conn):
        c1 = set(complete[s1].cn_degrees)
        for s2 in conn[i + 1:]:
            t1, t2 = complete[s1], complete[s2]
            if t1.a + t2.a > a_max or t1.b + t2.b > b_max:
                continue
            if c1 & set(t2.cn_degrees):
                continue
            union = tuple(sorted(s1 + s2))
            if union not in complete:
                complete[union] = classify(g, union)
    return [complete[s] for s in sorted(complete)]


def _deg2_counts(g, vns):
    """Per-VN count of degree-2 internal CNs, or None if any CN degree > 2."""
    deg = {}
    for v in vns:
        for c in g.vn_neighbors[v]:
            deg[c] = deg.get(c, 0) + 1
            if deg[c] > 2:
                return None
    return {v: sum(1 for c in g.vn_neighbors[v] if deg[c] == 2) for v in vns}


def _is_pure_cycle(g, vns):
    """True if the induced subgraph is a single chordless cycle."""
    deg2 = _deg2_counts(g, vns)
    if deg2 is None or any(d != 2 for d in deg2.values()):
        return False
    # connectivity: walk the cycle
    deg = {}
    for v in vns:
        for c in g.vn_neighbors[v]:
            deg[c] = deg.get(c, 0) + 1
    pair = {v: [] for v in vns}
    sset = set(vns)
    for c, d in deg.items():
        if d == 2:
            u, w = [int(x) for x in g.cn_neighbors[c] if x in sset]
            pair[u].append(w)
            pair[w].append(u)
    seen = {vns[0]}
    frontier = [vns[0]]
    while frontier:
        v = frontier.pop()
        for u in pair[v]:
            if u not in seen:
                seen.add(u)
                frontier.append(u)
    return len(seen) == len(vns)


@dataclass
class Tslp:
    """Layer/type profile of a trapping set within a column-layered code."""
    vn_layers: tuple            # per-VN 0-based column layer, in vns order
    ts_layers: tuple            # sorted distinct layers L'_1..L'_J
    j_count: int
    mis_cns: tuple              # per mis CN: (cn type, (internal VNs), (ext layers))
    unsat_cns: tuple            # per unsat CN: (cn type, internal VN, (ext layers))


def compute_tslp(g, ts):
    """Internal VNs are recorded as positions into ts.vns, not raw indices."""
    idx = {v: i for i, v in enumerate(ts.vns)}
    vn_layers = tuple(int(g.vn_layer[v]) for v in ts.vns)
    ts_layers = tuple(sorted(set(vn_layers)))
    sset = set(ts.vns)
    mis = []
    for c in ts.sat_cns:
        internal = tuple(sorted(idx[int(v)] for v in g.cn_neighbors[c]
                                if v in sset))
        ext = tuple(sorted(int(g.vn_layer[v]) for v in g.cn_neighbors[c]
                           if v not in sset))
        mis.append((int(g.cn_layer[c]), internal, ext))
    uns = []
    for c in ts.unsat_cns:
        internal = [idx[int(v)] for v in g.cn_neighbors[c] if v in sset]
        ext = tuple(sorted(int(g.vn_layer[v]) for v in g.cn_neighbors[c]
                           if v not in sset))
        uns.append((int(g.cn_layer[c]), internal[0], ext))
    return Tslp(vn_layers, ts_layers, len(ts_layers), tuple(mis), tuple(uns))


def _structure_certificate(g, ts, labeled, tslp=None):
    """Canonical string for the induced subgraph.

    labeled=False compares bare topology (non-isomorphic structure count);
    labeled=True additionally fixes VN layers and CN types / external layers
    so equality means isomorphic with identical TSLP.
    """
    vns = list(ts.vns)
    a = len(vns)
    if tslp is None:
        tslp = compute_tslp(g, ts)
    # per-VN invariant label
    unsat_of = {i: [] for i in range(a)}
    for (typ, internal, ext) in tslp.unsat_cns:
        lab = (typ, ext) if labeled else ()
        unsat_of[internal].append(lab)
    edge = {}
    for (typ, internal, ext) in tslp.mis_cns:
        i, j = internal
        lab = (typ, ext) if labeled else ()
        edge.setdefault((i, j), []).append(lab)
    base = []
    for i, v in enumerate(vns):
        layer = tslp.vn_layers[i] if labeled else -1
        base.append((int(g.vn_degree[v]), layer, tuple(sorted(unsat_of[i]))))
    # brute-force minimal encoding over label-class-preserving permutations
    classes = {}
    for i, lab in enumerate(base):
        classes.setdefault(lab, []).append(i)
    groups = [classes[k] for k in sorted(classes)]
    best = None
    for parts in itertools.product(*[itertools.permutations(gp) for gp in groups]):
        perm = {}
        pos = 0
        for gp, arrangement in zip(groups, parts):
            for newpos, old in zip(range(pos, pos + len(gp)), arrangement):
                perm[old] = newpos
            pos += len(gp)
        enc = []
        for (i, j), labs in edge.items():
            pi, pj = sorted((perm[i], perm[j]))
            enc.append((pi, pj, tuple(sorted(labs))))
        enc = tuple(sorted(enc))
        if best is None or enc < best:
            best = enc
    node_part = tuple(lab for lab in sorted(base) for _ in [0])
    return repr((node_part, best))


@dataclass
class TslpGroup:
    representative: TrappingSet
    tslp: Tslp
    members: list = field(default_factory=list)

    @property
    def multiplicity(self):
        return len(self.members)


def group_by_tslp(g, ts_list):
    """Partition TSs into groups of isomorphic structures with equal TSLP."""
    groups = {}
    for ts in ts_list:
        tslp = compute_tslp(g, ts)
        key = _structure_certificate(g, ts, labeled=True, tslp=tslp)
        if key not in groups:
            groups[key] = TslpGroup(ts, tslp)
        groups[key].members.append(ts)
    return [groups[k] for k in sorted(groups)]


def count_structures(g, ts_list):
    """Number of non-isomorphic induced subgraph topologies."""
    return len({_structure_certificate(g, ts, labeled=False) for ts in ts_list})
