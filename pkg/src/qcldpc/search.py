"""Three-stage search for column-layer orders minimizing the error floor.

Stage 1 ranks the relative orders of the trapping-set layers by the dominant
eigenvalue of the gain-free layered transition matrix.  Stage 2 samples full
column permutations consistent with the best relative order and screens them
with partial gains and averaged densities.  Stage 3 re-estimates a shortlist
with the exact schedule-aware density evolution.

Layer indices are 0-based throughout this module.
"""

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import statespace
from .de import AveragedDistributions, de_run, partial_gain_tables


@dataclass
class OrderClass:
    r: float                   # shared dominant eigenvalue
    orders: list               # TS-layer orders (tuples) in this class


def _spectral_radius(tslp, order):
    model = statespace.build_model(tslp, list(order))
    M = statespace.layered_transition_matrix(model)
    return float(np.max(np.abs(np.linalg.eigvals(M))))


def _canonical_order(order):
    """Representative under cyclic shifts and reversal (eigenvalue-preserving)."""
    J = len(order)
    best = None
    for seq in (order, order[::-1]):
        for s in range(J):
            rot = seq[s:] + seq[:s]
            if best is None or rot < best:
                best = rot
    return best


def ts_order_classes(tslp, tol=1e-6, max_exhaustive=8, sample=5000, seed=0):
    """Group all J! TS-layer orders by the dominant eigenvalue r~.

    Returns (classes sorted by r ascending, exhaustive flag).  For J beyond
    max_exhaustive the orders are sampled instead and the flag is False.
    The eigenvalue is computed once per equivalence class under cyclic
    shifts and reversal, which leave it unchanged.
    """
    layers = tuple(tslp.ts_layers)
    J = len(layers)
    exhaustive = J <= max_exhaustive
    if exhaustive:
        orders = [tuple(p) for p in itertools.permutations(layers)]
    else:
        rng = np.random.default_rng(seed)
        orders = sorted({tuple(layers[k] for k in rng.permutation(J))
                         for _ in range(sample)})
    cache = {}
    pairs = []
    for order in orders:
        key = _canonical_order(order)
        if key not in cache:
            cache[key] = _spectral_radius(tslp, key)
        pairs.append((cache[key], order))
    pairs.sort()
    classes = []
    for r, order in pairs:
        if classes and r - classes[-1].r <= tol:
            classes[-1].orders.append(order)
        else:
            classes.append(OrderClass(r, [order]))
    return classes, exhaustive


def sample_full_schedules(ts_order, n_b, count, seed):
    """Random n_b-layer permutations whose restriction to the TS layers
    equals ts_order.  Deterministic under the seed."""
    ts_set = set(ts_order)
    if not ts_set <= set(range(n_b)):
        raise ValueError("ts_order must use layers below n_b")
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        perm = rng.permutation(n_b).tolist()
        it = iter(ts_order)
        out.append(tuple(next(it) if z in ts_set else z for z in perm))
    return out


@dataclass
class ScreenEntry:
    schedule: tuple
    score: float


def screen_approx(candidates, approx_inputs, groups, sigma_ch, max_iters=50):
    """Rank candidate schedules by the approximate union-bound failure rate.

    approx_inputs carries the averaged densities and partial-gain tables of a
    single reference density-evolution run; only the fresh/stale selection
    depends on the candidate order.  Ties break on the smaller permutation.
    """
    entries = []
    for perm in candidates:
        pos = {z: t for t, z in enumerate(perm)}
        inputs = approx_inputs.with_pos(pos)
        total = 0.0
        for grp in groups:
            model = statespace.build_model(grp.tslp, list(perm))
            est = statespace.beta_statistics(model, inputs, sigma_ch,
                                             max_iters=max_iters)
            total += grp.multiplicity * est.p_e
        entries.append(ScreenEntry(tuple(perm), total))
    entries.sort(key=lambda e: (e.score, e.schedule))
    return entries


@dataclass
class ExactEntry:
    schedule: tuple
    p_f: float
    group_pe: list             # (multiplicity, r~, P_e) per group


def select_best(shortlist, bg, groups, sigma_ch, de_iters=30, max_iters=50,
                grid=None):
    """Exact per-schedule floor estimates; returns (best schedule, entries).

    Each shortlisted schedule gets its own density-evolution run and an
    exact-input failure estimate per trapping-set group.
    """
    entries = []
    for perm in shortlist:
        dists = de_run(bg, list(perm), sigma_ch, de_iters, grid=grid)
        inputs = statespace.ExactModelInputs(dists)
        rows = []
        total = 0.0
        for grp in groups:
            model = statespace.build_model(grp.tslp, list(perm))
            M = statespace.layered_transition_matrix(model)
            r = float(np.max(np.abs(np.linalg.eigvals(M))))
            est = statespace.beta_statistics(model, inputs, sigma_ch,
                                             max_iters=max_iters)
            rows.append((grp.multiplicity, r, est.p_e))
            total += grp.multiplicity * est.p_e
        entries.append(ExactEntry(tuple(perm), total, rows))
    entries.sort(key=lambda e: (e.p_f, e.schedule))
    return entries[0].schedule, entries


@dataclass
class SearchBudget:
    samples_per_order: int = 100
    shortlist: int = 10
    seed: int = 0


@dataclass
class SearchReport:
    best: tuple
    classes: list              # stage-1 OrderClass list
    exhaustive: bool
    dominant_group: int        # index into groups
    screened: list             # stage-2 ScreenEntry list (shortlist slice kept)
    exact: list                # stage-3 ExactEntry list


def optimize_schedule(bg, groups, sigma_ch, budget=None, de_iters=30,
                      grid=None, reference=None):
    """Full pipeline: pick the most harmful group under the reference
    schedule, rank its TS-layer orders, sample and screen consistent full
    schedules, then re-estimate a shortlist exactly."""
    budget = budget or SearchBudget()
    reference = tuple(reference) if reference else tuple(range(bg.n_b))

    ref_dists = de_run(bg, list(reference), sigma_ch, de_iters, grid=grid)
    ref_inputs = statespace.ExactModelInputs(ref_dists)
    harm = []
    for grp in groups:
        model = statespace.build_model(grp.tslp, list(reference))
        est = statespace.beta_statistics(model, ref_inputs, sigma_ch)
        harm.append(grp.multiplicity * est.p_e)
    dom = int(np.argmax(harm))

    classes, exhaustive = ts_order_classes(groups[dom].tslp, seed=budget.seed)
    best_orders = classes[0].orders
    cands = []
    for k, order in enumerate(best_orders):
        cands.extend(sample_full_schedules(order, bg.n_b,
                                           budget.samples_per_order,
                                           budget.seed + k))
    avg = AveragedDistributions(ref_dists, bg.n_b)
    theta = partial_gain_tables(avg, bg.n_b, ref_dists.iters)
    approx = statespace.ApproxModelInputs(avg, theta, ref_dists.pos)
    screened = screen_approx(cands, approx, groups, sigma_ch)
    shortlist = []
    for e in screened:
        if e.schedule not in shortlist:
            shortlist.append(e.schedule)
        if len(shortlist) >= budget.shortlist:
            break
    best, exact = select_best(shortlist, bg, groups, sigma_ch,
                              de_iters=de_iters, grid=grid)
    return SearchReport(best, classes, exhaustive, dom,
                        screened[:max(budget.shortlist, 50)], exact)
