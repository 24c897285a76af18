"""Discretized, schedule-aware density evolution on the base graph."""

import numpy as np
from scipy.special import ndtr

from .decoder import box_plus

_POINT_MASS = 1.0 - 1e-12


class LlrGrid:
    """Uniform lattice on [-bound, bound]; edge bins absorb clipped mass."""

    def __init__(self, bound=15.75, half_bins=512):
        self.bound = float(bound)
        self.half = int(half_bins)
        self.n = 2 * self.half + 1
        self.delta = self.bound / self.half
        self.centers = (np.arange(self.n) - self.half) * self.delta
        self._table = None

    def quantize(self, x):
        return np.clip(np.rint(np.asarray(x) / self.delta).astype(np.int64)
                       + self.half, 0, self.n - 1)

    def point_mass(self, x):
        d = np.zeros(self.n)
        d[self.quantize(x)] = 1.0
        return d

    def gaussian(self, mean, var):
        """Discretized clipped normal: integrate the pdf over each bin."""
        edges = np.concatenate([[-np.inf],
                                self.centers[:-1] + self.delta / 2, [np.inf]])
        cdf = ndtr((edges - mean) / np.sqrt(var))
        return np.diff(cdf)

    def channel_density(self, sigma_ch):
        return self.gaussian(2.0 / sigma_ch ** 2, 4.0 / sigma_ch ** 2)

    def boxplus_table(self):
        if self._table is None:
            x1, x2 = np.meshgrid(self.centers, self.centers, indexing="ij")
            self._table = self.quantize(box_plus(x1, x2)).astype(np.int32)
        return self._table

    def fold2(self, p, q):
        """Density of box_plus(X, Y) for independent X ~ p, Y ~ q."""
        idx = self.boxplus_table()
        mp, mq = p.max(), q.max()
        if mp >= _POINT_MASS:       # near-point-mass shortcut
            return np.bincount(idx[int(p.argmax())], weights=q,
                               minlength=self.n)
        if mq >= _POINT_MASS:
            return np.bincount(idx[:, int(q.argmax())], weights=p,
                               minlength=self.n)
        return np.bincount(idx.ravel(), weights=(p[:, None] * q[None, :]).ravel(),
                           minlength=self.n)

    def cn_density(self, inputs):
        """Left fold of fold2 over a list of densities."""
        if len(inputs) == 0:
            raise ValueError("need at least one input density")
        acc = inputs[0]
        for q in inputs[1:]:
            acc = self.fold2(acc, q)
        return acc

    def vn_sum(self, inputs):
        """Density of a sum of lattice variables, tails folded to the edges."""
        acc = np.asarray(inputs[0])
        for q in inputs[1:]:
            acc = np.convolve(acc, q)
        # acc spans k*delta for k in [-(len-1)/2, (len-1)/2]
        m = (len(acc) - 1) // 2
        if m <= self.half:
            out = np.zeros(self.n)
            out[self.half - m:self.half + m + 1] = acc
            return out
        lo, hi = m - self.half, m + self.half
        out = acc[lo:hi + 1].copy()
        out[0] += acc[:lo].sum()
        out[-1] += acc[hi + 1:].sum()
        return out

    def moments(self, d):
        mean = float(d @ self.centers)
        var = float(d @ self.centers ** 2) - mean ** 2
        return mean, max(var, 0.0)

    def tanh_mean(self, d):
        """E[tanh(x/2)]; the linear gain of a box-plus through this input."""
        return float(d @ np.tanh(self.centers / 2.0))

    def neg_mass(self, d):
        """P(X < 0), splitting the zero bin evenly."""
        return float(d[:self.half].sum() + 0.5 * d[self.half])


class EdgeDistributions:
    """Per-edge VN->CN and CN->VN message densities per iteration.

    v2c[ell][(k, i)] is the density of messages from Type-k VNs to Type-i CNs
    computed in iteration ell (ell=0 holds the channel density).  c2v[ell][(z, i)]
    is the density read by Type-z VNs from Type-i CNs while layer z updates in
    iteration ell.  Once the evolution freezes (densities stop changing), the
    last stored iteration stands in for all later ones.
    """

    def __init__(self, grid, perm, pos, v2c, c2v, frozen_at=None):
        self.grid = grid
        self.perm = perm
        self.pos = pos
        self._v2c = v2c
        self._c2v = c2v
        self.frozen_at = frozen_at
        self.iters = len(v2c) - 1

    def _clamp(self, ell):
        return min(ell, self.iters)

    def v2c(self, ell, k, i):
        return self._v2c[self._clamp(ell)][(k, i)]

    def c2v(self, ell, z, i):
        if ell < 1:
            raise ValueError("CN->VN densities start at iteration 1")
        return self._c2v[self._clamp(ell)][(z, i)]


def de_run(bg, perm, sigma_ch, iters, grid=None, freeze_tol=1e-12):
    """Run column-layered density evolution for `iters` iterations.

    perm is a 0-based order of the n_b column layers.  CN->VN densities are
    built from already-updated neighbor layers of the current iteration and
    not-yet-updated layers of the previous one.
    """
    grid = grid or LlrGrid()
    perm = list(perm)
    if sorted(perm) != list(range(bg.n_b)):
        raise ValueError("perm must order all column layers")
    pos = {z: t for t, z in enumerate(perm)}
    chan = grid.channel_density(sigma_ch)
    edges = [(int(k), int(i)) for i in range(bg.m_b) for k in bg.vn_types_of_cn[i]]
    v2c_hist = [{e: chan for e in edges}]
    c2v_hist = [None]
    frozen = None
    for ell in range(1, iters + 1):
        prev = v2c_hist[-1]
        if frozen is not None:
            break
        cur = {}
        c2v = {}
        # per CN type: stale suffix folds over neighbors in schedule order
        suffix = {}
        nb_sorted = {}
        for i in range(bg.m_b):
            nbs = sorted(bg.vn_types_of_cn[i], key=lambda k: pos[k])
            nb_sorted[i] = nbs
            suf = [None] * (len(nbs) + 1)
            for t in range(len(nbs) - 1, -1, -1):
                d = prev[(nbs[t], i)]
                suf[t] = d if suf[t + 1] is None else grid.fold2(d, suf[t + 1])
            suffix[i] = suf
        prefix = {i: None for i in range(bg.m_b)}
        nb_done = {i: 0 for i in range(bg.m_b)}
        for z in perm:
            for i in bg.cn_types_of_vn[z]:
                t = nb_done[i]
                assert nb_sorted[i][t] == z
                pre, suf = prefix[i], suffix[i][t + 1]
                if pre is None and suf is None:
                    raise ValueError("degree-1 CN type in base graph")
                elif pre is None:
                    d = suf
                elif suf is None:
                    d = pre
                else:
                    d = grid.fold2(pre, suf)
                # renormalize: sub-1e-12 mass deficits otherwise amplify
                # multiplicatively through the fold cascade
                c2v[(z, i)] = d / d.sum()
            # VN update: channel plus extrinsic CN inputs
            cn_types = list(bg.cn_types_of_vn[z])
            for i in cn_types:
                others = [c2v[(z, i2)] for i2 in cn_types if i2 != i]
                d = grid.vn_sum([chan] + others)
                cur[(z, i)] = d / d.sum()
            for i in cn_types:
                d = cur[(z, i)]
                prefix[i] = d if prefix[i] is None else grid.fold2(prefix[i], d)
                nb_done[i] += 1
        v2c_hist.append(cur)
        c2v_hist.append(c2v)
        if max(np.abs(cur[e] - prev[e]).sum() for e in edges) < freeze_tol:
            frozen = ell
    return EdgeDistributions(grid, perm, pos, v2c_hist, c2v_hist, frozen)


def average_layer_distributions(dists, layer, ell):
    """Schedule-independent per-layer surrogates: plain averages of the
    same-direction densities on edges incident to the layer's VN type."""
    keys = [(k, i) for (k, i) in dists._v2c[1] if k == layer]
    avg_v2c = np.mean([dists.v2c(ell, k, i) for (k, i) in keys], axis=0)
    avg_c2v = np.mean([dists.c2v(ell, k, i) for (k, i) in keys], axis=0)
    return avg_v2c, avg_c2v


class AveragedDistributions:
    """Per-layer averaged densities from one reference-schedule DE run."""

    def __init__(self, dists, n_b):
        self.grid = dists.grid
        self.iters = dists.iters
        self.v2c = {}    # (ell, layer) -> averaged VN->CN density
        self.c2v = {}
        for ell in range(1, dists.iters + 1):
            for z in range(n_b):
                av, ac = average_layer_distributions(dists, z, ell)
                self.v2c[(ell, z)] = av
                self.c2v[(ell, z)] = ac
        # iteration-0 VN->CN density is the channel density on every edge
        for z in range(n_b):
            self.v2c[(0, z)] = dists._v2c[0][next(iter(dists._v2c[0]))]

    def _clamp(self, ell):
        return min(ell, self.iters)

    def avg_v2c(self, ell, z):
        return self.v2c[(self._clamp(ell), z)]

    def avg_c2v(self, ell, z):
        return self.c2v[(max(1, self._clamp(ell)), z)]


def partial_gain_tables(avg, n_b, iters):
    """theta[ell][z]: E[tanh(x/2)] under the layer-z averaged VN->CN density
    of iteration ell.  The stale partial gain of iteration ell equals the
    fresh one of iteration ell-1 (same stored density)."""
    theta = {}
    for ell in range(0, iters + 1):
        theta[ell] = np.array([avg.grid.tanh_mean(avg.avg_v2c(ell, z))
                               for z in range(n_b)])
    return theta
