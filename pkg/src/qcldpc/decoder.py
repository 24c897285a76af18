"""Saturating sum-product decoding: flooding, column-layered and row-layered."""

from dataclasses import dataclass, field

import numpy as np

# box-plus identity element: large enough to be neutral, small enough to add safely
_NEUTRAL = 1e30


def sigma_from_snr(snr_db, rate):
    """Noise std-dev for BPSK/AWGN at the given Eb/N0 (dB) and code rate."""
    return float(np.sqrt(1.0 / (2.0 * rate * 10.0 ** (snr_db / 10.0))))


def channel_llrs(y, sigma_ch, sat=15.75):
    """LLRs 2y/sigma^2, clipped to the saturation interval."""
    y = np.asarray(y, dtype=np.float64)
    if sigma_ch <= 0:
        raise ValueError("sigma_ch must be positive")
    if not np.all(np.isfinite(y)):
        raise ValueError("non-finite channel outputs")
    return np.clip(2.0 * y / sigma_ch ** 2, -sat, sat)


def box_plus(x1, x2):
    """Pairwise box-plus via the min-sum form with the exact correction term."""
    x1 = np.asarray(x1, dtype=np.float64)
    x2 = np.asarray(x2, dtype=np.float64)
    s = np.log1p(np.exp(-np.abs(x1 + x2))) - np.log1p(np.exp(-np.abs(x1 - x2)))
    return np.sign(x1) * np.sign(x2) * np.minimum(np.abs(x1), np.abs(x2)) + s


def box_plus_reduce(values, axis=-1):
    """Left fold of the pairwise box-plus along an axis."""
    values = np.moveaxis(np.asarray(values, dtype=np.float64), axis, 0)
    acc = values[0]
    for k in range(1, values.shape[0]):
        acc = box_plus(acc, values[k])
    return acc


@dataclass
class DecoderConfig:
    schedule: str = "flooding"      # flooding | column | row
    perm: tuple = None              # 1-based layer order; None = natural
    max_iter: int = 30
    sat: float = 15.75


@dataclass
class DecodeResult:
    bits: np.ndarray
    converged: bool
    iterations: int
    totals: np.ndarray = field(default=None)


class _EdgeLayout:
    """Padded per-CN / per-VN edge index tables for vectorized updates.

    Edges are numbered in CN-major CSR order.  Padded slots point at a
    dummy edge (index E) whose message is held at the box-plus neutral.
    """

    def __init__(self, g):
        self.g = g
        self.E = int(g.H.nnz)
        self.edge_cn = np.repeat(np.arange(g.m), g.cn_degree)
        self.edge_vn = g.H.indices.astype(np.int64)
        order = np.argsort(self.edge_vn, kind="stable")
        self.vn_edge = _pad_groups(self.edge_vn[order], order, g.n, self.E)
        self.cn_edge = _pad_groups(self.edge_cn, np.arange(self.E), g.m, self.E)
        # all VNs of a column block share a degree, so per-layer tables
        # can drop the global padding columns entirely
        self.vn_edges_of_layer = []
        for z in range(g.n_b):
            tbl = self.vn_edge[g.vn_layer == z]
            dz = int((tbl < self.E).sum(axis=1).max()) if tbl.size else 0
            if np.any(tbl[:, :dz] >= self.E):
                raise ValueError("unequal VN degrees within a column block")
            self.vn_edges_of_layer.append(tbl[:, :dz])
        # position of each edge within its CN's slot list
        self.edge_slot = np.concatenate(
            [np.arange(d) for d in g.cn_degree]) if self.E else np.array([], int)

    def cn_extrinsic(self, v2c, cns=None):
        """Extrinsic box-plus at each CN for each of its edge slots.

        v2c has shape (..., E+1) with the neutral dummy in the last slot.
        Returns (..., nc, d_max) aligned with cn_edge[cns].
        """
        idx = self.cn_edge if cns is None else self.cn_edge[cns]
        msgs = v2c[..., idx]                       # (..., nc, d_max)
        d = idx.shape[1]
        prefix = np.empty(msgs.shape[:-1] + (d + 1,))
        suffix = np.empty_like(prefix)
        prefix[..., 0] = _NEUTRAL
        suffix[..., d] = _NEUTRAL
        for k in range(d):
            prefix[..., k + 1] = box_plus(prefix[..., k], msgs[..., k])
            suffix[..., d - 1 - k] = box_plus(suffix[..., d - k], msgs[..., d - 1 - k])
        return box_plus(prefix[..., :d], suffix[..., 1:])


def _pad_groups(keys, vals, n_groups, sentinel):
    """Pack vals grouped by sorted keys into an (n_groups, max_size) table."""
    counts = np.bincount(keys, minlength=n_groups)
    width = int(counts.max()) if n_groups else 0
    table = np.full((n_groups, width), sentinel, dtype=np.int64)
    pos = np.concatenate([[0], np.cumsum(counts)])
    for gidx in range(n_groups):
        table[gidx, :counts[gidx]] = vals[pos[gidx]:pos[gidx + 1]]
    return table


def _layout(g):
    if not hasattr(g, "_edge_layout"):
        g._edge_layout = _EdgeLayout(g)
    return g._edge_layout


def _resolve_perm(perm, nblocks):
    if perm is None:
        return np.arange(nblocks)
    perm = np.asarray(perm, dtype=np.int64) - 1
    if sorted(perm.tolist()) != list(range(nblocks)):
        raise ValueError("layer permutation must be a bijection")
    return perm


def _scatter_cn(lay, cn_vals, nbatch):
    """Spread (..., m, d_max) CN-slot values onto per-edge storage (..., E+1)."""
    out = np.zeros(nbatch + (lay.E + 1,))
    valid = lay.cn_edge < lay.E
    out[..., lay.cn_edge[valid]] = cn_vals[..., valid]
    return out


def decode_batch(g, llrs, cfg):
    """Decode a batch of frames; llrs has shape (F, n).

    Returns (bits (F, n), converged (F,), iters (F,), totals (F, n)).
    All stored messages and totals are clipped to +/- cfg.sat.
    """
    lay = _layout(g)
    llrs = np.atleast_2d(np.asarray(llrs, dtype=np.float64))
    F, n = llrs.shape
    if n != g.n:
        raise ValueError("LLR length mismatch")
    sat = cfg.sat
    llrs = np.clip(llrs, -sat, sat)

    bits = np.zeros((F, g.n), dtype=np.int8)
    totals = np.array(llrs)
    converged = np.zeros(F, dtype=bool)
    iters = np.zeros(F, dtype=np.int64)

    # working copies; finished frames are compacted out after each iteration
    active = np.arange(F)
    a_llr = llrs.copy()
    a_v2c = np.empty((F, lay.E + 1))
    a_v2c[:, :lay.E] = llrs[:, lay.edge_vn]
    a_v2c[:, lay.E] = _NEUTRAL
    a_tot = llrs.copy()
    a_c2v = np.zeros((F, lay.E))     # row-layered CN message memory

    if cfg.schedule == "column":
        perm = _resolve_perm(cfg.perm, g.n_b)
    elif cfg.schedule == "row":
        perm = _resolve_perm(cfg.perm, g.m_b)
    elif cfg.schedule == "flooding":
        perm = None
    else:
        raise ValueError("unknown schedule %r" % cfg.schedule)

    for it in range(1, cfg.max_iter + 1):
        if active.size == 0:
            break
        nb = (active.size,)
        if cfg.schedule == "flooding":
            c2v = np.clip(lay.cn_extrinsic(a_v2c), -sat, sat)
            c2v_edge = _scatter_cn(lay, c2v, nb)
            full = a_llr + c2v_edge[:, lay.vn_edge].sum(axis=-1)
            a_v2c[:, :lay.E] = np.clip(
                full[:, lay.edge_vn] - c2v_edge[:, :lay.E], -sat, sat)
            a_tot = np.clip(full, -sat, sat)
        elif cfg.schedule == "column":
            for z in perm:
                vne = lay.vn_edges_of_layer[z]       # (p, d_v)
                edges = vne.reshape(-1)
                cns = lay.edge_cn[edges]
                ext = lay.cn_extrinsic(a_v2c, cns=cns)   # (F, |E_z|, d_max)
                slot = lay.edge_slot[edges]
                c2v = np.clip(ext[:, np.arange(edges.size), slot], -sat, sat)
                c2v = c2v.reshape(-1, *vne.shape)
                vns = np.nonzero(g.vn_layer == z)[0]
                full = a_llr[:, vns] + c2v.sum(axis=2)
                a_v2c[:, vne] = np.clip(full[:, :, None] - c2v, -sat, sat)
                a_tot[:, vns] = np.clip(full, -sat, sat)
        else:  # row-layered, CN-centric serial updates
            for zr in perm:
                rows = np.nonzero(g.cn_layer == zr)[0]
                idx = lay.cn_edge[rows]
                valid = idx < lay.E
                eidx = idx[valid]
                vns = lay.edge_vn[eidx]
                v2c_loc = np.clip(a_tot[:, vns] - a_c2v[:, eidx], -sat, sat)
                scratch = np.full(nb + (lay.E + 1,), _NEUTRAL)
                scratch[:, eidx] = v2c_loc
                ext = lay.cn_extrinsic(scratch, cns=rows)
                c2v_new = np.clip(ext[:, valid], -sat, sat)
                # a VN meets each row block through at most one CN
                a_tot[:, vns] = np.clip(v2c_loc + c2v_new, -sat, sat)
                a_c2v[:, eidx] = c2v_new

        d = (a_tot < 0).astype(np.int8)  # total of exactly zero decodes to 0
        syn_ok = ~np.any((g.H @ d.T) % 2, axis=0)
        iters[active] = it
        bits[active] = d
        totals[active] = a_tot
        converged[active[syn_ok]] = True
        if np.any(syn_ok):
            keep = ~syn_ok
            active = active[keep]
            a_llr = a_llr[keep]
            a_v2c = a_v2c[keep]
            a_tot = a_tot[keep]
            a_c2v = a_c2v[keep]
    return bits, converged, iters, totals


def decode(g, llrs, cfg):
    """Decode a single frame; see decode_batch."""
    bits, conv, iters, totals = decode_batch(g, np.atleast_2d(llrs), cfg)
    return DecodeResult(bits[0], bool(conv[0]), int(iters[0]), totals[0])
