"""Linear state-space model of a LETS under column-layered decoding.

State variables are the internal VN-to-mis-satisfied-CN messages; a state is
activated at the layer of the VN that consumes it (the other VN on its CN).
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr


@dataclass
class SystematicLabeling:
    """Explicit state order: consecutive indices per activation layer.

    states is a list of (src, mis_idx, cons) triples (VN positions within the
    trapping set, mis-satisfied CN position) in the desired order.
    """
    states: list


def all_states(tslp):
    out = []
    for m_i, (typ, (pu, pw), ext) in enumerate(tslp.mis_cns):
        out.append((pu, m_i, pw))
        out.append((pw, m_i, pu))
    return out


def default_labeling(tslp, pos):
    """Group states by schedule position of their activation layer."""
    sts = all_states(tslp)
    sts.sort(key=lambda s: (pos[tslp.vn_layers[s[2]]], s[0], s[2]))
    return SystematicLabeling(sts)


@dataclass(eq=False)
class StateSpaceModel:
    tslp: object
    pos: dict                  # code layer -> schedule position
    ts_layers: list            # TS layers in update order (L'_1..L'_J)
    states: list               # (src, mis_idx, cons) in systematic order
    layer_of_state: np.ndarray  # index j (0-based) per state
    layer_sizes: list
    A: np.ndarray              # flooding transition matrix (m_s x m_s)
    A_layers: list             # per-layer transition matrices
    B_layers: list             # channel input matrices (m_s x a)
    Bl_layers: list            # stale unsatisfied-CN input matrices (m_s x b)
    Br_layers: list            # fresh unsatisfied-CN input matrices (m_s x b)

    @property
    def m_s(self):
        return len(self.states)

    @property
    def J(self):
        return len(self.ts_layers)


def build_model(tslp, perm, labeling=None):
    """Construct all per-layer matrices of the layered state-space model.

    perm is a 0-based sequence of code layers fixing the update order; it must
    contain every TS layer.  labeling defaults to grouping by activation layer
    with (source, consumer) index tie-breaking.
    """
    if any(len(internal) != 2 for _, internal, _ in tslp.mis_cns):
        raise ValueError("state-space model requires an elementary TS")
    pos = {z: t for t, z in enumerate(perm)}
    for z in tslp.ts_layers:
        if z not in pos:
            raise ValueError("permutation misses TS layer %d" % z)
    ts_layers = sorted(tslp.ts_layers, key=lambda z: pos[z])
    lab = labeling or default_labeling(tslp, pos)
    states = list(lab.states)
    m_s = len(states)
    a = len(tslp.vn_layers)
    b = len(tslp.unsat_cns)
    sidx = {s: i for i, s in enumerate(states)}
    jidx = {z: j for j, z in enumerate(ts_layers)}
    layer_of_state = np.array([jidx[tslp.vn_layers[cons]]
                               for (_, _, cons) in states])
    if np.any(np.diff(layer_of_state) < 0):
        raise ValueError("labeling is not systematic (layers not consecutive)")
    layer_sizes = [int(np.sum(layer_of_state == j)) for j in range(len(ts_layers))]

    # flooding transition matrix: a state is refreshed from the other states
    # its source VN consumed on its remaining mis-satisfied CNs
    A = np.zeros((m_s, m_s), dtype=np.int64)
    for x1, (src, m_i, cons) in enumerate(states):
        for x2, (src2, m_i2, cons2) in enumerate(states):
            if cons2 == src and m_i2 != m_i:
                A[x1, x2] = 1

    A_layers, B_layers, Bl_layers, Br_layers = [], [], [], []
    for j, zj in enumerate(ts_layers):
        rows = layer_of_state == j
        Aj = np.eye(m_s, dtype=np.int64)
        Aj[rows] = A[rows]
        Bj = np.zeros((m_s, a), dtype=np.int64)
        Bl = np.zeros((m_s, b), dtype=np.int64)
        Br = np.zeros((m_s, b), dtype=np.int64)
        for x in np.nonzero(rows)[0]:
            src = states[x][0]
            Bj[x, src] = 1
            fresh = pos[tslp.vn_layers[src]] < pos[zj]
            for u_i, (_, internal, _) in enumerate(tslp.unsat_cns):
                if internal == src:
                    (Br if fresh else Bl)[x, u_i] = 1
        A_layers.append(Aj)
        B_layers.append(Bj)
        Bl_layers.append(Bl)
        Br_layers.append(Br)
    return StateSpaceModel(tslp, pos, ts_layers, states, layer_of_state,
                           layer_sizes, A, A_layers, B_layers, Bl_layers,
                           Br_layers)


def layered_transition_matrix(model, gains=None):
    """A_J ... A_1 (gain-free), or with diagonal gain matrices interleaved."""
    acc = np.eye(model.m_s)
    for j in range(model.J):
        Pj = model.A_layers[j].astype(float)
        if gains is not None:
            Pj = gain_matrix(model, j, gains) @ Pj
        acc = Pj @ acc
    return acc


def gain_matrix(model, j, gains):
    """Identity with the layer-j diagonal replaced by the states' gains."""
    d = np.ones(model.m_s)
    rows = model.layer_of_state == j
    d[rows] = np.asarray(gains)[rows]
    return np.diag(d)


@dataclass
class Spectrum:
    r: float
    w_left: np.ndarray
    u_right: np.ndarray


def spectrum(M, tol=1e-9):
    """Spectral radius with nonnegative dominant left/right eigenvectors."""
    M = np.asarray(M, dtype=float)
    eigvals = np.linalg.eigvals(M)
    r = float(np.max(np.abs(eigvals)))
    if r == 0.0:
        raise ValueError("zero spectral radius")

    def dominant_vec(T):
        # shifted power iteration (I + T/r) stays nonnegative and is robust
        # to reducible T; converges to a dominant nonnegative eigenvector
        v = np.ones(T.shape[0])
        for _ in range(2000):
            nv = v + (T @ v) / r
            nv /= nv.sum()
            if np.abs(nv - v).max() < tol / 10:
                v = nv
                break
            v = nv
        return v

    u = dominant_vec(M)
    w = dominant_vec(M.T)
    if np.min(u) < -tol or np.min(w) < -tol:
        raise ValueError("no nonnegative dominant eigenvector")
    return Spectrum(r, w / w.sum(), u / u.sum())


@dataclass
class FailureEstimate:
    p_e: float
    ratio: float
    means: list
    variances: list
    converged: bool
    iterations: int


def beta_statistics(model, inputs, sigma_ch, max_iters=50, rtol=1e-3):
    """Mean/variance recursion of the error indicator; stops on a stable
    mean-to-deviation ratio (two successive relative changes below rtol)."""
    w1 = spectrum(layered_transition_matrix(model)).w_left
    m_s, a, b = model.m_s, len(model.tslp.vn_layers), len(model.tslp.unsat_cns)
    Bch = np.zeros((m_s, a))
    Ml, Mr = [], []          # per-iteration accumulated input matrices
    means, variances = [], []
    ratio_prev = None
    hits = 0
    est = None
    for ell in range(1, max_iters + 1):
        g = inputs.gains(model, ell)
        # per-layer scaled transitions and the left-product prefixes
        P = [gain_matrix(model, j, g) @ model.A_layers[j].astype(float)
             for j in range(model.J)]
        C = [np.eye(m_s)]
        for j in range(model.J - 1, -1, -1):
            C.insert(0, C[0] @ P[j])
        Atl = C[0]
        Bt = sum(C[j + 1] @ gain_matrix(model, j, g) @ model.B_layers[j]
                 for j in range(model.J))
        Bl = sum(C[j + 1] @ gain_matrix(model, j, g) @ model.Bl_layers[j]
                 for j in range(model.J))
        Br = sum(C[j + 1] @ gain_matrix(model, j, g) @ model.Br_layers[j]
                 for j in range(model.J))
        Bch = Atl @ Bch + Bt
        Ml = [Atl @ M for M in Ml] + [Bl]
        Mr = [Atl @ M for M in Mr] + [Br]
        # keep magnitudes bounded; a global rescale leaves E/sqrt(VAR) intact
        peak = max(np.abs(Bch).max(),
                   max((np.abs(M).max() for M in Ml + Mr), default=0.0))
        if peak > 1e80:
            Bch /= peak
            Ml = [M / peak for M in Ml]
            Mr = [M / peak for M in Mr]

        g_ch = w1 @ Bch
        g_l = [w1 @ M for M in Ml]    # g_l[i'-1] = stale gamma of iteration i'
        g_r = [w1 @ M for M in Mr]
        ext_m = [inputs.ext_mean(model, i) for i in range(1, ell + 1)]
        ext_v = [inputs.ext_var(model, i) for i in range(1, ell + 1)]
        E = 2.0 / sigma_ch ** 2 * g_ch.sum()
        V = 4.0 / sigma_ch ** 2 * (g_ch ** 2).sum()
        for i in range(1, ell):
            coef = g_l[i] + g_r[i - 1]     # stale of i+1 plus fresh of i
            E += coef @ ext_m[i - 1]
            V += (coef ** 2) @ ext_v[i - 1]
        E += g_r[ell - 1] @ ext_m[ell - 1]
        V += (g_r[ell - 1] ** 2) @ ext_v[ell - 1]
        means.append(E)
        variances.append(V)
        ratio = E / np.sqrt(V) if V > 0 else np.inf
        if ratio_prev is not None and np.isfinite(ratio):
            hits = hits + 1 if abs(ratio - ratio_prev) <= rtol * abs(ratio) else 0
        ratio_prev = ratio
        est = FailureEstimate(float(ndtr(-ratio)), float(ratio), means,
                              variances, hits >= 2, ell)
        if hits >= 2:
            break
    return est


def failure_probability(est):
    return est.p_e


def error_floor(groups_pe):
    """Union bound over TSLP groups: sum of multiplicity * P_e.

    Accepts (multiplicity, P_e) pairs; the first element may also be any
    object with a multiplicity attribute."""
    total = 0.0
    for mult, pe in groups_pe:
        total += getattr(mult, "multiplicity", mult) * pe
    return float(total)


class ExactModelInputs:
    """Gains and unsatisfied-CN input moments from a full DE run."""

    def __init__(self, dists, polarity=True):
        self.dists = dists
        self.grid = dists.grid
        self.pos = dists.pos
        self.polarity = polarity
        self._fold_cache = {}
        self._gain_cache = {}
        self._ext_cache = {}

    def _psi_hat(self, cn_type, ext_layers, act_layer, ell):
        """Virtual-VN density: box-plus of the external VN->CN messages with
        fresh/stale selection relative to the activation layer's position."""
        t = self.pos[act_layer]
        tagged = tuple(sorted(
            (k, self.dists._clamp(ell if self.pos[k] < t else ell - 1))
            for k in ext_layers))
        key = (cn_type, tagged)
        if key not in self._fold_cache:
            ins = [self.dists.v2c(l, k, cn_type) for (k, l) in tagged]
            self._fold_cache[key] = self.grid.cn_density(ins)
        return self._fold_cache[key]

    def gains(self, model, ell):
        # key on the object itself: holding the reference prevents id reuse
        key = (model, ell)
        if key in self._gain_cache:
            return self._gain_cache[key]
        tslp = model.tslp
        out = np.empty(model.m_s)
        for x, (src, m_i, cons) in enumerate(model.states):
            typ, _, ext = tslp.mis_cns[m_i]
            if len(ext) == 0:
                out[x] = 1.0
                continue
            act = tslp.vn_layers[cons]
            psi = self._psi_hat(typ, ext, act, ell)
            gbar = self.grid.tanh_mean(psi)
            if self.polarity:
                gbar *= 1.0 - self.grid.neg_mass(psi)
            out[x] = gbar
        self._gain_cache[key] = out
        return out

    def _ext_stats(self, model, ell):
        key = (model, ell)
        if key not in self._ext_cache:
            tslp = model.tslp
            m = np.empty(len(tslp.unsat_cns))
            v = np.empty(len(tslp.unsat_cns))
            for u_i, (typ, internal, _) in enumerate(tslp.unsat_cns):
                z = tslp.vn_layers[internal]
                m[u_i], v[u_i] = self.grid.moments(self.dists.c2v(ell, z, typ))
            self._ext_cache[key] = (m, v)
        return self._ext_cache[key]

    def ext_mean(self, model, ell):
        return self._ext_stats(model, ell)[0]

    def ext_var(self, model, ell):
        return self._ext_stats(model, ell)[1]


class ApproxModelInputs:
    """Screening-mode inputs: partial-gain products (no polarity term) and
    moments of per-layer averaged densities, selected by the candidate order."""

    def __init__(self, avg, theta, pos):
        self.avg = avg
        self.theta = theta
        self.pos = pos
        self._mom = {}

    def with_pos(self, pos):
        return ApproxModelInputs(self.avg, self.theta, pos)

    def gains(self, model, ell):
        tslp = model.tslp
        lc = min(ell, self.avg.iters)
        lp = min(ell - 1, self.avg.iters)
        out = np.empty(model.m_s)
        for x, (src, m_i, cons) in enumerate(model.states):
            _, _, ext = tslp.mis_cns[m_i]
            t = self.pos[tslp.vn_layers[cons]]
            gprod = 1.0
            for k in ext:
                gprod *= self.theta[lc][k] if self.pos[k] < t else self.theta[lp][k]
            out[x] = gprod
        return out

    def _moments(self, z, ell):
        ell = min(ell, self.avg.iters)
        if (z, ell) not in self._mom:
            self._mom[(z, ell)] = self.avg.grid.moments(self.avg.avg_c2v(ell, z))
        return self._mom[(z, ell)]

    def ext_mean(self, model, ell):
        tslp = model.tslp
        return np.array([self._moments(tslp.vn_layers[internal], ell)[0]
                         for (_, internal, _) in tslp.unsat_cns])

    def ext_var(self, model, ell):
        tslp = model.tslp
        return np.array([self._moments(tslp.vn_layers[internal], ell)[1]
                         for (_, internal, _) in tslp.unsat_cns])
