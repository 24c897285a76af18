"""QC-LDPC code structure: exponent matrices, lifting, Tanner graphs."""

import numpy as np
from scipy import sparse


class ExponentMatrix:
    """m_b x n_b grid of circulant shifts; -1 marks an all-zero block."""

    def __init__(self, entries, p):
        entries = np.asarray(entries, dtype=np.int64)
        if entries.ndim != 2:
            raise ValueError("exponent matrix must be 2-D")
        if p < 1:
            raise ValueError("lifting degree must be >= 1")
        bad = (entries < -1) | (entries >= p)
        if np.any(bad):
            raise ValueError("entries must be -1 or in [0, p)")
        self.entries = entries
        self.m_b, self.n_b = entries.shape
        self.p = p

    def __eq__(self, other):
        return (isinstance(other, ExponentMatrix) and self.p == other.p
                and np.array_equal(self.entries, other.entries))

    def base_adjacency(self):
        """Binary m_b x n_b bi-adjacency matrix of the base graph."""
        return (self.entries >= 0).astype(np.int8)


def parse_exponent_matrix(text, p=None):
    """Parse a shift grid from text.

    If the first line has exactly three integers "m_b n_b p" and p is not
    given explicitly, it is treated as a header; otherwise every line is a
    matrix row.  Commas are accepted as separators.
    """
    rows = []
    lines = [ln for ln in text.replace(",", " ").splitlines() if ln.split()]
    if not lines:
        raise ValueError("empty exponent matrix")
    start = 0
    if p is None:
        header = lines[0].split()
        if len(header) != 3:
            raise ValueError("expected header line 'm_b n_b p'")
        m_b, n_b, p = (int(x) for x in header)
        start = 1
    for ln in lines[start:]:
        rows.append([int(x) for x in ln.split()])
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ValueError("ragged rows in exponent matrix")
    em = ExponentMatrix(np.array(rows, dtype=np.int64), p)
    if start == 1 and (em.m_b, em.n_b) != (m_b, n_b):
        raise ValueError("header dimensions disagree with the grid")
    return em


def load_exponent_matrix(path):
    with open(path) as f:
        return parse_exponent_matrix(f.read())


class TannerGraph:
    """Lifted bipartite graph with layer bookkeeping.

    VNs are 0-based internally; VN i belongs to column layer i // p and
    CN j to row layer j // p (0-based; user-facing I/O adds 1).
    """

    def __init__(self, H, p, em=None):
        self.H = sparse.csr_matrix(H, dtype=np.int8)
        self.Hc = self.H.tocsc()
        self.m, self.n = self.H.shape
        self.p = p
        self.em = em
        self.n_b = self.n // p
        self.m_b = self.m // p
        self.vn_layer = np.arange(self.n) // p
        self.cn_layer = np.arange(self.m) // p
        # neighbor lists
        self.cn_neighbors = [self.H.indices[self.H.indptr[j]:self.H.indptr[j + 1]]
                             for j in range(self.m)]
        self.vn_neighbors = [self.Hc.indices[self.Hc.indptr[i]:self.Hc.indptr[i + 1]]
                             for i in range(self.n)]
        self.vn_degree = np.diff(self.Hc.indptr)
        self.cn_degree = np.diff(self.H.indptr)

    def syndrome(self, word):
        word = np.asarray(word)
        if word.shape != (self.n,):
            raise ValueError("word length mismatch")
        return (self.H @ word) % 2

    def edges(self):
        """Sorted (cn, vn) coordinate list."""
        coo = self.H.tocoo()
        order = np.lexsort((coo.col, coo.row))
        return np.column_stack([coo.row[order], coo.col[order]])

    def export_edges(self, path):
        np.savetxt(path, self.edges(), fmt="%d")


def lift(em):
    """Expand an exponent matrix into the lifted Tanner graph.

    Block (j, i) with shift s is the p x p identity circularly shifted right
    by s: row r of the block has its one in column (r + s) mod p.
    """
    p = em.p
    rows, cols = [], []
    r = np.arange(p)
    for j in range(em.m_b):
        for i in range(em.n_b):
            s = em.entries[j, i]
            if s < 0:
                continue
            rows.append(j * p + r)
            cols.append(i * p + (r + s) % p)
    rows = np.concatenate(rows) if rows else np.zeros(0, dtype=np.int64)
    cols = np.concatenate(cols) if cols else np.zeros(0, dtype=np.int64)
    H = sparse.coo_matrix(
        (np.ones(rows.size, dtype=np.int8), (rows, cols)),
        shape=(em.m_b * p, em.n_b * p))
    return TannerGraph(H.tocsr(), p, em=em)


def extract_exponents(g):
    """Recover the exponent matrix from a lifted graph (round-trip check)."""
    p = g.p
    ent = np.full((g.m_b, g.n_b), -1, dtype=np.int64)
    H = g.H.tolil()
    for j in range(g.m_b):
        row0 = H.rows[j * p]
        for col in row0:
            i = col // p
            ent[j, i] = col % p  # block-row 0 has its one at column s
    return ExponentMatrix(ent, p)


class BaseGraph:
    """Protograph view of the code: one node per VN/CN type."""

    def __init__(self, em):
        self.em = em
        self.adj = em.base_adjacency()
        self.m_b, self.n_b = self.adj.shape
        self.cn_types_of_vn = [np.nonzero(self.adj[:, i])[0] for i in range(self.n_b)]
        self.vn_types_of_cn = [np.nonzero(self.adj[j, :])[0] for j in range(self.m_b)]
        self.n_edges = int(self.adj.sum())

    def vn_degree(self, i):
        return len(self.cn_types_of_vn[i])

    def cn_degree(self, j):
        return len(self.vn_types_of_cn[j])


def nullspace_gf2(H):
    """Basis of the GF(2) nullspace of a dense/sparse binary matrix."""
    A = np.array(H.todense() if sparse.issparse(H) else H, dtype=np.int8) % 2
    m, n = A.shape
    pivots = []
    row = 0
    for col in range(n):
        sel = np.nonzero(A[row:, col])[0]
        if sel.size == 0:
            continue
        piv = row + sel[0]
        A[[row, piv]] = A[[piv, row]]
        mask = A[:, col].copy()
        mask[row] = 0
        A[mask == 1] ^= A[row]
        pivots.append(col)
        row += 1
        if row == m:
            break
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for fc in free:
        v = np.zeros(n, dtype=np.int8)
        v[fc] = 1
        for r, pc in enumerate(pivots):
            if A[r, fc]:
                v[pc] = 1
        basis.append(v)
    return np.array(basis, dtype=np.int8).reshape(len(basis), n)
