"""Dense matrix kernels: perfect shuffle, ordered real Schur form, Sylvester-based
block diagonalization, economic QR, principal angles and separation estimates."""

from dataclasses import dataclass

import numpy as np
import scipy.linalg


class SchurConvergenceError(RuntimeError):
    """The QR eigenvalue iteration failed to converge."""


class InseparableClustersError(RuntimeError):
    """Two eigenvalue clusters share (nearly) common eigenvalues, so the
    Sylvester system that decouples them is numerically singular."""

    def __init__(self, j, k):
        super().__init__(f"clusters {j} and {k} have numerically inseparable spectra")
        self.clusters = (j, k)


class DegenerateBlockBasisError(RuntimeError):
    """A block of columns is numerically rank deficient."""


@dataclass(frozen=True)
class SchurForm:
    """Real Schur decomposition with diagonal blocks sorted by ascending
    eigenvalue real part.

    Attributes
    ----------
    q : ndarray, shape (n, n)
        Orthogonal factor.
    t : ndarray, shape (n, n)
        Real quasi-upper-triangular factor with 1x1 and 2x2 diagonal blocks;
        ``q @ t @ q.T`` reconstructs the input.
    eig_real_parts : ndarray, shape (n,)
        Real part of the eigenvalue at each diagonal position, non-decreasing.
    pair_flags : ndarray of bool, shape (n,)
        True at both positions of a 2x2 block holding a complex conjugate pair.
    """

    q: np.ndarray
    t: np.ndarray
    eig_real_parts: np.ndarray
    pair_flags: np.ndarray

    @property
    def n(self):
        return self.t.shape[0]

    def pair_starts(self):
        """0-based start positions of the 2x2 conjugate-pair blocks."""
        starts = []
        i = 0
        while i < self.n:
            if self.pair_flags[i]:
                starts.append(i)
                i += 2
            else:
                i += 1
        return starts


def perfect_shuffle(n):
    """Permutation ``p`` of size n*n with ``vec(Z)[p] == vec(Z.T)`` for any
    n-by-n matrix ``Z`` (column-major vec). The permutation is an involution.

    Parameters
    ----------
    n : int
        Matrix order, n >= 1.

    Returns
    -------
    ndarray of int, shape (n*n,)
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    k = np.arange(n * n)
    return (k % n) * n + k // n


def _apply_pair_rotation(q, t, i, g):
    sl = slice(i, i + 2)
    t[:, sl] = t[:, sl] @ g
    t[sl, :] = g.T @ t[sl, :]
    q[:, sl] = q[:, sl] @ g


def _split_real_pair(q, t, i):
    # rotate an eigenvector of the 2x2 block onto the first axis, leaving an
    # upper-triangular split; the root sign avoids cancellation in lam - d
    a, b = t[i, i], t[i, i + 1]
    c, d = t[i + 1, i], t[i + 1, i + 1]
    half = 0.5 * (a - d)
    root = np.sqrt(max(half * half + b * c, 0.0))
    lam = 0.5 * (a + d) + (root if half >= 0.0 else -root)
    v0, v1 = lam - d, c
    nrm = np.hypot(v0, v1)
    g = np.array([[v0, -v1], [v1, v0]]) / nrm
    _apply_pair_rotation(q, t, i, g)
    t[i + 1, i] = 0.0


def _standardize_pair(q, t, i):
    # Bring the 2x2 block at (i, i) to standard form: equal diagonal entries
    # for a genuine complex pair, or an upper-triangular split when the
    # eigenvalues turn out real (a swap can leave such a block behind when
    # the imaginary parts sit at rounding level).
    a, b = t[i, i], t[i, i + 1]
    c, d = t[i + 1, i], t[i + 1, i + 1]
    if c == 0.0:
        return
    half = 0.5 * (a - d)
    if half * half + b * c >= 0.0:
        _split_real_pair(q, t, i)
        return
    if a != d:
        tau = (b + c) / (a - d)
        off = np.hypot(tau, 1.0)
        root = tau - off if abs(tau - off) < abs(tau + off) else tau + off
        cs = 1.0 / np.hypot(root, 1.0)
        sn = root * cs
        _apply_pair_rotation(q, t, i, np.array([[cs, -sn], [sn, cs]]))
    # rounding can flip the off product of a near-real pair; split those too
    if t[i + 1, i] != 0.0 and t[i, i + 1] * t[i + 1, i] >= 0.0:
        _split_real_pair(q, t, i)


def _swap_adjacent_blocks(q, t, p, s1, s2):
    # Direct swap of the adjacent diagonal blocks t[p:p+s1, p:p+s1] and
    # t[p+s1:p+s1+s2, ...] by an orthogonal similarity (Bai-Demmel).  The
    # Sylvester system is solved in Kronecker form; a pseudo-inverse cutoff
    # keeps the transform orthogonal (hence backward stable) even when the
    # two blocks have nearly equal eigenvalues.
    v = slice(p, p + s1)
    w = slice(p + s1, p + s1 + s2)
    b11, b12, b22 = t[v, v], t[v, w], t[w, w]
    k = np.kron(np.eye(s2), b11) - np.kron(b22.T, np.eye(s1))
    u_k, s_k, vt_k = np.linalg.svd(k)
    cutoff = max(s1, s2) * np.finfo(float).eps * (s_k[0] if s_k[0] > 0 else 1.0)
    inv = np.zeros_like(s_k)
    np.divide(1.0, s_k, out=inv, where=s_k > cutoff)
    x = (vt_k.T @ (inv * (u_k.T @ b12.flatten(order="F")))).reshape((s1, s2), order="F")
    qs, _ = np.linalg.qr(np.vstack([-x, np.eye(s2)]), mode="complete")
    vw = slice(p, p + s1 + s2)
    t[:, vw] = t[:, vw] @ qs
    t[vw, :] = qs.T @ t[vw, :]
    q[:, vw] = q[:, vw] @ qs
    # restore exact quasi-triangular zeros below the swapped blocks
    t[p + s2:p + s1 + s2, p:p + s2] = 0.0
    if s2 == 2:
        _standardize_pair(q, t, p)
    if s1 == 2:
        _standardize_pair(q, t, p + s2)


def _block_structure(t, tol):
    # (start, size) of each diagonal block of a quasi-triangular matrix
    n = t.shape[0]
    blocks = []
    i = 0
    while i < n:
        if i + 1 < n and abs(t[i + 1, i]) > tol:
            blocks.append((i, 2))
            i += 2
        else:
            blocks.append((i, 1))
            i += 1
    return blocks


def _block_real_part(t, start, size):
    if size == 1:
        return t[start, start]
    return 0.5 * (t[start, start] + t[start + 1, start + 1])


def real_schur_ordered(z):
    """Real Schur decomposition ``z = q @ t @ q.T`` with the diagonal blocks
    reordered so the eigenvalue real parts are ascending.

    The raw factorization is delegated to LAPACK; the ordering pass swaps
    adjacent diagonal blocks (2x2 conjugate-pair blocks move as units).

    Parameters
    ----------
    z : ndarray, shape (n, n)
        Real matrix with finite entries.

    Returns
    -------
    SchurForm

    Raises
    ------
    SchurConvergenceError
        If the underlying eigenvalue iteration does not converge.
    """
    z = np.asarray(z, dtype=float)
    if z.ndim != 2 or z.shape[0] != z.shape[1]:
        raise ValueError("z must be square")
    if not np.all(np.isfinite(z)):
        raise ValueError("z must have finite entries")
    n = z.shape[0]
    try:
        t, q = scipy.linalg.schur(z, output="real")
    except np.linalg.LinAlgError as exc:
        raise SchurConvergenceError(f"Schur iteration failed for a {n}x{n} matrix") from exc
    t = t.copy()
    q = q.copy()
    subdiag_tol = 0.0  # LAPACK returns exact zeros below 1x1 blocks
    blocks = _block_structure(t, subdiag_tol)
    for start, size in blocks:
        if size == 2:
            _standardize_pair(q, t, start)

    # bubble sort on blocks; strict comparison keeps the pass deterministic.
    # Swapping jitters eigenvalues at rounding level, so nearly tied blocks
    # could oscillate; the swap budget (far above the n^2/2 a sort needs)
    # guarantees termination with at most rounding-level disorder left.
    budget = n * n + 16
    swapped = True
    while swapped and budget > 0:
        swapped = False
        blocks = _block_structure(t, subdiag_tol)
        for idx in range(len(blocks) - 1):
            (p1, s1), (p2, s2) = blocks[idx], blocks[idx + 1]
            if _block_real_part(t, p1, s1) > _block_real_part(t, p2, s2):
                _swap_adjacent_blocks(q, t, p1, s1, s2)
                blocks = _block_structure(t, subdiag_tol)
                swapped = True
                budget -= 1
                if budget == 0:
                    break

    blocks = _block_structure(t, subdiag_tol)
    real_parts = np.empty(n)
    pair_flags = np.zeros(n, dtype=bool)
    for start, size in blocks:
        rp = _block_real_part(t, start, size)
        real_parts[start:start + size] = rp
        if size == 2:
            pair_flags[start:start + 2] = True
    return SchurForm(q=q, t=t, eig_real_parts=real_parts, pair_flags=pair_flags)


def _solve_cluster_sylvester(tjj, tkk, rhs, tnorm, j, k):
    # Solve tjj @ X - X @ tkk = rhs in Kronecker form, guarding against
    # shared spectra between the two clusters.
    nj, nk = tjj.shape[0], tkk.shape[0]
    kr = np.kron(np.eye(nk), tjj) - np.kron(tkk.T, np.eye(nj))
    u, s, vt = np.linalg.svd(kr)
    if s[-1] <= 1e3 * np.finfo(float).eps * tnorm:
        raise InseparableClustersError(j, k)
    x = vt.T @ ((u.T @ rhs.flatten(order="F")) / s)
    return x.reshape((nj, nk), order="F")


def block_diagonalize_similarity(schur, boundaries):
    """Similarity transform that decouples the clusters of an ordered real
    Schur factor.

    Finds nonsingular ``w`` (block upper triangular with identity diagonal
    blocks) such that ``inv(w) @ schur.t @ w`` is block diagonal, one block
    per cluster delimited by ``boundaries``.

    Parameters
    ----------
    schur : SchurForm
    boundaries : sequence of int
        Split indices ``0 < i_1 < ... < i_{t-1} < n``; cluster ``j`` covers
        positions ``i_{j-1}:i_j``.  No boundary may fall inside a 2x2
        conjugate-pair block.

    Returns
    -------
    w : ndarray, shape (n, n)
    blocks : list of ndarray
        Diagonal blocks; block ``j`` carries exactly the eigenvalues of
        cluster ``j``.

    Raises
    ------
    InseparableClustersError
        If two clusters share (nearly) common eigenvalues.
    """
    t = schur.t
    n = t.shape[0]
    boundaries = sorted(int(b) for b in boundaries)
    if any(b <= 0 or b >= n for b in boundaries):
        raise ValueError("boundaries must lie strictly inside 1..n-1")
    if len(set(boundaries)) != len(boundaries):
        raise ValueError("boundaries must be distinct")
    forbidden = {start + 1 for start in schur.pair_starts()}
    if forbidden.intersection(boundaries):
        raise ValueError("a boundary splits a 2x2 conjugate-pair block")

    edges = [0] + boundaries + [n]
    s = len(edges) - 1
    cl = [slice(edges[j], edges[j + 1]) for j in range(s)]
    tnorm = np.linalg.norm(t)
    w = np.eye(n)
    # annihilate couplings by superdiagonals so every needed w block is known
    for d in range(1, s):
        for j in range(s - d):
            k = j + d
            rhs = -t[cl[j], cl[k]].copy()
            for p in range(j + 1, k):
                rhs -= t[cl[j], cl[p]] @ w[cl[p], cl[k]]
            w[cl[j], cl[k]] = _solve_cluster_sylvester(
                t[cl[j], cl[j]], t[cl[k], cl[k]], rhs, tnorm, j, k
            )
    blocks = [t[c, c].copy() for c in cl]
    return w, blocks


def economic_qr(a):
    """Economic QR factorization ``a = u @ r`` with ``u`` column-orthonormal.

    Parameters
    ----------
    a : ndarray, shape (n, k), k <= n

    Returns
    -------
    u : ndarray, shape (n, k)
    r : ndarray, shape (k, k)

    Raises
    ------
    DegenerateBlockBasisError
        If ``a`` is numerically rank deficient.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[1] > a.shape[0]:
        raise ValueError("a must be n-by-k with k <= n")
    u, r = np.linalg.qr(a, mode="reduced")
    diag = np.abs(np.diag(r))
    tol = max(a.shape) * np.finfo(float).eps * (diag.max() if diag.size else 0.0)
    if diag.size and diag.min() <= tol:
        raise DegenerateBlockBasisError(
            f"column block of shape {a.shape} is numerically rank deficient"
        )
    return u, r


def _orthonormal_basis(a):
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.shape[0] == 1 and a.shape[1] > 1:
        a = a.T
    u, s, _ = np.linalg.svd(a, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        raise ValueError("subspace basis is zero")
    rank = int(np.sum(s > max(a.shape) * np.finfo(float).eps * s[0]))
    if rank < a.shape[1]:
        raise ValueError("subspace basis is rank deficient")
    return u[:, :rank]


def largest_principal_angle(e, f):
    """Largest principal angle between the column spaces of ``e`` and ``f``.

    Uses the combined cosine/sine formulation, which stays accurate for
    angles near zero; invariant under column operations on either input.

    Parameters
    ----------
    e : ndarray, shape (n, p)
    f : ndarray, shape (n, q)
        Nonzero matrices of full column rank.

    Returns
    -------
    float
        Angle in [0, pi/2].
    """
    ue = _orthonormal_basis(e)
    uf = _orthonormal_basis(f)
    angles = scipy.linalg.subspace_angles(ue, uf)
    return float(angles[0]) if angles.size else 0.0


def sep_lower(g_j, g_k):
    """Smallest singular value of the map ``X -> g_j.T @ X - X @ g_k``.

    Zero exactly when the spectra of ``g_j`` and ``g_k`` intersect; it
    measures how well the two blocks can be decoupled.

    Parameters
    ----------
    g_j : ndarray, shape (nj, nj)
    g_k : ndarray, shape (nk, nk)

    Returns
    -------
    float
    """
    g_j = np.atleast_2d(np.asarray(g_j, dtype=float))
    g_k = np.atleast_2d(np.asarray(g_k, dtype=float))
    nj, nk = g_j.shape[0], g_k.shape[0]
    kr = np.kron(np.eye(nk), g_j.T) - np.kron(g_k.T, np.eye(nj))
    return float(np.linalg.svd(kr, compute_uv=False)[-1])


def symmetric_orthogonalize(w):
    """Closest-orthogonal polar factor ``w @ (w.T @ w)**(-1/2)``."""
    u, _, vt = np.linalg.svd(np.asarray(w, dtype=float))
    return u @ vt
