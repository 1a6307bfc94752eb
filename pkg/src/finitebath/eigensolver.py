"""Diagonalization of arrowhead Hamiltonians.

Two independent routes:

* :func:`solve_arrowhead` -- O(N^2) root finding on the secular function
  ``f(lam) = lam - v1 - sum_k g_k^2 / (lam - v_k)``, one root per interlacing
  bracket, with first-row weights ``M_1k^2 = 1 / f'(omega_k)``.
* :func:`solve_dense` -- cyclic Jacobi rotations on the dense matrix, giving
  the full orthogonal matrix ``M``; used for amplitude propagation and as a
  cross-check of the fast route.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .bath import ArrowheadHamiltonian
from .errors import (
    ConvergenceError,
    DegeneratePoles,
    DimensionMismatch,
    PoleHit,
    SizeLimit,
)

__all__ = [
    "SpectralDecomposition",
    "secular_value",
    "secular_derivative",
    "solve_arrowhead",
    "solve_dense",
    "jacobi_eigh",
    "analytic_eigenvector",
    "spectrum_table",
]

EPS = np.finfo(float).eps
DENSE_SIZE_LIMIT = 5000
# roots are solved in blocks so the (roots x poles) work arrays stay small
_BLOCK_ELEMENTS = 1 << 22


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Ascending eigenfrequencies and the aligned first-row weights.

    ``full_matrix`` (columns aligned with ``eigenvalues``) is only present
    when the decomposition came from a solver asked for eigenvectors.

    The arrowhead solver also records each eigenvalue as ``anchors[k] +
    offsets[k]``, with the anchor a bath frequency and the offset carried to
    full relative precision. Near-pole roots lose that precision once
    rounded into ``eigenvalues``, so quantities like ``f'(omega)`` should be
    evaluated from the pair.
    """

    eigenvalues: np.ndarray
    weights: np.ndarray
    full_matrix: Optional[np.ndarray] = None
    anchors: Optional[np.ndarray] = None
    offsets: Optional[np.ndarray] = None

    def __post_init__(self):
        w = _frozen(self.eigenvalues).ravel()
        p = _frozen(self.weights).ravel()
        if w.shape != p.shape:
            raise DimensionMismatch(
                f"{w.size} eigenvalues but {p.size} weights")
        object.__setattr__(self, "eigenvalues", w)
        object.__setattr__(self, "weights", p)
        if self.full_matrix is not None:
            m = _frozen(self.full_matrix)
            if m.shape != (w.size, w.size):
                raise DimensionMismatch(
                    f"full matrix has shape {m.shape}, expected {(w.size, w.size)}")
            object.__setattr__(self, "full_matrix", m)
        if (self.anchors is None) != (self.offsets is None):
            raise DimensionMismatch("anchors and offsets must be given together")
        for name in ("anchors", "offsets"):
            v = getattr(self, name)
            if v is not None:
                v = _frozen(v).ravel()
                if v.shape != w.shape:
                    raise DimensionMismatch(f"{v.size} {name} for {w.size} eigenvalues")
                object.__setattr__(self, name, v)

    @property
    def size(self) -> int:
        return self.eigenvalues.size

    @property
    def bandwidth(self) -> float:
        """omega_N - omega_1."""
        return float(self.eigenvalues[-1] - self.eigenvalues[0])


# -- secular function ----------------------------------------------------------

def _active_terms(h: ArrowheadHamiltonian, lam: float, pole: Optional[float]):
    if pole is None:
        diff = lam - h.bath_freqs
        at = lam
    else:
        # lam is an offset from the bath frequency ``pole``
        diff = (pole - h.bath_freqs) + lam
        at = pole + lam
    active = h.couplings != 0
    scale = np.maximum(abs(at), np.abs(h.bath_freqs))
    hit = active & (np.abs(diff) <= 4 * EPS * scale) if pole is None else active & (diff == 0)
    if np.any(hit):
        raise PoleHit(f"lambda={at!r} coincides with bath frequency "
                      f"{h.bath_freqs[hit][0]!r}")
    return at, h.couplings[active] ** 2, diff[active]


def secular_value(h: ArrowheadHamiltonian, lam: float, pole: Optional[float] = None) -> float:
    """``lam - v1 - sum g_k^2 / (lam - v_k)`` over the nonzero couplings.

    With ``pole`` given, the argument is ``pole + lam`` and the differences
    ``lam - v_k`` are formed as ``(pole - v_k) + lam`` so an offset close to
    zero keeps its precision.
    """
    at, g2, diff = _active_terms(h, float(lam), pole)
    return float(at - h.system_freq - np.sum(g2 / diff))


def secular_derivative(h: ArrowheadHamiltonian, lam: float,
                       pole: Optional[float] = None) -> float:
    """``1 + sum g_k^2 / (lam - v_k)^2``; always >= 1. ``pole`` as in :func:`secular_value`."""
    _, g2, diff = _active_terms(h, float(lam), pole)
    return float(1.0 + np.sum(g2 / diff**2))


# -- arrowhead solver ------------------------------------------------------------

@dataclass
class _Reduced:
    """Arrowhead problem after deflation: distinct poles, nonzero couplings."""
    alpha: float
    poles: np.ndarray
    z: np.ndarray
    groups: list          # original bath indices merged into each pole
    deflated: list        # (frequency, group, original indices) of weight-0 modes


def _deflate(h: ArrowheadHamiltonian, allow_merge: bool) -> _Reduced:
    d, z = h.bath_freqs, h.couplings
    scale = max(abs(h.system_freq), float(np.max(np.abs(d))), h.total_coupling())
    ztol = EPS * scale
    dtol = 8 * EPS * scale
    poles, zs, groups, deflated = [], [], [], []
    for j in range(d.size):
        if abs(z[j]) <= ztol:
            deflated.append((float(d[j]), None, [j]))
            continue
        if poles and d[j] - poles[-1] <= dtol:
            if not allow_merge:
                raise DegeneratePoles(
                    f"bath modes {groups[-1][-1] + 2} and {j + 2} share frequency "
                    f"{d[j]!r} with nonzero couplings")
            zs[-1] = float(np.hypot(zs[-1], z[j]))
            groups[-1].append(j)
            continue
        poles.append(float(d[j]))
        zs.append(float(z[j]))
        groups.append([j])
    for k, grp in enumerate(groups):
        if len(grp) > 1:
            # one coupled combination stays; the rest decouple at this frequency
            deflated.append((poles[k], k, grp))
    return _Reduced(float(h.system_freq), np.array(poles), np.array(zs),
                    groups, deflated)


def _brackets(alpha, d, z2):
    """Origin pole index and bracket (lo, hi) in coordinates relative to it."""
    m = d.size
    znorm = np.sqrt(z2.sum())
    lower = min(alpha, d[0]) - znorm
    upper = max(alpha, d[-1]) + znorm
    origin = np.empty(m + 1, dtype=int)
    lo = np.empty(m + 1)
    hi = np.empty(m + 1)
    origin[0], lo[0], hi[0] = 0, lower - d[0], 0.0
    origin[m], lo[m], hi[m] = m - 1, 0.0, upper - d[-1]
    if m > 1:
        k = np.arange(1, m)
        half = 0.5 * (d[k] - d[k - 1])
        delta = d[None, :] - d[k - 1][:, None]
        fmid = (d[k - 1] - alpha) + half + np.sum(z2 / (delta - half[:, None]), axis=1)
        # f increases on every bracket; its sign at the midpoint says which
        # half holds the root, and the nearer pole becomes the origin
        left = fmid >= 0
        origin[1:m] = np.where(left, k - 1, k)
        lo[1:m] = np.where(left, 0.0, -half)
        hi[1:m] = np.where(left, half, 0.0)
    return origin, lo, hi


def _solve_block(shift, delta, z2, a, b, tol, max_iter):
    """Safeguarded Newton on f(tau) = shift + tau + sum z2 / (delta - tau)."""
    x = 0.5 * (a + b)
    active = np.ones(x.size, dtype=bool)
    for _ in range(max_iter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        xi = x[idx]
        r = 1.0 / (delta[idx] - xi[:, None])
        t = z2 * r
        f = shift[idx] + xi + t.sum(axis=1)
        df = 1.0 + (t * r).sum(axis=1)
        noise = 4 * EPS * (np.abs(shift[idx]) + np.abs(xi) + np.abs(t).sum(axis=1))
        neg = f < 0
        a[idx[neg]] = xi[neg]
        b[idx[~neg]] = xi[~neg]
        ai, bi = a[idx], b[idx]
        xn = xi - f / df
        outside = ~((xn > ai) & (xn < bi))
        xn[outside] = 0.5 * (ai + bi)[outside]
        exact = np.abs(f) <= noise
        xn[exact] = xi[exact]
        done = (exact
                | (np.abs(xn - xi) <= tol * np.abs(xn))
                | (bi - ai <= 2 * EPS * np.maximum(np.abs(ai), np.abs(bi))))
        x[idx] = xn
        active[idx[done]] = False
    return x


def _secular_roots(red: _Reduced, tol: float, max_iter: int):
    d, z2 = red.poles, red.z**2
    m = d.size
    origin, lo, hi = _brackets(red.alpha, d, z2)
    shift = d[origin] - red.alpha
    tau = np.empty(m + 1)
    weights = np.empty(m + 1)
    block = max(1, _BLOCK_ELEMENTS // max(m, 1))
    for s in range(0, m + 1, block):
        sl = slice(s, min(s + block, m + 1))
        delta = d[None, :] - d[origin[sl]][:, None]
        tau[sl] = _solve_block(shift[sl], delta, z2, lo[sl].copy(), hi[sl].copy(),
                               tol, max_iter)
        r = 1.0 / (delta - tau[sl][:, None])
        weights[sl] = 1.0 / (1.0 + np.sum(z2 * r * r, axis=1))
    return origin, tau, weights


def _complement_basis(q: np.ndarray) -> np.ndarray:
    """Orthonormal columns spanning the complement of unit vector ``q``."""
    s = q.size
    basis, _ = np.linalg.qr(np.column_stack([q, np.eye(s)]))
    return basis[:, 1:s]


def solve_arrowhead(h: ArrowheadHamiltonian, tol: float = 1e-13, *,
                    max_iter: int = 400, deflate: bool = True,
                    vectors: bool = False) -> SpectralDecomposition:
    """Eigenfrequencies and first-row weights by secular-equation root finding.

    Parameters
    ----------
    h : ArrowheadHamiltonian
    tol : float
        Relative tolerance on each root's distance to its nearest pole.
    max_iter : int
        Iteration cap per root.
    deflate : bool
        Merge bath modes sharing a frequency into one coupled and several
        decoupled modes. With ``deflate=False`` such input raises
        :class:`DegeneratePoles`.
    vectors : bool
        Also assemble the full orthogonal matrix from the analytic
        eigenvectors ``(1, g_j / (omega - v_j))``.

    Returns
    -------
    SpectralDecomposition
        Zero-coupling (and merged-away) bath modes appear as exact
        eigenvalues with weight 0.
    """
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    red = _deflate(h, allow_merge=deflate)
    n = h.size
    if red.poles.size:
        origin, tau, w = _secular_roots(red, tol, max_iter)
        omega = red.poles[origin] + tau
        anchor, offset = red.poles[origin], tau
    else:
        origin = tau = None
        omega, w = np.array([red.alpha]), np.array([1.0])
        anchor, offset = omega, np.zeros(1)
    defl_freqs = []
    for _, k, idx in red.deflated:
        # a merged group keeps its first mode coupled; the others decouple
        kept = idx if k is None else idx[1:]
        defl_freqs.extend(float(h.bath_freqs[j]) for j in kept)
    eig = np.concatenate([omega, defl_freqs])
    wts = np.concatenate([w, np.zeros(len(defl_freqs))])
    anchor = np.concatenate([anchor, defl_freqs])
    offset = np.concatenate([offset, np.zeros(len(defl_freqs))])
    order = np.argsort(eig, kind="stable")

    full = None
    if vectors:
        full = np.zeros((n, n))
        col = 0
        if tau is not None:
            delta = red.poles[None, :] - red.poles[origin][:, None]
            comp = red.z[None, :] / (tau[:, None] - delta)   # z_i / (omega - d_i)
            for i, grp in enumerate(red.groups):
                gz = h.couplings[grp]
                # spread the merged coupling back over the original modes
                full[np.array(grp) + 1, :omega.size] = (
                    (gz / red.z[i])[:, None] * comp[:, i][None, :])
            full[0, :omega.size] = 1.0
            full[:, :omega.size] *= np.sqrt(w)[None, :]
            col = omega.size
        else:
            full[0, 0] = 1.0
            col = 1
        for _, k, idx in red.deflated:
            if k is None:
                full[idx[0] + 1, col] = 1.0
                col += 1
            else:
                gz = h.couplings[idx]
                basis = _complement_basis(gz / np.linalg.norm(gz))
                full[np.ix_(np.array(idx) + 1, np.arange(col, col + basis.shape[1]))] = basis
                col += basis.shape[1]
        full = full[:, order]
    return SpectralDecomposition(eig[order], wts[order], full, anchor[order], offset[order])


def analytic_eigenvector(h: ArrowheadHamiltonian, omega: float) -> np.ndarray:
    """Normalized ``(1, g_2/(omega - v_2), ..., g_N/(omega - v_N))``."""
    diff = omega - h.bath_freqs
    active = h.couplings != 0
    if np.any(active & (np.abs(diff) <= 4 * EPS * np.maximum(abs(omega), h.bath_freqs))):
        raise PoleHit(f"omega={omega!r} coincides with a coupled bath frequency")
    u = np.empty(h.size)
    u[0] = 1.0
    u[1:] = np.where(active, h.couplings / np.where(active, diff, 1.0), 0.0)
    return u / np.linalg.norm(u)


# -- dense Jacobi oracle -----------------------------------------------------------

def _round_robin(n: int):
    """Disjoint index pairings covering every pair once (circle method)."""
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        pairs = [(players[i], players[m - 1 - i]) for i in range(m // 2)]
        pairs = [(p, q) for p, q in pairs if p < n and q < n]
        rounds.append((np.array([p for p, _ in pairs]), np.array([q for _, q in pairs])))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def jacobi_eigh(a, tol: float = 1e-13, max_sweeps: int = 60):
    """Eigen-decomposition of a real symmetric matrix by cyclic Jacobi.

    Each round applies a set of disjoint rotations at once (round-robin
    ordering), which keeps the inner loop in numpy.

    Returns
    -------
    eigenvalues : ndarray
        Ascending.
    vectors : ndarray
        Orthogonal, columns aligned with ``eigenvalues``; each column's sign
        is fixed so its first nonzero-dominated entry (row 0, else the
        largest-magnitude entry) is positive.
    """
    a = np.array(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    n = a.shape[0]
    if n == 0:
        raise DimensionMismatch("empty matrix")
    if n > DENSE_SIZE_LIMIT:
        raise SizeLimit(f"dense solve limited to N <= {DENSE_SIZE_LIMIT}, got {n}")
    if not np.allclose(a, a.T, rtol=0, atol=4 * EPS * np.abs(a).max()):
        raise ValueError("matrix is not symmetric")
    a = 0.5 * (a + a.T)
    vt = np.eye(n)   # transpose of the accumulated rotations
    norm = np.linalg.norm(a)
    rounds = _round_robin(n) if n > 1 else []
    for _ in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off <= tol * norm:
            break
        # rotations below this size cannot matter at the requested tolerance
        skip = tol * norm / n
        for P, Q in rounds:
            apq = a[P, Q]
            nz = np.abs(apq) > skip
            if not nz.any():
                continue
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                theta = (a[Q, Q] - a[P, P]) / (2 * apq)
                t = np.where(theta >= 0, 1.0, -1.0) / (np.abs(theta) + np.sqrt(1 + theta**2))
            t = np.where(nz & np.isfinite(t), t, 0.0)
            c = 1.0 / np.sqrt(1 + t * t)
            s = t * c
            c, s = c[:, None], s[:, None]
            # J^T A J through row rotations only: the result is symmetric, so
            # rotating the rows of (J^T A)^T again gives J^T A J
            for _ in range(2):
                ap, aq = a[P], a[Q]
                a[P], a[Q] = c * ap - s * aq, s * ap + c * aq
                a = np.ascontiguousarray(a.T)
            a[P[nz], Q[nz]] = 0.0
            a[Q[nz], P[nz]] = 0.0
            vp, vq = vt[P], vt[Q]
            vt[P], vt[Q] = c * vp - s * vq, s * vp + c * vq
    else:
        raise ConvergenceError(f"Jacobi did not converge in {max_sweeps} sweeps")
    eig = np.diag(a).copy()
    order = np.argsort(eig, kind="stable")
    eig, v = eig[order], vt.T[:, order].copy()
    for k in range(n):
        pivot = v[0, k] if abs(v[0, k]) > 1e3 * EPS else v[np.argmax(np.abs(v[:, k])), k]
        if pivot < 0:
            v[:, k] = -v[:, k]
    return eig, v


def solve_dense(h: Union[ArrowheadHamiltonian, np.ndarray],
                tol: float = 1e-13) -> SpectralDecomposition:
    """Full decomposition ``M^T H M = diag(omega)`` through :func:`jacobi_eigh`.

    Accepts an :class:`ArrowheadHamiltonian` or any dense symmetric matrix
    (a 1x1 matrix is the system without a bath).
    """
    mat = h.matrix() if isinstance(h, ArrowheadHamiltonian) else np.atleast_2d(h)
    if mat.shape[0] > DENSE_SIZE_LIMIT:
        raise SizeLimit(f"dense solve limited to N <= {DENSE_SIZE_LIMIT}, "
                        f"got {mat.shape[0]}")
    eig, v = jacobi_eigh(mat, tol=tol)
    return SpectralDecomposition(eig, v[0] ** 2, v)


def spectrum_table(dec: SpectralDecomposition) -> tuple[list[str], list[tuple]]:
    """Rows ``(k, omega_k, weight_k)`` with 1-based k."""
    rows = [(k + 1, float(w), float(p))
            for k, (w, p) in enumerate(zip(dec.eigenvalues, dec.weights))]
    return ["k", "omega_k", "weight_k"], rows
