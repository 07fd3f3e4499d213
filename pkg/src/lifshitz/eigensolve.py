"""Sturm-sequence eigenvalue counts and bisection for symmetric tridiagonal matrices."""

from __future__ import annotations

import math

import numpy as np

from .discretize import TridiagonalOperator

EPS = np.finfo(float).eps
MAX_BISECTION_STEPS = 200
DENSE_MAX_N = 512


class ConvergenceError(RuntimeError):
    """Raised when bisection or the QL oracle fails to converge."""


def _gershgorin(diags: np.ndarray, offdiags: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    r = np.zeros_like(diags)
    a = np.abs(offdiags)
    r[..., :-1] += a
    r[..., 1:] += a
    return np.min(diags - r, axis=-1), np.max(diags + r, axis=-1)


def sturm_counts(diags, offdiags, energies) -> np.ndarray:
    """Number of eigenvalues ``<= E`` for a batch of tridiagonal matrices.

    ``diags`` has shape ``(B, n)``, ``offdiags`` shape ``(B, n-1)`` or ``(n-1,)``
    and ``energies`` shape ``(k,)`` (shared) or ``(B, k)``.  Returns ``(B, k)``
    integer counts.  Pivots smaller than ``eps * ||T||`` are replaced by a
    signed ``eps * ||T||``; exact zeros count as negative, so an eigenvalue
    equal to ``E`` is counted.
    """
    D = np.atleast_2d(np.asarray(diags, dtype=float))
    B, n = D.shape
    off = np.broadcast_to(np.asarray(offdiags, dtype=float), (B, n - 1))
    E = np.asarray(energies, dtype=float)
    E = np.broadcast_to(E if E.ndim == 2 else E[None, :], (B, E.shape[-1]))
    lo, hi = _gershgorin(D, off)
    piv = (EPS * np.maximum(np.maximum(np.abs(lo), np.abs(hi)), 1.0))[:, None]
    off2 = off * off
    pivb = np.broadcast_to(piv, E.shape)

    def guard(q):
        small = np.abs(q) < piv
        if small.any():
            q[small] = np.where(q[small] > 0, pivb[small], -pivb[small])

    # shifted diagonals -E are shared by all steps; q is updated in place
    q = D[:, :1] - E
    guard(q)
    count = (q < 0).astype(np.int64)
    tmp = np.empty_like(q)
    for i in range(1, n):
        np.divide(off2[:, i - 1 : i], q, out=tmp)
        np.subtract(D[:, i : i + 1], E, out=q)
        q -= tmp
        guard(q)
        count += q < 0
    return count


def count_leq(T: TridiagonalOperator, E):
    """Number of eigenvalues of ``T`` that are ``<= E`` (scalar or array ``E``)."""
    E_arr = np.atleast_1d(np.asarray(E, dtype=float))
    counts = sturm_counts(T.diag[None, :], T.offdiag, E_arr.reshape(-1))[0].reshape(E_arr.shape)
    return int(counts[0]) if np.ndim(E) == 0 else counts


def default_tol(norm: float) -> float:
    return 1e-10 * max(1.0, norm)


def smallest_eigenvalues_batch(diags, offdiags, k: int = 1, tol: float | None = None) -> np.ndarray:
    """Bisection for the ``k`` lowest eigenvalues of each matrix in a batch.

    Returns an array ``(B, k)`` of bracket midpoints with bracket width ``<= tol``.
    """
    D = np.atleast_2d(np.asarray(diags, dtype=float))
    B, n = D.shape
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n = {n}, got k = {k}")
    off = np.broadcast_to(np.asarray(offdiags, dtype=float), (B, n - 1))
    glo, ghi = _gershgorin(D, off)
    if tol is None:
        tol = default_tol(float(np.max(np.maximum(np.abs(glo), np.abs(ghi)))))
    if tol <= 0:
        raise ValueError("tol must be positive")
    lo = np.repeat(glo[:, None], k, axis=1) - tol
    hi = np.repeat(ghi[:, None], k, axis=1) + tol
    target = np.arange(1, k + 1)[None, :]
    for _ in range(MAX_BISECTION_STEPS):
        width = hi - lo
        if np.all(width <= tol):
            return 0.5 * (lo + hi)
        mid = 0.5 * (lo + hi)
        stalled = (mid <= lo) | (mid >= hi)
        if np.all(stalled | (width <= tol)):
            # floating-point resolution reached before tol
            return 0.5 * (lo + hi)
        c = sturm_counts(D, off, mid)
        below = c >= target
        hi = np.where(below, mid, hi)
        lo = np.where(below, lo, mid)
    raise ConvergenceError(f"bisection did not reach tol={tol} in {MAX_BISECTION_STEPS} steps")


def smallest_eigenvalues(T: TridiagonalOperator, k: int = 1, tol: float | None = None) -> np.ndarray:
    if tol is None:
        tol = default_tol(T.norm())
    return smallest_eigenvalues_batch(T.diag[None, :], T.offdiag, k, tol)[0]


def lowest_eigenvalue(T: TridiagonalOperator, tol: float | None = None) -> float:
    return float(smallest_eigenvalues(T, 1, tol)[0])


def dense_oracle(T: TridiagonalOperator) -> np.ndarray:
    """All eigenvalues by the implicit-shift QL iteration (test oracle).

    Plain Python floats; independent of the Sturm code path.
    """
    n = T.n
    if n > DENSE_MAX_N:
        raise ValueError(f"dense oracle limited to n <= {DENSE_MAX_N}, got {n}")
    d = [float(v) for v in T.diag]
    e = [float(v) for v in T.offdiag] + [0.0]
    for l in range(n):
        iterations = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= EPS * dd:
                    break
                m += 1
            if m == l:
                break
            iterations += 1
            if iterations > 60:
                raise ConvergenceError("QL iteration did not converge")
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = c = 1.0
            p = 0.0
            i = m - 1
            deflated = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    deflated = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                i -= 1
            if deflated:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return np.sort(np.array(d))
