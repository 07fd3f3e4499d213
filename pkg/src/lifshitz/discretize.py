"""Cell-centered Neumann finite differences on [-L/2, L/2] and free Neumann spectra."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .potentials import RandomPotential, cell_averages

DEFAULT_M = 32


@dataclass(frozen=True)
class TridiagonalOperator:
    """Symmetric tridiagonal matrix ``diag`` / ``offdiag`` on a mesh of width ``h``."""

    diag: np.ndarray = field(repr=False)
    offdiag: np.ndarray = field(repr=False)
    h: float
    L: float
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        d = np.asarray(self.diag, dtype=float)
        e = np.asarray(self.offdiag, dtype=float)
        if d.ndim != 1 or e.shape != (max(len(d) - 1, 0),):
            raise ValueError(f"offdiag must have length n-1, got {e.shape} for n={len(d)}")
        d.setflags(write=False)
        e.setflags(write=False)
        object.__setattr__(self, "diag", d)
        object.__setattr__(self, "offdiag", e)

    @property
    def n(self) -> int:
        return len(self.diag)

    def gershgorin(self) -> tuple[float, float]:
        r = np.zeros(self.n)
        r[:-1] += np.abs(self.offdiag)
        r[1:] += np.abs(self.offdiag)
        return float(np.min(self.diag - r)), float(np.max(self.diag + r))

    def norm(self) -> float:
        lo, hi = self.gershgorin()
        return max(abs(lo), abs(hi))

    def matvec(self, v):
        v = np.asarray(v, dtype=float)
        out = self.diag * v
        out[:-1] += self.offdiag * v[1:]
        out[1:] += self.offdiag * v[:-1]
        return out

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["i", "diag", "offdiag"])
            for i, d in enumerate(self.diag):
                w.writerow([i, repr(float(d)), repr(float(self.offdiag[i])) if i < self.n - 1 else ""])


def laplacian_diagonals(n: int, h: float) -> tuple[np.ndarray, np.ndarray]:
    """Diagonals of the Neumann ``-d^2/dx^2`` stencil on ``n`` cell-centered nodes."""
    d = np.full(n, 2.0 / h**2)
    d[0] = d[-1] = 1.0 / h**2
    return d, np.full(n - 1, -1.0 / h**2)


def assemble_from_averages(averages, L: float, m: int, shift: float = 0.0, meta=None) -> TridiagonalOperator:
    averages = np.asarray(averages, dtype=float)
    n = len(averages)
    if n < 2:
        raise ValueError(f"operator dimension n = {n} < 2")
    h = 1.0 / m
    d, e = laplacian_diagonals(n, h)
    return TridiagonalOperator(d + averages + shift, e, h=h, L=L, meta=dict(meta or {}, m=m, shift=shift))


def assemble(W: RandomPotential, m: int = DEFAULT_M, shift: float = 0.0) -> TridiagonalOperator:
    if m < 2:
        raise ValueError(f"m must be >= 2, got {m}")
    meta = {"model": W.model.kind, "seed": W.realization.seed}
    return assemble_from_averages(cell_averages(W, m), W.L, m, shift, meta)


def free_operator(L: int, m: int = DEFAULT_M, shift: float = 0.0) -> TridiagonalOperator:
    return assemble_from_averages(np.zeros(L * m), L, m, shift, {"model": "free"})


def free_discrete_spectrum(n: int, h: float) -> np.ndarray:
    """Closed-form spectrum ``2(1 - cos(pi j / n)) / h^2`` of the free stencil."""
    j = np.arange(n)
    return 2.0 * (1.0 - np.cos(np.pi * j / n)) / h**2


def free_neumann_spectrum_continuum(L: float, j_max: int) -> np.ndarray:
    if L <= 0:
        raise ValueError(f"L must be positive, got {L}")
    return (np.pi * np.arange(j_max + 1) / L) ** 2


def free_neumann_count(L: float, E: float) -> int:
    """Number of Neumann eigenvalues ``(pi j / L)^2 <= E`` of ``-d^2/dx^2`` on a length-``L`` box."""
    if E < 0:
        return 0
    j = math.floor(L * math.sqrt(E) / math.pi)
    # guard the floor against rounding right at an eigenvalue
    while (math.pi * (j + 1) / L) ** 2 <= E:
        j += 1
    while j > 0 and (math.pi * j / L) ** 2 > E:
        j -= 1
    return j + 1
