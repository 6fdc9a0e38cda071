"""Finite sections of multiplication operators on H^2 and the solver for F G = f g.

Sections act on coefficient vectors of length N + 1 (monomial basis, so the
Euclidean norm is the H^2 norm).  Products are formed exactly and then
compressed: everything above degree N is discarded, i.e. the section of M_p is
P_N M_p P_N.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .analytic import AnalyticPoly, PolyRow
from .errors import LabError

PINV_RCOND = 1e-12
SOLVE_TOL = 1e-8
PSD_TOL = 1e-10
COMPRESSION = "P_N M P_N (coefficients above degree N discarded)"


@dataclass(frozen=True, eq=False)
class FiniteSectionOp:
    matrix: np.ndarray
    degrees: tuple  # (input N, output N)


def _padded(p: AnalyticPoly, N: int) -> np.ndarray:
    c = np.zeros(N + 1, dtype=complex)
    c[: p.coeffs.size] = p.coeffs[: N + 1]
    return c


def toeplitz_section(p: AnalyticPoly, N: int) -> FiniteSectionOp:
    """Lower-triangular Toeplitz matrix with entry (i, j) = coeff_{i-j}(p)."""
    if N < max(p.degree, 0):
        raise LabError("DEGREE_TOO_SMALL", f"N = {N} < deg p = {p.degree}")
    c = _padded(p, N)
    i, j = np.indices((N + 1, N + 1))
    m = np.where(i >= j, c[np.clip(i - j, 0, N)], 0)
    return FiniteSectionOp(m, (N, N))


def row_section(F: PolyRow, N: int) -> FiniteSectionOp:
    return FiniteSectionOp(np.hstack([toeplitz_section(e, N).matrix for e in F.entries]), (N, N))


def coefficient_vector(p: AnalyticPoly, N: int) -> np.ndarray:
    """Coefficients of p compressed to degree N."""
    return _padded(p, N)


@dataclass
class Solution:
    G: np.ndarray  # (n, N + 1)
    residual: float
    norm: float
    g_norm: float
    N: int

    @property
    def ratio(self) -> float:
        return self.norm / self.g_norm if self.g_norm > 0 else 0.0

    def polys(self) -> list[AnalyticPoly]:
        return [AnalyticPoly(row) for row in self.G]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "entry", "re", "im"])
        for entry, row in enumerate(self.G):
            for k, c in enumerate(row):
                w.writerow([k, entry, repr(float(c.real)), repr(float(c.imag))])
        return buf.getvalue()


def minimal_norm_solve(F: PolyRow, f: AnalyticPoly, g: AnalyticPoly, N: int, tol: float = SOLVE_TOL) -> Solution:
    """Minimal-norm least-squares G with (P_N M_F P_N) G = P_N (f g).

    Raises RANK_DEFICIENT if the residual exceeds ``tol * ||f g||``.
    """
    if N < max(f.degree, 0) + max(g.degree, 0):
        raise LabError("DEGREE_TOO_SMALL", f"N = {N} < deg f + deg g")
    A = row_section(F, N).matrix
    rhs = coefficient_vector(f * g, N)
    G = np.linalg.pinv(A, rcond=PINV_RCOND) @ rhs
    residual = float(np.linalg.norm(A @ G - rhs))
    scale = float(np.linalg.norm(rhs))
    if residual > tol * max(scale, 1e-300) and scale > 0:
        raise LabError("RANK_DEFICIENT", f"residual {residual:.3g} at N = {N}")
    return Solution(
        G=G.reshape(F.n, N + 1),
        residual=residual,
        norm=float(np.linalg.norm(G)),
        g_norm=float(np.linalg.norm(g.coeffs)),
        N=N,
    )


def _min_eig(H: np.ndarray) -> float:
    H = 0.5 * (H + H.conj().T)
    return float(np.linalg.eigvalsh(H)[0])


@dataclass
class PsdResult:
    min_eigenvalue: float
    tolerance: float
    C: float

    @property
    def passed(self) -> bool:
        return self.min_eigenvalue >= -self.tolerance

    def to_dict(self) -> dict:
        return {"min_eig": self.min_eigenvalue, "tolerance": self.tolerance, "C": self.C, "pass": self.passed}


def leech_psd_check(F: PolyRow, f: AnalyticPoly, C: float, N: int, psd_tol: float = PSD_TOL) -> PsdResult:
    """Smallest eigenvalue of C^2 M_F M_F^* - M_f M_f^* on the degree-N section.

    The tolerance is ``psd_tol`` times the mean diagonal of C^2 M_F M_F^*
    (floored at 1).
    """
    if not C > 0:
        raise LabError("BAD_CONSTANT", "C must be positive")
    MF = row_section(F, N).matrix
    Mf = toeplitz_section(f, N).matrix
    A = C**2 * (MF @ MF.conj().T)
    scale = max(1.0, float(np.real(np.trace(A))) / (N + 1))
    return PsdResult(_min_eig(A - Mf @ Mf.conj().T), psd_tol * scale, C)


PICK_RADII = (0.3, 0.6, 0.8, 0.9)
PICK_ANGLES = 8


def pick_node_pool() -> np.ndarray:
    theta = 2 * np.pi * np.arange(PICK_ANGLES) / PICK_ANGLES
    return np.concatenate([r * np.exp(1j * theta) for r in PICK_RADII])


def pick_matrix(F: PolyRow, f: AnalyticPoly, C: float, nodes: Sequence[complex]) -> np.ndarray:
    z = np.asarray(nodes, dtype=complex)
    Fv = F(z)
    fv = f(z)
    kern = 1.0 / (1.0 - z[:, None] * np.conj(z)[None, :])
    return (C**2 * (Fv @ Fv.conj().T) - fv[:, None] * np.conj(fv)[None, :]) * kern


def pick_matrix_check(F: PolyRow, f: AnalyticPoly, C: float, nodes: Sequence[complex] | None = None, psd_tol: float = PSD_TOL) -> PsdResult:
    z = pick_node_pool() if nodes is None else np.asarray(nodes, dtype=complex)
    if np.any(np.abs(z) >= 1):
        raise LabError("NODES_OUTSIDE_DISC", "Pick nodes must lie in the open disc")
    if np.unique(np.round(z, 14)).size != z.size:
        raise LabError("DUPLICATE_NODES", "Pick nodes must be distinct")
    M = pick_matrix(F, f, C, z)
    scale = max(1.0, float(np.real(np.trace(M))) / z.size)
    return PsdResult(_min_eig(M), psd_tol * scale, C)


def leech_operator_constant(F: PolyRow, f: AnalyticPoly, N: int) -> float:
    """Smallest C for which the degree-N Leech inequality holds.

    Equals the largest singular value of (M_F M_F^*)^{-1/2} M_f on the section,
    i.e. the worst ratio ||G|| / ||g|| over all g of degree <= N.
    """
    MF = row_section(F, N).matrix
    Mf = toeplitz_section(f, N).matrix
    X = np.linalg.pinv(MF, rcond=PINV_RCOND) @ Mf
    return float(np.linalg.norm(X, 2))


def norm_bound_experiment(F: PolyRow, f: AnalyticPoly, g: AnalyticPoly, N_sequence: Sequence[int]) -> list[dict]:
    """Table of (N, residual, ||G||/||g||) rows, one per section degree."""
    rows = []
    for N in N_sequence:
        sol = minimal_norm_solve(F, f, g, N)
        rows.append({"N": N, "residual": sol.residual, "ratio": sol.ratio, "norm": sol.norm})
    return rows


def ratios_nondecreasing(rows: list[dict], rtol: float = 1e-10) -> bool:
    r = [row["ratio"] for row in rows]
    return all(b >= a * (1 - rtol) - 1e-15 for a, b in zip(r, r[1:]))


def table_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    if not rows:
        return ""
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    return buf.getvalue()
