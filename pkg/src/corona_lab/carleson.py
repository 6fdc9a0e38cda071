"""Carleson-type integrals against mu and their explicit constants."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .analytic import DELTA_MIN, AnalyticPoly, PolyRow, PsiSpec, phi_eval, psi_eval
from .errors import LabError
from .fields import compute_fields, d_pi_norm2_formula, measure_density, pi_field, zeros_of
from .quadrature import (
    DEFAULT_EPSILONS,
    DEFAULT_STEP,
    BoundaryQuadrature,
    DiscQuadrature,
    numeric_laplacian,
    numeric_wirtinger,
    puncture_mask,
)

E = math.e
DEFAULT_SLACK = 0.05
# absolute floor so that exact zeros (n = 1, h = 0) are not decided by rounding
ABS_FLOOR = 1e-14


@dataclass(frozen=True, eq=False)
class CoanalyticVector:
    """h(z) = sum_{k>=1} c_k conj(z)**k with n-vector coefficients c_k.

    ``conj_coeffs[k-1]`` holds c_k, so h(0) = 0 by construction.
    """

    conj_coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.conj_coeffs, dtype=complex)
        if c.ndim != 2:
            raise ValueError("conj_coeffs must have shape (K, n)")
        object.__setattr__(self, "conj_coeffs", c)

    @property
    def n(self) -> int:
        return self.conj_coeffs.shape[1]

    @classmethod
    def basis(cls, n: int, j: int, k: int, K: int | None = None) -> "CoanalyticVector":
        """e_j * conj(z)**k."""
        c = np.zeros((max(K or k, k), n), dtype=complex)
        c[k - 1, j] = 1.0
        return cls(c)

    @classmethod
    def zero(cls, n: int) -> "CoanalyticVector":
        return cls(np.zeros((1, n), dtype=complex))

    def __call__(self, z) -> np.ndarray:
        zb = np.conj(np.asarray(z, dtype=complex))
        out = np.zeros(zb.shape + (self.n,), dtype=complex)
        for c in self.conj_coeffs[::-1]:
            out = (out + c) * zb[..., None]
        return out

    def __add__(self, other: "CoanalyticVector") -> "CoanalyticVector":
        K = max(len(self.conj_coeffs), len(other.conj_coeffs))
        c = np.zeros((K, self.n), dtype=complex)
        c[: len(self.conj_coeffs)] += self.conj_coeffs
        c[: len(other.conj_coeffs)] += other.conj_coeffs
        return CoanalyticVector(c)

    def __mul__(self, lam: complex) -> "CoanalyticVector":
        return CoanalyticVector(self.conj_coeffs * lam)

    __rmul__ = __mul__

    @property
    def norm2(self) -> float:
        return float(np.sum(np.abs(self.conj_coeffs) ** 2))


def basis_family(n: int, K: int = 8) -> list[tuple[str, CoanalyticVector]]:
    return [(f"e{j}*zbar^{k}", CoanalyticVector.basis(n, j, k)) for j in range(n) for k in range(1, K + 1)]


@dataclass
class BoundReport:
    lhs: float
    rhs_constant: float
    norm_factor: float
    slack: float = DEFAULT_SLACK
    epsilon_trace: list | None = None
    label: str = ""
    extras: dict = field(default_factory=dict)

    @property
    def bound(self) -> float:
        return self.rhs_constant * self.norm_factor

    @property
    def passed(self) -> bool:
        return self.lhs <= self.bound * (1 + self.slack) + ABS_FLOOR

    @property
    def ratio(self) -> float:
        return self.lhs / self.bound if self.bound > 0 else 0.0

    def trace_monotone(self) -> bool:
        """lhs does not decrease as epsilon shrinks (for non-negative integrands)."""
        if not self.epsilon_trace:
            return True
        vals = [v for _, v in sorted(self.epsilon_trace, key=lambda t: -t[0])]
        return all(b >= a - 1e-15 * max(1.0, abs(a)) for a, b in zip(vals, vals[1:]))

    def to_dict(self) -> dict:
        d = {
            "lhs": self.lhs,
            "rhs_constant": self.rhs_constant,
            "norm_factor": self.norm_factor,
            "bound": self.bound,
            "ratio": self.ratio,
            "slack": self.slack,
            "pass": self.passed,
        }
        if self.label:
            d["label"] = self.label
        if self.epsilon_trace is not None:
            d["epsilon_trace"] = [[e, v] for e, v in self.epsilon_trace]
            d["trace_monotone"] = self.trace_monotone()
        d.update(self.extras)
        return d


def boundary_norm2(values: np.ndarray, b: BoundaryQuadrature) -> float:
    """L2(T) norm squared of sampled scalar or vector values."""
    v = np.abs(values) ** 2
    if v.ndim > 1:
        v = v.sum(axis=tuple(range(1, v.ndim)))
    return float(np.dot(b.weights, v))


def xi_sample(F: PolyRow, h: CoanalyticVector, z, delta_min: float = DELTA_MIN) -> np.ndarray:
    """xi = Pi h at the given point(s)."""
    z_arr = np.asarray(z, dtype=complex)
    pi = pi_field(F, z_arr, delta_min)
    return np.einsum("...ij,...j->...i", pi, h(z_arr))


def xi_fn(F: PolyRow, h: CoanalyticVector, delta_min: float = DELTA_MIN) -> Callable:
    return lambda w: xi_sample(F, h, w, delta_min)


def _punctured_trace(q: DiscQuadrature, integrand: np.ndarray, centers, epsilons) -> tuple[float, list]:
    trace = []
    for eps in sorted(epsilons, reverse=True):
        keep = puncture_mask(q.nodes, centers, eps)
        trace.append((float(eps), float(np.real(np.dot(q.weights[keep], integrand[keep])))))
    return trace[-1][1], trace


def lemma_carleson_bound(
    F: PolyRow,
    psi: PsiSpec,
    g: AnalyticPoly,
    q: DiscQuadrature,
    b: BoundaryQuadrature,
    slack: float = DEFAULT_SLACK,
    delta_min: float = DELTA_MIN,
) -> BoundReport:
    """int ||d Pi||^2 psi(log ||F||^-2) |g|^2 dmu against 2e ||g||_2^2."""
    fl = compute_fields(F, None, q.nodes, delta_min)
    weight = psi_eval(psi, np.maximum(-np.log(fl.norm2), 0.0))
    integrand = d_pi_norm2_formula(fl) * weight * np.abs(g(q.nodes)) ** 2
    lhs = float(np.dot(q.weights, integrand))
    return BoundReport(lhs, 2 * E, boundary_norm2(g(b.nodes), b), slack, label="lemma41")


def lemma_dbar_embedding(
    F: PolyRow,
    f: AnalyticPoly,
    psi: PsiSpec,
    h: CoanalyticVector,
    q: DiscQuadrature,
    b: BoundaryQuadrature,
    epsilons: Sequence[float] = DEFAULT_EPSILONS,
    step: float = DEFAULT_STEP,
    slack: float = DEFAULT_SLACK,
    delta_min: float = DELTA_MIN,
) -> tuple[BoundReport, BoundReport]:
    """The two embeddings for xi = Pi h: constants 2e and 4e times ||xi||_2^2.

    The second integrand ||dbar[conj(f^{1/2}) xi]||^2 is evaluated as
    |conj(f') xi / 2 + conj(f) dbar xi|^2 / |f|, with dbar xi by finite
    differences, and punctured around the zeros of f.
    """
    z = q.nodes
    fl = compute_fields(F, f, z, delta_min)
    xi = np.einsum("sij,sj->si", fl.pi, h(z))
    xi_norm2 = boundary_norm2(xi_sample(F, h, b.nodes, delta_min), b)
    xi2 = np.sum(np.abs(xi) ** 2, axis=-1)

    nrm = np.sqrt(fl.norm2)
    phi = phi_eval(psi, np.minimum(nrm, 1.0))
    first = np.dot(q.weights, phi * d_pi_norm2_formula(fl) * xi2)
    rep_a = BoundReport(float(first), 2 * E, xi_norm2, slack, label="lemma42a")

    _, dbar_xi = numeric_wirtinger(xi_fn(F, h, delta_min), z, step)
    v = 0.5 * np.conj(fl.f_deriv)[:, None] * xi + np.conj(fl.f_val)[:, None] * dbar_xi
    num = np.sum(np.abs(v) ** 2, axis=-1)
    af = np.abs(fl.f_val)
    with np.errstate(divide="ignore", invalid="ignore"):
        integrand = np.where(num == 0, 0.0, num / af)
    zeros = zeros_of(f, step) if not f.is_zero else []
    lhs, trace = _punctured_trace(q, integrand, zeros, epsilons)
    rep_b = BoundReport(lhs, 4 * E, xi_norm2, slack, epsilon_trace=trace, label="lemma42b")
    return rep_a, rep_b


def uchiyama_bound(
    alpha: Callable,
    zeros: Sequence[complex],
    g: AnalyticPoly,
    q: DiscQuadrature,
    b: BoundaryQuadrature,
    epsilons: Sequence[float] = DEFAULT_EPSILONS,
    step: float = DEFAULT_STEP,
    slack: float = DEFAULT_SLACK,
) -> BoundReport:
    """int_{Omega_eps} e^alpha Lap~alpha |g|^2 dmu against e ||g||_2^2.

    Lap~alpha is signed; nothing is made absolute.
    """
    z = q.nodes
    a = np.asarray(alpha(z), dtype=float)
    if np.any(a < -1e-9) or np.any(a > 1 + 1e-9):
        raise LabError("ALPHA_RANGE", f"alpha spans [{a.min():.3g}, {a.max():.3g}]")
    lap = np.real(numeric_laplacian(alpha, z, step))
    integrand = np.exp(a) * lap * np.abs(g(z)) ** 2
    lhs, trace = _punctured_trace(q, integrand, zeros, epsilons)
    return BoundReport(lhs, E, boundary_norm2(g(b.nodes), b), slack, epsilon_trace=trace, label="uchiyama")


def main_carleson_bound(
    F: PolyRow,
    f: AnalyticPoly,
    g: AnalyticPoly,
    q: DiscQuadrature,
    b: BoundaryQuadrature,
    epsilons: Sequence[float] = DEFAULT_EPSILONS,
    step: float = DEFAULT_STEP,
    slack: float = DEFAULT_SLACK,
    delta_min: float = DELTA_MIN,
) -> BoundReport:
    """int |f|^2/||F||^6 |(F f^{-1/2})' F*|^2 |g|^2 dmu against (2e^2 + e) ||g||_2^2."""
    if f.is_zero:
        raise LabError("ZERO_F", "f must not vanish identically")
    fl = compute_fields(F, f, q.nodes, delta_min)
    integrand = measure_density(fl) * np.abs(g(q.nodes)) ** 2
    lhs, trace = _punctured_trace(q, integrand, zeros_of(f, step), epsilons)
    return BoundReport(lhs, 2 * E**2 + E, boundary_norm2(g(b.nodes), b), slack, epsilon_trace=trace, label="main")
