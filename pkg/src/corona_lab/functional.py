"""The integral functional split into three terms, checked against a boundary integral.

For xi = Pi h the functional int d[<dbar Phi f g, xi>] dmu splits as I + II + III.
By Green's formula it also equals the boundary integral of <Phi f g, h>
(h(0) = 0 kills the value at the origin), which is the independent oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .analytic import DELTA_MIN, AnalyticPoly, PolyRow
from .carleson import CoanalyticVector, boundary_norm2, xi_fn, xi_sample
from .errors import LabError
from .fields import compute_fields, zeros_of
from .quadrature import DEFAULT_EPSILONS, DEFAULT_STEP, BoundaryQuadrature, DiscQuadrature, numeric_wirtinger, puncture_mask

E = math.e
BOUND_I = E * math.sqrt(4 * E + 2)
BOUND_II = 2 * math.sqrt(2) * E
BOUND_III = math.sqrt(2 * E)


def total_bound_constant() -> tuple[float, float]:
    """(C0, 1 + C0): the functional bound and the resulting solution-norm bound."""
    c0 = BOUND_I + BOUND_II + BOUND_III
    return c0, 1.0 + c0


def _inner(a, b):
    return np.sum(a * np.conj(b), axis=-1)


def _punctured(q: DiscQuadrature, integrand: np.ndarray, zeros, epsilons) -> tuple[complex, list]:
    trace = []
    for eps in sorted(epsilons, reverse=True):
        keep = puncture_mask(q.nodes, zeros, eps)
        trace.append((float(eps), complex(np.dot(q.weights[keep], integrand[keep]))))
    return trace[-1][1], trace


class _Setup:
    def __init__(self, F, f, g, h, q, step, delta_min):
        if f.is_zero:
            raise LabError("ZERO_F", "f must not vanish identically")
        self.z = q.nodes
        self.fl = compute_fields(F, f, self.z, delta_min)
        self.xi = np.einsum("sij,sj->si", self.fl.pi, h(self.z))
        self.g = g(self.z)
        self.F, self.f, self.h, self.step, self.delta_min = F, f, h, step, delta_min


def _term_I_integrand(s: _Setup) -> np.ndarray:
    fl = s.fl
    # scalar (F' f - F f'/2) F*, times the column F*
    c = _inner(fl.F_deriv * fl.f_val[:, None] - 0.5 * fl.F_val * fl.f_deriv[:, None], fl.F_val)
    d_pi_xi = np.einsum("sij,sj->si", fl.d_pi, s.xi)
    return c * _inner(np.conj(fl.F_val), d_pi_xi) / fl.norm2**2 * s.g


def _term_II_integrand(s: _Setup) -> np.ndarray:
    fl = s.fl
    _, dbar_xi = numeric_wirtinger(xi_fn(s.F, s.h, s.delta_min), s.z, s.step)
    v = 0.5 * np.conj(fl.f_deriv)[:, None] * s.xi + np.conj(fl.f_val)[:, None] * dbar_xi
    return _inner(fl.dbar_phi, v) * s.g


def _term_III_integrand(s: _Setup, g: AnalyticPoly) -> np.ndarray:
    fl = s.fl
    return _inner(fl.dbar_phi, s.xi) * fl.f_val * g.derivative()(s.z)


def term_I(F, f, g, h, q, epsilons=DEFAULT_EPSILONS, step=DEFAULT_STEP, delta_min=DELTA_MIN):
    s = _Setup(F, f, g, h, q, step, delta_min)
    return _punctured(q, _term_I_integrand(s), zeros_of(f, step), epsilons)


def term_II(F, f, g, h, q, epsilons=DEFAULT_EPSILONS, step=DEFAULT_STEP, delta_min=DELTA_MIN):
    s = _Setup(F, f, g, h, q, step, delta_min)
    return _punctured(q, _term_II_integrand(s), zeros_of(f, step), epsilons)


def term_III(F, f, g, h, q, delta_min=DELTA_MIN) -> complex:
    s = _Setup(F, f, g, h, q, DEFAULT_STEP, delta_min)
    return complex(np.dot(q.weights, _term_III_integrand(s, g)))


def functional_oracle(F: PolyRow, f: AnalyticPoly, g: AnalyticPoly, h: CoanalyticVector, b: BoundaryQuadrature, delta_min=DELTA_MIN) -> complex:
    """Boundary mean of <Phi f g, h>."""
    fl = compute_fields(F, f, b.nodes, delta_min)
    g0 = fl.phi * (fl.f_val * g(b.nodes))[:, None]
    return complex(np.dot(b.weights, _inner(g0, h(b.nodes))))


@dataclass
class TermBreakdown:
    term_I: complex
    term_II: complex
    term_III: complex
    xi_norm: float
    g_norm: float
    oracle: complex
    traces: dict = field(default_factory=dict)
    label: str = ""

    @property
    def total(self) -> complex:
        return self.term_I + self.term_II + self.term_III

    @property
    def bound_I(self) -> float:
        return BOUND_I * self.xi_norm * self.g_norm

    @property
    def bound_II(self) -> float:
        return BOUND_II * self.xi_norm * self.g_norm

    @property
    def bound_III(self) -> float:
        return BOUND_III * self.xi_norm * self.g_norm

    @property
    def oracle_error(self) -> float:
        return abs(self.total - self.oracle)

    def bounds_hold(self, slack: float = 0.05, floor: float = 1e-14) -> dict:
        return {
            "I": abs(self.term_I) <= self.bound_I * (1 + slack) + floor,
            "II": abs(self.term_II) <= self.bound_II * (1 + slack) + floor,
            "III": abs(self.term_III) <= self.bound_III * (1 + slack) + floor,
            "total": abs(self.total) <= total_bound_constant()[0] * self.xi_norm * self.g_norm * (1 + slack) + floor,
        }

    def to_dict(self) -> dict:
        c = lambda x: [x.real, x.imag]
        return {
            "label": self.label,
            "I": c(self.term_I),
            "II": c(self.term_II),
            "III": c(self.term_III),
            "total": c(self.total),
            "oracle": c(self.oracle),
            "oracle_error": self.oracle_error,
            "xi_norm": self.xi_norm,
            "g_norm": self.g_norm,
            "bound_I": self.bound_I,
            "bound_II": self.bound_II,
            "bound_III": self.bound_III,
            "traces": {k: [[e, c(v)] for e, v in t] for k, t in self.traces.items()},
        }


def decompose(
    F: PolyRow,
    f: AnalyticPoly,
    g: AnalyticPoly,
    h: CoanalyticVector,
    q: DiscQuadrature,
    b: BoundaryQuadrature,
    epsilons: Sequence[float] = DEFAULT_EPSILONS,
    step: float = DEFAULT_STEP,
    delta_min: float = DELTA_MIN,
    label: str = "",
) -> TermBreakdown:
    """All three terms, the oracle and the norms, sharing one field evaluation.

    The per-term bounds carry a factor ||g||_2: they are stated for
    ||g||_2 <= 1 and every term is linear in g.
    """
    s = _Setup(F, f, g, h, q, step, delta_min)
    zeros = zeros_of(f, step)
    t1, tr1 = _punctured(q, _term_I_integrand(s), zeros, epsilons)
    t2, tr2 = _punctured(q, _term_II_integrand(s), zeros, epsilons)
    t3 = complex(np.dot(q.weights, _term_III_integrand(s, g)))
    xi_norm = math.sqrt(boundary_norm2(xi_sample(F, h, b.nodes, delta_min), b))
    g_norm = math.sqrt(boundary_norm2(g(b.nodes), b))
    oracle = functional_oracle(F, f, g, h, b, delta_min)
    return TermBreakdown(t1, t2, t3, xi_norm, g_norm, oracle, {"I": tr1, "II": tr2}, label)
