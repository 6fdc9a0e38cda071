"""Polynomial data on the disc, the weights psi/phi, and hypothesis checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.polynomial import polynomial as P
from scipy import integrate

from .errors import LabError

ROOT_TOL = 1e-9
DELTA_MIN = 1e-6
SUP_TOL = 1e-12
MARGIN_TOL = 1e-12


def _as_coeffs(coeffs) -> np.ndarray:
    c = np.atleast_1d(np.asarray(coeffs, dtype=complex))
    if c.ndim != 1:
        raise ValueError("coefficients must be one-dimensional")
    nz = np.flatnonzero(c)
    return c[: nz[-1] + 1].copy() if nz.size else c[:0].copy()


@dataclass(frozen=True, eq=False)
class AnalyticPoly:
    """Analytic polynomial ``sum(coeffs[k] * z**k)``; trailing zeros are trimmed."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = _as_coeffs(self.coeffs)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def constant(cls, c: complex) -> "AnalyticPoly":
        return cls([c])

    @property
    def is_zero(self) -> bool:
        return self.coeffs.size == 0

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1 if not self.is_zero else -1

    def __call__(self, z):
        return eval_poly(self, z)

    def derivative(self) -> "AnalyticPoly":
        return derivative(self)

    def __add__(self, other):
        other = _coerce(other)
        n = max(self.coeffs.size, other.coeffs.size)
        out = np.zeros(n, dtype=complex)
        out[: self.coeffs.size] += self.coeffs
        out[: other.coeffs.size] += other.coeffs
        return AnalyticPoly(out)

    __radd__ = __add__

    def __neg__(self):
        return AnalyticPoly(-self.coeffs)

    def __sub__(self, other):
        return self + (-_coerce(other))

    def __mul__(self, other):
        other = _coerce(other)
        if self.is_zero or other.is_zero:
            return AnalyticPoly([])
        return AnalyticPoly(P.polymul(self.coeffs, other.coeffs))

    __rmul__ = __mul__

    def __pow__(self, m: int):
        out = AnalyticPoly([1.0])
        for _ in range(m):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, AnalyticPoly):
            return NotImplemented
        return self.coeffs.shape == other.coeffs.shape and bool(np.all(self.coeffs == other.coeffs))

    def __repr__(self):
        return f"AnalyticPoly({self.coeffs.tolist()})"


def _coerce(x) -> AnalyticPoly:
    return x if isinstance(x, AnalyticPoly) else AnalyticPoly([x])


def eval_poly(p: AnalyticPoly, z):
    """Horner evaluation; works elementwise on arrays."""
    z = np.asarray(z, dtype=complex)
    if p.is_zero:
        return np.zeros_like(z)
    out = np.full_like(z, p.coeffs[-1])
    for c in p.coeffs[-2::-1]:
        out = out * z + c
    return out


def derivative(p: AnalyticPoly) -> AnalyticPoly:
    if p.degree <= 0:
        return AnalyticPoly([])
    return AnalyticPoly(P.polyder(p.coeffs))


@dataclass(frozen=True, eq=False)
class PolyRow:
    """Row ``F = [f_1, ..., f_n]`` of analytic polynomials."""

    entries: tuple

    def __post_init__(self):
        entries = tuple(_coerce(e) if not isinstance(e, AnalyticPoly) else e for e in self.entries)
        if not entries:
            raise ValueError("a PolyRow needs at least one entry")
        object.__setattr__(self, "entries", entries)

    @classmethod
    def from_coeffs(cls, rows: Sequence) -> "PolyRow":
        return cls(tuple(AnalyticPoly(r) for r in rows))

    @property
    def n(self) -> int:
        return len(self.entries)

    @property
    def degree(self) -> int:
        return max(e.degree for e in self.entries)

    def __call__(self, z) -> np.ndarray:
        """Values with a trailing axis of length n."""
        return np.stack([eval_poly(e, z) for e in self.entries], axis=-1)

    def derivative(self) -> "PolyRow":
        return PolyRow(tuple(derivative(e) for e in self.entries))

    def square_sum(self) -> AnalyticPoly:
        """The analytic polynomial ``sum(f_k**2)`` (no conjugation)."""
        out = AnalyticPoly([])
        for e in self.entries:
            out = out + e * e
        return out

    def scaled(self, c: complex) -> "PolyRow":
        return PolyRow(tuple(e * c for e in self.entries))


def row_norm(F: PolyRow, z):
    """Euclidean norm of the row vector F(z)."""
    return np.sqrt(np.sum(np.abs(F(z)) ** 2, axis=-1))


PSI_KINDS = ("exponential", "normalized-power", "table")


@dataclass(frozen=True)
class PsiSpec:
    """Non-increasing weight psi: [0, inf) -> [0, 1] with integral at most one.

    ``exponential`` is exp(-s), so phi(s) = s**4.  ``normalized-power`` is
    eps / (1 + s)**(1 + eps), which integrates to exactly 1.  ``table`` is a
    piecewise-linear interpolant through (``table_s``, ``table_values``),
    held constant after the last abscissa.
    """

    kind: str = "exponential"
    epsilon: float = 1.0
    table_s: tuple = ()
    table_values: tuple = ()

    def __post_init__(self):
        if self.kind not in PSI_KINDS:
            raise LabError("CONFIG", f"unknown psi kind {self.kind!r}")
        if self.kind == "normalized-power" and not 0 < self.epsilon <= 1:
            # psi(0) = epsilon, so epsilon > 1 leaves [0, 1]
            raise LabError("CONFIG", "normalized-power needs 0 < epsilon <= 1")
        if self.kind == "table":
            s = np.asarray(self.table_s, float)
            v = np.asarray(self.table_values, float)
            if s.size < 2 or s.shape != v.shape:
                raise LabError("CONFIG", "table psi needs matching s/value arrays of length >= 2")
            if s[0] != 0 or np.any(np.diff(s) <= 0):
                raise LabError("CONFIG", "table abscissae must start at 0 and increase")
            if np.any(np.diff(v) > 0) or v.max() > 1 or v.min() < 0:
                raise LabError("CONFIG", "table values must be non-increasing in [0, 1]")
            if v[-1] != 0:
                raise LabError("CONFIG", "table psi must end at 0, otherwise its integral diverges")
            if np.trapezoid(v, s) > 1 + 1e-12:
                raise LabError("CONFIG", "table psi must integrate to at most 1")

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "normalized-power":
            d["epsilon"] = self.epsilon
        if self.kind == "table":
            d["s"] = list(self.table_s)
            d["values"] = list(self.table_values)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PsiSpec":
        kind = d.get("kind", "exponential")
        return cls(
            kind=kind,
            epsilon=float(d.get("epsilon", 1.0)),
            table_s=tuple(d.get("s", ())),
            table_values=tuple(d.get("values", ())),
        )

    def integral(self, upper: float = 100.0) -> tuple[float, float]:
        """Return (integral of psi over [0, upper], bound on the tail beyond)."""
        if self.kind == "exponential":
            return -math.expm1(-upper), math.exp(-upper)
        if self.kind == "normalized-power":
            tail = (1.0 + upper) ** (-self.epsilon)
            return 1.0 - tail, tail
        s = np.asarray(self.table_s, float)
        val, _ = integrate.quad(lambda x: float(psi_eval(self, x)), 0.0, upper, points=s[s < upper], limit=200)
        return val, 0.0


def psi_eval(psi: PsiSpec, s):
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < 0):
        raise LabError("DOMAIN_ERROR", "psi is defined on [0, inf)")
    if psi.kind == "exponential":
        out = np.exp(-s_arr)
    elif psi.kind == "normalized-power":
        out = psi.epsilon / (1.0 + s_arr) ** (1.0 + psi.epsilon)
    else:
        out = np.interp(s_arr, psi.table_s, psi.table_values)
    return out if np.ndim(s) else float(out)


def phi_eval(psi: PsiSpec, s):
    """phi(s) = s**2 psi(log s**-2) on [0, 1], with phi(0) = 0."""
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < 0):
        raise LabError("DOMAIN_ERROR", "phi is defined on [0, 1]")
    if np.any(s_arr > 1):
        raise LabError("DOMAIN_ERROR", "phi is defined on [0, 1]")
    out = np.zeros_like(s_arr)
    pos = s_arr > 0
    if psi.kind == "exponential":
        out[pos] = s_arr[pos] ** 4
    else:
        out[pos] = s_arr[pos] ** 2 * psi_eval(psi, -2.0 * np.log(s_arr[pos]))
    return out if np.ndim(s) else float(out)


def find_zeros(p: AnalyticPoly, radius: float = 1.0, root_tol: float = ROOT_TOL) -> np.ndarray:
    """Roots of p (with multiplicity) in the closed disc of the given radius."""
    if p.is_zero:
        raise LabError("ZERO_POLY", "the zero polynomial has no isolated zeros")
    roots = all_roots(p)
    return roots[np.abs(roots) <= radius + root_tol]


def all_roots(p: AnalyticPoly) -> np.ndarray:
    if p.degree < 1:
        return np.zeros(0, dtype=complex)
    c = p.coeffs / p.coeffs[-1]
    d = p.degree
    comp = np.zeros((d, d), dtype=complex)
    comp[1:, :-1] = np.eye(d - 1)
    comp[:, -1] = -c[:-1]
    roots = np.linalg.eigvals(comp)
    return roots[np.lexsort((roots.imag, roots.real))]


@dataclass
class HypothesisReport:
    sup_norm: float
    delta: float
    margin: float
    sup_ok: bool
    zero_free_ok: bool
    hypothesis_ok: bool
    delta_floor: float
    grid: dict
    zeros_of_f: list = field(default_factory=list)
    zeros_near_boundary: bool = False

    @property
    def failures(self) -> list[str]:
        out = []
        if not self.sup_ok:
            out.append("FAIL_SUP_NORM")
        if not self.zero_free_ok:
            out.append("FAIL_ZERO_FREE")
        if not self.hypothesis_ok:
            out.append("FAIL_HYPOTHESIS")
        return out

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        return {
            "sup_norm": self.sup_norm,
            "delta": self.delta,
            "margin": self.margin,
            "sup_ok": self.sup_ok,
            "zero_free_ok": self.zero_free_ok,
            "hypothesis_ok": self.hypothesis_ok,
            "delta_floor": self.delta_floor,
            "failures": self.failures,
            "pass": self.ok,
            "grid": self.grid,
            "zeros_of_f": [[w.real, w.imag] for w in self.zeros_of_f],
            "zeros_near_boundary": self.zeros_near_boundary,
        }


def validation_grid(resolution: int) -> np.ndarray:
    """Closed-disc polar grid: the origin, resolution//2 radii up to 1, resolution angles."""
    radii = np.linspace(0.0, 1.0, resolution // 2 + 1)[1:]
    theta = 2 * np.pi * np.arange(resolution) / resolution
    pts = (radii[:, None] * np.exp(1j * theta)[None, :]).ravel()
    return np.concatenate([[0.0 + 0.0j], pts])


def validate_scenario(
    F: PolyRow,
    f: AnalyticPoly,
    psi: PsiSpec,
    resolution: int = 256,
    delta_floor: float = DELTA_MIN,
) -> HypothesisReport:
    """Check ||F|| <= 1, zero-freeness and |f| <= phi(||F||) on a grid.

    The grid includes the unit circle (``resolution`` points) because the
    inequalities extend to the closed disc by continuity.  Nothing is raised
    here; use :func:`require_valid` to turn failures into a :class:`LabError`.
    """
    if resolution < 64:
        raise LabError("BAD_RESOLUTION", "validation needs resolution >= 64")
    z = validation_grid(resolution)
    nrm = row_norm(F, z)
    sup = float(nrm.max())
    delta = float(nrm.min())
    # phi is only defined on [0, 1]; past 1 use s**2 psi(0), the monotone extension
    phi = phi_eval(psi, np.minimum(nrm, 1.0)) * np.maximum(nrm, 1.0) ** 2
    margin = float(np.min(phi - np.abs(f(z))))
    zeros = [] if f.is_zero else list(find_zeros(f, 1.0))
    near = any(abs(1 - abs(w)) < 1e-3 for w in zeros)
    return HypothesisReport(
        sup_norm=sup,
        delta=delta,
        margin=margin,
        sup_ok=sup <= 1 + SUP_TOL,
        zero_free_ok=delta >= delta_floor,
        hypothesis_ok=margin >= -MARGIN_TOL,
        delta_floor=delta_floor,
        grid={"kind": "polar-closed", "resolution": resolution, "points": int(z.size)},
        zeros_of_f=zeros,
        zeros_near_boundary=near,
    )


def require_valid(report: HypothesisReport) -> HypothesisReport:
    if report.failures:
        raise LabError(report.failures[0], ", ".join(report.failures))
    return report
