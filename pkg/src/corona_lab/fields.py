"""Pointwise Phi, Pi, their Wirtinger derivatives, and identity checks.

Conventions: F is a row, so F(z) is a length-n vector and F* its conjugate
column.  Phi = F*/||F||**2 and Pi = I - F* F / ||F||**2.  Inner products
<a, b> = sum(a_i conj(b_i)) are linear in the first slot.

Every expression that contains f**(1/2) is written without a square root:
(F f^{-1/2})' = f^{-3/2} (F' f - F f'/2), and only |.|-type combinations of
f^{-3/2} survive, so no branch is ever chosen.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .analytic import DELTA_MIN, AnalyticPoly, PolyRow, find_zeros
from .errors import LabError
from .quadrature import DEFAULT_STEP, DiscQuadrature, numeric_laplacian, numeric_wirtinger

DEFAULT_SEED = 20240613


@dataclass
class Fields:
    """Vectorised field values; the leading axis runs over points."""

    z: np.ndarray
    F_val: np.ndarray  # (S, n)
    F_deriv: np.ndarray  # (S, n)
    norm2: np.ndarray  # (S,)
    phi: np.ndarray  # (S, n)
    pi: np.ndarray  # (S, n, n)
    d_pi: np.ndarray  # (S, n, n)
    dbar_phi: np.ndarray  # (S, n)
    f_val: np.ndarray | None = None
    f_deriv: np.ndarray | None = None

    @property
    def alpha(self):
        return np.abs(self.f_val) / self.norm2

    @property
    def beta(self):
        return np.log(self.norm2)


def _check_norm(norm2, delta_min):
    if np.any(norm2 < delta_min**2):
        raise LabError("SMALL_NORM", f"||F(z)|| below {delta_min:g}")


def pi_field(F: PolyRow, z, delta_min: float = DELTA_MIN) -> np.ndarray:
    Fv = F(z)
    norm2 = np.sum(np.abs(Fv) ** 2, axis=-1)
    _check_norm(norm2, delta_min)
    if F.n == 1:
        # projection onto ker of a non-vanishing scalar: exactly zero
        return np.zeros(Fv.shape + (1,), dtype=complex)
    return np.eye(F.n) - np.conj(Fv)[..., :, None] * Fv[..., None, :] / norm2[..., None, None]


def phi_field(F: PolyRow, z, delta_min: float = DELTA_MIN) -> np.ndarray:
    Fv = F(z)
    norm2 = np.sum(np.abs(Fv) ** 2, axis=-1)
    _check_norm(norm2, delta_min)
    return np.conj(Fv) / norm2[..., None]


def compute_fields(F: PolyRow, f: AnalyticPoly | None, z, delta_min: float = DELTA_MIN) -> Fields:
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    Fv = F(z)
    Fp = F.derivative()(z)
    norm2 = np.sum(np.abs(Fv) ** 2, axis=-1)
    _check_norm(norm2, delta_min)
    Fc = np.conj(Fv)
    phi = Fc / norm2[:, None]
    if F.n == 1:
        pi = np.zeros((z.size, 1, 1), dtype=complex)
    else:
        pi = np.eye(F.n) - Fc[:, :, None] * Fv[:, None, :] / norm2[:, None, None]
    # d Pi = -F* (F F*)^{-1} F' Pi
    Fp_pi = np.einsum("sk,skj->sj", Fp, pi)
    d_pi = -Fc[:, :, None] * Fp_pi[:, None, :] / norm2[:, None, None]
    # dbar Phi = (F')*/||F||^2 - (F (F')*) F*/||F||^4
    F_Fpc = np.sum(Fv * np.conj(Fp), axis=-1)
    dbar_phi = np.conj(Fp) / norm2[:, None] - (F_Fpc / norm2**2)[:, None] * Fc
    out = Fields(z, Fv, Fp, norm2, phi, pi, d_pi, dbar_phi)
    if f is not None:
        out.f_val = f(z)
        out.f_deriv = f.derivative()(z)
    return out


@dataclass
class FieldSample:
    z: complex
    F_val: np.ndarray
    F_deriv: np.ndarray
    phi: np.ndarray
    pi: np.ndarray
    d_pi: np.ndarray
    dbar_phi: np.ndarray
    alpha: float
    beta: float


def sample_fields(F: PolyRow, f: AnalyticPoly, z: complex, delta_min: float = DELTA_MIN) -> FieldSample:
    fl = compute_fields(F, f, [z], delta_min)
    return FieldSample(
        z=complex(z),
        F_val=fl.F_val[0],
        F_deriv=fl.F_deriv[0],
        phi=fl.phi[0],
        pi=fl.pi[0],
        d_pi=fl.d_pi[0],
        dbar_phi=fl.dbar_phi[0],
        alpha=float(fl.alpha[0]),
        beta=float(fl.beta[0]),
    )


def d_pi_norm2_formula(fl: Fields) -> np.ndarray:
    """(||F||^2 ||F'||^2 - |F' F*|^2) / ||F||^4, the squared norm of d Pi."""
    if fl.F_val.shape[-1] == 1:
        return np.zeros(fl.norm2.shape)
    fp2 = np.sum(np.abs(fl.F_deriv) ** 2, axis=-1)
    cross = np.abs(np.sum(fl.F_deriv * np.conj(fl.F_val), axis=-1)) ** 2
    return (fl.norm2 * fp2 - cross) / fl.norm2**2


def _adj(a):
    return np.conj(np.swapaxes(a, -1, -2))


def _opnorm(a):
    return np.linalg.norm(a, ord=2, axis=(-2, -1))


def _vecnorm(a):
    return np.sqrt(np.sum(np.abs(a) ** 2, axis=tuple(range(1, a.ndim))))


@dataclass
class IdentityReport:
    residuals: dict
    sample_count: int
    seed: int
    step: float
    scale: float
    extras: dict = field(default_factory=dict)

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values()) if self.residuals else 0.0

    def to_dict(self) -> dict:
        return {
            "residuals": dict(self.residuals),
            "max_residual": self.max_residual,
            "sample_count": self.sample_count,
            "seed": self.seed,
            "step": self.step,
            "scale": self.scale,
            **self.extras,
        }


def sample_nodes(q: DiscQuadrature, sample_count: int, seed: int, keep: np.ndarray | None = None) -> np.ndarray:
    pool = q.nodes if keep is None else q.nodes[keep]
    if pool.size == 0:
        raise LabError("NEAR_ZERO_OF_F", "no admissible sample nodes")
    rng = np.random.default_rng(seed)
    idx = rng.choice(pool.size, size=min(sample_count, pool.size), replace=False)
    return pool[np.sort(idx)]


def verify_pi_identities(
    F: PolyRow,
    q: DiscQuadrature,
    sample_count: int = 200,
    seed: int = DEFAULT_SEED,
    step: float = DEFAULT_STEP,
    delta_min: float = DELTA_MIN,
) -> IdentityReport:
    """Check the projection identities with finite-difference derivatives.

    The identities are evaluated on derivatives of Pi and Phi taken by
    :func:`numeric_wirtinger` (the oracle), so they test the relations
    themselves rather than the closed forms.  The closed forms for d Pi and
    dbar Phi are compared against the same oracle under ``exact_vs_fd_*``.
    Residuals are absolute, divided by max(1, max ||F'||^2 / delta^2).
    """
    z = sample_nodes(q, sample_count, seed)
    fl = compute_fields(F, None, z, delta_min)
    pi_fn = lambda w: pi_field(F, w, delta_min)
    phi_fn = lambda w: phi_field(F, w, delta_min)

    d_pi, _ = numeric_wirtinger(pi_fn, z, step)
    _, dbar_phi = numeric_wirtinger(phi_fn, z, step)
    ddbar_phi = numeric_wirtinger(lambda w: numeric_wirtinger(phi_fn, w, step)[1], z, step)[0]

    Fp_phi = np.sum(fl.F_deriv * fl.phi, axis=-1)
    pi = fl.pi
    phi = fl.phi
    mv = lambda a, v: np.einsum("sij,sj->si", a, v)

    res = {
        "pi_dbar_phi": _vecnorm(mv(pi, dbar_phi) - dbar_phi),
        "dbar_phi_adjoint": _vecnorm(dbar_phi + mv(_adj(d_pi), phi)),
        "d_dbar_phi": _vecnorm(
            ddbar_phi - mv(d_pi, dbar_phi) - mv(_adj(d_pi), phi) * Fp_phi[:, None]
        ),
        "pi_d_pi": _vecnorm(pi @ d_pi),
        "d_pi_adjoint_pi": _vecnorm(_adj(d_pi) @ pi),
        "norm_d_pi_vs_dbar_phi": np.abs(_opnorm(d_pi) ** 2 - fl.norm2 * _vecnorm(dbar_phi) ** 2),
        "norm_d_pi_formula": np.abs(_opnorm(d_pi) ** 2 - d_pi_norm2_formula(fl)),
        "exact_vs_fd_d_pi": _vecnorm(fl.d_pi - d_pi),
        "exact_vs_fd_dbar_phi": _vecnorm(fl.dbar_phi - dbar_phi),
    }
    delta = float(np.sqrt(fl.norm2.min()))
    fp2 = float(np.max(np.sum(np.abs(fl.F_deriv) ** 2, axis=-1)))
    scale = max(1.0, fp2 / delta**2)
    residuals = {k: float(np.max(v)) / scale for k, v in res.items()}

    # rank-one law on the closed form
    sv = np.linalg.svd(fl.d_pi, compute_uv=False)
    big = sv[:, 0] > 1e-12
    rank_ratio = float(np.max(sv[big, 1] / sv[big, 0])) if F.n > 1 and big.any() else 0.0
    fro = np.linalg.norm(fl.d_pi, axis=(-2, -1))
    op_vs_hs = float(np.max(np.abs(sv[big, 0] - fro[big]) / sv[big, 0])) if big.any() else 0.0
    extras = {
        "projection_idempotent": float(np.max(_opnorm(pi @ pi - pi))),
        "projection_selfadjoint": float(np.max(_opnorm(_adj(pi) - pi))),
        "rank_ratio": rank_ratio,
        "op_vs_hs_relative": op_vs_hs,
    }
    return IdentityReport(residuals, int(z.size), seed, step, scale, extras)


def _laplacian_rhs(G: PolyRow, h_kind: str, z):
    Gv = G(z)
    Gp = G.derivative()(z)
    t = np.sum(np.abs(Gv) ** 2, axis=-1)
    cross = np.abs(np.sum(Gp * np.conj(Gv), axis=-1)) ** 2
    gp2 = np.sum(np.abs(Gp) ** 2, axis=-1)
    if h_kind == "reciprocal":
        h1, h2 = -1.0 / t**2, 2.0 / t**3
    elif h_kind == "log":
        h1, h2 = 1.0 / t, -1.0 / t**2
    else:
        raise ValueError(f"unknown h kind {h_kind!r}")
    return h2 * cross + h1 * gp2


def _h_of_norm2(G: PolyRow, h_kind: str, delta_min: float):
    def u(w):
        t = np.sum(np.abs(G(w)) ** 2, axis=-1)
        _check_norm(t, delta_min)
        return 1.0 / t if h_kind == "reciprocal" else np.log(t)

    return u


def verify_laplacian_formula(
    G: PolyRow,
    h_kind: str,
    q: DiscQuadrature,
    sample_count: int = 200,
    seed: int = DEFAULT_SEED,
    step: float = DEFAULT_STEP,
    delta_min: float = DELTA_MIN,
) -> float:
    """Max |numeric Lap~ h(||G||^2) - (h'' |G'G*|^2 + h' ||G'||^2)| over sampled nodes."""
    z = sample_nodes(q, sample_count, seed)
    lhs = numeric_laplacian(_h_of_norm2(G, h_kind, delta_min), z, step)
    return float(np.max(np.abs(lhs - _laplacian_rhs(G, h_kind, z))))


def measure_density(fl: Fields) -> np.ndarray:
    """|f|^2/||F||^6 |(F f^{-1/2})' F*|^2 written as |(F'f - F f'/2) F*|^2 / (|f| ||F||^6).

    Zero exactly where f vanishes to order two or more; at a simple zero the
    limit is infinite and the value returned there is inf.
    """
    s = np.sum((fl.F_deriv * fl.f_val[:, None] - 0.5 * fl.F_val * fl.f_deriv[:, None]) * np.conj(fl.F_val), axis=-1)
    num = np.abs(s) ** 2
    af = np.abs(fl.f_val)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = num / (af * fl.norm2**3)
    return np.where(num == 0, 0.0, out)


def alpha_fn(F: PolyRow, f: AnalyticPoly, delta_min: float = DELTA_MIN):
    def a(w):
        t = np.sum(np.abs(F(w)) ** 2, axis=-1)
        _check_norm(t, delta_min)
        return np.abs(f(w)) / t

    return a


def beta_fn(F: PolyRow, delta_min: float = DELTA_MIN):
    def b(w):
        t = np.sum(np.abs(F(w)) ** 2, axis=-1)
        _check_norm(t, delta_min)
        return np.log(t)

    return b


def zeros_of(f: AnalyticPoly, step: float = DEFAULT_STEP) -> np.ndarray:
    """Zeros of f close enough to the closed disc to matter for puncturing."""
    if f.is_zero:
        return np.zeros(0, dtype=complex)
    return find_zeros(f, 1.0 + 10 * step)


def verify_measure_laplace(
    F: PolyRow,
    f: AnalyticPoly,
    q: DiscQuadrature,
    sample_count: int = 200,
    seed: int = DEFAULT_SEED,
    step: float = DEFAULT_STEP,
    delta_min: float = DELTA_MIN,
) -> float:
    """Max residual of density = Lap~ alpha + alpha Lap~ beta away from zeros of f."""
    if f.is_zero:
        raise LabError("ZERO_F", "f must not vanish identically")
    zeros = zeros_of(f, step)
    keep = np.ones(q.size, dtype=bool)
    for w in zeros:
        keep &= np.abs(q.nodes - w) > 10 * step
    z = sample_nodes(q, sample_count, seed, keep)
    fl = compute_fields(F, f, z, delta_min)
    lhs = measure_density(fl)
    lap_a = numeric_laplacian(alpha_fn(F, f, delta_min), z, step)
    lap_b = numeric_laplacian(beta_fn(F, delta_min), z, step)
    rhs = lap_a + fl.alpha * lap_b
    return float(np.max(np.abs(lhs - rhs)))


def alpha_gradient_check(F: PolyRow, f: AnalyticPoly, z, step: float = DEFAULT_STEP, delta_min: float = DELTA_MIN):
    """Return (|d alpha| numeric, ||F||^-3 (||F' f|| + ||F f'||/2)) at each point."""
    fl = compute_fields(F, f, z, delta_min)
    d_alpha, _ = numeric_wirtinger(alpha_fn(F, f, delta_min), fl.z, step)
    bound = (
        _vecnorm(fl.F_deriv * fl.f_val[:, None]) + 0.5 * _vecnorm(fl.F_val * fl.f_deriv[:, None])
    ) / fl.norm2**1.5
    return np.abs(d_alpha), bound
