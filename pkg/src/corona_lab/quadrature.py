"""Quadrature for mu = (2/pi) log(1/|z|) dA on the disc and for arclength on the circle.

Also holds the finite-difference Wirtinger derivatives used as the oracle for
every closed-form derivative elsewhere in the package.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import LabError

DEFAULT_RADIAL = 128
DEFAULT_ANGULAR = 256
DEFAULT_BOUNDARY = 512
DEFAULT_STEP = 1e-4
DEFAULT_EPSILONS = (0.1, 0.05, 0.025, 0.0125)


@dataclass(frozen=True, eq=False)
class DiscQuadrature:
    """Polar product rule for mu.

    Radially, Gauss-Legendre in t on (0, 1) with r = t**2; the log(1/r)
    factor stays in the weight.  The substitution turns the r log r endpoint
    behaviour into t**3 log t, which the rule integrates to ~1e-14 at 64
    nodes.  Angularly, the equispaced trapezoid rule.
    """

    nodes: np.ndarray
    weights: np.ndarray
    radial_count: int
    angular_count: int

    @property
    def size(self) -> int:
        return self.nodes.size


def build_disc_quadrature(radial_count: int = DEFAULT_RADIAL, angular_count: int = DEFAULT_ANGULAR) -> DiscQuadrature:
    if radial_count < 16 or angular_count < 32:
        raise LabError("BAD_RESOLUTION", "need radial_count >= 16 and angular_count >= 32")
    x, w = np.polynomial.legendre.leggauss(radial_count)
    t = 0.5 * (x + 1.0)
    wt = 0.5 * w
    r = t * t
    # dr = 2t dt; mu density (2/pi) log(1/r) r dr dtheta
    wr = wt * 2.0 * t * (2.0 / np.pi) * np.log(1.0 / r) * r
    theta = 2.0 * np.pi * np.arange(angular_count) / angular_count
    nodes = (r[:, None] * np.exp(1j * theta)[None, :]).ravel()
    weights = np.repeat(wr * (2.0 * np.pi / angular_count), angular_count)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return DiscQuadrature(nodes, weights, radial_count, angular_count)


@dataclass(frozen=True, eq=False)
class BoundaryQuadrature:
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def size(self) -> int:
        return self.nodes.size


def build_boundary_quadrature(count: int = DEFAULT_BOUNDARY) -> BoundaryQuadrature:
    if count < 1:
        raise LabError("BAD_RESOLUTION", "boundary grid needs at least one node")
    nodes = np.exp(2j * np.pi * np.arange(count) / count)
    weights = np.full(count, 1.0 / count)
    return BoundaryQuadrature(nodes, weights)


@dataclass(frozen=True, eq=False)
class PuncturedDomain:
    """``base`` with every node inside a closed disc D_eps(w_j) removed."""

    base: DiscQuadrature
    centers: tuple
    epsilon: float

    def __post_init__(self):
        if not self.epsilon > 0:
            raise LabError("BAD_EPSILON", "epsilon must be positive")
        object.__setattr__(self, "centers", tuple(complex(c) for c in self.centers))

    @property
    def keep(self) -> np.ndarray:
        return puncture_mask(self.base.nodes, self.centers, self.epsilon)

    @property
    def nodes(self) -> np.ndarray:
        return self.base.nodes[self.keep]

    @property
    def weights(self) -> np.ndarray:
        return self.base.weights[self.keep]

    @property
    def size(self) -> int:
        return int(self.keep.sum())


def puncture_mask(nodes: np.ndarray, centers: Sequence[complex], epsilon: float) -> np.ndarray:
    keep = np.ones(nodes.shape, dtype=bool)
    for c in centers:
        keep &= np.abs(nodes - c) > epsilon
    return keep


def _integrate(q, samples) -> complex:
    s = np.asarray(samples)
    if s.shape[0] != q.size:
        raise LabError("LENGTH_MISMATCH", f"{s.shape[0]} samples for {q.size} nodes")
    return complex(np.dot(q.weights, s))


def integrate_mu(q: DiscQuadrature | PuncturedDomain, samples) -> complex:
    return _integrate(q, samples)


def integrate_boundary(q: BoundaryQuadrature, samples) -> complex:
    return _integrate(q, samples)


def numeric_wirtinger(eval_fn: Callable, z, step: float = DEFAULT_STEP):
    """Central-difference (d, dbar) of ``eval_fn`` at each point of ``z``.

    ``eval_fn`` maps an array of points to an array whose leading axes match
    the points.  The stride is ``step * max(1, |z|)`` in each real direction.
    """
    z = np.asarray(z, dtype=complex)
    h = step * np.maximum(1.0, np.abs(z))
    fxp = np.asarray(eval_fn(z + h))
    fxm = np.asarray(eval_fn(z - h))
    fyp = np.asarray(eval_fn(z + 1j * h))
    fym = np.asarray(eval_fn(z - 1j * h))
    hb = h.reshape(h.shape + (1,) * (fxp.ndim - z.ndim))
    dx = (fxp - fxm) / (2 * hb)
    dy = (fyp - fym) / (2 * hb)
    return 0.5 * (dx - 1j * dy), 0.5 * (dx + 1j * dy)


def numeric_laplacian(u_fn: Callable, z, step: float = DEFAULT_STEP):
    """d(dbar u) = Laplacian/4, by nesting :func:`numeric_wirtinger`."""
    return numeric_wirtinger(lambda w: numeric_wirtinger(u_fn, w, step)[1], z, step)[0]


def green_sides(u_fn: Callable, u_laplacian_fn: Callable, q, b: BoundaryQuadrature) -> tuple[complex, complex]:
    """(disc side, boundary side) of Green's formula for the measure mu."""
    disc = integrate_mu(q, u_laplacian_fn(q.nodes))
    bdry = integrate_boundary(b, u_fn(b.nodes)) - complex(np.asarray(u_fn(np.array([0j])))[0])
    return disc, bdry


def green_residual(u_fn: Callable, u_laplacian_fn: Callable, q: DiscQuadrature, b: BoundaryQuadrature) -> float:
    disc, bdry = green_sides(u_fn, u_laplacian_fn, q, b)
    return abs(disc - bdry)


def punctured_green_residual(
    u_fn: Callable,
    u_laplacian_fn: Callable,
    centers: Sequence[complex],
    epsilons: Sequence[float],
    q: DiscQuadrature,
    b: BoundaryQuadrature,
) -> list[float]:
    """Green residual over the punctured domain, one value per epsilon."""
    lap = np.asarray(u_laplacian_fn(q.nodes))
    bdry = integrate_boundary(b, u_fn(b.nodes)) - complex(np.asarray(u_fn(np.array([0j])))[0])
    out = []
    for eps in epsilons:
        keep = puncture_mask(q.nodes, centers, eps)
        out.append(abs(complex(np.dot(q.weights[keep], lap[keep])) - bdry))
    return out
