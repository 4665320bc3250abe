"""Parameter-dependent circle rotations driving the fiber maps.

The base map advances a point by ``alpha0 + beta*eps`` per step.  Angles are
snapped to the dyadic lattice Z / 2^45 and orbits are computed with integer
arithmetic, so composing ``advance`` calls is *exactly* associative mod 1 and
repeated orbit points are bit-identical (which makes operator caching along
orbits exact).  The lattice spacing (~2.8e-14) sits far below every tolerance
used downstream.

The Haar measure is the invariant measure of every rotation; equispaced
quadrature against it is exact for trigonometric polynomials of degree below
the node count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .circle import circle_distance

LATTICE_BITS = 45
LATTICE = 1 << LATTICE_BITS

GOLDEN_MEAN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class RotationBase:
    """Rotation by alpha0 + beta*eps; beta is the angle's velocity in eps."""

    alpha0: float = GOLDEN_MEAN
    beta: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.alpha0 < 1.0:
            raise ValueError(f"alpha0 must lie in [0, 1), got {self.alpha0}")

    def step(self, eps: float) -> float:
        return self.alpha0 + self.beta * eps

    def to_dict(self) -> dict:
        return {"alpha0": self.alpha0, "beta": self.beta}

    @classmethod
    def from_dict(cls, d: dict) -> "RotationBase":
        return cls(alpha0=float(d.get("alpha0", GOLDEN_MEAN)), beta=float(d.get("beta", 1.0)))


def snap(x: float) -> float:
    """Nearest lattice representative of x mod 1."""
    return (round((x % 1.0) * LATTICE) % LATTICE) / LATTICE


def advance(base: RotationBase, eps: float, omega: float, n):
    """Orbit point omega + n*(alpha0 + beta*eps) mod 1.

    n may be a (signed) int or an integer array; n = 0 returns omega
    unchanged.  Both the start point and the step are snapped to the dyadic
    lattice, and the combination runs in exact integer arithmetic.
    """
    if np.ndim(n) == 0:
        n = int(n)
        if n == 0:
            return omega % 1.0
        om_int = round((omega % 1.0) * LATTICE) % LATTICE
        step_int = round(base.step(eps) * LATTICE)
        return ((om_int + n * step_int) % LATTICE) / LATTICE

    n = np.asarray(n)
    om_int = round((omega % 1.0) * LATTICE) % LATTICE
    step_int = round(base.step(eps) * LATTICE)
    if np.max(np.abs(n), initial=0) * max(abs(step_int), 1) < 2**62:
        vals = (om_int + n.astype(np.int64) * step_int) % LATTICE
        out = vals.astype(float) / LATTICE
    else:  # fall back to arbitrary-precision integers
        out = np.array(
            [((om_int + int(k) * step_int) % LATTICE) / LATTICE for k in n.ravel()]
        ).reshape(n.shape)
    out[np.asarray(n) == 0] = omega % 1.0
    return out


def orbit_eps_derivative(base: RotationBase, n: int) -> float:
    """d/d(eps) of the n-step orbit point at eps = 0: exactly n*beta."""
    return n * base.beta


def c0_distance(base: RotationBase, eps: float) -> float:
    """Uniform distance between the rotation at eps and at 0 (both inverses)."""
    return circle_distance(base.beta * eps, 0.0)


def haar_quadrature(n_nodes: int) -> list[tuple[float, float]]:
    """Equispaced nodes k/N with weights 1/N; exact for degree < N."""
    if n_nodes < 1:
        raise ValueError(f"need at least one node, got {n_nodes}")
    w = 1.0 / n_nodes
    return [(k / n_nodes, w) for k in range(n_nodes)]


def unit_density(omega: float) -> float:
    """Haar density on the circle."""
    return 1.0


def zero_functional(phi: Callable[[float], float]) -> float:
    """Derivative functional of an eps-independent base measure family."""
    return 0.0


@dataclass(frozen=True)
class BaseMeasureFamily:
    """Base invariant measure at eps = 0 plus its derivative functional.

    ``derivative_functional`` receives an observable on the base circle and
    returns the derivative of its base-measure average at eps = 0.  The Haar
    default is the zero functional (rotations leave Haar invariant for every
    eps); a nonconstant family can be injected without touching any other
    machinery.
    """

    density_at_0: Callable[[float], float] = field(default=unit_density)
    derivative_functional: Callable[[Callable[[float], float]], float] = field(
        default=zero_functional
    )

    def validate(self, n_nodes: int = 256, tol: float = 1e-10) -> None:
        total = sum(w * self.density_at_0(node) for node, w in haar_quadrature(n_nodes))
        if abs(total - 1.0) > tol:
            raise ValueError(f"density_at_0 integrates to {total}, not 1")
        d1 = self.derivative_functional(lambda omega: 1.0)
        if abs(d1) > tol:
            raise ValueError(f"derivative functional of the constant 1 is {d1}, not 0")

    @classmethod
    def haar(cls) -> "BaseMeasureFamily":
        return cls()
