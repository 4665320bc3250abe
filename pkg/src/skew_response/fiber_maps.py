"""Analytic family of degree-2 uniformly expanding circle maps.

The map with nonlinearity ``a``, coupling ``b`` to the drive parameter ``eps``
and coupling ``c`` to the base point ``omega`` is

    T(x) = 2x + (a + b*eps) * sin(2 pi x) / (2 pi)
              + c * sin(2 pi (x - omega)) / (2 pi)      (mod 1).

Its lift is strictly increasing with slope at least
``gamma = 2 - |a| - |b|*eps_max - |c|``; parameter sets are only accepted when
``gamma > 1``, so every map in the family is a two-branch covering of the
circle and all inverse branches contract by ``1/gamma``.

All partial derivatives in (x, omega, eps) are closed-form trigonometric
expressions, exposed through :func:`eval_jet`, so downstream operator
derivatives never rely on finite differencing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circle import circle_distance, wrap

TWO_PI = 2.0 * np.pi

NEWTON_MAX_ITER = 50
NEWTON_TOL = 1e-13


class ParameterRangeError(ValueError):
    """Raised when map parameters leave the uniformly expanding regime."""


class NewtonDivergenceError(RuntimeError):
    """Raised when the inverse-branch solve fails to reach tolerance."""


@dataclass(frozen=True)
class FiberParams:
    """Amplitudes of the trigonometric map family and the parameter half-width.

    ``eps_max`` bounds the admissible |eps|; the expansion margin
    ``2 - |a| - |b|*eps_max - |c|`` must exceed 1.
    """

    a: float = 0.3
    b: float = 1.0
    c: float = 0.3
    eps_max: float = 0.1

    def __post_init__(self):
        if self.eps_max <= 0.0:
            raise ParameterRangeError(f"eps_max must be positive, got {self.eps_max}")
        gamma = expansion_constant(self)
        if gamma <= 1.0:
            raise ParameterRangeError(
                f"expansion margin gamma={gamma:.6g} <= 1 for "
                f"a={self.a}, b={self.b}, c={self.c}, eps_max={self.eps_max}"
            )

    def check_eps(self, eps: float) -> None:
        if abs(eps) > self.eps_max:
            raise ParameterRangeError(f"|eps|={abs(eps)} exceeds eps_max={self.eps_max}")

    def to_dict(self) -> dict:
        return {"a": self.a, "b": self.b, "c": self.c, "eps_max": self.eps_max}

    @classmethod
    def from_dict(cls, d: dict) -> "FiberParams":
        return cls(
            a=float(d.get("a", 0.3)),
            b=float(d.get("b", 1.0)),
            c=float(d.get("c", 0.3)),
            eps_max=float(d.get("eps_max", 0.1)),
        )


@dataclass(frozen=True)
class MapJet:
    """Value and first/second partials of the map at one point."""

    T: float
    dTdx: float
    d2Tdx2: float
    dTdeps: float
    dTdomega: float
    d2Tdxdeps: float
    d2Tdxdomega: float


def expansion_constant(params: FiberParams) -> float:
    """Uniform lower bound 2 - |a| - |b|*eps_max - |c| for the slope of the lift."""
    return 2.0 - abs(params.a) - abs(params.b) * params.eps_max - abs(params.c)


def lift(params: FiberParams, omega: float, eps: float, y):
    """The (unreduced) lift of the map; strictly increasing in y."""
    amp = params.a + params.b * eps
    return (
        2.0 * y
        + amp * np.sin(TWO_PI * y) / TWO_PI
        + params.c * np.sin(TWO_PI * (y - omega)) / TWO_PI
    )


def lift_slope(params: FiberParams, omega: float, eps: float, y):
    """d(lift)/dy = 2 + (a+b*eps) cos(2 pi y) + c cos(2 pi (y-omega))."""
    amp = params.a + params.b * eps
    return 2.0 + amp * np.cos(TWO_PI * y) + params.c * np.cos(TWO_PI * (y - omega))


def eval_map(params: FiberParams, omega: float, eps: float, x):
    """Evaluate T at x (scalar or array), reduced mod 1."""
    params.check_eps(eps)
    return wrap(lift(params, omega, eps, x))


def jet_tables(params: FiberParams, omega: float, eps: float, y):
    """All seven jet entries at y (vectorized); returns a dict of arrays.

    Keys follow MapJet field names.
    """
    params.check_eps(eps)
    amp = params.a + params.b * eps
    sy = np.sin(TWO_PI * y)
    cy = np.cos(TWO_PI * y)
    sw = np.sin(TWO_PI * (y - omega))
    cw = np.cos(TWO_PI * (y - omega))
    return {
        "T": wrap(2.0 * y + amp * sy / TWO_PI + params.c * sw / TWO_PI),
        "dTdx": 2.0 + amp * cy + params.c * cw,
        "d2Tdx2": -TWO_PI * (amp * sy + params.c * sw),
        "dTdeps": params.b * sy / TWO_PI,
        "dTdomega": -params.c * cw,
        "d2Tdxdeps": params.b * cy,
        "d2Tdxdomega": TWO_PI * params.c * sw,
    }


def eval_jet(params: FiberParams, omega: float, eps: float, x: float) -> MapJet:
    """Exact jet of the map at a single point."""
    t = jet_tables(params, omega, eps, np.float64(x))
    return MapJet(**{k: float(v) for k, v in t.items()})


def solve_branches(params: FiberParams, omega: float, eps: float, x):
    """Both inverse branches plus the four trig tables at the solutions.

    Branch i solves lift(y) = x + i on the real line; the two solutions,
    reduced mod 1, are the two preimages of x under the degree-2 covering.
    Newton on the monotone lift with a bisection-safeguarded bracket; the
    bracket comes from |lift(y) - 2y| <= (|a+b*eps| + |c|) / (2 pi).

    Returns (y, sin 2pi y, cos 2pi y, sin 2pi (y-omega), cos 2pi (y-omega)),
    all of shape (2, len(x)); the trig tables are evaluated at the returned
    (wrapped) points so jet entries built from them are self-consistent.
    """
    params.check_eps(eps)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    t = np.stack([x, x + 1.0])  # (2, n) lift targets
    amp = params.a + params.b * eps
    c = params.c
    s_max = (abs(amp) + abs(c)) / TWO_PI
    lo = (t - s_max) / 2.0
    hi = (t + s_max) / 2.0
    y = t / 2.0  # doubling-map preimage as initial guess

    tol = np.maximum(1.0, np.abs(t)) * (0.25 * NEWTON_TOL)
    prev_worst = np.inf
    for _ in range(NEWTON_MAX_ITER):
        sy = np.sin(TWO_PI * y)
        cy = np.cos(TWO_PI * y)
        resid = 2.0 * y + (amp * sy + c * np.sin(TWO_PI * (y - omega))) / TWO_PI - t
        active = np.abs(resid) > tol
        if not active.any():
            break
        worst = float(np.max(np.abs(resid)))
        if worst >= prev_worst and worst < 1e-12:
            break  # roundoff plateau
        prev_worst = worst
        # shrink the bracket around the root, then take a Newton step;
        # converged nodes stay frozen so the safeguard cannot kick them out
        lo = np.where(active & (resid < 0.0), y, lo)
        hi = np.where(active & (resid > 0.0), y, hi)
        cand = y - resid / (2.0 + amp * cy + c * np.cos(TWO_PI * (y - omega)))
        cand = np.where((cand <= lo) | (cand >= hi), 0.5 * (lo + hi), cand)
        y = np.where(active, cand, y)

    y = wrap(y)
    sy = np.sin(TWO_PI * y)
    cy = np.cos(TWO_PI * y)
    sw = np.sin(TWO_PI * (y - omega))
    cw = np.cos(TWO_PI * (y - omega))
    resid = np.abs(wrap(2.0 * y + (amp * sy + c * sw) / TWO_PI - t + 0.5) - 0.5)
    if np.any(resid > NEWTON_TOL):
        worst = float(np.max(resid))
        raise NewtonDivergenceError(
            f"inverse branch residual {worst:.3e} > {NEWTON_TOL} after {NEWTON_MAX_ITER} iterations"
        )
    return y, sy, cy, sw, cw


def inverse_branches_grid(params: FiberParams, omega: float, eps: float, x) -> np.ndarray:
    """Both inverse branches at each target point, shape (2, len(x))."""
    return solve_branches(params, omega, eps, x)[0]


def inverse_branches(params: FiberParams, omega: float, eps: float, x: float) -> list[float]:
    """The two preimages of a single point, ordered by lift offset."""
    y = inverse_branches_grid(params, omega, eps, float(x))
    return [float(y[0, 0]), float(y[1, 0])]


def branch_contraction_check(params: FiberParams, omega: float, eps: float,
                             x1, x2) -> float:
    """Max over branches/pairs of d(y(x1), y(x2)) / d(x1, x2); <= 1/gamma."""
    y1 = inverse_branches_grid(params, omega, eps, x1)
    y2 = inverse_branches_grid(params, omega, eps, x2)
    dx = circle_distance(x1, x2)
    dy = circle_distance(y1, y2)
    ratio = dy / np.maximum(dx, 1e-300)
    return float(np.max(ratio))
