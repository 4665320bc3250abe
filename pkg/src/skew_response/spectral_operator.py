"""Fourier-collocation discretization of weighted transfer operators.

Real functions on the circle are truncated Fourier series with modes
k = -K..K stored at array index k + K.  A transfer operator is discretized
column by column: the image of the mode exp(2 pi i k x) is the branch sum
over inverse branches y(x) of exp(2 pi i k y(x)) / T'(y(x)), sampled on an
equispaced grid of N >= 2K+2 points (N = 4K by default, which also keeps
products of two degree-K fields alias-free) and projected back to degree K.

Parameter-derivative operators are assembled from the same branch data with
the exact chain rule

    d/dp [g(y)/T'(y)] = g'(y) dy/dp / T'(y) - g(y) (T''_p(y) + T''(y) dy/dp) / T'(y)^2,
    dy/dp = -T_p(y) / T'(y),

so no finite differencing enters the operator pipeline.

Norm proxies: ``norm_w`` is the sup norm on the synthesis grid, ``norm_s``
adds the sup norm of the derivative (a C^1 proxy).  Both are computed
directly from coefficients.

Assembled matrices are cached keyed by (parameters, kind, omega, eps, K, N)
with omega and eps quantized at 1e-15; cache misses are counted per kind so
pipelines can assert which operators were actually built.
"""

from __future__ import annotations

import threading
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np

from .base_dynamics import RotationBase, advance
from .fiber_maps import TWO_PI, FiberParams, solve_branches

TWO_PI_I = 2j * np.pi

KIND_TRANSFER = "transfer"
KIND_D_EPS = "d_eps"
KIND_D_OMEGA = "d_omega"


class AliasingError(ValueError):
    """Raised when a grid is too coarse for the requested mode range."""


# ---------------------------------------------------------------------------
# fields
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Truncated Fourier series; coeffs[k + K] is the mode-k coefficient."""

    coeffs: np.ndarray

    def __post_init__(self):
        arr = np.array(self.coeffs, dtype=complex)
        if arr.ndim != 1 or len(arr) % 2 == 0:
            raise ValueError("coefficient array must be 1-d with odd length 2K+1")
        arr.setflags(write=False)
        object.__setattr__(self, "coeffs", arr)

    @property
    def K(self) -> int:
        return (len(self.coeffs) - 1) // 2

    @property
    def mass(self) -> float:
        """Mode-0 coefficient (the integral against Lebesgue)."""
        return float(self.coeffs[self.K].real)

    def hermitian_defect(self) -> float:
        """How far the field is from being real-valued."""
        return float(np.max(np.abs(np.conj(self.coeffs[::-1]) - self.coeffs)))

    def __add__(self, other: "SpectralField") -> "SpectralField":
        return SpectralField(self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        return SpectralField(self.coeffs - other.coeffs)

    def __mul__(self, scalar) -> "SpectralField":
        return SpectralField(self.coeffs * scalar)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Real samples at the equispaced nodes m/N, m = 0..N-1."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=float)
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def N(self) -> int:
        return len(self.values)


def zero_field(K: int) -> SpectralField:
    return SpectralField(np.zeros(2 * K + 1, dtype=complex))


def constant_field(value: float, K: int) -> SpectralField:
    coeffs = np.zeros(2 * K + 1, dtype=complex)
    coeffs[K] = value
    return SpectralField(coeffs)


def grid_nodes(N: int) -> np.ndarray:
    return np.arange(N) / N


def analyze(grid: GridFunction | np.ndarray, K: int) -> SpectralField:
    """Project grid samples onto modes -K..K (exact for band-limited input)."""
    values = grid.values if isinstance(grid, GridFunction) else np.asarray(grid, dtype=float)
    N = len(values)
    if N < 2 * K + 2:
        raise AliasingError(f"grid of {N} points cannot resolve degree K={K}; need N >= 2K+2")
    F = np.fft.fft(values) / N
    return SpectralField(np.concatenate([F[N - K:], F[: K + 1]]))


def synthesize(field: SpectralField, N: int) -> GridFunction:
    """Evaluate the field at N equispaced nodes."""
    return GridFunction(synthesize_values(field.coeffs, N))


def synthesize_values(coeffs: np.ndarray, N: int) -> np.ndarray:
    K = (len(coeffs) - 1) // 2
    if N < 2 * K + 2:
        raise AliasingError(f"grid of {N} points cannot resolve degree K={K}; need N >= 2K+2")
    spec = np.zeros(N, dtype=complex)
    spec[: K + 1] = coeffs[K:]
    spec[N - K:] = coeffs[:K]
    return np.fft.ifft(spec).real * N


def field_from_function(fn, K: int, N: int | None = None) -> SpectralField:
    """Analyze a vectorized callable x -> f(x) sampled at N nodes (default 4K)."""
    N = default_grid(K) if N is None else N
    return analyze(np.asarray(fn(grid_nodes(N)), dtype=float), K)


def default_grid(K: int) -> int:
    return max(4 * K, 8)


def norm_w(field: SpectralField) -> float:
    """Weak-norm proxy: sup norm on the synthesis grid."""
    return float(np.max(np.abs(synthesize_values(field.coeffs, default_grid(field.K)))))


def derivative_field(field: SpectralField) -> SpectralField:
    ks = np.arange(-field.K, field.K + 1)
    return SpectralField(field.coeffs * (TWO_PI_I * ks))


def norm_s(field: SpectralField) -> float:
    """Strong-norm proxy: sup norm plus sup norm of the derivative."""
    return norm_w(field) + norm_w(derivative_field(field))


def pairing(field: SpectralField, other: SpectralField) -> float:
    """Integral of the product of two (real) fields over the circle."""
    Ka, Kb = field.K, other.K
    K = min(Ka, Kb)
    a = field.coeffs[Ka - K: Ka + K + 1]
    b = other.coeffs[Kb - K: Kb + K + 1]
    return float(np.sum(a * np.conj(b)).real)


def multiply(field: SpectralField, other: SpectralField, K_out: int | None = None) -> SpectralField:
    """Pointwise product, projected to degree K_out (default: the larger K).

    The working grid has 4*max(K) points, so products of two degree-K inputs
    are alias-free up to degree K.
    """
    K_big = max(field.K, other.K)
    K_out = K_big if K_out is None else K_out
    N = default_grid(max(K_big, K_out))
    va = synthesize_values(field.coeffs, N)
    vb = synthesize_values(other.coeffs, N)
    return analyze(va * vb, K_out)


# ---------------------------------------------------------------------------
# operator matrices
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Dense (2K+1)^2 action of a transfer operator or its parameter derivative."""

    entries: np.ndarray
    kind: str
    omega: float
    eps: float

    def __post_init__(self):
        arr = np.asarray(self.entries)
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @property
    def K(self) -> int:
        return (self.entries.shape[0] - 1) // 2

    def apply(self, field: SpectralField) -> SpectralField:
        if field.K != self.K:
            raise ValueError(f"operator K={self.K} cannot act on field K={field.K}")
        return SpectralField(self.entries @ field.coeffs)


class _LruCache:
    """Tiny thread-safe LRU map; values are immutable once stored."""

    def __init__(self, maxsize: int):
        self.maxsize = maxsize
        self._data: OrderedDict = OrderedDict()
        self._lock = threading.Lock()

    def get(self, key):
        with self._lock:
            if key in self._data:
                self._data.move_to_end(key)
                return self._data[key]
        return None

    def put(self, key, value):
        with self._lock:
            self._data[key] = value
            self._data.move_to_end(key)
            while len(self._data) > self.maxsize:
                self._data.popitem(last=False)

    def clear(self):
        with self._lock:
            self._data.clear()

    def __len__(self):
        return len(self._data)


_OPERATOR_CACHE = _LruCache(maxsize=512)
_BRANCH_CACHE = _LruCache(maxsize=512)

_COUNT_LOCK = threading.Lock()
_ASSEMBLY_COUNTS = {KIND_TRANSFER: 0, KIND_D_EPS: 0, KIND_D_OMEGA: 0}


def assembly_counts() -> dict:
    """Snapshot of how many matrices of each kind were actually assembled."""
    with _COUNT_LOCK:
        return dict(_ASSEMBLY_COUNTS)


def clear_caches() -> None:
    _OPERATOR_CACHE.clear()
    _BRANCH_CACHE.clear()


def _count(kind: str) -> None:
    with _COUNT_LOCK:
        _ASSEMBLY_COUNTS[kind] += 1


def _cache_key(params: FiberParams, omega: float, eps: float, K: int, N: int, kind: str):
    # the family loses its omega dependence when c = 0 and its eps dependence
    # when b = 0; collapsing the key lets repeated orbit points share work
    om = 0.0 if params.c == 0.0 else round(omega % 1.0, 15)
    ep = 0.0 if params.b == 0.0 else round(eps, 15)
    return (params, om, ep, K, N, kind)


def _branch_tables(params: FiberParams, omega: float, eps: float, N: int):
    """Branch points and jet entries at all grid nodes, cached per (omega, eps, N)."""
    key = _cache_key(params, omega, eps, 0, N, "branches")
    hit = _BRANCH_CACHE.get(key)
    if hit is not None:
        return hit
    y, sy, cy, sw, cw = solve_branches(params, omega, eps, grid_nodes(N))
    amp = params.a + params.b * eps
    c = params.c
    tables = {
        "y": y,
        "dTdx": 2.0 + amp * cy + c * cw,
        "d2Tdx2": -TWO_PI * (amp * sy + c * sw),
        "dTdeps": params.b * sy / TWO_PI,
        "dTdomega": -c * cw,
        "d2Tdxdeps": params.b * cy,
        "d2Tdxdomega": TWO_PI * c * sw,
    }
    _BRANCH_CACHE.put(key, tables)
    return tables


def _half_mode_powers(y: np.ndarray, K: int) -> np.ndarray:
    """exp(2 pi i k y) for k = 0..K, built by repeated multiplication."""
    z = np.exp(TWO_PI_I * y)
    out = np.empty((K + 1,) + y.shape, dtype=complex)
    out[0] = 1.0
    for k in range(1, K + 1):
        np.multiply(out[k - 1], z, out=out[k])
    return out


def _assemble(params: FiberParams, omega: float, eps: float, K: int, N: int, kind: str) -> OperatorMatrix:
    jt = _branch_tables(params, omega, eps, N)
    tx = jt["dTdx"]
    E = _half_mode_powers(jt["y"], K)  # (K+1, 2, N)
    if kind == KIND_TRANSFER:
        V = np.einsum("kbn,bn->kn", E, 1.0 / tx)
    else:
        tp = jt["dTdeps"] if kind == KIND_D_EPS else jt["dTdomega"]
        txp = jt["d2Tdxdeps"] if kind == KIND_D_EPS else jt["d2Tdxdomega"]
        dydp = -tp / tx
        w_deriv = dydp / tx                              # multiplies g'(y)
        w_value = -(txp + jt["d2Tdx2"] * dydp) / tx**2   # multiplies g(y)
        ks_half = np.arange(K + 1)
        V = (TWO_PI_I * ks_half)[:, None] * np.einsum("kbn,bn->kn", E, w_deriv)
        V += np.einsum("kbn,bn->kn", E, w_value)
    # columns for k >= 0 from the FFT; k < 0 columns by Hermitian symmetry
    # (the branch weights are real, so column(-k) = conj(column(k)))
    F = np.fft.fft(V, axis=1) / N
    ks = np.arange(-K, K + 1)
    M = np.empty((2 * K + 1, 2 * K + 1), dtype=complex)
    M[:, K:] = F[:, ks % N].T
    M[:, :K] = np.conj(M[::-1, 2 * K: K: -1])
    _count(kind)
    return OperatorMatrix(entries=M, kind=kind, omega=omega % 1.0, eps=eps)


def _assemble_cached(params: FiberParams, omega: float, eps: float, K: int, N: int | None, kind: str) -> OperatorMatrix:
    N = default_grid(K) if N is None else N
    if N < 2 * K + 2:
        raise AliasingError(f"N={N} too small for K={K}; need N >= 2K+2")
    key = _cache_key(params, omega, eps, K, N, kind)
    hit = _OPERATOR_CACHE.get(key)
    if hit is not None:
        return hit
    mat = _assemble(params, omega, eps, K, N, kind)
    _OPERATOR_CACHE.put(key, mat)
    return mat


def assemble_transfer(params: FiberParams, omega: float, eps: float, K: int, N: int | None = None) -> OperatorMatrix:
    """Collocation matrix of the Jacobian-weighted inverse-branch sum."""
    return _assemble_cached(params, omega, eps, K, N, KIND_TRANSFER)


def assemble_d_eps(params: FiberParams, omega: float, eps: float, K: int, N: int | None = None) -> OperatorMatrix:
    """Exact partial derivative of the transfer operator in the drive parameter."""
    return _assemble_cached(params, omega, eps, K, N, KIND_D_EPS)


def assemble_d_omega(params: FiberParams, omega: float, eps: float, K: int, N: int | None = None) -> OperatorMatrix:
    """Exact partial derivative of the transfer operator in the base point."""
    return _assemble_cached(params, omega, eps, K, N, KIND_D_OMEGA)


def cocycle_apply(params: FiberParams, base: RotationBase, omega: float, eps: float,
                  n: int, field: SpectralField, N: int | None = None) -> SpectralField:
    """Apply the n-fold operator composition along the forward orbit of omega.

    The j-th factor is the transfer operator at the j-step orbit point, so
    n = 0 returns the input field unchanged and mass is preserved throughout.
    """
    if n < 0:
        raise ValueError(f"composition length must be nonnegative, got {n}")
    coeffs = field.coeffs
    K = field.K
    for j in range(n):
        op = assemble_transfer(params, advance(base, eps, omega, j), eps, K, N)
        coeffs = op.entries @ coeffs
    return SpectralField(coeffs)
