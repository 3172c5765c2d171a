"""Coordinate charts and differentiable field containers.

Every geometric object in this package is a field over a single coordinate
chart: a callable mapping a batch of chart points (shape ``(N, n)``) to
component arrays with a leading batch axis.  Fields carry their first and
second coordinate partials either in closed form (``deriv_mode="analytic"``,
usually generated through sympy) or through 4th-order central finite
differences of the evaluation callable.

Index conventions for derivative arrays (leading axis is always the batch):

* metric            ``g[a, i, j]``
* first partials    ``d1[a, i, j, k] = d g_ij / d x^k``
* second partials   ``d2[a, i, j, k, l] = d^2 g_ij / (d x^k d x^l)``
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
import sympy as sp

from .errors import ConfigurationError, DimensionError

Array = np.ndarray

# Chart kinds
TORUS_BOX = "TorusBox"
SPHERE_ANGULAR = "SphereAngular"
POINCARE_BALL = "PoincareBall"
EULER_SU2 = "EulerAnglesSU2"

_CHART_KINDS = (TORUS_BOX, SPHERE_ANGULAR, POINCARE_BALL, EULER_SU2)

# Default relative step for finite-difference partials of raw fields,
# as a fraction of the smallest axis extent.  4th-order central stencils.
DEFAULT_FD_REL_STEP = 1e-3


@dataclass(frozen=True)
class ChartDomain:
    """A box in chart coordinates together with periodicity flags."""

    dimension: int
    bounds: tuple[tuple[float, float], ...]
    periodic: tuple[bool, ...]
    kind: str

    def __post_init__(self):
        n = self.dimension
        if n < 2:
            raise ConfigurationError(f"chart dimension must be >= 2, got {n}")
        if self.kind not in _CHART_KINDS:
            raise ConfigurationError(f"unknown chart kind {self.kind!r}")
        if len(self.bounds) != n or len(self.periodic) != n:
            raise ConfigurationError("bounds/periodic length must equal dimension")
        for lo, hi in self.bounds:
            if not (lo < hi):
                raise ConfigurationError(f"degenerate interval [{lo}, {hi}]")
        if self.kind == POINCARE_BALL:
            # every box corner must stay strictly inside the unit ball
            corner = np.sqrt(sum(max(lo * lo, hi * hi) for lo, hi in self.bounds))
            if corner >= 1.0:
                raise ConfigurationError(
                    f"Poincare box reaches radius {corner:.3f} >= 1"
                )

    @property
    def extents(self) -> Array:
        b = np.asarray(self.bounds, dtype=float)
        return b[:, 1] - b[:, 0]

    @property
    def coordinate_volume(self) -> float:
        return float(np.prod(self.extents))


def torus_domain(n: int, lengths: Sequence[float] | None = None) -> ChartDomain:
    lengths = [1.0] * n if lengths is None else list(lengths)
    if len(lengths) != n:
        raise ConfigurationError("need one length per axis")
    return ChartDomain(
        dimension=n,
        bounds=tuple((0.0, float(L)) for L in lengths),
        periodic=(True,) * n,
        kind=TORUS_BOX,
    )


def sphere_domain(n: int) -> ChartDomain:
    """Angular chart on S^n: n-1 polar angles in (0, pi), one azimuth."""
    bounds = tuple([(0.0, np.pi)] * (n - 1) + [(0.0, 2 * np.pi)])
    periodic = tuple([False] * (n - 1) + [True])
    return ChartDomain(n, bounds, periodic, SPHERE_ANGULAR)


def poincare_domain(n: int, r_max: float = 0.45) -> ChartDomain:
    half = r_max / np.sqrt(n)
    return ChartDomain(
        n, tuple(((-half, half),) * n), (False,) * n, POINCARE_BALL
    )


def euler_su2_domain() -> ChartDomain:
    bounds = ((0.0, np.pi), (0.0, 2 * np.pi), (0.0, 4 * np.pi))
    return ChartDomain(3, bounds, (False, True, True), EULER_SU2)


def _as_batch(x: Array | Sequence[float], n: int) -> tuple[Array, bool]:
    X = np.asarray(x, dtype=float)
    if X.ndim == 1:
        if X.shape[0] != n:
            raise DimensionError(f"point has {X.shape[0]} coords, chart has {n}")
        return X[None, :], True
    if X.ndim != 2 or X.shape[1] != n:
        raise DimensionError(f"expected (N, {n}) batch of points, got {X.shape}")
    return X, False


def fd_partials(fn: Callable[[Array], Array], X: Array, steps: Array) -> Array:
    """4th-order central partials of a batched map.

    ``fn`` maps ``(M, n)`` points to ``(M, *comp)`` arrays; the result has
    shape ``(N, *comp, n)`` with the derivative axis appended last.
    """
    N, n = X.shape
    base = np.asarray(fn(X))
    out = np.empty(base.shape + (n,), dtype=float)
    for k in range(n):
        h = steps[k]
        e = np.zeros(n)
        e[k] = h
        f1 = fn(X + e)
        f_1 = fn(X - e)
        f2 = fn(X + 2 * e)
        f_2 = fn(X - 2 * e)
        out[..., k] = (f_2 - 8 * f_1 + 8 * f1 - f2) / (12 * h)
    return out


@dataclass
class _TensorValuedField:
    """Shared plumbing for metric / symmetric-tensor / covector / scalar fields."""

    domain: ChartDomain
    _eval: Callable[[Array], Array]
    _d1: Callable[[Array], Array] | None = None
    _d2: Callable[[Array], Array] | None = None
    fd_rel_step: float = DEFAULT_FD_REL_STEP
    name: str = "field"

    @property
    def dimension(self) -> int:
        return self.domain.dimension

    @property
    def deriv_mode(self) -> str:
        return "analytic" if self._d1 is not None else "finite-difference"

    def _steps(self) -> Array:
        h = self.fd_rel_step * float(np.min(self.domain.extents))
        return np.full(self.dimension, h)

    def eval_grid(self, X: Array) -> Array:
        X, _ = _as_batch(X, self.dimension)
        return np.asarray(self._eval(X), dtype=float)

    def d1_grid(self, X: Array) -> Array:
        X, _ = _as_batch(X, self.dimension)
        if self._d1 is not None:
            return np.asarray(self._d1(X), dtype=float)
        return fd_partials(self._eval, X, self._steps())

    def d2_grid(self, X: Array) -> Array:
        X, _ = _as_batch(X, self.dimension)
        if self._d2 is not None:
            return np.asarray(self._d2(X), dtype=float)
        return fd_partials(lambda Y: self.d1_grid(Y), X, self._steps())


@dataclass
class MetricField(_TensorValuedField):
    """A Riemannian metric on a chart, with derivative access.

    ``eval_grid`` returns symmetric positive-definite component matrices.
    ``lam`` records the sectional curvature when the field is a built-in
    space form (None for generic fields); ``supports_global_quadrature``
    is False for charts that only cover a non-compact model (hyperbolic),
    in which case all integral operations refuse the field.
    """

    lam: float | None = None
    model_kind: str | None = None
    radius: float | None = None
    supports_global_quadrature: bool = True

    def metric(self, x) -> Array:
        X, single = _as_batch(x, self.dimension)
        g = self.eval_grid(X)
        return g[0] if single else g

    def metric_grid(self, X: Array) -> Array:
        return self.eval_grid(X)

    def rescaled(self, c: float) -> "MetricField":
        """The metric c*g (c a positive constant)."""
        if c <= 0:
            raise ConfigurationError("scale factor must be positive")
        ev, d1, d2 = self._eval, self._d1, self._d2
        return replace(
            self,
            _eval=lambda X: c * ev(X),
            _d1=None if d1 is None else (lambda X: c * d1(X)),
            _d2=None if d2 is None else (lambda X: c * d2(X)),
            lam=None if self.lam is None else self.lam / c,
            radius=None if self.radius is None else self.radius * np.sqrt(c),
            name=f"{self.name}*{c:g}",
        )


@dataclass
class SymTensorField(_TensorValuedField):
    """A symmetric (0,2) tensor field (metric perturbation direction)."""

    def components(self, x) -> Array:
        X, single = _as_batch(x, self.dimension)
        h = self.eval_grid(X)
        return h[0] if single else h

    def scaled(self, c: float) -> "SymTensorField":
        ev, d1, d2 = self._eval, self._d1, self._d2
        return replace(
            self,
            _eval=lambda X: c * ev(X),
            _d1=None if d1 is None else (lambda X: c * d1(X)),
            _d2=None if d2 is None else (lambda X: c * d2(X)),
            name=f"{self.name}*{c:g}",
        )


@dataclass
class CovectorField(_TensorValuedField):
    """A 1-form field; eval shape (N, n)."""


@dataclass
class ScalarField(_TensorValuedField):
    """A scalar field; eval shape (N,)."""


def metric_as_sym_tensor(g: MetricField) -> SymTensorField:
    """View a metric as a symmetric 2-tensor field (e.g. the direction h = g)."""
    return SymTensorField(
        domain=g.domain,
        _eval=g._eval,
        _d1=g._d1,
        _d2=g._d2,
        fd_rel_step=g.fd_rel_step,
        name=f"{g.name} (as tensor)",
    )


def linear_combination_metric(
    base: MetricField, h: SymTensorField, t: float, scale: float = 1.0
) -> MetricField:
    """The metric scale*(base + t*h); derivatives combine linearly."""
    if h.dimension != base.dimension:
        raise DimensionError("perturbation dimension mismatch")
    be, bd1, bd2 = base._eval, base._d1, base._d2
    he, hd1, hd2 = h._eval, h._d1, h._d2

    def ev(X):
        return scale * (np.asarray(be(X)) + t * np.asarray(he(X)))

    analytic = bd1 is not None and hd1 is not None

    def d1(X):
        return scale * (np.asarray(bd1(X)) + t * np.asarray(hd1(X)))

    def d2(X):
        return scale * (np.asarray(bd2(X)) + t * np.asarray(hd2(X)))

    return MetricField(
        domain=base.domain,
        _eval=ev,
        _d1=d1 if analytic else None,
        _d2=d2 if analytic else None,
        fd_rel_step=base.fd_rel_step,
        lam=None,
        model_kind=None,
        radius=None,
        supports_global_quadrature=base.supports_global_quadrature,
        name=f"{base.name}+{t:g}*{h.name}",
    )


# ---------------------------------------------------------------------------
# sympy-backed analytic fields
# ---------------------------------------------------------------------------


def _lambdify_tensor(coords, exprs: np.ndarray) -> Callable[[Array], Array]:
    """Lambdify an object array of sympy expressions into a batched evaluator."""
    shape = exprs.shape
    flat = [sp.sympify(e) for e in exprs.ravel()]
    fn = sp.lambdify(coords, flat, modules="numpy")

    def ev(X: Array) -> Array:
        args = [X[:, k] for k in range(X.shape[1])]
        vals = fn(*args)
        N = X.shape[0]
        cols = [np.broadcast_to(np.asarray(v, dtype=float), (N,)) for v in vals]
        out = np.stack(cols, axis=-1)
        return out.reshape((N,) + shape)

    return ev


def _diff_tensor(exprs: np.ndarray, coords) -> np.ndarray:
    out = np.empty(exprs.shape + (len(coords),), dtype=object)
    for idx in np.ndindex(exprs.shape):
        for k, c in enumerate(coords):
            out[idx + (k,)] = sp.diff(exprs[idx], c)
    return out


def _analytic_callables(coords, exprs: np.ndarray):
    d1 = _diff_tensor(exprs, coords)
    d2 = _diff_tensor(d1, coords)
    return (
        _lambdify_tensor(coords, exprs),
        _lambdify_tensor(coords, d1),
        _lambdify_tensor(coords, d2),
    )


def analytic_metric_field(
    domain: ChartDomain, coords, g_expr: sp.Matrix, **meta
) -> MetricField:
    n = domain.dimension
    exprs = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            exprs[i, j] = sp.simplify(g_expr[i, j])
    ev, d1, d2 = _analytic_callables(coords, exprs)
    return MetricField(domain=domain, _eval=ev, _d1=d1, _d2=d2, **meta)


def analytic_sym_tensor_field(
    domain: ChartDomain, coords, h_expr: sp.Matrix, name: str = "h"
) -> SymTensorField:
    n = domain.dimension
    exprs = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            if sp.simplify(h_expr[i, j] - h_expr[j, i]) != 0:
                raise DimensionError("symmetric tensor expression is not symmetric")
            exprs[i, j] = h_expr[i, j]
    ev, d1, d2 = _analytic_callables(coords, exprs)
    return SymTensorField(domain=domain, _eval=ev, _d1=d1, _d2=d2, name=name)


def analytic_scalar_field(
    domain: ChartDomain, coords, f_expr, name: str = "f"
) -> ScalarField:
    exprs = np.empty((), dtype=object)
    exprs[()] = sp.sympify(f_expr)
    ev, d1, d2 = _analytic_callables(coords, exprs)
    return ScalarField(domain=domain, _eval=ev, _d1=d1, _d2=d2, name=name)


# ---------------------------------------------------------------------------
# Trigonometric fields on the torus (closed-form derivatives, no sympy)
# ---------------------------------------------------------------------------


def trig_sym_tensor_field(
    domain: ChartDomain,
    waves: Sequence[tuple[Array, Array, Array]],
    name: str = "trig",
) -> SymTensorField:
    """h(x) = sum_m C_m cos(2 pi k_m.x) + S_m sin(2 pi k_m.x).

    Each wave is a triple (k, C, S) with integer wave vector k and constant
    symmetric matrices C, S.  Exact derivatives of all orders.
    """
    n = domain.dimension
    packed = []
    for k, C, S in waves:
        k = np.asarray(k, dtype=float)
        C = np.asarray(C, dtype=float)
        S = np.asarray(S, dtype=float)
        if C.shape != (n, n) or S.shape != (n, n) or k.shape != (n,):
            raise DimensionError("wave component shapes do not match dimension")
        if not (np.array_equal(C, C.T) and np.array_equal(S, S.T)):
            raise DimensionError("wave amplitude matrices must be symmetric")
        packed.append((2 * np.pi * k, C, S))

    def ev(X):
        out = np.zeros((X.shape[0], n, n))
        for w, C, S in packed:
            phase = X @ w
            out += np.cos(phase)[:, None, None] * C + np.sin(phase)[:, None, None] * S
        return out

    def d1(X):
        out = np.zeros((X.shape[0], n, n, n))
        for w, C, S in packed:
            phase = X @ w
            c, s = np.cos(phase), np.sin(phase)
            out += np.einsum("a,ij,k->aijk", -s, C, w)
            out += np.einsum("a,ij,k->aijk", c, S, w)
        return out

    def d2(X):
        out = np.zeros((X.shape[0], n, n, n, n))
        for w, C, S in packed:
            phase = X @ w
            c, s = np.cos(phase), np.sin(phase)
            out += np.einsum("a,ij,k,l->aijkl", -c, C, w, w)
            out += np.einsum("a,ij,k,l->aijkl", -s, S, w, w)
        return out

    return SymTensorField(domain=domain, _eval=ev, _d1=d1, _d2=d2, name=name)


def random_torus_sym_tensor(
    n: int,
    rng: np.random.Generator,
    amplitude: float = 1.0,
    modes: int = 2,
    lengths: Sequence[float] | None = None,
) -> SymTensorField:
    """Random smooth symmetric tensor field on the unit torus."""
    dom = torus_domain(n, lengths)
    waves = []
    for _ in range(modes):
        k = np.zeros(n)
        while not k.any():
            k = rng.integers(-2, 3, size=n).astype(float)
        C = rng.standard_normal((n, n))
        S = rng.standard_normal((n, n))
        waves.append((k, amplitude * (C + C.T) / 2, amplitude * (S + S.T) / 2))
    return trig_sym_tensor_field(dom, waves, name="random torus tensor")


def random_torus_metric(
    n: int,
    rng: np.random.Generator,
    amplitude: float = 0.05,
    modes: int = 2,
) -> MetricField:
    """Identity metric plus a small random trigonometric perturbation."""
    pert = random_torus_sym_tensor(n, rng, amplitude=amplitude, modes=modes)
    dom = pert.domain
    pe, pd1, pd2 = pert._eval, pert._d1, pert._d2
    eye = np.eye(n)

    def ev(X):
        return eye[None, :, :] + pe(X)

    return MetricField(
        domain=dom,
        _eval=ev,
        _d1=pd1,
        _d2=pd2,
        lam=None,
        model_kind=None,
        name="perturbed torus",
    )


def cosine_scalar_field(domain: ChartDomain, k: Sequence[float]) -> ScalarField:
    """f(x) = cos(2 pi k.x) with closed-form derivatives."""
    w = 2 * np.pi * np.asarray(k, dtype=float)
    if w.shape != (domain.dimension,):
        raise DimensionError("wave vector length must match the chart dimension")

    def ev(X):
        return np.cos(X @ w)

    def d1(X):
        return np.einsum("a,k->ak", -np.sin(X @ w), w)

    def d2(X):
        return np.einsum("a,k,l->akl", -np.cos(X @ w), w, w)

    return ScalarField(
        domain=domain, _eval=ev, _d1=d1, _d2=d2, name=f"cos(2pi {list(k)}.x)"
    )


_SPHERE_JET_CACHE: dict = {}


def _sphere_embedding_jet(n: int, radius: float):
    """Lambdified jet (Y, J, dJ, d2J) of the round embedding into R^{n+1}.

    J[a, A, i] = dY_A/dx^i and so on; cached per (n, radius).
    """
    key = (n, float(radius))
    if key in _SPHERE_JET_CACHE:
        return _SPHERE_JET_CACHE[key]
    coords = sp.symbols(f"t0:{n}")
    Y = []
    for A in range(n + 1):
        expr = sp.Float(radius)
        for m in range(min(A, n)):
            expr = expr * sp.sin(coords[m])
        if A < n:
            expr = expr * sp.cos(coords[A])
        Y.append(sp.simplify(expr))
    Yarr = np.empty(n + 1, dtype=object)
    Yarr[:] = Y
    Jarr = _diff_tensor(Yarr, coords)
    dJarr = _diff_tensor(Jarr, coords)
    d2Jarr = _diff_tensor(dJarr, coords)
    jet = tuple(_lambdify_tensor(coords, a) for a in (Yarr, Jarr, dJarr, d2Jarr))
    _SPHERE_JET_CACHE[key] = jet
    return jet


def sphere_pullback_sym_tensor(
    n: int,
    P0: Array,
    P1: Array | None = None,
    radius: float = 1.0,
    name: str = "sphere pullback tensor",
) -> SymTensorField:
    """Pull back the ambient tensor P_AB(y) = P0_AB + P1_ABc y_c to S^n.

    The result is a globally smooth symmetric tensor field on the sphere
    (not merely chart-smooth), which is what the integration-by-parts
    identities require.
    """
    m = n + 1
    P0 = np.asarray(P0, dtype=float)
    if P0.shape != (m, m) or not np.allclose(P0, P0.T):
        raise DimensionError(f"P0 must be symmetric {m}x{m}")
    if P1 is not None:
        P1 = np.asarray(P1, dtype=float)
        if P1.shape != (m, m, m):
            raise DimensionError(f"P1 must have shape {(m, m, m)}")
    Yf, Jf, dJf, d2Jf = _sphere_embedding_jet(n, radius)

    def P_at(Y):
        P = np.broadcast_to(P0, (Y.shape[0], m, m)).copy()
        if P1 is not None:
            P += np.einsum("ABc,ac->aAB", P1, Y)
        return P

    def ev(X):
        Y, J = Yf(X), Jf(X)
        return np.einsum("aAi,aAB,aBj->aij", J, P_at(Y), J)

    def d1(X):
        Y, J, dJ = Yf(X), Jf(X), dJf(X)
        P = P_at(Y)
        out = np.einsum("aAik,aAB,aBj->aijk", dJ, P, J)
        out += np.einsum("aAi,aAB,aBjk->aijk", J, P, dJ)
        if P1 is not None:
            dP = np.einsum("ABc,ack->aABk", P1, J)
            out += np.einsum("aAi,aABk,aBj->aijk", J, dP, J)
        return out

    def d2(X):
        Y, J, dJ, d2J = Yf(X), Jf(X), dJf(X), d2Jf(X)
        P = P_at(Y)
        out = np.einsum("aAikl,aAB,aBj->aijkl", d2J, P, J)
        out += np.einsum("aAik,aAB,aBjl->aijkl", dJ, P, dJ)
        out += np.einsum("aAil,aAB,aBjk->aijkl", dJ, P, dJ)
        out += np.einsum("aAi,aAB,aBjkl->aijkl", J, P, d2J)
        if P1 is not None:
            dP = np.einsum("ABc,ack->aABk", P1, J)
            d2P = np.einsum("ABc,ackl->aABkl", P1, dJ)
            out += np.einsum("aAik,aABl,aBj->aijkl", dJ, dP, J)
            out += np.einsum("aAil,aABk,aBj->aijkl", dJ, dP, J)
            out += np.einsum("aAi,aABk,aBjl->aijkl", J, dP, dJ)
            out += np.einsum("aAi,aABl,aBjk->aijkl", J, dP, dJ)
            out += np.einsum("aAi,aABkl,aBj->aijkl", J, d2P, J)
        return out

    return SymTensorField(
        domain=sphere_domain(n), _eval=ev, _d1=d1, _d2=d2, name=name
    )


def random_sphere_sym_tensor(
    n: int,
    rng: np.random.Generator,
    radius: float = 1.0,
    amplitude: float = 1.0,
) -> SymTensorField:
    """Random globally smooth symmetric tensor on the round sphere."""
    m = n + 1
    A0 = rng.standard_normal((m, m))
    A1 = rng.standard_normal((m, m, m))
    P0 = amplitude * (A0 + A0.T) / 2
    P1 = amplitude * (A1 + A1.transpose(1, 0, 2)) / 2
    return sphere_pullback_sym_tensor(
        n, P0, P1, radius=radius, name="random sphere tensor"
    )
