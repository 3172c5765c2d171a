"""First and second variations of the quadratic curvature functionals.

The metric family is g(t) = a(t) (g0 + t h).  With a = 1 ("raw") the first
variation of F equals int G_ij h^ij dV, where G is the gradient tensor
assembled in :func:`gradient_tensor`.  With the "constant-rescale"
normalization a(t) is the constant making Vol(g(t)) = Vol(g0), which is the
volume-preserving path along which the second-variation formulas at
constant-curvature critical metrics hold.

Derivative bookkeeping: primes denote d/dt at t = 0.  The variation of the
Levi-Civita connection is

    (Gamma^k_ij)' = 1/2 g^{kl} (h_il,j + h_jl,i - h_ij,l)

and the curvature variations follow from it; all covariant derivatives are
taken with the unperturbed connection and use the index order
h_ij,kl = nabla_l nabla_k h_ij.  Quantities that need derivatives of
curvature (Lap Ric, Hess R) are produced by the finite-difference engine of
:mod:`curvlab.tensors` applied to pointwise-exact curvature evaluations.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .atlas import p1, p2
from .charts import QuadratureGrid, sqrt_det_grid, volume
from .errors import (
    EigenvalueRangeError,
    GlobalIntegralUnsupportedError,
    PreconditionError,
)
from .fields import (
    Array,
    MetricField,
    ScalarField,
    SymTensorField,
    _as_batch,
    linear_combination_metric,
)
from .functionals import Coefficients, evaluate
from .tensors import (
    FIELD_FD_REL_STEP,
    CurvatureBundle,
    christoffel_arrays,
    covariant_hessian_blocks,
    curvature_grid,
    einstein_defect,
    max_abs,
    norm2_02,
    raise_all,
    ricci_arrays,
    sym_tensor_cov_derivs,
)

RAW = "raw"
CONSTANT_RESCALE = "constant-rescale"

UNIT_VOLUME_TOL = 1e-6
SPACE_FORM_TOL = 1e-6


def conformal_tensor(base: MetricField, f: ScalarField) -> SymTensorField:
    """The conformal direction h = f * g with exact derivative plumbing."""
    ge, gd1, gd2 = base._eval, base._d1, base._d2
    fe, fd1, fd2 = f._eval, f._d1, f._d2

    def ev(X):
        return np.asarray(fe(X))[:, None, None] * np.asarray(ge(X))

    analytic = gd1 is not None and fd1 is not None

    def d1(X):
        g, dg = np.asarray(ge(X)), np.asarray(gd1(X))
        fv, df = np.asarray(fe(X)), np.asarray(fd1(X))
        return np.einsum("ak,aij->aijk", df, g) + fv[:, None, None, None] * dg

    def d2(X):
        g, dg, d2g = np.asarray(ge(X)), np.asarray(gd1(X)), np.asarray(gd2(X))
        fv, df, d2f = np.asarray(fe(X)), np.asarray(fd1(X)), np.asarray(fd2(X))
        out = np.einsum("akl,aij->aijkl", d2f, g)
        out += np.einsum("ak,aijl->aijkl", df, dg)
        out += np.einsum("al,aijk->aijkl", df, dg)
        out += fv[:, None, None, None, None] * d2g
        return out

    return SymTensorField(
        domain=base.domain,
        _eval=ev,
        _d1=d1 if analytic else None,
        _d2=d2 if analytic else None,
        name=f"{f.name}*g",
    )


# ---------------------------------------------------------------------------
# Connection and curvature variations
# ---------------------------------------------------------------------------


def christoffel_variation(base: MetricField, h: SymTensorField, x) -> Array:
    """(Gamma^k_ij)' = 1/2 g^{kl}(h_il,j + h_jl,i - h_ij,l); shape (n,n,n)."""
    X, single = _as_batch(x, base.dimension)
    _, Dh, _, _, ginv, _ = sym_tensor_cov_derivs(base, h, X)
    S = (
        np.einsum("ailj->alij", Dh)
        + np.einsum("ajli->alij", Dh)
        - np.einsum("aijl->alij", Dh)
    )
    out = 0.5 * np.einsum("akl,alij->akij", ginv, S)
    return out[0] if single else out


def curvature_variation_arrays(base: MetricField, h: SymTensorField, X: Array) -> dict:
    """Batched variations of curvature under (g_ij)' = h_ij.

    Returns dRm13 (variation of R^l_ijk), dRm4 (of the lowered tensor),
    dRic, dR, plus the covariant-derivative scratch arrays of h.
    """
    X, _ = _as_batch(X, base.dimension)
    bundle = curvature_grid(base, X)
    hv, Dh, D2h, g, ginv, _ = sym_tensor_cov_derivs(base, h, X)

    # combo[a,p,i,j,k] = h_ip,kj + h_kp,ij - h_ik,pj - h_ip,jk - h_jp,ik + h_ij,pk
    combo = (
        np.einsum("aipkj->apijk", D2h)
        + np.einsum("akpij->apijk", D2h)
        - np.einsum("aikpj->apijk", D2h)
        - np.einsum("aipjk->apijk", D2h)
        - np.einsum("ajpik->apijk", D2h)
        + np.einsum("aijpk->apijk", D2h)
    )
    dRm13 = 0.5 * np.einsum("apl,apijk->alijk", ginv, combo)
    # the lowered variation reuses combo with its first component slot read as l
    dRm4 = np.einsum("alq,aqijk->alijk", hv, bundle.Rm13) + 0.5 * combo
    hup = raise_all(hv, ginv, (0, 1))
    term1 = np.einsum("ajp,apikj->aik", ginv, D2h)  # h^j_{i,kj}
    term2 = np.einsum("ajp,apkij->aik", ginv, D2h)  # h^j_{k,ij}
    lap_h = np.einsum("akl,aijkl->aij", ginv, D2h)
    hess_H = np.einsum("apq,apqik->aik", ginv, D2h)  # (tr h)_{,ik}
    dRic = 0.5 * (term1 + term2 - lap_h - hess_H)
    div2 = np.einsum("aip,ajq,apqij->a", ginv, ginv, D2h)  # h^{ij}_{,ij}
    lap_H = np.einsum("aik,aik->a", ginv, hess_H)
    dR = -np.einsum("aij,aij->a", hup, bundle.Ric) + div2 - lap_H
    return {
        "bundle": bundle,
        "h": hv,
        "hup": hup,
        "Dh": Dh,
        "D2h": D2h,
        "lap_h": lap_h,
        "dRm13": dRm13,
        "dRm4": dRm4,
        "dRic": dRic,
        "dR": dR,
        "ginv": ginv,
        "g": g,
    }


def curvature_variations(base: MetricField, h: SymTensorField, x) -> dict:
    """Pointwise variations {dRm13, dRm4, dRic, dR} at x."""
    X, single = _as_batch(x, base.dimension)
    arrs = curvature_variation_arrays(base, h, X)
    keys = ("dRm13", "dRm4", "dRic", "dR")
    if single:
        return {k: arrs[k][0] for k in keys}
    return {k: arrs[k] for k in keys}


# ---------------------------------------------------------------------------
# Gradient tensor and Euler-Lagrange residual
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GradientTensor:
    """Pointwise gradients of the three energies and their combination."""

    grad_riemann: Array  # gradient of int |Rm|^2
    grad_ricci: Array  # gradient of int |Ric|^2
    grad_scalar: Array  # gradient of int R^2
    grad_total: Array


PARALLEL_CURVATURE_TOL = 1e-9


def _is_verified_space_form(base: MetricField, bundle: CurvatureBundle) -> bool:
    """True when the field declares constant curvature and the computed
    curvature confirms it pointwise to well below working tolerance."""
    lam = base.lam
    if lam is None:
        return False
    model = lam * (
        np.einsum("alj,aik->alijk", bundle.g, bundle.g)
        - np.einsum("alk,aij->alijk", bundle.g, bundle.g)
    )
    return max_abs(bundle.Rm4 - model) <= PARALLEL_CURVATURE_TOL * max(1.0, abs(lam))


def gradient_ingredients(
    base: MetricField,
    X: Array,
    rel_step: float = FIELD_FD_REL_STEP,
    use_structure: bool = True,
) -> dict:
    """Curvature contractions and curvature derivatives entering the gradient.

    The Laplacian of the Ricci tensor and the Hessian of the scalar
    curvature share one nested finite-difference pass over a lean
    Ricci-only evaluation; these reuse across coefficient choices.

    Constant-curvature metrics have parallel curvature, so when the field
    declares a space form and the declaration is confirmed pointwise on
    these nodes the derivative ingredients are exact zeros; near-pole nodes
    of angular charts would otherwise lose ~6 digits to the conditioning of
    nested differences (set ``use_structure=False`` to force the generic
    path).
    """
    X, _ = _as_batch(X, base.dimension)
    bundle = curvature_grid(base, X)
    ginv = bundle.ginv
    Rm_up3 = raise_all(bundle.Rm4, ginv, (1, 2, 3))
    A1 = np.einsum("aiplk,ajplk->aij", bundle.Rm4, Rm_up3)
    ric_up = raise_all(bundle.Ric, ginv, (0, 1))
    B = np.einsum("apl,aipjl->aij", ric_up, bundle.Rm4)
    ric2 = np.einsum("aip,apq,aqj->aij", bundle.Ric, ginv, bundle.Ric)

    if use_structure and _is_verified_space_form(base, bundle):
        N, n = X.shape
        lap_ric = np.zeros((N, n, n))
        hess_R = np.zeros((N, n, n))
        lap_R = np.zeros(N)
    else:
        def inner(Y):
            _, _, _, _, Ric, R = ricci_arrays(base, Y)
            return [Ric, R]

        ric_hess, r_hess = covariant_hessian_blocks(base, inner, [2, 0], X, rel_step)
        lap_ric = np.einsum("akl,aijkl->aij", ginv, ric_hess)
        hess_R = r_hess
        lap_R = np.einsum("aik,aik->a", ginv, hess_R)
    return {
        "bundle": bundle,
        "A1": A1,
        "B": B,
        "ric2": ric2,
        "lap_ric": lap_ric,
        "hess_R": hess_R,
        "lap_R": lap_R,
    }


def _gradient_parts(ing: dict) -> tuple[Array, Array, Array]:
    b: CurvatureBundle = ing["bundle"]
    g = b.g
    gR = (
        -2 * ing["A1"]
        + 2 * ing["hess_R"]
        - 4 * ing["lap_ric"]
        - 4 * ing["B"]
        + 4 * ing["ric2"]
        + 0.5 * b.normRm2[:, None, None] * g
    )
    gRic = (
        -ing["lap_ric"]
        - 2 * ing["B"]
        + ing["hess_R"]
        - 0.5 * ing["lap_R"][:, None, None] * g
        + 0.5 * b.normRic2[:, None, None] * g
    )
    gS = (
        2 * ing["hess_R"]
        - 2 * ing["lap_R"][:, None, None] * g
        - 2 * b.R[:, None, None] * b.Ric
        + 0.5 * (b.R**2)[:, None, None] * g
    )
    return gR, gRic, gS


def gradient_tensor(base: MetricField, x, coeff: Coefficients) -> GradientTensor:
    """Gradient tensors at a point (or batch of points)."""
    X, single = _as_batch(x, base.dimension)
    ing = gradient_ingredients(base, X)
    gR, gRic, gS = _gradient_parts(ing)
    total = gR + coeff.s * gRic + coeff.tau * gS
    if single:
        return GradientTensor(gR[0], gRic[0], gS[0], total[0])
    return GradientTensor(gR, gRic, gS, total)


def _lagrange_constant_pointwise(ing: dict, coeff: Coefficients, n: int) -> Array:
    b: CurvatureBundle = ing["bundle"]
    density = b.normRm2 + coeff.s * b.normRic2 + coeff.tau * b.R**2
    return (
        (n - 4) * density - (4 + n * coeff.s + 4 * (n - 1) * coeff.tau) * ing["lap_R"]
    ) / (2 * n)


def lagrange_constant(
    base: MetricField, grid: QuadratureGrid, coeff: Coefficients
) -> float:
    """Volume average of the trace identity defining the multiplier c."""
    ing = gradient_ingredients(base, grid.nodes)
    c_pt = _lagrange_constant_pointwise(ing, coeff, base.dimension)
    measure = grid.weights * sqrt_det_grid(base, grid)
    return float(np.sum(measure * c_pt) / np.sum(measure))


def first_variation(
    base: MetricField, grid: QuadratureGrid, h: SymTensorField, coeff: Coefficients
) -> float:
    """int G_ij h^{ij} dV along the raw family."""
    if not base.supports_global_quadrature:
        raise GlobalIntegralUnsupportedError("first variation needs global integrals")
    X = grid.nodes
    G = gradient_tensor(base, X, coeff).grad_total
    hv = h.eval_grid(X)
    ginv = np.linalg.inv(base.metric_grid(X))
    hup = raise_all(hv, ginv, (0, 1))
    density = np.einsum("aij,aij->a", G, hup)
    measure = grid.weights * sqrt_det_grid(base, grid)
    return float(np.sum(measure * density))


def first_variation_numeric(
    base: MetricField,
    grid: QuadratureGrid,
    h: SymTensorField,
    coeff: Coefficients,
    t_step: float = 1e-2,
) -> float:
    """Richardson-extrapolated central difference of F along g + t h."""

    def F(t: float) -> float:
        return evaluate(linear_combination_metric(base, h, t), grid, coeff).F

    def D(dt: float) -> float:
        return (F(dt) - F(-dt)) / (2 * dt)

    d1 = D(t_step)
    d2 = D(t_step / 2)
    d3 = D(t_step / 4)
    r1 = (4 * d2 - d1) / 3
    r2 = (4 * d3 - d2) / 3
    return (16 * r2 - r1) / 15


def el_residual(
    base: MetricField,
    grid: QuadratureGrid,
    coeff: Coefficients,
    ingredients: dict | None = None,
) -> tuple[float, float]:
    """Sup-norm (componentwise, over all nodes) of the trace-free
    Euler-Lagrange tensor, and the multiplier c from its trace.

    The base must have unit quadrature volume (rescale with
    :func:`curvlab.charts.to_unit_volume` first).  ``ingredients`` may pass
    the output of :func:`gradient_ingredients` on this grid, which does not
    depend on (s, tau).
    """
    vol = volume(base, grid)
    if abs(vol - 1.0) > UNIT_VOLUME_TOL:
        raise PreconditionError(
            f"Euler-Lagrange residual needs a unit-volume base (vol = {vol:.6g})"
        )
    n = base.dimension
    s, tau = coeff.s, coeff.tau
    ing = gradient_ingredients(base, grid.nodes) if ingredients is None else ingredients
    b: CurvatureBundle = ing["bundle"]
    g = b.g
    density = b.normRm2 + s * b.normRic2 + tau * b.R**2
    E = (
        -(4 + s) * ing["lap_ric"]
        + (2 + s + 2 * tau) * ing["hess_R"]
        + ((2 - 2 * tau) / n) * ing["lap_R"][:, None, None] * g
        - 2 * ing["A1"]
        - (4 + 2 * s) * ing["B"]
        + 4 * ing["ric2"]
        - 2 * tau * b.R[:, None, None] * b.Ric
        + (2.0 / n) * density[:, None, None] * g
    )
    residual = max_abs(E)
    c_pt = _lagrange_constant_pointwise(ing, coeff, n)
    measure = grid.weights * sqrt_det_grid(base, grid)
    c = float(np.sum(measure * c_pt) / np.sum(measure))
    return residual, c


def einstein_criticality_defect(base: MetricField, grid: QuadratureGrid) -> float:
    """sup_x |R_i^{plk} R_jplk - (1/n) |Rm|^2 g_ij| over the grid
    (componentwise).  Zero exactly when the Einstein base is critical for
    every (s, tau)."""
    n = base.dimension
    bundle = curvature_grid(base, grid.nodes)
    if float(np.max(einstein_defect(bundle))) > SPACE_FORM_TOL * max(
        1.0, float(np.max(np.abs(bundle.R))) / n
    ):
        raise PreconditionError("base metric is not Einstein on this grid")
    Rm_up3 = raise_all(bundle.Rm4, bundle.ginv, (1, 2, 3))
    A1 = np.einsum("aiplk,ajplk->aij", bundle.Rm4, Rm_up3)
    D = A1 - (bundle.normRm2 / n)[:, None, None] * bundle.g
    return max_abs(D)


# ---------------------------------------------------------------------------
# Perturbation families and numeric second variations
# ---------------------------------------------------------------------------


@dataclass
class PerturbationFamily:
    """The family g(t) = a(t) (base + t h).

    With normalization "constant-rescale" the constant a(t) keeps the total
    volume pinned at Vol(base) for every t (so a(0) = 1 and g(0) is the base
    itself); "raw" leaves a = 1.
    """

    base: MetricField
    h: SymTensorField
    normalization: str = CONSTANT_RESCALE

    def __post_init__(self):
        if self.normalization not in (RAW, CONSTANT_RESCALE):
            raise PreconditionError(f"unknown normalization {self.normalization!r}")

    def scale_factor(self, t: float, grid: QuadratureGrid) -> float:
        if self.normalization == RAW or t == 0.0:
            return 1.0
        base_vol = volume(self.base, grid)
        vol_t = volume(linear_combination_metric(self.base, self.h, t), grid)
        return (base_vol / vol_t) ** (2.0 / self.base.dimension)

    def metric_at(self, t: float, grid: QuadratureGrid) -> MetricField:
        if t == 0.0:
            return self.base
        a = self.scale_factor(t, grid)
        return linear_combination_metric(self.base, self.h, t, scale=a)

    def metric_t_derivative(
        self, X: Array, grid: QuadratureGrid, order: int = 1, dt: float = 1e-3
    ) -> Array:
        """Richardson-extrapolated central t-derivative of the metric along
        the family (first or second order in t)."""

        def diff(step):
            gp = self.metric_at(step, grid).metric_grid(X)
            gm = self.metric_at(-step, grid).metric_grid(X)
            if order == 1:
                return (gp - gm) / (2 * step)
            g0 = self.base.metric_grid(X)
            return (gp - 2 * g0 + gm) / step**2

        coarse, fine = diff(dt), diff(dt / 2)
        return (4 * fine - coarse) / 3


class D2Numeric(NamedTuple):
    value: float
    rel_err_estimate: float


def second_variation_numeric(
    family: PerturbationFamily,
    grid: QuadratureGrid,
    coeff: Coefficients,
    t_step: float = 1e-2,
) -> D2Numeric:
    """Richardson-extrapolated second difference of F along the family.

    Requires the constant-rescale normalization and a constant-curvature
    (hence critical) base.
    """
    if family.normalization != CONSTANT_RESCALE:
        raise PreconditionError("second variation requires the rescaled family")
    if family.base.lam is None:
        raise PreconditionError("second variation is evaluated at space-form bases")

    def F(t: float) -> float:
        return evaluate(family.metric_at(t, grid), grid, coeff).F

    F0 = F(0.0)

    def D(dt: float) -> float:
        return (F(dt) - 2 * F0 + F(-dt)) / dt**2

    coarse = D(t_step)
    fine = D(t_step / 2)
    value = (4 * fine - coarse) / 3
    rel = abs(value - fine) / max(1.0, abs(value))
    return D2Numeric(value, rel)


def second_variation_tt_predicted(
    n: int, lam: int, lam_L: float, coeff: Coefficients, h_norm2: float
) -> float:
    """Closed-form second variation on a TT eigendirection.

    ``lam_L`` is the eigenvalue of -Lap_L (of -Lap for lam = 0).  Admissible
    ranges: lam_L >= 2(n-1) for lam = 1 (the least TT eigenvalue is 4n, but
    the formula is defined down to the first factor root), lam_L >= -n for
    lam = -1, lam_L > 0 for lam = 0.
    """
    s, tau = coeff.s, coeff.tau
    if lam == 1:
        if lam_L < 2 * (n - 1) - 1e-12:
            raise EigenvalueRangeError(
                f"lam_L = {lam_L} below the admissible range for lam=1"
            )
        return (
            (lam_L - 2 * (n - 1))
            * ((4 + s) / 2 * lam_L - (2 * n + 4) - (n - 1) * (2 * s + n * tau))
            * h_norm2
        )
    if lam == -1:
        if lam_L < -n - 1e-12:
            raise EigenvalueRangeError(
                f"lam_L = {lam_L} below the admissible range for lam=-1"
            )
        return (
            (lam_L + 2 * (n - 1))
            * ((4 + s) / 2 * lam_L + (2 * n + 4) + (n - 1) * (2 * s + n * tau))
            * h_norm2
        )
    if lam == 0:
        if lam_L <= 0:
            raise EigenvalueRangeError("flat TT modes have positive -Lap eigenvalues")
        return 2 * (1 + s / 4) * lam_L**2 * h_norm2
    raise EigenvalueRangeError(f"lam must be in {{-1, 0, 1}}, got {lam}")


def second_variation_conformal_predicted(
    n: int, lam: int, mu: float, coeff: Coefficients, f_norm2: float
) -> float:
    """Closed-form second variation on a conformal eigendirection f.

    ``mu`` is the eigenvalue of -Lap on f.  For lam = 1 the admissible
    spectrum starts at mu = n (attained exactly on the round sphere).
    """
    s, tau = coeff.s, coeff.tau
    if lam == 1:
        if mu < n - 1e-12:
            raise EigenvalueRangeError(f"mu = {mu} below the first eigenvalue n = {n}")
        return p1(n, s, tau, mu) * f_norm2
    if lam == 0:
        if mu <= 0:
            raise EigenvalueRangeError("flat conformal modes need mu > 0")
        return 0.5 * (n - 1) * (s * n + 4 * (n - 1) * tau + 4) * mu**2 * f_norm2
    if lam == -1:
        if mu <= 0:
            raise EigenvalueRangeError("hyperbolic conformal modes need mu > 0")
        return p2(n, s, tau, mu) * f_norm2
    raise EigenvalueRangeError(f"lam must be in {{-1, 0, 1}}, got {lam}")


# ---------------------------------------------------------------------------
# Integral identity suites
# ---------------------------------------------------------------------------


class IdentityCheck(NamedTuple):
    name: str
    lhs: float
    rhs: float
    rel_err: float


def _check(name: str, lhs: float, rhs: float) -> IdentityCheck:
    return IdentityCheck(name, lhs, rhs, abs(lhs - rhs) / max(1.0, abs(lhs), abs(rhs)))


def _require_space_form(base: MetricField, bundle: CurvatureBundle) -> float:
    lam = base.lam
    if lam is None:
        raise PreconditionError("identity suites need a constant-curvature base")
    model = lam * (
        np.einsum("alj,aik->alijk", bundle.g, bundle.g)
        - np.einsum("alk,aij->alijk", bundle.g, bundle.g)
    )
    dev = float(np.max(np.abs(bundle.Rm4 - model)))
    if dev > SPACE_FORM_TOL * max(1.0, abs(lam)):
        raise PreconditionError(f"base is not a space form (deviation {dev:.2e})")
    return lam


def _variation_quantities(
    base: MetricField,
    h: SymTensorField,
    grid: QuadratureGrid,
    rel_step: float,
) -> dict:
    """Everything needed to integrate the primed curvature contractions."""
    X = grid.nodes
    arrs = curvature_variation_arrays(base, h, X)
    b: CurvatureBundle = arrs["bundle"]
    lam = _require_space_form(base, b)
    n = base.dimension
    ginv, g = arrs["ginv"], arrs["g"]
    hv, hup = arrs["h"], arrs["hup"]
    measure = grid.weights * sqrt_det_grid(base, grid)

    def pair(T) -> float:
        return float(np.sum(measure * np.einsum("aij,aij->a", T, hup)))

    def inner(Y):
        # one evaluation for every per-point quantity the nested pass needs
        g_y, ginv_y, Gamma_y, dGamma_y, Ric_y, _ = ricci_arrays(base, Y)
        hv_y, Dh_y, D2h_y, *_ = sym_tensor_cov_derivs(
            base, h, Y, conn=(g_y, ginv_y, Gamma_y, dGamma_y)
        )
        t1 = np.einsum("ajp,apikj->aik", ginv_y, D2h_y)
        t2 = np.einsum("ajp,apkij->aik", ginv_y, D2h_y)
        lap_h_y = np.einsum("akl,aijkl->aij", ginv_y, D2h_y)
        hess_H_y = np.einsum("apq,apqik->aik", ginv_y, D2h_y)
        dric_y = 0.5 * (t1 + t2 - lap_h_y - hess_H_y)
        hup_y = raise_all(hv_y, ginv_y, (0, 1))
        div2_y = np.einsum("aip,ajq,apqij->a", ginv_y, ginv_y, D2h_y)
        lap_H_y = np.einsum("aik,aik->a", ginv_y, hess_H_y)
        dR_y = -np.einsum("aij,aij->a", hup_y, Ric_y) + div2_y - lap_H_y
        tr_dric_y = np.einsum("aik,aik->a", ginv_y, dric_y)
        return [dric_y, dR_y, tr_dric_y, lap_h_y]

    dric_hess, dR_hess, trdric_hess, laph_hess = covariant_hessian_blocks(
        base, inner, [2, 0, 0, 2], X, rel_step
    )
    lap_h = arrs["lap_h"]
    lap2_h = np.einsum("akl,aijkl->aij", ginv, laph_hess)
    hess_H = np.einsum("apq,apqik->aik", ginv, arrs["D2h"])
    lap_H = np.einsum("aik,aik->a", ginv, hess_H)

    # constant-curvature reductions of the primed second-order quantities
    d_lap_ric = np.einsum("akl,aijkl->aij", ginv, dric_hess) - lam * (n - 1) * lap_h
    d_hess_R = dR_hess
    d_lap_R = np.einsum("akl,akl->a", ginv, trdric_hess) - lam * (n - 1) * lap_H

    dRm4, dRic, dR = arrs["dRm4"], arrs["dRic"], arrs["dR"]
    Rm_up3 = raise_all(b.Rm4, ginv, (1, 2, 3))
    A1 = np.einsum("aiplk,ajplk->aij", b.Rm4, Rm_up3)
    ric_up = raise_all(b.Ric, ginv, (0, 1))
    ric2 = np.einsum("aip,apq,aqj->aij", b.Ric, ginv, b.Ric)
    B = np.einsum("apl,aipjl->aij", ric_up, b.Rm4)

    def slot_swap(T, M, s):
        # raise slot s of T with matrix M, leaving other slots untouched
        return np.moveaxis(
            np.einsum("aip,a...p->a...i", M, np.moveaxis(T, s + 1, -1)), -1, s + 1
        )

    # d(A1)_ij, A1_ij = Rm[i,alpha] (g^-1)^3 Rm[j,alpha]
    dA1 = np.einsum("aiplk,ajplk->aij", dRm4, Rm_up3) + np.einsum(
        "aiplk,ajplk->aij", Rm_up3, dRm4
    )
    for s in (1, 2, 3):
        others = tuple(t for t in (1, 2, 3) if t != s)
        Ts = slot_swap(raise_all(b.Rm4, ginv, others), hup, s)
        dA1 -= np.einsum("aiplk,ajplk->aij", Ts, b.Rm4)

    # d(Ric^2)_ij
    dric2 = (
        np.einsum("aip,apq,aqj->aij", dRic, ginv, b.Ric)
        + np.einsum("aip,apq,aqj->aij", b.Ric, ginv, dRic)
        - np.einsum("aip,apq,aqj->aij", b.Ric, hup, b.Ric)
    )

    # d(R^{pl} R_{ipjl})_ij
    dric_up = (
        raise_all(dRic, ginv, (0, 1))
        - slot_swap(raise_all(b.Ric, ginv, (1,)), hup, 0)
        - slot_swap(raise_all(b.Ric, ginv, (0,)), hup, 1)
    )
    dB = np.einsum("apl,aipjl->aij", dric_up, b.Rm4) + np.einsum(
        "apl,aipjl->aij", ric_up, dRm4
    )

    # scalar variations
    Rm_up4 = raise_all(b.Rm4, ginv, (0, 1, 2, 3))
    d_normRm2 = 2 * np.einsum("aiplk,aiplk->a", dRm4, Rm_up4) - 4 * np.einsum(
        "aij,aij->a", hup, A1
    )
    d_normRic2 = 2 * np.einsum("aij,aij->a", dRic, ric_up) - 2 * np.einsum(
        "aij,aij->a", hup, ric2
    )

    nrm = float(np.sum(measure * norm2_02(hv, ginv)))
    ip_h_lap = float(np.sum(measure * np.einsum("aij,aij->a", lap_h, hup)))
    ip_h_lap2 = float(np.sum(measure * np.einsum("aij,aij->a", lap2_h, hup)))

    return dict(
        lam=lam,
        n=n,
        pair=pair,
        g=g,
        hv=hv,
        b=b,
        dA1=dA1,
        d_lap_ric=d_lap_ric,
        d_hess_R=d_hess_R,
        d_lap_R=d_lap_R,
        dric2=dric2,
        dB=dB,
        d_normRm2=d_normRm2,
        d_normRic2=d_normRic2,
        dRic=dRic,
        dR=dR,
        nrm=nrm,
        ip_h_lap=ip_h_lap,
        ip_h_lap2=ip_h_lap2,
        measure=measure,
    )


def _suite_lhs(q: dict) -> dict[str, float]:
    """Integrals of each primed contraction against h^{ij}."""
    b: CurvatureBundle = q["b"]
    g, hv = q["g"], q["hv"]
    pair = q["pair"]
    dR = q["dR"]
    # ambient scalars are constant on a space form: Lap R = 0 exactly
    return {
        "riemann_product": pair(q["dA1"]),
        "ricci_laplacian": pair(q["d_lap_ric"]),
        "scalar_hessian": pair(q["d_hess_R"]),
        "ricci_square": pair(q["dric2"]),
        "ricci_riemann": pair(q["dB"]),
        "riem_norm_metric": pair(
            q["d_normRm2"][:, None, None] * g + b.normRm2[:, None, None] * hv
        ),
        "scalar_laplacian_metric": pair(q["d_lap_R"][:, None, None] * g),
        "ricci_norm_metric": pair(
            q["d_normRic2"][:, None, None] * g + b.normRic2[:, None, None] * hv
        ),
        "scalar_ricci": pair(
            dR[:, None, None] * b.Ric + b.R[:, None, None] * q["dRic"]
        ),
        "scalar_square_metric": pair(
            (2 * b.R * dR)[:, None, None] * g + (b.R**2)[:, None, None] * hv
        ),
    }


def tt_identity_suite(
    base: MetricField,
    h: SymTensorField,
    grid: QuadratureGrid,
    rel_step: float = FIELD_FD_REL_STEP,
) -> list[IdentityCheck]:
    """Integral identities for TT directions on a round-sphere base.

    Each primed curvature contraction, integrated against h^{ij}, reduces to
    a combination of int |h|^2 and int <h, Lap h>; the suite returns the
    directly computed and closed-form values side by side.
    """
    from .spectral import tt_defect

    dd, dt = tt_defect(base, h, grid)
    if dd > 1e-6 or dt > 1e-6:
        raise PreconditionError(
            f"suite requires a TT field (div {dd:.2e}, tr {dt:.2e})"
        )
    q = _variation_quantities(base, h, grid, rel_step)
    lam, n = q["lam"], q["n"]
    nrm, ihl, ihl2 = q["nrm"], q["ip_h_lap"], q["ip_h_lap2"]
    lhs = _suite_lhs(q)
    rhs = {
        "riemann_product": 2 * (n + 1) * lam**2 * nrm - 2 * lam * ihl,
        "ricci_laplacian": -0.5 * ihl2 + lam * ihl,
        "scalar_hessian": 0.0,
        "ricci_square": (n**2 - 1) * lam**2 * nrm - (n - 1) * lam * ihl,
        "ricci_riemann": (n**2 - n - 1) * lam**2 * nrm - 0.5 * (n - 2) * lam * ihl,
        "riem_norm_metric": 2 * lam**2 * n * (n - 1) * nrm,
        "scalar_laplacian_metric": 0.0,
        "ricci_norm_metric": lam**2 * n * (n - 1) ** 2 * nrm,
        "scalar_ricci": lam**2 * n**2 * (n - 1) * nrm - 0.5 * lam * n * (n - 1) * ihl,
        "scalar_square_metric": lam**2 * n**2 * (n - 1) ** 2 * nrm,
    }
    return [_check(k, lhs[k], rhs[k]) for k in rhs]


def conformal_identity_suite(
    base: MetricField,
    f: ScalarField,
    grid: QuadratureGrid,
    rel_step: float = FIELD_FD_REL_STEP,
) -> list[IdentityCheck]:
    """Same contract as :func:`tt_identity_suite` for h = f g."""
    h = conformal_tensor(base, f)
    q = _variation_quantities(base, h, grid, rel_step)
    lam, n = q["lam"], q["n"]
    X = grid.nodes
    fv = f.eval_grid(X)

    # Hess f is analytic (f carries exact partials); only Lap^2 f needs FD
    def lap_f_at(Y):
        gi, Gamma = np.linalg.inv(base.metric_grid(Y)), None
        Gamma = christoffel_arrays(base.metric_grid(Y), base.d1_grid(Y))
        hess = f.d2_grid(Y) - np.einsum("apik,ap->aik", Gamma, f.d1_grid(Y))
        return np.einsum("aik,aik->a", gi, hess)

    ginv = q["b"].ginv
    lap_f = lap_f_at(X)
    (lapf_hess,) = covariant_hessian_blocks(
        base, lambda Y: [lap_f_at(Y)], [0], X, rel_step
    )
    lap2_f = np.einsum("akl,akl->a", ginv, lapf_hess)
    m = q["measure"]
    f2 = float(np.sum(m * fv**2))
    f_lap = float(np.sum(m * fv * lap_f))
    f_lap2 = float(np.sum(m * fv * lap2_f))
    lhs = _suite_lhs(q)
    rhs = {
        "riemann_product": -2 * lam**2 * n * (n - 1) * f2 - 4 * lam * (n - 1) * f_lap,
        "ricci_laplacian": -(n - 1) * f_lap2 - lam * n * (n - 1) * f_lap,
        "scalar_hessian": -(n - 1) * f_lap2 - lam * n * (n - 1) * f_lap,
        "ricci_square": -(lam**2) * n * (n - 1) ** 2 * f2
        - 2 * lam * (n - 1) ** 2 * f_lap,
        "ricci_riemann": -(lam**2) * n * (n - 1) ** 2 * f2
        - 2 * lam * (n - 1) ** 2 * f_lap,
        "riem_norm_metric": -2 * lam**2 * n**2 * (n - 1) * f2
        - 4 * lam * n * (n - 1) * f_lap,
        "scalar_laplacian_metric": -n * (n - 1) * f_lap2
        - lam * n**2 * (n - 1) * f_lap,
        "ricci_norm_metric": -(lam**2) * n**2 * (n - 1) ** 2 * f2
        - 2 * lam * n * (n - 1) ** 2 * f_lap,
        "scalar_ricci": -(lam**2) * n**2 * (n - 1) ** 2 * f2
        - 2 * lam * n * (n - 1) ** 2 * f_lap,
        "scalar_square_metric": -(lam**2) * n**3 * (n - 1) ** 2 * f2
        - 2 * lam * n**2 * (n - 1) ** 2 * f_lap,
    }
    return [_check(k, lhs[k], rhs[k]) for k in rhs]


# ---------------------------------------------------------------------------
# Variation reports
# ---------------------------------------------------------------------------


@dataclass
class VariationReport:
    model: str
    mode: str
    n: int
    lam: float
    s: float
    tau: float
    d1_numeric: float
    d1_analytic: float
    d2_numeric: float
    d2_predicted: float
    rel_err_d1: float
    rel_err_d2: float
    c_lagrange: float

    def to_json(self) -> str:
        return json.dumps(
            {
                "model": self.model,
                "mode": self.mode,
                "n": self.n,
                "lambda": self.lam,
                "s": self.s,
                "tau": self.tau,
                "d1_numeric": self.d1_numeric,
                "d1_analytic": self.d1_analytic,
                "d2_numeric": self.d2_numeric,
                "d2_predicted": self.d2_predicted,
                "rel_err_d1": self.rel_err_d1,
                "rel_err_d2": self.rel_err_d2,
                "c_lagrange": self.c_lagrange,
            },
            sort_keys=True,
        )
