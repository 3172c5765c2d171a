"""Explicit transverse-traceless modes and Lichnerowicz Rayleigh quotients.

Two analytically TT families are provided:

* Fourier modes on the flat torus, h = A cos(2 pi k.x) with tr A = 0 and
  A k = 0; these satisfy -Lap_L h = |2 pi k|^2 h.
* Left-invariant diagonal modes on the round S^3 chart,
  h = sum_i d_i w^i (x) w^i with sum d_i = 0 in the bi-invariant orthonormal
  coframe w^i; these attain the least TT eigenvalue 4n of -Lap_L on the
  unit sphere.

Random TT fields on curved models are deliberately not offered: without an
elliptic projection the TT property could only hold approximately, and every
spectral claim here is meant to be exactly checkable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import sympy as sp

from .charts import QuadratureGrid, make_model, milnor_coframe_exprs, sqrt_det_grid
from .errors import (
    GlobalIntegralUnsupportedError,
    InvalidModeError,
    PreconditionError,
)
from .fields import (
    Array,
    MetricField,
    SymTensorField,
    analytic_sym_tensor_field,
    torus_domain,
    trig_sym_tensor_field,
)
from .tensors import (
    curvature_grid,
    einstein_defect,
    lichnerowicz_arrays,
    norm2_02,
    raise_all,
    sym_tensor_cov_derivs,
)

TT_TOL = 1e-6


@dataclass(frozen=True)
class TorusTTMode:
    """Wave vector and amplitude of a flat TT Fourier mode."""

    k: tuple[int, ...]
    amplitude: Array  # constant symmetric matrix, tr = 0, A k = 0

    @property
    def dimension(self) -> int:
        return len(self.k)


@dataclass(frozen=True)
class RayleighReport:
    energy: float  # int <-Lap_L h, h>
    norm2: float  # int |h|^2
    quotient: float
    tt_defect_div: float
    tt_defect_tr: float

    def to_json(self, model=None, mode_desc=None) -> str:
        return json.dumps(
            {
                "model": model,
                "mode_desc": mode_desc,
                "energy": self.energy,
                "norm2": self.norm2,
                "quotient": self.quotient,
                "tt_defect_div": self.tt_defect_div,
                "tt_defect_tr": self.tt_defect_tr,
            },
            sort_keys=True,
        )


def torus_tt_mode(n: int, k, A, lengths=None) -> SymTensorField:
    """TT Fourier mode h = A cos(2 pi k.x) on the flat torus.

    The constraints tr A = 0 and A k = 0 are checked exactly (integer or
    dyadic-rational inputs incur no rounding).
    """
    k = np.asarray(k, dtype=float)
    A = np.asarray(A, dtype=float)
    if k.shape != (n,) or A.shape != (n, n):
        raise InvalidModeError(f"expected k of shape ({n},) and A of shape ({n},{n})")
    if not np.array_equal(A, A.T):
        raise InvalidModeError("amplitude matrix is not symmetric")
    if not k.any():
        raise InvalidModeError("wave vector k must be nonzero")
    if A.trace() != 0.0:
        raise InvalidModeError(f"trace A = {A.trace()} != 0")
    Ak = A @ k
    if Ak.any():
        raise InvalidModeError(f"A k = {Ak.tolist()} != 0 (transversality)")
    dom = torus_domain(n, lengths)
    field = trig_sym_tensor_field(
        dom, [(k, A, np.zeros((n, n)))], name=f"torus TT mode k={k.astype(int).tolist()}"
    )
    return field


def s3_invariant_tt(d, radius: float = 1.0) -> SymTensorField:
    """Left-invariant traceless diagonal mode on the round S^3 Euler chart.

    h = sum_i d_i w^i w^i in the orthonormal bi-invariant coframe, expressed
    in chart components; requires sum d_i = 0 and d != 0.
    """
    d = np.asarray(d, dtype=float)
    if d.shape != (3,):
        raise InvalidModeError("need three coefficients")
    if d.sum() != 0.0:
        raise InvalidModeError(f"sum d = {d.sum()} != 0 (trace condition)")
    if not d.any():
        raise InvalidModeError("mode coefficients are all zero")
    coords, w = milnor_coframe_exprs(radius)
    h = sp.zeros(3, 3)
    for i in range(3):
        for mu in range(3):
            for nu in range(3):
                h[mu, nu] += sp.Float(d[i]) * w[i][mu] * w[i][nu]
    field = analytic_sym_tensor_field(
        make_model("s3-euler", 3, radius=radius).domain,
        coords,
        h,
        name=f"S^3 invariant mode d={d.tolist()}",
    )
    return field


def tt_defect(
    base: MetricField, h: SymTensorField, grid: QuadratureGrid
) -> tuple[float, float]:
    """(sup |delta h|_g, sup |tr h|) over the grid nodes."""
    X = grid.nodes
    hv, Dh, _, g, ginv, _ = sym_tensor_cov_derivs(base, h, X)
    div = np.einsum("apq,apjq->aj", ginv, Dh)
    div_norm = np.sqrt(np.maximum(np.einsum("aij,ai,aj->a", ginv, div, div), 0.0))
    tr = np.einsum("aij,aij->a", ginv, hv)
    return float(np.max(div_norm)), float(np.max(np.abs(tr)))


def rayleigh_lichnerowicz(
    base: MetricField, h: SymTensorField, grid: QuadratureGrid
) -> RayleighReport:
    """Rayleigh quotient of -Lap_L on a TT field over an Einstein base."""
    if not base.supports_global_quadrature:
        raise GlobalIntegralUnsupportedError(
            "Rayleigh quotients need global integrals; this chart has none"
        )
    bundle = curvature_grid(base, grid.nodes)
    if float(np.max(einstein_defect(bundle))) > TT_TOL:
        raise PreconditionError("base metric is not Einstein on this grid")
    dd, dt = tt_defect(base, h, grid)
    if dd > TT_TOL or dt > TT_TOL:
        raise PreconditionError(
            f"field is not transverse-traceless (div {dd:.2e}, tr {dt:.2e})"
        )
    measure = grid.weights * sqrt_det_grid(base, grid)
    lap_L = lichnerowicz_arrays(base, h, grid.nodes, bundle)
    hv = h.eval_grid(grid.nodes)
    hup = raise_all(hv, bundle.ginv, (0, 1))
    energy = float(np.sum(measure * -np.einsum("aij,aij->a", lap_L, hup)))
    norm2 = float(np.sum(measure * norm2_02(hv, bundle.ginv)))
    return RayleighReport(
        energy=energy,
        norm2=norm2,
        quotient=energy / norm2,
        tt_defect_div=dd,
        tt_defect_tr=dt,
    )


def symmetrization_energies(
    base: MetricField, h: SymTensorField, grid: QuadratureGrid
) -> tuple[float, float]:
    """Energies of the cyclic and antisymmetrized first derivatives of h:

    cyc  = int |h_ij,k + h_jk,i + h_ki,j|^2
    anti = int |h_ij,k - h_ik,j|^2

    Both are non-negative; the invariant S^3 mode makes cyc vanish, the
    equality case of the least-eigenvalue bound on the unit sphere.
    """
    dd, dt = tt_defect(base, h, grid)
    if dd > TT_TOL or dt > TT_TOL:
        raise PreconditionError("field is not transverse-traceless")
    X = grid.nodes
    _, Dh, _, g, ginv, _ = sym_tensor_cov_derivs(base, h, X)
    measure = grid.weights * sqrt_det_grid(base, grid)
    cyc = Dh + np.einsum("ajki->aijk", Dh) + np.einsum("akij->aijk", Dh)
    anti = Dh - np.einsum("aikj->aijk", Dh)

    def energy(T):
        up = raise_all(T, ginv, (0, 1, 2))
        return float(np.sum(measure * np.einsum("aijk,aijk->a", T, up)))

    return energy(cyc), energy(anti)
