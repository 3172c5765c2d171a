"""Pointwise Riemannian tensor algebra on coordinate charts.

All computations are batched over a leading node axis ``a`` and use einsum.
Index conventions (frozen by the unit tests against the round-sphere
normalization Ric = (n-1) * lam * g):

* ``dg[a,i,j,k] = d g_ij / d x^k``; ``d2g[a,i,j,k,l]`` appends ``d/d x^l``.
* Christoffel symbols ``Gamma[a,k,i,j]`` = Gamma^k_ij.
* Curvature ``Rm13[a,l,i,j,k]`` = R^l_ijk
      = d_j Gamma^l_ik - d_k Gamma^l_ij + Gamma^p_ik Gamma^l_jp
        - Gamma^p_ij Gamma^l_kp,
  lowered to ``Rm4[a,l,i,j,k] = g_lp R^p_ijk`` (antisymmetric pairs (l,i)
  and (j,k)).  On a space form Rm4[l,i,j,k] = lam (g_lj g_ik - g_lk g_ij).
* Ricci ``Ric[a,i,k] = Rm13[a,j,i,j,k]``; scalar ``R = g^{ik} Ric_ik``.
* Covariant derivatives of a symmetric tensor follow the index order
  ``h_ij,kl = nabla_l nabla_k h_ij``: ``Dh[a,i,j,k]``, ``D2h[a,i,j,k,l]``.

The rough Laplacian is the metric trace of the second covariant derivative,
with the sign that makes it non-positive on the flat torus
(Laplacian of cos(k.x) = -|k|^2 cos(k.x)).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DegenerateMetricError, DimensionError, PreconditionError
from .fields import Array, CovectorField, MetricField, SymTensorField, _as_batch

# Relative FD step (fraction of the smallest axis extent) used when
# differentiating computed tensor fields such as the Ricci tensor.  Chosen so
# nested second-derivative stencils stay clear of chart singularities while
# keeping roundoff on constant-curvature integrands near 1e-10.
FIELD_FD_REL_STEP = 2e-3

EINSTEIN_TOL = 1e-6


# ---------------------------------------------------------------------------
# Core pipeline
# ---------------------------------------------------------------------------


def christoffel_arrays(g: Array, dg: Array) -> Array:
    """Gamma[a,k,i,j] from the metric and its first partials."""
    ginv = np.linalg.inv(g)
    # S[a,l,i,j] = d_i g_jl + d_j g_il - d_l g_ij
    S = (
        np.einsum("ajli->alij", dg)
        + np.einsum("ailj->alij", dg)
        - np.einsum("aijl->alij", dg)
    )
    return 0.5 * np.einsum("akl,alij->akij", ginv, S)


def connection_arrays(g: Array, dg: Array, d2g: Array):
    """(ginv, Gamma, dGamma) with dGamma[a,k,i,j,m] = d_m Gamma^k_ij."""
    ginv = np.linalg.inv(g)
    S = (
        np.einsum("ajli->alij", dg)
        + np.einsum("ailj->alij", dg)
        - np.einsum("aijl->alij", dg)
    )
    Gamma = 0.5 * np.einsum("akl,alij->akij", ginv, S)
    dS = (
        np.einsum("ajlim->alijm", d2g)
        + np.einsum("ailjm->alijm", d2g)
        - np.einsum("aijlm->alijm", d2g)
    )
    dginv = -np.einsum("akp,apqm,aql->aklm", ginv, dg, ginv)
    dGamma = 0.5 * (
        np.einsum("aklm,alij->akijm", dginv, S)
        + np.einsum("akl,alijm->akijm", ginv, dS)
    )
    return ginv, Gamma, dGamma


def ricci_arrays(field, X: Array):
    """Lean pipeline: (g, ginv, Gamma, dGamma, Ric, R) at the points.

    Ricci is assembled directly from contractions of the connection data so
    no rank-5 intermediate is materialized; used heavily inside nested
    finite differences of curvature.
    """
    X, _ = _as_batch(X, field.dimension)
    g = field.metric_grid(X)
    dg = field.d1_grid(X)
    d2g = field.d2_grid(X)
    ginv, Gamma, dGamma = connection_arrays(g, dg, d2g)
    # Ric_ik = d_j Gamma^j_ik - d_k Gamma^j_ij + Gamma^p_ik Gamma^j_jp
    #          - Gamma^p_ij Gamma^j_kp
    t1 = np.einsum("ajikj->aik", dGamma)
    t2 = np.einsum("ajijk->aik", dGamma)
    c1 = np.einsum("ajjp->ap", Gamma)
    t3 = np.einsum("apik,ap->aik", Gamma, c1)
    t4 = np.einsum("apij,ajkp->aik", Gamma, Gamma)
    Ric = t1 - t2 + t3 - t4
    R = np.einsum("aik,aik->a", ginv, Ric)
    return g, ginv, Gamma, dGamma, Ric, R


@dataclass
class CurvatureBundle:
    """Pointwise curvature data; arrays keep the leading node axis."""

    g: Array
    ginv: Array
    Gamma: Array  # (a,k,i,j)
    Rm13: Array  # (a,l,i,j,k) = R^l_ijk
    Rm4: Array  # (a,l,i,j,k) = g_lp R^p_ijk
    Ric: Array  # (a,i,k)
    R: Array  # (a,)
    W: Array | None  # Weyl (0,4); None for n = 2
    normRm2: Array  # |Rm|^2
    normRic2: Array  # |Ric|^2

    @property
    def dimension(self) -> int:
        return self.g.shape[-1]

    def at(self, a: int) -> "CurvatureBundle":
        sel = lambda t: None if t is None else t[a : a + 1]
        return CurvatureBundle(
            self.g[a : a + 1],
            self.ginv[a : a + 1],
            self.Gamma[a : a + 1],
            self.Rm13[a : a + 1],
            self.Rm4[a : a + 1],
            self.Ric[a : a + 1],
            self.R[a : a + 1],
            sel(self.W),
            self.normRm2[a : a + 1],
            self.normRic2[a : a + 1],
        )


def raise_all(T: Array, ginv: Array, slots: tuple[int, ...]) -> Array:
    """Raise the given component slots of a batched covariant tensor."""
    out = T
    for s in slots:
        out = np.moveaxis(
            np.einsum("aip,a...p->a...i", ginv, np.moveaxis(out, s + 1, -1)), -1, s + 1
        )
    return out


def kulkarni_nomizu(A: Array, B: Array) -> Array:
    """(A o B)_ijkl = A_ik B_jl + A_jl B_ik - A_il B_jk - A_jk B_il.

    Accepts (n,n) or batched (N,n,n) symmetric inputs.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    single = A.ndim == 2
    if single:
        A, B = A[None], B[None]
    if A.shape != B.shape:
        raise DimensionError(f"shape mismatch {A.shape} vs {B.shape}")
    out = (
        np.einsum("aik,ajl->aijkl", A, B)
        + np.einsum("ajl,aik->aijkl", A, B)
        - np.einsum("ail,ajk->aijkl", A, B)
        - np.einsum("ajk,ail->aijkl", A, B)
    )
    return out[0] if single else out


def weyl_from_parts(g: Array, ginv: Array, Rm4: Array, Ric: Array, R: Array) -> Array:
    """Weyl tensor of the decomposition
    Rm = W + (Ric o g)/(n-2) - R (g o g)/(2 (n-1)(n-2)).

    The coefficient on g o g is the unique one making W totally trace-free
    (checked by the unit tests).  n = 3 returns exact zeros.
    """
    n = g.shape[-1]
    if n < 3:
        raise DimensionError("Weyl tensor requires n >= 3")
    if n == 3:
        return np.zeros_like(Rm4)
    W = (
        Rm4
        - kulkarni_nomizu(Ric, g) / (n - 2)
        + (R / (2 * (n - 1) * (n - 2)))[:, None, None, None, None]
        * kulkarni_nomizu(g, g)
    )
    return W


def norm2_04(T: Array, ginv: Array) -> Array:
    """|T|^2 for a batched (0,4) tensor."""
    up = raise_all(T, ginv, (0, 1, 2, 3))
    return np.einsum("aijkl,aijkl->a", T, up)


def norm2_02(T: Array, ginv: Array) -> Array:
    up = raise_all(T, ginv, (0, 1))
    return np.einsum("aij,aij->a", T, up)


def curvature_bundle(g: Array, dg: Array, d2g: Array) -> CurvatureBundle:
    n = g.shape[-1]
    det = np.linalg.det(g)
    if np.any(det <= 0):
        a = int(np.nonzero(det <= 0)[0][0])
        raise DegenerateMetricError(f"metric not positive definite (node {a})")
    ginv = np.linalg.inv(g)
    S = (
        np.einsum("ajli->alij", dg)
        + np.einsum("ailj->alij", dg)
        - np.einsum("aijl->alij", dg)
    )
    Gamma = 0.5 * np.einsum("akl,alij->akij", ginv, S)
    # dS[a,l,i,j,m] = d_m S_lij
    dS = (
        np.einsum("ajlim->alijm", d2g)
        + np.einsum("ailjm->alijm", d2g)
        - np.einsum("aijlm->alijm", d2g)
    )
    dginv = -np.einsum("akp,apqm,aql->aklm", ginv, dg, ginv)
    dGamma = 0.5 * (
        np.einsum("aklm,alij->akijm", dginv, S)
        + np.einsum("akl,alijm->akijm", ginv, dS)
    )
    Rm13 = (
        np.einsum("alikj->alijk", dGamma)
        - dGamma
        + np.einsum("apik,aljp->alijk", Gamma, Gamma)
        - np.einsum("apij,alkp->alijk", Gamma, Gamma)
    )
    Rm4 = np.einsum("alp,apijk->alijk", g, Rm13)
    Ric = np.einsum("ajijk->aik", Rm13)
    R = np.einsum("aik,aik->a", ginv, Ric)
    normRm2 = norm2_04(Rm4, ginv)
    normRic2 = norm2_02(Ric, ginv)
    W = weyl_from_parts(g, ginv, Rm4, Ric, R) if n >= 3 else None
    return CurvatureBundle(g, ginv, Gamma, Rm13, Rm4, Ric, R, W, normRm2, normRic2)


def curvature_grid(
    field: MetricField, X: Array, block: int = 4096
) -> CurvatureBundle:
    """Curvature bundle at a batch of points, evaluated in blocks."""
    X, _ = _as_batch(X, field.dimension)
    if X.shape[0] <= block:
        return curvature_bundle(field.metric_grid(X), field.d1_grid(X), field.d2_grid(X))
    parts = [
        curvature_bundle(
            field.metric_grid(X[i : i + block]),
            field.d1_grid(X[i : i + block]),
            field.d2_grid(X[i : i + block]),
        )
        for i in range(0, X.shape[0], block)
    ]
    cat = lambda k: (
        None
        if getattr(parts[0], k) is None
        else np.concatenate([getattr(p, k) for p in parts])
    )
    return CurvatureBundle(
        cat("g"),
        cat("ginv"),
        cat("Gamma"),
        cat("Rm13"),
        cat("Rm4"),
        cat("Ric"),
        cat("R"),
        cat("W"),
        cat("normRm2"),
        cat("normRic2"),
    )


def curvature(field: MetricField, x) -> CurvatureBundle:
    """Curvature bundle at a single chart point (arrays keep a length-1 batch)."""
    X, _ = _as_batch(x, field.dimension)
    return curvature_grid(field, X)


def weyl(bundle: CurvatureBundle) -> Array:
    """Weyl tensor of an existing bundle (n >= 3)."""
    if bundle.dimension < 3:
        raise DimensionError("Weyl tensor requires n >= 3")
    return weyl_from_parts(
        bundle.g, bundle.ginv, bundle.Rm4, bundle.Ric, bundle.R
    )


# ---------------------------------------------------------------------------
# Covariant derivatives of symmetric-tensor fields (analytic route)
# ---------------------------------------------------------------------------


def sym_tensor_cov_derivs(
    field: MetricField, h: SymTensorField, X: Array, conn=None
):
    """(h, Dh, D2h) at the nodes: Dh[a,i,j,k] = h_ij,k, D2h[a,i,j,k,l] = h_ij,kl.

    ``conn`` may pass precomputed (g, ginv, Gamma, dGamma) to share work.
    """
    X, _ = _as_batch(X, field.dimension)
    if conn is None:
        g = field.metric_grid(X)
        ginv, Gamma, dGamma = connection_arrays(g, field.d1_grid(X), field.d2_grid(X))
    else:
        g, ginv, Gamma, dGamma = conn

    hv = h.eval_grid(X)
    dh = h.d1_grid(X)
    d2h = h.d2_grid(X)
    Dh = (
        dh
        - np.einsum("apki,apj->aijk", Gamma, hv)
        - np.einsum("apkj,aip->aijk", Gamma, hv)
    )
    # partial_l of Dh, then the three connection corrections of a (0,3) tensor
    dDh = (
        d2h
        - np.einsum("apkil,apj->aijkl", dGamma, hv)
        - np.einsum("apki,apjl->aijkl", Gamma, dh)
        - np.einsum("apkjl,aip->aijkl", dGamma, hv)
        - np.einsum("apkj,aipl->aijkl", Gamma, dh)
    )
    D2h = (
        dDh
        - np.einsum("apli,apjk->aijkl", Gamma, Dh)
        - np.einsum("aplj,aipk->aijkl", Gamma, Dh)
        - np.einsum("aplk,aijp->aijkl", Gamma, Dh)
    )
    return hv, Dh, D2h, g, ginv, Gamma


def covariant_derivative(
    field: MetricField, h: SymTensorField, x, order: int = 1
) -> Array:
    """h_ij,k (order 1) or h_ij,kl (order 2) at a point or batch."""
    if order not in (1, 2):
        raise DimensionError("order must be 1 or 2")
    X, single = _as_batch(x, field.dimension)
    _, Dh, D2h, _, _, _ = sym_tensor_cov_derivs(field, h, X)
    out = Dh if order == 1 else D2h
    return out[0] if single else out


def divergence(field: MetricField, h: SymTensorField, x) -> Array:
    """(delta h)_j = g^{pq} h_pj,q."""
    X, single = _as_batch(x, field.dimension)
    _, Dh, _, _, ginv, _ = sym_tensor_cov_derivs(field, h, X)
    out = np.einsum("apq,apjq->aj", ginv, Dh)
    return out[0] if single else out


def trace(field: MetricField, h: SymTensorField, x) -> Array:
    """tr_g h = g^{ij} h_ij."""
    X, single = _as_batch(x, field.dimension)
    ginv = np.linalg.inv(field.metric_grid(X))
    out = np.einsum("aij,aij->a", ginv, h.eval_grid(X))
    return out[0] if single else out


def delta_star(field: MetricField, omega: CovectorField, x) -> Array:
    """(delta* w)_ij = -(w_i,j + w_j,i)/2, the L^2 adjoint of the divergence."""
    X, single = _as_batch(x, field.dimension)
    g = field.metric_grid(X)
    dg = field.d1_grid(X)
    Gamma = christoffel_arrays(g, dg)
    w = omega.eval_grid(X)
    dw = omega.d1_grid(X)
    Dw = dw - np.einsum("apji,ap->aij", Gamma, w)  # Dw[a,i,j] = w_i,j
    out = -0.5 * (Dw + np.einsum("aij->aji", Dw))
    return out[0] if single else out


def rough_laplacian_tensor(field: MetricField, h: SymTensorField, x) -> Array:
    """(Lap h)_ij = g^{kl} h_ij,kl (non-positive spectrum on the flat torus)."""
    X, single = _as_batch(x, field.dimension)
    _, _, D2h, _, ginv, _ = sym_tensor_cov_derivs(field, h, X)
    out = np.einsum("akl,aijkl->aij", ginv, D2h)
    return out[0] if single else out


def einstein_defect(bundle: CurvatureBundle) -> Array:
    """|Ric - (R/n) g|_g at each node."""
    n = bundle.dimension
    E = bundle.Ric - (bundle.R / n)[:, None, None] * bundle.g
    return np.sqrt(np.maximum(norm2_02(E, bundle.ginv), 0.0))


def lichnerowicz(field: MetricField, h: SymTensorField, x) -> Array:
    """Lichnerowicz Laplacian Lap_L h = Lap h + 2 R_ikjl h^kl - (2/n) R h.

    Requires an Einstein base metric at the evaluation points.
    """
    X, single = _as_batch(x, field.dimension)
    bundle = curvature_grid(field, X)
    defect = einstein_defect(bundle)
    if np.max(defect) > EINSTEIN_TOL:
        raise PreconditionError(
            f"base metric is not Einstein (defect {np.max(defect):.2e})"
        )
    out = lichnerowicz_arrays(field, h, X, bundle)
    return out[0] if single else out


def lichnerowicz_arrays(
    field: MetricField, h: SymTensorField, X: Array, bundle: CurvatureBundle
) -> Array:
    n = field.dimension
    hv, _, D2h, _, ginv, _ = sym_tensor_cov_derivs(field, h, X)
    lap = np.einsum("akl,aijkl->aij", ginv, D2h)
    hup = raise_all(hv, ginv, (0, 1))
    curv = 2 * np.einsum("aikjl,akl->aij", bundle.Rm4, hup)
    return lap + curv - (2.0 / n) * bundle.R[:, None, None] * hv


# ---------------------------------------------------------------------------
# Finite-difference engine for computed tensor fields
# ---------------------------------------------------------------------------


def _field_steps(field: MetricField, rel: float) -> Array:
    h = rel * float(np.min(field.domain.extents))
    return np.full(field.dimension, h)


def gamma_of(field: MetricField, X: Array) -> Array:
    return christoffel_arrays(field.metric_grid(X), field.d1_grid(X))


_LETTERS = "ijklmn"


def cov_grad_of_map(
    field: MetricField,
    fn: Callable[[Array], Array],
    valence: int,
    X: Array,
    rel_step: float = FIELD_FD_REL_STEP,
) -> Array:
    """Covariant derivative of a computed fully-covariant tensor field.

    ``fn`` maps points to (M, n^valence) component arrays.  Partials come
    from 4th-order central differences; one connection correction is applied
    per covariant slot.  Output appends the new derivative index last.
    """
    from .fields import fd_partials

    X, _ = _as_batch(X, field.dimension)
    steps = _field_steps(field, rel_step)
    dT = fd_partials(fn, X, steps)
    if valence == 0:
        return dT
    T = np.asarray(fn(X))
    Gamma = gamma_of(field, X)
    comp = _LETTERS[:valence]
    out = dT
    for s in range(valence):
        t_sub = "a" + comp[:s] + "p" + comp[s + 1 :]
        g_sub = "apm" + comp[s]
        out = out - np.einsum(f"{g_sub},{t_sub}->a{comp}m", Gamma, T)
    return out


def rough_laplacian_of_map(
    field: MetricField,
    fn: Callable[[Array], Array],
    valence: int,
    X: Array,
    rel_step: float = FIELD_FD_REL_STEP,
) -> Array:
    """g^{kl} (nabla nabla T)_{..kl} for a computed covariant tensor field."""
    X, _ = _as_batch(X, field.dimension)

    def grad_fn(Y):
        return cov_grad_of_map(field, fn, valence, Y, rel_step)

    second = cov_grad_of_map(field, grad_fn, valence + 1, X, rel_step)
    ginv = np.linalg.inv(field.metric_grid(X))
    return np.einsum("akl,a...kl->a...", ginv, second)


def hessian_of_scalar_map(
    field: MetricField,
    fn: Callable[[Array], Array],
    X: Array,
    rel_step: float = FIELD_FD_REL_STEP,
) -> Array:
    """nabla_k nabla_i f for a computed scalar field; returns (N, n, n)."""
    X, _ = _as_batch(X, field.dimension)

    def grad_fn(Y):
        return cov_grad_of_map(field, fn, 0, Y, rel_step)

    return cov_grad_of_map(field, grad_fn, 1, X, rel_step)


def _apply_connection_corrections(dT: Array, T: Array, Gamma: Array, valence: int):
    comp = _LETTERS[:valence]
    out = dT
    for s in range(valence):
        t_sub = "a" + comp[:s] + "p" + comp[s + 1 :]
        g_sub = "apm" + comp[s]
        out = out - np.einsum(f"{g_sub},{t_sub}->a{comp}m", Gamma, T)
    return out


def covariant_hessian_blocks(
    field: MetricField,
    inner_fn: Callable[[Array], list[Array]],
    valences: list[int],
    X: Array,
    rel_step: float = FIELD_FD_REL_STEP,
) -> list[Array]:
    """Second covariant derivatives of several computed fields at once.

    ``inner_fn(Y)`` returns one covariant tensor array per entry of
    ``valences``.  All blocks share a single nested stencil pass, which is
    the dominant cost; the connection corrections are applied per block.
    Each output has shape (N, n^valence, n, n) with the trailing axes
    ordered (k, l) for nabla_l nabla_k.
    """
    from .fields import fd_partials

    X, _ = _as_batch(X, field.dimension)
    n = field.dimension
    steps = _field_steps(field, rel_step)
    shapes = [(n,) * v for v in valences]
    sizes = [int(np.prod(s, dtype=int)) if s else 1 for s in shapes]
    offsets = np.concatenate([[0], np.cumsum(sizes)])

    def flat_inner(Y):
        blocks = inner_fn(Y)
        return np.concatenate(
            [np.reshape(b, (Y.shape[0], -1)) for b in blocks], axis=1
        )

    def flat_grad(Y):
        dT = fd_partials(flat_inner, Y, steps)  # (M, K, n)
        T = flat_inner(Y)
        Gamma = gamma_of(field, Y)
        pieces = []
        for v, sh, o, sz in zip(valences, shapes, offsets[:-1], sizes):
            M = Y.shape[0]
            block_d = dT[:, o : o + sz, :].reshape((M,) + sh + (n,))
            block = T[:, o : o + sz].reshape((M,) + sh)
            grad = _apply_connection_corrections(block_d, block, Gamma, v)
            pieces.append(grad.reshape(M, -1))
        return np.concatenate(pieces, axis=1)

    dU = fd_partials(flat_grad, X, steps)  # (N, K*n, n)
    U = flat_grad(X)
    Gamma = gamma_of(field, X)
    out = []
    for v, sh, o, sz in zip(valences, shapes, offsets[:-1], sizes):
        N = X.shape[0]
        gsz = sz * n
        go = o * n
        block_d = dU[:, go : go + gsz, :].reshape((N,) + sh + (n, n))
        block = U[:, go : go + gsz].reshape((N,) + sh + (n,))
        out.append(_apply_connection_corrections(block_d, block, Gamma, v + 1))
    return out


def max_abs(T: Array) -> float:
    """Componentwise sup norm over nodes and indices."""
    return float(np.max(np.abs(T)))
