import numpy as np
import pytest

from curvlab.charts import build_grid, make_model
from curvlab.errors import (
    GlobalIntegralUnsupportedError,
    InvalidModeError,
    PreconditionError,
)
from curvlab.fields import random_torus_sym_tensor
from curvlab.spectral import (
    rayleigh_lichnerowicz,
    s3_invariant_tt,
    symmetrization_energies,
    torus_tt_mode,
    tt_defect,
)
from curvlab.variations import conformal_tensor
from curvlab.fields import cosine_scalar_field

TWO_PI_SQ = 2 * np.pi**2


def test_torus_mode_constraints():
    with pytest.raises(InvalidModeError, match="transversality"):
        torus_tt_mode(3, (1, 0, 0), np.diag([1.0, 0.0, -1.0]))
    with pytest.raises(InvalidModeError, match="trace"):
        torus_tt_mode(3, (1, 0, 0), np.diag([0.0, 1.0, 1.0]))
    with pytest.raises(InvalidModeError, match="nonzero"):
        torus_tt_mode(3, (0, 0, 0), np.diag([0.0, 1.0, -1.0]))
    with pytest.raises(InvalidModeError, match="symmetric"):
        torus_tt_mode(3, (1, 0, 0), np.array([[0, 1, 0], [0, 0, 0], [0, 0, 0.0]]))


def test_invariant_mode_constraints():
    with pytest.raises(InvalidModeError):
        s3_invariant_tt((1.0, 1.0, 1.0))
    with pytest.raises(InvalidModeError):
        s3_invariant_tt((0.0, 0.0, 0.0))


def test_torus_mode_is_tt(torus3, torus3_grid):
    mode = torus_tt_mode(3, (1, 0, 0), np.diag([0.0, 1.0, -1.0]))
    dd, dt = tt_defect(torus3, mode, torus3_grid)
    assert dd <= 1e-12 and dt == 0.0


def test_tt_defect_of_conformal_direction(torus3, torus3_grid):
    f = cosine_scalar_field(torus3.domain, (1, 0, 0))
    h = conformal_tensor(torus3, f)
    dd, dt = tt_defect(torus3, h, torus3_grid)
    assert dt == pytest.approx(3.0, abs=1e-12)  # n * max|f|


def test_invariant_mode_is_tt(euler3, euler3_grid):
    h = s3_invariant_tt((2.0, -1.0, -1.0))
    dd, dt = tt_defect(euler3, h, euler3_grid)
    assert dd <= 1e-8 and dt <= 1e-12


def test_torus_rayleigh_quotient(torus3, torus3_grid):
    mode = torus_tt_mode(3, (1, 0, 0), np.diag([0.0, 1.0, -1.0]))
    rep = rayleigh_lichnerowicz(torus3, mode, torus3_grid)
    assert rep.quotient == pytest.approx((2 * np.pi) ** 2, abs=1e-6)
    assert rep.norm2 == pytest.approx(0.5 * 2, abs=1e-12)  # |A|^2 / 2


def test_torus_rayleigh_multimode():
    t4 = make_model("torus", 4)
    A = np.zeros((4, 4))
    A[2, 2], A[3, 3] = 1.0, -1.0
    mode = torus_tt_mode(4, (1, 1, 0, 0), A)
    grid = build_grid(t4.domain, 6)
    rep = rayleigh_lichnerowicz(t4, mode, grid)
    assert rep.quotient == pytest.approx(2 * (2 * np.pi) ** 2, rel=1e-10)


def test_s3_invariant_rayleigh(euler3):
    grid = build_grid(euler3.domain, 24)
    rep = rayleigh_lichnerowicz(euler3, s3_invariant_tt((2.0, -1.0, -1.0)), grid)
    assert abs(rep.quotient - 12.0) < 1e-3
    assert rep.norm2 == pytest.approx(6 * TWO_PI_SQ, rel=1e-10)
    rep2 = rayleigh_lichnerowicz(euler3, s3_invariant_tt((0.0, 1.0, -1.0)), grid)
    assert abs(rep2.quotient - 12.0) < 1e-3
    # Rayleigh quotient is scale invariant, energy is quadratic
    rep3 = rayleigh_lichnerowicz(
        euler3, s3_invariant_tt((3.0, 3.0, -6.0)), grid
    )
    rep1 = rayleigh_lichnerowicz(euler3, s3_invariant_tt((1.0, 1.0, -2.0)), grid)
    assert rep3.quotient == pytest.approx(rep1.quotient, abs=1e-10)
    assert rep3.energy == pytest.approx(9 * rep1.energy, rel=1e-10)


def test_rayleigh_refuses_non_tt(torus3, torus3_grid):
    h = random_torus_sym_tensor(3, np.random.default_rng(31))
    with pytest.raises(PreconditionError):
        rayleigh_lichnerowicz(torus3, h, torus3_grid)


def test_rayleigh_refuses_hyperbolic(poincare3):
    grid = build_grid(poincare3.domain, 4)
    mode = torus_tt_mode(3, (1, 0, 0), np.diag([0.0, 1.0, -1.0]))
    with pytest.raises(GlobalIntegralUnsupportedError):
        rayleigh_lichnerowicz(poincare3, mode, grid)


def test_flat_energy_via_rough_laplacian(torus3, torus3_grid):
    # with zero curvature the Lichnerowicz energy reduces to the rough one
    from curvlab.charts import sqrt_det_grid
    from curvlab.tensors import rough_laplacian_tensor

    mode = torus_tt_mode(3, (1, 0, 0), np.diag([0.0, 1.0, -1.0]))
    rep = rayleigh_lichnerowicz(torus3, mode, torus3_grid)
    X = torus3_grid.nodes
    meas = torus3_grid.weights * sqrt_det_grid(torus3, torus3_grid)
    lap = rough_laplacian_tensor(torus3, mode, X)
    hv = mode.eval_grid(X)
    energy = np.sum(meas * -np.einsum("aij,aij->a", lap, hv))
    assert abs(rep.energy - energy) < 1e-10


def test_symmetrization_energies(torus3, torus3_grid, euler3, euler3_grid):
    mode = torus_tt_mode(3, (1, 0, 0), np.diag([0.0, 1.0, -1.0]))
    cyc, anti = symmetrization_energies(torus3, mode, torus3_grid)
    assert cyc >= -1e-12 and anti >= -1e-12
    assert cyc == pytest.approx(3 * (2 * np.pi) ** 2, rel=1e-12)
    inv = s3_invariant_tt((2.0, -1.0, -1.0))
    cyc_s, anti_s = symmetrization_energies(euler3, inv, euler3_grid)
    assert abs(cyc_s) <= 1e-6  # equality case of the sphere bound
    assert anti_s >= -1e-12


def test_sphere_bound(euler3):
    grid = build_grid(euler3.domain, (12, 12, 16))
    for d in ((2.0, -1.0, -1.0), (1.0, -3.0, 2.0), (0.0, 1.0, -1.0)):
        rep = rayleigh_lichnerowicz(euler3, s3_invariant_tt(d), grid)
        assert rep.quotient >= 4 * 3 - 1e-3
