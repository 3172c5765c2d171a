import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from curvlab.atlas import StabilityQuery, Verdict, classify, emit_atlas, p1, p2
from curvlab.errors import ConfigurationError
from curvlab.functionals import Coefficients
from curvlab.variations import second_variation_tt_predicted

finite = st.floats(-50, 50, allow_nan=False)


def q(n, lam, mode, s, tau):
    return StabilityQuery(n=n, lam=lam, mode=mode, s=s, tau=tau)


def test_polynomial_values():
    assert p1(4, 0.0, 0.0, 4.0) == 0.0
    assert p1(3, 0.0, 0.0, 6.0) == pytest.approx(60.0, abs=1e-14)
    assert p2(3, 0.0, 0.0, 3.0) == pytest.approx(96.0, abs=1e-14)
    assert p2(3, 0.2, -0.4, -3.0) == 0.0  # formal factor root
    # ns - 4 tau + 4 n tau + 4 = 0 at n = 4, s = -1, tau = 0 kills p2
    for mu in (1.0, 7.3, 40.0):
        assert p2(4, -1.0, 0.0, mu) == 0.0


@given(s=finite, tau=finite, mu=finite)
@settings(max_examples=200, deadline=None)
def test_p1_factorization_n4(s, tau, mu):
    lhs = p1(4, s, tau, mu)
    rhs = 6 * (mu - 4) * (s + 3 * tau + 1) * mu
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(rhs))


def test_query_validation():
    with pytest.raises(ConfigurationError):
        q(2, 1, "tt", 0.0, 0.0)
    with pytest.raises(ConfigurationError):
        q(3, 2, "tt", 0.0, 0.0)
    with pytest.raises(ConfigurationError):
        q(3, 1, "radial", 0.0, 0.0)


def test_worked_examples():
    v = classify(q(4, 1, "tt", 0.0, 0.0))
    assert (v.value, v.citation) == ("LocalMin", "Thm 1.1(1)")
    v = classify(q(4, 1, "conformal", -1.0, 0.0))
    assert v.value == "Boundary"
    v = classify(q(5, 1, "conformal", 0.0, 1.0))
    assert (v.value, v.citation) == ("LocalMin", "Thm 1.5(3)")
    v = classify(q(3, 1, "conformal", 0.0, 0.0))
    assert (v.value, v.citation) == ("LocalMin", "Thm 1.5(2)")
    v = classify(q(3, 1, "tt", -6.0, 2.0))
    assert (v.value, v.citation) == ("LocalMax", "Thm 1.1(2)")
    v = classify(q(3, -1, "tt", 0.0, 2.0))
    assert (v.value, v.citation) == ("LocalMin", "Thm 1.2(1)")
    v = classify(q(3, 0, "tt", 1.0, 9.0))
    assert v.value == "LocalMin"
    v = classify(q(3, 0, "tt", -4.0, 0.0))
    assert v.value == "Boundary"
    v = classify(q(4, 0, "conformal", -2.0, 0.0))
    assert v.value == "LocalMax"
    v = classify(q(4, -1, "conformal", 1.0, 1.0))
    assert (v.value, v.citation) == ("LocalMin", "Thm 1.6(1)")
    # the TT sufficient regions leave gaps
    assert classify(q(3, 1, "tt", 0.0, 2.0)).value == "Undetermined"
    assert classify(q(3, 1, "tt", -5.0, 0.0)).value == "Undetermined"


def test_negative_curvature_conformal_follows_polynomial():
    # the published clause text is inconsistent with P2; the classifier must
    # agree with the polynomial criterion everywhere
    v = classify(q(3, -1, "conformal", 1.0, 0.0))
    assert v.value == "LocalMin" and "P2" in v.citation
    # P2 changes sign over (0, inf) here, although the printed tau < 2
    # clause would accept the point as a minimizer
    v = classify(q(3, -1, "conformal", -1.2, 0.0))
    assert v.value == "Undetermined"
    # and here P2 <= 0 everywhere while the printed text claims a minimizer
    v = classify(q(3, -1, "conformal", -1.5, 0.0))
    assert v.value == "LocalMax"
    # n >= 5 local max: the strip between the two defining lines
    v = classify(q(5, -1, "conformal", -2.7, 0.5))
    assert v.value == "LocalMax"
    assert classify(q(5, -1, "conformal", -3.0, 0.5)).value == "Boundary"


def test_boundary_tolerance_is_strict():
    v = classify(q(3, 1, "tt", -4.0 + 1e-13, 0.0))
    assert v.value == "Boundary"
    v = classify(q(3, 1, "tt", -4.0 + 1e-9, 0.0))
    assert v.value == "LocalMin"


@settings(max_examples=150, deadline=None)
@given(
    n=st.integers(3, 7),
    lam=st.sampled_from([-1, 0, 1]),
    mode=st.sampled_from(["tt", "conformal"]),
    s=st.floats(-10, 6),
    tau=st.floats(-4, 4),
)
def test_classifier_consistent_with_spectra(n, lam, mode, s, tau):
    v = classify(q(n, lam, mode, s, tau))
    if v.value not in ("LocalMin", "LocalMax"):
        return
    coeff = Coefficients(s, tau)
    if mode == "tt":
        grid = {
            1: np.linspace(4 * n, 40 * n, 40),
            -1: np.linspace(-n, 30 * n, 40),
            0: np.linspace(0.5, 150, 30),
        }[lam]
        vals = np.array(
            [second_variation_tt_predicted(n, lam, float(m), coeff, 1.0) for m in grid]
        )
    else:
        if lam == 1:
            vals = p1(n, s, tau, np.linspace(n, 40 * n, 60))
        elif lam == -1:
            vals = p2(n, s, tau, np.linspace(1e-3, 40 * n, 60))
        else:
            mu = np.linspace(0.5, 100, 30)
            vals = 0.5 * (n - 1) * (s * n + 4 * (n - 1) * tau + 4) * mu**2
    tol = 1e-9 * max(1.0, np.abs(vals).max())
    if v.value == "LocalMin":
        assert vals.min() >= -tol
    else:
        assert vals.max() <= tol


def test_emit_atlas_csv(tmp_path):
    out = tmp_path / "atlas.csv"
    text = emit_atlas(4, 1, "conformal", (-4, 2), (-2, 2), 50, out)
    lines = out.read_text().strip().split("\n")
    assert lines[0] == "n,lambda,mode,s,tau,verdict,citation"
    assert len(lines) == 2501
    # the verdict changes exactly across the line s + 3 tau = -1
    for row in lines[1:]:
        n_, lam_, mode_, s_, tau_, verdict, _ = row.split(",", 6)
        form = float(s_) + 3 * float(tau_) + 1
        if abs(form) <= 1e-12:
            assert verdict == "Boundary"
        elif form > 0:
            assert verdict == "LocalMin"
        else:
            assert verdict == "LocalMax"


def test_atlas_tt_split_lines(tmp_path):
    out = tmp_path / "tt.csv"
    emit_atlas(3, 1, "tt", (-8, 0), (0, 2), 9, out)
    rows = out.read_text().strip().split("\n")[1:]
    assert len(rows) == 81
    for row in rows:
        _, _, _, s_, tau_, verdict, _ = row.split(",", 6)
        s, tau = float(s_), float(tau_)
        if abs(s + 4) <= 1e-12 or abs(tau - 1) <= 1e-12:
            assert verdict == "Boundary"
        elif s > -4 and tau < 1:
            assert verdict == "LocalMin"
        elif s < -4 and tau > 1:
            assert verdict == "LocalMax"
        else:
            assert verdict == "Undetermined"


def test_atlas_degenerate_and_json(tmp_path):
    import json

    text = emit_atlas(3, 0, "tt", (-5, -3), (0, 1), 2, None)
    assert len(text.strip().split("\n")) == 5
    jtext = emit_atlas(3, 0, "tt", (-5, -3), (0, 1), 2, None, fmt="json")
    rows = json.loads(jtext)
    assert len(rows) == 4 and all(r["verdict"] for r in rows)
    with pytest.raises(ConfigurationError):
        emit_atlas(3, 0, "tt", (-5, -3), (0, 1), 1, None)
    with pytest.raises(ConfigurationError):
        emit_atlas(3, 0, "tt", (-np.inf, 0), (0, 1), 3, None)


def test_atlas_refinement_invariance():
    coarse = emit_atlas(5, 1, "conformal", (-6, 2), (-2, 2), 5, None)
    fine = emit_atlas(5, 1, "conformal", (-6, 2), (-2, 2), 9, None)

    def parse(text):
        out = {}
        for row in text.strip().split("\n")[1:]:
            _, _, _, s_, tau_, verdict, _ = row.split(",", 6)
            out[(s_, tau_)] = verdict
        return out

    c, f = parse(coarse), parse(fine)
    shared = set(c) & set(f)
    assert shared and all(c[k] == f[k] for k in shared)


def test_verdict_citation_uniqueness():
    v = classify(q(4, 1, "tt", 0.0, 0.0))
    assert isinstance(v, Verdict) and v.citation.count("Thm") == 1
    u = classify(q(3, 1, "tt", 0.0, 2.0))
    assert u.citation == ""
