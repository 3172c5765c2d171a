"""Stability classification of (s, tau) at constant-curvature critical metrics.

Verdict semantics
-----------------
Every verdict is a *sufficient* statement about the sign of the second
variation over the whole admissible spectrum of the relevant mode family:

* TT mode: sign of  (lam_L - 2(n-1) lam) ((4+s)/2 lam_L - (2n+4) lam
  - (n-1)(2s + n tau) lam)  over the admissible -Lap_L eigenvalues
  (lam_L >= 4n for lam = 1, lam_L >= -n for lam = -1, any positive -Lap
  eigenvalue with coefficient 2(1 + s/4) mu^2 for lam = 0).
* Conformal mode: sign of P1(mu) over mu >= n for lam = 1, of P2(mu) over
  mu > 0 for lam = -1, and of (n s + 4(n-1) tau + 4) for lam = 0.

Clause table used in citations (LocalMin regions; LocalMax mirrors them):

==========  =========  =====================================================
citation    case       LocalMin region
==========  =========  =====================================================
Thm 1.1(1)  TT,  +1    s > -4 and tau < (6n-12)/(n(n-1))
Thm 1.2(1)  TT,  -1    s > -4 and tau > (6n-12)/(n(n-1))
Thm 1.3     TT,   0    s > -4                       (Cor 3.1)
Thm 1.4     Conf, 0    s + 4 tau > 4(tau-1)/n       (Cor 3.2)
Thm 1.5     Conf,+1    a > 0 and a n + b > 0, where
                       a = (n s - 4 tau + 4 n tau + 4)/2,
                       b = (n-4)(n^2 tau + n s - n tau - s + 2)
Thm 1.6     Conf,-1    a > 0 and b < 0
==========  =========  =====================================================

For the conformal families the inequalities above are exactly equivalent to
"P1 >= 0 on [n, inf)" / "P2 >= 0 on (0, inf)", so classifier verdicts can
never contradict sampled polynomial signs.  For lam = -1 with n != 4 the
published clause text for these regions is internally inconsistent with P2;
the classifier follows the polynomial criterion and flags this in the
citation string.  Points on any defining line are reported as Boundary;
points covered by no clause are Undetermined (the conditions are sufficient
only, so no Indefinite verdict is ever claimed).
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigurationError

BOUNDARY_TOL = 1e-12

LOCAL_MIN = "LocalMin"
LOCAL_MAX = "LocalMax"
BOUNDARY = "Boundary"
UNDETERMINED = "Undetermined"

TT = "tt"
CONFORMAL = "conformal"


def p1(n, s, tau, mu):
    """Conformal sign polynomial for positive curvature,
    (n-1)(mu-n)(((n s - 4 tau + 4 n tau + 4)/2) mu
                + (n-4)(n^2 tau + n s - n tau - s + 2))."""
    a = (n * s - 4 * tau + 4 * n * tau + 4) / 2
    b = (n - 4) * (n**2 * tau + n * s - n * tau - s + 2)
    return (n - 1) * (mu - n) * (a * mu + b)


def p2(n, s, tau, mu):
    """Conformal sign polynomial for negative curvature,
    (n-1)(mu+n)(((n s - 4 tau + 4 n tau + 4)/2) mu
                - (n-4)(n^2 tau + n s - n tau - s + 2))."""
    a = (n * s - 4 * tau + 4 * n * tau + 4) / 2
    b = (n - 4) * (n**2 * tau + n * s - n * tau - s + 2)
    return (n - 1) * (mu + n) * (a * mu - b)


@dataclass(frozen=True)
class StabilityQuery:
    n: int
    lam: int
    mode: str
    s: float
    tau: float

    def __post_init__(self):
        if self.n < 3:
            raise ConfigurationError("stability queries need n >= 3")
        if self.lam not in (-1, 0, 1):
            raise ConfigurationError("lam must be -1, 0 or 1")
        if self.mode not in (TT, CONFORMAL):
            raise ConfigurationError(f"mode must be '{TT}' or '{CONFORMAL}'")


@dataclass(frozen=True)
class Verdict:
    value: str
    citation: str = ""


def _two_form_verdict(f1, f2, min_signs, cite_min, cite_max, boundary_cite):
    """Verdict from two linear forms; min region is sign(f) == min_signs."""
    if abs(f1) <= BOUNDARY_TOL or abs(f2) <= BOUNDARY_TOL:
        return Verdict(BOUNDARY, boundary_cite)
    s1, s2 = np.sign(f1), np.sign(f2)
    if (s1, s2) == min_signs:
        return Verdict(LOCAL_MIN, cite_min)
    if (s1, s2) == (-min_signs[0], -min_signs[1]):
        return Verdict(LOCAL_MAX, cite_max)
    return Verdict(UNDETERMINED)


def _one_form_verdict(f, cite_min, cite_max, boundary_cite):
    if abs(f) <= BOUNDARY_TOL:
        return Verdict(BOUNDARY, boundary_cite)
    return Verdict(LOCAL_MIN, cite_min) if f > 0 else Verdict(LOCAL_MAX, cite_max)


def classify(q: StabilityQuery) -> Verdict:
    """Stability verdict for the query, with the clause that fired."""
    n, s, tau = q.n, q.s, q.tau
    if q.mode == TT:
        thr = (6 * n - 12) / (n * (n - 1))
        if q.lam == 0:
            return _one_form_verdict(
                s + 4, "Thm 1.3 / Cor 3.1", "Thm 1.3 / Cor 3.1", "boundary of Thm 1.3"
            )
        if q.lam == 1:
            return _two_form_verdict(
                s + 4,
                thr - tau,
                (1.0, 1.0),
                "Thm 1.1(1)",
                "Thm 1.1(2)",
                "boundary of Thm 1.1",
            )
        return _two_form_verdict(
            s + 4,
            tau - thr,
            (1.0, 1.0),
            "Thm 1.2(1)",
            "Thm 1.2(2)",
            "boundary of Thm 1.2",
        )

    # conformal mode
    if q.lam == 0:
        return _one_form_verdict(
            s + 4 * tau - 4 * (tau - 1) / n,
            "Thm 1.4 / Cor 3.2",
            "Thm 1.4 / Cor 3.2",
            "boundary of Thm 1.4",
        )
    a = (n * s - 4 * tau + 4 * n * tau + 4) / 2
    b = (n - 4) * (n**2 * tau + n * s - n * tau - s + 2)
    if q.lam == 1:
        clause = {3: "Thm 1.5(2)", 4: "Thm 1.5(1)"}.get(n, "Thm 1.5(3)")
        if n == 4:
            return _one_form_verdict(a, clause, clause, "boundary of Thm 1.5(1)")
        return _two_form_verdict(
            a, a * n + b, (1.0, 1.0), clause, clause, f"boundary of {clause}"
        )
    # lam = -1 conformal: P2 >= 0 on (0, inf) iff a >= 0 and b <= 0
    if n == 4:
        return _one_form_verdict(
            a, "Thm 1.6(1)", "Thm 1.6(1)", "boundary of Thm 1.6(1)"
        )
    clause = (
        "Thm 1.6(2), regions per P2 criterion"
        if n == 3
        else "Thm 1.6(3), regions per P2 criterion"
    )
    return _two_form_verdict(a, -b, (1.0, 1.0), clause, clause, f"boundary of {clause}")


def emit_atlas(
    n: int,
    lam: int,
    mode: str,
    s_range: tuple[float, float],
    tau_range: tuple[float, float],
    resolution: int,
    path: str | Path | None,
    fmt: str = "csv",
) -> str:
    """Classify a (s, tau) grid and serialize it.

    Rows run tau-major (outer loop over tau, inner over s) and are fully
    deterministic.  Returns the serialized text; writes it to ``path`` when
    given.
    """
    if resolution < 2:
        raise ConfigurationError("atlas resolution must be >= 2")
    if not (
        np.isfinite(s_range).all() and np.isfinite(tau_range).all()  # type: ignore[union-attr]
    ):
        raise ConfigurationError("atlas ranges must be finite")
    ss = np.linspace(s_range[0], s_range[1], resolution)
    taus = np.linspace(tau_range[0], tau_range[1], resolution)
    rows = []
    for tau in taus:
        for s in ss:
            v = classify(StabilityQuery(n=n, lam=lam, mode=mode, s=float(s), tau=float(tau)))
            rows.append(
                {
                    "n": n,
                    "lambda": lam,
                    "mode": mode,
                    "s": repr(float(s)),
                    "tau": repr(float(tau)),
                    "verdict": v.value,
                    "citation": v.citation,
                }
            )
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.DictWriter(
            buf,
            fieldnames=["n", "lambda", "mode", "s", "tau", "verdict", "citation"],
            lineterminator="\n",
        )
        writer.writeheader()
        writer.writerows(rows)
        text = buf.getvalue()
    elif fmt == "json":
        text = json.dumps(rows, sort_keys=True, indent=None) + "\n"
    else:
        raise ConfigurationError(f"unknown atlas format {fmt!r}")
    if path is not None:
        try:
            Path(path).write_text(text)
        except OSError as exc:
            raise ConfigurationError(f"cannot write atlas to {path}: {exc}") from exc
    return text
