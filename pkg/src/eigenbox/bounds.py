"""Universal eigenvalue inequalities and their constants.

Every checker returns a :class:`BoundReport` oriented so that the inequality
reads ``lhs <= rhs``. Numerical spectra widen the comparison by a tolerance
band of twice the error bars, combined linearly over the eigenvalues that
enter each side.

Margins: ``rhs/lhs - 1`` for ratio-type inequalities, ``rhs - lhs`` for the
gap, sum and multiplicity inequalities (see ``MARGIN_KIND``).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Optional, Sequence

import numpy as np

from .box_spectrum import TIE_RTOL, Spectrum
from .special_functions import first_bessel_zero, unit_ball_volume

BAND_FACTOR = 2.0
# Cheng-Yang a(p): envelope max(a(1), a(2), a(p>=3)) = 2.64 over 1 <= p <= 60
CHENG_YANG_A = 2.64

RATIO = "ratio"
DIFFERENCE = "difference"

MARGIN_KIND = {
    "theorem1": RATIO,
    "theorem1_box": RATIO,
    "theorem2": RATIO,
    "theorem2_box": RATIO,
    "corollary_multiplicity": DIFFERENCE,
    "berezin_li_yau": RATIO,
    "hersch_protter": RATIO,
    "inradius_upper": RATIO,
    "ppw_gap": DIFFERENCE,
    "ppw_ratio": RATIO,
    "ppw_gap_printed": DIFFERENCE,
    "ppw_ratio_printed": RATIO,
    "yang_second": RATIO,
    "levitin_parnovski_sum": DIFFERENCE,
    "levitin_parnovski_index": RATIO,
    "ashbaugh_benguria": RATIO,
    "cheng_yang": RATIO,
    "cheng_yang_c0": RATIO,
}

REPORT_FIELDS = (
    "inequality_id",
    "n",
    "k",
    "l",
    "lhs",
    "rhs",
    "margin",
    "satisfied",
    "applicable",
    "tolerance_band",
    "domain_id",
)


class SpectrumTooShortError(ValueError):
    pass


class ClusterUnresolvedError(ValueError):
    pass


@dataclass(frozen=True)
class UniversalConstants:
    """Dimension-dependent constants, all built from ``j = j_{n/2-1,1}``.

    ``c_n_box``/``d_n_box``/``alpha_n_box`` are the orthotope versions; the
    convex-domain constants carry the extra ``n^3`` from the box sandwich.
    """

    n: int
    j: float
    j_next: float
    c_n_box: float
    c_n: float
    alpha_n: float
    beta_n: float
    d_n_box: float
    alpha_n_box: float
    mult_coeff: float

    @property
    def ball_ratio(self) -> float:
        """``lambda_2 / lambda_1`` of the unit ball, ``j_{n/2,1}^2 / j_{n/2-1,1}^2``."""
        return (self.j_next / self.j) ** 2


def constants(n: int) -> UniversalConstants:
    if not isinstance(n, (int, np.integer)) or not 1 <= n <= 60:
        raise ValueError(f"dimension must be an integer in [1, 60], got {n!r}")
    n = int(n)
    j = first_bessel_zero(n / 2.0 - 1.0)
    j2 = j * j
    c_box = 12.0 * j2
    return UniversalConstants(
        n=n,
        j=j,
        j_next=first_bessel_zero(n / 2.0),
        c_n_box=c_box,
        c_n=n**3 * c_box,
        alpha_n=16.0 / math.pi**2 * j2 * n**3,
        beta_n=1.0 / (n**3 * c_box),
        d_n_box=1.0 / c_box,
        alpha_n_box=16.0 / math.pi**2 * j2,
        mult_coeff=math.exp(0.5 * n * math.log(12.0) + 1.5 * n * math.log(n) + n * math.log(j)),
    )


@dataclass(frozen=True)
class BoundReport:
    inequality_id: str
    n: int
    k: int
    l: Optional[int]
    lhs: float
    rhs: float
    margin: float
    satisfied: Optional[bool]
    applicable: bool
    tolerance_band: float
    domain_id: str
    margin_kind: str = RATIO
    note: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        if not self.applicable:
            return "not-applicable"
        return "satisfied" if self.satisfied else "violated"

    @property
    def violated(self) -> bool:
        return self.applicable and not self.satisfied

    def with_lhs(self, lhs: float) -> "BoundReport":
        """Same instance with a different left-hand side (for orientation self-tests)."""
        return make_report(
            self.inequality_id, self.n, self.k, self.l, lhs, self.rhs, self.tolerance_band,
            self.domain_id, applicable=self.applicable, note=self.note, extra=self.extra,
        )

    def to_dict(self) -> dict[str, Any]:
        out = {name: getattr(self, name) for name in REPORT_FIELDS}
        out["verdict"] = self.verdict
        out["margin_kind"] = self.margin_kind
        if self.note:
            out["note"] = self.note
        if self.extra:
            out["extra"] = dict(self.extra)
        return out


def make_report(
    inequality_id: str,
    n: int,
    k: int,
    l: Optional[int],
    lhs: float,
    rhs: float,
    band: float,
    domain_id: str,
    applicable: bool = True,
    note: str = "",
    extra: Optional[dict] = None,
) -> BoundReport:
    kind = MARGIN_KIND[inequality_id]
    lhs, rhs, band = float(lhs), float(rhs), float(band)
    if kind == RATIO:
        margin = rhs / lhs - 1.0 if lhs > 0 else math.inf
    else:
        margin = rhs - lhs
    satisfied = bool(lhs <= rhs + band) if applicable else None
    return BoundReport(
        inequality_id=inequality_id, n=int(n), k=int(k), l=None if l is None else int(l),
        lhs=lhs, rhs=rhs, margin=margin, satisfied=satisfied, applicable=applicable,
        tolerance_band=band, domain_id=domain_id, margin_kind=kind, note=note, extra=extra or {},
    )


def _need(spec: Spectrum, length: int) -> None:
    if len(spec) < length:
        raise SpectrumTooShortError(f"need {length} eigenvalues, spectrum has {len(spec)}")


def _check_indices(k: int, l: int) -> None:
    if l < 1 or k < l:
        raise ValueError(f"need k >= l >= 1, got k={k}, l={l}")


# ---------------------------------------------------------------------------
# ratio bounds


def check_theorem1(spec: Spectrum, n: int, k: int, l: int, box_constant: bool = False) -> BoundReport:
    """``lambda_k <= c (k/l)^(2/n) lambda_l`` with ``c = 12 n^3 j^2`` (or ``12 j^2`` for boxes)."""
    _check_indices(k, l)
    _need(spec, k)
    cst = constants(n)
    c = cst.c_n_box if box_constant else cst.c_n
    factor = c * (k / l) ** (2.0 / n)
    band = BAND_FACTOR * (spec.error(k) + factor * spec.error(l))
    return make_report("theorem1_box" if box_constant else "theorem1", n, k, l, spec[k], factor * spec[l], band, spec.domain_id)


def check_theorem2(spec: Spectrum, n: int, k: int, l: int, box_constant: bool = False) -> BoundReport:
    """``beta (k/l)^(2/n) lambda_l <= lambda_k`` provided ``lambda_l > alpha lambda_1``."""
    _check_indices(k, l)
    _need(spec, k)
    cst = constants(n)
    alpha, beta = (cst.alpha_n_box, cst.d_n_box) if box_constant else (cst.alpha_n, cst.beta_n)
    hypothesis = spec[l] > alpha * spec[1]
    factor = beta * (k / l) ** (2.0 / n)
    band = BAND_FACTOR * (factor * spec.error(l) + spec.error(k))
    extra = {"hypothesis_ratio": spec[l] / spec[1], "alpha": alpha, "hypothesis_holds": bool(hypothesis)}
    return make_report(
        "theorem2_box" if box_constant else "theorem2", n, k, l, factor * spec[l], spec[k], band,
        spec.domain_id, applicable=bool(hypothesis), extra=extra,
    )


def spectrum_multiplicity(spec: Spectrum, k: int) -> int:
    """Multiplicity of ``lambda_k`` inside ``spec``; errors if the cluster may run past the end."""
    _need(spec, k)
    vals = spec.values
    lam = vals[k - 1]
    tol = max(TIE_RTOL * lam, BAND_FACTOR * spec.error(k))
    close = np.abs(vals - lam) <= tol
    last = int(np.flatnonzero(close).max()) + 1
    if last == len(vals):
        raise ClusterUnresolvedError(f"cluster at lambda_{k} reaches the end of the spectrum")
    return int(close.sum())


def check_corollary_multiplicity(spec: Spectrum, n: int, k: int) -> BoundReport:
    """``m_k <= 12^(n/2) n^(3n/2) j^n k`` provided ``lambda_k > alpha_n lambda_1``."""
    cst = constants(n)
    _need(spec, k)
    hypothesis = spec[k] > cst.alpha_n * spec[1]
    mult = spectrum_multiplicity(spec, k)
    return make_report(
        "corollary_multiplicity", n, k, None, mult, cst.mult_coeff * k, 0.0, spec.domain_id,
        applicable=bool(hypothesis),
        extra={"hypothesis_ratio": spec[k] / spec[1], "alpha": cst.alpha_n, "hypothesis_holds": bool(hypothesis)},
    )


def berezin_li_yau_bound(n: int, volume: float, k: int) -> float:
    return (2.0 * math.pi) ** 2 * n / (n + 2.0) * (k / (unit_ball_volume(n) * volume)) ** (2.0 / n)


def check_berezin_li_yau(spec: Spectrum, n: int, volume: float, k: int) -> BoundReport:
    if not volume > 0:
        raise ValueError("volume must be positive")
    _need(spec, k)
    return make_report(
        "berezin_li_yau", n, k, None, berezin_li_yau_bound(n, volume, k), spec[k],
        BAND_FACTOR * spec.error(k), spec.domain_id,
    )


def check_hersch_protter(lambda1: float, inradius: float, n: int, error: float = 0.0, domain_id: str = "") -> BoundReport:
    """``pi^2 / (4 rho^2) <= lambda_1`` for convex domains."""
    if not inradius > 0:
        raise ValueError("inradius must be positive")
    return make_report(
        "hersch_protter", n, 1, None, math.pi**2 / (4.0 * inradius**2), lambda1,
        BAND_FACTOR * error, domain_id, extra={"inradius": inradius},
    )


def check_inradius_upper(lambda1: float, inradius: float, n: int, error: float = 0.0, domain_id: str = "") -> BoundReport:
    """``lambda_1 <= j^2 / rho^2`` (the inscribed ball dominates)."""
    if not inradius > 0:
        raise ValueError("inradius must be positive")
    j = constants(n).j
    return make_report(
        "inradius_upper", n, 1, None, lambda1, j * j / inradius**2,
        BAND_FACTOR * error, domain_id, extra={"inradius": inradius},
    )


# ---------------------------------------------------------------------------
# classical inequalities


def cheng_yang_c0(n: int, k: int) -> float:
    """``C_0(n, k)``; ``a(p)`` is replaced by its envelope 2.64."""
    if k < 1:
        raise ValueError("k must be positive")
    if k == 1:
        return constants(n).ball_ratio
    return 1.0 + CHENG_YANG_A / n


def _errsum(spec: Spectrum, idx: Iterable[int], weight: float = 1.0) -> float:
    return weight * sum(spec.error(i) for i in idx)


def check_ppw(spec: Spectrum, n: int, k: int, printed: bool = False) -> list[BoundReport]:
    """Gap and ratio forms of Payne-Polya-Weinberger.

    The valid inequality carries ``4/(nk)`` and ``1 + 4/n``; ``printed=True``
    evaluates the ``1/(nk)`` and ``1 + 1/n`` variants instead, which the unit
    square already violates at ``k = 1``.
    """
    _need(spec, k + 1)
    coef = 1.0 if printed else 4.0
    total = float(np.sum(spec.values[:k]))
    gap_coef = coef / (n * k)
    gap_band = BAND_FACTOR * (spec.error(k + 1) + spec.error(k) + _errsum(spec, range(1, k + 1), gap_coef))
    ratio = 1.0 + coef / n
    ratio_band = BAND_FACTOR * (spec.error(k + 1) + ratio * spec.error(k))
    suffix = "_printed" if printed else ""
    gap = make_report(
        "ppw_gap" + suffix, n, k, None, spec[k + 1] - spec[k], gap_coef * total, gap_band, spec.domain_id,
        extra={"printed_rhs": total / (n * k)} if not printed else {},
    )
    rat = make_report(
        "ppw_ratio" + suffix, n, k, None, spec[k + 1], ratio * spec[k], ratio_band, spec.domain_id,
        extra={"printed_rhs": (1.0 + 1.0 / n) * spec[k]} if not printed else {},
    )
    return [gap, rat]


def check_yang_second(spec: Spectrum, n: int, k: int) -> BoundReport:
    _need(spec, k + 1)
    coef = (1.0 + 4.0 / n) / k
    band = BAND_FACTOR * (spec.error(k + 1) + _errsum(spec, range(1, k + 1), coef))
    return make_report("yang_second", n, k, None, spec[k + 1], coef * float(np.sum(spec.values[:k])), band, spec.domain_id)


def check_levitin_parnovski(spec: Spectrum, n: int, k: int) -> list[BoundReport]:
    """Sum form ``sum_{i<=n} lambda_{k+i} <= (4+n) lambda_k`` and its per-index consequences."""
    _need(spec, k + n)
    reports = []
    total = float(np.sum(spec.values[k : k + n]))
    band = BAND_FACTOR * (_errsum(spec, range(k + 1, k + n + 1)) + (4.0 + n) * spec.error(k))
    reports.append(make_report("levitin_parnovski_sum", n, k, None, total, (4.0 + n) * spec[k], band, spec.domain_id))
    for i in range(1, n + 1):
        coef = (4.0 + n) / (n - i + 1)
        band = BAND_FACTOR * (spec.error(k + i) + coef * spec.error(k))
        reports.append(
            make_report(
                "levitin_parnovski_index", n, k, None, spec[k + i], coef * spec[k], band, spec.domain_id,
                note=f"i={i}", extra={"i": i},
            )
        )
    return reports


def check_ashbaugh_benguria(spec: Spectrum, n: int) -> BoundReport:
    _need(spec, 2)
    ratio = constants(n).ball_ratio
    band = BAND_FACTOR * (spec.error(2) + ratio * spec.error(1)) / spec[1]
    return make_report("ashbaugh_benguria", n, 1, None, spec[2] / spec[1], ratio, band, spec.domain_id)


def check_cheng_yang(spec: Spectrum, n: int, k: int) -> list[BoundReport]:
    """``lambda_{k+1} <= k^(2/n) lambda_1`` (only for n, k >= 41) and the ``C_0(n, k)`` version."""
    _need(spec, k + 1)
    growth = k ** (2.0 / n)
    applicable = n >= 41 and k >= 41
    band = BAND_FACTOR * (spec.error(k + 1) + growth * spec.error(1))
    plain = make_report(
        "cheng_yang", n, k, None, spec[k + 1], growth * spec[1], band, spec.domain_id, applicable=applicable,
    )
    c0 = cheng_yang_c0(n, k)
    band = BAND_FACTOR * (spec.error(k + 1) + c0 * growth * spec.error(1))
    full = make_report(
        "cheng_yang_c0", n, k, None, spec[k + 1], c0 * growth * spec[1], band, spec.domain_id, extra={"C0": c0},
    )
    return [plain, full]


def check_classical_suite(spec: Spectrum, n: int, ks: Sequence[int] = (1,)) -> list[BoundReport]:
    """PPW, Yang, Levitin-Parnovski, Ashbaugh-Benguria and Cheng-Yang at every ``k`` in ``ks``."""
    ks = list(ks)
    if not ks:
        return []
    _need(spec, n + max(ks) + 1)
    reports = [check_ashbaugh_benguria(spec, n)]
    for k in ks:
        reports.extend(check_ppw(spec, n, k))
        reports.append(check_yang_second(spec, n, k))
        reports.extend(check_levitin_parnovski(spec, n, k))
        reports.extend(check_cheng_yang(spec, n, k))
    return reports


def weyl_diagnostic(spec: Spectrum, n: int, volume: float) -> np.ndarray:
    """``lambda_k / (4 pi^2 (k / (omega_n vol))^(2/n))`` for every ``k`` in the spectrum."""
    if not volume > 0:
        raise ValueError("volume must be positive")
    k = np.arange(1, len(spec) + 1, dtype=float)
    weyl = 4.0 * math.pi**2 * (k / (unit_ball_volume(n) * volume)) ** (2.0 / n)
    return spec.values / weyl


# ---------------------------------------------------------------------------
# vectorised forms over all index pairs (exact spectra)


def theorem1_margins(values: np.ndarray, n: int, box_constant: bool = False) -> np.ndarray:
    """``M[k-1, l-1] = rhs/lhs - 1`` for ``l <= k``; NaN above the diagonal."""
    vals = np.asarray(values, dtype=float)
    cst = constants(n)
    c = cst.c_n_box if box_constant else cst.c_n
    idx = np.arange(1, vals.size + 1, dtype=float)
    ratio = (idx[:, None] / idx[None, :]) ** (2.0 / n)
    rhs = c * ratio * vals[None, :]
    out = rhs / vals[:, None] - 1.0
    out[np.triu_indices(vals.size, 1)] = np.nan
    return out


def theorem2_margins(values: np.ndarray, n: int, box_constant: bool = False) -> np.ndarray:
    """Like :func:`theorem1_margins` for the lower bound; NaN where the hypothesis fails."""
    vals = np.asarray(values, dtype=float)
    cst = constants(n)
    alpha, beta = (cst.alpha_n_box, cst.d_n_box) if box_constant else (cst.alpha_n, cst.beta_n)
    idx = np.arange(1, vals.size + 1, dtype=float)
    ratio = (idx[:, None] / idx[None, :]) ** (2.0 / n)
    lhs = beta * ratio * vals[None, :]
    out = vals[:, None] / lhs - 1.0
    out[np.triu_indices(vals.size, 1)] = np.nan
    hyp = vals > alpha * vals[0]
    out[:, ~hyp] = np.nan
    return out


def reports_to_csv(reports: Sequence[BoundReport], digits: int = 12) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REPORT_FIELDS + ("verdict", "margin_kind", "note"))
    for r in reports:
        row = []
        for name in REPORT_FIELDS:
            v = getattr(r, name)
            if isinstance(v, bool):
                row.append("true" if v else "false")
            elif isinstance(v, float):
                row.append(format_float(v, digits))
            else:
                row.append("" if v is None else v)
        row.extend([r.verdict, r.margin_kind, r.note])
        writer.writerow(row)
    return buf.getvalue()


def format_float(x: float, digits: int = 17) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return f"{x:.{digits}g}"
