"""Exact Dirichlet spectra of axis-aligned boxes.

The box ``[-a_1, a_1] x ... x [-a_n, a_n]`` has eigenvalues
``(pi^2/4) * sum_i m_i^2 / a_i^2`` over multi-indices ``m_i >= 1``.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np

ENUMERATION_BUDGET = 10**7
TIE_RTOL = 1e-12

EXACT = "exact"
FINITE_DIFFERENCE = "finite_difference"


class EnumerationBudgetError(RuntimeError):
    pass


@dataclass(frozen=True)
class Orthotope:
    """Axis-aligned box given by its half-widths, stored in ascending order."""

    half_widths: tuple[float, ...]

    def __post_init__(self) -> None:
        hw = tuple(sorted(float(a) for a in self.half_widths))
        if not hw:
            raise ValueError("an orthotope needs at least one axis")
        if any(not math.isfinite(a) or a <= 0.0 for a in hw):
            raise ValueError(f"half-widths must be positive and finite, got {self.half_widths}")
        object.__setattr__(self, "half_widths", hw)

    @classmethod
    def from_sides(cls, sides: Sequence[float]) -> "Orthotope":
        return cls(tuple(0.5 * float(s) for s in sides))

    @property
    def dim(self) -> int:
        return len(self.half_widths)

    @property
    def volume(self) -> float:
        return math.prod(2.0 * a for a in self.half_widths)

    @property
    def inradius(self) -> float:
        return self.half_widths[0]

    @property
    def diameter(self) -> float:
        return 2.0 * math.sqrt(sum(a * a for a in self.half_widths))

    def scaled(self, t: float) -> "Orthotope":
        return Orthotope(tuple(t * a for a in self.half_widths))

    @property
    def domain_id(self) -> str:
        return "box:" + ",".join(repr(2.0 * a) for a in self.half_widths)

    def axis_weights(self) -> tuple[float, ...]:
        """``pi^2 / (4 a_i^2)``, the eigenvalue contribution of ``m_i = 1`` on axis ``i``."""
        return tuple(math.pi**2 / (4.0 * a * a) for a in self.half_widths)


@dataclass(frozen=True)
class Spectrum:
    """Ascending eigenvalues with provenance.

    ``errors`` holds per-eigenvalue error bars for numerical spectra (absent
    for exact ones).
    """

    values: np.ndarray
    source: str = EXACT
    mesh_width: Optional[float] = None
    domain_id: str = ""
    errors: Optional[np.ndarray] = field(default=None)

    def __post_init__(self) -> None:
        vals = np.array(self.values, dtype=float)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        if self.source not in (EXACT, FINITE_DIFFERENCE):
            raise ValueError(f"unknown spectrum source {self.source!r}")
        if vals.ndim != 1 or vals.size == 0:
            raise ValueError("a spectrum needs at least one eigenvalue")
        if not vals[0] > 0.0:
            raise ValueError("first eigenvalue must be strictly positive")
        if np.any(np.diff(vals) < 0.0):
            raise ValueError("eigenvalues must be nondecreasing")
        if self.source == EXACT and self.mesh_width is not None:
            raise ValueError("exact spectra carry no mesh width")
        if self.errors is not None:
            err = np.array(self.errors, dtype=float)
            if err.shape != vals.shape:
                raise ValueError("errors must match values in shape")
            err.setflags(write=False)
            object.__setattr__(self, "errors", err)

    def __len__(self) -> int:
        return int(self.values.size)

    def __getitem__(self, k: int) -> float:
        """1-based access: ``spec[k]`` is ``lambda_k``."""
        if not 1 <= k <= len(self):
            raise IndexError(f"lambda_{k} not in spectrum of length {len(self)}")
        return float(self.values[k - 1])

    def error(self, k: int) -> float:
        if self.errors is None:
            return 0.0
        return float(self.errors[k - 1])

    @property
    def is_exact(self) -> bool:
        return self.source == EXACT


def _level(weights: Sequence[float], m: Sequence[int]) -> float:
    # left-to-right accumulation; count_below reproduces this order exactly
    total = 0.0
    for w, mi in zip(weights, m):
        total += w * mi * mi
    return total


def iter_eigenvalues(box: Orthotope, budget: int = ENUMERATION_BUDGET) -> Iterator[tuple[float, tuple[int, ...]]]:
    """Yield ``(eigenvalue, multi-index)`` in ascending order (ties by index).

    Best-first walk over the lattice ``Z_{>=1}^n``: the heap holds the
    frontier, each pop pushes the ``n`` unit-step neighbours not seen before.
    """
    w = box.axis_weights()
    n = len(w)
    start = (1,) * n
    heap = [(_level(w, start), start)]
    seen = {start}
    emitted = 0
    while heap:
        value, m = heapq.heappop(heap)
        yield value, m
        emitted += 1
        if emitted >= budget:
            raise EnumerationBudgetError(f"enumeration budget of {budget} eigenvalues exhausted")
        for i in range(n):
            nb = m[:i] + (m[i] + 1,) + m[i + 1 :]
            if nb not in seen:
                seen.add(nb)
                heapq.heappush(heap, (_level(w, nb), nb))


def _check_count(k: int) -> None:
    if not isinstance(k, (int, np.integer)) or k < 1:
        raise ValueError(f"index must be a positive integer, got {k!r}")
    if k > ENUMERATION_BUDGET:
        raise EnumerationBudgetError(f"k={k} exceeds the enumeration budget {ENUMERATION_BUDGET}")


def spectrum_prefix(box: Orthotope, count: int) -> Spectrum:
    _check_count(count)
    vals = np.empty(count)
    for i, (value, _) in enumerate(iter_eigenvalues(box, budget=count + 1)):
        vals[i] = value
        if i + 1 == count:
            break
    return Spectrum(vals, source=EXACT, domain_id=box.domain_id)


def kth_eigenvalue(box: Orthotope, k: int) -> float:
    return spectrum_prefix(box, k)[k]


def count_below(box: Orthotope, lam: float) -> int:
    """Number of eigenvalues ``<= lam`` (with multiplicity), by per-axis slicing."""
    if math.isnan(lam):
        raise ValueError("lambda must not be NaN")
    if math.isinf(lam):
        raise ValueError("lambda must be finite")
    w = box.axis_weights()
    n = len(w)
    # floor of the remaining axes, used to prune each slice
    rest_min = [sum(w[i + 1 :]) for i in range(n)]

    def last_axis(partial: float) -> int:
        wl = w[-1]
        if partial + wl > lam:
            return 0
        m = int(math.sqrt(max(lam - partial, 0.0) / wl))
        m = max(m, 1)
        while partial + wl * m * m > lam:
            m -= 1
        while partial + wl * (m + 1) * (m + 1) <= lam:
            m += 1
        return m

    def rec(axis: int, partial: float) -> int:
        if axis == n - 1:
            return last_axis(partial)
        total = 0
        mi = 1
        while partial + w[axis] * mi * mi + rest_min[axis] <= lam * (1.0 + 1e-15):
            total += rec(axis + 1, partial + w[axis] * mi * mi)
            mi += 1
        return total

    return rec(0, 0.0)


def multiplicity_of_kth(box: Orthotope, k: int) -> int:
    """Multiplicity of ``lambda_k`` with ties grouped at relative tolerance 1e-12."""
    lam = kth_eigenvalue(box, k)
    upper = count_below(box, lam * (1.0 + TIE_RTOL))
    lower = count_below(box, np.nextafter(lam * (1.0 - TIE_RTOL), 0.0))
    return upper - lower


def cluster_end(values: np.ndarray, k: int, rtol: float = TIE_RTOL) -> int:
    """1-based index of the last eigenvalue tied with ``values[k-1]``.

    Returns ``len(values) + 1`` when the tie might continue past the end.
    """
    lam = values[k - 1]
    j = k
    while j < len(values) and abs(values[j] - lam) <= rtol * lam:
        j += 1
    if j == len(values):
        return j + 1
    return j


def resolved_prefix(box: Orthotope, count: int) -> Spectrum:
    """Like :func:`spectrum_prefix` but extended until the cluster at ``count`` closes."""
    _check_count(count)
    vals: list[float] = []
    for value, _ in iter_eigenvalues(box):
        if len(vals) >= count and abs(value - vals[count - 1]) > TIE_RTOL * vals[count - 1]:
            vals.append(value)
            break
        vals.append(value)
    return Spectrum(np.array(vals), source=EXACT, domain_id=box.domain_id)
