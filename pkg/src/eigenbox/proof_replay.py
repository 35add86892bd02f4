"""Numerical replay of the packing arguments behind the box eigenvalue ratio bounds.

For a concrete box, the replay builds the separation radius ``r``, a maximal
``r``-separated point set, and then evaluates every inequality of the
argument with the actual numbers: the covering-volume count, the
Berezin-Li-Yau substitution, the Gamma-function constant chain, the claim
``a_1 >= r/2``, the inradius of the half-radius pieces and the final chain
of eigenvalue comparisons against the exact box spectrum.

Two numerical facts shape the construction:

* Greedy selection runs over a candidate grid of pitch ``r/4``, not over the
  continuum, so the covering radius is ``r + (r/8) sqrt(n)`` at worst. The
  measured covering radius (probe grid of pitch ``r/8``) replaces ``r`` in the
  volume count, and the constant chain must absorb the ratio.
* A piece ``B(x, r/2) & R`` whose centre sits in a corner of the box has
  inradius ``r / (2 (1 + sqrt(n)))``, below ``r/4`` for ``n >= 2``. Candidates
  whose piece is that thin are therefore offered last, after the points on the
  edges of the box shrunk by ``r/4``; the chosen set is still maximal.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from .bounds import berezin_li_yau_bound, constants
from .box_spectrum import Orthotope, kth_eigenvalue, spectrum_prefix
from .special_functions import unit_ball_volume

MAX_REPLAY_DIM = 3
CANDIDATE_BUDGET = 2_000_000
PROBE_BUDGET = 20_000_000
REL_SLACK = 1e-12
TWO_OVER_SQRT3 = 2.0 / math.sqrt(3.0)


class ReplayBudgetError(RuntimeError):
    pass


class ProofStepFailure(AssertionError):
    def __init__(self, step: "ReplayStep"):
        super().__init__(f"step {step.step_id} failed: {step.description} ({step.lhs!r} vs {step.rhs!r})")
        self.step = step


@dataclass(frozen=True, eq=False)
class SeparatedSet:
    """Points pairwise at least ``r`` apart whose ``covering_radius``-balls cover the box."""

    points: np.ndarray
    r: float
    covering_radius: float
    probe_max: float
    probe_pitch: float
    min_distance: float

    @property
    def count(self) -> int:
        return int(self.points.shape[0])


def ball_box_inradius(centers: np.ndarray, radius: float, half_widths: np.ndarray, iters: int = 200) -> np.ndarray:
    """Inradius of ``B(x, radius) & box`` for each row ``x`` of ``centers``.

    A ball ``B(c, t)`` fits iff ``c`` lies in the box shrunk by ``t`` and
    ``|c - x| <= radius - t``, so the inradius is the largest ``t`` with
    ``dist(x, shrunk box) + t <= radius``, found by bisection.
    """
    x = np.abs(np.atleast_2d(centers))
    a = np.asarray(half_widths, dtype=float)
    lo = np.zeros(x.shape[0])
    hi = np.full(x.shape[0], min(radius, float(a.min())))

    def feasible(t: np.ndarray) -> np.ndarray:
        excess = np.maximum(x - (a[None, :] - t[:, None]), 0.0)
        return np.linalg.norm(excess, axis=1) + t <= radius

    ok_hi = feasible(hi)
    lo[ok_hi] = hi[ok_hi]
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        good = feasible(mid)
        lo = np.where(good, mid, lo)
        hi = np.where(good, hi, mid)
        if np.all(hi - lo <= 1e-15 * np.maximum(hi, 1e-300)):
            break
    return lo


def _axis_nodes(a: float, pitch: float) -> np.ndarray:
    m = max(1, math.ceil(2.0 * a / pitch - 1e-12))
    return np.linspace(-a, a, m + 1)


def _grid(axes: list[np.ndarray]) -> np.ndarray:
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([m.ravel() for m in mesh])


def _skeleton_points(inset: np.ndarray, r: float) -> np.ndarray:
    """Vertices of the box ``prod [-inset_i, inset_i]`` followed by evenly spaced points on its edges.

    An edge of length ``L`` gets ``floor(L/r)`` segments, so neighbours along
    it sit between ``r`` and ``1.5 r`` apart once ``L >= 2r``.
    """
    n = inset.size
    signs = np.array(list(itertools.product((-1.0, 1.0), repeat=n)))
    vertices = signs * inset[None, :]
    if n == 1:
        return vertices
    edge_pts = []
    for axis in range(n):
        m = max(1, math.floor(2.0 * inset[axis] / r))
        along = np.linspace(-inset[axis], inset[axis], m + 1)[1:-1]
        if along.size == 0:
            continue
        others = [j for j in range(n) if j != axis]
        for sg in itertools.product((-1.0, 1.0), repeat=n - 1):
            block = np.empty((along.size, n))
            block[:, axis] = along
            for j, sj in zip(others, sg):
                block[:, j] = sj * inset[j]
            edge_pts.append(block)
    return np.vstack([vertices, *edge_pts]) if edge_pts else vertices


def maximal_separated_set(box: Orthotope, r: float, seed: int = 0, thin_pieces_last: bool = True) -> SeparatedSet:
    """Greedy maximal ``r``-separated set over an ``r/4`` candidate grid.

    With ``thin_pieces_last`` the candidates are offered in tiers: the
    vertices and evenly spaced edge points of the box shrunk by ``r/4``, then
    grid candidates whose half-radius piece has inradius ``>= r/4`` in seeded
    random order, then the remaining grid candidates in seeded random order.
    The first tier is pairwise ``r``-separated whenever ``a_1 >= 3r/4`` and
    leaves every thin candidate within ``r`` of a chosen point, so the thin
    tier is never drawn from. ``thin_pieces_last=False`` shuffles the plain
    grid instead.
    """
    n = box.dim
    if n > MAX_REPLAY_DIM:
        raise ValueError(f"replay supports dimension <= {MAX_REPLAY_DIM}, got {n}")
    if not 0.0 < r <= box.diameter:
        raise ValueError(f"radius must be in (0, diameter={box.diameter}], got {r}")
    a = np.asarray(box.half_widths)
    axes = [_axis_nodes(ai, r / 4.0) for ai in a]
    if math.prod(len(ax) for ax in axes) > CANDIDATE_BUDGET:
        raise ReplayBudgetError("candidate grid exceeds budget; radius too small for this box")
    grid = _grid(axes)
    rng = np.random.default_rng(seed)
    inset = a - r / 4.0
    if thin_pieces_last and np.all(inset >= 0.0):
        skeleton = _skeleton_points(inset, r)
        thick = ball_box_inradius(grid, r / 2.0, a) >= (r / 4.0) * (1.0 - REL_SLACK)
        cand = np.vstack([skeleton, grid])
        offset = len(skeleton)
        order = np.concatenate([
            np.arange(offset),
            offset + rng.permutation(np.flatnonzero(thick)),
            offset + rng.permutation(np.flatnonzero(~thick)),
        ])
    else:
        cand = grid
        order = rng.permutation(len(cand))

    # accepting a point blocks every candidate closer than r to it
    cand_tree = cKDTree(cand)
    blocked = np.zeros(len(cand), dtype=bool)
    chosen: list[int] = []
    for idx in order:
        if blocked[idx]:
            continue
        chosen.append(int(idx))
        blocked[cand_tree.query_ball_point(cand[idx], r * (1.0 - REL_SLACK))] = True
    points = cand[chosen]

    probe_axes = [_axis_nodes(ai, r / 8.0) for ai in a]
    if math.prod(len(ax) for ax in probe_axes) > PROBE_BUDGET:
        raise ReplayBudgetError("probe grid exceeds budget")
    tree = cKDTree(points)
    # probe in slabs along the first axis to bound memory
    rest = _grid(probe_axes[1:]) if n > 1 else np.empty((1, 0))
    probe_max = 0.0
    for x0 in probe_axes[0]:
        slab = np.column_stack([np.full(len(rest), x0), rest])
        dist, _ = tree.query(slab)
        probe_max = max(probe_max, float(dist.max()))
    pitch = max(float(np.max(np.diff(ax))) if len(ax) > 1 else 0.0 for ax in probe_axes)
    # any point of the box is within half a probe-cell diagonal of a probe
    covering = probe_max + 0.5 * pitch * math.sqrt(n)
    if len(points) > 1:
        dd, _ = tree.query(points, k=2)
        min_dist = float(dd[:, 1].min())
    else:
        min_dist = math.inf
    return SeparatedSet(points, float(r), covering, probe_max, pitch, min_dist)


@dataclass(frozen=True)
class ReplayStep:
    step_id: str
    description: str
    lhs: float
    rhs: float
    relation: str
    passed: bool

    def to_dict(self) -> dict:
        return {"step_id": self.step_id, "description": self.description, "lhs": self.lhs, "rhs": self.rhs, "pass": self.passed}


def _step(step_id: str, description: str, lhs: float, rhs: float, relation: str = "<=") -> ReplayStep:
    lhs, rhs = float(lhs), float(rhs)
    scale = max(abs(lhs), abs(rhs))
    if relation == "<=":
        ok = lhs <= rhs + REL_SLACK * scale
    elif relation == "<":
        ok = lhs < rhs
    elif relation == "==":
        ok = abs(lhs - rhs) <= REL_SLACK * scale
    else:
        raise ValueError(relation)
    return ReplayStep(step_id, description, lhs, rhs, relation, bool(ok))


@dataclass
class ReplayTranscript:
    box: Orthotope
    lemma: str
    k: int
    l: int
    r: float = math.nan
    k_prime: int = 0
    applicable: bool = True
    seed: int = 0
    steps: list[ReplayStep] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.applicable and all(s.passed for s in self.steps)

    @property
    def first_failure(self) -> Optional[ReplayStep]:
        return next((s for s in self.steps if not s.passed), None)

    def step(self, step_id: str) -> ReplayStep:
        return next(s for s in self.steps if s.step_id == step_id)

    def raise_for_failure(self) -> None:
        bad = self.first_failure
        if bad is not None:
            raise ProofStepFailure(bad)

    def to_list(self) -> list[dict]:
        return [s.to_dict() for s in self.steps]


def gamma_chain_scalar(n: int) -> float:
    """``((2 pi)^2 n / (n+2))^(1/2) * omega_n^(-2/n)``, which must reach ``2/sqrt(3)`` for ``k <= k'``."""
    return math.sqrt(4.0 * math.pi**2 * n / (n + 2.0)) * unit_ball_volume(n) ** (-2.0 / n)


def _gamma_steps(n: int, cover_ratio: float) -> list[ReplayStep]:
    g = gamma_chain_scalar(n)
    lower = 2.0 * math.sqrt(n / (n + 2.0))
    gamma_form = lower * math.exp(math.lgamma(n / 2.0 + 1.0) * 2.0 / n)
    return [
        _step("s4a", "((2pi)^2 n/(2+n))^(1/2) omega_n^(-2/n) = 2 (n/(2+n))^(1/2) Gamma(n/2+1)^(2/n)", g, gamma_form, "=="),
        _step("s4b", "2 (n/(2+n))^(1/2) <= 2 (n/(2+n))^(1/2) Gamma(n/2+1)^(2/n)", lower, gamma_form),
        _step("s4c", "2/sqrt(3) <= 2 (n/(2+n))^(1/2)", TWO_OVER_SQRT3, lower),
        _step("s4d", "(2/sqrt(3)) * (covering radius / r) <= Gamma-chain scalar", TWO_OVER_SQRT3 * cover_ratio, g),
    ]


def _packing_steps(
    box: Orthotope, sep: SeparatedSet, bly_index: int, lam_bly: float, bly_name: str, count: int, count_name: str
) -> list[ReplayStep]:
    """Covering, Berezin-Li-Yau and count steps shared by both lemmas."""
    n = box.dim
    r = sep.r
    omega = unit_ball_volume(n)
    vol = box.volume
    rho = sep.covering_radius
    c_bly = 4.0 * math.pi**2 * n / (n + 2.0)
    count_rhs = (rho / r) ** n * TWO_OVER_SQRT3**n * c_bly ** (-n / 2.0) * omega**2 * sep.count
    return [
        _step("s2a", "points are r-separated: r <= min pairwise distance", r, sep.min_distance),
        # candidates have pitch r/4, so greedy maximality leaves every point within r + (r/8) sqrt(n)
        _step("s2b", "maximality: max probe distance <= r (1 + sqrt(n)/8)", sep.probe_max, r * (1.0 + math.sqrt(n) / 8.0)),
        _step("s2c", "vol R <= k' omega_n rho^n", vol, sep.count * omega * rho**n),
        _step("s3a", f"Berezin-Li-Yau at lambda_{bly_name}", berezin_li_yau_bound(n, vol, bly_index), lam_bly),
        _step(
            "s3b", f"{count_name} <= (rho/r)^n (2/sqrt3)^n ((2+n)/(4 pi^2 n))^(n/2) omega_n^2 {count_name}'",
            count, count_rhs,
        ),
    ]


def _piece_steps(box: Orthotope, sep: SeparatedSet, j: float) -> tuple[list[ReplayStep], float]:
    r = sep.r
    inrad = ball_box_inradius(sep.points, r / 2.0, np.asarray(box.half_widths))
    worst = float(inrad.min())
    steps = [
        _step("s6a", "half-radius balls are disjoint: r <= min pairwise distance", r, sep.min_distance),
        _step("s6b", "inradius of every piece B(x_i, r/2) & R is >= r/4", r / 4.0, worst),
    ]
    return steps, j * j / worst**2


def replay_lemma31(box: Orthotope, k: int, l: int, seed: int = 0, strict: bool = False) -> ReplayTranscript:
    """Replay the upper bound ``lambda_k <= 12 j^2 (k/l)^(2/n) lambda_l`` for a box."""
    if not 1 <= l <= k:
        raise ValueError(f"need k >= l >= 1, got k={k}, l={l}")
    n = box.dim
    spec = spectrum_prefix(box, k)
    lam1, lam_l, lam_k = spec[1], spec[l], spec[k]
    j = constants(n).j
    r = TWO_OVER_SQRT3 * (l / k) ** (1.0 / n) / math.sqrt(lam_l)
    t = ReplayTranscript(box=box, lemma="31", k=k, l=l, r=r, seed=seed)
    sep = maximal_separated_set(box, r, seed)
    t.k_prime = sep.count
    kp = sep.count
    a1 = box.half_widths[0]
    steps = t.steps
    steps.append(_step("s1", "r = (2/sqrt3) (l/k)^(1/n) / sqrt(lambda_l)", sep.r, r, "=="))
    steps.extend(_packing_steps(box, sep, l, lam_l, "l", k, "k"))
    steps.extend(_gamma_steps(n, sep.covering_radius / r))
    steps.append(_step("s4e", "k <= k'", k, kp))
    hp = math.pi / (2.0 * math.sqrt(lam1))
    hp_l = math.pi * (l / k) ** (1.0 / n) / (2.0 * math.sqrt(lam_l))
    steps.append(_step("s5a", "Hersch-Protter: pi / (2 sqrt(lambda_1)) <= a_1", hp, a1))
    steps.append(_step("s5b", "pi (l/k)^(1/n) / (2 sqrt(lambda_l)) <= pi / (2 sqrt(lambda_1))", hp_l, hp))
    steps.append(_step("s5c", "r/2 < pi (l/k)^(1/n) / (2 sqrt(lambda_l))", r / 2.0, hp_l, "<"))
    steps.append(_step("s5d", "claim: r/2 <= a_1", r / 2.0, a1))
    piece, piece_bound = _piece_steps(box, sep, j)
    steps.extend(piece)
    lam_kp = kth_eigenvalue(box, kp)
    final = 12.0 * j * j * (k / l) ** (2.0 / n) * lam_l
    steps.append(_step("s7a", "lambda_k <= lambda_k'", lam_k, lam_kp))
    steps.append(_step("s7b", "lambda_k' <= max_i j^2 / inrad(A_i)^2", lam_kp, piece_bound))
    steps.append(_step("s7c", "max_i j^2 / inrad(A_i)^2 <= j^2 / (r/4)^2", piece_bound, j * j / (r / 4.0) ** 2))
    steps.append(_step("s7d", "j^2 / (r/4)^2 = 12 j^2 (k/l)^(2/n) lambda_l", j * j / (r / 4.0) ** 2, final, "=="))
    steps.append(_step("s7e", "lambda_k <= 12 j^2 (k/l)^(2/n) lambda_l", lam_k, final))
    if strict:
        t.raise_for_failure()
    return t


def replay_lemma33(box: Orthotope, k: int, l: int, seed: int = 0, strict: bool = False) -> ReplayTranscript:
    """Replay the conditional lower bound ``lambda_l <= 12 j^2 (l/k)^(2/n) lambda_k`` for a box.

    Not applicable unless ``lambda_l > (16/pi^2) j^2 lambda_1``.
    """
    if not 1 <= l <= k:
        raise ValueError(f"need k >= l >= 1, got k={k}, l={l}")
    n = box.dim
    cst = constants(n)
    j = cst.j
    spec = spectrum_prefix(box, k)
    lam1, lam_l, lam_k = spec[1], spec[l], spec[k]
    t = ReplayTranscript(box=box, lemma="33", k=k, l=l, seed=seed)
    hyp = _step("s0", "hypothesis: (16/pi^2) j^2 lambda_1 < lambda_l", cst.alpha_n_box * lam1, lam_l, "<")
    t.steps.append(hyp)
    if not hyp.passed:
        t.applicable = False
        return t
    r = TWO_OVER_SQRT3 * (k / l) ** (1.0 / n) / math.sqrt(lam_k)
    t.r = r
    sep = maximal_separated_set(box, r, seed)
    t.k_prime = lp = sep.count
    a1 = box.half_widths[0]
    steps = t.steps
    steps.append(_step("s1", "r = (2/sqrt3) (k/l)^(1/n) / sqrt(lambda_k)", sep.r, r, "=="))
    steps.extend(_packing_steps(box, sep, k, lam_k, "k", l, "l"))
    steps.extend(_gamma_steps(n, sep.covering_radius / r))
    steps.append(_step("s4e", "l <= l'", l, lp))
    steps.append(_step("s5", "contradiction branch excluded: r/2 < a_1", r / 2.0, a1, "<"))
    piece, piece_bound = _piece_steps(box, sep, j)
    steps.extend(piece)
    lam_lp = kth_eigenvalue(box, lp)
    final = 12.0 * j * j * (l / k) ** (2.0 / n) * lam_k
    steps.append(_step("s7a", "lambda_l <= lambda_l'", lam_l, lam_lp))
    steps.append(_step("s7b", "lambda_l' <= max_i j^2 / inrad(B_i)^2", lam_lp, piece_bound))
    steps.append(_step("s7c", "max_i j^2 / inrad(B_i)^2 <= j^2 / (r/4)^2", piece_bound, j * j / (r / 4.0) ** 2))
    steps.append(_step("s7d", "j^2 / (r/4)^2 = 12 j^2 (l/k)^(2/n) lambda_k", j * j / (r / 4.0) ** 2, final, "=="))
    steps.append(_step("s7e", "lambda_l <= 12 j^2 (l/k)^(2/n) lambda_k", lam_l, final))
    if strict:
        t.raise_for_failure()
    return t
