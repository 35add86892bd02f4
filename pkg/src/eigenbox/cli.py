"""Command-line front end: ``eigenbox <command> [flags]``.

Exit status is 0 when no applicable inequality is violated, 2 when one is,
and 1 on usage or input errors. JSON floats are printed with 17 significant
digits and CSV floats with 12, so output bytes are stable per seed.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import io
import json
import math
import os
import sys
from pathlib import Path
from typing import Any, Callable, Optional, Sequence

import numpy as np

from . import bounds
from .bounds import BoundReport, format_float, reports_to_csv
from .box_spectrum import Orthotope, iter_eigenvalues, kth_eigenvalue, resolved_prefix, spectrum_prefix
from .fem_solver import richardson_estimate
from .geometry import (
    ConvexPolygon,
    SimplePolygon,
    inradius,
    load_polygon,
    random_convex_polygon,
    random_star_polygon,
    regular_polygon,
    right_triangle,
    unit_square,
)
from .proof_replay import replay_lemma31, replay_lemma33

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VIOLATION = 2

JSON_DIGITS = 17
CSV_DIGITS = 12

BUILTIN_MESHES = (1 / 16, 1 / 32, 1 / 64)
MAX_BOX_TRIALS = 100_000
MAX_POLYGON_TRIALS = 500
POLYGON_MESH_FRACTIONS = (1 / 4, 1 / 8, 1 / 16)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse exits with 2 by default
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# output


def to_json(obj: Any, digits: int = JSON_DIGITS) -> str:
    """JSON text with floats at a fixed number of significant digits."""
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        # JSON has no inf/nan; emit the strings the CSV writer uses
        return format_float(x, digits) if math.isfinite(x) else json.dumps(format_float(x))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {to_json(v, digits)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(to_json(v, digits) for v in obj) + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def rows_to_csv(rows: Sequence[dict], digits: int = CSV_DIGITS) -> str:
    buf = io.StringIO()
    if not rows:
        return ""
    writer = csv.writer(buf, lineterminator="\n")
    header = list(rows[0].keys())
    writer.writerow(header)
    for row in rows:
        out = []
        for name in header:
            v = row.get(name)
            if isinstance(v, bool):
                out.append("true" if v else "false")
            elif isinstance(v, (float, np.floating)):
                out.append(format_float(float(v), digits))
            elif v is None:
                out.append("")
            elif isinstance(v, (list, tuple)):
                out.append(";".join(format_float(float(x), digits) if isinstance(x, float) else str(x) for x in v))
            else:
                out.append(str(v))
        writer.writerow(out)
    return buf.getvalue()


def _emit(args: argparse.Namespace, json_obj: Any, csv_text: str) -> None:
    text = to_json(json_obj) + "\n" if args.format == "json" else csv_text
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)


def _note(message: str) -> None:
    print(message, file=sys.stderr)


# ---------------------------------------------------------------------------
# argument helpers


def _floats(text: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc
    if not vals:
        raise argparse.ArgumentTypeError("expected at least one number")
    return vals


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from exc
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _nonnegative_int(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {v}")
    return v


def _seed(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def thread_count() -> int:
    """Worker count from ``EIGENBOX_THREADS`` (unset or 0 means one per CPU)."""
    raw = os.environ.get("EIGENBOX_THREADS", "0").strip() or "0"
    try:
        value = int(raw)
    except ValueError as exc:
        raise UsageError(f"EIGENBOX_THREADS must be an integer, got {raw!r}") from exc
    if value < 0:
        raise UsageError("EIGENBOX_THREADS must be non-negative")
    return value or (os.cpu_count() or 1)


# ---------------------------------------------------------------------------
# constants


def cmd_constants(args: argparse.Namespace) -> int:
    lo = args.dim if args.dim is not None else 1
    hi = args.max_dim if args.max_dim is not None else lo
    if not 1 <= lo <= hi <= 60:
        raise UsageError(f"need 1 <= dim <= max-dim <= 60, got {lo}, {hi}")
    rows = []
    for n in range(lo, hi + 1):
        c = bounds.constants(n)
        rows.append({
            "n": n, "j": c.j, "c_n_box": c.c_n_box, "c_n": c.c_n,
            "alpha_n": c.alpha_n, "beta_n": c.beta_n, "mult_coeff": c.mult_coeff,
        })
    _emit(args, rows, rows_to_csv(rows))
    return EXIT_OK


# ---------------------------------------------------------------------------
# box spectrum


def _box_from_args(half_widths: Optional[tuple], sides: Optional[tuple]) -> Orthotope:
    if (half_widths is None) == (sides is None):
        raise UsageError("give exactly one of --half-widths and --sides")
    return Orthotope(half_widths) if half_widths is not None else Orthotope.from_sides(sides)


def cmd_box_spectrum(args: argparse.Namespace) -> int:
    box = _box_from_args(args.half_widths, args.sides)
    rows = []
    for k, (value, m) in enumerate(iter_eigenvalues(box, budget=args.count + 1), start=1):
        rows.append({"k": k, "eigenvalue": value, "over_pi2": value / math.pi**2, "multi_index": list(m)})
        if k == args.count:
            break
    csv_rows = [{**r, "multi_index": " ".join(str(i) for i in r["multi_index"])} for r in rows]
    _emit(args, rows, rows_to_csv(csv_rows))
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify


BUILTINS: dict[str, Callable[[], ConvexPolygon]] = {
    "square": unit_square,
    "disk64": lambda: regular_polygon(64),
    "right-triangle": right_triangle,
}

SUITES = ("all", "theorem1", "theorem2", "classical", "blt", "inradius")


def _resolve_domain(spec: str, mesh: Optional[tuple]) -> tuple[Any, Optional[tuple]]:
    if spec.startswith("box:"):
        return Orthotope.from_sides(_floats(spec[4:])), None
    if spec.startswith("builtin:"):
        name = spec[len("builtin:"):]
        if name not in BUILTINS:
            raise UsageError(f"unknown builtin domain {name!r}; choose from {', '.join(BUILTINS)}")
        return BUILTINS[name](), mesh or BUILTIN_MESHES
    path = Path(spec)
    if not path.exists():
        raise UsageError(f"domain {spec!r} is neither box:..., builtin:... nor an existing polygon file")
    if mesh is None:
        raise UsageError("polygon domains need --mesh h1,h2,h3")
    return load_polygon(path), mesh


def domain_reports(
    spec, n: int, volume: float, rho: float, k: int, l: int, suite: str, is_box: bool
) -> list[BoundReport]:
    """Every report of ``suite`` at ``(k, l)`` for one computed spectrum."""
    want = (lambda name: suite in ("all", name))
    out: list[BoundReport] = []
    if want("theorem1"):
        out.append(bounds.check_theorem1(spec, n, k, l))
        if is_box:
            out.append(bounds.check_theorem1(spec, n, k, l, box_constant=True))
    if want("theorem2"):
        out.append(bounds.check_theorem2(spec, n, k, l))
        if is_box:
            out.append(bounds.check_theorem2(spec, n, k, l, box_constant=True))
        try:
            out.append(bounds.check_corollary_multiplicity(spec, n, k))
        except bounds.ClusterUnresolvedError as exc:
            _note(f"corollary skipped: {exc}")
    if want("classical"):
        out.extend(bounds.check_classical_suite(spec, n, (k,)))
    if want("blt"):
        out.extend(bounds.check_berezin_li_yau(spec, n, volume, i) for i in range(1, k + 1))
    if want("inradius"):
        out.append(bounds.check_hersch_protter(spec[1], rho, n, spec.error(1), spec.domain_id))
        out.append(bounds.check_inradius_upper(spec[1], rho, n, spec.error(1), spec.domain_id))
    return out


def cmd_verify(args: argparse.Namespace) -> int:
    if args.l > args.k:
        raise UsageError("need --l <= --k")
    domain, mesh = _resolve_domain(args.domain, args.mesh)
    if isinstance(domain, Orthotope):
        n = domain.dim
        spec = resolved_prefix(domain, max(args.k, n + args.k + 1))
        volume, rho = domain.volume, domain.inradius
    else:
        n = 2
        # one extra eigenvalue so the cluster at k can close
        spec = richardson_estimate(domain, n + args.k + 2, mesh)
        volume, rho = domain.area, inradius(domain)[0]
    reports = domain_reports(spec, n, volume, rho, args.k, args.l, args.suite, isinstance(domain, Orthotope))
    _emit(args, [r.to_dict() for r in reports], reports_to_csv(reports, CSV_DIGITS))
    return EXIT_VIOLATION if any(r.violated for r in reports) else EXIT_OK


# ---------------------------------------------------------------------------
# sweep


def _summarise_margins(acc: dict, key: str, margins: np.ndarray, violated: int, evaluated: int, trial: int, config: dict) -> None:
    entry = acc.setdefault(key, {"evaluated": 0, "applicable": 0, "violations": 0, "margins": [], "worst": None})
    entry["evaluated"] += evaluated
    entry["applicable"] += int(margins.size)
    entry["violations"] += violated
    if margins.size:
        entry["margins"].append(margins)
        low = float(margins.min())
        if entry["worst"] is None or low < entry["worst"][0]:
            entry["worst"] = (low, trial, config)


def _reports_into(acc: dict, reports: Sequence[BoundReport], trial: int, config: dict) -> None:
    by_id: dict[str, list[BoundReport]] = {}
    for r in reports:
        by_id.setdefault(r.inequality_id, []).append(r)
    for key, group in by_id.items():
        app = [r for r in group if r.applicable]
        margins = np.array([r.margin for r in app], dtype=float)
        _summarise_margins(acc, key, margins, sum(r.violated for r in app), len(group), trial, config)


def _box_trial(seed: int, trial: int, dim: int, count: int) -> dict:
    rng = np.random.default_rng(np.random.SeedSequence([seed, trial]))
    box = Orthotope(tuple(np.exp(rng.uniform(math.log(0.25), math.log(2.0), dim))))
    config = {"trial": trial, "domain_id": box.domain_id, "half_widths": list(box.half_widths)}
    spec = resolved_prefix(box, count)
    vals = spec.values[:count]
    acc: dict = {}
    for key, fn, box_c in (
        ("theorem1", bounds.theorem1_margins, False),
        ("theorem1_box", bounds.theorem1_margins, True),
        ("theorem2", bounds.theorem2_margins, False),
        ("theorem2_box", bounds.theorem2_margins, True),
    ):
        m = fn(vals, dim, box_constant=box_c)
        finite = m[np.isfinite(m)]
        evaluated = count * (count + 1) // 2
        _summarise_margins(acc, key, finite, int(np.sum(finite < 0.0)), evaluated, trial, config)
    reports: list[BoundReport] = []
    for k in range(1, count):
        reports.append(bounds.check_corollary_multiplicity(spec, dim, k))
        reports.append(bounds.check_berezin_li_yau(spec, dim, box.volume, k))
    reports.extend(bounds.check_classical_suite(spec, dim, range(1, min(100, count - dim - 1) + 1)))
    reports.append(bounds.check_hersch_protter(spec[1], box.inradius, dim, domain_id=box.domain_id))
    reports.append(bounds.check_inradius_upper(spec[1], box.inradius, dim, domain_id=box.domain_id))
    _reports_into(acc, reports, trial, config)
    return acc


def _polygon_trial(seed: int, trial: int, count: int, nonconvex: bool) -> dict:
    rng = np.random.default_rng(np.random.SeedSequence([seed, trial]))
    poly = random_star_polygon(rng) if nonconvex else random_convex_polygon(rng)
    if nonconvex:
        # grid estimate of the largest inscribed disk, only used to pick the mesh
        lo, hi = poly.bbox
        g = np.stack(np.meshgrid(*(np.linspace(a, b, 64) for a, b in zip(lo, hi))), -1).reshape(-1, 2)
        rho = float(poly.slack(g).max())
    else:
        rho = inradius(poly)[0]
    config = {"trial": trial, "domain_id": poly.domain_id, "vertices": poly.vertices.tolist()}
    hs = tuple(rho * f for f in POLYGON_MESH_FRACTIONS)
    spec = richardson_estimate(poly, count, hs)
    reports: list[BoundReport] = []
    for k in range(1, count + 1):
        for l in range(1, k + 1):
            reports.append(bounds.check_theorem1(spec, 2, k, l))
            reports.append(bounds.check_theorem2(spec, 2, k, l))
        reports.append(bounds.check_berezin_li_yau(spec, 2, poly.area, k))
    reports.extend(bounds.check_classical_suite(spec, 2, range(1, count - 2)))
    if not nonconvex:
        reports.append(bounds.check_hersch_protter(spec[1], rho, 2, spec.error(1), spec.domain_id))
        reports.append(bounds.check_inradius_upper(spec[1], rho, 2, spec.error(1), spec.domain_id))
    acc: dict = {}
    _reports_into(acc, reports, trial, config)
    return acc


def _merge(total: dict, part: dict) -> None:
    for key, e in part.items():
        t = total.setdefault(key, {"evaluated": 0, "applicable": 0, "violations": 0, "margins": [], "worst": None})
        t["evaluated"] += e["evaluated"]
        t["applicable"] += e["applicable"]
        t["violations"] += e["violations"]
        t["margins"].extend(e["margins"])
        if e["worst"] is not None and (t["worst"] is None or e["worst"][0] < t["worst"][0]):
            t["worst"] = e["worst"]


def run_sweep(
    trials: int, shape: str, dim: int, seed: int, count: int, nonconvex: bool = False, workers: int = 1
) -> list[dict]:
    """Per-inequality summary rows; trials are merged in trial order whatever the worker count."""
    if shape == "box":
        job = lambda t: (_box_trial, (seed, t, dim, count))  # noqa: E731
    else:
        job = lambda t: (_polygon_trial, (seed, t, count, nonconvex))  # noqa: E731
    total: dict = {}
    if workers > 1 and trials > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(fn, *a) for fn, a in map(job, range(trials))]
            for fut in futures:
                _merge(total, fut.result())
    else:
        for t in range(trials):
            fn, a = job(t)
            _merge(total, fn(*a))
    rows = []
    for key in sorted(total):
        e = total[key]
        margins = np.concatenate(e["margins"]) if e["margins"] else np.empty(0)
        worst = e["worst"]
        rows.append({
            "inequality_id": key,
            "evaluated": e["evaluated"],
            "applicable": e["applicable"],
            "not_applicable": e["evaluated"] - e["applicable"],
            "violations": e["violations"],
            "min_margin": float(margins.min()) if margins.size else None,
            "median_margin": float(np.median(margins)) if margins.size else None,
            "worst_trial": worst[1] if worst else None,
            "worst_domain": worst[2] if worst else None,
        })
    return rows


def cmd_sweep(args: argparse.Namespace) -> int:
    if args.shape == "box":
        if args.trials > MAX_BOX_TRIALS:
            raise UsageError(f"box sweeps are limited to {MAX_BOX_TRIALS} trials")
        if args.nonconvex:
            raise UsageError("--nonconvex applies to polygon sweeps only")
        if not 1 <= args.dim <= 60:
            raise UsageError("--dim must lie in 1..60")
        count = args.count or 50
        if count < args.dim + 3:
            raise UsageError(f"--count must be at least dim + 3 = {args.dim + 3}")
    else:
        if args.trials > MAX_POLYGON_TRIALS:
            raise UsageError(f"polygon sweeps are limited to {MAX_POLYGON_TRIALS} trials")
        if args.dim != 2:
            raise UsageError("polygon sweeps are planar; use --dim 2")
        count = args.count or 6
        if not 4 <= count <= 50:
            raise UsageError("--count must lie in 4..50 for polygons")
    rows = run_sweep(args.trials, args.shape, args.dim, args.seed, count, args.nonconvex, thread_count())
    csv_rows = [{**r, "worst_domain": r["worst_domain"]["domain_id"] if r["worst_domain"] else None} for r in rows]
    _emit(args, rows, rows_to_csv(csv_rows))
    violations = sum(r["violations"] for r in rows)
    if args.nonconvex:
        # outside the convex class nothing is claimed; margins are informational
        return EXIT_OK
    return EXIT_VIOLATION if violations else EXIT_OK


# ---------------------------------------------------------------------------
# counterexample


def first_unconditional_failure() -> int:
    """Smallest ``k`` with ``beta_2 k lambda_1(Omega_k) > lambda_k(Omega_k)``, i.e. ``beta_2 (k + 1/k) > 2``."""
    beta = bounds.constants(2).beta_n
    t = 2.0 / beta
    k = max(1, math.floor(0.5 * (t + math.sqrt(t * t - 4.0))))
    while beta * (k + 1.0 / k) <= 2.0:
        k += 1
    while k > 1 and beta * ((k - 1) + 1.0 / (k - 1)) > 2.0:
        k -= 1
    return k


def counterexample_row(k: int) -> dict:
    box = Orthotope.from_sides((float(k), 1.0))
    spec = spectrum_prefix(box, k)
    beta = bounds.constants(2).beta_n
    rhs = beta * k * spec[1]
    return {
        "k": k, "lambda_1": spec[1], "lambda_k": spec[k], "ratio": spec[k] / spec[1],
        "unconditional_rhs": rhs, "unconditional_fails": bool(rhs > spec[k]),
    }


def cmd_counterexample(args: argparse.Namespace) -> int:
    rows = [counterexample_row(k) for k in range(1, args.k + 1)]
    first = first_unconditional_failure()
    _note(f"first k where beta_2 k lambda_1 exceeds lambda_k = 2 pi^2: {first}")
    _emit(args, {"rows": rows, "first_failing_k": first}, rows_to_csv(rows))
    return EXIT_OK


# ---------------------------------------------------------------------------
# replay


def cmd_replay(args: argparse.Namespace) -> int:
    box = Orthotope(args.box)
    if box.dim > 3:
        raise UsageError("replay supports boxes of dimension <= 3")
    if args.l > args.k:
        raise UsageError("need --l <= --k")
    fn = replay_lemma31 if args.lemma == "31" else replay_lemma33
    t = fn(box, args.k, args.l, seed=args.seed)
    steps = t.to_list()
    _emit(args, steps, rows_to_csv(steps))
    if not t.applicable:
        _note("not-applicable: hypothesis lambda_l > (16/pi^2) j^2 lambda_1 fails")
        return EXIT_OK
    _note(f"r = {format_float(t.r)}, k' = {t.k_prime}, {'pass' if t.passed else 'FAIL at ' + t.first_failure.step_id}")
    return EXIT_OK if t.passed else EXIT_VIOLATION


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--output", help="write to this file instead of stdout")

    parser = _Parser(prog="eigenbox", description="Dirichlet eigenvalue ratio bounds on convex domains")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("constants", parents=[common], help="table of the universal constants")
    p.add_argument("--dim", type=_positive_int)
    p.add_argument("--max-dim", type=_positive_int)
    p.set_defaults(func=cmd_constants)

    p = sub.add_parser("box-spectrum", parents=[common], help="exact eigenvalues of a box")
    p.add_argument("--half-widths", type=_floats)
    p.add_argument("--sides", type=_floats)
    p.add_argument("--count", type=_positive_int, required=True)
    p.set_defaults(func=cmd_box_spectrum)

    p = sub.add_parser("verify", parents=[common], help="check inequalities on one domain")
    p.add_argument("--domain", required=True, help="box:s1,..,sn | polygon.json | builtin:square|disk64|right-triangle")
    p.add_argument("--suite", choices=SUITES, default="all")
    p.add_argument("--k", type=_positive_int, default=2)
    p.add_argument("--l", type=_positive_int, default=1)
    p.add_argument("--mesh", type=_floats, help="mesh widths for the Richardson pipeline")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", parents=[common], help="margins over seeded random domains")
    p.add_argument("--trials", type=_nonnegative_int, required=True)
    p.add_argument("--dim", type=_positive_int, default=2)
    p.add_argument("--shape", choices=("box", "polygon"), default="box")
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--count", type=_positive_int, help="eigenvalues per domain (50 for boxes, 6 for polygons)")
    p.add_argument("--nonconvex", action="store_true", help="star-shaped polygons; margins only, no claims")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("counterexample", parents=[common], help="why the lower bound needs its hypothesis")
    p.add_argument("--k", type=_positive_int, required=True)
    p.set_defaults(func=cmd_counterexample)

    p = sub.add_parser("replay", parents=[common], help="numerical replay of the packing lemmas")
    p.add_argument("--box", type=_floats, required=True, help="half-widths a1,..,an")
    p.add_argument("--k", type=_positive_int, required=True)
    p.add_argument("--l", type=_positive_int, required=True)
    p.add_argument("--lemma", choices=("31", "33"), default="31")
    p.add_argument("--seed", type=_seed, default=0)
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits on --help (0) and on bad flags (usage code)
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (UsageError, ValueError, OSError) as exc:
        _note(f"eigenbox: error: {exc}")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
