from __future__ import annotations

"""
Command line: spectrum, rects, order, verify, kemperman

Exit codes:
  0  ok
  1  no witness found / a verification suite failed
  2  invalid input or usage
  3  a proven bound was violated (pipeline bug)
  4  strips are not disjoint
"""

import argparse
import json
import math
import os
import sys
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, ValidationError

from . import circle_sets as cs
from . import corpus
from . import curve_model as cm
from .errors import (
    CurveFitError,
    CurveGenerationError,
    CurveValidationError,
    DisjointnessViolated,
    PreconditionError,
    RectSpecError,
)
from .ordering import (
    Strip,
    antisymmetry_suite,
    apex_parities,
    cycle_suite,
    precedes,
    section_of,
)
from .rect_solver import solve_at_theta
from .settings import RunConfig, default_seed, output_dir
from .spectrum import compute_spectrum, corollary_check, write_plot_csv, write_report_json
from .strip_mesh import DomeStrip, load_mesh

EXIT_OK = 0
EXIT_UNWITNESSED = 1
EXIT_INVALID = 2
EXIT_BOUND = 3
EXIT_NOT_DISJOINT = 4

SUITES = ("antisymmetry", "cycles", "kemperman", "triples", "spectrum-corpus", "parity-invariance")

INPUT_ERRORS = (
    CurveValidationError, CurveFitError, CurveGenerationError, PreconditionError,
    ValidationError, json.JSONDecodeError, OSError, KeyError, ValueError,
)


def _config(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        grid=args.grid,
        dtheta=args.dtheta,
        residual_tol=args.tol,
        eps_rel=args.eps_rel,
        seed=args.seed,
        resolution=args.resolution,
        out=args.out,
        verbose=not args.quiet,
    )


def load_curve_ref(ref: str, K: int = 8) -> cm.JordanCurve:
    """builtin:<name>, a curve JSON file, or a CSV of samples."""
    if corpus.is_builtin(ref):
        return corpus.curve(ref)
    if ref.lower().endswith(".csv"):
        return cm.from_samples(cm.load_samples(ref), K, name=ref)
    return cm.load_curve(ref)


def load_strip_ref(ref: str) -> Strip:
    if corpus.is_builtin(ref):
        return corpus.dome(ref)
    return load_mesh(ref)


def _out_path(args: argparse.Namespace, default_name: str) -> str:
    if args.out:
        path = args.out
    else:
        path = os.path.join(output_dir(), default_name)
    folder = os.path.dirname(path)
    if folder:
        os.makedirs(folder, exist_ok=True)
    return path


def _slug(ref: str) -> str:
    base = os.path.splitext(os.path.basename(corpus.builtin_name(ref)))[0]
    return "".join(c if c.isalnum() or c in "-_" else "_" for c in base) or "curve"


# Commands

def cmd_spectrum(args: argparse.Namespace) -> int:
    config = _config(args)
    try:
        curve = load_curve_ref(args.curve, args.K)
        report = compute_spectrum(curve, config, curve_id=args.curve)
    except INPUT_ERRORS as e:
        print(f"❌ {args.curve}: {e}", file=sys.stderr)
        return EXIT_INVALID

    path = _out_path(args, f"{_slug(args.curve)}-spectrum.json")
    write_report_json(report, path)
    csv_path = args.csv or os.path.splitext(path)[0] + ".csv"
    write_plot_csv(report, csv_path)
    verdict = corollary_check(report)
    print(json.dumps({
        "curve": args.curve,
        "measure": round(report.measure, 6),
        "arcs": [[float(a), float(b)] for a, b in report.arcs.arcs],
        "verdict": verdict.passed,
        "report": path,
        "csv": csv_path,
    }))
    return EXIT_OK if verdict.passed else EXIT_BOUND


def cmd_rects(args: argparse.Namespace) -> int:
    config = _config(args)
    if args.ratio is not None:
        ratio = args.ratio
    else:
        ratio = math.tan(args.r * math.pi / 4.0)
    theta = 4.0 * math.atan(ratio)
    try:
        curve = load_curve_ref(args.curve, args.K)
        verdict = cm.validate(curve)
        if not verdict.valid:
            raise CurveValidationError(verdict.summary(), verdict)
    except INPUT_ERRORS as e:
        print(f"❌ {args.curve}: {e}", file=sys.stderr)
        return EXIT_INVALID

    witnesses = solve_at_theta(curve, theta, config)
    if not witnesses:
        print(f"⚠️ no rectangle of ratio {ratio:.6f} found (unwitnessed, not proven absent)")
        return EXIT_UNWITNESSED
    for k, w in enumerate(witnesses):
        verts = ", ".join(f"({v.real:.9f}, {v.imag:.9f})" for v in w.vertices)
        print(f"✅ witness {k}: ratio {w.aspect_ratio:.6f} residual {w.residual:.2e} vertices [{verts}]")
    if args.out:
        with open(_out_path(args, ""), "w") as f:
            json.dump([w.to_dump().model_dump() for w in witnesses], f, indent=2)
    return EXIT_OK


def cmd_order(args: argparse.Namespace) -> int:
    try:
        a, b = load_strip_ref(args.a), load_strip_ref(args.b)
    except INPUT_ERRORS as e:
        print(f"❌ {e}", file=sys.stderr)
        return EXIT_INVALID
    try:
        forward = precedes(a, b, phi=args.phi, seed=args.seed)
        backward = precedes(b, a, phi=args.phi, seed=args.seed)
    except DisjointnessViolated as e:
        print(f"❌ {e}", file=sys.stderr)
        return EXIT_NOT_DISJOINT
    except RectSpecError as e:
        print(f"❌ {e}", file=sys.stderr)
        return EXIT_INVALID

    relation = "A ≺ B" if forward else "B ≺ A"
    print(json.dumps({
        "a": args.a, "b": args.b, "relation": relation,
        "a_precedes_b": forward, "b_precedes_a": backward,
        "consistent": forward != backward, "phi": args.phi, "apex_seed": args.seed,
    }, ensure_ascii=False))
    return EXIT_OK if forward != backward else EXIT_BOUND


class VerifySummary(BaseModel):
    suite: str
    seed: int
    cases: int
    failures: int
    passed: bool
    first_failure: Optional[Dict[str, Any]] = None
    details: Dict[str, Any] = Field(default_factory=dict)


def _summary(suite: str, seed: int, results: List[Tuple[bool, Dict[str, Any]]], **details: Any) -> VerifySummary:
    failed = [info for ok, info in results if not ok]
    return VerifySummary(
        suite=suite, seed=seed, cases=len(results), failures=len(failed),
        passed=not failed and bool(results), first_failure=failed[0] if failed else None, details=details,
    )


def verify_antisymmetry(seed: int, config: RunConfig) -> VerifySummary:
    report = antisymmetry_suite(corpus.dome("dome-1"), corpus.dome("dome-2-rot-half"), 100, seed, config.verbose)
    bad = set(report.discrepancies)
    results = [(r.consistent and r.phi not in bad, r.model_dump()) for r in report.results]
    return _summary("antisymmetry", seed, results, skipped=len(report.skipped))


def random_dome_triple(rng: np.random.Generator) -> List[DomeStrip]:
    heights = rng.choice(np.arange(1, 60), size=3, replace=False) / 10.0
    angles = rng.choice(np.arange(0, 360), size=3, replace=False) * (2 * math.pi / 360)
    return [DomeStrip(float(h), complex(np.exp(1j * a))) for h, a in zip(heights, angles)]


def verify_cycles(seed: int, config: RunConfig, triples: int = 50) -> VerifySummary:
    rng = np.random.default_rng(seed)
    results = []
    ordered = [corpus.dome("dome-1"), corpus.dome("dome-2"), corpus.dome("dome-3")]
    base = cycle_suite(ordered, seed=seed)
    results.append((base.passed and base.order == [0, 1, 2], {"case": "heights 1,2,3", "order": base.order}))
    for k in range(triples):
        family = random_dome_triple(rng)
        report = cycle_suite(family, seed=seed + k)
        by_height = sorted(range(3), key=lambda i: family[i].apex_height)
        ok = report.passed and report.order == by_height
        results.append((ok, {"case": k, "heights": [d.apex_height for d in family], "order": report.order, "cycles": report.cycles}))
    return _summary("cycles", seed, results, triples=triples)


def verify_kemperman(seed: int, config: RunConfig, pairs: int = 1000, oracle_pairs: int = 20) -> VerifySummary:
    rng = np.random.default_rng(seed)
    results = []
    for k in range(pairs):
        A, B = cs.random_arc_set(rng), cs.random_arc_set(rng)
        verdict = cs.kemperman_check(A, B)
        results.append((verdict.holds, {"case": k, "a": A.to_dump().arcs, "b": B.to_dump().arcs, **verdict.model_dump()}))
    for k in range(oracle_pairs):
        A, B = cs.random_arc_set(rng), cs.random_arc_set(rng)
        results.append((cs.brute_force_agrees(A, B), {"oracle_case": k, "a": A.to_dump().arcs, "b": B.to_dump().arcs}))
    return _summary("kemperman", seed, results, pairs=pairs, oracle_pairs=oracle_pairs)


def verify_triples(seed: int, config: RunConfig, samples: int = 200) -> VerifySummary:
    results = []
    closed_third = cs.ArcSet.from_intervals([(Fraction(0), Fraction(1, 3))])
    found, _ = cs.triple_product_contains_identity(closed_third)
    results.append((not found, {"case": "(0, 1/3)"}))
    wider = cs.ArcSet.from_intervals([(Fraction(0), Fraction(1, 3) + Fraction(1, 100))])
    found, witness = cs.triple_product_contains_identity(wider)
    results.append((found and witness is not None and witness.total % 1 == 0, {"case": "(0, 1/3 + 1/100)"}))

    rng = np.random.default_rng(seed)
    tested = 0
    while tested < samples:
        X = cs.random_arc_set(rng, exact=True)
        if X.measure <= Fraction(1, 3):
            continue
        tested += 1
        found, _ = cs.triple_product_contains_identity(X)
        results.append((found, {"case": tested, "x": X.to_dump().arcs}))

    fixture = cs.theorem2_structure_check(
        cs.complement(cs.EXTREMAL_INTERSECTION_ARC),
        cs.ArcSet.from_intervals([(Fraction(2, 3), Fraction(1))]),
    )
    results.append((fixture.passed, {"case": "extremal fixture", **fixture.model_dump()}))
    return _summary("triples", seed, results, samples=samples)


def verify_spectrum_corpus(seed: int, config: RunConfig) -> VerifySummary:
    results = []
    for curve in corpus.random_corpus():
        report = compute_spectrum(curve, config)
        verdict = corollary_check(report)
        results.append((verdict.passed, {"curve": curve.name, **verdict.model_dump()}))
    return _summary("spectrum-corpus", seed, results)


def verify_parity_invariance(seed: int, config: RunConfig, fibers: int = 20, apexes: int = 10) -> VerifySummary:
    """The parity bit at a fiber must not depend on the apex."""
    low, tall = corpus.dome("dome-1"), corpus.dome("dome-2-rot-half")
    rng = np.random.default_rng(seed)
    results = []
    for k, phi in enumerate(rng.uniform(0.0, 2 * math.pi, fibers)):
        s_low, s_tall = section_of(low, phi), section_of(tall, phi)
        for key, (src, dst) in {"low->tall": (s_low, s_tall), "tall->low": (s_tall, s_low)}.items():
            bits = apex_parities(src, dst, apexes, seed=seed + k)
            results.append((len(set(bits)) == 1, {"phi": float(phi), "direction": key, "parities": bits}))
    return _summary("parity-invariance", seed, results, fibers=fibers, apexes=apexes)


VERIFIERS: Dict[str, Callable[[int, RunConfig], VerifySummary]] = {
    "antisymmetry": verify_antisymmetry,
    "cycles": verify_cycles,
    "kemperman": verify_kemperman,
    "triples": verify_triples,
    "spectrum-corpus": verify_spectrum_corpus,
    "parity-invariance": verify_parity_invariance,
}


def cmd_verify(args: argparse.Namespace) -> int:
    config = _config(args)
    summary = VERIFIERS[args.suite](args.seed, config)
    print(summary.model_dump_json())
    if args.out:
        with open(_out_path(args, ""), "w") as f:
            f.write(summary.model_dump_json(indent=2))
    return EXIT_OK if summary.passed else EXIT_UNWITNESSED


def cmd_kemperman(args: argparse.Namespace) -> int:
    try:
        A = cs.parse_intervals(args.a, exact=args.exact)
        B = cs.parse_intervals(args.b, exact=args.exact)
    except ValueError as e:
        print(f"❌ {e}", file=sys.stderr)
        return EXIT_INVALID
    verdict = cs.kemperman_check(A, B)
    print(json.dumps({
        "product": cs.product(A, B).to_dump().arcs,
        **verdict.model_dump(),
    }))
    return EXIT_OK if verdict.holds else EXIT_BOUND


def _positive_ratio(text: str) -> float:
    value = float(text)
    if not 0.0 < value <= 1.0:
        raise argparse.ArgumentTypeError(f"{value} is outside (0, 1]; fold ratios above 1 to their reciprocal")
    return value


def build_parser() -> argparse.ArgumentParser:
    defaults = RunConfig(seed=default_seed())
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--grid", type=int, default=defaults.grid, help=f"θ grid points on [0, π] (default: {defaults.grid}).")
    common.add_argument("--dtheta", type=float, default=defaults.dtheta, help="Bisection resolution δ_θ in radians.")
    common.add_argument("--tol", type=float, default=defaults.residual_tol, help="Newton residual tolerance.")
    common.add_argument("--eps-rel", type=float, default=defaults.eps_rel, dest="eps_rel", help="ε = (eps_rel · diameter)².")
    common.add_argument("--seed", type=int, default=defaults.seed, help="Random seed (default: RECTSPEC_SEED or 0).")
    common.add_argument("--resolution", type=int, default=defaults.resolution, help="Strip mesh resolution.")
    common.add_argument("--out", type=str, default=None, help="Output file path.")
    common.add_argument("--quiet", action="store_true", help="Suppress progress lines.")

    p = argparse.ArgumentParser(prog="rectspec", description="Inscribed rectangle spectra and Möbius strip ordering.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("spectrum", parents=[common], help="Measure the set of realized aspect ratios of a curve.")
    s.add_argument("curve", help="builtin:<name>, curve JSON, or CSV samples.")
    s.add_argument("--csv", type=str, default=None, help="Plot CSV path (default: next to the report).")
    s.add_argument("--K", type=int, default=8, help="Fourier order when fitting CSV samples.")
    s.set_defaults(func=cmd_spectrum)

    r = sub.add_parser("rects", parents=[common], help="Find inscribed rectangles of one aspect ratio.")
    r.add_argument("curve")
    group = r.add_mutually_exclusive_group(required=True)
    group.add_argument("--ratio", type=_positive_ratio, help="Side ratio in (0, 1].")
    group.add_argument("--r", type=_positive_ratio, help="Normalized r in (0, 1]; ratio = tan(rπ/4).")
    r.add_argument("--K", type=int, default=8)
    r.set_defaults(func=cmd_rects)

    o = sub.add_parser("order", parents=[common], help="Decide A ≺ B for two disjoint strips.")
    o.add_argument("a", help="builtin:dome-* or mesh JSON.")
    o.add_argument("b")
    o.add_argument("--phi", type=float, default=0.5, help="Fiber angle used for the parity.")
    o.set_defaults(func=cmd_order)

    v = sub.add_parser("verify", parents=[common], help="Run a property suite.")
    v.add_argument("suite", choices=SUITES)
    v.set_defaults(func=cmd_verify)

    k = sub.add_parser("kemperman", parents=[common], help="Arc-set product and Kemperman inequality.")
    k.add_argument("--a", required=True, help="Arcs as 'a:b;c:d' in turns (fractions allowed).")
    k.add_argument("--b", required=True)
    k.add_argument("--exact", action="store_true", help="Rational endpoint arithmetic.")
    k.set_defaults(func=cmd_kemperman)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        _config(args)
    except ValidationError as e:
        print(f"❌ invalid configuration: {e}", file=sys.stderr)
        return EXIT_INVALID
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
