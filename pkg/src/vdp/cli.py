"""Command-line interface.

Exit codes: 0 success, 1 no discriminator (or generation failure),
2 usage or schema error.
"""

from __future__ import annotations

import argparse
import re
import sys
from pathlib import Path

from .harness import (
    GenerationError,
    ManifestError,
    generate_synthetic_puzzle,
    load_manifest,
    load_puzzle,
    model_to_json,
    run_dataset,
    solve_manifest,
    spec_from_json,
)
from .logic import LogicError, Signature, check_well_sorted, evaluate
from .scenes import ExtractionConfig, SchemaError, build_model, load_detections
from .smtlib import SolverError
from .syntax import ParseError, parse_formula
from .synthesis import SynthesisConfig


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vdp", description="FO discriminator synthesis")
    sub = p.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="solve one puzzle manifest")
    solve.add_argument("--puzzle", required=True, help="manifest file")
    solve.add_argument("--top-k", type=int, default=5)
    solve.add_argument("--max-vars", type=int, default=3)
    solve.add_argument("--max-atoms", type=int, default=5)
    solve.add_argument("--timeout", type=float, default=300.0)
    solve.add_argument(
        "--backend", choices=["enumerative", "constraint"], default="enumerative"
    )
    solve.add_argument("--seed", type=int, default=0)
    solve.add_argument("--threads", type=int, default=1)

    batch = sub.add_parser("batch", help="solve a directory of manifests")
    batch.add_argument("--dir", required=True)
    batch.add_argument("--out", help="write the machine-readable report here")
    batch.add_argument("--top-k", type=int, default=5)
    batch.add_argument("--max-vars", type=int, default=3)
    batch.add_argument("--max-atoms", type=int, default=5)
    batch.add_argument("--timeout", type=float, default=300.0)

    gen = sub.add_parser("generate", help="generate a synthetic puzzle")
    gen.add_argument("--spec", required=True, help="planted-spec JSON file")
    gen.add_argument("--out", default=".", help="output directory")

    extract = sub.add_parser("extract-model", help="print the FO model of a scene")
    extract.add_argument("--detections", required=True)
    extract.add_argument("--threshold", type=float, default=0.5)

    ev = sub.add_parser("eval-formula", help="evaluate a formula on a scene")
    ev.add_argument("--formula", required=True)
    ev.add_argument("--detections", required=True)
    ev.add_argument("--threshold", type=float, default=0.5)
    return p


def _cmd_solve(args) -> int:
    manifest = load_manifest(args.puzzle)
    cfg = SynthesisConfig(
        max_vars=args.max_vars,
        max_atoms=args.max_atoms,
        top_k=args.top_k,
        time_budget_seconds=args.timeout,
        backend=args.backend,
        seed=args.seed,
        threads=args.threads,
    )
    row, outcome = solve_manifest(manifest, cfg)
    if not outcome.results:
        print(f"no discriminator ({outcome.status})")
        return 1
    best = outcome.results[0]
    print(f"chosen candidate: #{best.chosen_candidate + 1}")
    for rank, result in enumerate(outcome.results, start=1):
        print(
            f"{rank}. {result.text}  "
            f"cost={result.cost.as_tuple()}  candidate=#{result.chosen_candidate + 1}"
        )
    for flag in row.flags:
        print(f"flag: {flag}")
    return 0


def _cmd_batch(args) -> int:
    cfg = SynthesisConfig(
        max_vars=args.max_vars,
        max_atoms=args.max_atoms,
        top_k=args.top_k,
        time_budget_seconds=args.timeout,
    )
    report = run_dataset(args.dir, cfg)
    print(report.to_table(), end="")
    if args.out:
        Path(args.out).write_text(report.to_json())
    return 0


def _cmd_generate(args) -> int:
    spec = spec_from_json(Path(args.spec).read_text())
    try:
        manifest_path = generate_synthetic_puzzle(spec, args.out)
    except GenerationError as e:
        print(f"generation failed: {e}", file=sys.stderr)
        return 1
    print(str(manifest_path))
    return 0


def _cmd_extract_model(args) -> int:
    scene = load_detections(Path(args.detections).read_text())
    cfg = ExtractionConfig(score_threshold=args.threshold)
    vocab = sorted(
        {d.label for d in scene.detections if d.score >= cfg.score_threshold}
    )
    model = build_model(scene, vocab, cfg)
    print(model_to_json(model), end="")
    return 0


_LABEL_POSITION_RE = re.compile(
    r"\(\s*labelOf\s+\S+\s+([^\s()]+)\s*\)|\(\s*count\s+([^\s()]+)"
)


def _formula_labels(text: str) -> set[str]:
    """Label constants mentioned in formula text, by atom position."""
    out = set()
    for m in _LABEL_POSITION_RE.finditer(text):
        sym = m.group(1) or m.group(2)
        if sym and not sym.isdigit():
            out.add(sym)
    return out


def _cmd_eval_formula(args) -> int:
    scene = load_detections(Path(args.detections).read_text())
    cfg = ExtractionConfig(score_threshold=args.threshold)
    vocab = sorted(
        {d.label for d in scene.detections if d.score >= cfg.score_threshold}
        | _formula_labels(args.formula)
    )
    model = build_model(scene, [v for v in vocab], cfg)
    sig = Signature(frozenset(vocab), numeric_literal_bound=len(model.objects))
    formula = parse_formula(args.formula, sig)
    errors = check_well_sorted(formula, sig, dialect=False)
    if errors:
        raise LogicError("; ".join(errors))
    print("true" if evaluate(model, formula) else "false")
    return 0


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code not in (0, None) else 0
    handlers = {
        "solve": _cmd_solve,
        "batch": _cmd_batch,
        "generate": _cmd_generate,
        "extract-model": _cmd_extract_model,
        "eval-formula": _cmd_eval_formula,
    }
    try:
        return handlers[args.command](args)
    except (ManifestError, SchemaError, ParseError, LogicError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except SolverError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
