"""SMT-LIB v2 backend: template encoding, solving, decoding.

A template fixes the quantifier prefix and the number of atoms; the body
is a right-associated chain of binary connectives over possibly-negated
atom leaves.  Holes (atom choices, negation flags, connective choices)
become SMT constants over finite enumeration sorts, model quantifiers are
expanded into finite conjunctions/disjunctions, and the discriminator
condition is asserted as a disjunction over the candidate models.

The solver is an external process speaking SMT-LIB v2 on stdin/stdout
(e.g. ``z3 -in`` or ``cvc5 --incremental``).  No in-process solver is
linked.
"""

from __future__ import annotations

import itertools
import os
import shlex
import subprocess
import time
from dataclasses import dataclass
from typing import Iterator, Sequence

from .logic import (
    And,
    Atom,
    Formula,
    Implies,
    Model,
    Not,
    Or,
    Signature,
    canonicalize,
    check_vacuous,
    cost_of,
    evaluate,
    print_formula,
)
from .synthesis import (
    EXISTS,
    FORALL,
    DiscriminatorResult,
    Puzzle,
    SynthesisConfig,
    SynthesisOutcome,
    _prefixes,
    _Space,
    atom_pool,
    is_discriminator,
    vars_of,
    wrap_prefix,
)


class SolverError(Exception):
    """External solver missing, failed, or produced unparseable output."""


@dataclass(frozen=True)
class Template:
    """Parse-tree shape with holes: fixed prefix, chain body of n atoms."""

    prefix: tuple[str, ...]
    num_atoms: int

    def __post_init__(self):
        if not self.prefix:
            raise ValueError("template prefix must be nonempty")
        if any(q not in (EXISTS, FORALL) for q in self.prefix):
            raise ValueError("prefix entries must be 'exists' or 'forall'")
        if self.num_atoms < 1:
            raise ValueError("num_atoms must be >= 1")

    def check_bounds(self, cfg: SynthesisConfig) -> None:
        if len(self.prefix) > cfg.max_vars or self.num_atoms > cfg.max_atoms:
            raise ValueError(
                f"template ({len(self.prefix)} vars, {self.num_atoms} atoms) "
                f"exceeds bounds ({cfg.max_vars}, {cfg.max_atoms})"
            )


def all_templates(cfg: SynthesisConfig) -> Iterator[Template]:
    """Templates in the search schedule's order: variables, then atoms,
    then quantifier prefix (fewer universals first)."""
    for num_vars in range(1, cfg.max_vars + 1):
        for num_atoms in range(1, cfg.max_atoms + 1):
            for prefix in _prefixes(num_vars):
                yield Template(prefix, num_atoms)


# ---------------------------------------------------------------------------
# Encoding


def _chain(parts: list[str], conns: list[str]) -> str:
    out = parts[-1]
    for leaf, conn in zip(reversed(parts[:-1]), reversed(conns)):
        out = (
            f"(ite (= {conn} conn_and) (and {leaf} {out}) "
            f"(ite (= {conn} conn_or) (or {leaf} {out}) (=> {leaf} {out})))"
        )
    return out


def encode_smtlib(
    puzzle: Puzzle,
    template: Template,
    cfg: SynthesisConfig | None = None,
    blocked: Sequence[dict] | None = None,
) -> str:
    """Standalone SMT-LIB v2 script; sat iff the template has a
    discriminator instantiation for the puzzle.

    ``blocked`` lists hole valuations (as decoded) to exclude, enabling
    all-solutions enumeration.
    """
    cfg = cfg or SynthesisConfig()
    template.check_bounds(cfg)
    num_vars = len(template.prefix)
    n = template.num_atoms
    pool = atom_pool(puzzle.signature, num_vars)
    models = list(puzzle.train) + list(puzzle.candidates)
    space = _Space(models, num_vars)
    atom_vecs = [space.eval_atom(a) for a in pool]

    lines = ["(set-logic ALL)"]
    sels = [f"sel{k}" for k in range(len(pool))]
    lines.append("(declare-sort AtomSel 0)")
    for s in sels:
        lines.append(f"(declare-const {s} AtomSel)")
    lines.append(f"(assert (distinct {' '.join(sels)}))")
    lines.append("(declare-sort Conn 0)")
    for c in ("conn_and", "conn_or", "conn_implies"):
        lines.append(f"(declare-const {c} Conn)")
    lines.append("(assert (distinct conn_and conn_or conn_implies))")
    for i in range(n):
        lines.append(f"(declare-const a{i} AtomSel)")
        lines.append(f"(declare-const n{i} Bool)")
        lines.append(
            "(assert (or " + " ".join(f"(= a{i} {s})" for s in sels) + "))"
        )
    for j in range(n - 1):
        lines.append(f"(declare-const c{j} Conn)")
        lines.append(
            f"(assert (or (= c{j} conn_and) (= c{j} conn_or) (= c{j} conn_implies)))"
        )

    if cfg.forbid_negated_label_atoms:
        label_sels = [
            sels[k]
            for k, a in enumerate(pool)
            if isinstance(a, Atom) and a.relation == "labelOf"
        ]
        if label_sels:
            for i in range(n):
                disj = " ".join(f"(= a{i} {s})" for s in label_sels)
                lines.append(f"(assert (=> (or {disj}) (not n{i})))")

    # Every quantified variable must occur in some chosen atom.
    for v in range(num_vars):
        var = f"x{v}"
        using = [sels[k] for k, a in enumerate(pool) if var in vars_of(a)]
        occ = " ".join(f"(= a{i} {s})" for i in range(n) for s in using)
        lines.append(f"(assert (or {occ}))" if occ else "(assert false)")

    def leaf_expr(i: int, m_idx: int, assign_idx: int) -> str:
        true_sels = [
            sels[k]
            for k, vecs in enumerate(atom_vecs)
            if vecs[m_idx] >> assign_idx & 1
        ]
        if not true_sels:
            base = "false"
        elif len(true_sels) == len(sels):
            base = "true"
        else:
            base = "(or " + " ".join(f"(= a{i} {s})" for s in true_sels) + ")"
        return f"(xor n{i} {base})"

    def interpret(m_idx: int) -> str:
        model = models[m_idx]
        objs = model.objects
        if not objs:
            return "true" if template.prefix[0] == FORALL else "false"
        size = len(objs)

        def expand(depth: int, base_idx: int) -> str:
            if depth == num_vars:
                leaves = [leaf_expr(i, m_idx, base_idx) for i in range(n)]
                if n == 1:
                    return leaves[0]
                return _chain(leaves, [f"c{j}" for j in range(n - 1)])
            parts = [
                expand(depth + 1, base_idx * size + i) for i in range(size)
            ]
            op = "and" if template.prefix[depth] == FORALL else "or"
            return f"({op} " + " ".join(parts) + ")"

        return expand(0, 0)

    num_train = len(puzzle.train)
    interps = [interpret(i) for i in range(len(models))]
    disjuncts = []
    for chosen in range(len(puzzle.candidates)):
        parts = list(interps[:num_train])
        parts.append(interps[num_train + chosen])
        for other in range(len(puzzle.candidates)):
            if other != chosen:
                parts.append(f"(not {interps[num_train + other]})")
        disjuncts.append("(and " + " ".join(parts) + ")")
    lines.append("(assert (or " + " ".join(disjuncts) + "))")

    for holes in blocked or []:
        parts = [f"(= a{i} {sels[holes['atoms'][i]]})" for i in range(n)]
        parts += [
            f"(= n{i} {'true' if holes['negs'][i] else 'false'})" for i in range(n)
        ]
        parts += [
            f"(= c{j} conn_{holes['conns'][j]})" for j in range(n - 1)
        ]
        lines.append("(assert (not (and " + " ".join(parts) + ")))")

    lines.append("(check-sat)")
    lines.append("(get-model)")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Decoding


def _sexp_tokens(text: str) -> list[str]:
    return text.replace("(", " ( ").replace(")", " ) ").split()


def _parse_sexps(tokens: list[str]) -> list:
    out: list = []
    stack: list[list] = [out]
    for tok in tokens:
        if tok == "(":
            new: list = []
            stack[-1].append(new)
            stack.append(new)
        elif tok == ")":
            if len(stack) == 1:
                raise SolverError("unbalanced parentheses in solver output")
            stack.pop()
        else:
            stack[-1].append(tok)
    if len(stack) != 1:
        raise SolverError("truncated solver output")
    return out


def parse_holes(output: str, template: Template) -> dict:
    """Hole valuation from a solver's sat + get-model output."""
    stripped = output.strip()
    if not stripped:
        raise SolverError("empty solver output")
    first, _, rest = stripped.partition("\n")
    verdict = first.strip()
    if verdict == "unsat":
        raise SolverError("no assignment: solver reported unsat")
    if verdict != "sat":
        raise SolverError(f"unexpected solver verdict {verdict!r}")
    sexps = _parse_sexps(_sexp_tokens(rest))
    values: dict[str, str] = {}
    for exp in sexps:
        items = exp if exp and exp[0] != "model" else exp[1:]
        for item in items:
            if (
                isinstance(item, list)
                and len(item) == 5
                and item[0] == "define-fun"
                and item[2] == []
            ):
                name, value = item[1], item[4]
                if isinstance(value, str):
                    values[name] = value

    def resolve(hole: str, domain: list[str]) -> str:
        if hole not in values:
            raise SolverError(f"solver output missing value for {hole}")
        raw = values[hole]
        if raw in domain:
            return raw
        matches = [d for d in domain if values.get(d) == raw]
        if len(matches) != 1:
            raise SolverError(f"cannot resolve {hole}={raw!r} to a declared constant")
        return matches[0]

    n = template.num_atoms
    sel_domain = sorted(
        (name for name in values if name.startswith("sel")),
        key=lambda s: int(s[3:]),
    )
    atoms = []
    for i in range(n):
        sel = resolve(f"a{i}", sel_domain)
        atoms.append(int(sel[3:]))
    negs = []
    for i in range(n):
        raw = values.get(f"n{i}")
        if raw not in ("true", "false"):
            raise SolverError(f"solver output missing boolean n{i}")
        negs.append(raw == "true")
    conns = []
    conn_domain = ["conn_and", "conn_or", "conn_implies"]
    for j in range(n - 1):
        conns.append(resolve(f"c{j}", conn_domain)[len("conn_") :])
    return {"atoms": atoms, "negs": negs, "conns": conns}


def holes_to_formula(holes: dict, template: Template, sig: Signature) -> Formula:
    pool = atom_pool(sig, len(template.prefix))
    leaves: list[Formula] = []
    for k, neg in zip(holes["atoms"], holes["negs"]):
        atom = pool[k]
        leaves.append(Not(atom) if neg else atom)
    body = leaves[-1]
    for leaf, conn in zip(reversed(leaves[:-1]), reversed(holes["conns"])):
        if conn == "and":
            parts = body.parts if isinstance(body, And) else (body,)
            body = And((leaf, *parts))
        elif conn == "or":
            parts = body.parts if isinstance(body, Or) else (body,)
            body = Or((leaf, *parts))
        else:
            body = Implies(leaf, body)
    return wrap_prefix(template.prefix, len(template.prefix), body)


def decode_assignment(output: str, template: Template, sig: Signature) -> Formula:
    """Formula determined by the hole valuation in the solver's output."""
    return holes_to_formula(parse_holes(output, template), template, sig)


def template_formulas(
    sig: Signature, template: Template, forbid_negated_label_atoms: bool = True
) -> Iterator[Formula]:
    """Every concrete dialect-legal instantiation of the template.

    The enumerative mirror of the SMT encoding, used to cross-check the
    solver's sat/unsat verdicts.
    """
    num_vars = len(template.prefix)
    pool = atom_pool(sig, num_vars)
    n = template.num_atoms
    required = {f"x{i}" for i in range(num_vars)}
    leaf_choices = []
    for k, atom in enumerate(pool):
        leaf_choices.append((k, False))
        if not (
            forbid_negated_label_atoms
            and isinstance(atom, Atom)
            and atom.relation == "labelOf"
        ):
            leaf_choices.append((k, True))
    for leaves in itertools.product(leaf_choices, repeat=n):
        used: set[str] = set()
        for k, _ in leaves:
            used |= vars_of(pool[k])
        if used != required:
            continue
        for conns in itertools.product(("and", "or", "implies"), repeat=n - 1):
            holes = {
                "atoms": [k for k, _ in leaves],
                "negs": [neg for _, neg in leaves],
                "conns": list(conns),
            }
            yield holes_to_formula(holes, template, sig)


# ---------------------------------------------------------------------------
# External solver driver


def default_solver_cmd() -> tuple[str, ...] | None:
    env = os.environ.get("VDP_SMT_SOLVER")
    if env:
        return tuple(shlex.split(env))
    from shutil import which

    if which("z3"):
        return ("z3", "-in")
    if which("cvc5"):
        return ("cvc5", "--lang", "smt2")
    return None


def run_solver(script: str, solver_cmd: Sequence[str], timeout: float = 60.0) -> str:
    try:
        proc = subprocess.run(
            list(solver_cmd),
            input=script,
            capture_output=True,
            text=True,
            timeout=timeout,
        )
    except FileNotFoundError:
        raise SolverError(
            f"solver {solver_cmd[0]!r} not found; install one or set VDP_SMT_SOLVER"
        ) from None
    except subprocess.TimeoutExpired:
        raise SolverError(f"solver timed out after {timeout}s") from None
    out = proc.stdout.strip()
    if not out.startswith(("sat", "unsat")):
        raise SolverError(
            f"solver failed (exit {proc.returncode}): {out[:200]} {proc.stderr[:200]}"
        )
    return proc.stdout


def synthesize_constraint(puzzle: Puzzle, cfg: SynthesisConfig) -> SynthesisOutcome:
    """Constraint-backend synthesis via an external SMT solver.

    Iterates templates in schedule order, enumerating solutions per
    template with blocking clauses; results are re-verified and ranked
    exactly like the enumerative backend's.
    """
    solver_cmd = cfg.solver_cmd or default_solver_cmd()
    if solver_cmd is None:
        raise SolverError(
            "constraint backend needs an external SMT-LIB solver; "
            "install z3/cvc5 or set VDP_SMT_SOLVER"
        )
    start = time.monotonic()
    deadline = start + cfg.time_budget_seconds
    results: list[DiscriminatorResult] = []
    seen: set[str] = set()
    timed_out = False
    group: tuple[int, int] | None = None
    for template in all_templates(cfg):
        tgroup = (len(template.prefix), template.num_atoms)
        if group is not None and tgroup != group and len(results) >= cfg.top_k:
            break
        group = tgroup
        blocked: list[dict] = []
        while True:
            if time.monotonic() > deadline:
                timed_out = True
                break
            script = encode_smtlib(puzzle, template, cfg, blocked=blocked)
            output = run_solver(
                script, solver_cmd, timeout=max(1.0, deadline - time.monotonic())
            )
            if output.strip().startswith("unsat"):
                break
            holes = parse_holes(output, template)
            blocked.append(holes)
            formula = canonicalize(
                holes_to_formula(holes, template, puzzle.signature)
            )
            text = print_formula(formula)
            if text in seen:
                continue
            seen.add(text)
            chosen = is_discriminator(puzzle, formula)
            if chosen is None:
                raise SolverError(
                    f"solver produced a non-discriminator: {text}"
                )
            positive = list(puzzle.train) + [puzzle.candidates[chosen]]
            vac = tuple(check_vacuous(m, formula) for m in positive)
            if cfg.exclude_vacuous and any(vac):
                continue
            results.append(
                DiscriminatorResult(
                    formula, chosen, cost_of(formula), vac, time.monotonic() - start
                )
            )
        if timed_out:
            break
    results.sort(key=lambda r: (r.cost.as_tuple(), r.text))
    final = tuple(results[: cfg.top_k])
    wall = time.monotonic() - start
    if not final:
        status = "budget_exhausted" if timed_out else "space_exhausted"
    else:
        status = "budget_exhausted" if timed_out else "ok"
    return SynthesisOutcome(final, status, wall)
