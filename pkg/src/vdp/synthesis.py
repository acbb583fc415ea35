"""Cost-ordered synthesis of first-order discriminators.

The search space is the dialect of prenex sentences over the puzzle's
signature: quantification over objects only, bounded variable and atom
counts, and a handful of bias rules that rule out unnatural concepts
(negated label atoms, vacuously true universals).

The enumerative backend is the reference implementation.  ``synthesize``
additionally prunes by observational equivalence: quantifier-free bodies
are evaluated once per (model, assignment) pair, and bodies with identical
truth vectors collapse to their cheapest representative.  The pruning is
invisible in the output contract: returned discriminators are re-checked
with the plain evaluator and ranked by (cost, canonical text).
"""

from __future__ import annotations

import itertools
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, Sequence

from .logic import (
    And,
    Atom,
    Const,
    Cost,
    Eq,
    Exists,
    Forall,
    Formula,
    Implies,
    Model,
    Not,
    Or,
    Signature,
    Sort,
    Var,
    canonicalize,
    check_vacuous,
    cost_of,
    evaluate,
    print_formula,
)

EXISTS = "exists"
FORALL = "forall"


@dataclass(frozen=True)
class Puzzle:
    signature: Signature
    train: tuple[Model, ...]
    candidates: tuple[Model, ...]

    def __post_init__(self):
        if len(self.train) < 1:
            raise ValueError("need at least one training model")
        if len(self.candidates) < 2:
            raise ValueError("need at least two candidate models")


@dataclass(frozen=True)
class SynthesisConfig:
    max_vars: int = 3
    max_atoms: int = 5
    top_k: int = 5
    time_budget_seconds: float = 300.0
    forbid_negated_label_atoms: bool = True
    object_only_quantification: bool = True
    exclude_vacuous: bool = True
    backend: str = "enumerative"
    seed: int = 0
    threads: int = 1
    solver_cmd: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.max_vars < 1 or self.max_atoms < 1 or self.top_k < 1:
            raise ValueError("max_vars, max_atoms and top_k must be >= 1")
        if self.backend not in ("enumerative", "constraint"):
            raise ValueError(f"unknown backend {self.backend!r}")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")


@dataclass(frozen=True)
class DiscriminatorResult:
    formula: Formula
    chosen_candidate: int
    cost: Cost
    vacuity_flags: tuple[bool, ...]  # per train model, then chosen candidate
    wall_time: float

    @property
    def text(self) -> str:
        return print_formula(self.formula)


@dataclass(frozen=True)
class SynthesisOutcome:
    results: tuple[DiscriminatorResult, ...]
    status: str  # ok | budget_exhausted | space_exhausted
    wall_time: float


def is_discriminator(puzzle: Puzzle, formula: Formula) -> int | None:
    """Candidate index selected by the formula, or None.

    A discriminator is true on every training model and on exactly one
    candidate model.
    """
    if not all(evaluate(m, formula) for m in puzzle.train):
        return None
    hits = [i for i, c in enumerate(puzzle.candidates) if evaluate(c, formula)]
    return hits[0] if len(hits) == 1 else None


# ---------------------------------------------------------------------------
# Atom pool and dialect rules
#
# Dialect, in full (the starred rules are this artifact's closure of the
# search space; the rest come from the bias discussion):
#   - prenex sentences, quantifiers over the object sort only;
#   - equality only between two distinct bound variables;
#   - with forbid_negated_label_atoms, no Not directly above a labelOf atom;
#   - every quantified variable occurs in the body (*);
#   - no Not directly above another Not (*).

OBJECT_RELATIONS = ("same", "within", "toLeft", "toRight", "above", "below")


def body_vars(num_vars: int) -> list[Var]:
    return [Var(f"x{i}", Sort.OBJECT) for i in range(num_vars)]


def atom_pool(sig: Signature, num_vars: int) -> list[Atom | Eq]:
    """Dialect-legal atoms over x0..x{n-1}, in a fixed deterministic order."""
    xs = body_vars(num_vars)
    pool: list[Atom | Eq] = []
    labels = sorted(sig.label_constants)
    for x in xs:
        for lab in labels:
            pool.append(Atom("labelOf", (x, Const(lab, Sort.LABEL))))
    for rel in OBJECT_RELATIONS:
        for a, b in itertools.product(xs, repeat=2):
            pool.append(Atom(rel, (a, b)))
    for i in range(num_vars):
        for j in range(i + 1, num_vars):
            pool.append(Eq(xs[i], xs[j]))
    for lab in labels:
        for n in range(sig.numeric_literal_bound + 1):
            pool.append(Atom("count", (Const(lab, Sort.LABEL), Const(n, Sort.NUMBER))))
    return pool


def vars_of(f: Formula) -> frozenset[str]:
    if isinstance(f, Atom):
        return frozenset(t.name for t in f.args if isinstance(t, Var))
    if isinstance(f, Eq):
        return frozenset(t.name for t in (f.left, f.right) if isinstance(t, Var))
    if isinstance(f, Not):
        return vars_of(f.body)
    if isinstance(f, (And, Or)):
        out: frozenset[str] = frozenset()
        for p in f.parts:
            out |= vars_of(p)
        return out
    if isinstance(f, Implies):
        return vars_of(f.antecedent) | vars_of(f.consequent)
    raise TypeError(f"quantifier inside body: {type(f).__name__}")


def has_negated_label_atom(f: Formula) -> bool:
    if isinstance(f, Not):
        if isinstance(f.body, Atom) and f.body.relation == "labelOf":
            return True
        return has_negated_label_atom(f.body)
    if isinstance(f, (And, Or)):
        return any(has_negated_label_atom(p) for p in f.parts)
    if isinstance(f, Implies):
        return has_negated_label_atom(f.antecedent) or has_negated_label_atom(
            f.consequent
        )
    if isinstance(f, (Exists, Forall)):
        return has_negated_label_atom(f.body)
    return False


def wrap_prefix(prefix: Sequence[str], num_vars: int, body: Formula) -> Formula:
    xs = body_vars(num_vars)
    out = body
    for q, x in reversed(list(zip(prefix, xs))):
        out = Exists(x, out) if q == EXISTS else Forall(x, out)
    return out


def _prefixes(num_vars: int) -> list[tuple[str, ...]]:
    """All quantifier prefixes, fewer universals first."""
    all_p = list(itertools.product((EXISTS, FORALL), repeat=num_vars))
    return sorted(all_p, key=lambda p: (p.count(FORALL), p))


# ---------------------------------------------------------------------------
# Full enumeration (reference stream)


def _all_bodies(
    pool: Sequence[Formula], num_atoms: int, forbid_neg_label: bool
) -> list[Formula]:
    """Every connective combination with exactly num_atoms atom leaves."""
    memo: dict[int, list[Formula]] = {}

    def negatable(f: Formula) -> bool:
        if isinstance(f, Not):
            return False
        if forbid_neg_label and isinstance(f, Atom) and f.relation == "labelOf":
            return False
        return True

    def bodies(a: int) -> list[Formula]:
        if a in memo:
            return memo[a]
        core: list[Formula] = []
        if a == 1:
            core.extend(pool)
        for split in _compositions(a):
            if len(split) == 2:
                for lhs in bodies(split[0]):
                    for rhs in bodies(split[1]):
                        core.append(Implies(lhs, rhs))
            for parts in itertools.product(*(bodies(n) for n in split)):
                if all(not isinstance(p, And) for p in parts):
                    core.append(And(tuple(parts)))
                if all(not isinstance(p, Or) for p in parts):
                    core.append(Or(tuple(parts)))
        out = core + [Not(f) for f in core if negatable(f)]
        memo[a] = out
        return out

    return bodies(num_atoms)


def _compositions(a: int) -> list[tuple[int, ...]]:
    """Ordered splits of a into >= 2 positive parts."""
    if a < 2:
        return []
    out = []
    for k in range(2, a + 1):
        for cuts in itertools.combinations(range(1, a), k - 1):
            bounds = (0, *cuts, a)
            out.append(tuple(b - a_ for a_, b in zip(bounds, bounds[1:])))
    return out


def enumerate_formulas(sig: Signature, cfg: SynthesisConfig) -> Iterator[Formula]:
    """Dialect-legal prenex sentences in nondecreasing cost order.

    Each sentence appears exactly once up to canonicalization; ties within
    a cost level are ordered by canonical text.
    """
    seen: set[str] = set()
    for num_vars in range(1, cfg.max_vars + 1):
        pool = atom_pool(sig, num_vars)
        required = frozenset(f"x{i}" for i in range(num_vars))
        prefixes = _prefixes(num_vars)
        for num_atoms in range(1, cfg.max_atoms + 1):
            block: list[tuple[tuple, str, Formula]] = []
            for body in _all_bodies(pool, num_atoms, cfg.forbid_negated_label_atoms):
                if vars_of(body) != required:
                    continue
                for prefix in prefixes:
                    sentence = canonicalize(wrap_prefix(prefix, num_vars, body))
                    text = print_formula(sentence)
                    if text in seen:
                        continue
                    seen.add(text)
                    block.append((cost_of(sentence).as_tuple(), text, sentence))
            block.sort(key=lambda item: item[:2])
            for _, _, sentence in block:
                yield sentence


# ---------------------------------------------------------------------------
# Observational-equivalence search


@dataclass
class _Class:
    """Equivalence class of quantifier-free bodies over the puzzle's
    assignment space: truth bitmask per model, cheapest known formula."""

    vecs: tuple[int, ...]
    varmask: int
    formula: Formula
    kind: str  # atom | not | and | or | implies
    atoms: int
    weight: int
    disjunctive: int


class _Space:
    """Per-variable-count evaluation context."""

    def __init__(self, models: Sequence[Model], num_vars: int):
        self.num_vars = num_vars
        self.models = models
        self.assignments = [
            list(itertools.product(m.objects, repeat=num_vars)) for m in models
        ]
        self.masks = tuple((1 << len(a)) - 1 for a in self.assignments)

    def eval_atom(self, atom: Formula) -> tuple[int, ...]:
        vecs = []
        for model, assigns in zip(self.models, self.assignments):
            bits = 0
            for idx, assign in enumerate(assigns):
                env = {f"x{i}": obj for i, obj in enumerate(assign)}
                if isinstance(atom, Eq):
                    truth = env[atom.left.name] == env[atom.right.name]
                else:
                    args = tuple(
                        env[t.name] if isinstance(t, Var) else t.value
                        for t in atom.args
                    )
                    truth = model.holds(atom.relation, args)
                if truth:
                    bits |= 1 << idx
            vecs.append(bits)
        return tuple(vecs)

    def truth(self, vecs: tuple[int, ...], prefix: Sequence[str]) -> tuple[bool, ...]:
        """Sentence truth per model for a body with the given vectors."""
        out = []
        for m_idx, model in enumerate(self.models):
            n = len(model.objects)
            if n == 0:
                out.append(prefix[0] == FORALL)
                continue
            vals = [
                bool(vecs[m_idx] >> i & 1) for i in range(n**self.num_vars)
            ]
            for q in reversed(prefix):
                agg = all if q == FORALL else any
                vals = [
                    agg(vals[i : i + n]) for i in range(0, len(vals), n)
                ]
            out.append(vals[0])
        return tuple(out)


def _combine_and(vecs_list, masks):
    out = list(masks)
    for vecs in vecs_list:
        out = [a & b for a, b in zip(out, vecs)]
    return tuple(out)


def _combine_or(vecs_list, masks):
    out = [0] * len(masks)
    for vecs in vecs_list:
        out = [a | b for a, b in zip(out, vecs)]
    return tuple(out)


def _negate(vecs, masks):
    return tuple(m & ~v for v, m in zip(vecs, masks))


def synthesize(puzzle: Puzzle, cfg: SynthesisConfig | None = None) -> SynthesisOutcome:
    """Top-k minimal-cost discriminators for the puzzle.

    Deterministic for a fixed puzzle and config, independent of the thread
    count.  Stops early once the time budget is exhausted, flagging the
    partial output.
    """
    cfg = cfg or SynthesisConfig()
    if cfg.backend == "constraint":
        from .smtlib import synthesize_constraint

        return synthesize_constraint(puzzle, cfg)
    start = time.monotonic()
    deadline = start + cfg.time_budget_seconds
    models = list(puzzle.train) + list(puzzle.candidates)
    num_train = len(puzzle.train)
    results: list[DiscriminatorResult] = []
    seen_texts: set[str] = set()
    timed_out = False

    def out_of_time() -> bool:
        return time.monotonic() > deadline

    def check_class(space: _Space, cls: _Class, prefixes) -> list[tuple]:
        hits = []
        for prefix in prefixes:
            truths = space.truth(cls.vecs, prefix)
            if not all(truths[:num_train]):
                continue
            chosen = [
                i for i, t in enumerate(truths[num_train:]) if t
            ]
            if len(chosen) != 1:
                continue
            sentence = canonicalize(
                wrap_prefix(prefix, space.num_vars, cls.formula)
            )
            hits.append((sentence, chosen[0]))
        return hits

    for num_vars in range(1, cfg.max_vars + 1):
        if timed_out:
            break
        space = _Space(models, num_vars)
        pool = atom_pool(puzzle.signature, num_vars)
        full_mask = (1 << num_vars) - 1
        prefixes = _prefixes(num_vars)
        by_key: dict[tuple, _Class] = {}
        levels: dict[tuple[int, int], list[_Class]] = {}

        def admit(level: list[_Class], cls: _Class) -> None:
            key = (cls.vecs, cls.varmask)
            prev = by_key.get(key)
            if prev is not None:
                # Same block: prefer fewer Or/Implies nodes, then text.
                if (prev.atoms, prev.weight) == (cls.atoms, cls.weight) and (
                    cls.disjunctive,
                    print_formula(cls.formula),
                ) < (prev.disjunctive, print_formula(prev.formula)):
                    prev.formula = cls.formula
                    prev.kind = cls.kind
                    prev.disjunctive = cls.disjunctive
                return
            by_key[key] = cls
            level.append(cls)

        max_weight = 4 * cfg.max_atoms
        for num_atoms in range(1, cfg.max_atoms + 1):
            if timed_out:
                break
            for weight in range(0, max_weight + 1):
                if out_of_time():
                    timed_out = True
                    break
                level: list[_Class] = []
                if num_atoms == 1 and weight == 0:
                    for atom in pool:
                        vecs = space.eval_atom(atom)
                        varmask = 0
                        for name in vars_of(atom):
                            varmask |= 1 << int(name[1:])
                        admit(
                            level,
                            _Class(vecs, varmask, atom, "atom", 1, 0, 0),
                        )
                _build_level(
                    space,
                    levels,
                    level,
                    admit,
                    num_atoms,
                    weight,
                    cfg.forbid_negated_label_atoms,
                )
                levels[(num_atoms, weight)] = level
                if not level:
                    continue
                # Sentence phase for this block.
                candidates = [c for c in level if c.varmask == full_mask]
                if cfg.threads > 1 and len(candidates) > 1:
                    with ThreadPoolExecutor(max_workers=cfg.threads) as ex:
                        hit_lists = list(
                            ex.map(lambda c: check_class(space, c, prefixes), candidates)
                        )
                else:
                    hit_lists = [check_class(space, c, prefixes) for c in candidates]
                for hits in hit_lists:
                    for sentence, chosen in hits:
                        text = print_formula(sentence)
                        if text in seen_texts:
                            continue
                        seen_texts.add(text)
                        # Soundness: never trust the vector machinery.
                        verified = is_discriminator(puzzle, sentence)
                        if verified is None or verified != chosen:
                            continue
                        positive = list(puzzle.train) + [puzzle.candidates[chosen]]
                        vac = tuple(check_vacuous(m, sentence) for m in positive)
                        if cfg.exclude_vacuous and any(vac):
                            continue
                        results.append(
                            DiscriminatorResult(
                                sentence,
                                chosen,
                                cost_of(sentence),
                                vac,
                                time.monotonic() - start,
                            )
                        )
                if len(results) >= cfg.top_k:
                    break
            else:
                continue
            break
        if len(results) >= cfg.top_k:
            break

    results.sort(key=lambda r: (r.cost.as_tuple(), r.text))
    final = tuple(results[: cfg.top_k])
    wall = time.monotonic() - start
    if not final:
        status = "budget_exhausted" if timed_out else "space_exhausted"
    else:
        status = "budget_exhausted" if timed_out else "ok"
    return SynthesisOutcome(final, status, wall)


def _build_level(
    space: _Space,
    levels: dict[tuple[int, int], list[_Class]],
    level: list[_Class],
    admit,
    num_atoms: int,
    weight: int,
    forbid_neg_label: bool,
) -> None:
    """Compose classes from earlier blocks into block (num_atoms, weight).

    Constant-valued classes stay in the mix: a body containing one is
    semantically redundant, but it may be the only carrier of a required
    variable, and the (vectors, varmask) dedup caps the overhead.
    """
    masks = space.masks

    # Negation: same atom count, one weight lower.
    for cls in levels.get((num_atoms, weight - 1), []):
        if cls.kind == "not":
            continue
        if (
            forbid_neg_label
            and isinstance(cls.formula, Atom)
            and cls.formula.relation == "labelOf"
        ):
            continue
        admit(
            level,
            _Class(
                _negate(cls.vecs, masks),
                cls.varmask,
                Not(cls.formula),
                "not",
                cls.atoms,
                cls.weight + 1,
                cls.disjunctive,
            ),
        )

    # Implication: ordered pair, one weight consumed by the node.
    for a_lhs in range(1, num_atoms):
        a_rhs = num_atoms - a_lhs
        for w_lhs in range(0, weight):
            w_rhs = weight - 1 - w_lhs
            for lhs in levels.get((a_lhs, w_lhs), []):
                for rhs in levels.get((a_rhs, w_rhs), []):
                    vecs = tuple(
                        m & (~l | r)
                        for l, r, m in zip(lhs.vecs, rhs.vecs, masks)
                    )
                    admit(
                        level,
                        _Class(
                            vecs,
                            lhs.varmask | rhs.varmask,
                            Implies(lhs.formula, rhs.formula),
                            "implies",
                            num_atoms,
                            weight,
                            lhs.disjunctive + rhs.disjunctive + 1,
                        ),
                    )

    # Conjunction / disjunction: sets of >= 2 distinct earlier classes.
    def gather(connective: str) -> None:
        # An Or node's weight is one per child beyond the first; fold that
        # into a per-child charge and refund the first child at the end.
        w_node = 1 if connective == "or" else 0
        target_w = weight + w_node
        blocks = [
            ((a, w), members)
            for (a, w), lvl in sorted(levels.items())
            if a < num_atoms
            and (members := [c for c in lvl if c.kind != connective])
        ]

        def emit(parts: list[tuple[int, int]]) -> None:
            pools = [
                itertools.combinations(blocks[bi][1], m) for bi, m in parts
            ]
            for groups in itertools.product(*pools):
                picked = [c for group in groups for c in group]
                if connective == "and":
                    vecs = _combine_and([c.vecs for c in picked], masks)
                    formula: Formula = And(tuple(c.formula for c in picked))
                    disj = sum(c.disjunctive for c in picked)
                else:
                    vecs = _combine_or([c.vecs for c in picked], masks)
                    formula = Or(tuple(c.formula for c in picked))
                    disj = sum(c.disjunctive for c in picked) + 1
                varmask = 0
                for c in picked:
                    varmask |= c.varmask
                admit(
                    level,
                    _Class(vecs, varmask, formula, connective, num_atoms, weight, disj),
                )

        # Partition the atom and weight budget over blocks first; only
        # exact partitions reach the per-class combination stage.
        def choose(bi: int, a_left: int, w_left: int, k: int, parts: list[tuple[int, int]]):
            if a_left == 0 and w_left == 0 and k >= 2:
                emit(parts)
            if bi >= len(blocks) or a_left <= 0 or w_left < 0:
                return
            choose(bi + 1, a_left, w_left, k, parts)
            (a, w), members = blocks[bi]
            per_w = w + w_node
            max_m = min(len(members), a_left // a)
            if per_w > 0:
                max_m = min(max_m, w_left // per_w)
            for m in range(1, max_m + 1):
                parts.append((bi, m))
                choose(bi + 1, a_left - m * a, w_left - m * per_w, k + m, parts)
                parts.pop()

        choose(0, num_atoms, target_w, 0, [])

    gather("and")
    gather("or")
