"""Multi-sorted first-order logic: syntax, finite models, evaluation.

The vocabulary is fixed to the visual-discrimination setting: an object
sort (bounding boxes), a label sort (class names), and a background sort
of naturals used only through ``count`` tuples.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Mapping, Sequence, Union


class Sort(Enum):
    OBJECT = "Object"
    LABEL = "Label"
    NUMBER = "Number"


# Relations every signature carries, with their argument sorts.
BUILTIN_RELATIONS: dict[str, tuple[Sort, ...]] = {
    "labelOf": (Sort.OBJECT, Sort.LABEL),
    "same": (Sort.OBJECT, Sort.OBJECT),
    "within": (Sort.OBJECT, Sort.OBJECT),
    "toLeft": (Sort.OBJECT, Sort.OBJECT),
    "toRight": (Sort.OBJECT, Sort.OBJECT),
    "above": (Sort.OBJECT, Sort.OBJECT),
    "below": (Sort.OBJECT, Sort.OBJECT),
    "count": (Sort.LABEL, Sort.NUMBER),
}


class LogicError(Exception):
    """Raised on contract violations (bad sorts, unbound variables, ...)."""


@dataclass(frozen=True)
class Signature:
    """Relation symbols plus the label vocabulary shared across a puzzle."""

    label_constants: frozenset[str]
    numeric_literal_bound: int = 0
    relations: Mapping[str, tuple[Sort, ...]] = field(
        default_factory=lambda: dict(BUILTIN_RELATIONS)
    )

    def __post_init__(self):
        for name, sorts in self.relations.items():
            if len(sorts) < 1:
                raise LogicError(f"relation {name} must have arity >= 1")
        missing = set(BUILTIN_RELATIONS) - set(self.relations)
        if missing:
            raise LogicError(f"signature missing built-in relations: {sorted(missing)}")
        if self.numeric_literal_bound < 0:
            raise LogicError("numeric_literal_bound must be >= 0")


@dataclass(frozen=True)
class Var:
    name: str
    sort: Sort = Sort.OBJECT


@dataclass(frozen=True)
class Const:
    value: Union[str, int]
    sort: Sort

    def __post_init__(self):
        if self.sort is Sort.NUMBER and not isinstance(self.value, int):
            raise LogicError(f"Number constant must be int, got {self.value!r}")
        if self.sort is Sort.LABEL and not isinstance(self.value, str):
            raise LogicError(f"Label constant must be str, got {self.value!r}")
        if self.sort is Sort.OBJECT:
            raise LogicError("Object-sorted constants are not part of the language")


Term = Union[Var, Const]


@dataclass(frozen=True)
class Atom:
    relation: str
    args: tuple[Term, ...]


@dataclass(frozen=True)
class Eq:
    left: Term
    right: Term


@dataclass(frozen=True)
class Not:
    body: "Formula"


@dataclass(frozen=True)
class And:
    parts: tuple["Formula", ...]

    def __post_init__(self):
        if len(self.parts) < 2:
            raise LogicError("And requires >= 2 parts")


@dataclass(frozen=True)
class Or:
    parts: tuple["Formula", ...]

    def __post_init__(self):
        if len(self.parts) < 2:
            raise LogicError("Or requires >= 2 parts")


@dataclass(frozen=True)
class Implies:
    antecedent: "Formula"
    consequent: "Formula"


@dataclass(frozen=True)
class Exists:
    var: Var
    body: "Formula"


@dataclass(frozen=True)
class Forall:
    var: Var
    body: "Formula"


Formula = Union[Atom, Eq, Not, And, Or, Implies, Exists, Forall]


def conj(*parts: Formula) -> Formula:
    """n-ary conjunction, flattening nested Ands."""
    flat: list[Formula] = []
    for p in parts:
        flat.extend(p.parts) if isinstance(p, And) else flat.append(p)
    if len(flat) == 1:
        return flat[0]
    return And(tuple(flat))


def disj(*parts: Formula) -> Formula:
    """n-ary disjunction, flattening nested Ors."""
    flat: list[Formula] = []
    for p in parts:
        flat.extend(p.parts) if isinstance(p, Or) else flat.append(p)
    if len(flat) == 1:
        return flat[0]
    return Or(tuple(flat))


# ---------------------------------------------------------------------------
# Models


@dataclass(frozen=True)
class Model:
    """Finite first-order structure extracted from one image."""

    objects: tuple[str, ...]
    labels: tuple[str, ...]
    relations: Mapping[str, frozenset[tuple]]
    image_id: str = ""
    truncated: bool = False

    def universe(self, sort: Sort) -> Sequence:
        if sort is Sort.OBJECT:
            return self.objects
        if sort is Sort.LABEL:
            return self.labels
        return range(len(self.objects) + 1)

    def holds(self, relation: str, args: tuple) -> bool:
        return args in self.relations.get(relation, frozenset())

    def validate(self) -> None:
        """Check the structural invariants tying labelOf, same and count."""
        label_of = self.relations.get("labelOf", frozenset())
        labels_of: dict[str, set[str]] = {o: set() for o in self.objects}
        for o, lab in label_of:
            if o not in labels_of:
                raise LogicError(f"labelOf tuple references unknown object {o!r}")
            if lab not in self.labels:
                raise LogicError(f"labelOf tuple references unknown label {lab!r}")
            labels_of[o].add(lab)
        for o, labs in labels_of.items():
            if not labs:
                raise LogicError(f"object {o!r} has no label")
        same = self.relations.get("same", frozenset())
        for a, b in itertools.product(self.objects, repeat=2):
            expected = bool(labels_of[a] & labels_of[b])
            if ((a, b) in same) != expected:
                raise LogicError(f"same({a},{b}) disagrees with shared labels")
        counts = self.relations.get("count", frozenset())
        for lab in self.labels:
            entries = [n for l, n in counts if l == lab]
            actual = sum(1 for o in self.objects if lab in labels_of[o])
            if entries != [actual] and sorted(entries) != [actual]:
                raise LogicError(f"count for {lab!r} is {entries}, expected [{actual}]")


def model_from_labels(
    object_labels: Mapping[str, Sequence[str]],
    labels: Sequence[str],
    extra_relations: Mapping[str, set] | None = None,
    image_id: str = "",
) -> Model:
    """Build a model from an object->labels map, deriving same and count.

    Spatial relations come from extra_relations; anything not given is empty.
    """
    objects = tuple(object_labels)
    label_of = frozenset(
        (o, lab) for o, labs in object_labels.items() for lab in labs
    )
    same = frozenset(
        (a, b)
        for a, b in itertools.product(objects, repeat=2)
        if set(object_labels[a]) & set(object_labels[b])
    )
    count = frozenset(
        (lab, sum(1 for o in objects if lab in object_labels[o])) for lab in labels
    )
    relations: dict[str, frozenset] = {
        name: frozenset() for name in BUILTIN_RELATIONS
    }
    if extra_relations:
        for name, tuples in extra_relations.items():
            relations[name] = frozenset(tuples)
    relations["labelOf"] = label_of
    relations["same"] = same
    relations["count"] = count
    model = Model(objects, tuple(labels), relations, image_id=image_id)
    model.validate()
    return model


# ---------------------------------------------------------------------------
# Well-sortedness


def check_well_sorted(
    formula: Formula, sig: Signature, dialect: bool = False
) -> list[str]:
    """Return sort errors ([] means well-sorted).

    With dialect on, quantification is additionally restricted to the
    object sort.
    """
    errors: list[str] = []

    def term_sort(t: Term) -> Sort:
        return t.sort

    def walk(f: Formula, path: str) -> None:
        if isinstance(f, Atom):
            expected = sig.relations.get(f.relation)
            if expected is None:
                errors.append(f"{path}: unknown relation {f.relation}")
                return
            if len(f.args) != len(expected):
                errors.append(
                    f"{path}: {f.relation} expects {len(expected)} args, got {len(f.args)}"
                )
                return
            for i, (arg, want) in enumerate(zip(f.args, expected), start=1):
                if term_sort(arg) is not want:
                    errors.append(
                        f"{path}: {f.relation} argument {i} has sort "
                        f"{term_sort(arg).value}, expected {want.value}"
                    )
                if isinstance(arg, Const):
                    if arg.sort is Sort.LABEL and arg.value not in sig.label_constants:
                        errors.append(f"{path}: unknown label constant {arg.value!r}")
                    if (
                        arg.sort is Sort.NUMBER
                        and arg.value > sig.numeric_literal_bound
                    ):
                        errors.append(
                            f"{path}: numeric literal {arg.value} exceeds bound "
                            f"{sig.numeric_literal_bound}"
                        )
        elif isinstance(f, Eq):
            for side, t in (("left", f.left), ("right", f.right)):
                if term_sort(t) is not Sort.OBJECT:
                    errors.append(f"{path}: equality {side} side is not Object-sorted")
        elif isinstance(f, Not):
            walk(f.body, path + "/not")
        elif isinstance(f, (And, Or)):
            tag = "and" if isinstance(f, And) else "or"
            for i, p in enumerate(f.parts):
                walk(p, f"{path}/{tag}[{i}]")
        elif isinstance(f, Implies):
            walk(f.antecedent, path + "/implies.lhs")
            walk(f.consequent, path + "/implies.rhs")
        elif isinstance(f, (Exists, Forall)):
            if dialect and f.var.sort is not Sort.OBJECT:
                errors.append(f"{path}: non-object quantification over {f.var.name}")
            walk(f.body, path + f"/{f.var.name}")
        else:
            errors.append(f"{path}: unknown node {type(f).__name__}")

    walk(formula, "")
    return errors


# ---------------------------------------------------------------------------
# Evaluation

Assignment = Mapping[str, object]


def free_vars(formula: Formula) -> frozenset[Var]:
    if isinstance(formula, Atom):
        return frozenset(t for t in formula.args if isinstance(t, Var))
    if isinstance(formula, Eq):
        return frozenset(
            t for t in (formula.left, formula.right) if isinstance(t, Var)
        )
    if isinstance(formula, Not):
        return free_vars(formula.body)
    if isinstance(formula, (And, Or)):
        out: frozenset[Var] = frozenset()
        for p in formula.parts:
            out |= free_vars(p)
        return out
    if isinstance(formula, Implies):
        return free_vars(formula.antecedent) | free_vars(formula.consequent)
    if isinstance(formula, (Exists, Forall)):
        return free_vars(formula.body) - {formula.var}
    raise LogicError(f"unknown node {type(formula).__name__}")


def evaluate(model: Model, formula: Formula, assignment: Assignment | None = None) -> bool:
    """Tarskian truth over the finite universes of ``model``.

    Quantifiers range over the quantified variable's sort universe.  The
    assignment must cover every free variable.
    """
    env = dict(assignment or {})
    unbound = {v.name for v in free_vars(formula)} - set(env)
    if unbound:
        raise LogicError(f"unbound free variables: {sorted(unbound)}")
    return _eval(model, formula, env)


def _eval(model: Model, f: Formula, env: dict) -> bool:
    if isinstance(f, Atom):
        args = tuple(
            env[t.name] if isinstance(t, Var) else t.value for t in f.args
        )
        return model.holds(f.relation, args)
    if isinstance(f, Eq):
        lhs = env[f.left.name] if isinstance(f.left, Var) else f.left.value
        rhs = env[f.right.name] if isinstance(f.right, Var) else f.right.value
        return lhs == rhs
    if isinstance(f, Not):
        return not _eval(model, f.body, env)
    if isinstance(f, And):
        return all(_eval(model, p, env) for p in f.parts)
    if isinstance(f, Or):
        return any(_eval(model, p, env) for p in f.parts)
    if isinstance(f, Implies):
        return (not _eval(model, f.antecedent, env)) or _eval(model, f.consequent, env)
    if isinstance(f, Exists):
        return any(
            _eval(model, f.body, {**env, f.var.name: e})
            for e in model.universe(f.var.sort)
        )
    if isinstance(f, Forall):
        return all(
            _eval(model, f.body, {**env, f.var.name: e})
            for e in model.universe(f.var.sort)
        )
    raise LogicError(f"unknown node {type(f).__name__}")


# ---------------------------------------------------------------------------
# Cost


@dataclass(frozen=True, order=True)
class Cost:
    """Lexicographic formula cost; smaller means preferred.

    Components: quantifier count, atom count (Eq included), connective
    weight (#Not + #Implies + surplus Or children), universal count, and
    Or/Implies node count.
    """

    variables: int
    atoms: int
    connectives: int
    universals: int
    disjunctive: int

    def as_tuple(self) -> tuple[int, int, int, int, int]:
        return (
            self.variables,
            self.atoms,
            self.connectives,
            self.universals,
            self.disjunctive,
        )


def cost_of(formula: Formula) -> Cost:
    q = a = nots = impls = foralls = ors = or_children = 0
    stack = [formula]
    while stack:
        f = stack.pop()
        if isinstance(f, (Atom, Eq)):
            a += 1
        elif isinstance(f, Not):
            nots += 1
            stack.append(f.body)
        elif isinstance(f, And):
            stack.extend(f.parts)
        elif isinstance(f, Or):
            ors += 1
            or_children += len(f.parts)
            stack.extend(f.parts)
        elif isinstance(f, Implies):
            impls += 1
            stack.extend((f.antecedent, f.consequent))
        elif isinstance(f, Exists):
            q += 1
            stack.append(f.body)
        elif isinstance(f, Forall):
            q += 1
            foralls += 1
            stack.append(f.body)
        else:
            raise LogicError(f"unknown node {type(f).__name__}")
    weight = nots + impls + (or_children - ors)
    return Cost(q, a, weight, foralls, ors + impls)


# ---------------------------------------------------------------------------
# Printing and canonicalization


def print_term(t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    return str(t.value)


def print_formula(f: Formula) -> str:
    """Parenthesized prefix text; inverse of parse_formula."""
    if isinstance(f, Atom):
        return "(" + " ".join([f.relation, *map(print_term, f.args)]) + ")"
    if isinstance(f, Eq):
        return f"(= {print_term(f.left)} {print_term(f.right)})"
    if isinstance(f, Not):
        return f"(not {print_formula(f.body)})"
    if isinstance(f, And):
        return "(and " + " ".join(map(print_formula, f.parts)) + ")"
    if isinstance(f, Or):
        return "(or " + " ".join(map(print_formula, f.parts)) + ")"
    if isinstance(f, Implies):
        return f"(implies {print_formula(f.antecedent)} {print_formula(f.consequent)})"
    if isinstance(f, Exists):
        return f"(exists {f.var.name} {print_formula(f.body)})"
    if isinstance(f, Forall):
        return f"(forall {f.var.name} {print_formula(f.body)})"
    raise LogicError(f"unknown node {type(f).__name__}")


def _alpha_key(f: Formula, depth_of: dict[str, int], depth: int) -> str:
    """Printed form with bound variables replaced by binder depths.

    Invariant under renaming, so it can order And/Or children before the
    final renaming pass.
    """

    def term(t: Term) -> str:
        if isinstance(t, Var):
            if t.name in depth_of:
                return f"%{depth_of[t.name]}"
            return t.name
        return str(t.value)

    if isinstance(f, Atom):
        return "(" + " ".join([f.relation, *map(term, f.args)]) + ")"
    if isinstance(f, Eq):
        a, b = sorted((term(f.left), term(f.right)))
        return f"(= {a} {b})"
    if isinstance(f, Not):
        return f"(not {_alpha_key(f.body, depth_of, depth)})"
    if isinstance(f, (And, Or)):
        tag = "and" if isinstance(f, And) else "or"
        keys = sorted(_alpha_key(p, depth_of, depth) for p in f.parts)
        return f"({tag} " + " ".join(keys) + ")"
    if isinstance(f, Implies):
        return (
            f"(implies {_alpha_key(f.antecedent, depth_of, depth)} "
            f"{_alpha_key(f.consequent, depth_of, depth)})"
        )
    if isinstance(f, (Exists, Forall)):
        tag = "exists" if isinstance(f, Exists) else "forall"
        inner = {**depth_of, f.var.name: depth}
        return f"({tag} {_alpha_key(f.body, inner, depth + 1)})"
    raise LogicError(f"unknown node {type(f).__name__}")


def _canonical_core(formula: Formula) -> Formula:
    """Sorted children, ordered Eq arguments, binders renamed to x0, x1, ..."""

    def sort_children(f: Formula, depth_of: dict[str, int], depth: int) -> Formula:
        if isinstance(f, (Atom,)):
            return f
        if isinstance(f, Eq):
            key_l = _term_order_key(f.left, depth_of)
            key_r = _term_order_key(f.right, depth_of)
            if key_r < key_l:
                return Eq(f.right, f.left)
            return f
        if isinstance(f, Not):
            return Not(sort_children(f.body, depth_of, depth))
        if isinstance(f, (And, Or)):
            parts = tuple(sort_children(p, depth_of, depth) for p in f.parts)
            parts = tuple(
                sorted(parts, key=lambda p: _alpha_key(p, depth_of, depth))
            )
            return And(parts) if isinstance(f, And) else Or(parts)
        if isinstance(f, Implies):
            return Implies(
                sort_children(f.antecedent, depth_of, depth),
                sort_children(f.consequent, depth_of, depth),
            )
        if isinstance(f, (Exists, Forall)):
            inner = {**depth_of, f.var.name: depth}
            body = sort_children(f.body, inner, depth + 1)
            cls = Exists if isinstance(f, Exists) else Forall
            return cls(f.var, body)
        raise LogicError(f"unknown node {type(f).__name__}")

    def rename(f: Formula, mapping: dict[str, Var], counter: list[int]) -> Formula:
        if isinstance(f, Atom):
            return Atom(
                f.relation,
                tuple(
                    mapping.get(t.name, t) if isinstance(t, Var) else t
                    for t in f.args
                ),
            )
        if isinstance(f, Eq):
            left = mapping.get(f.left.name, f.left) if isinstance(f.left, Var) else f.left
            right = (
                mapping.get(f.right.name, f.right) if isinstance(f.right, Var) else f.right
            )
            return Eq(left, right)
        if isinstance(f, Not):
            return Not(rename(f.body, mapping, counter))
        if isinstance(f, (And, Or)):
            parts = tuple(rename(p, mapping, counter) for p in f.parts)
            return And(parts) if isinstance(f, And) else Or(parts)
        if isinstance(f, Implies):
            return Implies(
                rename(f.antecedent, mapping, counter),
                rename(f.consequent, mapping, counter),
            )
        if isinstance(f, (Exists, Forall)):
            fresh = Var(f"x{counter[0]}", f.var.sort)
            counter[0] += 1
            body = rename(f.body, {**mapping, f.var.name: fresh}, counter)
            cls = Exists if isinstance(f, Exists) else Forall
            return cls(fresh, body)
        raise LogicError(f"unknown node {type(f).__name__}")

    sorted_form = sort_children(formula, {}, 0)
    return rename(sorted_form, {}, [0])


def canonicalize(formula: Formula) -> Formula:
    """Canonical representative of the alpha-equivalence class.

    Bound variables become x0, x1, ... in binder order; And/Or children are
    sorted by an alpha-invariant key; Eq arguments are ordered.  Within a
    maximal run of identical prenex quantifiers, binder order is normalized
    by taking the permutation with the smallest printed form; exchanging
    adjacent identical quantifiers preserves meaning.  Idempotent.
    """
    base = _canonical_core(formula)
    prefix: list[Formula] = []
    body: Formula = base
    while isinstance(body, (Exists, Forall)):
        prefix.append(body)
        body = body.body
    names = [q.var.name for q in prefix]
    if len(prefix) < 2 or len(set(names)) != len(names):
        return base
    blocks: list[list[Formula]] = []
    for q in prefix:
        if blocks and isinstance(q, type(blocks[-1][-1])):
            blocks[-1].append(q)
        else:
            blocks.append([q])
    if all(len(b) == 1 for b in blocks):
        return base
    best = base
    best_text = print_formula(base)
    for ordering in itertools.product(*(itertools.permutations(b) for b in blocks)):
        rebuilt = body
        for q in reversed([q for block in ordering for q in block]):
            rebuilt = type(q)(q.var, rebuilt)
        cand = _canonical_core(rebuilt)
        text = print_formula(cand)
        if text < best_text:
            best, best_text = cand, text
    return best


def _term_order_key(t: Term, depth_of: dict[str, int]) -> str:
    if isinstance(t, Var):
        if t.name in depth_of:
            return f"%{depth_of[t.name]:04d}"
        return t.name
    return str(t.value)


# ---------------------------------------------------------------------------
# Vacuity


def check_vacuous(model: Model, formula: Formula) -> bool:
    """Whether a true universal sentence holds for an empty reason.

    True when the formula is a universally-prefixed implication whose guard
    has empty extension in the model, or when the outermost quantifier is
    universal and the object universe is empty.
    """
    if isinstance(formula, Forall) and not model.universe(formula.var.sort):
        return True
    prefix: list[Var] = []
    body: Formula = formula
    while isinstance(body, Forall):
        prefix.append(body.var)
        body = body.body
    if not prefix:
        return False
    inner_exists: list[Var] = []
    while isinstance(body, Exists):
        inner_exists.append(body.var)
        body = body.body
    if not isinstance(body, Implies):
        return False
    guard = body.antecedent
    quantified = prefix + inner_exists
    universes = [model.universe(v.sort) for v in quantified]
    for values in itertools.product(*universes):
        env = {v.name: e for v, e in zip(quantified, values)}
        if _eval(model, guard, env):
            return False
    return True
