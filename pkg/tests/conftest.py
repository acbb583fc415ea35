"""Shared fixtures: hand-built models, random generators, oracle evaluator.

The oracle evaluator expands quantifiers into explicit finite
conjunctions/disjunctions over the universe before evaluating, sharing no
code with the recursive evaluator under test.
"""

from __future__ import annotations

import itertools
import random
from pathlib import Path

import pytest

from vdp.logic import (
    And,
    Atom,
    Const,
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
    model_from_labels,
)

REPO = Path(__file__).resolve().parent.parent
FIXTURES = REPO / "fixtures"
INTRO_MANIFEST = FIXTURES / "intro" / "two_cats_on_couch__p1" / "puzzle.json"
CONCEPTS_DIR = FIXTURES / "concepts"


# ---------------------------------------------------------------------------
# Oracle evaluator: ground the sentence, then evaluate without environments.


def _substitute(f: Formula, name: str, obj) -> Formula:
    """Replace free occurrences of variable `name` with the domain element."""

    def term(t):
        if isinstance(t, Var) and t.name == name:
            return ("ground", obj)
        return t

    if isinstance(f, Atom):
        return Atom(f.relation, tuple(term(t) for t in f.args))
    if isinstance(f, Eq):
        return Eq(term(f.left), term(f.right))
    if isinstance(f, Not):
        return Not(_substitute(f.body, name, obj))
    if isinstance(f, And):
        return And(tuple(_substitute(p, name, obj) for p in f.parts))
    if isinstance(f, Or):
        return Or(tuple(_substitute(p, name, obj) for p in f.parts))
    if isinstance(f, Implies):
        return Implies(
            _substitute(f.antecedent, name, obj),
            _substitute(f.consequent, name, obj),
        )
    if isinstance(f, (Exists, Forall)):
        if f.var.name == name:  # shadowed
            return f
        cls = type(f)
        return cls(f.var, _substitute(f.body, name, obj))
    raise TypeError(type(f).__name__)


def oracle_evaluate(model: Model, f: Formula) -> bool:
    """Finite-expansion truth: independent of vdp.logic.evaluate."""
    if isinstance(f, Exists):
        dom = list(model.universe(f.var.sort))
        return any(
            oracle_evaluate(model, _substitute(f.body, f.var.name, e)) for e in dom
        )
    if isinstance(f, Forall):
        dom = list(model.universe(f.var.sort))
        return all(
            oracle_evaluate(model, _substitute(f.body, f.var.name, e)) for e in dom
        )
    if isinstance(f, Not):
        return not oracle_evaluate(model, f.body)
    if isinstance(f, And):
        return all(oracle_evaluate(model, p) for p in f.parts)
    if isinstance(f, Or):
        return any(oracle_evaluate(model, p) for p in f.parts)
    if isinstance(f, Implies):
        return (not oracle_evaluate(model, f.antecedent)) or oracle_evaluate(
            model, f.consequent
        )

    def value(t):
        if isinstance(t, tuple) and t and t[0] == "ground":
            return t[1]
        if isinstance(t, Const):
            return t.value
        raise AssertionError(f"unground term {t!r} reached the oracle leaf")

    if isinstance(f, Eq):
        return value(f.left) == value(f.right)
    if isinstance(f, Atom):
        return tuple(value(t) for t in f.args) in f_rel(model, f.relation)
    raise TypeError(type(f).__name__)


def f_rel(model: Model, name: str):
    return model.relations.get(name, frozenset())


# ---------------------------------------------------------------------------
# Random models and sentences (seeded, for oracle sweeps)


def random_model(rng: random.Random, labels=("cat", "dog", "sofa"), max_objects=4) -> Model:
    n = rng.randint(0, max_objects)
    object_labels = {
        f"o{i}": [rng.choice(labels)] for i in range(n)
    }
    objs = list(object_labels)
    spatial = {}
    for rel in ("within", "toLeft", "toRight", "above", "below"):
        pairs = [
            (a, b) for a, b in itertools.permutations(objs, 2) if rng.random() < 0.3
        ]
        spatial[rel] = set(pairs)
    return model_from_labels(object_labels, list(labels), spatial)


def random_sentence(
    rng: random.Random,
    labels=("cat", "dog", "sofa"),
    max_quants=3,
    max_atoms=4,
    numeric_bound=4,
) -> Formula:
    num_vars = rng.randint(1, max_quants)
    xs = [Var(f"x{i}", Sort.OBJECT) for i in range(num_vars)]

    def atom() -> Formula:
        kind = rng.random()
        if kind < 0.3:
            return Atom(
                "labelOf", (rng.choice(xs), Const(rng.choice(labels), Sort.LABEL))
            )
        if kind < 0.4:
            return Atom(
                "count",
                (
                    Const(rng.choice(labels), Sort.LABEL),
                    Const(rng.randint(0, numeric_bound), Sort.NUMBER),
                ),
            )
        if kind < 0.5 and num_vars >= 2:
            a, b = rng.sample(xs, 2)
            return Eq(a, b)
        rel = rng.choice(["same", "within", "toLeft", "toRight", "above", "below"])
        return Atom(rel, (rng.choice(xs), rng.choice(xs)))

    def body(n: int) -> Formula:
        if n == 1:
            f = atom()
            return Not(f) if rng.random() < 0.25 else f
        split = rng.randint(1, n - 1)
        lhs, rhs = body(split), body(n - split)
        op = rng.choice(["and", "or", "implies"])
        if op == "and":
            return And((lhs, rhs))
        if op == "or":
            return Or((lhs, rhs))
        return Implies(lhs, rhs)

    f = body(rng.randint(1, max_atoms))
    for x in reversed(xs):
        f = Exists(x, f) if rng.random() < 0.5 else Forall(x, f)
    return f


@pytest.fixture(scope="session")
def sig3() -> Signature:
    return Signature(frozenset({"cat", "dog", "sofa"}), numeric_literal_bound=4)


# ---------------------------------------------------------------------------
# The introduction's puzzle as hand-built models (independent of scenes.py)


def _couch_scene(cats_on: int, cats_off: int = 0, dogs_on: int = 0) -> Model:
    object_labels = {"couch": ["couch"]}
    within = set()
    for i in range(cats_on):
        object_labels[f"cat_on{i}"] = ["cat"]
        within.add((f"cat_on{i}", "couch"))
    for i in range(cats_off):
        object_labels[f"cat_off{i}"] = ["cat"]
    for i in range(dogs_on):
        object_labels[f"dog_on{i}"] = ["dog"]
        within.add((f"dog_on{i}", "couch"))
    return model_from_labels(
        object_labels, ["cat", "couch", "dog"], {"within": within}
    )


@pytest.fixture(scope="session")
def intro_models():
    train = tuple(_couch_scene(cats_on=2) for _ in range(4))
    candidates = (
        _couch_scene(cats_on=1),
        _couch_scene(cats_on=2),
        _couch_scene(cats_on=0, cats_off=1),
        _couch_scene(cats_on=0, dogs_on=1),
    )
    return train, candidates


def signature_covering(models) -> Signature:
    labels = set()
    bound = 0
    for m in models:
        labels |= set(m.labels)
        bound = max(bound, len(m.objects))
    return Signature(frozenset(labels), numeric_literal_bound=bound)


@pytest.fixture(scope="session")
def intro_puzzle(intro_models):
    from vdp.synthesis import Puzzle

    train, candidates = intro_models
    return Puzzle(signature_covering(train + candidates), train, candidates)


@pytest.fixture(scope="session")
def vac_puzzle():
    """A puzzle whose unique cheapest discriminator is a vacuous universal.

    Trains hold no dogs, so "every dog sits inside something" is true on them
    for want of a witness. The expected candidate keeps both its dogs inside
    baskets; the other leaves one dog loose. Everything else (label counts,
    a loose cat, an occupied spare basket) is mirrored across the candidates
    so that no same-cost non-vacuous formula separates them.
    """
    from vdp.synthesis import Puzzle

    def train_scene():
        return model_from_labels(
            {"c": ["cat"], "c2": ["cat"], "b": ["basket"]},
            ["basket", "cat", "dog"],
            {"within": {("c", "b")}},
        )

    def cand_scene(second_dog_contained: bool):
        within = {("c", "b"), ("d1", "b")}
        within.add(("d2", "b2") if second_dog_contained else ("c2", "b2"))
        return model_from_labels(
            {
                "c": ["cat"],
                "c2": ["cat"],
                "c3": ["cat"],
                "b": ["basket"],
                "b2": ["basket"],
                "d1": ["dog"],
                "d2": ["dog"],
            },
            ["basket", "cat", "dog"],
            {"within": within},
        )

    train = (train_scene(), train_scene())
    candidates = (cand_scene(True), cand_scene(False))
    return Puzzle(signature_covering(train + candidates), train, candidates)


@pytest.fixture(scope="session")
def stream22(sig3):
    """The full enumeration stream at bounds (2 vars, 2 atoms), shared."""
    from vdp.synthesis import SynthesisConfig, enumerate_formulas

    return list(enumerate_formulas(sig3, SynthesisConfig(max_vars=2, max_atoms=2)))


# ---------------------------------------------------------------------------
# Brute-force search oracle, independent of the engine's enumeration code.


def _oracle_bodies(pool, num_atoms, forbid_neg_label):
    """All connective trees over exactly num_atoms leaves from the pool."""
    if num_atoms == 1:
        for atom in pool:
            yield atom
            if not (
                forbid_neg_label
                and isinstance(atom, Atom)
                and atom.relation == "labelOf"
            ):
                yield Not(atom)
        return
    for left in range(1, num_atoms):
        for lhs in _oracle_bodies(pool, left, forbid_neg_label):
            for rhs in _oracle_bodies(pool, num_atoms - left, forbid_neg_label):
                yield And((lhs, rhs))
                yield Or((lhs, rhs))
                yield Implies(lhs, rhs)
                for f in (And((lhs, rhs)), Or((lhs, rhs)), Implies(lhs, rhs)):
                    yield Not(f)


def oracle_sentences(sig: Signature, max_vars: int, max_atoms: int, forbid_neg_label=True):
    """Every prenex sentence within the bounds, duplicates included."""
    from vdp.synthesis import atom_pool, body_vars, vars_of

    for num_vars in range(1, max_vars + 1):
        pool = atom_pool(sig, num_vars)
        xs = body_vars(num_vars)
        required = frozenset(x.name for x in xs)
        for num_atoms in range(1, max_atoms + 1):
            for body in _oracle_bodies(pool, num_atoms, forbid_neg_label):
                if vars_of(body) != required:
                    continue
                for quants in itertools.product((Exists, Forall), repeat=num_vars):
                    f: Formula = body
                    for q, x in reversed(list(zip(quants, xs))):
                        f = q(x, f)
                    yield f


def oracle_min_discriminator_cost(puzzle, max_vars, max_atoms, exclude_vacuous=True):
    """Minimum discriminator cost by exhaustive search; None if none exists."""
    from vdp.logic import check_vacuous, cost_of
    from vdp.synthesis import is_discriminator

    best = None
    for f in oracle_sentences(puzzle.signature, max_vars, max_atoms):
        chosen = is_discriminator(puzzle, f)
        if chosen is None:
            continue
        if exclude_vacuous:
            positive = list(puzzle.train) + [puzzle.candidates[chosen]]
            if any(check_vacuous(m, f) for m in positive):
                continue
        c = cost_of(f).as_tuple()
        if best is None or c < best:
            best = c
    return best
