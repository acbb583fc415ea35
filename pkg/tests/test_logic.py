"""Core logic: evaluation, cost, canonicalization, printing, vacuity."""

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import oracle_evaluate, random_model, random_sentence
from vdp.logic import (
    And,
    Atom,
    Const,
    Cost,
    Eq,
    Exists,
    Forall,
    Implies,
    LogicError,
    Model,
    Not,
    Or,
    Signature,
    Sort,
    Var,
    canonicalize,
    check_vacuous,
    check_well_sorted,
    cost_of,
    evaluate,
    free_vars,
    model_from_labels,
    print_formula,
)
from vdp.syntax import parse_formula

X = Var("x", Sort.OBJECT)
Y = Var("y", Sort.OBJECT)
Z = Var("z", Sort.OBJECT)


def lab(name: str) -> Const:
    return Const(name, Sort.LABEL)


@pytest.fixture(scope="module")
def two_cats_model() -> Model:
    return model_from_labels(
        {"c1": ["cat"], "c2": ["cat"], "sofa": ["couch"]},
        ["cat", "couch"],
        {"within": {("c1", "sofa"), ("c2", "sofa")}},
    )


class TestEvaluate:
    def test_two_cats_within_one_couch(self, two_cats_model):
        # ∃x∃y∃z. cat(x) ∧ cat(y) ∧ couch(z) ∧ x≠y ∧ within(x,z) ∧ within(y,z)
        f = Exists(
            X,
            Exists(
                Y,
                Exists(
                    Z,
                    And(
                        (
                            Atom("labelOf", (X, lab("cat"))),
                            Atom("labelOf", (Y, lab("cat"))),
                            Atom("labelOf", (Z, lab("couch"))),
                            Not(Eq(X, Y)),
                            Atom("within", (X, Z)),
                            Atom("within", (Y, Z)),
                        )
                    ),
                ),
            ),
        )
        assert evaluate(two_cats_model, f) is True

    def test_no_dog(self, two_cats_model):
        sig_needed = Exists(X, Atom("labelOf", (X, lab("cat"))))
        assert evaluate(two_cats_model, sig_needed) is True

    def test_count_atom(self, two_cats_model):
        assert evaluate(two_cats_model, Atom("count", (lab("cat"), Const(2, Sort.NUMBER))))
        assert not evaluate(
            two_cats_model, Atom("count", (lab("cat"), Const(1, Sort.NUMBER)))
        )

    def test_empty_universe_quantifiers(self):
        empty = model_from_labels({}, ["cat"])
        some = Exists(X, Atom("labelOf", (X, lab("cat"))))
        every = Forall(X, Atom("labelOf", (X, lab("cat"))))
        assert evaluate(empty, some) is False
        assert evaluate(empty, every) is True

    def test_free_variable_needs_assignment(self, two_cats_model):
        f = Atom("labelOf", (X, lab("cat")))
        with pytest.raises(LogicError):
            evaluate(two_cats_model, f)
        assert evaluate(two_cats_model, f, {"x": "c1"}) is True
        assert evaluate(two_cats_model, f, {"x": "sofa"}) is False

    def test_implies_truth_table(self, two_cats_model):
        t = Atom("count", (lab("cat"), Const(2, Sort.NUMBER)))
        f = Atom("count", (lab("cat"), Const(0, Sort.NUMBER)))
        assert evaluate(two_cats_model, Implies(f, f))
        assert evaluate(two_cats_model, Implies(f, t))
        assert not evaluate(two_cats_model, Implies(t, f))
        assert evaluate(two_cats_model, Implies(t, t))

    def test_matches_oracle_on_random_pairs(self):
        rng = random.Random(1234)
        mismatches = 0
        for _ in range(1000):
            model = random_model(rng)
            sentence = random_sentence(rng)
            if evaluate(model, sentence) != oracle_evaluate(model, sentence):
                mismatches += 1
        assert mismatches == 0


class TestFreeVars:
    def test_shadowing(self):
        inner = Exists(X, Atom("same", (X, Y)))
        assert free_vars(inner) == frozenset({Y})
        assert free_vars(Exists(Y, inner)) == frozenset()

    def test_sentence_has_none(self):
        f = Forall(X, Exists(Y, Atom("toLeft", (X, Y))))
        assert free_vars(f) == frozenset()


class TestWellSorted:
    def test_clean_formula(self, sig3):
        f = parse_formula("(exists x (labelOf x cat))", sig3)
        assert check_well_sorted(f, sig3, dialect=True) == []

    def test_unknown_relation(self, sig3):
        assert check_well_sorted(Atom("wiggly", (X, Y)), sig3) != []

    def test_arity_mismatch(self, sig3):
        errs = check_well_sorted(Atom("within", (X,)), sig3)
        assert any("expects 2" in e for e in errs)

    def test_sort_mismatch_reported_with_path(self, sig3):
        f = Exists(X, Atom("labelOf", (lab("cat"), lab("cat"))))
        errs = check_well_sorted(f, sig3)
        assert any("argument 1" in e for e in errs)

    def test_unknown_label_constant(self, sig3):
        f = Atom("labelOf", (X, lab("wombat")))
        assert any("wombat" in e for e in check_well_sorted(f, sig3))

    def test_numeric_bound(self, sig3):
        f = Atom("count", (lab("cat"), Const(99, Sort.NUMBER)))
        assert any("exceeds bound" in e for e in check_well_sorted(f, sig3))

    def test_eq_needs_objects(self, sig3):
        errs = check_well_sorted(Eq(lab("cat"), X), sig3)
        assert any("equality" in e for e in errs)


class TestCost:
    def test_single_existential_atom(self):
        f = Exists(X, Atom("labelOf", (X, lab("umbrella"))))
        assert cost_of(f).as_tuple() == (1, 1, 0, 0, 0)

    def test_negated_universal_pair(self):
        f = Forall(X, Forall(Y, Not(Atom("below", (X, Y)))))
        assert cost_of(f).as_tuple() == (2, 1, 1, 2, 0)

    def test_guarded_universal(self):
        # ∀x∀y. toRight(y,x) ⇒ below(y,x)
        f = Forall(
            X, Forall(Y, Implies(Atom("toRight", (Y, X)), Atom("below", (Y, X))))
        )
        assert cost_of(f).as_tuple() == (2, 2, 1, 2, 1)

    def test_or_children_weight(self):
        two = Or((Atom("same", (X, X)), Atom("same", (Y, Y))))
        three = Or(
            (Atom("same", (X, X)), Atom("same", (Y, Y)), Atom("within", (X, Y)))
        )
        assert cost_of(two).as_tuple() == (0, 2, 1, 0, 1)
        assert cost_of(three).as_tuple() == (0, 3, 2, 0, 1)

    def test_eq_counts_as_atom(self):
        f = Exists(X, Exists(Y, And((Not(Eq(X, Y)), Atom("same", (X, Y))))))
        assert cost_of(f).as_tuple() == (2, 2, 1, 0, 0)

    def test_cost_ordering_is_lexicographic(self):
        assert Cost(1, 5, 9, 0, 0) < Cost(2, 1, 0, 0, 0)
        assert Cost(2, 1, 1, 0, 0) < Cost(2, 2, 0, 0, 0)
        assert Cost(2, 2, 0, 1, 0) < Cost(2, 2, 1, 0, 0)

    def test_alpha_invariance(self):
        rng = random.Random(7)
        for _ in range(50):
            f = random_sentence(rng)
            assert cost_of(f) == cost_of(canonicalize(f))


class TestCanonicalize:
    def test_renames_in_binder_order(self, sig3):
        f = parse_formula("(forall q (exists p (within q p)))", sig3)
        assert (
            print_formula(canonicalize(f))
            == "(forall x0 (exists x1 (within x0 x1)))"
        )

    def test_sorts_and_children(self, sig3):
        f = parse_formula(
            "(exists a (and (within a a) (labelOf a cat)))", sig3
        )
        assert (
            print_formula(canonicalize(f))
            == "(exists x0 (and (labelOf x0 cat) (within x0 x0)))"
        )

    def test_orders_eq_arguments(self, sig3):
        f = parse_formula("(exists a (exists b (= b a)))", sig3)
        g = parse_formula("(exists a (exists b (= a b)))", sig3)
        assert canonicalize(f) == canonicalize(g)

    def test_commutes_same_quantifier_binders(self, sig3):
        f = parse_formula(
            "(exists x (exists y (and (labelOf x cat) (labelOf y dog) (within y x))))",
            sig3,
        )
        g = parse_formula(
            "(exists x (exists y (and (labelOf x dog) (labelOf y cat) (within x y))))",
            sig3,
        )
        assert canonicalize(f) == canonicalize(g)

    def test_does_not_commute_across_block_boundary(self, sig3):
        f = parse_formula("(exists x (forall y (within x y)))", sig3)
        g = parse_formula("(forall x (exists y (within y x)))", sig3)
        assert canonicalize(f) != canonicalize(g)

    def test_idempotent_on_random_sentences(self):
        rng = random.Random(99)
        for _ in range(100):
            f = random_sentence(rng)
            once = canonicalize(f)
            assert canonicalize(once) == once

    def test_alpha_invariant(self, sig3):
        f = parse_formula("(exists alpha (forall beta (toLeft alpha beta)))", sig3)
        g = parse_formula("(exists u (forall v (toLeft u v)))", sig3)
        assert canonicalize(f) == canonicalize(g)

    def test_preserves_meaning(self):
        rng = random.Random(4321)
        for _ in range(200):
            model = random_model(rng)
            f = random_sentence(rng)
            assert evaluate(model, f) == evaluate(model, canonicalize(f))


class TestPrinting:
    @pytest.mark.parametrize(
        "text",
        [
            "(exists x (labelOf x cat))",
            "(forall x (forall y (not (below x y))))",
            "(exists x (forall y (exists z (and (within z x) (not (= z y))))))",
            "(forall x (exists y (implies (labelOf x dog) (within x y))))",
            "(exists x (or (count cat 2) (labelOf x sofa)))",
        ],
    )
    def test_print_parse_round_trip(self, text, sig3):
        f = parse_formula(text, sig3)
        assert print_formula(f) == text
        assert parse_formula(print_formula(f), sig3) == f


class TestVacuity:
    def test_empty_guard_extension(self):
        model = model_from_labels({"a": ["cat"]}, ["cat", "dog"])
        f = Forall(
            X,
            Exists(Y, Implies(Atom("labelOf", (X, lab("dog"))), Atom("within", (X, Y)))),
        )
        assert evaluate(model, f) is True
        assert check_vacuous(model, f) is True

    def test_inhabited_guard(self):
        model = model_from_labels(
            {"d": ["dog"], "s": ["sofa"]},
            ["dog", "sofa"],
            {"within": {("d", "s")}},
        )
        f = Forall(
            X,
            Exists(Y, Implies(Atom("labelOf", (X, lab("dog"))), Atom("within", (X, Y)))),
        )
        assert evaluate(model, f) is True
        assert check_vacuous(model, f) is False

    def test_no_implication_shape(self):
        model = model_from_labels(
            {f"o{i}": ["orange"] for i in range(3)}, ["orange"]
        )
        f = Forall(X, Forall(Y, Not(Atom("below", (X, Y)))))
        assert evaluate(model, f) is True
        assert check_vacuous(model, f) is False

    def test_universal_over_empty_universe(self):
        empty = model_from_labels({}, ["cat"])
        f = Forall(X, Atom("labelOf", (X, lab("cat"))))
        assert check_vacuous(empty, f) is True


class TestModelValidation:
    def test_same_must_match_shared_labels(self):
        bad = Model(
            objects=("a", "b"),
            labels=("cat",),
            relations={
                "labelOf": frozenset({("a", "cat"), ("b", "cat")}),
                "same": frozenset({("a", "b")}),  # missing reflexive pairs
                "count": frozenset({("cat", 2)}),
            },
        )
        with pytest.raises(LogicError):
            bad.validate()

    def test_count_must_match(self):
        bad = Model(
            objects=("a",),
            labels=("cat",),
            relations={
                "labelOf": frozenset({("a", "cat")}),
                "same": frozenset({("a", "a")}),
                "count": frozenset({("cat", 5)}),
            },
        )
        with pytest.raises(LogicError):
            bad.validate()

    def test_unlabeled_object_rejected(self):
        bad = Model(
            objects=("a",),
            labels=("cat",),
            relations={"labelOf": frozenset(), "same": frozenset(), "count": frozenset({("cat", 0)})},
        )
        with pytest.raises(LogicError):
            bad.validate()


# Hypothesis property sweeps over the random generators.

_seeds = st.integers(min_value=0, max_value=10**9)


@settings(max_examples=120, deadline=None)
@given(_seeds)
def test_quantifier_duality(seed):
    rng = random.Random(seed)
    model = random_model(rng)
    body = random_sentence(rng, max_quants=1, max_atoms=3)
    assert isinstance(body, (Exists, Forall))
    inner, var = body.body, body.var
    lhs = Not(Forall(var, inner))
    rhs = Exists(var, Not(inner))
    assert evaluate(model, lhs) == evaluate(model, rhs)


@settings(max_examples=120, deadline=None)
@given(_seeds)
def test_double_negation(seed):
    rng = random.Random(seed)
    model = random_model(rng)
    f = random_sentence(rng)
    assert evaluate(model, Not(Not(f))) == evaluate(model, f)


@settings(max_examples=120, deadline=None)
@given(_seeds)
def test_implies_is_material(seed):
    rng = random.Random(seed)
    model = random_model(rng)
    a = random_sentence(rng, max_quants=2, max_atoms=2)
    b = random_sentence(rng, max_quants=2, max_atoms=2)
    assert evaluate(model, Implies(a, b)) == evaluate(model, Or((Not(a), b)))
