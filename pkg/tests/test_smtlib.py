"""Constraint-backend encoding, decoding, and solver driver plumbing.

No external SMT solver is assumed; decoding is exercised with canned
solver output and the driver with stub commands.
"""

import pytest

from vdp.logic import (
    And,
    Atom,
    Const,
    Exists,
    Forall,
    Implies,
    Not,
    Or,
    Sort,
    Var,
    canonicalize,
    check_well_sorted,
    print_formula,
)
from vdp.smtlib import (
    SolverError,
    Template,
    all_templates,
    decode_assignment,
    default_solver_cmd,
    encode_smtlib,
    holes_to_formula,
    parse_holes,
    run_solver,
    synthesize_constraint,
    template_formulas,
)
from vdp.synthesis import SynthesisConfig, atom_pool


class TestTemplate:
    def test_empty_prefix_rejected(self):
        with pytest.raises(ValueError):
            Template((), 1)

    def test_bad_quantifier_rejected(self):
        with pytest.raises(ValueError):
            Template(("sometimes",), 1)

    def test_zero_atoms_rejected(self):
        with pytest.raises(ValueError):
            Template(("exists",), 0)

    def test_check_bounds(self):
        cfg = SynthesisConfig(max_vars=2, max_atoms=2)
        Template(("exists", "forall"), 2).check_bounds(cfg)
        with pytest.raises(ValueError, match="exceeds"):
            Template(("exists", "forall", "exists"), 1).check_bounds(cfg)
        with pytest.raises(ValueError, match="exceeds"):
            Template(("exists",), 3).check_bounds(cfg)

    def test_all_templates_schedule(self):
        cfg = SynthesisConfig(max_vars=2, max_atoms=2)
        templates = list(all_templates(cfg))
        # one template per (prefix, atoms) pair within bounds
        assert len(templates) == 2 * (2 + 4)
        assert len(set(templates)) == len(templates)
        # grouped by (vars, atoms) in nondecreasing schedule order
        groups = [(len(t.prefix), t.num_atoms) for t in templates]
        assert groups == sorted(groups, key=lambda g: (g[0], g[1]))
        # within a group, prefixes with fewer universals come first
        for v, a in set(groups):
            block = [t.prefix for t in templates if (len(t.prefix), t.num_atoms) == (v, a)]
            counts = [p.count("forall") for p in block]
            assert counts == sorted(counts)


class TestEncode:
    def test_script_structure(self, intro_puzzle):
        script = encode_smtlib(intro_puzzle, Template(("exists", "forall"), 2))
        assert script.startswith("(set-logic ALL)")
        assert "(declare-sort AtomSel 0)" in script
        assert "(declare-sort Conn 0)" in script
        assert "(assert (distinct conn_and conn_or conn_implies))" in script
        for hole in ("a0", "a1", "n0", "n1", "c0"):
            assert f"(declare-const {hole} " in script
        assert script.rstrip().endswith("(check-sat)\n(get-model)")

    def test_single_atom_has_no_connective_holes(self, intro_puzzle):
        script = encode_smtlib(intro_puzzle, Template(("exists",), 1))
        assert "(declare-const c0 " not in script

    def test_negated_label_atoms_blocked_by_default(self, intro_puzzle):
        script = encode_smtlib(intro_puzzle, Template(("exists",), 1))
        assert "(not n0)" in script
        permissive = SynthesisConfig(forbid_negated_label_atoms=False)
        script2 = encode_smtlib(intro_puzzle, Template(("exists",), 1), permissive)
        assert "(not n0)" not in script2

    def test_blocking_clause_emitted(self, intro_puzzle):
        holes = {"atoms": [0, 1], "negs": [False, True], "conns": ["and"]}
        script = encode_smtlib(
            intro_puzzle, Template(("exists", "forall"), 2), blocked=[holes]
        )
        assert "(assert (not (and (= a0 sel0) (= a1 sel1)" in script

    def test_bounds_enforced(self, intro_puzzle):
        cfg = SynthesisConfig(max_vars=1, max_atoms=1)
        with pytest.raises(ValueError, match="exceeds"):
            encode_smtlib(intro_puzzle, Template(("exists", "forall"), 1), cfg)


def canned_output(sig, template, holes, indirect=False):
    """z3-style sat + get-model text for the given hole valuation."""
    pool = atom_pool(sig, len(template.prefix))
    lines = ["sat", "("]
    for k in range(len(pool)):
        lines.append(f"  (define-fun sel{k} () AtomSel AtomSel!val!{k})")
    for c, v in (("conn_and", 0), ("conn_or", 1), ("conn_implies", 2)):
        lines.append(f"  (define-fun {c} () Conn Conn!val!{v})")
    for i, k in enumerate(holes["atoms"]):
        value = f"AtomSel!val!{k}" if indirect else f"sel{k}"
        lines.append(f"  (define-fun a{i} () AtomSel {value})")
    for i, neg in enumerate(holes["negs"]):
        lines.append(f"  (define-fun n{i} () Bool {'true' if neg else 'false'})")
    for j, conn in enumerate(holes["conns"]):
        value = f"Conn!val!{('and', 'or', 'implies').index(conn)}" if indirect else f"conn_{conn}"
        lines.append(f"  (define-fun c{j} () Conn {value})")
    lines.append(")")
    return "\n".join(lines) + "\n"


class TestDecode:
    template = Template(("exists", "forall"), 2)
    holes = {"atoms": [3, 7], "negs": [False, True], "conns": ["implies"]}

    def test_round_trip_direct_values(self, sig3):
        out = canned_output(sig3, self.template, self.holes)
        assert parse_holes(out, self.template) == self.holes

    def test_round_trip_indirect_values(self, sig3):
        # z3 reports enumeration values like AtomSel!val!3; they resolve
        # through the declared constants' own values.
        out = canned_output(sig3, self.template, self.holes, indirect=True)
        assert parse_holes(out, self.template) == self.holes

    def test_decode_builds_the_selected_formula(self, sig3):
        out = canned_output(sig3, self.template, self.holes)
        f = decode_assignment(out, self.template, sig3)
        pool = atom_pool(sig3, 2)
        expected = Exists(
            Var("x0", Sort.OBJECT),
            Forall(
                Var("x1", Sort.OBJECT),
                Implies(pool[3], Not(pool[7])),
            ),
        )
        assert f == expected
        assert check_well_sorted(f, sig3) == []

    def test_unsat_raises(self):
        with pytest.raises(SolverError, match="unsat"):
            parse_holes("unsat\n", self.template)

    def test_unknown_verdict_raises(self):
        with pytest.raises(SolverError, match="verdict"):
            parse_holes("unknown\n", self.template)

    def test_empty_output_raises(self):
        with pytest.raises(SolverError, match="empty"):
            parse_holes("", self.template)

    def test_missing_hole_raises(self, sig3):
        out = canned_output(sig3, Template(("exists", "forall"), 1), {"atoms": [0], "negs": [False], "conns": []})
        with pytest.raises(SolverError, match="a1"):
            parse_holes(out, self.template)

    def test_unbalanced_output_raises(self):
        with pytest.raises(SolverError):
            parse_holes("sat\n((define-fun a0 () AtomSel sel0)", self.template)


class TestHolesToFormula:
    def test_and_chain_flattens(self, sig3):
        holes = {"atoms": [0, 1, 2], "negs": [False, False, False], "conns": ["and", "and"]}
        f = holes_to_formula(holes, Template(("exists", "exists"), 3), sig3)
        body = f.body.body
        assert isinstance(body, And)
        assert len(body.parts) == 3

    def test_mixed_chain_is_right_associated(self, sig3):
        holes = {"atoms": [0, 1, 2], "negs": [False, False, False], "conns": ["or", "and"]}
        f = holes_to_formula(holes, Template(("exists", "exists"), 3), sig3)
        body = f.body.body
        assert isinstance(body, Or)
        assert len(body.parts) == 2
        assert isinstance(body.parts[1], And)


class TestTemplateFormulas:
    def test_instantiations_are_dialect_legal(self, sig3):
        t = Template(("forall", "exists"), 2)
        formulas = list(template_formulas(sig3, t))
        assert formulas
        for f in formulas[:300]:
            assert check_well_sorted(f, sig3, dialect=True) == []
            assert isinstance(f, Forall)
            assert isinstance(f.body, Exists)

    def test_negated_label_leaves_follow_the_flag(self, sig3):
        t = Template(("exists",), 1)
        strict = {print_formula(f) for f in template_formulas(sig3, t)}
        loose = {
            print_formula(f)
            for f in template_formulas(sig3, t, forbid_negated_label_atoms=False)
        }
        assert strict < loose
        assert any("(not (labelOf" in text for text in loose - strict)

    def test_canonical_forms_subset_of_enumeration(self, sig3, stream22):
        # The template space (right-associated chains, leaf-level negation
        # only) is a subset of the enumerative stream's language.
        stream_texts = {print_formula(f) for f in stream22}
        cfg = SynthesisConfig(max_vars=2, max_atoms=2)
        for t in all_templates(cfg):
            for f in template_formulas(sig3, t):
                assert print_formula(canonicalize(f)) in stream_texts


class TestSolverDriver:
    def test_default_solver_cmd_env_override(self, monkeypatch):
        monkeypatch.setenv("VDP_SMT_SOLVER", "mysolver --flag x")
        assert default_solver_cmd() == ("mysolver", "--flag", "x")

    def test_default_solver_cmd_none_when_absent(self, monkeypatch):
        monkeypatch.delenv("VDP_SMT_SOLVER", raising=False)
        import shutil

        monkeypatch.setattr(shutil, "which", lambda name: None)
        assert default_solver_cmd() is None

    def test_missing_binary_raises(self):
        with pytest.raises(SolverError, match="not found"):
            run_solver("(check-sat)", ("definitely-not-a-solver-xyz",))

    def test_stub_solver_output_passthrough(self):
        out = run_solver("(check-sat)", ("sh", "-c", "echo sat"))
        assert out.strip() == "sat"

    def test_garbage_output_raises(self):
        with pytest.raises(SolverError, match="failed"):
            run_solver("(check-sat)", ("sh", "-c", "echo hello"))

    def test_synthesize_constraint_needs_a_solver(self, intro_puzzle, monkeypatch):
        monkeypatch.delenv("VDP_SMT_SOLVER", raising=False)
        import shutil

        monkeypatch.setattr(shutil, "which", lambda name: None)
        with pytest.raises(SolverError, match="external"):
            synthesize_constraint(
                intro_puzzle, SynthesisConfig(max_vars=2, max_atoms=2)
            )

    def test_non_discriminator_answer_rejected(self, intro_puzzle, monkeypatch):
        # A solver claiming sat with holes that do not discriminate is an
        # integration fault and must surface, not silently pass.
        sig = intro_puzzle.signature
        pool = atom_pool(sig, 1)
        k = pool.index(
            Atom("labelOf", (Var("x0", Sort.OBJECT), Const("cat", Sort.LABEL)))
        )
        t = Template(("exists",), 1)
        canned = canned_output(sig, t, {"atoms": [k], "negs": [False], "conns": []})
        import vdp.smtlib as smtlib

        monkeypatch.setattr(smtlib, "run_solver", lambda *a, **kw: canned)
        with pytest.raises(SolverError, match="non-discriminator"):
            synthesize_constraint(
                intro_puzzle,
                SynthesisConfig(max_vars=1, max_atoms=1, solver_cmd=("stub",)),
            )
