from __future__ import annotations

import random

import pytest
from hypothesis import given, settings, strategies as st

from enrvar.syntax import (
    App,
    Arity,
    ArityMismatch,
    ClassicalSignature,
    Context,
    SortMismatch,
    SortSet,
    UnknownOperation,
    Var,
    VariableOutOfRange,
    all_terms,
    canonical_context,
    check_term,
    context_arity,
    substitute,
    term_depth,
)

S2 = SortSet(("A", "B"))
SIG = ClassicalSignature(
    S2,
    (
        ("f", Arity.of(S2, {"A": 2}), "A"),
        ("g", Arity.of(S2, {"A": 1, "B": 1}), "B"),
        ("c", Arity.of(S2, {}), "A"),
    ),
)
CTX = Context((("x", "A"), ("y", "A"), ("u", "B")))


class TestCheckTerm:
    def test_variable_sort(self):
        assert check_term(SIG, CTX, Var(0)) == "A"
        assert check_term(SIG, CTX, Var(2)) == "B"

    def test_application(self):
        t = App("f", (Var(0), Var(1)))
        assert check_term(SIG, CTX, t) == "A"
        assert check_term(SIG, CTX, App("g", (Var(0), Var(2)))) == "B"

    def test_wrong_argument_count(self):
        with pytest.raises(ArityMismatch):
            check_term(SIG, CTX, App("f", (Var(0),)))

    def test_wrong_sort(self):
        with pytest.raises(SortMismatch):
            check_term(SIG, CTX, App("f", (Var(0), Var(2))))

    def test_unknown_operation(self):
        with pytest.raises(UnknownOperation):
            check_term(SIG, CTX, App("h", ()))

    def test_variable_out_of_range(self):
        with pytest.raises(VariableOutOfRange):
            check_term(SIG, CTX, Var(3))

    def test_fuzzed_mutations_rejected_with_right_error(self):
        rng = random.Random(0)
        good = App("g", (App("f", (Var(0), App("c"))), Var(2)))
        assert check_term(SIG, CTX, good) == "B"
        for _ in range(200):
            kind = rng.choice(["arity", "sort", "unknown", "range"])
            if kind == "arity":
                bad, err = App("f", (Var(0),) * rng.choice([1, 3])), ArityMismatch
            elif kind == "sort":
                bad, err = App("f", (Var(0), Var(2))), SortMismatch
            elif kind == "unknown":
                bad, err = App("nosuch", (Var(0),)), UnknownOperation
            else:
                bad, err = Var(rng.choice([-1, 3, 7])), VariableOutOfRange
            with pytest.raises(err):
                check_term(SIG, CTX, bad)


class TestSubstitute:
    def test_variable(self):
        assert substitute(Var(0), Context((("x", "A"),)), (App("c"),)) == App("c")

    def test_application(self):
        t = App("f", (Var(0), Var(1)))
        ctx = Context((("x", "A"), ("y", "A")))
        out = substitute(t, ctx, (App("c"), Var(0)), SIG, Context((("z", "A"),)))
        assert out == App("f", (App("c"), Var(0)))

    def test_identity_assignment_is_idempotent(self):
        idvars = tuple(Var(i) for i in range(len(CTX)))
        for t in all_terms(SIG, CTX, "A", 2)[:50]:
            assert substitute(t, CTX, idvars) == t

    def test_sort_mismatch_detected(self):
        with pytest.raises(SortMismatch):
            substitute(Var(0), Context((("x", "A"),)), (Var(0),), SIG, Context((("u", "B"),)))

    @settings(max_examples=150, deadline=None)
    @given(st.integers(0, 10**9))
    def test_substitution_preserves_sorts(self, seed):
        rng = random.Random(seed)
        target = Context((("p", "A"), ("q", "B")))
        pool_a = all_terms(SIG, target, "A", 2)
        pool_b = all_terms(SIG, target, "B", 2)
        assignment = (rng.choice(pool_a), rng.choice(pool_a), rng.choice(pool_b))
        terms = all_terms(SIG, CTX, rng.choice(("A", "B")), 2)
        t = rng.choice(terms)
        sort = check_term(SIG, CTX, t)
        out = substitute(t, CTX, assignment, SIG, target)
        assert check_term(SIG, target, out) == sort


class TestCanonicalContext:
    def test_single_sort(self):
        J = Arity.of(S2, {"A": 2})
        assert canonical_context(J).entries == (("v1", "A"), ("v2", "A"))

    def test_empty(self):
        assert canonical_context(Arity.of(S2, {})).entries == ()

    def test_sort_order_convention(self):
        J = Arity.of(S2, {"B": 1, "A": 1})
        assert canonical_context(J).entries == (("v1", "A"), ("v2", "B"))

    def test_roundtrip_with_context_arity(self):
        J = Arity.of(S2, {"A": 2, "B": 1})
        assert context_arity(S2, canonical_context(J)) == J


class TestAllTerms:
    def test_every_generated_term_checks(self):
        for sort in ("A", "B"):
            for t in all_terms(SIG, CTX, sort, 2):
                assert check_term(SIG, CTX, t) == sort
                assert term_depth(t) <= 2

    def test_counts_grow_with_depth(self):
        c0 = len(all_terms(SIG, CTX, "A", 0))
        c1 = len(all_terms(SIG, CTX, "A", 1))
        assert c0 == 2  # the two A-variables
        assert c1 == 2 + 4 + 1  # plus f on variables and the constant
