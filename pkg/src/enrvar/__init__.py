"""enrvar: a desk-scale engine for sorted equational theories enriched in
categories of relational Horn models."""

from .budget import Budget, BudgetExceeded
from .relcore import (
    EQ,
    LE,
    ChaseResult,
    FinStructure,
    HeytingAlgebra,
    HornFormula,
    HornTheory,
    NotClosed,
    RelSignature,
    SignatureMismatch,
    StructureError,
    builtin_theory,
    chase,
    curry,
    enumerate_morphisms,
    exponential,
    heyting_chain,
    is_model,
    is_pi_morphism,
    product,
    satisfies_formula,
    structure_to_json,
    terminal,
    uncurry,
)
from .syntax import (
    App,
    Arity,
    ChainRelation,
    ClassicalSignature,
    Context,
    Equation,
    ExplicitChain,
    IteratedChain,
    RelationAtom,
    SortSet,
    Term,
    Var,
    canonical_context,
    check_term,
    substitute,
)
from .algebra import (
    Algebra,
    ClassicalTheoryWithRelations,
    EnrichedSignature,
    EnrichedTheory,
    OpDecl,
    algebra_to_json,
    enumerate_algebras,
    hom_family,
    hom_object,
    interpret_term,
    is_homomorphism,
    ordinary_signature,
    power,
    satisfies_equation,
    satisfies_relation,
    satisfies_theory,
    underlying_classical,
    validate_algebra,
)
from .cpo import (
    CpoPresentation,
    IterationNotStabilized,
    free_omega_cpo,
    is_presentation_morphism,
    satisfies_chain_relation,
)
from .dsl import DslError, TheoryFile, parse_theory, print_theory
from .translate import (
    Correspondence,
    EquivalenceReport,
    cpo_classical_to_enriched,
    cpo_enriched_to_classical,
    enriched_to_relational,
    relational_to_enriched,
    verify_theory_equivalence,
)
from .monad import (
    RelMonadData,
    TjAlgebra,
    check_relative_monad,
    enumerate_tj_algebras,
    exception_truncation,
    free_algebra,
    identity_truncation,
    is_tj_algebra,
    monad_from_theory,
    theory_from_monad,
    verify_presentation,
)

__version__ = "0.1.0"
