"""Typelogical grammar toolkit with graded tensor semantics.

Proves sequents in a Lambek calculus extended with a copying modality,
compiles derivations to linear-map diagrams, evaluates them in
finite-dimensional wedge-graded vector spaces with pluggable copying
maps, and runs an ellipsis disambiguation experiment over word
embeddings.
"""

from .formulas import (
    Atom,
    Bang,
    Formula,
    Lexicon,
    Over,
    ParseError,
    Product,
    Sequent,
    Under,
    UnknownWordError,
    default_lexicon,
    format_formula,
    load_lexicon,
    parse_formula,
    parse_sequent,
    phrase_sequents,
)
from .prover import (
    Derivation,
    Rule,
    SearchConfig,
    SearchTimeout,
    check_derivation,
    count_rule,
    prove,
)
from .fock import (
    BaseSpace,
    BasisCopyA,
    BasisCopyB,
    BasisCopyRaw,
    DeltaKind,
    FullDual,
    GradedTensor,
    KExtension,
    counit_eps,
    delta_apply,
    embed_layer1,
    fock_comult_full,
    fock_dim,
    fock_mult,
    wedge_normalize,
)
from .semantics import (
    CompileError,
    DiagramTerm,
    ShapeError,
    SpaceAssignment,
    WordTensorStore,
    compile_derivation,
    evaluate,
    interpret_formula,
)
from .distrib import (
    EmbeddingStore,
    ModelKind,
    TaskEntry,
    VerbMatrix,
    compose_ellipsis,
    compose_transitive,
    cosine,
    load_embeddings,
    relational_verb,
    run_task,
    spearman_rho,
)

__version__ = "0.1.0"
