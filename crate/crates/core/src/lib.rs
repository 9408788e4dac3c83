//! Partial non-deterministic matrices (PNmatrices): consequence checking,
//! strengthening a matrix by a set of simple axioms, generation of analytic
//! multiple-conclusion calculi and proof search in them.

pub mod calculus;
pub mod error;
pub mod format;
pub mod matrix;
pub mod oracle;
pub mod proof;
pub mod rules;
pub mod strengthen;
pub mod suite;
pub mod syntax;

pub use matrix::{Countermodel, ExpansionFunction, PNMatrix, Sequent, Table, Value, Verdict};
pub use format::{parse_calculus, parse_spec, write_calculus, write_spec, Projection, SpecFile};
pub use strengthen::{sharp_construct, Base, Sharp, StrengthenOptions};
pub use oracle::{
    axiom_consequence_oracle, flat_slice, sharp_semantic_probe, verify_equivalence, AxiomOracle, EquivalenceReport,
    FlatSlice, OracleOptions, OracleVerdict,
};
pub use proof::{check_proof, prove, render_dot, render_text, ProofOptions, ProofTree, SearchOutcome, Substitution};
pub use rules::{Calculus, Rule, RuleTag};
pub use suite::{formulas_up_to, sequents, SuiteBounds};
pub use calculus::{
    calculus_for, find_separators, generate_calculus, minimize, simplify, subsumes, transfer_discriminator, unsound_rules,
    Discriminator,
};
pub use error::{Error, ParseError, Result};
pub use syntax::{
    subformulas_bottom_up, suffix_closure,
    decompose_simple, lookahead_set, parse_formula, parse_formula_list, parse_lookahead,
    s_subformulas, subformulas, Binding, ConnId, Connective, Formula, LookaheadString, Signature,
    SimpleAxiom,
};
