//! Equation templates for math word problems.
//!
//! The pipeline maps problem-text numbers to tokens `n1..nm`, turns gold
//! equations into templates, normalizes duplicated templates into one
//! canonical expression tree, and serializes it as a postorder target
//! sequence. Predicted sequences are scored by exact evaluation, and the
//! outputs of several models can be combined by picking, per problem, the
//! candidate with the highest generation probability.

pub mod dataset;
pub mod ensemble;
pub mod eval;
pub mod expr;
pub mod infix;
pub mod mapping;
pub mod normalize;
pub mod numeric;
pub mod oracle;
pub mod postorder;

pub use ensemble::{select, Candidate, CandidateRow, EnsembleConfig, Selection, SelectionRow};
pub use eval::{check_answer, evaluate, evaluate_postorder, parse_answer, Bindings, EvalError, ExactValue};
pub use expr::{Expr, NumberToken, Op, Operand, TokenSeq};
pub use infix::{parse_infix, to_infix, ParseError};
pub use mapping::{
    build_template, extract_numbers, significant_filter, ExtractedNumber, NumberMapping, TemplateRecord,
};
pub use normalize::{canonical_key, normalize, CanonicalKey, NormalizeConfig};
pub use oracle::equivalent_by_oracle;
pub use postorder::{parse_postorder, parse_postorder_str, to_postorder, InvalidReason, InvalidSequence};
