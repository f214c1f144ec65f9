//! Code handling: template programs, response extraction, normalization
//! and the protected expression language.

pub mod expr;
mod extract;
mod normalize;
mod program;
pub(crate) mod template;

pub use expr::{eval_expression, parse_expression, BudgetExhausted, ExprAst, NodeBudget};
pub use extract::{extract_candidate, extract_idea};
pub use normalize::{code_hash, normalize_code, token_count};
pub use program::DslProgram;
pub use template::{parse_template, Param, TemplateProgram};
