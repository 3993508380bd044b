//! Model description language: expressions, derivatives, model files.

pub mod diff;
pub mod expr;
pub mod model;
pub mod model_file;
pub mod parse;
pub mod validate;

pub use expr::{EvalError, Expression, VarSet};
pub use model::{builtin_bacteria_model, AxisBox, BacteriaParams, ModelDefinition, ModelError, ModelSpec};
pub use model_file::{dump_model, load_model, parse_model, ModelFileError};
pub use parse::{parse_expression, Constants, ParseError};
