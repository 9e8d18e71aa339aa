//! Expression language for the conformal factor of a chart metric.
//!
//! Sources such as `ln(2/(1 - (x^2 + y^2)))` are parsed into an [`Expr`]
//! tree, differentiated symbolically, and compiled to a [`Program`] for fast
//! repeated evaluation. See [`parser`] for the grammar.

mod ast;
mod diff;
pub mod parser;
mod program;

pub use ast::{BinaryOp, DomainError, DomainErrorKind, Expr, UnaryOp, Var};
pub use parser::{parse_expr, ParseError};
pub use program::Program;

use crate::scalar::Real;

/// Evaluates `ast` at `(x, y)`.
pub fn eval<T: Real>(ast: &Expr, x: T, y: T) -> Result<T, DomainError> {
    ast.eval(x, y)
}

/// Symbolic partial derivative of `ast` with respect to `var`.
pub fn differentiate(ast: &Expr, var: Var) -> Expr {
    ast.differentiate(var)
}
