//! Flat postfix form of an [`Expr`] for the integrator hot loop.

use super::ast::{apply_binary, apply_pow, apply_unary, BinaryOp, DomainError, Expr, UnaryOp, Var};
use crate::scalar::{lit, Real};

#[derive(Clone, Debug)]
enum Instr {
    Const(f64),
    Var(Var),
    Unary(UnaryOp),
    Binary(BinaryOp),
    Pow(f64),
}

/// Postfix program compiled from an expression tree. Evaluation matches
/// [`Expr::eval`]; on a domain failure the tree is re-walked to name the
/// offending subexpression.
#[derive(Clone, Debug)]
pub struct Program {
    code: Vec<Instr>,
    max_stack: usize,
    source: Expr,
}

impl Program {
    pub fn compile(expr: &Expr) -> Self {
        let mut code = Vec::with_capacity(expr.size());
        emit(expr, &mut code);
        let mut depth = 0usize;
        let mut max_stack = 0usize;
        for ins in &code {
            match ins {
                Instr::Const(_) | Instr::Var(_) => depth += 1,
                Instr::Binary(_) => depth -= 1,
                Instr::Unary(_) | Instr::Pow(_) => {}
            }
            max_stack = max_stack.max(depth);
        }
        Self { code, max_stack, source: expr.clone() }
    }

    pub fn expr(&self) -> &Expr {
        &self.source
    }

    pub fn eval<T: Real>(&self, x: T, y: T) -> Result<T, DomainError> {
        const INLINE: usize = 32;
        if self.max_stack <= INLINE {
            let mut stack = [T::zero(); INLINE];
            self.run(&mut stack, x, y)
        } else {
            let mut stack = vec![T::zero(); self.max_stack];
            self.run(&mut stack, x, y)
        }
    }

    fn run<T: Real>(&self, stack: &mut [T], x: T, y: T) -> Result<T, DomainError> {
        let mut sp = 0usize;
        for ins in &self.code {
            let r = match ins {
                Instr::Const(c) => {
                    stack[sp] = lit(*c);
                    sp += 1;
                    continue;
                }
                Instr::Var(Var::X) => {
                    stack[sp] = x;
                    sp += 1;
                    continue;
                }
                Instr::Var(Var::Y) => {
                    stack[sp] = y;
                    sp += 1;
                    continue;
                }
                Instr::Unary(op) => apply_unary(*op, stack[sp - 1]),
                Instr::Pow(e) => apply_pow(stack[sp - 1], *e),
                Instr::Binary(op) => {
                    sp -= 1;
                    apply_binary(*op, stack[sp - 1], stack[sp])
                }
            };
            match r {
                Ok(v) if v.is_finite() => stack[sp - 1] = v,
                _ => return Err(self.explain(x, y)),
            }
        }
        Ok(stack[0])
    }

    #[cold]
    fn explain<T: Real>(&self, x: T, y: T) -> DomainError {
        match self.source.eval(x, y) {
            Err(e) => e,
            Ok(_) => unreachable!("compiled program and tree disagree on domain"),
        }
    }
}

fn emit(e: &Expr, out: &mut Vec<Instr>) {
    match e {
        Expr::Const(c) => out.push(Instr::Const(*c)),
        Expr::Var(v) => out.push(Instr::Var(*v)),
        Expr::Unary(op, a) => {
            emit(a, out);
            out.push(Instr::Unary(*op));
        }
        Expr::Pow(a, p) => {
            emit(a, out);
            out.push(Instr::Pow(*p));
        }
        Expr::Binary(op, a, b) => {
            emit(a, out);
            emit(b, out);
            out.push(Instr::Binary(*op));
        }
    }
}
