use std::fmt;

use crate::scalar::{lit, Real};

/// Chart coordinate referenced by an expression.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Var {
    X,
    Y,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Exp,
    Ln,
    Sin,
    Cos,
    Sqrt,
    Tanh,
    Atanh,
}

impl UnaryOp {
    pub fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "-",
            UnaryOp::Exp => "exp",
            UnaryOp::Ln => "ln",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Sqrt => "sqrt",
            UnaryOp::Tanh => "tanh",
            UnaryOp::Atanh => "atanh",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "exp" => UnaryOp::Exp,
            "ln" => UnaryOp::Ln,
            "sin" => UnaryOp::Sin,
            "cos" => UnaryOp::Cos,
            "sqrt" => UnaryOp::Sqrt,
            "tanh" => UnaryOp::Tanh,
            "atanh" => UnaryOp::Atanh,
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinaryOp {
    fn symbol(self) -> char {
        match self {
            BinaryOp::Add => '+',
            BinaryOp::Sub => '-',
            BinaryOp::Mul => '*',
            BinaryOp::Div => '/',
        }
    }
}

/// Expression tree in the two chart variables `x` and `y`.
///
/// Exponents are always constants, which keeps the derivative of every
/// expression inside the same node set.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(Var),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, f64),
}

/// Why an evaluation has no real value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DomainErrorKind {
    LnNonPositive,
    DivisionByZero,
    SqrtNegative,
    AtanhOutOfRange,
    NegativeBaseFractionalPower,
    NonFinite,
}

impl fmt::Display for DomainErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DomainErrorKind::LnNonPositive => "ln of a non-positive value",
            DomainErrorKind::DivisionByZero => "division by zero",
            DomainErrorKind::SqrtNegative => "sqrt of a negative value",
            DomainErrorKind::AtanhOutOfRange => "atanh argument outside (-1, 1)",
            DomainErrorKind::NegativeBaseFractionalPower => "negative base raised to a fractional power",
            DomainErrorKind::NonFinite => "non-finite intermediate value",
        };
        f.write_str(s)
    }
}

/// Evaluation failure, carrying the offending subexpression.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
#[error("{kind} in `{subexpr}`")]
pub struct DomainError {
    pub kind: DomainErrorKind,
    pub subexpr: String,
}

impl Expr {
    pub fn constant(v: f64) -> Self {
        Expr::Const(v)
    }

    pub fn x() -> Self {
        Expr::Var(Var::X)
    }

    pub fn y() -> Self {
        Expr::Var(Var::Y)
    }

    /// Value of the expression if it does not mention any variable.
    pub fn constant_value(&self) -> Option<f64> {
        if self.mentions_variable() {
            return None;
        }
        self.eval::<f64>(0.0, 0.0).ok()
    }

    pub fn mentions_variable(&self) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(_) => true,
            Expr::Unary(_, a) | Expr::Pow(a, _) => a.mentions_variable(),
            Expr::Binary(_, a, b) => a.mentions_variable() || b.mentions_variable(),
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) => 1,
            Expr::Unary(_, a) | Expr::Pow(a, _) => 1 + a.size(),
            Expr::Binary(_, a, b) => 1 + a.size() + b.size(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) => 1,
            Expr::Unary(_, a) | Expr::Pow(a, _) => 1 + a.depth(),
            Expr::Binary(_, a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    /// Evaluates at chart point `(x, y)`.
    pub fn eval<T: Real>(&self, x: T, y: T) -> Result<T, DomainError> {
        let fail = |kind| DomainError { kind, subexpr: self.to_string() };
        let v = match self {
            Expr::Const(c) => lit(*c),
            Expr::Var(Var::X) => x,
            Expr::Var(Var::Y) => y,
            Expr::Unary(op, a) => {
                let a = a.eval(x, y)?;
                match apply_unary(*op, a) {
                    Ok(v) => v,
                    Err(kind) => return Err(fail(kind)),
                }
            }
            Expr::Binary(op, a, b) => {
                let a = a.eval(x, y)?;
                let b = b.eval(x, y)?;
                match apply_binary(*op, a, b) {
                    Ok(v) => v,
                    Err(kind) => return Err(fail(kind)),
                }
            }
            Expr::Pow(a, e) => {
                let a = a.eval(x, y)?;
                match apply_pow(a, *e) {
                    Ok(v) => v,
                    Err(kind) => return Err(fail(kind)),
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(fail(DomainErrorKind::NonFinite))
        }
    }
}

#[inline]
pub(crate) fn apply_unary<T: Real>(op: UnaryOp, a: T) -> Result<T, DomainErrorKind> {
    Ok(match op {
        UnaryOp::Neg => -a,
        UnaryOp::Exp => a.exp(),
        UnaryOp::Ln => {
            if a <= T::zero() {
                return Err(DomainErrorKind::LnNonPositive);
            }
            a.ln()
        }
        UnaryOp::Sin => a.sin(),
        UnaryOp::Cos => a.cos(),
        UnaryOp::Sqrt => {
            if a < T::zero() {
                return Err(DomainErrorKind::SqrtNegative);
            }
            a.sqrt()
        }
        UnaryOp::Tanh => a.tanh(),
        UnaryOp::Atanh => {
            if a.abs() >= T::one() {
                return Err(DomainErrorKind::AtanhOutOfRange);
            }
            a.atanh()
        }
    })
}

#[inline]
pub(crate) fn apply_binary<T: Real>(op: BinaryOp, a: T, b: T) -> Result<T, DomainErrorKind> {
    Ok(match op {
        BinaryOp::Add => a + b,
        BinaryOp::Sub => a - b,
        BinaryOp::Mul => a * b,
        BinaryOp::Div => {
            if b == T::zero() {
                return Err(DomainErrorKind::DivisionByZero);
            }
            a / b
        }
    })
}

#[inline]
pub(crate) fn apply_pow<T: Real>(a: T, e: f64) -> Result<T, DomainErrorKind> {
    if e.fract() == 0.0 && e.abs() <= i32::MAX as f64 {
        if a == T::zero() && e < 0.0 {
            return Err(DomainErrorKind::DivisionByZero);
        }
        Ok(a.powi(e as i32))
    } else {
        if a < T::zero() {
            return Err(DomainErrorKind::NegativeBaseFractionalPower);
        }
        if a == T::zero() && e < 0.0 {
            return Err(DomainErrorKind::DivisionByZero);
        }
        Ok(a.powf(lit(e)))
    }
}

fn write_const(f: &mut fmt::Formatter<'_>, c: f64) -> fmt::Result {
    if c < 0.0 || (c == 0.0 && c.is_sign_negative()) {
        write!(f, "(-{})", -c)
    } else {
        write!(f, "{c}")
    }
}

/// Fully parenthesised rendering that parses back to an equivalent tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write_const(f, *c),
            Expr::Var(Var::X) => f.write_str("x"),
            Expr::Var(Var::Y) => f.write_str("y"),
            Expr::Unary(UnaryOp::Neg, a) => write!(f, "(-{a})"),
            Expr::Unary(op, a) => write!(f, "{}({a})", op.name()),
            Expr::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Expr::Pow(a, e) => {
                write!(f, "({a})^")?;
                write_const(f, *e)
            }
        }
    }
}
