//! Symbolic differentiation. The builders below fold trivial identities
//! (`0 * a`, `a + 0`, constant subtrees) so repeated derivatives stay small;
//! no other simplification is attempted.

use super::ast::{apply_binary, apply_pow, apply_unary, BinaryOp, Expr, UnaryOp, Var};

fn as_const(e: &Expr) -> Option<f64> {
    match e {
        Expr::Const(c) => Some(*c),
        _ => None,
    }
}

fn cst(v: f64) -> Expr {
    Expr::Const(v)
}

pub(crate) fn neg(a: Expr) -> Expr {
    match a {
        Expr::Const(c) => cst(-c),
        Expr::Unary(UnaryOp::Neg, inner) => *inner,
        a => Expr::Unary(UnaryOp::Neg, Box::new(a)),
    }
}

pub(crate) fn unary(op: UnaryOp, a: Expr) -> Expr {
    if op == UnaryOp::Neg {
        return neg(a);
    }
    if let Some(c) = as_const(&a) {
        if let Ok(v) = apply_unary(op, c) {
            if v.is_finite() {
                return cst(v);
            }
        }
    }
    Expr::Unary(op, Box::new(a))
}

pub(crate) fn add(a: Expr, b: Expr) -> Expr {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) => cst(x + y),
        (Some(x), None) if x == 0.0 => b,
        (None, Some(y)) if y == 0.0 => a,
        _ => match b {
            Expr::Unary(UnaryOp::Neg, inner) => Expr::Binary(BinaryOp::Sub, Box::new(a), inner),
            b => Expr::Binary(BinaryOp::Add, Box::new(a), Box::new(b)),
        },
    }
}

pub(crate) fn sub(a: Expr, b: Expr) -> Expr {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) => cst(x - y),
        (Some(x), None) if x == 0.0 => neg(b),
        (None, Some(y)) if y == 0.0 => a,
        _ => Expr::Binary(BinaryOp::Sub, Box::new(a), Box::new(b)),
    }
}

pub(crate) fn mul(a: Expr, b: Expr) -> Expr {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) => cst(x * y),
        (Some(x), _) | (_, Some(x)) if x == 0.0 => cst(0.0),
        (Some(x), None) if x == 1.0 => b,
        (None, Some(y)) if y == 1.0 => a,
        (Some(x), None) if x == -1.0 => neg(b),
        (None, Some(y)) if y == -1.0 => neg(a),
        _ => Expr::Binary(BinaryOp::Mul, Box::new(a), Box::new(b)),
    }
}

pub(crate) fn div(a: Expr, b: Expr) -> Expr {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) if y != 0.0 => match apply_binary(BinaryOp::Div, x, y) {
            Ok(v) if v.is_finite() => cst(v),
            _ => Expr::Binary(BinaryOp::Div, Box::new(a), Box::new(b)),
        },
        (Some(x), _) if x == 0.0 => cst(0.0),
        (None, Some(y)) if y == 1.0 => a,
        _ => Expr::Binary(BinaryOp::Div, Box::new(a), Box::new(b)),
    }
}

pub(crate) fn pow(a: Expr, e: f64) -> Expr {
    if e == 0.0 {
        return cst(1.0);
    }
    if e == 1.0 {
        return a;
    }
    if let Some(c) = as_const(&a) {
        if let Ok(v) = apply_pow(c, e) {
            if v.is_finite() {
                return cst(v);
            }
        }
    }
    Expr::Pow(Box::new(a), e)
}

impl Expr {
    /// Exact symbolic partial derivative with respect to `var`.
    pub fn differentiate(&self, var: Var) -> Expr {
        match self {
            Expr::Const(_) => cst(0.0),
            Expr::Var(v) => cst(if *v == var { 1.0 } else { 0.0 }),
            Expr::Unary(op, a) => {
                let da = a.differentiate(var);
                if as_const(&da) == Some(0.0) {
                    return cst(0.0);
                }
                let a = (**a).clone();
                match op {
                    UnaryOp::Neg => neg(da),
                    UnaryOp::Exp => mul(unary(UnaryOp::Exp, a), da),
                    UnaryOp::Ln => div(da, a),
                    UnaryOp::Sin => mul(unary(UnaryOp::Cos, a), da),
                    UnaryOp::Cos => neg(mul(unary(UnaryOp::Sin, a), da)),
                    UnaryOp::Sqrt => div(da, mul(cst(2.0), unary(UnaryOp::Sqrt, a))),
                    UnaryOp::Tanh => mul(sub(cst(1.0), pow(unary(UnaryOp::Tanh, a), 2.0)), da),
                    UnaryOp::Atanh => div(da, sub(cst(1.0), pow(a, 2.0))),
                }
            }
            Expr::Binary(op, a, b) => {
                let da = a.differentiate(var);
                let db = b.differentiate(var);
                let (a, b) = ((**a).clone(), (**b).clone());
                match op {
                    BinaryOp::Add => add(da, db),
                    BinaryOp::Sub => sub(da, db),
                    BinaryOp::Mul => add(mul(da, b), mul(a, db)),
                    BinaryOp::Div => {
                        if as_const(&db) == Some(0.0) {
                            div(da, b)
                        } else {
                            div(sub(mul(da, b.clone()), mul(a, db)), pow(b, 2.0))
                        }
                    }
                }
            }
            Expr::Pow(a, e) => {
                let da = a.differentiate(var);
                if as_const(&da) == Some(0.0) {
                    return cst(0.0);
                }
                mul(mul(cst(*e), pow((**a).clone(), e - 1.0)), da)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse_expr;
    use super::*;

    #[test]
    fn square_sum_derivative() {
        let e = parse_expr("x^2 + y^2").unwrap();
        let d = e.differentiate(Var::X);
        for &(x, y) in &[(0.0, 0.0), (1.5, -2.0), (-3.0, 7.0)] {
            assert_eq!(d.eval(x, y).unwrap(), 2.0 * x);
        }
    }

    #[test]
    fn independent_variable_gives_zero() {
        let e = parse_expr("x^2").unwrap();
        assert_eq!(e.differentiate(Var::Y), Expr::Const(0.0));
    }

    #[test]
    fn derivative_stays_in_node_set() {
        // pow exponents remain constants after differentiation
        fn exps_const(e: &Expr) -> bool {
            match e {
                Expr::Const(_) | Expr::Var(_) => true,
                Expr::Unary(_, a) | Expr::Pow(a, _) => exps_const(a),
                Expr::Binary(_, a, b) => exps_const(a) && exps_const(b),
            }
        }
        let e = parse_expr("sqrt(1 + x^3) * atanh(y/2) / tanh(x + 1)").unwrap();
        let d = e.differentiate(Var::X).differentiate(Var::Y);
        assert!(exps_const(&d));
        assert!(d.eval(0.3_f64, 0.4).unwrap().is_finite());
    }
}
