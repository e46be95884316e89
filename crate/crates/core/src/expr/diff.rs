//! Symbolic differentiation with constant folding of literal-only subtrees.

use super::{BinOp, Expr, Func};

fn fold(e: Expr) -> Expr {
    match e.literal_value() {
        Some(v) if !matches!(e, Expr::Const(_) | Expr::Pi) => Expr::Const(v),
        _ => e,
    }
}

fn is_one(e: &Expr) -> bool {
    matches!(e, Expr::Const(c) if *c == 1.0)
}

pub(super) fn neg(u: Expr) -> Expr {
    match u {
        Expr::Const(c) => Expr::Const(-c),
        Expr::Neg(inner) => *inner,
        u => Expr::Neg(Box::new(u)),
    }
}

pub(super) fn binary(op: BinOp, a: Expr, b: Expr) -> Expr {
    match op {
        BinOp::Add if a.is_zero() => return b,
        BinOp::Add | BinOp::Sub if b.is_zero() => return a,
        BinOp::Sub if a.is_zero() => return neg(b),
        BinOp::Mul if a.is_zero() || b.is_zero() => return Expr::Const(0.0),
        BinOp::Mul if is_one(&a) => return b,
        BinOp::Mul | BinOp::Div if is_one(&b) => return a,
        BinOp::Div if a.is_zero() && !b.is_zero() => return Expr::Const(0.0),
        _ => {}
    }
    fold(Expr::Binary(op, Box::new(a), Box::new(b)))
}

pub(super) fn pow(base: Expr, exponent: Expr) -> Expr {
    match exponent.literal_value() {
        Some(0.0) => Expr::Const(1.0),
        Some(1.0) => base,
        _ => fold(Expr::Pow(Box::new(base), Box::new(exponent))),
    }
}

pub(super) fn call(f: Func, u: Expr) -> Expr {
    fold(Expr::Call(f, Box::new(u)))
}

fn add(a: Expr, b: Expr) -> Expr {
    binary(BinOp::Add, a, b)
}

fn sub(a: Expr, b: Expr) -> Expr {
    binary(BinOp::Sub, a, b)
}

fn mul(a: Expr, b: Expr) -> Expr {
    binary(BinOp::Mul, a, b)
}

fn div(a: Expr, b: Expr) -> Expr {
    binary(BinOp::Div, a, b)
}

pub(super) fn derivative(e: &Expr, k: usize) -> Expr {
    if !e.depends_on(k) {
        return Expr::Const(0.0);
    }
    match e {
        Expr::Const(_) | Expr::Pi => Expr::Const(0.0),
        Expr::Var(j) => Expr::Const(if *j == k { 1.0 } else { 0.0 }),
        Expr::Neg(u) => neg(derivative(u, k)),
        Expr::Binary(op, a, b) => {
            let da = derivative(a, k);
            let db = derivative(b, k);
            let (a, b) = ((**a).clone(), (**b).clone());
            match op {
                BinOp::Add => add(da, db),
                BinOp::Sub => sub(da, db),
                BinOp::Mul => add(mul(da, b), mul(a, db)),
                // (a'b - ab') / b^2
                BinOp::Div => div(
                    sub(mul(da, b.clone()), mul(a, db)),
                    pow(b, Expr::Const(2.0)),
                ),
            }
        }
        Expr::Pow(base, exponent) => {
            // constant exponent: c * u^(c-1) * u'
            let c = exponent
                .literal_value()
                .expect("power exponents are constant by construction");
            let du = derivative(base, k);
            mul(
                mul(Expr::Const(c), pow((**base).clone(), Expr::Const(c - 1.0))),
                du,
            )
        }
        Expr::Call(f, u) => {
            let du = derivative(u, k);
            let u = (**u).clone();
            let outer = match f {
                Func::Sin => call(Func::Cos, u),
                Func::Cos => neg(call(Func::Sin, u)),
                Func::Tan => div(
                    Expr::Const(1.0),
                    pow(call(Func::Cos, u), Expr::Const(2.0)),
                ),
                Func::Exp => call(Func::Exp, u),
                Func::Log => div(Expr::Const(1.0), u),
                Func::Sqrt => div(Expr::Const(0.5), call(Func::Sqrt, u)),
                // undefined at u = 0, where the quotient raises a domain error
                Func::Abs => div(u.clone(), call(Func::Abs, u)),
            };
            mul(outer, du)
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::parse;
    use std::f64::consts::PI;

    fn central_difference(src: &str, k: usize, p: &[f64], h: f64) -> f64 {
        let e = parse(src).unwrap();
        let mut q = p.to_vec();
        q[k - 1] += h;
        let plus = e.eval(&q).unwrap();
        q[k - 1] -= 2.0 * h;
        let minus = e.eval(&q).unwrap();
        (plus - minus) / (2.0 * h)
    }

    #[test]
    fn product_rule() {
        let d = parse("x1^2*x2").unwrap().differentiate(1);
        assert_eq!(d.eval(&[3.0, 4.0]).unwrap(), 24.0);
    }

    #[test]
    fn independent_variable_gives_zero() {
        assert_eq!(parse("sin(x1)").unwrap().differentiate(2), super::Expr::Const(0.0));
    }

    #[test]
    fn squared_sine_matches_finite_difference() {
        let p = [PI / 4.0];
        let fd = central_difference("sin(x1)^2", 1, &p, 1e-5);
        let sym = parse("sin(x1)^2").unwrap().differentiate(1).eval(&p).unwrap();
        assert!((fd - 1.0).abs() < 1e-9);
        assert!((sym - fd).abs() < 1e-9);
        assert!((sym - 1.0).abs() < 1e-15);
    }

    #[test]
    fn every_function_matches_finite_difference() {
        let p = [0.7, 1.3];
        for src in [
            "tan(x1*x2)",
            "log(x1 + x2^2)",
            "sqrt(x1*x2)",
            "abs(x1 - x2)",
            "exp(-x1)*cos(x2)",
            "x1/(1 + x2^2)",
            "x1^(1/3)",
            "x2^-2",
        ] {
            let e = parse(src).unwrap();
            assert!(e.gradient_check(&p, 1e-5).unwrap() < 1e-8, "{src}");
        }
    }

    #[test]
    fn derivative_of_abs_at_zero_is_a_domain_error() {
        let d = parse("abs(x1)").unwrap().differentiate(1);
        assert!(d.eval(&[0.0]).is_err());
    }
}
