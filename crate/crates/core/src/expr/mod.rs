//! Arithmetic expressions over chart coordinates `x1..xn`.
//!
//! Metric components, contact coefficients and curve parameterizations are
//! all written in this small language. Expressions are parsed into an
//! immutable [`Expr`] tree that can be evaluated at a point, differentiated
//! symbolically with respect to any coordinate, and printed back to a form
//! that re-parses to the same tree.
//!
//! Grammar (EBNF):
//!
//! ```text
//! expr    = term { ("+" | "-") term } ;
//! term    = unary { ("*" | "/") unary } ;
//! unary   = "-" unary | power ;
//! power   = primary [ "^" unary ] ;            (* right-associative *)
//! primary = number | "pi" | var | func "(" expr ")" | "(" expr ")" ;
//! var     = "x" digit { digit } ;              (* x1, x2, ..., x10, ... *)
//! func    = "sin" | "cos" | "tan" | "exp" | "log" | "sqrt" | "abs" ;
//! number  = digit { digit } [ "." { digit } ] [ ("e" | "E") ["+" | "-"] digit { digit } ] ;
//! ```
//!
//! The exponent of `^` must be a constant (numeric literals, `pi` and
//! arithmetic on them).

mod diff;
mod parse;

use std::fmt;

use thiserror::Error;

pub use parse::{parse, parse_curve_component, parse_in_chart, ParseError};

/// Poles of `tan` closer than this (in `|cos u|`) are domain errors.
pub const TAN_POLE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Abs,
}

impl Func {
    pub const ALL: [Func; 7] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Abs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    fn apply(self, u: f64) -> Result<f64, EvalError> {
        match self {
            Func::Sin => Ok(u.sin()),
            Func::Cos => Ok(u.cos()),
            Func::Tan => {
                if u.cos().abs() < TAN_POLE_TOLERANCE {
                    Err(EvalError::Domain {
                        op: "tan",
                        arg: u,
                        reason: "pole",
                    })
                } else {
                    Ok(u.tan())
                }
            }
            Func::Exp => Ok(u.exp()),
            Func::Log => {
                if u <= 0.0 {
                    Err(EvalError::Domain {
                        op: "log",
                        arg: u,
                        reason: "non-positive argument",
                    })
                } else {
                    Ok(u.ln())
                }
            }
            Func::Sqrt => {
                if u < 0.0 {
                    Err(EvalError::Domain {
                        op: "sqrt",
                        arg: u,
                        reason: "negative argument",
                    })
                } else {
                    Ok(u.sqrt())
                }
            }
            Func::Abs => Ok(u.abs()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }
}

/// Expression tree. Variables are 1-based coordinate indices.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Pi,
    Var(usize),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    /// Power with a constant exponent subtree.
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("domain error in {op}({arg}): {reason}")]
    Domain {
        op: &'static str,
        arg: f64,
        reason: &'static str,
    },
    #[error("division by zero")]
    DivisionByZero,
    #[error("variable x{index} is outside a {dim}-dimensional point")]
    VariableOutOfRange { index: usize, dim: usize },
}

impl Expr {
    pub fn constant(value: f64) -> Expr {
        Expr::Const(value)
    }

    pub fn var(index: usize) -> Expr {
        assert!(index >= 1, "coordinate indices are 1-based");
        Expr::Var(index)
    }

    /// Evaluates the expression at `point` (coordinates `x1..xn`).
    pub fn eval(&self, point: &[f64]) -> Result<f64, EvalError> {
        match self {
            Expr::Const(c) => Ok(*c),
            Expr::Pi => Ok(std::f64::consts::PI),
            Expr::Var(k) => point
                .get(k - 1)
                .copied()
                .ok_or(EvalError::VariableOutOfRange {
                    index: *k,
                    dim: point.len(),
                }),
            Expr::Neg(u) => Ok(-u.eval(point)?),
            Expr::Binary(op, a, b) => {
                let a = a.eval(point)?;
                let b = b.eval(point)?;
                match op {
                    BinOp::Add => Ok(a + b),
                    BinOp::Sub => Ok(a - b),
                    BinOp::Mul => Ok(a * b),
                    BinOp::Div => {
                        if b == 0.0 {
                            Err(EvalError::DivisionByZero)
                        } else {
                            Ok(a / b)
                        }
                    }
                }
            }
            Expr::Pow(base, exponent) => {
                let b = base.eval(point)?;
                let e = exponent.eval(point)?;
                power(b, e)
            }
            Expr::Call(f, u) => f.apply(u.eval(point)?),
        }
    }

    /// True when the tree contains no variables.
    pub fn is_literal(&self) -> bool {
        match self {
            Expr::Const(_) | Expr::Pi => true,
            Expr::Var(_) => false,
            Expr::Neg(u) | Expr::Call(_, u) => u.is_literal(),
            Expr::Binary(_, a, b) | Expr::Pow(a, b) => a.is_literal() && b.is_literal(),
        }
    }

    /// Value of a literal-only tree, `None` if it has variables or fails to evaluate.
    pub fn literal_value(&self) -> Option<f64> {
        if self.is_literal() {
            self.eval(&[]).ok().filter(|v| v.is_finite())
        } else {
            None
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Const(c) if *c == 0.0)
    }

    /// Largest variable index referenced, 0 for a literal tree.
    pub fn max_var(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Pi => 0,
            Expr::Var(k) => *k,
            Expr::Neg(u) | Expr::Call(_, u) => u.max_var(),
            Expr::Binary(_, a, b) | Expr::Pow(a, b) => a.max_var().max(b.max_var()),
        }
    }

    pub fn depends_on(&self, index: usize) -> bool {
        match self {
            Expr::Const(_) | Expr::Pi => false,
            Expr::Var(k) => *k == index,
            Expr::Neg(u) | Expr::Call(_, u) => u.depends_on(index),
            Expr::Binary(_, a, b) | Expr::Pow(a, b) => a.depends_on(index) || b.depends_on(index),
        }
    }

    /// Sorted, deduplicated list of referenced variable indices.
    pub fn variables(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out.sort_unstable();
        out.dedup();
        out
    }

    fn collect_vars(&self, out: &mut Vec<usize>) {
        match self {
            Expr::Const(_) | Expr::Pi => {}
            Expr::Var(k) => out.push(*k),
            Expr::Neg(u) | Expr::Call(_, u) => u.collect_vars(out),
            Expr::Binary(_, a, b) | Expr::Pow(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    /// Replaces every occurrence of `x{index}` by `value`, folding literal subtrees.
    pub fn substitute(&self, index: usize, value: &Expr) -> Expr {
        match self {
            Expr::Const(_) | Expr::Pi => self.clone(),
            Expr::Var(k) if *k == index => value.clone(),
            Expr::Var(_) => self.clone(),
            Expr::Neg(u) => diff::neg(u.substitute(index, value)),
            Expr::Binary(op, a, b) => {
                diff::binary(*op, a.substitute(index, value), b.substitute(index, value))
            }
            Expr::Pow(a, b) => diff::pow(a.substitute(index, value), (**b).clone()),
            Expr::Call(f, u) => diff::call(*f, u.substitute(index, value)),
        }
    }

    /// Exact partial derivative with respect to `x{index}`.
    pub fn differentiate(&self, index: usize) -> Expr {
        assert!(index >= 1, "coordinate indices are 1-based");
        diff::derivative(self, index)
    }

    /// Max over coordinates of |symbolic partial - central difference with step `h`|.
    pub fn gradient_check(&self, point: &[f64], h: f64) -> Result<f64, EvalError> {
        let mut worst = 0.0f64;
        let mut shifted = point.to_vec();
        for k in 0..point.len() {
            let symbolic = self.differentiate(k + 1).eval(point)?;
            shifted[k] = point[k] + h;
            let plus = self.eval(&shifted)?;
            shifted[k] = point[k] - h;
            let minus = self.eval(&shifted)?;
            shifted[k] = point[k];
            let fd = (plus - minus) / (2.0 * h);
            worst = worst.max((symbolic - fd).abs());
        }
        Ok(worst)
    }
}

fn power(base: f64, exponent: f64) -> Result<f64, EvalError> {
    if exponent.fract() == 0.0 && exponent.abs() <= i32::MAX as f64 {
        if base == 0.0 && exponent < 0.0 {
            return Err(EvalError::DivisionByZero);
        }
        return Ok(base.powi(exponent as i32));
    }
    if base < 0.0 {
        return Err(EvalError::Domain {
            op: "^",
            arg: base,
            reason: "negative base with non-integer exponent",
        });
    }
    if base == 0.0 && exponent < 0.0 {
        return Err(EvalError::DivisionByZero);
    }
    Ok(base.powf(exponent))
}

/// Fully parenthesized printer; `parse(&e.to_string())` reproduces `e` for parsed trees.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) => {
                write!(f, "(-{})", -c)
            }
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Pi => f.write_str("pi"),
            Expr::Var(k) => write!(f, "x{k}"),
            Expr::Neg(u) => write!(f, "(-{u})"),
            Expr::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Expr::Pow(a, b) => write!(f, "({a}^{b})"),
            Expr::Call(func, u) => write!(f, "{}({u})", func.name()),
        }
    }
}
