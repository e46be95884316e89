#![allow(dead_code)]

use std::f64::consts::PI;

use holonomy_lab::expr::{BinOp, Expr, Func};
use nalgebra::{DMatrix, Matrix2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Latitude transport on the unit sphere with the Christoffel symbols typed in by hand:
/// Γ¹₂₂ = −sin φ cos φ, Γ²₁₂ = Γ²₂₁ = cot φ. Plain RK4 over one full turn.
pub fn sphere_latitude_oracle(phi0: f64, steps: usize) -> Matrix2<f64> {
    let (s, c) = phi0.sin_cos();
    let a = Matrix2::new(0.0, s * c, -c / s, 0.0);
    let f = |x: &Matrix2<f64>| a * x;
    let h = 2.0 * PI / steps as f64;
    let mut x = Matrix2::identity();
    for _ in 0..steps {
        let k1 = f(&x);
        let k2 = f(&(x + k1 * (h / 2.0)));
        let k3 = f(&(x + k2 * (h / 2.0)));
        let k4 = f(&(x + k3 * h));
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    x
}

/// Signed rotation angle of a transport matrix on the sphere at polar angle `phi0`,
/// read off in the orthonormal frame (∂₁, ∂₂ / sin φ).
pub fn sphere_rotation_angle(m: &DMatrix<f64>, phi0: f64) -> f64 {
    let s = phi0.sin();
    // Q = Lᵀ M L⁻ᵀ with L = diag(1, sin φ)
    let q10 = s * m[(1, 0)];
    let q00 = m[(0, 0)];
    q10.atan2(q00)
}

pub fn rotation(angle: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[angle.cos(), -angle.sin(), angle.sin(), angle.cos()])
}

/// Random expression tree over `x1..x{dim}`; leaves are positive literals,
/// `pi` or variables.
pub fn random_expr(rng: &mut ChaCha8Rng, depth: u32, dim: usize) -> Expr {
    if depth == 0 || rng.random_bool(0.25) {
        return match rng.random_range(0..3) {
            0 => Expr::Const((rng.random_range(0.0..10.0f64) * 1000.0).round() / 1000.0),
            1 => Expr::Pi,
            _ => Expr::Var(rng.random_range(1..=dim)),
        };
    }
    let sub = |rng: &mut ChaCha8Rng| Box::new(random_expr(rng, depth - 1, dim));
    match rng.random_range(0..4) {
        0 => Expr::Neg(sub(rng)),
        1 => {
            let op = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div][rng.random_range(0..4)];
            Expr::Binary(op, sub(rng), sub(rng))
        }
        2 => Expr::Pow(sub(rng), Box::new(Expr::Const(rng.random_range(1..4) as f64))),
        _ => {
            let f = [Func::Sin, Func::Cos, Func::Tan, Func::Exp, Func::Log, Func::Sqrt, Func::Abs]
                [rng.random_range(0..7)];
            Expr::Call(f, sub(rng))
        }
    }
}

/// The 200-case round-trip corpus.
pub fn expression_corpus() -> Vec<Expr> {
    let mut rng = ChaCha8Rng::seed_from_u64(20240917);
    (0..200).map(|_| random_expr(&mut rng, 4, 5)).collect()
}
