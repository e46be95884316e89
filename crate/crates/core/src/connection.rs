//! Connection coefficients computed from symbolic metric derivatives.
//!
//! * Levi-Civita: `Γ^k_ij = ½ h^kl (∂_i h_lj + ∂_j h_li − ∂_l h_ij)`.
//! * Horizontal: the same formula on the contact distribution with the
//!   coordinate derivatives replaced by the frame derivatives
//!   `e_i = ∂_i − Γ_i ∂_n`.
//! * Adapted: the horizontal coefficients for horizontal directions, and zero
//!   whenever the differentiating direction is the Reeb direction `x_n`.
//!
//! Indices of [`Coefficients`] are 0-based; `get(k, i, j)` is `Γ^k_ij` with
//! `i` the differentiating direction.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::linalg;
use crate::manifold::{KContactSpec, RiemannianSpec};

/// Metrics with a larger 1-norm condition number are treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConnectionKind {
    LeviCivita,
    Horizontal,
    Adapted,
}

/// Coefficient array `Γ^k_ij` at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients {
    kind: ConnectionKind,
    dim: usize,
    values: Vec<f64>,
}

impl Coefficients {
    fn zeros(kind: ConnectionKind, dim: usize) -> Self {
        Coefficients {
            kind,
            dim,
            values: vec![0.0; dim * dim * dim],
        }
    }

    pub fn kind(&self) -> ConnectionKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.values[(k * self.dim + i) * self.dim + j]
    }

    fn set(&mut self, k: usize, i: usize, j: usize, v: f64) {
        self.values[(k * self.dim + i) * self.dim + j] = v;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max_abs_diff(&self, other: &Coefficients) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()))
    }

    /// `max |Γ^k_ij − Γ^k_ji|`.
    pub fn lower_symmetry_residual(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    worst = worst.max((self.get(k, i, j) - self.get(k, j, i)).abs());
                }
            }
        }
        worst
    }

    /// Connection matrix along a velocity: `A^k_j = Σ_i Γ^k_ij v^i` over the first `dim` components of `v`.
    pub fn contract_direction(&self, velocity: &[f64]) -> DMatrix<f64> {
        let n = self.dim;
        let mut a = DMatrix::zeros(n, n);
        for k in 0..n {
            for (i, v) in velocity.iter().take(n).enumerate() {
                if *v == 0.0 {
                    continue;
                }
                for j in 0..n {
                    a[(k, j)] += self.get(k, i, j) * v;
                }
            }
        }
        a
    }
}

/// Adapted-connection coefficients: horizontal values plus the vertical zero rule.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptedCoefficients {
    horizontal: Coefficients,
}

impl AdaptedCoefficients {
    /// Rank `2m` of the distribution.
    pub fn rank(&self) -> usize {
        self.horizontal.dim
    }

    /// `Γ^A k_ij` with direction index `i` in `0..=2m`; `i == 2m` is the Reeb direction.
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        if i == self.horizontal.dim {
            0.0
        } else {
            self.horizontal.get(k, i, j)
        }
    }

    pub fn horizontal(&self) -> &Coefficients {
        &self.horizontal
    }
}

/// Precomputed symbolic data for evaluating a coefficient field at many points.
#[derive(Debug, Clone)]
pub struct ChristoffelField {
    kind: ConnectionKind,
    dim: usize,
    metric: Vec<Expr>,
    /// `partials[l][i*dim + j] = ∂_l g_ij` for fiber directions `l`.
    partials: Vec<Vec<Expr>>,
    /// Contact coefficients and `∂_n g_ij` for frame derivatives.
    vertical: Option<(Vec<Expr>, Vec<Expr>)>,
}

fn eval_err(p: &[f64]) -> impl Fn(crate::expr::EvalError) -> Error + '_ {
    move |source| Error::Eval {
        point: p.to_vec(),
        source,
    }
}

impl ChristoffelField {
    pub fn levi_civita(spec: &RiemannianSpec) -> Self {
        let dim = spec.dim();
        let metric = spec.metric().to_vec();
        let partials = (1..=dim)
            .map(|l| metric.iter().map(|g| g.differentiate(l)).collect())
            .collect();
        ChristoffelField {
            kind: ConnectionKind::LeviCivita,
            dim,
            metric,
            partials,
            vertical: None,
        }
    }

    pub fn horizontal(spec: &KContactSpec) -> Self {
        let dim = spec.rank();
        let n = spec.dim();
        let metric = spec.horizontal_metric().to_vec();
        let partials = (1..=dim)
            .map(|l| metric.iter().map(|g| g.differentiate(l)).collect())
            .collect();
        let vertical_partials = metric.iter().map(|g| g.differentiate(n)).collect();
        ChristoffelField {
            kind: ConnectionKind::Horizontal,
            dim,
            metric,
            partials,
            vertical: Some((spec.contact_coeffs().to_vec(), vertical_partials)),
        }
    }

    pub fn adapted(spec: &KContactSpec) -> Self {
        ChristoffelField {
            kind: ConnectionKind::Adapted,
            ..ChristoffelField::horizontal(spec)
        }
    }

    pub fn kind(&self) -> ConnectionKind {
        self.kind
    }

    /// Fiber dimension.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Fiber metric at `p` without the positivity check.
    pub fn metric_at(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.dim;
        let mut g = DMatrix::zeros(n, n);
        for (idx, e) in self.metric.iter().enumerate() {
            g[(idx / n, idx % n)] = e.eval(p).map_err(eval_err(p))?;
        }
        Ok(g)
    }

    /// `dg[(l*n + i)*n + j]` = derivative of `g_ij` along `∂_l` or `e_l`.
    fn derivative_table(&self, p: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim;
        let mut dg = Vec::with_capacity(n * n * n);
        for row in &self.partials {
            for e in row {
                dg.push(e.eval(p).map_err(eval_err(p))?);
            }
        }
        if let Some((coeffs, vertical)) = &self.vertical {
            let dn: Vec<f64> = vertical
                .iter()
                .map(|e| e.eval(p).map_err(eval_err(p)))
                .collect::<Result<_>>()?;
            if dn.iter().any(|v| *v != 0.0) {
                for (l, c) in coeffs.iter().enumerate() {
                    let gamma = c.eval(p).map_err(eval_err(p))?;
                    for idx in 0..n * n {
                        dg[l * n * n + idx] -= gamma * dn[idx];
                    }
                }
            }
        }
        Ok(dg)
    }

    /// Fiber metric and coefficient array at `p`.
    pub fn evaluate(&self, p: &[f64]) -> Result<(DMatrix<f64>, Coefficients)> {
        let n = self.dim;
        let g = self.metric_at(p)?;
        let inv = linalg::guarded_inverse(&g, MAX_CONDITION).map_err(|condition| {
            Error::SingularMetric {
                condition,
                point: p.to_vec(),
            }
        })?;
        let dg = self.derivative_table(p)?;
        let d = |l: usize, i: usize, j: usize| dg[(l * n + i) * n + j];
        let mut out = Coefficients::zeros(self.kind, n);
        for k in 0..n {
            for i in 0..n {
                for j in i..n {
                    let mut sum = 0.0;
                    for l in 0..n {
                        let ginv = inv[(k, l)];
                        if ginv != 0.0 {
                            sum += ginv * (d(i, l, j) + d(j, l, i) - d(l, i, j));
                        }
                    }
                    out.set(k, i, j, 0.5 * sum);
                    out.set(k, j, i, 0.5 * sum);
                }
            }
        }
        Ok((g, out))
    }

    pub fn coefficients_at(&self, p: &[f64]) -> Result<Coefficients> {
        self.evaluate(p).map(|(_, c)| c)
    }
}

/// Levi-Civita coefficients of `spec` at `p`.
pub fn levi_civita_coeffs(spec: &RiemannianSpec, p: &[f64]) -> Result<Coefficients> {
    ChristoffelField::levi_civita(spec).coefficients_at(p)
}

/// `(e_i f)(p) = ∂_i f(p) − Γ_i(p) ∂_n f(p)` for the 1-based frame index `i`.
pub fn frame_derivative(spec: &KContactSpec, e: &Expr, i: usize, p: &[f64]) -> Result<f64> {
    if i == 0 || i > spec.rank() {
        return Err(Error::InvalidSpec(format!(
            "frame index {i} outside 1..={}",
            spec.rank()
        )));
    }
    let n = spec.dim();
    let di = e.differentiate(i).eval(p).map_err(eval_err(p))?;
    let dn = e.differentiate(n).eval(p).map_err(eval_err(p))?;
    let gamma = spec.contact_coeffs()[i - 1].eval(p).map_err(eval_err(p))?;
    Ok(di - gamma * dn)
}

/// Horizontal-connection coefficients (indices over the distribution).
pub fn horizontal_coeffs(spec: &KContactSpec, p: &[f64]) -> Result<Coefficients> {
    ChristoffelField::horizontal(spec).coefficients_at(p)
}

/// Adapted-connection coefficients with the vertical zero rule.
pub fn adapted_coeffs(spec: &KContactSpec, p: &[f64]) -> Result<AdaptedCoefficients> {
    let horizontal = ChristoffelField::adapted(spec).coefficients_at(p)?;
    Ok(AdaptedCoefficients { horizontal })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::expr::parse;
    use crate::manifold::quotient_metric;
    use std::f64::consts::PI;

    #[test]
    fn euclidean_coefficients_vanish() {
        let c = levi_civita_coeffs(&catalog::euclidean_spec(2), &[0.3, 0.1]).unwrap();
        assert!(c.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn sphere_coefficients_at_equator_vanish() {
        let c = levi_civita_coeffs(&catalog::round_sphere_spec(), &[PI / 2.0, 0.0]).unwrap();
        assert!(c.values().iter().all(|v| v.abs() < 1e-15), "{c:?}");
    }

    #[test]
    fn sphere_coefficients_at_quarter() {
        let c = levi_civita_coeffs(&catalog::round_sphere_spec(), &[PI / 4.0, 0.0]).unwrap();
        // Γ^1_22 = −sin cos, Γ^2_12 = Γ^2_21 = cot
        assert!((c.get(0, 1, 1) + 0.5).abs() < 1e-10);
        assert!((c.get(1, 0, 1) - 1.0).abs() < 1e-10);
        assert!((c.get(1, 1, 0) - 1.0).abs() < 1e-10);
        for (k, i, j) in [(0, 0, 0), (0, 0, 1), (0, 1, 0), (1, 0, 0), (1, 1, 1)] {
            assert!(c.get(k, i, j).abs() < 1e-10);
        }
    }

    #[test]
    fn singular_metric_is_reported() {
        let spec =
            RiemannianSpec::from_strings(2, &["1", "1", "1", "1 + x1"], vec![(-1.0, 1.0), (-1.0, 1.0)])
                .unwrap();
        assert!(matches!(
            levi_civita_coeffs(&spec, &[0.0, 0.0]),
            Err(Error::SingularMetric { .. })
        ));
    }

    #[test]
    fn frame_derivative_examples() {
        let h = catalog::heisenberg_spec();
        let e = parse("x1^2").unwrap();
        assert_eq!(frame_derivative(&h, &e, 1, &[1.5, 2.0, 3.0]).unwrap(), 3.0);
        let x3 = parse("x3").unwrap();
        assert_eq!(frame_derivative(&h, &x3, 1, &[0.0, 2.5, 1.0]).unwrap(), 2.5);
        let e = parse("x1*x3").unwrap();
        let p = [1.0, 2.0, 5.0];
        let v = frame_derivative(&h, &e, 1, &p).unwrap();
        assert_eq!(v, 7.0);
        // directional finite difference along e_1 = (1, 0, −Γ_1) = (1, 0, x2)
        let step = 1e-5;
        let f = |s: f64| e.eval(&[p[0] + s, p[1], p[2] + s * p[1]]).unwrap();
        assert!(((f(step) - f(-step)) / (2.0 * step) - 7.0).abs() < 1e-8);
        assert!(frame_derivative(&h, &e, 3, &p).is_err());
    }

    #[test]
    fn heisenberg_horizontal_coefficients_vanish() {
        let h = catalog::heisenberg_spec();
        for p in h.domain().sample_points(10, 2) {
            let c = horizontal_coeffs(&h, &p).unwrap();
            assert!(c.values().iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn sasakian_horizontal_matches_sphere() {
        let s = catalog::sasakian_sphere_spec();
        let c = horizontal_coeffs(&s, &[PI / 4.0, 0.0, 1.7]).unwrap();
        let r = levi_civita_coeffs(&catalog::round_sphere_spec(), &[PI / 4.0, 0.0]).unwrap();
        assert!(c.max_abs_diff(&r) < 1e-12);
        let q = quotient_metric(&s).unwrap();
        for p in s.domain().sample_points(50, 5) {
            let up = horizontal_coeffs(&s, &p).unwrap();
            let down = levi_civita_coeffs(&q, &p[..2]).unwrap();
            assert!(up.max_abs_diff(&down) < 1e-12);
        }
    }

    #[test]
    fn product_has_no_mixed_coefficients() {
        let s = catalog::product_contactization_spec();
        let block = |i: usize| i / 2;
        for p in s.domain().sample_points(20, 8) {
            let c = horizontal_coeffs(&s, &p).unwrap();
            for k in 0..4 {
                for i in 0..4 {
                    for j in 0..4 {
                        if !(block(k) == block(i) && block(i) == block(j)) {
                            assert!(c.get(k, i, j).abs() < 1e-12);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn adapted_vertical_rule() {
        let s = catalog::sasakian_sphere_spec();
        let a = adapted_coeffs(&s, &[PI / 3.0, 1.0, 2.0]).unwrap();
        for k in 0..2 {
            for j in 0..2 {
                assert_eq!(a.get(k, 2, j), 0.0);
            }
        }
        let b = adapted_coeffs(&s, &[PI / 3.0, 1.0, 7.0]).unwrap();
        assert!(a.horizontal().max_abs_diff(b.horizontal()) < 1e-14);
        let h = adapted_coeffs(&catalog::heisenberg_spec(), &[0.2, 0.1, 0.0]).unwrap();
        assert!(h.horizontal().values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn frame_derivatives_enter_when_metric_depends_on_vertical() {
        // Not K-contact, but exercises the e_l correction: g_11 = exp(x3), Γ_2 = x1.
        let spec = KContactSpec::from_strings(
            1,
            &["exp(x3)", "0", "0", "1"],
            &["0", "x1"],
            vec![(-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0)],
        )
        .unwrap();
        let p = [0.4, -0.2, 0.3];
        let c = horizontal_coeffs(&spec, &p).unwrap();
        // e_2 g_11 = −x1 exp(x3); Γ^1_12 = ½ g^11 e_2 g_11 = −x1/2
        assert!((c.get(0, 1, 0) + 0.2).abs() < 1e-15);
        // Γ^2_11 = −½ g^22 e_2 g_11 = x1 exp(x3)/2
        assert!((c.get(1, 0, 0) - 0.2 * 0.3f64.exp()).abs() < 1e-15);
    }
}
