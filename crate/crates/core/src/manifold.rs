//! Chart-level manifold specifications and their structural validation.
//!
//! A [`RiemannianSpec`] is a metric `h_ij(x)` on a coordinate box. A
//! [`KContactSpec`] describes a contact sub-Riemannian manifold of dimension
//! `n = 2m + 1` in adapted coordinates: the Reeb field is `∂/∂x_n`, the
//! contact form is `θ = dx_n + Γ_i dx_i`, the horizontal frame is
//! `e_i = ∂_i − Γ_i ∂_n`, and `g_ij = g(e_i, e_j)` is the metric on the
//! contact distribution.
//!
//! The holonomy of the adapted connection acts on the contact distribution
//! `D_x`, so invariant decompositions are decompositions of `D_x`, never of
//! the full tangent space.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{parse_in_chart, Expr};
use crate::linalg;

/// Default number of Monte Carlo points for structure validation.
pub const DEFAULT_VALIDATION_SAMPLES: usize = 200;

/// Numerical thresholds used by validation and metric evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    /// Smallest admissible metric eigenvalue.
    pub positive_definite: f64,
    /// Bound for residuals that must vanish identically (symmetry, Reeb, K-contact).
    pub residual: f64,
    /// Smallest admissible `|det dθ|` on the horizontal block.
    pub contact_determinant: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            positive_definite: 1e-10,
            residual: 1e-12,
            contact_determinant: 1e-10,
        }
    }
}

/// Product of open intervals, one per coordinate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DomainBox {
    bounds: Vec<(f64, f64)>,
}

impl DomainBox {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self> {
        for (k, &(lo, hi)) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidSpec(format!(
                    "domain interval {} is not a finite open interval: [{lo}, {hi}]",
                    k + 1
                )));
            }
        }
        Ok(DomainBox { bounds })
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.bounds.len()
            && p
                .iter()
                .zip(&self.bounds)
                .all(|(x, (lo, hi))| *lo < *x && *x < *hi)
    }

    /// First `k` intervals.
    pub fn truncate(&self, k: usize) -> DomainBox {
        DomainBox {
            bounds: self.bounds[..k].to_vec(),
        }
    }

    /// Uniform points strictly inside the box from a seeded generator.
    pub fn sample_points(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                self.bounds
                    .iter()
                    .map(|&(lo, hi)| {
                        let u: f64 = rng.random_range(0.0..1.0);
                        let x = lo + (hi - lo) * u;
                        if x <= lo {
                            lo + (hi - lo) * 0.5
                        } else {
                            x
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

fn parse_matrix(entries: &[&str], k: usize, chart_dim: usize) -> Result<Vec<Expr>> {
    if entries.len() != k * k {
        return Err(Error::InvalidSpec(format!(
            "metric needs {} entries ({k}x{k} row-major), got {}",
            k * k,
            entries.len()
        )));
    }
    entries
        .iter()
        .enumerate()
        .map(|(idx, s)| {
            parse_in_chart(s, chart_dim).map_err(|source| Error::Parse {
                context: format!("metric entry ({}, {})", idx / k + 1, idx % k + 1),
                source,
            })
        })
        .collect()
}

fn check_chart(exprs: &[Expr], chart_dim: usize, what: &str) -> Result<()> {
    for e in exprs {
        if e.max_var() > chart_dim {
            return Err(Error::InvalidSpec(format!(
                "{what} references x{} in a {chart_dim}-dimensional chart",
                e.max_var()
            )));
        }
    }
    Ok(())
}

fn eval_matrix(entries: &[Expr], k: usize, p: &[f64]) -> Result<DMatrix<f64>> {
    let mut m = DMatrix::zeros(k, k);
    for (idx, e) in entries.iter().enumerate() {
        m[(idx / k, idx % k)] = e.eval(p).map_err(|source| Error::Eval {
            point: p.to_vec(),
            source,
        })?;
    }
    Ok(m)
}

fn require_positive_definite(m: DMatrix<f64>, p: &[f64], t: &Thresholds) -> Result<DMatrix<f64>> {
    let min_eigenvalue = linalg::min_eigenvalue(&m);
    if !(min_eigenvalue > t.positive_definite) {
        return Err(Error::NotPositiveDefinite {
            min_eigenvalue,
            point: p.to_vec(),
        });
    }
    Ok(m)
}

/// Riemannian metric `h_ij(x)` on a coordinate box.
#[derive(Debug, Clone, PartialEq)]
pub struct RiemannianSpec {
    dim: usize,
    metric: Vec<Expr>,
    domain: DomainBox,
    thresholds: Thresholds,
}

impl RiemannianSpec {
    pub fn new(dim: usize, metric: Vec<Expr>, domain: DomainBox) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidSpec("dimension must be positive".into()));
        }
        if metric.len() != dim * dim {
            return Err(Error::InvalidSpec(format!(
                "metric needs {} entries, got {}",
                dim * dim,
                metric.len()
            )));
        }
        if domain.dim() != dim {
            return Err(Error::InvalidSpec(format!(
                "domain box has {} intervals for dimension {dim}",
                domain.dim()
            )));
        }
        check_chart(&metric, dim, "metric")?;
        Ok(RiemannianSpec {
            dim,
            metric,
            domain,
            thresholds: Thresholds::default(),
        })
    }

    /// Builds a spec from row-major expression strings.
    pub fn from_strings(dim: usize, metric: &[&str], domain: Vec<(f64, f64)>) -> Result<Self> {
        let metric = parse_matrix(metric, dim, dim)?;
        RiemannianSpec::new(dim, metric, DomainBox::new(domain)?)
    }

    pub fn with_thresholds(mut self, thresholds: Thresholds) -> Self {
        self.thresholds = thresholds;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Row-major metric entries.
    pub fn metric(&self) -> &[Expr] {
        &self.metric
    }

    pub fn metric_entry(&self, i: usize, j: usize) -> &Expr {
        &self.metric[i * self.dim + j]
    }

    pub fn domain(&self) -> &DomainBox {
        &self.domain
    }

    pub fn thresholds(&self) -> &Thresholds {
        &self.thresholds
    }
}

/// K-contact sub-Riemannian manifold in adapted coordinates `x1..x(2m+1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KContactSpec {
    m: usize,
    horizontal_metric: Vec<Expr>,
    contact_coeffs: Vec<Expr>,
    domain: DomainBox,
    thresholds: Thresholds,
}

impl KContactSpec {
    pub fn new(
        m: usize,
        horizontal_metric: Vec<Expr>,
        contact_coeffs: Vec<Expr>,
        domain: DomainBox,
    ) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidSpec("half-rank m must be positive".into()));
        }
        let (k, n) = (2 * m, 2 * m + 1);
        if horizontal_metric.len() != k * k {
            return Err(Error::InvalidSpec(format!(
                "horizontal metric needs {} entries, got {}",
                k * k,
                horizontal_metric.len()
            )));
        }
        if contact_coeffs.len() != k {
            return Err(Error::InvalidSpec(format!(
                "contact form needs {k} coefficients, got {}",
                contact_coeffs.len()
            )));
        }
        if domain.dim() != n {
            return Err(Error::InvalidSpec(format!(
                "domain box has {} intervals for dimension {n}",
                domain.dim()
            )));
        }
        check_chart(&horizontal_metric, n, "horizontal metric")?;
        check_chart(&contact_coeffs, n, "contact coefficients")?;
        Ok(KContactSpec {
            m,
            horizontal_metric,
            contact_coeffs,
            domain,
            thresholds: Thresholds::default(),
        })
    }

    pub fn from_strings(
        m: usize,
        horizontal_metric: &[&str],
        contact_coeffs: &[&str],
        domain: Vec<(f64, f64)>,
    ) -> Result<Self> {
        let n = 2 * m + 1;
        let metric = parse_matrix(horizontal_metric, 2 * m, n)?;
        let coeffs = contact_coeffs
            .iter()
            .enumerate()
            .map(|(i, s)| {
                parse_in_chart(s, n).map_err(|source| Error::Parse {
                    context: format!("contact coefficient {}", i + 1),
                    source,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        KContactSpec::new(m, metric, coeffs, DomainBox::new(domain)?)
    }

    pub fn with_thresholds(mut self, thresholds: Thresholds) -> Self {
        self.thresholds = thresholds;
        self
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Rank of the contact distribution, `2m`.
    pub fn rank(&self) -> usize {
        2 * self.m
    }

    /// Chart dimension `2m + 1`.
    pub fn dim(&self) -> usize {
        2 * self.m + 1
    }

    pub fn horizontal_metric(&self) -> &[Expr] {
        &self.horizontal_metric
    }

    pub fn metric_entry(&self, i: usize, j: usize) -> &Expr {
        &self.horizontal_metric[i * self.rank() + j]
    }

    pub fn contact_coeffs(&self) -> &[Expr] {
        &self.contact_coeffs
    }

    pub fn domain(&self) -> &DomainBox {
        &self.domain
    }

    pub fn thresholds(&self) -> &Thresholds {
        &self.thresholds
    }

    /// Components of `θ = dx_n + Γ_i dx_i` at `p`, last entry is the `dx_n` component.
    pub fn contact_form(&self, p: &[f64]) -> Result<DVector<f64>> {
        let k = self.rank();
        let mut theta = DVector::zeros(k + 1);
        for (i, c) in self.contact_coeffs.iter().enumerate() {
            theta[i] = c.eval(p).map_err(|source| Error::Eval {
                point: p.to_vec(),
                source,
            })?;
        }
        theta[k] = 1.0;
        Ok(theta)
    }

    /// Horizontal frame `e_i = ∂_i − Γ_i ∂_n` as a `2m × n` component matrix (row `i` is `e_i`).
    pub fn frame(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        let k = self.rank();
        let theta = self.contact_form(p)?;
        let mut frame = DMatrix::zeros(k, k + 1);
        for i in 0..k {
            frame[(i, i)] = 1.0;
            frame[(i, k)] = -theta[i];
        }
        Ok(frame)
    }
}

/// Either kind of chart-level specification.
#[derive(Debug, Clone, PartialEq)]
pub enum ManifoldSpec {
    Riemannian(RiemannianSpec),
    KContact(KContactSpec),
}

impl ManifoldSpec {
    /// Chart dimension.
    pub fn dim(&self) -> usize {
        match self {
            ManifoldSpec::Riemannian(s) => s.dim(),
            ManifoldSpec::KContact(s) => s.dim(),
        }
    }

    /// Dimension of the fiber on which holonomy acts (`n` or `2m`).
    pub fn fiber_dim(&self) -> usize {
        match self {
            ManifoldSpec::Riemannian(s) => s.dim(),
            ManifoldSpec::KContact(s) => s.rank(),
        }
    }

    pub fn domain(&self) -> &DomainBox {
        match self {
            ManifoldSpec::Riemannian(s) => s.domain(),
            ManifoldSpec::KContact(s) => s.domain(),
        }
    }

    /// Fiber metric at `p`: `h` for Riemannian, `g` on the contact distribution otherwise.
    pub fn fiber_metric(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        match self {
            ManifoldSpec::Riemannian(s) => eval_riemannian_metric(s, p),
            ManifoldSpec::KContact(s) => eval_horizontal_metric(s, p),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            ManifoldSpec::Riemannian(_) => "riemannian",
            ManifoldSpec::KContact(_) => "kcontact",
        }
    }
}

impl From<RiemannianSpec> for ManifoldSpec {
    fn from(s: RiemannianSpec) -> Self {
        ManifoldSpec::Riemannian(s)
    }
}

impl From<KContactSpec> for ManifoldSpec {
    fn from(s: KContactSpec) -> Self {
        ManifoldSpec::KContact(s)
    }
}

/// `h(p)` as a symmetric positive definite matrix.
pub fn eval_riemannian_metric(spec: &RiemannianSpec, p: &[f64]) -> Result<DMatrix<f64>> {
    let m = eval_matrix(&spec.metric, spec.dim, p)?;
    require_positive_definite(m, p, &spec.thresholds)
}

/// `g_ij(p) = g(e_i, e_j)` as a symmetric positive definite matrix.
pub fn eval_horizontal_metric(spec: &KContactSpec, p: &[f64]) -> Result<DMatrix<f64>> {
    let m = eval_matrix(&spec.horizontal_metric, spec.rank(), p)?;
    require_positive_definite(m, p, &spec.thresholds)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Evaluation,
    Symmetry,
    PositiveDefinite,
    ContactNondegeneracy,
    Reeb,
    KContact,
}

impl Condition {
    pub fn name(self) -> &'static str {
        match self {
            Condition::Evaluation => "evaluation",
            Condition::Symmetry => "symmetry",
            Condition::PositiveDefinite => "positive_definite",
            Condition::ContactNondegeneracy => "contact_nondegeneracy",
            Condition::Reeb => "reeb",
            Condition::KContact => "k_contact",
        }
    }
}

/// Outcome of one structural condition.
///
/// `worst` is the largest residual for vanishing conditions, and the smallest
/// eigenvalue / `|det dθ|` for positivity and nondegeneracy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub condition: Condition,
    pub passed: bool,
    pub worst: f64,
    pub threshold: f64,
    pub witness: Option<Vec<f64>>,
    pub witness_index: Option<usize>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub kind: &'static str,
    pub samples: usize,
    pub seed: u64,
    pub conditions: Vec<ConditionReport>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.conditions.iter().all(|c| c.passed)
    }

    pub fn condition(&self, c: Condition) -> Option<&ConditionReport> {
        self.conditions.iter().find(|r| r.condition == c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Direction {
    /// Larger is worse; pass when `worst <= threshold`.
    Residual,
    /// Smaller is worse; pass when `worst > threshold`.
    Lower,
}

struct Tracker {
    condition: Condition,
    direction: Direction,
    threshold: f64,
    worst: Option<(f64, usize)>,
    detail: String,
}

impl Tracker {
    fn new(condition: Condition, direction: Direction, threshold: f64) -> Self {
        Tracker {
            condition,
            direction,
            threshold,
            worst: None,
            detail: String::new(),
        }
    }

    fn record(&mut self, value: f64, index: usize, detail: impl FnOnce() -> String) {
        let worse = match (self.worst, self.direction) {
            (None, _) => true,
            (Some((w, _)), Direction::Residual) => value > w || value.is_nan(),
            (Some((w, _)), Direction::Lower) => value < w || value.is_nan(),
        };
        if worse && !self.worst.is_some_and(|(w, _)| w.is_nan()) {
            self.worst = Some((value, index));
            self.detail = detail();
        }
    }

    fn finish(self, points: &[Vec<f64>]) -> ConditionReport {
        let (worst, idx) = match self.worst {
            Some((w, i)) => (w, Some(i)),
            None => (0.0, None),
        };
        let passed = match self.direction {
            Direction::Residual => worst <= self.threshold,
            Direction::Lower => idx.is_none() || worst > self.threshold,
        };
        ConditionReport {
            condition: self.condition,
            passed,
            worst,
            threshold: self.threshold,
            witness: if passed { None } else { idx.map(|i| points[i].clone()) },
            witness_index: if passed { None } else { idx },
            detail: self.detail,
        }
    }
}

/// Per-point residuals; `Err` carries the failing expression label.
struct PointEval {
    symmetry: f64,
    symmetry_at: (usize, usize),
    min_eigenvalue: f64,
    contact_det: Option<f64>,
    reeb: Option<(f64, usize)>,
    k_contact: Option<(f64, usize, usize)>,
}

fn evaluate_all(exprs: &[Expr], p: &[f64]) -> std::result::Result<Vec<f64>, String> {
    exprs
        .iter()
        .map(|e| e.eval(p).map_err(|err| format!("{e}: {err}")))
        .collect()
}

fn symmetry_residual(values: &[f64], k: usize) -> (f64, (usize, usize)) {
    let mut worst = (0.0, (0, 0));
    for i in 0..k {
        for j in (i + 1)..k {
            let r = (values[i * k + j] - values[j * k + i]).abs();
            if r > worst.0 {
                worst = (r, (i, j));
            }
        }
    }
    worst
}

fn matrix_from(values: &[f64], k: usize) -> DMatrix<f64> {
    DMatrix::from_row_slice(k, k, values)
}

fn max_abs_indexed(values: &[f64]) -> (f64, usize) {
    values
        .iter()
        .enumerate()
        .fold((0.0, 0), |acc, (i, v)| if v.abs() > acc.0 { (v.abs(), i) } else { acc })
}

/// Samples the structural conditions over the domain box.
///
/// Conditions: metric symmetry and positive definiteness; for K-contact specs
/// also contact nondegeneracy (`|det dθ| > threshold` on the horizontal
/// block), the Reeb condition `∂_n Γ_i = 0`, and the K-contact condition
/// `∂_n g_ij = 0`. Failures are report entries with the worst residual and a
/// witness point; point evaluations may run in parallel, the report is
/// assembled in sample order.
pub fn validate(spec: &ManifoldSpec, samples: usize, seed: u64) -> ValidationReport {
    let samples = samples.max(1);
    let points = spec.domain().sample_points(samples, seed);
    let (k, thresholds) = match spec {
        ManifoldSpec::Riemannian(s) => (s.dim(), *s.thresholds()),
        ManifoldSpec::KContact(s) => (s.rank(), *s.thresholds()),
    };
    let metric: &[Expr] = match spec {
        ManifoldSpec::Riemannian(s) => s.metric(),
        ManifoldSpec::KContact(s) => s.horizontal_metric(),
    };
    let kc = match spec {
        ManifoldSpec::KContact(s) => {
            let n = s.dim();
            let coeffs = s.contact_coeffs();
            // dθ_ij = ∂_i Γ_j − ∂_j Γ_i
            let mut dtheta = Vec::with_capacity(k * k);
            for i in 0..k {
                for j in 0..k {
                    dtheta.push(Expr::Binary(
                        crate::expr::BinOp::Sub,
                        Box::new(coeffs[j].differentiate(i + 1)),
                        Box::new(coeffs[i].differentiate(j + 1)),
                    ));
                }
            }
            let reeb: Vec<Expr> = coeffs.iter().map(|c| c.differentiate(n)).collect();
            let vertical: Vec<Expr> = metric.iter().map(|g| g.differentiate(n)).collect();
            Some((dtheta, reeb, vertical))
        }
        ManifoldSpec::Riemannian(_) => None,
    };

    let per_point: Vec<std::result::Result<PointEval, String>> = points
        .par_iter()
        .map(|p| {
            let values = evaluate_all(metric, p)?;
            let (symmetry, symmetry_at) = symmetry_residual(&values, k);
            let sym = matrix_from(&values, k);
            let sym = (&sym + sym.transpose()) * 0.5;
            let min_eigenvalue = linalg::min_eigenvalue(&sym);
            let mut out = PointEval {
                symmetry,
                symmetry_at,
                min_eigenvalue,
                contact_det: None,
                reeb: None,
                k_contact: None,
            };
            if let Some((dtheta, reeb, vertical)) = &kc {
                let dt = evaluate_all(dtheta, p)?;
                out.contact_det = Some(matrix_from(&dt, k).determinant().abs());
                let r = evaluate_all(reeb, p)?;
                out.reeb = Some(max_abs_indexed(&r));
                let v = evaluate_all(vertical, p)?;
                let (res, idx) = max_abs_indexed(&v);
                out.k_contact = Some((res, idx / k, idx % k));
            }
            Ok(out)
        })
        .collect();

    let mut evaluation = Tracker::new(Condition::Evaluation, Direction::Residual, 0.0);
    let mut symmetry = Tracker::new(Condition::Symmetry, Direction::Residual, thresholds.residual);
    let mut pd = Tracker::new(
        Condition::PositiveDefinite,
        Direction::Lower,
        thresholds.positive_definite,
    );
    let mut contact = Tracker::new(
        Condition::ContactNondegeneracy,
        Direction::Lower,
        thresholds.contact_determinant,
    );
    let mut reeb = Tracker::new(Condition::Reeb, Direction::Residual, thresholds.residual);
    let mut kcontact = Tracker::new(Condition::KContact, Direction::Residual, thresholds.residual);

    let mut failures = 0usize;
    for (idx, r) in per_point.iter().enumerate() {
        match r {
            Err(msg) => {
                failures += 1;
                if failures == 1 {
                    evaluation.record(1.0, idx, || msg.clone());
                }
            }
            Ok(pe) => {
                symmetry.record(pe.symmetry, idx, || {
                    format!("g[{}][{}] vs g[{}][{}]", pe.symmetry_at.0 + 1, pe.symmetry_at.1 + 1, pe.symmetry_at.1 + 1, pe.symmetry_at.0 + 1)
                });
                pd.record(pe.min_eigenvalue, idx, || "smallest metric eigenvalue".into());
                if let Some(det) = pe.contact_det {
                    contact.record(det, idx, || "|det dθ| on the horizontal block".into());
                }
                if let Some((res, i)) = pe.reeb {
                    reeb.record(res, idx, || format!("∂_n Γ_{}", i + 1));
                }
                if let Some((res, i, j)) = pe.k_contact {
                    kcontact.record(res, idx, || format!("∂_n g[{}][{}]", i + 1, j + 1));
                }
            }
        }
    }
    if failures > 0 {
        evaluation.detail = format!("{failures} of {samples} points failed; first: {}", evaluation.detail);
    }

    let mut conditions = vec![
        evaluation.finish(&points),
        symmetry.finish(&points),
        pd.finish(&points),
    ];
    if kc.is_some() {
        conditions.push(contact.finish(&points));
        conditions.push(reeb.finish(&points));
        conditions.push(kcontact.finish(&points));
    }
    conditions.sort_by_key(|c| c.condition);
    ValidationReport {
        kind: spec.kind_name(),
        samples,
        seed,
        conditions,
    }
}

/// Riemannian metric induced on the orbit space of the Reeb flow.
///
/// In adapted coordinates the projection drops `x_n`, so the quotient metric
/// is `h = g_ij dx^i dx^j` on the first `2m` coordinates. The spec must pass
/// the K-contact check; `x_n` is then substituted by 0.
pub fn quotient_metric(spec: &KContactSpec) -> Result<RiemannianSpec> {
    let n = spec.dim();
    let k = spec.rank();
    let symbolic_free = spec.horizontal_metric.iter().all(|g| !g.depends_on(n));
    if !symbolic_free {
        let report = validate(
            &ManifoldSpec::KContact(spec.clone()),
            DEFAULT_VALIDATION_SAMPLES,
            0,
        );
        let kc = report
            .condition(Condition::KContact)
            .expect("K-contact specs report the K-contact condition");
        if !kc.passed {
            return Err(Error::NotKContact {
                residual: kc.worst,
                witness: kc.witness.clone().unwrap_or_default(),
            });
        }
    }
    let zero = Expr::Const(0.0);
    let metric = spec
        .horizontal_metric
        .iter()
        .map(|g| g.substitute(n, &zero))
        .collect();
    Ok(RiemannianSpec::new(k, metric, spec.domain.truncate(k))?.with_thresholds(spec.thresholds))
}
