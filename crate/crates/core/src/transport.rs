//! Parallel transport along piecewise-smooth curves.
//!
//! The transport ODE `Ẋ^k + Γ^k_ij γ̇^i X^j = 0` is linear in `X`, so the
//! whole fiber is transported at once: the state is the `k × k` matrix whose
//! columns are the images of the initial basis vectors. Each segment is
//! integrated with classical fixed-step RK4.
//!
//! For the adapted connection `X` holds frame components relative to
//! `e_i = ∂_i − Γ_i ∂_n`, and the vertical velocity component never enters.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::connection::ChristoffelField;
use crate::error::{Error, Result};
use crate::expr::{parse_curve_component, BinOp, Expr};
use crate::linalg;
use crate::manifold::{DomainBox, KContactSpec, ManifoldSpec, RiemannianSpec};

/// Tolerance for matching consecutive segment endpoints.
pub const JOIN_TOLERANCE: f64 = 1e-12;
/// Smallest accepted `steps_per_unit`.
pub const MIN_STEPS_PER_UNIT: usize = 16;
/// Default `steps_per_unit` for transports.
pub const DEFAULT_STEPS_PER_UNIT: usize = 512;
const DRIFT_CHECKPOINTS: usize = 10;
const MIN_DETERMINANT: f64 = 1e-8;

/// One smooth piece `t ↦ x(t)` on `[a, b]`; coordinate functions use `x1` for `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    coords: Vec<Expr>,
    velocity: Vec<Expr>,
    t_range: (f64, f64),
}

impl Segment {
    pub fn new(coords: Vec<Expr>, t_range: (f64, f64)) -> Result<Self> {
        let (a, b) = t_range;
        if !(a.is_finite() && b.is_finite() && a <= b) {
            return Err(Error::InvalidCurve(format!("bad parameter interval [{a}, {b}]")));
        }
        if let Some(e) = coords.iter().find(|e| e.max_var() > 1) {
            return Err(Error::InvalidCurve(format!(
                "coordinate function {e} depends on something other than t"
            )));
        }
        let velocity = coords.iter().map(|e| e.differentiate(1)).collect();
        Ok(Segment {
            coords,
            velocity,
            t_range,
        })
    }

    /// Parses coordinate functions written in `t`.
    pub fn parse(coords: &[&str], t_range: (f64, f64)) -> Result<Self> {
        let coords = coords
            .iter()
            .map(|s| {
                parse_curve_component(s).map_err(|source| Error::Parse {
                    context: format!("curve coordinate `{s}`"),
                    source,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Segment::new(coords, t_range)
    }

    /// Straight segment from `p` to `q` on `[0, |q − p|]`, written as
    /// `p(1 − s) + q s` with `s = t / |q − p|` so both endpoints are exact.
    pub fn line(p: &[f64], q: &[f64]) -> Result<Self> {
        let length = p
            .iter()
            .zip(q)
            .map(|(a, b)| (b - a) * (b - a))
            .sum::<f64>()
            .sqrt();
        let s = || {
            Box::new(Expr::Binary(
                BinOp::Div,
                Box::new(Expr::Var(1)),
                Box::new(Expr::Const(length)),
            ))
        };
        let coords = p
            .iter()
            .zip(q)
            .map(|(&a, &b)| {
                if a == b || length == 0.0 {
                    Expr::Const(a)
                } else {
                    Expr::Binary(
                        BinOp::Add,
                        Box::new(Expr::Binary(
                            BinOp::Mul,
                            Box::new(Expr::Const(a)),
                            Box::new(Expr::Binary(
                                BinOp::Sub,
                                Box::new(Expr::Const(1.0)),
                                s(),
                            )),
                        )),
                        Box::new(Expr::Binary(BinOp::Mul, Box::new(Expr::Const(b)), s())),
                    )
                }
            })
            .collect();
        Segment::new(coords, (0.0, length))
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn t_range(&self) -> (f64, f64) {
        self.t_range
    }

    pub fn coords(&self) -> &[Expr] {
        &self.coords
    }

    pub fn point(&self, t: f64) -> Result<Vec<f64>> {
        eval_all(&self.coords, t)
    }

    pub fn velocity(&self, t: f64) -> Result<Vec<f64>> {
        eval_all(&self.velocity, t)
    }

    fn reversed(&self) -> Segment {
        let (a, b) = self.t_range;
        let flip = Expr::Binary(
            BinOp::Sub,
            Box::new(Expr::Const(a + b)),
            Box::new(Expr::Var(1)),
        );
        let coords = self.coords.iter().map(|e| e.substitute(1, &flip)).collect();
        Segment::new(coords, self.t_range).expect("reversal keeps a valid segment")
    }
}

fn eval_all(exprs: &[Expr], t: f64) -> Result<Vec<f64>> {
    exprs
        .iter()
        .map(|e| {
            e.eval(&[t]).map_err(|source| Error::Eval {
                point: vec![t],
                source,
            })
        })
        .collect()
}

/// Piecewise-smooth curve in a chart.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    dim: usize,
    segments: Vec<Segment>,
}

impl Curve {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        let Some(first) = segments.first() else {
            return Err(Error::InvalidCurve("a curve needs at least one segment".into()));
        };
        let dim = first.dim();
        if dim == 0 {
            return Err(Error::InvalidCurve("curve has no coordinates".into()));
        }
        for (idx, pair) in segments.windows(2).enumerate() {
            if pair[1].dim() != dim {
                return Err(Error::InvalidCurve(format!(
                    "segment {} has {} coordinates, expected {dim}",
                    idx + 1,
                    pair[1].dim()
                )));
            }
            let end = pair[0].point(pair[0].t_range.1)?;
            let start = pair[1].point(pair[1].t_range.0)?;
            let gap = end
                .iter()
                .zip(&start)
                .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
            if gap > JOIN_TOLERANCE {
                return Err(Error::InvalidCurve(format!(
                    "segments {idx} and {} do not meet (gap {gap:e})",
                    idx + 1
                )));
            }
        }
        Ok(Curve { dim, segments })
    }

    /// Piecewise-linear curve through `points`, zero-length edges skipped.
    pub fn polyline(points: &[Vec<f64>]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidCurve("polyline needs at least one point".into()));
        }
        let mut segments = Vec::new();
        for pair in points.windows(2) {
            if pair[0] != pair[1] {
                segments.push(Segment::line(&pair[0], &pair[1])?);
            }
        }
        if segments.is_empty() {
            segments.push(Segment::line(&points[0], &points[0])?);
        }
        Curve::new(segments)
    }

    /// Latitude circle `x1 = phi0`, `x2 = t` for `t ∈ [0, 2π]` in polar/azimuth coordinates.
    pub fn latitude(phi0: f64) -> Curve {
        Curve::latitude_turns(phi0, 1)
    }

    /// Latitude circle traversed `turns` times.
    pub fn latitude_turns(phi0: f64, turns: u32) -> Curve {
        let seg = Segment::new(
            vec![Expr::Const(phi0), Expr::Var(1)],
            (0.0, 2.0 * std::f64::consts::PI * turns as f64),
        )
        .expect("static segment");
        Curve::new(vec![seg]).expect("single segment")
    }

    /// Loop based at `center`: along coordinate `i` to the left edge, once around the
    /// `w × h` rectangle centred at `center` in the `(i, j)` plane, and back.
    /// Indices are 1-based.
    pub fn rectangle(i: usize, j: usize, center: &[f64], w: f64, h: f64) -> Result<Curve> {
        let n = center.len();
        if i == 0 || j == 0 || i > n || j > n || i == j {
            return Err(Error::InvalidCurve(format!(
                "rectangle plane ({i}, {j}) invalid in dimension {n}"
            )));
        }
        if !(w > 0.0 && h > 0.0) {
            return Err(Error::InvalidCurve("rectangle sides must be positive".into()));
        }
        let at = |di: f64, dj: f64| {
            let mut p = center.to_vec();
            p[i - 1] += di;
            p[j - 1] += dj;
            p
        };
        let (hw, hh) = (w / 2.0, h / 2.0);
        Curve::polyline(&[
            center.to_vec(),
            at(-hw, 0.0),
            at(-hw, -hh),
            at(hw, -hh),
            at(hw, hh),
            at(-hw, hh),
            at(-hw, 0.0),
            center.to_vec(),
        ])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn start(&self) -> Vec<f64> {
        let s = &self.segments[0];
        s.point(s.t_range.0).unwrap_or_default()
    }

    pub fn end(&self) -> Vec<f64> {
        let s = self.segments.last().expect("nonempty");
        s.point(s.t_range.1).unwrap_or_default()
    }

    /// Max coordinate mismatch between start and end.
    pub fn closure_gap(&self) -> f64 {
        self.start()
            .iter()
            .zip(self.end())
            .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()))
    }

    pub fn is_closed(&self) -> bool {
        self.closure_gap() <= JOIN_TOLERANCE
    }

    pub fn reversed(&self) -> Curve {
        Curve {
            dim: self.dim,
            segments: self.segments.iter().rev().map(Segment::reversed).collect(),
        }
    }

    /// `self` followed by `other`.
    pub fn concat(&self, other: &Curve) -> Result<Curve> {
        let mut segments = self.segments.clone();
        segments.extend(other.segments.iter().cloned());
        Curve::new(segments)
    }

    /// Curve with coordinate `index` (1-based) replaced by `replacement` on each segment.
    pub fn with_coordinate(&self, index: usize, replacement: &[Expr]) -> Result<Curve> {
        if replacement.len() != self.segments.len() {
            return Err(Error::InvalidCurve("one replacement per segment required".into()));
        }
        let segments = self
            .segments
            .iter()
            .zip(replacement)
            .map(|(s, r)| {
                let mut coords = s.coords.clone();
                coords[index - 1] = r.clone();
                Segment::new(coords, s.t_range)
            })
            .collect::<Result<Vec<_>>>()?;
        Curve::new(segments)
    }

    /// Curve with one more coordinate held at `value`.
    pub fn append_constant(&self, value: f64) -> Curve {
        let segments = self
            .segments
            .iter()
            .map(|s| {
                let mut coords = s.coords.clone();
                coords.push(Expr::Const(value));
                Segment::new(coords, s.t_range).expect("constant coordinate keeps the segment valid")
            })
            .collect();
        Curve {
            dim: self.dim + 1,
            segments,
        }
    }

    /// Sum of parameter lengths.
    pub fn parameter_length(&self) -> f64 {
        self.segments.iter().map(|s| s.t_range.1 - s.t_range.0).sum()
    }
}

/// Lift of a quotient curve with constant vertical coordinate `x_n = vertical_value`.
pub fn lift_loop(spec: &KContactSpec, mu: &Curve, vertical_value: f64) -> Result<Curve> {
    if mu.dim() != spec.rank() {
        return Err(Error::InvalidCurve(format!(
            "quotient curve has {} coordinates, expected {}",
            mu.dim(),
            spec.rank()
        )));
    }
    Ok(mu.append_constant(vertical_value))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransportResult {
    /// Columns are the transported basis vectors (coordinate or frame components).
    #[serde(serialize_with = "crate::report::serialize_matrix")]
    pub matrix: DMatrix<f64>,
    /// `max |Mᵀ G(γ(t)) M − G(γ(a))|` over checkpoints.
    pub metric_drift: f64,
    pub steps_used: usize,
}

fn steps_for(length: f64, steps_per_unit: usize) -> usize {
    if length <= 0.0 {
        0
    } else {
        (length * steps_per_unit as f64).ceil().max(1.0) as usize
    }
}

fn check_inside(domain: &DomainBox, point: &[f64], t: f64) -> Result<()> {
    if domain.contains(point) {
        Ok(())
    } else {
        Err(Error::CurveExitsDomain {
            t,
            point: point.to_vec(),
        })
    }
}

fn integrate(
    field: &ChristoffelField,
    domain: &DomainBox,
    curve: &Curve,
    steps_per_unit: usize,
) -> Result<TransportResult> {
    if steps_per_unit < MIN_STEPS_PER_UNIT {
        return Err(Error::Config(format!(
            "steps_per_unit must be at least {MIN_STEPS_PER_UNIT}, got {steps_per_unit}"
        )));
    }
    if curve.dim() != domain.dim() {
        return Err(Error::InvalidCurve(format!(
            "curve has {} coordinates, chart has {}",
            curve.dim(),
            domain.dim()
        )));
    }
    let k = field.dim();
    let mut x = DMatrix::<f64>::identity(k, k);
    let start = curve.start();
    let t0 = curve.segments[0].t_range.0;
    check_inside(domain, &start, t0)?;
    let g0 = field.metric_at(&start)?;
    let mut drift = 0.0f64;
    let mut steps_used = 0;

    // dX/dt = −A(t) X with A^k_j = Γ^k_ij γ̇^i
    let rhs = |seg: &Segment, t: f64, x: &DMatrix<f64>| -> Result<DMatrix<f64>> {
        let p = seg.point(t)?;
        check_inside(domain, &p, t)?;
        let v = seg.velocity(t)?;
        let (_, coeffs) = field.evaluate(&p)?;
        Ok(-(coeffs.contract_direction(&v) * x))
    };

    for seg in &curve.segments {
        let (a, b) = seg.t_range;
        let n = steps_for(b - a, steps_per_unit);
        if n == 0 {
            continue;
        }
        let h = (b - a) / n as f64;
        let checkpoints: Vec<usize> = (1..=DRIFT_CHECKPOINTS)
            .map(|c| (c * n).div_ceil(DRIFT_CHECKPOINTS))
            .collect();
        for step in 0..n {
            let t = a + h * step as f64;
            let k1 = rhs(seg, t, &x)?;
            let k2 = rhs(seg, t + 0.5 * h, &(&x + &k1 * (0.5 * h)))?;
            let k3 = rhs(seg, t + 0.5 * h, &(&x + &k2 * (0.5 * h)))?;
            let t_next = if step + 1 == n { b } else { t + h };
            let k4 = rhs(seg, t_next, &(&x + &k3 * h))?;
            x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
            if checkpoints.contains(&(step + 1)) {
                let p = seg.point(t_next)?;
                let g = field.metric_at(&p)?;
                let gram = x.transpose() * g * &x;
                drift = drift.max(linalg::max_abs_diff(&gram, &g0));
            }
        }
        steps_used += n;
    }

    let det = x.determinant();
    if !(det.abs() > MIN_DETERMINANT) {
        return Err(Error::DegenerateTransport { det });
    }
    Ok(TransportResult {
        matrix: x,
        metric_drift: drift,
        steps_used,
    })
}

/// Levi-Civita transport in coordinate components.
pub fn transport_riemannian(
    spec: &RiemannianSpec,
    curve: &Curve,
    steps_per_unit: usize,
) -> Result<TransportResult> {
    integrate(
        &ChristoffelField::levi_civita(spec),
        spec.domain(),
        curve,
        steps_per_unit,
    )
}

/// Adapted-connection transport of the contact distribution in frame components.
pub fn transport_adapted(
    spec: &KContactSpec,
    curve: &Curve,
    steps_per_unit: usize,
) -> Result<TransportResult> {
    integrate(
        &ChristoffelField::adapted(spec),
        spec.domain(),
        curve,
        steps_per_unit,
    )
}

/// Transport with the connection natural to the spec kind.
pub fn transport(spec: &ManifoldSpec, curve: &Curve, steps_per_unit: usize) -> Result<TransportResult> {
    match spec {
        ManifoldSpec::Riemannian(s) => transport_riemannian(s, curve, steps_per_unit),
        ManifoldSpec::KContact(s) => transport_adapted(s, curve, steps_per_unit),
    }
}

/// A posteriori error estimate `max |M(steps) − M(2·steps)|`.
pub fn richardson_check(spec: &ManifoldSpec, curve: &Curve, steps_per_unit: usize) -> Result<f64> {
    let coarse = transport(spec, curve, steps_per_unit)?;
    let fine = transport(spec, curve, 2 * steps_per_unit)?;
    Ok(linalg::max_abs_diff(&coarse.matrix, &fine.matrix))
}

/// Nearest `G`-isometry to `matrix` (polar projection in a `G`-orthonormal frame).
///
/// Not applied by any transport routine; drift is reported instead.
pub fn project_to_isometry(matrix: &DMatrix<f64>, fiber_metric: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let l = linalg::cholesky_lower(fiber_metric)?;
    let l_inv = l.clone().try_inverse()?;
    let q = l.transpose() * matrix * l_inv.transpose();
    let polar = linalg::polar_factor(&q)?;
    Some(l_inv.transpose() * polar * l.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use std::f64::consts::PI;

    #[test]
    fn polyline_endpoints_are_exact() {
        let c = Curve::polyline(&[vec![0.1, 0.2], vec![0.7, 0.2], vec![0.7, -0.3], vec![0.1, 0.2]])
            .unwrap();
        assert_eq!(c.segments().len(), 3);
        assert_eq!(c.end(), vec![0.1, 0.2]);
        assert_eq!(c.closure_gap(), 0.0);
    }

    #[test]
    fn mismatched_segments_are_rejected() {
        let a = Segment::parse(&["t", "0"], (0.0, 1.0)).unwrap();
        let b = Segment::parse(&["1.5", "t"], (0.0, 1.0)).unwrap();
        assert!(matches!(Curve::new(vec![a, b]), Err(Error::InvalidCurve(_))));
    }

    #[test]
    fn euclidean_loop_is_identity() {
        let spec = catalog::euclidean_spec(2);
        let c = Curve::rectangle(1, 2, &[0.0, 0.0], 0.8, 0.4).unwrap();
        let r = transport_riemannian(&spec, &c, 64).unwrap();
        assert_eq!(r.matrix, DMatrix::identity(2, 2));
        assert_eq!(r.metric_drift, 0.0);
    }

    #[test]
    fn zero_length_curve_is_identity() {
        let spec: ManifoldSpec = catalog::round_sphere_spec().into();
        let c = Curve::polyline(&[vec![1.0, 0.5]]).unwrap();
        let r = transport(&spec, &c, 64).unwrap();
        assert_eq!(r.matrix, DMatrix::identity(2, 2));
        assert_eq!(r.steps_used, 0);
        assert_eq!(richardson_check(&spec, &c, 64).unwrap(), 0.0);
    }

    #[test]
    fn leaving_the_box_is_an_error() {
        let spec = catalog::round_sphere_spec();
        let c = Curve::polyline(&[vec![0.5, 0.0], vec![0.05, 0.0]]).unwrap();
        assert!(matches!(
            transport_riemannian(&spec, &c, 64),
            Err(Error::CurveExitsDomain { .. })
        ));
    }

    #[test]
    fn too_few_steps_is_rejected() {
        let spec = catalog::round_sphere_spec();
        assert!(matches!(
            transport_riemannian(&spec, &Curve::latitude(1.0), 8),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn pure_vertical_segment_is_identity() {
        let spec = catalog::sasakian_sphere_spec();
        let seg = Segment::parse(&["1.1", "0.3", "t"], (0.0, 4.0)).unwrap();
        let r = transport_adapted(&spec, &Curve::new(vec![seg]).unwrap(), 64).unwrap();
        assert_eq!(r.matrix, DMatrix::identity(2, 2));
    }

    #[test]
    fn lift_projects_back() {
        let spec = catalog::sasakian_sphere_spec();
        let mu = Curve::latitude(PI / 3.0);
        let lift = lift_loop(&spec, &mu, 0.0).unwrap();
        assert_eq!(lift.dim(), 3);
        assert_eq!(lift.closure_gap(), mu.closure_gap());
        for t in [0.0, 1.0, 2.5, 2.0 * PI] {
            let p = lift.segments()[0].point(t).unwrap();
            assert_eq!(&p[..2], &mu.segments()[0].point(t).unwrap()[..]);
            assert_eq!(p[2], 0.0);
        }
        assert!(lift_loop(&spec, &lift, 0.0).is_err());
    }

    #[test]
    fn isometry_projection_fixes_isometries() {
        let g = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let spec = catalog::round_sphere_spec();
        let r = transport_riemannian(&spec, &Curve::latitude(1.0), 64).unwrap();
        let g_base = crate::manifold::eval_riemannian_metric(&spec, &[1.0, 0.0]).unwrap();
        let projected = project_to_isometry(&r.matrix, &g_base).unwrap();
        let gram = projected.transpose() * &g_base * &projected;
        assert!(linalg::max_abs_diff(&gram, &g_base) < 1e-13);
        assert!(linalg::max_abs_diff(&projected, &r.matrix) < 1e-6);
        let id = DMatrix::identity(2, 2);
        assert!(linalg::max_abs_diff(&project_to_isometry(&id, &g).unwrap(), &id) < 1e-14);
    }
}
