//! Sampled holonomy groups and their invariant decompositions.
//!
//! Holonomy is probed with rectangle loops in coordinate planes, each joined
//! to the base point by out-and-back connectors along coordinate lines. The
//! sampled matrices `M` live in coordinate (or frame) components and preserve
//! the fiber metric `G`. With `G = L Lᵀ` they are conjugated to orthogonal
//! matrices `Q = Lᵀ M L⁻ᵀ`, where the linear algebra happens.
//!
//! An orthogonal invariant splitting exists exactly when a non-scalar
//! symmetric matrix commutes with every sample, so reducibility is decided
//! through the symmetric part of the commutant. A finite sample only ever
//! shows "no splitting found", never irreducibility of the full group.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::manifold::ManifoldSpec;
use crate::transport::{transport, Curve};

/// Matrices with larger metric drift are flagged in a sample.
pub const DRIFT_FLAG: f64 = 1e-6;
/// Default relative singular-value threshold.
pub const DEFAULT_SVD_TOL: f64 = 1e-6;
/// Samples with an eigenvalue this close to −1 are excluded from logarithms.
pub const LOG_EXCLUSION_RADIUS: f64 = 0.1;
const MAX_BRACKET_ROUNDS: usize = 3;

/// One rectangle loop; indices 1-based, offsets relative to the base point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RectangleLoop {
    pub plane: (usize, usize),
    pub corner_offset: Vec<f64>,
    pub width: f64,
    pub height: f64,
    /// Path in the horizontal (quotient) coordinates.
    #[serde(skip)]
    pub path: Curve,
}

/// Loops at a common base point.
///
/// For K-contact specs the rectangles live in the first `2m` coordinates and
/// are lifted with the constant vertical coordinate `vertical_value`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoopFamily {
    pub base: Vec<f64>,
    pub horizontal_dim: usize,
    pub vertical_value: Option<f64>,
    pub scale: f64,
    pub seed: u64,
    pub loops: Vec<RectangleLoop>,
    #[serde(skip)]
    pub user_curves: Vec<Curve>,
}

impl LoopFamily {
    pub fn len(&self) -> usize {
        self.loops.len() + self.user_curves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Base point with the vertical coordinate dropped.
    pub fn projected_base(&self) -> Vec<f64> {
        self.base[..self.horizontal_dim].to_vec()
    }

    /// Curves in the spec's chart, rectangles first, then user curves.
    pub fn curves(&self) -> Vec<Curve> {
        self.loops
            .iter()
            .map(|l| match self.vertical_value {
                Some(v) => l.path.append_constant(v),
                None => l.path.clone(),
            })
            .chain(self.user_curves.iter().cloned())
            .collect()
    }

    /// Same rectangles lifted at another vertical value.
    pub fn with_vertical(&self, value: f64) -> LoopFamily {
        let mut out = self.clone();
        if out.vertical_value.is_some() {
            out.vertical_value = Some(value);
            if let Some(last) = out.base.last_mut() {
                *last = value;
            }
        }
        out
    }

    /// The rectangles as loops on the quotient chart.
    pub fn projected(&self) -> LoopFamily {
        LoopFamily {
            base: self.projected_base(),
            vertical_value: None,
            user_curves: Vec::new(),
            ..self.clone()
        }
    }

    pub fn push_curve(&mut self, curve: Curve) {
        self.user_curves.push(curve);
    }
}

fn coordinate_planes(k: usize) -> Vec<(usize, usize)> {
    let mut planes = Vec::new();
    for a in 1..=k {
        for b in (a + 1)..=k {
            planes.push((a, b));
        }
    }
    planes
}

/// Deterministic family of `count` rectangle loops at `base`.
///
/// Loop `i` lies in coordinate plane `i mod P` (planes in lexicographic
/// order), with corner offset uniform in `[−scale, scale]` per coordinate and
/// sides in `(0, scale]`.
pub fn generate_loops(
    spec: &ManifoldSpec,
    base: &[f64],
    count: usize,
    scale: f64,
    seed: u64,
) -> Result<LoopFamily> {
    if base.len() != spec.dim() {
        return Err(Error::Config(format!(
            "base point has {} coordinates, chart has {}",
            base.len(),
            spec.dim()
        )));
    }
    if !spec.domain().contains(base) {
        return Err(Error::Config(format!("base point {base:?} is not inside the domain box")));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::Config(format!("loop scale must be positive, got {scale}")));
    }
    let k = spec.fiber_dim();
    let horizontal_box = spec.domain().truncate(k);
    let vertical_value = match spec {
        ManifoldSpec::KContact(_) => Some(base[k]),
        ManifoldSpec::Riemannian(_) => None,
    };
    let planes = coordinate_planes(k);
    if count > 0 && planes.is_empty() {
        return Err(Error::Config("no coordinate planes in a 1-dimensional fiber".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let origin = base[..k].to_vec();
    let mut loops = Vec::with_capacity(count);
    for idx in 0..count {
        let plane = planes[idx % planes.len()];
        let corner_offset: Vec<f64> = (0..k).map(|_| rng.random_range(-scale..=scale)).collect();
        let width = scale * (1.0 - rng.random_range(0.0..1.0));
        let height = scale * (1.0 - rng.random_range(0.0..1.0));

        let mut out_path = vec![origin.clone()];
        let mut p = origin.clone();
        for (c, off) in corner_offset.iter().enumerate() {
            p[c] += off;
            out_path.push(p.clone());
        }
        let corner = p;
        let at = |da: f64, db: f64| {
            let mut q = corner.clone();
            q[plane.0 - 1] += da;
            q[plane.1 - 1] += db;
            q
        };
        let mut vertices = out_path.clone();
        vertices.extend([at(width, 0.0), at(width, height), at(0.0, height), corner.clone()]);
        vertices.extend(out_path.iter().rev().skip(1).cloned());
        if let Some(v) = vertices.iter().find(|v| !horizontal_box.contains(v)) {
            return Err(Error::ScaleTooLarge {
                loop_index: idx,
                plane,
                vertex: v.clone(),
            });
        }
        let path = Curve::polyline(&vertices)?;
        loops.push(RectangleLoop {
            plane,
            corner_offset,
            width,
            height,
            path,
        });
    }
    Ok(LoopFamily {
        base: base.to_vec(),
        horizontal_dim: k,
        vertical_value,
        scale,
        seed,
        loops,
        user_curves: Vec::new(),
    })
}

/// Sampled holonomy matrices at a base point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolonomySample {
    pub base: Vec<f64>,
    #[serde(serialize_with = "crate::report::serialize_matrix")]
    pub fiber_metric: DMatrix<f64>,
    /// Lower-triangular `L` with `L Lᵀ = G`.
    #[serde(serialize_with = "crate::report::serialize_matrix")]
    pub factor: DMatrix<f64>,
    #[serde(serialize_with = "crate::report::serialize_matrices")]
    pub matrices: Vec<DMatrix<f64>>,
    pub drifts: Vec<f64>,
    /// Indices of matrices whose drift exceeds [`DRIFT_FLAG`].
    pub flagged: Vec<usize>,
}

impl HolonomySample {
    /// Wraps externally produced matrices (in components where `fiber_metric` is the metric).
    pub fn from_matrices(
        base: Vec<f64>,
        fiber_metric: DMatrix<f64>,
        matrices: Vec<DMatrix<f64>>,
    ) -> Result<Self> {
        let k = fiber_metric.nrows();
        if matrices.iter().any(|m| m.nrows() != k || m.ncols() != k) {
            return Err(Error::Config(format!("every sample matrix must be {k}x{k}")));
        }
        let factor = linalg::cholesky_lower(&fiber_metric).ok_or(Error::NotPositiveDefinite {
            min_eigenvalue: linalg::min_eigenvalue(&fiber_metric),
            point: base.clone(),
        })?;
        let drifts: Vec<f64> = matrices
            .iter()
            .map(|m| linalg::max_abs_diff(&(m.transpose() * &fiber_metric * m), &fiber_metric))
            .collect();
        let flagged = flag(&drifts);
        Ok(HolonomySample {
            base,
            fiber_metric,
            factor,
            matrices,
            drifts,
            flagged,
        })
    }

    pub fn dim(&self) -> usize {
        self.fiber_metric.nrows()
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    /// `Q = Lᵀ M L⁻ᵀ` for every sample.
    pub fn orthogonalized(&self) -> Vec<DMatrix<f64>> {
        let l_inv_t = self.factor_inverse().transpose();
        let l_t = self.factor.transpose();
        self.matrices.iter().map(|m| &l_t * m * &l_inv_t).collect()
    }

    fn factor_inverse(&self) -> DMatrix<f64> {
        self.factor
            .clone()
            .try_inverse()
            .expect("Cholesky factor of a positive definite metric is invertible")
    }

    /// Maps a matrix in the orthonormal frame back to frame components: `L⁻ᵀ X Lᵀ`.
    pub fn to_frame_components(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.factor_inverse().transpose() * x * self.factor.transpose()
    }

    /// `max_i |M_iᵀ G M_i − G|`.
    pub fn max_isometry_defect(&self) -> f64 {
        self.drifts.iter().copied().fold(0.0, f64::max)
    }

    /// `max_i |Q_iᵀ Q_i − I|`.
    pub fn max_orthogonality_defect(&self) -> f64 {
        let k = self.dim();
        let id = DMatrix::identity(k, k);
        self.orthogonalized()
            .iter()
            .map(|q| linalg::max_abs_diff(&(q.transpose() * q), &id))
            .fold(0.0, f64::max)
    }
}

fn flag(drifts: &[f64]) -> Vec<usize> {
    drifts
        .iter()
        .enumerate()
        .filter(|(_, d)| **d > DRIFT_FLAG)
        .map(|(i, _)| i)
        .collect()
}

/// Transports every loop of the family.
///
/// The per-matrix drift is the isometry defect `|MᵀGM − G|` at the base
/// point. Loops run in parallel; results keep loop order.
pub fn sample_holonomy(spec: &ManifoldSpec, family: &LoopFamily, steps: usize) -> Result<HolonomySample> {
    if family.is_empty() {
        return Err(Error::EmptySample);
    }
    let curves = family.curves();
    let results: Vec<Result<DMatrix<f64>>> = curves
        .par_iter()
        .map(|c| transport(spec, c, steps).map(|r| r.matrix))
        .collect();
    let matrices = results.into_iter().collect::<Result<Vec<_>>>()?;
    let g = spec.fiber_metric(&family.base)?;
    HolonomySample::from_matrices(family.base.clone(), g, matrices)
}

/// Estimated holonomy algebra as a Frobenius-orthonormal basis of skew matrices
/// in the orthonormal frame.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolonomyAlgebra {
    #[serde(serialize_with = "crate::report::serialize_matrices")]
    pub basis: Vec<DMatrix<f64>>,
    /// Samples skipped because an eigenvalue lies near −1.
    pub excluded: Vec<usize>,
    pub bracket_rounds: usize,
}

impl HolonomyAlgebra {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }
}

fn near_minus_one(q: &DMatrix<f64>) -> bool {
    q.complex_eigenvalues()
        .iter()
        .any(|z| ((z.re + 1.0).powi(2) + z.im.powi(2)).sqrt() < LOG_EXCLUSION_RADIUS)
}

/// Principal logarithms of the samples, closed under brackets.
pub fn holonomy_algebra(sample: &HolonomySample, svd_tol: f64) -> Result<HolonomyAlgebra> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let k = sample.dim();
    let mut excluded = Vec::new();
    let mut logs = Vec::new();
    for (idx, q) in sample.orthogonalized().iter().enumerate() {
        if near_minus_one(q) {
            excluded.push(idx);
            continue;
        }
        match linalg::principal_log(q) {
            Some(log) => logs.push(linalg::vectorize(&((&log - log.transpose()) * 0.5))),
            None => excluded.push(idx),
        }
    }
    if logs.is_empty() {
        return Err(Error::EmptyAfterExclusion {
            excluded: excluded.len(),
        });
    }
    let mut basis = linalg::span_basis(&logs, svd_tol);
    let mut rounds = 0;
    while rounds < MAX_BRACKET_ROUNDS && basis.len() > 1 {
        rounds += 1;
        let mats: Vec<DMatrix<f64>> = basis.iter().map(|v| linalg::unvectorize(v, k)).collect();
        let mut generators = basis.clone();
        for a in 0..mats.len() {
            for b in (a + 1)..mats.len() {
                generators.push(linalg::vectorize(&linalg::bracket(&mats[a], &mats[b])));
            }
        }
        let next = linalg::span_basis(&generators, svd_tol);
        let grew = next.len() > basis.len();
        basis = next;
        if !grew {
            break;
        }
    }
    Ok(HolonomyAlgebra {
        basis: basis.iter().map(|v| linalg::unvectorize(v, k)).collect(),
        excluded,
        bracket_rounds: rounds,
    })
}

/// Basis of matrices commuting with a set of square matrices (null space of the stacked
/// system `X Q − Q X = 0`).
pub fn commutant_of(matrices: &[DMatrix<f64>], svd_tol: f64) -> Vec<DMatrix<f64>> {
    let Some(first) = matrices.first() else {
        return Vec::new();
    };
    let k = first.nrows();
    let id = DMatrix::<f64>::identity(k, k);
    let kk = k * k;
    let mut system = DMatrix::zeros(kk * matrices.len(), kk);
    for (idx, q) in matrices.iter().enumerate() {
        // vec(XQ) = (Qᵀ ⊗ I) vec X, vec(QX) = (I ⊗ Q) vec X
        let block = q.transpose().kronecker(&id) - id.kronecker(q);
        system.view_mut((idx * kk, 0), (kk, kk)).copy_from(&block);
    }
    linalg::null_space(&system, svd_tol)
        .iter()
        .map(|v| linalg::unvectorize(v, k))
        .collect()
}

/// Commutant of the orthogonalized samples.
pub fn commutant(sample: &HolonomySample, svd_tol: f64) -> Vec<DMatrix<f64>> {
    commutant_of(&sample.orthogonalized(), svd_tol)
}

/// Orthogonal invariant splitting of the fiber.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantDecomposition {
    pub r: usize,
    pub dims: Vec<usize>,
    /// Orthogonal projectors in the orthonormal frame.
    #[serde(serialize_with = "crate::report::serialize_matrices")]
    pub projectors: Vec<DMatrix<f64>>,
    /// The same projectors in frame (coordinate) components, `L⁻ᵀ P Lᵀ`.
    #[serde(serialize_with = "crate::report::serialize_matrices")]
    pub frame_projectors: Vec<DMatrix<f64>>,
    pub commutant_dim: usize,
    pub symmetric_commutant_dim: usize,
    /// Sorted spectrum of the random symmetric commutant element (empty when `r = 1`).
    pub spectrum: Vec<f64>,
    pub seed: u64,
    pub svd_tol: f64,
}

/// Residuals of the projector identities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecompositionResiduals {
    pub resolution_of_identity: f64,
    pub orthogonality: f64,
    pub idempotence: f64,
    pub symmetry: f64,
    /// `max |Q P − P Q|` over samples and projectors.
    pub commutation: f64,
    /// `max |M Π − Π M|` in frame components.
    pub frame_commutation: f64,
}

impl InvariantDecomposition {
    pub fn check(&self, sample: &HolonomySample) -> DecompositionResiduals {
        let k = sample.dim();
        let mut sum = DMatrix::zeros(k, k);
        let mut orthogonality = 0.0f64;
        let mut idempotence = 0.0f64;
        let mut symmetry = 0.0f64;
        for (s, p) in self.projectors.iter().enumerate() {
            sum += p;
            idempotence = idempotence.max(linalg::max_abs_diff(&(p * p), p));
            symmetry = symmetry.max(linalg::max_abs_diff(&p.transpose(), p));
            for q in self.projectors.iter().skip(s + 1) {
                orthogonality = orthogonality.max(linalg::max_abs(&(p * q)));
            }
        }
        let resolution = linalg::max_abs_diff(&sum, &DMatrix::identity(k, k));
        let commutation = sample
            .orthogonalized()
            .iter()
            .flat_map(|q| self.projectors.iter().map(move |p| linalg::max_abs(&linalg::bracket(q, p))))
            .fold(0.0, f64::max);
        let frame_commutation = sample
            .matrices
            .iter()
            .flat_map(|m| {
                self.frame_projectors
                    .iter()
                    .map(move |p| linalg::max_abs(&linalg::bracket(m, p)))
            })
            .fold(0.0, f64::max);
        DecompositionResiduals {
            resolution_of_identity: resolution,
            orthogonality,
            idempotence,
            symmetry,
            commutation,
            frame_commutation,
        }
    }
}

/// Splits the fiber by clustering the spectrum of a random symmetric commutant element.
///
/// Eigenvalues are sorted; a gap larger than `svd_tol · spread` starts a new
/// cluster. A gap within a factor 10 of that threshold is an error.
pub fn invariant_decomposition(
    sample: &HolonomySample,
    svd_tol: f64,
    seed: u64,
) -> Result<InvariantDecomposition> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let k = sample.dim();
    let comm = commutant(sample, svd_tol);
    let symmetrized: Vec<_> = comm
        .iter()
        .map(|x| linalg::vectorize(&((x + x.transpose()) * 0.5)))
        .collect();
    let sym_basis = linalg::span_basis(&symmetrized, svd_tol);
    let identity = DMatrix::<f64>::identity(k, k);

    let trivial = |spectrum: Vec<f64>| InvariantDecomposition {
        r: 1,
        dims: vec![k],
        projectors: vec![identity.clone()],
        frame_projectors: vec![identity.clone()],
        commutant_dim: comm.len(),
        symmetric_commutant_dim: sym_basis.len(),
        spectrum,
        seed,
        svd_tol,
    };
    if sym_basis.len() <= 1 {
        return Ok(trivial(Vec::new()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = DMatrix::zeros(k, k);
    for b in &sym_basis {
        let c: f64 = rng.random_range(-1.0..=1.0);
        s += linalg::unvectorize(b, k) * c;
    }
    let s = (&s + s.transpose()) * 0.5;
    let (values, vectors) = linalg::sorted_symmetric_eigen(&s);
    let spread = values[k - 1] - values[0];
    let threshold = svd_tol * spread;
    let mut clusters: Vec<Vec<usize>> = vec![vec![0]];
    for i in 1..k {
        let gap = values[i] - values[i - 1];
        if gap > threshold / 10.0 && gap < threshold * 10.0 {
            return Err(Error::ClusteringAmbiguity { gap, threshold });
        }
        if gap >= threshold * 10.0 {
            clusters.push(vec![i]);
        } else {
            clusters.last_mut().expect("nonempty").push(i);
        }
    }
    if clusters.len() == 1 {
        return Ok(trivial(values));
    }
    let projectors: Vec<DMatrix<f64>> = clusters
        .iter()
        .map(|cluster| {
            let mut p = DMatrix::zeros(k, k);
            for &i in cluster {
                let v = vectors.column(i);
                p += v * v.transpose();
            }
            p
        })
        .collect();
    let frame_projectors = projectors.iter().map(|p| sample.to_frame_components(p)).collect();
    Ok(InvariantDecomposition {
        r: clusters.len(),
        dims: clusters.iter().map(Vec::len).collect(),
        projectors,
        frame_projectors,
        commutant_dim: comm.len(),
        symmetric_commutant_dim: sym_basis.len(),
        spectrum: values,
        seed,
        svd_tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    fn rotation(angle: f64) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[angle.cos(), -angle.sin(), angle.sin(), angle.cos()])
    }

    fn block(a: f64, b: f64) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(4, 4);
        m.view_mut((0, 0), (2, 2)).copy_from(&rotation(a));
        m.view_mut((2, 2), (2, 2)).copy_from(&rotation(b));
        m
    }

    fn euclidean_sample(matrices: Vec<DMatrix<f64>>) -> HolonomySample {
        let k = matrices[0].nrows();
        HolonomySample::from_matrices(vec![0.0; k], DMatrix::identity(k, k), matrices).unwrap()
    }

    #[test]
    fn family_is_deterministic_and_closed() {
        let e = catalog::entry("round_sphere").unwrap();
        let a = generate_loops(&e.spec, &e.base_point, 10, 0.4, 1).unwrap();
        let b = generate_loops(&e.spec, &e.base_point, 10, 0.4, 1).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 10);
        for c in a.curves() {
            assert!(c.closure_gap() <= 1e-12);
            assert_eq!(c.start(), e.base_point);
        }
        assert!(generate_loops(&e.spec, &e.base_point, 0, 0.4, 1).unwrap().is_empty());
    }

    #[test]
    fn oversized_scale_is_rejected() {
        let e = catalog::entry("round_sphere").unwrap();
        assert!(matches!(
            generate_loops(&e.spec, &e.base_point, 10, 2.0, 1),
            Err(Error::ScaleTooLarge { .. })
        ));
    }

    #[test]
    fn kcontact_family_is_lifted() {
        let e = catalog::entry("sasakian_sphere").unwrap();
        let fam = generate_loops(&e.spec, &e.base_point, 4, 0.3, 2).unwrap();
        for c in fam.curves() {
            assert_eq!(c.dim(), 3);
            assert_eq!(c.start(), e.base_point);
        }
        assert_eq!(fam.projected().curves()[0].dim(), 2);
        assert_eq!(fam.with_vertical(3.0).curves()[0].start()[2], 3.0);
    }

    #[test]
    fn empty_sample_is_an_error() {
        let e = catalog::entry("round_sphere").unwrap();
        let fam = generate_loops(&e.spec, &e.base_point, 0, 0.4, 1).unwrap();
        assert!(matches!(sample_holonomy(&e.spec, &fam, 64), Err(Error::EmptySample)));
    }

    #[test]
    fn commutant_of_identity_is_everything() {
        assert_eq!(commutant_of(&[DMatrix::identity(2, 2)], 1e-6).len(), 4);
    }

    #[test]
    fn commutant_of_quarter_turn() {
        let c = commutant_of(&[rotation(std::f64::consts::FRAC_PI_2)], 1e-6);
        assert_eq!(c.len(), 2);
        let q = rotation(std::f64::consts::FRAC_PI_2);
        for x in &c {
            assert!(linalg::max_abs(&linalg::bracket(x, &q)) < 1e-12);
        }
    }

    #[test]
    fn commutant_of_block_rotations() {
        let c = commutant_of(&[block(0.7, 1.3), block(0.3, 2.1)], 1e-6);
        assert_eq!(c.len(), 4);
    }

    #[test]
    fn rotation_sample_is_irreducible() {
        let sample = euclidean_sample(vec![rotation(0.4), rotation(-0.9)]);
        let d = invariant_decomposition(&sample, 1e-6, 0).unwrap();
        assert_eq!(d.r, 1);
        assert_eq!(d.symmetric_commutant_dim, 1);
        let alg = holonomy_algebra(&sample, 1e-6).unwrap();
        assert_eq!(alg.dim(), 1);
    }

    #[test]
    fn block_sample_splits() {
        let sample = euclidean_sample(vec![block(0.7, 1.3), block(0.3, 2.1)]);
        let d = invariant_decomposition(&sample, 1e-6, 5).unwrap();
        assert_eq!(d.r, 2);
        assert_eq!(d.dims, vec![2, 2]);
        let res = d.check(&sample);
        assert!(res.resolution_of_identity < 1e-12);
        assert!(res.commutation < 1e-12);
        let alg = holonomy_algebra(&sample, 1e-6).unwrap();
        assert_eq!(alg.dim(), 2);
    }

    #[test]
    fn trivial_sample_is_maximally_reducible() {
        let sample = euclidean_sample(vec![DMatrix::identity(3, 3)]);
        let d = invariant_decomposition(&sample, 1e-6, 11).unwrap();
        assert_eq!(d.r, 3);
        assert_eq!(d.dims, vec![1, 1, 1]);
        let res = d.check(&sample);
        assert!(res.resolution_of_identity < 1e-12 && res.orthogonality < 1e-12);
        assert_eq!(holonomy_algebra(&sample, 1e-6).unwrap().dim(), 0);
    }

    #[test]
    fn half_turns_are_excluded_from_logarithms() {
        let sample = euclidean_sample(vec![rotation(std::f64::consts::PI - 0.01)]);
        assert!(matches!(
            holonomy_algebra(&sample, 1e-6),
            Err(Error::EmptyAfterExclusion { excluded: 1 })
        ));
        let sample = euclidean_sample(vec![rotation(std::f64::consts::PI - 0.01), rotation(0.2)]);
        let alg = holonomy_algebra(&sample, 1e-6).unwrap();
        assert_eq!(alg.excluded, vec![0]);
        assert_eq!(alg.dim(), 1);
    }

    #[test]
    fn non_euclidean_fiber_metric() {
        // M preserves G = diag(4, 1): M = L⁻ᵀ R Lᵀ with L = diag(2, 1)
        let g = DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 1.0]);
        let l = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
        let l_inv_t = l.clone().try_inverse().unwrap().transpose();
        let m = &l_inv_t * rotation(0.5) * l.transpose();
        let sample = HolonomySample::from_matrices(vec![0.0, 0.0], g, vec![m]).unwrap();
        assert!(sample.max_isometry_defect() < 1e-15);
        assert!(sample.max_orthogonality_defect() < 1e-15);
        assert!(sample.flagged.is_empty());
    }
}
