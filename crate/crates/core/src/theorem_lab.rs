//! End-to-end checks relating adapted holonomy upstairs to Levi-Civita
//! holonomy of the quotient, and product structure of block metrics.
//!
//! In adapted coordinates the projection is `(x1, .., x2m, xn) ↦ (x1, .., x2m)`
//! and its differential sends the frame vector `e_i` to `∂_i`. Transport
//! matrices in frame components upstairs and coordinate components downstairs
//! are therefore compared entry by entry.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::connection::{horizontal_coeffs, levi_civita_coeffs};
use crate::error::{Error, Result};
use crate::holonomy::{generate_loops, invariant_decomposition, sample_holonomy, InvariantDecomposition};
use crate::linalg;
use crate::manifold::{quotient_metric, KContactSpec, ManifoldSpec, RiemannianSpec};
use crate::transport::{richardson_check, transport};

/// Floor applied to Richardson estimates before the 10× bound is checked.
///
/// Both sides integrate the same coefficients along the same path, so the
/// residual is rounding noise and the estimates can underflow to zero.
pub const RICHARDSON_FLOOR: f64 = 1e-14;
pub const DIAGRAM_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_MATCH_TOLERANCE: f64 = 1e-5;
pub const BLOCK_TOLERANCE: f64 = 1e-6;
/// Sampled holonomy within this distance of the identity counts as trivial.
pub const TRIVIAL_TOLERANCE: f64 = 1e-9;
/// Second vertical value used for the robustness check.
pub const VERTICAL_SHIFT_VALUE: f64 = 3.0;
const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SamplingOptions {
    pub loops: usize,
    pub steps: usize,
    pub scale: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagramReport {
    pub options: SamplingOptions,
    pub base: Vec<f64>,
    /// `|M_A − M_h|∞` per loop.
    pub residuals: Vec<f64>,
    /// Richardson estimate per loop (larger of the two sides).
    pub richardson: Vec<f64>,
    pub max_residual: f64,
    pub max_richardson: f64,
    pub tolerance: f64,
    /// Every residual is at most 10× its floored Richardson estimate.
    pub within_richardson_bound: bool,
    pub vertical_value: f64,
    /// `max |M_A(x_n = v) − M_A(x_n = shifted)|` over loops.
    pub vertical_residual: f64,
    pub passed: bool,
}

/// Compares adapted transport along lifted loops with quotient transport along the loops.
///
/// Quotient loops are generated first at `pr(base)` and then lifted with
/// the constant vertical coordinate of `base`.
pub fn verify_isomorphism(spec: &KContactSpec, base: &[f64], options: SamplingOptions) -> Result<DiagramReport> {
    let upstairs = ManifoldSpec::KContact(spec.clone());
    let downstairs = ManifoldSpec::Riemannian(quotient_metric(spec)?);
    let family = generate_loops(&upstairs, base, options.loops, options.scale, options.seed)?;
    let lifted = family.curves();
    let projected = family.projected().curves();
    let shifted = family.with_vertical(VERTICAL_SHIFT_VALUE).curves();

    let steps = options.steps;
    let per_loop: Vec<Result<(f64, f64, f64)>> = lifted
        .par_iter()
        .zip(&projected)
        .zip(&shifted)
        .map(|((up, down), moved)| {
            let a = transport(&upstairs, up, steps)?;
            let h = transport(&downstairs, down, steps)?;
            let a_moved = transport(&upstairs, moved, steps)?;
            let est = richardson_check(&upstairs, up, steps)?.max(richardson_check(&downstairs, down, steps)?);
            Ok((
                linalg::max_abs_diff(&a.matrix, &h.matrix),
                est,
                linalg::max_abs_diff(&a.matrix, &a_moved.matrix),
            ))
        })
        .collect();
    let per_loop = per_loop.into_iter().collect::<Result<Vec<_>>>()?;

    let residuals: Vec<f64> = per_loop.iter().map(|r| r.0).collect();
    let richardson: Vec<f64> = per_loop.iter().map(|r| r.1).collect();
    let max_residual = residuals.iter().copied().fold(0.0, f64::max);
    let max_richardson = richardson.iter().copied().fold(0.0, f64::max);
    let within_richardson_bound = residuals
        .iter()
        .zip(&richardson)
        .all(|(r, e)| *r <= 10.0 * e.max(RICHARDSON_FLOOR));
    let vertical_residual = per_loop.iter().map(|r| r.2).fold(0.0, f64::max);
    Ok(DiagramReport {
        options,
        base: base.to_vec(),
        residuals,
        richardson,
        max_residual,
        max_richardson,
        tolerance: DIAGRAM_TOLERANCE,
        within_richardson_bound,
        vertical_value: base[spec.dim() - 1],
        vertical_residual,
        passed: max_residual < DIAGRAM_TOLERANCE && within_richardson_bound,
    })
}

/// `max |Γ^g(p) − Γ^h(pr p)|` over seeded random points of the domain box.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelReport {
    pub samples: usize,
    pub seed: u64,
    pub max_residual: f64,
    pub witness: Vec<f64>,
}

/// The horizontal coefficients upstairs agree with the Levi-Civita
/// coefficients of the quotient metric.
pub fn proof_kernel_check(spec: &KContactSpec, samples: usize, seed: u64) -> Result<KernelReport> {
    let quotient = quotient_metric(spec)?;
    let k = spec.rank();
    let points = spec.domain().sample_points(samples, seed);
    let residuals = points
        .par_iter()
        .map(|p| {
            let g = horizontal_coeffs(spec, p)?;
            let h = levi_civita_coeffs(&quotient, &p[..k])?;
            Ok(g.max_abs_diff(&h))
        })
        .collect::<Result<Vec<f64>>>()?;
    let (idx, max_residual) = residuals
        .iter()
        .copied()
        .enumerate()
        .fold((0, 0.0), |acc, (i, r)| if r > acc.1 { (i, r) } else { acc });
    Ok(KernelReport {
        samples,
        seed,
        max_residual,
        witness: points.get(idx).cloned().unwrap_or_default(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeRhamReport {
    pub options: SamplingOptions,
    pub svd_tol: f64,
    pub tolerance: f64,
    pub base: Vec<f64>,
    pub upstairs: InvariantDecomposition,
    pub downstairs: InvariantDecomposition,
    /// Pairs `(upstairs index, downstairs index)` in upstairs order.
    pub matching: Vec<(usize, usize)>,
    /// Frobenius distance of each matched pair, in upstairs order.
    pub matched_residuals: Vec<f64>,
    /// Both sampled groups are the identity, so every splitting is invariant
    /// and the projectors are not compared.
    pub trivial_group: bool,
    pub verdict: Verdict,
}

/// Greedy minimum-Frobenius matching of two projector lists of equal length.
///
/// At each step the globally closest remaining pair is taken; a competing
/// pair in the same row or column within [`TIE_TOLERANCE`] is an error.
pub fn match_projectors(up: &[DMatrix<f64>], down: &[DMatrix<f64>]) -> Result<Vec<(usize, usize, f64)>> {
    let r = up.len();
    debug_assert_eq!(r, down.len());
    let dist: Vec<Vec<f64>> = up
        .iter()
        .map(|p| down.iter().map(|q| linalg::frobenius_distance(p, q)).collect())
        .collect();
    let mut row_free = vec![true; r];
    let mut col_free = vec![true; r];
    let mut pairs = Vec::with_capacity(r);
    for _ in 0..r {
        let mut best: Option<(usize, usize, f64)> = None;
        for (i, row) in dist.iter().enumerate().filter(|(i, _)| row_free[*i]) {
            for (j, d) in row.iter().enumerate().filter(|(j, _)| col_free[*j]) {
                if best.is_none_or(|b| *d < b.2) {
                    best = Some((i, j, *d));
                }
            }
        }
        let (i, j, d) = best.expect("free pairs remain");
        let rival = (0..r)
            .filter(|&jj| jj != j && col_free[jj])
            .map(|jj| dist[i][jj])
            .chain((0..r).filter(|&ii| ii != i && row_free[ii]).map(|ii| dist[ii][j]))
            .fold(f64::INFINITY, f64::min);
        if rival - d <= TIE_TOLERANCE {
            return Err(Error::ProjectorTie { first: d, second: rival });
        }
        row_free[i] = false;
        col_free[j] = false;
        pairs.push((i, j, d));
    }
    pairs.sort_by_key(|p| p.0);
    Ok(pairs)
}

fn is_identity_sample(matrices: &[DMatrix<f64>]) -> bool {
    matrices.iter().all(|q| {
        let k = q.nrows();
        linalg::max_abs_diff(q, &DMatrix::identity(k, k)) < TRIVIAL_TOLERANCE
    })
}

/// Decomposes adapted holonomy upstairs and quotient holonomy downstairs over
/// matched loops and compares the splittings.
pub fn de_rham_report(
    spec: &KContactSpec,
    base: &[f64],
    options: SamplingOptions,
    svd_tol: f64,
    tolerance: f64,
) -> Result<DeRhamReport> {
    let upstairs = ManifoldSpec::KContact(spec.clone());
    let downstairs = ManifoldSpec::Riemannian(quotient_metric(spec)?);
    let family = generate_loops(&upstairs, base, options.loops, options.scale, options.seed)?;
    let (up_sample, down_sample) = rayon::join(
        || sample_holonomy(&upstairs, &family, options.steps),
        || sample_holonomy(&downstairs, &family.projected(), options.steps),
    );
    let (up_sample, down_sample) = (up_sample?, down_sample?);
    let up = invariant_decomposition(&up_sample, svd_tol, options.seed)?;
    let down = invariant_decomposition(&down_sample, svd_tol, options.seed)?;
    let trivial_group =
        is_identity_sample(&up_sample.orthogonalized()) && is_identity_sample(&down_sample.orthogonalized());

    let shape_matches = up.r == down.r && up.dims == down.dims;
    let (matching, matched_residuals) = if shape_matches && !trivial_group {
        let pairs = match_projectors(&up.projectors, &down.projectors)?;
        (
            pairs.iter().map(|p| (p.0, p.1)).collect(),
            pairs.iter().map(|p| p.2).collect(),
        )
    } else {
        (Vec::new(), Vec::new())
    };
    let dims_agree = shape_matches
        && matching
            .iter()
            .all(|&(i, j)| up.dims[i] == down.dims[j]);
    let ok = dims_agree && matched_residuals.iter().all(|d: &f64| *d < tolerance);
    Ok(DeRhamReport {
        options,
        svd_tol,
        tolerance,
        base: base.to_vec(),
        upstairs: up,
        downstairs: down,
        matching,
        matched_residuals,
        trivial_group,
        verdict: Verdict::from_bool(ok),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProductReport {
    pub options: SamplingOptions,
    pub blocks: Vec<Vec<usize>>,
    /// Largest off-block entry per loop.
    pub off_block: Vec<f64>,
    pub max_off_block: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Checks that `blocks` partitions the coordinates and that the metric is a
/// block product: cross-block entries are literally zero and each block
/// depends only on its own coordinates.
pub fn validate_partition(spec: &RiemannianSpec, blocks: &[Vec<usize>]) -> Result<Vec<usize>> {
    let n = spec.dim();
    let mut owner = vec![usize::MAX; n];
    for (b, block) in blocks.iter().enumerate() {
        if block.is_empty() {
            return Err(Error::Partition(format!("block {} is empty", b + 1)));
        }
        for &c in block {
            if c == 0 || c > n {
                return Err(Error::Partition(format!("coordinate x{c} is outside 1..={n}")));
            }
            if owner[c - 1] != usize::MAX {
                return Err(Error::Partition(format!("coordinate x{c} appears in two blocks")));
            }
            owner[c - 1] = b;
        }
    }
    if let Some(c) = owner.iter().position(|o| *o == usize::MAX) {
        return Err(Error::Partition(format!("coordinate x{} is in no block", c + 1)));
    }
    for i in 0..n {
        for j in 0..n {
            let g = spec.metric_entry(i, j);
            if owner[i] != owner[j] {
                if !g.is_zero() {
                    return Err(Error::Partition(format!(
                        "g[{}][{}] = {g} couples blocks {} and {}",
                        i + 1,
                        j + 1,
                        owner[i] + 1,
                        owner[j] + 1
                    )));
                }
            } else if let Some(v) = g.variables().into_iter().find(|v| owner[v - 1] != owner[i]) {
                return Err(Error::Partition(format!(
                    "g[{}][{}] = {g} depends on x{v} from block {}",
                    i + 1,
                    j + 1,
                    owner[v - 1] + 1
                )));
            }
        }
    }
    Ok(owner)
}

/// Samples Levi-Civita holonomy of a block-product metric and measures the
/// largest entry coupling different blocks.
pub fn product_holonomy_check(
    spec: &RiemannianSpec,
    blocks: &[Vec<usize>],
    base: &[f64],
    options: SamplingOptions,
) -> Result<ProductReport> {
    let owner = validate_partition(spec, blocks)?;
    let manifold = ManifoldSpec::Riemannian(spec.clone());
    let family = generate_loops(&manifold, base, options.loops, options.scale, options.seed)?;
    let sample = sample_holonomy(&manifold, &family, options.steps)?;
    let n = spec.dim();
    let off_block: Vec<f64> = sample
        .matrices
        .iter()
        .map(|m| {
            let mut worst = 0.0f64;
            for i in 0..n {
                for j in 0..n {
                    if owner[i] != owner[j] {
                        worst = worst.max(m[(i, j)].abs());
                    }
                }
            }
            worst
        })
        .collect();
    let max_off_block = off_block.iter().copied().fold(0.0, f64::max);
    Ok(ProductReport {
        options,
        blocks: blocks.to_vec(),
        off_block,
        max_off_block,
        tolerance: BLOCK_TOLERANCE,
        passed: max_off_block < BLOCK_TOLERANCE,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    fn opts(loops: usize, seed: u64) -> SamplingOptions {
        SamplingOptions {
            loops,
            steps: 128,
            scale: 0.3,
            seed,
        }
    }

    #[test]
    fn heisenberg_diagram_is_identity() {
        let spec = catalog::heisenberg_spec();
        let r = verify_isomorphism(&spec, &[0.0, 0.0, 0.0], opts(4, 1)).unwrap();
        assert!(r.max_residual < 1e-10);
        assert!(r.passed);
    }

    #[test]
    fn partition_validation() {
        let spec = catalog::sphere_product_spec();
        assert!(validate_partition(&spec, &[vec![1, 2], vec![3, 4]]).is_ok());
        assert!(validate_partition(&spec, &[vec![1, 2, 3, 4]]).is_ok());
        assert!(matches!(
            validate_partition(&spec, &[vec![1, 3], vec![2, 4]]),
            Err(Error::Partition(_))
        ));
        assert!(matches!(
            validate_partition(&spec, &[vec![1, 2], vec![3]]),
            Err(Error::Partition(_))
        ));
    }

    #[test]
    fn single_block_is_vacuous() {
        let spec = catalog::round_sphere_spec();
        let r = product_holonomy_check(&spec, &[vec![1, 2]], &[1.5, 0.0], opts(3, 2)).unwrap();
        assert_eq!(r.max_off_block, 0.0);
        assert!(r.passed);
    }

    #[test]
    fn matching_detects_ties() {
        let id = DMatrix::<f64>::identity(2, 2);
        assert!(matches!(
            match_projectors(&[id.clone(), id.clone()], &[id.clone(), id]),
            Err(Error::ProjectorTie { .. })
        ));
    }

    #[test]
    fn matching_permutes() {
        let p = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let q = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]);
        let m = match_projectors(&[p.clone(), q.clone()], &[q, p]).unwrap();
        assert_eq!(m.iter().map(|x| (x.0, x.1)).collect::<Vec<_>>(), vec![(0, 1), (1, 0)]);
    }
}
