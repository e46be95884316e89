mod common;

use holonomy_lab::catalog;
use holonomy_lab::holonomy::{
    commutant_of, generate_loops, holonomy_algebra, invariant_decomposition, sample_holonomy, HolonomySample,
};
use holonomy_lab::linalg;
use holonomy_lab::manifold::ManifoldSpec;
use holonomy_lab::theorem_lab::{de_rham_report, verify_isomorphism, SamplingOptions, Verdict};
use nalgebra::DMatrix;

fn sample(name: &str, loops: usize, seed: u64) -> HolonomySample {
    let e = catalog::entry(name).unwrap();
    let fam = generate_loops(&e.spec, &e.base_point, loops, e.loop_scale, seed).unwrap();
    sample_holonomy(&e.spec, &fam, 512).unwrap()
}

fn off_block(m: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            if (i < 2) != (j < 2) {
                worst = worst.max(m[(i, j)].abs());
            }
        }
    }
    worst
}

/// Null space of the stacked commutation system, by Gaussian elimination with
/// full pivoting instead of an SVD.
fn brute_commutant_dim(qs: &[DMatrix<f64>]) -> usize {
    let k = qs[0].nrows();
    let kk = k * k;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for q in qs {
        for r in 0..k {
            for c in 0..k {
                // (XQ − QX)[r][c] as a linear form in the entries X[a][b] at index a*k+b
                let mut row = vec![0.0; kk];
                for t in 0..k {
                    row[r * k + t] += q[(t, c)];
                    row[t * k + c] -= q[(r, t)];
                }
                rows.push(row);
            }
        }
    }
    let mut rank = 0;
    let mut col_used = vec![false; kk];
    for _ in 0..kk {
        let mut best = (0.0, 0, 0);
        for (i, row) in rows.iter().enumerate().skip(rank) {
            for (j, v) in row.iter().enumerate() {
                if !col_used[j] && v.abs() > best.0 {
                    best = (v.abs(), i, j);
                }
            }
        }
        if best.0 < 1e-9 {
            break;
        }
        rows.swap(rank, best.1);
        col_used[best.2] = true;
        let pivot = rows[rank].clone();
        for row in rows.iter_mut().skip(rank + 1) {
            let f = row[best.2] / pivot[best.2];
            for (x, p) in row.iter_mut().zip(&pivot) {
                *x -= f * p;
            }
        }
        rank += 1;
    }
    kk - rank
}

#[test]
fn flat_samples_are_identity() {
    for name in ["euclidean_plane", "euclidean_4", "heisenberg", "torus_contactization"] {
        let s = sample(name, 12, 3);
        let k = s.dim();
        for m in &s.matrices {
            assert!(linalg::max_abs_diff(m, &DMatrix::identity(k, k)) < 1e-10, "{name}");
        }
        assert_eq!(holonomy_algebra(&s, 1e-6).unwrap().dim(), 0);
    }
}

#[test]
fn round_sphere_samples_are_rotations() {
    let s = sample("round_sphere", 20, 1);
    assert!(s.max_orthogonality_defect() < 1e-6);
    for q in s.orthogonalized() {
        assert!((q.determinant() - 1.0).abs() < 1e-6);
    }
    assert_eq!(holonomy_algebra(&s, 1e-6).unwrap().dim(), 1);
    let d = invariant_decomposition(&s, 1e-6, 0).unwrap();
    assert_eq!(d.r, 1);
    assert_eq!(d.symmetric_commutant_dim, 1);
}

#[test]
fn product_contactization_is_block_diagonal() {
    let s = sample("product_contactization", 40, 2);
    for m in &s.matrices {
        assert!(off_block(m) < 1e-6);
    }
    let alg = holonomy_algebra(&s, 1e-6).unwrap();
    assert_eq!(alg.dim(), 2);
    for b in &alg.basis {
        assert!(off_block(b) < 1e-6);
    }
    let d = invariant_decomposition(&s, 1e-6, 7).unwrap();
    assert_eq!(d.r, 2);
    assert_eq!(d.dims, vec![2, 2]);
    for p in &d.frame_projectors {
        assert!(off_block(p) < 1e-6);
    }
    let res = d.check(&s);
    assert!(res.resolution_of_identity < 1e-8);
    assert!(res.orthogonality < 1e-8);
    assert!(res.idempotence < 1e-8);
    assert!(res.symmetry < 1e-8);
    assert!(res.commutation < 1e-6);
    assert!(res.frame_commutation < 1e-6);
}

#[test]
fn commutant_dimensions_match_elimination() {
    let r = common::rotation;
    let block = |a: f64, b: f64| {
        let mut m = DMatrix::zeros(4, 4);
        m.view_mut((0, 0), (2, 2)).copy_from(&r(a));
        m.view_mut((2, 2), (2, 2)).copy_from(&r(b));
        m
    };
    let cases = vec![
        vec![DMatrix::identity(2, 2)],
        vec![r(std::f64::consts::FRAC_PI_2)],
        vec![block(0.7, 1.3), block(0.3, 2.1)],
        sample("round_sphere", 8, 4).orthogonalized(),
    ];
    for qs in cases {
        assert_eq!(commutant_of(&qs, 1e-6).len(), brute_commutant_dim(&qs));
    }
}

#[test]
fn decomposition_is_deterministic() {
    let s = sample("sphere_product", 16, 5);
    let a = invariant_decomposition(&s, 1e-6, 3).unwrap();
    let b = invariant_decomposition(&s, 1e-6, 3).unwrap();
    assert_eq!(a, b);
}

#[test]
fn group_closure_keeps_isometry() {
    let s = sample("sphere_product", 6, 6);
    let bound = 2.0 * s.max_isometry_defect() + 1e-14;
    for a in &s.matrices {
        for b in &s.matrices {
            let p = a * b;
            let defect = linalg::max_abs_diff(&(p.transpose() * &s.fiber_metric * &p), &s.fiber_metric);
            assert!(defect <= bound.max(1e-12), "{defect} > {bound}");
        }
    }
}

#[test]
fn heisenberg_report_flags_trivial_group() {
    let e = catalog::entry("heisenberg").unwrap();
    let ManifoldSpec::KContact(spec) = &e.spec else { unreachable!() };
    let opts = SamplingOptions {
        loops: 8,
        steps: 256,
        scale: e.loop_scale,
        seed: 2,
    };
    let r = de_rham_report(spec, &e.base_point, opts, 1e-6, 1e-5).unwrap();
    assert!(r.trivial_group);
    assert_eq!(r.upstairs.dims.iter().sum::<usize>(), 2);
    assert_eq!(r.verdict, Verdict::Pass);
    let d = verify_isomorphism(spec, &e.base_point, opts).unwrap();
    assert!(d.max_residual < 1e-10);
}

#[test]
fn de_rham_verdicts_are_seed_stable() {
    for name in ["sasakian_sphere", "product_contactization"] {
        let e = catalog::entry(name).unwrap();
        let ManifoldSpec::KContact(spec) = &e.spec else { unreachable!() };
        for seed in 10..15 {
            let opts = SamplingOptions {
                loops: 12,
                steps: 256,
                scale: e.loop_scale,
                seed,
            };
            let r = de_rham_report(spec, &e.base_point, opts, 1e-6, 1e-5).unwrap();
            assert_eq!(r.upstairs.r, e.expected.r, "{name} seed {seed}");
            assert_eq!(r.upstairs.dims, e.expected.dims, "{name} seed {seed}");
            assert_eq!(r.verdict, Verdict::Pass);
        }
    }
}

#[test]
fn vertical_robustness() {
    let e = catalog::entry("product_contactization").unwrap();
    let ManifoldSpec::KContact(spec) = &e.spec else { unreachable!() };
    let opts = SamplingOptions {
        loops: 6,
        steps: 256,
        scale: e.loop_scale,
        seed: 8,
    };
    let r = verify_isomorphism(spec, &e.base_point, opts).unwrap();
    assert!(r.vertical_residual < 1e-8);
}
