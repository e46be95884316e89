//! Small dense linear-algebra helpers on `nalgebra::DMatrix`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Largest absolute entry.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0f64, |acc, (x, y)| acc.max((x - y).abs()))
}

pub fn frobenius_distance(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm()
}

fn one_norm(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Inverse by LU with partial pivoting, solving one column at a time.
///
/// Returns `Err(condition)` when the 1-norm condition number exceeds `max_condition`
/// (infinite for an exactly singular matrix).
pub fn guarded_inverse(m: &DMatrix<f64>, max_condition: f64) -> Result<DMatrix<f64>, f64> {
    let n = m.nrows();
    let lu = m.clone().lu();
    let mut inv = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut e = DVector::zeros(n);
        e[j] = 1.0;
        let col = lu.solve(&e).ok_or(f64::INFINITY)?;
        inv.set_column(j, &col);
    }
    let condition = one_norm(m) * one_norm(&inv);
    if !condition.is_finite() || condition > max_condition {
        return Err(condition);
    }
    Ok(inv)
}

pub fn min_eigenvalue(sym: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(sym.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Lower-triangular `L` with `L Lᵀ = g`.
pub fn cholesky_lower(g: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    nalgebra::Cholesky::new(g.clone()).map(|c| c.l())
}

/// Eigen-decomposition of a symmetric matrix with eigenvalues sorted ascending.
pub fn sorted_symmetric_eigen(sym: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(sym.clone());
    let n = sym.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Singular values at or below `tol * max(sigma_max, 1)` are treated as zero.
pub fn rank_threshold(tol: f64, sigma_max: f64) -> f64 {
    tol * sigma_max.max(1.0)
}

/// Eigenpairs of `mᵀ m` as `(σ_i, v_i)`, with `σ_i = sqrt(max(λ_i, 0))`, sorted by
/// descending `σ` (ties by index).
///
/// Used instead of a direct SVD: the nalgebra SVD can lose accuracy on
/// inputs with clustered or repeated singular values, which are exactly the
/// inputs that commutant and span computations produce.
fn right_singular_pairs(m: &DMatrix<f64>) -> Vec<(f64, DVector<f64>)> {
    let gram = m.transpose() * m;
    let gram = (&gram + gram.transpose()) * 0.5;
    let eig = SymmetricEigen::new(gram);
    let mut pairs: Vec<(usize, f64)> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(i, l)| (i, l.max(0.0).sqrt()))
        .collect();
    pairs.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    pairs
        .into_iter()
        .map(|(i, s)| (s, eig.eigenvectors.column(i).into_owned()))
        .collect()
}

/// Modified Gram–Schmidt, two passes.
fn orthonormalize(mut vectors: Vec<DVector<f64>>) -> Vec<DVector<f64>> {
    for _ in 0..2 {
        for i in 0..vectors.len() {
            let (done, rest) = vectors.split_at_mut(i);
            let v = &mut rest[0];
            for u in done.iter() {
                let c = u.dot(v);
                *v -= u * c;
            }
            let n = v.norm();
            if n > 0.0 {
                *v /= n;
            }
        }
    }
    vectors
}

/// Orthonormal basis of the null space of `a`.
///
/// Directions with singular value at most `rank_threshold(tol, σ_max)` count as null.
pub fn null_space(a: &DMatrix<f64>, tol: f64) -> Vec<DVector<f64>> {
    if a.ncols() == 0 {
        return Vec::new();
    }
    let pairs = right_singular_pairs(a);
    let threshold = rank_threshold(tol, pairs[0].0);
    let null: Vec<DVector<f64>> = pairs
        .into_iter()
        .rev()
        .filter(|(s, _)| *s <= threshold)
        .map(|(_, v)| v)
        .collect();
    orthonormalize(null)
}

/// Orthonormal basis of the span of `vectors`, ordered by decreasing singular value.
pub fn span_basis(vectors: &[DVector<f64>], tol: f64) -> Vec<DVector<f64>> {
    let Some(first) = vectors.first() else {
        return Vec::new();
    };
    if first.is_empty() {
        return Vec::new();
    }
    let m = DMatrix::from_columns(vectors);
    let pairs = right_singular_pairs(&m);
    let threshold = rank_threshold(tol, pairs[0].0);
    let basis = pairs
        .into_iter()
        .filter(|(s, _)| *s > threshold)
        .map(|(s, v)| &m * v / s)
        .collect();
    orthonormalize(basis)
}

/// Orthogonal polar factor `q (qᵀ q)^(-1/2)`, `None` for singular `q`.
pub fn polar_factor(q: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let gram = q.transpose() * q;
    let eig = SymmetricEigen::new((&gram + gram.transpose()) * 0.5);
    if eig.eigenvalues.iter().any(|l| !(*l > 0.0)) {
        return None;
    }
    let inv_sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
    Some(q * &eig.eigenvectors * inv_sqrt * eig.eigenvectors.transpose())
}

/// Column-major vectorization.
pub fn vectorize(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

pub fn unvectorize(v: &DVector<f64>, n: usize) -> DMatrix<f64> {
    DMatrix::from_column_slice(n, n, v.as_slice())
}

/// Principal square root by the Denman–Beavers iteration.
fn sqrtm(x: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = x.nrows();
    let mut y = x.clone();
    let mut z = DMatrix::identity(n, n);
    for _ in 0..100 {
        let y_inv = y.clone().try_inverse()?;
        let z_inv = z.clone().try_inverse()?;
        let y_next = (&y + z_inv) * 0.5;
        let z_next = (&z + y_inv) * 0.5;
        let delta = max_abs_diff(&y_next, &y);
        y = y_next;
        z = z_next;
        if delta < 1e-15 {
            return Some(y);
        }
    }
    Some(y)
}

/// Principal logarithm by inverse scaling and squaring with a Mercator series.
///
/// Returns `None` if a square root fails (eigenvalue on the negative real axis).
pub fn principal_log(q: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = q.nrows();
    let identity = DMatrix::<f64>::identity(n, n);
    let mut x = q.clone();
    let mut squarings = 0;
    while max_abs_diff(&x, &identity) > 0.25 {
        if squarings >= 60 {
            return None;
        }
        x = sqrtm(&x)?;
        squarings += 1;
    }
    let a = &x - &identity;
    let mut power = a.clone();
    let mut log = DMatrix::zeros(n, n);
    for k in 1..200 {
        let term = &power / k as f64;
        if k % 2 == 1 {
            log += &term;
        } else {
            log -= &term;
        }
        if max_abs(&term) < 1e-18 {
            break;
        }
        power = &power * &a;
    }
    Some(log * 2f64.powi(squarings))
}

/// Commutator `[a, b] = ab - ba`.
pub fn bracket(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a * b - b * a
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn span_of_nearly_deficient_set_contains_inputs() {
        let mut a = DMatrix::<f64>::zeros(4, 4);
        a[(0, 0)] = 0.5f64.sqrt();
        a[(1, 1)] = 0.5f64.sqrt();
        let mut b = DMatrix::<f64>::zeros(4, 4);
        b[(2, 2)] = 0.5f64.sqrt();
        b[(3, 3)] = 0.5f64.sqrt();
        let mut tiny = DMatrix::<f64>::zeros(4, 4);
        tiny[(0, 1)] = 1.5e-13;
        tiny[(1, 0)] = 1.5e-13;
        let vs = vec![vectorize(&tiny), vectorize(&(&tiny * 0.4)), vectorize(&a), vectorize(&b)];
        let basis = span_basis(&vs, 1e-6);
        assert_eq!(basis.len(), 2);
        for v in &vs[2..] {
            let mut r = v.clone();
            for u in &basis {
                r -= u * u.dot(v);
            }
            assert!(r.norm() < 1e-12);
        }
    }

    #[test]
    fn polar_factor_of_scaled_rotation() {
        let q = rotation(0.3) * 1.7;
        assert!(max_abs_diff(&polar_factor(&q).unwrap(), &rotation(0.3)) < 1e-14);
    }

    fn rotation(angle: f64) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[angle.cos(), -angle.sin(), angle.sin(), angle.cos()])
    }

    #[test]
    fn log_of_rotation_is_generator() {
        for angle in [0.0, 0.3, -1.2, 2.9] {
            let log = principal_log(&rotation(angle)).unwrap();
            let expected = DMatrix::from_row_slice(2, 2, &[0.0, -angle, angle, 0.0]);
            assert!(max_abs_diff(&log, &expected) < 1e-12, "{angle}: {log}");
        }
    }

    #[test]
    fn log_inverts_exp() {
        let skew = DMatrix::from_row_slice(
            3,
            3,
            &[0.0, -0.4, 0.9, 0.4, 0.0, -0.2, -0.9, 0.2, 0.0],
        );
        let log = principal_log(&skew.clone().exp()).unwrap();
        assert!(max_abs_diff(&log, &skew) < 1e-12);
    }

    #[test]
    fn guarded_inverse_rejects_singular() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(guarded_inverse(&m, 1e12).is_err());
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1e-13]);
        assert!(guarded_inverse(&m, 1e12).is_err());
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let inv = guarded_inverse(&m, 1e12).unwrap();
        assert!(max_abs_diff(&(m * inv), &DMatrix::identity(2, 2)) < 1e-15);
    }

    #[test]
    fn null_space_of_rank_one() {
        let a = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 0.0]);
        let ns = null_space(&a, 1e-10);
        assert_eq!(ns.len(), 2);
        for v in ns {
            assert!((&a * v).norm() < 1e-14);
        }
    }
}
