//! Dense linear-algebra helpers shared by the modeling, solver and
//! simulation layers.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type Mat = DMatrix<f64>;
pub type CMat = DMatrix<Complex64>;

pub fn zeros(rows: usize, cols: usize) -> Mat {
    Mat::zeros(rows, cols)
}

pub fn eye(n: usize) -> Mat {
    Mat::identity(n, n)
}

/// Horizontal concatenation; all blocks must share a row count.
pub fn hcat(blocks: &[&Mat]) -> Mat {
    let rows = blocks.first().map_or(0, |b| b.nrows());
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = zeros(rows, cols);
    let mut c = 0;
    for b in blocks {
        assert_eq!(b.nrows(), rows, "hcat: row mismatch");
        out.view_mut((0, c), (rows, b.ncols())).copy_from(*b);
        c += b.ncols();
    }
    out
}

/// Vertical concatenation; all blocks must share a column count.
pub fn vcat(blocks: &[&Mat]) -> Mat {
    let cols = blocks.first().map_or(0, |b| b.ncols());
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = zeros(rows, cols);
    let mut r = 0;
    for b in blocks {
        assert_eq!(b.ncols(), cols, "vcat: column mismatch");
        out.view_mut((r, 0), (b.nrows(), cols)).copy_from(*b);
        r += b.nrows();
    }
    out
}

pub fn blkdiag(blocks: &[&Mat]) -> Mat {
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), (b.nrows(), b.ncols())).copy_from(*b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

/// Assemble a dense matrix from a grid of blocks. Row heights are taken
/// from the first column, column widths from the first row.
pub fn grid(rows: &[Vec<&Mat>]) -> Mat {
    let heights: Vec<usize> = rows.iter().map(|r| r[0].nrows()).collect();
    let widths: Vec<usize> = rows[0].iter().map(|b| b.ncols()).collect();
    let mut out = zeros(heights.iter().sum(), widths.iter().sum());
    let mut r0 = 0;
    for (i, row) in rows.iter().enumerate() {
        let mut c0 = 0;
        for (j, b) in row.iter().enumerate() {
            assert_eq!((b.nrows(), b.ncols()), (heights[i], widths[j]), "grid: block ({i},{j})");
            out.view_mut((r0, c0), (heights[i], widths[j])).copy_from(*b);
            c0 += widths[j];
        }
        r0 += heights[i];
    }
    out
}

pub fn sym(m: &Mat) -> Mat {
    (m + m.transpose()) * 0.5
}

pub fn max_abs(m: &Mat) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

pub fn all_finite(m: &Mat) -> bool {
    m.iter().all(|v| v.is_finite())
}

pub fn asymmetry(m: &Mat) -> f64 {
    if m.nrows() != m.ncols() {
        return f64::INFINITY;
    }
    max_abs(&(m - m.transpose()))
}

/// Smallest eigenvalue of the symmetric part of `m`.
pub fn min_eig(m: &Mat) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    sym(m).symmetric_eigenvalues().min()
}

pub fn spectral_radius(a: &Mat) -> f64 {
    if a.nrows() == 0 {
        return 0.0;
    }
    a.complex_eigenvalues()
        .iter()
        .fold(0.0_f64, |acc, l| acc.max(l.norm()))
}

pub fn singular_values(m: &Mat) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut sv: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

pub fn sigma_max(m: &Mat) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// `sigma_min / sigma_max` of a square matrix (1 for empty matrices).
pub fn inverse_condition(m: &Mat) -> f64 {
    let sv = singular_values(m);
    match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) if hi > 0.0 => lo / hi,
        (Some(_), Some(_)) => 0.0,
        _ => 1.0,
    }
}

pub fn inverse(m: &Mat) -> Option<Mat> {
    if m.nrows() == 0 {
        return Some(zeros(0, 0));
    }
    m.clone().lu().try_inverse()
}

/// Solve `X = A X A^T + Q` for stable `A`.
pub fn dlyap(a: &Mat, q: &Mat) -> Option<Mat> {
    let n = a.nrows();
    if n == 0 {
        return Some(zeros(0, 0));
    }
    if n <= 24 {
        // (I - A kron A) vec(X) = vec(Q), column-major vec.
        let nn = n * n;
        let mut k = Mat::identity(nn, nn);
        for j in 0..n {
            for i in 0..n {
                let row = i + j * n;
                for l in 0..n {
                    for p in 0..n {
                        k[(row, p + l * n)] -= a[(i, p)] * a[(j, l)];
                    }
                }
            }
        }
        let rhs = nalgebra::DVector::from_column_slice(q.as_slice());
        let sol = k.lu().solve(&rhs)?;
        let x = Mat::from_column_slice(n, n, sol.as_slice());
        return Some(sym(&x));
    }
    // Smith doubling.
    let mut x = q.clone();
    let mut ak = a.clone();
    for _ in 0..64 {
        let next = &x + &ak * &x * ak.transpose();
        ak = &ak * &ak;
        let done = max_abs(&ak) < 1e-18 || (max_abs(&(&next - &x)) <= 1e-16 * max_abs(&next));
        x = next;
        if done {
            break;
        }
        if !all_finite(&x) {
            return None;
        }
    }
    Some(sym(&x))
}

/// Discrete observability gramian `W = A^T W A + C^T C`.
pub fn obsv_gramian(a: &Mat, c: &Mat) -> Option<Mat> {
    dlyap(&a.transpose(), &(c.transpose() * c))
}

/// H2 norm of a stable discrete-time LTI system.
pub fn h2_norm_discrete(a: &Mat, b: &Mat, c: &Mat, d: &Mat) -> Option<f64> {
    if spectral_radius(a) >= 1.0 {
        return None;
    }
    let w = obsv_gramian(a, c)?;
    let v = (b.transpose() * w * b).trace() + (d.transpose() * d).trace();
    Some(v.max(0.0).sqrt())
}

/// Stabilizing solution of the discrete Riccati equation for the cost
/// `x'Qx + 2x'Su + u'Ru`, by structured doubling. `None` when `R` is
/// singular or the iteration does not settle.
pub fn dare(a: &Mat, b: &Mat, q: &Mat, r: &Mat, s: &Mat) -> Option<Mat> {
    let n = a.nrows();
    let ri = r.clone().cholesky()?.inverse();
    let mut ak = a - b * &ri * s.transpose();
    let mut g = b * &ri * b.transpose();
    let mut h = sym(&(q - s * &ri * s.transpose()));
    for _ in 0..100 {
        let w = (Mat::identity(n, n) + &g * &h).lu();
        let wa = w.solve(&ak)?;
        let wg = w.solve(&g)?;
        let h_next = sym(&(&h + ak.transpose() * &h * &wa));
        g = sym(&(&g + &ak * wg * ak.transpose()));
        ak = &ak * wa;
        let step = max_abs(&(&h_next - &h));
        h = h_next;
        if !all_finite(&h) {
            return None;
        }
        if step <= 1e-13 * max_abs(&h).max(1e-300) {
            return Some(h);
        }
    }
    None
}

/// `(T, T^-1)` with `T' X T = I` for positive semidefinite `X`, after
/// raising eigenvalues below `floor` times the largest to that level.
/// `None` unless the largest eigenvalue is positive and finite.
pub fn normalizing_coordinates(x: &Mat, floor: f64) -> Option<(Mat, Mat)> {
    let eig = sym(x).symmetric_eigen();
    let top = eig.eigenvalues.amax();
    if !(top > 0.0) || !top.is_finite() {
        return None;
    }
    let w = eig.eigenvalues.map(|v| v.max(floor * top).sqrt());
    let u = &eig.eigenvectors;
    let t = u * Mat::from_diagonal(&w.map(|v| 1.0 / v));
    let t_inv = Mat::from_diagonal(&w) * u.transpose();
    Some((t, t_inv))
}

pub fn to_complex(m: &Mat) -> CMat {
    m.map(|v| Complex64::new(v, 0.0))
}

/// `C (zI - A)^{-1} B + D` evaluated at a complex point.
pub fn freq_response(a: &Mat, b: &Mat, c: &Mat, d: &Mat, z: Complex64) -> Option<CMat> {
    let n = a.nrows();
    let mut out = to_complex(d);
    if n == 0 {
        return Some(out);
    }
    let mut zi_a = -to_complex(a);
    for i in 0..n {
        zi_a[(i, i)] += z;
    }
    let x = zi_a.lu().solve(&to_complex(b))?;
    out += to_complex(c) * x;
    Some(out)
}

pub fn sigma_max_complex(m: &CMat) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .fold(0.0_f64, |acc, v| acc.max(*v))
}

/// Row-major nested vectors, the on-disk matrix layout.
pub fn to_rows(m: &Mat) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

pub fn from_rows(rows: &[Vec<f64>]) -> Option<Mat> {
    let r = rows.len();
    let c = rows.first().map_or(0, |row| row.len());
    if rows.iter().any(|row| row.len() != c) {
        return None;
    }
    Some(Mat::from_fn(r, c, |i, j| rows[i][j]))
}

/// Serde adapter storing a matrix as a list of rows.
pub mod rows {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::Mat;

    pub fn serialize<S: Serializer>(m: &Mat, s: S) -> Result<S::Ok, S::Error> {
        super::to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Mat, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        super::from_rows(&rows).ok_or_else(|| serde::de::Error::custom("ragged matrix rows"))
    }
}

/// Same as [`rows`] for a list of matrices.
pub mod rows_vec {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::Mat;

    pub fn serialize<S: Serializer>(ms: &[Mat], s: S) -> Result<S::Ok, S::Error> {
        ms.iter().map(super::to_rows).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Mat>, D::Error> {
        let all = Vec::<Vec<Vec<f64>>>::deserialize(d)?;
        all.iter()
            .map(|r| super::from_rows(r).ok_or_else(|| serde::de::Error::custom("ragged matrix rows")))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dlyap_scalar_matches_closed_form() {
        let a = Mat::from_element(1, 1, 0.5);
        let q = Mat::from_element(1, 1, 1.0);
        let x = dlyap(&a, &q).unwrap();
        assert!((x[(0, 0)] - 4.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn dlyap_kronecker_and_doubling_agree() {
        let n = 26;
        let a = Mat::from_fn(n, n, |i, j| 0.3 * ((i * 7 + j * 3) % 5) as f64 / n as f64);
        let q = Mat::identity(n, n);
        let x = dlyap(&a, &q).unwrap();
        let resid = &a * &x * a.transpose() + &q - &x;
        assert!(max_abs(&resid) < 1e-12);
    }

    #[test]
    fn dare_scalar_matches_closed_form() {
        // X = 4X - 4X^2/(1+X) + 1  =>  X^2 - 4X - 1 = 0.
        let one = Mat::from_element(1, 1, 1.0);
        let x = dare(&Mat::from_element(1, 1, 2.0), &one, &one, &one, &zeros(1, 1)).unwrap();
        assert!((x[(0, 0)] - (2.0 + 5f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn dare_residual_with_cross_term() {
        let a = Mat::from_fn(3, 3, |i, j| ((i * 5 + j * 2) as f64 * 0.7).sin());
        let b = Mat::from_fn(3, 2, |i, j| ((i + 3 * j) as f64 * 1.3).cos());
        let c = Mat::from_fn(2, 3, |i, j| ((2 * i + j) as f64 * 0.4).sin() + 0.2);
        let d = Mat::from_fn(2, 2, |i, j| if i == j { 1.0 } else { 0.3 });
        let (q, r, s) = (c.transpose() * &c, d.transpose() * &d, c.transpose() * &d);
        let x = dare(&a, &b, &q, &r, &s).unwrap();
        let k = (&r + b.transpose() * &x * &b).try_inverse().unwrap() * (b.transpose() * &x * &a + s.transpose());
        let resid = a.transpose() * &x * &a - &x + &q - (a.transpose() * &x * &b + &s) * &k;
        assert!(max_abs(&resid) < 1e-9 * max_abs(&x), "{resid}");
        assert!(spectral_radius(&(&a - &b * k)) < 1.0);
    }

    #[test]
    fn grid_assembles_blocks() {
        let a = eye(2);
        let b = zeros(2, 1);
        let c = zeros(1, 2);
        let d = Mat::from_element(1, 1, 3.0);
        let g = grid(&[vec![&a, &b], vec![&c, &d]]);
        assert_eq!(g.shape(), (3, 3));
        assert_eq!(g[(2, 2)], 3.0);
        assert_eq!(g[(1, 1)], 1.0);
    }
}
