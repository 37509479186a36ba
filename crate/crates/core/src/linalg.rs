//! Dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::scalar::{lit, Real};

pub fn max_abs<T: Real>(m: &DMatrix<T>) -> T {
    m.iter().fold(T::zero(), |acc, x| acc.max(x.abs()))
}

pub fn commutator<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T> {
    a * b - b * a
}

/// Builds a matrix from row-major `f64` data.
pub fn from_row_major<T: Real>(rows: usize, cols: usize, data: &[f64]) -> DMatrix<T> {
    DMatrix::from_row_iterator(rows, cols, data.iter().map(|&x| lit::<T>(x)))
}

pub fn to_row_major<T: Real>(m: &DMatrix<T>) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(crate::scalar::to_f64(m[(i, j)]));
        }
    }
    out
}

pub fn block_diag<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T> {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let mut out = DMatrix::zeros(ra + rb, ca + cb);
    out.view_mut((0, 0), (ra, ca)).copy_from(a);
    out.view_mut((ra, ca), (rb, cb)).copy_from(b);
    out
}

/// Null space of `a` with singular-value cutoff `rel_cutoff * sigma_max`.
#[derive(Debug, Clone)]
pub struct NullSpace<T: Real> {
    /// Canonical orthonormal basis (see [`canonical_basis`]).
    pub basis: Vec<DVector<T>>,
    pub singular_values: Vec<T>,
    pub cutoff: T,
}

pub fn null_space<T: Real>(a: &DMatrix<T>, rel_cutoff: f64) -> NullSpace<T> {
    let (rows, cols) = a.shape();
    // thin SVD only yields min(rows, cols) right vectors
    let padded = if rows < cols {
        let mut p = DMatrix::zeros(cols, cols);
        p.view_mut((0, 0), (rows, cols)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let sv: Vec<T> = svd.singular_values.iter().copied().collect();
    let smax = sv.iter().fold(T::zero(), |m, &s| m.max(s));
    let cutoff = lit::<T>(rel_cutoff) * smax;
    let raw: Vec<DVector<T>> = sv
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= cutoff)
        .map(|(i, _)| v_t.row(i).transpose())
        .collect();
    NullSpace { basis: canonical_basis(&raw), singular_values: sv, cutoff }
}

/// Deterministic orthonormal basis of span(`vectors`): reduced row echelon
/// form, then Gram-Schmidt, then first significant entry made positive.
pub fn canonical_basis<T: Real>(vectors: &[DVector<T>]) -> Vec<DVector<T>> {
    if vectors.is_empty() {
        return Vec::new();
    }
    let n = vectors[0].len();
    let k = vectors.len();
    let mut m = DMatrix::from_fn(k, n, |i, j| vectors[i][j]);
    let eps: T = lit(1e-9);
    let scale = max_abs(&m).max(T::one());
    let mut pivot_row = 0;
    for col in 0..n {
        if pivot_row == k {
            break;
        }
        let (best, val) = (pivot_row..k)
            .map(|r| (r, m[(r, col)].abs()))
            .fold((pivot_row, T::zero()), |acc, x| if x.1 > acc.1 { x } else { acc });
        if val <= eps * scale {
            continue;
        }
        m.swap_rows(pivot_row, best);
        let p = m[(pivot_row, col)];
        for j in 0..n {
            m[(pivot_row, j)] /= p;
        }
        for r in 0..k {
            if r != pivot_row {
                let f = m[(r, col)];
                if f != T::zero() {
                    for j in 0..n {
                        let v = m[(pivot_row, j)];
                        m[(r, j)] -= f * v;
                    }
                }
            }
        }
        pivot_row += 1;
    }
    let mut out: Vec<DVector<T>> = Vec::new();
    for r in 0..pivot_row {
        let mut v = m.row(r).transpose();
        for b in &out {
            let d = b.dot(&v);
            v -= b * d;
        }
        let norm = v.norm();
        if norm > eps {
            v /= norm;
            let thr = lit::<T>(1e-8);
            if let Some(first) = v.iter().find(|x| x.abs() > thr) {
                if *first < T::zero() {
                    v = -v;
                }
            }
            out.push(v);
        }
    }
    out
}

/// Largest sine of the principal angles between two orthonormal families,
/// measured by projection residuals (accurate for tiny angles).
/// Returns 1 when the dimensions differ.
pub fn subspace_distance<T: Real>(a: &[DVector<T>], b: &[DVector<T>]) -> T {
    if a.len() != b.len() {
        return T::one();
    }
    b.iter()
        .map(|v| projection_residual(v, a))
        .chain(a.iter().map(|v| projection_residual(v, b)))
        .fold(T::zero(), |m, r| m.max(r))
}

/// Norm of the component of `v` orthogonal to an orthonormal family.
pub fn projection_residual<T: Real>(v: &DVector<T>, basis: &[DVector<T>]) -> T {
    let mut r = v.clone();
    for b in basis {
        let d = b.dot(v);
        r -= b * d;
    }
    r.norm()
}
