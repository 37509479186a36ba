//! Linear constraint systems for covariant first-order operators and
//! intertwiners, reflection filtering and commutant mass terms.
//!
//! Convention: an intertwiner from `tau` (N-dim) to `sigma` (M-dim) is a
//! D-tuple of M x N matrices with
//! `sum_k (L_a)_jk B_k + dsigma(L_a) B_j - B_j dtau(L_a) = 0`,
//! which for `sigma = tau` is the covariance condition
//! `sum_k (L_a)_jk B_k = [B_j, dtau(L_a)]`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{commutator, max_abs, null_space, NullSpace};
use crate::repcore::Representation;
use crate::scalar::{to_f64, tol, Real};

/// Relative singular-value cutoff for rank decisions.
pub const SV_CUTOFF: f64 = 1e-8;

/// The operator `sum_j B_j d_j + M` on N-component fields.
#[derive(Debug, Clone)]
pub struct CovOperator<T: Real> {
    rep: Arc<Representation<T>>,
    b: Vec<DMatrix<T>>,
    m: DMatrix<T>,
}

impl<T: Real> CovOperator<T> {
    /// Checks covariance and that `M` lies in the commutant.
    pub fn new(rep: Arc<Representation<T>>, b: Vec<DMatrix<T>>, m: DMatrix<T>) -> Result<Self> {
        let op = Self::new_unchecked(rep, b, m)?;
        let cov = op.covariance_residual();
        if cov > tol(1e-9) {
            return Err(Error::Invalid(format!("operator is not covariant, residual {:e}", to_f64(cov))));
        }
        let mass = op.mass_residual();
        if mass > tol(1e-9) {
            return Err(Error::Invalid(format!("mass term leaves the commutant, residual {:e}", to_f64(mass))));
        }
        Ok(op)
    }

    /// Shape checks only; for perturbation experiments.
    pub fn new_unchecked(rep: Arc<Representation<T>>, b: Vec<DMatrix<T>>, m: DMatrix<T>) -> Result<Self> {
        let n = rep.dim();
        let d = rep.group().dim();
        if b.len() != d || b.iter().any(|x| x.shape() != (n, n)) || m.shape() != (n, n) {
            return Err(Error::DimensionMismatch(format!("operator needs {d} matrices of size {n}x{n}")));
        }
        Ok(Self { rep, b, m })
    }

    pub fn rep(&self) -> &Arc<Representation<T>> {
        &self.rep
    }

    pub fn b(&self) -> &[DMatrix<T>] {
        &self.b
    }

    pub fn mass(&self) -> &DMatrix<T> {
        &self.m
    }

    pub fn dim(&self) -> usize {
        self.rep.dim()
    }

    pub fn space_dim(&self) -> usize {
        self.b.len()
    }

    pub fn with_mass(&self, m: DMatrix<T>) -> Result<Self> {
        Self::new(self.rep.clone(), self.b.clone(), m)
    }

    /// Max over generators and j of `|sum_k (L_a)_jk B_k - [B_j, dtau(L_a)]|`.
    pub fn covariance_residual(&self) -> T {
        intertwiner_residual(&self.rep, &self.rep, &self.b)
    }

    pub fn mass_residual(&self) -> T {
        self.rep
            .dgen()
            .iter()
            .map(|x| max_abs(&commutator(&self.m, x)))
            .fold(T::zero(), |a, b| a.max(b))
    }

    /// `B_j` scaled and summed: `sum_i w_i op_i` over a basis, keeping `M`.
    pub fn combination(basis: &[Self], weights: &[T], m: DMatrix<T>) -> Result<Self> {
        let first = basis.first().ok_or_else(|| Error::Invalid("empty basis".into()))?;
        if basis.len() != weights.len() {
            return Err(Error::DimensionMismatch("one weight per basis element".into()));
        }
        let n = first.dim();
        let b = (0..first.space_dim())
            .map(|j| {
                basis
                    .iter()
                    .zip(weights)
                    .fold(DMatrix::zeros(n, n), |acc, (op, &w)| acc + &op.b[j] * w)
            })
            .collect();
        Self::new(first.rep.clone(), b, m)
    }

    /// Vectorized `B` as used by the constraint systems.
    pub fn vectorized(&self) -> DVector<T> {
        vectorize(&self.b)
    }
}

fn vectorize<T: Real>(b: &[DMatrix<T>]) -> DVector<T> {
    let (rows, cols) = b[0].shape();
    DVector::from_iterator(
        b.len() * rows * cols,
        b.iter().flat_map(|m| (0..rows).flat_map(move |r| (0..cols).map(move |c| m[(r, c)]))),
    )
}

fn unvectorize<T: Real>(v: &DVector<T>, d: usize, rows: usize, cols: usize) -> Vec<DMatrix<T>> {
    (0..d)
        .map(|k| DMatrix::from_fn(rows, cols, |r, c| v[k * rows * cols + r * cols + c]))
        .collect()
}

fn intertwiner_residual<T: Real>(tau: &Representation<T>, sigma: &Representation<T>, b: &[DMatrix<T>]) -> T {
    let mut worst = T::zero();
    for ((l, xt), xs) in tau.group().generators().iter().zip(tau.dgen()).zip(sigma.dgen()) {
        for j in 0..b.len() {
            let mut r = xs * &b[j] - &b[j] * xt;
            for (k, bk) in b.iter().enumerate() {
                r += bk * l[(j, k)];
            }
            worst = worst.max(max_abs(&r));
        }
    }
    worst
}

/// Linear system whose null space is the vectorized intertwiner space.
#[derive(Debug, Clone)]
pub struct ConstraintSystem<T: Real> {
    pub matrix: DMatrix<T>,
    pub tolerance: f64,
    d: usize,
    rows: usize,
    cols: usize,
}

impl<T: Real> ConstraintSystem<T> {
    pub fn solve(&self) -> NullSpace<T> {
        null_space(&self.matrix, self.tolerance)
    }

    /// Null space as D-tuples of matrices.
    pub fn solutions(&self) -> Vec<Vec<DMatrix<T>>> {
        self.solve()
            .basis
            .iter()
            .map(|v| unvectorize(v, self.d, self.rows, self.cols))
            .collect()
    }
}

/// Constraints for intertwiners `tau -> sigma`; unknown `B_k[r][c]` sits
/// at column `k*M*N + r*N + c`, equation `(a, j, r, c)` at row
/// `((a*D + j)*M + r)*N + c`.
pub fn assemble_intertwiner<T: Real>(tau: &Representation<T>, sigma: &Representation<T>) -> Result<ConstraintSystem<T>> {
    if tau.group() != sigma.group() {
        return Err(Error::IncompatibleReps("representations of different groups".into()));
    }
    let d = tau.group().dim();
    let l = tau.group().count();
    let (n, m) = (tau.dim(), sigma.dim());
    let col = |k: usize, r: usize, c: usize| (k * m + r) * n + c;
    let mut a = DMatrix::zeros(l * d * m * n, d * m * n);
    for (alpha, ((lg, xt), xs)) in tau.group().generators().iter().zip(tau.dgen()).zip(sigma.dgen()).enumerate() {
        for j in 0..d {
            for r in 0..m {
                for c in 0..n {
                    let row = ((alpha * d + j) * m + r) * n + c;
                    for k in 0..d {
                        a[(row, col(k, r, c))] += lg[(j, k)];
                    }
                    // (dsigma B_j)[r][c] = sum_s xs[r][s] B_j[s][c]
                    for s in 0..m {
                        a[(row, col(j, s, c))] += xs[(r, s)];
                    }
                    // (B_j dtau)[r][c] = sum_s B_j[r][s] xt[s][c]
                    for s in 0..n {
                        a[(row, col(j, r, s))] -= xt[(s, c)];
                    }
                }
            }
        }
    }
    Ok(ConstraintSystem { matrix: a, tolerance: SV_CUTOFF, d, rows: m, cols: n })
}

/// Constraints of the covariance condition; `l*D*N^2` rows, `D*N^2` columns.
pub fn assemble_constraints<T: Real>(rep: &Representation<T>) -> ConstraintSystem<T> {
    assemble_intertwiner(rep, rep).expect("a representation is compatible with itself")
}

/// Orthonormal (Frobenius) canonical basis of Cov(rep), with `M = 0`.
pub fn solve_cov_space<T: Real>(rep: &Arc<Representation<T>>) -> Vec<CovOperator<T>> {
    let n = rep.dim();
    assemble_constraints(rep)
        .solutions()
        .into_iter()
        .map(|b| CovOperator::new_unchecked(rep.clone(), b, DMatrix::zeros(n, n)).expect("shapes match"))
        .collect()
}

pub fn solve_intertwiner_space<T: Real>(
    tau: &Representation<T>,
    sigma: &Representation<T>,
) -> Result<Vec<Vec<DMatrix<T>>>> {
    Ok(assemble_intertwiner(tau, sigma)?.solutions())
}

/// Basis of `{M : [M, dtau(L_a)] = 0}`.
pub fn commutant_mass_terms<T: Real>(rep: &Representation<T>) -> Vec<DMatrix<T>> {
    let n = rep.dim();
    let idx = |r: usize, c: usize| r * n + c;
    let mut a = DMatrix::zeros(rep.dgen().len() * n * n, n * n);
    for (alpha, x) in rep.dgen().iter().enumerate() {
        for r in 0..n {
            for c in 0..n {
                let row = (alpha * n + r) * n + c;
                for s in 0..n {
                    a[(row, idx(s, c))] += x[(r, s)];
                    a[(row, idx(r, s))] -= x[(s, c)];
                }
            }
        }
    }
    null_space(&a, SV_CUTOFF)
        .basis
        .iter()
        .map(|v| DMatrix::from_fn(n, n, |r, c| v[idx(r, c)]))
        .collect()
}

/// `max_j |sum_k g_jk tau(g) B_k tau(g)^-1 - B_j|` with `g = exp(sum c_a L_a)`.
pub fn check_covariance_global<T: Real>(op: &CovOperator<T>, g_coeffs: &[T]) -> Result<T> {
    let g = op.rep.group().element(g_coeffs)?;
    let tg = op.rep.exponential(g_coeffs)?;
    let tg_inv = tg.clone().try_inverse().ok_or_else(|| Error::Invalid("tau(g) is singular".into()))?;
    let n = op.dim();
    let mut worst = T::zero();
    for j in 0..op.space_dim() {
        let mut s = DMatrix::zeros(n, n);
        for (k, bk) in op.b.iter().enumerate() {
            s += bk * g[(j, k)];
        }
        worst = worst.max(max_abs(&(&tg * s * &tg_inv - &op.b[j])));
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectionCheck<T> {
    pub covariant: bool,
    pub residual: T,
}

/// Tests `R B_0 R = -B_0` and `R B_j R = B_j` for `j >= 1`.
pub fn check_reflection_covariance<T: Real>(op: &CovOperator<T>, r: &DMatrix<T>) -> Result<ReflectionCheck<T>> {
    let n = op.dim();
    if r.shape() != (n, n) {
        return Err(Error::DimensionMismatch("reflection image has the wrong shape".into()));
    }
    let inv = max_abs(&(r * r - DMatrix::identity(n, n)));
    if inv > tol(1e-10) {
        return Err(Error::InvalidReflection(format!("R^2 - 1 has size {:e}", to_f64(inv))));
    }
    let residual = op
        .b
        .iter()
        .enumerate()
        .map(|(j, bj)| {
            let s = if j == 0 { -T::one() } else { T::one() };
            max_abs(&(r * bj * r - bj * s))
        })
        .fold(T::zero(), |a, b| a.max(b));
    Ok(ReflectionCheck { covariant: residual < tol(1e-8), residual })
}

/// Subspace of Cov(rep) that is also reflection covariant under `r`.
pub fn reflection_covariant_subspace<T: Real>(rep: &Arc<Representation<T>>, r: &DMatrix<T>) -> Vec<DVector<T>> {
    let basis = solve_cov_space(rep);
    if basis.is_empty() {
        return Vec::new();
    }
    // linear map w -> (R B_j(w) R -/+ B_j(w)) over the basis weights
    let cols: Vec<DVector<T>> = basis
        .iter()
        .map(|op| {
            let img: Vec<DMatrix<T>> = op
                .b
                .iter()
                .enumerate()
                .map(|(j, bj)| {
                    let s = if j == 0 { -T::one() } else { T::one() };
                    r * bj * r - bj * s
                })
                .collect();
            vectorize(&img)
        })
        .collect();
    let a = DMatrix::from_columns(&cols);
    null_space(&a, SV_CUTOFF).basis
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{projection_residual, subspace_distance};
    use crate::repcore::{catalog_rep, GroupSpec};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rep(name: &str) -> Arc<Representation<f64>> {
        Arc::new(catalog_rep(name).unwrap())
    }

    #[test]
    fn system_shape() {
        let r = rep("D1+D1");
        let sys = assemble_constraints(&r);
        assert_eq!(sys.matrix.shape(), (3 * 3 * 36, 3 * 36));
    }

    #[test]
    fn covariance_space_dimensions() {
        for (name, dim) in [("D0", 0), ("D1", 1), ("D0+D1", 3), ("D1+D1", 4), ("Dhalf+Dhalf", 4)] {
            let basis = solve_cov_space(&rep(name));
            assert_eq!(basis.len(), dim, "{name}");
            for op in &basis {
                assert!(op.covariance_residual() < 1e-9, "{name}");
            }
        }
    }

    #[test]
    fn basis_is_frobenius_orthonormal() {
        let basis = solve_cov_space(&rep("D1+D1"));
        for (i, a) in basis.iter().enumerate() {
            for (j, b) in basis.iter().enumerate() {
                let d = a.vectorized().dot(&b.vectorized());
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((d - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn curl_is_the_only_vector_operator() {
        let basis = solve_cov_space(&rep("D1"));
        let b = basis[0].b();
        // B_j = s * eps_{j..}: (B_j)_{rc} proportional to eps_{jrc}
        let s = b[0][(1, 2)];
        assert!(s.abs() > 0.1);
        for j in 0..3 {
            for r in 0..3 {
                for c in 0..3 {
                    let eps = levi_civita(j, r, c);
                    assert!((b[j][(r, c)] - s * eps).abs() < 1e-12);
                }
            }
        }
    }

    fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
        ((j as f64 - i as f64) * (k as f64 - i as f64) * (k as f64 - j as f64)) / 2.0
    }

    #[test]
    fn gradient_and_divergence() {
        let scalar = rep("D0");
        let vector = rep("D1");
        let grad = solve_intertwiner_space(&scalar, &vector).unwrap();
        assert_eq!(grad.len(), 1);
        let s = grad[0][0][(0, 0)];
        for k in 0..3 {
            for r in 0..3 {
                let want = if r == k { s } else { 0.0 };
                assert!((grad[0][k][(r, 0)] - want).abs() < 1e-12);
            }
        }
        assert_eq!(solve_intertwiner_space(&vector, &scalar).unwrap().len(), 1);
    }

    #[test]
    fn intertwiners_reduce_to_covariance() {
        for name in ["D0+D1", "D1+D1", "Dhalf+Dhalf"] {
            let r = rep(name);
            let a: Vec<DVector<f64>> = solve_cov_space(&r).iter().map(|o| o.vectorized()).collect();
            let b: Vec<DVector<f64>> = solve_intertwiner_space(&r, &r).unwrap().iter().map(|x| vectorize(x)).collect();
            assert!(subspace_distance(&a, &b) < 1e-8, "{name}");
        }
    }

    #[test]
    fn intertwiners_need_a_common_group() {
        let a = Representation::trivial(GroupSpec::so(3).unwrap(), 1).unwrap();
        let b = Representation::trivial(GroupSpec::so(4).unwrap(), 1).unwrap();
        assert!(matches!(solve_intertwiner_space::<f64>(&a, &b), Err(Error::IncompatibleReps(_))));
    }

    #[test]
    fn commutants() {
        let m = commutant_mass_terms(&rep("D0+D1"));
        assert_eq!(m.len(), 2);
        let blocks = [
            DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0])),
            DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 1.0, 1.0, 1.0])),
        ];
        let span: Vec<DVector<f64>> = m.iter().map(|x| DVector::from_column_slice(x.as_slice())).collect();
        for b in &blocks {
            let v = DVector::from_column_slice(b.as_slice());
            assert!(projection_residual(&(v.clone() / v.norm()), &span) < 1e-10);
        }
        let m11 = commutant_mass_terms(&rep("D1+D1"));
        let span: Vec<DVector<f64>> = m11.iter().map(|x| DVector::from_column_slice(x.as_slice())).collect();
        let target = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 2.0, 2.0, 5.0, 5.0, 5.0]));
        let v = DVector::from_column_slice(target.as_slice());
        assert!(projection_residual(&(v.clone() / v.norm()), &span) < 1e-10);
        assert_eq!(commutant_mass_terms(&rep("D0")).len(), 1);
    }

    #[test]
    fn global_covariance_and_perturbation() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for name in ["D1", "D0+D1", "D1+D1", "Dhalf+Dhalf"] {
            for op in solve_cov_space(&rep(name)) {
                for _ in 0..50 {
                    let c: Vec<f64> = (0..3).map(|_| rng.random_range(-3.0..3.0)).collect();
                    assert!(check_covariance_global(&op, &c).unwrap() < 1e-7, "{name}");
                }
            }
        }
        let r = rep("D0+D1");
        let zero = CovOperator::new_unchecked(r.clone(), vec![DMatrix::zeros(4, 4); 3], DMatrix::zeros(4, 4)).unwrap();
        assert_eq!(check_covariance_global(&zero, &[0.3, -0.2, 1.1]).unwrap(), 0.0);
        let mut b = solve_cov_space(&r)[0].b().to_vec();
        b[0][(1, 2)] += 0.1;
        let bent = CovOperator::new_unchecked(r, b, DMatrix::zeros(4, 4)).unwrap();
        assert!(check_covariance_global(&bent, &[0.3, -0.2, 1.1]).unwrap() > 1e-3);
    }

    #[test]
    fn vector_doublet_has_no_reflection_covariant_member() {
        let r = rep("D1+D1");
        for sign in [1.0, -1.0] {
            let refl = r.reflection().unwrap() * sign;
            assert!(reflection_covariant_subspace(&r, &refl).is_empty());
        }
    }

    #[test]
    fn rejects_non_involution() {
        let op = &solve_cov_space(&rep("D1"))[0];
        let r = DMatrix::identity(3, 3) * 2.0;
        assert!(matches!(check_reflection_covariance(op, &r), Err(Error::InvalidReflection(_))));
    }

    #[test]
    fn transposed_basis_stays_in_span() {
        for name in ["D0+D1", "D1+D1", "Dhalf+Dhalf"] {
            let basis = solve_cov_space(&rep(name));
            let span: Vec<DVector<f64>> = basis.iter().map(|o| o.vectorized()).collect();
            for op in &basis {
                let t: Vec<DMatrix<f64>> = op.b().iter().map(|m| m.transpose()).collect();
                assert!(projection_residual(&vectorize(&t), &span) < 1e-9, "{name}");
            }
        }
    }

    fn random_orthogonal(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        a.qr().q()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn dimension_invariant_under_conjugation(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for (name, dim) in [("D0+D1", 3), ("D1+D1", 4), ("Dhalf+Dhalf", 4)] {
                let r = rep(name);
                let q = random_orthogonal(r.dim(), &mut rng);
                let conj = Arc::new(r.conjugated(&q).unwrap());
                prop_assert_eq!(solve_cov_space(&conj).len(), dim);
            }
        }
    }
}
