//! Realification data for the three-dimensional catalog.
//!
//! A complex representation with Hermitian spin generators `J_x, J_y, J_z`
//! becomes real after the change of basis `E`: the real generator attached
//! to axis `l` is `Re(E (-i J_l) E^dagger)`.

use nalgebra::DMatrix;
use num_complex::Complex64;

const H: f64 = std::f64::consts::FRAC_1_SQRT_2;

fn cm(rows: usize, cols: usize, data: &[(f64, f64)]) -> DMatrix<Complex64> {
    DMatrix::from_row_iterator(rows, cols, data.iter().map(|&(re, im)| Complex64::new(re, im)))
}

/// Spin-1 generators in the basis m = +1, 0, -1.
pub fn spin_one() -> [DMatrix<Complex64>; 3] {
    let z = (0.0, 0.0);
    let x = cm(3, 3, &[z, (H, 0.0), z, (H, 0.0), z, (H, 0.0), z, (H, 0.0), z]);
    let y = cm(3, 3, &[z, (0.0, -H), z, (0.0, H), z, (0.0, -H), z, (0.0, H), z]);
    let zz = cm(3, 3, &[(1.0, 0.0), z, z, z, z, z, z, z, (-1.0, 0.0)]);
    [x, y, zz]
}

/// Spin-1/2 generators sigma/2.
pub fn spin_half() -> [DMatrix<Complex64>; 3] {
    let z = (0.0, 0.0);
    [
        cm(2, 2, &[z, (0.5, 0.0), (0.5, 0.0), z]),
        cm(2, 2, &[z, (0.0, -0.5), (0.0, 0.5), z]),
        cm(2, 2, &[(0.5, 0.0), z, z, (-0.5, 0.0)]),
    ]
}

pub fn spin_zero() -> [DMatrix<Complex64>; 3] {
    [DMatrix::zeros(1, 1), DMatrix::zeros(1, 1), DMatrix::zeros(1, 1)]
}

pub fn block_diag_c(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let (ra, rb) = (a.nrows(), b.nrows());
    let mut out = DMatrix::zeros(ra + rb, ra + rb);
    out.view_mut((0, 0), (ra, ra)).copy_from(a);
    out.view_mut((ra, ra), (rb, rb)).copy_from(b);
    out
}

fn sum_spins(a: &[DMatrix<Complex64>; 3], b: &[DMatrix<Complex64>; 3]) -> [DMatrix<Complex64>; 3] {
    [0, 1, 2].map(|l| block_diag_c(&a[l], &b[l]))
}

/// E for the scalar-plus-vector doublet (spin 0 then spin 1).
pub fn e_scalar_vector() -> DMatrix<Complex64> {
    let z = (0.0, 0.0);
    cm(
        4,
        4,
        &[
            (1.0, 0.0), z, z, z,
            z, (0.0, H), z, (0.0, -H),
            z, (H, 0.0), z, (H, 0.0),
            z, z, (0.0, 1.0), z,
        ],
    )
}

/// E for the vector doublet: the spin-1 block applied to both copies.
pub fn e_vector_vector() -> DMatrix<Complex64> {
    let z = (0.0, 0.0);
    let block = cm(3, 3, &[(0.0, H), z, (0.0, -H), (H, 0.0), z, (H, 0.0), z, (0.0, 1.0), z]);
    block_diag_c(&block, &block)
}

/// E for the spinor doublet (two copies of spin 1/2).
pub fn e_spinor() -> DMatrix<Complex64> {
    let z = (0.0, 0.0);
    cm(
        4,
        4,
        &[
            (H, 0.0), z, z, (H, 0.0),
            (0.0, H), z, z, (0.0, -H),
            z, (H, 0.0), (-H, 0.0), z,
            z, (0.0, H), (0.0, H), z,
        ],
    )
}

/// Real so(3) generators in plane order (0,1), (0,2), (1,2) obtained by
/// realifying the given spin generators with `e`.
///
/// Plane (0,1) rotates about the z axis, (0,2) about -y and (1,2) about -x,
/// which reproduces the defining representation from spin 1.
pub fn realified_generators(e: &DMatrix<Complex64>, spins: &[DMatrix<Complex64>; 3]) -> Vec<DMatrix<f64>> {
    let axes = [(2usize, 1.0), (1, -1.0), (0, -1.0)];
    let minus_i = Complex64::new(0.0, -1.0);
    axes.iter()
        .map(|&(axis, sign)| {
            let x = e * (&spins[axis] * minus_i) * e.adjoint();
            x.map(|z| sign * z.re)
        })
        .collect()
}

/// Largest imaginary part left over by the realification, which must vanish.
pub fn realification_defect(e: &DMatrix<Complex64>, spins: &[DMatrix<Complex64>; 3]) -> f64 {
    let minus_i = Complex64::new(0.0, -1.0);
    spins
        .iter()
        .map(|j| {
            let x = e * (j * minus_i) * e.adjoint();
            x.iter().fold(0.0f64, |m, z| m.max(z.im.abs()))
        })
        .fold(0.0, f64::max)
}

pub fn unitarity_defect(e: &DMatrix<Complex64>) -> f64 {
    let n = e.nrows();
    let prod = e * e.adjoint() - DMatrix::<Complex64>::identity(n, n);
    prod.iter().fold(0.0f64, |m, z| m.max(z.norm()))
}

/// Spin content per catalog entry that needs a realification.
pub fn scalar_vector_spins() -> [DMatrix<Complex64>; 3] {
    sum_spins(&spin_zero(), &spin_one())
}

pub fn vector_vector_spins() -> [DMatrix<Complex64>; 3] {
    sum_spins(&spin_one(), &spin_one())
}

pub fn spinor_spins() -> [DMatrix<Complex64>; 3] {
    sum_spins(&spin_half(), &spin_half())
}
