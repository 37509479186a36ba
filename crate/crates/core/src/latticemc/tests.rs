use std::sync::Arc;

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::models3d::ModelParams;
use crate::repcore::{build_catalog, CatalogRep};

fn lat(d: usize, l: usize, a: f64) -> LatticeConfig {
    LatticeConfig::new(d, l, a).unwrap()
}

fn scalar_op(m: f64) -> CovOperator<f64> {
    let rep = Arc::new(build_catalog::<f64>(CatalogRep::D0).unwrap());
    CovOperator::new(rep, vec![DMatrix::zeros(1, 1); 3], DMatrix::from_element(1, 1, m)).unwrap()
}

fn higgs() -> CovOperator<f64> {
    ModelParams::Higgs3 { a: 1.0, b: 0.7, c: 0.0, m0: 1.2, m1: 0.8 }.build().unwrap()
}

fn pair_noise(n: usize, lambda: f64, alpha: Vec<f64>) -> NoiseSpec {
    NoiseSpec::symmetric_pairs(DMatrix::identity(n, n), &[(lambda, alpha)]).unwrap()
}

fn random_field(lattice: LatticeConfig, n: usize, seed: u64) -> FieldSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vals = (0..lattice.sites() * n).map(|_| rng.random_range(-1.0..1.0)).collect();
    FieldSample::from_values(lattice, n, vals, FieldKind::Noise).unwrap()
}

#[test]
fn mass_operator_divides_noise() {
    let l = lat(3, 4, 0.5);
    let eta = random_field(l, 1, 3);
    let phi = solve_spde(&scalar_op(2.5), &eta).unwrap();
    for (p, e) in phi.values.iter().zip(&eta.values) {
        assert!((p - e / 2.5).abs() < 1e-13);
    }
    assert_eq!(phi.kind, FieldKind::Solution);
}

#[test]
fn zero_noise_gives_zero_field() {
    let l = lat(3, 4, 0.5);
    let phi = solve_spde(&higgs(), &FieldSample::zeros(l, 4, FieldKind::Noise)).unwrap();
    assert!(phi.is_zero());
}

#[test]
fn solver_rejects_mismatches() {
    let l = lat(3, 4, 0.5);
    assert!(matches!(solve_spde(&higgs(), &random_field(l, 1, 0)), Err(Error::DimensionMismatch(_))));
    let bad = ModelParams::Higgs3 { a: 1.0, b: 1.0, c: 0.5, m0: 1.0, m1: 1.0 }.build().unwrap();
    assert!(matches!(SpdeSolver::new(&bad, l), Err(Error::NotInvertible(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn round_trip_recovers_noise(seed in 0u64..1000, a in 0.3f64..1.5, b in 0.3f64..1.5, m0 in 0.3f64..1.5, m1 in 0.3f64..1.5) {
        let op = ModelParams::Higgs3 { a, b, c: 0.0, m0, m1 }.build().unwrap();
        let l = lat(3, 6, 0.4);
        let solver = SpdeSolver::new(&op, l).unwrap();
        let eta = random_field(l, 4, seed);
        let phi = solver.solve(&eta).unwrap();
        prop_assert!(solver.residual(&phi, &eta).unwrap() < 1e-16);
    }

    #[test]
    fn solve_is_linear(seed in 0u64..1000, c in -2.0f64..2.0) {
        let l = lat(3, 4, 0.5);
        let solver = SpdeSolver::new(&higgs(), l).unwrap();
        let (x, y) = (random_field(l, 4, seed), random_field(l, 4, seed + 1));
        let lhs = solver.solve(&x.add(&y, c)).unwrap();
        let rhs = solver.solve(&x).unwrap().add(&solver.solve(&y).unwrap(), c);
        prop_assert!(lhs.add(&rhs, -1.0).norm2() < 1e-20 * (1.0 + lhs.norm2()));
    }
}

#[test]
fn mc_entry_z_scores() {
    assert_eq!(McEntry::new("x", 1.0, 0.0, 1.0).z, 0.0);
    assert!(McEntry::new("x", 1.5, 0.0, 1.0).z.is_infinite());
    assert!((McEntry::new("x", 1.5, 0.25, 1.0).z - 2.0).abs() < 1e-15);
}

#[test]
fn too_few_samples_rejected() {
    let l = lat(3, 4, 0.5);
    let spec = NoiseSpec::gaussian(DMatrix::identity(1, 1)).unwrap();
    let r = empirical_two_point(&scalar_op(1.0), &spec, l, &two_point_probes(&l, 1), 10, 0);
    assert!(matches!(r, Err(Error::Invalid(_))));
}

#[test]
fn mass_operator_two_point_is_contact() {
    let (m, l) = (1.5, lat(3, 4, 0.5));
    let spec = NoiseSpec::gaussian(DMatrix::identity(1, 1)).unwrap();
    let probes = two_point_probes(&l, 1);
    let report = empirical_two_point(&scalar_op(m), &spec, l, &probes, 2000, 11).unwrap();
    for (p, e) in probes.iter().zip(&report.entries) {
        let expected = if p.x == p.y { 1.0 / (m * m * l.cell()) } else { 0.0 };
        assert!((e.target - expected).abs() < 1e-12, "{e:?}");
    }
    assert!(report.passes(5.0), "{report:?}");
}

#[test]
fn char_functional_matches_analytic() {
    let l = lat(3, 4, 0.5);
    let spec = pair_noise(1, 2.0, vec![0.8]);
    let f = FieldSample::from_scalar(l, 1, 0, |c| 0.6 * (-((c[0] as f64 - 1.5).powi(2)) / 2.0).exp());
    let g = f.scaled(-1.7);
    let report = empirical_char_functional(&scalar_op(1.0), &spec, &[f, g], 4000, 5).unwrap();
    assert_eq!(report.entries.len(), 4);
    assert!(report.passes(5.0), "{report:?}");
}

#[test]
fn higgs_moments_agree() {
    let l = lat(3, 4, 0.6);
    let spec = pair_noise(4, 1.5, vec![0.5, 0.4, 0.0, -0.3]);
    let probes = moment_probes(&l, 4);
    let report = empirical_moments(&higgs(), &spec, &probes, 4000, 21).unwrap();
    assert_eq!(report.entries.len(), 10);
    assert!(report.passes(5.0), "{report:?}");
}

#[test]
fn stderr_shrinks_with_samples() {
    let l = lat(3, 4, 0.5);
    let spec = NoiseSpec::gaussian(DMatrix::identity(4, 4)).unwrap();
    let probes = two_point_probes(&l, 4);
    let small = empirical_two_point(&higgs(), &spec, l, &probes, 500, 1).unwrap();
    let large = empirical_two_point(&higgs(), &spec, l, &probes, 2000, 1).unwrap();
    let ratio: f64 = small.entries.iter().zip(&large.entries).map(|(s, g)| s.stderr / g.stderr).sum::<f64>() / probes.len() as f64;
    assert!((ratio - 2.0).abs() < 0.2, "ratio {ratio}");
}

#[test]
fn identity_symmetry_is_exact() {
    let op = higgs();
    let l = lat(3, 4, 0.5);
    let sym = LatticeSymmetry::new(&op, DMatrix::identity(3, 3)).unwrap();
    let spec = NoiseSpec::gaussian(DMatrix::identity(4, 4)).unwrap();
    let report = covariance_transform_check(&op, &spec, l, &sym, &transform_probes(&l), 200, 2).unwrap();
    assert!(report.entries.iter().all(|e| e.estimate == 0.0 && e.z == 0.0));
}

#[test]
fn unsupported_symmetries_rejected() {
    let op = higgs();
    let reflection = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-1i64, 1, 1]));
    assert!(matches!(LatticeSymmetry::new(&op, reflection), Err(Error::UnsupportedSymmetry(_))));
    let shear = DMatrix::from_row_slice(3, 3, &[1i64, 1, 0, 0, 1, 0, 0, 0, 1]);
    assert!(matches!(LatticeSymmetry::new(&op, shear), Err(Error::UnsupportedSymmetry(_))));
}

#[test]
fn quarter_turn_tau_intertwines_symbol() {
    let op = higgs();
    for (j, k) in [(0, 1), (0, 2), (1, 2)] {
        let sym = LatticeSymmetry::quarter_turn(&op, j, k).unwrap();
        let g = sym.g.map(|x| x as f64);
        let tau = sym.tau.map(|x| num_complex::Complex64::new(x, 0.0));
        let p = [0.3, -0.7, 1.1];
        let gp: Vec<f64> = (0..3).map(|i| (0..3).map(|m| g[(i, m)] * p[m]).sum()).collect();
        let lhs = crate::spectral::symbol_at(&op, &gp);
        let rhs = &tau * crate::spectral::symbol_at(&op, &p) * tau.transpose();
        assert!((lhs - rhs).norm() < 1e-12, "plane ({j},{k})");
    }
}

#[test]
fn quarter_turn_covariance_holds() {
    let op = higgs();
    let l = lat(3, 6, 0.5);
    let sym = LatticeSymmetry::quarter_turn(&op, 1, 2).unwrap();
    let spec = NoiseSpec::gaussian(DMatrix::identity(4, 4)).unwrap();
    let report = covariance_transform_check(&op, &spec, l, &sym, &transform_probes(&l), 1000, 4).unwrap();
    assert!(report.passes(5.0), "{report:?}");
}

#[test]
fn anisotropic_noise_breaks_covariance() {
    let op = higgs();
    let l = lat(3, 6, 0.5);
    let sym = LatticeSymmetry::quarter_turn(&op, 1, 2).unwrap();
    let spec = NoiseSpec::gaussian(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 1.0, 4.0, 1.0]))).unwrap();
    let report = covariance_transform_check(&op, &spec, l, &sym, &transform_probes(&l), 1000, 4).unwrap();
    assert!(report.max_abs_z > 10.0, "{}", report.max_abs_z);
}

/// Smeared two-point functions at fixed physical volume settle as the
/// spacing shrinks.
#[test]
fn refinement_converges() {
    let op = higgs();
    let spec = NoiseSpec::gaussian(DMatrix::identity(4, 4)).unwrap();
    let size = 4.0;
    let values: Vec<f64> = [8usize, 16, 32]
        .iter()
        .map(|&n| {
            let l = lat(3, n, size / n as f64);
            let bump = |center: [f64; 3], comp: usize| {
                FieldSample::from_scalar(l, 4, comp, |c| {
                    let r2: f64 = (0..3).map(|j| (c[j] as f64 * l.a - center[j]).powi(2)).sum();
                    (-r2 / (2.0 * 0.36)).exp()
                })
            };
            let f = bump([2.0, 2.0, 2.0], 1);
            let g = bump([2.5, 2.0, 2.0], 1);
            solution_moments(&op, &spec, &[f, g]).unwrap()
        })
        .collect();
    let (d1, d2) = ((values[1] - values[0]).abs(), (values[2] - values[1]).abs());
    assert!(d2 < 0.5 * d1, "{values:?}");
}
