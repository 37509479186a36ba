use std::f64::consts::{E, PI};

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::levynoise::{Atom, NoiseSpec};
use crate::models3d::ModelParams;

fn lat(l: usize, a: f64) -> LatticeConfig {
    LatticeConfig::new(3, l, a).unwrap()
}

fn higgs() -> CovOperator<f64> {
    ModelParams::Higgs3 { a: 1.0, b: 0.7, c: 0.0, m0: 1.5, m1: 1.2 }.build().unwrap()
}

fn yukawa(m: f64, r: f64) -> f64 {
    (-m * r).exp() / (4.0 * PI * r)
}

#[test]
fn difference_map_examples() {
    let f = |x: &[Vec<f64>]| x[1].iter().zip(&x[0]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let fd = difference_map(f);
    assert!((fd(&[vec![5.0, -2.0], vec![3.0, 4.0]]) - 5.0).abs() < 1e-15);
    let pts = vec![vec![0.1, 2.0], vec![0.4, -1.0], vec![1.5, 0.0]];
    let vars = to_difference(&pts);
    assert!(vars[1..].iter().all(|xi| xi[0] > 0.0));
    for (a, b) in from_difference(&vars).iter().flatten().zip(pts.iter().flatten()) {
        assert!((a - b).abs() < 1e-15);
    }
}

proptest! {
    #[test]
    fn difference_map_round_trip(pts in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 3), 1..6)) {
        let g = |x: &[Vec<f64>]| x.iter().enumerate().map(|(i, v)| (i as f64 + 1.0) * v.iter().sum::<f64>()).sum::<f64>();
        let direct = g(&pts);
        let via = difference_map(g)(&to_difference(&pts));
        prop_assert!((direct - via).abs() < 1e-12 * (1.0 + direct.abs()));
    }
}

#[test]
fn fl_transform_of_indicator() {
    let f = HalfSpaceSamples::from_fn(1e-3, 1001, 0, 1, 1.0, |_, _| C::new(1.0, 0.0));
    let v = fl_transform(&f, 1.0, &[]).unwrap();
    assert!((v.re - (1.0 - (-1.0f64).exp())).abs() < 1e-6 && v.im.abs() < 1e-15);
    let zero = HalfSpaceSamples::from_fn(0.1, 10, 1, 4, 0.5, |_, _| ZERO);
    assert_eq!(fl_transform(&zero, 0.3, &[1.0]).unwrap(), ZERO);
    assert!(matches!(fl_transform(&f, -0.1, &[]), Err(Error::OutOfDomain(_))));
}

#[test]
fn fl_transform_properties() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut field = || {
        let c: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        HalfSpaceSamples::from_fn(0.05, 40, 2, 4, 0.7, move |t, x| C::new(c[0] * (-t).exp() + c[1] * x[0], c[2] * x[1] * t))
    };
    let (f, g) = (field(), field());
    let q = [0.4, -1.1];
    let sum = HalfSpaceSamples { values: f.values.iter().zip(&g.values).map(|(a, b)| a + b * 2.0).collect(), ..f.clone() };
    let lin = fl_transform(&sum, 0.8, &q).unwrap() - fl_transform(&f, 0.8, &q).unwrap() - fl_transform(&g, 0.8, &q).unwrap() * 2.0;
    assert!(lin.norm() < 1e-12);
    for q0 in [0.0, 0.5, 3.0] {
        assert!(fl_transform(&f, q0, &q).unwrap().norm() <= f.l1_norm() + 1e-12);
    }
    // q0 = 0 is the plain Fourier transform over the half-space
    let plain: C = f
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let (k, s) = (i / 16, i % 16);
            let x = [0.7 * (s / 4) as f64, 0.7 * (s % 4) as f64];
            let w = if k == 0 || k == 39 { 0.5 } else { 1.0 } * 0.05 * 0.49;
            v * C::from_polar(w, q[0] * x[0] + q[1] * x[1])
        })
        .sum();
    assert!((fl_transform(&f, 0.0, &q).unwrap() - plain).norm() < 1e-12);
}

#[test]
fn regulator_is_one_on_shells() {
    let masses2 = [0.64, 1.7, 3.1];
    for mult in [1, 2] {
        let reg = ShellRegulator::new(0.05, &masses2, mult);
        for &m2 in &masses2 {
            assert!((reg.eval(-m2) - 1.0).abs() < 1e-12);
            if mult == 2 {
                let h = 1e-5;
                let slope = (reg.eval(-m2 + h) - reg.eval(-m2 - h)) / (2.0 * h);
                assert!(slope.abs() < 1e-7, "slope {slope}");
            }
        }
        assert!(reg.eval(1000.0).abs() < 1e-12);
    }
    let single = ShellRegulator::new(0.1, &[2.0], 1);
    assert!((single.eval(3.0) - (-0.5f64).exp()).abs() < 1e-15);
}

#[test]
fn klein_gordon_kernel() {
    let k = GreenModel::klein_gordon(1.3).kernel().unwrap();
    let terms: Vec<_> = k.terms(0, 0).collect();
    assert_eq!(terms.len(), 1);
    assert!(terms[0].anum.is_zero());
    assert_eq!(terms[0].bnum.coeff(&[0, 0]), C::new(1.0, 0.0));
    let (w, m) = &k.shell_weights(&[0.3, 0.4], 1.0)[0];
    assert!((w - (0.25f64 + 1.69).sqrt()).abs() < 1e-15);
    assert!((m[(0, 0)].re - 0.5 / w).abs() < 1e-15);
}

#[test]
fn higgs_kernel_structure() {
    let op = higgs();
    let k = wightman_kernel_from_green(&op).unwrap();
    // det = m1^2 (ab s + m0 m1): the transverse vector modes carry no shell
    let expected = 1.5 * 1.2 / 0.7;
    assert_eq!(k.masses2().len(), 1);
    assert!((k.masses2()[0] - expected).abs() < 1e-9 * expected);
    assert!(k.is_forward());
    for a in 0..4 {
        for b in 0..4 {
            assert!(k.terms(a, b).count() <= 1);
        }
    }
    // contact part: 1 / m1 on spatial vector components only
    for (i, want) in [(0, 0.0), (1, 0.0), (2, 1.0 / 1.2), (3, 1.0 / 1.2)] {
        assert!((k.contact()[(i, i)].re - want).abs() < 1e-9, "{i}: {}", k.contact()[(i, i)]);
    }
    // the kernel reassembles the Green function through p0-integration
    let p = [0.7, -0.2, 0.4];
    let g = GreenModel::Operator(op).green_at(&p).unwrap();
    let mut rebuilt = k.contact().clone();
    for a in 0..4 {
        for b in 0..4 {
            for t in k.terms(a, b) {
                rebuilt[(a, b)] += t.eval(&p);
            }
        }
    }
    assert!((rebuilt - g).norm() < 1e-10);
}

#[test]
fn kernel_has_positive_energy_support() {
    let k = wightman_kernel_from_green(&higgs()).unwrap();
    // a test function supported at p0 < 0 sees nothing
    let m = k.pair(&[0.3, 0.1], |p0| if p0 < 0.0 { C::new(1.0, 0.0) } else { ZERO });
    assert!(m.iter().all(|z| *z == ZERO));
    let shells = k.shell_weights(&[0.3, 0.1], 1.0);
    let m_min = k.masses2()[0].sqrt();
    assert!(shells.iter().all(|(w, _)| *w >= m_min));
}

#[test]
fn repeated_masses_rejected() {
    let op = ModelParams::proca(1.0).build().unwrap();
    assert!(matches!(wightman_kernel_from_green(&op), Err(Error::RepeatedMass(_))));
}

#[test]
fn fl_green_klein_gordon() {
    let model = GreenModel::klein_gordon(1.0);
    let x = [1.0, 0.0, 0.0];
    let fine = verify_fl_green(&model, &x, &lat(64, 0.2)).unwrap();
    assert!((fine.rhs[(0, 0)].re - yukawa(1.0, 1.0)).abs() < 1e-9, "{}", fine.rhs[(0, 0)]);
    assert!(fine.residual < FL_GREEN_TOL, "{}", fine.residual);
    let coarse = verify_fl_green(&model, &x, &lat(32, 0.4)).unwrap();
    assert!(coarse.residual > fine.residual, "{} vs {}", coarse.residual, fine.residual);
    // off-axis point
    let y = [0.8, 0.5, -0.3];
    let r = verify_fl_green(&model, &y, &lat(64, 0.2)).unwrap();
    let dist = (0.64f64 + 0.25 + 0.09).sqrt();
    assert!((r.rhs[(0, 0)].re - yukawa(1.0, dist)).abs() < 1e-9);
}

#[test]
fn fl_green_higgs() {
    let model = GreenModel::Operator(higgs());
    let x = [1.5, 0.0, 0.0];
    let fine = verify_fl_green(&model, &x, &lat(64, 0.2)).unwrap();
    assert!(fine.residual < FL_GREEN_TOL, "{}", fine.residual);
    let coarse = verify_fl_green(&model, &x, &lat(32, 0.4)).unwrap();
    assert!(coarse.residual > fine.residual, "{} vs {}", coarse.residual, fine.residual);
    let skew = verify_fl_green(&model, &[1.3, 0.6, 0.4], &lat(64, 0.2)).unwrap();
    assert!(skew.residual < FL_GREEN_TOL, "{}", skew.residual);
}

#[test]
fn green_decays_with_lightest_mass() {
    let kernel = GreenModel::Operator(higgs()).kernel().unwrap();
    let at = |t: f64| kernel.laplace_fourier(&[t, 0.0, 0.0]).unwrap().value.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let m_min = kernel.masses2()[0].sqrt();
    let rate = (at(6.0) / at(8.0)).ln() / 2.0;
    assert!(rate > m_min / 2.0 && rate < 2.0 * m_min, "rate {rate}, m_min {m_min}");
    let kg = GreenModel::klein_gordon(0.7);
    let lattice = lat(64, 0.25);
    let (g2, g4) = (
        verify_fl_green(&kg, &[2.0, 0.0, 0.0], &lattice).unwrap(),
        verify_fl_green(&kg, &[4.0, 0.0, 0.0], &lattice).unwrap(),
    );
    for (a, b) in [(g2.lhs[(0, 0)].re, g4.lhs[(0, 0)].re), (g2.rhs[(0, 0)].re, g4.rhs[(0, 0)].re)] {
        let ratio = (a / b) / (2.0 * 0.7f64).exp();
        assert!(ratio > 0.5 && ratio < 2.0 * 2.0, "ratio {ratio}");
    }
}

#[test]
fn conv_identity2_reference_value() {
    let one = C::new(1.0, 0.0);
    let r = conv_identity2(one, one, 0.0, 1.0).unwrap();
    assert!((r.rhs.re - 2.0 / E).abs() < 1e-14);
    assert!((r.lhs.re - 2.0 / E).abs() < 1e-10);
}

#[test]
fn conv_identity2_limits_and_symmetry() {
    let (z1, z2) = (C::new(0.7, 0.3), C::new(2.1, -1.2));
    let a = conv_identity2(z1, z2, -0.5, 1.0).unwrap();
    let b = conv_identity2(z2, z1, -0.5, 1.0).unwrap();
    assert!((a.rhs - b.rhs).norm() < 1e-14);
    let tiny = conv_identity2(z1, z2, 0.0, 1e-9).unwrap();
    assert!((tiny.rhs - 2.0 / (z1 + z2)).norm() < 1e-8);
    assert!(tiny.residual < 1e-8);
    assert!(matches!(conv_identity2(C::new(-0.1, 0.0), z2, 0.0, 1.0), Err(Error::OutOfDomain(_))));
    assert!(matches!(conv_identity2(z1, z2, 1.0, 1.0), Err(Error::OutOfDomain(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn conv_identity2_random(r1 in 0.1f64..10.0, r2 in 0.1f64..10.0, i1 in -3.0f64..3.0, i2 in -3.0f64..3.0, t1 in -2.0f64..2.0, dt in 0.01f64..4.0) {
        let rep = conv_identity2(C::new(r1, i1), C::new(r2, i2), t1, t1 + dt).unwrap();
        prop_assert!(rep.residual < 1e-8, "{:?}", rep);
    }

    #[test]
    fn conv_identity_n_random(n in 1usize..=5, seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let zetas: Vec<C> = (0..n).map(|_| C::new(rng.random_range(0.1..10.0), rng.random_range(-3.0..3.0))).collect();
        let mut t = rng.random_range(-1.0..1.0);
        let ts: Vec<f64> = (0..n).map(|_| { t += rng.random_range(0.05..2.0); t }).collect();
        let rep = conv_identity_n(&zetas, &ts).unwrap();
        prop_assert!(rep.residual < 1e-7, "{:?}", rep);
    }
}

#[test]
fn conv_identity_n_cases() {
    let one = C::new(1.0, 0.0);
    let (z1, z2) = (C::new(0.4, 1.0), C::new(3.0, -0.5));
    let two = conv_identity_n(&[z1, z2], &[0.2, 1.7]).unwrap();
    assert!((two.rhs - conv_identity2(z1, z2, 0.2, 1.7).unwrap().rhs).norm() < 1e-15);
    let three = conv_identity_n(&[one, one, one], &[0.0, 1.0, 2.0]).unwrap();
    assert!(three.residual < 1e-7);
    // equal unit rates: 2 e^{-3} / 3 from the half-lines, e^{-2} - e^{-3} from each gap
    assert!((three.rhs.re - (2.0 * (-2.0f64).exp() - 4.0 / 3.0 * (-3.0f64).exp())).abs() < 1e-14);
    let wide = conv_identity_n(&[C::new(0.5, 0.0); 4], &[0.0, 10.0, 20.0, 30.0]).unwrap();
    assert!(wide.residual < 1e-7, "{wide:?}");
}

#[test]
fn schwinger_klein_gordon() {
    let m = 1.0;
    let model = GreenModel::klein_gordon(m);
    let w = DMatrix::identity(1, 1);
    let y1 = [0.0, 0.0, 0.0];
    let y2 = [1.0, 0.3, 0.0];
    let r = (1.09f64).sqrt();
    let fine = schwinger_fl_check(&model, &w, &y1, &y2, &lat(64, 0.2)).unwrap();
    let oracle = (-m * r).exp() / (8.0 * PI * m);
    assert!((fine.reconstructed[(0, 0)].re - oracle).abs() < 1e-8 * oracle, "{}", fine.reconstructed[(0, 0)]);
    assert!((fine.direct[(0, 0)].re - oracle).abs() < 1e-3 * oracle, "{}", fine.direct[(0, 0)]);
    assert!(fine.residual < SCHWINGER_TOL);
    let coarse = schwinger_fl_check(&model, &w, &y1, &y2, &lat(32, 0.4)).unwrap();
    assert!(coarse.residual > fine.residual, "{} vs {}", coarse.residual, fine.residual);
}

#[test]
fn schwinger_higgs() {
    let model = GreenModel::Operator(higgs());
    let w = DMatrix::identity(4, 4);
    let rep = schwinger_fl_check(&model, &w, &[0.0, 0.0, 0.0], &[2.0, 0.0, 0.3], &lat(64, 0.2)).unwrap();
    assert!(rep.residual < SCHWINGER_TOL, "{}", rep.residual);
}

#[test]
fn two_point_exchange_is_transpose() {
    let model = GreenModel::Operator(higgs());
    let w = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.5, 0.5, 0.5]));
    let l = lat(32, 0.3);
    let d = [0.9, 0.3, -0.2];
    let back: Vec<f64> = d.iter().map(|v| -v).collect();
    let a = regulated_two_point(&model, &w, &d, &l).unwrap();
    let b = regulated_two_point(&model, &w, &back, &l).unwrap();
    assert!((a.transpose() - b).norm() < 1e-10 * a.norm());
}

/// Pure Poisson noise with one symmetric atom pair: the positive-time
/// two-point function is the Laplace–Fourier integral of the kernel.
#[test]
fn poisson_two_point_has_fl_representation() {
    let alpha = DVector::from_vec(vec![0.6, 0.3, -0.2, 0.5]);
    let spec = NoiseSpec::new(
        DMatrix::zeros(4, 4),
        vec![Atom { weight: 1.5, alpha: alpha.clone() }, Atom { weight: 1.5, alpha: -alpha }],
    )
    .unwrap();
    let models = [higgs(), ModelParams::Higgs3 { a: 0.8, b: 1.3, c: 0.0, m0: 0.9, m1: 1.4 }.build().unwrap()];
    for op in models {
        let model = GreenModel::Operator(op);
        assert!(model.kernel().unwrap().masses2().len() >= 1);
        let rep = schwinger_fl_check(&model, &spec.second_moment(), &[0.0; 3], &[2.0, 0.0, 0.0], &lat(32, 0.3)).unwrap();
        assert!(rep.residual < SCHWINGER_TOL, "{}", rep.residual);
    }
}

#[test]
fn kernels_continuous_towards_massless() {
    let x = [1.0, 0.0, 0.0];
    let lattice = lat(64, 0.2);
    let reports: Vec<FlGreenReport> = [0.5, 0.1, 0.02]
        .iter()
        .map(|&m| {
            let op = ModelParams::Higgs3 { a: 1.0, b: 0.5, c: 0.0, m0: m, m1: m }.build().unwrap();
            verify_fl_green(&GreenModel::Operator(op), &x, &lattice).unwrap()
        })
        .collect();
    for r in &reports {
        assert!(r.rhs.iter().all(|z| z.re.is_finite() && z.im.is_finite()));
        assert!(r.residual.is_finite() && r.residual < 1.0, "{}", r.residual);
    }
    let scalar: Vec<f64> = reports.iter().map(|r| r.rhs[(0, 1)].norm()).collect();
    assert!((scalar[2] - scalar[1]).abs() < (scalar[1] - scalar[0]).abs(), "{scalar:?}");
}


