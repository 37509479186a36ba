//! Adaptive 7/15-point Gauss–Kronrod quadrature for vector-valued complex
//! integrands.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
// Gauss weights sit on the odd Kronrod nodes.
const WG: [f64; 4] = [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Self {
        Self { abs, rel }
    }
}

#[derive(Debug, Clone)]
pub struct QuadResult {
    pub value: Vec<Complex64>,
    /// Sum of the per-interval Kronrod–Gauss differences, max-norm.
    pub error: f64,
    pub intervals: usize,
    pub converged: bool,
}

struct Piece {
    a: f64,
    b: f64,
    value: Vec<Complex64>,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn max_norm(v: &[Complex64]) -> f64 {
    v.iter().fold(0.0, |m, z| m.max(z.norm()))
}

fn rule<F: Fn(f64) -> Vec<Complex64>>(f: &F, a: f64, b: f64) -> Piece {
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    let centre = f(c);
    let k = centre.len();
    let mut kron: Vec<Complex64> = centre.iter().map(|z| z * WGK[7]).collect();
    let mut gauss: Vec<Complex64> = centre.iter().map(|z| z * WG[3]).collect();
    for (j, (&x, &w)) in XGK[..7].iter().zip(&WGK[..7]).enumerate() {
        let (lo, hi) = (f(c - h * x), f(c + h * x));
        for i in 0..k {
            let s = lo[i] + hi[i];
            kron[i] += s * w;
            if j % 2 == 1 {
                gauss[i] += s * WG[j / 2];
            }
        }
    }
    let value: Vec<Complex64> = kron.iter().map(|z| z * h).collect();
    let error = kron.iter().zip(&gauss).fold(0.0f64, |m, (x, y)| m.max(((x - y) * h).norm()));
    Piece { a, b, value, error }
}

/// Bisects the worst interval until the error estimate meets `tol` or
/// `max_intervals` is reached.
pub fn integrate<F: Fn(f64) -> Vec<Complex64>>(f: F, a: f64, b: f64, tol: Tolerance, max_intervals: usize) -> QuadResult {
    let first = rule(&f, a, b);
    let mut total = first.value.clone();
    let mut error = first.error;
    let mut heap = BinaryHeap::from([first]);
    while error > tol.abs.max(tol.rel * max_norm(&total)) && heap.len() < max_intervals {
        let worst = heap.pop().expect("non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        let (l, r) = (rule(&f, worst.a, mid), rule(&f, mid, worst.b));
        for i in 0..total.len() {
            total[i] += l.value[i] + r.value[i] - worst.value[i];
        }
        error += l.error + r.error - worst.error;
        heap.push(l);
        heap.push(r);
    }
    // re-sum to shed the drift of the running updates
    let mut value = vec![Complex64::new(0.0, 0.0); total.len()];
    let mut err = 0.0;
    for p in &heap {
        for (v, x) in value.iter_mut().zip(&p.value) {
            *v += x;
        }
        err += p.error;
    }
    let converged = err <= tol.abs.max(tol.rel * max_norm(&value));
    QuadResult { value, error: err, intervals: heap.len(), converged }
}

pub fn integrate_scalar<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64, tol: Tolerance, max_intervals: usize) -> (Complex64, f64) {
    let r = integrate(|x| vec![f(x)], a, b, tol, max_intervals);
    (r.value[0], r.error)
}
