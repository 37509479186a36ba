//! Real representations of SO(D): generators, group elements, direct sums
//! and reflection images.

pub mod realify;

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{block_diag, commutator, from_row_major, max_abs, to_row_major};
use crate::scalar::{lit, to_f64, tol, Real};

/// The Lie algebra so(D) with its standard plane basis `E_jk - E_kj`, `j < k`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSpec<T: Real> {
    dim: usize,
    planes: Vec<(usize, usize)>,
    generators: Vec<DMatrix<T>>,
}

impl<T: Real> GroupSpec<T> {
    pub fn so(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidDimension(format!("D = {dim}, need D >= 2")));
        }
        let mut planes = Vec::new();
        let mut generators = Vec::new();
        for j in 0..dim {
            for k in j + 1..dim {
                let mut g = DMatrix::zeros(dim, dim);
                g[(j, k)] = T::one();
                g[(k, j)] = -T::one();
                planes.push((j, k));
                generators.push(g);
            }
        }
        Ok(Self { dim, planes, generators })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of generators, D(D-1)/2.
    pub fn count(&self) -> usize {
        self.generators.len()
    }

    pub fn generators(&self) -> &[DMatrix<T>] {
        &self.generators
    }

    pub fn planes(&self) -> &[(usize, usize)] {
        &self.planes
    }

    pub fn plane_index(&self, j: usize, k: usize) -> Option<usize> {
        self.planes.iter().position(|&p| p == (j, k))
    }

    /// Coefficients `c[a][b][g]` with `[L_a, L_b] = sum_g c[a][b][g] L_g`.
    ///
    /// The basis is Frobenius-orthogonal with squared norm 2.
    pub fn structure_constants(&self) -> Vec<Vec<DVector<T>>> {
        let two: T = lit(2.0);
        let l = self.count();
        (0..l)
            .map(|a| {
                (0..l)
                    .map(|b| {
                        let br = commutator(&self.generators[a], &self.generators[b]);
                        DVector::from_iterator(
                            l,
                            self.generators.iter().map(|g| g.component_mul(&br).sum() / two),
                        )
                    })
                    .collect()
            })
            .collect()
    }

    /// Max distance of any commutator from the span of the basis.
    pub fn closure_residual(&self) -> T {
        let c = self.structure_constants();
        let mut worst = T::zero();
        for a in 0..self.count() {
            for b in 0..self.count() {
                let br = commutator(&self.generators[a], &self.generators[b]);
                let rebuilt = self.combine(&c[a][b]);
                worst = worst.max(max_abs(&(br - rebuilt)));
            }
        }
        worst
    }

    fn combine(&self, coeffs: &DVector<T>) -> DMatrix<T> {
        let mut out = DMatrix::zeros(self.dim, self.dim);
        for (g, &c) in self.generators.iter().zip(coeffs.iter()) {
            out += g * c;
        }
        out
    }

    /// Group element `exp(sum_a coeffs_a L_a)`.
    pub fn element(&self, coeffs: &[T]) -> Result<DMatrix<T>> {
        self.check_coeffs(coeffs)?;
        Ok(self.combine(&DVector::from_column_slice(coeffs)).exp())
    }

    fn check_coeffs(&self, coeffs: &[T]) -> Result<()> {
        if coeffs.len() != self.count() {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficients for {} generators",
                coeffs.len(),
                self.count()
            )));
        }
        Ok(())
    }
}

pub fn so_generators<T: Real>(dim: usize) -> Result<GroupSpec<T>> {
    GroupSpec::so(dim)
}

/// A real representation given by the images of the so(D) generators.
#[derive(Debug, Clone, PartialEq)]
pub struct Representation<T: Real> {
    group: GroupSpec<T>,
    dgen: Vec<DMatrix<T>>,
    reflection: Option<DMatrix<T>>,
    label: String,
}

impl<T: Real> Representation<T> {
    /// Validates shapes and the bracket relations.
    pub fn new(group: GroupSpec<T>, dgen: Vec<DMatrix<T>>, label: impl Into<String>) -> Result<Self> {
        if dgen.len() != group.count() {
            return Err(Error::DimensionMismatch(format!(
                "{} generator images for {} generators",
                dgen.len(),
                group.count()
            )));
        }
        let n = dgen.first().map_or(0, |m| m.nrows());
        if n == 0 || dgen.iter().any(|m| m.shape() != (n, n)) {
            return Err(Error::DimensionMismatch("generator images must be equal square matrices".into()));
        }
        let rep = Self { group, dgen, reflection: None, label: label.into() };
        let res = rep.bracket_residual();
        if res > tol(1e-10) {
            return Err(Error::Invalid(format!("bracket relations violated, residual {:e}", to_f64(res))));
        }
        Ok(rep)
    }

    /// Attaches a reflection image after checking that it is an involution.
    pub fn with_reflection(mut self, r: DMatrix<T>) -> Result<Self> {
        if r.shape() != (self.dim(), self.dim()) {
            return Err(Error::DimensionMismatch("reflection image has the wrong shape".into()));
        }
        let res = involution_residual(&r);
        if res > tol(1e-10) {
            return Err(Error::NotAnInvolution(to_f64(res)));
        }
        self.reflection = Some(r);
        Ok(self)
    }

    pub fn trivial(group: GroupSpec<T>, n: usize) -> Result<Self> {
        let dgen = vec![DMatrix::zeros(n, n); group.count()];
        Self::new(group, dgen, if n == 1 { "trivial".to_string() } else { format!("trivial^{n}") })
    }

    pub fn defining(group: GroupSpec<T>) -> Result<Self> {
        let dgen = group.generators().to_vec();
        Self::new(group, dgen, "defining")
    }

    /// Representation dimension N.
    pub fn dim(&self) -> usize {
        self.dgen[0].nrows()
    }

    pub fn group(&self) -> &GroupSpec<T> {
        &self.group
    }

    pub fn dgen(&self) -> &[DMatrix<T>] {
        &self.dgen
    }

    pub fn reflection(&self) -> Option<&DMatrix<T>> {
        self.reflection.as_ref()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn relabel(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Max over generator pairs of `[X_a, X_b] - sum_g c_abg X_g`.
    pub fn bracket_residual(&self) -> T {
        let c = self.group.structure_constants();
        let n = self.dim();
        let mut worst = T::zero();
        for a in 0..self.dgen.len() {
            for b in a + 1..self.dgen.len() {
                let mut rhs = DMatrix::zeros(n, n);
                for (g, x) in self.dgen.iter().enumerate() {
                    rhs += x * c[a][b][g];
                }
                worst = worst.max(max_abs(&(commutator(&self.dgen[a], &self.dgen[b]) - rhs)));
            }
        }
        worst
    }

    /// Sum of `coeffs_a * dtau(L_a)`.
    pub fn algebra_element(&self, coeffs: &[T]) -> Result<DMatrix<T>> {
        self.group.check_coeffs(coeffs)?;
        let n = self.dim();
        Ok(self.dgen.iter().zip(coeffs).fold(DMatrix::zeros(n, n), |acc, (x, &c)| acc + x * c))
    }

    /// `tau(exp(sum coeffs_a L_a)) = exp(sum coeffs_a dtau(L_a))`.
    pub fn exponential(&self, coeffs: &[T]) -> Result<DMatrix<T>> {
        Ok(self.algebra_element(coeffs)?.exp())
    }

    pub fn direct_sum(&self, other: &Self) -> Result<Self> {
        if self.group != other.group {
            return Err(Error::IncompatibleReps(format!(
                "so({}) vs so({})",
                self.group.dim(),
                other.group.dim()
            )));
        }
        let dgen = self.dgen.iter().zip(&other.dgen).map(|(a, b)| block_diag(a, b)).collect();
        let sum = Self::new(self.group.clone(), dgen, format!("{}+{}", self.label, other.label))?;
        match (&self.reflection, &other.reflection) {
            (Some(a), Some(b)) => sum.with_reflection(block_diag(a, b)),
            _ => Ok(sum),
        }
    }

    /// `parity_sign * tau(diag(1, -1, ..., -1))` for odd D, obtained by a
    /// rotation through pi in each plane (1,2), (3,4), ...
    pub fn reflection_image(&self, parity_sign: i8) -> Result<DMatrix<T>> {
        let d = self.group.dim();
        if d % 2 == 0 {
            return Err(Error::UnsupportedDimension(format!("reflection images need odd D, got {d}")));
        }
        if parity_sign != 1 && parity_sign != -1 {
            return Err(Error::InvalidReflection(format!("parity sign {parity_sign} is not +-1")));
        }
        let mut coeffs = vec![T::zero(); self.group.count()];
        for k in (1..d).step_by(2) {
            let idx = self.group.plane_index(k, k + 1).expect("plane exists");
            coeffs[idx] = T::pi();
        }
        let r = self.exponential(&coeffs)? * lit::<T>(parity_sign as f64);
        let res = involution_residual(&r);
        if res > tol(1e-8) {
            return Err(Error::NotAnInvolution(to_f64(res)));
        }
        Ok(r)
    }

    /// Max of `|R X_a R - s_a X_a|` where `s_a = -1` for planes through
    /// axis 0 and `+1` otherwise: the pattern an O(D) extension must obey.
    pub fn reflection_extension_residual(&self, r: &DMatrix<T>) -> T {
        self.group
            .planes()
            .iter()
            .zip(&self.dgen)
            .map(|(&(j, _), x)| {
                let s = if j == 0 { -T::one() } else { T::one() };
                max_abs(&(r * x * r - x * s))
            })
            .fold(T::zero(), |a, b| a.max(b))
    }

    /// The equivalent representation `q dtau q^T` for orthogonal `q`.
    pub fn conjugated(&self, q: &DMatrix<T>) -> Result<Self> {
        if q.shape() != (self.dim(), self.dim()) {
            return Err(Error::DimensionMismatch("conjugating matrix has the wrong shape".into()));
        }
        let qt = q.transpose();
        let dgen = self.dgen.iter().map(|x| q * x * &qt).collect();
        let rep = Self::new(self.group.clone(), dgen, format!("{}'", self.label))?;
        match &self.reflection {
            Some(r) => rep.with_reflection(q * r * &qt),
            None => Ok(rep),
        }
    }

    /// Converts to another scalar type through `f64`.
    pub fn cast<U: Real>(&self) -> Representation<U> {
        let conv = |m: &DMatrix<T>| m.map(|x| lit::<U>(to_f64(x)));
        Representation {
            group: GroupSpec::so(self.group.dim()).expect("valid dimension"),
            dgen: self.dgen.iter().map(conv).collect(),
            reflection: self.reflection.as_ref().map(conv),
            label: self.label.clone(),
        }
    }

    pub fn to_json(&self) -> RepresentationJson {
        RepresentationJson {
            d: self.group.dim(),
            n: self.dim(),
            dgen: self.dgen.iter().map(to_row_major).collect(),
            reflection: self.reflection.as_ref().map(to_row_major),
            label: self.label.clone(),
        }
    }

    pub fn from_json(json: &RepresentationJson) -> Result<Self> {
        let group = GroupSpec::so(json.d)?;
        let n = json.n;
        if json.dgen.iter().any(|g| g.len() != n * n) {
            return Err(Error::DimensionMismatch(format!("dgen entries must hold N*N = {} numbers", n * n)));
        }
        let dgen = json.dgen.iter().map(|g| from_row_major(n, n, g)).collect();
        let rep = Self::new(group, dgen, json.label.clone())?;
        match &json.reflection {
            Some(r) if r.len() != n * n => {
                Err(Error::DimensionMismatch("reflection must hold N*N numbers".into()))
            }
            Some(r) => rep.with_reflection(from_row_major(n, n, r)),
            None => Ok(rep),
        }
    }
}

fn involution_residual<T: Real>(r: &DMatrix<T>) -> T {
    let n = r.nrows();
    max_abs(&(r * r - DMatrix::identity(n, n)))
}

/// Serialized form: generator images and reflection as row-major arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepresentationJson {
    #[serde(rename = "D")]
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub dgen: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reflection: Option<Vec<f64>>,
    pub label: String,
}

pub fn rep_exponential<T: Real>(rep: &Representation<T>, coeffs: &[T]) -> Result<DMatrix<T>> {
    rep.exponential(coeffs)
}

pub fn direct_sum<T: Real>(a: &Representation<T>, b: &Representation<T>) -> Result<Representation<T>> {
    a.direct_sum(b)
}

pub fn reflection_image<T: Real>(rep: &Representation<T>, parity_sign: i8) -> Result<DMatrix<T>> {
    rep.reflection_image(parity_sign)
}

/// The three-dimensional representations used by the model catalog.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CatalogRep {
    /// Scalar.
    D0,
    /// Vector.
    D1,
    /// Scalar plus vector.
    D0D1,
    /// Two vectors.
    D1D1,
    /// Two spin-1/2 doublets, realified to four real components.
    DhalfDhalf,
}

impl CatalogRep {
    pub const ALL: [CatalogRep; 5] = [Self::D0, Self::D1, Self::D0D1, Self::D1D1, Self::DhalfDhalf];

    pub fn name(self) -> &'static str {
        match self {
            Self::D0 => "D0",
            Self::D1 => "D1",
            Self::D0D1 => "D0+D1",
            Self::D1D1 => "D1+D1",
            Self::DhalfDhalf => "Dhalf+Dhalf",
        }
    }
}

impl fmt::Display for CatalogRep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CatalogRep {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::NotInCatalog(s.to_string()))
    }
}

/// Catalog representation by name.
///
/// Reflection images are attached per summand: the scalar is even and the
/// vector carries `diag(-1, 1, 1)` (a true vector). The spinor doublet has
/// no reflection since `tau` of a pi rotation squares to `-1` there.
pub fn catalog_rep<T: Real>(name: &str) -> Result<Representation<T>> {
    build_catalog(name.parse()?)
}

pub fn build_catalog<T: Real>(which: CatalogRep) -> Result<Representation<T>> {
    let group = GroupSpec::<T>::so(3)?;
    let realified = |e: DMatrix<num_complex::Complex64>, spins| -> Vec<DMatrix<T>> {
        realify::realified_generators(&e, &spins)
            .iter()
            .map(|m| m.map(lit::<T>))
            .collect()
    };
    let scalar = || -> Result<Representation<T>> {
        Representation::trivial(group.clone(), 1)?.relabel("D0").with_reflection(DMatrix::identity(1, 1))
    };
    let vector = || -> Result<Representation<T>> {
        let v = Representation::defining(group.clone())?.relabel("D1");
        let r = v.reflection_image(-1)?;
        v.with_reflection(r)
    };
    match which {
        CatalogRep::D0 => scalar(),
        CatalogRep::D1 => vector(),
        CatalogRep::D0D1 => {
            let dgen = realified(realify::e_scalar_vector(), realify::scalar_vector_spins());
            let r = block_diag(&scalar()?.reflection.unwrap(), &vector()?.reflection.unwrap());
            Representation::new(group, dgen, "D0+D1")?.with_reflection(r)
        }
        CatalogRep::D1D1 => {
            let dgen = realified(realify::e_vector_vector(), realify::vector_vector_spins());
            let rv = vector()?.reflection.unwrap();
            Representation::new(group, dgen, "D1+D1")?.with_reflection(block_diag(&rv, &rv))
        }
        CatalogRep::DhalfDhalf => {
            let dgen = realified(realify::e_spinor(), realify::spinor_spins());
            Representation::new(group, dgen, "Dhalf+Dhalf")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn is_orthogonal(q: &DMatrix<f64>, t: f64) -> bool {
        let n = q.nrows();
        (q.transpose() * q - DMatrix::identity(n, n)).amax() < t
    }

    #[test]
    fn generator_counts_and_antisymmetry() {
        for d in 2..6 {
            let g = GroupSpec::<f64>::so(d).unwrap();
            assert_eq!(g.count(), d * (d - 1) / 2);
            for l in g.generators() {
                assert_eq!(l + l.transpose(), DMatrix::zeros(d, d));
            }
        }
        assert!(matches!(GroupSpec::<f64>::so(1), Err(Error::InvalidDimension(_))));
    }

    #[test]
    fn so2_generator_and_rotation() {
        let g = GroupSpec::<f64>::so(2).unwrap();
        assert_eq!(g.generators()[0], from_row_major(2, 2, &[0.0, 1.0, -1.0, 0.0]));
        let rep = Representation::defining(g).unwrap();
        let t = 0.7f64;
        let q = rep.exponential(&[t]).unwrap();
        let want = from_row_major(2, 2, &[t.cos(), t.sin(), -t.sin(), t.cos()]);
        assert!((q - want).amax() < 1e-14);
    }

    #[test]
    fn so3_commutators_close() {
        let g = GroupSpec::<f64>::so(3).unwrap();
        assert!(g.closure_residual() < 1e-15);
        // [G01, G02] = -G12 for the E_jk - E_kj basis
        let br = commutator(&g.generators()[0], &g.generators()[1]);
        assert!((br + &g.generators()[2]).amax() < 1e-15);
        assert!(GroupSpec::<f64>::so(4).unwrap().closure_residual() < 1e-15);
    }

    #[test]
    fn zero_coefficients_give_identity() {
        let rep = catalog_rep::<f64>("D1+D1").unwrap();
        assert_eq!(rep.exponential(&[0.0; 3]).unwrap(), DMatrix::identity(6, 6));
    }

    #[test]
    fn catalog_dimensions_and_brackets() {
        let dims = [1, 3, 4, 6, 4];
        for (c, n) in CatalogRep::ALL.iter().zip(dims) {
            let rep = build_catalog::<f64>(*c).unwrap();
            assert_eq!(rep.dim(), n, "{c}");
            assert!(rep.bracket_residual() < 1e-10, "{c}");
        }
        assert!(matches!(catalog_rep::<f64>("D2"), Err(Error::NotInCatalog(_))));
    }

    #[test]
    fn d1_is_the_defining_representation() {
        let rep = catalog_rep::<f64>("D1").unwrap();
        assert_eq!(rep.dgen(), GroupSpec::<f64>::so(3).unwrap().generators());
    }

    #[test]
    fn scalar_vector_is_block_sum() {
        let rep = catalog_rep::<f64>("D0+D1").unwrap();
        let sum = catalog_rep::<f64>("D0").unwrap().direct_sum(&catalog_rep("D1").unwrap()).unwrap();
        for (a, b) in rep.dgen().iter().zip(sum.dgen()) {
            assert!((a - b).amax() < 1e-14);
        }
        assert_eq!(rep.reflection(), sum.reflection());
    }

    #[test]
    fn direct_sum_of_trivials() {
        let g = GroupSpec::<f64>::so(3).unwrap();
        let t = Representation::trivial(g.clone(), 1).unwrap();
        let s = direct_sum(&t, &t).unwrap();
        assert_eq!(s.dim(), 2);
        assert!(s.dgen().iter().all(|x| x.amax() == 0.0));
        let other = Representation::trivial(GroupSpec::so(4).unwrap(), 1).unwrap();
        assert!(matches!(t.direct_sum(&other), Err(Error::IncompatibleReps(_))));
    }

    #[test]
    fn reflection_images() {
        let d0 = catalog_rep::<f64>("D0").unwrap();
        assert_eq!(d0.reflection_image(1).unwrap(), DMatrix::identity(1, 1));
        let d1 = catalog_rep::<f64>("D1").unwrap();
        let r = d1.reflection_image(-1).unwrap();
        assert!((&r - DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, 1.0, 1.0]))).amax() < 1e-12);
        assert!((r.determinant() + 1.0).abs() < 1e-12);
        let d01 = catalog_rep::<f64>("D0+D1").unwrap();
        let r01 = d01.reflection_image(-1).unwrap();
        assert!((&r01 * &r01 - DMatrix::identity(4, 4)).amax() < 1e-12);
        let even = GroupSpec::<f64>::so(4).unwrap();
        let rep4 = Representation::defining(even).unwrap();
        assert!(matches!(rep4.reflection_image(1), Err(Error::UnsupportedDimension(_))));
    }

    #[test]
    fn spinor_has_no_reflection() {
        let rep = catalog_rep::<f64>("Dhalf+Dhalf").unwrap();
        assert!(rep.reflection().is_none());
        assert!(matches!(rep.reflection_image(1), Err(Error::NotAnInvolution(_))));
    }

    #[test]
    fn stored_reflections_extend_to_o3() {
        for c in [CatalogRep::D0, CatalogRep::D1, CatalogRep::D0D1, CatalogRep::D1D1] {
            let rep = build_catalog::<f64>(c).unwrap();
            let r = rep.reflection().unwrap();
            assert!(rep.reflection_extension_residual(r) < 1e-12, "{c}");
        }
    }

    #[test]
    fn json_round_trip() {
        let rep = catalog_rep::<f64>("D0+D1").unwrap();
        let text = serde_json::to_string(&rep.to_json()).unwrap();
        let back = Representation::<f64>::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, rep);
        let bad = r#"{"D":3,"N":1,"dgen":[[0],[0],[0]],"label":"x","extra":1}"#;
        assert!(serde_json::from_str::<RepresentationJson>(bad).is_err());
    }

    #[test]
    fn single_precision_catalog() {
        let rep = catalog_rep::<f32>("D1+D1").unwrap();
        assert!(rep.bracket_residual() < 1e-5);
    }

    proptest! {
        #[test]
        fn catalog_exponentials_are_orthogonal(c in proptest::collection::vec(-3.0f64..3.0, 3)) {
            for name in CatalogRep::ALL {
                let q = build_catalog::<f64>(name).unwrap().exponential(&c).unwrap();
                prop_assert!(is_orthogonal(&q, 1e-8));
            }
        }

        #[test]
        fn defining_exponential_has_unit_determinant(c in proptest::collection::vec(-3.0f64..3.0, 6)) {
            let g = GroupSpec::<f64>::so(4).unwrap();
            let q = g.element(&c).unwrap();
            prop_assert!((q.determinant() - 1.0).abs() < 1e-10);
        }
    }
}
