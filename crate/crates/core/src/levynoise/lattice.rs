//! Periodic lattices and N-component fields living on them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    #[serde(rename = "D")]
    pub d: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub a: f64,
}

impl LatticeConfig {
    pub fn new(d: usize, l: usize, a: f64) -> Result<Self> {
        let cfg = Self { d, l, a };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::InvalidDimension("lattice dimension must be positive".into()));
        }
        if self.l < 2 {
            return Err(Error::Invalid(format!("lattice needs L >= 2, got {}", self.l)));
        }
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(Error::Invalid(format!("lattice spacing must be positive, got {}", self.a)));
        }
        Ok(())
    }

    pub fn sites(&self) -> usize {
        self.l.pow(self.d as u32)
    }

    /// Volume of one cell, `a^D`.
    pub fn cell(&self) -> f64 {
        self.a.powi(self.d as i32)
    }

    pub fn volume(&self) -> f64 {
        (self.l as f64 * self.a).powi(self.d as i32)
    }

    /// Row-major coordinates; axis 0 (time) varies slowest.
    pub fn coords(&self, mut site: usize) -> Vec<usize> {
        let mut c = vec![0; self.d];
        for j in (0..self.d).rev() {
            c[j] = site % self.l;
            site /= self.l;
        }
        c
    }

    pub fn index(&self, coords: &[usize]) -> usize {
        coords.iter().fold(0, |acc, &c| acc * self.l + c % self.l)
    }

    /// Site reached by a signed integer displacement, periodically.
    pub fn shift(&self, site: usize, by: &[i64]) -> usize {
        let l = self.l as i64;
        let c: Vec<usize> = self
            .coords(site)
            .iter()
            .zip(by)
            .map(|(&x, &dx)| (x as i64 + dx).rem_euclid(l) as usize)
            .collect();
        self.index(&c)
    }

    /// Physical position with coordinates folded into `[-L a / 2, L a / 2)`.
    pub fn position(&self, site: usize) -> Vec<f64> {
        self.coords(site)
            .iter()
            .map(|&c| {
                let k = if 2 * c >= self.l { c as f64 - self.l as f64 } else { c as f64 };
                k * self.a
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    Noise,
    Solution,
    /// Deterministic test function paired against a random field.
    Test,
}

/// `n` real components per site, stored site-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSample {
    pub lattice: LatticeConfig,
    pub n: usize,
    pub values: Vec<f64>,
    pub kind: FieldKind,
}

impl FieldSample {
    pub fn zeros(lattice: LatticeConfig, n: usize, kind: FieldKind) -> Self {
        Self { lattice, n, values: vec![0.0; lattice.sites() * n], kind }
    }

    pub fn from_values(lattice: LatticeConfig, n: usize, values: Vec<f64>, kind: FieldKind) -> Result<Self> {
        if values.len() != lattice.sites() * n {
            return Err(Error::DimensionMismatch(format!(
                "{} values for {} sites x {} components",
                values.len(),
                lattice.sites(),
                n
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("field values must be finite".into()));
        }
        Ok(Self { lattice, n, values, kind })
    }

    /// Test function `f(x) e_comp` from a scalar profile.
    pub fn from_scalar(lattice: LatticeConfig, n: usize, comp: usize, profile: impl Fn(&[usize]) -> f64) -> Self {
        let mut f = Self::zeros(lattice, n, FieldKind::Test);
        for s in 0..lattice.sites() {
            f.values[s * n + comp] = profile(&lattice.coords(s));
        }
        f
    }

    pub fn site(&self, s: usize) -> &[f64] {
        &self.values[s * self.n..(s + 1) * self.n]
    }

    pub fn site_mut(&mut self, s: usize) -> &mut [f64] {
        let n = self.n;
        &mut self.values[s * n..(s + 1) * n]
    }

    /// Continuum-normalized pairing `a^D sum_x <f(x), g(x)>`.
    pub fn pairing(&self, other: &Self) -> f64 {
        assert_eq!(self.values.len(), other.values.len(), "pairing of mismatched fields");
        self.lattice.cell() * self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= c);
        out
    }

    pub fn add(&self, other: &Self, c: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().zip(&other.values).for_each(|(a, b)| *a += c * b);
        out
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn norm2(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}

/// Header of a binary field dump (row-major little-endian `f64`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DumpHeader {
    #[serde(rename = "D")]
    pub d: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub a: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub kind: FieldKind,
    pub seed: u64,
    pub count: usize,
    pub layout: String,
}

pub const DUMP_LAYOUT: &str = "sample,site(row-major, axis 0 slowest),component; f64 little-endian";

pub fn dump_samples(samples: &[FieldSample], seed: u64) -> Result<(DumpHeader, Vec<u8>)> {
    let first = samples.first().ok_or_else(|| Error::Invalid("nothing to dump".into()))?;
    if samples.iter().any(|s| s.lattice != first.lattice || s.n != first.n) {
        return Err(Error::DimensionMismatch("dumped samples must share lattice and N".into()));
    }
    let header = DumpHeader {
        d: first.lattice.d,
        l: first.lattice.l,
        a: first.lattice.a,
        n: first.n,
        kind: first.kind,
        seed,
        count: samples.len(),
        layout: DUMP_LAYOUT.into(),
    };
    let bytes = samples.iter().flat_map(|s| s.values.iter().flat_map(|v| v.to_le_bytes())).collect();
    Ok((header, bytes))
}

pub fn load_samples(header: &DumpHeader, bytes: &[u8]) -> Result<Vec<FieldSample>> {
    let lattice = LatticeConfig::new(header.d, header.l, header.a)?;
    let per = lattice.sites() * header.n;
    if bytes.len() != per * header.count * 8 {
        return Err(Error::DimensionMismatch("dump size does not match its header".into()));
    }
    let vals: Vec<f64> = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    vals.chunks(per)
        .map(|v| FieldSample::from_values(lattice, header.n, v.to_vec(), header.kind))
        .collect()
}
