pub mod error;
pub mod covsolve;
pub mod flwightman;
pub mod latticemc;
pub mod levynoise;
pub mod linalg;
pub mod models3d;
pub mod momenteng;
pub mod parallel;
pub mod repcore;
pub mod scalar;
pub mod spectral;
pub mod symcalc;

pub use error::{Error, Result};

pub type GroupSpec64 = repcore::GroupSpec<f64>;
pub type Representation64 = repcore::Representation<f64>;
pub type CovOperator64 = covsolve::CovOperator<f64>;
pub type MassSpectrum64 = symcalc::MassSpectrum<f64>;
pub type PartialFractions64 = symcalc::PartialFractions<f64>;
