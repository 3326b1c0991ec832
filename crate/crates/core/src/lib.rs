//! Quantum estimation of temperature and exchange couplings with a two-impurity Kondo probe.
//!
//! The probe is the two-spin reduced density matrix, diagonal in the singlet/triplet basis.
//! [`estimation`] turns populations and their parameter derivatives into Fisher information,
//! single- and multiparameter QSNRs. The model backends supply those populations:
//!
//! * [`large_k`]: the decoupled probe at large inter-impurity coupling, in closed form;
//! * [`narrow_band`]: exact diagonalization with one conduction orbital per channel;
//! * [`critical`]: the exact universal solution around the critical point.
//!
//! The analytic modules are generic over [`Real`] (`f32` or `f64`); the `*64`/`*32` aliases
//! below name the common instantiations.

pub mod critical;
pub mod error;
pub mod estimation;
pub mod large_k;
pub mod linalg;
pub mod narrow_band;
pub mod probe;
pub mod scalar;
pub mod special;

pub use error::{Error, Result};
pub use scalar::Real;

pub type ParamVector64 = estimation::ParamVector<f64>;
pub type ParamVector32 = estimation::ParamVector<f32>;
pub type PopulationJacobian64 = estimation::PopulationJacobian<f64>;
pub type PopulationJacobian32 = estimation::PopulationJacobian<f32>;
pub type QfiMatrix64 = estimation::QfiMatrix<f64>;
pub type QfiMatrix32 = estimation::QfiMatrix<f32>;
pub type QsnrReport64 = estimation::QsnrReport<f64>;
pub type QsnrReport32 = estimation::QsnrReport<f32>;
pub type ProbeState64 = probe::ProbeState<f64>;
pub type ProbeState32 = probe::ProbeState<f32>;
pub type ProbeObservables64 = probe::ProbeObservables<f64>;
pub type ProbeObservables32 = probe::ProbeObservables<f32>;
pub type LargeKParams64 = large_k::LargeKParams<f64>;
pub type LargeKParams32 = large_k::LargeKParams<f32>;
pub type CriticalConstants64 = critical::CriticalConstants<f64>;
pub type CriticalConstants32 = critical::CriticalConstants<f32>;
