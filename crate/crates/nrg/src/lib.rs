//! Numerical renormalization group for two Kondo impurities coupled by an exchange `K`.
//!
//! The model is two spin-½ impurities, each exchange-coupled (`J`) to its own flat-band
//! conduction channel, with `K S_L·S_R` between them and an optional field `B` on the total
//! spin. Each channel is mapped to a Wilson chain and the two chains are grown in an
//! interleaved fashion.

pub mod analysis;
pub mod artifact;
pub mod chain;
pub mod engine;
pub mod error;
pub mod metrology;
pub mod thermo;

pub use analysis::{
    estimate_tk, extract_constants, find_plateau, tk_from_flow, tune_kc, tune_kc_in, tune_kc_with,
    ExtractedConstants, KcTuning, Phase, Plateau,
};
pub use artifact::{load_run, save_run, RunArtifact};
pub use chain::{wilson_chain, NrgConfig};
pub use engine::{
    run, run_reference, run_with, ModelParams, Observable, SectorRecord, ShellRecord,
};
pub use error::{NrgError, Result};
pub use metrology::{metrology_from_flows, nrg_metrology, MetrologyCell, MetrologyGrid};
pub use thermo::{
    cached_reference, run_flow, shell_thermo, shell_thermo_at, smooth_alternation, thermodynamics,
    FlowRow, FlowTables,
};
