//! Index-modulation constellation design for RIS-aided MISO links.
//!
//! The crate enumerates every RIS reflection pattern, turns each into an
//! effective symbol under MRT beamforming, clusters the symbols with K-means,
//! picks one well-separated representative per cluster and labels the result
//! with a Gray-coded nearest-neighbour chain. Designs are evaluated by Monte
//! Carlo BER simulation with ML detection and by an averaged union bound.

pub mod analysis;
pub mod clustering;
pub mod constellation;
pub mod error;
pub mod graycode;
pub mod io;
pub mod link;
pub mod rng;
pub mod schemes;
pub mod sysmodel;

pub use analysis::{ber_upper_bound, complexity_estimate, q_function, ComplexityReport};
pub use clustering::{ClusterState, SelectedConstellation};
pub use constellation::{EffectiveSymbol, PhaseRule, Reflection, ReflectionPattern};
pub use error::{Error, Result};
pub use graycode::{BitLabel, LabeledConstellation};
pub use link::{run_ber_sweep, BerCurve, SweepConfig};
pub use num_complex::Complex64;
pub use rng::Stream;
pub use schemes::{Designer, ProposedOptions, SchemeId};
pub use sysmodel::{ChannelRealization, CsiModel, SystemConfig};
