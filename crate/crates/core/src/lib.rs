//! Wavenumber-domain multiplexing for near-field MIMO links between planar
//! arrays: channel synthesis, Fourier-dictionary transform, stream selection,
//! power allocation and capacity evaluation.

pub mod channel;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod matrix_io;
pub mod metrics;
pub mod oracle;
pub mod power;
pub mod selection;
pub mod wavenumber;

pub use channel::{synthesize_channel, synthesize_los, synthesize_nlos, ChannelConfig, ChannelMatrix};
pub use error::{Error, Result};
pub use geometry::{ArrayGeometry, SystemParams};
pub use metrics::{
    spatial_division_capacity, svd_capacity, wd_capacity_report, Allocator, CapacityReport, Scheme, WdPipeline,
};
pub use power::{CouplingMatrix, PowerAllocation, SolverOptions};
pub use selection::{select_greedy, select_hungarian, StreamAssignment};
pub use wavenumber::{
    build_dictionary, enumerate_support, from_wavenumber, to_wavenumber, Dictionary, WavenumberChannel,
};

// The guide's snippets run as doctests, one module per chapter.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/channels.md")]
    mod channels {}
    #[doc = include_str!("../../../book/src/wavenumber.md")]
    mod wavenumber {}
    #[doc = include_str!("../../../book/src/selection.md")]
    mod selection {}
    #[doc = include_str!("../../../book/src/power.md")]
    mod power {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
