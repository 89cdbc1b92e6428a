pub mod covering;
pub mod eigen;
pub mod error;
pub mod grid;
pub mod linsolve;
pub mod quad;
pub mod radial;
pub mod spectral;
pub mod supersol;

pub use error::{Error, Result};

/// Version of this crate, recorded in CLI manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/truncated-traces.md")]
    mod truncated_traces {}
    #[doc = include_str!("../../../book/src/radial-barriers.md")]
    mod radial_barriers {}
    #[doc = include_str!("../../../book/src/coverings.md")]
    mod coverings {}
    #[doc = include_str!("../../../book/src/supersolutions.md")]
    mod supersolutions {}
    #[doc = include_str!("../../../book/src/grid-eigenvalues.md")]
    mod grid_eigenvalues {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
