//! Kagome-lattice tilings: regions, height functions, flip chains, exact
//! kernel analysis, coupling-from-the-past sampling and SVG output.
//!
//! Exact analysis is generic over [`scalar::Scalar`]; the aliases below fix
//! the common choices.

pub mod cftp;
pub mod chain;
pub mod error;
pub mod graph;
pub mod height;
pub mod kernel;
pub mod lattice;
pub mod ledger;
pub mod minimal;
pub mod region;
pub mod render;
pub mod scalar;
pub mod stats;
pub mod tiling;
pub mod verify;

pub use cftp::{benchmark_scaling, cftp_sample, forward_coupling_time, CftpRun};
pub use chain::{ChainVariant, StepSeed};
pub use error::{Error, Result};
pub use graph::{enumerate, TilingGraph};
pub use height::{height_field, HeightField};
pub use lattice::{HexCoord, KagomeVertex, TriCoord};
pub use ledger::{path_coupling_ledger, CouplingLedger, CouplingLedgerEntry};
pub use minimal::contour_peel_minimal;
pub use region::{make_lozenge_region, make_nonflat_lozenge, make_square_region, Region, RegionFamily};
pub use render::{render, RenderStyle};
pub use scalar::{Exact, Scalar};
pub use tiling::{find_tiling, Direction, FlipInfo, FlipVariant, TileType, Tiling};

pub type ExactKernel = kernel::Kernel<Exact>;
pub type FloatKernel = kernel::Kernel<f64>;
pub type Float32Kernel = kernel::Kernel<f32>;
pub type ExactLedger = CouplingLedger<Exact>;
pub type FloatLedger = CouplingLedger<f64>;
