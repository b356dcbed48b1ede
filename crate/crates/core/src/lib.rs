//! Time-dependent phase space filters on a multiscale grid.
//!
//! The Schrödinger equation on the line is solved in a box `[-L, L]`
//! surrounded by a ladder of coarser, wider boxes. Outgoing waves move
//! to coarser scales, and phase space filters remove them from each
//! buffer before they wrap around.
//!
//! ```
//! use mtdpsf::{build_filter_bank, GridSpec, MultiscaleState, Potential, Propagator, RunPlan, NullSink};
//! use num_complex::Complex64;
//!
//! let grid = GridSpec::from_samples(1024, 0.1, 2, 1e-6)?;
//! let bank = build_filter_bank(&grid, 1e-6)?;
//! let prop = Propagator::new(&grid, &Potential::Zero, 1.0 / 32.0)?;
//! let plan = RunPlan::new(&grid, 1.0 / 32.0, 2.0, None)?;
//! let psi0 = MultiscaleState::from_fn(&grid, |x| Complex64::new((-x * x / 8.0).exp(), 0.0));
//! let out = prop.run(&psi0, &plan, Some(&bank), &mut NullSink)?;
//! assert!((out.state.norm() - psi0.norm()).abs() < 1e-6);
//! # Ok::<(), mtdpsf::Error>(())
//! ```

pub mod error;
pub mod experiments;
pub mod filters;
pub mod grid;
pub mod msfft;
pub mod propagator;
pub mod reference;
pub mod snapshot;
pub mod special;
pub mod spectral;
pub mod state;
pub mod windows;

pub use error::{Error, Result};
pub use filters::{build_filter_bank, FilterBank, FilterParams, LedgerRow, Side};
pub use grid::{build_grid, GridSpec};
pub use msfft::{Multiplier, MultiplierTable, MultiscaleFft};
pub use propagator::{plan_scales, NullSink, Potential, Propagator, RunOutcome, RunPlan, Sink};
pub use state::{MultiscaleState, ScaleField};
pub use windows::WindowSet;

// The guide's snippets run as doc-tests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/grid.md")]
    mod grid {}
    #[doc = include_str!("../../../book/src/localization.md")]
    mod localization {}
    #[doc = include_str!("../../../book/src/filters.md")]
    mod filters {}
    #[doc = include_str!("../../../book/src/propagation.md")]
    mod propagation {}
    #[doc = include_str!("../../../book/src/validation.md")]
    mod validation {}
}
