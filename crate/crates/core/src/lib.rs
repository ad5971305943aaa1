//! Glottal source estimation from voiced speech by factoring the Z-transform
//! of GCI-anchored frames into anticausal and causal root groups.
//!
//! The separation contour is a circle |z| = R in the Z-plane. R = 1 gives
//! the traditional decomposition; this crate also selects R automatically
//! from the gap in the sorted root moduli, or from a closed form when the
//! true GCI position inside the window is known, which makes the estimate
//! far more robust to GCI location errors.
//!
//! Pipeline: [`signal::extract_frame`] → [`polyroots::find_roots`] →
//! [`radius`] selection → [`czt::decompose`] → [`metrics`]. The
//! [`synth`] module generates the LF-pulse benchmark grid used to score the
//! three strategies, and [`io`] holds the file formats behind the `zczt`
//! command-line tool.

pub mod czt;
pub mod dd;
pub mod error;
pub mod io;
pub mod metrics;
pub mod polyroots;
pub mod radius;
pub mod signal;
pub mod synth;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
