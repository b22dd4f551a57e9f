//! Golden angle modulation (GAM) toolkit.
//!
//! Constellation builders for disc-shaped and bell-shaped GAM alongside QAM and
//! PSK baselines, figures of merit, mutual information over the complex AWGN
//! channel (Monte Carlo and grid quadrature), MI-maximizing radius
//! optimization, symbol-error simulation and SNR-gap comparison.
//!
//! ```
//! use gam_core::constellation::Constellation;
//! use gam_core::metrics;
//!
//! let c = Constellation::disc_gam(1024, 1.0).unwrap();
//! let report = metrics::report(&c);
//! assert!((report.papr_db - 3.0).abs() < 0.01);
//! ```

pub mod constellation;
pub mod error;
pub mod gap;
pub mod golden;
pub mod io;
pub mod link;
pub mod metrics;
pub mod mi;
pub mod optimize;
pub mod par;
pub mod sweep;

pub use constellation::{ComplexPoint, Constellation, IndexBase, Scheme};
pub use error::{Error, Result};

/// Converts a decibel value to a linear power ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Converts a linear power ratio to decibels.
pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}
