//! Two electromagnetic modes coupled through a pump-driven rotating-wave
//! (up-conversion) interaction, prepared in a cat (x) coherent state.
//!
//! The crate provides the complete closed-form slow-time dynamics — joint
//! state, linear entropy, mean photon numbers, photon-number variance,
//! balanced-intensity condition, state-exchange functional, recurrence and
//! exchange schedule, and the normal-ordered characteristic function — and an
//! independent truncated Fock-space oracle that propagates the exact
//! generator and recomputes every observable from first principles. The
//! [`oracle::verify_scenario`] report pins each closed form against the
//! brute-force route at fixed tolerances.

pub mod analytic;
pub mod charfunc;
pub mod error;
pub mod fock;
pub mod oracle;

pub use error::{Error, Result};

/// `n` evenly spaced points covering `[start, end]` inclusively.
pub fn linspace(start: f64, end: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![start];
    }
    let step = (end - start) / (n - 1) as f64;
    (0..n)
        .map(|i| {
            if i == n - 1 {
                end
            } else {
                start + i as f64 * step
            }
        })
        .collect()
}
