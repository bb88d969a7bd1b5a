//! Centralized tolerances and size caps.

use serde::{Deserialize, Serialize};

/// Largest `n` for which set partitions are enumerated (Bell(12) = 4,213,597).
pub const ENUMERATION_CAP: usize = 12;

/// Largest row of the cached log-Stirling table.
pub const STIRLING_CAP: usize = 2000;

/// Abort stick breaking after this many sticks.
pub const MAX_STICKS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Atomic measure masses must sum to one within this.
    pub mass_sum: f64,
    /// Input distributions to `variation_distance` must sum to one within this.
    pub distribution_sum: f64,
    /// Exact ESF probabilities must sum to one within this.
    pub esf_sum: f64,
    /// Default stick-breaking residual.
    pub gem_residual: f64,
    /// Default death-process truncation tolerance.
    pub death_truncation: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            mass_sum: 1e-12,
            distribution_sum: 1e-9,
            esf_sum: 1e-10,
            gem_residual: 1e-10,
            death_truncation: 1e-3,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> crate::Result<()> {
        let all = [
            self.mass_sum,
            self.distribution_sum,
            self.esf_sum,
            self.gem_residual,
            self.death_truncation,
        ];
        if all.iter().all(|t| *t > 0.0 && t.is_finite()) && self.gem_residual < 1.0 {
            Ok(())
        } else {
            Err(crate::Error::Validation(format!(
                "tolerances must be positive and finite: {self:?}"
            )))
        }
    }
}
