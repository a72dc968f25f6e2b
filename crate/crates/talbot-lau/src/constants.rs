//! Physical constants (CODATA 2018). The single source of truth for every
//! unit conversion in the crate.

/// Planck constant, J·s (exact since the 2019 SI redefinition).
pub const PLANCK: f64 = 6.626_070_15e-34;

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = PLANCK / (2.0 * std::f64::consts::PI);

/// Atomic mass unit, kg.
pub const AMU: f64 = 1.660_539_066_60e-27;

/// Boltzmann constant, J/K (exact).
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Standard gravitational acceleration, m/s².
pub const STANDARD_GRAVITY: f64 = 9.81;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hbar_matches_codata() {
        assert!((HBAR - 1.054_571_817e-34).abs() < 1e-42);
    }
}
