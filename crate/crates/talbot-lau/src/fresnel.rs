//! Direct wave-optics reference for the coefficient-based fringe model.
//!
//! A spatially incoherent source is represented as a sum of point sources
//! over the open slits of the first grating. Each point source is Fresnel
//! propagated over the grating separation, multiplied by the complex
//! transmission of the second grating, propagated again, and detected as an
//! intensity at the third-grating plane; the scanned third grating then
//! integrates the flux.
//!
//! Everything runs on a periodic domain of two grating periods, where free
//! propagation is an exact per-mode phase multiplication. The module shares
//! no Fourier-coefficient machinery with [`crate::physics`]: masks are built
//! point-wise on the grid and the wall phase is evaluated directly, so the
//! two paths can legitimately check each other.

use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

use crate::constants::{HBAR, PLANCK};
use crate::error::{Error, Result};
use crate::physics::InterferometerConfig;

/// Grid controls for the propagation oracle.
#[derive(Debug, Clone, Copy)]
pub struct FresnelParams {
    /// Real-space grid points over the two-period domain.
    pub grid_points: usize,
    /// Candidate source positions over the domain (those inside G1 slits
    /// contribute).
    pub source_points: usize,
    /// Third-grating scan positions over one period.
    pub scan_points: usize,
    /// Sub-cell samples when averaging the G2 transmission onto the grid.
    pub mask_subsamples: usize,
    /// Eikonal-phase absorption cap (radians), matching the model under test.
    pub phi_cap: f64,
}

impl Default for FresnelParams {
    fn default() -> Self {
        FresnelParams {
            grid_points: 16384,
            source_points: 1024,
            scan_points: 64,
            mask_subsamples: 16,
            phi_cap: 50.0,
        }
    }
}

/// Scanned flux produced by the propagation oracle.
#[derive(Debug, Clone)]
pub struct FresnelScan {
    /// Scan positions over one period, meters.
    pub positions: Vec<f64>,
    /// Integrated flux per scan position (arbitrary units).
    pub values: Vec<f64>,
}

impl FresnelScan {
    pub fn visibility_exact(&self) -> f64 {
        let max = self.values.iter().cloned().fold(f64::MIN, f64::max);
        let min = self.values.iter().cloned().fold(f64::MAX, f64::min);
        (max - min) / (max + min)
    }

    /// First-harmonic visibility 2|c_1|/c_0 from a direct DFT of the scan.
    pub fn visibility_sinusoidal(&self) -> f64 {
        let n = self.values.len() as f64;
        let mut c1 = Complex64::new(0.0, 0.0);
        let mut c0 = 0.0;
        for (k, &v) in self.values.iter().enumerate() {
            c1 += v * Complex64::new(0.0, -2.0 * PI * k as f64 / n).exp();
            c0 += v;
        }
        2.0 * c1.norm() / c0
    }

    /// Values scaled to unit mean, for pointwise comparisons.
    pub fn normalized(&self) -> Vec<f64> {
        let mean = self.values.iter().sum::<f64>() / self.values.len() as f64;
        self.values.iter().map(|v| v / mean).collect()
    }
}

/// Run the propagation oracle for the given interferometer at velocity `v`.
pub fn fresnel_fringe_scan(
    config: &InterferometerConfig,
    v: f64,
    params: &FresnelParams,
) -> Result<FresnelScan> {
    if !(v > 0.0) {
        return Err(Error::domain(format!("velocity must be positive, got {v} m/s")));
    }
    let n = params.grid_points;
    if !n.is_power_of_two() || n < 1024 {
        return Err(Error::domain("grid_points must be a power of two ≥ 1024"));
    }

    let d = config.period();
    let domain = 2.0 * d;
    let dx = domain / n as f64;
    let lambda = PLANCK / (config.molecule.mass_kg() * v);
    let distance = config.separation;

    // Per-mode Fresnel transfer function exp(−iπλL f²) on the periodic domain.
    let mut propagator = Vec::with_capacity(n);
    for k in 0..n {
        let k_signed = if k <= n / 2 { k as i64 } else { k as i64 - n as i64 };
        let freq = k_signed as f64 / domain;
        propagator.push(Complex64::new(0.0, -PI * lambda * distance * freq * freq).exp());
    }

    let g2_mask = cell_averaged_mask(config, v, n, dx, params);
    let g1 = &config.g1;
    let g3 = &config.g3;
    let g3_open: Vec<bool> = (0..n).map(|i| inside_slit(i as f64 * dx, g3.period, g3.slit_width())).collect();

    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    let ifft = planner.plan_fft_inverse(n);
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];

    let mut intensity = vec![0.0f64; n];
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let mut any_source = false;
    for s in 0..params.source_points {
        let x_src = (s as f64 + 0.5) * domain / params.source_points as f64;
        if !inside_slit(x_src, g1.period, g1.slit_width()) {
            continue;
        }
        any_source = true;
        buf.fill(Complex64::new(0.0, 0.0));
        let idx = ((x_src / dx).round() as usize) % n;
        buf[idx] = Complex64::new(1.0, 0.0);

        fft.process_with_scratch(&mut buf, &mut scratch);
        for (value, p) in buf.iter_mut().zip(&propagator) {
            *value *= p;
        }
        ifft.process_with_scratch(&mut buf, &mut scratch);
        for (value, t) in buf.iter_mut().zip(&g2_mask) {
            *value *= t;
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        for (value, p) in buf.iter_mut().zip(&propagator) {
            *value *= p;
        }
        ifft.process_with_scratch(&mut buf, &mut scratch);

        for (acc, value) in intensity.iter_mut().zip(&buf) {
            *acc += value.norm_sqr();
        }
    }
    if !any_source {
        return Err(Error::degenerate("no source points fall inside the first grating's slits"));
    }

    // Scan the third grating over one period.
    let mut positions = Vec::with_capacity(params.scan_points);
    let mut values = Vec::with_capacity(params.scan_points);
    for s in 0..params.scan_points {
        let x_s = s as f64 * d / params.scan_points as f64;
        let shift = (x_s / dx).round() as usize;
        let mut acc = 0.0;
        for (i, &inten) in intensity.iter().enumerate() {
            // mask shifted by +x_s: open where (x − x_s) lies in a slit
            if g3_open[(i + n - shift % n) % n] {
                acc += inten;
            }
        }
        positions.push(x_s);
        values.push(acc);
    }
    Ok(FresnelScan { positions, values })
}

fn inside_slit(x: f64, period: f64, slit_width: f64) -> bool {
    let rel = (x / period).rem_euclid(1.0) * period;
    let centered = if rel > period / 2.0 { rel - period } else { rel };
    centered.abs() < slit_width / 2.0
}

/// G2 complex transmission averaged over each grid cell, so that the sharp
/// slit edges and the fast wall phase do not alias onto the grid.
fn cell_averaged_mask(
    config: &InterferometerConfig,
    v: f64,
    n: usize,
    dx: f64,
    params: &FresnelParams,
) -> Vec<Complex64> {
    let g2 = &config.g2;
    let half = g2.slit_width() / 2.0;
    let strength = config.molecule.c3 * g2.thickness / (HBAR * v);
    let sub = params.mask_subsamples.max(1);
    let mut mask = Vec::with_capacity(n);
    for i in 0..n {
        let x0 = i as f64 * dx;
        let mut acc = Complex64::new(0.0, 0.0);
        for q in 0..sub {
            let x = x0 + ((q as f64 + 0.5) / sub as f64 - 0.5) * dx;
            let rel = (x / g2.period).rem_euclid(1.0) * g2.period;
            let centered = if rel > g2.period / 2.0 { rel - g2.period } else { rel };
            if centered.abs() >= half {
                continue;
            }
            if strength == 0.0 {
                acc += Complex64::new(1.0, 0.0);
            } else {
                let phi = strength * ((half - centered).powi(-3) + (half + centered).powi(-3));
                if phi <= params.phi_cap {
                    acc += Complex64::new(0.0, phi).exp();
                }
            }
        }
        mask.push(acc / sub as f64);
    }
    mask
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    #[test]
    fn flat_when_gratings_fully_open() {
        let mut config = presets::interferometer();
        config.g1.open_fraction = 1.0;
        config.g2.open_fraction = 1.0;
        config.g3.open_fraction = 1.0;
        let params = FresnelParams { grid_points: 2048, source_points: 128, ..Default::default() };
        let scan = fresnel_fringe_scan(&config, 250.0, &params).unwrap();
        assert!(scan.visibility_exact() < 1e-9);
    }

    #[test]
    fn rejects_bad_grid() {
        let config = presets::interferometer();
        let params = FresnelParams { grid_points: 1000, ..Default::default() };
        assert!(fresnel_fringe_scan(&config, 250.0, &params).is_err());
    }
}
