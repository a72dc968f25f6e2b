//! Classical Moiré baseline: geometric shadow imaging through the three
//! gratings with ballistic van der Waals deflection at the second grating.
//!
//! This is the null hypothesis against the quantum fringe model. It is a
//! Monte Carlo ray tracer on purpose — it shares no coefficient machinery
//! with [`crate::physics`], so the two predictions can disagree where the
//! physics says they must. The only shared convention is the eikonal wall
//! phase, whose gradient fixes the classical kick (checked against each
//! other by finite differences in the tests).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::physics::{absorbed_margin, InterferometerConfig};

/// Histogram bins for arrival positions modulo the grating period.
const POSITION_BINS: usize = 512;

/// Rays per Monte Carlo work chunk; chunks map to independent RNG streams.
const CHUNK: u64 = 65_536;

/// One classical trajectory through the interferometer.
#[derive(Debug, Clone, Copy)]
pub struct RaySample {
    /// Transverse positions at the three grating planes, meters.
    pub positions: [f64; 3],
    /// Transverse velocity after the second grating, m/s.
    pub transverse_velocity: f64,
    /// Longitudinal velocity, m/s (positive).
    pub longitudinal_velocity: f64,
}

/// Result of a Monte Carlo Moiré run.
#[derive(Debug, Clone, PartialEq)]
pub struct McResult {
    /// Arrival counts per bin of position modulo the period, at the
    /// third-grating plane (before the third mask).
    pub histogram: Vec<u64>,
    /// Rays launched.
    pub n_samples: u64,
    /// Seed that reproduces this result bit for bit.
    pub seed: u64,
    /// Transmitted flux per third-grating scan position.
    pub scan: Vec<f64>,
    /// (max − min)/(max + min) over the scan.
    pub visibility: f64,
    /// Counting-statistics estimate of the visibility error.
    pub statistical_error: f64,
}

impl McResult {
    /// Rays that reached the third-grating plane.
    pub fn transmitted(&self) -> u64 {
        self.histogram.iter().sum()
    }
}

/// Ballistic transverse velocity change from the wall potential, applied as
/// a single impulse at the grating mid-plane:
///
///   Δv_x = −(L_g/(m·v)) · dV/dx,  V(x) = −C3·[(a/2 − x)⁻³ + (a/2 + x)⁻³]
///
/// This equals (ħ/m)·∂φ/∂x for the eikonal phase used by the quantum model.
pub fn vdw_kick(
    x: f64,
    grating: &crate::physics::GratingSpec,
    molecule: &crate::physics::MoleculeSpecies,
    v: f64,
) -> Result<f64> {
    let half = grating.slit_width() / 2.0;
    if x.abs() >= half {
        return Err(Error::domain(format!(
            "position {x} m lies outside the open slit (±{half} m)"
        )));
    }
    if !(v > 0.0) {
        return Err(Error::domain(format!("velocity must be positive, got {v} m/s")));
    }
    Ok(kick_unchecked(x, half, grating.thickness, molecule.c3, molecule.mass_kg(), v))
}

#[inline]
fn kick_unchecked(x: f64, half: f64, thickness: f64, c3: f64, mass: f64, v: f64) -> f64 {
    3.0 * c3 * thickness / (mass * v) * ((half - x).powi(-4) - (half + x).powi(-4))
}

/// Monte Carlo Moiré signal at one velocity.
///
/// Rays start uniformly over the first grating's open slits with a uniform
/// angular spread that covers the geometric acceptance of the aperture
/// chain and is rounded up to a whole number of grating periods per
/// separation, so the transverse offset between consecutive planes is
/// exactly uniform modulo the period. Rays inside the absorbed wall margin
/// at the second grating are discarded.
pub fn moire_signal(
    config: &InterferometerConfig,
    v: f64,
    n_samples: u64,
    seed: u64,
    scan_points: usize,
) -> Result<McResult> {
    if !(v > 0.0) {
        return Err(Error::domain(format!("velocity must be positive, got {v} m/s")));
    }
    if n_samples == 0 || scan_points < 4 {
        return Err(Error::domain("need n_samples ≥ 1 and scan_points ≥ 4"));
    }
    let d = config.period();
    let separation = config.separation;
    let a1 = config.g1.slit_width();
    let a2 = config.g2.slit_width();
    let mass = config.molecule.mass_kg();
    let margin = absorbed_margin(&config.g2, &config.molecule, v, crate::physics::DEFAULT_PHI_CAP);
    let open2 = a2 / 2.0 - margin;

    // ±3× the geometric acceptance of the slit chain, rounded up to whole
    // periods of transverse offset per separation.
    let geometric = (a1 + config.g3.slit_width()) / (2.0 * 2.0 * separation);
    let offsets = (3.0 * geometric / (d / separation)).ceil().max(1.0);
    let half_angle = offsets * d / separation;

    let n_chunks = n_samples.div_ceil(CHUNK);
    let histogram = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk + 1);
            let rays = CHUNK.min(n_samples - chunk * CHUNK);
            let mut local = vec![0u64; POSITION_BINS];
            for _ in 0..rays {
                let x1 = (rng.random::<f64>() - 0.5) * a1;
                let angle = (rng.random::<f64>() - 0.5) * 2.0 * half_angle;
                let x2 = x1 + angle * separation;
                // fold into the slit-centered period
                let x2c = centered_mod(x2, d);
                if x2c.abs() >= open2 {
                    continue;
                }
                let dvx = kick_unchecked(x2c, a2 / 2.0, config.g2.thickness, config.molecule.c3, mass, v);
                let x3 = x2 + (angle + dvx / v) * separation;
                let bin = ((x3 / d).rem_euclid(1.0) * POSITION_BINS as f64) as usize % POSITION_BINS;
                local[bin] += 1;
            }
            local
        })
        .reduce(
            || vec![0u64; POSITION_BINS],
            |mut acc, local| {
                for (a, b) in acc.iter_mut().zip(&local) {
                    *a += b;
                }
                acc
            },
        );

    let transmitted: u64 = histogram.iter().sum();
    if transmitted == 0 {
        return Err(Error::degenerate("no rays transmitted through the grating chain"));
    }

    let (scan, visibility, statistical_error) =
        scan_third_grating(&histogram, d, config.g3.slit_width(), scan_points);

    Ok(McResult { histogram, n_samples, seed, scan, visibility, statistical_error })
}

/// Transmission through the scanned third grating, from the arrival
/// histogram with fractional bin overlap at the slit edges.
fn scan_third_grating(
    histogram: &[u64],
    d: f64,
    slit_width: f64,
    scan_points: usize,
) -> (Vec<f64>, f64, f64) {
    let bins = histogram.len();
    let bin_width = d / bins as f64;
    let mut scan = Vec::with_capacity(scan_points);
    for s in 0..scan_points {
        let x_s = s as f64 * d / scan_points as f64;
        // open interval (mod d): [x_s − a/2, x_s + a/2]
        let lo = x_s - slit_width / 2.0;
        let hi = x_s + slit_width / 2.0;
        let mut acc = 0.0;
        for (b, &count) in histogram.iter().enumerate() {
            if count == 0 {
                continue;
            }
            let b_lo = b as f64 * bin_width;
            let b_hi = b_lo + bin_width;
            let mut overlap = 0.0;
            for shift in [-d, 0.0, d] {
                let l = (b_lo + shift).max(lo);
                let h = (b_hi + shift).min(hi);
                if h > l {
                    overlap += h - l;
                }
            }
            acc += count as f64 * overlap / bin_width;
        }
        scan.push(acc);
    }
    let max = scan.iter().cloned().fold(f64::MIN, f64::max);
    let min = scan.iter().cloned().fold(f64::MAX, f64::min);
    let visibility = (max - min) / (max + min);
    // Poisson counting errors of the extremes propagated through
    // (max−min)/(max+min); the extremes sit in disjoint scan windows.
    let sum = max + min;
    let var = (2.0 * min / (sum * sum)).powi(2) * max.max(1.0)
        + (2.0 * max / (sum * sum)).powi(2) * min.max(1.0);
    (scan, visibility, var.sqrt())
}

fn centered_mod(x: f64, d: f64) -> f64 {
    let r = (x / d).rem_euclid(1.0) * d;
    if r > d / 2.0 {
        r - d
    } else {
        r
    }
}

/// Classical visibility over a velocity list. Each point gets its own
/// deterministic RNG stream derived from the master seed.
pub fn classical_visibility_curve(
    config: &InterferometerConfig,
    velocities: &[f64],
    n_samples: u64,
    seed: u64,
    scan_points: usize,
) -> Result<Vec<(f64, f64, f64)>> {
    if velocities.is_empty() {
        return Err(Error::domain("velocity list must not be empty"));
    }
    velocities
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let point_seed = seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(i as u64 + 1));
            let mc = moire_signal(config, v, n_samples, point_seed, scan_points)?;
            Ok((v, mc.visibility, mc.statistical_error))
        })
        .collect()
}
