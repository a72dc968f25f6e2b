//! Gravitational velocity selection: three horizontal slits pick free-fall
//! parabolas, so the vertical arrival position on the detector encodes the
//! longitudinal velocity. Fast molecules land high, slow molecules low.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::constants::BOLTZMANN;
use crate::error::{Error, Result};
use crate::physics::{fringe_signal_with, FringeParams, InterferometerConfig};

/// Slit positions and widths of the free-fall selection chain. Heights are
/// measured downward from the line through the slit centers ("fall depth").
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamlineGeometry {
    /// Oven aperture width, meters.
    pub oven_slit_width: f64,
    /// Selection slit width, meters.
    pub selection_slit_width: f64,
    /// Distance oven → selection slit, meters.
    pub selection_slit_z: f64,
    /// Distance oven → detecting surface, meters.
    pub detector_z: f64,
    /// Gravitational acceleration, m/s².
    pub gravity: f64,
    /// Calibration offset added to every fall height, meters.
    pub height_reference_offset: f64,
}

impl BeamlineGeometry {
    pub fn new(
        oven_slit_width: f64,
        selection_slit_width: f64,
        selection_slit_z: f64,
        detector_z: f64,
        gravity: f64,
        height_reference_offset: f64,
    ) -> Result<Self> {
        if !(oven_slit_width >= 0.0 && selection_slit_width >= 0.0) {
            return Err(Error::domain("slit widths must be non-negative"));
        }
        if !(selection_slit_z > 0.0 && detector_z > selection_slit_z) {
            return Err(Error::domain(format!(
                "need 0 < selection_slit_z < detector_z, got {selection_slit_z} and {detector_z}"
            )));
        }
        if !(gravity > 0.0) {
            return Err(Error::domain("gravity must be positive"));
        }
        Ok(BeamlineGeometry {
            oven_slit_width,
            selection_slit_width,
            selection_slit_z,
            detector_z,
            gravity,
            height_reference_offset,
        })
    }

    /// K = g·z_d·(z_d − z_s)/2, so that the central-ray fall height is K/v².
    pub fn fall_constant(&self) -> f64 {
        self.gravity * self.detector_z * (self.detector_z - self.selection_slit_z) / 2.0
    }
}

/// Fall height below the reference line for the parabola through both slit
/// centers: h(v) = K/v² + offset.
pub fn fall_height(v: f64, geom: &BeamlineGeometry) -> Result<f64> {
    if !(v > 0.0) {
        return Err(Error::domain(format!("velocity must be positive, got {v} m/s")));
    }
    Ok(geom.fall_constant() / (v * v) + geom.height_reference_offset)
}

/// Exact inverse of [`fall_height`]: v(h) = sqrt(K/(h − offset)).
pub fn velocity_from_height(h: f64, geom: &BeamlineGeometry) -> Result<f64> {
    let depth = h - geom.height_reference_offset;
    if !(depth > 0.0) {
        return Err(Error::domain(format!(
            "height {h} m is at or above the reference line; no finite velocity lands there"
        )));
    }
    Ok((geom.fall_constant() / depth).sqrt())
}

/// Velocity distribution of the thermal source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SourceDistribution {
    /// Effusive flux weighting ∝ v³·exp(−m·v²/(2kT)).
    EffusiveFlux,
    /// Tabulated flux density, linearly interpolated.
    Tabulated { velocities: Vec<f64>, weights: Vec<f64> },
}

/// Thermal source: temperature plus distribution shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceModel {
    /// Source temperature, kelvin.
    pub temperature: f64,
    pub distribution: SourceDistribution,
}

impl SourceModel {
    pub fn effusive(temperature: f64) -> Result<Self> {
        if !(temperature > 0.0) {
            return Err(Error::domain(format!("temperature must be positive, got {temperature} K")));
        }
        Ok(SourceModel { temperature, distribution: SourceDistribution::EffusiveFlux })
    }

    pub fn tabulated(temperature: f64, velocities: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if velocities.len() != weights.len() || velocities.len() < 2 {
            return Err(Error::data("tabulated distribution needs ≥ 2 matched points"));
        }
        if !velocities.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::data("tabulated velocities must be strictly increasing"));
        }
        if weights.iter().any(|&w| !(w >= 0.0)) || weights.iter().sum::<f64>() <= 0.0 {
            return Err(Error::data("tabulated weights must be non-negative and normalizable"));
        }
        if !(temperature > 0.0) {
            return Err(Error::domain("temperature must be positive"));
        }
        Ok(SourceModel { temperature, distribution: SourceDistribution::Tabulated { velocities, weights } })
    }

    /// Most probable speed of the bare Maxwell distribution, √(2kT/m);
    /// the flux-weighted distribution peaks at √(3/2) times this.
    pub fn thermal_speed(&self, mass_kg: f64) -> f64 {
        (2.0 * BOLTZMANN * self.temperature / mass_kg).sqrt()
    }

    /// Flux density (unnormalized) at velocity v.
    pub fn flux_density(&self, v: f64, mass_kg: f64) -> f64 {
        if v <= 0.0 {
            return 0.0;
        }
        match &self.distribution {
            SourceDistribution::EffusiveFlux => {
                let vp = self.thermal_speed(mass_kg);
                let r = v / vp;
                v * v * v * (-r * r).exp()
            }
            SourceDistribution::Tabulated { velocities, weights } => {
                interp_linear(velocities, weights, v)
            }
        }
    }

    /// Draw one velocity.
    fn sample(&self, rng: &mut impl Rng, mass_kg: f64) -> f64 {
        match &self.distribution {
            SourceDistribution::EffusiveFlux => {
                // v²/vp² of the flux distribution is Gamma(2,1): the sum of
                // two unit exponentials.
                let vp = self.thermal_speed(mass_kg);
                let u1: f64 = rng.random();
                let u2: f64 = rng.random();
                vp * (-(u1.ln() + u2.ln())).sqrt()
            }
            SourceDistribution::Tabulated { velocities, weights } => {
                // rejection sampling against the tabulated envelope
                let w_max = weights.iter().cloned().fold(0.0, f64::max);
                let lo = velocities[0];
                let hi = *velocities.last().unwrap();
                loop {
                    let v = lo + rng.random::<f64>() * (hi - lo);
                    if rng.random::<f64>() * w_max <= interp_linear(velocities, weights, v) {
                        return v;
                    }
                }
            }
        }
    }
}

fn interp_linear(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x <= xs[0] || x >= *xs.last().unwrap() {
        return 0.0;
    }
    let i = xs.partition_point(|&p| p <= x).min(xs.len() - 1);
    let (x0, x1) = (xs[i - 1], xs[i]);
    let t = (x - x0) / (x1 - x0);
    ys[i - 1] * (1.0 - t) + ys[i] * t
}

/// Normalized velocity histogram of the molecules reaching one detector
/// height window.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityDistribution {
    /// Bin centers, m/s.
    pub velocities: Vec<f64>,
    /// Normalized weights (Σ = 1).
    pub weights: Vec<f64>,
    /// Mean of the accepted samples.
    pub mean: f64,
    /// FWHM of the histogram divided by the mean.
    pub dv_over_v: f64,
    /// Accepted Monte Carlo samples behind the histogram.
    pub n_accepted: u64,
}

impl VelocityDistribution {
    /// A single-velocity distribution (useful as the window → 0 limit).
    pub fn delta(v: f64) -> Self {
        VelocityDistribution {
            velocities: vec![v],
            weights: vec![1.0],
            mean: v,
            dv_over_v: 0.0,
            n_accepted: 1,
        }
    }
}

/// Arrival fall-depth of the parabola through oven offset y1 and selection
/// offset y2 at speed v (offsets positive upward).
fn arrival_depth(v: f64, y1: f64, y2: f64, geom: &BeamlineGeometry) -> f64 {
    let ratio = geom.detector_z / geom.selection_slit_z;
    geom.fall_constant() / (v * v) - y1 * (1.0 - ratio) - y2 * ratio + geom.height_reference_offset
}

/// Monte Carlo velocity distribution at detector height `h`, integrating
/// over a vertical window (the stripe-integration height), the oven slit
/// and the selection slit.
pub fn velocity_distribution_at_height(
    h: f64,
    window: f64,
    geom: &BeamlineGeometry,
    source: &SourceModel,
    molecule_mass_kg: f64,
    n_samples: u64,
    seed: u64,
) -> Result<VelocityDistribution> {
    if !(window > 0.0) {
        return Err(Error::domain("window must be positive"));
    }
    if n_samples == 0 {
        return Err(Error::domain("n_samples must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut accepted = Vec::new();
    for _ in 0..n_samples {
        let y1 = if geom.oven_slit_width > 0.0 {
            (rng.random::<f64>() - 0.5) * geom.oven_slit_width
        } else {
            0.0
        };
        let y2 = if geom.selection_slit_width > 0.0 {
            (rng.random::<f64>() - 0.5) * geom.selection_slit_width
        } else {
            0.0
        };
        let v = source.sample(&mut rng, molecule_mass_kg);
        let depth = arrival_depth(v, y1, y2, geom);
        if (depth - h).abs() <= window / 2.0 {
            accepted.push(v);
        }
    }
    if accepted.is_empty() {
        return Err(Error::degenerate(format!(
            "no samples reached height {h} m within a {window} m window"
        )));
    }

    let n_accepted = accepted.len() as u64;
    let mean = accepted.iter().sum::<f64>() / accepted.len() as f64;
    let (lo, hi) = accepted
        .iter()
        .fold((f64::MAX, f64::MIN), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let bins = 64usize;
    let span = (hi - lo).max(mean * 1e-12);
    let mut hist = vec![0u64; bins];
    for &v in &accepted {
        let b = (((v - lo) / span) * bins as f64) as usize;
        hist[b.min(bins - 1)] += 1;
    }
    let total: u64 = hist.iter().sum();
    let velocities: Vec<f64> = (0..bins).map(|b| lo + (b as f64 + 0.5) * span / bins as f64).collect();
    let weights: Vec<f64> = hist.iter().map(|&c| c as f64 / total as f64).collect();
    let fwhm = histogram_fwhm(&velocities, &weights);

    Ok(VelocityDistribution {
        velocities,
        weights,
        mean,
        dv_over_v: fwhm / mean,
        n_accepted,
    })
}

/// Full width at half maximum by linear interpolation of the half crossings.
fn histogram_fwhm(centers: &[f64], weights: &[f64]) -> f64 {
    let (peak_idx, &peak) = weights
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();
    if peak <= 0.0 {
        return 0.0;
    }
    let half = peak / 2.0;
    let mut left = centers[0];
    for i in (1..=peak_idx).rev() {
        if weights[i - 1] <= half && weights[i] >= half {
            let t = (half - weights[i - 1]) / (weights[i] - weights[i - 1]).max(f64::MIN_POSITIVE);
            left = centers[i - 1] + t * (centers[i] - centers[i - 1]);
            break;
        }
    }
    let mut right = *centers.last().unwrap();
    for i in peak_idx..weights.len() - 1 {
        if weights[i] >= half && weights[i + 1] <= half {
            let t = (weights[i] - half) / (weights[i] - weights[i + 1]).max(f64::MIN_POSITIVE);
            right = centers[i] + t * (centers[i + 1] - centers[i]);
            break;
        }
    }
    (right - left).max(0.0)
}

/// How the single-velocity model is folded with the velocity distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AveragingMode {
    /// ∫ V(v)·w(v) dv — average the visibilities.
    Visibility,
    /// Average the complex fringe components over w(v), then take the
    /// visibility; sensitive to fringe-phase variation across the support.
    Signal,
}

/// Distribution-averaged fringe visibility (sinusoidal estimator).
pub fn averaged_visibility_over(
    dist: &VelocityDistribution,
    config: &InterferometerConfig,
    mode: AveragingMode,
    params: &FringeParams,
) -> Result<f64> {
    match mode {
        AveragingMode::Visibility => {
            let mut acc = 0.0;
            for (&v, &w) in dist.velocities.iter().zip(&dist.weights) {
                if w == 0.0 {
                    continue;
                }
                acc += w * fringe_signal_with(config, v, params)?.visibility_sinusoidal()?;
            }
            Ok(acc)
        }
        AveragingMode::Signal => {
            let mut s0 = 0.0;
            let mut s1 = num_complex::Complex64::new(0.0, 0.0);
            for (&v, &w) in dist.velocities.iter().zip(&dist.weights) {
                if w == 0.0 {
                    continue;
                }
                let signal = fringe_signal_with(config, v, params)?;
                s0 += w * signal.component(0).re;
                s1 += w * signal.component(1);
            }
            if s0 <= 0.0 {
                return Err(Error::degenerate("averaged signal has non-positive S_0"));
            }
            Ok(2.0 * s1.norm() / s0)
        }
    }
}

/// Distribution-averaged visibility at detector height `h`, with the
/// velocity distribution built by Monte Carlo from the slit geometry.
#[allow(clippy::too_many_arguments)]
pub fn averaged_visibility(
    h: f64,
    config: &InterferometerConfig,
    geom: &BeamlineGeometry,
    source: &SourceModel,
    mode: AveragingMode,
    window: f64,
    n_samples: u64,
    seed: u64,
) -> Result<f64> {
    let dist = velocity_distribution_at_height(
        h,
        window,
        geom,
        source,
        config.molecule.mass_kg(),
        n_samples,
        seed,
    )?;
    averaged_visibility_over(&dist, config, mode, &FringeParams::default())
}

/// Deterministic central-ray deposition density versus height: flux through
/// the height mapping, N(h) ∝ flux(v(h))·v(h)³, normalized to peak 1.
#[derive(Debug, Clone, PartialEq)]
pub struct DepositionProfile {
    pub heights: Vec<f64>,
    pub densities: Vec<f64>,
}

impl DepositionProfile {
    /// Build over a height grid from the central-ray velocity mapping.
    pub fn from_geometry(
        heights: &[f64],
        geom: &BeamlineGeometry,
        source: &SourceModel,
        molecule_mass_kg: f64,
    ) -> Result<Self> {
        if heights.len() < 2 || !heights.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::domain("height grid must be strictly increasing with ≥ 2 points"));
        }
        let mut densities = Vec::with_capacity(heights.len());
        for &h in heights {
            let density = match velocity_from_height(h, geom) {
                Ok(v) => source.flux_density(v, molecule_mass_kg) * v.powi(3),
                Err(_) => 0.0,
            };
            densities.push(density);
        }
        let peak = densities.iter().cloned().fold(0.0, f64::max);
        if peak <= 0.0 {
            return Err(Error::degenerate("deposition profile vanishes on the given height grid"));
        }
        for d in &mut densities {
            *d /= peak;
        }
        Ok(DepositionProfile { heights: heights.to_vec(), densities })
    }

    pub fn density_at(&self, h: f64) -> f64 {
        if h <= self.heights[0] {
            return self.densities[0];
        }
        if h >= *self.heights.last().unwrap() {
            return *self.densities.last().unwrap();
        }
        let i = self.heights.partition_point(|&p| p <= h).min(self.heights.len() - 1);
        let t = (h - self.heights[i - 1]) / (self.heights[i] - self.heights[i - 1]);
        self.densities[i - 1] * (1.0 - t) + self.densities[i] * t
    }

    /// Height of the densest deposition (the most probable detected
    /// velocity class).
    pub fn peak_height(&self) -> f64 {
        let (i, _) = self
            .densities
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap();
        self.heights[i]
    }

    /// Extent of the profiled detector region.
    pub fn span(&self) -> f64 {
        self.heights.last().unwrap() - self.heights[0]
    }
}

/// Dilute a visibility curve with a fringe-free scattered background: a
/// fraction of the molecules at the most probable velocity is spread
/// uniformly over the detector extent, so
///
///   V'(h) = V(h) · N(h) / (N(h) + ρ_bg·window),
///   ρ_bg = fraction · N(h_peak) / extent.
pub fn scattering_correction(
    curve: &[(f64, f64)],
    profile: &DepositionProfile,
    fraction: f64,
    window: f64,
) -> Result<Vec<(f64, f64)>> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::domain(format!("scattered fraction must lie in [0, 1), got {fraction}")));
    }
    if !(window > 0.0) {
        return Err(Error::domain("window must be positive"));
    }
    let rho_bg = fraction * profile.density_at(profile.peak_height()) / profile.span();
    Ok(curve
        .iter()
        .map(|&(h, vis)| {
            let n = profile.density_at(h);
            let corrected = if n > 0.0 { vis * n / (n + rho_bg * window) } else { 0.0 };
            (h, corrected)
        })
        .collect())
}
