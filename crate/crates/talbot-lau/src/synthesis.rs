//! Forward synthesis of a full deposition run: quantum fringe model,
//! gravitational velocity spreading, mechanical stripe recording and the
//! fluorescence illumination model, with optional injected grating tilt and
//! slow drift.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::beamline::{BeamlineGeometry, SourceModel};
use crate::error::{Error, Result};
use crate::imaging::{synthesize_frame, FrameKind, ImageFrame, NoiseModel, StripeGeometry, StripeStack};
use crate::physics::{fringe_signal_with, FringeParams, InterferometerConfig};

/// Frame raster shared by every stripe of a synthesized run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameShape {
    pub width: usize,
    pub height: usize,
    /// Meters per pixel.
    pub pixel_pitch: f64,
    /// Fall depth of row 0, meters.
    pub origin_height: f64,
}

/// Illumination-model constants for synthesis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpticsModel {
    /// Relative strength of the quadratic illumination falloff across the
    /// frame (0 = perfectly flat).
    pub vignette: f64,
    /// Substrate background fluorescence B.
    pub background: f64,
    /// Fluorescence efficiency η.
    pub efficiency: f64,
    /// Detector dark level I_c.
    pub dark_level: f64,
}

impl Default for OpticsModel {
    fn default() -> Self {
        OpticsModel { vignette: 0.08, background: 5.0, efficiency: 2.0, dark_level: 50.0 }
    }
}

/// Complete description of one synthetic run.
#[derive(Debug, Clone)]
pub struct StackScenario {
    pub interferometer: InterferometerConfig,
    pub beamline: BeamlineGeometry,
    pub source: SourceModel,
    pub stripes: StripeGeometry,
    pub frame: FrameShape,
    /// Width of the deposited band on the adsorber, meters.
    pub exposed_width: f64,
    pub optics: OpticsModel,
    pub noise: NoiseModel,
    /// Roll of the third grating, radians; shifts the local grating phase
    /// by 2π·θ·h/d.
    pub tilt: f64,
    /// Total grating drift over the scan, meters, linear in time.
    pub drift_total: f64,
    /// Peak deposited density in Ñ units (η/B cancels in the corrected
    /// frames; this sets the fringe-to-background contrast of I_f).
    pub peak_density: f64,
    /// Velocity grid resolution for the cached fringe components.
    pub velocity_grid: usize,
    /// Quadrature points per slit for the height ↔ velocity spreading.
    pub slit_quadrature: usize,
    pub fringe_params: FringeParams,
}

impl StackScenario {
    /// Paper-default scenario with a compact frame raster.
    pub fn default_run() -> Self {
        StackScenario {
            interferometer: crate::presets::interferometer(),
            beamline: crate::presets::beamline(),
            source: crate::presets::source(),
            stripes: crate::presets::stripe_geometry(),
            frame: FrameShape { width: 48, height: 600, pixel_pitch: 4e-6, origin_height: 50e-6 },
            exposed_width: crate::presets::EXPOSED_STRIPE_WIDTH,
            optics: OpticsModel::default(),
            noise: NoiseModel::off(),
            tilt: 0.0,
            drift_total: 0.0,
            peak_density: 1.0,
            velocity_grid: 256,
            slit_quadrature: 12,
            fringe_params: FringeParams::default(),
        }
    }
}

/// What the forward model injected, for closed-loop comparisons: per frame
/// row, the velocity-averaged fringe parameters before noise.
#[derive(Debug, Clone)]
pub struct InjectedTruth {
    /// Fall depth per row, meters.
    pub heights: Vec<f64>,
    /// Relative deposition density per row (peak 1).
    pub density: Vec<f64>,
    /// Velocity-averaged fringe visibility per row.
    pub visibility: Vec<f64>,
    /// Fringe phase at zero grating offset per row (radians), following the
    /// fit convention value ∝ 1 + V·cos(2πx/d − φ).
    pub phase: Vec<f64>,
}

/// A synthesized raw run: per-stripe fluorescence frames plus matching
/// reference and dark frames.
#[derive(Debug, Clone)]
pub struct SynthesizedStack {
    pub stripes: Vec<ImageFrame>,
    pub reference: ImageFrame,
    pub dark: ImageFrame,
    pub geometry: StripeGeometry,
    pub band_center_x: f64,
    pub truth: InjectedTruth,
}

impl SynthesizedStack {
    /// Flat-field correct every stripe frame into an analysis-ready stack.
    pub fn corrected(&self, epsilon: f64) -> Result<StripeStack> {
        let frames = self
            .stripes
            .iter()
            .map(|f| crate::imaging::correct_frame(f, &self.reference, &self.dark, epsilon))
            .collect::<Result<Vec<_>>>()?;
        StripeStack::new(self.geometry, frames, self.band_center_x)
    }
}

/// Velocity-averaged fringe components per frame row.
struct RowModel {
    density: Vec<f64>,
    components: Vec<Vec<Complex64>>, // per row: S_m / S_0 for m = 0..=m_max
}

/// Run the forward model.
pub fn synthesize_stack(scenario: &StackScenario, seed: u64) -> Result<SynthesizedStack> {
    scenario.stripes.validate()?;
    let shape = &scenario.frame;
    if shape.width == 0 || shape.height == 0 || !(shape.pixel_pitch > 0.0) {
        return Err(Error::domain("frame shape must be positive"));
    }
    if !(scenario.exposed_width > 0.0
        && scenario.exposed_width <= shape.width as f64 * shape.pixel_pitch)
    {
        return Err(Error::domain("exposed band must fit inside the frame"));
    }
    if !(scenario.peak_density > 0.0) {
        return Err(Error::domain("peak density must be positive"));
    }

    let row_model = build_row_model(scenario)?;
    let d = scenario.stripes.grating_period;
    let band_center = shape.width as f64 * shape.pixel_pitch / 2.0;
    let duration = scenario.stripes.total_duration();

    // shared optics fields
    let illumination = ImageFrame::from_fn(
        shape.width,
        shape.height,
        shape.pixel_pitch,
        shape.origin_height,
        FrameKind::Reference,
        |x, h| {
            let cx = (x - band_center) / (shape.width as f64 * shape.pixel_pitch);
            let ch = (h - shape.origin_height) / (shape.height as f64 * shape.pixel_pitch) - 0.5;
            1.0 - scenario.optics.vignette * (cx * cx + ch * ch)
        },
    )?;
    let collection = ImageFrame::filled(
        shape.width,
        shape.height,
        shape.pixel_pitch,
        shape.origin_height,
        FrameKind::Reference,
        1.0,
    )?;
    let dark = ImageFrame::filled(
        shape.width,
        shape.height,
        shape.pixel_pitch,
        shape.origin_height,
        FrameKind::Dark,
        scenario.optics.dark_level,
    )?;

    let mut stripe_frames = Vec::with_capacity(scenario.stripes.n_stripes);
    for i in 0..scenario.stripes.n_stripes {
        let t_mid = scenario.stripes.stripe_mid_time(i);
        let drift = scenario.drift_total * t_mid / duration;
        let x_nominal = scenario.stripes.grating_position(i);
        let mut density = Vec::with_capacity(shape.width * shape.height);
        for row in 0..shape.height {
            let h = shape.origin_height + row as f64 * shape.pixel_pitch;
            let rho = row_model.density[row] * scenario.peak_density;
            let comps = &row_model.components[row];
            let x_eff = x_nominal + scenario.tilt * h + drift;
            // modulation with unit mean: Σ_m (S_m/S_0) e^{2πimx/d}
            let mut modulation = 1.0;
            for (m, c) in comps.iter().enumerate().skip(1) {
                let arg = 2.0 * PI * m as f64 * x_eff / d;
                modulation += 2.0 * (c * Complex64::new(0.0, arg).exp()).re;
            }
            let value = (rho * modulation).max(0.0);
            for col in 0..shape.width {
                let x = (col as f64 + 0.5) * shape.pixel_pitch;
                let in_band = (x - band_center).abs() < scenario.exposed_width / 2.0;
                density.push(if in_band { value } else { 0.0 });
            }
        }
        let density_frame = ImageFrame::new(
            shape.width,
            shape.height,
            shape.pixel_pitch,
            shape.origin_height,
            FrameKind::Fluorescence,
            density,
        )?;
        stripe_frames.push(synthesize_frame(
            &density_frame,
            &illumination,
            &collection,
            scenario.optics.background,
            scenario.optics.efficiency,
            &dark,
            &scenario.noise,
            seed.wrapping_add(1 + i as u64),
        )?);
    }

    let empty = ImageFrame::filled(
        shape.width,
        shape.height,
        shape.pixel_pitch,
        shape.origin_height,
        FrameKind::Fluorescence,
        0.0,
    )?;
    let reference = synthesize_frame(
        &empty,
        &illumination,
        &collection,
        scenario.optics.background,
        scenario.optics.efficiency,
        &dark,
        &scenario.noise,
        seed.wrapping_add(10_001),
    )?;
    // the dark frame is read out with readout noise only
    let dark_noise = NoiseModel { shot_scale: None, readout_sigma: scenario.noise.readout_sigma };
    let zero_illum = ImageFrame::filled(
        shape.width,
        shape.height,
        shape.pixel_pitch,
        shape.origin_height,
        FrameKind::Reference,
        0.0,
    )?;
    let dark_frame = synthesize_frame(
        &empty,
        &zero_illum,
        &collection,
        0.0,
        0.0,
        &dark,
        &dark_noise,
        seed.wrapping_add(10_002),
    )?;
    let mut dark_frame = dark_frame;
    dark_frame.kind = FrameKind::Dark;

    let heights: Vec<f64> =
        (0..shape.height).map(|r| shape.origin_height + r as f64 * shape.pixel_pitch).collect();
    let visibility: Vec<f64> = row_model
        .components
        .iter()
        .map(|c| if c.len() > 1 { 2.0 * c[1].norm() } else { 0.0 })
        .collect();
    // fit convention: value ∝ 1 + V·cos(2πx/d − φ) at zero tilt/drift
    let phase: Vec<f64> = row_model
        .components
        .iter()
        .enumerate()
        .map(|(row, c)| {
            let h = heights[row];
            let physics_phase = if c.len() > 1 { c[1].arg() } else { 0.0 };
            -(physics_phase + 2.0 * PI * scenario.tilt * h / d)
        })
        .collect();

    Ok(SynthesizedStack {
        stripes: stripe_frames,
        reference,
        dark: dark_frame,
        geometry: scenario.stripes,
        band_center_x: band_center,
        truth: InjectedTruth { heights, density: row_model.density, visibility, phase },
    })
}

/// Cache S_m(v)/S_0(v) on a velocity grid and fold it with the slit-chain
/// height mapping, row by row.
fn build_row_model(scenario: &StackScenario) -> Result<RowModel> {
    let shape = &scenario.frame;
    let m_max = scenario.fringe_params.m_max;
    let mass = scenario.interferometer.molecule.mass_kg();

    // velocity grid covering every flux-carrying class
    let vp = scenario.source.thermal_speed(mass);
    let v_lo = (0.15 * vp).max(5.0);
    let v_hi = 5.0 * vp;
    let grid_n = scenario.velocity_grid.max(16);
    let mut grid_s: Vec<Vec<Complex64>> = Vec::with_capacity(grid_n);
    let mut grid_v = Vec::with_capacity(grid_n);
    for k in 0..grid_n {
        let v = v_lo + (v_hi - v_lo) * k as f64 / (grid_n - 1) as f64;
        let signal = fringe_signal_with(&scenario.interferometer, v, &scenario.fringe_params)?;
        let s0 = signal.component(0).re;
        if s0 <= 0.0 {
            return Err(Error::degenerate("fringe model has non-positive S_0 on the velocity grid"));
        }
        grid_v.push(v);
        grid_s.push((0..=m_max as i64).map(|m| signal.component(m) / s0).collect());
    }
    let interp = |v: f64, m: usize| -> Complex64 {
        if v <= grid_v[0] {
            return grid_s[0][m];
        }
        if v >= grid_v[grid_n - 1] {
            return grid_s[grid_n - 1][m];
        }
        let t = (v - v_lo) / (v_hi - v_lo) * (grid_n - 1) as f64;
        let i = (t.floor() as usize).min(grid_n - 2);
        let frac = t - i as f64;
        grid_s[i][m] * (1.0 - frac) + grid_s[i + 1][m] * frac
    };

    // deterministic midpoint quadrature over the two slits
    let nq = scenario.slit_quadrature.max(1);
    let offsets = |width: f64| -> Vec<f64> {
        if width == 0.0 {
            vec![0.0]
        } else {
            (0..nq).map(|q| ((q as f64 + 0.5) / nq as f64 - 0.5) * width).collect()
        }
    };
    let y1s = offsets(scenario.beamline.oven_slit_width);
    let y2s = offsets(scenario.beamline.selection_slit_width);
    let k_fall = scenario.beamline.fall_constant();
    let ratio = scenario.beamline.detector_z / scenario.beamline.selection_slit_z;

    let mut density = Vec::with_capacity(shape.height);
    let mut components = Vec::with_capacity(shape.height);
    for row in 0..shape.height {
        let h = shape.origin_height + row as f64 * shape.pixel_pitch;
        let mut weight_sum = 0.0;
        let mut comp = vec![Complex64::new(0.0, 0.0); m_max + 1];
        for &y1 in &y1s {
            for &y2 in &y2s {
                // invert the arrival-depth relation for this slit pair
                let h_eff = h - scenario.beamline.height_reference_offset
                    + y1 * (1.0 - ratio)
                    + y2 * ratio;
                if h_eff <= 0.0 {
                    continue;
                }
                let v = (k_fall / h_eff).sqrt();
                // arrivals per unit height: flux(v)·|dv/dh| = flux(v)·v³/(2K)
                let w = scenario.source.flux_density(v, mass) * v.powi(3) / (2.0 * k_fall);
                if w <= 0.0 {
                    continue;
                }
                weight_sum += w;
                for (m, c) in comp.iter_mut().enumerate() {
                    *c += w * interp(v, m);
                }
            }
        }
        if weight_sum > 0.0 {
            for c in &mut comp {
                *c /= weight_sum;
            }
        }
        density.push(weight_sum);
        components.push(comp);
    }
    let peak = density.iter().cloned().fold(0.0, f64::max);
    if peak <= 0.0 {
        return Err(Error::degenerate("no deposition lands inside the frame"));
    }
    for value in &mut density {
        *value /= peak;
    }
    Ok(RowModel { density, components })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::{fit_fringe, visibility_vs_height};

    #[test]
    fn closed_loop_recovers_injected_visibility_curve() {
        let mut scenario = StackScenario::default_run();
        scenario.frame = FrameShape { width: 48, height: 400, pixel_pitch: 4e-6, origin_height: 150e-6 };
        let stack = synthesize_stack(&scenario, 42).unwrap();
        let corrected = stack.corrected(1e-9).unwrap();
        let heights: Vec<f64> = (0..30).map(|i| 250e-6 + i as f64 * 40e-6).collect();
        let curve =
            visibility_vs_height(&corrected, &heights, 100e-6, 33e-6, &scenario.beamline).unwrap();
        assert!(curve.failures.is_empty(), "failures: {:?}", curve.failures);
        for p in &curve.points {
            // injected truth at the nearest row
            let row = ((p.height - scenario.frame.origin_height) / scenario.frame.pixel_pitch)
                .round() as usize;
            let injected = stack.truth.visibility[row];
            assert!(
                (p.visibility - injected).abs() < 0.01 + 3.0 * p.visibility_err,
                "h={} µm: recovered {} vs injected {}",
                p.height * 1e6,
                p.visibility,
                injected
            );
        }
    }

    #[test]
    fn zero_exposure_equals_reference_plus_dark() {
        let mut scenario = StackScenario::default_run();
        scenario.peak_density = 1e-300; // effectively zero deposition
        scenario.frame.height = 64;
        let stack = synthesize_stack(&scenario, 1).unwrap();
        for (a, b) in stack.stripes[0].data.iter().zip(&stack.reference.data) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn injected_tilt_shows_up_as_phase_gradient() {
        let mut scenario = StackScenario::default_run();
        scenario.tilt = 200e-6;
        scenario.frame = FrameShape { width: 48, height: 300, pixel_pitch: 4e-6, origin_height: 900e-6 };
        let stack = synthesize_stack(&scenario, 3).unwrap();
        let corrected = stack.corrected(1e-9).unwrap();
        let heights: Vec<f64> = (0..24).map(|i| 950e-6 + i as f64 * 40e-6).collect();
        let curve =
            visibility_vs_height(&corrected, &heights, 100e-6, 33e-6, &scenario.beamline).unwrap();
        let points: Vec<(f64, f64, f64)> =
            curve.points.iter().map(|p| (p.height, p.phase, p.phase_err)).collect();
        let grad = crate::imaging::phase_gradient(&points).unwrap();
        let theta = crate::imaging::tilt_from_phase_gradient(grad.slope, 991e-9).unwrap();
        assert!(
            (theta.abs() - 200e-6).abs() / 200e-6 < 0.05,
            "recovered |θ| = {} µrad",
            theta.abs() * 1e6
        );
    }

    #[test]
    fn per_stripe_series_matches_truth_fringe() {
        let mut scenario = StackScenario::default_run();
        scenario.frame = FrameShape { width: 48, height: 120, pixel_pitch: 4e-6, origin_height: 1000e-6 };
        let stack = synthesize_stack(&scenario, 9).unwrap();
        let corrected = stack.corrected(1e-9).unwrap();
        let h = 1150e-6;
        let row =
            ((h - scenario.frame.origin_height) / scenario.frame.pixel_pitch).round() as usize;
        let values: Vec<f64> = corrected
            .frames
            .iter()
            .map(|f| {
                crate::imaging::integrate_stripe(f, corrected.band_center_x, h, 100e-6, 4e-6)
                    .unwrap()
                    .mean
            })
            .collect();
        let positions: Vec<f64> =
            (0..30).map(|i| corrected.geometry.grating_position(i)).collect();
        let fit = fit_fringe(&values, &positions, 991e-9).unwrap();
        assert!((fit.visibility - stack.truth.visibility[row]).abs() < 5e-3);
        let mut dphi = fit.phase - stack.truth.phase[row];
        dphi -= 2.0 * PI * (dphi / (2.0 * PI)).round();
        assert!(dphi.abs() < 0.05, "phase {} vs truth {}", fit.phase, stack.truth.phase[row]);
    }
}
