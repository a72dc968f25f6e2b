//! Run configuration: TOML-backed, with every default equal to the
//! reference TPP experiment, so an empty config reproduces that geometry.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

use talbot_lau::beamline::{AveragingMode, BeamlineGeometry, SourceModel};
use talbot_lau::imaging::{NoiseModel, StripeGeometry};
use talbot_lau::physics::{GratingSpec, InterferometerConfig, MoleculeSpecies};
use talbot_lau::synthesis::{FrameShape, OpticsModel, StackScenario};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MoleculeSection {
    pub name: String,
    pub mass_amu: f64,
    /// Van der Waals wall coefficient, J·m³ (0 = off).
    pub c3_jm3: f64,
}

impl Default for MoleculeSection {
    fn default() -> Self {
        MoleculeSection { name: "TPP".into(), mass_amu: 614.0, c3_jm3: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GratingsSection {
    pub period_nm: f64,
    pub open_fraction: f64,
    pub thickness_nm: f64,
    /// Optional per-grating open-fraction overrides.
    pub open_fraction_g1: Option<f64>,
    pub open_fraction_g2: Option<f64>,
    pub open_fraction_g3: Option<f64>,
}

impl Default for GratingsSection {
    fn default() -> Self {
        GratingsSection {
            period_nm: 991.0,
            open_fraction: 0.4,
            thickness_nm: 500.0,
            open_fraction_g1: None,
            open_fraction_g2: None,
            open_fraction_g3: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InterferometerSection {
    pub separation_m: f64,
}

impl Default for InterferometerSection {
    fn default() -> Self {
        InterferometerSection { separation_m: 0.38 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeamlineSection {
    pub oven_slit_um: f64,
    pub selection_slit_um: f64,
    pub selection_slit_z_m: f64,
    pub detector_z_m: f64,
    pub gravity_ms2: f64,
    pub height_offset_um: f64,
}

impl Default for BeamlineSection {
    fn default() -> Self {
        BeamlineSection {
            oven_slit_um: 200.0,
            selection_slit_um: 150.0,
            selection_slit_z_m: 1.2,
            detector_z_m: 2.9,
            gravity_ms2: 9.81,
            height_offset_um: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourceSection {
    pub temperature_k: f64,
}

impl Default for SourceSection {
    fn default() -> Self {
        SourceSection { temperature_k: 693.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StripesSection {
    pub n_stripes: usize,
    pub grating_step_nm: f64,
    pub adsorber_step_um: f64,
    pub exposure_min: f64,
}

impl Default for StripesSection {
    fn default() -> Self {
        StripesSection { n_stripes: 30, grating_step_nm: 100.0, adsorber_step_um: 425.0, exposure_min: 8.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImagingSection {
    pub frame_width_px: usize,
    pub frame_height_px: usize,
    pub pixel_pitch_um: f64,
    pub origin_height_um: f64,
    pub exposed_width_um: f64,
    pub background: f64,
    pub efficiency: f64,
    pub dark_level: f64,
    pub vignette: f64,
    /// Intensity per detected photon; 0 disables shot noise.
    pub shot_noise_scale: f64,
    /// Gaussian readout sigma; 0 disables readout noise.
    pub readout_sigma: f64,
    /// Write 16-bit PNG frames instead of float TIFF.
    pub png_output: bool,
    /// PNG counts per intensity unit (only with png_output).
    pub png_scale: f64,
    /// Injected third-grating roll for synthesis, µrad.
    pub tilt_urad: f64,
    /// Injected linear grating drift over the scan, nm.
    pub drift_nm: f64,
    /// Peak deposited density in corrected units.
    pub peak_density: f64,
}

impl Default for ImagingSection {
    fn default() -> Self {
        ImagingSection {
            frame_width_px: 48,
            frame_height_px: 600,
            pixel_pitch_um: 4.0,
            origin_height_um: 50.0,
            exposed_width_um: 165.0,
            background: 5.0,
            efficiency: 2.0,
            dark_level: 50.0,
            vignette: 0.08,
            shot_noise_scale: 0.0,
            readout_sigma: 0.0,
            png_output: false,
            png_scale: 0.02,
            tilt_urad: 0.0,
            drift_nm: 0.0,
            peak_density: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSection {
    pub rect_width_um: f64,
    pub rect_height_um: f64,
    pub n_heights: usize,
    pub height_min_um: f64,
    pub height_step_um: f64,
    pub drift_blocks: usize,
    pub correction_epsilon: f64,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        AnalysisSection {
            rect_width_um: 100.0,
            rect_height_um: 33.0,
            n_heights: 43,
            height_min_um: 200.0,
            height_step_um: 33.0,
            drift_blocks: 3,
            correction_epsilon: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurveSection {
    pub v_min_mps: f64,
    pub v_max_mps: f64,
    pub n_points: usize,
    /// Classical Monte Carlo samples per point.
    pub n_samples: u64,
    pub scan_points: usize,
    pub scattered_fraction: f64,
    pub window_um: f64,
    /// Monte Carlo samples for each height's velocity distribution.
    pub dist_samples: u64,
    /// "visibility" or "signal".
    pub averaging: String,
}

impl Default for CurveSection {
    fn default() -> Self {
        CurveSection {
            v_min_mps: 120.0,
            v_max_mps: 320.0,
            n_points: 12,
            n_samples: 1_000_000,
            scan_points: 32,
            scattered_fraction: 0.2,
            window_um: 33.0,
            dist_samples: 200_000,
            averaging: "visibility".into(),
        }
    }
}

fn default_out_dir() -> String {
    "tlau-out".into()
}

/// The full resolved run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Output directory. Excluded from the config hash so identical physics
    /// written to different places stays byte-identical.
    #[serde(skip_serializing)]
    pub out_dir: String,
    pub molecule: MoleculeSection,
    pub gratings: GratingsSection,
    pub interferometer: InterferometerSection,
    pub beamline: BeamlineSection,
    pub source: SourceSection,
    pub stripes: StripesSection,
    pub imaging: ImagingSection,
    pub analysis: AnalysisSection,
    pub curve: CurveSection,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let config = match path {
            None => RunConfig::default(),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
                toml::from_str(&text)
                    .map_err(|e| CliError::Config(format!("{} is not a valid config: {e}", p.display())))?
            }
        };
        config.validated()
    }

    fn validated(self) -> CliResult<Self> {
        let cfg = |msg: String| CliError::Config(msg);
        if !(self.curve.v_min_mps > 0.0 && self.curve.v_max_mps > self.curve.v_min_mps) {
            return Err(cfg(format!(
                "[curve] needs 0 < v_min_mps < v_max_mps, got {} and {}",
                self.curve.v_min_mps, self.curve.v_max_mps
            )));
        }
        if self.curve.n_points < 2 {
            return Err(cfg("[curve] n_points must be at least 2".into()));
        }
        if !(0.0..1.0).contains(&self.curve.scattered_fraction) {
            return Err(cfg(format!(
                "[curve] scattered_fraction must lie in [0, 1), got {}",
                self.curve.scattered_fraction
            )));
        }
        if self.averaging_mode().is_none() {
            return Err(cfg(format!(
                "[curve] averaging must be \"visibility\" or \"signal\", got {:?}",
                self.curve.averaging
            )));
        }
        if self.analysis.n_heights < 3 {
            return Err(cfg("[analysis] n_heights must be at least 3".into()));
        }
        if self.analysis.drift_blocks < 2 || self.analysis.drift_blocks > self.stripes.n_stripes / 5 {
            return Err(cfg(format!(
                "[analysis] drift_blocks must lie in 2..={} so each block keeps ≥ 5 stripes",
                self.stripes.n_stripes / 5
            )));
        }
        // the remaining constraints live with the domain types
        self.molecule_spec().map_err(|e| cfg(format!("[molecule] {e}")))?;
        self.interferometer_config().map_err(|e| cfg(format!("[gratings/interferometer] {e}")))?;
        self.beamline_geometry().map_err(|e| cfg(format!("[beamline] {e}")))?;
        self.source_model().map_err(|e| cfg(format!("[source] {e}")))?;
        self.stripe_geometry().validate().map_err(|e| cfg(format!("[stripes] {e}")))?;
        let scenario = self.stack_scenario().map_err(|e| cfg(format!("[imaging] {e}")))?;
        if !(scenario.exposed_width <= scenario.frame.width as f64 * scenario.frame.pixel_pitch) {
            return Err(cfg("[imaging] exposed_width_um must fit inside the frame".into()));
        }
        Ok(self)
    }

    /// SHA-256 of the canonical serialized config; stamped into every output.
    pub fn hash(&self) -> String {
        let text = toml::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    pub fn molecule_spec(&self) -> talbot_lau::Result<MoleculeSpecies> {
        MoleculeSpecies::new(self.molecule.name.clone(), self.molecule.mass_amu, self.molecule.c3_jm3)
    }

    pub fn grating(&self, open_fraction: Option<f64>) -> talbot_lau::Result<GratingSpec> {
        GratingSpec::new(
            self.gratings.period_nm * 1e-9,
            open_fraction.unwrap_or(self.gratings.open_fraction),
            self.gratings.thickness_nm * 1e-9,
        )
    }

    pub fn interferometer_config(&self) -> talbot_lau::Result<InterferometerConfig> {
        InterferometerConfig::new(
            self.grating(self.gratings.open_fraction_g1)?,
            self.grating(self.gratings.open_fraction_g2)?,
            self.grating(self.gratings.open_fraction_g3)?,
            self.interferometer.separation_m,
            self.molecule_spec()?,
        )
    }

    pub fn beamline_geometry(&self) -> talbot_lau::Result<BeamlineGeometry> {
        BeamlineGeometry::new(
            self.beamline.oven_slit_um * 1e-6,
            self.beamline.selection_slit_um * 1e-6,
            self.beamline.selection_slit_z_m,
            self.beamline.detector_z_m,
            self.beamline.gravity_ms2,
            self.beamline.height_offset_um * 1e-6,
        )
    }

    pub fn source_model(&self) -> talbot_lau::Result<SourceModel> {
        SourceModel::effusive(self.source.temperature_k)
    }

    pub fn stripe_geometry(&self) -> StripeGeometry {
        StripeGeometry {
            grating_step: self.stripes.grating_step_nm * 1e-9,
            adsorber_step: self.stripes.adsorber_step_um * 1e-6,
            n_stripes: self.stripes.n_stripes,
            grating_period: self.gratings.period_nm * 1e-9,
            exposure_per_stripe: self.stripes.exposure_min * 60.0,
        }
    }

    pub fn noise_model(&self) -> NoiseModel {
        NoiseModel {
            shot_scale: (self.imaging.shot_noise_scale > 0.0).then_some(self.imaging.shot_noise_scale),
            readout_sigma: (self.imaging.readout_sigma > 0.0).then_some(self.imaging.readout_sigma),
        }
    }

    pub fn stack_scenario(&self) -> talbot_lau::Result<StackScenario> {
        Ok(StackScenario {
            interferometer: self.interferometer_config()?,
            beamline: self.beamline_geometry()?,
            source: self.source_model()?,
            stripes: self.stripe_geometry(),
            frame: FrameShape {
                width: self.imaging.frame_width_px,
                height: self.imaging.frame_height_px,
                pixel_pitch: self.imaging.pixel_pitch_um * 1e-6,
                origin_height: self.imaging.origin_height_um * 1e-6,
            },
            exposed_width: self.imaging.exposed_width_um * 1e-6,
            optics: OpticsModel {
                vignette: self.imaging.vignette,
                background: self.imaging.background,
                efficiency: self.imaging.efficiency,
                dark_level: self.imaging.dark_level,
            },
            noise: self.noise_model(),
            tilt: self.imaging.tilt_urad * 1e-6,
            drift_total: self.imaging.drift_nm * 1e-9,
            peak_density: self.imaging.peak_density,
            velocity_grid: 256,
            slit_quadrature: 12,
            fringe_params: Default::default(),
        })
    }

    pub fn analysis_heights(&self) -> Vec<f64> {
        (0..self.analysis.n_heights)
            .map(|i| (self.analysis.height_min_um + i as f64 * self.analysis.height_step_um) * 1e-6)
            .collect()
    }

    pub fn averaging_mode(&self) -> Option<AveragingMode> {
        match self.curve.averaging.as_str() {
            "visibility" => Some(AveragingMode::Visibility),
            "signal" => Some(AveragingMode::Signal),
            _ => None,
        }
    }

    /// Velocity grid of the model-comparison curve.
    pub fn curve_velocities(&self) -> Vec<f64> {
        let n = self.curve.n_points;
        (0..n)
            .map(|i| {
                self.curve.v_min_mps
                    + (self.curve.v_max_mps - self.curve.v_min_mps) * i as f64 / (n - 1) as f64
            })
            .collect()
    }
}
