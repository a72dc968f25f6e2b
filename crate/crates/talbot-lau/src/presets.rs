//! Default experiment geometry: the TPP run that the rest of the crate (and
//! the CLI's empty config) reproduces. One place to change, everywhere else
//! derives from it.

use crate::beamline::{BeamlineGeometry, SourceModel};
use crate::constants::STANDARD_GRAVITY;
use crate::imaging::StripeGeometry;
use crate::physics::{GratingSpec, InterferometerConfig, MoleculeSpecies};

/// meso-Tetraphenylporphyrin, 614 amu. The wall-interaction strength C3 is
/// not a measured constant here and defaults to off.
pub fn tpp() -> MoleculeSpecies {
    MoleculeSpecies::new("TPP", 614.0, 0.0).unwrap()
}

/// 991 nm period, 400 nm open slits, 500 nm thick bars.
pub fn grating() -> GratingSpec {
    GratingSpec::new(991e-9, 0.4, 500e-9).unwrap()
}

/// Symmetric interferometer with L = 0.38 m between neighbouring gratings.
pub fn interferometer() -> InterferometerConfig {
    let g = grating();
    InterferometerConfig::new(g, g, g, 0.38, tpp()).unwrap()
}

/// 200 µm oven slit, 150 µm selection slit at 1.2 m, detector at 2.9 m.
pub fn beamline() -> BeamlineGeometry {
    BeamlineGeometry::new(200e-6, 150e-6, 1.2, 2.9, STANDARD_GRAVITY, 0.0).unwrap()
}

/// Effusive source at 693 K (oven at about 420 °C).
pub fn source() -> SourceModel {
    SourceModel::effusive(693.0).unwrap()
}

/// 100 nm grating steps recorded at 425 µm adsorber steps: 30 stripes,
/// 8 minutes of deposition each, mechanical magnification 4250.
pub fn stripe_geometry() -> StripeGeometry {
    StripeGeometry {
        grating_step: 100e-9,
        adsorber_step: 425e-6,
        n_stripes: 30,
        grating_period: 991e-9,
        exposure_per_stripe: 480.0,
    }
}

/// Height of the 33 µm × 100 µm stripe-integration rectangle.
pub const INTEGRATION_HEIGHT: f64 = 33e-6;

/// Width of the stripe-integration rectangle.
pub const INTEGRATION_WIDTH: f64 = 100e-6;

/// Width of the deposited band on the adsorber: the 170 µm fixed slit minus
/// shadowing leaves about 165 µm exposed per stripe.
pub const EXPOSED_STRIPE_WIDTH: f64 = 165e-6;
