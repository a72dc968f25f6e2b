//! Core wave physics: diffraction at material gratings with van der Waals
//! phase, Talbot-Lau coefficients, fringe signals and visibility.

mod grating;
mod species;
mod talbot;

pub use grating::{
    absorbed_margin, binary_intensity_coefficients, eikonal_phase, grating_coefficients,
    grating_coefficients_with_cap, FourierCoefficients, GratingSpec, DEFAULT_PHI_CAP,
};
pub use species::MoleculeSpecies;
pub use talbot::{
    de_broglie_wavelength, fringe_signal, fringe_signal_with, quantum_visibility, quantum_visibility_with,
    talbot_lau_coefficients, talbot_length, FringeParams, FringeSignal, InterferometerConfig,
    TalbotLauCoefficients, Visibility,
};
