//! Simulation and analysis toolkit for three-grating Talbot-Lau matter-wave
//! interferometry with surface-deposited, fluorescence-imaged molecules.
//!
//! The crate covers the full chain from wave physics to image analysis:
//!
//! * [`physics`] — de Broglie wavelength, Talbot length, grating Fourier
//!   coefficients with van der Waals phase, Talbot-Lau coefficients, fringe
//!   signals and visibility as a function of velocity.
//! * [`fresnel`] — an independent wave-optics reference: direct Fresnel
//!   propagation through the grating stack on a periodic domain. Used to
//!   cross-check the coefficient-based model; shares no numerics with it.
//! * [`classical`] — the classical Moiré baseline: Monte Carlo ray tracing
//!   with ballistic van der Waals deflection at the second grating.
//! * [`beamline`] — gravitational velocity selection through three slits,
//!   velocity distributions per detector height, distribution-averaged
//!   visibility and the scattered-background correction.
//! * [`imaging`] — fluorescence frame synthesis, flat-field/dark correction,
//!   stripe integration, sinusoid fringe fitting, visibility/phase curves,
//!   grating-tilt inference and drift bounds.
//!
//! All quantities are SI internally (meters, seconds, kilograms); the only
//! non-SI unit that appears in public signatures is the molecular mass in amu.
//! Every stochastic operation takes an explicit seed and is reproducible
//! bit-for-bit.

pub mod beamline;
pub mod classical;
pub mod constants;
pub mod error;
pub mod fresnel;
pub mod imaging;
pub mod physics;
pub mod presets;
pub mod synthesis;

pub use error::{Error, Result};
pub use physics::{
    de_broglie_wavelength, fringe_signal, grating_coefficients, quantum_visibility, talbot_lau_coefficients,
    talbot_length, FringeSignal, GratingSpec, InterferometerConfig, MoleculeSpecies, Visibility,
};
