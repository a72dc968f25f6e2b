//! Fluorescence-image synthesis and analysis: the forward illumination
//! model, flat-field/dark correction, stripe integration, fringe fitting,
//! visibility curves, tilt inference and drift bounds.

mod curve;
mod fit;
mod frame;
pub mod io;
mod stripes;

pub use curve::{visibility_vs_height, CurvePoint, VisibilityCurve};
pub use fit::{
    drift_bound, fit_fringe, phase_gradient, tilt_from_phase_gradient, DriftBlock, DriftBound,
    FringeFit, PhaseGradient,
};
pub use frame::{correct_frame, synthesize_frame, FrameKind, ImageFrame, NoiseModel};
pub use stripes::{integrate_stripe, StripeGeometry, StripeIntegral, StripeStack};
