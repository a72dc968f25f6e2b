use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::frame::ImageFrame;

/// Bookkeeping of the mechanically magnified recording: each grating step
/// is replayed at a widely separated adsorber position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StripeGeometry {
    /// Third-grating step between stripes, meters.
    pub grating_step: f64,
    /// Adsorber-plate step between stripes, meters.
    pub adsorber_step: f64,
    pub n_stripes: usize,
    /// Grating period, meters.
    pub grating_period: f64,
    /// Deposition time per stripe, seconds.
    pub exposure_per_stripe: f64,
}

impl StripeGeometry {
    pub fn validate(&self) -> Result<()> {
        if !(self.grating_step > 0.0 && self.adsorber_step > 0.0 && self.grating_period > 0.0) {
            return Err(Error::domain("stripe geometry lengths must be positive"));
        }
        if self.n_stripes == 0 {
            return Err(Error::domain("need at least one stripe"));
        }
        if !(self.exposure_per_stripe > 0.0) {
            return Err(Error::domain("exposure must be positive"));
        }
        Ok(())
    }

    /// Mechanical magnification: adsorber step over grating step.
    pub fn magnification(&self) -> f64 {
        self.adsorber_step / self.grating_step
    }

    /// Grating position of stripe `i`.
    pub fn grating_position(&self, i: usize) -> f64 {
        i as f64 * self.grating_step
    }

    /// Grating phase 2π·x_i/d of stripe `i`.
    pub fn grating_phase(&self, i: usize) -> f64 {
        2.0 * std::f64::consts::PI * self.grating_position(i) / self.grating_period
    }

    /// Grating periods covered by the whole scan.
    pub fn scan_periods(&self) -> f64 {
        self.n_stripes as f64 * self.grating_step / self.grating_period
    }

    /// Start time of stripe `i` relative to the first exposure.
    pub fn stripe_start_time(&self, i: usize) -> f64 {
        i as f64 * self.exposure_per_stripe
    }

    /// Mid-exposure time of stripe `i`.
    pub fn stripe_mid_time(&self, i: usize) -> f64 {
        self.stripe_start_time(i) + 0.5 * self.exposure_per_stripe
    }

    /// Duration of the full scan.
    pub fn total_duration(&self) -> f64 {
        self.n_stripes as f64 * self.exposure_per_stripe
    }
}

/// An ordered set of per-stripe frames with the recording geometry.
#[derive(Debug, Clone)]
pub struct StripeStack {
    pub geometry: StripeGeometry,
    /// One frame per stripe, index-aligned with the grating positions.
    pub frames: Vec<ImageFrame>,
    /// Center of the deposited band within each frame, meters from the
    /// frame's left edge.
    pub band_center_x: f64,
}

impl StripeStack {
    pub fn new(geometry: StripeGeometry, frames: Vec<ImageFrame>, band_center_x: f64) -> Result<Self> {
        geometry.validate()?;
        if frames.len() != geometry.n_stripes {
            return Err(Error::data(format!(
                "stack has {} frames but the geometry promises {}",
                frames.len(),
                geometry.n_stripes
            )));
        }
        if let Some(first) = frames.first() {
            if !frames.iter().all(|f| f.same_shape(first)) {
                return Err(Error::data("all stripe frames must share one shape"));
            }
        }
        Ok(StripeStack { geometry, frames, band_center_x })
    }
}

/// Result of integrating the corrected density over one stripe rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StripeIntegral {
    /// Mean Ñ over the valid pixels in the rectangle.
    pub mean: f64,
    /// Fraction of rectangle pixels that were valid.
    pub valid_fraction: f64,
    /// Pixels inside the rectangle.
    pub n_pixels: usize,
}

/// Mean corrected density over a `rect_width` × `rect_height` rectangle
/// centered at (`center_x`, `h`), normalized by the valid-pixel count.
pub fn integrate_stripe(
    frame: &ImageFrame,
    center_x: f64,
    h: f64,
    rect_width: f64,
    rect_height: f64,
) -> Result<StripeIntegral> {
    if !(rect_width > 0.0 && rect_height > 0.0) {
        return Err(Error::domain("integration rectangle must have positive extent"));
    }
    let pitch = frame.pixel_pitch;
    let x_lo = center_x - rect_width / 2.0;
    let x_hi = center_x + rect_width / 2.0;
    let h_lo = h - rect_height / 2.0;
    let h_hi = h + rect_height / 2.0;

    let frame_x_hi = frame.width as f64 * pitch;
    let frame_h_lo = frame.origin_height - 0.5 * pitch;
    let frame_h_hi = frame.origin_height + (frame.height as f64 - 0.5) * pitch;
    if x_lo < 0.0 || x_hi > frame_x_hi || h_lo < frame_h_lo || h_hi > frame_h_hi {
        return Err(Error::domain(format!(
            "integration rectangle [{x_lo}, {x_hi}] × [{h_lo}, {h_hi}] m exceeds the frame"
        )));
    }

    // pixel centers inside the rectangle
    let c_lo = ((x_lo / pitch - 0.5).ceil().max(0.0)) as usize;
    let c_hi = ((x_hi / pitch - 0.5).floor() as usize).min(frame.width - 1);
    let r_lo = (((h_lo - frame.origin_height) / pitch).ceil().max(0.0)) as usize;
    let r_hi = (((h_hi - frame.origin_height) / pitch).floor() as usize).min(frame.height - 1);

    let mut sum = 0.0;
    let mut n_valid = 0usize;
    let mut n_pixels = 0usize;
    for r in r_lo..=r_hi {
        for c in c_lo..=c_hi {
            n_pixels += 1;
            if frame.is_valid(c, r) {
                sum += frame.get(c, r);
                n_valid += 1;
            }
        }
    }
    if n_pixels == 0 {
        return Err(Error::domain("integration rectangle covers no pixel centers"));
    }
    if n_valid == 0 {
        return Err(Error::data("integration rectangle contains no valid pixels"));
    }
    Ok(StripeIntegral {
        mean: sum / n_valid as f64,
        valid_fraction: n_valid as f64 / n_pixels as f64,
        n_pixels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::frame::FrameKind;
    use crate::presets;

    #[test]
    fn magnification_and_scan_span_bookkeeping() {
        let geom = presets::stripe_geometry();
        assert_eq!(geom.magnification(), 4250.0);
        assert!((geom.scan_periods() - 3.0272).abs() < 1e-3);
        assert_eq!(geom.grating_position(7), 700e-9);
        assert!((geom.grating_phase(7) - 2.0 * std::f64::consts::PI * 700.0 / 991.0).abs() < 1e-12);
        assert_eq!(geom.total_duration(), 30.0 * 480.0);
    }

    fn uniform_frame(value: f64) -> ImageFrame {
        ImageFrame::filled(50, 40, 4e-6, 0.0, FrameKind::Corrected, value).unwrap()
    }

    #[test]
    fn uniform_field_integrates_to_itself() {
        let frame = uniform_frame(3.25);
        let out = integrate_stripe(&frame, 100e-6, 80e-6, 100e-6, 33e-6).unwrap();
        assert_eq!(out.mean, 3.25);
        assert_eq!(out.valid_fraction, 1.0);
    }

    #[test]
    fn invalid_half_is_excluded_from_the_mean() {
        let mut frame = uniform_frame(2.0);
        let w = frame.width;
        let mut valid = vec![true; frame.data.len()];
        // left half invalid, value 999 to catch accidental inclusion
        for r in 0..frame.height {
            for c in 0..w / 2 {
                valid[r * w + c] = false;
                frame.data[r * w + c] = 999.0;
            }
        }
        frame.valid = Some(valid);
        let out = integrate_stripe(&frame, 100e-6, 80e-6, 100e-6, 33e-6).unwrap();
        assert_eq!(out.mean, 2.0);
        assert!(out.valid_fraction > 0.4 && out.valid_fraction < 0.6);
    }

    #[test]
    fn fully_invalid_rectangle_is_an_error() {
        let mut frame = uniform_frame(2.0);
        frame.valid = Some(vec![false; frame.data.len()]);
        assert!(integrate_stripe(&frame, 100e-6, 80e-6, 100e-6, 33e-6).is_err());
    }

    #[test]
    fn out_of_bounds_rectangle_is_an_error() {
        let frame = uniform_frame(1.0);
        assert!(integrate_stripe(&frame, 10e-6, 80e-6, 100e-6, 33e-6).is_err());
        assert!(integrate_stripe(&frame, 100e-6, 1e-6, 100e-6, 33e-6).is_err());
    }

    #[test]
    fn stripe_series_traces_injected_fringe() {
        // 30 single-pixel-wide integrations over a synthetic fringe in the
        // stripe index
        let geom = presets::stripe_geometry();
        let (a0, vis, phase) = (2.0, 0.31, 0.7);
        let frames: Vec<ImageFrame> = (0..geom.n_stripes)
            .map(|i| {
                let value = a0
                    * (1.0 + vis * (geom.grating_phase(i) - phase).cos());
                uniform_frame(value)
            })
            .collect();
        let stack = StripeStack::new(geom, frames, 100e-6).unwrap();
        for (i, frame) in stack.frames.iter().enumerate() {
            let got = integrate_stripe(frame, 100e-6, 80e-6, 100e-6, 33e-6).unwrap().mean;
            let expected = a0 * (1.0 + vis * (geom.grating_phase(i) - phase).cos());
            assert!((got - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn stack_validates_frame_count() {
        let geom = presets::stripe_geometry();
        let frames = vec![uniform_frame(1.0); 4];
        assert!(StripeStack::new(geom, frames, 0.0).is_err());
    }
}
