//! Frame and stripe-stack persistence.
//!
//! Frames are stored either as single-channel 32-bit float TIFF (the default
//! for the analysis pipeline, lossless) or 16-bit grayscale PNG (for
//! viewing; quantized by a scale recorded in the sidecar). A stripe stack is
//! a directory of per-stripe frames plus `reference`/`dark` frames and a
//! `stack.toml` sidecar describing the recording geometry.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::frame::{FrameKind, ImageFrame};
use super::stripes::StripeGeometry;

/// Sidecar metadata for one stripe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StripeMeta {
    pub index: usize,
    /// Nominal third-grating position of this stripe, meters.
    pub grating_position_m: f64,
    /// Adsorber-plate position of this stripe, meters.
    pub adsorber_position_m: f64,
    /// Deposition time, seconds.
    pub exposure_s: f64,
    /// Start of the exposure relative to the scan start, seconds.
    pub time_s: f64,
    /// Frame file name, relative to the sidecar.
    pub file: String,
}

/// Sidecar for a stored stripe stack (`stack.toml`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackSidecar {
    pub format_version: u32,
    pub grating_step_m: f64,
    pub adsorber_step_m: f64,
    pub n_stripes: usize,
    pub grating_period_m: f64,
    pub exposure_per_stripe_s: f64,
    pub frame_width: usize,
    pub frame_height: usize,
    pub pixel_pitch_m: f64,
    pub origin_height_m: f64,
    /// Center of the deposited band within each frame, meters.
    pub band_center_x_m: f64,
    /// Intensity per PNG count; absent for float TIFF frames.
    pub png_scale: Option<f64>,
    pub reference_file: String,
    pub dark_file: String,
    pub stripes: Vec<StripeMeta>,
}

impl StackSidecar {
    pub fn geometry(&self) -> StripeGeometry {
        StripeGeometry {
            grating_step: self.grating_step_m,
            adsorber_step: self.adsorber_step_m,
            n_stripes: self.n_stripes,
            grating_period: self.grating_period_m,
            exposure_per_stripe: self.exposure_per_stripe_s,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry().validate()?;
        if self.stripes.len() != self.n_stripes {
            return Err(Error::data(format!(
                "sidecar lists {} stripes but declares {}",
                self.stripes.len(),
                self.n_stripes
            )));
        }
        for (i, s) in self.stripes.iter().enumerate() {
            if s.index != i {
                return Err(Error::data(format!("stripe {i} has index {}", s.index)));
            }
            let expected = i as f64 * self.grating_step_m;
            if (s.grating_position_m - expected).abs() > 1e-15 + 1e-9 * self.grating_step_m {
                return Err(Error::data(format!(
                    "stripe {i} grating position {} m is inconsistent with the step",
                    s.grating_position_m
                )));
            }
        }
        Ok(())
    }
}

/// Write a frame as single-channel 32-bit float TIFF.
pub fn save_frame_tiff(frame: &ImageFrame, path: &Path) -> Result<()> {
    let file = File::create(path)?;
    let mut encoder = tiff::encoder::TiffEncoder::new(BufWriter::new(file))
        .map_err(|e| Error::data(format!("tiff encoder: {e}")))?;
    let data: Vec<f32> = frame.data.iter().map(|&v| v as f32).collect();
    encoder
        .write_image::<tiff::encoder::colortype::Gray32Float>(
            frame.width as u32,
            frame.height as u32,
            &data,
        )
        .map_err(|e| Error::data(format!("tiff write: {e}")))?;
    Ok(())
}

/// Read a single-channel 32-bit float TIFF into a frame.
pub fn load_frame_tiff(
    path: &Path,
    pixel_pitch: f64,
    origin_height: f64,
    kind: FrameKind,
) -> Result<ImageFrame> {
    let file = File::open(path)?;
    let mut decoder = tiff::decoder::Decoder::new(BufReader::new(file))
        .map_err(|e| Error::data(format!("tiff decoder: {e}")))?;
    let (w, h) = decoder.dimensions().map_err(|e| Error::data(format!("tiff dims: {e}")))?;
    let image = decoder.read_image().map_err(|e| Error::data(format!("tiff read: {e}")))?;
    let data: Vec<f64> = match image {
        tiff::decoder::DecodingResult::F32(v) => v.iter().map(|&x| x as f64).collect(),
        tiff::decoder::DecodingResult::F64(v) => v,
        other => {
            return Err(Error::data(format!(
                "expected float TIFF, got {:?} samples",
                decoding_kind(&other)
            )))
        }
    };
    ImageFrame::new(w as usize, h as usize, pixel_pitch, origin_height, kind, data)
}

fn decoding_kind(r: &tiff::decoder::DecodingResult) -> &'static str {
    use tiff::decoder::DecodingResult as D;
    match r {
        D::U8(_) => "u8",
        D::U16(_) => "u16",
        D::U32(_) => "u32",
        D::U64(_) => "u64",
        D::I8(_) => "i8",
        D::I16(_) => "i16",
        D::I32(_) => "i32",
        D::I64(_) => "i64",
        D::F32(_) => "f32",
        D::F64(_) => "f64",
        _ => "unknown",
    }
}

/// Write a frame as 16-bit grayscale PNG, quantized as round(value/scale).
pub fn save_frame_png16(frame: &ImageFrame, path: &Path, scale: f64) -> Result<()> {
    if !(scale > 0.0) {
        return Err(Error::domain("png scale must be positive"));
    }
    let mut img = image::ImageBuffer::<image::Luma<u16>, Vec<u16>>::new(
        frame.width as u32,
        frame.height as u32,
    );
    for (x, y, pixel) in img.enumerate_pixels_mut() {
        let v = (frame.get(x as usize, y as usize) / scale).round().clamp(0.0, 65535.0);
        *pixel = image::Luma([v as u16]);
    }
    img.save(path).map_err(|e| Error::data(format!("png write: {e}")))?;
    Ok(())
}

/// Read a 16-bit grayscale PNG written by [`save_frame_png16`].
pub fn load_frame_png16(
    path: &Path,
    pixel_pitch: f64,
    origin_height: f64,
    kind: FrameKind,
    scale: f64,
) -> Result<ImageFrame> {
    let img = image::open(path).map_err(|e| Error::data(format!("png read: {e}")))?.into_luma16();
    let (w, h) = img.dimensions();
    let data: Vec<f64> = img.pixels().map(|p| p.0[0] as f64 * scale).collect();
    ImageFrame::new(w as usize, h as usize, pixel_pitch, origin_height, kind, data)
}

/// Raw frames of a stored stack, as loaded from disk.
#[derive(Debug, Clone)]
pub struct RawStack {
    pub sidecar: StackSidecar,
    pub stripes: Vec<ImageFrame>,
    pub reference: ImageFrame,
    pub dark: ImageFrame,
}

/// Write a complete raw stack (stripe frames, reference, dark, sidecar)
/// into `dir`. Float TIFF when `png_scale` is None, 16-bit PNG otherwise.
pub fn save_stack(
    dir: &Path,
    sidecar: &StackSidecar,
    stripes: &[ImageFrame],
    reference: &ImageFrame,
    dark: &ImageFrame,
) -> Result<()> {
    sidecar.validate()?;
    if stripes.len() != sidecar.n_stripes {
        return Err(Error::data("frame count does not match the sidecar"));
    }
    std::fs::create_dir_all(dir)?;
    let save = |frame: &ImageFrame, name: &str| -> Result<()> {
        let path = dir.join(name);
        match sidecar.png_scale {
            Some(scale) => save_frame_png16(frame, &path, scale),
            None => save_frame_tiff(frame, &path),
        }
    };
    for (meta, frame) in sidecar.stripes.iter().zip(stripes) {
        save(frame, &meta.file)?;
    }
    save(reference, &sidecar.reference_file)?;
    save(dark, &sidecar.dark_file)?;
    std::fs::write(
        dir.join("stack.toml"),
        toml::to_string(sidecar).map_err(|e| Error::data(format!("sidecar encode: {e}")))?,
    )?;
    Ok(())
}

/// Load a stack directory written by [`save_stack`].
pub fn load_stack(dir: &Path) -> Result<RawStack> {
    let sidecar_path = dir.join("stack.toml");
    if !sidecar_path.exists() {
        return Err(Error::data(format!("missing sidecar {}", sidecar_path.display())));
    }
    let sidecar: StackSidecar = toml::from_str(&std::fs::read_to_string(&sidecar_path)?)
        .map_err(|e| Error::data(format!("sidecar parse: {e}")))?;
    sidecar.validate()?;

    let load = |name: &str, kind: FrameKind| -> Result<ImageFrame> {
        let path: PathBuf = dir.join(name);
        if !path.exists() {
            return Err(Error::data(format!("missing frame {}", path.display())));
        }
        let frame = match sidecar.png_scale {
            Some(scale) => {
                load_frame_png16(&path, sidecar.pixel_pitch_m, sidecar.origin_height_m, kind, scale)?
            }
            None => load_frame_tiff(&path, sidecar.pixel_pitch_m, sidecar.origin_height_m, kind)?,
        };
        if frame.width != sidecar.frame_width || frame.height != sidecar.frame_height {
            return Err(Error::data(format!(
                "frame {} is {}×{} but the sidecar declares {}×{}",
                name, frame.width, frame.height, sidecar.frame_width, sidecar.frame_height
            )));
        }
        Ok(frame)
    };

    let mut stripes = Vec::with_capacity(sidecar.n_stripes);
    for meta in &sidecar.stripes {
        stripes.push(load(&meta.file, FrameKind::Fluorescence)?);
    }
    let reference = load(&sidecar.reference_file, FrameKind::Reference)?;
    let dark = load(&sidecar.dark_file, FrameKind::Dark)?;
    Ok(RawStack { sidecar, stripes, reference, dark })
}
