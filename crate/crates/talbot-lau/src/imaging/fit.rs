use nalgebra::{Matrix3, Vector3};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Least-squares sinusoid fit of a stripe series,
/// value ≈ a0·(1 + V·cos(2πx/d − φ)).
#[derive(Debug, Clone, PartialEq)]
pub struct FringeFit {
    /// Offset a0.
    pub offset: f64,
    /// Modulation amplitude √(a1² + b1²).
    pub amplitude: f64,
    /// Fringe phase φ, radians.
    pub phase: f64,
    /// amplitude / offset.
    pub visibility: f64,
    pub visibility_err: f64,
    pub phase_err: f64,
    /// Covariance of (a0, a1, b1) from the linear least squares.
    pub covariance: [[f64; 3]; 3],
    /// √(Σ residual²).
    pub residual_norm: f64,
    /// False when the fitted visibility falls outside [0, 1]; the value is
    /// reported unclamped.
    pub visibility_in_range: bool,
}

/// Exact linear least squares of a0 + a1·cos(2πx/d) + b1·sin(2πx/d),
/// reparameterized to offset/amplitude/phase with first-order error
/// propagation from the parameter covariance.
pub fn fit_fringe(values: &[f64], positions: &[f64], period: f64) -> Result<FringeFit> {
    if values.len() != positions.len() {
        return Err(Error::data(format!(
            "{} values vs {} positions",
            values.len(),
            positions.len()
        )));
    }
    if values.len() < 5 {
        return Err(Error::domain(format!("need at least 5 samples, got {}", values.len())));
    }
    if !(period > 0.0) {
        return Err(Error::domain("period must be positive"));
    }

    let n = values.len();
    let mut xtx = Matrix3::<f64>::zeros();
    let mut xty = Vector3::<f64>::zeros();
    for (&x, &y) in positions.iter().zip(values) {
        let w = 2.0 * PI * x / period;
        let row = Vector3::new(1.0, w.cos(), w.sin());
        xtx += row * row.transpose();
        xty += row * y;
    }
    let inv = xtx.try_inverse().ok_or_else(|| {
        Error::numerics("rank-deficient fringe fit: sample positions do not constrain the basis")
    })?;
    // guard against numerically near-singular systems that still invert
    if xtx.determinant().abs() < 1e-9 * n as f64 {
        return Err(Error::numerics("fringe-fit normal equations are numerically singular"));
    }
    let beta = inv * xty;
    let (a0, a1, b1) = (beta[0], beta[1], beta[2]);

    let mut ssr = 0.0;
    for (&x, &y) in positions.iter().zip(values) {
        let w = 2.0 * PI * x / period;
        let model = a0 + a1 * w.cos() + b1 * w.sin();
        ssr += (y - model) * (y - model);
    }
    let dof = (n - 3) as f64;
    let sigma2 = ssr / dof;
    let cov = inv * sigma2;

    if a0 <= 0.0 {
        return Err(Error::data(format!("fit offset must be positive, got {a0}")));
    }

    let amplitude = a1.hypot(b1);
    let phase = b1.atan2(a1);
    let visibility = amplitude / a0;

    // delta method on V = √(a1²+b1²)/a0 and φ = atan2(b1, a1)
    let (visibility_err, phase_err) = if amplitude > 0.0 {
        let g_v = Vector3::new(-amplitude / (a0 * a0), a1 / (amplitude * a0), b1 / (amplitude * a0));
        let g_p = Vector3::new(0.0, -b1 / (amplitude * amplitude), a1 / (amplitude * amplitude));
        (
            (g_v.transpose() * cov * g_v)[(0, 0)].max(0.0).sqrt(),
            (g_p.transpose() * cov * g_p)[(0, 0)].max(0.0).sqrt(),
        )
    } else {
        // zero-amplitude limit: quote the raw component noise, no phase
        let comp = ((cov[(1, 1)] + cov[(2, 2)]) / 2.0).max(0.0).sqrt();
        (comp / a0, PI)
    };

    Ok(FringeFit {
        offset: a0,
        amplitude,
        phase,
        visibility,
        visibility_err,
        phase_err,
        covariance: [
            [cov[(0, 0)], cov[(0, 1)], cov[(0, 2)]],
            [cov[(1, 0)], cov[(1, 1)], cov[(1, 2)]],
            [cov[(2, 0)], cov[(2, 1)], cov[(2, 2)]],
        ],
        residual_norm: ssr.sqrt(),
        visibility_in_range: (0.0..=1.0).contains(&visibility),
    })
}

/// Weighted linear fit of unwrapped fringe phase against height.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGradient {
    /// dφ/dh, rad/m.
    pub slope: f64,
    pub slope_err: f64,
    pub intercept: f64,
    /// Indices where the unwrapped phase still jumped by more than π/2
    /// between neighbours; the unwrapping is ambiguous there.
    pub ambiguous_steps: Vec<usize>,
    /// Unwrapped phases actually fitted.
    pub unwrapped: Vec<f64>,
}

/// Fit a linear phase trend over height. Phases are unwrapped to the
/// nearest 2π multiple relative to the previous point; steps exceeding π/2
/// after unwrapping are flagged.
pub fn phase_gradient(points: &[(f64, f64, f64)]) -> Result<PhaseGradient> {
    if points.len() < 3 {
        return Err(Error::domain(format!("need at least 3 phase points, got {}", points.len())));
    }
    let mut unwrapped = Vec::with_capacity(points.len());
    let mut ambiguous = Vec::new();
    let mut prev = points[0].1;
    unwrapped.push(prev);
    for (i, &(_, phase, _)) in points.iter().enumerate().skip(1) {
        let adjusted = phase + 2.0 * PI * ((prev - phase) / (2.0 * PI)).round();
        if (adjusted - prev).abs() > PI / 2.0 {
            ambiguous.push(i);
        }
        unwrapped.push(adjusted);
        prev = adjusted;
    }

    let weighted = points.iter().any(|&(_, _, err)| err > 0.0);
    let mut s_w = 0.0;
    let mut s_x = 0.0;
    let mut s_y = 0.0;
    let mut s_xx = 0.0;
    let mut s_xy = 0.0;
    for (&(h, _, err), &phi) in points.iter().zip(&unwrapped) {
        let w = if weighted && err > 0.0 { 1.0 / (err * err) } else { 1.0 };
        s_w += w;
        s_x += w * h;
        s_y += w * phi;
        s_xx += w * h * h;
        s_xy += w * h * phi;
    }
    let det = s_w * s_xx - s_x * s_x;
    if det.abs() <= f64::EPSILON * s_w * s_xx {
        return Err(Error::numerics("phase-gradient fit is degenerate: heights do not spread"));
    }
    let slope = (s_w * s_xy - s_x * s_y) / det;
    let intercept = (s_xx * s_y - s_x * s_xy) / det;
    let mut slope_var = s_w / det;
    if !weighted {
        // scale by residual variance when no per-point errors were given
        let dof = (points.len() - 2) as f64;
        let ssr: f64 = points
            .iter()
            .zip(&unwrapped)
            .map(|(&(h, _, _), &phi)| (phi - intercept - slope * h).powi(2))
            .sum();
        slope_var *= ssr / dof;
    }
    Ok(PhaseGradient {
        slope,
        slope_err: slope_var.max(0.0).sqrt(),
        intercept,
        ambiguous_steps: ambiguous,
        unwrapped,
    })
}

/// Grating roll angle behind a vertical fringe-phase gradient: a roll of
/// the third grating by θ shifts the local grating phase by 2π·θ·h/d, so
/// θ = slope·d/(2π). The sign follows the roll direction; the magnitude is
/// the misalignment.
pub fn tilt_from_phase_gradient(slope: f64, period: f64) -> Result<f64> {
    if !slope.is_finite() {
        return Err(Error::domain("phase-gradient slope must be finite"));
    }
    if !(period > 0.0) {
        return Err(Error::domain("period must be positive"));
    }
    Ok(slope * period / (2.0 * PI))
}

/// Fringe fits of one time-ordered block of stripes, at a common set of
/// heights (index-aligned across blocks).
#[derive(Debug, Clone)]
pub struct DriftBlock {
    /// Mid-exposure time of the block, seconds from the start of the scan.
    pub time: f64,
    pub fits: Vec<FringeFit>,
}

/// Grating-drift estimate from phase discrepancies between stripe blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftBound {
    /// Upper bound on the grating displacement over `duration`, meters.
    pub bound: f64,
    /// 1σ measurement noise on the bound, meters.
    pub bound_err: f64,
    /// Fitted drift rate, m/s.
    pub rate: f64,
    pub rate_err: f64,
    /// True when the linear trend is resolved beyond 3σ.
    pub significant: bool,
    /// Per-block displacement relative to the first block, (time, meters,
    /// 1σ) — tilt and velocity-dependent phases cancel in the differences.
    pub per_block: Vec<(f64, f64, f64)>,
}

/// Bound the slow grating drift over `duration` by comparing fitted fringe
/// phases across time-ordered stripe blocks. Phase differences at equal
/// heights are averaged over heights (static tilt cancels), converted to
/// displacement via d/(2π), and the maximum block discrepancy is linearly
/// extrapolated from the observed time span to `duration`.
pub fn drift_bound(blocks: &[DriftBlock], period: f64, duration: f64) -> Result<DriftBound> {
    if blocks.len() < 2 {
        return Err(Error::domain(format!("need at least 2 stripe blocks, got {}", blocks.len())));
    }
    if !(duration > 0.0) || !(period > 0.0) {
        return Err(Error::domain("duration and period must be positive"));
    }
    let n_heights = blocks[0].fits.len();
    if n_heights == 0 || blocks.iter().any(|b| b.fits.len() != n_heights) {
        return Err(Error::data("blocks must carry the same non-empty height set"));
    }

    let reference = &blocks[0];
    let mut per_block = Vec::with_capacity(blocks.len());
    // the reference block is zero by construction but carries its own
    // measurement noise, which the trend fit must see
    let ref_var: f64 = {
        let den: f64 = reference
            .fits
            .iter()
            .map(|f| {
                let var = 2.0 * f.phase_err.powi(2);
                if var > 0.0 { 1.0 / var } else { 1.0 }
            })
            .sum();
        1.0 / den
    };
    per_block.push((reference.time, 0.0, ref_var.sqrt() * period / (2.0 * PI)));
    for block in &blocks[1..] {
        let mut num = 0.0;
        let mut den = 0.0;
        for (fit, ref_fit) in block.fits.iter().zip(&reference.fits) {
            let mut dphi = fit.phase - ref_fit.phase;
            dphi -= 2.0 * PI * (dphi / (2.0 * PI)).round();
            let var = fit.phase_err.powi(2) + ref_fit.phase_err.powi(2);
            let w = if var > 0.0 { 1.0 / var } else { 1.0 };
            num += w * dphi;
            den += w;
        }
        let mean_dphi = num / den;
        let err_dphi = (1.0 / den).sqrt();
        // deposit records S(x + s): a grating shift +s lowers the fitted
        // phase by 2πs/d
        per_block.push((block.time, -mean_dphi * period / (2.0 * PI), err_dphi * period / (2.0 * PI)));
    }

    let t_first = per_block.first().unwrap().0;
    let t_last = per_block.last().unwrap().0;
    let span = t_last - t_first;
    if !(span > 0.0) {
        return Err(Error::data("block times must increase"));
    }

    let max_disp = per_block.iter().map(|p| p.1).fold(f64::MIN, f64::max);
    let min_disp = per_block.iter().map(|p| p.1).fold(f64::MAX, f64::min);
    let discrepancy = max_disp - min_disp;
    let err_floor = per_block.iter().map(|p| p.2).fold(0.0, f64::max);

    // weighted linear trend of displacement vs time
    let mut s_w = 0.0;
    let mut s_x = 0.0;
    let mut s_y = 0.0;
    let mut s_xx = 0.0;
    let mut s_xy = 0.0;
    for &(t, disp, err) in &per_block {
        let w = if err > 0.0 { 1.0 / (err * err) } else { 1.0 };
        s_w += w;
        s_x += w * t;
        s_y += w * disp;
        s_xx += w * t * t;
        s_xy += w * t * disp;
    }
    let det = s_w * s_xx - s_x * s_x;
    let rate = (s_w * s_xy - s_x * s_y) / det;
    let rate_err = (s_w / det).max(0.0).sqrt();

    let scale = duration / span;
    Ok(DriftBound {
        bound: (discrepancy * scale).max(err_floor),
        bound_err: err_floor * scale,
        rate,
        rate_err,
        significant: rate.abs() > 3.0 * rate_err && rate_err > 0.0,
        per_block,
    })
}
