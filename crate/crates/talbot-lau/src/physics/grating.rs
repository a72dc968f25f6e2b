use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::HBAR;
use crate::error::{Error, Result};

use super::species::MoleculeSpecies;

/// Eikonal phases beyond this magnitude are treated as absorbed: the phase
/// diverges at the slit walls and physical gratings capture molecules there.
pub const DEFAULT_PHI_CAP: f64 = 50.0;

/// One material grating: period d, open fraction f (slit width a = f·d) and
/// bar thickness along the beam.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GratingSpec {
    /// Period d in meters.
    pub period: f64,
    /// Open fraction f in (0, 1].
    pub open_fraction: f64,
    /// Thickness along the beam in meters (enters the wall-interaction phase).
    pub thickness: f64,
}

impl GratingSpec {
    pub fn new(period: f64, open_fraction: f64, thickness: f64) -> Result<Self> {
        if !(period > 0.0) {
            return Err(Error::domain(format!("grating period must be positive, got {period} m")));
        }
        if !(open_fraction > 0.0 && open_fraction <= 1.0) {
            return Err(Error::domain(format!(
                "open fraction must lie in (0, 1], got {open_fraction}"
            )));
        }
        if !(thickness >= 0.0) {
            return Err(Error::domain(format!("grating thickness must be non-negative, got {thickness} m")));
        }
        Ok(GratingSpec { period, open_fraction, thickness })
    }

    /// Slit width a = f·d in meters.
    pub fn slit_width(&self) -> f64 {
        self.open_fraction * self.period
    }
}

/// Phase accumulated by a molecule crossing the grating at transverse
/// position `x` measured from the slit center (|x| < a/2), in the eikonal
/// (thin-grating) approximation of the -C3/r³ wall potential:
///
///   φ(x) = (C3·L_g / (ħ·v)) · [(a/2 − x)⁻³ + (a/2 + x)⁻³]
pub fn eikonal_phase(grating: &GratingSpec, molecule: &MoleculeSpecies, v: f64, x: f64) -> f64 {
    let half = grating.slit_width() / 2.0;
    let strength = molecule.c3 * grating.thickness / (HBAR * v);
    strength * ((half - x).powi(-3) + (half + x).powi(-3))
}

/// Width of the near-wall strip where |φ| exceeds `phi_cap`; molecules
/// entering it are treated as absorbed. Returns a/2 if the cap is exceeded
/// across the whole slit.
pub fn absorbed_margin(grating: &GratingSpec, molecule: &MoleculeSpecies, v: f64, phi_cap: f64) -> f64 {
    let half = grating.slit_width() / 2.0;
    if molecule.c3 == 0.0 || grating.thickness == 0.0 {
        return 0.0;
    }
    if eikonal_phase(grating, molecule, v, 0.0) >= phi_cap {
        return half;
    }
    // φ grows monotonically from the slit center to the wall; bisect on x.
    let mut lo = 0.0;
    let mut hi = half;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if eikonal_phase(grating, molecule, v, mid) < phi_cap {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    half - 0.5 * (lo + hi)
}

/// Fourier coefficients c_n, |n| ≤ n_max, of a d-periodic function.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierCoefficients {
    n_max: usize,
    values: Vec<Complex64>,
}

impl FourierCoefficients {
    pub fn from_values(n_max: usize, values: Vec<Complex64>) -> Self {
        assert_eq!(values.len(), 2 * n_max + 1);
        FourierCoefficients { n_max, values }
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Coefficient of order n; zero outside the truncation range.
    pub fn get(&self, n: i64) -> Complex64 {
        if n.unsigned_abs() as usize > self.n_max {
            Complex64::new(0.0, 0.0)
        } else {
            self.values[(n + self.n_max as i64) as usize]
        }
    }

    /// Σ |c_n|² over the stored range.
    pub fn power_sum(&self) -> f64 {
        self.values.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// Complex amplitude-transmission coefficients b_n of a grating, |n| ≤ n_max:
///
///   b_n = (1/d) ∫_slit exp(i·φ(x)) · exp(−2πi·n·x/d) dx
///
/// with the integration domain narrowed by the absorbed margin where
/// |φ| > `DEFAULT_PHI_CAP`. With C3 = 0 this reduces to the binary-grating
/// result b_0 = f, b_n = sin(πnf)/(πn).
pub fn grating_coefficients(
    grating: &GratingSpec,
    molecule: &MoleculeSpecies,
    v: f64,
    n_max: usize,
) -> Result<FourierCoefficients> {
    grating_coefficients_with_cap(grating, molecule, v, n_max, DEFAULT_PHI_CAP)
}

/// As [`grating_coefficients`], with an explicit absorption cap on the
/// eikonal phase.
pub fn grating_coefficients_with_cap(
    grating: &GratingSpec,
    molecule: &MoleculeSpecies,
    v: f64,
    n_max: usize,
    phi_cap: f64,
) -> Result<FourierCoefficients> {
    if n_max < 1 {
        return Err(Error::domain("n_max must be at least 1"));
    }
    if !(v > 0.0) {
        return Err(Error::domain(format!("velocity must be positive, got {v} m/s")));
    }

    let d = grating.period;
    if molecule.c3 == 0.0 || grating.thickness == 0.0 {
        let f = grating.open_fraction;
        let values = (-(n_max as i64)..=n_max as i64)
            .map(|n| Complex64::new(binary_coefficient(n, f), 0.0))
            .collect();
        return Ok(FourierCoefficients::from_values(n_max, values));
    }

    let half = grating.slit_width() / 2.0;
    let margin = absorbed_margin(grating, molecule, v, phi_cap);
    let open = half - margin;
    if open <= 0.0 {
        // Fully absorbed slit: an opaque screen transmits nothing.
        let values = vec![Complex64::new(0.0, 0.0); 2 * n_max + 1];
        return Ok(FourierCoefficients::from_values(n_max, values));
    }

    // φ(−x) = φ(x), so b_{−n} = b_n; only n ≥ 0 needs quadrature.
    let mut values = vec![Complex64::new(0.0, 0.0); 2 * n_max + 1];
    for n in 0..=n_max as i64 {
        let integrand = |x: f64| {
            let phase = eikonal_phase(grating, molecule, v, x)
                - 2.0 * std::f64::consts::PI * n as f64 * x / d;
            Complex64::new(0.0, phase).exp()
        };
        // Base panel count follows the fastest oscillation: n cycles across
        // the slit from the Fourier kernel plus phi_cap/π half-turns of the
        // wall phase concentrated near the edges.
        let cycles = n as f64 * 2.0 * open / d + phi_cap / std::f64::consts::PI;
        let panels = (16 + 4 * cycles.ceil() as usize).max(16);
        let integral = adaptive_simpson(&integrand, -open, open, panels, 1e-8 * 2.0 * open);
        let b = integral / d;
        values[(n + n_max as i64) as usize] = b;
        values[(n_max as i64 - n) as usize] = b;
    }
    Ok(FourierCoefficients::from_values(n_max, values))
}

/// Real Fourier coefficients of a binary grating's intensity transmission,
/// |m| ≤ m_max. Phase factors do not survive |t|², so this is the relevant
/// description of the first and third gratings.
pub fn binary_intensity_coefficients(grating: &GratingSpec, m_max: usize) -> FourierCoefficients {
    let f = grating.open_fraction;
    let values = (-(m_max as i64)..=m_max as i64)
        .map(|m| Complex64::new(binary_coefficient(m, f), 0.0))
        .collect();
    FourierCoefficients::from_values(m_max, values)
}

fn binary_coefficient(n: i64, f: f64) -> f64 {
    if n == 0 {
        f
    } else {
        let nf = n as f64;
        (std::f64::consts::PI * nf * f).sin() / (std::f64::consts::PI * nf)
    }
}

/// Adaptive Simpson quadrature of a complex integrand. `panels` fixes the
/// initial uniform subdivision so that oscillatory integrands cannot fool
/// the error estimate; `abs_tol` is the absolute tolerance for the whole
/// integral.
fn adaptive_simpson<F: Fn(f64) -> Complex64>(
    f: &F,
    lo: f64,
    hi: f64,
    panels: usize,
    abs_tol: f64,
) -> Complex64 {
    let width = (hi - lo) / panels as f64;
    let tol = abs_tol / panels as f64;
    let mut total = Complex64::new(0.0, 0.0);
    for i in 0..panels {
        let a = lo + i as f64 * width;
        let b = a + width;
        let fa = f(a);
        let fb = f(b);
        let m = 0.5 * (a + b);
        let fm = f(m);
        let whole = simpson(fa, fm, fb, b - a);
        total += simpson_recurse(f, a, b, fa, fm, fb, whole, tol, 30);
    }
    total
}

fn simpson(fa: Complex64, fm: Complex64, fb: Complex64, h: f64) -> Complex64 {
    (fa + 4.0 * fm + fb) * (h / 6.0)
}

#[allow(clippy::too_many_arguments)]
fn simpson_recurse<F: Fn(f64) -> Complex64>(
    f: &F,
    a: f64,
    b: f64,
    fa: Complex64,
    fm: Complex64,
    fb: Complex64,
    whole: Complex64,
    tol: f64,
    depth: usize,
) -> Complex64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(fa, flm, fm, m - a);
    let right = simpson(fm, frm, fb, b - m);
    let delta = left + right - whole;
    if depth == 0 || delta.norm() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + simpson_recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}
