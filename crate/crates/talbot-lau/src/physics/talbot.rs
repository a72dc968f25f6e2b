use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::constants::PLANCK;
use crate::error::{Error, Result};

use super::grating::{
    binary_intensity_coefficients, grating_coefficients_with_cap, FourierCoefficients, GratingSpec,
    DEFAULT_PHI_CAP,
};
use super::species::MoleculeSpecies;

/// de Broglie wavelength λ = h/(m·v) in meters.
pub fn de_broglie_wavelength(molecule: &MoleculeSpecies, v: f64) -> Result<f64> {
    if !(v > 0.0) {
        return Err(Error::domain(format!("velocity must be positive, got {v} m/s")));
    }
    Ok(PLANCK / (molecule.mass_kg() * v))
}

/// Talbot length L_T = d²/λ in meters.
pub fn talbot_length(period: f64, wavelength: f64) -> Result<f64> {
    if !(period > 0.0) {
        return Err(Error::domain(format!("period must be positive, got {period} m")));
    }
    if !(wavelength > 0.0) {
        return Err(Error::domain(format!("wavelength must be positive, got {wavelength} m")));
    }
    Ok(period * period / wavelength)
}

/// The symmetric three-grating interferometer: equal spacing L between both
/// grating pairs, equal periods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterferometerConfig {
    pub g1: GratingSpec,
    pub g2: GratingSpec,
    pub g3: GratingSpec,
    /// Distance L between G1-G2 and between G2-G3, in meters.
    pub separation: f64,
    pub molecule: MoleculeSpecies,
}

impl InterferometerConfig {
    pub fn new(
        g1: GratingSpec,
        g2: GratingSpec,
        g3: GratingSpec,
        separation: f64,
        molecule: MoleculeSpecies,
    ) -> Result<Self> {
        if !(separation > 0.0) {
            return Err(Error::domain(format!("separation must be positive, got {separation} m")));
        }
        let d = g2.period;
        for (name, g) in [("g1", &g1), ("g3", &g3)] {
            if ((g.period - d) / d).abs() > 1e-9 {
                return Err(Error::domain(format!(
                    "{name} period {} m differs from g2 period {} m; the signal model requires equal periods",
                    g.period, d
                )));
            }
        }
        Ok(InterferometerConfig { g1, g2, g3, separation, molecule })
    }

    /// Common grating period d in meters.
    pub fn period(&self) -> f64 {
        self.g2.period
    }

    /// L/L_T at the given velocity.
    pub fn talbot_parameter(&self, v: f64) -> Result<f64> {
        let lambda = de_broglie_wavelength(&self.molecule, v)?;
        Ok(self.separation / talbot_length(self.period(), lambda)?)
    }
}

/// Talbot-Lau coefficients B_m(ξ) of a diffraction grating, |m| ≤ m_max.
#[derive(Debug, Clone)]
pub struct TalbotLauCoefficients {
    m_max: usize,
    values: Vec<Complex64>,
    /// Set when the input b-coefficients were truncated below 2·m_max, in
    /// which case high orders are unreliable.
    pub truncated: bool,
}

impl TalbotLauCoefficients {
    pub fn m_max(&self) -> usize {
        self.m_max
    }

    pub fn get(&self, m: i64) -> Complex64 {
        if m.unsigned_abs() as usize > self.m_max {
            Complex64::new(0.0, 0.0)
        } else {
            self.values[(m + self.m_max as i64) as usize]
        }
    }
}

/// Single Talbot-Lau coefficient
///
///   B_m(ξ) = Σ_j b_j · conj(b_{j−m}) · exp(iπξ(m − 2j))
///
/// over the truncated b range (missing orders contribute zero).
pub fn talbot_lau_coefficient(b: &FourierCoefficients, m: i64, xi: f64) -> Complex64 {
    let n = b.n_max() as i64;
    let mut sum = Complex64::new(0.0, 0.0);
    let j_lo = (-n).max(m - n);
    let j_hi = n.min(m + n);
    for j in j_lo..=j_hi {
        let term = b.get(j) * b.get(j - m).conj();
        if term.norm_sqr() == 0.0 {
            continue;
        }
        sum += term * Complex64::new(0.0, PI * xi * (m - 2 * j) as f64).exp();
    }
    sum
}

/// The family B_m(ξ) for |m| ≤ m_max at a fixed ξ. Requires the b
/// coefficients truncated at n_max ≥ 2·m_max for the full range to be
/// trustworthy; otherwise the result is flagged.
pub fn talbot_lau_coefficients(b: &FourierCoefficients, xi: f64, m_max: usize) -> TalbotLauCoefficients {
    let values = (-(m_max as i64)..=m_max as i64)
        .map(|m| talbot_lau_coefficient(b, m, xi))
        .collect();
    TalbotLauCoefficients { m_max, values, truncated: b.n_max() < 2 * m_max }
}

/// Truncation and sampling controls for the fringe-signal evaluation.
#[derive(Debug, Clone, Copy)]
pub struct FringeParams {
    /// Diffraction orders kept for the second grating.
    pub n_max: usize,
    /// Signal harmonics kept in the detector scan.
    pub m_max: usize,
    /// Samples per period when reconstructing the scan.
    pub resolution: usize,
    /// Eikonal-phase absorption cap (radians).
    pub phi_cap: f64,
}

impl Default for FringeParams {
    fn default() -> Self {
        FringeParams { n_max: 40, m_max: 10, resolution: 256, phi_cap: DEFAULT_PHI_CAP }
    }
}

/// Transmitted flux versus third-grating scan position over one period,
/// together with its Fourier components S_m.
#[derive(Debug, Clone)]
pub struct FringeSignal {
    /// Scan positions x_s in meters, spanning one period.
    pub positions: Vec<f64>,
    /// Real, non-negative flux (arbitrary units) per scan position.
    pub values: Vec<f64>,
    /// Components S_m for m = −m_max..m_max; S(x) = Σ_m S_m e^{2πimx/d}.
    pub fourier_components: Vec<Complex64>,
    /// Grating period in meters.
    pub period: f64,
    /// Harmonic truncation used.
    pub m_max: usize,
    /// Set when the b-coefficient truncation was insufficient for m_max.
    pub truncated: bool,
}

impl FringeSignal {
    pub fn component(&self, m: i64) -> Complex64 {
        if m.unsigned_abs() as usize > self.m_max {
            Complex64::new(0.0, 0.0)
        } else {
            self.fourier_components[(m + self.m_max as i64) as usize]
        }
    }

    /// (max − min)/(max + min) of the reconstructed scan.
    pub fn visibility_exact(&self) -> Result<f64> {
        let max = self.values.iter().cloned().fold(f64::MIN, f64::max);
        let min = self.values.iter().cloned().fold(f64::MAX, f64::min);
        if max + min <= 0.0 {
            return Err(Error::degenerate("fringe signal has non-positive mean"));
        }
        Ok((max - min) / (max + min))
    }

    /// 2|S_1|/S_0, the sinusoidal visibility compared against fitted
    /// experimental fringes.
    pub fn visibility_sinusoidal(&self) -> Result<f64> {
        let s0 = self.component(0).re;
        if s0 <= 0.0 {
            return Err(Error::degenerate("fringe signal has non-positive S_0"));
        }
        Ok(2.0 * self.component(1).norm() / s0)
    }
}

/// Fringe signal of the symmetric Talbot-Lau interferometer at velocity `v`.
///
/// Harmonic m of the scan couples diffraction orders of the second grating
/// that differ by 2m:
///
///   S_m = A_{−m} · B_{2m}(m·L/L_T) · C_{−m}
///
/// with A, C the intensity-transmission coefficients of the outer gratings
/// and B the Talbot-Lau coefficients of the central one. The index pairing
/// and phase convention are pinned by the Fresnel propagation oracle in
/// [`crate::fresnel`].
pub fn fringe_signal(config: &InterferometerConfig, v: f64, resolution: usize) -> Result<FringeSignal> {
    fringe_signal_with(config, v, &FringeParams { resolution, ..FringeParams::default() })
}

/// As [`fringe_signal`] with explicit truncation controls.
pub fn fringe_signal_with(
    config: &InterferometerConfig,
    v: f64,
    params: &FringeParams,
) -> Result<FringeSignal> {
    if !(v > 0.0) {
        return Err(Error::domain(format!("velocity must be positive, got {v} m/s")));
    }
    if params.resolution < 2 {
        return Err(Error::domain("resolution must be at least 2"));
    }
    let d = config.period();
    let xi0 = config.talbot_parameter(v)?;
    let m_max = params.m_max;

    let b = grating_coefficients_with_cap(&config.g2, &config.molecule, v, params.n_max, params.phi_cap)?;
    let a_coeffs = binary_intensity_coefficients(&config.g1, m_max);
    let c_coeffs = binary_intensity_coefficients(&config.g3, m_max);

    let mut components = vec![Complex64::new(0.0, 0.0); 2 * m_max + 1];
    for m in 0..=m_max as i64 {
        let s = a_coeffs.get(-m)
            * talbot_lau_coefficient(&b, 2 * m, m as f64 * xi0)
            * c_coeffs.get(-m);
        components[(m + m_max as i64) as usize] = s;
        // real flux: S_{−m} = conj(S_m)
        components[(m_max as i64 - m) as usize] = s.conj();
    }

    let positions: Vec<f64> = (0..params.resolution)
        .map(|k| k as f64 * d / params.resolution as f64)
        .collect();
    let mut max_re: f64 = 0.0;
    let mut max_im: f64 = 0.0;
    let mut values = Vec::with_capacity(params.resolution);
    for &x in &positions {
        let mut s = Complex64::new(0.0, 0.0);
        for m in -(m_max as i64)..=m_max as i64 {
            s += components[(m + m_max as i64) as usize]
                * Complex64::new(0.0, 2.0 * PI * m as f64 * x / d).exp();
        }
        max_re = max_re.max(s.re.abs());
        max_im = max_im.max(s.im.abs());
        values.push(s.re);
    }
    if max_im > 1e-9 * max_re {
        return Err(Error::numerics(format!(
            "fringe signal has imaginary residue {max_im:e} against amplitude {max_re:e}; \
             refusing to take the real part"
        )));
    }

    Ok(FringeSignal {
        positions,
        values,
        fourier_components: components,
        period: d,
        m_max,
        truncated: params.n_max < 4 * m_max,
    })
}

/// Both visibility estimators of a fringe signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Visibility {
    /// (max − min)/(max + min) of the full reconstructed signal.
    pub exact: f64,
    /// 2|S_1|/S_0; the default for comparison against fitted fringes.
    pub sinusoidal: f64,
}

/// Fringe visibility at a single velocity.
pub fn quantum_visibility(config: &InterferometerConfig, v: f64) -> Result<Visibility> {
    quantum_visibility_with(config, v, &FringeParams::default())
}

/// As [`quantum_visibility`] with explicit truncation controls.
pub fn quantum_visibility_with(
    config: &InterferometerConfig,
    v: f64,
    params: &FringeParams,
) -> Result<Visibility> {
    let signal = fringe_signal_with(config, v, params)?;
    Ok(Visibility {
        exact: signal.visibility_exact()?,
        sinusoidal: signal.visibility_sinusoidal()?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn paper_config(c3: f64) -> InterferometerConfig {
        let mut config = presets::interferometer();
        config.molecule.c3 = c3;
        config
    }

    #[test]
    fn de_broglie_examples() {
        let tpp = MoleculeSpecies::new("TPP", 614.0, 0.0).unwrap();
        let lambda = de_broglie_wavelength(&tpp, 250.0).unwrap();
        // frozen from independent evaluation of h/(m·v) with CODATA values
        assert_relative_eq!(lambda, 2.599_552_256_854_982_5e-12, max_relative = 1e-12);
        assert!((lambda - 2.600e-12).abs() < 1e-15);
        // halving the velocity doubles the wavelength
        assert_relative_eq!(de_broglie_wavelength(&tpp, 125.0).unwrap(), 2.0 * lambda, max_relative = 1e-12);
        // doubling the mass halves it
        let heavy = MoleculeSpecies::new("2xTPP", 1228.0, 0.0).unwrap();
        assert_relative_eq!(de_broglie_wavelength(&heavy, 250.0).unwrap(), lambda / 2.0, max_relative = 1e-12);
        assert!(de_broglie_wavelength(&tpp, 0.0).is_err());
        assert!(de_broglie_wavelength(&tpp, -10.0).is_err());
    }

    #[test]
    fn talbot_length_matches_published_value() {
        let tpp = MoleculeSpecies::new("TPP", 614.0, 0.0).unwrap();
        let lambda = de_broglie_wavelength(&tpp, 250.0).unwrap();
        let lt = talbot_length(991e-9, lambda).unwrap();
        assert_relative_eq!(lt, 0.377_788_520_084_666_9, max_relative = 1e-12);
        // the design separation of 0.38 m is the Talbot length within 1%
        assert!((lt - 0.38).abs() / 0.38 < 0.01);

        // definition: λ numerically equal to d² gives 1 m
        let d = 3.7e-6;
        assert_relative_eq!(talbot_length(d, d * d).unwrap(), 1.0, max_relative = 1e-12);

        let lambda_140 = de_broglie_wavelength(&tpp, 140.0).unwrap();
        let lt_140 = talbot_length(991e-9, lambda_140).unwrap();
        assert_relative_eq!(lt_140, 0.211_561_571_247_413_48, max_relative = 1e-12);
        assert!((lt_140 - 0.2115).abs() < 1e-4);

        assert!(talbot_length(0.0, 1e-12).is_err());
        assert!(talbot_length(991e-9, 0.0).is_err());
    }

    #[test]
    fn config_rejects_mismatched_periods() {
        let g = GratingSpec::new(991e-9, 0.4, 500e-9).unwrap();
        let g_other = GratingSpec::new(500e-9, 0.4, 500e-9).unwrap();
        let tpp = MoleculeSpecies::new("TPP", 614.0, 0.0).unwrap();
        assert!(InterferometerConfig::new(g, g_other, g, 0.38, tpp.clone()).is_err());
        assert!(InterferometerConfig::new(g, g, g, 0.0, tpp).is_err());
    }

    #[test]
    fn talbot_lau_at_zero_xi_is_intensity_spectrum() {
        // With C3 > 0 the transmitted slit narrows by the absorbed margin but
        // |t|² stays binary, so B_m(0) has a closed form independent of the
        // b-coefficient machinery. A modest phase cap keeps the wall winding
        // within the b truncation; the identity itself is cap-independent.
        let g = GratingSpec::new(991e-9, 0.4, 500e-9).unwrap();
        let mol = MoleculeSpecies::new("TPP", 614.0, 3e-49).unwrap();
        let v = 250.0;
        let cap = 3.0;
        let n_max = 600;
        let b = grating_coefficients_with_cap(&g, &mol, v, n_max, cap).unwrap();
        let margin = crate::physics::absorbed_margin(&g, &mol, v, cap);
        let w = g.slit_width() / 2.0 - margin;
        let d = g.period;
        for m in 0..=4i64 {
            let expected = if m == 0 {
                2.0 * w / d
            } else {
                (2.0 * PI * m as f64 * w / d).sin() / (PI * m as f64)
            };
            let got = talbot_lau_coefficient(&b, m, 0.0);
            assert!(
                (got.re - expected).abs() < 1e-3 && got.im.abs() < 1e-3,
                "B_{m}(0) = {got} vs {expected}"
            );
        }
    }

    #[test]
    fn talbot_lau_b0_is_parseval_sum() {
        let g = GratingSpec::new(991e-9, 0.4, 500e-9).unwrap();
        let mol = MoleculeSpecies::new("TPP", 614.0, 0.0).unwrap();
        let b = grating_coefficients_with_cap(&g, &mol, 250.0, 32, DEFAULT_PHI_CAP).unwrap();
        let b0 = talbot_lau_coefficient(&b, 0, 0.0);
        assert_relative_eq!(b0.re, b.power_sum(), max_relative = 1e-12);
        assert!(b0.im.abs() < 1e-15);
        // converges to the open fraction from below
        assert!(b0.re < 0.4 && b0.re > 0.39);
    }

    #[test]
    fn talbot_lau_binary_identity_at_resonance() {
        // For a binary grating B_2(1) collapses to the second Fourier
        // coefficient of the mask: sin(0.8π)/(2π). The b-product tail decays
        // like 1/n, so the identity needs a generous truncation.
        let g = GratingSpec::new(991e-9, 0.4, 500e-9).unwrap();
        let mol = MoleculeSpecies::new("TPP", 614.0, 0.0).unwrap();
        let b = grating_coefficients_with_cap(&g, &mol, 250.0, 1024, DEFAULT_PHI_CAP).unwrap();
        let expected = (0.8 * PI).sin() / (2.0 * PI);
        let got = talbot_lau_coefficient(&b, 2, 1.0);
        assert!((got.re - expected).abs() < 1e-3, "{got} vs {expected}");
        assert!(got.im.abs() < 1e-12);
    }

    #[test]
    fn truncation_flag_set_when_b_range_insufficient() {
        let g = GratingSpec::new(991e-9, 0.4, 500e-9).unwrap();
        let mol = MoleculeSpecies::new("TPP", 614.0, 0.0).unwrap();
        let b = grating_coefficients_with_cap(&g, &mol, 250.0, 8, DEFAULT_PHI_CAP).unwrap();
        assert!(talbot_lau_coefficients(&b, 0.3, 5).truncated);
        assert!(!talbot_lau_coefficients(&b, 0.3, 4).truncated);
    }

    #[test]
    fn fringe_signal_flat_for_fully_open_gratings() {
        let g = GratingSpec::new(991e-9, 1.0, 0.0).unwrap();
        let tpp = MoleculeSpecies::new("TPP", 614.0, 0.0).unwrap();
        let config = InterferometerConfig::new(g, g, g, 0.38, tpp).unwrap();
        let signal = fringe_signal(&config, 250.0, 64).unwrap();
        let vis = quantum_visibility(&config, 250.0).unwrap();
        assert!(vis.exact.abs() < 1e-12);
        assert!(vis.sinusoidal.abs() < 1e-12);
        let mean = signal.values.iter().sum::<f64>() / signal.values.len() as f64;
        for v in &signal.values {
            assert_relative_eq!(*v, mean, max_relative = 1e-12);
        }
    }

    #[test]
    fn fringe_signal_hermitian_and_real() {
        for c3 in [0.0, 3e-49] {
            let config = paper_config(c3);
            let signal = fringe_signal(&config, 250.0, 128).unwrap();
            for m in 0..=signal.m_max as i64 {
                let s = signal.component(m);
                let s_neg = signal.component(-m);
                assert_eq!(s_neg, s.conj(), "S_-m must equal conj(S_m) at m={m}");
            }
            for v in &signal.values {
                assert!(*v > -1e-9, "signal must be non-negative, got {v}");
            }
        }
    }

    #[test]
    fn paper_geometry_visibility_frozen_values() {
        // frozen from an independent evaluation of the coefficient sums
        let config = paper_config(0.0);
        let v250 = quantum_visibility(&config, 250.0).unwrap();
        assert!((v250.sinusoidal - 0.281_388_361).abs() < 1e-6, "got {}", v250.sinusoidal);
        let v140 = quantum_visibility(&config, 140.0).unwrap();
        assert!((v140.sinusoidal - 0.432_806_825).abs() < 1e-6, "got {}", v140.sinusoidal);
    }

    #[test]
    fn visibility_curve_is_quasi_periodic() {
        let config = paper_config(0.0);
        let velocities: Vec<f64> = (0..51).map(|i| 100.0 + 5.0 * i as f64).collect();
        let vis: Vec<f64> = velocities
            .iter()
            .map(|&v| quantum_visibility(&config, v).unwrap().sinusoidal)
            .collect();
        let extrema = vis
            .windows(3)
            .filter(|w| (w[1] - w[0]) * (w[2] - w[1]) < 0.0)
            .count();
        assert!(extrema >= 2, "expected a non-monotonic quasi-periodic curve, found {extrema} extrema");
    }

    #[test]
    fn exact_visibility_bounds_sinusoidal_for_first_harmonic_signals() {
        let config = paper_config(0.0);
        for v in [140.0, 200.0, 250.0, 300.0] {
            let vis = quantum_visibility(&config, v).unwrap();
            assert!(
                vis.exact >= vis.sinusoidal - 0.02,
                "v={v}: exact {} vs sinusoidal {}",
                vis.exact,
                vis.sinusoidal
            );
        }
    }

    #[test]
    fn visibility_depends_only_on_mass_velocity_product() {
        // mass·velocity fixes λ and hence L/L_T; with C3 = 0 nothing else
        // enters.
        let config = paper_config(0.0);
        let mut doubled = config.clone();
        doubled.molecule.mass_amu *= 2.0;
        for v in [150.0, 250.0] {
            let a = quantum_visibility(&config, v).unwrap();
            let b = quantum_visibility(&doubled, v / 2.0).unwrap();
            assert_relative_eq!(a.sinusoidal, b.sinusoidal, max_relative = 1e-12);
            assert_relative_eq!(a.exact, b.exact, max_relative = 1e-12);
        }
    }

    proptest! {
        #[test]
        fn talbot_lau_periodicity(xi in -4.0f64..4.0, m in -6i64..=6) {
            let g = GratingSpec::new(991e-9, 0.35, 500e-9).unwrap();
            let mol = MoleculeSpecies::new("TPP", 614.0, 0.0).unwrap();
            let b = grating_coefficients_with_cap(&g, &mol, 250.0, 16, DEFAULT_PHI_CAP).unwrap();
            let lhs = talbot_lau_coefficient(&b, m, xi);
            let rhs = talbot_lau_coefficient(&b, m, xi + 2.0);
            prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + lhs.norm()));
        }

        #[test]
        fn fringe_components_hermitian(v in 100.0f64..350.0) {
            let config = paper_config(0.0);
            let signal = fringe_signal(&config, v, 32).unwrap();
            for m in 0..=10i64 {
                prop_assert!((signal.component(-m) - signal.component(m).conj()).norm() < 1e-15);
            }
        }
    }
}
