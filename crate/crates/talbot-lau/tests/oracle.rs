//! Cross-validation of the coefficient-based fringe model against the
//! direct Fresnel-propagation oracle. The two paths share no Fourier
//! machinery; agreement here pins the Talbot-Lau index and phase
//! conventions.

use talbot_lau::fresnel::{fresnel_fringe_scan, FresnelParams};
use talbot_lau::physics::{fringe_signal_with, FringeParams};
use talbot_lau::presets;

struct Case {
    label: &'static str,
    open_fraction_g2: f64,
    c3: f64,
    velocity: f64,
    fringe: FringeParams,
    oracle: FresnelParams,
}

fn paper_case(label: &'static str, velocity: f64) -> Case {
    Case {
        label,
        open_fraction_g2: 0.4,
        c3: 0.0,
        velocity,
        fringe: FringeParams { resolution: 64, ..FringeParams::default() },
        oracle: FresnelParams::default(),
    }
}

fn run_case(case: &Case) -> (f64, f64, f64) {
    let mut config = presets::interferometer();
    config.g2.open_fraction = case.open_fraction_g2;
    config.molecule.c3 = case.c3;

    let signal = fringe_signal_with(&config, case.velocity, &case.fringe).unwrap();
    let scan = fresnel_fringe_scan(&config, case.velocity, &case.oracle).unwrap();
    assert_eq!(signal.values.len(), scan.values.len(), "sampling grids must line up");

    let v_model = signal.visibility_sinusoidal().unwrap();
    let v_oracle = scan.visibility_sinusoidal();

    let mean_model = signal.values.iter().sum::<f64>() / signal.values.len() as f64;
    let model_norm: Vec<f64> = signal.values.iter().map(|v| v / mean_model).collect();
    let oracle_norm = scan.normalized();
    let pointwise = model_norm
        .iter()
        .zip(&oracle_norm)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);

    let v_exact_model = signal.visibility_exact().unwrap();
    let v_exact_oracle = scan.visibility_exact();
    eprintln!(
        "{}: model Vsin={v_model:.4} Vexact={v_exact_model:.4} | oracle Vsin={v_oracle:.4} \
         Vexact={v_exact_oracle:.4} | pointwise={pointwise:.4}",
        case.label
    );
    (v_model, v_oracle, pointwise)
}

#[test]
fn fresnel_oracle_agreement_paper_geometry_design_velocity() {
    let (v_model, v_oracle, pointwise) = run_case(&paper_case("f=0.4 v=250 C3=0", 250.0));
    assert!((v_model - v_oracle).abs() < 0.02, "visibility {v_model} vs oracle {v_oracle}");
    assert!(pointwise < 0.05, "pointwise deviation {pointwise}");
    assert!(v_model > 0.2, "the design point should show strong fringes");
}

#[test]
fn fresnel_oracle_agreement_slow_molecules() {
    let (v_model, v_oracle, pointwise) = run_case(&paper_case("f=0.4 v=140 C3=0", 140.0));
    assert!((v_model - v_oracle).abs() < 0.02, "visibility {v_model} vs oracle {v_oracle}");
    assert!(pointwise < 0.05, "pointwise deviation {pointwise}");
}

#[test]
fn fresnel_oracle_agreement_narrow_slits() {
    let case = Case {
        label: "f2=0.3 v=250 C3=0",
        open_fraction_g2: 0.3,
        c3: 0.0,
        velocity: 250.0,
        fringe: FringeParams { resolution: 64, ..FringeParams::default() },
        oracle: FresnelParams::default(),
    };
    let (v_model, v_oracle, pointwise) = run_case(&case);
    assert!((v_model - v_oracle).abs() < 0.02, "visibility {v_model} vs oracle {v_oracle}");
    assert!(pointwise < 0.05, "pointwise deviation {pointwise}");
    assert!(v_model > 0.3, "narrow central slits should raise the contrast");
}

#[test]
fn fresnel_oracle_agreement_near_visibility_zero() {
    // close to a contrast null the pointwise comparison is the stringent one
    let case = Case {
        label: "f2=0.3 v=180 C3=0",
        open_fraction_g2: 0.3,
        c3: 0.0,
        velocity: 180.0,
        fringe: FringeParams { resolution: 64, ..FringeParams::default() },
        oracle: FresnelParams::default(),
    };
    let (v_model, v_oracle, pointwise) = run_case(&case);
    assert!((v_model - v_oracle).abs() < 0.02, "visibility {v_model} vs oracle {v_oracle}");
    assert!(pointwise < 0.05, "pointwise deviation {pointwise}");
}

#[test]
fn fresnel_oracle_agreement_with_wall_interaction() {
    // The capped wall phase winds fast near the absorbed margin, spreading
    // spectral content to high orders on both sides of the comparison: the
    // model needs a deep coefficient truncation and the oracle a fine grid.
    let case = Case {
        label: "f=0.4 v=250 C3=3e-49",
        open_fraction_g2: 0.4,
        c3: 3e-49,
        velocity: 250.0,
        fringe: FringeParams { n_max: 240, m_max: 10, resolution: 64, phi_cap: 50.0 },
        oracle: FresnelParams { grid_points: 65536, ..FresnelParams::default() },
    };
    let (v_model, v_oracle, pointwise) = run_case(&case);
    assert!((v_model - v_oracle).abs() < 0.02, "visibility {v_model} vs oracle {v_oracle}");
    assert!(pointwise < 0.05, "pointwise deviation {pointwise}");
    assert!(v_model > 0.2, "the wall phase should not kill the design-point fringes");
}
