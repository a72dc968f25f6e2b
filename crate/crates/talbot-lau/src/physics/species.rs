use serde::{Deserialize, Serialize};

use crate::constants::AMU;
use crate::error::{Error, Result};

/// The interfering particle: mass plus the strength of its attractive
/// wall interaction inside grating slits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoleculeSpecies {
    pub name: String,
    /// Mass in atomic mass units.
    pub mass_amu: f64,
    /// Van der Waals coefficient C3 of the -C3/r³ particle-wall potential,
    /// in J·m³. Zero disables the wall interaction.
    pub c3: f64,
}

impl MoleculeSpecies {
    pub fn new(name: impl Into<String>, mass_amu: f64, c3: f64) -> Result<Self> {
        if !(mass_amu > 0.0) {
            return Err(Error::domain(format!("mass must be positive, got {mass_amu} amu")));
        }
        if !(c3 >= 0.0) {
            return Err(Error::domain(format!("C3 must be non-negative, got {c3} J·m³")));
        }
        Ok(MoleculeSpecies { name: name.into(), mass_amu, c3 })
    }

    /// Mass in kilograms.
    pub fn mass_kg(&self) -> f64 {
        self.mass_amu * AMU
    }
}
