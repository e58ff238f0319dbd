//! Instance files: a single human-editable TOML document describing one
//! problem instance, optional sweep grids, and oracle overrides.
//!
//! Matrices are entered column-major so each inner list reads as one
//! conditional pmf: `p_s_given_x = [[...given x=0...], [...given x=1...]]`.

use crate::dist::{Channel, Pmf};
use crate::error::{Error, Result};
use crate::geometry::ProblemInstance;
use crate::oracle::{Measure, OracleConfig};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphabetSizes {
    pub s: usize,
    pub x: usize,
    pub t: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub eps_grid: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_grid: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OracleOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_resolution: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_cardinality: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure: Option<Measure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphabet: Option<AlphabetSizes>,
    pub p_x: Vec<f64>,
    /// Column-major: entry x is the conditional pmf of the sensitive value
    /// given data value x.
    pub p_s_given_x: Vec<Vec<f64>>,
    pub p_t_given_x: Vec<Vec<f64>>,
    pub eps: f64,
    pub rate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleOverrides>,
}

impl InstanceFile {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Validates and lowers the file into a problem instance.
    pub fn to_instance(&self) -> Result<ProblemInstance> {
        let p_x = Pmf::new(self.p_x.clone()).map_err(|e| Error::Validation(format!("p_x: {e}")))?;
        let p_s_given_x = Channel::from_columns(&self.p_s_given_x)
            .map_err(|e| Error::Validation(format!("p_s_given_x: {e}")))?;
        let p_t_given_x = Channel::from_columns(&self.p_t_given_x)
            .map_err(|e| Error::Validation(format!("p_t_given_x: {e}")))?;
        if let Some(sizes) = &self.alphabet {
            if sizes.x != p_x.len()
                || sizes.s != p_s_given_x.out_size()
                || sizes.t != p_t_given_x.out_size()
            {
                return Err(Error::Validation(format!(
                    "declared alphabet sizes (s={}, x={}, t={}) do not match the data \
                     (s={}, x={}, t={})",
                    sizes.s,
                    sizes.x,
                    sizes.t,
                    p_s_given_x.out_size(),
                    p_x.len(),
                    p_t_given_x.out_size()
                )));
            }
        }
        ProblemInstance::new(p_x, p_s_given_x, p_t_given_x, self.eps, self.rate)
    }

    /// Oracle configuration with file overrides applied on top of defaults.
    pub fn oracle_config(&self) -> OracleConfig {
        let mut cfg = OracleConfig::default();
        if let Some(o) = &self.oracle {
            if let Some(r) = o.grid_resolution {
                cfg.grid_resolution = r;
            }
            if let Some(y) = o.y_cardinality {
                cfg.y_cardinality = y;
            }
            if let Some(m) = o.measure {
                cfg.measure = m;
            }
        }
        cfg
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const REFERENCE: &str = include_str!("../instances/reference.toml");

    #[test]
    fn bundled_file_parses_and_lowers() {
        let file = InstanceFile::from_toml_str(REFERENCE).unwrap();
        let inst = file.to_instance().unwrap();
        assert_eq!(inst.eps(), 0.05);
        assert_eq!(inst.rate(), 0.75);
        assert_eq!(inst.x_size(), 2);
        let sweep = file.sweep.expect("bundled sweep block");
        assert_eq!(sweep.eps_grid.len(), 10);
    }

    #[test]
    fn round_trip_preserves_instance() {
        let file = InstanceFile::from_toml_str(REFERENCE).unwrap();
        let text = file.to_toml_string().unwrap();
        let back = InstanceFile::from_toml_str(&text).unwrap();
        assert_eq!(file, back);
    }

    #[test]
    fn parse_errors_carry_location() {
        let err = InstanceFile::from_toml_str("p_x = [0.25, oops]").unwrap_err();
        let msg = err.to_string();
        assert!(
            msg.contains("line"),
            "parse error should name a line: {msg}"
        );
        // field-level errors name the field
        let err = InstanceFile::from_toml_str("p_x = [0.25, 0.75]").unwrap_err();
        assert!(err.to_string().contains("p_s_given_x"));
    }

    #[test]
    fn mismatched_alphabet_rejected() {
        let mut file = InstanceFile::from_toml_str(REFERENCE).unwrap();
        file.alphabet = Some(AlphabetSizes { s: 3, x: 2, t: 2 });
        assert!(matches!(file.to_instance(), Err(Error::Validation(_))));
    }

    #[test]
    fn non_normalized_pmf_is_a_validation_error() {
        let text = REFERENCE.replace("p_x = [0.25, 0.75]", "p_x = [0.25, 0.74]");
        let file = InstanceFile::from_toml_str(&text).unwrap();
        let err = file.to_instance().unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }
}
