//! JSON summary of a field's diagnostics (the CSV per-scale tables live with
//! their report types).

use crate::error::Result;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct AnalysisSummary {
    pub fb_points: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_growth: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sup_eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xi_fit: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta_integral: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta_integral_half_floor: Option<f64>,
    /// Which gauge construction produced the η values ("convex-hull" or
    /// "radial-excess"), with unit proportionality constant.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gauge_mode: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flatness_finest: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub holder_exponent_est: Option<f64>,
}

impl AnalysisSummary {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }
}
