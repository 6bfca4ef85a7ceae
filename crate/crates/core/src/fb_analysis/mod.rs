//! Free boundary extraction and the quantitative diagnostics: flatness,
//! non-degeneracy, linear growth, gradient-constraint violation, the level
//! strip integrand, Harnack-type trapping decay and improvement of flatness.

mod extract;
mod flatness;
mod harnack;
mod metrics;
mod report;

pub use extract::{extract_free_boundary, FbPoint, FreeBoundary};
pub use flatness::{flatness, flatness_report, improvement_of_flatness, FlatnessReport, FlatnessRow, ImprovementReport};
pub use harnack::{harnack_decay, HarnackReport, HarnackRow};
pub use metrics::{
    eta_integral, gradient_constraint_check, hausdorff_estimate, linear_growth_check,
    nondegeneracy_constant, EtaIntegral, GradientConstraintReport, HausdorffReport, HausdorffRow,
    NondegeneracyReport,
};
pub use report::AnalysisSummary;
