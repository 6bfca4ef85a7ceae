//! Experiment configuration: a TOML file validated against the module
//! preconditions before any compute, with precise error paths.

use anyhow::{anyhow, bail, Context, Result};
use onephase_core::fields::Grid;
use onephase_core::geometry::StarDomain;
use onephase_core::potentials::{beta_of_gamma, HFunction};
use onephase_core::solvers::{Scheme, SeedChoice, SolverConfig, SweepOrder};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemBlock,
    pub grid: GridBlock,
    #[serde(default)]
    pub solver: SolverBlock,
    #[serde(default)]
    pub analysis: AnalysisBlock,
    pub output: OutputBlock,
    /// Recorded for the determinism contract (the pipeline itself is
    /// deterministic; randomized property tests key off this).
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemBlock {
    pub kind: ProblemKind,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub domain: Option<DomainBlock>,
    pub boundary: BoundaryBlock,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Obstacle,
    AltPhillips,
    Degenerate,
    Perron,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub struct DomainBlock {
    pub kind: DomainKind,
    #[serde(default)]
    pub rho: Option<f64>,
    #[serde(default)]
    pub a: Option<f64>,
    #[serde(default)]
    pub b: Option<f64>,
    #[serde(default)]
    pub samples: Option<usize>,
    /// Star-domain text table (`angle f`), or the `angle f slope` form when
    /// it also defines the nonlinearity.
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub h_table: Option<PathBuf>,
    /// Per-direction slope of the table-driven nonlinearity when only the
    /// plain domain table is given.
    #[serde(default)]
    pub slope: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    Ball,
    Ellipse,
    Table,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryBlock {
    pub kind: BoundaryKind,
    #[serde(default)]
    pub nu: Option<Vec<f64>>,
    #[serde(default)]
    pub offset: Option<f64>,
    #[serde(default)]
    pub a: Option<f64>,
    #[serde(default)]
    pub value: Option<f64>,
    #[serde(default)]
    pub path: Option<PathBuf>,
}

/// Boundary data specification. For the variational problems the data is in
/// the `u` variable, for the degenerate/Perron problems in the `w` variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    /// Trace of the half-plane solution in direction `nu` with the free
    /// boundary shifted by `offset` along `nu`.
    HalfPlane,
    /// Trace of the radial γ=1 solution with free boundary radius `a`.
    RadialObstacle,
    Constant,
    /// Sampled from a persisted field binary.
    File,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub dim: usize,
    pub n_cells: Vec<usize>,
    pub extent: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverBlock {
    /// Right-hand-side floor; `auto` means h/2.
    pub floor: FloorSpec,
    pub tol_residual: f64,
    pub max_iters: usize,
    pub relaxation: f64,
    pub sweep: SweepSpec,
    pub seed_choice: SeedSpec,
    pub allow_unconverged: bool,
    /// Hölder-cone seed parameters (Perron scheme).
    pub seed_c: f64,
    pub seed_alpha: f64,
}

impl Default for SolverBlock {
    fn default() -> Self {
        SolverBlock {
            floor: FloorSpec::Auto,
            tol_residual: 1e-7,
            max_iters: 60_000,
            relaxation: 0.7,
            sweep: SweepSpec::RedBlack,
            seed_choice: SeedSpec::ConstMean,
            allow_unconverged: false,
            seed_c: 8.0,
            seed_alpha: 0.5,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FloorSpec {
    #[serde(rename = "auto")]
    Auto,
    Value(f64),
}

impl Default for FloorSpec {
    fn default() -> Self {
        FloorSpec::Auto
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepSpec {
    Lexicographic,
    RedBlack,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedSpec {
    Zero,
    ConstMean,
    Harmonic,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisBlock {
    pub metrics: Vec<String>,
    /// Analyses anchor at the extracted boundary point nearest this center.
    pub center: [f64; 2],
    pub scales: Vec<f64>,
    /// Strip levels in units of h.
    pub levels: Vec<f64>,
    pub band: f64,
    pub gauge: GaugeSpec,
    pub harnack_eta: f64,
}

impl Default for AnalysisBlock {
    fn default() -> Self {
        AnalysisBlock {
            metrics: vec!["free_boundary".into()],
            center: [0.0, 0.0],
            scales: vec![0.5, 0.25, 0.125],
            levels: vec![8.0, 16.0, 32.0],
            band: 0.1,
            gauge: GaugeSpec::ConvexHull,
            harnack_eta: 0.5,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaugeSpec {
    ConvexHull,
    RadialExcess,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    pub dir: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<String>,
}

fn default_formats() -> Vec<String> {
    vec!["binary".into(), "csv".into(), "json".into()]
}

pub const KNOWN_METRICS: &[&str] = &[
    "free_boundary",
    "flatness",
    "nondegeneracy",
    "growth",
    "gradient_constraint",
    "eta_integral",
    "hausdorff",
    "harnack",
];

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).context("config parse failed")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        Self::parse(&text)
    }

    /// Full semantic validation against the module preconditions; no compute.
    pub fn validate(&self) -> Result<()> {
        // grid block
        let g = &self.grid;
        if g.dim != 1 && g.dim != 2 {
            bail!("grid.dim must be 1 or 2, got {}", g.dim);
        }
        if g.n_cells.len() != g.dim {
            bail!("grid.n_cells must list {} entries", g.dim);
        }
        if g.extent.len() != g.dim {
            bail!("grid.extent must list {} [lo, hi] pairs", g.dim);
        }
        for (d, e) in g.extent.iter().enumerate() {
            if e[1] <= e[0] {
                bail!("grid.extent[{d}] is empty: [{}, {}]", e[0], e[1]);
            }
        }
        let h0 = (g.extent[0][1] - g.extent[0][0]) / g.n_cells[0] as f64;
        for d in 1..g.dim {
            let hd = (g.extent[d][1] - g.extent[d][0]) / g.n_cells[d] as f64;
            if (hd - h0).abs() > 1e-12 * h0 {
                bail!(
                    "grid spacing must be equal per axis: axis 0 gives h = {h0}, axis {d} gives {hd}"
                );
            }
        }
        self.build_grid()?;

        // problem block
        match self.problem.kind {
            ProblemKind::Obstacle => {
                if let Some(gm) = self.problem.gamma {
                    if (gm - 1.0).abs() > 1e-12 {
                        bail!("problem.gamma: the obstacle problem is the γ = 1 case, got {gm}");
                    }
                }
            }
            ProblemKind::AltPhillips => {
                let gm = self
                    .problem
                    .gamma
                    .ok_or_else(|| anyhow!("problem.gamma is required for alt_phillips"))?;
                beta_of_gamma(gm).map_err(|e| anyhow!("problem.gamma: {e}"))?;
            }
            ProblemKind::Degenerate | ProblemKind::Perron => {
                self.build_hfunction()?;
            }
        }

        // boundary block
        let b = &self.problem.boundary;
        match b.kind {
            BoundaryKind::HalfPlane => {
                let nu = b
                    .nu
                    .as_ref()
                    .ok_or_else(|| anyhow!("problem.boundary.nu is required for half_plane"))?;
                if nu.len() != g.dim {
                    bail!("problem.boundary.nu must have {} components", g.dim);
                }
                let norm: f64 = nu.iter().map(|v| v * v).sum::<f64>().sqrt();
                if (norm - 1.0).abs() > 1e-9 {
                    bail!("problem.boundary.nu must be a unit vector (norm = {norm})");
                }
            }
            BoundaryKind::RadialObstacle => {
                let a = b
                    .a
                    .ok_or_else(|| anyhow!("problem.boundary.a is required for radial_obstacle"))?;
                if !(a > 0.0) {
                    bail!("problem.boundary.a must be positive, got {a}");
                }
            }
            BoundaryKind::Constant => {
                let v = b
                    .value
                    .ok_or_else(|| anyhow!("problem.boundary.value is required for constant"))?;
                if v < 0.0 {
                    bail!("problem.boundary.value must be nonnegative, got {v}");
                }
            }
            BoundaryKind::File => {
                let p = b
                    .path
                    .as_ref()
                    .ok_or_else(|| anyhow!("problem.boundary.path is required for file data"))?;
                if !p.exists() {
                    bail!("problem.boundary.path does not exist: {}", p.display());
                }
            }
        }

        // solver block
        let s = &self.solver;
        if !(s.tol_residual > 0.0) {
            bail!("solver.tol_residual must be positive");
        }
        if !(s.relaxation > 0.0 && s.relaxation <= 1.0) {
            bail!("solver.relaxation must lie in (0, 1], got {}", s.relaxation);
        }
        if let FloorSpec::Value(f) = s.floor {
            if f < h0 / 2.0 {
                bail!("solver.floor = {f} is below h/2 = {}", h0 / 2.0);
            }
        }

        // analysis block
        for m in &self.analysis.metrics {
            if !KNOWN_METRICS.contains(&m.as_str()) {
                bail!(
                    "analysis.metrics: unknown metric `{m}` (known: {})",
                    KNOWN_METRICS.join(", ")
                );
            }
        }
        for lv in &self.analysis.levels {
            if *lv < 4.0 {
                bail!("analysis.levels are in units of h and must be >= 4, got {lv}");
            }
        }
        Ok(())
    }

    pub fn build_grid(&self) -> Result<Grid> {
        let g = &self.grid;
        let h = (g.extent[0][1] - g.extent[0][0]) / g.n_cells[0] as f64;
        let grid = if g.dim == 1 {
            Grid::new_1d(g.extent[0][0], g.n_cells[0], h)
        } else {
            Grid::new_2d(
                [g.extent[0][0], g.extent[1][0]],
                [g.n_cells[0], g.n_cells[1]],
                h,
            )
        };
        grid.map_err(|e| anyhow!("grid: {e}"))
    }

    /// The nonlinearity of the degenerate/Perron problems.
    pub fn build_hfunction(&self) -> Result<HFunction> {
        let dim = self.grid.dim;
        match &self.problem.domain {
            None => {
                let gm = self.problem.gamma.ok_or_else(|| {
                    anyhow!("problem.gamma or problem.domain is required for the degenerate problem")
                })?;
                HFunction::quadratic(gm, dim).map_err(|e| anyhow!("problem.gamma: {e}"))
            }
            Some(d) => match d.kind {
                DomainKind::Ball => {
                    let gm = self.problem.gamma.ok_or_else(|| {
                        anyhow!("problem.gamma is required with the ball domain (quadratic h)")
                    })?;
                    if let Some(rho) = d.rho {
                        let dom = StarDomain::ball(dim, rho)
                            .map_err(|e| anyhow!("problem.domain.rho: {e}"))?;
                        let m = dom.angular_samples();
                        let slope = d.slope.unwrap_or(1.0);
                        HFunction::from_table(dom, vec![slope; m])
                            .map_err(|e| anyhow!("problem.domain: {e}"))
                    } else {
                        HFunction::quadratic(gm, dim).map_err(|e| anyhow!("problem.gamma: {e}"))
                    }
                }
                DomainKind::Ellipse => {
                    let (a, b) = (
                        d.a.ok_or_else(|| anyhow!("problem.domain.a required for ellipse"))?,
                        d.b.ok_or_else(|| anyhow!("problem.domain.b required for ellipse"))?,
                    );
                    let m = d.samples.unwrap_or(720);
                    let dom =
                        StarDomain::ellipse(a, b, m).map_err(|e| anyhow!("problem.domain: {e}"))?;
                    dom.validate().map_err(|e| anyhow!("problem.domain: {e}"))?;
                    let slope = d.slope.unwrap_or(1.0);
                    HFunction::from_table(dom, vec![slope; m])
                        .map_err(|e| anyhow!("problem.domain: {e}"))
                }
                DomainKind::Table => {
                    if let Some(hp) = &d.h_table {
                        if !hp.exists() {
                            bail!("problem.domain.h_table does not exist: {}", hp.display());
                        }
                        let text = std::fs::read_to_string(hp)?;
                        HFunction::parse_table(&text).map_err(|e| anyhow!("problem.domain.h_table: {e}"))
                    } else {
                        let p = d
                            .path
                            .as_ref()
                            .ok_or_else(|| anyhow!("problem.domain.path or h_table required for table"))?;
                        if !p.exists() {
                            bail!("problem.domain.path does not exist: {}", p.display());
                        }
                        let dom = StarDomain::read_table(p, None)
                            .map_err(|e| anyhow!("problem.domain.path: {e}"))?;
                        dom.validate().map_err(|e| anyhow!("problem.domain: {e}"))?;
                        let m = dom.angular_samples();
                        let slope = d.slope.unwrap_or(1.0);
                        HFunction::from_table(dom, vec![slope; m])
                            .map_err(|e| anyhow!("problem.domain: {e}"))
                    }
                }
            },
        }
    }

    pub fn solver_config(&self, grid: &Grid) -> SolverConfig {
        let scheme = match self.problem.kind {
            ProblemKind::Obstacle => Scheme::Obstacle,
            ProblemKind::AltPhillips => Scheme::AltPhillips,
            ProblemKind::Degenerate => Scheme::Degenerate,
            ProblemKind::Perron => Scheme::Perron,
        };
        let mut cfg = SolverConfig::new(scheme, grid.h());
        cfg.floor = match self.solver.floor {
            FloorSpec::Auto => grid.h() / 2.0,
            FloorSpec::Value(f) => f,
        };
        cfg.tol_residual = self.solver.tol_residual;
        cfg.max_iters = self.solver.max_iters;
        cfg.relaxation = self.solver.relaxation;
        cfg.sweep = match self.solver.sweep {
            SweepSpec::Lexicographic => SweepOrder::Lexicographic,
            SweepSpec::RedBlack => SweepOrder::RedBlack,
        };
        cfg.seed = match self.solver.seed_choice {
            SeedSpec::Zero => SeedChoice::Zero,
            SeedSpec::ConstMean => SeedChoice::ConstMean,
            SeedSpec::Harmonic => SeedChoice::Harmonic,
        };
        cfg
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[problem]
kind = "degenerate"
gamma = 1.0
[problem.boundary]
kind = "half_plane"
nu = [0.0, 1.0]
[grid]
dim = 2
n_cells = [32, 32]
extent = [[-1.0, 1.0], [-1.0, 1.0]]
[output]
dir = "out"
"#;

    #[test]
    fn minimal_config_parses() {
        let cfg = ExperimentConfig::parse(MINIMAL).unwrap();
        assert_eq!(cfg.problem.kind, ProblemKind::Degenerate);
        cfg.build_grid().unwrap();
        cfg.build_hfunction().unwrap();
    }

    #[test]
    fn gamma_out_of_range_names_constraint() {
        let bad = MINIMAL.replace("gamma = 1.0", "gamma = 3.0");
        let err = format!("{:#}", ExperimentConfig::parse(&bad).unwrap_err());
        assert!(err.contains("(0, 2)"), "error must name the range: {err}");
    }

    #[test]
    fn unknown_metric_rejected() {
        let bad = MINIMAL.replace(
            "[output]",
            "[analysis]\nmetrics = [\"bogus\"]\n[output]",
        );
        let err = format!("{:#}", ExperimentConfig::parse(&bad).unwrap_err());
        assert!(err.contains("bogus"), "{err}");
    }

    #[test]
    fn non_unit_direction_rejected() {
        let bad = MINIMAL.replace("nu = [0.0, 1.0]", "nu = [1.0, 1.0]");
        let err = format!("{:#}", ExperimentConfig::parse(&bad).unwrap_err());
        assert!(err.contains("unit"), "{err}");
    }

    #[test]
    fn anisotropic_spacing_rejected() {
        let bad = MINIMAL.replace("n_cells = [32, 32]", "n_cells = [32, 16]");
        let err = format!("{:#}", ExperimentConfig::parse(&bad).unwrap_err());
        assert!(err.contains("equal per axis"), "{err}");
    }

    #[test]
    fn missing_file_rejected() {
        let bad = MINIMAL
            .replace("kind = \"half_plane\"", "kind = \"file\"")
            .replace("nu = [0.0, 1.0]", "path = \"does-not-exist.bin\"");
        let err = format!("{:#}", ExperimentConfig::parse(&bad).unwrap_err());
        assert!(err.contains("does not exist"), "{err}");
    }
}
