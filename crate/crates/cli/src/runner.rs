//! Executes one experiment: solve, analyze, persist. Exit codes distinguish
//! config errors (2), solver non-convergence (3, artifacts still written) and
//! analysis precondition failures (4).

use crate::config::{
    AnalysisBlock, BoundaryKind, ExperimentConfig, GaugeSpec, ProblemKind,
};
use crate::manifest::{hash_file, sha256_hex, FileEntry, Manifest};
use anyhow::{anyhow, Context, Result};
use onephase_core::error::CoreError;
use onephase_core::fb_analysis::{
    eta_integral, extract_free_boundary, flatness_report, gradient_constraint_check,
    harnack_decay, hausdorff_estimate, linear_growth_check, nondegeneracy_constant,
    AnalysisSummary, FreeBoundary,
};
use onephase_core::fields::{io as field_io, Grid, ScalarField};
use onephase_core::geometry::{Direction, Gauge, StarDomain};
use onephase_core::potentials::{exact_1d_profile, u_to_w, HFunction};
use onephase_core::solvers::{
    perron_envelope, solve_alt_phillips, solve_degenerate, solve_obstacle, SeedParams, SolveReport,
};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

pub struct RunOutcome {
    pub exit_code: i32,
    pub out_dir: PathBuf,
}

/// Radial γ=1 solution with free boundary radius `a` (u variable).
pub fn radial_obstacle_u(r: f64, a: f64) -> f64 {
    if r <= a {
        0.0
    } else {
        (r * r - a * a) / 4.0 - (a * a / 2.0) * (r / a).ln()
    }
}

/// Boundary data in the variable the scheme solves for.
fn boundary_closure(
    cfg: &ExperimentConfig,
    hfn: Option<&HFunction>,
) -> Result<Box<dyn Fn([f64; 2]) -> f64 + Sync>> {
    let b = cfg.problem.boundary.clone();
    let variational = matches!(
        cfg.problem.kind,
        ProblemKind::Obstacle | ProblemKind::AltPhillips
    );
    let gamma = cfg.problem.gamma.unwrap_or(1.0);
    match b.kind {
        BoundaryKind::Constant => {
            let v = b.value.unwrap_or(0.0);
            Ok(Box::new(move |_| v))
        }
        BoundaryKind::HalfPlane => {
            let nu = b.nu.clone().unwrap();
            let off = b.offset.unwrap_or(0.0);
            let nu2 = [nu[0], if nu.len() > 1 { nu[1] } else { 0.0 }];
            if variational {
                let profile = exact_1d_profile(gamma, off).map_err(|e| anyhow!("{e}"))?;
                Ok(Box::new(move |x: [f64; 2]| {
                    profile.u(x[0] * nu2[0] + x[1] * nu2[1])
                }))
            } else {
                let dom = hfn
                    .ok_or_else(|| anyhow!("half-plane data needs the constraint set"))?
                    .domain()
                    .clone();
                let dir = Direction::new(&nu[..cfg.grid.dim]).map_err(|e| anyhow!("{e}"))?;
                let f = dom.f_of_nu(&dir).map_err(|e| anyhow!("{e}"))?;
                Ok(Box::new(move |x: [f64; 2]| {
                    f * (x[0] * nu2[0] + x[1] * nu2[1] - off).max(0.0)
                }))
            }
        }
        BoundaryKind::RadialObstacle => {
            let a = b.a.unwrap();
            if variational {
                Ok(Box::new(move |x: [f64; 2]| {
                    radial_obstacle_u((x[0] * x[0] + x[1] * x[1]).sqrt(), a)
                }))
            } else {
                Ok(Box::new(move |x: [f64; 2]| {
                    radial_obstacle_u((x[0] * x[0] + x[1] * x[1]).sqrt(), a).sqrt()
                }))
            }
        }
        BoundaryKind::File => {
            let field = field_io::read_binary(b.path.as_ref().unwrap())
                .map_err(|e| anyhow!("boundary file: {e}"))?;
            Ok(Box::new(move |x: [f64; 2]| {
                field.sample(x).map(|v| v.max(0.0)).unwrap_or(0.0)
            }))
        }
    }
}

/// Constraint set used by the analyses (cone slopes, gauge).
fn analysis_domain(cfg: &ExperimentConfig, hfn: Option<&HFunction>) -> Result<StarDomain> {
    if let Some(h) = hfn {
        return Ok(h.domain().clone());
    }
    let gamma = cfg.problem.gamma.unwrap_or(1.0);
    let h = HFunction::quadratic(gamma, cfg.grid.dim).map_err(|e| anyhow!("{e}"))?;
    Ok(h.domain().clone())
}

struct Artifacts {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Artifacts {
    fn add(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.files.push(p.clone());
        p
    }
}

pub fn run(cfg: &ExperimentConfig, config_bytes: &[u8], out_override: Option<PathBuf>) -> Result<RunOutcome> {
    let out_dir = out_override.unwrap_or_else(|| cfg.output.dir.clone());
    if out_dir.join("manifest.json").exists() {
        return Err(anyhow!(
            "run directory {} already holds a manifest; runs are immutable, use a fresh directory",
            out_dir.display()
        ));
    }
    std::fs::create_dir_all(&out_dir)
        .with_context(|| format!("cannot create {}", out_dir.display()))?;

    let total_clock = Instant::now();
    let grid = cfg.build_grid()?;
    let scfg = cfg.solver_config(&grid);
    let needs_h = matches!(cfg.problem.kind, ProblemKind::Degenerate | ProblemKind::Perron);
    let hfn = if needs_h { Some(cfg.build_hfunction()?) } else { None };
    let data = boundary_closure(cfg, hfn.as_ref())?;

    // solve
    let solve_clock = Instant::now();
    let (u_field, w_field, report): (Option<ScalarField>, ScalarField, SolveReport) =
        match cfg.problem.kind {
            ProblemKind::Obstacle => {
                let (u, rep) = solve_obstacle(&grid, &*data, &scfg).map_err(|e| anyhow!("{e}"))?;
                let w = u_to_w(&u, 1.0).map_err(|e| anyhow!("{e}"))?;
                (Some(u), w, rep)
            }
            ProblemKind::AltPhillips => {
                let gamma = cfg.problem.gamma.unwrap();
                let (u, rep) =
                    solve_alt_phillips(&grid, &*data, gamma, &scfg).map_err(|e| anyhow!("{e}"))?;
                let w = u_to_w(&u, gamma).map_err(|e| anyhow!("{e}"))?;
                (Some(u), w, rep)
            }
            ProblemKind::Degenerate => {
                let (w, rep) = solve_degenerate(&grid, &*data, hfn.as_ref().unwrap(), &scfg)
                    .map_err(|e| anyhow!("{e}"))?;
                (None, w, rep)
            }
            ProblemKind::Perron => {
                let params = SeedParams {
                    c: cfg.solver.seed_c,
                    alpha: cfg.solver.seed_alpha,
                };
                let (w, rep) =
                    perron_envelope(&grid, &*data, hfn.as_ref().unwrap(), &scfg, &params)
                        .map_err(|e| anyhow!("{e}"))?;
                (None, w, rep)
            }
        };
    let solve_secs = solve_clock.elapsed().as_secs_f64();

    // artifacts
    let mut art = Artifacts {
        dir: out_dir.clone(),
        files: Vec::new(),
    };
    let formats = &cfg.output.formats;
    let want = |f: &str| formats.iter().any(|s| s == f);
    if want("binary") {
        field_io::write_binary(&w_field, &art.add("w.bin")).map_err(|e| anyhow!("{e}"))?;
        art.files.push(out_dir.join("w.bin.meta"));
        if let Some(u) = &u_field {
            field_io::write_binary(u, &art.add("u.bin")).map_err(|e| anyhow!("{e}"))?;
            art.files.push(out_dir.join("u.bin.meta"));
        }
    }
    if want("vtk") {
        field_io::write_structured_points(&w_field, &art.add("w.vtk"), "w")
            .map_err(|e| anyhow!("{e}"))?;
    }
    report.write_text(&art.add("solve_report.txt")).map_err(|e| anyhow!("{e}"))?;
    if !report.energy_trace.is_empty() {
        report.write_energy_csv(&art.add("energy.csv")).map_err(|e| anyhow!("{e}"))?;
    }
    if let Some((set_a, set_b)) = &report.positivity_oscillation {
        let mut text = String::new();
        let _ = writeln!(text, "# oscillating positivity sets (node indices)");
        let _ = writeln!(text, "a {}", set_a.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" "));
        let _ = writeln!(text, "b {}", set_b.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" "));
        std::fs::write(art.add("positivity_oscillation.txt"), text)?;
    }

    let mut exit_code = 0;
    let mut note = None;
    let run_analysis = report.converged || cfg.solver.allow_unconverged;
    if !report.converged {
        exit_code = 3;
        note = Some(format!(
            "solver did not converge (residual {})",
            report.residual_sup
        ));
    }

    let analysis_clock = Instant::now();
    if run_analysis && !cfg.analysis.metrics.is_empty() {
        let dom = analysis_domain(cfg, hfn.as_ref())?;
        match analyze(cfg, &grid, &w_field, &dom, &mut art) {
            Ok(()) => {}
            Err(e) => {
                // analysis precondition failures are their own exit class
                exit_code = 4;
                note = Some(format!("analysis precondition failed: {e:#}"));
            }
        }
    }
    let analysis_secs = analysis_clock.elapsed().as_secs_f64();

    // manifest (always last; the run directory is immutable afterwards)
    let mut wall = BTreeMap::new();
    wall.insert("solve_secs".to_string(), solve_secs);
    wall.insert("analysis_secs".to_string(), analysis_secs);
    wall.insert("total_secs".to_string(), total_clock.elapsed().as_secs_f64());
    let mut versions = BTreeMap::new();
    versions.insert("onephase-core".to_string(), onephase_core::VERSION.to_string());
    versions.insert("onephase-cli".to_string(), env!("CARGO_PKG_VERSION").to_string());
    let mut files: Vec<FileEntry> = art
        .files
        .iter()
        .filter(|p| p.exists())
        .map(|p| hash_file(p))
        .collect::<Result<_>>()?;
    files.sort_by(|a, b| a.name.cmp(&b.name));
    let manifest = Manifest {
        config_hash: format!("sha256:{}", sha256_hex(config_bytes)),
        versions,
        seed: cfg.seed,
        converged: report.converged,
        unconverged_analysis: run_analysis && !report.converged,
        exit_code,
        note,
        wall,
        files,
    };
    manifest.write(&out_dir)?;
    Ok(RunOutcome { exit_code, out_dir })
}

fn core_err(e: CoreError) -> anyhow::Error {
    anyhow!("{e}")
}

/// Boundary point nearest the configured center (extraction order breaks ties).
fn anchor_point(fb: &FreeBoundary, center: [f64; 2]) -> Option<[f64; 2]> {
    let mut best: Option<([f64; 2], f64)> = None;
    for p in &fb.points {
        let d = ((p.pos[0] - center[0]).powi(2) + (p.pos[1] - center[1]).powi(2)).sqrt();
        if best.map(|(_, bd)| d < bd).unwrap_or(true) {
            best = Some((p.pos, d));
        }
    }
    best.map(|(p, _)| p)
}

fn analyze(
    cfg: &ExperimentConfig,
    grid: &Grid,
    w: &ScalarField,
    dom: &StarDomain,
    art: &mut Artifacts,
) -> Result<()> {
    let a: &AnalysisBlock = &cfg.analysis;
    let h = grid.h();
    let has = |m: &str| a.metrics.iter().any(|s| s == m);
    let mut summary = AnalysisSummary::default();

    let fb = extract_free_boundary(w, 0.5 * h);
    summary.fb_points = fb.len();
    if has("free_boundary") {
        fb.write_points(&art.add("fb_points.txt")).map_err(core_err)?;
    }
    let anchor = anchor_point(&fb, a.center);

    let gauge = match a.gauge {
        GaugeSpec::ConvexHull => Gauge::convexified(dom),
        GaugeSpec::RadialExcess => Gauge::radial(dom),
    };
    summary.gauge_mode = Some(
        match a.gauge {
            GaugeSpec::ConvexHull => "convex-hull",
            GaugeSpec::RadialExcess => "radial-excess",
        }
        .to_string(),
    );

    let mut best_dir: Option<(f64, Direction)> = None;
    if has("flatness") {
        let x0 = anchor.ok_or_else(|| anyhow!("flatness needs a nonempty free boundary"))?;
        let rep = flatness_report(w, dom, x0, &a.scales).map_err(core_err)?;
        std::fs::write(art.add("flatness.csv"), rep.to_csv())?;
        if let Some(row) = rep.rows.last() {
            summary.flatness_finest = Some(row.eps);
        }
        if let Some(row) = rep.rows.first() {
            best_dir = Some((row.slope, Direction::from_angle(row.nu_angle)));
        }
    }
    if has("nondegeneracy") {
        let x0 = anchor.ok_or_else(|| anyhow!("nondegeneracy needs a nonempty free boundary"))?;
        let rep = nondegeneracy_constant(w, x0, &a.scales).map_err(core_err)?;
        let mut csv = String::from("r,kappa_r\n");
        for (r, k) in &rep.per_radius {
            let _ = writeln!(csv, "{r},{k}");
        }
        std::fs::write(art.add("nondegeneracy.csv"), csv)?;
        summary.kappa = Some(rep.kappa);
    }
    if has("growth") {
        summary.c_growth = Some(linear_growth_check(w, &fb).map_err(core_err)?);
    }
    if has("gradient_constraint") {
        let rep = gradient_constraint_check(w, &fb, &gauge, a.band).map_err(core_err)?;
        summary.sup_eta = Some(rep.sup_eta);
        summary.xi_fit = rep.xi_fit;
    }
    if has("eta_integral") {
        let rep = eta_integral(w, &gauge, grid.h() / 2.0).map_err(core_err)?;
        summary.eta_integral = Some(rep.value);
        summary.eta_integral_half_floor = Some(rep.value_half_floor);
    }
    if has("hausdorff") {
        let levels: Vec<f64> = a.levels.iter().map(|l| l * h).collect();
        let rep = hausdorff_estimate(w, &fb, &levels, None).map_err(core_err)?;
        std::fs::write(art.add("hausdorff.csv"), rep.to_csv())?;
    }
    if has("harnack") {
        let x0 = anchor.ok_or_else(|| anyhow!("harnack needs a nonempty free boundary"))?;
        let (f_nu, nu) = match best_dir {
            Some((f, d)) => (f, d),
            None => {
                let r0 = a.scales.iter().cloned().fold(f64::MIN, f64::max);
                let (_, d) = onephase_core::fb_analysis::flatness(w, dom, x0, r0).map_err(core_err)?;
                (dom.f_of_nu(&d).map_err(core_err)?, d)
            }
        };
        let r0 = a.scales.iter().cloned().fold(f64::MIN, f64::max);
        let rep = harnack_decay(w, x0, &nu, f_nu, r0, a.harnack_eta).map_err(core_err)?;
        std::fs::write(art.add("harnack.csv"), rep.to_csv())?;
        summary.holder_exponent_est = rep.holder_exponent_est;
    }
    summary.write_json(&art.add("summary.json")).map_err(core_err)?;
    Ok(())
}
