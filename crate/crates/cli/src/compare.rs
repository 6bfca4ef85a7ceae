//! Manifest-to-manifest comparison: fieldwise sup/L² differences (finer grids
//! are sampled at the coarse nodes) plus metric-by-metric summary deltas.

use crate::manifest::Manifest;
use anyhow::{anyhow, bail, Context, Result};
use onephase_core::fields::{io as field_io, ScalarField};
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Serialize)]
pub struct DiffReport {
    pub field_sup: f64,
    pub field_l2: f64,
    /// Metric name -> (a, b, b - a).
    pub metrics: BTreeMap<String, (f64, f64, f64)>,
    pub identical_artifacts: bool,
}

fn load_field(dir: &Path) -> Result<ScalarField> {
    field_io::read_binary(&dir.join("w.bin")).map_err(|e| anyhow!("{}: {e}", dir.display()))
}

/// Fieldwise comparison on the coarser of the two grids.
fn field_diff(a: &ScalarField, b: &ScalarField) -> Result<(f64, f64)> {
    let (coarse, fine) = if a.grid().h() >= b.grid().h() { (a, b) } else { (b, a) };
    let ga = coarse.grid();
    let gb = fine.grid();
    if ga.dim() != gb.dim() {
        bail!("incompatible grids: dimensions {} vs {}", ga.dim(), gb.dim());
    }
    for d in 0..ga.dim() {
        let (oa, ob) = (ga.origin()[d], gb.origin()[d]);
        let (ea, eb) = (ga.extent_max()[d], gb.extent_max()[d]);
        if (oa - ob).abs() > 1e-9 || (ea - eb).abs() > 1e-9 {
            bail!("incompatible grids: extents differ on axis {d}");
        }
    }
    let ratio = ga.h() / gb.h();
    if (ratio - ratio.round()).abs() > 1e-9 {
        bail!("incompatible grids: spacings {} and {} are not nested", ga.h(), gb.h());
    }
    let mut sup = 0.0f64;
    let mut sum2 = 0.0;
    let mut count = 0usize;
    for j in 0..ga.nodes()[1] {
        for i in 0..ga.nodes()[0] {
            let x = ga.node_pos(i, j);
            let d = (coarse.at(i, j) - fine.sample(x).map_err(|e| anyhow!("{e}"))?).abs();
            sup = sup.max(d);
            sum2 += d * d;
            count += 1;
        }
    }
    Ok((sup, (sum2 / count as f64).sqrt()))
}

fn numeric_entries(path: &Path) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    if let Ok(text) = std::fs::read_to_string(path) {
        if let Ok(serde_json::Value::Object(map)) = serde_json::from_str(&text) {
            for (k, v) in map {
                if let Some(x) = v.as_f64() {
                    out.insert(k, x);
                }
            }
        }
    }
    out
}

pub fn compare(dir_a: &Path, dir_b: &Path) -> Result<DiffReport> {
    let man_a = Manifest::load(dir_a).context("first manifest")?;
    let man_b = Manifest::load(dir_b).context("second manifest")?;
    let base_a = if dir_a.is_dir() { dir_a.to_path_buf() } else { dir_a.parent().unwrap().to_path_buf() };
    let base_b = if dir_b.is_dir() { dir_b.to_path_buf() } else { dir_b.parent().unwrap().to_path_buf() };

    let fa = load_field(&base_a)?;
    let fb = load_field(&base_b)?;
    let (field_sup, field_l2) = field_diff(&fa, &fb)?;

    let sa = numeric_entries(&base_a.join("summary.json"));
    let sb = numeric_entries(&base_b.join("summary.json"));
    let mut metrics = BTreeMap::new();
    for (k, va) in &sa {
        if let Some(vb) = sb.get(k) {
            metrics.insert(k.clone(), (*va, *vb, vb - va));
        }
    }

    let identical_artifacts = man_a.files.len() == man_b.files.len()
        && man_a
            .files
            .iter()
            .all(|f| man_b.file_hash(&f.name) == Some(f.sha256.as_str()));

    Ok(DiffReport {
        field_sup,
        field_l2,
        metrics,
        identical_artifacts,
    })
}

impl DiffReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "field_sup_diff={}", self.field_sup);
        let _ = writeln!(s, "field_l2_diff={}", self.field_l2);
        let _ = writeln!(s, "identical_artifacts={}", self.identical_artifacts);
        for (k, (a, b, d)) in &self.metrics {
            let _ = writeln!(s, "metric.{k}: a={a} b={b} delta={d}");
        }
        s
    }
}
