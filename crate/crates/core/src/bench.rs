//! Benchmark sweep: densities x families x resolution levels, scored by ISE.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{BasisSpec, RefinableFunctions};
use crate::cascade::{cascade, CascadeParams};
use crate::densities::{self, MixtureDensity};
use crate::error::{Error, Result};
use crate::estimator::{
    estimate_coefficients, normalize_values, DensityEstimate, NormalizationMethod,
};
use crate::metrics::{ise, QuadratureGrid, DEFAULT_GRID_POINTS};
use crate::multifilter::{FilterRegistry, MULTIWAVELET_FAMILIES, WAVELET_FAMILIES};

pub const DEFAULT_SAMPLE_SIZE: usize = 10_000;

/// Relative slack allowed when checking that normalization did not raise ISE.
const ISE_SLACK: f64 = 1e-12;

/// How per-cell sampling seeds are derived from the master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Seeding {
    /// One sample per density, shared by every family and level.
    #[default]
    Shared,
    /// A fresh sample per (density, family, level).
    PerCell,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormalizeMode {
    #[default]
    ShiftClip,
    ClipRescale,
}

impl From<NormalizeMode> for NormalizationMethod {
    fn from(mode: NormalizeMode) -> Self {
        match mode {
            NormalizeMode::ShiftClip => NormalizationMethod::ShiftClip,
            NormalizeMode::ClipRescale => NormalizationMethod::ClipRescale,
        }
    }
}

fn default_sample_size() -> usize {
    DEFAULT_SAMPLE_SIZE
}

fn default_grid_size() -> usize {
    DEFAULT_GRID_POINTS
}

fn default_true() -> bool {
    true
}

/// Sweep configuration, read from JSON.
///
/// `families` accepts the aliases `"wavelets"`, `"multiwavelets"` and `"all"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub densities: Vec<String>,
    pub families: Vec<String>,
    /// Inclusive `[j_lo, j_hi]`.
    pub resolutions: [i32; 2],
    #[serde(default = "default_sample_size")]
    pub sample_size: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_grid_size")]
    pub grid_size: usize,
    #[serde(default = "default_true")]
    pub normalize: bool,
    #[serde(default)]
    pub normalization: NormalizeMode,
    #[serde(default)]
    pub seeding: Seeding,
    /// Cascade depth override.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<String>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig = serde_json::from_str(text)?;
        config.check_shape()?;
        Ok(config)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    fn check_shape(&self) -> Result<()> {
        let [lo, hi] = self.resolutions;
        if lo > hi {
            return Err(Error::Config(format!(
                "resolution range [{lo}, {hi}] is empty"
            )));
        }
        if !(-30..=30).contains(&lo) || !(-30..=30).contains(&hi) {
            return Err(Error::Config(format!(
                "resolution range [{lo}, {hi}] is out of bounds"
            )));
        }
        if self.sample_size == 0 {
            return Err(Error::Config("sample_size must be at least 1".into()));
        }
        if self.grid_size < 2 {
            return Err(Error::Config("grid_size must be at least 2".into()));
        }
        if self.densities.is_empty() || self.families.is_empty() {
            return Err(Error::Config(
                "densities and families must be nonempty".into(),
            ));
        }
        Ok(())
    }

    /// Family names with aliases expanded, duplicates removed, order kept.
    pub fn expanded_families(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        let mut push = |name: &str| {
            if !out.iter().any(|n| n == name) {
                out.push(name.to_string());
            }
        };
        for name in &self.families {
            match name.as_str() {
                "wavelets" => WAVELET_FAMILIES.iter().for_each(|n| push(n)),
                "multiwavelets" => MULTIWAVELET_FAMILIES.iter().for_each(|n| push(n)),
                "all" => WAVELET_FAMILIES
                    .iter()
                    .chain(MULTIWAVELET_FAMILIES)
                    .for_each(|n| push(n)),
                other => push(other),
            }
        }
        out
    }

    fn levels(&self) -> impl Iterator<Item = i32> {
        self.resolutions[0]..=self.resolutions[1]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub density: String,
    pub family: String,
    pub multiplicity: usize,
    pub level: i32,
    pub seed: u64,
    pub sample_size: usize,
    pub outcome: std::result::Result<CellScore, String>,
}

impl ExperimentResult {
    pub fn score(&self) -> Option<&CellScore> {
        self.outcome.as_ref().ok()
    }

    pub fn is_wavelet(&self) -> bool {
        self.multiplicity == 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellScore {
    /// ISE of the reported estimate (normalized when requested).
    pub ise: f64,
    pub raw_ise: f64,
    pub coefficient_count: usize,
    /// Scalar coefficients actually stored by the estimate.
    pub stored_coefficients: usize,
    pub raw_mass: f64,
    pub negative_mass: f64,
    pub normalized: Option<NormalizedScore>,
    pub truncation_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalizedScore {
    pub mass: f64,
    pub min_value: f64,
    pub adjustment: f64,
}

impl CellScore {
    /// True when normalization was skipped or did not raise ISE.
    pub fn normalization_kept_ise(&self) -> bool {
        self.normalized.is_none() || self.ise <= self.raw_ise * (1.0 + ISE_SLACK) + f64::EPSILON
    }
}

/// FNV-1a over a sequence of byte fields with a separator byte.
fn stable_hash(fields: &[&[u8]]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for field in fields {
        for &b in field.iter().chain(std::iter::once(&0xffu8)) {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

/// Seed of the sample used by one cell.
pub fn cell_seed(config: &ExperimentConfig, density: &str, family: &str, level: i32) -> u64 {
    let master = config.seed.to_le_bytes();
    match config.seeding {
        Seeding::Shared => stable_hash(&[&master, density.as_bytes()]),
        Seeding::PerCell => stable_hash(&[
            &master,
            density.as_bytes(),
            family.as_bytes(),
            &level.to_le_bytes(),
        ]),
    }
}

/// Resolves every name in the config, failing fast on unknown names.
pub fn resolve(
    config: &ExperimentConfig,
    registry: &FilterRegistry,
) -> Result<(Vec<MixtureDensity>, Vec<String>)> {
    config.check_shape()?;
    let densities = config
        .densities
        .iter()
        .map(|n| densities::zoo(n))
        .collect::<Result<Vec<_>>>()?;
    let families = config.expanded_families();
    for family in &families {
        registry.get(family)?;
    }
    Ok((densities, families))
}

struct Prepared {
    density: MixtureDensity,
    grid: QuadratureGrid,
    truth: Vec<f64>,
}

/// Runs every (density, family, level) cell. Cell failures are recorded in
/// the result rows; only configuration problems return an error.
pub fn run_benchmark(
    config: &ExperimentConfig,
    registry: &FilterRegistry,
) -> Result<Vec<ExperimentResult>> {
    let (densities, families) = resolve(config, registry)?;
    let params = CascadeParams {
        depth: config.depth.unwrap_or(CascadeParams::default().depth),
        ..Default::default()
    };

    let functions: Vec<std::result::Result<Arc<RefinableFunctions>, String>> = families
        .par_iter()
        .map(|name| {
            let filter = registry.get(name).map_err(|e| e.to_string())?;
            let table = cascade(Arc::new(filter), params).map_err(|e| e.to_string())?;
            Ok(Arc::new(RefinableFunctions::new(Arc::new(table))))
        })
        .collect();

    let prepared = densities
        .into_iter()
        .map(|density| {
            let grid = QuadratureGrid::new(density.domain.0, density.domain.1, config.grid_size)?;
            // Samples are domain-truncated, so the law being estimated is the
            // conditional density. It has unit mass on the grid, which is what
            // makes the normalization projection non-expansive against it.
            let truth = density.conditional_pdf_on(grid.points());
            Ok(Prepared {
                density,
                grid,
                truth,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut cells = Vec::new();
    for (di, p) in prepared.iter().enumerate() {
        for (fi, family) in families.iter().enumerate() {
            for level in config.levels() {
                let seed = cell_seed(config, &p.density.name, family, level);
                cells.push((di, fi, level, seed));
            }
        }
    }

    // Draw each distinct (density, seed) sample once.
    let mut keys: Vec<(usize, u64)> = cells.iter().map(|&(d, _, _, s)| (d, s)).collect();
    keys.sort_unstable();
    keys.dedup();
    let samples: BTreeMap<(usize, u64), Arc<densities::Sample>> = keys
        .par_iter()
        .map(|&(d, s)| {
            let sample = prepared[d].density.sample_detailed(config.sample_size, s);
            ((d, s), Arc::new(sample))
        })
        .collect();

    let mut results: Vec<ExperimentResult> = cells
        .par_iter()
        .map(|&(di, fi, level, seed)| {
            let p = &prepared[di];
            let family = &families[fi];
            let (multiplicity, outcome) = match &functions[fi] {
                Ok(f) => (
                    f.multiplicity(),
                    score_cell(config, p, f, level, &samples[&(di, seed)]),
                ),
                Err(msg) => (
                    registry.get(family).map(|f| f.multiplicity()).unwrap_or(0),
                    Err(msg.clone()),
                ),
            };
            ExperimentResult {
                density: p.density.name.clone(),
                family: family.clone(),
                multiplicity,
                level,
                seed,
                sample_size: config.sample_size,
                outcome,
            }
        })
        .collect();

    results.sort_by(|a, b| (&a.density, &a.family, a.level).cmp(&(&b.density, &b.family, b.level)));
    Ok(results)
}

fn score_cell(
    config: &ExperimentConfig,
    p: &Prepared,
    functions: &Arc<RefinableFunctions>,
    level: i32,
    sample: &densities::Sample,
) -> std::result::Result<CellScore, String> {
    let run = || -> Result<CellScore> {
        let spec = BasisSpec::new(functions.clone(), level, p.density.domain)?;
        let coefficients = estimate_coefficients(&spec, &sample.values)?;
        let stored = coefficients.scaling_count();
        let coefficient_count = spec.coefficient_count();
        let estimate = DensityEstimate::new(spec, coefficients)?;
        let raw = estimate.reconstruct(p.grid.points());
        let raw_ise = ise(&raw, &p.truth, &p.grid)?;
        let raw_mass = p.grid.integrate(&raw)?;
        let negative: Vec<f64> = raw.iter().map(|v| (-v).max(0.0)).collect();
        let negative_mass = p.grid.integrate(&negative)?;
        let (reported, normalized) = if config.normalize {
            let n = normalize_values(&raw, &p.grid, config.normalization.into())?;
            let min_value = n.values.iter().copied().fold(f64::INFINITY, f64::min);
            (
                ise(&n.values, &p.truth, &p.grid)?,
                Some(NormalizedScore {
                    mass: n.mass,
                    min_value,
                    adjustment: n.adjustment,
                }),
            )
        } else {
            (raw_ise, None)
        };
        if !reported.is_finite() {
            return Err(Error::DegenerateEstimate);
        }
        Ok(CellScore {
            ise: reported,
            raw_ise,
            coefficient_count,
            stored_coefficients: stored,
            raw_mass,
            negative_mass,
            normalized,
            truncation_fraction: sample.truncation_fraction,
        })
    };
    run().map_err(|e| e.to_string())
}

/// Best WDE and MWDE rows for one density.
#[derive(Debug, Clone, PartialEq)]
pub struct DensitySummary<'a> {
    pub density: String,
    pub wde: Option<&'a ExperimentResult>,
    pub mwde: Option<&'a ExperimentResult>,
}

fn better(a: &ExperimentResult, b: &ExperimentResult) -> bool {
    let (sa, sb) = (a.score().unwrap(), b.score().unwrap());
    let key_a = (a.level, sa.coefficient_count, &a.family);
    let key_b = (b.level, sb.coefficient_count, &b.family);
    match sa.ise.total_cmp(&sb.ise) {
        std::cmp::Ordering::Less => true,
        std::cmp::Ordering::Greater => false,
        std::cmp::Ordering::Equal => key_a < key_b,
    }
}

/// Minimum-ISE row per density and class. Ties go to the coarser level,
/// then fewer coefficients, then family name. Failed cells are skipped.
pub fn best_per_density(results: &[ExperimentResult]) -> Vec<DensitySummary<'_>> {
    let mut out: Vec<DensitySummary<'_>> = Vec::new();
    for row in results {
        let idx = match out.iter().position(|s| s.density == row.density) {
            Some(i) => i,
            None => {
                out.push(DensitySummary {
                    density: row.density.clone(),
                    wde: None,
                    mwde: None,
                });
                out.len() - 1
            }
        };
        if row.score().is_none() {
            continue;
        }
        let slot = if row.is_wavelet() {
            &mut out[idx].wde
        } else {
            &mut out[idx].mwde
        };
        match slot {
            Some(current) if !better(row, current) => {}
            _ => *slot = Some(row),
        }
    }
    out
}

/// Formats `value` scaled by 1e3 with three significant figures.
pub fn format_ise_e3(value: f64) -> String {
    let scaled = value * 1e3;
    if scaled == 0.0 || !scaled.is_finite() {
        return format!("{scaled}");
    }
    let magnitude = scaled.abs().log10().floor() as i32;
    let decimals = (2 - magnitude).max(0) as usize;
    let rounded = format!("{scaled:.decimals$}");
    // Rounding can carry into a new digit, e.g. 9.995 -> 10.00.
    let reparsed: f64 = rounded.parse().unwrap_or(scaled);
    let magnitude2 = reparsed.abs().log10().floor() as i32;
    if magnitude2 != magnitude {
        let decimals = (2 - magnitude2).max(0) as usize;
        return format!("{reparsed:.decimals$}");
    }
    rounded
}

pub const RESULTS_HEADER: &str = "density,family,multiplicity,j,ise_e3,raw_ise_e3,coefficients,seed,n,raw_mass,negative_mass,mass,status";

pub fn write_results<W: Write>(results: &[ExperimentResult], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{RESULTS_HEADER}")?;
    for r in results {
        write!(
            out,
            "{},{},{},{},",
            r.density, r.family, r.multiplicity, r.level
        )?;
        match &r.outcome {
            Ok(s) => writeln!(
                out,
                "{},{},{},{},{},{:.6},{:.6},{},ok",
                format_ise_e3(s.ise),
                format_ise_e3(s.raw_ise),
                s.coefficient_count,
                r.seed,
                r.sample_size,
                s.raw_mass,
                s.negative_mass,
                s.normalized
                    .as_ref()
                    .map(|n| format!("{:.9}", n.mass))
                    .unwrap_or_default(),
            )?,
            Err(msg) => writeln!(
                out,
                ",,,{},{},,,,error: {}",
                r.seed,
                r.sample_size,
                msg.replace([',', '\n'], ";")
            )?,
        }
    }
    Ok(())
}

pub const SUMMARY_HEADER: &str = "density,class,family,j,ise_e3,coefficients";

pub fn write_summary<W: Write>(summary: &[DensitySummary<'_>], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{SUMMARY_HEADER}")?;
    for s in summary {
        for (class, row) in [("MWDE", s.mwde), ("WDE", s.wde)] {
            match row.and_then(|r| r.score().map(|sc| (r, sc))) {
                Some((r, sc)) => writeln!(
                    out,
                    "{},{class},{},{},{},{}",
                    s.density,
                    r.family,
                    r.level,
                    format_ise_e3(sc.ise),
                    sc.coefficient_count
                )?,
                None => writeln!(out, "{},{class},,,,", s.density)?,
            }
        }
    }
    Ok(())
}
