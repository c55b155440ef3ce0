//! Filter coefficients for scalar wavelets and multiwavelets.
//!
//! A [`Multifilter`] holds the low-pass recursion matrices `H_k` (and
//! optionally the high-pass `G_k`) of a multiplicity-`r` family, with the
//! dilation fixed to 2. The refinement equation is
//! `phi(x) = sqrt(2) * sum_k H_k phi(2x - k)`, with `k` running from the
//! left support endpoint `l`.
//!
//! Built-in families are compiled-in copies of the JSON filter records in
//! `filters/`. Balanced multiplicity-2 families (`bal-<scalar>`) are built
//! on demand from their scalar base.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximum discrete orthogonality residual accepted at load time.
pub const ORTHOGONALITY_TOLERANCE: f64 = 1e-8;

/// Prefix that requests the balanced multiplicity-2 version of a scalar family.
pub const BALANCED_PREFIX: &str = "bal-";

/// Dense square matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        Matrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    pub fn scalar(value: f64) -> Self {
        Matrix {
            dim: 1,
            data: vec![value],
        }
    }

    /// Builds a matrix from nested rows; every row must have `rows.len()` entries.
    pub fn from_rows(rows: &[Vec<f64>]) -> Option<Self> {
        let dim = rows.len();
        if dim == 0 || rows.iter().any(|row| row.len() != dim) {
            return None;
        }
        Some(Matrix {
            dim,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.dim).map(<[f64]>::to_vec).collect()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.dim + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.dim + col] = value;
    }

    pub fn entries(&self) -> &[f64] {
        &self.data
    }

    /// `self * other^T`
    pub fn mul_transpose(&self, other: &Matrix) -> Matrix {
        let n = self.dim;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for c in 0..n {
                    acc += self.get(i, c) * other.get(j, c);
                }
                out.set(i, j, acc);
            }
        }
        out
    }

    pub fn add_assign(&mut self, other: &Matrix) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0)
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.rows()).finish()
    }
}

/// On-disk filter record. Matrices are nested `[matrix][row][col]` lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterRecord {
    pub name: String,
    pub multiplicity: usize,
    pub support: [i32; 2],
    pub lowpass: Vec<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub highpass: Option<Vec<Vec<Vec<f64>>>>,
}

/// A validated, immutable (multi)wavelet filter bank with dilation 2.
#[derive(Debug, Clone, PartialEq)]
pub struct Multifilter {
    name: String,
    support: (i32, i32),
    lowpass: Vec<Matrix>,
    highpass: Option<Vec<Matrix>>,
}

impl Multifilter {
    pub const DILATION: i32 = 2;

    /// Validates and builds a filter from explicit matrices.
    pub fn new(
        name: impl Into<String>,
        support: (i32, i32),
        lowpass: Vec<Matrix>,
        highpass: Option<Vec<Matrix>>,
    ) -> Result<Self> {
        let filter = Multifilter {
            name: name.into(),
            support,
            lowpass,
            highpass,
        };
        filter.validate()?;
        Ok(filter)
    }

    pub fn from_record(record: &FilterRecord) -> Result<Self> {
        let malformed = |reason: String| Error::MalformedFilter {
            name: record.name.clone(),
            reason,
        };
        let convert = |mats: &[Vec<Vec<f64>>], which: &str| -> Result<Vec<Matrix>> {
            mats.iter()
                .enumerate()
                .map(|(k, rows)| {
                    let m = Matrix::from_rows(rows)
                        .ok_or_else(|| malformed(format!("{which} matrix {k} is not square")))?;
                    if m.dim() != record.multiplicity {
                        return Err(malformed(format!(
                            "{which} matrix {k} is {0}x{0}, expected {1}x{1}",
                            m.dim(),
                            record.multiplicity
                        )));
                    }
                    Ok(m)
                })
                .collect()
        };
        if record.multiplicity == 0 {
            return Err(malformed("multiplicity must be at least 1".into()));
        }
        let lowpass = convert(&record.lowpass, "lowpass")?;
        let highpass = record
            .highpass
            .as_deref()
            .map(|g| convert(g, "highpass"))
            .transpose()?;
        Self::new(
            record.name.clone(),
            (record.support[0], record.support[1]),
            lowpass,
            highpass,
        )
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let record: FilterRecord = serde_json::from_str(text)?;
        Self::from_record(&record)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_record(&self) -> FilterRecord {
        let nest = |mats: &[Matrix]| mats.iter().map(Matrix::rows).collect();
        FilterRecord {
            name: self.name.clone(),
            multiplicity: self.multiplicity(),
            support: [self.support.0, self.support.1],
            lowpass: nest(&self.lowpass),
            highpass: self.highpass.as_deref().map(nest),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_record()).expect("filter records always serialize")
    }

    fn validate(&self) -> Result<()> {
        let malformed = |reason: String| Error::MalformedFilter {
            name: self.name.clone(),
            reason,
        };
        if self.lowpass.is_empty() {
            return Err(malformed("no lowpass matrices".into()));
        }
        let r = self.lowpass[0].dim();
        if r == 0 {
            return Err(malformed("multiplicity must be at least 1".into()));
        }
        if self.lowpass.iter().any(|m| m.dim() != r) {
            return Err(malformed("lowpass matrices differ in size".into()));
        }
        let (l, u) = self.support;
        if u <= l {
            return Err(malformed(format!("empty support [{l}, {u}]")));
        }
        // Trailing matrices may only touch components whose support ends early
        // (DGHM), so the support can be shorter than the tap extent, never longer.
        let extent = self.lowpass.len() as i64 - 1;
        if i64::from(u - l) > extent {
            return Err(malformed(format!(
                "support [{l}, {u}] is longer than the {} lowpass matrices allow",
                self.lowpass.len()
            )));
        }
        if let Some(g) = &self.highpass {
            if g.len() != self.lowpass.len() || g.iter().any(|m| m.dim() != r) {
                return Err(malformed("highpass shape differs from lowpass".into()));
            }
        }
        let all_finite = self
            .lowpass
            .iter()
            .chain(self.highpass.iter().flatten())
            .all(|m| m.entries().iter().all(|v| v.is_finite()));
        if !all_finite {
            return Err(malformed("non-finite coefficient".into()));
        }

        let residual = self.orthogonality_residual();
        if !(residual <= ORTHOGONALITY_TOLERANCE) {
            return Err(Error::NotOrthogonal {
                name: self.name.clone(),
                residual,
                tolerance: ORTHOGONALITY_TOLERANCE,
            });
        }
        Ok(())
    }

    #[inline]
    pub fn name(&self) -> &str {
        &self.name
    }

    #[inline]
    pub fn multiplicity(&self) -> usize {
        self.lowpass[0].dim()
    }

    #[inline]
    pub fn dilation(&self) -> i32 {
        Self::DILATION
    }

    /// Support interval `[l, u]` shared by all multiscaling components.
    #[inline]
    pub fn support(&self) -> (i32, i32) {
        self.support
    }

    /// `H_k` for `k = l, l + 1, ...`.
    #[inline]
    pub fn lowpass(&self) -> &[Matrix] {
        &self.lowpass
    }

    #[inline]
    pub fn highpass(&self) -> Option<&[Matrix]> {
        self.highpass.as_deref()
    }

    /// `max_t || sum_k H_k H_{k+2t}^T - delta_{0t} I ||_inf`, extended with the
    /// `G G^T` and `H G^T` conditions when a highpass is present.
    pub fn orthogonality_residual(&self) -> f64 {
        let mut worst = shifted_gram_residual(&self.lowpass, &self.lowpass, true);
        if let Some(g) = &self.highpass {
            worst = worst
                .max(shifted_gram_residual(g, g, true))
                .max(shifted_gram_residual(&self.lowpass, g, false));
        }
        worst
    }

    pub fn lowpass_orthogonality_residual(&self) -> f64 {
        shifted_gram_residual(&self.lowpass, &self.lowpass, true)
    }
}

/// `max_t || sum_k A_k B_{k+2t}^T - (identity ? delta_{0t} I : 0) ||_inf`
fn shifted_gram_residual(a: &[Matrix], b: &[Matrix], identity: bool) -> f64 {
    let n = a.len() as i64;
    let r = a[0].dim();
    let max_shift = (n + 1) / 2;
    let mut worst: f64 = 0.0;
    for t in -max_shift..=max_shift {
        let mut acc = Matrix::zeros(r);
        for k in 0..n {
            let other = k + 2 * t;
            if (0..n).contains(&other) {
                acc.add_assign(&a[k as usize].mul_transpose(&b[other as usize]));
            }
        }
        let target = if identity && t == 0 {
            Matrix::identity(r)
        } else {
            Matrix::zeros(r)
        };
        let residual = acc.max_abs_diff(&target);
        worst = if residual.is_nan() {
            f64::NAN
        } else {
            worst.max(residual)
        };
        if worst.is_nan() {
            return worst;
        }
    }
    worst
}

/// Regroups an orthogonal scalar filter into the balanced multiplicity-2 filter
/// whose components are `sqrt(2) phi(2x)` and `sqrt(2) phi(2x - 1)`.
///
/// With scalar taps `h_n`, the balanced matrices are
/// `H_m = [[h_{2m}, h_{2m+1}], [h_{2m-2}, h_{2m-1}]]`; the highpass is regrouped
/// the same way.
pub fn balance_scalar_filter(base: &Multifilter) -> Result<Multifilter> {
    if base.multiplicity() != 1 {
        return Err(Error::NotScalar {
            name: base.name().to_string(),
            multiplicity: base.multiplicity(),
        });
    }
    let (l, u) = base.support();
    let first = l;
    let taps_len = base.lowpass().len() as i32;
    if first % 2 != 0 {
        return Err(Error::MalformedFilter {
            name: base.name().to_string(),
            reason: "balancing needs an even left support endpoint".into(),
        });
    }
    let regroup = |taps: &[Matrix]| -> Vec<Matrix> {
        let tap = |n: i32| -> f64 {
            let idx = n - first;
            if (0..taps_len).contains(&idx) {
                taps[idx as usize].get(0, 0)
            } else {
                0.0
            }
        };
        let last = first + taps_len - 1;
        let m_lo = first / 2;
        let m_hi = (last + 2).div_euclid(2);
        (m_lo..=m_hi)
            .map(|m| {
                let mut h = Matrix::zeros(2);
                h.set(0, 0, tap(2 * m));
                h.set(0, 1, tap(2 * m + 1));
                h.set(1, 0, tap(2 * m - 2));
                h.set(1, 1, tap(2 * m - 1));
                h
            })
            .collect()
    };
    let mut lowpass = regroup(base.lowpass());
    let mut highpass = base.highpass().map(regroup);
    // Drop all-zero trailing matrices so the tap extent matches the support.
    while lowpass.len() > 1
        && lowpass.last().is_some_and(Matrix::is_zero)
        && highpass
            .as_ref()
            .is_none_or(|g| g.last().is_some_and(Matrix::is_zero))
    {
        lowpass.pop();
        if let Some(g) = highpass.as_mut() {
            g.pop();
        }
    }
    let support = (l / 2, (u + 1).div_euclid(2) + (u + 1).rem_euclid(2));
    Multifilter::new(
        format!("{BALANCED_PREFIX}{}", base.name()),
        support,
        lowpass,
        highpass,
    )
}

macro_rules! builtin_records {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../filters/", $name, ".json")))),*]
    };
}

/// Built-in filter records, compiled in from `filters/*.json`.
const BUILTIN_RECORDS: &[(&str, &str)] = builtin_records![
    "haar", "db2", "db3", "db4", "db5", "db6", "db7", "db8", "db9", "db10", "sym4", "sym5", "sym6",
    "sym7", "sym8", "sym9", "sym10", "coif1", "coif2", "coif3", "coif4", "coif5", "dghm", "cl2",
    "cl3", "stt",
];

/// Scalar wavelet families swept by the benchmark.
pub const WAVELET_FAMILIES: &[&str] = &[
    "db2", "db3", "db4", "db5", "db6", "db7", "db8", "db9", "db10", "sym4", "sym5", "sym6", "sym7",
    "sym8", "sym9", "sym10", "coif1", "coif2", "coif3", "coif4", "coif5",
];

/// Multiwavelet families swept by the benchmark.
pub const MULTIWAVELET_FAMILIES: &[&str] = &[
    "bal-db2", "bal-db3", "bal-db4", "bal-db5", "bal-db6", "bal-db7", "bal-db8", "bal-db9",
    "bal-db10", "cl2", "cl3", "dghm", "stt",
];

/// Names of every compiled-in record (balanced variants not included).
pub fn builtin_names() -> impl Iterator<Item = &'static str> {
    BUILTIN_RECORDS.iter().map(|(name, _)| *name)
}

/// The JSON text of a compiled-in record.
pub fn builtin_record(name: &str) -> Option<&'static str> {
    BUILTIN_RECORDS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
}

/// Resolves a built-in family name, including `bal-<scalar>` balanced variants.
pub fn load_filter(name: &str) -> Result<Multifilter> {
    if let Some(text) = builtin_record(name) {
        return Multifilter::from_json(text);
    }
    if let Some(base) = name.strip_prefix(BALANCED_PREFIX) {
        if let Some(text) = builtin_record(base) {
            return balance_scalar_filter(&Multifilter::from_json(text)?);
        }
    }
    Err(Error::UnknownFamily(name.to_string()))
}

/// Built-ins plus any filter files loaded from a directory.
#[derive(Debug, Default, Clone)]
pub struct FilterRegistry {
    extra: Vec<Multifilter>,
}

impl FilterRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Loads every `*.json` file in `dir`. Files shadow built-ins of the same name.
    pub fn with_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let mut paths: Vec<_> = std::fs::read_dir(dir)?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
            .collect();
        paths.sort();
        let extra = paths
            .iter()
            .map(Multifilter::from_file)
            .collect::<Result<Vec<_>>>()?;
        Ok(FilterRegistry { extra })
    }

    pub fn insert(&mut self, filter: Multifilter) {
        self.extra.retain(|f| f.name() != filter.name());
        self.extra.push(filter);
    }

    pub fn get(&self, name: &str) -> Result<Multifilter> {
        if let Some(f) = self.extra.iter().find(|f| f.name() == name) {
            return Ok(f.clone());
        }
        if let Some(base) = name.strip_prefix(BALANCED_PREFIX) {
            if let Some(f) = self.extra.iter().find(|f| f.name() == base) {
                return balance_scalar_filter(f);
            }
        }
        load_filter(name)
    }

    /// Every resolvable name: built-ins, their balanced variants, and loaded files.
    pub fn names(&self) -> Vec<String> {
        let mut names: Vec<String> = builtin_names().map(str::to_string).collect();
        names.extend(
            WAVELET_FAMILIES
                .iter()
                .map(|n| format!("{BALANCED_PREFIX}{n}")),
        );
        names.push(format!("{BALANCED_PREFIX}haar"));
        for f in &self.extra {
            names.push(f.name().to_string());
        }
        names.sort();
        names.dedup();
        names
    }
}
