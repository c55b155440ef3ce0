//! Linear (multi)wavelet density estimation.
//!
//! Coefficients are sample means of basis evaluations,
//! `alpha_{j0,k} = (1/N) sum_i phi_{j0,k}(X_i)` (vector-valued for `r > 1`),
//! and optionally `beta_{j,k}` from the multiwavelets for `j0 <= j <= J`. The
//! estimate is `p(x) = sum_k alpha_k . phi_{j0,k}(x) + sum_j sum_k beta_{j,k} . psi_{j,k}(x)`.
//!
//! Normalization works on a grid representation and never touches the raw
//! coefficients, so the estimator stays linear in the sample.

use crate::basis::{BasisSpec, Generator};
use crate::error::{Error, Result};
use crate::metrics::QuadratureGrid;

/// Mass tolerance a normalized estimate must meet.
pub const MASS_TOLERANCE: f64 = 1e-6;
const MAX_NORMALIZATION_PASSES: usize = 50;

/// Per-translate coefficient vectors at one level.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelCoefficients {
    pub level: i32,
    /// Translate of `values[0]`.
    pub k_min: i64,
    /// One `r`-vector per translate `k_min, k_min + 1, ...`.
    pub values: Vec<Vec<f64>>,
}

impl LevelCoefficients {
    pub fn get(&self, k: i64) -> Option<&[f64]> {
        let idx = usize::try_from(k - self.k_min).ok()?;
        self.values.get(idx).map(Vec::as_slice)
    }

    pub fn k_max(&self) -> i64 {
        self.k_min + self.values.len() as i64 - 1
    }

    /// Total scalar coefficients stored.
    pub fn len(&self) -> usize {
        self.values.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn zeros(spec: &BasisSpec) -> Self {
        let (k_min, _) = spec.translates();
        LevelCoefficients {
            level: spec.level(),
            k_min,
            values: vec![vec![0.0; spec.multiplicity()]; spec.translate_count()],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSet {
    pub alpha: LevelCoefficients,
    /// Detail coefficients for levels `j0 ..= J`, in increasing level order.
    pub beta: Vec<LevelCoefficients>,
    pub sample_size: usize,
}

impl CoefficientSet {
    /// Number of scaling coefficients, `r * (k_max - k_min + 1)`.
    pub fn scaling_count(&self) -> usize {
        self.alpha.len()
    }

    pub fn total_count(&self) -> usize {
        self.alpha.len() + self.beta.iter().map(LevelCoefficients::len).sum::<usize>()
    }
}

fn check_samples(spec: &BasisSpec, samples: &[f64]) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let (a, b) = spec.domain();
    if let Some(&value) = samples.iter().find(|&&x| !(x >= a && x <= b)) {
        return Err(Error::SampleOutsideDomain { value, a, b });
    }
    Ok(())
}

fn sample_mean(spec: &BasisSpec, generator: Generator, samples: &[f64]) -> LevelCoefficients {
    let mut out = LevelCoefficients::zeros(spec);
    let mut scratch = vec![0.0; spec.multiplicity()];
    for &x in samples {
        let (lo, hi) = spec.translates_at(x);
        for k in lo..=hi {
            spec.evaluate_into(generator, k, x, &mut scratch);
            let slot = &mut out.values[(k - out.k_min) as usize];
            for (acc, v) in slot.iter_mut().zip(&scratch) {
                *acc += v;
            }
        }
    }
    let n = samples.len() as f64;
    for slot in &mut out.values {
        for v in slot.iter_mut() {
            *v /= n;
        }
    }
    out
}

/// Scaling coefficients `alpha_{j0,k}` as exact sample means.
pub fn estimate_coefficients(spec: &BasisSpec, samples: &[f64]) -> Result<CoefficientSet> {
    check_samples(spec, samples)?;
    Ok(CoefficientSet {
        alpha: sample_mean(spec, Generator::Scaling, samples),
        beta: Vec::new(),
        sample_size: samples.len(),
    })
}

/// Scaling coefficients at `spec.level()` plus detail coefficients for every
/// level up to and including `finest`.
pub fn estimate_with_details(
    spec: &BasisSpec,
    samples: &[f64],
    finest: i32,
) -> Result<CoefficientSet> {
    if finest < spec.level() {
        return Err(Error::Config(format!(
            "finest detail level {finest} is below the scaling level {}",
            spec.level()
        )));
    }
    if !spec.functions().has_wavelets() {
        return Err(Error::Config(format!(
            "filter `{}` has no highpass, detail coefficients are unavailable",
            spec.functions().table().filter().name()
        )));
    }
    let mut set = estimate_coefficients(spec, samples)?;
    set.beta = (spec.level()..=finest)
        .map(|j| sample_mean(&spec.at_level(j), Generator::Wavelet, samples))
        .collect();
    Ok(set)
}

/// How raw grid values are mapped to a valid pdf.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NormalizationMethod {
    /// `max(0, p - c)` with `c` chosen for unit mass: the L2 projection onto
    /// non-negative unit-mass grid functions.
    #[default]
    ShiftClip,
    /// Clip negative values to zero, then rescale to unit mass.
    ClipRescale,
}

/// Grid-level corrected view of an estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalization {
    pub method: NormalizationMethod,
    pub grid: QuadratureGrid,
    pub values: Vec<f64>,
    /// Trapezoid mass of the raw estimate.
    pub raw_mass: f64,
    /// Trapezoid mass of the raw estimate's negative part, `int max(-p, 0)`.
    pub negative_mass: f64,
    /// Shift subtracted (`ShiftClip`) or factor applied (`ClipRescale`).
    pub adjustment: f64,
    pub mass: f64,
    pub passes: usize,
}

#[derive(Debug, Clone)]
pub struct DensityEstimate {
    spec: BasisSpec,
    coefficients: CoefficientSet,
    normalization: Option<Normalization>,
}

impl DensityEstimate {
    pub fn new(spec: BasisSpec, coefficients: CoefficientSet) -> Result<Self> {
        let (k_min, _) = spec.translates();
        if coefficients.alpha.k_min != k_min
            || coefficients.alpha.values.len() != spec.translate_count()
            || coefficients.alpha.level != spec.level()
        {
            return Err(Error::Config(
                "coefficients do not match the basis translate range".into(),
            ));
        }
        if coefficients
            .alpha
            .values
            .iter()
            .any(|v| v.len() != spec.multiplicity() || v.iter().any(|c| !c.is_finite()))
        {
            return Err(Error::Config("coefficient vectors malformed".into()));
        }
        Ok(DensityEstimate {
            spec,
            coefficients,
            normalization: None,
        })
    }

    /// Estimates scaling coefficients from `samples` and binds them to `spec`.
    pub fn fit(spec: BasisSpec, samples: &[f64]) -> Result<Self> {
        let coefficients = estimate_coefficients(&spec, samples)?;
        Self::new(spec, coefficients)
    }

    pub fn spec(&self) -> &BasisSpec {
        &self.spec
    }

    pub fn coefficients(&self) -> &CoefficientSet {
        &self.coefficients
    }

    pub fn normalization(&self) -> Option<&Normalization> {
        self.normalization.as_ref()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalization.is_some()
    }

    /// Raw estimate at one point.
    pub fn value_at(&self, x: f64) -> f64 {
        let mut total = level_value(&self.spec, &self.coefficients.alpha, Generator::Scaling, x);
        for detail in &self.coefficients.beta {
            let spec = self.spec.at_level(detail.level);
            total += level_value(&spec, detail, Generator::Wavelet, x);
        }
        total
    }

    /// Raw estimate on `grid`.
    pub fn reconstruct(&self, grid: &[f64]) -> Vec<f64> {
        let detail_specs: Vec<BasisSpec> = self
            .coefficients
            .beta
            .iter()
            .map(|d| self.spec.at_level(d.level))
            .collect();
        grid.iter()
            .map(|&x| {
                let mut total =
                    level_value(&self.spec, &self.coefficients.alpha, Generator::Scaling, x);
                for (spec, detail) in detail_specs.iter().zip(&self.coefficients.beta) {
                    total += level_value(spec, detail, Generator::Wavelet, x);
                }
                total
            })
            .collect()
    }

    /// Normalized grid values when available, otherwise the raw reconstruction.
    pub fn values_on(&self, grid: &QuadratureGrid) -> Vec<f64> {
        match &self.normalization {
            Some(n) if n.grid == *grid => n.values.clone(),
            _ => self.reconstruct(grid.points()),
        }
    }

    pub fn normalize(&self, grid: &QuadratureGrid) -> Result<DensityEstimate> {
        self.normalize_with(grid, NormalizationMethod::default())
    }

    pub fn normalize_with(
        &self,
        grid: &QuadratureGrid,
        method: NormalizationMethod,
    ) -> Result<DensityEstimate> {
        let raw = self.reconstruct(grid.points());
        let normalization = normalize_values(&raw, grid, method)?;
        Ok(DensityEstimate {
            spec: self.spec.clone(),
            coefficients: self.coefficients.clone(),
            normalization: Some(normalization),
        })
    }
}

fn level_value(spec: &BasisSpec, coeffs: &LevelCoefficients, generator: Generator, x: f64) -> f64 {
    let (lo, hi) = spec.translates_at(x);
    let mut total = 0.0;
    for k in lo..=hi {
        let Some(c) = coeffs.get(k) else { continue };
        for (i, ci) in c.iter().enumerate() {
            if *ci != 0.0 {
                total += ci * spec.evaluate_generator(generator, i, k, x);
            }
        }
    }
    total
}

/// Maps raw grid values to a non-negative function with unit trapezoid mass.
pub fn normalize_values(
    raw: &[f64],
    grid: &QuadratureGrid,
    method: NormalizationMethod,
) -> Result<Normalization> {
    let raw_mass = grid.integrate(raw)?;
    if !raw.iter().any(|&v| v > 0.0) {
        return Err(Error::DegenerateEstimate);
    }
    let negative: Vec<f64> = raw.iter().map(|&v| (-v).max(0.0)).collect();
    let negative_mass = grid.integrate(&negative)?;

    let (mut values, adjustment) = match method {
        NormalizationMethod::ShiftClip => {
            let c = unit_mass_shift(raw, grid);
            (raw.iter().map(|&v| (v - c).max(0.0)).collect::<Vec<_>>(), c)
        }
        NormalizationMethod::ClipRescale => {
            let clipped: Vec<f64> = raw.iter().map(|&v| v.max(0.0)).collect();
            let mass = grid.integrate(&clipped)?;
            (clipped.iter().map(|v| v / mass).collect(), 1.0 / mass)
        }
    };

    let mut mass = grid.integrate(&values)?;
    let mut passes = 1;
    while (mass - 1.0).abs() > MASS_TOLERANCE * 1e-3 && passes < MAX_NORMALIZATION_PASSES {
        if !(mass > 0.0) {
            return Err(Error::DegenerateEstimate);
        }
        for v in &mut values {
            *v = (*v / mass).max(0.0);
        }
        mass = grid.integrate(&values)?;
        passes += 1;
    }
    if !((mass - 1.0).abs() <= MASS_TOLERANCE) {
        return Err(Error::DegenerateEstimate);
    }
    Ok(Normalization {
        method,
        grid: grid.clone(),
        values,
        raw_mass,
        negative_mass,
        adjustment,
        mass,
        passes,
    })
}

/// Solves `sum_i w_i max(0, v_i - c) = 1` for `c`, where `w_i` are the
/// trapezoid weights. The left side is continuous, piecewise linear and
/// non-increasing in `c`, so walking the values in descending order finds the
/// active set exactly.
fn unit_mass_shift(values: &[f64], grid: &QuadratureGrid) -> f64 {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let mut weight = 0.0;
    let mut weighted_sum = 0.0;
    for (pos, &i) in order.iter().enumerate() {
        let w = grid.weight(i);
        weight += w;
        weighted_sum += w * values[i];
        let c = (weighted_sum - 1.0) / weight;
        let next = order.get(pos + 1).map(|&n| values[n]);
        match next {
            Some(v) if c < v => continue,
            _ => return c,
        }
    }
    unreachable!("loop returns on the last element")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::RefinableFunctions;
    use crate::cascade::{cascade, CascadeParams};
    use crate::multifilter::load_filter;
    use std::sync::Arc;

    fn functions(name: &str, depth: u32) -> Arc<RefinableFunctions> {
        let table = cascade(
            Arc::new(load_filter(name).unwrap()),
            CascadeParams {
                depth,
                ..Default::default()
            },
        )
        .unwrap();
        Arc::new(RefinableFunctions::new(Arc::new(table)))
    }

    // The spline rings within a few dozen knots of Haar's jump at 1, so the
    // samples stay clear of it.
    #[test]
    fn haar_uniform_sample() {
        let spec = BasisSpec::new(functions("haar", 10), 0, (0.0, 1.0)).unwrap();
        let samples: Vec<f64> = (0..90).map(|i| i as f64 / 100.0).collect();
        let set = estimate_coefficients(&spec, &samples).unwrap();
        assert_eq!(set.alpha.k_min, -1);
        assert_eq!(set.alpha.get(0).unwrap(), &[1.0]);
        assert_eq!(set.alpha.get(-1).unwrap(), &[0.0]);
        assert_eq!(set.alpha.get(1).unwrap(), &[0.0]);
    }

    #[test]
    fn haar_half_interval_sample() {
        let spec = BasisSpec::new(functions("haar", 10), 1, (0.0, 1.0)).unwrap();
        let samples: Vec<f64> = (0..45).map(|i| i as f64 / 100.0).collect();
        let set = estimate_coefficients(&spec, &samples).unwrap();
        assert!((set.alpha.get(0).unwrap()[0] - std::f64::consts::SQRT_2).abs() < 1e-12);
        assert_eq!(set.alpha.get(1).unwrap()[0], 0.0);
    }

    #[test]
    fn sample_errors() {
        let spec = BasisSpec::new(functions("haar", 4), 0, (0.0, 1.0)).unwrap();
        assert!(matches!(
            estimate_coefficients(&spec, &[]),
            Err(Error::EmptySample)
        ));
        match estimate_coefficients(&spec, &[0.5, 1.5]) {
            Err(Error::SampleOutsideDomain { value, .. }) => assert_eq!(value, 1.5),
            other => panic!("unexpected {other:?}"),
        }
        assert!(estimate_coefficients(&spec, &[f64::NAN]).is_err());
    }

    #[test]
    fn haar_reconstruction_is_uniform() {
        let spec = BasisSpec::new(functions("haar", 10), 0, (0.0, 1.0)).unwrap();
        let samples = vec![0.25, 0.5, 0.75];
        let est = DensityEstimate::fit(spec, &samples).unwrap();
        let grid: Vec<f64> = (0..45).map(|i| i as f64 / 50.0).collect();
        assert!(est
            .reconstruct(&grid)
            .iter()
            .all(|&v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn zero_coefficients_reconstruct_zero() {
        let spec = BasisSpec::new(functions("dghm", 6), 0, (-2.0, 2.0)).unwrap();
        let mut set = estimate_coefficients(&spec, &[0.1, 0.2]).unwrap();
        for v in set.alpha.values.iter_mut().flatten() {
            *v = 0.0;
        }
        let est = DensityEstimate::new(spec, set).unwrap();
        let grid: Vec<f64> = (0..40).map(|i| -2.0 + i as f64 * 0.1).collect();
        assert!(est.reconstruct(&grid).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn coefficient_bound() {
        let f = functions("db3", 8);
        for level in [-1, 0, 2] {
            let spec = BasisSpec::new(f.clone(), level, (-4.0, 4.0)).unwrap();
            let samples: Vec<f64> = (0..300).map(|i| -3.0 + i as f64 * 0.02).collect();
            let set = estimate_coefficients(&spec, &samples).unwrap();
            let bound = spec.norm_factor() * f.phi_sup(0);
            assert!(set
                .alpha
                .values
                .iter()
                .flatten()
                .all(|v| v.abs() <= bound + 1e-12));
        }
    }

    #[test]
    fn normalization_two_cell_example() {
        // Two cells of measure 1 on [0, 2] with values -0.1 and 1.1.
        let grid = QuadratureGrid::new(0.0, 2.0, 3).unwrap();
        // Trapezoid over 3 nodes: weights 0.5, 1, 0.5. Put -0.1 on the left
        // cell (node 0) and 1.1 on the right cell (node 2), middle shared.
        // Use piecewise-constant representation on a fine grid instead.
        let _ = grid;
        let m = 2001;
        let grid = QuadratureGrid::new(0.0, 2.0, m).unwrap();
        let raw: Vec<f64> = grid
            .points()
            .iter()
            .map(|&x| if x < 1.0 { -0.1 } else { 1.1 })
            .collect();
        for method in [
            NormalizationMethod::ShiftClip,
            NormalizationMethod::ClipRescale,
        ] {
            let n = normalize_values(&raw, &grid, method).unwrap();
            assert!((n.mass - 1.0).abs() <= MASS_TOLERANCE);
            for (x, v) in grid.points().iter().zip(&n.values) {
                if *x < 1.0 {
                    assert_eq!(*v, 0.0);
                } else {
                    assert!((v - 1.0).abs() < 2e-3, "{method:?} x={x} v={v}");
                }
            }
        }
    }

    #[test]
    fn valid_pdf_is_fixed_point() {
        let grid = QuadratureGrid::new(-4.0, 4.0, 4096).unwrap();
        let raw = grid.sample(|x| (-0.5 * x * x).exp());
        let mass = grid.integrate(&raw).unwrap();
        let pdf: Vec<f64> = raw.iter().map(|v| v / mass).collect();
        for method in [
            NormalizationMethod::ShiftClip,
            NormalizationMethod::ClipRescale,
        ] {
            let n = normalize_values(&pdf, &grid, method).unwrap();
            for (a, b) in n.values.iter().zip(&pdf) {
                assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn degenerate_estimate() {
        let grid = QuadratureGrid::new(0.0, 1.0, 11).unwrap();
        assert!(matches!(
            normalize_values(&[-1.0; 11], &grid, NormalizationMethod::ShiftClip),
            Err(Error::DegenerateEstimate)
        ));
        assert!(matches!(
            normalize_values(&[0.0; 11], &grid, NormalizationMethod::ClipRescale),
            Err(Error::DegenerateEstimate)
        ));
    }

    #[test]
    fn shift_is_exact_projection() {
        let grid = QuadratureGrid::new(0.0, 1.0, 101).unwrap();
        let raw = grid.sample(|x| 3.0 * (6.0 * x).sin());
        let n = normalize_values(&raw, &grid, NormalizationMethod::ShiftClip).unwrap();
        // Brute-force bisection on the shift.
        let mass_at = |c: f64| {
            let v: Vec<f64> = raw.iter().map(|r| (r - c).max(0.0)).collect();
            grid.integrate(&v).unwrap()
        };
        let (mut lo, mut hi) = (-10.0, 10.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mass_at(mid) > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!(
            (n.adjustment - lo).abs() < 1e-12,
            "{} vs {lo}",
            n.adjustment
        );
        assert_eq!(n.passes, 1);
    }

    #[test]
    fn detail_levels_need_highpass_and_order() {
        let spec = BasisSpec::new(functions("cl3", 6), 0, (-2.0, 2.0)).unwrap();
        assert!(matches!(
            estimate_with_details(&spec, &[0.0], 1),
            Err(Error::Config(_))
        ));
        let spec = BasisSpec::new(functions("db2", 6), 0, (-2.0, 2.0)).unwrap();
        assert!(matches!(
            estimate_with_details(&spec, &[0.0], -1),
            Err(Error::Config(_))
        ));
    }
}
