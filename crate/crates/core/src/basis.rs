//! Evaluable bases `phi_{j,k}(x) = 2^{j/2} phi(2^j x - k)` built from a
//! converged [`ScalingTable`], with cubic-spline evaluation between grid
//! samples and translate bookkeeping over a data domain.

use std::sync::Arc;

use crate::cascade::ScalingTable;
use crate::error::{Error, Result};
use crate::spline::UniformCubicSpline;

/// Spline interpolants of every multiscaling (and multiwavelet) component.
#[derive(Debug)]
pub struct RefinableFunctions {
    table: Arc<ScalingTable>,
    phi: Vec<UniformCubicSpline>,
    psi: Option<Vec<UniformCubicSpline>>,
    lower: f64,
    upper: f64,
}

impl RefinableFunctions {
    pub fn new(table: Arc<ScalingTable>) -> Self {
        let (l, u) = table.support();
        let x0 = f64::from(l);
        let h = table.spacing();
        let build = |comps: &[Vec<f64>]| -> Vec<UniformCubicSpline> {
            comps
                .iter()
                .map(|c| UniformCubicSpline::new(x0, h, c.clone()))
                .collect()
        };
        let phi = build(table.phi());
        let psi = table.psi().map(build);
        RefinableFunctions {
            table,
            phi,
            psi,
            lower: x0,
            upper: f64::from(u),
        }
    }

    pub fn table(&self) -> &ScalingTable {
        &self.table
    }

    pub fn multiplicity(&self) -> usize {
        self.phi.len()
    }

    pub fn support(&self) -> (i32, i32) {
        self.table.support()
    }

    pub fn has_wavelets(&self) -> bool {
        self.psi.is_some()
    }

    /// `phi_i(t)`, zero outside the support.
    #[inline]
    pub fn phi(&self, component: usize, t: f64) -> f64 {
        if t < self.lower || t > self.upper {
            return 0.0;
        }
        self.phi[component].eval(t)
    }

    /// `psi_i(t)`, zero outside the support or when no highpass exists.
    #[inline]
    pub fn psi(&self, component: usize, t: f64) -> f64 {
        match &self.psi {
            Some(psi) if t >= self.lower && t <= self.upper => psi[component].eval(t),
            _ => 0.0,
        }
    }

    /// Largest absolute grid sample of `phi_i`.
    pub fn phi_sup(&self, component: usize) -> f64 {
        self.table.phi()[component]
            .iter()
            .fold(0.0, |m: f64, v| m.max(v.abs()))
    }
}

/// Which generator a basis is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Generator {
    Scaling,
    Wavelet,
}

/// Integer translates `k` whose dilated support `[(l+k)/2^j, (u+k)/2^j]`
/// meets `[a, b]` (closed intervals): `k_min = ceil(2^j a - u)`,
/// `k_max = floor(2^j b - l)`.
pub fn translate_range(support: (i32, i32), level: i32, domain: (f64, f64)) -> (i64, i64) {
    let scale = f64::from(level).exp2();
    let (l, u) = support;
    let k_min = (scale * domain.0 - f64::from(u)).ceil() as i64;
    let k_max = (scale * domain.1 - f64::from(l)).floor() as i64;
    (k_min, k_max)
}

/// A concrete basis: generator functions, resolution level, domain and translates.
#[derive(Debug, Clone)]
pub struct BasisSpec {
    functions: Arc<RefinableFunctions>,
    level: i32,
    domain: (f64, f64),
    translates: (i64, i64),
    scale: f64,
    norm: f64,
}

impl BasisSpec {
    pub fn new(functions: Arc<RefinableFunctions>, level: i32, domain: (f64, f64)) -> Result<Self> {
        let (a, b) = domain;
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidDomain { a, b });
        }
        let translates = translate_range(functions.support(), level, domain);
        Ok(BasisSpec {
            functions,
            level,
            domain,
            translates,
            scale: f64::from(level).exp2(),
            norm: (0.5 * f64::from(level)).exp2(),
        })
    }

    /// Same functions and domain at another level.
    pub fn at_level(&self, level: i32) -> Self {
        BasisSpec::new(self.functions.clone(), level, self.domain)
            .expect("domain was validated on construction")
    }

    pub fn functions(&self) -> &Arc<RefinableFunctions> {
        &self.functions
    }

    pub fn level(&self) -> i32 {
        self.level
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn translates(&self) -> (i64, i64) {
        self.translates
    }

    pub fn translate_count(&self) -> usize {
        (self.translates.1 - self.translates.0 + 1).max(0) as usize
    }

    pub fn multiplicity(&self) -> usize {
        self.functions.multiplicity()
    }

    /// `r * (k_max - k_min + 1)`
    pub fn coefficient_count(&self) -> usize {
        self.multiplicity() * self.translate_count()
    }

    /// `2^{j/2}`
    pub fn norm_factor(&self) -> f64 {
        self.norm
    }

    /// Translates whose support contains `x` (clamped to the spec's range).
    #[inline]
    pub fn translates_at(&self, x: f64) -> (i64, i64) {
        let (l, u) = self.functions.support();
        let t = self.scale * x;
        let lo = (t - f64::from(u)).ceil() as i64;
        let hi = (t - f64::from(l)).floor() as i64;
        (lo.max(self.translates.0), hi.min(self.translates.1))
    }

    /// `2^{j/2} phi_i(2^j x - k)`; 0 outside the dilated support.
    #[inline]
    pub fn evaluate(&self, component: usize, k: i64, x: f64) -> f64 {
        self.norm * self.functions.phi(component, self.scale * x - k as f64)
    }

    /// `2^{j/2} psi_i(2^j x - k)`; 0 outside the dilated support.
    #[inline]
    pub fn evaluate_wavelet(&self, component: usize, k: i64, x: f64) -> f64 {
        self.norm * self.functions.psi(component, self.scale * x - k as f64)
    }

    #[inline]
    pub fn evaluate_generator(
        &self,
        generator: Generator,
        component: usize,
        k: i64,
        x: f64,
    ) -> f64 {
        match generator {
            Generator::Scaling => self.evaluate(component, k, x),
            Generator::Wavelet => self.evaluate_wavelet(component, k, x),
        }
    }

    /// Stacks [`evaluate`](Self::evaluate) over all components.
    pub fn evaluate_vector(&self, k: i64, x: f64) -> Vec<f64> {
        (0..self.multiplicity())
            .map(|i| self.evaluate(i, k, x))
            .collect()
    }

    /// Fills `out` with `phi_{j,k}(x)` (or `psi`); `out.len()` must equal `r`.
    #[inline]
    pub fn evaluate_into(&self, generator: Generator, k: i64, x: f64, out: &mut [f64]) {
        let (l, u) = self.functions.support();
        let t = self.scale * x - k as f64;
        if t < f64::from(l) || t > f64::from(u) {
            out.iter_mut().for_each(|v| *v = 0.0);
            return;
        }
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = self.norm
                * match generator {
                    Generator::Scaling => self.functions.phi[i].eval(t),
                    Generator::Wavelet => self.functions.psi(i, t),
                };
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cascade::{cascade, CascadeParams};
    use crate::multifilter::load_filter;

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

    /// Enumerates every k whose closed dilated support meets the domain.
    fn brute_force_range(support: (i32, i32), level: i32, domain: (f64, f64)) -> (i64, i64) {
        let s = f64::from(level).exp2();
        let hits: Vec<i64> = (-10_000..10_000)
            .filter(|&k| {
                let lo = (f64::from(support.0) + k as f64) / s;
                let hi = (f64::from(support.1) + k as f64) / s;
                hi >= domain.0 && lo <= domain.1
            })
            .collect();
        (*hits.first().unwrap(), *hits.last().unwrap())
    }

    #[test]
    fn translate_range_examples() {
        assert_eq!(translate_range((0, 1), 0, (0.0, 1.0)), (-1, 1));
        assert_eq!(translate_range((0, 3), 0, (-4.0, 4.0)), (-7, 4));
        assert_eq!(translate_range((0, 3), 1, (-4.0, 4.0)), (-11, 8));
        for (support, level, domain) in [
            ((0, 3), 0, (-4.0, 4.0)),
            ((0, 3), 1, (-4.0, 4.0)),
            ((0, 29), -2, (-4.0, 4.0)),
            ((0, 2), 3, (-4.0, 4.0)),
            ((0, 5), -1, (-0.3, 2.7)),
        ] {
            assert_eq!(
                translate_range(support, level, domain),
                brute_force_range(support, level, domain)
            );
        }
    }

    #[test]
    fn haar_values() {
        let f = functions("haar", 6);
        let spec0 = BasisSpec::new(f.clone(), 0, (0.0, 1.0)).unwrap();
        assert_eq!(spec0.evaluate(0, 0, 0.3), 1.0);
        let spec1 = BasisSpec::new(f, 1, (0.0, 1.0)).unwrap();
        assert!((spec1.evaluate(0, 0, 0.3) - std::f64::consts::SQRT_2).abs() < 1e-12);
        assert_eq!(spec1.evaluate(0, 0, 0.7), 0.0);
        assert_eq!(spec0.evaluate(0, 0, -0.1), 0.0);
        assert_eq!(spec0.evaluate(0, 0, 1.5), 0.0);
    }

    #[test]
    fn balanced_haar_vectors() {
        let f = functions("bal-haar", 8);
        let spec = BasisSpec::new(f, 0, (0.0, 1.0)).unwrap();
        let s = std::f64::consts::SQRT_2;
        let v = spec.evaluate_vector(0, 0.2);
        assert!((v[0] - s).abs() < 1e-12 && v[1].abs() < 1e-12, "{v:?}");
        let v = spec.evaluate_vector(0, 0.7);
        assert!(v[0].abs() < 1e-12 && (v[1] - s).abs() < 1e-12, "{v:?}");
        assert_eq!(spec.evaluate_vector(0, 3.0), vec![0.0, 0.0]);
    }

    #[test]
    fn coefficient_count_formula() {
        let f = functions("dghm", 6);
        let spec = BasisSpec::new(f, 1, (-4.0, 4.0)).unwrap();
        let (lo, hi) = spec.translates();
        assert_eq!(spec.coefficient_count(), 2 * (hi - lo + 1) as usize);
    }

    #[test]
    fn rejects_empty_domain() {
        let f = functions("haar", 4);
        assert!(matches!(
            BasisSpec::new(f, 0, (1.0, 1.0)),
            Err(Error::InvalidDomain { .. })
        ));
    }

    #[test]
    fn unit_norm_by_quadrature() {
        for name in ["db3", "dghm", "cl2", "coif2", "bal-db3"] {
            let f = functions(name, 10);
            for level in [-2, 0, 2] {
                let spec = BasisSpec::new(f.clone(), level, (-4.0, 4.0)).unwrap();
                let (l, u) = f.support();
                for k in [-1i64, 0, 3] {
                    let s = f64::from(level).exp2();
                    let (x0, x1) = ((f64::from(l) + k as f64) / s, (f64::from(u) + k as f64) / s);
                    let m = 20_000;
                    let h = (x1 - x0) / m as f64;
                    for comp in 0..spec.multiplicity() {
                        let mut acc = 0.0;
                        for n in 0..=m {
                            let w = if n == 0 || n == m { 0.5 } else { 1.0 };
                            let v = spec.evaluate(comp, k, x0 + n as f64 * h);
                            acc += w * v * v;
                        }
                        acc *= h;
                        assert!(
                            (acc - 1.0).abs() <= 1e-3,
                            "{name} j={level} k={k} i={comp}: {acc}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn dilation_identity() {
        let f = functions("db4", 10);
        let fine = BasisSpec::new(f.clone(), 2, (-4.0, 4.0)).unwrap();
        let coarse = fine.at_level(1);
        for i in 0..200 {
            let x = -1.0 + i as f64 * 0.0173;
            for k in [-2i64, 0, 1] {
                let a = fine.evaluate(0, k, x);
                let b = std::f64::consts::SQRT_2 * coarse.evaluate(0, k, 2.0 * x);
                assert!((a - b).abs() <= 1e-9, "x={x} k={k}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn grid_samples_reproduced() {
        let f = functions("cl3", 8);
        let table = f.table();
        for comp in 0..2 {
            for n in (0..table.len()).step_by(7) {
                assert_eq!(f.phi(comp, table.abscissa(n)), table.phi()[comp][n]);
            }
        }
    }

    #[test]
    fn translate_range_is_complete() {
        let f = functions("db3", 8);
        let spec = BasisSpec::new(f, 1, (-1.0, 2.0)).unwrap();
        let (lo, hi) = spec.translates();
        for i in 0..=300 {
            let x = -1.0 + i as f64 * 0.01;
            for k in lo - 10..=hi + 10 {
                if spec.evaluate(0, k, x) != 0.0 {
                    assert!((lo..=hi).contains(&k), "x={x} k={k}");
                }
            }
        }
    }
}
