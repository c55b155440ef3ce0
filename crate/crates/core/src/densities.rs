//! Gaussian-mixture ground-truth densities with exact pdf and seeded sampling.
//!
//! Sampling uses `Xoshiro256PlusPlus` seeded through `seed_from_u64`
//! (SplitMix64 expansion). Each draw takes one uniform `f64` for component
//! selection against the cumulative weights, then one standard normal variate
//! from the ziggurat sampler in `rand_distr`. Draws outside the benchmark
//! domain are rejected and redrawn.

use libm::erfc;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_DOMAIN: (f64, f64) = (-4.0, 4.0);
const WEIGHT_TOLERANCE: f64 = 1e-12;
const MIN_DOMAIN_MASS: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureDensity {
    #[serde(default = "custom_name")]
    pub name: String,
    pub weights: Vec<f64>,
    pub means: Vec<f64>,
    pub stddevs: Vec<f64>,
    #[serde(default = "default_domain")]
    pub domain: (f64, f64),
}

fn custom_name() -> String {
    "custom".to_string()
}

fn default_domain() -> (f64, f64) {
    DEFAULT_DOMAIN
}

/// A sample together with how much truncation was needed to produce it.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub values: Vec<f64>,
    /// Mixture component of each value.
    pub components: Vec<usize>,
    /// Fraction of raw draws rejected for falling outside the domain.
    pub truncation_fraction: f64,
}

impl MixtureDensity {
    pub fn new(
        name: impl Into<String>,
        weights: Vec<f64>,
        means: Vec<f64>,
        stddevs: Vec<f64>,
        domain: (f64, f64),
    ) -> Result<Self> {
        let d = MixtureDensity {
            name: name.into(),
            weights,
            means,
            stddevs,
            domain,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let d: MixtureDensity = serde_json::from_str(text)?;
        d.validate()?;
        Ok(d)
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidMixture(msg));
        let n = self.weights.len();
        if n == 0 {
            return bad("no components".into());
        }
        if self.means.len() != n || self.stddevs.len() != n {
            return bad(format!(
                "component lists differ in length: {} weights, {} means, {} stddevs",
                n,
                self.means.len(),
                self.stddevs.len()
            ));
        }
        if self.weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return bad("weights must be positive and finite".into());
        }
        if self.stddevs.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
            return bad("standard deviations must be positive and finite".into());
        }
        if self.means.iter().any(|m| !m.is_finite()) {
            return bad("means must be finite".into());
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOLERANCE {
            return bad(format!("weights sum to {total}, not 1"));
        }
        let (a, b) = self.domain;
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return bad(format!("empty domain [{a}, {b}]"));
        }
        // Rejection sampling needs a reachable domain.
        let mass = self.mass_between(a, b);
        if !(mass >= MIN_DOMAIN_MASS) {
            return bad(format!(
                "domain [{a}, {b}] carries only {mass:e} of the mass"
            ));
        }
        Ok(())
    }

    pub fn components(&self) -> usize {
        self.weights.len()
    }

    /// `sum_c w_c N(x; mu_c, sigma_c)`
    pub fn pdf(&self, x: f64) -> f64 {
        self.weights
            .iter()
            .zip(&self.means)
            .zip(&self.stddevs)
            .map(|((w, m), s)| w * gaussian_pdf(x, *m, *s))
            .sum()
    }

    pub fn pdf_on(&self, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| self.pdf(x)).collect()
    }

    /// Density of the domain-truncated law that [`sample`](Self::sample)
    /// draws from: `pdf(x) / P(domain)` inside the domain, 0 outside.
    pub fn conditional_pdf_on(&self, xs: &[f64]) -> Vec<f64> {
        let (a, b) = self.domain;
        let mass = self.mass_between(a, b);
        xs.iter()
            .map(|&x| {
                if x < a || x > b {
                    0.0
                } else {
                    self.pdf(x) / mass
                }
            })
            .collect()
    }

    /// Exact probability mass on `[a, b]`.
    pub fn mass_between(&self, a: f64, b: f64) -> f64 {
        self.weights
            .iter()
            .zip(&self.means)
            .zip(&self.stddevs)
            .map(|((w, m), s)| w * (normal_cdf((b - m) / s) - normal_cdf((a - m) / s)))
            .sum()
    }

    /// `n` domain-truncated i.i.d. draws.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        self.sample_detailed(n, seed).values
    }

    pub fn sample_detailed(&self, n: usize, seed: u64) -> Sample {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
        let cumulative: Vec<f64> = self
            .weights
            .iter()
            .scan(0.0, |acc, w| {
                *acc += w;
                Some(*acc)
            })
            .collect();
        let last = cumulative.len() - 1;
        let (a, b) = self.domain;
        let mut values = Vec::with_capacity(n);
        let mut components = Vec::with_capacity(n);
        let mut rejected = 0usize;
        while values.len() < n {
            let u: f64 = rng.random();
            let c = cumulative.iter().position(|&cw| u < cw).unwrap_or(last);
            let z: f64 = rng.sample(StandardNormal);
            let x = self.means[c] + self.stddevs[c] * z;
            if x < a || x > b {
                rejected += 1;
                continue;
            }
            values.push(x);
            components.push(c);
        }
        let total = n + rejected;
        Sample {
            values,
            components,
            truncation_fraction: if total == 0 {
                0.0
            } else {
                rejected as f64 / total as f64
            },
        }
    }
}

fn gaussian_pdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    (-0.5 * z * z).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Names of the shipped benchmark densities.
pub const ZOO: &[&str] = &["normal", "bimodal", "skewed-bimodal", "claw", "double-claw"];

/// Looks up a benchmark density by name on the default domain.
pub fn zoo(name: &str) -> Result<MixtureDensity> {
    let two_thirds = 2.0 / 3.0;
    let (weights, means, stddevs): (Vec<f64>, Vec<f64>, Vec<f64>) = match name {
        "normal" => (vec![1.0], vec![0.0], vec![1.0]),
        "bimodal" => (
            vec![0.5, 0.5],
            vec![-1.0, 1.0],
            vec![two_thirds, two_thirds],
        ),
        "skewed-bimodal" => (vec![0.75, 0.25], vec![0.0, 1.5], vec![1.0, 1.0 / 3.0]),
        "claw" => {
            let mut w = vec![0.5];
            let mut m = vec![0.0];
            let mut s = vec![1.0];
            for l in 0..5 {
                w.push(0.1);
                m.push(f64::from(l) / 2.0 - 1.0);
                s.push(0.1);
            }
            (w, m, s)
        }
        "double-claw" => {
            let mut w = vec![0.49, 0.49];
            let mut m = vec![-1.0, 1.0];
            let mut s = vec![two_thirds, two_thirds];
            for l in 0..7 {
                w.push(1.0 / 350.0);
                m.push(f64::from(l - 3) / 2.0);
                s.push(0.01);
            }
            (w, m, s)
        }
        _ => return Err(Error::UnknownDensity(name.to_string())),
    };
    MixtureDensity::new(name, weights, means, stddevs, DEFAULT_DOMAIN)
}

/// Parses a plain sample file: one real per line, blank lines ignored.
pub fn parse_samples(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let v: f64 = line
            .parse()
            .map_err(|_| Error::Parse(format!("line {}: `{line}` is not a number", lineno + 1)))?;
        if !v.is_finite() {
            return Err(Error::Parse(format!(
                "line {}: non-finite value",
                lineno + 1
            )));
        }
        out.push(v);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_peak() {
        let d = zoo("normal").unwrap();
        assert!((d.pdf(0.0) - 0.398_942_280_401_432_7).abs() < 1e-15);
    }

    #[test]
    fn bimodal_is_symmetric() {
        let d = zoo("bimodal").unwrap();
        for i in 0..50 {
            let x = i as f64 * 0.09;
            assert!((d.pdf(x) - d.pdf(-x)).abs() < 1e-15);
        }
    }

    #[test]
    fn claw_at_zero_matches_formula() {
        let d = zoo("claw").unwrap();
        let phi = |z: f64| (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let mut expected = 0.5 * phi(0.0);
        for l in 0..5 {
            let mu = l as f64 / 2.0 - 1.0;
            expected += 0.1 * phi(-mu / 0.1) / 0.1;
        }
        assert!((d.pdf(0.0) - expected).abs() < 1e-14);
        assert!((d.mass_between(-40.0, 40.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zoo_masses() {
        for name in ZOO {
            let d = zoo(name).unwrap();
            let (a, b) = d.domain;
            let exact = d.mass_between(a, b);
            assert!(exact >= 0.995, "{name}: {exact}");
            // Trapezoid mass on the default quadrature grid.
            let m = 20_001;
            let h = (b - a) / (m - 1) as f64;
            let trap: f64 = (0..m)
                .map(|i| {
                    let w = if i == 0 || i == m - 1 { 0.5 } else { 1.0 };
                    w * d.pdf(a + i as f64 * h)
                })
                .sum::<f64>()
                * h;
            assert!((trap - 1.0).abs() <= 5e-3, "{name}: {trap}");
            assert!((trap - exact).abs() < 1e-6, "{name}: {trap} vs {exact}");
        }
    }

    #[test]
    fn normal_cdf_reference_values() {
        // erfc reference values computed with mpmath at 30 digits.
        let cases = [
            (0.0, 1.0),
            (0.3, 0.671_373_240_540_872_6),
            (1.0, 0.157_299_207_050_285_13),
            (2.5, 4.069_520_174_449_59e-4),
            (5.0, 1.537_459_794_428_034_8e-12),
            (-1.0, 1.842_700_792_949_715),
        ];
        for (x, want) in cases {
            let got = 2.0 * normal_cdf(-x * std::f64::consts::SQRT_2);
            assert!(
                ((got - want) / want).abs() < 1e-13,
                "erfc({x}) = {got}, want {want}"
            );
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let d = zoo("claw").unwrap();
        assert_eq!(d.sample(500, 42), d.sample(500, 42));
        assert_ne!(d.sample(500, 42), d.sample(500, 43));
    }

    #[test]
    fn truncation_is_reported() {
        let d =
            MixtureDensity::new("narrow", vec![1.0], vec![0.0], vec![1.0], (-0.5, 0.5)).unwrap();
        let s = d.sample_detailed(5000, 7);
        assert!(s.values.iter().all(|v| (-0.5..=0.5).contains(v)));
        // P(|Z| > 0.5) = 0.617
        assert!(
            (s.truncation_fraction - 0.617).abs() < 0.03,
            "{}",
            s.truncation_fraction
        );
    }

    #[test]
    fn rejects_bad_mixtures() {
        assert!(MixtureDensity::new("x", vec![0.5], vec![0.0], vec![1.0], DEFAULT_DOMAIN).is_err());
        assert!(
            MixtureDensity::new("x", vec![1.0], vec![0.0, 1.0], vec![1.0], DEFAULT_DOMAIN).is_err()
        );
        assert!(MixtureDensity::new("x", vec![1.0], vec![0.0], vec![0.0], DEFAULT_DOMAIN).is_err());
        assert!(MixtureDensity::new("x", vec![1.0], vec![0.0], vec![1.0], (1.0, -1.0)).is_err());
        assert!(MixtureDensity::new("x", vec![1.0], vec![1e6], vec![1.0], DEFAULT_DOMAIN).is_err());
        assert!(matches!(zoo("trimodal"), Err(Error::UnknownDensity(_))));
    }

    #[test]
    fn custom_mixture_json() {
        let d = MixtureDensity::from_json(
            r#"{"weights":[0.25,0.75],"means":[-1,1],"stddevs":[0.5,0.5],"domain":[-3,3]}"#,
        )
        .unwrap();
        assert_eq!(d.name, "custom");
        assert_eq!(d.domain, (-3.0, 3.0));
        assert!(
            MixtureDensity::from_json(r#"{"weights":[1.5],"means":[0],"stddevs":[1]}"#).is_err()
        );
    }

    #[test]
    fn sample_file_parsing() {
        assert_eq!(
            parse_samples("1.5\n\n -2e-1 \n3\n").unwrap(),
            vec![1.5, -0.2, 3.0]
        );
        assert!(parse_samples("1\nabc\n").is_err());
        assert!(parse_samples("inf\n").is_err());
        assert!(parse_samples("").unwrap().is_empty());
    }
}
