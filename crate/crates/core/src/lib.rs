//! Linear wavelet and multiwavelet density estimation.
//!
//! A [`Multifilter`] holds the recursion matrices of a (multi)wavelet family.
//! [`cascade()`] turns it into dyadic samples of the scaling vector, [`basis`]
//! makes those evaluable at any level and translate, and [`estimator`] fits
//! projection coefficients from a sample. [`densities`], [`metrics`] and
//! [`bench`] provide the Gaussian-mixture benchmark.
//!
//! ```
//! use std::sync::Arc;
//! use mwde::{cascade, load_filter, BasisSpec, CascadeParams, DensityEstimate, RefinableFunctions};
//!
//! let table = cascade(Arc::new(load_filter("dghm")?), CascadeParams::default())?;
//! let functions = Arc::new(RefinableFunctions::new(Arc::new(table)));
//! let spec = BasisSpec::new(functions, 1, (-4.0, 4.0))?;
//! let estimate = DensityEstimate::fit(spec, &[-0.3, 0.1, 0.4, 1.2])?;
//! let values = estimate.reconstruct(&[0.0, 0.5]);
//! assert_eq!(values.len(), 2);
//! # Ok::<(), mwde::Error>(())
//! ```

pub mod basis;
pub mod bench;
pub mod cascade;
pub mod densities;
pub mod error;
pub mod estimator;
pub mod metrics;
pub mod multifilter;
pub mod spline;

pub use basis::{translate_range, BasisSpec, Generator, RefinableFunctions};
pub use bench::{best_per_density, run_benchmark, ExperimentConfig, ExperimentResult};
pub use cascade::{cascade, CascadeParams, FunctionPair, ScalingTable};
pub use densities::{zoo, MixtureDensity};
pub use error::{Error, Result};
pub use estimator::{
    estimate_coefficients, estimate_with_details, CoefficientSet, DensityEstimate,
    NormalizationMethod,
};
pub use metrics::{ise, l2_distance, QuadratureGrid};
pub use multifilter::{balance_scalar_filter, load_filter, FilterRegistry, Multifilter};
