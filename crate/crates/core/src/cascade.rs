//! Cascade algorithm: dyadic-grid samples of the multiscaling (and
//! multiwavelet) vector by fixed-point iteration of the refinement equation.
//!
//! The grid is `x_n = l + n 2^-d`, `n = 0 ..= (u - l) 2^d`. For a grid point
//! `x_n`, `2 x_n - k` lands exactly on grid index `2n + (l - k) 2^d`, so each
//! iteration is pure index arithmetic with no interpolation.

use std::f64::consts::FRAC_1_SQRT_2;
use std::io::Write;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::multifilter::Multifilter;

pub const DEFAULT_DEPTH: u32 = 10;
pub const DEFAULT_MAX_ITERS: usize = 100;
pub const DEFAULT_TOLERANCE: f64 = 1e-8;
/// Mass-norm deviation below which the converged table is left untouched.
const MASS_DRIFT: f64 = 1e-12;
const INTEGER_ITERS: usize = 10_000;
const INTEGER_TOL: f64 = 1e-11;
const COARSE_LEVELS: u32 = 2;
pub const MIN_DEPTH: u32 = 4;
const MAX_DEPTH: u32 = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CascadeParams {
    pub depth: u32,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for CascadeParams {
    fn default() -> Self {
        CascadeParams {
            depth: DEFAULT_DEPTH,
            max_iters: DEFAULT_MAX_ITERS,
            tol: DEFAULT_TOLERANCE,
        }
    }
}

/// Grid samples of every multiscaling component (and multiwavelet component
/// when the filter has a highpass) over the support `[l, u]`.
#[derive(Debug, Clone)]
pub struct ScalingTable {
    filter: Arc<Multifilter>,
    depth: u32,
    phi: Vec<Vec<f64>>,
    psi: Option<Vec<Vec<f64>>>,
    refinement_residual: f64,
    trace: Vec<f64>,
}

impl ScalingTable {
    pub fn filter(&self) -> &Multifilter {
        &self.filter
    }

    pub fn filter_arc(&self) -> &Arc<Multifilter> {
        &self.filter
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn multiplicity(&self) -> usize {
        self.phi.len()
    }

    pub fn support(&self) -> (i32, i32) {
        self.filter.support()
    }

    /// Samples per unit length, `2^d`.
    pub fn samples_per_unit(&self) -> usize {
        1 << self.depth
    }

    pub fn spacing(&self) -> f64 {
        (-f64::from(self.depth)).exp2()
    }

    pub fn len(&self) -> usize {
        self.phi[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi[0].is_empty()
    }

    pub fn abscissa(&self, n: usize) -> f64 {
        f64::from(self.support().0) + n as f64 * self.spacing()
    }

    pub fn abscissae(&self) -> Vec<f64> {
        (0..self.len()).map(|n| self.abscissa(n)).collect()
    }

    pub fn phi(&self) -> &[Vec<f64>] {
        &self.phi
    }

    pub fn psi(&self) -> Option<&[Vec<f64>]> {
        self.psi.as_deref()
    }

    /// Sup-norm refinement defect of the returned samples.
    pub fn refinement_residual(&self) -> f64 {
        self.refinement_residual
    }

    /// Sup-norm of successive-iterate differences, one entry per iteration.
    pub fn trace(&self) -> &[f64] {
        &self.trace
    }

    /// Writes `x, phi_1 .. phi_r[, psi_1 .. psi_r]` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let r = self.multiplicity();
        let mut header = vec!["x".to_string()];
        header.extend((1..=r).map(|i| format!("phi_{i}")));
        if self.psi.is_some() {
            header.extend((1..=r).map(|i| format!("psi_{i}")));
        }
        writeln!(out, "{}", header.join(","))?;
        for n in 0..self.len() {
            write!(out, "{}", self.abscissa(n))?;
            for comp in &self.phi {
                write!(out, ",{}", comp[n])?;
            }
            if let Some(psi) = &self.psi {
                for comp in psi {
                    write!(out, ",{}", comp[n])?;
                }
            }
            writeln!(out)?;
        }
        Ok(())
    }

    /// Discrete orthonormality residual
    /// `max_{i,j,k} | 2^-d sum_n f_i(x_n) g_j(x_n - k) - delta |` for the
    /// requested pair of function families.
    pub fn orthonormality_residual(&self, pair: FunctionPair) -> Option<f64> {
        let (f, g, expect_identity) = match pair {
            FunctionPair::PhiPhi => (&self.phi, &self.phi, true),
            FunctionPair::PsiPsi => (self.psi.as_ref()?, self.psi.as_ref()?, true),
            FunctionPair::PhiPsi => (&self.phi, self.psi.as_ref()?, false),
        };
        Some(discrete_gram_residual(
            f,
            g,
            self.samples_per_unit(),
            expect_identity,
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FunctionPair {
    PhiPhi,
    PsiPsi,
    PhiPsi,
}

fn discrete_gram_residual(
    f: &[Vec<f64>],
    g: &[Vec<f64>],
    per_unit: usize,
    expect_identity: bool,
) -> f64 {
    let len = f[0].len();
    let h = 1.0 / per_unit as f64;
    let max_shift = (len - 1) / per_unit;
    let mut worst: f64 = 0.0;
    for shift in 0..=max_shift {
        let offset = shift * per_unit;
        for (i, fi) in f.iter().enumerate() {
            for (j, gj) in g.iter().enumerate() {
                // <f_i(x), g_j(x - k)> for k = +shift and k = -shift.
                let forward: f64 = (offset..len).map(|n| fi[n] * gj[n - offset]).sum::<f64>() * h;
                let backward: f64 = (0..len - offset)
                    .map(|n| fi[n] * gj[n + offset])
                    .sum::<f64>()
                    * h;
                let target = if expect_identity && shift == 0 && i == j {
                    1.0
                } else {
                    0.0
                };
                worst = worst
                    .max((forward - target).abs())
                    .max((backward - target).abs());
            }
        }
    }
    worst
}

/// Piecewise-constant orthonormal start: component `i` (1-based) is
/// `sqrt(r)` on `[(i-1)/r, i/r)` relative to the left support endpoint,
/// sampled on the dyadic grid of `len` points at `per_unit` samples per unit.
pub fn initializer(r: usize, per_unit: usize, len: usize) -> Vec<Vec<f64>> {
    let height = (r as f64).sqrt();
    (0..r)
        .map(|i| {
            (0..len)
                .map(|n| {
                    // n / per_unit in [i/r, (i+1)/r)  <=>  i * per_unit <= n * r < (i+1) * per_unit
                    let scaled = n * r;
                    if scaled >= i * per_unit && scaled < (i + 1) * per_unit {
                        height
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

/// One application of `f -> sqrt(2) sum_k M_k f(2x - k)` on the grid.
fn refine(
    mats: &[crate::multifilter::Matrix],
    source: &[Vec<f64>],
    per_unit: usize,
    target: &mut [Vec<f64>],
) {
    let r = source.len();
    let len = source[0].len() as i64;
    let per_unit = per_unit as i64;
    for comp in target.iter_mut() {
        comp.iter_mut().for_each(|v| *v = 0.0);
    }
    for (k, m) in mats.iter().enumerate() {
        // sqrt(2) * h as h / (1/sqrt(2)) keeps the Haar taps exactly 1.
        let scaled: Vec<f64> = m.entries().iter().map(|v| v / FRAC_1_SQRT_2).collect();
        // Taps are indexed from l, so with grid offset l the shift is k * 2^d.
        let shift = k as i64 * per_unit;
        let n_lo = ((shift + 1) / 2).max(0);
        let n_hi = ((len - 1 + shift) / 2).min(len - 1);
        for n in n_lo..=n_hi {
            let src = (2 * n - shift) as usize;
            for i in 0..r {
                let mut acc = 0.0;
                for j in 0..r {
                    acc += scaled[i * r + j] * source[j][src];
                }
                target[i][n as usize] += acc;
            }
        }
    }
}

fn sup_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let mut worst: f64 = 0.0;
    for (x, y) in a.iter().zip(b) {
        for (p, q) in x.iter().zip(y) {
            let d = (p - q).abs();
            if d.is_nan() {
                return f64::NAN;
            }
            worst = worst.max(d);
        }
    }
    worst
}

/// Iterates the closed subsystem of integer points from the block start, then
/// refines a few coarse dyadic levels exactly. Each grid iteration from this
/// start only corrects finer levels.
fn coarse_start(
    mats: &[crate::multifilter::Matrix],
    r: usize,
    per_unit: usize,
    len: usize,
) -> Option<Vec<Vec<f64>>> {
    let units = (len - 1) / per_unit;
    let block = initializer(r, per_unit, len);
    let mut v: Vec<Vec<f64>> = block
        .iter()
        .map(|c| c.iter().step_by(per_unit).copied().collect())
        .collect();
    let mut next = vec![vec![0.0; units + 1]; r];
    let mut settled = false;
    for _ in 0..INTEGER_ITERS {
        refine(mats, &v, 1, &mut next);
        let delta = sup_diff(&next, &v);
        std::mem::swap(&mut v, &mut next);
        let scale = v.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
        if !delta.is_finite() || scale == 0.0 {
            return None;
        }
        if delta <= INTEGER_TOL * scale {
            settled = true;
            break;
        }
    }
    if !settled {
        return None;
    }
    let levels = COARSE_LEVELS.min(per_unit.trailing_zeros());
    for level in 1..=levels {
        let fine = 1usize << level;
        let upsampled = interpolate(&v, 2, units * fine + 1);
        let mut exact = vec![vec![0.0; units * fine + 1]; r];
        refine(mats, &upsampled, fine, &mut exact);
        v = exact;
    }
    Some(interpolate(&v, per_unit >> levels, len))
}

/// Linear interpolation by an integer factor.
fn interpolate(v: &[Vec<f64>], factor: usize, len: usize) -> Vec<Vec<f64>> {
    v.iter()
        .map(|c| {
            (0..len)
                .map(|n| {
                    let (k, rem) = (n / factor, n % factor);
                    if rem == 0 {
                        c[k]
                    } else {
                        let t = rem as f64 / factor as f64;
                        c[k] * (1.0 - t) + c[k + 1] * t
                    }
                })
                .collect()
        })
        .collect()
}

/// The grid iteration from a point-sampled start converges to a multiple of
/// the orthonormal solution, whose mass vector `int phi` has unit length.
fn rescale_to_unit_mass(phi: &mut [Vec<f64>], per_unit: usize) {
    let h = 1.0 / per_unit as f64;
    let norm = phi
        .iter()
        .map(|c| {
            let m = c.iter().sum::<f64>() * h;
            m * m
        })
        .sum::<f64>()
        .sqrt();
    if norm > 0.0 && (norm - 1.0).abs() > MASS_DRIFT {
        for c in phi.iter_mut() {
            c.iter_mut().for_each(|v| *v /= norm);
        }
    }
}

/// Runs the cascade to convergence on a depth-`d` dyadic grid.
pub fn cascade(filter: Arc<Multifilter>, params: CascadeParams) -> Result<ScalingTable> {
    if params.depth < MIN_DEPTH || params.depth > MAX_DEPTH {
        return Err(Error::CascadeParameters(format!(
            "depth {} outside [{MIN_DEPTH}, {MAX_DEPTH}]",
            params.depth
        )));
    }
    if !(params.tol > 0.0) {
        return Err(Error::CascadeParameters(format!(
            "tolerance {} must be positive",
            params.tol
        )));
    }
    if params.max_iters == 0 {
        return Err(Error::CascadeParameters(
            "max_iters must be positive".into(),
        ));
    }
    let (l, u) = filter.support();
    let per_unit = 1usize << params.depth;
    let len = (u - l) as usize * per_unit + 1;
    let r = filter.multiplicity();

    let mut current = coarse_start(filter.lowpass(), r, per_unit, len)
        .unwrap_or_else(|| initializer(r, per_unit, len));
    let mut next = vec![vec![0.0; len]; r];
    let mut trace = Vec::with_capacity(params.max_iters);
    let mut converged = false;
    for _ in 0..params.max_iters {
        refine(filter.lowpass(), &current, per_unit, &mut next);
        let delta = sup_diff(&next, &current);
        std::mem::swap(&mut current, &mut next);
        trace.push(delta);
        if !delta.is_finite() {
            break;
        }
        if delta <= params.tol {
            converged = true;
            break;
        }
    }

    refine(filter.lowpass(), &current, per_unit, &mut next);
    let residual = sup_diff(&next, &current);
    if !converged || !(residual <= params.tol) {
        return Err(Error::NonConvergent {
            name: filter.name().to_string(),
            residual,
            iterations: trace.len(),
            trace,
        });
    }

    rescale_to_unit_mass(&mut current, per_unit);

    let psi = filter.highpass().map(|g| {
        let mut out = vec![vec![0.0; len]; r];
        refine(g, &current, per_unit, &mut out);
        out
    });

    Ok(ScalingTable {
        filter,
        depth: params.depth,
        phi: current,
        psi,
        refinement_residual: residual,
        trace,
    })
}
