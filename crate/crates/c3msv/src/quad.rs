//! Deterministic tensor-product Gauss-Legendre quadrature in whitened
//! coordinates, for integrating Gaussian-times-polynomial phase-space
//! functions and their absolute values.
//!
//! The exponent matrix M is diagonalized once, the domain is rescaled so
//! the Gaussian weight becomes exp(-|y|^2), and the grid is refined by
//! doubling the per-axis point count until two successive estimates agree.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::wigner::GaussPolyWigner;

/// Controls for the adaptive quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    /// Integration half-width in whitened Gaussian widths.
    pub half_width: f64,
    /// Starting per-axis point count; every refinement doubles it.
    pub points_per_dim: usize,
    /// Refinement stops once successive estimates agree to this tolerance;
    /// results smaller than it in magnitude are reported as zero.
    pub tol: f64,
    /// Total integrand-evaluation budget across all refinements.
    pub max_evals: u64,
}

impl QuadratureSpec {
    /// Defaults for functions of one mode (two real coordinates).
    pub fn single_mode() -> Self {
        QuadratureSpec {
            half_width: 6.0,
            points_per_dim: 96,
            tol: 1e-5,
            max_evals: 1 << 33,
        }
    }

    /// Defaults for functions of two modes, where each refinement is
    /// quartic in the per-axis count.
    pub fn two_mode() -> Self {
        QuadratureSpec {
            points_per_dim: 64,
            tol: 5e-4,
            ..Self::single_mode()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.half_width.is_finite() && self.half_width > 0.0 && self.half_width <= 20.0) {
            return Err(Error::Config(format!(
                "quadrature half-width {} outside (0, 20]",
                self.half_width
            )));
        }
        if self.points_per_dim < 16 {
            return Err(Error::Config(format!(
                "points_per_dim {} < 16",
                self.points_per_dim
            )));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::Config(format!("quadrature tol {} must be > 0", self.tol)));
        }
        Ok(())
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self::single_mode()
    }
}

/// Converged quadrature result for a signed density.
#[derive(Debug, Clone)]
pub struct NegativityEstimate {
    /// Negativity after clamping: values below tol in magnitude become 0,
    /// and the result is never negative.
    pub value: f64,
    /// Unclamped integral of |W| - W.
    pub raw_value: f64,
    /// Integral of W at the final refinement level.
    pub integral: f64,
    /// Integral of |W| at the final refinement level.
    pub abs_integral: f64,
    /// Per-level (points_per_dim, estimate) history.
    pub levels: Vec<(usize, f64)>,
    /// Difference between the last two estimates.
    pub last_delta: f64,
    /// Integrand evaluations spent.
    pub evals: u64,
}

/// Gauss-Legendre nodes (ascending) and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2, "need at least two nodes");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        // Tricomi initial guess for the i-th root from the upper end
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            let dz = p / d;
            z -= dz;
            if dz.abs() <= 1e-15 * (1.0 + z.abs()) {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, z);
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, dp)
}

struct Whitening {
    t: DMatrix<f64>,
    jac: f64,
}

fn whiten(m: &DMatrix<f64>) -> Result<Whitening> {
    let eig = nalgebra::SymmetricEigen::new(m.clone());
    let lam_max = eig.eigenvalues.max();
    let mut t = eig.eigenvectors.clone();
    let mut jac = 1.0;
    for (i, &lam) in eig.eigenvalues.iter().enumerate() {
        if !(lam > 1e-14 * lam_max && lam > 0.0) {
            return Err(Error::Numeric(format!(
                "exponent matrix is not positive definite (eigenvalue {lam:.3e})"
            )));
        }
        let scale = 1.0 / lam.sqrt();
        jac *= scale;
        for r in 0..t.nrows() {
            t[(r, i)] *= scale;
        }
    }
    Ok(Whitening { t, jac })
}

fn level_cost(w: &GaussPolyWigner, n: usize) -> u64 {
    if w.poly().degree() == 0 {
        n as u64
    } else {
        (n as u64).saturating_pow(w.dim() as u32)
    }
}

/// One tensor-product pass at n points per axis; returns (int W, int |W|).
fn integrate_once(
    w: &GaussPolyWigner,
    wh: &Whitening,
    n: usize,
    half_width: f64,
) -> Result<(f64, f64)> {
    let dim = w.dim();
    let (gx, gw) = gauss_legendre(n);
    let l = half_width / std::f64::consts::SQRT_2;
    let nodes: Vec<f64> = gx.iter().map(|x| l * x).collect();
    let wts: Vec<f64> = gw
        .iter()
        .zip(&nodes)
        .map(|(w, y)| l * w * (-y * y).exp())
        .collect();
    let k = w.norm_const() * wh.jac;
    let poly = w.poly();

    if poly.degree() == 0 {
        let c0 = poly.eval(&vec![0.0; dim]);
        let s1: f64 = wts.iter().sum();
        let total = k * c0 * s1.powi(dim as i32);
        return Ok((total, total.abs()));
    }

    let t = &wh.t;
    let mut s_int = 0.0;
    let mut s_abs = 0.0;
    match dim {
        2 => {
            let (t00, t01, t10, t11) = (t[(0, 0)], t[(0, 1)], t[(1, 0)], t[(1, 1)]);
            for i0 in 0..n {
                let y0 = nodes[i0];
                let mut r_int = 0.0;
                let mut r_abs = 0.0;
                for i1 in 0..n {
                    let y1 = nodes[i1];
                    let z = [t00 * y0 + t01 * y1, t10 * y0 + t11 * y1];
                    let v = poly.eval(&z) * wts[i1];
                    r_int += v;
                    r_abs += v.abs();
                }
                s_int += wts[i0] * r_int;
                s_abs += wts[i0] * r_abs;
            }
        }
        4 => {
            let (a, b, c0) = poly.quadratic_parts(4).ok_or_else(|| {
                Error::Numeric("two-mode integrand polynomial exceeds degree 2".into())
            })?;
            let ap = t.transpose() * &a * t;
            let bp = t.transpose() * DVector::from_column_slice(&b);
            let a33 = ap[(3, 3)];
            for i0 in 0..n {
                let y0 = nodes[i0];
                for i1 in 0..n {
                    let y1 = nodes[i1];
                    let w01 = wts[i0] * wts[i1];
                    for i2 in 0..n {
                        let y2 = nodes[i2];
                        let w012 = w01 * wts[i2];
                        let lin =
                            (ap[(3, 0)] + ap[(0, 3)]) * y0 + (ap[(3, 1)] + ap[(1, 3)]) * y1
                                + (ap[(3, 2)] + ap[(2, 3)]) * y2
                                + bp[3];
                        let base = ap[(0, 0)] * y0 * y0
                            + ap[(1, 1)] * y1 * y1
                            + ap[(2, 2)] * y2 * y2
                            + (ap[(0, 1)] + ap[(1, 0)]) * y0 * y1
                            + (ap[(0, 2)] + ap[(2, 0)]) * y0 * y2
                            + (ap[(1, 2)] + ap[(2, 1)]) * y1 * y2
                            + bp[0] * y0
                            + bp[1] * y1
                            + bp[2] * y2
                            + c0;
                        let mut r_int = 0.0;
                        let mut r_abs = 0.0;
                        for (y3, w3) in nodes.iter().zip(&wts) {
                            let v = ((a33 * y3 + lin) * y3 + base) * w3;
                            r_int += v;
                            r_abs += v.abs();
                        }
                        s_int += w012 * r_int;
                        s_abs += w012 * r_abs;
                    }
                }
            }
        }
        _ => {
            // odometer over an arbitrary dimension
            let mut idx = vec![0usize; dim];
            let mut y = vec![0.0; dim];
            let mut z = vec![0.0; dim];
            loop {
                let mut wt = 1.0;
                for d in 0..dim {
                    y[d] = nodes[idx[d]];
                    wt *= wts[idx[d]];
                }
                for r in 0..dim {
                    let mut acc = 0.0;
                    for cidx in 0..dim {
                        acc += t[(r, cidx)] * y[cidx];
                    }
                    z[r] = acc;
                }
                let v = poly.eval(&z) * wt;
                s_int += v;
                s_abs += v.abs();
                let mut d = dim;
                loop {
                    if d == 0 {
                        return Ok((k * s_int, k * s_abs));
                    }
                    d -= 1;
                    idx[d] += 1;
                    if idx[d] < n {
                        break;
                    }
                    idx[d] = 0;
                }
            }
        }
    }
    Ok((k * s_int, k * s_abs))
}

struct Refined {
    int_w: f64,
    abs_w: f64,
    levels: Vec<(usize, f64)>,
    last_delta: f64,
    evals: u64,
}

/// Doubles the grid until the tracked functional of (int W, int |W|)
/// settles to spec.tol, within the evaluation budget.
fn refine(
    w: &GaussPolyWigner,
    spec: &QuadratureSpec,
    track: impl Fn(f64, f64) -> f64,
) -> Result<Refined> {
    spec.validate()?;
    let wh = whiten(w.exponent_matrix())?;
    let mut n = spec.points_per_dim;
    let mut levels: Vec<(usize, f64)> = Vec::new();
    let mut evals: u64 = 0;
    let mut last: Option<(f64, f64)> = None;
    loop {
        let cost = level_cost(w, n);
        if evals.saturating_add(cost) > spec.max_evals {
            return Err(match levels.len() {
                0 => Error::Config(format!(
                    "evaluation budget {} cannot cover the initial {n}-point grid",
                    spec.max_evals
                )),
                1 => Error::NonConvergence {
                    previous: levels[0].1,
                    last: levels[0].1,
                    delta: f64::INFINITY,
                    tol: spec.tol,
                },
                len => Error::NonConvergence {
                    previous: levels[len - 2].1,
                    last: levels[len - 1].1,
                    delta: (levels[len - 1].1 - levels[len - 2].1).abs(),
                    tol: spec.tol,
                },
            });
        }
        let (int_w, abs_w) = integrate_once(w, &wh, n, spec.half_width)?;
        evals += cost;
        let est = track(int_w, abs_w);
        levels.push((n, est));
        if let Some((prev_est, _)) = last {
            let delta = (est - prev_est).abs();
            if delta < spec.tol {
                return Ok(Refined {
                    int_w,
                    abs_w,
                    levels,
                    last_delta: delta,
                    evals,
                });
            }
        }
        last = Some((est, int_w));
        n *= 2;
    }
}

/// Integral of |W| - W by grid-doubling quadrature. Estimates smaller than
/// spec.tol in magnitude clamp to exactly zero.
pub fn negativity_quadrature(
    w: &GaussPolyWigner,
    spec: &QuadratureSpec,
) -> Result<NegativityEstimate> {
    let r = refine(w, spec, |int_w, abs_w| abs_w - int_w)?;
    let raw = r.abs_w - r.int_w;
    let value = if raw.abs() < spec.tol { 0.0 } else { raw.max(0.0) };
    Ok(NegativityEstimate {
        value,
        raw_value: raw,
        integral: r.int_w,
        abs_integral: r.abs_w,
        levels: r.levels,
        last_delta: r.last_delta,
        evals: r.evals,
    })
}

/// Integral of W by the same refinement scheme; a normalized Wigner
/// function integrates to 1.
pub fn normalization(w: &GaussPolyWigner, spec: &QuadratureSpec) -> Result<f64> {
    Ok(refine(w, spec, |int_w, _| int_w)?.int_w)
}
