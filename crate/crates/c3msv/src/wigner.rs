//! Wigner functions of the three-mode state and of its photon-subtracted
//! reductions, each stored exactly as a Gaussian weight times a polynomial.
//!
//! Coordinates are stacked real pairs, beta_j = z[2j] + i z[2j+1], so a
//! function over k modes lives on R^{2k} and W(z) = nc * poly(z) *
//! exp(-z^T M z). The exponent matrix M is symmetric positive definite for
//! every reachable parameter point.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::config::SqueezingConfig;
use crate::error::{Error, Result};
use crate::quad::{self, NegativityEstimate, QuadratureSpec};
use crate::scheme::SubtractionScheme;

/// Real polynomial in up to six variables, stored as monomials
/// (coefficient, per-variable powers).
#[derive(Debug, Clone, Default)]
pub struct Poly {
    terms: Vec<(f64, [u8; 6])>,
}

impl Poly {
    pub fn constant(c: f64) -> Self {
        let mut p = Poly::default();
        p.push(c, [0; 6]);
        p
    }

    fn push(&mut self, coeff: f64, powers: [u8; 6]) {
        if coeff != 0.0 {
            self.terms.push((coeff, powers));
        }
    }

    pub fn terms(&self) -> &[(f64, [u8; 6])] {
        &self.terms
    }

    pub fn degree(&self) -> u32 {
        self.terms
            .iter()
            .map(|(_, p)| p.iter().map(|&e| u32::from(e)).sum())
            .max()
            .unwrap_or(0)
    }

    pub fn eval(&self, z: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (coeff, powers) in &self.terms {
            let mut t = *coeff;
            for (zi, &p) in z.iter().zip(powers.iter()) {
                if p > 0 {
                    t *= zi.powi(i32::from(p));
                }
            }
            acc += t;
        }
        acc
    }

    /// Splits a polynomial of degree <= 2 into (A, b, c0) with
    /// p(z) = z^T A z + b.z + c0; None if any term has higher degree.
    pub(crate) fn quadratic_parts(&self, dim: usize) -> Option<(DMatrix<f64>, Vec<f64>, f64)> {
        let mut a = DMatrix::zeros(dim, dim);
        let mut b = vec![0.0; dim];
        let mut c0 = 0.0;
        for (coeff, powers) in &self.terms {
            let mut idx = Vec::new();
            for (i, &p) in powers.iter().enumerate() {
                for _ in 0..p {
                    if i >= dim {
                        return None;
                    }
                    idx.push(i);
                }
            }
            match idx.as_slice() {
                [] => c0 += coeff,
                [i] => b[*i] += coeff,
                [i, j] if i == j => a[(*i, *i)] += coeff,
                [i, j] => {
                    a[(*i, *j)] += coeff / 2.0;
                    a[(*j, *i)] += coeff / 2.0;
                }
                _ => return None,
            }
        }
        Some((a, b, c0))
    }
}

/// Wigner function in Gaussian-times-polynomial form over the kept modes.
#[derive(Debug, Clone)]
pub struct GaussPolyWigner {
    modes: Vec<usize>,
    norm_const: f64,
    m: DMatrix<f64>,
    poly: Poly,
}

impl GaussPolyWigner {
    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    /// Real dimension of the phase-space domain.
    pub fn dim(&self) -> usize {
        2 * self.modes.len()
    }

    /// Original mode indices (0-based) this function is supported on.
    pub fn modes(&self) -> &[usize] {
        &self.modes
    }

    pub fn norm_const(&self) -> f64 {
        self.norm_const
    }

    /// Exponent matrix M of exp(-z^T M z).
    pub fn exponent_matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn poly(&self) -> &Poly {
        &self.poly
    }

    /// Evaluates W at z = (x_1, y_1, x_2, y_2, ...); z.len() must equal dim().
    pub fn eval(&self, z: &[f64]) -> f64 {
        assert_eq!(z.len(), self.dim(), "phase-space point has wrong dimension");
        let mut q = 0.0;
        for i in 0..z.len() {
            for j in 0..z.len() {
                q += z[i] * self.m[(i, j)] * z[j];
            }
        }
        self.norm_const * self.poly.eval(z) * (-q).exp()
    }

    /// Evaluates W at complex phase-space amplitudes, one per kept mode.
    pub fn eval_complex(&self, betas: &[Complex64]) -> f64 {
        assert_eq!(betas.len(), self.n_modes(), "one amplitude per kept mode");
        let mut z = Vec::with_capacity(self.dim());
        for b in betas {
            z.push(b.re);
            z.push(b.im);
        }
        self.eval(&z)
    }
}

/// Accumulates an exponent quadratic form and a polynomial from complex
/// mode-pair terms. add_quad adds coef * z_a z_b to z^T M z.
struct FormBuilder {
    m: DMatrix<f64>,
    poly: Poly,
}

impl FormBuilder {
    fn new(n_modes: usize) -> Self {
        FormBuilder {
            m: DMatrix::zeros(2 * n_modes, 2 * n_modes),
            poly: Poly::default(),
        }
    }

    fn add_quad(&mut self, a: usize, b: usize, coef: f64) {
        self.m[(a, b)] += coef / 2.0;
        self.m[(b, a)] += coef / 2.0;
    }

    /// Adds w |beta_j|^2 to the exponent form.
    fn exp_abs2(&mut self, j: usize, w: f64) {
        self.add_quad(2 * j, 2 * j, w);
        self.add_quad(2 * j + 1, 2 * j + 1, w);
    }

    /// Adds Re(u beta_j beta_k) to the exponent form, j != k.
    fn exp_re_prod(&mut self, j: usize, k: usize, u: Complex64) {
        self.add_quad(2 * j, 2 * k, u.re);
        self.add_quad(2 * j + 1, 2 * k + 1, -u.re);
        self.add_quad(2 * j, 2 * k + 1, -u.im);
        self.add_quad(2 * j + 1, 2 * k, -u.im);
    }

    /// Adds Re(u beta_j conj(beta_k)) to the exponent form, j != k.
    fn exp_re_prod_conj(&mut self, j: usize, k: usize, u: Complex64) {
        self.add_quad(2 * j, 2 * k, u.re);
        self.add_quad(2 * j + 1, 2 * k + 1, u.re);
        self.add_quad(2 * j, 2 * k + 1, u.im);
        self.add_quad(2 * j + 1, 2 * k, -u.im);
    }

    fn poly_const(&mut self, c: f64) {
        self.poly.push(c, [0; 6]);
    }

    fn mono(vars: &[(usize, u8)]) -> [u8; 6] {
        let mut p = [0u8; 6];
        for &(i, e) in vars {
            p[i] += e;
        }
        p
    }

    /// Adds w |beta_j|^2 to the polynomial.
    fn poly_abs2(&mut self, j: usize, w: f64) {
        self.poly.push(w, Self::mono(&[(2 * j, 2)]));
        self.poly.push(w, Self::mono(&[(2 * j + 1, 2)]));
    }

    /// Adds w |beta_j|^4 to the polynomial.
    fn poly_abs4(&mut self, j: usize, w: f64) {
        self.poly.push(w, Self::mono(&[(2 * j, 4)]));
        self.poly.push(2.0 * w, Self::mono(&[(2 * j, 2), (2 * j + 1, 2)]));
        self.poly.push(w, Self::mono(&[(2 * j + 1, 4)]));
    }

    /// Adds Re(u beta_j beta_k) to the polynomial, j != k.
    fn poly_re_prod(&mut self, j: usize, k: usize, u: Complex64) {
        self.poly.push(u.re, Self::mono(&[(2 * j, 1), (2 * k, 1)]));
        self.poly.push(-u.re, Self::mono(&[(2 * j + 1, 1), (2 * k + 1, 1)]));
        self.poly.push(-u.im, Self::mono(&[(2 * j, 1), (2 * k + 1, 1)]));
        self.poly.push(-u.im, Self::mono(&[(2 * j + 1, 1), (2 * k, 1)]));
    }

    /// Adds Re(u beta_j conj(beta_k)) to the polynomial, j != k.
    fn poly_re_prod_conj(&mut self, j: usize, k: usize, u: Complex64) {
        self.poly.push(u.re, Self::mono(&[(2 * j, 1), (2 * k, 1)]));
        self.poly.push(u.re, Self::mono(&[(2 * j + 1, 1), (2 * k + 1, 1)]));
        self.poly.push(u.im, Self::mono(&[(2 * j, 1), (2 * k + 1, 1)]));
        self.poly.push(-u.im, Self::mono(&[(2 * j + 1, 1), (2 * k, 1)]));
    }

    fn build(self, modes: Vec<usize>, norm_const: f64) -> GaussPolyWigner {
        GaussPolyWigner {
            modes,
            norm_const,
            m: self.m,
            poly: self.poly,
        }
    }
}

/// Wigner function of the full three-mode state.
pub fn wigner_c3msv(cfg: &SqueezingConfig) -> GaussPolyWigner {
    let (w0, w1, w2) = cfg.weights();
    let c = cfg.c();
    let e1 = cfg.eps1();
    let e2 = cfg.eps2();
    let mut b = FormBuilder::new(3);
    b.exp_abs2(0, 2.0 * w2);
    b.exp_abs2(1, 2.0 * w0);
    b.exp_abs2(2, 2.0 * w1);
    b.exp_re_prod(0, 1, 8.0 * c * e1.conj());
    b.exp_re_prod_conj(0, 2, 8.0 * e1.conj() * e2);
    b.exp_re_prod(1, 2, 8.0 * c * e2.conj());
    b.poly_const(1.0);
    b.build(vec![0, 1, 2], 8.0 / PI.powi(3))
}

/// Wigner function of the reduced state after a subtraction scheme: photons
/// removed from the marked modes, the complement of the kept set traced out.
/// Schemes sharing one reduced state share one closed form. Errors when a
/// subtracted mode carries no photons.
pub fn wigner_closed_form(
    cfg: &SqueezingConfig,
    scheme: SubtractionScheme,
) -> Result<GaussPolyWigner> {
    // Each form below is the finite, normalized limit of the conditioned
    // state wherever a subtracted mode's population merely vanishes at a
    // splitting-angle boundary, so those evaluate. Only the vacuum r = 0
    // has no such limit: nothing can be heralded at all.
    if cfg.r() == 0.0 {
        return Err(Error::EmptySubtraction {
            scheme: scheme.label().to_string(),
            mode: scheme.subtracted()[0] + 1,
        });
    }
    let (w0, w1, w2) = cfg.weights();
    let c = cfg.c();
    let s = cfg.s();
    let (c2, s2) = (c * c, s * s);
    let e1 = cfg.eps1();
    let e2 = cfg.eps2();
    let (ae1, ae2) = (e1.norm_sqr(), e2.norm_sqr());
    let cos2phi = (2.0 * cfg.phi()).cos();
    let canon = scheme.canonical();
    let kept = canon.kept().to_vec();

    let w = match canon.label() {
        "1a|23" => {
            let mut b = FormBuilder::new(2);
            b.exp_abs2(0, 2.0 * w1 / w2);
            b.exp_abs2(1, 2.0 * w0 / w2);
            b.exp_re_prod(0, 1, (8.0 * c / w2) * e2.conj());
            b.poly_abs2(0, 4.0 * c2);
            b.poly_abs2(1, 4.0 * ae2);
            b.poly_re_prod(0, 1, 8.0 * c * e2.conj());
            b.poly_const(-w2);
            b.build(kept, 4.0 / (PI * PI * w2.powi(3)))
        }
        "2a|13" => {
            let mut b = FormBuilder::new(2);
            b.exp_abs2(0, 2.0 * w1 / w0);
            b.exp_abs2(1, 2.0 * w2 / w0);
            b.exp_re_prod_conj(0, 1, -(8.0 / w0) * e1.conj() * e2);
            b.poly_abs2(0, 4.0 * c2 * ae1);
            b.poly_abs2(1, 4.0 * c2 * ae2);
            b.poly_re_prod_conj(0, 1, 8.0 * c2 * e1.conj() * e2);
            b.poly_const(-w0 * s2);
            b.build(kept, 4.0 / (PI * PI * s2 * w0.powi(3)))
        }
        "3a|12" => {
            let mut b = FormBuilder::new(2);
            b.exp_abs2(0, 2.0 * w0 / w1);
            b.exp_abs2(1, 2.0 * w2 / w1);
            b.exp_re_prod(0, 1, (8.0 * c / w1) * e1.conj());
            b.poly_abs2(0, 4.0 * ae1);
            b.poly_abs2(1, 4.0 * c2);
            b.poly_re_prod(0, 1, 8.0 * c * e1.conj());
            b.poly_const(-w1);
            b.build(kept, 4.0 / (PI * PI * w1.powi(3)))
        }
        "2a3a|1" => {
            let mut b = FormBuilder::new(1);
            b.exp_abs2(0, 2.0 / w2);
            b.poly_const(w2 * w2 * w1);
            b.poly_abs2(0, 4.0 * ae1 * (4.0 * c2 * c2 - w1 * w1));
            b.poly_abs4(0, 16.0 * c2 * ae1 * ae1);
            b.build(kept, 2.0 / (PI * w0 * w2.powi(5)))
        }
        "1a3a|2" => {
            let mut b = FormBuilder::new(1);
            b.exp_abs2(0, 2.0 / w0);
            b.poly_const(w0 * w0);
            b.poly_abs2(0, -8.0 * w0 * c2);
            b.poly_abs4(0, 8.0 * c2 * c2);
            b.build(kept, 2.0 / (PI * w0.powi(5)))
        }
        "1a2a|3" => {
            let mut b = FormBuilder::new(1);
            b.exp_abs2(0, 2.0 / w1);
            b.poly_const(w1 * w1 * w2);
            b.poly_abs2(0, 4.0 * ae2 * (4.0 * c2 * c2 - w2 * w2));
            b.poly_abs4(0, 16.0 * c2 * ae2 * ae2);
            b.build(kept, 2.0 / (PI * w0 * w1.powi(5)))
        }
        "1a|2" | "3a|2" => {
            let mut b = FormBuilder::new(1);
            b.exp_abs2(0, 2.0 / w0);
            b.poly_abs2(0, 4.0 * c2);
            b.poly_const(-w0);
            b.build(kept, 2.0 / (PI * w0.powi(3)))
        }
        "3a|1" => {
            let mut b = FormBuilder::new(1);
            b.exp_abs2(0, 2.0 / w2);
            b.poly_abs2(0, 4.0 * ae1);
            b.poly_const(w2);
            b.build(kept, 2.0 / (PI * w2.powi(3)))
        }
        "2a|1" => {
            let mut b = FormBuilder::new(1);
            b.exp_abs2(0, 2.0 / w2);
            b.poly_abs2(0, 4.0 * c2 * cfg.phi().cos().powi(2));
            b.poly_const(-w2 * cos2phi);
            b.build(kept, 2.0 / (PI * w2.powi(3)))
        }
        "1a|3" => {
            let mut b = FormBuilder::new(1);
            b.exp_abs2(0, 2.0 / w1);
            b.poly_abs2(0, 4.0 * ae2);
            b.poly_const(w1);
            b.build(kept, 2.0 / (PI * w1.powi(3)))
        }
        "2a|3" => {
            let mut b = FormBuilder::new(1);
            b.exp_abs2(0, 2.0 / w1);
            b.poly_abs2(0, 4.0 * c2 * cfg.phi().sin().powi(2));
            b.poly_const(w1 * cos2phi);
            b.build(kept, 2.0 / (PI * w1.powi(3)))
        }
        other => unreachable!("no closed form registered for scheme {other}"),
    };
    Ok(w)
}

/// Wigner negativity of the reduced state left by a subtraction scheme,
/// computed by adaptive quadrature on the closed form.
pub fn negativity(
    cfg: &SqueezingConfig,
    scheme: SubtractionScheme,
    spec: &QuadratureSpec,
) -> Result<NegativityEstimate> {
    let w = wigner_closed_form(cfg, scheme)?;
    quad::negativity_quadrature(&w, spec)
}

/// One row of a negativity scan; failed rows keep their error.
#[derive(Debug)]
pub struct ScanRow {
    pub phi: f64,
    pub result: Result<NegativityEstimate>,
}

/// Negativity of one scheme across a grid of splitting angles at fixed
/// total mean photon number and phases.
pub fn negativity_phi_scan(
    nbar_total: f64,
    theta1: f64,
    theta2: f64,
    scheme: SubtractionScheme,
    phis: &[f64],
    spec: &QuadratureSpec,
) -> Vec<ScanRow> {
    phis.iter()
        .map(|&phi| ScanRow {
            phi,
            result: SqueezingConfig::from_mean_photons(nbar_total, phi, theta1, theta2)
                .and_then(|cfg| negativity(&cfg, scheme, spec)),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cm::c3msv_covariance;
    use crate::error::Error;
    use approx::assert_relative_eq;

    fn cfg(nbar: f64, phi: f64, th1: f64, th2: f64) -> SqueezingConfig {
        SqueezingConfig::from_mean_photons(nbar, phi, th1, th2).unwrap()
    }

    #[test]
    fn poly_eval_and_degree() {
        let mut p = Poly::constant(2.0);
        p.push(3.0, [1, 0, 2, 0, 0, 0]);
        assert_eq!(p.degree(), 3);
        let v = p.eval(&[2.0, 0.0, -1.0, 0.0, 0.0, 0.0]);
        assert_relative_eq!(v, 2.0 + 3.0 * 2.0 * 1.0, epsilon = 1e-15);
    }

    #[test]
    fn quadratic_parts_roundtrip() {
        let c = cfg(3.0, PI / 8.0, 0.3, 0.7);
        let w = wigner_closed_form(&c, SubtractionScheme::from_label("1a|23").unwrap()).unwrap();
        let (a, b, c0) = w.poly().quadratic_parts(4).unwrap();
        let z = [0.3, -0.2, 0.5, 0.1];
        let mut q = c0;
        for i in 0..4 {
            q += b[i] * z[i];
            for j in 0..4 {
                q += z[i] * a[(i, j)] * z[j];
            }
        }
        assert_relative_eq!(q, w.poly().eval(&z), epsilon = 1e-13);
    }

    #[test]
    fn vacuum_three_mode_wigner_is_gaussian_peak() {
        let c = SqueezingConfig::from_r(0.0, 0.3, 0.0, 0.0).unwrap();
        let w = wigner_c3msv(&c);
        assert_relative_eq!(w.eval(&[0.0; 6]), 8.0 / PI.powi(3), epsilon = 1e-15);
        let z = [0.5, -0.2, 0.1, 0.4, -0.3, 0.2];
        let r2: f64 = z.iter().map(|v| v * v).sum();
        assert_relative_eq!(w.eval(&z), 8.0 / PI.powi(3) * (-2.0 * r2).exp(), epsilon = 1e-14);
    }

    #[test]
    fn three_mode_exponent_is_twice_inverse_covariance() {
        // W(z) = (2/pi)^3 det(V)^{-1/2} exp(-2 z^T V^{-1} z) for the pure
        // Gaussian state, so M = 2 V^{-1} and nc = (2/pi)^3.
        for (nbar, phi, th1, th2) in [
            (3.0, PI / 8.0, 0.0, 0.0),
            (2.0, PI / 4.0, 0.3, 0.7),
            (1.0, 1.1, 5.0, 2.4),
            (4.5, PI / 2.0, 0.0, 1.0),
        ] {
            let c = cfg(nbar, phi, th1, th2);
            let w = wigner_c3msv(&c);
            let v = c3msv_covariance(&c).into_matrix();
            let vinv = v.clone().try_inverse().unwrap();
            let diff = (w.exponent_matrix() - 2.0 * vinv).abs().max();
            assert!(diff < 1e-10, "exponent mismatch {diff:.3e} at phi={phi}");
            assert_relative_eq!(w.norm_const(), 8.0 / PI.powi(3), epsilon = 1e-14);
        }
    }

    #[test]
    fn eval_complex_matches_eval() {
        let c = cfg(3.0, PI / 8.0, 0.2, 0.9);
        let w = wigner_c3msv(&c);
        let betas = [
            Complex64::new(0.3, -0.1),
            Complex64::new(-0.2, 0.4),
            Complex64::new(0.1, 0.2),
        ];
        let z = [0.3, -0.1, -0.2, 0.4, 0.1, 0.2];
        assert_relative_eq!(w.eval_complex(&betas), w.eval(&z), epsilon = 1e-15);
    }

    #[test]
    fn all_closed_forms_normalize_to_one() {
        let c = cfg(3.0, PI / 8.0, 0.3, 0.7);
        for scheme in SubtractionScheme::all().filter(|s| s.is_canonical()) {
            let w = wigner_closed_form(&c, scheme).unwrap();
            let spec = QuadratureSpec {
                half_width: 8.0,
                points_per_dim: if w.dim() == 4 { 32 } else { 64 },
                tol: 1e-9,
                ..QuadratureSpec::default()
            };
            let total = quad::normalization(&w, &spec).unwrap();
            assert!(
                (total - 1.0).abs() < 1e-7,
                "scheme {scheme}: integral {total:.10} != 1"
            );
        }
    }

    #[test]
    fn three_mode_wigner_normalizes_to_one() {
        let c = cfg(2.0, PI / 3.0, 1.0, 0.2);
        let w = wigner_c3msv(&c);
        let spec = QuadratureSpec {
            half_width: 8.0,
            points_per_dim: 64,
            tol: 1e-9,
            ..QuadratureSpec::default()
        };
        let total = quad::normalization(&w, &spec).unwrap();
        assert_relative_eq!(total, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn mirror_symmetry_swaps_outer_modes_pointwise() {
        // Swapping modes 1 and 3 maps the state to itself with
        // phi -> pi/2 - phi and the phases exchanged.
        let c = cfg(3.0, PI / 8.0, 0.4, 1.3);
        let cm = cfg(3.0, PI / 2.0 - PI / 8.0, 1.3, 0.4);
        let wa = wigner_closed_form(&c, SubtractionScheme::from_label("1a|23").unwrap()).unwrap();
        let wb = wigner_closed_form(&cm, SubtractionScheme::from_label("3a|12").unwrap()).unwrap();
        for (b2, bk) in [
            (Complex64::new(0.4, -0.3), Complex64::new(0.2, 0.5)),
            (Complex64::new(-0.1, 0.6), Complex64::new(-0.4, -0.2)),
        ] {
            // 1a|23 keeps (2,3) as (z0, z1); 3a|12 keeps (1,2) as (z0, z1).
            let lhs = wa.eval_complex(&[b2, bk]);
            let rhs = wb.eval_complex(&[bk, b2]);
            assert_relative_eq!(lhs, rhs, epsilon = 1e-12);
        }
    }

    #[test]
    fn equivalent_schemes_share_the_closed_form() {
        let c = cfg(3.0, PI / 8.0, 0.0, 0.0);
        let a = wigner_closed_form(&c, SubtractionScheme::from_label("2a3|1").unwrap()).unwrap();
        let b = wigner_closed_form(&c, SubtractionScheme::from_label("2a|1").unwrap()).unwrap();
        let z = [0.7, -0.2];
        assert_relative_eq!(a.eval(&z), b.eval(&z), epsilon = 1e-15);
        assert_eq!(a.modes(), b.modes());
    }

    #[test]
    fn vacuum_is_rejected_but_splitting_boundaries_evaluate() {
        // r = 0: no photon can ever be heralded from vacuum
        let vac = SqueezingConfig::from_r(0.0, 0.8, 0.0, 0.0).unwrap();
        for label in ["2a|13", "1a|2", "3a|12"] {
            let err = wigner_closed_form(&vac, SubtractionScheme::from_label(label).unwrap())
                .unwrap_err();
            assert!(matches!(err, Error::EmptySubtraction { .. }), "{err}");
        }

        // a subtracted mode whose population vanishes at a splitting-angle
        // boundary still has a finite normalized limit form
        let at_half = cfg(3.0, PI / 2.0, 0.0, 0.0);
        let w = wigner_closed_form(&at_half, SubtractionScheme::from_label("1a|23").unwrap())
            .unwrap();
        let norm = quad::normalization(&w, &QuadratureSpec::two_mode()).unwrap();
        assert!((norm - 1.0).abs() < 1e-4, "norm {norm}");

        let at_zero = cfg(3.0, 0.0, 0.0, 0.0);
        let w = wigner_closed_form(&at_zero, SubtractionScheme::from_label("3a|2").unwrap());
        assert!(w.is_ok());
    }

    #[test]
    fn boundary_limits_stay_defined_for_populated_subtractions() {
        // At phi = 0 subtracting from mode 1 is allowed and the kept pair
        // factorizes; at phi = pi/2 subtracting modes 2 and 3 leaves mode 1
        // in vacuum.
        let at_zero = cfg(3.0, 0.0, 0.0, 0.0);
        let w = wigner_closed_form(&at_zero, SubtractionScheme::from_label("1a|23").unwrap());
        assert!(w.is_ok());

        let at_half = cfg(3.0, PI / 2.0, 0.0, 0.0);
        let w = wigner_closed_form(&at_half, SubtractionScheme::from_label("2a3a|1").unwrap())
            .unwrap();
        assert_relative_eq!(w.eval(&[0.0, 0.0]), 2.0 / PI, epsilon = 1e-10);
        assert_relative_eq!(
            w.eval(&[0.6, -0.2]),
            2.0 / PI * (-2.0f64 * (0.36 + 0.04)).exp(),
            epsilon = 1e-10
        );
    }

    #[test]
    fn single_mode_negativity_anchors() {
        let c = cfg(3.0, PI / 8.0, 0.0, 0.0);
        let spec = QuadratureSpec::single_mode();
        let n = negativity(&c, SubtractionScheme::from_label("1a|2").unwrap(), &spec).unwrap();
        assert!((n.value - 0.046826882695).abs() < 2e-5, "1a|2: {}", n.value);
        let n = negativity(&c, SubtractionScheme::from_label("1a3a|2").unwrap(), &spec).unwrap();
        assert!((n.value - 0.031852706866).abs() < 2e-5, "1a3a|2: {}", n.value);
        let n = negativity(&c, SubtractionScheme::from_label("2a|1").unwrap(), &spec).unwrap();
        assert!((n.value - 0.031158896308).abs() < 2e-5, "2a|1: {}", n.value);
    }

    #[test]
    fn pointwise_positive_forms_have_zero_negativity() {
        let c = cfg(3.0, PI / 8.0, 0.0, 0.0);
        let spec = QuadratureSpec::single_mode();
        for label in ["2a3a|1", "1a2a|3", "3a|1", "1a|3", "2a|3", "12a|3"] {
            let n = negativity(&c, SubtractionScheme::from_label(label).unwrap(), &spec).unwrap();
            assert_eq!(n.value, 0.0, "{label} should be exactly zero");
        }
    }

    #[test]
    fn mode2_subtraction_negativity_flips_at_balanced_splitting() {
        // 2a|1 is negative only below phi = pi/4, 2a|3 only above.
        let spec = QuadratureSpec::single_mode();
        let below = cfg(3.0, PI / 8.0, 0.0, 0.0);
        let above = cfg(3.0, 3.0 * PI / 8.0, 0.0, 0.0);
        let s2a1 = SubtractionScheme::from_label("2a|1").unwrap();
        let s2a3 = SubtractionScheme::from_label("2a|3").unwrap();
        assert!(negativity(&below, s2a1, &spec).unwrap().value > 1e-3);
        assert_eq!(negativity(&below, s2a3, &spec).unwrap().value, 0.0);
        assert!(negativity(&above, s2a3, &spec).unwrap().value > 1e-3);
        assert_eq!(negativity(&above, s2a1, &spec).unwrap().value, 0.0);
        // the two profiles mirror each other
        let na = negativity(&below, s2a1, &spec).unwrap().value;
        let nb = negativity(&above, s2a3, &spec).unwrap().value;
        assert!((na - nb).abs() < 1e-6);
    }

    #[test]
    fn phi_scan_reports_row_errors_without_aborting() {
        let spec = QuadratureSpec::single_mode();
        let scheme = SubtractionScheme::from_label("3a|2").unwrap();
        // boundary rows are limits, not errors
        let rows = negativity_phi_scan(3.0, 0.0, 0.0, scheme, &[0.0, PI / 8.0, PI / 4.0], &spec);
        assert_eq!(rows.len(), 3);
        assert!(rows.iter().all(|r| r.result.is_ok()));
        // at zero total photons every row fails and the scan still completes
        let rows = negativity_phi_scan(0.0, 0.0, 0.0, scheme, &[0.0, PI / 4.0], &spec);
        assert_eq!(rows.len(), 2);
        for row in &rows {
            assert!(matches!(row.result, Err(Error::EmptySubtraction { .. })));
        }
    }

    #[test]
    fn negativity_is_phase_independent() {
        let spec = QuadratureSpec::single_mode();
        let scheme = SubtractionScheme::from_label("1a|2").unwrap();
        let a = negativity(&cfg(3.0, PI / 8.0, 0.0, 0.0), scheme, &spec).unwrap();
        let b = negativity(&cfg(3.0, PI / 8.0, 2.1, 5.5), scheme, &spec).unwrap();
        assert_relative_eq!(a.value, b.value, epsilon = 1e-12);
    }
}
