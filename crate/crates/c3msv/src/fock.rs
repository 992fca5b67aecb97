//! Fock-space oracle: the state expanded in the number basis on its
//! two-parameter support, exact operator moments, photon subtraction as
//! ladder algebra, and Wigner evaluation through displaced-parity traces.
//! Everything here is independent of the Gaussian and closed-form routes.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::cm::CovarianceMatrix;
use crate::config::SqueezingConfig;
use crate::error::{Error, Result};
use crate::quad::gauss_legendre;
use crate::scheme::SubtractionScheme;

/// Highest supported truncation; the triangular amplitude table grows
/// quadratically with it.
pub const MAX_CUTOFF: usize = 240;
/// Default bound on the truncated-away state weight.
pub const DEFAULT_TRUNCATION_BUDGET: f64 = 1e-8;

fn log_factorials(up_to: usize) -> Vec<f64> {
    let mut lf = vec![0.0; up_to + 1];
    for n in 1..=up_to {
        lf[n] = lf[n - 1] + (n as f64).ln();
    }
    lf
}

/// Smallest cutoff whose truncation defect tanh(r)^(2(N+1)) is below the
/// budget.
pub fn auto_cutoff(r: f64, budget: f64) -> Result<usize> {
    if !(budget > 0.0 && budget < 1.0) {
        return Err(Error::Config(format!(
            "truncation budget {budget} outside (0, 1)"
        )));
    }
    let t2 = r.tanh().powi(2);
    if t2 == 0.0 {
        return Ok(0);
    }
    let mut defect = t2;
    for n in 0..=MAX_CUTOFF {
        if defect < budget {
            return Ok(n);
        }
        defect *= t2;
    }
    Err(Error::CutoffInsufficient {
        cutoff: MAX_CUTOFF,
        defect,
        budget,
    })
}

/// Number-basis expansion of the state: the support is the slice
/// n2 = n1 + n3, stored as amplitudes A[n1, n3] over n1 + n3 <= cutoff.
#[derive(Debug, Clone)]
pub struct FockState {
    amps: DMatrix<Complex64>,
    cfg: SqueezingConfig,
    cutoff: usize,
    defect: f64,
    lf: Vec<f64>,
}

/// Builds the truncated state. With cutoff None the smallest cutoff meeting
/// the budget is chosen; an explicit cutoff must itself meet the budget.
pub fn build_c3msv_fock(
    cfg: &SqueezingConfig,
    cutoff: Option<usize>,
    budget: f64,
) -> Result<FockState> {
    let n = match cutoff {
        Some(n) => {
            if !(budget > 0.0 && budget < 1.0) {
                return Err(Error::Config(format!(
                    "truncation budget {budget} outside (0, 1)"
                )));
            }
            if n > MAX_CUTOFF {
                return Err(Error::Config(format!(
                    "cutoff {n} exceeds the supported maximum {MAX_CUTOFF}"
                )));
            }
            let defect = cfg.r().tanh().powi(2 * (n as i32 + 1));
            if defect >= budget {
                return Err(Error::CutoffInsufficient {
                    cutoff: n,
                    defect,
                    budget,
                });
            }
            n
        }
        None => auto_cutoff(cfg.r(), budget)?,
    };
    let defect = cfg.r().tanh().powi(2 * (n as i32 + 1));
    let lf = log_factorials(2 * n + 4);
    let c = cfg.c();
    let ln_c = c.ln();
    let m1 = cfg.eps1().norm() / c;
    let m2 = cfg.eps2().norm() / c;
    let (th1, th2) = (cfg.theta1(), cfg.theta2());
    let mut amps = DMatrix::zeros(n + 1, n + 1);
    for n1 in 0..=n {
        for n3 in 0..=(n - n1) {
            // magnitude in logs; phase from the negated split amplitudes
            let mut lm = 0.5 * (lf[n1 + n3] - lf[n1] - lf[n3]) - ln_c;
            if n1 > 0 {
                if m1 == 0.0 {
                    continue;
                }
                lm += n1 as f64 * m1.ln();
            }
            if n3 > 0 {
                if m2 == 0.0 {
                    continue;
                }
                lm += n3 as f64 * m2.ln();
            }
            let phase =
                n1 as f64 * th1 + n3 as f64 * th2 + (n1 + n3) as f64 * std::f64::consts::PI;
            amps[(n1, n3)] = Complex64::from_polar(lm.exp(), phase);
        }
    }
    Ok(FockState {
        amps,
        cfg: *cfg,
        cutoff: n,
        defect,
        lf,
    })
}

impl FockState {
    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Weight of the discarded support, tanh(r)^(2(cutoff+1)).
    pub fn defect(&self) -> f64 {
        self.defect
    }

    pub fn config(&self) -> &SqueezingConfig {
        &self.cfg
    }

    /// Amplitude of |n1, n1+n3, n3>; zero outside the retained triangle.
    pub fn amplitude(&self, n1: usize, n3: usize) -> Complex64 {
        if n1 + n3 <= self.cutoff {
            self.amps[(n1, n3)]
        } else {
            Complex64::ZERO
        }
    }

    /// Retained norm; equals 1 - defect() up to rounding.
    pub fn norm(&self) -> f64 {
        let mut total = 0.0;
        for n1 in 0..=self.cutoff {
            for n3 in 0..=(self.cutoff - n1) {
                total += self.amps[(n1, n3)].norm_sqr();
            }
        }
        total
    }

    /// Normally ordered moment <a1+^k1 a2+^k2 a3+^k3 a1^l1 a2^l2 a3^l3>.
    pub fn moment(&self, k: [usize; 3], l: [usize; 3]) -> Complex64 {
        let n = self.cutoff;
        let lf = &self.lf;
        let mut total = Complex64::ZERO;
        for n1 in 0..=n {
            for n3 in 0..=(n - n1) {
                let n2 = n1 + n3;
                if n1 < l[0] || n2 < l[1] || n3 < l[2] {
                    continue;
                }
                let m1 = n1 - l[0] + k[0];
                let m2 = n2 - l[1] + k[1];
                let m3 = n3 - l[2] + k[2];
                if m2 != m1 + m3 || m1 + m3 > n {
                    continue;
                }
                let lg = 0.5
                    * (lf[n1] - lf[n1 - l[0]] + lf[n2] - lf[n2 - l[1]] + lf[n3] - lf[n3 - l[2]]
                        + lf[m1]
                        - lf[n1 - l[0]]
                        + lf[m2]
                        - lf[n2 - l[1]]
                        + lf[m3]
                        - lf[n3 - l[2]]);
                total += self.amps[(m1, m3)].conj() * self.amps[(n1, n3)] * lg.exp();
            }
        }
        total
    }

    /// Covariance matrix reassembled from first and second moments.
    pub fn covariance(&self) -> Result<CovarianceMatrix> {
        let mut aa = [[Complex64::ZERO; 3]; 3];
        let mut ad = [[Complex64::ZERO; 3]; 3];
        for j in 0..3 {
            for k in 0..3 {
                let mut lv = [0usize; 3];
                lv[j] += 1;
                lv[k] += 1;
                aa[j][k] = self.moment([0; 3], lv);
                let mut kv = [0usize; 3];
                let mut lv = [0usize; 3];
                kv[j] += 1;
                lv[k] += 1;
                ad[j][k] = self.moment(kv, lv);
            }
        }
        let mut v = DMatrix::zeros(6, 6);
        for j in 0..3 {
            for k in 0..3 {
                let ajak = aa[j][k];
                let adjak = ad[j][k];
                let adkaj = ad[k][j];
                let delta = if j == k { 1.0 } else { 0.0 };
                let xx = 2.0 * ajak.re + (adjak + adkaj).re + delta;
                let pp = -2.0 * ajak.re + (adjak + adkaj).re + delta;
                let xp = 2.0 * ajak.im + (adjak - adkaj).im;
                v[(2 * j, 2 * k)] += xx;
                v[(2 * j + 1, 2 * k + 1)] += pp;
                v[(2 * j, 2 * k + 1)] += xp;
                v[(2 * k + 1, 2 * j)] += xp;
            }
        }
        CovarianceMatrix::new(v)
    }

    /// Unnormalized components of the state after removing one photon from
    /// each subtracted mode, with ladder weights; plus the squared norm.
    fn subtracted_entries(&self, scheme: SubtractionScheme) -> (Vec<([usize; 3], Complex64)>, f64) {
        let mut entries = Vec::new();
        let mut trace = 0.0;
        for n1 in 0..=self.cutoff {
            'slice: for n3 in 0..=(self.cutoff - n1) {
                let amp = self.amps[(n1, n3)];
                if amp == Complex64::ZERO {
                    continue;
                }
                let mut occ = [n1, n1 + n3, n3];
                let mut weight = 1.0;
                for &m in scheme.subtracted() {
                    if occ[m] == 0 {
                        continue 'slice;
                    }
                    weight *= occ[m] as f64;
                    occ[m] -= 1;
                }
                let value = amp * weight.sqrt();
                trace += value.norm_sqr();
                entries.push((occ, value));
            }
        }
        (entries, trace)
    }

    /// Wigner function of the full state at one phase-space point, from the
    /// three-mode displaced-parity trace.
    pub fn wigner_point(&self, betas: [Complex64; 3]) -> f64 {
        let dim = self.cutoff + 1;
        let k1 = displaced_parity_kernel(2.0 * betas[0], dim);
        let k2 = displaced_parity_kernel(2.0 * betas[1], dim);
        let k3 = displaced_parity_kernel(2.0 * betas[2], dim);
        let mut total = Complex64::ZERO;
        for m1 in 0..=self.cutoff {
            for m3 in 0..=(self.cutoff - m1) {
                let bra = self.amps[(m1, m3)].conj();
                if bra == Complex64::ZERO {
                    continue;
                }
                for n1 in 0..=self.cutoff {
                    for n3 in 0..=(self.cutoff - n1) {
                        let ket = self.amps[(n1, n3)];
                        if ket == Complex64::ZERO {
                            continue;
                        }
                        total += bra
                            * ket
                            * k1[(m1, n1)]
                            * k2[(m1 + m3, n1 + n3)]
                            * k3[(m3, n3)];
                    }
                }
            }
        }
        (2.0 / std::f64::consts::PI).powi(3) * total.re
    }
}

pub fn moment_fock(state: &FockState, k: [usize; 3], l: [usize; 3]) -> Complex64 {
    state.moment(k, l)
}

/// The same moment from the analytic generating function: the coefficient
/// of the target monomial in the expansion of a nine-term exponential,
/// times the target factorials. Agrees with the Fock sum for any truncation
///-independent moment.
pub fn moment_generating(cfg: &SqueezingConfig, k: [usize; 3], l: [usize; 3]) -> Complex64 {
    let c = cfg.c();
    let s = cfg.s();
    let e1 = cfg.eps1();
    let e2 = cfg.eps2();
    let real = |x: f64| Complex64::new(x, 0.0);
    // exponent monomials in (mu1, mu2, mu3, nu1, nu2, nu3)
    let terms: [([usize; 6], Complex64); 9] = [
        ([1, 0, 0, 1, 0, 0], real(e1.norm_sqr())),
        ([0, 1, 0, 0, 1, 0], real(s * s)),
        ([0, 0, 1, 0, 0, 1], real(e2.norm_sqr())),
        ([1, 0, 0, 0, 0, 1], e1.conj() * e2),
        ([0, 0, 1, 1, 0, 0], e1 * e2.conj()),
        ([1, 1, 0, 0, 0, 0], -c * e1.conj()),
        ([0, 0, 0, 1, 1, 0], -c * e1),
        ([0, 1, 1, 0, 0, 0], -c * e2.conj()),
        ([0, 0, 0, 0, 1, 1], -c * e2),
    ];
    let target = [k[0], k[1], k[2], l[0], l[1], l[2]];

    fn expand(
        terms: &[([usize; 6], Complex64)],
        target: &[usize; 6],
        pow: [usize; 6],
        coef: Complex64,
        out: &mut Complex64,
    ) {
        match terms.split_first() {
            None => {
                if pow == *target {
                    *out += coef;
                }
            }
            Some(((key, kc), rest)) => {
                let mut m = 0usize;
                let mut term_coef = Complex64::new(1.0, 0.0);
                loop {
                    let mut next = pow;
                    let mut fits = true;
                    for d in 0..6 {
                        next[d] = pow[d] + m * key[d];
                        if next[d] > target[d] {
                            fits = false;
                            break;
                        }
                    }
                    if !fits {
                        break;
                    }
                    expand(rest, target, next, coef * term_coef, out);
                    m += 1;
                    term_coef *= kc / m as f64;
                }
            }
        }
    }

    let mut total = Complex64::ZERO;
    expand(&terms, &target, [0; 6], Complex64::new(1.0, 0.0), &mut total);
    let mut prod_fact = 1.0;
    for &x in &target {
        for j in 2..=x {
            prod_fact *= j as f64;
        }
    }
    total * prod_fact
}

/// Associated Laguerre L_n^(a)(x) by upward recurrence.
fn laguerre(n: usize, a: f64, x: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mut lm = 0.0;
    let mut l0 = 1.0;
    for k in 1..=n {
        let kf = k as f64;
        let l1 = ((2.0 * kf - 1.0 + a - x) * l0 - (kf - 1.0 + a) * lm) / kf;
        lm = l0;
        l0 = l1;
    }
    l0
}

/// Matrix K[m, n] = <m|D(alpha)|n> (-1)^n on a dim-dimensional truncation;
/// tracing rho against it (times (2/pi)^modes) evaluates the Wigner
/// function at alpha/2 per mode.
pub fn displaced_parity_kernel(alpha: Complex64, dim: usize) -> DMatrix<Complex64> {
    let lf = log_factorials(dim);
    let aa = alpha.norm_sqr();
    let mag = alpha.norm();
    let arg = alpha.arg();
    let mut k = DMatrix::zeros(dim, dim);
    for m in 0..dim {
        for n in 0..dim {
            let parity = if n % 2 == 0 { 1.0 } else { -1.0 };
            let d = m.abs_diff(n);
            if d > 0 && mag == 0.0 {
                continue;
            }
            let (lo, hi) = (m.min(n), m.max(n));
            let mut lm = 0.5 * (lf[lo] - lf[hi]) - aa / 2.0;
            if d > 0 {
                lm += d as f64 * mag.ln();
            }
            let lag = laguerre(lo, d as f64, aa);
            let phase = if m >= n {
                // alpha^d
                Complex64::from_polar(1.0, d as f64 * arg)
            } else {
                // (-conj(alpha))^d
                Complex64::from_polar(1.0, d as f64 * (std::f64::consts::PI - arg))
            };
            k[(m, n)] = phase * (parity * lm.exp() * lag);
        }
    }
    k
}

/// Reduced state of one kept mode after subtraction: exactly diagonal in
/// the number basis because the traced occupations pin the kept one.
#[derive(Debug, Clone)]
pub struct SingleModeState {
    probs: Vec<f64>,
    mode: usize,
    prefactor: f64,
}

impl SingleModeState {
    /// Normalized number-basis probabilities.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Kept mode (0-based).
    pub fn mode(&self) -> usize {
        self.mode
    }

    /// Squared norm of the subtracted state before renormalization: the
    /// relative weight of the heralded branch.
    pub fn prefactor(&self) -> f64 {
        self.prefactor
    }

    pub fn mean_photons(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(n, p)| n as f64 * p)
            .sum()
    }

    /// Wigner function; radially symmetric, so only |beta| matters.
    pub fn wigner(&self, beta: Complex64) -> f64 {
        let u = 4.0 * beta.norm_sqr();
        let mut total = 0.0;
        let mut lm = 0.0;
        let mut l0 = 1.0;
        let mut sign = 1.0;
        for (n, &p) in self.probs.iter().enumerate() {
            if n >= 1 {
                let nf = n as f64;
                let l1 = ((2.0 * nf - 1.0 - u) * l0 - (nf - 1.0) * lm) / nf;
                lm = l0;
                l0 = l1;
                sign = -sign;
            }
            total += p * sign * l0;
        }
        (2.0 / std::f64::consts::PI) * (-u / 2.0).exp() * total
    }
}

/// Reduced state of a kept mode pair after subtraction: block diagonal in
/// the traced occupation, one rank-1 block each.
#[derive(Debug, Clone)]
pub struct TwoModeBlocks {
    modes: (usize, usize),
    /// per traced occupation: (n_a, n_b, amplitude), normalized overall
    blocks: Vec<Vec<(usize, usize, Complex64)>>,
    prefactor: f64,
    /// whether n_a + n_b is constant within every block
    conserves_total: bool,
    dim: usize,
}

impl TwoModeBlocks {
    pub fn modes(&self) -> (usize, usize) {
        self.modes
    }

    pub fn prefactor(&self) -> f64 {
        self.prefactor
    }

    /// True when every block carries a fixed total photon number, which
    /// makes the state invariant under a common phase rotation.
    pub fn conserves_total(&self) -> bool {
        self.conserves_total
    }

    pub fn mean_photons(&self) -> (f64, f64) {
        let mut na = 0.0;
        let mut nb = 0.0;
        for block in &self.blocks {
            for &(a, b, amp) in block {
                let p = amp.norm_sqr();
                na += a as f64 * p;
                nb += b as f64 * p;
            }
        }
        (na, nb)
    }

    /// Wigner function from the two-mode displaced-parity trace.
    pub fn wigner(&self, beta_a: Complex64, beta_b: Complex64) -> f64 {
        let ka = displaced_parity_kernel(2.0 * beta_a, self.dim);
        let kb = displaced_parity_kernel(2.0 * beta_b, self.dim);
        self.wigner_with_kernels(&ka, &kb)
    }

    fn wigner_with_kernels(&self, ka: &DMatrix<Complex64>, kb: &DMatrix<Complex64>) -> f64 {
        let mut total = Complex64::ZERO;
        for block in &self.blocks {
            for &(ma, mb, am) in block {
                let bra = am.conj();
                for &(na, nb, an) in block {
                    total += bra * an * ka[(ma, na)] * kb[(mb, nb)];
                }
            }
        }
        (2.0 / std::f64::consts::PI).powi(2) * total.re
    }
}

/// Reduced state left by a subtraction scheme.
#[derive(Debug, Clone)]
pub enum ReducedState {
    Single(SingleModeState),
    Pair(TwoModeBlocks),
}

/// Applies the scheme to the truncated state: ladder-lowers the subtracted
/// modes, traces the discarded ones, renormalizes. Errors when a subtracted
/// mode carries no photons.
pub fn subtract_and_reduce(state: &FockState, scheme: SubtractionScheme) -> Result<ReducedState> {
    scheme.require_nonempty(&state.cfg.mean_photon_numbers())?;
    let (entries, trace) = state.subtracted_entries(scheme);
    if !(trace > 0.0) {
        return Err(Error::EmptySubtraction {
            scheme: scheme.label().to_string(),
            mode: scheme.subtracted()[0] + 1,
        });
    }
    let kept = scheme.kept();
    if kept.len() == 1 {
        let mode = kept[0];
        let mut probs = vec![0.0; state.cutoff + 2];
        for (occ, amp) in &entries {
            probs[occ[mode]] += amp.norm_sqr() / trace;
        }
        while probs.last() == Some(&0.0) && probs.len() > 1 {
            probs.pop();
        }
        Ok(ReducedState::Single(SingleModeState {
            probs,
            mode,
            prefactor: trace,
        }))
    } else {
        let (a, b) = (kept[0], kept[1]);
        let traced = scheme.traced()[0];
        let scale = 1.0 / trace.sqrt();
        let mut by_q: Vec<std::collections::BTreeMap<(usize, usize), Complex64>> =
            vec![Default::default(); state.cutoff + 2];
        let mut dim = 1;
        for (occ, amp) in &entries {
            *by_q[occ[traced]].entry((occ[a], occ[b])).or_default() += amp * scale;
            dim = dim.max(occ[a] + 1).max(occ[b] + 1);
        }
        let mut conserves = true;
        let blocks: Vec<Vec<(usize, usize, Complex64)>> = by_q
            .into_iter()
            .map(|m| {
                let block: Vec<_> = m.into_iter().map(|((na, nb), v)| (na, nb, v)).collect();
                if let Some(&(fa, fb, _)) = block.first() {
                    let total = fa + fb;
                    if block.iter().any(|&(na, nb, _)| na + nb != total) {
                        conserves = false;
                    }
                }
                block
            })
            .filter(|b| !b.is_empty())
            .collect();
        Ok(ReducedState::Pair(TwoModeBlocks {
            modes: (a, b),
            blocks,
            prefactor: trace,
            conserves_total: conserves,
            dim,
        }))
    }
}

/// Wigner function of a reduced state at one point; the slice length must
/// match the number of kept modes.
pub fn wigner_from_density(state: &ReducedState, betas: &[Complex64]) -> f64 {
    match state {
        ReducedState::Single(s) => {
            assert_eq!(betas.len(), 1, "single-mode state takes one amplitude");
            s.wigner(betas[0])
        }
        ReducedState::Pair(p) => {
            assert_eq!(betas.len(), 2, "two-mode state takes two amplitudes");
            p.wigner(betas[0], betas[1])
        }
    }
}

/// Grid controls for the oracle negativity integrals.
#[derive(Debug, Clone, Copy)]
pub struct OracleGrid {
    /// Gauss-Legendre points on each radial axis.
    pub radial_points: usize,
    /// Uniform points on the relative angle (pair states only).
    pub angle_points: usize,
    /// Radial extent in units of sqrt(1 + 2 nbar) per kept mode.
    pub radius_sigmas: f64,
    /// Single mode: refinement agreement required. Pair: allowed deviation
    /// of the total integral from 1.
    pub tol: f64,
}

impl OracleGrid {
    pub fn single_mode() -> Self {
        OracleGrid {
            radial_points: 256,
            angle_points: 1,
            radius_sigmas: 3.0,
            tol: 1e-5,
        }
    }

    pub fn pair() -> Self {
        OracleGrid {
            radial_points: 64,
            angle_points: 64,
            radius_sigmas: 3.0,
            tol: 1e-3,
        }
    }
}

/// Wigner negativity of a reduced state, integrated directly from parity
/// sums. Single-mode states use their radial symmetry; pair states must
/// conserve the total photon number per block, which reduces the integral
/// to two radii and a relative angle.
pub fn negativity_oracle(state: &ReducedState, grid: &OracleGrid) -> Result<f64> {
    match state {
        ReducedState::Single(s) => single_mode_negativity(s, grid),
        ReducedState::Pair(p) => pair_negativity(p, grid),
    }
}

fn single_mode_negativity(state: &SingleModeState, grid: &OracleGrid) -> Result<f64> {
    let radius = grid.radius_sigmas * (1.0 + 2.0 * state.mean_photons()).sqrt();
    let estimate = |n: usize| -> f64 {
        let (gx, gw) = gauss_legendre(n);
        let mut neg = 0.0;
        for (x, w) in gx.iter().zip(&gw) {
            let r = 0.5 * radius * (x + 1.0);
            let wr = 0.5 * radius * w * 2.0 * std::f64::consts::PI * r;
            let v = state.wigner(Complex64::new(r, 0.0));
            neg += wr * (v.abs() - v);
        }
        neg
    };
    let mut n = grid.radial_points.max(32);
    let mut prev = estimate(n);
    for _ in 0..4 {
        n *= 2;
        let cur = estimate(n);
        let delta = (cur - prev).abs();
        if delta < grid.tol {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::NonConvergence {
        previous: prev,
        last: prev,
        delta: f64::INFINITY,
        tol: grid.tol,
    })
}

fn pair_negativity(blocks: &TwoModeBlocks, grid: &OracleGrid) -> Result<f64> {
    if !blocks.conserves_total() {
        return Err(Error::Config(
            "pair oracle integration needs per-block photon-number conservation, \
             which only the subtract-middle-keep-outer reduction has"
                .into(),
        ));
    }
    let (na, nb) = blocks.mean_photons();
    let radius = grid.radius_sigmas * (1.0 + 2.0 * na.max(nb)).sqrt();
    let nr = grid.radial_points;
    let npsi = grid.angle_points;
    let (gx, gw) = gauss_legendre(nr);
    let radii: Vec<f64> = gx.iter().map(|x| 0.5 * radius * (x + 1.0)).collect();
    let rw: Vec<f64> = gw.iter().map(|w| 0.5 * radius * w).collect();
    // common-phase invariance: fix arg(beta_a) = 0, integrate the relative
    // angle uniformly, weight by 2 pi for the overall phase
    let ka: Vec<DMatrix<Complex64>> = radii
        .iter()
        .map(|&r| displaced_parity_kernel(Complex64::new(2.0 * r, 0.0), blocks.dim))
        .collect();
    let wpsi = 2.0 * std::f64::consts::PI / npsi as f64;
    let mut neg = 0.0;
    let mut total = 0.0;
    for ip in 0..npsi {
        let psi = wpsi * ip as f64;
        let kb: Vec<DMatrix<Complex64>> = radii
            .iter()
            .map(|&r| displaced_parity_kernel(Complex64::from_polar(2.0 * r, psi), blocks.dim))
            .collect();
        for (ia, ka_i) in ka.iter().enumerate() {
            let mut row_neg = 0.0;
            let mut row_tot = 0.0;
            for (ib, kb_i) in kb.iter().enumerate() {
                let w = blocks.wigner_with_kernels(ka_i, kb_i);
                let wt = rw[ib] * radii[ib] * w;
                row_tot += wt;
                row_neg += rw[ib] * radii[ib] * (w.abs() - w);
            }
            neg += rw[ia] * radii[ia] * row_neg;
            total += rw[ia] * radii[ia] * row_tot;
        }
    }
    let measure = 2.0 * std::f64::consts::PI * wpsi;
    neg *= measure;
    total *= measure;
    if (total - 1.0).abs() > grid.tol {
        return Err(Error::NonConvergence {
            previous: total,
            last: total,
            delta: (total - 1.0).abs(),
            tol: grid.tol,
        });
    }
    Ok(neg)
}

pub fn cm_from_fock(state: &FockState) -> Result<CovarianceMatrix> {
    state.covariance()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cm::c3msv_covariance;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use std::f64::consts::PI;

    fn cfg(nbar: f64, phi: f64, th1: f64, th2: f64) -> SqueezingConfig {
        SqueezingConfig::from_mean_photons(nbar, phi, th1, th2).unwrap()
    }

    fn anchor() -> SqueezingConfig {
        cfg(3.0, PI / 8.0, 0.0, 0.0)
    }

    #[test]
    fn auto_cutoff_meets_budget_tightly() {
        let c = anchor();
        let n = auto_cutoff(c.r(), 1e-8).unwrap();
        let t2 = c.r().tanh().powi(2);
        assert!(t2.powi(n as i32 + 1) < 1e-8);
        assert!(n == 0 || t2.powi(n as i32) >= 1e-8);
        assert_eq!(auto_cutoff(0.0, 1e-8).unwrap(), 0);
        assert!(auto_cutoff(1.0, 0.0).is_err());
    }

    #[test]
    fn truncation_defect_and_norm_agree() {
        let state = build_c3msv_fock(&anchor(), None, 1e-8).unwrap();
        let t2 = anchor().r().tanh().powi(2);
        assert_relative_eq!(
            state.defect(),
            t2.powi(state.cutoff() as i32 + 1),
            epsilon = 1e-15
        );
        assert_relative_eq!(state.norm(), 1.0 - state.defect(), epsilon = 1e-12);
    }

    #[test]
    fn explicit_cutoff_must_meet_budget() {
        let c = anchor();
        assert!(build_c3msv_fock(&c, Some(60), 1e-8).is_ok());
        let err = build_c3msv_fock(&c, Some(10), 1e-8).unwrap_err();
        assert!(matches!(err, Error::CutoffInsufficient { cutoff: 10, .. }), "{err}");
    }

    #[test]
    fn vacuum_state_is_a_single_amplitude() {
        let c = SqueezingConfig::from_r(0.0, 0.3, 0.0, 0.0).unwrap();
        let state = build_c3msv_fock(&c, None, 1e-8).unwrap();
        assert_eq!(state.cutoff(), 0);
        assert_relative_eq!(state.amplitude(0, 0).re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn low_moments_match_closed_expressions() {
        let c = cfg(3.0, PI / 8.0, 0.4, 1.1);
        let state = build_c3msv_fock(&c, None, 1e-12).unwrap();
        let n1 = state.moment([1, 0, 0], [1, 0, 0]);
        assert_abs_diff_eq!(n1.re, c.eps1().norm_sqr(), epsilon = 1e-10);
        assert_abs_diff_eq!(n1.im, 0.0, epsilon = 1e-12);
        let n2 = state.moment([0, 1, 0], [0, 1, 0]);
        assert_abs_diff_eq!(n2.re, c.s() * c.s(), epsilon = 1e-10);
        let a1a2 = state.moment([0, 0, 0], [1, 1, 0]);
        let expect = -c.s() * c.c() * c.phi().cos() * Complex64::from_polar(1.0, c.theta1());
        assert_abs_diff_eq!((a1a2 - expect).norm(), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn generating_function_matches_fock_sums() {
        let c = cfg(3.0, PI / 8.0, 0.3, 0.7);
        // deep cutoff: degree-3 moments weight the truncated tail by n^3
        let state = build_c3msv_fock(&c, Some(90), 1e-8).unwrap();
        let cases: [([usize; 3], [usize; 3]); 5] = [
            ([1, 0, 0], [1, 0, 0]),
            ([0, 0, 0], [1, 1, 0]),
            ([1, 0, 0], [0, 0, 1]),
            ([2, 1, 0], [1, 1, 1]),
            ([1, 1, 1], [1, 1, 1]),
        ];
        for (k, l) in cases {
            let mf = state.moment(k, l);
            let mg = moment_generating(&c, k, l);
            assert!(
                (mf - mg).norm() < 1e-9,
                "k={k:?} l={l:?}: fock {mf} vs generating {mg}"
            );
        }
    }

    #[test]
    fn covariance_binds_to_the_analytic_matrix() {
        let c = cfg(3.0, PI / 8.0, 0.3, 0.7);
        let state = build_c3msv_fock(&c, None, 1e-13).unwrap();
        let vf = state.covariance().unwrap().into_matrix();
        let va = c3msv_covariance(&c).into_matrix();
        let diff = (vf - va).abs().max();
        assert!(diff < 1e-9, "max deviation {diff:.3e}");
    }

    #[test]
    fn heralding_prefactors_match_closed_values() {
        let c = anchor();
        let state = build_c3msv_fock(&c, Some(90), 1e-8).unwrap();
        let w0 = c.c() * c.c() + c.s() * c.s();
        let checks: [(&str, f64); 6] = [
            ("1a|2", c.eps1().norm_sqr()),
            ("2a|13", c.s() * c.s()),
            ("3a|12", c.eps2().norm_sqr()),
            ("1a3a|2", 2.0 * c.eps1().norm_sqr() * c.eps2().norm_sqr()),
            ("2a3a|1", w0 * c.eps2().norm_sqr()),
            ("1a2a|3", w0 * c.eps1().norm_sqr()),
        ];
        for (label, expect) in checks {
            let scheme = SubtractionScheme::from_label(label).unwrap();
            let prefactor = match subtract_and_reduce(&state, scheme).unwrap() {
                ReducedState::Single(s) => s.prefactor(),
                ReducedState::Pair(p) => p.prefactor(),
            };
            assert_abs_diff_eq!(prefactor, expect, epsilon = 1e-9);
        }
    }

    #[test]
    fn parity_kernel_reproduces_elementary_wigner_values() {
        // vacuum: W(beta) = (2/pi) exp(-2|beta|^2); one photon: W(0) = -2/pi
        let beta = Complex64::new(0.4, -0.3);
        let k = displaced_parity_kernel(2.0 * beta, 4);
        let w_vac = (2.0 / PI) * k[(0, 0)].re;
        assert_relative_eq!(w_vac, (2.0 / PI) * (-2.0 * beta.norm_sqr()).exp(), epsilon = 1e-12);
        let k0 = displaced_parity_kernel(Complex64::ZERO, 4);
        assert_relative_eq!((2.0 / PI) * k0[(1, 1)].re, -2.0 / PI, epsilon = 1e-14);
        // kernel is the adjoint under swapping bra and ket with alpha -> -alpha
        let kr = displaced_parity_kernel(-2.0 * beta, 4);
        for m in 0..4 {
            for n in 0..4 {
                let parity_flip = if (m + n) % 2 == 0 { 1.0 } else { -1.0 };
                assert_abs_diff_eq!(
                    (k[(m, n)] - parity_flip * kr[(n, m)].conj()).norm(),
                    0.0,
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn single_mode_wigner_is_radial_parity_sum() {
        let state = SingleModeState {
            probs: vec![0.0, 1.0],
            mode: 0,
            prefactor: 1.0,
        };
        assert_relative_eq!(state.wigner(Complex64::ZERO), -2.0 / PI, epsilon = 1e-14);
        // |1>: W(r) = (2/pi)(4r^2 - 1) e^{-2 r^2}
        let r = 0.7;
        assert_relative_eq!(
            state.wigner(Complex64::new(r, 0.0)),
            (2.0 / PI) * (4.0 * r * r - 1.0) * (-2.0 * r * r).exp(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn subtraction_errors_on_empty_modes() {
        let c = cfg(3.0, 0.0, 0.0, 0.0);
        let state = build_c3msv_fock(&c, None, 1e-8).unwrap();
        let err = subtract_and_reduce(&state, SubtractionScheme::from_label("3a|12").unwrap())
            .unwrap_err();
        assert!(matches!(err, Error::EmptySubtraction { mode: 3, .. }), "{err}");
    }

    #[test]
    fn reduced_single_mode_states_match_closed_form_wigner() {
        let c = cfg(3.0, PI / 8.0, 0.3, 0.7);
        let state = build_c3msv_fock(&c, Some(40), 1e-3).unwrap();
        for label in ["1a|2", "2a|1", "2a|3", "3a|1", "1a|3", "1a3a|2", "2a3a|1", "1a2a|3", "3a|2"] {
            let scheme = SubtractionScheme::from_label(label).unwrap();
            let reduced = subtract_and_reduce(&state, scheme).unwrap();
            let analytic = crate::wigner::wigner_closed_form(&c, scheme).unwrap();
            for (x, y) in [(0.0, 0.0), (0.5, -0.4), (1.1, 0.2)] {
                let beta = Complex64::new(x, y);
                let wf = wigner_from_density(&reduced, &[beta]);
                let wa = analytic.eval(&[x, y]);
                assert!(
                    (wf - wa).abs() < 1e-6,
                    "{label} at ({x}, {y}): fock {wf} vs closed form {wa}"
                );
            }
        }
    }

    #[test]
    fn reduced_pair_states_match_closed_form_wigner() {
        let c = cfg(3.0, PI / 8.0, 0.3, 0.7);
        let state = build_c3msv_fock(&c, Some(40), 1e-3).unwrap();
        for label in ["1a|23", "2a|13", "3a|12"] {
            let scheme = SubtractionScheme::from_label(label).unwrap();
            let reduced = subtract_and_reduce(&state, scheme).unwrap();
            let analytic = crate::wigner::wigner_closed_form(&c, scheme).unwrap();
            for (ba, bb) in [
                (Complex64::new(0.2, 0.1), Complex64::new(0.3, -0.2)),
                (Complex64::new(-0.5, 0.4), Complex64::new(0.1, 0.3)),
            ] {
                let wf = wigner_from_density(&reduced, &[ba, bb]);
                let wa = analytic.eval_complex(&[ba, bb]);
                assert!(
                    (wf - wa).abs() < 1e-6,
                    "{label} at ({ba}, {bb}): fock {wf} vs closed form {wa}"
                );
            }
        }
    }

    #[test]
    fn three_mode_wigner_matches_closed_form() {
        let c = cfg(2.0, PI / 8.0, 0.3, 0.7);
        let state = build_c3msv_fock(&c, Some(28), 1e-3).unwrap();
        let analytic = crate::wigner::wigner_c3msv(&c);
        for betas in [
            [
                Complex64::new(0.2, -0.1),
                Complex64::new(0.3, 0.2),
                Complex64::new(-0.1, 0.1),
            ],
            [Complex64::ZERO, Complex64::ZERO, Complex64::ZERO],
        ] {
            let wf = state.wigner_point(betas);
            let wa = analytic.eval_complex(&betas);
            assert_abs_diff_eq!(wf, wa, epsilon = 1e-6);
        }
    }

    #[test]
    fn radial_oracle_negativity_matches_quadrature_anchor() {
        let state = build_c3msv_fock(&anchor(), None, 1e-10).unwrap();
        let reduced =
            subtract_and_reduce(&state, SubtractionScheme::from_label("1a|2").unwrap()).unwrap();
        let neg = negativity_oracle(&reduced, &OracleGrid::single_mode()).unwrap();
        assert_abs_diff_eq!(neg, 0.046826882695, epsilon = 2e-5);
    }

    #[test]
    fn pair_oracle_negativity_matches_quadrature_anchor() {
        let state = build_c3msv_fock(&anchor(), Some(28), 1e-6).unwrap();
        let reduced =
            subtract_and_reduce(&state, SubtractionScheme::from_label("2a|13").unwrap()).unwrap();
        let neg = negativity_oracle(&reduced, &OracleGrid::pair()).unwrap();
        assert_abs_diff_eq!(neg, 0.046826882695, epsilon = 2e-4);
    }

    #[test]
    fn pair_oracle_requires_total_conservation() {
        let state = build_c3msv_fock(&anchor(), Some(20), 1e-2).unwrap();
        let reduced =
            subtract_and_reduce(&state, SubtractionScheme::from_label("1a|23").unwrap()).unwrap();
        if let ReducedState::Pair(p) = &reduced {
            assert!(!p.conserves_total());
        } else {
            panic!("kept pair expected");
        }
        assert!(matches!(
            negativity_oracle(&reduced, &OracleGrid::pair()),
            Err(Error::Config(_))
        ));
        let middle =
            subtract_and_reduce(&state, SubtractionScheme::from_label("2a|13").unwrap()).unwrap();
        if let ReducedState::Pair(p) = &middle {
            assert!(p.conserves_total());
        } else {
            panic!("kept pair expected");
        }
    }
}
