use crate::config::SqueezingConfig;
use crate::error::{Error, Result};
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

pub const SYMMETRY_TOL: f64 = 1e-12;
pub const UNCERTAINTY_TOL: f64 = 1e-10;
/// Steered-block condition-number guard for Schur complements.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Symplectic form for n modes in (x1, p1, x2, p2, ...) ordering.
pub fn omega(n_modes: usize) -> DMatrix<f64> {
    let mut w = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for j in 0..n_modes {
        w[(2 * j, 2 * j + 1)] = 1.0;
        w[(2 * j + 1, 2 * j)] = -1.0;
    }
    w
}

/// Validated covariance matrix (vacuum = identity convention).
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    m: DMatrix<f64>,
}

impl CovarianceMatrix {
    /// Checks shape, symmetry and the uncertainty bound V + i*Omega >= 0.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 || m.nrows() % 2 != 0 {
            return Err(Error::InvalidCovariance(format!(
                "expected a nonempty 2n x 2n matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let asym = (&m - m.transpose()).abs().max();
        if !(asym <= SYMMETRY_TOL) {
            return Err(Error::InvalidCovariance(format!(
                "asymmetry {asym:.3e} exceeds {SYMMETRY_TOL:.0e}"
            )));
        }
        let n = m.nrows() / 2;
        let mut h = DMatrix::<Complex64>::zeros(2 * n, 2 * n);
        let w = omega(n);
        for i in 0..2 * n {
            for j in 0..2 * n {
                h[(i, j)] = Complex64::new(m[(i, j)], w[(i, j)]);
            }
        }
        let min_eig = SymmetricEigen::new(h)
            .eigenvalues
            .iter()
            .fold(f64::INFINITY, |a, &b| a.min(b));
        // eigenvalue noise scales with the matrix norm
        let bound = UNCERTAINTY_TOL * m.abs().max().max(1.0);
        if !(min_eig >= -bound) {
            return Err(Error::InvalidCovariance(format!(
                "uncertainty bound violated: min eig(V + i*Omega) = {min_eig:.3e}"
            )));
        }
        Ok(Self { m })
    }

    pub fn n_modes(&self) -> usize {
        self.m.nrows() / 2
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }
}

/// Bipartition (steering party A, steered party B) of mode indices, 0-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    a: Vec<usize>,
    b: Vec<usize>,
}

impl Partition {
    pub fn new(a: Vec<usize>, b: Vec<usize>) -> Result<Self> {
        if a.is_empty() || b.is_empty() {
            return Err(Error::InvalidPartition(
                "both parties must be nonempty".into(),
            ));
        }
        for side in [&a, &b] {
            if side.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidPartition(
                    "mode lists must be strictly ascending".into(),
                ));
            }
        }
        if a.iter().any(|i| b.contains(i)) {
            return Err(Error::InvalidPartition("parties must be disjoint".into()));
        }
        Ok(Self { a, b })
    }

    pub fn steering(&self) -> &[usize] {
        &self.a
    }

    pub fn steered(&self) -> &[usize] {
        &self.b
    }

    pub fn max_mode(&self) -> usize {
        *self.a.iter().chain(&self.b).max().unwrap()
    }
}

/// Covariance matrix of the coupled three-mode squeezed vacuum.
pub fn c3msv_covariance(cfg: &SqueezingConfig) -> CovarianceMatrix {
    let (c, s) = (cfg.c(), cfg.s());
    let (sin_phi, cos_phi) = cfg.phi().sin_cos();
    let n = cfg.mean_photon_numbers();
    let mut v = DMatrix::zeros(6, 6);
    for (j, nbar) in [n.n1, n.n2, n.n3].iter().enumerate() {
        v[(2 * j, 2 * j)] = 1.0 + 2.0 * nbar;
        v[(2 * j + 1, 2 * j + 1)] = 1.0 + 2.0 * nbar;
    }
    // coupling blocks: reflection-type between neighbours, rotation-type between 1 and 3
    set_block(&mut v, 0, 1, &reflection(cfg.theta1()), -2.0 * s * c * cos_phi);
    set_block(&mut v, 1, 2, &reflection(cfg.theta2()), -2.0 * s * c * sin_phi);
    set_block(
        &mut v,
        0,
        2,
        &rotation(cfg.theta2() - cfg.theta1()),
        s * s * 2.0 * sin_phi * cos_phi,
    );
    CovarianceMatrix::new(v).expect("construction yields a valid covariance matrix")
}

fn reflection(theta: f64) -> [[f64; 2]; 2] {
    let (sn, cs) = theta.sin_cos();
    [[cs, sn], [sn, -cs]]
}

fn rotation(theta: f64) -> [[f64; 2]; 2] {
    let (sn, cs) = theta.sin_cos();
    [[cs, sn], [-sn, cs]]
}

fn set_block(v: &mut DMatrix<f64>, j: usize, k: usize, b: &[[f64; 2]; 2], scale: f64) {
    for r in 0..2 {
        for c in 0..2 {
            v[(2 * j + r, 2 * k + c)] = scale * b[r][c];
            v[(2 * k + c, 2 * j + r)] = scale * b[r][c];
        }
    }
}

/// Principal submatrix on the listed modes (ascending, 0-based).
pub fn sub_cm(v: &CovarianceMatrix, modes: &[usize]) -> Result<CovarianceMatrix> {
    if modes.is_empty() || modes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidPartition(
            "mode list must be nonempty and strictly ascending".into(),
        ));
    }
    if *modes.last().unwrap() >= v.n_modes() {
        return Err(Error::InvalidPartition(format!(
            "mode {} out of range for {} modes",
            modes.last().unwrap(),
            v.n_modes()
        )));
    }
    let idx: Vec<usize> = modes.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect();
    let sub = DMatrix::from_fn(idx.len(), idx.len(), |i, j| v.matrix()[(idx[i], idx[j])]);
    CovarianceMatrix::new(sub)
}

/// Conditional covariance of party B after a Gaussian measurement on party A:
/// sigma_{B|A} = V_B - V_AB^T V_A^{-1} V_AB.
pub fn schur_complement(v: &CovarianceMatrix, p: &Partition) -> Result<DMatrix<f64>> {
    if p.max_mode() >= v.n_modes() {
        return Err(Error::InvalidPartition(format!(
            "partition references mode {} but the matrix has {} modes",
            p.max_mode(),
            v.n_modes()
        )));
    }
    let rows = |modes: &[usize]| -> Vec<usize> {
        modes.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect()
    };
    let (ia, ib) = (rows(p.steering()), rows(p.steered()));
    let m = v.matrix();
    let va = DMatrix::from_fn(ia.len(), ia.len(), |i, j| m[(ia[i], ia[j])]);
    let vb = DMatrix::from_fn(ib.len(), ib.len(), |i, j| m[(ib[i], ib[j])]);
    let vab = DMatrix::from_fn(ia.len(), ib.len(), |i, j| m[(ia[i], ib[j])]);

    let eig = SymmetricEigen::new(va.clone()).eigenvalues;
    let max_a = eig.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let min_a = eig.iter().fold(f64::INFINITY, |a, &b| a.min(b.abs()));
    let kappa = if min_a > 0.0 { max_a / min_a } else { f64::INFINITY };
    if kappa > CONDITION_LIMIT {
        return Err(Error::IllConditioned { kappa });
    }
    let chol = va
        .cholesky()
        .ok_or(Error::IllConditioned { kappa })?;
    let solved = chol.solve(&vab);
    Ok(vb - vab.transpose() * solved)
}

/// Symplectic spectrum of a symmetric 2n x 2n matrix: the moduli of the
/// eigenvalues of i*Omega*m, one per +/- pair, ascending.
pub fn symplectic_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let k = omega(m.nrows() / 2) * sym;
    let mut moduli: Vec<f64> = k.complex_eigenvalues().iter().map(|z| z.norm()).collect();
    moduli.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // conjugate pairs have bitwise-equal moduli; keep one of each
    moduli.into_iter().step_by(2).collect()
}
