use crate::error::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Parameters of the coupled three-mode squeezed vacuum.
///
/// `r` is the overall squeezing strength, split over the two pump
/// interactions as r1 = r cos(phi) and r2 = r sin(phi); theta1 and theta2
/// are the pump phases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezingConfig {
    r: f64,
    phi: f64,
    theta1: f64,
    theta2: f64,
}

/// Per-mode and total mean photon numbers of the state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanPhotonNumbers {
    pub n1: f64,
    pub n2: f64,
    pub n3: f64,
    pub total: f64,
}

impl SqueezingConfig {
    pub fn from_r(r: f64, phi: f64, theta1: f64, theta2: f64) -> Result<Self> {
        if !r.is_finite() || r < 0.0 {
            return Err(Error::Config(format!("r must be finite and >= 0, got {r}")));
        }
        if !phi.is_finite() || !(0.0..=PI / 2.0).contains(&phi) {
            return Err(Error::Config(format!(
                "phi must lie in [0, pi/2], got {phi}"
            )));
        }
        for (name, th) in [("theta1", theta1), ("theta2", theta2)] {
            if !th.is_finite() || !(0.0..2.0 * PI).contains(&th) {
                return Err(Error::Config(format!(
                    "{name} must lie in [0, 2*pi), got {th}"
                )));
            }
        }
        Ok(Self {
            r,
            phi,
            theta1,
            theta2,
        })
    }

    /// Same state parametrized by the total mean photon number 2 sinh^2(r).
    pub fn from_mean_photons(nbar_total: f64, phi: f64, theta1: f64, theta2: f64) -> Result<Self> {
        if !nbar_total.is_finite() || nbar_total < 0.0 {
            return Err(Error::Config(format!(
                "nbar_total must be finite and >= 0, got {nbar_total}"
            )));
        }
        let r = (nbar_total / 2.0).sqrt().asinh();
        Self::from_r(r, phi, theta1, theta2)
    }

    pub fn r(&self) -> f64 {
        self.r
    }
    pub fn phi(&self) -> f64 {
        self.phi
    }
    pub fn theta1(&self) -> f64 {
        self.theta1
    }
    pub fn theta2(&self) -> f64 {
        self.theta2
    }

    /// cosh r
    pub fn c(&self) -> f64 {
        self.r.cosh()
    }
    /// sinh r
    pub fn s(&self) -> f64 {
        self.r.sinh()
    }
    /// Squeezing strength of the first interaction, r cos(phi).
    pub fn r1(&self) -> f64 {
        self.r * self.phi.cos()
    }
    /// Squeezing strength of the second interaction, r sin(phi).
    pub fn r2(&self) -> f64 {
        self.r * self.phi.sin()
    }
    /// s e^{i theta1} cos(phi)
    pub fn eps1(&self) -> Complex64 {
        Complex64::from_polar(self.s() * self.phi.cos(), self.theta1)
    }
    /// s e^{i theta2} sin(phi)
    pub fn eps2(&self) -> Complex64 {
        Complex64::from_polar(self.s() * self.phi.sin(), self.theta2)
    }
    /// Total mean photon number 2 sinh^2(r).
    pub fn nbar_total(&self) -> f64 {
        2.0 * self.s() * self.s()
    }

    pub fn mean_photon_numbers(&self) -> MeanPhotonNumbers {
        let s2 = self.s() * self.s();
        let (sin_phi, cos_phi) = self.phi.sin_cos();
        MeanPhotonNumbers {
            n1: s2 * cos_phi * cos_phi,
            n2: s2,
            n3: s2 * sin_phi * sin_phi,
            total: 2.0 * s2,
        }
    }

    /// Shorthand weights that control every closed form:
    /// w0 = cosh(2r), w1 = c^2 - s^2 cos(2 phi), w2 = c^2 + s^2 cos(2 phi).
    pub fn weights(&self) -> (f64, f64, f64) {
        let c2 = self.c() * self.c();
        let s2 = self.s() * self.s();
        let cos2phi = (2.0 * self.phi).cos();
        (c2 + s2, c2 - s2 * cos2phi, c2 + s2 * cos2phi)
    }
}

/// Convenience op mirroring the accessor; kept as a free function for CLI use.
pub fn mean_photon_numbers(cfg: &SqueezingConfig) -> MeanPhotonNumbers {
    cfg.mean_photon_numbers()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn mean_photon_roundtrip() {
        for nbar in [0.0, 0.5, 1.0, 2.0, 3.0, 10.0, 20.0] {
            let cfg = SqueezingConfig::from_mean_photons(nbar, 0.3, 0.0, 0.0).unwrap();
            assert_abs_diff_eq!(cfg.nbar_total(), nbar, epsilon = 1e-12);
        }
    }

    #[test]
    fn per_mode_examples() {
        let cfg = SqueezingConfig::from_mean_photons(2.0, PI / 4.0, 0.0, 0.0).unwrap();
        let n = cfg.mean_photon_numbers();
        assert_abs_diff_eq!(n.n1, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(n.n2, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(n.n3, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(n.total, 2.0, epsilon = 1e-12);

        let cfg0 = SqueezingConfig::from_mean_photons(2.0, 0.0, 0.0, 0.0).unwrap();
        let n0 = cfg0.mean_photon_numbers();
        assert_abs_diff_eq!(n0.n1, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(n0.n2, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(n0.n3, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn split_strengths() {
        let cfg = SqueezingConfig::from_r(1.2, 0.4, 1.0, 2.0).unwrap();
        assert_abs_diff_eq!(
            cfg.r1().hypot(cfg.r2()),
            1.2,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(cfg.eps1().norm(), cfg.s() * 0.4f64.cos(), epsilon = 1e-14);
        assert_abs_diff_eq!(cfg.eps2().arg(), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn rejects_bad_ranges() {
        assert!(SqueezingConfig::from_r(-0.1, 0.0, 0.0, 0.0).is_err());
        assert!(SqueezingConfig::from_r(f64::NAN, 0.0, 0.0, 0.0).is_err());
        assert!(SqueezingConfig::from_r(1.0, -0.1, 0.0, 0.0).is_err());
        assert!(SqueezingConfig::from_r(1.0, PI, 0.0, 0.0).is_err());
        assert!(SqueezingConfig::from_r(1.0, 0.0, 7.0, 0.0).is_err());
        assert!(SqueezingConfig::from_r(1.0, 0.0, 0.0, -1.0).is_err());
        assert!(SqueezingConfig::from_mean_photons(-1.0, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn weights_identities() {
        let cfg = SqueezingConfig::from_mean_photons(3.0, PI / 8.0, 0.0, 0.0).unwrap();
        let (w0, w1, w2) = cfg.weights();
        let s2 = cfg.s() * cfg.s();
        assert_abs_diff_eq!(w0, (2.0 * cfg.r()).cosh(), epsilon = 1e-12);
        assert_abs_diff_eq!(w1 + w2, 2.0 * cfg.c() * cfg.c(), epsilon = 1e-12);
        // 1 + 2 nbar_1 = w2 and 1 + 2 nbar_3 = w1
        let n = cfg.mean_photon_numbers();
        assert_abs_diff_eq!(1.0 + 2.0 * n.n1, w2, epsilon = 1e-12);
        assert_abs_diff_eq!(1.0 + 2.0 * n.n3, w1, epsilon = 1e-12);
        assert_abs_diff_eq!(1.0 + 2.0 * s2, w0, epsilon = 1e-12);
    }
}
