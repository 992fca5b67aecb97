use crate::cm::{c3msv_covariance, CovarianceMatrix};
use crate::config::SqueezingConfig;
use crate::error::{Error, Result};
use crate::steering::{gaussian_steering, SteeringCase};

pub const DEFAULT_DEATH_TOL: f64 = 1e-8;
/// Bracket expansion gives up once T exceeds this multiple of 1/gamma_max.
const BRACKET_CAP: f64 = 1e4;

/// Three independent thermal-loss reservoirs, one per mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    gamma: [f64; 3],
    n_r: [f64; 3],
}

impl ChannelParams {
    pub fn new(gamma: [f64; 3], n_r: [f64; 3]) -> Result<Self> {
        for g in gamma {
            if !g.is_finite() || g < 0.0 {
                return Err(Error::Config(format!(
                    "loss rates must be finite and >= 0, got {g}"
                )));
            }
        }
        for n in n_r {
            if !n.is_finite() || n < 0.0 {
                return Err(Error::Config(format!(
                    "reservoir occupations must be finite and >= 0, got {n}"
                )));
            }
        }
        Ok(Self { gamma, n_r })
    }

    /// All three modes coupled identically.
    pub fn uniform(gamma: f64, n_r: f64) -> Result<Self> {
        Self::new([gamma; 3], [n_r; 3])
    }

    pub fn gamma(&self) -> [f64; 3] {
        self.gamma
    }
    pub fn n_r(&self) -> [f64; 3] {
        self.n_r
    }
    pub fn gamma_max(&self) -> f64 {
        self.gamma.iter().cloned().fold(0.0, f64::max)
    }
}

/// Moment damping law for zero-mean Gaussian states:
/// V(t) = D V0 D + (I - D^2) R with D = diag(e^{-gamma_j t}) per mode and
/// R = diag(1 + 2 n_Rj). Signal populations decay; reservoir noise fills in.
pub fn evolve_cm_from(v0: &CovarianceMatrix, ch: &ChannelParams, t: f64) -> Result<CovarianceMatrix> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::Config(format!("time must be finite and >= 0, got {t}")));
    }
    if v0.n_modes() != 3 {
        return Err(Error::InvalidCovariance(format!(
            "channel acts on 3 modes, matrix has {}",
            v0.n_modes()
        )));
    }
    let d: Vec<f64> = ch.gamma.iter().map(|g| (-g * t).exp()).collect();
    let mut m = v0.matrix().clone();
    for i in 0..6 {
        for j in 0..6 {
            m[(i, j)] *= d[i / 2] * d[j / 2];
        }
    }
    for j in 0..3 {
        let fill = (1.0 - d[j] * d[j]) * (1.0 + 2.0 * ch.n_r[j]);
        m[(2 * j, 2 * j)] += fill;
        m[(2 * j + 1, 2 * j + 1)] += fill;
    }
    CovarianceMatrix::new(m)
}

/// State of the coupled three-mode squeezed vacuum after time t in the channel.
pub fn evolve_cm(cfg: &SqueezingConfig, ch: &ChannelParams, t: f64) -> Result<CovarianceMatrix> {
    evolve_cm_from(&c3msv_covariance(cfg), ch, t)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteeringTrajectory {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub case: SteeringCase,
    pub channel: ChannelParams,
}

pub fn steering_vs_time(
    cfg: &SqueezingConfig,
    ch: &ChannelParams,
    case: SteeringCase,
    times: &[f64],
) -> Result<SteeringTrajectory> {
    if times.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("time grid must be strictly ascending".into()));
    }
    let partition = case.partition();
    let mut values = Vec::with_capacity(times.len());
    for &t in times {
        let v = evolve_cm(cfg, ch, t)?;
        values.push(gaussian_steering(&v, &partition)?.value);
    }
    Ok(SteeringTrajectory {
        times: times.to_vec(),
        values,
        case,
        channel: *ch,
    })
}

/// First time at which the steering hits zero, to resolution `tol`, or None
/// if it stays positive up to the bracket cap. Returns Some(0) when the
/// steering already vanishes at t=0.
pub fn sudden_death_time(
    cfg: &SqueezingConfig,
    ch: &ChannelParams,
    case: SteeringCase,
    tol: f64,
) -> Result<Option<f64>> {
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(Error::Config(format!("tol must be positive, got {tol}")));
    }
    let partition = case.partition();
    let g_at = |t: f64| -> Result<f64> {
        Ok(gaussian_steering(&evolve_cm(cfg, ch, t)?, &partition)?.value)
    };
    if g_at(0.0)? <= 0.0 {
        return Ok(Some(0.0));
    }
    let gmax = ch.gamma_max();
    if gmax == 0.0 {
        return Ok(None); // nothing decays
    }
    let cap = BRACKET_CAP / gmax;
    let mut hi = 0.05 / gmax;
    while g_at(hi)? > 0.0 {
        hi *= 2.0;
        if hi > cap {
            return Ok(None);
        }
    }
    let mut lo = if hi <= 0.05 / gmax { 0.0 } else { hi / 2.0 };
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if g_at(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // hi is on the dead side: G(hi) = 0 and G(hi - tol) was still positive
    Ok(Some(hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;
    use std::f64::consts::PI;

    fn cfg() -> SqueezingConfig {
        SqueezingConfig::from_mean_photons(3.0, PI / 8.0, 0.0, 0.0).unwrap()
    }

    #[test]
    fn t_zero_is_initial_state() {
        let c = cfg();
        let ch = ChannelParams::uniform(1.0, 0.5).unwrap();
        let v0 = c3msv_covariance(&c);
        let vt = evolve_cm(&c, &ch, 0.0).unwrap();
        assert_abs_diff_eq!((v0.matrix() - vt.matrix()).abs().max(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn long_time_thermalizes() {
        let c = cfg();
        let ch = ChannelParams::new([1.0; 3], [0.0, 0.5, 1.0]).unwrap();
        let vt = evolve_cm(&c, &ch, 50.0).unwrap();
        let mut expect = DMatrix::identity(6, 6);
        for (j, nr) in [0.0, 0.5, 1.0].iter().enumerate() {
            expect[(2 * j, 2 * j)] = 1.0 + 2.0 * nr;
            expect[(2 * j + 1, 2 * j + 1)] = 1.0 + 2.0 * nr;
        }
        assert_abs_diff_eq!((vt.matrix() - expect).abs().max(), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn vacuum_with_vacuum_reservoir_is_invariant() {
        let c = SqueezingConfig::from_r(0.0, 0.2, 0.0, 0.0).unwrap();
        let ch = ChannelParams::uniform(1.3, 0.0).unwrap();
        for t in [0.0, 0.4, 2.0, 30.0] {
            let vt = evolve_cm(&c, &ch, t).unwrap();
            assert_abs_diff_eq!(
                (vt.matrix() - DMatrix::identity(6, 6)).abs().max(),
                0.0,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn semigroup_composition() {
        let c = cfg();
        let ch = ChannelParams::new([1.0, 2.0, 0.5], [0.0, 0.3, 0.1]).unwrap();
        for (t1, t2) in [(0.1, 0.2), (0.05, 0.5), (1.0, 1.5)] {
            let once = evolve_cm(&c, &ch, t1 + t2).unwrap();
            let twice = evolve_cm_from(&evolve_cm(&c, &ch, t1).unwrap(), &ch, t2).unwrap();
            assert_abs_diff_eq!(
                (once.matrix() - twice.matrix()).abs().max(),
                0.0,
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn evolved_state_stays_physical() {
        let c = cfg();
        let ch = ChannelParams::new([1.0, 0.2, 3.0], [2.0, 0.0, 0.7]).unwrap();
        for t in [0.01, 0.1, 0.5, 2.0, 10.0] {
            // constructor re-validates V + i*Omega >= 0
            evolve_cm(&c, &ch, t).unwrap();
        }
    }

    // Curve samples frozen from an independent implementation of the same
    // moment law (gamma common = 1, case 23to1, nbar_total=3, phi=pi/8).
    #[test]
    fn trajectory_reference_samples() {
        let c = cfg();
        let times = [0.05, 0.1, 0.2, 0.3];
        let expect_by_nr: [(f64, [f64; 4]); 3] = [
            (0.0, [1.610222822906, 1.069396943275, 0.448493397956, 0.107446199478]),
            (0.5, [0.927684486352, 0.193246679063, 0.0, 0.0]),
            (1.0, [0.440617299798, 0.0, 0.0, 0.0]),
        ];
        for (nr, expect) in expect_by_nr {
            let ch = ChannelParams::uniform(1.0, nr).unwrap();
            let traj =
                steering_vs_time(&c, &ch, SteeringCase::TwoThreeToOne, &times).unwrap();
            for (v, e) in traj.values.iter().zip(expect) {
                assert_abs_diff_eq!(*v, e, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn death_times_reference() {
        let c = cfg();
        let expect = [(0.0, 0.346573590), (0.5, 0.119030287), (1.0, 0.072922716)];
        let mut prev = f64::INFINITY;
        for (nr, t_star) in expect {
            let ch = ChannelParams::uniform(1.0, nr).unwrap();
            let t = sudden_death_time(&c, &ch, SteeringCase::TwoThreeToOne, 1e-8)
                .unwrap()
                .unwrap();
            assert_abs_diff_eq!(t, t_star, epsilon = 1e-6);
            assert!(t < prev, "threshold must shrink with reservoir noise");
            prev = t;
        }
    }

    #[test]
    fn death_times_other_cases() {
        let c = cfg();
        let ch = ChannelParams::uniform(1.0, 0.5).unwrap();
        for (case, expect) in [
            (SteeringCase::TwoToOne, 0.117654845),
            (SteeringCase::OneThreeToTwo, 0.124944221),
            (SteeringCase::OneToTwoThree, 0.112524738),
        ] {
            let t = sudden_death_time(&c, &ch, case, 1e-8).unwrap().unwrap();
            assert_abs_diff_eq!(t, expect, epsilon = 1e-6);
        }
    }

    #[test]
    fn death_time_unequal_rates() {
        let c = cfg();
        let ch = ChannelParams::new([1.0, 2.0, 0.5], [0.0, 0.3, 0.1]).unwrap();
        let t = sudden_death_time(&c, &ch, SteeringCase::TwoThreeToOne, 1e-8)
            .unwrap()
            .unwrap();
        assert_abs_diff_eq!(t, 0.121376954, epsilon = 1e-6);
    }

    #[test]
    fn death_time_edge_cases() {
        let c = cfg();
        // no decay: steering persists forever
        let ch0 = ChannelParams::uniform(0.0, 0.0).unwrap();
        assert_eq!(
            sudden_death_time(&c, &ch0, SteeringCase::TwoThreeToOne, 1e-8).unwrap(),
            None
        );
        // direction that is already dead at t=0
        let ch = ChannelParams::uniform(1.0, 0.0).unwrap();
        assert_eq!(
            sudden_death_time(&c, &ch, SteeringCase::ThreeToOne, 1e-8).unwrap(),
            Some(0.0)
        );
        // pure loss without reservoir noise never kills the collective case
        // G^{13->2}? it does die; check a genuinely immortal direction instead:
        // vacuum reservoirs at gamma>0 still kill every steering here, so use
        // gamma=0 with nonzero n_r as the constant-trajectory variant
        let chc = ChannelParams::uniform(0.0, 1.0).unwrap();
        assert_eq!(
            sudden_death_time(&c, &chc, SteeringCase::OneThreeToTwo, 1e-8).unwrap(),
            None
        );
    }

    #[test]
    fn death_bracket_guess_independent() {
        // tightening tol refines the same root
        let c = cfg();
        let ch = ChannelParams::uniform(1.0, 0.5).unwrap();
        let a = sudden_death_time(&c, &ch, SteeringCase::TwoThreeToOne, 1e-6)
            .unwrap()
            .unwrap();
        let b = sudden_death_time(&c, &ch, SteeringCase::TwoThreeToOne, 1e-10)
            .unwrap()
            .unwrap();
        assert!((a - b).abs() < 1e-6);
    }

    #[test]
    fn trajectory_nonincreasing_in_uniform_regime() {
        let c = cfg();
        let ch = ChannelParams::uniform(1.0, 0.3).unwrap();
        let times: Vec<f64> = (0..60).map(|i| 0.01 * i as f64 + 0.001).collect();
        let traj = steering_vs_time(&c, &ch, SteeringCase::OneThreeToTwo, &times).unwrap();
        for w in traj.values.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(ChannelParams::uniform(-1.0, 0.0).is_err());
        assert!(ChannelParams::uniform(1.0, -0.1).is_err());
        let c = cfg();
        let ch = ChannelParams::uniform(1.0, 0.0).unwrap();
        assert!(evolve_cm(&c, &ch, -0.1).is_err());
        assert!(steering_vs_time(&c, &ch, SteeringCase::TwoToOne, &[0.2, 0.1]).is_err());
        assert!(sudden_death_time(&c, &ch, SteeringCase::TwoToOne, 0.0).is_err());
    }
}
