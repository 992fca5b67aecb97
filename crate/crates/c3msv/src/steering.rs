use crate::cm::{c3msv_covariance, schur_complement, symplectic_eigenvalues, CovarianceMatrix, Partition};
use crate::config::SqueezingConfig;
use crate::error::{Error, Result};

/// Symplectic eigenvalues within this distance of 1 do not count as steering.
pub const NU_TOL: f64 = 1e-12;

/// The twelve bipartite assignments among three modes: six pairwise
/// directions and six collective (one mode vs the other two) directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SteeringCase {
    TwoThreeToOne,
    OneThreeToTwo,
    OneTwoToThree,
    OneToTwoThree,
    TwoToOneThree,
    ThreeToOneTwo,
    TwoToOne,
    OneToThree,
    TwoToThree,
    OneToTwo,
    ThreeToOne,
    ThreeToTwo,
}

impl SteeringCase {
    pub const ALL: [SteeringCase; 12] = [
        SteeringCase::TwoThreeToOne,
        SteeringCase::OneThreeToTwo,
        SteeringCase::OneTwoToThree,
        SteeringCase::OneToTwoThree,
        SteeringCase::TwoToOneThree,
        SteeringCase::ThreeToOneTwo,
        SteeringCase::TwoToOne,
        SteeringCase::OneToThree,
        SteeringCase::TwoToThree,
        SteeringCase::OneToTwo,
        SteeringCase::ThreeToOne,
        SteeringCase::ThreeToTwo,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            SteeringCase::TwoThreeToOne => "23to1",
            SteeringCase::OneThreeToTwo => "13to2",
            SteeringCase::OneTwoToThree => "12to3",
            SteeringCase::OneToTwoThree => "1to23",
            SteeringCase::TwoToOneThree => "2to13",
            SteeringCase::ThreeToOneTwo => "3to12",
            SteeringCase::TwoToOne => "2to1",
            SteeringCase::OneToThree => "1to3",
            SteeringCase::TwoToThree => "2to3",
            SteeringCase::OneToTwo => "1to2",
            SteeringCase::ThreeToOne => "3to1",
            SteeringCase::ThreeToTwo => "3to2",
        }
    }

    pub fn from_label(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|c| c.label() == s)
            .ok_or_else(|| Error::Config(format!("unknown steering case '{s}'")))
    }

    /// (steering party, steered party), 0-based mode indices.
    pub fn partition(&self) -> Partition {
        let (a, b): (&[usize], &[usize]) = match self {
            SteeringCase::TwoThreeToOne => (&[1, 2], &[0]),
            SteeringCase::OneThreeToTwo => (&[0, 2], &[1]),
            SteeringCase::OneTwoToThree => (&[0, 1], &[2]),
            SteeringCase::OneToTwoThree => (&[0], &[1, 2]),
            SteeringCase::TwoToOneThree => (&[1], &[0, 2]),
            SteeringCase::ThreeToOneTwo => (&[2], &[0, 1]),
            SteeringCase::TwoToOne => (&[1], &[0]),
            SteeringCase::OneToThree => (&[0], &[2]),
            SteeringCase::TwoToThree => (&[1], &[2]),
            SteeringCase::OneToTwo => (&[0], &[1]),
            SteeringCase::ThreeToOne => (&[2], &[0]),
            SteeringCase::ThreeToTwo => (&[2], &[1]),
        };
        Partition::new(a.to_vec(), b.to_vec()).expect("case partitions are valid")
    }

    pub fn from_partition(p: &Partition) -> Option<Self> {
        Self::ALL.iter().copied().find(|c| c.partition() == *p)
    }
}

impl std::fmt::Display for SteeringCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for SteeringCase {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::from_label(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteeringResult {
    pub value: f64,
    /// Symplectic eigenvalues of the conditional covariance of the steered party.
    pub nu_bars: Vec<f64>,
    /// The named assignment, when the partition matches one of the twelve.
    pub case: Option<SteeringCase>,
}

/// Steerability of party B by Gaussian measurements on party A:
/// G = max(0, -2 * sum of ln(nu) over conditional symplectic eigenvalues nu < 1).
pub fn gaussian_steering(v: &CovarianceMatrix, p: &Partition) -> Result<SteeringResult> {
    let sc = schur_complement(v, p)?;
    let nu_bars = symplectic_eigenvalues(&sc);
    let value = steering_from_nu_bars(&nu_bars);
    Ok(SteeringResult {
        value,
        nu_bars,
        case: SteeringCase::from_partition(p),
    })
}

pub fn steering_from_nu_bars(nu_bars: &[f64]) -> f64 {
    let total: f64 = nu_bars
        .iter()
        .filter(|&&nu| nu < 1.0 - NU_TOL)
        .map(|nu| -2.0 * nu.ln())
        .sum();
    total.max(0.0)
}

/// Closed-form steerability. All twelve cases reduce to logarithms of the
/// weights w0 = cosh 2r, w1 = c^2 - s^2 cos 2phi, w2 = c^2 + s^2 cos 2phi
/// and are independent of the pump phases. Each expression is verified
/// against the symplectic pipeline on a dense parameter grid (see tests);
/// two commonly quoted radical-quotient variants for the collective cases
/// are provided separately because they do not reproduce the pipeline.
pub fn steering_closed_form(cfg: &SqueezingConfig, case: SteeringCase) -> f64 {
    let (w0, w1, w2) = cfg.weights();
    let g = match case {
        SteeringCase::TwoThreeToOne | SteeringCase::OneToTwoThree => 2.0 * w2.ln(),
        SteeringCase::OneThreeToTwo | SteeringCase::TwoToOneThree => 2.0 * w0.ln(),
        SteeringCase::OneTwoToThree | SteeringCase::ThreeToOneTwo => 2.0 * w1.ln(),
        SteeringCase::TwoToOne => 2.0 * (w0 / w1).ln(),
        SteeringCase::TwoToThree => 2.0 * (w0 / w2).ln(),
        SteeringCase::OneToTwo => 2.0 * (w2 / w1).ln(),
        SteeringCase::ThreeToTwo => 2.0 * (w1 / w2).ln(),
        SteeringCase::OneToThree | SteeringCase::ThreeToOne => 0.0,
    };
    g.max(0.0)
}

/// Radical-quotient expression sometimes quoted for the collective steering
/// of modes (2,3) by mode 1. Kept only for comparison: it does not agree
/// with `gaussian_steering` away from isolated parameter points.
pub fn radical_form_1_to_23(cfg: &SqueezingConfig) -> f64 {
    let (c2, s2) = (cfg.c() * cfg.c(), cfg.s() * cfg.s());
    let (co2, co4) = ((2.0 * cfg.phi()).cos(), (4.0 * cfg.phi()).cos());
    let k0 = 4.0 + 8.0 * s2 * cfg.phi().cos().powi(2);
    let k1 = 1.0 + 3.0 * c2 + (3.0 - 2.0 * co2) * s2;
    let k2 = (19.0 - 12.0 * co2) * c2 * s2
        + (19.0 - 12.0 * co2 + 2.0 * co4) * s2 * s2
        + (13.0 - 20.0 * co2) * s2;
    if k2 < 0.0 {
        return 0.0;
    }
    (2.0 * (k0 / (k1 - k2.sqrt())).ln()).max(0.0)
}

/// Mirror partner of `radical_form_1_to_23` for mode 3 steering (1,2).
pub fn radical_form_3_to_12(cfg: &SqueezingConfig) -> f64 {
    let (c2, s2) = (cfg.c() * cfg.c(), cfg.s() * cfg.s());
    let (co2, co4) = ((2.0 * cfg.phi()).cos(), (4.0 * cfg.phi()).cos());
    let i0 = 4.0 + 8.0 * s2 * cfg.phi().sin().powi(2);
    let i1 = 1.0 + 3.0 * c2 + (3.0 + 2.0 * co2) * s2;
    let i2 = (19.0 + 12.0 * co2) * c2 * s2
        + (19.0 + 12.0 * co2 + 2.0 * co4) * s2 * s2
        + (13.0 + 20.0 * co2) * s2;
    if i2 < 0.0 {
        return 0.0;
    }
    (2.0 * (i0 / (i1 - i2.sqrt())).ln()).max(0.0)
}

/// All twelve directions evaluated through the symplectic pipeline.
pub fn steering_table(cfg: &SqueezingConfig) -> Vec<SteeringResult> {
    let v = c3msv_covariance(cfg);
    SteeringCase::ALL
        .iter()
        .map(|case| {
            gaussian_steering(&v, &case.partition())
                .expect("three-mode state admits every case partition")
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeficitFamily {
    /// G^{(jk)->i} - G^{j->i} - G^{k->i}
    PairSteersPivot,
    /// G^{i->(jk)} - G^{i->j} - G^{i->k}
    PivotSteersPair,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonogamyDeficits {
    /// Indexed by pivot mode (0-based): pair steers pivot.
    pub pair_to_pivot: [f64; 3],
    /// Indexed by pivot mode (0-based): pivot steers pair.
    pub pivot_to_pair: [f64; 3],
}

impl MonogamyDeficits {
    /// Fixed order: pair->1, pair->2, pair->3, 1->pair, 2->pair, 3->pair.
    pub fn all(&self) -> [f64; 6] {
        [
            self.pair_to_pivot[0],
            self.pair_to_pivot[1],
            self.pair_to_pivot[2],
            self.pivot_to_pair[0],
            self.pivot_to_pair[1],
            self.pivot_to_pair[2],
        ]
    }
}

const CASE_BY_PIVOT_IN: [(SteeringCase, SteeringCase, SteeringCase); 3] = [
    (
        SteeringCase::TwoThreeToOne,
        SteeringCase::TwoToOne,
        SteeringCase::ThreeToOne,
    ),
    (
        SteeringCase::OneThreeToTwo,
        SteeringCase::OneToTwo,
        SteeringCase::ThreeToTwo,
    ),
    (
        SteeringCase::OneTwoToThree,
        SteeringCase::OneToThree,
        SteeringCase::TwoToThree,
    ),
];

const CASE_BY_PIVOT_OUT: [(SteeringCase, SteeringCase, SteeringCase); 3] = [
    (
        SteeringCase::OneToTwoThree,
        SteeringCase::OneToTwo,
        SteeringCase::OneToThree,
    ),
    (
        SteeringCase::TwoToOneThree,
        SteeringCase::TwoToOne,
        SteeringCase::TwoToThree,
    ),
    (
        SteeringCase::ThreeToOneTwo,
        SteeringCase::ThreeToOne,
        SteeringCase::ThreeToTwo,
    ),
];

/// The six monogamy deficits. Each is nonnegative (up to 1e-9 rounding).
pub fn monogamy_deficits(cfg: &SqueezingConfig) -> MonogamyDeficits {
    let v = c3msv_covariance(cfg);
    let g = |case: SteeringCase| {
        gaussian_steering(&v, &case.partition())
            .expect("three-mode state admits every case partition")
            .value
    };
    let mut pair_to_pivot = [0.0; 3];
    let mut pivot_to_pair = [0.0; 3];
    for i in 0..3 {
        let (grp, s1, s2) = CASE_BY_PIVOT_IN[i];
        pair_to_pivot[i] = g(grp) - g(s1) - g(s2);
        let (grp, s1, s2) = CASE_BY_PIVOT_OUT[i];
        pivot_to_pair[i] = g(grp) - g(s1) - g(s2);
    }
    MonogamyDeficits {
        pair_to_pivot,
        pivot_to_pair,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RgsResult {
    /// Minimum deficit over both families and all three pivots, clamped at 0.
    pub value: f64,
    /// Pivot mode of the minimizing deficit (0-based) and its cycle (i, j, k).
    pub argmin_pivot: usize,
    pub argmin_cycle: (usize, usize, usize),
    pub argmin_family: DeficitFamily,
    pub all_deficits: MonogamyDeficits,
}

/// Residual (genuinely tripartite) Gaussian steering: the minimum monogamy
/// deficit. Both deficit families attain the same minimum; this is checked
/// and an error is returned if they disagree beyond 1e-9.
pub fn residual_gaussian_steering(cfg: &SqueezingConfig) -> Result<RgsResult> {
    let d = monogamy_deficits(cfg);
    let min_in = d
        .pair_to_pivot
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let min_out = d
        .pivot_to_pair
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if (min_in - min_out).abs() > 1e-9 {
        return Err(Error::Numeric(format!(
            "deficit family minima disagree: {min_in:.12e} vs {min_out:.12e}"
        )));
    }
    // deficits equal to within fp noise count as ties; the earliest
    // candidate (pair-steers-pivot family, lowest pivot) wins
    const TIE_TOL: f64 = 1e-12;
    let mut best = (f64::INFINITY, 0usize, DeficitFamily::PairSteersPivot);
    for i in 0..3 {
        if d.pair_to_pivot[i] < best.0 - TIE_TOL {
            best = (d.pair_to_pivot[i], i, DeficitFamily::PairSteersPivot);
        }
    }
    for i in 0..3 {
        if d.pivot_to_pair[i] < best.0 - TIE_TOL {
            best = (d.pivot_to_pair[i], i, DeficitFamily::PivotSteersPair);
        }
    }
    let (value, pivot, family) = best;
    let others: Vec<usize> = (0..3).filter(|&m| m != pivot).collect();
    Ok(RgsResult {
        value: value.max(0.0),
        argmin_pivot: pivot,
        argmin_cycle: (pivot, others[0], others[1]),
        argmin_family: family,
        all_deficits: d,
    })
}
