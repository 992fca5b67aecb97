//! Self-acceptance suite: eight numbered criteria covering route
//! equivalences, reference anchors, oracle bindings, and structural
//! invariants. Each criterion reports one line per check; a criterion
//! passes only if every check does. Reference values that contradict the
//! library's own cross-validated routes are still asserted as stated, so
//! they fail visibly, and the report carries the analysis of the
//! discrepancy instead of a silently loosened test.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cm::{c3msv_covariance, symplectic_eigenvalues};
use crate::config::SqueezingConfig;
use crate::decoherence::{sudden_death_time, ChannelParams};
use crate::fock::{
    build_c3msv_fock, negativity_oracle, subtract_and_reduce, wigner_from_density, OracleGrid,
    ReducedState,
};
use crate::quad::QuadratureSpec;
use crate::scheme::SubtractionScheme;
use crate::steering::{
    gaussian_steering, monogamy_deficits, residual_gaussian_steering, steering_closed_form,
    steering_table, SteeringCase,
};
use crate::wigner::{negativity, wigner_c3msv, wigner_closed_form};

/// One named check with its outcome and the measured numbers.
#[derive(Debug, Clone)]
pub struct CheckLine {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Outcome of one acceptance criterion.
#[derive(Debug, Clone)]
pub struct CriterionReport {
    pub index: usize,
    pub title: &'static str,
    pub checks: Vec<CheckLine>,
    /// Analysis attached to checks that assert a reference value the
    /// library's independent routes contradict.
    pub notes: Vec<String>,
}

impl CriterionReport {
    fn new(index: usize, title: &'static str) -> Self {
        CriterionReport {
            index,
            title,
            checks: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn check(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(CheckLine {
            name: name.to_string(),
            passed,
            detail,
        });
    }

    fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// One line per check, "criterion N PASS/FAIL name: detail", then notes.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "criterion {} [{}] {}",
            self.index,
            if self.passed() { "PASS" } else { "FAIL" },
            self.title
        );
        for c in &self.checks {
            let _ = writeln!(
                out,
                "  {} {}: {}",
                if c.passed { "pass" } else { "FAIL" },
                c.name,
                c.detail
            );
        }
        for n in &self.notes {
            let _ = writeln!(out, "  note: {n}");
        }
        out
    }
}

pub fn render_table(reports: &[CriterionReport]) -> String {
    let mut out = String::new();
    for r in reports {
        out.push_str(&r.render());
    }
    let failed: Vec<usize> = reports.iter().filter(|r| !r.passed()).map(|r| r.index).collect();
    if failed.is_empty() {
        out.push_str("all criteria passed\n");
    } else {
        let _ = writeln!(
            out,
            "failed criteria: {:?} (see notes above for the flagged reference values)",
            failed
        );
    }
    out
}

pub fn run_all() -> Vec<CriterionReport> {
    (1..=8).map(run_criterion).collect()
}

pub fn run_criterion(index: usize) -> CriterionReport {
    match index {
        1 => criterion_1(),
        2 => criterion_2(),
        3 => criterion_3(),
        4 => criterion_4(),
        5 => criterion_5(),
        6 => criterion_6(),
        7 => criterion_7(),
        8 => criterion_8(),
        other => {
            let mut rep = CriterionReport::new(other, "unknown criterion");
            rep.check("index", false, format!("no criterion {other}; valid range is 1..=8"));
            rep
        }
    }
}

/// r x phi x theta1 x theta2 grid shared by the equivalence and monogamy
/// sweeps: 10 x 9 x 2 x 2 = 360 configurations.
fn standard_grid() -> Vec<SqueezingConfig> {
    let mut cfgs = Vec::new();
    for ir in 1..=10 {
        let r = 0.2 * ir as f64;
        for ip in 0..=8 {
            let phi = PI / 16.0 * ip as f64;
            for &t1 in &[0.0, PI / 5.0] {
                for &t2 in &[0.0, PI / 5.0] {
                    cfgs.push(SqueezingConfig::from_r(r, phi, t1, t2).unwrap());
                }
            }
        }
    }
    cfgs
}

fn anchor_cfg() -> SqueezingConfig {
    SqueezingConfig::from_mean_photons(3.0, PI / 8.0, 0.0, 0.0).unwrap()
}

fn criterion_1() -> CriterionReport {
    let mut rep = CriterionReport::new(1, "closed-form and symplectic steering routes agree");
    let start = Instant::now();
    let mut max_dev: f64 = 0.0;
    let mut evals = 0usize;
    for cfg in standard_grid() {
        let v = c3msv_covariance(&cfg);
        for case in SteeringCase::ALL {
            let generic = match gaussian_steering(&v, &case.partition()) {
                Ok(r) => r.value,
                Err(e) => {
                    rep.check("pipeline", false, format!("{} at r={}: {e}", case.label(), cfg.r()));
                    return rep;
                }
            };
            let closed = steering_closed_form(&cfg, case);
            max_dev = max_dev.max((generic - closed).abs());
            evals += 1;
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    rep.check(
        "max |G_generic - G_closed| < 1e-9",
        max_dev < 1e-9,
        format!("max deviation {max_dev:.3e} over {evals} evaluations"),
    );
    rep.check("runtime < 5 s", elapsed < 5.0, format!("{elapsed:.2} s"));
    rep
}

fn criterion_2() -> CriterionReport {
    let mut rep = CriterionReport::new(2, "steering taxonomy at nbar_total=3, phi=pi/8");
    let cfg = anchor_cfg();
    let v = c3msv_covariance(&cfg);
    let g = |case: SteeringCase| -> f64 {
        gaussian_steering(&v, &case.partition()).map(|r| r.value).unwrap_or(f64::NAN)
    };
    let exact_zero = [
        SteeringCase::OneToThree,
        SteeringCase::ThreeToOne,
        SteeringCase::ThreeToTwo,
    ];
    for case in exact_zero {
        let val = g(case);
        rep.check(
            &format!("G {} = 0 exactly", case.label()),
            val == 0.0,
            format!("{val:.12e}"),
        );
    }
    let g12 = g(SteeringCase::OneToTwo);
    rep.check(
        "G 1->2 = 0 exactly (stated reference)",
        g12 == 0.0,
        format!("{g12:.12}"),
    );
    if g12 != 0.0 {
        let (w0, w1, w2) = cfg.weights();
        let _ = w0;
        rep.note(format!(
            "the closed form gives G 1->2 = 2 ln(w2/w1) = {:.12}, confirmed by the \
             symplectic pipeline to {:.1e}; at phi < pi/4 the first mode holds more \
             photons than the third, and it steers the middle mode one-way, so the \
             stated zero contradicts both routes. The mirrored claim G 3->2 = 0 holds.",
            2.0 * (w2 / w1).ln(),
            (g12 - 2.0 * (w2 / w1).ln()).abs(),
        ));
    }
    let positive = [
        SteeringCase::TwoToOne,
        SteeringCase::TwoToThree,
        SteeringCase::TwoThreeToOne,
        SteeringCase::OneToTwoThree,
        SteeringCase::OneTwoToThree,
        SteeringCase::ThreeToOneTwo,
    ];
    for case in positive {
        let val = g(case);
        rep.check(
            &format!("G {} > 0", case.label()),
            val > 0.0,
            format!("{val:.12}"),
        );
    }
    let g_in = g(SteeringCase::OneThreeToTwo);
    let g_out = g(SteeringCase::TwoToOneThree);
    rep.check(
        "G 13->2 = G 2->13 to 1e-10",
        (g_in - g_out).abs() < 1e-10,
        format!("{g_in:.12} vs {g_out:.12}"),
    );
    rep
}

fn criterion_3() -> CriterionReport {
    let mut rep = CriterionReport::new(3, "monogamy deficits and residual steering");
    let mut min_deficit = f64::INFINITY;
    for cfg in standard_grid() {
        let d = monogamy_deficits(&cfg);
        for val in d.all() {
            min_deficit = min_deficit.min(val);
        }
    }
    rep.check(
        "all six deficits >= -1e-9 on the grid",
        min_deficit >= -1e-9,
        format!("minimum deficit {min_deficit:.3e}"),
    );

    let n = 33usize;
    let mut best = (f64::NEG_INFINITY, 0.0);
    for i in 0..n {
        let phi = PI / 2.0 * i as f64 / (n - 1) as f64;
        let cfg = SqueezingConfig::from_mean_photons(3.0, phi, 0.0, 0.0).unwrap();
        let rgs = residual_gaussian_steering(&cfg).map(|r| r.value).unwrap_or(f64::NAN);
        if rgs > best.0 {
            best = (rgs, phi);
        }
    }
    let step = PI / 2.0 / (n - 1) as f64;
    rep.check(
        "residual steering argmax over phi is pi/4",
        (best.1 - PI / 4.0).abs() <= step + 1e-12,
        format!("argmax phi = {:.6} (value {:.9}), grid step {:.6}", best.1, best.0, step),
    );

    let cfg2 = SqueezingConfig::from_mean_photons(2.0, PI / 4.0, 0.0, 0.0).unwrap();
    let rgs2 = residual_gaussian_steering(&cfg2).map(|r| r.value).unwrap_or(f64::NAN);
    let stated = 2.0 * 3.0f64.ln();
    rep.check(
        "residual steering (phi=pi/4, nbar_total=2) = 2 ln 3 (stated reference)",
        (rgs2 - stated).abs() <= 1e-9,
        format!("computed {rgs2:.12}, stated {stated:.12}"),
    );
    let own = 2.0 * (4.0f64 / 3.0).ln();
    if (rgs2 - stated).abs() > 1e-9 {
        let d = monogamy_deficits(&cfg2);
        rep.check(
            "companion: computed residual equals 2 ln(4/3)",
            (rgs2 - own).abs() <= 1e-12,
            format!("{rgs2:.15} vs {own:.15}"),
        );
        rep.check(
            "companion: the stated value equals the pivot-2 deficit, not the minimum",
            (d.pair_to_pivot[1] - stated).abs() <= 1e-12,
            format!("pivot-2 deficit {:.15}", d.pair_to_pivot[1]),
        );
        rep.note(
            "at this point the deficits are (2 ln(4/3), 2 ln 3, 2 ln(4/3)) for pivots \
             1..3 in both families; the residual is their minimum 2 ln(4/3) = \
             0.575364144904. The stated 2 ln 3 picks the middle pivot instead of the \
             minimum, consistent with a transcription slip.",
        );
    }
    rep
}

/// Sudden-death reference anchors; shared by criteria 4 and 7.
fn death_anchor_checks(rep: &mut CriterionReport) {
    let cfg = anchor_cfg();
    let anchors = [(0.0, 0.346574), (0.5, 0.11903), (1.0, 0.0729227)];
    for (n_r, expect) in anchors {
        let ch = match ChannelParams::uniform(1.0, n_r) {
            Ok(ch) => ch,
            Err(e) => {
                rep.check("channel", false, format!("n_r={n_r}: {e}"));
                continue;
            }
        };
        let death = sudden_death_time(&cfg, &ch, SteeringCase::TwoThreeToOne, 1e-10);
        match death {
            Ok(Some(t)) => rep.check(
                &format!("gamma t* (n_r = {n_r})"),
                (t - expect).abs() <= 1e-3,
                format!("computed {t:.6}, reference {expect}"),
            ),
            Ok(None) => rep.check(
                &format!("gamma t* (n_r = {n_r})"),
                false,
                "steering never died within the bracket".to_string(),
            ),
            Err(e) => rep.check(&format!("gamma t* (n_r = {n_r})"), false, format!("{e}")),
        }
    }
}

fn criterion_4() -> CriterionReport {
    let mut rep = CriterionReport::new(4, "thermal-channel sudden-death anchors");
    let start = Instant::now();
    death_anchor_checks(&mut rep);
    let elapsed = start.elapsed().as_secs_f64();
    rep.check("runtime < 2 s", elapsed < 2.0, format!("{elapsed:.2} s"));
    rep
}

fn criterion_5() -> CriterionReport {
    let mut rep = CriterionReport::new(5, "remote Wigner-negativity anchors at nbar_total=3");
    let start = Instant::now();
    let single = QuadratureSpec::single_mode();
    let pair = QuadratureSpec::two_mode();
    let neg = |phi: f64, label: &str, spec: &QuadratureSpec| -> Result<f64, String> {
        let cfg = SqueezingConfig::from_mean_photons(3.0, phi, 0.0, 0.0).map_err(|e| e.to_string())?;
        let scheme = SubtractionScheme::from_label(label).map_err(|e| e.to_string())?;
        negativity(&cfg, scheme, spec).map(|e| e.value).map_err(|e| e.to_string())
    };

    let mut worst = (0.0f64, 0.0f64);
    let mut ok = true;
    for phi in [PI / 8.0, PI / 6.0, PI / 4.0, PI / 3.0, 3.0 * PI / 8.0] {
        match neg(phi, "1a|2", &single) {
            Ok(v) => {
                if (v - 0.04682).abs() > worst.1 {
                    worst = (phi, (v - 0.04682).abs());
                }
                ok &= (v - 0.04682).abs() <= 1e-3;
            }
            Err(e) => {
                ok = false;
                rep.check("N 1a|2", false, e);
            }
        }
    }
    rep.check(
        "N 1a|2 = 0.04682 +- 1e-3 across five phi values",
        ok,
        format!("worst |dev| {:.2e} at phi={:.4}", worst.1, worst.0),
    );

    for (phi, label, expect, tol, name) in [
        (0.0, "1a|23", 0.04682, 1e-3, "N 1a|23 (phi=0)"),
        (PI / 2.0, "1a|23", 0.42614, 1e-3, "N 1a|23 (phi=pi/2)"),
        (0.0, "3a|12", 0.42614, 1e-3, "N 3a|12 (phi=0)"),
    ] {
        match neg(phi, label, &pair) {
            Ok(v) => rep.check(
                name,
                (v - expect).abs() <= tol,
                format!("computed {v:.6}, reference {expect}"),
            ),
            Err(e) => rep.check(name, false, e),
        }
    }

    let mut vals_2a13 = Vec::new();
    for phi in [PI / 8.0, PI / 4.0, 3.0 * PI / 8.0] {
        match neg(phi, "2a|13", &pair) {
            Ok(v) => vals_2a13.push((phi, v)),
            Err(e) => rep.check("N 2a|13", false, e),
        }
    }
    if let Some(&(_, v)) = vals_2a13.first() {
        let stated = 0.4683;
        rep.check(
            "N 2a|13 = 0.4683 +- 2e-3 (stated reference)",
            (v - stated).abs() <= 2e-3,
            format!("computed {v:.6}, stated {stated}"),
        );
        if (v - stated).abs() > 2e-3 {
            rep.check(
                "companion: N 2a|13 = 0.046827 +- 2e-4, phi-independent",
                vals_2a13.iter().all(|&(_, v)| (v - 0.046826882695).abs() <= 2e-4),
                format!(
                    "values {:?}",
                    vals_2a13.iter().map(|&(_, v)| format!("{v:.6}")).collect::<Vec<_>>()
                ),
            );
            rep.note(
                "subtracting the middle mode yields the same negativity 0.0468269 at \
                 every phi (its reduced pair is unitarily equivalent to the 1a|2 \
                 single-mode state); the stated 0.4683 is tenfold larger, consistent \
                 with a misplaced decimal point. The independent number-basis oracle \
                 confirms 0.0468 (criterion 6).",
            );
        }
    }

    match neg(PI / 8.0, "1a3a|2", &single) {
        Ok(v) => rep.check(
            "N 1a3a|2 = 0.0318528 +- 1e-3",
            (v - 0.0318528).abs() <= 1e-3,
            format!("computed {v:.7}"),
        ),
        Err(e) => rep.check("N 1a3a|2", false, e),
    }

    let zero_labels = ["2a3a|1", "2a3|1", "23a|1", "1a2a|3", "1a2|3", "12a|3"];
    for label in zero_labels {
        let scheme = SubtractionScheme::from_label(label).unwrap();
        let spec = if scheme.kept().len() == 1 { &single } else { &pair };
        match neg(PI / 8.0, label, spec) {
            Ok(v) => rep.check(
                &format!("N {label} < 1e-5 (stated zero list)"),
                v < 1e-5,
                format!("computed {v:.9}"),
            ),
            Err(e) => rep.check(&format!("N {label}"), false, e),
        }
    }
    rep.note(
        "five of the six stated-zero schemes are provably pointwise-nonnegative; \
         2a3|1 reduces to the same state as 2a|1 (subtract the middle mode, keep the \
         first), whose negativity 0.0311589 is positive at phi=pi/8, so the zero \
         claim fails for it in both the closed-form and number-basis routes.",
    );
    let elapsed = start.elapsed().as_secs_f64();
    rep.check("runtime < 180 s", elapsed < 180.0, format!("{elapsed:.1} s"));
    rep
}

fn criterion_6() -> CriterionReport {
    let mut rep = CriterionReport::new(6, "number-basis oracle binds to the analytic routes");
    let start = Instant::now();

    // second moments reassemble the covariance matrix
    let mut worst_cm: f64 = 0.0;
    for (nbar, phi, t1, t2) in [
        (2.0, PI / 8.0, 0.3, 0.7),
        (3.0, PI / 8.0, 0.3, 0.7),
        (3.0, PI / 3.0, 0.0, 0.0),
    ] {
        let cfg = SqueezingConfig::from_mean_photons(nbar, phi, t1, t2).unwrap();
        match build_c3msv_fock(&cfg, None, 1e-13).and_then(|st| st.covariance()) {
            Ok(vf) => {
                let va = c3msv_covariance(&cfg);
                let dev = (vf.matrix() - va.matrix()).abs().max();
                worst_cm = worst_cm.max(dev);
            }
            Err(e) => rep.check("covariance reassembly", false, format!("{e}")),
        }
    }
    rep.check(
        "second moments reassemble the covariance to 1e-9",
        worst_cm < 1e-9,
        format!("max deviation {worst_cm:.3e} over three configurations"),
    );

    // pointwise Wigner agreement for every closed form at cutoff 40
    let cfg = SqueezingConfig::from_mean_photons(3.0, PI / 8.0, 0.3, 0.7).unwrap();
    match build_c3msv_fock(&cfg, Some(40), 1e-3) {
        Err(e) => rep.check("pointwise agreement", false, format!("{e}")),
        Ok(state) => {
            let single_axis = [-2.0, -1.0, 0.0, 1.0, 2.0];
            let pair_axis = [-1.5, -0.75, 0.0, 0.75, 1.5];
            let mut worst_pt: f64 = 0.0;
            let mut worst_label = "";
            for scheme in SubtractionScheme::all().filter(|s| s.is_canonical()) {
                let reduced = match subtract_and_reduce(&state, scheme) {
                    Ok(r) => r,
                    Err(e) => {
                        rep.check(scheme.label(), false, format!("{e}"));
                        continue;
                    }
                };
                let analytic = match wigner_closed_form(&cfg, scheme) {
                    Ok(w) => w,
                    Err(e) => {
                        rep.check(scheme.label(), false, format!("{e}"));
                        continue;
                    }
                };
                let mut dev: f64 = 0.0;
                match &reduced {
                    ReducedState::Single(_) => {
                        for &x in &single_axis {
                            for &y in &single_axis {
                                let wf = wigner_from_density(&reduced, &[Complex64::new(x, y)]);
                                let wa = analytic.eval(&[x, y]);
                                dev = dev.max((wf - wa).abs());
                            }
                        }
                    }
                    ReducedState::Pair(_) => {
                        for &xa in &pair_axis {
                            for &ya in &pair_axis {
                                for &xb in &pair_axis {
                                    for &yb in &pair_axis {
                                        let ba = Complex64::new(xa, ya);
                                        let bb = Complex64::new(xb, yb);
                                        let wf = wigner_from_density(&reduced, &[ba, bb]);
                                        let wa = analytic.eval(&[xa, ya, xb, yb]);
                                        dev = dev.max((wf - wa).abs());
                                    }
                                }
                            }
                        }
                    }
                }
                if dev > worst_pt {
                    worst_pt = dev;
                    worst_label = scheme.label();
                }
            }
            rep.check(
                "subtracted forms match the parity trace pointwise to 1e-5",
                worst_pt < 1e-5,
                format!("worst deviation {worst_pt:.3e} ({worst_label})"),
            );

            // unsubtracted three-mode form on a 3^6 grid
            let analytic = wigner_c3msv(&cfg);
            let axis = [-1.2, 0.0, 1.2];
            let mut dev3: f64 = 0.0;
            for &x1 in &axis {
                for &y1 in &axis {
                    for &x2 in &axis {
                        for &y2 in &axis {
                            for &x3 in &axis {
                                for &y3 in &axis {
                                    let betas = [
                                        Complex64::new(x1, y1),
                                        Complex64::new(x2, y2),
                                        Complex64::new(x3, y3),
                                    ];
                                    let wf = state.wigner_point(betas);
                                    let wa = analytic.eval(&[x1, y1, x2, y2, x3, y3]);
                                    dev3 = dev3.max((wf - wa).abs());
                                }
                            }
                        }
                    }
                }
            }
            rep.check(
                "full three-mode form matches the parity trace pointwise to 1e-5",
                dev3 < 1e-5,
                format!("worst deviation {dev3:.3e} over 729 points"),
            );
        }
    }

    // negativity binding
    let cfg0 = anchor_cfg();
    let single = QuadratureSpec::single_mode();
    let pair_spec = QuadratureSpec::two_mode();
    let analytic_neg = |label: &str, spec: &QuadratureSpec| -> Result<f64, String> {
        negativity(&cfg0, SubtractionScheme::from_label(label).unwrap(), spec)
            .map(|e| e.value)
            .map_err(|e| e.to_string())
    };
    let oracle_neg = |label: &str, cutoff: usize, budget: f64, grid: &OracleGrid| -> Result<f64, String> {
        let state = build_c3msv_fock(&cfg0, Some(cutoff), budget).map_err(|e| e.to_string())?;
        let reduced = subtract_and_reduce(&state, SubtractionScheme::from_label(label).unwrap())
            .map_err(|e| e.to_string())?;
        negativity_oracle(&reduced, grid).map_err(|e| e.to_string())
    };
    for (label, grid, cutoff, budget, spec) in [
        ("1a|2", OracleGrid::single_mode(), 60, 1e-8, &single),
        ("1a3a|2", OracleGrid::single_mode(), 60, 1e-8, &single),
        ("2a|13", OracleGrid::pair(), 28, 1e-6, &pair_spec),
    ] {
        let a = analytic_neg(label, spec);
        let o = oracle_neg(label, cutoff, budget, &grid);
        match (a, o) {
            (Ok(a), Ok(o)) => rep.check(
                &format!("oracle negativity {label} within 2e-3 of analytic"),
                (a - o).abs() <= 2e-3,
                format!("oracle {o:.6}, analytic {a:.6}"),
            ),
            (a, o) => rep.check(
                &format!("oracle negativity {label}"),
                false,
                format!("analytic: {a:?}, oracle: {o:?}"),
            ),
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    rep.check("runtime < 180 s", elapsed < 180.0, format!("{elapsed:.1} s"));
    rep
}

fn criterion_7() -> CriterionReport {
    let mut rep = CriterionReport::new(7, "adopted decoherence variant passes the death anchors");
    rep.check(
        "adopted variant recorded",
        true,
        "diagonal blocks relax as 1 + 2 nbar_j e^(-2 gamma_j t) + 2 n_Rj (1 - e^(-2 gamma_j t)); \
         off-diagonal (j,k) blocks damp by e^(-(gamma_j + gamma_k) t)"
            .to_string(),
    );
    death_anchor_checks(&mut rep);
    rep
}

fn criterion_8() -> CriterionReport {
    let mut rep = CriterionReport::new(8, "structural property suite");

    // covariance validity: det, spectrum, uncertainty
    let mut worst_det: f64 = 0.0;
    let mut worst_spec: f64 = 0.0;
    for ir in 0..=8 {
        let r = 0.25 * ir as f64;
        for ip in 0..=4 {
            let phi = PI / 8.0 * ip as f64;
            for &t in &[0.0, PI / 3.0] {
                let cfg = SqueezingConfig::from_r(r, phi, t, 0.5 * t).unwrap();
                let v = c3msv_covariance(&cfg);
                let m = v.matrix();
                worst_det = worst_det.max((m.determinant() - 1.0).abs());
                let mut eig: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().cloned().collect();
                eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let mut expect = vec![
                    (-2.0 * r).exp(),
                    (-2.0 * r).exp(),
                    1.0,
                    1.0,
                    (2.0 * r).exp(),
                    (2.0 * r).exp(),
                ];
                expect.sort_by(|a, b| a.partial_cmp(b).unwrap());
                for (e, x) in eig.iter().zip(&expect) {
                    worst_spec = worst_spec.max((e - x).abs());
                }
            }
        }
    }
    rep.check(
        "det V = 1 to 1e-9 on the validity grid",
        worst_det < 1e-9,
        format!("max |det - 1| = {worst_det:.3e}"),
    );
    rep.check(
        "eigenvalue spectrum is (e^-2r, e^-2r, 1, 1, e^2r, e^2r) to 1e-9",
        worst_spec < 1e-9,
        format!("max deviation {worst_spec:.3e}"),
    );

    // steering values do not depend on the pump phases
    let mut worst_phase: f64 = 0.0;
    for &r in &[0.5, 1.2] {
        for &phi in &[PI / 8.0, PI / 4.0, 0.4] {
            let base: Vec<f64> = steering_table(&SqueezingConfig::from_r(r, phi, 0.0, 0.0).unwrap())
                .iter()
                .map(|s| s.value)
                .collect();
            for &(t1, t2) in &[(PI / 3.0, 0.0), (0.0, PI / 5.0), (1.0, 2.0)] {
                let other = steering_table(&SqueezingConfig::from_r(r, phi, t1, t2).unwrap());
                for (b, o) in base.iter().zip(&other) {
                    worst_phase = worst_phase.max((b - o.value).abs());
                }
            }
        }
    }
    rep.check(
        "steering table is phase-independent to 1e-9",
        worst_phase < 1e-9,
        format!("max deviation {worst_phase:.3e}"),
    );

    // swapping the outer modes mirrors phi around pi/4
    let mirror = |case: SteeringCase| -> SteeringCase {
        use SteeringCase::*;
        match case {
            TwoThreeToOne => OneTwoToThree,
            OneToTwoThree => ThreeToOneTwo,
            OneTwoToThree => TwoThreeToOne,
            ThreeToOneTwo => OneToTwoThree,
            OneThreeToTwo => OneThreeToTwo,
            TwoToOneThree => TwoToOneThree,
            TwoToOne => TwoToThree,
            TwoToThree => TwoToOne,
            OneToTwo => ThreeToTwo,
            ThreeToTwo => OneToTwo,
            OneToThree => ThreeToOne,
            ThreeToOne => OneToThree,
        }
    };
    let mut worst_mirror: f64 = 0.0;
    for &r in &[0.5, 1.2] {
        for ip in 0..=8 {
            let phi = PI / 16.0 * ip as f64;
            let cfg = SqueezingConfig::from_r(r, phi, 0.3, 0.7).unwrap();
            let flip = SqueezingConfig::from_r(r, PI / 2.0 - phi, 0.7, 0.3).unwrap();
            for case in SteeringCase::ALL {
                let a = steering_closed_form(&cfg, case);
                let b = steering_closed_form(&flip, mirror(case));
                worst_mirror = worst_mirror.max((a - b).abs());
            }
        }
    }
    rep.check(
        "steering mirror symmetry (modes 1 and 3 swapped, phi -> pi/2 - phi) to 1e-9",
        worst_mirror < 1e-9,
        format!("max deviation {worst_mirror:.3e}"),
    );

    // the same mirror at the level of subtracted Wigner forms, pointwise
    let mut worst_wig: f64 = 0.0;
    let pairs = [("1a|2", "3a|2"), ("2a|1", "2a|3"), ("1a|23", "3a|12")];
    for &(la, lb) in &pairs {
        let sa = SubtractionScheme::from_label(la).unwrap();
        let sb = SubtractionScheme::from_label(lb).unwrap();
        for &phi in &[PI / 8.0, PI / 3.0] {
            let cfg = SqueezingConfig::from_r(1.0, phi, 0.3, 0.7).unwrap();
            let flip = SqueezingConfig::from_r(1.0, PI / 2.0 - phi, 0.7, 0.3).unwrap();
            let (wa, wb) = match (wigner_closed_form(&cfg, sa), wigner_closed_form(&flip, sb)) {
                (Ok(a), Ok(b)) => (a, b),
                _ => continue,
            };
            for &x in &[0.0, 0.6, -1.1] {
                for &y in &[0.0, -0.4, 0.8] {
                    let (va, vb) = if wa.n_modes() == 1 {
                        (wa.eval(&[x, y]), wb.eval(&[x, y]))
                    } else {
                        // swapping the outer modes swaps the kept pair order
                        (wa.eval(&[x, y, 0.3, -0.2]), wb.eval(&[0.3, -0.2, x, y]))
                    };
                    worst_wig = worst_wig.max((va - vb).abs());
                }
            }
        }
    }
    rep.check(
        "Wigner mirror symmetry pointwise to 1e-9",
        worst_wig < 1e-9,
        format!("max deviation {worst_wig:.3e}"),
    );

    // symplectic eigenvalues are invariant under random local symplectics
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut worst_will: f64 = 0.0;
    for _ in 0..20 {
        let r = rng.random_range(0.2..1.5);
        let phi = rng.random_range(0.0..PI / 2.0);
        let cfg = SqueezingConfig::from_r(r, phi, 0.0, 0.0).unwrap();
        let v = c3msv_covariance(&cfg);
        let mut s = DMatrix::<f64>::identity(6, 6);
        for m in 0..3 {
            let a = rng.random_range(0.0..2.0 * PI);
            let b = rng.random_range(0.0..2.0 * PI);
            let u: f64 = rng.random_range(-0.8..0.8);
            let rot = |t: f64| {
                nalgebra::Matrix2::new(t.cos(), t.sin(), -t.sin(), t.cos())
            };
            let sq = nalgebra::Matrix2::new(u.exp(), 0.0, 0.0, (-u).exp());
            let block = rot(a) * sq * rot(b);
            s.view_mut((2 * m, 2 * m), (2, 2)).copy_from(&block);
        }
        let vt = &s * v.matrix() * s.transpose();
        let nus = symplectic_eigenvalues(&vt);
        for nu in nus {
            worst_will = worst_will.max((nu - 1.0).abs());
        }
    }
    rep.check(
        "symplectic eigenvalues stay at 1 under random local symplectics",
        worst_will < 1e-9,
        format!("max deviation {worst_will:.3e} over 20 draws"),
    );
    rep
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reports_render_with_status_lines() {
        let rep = run_criterion(4);
        let text = rep.render();
        assert!(text.contains("criterion 4"));
        assert!(text.contains("gamma t*"));
        assert!(rep.passed(), "{text}");
    }

    #[test]
    fn unknown_criterion_index_is_reported() {
        let rep = run_criterion(9);
        assert!(!rep.passed());
    }
}
