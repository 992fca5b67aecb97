use crate::config::MeanPhotonNumbers;
use crate::error::{Error, Result};

/// One of the eighteen single-photon-subtraction schemes: a photon is
/// removed from each marked mode ('a' suffix), every mode not listed after
/// the separator is traced out, and the remaining state is analyzed.
///
/// Tags follow the pattern "<group>|<kept>", e.g. "1a|23" (subtract from
/// mode 1, analyze modes 2 and 3) or "2a3|1" (subtract from mode 2, discard
/// modes 2 and 3, analyze mode 1). The CLI form replaces '|' with '_'.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SubtractionScheme(u8);

struct Row {
    tag: &'static str,
    subtracted: &'static [usize],
    kept: &'static [usize],
    /// index into TABLE of the scheme with the identical reduced state
    canonical: u8,
}

const TABLE: [Row; 18] = [
    Row { tag: "1a|23", subtracted: &[0], kept: &[1, 2], canonical: 0 },
    Row { tag: "1a|2", subtracted: &[0], kept: &[1], canonical: 1 },
    Row { tag: "1a|3", subtracted: &[0], kept: &[2], canonical: 2 },
    Row { tag: "3a|12", subtracted: &[2], kept: &[0, 1], canonical: 3 },
    Row { tag: "3a|1", subtracted: &[2], kept: &[0], canonical: 4 },
    Row { tag: "3a|2", subtracted: &[2], kept: &[1], canonical: 5 },
    Row { tag: "2a|13", subtracted: &[1], kept: &[0, 2], canonical: 6 },
    Row { tag: "2a|1", subtracted: &[1], kept: &[0], canonical: 7 },
    Row { tag: "2a|3", subtracted: &[1], kept: &[2], canonical: 8 },
    Row { tag: "1a3a|2", subtracted: &[0, 2], kept: &[1], canonical: 9 },
    Row { tag: "1a3|2", subtracted: &[0], kept: &[1], canonical: 1 },
    Row { tag: "13a|2", subtracted: &[2], kept: &[1], canonical: 5 },
    Row { tag: "2a3a|1", subtracted: &[1, 2], kept: &[0], canonical: 12 },
    Row { tag: "2a3|1", subtracted: &[1], kept: &[0], canonical: 7 },
    Row { tag: "23a|1", subtracted: &[2], kept: &[0], canonical: 4 },
    Row { tag: "1a2a|3", subtracted: &[0, 1], kept: &[2], canonical: 15 },
    Row { tag: "1a2|3", subtracted: &[0], kept: &[2], canonical: 2 },
    Row { tag: "12a|3", subtracted: &[1], kept: &[2], canonical: 8 },
];

impl SubtractionScheme {
    pub const COUNT: usize = 18;

    pub fn all() -> impl Iterator<Item = SubtractionScheme> {
        (0..Self::COUNT as u8).map(SubtractionScheme)
    }

    /// Parse either the display form ("1a|23") or the CLI form ("1a_23").
    pub fn from_label(s: &str) -> Result<Self> {
        let norm = s.replace('_', "|");
        TABLE
            .iter()
            .position(|r| r.tag == norm)
            .map(|i| SubtractionScheme(i as u8))
            .ok_or_else(|| Error::Config(format!("unknown subtraction scheme '{s}'")))
    }

    pub fn label(&self) -> &'static str {
        TABLE[self.0 as usize].tag
    }

    pub fn cli_label(&self) -> String {
        self.label().replace('|', "_")
    }

    /// Modes a photon is removed from (0-based).
    pub fn subtracted(&self) -> &'static [usize] {
        TABLE[self.0 as usize].subtracted
    }

    /// Modes kept for analysis (0-based, ascending).
    pub fn kept(&self) -> &'static [usize] {
        TABLE[self.0 as usize].kept
    }

    /// Modes traced out after subtraction.
    pub fn traced(&self) -> Vec<usize> {
        (0..3).filter(|m| !self.kept().contains(m)).collect()
    }

    /// The scheme with the identical subtract-then-reduce map. Distinct tags
    /// can share one reduced state (e.g. "1a3|2" and "1a|2").
    pub fn canonical(&self) -> SubtractionScheme {
        SubtractionScheme(TABLE[self.0 as usize].canonical)
    }

    pub fn is_canonical(&self) -> bool {
        TABLE[self.0 as usize].canonical == self.0
    }

    /// Subtraction conditions on a mode with (numerically) zero mean photon
    /// number succeed with probability zero, so the scheme is undefined
    /// there. Mode numbers in the error are 1-based.
    pub fn require_nonempty(&self, n: &MeanPhotonNumbers) -> Result<()> {
        const EMPTY_MODE_TOL: f64 = 1e-12;
        let per_mode = [n.n1, n.n2, n.n3];
        for &m in self.subtracted() {
            if per_mode[m] <= EMPTY_MODE_TOL {
                return Err(Error::EmptySubtraction {
                    scheme: self.label().to_string(),
                    mode: m + 1,
                });
            }
        }
        Ok(())
    }
}

impl std::fmt::Display for SubtractionScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for SubtractionScheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::from_label(s)
    }
}
