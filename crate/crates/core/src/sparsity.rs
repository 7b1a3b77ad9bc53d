//! PPV as a (reciprocal) sparsity measure.
//!
//! `S(c) = len(c) / #{k : c_k > 0}` is a ratio of integers, so every axiom
//! check below compares counts exactly rather than within a tolerance.

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::rng::{self, Domain};

fn inf_as_string<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_infinite() {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SparsityReport {
    pub n: usize,
    pub threshold_used: f64,
    pub positive_count: usize,
    pub ppv: f64,
    /// `1 / ppv`; `+inf` (serialized as `"inf"`) when nothing exceeds the
    /// threshold.
    #[serde(serialize_with = "inf_as_string")]
    pub inv_ppv: f64,
    /// `2 N ppv`, the sparsity implied by balanced signs.
    pub estimated_s: f64,
}

/// Counts entries strictly above `threshold`.
pub fn estimate_sparsity(x: &[f64], threshold: f64) -> Result<SparsityReport> {
    if x.is_empty() {
        return Err(Error::Argument("sparsity of an empty signal".into()));
    }
    let positive_count = x.iter().filter(|v| **v > threshold).count();
    let n = x.len();
    let ppv = positive_count as f64 / n as f64;
    Ok(SparsityReport {
        n,
        threshold_used: threshold,
        positive_count,
        ppv,
        inv_ppv: if positive_count == 0 {
            f64::INFINITY
        } else {
            n as f64 / positive_count as f64
        },
        estimated_s: 2.0 * positive_count as f64,
    })
}

/// Adding bias `b` and counting `> 0` equals counting the raw convolution
/// `> -b`.
pub fn kernel_threshold(k: &KernelSpec) -> f64 {
    -k.bias
}

/// `S(c) = 1 / PPV(c)`, `+inf` when no entry is positive.
pub fn inv_ppv_measure(c: &[f64]) -> Result<f64> {
    Ok(estimate_sparsity(c, 0.0)?.inv_ppv)
}

fn positives(c: &[f64]) -> usize {
    c.iter().filter(|v| **v > 0.0).count()
}

/// `S` as an exact `(len, positives)` pair; compare with [`ratio_cmp`].
fn measure(c: &[f64]) -> (u64, u64) {
    (c.len() as u64, positives(c) as u64)
}

/// Orders `a.0/a.1` against `b.0/b.1`, treating a zero denominator as +inf.
fn ratio_cmp(a: (u64, u64), b: (u64, u64)) -> std::cmp::Ordering {
    match (a.1, b.1) {
        (0, 0) => std::cmp::Ordering::Equal,
        (0, _) => std::cmp::Ordering::Greater,
        (_, 0) => std::cmp::Ordering::Less,
        _ => (u128::from(a.0) * u128::from(b.1)).cmp(&(u128::from(b.0) * u128::from(a.1))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axiom {
    D1,
    D2,
    D3,
    D4,
    P1,
    P2,
}

impl Axiom {
    pub const ALL: [Axiom; 6] = [Axiom::D1, Axiom::D2, Axiom::D3, Axiom::D4, Axiom::P1, Axiom::P2];

    pub fn name(self) -> &'static str {
        match self {
            Axiom::D1 => "Robin Hood",
            Axiom::D2 => "Scaling",
            Axiom::D3 => "Rising Tide",
            Axiom::D4 => "Cloning",
            Axiom::P1 => "Bill Gates",
            Axiom::P2 => "Babies",
        }
    }

    /// Verdict the reciprocal-PPV measure is known to reach.
    pub fn expected(self) -> Verdict {
        match self {
            Axiom::D2 | Axiom::D4 | Axiom::P2 => Verdict::Satisfied,
            Axiom::D1 | Axiom::D3 | Axiom::P1 => Verdict::Violated,
        }
    }
}

impl std::str::FromStr for Axiom {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Axiom::ALL
            .into_iter()
            .find(|a| format!("{a:?}").eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Argument(format!("unknown axiom {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Satisfied,
    Violated,
}

impl Verdict {
    pub fn yes_no(self) -> &'static str {
        match self {
            Verdict::Satisfied => "Yes",
            Verdict::Violated => "No",
        }
    }
}

/// Concrete input demonstrating a verdict.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub before: Vec<f64>,
    pub after: Vec<f64>,
    #[serde(serialize_with = "inf_as_string")]
    pub s_before: f64,
    #[serde(serialize_with = "inf_as_string")]
    pub s_after: f64,
    pub note: String,
}

impl Witness {
    fn new(before: Vec<f64>, after: Vec<f64>, note: String) -> Self {
        let s_before = inv_ppv_measure(&before).unwrap_or(f64::NAN);
        let s_after = inv_ppv_measure(&after).unwrap_or(f64::NAN);
        Self {
            before,
            after,
            s_before,
            s_after,
            note,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomResult {
    pub axiom: Axiom,
    pub name: &'static str,
    pub expected: Verdict,
    pub observed: Verdict,
    pub trials: usize,
    /// Trials in which the axiom's requirement failed.
    pub counterexamples: usize,
    pub witness: Witness,
}

impl AxiomResult {
    pub fn matches_expected(&self) -> bool {
        self.expected == self.observed
    }
}

/// Grid used for the existential quantifiers of P1: `2^(e/10)` for
/// `e in -60..=60`.
pub fn p1_grid() -> Vec<f64> {
    (-60..=60).map(|e| 2f64.powf(f64::from(e) / 10.0)).collect()
}

fn random_vector<R: Rng>(rng: &mut R, min_len: usize) -> Vec<f64> {
    let len = rng.random_range(min_len..=24);
    (0..len).map(|_| StandardNormal.sample(rng)).collect()
}

/// Runs one axiom of the battery. Randomized checks use `trials` vectors from
/// stream `seed`; the violated axioms construct their counterexample in each
/// trial and confirm that `S` really fails the requirement.
pub fn check_axiom(axiom: Axiom, trials: usize, seed: u64) -> Result<AxiomResult> {
    if trials == 0 {
        return Err(Error::Argument("trials must be >= 1".into()));
    }
    let mut counterexamples = 0;
    let mut first_failure: Option<Witness> = None;
    let mut first_trial: Option<Witness> = None;

    for t in 0..trials {
        let mut rng = rng::stream(seed, Domain::Trials, ((axiom as u64) << 32) | t as u64);
        let (failed, witness) = match axiom {
            Axiom::D2 => {
                let c = random_vector(&mut rng, 1);
                let alpha = 10f64.powf(rng.random_range(-3.0..3.0));
                let scaled: Vec<f64> = c.iter().map(|v| alpha * v).collect();
                let failed = ratio_cmp(measure(&scaled), measure(&c)).is_ne();
                (failed, Witness::new(c, scaled, format!("alpha = {alpha}")))
            }
            Axiom::D4 => {
                let c = random_vector(&mut rng, 1);
                let cloned = [c.clone(), c.clone()].concat();
                let failed = ratio_cmp(measure(&cloned), measure(&c)).is_ne();
                (failed, Witness::new(c, cloned, "c || c".into()))
            }
            Axiom::P2 => {
                let mut c = random_vector(&mut rng, 1);
                let i = rng.random_range(0..c.len());
                c[i] = c[i].abs() + 0.1;
                let padded = [c.clone(), vec![0.0]].concat();
                let failed = ratio_cmp(measure(&padded), measure(&c)).is_le();
                (failed, Witness::new(c, padded, "c || 0".into()))
            }
            Axiom::D1 => {
                // two positive coordinates c_i > c_j > 0
                let mut c = random_vector(&mut rng, 2);
                let (i, j) = (0, 1);
                c[j] = c[j].abs() + 0.1;
                c[i] = c[j] + c[i].abs() + 0.1;
                let alpha = rng.random_range(0.01..0.99) * (c[i] - c[j]) / 2.0;
                let mut moved = c.clone();
                moved[i] -= alpha;
                moved[j] += alpha;
                // requirement: S strictly decreases
                let failed = ratio_cmp(measure(&moved), measure(&c)).is_ge();
                (
                    failed,
                    Witness::new(c, moved, format!("transfer alpha = {alpha} from c_0 to c_1")),
                )
            }
            Axiom::D3 => {
                let mut c = random_vector(&mut rng, 1);
                c.iter_mut().filter(|v| **v == 0.0).for_each(|v| *v = -1.0);
                let gap = c
                    .iter()
                    .filter(|v| **v < 0.0)
                    .map(|v| v.abs())
                    .fold(f64::INFINITY, f64::min);
                let alpha = if gap.is_finite() { gap / 2.0 } else { 1.0 };
                let raised: Vec<f64> = c.iter().map(|v| v + alpha).collect();
                // requirement: S strictly decreases
                let failed = ratio_cmp(measure(&raised), measure(&c)).is_ge();
                (failed, Witness::new(c, raised, format!("alpha = {alpha} flips no sign")))
            }
            Axiom::P1 => {
                let c = random_vector(&mut rng, 1);
                let i = rng.random_range(0..c.len());
                let grid = p1_grid();
                // for every beta, find an alpha that does not strictly raise S
                let mut refuted = 0;
                let mut example = None;
                for &beta in &grid {
                    let mut base = c.clone();
                    base[i] += beta;
                    let hit = grid.iter().find_map(|&alpha| {
                        let mut bumped = base.clone();
                        bumped[i] += alpha;
                        ratio_cmp(measure(&bumped), measure(&base))
                            .is_le()
                            .then_some((alpha, bumped))
                    });
                    if let Some((alpha, bumped)) = hit {
                        refuted += 1;
                        if example.is_none() {
                            example = Some(Witness::new(
                                base.clone(),
                                bumped,
                                format!("coordinate {i}, beta = {beta}, alpha = {alpha}"),
                            ));
                        }
                    }
                }
                let failed = refuted == grid.len();
                let mut w = example.unwrap_or_else(|| Witness::new(c.clone(), c, String::new()));
                w.note = format!(
                    "{}; {refuted}/{} grid betas refuted (grid 2^(e/10), e in -60..=60)",
                    w.note,
                    grid.len()
                );
                (failed, w)
            }
        };
        if failed {
            counterexamples += 1;
            first_failure.get_or_insert(witness.clone());
        }
        first_trial.get_or_insert(witness);
    }

    let observed = if counterexamples == 0 {
        Verdict::Satisfied
    } else {
        Verdict::Violated
    };
    Ok(AxiomResult {
        axiom,
        name: axiom.name(),
        expected: axiom.expected(),
        observed,
        trials,
        counterexamples,
        witness: first_failure.or(first_trial).expect("trials >= 1"),
    })
}

/// All six axioms, in table order.
pub fn axiom_battery(trials: usize, seed: u64) -> Result<Vec<AxiomResult>> {
    Axiom::ALL.into_iter().map(|a| check_axiom(a, trials, seed)).collect()
}

pub fn render_axiom_table(results: &[AxiomResult]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<18} {:>9} {:>9} {:>8}  witness",
        "property", "expected", "observed", "counter"
    );
    for r in results {
        let _ = writeln!(
            out,
            "{:<18} {:>9} {:>9} {:>8}  {}",
            format!("{:?} ({})", r.axiom, r.name),
            r.expected.yes_no(),
            r.observed.yes_no(),
            format!("{}/{}", r.counterexamples, r.trials),
            r.witness.note
        );
    }
    out
}
