//! Scenarios, Bell functionals, behaviors and the operations that tie them
//! together.
//!
//! Every tensor over the full probability space is stored flat in row-major
//! `(x, y, a, b)` order; see [`flat_index`].

use std::fmt;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use serde_json::Number;

use crate::error::{domain, shape, Error, Result};
use crate::json;

/// Normalization tolerance for behavior blocks.
pub const NORMALIZATION_TOL: f64 = 1e-9;
/// Slack allowed below 0 and above 1 for individual probabilities.
pub const ENTRY_TOL: f64 = 1e-12;

/// The `(m_A, m_B, o_A, o_B)` shape of a two-party Bell scenario.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "ScenarioFields")]
pub struct Scenario {
    m_a: usize,
    m_b: usize,
    o_a: usize,
    o_b: usize,
}

#[derive(Deserialize)]
struct ScenarioFields {
    m_a: usize,
    m_b: usize,
    o_a: usize,
    o_b: usize,
}

impl TryFrom<ScenarioFields> for Scenario {
    type Error = Error;

    fn try_from(f: ScenarioFields) -> Result<Self> {
        Scenario::new(f.m_a, f.m_b, f.o_a, f.o_b)
    }
}

impl Scenario {
    pub fn new(m_a: usize, m_b: usize, o_a: usize, o_b: usize) -> Result<Self> {
        if m_a == 0 || m_b == 0 || o_a == 0 || o_b == 0 {
            return domain(format!(
                "scenario ({m_a},{m_b},{o_a},{o_b}) must have every entry >= 1"
            ));
        }
        Ok(Scenario { m_a, m_b, o_a, o_b })
    }

    /// The `(d, 2, d, d)` scenario of the truncated XOR-d games.
    pub fn xor_d(d: usize) -> Result<Self> {
        Scenario::new(d, 2, d, d)
    }

    pub fn m_a(&self) -> usize {
        self.m_a
    }

    pub fn m_b(&self) -> usize {
        self.m_b
    }

    pub fn o_a(&self) -> usize {
        self.o_a
    }

    pub fn o_b(&self) -> usize {
        self.o_b
    }

    /// `m_A * m_B * o_A * o_B`, the length of every flat tensor.
    pub fn probability_dimension(&self) -> usize {
        self.m_a * self.m_b * self.o_a * self.o_b
    }

    /// Number of `(x, y)` blocks.
    pub fn block_count(&self) -> usize {
        self.m_a * self.m_b
    }

    /// Number of entries per `(x, y)` block.
    pub fn block_len(&self) -> usize {
        self.o_a * self.o_b
    }

    /// Same scenario with Alice's input count replaced.
    pub fn with_alice_inputs(&self, m_a: usize) -> Result<Self> {
        Scenario::new(m_a, self.m_b, self.o_a, self.o_b)
    }

    #[inline]
    pub(crate) fn index_unchecked(&self, x: usize, y: usize, a: usize, b: usize) -> usize {
        ((x * self.m_b + y) * self.o_a + a) * self.o_b + b
    }

    /// Inverse of [`flat_index`].
    pub fn unflatten(&self, index: usize) -> Result<(usize, usize, usize, usize)> {
        if index >= self.probability_dimension() {
            return domain(format!(
                "flat index {index} outside [0, {})",
                self.probability_dimension()
            ));
        }
        let b = index % self.o_b;
        let rest = index / self.o_b;
        let a = rest % self.o_a;
        let rest = rest / self.o_a;
        let y = rest % self.m_b;
        let x = rest / self.m_b;
        Ok((x, y, a, b))
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{},{})", self.m_a, self.m_b, self.o_a, self.o_b)
    }
}

/// Row-major position of `(x, y, a, b)` in the flat tensor of `scenario`.
pub fn flat_index(scenario: &Scenario, x: usize, y: usize, a: usize, b: usize) -> Result<usize> {
    if x >= scenario.m_a || y >= scenario.m_b || a >= scenario.o_a || b >= scenario.o_b {
        return domain(format!(
            "index (x={x}, y={y}, a={a}, b={b}) out of range for scenario {scenario}"
        ));
    }
    Ok(scenario.index_unchecked(x, y, a, b))
}

/// Integer coefficients `V(a,b|x,y)` over the full probability space.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "FunctionalFile", into = "FunctionalFile")]
pub struct BellFunctional {
    scenario: Scenario,
    coefficients: Vec<BigInt>,
}

#[derive(Serialize, Deserialize)]
struct FunctionalFile {
    m_a: usize,
    m_b: usize,
    o_a: usize,
    o_b: usize,
    coefficients: Vec<Number>,
}

impl From<BellFunctional> for FunctionalFile {
    fn from(f: BellFunctional) -> Self {
        let s = f.scenario;
        FunctionalFile {
            m_a: s.m_a,
            m_b: s.m_b,
            o_a: s.o_a,
            o_b: s.o_b,
            coefficients: f.coefficients.iter().map(json::int_to_number).collect(),
        }
    }
}

impl TryFrom<FunctionalFile> for BellFunctional {
    type Error = Error;

    fn try_from(f: FunctionalFile) -> Result<Self> {
        let scenario = Scenario::new(f.m_a, f.m_b, f.o_a, f.o_b)?;
        let coefficients = f
            .coefficients
            .iter()
            .map(json::number_to_int)
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(Error::Domain)?;
        BellFunctional::new(scenario, coefficients)
    }
}

impl BellFunctional {
    pub fn new(scenario: Scenario, coefficients: Vec<BigInt>) -> Result<Self> {
        if coefficients.len() != scenario.probability_dimension() {
            return shape(format!(
                "{} coefficients given for scenario {scenario} of dimension {}",
                coefficients.len(),
                scenario.probability_dimension()
            ));
        }
        Ok(BellFunctional {
            scenario,
            coefficients,
        })
    }

    pub fn zero(scenario: Scenario) -> Self {
        BellFunctional {
            scenario,
            coefficients: vec![BigInt::zero(); scenario.probability_dimension()],
        }
    }

    /// Builds a functional from a closure over `(x, y, a, b)`.
    pub fn from_fn(
        scenario: Scenario,
        mut f: impl FnMut(usize, usize, usize, usize) -> i64,
    ) -> Self {
        let mut coefficients = Vec::with_capacity(scenario.probability_dimension());
        for x in 0..scenario.m_a {
            for y in 0..scenario.m_b {
                for a in 0..scenario.o_a {
                    for b in 0..scenario.o_b {
                        coefficients.push(BigInt::from(f(x, y, a, b)));
                    }
                }
            }
        }
        BellFunctional {
            scenario,
            coefficients,
        }
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn coefficients(&self) -> &[BigInt] {
        &self.coefficients
    }

    pub fn coefficient(&self, x: usize, y: usize, a: usize, b: usize) -> Result<&BigInt> {
        Ok(&self.coefficients[flat_index(&self.scenario, x, y, a, b)?])
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.iter().all(Zero::is_zero)
    }

    /// The coefficients as `i64`, provided no sum of them can overflow.
    pub fn small_coefficients(&self) -> Option<Vec<i64>> {
        let mut total = BigInt::zero();
        for c in &self.coefficients {
            total += c.abs();
        }
        if total > BigInt::from(i64::MAX / 2) {
            return None;
        }
        Some(
            self.coefficients
                .iter()
                .map(|c| c.to_i64().expect("bounded by the total"))
                .collect(),
        )
    }

    /// The coefficients rounded to `f64`.
    pub fn real_coefficients(&self) -> Vec<f64> {
        self.coefficients
            .iter()
            .map(|c| c.to_f64().unwrap_or(f64::NAN))
            .collect()
    }

    pub(crate) fn block(&self, x: usize, y: usize) -> &[BigInt] {
        let start = self.scenario.index_unchecked(x, y, 0, 0);
        &self.coefficients[start..start + self.scenario.block_len()]
    }
}

/// A conditional distribution `p(a,b|x,y)`, possibly signaling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BehaviorFile", into = "BehaviorFile")]
pub struct Behavior {
    scenario: Scenario,
    probabilities: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct BehaviorFile {
    m_a: usize,
    m_b: usize,
    o_a: usize,
    o_b: usize,
    #[serde(with = "json::reals")]
    probabilities: Vec<f64>,
}

impl From<Behavior> for BehaviorFile {
    fn from(p: Behavior) -> Self {
        let s = p.scenario;
        BehaviorFile {
            m_a: s.m_a,
            m_b: s.m_b,
            o_a: s.o_a,
            o_b: s.o_b,
            probabilities: p.probabilities,
        }
    }
}

impl TryFrom<BehaviorFile> for Behavior {
    type Error = Error;

    fn try_from(f: BehaviorFile) -> Result<Self> {
        Behavior::new(Scenario::new(f.m_a, f.m_b, f.o_a, f.o_b)?, f.probabilities)
    }
}

impl Behavior {
    /// Validates entry range and per-block normalization.
    pub fn new(scenario: Scenario, probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.len() != scenario.probability_dimension() {
            return shape(format!(
                "{} probabilities given for scenario {scenario} of dimension {}",
                probabilities.len(),
                scenario.probability_dimension()
            ));
        }
        if let Some((i, p)) = probabilities
            .iter()
            .enumerate()
            .find(|(_, p)| !(-ENTRY_TOL..=1.0 + ENTRY_TOL).contains(*p))
        {
            return domain(format!("probability #{i} = {p} outside [0, 1]"));
        }
        for (k, block) in probabilities.chunks(scenario.block_len()).enumerate() {
            let sum: f64 = block.iter().sum();
            if (sum - 1.0).abs() > NORMALIZATION_TOL {
                let (x, y) = (k / scenario.m_b, k % scenario.m_b);
                return domain(format!("block (x={x}, y={y}) sums to {sum}, not 1"));
            }
        }
        Ok(Behavior {
            scenario,
            probabilities,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn prob(&self, x: usize, y: usize, a: usize, b: usize) -> Result<f64> {
        Ok(self.probabilities[flat_index(&self.scenario, x, y, a, b)?])
    }

    /// Largest `|Σ_{a,b} p(a,b|x,y) - 1|` over all blocks.
    pub fn normalization_residual(&self) -> f64 {
        self.probabilities
            .chunks(self.scenario.block_len())
            .map(|b| (b.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// The slice of this behavior on Alice inputs `inputs`, in the given order.
    pub fn restrict_inputs(&self, inputs: &[usize]) -> Result<Behavior> {
        let sub = checked_sub_scenario(&self.scenario, inputs)?;
        let row = self.scenario.m_b * self.scenario.block_len();
        let probabilities = inputs
            .iter()
            .flat_map(|&x| self.probabilities[x * row..(x + 1) * row].iter().copied())
            .collect();
        Ok(Behavior {
            scenario: sub,
            probabilities,
        })
    }
}

/// A bipartition `{J, X \ J}` of Alice's inputs, stored canonically as `J`.
///
/// The trivial bipartition is `J = X`; otherwise input 0 always lies in `J`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Bipartition {
    ground_size: usize,
    members: Vec<usize>,
}

impl Bipartition {
    /// Canonicalizes an arbitrary subset: an empty set becomes the trivial
    /// partition, and a set without input 0 is swapped for its complement.
    pub fn new(ground_size: usize, members: &[usize]) -> Result<Self> {
        if ground_size == 0 {
            return domain("bipartition of an empty input set");
        }
        let mut inside = vec![false; ground_size];
        for &x in members {
            if x >= ground_size {
                return domain(format!(
                    "input {x} outside ground set of size {ground_size}"
                ));
            }
            inside[x] = true;
        }
        if !inside.iter().any(|&v| v) {
            inside.iter_mut().for_each(|v| *v = true);
        } else if !inside[0] {
            inside.iter_mut().for_each(|v| *v = !*v);
        }
        Ok(Bipartition {
            ground_size,
            members: (0..ground_size).filter(|&x| inside[x]).collect(),
        })
    }

    pub fn trivial(ground_size: usize) -> Result<Self> {
        Bipartition::new(ground_size, &[])
    }

    pub fn ground_size(&self) -> usize {
        self.ground_size
    }

    /// `J`, ascending.
    pub fn members(&self) -> &[usize] {
        &self.members
    }

    /// `X \ J`, ascending; empty for the trivial partition.
    pub fn complement(&self) -> Vec<usize> {
        let mut inside = vec![false; self.ground_size];
        for &x in &self.members {
            inside[x] = true;
        }
        (0..self.ground_size).filter(|&x| !inside[x]).collect()
    }

    pub fn is_trivial(&self) -> bool {
        self.members.len() == self.ground_size
    }

    pub fn contains(&self, x: usize) -> bool {
        self.members.binary_search(&x).is_ok()
    }
}

impl fmt::Display for Bipartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let fmt_set = |s: &[usize]| {
            s.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        write!(
            f,
            "{{{}}}|{{{}}}",
            fmt_set(&self.members),
            fmt_set(&self.complement())
        )
    }
}

/// `B · p` over the full probability space.
pub fn score(functional: &BellFunctional, behavior: &Behavior) -> Result<f64> {
    if functional.scenario != behavior.scenario {
        return shape(format!(
            "functional scenario {} does not match behavior scenario {}",
            functional.scenario, behavior.scenario
        ));
    }
    Ok(functional
        .real_coefficients()
        .iter()
        .zip(&behavior.probabilities)
        .map(|(v, p)| v * p)
        .sum())
}

fn checked_sub_scenario(scenario: &Scenario, inputs: &[usize]) -> Result<Scenario> {
    if inputs.is_empty() {
        return domain("cannot restrict to an empty set of Alice inputs");
    }
    if let Some(&x) = inputs.iter().find(|&&x| x >= scenario.m_a) {
        return domain(format!("input {x} outside Alice's {} inputs", scenario.m_a));
    }
    scenario.with_alice_inputs(inputs.len())
}

/// Sub-functional on an arbitrary nonempty list of Alice inputs.
pub fn restrict_inputs(functional: &BellFunctional, inputs: &[usize]) -> Result<BellFunctional> {
    let s = functional.scenario;
    let sub = checked_sub_scenario(&s, inputs)?;
    let row = s.m_b * s.block_len();
    let coefficients = inputs
        .iter()
        .flat_map(|&x| {
            functional.coefficients[x * row..(x + 1) * row]
                .iter()
                .cloned()
        })
        .collect();
    Ok(BellFunctional {
        scenario: sub,
        coefficients,
    })
}

/// The sub-functional `B^J` on the inputs in `J`, in ascending order.
pub fn restrict(functional: &BellFunctional, part: &Bipartition) -> Result<BellFunctional> {
    if part.ground_size != functional.scenario.m_a {
        return shape(format!(
            "bipartition over {} inputs applied to a functional with {} Alice inputs",
            part.ground_size, functional.scenario.m_a
        ));
    }
    restrict_inputs(functional, &part.members)
}

/// The truncated XOR-d game in the `(d, 2, d, d)` scenario:
/// `V(a,b|x,y) = [(b - a) mod d = x y mod d]`.
pub fn make_truncated_xor_game(d: usize) -> Result<BellFunctional> {
    if d < 2 {
        return domain(format!("truncated XOR-d game needs d >= 2, got {d}"));
    }
    let scenario = Scenario::xor_d(d)?;
    Ok(BellFunctional::from_fn(scenario, |x, y, a, b| {
        i64::from((b + d - a) % d == (x * y) % d)
    }))
}

/// Reinterprets a non-negative functional with equal block sums `s` as the
/// behavior `V / s`.
pub fn ns_behavior_from_functional(functional: &BellFunctional) -> Result<Behavior> {
    let s = functional.scenario;
    if functional.coefficients.iter().any(Signed::is_negative) {
        return domain("functional has negative coefficients");
    }
    let mut common: Option<BigInt> = None;
    for x in 0..s.m_a {
        for y in 0..s.m_b {
            let sum: BigInt = functional.block(x, y).iter().sum();
            if sum.is_zero() {
                return domain(format!("block (x={x}, y={y}) is identically zero"));
            }
            match &common {
                None => common = Some(sum),
                Some(c) if *c != sum => {
                    return domain(format!(
                        "block (x={x}, y={y}) sums to {sum}, other blocks to {c}"
                    ))
                }
                Some(_) => {}
            }
        }
    }
    let total = common
        .expect("scenario has at least one block")
        .to_f64()
        .unwrap_or(f64::NAN);
    let probabilities = functional
        .real_coefficients()
        .into_iter()
        .map(|v| v / total)
        .collect();
    Behavior::new(s, probabilities)
}

/// The uniform behavior `1 / (o_A o_B)`.
pub fn white_noise_behavior(scenario: &Scenario) -> Behavior {
    Behavior {
        scenario: *scenario,
        probabilities: vec![1.0 / scenario.block_len() as f64; scenario.probability_dimension()],
    }
}

/// `w P1 + (1 - w) P2`.
pub fn mix(first: &Behavior, second: &Behavior, w: f64) -> Result<Behavior> {
    if !(0.0..=1.0).contains(&w) {
        return domain(format!("mixing weight {w} outside [0, 1]"));
    }
    if first.scenario != second.scenario {
        return shape(format!(
            "cannot mix behaviors of scenarios {} and {}",
            first.scenario, second.scenario
        ));
    }
    let probabilities = first
        .probabilities
        .iter()
        .zip(&second.probabilities)
        .map(|(p, q)| w * p + (1.0 - w) * q)
        .collect();
    Behavior::new(first.scenario, probabilities)
}

/// Largest deviation of either party's marginals across the other party's
/// inputs, and whether it is within `tol`.
pub fn is_no_signaling(behavior: &Behavior, tol: f64) -> (bool, f64) {
    let s = behavior.scenario;
    let p = |x, y, a, b| behavior.probabilities[s.index_unchecked(x, y, a, b)];
    let mut worst: f64 = 0.0;
    for x in 0..s.m_a {
        for a in 0..s.o_a {
            let marginals: Vec<f64> = (0..s.m_b)
                .map(|y| (0..s.o_b).map(|b| p(x, y, a, b)).sum())
                .collect();
            worst = worst.max(spread(&marginals));
        }
    }
    for y in 0..s.m_b {
        for b in 0..s.o_b {
            let marginals: Vec<f64> = (0..s.m_a)
                .map(|x| (0..s.o_a).map(|a| p(x, y, a, b)).sum())
                .collect();
            worst = worst.max(spread(&marginals));
        }
    }
    (worst <= tol, worst)
}

fn spread(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    max - min
}
