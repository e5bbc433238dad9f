//! Exact local and one-bit bounds of Bell functionals.
//!
//! A deterministic one-bit strategy is a triple `(f, h, g)`: Alice outputs
//! `f(x)`, sends the bit `h(x)`, and Bob outputs `g(y, c)`. Fixing `h` splits
//! Alice's inputs into `J = {x : h(x) = 0}` and its complement, and the two
//! halves are then independent local games. The one-bit bound is therefore
//! the maximum, over bipartitions `J`, of the sum of the local bounds of the
//! two restricted functionals. [`one_bit_bound_bruteforce`] enumerates the
//! triples directly and serves as the oracle for that identity.

use std::collections::HashSet;
use std::ops::AddAssign;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Pow, Zero};
use rayon::prelude::*;
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use crate::error::{domain, shape, Error, Result};
use crate::json;
use crate::scenario::{Behavior, BellFunctional, Bipartition, Scenario};

/// Default guard on `o_A^m_A * 2^m_A * o_B^(2 m_B)` for the brute-force oracle.
pub const BRUTEFORCE_LIMIT: u64 = 100_000_000;

/// Largest Alice input count for which bipartitions are enumerated.
pub const MAX_PARTITION_INPUTS: usize = 40;

/// Deterministic local strategy `a = f(x)`, `b = g(y)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LocalStrategy {
    pub alice_outputs: Vec<usize>,
    pub bob_outputs: Vec<usize>,
}

/// Deterministic one-bit strategy: `a = f(x)`, `c = h(x)`, `b = g(y, c)`.
///
/// `bob_outputs[c][y]` is Bob's answer to input `y` after receiving bit `c`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct OneBitStrategy {
    pub alice_outputs: Vec<usize>,
    pub comm: Vec<u8>,
    pub bob_outputs: [Vec<usize>; 2],
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Strategy {
    Local(LocalStrategy),
    OneBit(OneBitStrategy),
}

impl From<LocalStrategy> for Strategy {
    fn from(s: LocalStrategy) -> Self {
        Strategy::Local(s)
    }
}

impl From<OneBitStrategy> for Strategy {
    fn from(s: OneBitStrategy) -> Self {
        Strategy::OneBit(s)
    }
}

impl LocalStrategy {
    /// The same strategy seen as a one-bit strategy that never uses the bit.
    pub fn as_one_bit(&self) -> OneBitStrategy {
        OneBitStrategy {
            alice_outputs: self.alice_outputs.clone(),
            comm: vec![0; self.alice_outputs.len()],
            bob_outputs: [self.bob_outputs.clone(), self.bob_outputs.clone()],
        }
    }
}

impl OneBitStrategy {
    /// The bipartition induced by the communication map.
    pub fn partition(&self) -> Result<Bipartition> {
        let zeros: Vec<usize> = (0..self.comm.len())
            .filter(|&x| self.comm[x] == 0)
            .collect();
        Bipartition::new(self.comm.len(), &zeros)
    }

    fn check(&self, s: &Scenario) -> Result<()> {
        let ok = self.alice_outputs.len() == s.m_a()
            && self.comm.len() == s.m_a()
            && self.alice_outputs.iter().all(|&a| a < s.o_a())
            && self.comm.iter().all(|&c| c < 2)
            && self
                .bob_outputs
                .iter()
                .all(|g| g.len() == s.m_b() && g.iter().all(|&b| b < s.o_b()));
        if ok {
            Ok(())
        } else {
            shape(format!("one-bit strategy does not fit scenario {s}"))
        }
    }

    /// `Σ_{x,y} V(f(x), g(y, h(x)) | x, y)` in exact arithmetic.
    pub fn exact_score(&self, functional: &BellFunctional) -> Result<BigInt> {
        let s = functional.scenario();
        self.check(s)?;
        let mut total = BigInt::zero();
        for x in 0..s.m_a() {
            let g = &self.bob_outputs[usize::from(self.comm[x])];
            for (y, &b) in g.iter().enumerate() {
                total +=
                    &functional.coefficients()[s.index_unchecked(x, y, self.alice_outputs[x], b)];
            }
        }
        Ok(total)
    }
}

impl Strategy {
    pub fn to_one_bit(&self) -> OneBitStrategy {
        match self {
            Strategy::Local(s) => s.as_one_bit(),
            Strategy::OneBit(s) => s.clone(),
        }
    }
}

/// Result of an exact bound computation together with a maximizing strategy.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundResult {
    pub value: BigInt,
    pub witness_local: Option<LocalStrategy>,
    pub witness_onebit: Option<OneBitStrategy>,
    pub witness_partition: Option<Bipartition>,
}

impl BoundResult {
    pub fn witness(&self) -> Option<Strategy> {
        self.witness_onebit
            .clone()
            .map(Strategy::OneBit)
            .or_else(|| self.witness_local.clone().map(Strategy::Local))
    }
}

impl Serialize for BoundResult {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(5))?;
        map.serialize_entry("value", &json::int_to_number(&self.value))?;
        map.serialize_entry(
            "partition",
            &self
                .witness_partition
                .as_ref()
                .map(|p| p.members().to_vec()),
        )?;
        if let Some(w) = &self.witness_onebit {
            map.serialize_entry("alice_outputs", &w.alice_outputs)?;
            map.serialize_entry("comm", &Some(&w.comm))?;
            map.serialize_entry("bob_outputs", &w.bob_outputs)?;
        } else if let Some(w) = &self.witness_local {
            map.serialize_entry("alice_outputs", &w.alice_outputs)?;
            map.serialize_entry("comm", &None::<Vec<u8>>)?;
            map.serialize_entry("bob_outputs", &[&w.bob_outputs])?;
        } else {
            map.serialize_entry("alice_outputs", &None::<Vec<usize>>)?;
            map.serialize_entry("comm", &None::<Vec<u8>>)?;
            map.serialize_entry("bob_outputs", &None::<Vec<usize>>)?;
        }
        map.end()
    }
}

trait Weight: Clone + Ord + Zero + for<'a> AddAssign<&'a Self> + Send + Sync {
    fn into_big(self) -> BigInt;
}

impl Weight for i64 {
    fn into_big(self) -> BigInt {
        BigInt::from(self)
    }
}

impl Weight for BigInt {
    fn into_big(self) -> BigInt {
        self
    }
}

/// Mixed-radix counter over `len` digits in `0..radix`, most significant first.
struct Odometer {
    digits: Vec<usize>,
    radix: usize,
    started: bool,
}

impl Odometer {
    fn new(len: usize, radix: usize) -> Self {
        Odometer {
            digits: vec![0; len],
            radix,
            started: false,
        }
    }

    /// Advances to the next assignment; the first call yields all zeros.
    fn advance(&mut self) -> bool {
        if !self.started {
            self.started = true;
            return self.radix > 0 || self.digits.is_empty();
        }
        for d in self.digits.iter_mut().rev() {
            *d += 1;
            if *d < self.radix {
                return true;
            }
            *d = 0;
        }
        false
    }
}

/// Best local strategy on the Alice inputs `inputs` (in that order).
///
/// Returns the value, Alice's outputs for each entry of `inputs`, and Bob's
/// outputs.
fn local_on<T: Weight>(
    s: &Scenario,
    coeffs: &[T],
    inputs: &[usize],
) -> (T, Vec<usize>, Vec<usize>) {
    let mut best: Option<(T, Vec<usize>, Vec<usize>)> = None;
    let mut bob = Odometer::new(s.m_b(), s.o_b());
    let mut alice = vec![0; inputs.len()];
    while bob.advance() {
        let g = &bob.digits;
        let mut total = T::zero();
        for (slot, &x) in inputs.iter().enumerate() {
            let mut best_a: Option<(T, usize)> = None;
            for a in 0..s.o_a() {
                let mut v = T::zero();
                for (y, &b) in g.iter().enumerate() {
                    v += &coeffs[s.index_unchecked(x, y, a, b)];
                }
                if best_a.as_ref().is_none_or(|(bv, _)| v > *bv) {
                    best_a = Some((v, a));
                }
            }
            let (v, a) = best_a.expect("o_A >= 1");
            alice[slot] = a;
            total += &v;
        }
        if best.as_ref().is_none_or(|(bv, _, _)| total > *bv) {
            best = Some((total, alice.clone(), g.clone()));
        }
    }
    best.expect("o_B >= 1 gives at least one Bob assignment")
}

enum Coefficients {
    Small(Vec<i64>),
    Big(Vec<BigInt>),
}

impl Coefficients {
    fn of(functional: &BellFunctional) -> Self {
        match functional.small_coefficients() {
            Some(c) => Coefficients::Small(c),
            None => Coefficients::Big(functional.coefficients().to_vec()),
        }
    }

    fn local_on(&self, s: &Scenario, inputs: &[usize]) -> (BigInt, Vec<usize>, Vec<usize>) {
        match self {
            Coefficients::Small(c) => {
                let (v, f, g) = local_on(s, c, inputs);
                (v.into_big(), f, g)
            }
            Coefficients::Big(c) => local_on(s, c, inputs),
        }
    }
}

/// Exact local bound: enumerate Bob's deterministic assignments and let
/// Alice best-respond input by input.
pub fn local_bound(functional: &BellFunctional) -> BoundResult {
    let s = functional.scenario();
    let inputs: Vec<usize> = (0..s.m_a()).collect();
    let (value, alice_outputs, bob_outputs) = Coefficients::of(functional).local_on(s, &inputs);
    BoundResult {
        value,
        witness_local: Some(LocalStrategy {
            alice_outputs,
            bob_outputs,
        }),
        witness_onebit: None,
        witness_partition: None,
    }
}

struct PartitionOutcome {
    value: BigInt,
    strategy: OneBitStrategy,
}

fn solve_partition(coeffs: &Coefficients, s: &Scenario, part: &Bipartition) -> PartitionOutcome {
    let inside = part.members();
    let outside = part.complement();
    let (v_in, f_in, g_in) = coeffs.local_on(s, inside);
    let (v_out, f_out, g_out) = if outside.is_empty() {
        (BigInt::zero(), Vec::new(), g_in.clone())
    } else {
        coeffs.local_on(s, &outside)
    };
    let mut alice_outputs = vec![0; s.m_a()];
    let mut comm = vec![0u8; s.m_a()];
    for (&x, a) in inside.iter().zip(f_in) {
        alice_outputs[x] = a;
    }
    for (&x, a) in outside.iter().zip(f_out) {
        alice_outputs[x] = a;
        comm[x] = 1;
    }
    PartitionOutcome {
        value: v_in + v_out,
        strategy: OneBitStrategy {
            alice_outputs,
            comm,
            bob_outputs: [g_in, g_out],
        },
    }
}

/// Sum of the local bounds of the subgames on `J` and on its complement.
/// An empty complement contributes 0.
pub fn partition_score(functional: &BellFunctional, part: &Bipartition) -> Result<BigInt> {
    let s = functional.scenario();
    if part.ground_size() != s.m_a() {
        return shape(format!(
            "bipartition over {} inputs for a functional with {} Alice inputs",
            part.ground_size(),
            s.m_a()
        ));
    }
    Ok(solve_partition(&Coefficients::of(functional), s, part).value)
}

fn partition_count(m_a: usize) -> u64 {
    1u64 << (m_a - 1)
}

/// The `k`-th bipartition in [`enumerate_bipartitions`] order.
fn nth_bipartition(m_a: usize, k: u64) -> Bipartition {
    let full = partition_count(m_a) - 1;
    let mask = if k == 0 { full } else { k - 1 };
    let members: Vec<usize> = std::iter::once(0)
        .chain((1..m_a).filter(|i| mask >> (i - 1) & 1 == 1))
        .collect();
    Bipartition::new(m_a, &members).expect("members lie in the ground set")
}

/// All canonical bipartitions of `m_a` inputs: the trivial one first, then
/// the `2^(m_a-1) - 1` nontrivial ones, each unordered pair exactly once.
pub fn enumerate_bipartitions(m_a: usize) -> Result<impl Iterator<Item = Bipartition>> {
    if m_a == 0 {
        return domain("need at least one Alice input");
    }
    if m_a > MAX_PARTITION_INPUTS {
        return Err(Error::Capacity(format!(
            "{m_a} Alice inputs give 2^{} bipartitions",
            m_a - 1
        )));
    }
    Ok((0..partition_count(m_a)).map(move |k| nth_bipartition(m_a, k)))
}

/// Exact one-bit bound: the best [`partition_score`] over all bipartitions,
/// with the trivial partition first so ties keep the local strategy.
pub fn one_bit_bound(functional: &BellFunctional) -> Result<BoundResult> {
    let s = *functional.scenario();
    if s.m_a() > MAX_PARTITION_INPUTS {
        return Err(Error::Capacity(format!("{} Alice inputs", s.m_a())));
    }
    let coeffs = Coefficients::of(functional);
    let (k, best) = (0..partition_count(s.m_a()))
        .into_par_iter()
        .map(|k| {
            (
                k,
                solve_partition(&coeffs, &s, &nth_bipartition(s.m_a(), k)),
            )
        })
        .reduce_with(|left, right| {
            // larger value wins; ties go to the earlier partition
            let right_better =
                right.1.value > left.1.value || (right.1.value == left.1.value && right.0 < left.0);
            if right_better {
                right
            } else {
                left
            }
        })
        .expect("at least the trivial partition");
    Ok(BoundResult {
        value: best.value,
        witness_local: None,
        witness_onebit: Some(best.strategy),
        witness_partition: Some(nth_bipartition(s.m_a(), k)),
    })
}

/// `o_A^m_A * 2^m_A * o_B^(2 m_B)`, the number of triples the oracle visits.
pub fn bruteforce_candidates(scenario: &Scenario) -> BigUint {
    let oa = BigUint::from(scenario.o_a());
    let ob = BigUint::from(scenario.o_b());
    oa.pow(scenario.m_a() as u32)
        * (BigUint::one() << scenario.m_a())
        * ob.pow(2 * scenario.m_b() as u32)
}

fn check_capacity(scenario: &Scenario, limit: u64) -> Result<()> {
    let n = bruteforce_candidates(scenario);
    if n > BigUint::from(limit) || scenario.m_a() >= 63 {
        return Err(Error::Capacity(format!(
            "brute force over {n} strategy triples in scenario {scenario} exceeds the limit of {limit}"
        )));
    }
    Ok(())
}

fn bruteforce_max<T: Weight>(s: &Scenario, coeffs: &[T]) -> T {
    let (m_a, m_b) = (s.m_a(), s.m_b());
    (0..1u64 << m_a)
        .into_par_iter()
        .map(|h| {
            let comm: Vec<usize> = (0..m_a).map(|x| (h >> x & 1) as usize).collect();
            let mut best: Option<T> = None;
            let mut bob = Odometer::new(2 * m_b, s.o_b());
            while bob.advance() {
                let mut alice = Odometer::new(m_a, s.o_a());
                while alice.advance() {
                    let mut total = T::zero();
                    for x in 0..m_a {
                        let g = &bob.digits[comm[x] * m_b..(comm[x] + 1) * m_b];
                        for (y, &b) in g.iter().enumerate() {
                            total += &coeffs[s.index_unchecked(x, y, alice.digits[x], b)];
                        }
                    }
                    if best.as_ref().is_none_or(|bv| total > *bv) {
                        best = Some(total);
                    }
                }
            }
            best.expect("nonempty enumeration")
        })
        .max()
        .expect("at least one communication map")
}

/// Maximum score over every deterministic triple `(f, h, g)`, refusing when
/// the enumeration exceeds [`BRUTEFORCE_LIMIT`].
pub fn one_bit_bound_bruteforce(functional: &BellFunctional) -> Result<BigInt> {
    one_bit_bound_bruteforce_with_limit(functional, BRUTEFORCE_LIMIT)
}

pub fn one_bit_bound_bruteforce_with_limit(
    functional: &BellFunctional,
    limit: u64,
) -> Result<BigInt> {
    let s = functional.scenario();
    check_capacity(s, limit)?;
    Ok(match Coefficients::of(functional) {
        Coefficients::Small(c) => BigInt::from(bruteforce_max(s, &c)),
        Coefficients::Big(c) => bruteforce_max(s, &c),
    })
}

/// One representative strategy per distinct deterministic one-bit behavior,
/// in first-seen enumeration order.
pub fn distinct_onebit_behaviors(scenario: &Scenario, limit: u64) -> Result<Vec<OneBitStrategy>> {
    check_capacity(scenario, limit)?;
    let (m_a, m_b) = (scenario.m_a(), scenario.m_b());
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for h in 0..1u64 << m_a {
        let comm: Vec<u8> = (0..m_a).map(|x| (h >> x & 1) as u8).collect();
        let mut bob = Odometer::new(2 * m_b, scenario.o_b());
        while bob.advance() {
            let mut alice = Odometer::new(m_a, scenario.o_a());
            while alice.advance() {
                // the behavior is fixed by the output pair of every (x, y) block
                let key: Vec<usize> = (0..m_a)
                    .flat_map(|x| {
                        let c = usize::from(comm[x]);
                        let a = alice.digits[x];
                        let g = &bob.digits;
                        (0..m_b).map(move |y| a * scenario.o_b() + g[c * m_b + y])
                    })
                    .collect();
                if seen.insert(key) {
                    out.push(OneBitStrategy {
                        alice_outputs: alice.digits.clone(),
                        comm: comm.clone(),
                        bob_outputs: [bob.digits[..m_b].to_vec(), bob.digits[m_b..].to_vec()],
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Deterministic behavior `p(a,b|x,y) = [a = f(x)] [b = g(y, h(x))]`.
pub fn behavior_of_strategy(strategy: &Strategy, scenario: &Scenario) -> Result<Behavior> {
    let s = strategy.to_one_bit();
    s.check(scenario)?;
    let mut p = vec![0.0; scenario.probability_dimension()];
    for x in 0..scenario.m_a() {
        let g = &s.bob_outputs[usize::from(s.comm[x])];
        for (y, &b) in g.iter().enumerate() {
            p[scenario.index_unchecked(x, y, s.alice_outputs[x], b)] = 1.0;
        }
    }
    Behavior::new(*scenario, p)
}

/// `o_A^m_A [o_B^m_B + (2^(m_A-1) - 1)(o_B^(2 m_B) - o_B^m_B)]`.
pub fn count_onebit_vertices(scenario: &Scenario) -> BigUint {
    let oa = BigUint::from(scenario.o_a());
    let ob = BigUint::from(scenario.o_b());
    let bob_local = ob.clone().pow(scenario.m_b() as u32);
    let bob_pairs = ob.pow(2 * scenario.m_b() as u32);
    let nontrivial = (BigUint::one() << (scenario.m_a() - 1)) - BigUint::one();
    oa.pow(scenario.m_a() as u32) * (bob_local.clone() + nontrivial * (bob_pairs - bob_local))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{is_no_signaling, make_truncated_xor_game, score};
    use num_traits::ToPrimitive;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sc(m_a: usize, m_b: usize, o_a: usize, o_b: usize) -> Scenario {
        Scenario::new(m_a, m_b, o_a, o_b).unwrap()
    }

    fn random_functional(s: Scenario, rng: &mut ChaCha8Rng) -> BellFunctional {
        BellFunctional::from_fn(s, |_, _, _, _| rng.random_range(-5..=5))
    }

    /// Local bound by enumerating both parties outright.
    fn local_bruteforce(f: &BellFunctional) -> BigInt {
        let s = f.scenario();
        let mut best: Option<BigInt> = None;
        let mut alice = Odometer::new(s.m_a(), s.o_a());
        while alice.advance() {
            let mut bob = Odometer::new(s.m_b(), s.o_b());
            while bob.advance() {
                let st = LocalStrategy {
                    alice_outputs: alice.digits.clone(),
                    bob_outputs: bob.digits.clone(),
                };
                let v = st.as_one_bit().exact_score(f).unwrap();
                if best.as_ref().is_none_or(|b| v > *b) {
                    best = Some(v);
                }
            }
        }
        best.unwrap()
    }

    #[test]
    fn local_bounds_of_xor_games() {
        assert_eq!(
            local_bound(&make_truncated_xor_game(5).unwrap()).value,
            BigInt::from(6)
        );
        assert_eq!(
            local_bound(&make_truncated_xor_game(6).unwrap()).value,
            BigInt::from(7)
        );
        let chsh = make_truncated_xor_game(2).unwrap();
        assert_eq!(local_bound(&chsh).value, BigInt::from(3));
        assert_eq!(local_bruteforce(&chsh), BigInt::from(3));
        assert_eq!(
            local_bound(&BellFunctional::zero(sc(3, 2, 2, 2))).value,
            BigInt::zero()
        );
    }

    #[test]
    fn local_bound_matches_two_sided_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for s in [sc(2, 3, 2, 2), sc(3, 2, 3, 2), sc(2, 2, 3, 3)] {
            for _ in 0..30 {
                let f = random_functional(s, &mut rng);
                assert_eq!(local_bound(&f).value, local_bruteforce(&f));
            }
        }
    }

    #[test]
    fn partition_scores() {
        let g = make_truncated_xor_game(5).unwrap();
        let full = Bipartition::trivial(5).unwrap();
        assert_eq!(partition_score(&g, &full).unwrap(), BigInt::from(6));
        let best = enumerate_bipartitions(5)
            .unwrap()
            .map(|j| partition_score(&g, &j).unwrap())
            .max()
            .unwrap();
        assert_eq!(best, BigInt::from(7));
        let zero = BellFunctional::zero(sc(5, 2, 5, 5));
        assert!(enumerate_bipartitions(5)
            .unwrap()
            .all(|j| partition_score(&zero, &j).unwrap().is_zero()));
        assert!(partition_score(&g, &Bipartition::trivial(4).unwrap()).is_err());
    }

    #[test]
    fn bipartition_enumeration() {
        let five: Vec<_> = enumerate_bipartitions(5).unwrap().collect();
        assert_eq!(five.len(), 16);
        assert!(five[0].is_trivial());
        assert_eq!(five.iter().filter(|j| !j.is_trivial()).count(), 15);
        let unique: HashSet<_> = five.iter().cloned().collect();
        assert_eq!(unique.len(), 16);
        assert!(five.iter().all(|j| j.contains(0)));

        let two: Vec<_> = enumerate_bipartitions(2).unwrap().collect();
        assert_eq!(two.len(), 2);
        assert_eq!(two[1].members(), &[0]);
        assert_eq!(two[1].complement(), vec![1]);

        let one: Vec<_> = enumerate_bipartitions(1).unwrap().collect();
        assert_eq!(one.len(), 1);
        assert!(one[0].is_trivial());
        assert!(enumerate_bipartitions(0).is_err());
    }

    #[test]
    fn one_bit_bounds_of_xor_games() {
        assert_eq!(
            one_bit_bound(&make_truncated_xor_game(5).unwrap())
                .unwrap()
                .value,
            BigInt::from(7)
        );
        assert_eq!(
            one_bit_bound(&make_truncated_xor_game(6).unwrap())
                .unwrap()
                .value,
            BigInt::from(8)
        );
        let chsh = make_truncated_xor_game(2).unwrap();
        assert_eq!(one_bit_bound(&chsh).unwrap().value, BigInt::from(4));
        assert_eq!(one_bit_bound_bruteforce(&chsh).unwrap(), BigInt::from(4));
        let zero = BellFunctional::zero(sc(3, 2, 2, 2));
        assert!(one_bit_bound(&zero).unwrap().value.is_zero());
        assert!(one_bit_bound_bruteforce(&zero).unwrap().is_zero());
        // ties keep the trivial partition
        assert!(one_bit_bound(&zero)
            .unwrap()
            .witness_partition
            .unwrap()
            .is_trivial());
    }

    #[test]
    fn witnesses_replay_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..40 {
            let f = random_functional(sc(3, 2, 3, 2), &mut rng);
            for r in [local_bound(&f), one_bit_bound(&f).unwrap()] {
                let w = r.witness().unwrap();
                assert_eq!(w.to_one_bit().exact_score(&f).unwrap(), r.value);
                let p = behavior_of_strategy(&w, f.scenario()).unwrap();
                assert_eq!(score(&f, &p).unwrap(), r.value.to_f64().unwrap());
            }
            let r = one_bit_bound(&f).unwrap();
            assert_eq!(
                r.witness_onebit.unwrap().partition().unwrap(),
                r.witness_partition.unwrap()
            );
        }
    }

    #[test]
    fn big_coefficients_take_the_exact_path() {
        let huge: BigInt = BigInt::from(i64::MAX) * 4;
        let s = sc(2, 2, 2, 2);
        let mut coeffs = vec![BigInt::zero(); 16];
        coeffs[0] = huge.clone();
        coeffs[15] = huge.clone();
        let f = BellFunctional::new(s, coeffs).unwrap();
        assert!(f.small_coefficients().is_none());
        assert_eq!(local_bound(&f).value, huge.clone() * 2);
        assert_eq!(one_bit_bound(&f).unwrap().value, huge.clone() * 2);
        assert_eq!(one_bit_bound_bruteforce(&f).unwrap(), huge * 2);
    }

    #[test]
    fn bruteforce_guard() {
        let g = make_truncated_xor_game(6).unwrap();
        assert!(matches!(
            one_bit_bound_bruteforce(&g),
            Err(Error::Capacity(_))
        ));
        let g5 = make_truncated_xor_game(5).unwrap();
        assert!(matches!(
            one_bit_bound_bruteforce_with_limit(&g5, 10_000_000),
            Err(Error::Capacity(_))
        ));
        assert_eq!(
            bruteforce_candidates(g5.scenario()),
            BigUint::from(62_500_000u64)
        );
    }

    #[test]
    fn vertex_counts() {
        assert_eq!(
            count_onebit_vertices(&sc(5, 2, 5, 5)),
            BigUint::from(28_203_125u64)
        );
        assert_eq!(count_onebit_vertices(&sc(2, 2, 2, 2)), BigUint::from(64u32));
        assert_eq!(count_onebit_vertices(&sc(1, 1, 1, 1)), BigUint::from(1u32));
    }

    #[test]
    fn distinct_behaviors_bounded_by_formula() {
        for s in [sc(2, 2, 2, 2), sc(3, 2, 2, 2)] {
            let distinct = distinct_onebit_behaviors(&s, BRUTEFORCE_LIMIT).unwrap();
            assert!(BigUint::from(distinct.len()) <= count_onebit_vertices(&s));
        }
        assert_eq!(
            distinct_onebit_behaviors(&sc(2, 2, 2, 2), BRUTEFORCE_LIMIT)
                .unwrap()
                .len(),
            64
        );
    }

    #[test]
    fn deterministic_behaviors() {
        let s = sc(2, 2, 2, 2);
        let zero_maps = LocalStrategy {
            alice_outputs: vec![0, 0],
            bob_outputs: vec![0, 0],
        };
        let p = behavior_of_strategy(&zero_maps.clone().into(), &s).unwrap();
        for x in 0..2 {
            for y in 0..2 {
                assert_eq!(p.prob(x, y, 0, 0).unwrap(), 1.0);
            }
        }
        assert_eq!(is_no_signaling(&p, 0.0), (true, 0.0));

        // Bob flips his answer on receiving c = 1, and Alice sends c = x.
        let signaling = OneBitStrategy {
            alice_outputs: vec![0, 0],
            comm: vec![0, 1],
            bob_outputs: [vec![0, 0], vec![1, 1]],
        };
        let p = behavior_of_strategy(&signaling.into(), &s).unwrap();
        // Bob's marginal p(b=0|y) is 1 for x=0 and 0 for x=1
        let (ok, worst) = is_no_signaling(&p, 1e-9);
        assert!(!ok);
        assert_eq!(worst, 1.0);

        let bad = LocalStrategy {
            alice_outputs: vec![0, 2],
            bob_outputs: vec![0, 0],
        };
        assert!(behavior_of_strategy(&bad.into(), &s).is_err());
    }

    #[test]
    fn bound_result_json_fields() {
        let r = one_bit_bound(&make_truncated_xor_game(3).unwrap()).unwrap();
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        for key in ["value", "partition", "alice_outputs", "comm", "bob_outputs"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["value"].to_string(), "5");
        let l: serde_json::Value =
            serde_json::to_value(local_bound(&make_truncated_xor_game(3).unwrap())).unwrap();
        assert!(l["comm"].is_null());
        assert!(l["partition"].is_null());
    }

    #[test]
    fn one_bit_is_thread_count_independent() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let f = random_functional(sc(6, 2, 3, 3), &mut rng);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| one_bit_bound(&f).unwrap())
        };
        assert_eq!(run(1), run(4));
    }
}
