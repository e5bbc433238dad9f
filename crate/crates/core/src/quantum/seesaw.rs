use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::linalg::{inner, orthonormalize, random_unitary_with, ComplexMatrix, C64};
use super::measurement::{reduce_to_alice, reduce_to_bob, MeasurementSet, QuantumModel};
use super::state::QuantumState;
use crate::error::{domain, shape, Result};
use crate::scenario::{BellFunctional, Scenario};

/// Jacobi passes over all basis pairs within one party's phase.
const PASSES_PER_PHASE: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeesawConfig {
    pub restarts: usize,
    pub sweeps_max: usize,
    pub improvement_tol: f64,
    pub rng_seed: u64,
}

impl Default for SeesawConfig {
    fn default() -> Self {
        SeesawConfig {
            restarts: 50,
            sweeps_max: 500,
            improvement_tol: 1e-9,
            rng_seed: 0,
        }
    }
}

impl SeesawConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 || self.sweeps_max == 0 {
            return domain("restarts and sweeps_max must be positive");
        }
        if !(self.improvement_tol > 0.0 && self.improvement_tol.is_finite()) {
            return domain(format!(
                "improvement_tol {} must be positive",
                self.improvement_tol
            ));
        }
        Ok(())
    }
}

/// History of a single restart.
#[derive(Clone, Debug)]
pub struct SeesawTrace {
    /// Score after initialisation, then after every completed sweep.
    pub scores: Vec<f64>,
    /// Largest Gram defect seen before each re-orthonormalisation.
    pub max_gram_residual: f64,
    pub model: QuantumModel,
}

impl SeesawTrace {
    pub fn score(&self) -> f64 {
        *self.scores.last().expect("trace holds the initial score")
    }
}

fn check_inputs(functional: &BellFunctional, state: &QuantumState) -> Result<()> {
    let s = functional.scenario();
    let d = state.local_dim();
    if s.o_a() != d || s.o_b() != d {
        return shape(format!(
            "rank-1 measurements need {d} outputs per party, scenario has {}/{}",
            s.o_a(),
            s.o_b()
        ));
    }
    Ok(())
}

struct Problem<'a> {
    scenario: Scenario,
    coefficients: Vec<f64>,
    rho: &'a ComplexMatrix,
    d: usize,
}

impl Problem<'_> {
    fn coeff(&self, x: usize, y: usize, a: usize, b: usize) -> f64 {
        self.coefficients[self.scenario.index_unchecked(x, y, a, b)]
    }

    /// `K[x][a] = Σ_{y,b} V(x,y,a,b) Tr_B[ρ (1 ⊗ |β_yb⟩⟨β_yb|)]`.
    fn alice_operators(&self, bob: &[Vec<Vec<C64>>]) -> Vec<Vec<ComplexMatrix>> {
        let s = &self.scenario;
        let reduced: Vec<Vec<ComplexMatrix>> = bob
            .iter()
            .map(|basis| {
                basis
                    .iter()
                    .map(|beta| reduce_to_alice(self.rho, self.d, beta))
                    .collect()
            })
            .collect();
        (0..s.m_a())
            .map(|x| {
                (0..s.o_a())
                    .map(|a| {
                        let mut k = ComplexMatrix::zeros(self.d);
                        for (y, basis) in reduced.iter().enumerate() {
                            for (b, r) in basis.iter().enumerate() {
                                let c = self.coeff(x, y, a, b);
                                if c != 0.0 {
                                    k = k.add(&r.scale(C64::new(c, 0.0)));
                                }
                            }
                        }
                        k
                    })
                    .collect()
            })
            .collect()
    }

    fn bob_operators(&self, alice: &[Vec<Vec<C64>>]) -> Vec<Vec<ComplexMatrix>> {
        let s = &self.scenario;
        let reduced: Vec<Vec<ComplexMatrix>> = alice
            .iter()
            .map(|basis| {
                basis
                    .iter()
                    .map(|alpha| reduce_to_bob(self.rho, self.d, alpha))
                    .collect()
            })
            .collect();
        (0..s.m_b())
            .map(|y| {
                (0..s.o_b())
                    .map(|b| {
                        let mut k = ComplexMatrix::zeros(self.d);
                        for (x, basis) in reduced.iter().enumerate() {
                            for (a, r) in basis.iter().enumerate() {
                                let c = self.coeff(x, y, a, b);
                                if c != 0.0 {
                                    k = k.add(&r.scale(C64::new(c, 0.0)));
                                }
                            }
                        }
                        k
                    })
                    .collect()
            })
            .collect()
    }
}

fn phase_value(ops: &[Vec<ComplexMatrix>], bases: &[Vec<Vec<C64>>]) -> f64 {
    ops.iter()
        .zip(bases)
        .map(|(k, basis)| {
            k.iter()
                .zip(basis)
                .map(|(m, v)| m.sandwich(v, v).re)
                .sum::<f64>()
        })
        .sum()
}

/// Rotates pairs of basis vectors so each pair maximises its share of
/// `Σ_a ⟨v_a|K_a|v_a⟩`. Each 2×2 subproblem is solved exactly.
fn improve_basis(ops: &[ComplexMatrix], basis: &mut [Vec<C64>]) {
    let n = basis.len();
    for _ in 0..PASSES_PER_PHASE {
        let mut gained = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                let diff = ops[i].sub(&ops[j]);
                let (ui, uj) = (&basis[i], &basis[j]);
                let p = diff.sandwich(ui, ui).re;
                let r = diff.sandwich(uj, uj).re;
                let q = diff.sandwich(ui, uj);
                let half = 0.5 * (p - r);
                let radius = (half * half + q.norm_sqr()).sqrt();
                let gain = radius - half;
                if gain.is_nan() || gain <= 1e-15 * (1.0 + radius) {
                    continue;
                }
                let lambda = 0.5 * (p + r) + radius;
                let (mut u0, mut u1) = (q, C64::new(lambda - p, 0.0));
                let len = (u0.norm_sqr() + u1.norm_sqr()).sqrt();
                if len.is_nan() || len <= 0.0 {
                    continue;
                }
                u0 /= len;
                u1 /= len;
                let new_i: Vec<C64> = ui.iter().zip(uj).map(|(&a, &b)| u0 * a + u1 * b).collect();
                let new_j: Vec<C64> = ui
                    .iter()
                    .zip(uj)
                    .map(|(&a, &b)| -u1.conj() * a + u0.conj() * b)
                    .collect();
                basis[i] = new_i;
                basis[j] = new_j;
                gained += gain;
            }
        }
        if gained < 1e-13 {
            break;
        }
    }
}

fn gram_residual(bases: &[Vec<Vec<C64>>]) -> f64 {
    let mut worst: f64 = 0.0;
    for basis in bases {
        for (i, u) in basis.iter().enumerate() {
            for (j, v) in basis.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((inner(u, v) - C64::new(target, 0.0)).norm());
            }
        }
    }
    worst
}

fn random_bases(rng: &mut ChaCha20Rng, inputs: usize, d: usize) -> Vec<Vec<Vec<C64>>> {
    (0..inputs)
        .map(|_| random_unitary_with(d, rng).columns())
        .collect()
}

/// Runs restart `index` of the seesaw and records its score history.
pub fn seesaw_restart(
    functional: &BellFunctional,
    state: &QuantumState,
    config: &SeesawConfig,
    index: u64,
) -> Result<SeesawTrace> {
    config.validate()?;
    check_inputs(functional, state)?;
    let problem = Problem {
        scenario: *functional.scenario(),
        coefficients: functional.real_coefficients(),
        rho: state.density(),
        d: state.local_dim(),
    };
    let s = &problem.scenario;
    let d = problem.d;
    let mut rng = ChaCha20Rng::seed_from_u64(config.rng_seed);
    rng.set_stream(index);
    let mut alice = random_bases(&mut rng, s.m_a(), d);
    let mut bob = random_bases(&mut rng, s.m_b(), d);

    let mut scores = vec![phase_value(&problem.alice_operators(&bob), &alice)];
    let mut max_gram_residual: f64 = 0.0;
    for _ in 0..config.sweeps_max {
        let ops = problem.alice_operators(&bob);
        for (k, basis) in ops.iter().zip(alice.iter_mut()) {
            improve_basis(k, basis);
        }
        let ops = problem.bob_operators(&alice);
        for (k, basis) in ops.iter().zip(bob.iter_mut()) {
            improve_basis(k, basis);
        }
        max_gram_residual = max_gram_residual
            .max(gram_residual(&alice))
            .max(gram_residual(&bob));
        for basis in alice.iter_mut().chain(bob.iter_mut()) {
            orthonormalize(basis);
        }
        let value = phase_value(&problem.bob_operators(&alice), &bob);
        let previous = *scores.last().unwrap();
        scores.push(value);
        if value - previous < config.improvement_tol {
            break;
        }
    }
    let model = QuantumModel::new(
        state.clone(),
        MeasurementSet::from_raw(d, alice),
        MeasurementSet::from_raw(d, bob),
    )?;
    Ok(SeesawTrace {
        scores,
        max_gram_residual,
        model,
    })
}

/// Maximises `⟨V, P⟩` over rank-1 projective measurements on a fixed
/// state. Returns the best score over all restarts and its model; ties
/// go to the lowest restart index, so the result does not depend on the
/// thread count.
pub fn seesaw_optimize(
    functional: &BellFunctional,
    state: &QuantumState,
    config: &SeesawConfig,
) -> Result<(f64, QuantumModel)> {
    config.validate()?;
    check_inputs(functional, state)?;
    let traces = (0..config.restarts as u64)
        .into_par_iter()
        .map(|k| seesaw_restart(functional, state, config, k))
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (k, t) in traces.iter().enumerate() {
        if t.score() > traces[best].score() {
            best = k;
        }
    }
    let trace = traces.into_iter().nth(best).expect("at least one restart");
    Ok((trace.score(), trace.model))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::linalg::random_unitary;
    use crate::quantum::measurement::behavior_of_model;
    use crate::quantum::state::maximally_entangled_state;
    use crate::scenario::{make_truncated_xor_game, score};

    fn quick(restarts: usize, seed: u64) -> SeesawConfig {
        SeesawConfig {
            restarts,
            sweeps_max: 200,
            improvement_tol: 1e-10,
            rng_seed: seed,
        }
    }

    #[test]
    fn config_validation() {
        assert!(SeesawConfig::default().validate().is_ok());
        assert!(SeesawConfig {
            restarts: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(SeesawConfig {
            improvement_tol: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(SeesawConfig {
            improvement_tol: f64::NAN,
            ..Default::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn zero_functional_scores_zero() {
        let s = Scenario::xor_d(3).unwrap();
        let zero = BellFunctional::zero(s);
        let (value, _) =
            seesaw_optimize(&zero, &maximally_entangled_state(3).unwrap(), &quick(3, 1)).unwrap();
        assert_eq!(value, 0.0);
    }

    #[test]
    fn mismatched_dimension_rejected() {
        let g = make_truncated_xor_game(4).unwrap();
        assert!(seesaw_optimize(&g, &maximally_entangled_state(3).unwrap(), &quick(1, 0)).is_err());
    }

    #[test]
    fn scores_are_monotone_and_bases_stay_orthonormal() {
        let g = make_truncated_xor_game(4).unwrap();
        let state = maximally_entangled_state(4).unwrap();
        for k in 0..5 {
            let t = seesaw_restart(&g, &state, &quick(1, 3), k).unwrap();
            for w in t.scores.windows(2) {
                assert!(w[1] >= w[0] - 1e-10, "{:?}", t.scores);
            }
            assert!(t.max_gram_residual < 1e-10);
            assert!(t.model.alice.projector_residual() < 1e-12);
            assert!(t.model.bob.projector_residual() < 1e-12);
        }
    }

    #[test]
    fn reported_score_matches_born_rule() {
        let g = make_truncated_xor_game(3).unwrap();
        let (value, model) =
            seesaw_optimize(&g, &maximally_entangled_state(3).unwrap(), &quick(4, 2)).unwrap();
        let p = behavior_of_model(&model).unwrap();
        assert!((score(&g, &p).unwrap() - value).abs() < 1e-9);
    }

    #[test]
    fn d2_reaches_known_quantum_value() {
        // the d = 2 game is CHSH-like: quantum value 2 + √2 for V = 4
        let g = make_truncated_xor_game(2).unwrap();
        let (value, _) =
            seesaw_optimize(&g, &maximally_entangled_state(2).unwrap(), &quick(8, 0)).unwrap();
        assert!((value - (2.0 + 2f64.sqrt())).abs() < 1e-6, "{value}");
    }

    #[test]
    fn behavior_invariant_under_u_tensor_conj_u() {
        let d = 4;
        let g = make_truncated_xor_game(d).unwrap();
        let (_, model) =
            seesaw_optimize(&g, &maximally_entangled_state(d).unwrap(), &quick(2, 5)).unwrap();
        let u = random_unitary(d, 11);
        let rotated = QuantumModel::new(
            model.state.clone(),
            model.alice.rotated(&u),
            model.bob.rotated(&u.conj()),
        )
        .unwrap();
        let p = behavior_of_model(&model).unwrap();
        let q = behavior_of_model(&rotated).unwrap();
        let diff = p
            .probabilities()
            .iter()
            .zip(q.probabilities())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(diff < 1e-12);
    }

    #[test]
    fn same_seed_same_result() {
        let g = make_truncated_xor_game(3).unwrap();
        let state = maximally_entangled_state(3).unwrap();
        let a = seesaw_optimize(&g, &state, &quick(3, 9)).unwrap();
        let b = seesaw_optimize(&g, &state, &quick(3, 9)).unwrap();
        assert_eq!(a.0.to_bits(), b.0.to_bits());
        assert_eq!(a.1, b.1);
    }
}
