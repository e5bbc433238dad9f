use serde::{Deserialize, Serialize};
use serde_json::Number;

use super::linalg::{fourier_matrix, inner, ComplexMatrix, C64};
use super::state::QuantumState;
use crate::error::{domain, shape, Error, Result};
use crate::json::{number_to_real, real_to_number};
use crate::scenario::{
    ns_behavior_from_functional, white_noise_behavior, Behavior, BellFunctional, Scenario,
};

/// Tolerance on idempotence and completeness of projectors.
pub const PROJECTOR_TOL: f64 = 1e-9;

/// Rank-1 projective measurements: for every input, an orthonormal basis
/// whose `a`-th vector is the projector for output `a`.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementSet {
    dim: usize,
    vectors: Vec<Vec<Vec<C64>>>,
}

impl MeasurementSet {
    /// `vectors[x][a]` is the basis vector for input `x`, output `a`.
    pub fn new(vectors: Vec<Vec<Vec<C64>>>) -> Result<Self> {
        let Some(first) = vectors.first() else {
            return domain("measurement set without inputs");
        };
        let dim = first.len();
        for (x, basis) in vectors.iter().enumerate() {
            if basis.len() != dim || basis.iter().any(|v| v.len() != dim) {
                return shape(format!(
                    "basis for input {x} is not {dim} vectors of length {dim}"
                ));
            }
        }
        let set = MeasurementSet { dim, vectors };
        let residual = set.projector_residual();
        if residual.is_nan() || residual > PROJECTOR_TOL {
            return domain(format!("bases are not orthonormal (residual {residual:e})"));
        }
        Ok(set)
    }

    /// One basis per input, taken from the columns of unitaries.
    pub fn from_unitaries(unitaries: &[ComplexMatrix]) -> Result<Self> {
        MeasurementSet::new(unitaries.iter().map(ComplexMatrix::columns).collect())
    }

    /// Every input measured in the computational basis.
    pub fn computational(dim: usize, inputs: usize) -> Self {
        MeasurementSet {
            dim,
            vectors: vec![ComplexMatrix::identity(dim).columns(); inputs],
        }
    }

    /// Every input measured in the Fourier basis.
    pub fn fourier(dim: usize, inputs: usize) -> Self {
        MeasurementSet {
            dim,
            vectors: vec![fourier_matrix(dim).columns(); inputs],
        }
    }

    pub(crate) fn from_raw(dim: usize, vectors: Vec<Vec<Vec<C64>>>) -> Self {
        MeasurementSet { dim, vectors }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn inputs(&self) -> usize {
        self.vectors.len()
    }

    pub fn outputs(&self) -> usize {
        self.dim
    }

    pub fn vector(&self, x: usize, a: usize) -> &[C64] {
        &self.vectors[x][a]
    }

    pub fn basis(&self, x: usize) -> &[Vec<C64>] {
        &self.vectors[x]
    }

    pub fn projector(&self, x: usize, a: usize) -> ComplexMatrix {
        ComplexMatrix::outer(&self.vectors[x][a])
    }

    /// Largest idempotence, Hermiticity or completeness defect over all
    /// inputs, computed from the Gram matrices of the bases.
    pub fn projector_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for basis in &self.vectors {
            for (i, u) in basis.iter().enumerate() {
                for (j, v) in basis.iter().enumerate() {
                    let target = if i == j { 1.0 } else { 0.0 };
                    worst = worst.max((inner(u, v) - C64::new(target, 0.0)).norm());
                }
            }
        }
        worst
    }

    /// Applies `U` to every basis vector.
    pub fn rotated(&self, u: &ComplexMatrix) -> Self {
        MeasurementSet {
            dim: self.dim,
            vectors: self
                .vectors
                .iter()
                .map(|basis| basis.iter().map(|v| u.mul_vec(v)).collect())
                .collect(),
        }
    }
}

/// A state with one measurement set per party.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumModel {
    pub state: QuantumState,
    pub alice: MeasurementSet,
    pub bob: MeasurementSet,
}

impl QuantumModel {
    pub fn new(state: QuantumState, alice: MeasurementSet, bob: MeasurementSet) -> Result<Self> {
        let d = state.local_dim();
        if alice.dim != d || bob.dim != d {
            return shape(format!(
                "measurements of dimension {}/{} on a state of local dimension {d}",
                alice.dim, bob.dim
            ));
        }
        Ok(QuantumModel { state, alice, bob })
    }

    pub fn scenario(&self) -> Scenario {
        Scenario::new(
            self.alice.inputs(),
            self.bob.inputs(),
            self.alice.outputs(),
            self.bob.outputs(),
        )
        .expect("measurement sets are nonempty")
    }
}

/// `Tr_A[ρ (|α⟩⟨α| ⊗ 1)]` as an operator on Bob's space.
pub(crate) fn reduce_to_bob(rho: &ComplexMatrix, d: usize, alpha: &[C64]) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(d);
    for i in 0..d {
        let ai = alpha[i].conj();
        for k in 0..d {
            let w = ai * alpha[k];
            if w == C64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..d {
                for l in 0..d {
                    out[(j, l)] += w * rho[(i * d + j, k * d + l)];
                }
            }
        }
    }
    out
}

/// `Tr_B[ρ (1 ⊗ |β⟩⟨β|)]` as an operator on Alice's space.
pub(crate) fn reduce_to_alice(rho: &ComplexMatrix, d: usize, beta: &[C64]) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(d);
    for j in 0..d {
        let bj = beta[j].conj();
        for l in 0..d {
            let w = bj * beta[l];
            if w == C64::new(0.0, 0.0) {
                continue;
            }
            for i in 0..d {
                for k in 0..d {
                    out[(i, k)] += w * rho[(i * d + j, k * d + l)];
                }
            }
        }
    }
    out
}

/// Born-rule behavior `p(a,b|x,y) = Tr[ρ (A_a^x ⊗ B_b^y)]`.
pub fn behavior_of_model(model: &QuantumModel) -> Result<Behavior> {
    let s = model.scenario();
    let d = model.state.local_dim();
    let rho = model.state.density();
    let mut p = vec![0.0; s.probability_dimension()];
    for x in 0..s.m_a() {
        for a in 0..s.o_a() {
            let bob_side = reduce_to_bob(rho, d, model.alice.vector(x, a));
            for y in 0..s.m_b() {
                for b in 0..s.o_b() {
                    let beta = model.bob.vector(y, b);
                    p[s.index_unchecked(x, y, a, b)] = bob_side.sandwich(beta, beta).re;
                }
            }
        }
    }
    Behavior::new(s, p)
}

/// `max_{i,j} | d |⟨b_i^0|b_j^1⟩|² - 1 |`, the relative distance of Bob's two
/// bases from being mutually unbiased.
pub fn mub_deviation(bob: &MeasurementSet) -> Result<f64> {
    if bob.inputs() != 2 {
        return domain(format!(
            "MUB check needs exactly two bases, got {}",
            bob.inputs()
        ));
    }
    let d = bob.dim as f64;
    let mut worst: f64 = 0.0;
    for u in bob.basis(0) {
        for v in bob.basis(1) {
            worst = worst.max((d * inner(u, v).norm_sqr() - 1.0).abs());
        }
    }
    Ok(worst)
}

/// Overlaps `|⟨a_j^i | a_k^{i+1}⟩|²` between cyclically neighbouring inputs,
/// indexed `[i][j][k]`.
pub fn neighbor_overlaps(alice: &MeasurementSet) -> Vec<Vec<Vec<f64>>> {
    let m = alice.inputs();
    (0..m)
        .map(|i| {
            let next = (i + 1) % m;
            alice
                .basis(i)
                .iter()
                .map(|u| {
                    alice
                        .basis(next)
                        .iter()
                        .map(|v| inner(u, v).norm_sqr())
                        .collect()
                })
                .collect()
        })
        .collect()
}

/// `max_{j,k} (max_i o_i(j,k) - min_i o_i(j,k))` over neighbour overlaps.
pub fn neighbor_overlap_spread(alice: &MeasurementSet) -> f64 {
    neighbor_spread_where(alice, |_| true).0
}

/// Absolute and relative spreads restricted to output pairs whose mean
/// neighbour overlap is at least `floor`.
pub fn neighbor_overlap_spread_above(alice: &MeasurementSet, floor: f64) -> (f64, f64) {
    neighbor_spread_where(alice, |mean| mean >= floor)
}

fn neighbor_spread_where(alice: &MeasurementSet, keep: impl Fn(f64) -> bool) -> (f64, f64) {
    let overlaps = neighbor_overlaps(alice);
    let n = alice.dim;
    let (mut absolute, mut relative): (f64, f64) = (0.0, 0.0);
    for j in 0..n {
        for k in 0..n {
            let series: Vec<f64> = overlaps.iter().map(|o| o[j][k]).collect();
            let max = series.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let min = series.iter().copied().fold(f64::INFINITY, f64::min);
            let mean = series.iter().sum::<f64>() / series.len() as f64;
            if keep(mean) {
                absolute = absolute.max(max - min);
                if mean > 0.0 {
                    relative = relative.max((max - min) / mean);
                }
            }
        }
    }
    (absolute, relative)
}

/// Least-squares fit of `P ≈ w P_NS + (1 - w) U`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecompositionFit {
    pub w: f64,
    pub residual_l2: f64,
}

/// Fits `behavior` to the segment between white noise and the
/// no-signaling point `V / d` of a truncated XOR-d game.
pub fn fit_decomposition(
    behavior: &Behavior,
    functional: &BellFunctional,
) -> Result<DecompositionFit> {
    if behavior.scenario() != functional.scenario() {
        return shape("behavior and functional scenarios differ");
    }
    let ns = ns_behavior_from_functional(functional)?;
    let noise = white_noise_behavior(functional.scenario());
    let u = noise.probabilities();
    let direction: Vec<f64> = ns
        .probabilities()
        .iter()
        .zip(u)
        .map(|(p, q)| p - q)
        .collect();
    let offset: Vec<f64> = behavior
        .probabilities()
        .iter()
        .zip(u)
        .map(|(p, q)| p - q)
        .collect();
    let norm2: f64 = direction.iter().map(|v| v * v).sum();
    let w = if norm2 > 0.0 {
        (offset
            .iter()
            .zip(&direction)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / norm2)
            .clamp(0.0, 1.0)
    } else {
        0.0
    };
    let residual_l2 = offset
        .iter()
        .zip(&direction)
        .map(|(o, v)| (o - w * v).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(DecompositionFit { w, residual_l2 })
}

#[derive(Serialize, Deserialize)]
struct ComplexArray {
    real: Vec<Number>,
    imag: Vec<Number>,
}

#[derive(Serialize, Deserialize)]
struct ComplexGrid {
    real: Vec<Vec<Number>>,
    imag: Vec<Vec<Number>>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    local_dim: usize,
    state: ComplexGrid,
    alice: Vec<Vec<ComplexArray>>,
    bob: Vec<Vec<ComplexArray>>,
}

fn encode_vector(v: &[C64]) -> ComplexArray {
    ComplexArray {
        real: v.iter().map(|z| real_to_number(z.re)).collect(),
        imag: v.iter().map(|z| real_to_number(z.im)).collect(),
    }
}

fn decode_reals(v: &[Number]) -> Result<Vec<f64>> {
    v.iter()
        .map(number_to_real)
        .collect::<std::result::Result<_, _>>()
        .map_err(Error::Domain)
}

fn decode_vector(v: &ComplexArray) -> Result<Vec<C64>> {
    let re = decode_reals(&v.real)?;
    let im = decode_reals(&v.imag)?;
    if re.len() != im.len() {
        return shape("real and imaginary parts differ in length");
    }
    Ok(re
        .into_iter()
        .zip(im)
        .map(|(r, i)| C64::new(r, i))
        .collect())
}

fn encode_set(m: &MeasurementSet) -> Vec<Vec<ComplexArray>> {
    m.vectors
        .iter()
        .map(|b| b.iter().map(|v| encode_vector(v)).collect())
        .collect()
}

fn decode_set(v: &[Vec<ComplexArray>]) -> Result<MeasurementSet> {
    MeasurementSet::new(
        v.iter()
            .map(|b| b.iter().map(decode_vector).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?,
    )
}

impl Serialize for QuantumModel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rho = self.state.density();
        let n = rho.dim();
        let grid = |f: fn(C64) -> f64| -> Vec<Vec<Number>> {
            (0..n)
                .map(|i| (0..n).map(|j| real_to_number(f(rho[(i, j)]))).collect())
                .collect()
        };
        ModelFile {
            local_dim: self.state.local_dim(),
            state: ComplexGrid {
                real: grid(|z| z.re),
                imag: grid(|z| z.im),
            },
            alice: encode_set(&self.alice),
            bob: encode_set(&self.bob),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for QuantumModel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let file = ModelFile::deserialize(d)?;
        decode_model(file).map_err(serde::de::Error::custom)
    }
}

fn decode_model(file: ModelFile) -> Result<QuantumModel> {
    let n = file.local_dim * file.local_dim;
    if file.state.real.len() != n || file.state.imag.len() != n {
        return shape(format!("state must be {n} x {n}"));
    }
    let mut entries = Vec::with_capacity(n * n);
    for (re_row, im_row) in file.state.real.iter().zip(&file.state.imag) {
        let re = decode_reals(re_row)?;
        let im = decode_reals(im_row)?;
        if re.len() != n || im.len() != n {
            return shape(format!("state must be {n} x {n}"));
        }
        entries.extend(re.into_iter().zip(im).map(|(r, i)| C64::new(r, i)));
    }
    let density = ComplexMatrix::from_fn(n, |i, j| entries[i * n + j]);
    let state = QuantumState::new(file.local_dim, density)?;
    QuantumModel::new(state, decode_set(&file.alice)?, decode_set(&file.bob)?)
}
