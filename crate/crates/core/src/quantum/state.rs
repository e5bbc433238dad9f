use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use super::linalg::{hermitian_eig, ComplexMatrix, C64};
use crate::error::{domain, Result};

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const EIGENVALUE_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;

/// Bipartite density matrix on `C^d ⊗ C^d`, Alice's factor first.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumState {
    local_dim: usize,
    density: ComplexMatrix,
}

impl QuantumState {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(local_dim: usize, density: ComplexMatrix) -> Result<Self> {
        if local_dim == 0 || density.dim() != local_dim * local_dim {
            return domain(format!(
                "density of dimension {} for local dimension {local_dim}",
                density.dim()
            ));
        }
        let herm = density.hermiticity_residual();
        if herm > HERMITIAN_TOL {
            return domain(format!("density is not Hermitian (residual {herm:e})"));
        }
        let tr = density.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return domain(format!("density has trace {tr}"));
        }
        let (values, _) = hermitian_eig(&density)?;
        if values[0] < -EIGENVALUE_TOL {
            return domain(format!("density has eigenvalue {}", values[0]));
        }
        Ok(QuantumState { local_dim, density })
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn density(&self) -> &ComplexMatrix {
        &self.density
    }

    pub fn purity(&self) -> f64 {
        (&self.density * &self.density).trace().re
    }

    /// `Tr_B ρ`.
    pub fn reduced_alice(&self) -> ComplexMatrix {
        let d = self.local_dim;
        ComplexMatrix::from_fn(d, |i, k| {
            (0..d).map(|j| self.density[(i * d + j, k * d + j)]).sum()
        })
    }

    /// `Tr_A ρ`.
    pub fn reduced_bob(&self) -> ComplexMatrix {
        let d = self.local_dim;
        ComplexMatrix::from_fn(d, |j, l| {
            (0..d).map(|i| self.density[(i * d + j, i * d + l)]).sum()
        })
    }
}

/// `|Ψ⟩ = Σ_i |ii⟩ / √d` as a vector on `C^d ⊗ C^d`.
pub fn maximally_entangled_vector(d: usize) -> Vec<C64> {
    let s = 1.0 / (d as f64).sqrt();
    let mut v = vec![C64::new(0.0, 0.0); d * d];
    for i in 0..d {
        v[i * d + i] = C64::new(s, 0.0);
    }
    v
}

pub fn maximally_entangled_state(d: usize) -> Result<QuantumState> {
    if d < 2 {
        return domain(format!("maximally entangled state needs d >= 2, got {d}"));
    }
    Ok(QuantumState {
        local_dim: d,
        density: ComplexMatrix::outer(&maximally_entangled_vector(d)),
    })
}

/// `⟨Ψ|ρ|Ψ⟩` against the maximally entangled state of dimension `d`.
pub fn fidelity(rho: &QuantumState, d: usize) -> Result<f64> {
    if rho.local_dim != d {
        return domain(format!(
            "state has local dimension {}, fidelity requested for {d}",
            rho.local_dim
        ));
    }
    let psi = maximally_entangled_vector(d);
    Ok(rho.density.sandwich(&psi, &psi).re)
}

/// Adds complex Gaussian noise of standard deviation `sigma` per real
/// component, then projects back to a density matrix: Hermitian part,
/// negative eigenvalues clipped to zero, trace renormalized.
pub fn perturb_state(rho: &QuantumState, sigma: f64, seed: u64) -> Result<QuantumState> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return domain(format!("noise level {sigma} must be a finite value >= 0"));
    }
    if sigma == 0.0 {
        return Ok(rho.clone());
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let n = rho.density.dim();
    let noisy = ComplexMatrix::from_fn(n, |i, j| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        rho.density[(i, j)] + C64::new(sigma * re, sigma * im)
    })
    .hermitian_part();
    let (values, vectors) = hermitian_eig(&noisy)?;
    let clipped: Vec<f64> = values.iter().map(|&v| v.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    if total <= 0.0 {
        return domain("perturbation left no positive spectrum");
    }
    let normalized: Vec<f64> = clipped.iter().map(|v| v / total).collect();
    let density =
        (&(&vectors * &ComplexMatrix::diagonal(&normalized)) * &vectors.adjoint()).hermitian_part();
    QuantumState::new(rho.local_dim, density)
}
