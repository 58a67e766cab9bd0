//! Dense Fock-space vectors, oscillator wavefunctions, and fidelities.
//!
//! A [`FockVector`] stores an `M`-mode state on the truncated basis
//! `|n₁ … n_M⟩`, `0 ≤ n_k ≤ cutoff`, as a dense row-major array (mode 1
//! slowest).  The same type doubles as the working array of the
//! brute-force circuit simulator in [`sim`], which provides an
//! independent, truncation-controlled check of every conditional quantity
//! the analytic pipeline produces.
//!
//! Submodules:
//!
//! * [`gates`] — exact matrix elements of squeezers, displacements and
//!   interferometers, and their application to vectors.
//! * [`sim`] — brute-force circuit simulation and detection projection.
//! * [`targets`] — constructors for benchmark target states (cat, grid,
//!   cubic-phase, NOON, W).
//! * [`wigner`] — Wigner reconstruction of finite Fock superpositions.

pub mod gates;
pub mod sim;
pub mod targets;
pub mod wigner;

use crate::error::{Error, Result};
use crate::gaussian::GaussianUnitary;
use crate::{C64, ZERO};

/// Norm slack accepted by the strict constructor.
pub const NORM_TOL: f64 = 1e-9;

/// Hard cap on dense array length.
const MAX_LEN: usize = 50_000_000;

/// A dense state vector on the truncated Fock space of `n_modes` modes.
#[derive(Debug, Clone)]
pub struct FockVector {
    n_modes: usize,
    cutoff: usize,
    coeffs: Vec<C64>,
}

impl FockVector {
    /// Strict constructor: checks the norm is ≤ 1 + [`NORM_TOL`].
    pub fn new(n_modes: usize, cutoff: usize, coeffs: Vec<C64>) -> Result<Self> {
        let v = Self::unnormalized(n_modes, cutoff, coeffs)?;
        let norm = v.norm();
        if norm > 1.0 + NORM_TOL {
            return Err(Error::Validation(format!(
                "state vector norm {norm:.6} exceeds 1"
            )));
        }
        Ok(v)
    }

    /// Constructor without the norm check (working arrays, unnormalized
    /// intermediates).
    pub fn unnormalized(n_modes: usize, cutoff: usize, coeffs: Vec<C64>) -> Result<Self> {
        let len = Self::len_for(n_modes, cutoff)?;
        if coeffs.len() != len {
            return Err(Error::Validation(format!(
                "coefficient array has length {}, expected {}",
                coeffs.len(),
                len
            )));
        }
        Ok(FockVector { n_modes, cutoff, coeffs })
    }

    /// All-zero working vector.
    pub fn zeros(n_modes: usize, cutoff: usize) -> Result<Self> {
        let len = Self::len_for(n_modes, cutoff)?;
        Ok(FockVector { n_modes, cutoff, coeffs: vec![ZERO; len] })
    }

    /// The vacuum `|0…0⟩`.
    pub fn vacuum(n_modes: usize, cutoff: usize) -> Result<Self> {
        let mut v = Self::zeros(n_modes, cutoff)?;
        v.coeffs[0] = C64::new(1.0, 0.0);
        Ok(v)
    }

    /// Single-mode vector from a coefficient list (`coeffs[n]` multiplies
    /// `|n⟩`).
    pub fn single_mode(coeffs: &[C64]) -> Result<Self> {
        Self::unnormalized(1, coeffs.len().saturating_sub(1), coeffs.to_vec())
    }

    fn len_for(n_modes: usize, cutoff: usize) -> Result<usize> {
        let d = cutoff + 1;
        let mut len = 1usize;
        for _ in 0..n_modes {
            len = len.checked_mul(d).ok_or_else(|| {
                Error::Resource("Fock array size overflows".into())
            })?;
            if len > MAX_LEN {
                return Err(Error::Resource(format!(
                    "Fock array would need {len} entries (cap {MAX_LEN})"
                )));
            }
        }
        Ok(len)
    }

    /// Number of modes.
    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    /// Per-mode cutoff (inclusive).
    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Raw coefficient slice (row-major, mode 0 slowest).
    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    /// Mutable raw coefficients.
    pub fn coeffs_mut(&mut self) -> &mut [C64] {
        &mut self.coeffs
    }

    /// Flat index of a multi-index.
    pub fn index_of(&self, multi: &[usize]) -> usize {
        debug_assert_eq!(multi.len(), self.n_modes);
        let d = self.cutoff + 1;
        multi.iter().fold(0usize, |acc, &n| acc * d + n)
    }

    /// Coefficient of `|multi⟩` (zero outside the cutoff).
    pub fn get(&self, multi: &[usize]) -> C64 {
        if multi.iter().any(|&n| n > self.cutoff) {
            return ZERO;
        }
        self.coeffs[self.index_of(multi)]
    }

    /// Sets the coefficient of `|multi⟩`.
    pub fn set(&mut self, multi: &[usize], value: C64) {
        let idx = self.index_of(multi);
        self.coeffs[idx] = value;
    }

    /// Euclidean norm.
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Normalizes in place; fails on (near-)zero vectors.
    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if n < 1e-150 {
            return Err(Error::NumericalHealth("cannot normalize a zero vector".into()));
        }
        let inv = C64::new(1.0 / n, 0.0);
        for c in &mut self.coeffs {
            *c *= inv;
        }
        Ok(())
    }

    /// Inner product `⟨self|other⟩` (conjugate-linear in `self`); the
    /// vectors may have different cutoffs but must share the mode count.
    pub fn inner(&self, other: &FockVector) -> Result<C64> {
        if self.n_modes != other.n_modes {
            return Err(Error::Validation(format!(
                "inner product between {}- and {}-mode vectors",
                self.n_modes, other.n_modes
            )));
        }
        let cmax = self.cutoff.min(other.cutoff);
        let mut acc = ZERO;
        let mut multi = vec![0usize; self.n_modes];
        loop {
            acc += self.get(&multi).conj() * other.get(&multi);
            if !increment(&mut multi, cmax) {
                break;
            }
        }
        Ok(acc)
    }

    /// Re-embeds into a (larger or smaller) cutoff, truncating if needed.
    pub fn with_cutoff(&self, cutoff: usize) -> Result<FockVector> {
        let mut out = FockVector::zeros(self.n_modes, cutoff)?;
        let cmax = self.cutoff.min(cutoff);
        let mut multi = vec![0usize; self.n_modes];
        loop {
            out.set(&multi, self.get(&multi));
            if !increment(&mut multi, cmax) {
                break;
            }
        }
        Ok(out)
    }

    /// Applies a Gaussian unitary gate (see [`GaussianUnitary`]) exactly on
    /// the truncated space, returning a vector at the same cutoff.
    ///
    /// The chain `K̂† → squeezes → K̂ → displacement` is evaluated at an
    /// internally inflated cutoff (`2·cutoff + extra`) so that truncation
    /// tails stay far from the retained block.
    pub fn apply_gate(&self, gate: &GaussianUnitary, extra: usize) -> Result<FockVector> {
        if gate.n_modes() != self.n_modes {
            return Err(Error::Validation(format!(
                "gate acts on {} modes, vector has {}",
                gate.n_modes(),
                self.n_modes
            )));
        }
        let work_cutoff = 2 * self.cutoff + extra;
        let mut v = self.with_cutoff(work_cutoff)?;
        let any_squeeze = gate.squeezes.iter().any(|r| r.abs() > 0.0);
        if any_squeeze {
            // The K̂† / K̂ sandwich matters only around actual squeezers.
            let kd = gate.kappa.adjoint();
            gates::apply_interferometer(&mut v, &kd)?;
            for (k, &r) in gate.squeezes.iter().enumerate() {
                if r != 0.0 {
                    let m = gates::squeeze_matrix(C64::new(r, 0.0), work_cutoff + 1);
                    gates::apply_single_mode(&mut v, k, &m);
                }
            }
            gates::apply_interferometer(&mut v, &gate.kappa)?;
        }
        for (k, &d) in gate.displacement.iter().enumerate() {
            if d != ZERO {
                let m = gates::displacement_matrix(d, work_cutoff + 1);
                gates::apply_single_mode(&mut v, k, &m);
            }
        }
        v.with_cutoff(self.cutoff)
    }
}

/// Odometer increment over multi-indices with a shared cap; returns false
/// after the last index.
pub(crate) fn increment(multi: &mut [usize], cap: usize) -> bool {
    for k in (0..multi.len()).rev() {
        if multi[k] < cap {
            multi[k] += 1;
            return true;
        }
        multi[k] = 0;
    }
    false
}

/// Harmonic-oscillator wavefunction `ψ_n(q) = π^{−1/4} (2ⁿ n!)^{−1/2}
/// e^{−q²/2} H_n(q)` evaluated by the normalized three-term recursion
/// (stable to large `n`).
pub fn fock_wavefunction(n: usize, q: f64) -> f64 {
    let psi0 = std::f64::consts::PI.powf(-0.25) * (-0.5 * q * q).exp();
    if n == 0 {
        return psi0;
    }
    let mut prev = psi0;
    let mut cur = std::f64::consts::SQRT_2 * q * psi0;
    for k in 1..n {
        let next = (2.0 / (k as f64 + 1.0)).sqrt() * q * cur
            - ((k as f64) / (k as f64 + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Fidelity `|⟨a|b⟩|²` between two (optionally gated) Fock vectors.
///
/// Gates are applied by exact truncated matrices before the overlap; pass
/// `None` for bare vectors.  Inputs must be normalized.
pub fn fidelity(
    a: &FockVector,
    gate_a: Option<&GaussianUnitary>,
    b: &FockVector,
    gate_b: Option<&GaussianUnitary>,
) -> Result<f64> {
    fidelity_at(a, gate_a, b, gate_b, 20)
}

/// [`fidelity`] with explicit cutoff inflation (`extra` levels above
/// `2·cutoff`).
pub fn fidelity_at(
    a: &FockVector,
    gate_a: Option<&GaussianUnitary>,
    b: &FockVector,
    gate_b: Option<&GaussianUnitary>,
    extra: usize,
) -> Result<f64> {
    for (name, v) in [("first", a), ("second", b)] {
        if (v.norm() - 1.0).abs() > 1e-6 {
            return Err(Error::Validation(format!(
                "{name} fidelity argument is not normalized (norm {:.8})",
                v.norm()
            )));
        }
    }
    let av = a.clone();
    let bv = b.clone();
    let work = 2 * av.cutoff().max(bv.cutoff()) + extra;
    let av = match gate_a {
        Some(g) => av.with_cutoff(work)?.apply_gate(g, extra)?,
        None => av,
    };
    let bv = match gate_b {
        Some(g) => bv.with_cutoff(work)?.apply_gate(g, extra)?,
        None => bv,
    };
    Ok(av.inner(&bv)?.norm_sqr())
}

/// Fidelity with a doubling-convergence check: recomputes at twice the
/// inflation and returns `(value, |difference|)`.
pub fn fidelity_converged(
    a: &FockVector,
    gate_a: Option<&GaussianUnitary>,
    b: &FockVector,
    gate_b: Option<&GaussianUnitary>,
) -> Result<(f64, f64)> {
    let f1 = fidelity_at(a, gate_a, b, gate_b, 20)?;
    let f2 = fidelity_at(a, gate_a, b, gate_b, 40 + 2 * a.cutoff().max(b.cutoff()))?;
    Ok((f2, (f1 - f2).abs()))
}
