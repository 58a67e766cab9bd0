//! Brute-force circuit simulation on the truncated Fock space.
//!
//! This path never touches covariance matrices: the circuit
//! `Û · ∏ⱼ D̂(αⱼ) · ∏ⱼ Ŝ(ζⱼ) |0…0⟩` is evaluated element by element with
//! the exact truncated matrices from [`super::gates`], and detection is a
//! literal slice of the resulting array.  It is deliberately independent
//! of the analytic conditional-state machinery so the two can be checked
//! against each other.

use crate::error::{Error, Result};
use crate::fock::{gates, increment, FockVector};
use crate::gaussian::CircuitSpec;
use crate::{C64, ZERO};

/// Simulates a circuit from vacuum at the given per-mode cutoff.
///
/// The returned vector is not renormalized: its norm shortfall from 1 is
/// exactly the weight the physical state carries above the cutoff (the
/// Givens factors conserve photon number, so all loss happens in the
/// squeeze/displacement stages and in pair sectors beyond the cutoff).
pub fn simulate_circuit(spec: &CircuitSpec, cutoff: usize) -> Result<FockVector> {
    spec.validate()?;
    let n = spec.n_modes;
    let mut state = FockVector::vacuum(n, cutoff)?;
    let dim = cutoff + 1;
    for (k, &zeta) in spec.squeezings.iter().enumerate() {
        if zeta != ZERO {
            let m = gates::squeeze_matrix(zeta, dim);
            gates::apply_single_mode(&mut state, k, &m);
        }
    }
    for (k, &alpha) in spec.displacements.iter().enumerate() {
        if alpha != ZERO {
            let m = gates::displacement_matrix(alpha, dim);
            gates::apply_single_mode(&mut state, k, &m);
        }
    }
    gates::apply_interferometer(&mut state, &spec.unitary)?;
    Ok(state)
}

/// Projects measured modes onto a photon-count pattern.
///
/// Returns the detection probability `Σ |⟨pattern, rest|ψ⟩|²` and the
/// normalized conditional vector on the remaining modes (in ascending
/// original mode order).  The input need not be normalized; the
/// probability refers to the vector as given.
pub fn project_pattern(
    state: &FockVector,
    measured_modes: &[usize],
    counts: &[usize],
) -> Result<(f64, FockVector)> {
    let n = state.n_modes();
    if measured_modes.len() != counts.len() {
        return Err(Error::Validation(format!(
            "{} measured modes but {} counts",
            measured_modes.len(),
            counts.len()
        )));
    }
    let mut seen = vec![false; n];
    for &m in measured_modes {
        if m >= n {
            return Err(Error::Validation(format!("measured mode {m} out of range")));
        }
        if seen[m] {
            return Err(Error::Validation(format!("measured mode {m} repeated")));
        }
        seen[m] = true;
    }
    if measured_modes.len() == n {
        return Err(Error::Validation(
            "at least one mode must survive detection".into(),
        ));
    }
    for &c in counts {
        if c > state.cutoff() {
            return Err(Error::Validation(format!(
                "pattern count {c} exceeds cutoff {}",
                state.cutoff()
            )));
        }
    }
    let kept: Vec<usize> = (0..n).filter(|k| !seen[*k]).collect();
    let mut out = FockVector::zeros(kept.len(), state.cutoff())?;
    let mut full = vec![0usize; n];
    for (m, &c) in measured_modes.iter().zip(counts) {
        full[*m] = c;
    }
    let mut multi = vec![0usize; kept.len()];
    let mut prob = 0.0;
    loop {
        for (slot, &mode) in kept.iter().enumerate() {
            full[mode] = multi[slot];
        }
        let amp = state.get(&full);
        prob += amp.norm_sqr();
        out.set(&multi, amp);
        if !increment(&mut multi, state.cutoff()) {
            break;
        }
    }
    if prob > 0.0 {
        let inv = C64::new(1.0 / prob.sqrt(), 0.0);
        for c in out.coeffs_mut() {
            *c *= inv;
        }
    }
    Ok((prob, out))
}
