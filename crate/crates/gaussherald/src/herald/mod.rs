//! Conditional (heralded) states from photon-number detection.
//!
//! Measuring the `D` "measured" modes of an `N`-mode Gaussian state with
//! photon-number-resolving detectors and registering the count pattern
//! `n̄` leaves the remaining `M` heralded modes in a generally
//! non-Gaussian state.  With the detection data `(R̃, ỹ, P₀)` of
//! [`crate::gaussian::bdata`] partitioned into heralded/measured sectors,
//! everything about that conditional state reduces to Gaussian
//! derivatives handled by [`crate::deriv`]:
//!
//! * success probability
//!   `P(n̄) = (P₀/n̄!) · det F^{−1/2} · e^{½ y_hᵀF^{−1}X y_h} · D(A_p, z_p)[(n̄,n̄)]`
//!   with `F = I − X R_hh`, `A_p = R_dd + R_dh F^{−1} X R_hd`,
//!   `z_p = y_d + R_dh F^{−1} X y_h`;
//! * the zero-count branch, which stays Gaussian with covariance
//!   `½ (I + X R_hh) F^{−1}` and mean `F^{−1} X y_h`;
//! * a Gaussian-gate factor `D̂(d) K̂ (⊗ₖ Ŝ(rₖ)) K̂†` obtained from the
//!   Autonne–Takagi factors of `B_hh`, which absorbs all squeezing and
//!   displacement of the heralded sector;
//! * the residual finite Fock expansion `Σ_ℓ c_ℓ |ℓ⟩`, `|ℓ| ≤ n_T`,
//!   recovered from the Gram data `c_ℓ c_m*` produced by one augmented
//!   Gaussian derivative per pair.
//!
//! # Examples
//!
//! Heralding one photon from a two-mode squeezed vacuum leaves a single
//! photon behind:
//!
//! ```
//! use gaussherald::gaussian::{CircuitSpec, state_from_circuit};
//! use gaussherald::herald::{herald_state, DetectionPattern};
//! use gaussherald::{C64, CMat};
//!
//! let r: f64 = 0.4;
//! let s2 = std::f64::consts::FRAC_1_SQRT_2;
//! let spec = CircuitSpec {
//!     n_modes: 2,
//!     squeezings: vec![C64::new(r, 0.0), C64::new(-r, 0.0)],
//!     displacements: vec![C64::new(0.0, 0.0); 2],
//!     unitary: CMat::from_row_slice(2, 2, &[
//!         C64::new(s2, 0.0), C64::new(s2, 0.0),
//!         C64::new(-s2, 0.0), C64::new(s2, 0.0),
//!     ]),
//! };
//! let state = state_from_circuit(&spec).unwrap();
//! let pattern = DetectionPattern::new(vec![1], vec![1]).unwrap();
//! let out = herald_state(&state, &pattern, &[0], 12).unwrap();
//! let p_expect = r.tanh().powi(2) / r.cosh().powi(2);
//! assert!((out.probability - p_expect).abs() < 1e-12);
//! assert!((out.coefficients[&vec![1u32]].norm() - 1.0).abs() < 1e-9);
//! ```

pub mod wigner;

pub use wigner::{gaussian_wigner, wigner, GridSpec, ModeAxis, WignerGrid};

use std::collections::BTreeMap;

use crate::deriv::{gaussian_derivative, DerivativeOrder, GaussianExponential};
use crate::error::{Error, Result};
use crate::gaussian::{b_data, takagi, x_sector, BData, GaussianState, GaussianUnitary};
use crate::{ln_factorial, C64, CMat, CVec};

/// Default cap on the total detected photon number for coefficient
/// extraction.
pub const DEFAULT_COEFF_CAP: usize = 12;

/// Tolerance for the imaginary residue of quantities that must be real.
const REAL_TOL: f64 = 1e-9;

/// Rank-1 consistency threshold for the coefficient Gram matrix.
const GRAM_RANK_TOL: f64 = 1e-8;

/// A photon-count pattern on a set of measured modes.
///
/// The mode order given at construction is preserved; operations align it
/// to the ascending internal order, so exchanging two detectors together
/// with their counts is a no-op.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetectionPattern {
    measured_modes: Vec<usize>,
    counts: Vec<u32>,
}

impl DetectionPattern {
    /// Builds a pattern; modes must be distinct and match `counts` in
    /// length.
    pub fn new(measured_modes: Vec<usize>, counts: Vec<u32>) -> Result<Self> {
        if measured_modes.len() != counts.len() {
            return Err(Error::Validation(format!(
                "{} measured modes but {} counts",
                measured_modes.len(),
                counts.len()
            )));
        }
        if measured_modes.is_empty() {
            return Err(Error::Validation("empty detection pattern".into()));
        }
        let mut sorted = measured_modes.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Validation("repeated measured mode".into()));
        }
        Ok(DetectionPattern { measured_modes, counts })
    }

    /// Measured modes in the order given at construction.
    pub fn measured_modes(&self) -> &[usize] {
        &self.measured_modes
    }

    /// Counts in the order given at construction.
    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    /// Total detected photon number `n_T`.
    pub fn n_t(&self) -> u32 {
        self.counts.iter().sum()
    }

    /// Counts reordered to the ascending measured-mode order used by a
    /// [`BData`] partition; fails if the mode sets differ.
    pub fn aligned_counts(&self, bdata: &BData) -> Result<Vec<u32>> {
        if self.measured_modes.len() != bdata.measured.len() {
            return Err(Error::Validation(format!(
                "pattern covers {} modes, partition measures {}",
                self.measured_modes.len(),
                bdata.measured.len()
            )));
        }
        let mut out = vec![0u32; bdata.measured.len()];
        for (mode, &count) in self.measured_modes.iter().zip(&self.counts) {
            match bdata.measured.iter().position(|m| m == mode) {
                Some(slot) => out[slot] = count,
                None => {
                    return Err(Error::Validation(format!(
                        "pattern names mode {mode}, which is not a measured mode"
                    )))
                }
            }
        }
        Ok(out)
    }
}

/// The non-Gaussian heralded state in factored form: a Gaussian gate
/// applied to a finite Fock superposition.
#[derive(Debug, Clone)]
pub struct HeraldedState {
    /// Gaussian-gate factor `D̂(d) K̂ (⊗ Ŝ(rₖ)) K̂†`.
    pub gate: GaussianUnitary,
    /// Core coefficients `c_ℓ` keyed by multi-index, `|ℓ| ≤ n_T`.
    pub coefficients: BTreeMap<Vec<u32>, C64>,
    /// Success probability of the detection pattern.
    pub probability: f64,
    /// True when `Σ|c_ℓ|² = 1` (always set by [`herald_state`]).
    pub normalized: bool,
}

/// Shared partition quantities: `F = I − X R_hh` and friends.
pub(crate) struct HeraldCore {
    pub m: usize,
    pub f: CMat,
    pub det_f: f64,
    pub f_inv: CMat,
    /// `d = F^{−1} X y_h`: mean of the zero-count branch.
    pub d_vec: CVec,
    /// `½ y_hᵀ F^{−1} X y_h` (real part; residue asserted).
    pub y_quad: f64,
    pub ip_xr: CMat,
    pub ip_inv: CMat,
    pub det_ip: f64,
}

impl HeraldCore {
    pub fn new(bdata: &BData) -> Result<Self> {
        let m = bdata.n_heralded();
        let x = x_sector(m);
        let xr = &x * &bdata.r_hh;
        let eye = CMat::identity(2 * m, 2 * m);
        let f = &eye - &xr;
        let ip_xr = &eye + &xr;

        let f_lu = f.clone().lu();
        let det_f_c = f_lu.determinant();
        if det_f_c.norm() < 1e-300 {
            return Err(Error::NumericalHealth(
                "I − X R_hh is singular: partition at the boundary of physicality".into(),
            ));
        }
        if det_f_c.im.abs() > REAL_TOL * (1.0 + det_f_c.re.abs()) || det_f_c.re <= 0.0 {
            return Err(Error::NumericalHealth(format!(
                "det(I − X R_hh) = {det_f_c} is not real positive"
            )));
        }
        let f_inv = f_lu.try_inverse().ok_or_else(|| {
            Error::NumericalHealth("I − X R_hh could not be inverted".into())
        })?;

        let ip_lu = ip_xr.clone().lu();
        let det_ip_c = ip_lu.determinant();
        if det_ip_c.im.abs() > REAL_TOL * (1.0 + det_ip_c.re.abs()) || det_ip_c.re <= 0.0 {
            return Err(Error::NumericalHealth(format!(
                "det(I + X R_hh) = {det_ip_c} is not real positive"
            )));
        }
        let ip_inv = ip_lu.try_inverse().ok_or_else(|| {
            Error::NumericalHealth("I + X R_hh could not be inverted".into())
        })?;

        let d_vec = &f_inv * (&x * &bdata.y_h);
        let quad = bdata.y_h.dot(&d_vec);
        if quad.im.abs() > REAL_TOL * (1.0 + quad.re.abs()) {
            return Err(Error::NumericalHealth(format!(
                "y_hᵀ F^{{-1}} X y_h has imaginary residue {:.3e}",
                quad.im
            )));
        }
        Ok(HeraldCore {
            m,
            f,
            det_f: det_f_c.re,
            f_inv,
            d_vec,
            y_quad: 0.5 * quad.re,
            ip_xr,
            ip_inv,
            det_ip: det_ip_c.re,
        })
    }
}

/// Success probability of a count pattern, from partitioned detection
/// data.  `counts` must already be in the partition's ascending measured
/// order (see [`DetectionPattern::aligned_counts`]).
pub fn probability_from_bdata(bdata: &BData, counts: &[u32]) -> Result<f64> {
    if counts.len() != bdata.n_measured() {
        return Err(Error::Validation(format!(
            "{} counts for {} measured modes",
            counts.len(),
            bdata.n_measured()
        )));
    }
    let core = HeraldCore::new(bdata)?;
    let m = core.m;
    let x = x_sector(m);
    let r_dh = bdata.r_dh();

    let a_p = &bdata.r_dd + &r_dh * &core.f_inv * &x * &bdata.r_hd;
    let z_p = &bdata.y_d + &r_dh * &core.d_vec;

    let mut order: Vec<u32> = counts.to_vec();
    order.extend_from_slice(counts);
    let deriv = gaussian_derivative(
        &GaussianExponential::new(a_p, z_p)?,
        &DerivativeOrder(order),
    )?;

    let ln_pattern_fact: f64 = counts.iter().map(|&c| ln_factorial(c as u64)).sum();
    let scale = core.det_f.powf(-0.5) * (core.y_quad - ln_pattern_fact).exp();
    let p = bdata.p0 * deriv * C64::new(scale, 0.0);

    if p.im.abs() > REAL_TOL * (1.0 + p.re.abs()) {
        return Err(Error::NumericalHealth(format!(
            "probability has imaginary residue {:.3e}",
            p.im
        )));
    }
    if p.re < -REAL_TOL {
        return Err(Error::NumericalHealth(format!(
            "probability came out negative: {:.3e}",
            p.re
        )));
    }
    if p.re > 1.0 + 1e-6 {
        return Err(Error::NumericalHealth(format!(
            "probability came out above one: {}",
            p.re
        )));
    }
    Ok(p.re.clamp(0.0, 1.0 + 1e-9))
}

/// Success probability of a pattern on a Gaussian state with the given
/// heralded (kept) modes.
pub fn herald_probability(
    state: &GaussianState,
    pattern: &DetectionPattern,
    heralded_modes: &[usize],
) -> Result<f64> {
    let bdata = b_data(state, heralded_modes)?;
    let counts = pattern.aligned_counts(&bdata)?;
    probability_from_bdata(&bdata, &counts)
}

/// The Gaussian state heralded by the all-zero pattern: covariance
/// `½ (I + X R_hh)(I − X R_hh)^{−1}`, mean `(I − X R_hh)^{−1} X y_h`.
pub fn zero_photon_gaussian(bdata: &BData) -> Result<GaussianState> {
    let core = HeraldCore::new(bdata)?;
    let cov = (&core.ip_xr * &core.f_inv).scale(0.5);
    GaussianState::new(core.m, core.d_vec.clone(), cov)
}

/// Gaussian-gate factor of the heralded state (pattern-independent).
///
/// Requires a pure input: the gate is `D̂(d) ∘ K̂ ∘ (⊗ₖ Ŝ(rₖ)) ∘ K̂†` with
/// `B_hh = K Λ Kᵀ` (Autonne–Takagi), `rₖ = artanh λₖ`, and `d` the
/// amplitude half of the zero-count mean.  All squeeze phases live in
/// `K`; the per-mode squeezing amplitudes are real nonnegative.
pub fn extract_gate(bdata: &BData) -> Result<GaussianUnitary> {
    let b_hh = bdata.b_hh().ok_or_else(|| {
        Error::Unsupported("gate extraction requires a pure Gaussian input".into())
    })?;
    let core = HeraldCore::new(bdata)?;
    let m = core.m;
    let (kappa, lambda) = takagi(&b_hh)?;
    if lambda.iter().any(|&l| l >= 1.0 - 1e-12) {
        return Err(Error::Validation(format!(
            "B_hh has a singular value at or above one ({:.12}): unphysical partition",
            lambda.max()
        )));
    }
    let squeezes: Vec<f64> = lambda.iter().map(|&l| l.atanh()).collect();

    // Mean consistency: the conjugate half must mirror the amplitude half.
    let mut displacement = Vec::with_capacity(m);
    for k in 0..m {
        let amp = core.d_vec[m + k];
        let conj_half = core.d_vec[k];
        if (conj_half - amp.conj()).norm() > REAL_TOL * (1.0 + amp.norm()) {
            return Err(Error::NumericalHealth(format!(
                "zero-count mean lacks conjugate structure at mode {k}"
            )));
        }
        displacement.push(amp);
    }
    Ok(GaussianUnitary { kappa, squeezes, displacement })
}

/// Lexicographically sorted multi-indices over `m` slots with total ≤
/// `max_total`.
pub(crate) fn enumerate_multi(m: usize, max_total: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; m];
    loop {
        if cur.iter().sum::<u32>() <= max_total {
            out.push(cur.clone());
        }
        // Odometer with per-slot cap max_total; total filter above.
        let mut k = m;
        loop {
            if k == 0 {
                out.sort();
                return out;
            }
            k -= 1;
            if cur[k] < max_total {
                cur[k] += 1;
                for slot in cur.iter_mut().skip(k + 1) {
                    *slot = 0;
                }
                break;
            }
        }
    }
}

/// Fock coefficients `c_ℓ` of the heralded core state (gate removed),
/// from the Gram data `c_ℓ c_m*`.
///
/// Pure inputs only.  The Gram matrix is assembled entry by entry from
/// augmented Gaussian derivatives, its dominant eigenvector is taken, the
/// global phase is fixed by making the highest-lexicographic nonzero
/// coefficient real positive, and the result is normalized.  A second
/// Gram eigenvalue above `1e-8` of the first fails the rank-1 consistency
/// check.
pub fn fock_coefficients(
    bdata: &BData,
    counts: &[u32],
    cap: usize,
) -> Result<BTreeMap<Vec<u32>, C64>> {
    if bdata.b.is_none() {
        return Err(Error::Unsupported(
            "coefficient extraction requires a pure Gaussian input".into(),
        ));
    }
    if counts.len() != bdata.n_measured() {
        return Err(Error::Validation(format!(
            "{} counts for {} measured modes",
            counts.len(),
            bdata.n_measured()
        )));
    }
    let n_t: u32 = counts.iter().sum();
    if n_t as usize > cap {
        return Err(Error::Resource(format!(
            "total detected photons {n_t} exceed the coefficient cap {cap}"
        )));
    }
    let m = bdata.n_heralded();
    let d = bdata.n_measured();

    let b_hh = bdata.b_hh().expect("pure data checked above");
    let b_hd = bdata.b_hd().expect("pure data checked above");
    let b_dd = bdata.b_dd().expect("pure data checked above");

    let (kappa, lambda) = takagi(&b_hh)?;
    if lambda.iter().any(|&l| l >= 1.0 - 1e-12) {
        return Err(Error::Validation(
            "B_hh has a singular value at or above one: unphysical partition".into(),
        ));
    }
    // (I − B_hh* B_hh)^{−1/2} = K̄ diag (1−λ²)^{−1/2} Kᵀ, and
    // (I − B_hh* B_hh)^{−1} B_hh* = K̄ diag λ/(1−λ²) K†.
    let kbar = kappa.map(|e| e.conj());
    let d_half = CMat::from_fn(m, m, |i, j| {
        if i == j {
            C64::new(1.0 / (1.0 - lambda[i] * lambda[i]).sqrt(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let d_full = CMat::from_fn(m, m, |i, j| {
        if i == j {
            C64::new(lambda[i] / (1.0 - lambda[i] * lambda[i]), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let root_inv = &kbar * d_half * kappa.transpose();
    let inv_bstar = &kbar * d_full * kappa.adjoint();

    let b_hd_conj = b_hd.map(|e| e.conj());
    let c1 = &root_inv * &b_hd_conj;
    let c2 = &b_dd + b_hd.transpose() * &inv_bstar * &b_hd;

    // Linear part: z_p in the measured sector, (conjugate half, amplitude
    // half).
    let core = HeraldCore::new(bdata)?;
    let r_dh = bdata.r_dh();
    let z_p = &bdata.y_d + &r_dh * &core.d_vec;

    // Augmented matrix over (t₁..t_M, s₁..s_M, β*₁..β*_D, α₁..α_D).
    let dim = 2 * m + 2 * d;
    let mut a = CMat::zeros(dim, dim);
    for i in 0..m {
        for j in 0..d {
            // t_i ↔ α_j carries C₁; s_i ↔ β*_j its conjugate.
            a[(i, 2 * m + d + j)] = c1[(i, j)];
            a[(2 * m + d + j, i)] = c1[(i, j)];
            a[(m + i, 2 * m + j)] = c1[(i, j)].conj();
            a[(2 * m + j, m + i)] = c1[(i, j)].conj();
        }
    }
    for i in 0..d {
        for j in 0..d {
            a[(2 * m + i, 2 * m + j)] = c2[(i, j)];
            a[(2 * m + d + i, 2 * m + d + j)] = c2[(i, j)].conj();
        }
    }
    let mut z = CVec::zeros(dim);
    for i in 0..d {
        z[2 * m + i] = z_p[i];
        z[2 * m + d + i] = z_p[d + i];
    }
    let gexp = GaussianExponential::new(a, z)?;

    let indices = enumerate_multi(m, n_t);
    let k = indices.len();
    let mut gram = CMat::zeros(k, k);
    for i in 0..k {
        for j in i..k {
            let mut order: Vec<u32> = indices[i].clone();
            order.extend_from_slice(&indices[j]);
            order.extend_from_slice(counts);
            order.extend_from_slice(counts);
            let val = gaussian_derivative(&gexp, &DerivativeOrder(order))?;
            let ln_norm: f64 = indices[i]
                .iter()
                .chain(indices[j].iter())
                .map(|&x| ln_factorial(x as u64))
                .sum();
            let g = val * C64::new((-0.5 * ln_norm).exp(), 0.0);
            gram[(i, j)] = g;
            gram[(j, i)] = g.conj();
        }
    }
    // Scale out the common magnitude before eigenanalysis.
    let trace: f64 = (0..k).map(|i| gram[(i, i)].re).sum();
    if !(trace.is_finite() && trace > 1e-300) {
        return Err(Error::NumericalHealth(format!(
            "coefficient Gram matrix has unusable trace {trace:.3e}"
        )));
    }
    let gram = gram.scale(1.0 / trace);
    let eig = gram.symmetric_eigen();
    let mut order_idx: Vec<usize> = (0..k).collect();
    order_idx.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .abs()
            .partial_cmp(&eig.eigenvalues[i].abs())
            .unwrap()
    });
    let top = order_idx[0];
    if k > 1 {
        let second = eig.eigenvalues[order_idx[1]].abs();
        let first = eig.eigenvalues[top].abs();
        if second > GRAM_RANK_TOL * first {
            return Err(Error::NumericalHealth(format!(
                "coefficient Gram matrix is not rank one: λ₂/λ₁ = {:.3e}",
                second / first
            )));
        }
    }
    let mut c: Vec<C64> = (0..k).map(|i| eig.eigenvectors[(i, top)]).collect();

    // Global phase: highest-lexicographic nonzero coefficient real
    // positive (indices are sorted ascending).
    let max_mag = c.iter().map(|v| v.norm()).fold(0.0f64, f64::max);
    if max_mag < 1e-300 {
        return Err(Error::NumericalHealth("all coefficients vanished".into()));
    }
    let anchor = (0..k)
        .rev()
        .find(|&i| c[i].norm() > 1e-10 * max_mag)
        .expect("a nonzero coefficient exists");
    let phase = c[anchor] / c[anchor].norm();
    let norm: f64 = c.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    for v in &mut c {
        *v = *v * phase.conj() / norm;
    }

    Ok(indices.into_iter().zip(c).collect())
}

/// Full forward computation: probability, gate, and core coefficients.
pub fn herald_state(
    state: &GaussianState,
    pattern: &DetectionPattern,
    heralded_modes: &[usize],
    cap: usize,
) -> Result<HeraldedState> {
    let bdata = b_data(state, heralded_modes)?;
    let counts = pattern.aligned_counts(&bdata)?;
    let probability = probability_from_bdata(&bdata, &counts)?;
    let gate = extract_gate(&bdata)?;
    let coefficients = fock_coefficients(&bdata, &counts, cap)?;
    Ok(HeraldedState { gate, coefficients, probability, normalized: true })
}

/// Applies a Gaussian gate to the heralded modes of the input state;
/// heralding the result yields the gated output at unchanged probability.
pub fn absorb_unitary(
    state: &GaussianState,
    gate: &GaussianUnitary,
    heralded_modes: &[usize],
) -> Result<GaussianState> {
    state.apply_unitary(gate, heralded_modes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{state_from_circuit, CircuitSpec};
    use crate::ZERO;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// Photon-subtraction circuit: squeezer into a beamsplitter with
    /// transmissivity cos²θ.
    fn photon_subtraction(r0: f64, theta: f64) -> CircuitSpec {
        let (ct, st) = (theta.cos(), theta.sin());
        CircuitSpec {
            n_modes: 2,
            squeezings: vec![c(r0, 0.0), ZERO],
            displacements: vec![ZERO, ZERO],
            unitary: CMat::from_row_slice(
                2,
                2,
                &[c(ct, 0.0), c(-st, 0.0), c(st, 0.0), c(ct, 0.0)],
            ),
        }
    }

    #[test]
    fn vacuum_zero_pattern_is_certain() {
        let state = GaussianState::vacuum(3);
        let pattern = DetectionPattern::new(vec![1, 2], vec![0, 0]).unwrap();
        let p = herald_probability(&state, &pattern, &[0]).unwrap();
        assert!((p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn photon_subtraction_probabilities() {
        let (r0, theta) = (0.6, 0.3);
        let state = state_from_circuit(&photon_subtraction(r0, theta)).unwrap();
        let kappa = r0.tanh() * theta.cos().powi(2);
        let t2 = theta.tan().powi(2);
        let expect = [
            kappa.powi(2) * t2 / (r0.cosh() * (1.0 - kappa * kappa).powf(1.5)),
            kappa.powi(2) * (1.0 + 2.0 * kappa * kappa) * t2 * t2
                / (2.0 * r0.cosh() * (1.0 - kappa * kappa).powf(2.5)),
            kappa.powi(4) * (3.0 + 2.0 * kappa * kappa) * t2.powi(3)
                / (2.0 * r0.cosh() * (1.0 - kappa * kappa).powf(3.5)),
        ];
        for (n, e) in (1..=3).zip(expect) {
            let pattern = DetectionPattern::new(vec![1], vec![n]).unwrap();
            let p = herald_probability(&state, &pattern, &[0]).unwrap();
            assert!(
                (p - e).abs() < 1e-12 * e.max(1.0),
                "n={n}: {p} vs {e}"
            );
        }
    }

    #[test]
    fn pair_source_probabilities() {
        let r: f64 = 0.8;
        let s2 = std::f64::consts::FRAC_1_SQRT_2;
        let spec = CircuitSpec {
            n_modes: 2,
            squeezings: vec![c(r, 0.0), c(-r, 0.0)],
            displacements: vec![ZERO, ZERO],
            unitary: CMat::from_row_slice(
                2,
                2,
                &[c(s2, 0.0), c(s2, 0.0), c(-s2, 0.0), c(s2, 0.0)],
            ),
        };
        let state = state_from_circuit(&spec).unwrap();
        for n in 0..6u32 {
            let pattern = DetectionPattern::new(vec![1], vec![n]).unwrap();
            let p = herald_probability(&state, &pattern, &[0]).unwrap();
            let e = r.tanh().powi(2 * n as i32) / r.cosh().powi(2);
            assert!((p - e).abs() < 1e-12, "n={n}: {p} vs {e}");
        }
    }

    #[test]
    fn zero_photon_branch_is_squeezed_vacuum() {
        let (r0, theta) = (0.6, 0.3);
        let state = state_from_circuit(&photon_subtraction(r0, theta)).unwrap();
        let bdata = b_data(&state, &[0]).unwrap();
        let g = zero_photon_gaussian(&bdata).unwrap();
        let kappa = r0.tanh() * theta.cos().powi(2);
        // Single-mode squeezed vacuum with tanh r = κ: covariance
        // diag entries ½cosh 2r, off-diagonal ½ sinh 2r.
        let r = kappa.atanh();
        let cov = g.cov_c();
        assert!((cov[(0, 0)].re - 0.5 * (2.0 * r).cosh()).abs() < 1e-12);
        assert!((cov[(0, 1)].re - 0.5 * (2.0 * r).sinh()).abs() < 1e-12);
        assert!(g.mean_c().norm() < 1e-12);
        let det = (cov[(0, 0)] * cov[(1, 1)] - cov[(0, 1)] * cov[(1, 0)]).re;
        assert!((det - 0.25).abs() < 1e-9);
    }

    #[test]
    fn extract_gate_matches_partition_squeeze() {
        let (r0, theta) = (0.9, 0.4);
        let state = state_from_circuit(&photon_subtraction(r0, theta)).unwrap();
        let bdata = b_data(&state, &[0]).unwrap();
        let gate = extract_gate(&bdata).unwrap();
        let kappa = r0.tanh() * theta.cos().powi(2);
        assert_eq!(gate.squeezes.len(), 1);
        assert!((gate.squeezes[0] - kappa.atanh()).abs() < 1e-12);
        assert!(gate.displacement[0].norm() < 1e-12);
    }

    #[test]
    fn photon_subtraction_coefficients() {
        let (r0, theta) = (0.6, 0.3);
        let state = state_from_circuit(&photon_subtraction(r0, theta)).unwrap();
        let kappa = r0.tanh() * theta.cos().powi(2);
        let bdata = b_data(&state, &[0]).unwrap();

        let c1m = fock_coefficients(&bdata, &[1], 12).unwrap();
        assert!((c1m[&vec![1u32]].re - 1.0).abs() < 1e-10);
        assert!(c1m[&vec![0u32]].norm() < 1e-10);

        let c2m = fock_coefficients(&bdata, &[2], 12).unwrap();
        let norm = (1.0 + 2.0 * kappa * kappa).sqrt();
        assert!((c2m[&vec![2u32]].re - 2f64.sqrt() * kappa / norm).abs() < 1e-10);
        assert!((c2m[&vec![0u32]].re - 1.0 / norm).abs() < 1e-10);
        assert!(c2m[&vec![1u32]].norm() < 1e-10);

        let c3m = fock_coefficients(&bdata, &[3], 12).unwrap();
        let norm3 = (3.0 + 2.0 * kappa * kappa).sqrt();
        assert!((c3m[&vec![3u32]].re - 2f64.sqrt() * kappa / norm3).abs() < 1e-10);
        assert!((c3m[&vec![1u32]].re - 3f64.sqrt() / norm3).abs() < 1e-10);
    }

    #[test]
    fn zero_pattern_coefficients_are_vacuum() {
        let (r0, theta) = (0.6, 0.3);
        let state = state_from_circuit(&photon_subtraction(r0, theta)).unwrap();
        let bdata = b_data(&state, &[0]).unwrap();
        let cm = fock_coefficients(&bdata, &[0], 12).unwrap();
        assert_eq!(cm.len(), 1);
        assert!((cm[&vec![0u32]].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mixed_input_refused_for_coefficients() {
        let state = GaussianState::vacuum(2);
        let cov = state.cov_c() + CMat::identity(4, 4).scale(0.2);
        let mixed = GaussianState::new(2, state.mean_c().clone(), cov).unwrap();
        let bdata = b_data(&mixed, &[0]).unwrap();
        assert!(matches!(
            fock_coefficients(&bdata, &[1], 12),
            Err(Error::Unsupported(_))
        ));
        assert!(matches!(extract_gate(&bdata), Err(Error::Unsupported(_))));
        // Probability still fine for mixed states.
        assert!(probability_from_bdata(&bdata, &[1]).is_ok());
    }

    #[test]
    fn detector_exchange_invariance() {
        let spec = CircuitSpec {
            n_modes: 3,
            squeezings: vec![c(0.5, 0.1), c(-0.3, 0.2), c(0.2, -0.4)],
            displacements: vec![c(0.1, 0.0), c(0.0, -0.1), c(0.05, 0.05)],
            unitary: {
                use rand::SeedableRng;
                crate::gaussian::haar_unitary(3, &mut rand_chacha::ChaCha8Rng::seed_from_u64(7))
            },
        };
        let state = state_from_circuit(&spec).unwrap();
        let p_a = DetectionPattern::new(vec![1, 2], vec![2, 1]).unwrap();
        let p_b = DetectionPattern::new(vec![2, 1], vec![1, 2]).unwrap();
        let pa = herald_probability(&state, &p_a, &[0]).unwrap();
        let pb = herald_probability(&state, &p_b, &[0]).unwrap();
        assert!((pa - pb).abs() < 1e-14);
        let ca = herald_state(&state, &p_a, &[0], 12).unwrap();
        let cb = herald_state(&state, &p_b, &[0], 12).unwrap();
        for (k, v) in &ca.coefficients {
            assert!((v - cb.coefficients[k]).norm() < 1e-12);
        }
    }

    #[test]
    fn multi_index_enumeration_is_sorted_and_complete() {
        let idx = enumerate_multi(2, 2);
        assert_eq!(
            idx,
            vec![
                vec![0, 0],
                vec![0, 1],
                vec![0, 2],
                vec![1, 0],
                vec![1, 1],
                vec![2, 0]
            ]
        );
        assert_eq!(enumerate_multi(3, 1).len(), 4);
    }

    #[test]
    fn absorb_unitary_keeps_probability() {
        let (r0, theta) = (0.7, 0.5);
        let state = state_from_circuit(&photon_subtraction(r0, theta)).unwrap();
        let gate = GaussianUnitary {
            kappa: CMat::identity(1, 1),
            squeezes: vec![0.35],
            displacement: vec![c(0.2, -0.1)],
        };
        let updated = absorb_unitary(&state, &gate, &[0]).unwrap();
        for n in 0..3u32 {
            let pattern = DetectionPattern::new(vec![1], vec![n]).unwrap();
            let p0 = herald_probability(&state, &pattern, &[0]).unwrap();
            let p1 = herald_probability(&updated, &pattern, &[0]).unwrap();
            assert!((p0 - p1).abs() < 1e-12, "n={n}");
        }
    }
}
