//! Conditional non-Gaussian state preparation from Gaussian circuits.
//!
//! A multimode Gaussian state (squeezed vacua, displacements, an
//! interferometer) is sent into photon-number-resolving detectors on a
//! subset of modes.  Conditioned on a detection pattern n̄ the remaining
//! modes collapse to a non-Gaussian state.  This crate computes, in closed
//! form and without Fock-space truncation of the Gaussian part:
//!
//! * the heralding probability P(n̄),
//! * the heralded state itself, factored as a Gaussian unitary gate acting
//!   on a finite superposition `Σ_ℓ c_ℓ |ℓ⟩` with `|ℓ| ≤ n_T` (the total
//!   detected photon number),
//! * its Wigner function on phase-space grids,
//! * and circuit parameters (B matrix, displacements) that maximize P(n̄)
//!   subject to producing a chosen target state exactly or to fidelity.
//!
//! # Conventions
//!
//! Annihilation operators `â₁ … â_N`, `ħ = 1`, quadratures
//! `q̂ = (↠+ â)/√2`, `p̂ = i(↠− â)/√2` so the vacuum covariance is `I/2`.
//! The complex basis orders operators as `ξ = (â₁†, …, â_N†, â₁, …, â_N)`;
//! the real basis as `(p₁, …, p_N, q₁, …, q_N)`.  The squeeze operator is
//! `Ŝ(ζ) = exp{(ζ↠² − ζ* â²)/2}`, so `Ŝ†âŜ = â cosh r + e^{iφ} ↠sinh r`
//! for `ζ = r e^{iφ}`, and a single-mode squeezed vacuum has
//! `⟨↠²⟩ = ½ e^{−iφ} sinh 2r`.  Phase-space measure is `d²α = dq dp / 2`,
//! and Wigner functions are normalized to `∫ W ∏ d²α_k = 1`, which puts the
//! single-photon dip at `W(0) = −2/π`.
//!
//! # Module map
//!
//! * [`gaussian`] — Gaussian states, circuits, basis changes, the detection
//!   decomposition (B matrix and its partitions), Takagi factorization and
//!   interferometer mesh decomposition.
//! * [`deriv`] — exact multivariate derivatives of Gaussian exponentials,
//!   the workhorse behind probabilities, coefficients and Wigner values.
//! * [`fock`] — dense Fock-space vectors, harmonic-oscillator wavefunctions,
//!   exact gate matrices, target-state constructors, fidelities, and a
//!   truncated brute-force circuit simulator used for cross-validation.
//! * [`herald`] — the conditional-state pipeline: probabilities, heralded
//!   Gaussian gates, Fock coefficients, Wigner grids.
//! * [`optimize`] — probability maximization over circuits under
//!   target-state constraints, with closed-form families and a
//!   derivative-free multistart search.
//! * [`io`] — structured, byte-deterministic document serialization.

pub mod deriv;
pub mod error;
pub mod fock;
pub mod gaussian;
pub mod herald;
pub mod io;
pub mod optimize;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex<f64>;

/// Complex dense matrix used throughout.
pub type CMat = nalgebra::DMatrix<C64>;

/// Complex dense vector used throughout.
pub type CVec = nalgebra::DVector<C64>;

/// `i` as a [`C64`].
pub(crate) const IM: C64 = C64::new(0.0, 1.0);

/// `1` as a [`C64`].
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// `0` as a [`C64`].
pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);

/// ln(n!) via the log-gamma function, exact to double precision.
pub(crate) fn ln_factorial(n: u64) -> f64 {
    // Stirling series on a shifted argument keeps the expansion accurate for
    // small n without a lookup table.
    if n < 2 {
        return 0.0;
    }
    let x = (n + 1) as f64; // ln Γ(x) with x = n+1
    let g = |x: f64| -> f64 {
        // Lanczos approximation, g = 7, double-precision coefficients.
        const COEF: [f64; 9] = [
            0.999_999_999_999_809_93,
            676.520_368_121_885_1,
            -1259.139_216_722_402_8,
            771.323_428_777_653_1,
            -176.615_029_162_140_6,
            12.507_343_278_686_905,
            -0.138_571_095_265_720_12,
            9.984_369_578_019_572e-6,
            1.505_632_735_149_311_6e-7,
        ];
        let x = x - 1.0;
        let mut a = COEF[0];
        let t = x + 7.5;
        for (i, &c) in COEF.iter().enumerate().skip(1) {
            a += c / (x + i as f64);
        }
        0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
    };
    g(x)
}

/// n! as f64 (overflows to ∞ beyond n = 170, callers guard with caps).
#[cfg(test)]
pub(crate) fn factorial(n: u64) -> f64 {
    if n <= 20 {
        let mut f = 1u64;
        for k in 2..=n {
            f *= k;
        }
        f as f64
    } else {
        ln_factorial(n).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factorial_agrees_with_ln_factorial() {
        for n in 0..=30u64 {
            let direct: f64 = (1..=n).map(|k| k as f64).product();
            assert!((factorial(n) - direct).abs() / direct.max(1.0) < 1e-12);
            assert!((ln_factorial(n) - direct.ln().max(0.0)).abs() < 1e-10);
        }
    }
}
