//! Closed-form state families and exact variable eliminations.
//!
//! Several target shapes admit a full analytic treatment: the detection
//! variables that reproduce the target coefficients exactly can be
//! solved for, and the herald probability collapses to a closed form in
//! the few remaining free magnitudes.  This module provides
//!
//! * builders that assemble the pure correlation matrix `B` and linear
//!   term `y` for each family (single-photon ladders on one detector,
//!   path-entangled `|n,0⟩+|0,n⟩` cores, equal-superposition
//!   single-excitation cores),
//! * the matching closed-form probabilities, used both as fast optimizer
//!   objectives and as independent checks of the numerical pipeline, and
//! * exact eliminations expressing `(μ, f)` through target coefficient
//!   ratios for one detector (up to four photons) and for the
//!   one-plus-two photon split over two detectors.
//!
//! Probability functions return `NaN` outside their physical domain so
//! minimizers reject those points naturally.
//!
//! # Examples
//!
//! ```
//! use gaussherald::optimize::{single_odd_probability, squeezing_db};
//!
//! // Heralding |1⟩ from a two-mode squeezed pair peaks at 25 %.
//! let p = single_odd_probability(std::f64::consts::FRAC_1_SQRT_2, 0.0);
//! assert!((p - 0.25).abs() < 1e-12);
//!
//! // artanh(1/√2) of squeezing is 7.66 dB.
//! let db = squeezing_db(std::f64::consts::FRAC_1_SQRT_2.atanh());
//! assert!((db - 7.6555).abs() < 1e-3);
//! ```

use crate::error::{Error, Result};
use crate::optimize::relations::{coefficient_constraints, RelationSet};
use crate::{C64, CMat, CVec};

/// Converts a squeezing parameter `r` to decibels: `10·log₁₀ e^{2r}`.
pub fn squeezing_db(r: f64) -> f64 {
    20.0 * r / std::f64::consts::LN_10
}

/// Assembles `(B, y)` for one kept mode from the reduced variables
/// `(b₁₁, κ, f, μ)`.
///
/// The kept mode is mode 0; detected modes follow in order.  `y` is
/// returned in the doubled layout (conjugate half first) expected by
/// pure-state constructors.
pub fn reconstruct_single_herald(
    b11: C64,
    kappa: &[C64],
    f: &CMat,
    mu: &[C64],
) -> Result<(CMat, CVec)> {
    let d = kappa.len();
    if mu.len() != d || f.nrows() != d || f.ncols() != d {
        return Err(Error::Validation(format!(
            "reduced variables sized for {} detectors: μ has {}, f is {}×{}",
            d,
            mu.len(),
            f.nrows(),
            f.ncols()
        )));
    }
    let scale = f.camax().max(1.0);
    if (f - f.transpose()).camax() > 1e-10 * scale {
        return Err(Error::Validation("f must be symmetric".into()));
    }
    let sech2 = 1.0 - b11.norm_sqr();
    if sech2 <= 0.0 {
        return Err(Error::Validation(format!(
            "|b₁₁| = {:.6} ≥ 1 is unphysical",
            b11.norm()
        )));
    }
    let s = sech2.sqrt();

    let n = d + 1;
    let mut b = CMat::zeros(n, n);
    b[(0, 0)] = b11;
    for j in 0..d {
        b[(0, j + 1)] = kappa[j] * s;
        b[(j + 1, 0)] = b[(0, j + 1)];
        for i in 0..d {
            b[(i + 1, j + 1)] = kappa[i] * kappa[j] * (f[(i, j)] - b11.conj());
        }
    }

    let mut y = CVec::zeros(2 * n);
    for i in 0..d {
        let amp = mu[i] * kappa[i].conj();
        y[i + 1] = amp.conj();
        y[n + i + 1] = amp;
    }
    Ok((b, y))
}

/// `(B, y)` heralding an equal single-excitation superposition over
/// `n_modes − 1` kept modes from one detected photon on the last mode.
///
/// `n_w` is the total detected-mode pair weight `Σₖ b_{kN}²` and `b_nn`
/// the detected self-pairing.
pub fn w_state_b(n_modes: usize, n_w: f64, b_nn: f64) -> Result<(CMat, CVec)> {
    if n_modes < 2 {
        return Err(Error::Validation(
            "equal-superposition family needs at least two modes".into(),
        ));
    }
    if !(0.0..1.0).contains(&n_w) {
        return Err(Error::Validation(format!(
            "pair weight n_w = {n_w} outside [0, 1)"
        )));
    }
    let n = n_modes;
    let coupling = (n_w / (n - 1) as f64).sqrt();
    let mut b = CMat::zeros(n, n);
    for k in 0..n - 1 {
        b[(k, n - 1)] = C64::new(coupling, 0.0);
        b[(n - 1, k)] = b[(k, n - 1)];
    }
    b[(n - 1, n - 1)] = C64::new(b_nn, 0.0);
    Ok((b, CVec::zeros(2 * n)))
}

/// Herald probability of the equal-superposition family.
pub fn w_probability(n_w: f64, b_nn: f64) -> f64 {
    if !(0.0..1.0).contains(&n_w) {
        return f64::NAN;
    }
    let disc = (1.0 - n_w) * (1.0 - n_w) - b_nn * b_nn;
    n_w * disc.sqrt()
}

/// `(B, y)` heralding a two-mode `(|n,0⟩ + |0,n⟩)/√2` core from `n`
/// detected photons spread one per detector.
///
/// `order` is the photon number `n ∈ {2, 3, 4}`.  Magnitudes:
/// * `order 2`: `[a, b, b33, b44]` — kept-to-detector couplings plus the
///   two detected self-pairings;
/// * `order 3`: `[a, b, c]` couplings, detected block zero;
/// * `order 4`: `[a, b, c, d]` couplings, detected block zero.
///
/// The relative phases between the two kept rows are fixed roots of
/// unity that cancel every cross term `|n−k, k⟩`, `0 < k < n`, for *any*
/// magnitudes, so only the magnitudes need optimizing.
pub fn noon_b(order: u32, mags: &[f64]) -> Result<(CMat, CVec)> {
    let d = order as usize;
    let n = d + 2;
    let expected = if order == 2 { 4 } else { d };
    if !(2..=4).contains(&order) {
        return Err(Error::Unsupported(format!(
            "path-entangled family implemented for orders 2–4, got {order}"
        )));
    }
    if mags.len() != expected {
        return Err(Error::Validation(format!(
            "order {order} takes {expected} magnitudes, got {}",
            mags.len()
        )));
    }
    let mut b = CMat::zeros(n, n);
    for (j, &mag) in mags.iter().take(d).enumerate() {
        let phase = match order {
            // Conjugate pairs ±i on alternating detectors.
            2 => C64::new(0.0, if j == 0 { -1.0 } else { 1.0 }),
            // Cube roots of unity ω^j.
            3 => C64::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 / 3.0),
            // Primitive eighth roots e^{iπ(2j+1)/4}.
            4 => C64::from_polar(1.0, std::f64::consts::PI * (2 * j + 1) as f64 / 4.0),
            _ => unreachable!(),
        };
        b[(0, 2 + j)] = C64::new(mag, 0.0);
        b[(2 + j, 0)] = b[(0, 2 + j)];
        b[(1, 2 + j)] = phase * mag;
        b[(2 + j, 1)] = b[(1, 2 + j)];
    }
    if order == 2 {
        b[(2, 2)] = C64::new(mags[2], 0.0);
        b[(3, 3)] = C64::new(mags[3], 0.0);
    }
    Ok((b, CVec::zeros(2 * n)))
}

/// Herald probability of the path-entangled family.
pub fn noon_probability(order: u32, mags: &[f64]) -> f64 {
    match order {
        2 => {
            let (a, b, b33, b44) = (mags[0], mags[1], mags[2], mags[3]);
            let d3 = (1.0 - 2.0 * a * a).powi(2) - b33 * b33;
            let d4 = (1.0 - 2.0 * b * b).powi(2) - b44 * b44;
            4.0 * a * a * b * b * (d3.sqrt() * d4.sqrt())
        }
        3 => {
            let (a2, b2, c2) = (mags[0] * mags[0], mags[1] * mags[1], mags[2] * mags[2]);
            let poly = 1.0 - 2.0 * (a2 + b2 + c2) + 3.0 * (a2 * b2 + a2 * c2 + b2 * c2);
            if poly < 0.0 {
                return f64::NAN;
            }
            12.0 * a2 * b2 * c2 * poly
        }
        4 => {
            let (a2, b2, c2, d2) = (
                mags[0] * mags[0],
                mags[1] * mags[1],
                mags[2] * mags[2],
                mags[3] * mags[3],
            );
            let f1 = 1.0 - 2.0 * (a2 + c2);
            let f2 = 1.0 - 2.0 * (b2 + d2);
            if f1 < 0.0 || f2 < 0.0 {
                return f64::NAN;
            }
            64.0 * a2 * b2 * c2 * d2 * f1 * f2
        }
        _ => f64::NAN,
    }
}

/// Probability of heralding the exact `|1⟩` core from one detected
/// photon, as a function of the coupling `κ` and the reduced detected
/// self-term `f₂₂` (both real; `μ = 0`).
pub fn single_odd_probability(kappa: f64, f22: f64) -> f64 {
    let k2 = kappa * kappa;
    let disc = 1.0 - 2.0 * k2 + (1.0 - f22 * f22) * k2 * k2;
    k2 * disc.sqrt()
}

/// Probability of heralding `(ratio·|0⟩ + |2⟩)/√(1+ratio²)` from two
/// detected photons (`μ = 0`, `f₂₂ = √2·ratio`, real).
pub fn zero_two_probability(kappa: f64, ratio: f64) -> f64 {
    let k2 = kappa * kappa;
    let disc = 1.0 - 2.0 * k2 + (1.0 - 2.0 * ratio * ratio) * k2 * k2;
    (1.0 + ratio * ratio) * k2 * k2 * disc.sqrt()
}

/// Probability of heralding `(ratio·|1⟩ + |3⟩)/√(1+ratio²)` from three
/// detected photons (`μ = 0`, `f₂₂ = √(2/3)·ratio`, real).
pub fn one_three_probability(kappa: f64, ratio: f64) -> f64 {
    let k2 = kappa * kappa;
    let r2 = ratio * ratio;
    let disc = 1.0 - 2.0 * k2 + (1.0 - 2.0 * r2 / 3.0) * k2 * k2;
    (1.0 + r2) * k2 * k2 * k2 * disc.sqrt()
}

/// The analytically solved families with closed-form herald
/// probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClosedFormFamily {
    /// Exact `|1⟩` core from one detected photon; params `[κ₂, f₂₂]`.
    SingleOdd,
    /// `ratio·|0⟩ + |2⟩` core from two detected photons; params
    /// `[κ₂, ratio]`.
    ZeroTwo,
    /// `ratio·|1⟩ + |3⟩` core from three detected photons; params
    /// `[κ₂, ratio]`.
    OneThree,
    /// Equal single-excitation superposition over the kept modes; params
    /// `[n_w, b_nn]`.
    WState,
    /// `(|n,0⟩ + |0,n⟩)/√2` core, `n ∈ {2, 3, 4}`; params are the
    /// magnitudes accepted by [`noon_b`].
    Noon(u32),
}

impl ClosedFormFamily {
    /// Number of parameters the family takes.
    pub fn n_params(&self) -> usize {
        match self {
            ClosedFormFamily::SingleOdd
            | ClosedFormFamily::ZeroTwo
            | ClosedFormFamily::OneThree
            | ClosedFormFamily::WState => 2,
            ClosedFormFamily::Noon(2) => 4,
            ClosedFormFamily::Noon(n) => *n as usize,
        }
    }
}

/// Evaluates the closed-form herald probability of `family` at `params`.
///
/// Returns `NaN` outside the family's physical domain.
pub fn closed_form_probability(family: ClosedFormFamily, params: &[f64]) -> Result<f64> {
    if params.len() != family.n_params() {
        return Err(Error::Validation(format!(
            "{family:?} takes {} parameters, got {}",
            family.n_params(),
            params.len()
        )));
    }
    Ok(match family {
        ClosedFormFamily::SingleOdd => single_odd_probability(params[0], params[1]),
        ClosedFormFamily::ZeroTwo => zero_two_probability(params[0], params[1]),
        ClosedFormFamily::OneThree => one_three_probability(params[0], params[1]),
        ClosedFormFamily::WState => w_probability(params[0], params[1]),
        ClosedFormFamily::Noon(n) => noon_probability(n, params),
    })
}

/// Result of an exact single-detector elimination.
#[derive(Debug, Clone)]
pub struct SingleDetectorSolution {
    /// Reduced linear term on the detector.
    pub mu: C64,
    /// Reduced detected self-term.
    pub f: C64,
    /// Largest mismatch of the leftover (over-determined) ratios.
    pub residual: f64,
}

/// Solves `(μ, f)` so that one detector with `n ∈ 1..=4` photons
/// reproduces the target ratios `target[k] = cₖ/cₙ` exactly.
///
/// For `n = 1` only `μ` is determined and `f_if_free` is adopted.  For
/// `n ≥ 3` the system is over-determined; the unused ratios are checked
/// and their worst mismatch reported as `residual`.
pub fn eliminate_single_detector(
    n: u32,
    target: &[C64],
    f_if_free: C64,
) -> Result<SingleDetectorSolution> {
    if !(1..=4).contains(&n) || target.len() != n as usize {
        return Err(Error::Validation(format!(
            "single-detector elimination covers 1–4 photons with matching \
             ratio count; got n = {n} with {} ratios",
            target.len()
        )));
    }
    if n == 1 {
        return Ok(SingleDetectorSolution {
            mu: target[0],
            f: f_if_free,
            residual: 0.0,
        });
    }
    let nf = n as f64;
    let mu = target[(n - 1) as usize] / nf.sqrt();
    let g = target[(n - 2) as usize] * 2.0 / (nf * (nf - 1.0)).sqrt() - mu * mu;
    let f = g.conj();

    let mut residual = 0.0f64;
    if n > 2 {
        let rel = match coefficient_constraints(&[n], 2)? {
            RelationSet::SingleHerald(r) => r,
            _ => unreachable!(),
        };
        let ratios = rel.ratios(&[mu], &CMat::from_element(1, 1, f))?;
        for k in 0..(n - 2) as usize {
            residual = residual.max((ratios[k] - target[k]).norm());
        }
    }
    Ok(SingleDetectorSolution { mu, f, residual })
}

/// Result of the exact two-detector elimination for the `(1, 2)` photon
/// split.
#[derive(Debug, Clone)]
pub struct OneTwoSolution {
    /// Reduced linear term on the single-photon detector.
    pub mu2: C64,
    /// Reduced self-term of the two-photon detector.
    pub f33: C64,
    /// Reduced cross-term between the detectors.
    pub f23: C64,
}

/// Solves `(μ₂, f₃₃, f₂₃)` so that detectors seeing `(1, 2)` photons
/// reproduce the target ratios `target[k] = cₖ/c₃` exactly, given the
/// free choice of `μ₃` (the two-photon detector's linear term).  `f₂₂`
/// stays free as well.
///
/// Degenerates when `μ₂ = μ₃`; that direction must be avoided by the
/// caller (an error is returned).
pub fn eliminate_one_two(target: &[C64], mu3: C64) -> Result<OneTwoSolution> {
    if target.len() != 3 {
        return Err(Error::Validation(format!(
            "the (1, 2) elimination takes three ratios, got {}",
            target.len()
        )));
    }
    let r3 = 3.0f64.sqrt();
    let r6 = 6.0f64.sqrt();
    let mu2 = target[2] * r3 - mu3 * 2.0;
    let det = (mu3 - mu2) * 2.0;
    if det.norm() < 1e-12 {
        return Err(Error::NumericalHealth(
            "two-detector elimination is singular at μ₂ = μ₃".into(),
        ));
    }
    let r1 = target[1] * r6 - mu3 * (mu2 * 2.0 + mu3);
    let r2 = target[0] * r6 - mu2 * mu3 * mu3;
    // [1, 2; μ₂, 2μ₃]·[g₃₃; g₂₃] = [r₁; r₂]
    let g33 = (mu3 * 2.0 * r1 - r2 * 2.0) / det;
    let g23 = (r2 - mu2 * r1) / det;
    Ok(OneTwoSolution {
        mu2,
        f33: g33.conj(),
        f23: g23.conj(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{takagi, BData};
    use crate::herald::{fock_coefficients, probability_from_bdata};
    use crate::{ONE, ZERO};
    use rand::Rng;
    use rand_chacha::{rand_core::SeedableRng, ChaCha8Rng};

    fn engine_probability(b: CMat, y: CVec, heralded: &[usize], pattern: &[u32]) -> f64 {
        let bdata = BData::from_pure_parts(b, y, heralded).unwrap();
        probability_from_bdata(&bdata, pattern).unwrap()
    }

    #[test]
    fn single_odd_matches_engine_and_ignores_gate() {
        for (kappa, f22, b11) in [(0.5, 0.3, 0.0), (0.62, -0.4, 0.35), (0.3, 0.0, -0.2)] {
            let f = CMat::from_element(1, 1, C64::new(f22, 0.0));
            let (b, y) =
                reconstruct_single_herald(C64::new(b11, 0.0), &[C64::new(kappa, 0.0)], &f, &[ZERO])
                    .unwrap();
            let p = engine_probability(b, y, &[0], &[1]);
            let closed = single_odd_probability(kappa, f22);
            assert!(
                (p - closed).abs() < 1e-10 * closed.max(1e-3),
                "κ={kappa}, f={f22}, b₁₁={b11}: engine {p} vs closed {closed}"
            );
        }
    }

    #[test]
    fn zero_two_matches_engine() {
        for (kappa, ratio, b11) in [(0.5, 0.4, 0.0), (0.45, 1.2, 0.3), (0.6, 0.05, -0.15)] {
            let f = CMat::from_element(1, 1, C64::new(2.0f64.sqrt() * ratio, 0.0));
            let (b, y) =
                reconstruct_single_herald(C64::new(b11, 0.0), &[C64::new(kappa, 0.0)], &f, &[ZERO])
                    .unwrap();
            let p = engine_probability(b, y, &[0], &[2]);
            let closed = zero_two_probability(kappa, ratio);
            assert!(
                (p - closed).abs() < 1e-10 * closed.max(1e-3),
                "κ={kappa}, ratio={ratio}: engine {p} vs closed {closed}"
            );
        }
    }

    #[test]
    fn one_three_matches_engine() {
        for (kappa, ratio, b11) in [(0.5, 0.4, 0.0), (0.55, 2.0, 0.25)] {
            let f = CMat::from_element(1, 1, C64::new((2.0f64 / 3.0).sqrt() * ratio, 0.0));
            let (b, y) =
                reconstruct_single_herald(C64::new(b11, 0.0), &[C64::new(kappa, 0.0)], &f, &[ZERO])
                    .unwrap();
            let p = engine_probability(b, y, &[0], &[3]);
            let closed = one_three_probability(kappa, ratio);
            assert!(
                (p - closed).abs() < 1e-9 * closed.max(1e-3),
                "κ={kappa}, ratio={ratio}: engine {p} vs closed {closed}"
            );
        }
    }

    #[test]
    fn w_family_matches_engine_with_uniform_core() {
        for (n, n_w, b_nn) in [(3usize, 0.4, 0.2), (5, 0.5, 0.0), (4, 0.3, -0.35)] {
            let (b, y) = w_state_b(n, n_w, b_nn).unwrap();
            let heralded: Vec<usize> = (0..n - 1).collect();
            let p = engine_probability(b.clone(), y.clone(), &heralded, &[1]);
            let closed = w_probability(n_w, b_nn);
            assert!(
                (p - closed).abs() < 1e-10 * closed.max(1e-3),
                "n={n}: engine {p} vs closed {closed}"
            );

            // Core: equal superposition of single excitations, no vacuum.
            let bdata = BData::from_pure_parts(b, y, &heralded).unwrap();
            let coeffs = fock_coefficients(&bdata, &[1], 4).unwrap();
            let zero_key = vec![0u32; n - 1];
            assert!(coeffs[&zero_key].norm() < 1e-12);
            let mut first = None;
            for k in 0..n - 1 {
                let mut key = zero_key.clone();
                key[k] = 1;
                let c = coeffs[&key];
                match first {
                    None => first = Some(c),
                    Some(f0) => assert!((c - f0).norm() < 1e-10),
                }
            }
            let expect = ((n - 1) as f64).sqrt().recip();
            assert!((first.unwrap().norm() - expect).abs() < 1e-9);
        }
    }

    #[test]
    fn noon_matches_engine_and_structure() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for order in 2u32..=4 {
            let n_mags = if order == 2 { 4 } else { order as usize };
            for _ in 0..3 {
                let mut mags: Vec<f64> =
                    (0..n_mags).map(|_| rng.gen_range(0.15..0.45)).collect();
                if order == 2 {
                    mags[2] = rng.gen_range(-0.2..0.2);
                    mags[3] = rng.gen_range(-0.2..0.2);
                }
                let (b, y) = noon_b(order, &mags).unwrap();
                let pattern = vec![1u32; order as usize];
                let p = engine_probability(b.clone(), y.clone(), &[0, 1], &pattern);
                let closed = noon_probability(order, &mags);
                assert!(
                    (p - closed).abs() < 1e-10 * closed.max(1e-6),
                    "order {order} mags {mags:?}: engine {p} vs closed {closed}"
                );

                // The heralded core is ∝ |n,0⟩ + |0,n⟩ exactly.
                let bdata = BData::from_pure_parts(b, y, &[0, 1]).unwrap();
                let coeffs = fock_coefficients(&bdata, &pattern, order as usize + 1).unwrap();
                let top = coeffs[&vec![order, 0]];
                assert!(top.norm() > 1e-6);
                assert!((coeffs[&vec![0, order]] - top).norm() < 1e-9);
                for (key, c) in &coeffs {
                    if key != &vec![order, 0] && key != &vec![0, order] {
                        assert!(
                            c.norm() < 1e-9,
                            "order {order}: stray coefficient at {key:?}: {c}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn family_optima_hit_published_values() {
        assert!((single_odd_probability(std::f64::consts::FRAC_1_SQRT_2, 0.0) - 0.25).abs() < 1e-12);
        assert!((w_probability(0.5, 0.0) - 0.25).abs() < 1e-12);
        assert!((noon_probability(2, &[0.5, 0.5, 0.0, 0.0]) - 1.0 / 16.0).abs() < 1e-12);
        let s5 = 5.0f64.sqrt().recip();
        assert!((noon_probability(3, &[s5, s5, s5]) - 48.0 / 3125.0).abs() < 1e-12);
        let s6 = 6.0f64.sqrt().recip();
        assert!((noon_probability(4, &[s6, s6, s6, s6]) - 4.0 / 729.0).abs() < 1e-12);
    }

    #[test]
    fn optimal_noon_squeezings_in_decibels() {
        // Input squeezing = artanh of the correlation-matrix singular
        // values at each optimum.
        let cases: [(u32, Vec<f64>, f64); 3] = [
            (2, vec![0.5, 0.5, 0.0, 0.0], 7.6555),
            (3, vec![5.0f64.sqrt().recip(); 3], 8.9614),
            (4, vec![6.0f64.sqrt().recip(); 4], 9.9566),
        ];
        for (order, mags, expect_db) in cases {
            let (b, _) = noon_b(order, &mags).unwrap();
            let (_, lambda) = takagi(&b).unwrap();
            let r_max = lambda[0].atanh();
            assert!(
                (squeezing_db(r_max) - expect_db).abs() < 2e-3,
                "order {order}: {} dB vs {expect_db} dB",
                squeezing_db(r_max)
            );
        }
    }

    #[test]
    fn single_detector_elimination_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 2u32..=4 {
            let rel = match coefficient_constraints(&[n], 2).unwrap() {
                RelationSet::SingleHerald(r) => r,
                _ => unreachable!(),
            };
            for _ in 0..4 {
                let mu = C64::new(rng.gen_range(-0.8..0.8), rng.gen_range(-0.8..0.8));
                let f = C64::new(rng.gen_range(-0.8..0.8), rng.gen_range(-0.8..0.8));
                let ratios = rel.ratios(&[mu], &CMat::from_element(1, 1, f)).unwrap();
                let sol = eliminate_single_detector(n, &ratios, ZERO).unwrap();
                assert!((sol.mu - mu).norm() < 1e-10, "n={n}");
                assert!((sol.f - f).norm() < 1e-10, "n={n}");
                assert!(sol.residual < 1e-9, "n={n}: residual {}", sol.residual);
            }
        }
        // n = 1 adopts the free value.
        let sol = eliminate_single_detector(1, &[C64::new(0.3, 0.1)], ONE).unwrap();
        assert!((sol.mu - C64::new(0.3, 0.1)).norm() < 1e-15);
        assert!((sol.f - ONE).norm() < 1e-15);
    }

    #[test]
    fn one_two_elimination_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let rel = match coefficient_constraints(&[1, 2], 3).unwrap() {
            RelationSet::SingleHerald(r) => r,
            _ => unreachable!(),
        };
        for _ in 0..5 {
            let mu = [
                C64::new(rng.gen_range(-0.8..0.8), rng.gen_range(-0.8..0.8)),
                C64::new(rng.gen_range(-0.8..0.8), rng.gen_range(-0.8..0.8)),
            ];
            let mut f = CMat::zeros(2, 2);
            for i in 0..2 {
                for j in i..2 {
                    let v = C64::new(rng.gen_range(-0.8..0.8), rng.gen_range(-0.8..0.8));
                    f[(i, j)] = v;
                    f[(j, i)] = v;
                }
            }
            let ratios = rel.ratios(&mu, &f).unwrap();
            let sol = eliminate_one_two(&ratios, mu[1]).unwrap();
            assert!((sol.mu2 - mu[0]).norm() < 1e-9);
            assert!((sol.f33 - f[(1, 1)]).norm() < 1e-8);
            assert!((sol.f23 - f[(0, 1)]).norm() < 1e-8);
        }
    }

    #[test]
    fn elimination_rejects_degenerate_direction() {
        // μ₂ = μ₃ makes the linear solve singular: pick targets realized
        // by equal linear terms.
        let rel = match coefficient_constraints(&[1, 2], 3).unwrap() {
            RelationSet::SingleHerald(r) => r,
            _ => unreachable!(),
        };
        let mu = [C64::new(0.4, 0.1); 2];
        let mut f = CMat::zeros(2, 2);
        f[(0, 0)] = C64::new(0.2, 0.0);
        f[(1, 1)] = C64::new(-0.3, 0.1);
        f[(0, 1)] = C64::new(0.1, -0.2);
        f[(1, 0)] = f[(0, 1)];
        let ratios = rel.ratios(&mu, &f).unwrap();
        assert!(eliminate_one_two(&ratios, mu[1]).is_err());
    }
}
