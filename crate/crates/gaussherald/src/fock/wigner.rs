//! Wigner functions of finite Fock superpositions, with optional
//! Gaussian gates applied by phase-space substitution.
//!
//! For a state `Σ c_m̄ |m̄⟩` the Wigner function is the Hermitian pair
//! sum
//!
//! `W̄(ᾱ) = π^{−M} Σ_{m̄,n̄} c_m̄ c_n̄* ∏ᵢ (mᵢ! nᵢ!)^{−1/2}
//!          H_{mᵢnᵢ}(2αᵢ*, 2αᵢ) · e^{−qᵢ²−pᵢ²}`
//!
//! with the two-index Hermite polynomials
//! `H_{mn}(u, v) = ∂ₜᵐ∂ₛⁿ exp(−ts + ut + vs)|₀`.  The ket index `mᵢ`
//! pairs with the conjugated point `2αᵢ*` — the opposite pairing flips
//! the sign of every momentum-odd feature (both give real fields, which
//! is why only states with complex coefficients can tell them apart).  A Gaussian gate `G`
//! acts by the inverse substitution `W_G(ξ) = W(S^{−1}(ξ − d))` where
//! `(S, d)` is the quadrature-space action of `G` — phase-space volume
//! is preserved, so no Jacobian appears.  Values follow the `W = 2^M W̄`
//! scaling of [`crate::herald::wigner`], making the two paths directly
//! comparable: this module is the brute-force mirror of the analytic
//! evaluation there.
//!
//! # Examples
//!
//! ```
//! use gaussherald::fock::wigner::wigner_of_fock_superposition;
//! use gaussherald::fock::FockVector;
//! use gaussherald::herald::GridSpec;
//! use gaussherald::C64;
//!
//! // Single photon: W(0) = −2/π.
//! let one = FockVector::single_mode(&[C64::new(0.0, 0.0), C64::new(1.0, 0.0)]).unwrap();
//! let grid = GridSpec::centered(1, 4.0, 21);
//! let w = wigner_of_fock_superposition(&one, None, &grid).unwrap();
//! assert!((w.value_at(&[10, 10]) + 2.0 / std::f64::consts::PI).abs() < 1e-12);
//! ```

use rayon::prelude::*;

use super::{increment, FockVector};
use crate::error::{Error, Result};
use crate::gaussian::{omega, GaussianUnitary};
use crate::herald::{GridSpec, WignerGrid};
use crate::{ln_factorial, C64};
use nalgebra::{DMatrix, DVector};

/// Tolerance for the imaginary residue of grid values.
const IMAG_TOL: f64 = 1e-10;

/// Quadrature-space action `(S, d)` of a Gaussian gate, momentum-first
/// ordering, with `S` pre-inverted for substitution use.
struct RealAction {
    s_inv: DMatrix<f64>,
    d: DVector<f64>,
}

fn real_action(gate: &GaussianUnitary) -> Result<RealAction> {
    let m = gate.n_modes();
    let om = omega(m);
    let s_c = gate.symplectic_c();
    let s_r = &om * s_c * om.adjoint();
    let d_c = gate.displacement_c();
    let d_r = &om * d_c;
    let worst = s_r
        .iter()
        .map(|e| e.im.abs())
        .chain(d_r.iter().map(|e| e.im.abs()))
        .fold(0.0f64, f64::max);
    if worst > 1e-9 {
        return Err(Error::NumericalHealth(format!(
            "gate quadrature action has imaginary residue {worst:.3e}"
        )));
    }
    let s = DMatrix::from_fn(2 * m, 2 * m, |i, j| s_r[(i, j)].re);
    let s_inv = s
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::NumericalHealth("gate symplectic action not invertible".into()))?;
    let d = DVector::from_fn(2 * m, |i, _| d_r[i].re);
    Ok(RealAction { s_inv, d })
}

/// Two-index Hermite table `H_{mn}(u, v)` for all `m ≤ rows`, `n ≤ cols`,
/// flattened row-major.
fn hermite_table(u: C64, v: C64, rows: usize, cols: usize) -> Vec<C64> {
    let w = cols + 1;
    let mut h = vec![C64::new(0.0, 0.0); (rows + 1) * w];
    let mut vn = C64::new(1.0, 0.0);
    for n in 0..=cols {
        h[n] = vn;
        vn *= v;
    }
    for m in 0..rows {
        for n in 0..=cols {
            let lower = if n == 0 {
                C64::new(0.0, 0.0)
            } else {
                h[m * w + n - 1].scale(n as f64)
            };
            h[(m + 1) * w + n] = u * h[m * w + n] - lower;
        }
    }
    h
}

/// Evaluates the Wigner function of a normalized Fock superposition on a
/// grid, with an optional Gaussian gate applied in front.
///
/// The returned grid carries `normalization = 1`; its integral over
/// `∏ d²αᵢ` is one up to cutoff truncation.
pub fn wigner_of_fock_superposition(
    v: &FockVector,
    gate: Option<&GaussianUnitary>,
    grid: &GridSpec,
) -> Result<WignerGrid> {
    let m = v.n_modes();
    if grid.axes.len() != m {
        return Err(Error::Validation(format!(
            "grid covers {} modes but the state has {}",
            grid.axes.len(),
            m
        )));
    }
    if (v.norm() - 1.0).abs() > 1e-6 {
        return Err(Error::Validation(format!(
            "Wigner evaluation requires a normalized state (norm {:.8})",
            v.norm()
        )));
    }
    if let Some(g) = gate {
        if g.n_modes() != m {
            return Err(Error::Validation(format!(
                "gate acts on {} modes but the state has {}",
                g.n_modes(),
                m
            )));
        }
    }
    let total = grid.n_points()?;
    let action = gate.map(real_action).transpose()?;

    // Nonzero entries with their multi-indices and ½·Σ ln mᵢ! weights.
    let mut entries: Vec<(Vec<usize>, C64, f64)> = Vec::new();
    let mut multi = vec![0usize; m];
    let mut flat = 0usize;
    loop {
        let coeff = v.coeffs()[flat];
        if coeff.norm_sqr() > 1e-32 {
            let lf: f64 = multi.iter().map(|&k| ln_factorial(k as u64)).sum();
            entries.push((multi.clone(), coeff, 0.5 * lf));
        }
        flat += 1;
        if !increment(&mut multi, v.cutoff()) {
            break;
        }
    }
    let mut maxdeg = vec![0usize; m];
    for (idx, _, _) in &entries {
        for (i, &k) in idx.iter().enumerate() {
            maxdeg[i] = maxdeg[i].max(k);
        }
    }
    // Pairwise weights c_m̄ c_n̄* (m̄! n̄!)^{−1/2}, point-independent.
    let pairs: Vec<(&[usize], &[usize], C64)> = entries
        .iter()
        .flat_map(|a| {
            entries
                .iter()
                .map(move |b| (a.0.as_slice(), b.0.as_slice(), a.1 * b.1.conj() * (-(a.2 + b.2)).exp()))
        })
        .collect();

    let scale = (2.0 / std::f64::consts::PI).powi(m as i32);
    let values: Vec<(f64, f64)> = (0..total)
        .into_par_iter()
        .map(|flat| {
            let mut qp = vec![0.0f64; 2 * m];
            grid.coords(flat, &mut qp);
            // Substitute the inverse gate action (momentum-first order).
            let (mut qs, mut ps) = (vec![0.0; m], vec![0.0; m]);
            match &action {
                Some(act) => {
                    let mut xi = DVector::<f64>::zeros(2 * m);
                    for i in 0..m {
                        xi[i] = qp[2 * i + 1] - act.d[i];
                        xi[m + i] = qp[2 * i] - act.d[m + i];
                    }
                    let sub = &act.s_inv * xi;
                    for i in 0..m {
                        ps[i] = sub[i];
                        qs[i] = sub[m + i];
                    }
                }
                None => {
                    for i in 0..m {
                        qs[i] = qp[2 * i];
                        ps[i] = qp[2 * i + 1];
                    }
                }
            }
            let mut gauss = 0.0;
            let tables: Vec<Vec<C64>> = (0..m)
                .map(|i| {
                    gauss -= qs[i] * qs[i] + ps[i] * ps[i];
                    let u = C64::new(qs[i], ps[i]).scale(std::f64::consts::SQRT_2);
                    hermite_table(u.conj(), u, maxdeg[i], maxdeg[i])
                })
                .collect();
            let mut sum = C64::new(0.0, 0.0);
            for (ma, mb, w) in &pairs {
                let mut term = *w;
                for i in 0..m {
                    term *= tables[i][ma[i] * (maxdeg[i] + 1) + mb[i]];
                }
                sum += term;
            }
            let val = sum * gauss.exp() * scale;
            (val.re, val.im)
        })
        .collect();

    let worst = values
        .iter()
        .map(|&(re, im)| im.abs() / (1.0 + re.abs()))
        .fold(0.0f64, f64::max);
    if worst > IMAG_TOL {
        return Err(Error::NumericalHealth(format!(
            "Wigner values carry imaginary residue {worst:.3e}"
        )));
    }
    Ok(WignerGrid {
        axes: grid.axes.clone(),
        values: values.into_iter().map(|(re, _)| re).collect(),
        normalization: 1.0,
    })
}
