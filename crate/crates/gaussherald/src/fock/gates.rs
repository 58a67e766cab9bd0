//! Exact Fock-basis matrix elements of Gaussian circuit elements.
//!
//! Squeezer and displacement matrices are built column by column from the
//! operator identities `Ŝ↠cosh r = â†Ŝ − e^{−iθ} sinh r Ŝâ` and
//! `D̂↠= â†D̂ − α* D̂`, seeded with the closed-form column 0 (squeezed
//! vacuum / coherent state).  Every dependency in these recursions points
//! to equal-or-lower row and column indices, so all retained elements
//! `⟨m|Ô|n⟩`, `m, n < dim`, are exact — truncation affects which elements
//! are *kept*, never their values.  (The normally ordered triple-product
//! form is mathematically equivalent but numerically useless here: its
//! intermediate sums cancel catastrophically at moderate indices.)
//!
//! Interferometers are factored into two-mode Givens elements plus
//! per-mode phases.  Each two-mode element conserves the photon total of
//! its mode pair, so it is applied block-by-block on those sectors; a
//! sector that overflows the per-mode cutoff loses exactly its clamped
//! components and nothing else.
//!
//! Conventions: `Ŝ(ζ) = exp{(ζ â†² − ζ* â²)/2}` with
//! `Ŝ†âŜ = â cosh r + e^{iθ} ↠sinh r`, and an interferometer with matrix
//! `U` maps `âᵢ† ↦ Σₖ Uₖᵢ âₖ†`.

use crate::error::{Error, Result};
use crate::fock::FockVector;
use crate::{ln_factorial, C64, CMat, ZERO};

/// `⟨m|Ŝ(ζ)|n⟩` for `0 ≤ m, n < dim`, exact on the block.
///
/// Column 0 is the squeezed vacuum
/// `c_{2k} = (sech r)^{1/2} √((2k)!)/k! (½e^{iθ}tanh r)^k`; later columns
/// follow from
/// `√(n+1)·⟨m|Ŝ|n+1⟩ = [√m·⟨m−1|Ŝ|n⟩ − e^{−iθ} sinh r √n·⟨m|Ŝ|n−1⟩]/cosh r`.
///
/// Column `n` carries weight up to row ~`n e^{2r}`; columns with
/// `n e^{2r} ≫ dim` lose most of their norm to truncation and accumulate
/// rounding noise on top.  Circuit application never multiplies such
/// columns against nonzero amplitudes (states are squeezed while their
/// per-mode support is still low), but standalone callers should keep
/// `dim` comfortably above `n_max e^{2r}` for the columns they read.
pub fn squeeze_matrix(zeta: C64, dim: usize) -> CMat {
    let r = zeta.norm();
    if r == 0.0 {
        return CMat::identity(dim, dim);
    }
    let phase = zeta / r;
    let t = r.tanh();
    let (ch, sh) = (r.cosh(), r.sinh());
    let half_t = 0.5 * t;

    let mut s = CMat::zeros(dim, dim);
    // Column 0 in ln-space for stability at large m.
    for k in 0..(dim + 1) / 2 {
        let m = 2 * k;
        let ln_mag = -0.5 * ch.ln() + 0.5 * ln_factorial(m as u64) - ln_factorial(k as u64)
            + k as f64 * half_t.ln();
        s[(m, 0)] = phase.powu(k as u32) * ln_mag.exp();
    }
    let back = phase.conj() * sh;
    for n in 0..dim - 1 {
        let inv = 1.0 / (ch * ((n + 1) as f64).sqrt());
        for m in 0..dim {
            let raised = if m == 0 {
                ZERO
            } else {
                s[(m - 1, n)] * (m as f64).sqrt()
            };
            let lowered = if n == 0 {
                ZERO
            } else {
                s[(m, n - 1)] * (back * (n as f64).sqrt())
            };
            s[(m, n + 1)] = (raised - lowered) * inv;
        }
    }
    s
}

/// `⟨m|D̂(α)|n⟩` for `0 ≤ m, n < dim`, exact on the block.
///
/// Column 0 is the coherent state `e^{−|α|²/2} αᵐ/√m!`; later columns
/// follow from `√(n+1)·⟨m|D̂|n+1⟩ = √m·⟨m−1|D̂|n⟩ − α*·⟨m|D̂|n⟩`.
pub fn displacement_matrix(alpha: C64, dim: usize) -> CMat {
    if alpha == ZERO {
        return CMat::identity(dim, dim);
    }
    let mut d = CMat::zeros(dim, dim);
    let ln_scale = -0.5 * alpha.norm_sqr();
    let ln_abs = alpha.norm().ln();
    let phase = alpha / alpha.norm();
    for m in 0..dim {
        let ln_mag = ln_scale + m as f64 * ln_abs - 0.5 * ln_factorial(m as u64);
        d[(m, 0)] = phase.powu(m as u32) * ln_mag.exp();
    }
    let back = alpha.conj();
    for n in 0..dim - 1 {
        let inv = 1.0 / ((n + 1) as f64).sqrt();
        for m in 0..dim {
            let raised = if m == 0 {
                ZERO
            } else {
                d[(m - 1, n)] * (m as f64).sqrt()
            };
            d[(m, n + 1)] = (raised - d[(m, n)] * back) * inv;
        }
    }
    d
}

/// Applies a single-mode operator matrix (`d×d`, `d = cutoff+1`) to one
/// mode of a dense vector, in place.
pub fn apply_single_mode(state: &mut FockVector, mode: usize, op: &CMat) {
    let d = state.cutoff() + 1;
    debug_assert_eq!(op.nrows(), d);
    debug_assert_eq!(op.ncols(), d);
    debug_assert!(mode < state.n_modes());
    let stride = d.pow((state.n_modes() - 1 - mode) as u32);
    let block = stride * d;
    let len = state.coeffs().len();
    let mut x = vec![ZERO; d];
    let mut y = vec![ZERO; d];
    let coeffs = state.coeffs_mut();
    let mut chunk = 0usize;
    while chunk < len {
        for off in 0..stride {
            let base = chunk + off;
            for n in 0..d {
                x[n] = coeffs[base + n * stride];
            }
            for m in 0..d {
                let mut acc = ZERO;
                for n in 0..d {
                    acc += op[(m, n)] * x[n];
                }
                y[m] = acc;
            }
            for m in 0..d {
                coeffs[base + m * stride] = y[m];
            }
        }
        chunk += block;
    }
}

/// Multiplies each basis state by `∏ₖ phases[k]^{nₖ}` in place
/// (diagonal-interferometer action).
pub fn apply_mode_phases(state: &mut FockVector, phases: &[C64]) {
    let d = state.cutoff() + 1;
    let n_modes = state.n_modes();
    debug_assert_eq!(phases.len(), n_modes);
    let mut pow = vec![vec![C64::new(1.0, 0.0); d]; n_modes];
    for (k, p) in phases.iter().enumerate() {
        for n in 1..d {
            pow[k][n] = pow[k][n - 1] * p;
        }
    }
    let len = state.coeffs().len();
    let coeffs = state.coeffs_mut();
    for idx in 0..len {
        let mut rest = idx;
        let mut f = C64::new(1.0, 0.0);
        for k in (0..n_modes).rev() {
            let n = rest % d;
            rest /= d;
            f *= pow[k][n];
        }
        coeffs[idx] *= f;
    }
}

/// Two-mode coupler on modes `(p, q)`: `â_p† ↦ u[(0,0)]â_p† + u[(1,0)]â_q†`,
/// `â_q† ↦ u[(0,1)]â_p† + u[(1,1)]â_q†`.  Photon-total sectors of the pair
/// are transformed exactly; components pushed past the per-mode cutoff are
/// dropped.
pub fn apply_two_mode(state: &mut FockVector, p: usize, q: usize, u: &CMat) {
    debug_assert!(p != q);
    debug_assert_eq!(u.nrows(), 2);
    debug_assert_eq!(u.ncols(), 2);
    let d = state.cutoff() + 1;
    let c = state.cutoff();
    let n_modes = state.n_modes();
    debug_assert!(p < n_modes && q < n_modes);

    // Per-sector transforms: for total S, pairs (m, S−m) with both ≤ c.
    let sectors = build_pair_sectors(u, c);

    let sp = d.pow((n_modes - 1 - p) as u32);
    let sq = d.pow((n_modes - 1 - q) as u32);
    let len = state.coeffs().len();
    let coeffs = state.coeffs_mut();

    // Enumerate fibers: indices with n_p = n_q = 0.
    let mut x = vec![ZERO; d * d];
    let mut fiber_bases = Vec::new();
    {
        let mut idx = 0usize;
        let mut multi = vec![0usize; n_modes];
        loop {
            if multi[p] == 0 && multi[q] == 0 {
                fiber_bases.push(idx);
            }
            // increment
            let mut done = true;
            for k in (0..n_modes).rev() {
                if multi[k] < c {
                    multi[k] += 1;
                    done = false;
                    break;
                }
                multi[k] = 0;
            }
            if done {
                break;
            }
            idx += 1;
        }
        debug_assert_eq!(idx + 1, len);
    }

    for &base in &fiber_bases {
        for m in 0..d {
            for n in 0..d {
                x[m * d + n] = coeffs[base + m * sp + n * sq];
            }
        }
        for (s_total, pairs, t) in &sectors {
            let _ = s_total;
            let k = pairs.len();
            for (oi, &(a, b)) in pairs.iter().enumerate() {
                let mut acc = ZERO;
                for (ii, &(m, n)) in pairs.iter().enumerate() {
                    acc += t[oi * k + ii] * x[m * d + n];
                }
                coeffs[base + a * sp + b * sq] = acc;
            }
        }
    }
}

/// Builds per-photon-total transform blocks for a two-mode coupler.
#[allow(clippy::type_complexity)]
fn build_pair_sectors(u: &CMat, c: usize) -> Vec<(usize, Vec<(usize, usize)>, Vec<C64>)> {
    let u00 = u[(0, 0)];
    let u10 = u[(1, 0)];
    let u01 = u[(0, 1)];
    let u11 = u[(1, 1)];
    // Precomputed powers up to c.
    let pows = |z: C64| -> Vec<C64> {
        let mut v = vec![C64::new(1.0, 0.0); c + 1];
        for i in 1..=c {
            v[i] = v[i - 1] * z;
        }
        v
    };
    let p00 = pows(u00);
    let p10 = pows(u10);
    let p01 = pows(u01);
    let p11 = pows(u11);
    let lnf = |n: usize| ln_factorial(n as u64);

    let mut out = Vec::new();
    for s_total in 0..=(2 * c) {
        let lo = s_total.saturating_sub(c);
        let hi = s_total.min(c);
        let pairs: Vec<(usize, usize)> = (lo..=hi).map(|m| (m, s_total - m)).collect();
        let k = pairs.len();
        let mut t = vec![ZERO; k * k];
        for (oi, &(a, b)) in pairs.iter().enumerate() {
            for (ii, &(m, n)) in pairs.iter().enumerate() {
                // Coefficient of |a, b⟩ in the image of |m, n⟩.
                let mut acc = ZERO;
                let j_lo = a.saturating_sub(n);
                let j_hi = a.min(m);
                for j in j_lo..=j_hi {
                    let kq = a - j;
                    // C(m, j) C(n, kq) u00^j u10^(m−j) u01^kq u11^(n−kq)
                    let ln_c = lnf(m) - lnf(j) - lnf(m - j) + lnf(n) - lnf(kq) - lnf(n - kq);
                    acc += ln_c.exp() * p00[j] * p10[m - j] * p01[kq] * p11[n - kq];
                }
                let scale = (0.5 * (lnf(a) + lnf(b) - lnf(m) - lnf(n))).exp();
                t[oi * k + ii] = acc * scale;
            }
        }
        out.push((s_total, pairs, t));
    }
    out
}

/// Applies an `N`-mode interferometer `U` (`âᵢ† ↦ Σₖ Uₖᵢ âₖ†`) to a dense
/// vector via a Givens factorization `U = G₁† ⋯ G_L† D`.
pub fn apply_interferometer(state: &mut FockVector, u: &CMat) -> Result<()> {
    let n = state.n_modes();
    if u.nrows() != n || u.ncols() != n {
        return Err(Error::Validation(format!(
            "interferometer is {}×{}, vector has {} modes",
            u.nrows(),
            u.ncols(),
            n
        )));
    }
    let residue = (u.adjoint() * u - CMat::identity(n, n)).camax();
    if residue > 1e-9 {
        return Err(Error::Validation(format!(
            "interferometer deviates from unitarity by {residue:.3e}"
        )));
    }
    if n == 1 {
        apply_mode_phases(state, &[u[(0, 0)]]);
        return Ok(());
    }

    let mut w = u.clone();
    let mut rots: Vec<(usize, usize, [C64; 4])> = Vec::new();
    for col in 0..n {
        for row in col + 1..n {
            let a = w[(col, col)];
            let b = w[(row, col)];
            if b.norm() < 1e-15 {
                continue;
            }
            let rho = (a.norm_sqr() + b.norm_sqr()).sqrt();
            let g00 = a.conj() / rho;
            let g01 = b.conj() / rho;
            let g10 = -b / rho;
            let g11 = a / rho;
            for j in 0..n {
                let x0 = w[(col, j)];
                let x1 = w[(row, j)];
                w[(col, j)] = g00 * x0 + g01 * x1;
                w[(row, j)] = g10 * x0 + g11 * x1;
            }
            rots.push((col, row, [g00, g01, g10, g11]));
        }
    }
    let mut phases = Vec::with_capacity(n);
    for i in 0..n {
        for j in 0..n {
            if i != j && w[(i, j)].norm() > 1e-8 {
                return Err(Error::NumericalHealth(format!(
                    "Givens factorization left residue {:.3e} off the diagonal",
                    w[(i, j)].norm()
                )));
            }
        }
        phases.push(w[(i, i)]);
    }

    // U = G₁† ⋯ G_L† D: apply D, then the adjoints in reverse order.
    apply_mode_phases(state, &phases);
    for &(p, q, g) in rots.iter().rev() {
        // G† block: [[g00*, g10*], [g01*, g11*]]
        let gd = CMat::from_row_slice(
            2,
            2,
            &[g[0].conj(), g[2].conj(), g[1].conj(), g[3].conj()],
        );
        apply_two_mode(state, p, q, &gd);
    }
    Ok(())
}
