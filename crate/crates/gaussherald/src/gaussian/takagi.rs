//! Takagi (Autonne) factorization of complex symmetric matrices.
//!
//! Every complex symmetric `B` admits `B = K Λ Kᵀ` with `K` unitary and
//! `Λ = diag(λ₁ ≥ … ≥ λ_N ≥ 0)` the singular values of `B`.  The columns
//! of `K` are "conjugate eigenvectors": `B v̄ₖ = λₖ vₖ`.
//!
//! The factorization is computed through the real symmetric embedding
//!
//! ```text
//! M = [[Re B, Im B], [Im B, −Re B]] ∈ ℝ^{2N×2N} ,
//! ```
//!
//! whose spectrum is `{±λₖ}`: an eigenvector `(x, y)` of `M` with
//! eigenvalue `λ ≥ 0` yields the Takagi column `v = x + iy`, and real
//! orthonormality of the embedding implies complex orthonormality for
//! `λ > 0`.  Columns in the numerical null space are completed to a
//! unitary basis by Gram–Schmidt against the standard basis, which keeps
//! the result deterministic.
//!
//! Each column is defined only up to sign (a phase `e^{iθ}` would change
//! `K Λ Kᵀ` by `e^{2iθ}`), so signs are fixed by requiring the phase of
//! each column's largest-magnitude entry to lie in `(−π/2, π/2]`.

use crate::error::{Error, Result};
use crate::{C64, CMat};
use nalgebra::{DMatrix, DVector};

/// Relative tolerance for grouping singular values and for the
/// reconstruction check.
const TAKAGI_TOL: f64 = 1e-10;

/// Factors a complex symmetric matrix as `B = K Λ Kᵀ`.
///
/// Returns `(K, λ)` with `K` unitary and `λ` sorted descending.  Fails
/// with a validation error if `B` is not square/symmetric, and with a
/// numerical-health error if the reconstruction residue exceeds
/// `1e-10 · max(1, ‖B‖_max)`.
///
/// # Example
///
/// ```
/// use gaussherald::gaussian::takagi;
/// use gaussherald::{C64, CMat};
///
/// let b = CMat::from_row_slice(2, 2, &[
///     C64::new(0.1, 0.0), C64::new(0.3, 0.2),
///     C64::new(0.3, 0.2), C64::new(-0.4, 0.1),
/// ]);
/// let (k, lam) = takagi(&b).unwrap();
/// let lmat = CMat::from_diagonal(&lam.map(|x| C64::new(x, 0.0)));
/// let recon = &k * lmat * k.transpose();
/// assert!((recon - b).iter().all(|c| c.norm() < 1e-10));
/// ```
pub fn takagi(b: &CMat) -> Result<(CMat, DVector<f64>)> {
    let n = b.nrows();
    if b.ncols() != n {
        return Err(Error::Validation("takagi: matrix must be square".into()));
    }
    let scale = b.camax().max(1.0);
    let sym_res = (b - b.transpose()).camax();
    if sym_res > TAKAGI_TOL * scale {
        return Err(Error::Validation(format!(
            "takagi: matrix is not symmetric (residue {sym_res:.3e})"
        )));
    }
    if n == 0 {
        return Ok((CMat::zeros(0, 0), DVector::zeros(0)));
    }
    let bs = (b + b.transpose()).scale(0.5);

    // Real symmetric embedding.
    let mut m = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let e = bs[(i, j)];
            m[(i, j)] = e.re;
            m[(i, n + j)] = e.im;
            m[(n + i, j)] = e.im;
            m[(n + i, n + j)] = -e.re;
        }
    }
    let eig = m.symmetric_eigen();
    // Sort eigenpairs by eigenvalue descending; the top n belong to +λ.
    let mut order: Vec<usize> = (0..2 * n).collect();
    order.sort_by(|&a, &bq| {
        eig.eigenvalues[bq]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });

    let lam_raw: Vec<f64> = order[..n].iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let to_complex_col = |idx: usize| -> nalgebra::DVector<C64> {
        let w = eig.eigenvectors.column(idx);
        nalgebra::DVector::from_fn(n, |i, _| C64::new(w[i], w[n + i]))
    };

    // Columns for clearly nonzero singular values are orthonormal already;
    // near-zero columns are rebuilt by completion to keep K unitary.
    let zero_cut = TAKAGI_TOL * scale;
    let mut cols: Vec<nalgebra::DVector<C64>> = Vec::with_capacity(n);
    let mut lam = Vec::with_capacity(n);
    for (rank, &idx) in order[..n].iter().enumerate() {
        if lam_raw[rank] > zero_cut {
            cols.push(to_complex_col(idx));
            lam.push(lam_raw[rank]);
        }
    }
    // Orthonormalize within degenerate positive groups (no-op when already
    // orthonormal) and then complete the null space from the standard basis.
    gram_schmidt(&mut cols);
    let mut basis_idx = 0usize;
    while cols.len() < n {
        if basis_idx >= n {
            return Err(Error::NumericalHealth(
                "takagi: failed to complete a unitary basis".into(),
            ));
        }
        let mut v = nalgebra::DVector::from_fn(n, |i, _| {
            if i == basis_idx { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }
        });
        for c in &cols {
            let proj = c.dotc(&v);
            v -= c.clone() * proj;
        }
        let norm = v.norm();
        if norm > 0.5f64.sqrt() * 0.1 {
            v /= C64::new(norm, 0.0);
            cols.push(v);
            lam.push(0.0);
        }
        basis_idx += 1;
    }

    // Sign convention: largest-magnitude entry has phase in (−π/2, π/2].
    let mut k = CMat::zeros(n, n);
    for (c, col) in cols.iter().enumerate() {
        let mut imax = 0usize;
        let mut best = -1.0f64;
        for i in 0..n {
            let a = col[i].norm();
            if a > best * (1.0 + 1e-12) {
                best = a;
                imax = i;
            }
        }
        let lead = col[imax];
        let flip = lead.re < 0.0 || (lead.re == 0.0 && lead.im < 0.0);
        for i in 0..n {
            k[(i, c)] = if flip { -col[i] } else { col[i] };
        }
    }
    let lam = DVector::from_vec(lam);

    // Health checks: unitarity and reconstruction.
    let unit_res = (k.adjoint() * &k - CMat::identity(n, n)).camax();
    let lmat = CMat::from_diagonal(&lam.map(|x| C64::new(x, 0.0)));
    let recon_res = (&k * lmat * k.transpose() - &bs).camax();
    if unit_res > TAKAGI_TOL * 10.0 || recon_res > TAKAGI_TOL * scale {
        return Err(Error::NumericalHealth(format!(
            "takagi: residues too large (unitarity {unit_res:.3e}, reconstruction {recon_res:.3e})"
        )));
    }
    Ok((k, lam))
}

/// In-place modified Gram–Schmidt over complex vectors; drops vectors whose
/// residual norm falls below 0.1 (duplicates of earlier directions).
fn gram_schmidt(cols: &mut Vec<nalgebra::DVector<C64>>) {
    let mut out: Vec<nalgebra::DVector<C64>> = Vec::with_capacity(cols.len());
    for v in cols.iter() {
        let mut w = v.clone();
        for c in &out {
            let proj = c.dotc(&w);
            w -= c.clone() * proj;
        }
        let norm = w.norm();
        if norm > 0.1 {
            w /= C64::new(norm, 0.0);
            out.push(w);
        } else {
            out.push(v.clone()); // keep original; caller's checks will catch
        }
    }
    *cols = out;
}
