//! The detection decomposition `(R̃, ỹ, P₀)` and its heralded/measured
//! partition.
//!
//! From a complex-basis state `(V, Q)` the decomposition is
//!
//! ```text
//! R̃ = X (2V − I)(2V + I)⁻¹ ,     ỹ = 2X (2V + I)⁻¹ Q ,
//! P₀ = 2^N exp(−½ Qᵀ ỹ) / √det(2V + I) ,
//! ```
//!
//! with `X` the creation/annihilation half-swap.  `P₀` is the probability
//! of detecting vacuum on *all* modes.  For a pure state
//! `R̃ = B ⊕ B*` with `B` complex symmetric (`σ_max(B) < 1`) and
//! `P₀ = √det(I − B*B) · exp(−½ Qᵀ ỹ)`; `B` and the displacement data
//! fully determine the state.
//!
//! Splitting modes into a heralded set `H` (kept, `M` modes) and a
//! measured set `D` (detected, `N−M` modes) reorders `R̃` into blocks
//!
//! ```text
//! R = [[R_hh, R_hd], [R_hdᵀ, R_dd]] ,   ỹ → (y_h, y_d) ,
//! ```
//!
//! where the heralded sector keeps the ordering `(β̄*_H, ᾱ_H)` (creation
//! half first) and likewise for the measured sector.  All conditional
//! quantities — heralding probabilities, heralded gates and coefficients,
//! Wigner functions — are functions of these blocks alone.

use super::GaussianState;
use crate::error::{Error, Result};
use crate::{C64, CMat, CVec, ONE};

/// Detection decomposition of a Gaussian state for a fixed heralded set.
#[derive(Debug, Clone)]
pub struct BData {
    /// Total number of modes N.
    pub n_modes: usize,
    /// Heralded (kept) mode indices, ascending.
    pub heralded: Vec<usize>,
    /// Measured (detected) mode indices, ascending.
    pub measured: Vec<usize>,
    /// Pure-state correlation matrix `B` (N×N complex symmetric); `None`
    /// when the state is mixed, in which case only `R̃`-blocks are valid.
    pub b: Option<CMat>,
    /// Full linear vector `ỹ` (length 2N, creation half first).
    pub y: CVec,
    /// Vacuum-detection probability `P₀` (real up to numerical residue).
    pub p0: C64,
    /// Heralded–heralded block of the reordered `R̃` (2M×2M).
    pub r_hh: CMat,
    /// Heralded–measured block (2M×2(N−M)).
    pub r_hd: CMat,
    /// Measured–measured block (2(N−M)×2(N−M)).
    pub r_dd: CMat,
    /// Heralded entries of `ỹ` (length 2M).
    pub y_h: CVec,
    /// Measured entries of `ỹ` (length 2(N−M)).
    pub y_d: CVec,
}

impl BData {
    /// Number of heralded (kept) modes M.
    pub fn n_heralded(&self) -> usize {
        self.heralded.len()
    }

    /// Number of measured (detected) modes N − M.
    pub fn n_measured(&self) -> usize {
        self.measured.len()
    }

    /// Measured–heralded block `R_dh = R_hdᵀ` (plain transpose; the blocks
    /// are complex symmetric as a whole, not Hermitian).
    pub fn r_dh(&self) -> CMat {
        self.r_hd.transpose()
    }

    /// The heralded-sector block of `B` (M×M), pure states only.
    pub fn b_hh(&self) -> Option<CMat> {
        let b = self.b.as_ref()?;
        Some(select(b, &self.heralded, &self.heralded))
    }

    /// The heralded–measured block of `B` (M×(N−M)), pure states only.
    pub fn b_hd(&self) -> Option<CMat> {
        let b = self.b.as_ref()?;
        Some(select(b, &self.heralded, &self.measured))
    }

    /// The measured-sector block of `B`, pure states only.
    pub fn b_dd(&self) -> Option<CMat> {
        let b = self.b.as_ref()?;
        Some(select(b, &self.measured, &self.measured))
    }

    /// Builds the decomposition directly from pure-state data `(B, ỹ)`.
    ///
    /// `B` must be complex symmetric with `σ_max < 1`; `ỹ` must pair
    /// conjugate halves.  This is the inverse of reading `b` off a pure
    /// state and is the entry point used by circuit optimizers, which
    /// search directly in `(B, ỹ)` space.
    pub fn from_pure_parts(
        b: CMat,
        y: CVec,
        heralded: &[usize],
    ) -> Result<BData> {
        let n = b.nrows();
        if b.ncols() != n || y.len() != 2 * n {
            return Err(Error::Validation("from_pure_parts: dimension mismatch".into()));
        }
        let scale = b.camax().max(1.0);
        if (&b - b.transpose()).camax() > 1e-10 * scale {
            return Err(Error::Validation("from_pure_parts: B must be symmetric".into()));
        }
        for i in 0..n {
            if (y[i] - y[n + i].conj()).norm() > 1e-10 {
                return Err(Error::Validation(
                    "from_pure_parts: ỹ halves must be conjugate".into(),
                ));
            }
        }
        let svd = b.clone().svd(false, false);
        let smax = svd.singular_values.iter().fold(0.0f64, |a, &s| a.max(s));
        if smax >= 1.0 {
            return Err(Error::Validation(format!(
                "from_pure_parts: σ_max(B) = {smax:.6} ≥ 1 is unphysical"
            )));
        }
        let (heralded, measured) = split_modes(n, heralded)?;

        // R̃ = B ⊕ B*.
        let mut r = CMat::zeros(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                r[(i, j)] = b[(i, j)];
                r[(n + i, n + j)] = b[(i, j)].conj();
            }
        }
        // Q = (I − X R̃)⁻¹ X ỹ, then P₀ = √det(I − B*B) exp(−½ Qᵀ ỹ).
        let x = super::x_matrix(n);
        let ixr = CMat::identity(2 * n, 2 * n) - &x * &r;
        let q = ixr
            .clone()
            .lu()
            .solve(&(&x * &y))
            .ok_or_else(|| Error::NumericalHealth("from_pure_parts: I − XR̃ singular".into()))?;
        let qty: C64 = (q.transpose() * &y)[(0, 0)];
        let det_ibb = (CMat::identity(n, n) - b.map(|c| c.conj()) * &b).lu().determinant();
        let p0 = det_ibb.sqrt() * (-0.5 * qty).exp();

        let (r_hh, r_hd, r_dd, y_h, y_d) = partition(&r, &y, n, &heralded, &measured);
        Ok(BData {
            n_modes: n,
            heralded,
            measured,
            b: Some(b),
            y,
            p0,
            r_hh,
            r_hd,
            r_dd,
            y_h,
            y_d,
        })
    }
}

/// Computes the detection decomposition of `state` for the given heralded
/// (kept) mode set; all other modes are treated as measured.
pub fn b_data(state: &GaussianState, heralded_modes: &[usize]) -> Result<BData> {
    let n = state.n_modes();
    let (heralded, measured) = split_modes(n, heralded_modes)?;
    let d = 2 * n;
    let v2 = state.cov_c().scale(2.0);
    let a = &v2 + CMat::identity(d, d);
    let lu = a.clone().lu();
    let det_a = lu.determinant();
    if det_a.re <= 0.0 || det_a.im.abs() > 1e-6 * det_a.re.abs().max(1.0) {
        return Err(Error::NumericalHealth(format!(
            "det(2V + I) = {det_a} is not positive real"
        )));
    }
    let a_inv = lu
        .try_inverse()
        .ok_or_else(|| Error::NumericalHealth("2V + I is singular".into()))?;
    let x = super::x_matrix(n);
    let w = (&v2 - CMat::identity(d, d)) * &a_inv;
    let r = &x * &w;
    let y = (&x * &a_inv * state.mean_c()).scale(2.0);
    let qty: C64 = (state.mean_c().transpose() * &y)[(0, 0)];
    if qty.im.abs() > 1e-9 * (1.0 + qty.re.abs()) {
        return Err(Error::NumericalHealth(format!(
            "Qᵀỹ has imaginary residue {:.3e}",
            qty.im
        )));
    }
    let p0 = C64::new(2.0f64.powi(n as i32), 0.0) * (-0.5 * qty).exp()
        / det_a.sqrt();

    // Pure states expose B on the diagonal blocks of R̃.
    let b = if state.is_pure() {
        let mut bmat = CMat::zeros(n, n);
        let mut residue = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let bij = r[(i, j)];
                bmat[(i, j)] = bij;
                residue = residue
                    .max((r[(n + i, n + j)] - bij.conj()).norm())
                    .max(r[(i, n + j)].norm())
                    .max(r[(n + i, j)].norm());
            }
        }
        let sym = (&bmat - bmat.transpose()).camax();
        if residue > 1e-8 || sym > 1e-8 {
            return Err(Error::NumericalHealth(format!(
                "state is pure (det 2V ≈ 1) but R̃ lacks B ⊕ B* structure \
                 (residue {residue:.3e}, symmetry {sym:.3e})"
            )));
        }
        // Exact-ify: symmetrize and mirror.
        let bmat = (&bmat + bmat.transpose()).scale(0.5);
        Some(bmat)
    } else {
        None
    };

    let (r_hh, r_hd, r_dd, y_h, y_d) = partition(&r, &y, n, &heralded, &measured);
    Ok(BData {
        n_modes: n,
        heralded,
        measured,
        b,
        y,
        p0,
        r_hh,
        r_hd,
        r_dd,
        y_h,
        y_d,
    })
}

/// Validates a heralded-mode list and returns `(heralded, measured)`
/// both sorted ascending.
pub(crate) fn split_modes(n: usize, heralded: &[usize]) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut h = heralded.to_vec();
    h.sort_unstable();
    h.dedup();
    if h.len() != heralded.len() {
        return Err(Error::Validation("heralded mode list has duplicates".into()));
    }
    if h.iter().any(|&m| m >= n) {
        return Err(Error::Validation(format!(
            "heralded mode index out of range (N = {n})"
        )));
    }
    let measured: Vec<usize> = (0..n).filter(|m| !h.contains(m)).collect();
    Ok((h, measured))
}

/// Extracts the partitioned blocks for sorted index sets.
fn partition(
    r: &CMat,
    y: &CVec,
    n: usize,
    heralded: &[usize],
    measured: &[usize],
) -> (CMat, CMat, CMat, CVec, CVec) {
    let hi = sector_indices(n, heralded);
    let di = sector_indices(n, measured);
    let pick = |rows: &[usize], cols: &[usize]| {
        CMat::from_fn(rows.len(), cols.len(), |i, j| r[(rows[i], cols[j])])
    };
    let pickv = |rows: &[usize]| CVec::from_fn(rows.len(), |i, _| y[rows[i]]);
    (
        pick(&hi, &hi),
        pick(&hi, &di),
        pick(&di, &di),
        pickv(&hi),
        pickv(&di),
    )
}

/// `(β̄* half indices) ++ (ᾱ half indices)` for a sorted mode set.
fn sector_indices(n: usize, modes: &[usize]) -> Vec<usize> {
    modes
        .iter()
        .map(|&m| m)
        .chain(modes.iter().map(|&m| n + m))
        .collect()
}

/// Selects a submatrix by mode lists (not sector lists).
fn select(m: &CMat, rows: &[usize], cols: &[usize]) -> CMat {
    CMat::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

/// The `X` matrix restricted to a sector of `m` modes.
pub(crate) fn x_sector(m: usize) -> CMat {
    let mut x = CMat::zeros(2 * m, 2 * m);
    for i in 0..m {
        x[(i, m + i)] = ONE;
        x[(m + i, i)] = ONE;
    }
    x
}
