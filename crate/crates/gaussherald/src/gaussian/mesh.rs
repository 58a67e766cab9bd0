//! Rectangular mesh decomposition of interferometers.
//!
//! Any N×N unitary `U` factors into a planar mesh of two-mode couplers on
//! adjacent mode pairs plus a final layer of single-mode phases:
//!
//! ```text
//! U = diag(e^{iψ₁}, …, e^{iψ_N}) · T_L ⋯ T_2 T_1 ,
//! ```
//!
//! where element `T` on modes `(p, p+1)` acts as
//!
//! ```text
//! T(θ, φ) = [[e^{iφ} cos θ, −sin θ],
//!            [e^{iφ} sin θ,  cos θ]] ,     t = cos²θ  (transmissivity),
//! ```
//!
//! and `T_1` is applied first.  The decomposition nulls matrix entries
//! along alternating anti-diagonals, using right-multiplications by `T⁻¹`
//! for even anti-diagonals and left-multiplications by `T` for odd ones,
//! then commutes the residual diagonal to the front.  Element count is
//! exactly `N(N−1)/2`.

use crate::error::{Error, Result};
use crate::{C64, CMat};

/// A two-mode coupler on adjacent modes `(p, p+1)`.
#[derive(Debug, Clone, Copy)]
pub struct MeshElement {
    /// Lower mode index `p`; the element couples `p` and `p+1`.
    pub mode: usize,
    /// Mixing angle `θ ∈ [0, π/2]`.
    pub theta: f64,
    /// Phase `φ ∈ (−π, π]` on the upper-left column.
    pub phi: f64,
}

impl MeshElement {
    /// Transmissivity `t = cos²θ`.
    pub fn transmissivity(&self) -> f64 {
        self.theta.cos().powi(2)
    }

    /// The element embedded as an N×N matrix.
    pub fn matrix(&self, n: usize) -> CMat {
        let mut m = CMat::identity(n, n);
        let (p, q) = (self.mode, self.mode + 1);
        let c = C64::new(self.theta.cos(), 0.0);
        let s = C64::new(self.theta.sin(), 0.0);
        let e = C64::from_polar(1.0, self.phi);
        m[(p, p)] = e * c;
        m[(p, q)] = -s;
        m[(q, p)] = e * s;
        m[(q, q)] = c;
        m
    }
}

/// A mesh decomposition: elements in application order, then final phases.
#[derive(Debug, Clone)]
pub struct MeshPlan {
    /// Number of modes.
    pub n_modes: usize,
    /// Couplers in the order they are applied to the input.
    pub elements: Vec<MeshElement>,
    /// Final per-mode phases `ψ` (`â_k → e^{iψ_k} â_k` after the mesh).
    pub phases: Vec<f64>,
}

/// Rebuilds the unitary described by a mesh plan.
pub fn recompose_interferometer(plan: &MeshPlan) -> CMat {
    let n = plan.n_modes;
    let mut u = CMat::identity(n, n);
    for e in &plan.elements {
        u = e.matrix(n) * u;
    }
    let d = CMat::from_diagonal(&nalgebra::DVector::from_fn(n, |i, _| {
        C64::from_polar(1.0, plan.phases[i])
    }));
    d * u
}

/// Decomposes a unitary into a rectangular coupler mesh plus final phases.
///
/// The recomposed unitary is checked against the input to `1e-8`
/// (typically it agrees to machine precision); a larger residue raises a
/// numerical-health error.
pub fn decompose_interferometer(u: &CMat) -> Result<MeshPlan> {
    let n = u.nrows();
    if u.ncols() != n || n == 0 {
        return Err(Error::Validation("mesh: matrix must be square and nonempty".into()));
    }
    let unit_res = (u.adjoint() * u - CMat::identity(n, n)).camax();
    if unit_res > 1e-10 {
        return Err(Error::Validation(format!(
            "mesh: matrix is not unitary (residue {unit_res:.3e})"
        )));
    }

    let mut w = u.clone();
    // Elements recorded during elimination.
    let mut right_ops: Vec<MeshElement> = Vec::new(); // applied as T⁻¹ on the right
    let mut left_ops: Vec<MeshElement> = Vec::new(); // applied as T on the left

    for diag in 0..n.saturating_sub(1) {
        if diag % 2 == 0 {
            // Null w[n−1−j, diag−j] via right-multiplication by T⁻¹ on
            // columns (p, p+1), p = diag − j.
            for j in 0..=diag {
                let (row, p) = (n - 1 - j, diag - j);
                let q = p + 1;
                let (a, b) = (w[(row, p)], w[(row, q)]);
                // (w·T⁻¹)[:,p] = e^{−iφ} c w[:,p] − s w[:,q] ⇒ choose
                // φ = arg a − arg b, tan θ = |b| ⁄ |a| nulls entry (row,p).
                let (theta, phi) = if a.norm() < 1e-300 {
                    (0.0, 0.0)
                } else {
                    (a.norm().atan2(b.norm()), (a * b.conj()).arg())
                };
                let el = MeshElement { mode: p, theta, phi };
                let t = el.matrix(n);
                // right-multiply by T⁻¹ = T†.
                w = w * t.adjoint();
                right_ops.push(el);
            }
        } else {
            // Null w[n−1−diag+j, j] via left-multiplication by T on rows
            // (p, p+1), p = n − 2 − diag + j.
            for j in 0..=diag {
                let (row, col) = (n - 1 - diag + j, j);
                let p = row - 1;
                let (a, b) = (w[(p, col)], w[(row, col)]);
                // (T·w)[p+1,:] = e^{iφ} s w[p,:] + c w[p+1,:] ⇒ choose
                // φ = arg(−b) − arg(a), tan θ = |b| ⁄ |a| nulls (row, col).
                let (theta, phi) = if b.norm() < 1e-300 {
                    (0.0, 0.0)
                } else {
                    (b.norm().atan2(a.norm()), (-b * a.conj()).arg())
                };
                let el = MeshElement { mode: p, theta, phi };
                w = el.matrix(n) * w;
                left_ops.push(el);
            }
        }
    }

    // w is now diagonal: L·U·R⁻¹ = D with L = ∏ left_ops (last leftmost)
    // and R⁻¹ = ∏ right_opsᵀ… i.e. U = L⁻¹ · D · (right_ops reversed as T).
    let mut phases: Vec<C64> = (0..n).map(|i| w[(i, i)]).collect();

    // Commute D through each left inverse:  T⁻¹(θ,φ)·D = D'·T(θ,φ') with
    // φ' = arg(−d_p) − arg(d_q),  d'_p = −e^{−iφ} d_q,  d'_q = d_q.
    let mut commuted: Vec<MeshElement> = Vec::with_capacity(left_ops.len());
    for el in left_ops.iter().rev() {
        let (p, q) = (el.mode, el.mode + 1);
        let dp = phases[p];
        let dq = phases[q];
        let phi_new = (-dp * dq.conj()).arg();
        phases[p] = -C64::from_polar(1.0, -el.phi) * dq;
        // phases[q] unchanged.
        let _ = dq;
        commuted.push(MeshElement { mode: el.mode, theta: el.theta, phi: phi_new });
    }

    // Application order: right_ops first (they sit rightmost in the product),
    // then the commuted left elements innermost-first.
    let mut elements = right_ops;
    elements.extend(commuted.into_iter());
    let plan = MeshPlan {
        n_modes: n,
        elements,
        phases: phases.iter().map(|d| d.arg()).collect(),
    };

    let res = (recompose_interferometer(&plan) - u).camax();
    if res > 1e-8 {
        return Err(Error::NumericalHealth(format!(
            "mesh: recomposition residue {res:.3e} exceeds 1e-8"
        )));
    }
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::haar_unitary;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn recomposes_identity() {
        let u = CMat::identity(4, 4);
        let plan = decompose_interferometer(&u).unwrap();
        assert!((recompose_interferometer(&plan) - u).camax() < 1e-12);
    }

    #[test]
    fn recomposes_random_unitaries() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for n in 1..=6 {
            for _ in 0..25 {
                let u = haar_unitary(n, &mut rng);
                let plan = decompose_interferometer(&u).unwrap();
                let res = (recompose_interferometer(&plan) - &u).camax();
                assert!(res < 1e-10, "n={n} residue {res:.3e}");
                assert_eq!(plan.elements.len(), n * (n - 1) / 2);
                for e in &plan.elements {
                    assert!(e.theta >= 0.0 && e.theta <= std::f64::consts::FRAC_PI_2 + 1e-12);
                }
            }
        }
    }

    #[test]
    fn element_matrix_is_unitary() {
        let e = MeshElement { mode: 1, theta: 0.7, phi: -2.1 };
        let m = e.matrix(4);
        assert!((m.adjoint() * &m - CMat::identity(4, 4)).camax() < 1e-14);
        assert!((e.transmissivity() - 0.7f64.cos().powi(2)).abs() < 1e-15);
    }
}
