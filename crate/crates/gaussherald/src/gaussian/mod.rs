//! Gaussian states, circuits, and the detection decomposition.
//!
//! # Bases
//!
//! Two operator orderings are used.  The *complex basis* stacks creation
//! operators first,
//!
//! ```text
//! ξ⁽ᶜ⁾ = (â₁†, …, â_N†, â₁, …, â_N)ᵀ ,
//! ```
//!
//! with mean `Q = ⟨ξ⁽ᶜ⁾⟩` and covariance
//! `V_ij = ½⟨Δξ_i Δξ_j† + Δξ_j† Δξ_i⟩`, so the vacuum has `V = I/2` and a
//! physical state satisfies `V + Σ₃/2 ⪰ 0` with `Σ₃ = diag(I_N, −I_N)`.
//! The *real basis* `ξ⁽ʳ⁾ = (p₁, …, p_N, q₁, …, q_N)ᵀ` is reached through
//! the unitary
//!
//! ```text
//! Ω = (1/√2) [[iI, −iI], [I, I]] ,   ξ⁽ʳ⁾ = Ω ξ⁽ᶜ⁾ ,   V⁽ʳ⁾ = Ω V⁽ᶜ⁾ Ω† .
//! ```
//!
//! # Detection decomposition
//!
//! For photon counting it is convenient to trade `(V, Q)` for
//!
//! ```text
//! R̃ = X (2V − I)(2V + I)⁻¹ ,   ỹ = 2X (2V + I)⁻¹ Q ,
//! P₀ = 2^N exp(−½ Qᵀ ỹ) / √det(2V + I) ,
//! ```
//!
//! where `X` swaps the creation and annihilation halves.  `P₀` is the
//! vacuum-detection probability.  For a *pure* state `R̃ = B ⊕ B*` with a
//! single complex symmetric `N×N` matrix `B` (singular values < 1) that
//! fully encodes the state's Gaussian correlations.  Splitting the modes
//! into a heralded (kept) set `H` and a measured set `D` partitions `R̃`
//! into the blocks `R_hh, R_hd, R_dd` and `ỹ` into `y_h, y_d`; every
//! conditional quantity downstream is built from those blocks.
//!
//! # Example
//!
//! ```
//! use gaussherald::gaussian::{CircuitSpec, state_from_circuit, validate_state};
//! use gaussherald::{C64, CMat};
//!
//! // Two-mode squeezed vacuum from ±r squeezers and a 50:50 coupler.
//! let r = 0.5f64;
//! let h = (0.5f64).sqrt();
//! let u = CMat::from_row_slice(2, 2, &[
//!     C64::new(h, 0.0), C64::new(-h, 0.0),
//!     C64::new(h, 0.0), C64::new(h, 0.0),
//! ]);
//! let spec = CircuitSpec {
//!     n_modes: 2,
//!     squeezings: vec![C64::new(r, 0.0), C64::new(-r, 0.0)],
//!     displacements: vec![C64::new(0.0, 0.0); 2],
//!     unitary: u,
//! };
//! let state = state_from_circuit(&spec).unwrap();
//! let diag = validate_state(&state);
//! assert!(diag.physical);
//! assert!((diag.purity - 1.0).abs() < 1e-10);
//! ```

mod bdata;
mod mesh;
mod takagi;

pub use bdata::{b_data, BData};
pub(crate) use bdata::x_sector;
pub use mesh::{decompose_interferometer, recompose_interferometer, MeshElement, MeshPlan};
pub use takagi::takagi;

use crate::error::{Error, Result};
use crate::{C64, CMat, CVec, IM, ONE, ZERO};
use nalgebra::{DMatrix, DVector};

/// Absolute tolerance for Hermiticity / structure checks on construction.
pub const STRUCTURE_TOL: f64 = 1e-10;

/// Eigenvalue slack allowed below zero in the uncertainty check.
pub const PHYSICALITY_TOL: f64 = 1e-9;

/// Purity slack used to decide whether a state is pure.
pub const PURITY_TOL: f64 = 1e-8;

/// An N-mode Gaussian state in the complex basis.
///
/// Construction validates dimensions, Hermiticity of the covariance (to
/// [`STRUCTURE_TOL`], after which it is exactly symmetrized), and the
/// conjugate pairing between the creation and annihilation halves of both
/// the mean and the covariance.  The uncertainty relation is *not* enforced
/// here; see [`validate_state`].
#[derive(Debug, Clone)]
pub struct GaussianState {
    n_modes: usize,
    mean_c: CVec,
    cov_c: CMat,
}

impl GaussianState {
    /// Builds a state from a complex-basis mean (length 2N, creation half
    /// first) and covariance (2N×2N).
    pub fn new(n_modes: usize, mean_c: CVec, cov_c: CMat) -> Result<Self> {
        let d = 2 * n_modes;
        if mean_c.len() != d || cov_c.nrows() != d || cov_c.ncols() != d {
            return Err(Error::Validation(format!(
                "state dimension mismatch: n_modes={n_modes}, mean len {}, cov {}×{}",
                mean_c.len(),
                cov_c.nrows(),
                cov_c.ncols()
            )));
        }
        let herm_residue = (&cov_c - cov_c.adjoint()).camax();
        if herm_residue > STRUCTURE_TOL {
            return Err(Error::Validation(format!(
                "covariance is not Hermitian: max residue {herm_residue:.3e}"
            )));
        }
        let mut cov = (&cov_c + cov_c.adjoint()).scale(0.5);
        // Conjugate-block structure: V = [[W, Z], [Z̄, W̄]] with Z symmetric,
        // mean = (m̄*, m̄).  Required for ξ = (â†, â) to describe one state.
        let n = n_modes;
        let mut structure_residue = 0.0f64;
        for i in 0..n {
            structure_residue =
                structure_residue.max((mean_c[i] - mean_c[n + i].conj()).norm());
            for j in 0..n {
                structure_residue = structure_residue
                    .max((cov[(i, j)] - cov[(n + i, n + j)].conj()).norm())
                    .max((cov[(i, n + j)] - cov[(j, n + i)]).norm())
                    .max((cov[(n + i, j)] - cov[(i, n + j)].conj()).norm());
            }
        }
        if structure_residue > STRUCTURE_TOL {
            return Err(Error::Validation(format!(
                "covariance/mean lack creation–annihilation conjugate structure: \
                 max residue {structure_residue:.3e}"
            )));
        }
        // Exact-ify the structure so downstream reality guarantees hold:
        // average each W̄-block entry with the conjugate of its W-block
        // partner, then mirror both ways.
        let mut mean = mean_c;
        for i in 0..n {
            let m = mean[n + i];
            mean[i] = m.conj();
            for j in 0..n {
                let w = 0.5 * (cov[(n + i, n + j)] + cov[(i, j)].conj());
                cov[(n + i, n + j)] = w;
                cov[(i, j)] = w.conj();
                let z = 0.5 * (cov[(i, n + j)] + cov[(j, n + i)]);
                cov[(i, n + j)] = z;
                cov[(j, n + i)] = z;
                cov[(n + i, j)] = z.conj();
                cov[(n + j, i)] = z.conj();
            }
        }
        Ok(GaussianState { n_modes, mean_c: mean, cov_c: cov })
    }

    /// The N-mode vacuum.
    pub fn vacuum(n_modes: usize) -> Self {
        GaussianState {
            n_modes,
            mean_c: CVec::zeros(2 * n_modes),
            cov_c: CMat::identity(2 * n_modes, 2 * n_modes).scale(0.5),
        }
    }

    /// Number of modes N.
    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    /// Complex-basis mean `(⟨â₁†⟩, …, ⟨â_N†⟩, ⟨â₁⟩, …, ⟨â_N⟩)`.
    pub fn mean_c(&self) -> &CVec {
        &self.mean_c
    }

    /// Complex-basis covariance.
    pub fn cov_c(&self) -> &CMat {
        &self.cov_c
    }

    /// `det(2V)`; equals 1 exactly for pure states.
    pub fn det_2v(&self) -> f64 {
        let det = self.cov_c.scale(2.0).lu().determinant();
        det.re
    }

    /// Purity `tr ρ² = 1/√det(2V)`.
    pub fn purity(&self) -> f64 {
        1.0 / self.det_2v().max(f64::MIN_POSITIVE).sqrt()
    }

    /// Whether the state is pure to [`PURITY_TOL`].
    pub fn is_pure(&self) -> bool {
        (self.det_2v() - 1.0).abs() < PURITY_TOL
    }

    /// Applies a Gaussian unitary to a subset of modes (state evolution).
    ///
    /// The returned state has `V → S V S†`, `Q → S Q + d` with `S` the
    /// complex-basis symplectic of `gate` embedded on `modes` and `d` its
    /// displacement.  Modes are given by index; the i-th mode of the gate
    /// acts on `modes[i]`.
    pub fn apply_unitary(&self, gate: &GaussianUnitary, modes: &[usize]) -> Result<Self> {
        let n = self.n_modes;
        if modes.len() != gate.n_modes() {
            return Err(Error::Validation(format!(
                "gate acts on {} modes but {} indices were given",
                gate.n_modes(),
                modes.len()
            )));
        }
        if modes.iter().any(|&m| m >= n) {
            return Err(Error::Validation("mode index out of range".into()));
        }
        let s_small = gate.symplectic_c();
        let d_small = gate.displacement_c();
        let m = modes.len();
        let mut s = CMat::identity(2 * n, 2 * n);
        let mut d = CVec::zeros(2 * n);
        // Scatter the 2M×2M block into the (conj, amp) slots of `modes`.
        let slot = |half: usize, i: usize| half * n + modes[i];
        let small_slot = |half: usize, i: usize| half * m + i;
        for hi in 0..2 {
            for i in 0..m {
                d[slot(hi, i)] = d_small[small_slot(hi, i)];
                for hj in 0..2 {
                    for j in 0..m {
                        s[(slot(hi, i), slot(hj, j))] =
                            s_small[(small_slot(hi, i), small_slot(hj, j))];
                    }
                }
            }
        }
        let cov = &s * &self.cov_c * s.adjoint();
        let mean = &s * &self.mean_c + d;
        GaussianState::new(n, mean, cov)
    }
}

/// Result of [`validate_state`].
#[derive(Debug, Clone, Copy)]
pub struct StateDiagnostics {
    /// Whether the uncertainty relation holds to [`PHYSICALITY_TOL`].
    pub physical: bool,
    /// Smallest eigenvalue of `V + Σ₃/2` (≥ 0 up to tolerance when physical).
    pub min_eigenvalue: f64,
    /// Purity `1/√det(2V)`.
    pub purity: f64,
}

/// Checks the uncertainty relation `V + Σ₃/2 ⪰ 0` and reports purity.
pub fn validate_state(state: &GaussianState) -> StateDiagnostics {
    let n = state.n_modes();
    let mut m = state.cov_c().clone();
    for i in 0..n {
        m[(i, i)] += 0.5 * ONE;
        m[(n + i, n + i)] -= 0.5 * ONE;
    }
    let eig = m.symmetric_eigenvalues();
    let min_eigenvalue = eig.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    StateDiagnostics {
        physical: min_eigenvalue >= -PHYSICALITY_TOL,
        min_eigenvalue,
        purity: state.purity(),
    }
}

/// The basis-change unitary `Ω` with `ξ⁽ʳ⁾ = Ω ξ⁽ᶜ⁾`.
pub fn omega(n: usize) -> CMat {
    let mut o = CMat::zeros(2 * n, 2 * n);
    let s = ONE / C64::new(2.0f64.sqrt(), 0.0);
    for i in 0..n {
        o[(i, i)] = IM * s; // p from â†
        o[(i, n + i)] = -IM * s; // p from â
        o[(n + i, i)] = s; // q from â†
        o[(n + i, n + i)] = s; // q from â
    }
    o
}

/// The half-swap `X = [[0, I], [I, 0]]` on `2n` components.
pub fn x_matrix(n: usize) -> CMat {
    let mut x = CMat::zeros(2 * n, 2 * n);
    for i in 0..n {
        x[(i, n + i)] = ONE;
        x[(n + i, i)] = ONE;
    }
    x
}

/// Converts a state to the real `(p, q)` basis.
///
/// Returns `(cov_r, mean_r)`.  The imaginary parts, which vanish exactly
/// for a structurally valid state, are checked against `1e-12` and
/// discarded.
pub fn to_real(state: &GaussianState) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let o = omega(state.n_modes());
    let cov = &o * state.cov_c() * o.adjoint();
    let mean = &o * state.mean_c();
    let imag = cov.iter().map(|c| c.im.abs()).fold(0.0f64, f64::max).max(
        mean.iter().map(|c| c.im.abs()).fold(0.0f64, f64::max),
    );
    if imag > 1e-12 {
        return Err(Error::NumericalHealth(format!(
            "real-basis conversion left imaginary residue {imag:.3e}"
        )));
    }
    Ok((cov.map(|c| c.re), mean.map(|c| c.re)))
}

/// Converts real-basis `(cov_r, mean_r)` back to a complex-basis state.
pub fn to_complex(cov_r: &DMatrix<f64>, mean_r: &DVector<f64>) -> Result<GaussianState> {
    if cov_r.nrows() % 2 != 0 || cov_r.nrows() != cov_r.ncols() || mean_r.len() != cov_r.nrows()
    {
        return Err(Error::Validation("real-basis dimensions invalid".into()));
    }
    let n = cov_r.nrows() / 2;
    let o = omega(n);
    let covc = cov_r.map(|x| C64::new(x, 0.0));
    let meanc = mean_r.map(|x| C64::new(x, 0.0));
    let cov = o.adjoint() * covc * &o;
    let mean = o.adjoint() * meanc;
    GaussianState::new(n, mean, cov)
}

/// Source description of a Gaussian circuit: per-mode squeezed vacua,
/// per-mode displacements, then an N-mode interferometer.
///
/// The prepared state is `|ψ⟩ = Û ∏ⱼ D̂(αⱼ) ∏ⱼ Ŝ(ζⱼ) |0⟩` with
/// `Ŝ(ζ) = exp{(ζ↠² − ζ* â²)/2}` and the interferometer acting as
/// `âⱼ† → Σ_k U_kj â_k†` on creation operators (mean transforms as
/// `ᾱ → U ᾱ`).
#[derive(Debug, Clone)]
pub struct CircuitSpec {
    /// Number of modes N.
    pub n_modes: usize,
    /// Squeezing parameters `ζⱼ = rⱼ e^{iφⱼ}` (length N).
    pub squeezings: Vec<C64>,
    /// Displacement amplitudes `αⱼ` applied between squeezing and the
    /// interferometer (length N).
    pub displacements: Vec<C64>,
    /// The N×N interferometer matrix, unitary to `1e-10`.
    pub unitary: CMat,
}

impl CircuitSpec {
    /// Validates dimensions and unitarity.
    pub fn validate(&self) -> Result<()> {
        let n = self.n_modes;
        if self.squeezings.len() != n
            || self.displacements.len() != n
            || self.unitary.nrows() != n
            || self.unitary.ncols() != n
        {
            return Err(Error::Validation(format!(
                "circuit dimension mismatch: n_modes={n}, squeezings {}, displacements {}, \
                 unitary {}×{}",
                self.squeezings.len(),
                self.displacements.len(),
                self.unitary.nrows(),
                self.unitary.ncols()
            )));
        }
        let res = (self.unitary.adjoint() * &self.unitary - CMat::identity(n, n)).camax();
        if res > STRUCTURE_TOL {
            return Err(Error::Validation(format!(
                "interferometer is not unitary: max residue {res:.3e}"
            )));
        }
        Ok(())
    }
}

/// Builds the Gaussian state prepared by a circuit.
pub fn state_from_circuit(spec: &CircuitSpec) -> Result<GaussianState> {
    spec.validate()?;
    let n = spec.n_modes;
    let mut cov = CMat::zeros(2 * n, 2 * n);
    for (j, z) in spec.squeezings.iter().enumerate() {
        let r = z.norm();
        let phase = if r > 0.0 { z / C64::new(r, 0.0) } else { ONE };
        let c2 = (2.0 * r).cosh();
        let s2 = (2.0 * r).sinh();
        cov[(j, j)] = C64::new(0.5 * c2, 0.0);
        cov[(n + j, n + j)] = C64::new(0.5 * c2, 0.0);
        // ⟨â†²⟩ = ½ e^{−iφ} sinh 2r for ζ = r e^{iφ}.
        cov[(j, n + j)] = phase.conj() * C64::new(0.5 * s2, 0.0);
        cov[(n + j, j)] = phase * C64::new(0.5 * s2, 0.0);
    }
    let mut mean = CVec::zeros(2 * n);
    for (j, a) in spec.displacements.iter().enumerate() {
        mean[j] = a.conj();
        mean[n + j] = *a;
    }
    // Interferometer: S = U* ⊕ U on (creation, annihilation) halves.
    let mut s = CMat::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            s[(i, j)] = spec.unitary[(i, j)].conj();
            s[(n + i, n + j)] = spec.unitary[(i, j)];
        }
    }
    let cov = &s * cov * s.adjoint();
    let mean = &s * mean;
    GaussianState::new(n, mean, cov)
}

/// A Gaussian unitary in factored form:
/// `Û = D̂(d) ∘ K̂ ∘ (⊗ₖ Ŝ(rₖ)) ∘ K̂†`
/// with `K` an M×M unitary, real nonnegative squeezes `rₖ`, and a final
/// displacement `d` (annihilation-operator amplitude convention).
///
/// Heralded-state gates always take this shape: the Takagi factorization
/// of the kept-kept block `B_hh = K Λ Kᵀ` provides `K` and
/// `rₖ = tanh⁻¹ λₖ`, and all phase information lives in `K`.
#[derive(Debug, Clone)]
pub struct GaussianUnitary {
    /// Mode-mixing unitary `K`.
    pub kappa: CMat,
    /// Squeezing magnitudes `rₖ ≥ 0`, one per mode.
    pub squeezes: Vec<f64>,
    /// Displacement amplitudes, applied after the squeezing sandwich.
    pub displacement: Vec<C64>,
}

impl GaussianUnitary {
    /// The identity gate on `m` modes.
    pub fn identity(m: usize) -> Self {
        GaussianUnitary {
            kappa: CMat::identity(m, m),
            squeezes: vec![0.0; m],
            displacement: vec![ZERO; m],
        }
    }

    /// Number of modes the gate acts on.
    pub fn n_modes(&self) -> usize {
        self.kappa.nrows()
    }

    /// Whether the gate is the identity to absolute tolerance `tol`.
    pub fn is_identity(&self, tol: f64) -> bool {
        self.squeezes.iter().all(|r| r.abs() < tol)
            && self.displacement.iter().all(|d| d.norm() < tol)
    }

    /// Complex-basis symplectic `S = (K* ⊕ K) · S_sq · (K* ⊕ K)†` of the
    /// unitary part (displacement excluded).
    pub fn symplectic_c(&self) -> CMat {
        let m = self.n_modes();
        let mut ssq = CMat::zeros(2 * m, 2 * m);
        for (k, r) in self.squeezes.iter().enumerate() {
            ssq[(k, k)] = C64::new(r.cosh(), 0.0);
            ssq[(m + k, m + k)] = C64::new(r.cosh(), 0.0);
            ssq[(k, m + k)] = C64::new(r.sinh(), 0.0);
            ssq[(m + k, k)] = C64::new(r.sinh(), 0.0);
        }
        let mut kk = CMat::zeros(2 * m, 2 * m);
        for i in 0..m {
            for j in 0..m {
                kk[(i, j)] = self.kappa[(i, j)].conj();
                kk[(m + i, m + j)] = self.kappa[(i, j)];
            }
        }
        &kk * ssq * kk.adjoint()
    }

    /// Complex-basis displacement vector `(d̄*, d̄)`.
    pub fn displacement_c(&self) -> CVec {
        let m = self.n_modes();
        let mut d = CVec::zeros(2 * m);
        for (k, a) in self.displacement.iter().enumerate() {
            d[k] = a.conj();
            d[m + k] = *a;
        }
        d
    }
}

/// Samples a Haar-random N×N unitary (QR of a complex Ginibre matrix with
/// the R-diagonal phase fix).  Useful for randomized circuit ensembles in
/// validation suites.
pub fn haar_unitary<R: rand::Rng>(n: usize, rng: &mut R) -> CMat {
    let g = CMat::from_fn(n, n, |_, _| {
        let u1: f64 = rng.gen_range(1e-12..1.0f64);
        let u2: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let r = (-2.0 * u1.ln()).sqrt();
        C64::new(r * u2.cos(), r * u2.sin())
    });
    let qr = g.qr();
    let mut q = qr.q();
    let rm = qr.r();
    for j in 0..n {
        let d = rm[(j, j)];
        let ph = if d.norm() > 0.0 { d / C64::new(d.norm(), 0.0) } else { ONE };
        for i in 0..n {
            q[(i, j)] *= ph;
        }
    }
    q
}

/// Builds the pure Gaussian state encoded by a correlation matrix `B`
/// (complex symmetric, singular values < 1) and doubled linear term `ỹ`
/// (length 2N, conjugate half first).
///
/// Inverts the detection decomposition: `W = X·(B ⊕ B*)`,
/// `V = ½(I − W)⁻¹(I + W)`, `Q = ½(2V + I)·X·ỹ`.
pub fn state_from_pure_parts(b: &CMat, y: &CVec) -> Result<GaussianState> {
    let n = b.nrows();
    if b.ncols() != n || y.len() != 2 * n {
        return Err(Error::Validation(format!(
            "pure-part dimensions invalid: B is {}×{}, ỹ has {}",
            b.nrows(),
            b.ncols(),
            y.len()
        )));
    }
    let scale = b.camax().max(1.0);
    if (b - b.transpose()).camax() > STRUCTURE_TOL * scale {
        return Err(Error::Validation("B must be symmetric".into()));
    }
    for i in 0..n {
        if (y[i] - y[n + i].conj()).norm() > STRUCTURE_TOL {
            return Err(Error::Validation(
                "ỹ halves must be conjugate pairs (conjugate half first)".into(),
            ));
        }
    }
    let smax = b
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .fold(0.0f64, |a, &s| a.max(s));
    if smax >= 1.0 - 1e-12 {
        return Err(Error::Validation(format!(
            "B has singular value {smax:.12} ≥ 1; not a physical pure state"
        )));
    }
    let mut rt = CMat::zeros(2 * n, 2 * n);
    rt.view_mut((0, 0), (n, n)).copy_from(b);
    rt.view_mut((n, n), (n, n)).copy_from(&b.map(|e| e.conj()));
    let x = x_matrix(n);
    let w = &x * rt;
    let eye = CMat::identity(2 * n, 2 * n);
    let v = (&eye - &w)
        .lu()
        .solve(&(&eye + &w))
        .ok_or_else(|| Error::NumericalHealth("I − XR̃ is singular".into()))?
        .scale(0.5);
    let q = (v.scale(2.0) + eye) * (x * y).scale(0.5);
    GaussianState::new(n, q, v)
}

/// Recovers a preparation circuit for a pure Gaussian state.
///
/// The Takagi factorization `B = K Λ Kᵀ` of the state's correlation
/// matrix yields real input squeezings `rⱼ = tanh⁻¹ λⱼ` and the
/// interferometer `K`; input displacements are `α = K† ᾱ` with `ᾱ` the
/// state's mean amplitudes.  `state_from_circuit` of the result
/// reproduces the state.
pub fn circuit_for_state(state: &GaussianState) -> Result<CircuitSpec> {
    let bd = b_data(state, &[])?;
    let b = bd.b.clone().ok_or_else(|| {
        Error::Unsupported("circuit recovery requires a pure state".into())
    })?;
    let (k, lambda) = takagi(&b)?;
    let n = state.n_modes();
    if lambda.iter().any(|&l| l >= 1.0 - 1e-12) {
        return Err(Error::Validation(
            "correlation matrix has a unit singular value; squeezing diverges".into(),
        ));
    }
    let squeezings = lambda.iter().map(|&l| C64::new(l.atanh(), 0.0)).collect();
    let amp = CVec::from_fn(n, |i, _| state.mean_c()[n + i]);
    let alpha = k.adjoint() * amp;
    Ok(CircuitSpec {
        n_modes: n,
        squeezings,
        displacements: alpha.iter().copied().collect(),
        unitary: k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn squeezed_state(r: f64, phi: f64) -> GaussianState {
        let spec = CircuitSpec {
            n_modes: 1,
            squeezings: vec![C64::from_polar(r, phi)],
            displacements: vec![ZERO],
            unitary: CMat::identity(1, 1),
        };
        state_from_circuit(&spec).unwrap()
    }

    #[test]
    fn vacuum_is_physical_and_pure() {
        let v = GaussianState::vacuum(3);
        let d = validate_state(&v);
        assert!(d.physical);
        assert_abs_diff_eq!(d.purity, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.min_eigenvalue, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn squeezed_vacuum_covariance_matches_closed_form() {
        let (r, phi) = (0.7, 1.1);
        let st = squeezed_state(r, phi);
        let v = st.cov_c();
        assert_abs_diff_eq!(v[(0, 0)].re, 0.5 * (2.0 * r).cosh(), epsilon = 1e-12);
        let z = C64::from_polar(0.5 * (2.0 * r).sinh(), -phi);
        assert!((v[(0, 1)] - z).norm() < 1e-12);
        assert!(st.is_pure());
        assert!(validate_state(&st).physical);
    }

    #[test]
    fn scaled_vacuum_violates_uncertainty() {
        let n = 1;
        let cov = CMat::identity(2 * n, 2 * n).scale(0.25);
        let st = GaussianState::new(n, CVec::zeros(2 * n), cov).unwrap();
        let d = validate_state(&st);
        assert!(!d.physical);
        assert!(d.min_eigenvalue < -0.2);
    }

    #[test]
    fn real_complex_round_trip() {
        let st = squeezed_state(0.4, 0.3);
        let (cr, mr) = to_real(&st).unwrap();
        let back = to_complex(&cr, &mr).unwrap();
        assert!((back.cov_c() - st.cov_c()).camax() < 1e-12);
        assert!((back.mean_c() - st.mean_c()).map(|c| c.norm()).max() < 1e-12);
    }

    #[test]
    fn displacement_mean_transforms_through_unitary() {
        let alpha = C64::new(0.3, -0.2);
        let h = (0.5f64).sqrt();
        let u = CMat::from_row_slice(
            2,
            2,
            &[C64::new(h, 0.0), C64::new(-h, 0.0), C64::new(h, 0.0), C64::new(h, 0.0)],
        );
        let spec = CircuitSpec {
            n_modes: 2,
            squeezings: vec![ZERO, ZERO],
            displacements: vec![alpha, ZERO],
            unitary: u.clone(),
        };
        let st = state_from_circuit(&spec).unwrap();
        // mean amplitude = U α
        assert!((st.mean_c()[2] - u[(0, 0)] * alpha).norm() < 1e-12);
        assert!((st.mean_c()[3] - u[(1, 0)] * alpha).norm() < 1e-12);
        assert!((st.mean_c()[0] - (u[(0, 0)] * alpha).conj()).norm() < 1e-12);
    }

    #[test]
    fn gate_symplectic_preserves_uncertainty_and_purity() {
        let gate = GaussianUnitary {
            kappa: CMat::from_row_slice(
                1,
                1,
                &[C64::from_polar(1.0, 0.37)],
            ),
            squeezes: vec![0.6],
            displacement: vec![C64::new(0.1, 0.2)],
        };
        let st = GaussianState::vacuum(2).apply_unitary(&gate, &[1]).unwrap();
        assert!(validate_state(&st).physical);
        assert!(st.is_pure());
        // Phases in K produce an effective squeeze phase 2θ.
        let v = st.cov_c();
        let z_expect = C64::from_polar(0.5 * (1.2f64).sinh(), -2.0 * 0.37);
        assert!((v[(1, 3)] - z_expect).norm() < 1e-12);
    }

    #[test]
    fn non_unitary_interferometer_rejected() {
        let spec = CircuitSpec {
            n_modes: 1,
            squeezings: vec![ZERO],
            displacements: vec![ZERO],
            unitary: CMat::identity(1, 1).scale(1.1),
        };
        assert!(matches!(state_from_circuit(&spec), Err(Error::Validation(_))));
    }

    #[test]
    fn pure_parts_round_trip_through_state() {
        use rand_chacha::{rand_core::SeedableRng, ChaCha8Rng};
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for n in [1usize, 2, 3] {
            let spec = CircuitSpec {
                n_modes: n,
                squeezings: (0..n)
                    .map(|_| {
                        C64::from_polar(
                            rand::Rng::gen_range(&mut rng, 0.1..0.6),
                            rand::Rng::gen_range(&mut rng, 0.0..6.0),
                        )
                    })
                    .collect(),
                displacements: (0..n)
                    .map(|_| {
                        C64::new(
                            rand::Rng::gen_range(&mut rng, -0.4..0.4),
                            rand::Rng::gen_range(&mut rng, -0.4..0.4),
                        )
                    })
                    .collect(),
                unitary: haar_unitary(n, &mut rng),
            };
            let st = state_from_circuit(&spec).unwrap();
            let bd = b_data(&st, &[]).unwrap();
            let back = state_from_pure_parts(bd.b.as_ref().unwrap(), &bd.y).unwrap();
            assert!((back.cov_c() - st.cov_c()).camax() < 1e-10);
            assert!(
                (back.mean_c() - st.mean_c())
                    .iter()
                    .map(|c| c.norm())
                    .fold(0.0f64, f64::max)
                    < 1e-10
            );
        }
    }

    #[test]
    fn recovered_circuit_reproduces_state() {
        use rand_chacha::{rand_core::SeedableRng, ChaCha8Rng};
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let n = 3;
        let spec = CircuitSpec {
            n_modes: n,
            squeezings: vec![
                C64::from_polar(0.5, 1.2),
                C64::from_polar(0.2, -0.4),
                C64::from_polar(0.35, 2.8),
            ],
            displacements: vec![
                C64::new(0.3, -0.1),
                C64::new(-0.2, 0.25),
                C64::new(0.05, 0.4),
            ],
            unitary: haar_unitary(n, &mut rng),
        };
        let st = state_from_circuit(&spec).unwrap();
        let rec = circuit_for_state(&st).unwrap();
        rec.validate().unwrap();
        // Recovered squeezings are real and nonnegative.
        for z in &rec.squeezings {
            assert!(z.im.abs() < 1e-14 && z.re >= 0.0);
        }
        let again = state_from_circuit(&rec).unwrap();
        assert!((again.cov_c() - st.cov_c()).camax() < 1e-9);
        assert!(
            (again.mean_c() - st.mean_c())
                .iter()
                .map(|c| c.norm())
                .fold(0.0f64, f64::max)
                < 1e-9
        );
    }

    #[test]
    fn vacuum_recovers_trivial_circuit() {
        let rec = circuit_for_state(&GaussianState::vacuum(2)).unwrap();
        assert_eq!(rec.n_modes, 2);
        for z in &rec.squeezings {
            assert!(z.norm() < 1e-12);
        }
        for a in &rec.displacements {
            assert!(a.norm() < 1e-12);
        }
    }
}
