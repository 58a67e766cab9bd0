//! Phase-space (Wigner) representation of heralded states on sampling
//! grids.
//!
//! The Wigner function is evaluated directly from the detection data of
//! the measured Gaussian state — no Fock expansion is involved — so it
//! works for mixed inputs and for photon counts well beyond the
//! coefficient cap.  With `F = I − X R_hh`, `G = I + X R_hh`,
//! `d = F^{−1} X y_h` and the phase-space offset `v = (ᾱ*, ᾱ) − d`, the
//! unnormalized Wigner function of the pattern `n̄` is
//!
//! `W(ᾱ) = (2^M P₀ / (π^M n̄!)) · det G^{−1/2} · e^{½ y_hᵀ F^{−1} X y_h}
//!          · e^{−v† G^{−1} F v} · D(A_w, z_w(v))[(n̄, n̄)]`
//!
//! where `A_w = R_dd − R_dh G^{−1} X R_hd` and
//! `z_w(v) = z_p + 2 R_dh G^{−1} v`, with `z_p` the same measured-sector
//! shift that appears in the probability formula.  `D` is the Gaussian
//! derivative of [`crate::deriv`]; it is expanded once into a polynomial
//! in `z` and re-evaluated per grid point.  The grid values are divided
//! by the analytic success probability, so a returned grid integrates to
//! one over `∏ d²αᵢ = ∏ dqᵢ dpᵢ / 2`.
//!
//! Conventions: `αᵢ = (qᵢ + i pᵢ)/√2`, and values follow the scaling
//! `W = 2^M W̄` where `W̄` is the textbook `(q, p)` Wigner function —
//! so the vacuum reads `(2/π) e^{−2|α|²}`.
//!
//! # Examples
//!
//! ```
//! use gaussherald::gaussian::GaussianState;
//! use gaussherald::herald::{wigner, DetectionPattern, GridSpec};
//!
//! // Seeing zero photons on one vacuum mode leaves the other in vacuum.
//! let state = GaussianState::vacuum(2);
//! let pattern = DetectionPattern::new(vec![1], vec![0]).unwrap();
//! let grid = GridSpec::centered(1, 5.0, 41);
//! let w = wigner(&state, &pattern, &[0], &grid).unwrap();
//! let center = w.value_at(&[20, 20]);
//! assert!((center - 2.0 / std::f64::consts::PI).abs() < 1e-12);
//! assert!((w.integral() - 1.0).abs() < 1e-3);
//! ```

use rayon::prelude::*;

use super::{probability_from_bdata, DetectionPattern, HeraldCore};
use crate::deriv::{gaussian_derivative_zpoly, DerivativeOrder};
use crate::error::{Error, Result};
use crate::gaussian::{b_data, omega, x_sector, GaussianState};
use crate::{ln_factorial, C64, CVec};

/// Hard cap on the number of stored grid values (~128 MB of `f64`).
const MAX_GRID_VALUES: usize = 1 << 24;

/// Tolerance for the imaginary residue of grid values.
const IMAG_TOL: f64 = 1e-10;

/// Sampling window for one heralded mode: squares `[center_q ± halfwidth]
/// × [center_p ± halfwidth]` with `resolution` points per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeAxis {
    /// Center of the position axis.
    pub center_q: f64,
    /// Center of the momentum axis.
    pub center_p: f64,
    /// Half-width of both axes.
    pub halfwidth: f64,
    /// Number of sample points per axis (≥ 2 for usable integrals).
    pub resolution: usize,
}

impl ModeAxis {
    /// Evenly spaced sample positions of the `q` axis.
    pub fn q_points(&self) -> Vec<f64> {
        linspace(self.center_q, self.halfwidth, self.resolution)
    }

    /// Evenly spaced sample positions of the `p` axis.
    pub fn p_points(&self) -> Vec<f64> {
        linspace(self.center_p, self.halfwidth, self.resolution)
    }

    /// Axis spacing (zero for a single-point axis).
    pub fn spacing(&self) -> f64 {
        if self.resolution < 2 {
            0.0
        } else {
            2.0 * self.halfwidth / (self.resolution - 1) as f64
        }
    }
}

fn linspace(center: f64, halfwidth: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![center];
    }
    let step = 2.0 * halfwidth / (n - 1) as f64;
    (0..n).map(|i| center - halfwidth + step * i as f64).collect()
}

/// Sampling grid over the joint phase space of all heralded modes.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    /// One window per heralded mode.
    pub axes: Vec<ModeAxis>,
}

impl GridSpec {
    /// Origin-centered grid: every mode gets the same square window.
    pub fn centered(n_modes: usize, halfwidth: f64, resolution: usize) -> Self {
        GridSpec {
            axes: vec![
                ModeAxis { center_q: 0.0, center_p: 0.0, halfwidth, resolution };
                n_modes
            ],
        }
    }

    /// Total number of grid points (`∏ resolutionᵢ²`).
    pub fn n_points(&self) -> Result<usize> {
        let mut total: usize = 1;
        for ax in &self.axes {
            if ax.resolution == 0 {
                return Err(Error::Validation("axis resolution must be positive".into()));
            }
            if !(ax.halfwidth > 0.0 && ax.halfwidth.is_finite()) {
                return Err(Error::Validation(format!(
                    "axis half-width must be positive and finite, got {}",
                    ax.halfwidth
                )));
            }
            total = total
                .checked_mul(ax.resolution)
                .and_then(|t| t.checked_mul(ax.resolution))
                .filter(|&t| t <= MAX_GRID_VALUES)
                .ok_or_else(|| {
                    Error::Resource(format!(
                        "grid exceeds the {MAX_GRID_VALUES}-point budget"
                    ))
                })?;
        }
        Ok(total)
    }

    /// Phase-space coordinates `(q₁, p₁, …, q_M, p_M)` of the grid point
    /// with the given flat index (row-major, `q₁` slowest).
    pub(crate) fn coords(&self, mut flat: usize, out: &mut [f64]) {
        for (i, ax) in self.axes.iter().enumerate().rev() {
            let ip = flat % ax.resolution;
            flat /= ax.resolution;
            let iq = flat % ax.resolution;
            flat /= ax.resolution;
            if ax.resolution == 1 {
                out[2 * i] = ax.center_q;
                out[2 * i + 1] = ax.center_p;
            } else {
                let step = ax.spacing();
                out[2 * i] = ax.center_q - ax.halfwidth + step * iq as f64;
                out[2 * i + 1] = ax.center_p - ax.halfwidth + step * ip as f64;
            }
        }
    }
}

/// Real Wigner values sampled on a [`GridSpec`].
///
/// `values` is row-major over the per-mode index order
/// `(q₁, p₁, q₂, p₂, …)` with `q₁` varying slowest.  `normalization`
/// holds the constant the raw values were divided by (the pattern
/// probability for heralded grids, `1` for directly normalized sources).
#[derive(Debug, Clone, PartialEq)]
pub struct WignerGrid {
    /// The sampling windows the values were computed on.
    pub axes: Vec<ModeAxis>,
    /// Real Wigner values, row-major, `q₁` slowest.
    pub values: Vec<f64>,
    /// Constant divided out of the raw evaluation.
    pub normalization: f64,
}

impl WignerGrid {
    /// Value at per-axis indices `(iq₁, ip₁, iq₂, ip₂, …)`.
    pub fn value_at(&self, indices: &[usize]) -> f64 {
        assert_eq!(indices.len(), 2 * self.axes.len(), "index arity mismatch");
        let mut flat = 0usize;
        for (i, ax) in self.axes.iter().enumerate() {
            assert!(indices[2 * i] < ax.resolution && indices[2 * i + 1] < ax.resolution);
            flat = (flat * ax.resolution + indices[2 * i]) * ax.resolution + indices[2 * i + 1];
        }
        self.values[flat]
    }

    /// Riemann approximation of `∫ W ∏ d²αᵢ` (measure `dq dp / 2` per
    /// mode); ≈ 1 for a normalized state on a wide enough grid.
    pub fn integral(&self) -> f64 {
        let mut cell = 1.0;
        for ax in &self.axes {
            cell *= ax.spacing() * ax.spacing() / 2.0;
        }
        self.values.iter().sum::<f64>() * cell
    }
}

/// Evaluates the Wigner function of the state heralded by `pattern`,
/// normalized by the analytic pattern probability.
///
/// Works for pure and mixed Gaussian inputs.  Evaluation is parallel
/// over grid points.
pub fn wigner(
    state: &GaussianState,
    pattern: &DetectionPattern,
    heralded_modes: &[usize],
    grid: &GridSpec,
) -> Result<WignerGrid> {
    let bdata = b_data(state, heralded_modes)?;
    let counts = pattern.aligned_counts(&bdata)?;
    let m = bdata.n_heralded();
    if grid.axes.len() != m {
        return Err(Error::Validation(format!(
            "grid covers {} modes but {} are heralded",
            grid.axes.len(),
            m
        )));
    }
    let total = grid.n_points()?;
    let probability = probability_from_bdata(&bdata, &counts)?;
    if probability <= 0.0 {
        return Err(Error::NumericalHealth(
            "pattern probability vanishes; normalized Wigner function undefined".into(),
        ));
    }
    let core = HeraldCore::new(&bdata)?;
    let x = x_sector(m);
    let r_dh = bdata.r_dh();

    // Measured-sector Gaussian-derivative data, as a polynomial in the
    // point-dependent shift z = z_p + 2 R_dh G^{−1} v.
    let a_w = &bdata.r_dd - &r_dh * &core.ip_inv * &x * &bdata.r_hd;
    let z_p = &bdata.y_d + &r_dh * &core.d_vec;
    let coupling = (&r_dh * &core.ip_inv).scale(2.0);
    let mut order: Vec<u32> = counts.clone();
    order.extend_from_slice(&counts);
    let a_w = (&a_w + a_w.transpose()).scale(0.5);
    let poly = gaussian_derivative_zpoly(&a_w, &DerivativeOrder(order))?;

    // Quadratic form G^{−1} F (Hermitian for physical inputs).
    let l_quad = &core.ip_inv * &core.f;

    let ln_pattern_fact: f64 = counts.iter().map(|&c| ln_factorial(c as u64)).sum();
    let ln_scale = core.y_quad - ln_pattern_fact
        + m as f64 * (2.0 / std::f64::consts::PI).ln()
        - 0.5 * core.det_ip.ln();
    let prefactor = bdata.p0 * ln_scale.exp() / probability;

    let d_vec = core.d_vec.clone();
    let values: Vec<(f64, f64)> = (0..total)
        .into_par_iter()
        .map(|flat| {
            let mut qp = vec![0.0f64; 2 * m];
            grid.coords(flat, &mut qp);
            let mut v = CVec::zeros(2 * m);
            for i in 0..m {
                let alpha = C64::new(qp[2 * i], qp[2 * i + 1]).scale(std::f64::consts::FRAC_1_SQRT_2);
                v[i] = alpha.conj() - d_vec[i];
                v[m + i] = alpha - d_vec[m + i];
            }
            let quad = v.dotc(&(&l_quad * &v));
            let z = &z_p + &coupling * &v;
            let val = prefactor * (-quad).exp() * poly.eval(&z);
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
        normalization: probability,
    })
}

/// Wigner function of a Gaussian state itself (no detection involved).
///
/// Values follow the same `2^M`-scaled convention as [`wigner`]; the
/// grid integrates to one over `∏ d²αᵢ`.
pub fn gaussian_wigner(state: &GaussianState, grid: &GridSpec) -> Result<WignerGrid> {
    let m = state.n_modes();
    if grid.axes.len() != m {
        return Err(Error::Validation(format!(
            "grid covers {} modes but the state has {}",
            grid.axes.len(),
            m
        )));
    }
    let total = grid.n_points()?;
    let om = omega(m);
    let cov_r = &om * state.cov_c() * om.adjoint();
    let mean_r = &om * state.mean_c();
    let worst_cov = cov_r.iter().map(|e| e.im.abs()).fold(0.0f64, f64::max);
    let worst_mean = mean_r.iter().map(|e| e.im.abs()).fold(0.0f64, f64::max);
    if worst_cov.max(worst_mean) > 1e-9 {
        return Err(Error::NumericalHealth(
            "quadrature covariance has imaginary residue".into(),
        ));
    }
    let cov = nalgebra::DMatrix::<f64>::from_fn(2 * m, 2 * m, |i, j| cov_r[(i, j)].re);
    let mean = nalgebra::DVector::<f64>::from_fn(2 * m, |i, _| mean_r[i].re);
    let lu = cov.clone().lu();
    let det = lu.determinant();
    if det <= 0.0 {
        return Err(Error::NumericalHealth(format!(
            "quadrature covariance determinant {det:.3e} not positive"
        )));
    }
    let cov_inv = lu
        .try_inverse()
        .ok_or_else(|| Error::NumericalHealth("quadrature covariance not invertible".into()))?;
    let norm = (std::f64::consts::PI.powi(m as i32) * det.sqrt()).recip();

    let values: Vec<f64> = (0..total)
        .into_par_iter()
        .map(|flat| {
            let mut qp = vec![0.0f64; 2 * m];
            grid.coords(flat, &mut qp);
            // Quadrature order is momentum-first: (p₁…p_M, q₁…q_M).
            let mut delta = nalgebra::DVector::<f64>::zeros(2 * m);
            for i in 0..m {
                delta[i] = qp[2 * i + 1] - mean[i];
                delta[m + i] = qp[2 * i] - mean[m + i];
            }
            let quad = delta.dot(&(&cov_inv * &delta));
            norm * (-0.5 * quad).exp()
        })
        .collect();

    Ok(WignerGrid { axes: grid.axes.clone(), values, normalization: 1.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::sim::{project_pattern, simulate_circuit};
    use crate::fock::wigner::wigner_of_fock_superposition;
    use crate::gaussian::{state_from_circuit, CircuitSpec};
    use crate::{CMat, ZERO};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn coupler(theta: f64, phi: f64) -> CMat {
        let (ct, st) = (theta.cos(), theta.sin());
        let e = C64::from_polar(1.0, phi);
        CMat::from_row_slice(2, 2, &[e * ct, c(-st, 0.0), e * st, c(ct, 0.0)])
    }

    #[test]
    fn heralded_single_photon_wigner() {
        let r: f64 = 0.5;
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
        let pattern = DetectionPattern::new(vec![1], vec![1]).unwrap();
        let grid = GridSpec::centered(1, 3.0, 25);
        let w = wigner(&state, &pattern, &[0], &grid).unwrap();
        // Center value −2/π, and the closed form at every grid point.
        assert!((w.value_at(&[12, 12]) + 2.0 / std::f64::consts::PI).abs() < 1e-10);
        let qs = grid.axes[0].q_points();
        let ps = grid.axes[0].p_points();
        for (iq, q) in qs.iter().enumerate() {
            for (ip, p) in ps.iter().enumerate() {
                let a2 = 0.5 * (q * q + p * p);
                let expect = (2.0 / std::f64::consts::PI)
                    * (4.0 * a2 - 1.0)
                    * (-2.0 * a2).exp();
                assert!(
                    (w.value_at(&[iq, ip]) - expect).abs() < 1e-10,
                    "mismatch at ({q}, {p})"
                );
            }
        }
    }

    #[test]
    fn normalized_integral_near_one() {
        let r: f64 = 0.5;
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
        let pattern = DetectionPattern::new(vec![1], vec![2]).unwrap();
        let grid = GridSpec::centered(1, 5.0, 201);
        let w = wigner(&state, &pattern, &[0], &grid).unwrap();
        assert!((w.integral() - 1.0).abs() < 1e-3, "integral {}", w.integral());
    }

    #[test]
    fn zero_pattern_matches_gaussian_branch() {
        let spec = CircuitSpec {
            n_modes: 2,
            squeezings: vec![c(0.6, 0.4), c(-0.3, 0.0)],
            displacements: vec![c(0.25, -0.1), c(0.1, 0.2)],
            unitary: coupler(0.7, 0.3),
        };
        let state = state_from_circuit(&spec).unwrap();
        let pattern = DetectionPattern::new(vec![1], vec![0]).unwrap();
        let grid = GridSpec::centered(1, 4.0, 21);
        let w_herald = wigner(&state, &pattern, &[0], &grid).unwrap();

        let bdata = b_data(&state, &[0]).unwrap();
        let zero = super::super::zero_photon_gaussian(&bdata).unwrap();
        let w_gauss = gaussian_wigner(&zero, &grid).unwrap();
        for (a, b) in w_herald.values.iter().zip(&w_gauss.values) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    /// Displaced, squeezed, phase-rich circuit: every structural choice
    /// in the point-dependent shift changes the result here, so matching
    /// the brute-force Fock computation pins the formula.
    #[test]
    fn displaced_circuit_matches_fock_oracle() {
        let spec = CircuitSpec {
            n_modes: 2,
            squeezings: vec![c(0.5, 0.0), c(-0.35, 0.2)],
            displacements: vec![c(0.2, 0.1), c(-0.1, 0.15)],
            unitary: coupler(0.55, 0.4),
        };
        let state = state_from_circuit(&spec).unwrap();
        let grid = GridSpec::centered(1, 2.5, 11);

        let sim = simulate_circuit(&spec, 36).unwrap();
        for n in [1usize, 2] {
            let pattern = DetectionPattern::new(vec![1], vec![n as u32]).unwrap();
            let w = wigner(&state, &pattern, &[0], &grid).unwrap();
            let (p_oracle, heralded) = project_pattern(&sim, &[1], &[n]).unwrap();
            assert!(
                (w.normalization - p_oracle).abs() < 1e-8 * p_oracle,
                "probability mismatch for n={n}"
            );
            let w_oracle = wigner_of_fock_superposition(&heralded, None, &grid).unwrap();
            for (a, b) in w.values.iter().zip(&w_oracle.values) {
                assert!((a - b).abs() < 1e-7, "n={n}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn gaussian_wigner_vacuum_and_displaced() {
        let vac = GaussianState::vacuum(1);
        let grid = GridSpec::centered(1, 5.0, 81);
        let w = gaussian_wigner(&vac, &grid).unwrap();
        assert!((w.value_at(&[40, 40]) - 2.0 / std::f64::consts::PI).abs() < 1e-12);
        assert!((w.integral() - 1.0).abs() < 1e-4);

        let spec = CircuitSpec {
            n_modes: 1,
            squeezings: vec![ZERO],
            displacements: vec![c(0.7, -0.3)],
            unitary: CMat::identity(1, 1),
        };
        let disp = state_from_circuit(&spec).unwrap();
        let w2 = gaussian_wigner(&disp, &grid).unwrap();
        let qs = grid.axes[0].q_points();
        let alpha = c(0.7, -0.3);
        let q0 = qs[51];
        let a = c(q0, qs[33]).scale(std::f64::consts::FRAC_1_SQRT_2);
        let expect = (2.0 / std::f64::consts::PI) * (-2.0 * (a - alpha).norm_sqr()).exp();
        assert!((w2.value_at(&[51, 33]) - expect).abs() < 1e-12);
    }

    #[test]
    fn grid_bookkeeping() {
        let grid = GridSpec::centered(2, 1.0, 3);
        assert_eq!(grid.n_points().unwrap(), 81);
        let mut qp = [0.0; 4];
        grid.coords(0, &mut qp);
        assert_eq!(qp, [-1.0, -1.0, -1.0, -1.0]);
        grid.coords(80, &mut qp);
        assert_eq!(qp, [1.0, 1.0, 1.0, 1.0]);
        // q₁ slowest: advancing the flat index by 27 moves q₁ one step.
        grid.coords(27, &mut qp);
        assert_eq!(qp, [0.0, -1.0, -1.0, -1.0]);
        let giant = GridSpec::centered(3, 1.0, 4097);
        assert!(giant.n_points().is_err());
    }
}
