//! Deterministic derivative-free simplex minimization (Nelder–Mead).
//!
//! The search drives every probability-maximization path in this module:
//! objectives involve derivative-extraction kernels with no tractable
//! analytic gradients, so a simplex method with the classic coefficients
//! (reflection 1, expansion 2, contraction ½, shrink ½) is used.  The
//! implementation is fully deterministic: given the same starting simplex
//! and objective it always walks the same path, which keeps multistart
//! reductions reproducible across runs and thread schedules.
//!
//! Objectives may return non-finite values (`NaN`, `∞`) for rejected
//! points; they are treated as `+∞` and the simplex contracts away from
//! them.
//!
//! # Examples
//!
//! ```
//! use gaussherald::optimize::nm::{minimize, NmOptions};
//!
//! // Minimum of a shifted quadratic bowl.
//! let out = minimize(
//!     |x| (x[0] - 3.0).powi(2) + (x[1] + 1.0).powi(2),
//!     &[0.0, 0.0],
//!     &[0.5, 0.5],
//!     &NmOptions::default(),
//! );
//! assert!((out.x[0] - 3.0).abs() < 1e-6);
//! assert!((out.x[1] + 1.0).abs() < 1e-6);
//! ```

/// Termination settings for [`minimize`].
#[derive(Debug, Clone)]
pub struct NmOptions {
    /// Maximum number of iterations (each iteration is one
    /// reflect/expand/contract/shrink step).
    pub max_iters: usize,
    /// Converged when the simplex diameter (max vertex distance to best,
    /// ∞-norm) falls below this.
    pub x_tol: f64,
    /// Converged when the value spread across the simplex falls below
    /// this.
    pub f_tol: f64,
}

impl Default for NmOptions {
    fn default() -> Self {
        NmOptions { max_iters: 2000, x_tol: 1e-10, f_tol: 1e-12 }
    }
}

/// Result of a simplex run.
#[derive(Debug, Clone)]
pub struct NmOutcome {
    /// Best point found.
    pub x: Vec<f64>,
    /// Objective value at the best point.
    pub value: f64,
    /// Iterations consumed.
    pub iterations: usize,
    /// Whether the tolerance criteria (rather than the iteration cap)
    /// ended the run.
    pub converged: bool,
}

fn sanitize(v: f64) -> f64 {
    if v.is_finite() { v } else { f64::INFINITY }
}

/// Minimizes `f` from `x0`, building the initial simplex by stepping
/// `scale[i]` along each coordinate.  `scale` entries must be nonzero;
/// a degenerate (zero-dimension) problem returns `x0` unchanged.
pub fn minimize<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    scale: &[f64],
    opts: &NmOptions,
) -> NmOutcome {
    let dim = x0.len();
    assert_eq!(scale.len(), dim, "scale length must match dimension");
    if dim == 0 {
        let value = sanitize(f(x0));
        return NmOutcome { x: x0.to_vec(), value, iterations: 0, converged: true };
    }

    // Initial simplex: x0 plus one perturbed vertex per coordinate.
    let mut verts: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    verts.push(x0.to_vec());
    for i in 0..dim {
        let mut v = x0.to_vec();
        v[i] += if scale[i] != 0.0 { scale[i] } else { 1e-3 };
        verts.push(v);
    }
    let mut vals: Vec<f64> = verts.iter().map(|v| sanitize(f(v))).collect();

    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iters {
        iterations += 1;

        // Order vertices by value (stable: ties keep insertion order).
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap_or(std::cmp::Ordering::Equal));
        let best = order[0];
        let worst = order[dim];
        let second_worst = order[dim - 1];

        // Convergence: value spread and simplex diameter.
        let spread = vals[worst] - vals[best];
        let diam = verts
            .iter()
            .map(|v| {
                v.iter()
                    .zip(&verts[best])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0f64, f64::max)
            })
            .fold(0.0f64, f64::max);
        if spread.abs() < opts.f_tol && diam < opts.x_tol {
            converged = true;
            break;
        }

        // Centroid of all but the worst vertex.
        let mut centroid = vec![0.0; dim];
        for (k, v) in verts.iter().enumerate() {
            if k == worst {
                continue;
            }
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x;
            }
        }
        for c in centroid.iter_mut() {
            *c /= dim as f64;
        }

        let lerp = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&verts[worst])
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        // Reflection.
        let xr = lerp(1.0);
        let fr = sanitize(f(&xr));
        if fr < vals[best] {
            // Expansion.
            let xe = lerp(2.0);
            let fe = sanitize(f(&xe));
            if fe < fr {
                verts[worst] = xe;
                vals[worst] = fe;
            } else {
                verts[worst] = xr;
                vals[worst] = fr;
            }
            continue;
        }
        if fr < vals[second_worst] {
            verts[worst] = xr;
            vals[worst] = fr;
            continue;
        }
        // Contraction (outside when the reflection improved on the worst,
        // inside otherwise).
        let (xc, fc) = if fr < vals[worst] {
            let xc = lerp(0.5);
            let fc = sanitize(f(&xc));
            (xc, fc)
        } else {
            let xc = lerp(-0.5);
            let fc = sanitize(f(&xc));
            (xc, fc)
        };
        if fc < vals[worst].min(fr) {
            verts[worst] = xc;
            vals[worst] = fc;
            continue;
        }
        // Shrink toward the best vertex.
        let anchor = verts[best].clone();
        for (k, v) in verts.iter_mut().enumerate() {
            if k == best {
                continue;
            }
            for (x, a) in v.iter_mut().zip(&anchor) {
                *x = a + 0.5 * (*x - a);
            }
            vals[k] = sanitize(f(v));
        }
    }

    let mut best = 0;
    for k in 1..=dim {
        if vals[k] < vals[best] {
            best = k;
        }
    }
    NmOutcome {
        x: verts[best].clone(),
        value: vals[best],
        iterations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl_converges() {
        let out = minimize(
            |x| (x[0] - 1.5).powi(2) + 3.0 * (x[1] - 0.25).powi(2),
            &[-2.0, 2.0],
            &[0.7, 0.7],
            &NmOptions::default(),
        );
        assert!(out.converged);
        assert!((out.x[0] - 1.5).abs() < 1e-7, "{:?}", out.x);
        assert!((out.x[1] - 0.25).abs() < 1e-7, "{:?}", out.x);
    }

    #[test]
    fn rosenbrock_two_dim() {
        let rosen = |x: &[f64]| {
            (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
        };
        let out = minimize(
            rosen,
            &[-1.2, 1.0],
            &[0.5, 0.5],
            &NmOptions { max_iters: 5000, ..NmOptions::default() },
        );
        assert!((out.x[0] - 1.0).abs() < 1e-5, "{:?}", out);
        assert!((out.x[1] - 1.0).abs() < 1e-5, "{:?}", out);
    }

    #[test]
    fn rejected_regions_are_avoided() {
        // Objective is +∞ on the left half-plane; minimum at x = 0.1.
        let out = minimize(
            |x| {
                if x[0] < 0.0 {
                    f64::INFINITY
                } else {
                    (x[0] - 0.1).powi(2)
                }
            },
            &[0.8],
            &[0.3],
            &NmOptions::default(),
        );
        assert!((out.x[0] - 0.1).abs() < 1e-6);
    }

    #[test]
    fn deterministic_replay() {
        let run = || {
            minimize(
                |x| x[0].sin() * x[1].cos() + 0.1 * (x[0] * x[0] + x[1] * x[1]),
                &[1.0, -1.0],
                &[0.4, 0.4],
                &NmOptions::default(),
            )
        };
        let a = run();
        let b = run();
        assert_eq!(a.x, b.x);
        assert_eq!(a.value, b.value);
        assert_eq!(a.iterations, b.iterations);
    }

    #[test]
    fn zero_dimension_is_identity() {
        let out = minimize(|_| 42.0, &[], &[], &NmOptions::default());
        assert_eq!(out.value, 42.0);
        assert!(out.x.is_empty());
    }
}
