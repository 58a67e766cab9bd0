//! Exact derivatives of Gaussian exponentials.
//!
//! Everything conditional in this crate reduces to evaluating multivariate
//! derivatives of
//!
//! ```text
//! f(γ) = exp(½ γᵀ A γ + zᵀ γ) ,       A symmetric,
//! ```
//!
//! at `γ = 0`.  Differentiation is carried out symbolically using the
//! closed rule `∂ᵢ (P · f) = (∂ᵢ P + P · (A γ + z)ᵢ) · f`, maintaining the
//! polynomial prefactor `P` as a sparse multi-index map.  The result is
//! exact up to floating-point rounding — there is no series truncation.
//!
//! Two evaluation modes are provided: a numeric one ([`gaussian_derivative`])
//! that folds `z` in as it goes, and a symbolic one
//! ([`gaussian_derivative_zpoly`]) that leaves `z` as formal variables and
//! returns the resulting polynomial in `z`.  The symbolic form is what
//! makes phase-space grids cheap: the derivative structure is computed
//! once, then evaluated at thousands of grid-dependent `z` values.
//!
//! The two-variable Hermite polynomials
//!
//! ```text
//! H_{mn}(u, v) = ∂_{t}^m ∂_{s}^n exp(−t s + u t + v s) |₀
//! ```
//!
//! are the special case of a 2×2 anti-diagonal `A`; they get a dedicated
//! recursion ([`hermite_2d`]) because Wigner reconstruction uses them
//! densely.

use crate::error::{Error, Result};
use crate::{C64, CMat, CVec, ZERO};
use std::collections::BTreeMap;

/// Hard cap on the total derivative order; beyond this the sparse
/// polynomial can grow too large to be useful.
pub const MAX_TOTAL_ORDER: u32 = 64;

/// Coefficient magnitude below which monomials are dropped.
const PRUNE_EPS: f64 = 1e-300;

/// Coefficient magnitude above which the computation is declared unhealthy
/// (heading for overflow).
const BLOWUP_LIMIT: f64 = 1e250;

/// The function `exp(½ γᵀ A γ + zᵀ γ)`.
///
/// `A` is symmetrized on construction (residue checked against
/// `1e-10 · max(1, ‖A‖)`).
#[derive(Debug, Clone)]
pub struct GaussianExponential {
    /// Symmetric quadratic form.
    pub a: CMat,
    /// Linear coefficients.
    pub z: CVec,
}

impl GaussianExponential {
    /// Validates dimensions and symmetry, then stores the symmetrized `A`.
    pub fn new(a: CMat, z: CVec) -> Result<Self> {
        let d = a.nrows();
        if a.ncols() != d || z.len() != d {
            return Err(Error::Validation(format!(
                "gaussian exponential: A is {}×{}, z has length {}",
                a.nrows(),
                a.ncols(),
                z.len()
            )));
        }
        let scale = a.iter().map(|c| c.norm()).fold(1.0f64, f64::max);
        let res = (&a - a.transpose()).iter().map(|c| c.norm()).fold(0.0f64, f64::max);
        if res > 1e-10 * scale {
            return Err(Error::Validation(format!(
                "gaussian exponential: A is not symmetric (residue {res:.3e})"
            )));
        }
        let a = (&a + a.transpose()).scale(0.5);
        Ok(GaussianExponential { a, z })
    }

    /// Number of variables.
    pub fn dim(&self) -> usize {
        self.a.nrows()
    }
}

/// A multi-index derivative order, one entry per variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerivativeOrder(pub Vec<u32>);

impl DerivativeOrder {
    /// Total order `|m| = Σ mᵢ`.
    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    /// Checks the total-order cap and dimension.
    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.0.len() != dim {
            return Err(Error::Validation(format!(
                "derivative order has {} entries for {} variables",
                self.0.len(),
                dim
            )));
        }
        if self.total() > MAX_TOTAL_ORDER {
            return Err(Error::Resource(format!(
                "total derivative order {} exceeds the cap {}",
                self.total(),
                MAX_TOTAL_ORDER
            )));
        }
        Ok(())
    }
}

type Monomial = Vec<u8>;

/// A sparse polynomial in formal `z` variables, the output of
/// [`gaussian_derivative_zpoly`].
#[derive(Debug, Clone)]
pub struct ZPolynomial {
    dim: usize,
    terms: BTreeMap<Monomial, C64>,
}

impl ZPolynomial {
    /// Number of `z` variables.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of stored monomials.
    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    /// Evaluates the polynomial at a numeric `z`.
    pub fn eval(&self, z: &CVec) -> C64 {
        debug_assert_eq!(z.len(), self.dim);
        let mut acc = ZERO;
        for (mono, &coef) in &self.terms {
            let mut term = coef;
            for (i, &e) in mono.iter().enumerate() {
                for _ in 0..e {
                    term *= z[i];
                }
            }
            acc += term;
        }
        acc
    }
}

/// Evaluates `∂^m exp(½ γᵀ A γ + zᵀ γ) |_{γ=0}` exactly.
///
/// # Examples
///
/// ```
/// use gaussherald::deriv::{gaussian_derivative, DerivativeOrder, GaussianExponential};
/// use gaussherald::{C64, CMat, CVec};
///
/// // With A = 0 the derivative is ∏ zᵢ^{mᵢ}.
/// let g = GaussianExponential::new(
///     CMat::zeros(2, 2),
///     CVec::from_vec(vec![C64::new(2.0, 0.0), C64::new(0.0, 1.0)]),
/// ).unwrap();
/// let d = gaussian_derivative(&g, &DerivativeOrder(vec![2, 1])).unwrap();
/// assert!((d - C64::new(0.0, 4.0)).norm() < 1e-14);
/// ```
pub fn gaussian_derivative(g: &GaussianExponential, order: &DerivativeOrder) -> Result<C64> {
    order.validate(g.dim())?;
    let dim = g.dim();
    // P starts as the constant 1; keys hold γ exponents only.
    let mut p: BTreeMap<Monomial, C64> = BTreeMap::new();
    p.insert(vec![0u8; dim], C64::new(1.0, 0.0));
    // Only ∂ⱼ lowers a γⱼ exponent, so a monomial with more γⱼ's than
    // derivatives still to come can never reach the γ-free evaluation at
    // the end: prune those after every step to keep P small.
    let mut remaining = order.0.clone();
    for i in 0..dim {
        for _ in 0..order.0[i] {
            remaining[i] -= 1;
            p = apply_derivative(&p, i, &g.a, Some(&g.z))?;
            p.retain(|mono, _| {
                mono.iter()
                    .zip(remaining.iter())
                    .all(|(&e, &r)| u32::from(e) <= r)
            });
        }
    }
    Ok(p.get(&vec![0u8; dim]).copied().unwrap_or(ZERO))
}

/// Like [`gaussian_derivative`] but with `z` kept symbolic; returns the
/// polynomial `p(z)` such that `∂^m f|₀ = p(z)`.
pub fn gaussian_derivative_zpoly(a: &CMat, order: &DerivativeOrder) -> Result<ZPolynomial> {
    let dim = a.nrows();
    let g = GaussianExponential::new(a.clone(), CVec::zeros(dim))?;
    order.validate(dim)?;
    // Keys: first `dim` entries are γ exponents, last `dim` are z exponents.
    let mut p: BTreeMap<Monomial, C64> = BTreeMap::new();
    p.insert(vec![0u8; 2 * dim], C64::new(1.0, 0.0));
    // Same pruning as in `gaussian_derivative`: the γ half of a key must
    // stay reachable to γ-free by the derivatives still to come.
    let mut remaining = order.0.clone();
    for i in 0..dim {
        for _ in 0..order.0[i] {
            remaining[i] -= 1;
            p = apply_derivative(&p, i, &g.a, None)?;
            p.retain(|mono, _| {
                mono[..dim]
                    .iter()
                    .zip(remaining.iter())
                    .all(|(&e, &r)| u32::from(e) <= r)
            });
        }
    }
    // Keep the γ-free part as a polynomial in z.
    let mut terms = BTreeMap::new();
    for (mono, coef) in p {
        if mono[..dim].iter().all(|&e| e == 0) {
            terms.insert(mono[dim..].to_vec(), coef);
        }
    }
    Ok(ZPolynomial { dim, terms })
}

/// One application of `∂ᵢ` to `P·f`:  `P → ∂ᵢP + P·(Aγ + z)ᵢ`.
///
/// Keys are γ exponents when `z` is numeric (`Some`), and γ ++ z exponents
/// when symbolic (`None`).
fn apply_derivative(
    p: &BTreeMap<Monomial, C64>,
    i: usize,
    a: &CMat,
    z: Option<&CVec>,
) -> Result<BTreeMap<Monomial, C64>> {
    let dim = a.nrows();
    let mut out: BTreeMap<Monomial, C64> = BTreeMap::new();
    let mut add = |key: Monomial, val: C64| {
        let entry = out.entry(key).or_insert(ZERO);
        *entry += val;
    };
    let mut peak = 0.0f64;
    for (mono, &coef) in p {
        peak = peak.max(coef.norm());
        // ∂ᵢ P.
        if mono[i] > 0 {
            let mut k = mono.clone();
            k[i] -= 1;
            add(k, coef * C64::new(mono[i] as f64, 0.0));
        }
        // P · Σⱼ Aᵢⱼ γⱼ.
        for j in 0..dim {
            let aij = a[(i, j)];
            if aij != ZERO {
                let mut k = mono.clone();
                if k[j] == u8::MAX {
                    return Err(Error::Resource("monomial exponent overflow".into()));
                }
                k[j] += 1;
                add(k, coef * aij);
            }
        }
        // P · zᵢ.
        match z {
            Some(zv) => {
                if zv[i] != ZERO {
                    add(mono.clone(), coef * zv[i]);
                }
            }
            None => {
                let mut k = mono.clone();
                if k[dim + i] == u8::MAX {
                    return Err(Error::Resource("monomial exponent overflow".into()));
                }
                k[dim + i] += 1;
                add(k, coef);
            }
        }
    }
    if peak > BLOWUP_LIMIT {
        return Err(Error::NumericalHealth(format!(
            "derivative coefficients reached {peak:.3e}; result would overflow"
        )));
    }
    // Prune negligible coefficients.
    let mut out2 = out;
    out2.retain(|_, v| v.norm() > PRUNE_EPS);
    if out2.is_empty() {
        out2.insert(
            vec![0u8; if z.is_some() { dim } else { 2 * dim }],
            ZERO,
        );
    }
    Ok(out2)
}

/// Two-variable Hermite polynomial `H_{mn}(u, v)` by the stable recursion
/// `H_{0,n} = vⁿ`, `H_{m+1,n} = u·H_{m,n} − n·H_{m,n−1}`.
///
/// Satisfies `H_{mn}(u, v) = conj(H_{nm}(v̄, ū))`… more usefully for Wigner
/// work, `H_{mn}(2α, 2α*)* = H_{nm}(2α, 2α*)`.
pub fn hermite_2d(m: u32, n: u32, u: C64, v: C64) -> C64 {
    // Row H_{0,·} then climb in m; keep two rows.
    let n = n as usize;
    let m = m as usize;
    let mut prev: Vec<C64> = Vec::with_capacity(n + 1);
    let mut pow = C64::new(1.0, 0.0);
    for _ in 0..=n {
        prev.push(pow);
        pow *= v;
    }
    if m == 0 {
        return prev[n];
    }
    let mut cur = vec![ZERO; n + 1];
    for _ in 1..=m {
        for k in 0..=n {
            let lower = if k == 0 { ZERO } else { prev[k - 1] * C64::new(k as f64, 0.0) };
            cur[k] = u * prev[k] - lower;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[n]
}
