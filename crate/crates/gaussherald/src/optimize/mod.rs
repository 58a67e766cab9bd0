//! Search for the pure Gaussian configuration heralding a target state
//! at maximal success probability.
//!
//! A goal is given in gate-plus-core form ([`TargetSpec`]): a finite
//! Fock-basis core on the kept modes, optionally preceded by a Gaussian
//! gate.  [`optimize`] searches over physical pure correlation data
//! `(B, Y)` and candidate detection patterns in one of two modes:
//!
//! * **Exact coefficients** — the heralded core must reproduce the
//!   target coefficients exactly.  Tabulated shapes (single detector up
//!   to four photons, the one-plus-two split, equal-superposition and
//!   path-entangled cores) are handled by analytic constraint
//!   elimination with only the free magnitudes optimized; everything
//!   else runs a penalized general search over the raw blocks of
//!   `(B, Y)` in the gate-free canonical form.
//! * **Fidelity floor** — the heralded state (gate included) need only
//!   reach fidelity ≥ φ to the target, freeing the search to trade
//!   fidelity for probability.  This serves targets with unbounded
//!   support, where a finite core can only approximate.
//!
//! The optimizer is a deterministic seeded multistart of a
//! derivative-free simplex descent ([`nm`]).  Restarts and patterns are
//! independent work items evaluated concurrently and merged by a
//! deterministic reduction: feasibility first, then probability, ties
//! broken toward the lowest total input squeezing `Σ tanh⁻¹ σᵢ(B)`.
//! Physicality (`σ_max(B) < 1`) is kept by rejection inside the
//! eliminated families and by scalar projection of `B` in the general
//! path.  Every result is re-verified through the independent heralding
//! pipeline before being returned.
//!
//! # Examples
//!
//! ```
//! use gaussherald::fock::FockVector;
//! use gaussherald::optimize::{
//!     optimize, ConstraintMode, OptimizationProblem, OptimizerConfig, TargetSpec,
//! };
//! use gaussherald::C64;
//!
//! // Herald a single photon from one detected photon on a two-mode
//! // state: the optimum is 25 % success probability.
//! let core = FockVector::single_mode(&[C64::new(0.0, 0.0), C64::new(1.0, 0.0)]).unwrap();
//! let problem = OptimizationProblem {
//!     n_modes: 2,
//!     target: TargetSpec::from_core(core),
//!     patterns: Vec::new(),
//!     mode: ConstraintMode::ExactCoefficients,
//!     config: OptimizerConfig { restarts: 8, ..OptimizerConfig::default() },
//! };
//! let result = optimize(&problem).unwrap();
//! assert_eq!(result.pattern, vec![1]);
//! assert!((result.probability - 0.25).abs() < 1e-6);
//! assert!(result.fidelity > 1.0 - 1e-9);
//! ```

pub mod nm;

mod families;
mod relations;

pub use families::{
    closed_form_probability, eliminate_one_two, eliminate_single_detector, noon_b,
    noon_probability, one_three_probability, reconstruct_single_herald, single_odd_probability,
    squeezing_db, w_probability, w_state_b, zero_two_probability, ClosedFormFamily,
    OneTwoSolution, SingleDetectorSolution,
};
pub use relations::{
    coefficient_constraints, single_herald_params, MatchingRelations, RatioParams, RelationSet,
    SingleHeraldRelations, MAX_MATCHING_TOTAL, MAX_SINGLE_HERALD_TOTAL,
};

use rand::Rng;
use rand_chacha::{rand_core::SeedableRng, ChaCha8Rng};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fock::{fidelity as fock_fidelity, targets, FockVector};
use crate::gaussian::{
    b_data, circuit_for_state, decompose_interferometer, state_from_circuit,
    state_from_pure_parts, validate_state, BData, CircuitSpec, GaussianUnitary, MeshPlan,
};
use crate::herald::{
    absorb_unitary, extract_gate, fock_coefficients, herald_probability, herald_state,
    DetectionPattern, HeraldedState,
};
use crate::{C64, CMat, CVec, ZERO};
use nm::{minimize, NmOptions};

/// Feasibility threshold on the coefficient-mismatch violation in
/// exact-coefficients mode.
const EXACT_FEAS_TOL: f64 = 1e-6;

/// Feasibility threshold on the floor violation `max(0, φ − F)` in
/// fidelity-floor mode.
const FLOOR_FEAS_TOL: f64 = 1e-9;

/// Probability difference treated as a tie during reduction.
const TIE_TOL: f64 = 1e-10;

/// Singular-value headroom used when projecting / rejecting `B`.
const SV_MARGIN: f64 = 1e-6;

/// The goal of a search: an optional Gaussian gate acting on a finite
/// Fock-basis core over the kept modes.
#[derive(Debug, Clone)]
pub struct TargetSpec {
    /// Gaussian gate applied to the core, if any.  In exact mode the
    /// gate is absorbed into the returned circuit after the search (it
    /// never affects the optimal probability).
    pub gate: Option<GaussianUnitary>,
    /// Normalized core coefficients on the kept modes.
    pub core: FockVector,
}

impl TargetSpec {
    /// A gate-free target.
    pub fn from_core(core: FockVector) -> Self {
        TargetSpec { gate: None, core }
    }
}

/// How the target constrains the search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConstraintMode {
    /// Heralded core coefficients must match the target exactly.
    ExactCoefficients,
    /// Heralded state (gate included) must reach at least this fidelity.
    FidelityFloor(f64),
}

/// Knobs of the multistart search.
#[derive(Debug, Clone)]
pub struct OptimizerConfig {
    /// Independent restarts per candidate pattern.
    pub restarts: usize,
    /// Simplex iterations per descent round.
    pub max_iters: usize,
    /// Seed of the deterministic restart streams.
    pub seed: u64,
    /// Initial weight of the constraint penalty (general path); doubled
    /// on stagnation.
    pub penalty_weight: f64,
    /// Cap on auto-enumerated candidate patterns.
    pub pattern_cap: usize,
    /// Cap on the per-mode photon number of reported core coefficients.
    pub coeff_cap: usize,
    /// Skip the analytic families and force the general path (used to
    /// cross-check the two against each other).
    pub force_general: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            restarts: 64,
            max_iters: 600,
            seed: 7,
            penalty_weight: 1e4,
            pattern_cap: 200,
            coeff_cap: 12,
            force_general: false,
        }
    }
}

/// A full search problem.
#[derive(Debug, Clone)]
pub struct OptimizationProblem {
    /// Total mode count N (kept modes plus detectors).
    pub n_modes: usize,
    /// The goal state.
    pub target: TargetSpec,
    /// Candidate detection patterns on the trailing `N − M` modes.
    /// Empty in exact mode ⇒ all compositions of the target's top photon
    /// number are enumerated (up to the configured cap).
    pub patterns: Vec<DetectionPattern>,
    /// Constraint mode.
    pub mode: ConstraintMode,
    /// Search knobs.
    pub config: OptimizerConfig,
}

impl OptimizationProblem {
    /// A problem with auto-enumerated patterns and default knobs.
    pub fn new(n_modes: usize, target: TargetSpec, mode: ConstraintMode) -> Self {
        OptimizationProblem {
            n_modes,
            target,
            patterns: Vec::new(),
            mode,
            config: OptimizerConfig::default(),
        }
    }

    /// Replaces the candidate patterns by explicit count vectors on the
    /// trailing detector modes.
    pub fn with_pattern_counts(mut self, counts: &[Vec<u32>]) -> Result<Self> {
        let m = self.target.core.n_modes();
        let modes: Vec<usize> = (m..self.n_modes).collect();
        let mut out = Vec::with_capacity(counts.len());
        for c in counts {
            out.push(DetectionPattern::new(modes.clone(), c.clone())?);
        }
        self.patterns = out;
        Ok(self)
    }
}

/// One restart's outcome, kept for the search trace.
#[derive(Debug, Clone)]
pub struct RestartRecord {
    /// Pattern the restart worked on.
    pub pattern: Vec<u32>,
    /// Restart index within the pattern.
    pub restart: usize,
    /// Which search path ran ("two-mode", "one-two", "w", "noon",
    /// "general").
    pub strategy: &'static str,
    /// Best probability the restart reached (0 when construction
    /// failed).
    pub probability: f64,
    /// Final constraint violation.
    pub violation: f64,
    /// Simplex iterations consumed.
    pub iterations: usize,
}

/// The best configuration found by [`optimize`].
#[derive(Debug, Clone)]
pub struct OptimizationResult {
    /// Correlation matrix of the optimal pure state (gate absorbed).
    pub b: CMat,
    /// Doubled linear term of the optimal pure state.
    pub y: CVec,
    /// Winning detection pattern (counts on the trailing modes).
    pub pattern: Vec<u32>,
    /// Herald probability at the optimum.
    pub probability: f64,
    /// Fidelity of the heralded state to the target (gates included).
    pub fidelity: f64,
    /// Final constraint violation of the winning restart.
    pub violation: f64,
    /// Preparation circuit of the optimal Gaussian state.
    pub circuit: CircuitSpec,
    /// Beam-splitter mesh realizing the circuit's interferometer.
    pub mesh: MeshPlan,
    /// The heralded state, re-derived through the independent pipeline.
    pub heralded: HeraldedState,
    /// Every restart's outcome, in deterministic order.
    pub trace: Vec<RestartRecord>,
}

/// Expected reachable photon-number total of an N-mode configuration:
/// `(N + 2)(N − 1)/2`.
pub fn conjecture_dimension(n_modes: usize) -> u32 {
    if n_modes == 0 {
        return 0;
    }
    let n = n_modes as u32;
    (n + 2) * (n - 1) / 2
}

/// All weak compositions of `n_max` into `detectors` parts, in
/// lexicographic order, truncated at `cap`.
pub fn enumerate_patterns(n_max: u32, detectors: usize, cap: usize) -> Vec<Vec<u32>> {
    fn fill(out: &mut Vec<Vec<u32>>, cur: &mut Vec<u32>, pos: usize, left: u32, cap: usize) {
        if out.len() >= cap {
            return;
        }
        if pos + 1 == cur.len() {
            cur[pos] = left;
            out.push(cur.clone());
            return;
        }
        for k in 0..=left {
            cur[pos] = k;
            fill(out, cur, pos + 1, left - k, cap);
            if out.len() >= cap {
                return;
            }
        }
    }
    let mut out = Vec::new();
    if detectors == 0 {
        return out;
    }
    let mut cur = vec![0u32; detectors];
    fill(&mut out, &mut cur, 0, n_max, cap);
    out
}

/// Highest total occupation carried by a normalized Fock vector.
fn top_photon_number(core: &FockVector) -> u32 {
    let mut n_max = 0u32;
    let mut multi = vec![0usize; core.n_modes()];
    loop {
        if core.get(&multi).norm() > 1e-12 {
            let total: usize = multi.iter().sum();
            n_max = n_max.max(total as u32);
        }
        if !crate::fock::increment(&mut multi, core.cutoff()) {
            break;
        }
    }
    n_max
}

/// Squared overlap of two normalized Fock vectors.
fn core_overlap(a: &FockVector, b: &FockVector) -> f64 {
    match a.inner(b) {
        Ok(ip) => ip.norm_sqr(),
        Err(_) => 0.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Strategy {
    TwoMode,
    OneTwo,
    WShape,
    Noon(u32),
    General,
}

impl Strategy {
    fn name(self) -> &'static str {
        match self {
            Strategy::TwoMode => "two-mode",
            Strategy::OneTwo => "one-two",
            Strategy::WShape => "w",
            Strategy::Noon(_) => "noon",
            Strategy::General => "general",
        }
    }
}

/// Shared, read-only context of one search.
struct Ctx<'a> {
    problem: &'a OptimizationProblem,
    core: &'a FockVector,
    m: usize,
    n: usize,
    /// Target ratios `c_k/c_{n_max}` (single kept mode, exact mode).
    ratios: Option<Vec<C64>>,
}

/// A fully constructed search point.
#[derive(Clone)]
struct Candidate {
    b: CMat,
    y: CVec,
    probability: f64,
    violation: f64,
    squeeze_cost: f64,
}

fn max_singular_value(b: &CMat) -> f64 {
    b.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .fold(0.0f64, |a, &s| a.max(s))
}

fn squeeze_cost(b: &CMat) -> f64 {
    b.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .map(|&s| s.min(1.0 - 1e-12).atanh())
        .sum()
}

fn candidate(b: CMat, y: CVec, probability: f64, violation: f64) -> Candidate {
    let squeeze_cost = squeeze_cost(&b);
    Candidate { b, y, probability, violation, squeeze_cost }
}

/// Engine probability of a single-kept-mode reconstruction; `None` when
/// the point is unphysical or singular.
fn engine_probability(b: &CMat, y: &CVec, m: usize, pattern: &[u32]) -> Option<f64> {
    let heralded: Vec<usize> = (0..m).collect();
    let bdata = BData::from_pure_parts(b.clone(), y.clone(), &heralded).ok()?;
    probability_checked(&bdata, pattern)
}

fn probability_checked(bdata: &BData, pattern: &[u32]) -> Option<f64> {
    match crate::herald::probability_from_bdata(bdata, pattern) {
        Ok(p) if p.is_finite() && p >= 0.0 => Some(p),
        _ => None,
    }
}

/// Runs the full search.
pub fn optimize(problem: &OptimizationProblem) -> Result<OptimizationResult> {
    let cfg = &problem.config;
    let n = problem.n_modes;
    let core = &problem.target.core;
    if (core.norm() - 1.0).abs() > 1e-6 {
        return Err(Error::Validation(format!(
            "target core must be normalized (norm = {:.8})",
            core.norm()
        )));
    }
    let m = core.n_modes();
    if n <= m {
        return Err(Error::Validation(format!(
            "{n} total modes leave no detectors for a {m}-mode core"
        )));
    }
    let d = n - m;
    let n_max = top_photon_number(core);
    if n_max == 0 {
        return Err(Error::Unsupported(
            "the target core is vacuum; nothing to herald".into(),
        ));
    }
    if let Some(g) = &problem.target.gate {
        if g.n_modes() != m {
            return Err(Error::Validation(format!(
                "target gate acts on {} modes, core has {m}",
                g.n_modes()
            )));
        }
    }
    if let ConstraintMode::FidelityFloor(phi) = problem.mode {
        if !(0.0..=1.0).contains(&phi) {
            return Err(Error::Validation(format!(
                "fidelity floor {phi} outside [0, 1]"
            )));
        }
    }
    let exact = matches!(problem.mode, ConstraintMode::ExactCoefficients);

    // Candidate patterns.
    let patterns: Vec<Vec<u32>> = if problem.patterns.is_empty() {
        if !exact {
            return Err(Error::Validation(
                "fidelity-floor problems must list candidate patterns explicitly".into(),
            ));
        }
        enumerate_patterns(n_max, d, cfg.pattern_cap)
    } else {
        let expect: Vec<usize> = (m..n).collect();
        let mut out = Vec::with_capacity(problem.patterns.len());
        for p in &problem.patterns {
            if p.measured_modes() != expect.as_slice() {
                return Err(Error::Validation(format!(
                    "candidate patterns must place detectors on the trailing modes {expect:?}, \
                     got {:?}",
                    p.measured_modes()
                )));
            }
            let counts = p.counts().to_vec();
            if exact && counts.iter().sum::<u32>() != n_max {
                return Err(Error::Validation(format!(
                    "pattern {counts:?} totals {}, but exact matching requires the target's \
                     top photon number {n_max}",
                    counts.iter().sum::<u32>()
                )));
            }
            out.push(counts);
        }
        out
    };
    if patterns.is_empty() {
        return Err(Error::Validation("no candidate patterns to search".into()));
    }

    // Target ratios for the single-kept-mode eliminations.
    let ratios: Option<Vec<C64>> = if m == 1 && exact {
        let top = core.get(&[n_max as usize]);
        Some(
            (0..n_max)
                .map(|k| core.get(&[k as usize]) / top)
                .collect(),
        )
    } else {
        None
    };

    let ctx = Ctx { problem, core, m, n, ratios };

    let strategies: Vec<Strategy> = patterns.iter().map(|p| pick_strategy(&ctx, p)).collect();

    // Sizing guard: when no analytic family applies and the target's top
    // photon number exceeds what an N-mode configuration is expected to
    // reach, an exact search cannot succeed — fail fast with guidance.
    let dim = conjecture_dimension(n);
    if exact && n_max > dim && strategies.iter().all(|s| *s == Strategy::General) {
        return Err(Error::Validation(format!(
            "the target needs {n_max} photons but an {n}-mode configuration is expected to \
             reach at most {dim}; increase n_modes"
        )));
    }

    // Independent work items: every (pattern, restart) pair.
    let jobs: Vec<(usize, usize)> = (0..patterns.len())
        .flat_map(|pi| (0..cfg.restarts.max(1)).map(move |r| (pi, r)))
        .collect();
    let outcomes: Vec<(RestartRecord, Option<Candidate>)> = jobs
        .par_iter()
        .map(|&(pi, r)| {
            let mut rng = ChaCha8Rng::seed_from_u64(
                cfg.seed ^ ((pi as u64) << 40) ^ ((r as u64).wrapping_mul(0x9E37_79B9_7F4A)),
            );
            run_restart(&ctx, &patterns[pi], strategies[pi], r, &mut rng)
        })
        .collect();

    // Deterministic reduction.
    let feas_tol = if exact { EXACT_FEAS_TOL } else { FLOOR_FEAS_TOL };
    let mut trace = Vec::with_capacity(outcomes.len());
    let mut best: Option<(usize, Candidate)> = None;
    for (idx, (record, cand)) in outcomes.into_iter().enumerate() {
        trace.push(record);
        let Some(c) = cand else { continue };
        best = Some(match best {
            None => (idx, c),
            Some((bi, bc)) => {
                if candidate_beats(&c, &bc, feas_tol) {
                    (idx, c)
                } else {
                    (bi, bc)
                }
            }
        });
    }
    let Some((best_idx, best_cand)) = best else {
        return Err(Error::Infeasible(
            "every restart failed to construct a physical candidate".into(),
        ));
    };
    if best_cand.violation > feas_tol {
        return Err(Error::Infeasible(format!(
            "no feasible point across {} restarts; best constraint violation {:.3e} \
             (probability {:.6})",
            trace.len(),
            best_cand.violation,
            best_cand.probability
        )));
    }
    let pattern = patterns[best_idx / cfg.restarts.max(1)].clone();
    assemble(&ctx, pattern, best_cand, trace)
}

/// Final reconstruction, verification, and packaging of the winner.
fn assemble(
    ctx: &Ctx,
    pattern: Vec<u32>,
    cand: Candidate,
    trace: Vec<RestartRecord>,
) -> Result<OptimizationResult> {
    let cfg = &ctx.problem.config;
    let heralded_modes: Vec<usize> = (0..ctx.m).collect();
    let mut state = state_from_pure_parts(&cand.b, &cand.y)?;
    if matches!(ctx.problem.mode, ConstraintMode::ExactCoefficients) {
        if let Some(gate) = &ctx.problem.target.gate {
            state = absorb_unitary(&state, gate, &heralded_modes)?;
        }
    }
    let diag = validate_state(&state);
    if !diag.physical {
        return Err(Error::NumericalHealth(format!(
            "optimal state violates the uncertainty relation (min eigenvalue {:.3e})",
            diag.min_eigenvalue
        )));
    }
    let bd = b_data(&state, &heralded_modes)?;
    let b_full = bd
        .b
        .clone()
        .ok_or_else(|| Error::NumericalHealth("optimal state lost purity".into()))?;
    let smax = max_singular_value(&b_full);
    if smax > 1.0 - 1e-9 {
        return Err(Error::NumericalHealth(format!(
            "optimal correlation matrix touches the physicality boundary (σ_max = {smax:.12})"
        )));
    }

    let circuit = circuit_for_state(&state)?;
    let mesh = decompose_interferometer(&circuit.unitary)?;
    let dp = DetectionPattern::new((ctx.m..ctx.n).collect(), pattern.clone())?;
    let heralded = herald_state(&state, &dp, &heralded_modes, cfg.coeff_cap)?;

    // Independent probability re-check through the returned circuit.
    let rebuilt = state_from_circuit(&circuit)?;
    let p_check = herald_probability(&rebuilt, &dp, &heralded_modes)?;
    if (p_check - cand.probability).abs() > 1e-8 {
        return Err(Error::NumericalHealth(format!(
            "probability re-check mismatch: optimizer {:.12}, circuit {:.12}",
            cand.probability, p_check
        )));
    }

    let result_core = fock_vector_from_coeffs(ctx.m, &heralded.coefficients)?;
    let fidelity = fock_fidelity(
        &result_core,
        Some(&heralded.gate),
        ctx.core,
        ctx.problem.target.gate.as_ref(),
    )?;

    Ok(OptimizationResult {
        b: b_full,
        y: bd.y.clone(),
        pattern,
        probability: cand.probability,
        fidelity,
        violation: cand.violation,
        circuit,
        mesh,
        heralded,
        trace,
    })
}

fn fock_vector_from_coeffs(
    m: usize,
    coeffs: &std::collections::BTreeMap<Vec<u32>, C64>,
) -> Result<FockVector> {
    let cutoff = coeffs
        .keys()
        .flat_map(|k| k.iter())
        .copied()
        .max()
        .unwrap_or(0) as usize;
    let mut v = FockVector::zeros(m, cutoff)?;
    for (key, c) in coeffs {
        let multi: Vec<usize> = key.iter().map(|&x| x as usize).collect();
        v.set(&multi, *c);
    }
    Ok(v)
}

fn candidate_beats(a: &Candidate, b: &Candidate, feas_tol: f64) -> bool {
    let fa = a.violation <= feas_tol;
    let fb = b.violation <= feas_tol;
    match (fa, fb) {
        (true, false) => true,
        (false, true) => false,
        (false, false) => a.violation < b.violation,
        (true, true) => {
            if a.probability > b.probability + TIE_TOL {
                true
            } else if b.probability > a.probability + TIE_TOL {
                false
            } else {
                a.squeeze_cost < b.squeeze_cost - 1e-12
            }
        }
    }
}

fn pick_strategy(ctx: &Ctx, pattern: &[u32]) -> Strategy {
    if ctx.problem.config.force_general {
        return Strategy::General;
    }
    let exact = matches!(ctx.problem.mode, ConstraintMode::ExactCoefficients);
    let m = ctx.m;
    let d = pattern.len();
    if m == 1 && d == 1 && (1..=4).contains(&pattern[0]) {
        return Strategy::TwoMode;
    }
    if exact && m == 1 && d == 2 && (pattern == [1, 2] || pattern == [2, 1]) {
        return Strategy::OneTwo;
    }
    if exact && d == 1 && pattern[0] == 1 && m >= 2 {
        if let Ok(w) = targets::w_state(m, ctx.core.cutoff().max(1)) {
            if core_overlap(ctx.core, &w) > 1.0 - 1e-9 {
                return Strategy::WShape;
            }
        }
    }
    if exact && m == 2 && (2..=4).contains(&d) && pattern.iter().all(|&c| c == 1) {
        if let Ok(nn) = targets::noon(d, ctx.core.cutoff().max(d)) {
            if core_overlap(ctx.core, &nn) > 1.0 - 1e-9 {
                return Strategy::Noon(d as u32);
            }
        }
    }
    Strategy::General
}

fn run_restart(
    ctx: &Ctx,
    pattern: &[u32],
    strategy: Strategy,
    restart: usize,
    rng: &mut ChaCha8Rng,
) -> (RestartRecord, Option<Candidate>) {
    let (cand, iterations) = match (strategy, ctx.problem.mode) {
        (Strategy::TwoMode, ConstraintMode::ExactCoefficients) => {
            restart_two_mode_exact(ctx, pattern[0], rng)
        }
        (Strategy::TwoMode, ConstraintMode::FidelityFloor(phi)) => {
            restart_two_mode_floor(ctx, pattern[0], phi, rng)
        }
        (Strategy::OneTwo, _) => restart_one_two(ctx, pattern, rng),
        (Strategy::WShape, _) => restart_w_shape(ctx, rng),
        (Strategy::Noon(order), _) => restart_noon(ctx, order, rng),
        (Strategy::General, _) => restart_general(ctx, pattern, rng),
    };
    let record = RestartRecord {
        pattern: pattern.to_vec(),
        restart,
        strategy: strategy.name(),
        probability: cand.as_ref().map_or(0.0, |c| c.probability),
        violation: cand.as_ref().map_or(f64::INFINITY, |c| c.violation),
        iterations,
    };
    (record, cand)
}

fn nm_options(ctx: &Ctx) -> NmOptions {
    NmOptions {
        max_iters: ctx.problem.config.max_iters,
        ..NmOptions::default()
    }
}

/// Exact single-detector path: constraints eliminated, only `κ` (and a
/// free `f` for one photon) remain.
fn restart_two_mode_exact(
    ctx: &Ctx,
    n_photons: u32,
    rng: &mut ChaCha8Rng,
) -> (Option<Candidate>, usize) {
    let target = ctx.ratios.as_ref().expect("single-herald ratios");
    let sol = match eliminate_single_detector(n_photons, target, ZERO) {
        Ok(s) => s,
        Err(_) => return (None, 0),
    };
    let free_f = n_photons == 1;
    let pattern = [n_photons];

    let build = |x: &[f64]| -> Option<(CMat, CVec)> {
        let kappa = [C64::new(x[0].abs(), 0.0)];
        let f_val = if free_f { C64::new(x[1], x[2]) } else { sol.f };
        let f = CMat::from_element(1, 1, f_val);
        let (b, y) = reconstruct_single_herald(ZERO, &kappa, &f, &[sol.mu]).ok()?;
        if max_singular_value(&b) >= 1.0 - SV_MARGIN {
            return None;
        }
        Some((b, y))
    };
    let mut objective = |x: &[f64]| -> f64 {
        match build(x) {
            Some((b, y)) => match engine_probability(&b, &y, 1, &pattern) {
                Some(p) => -p,
                None => 1e3,
            },
            None => 1e3,
        }
    };

    let mut x0 = vec![rng.gen_range(0.15..0.8)];
    let mut scale = vec![0.12];
    if free_f {
        x0.extend([rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)]);
        scale.extend([0.25, 0.25]);
    }
    let out = minimize(&mut objective, &x0, &scale, &nm_options(ctx));

    let cand = build(&out.x).and_then(|(b, y)| {
        let p = engine_probability(&b, &y, 1, &pattern)?;
        Some(candidate(b, y, p, sol.residual))
    });
    (cand, out.iterations)
}

/// Floor single-detector path: core shape, coupling, and gate all free.
fn restart_two_mode_floor(
    ctx: &Ctx,
    n_photons: u32,
    phi: f64,
    rng: &mut ChaCha8Rng,
) -> (Option<Candidate>, usize) {
    let rel = match coefficient_constraints(&[n_photons], 2) {
        Ok(RelationSet::SingleHerald(r)) => r,
        _ => return (None, 0),
    };
    let pattern = [n_photons];

    // x = [κ, Re μ, Im μ, Re f, Im f, Re b₁₁, Im b₁₁]
    let build = |x: &[f64]| -> Option<(CMat, CVec, C64, C64, C64)> {
        let kappa_v = C64::new(x[0].abs(), 0.0);
        let mu = C64::new(x[1], x[2]);
        let f_val = C64::new(x[3], x[4]);
        let b11 = C64::new(x[5], x[6]);
        if b11.norm() >= 0.995 {
            return None;
        }
        let f = CMat::from_element(1, 1, f_val);
        let (b, y) = reconstruct_single_herald(b11, &[kappa_v], &f, &[mu]).ok()?;
        if max_singular_value(&b) >= 1.0 - SV_MARGIN {
            return None;
        }
        Some((b, y, mu, f_val, b11))
    };
    let eval = |x: &[f64]| -> Option<(f64, f64)> {
        let (b, y, mu, f_val, b11) = build(x)?;
        let p = engine_probability(&b, &y, 1, &pattern)?;
        let f_mat = CMat::from_element(1, 1, f_val);
        let ratios = rel.ratios(&[mu], &f_mat).ok()?;
        let mut coeffs: Vec<C64> = ratios;
        coeffs.push(C64::new(1.0, 0.0));
        let mut core = FockVector::single_mode(&coeffs).ok()?;
        core.normalize().ok()?;
        let gate = gate_from_b11(b11);
        let fid = fock_fidelity(&core, Some(&gate), ctx.core, ctx.problem.target.gate.as_ref())
            .ok()?;
        Some((p, fid))
    };
    let mut weight = ctx.problem.config.penalty_weight;
    let mut x = vec![
        rng.gen_range(0.15..0.75),
        rng.gen_range(-0.2..0.2),
        rng.gen_range(-0.2..0.2),
        rng.gen_range(-0.6..0.6),
        rng.gen_range(-0.2..0.2),
        rng.gen_range(-0.3..0.3),
        rng.gen_range(-0.1..0.1),
    ];
    let scale = vec![0.12, 0.1, 0.1, 0.2, 0.1, 0.1, 0.05];
    let mut iterations = 0;
    for _round in 0..6 {
        let mut objective = |x: &[f64]| -> f64 {
            match eval(x) {
                Some((p, fid)) => {
                    let gap = (phi - fid).max(0.0);
                    -p + weight * gap * gap
                }
                None => 1e3,
            }
        };
        let out = minimize(&mut objective, &x, &scale, &nm_options(ctx));
        iterations += out.iterations;
        x = out.x;
        match eval(&x) {
            Some((_, fid)) if (phi - fid).max(0.0) <= FLOOR_FEAS_TOL => break,
            _ => weight *= 2.0,
        }
    }

    let cand = build(&x).and_then(|(b, y, ..)| {
        let (p, fid) = eval(&x)?;
        Some(candidate(b, y, p, (phi - fid).max(0.0)))
    });
    (cand, iterations)
}

fn gate_from_b11(b11: C64) -> GaussianUnitary {
    let lambda = b11.norm();
    let theta = 0.5 * b11.arg();
    GaussianUnitary {
        kappa: CMat::from_element(1, 1, C64::from_polar(1.0, theta)),
        squeezes: vec![lambda.min(1.0 - 1e-12).atanh()],
        displacement: vec![ZERO],
    }
}

/// Exact one-plus-two split: `(μ₂, f₃₃, f₂₃)` eliminated; the free
/// direction `μ` of the two-photon detector, `f` of the single-photon
/// detector, and both couplings are optimized.
fn restart_one_two(
    ctx: &Ctx,
    pattern: &[u32],
    rng: &mut ChaCha8Rng,
) -> (Option<Candidate>, usize) {
    let target = ctx.ratios.as_ref().expect("single-herald ratios");
    // Index of the single-photon detector within the pattern.
    let s = if pattern[0] == 1 { 0usize } else { 1usize };
    let dd = 1 - s;
    let pat = pattern.to_vec();

    // x = [Re μ_d, Im μ_d, Re f_ss, Im f_ss, κ₀, κ₁]
    let build = |x: &[f64]| -> Option<(CMat, CVec)> {
        let mu_d = C64::new(x[0], x[1]);
        let f_ss = C64::new(x[2], x[3]);
        let sol = eliminate_one_two(target, mu_d).ok()?;
        let mut mu = [ZERO; 2];
        mu[s] = sol.mu2;
        mu[dd] = mu_d;
        let mut f = CMat::zeros(2, 2);
        f[(s, s)] = f_ss;
        f[(dd, dd)] = sol.f33;
        f[(s, dd)] = sol.f23;
        f[(dd, s)] = sol.f23;
        let kappa = [C64::new(x[4].abs(), 0.0), C64::new(x[5].abs(), 0.0)];
        let (b, y) = reconstruct_single_herald(ZERO, &kappa, &f, &mu).ok()?;
        if max_singular_value(&b) >= 1.0 - SV_MARGIN {
            return None;
        }
        Some((b, y))
    };
    let mut objective = |x: &[f64]| -> f64 {
        match build(x) {
            Some((b, y)) => match engine_probability(&b, &y, 1, &pat) {
                Some(p) => -p,
                None => 1e3,
            },
            None => 1e3,
        }
    };

    let x0 = vec![
        rng.gen_range(-0.7..0.7),
        rng.gen_range(-0.7..0.7),
        rng.gen_range(-0.5..0.5),
        rng.gen_range(-0.5..0.5),
        rng.gen_range(0.15..0.7),
        rng.gen_range(0.15..0.7),
    ];
    let scale = vec![0.2, 0.2, 0.2, 0.2, 0.1, 0.1];
    let out = minimize(&mut objective, &x0, &scale, &nm_options(ctx));

    let cand = build(&out.x).and_then(|(b, y)| {
        let p = engine_probability(&b, &y, 1, &pat)?;
        Some(candidate(b, y, p, 0.0))
    });
    (cand, out.iterations)
}

/// Equal-superposition family: closed-form objective over the pair
/// weight and the detected self-term.
fn restart_w_shape(ctx: &Ctx, rng: &mut ChaCha8Rng) -> (Option<Candidate>, usize) {
    let n = ctx.n;
    let mut objective = |x: &[f64]| -> f64 { -w_probability(x[0], x[1]) };
    let x0 = vec![rng.gen_range(0.15..0.85), rng.gen_range(-0.3..0.3)];
    let out = minimize(&mut objective, &x0, &[0.1, 0.1], &nm_options(ctx));
    let cand = w_state_b(n, out.x[0], out.x[1]).ok().and_then(|(b, y)| {
        let p = w_probability(out.x[0], out.x[1]);
        p.is_finite().then(|| candidate(b, y, p, 0.0))
    });
    (cand, out.iterations)
}

/// Path-entangled family: closed-form objective over the coupling
/// magnitudes.
fn restart_noon(ctx: &Ctx, order: u32, rng: &mut ChaCha8Rng) -> (Option<Candidate>, usize) {
    let n_params = if order == 2 { 4 } else { order as usize };
    let mut objective = |x: &[f64]| -> f64 { -noon_probability(order, x) };
    let mut x0: Vec<f64> = (0..n_params).map(|_| rng.gen_range(0.2..0.55)).collect();
    if order == 2 {
        x0[2] = rng.gen_range(-0.2..0.2);
        x0[3] = rng.gen_range(-0.2..0.2);
    }
    let scale = vec![0.1; n_params];
    let out = minimize(&mut objective, &x0, &scale, &nm_options(ctx));
    let cand = noon_b(order, &out.x).ok().and_then(|(b, y)| {
        let p = noon_probability(order, &out.x);
        (p.is_finite() && max_singular_value(&b) < 1.0 - SV_MARGIN)
            .then(|| candidate(b, y, p, 0.0))
    });
    (cand, out.iterations)
}

/// Layout of the general path's parameter vector.
struct GeneralLayout {
    m: usize,
    d: usize,
    /// Full `(B, Y)` (floor mode) or gate-free canonical slice (exact).
    full: bool,
}

impl GeneralLayout {
    fn dim(&self) -> usize {
        let n = self.m + self.d;
        if self.full {
            n * (n + 1) + 2 * n
        } else {
            2 * self.m * self.d + self.d * (self.d + 1) + 2 * self.d
        }
    }

    /// Builds `(B, y_doubled)` from the parameter vector, projecting the
    /// singular values to the physical ball.
    fn build(&self, x: &[f64]) -> (CMat, CVec) {
        let (m, d) = (self.m, self.d);
        let n = m + d;
        let mut b = CMat::zeros(n, n);
        let mut k = 0usize;
        let take = |x: &[f64], k: &mut usize| {
            let v = C64::new(x[*k], x[*k + 1]);
            *k += 2;
            v
        };
        if self.full {
            for i in 0..n {
                for j in i..n {
                    let v = take(x, &mut k);
                    b[(i, j)] = v;
                    b[(j, i)] = v;
                }
            }
        } else {
            for i in 0..m {
                for j in 0..d {
                    let v = take(x, &mut k);
                    b[(i, m + j)] = v;
                    b[(m + j, i)] = v;
                }
            }
            for i in 0..d {
                for j in i..d {
                    let v = take(x, &mut k);
                    b[(m + i, m + j)] = v;
                    b[(m + j, m + i)] = v;
                }
            }
        }
        let smax = max_singular_value(&b);
        if smax >= 1.0 - SV_MARGIN {
            b.scale_mut((1.0 - SV_MARGIN) / smax);
        }
        let mut amp = vec![ZERO; n];
        if self.full {
            for a in amp.iter_mut() {
                *a = take(x, &mut k);
            }
        } else {
            for a in amp.iter_mut().skip(m) {
                *a = take(x, &mut k);
            }
        }
        let mut y = CVec::zeros(2 * n);
        for i in 0..n {
            y[i] = amp[i].conj();
            y[n + i] = amp[i];
        }
        (b, y)
    }

    fn start(&self, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
        let dim = self.dim();
        let x0: Vec<f64> = (0..dim).map(|_| rng.gen_range(-0.35..0.35)).collect();
        let scale = vec![0.15; dim];
        (x0, scale)
    }
}

/// Penalized general path over raw `(B, Y)` blocks.
fn restart_general(
    ctx: &Ctx,
    pattern: &[u32],
    rng: &mut ChaCha8Rng,
) -> (Option<Candidate>, usize) {
    let exact = matches!(ctx.problem.mode, ConstraintMode::ExactCoefficients);
    let layout = GeneralLayout { m: ctx.m, d: pattern.len(), full: !exact };
    let heralded: Vec<usize> = (0..ctx.m).collect();
    let n_t: u32 = pattern.iter().sum();
    let cap = n_t as usize;

    // Evaluates (probability, violation); `None` for broken points.
    let eval = |x: &[f64]| -> Option<(f64, f64)> {
        let (b, y) = layout.build(x);
        let bdata = BData::from_pure_parts(b, y, &heralded).ok()?;
        let p = probability_checked(&bdata, pattern)?;
        let coeffs = fock_coefficients(&bdata, pattern, cap).ok()?;
        let violation = if exact {
            let mut ov = ZERO;
            for (key, c) in &coeffs {
                let multi: Vec<usize> = key.iter().map(|&v| v as usize).collect();
                ov += ctx.core.get(&multi).conj() * c;
            }
            1.0 - ov.norm_sqr().min(1.0)
        } else {
            let ConstraintMode::FidelityFloor(phi) = ctx.problem.mode else {
                unreachable!()
            };
            let bdata2 = {
                let (b, y) = layout.build(x);
                BData::from_pure_parts(b, y, &heralded).ok()?
            };
            let gate = extract_gate(&bdata2).ok()?;
            let core = fock_vector_from_coeffs(ctx.m, &coeffs).ok()?;
            let fid =
                fock_fidelity(&core, Some(&gate), ctx.core, ctx.problem.target.gate.as_ref())
                    .ok()?;
            (phi - fid).max(0.0)
        };
        Some((p, violation))
    };
    // Violation enters the objective through the smoother phase-free
    // overlap gap in exact mode.
    let penalty_measure = |x: &[f64]| -> Option<(f64, f64)> {
        let (p, violation) = eval(x)?;
        let gap = if exact {
            // 2(1 − |⟨t|c⟩|) = min over phase of Σ|c − e^{iθ}t|².
            2.0 * (1.0 - (1.0 - violation).max(0.0).sqrt())
        } else {
            violation * violation
        };
        Some((p, gap))
    };

    let (mut x, scale) = layout.start(rng);
    let mut weight = ctx.problem.config.penalty_weight;
    let mut iterations = 0usize;
    let feas_tol = 1e-8;
    for _round in 0..6 {
        let mut objective = |x: &[f64]| -> f64 {
            match penalty_measure(x) {
                Some((p, gap)) => -p + weight * gap,
                None => 1e6,
            }
        };
        let out = minimize(&mut objective, &x, &scale, &nm_options(ctx));
        iterations += out.iterations;
        x = out.x;
        match eval(&x) {
            Some((_, v)) if v <= feas_tol => break,
            _ => weight *= 2.0,
        }
    }

    // Feasibility restoration: when the constraint is close but not
    // closed, descend on the violation alone.
    if let Some((_, v)) = eval(&x) {
        if v > 1e-10 && v < 1e-3 {
            let mut objective = |x: &[f64]| -> f64 {
                match penalty_measure(x) {
                    Some((_, gap)) => gap,
                    None => 1e6,
                }
            };
            let opts = NmOptions { max_iters: 300, ..NmOptions::default() };
            let tight = vec![1e-3; scale.len()];
            let out = minimize(&mut objective, &x, &tight, &opts);
            iterations += out.iterations;
            if let (Some((_, v_new)), Some((_, v_old))) = (eval(&out.x), eval(&x)) {
                if v_new < v_old {
                    x = out.x;
                }
            }
        }
    }

    let cand = eval(&x).map(|(p, violation)| {
        let (b, y) = layout.build(&x);
        candidate(b, y, p, violation)
    });
    (cand, iterations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::targets::{noon, w_state, weak_cubic};
    use crate::fock::FockVector;

    fn single_photon_core() -> FockVector {
        FockVector::single_mode(&[ZERO, C64::new(1.0, 0.0)]).unwrap()
    }

    fn quick_config(restarts: usize, max_iters: usize) -> OptimizerConfig {
        OptimizerConfig { restarts, max_iters, ..OptimizerConfig::default() }
    }

    #[test]
    fn heralds_single_photon_at_quarter_probability() {
        let problem = OptimizationProblem {
            n_modes: 2,
            target: TargetSpec::from_core(single_photon_core()),
            patterns: Vec::new(),
            mode: ConstraintMode::ExactCoefficients,
            config: quick_config(16, 600),
        };
        let result = optimize(&problem).unwrap();
        assert_eq!(result.pattern, vec![1]);
        assert!(
            (result.probability - 0.25).abs() < 1e-7,
            "P = {}",
            result.probability
        );
        assert!(result.fidelity > 1.0 - 1e-9, "F = {}", result.fidelity);
        assert!(result.violation <= 1e-9);
        assert_eq!(result.trace.len(), 16);
        // Preparation needs two equally squeezed inputs: a two-mode
        // squeezed pair.
        assert_eq!(result.circuit.n_modes, 2);
    }

    #[test]
    fn equal_superposition_family_reaches_quarter() {
        let problem = OptimizationProblem {
            n_modes: 5,
            target: TargetSpec::from_core(w_state(4, 1).unwrap()),
            patterns: Vec::new(),
            mode: ConstraintMode::ExactCoefficients,
            config: quick_config(12, 500),
        };
        let result = optimize(&problem).unwrap();
        assert_eq!(result.pattern, vec![1]);
        assert!(
            (result.probability - 0.25).abs() < 1e-6,
            "P = {}",
            result.probability
        );
        assert!(result.fidelity > 1.0 - 1e-8);
        assert_eq!(result.trace[0].strategy, "w");
    }

    #[test]
    fn path_entangled_pair_reaches_one_sixteenth() {
        let problem = OptimizationProblem::new(
            4,
            TargetSpec::from_core(noon(2, 2).unwrap()),
            ConstraintMode::ExactCoefficients,
        )
        .with_pattern_counts(&[vec![1, 1]])
        .unwrap();
        let problem = OptimizationProblem { config: quick_config(12, 500), ..problem };
        let result = optimize(&problem).unwrap();
        assert!(
            (result.probability - 1.0 / 16.0).abs() < 1e-6,
            "P = {}",
            result.probability
        );
        assert!(result.fidelity > 1.0 - 1e-8, "F = {}", result.fidelity);
        assert_eq!(result.trace[0].strategy, "noon");
    }

    #[test]
    fn gate_absorption_leaves_probability_invariant() {
        let base = OptimizationProblem {
            n_modes: 2,
            target: TargetSpec::from_core(single_photon_core()),
            patterns: Vec::new(),
            mode: ConstraintMode::ExactCoefficients,
            config: quick_config(10, 500),
        };
        let plain = optimize(&base).unwrap();

        let gate = GaussianUnitary {
            kappa: CMat::from_element(1, 1, C64::from_polar(1.0, 0.4)),
            squeezes: vec![0.3],
            displacement: vec![C64::new(0.2, -0.1)],
        };
        let gated = OptimizationProblem {
            target: TargetSpec { gate: Some(gate), core: single_photon_core() },
            ..base
        };
        let with_gate = optimize(&gated).unwrap();

        assert!(
            (plain.probability - with_gate.probability).abs() < 1e-8,
            "{} vs {}",
            plain.probability,
            with_gate.probability
        );
        assert!(with_gate.fidelity > 1.0 - 1e-7, "F = {}", with_gate.fidelity);
        // The circuit differs: the gated result carries the displacement.
        let disp: f64 = with_gate
            .circuit
            .displacements
            .iter()
            .map(|a| a.norm())
            .sum();
        assert!(disp > 0.05);
    }

    #[test]
    fn general_path_matches_closed_form_band() {
        let problem = OptimizationProblem {
            n_modes: 2,
            target: TargetSpec::from_core(single_photon_core()),
            patterns: Vec::new(),
            mode: ConstraintMode::ExactCoefficients,
            config: OptimizerConfig {
                restarts: 12,
                max_iters: 500,
                force_general: true,
                ..OptimizerConfig::default()
            },
        };
        let result = optimize(&problem).unwrap();
        assert_eq!(result.trace[0].strategy, "general");
        assert!(
            result.probability >= 0.25 - 1e-4 && result.probability <= 0.25 + 1e-9,
            "P = {}",
            result.probability
        );
        assert!(result.fidelity > 1.0 - 1e-6, "F = {}", result.fidelity);
    }

    #[test]
    fn cubic_pattern_search_finds_exact_core() {
        let problem = OptimizationProblem {
            n_modes: 3,
            target: TargetSpec::from_core(weak_cubic(0.2, 3).unwrap()),
            patterns: Vec::new(),
            mode: ConstraintMode::ExactCoefficients,
            config: quick_config(10, 400),
        };
        let result = optimize(&problem).unwrap();
        assert!(
            result.pattern == vec![1, 2] || result.pattern == vec![2, 1],
            "pattern {:?}",
            result.pattern
        );
        assert!(result.fidelity > 1.0 - 1e-6, "F = {}", result.fidelity);
        assert!(
            result.probability > 0.02 && result.probability < 0.09,
            "P = {}",
            result.probability
        );
    }

    #[test]
    fn floor_mode_two_mode_family_meets_published_row() {
        // Small even-parity coherent superposition: the published optimum
        // for two photons detected is P ≈ 18.12 % at fidelity ≈ 1.
        let target = crate::fock::targets::cat(0.25, false, 16).unwrap();
        let problem = OptimizationProblem {
            n_modes: 2,
            target: TargetSpec::from_core(target),
            patterns: vec![DetectionPattern::new(vec![1], vec![2]).unwrap()],
            mode: ConstraintMode::FidelityFloor(0.99975),
            config: quick_config(12, 600),
        };
        let result = optimize(&problem).unwrap();
        assert!(result.fidelity >= 0.99975 - 1e-9, "F = {}", result.fidelity);
        assert!(
            (result.probability - 0.1812).abs() < 1.5e-3,
            "P = {}",
            result.probability
        );
    }

    #[test]
    fn exact_mode_rejects_wrong_pattern_total() {
        let problem = OptimizationProblem::new(
            2,
            TargetSpec::from_core(single_photon_core()),
            ConstraintMode::ExactCoefficients,
        )
        .with_pattern_counts(&[vec![2]])
        .unwrap();
        assert!(matches!(optimize(&problem), Err(Error::Validation(_))));
    }

    #[test]
    fn floor_mode_requires_explicit_patterns() {
        let problem = OptimizationProblem::new(
            2,
            TargetSpec::from_core(single_photon_core()),
            ConstraintMode::FidelityFloor(0.9),
        );
        assert!(matches!(optimize(&problem), Err(Error::Validation(_))));
    }

    #[test]
    fn enumerate_patterns_counts_and_caps() {
        assert_eq!(enumerate_patterns(3, 2, 200).len(), 4);
        assert_eq!(enumerate_patterns(4, 3, 200).len(), 15);
        assert_eq!(enumerate_patterns(10, 4, 20).len(), 20);
        assert_eq!(enumerate_patterns(2, 1, 200), vec![vec![2]]);
        for p in enumerate_patterns(5, 3, 1000) {
            assert_eq!(p.iter().sum::<u32>(), 5);
        }
    }

    #[test]
    fn conjecture_dimension_values() {
        assert_eq!(conjecture_dimension(2), 2);
        assert_eq!(conjecture_dimension(3), 5);
        assert_eq!(conjecture_dimension(4), 9);
        assert_eq!(conjecture_dimension(6), 20);
    }

    #[test]
    fn oversized_target_fails_fast_on_general_path() {
        // Five photons on two modes exceeds the expected reach (2), and
        // no analytic family covers the pattern [5].
        let mut coeffs = vec![ZERO; 6];
        coeffs[5] = C64::new(1.0, 0.0);
        let problem = OptimizationProblem::new(
            2,
            TargetSpec::from_core(FockVector::single_mode(&coeffs).unwrap()),
            ConstraintMode::ExactCoefficients,
        );
        assert!(matches!(optimize(&problem), Err(Error::Validation(_))));
    }
}
