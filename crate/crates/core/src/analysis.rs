//! Output-entropy minimization over pure states and the numerical
//! verification harness.
//!
//! The infimum of `S(Ψ(x))` over states is attained on pure states
//! (concavity of `S`), so every search runs on the unit sphere of `C^d`.
//! Descent is Riemannian gradient descent with Armijo backtracking and
//! normalization as the retraction. Restarts run in parallel, each from
//! its own RNG stream, and are reduced by (value, index), so results do
//! not depend on scheduling.

use nalgebra::DVector;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::channels::{
    compose, depolarizing, mixture_of_unitaries, phase_damping, qubit_factorize, schur_matrix,
    tensor, tensor_power, DepolarizingParams, KrausChannel, MixtureWeights, PhaseDampingParams,
    PauliQubitParams, CP_TOL,
};
use crate::entropy::{entropy_of_matrix, relative_entropy, subnormalized_entropy};
use crate::error::{QchanError, Result};
use crate::group_reps::{
    conditional_expectation, family_mixture, fixed_point_resolution, is_prime, SubgroupFamily,
    WeylElement, WeylSystem,
};
use crate::numerics::{
    clamp_eigenvalue, hermitian_eig, partial_trace, ComplexMatrix, Side, CLAMP_TOL, C64,
};
use crate::report::PropositionReport;
use crate::states::{
    density_from_matrix, pure_to_density, random_density_with, random_isometry_with,
    random_pure_with, random_simplex_with, rng_for, DensityMatrix, PureState,
};

/// Eigenvalue floor inside the logarithm of the entropy gradient.
pub const SPECTRUM_FLOOR: f64 = 1e-14;
/// Step for central finite differences.
pub const FD_STEP: f64 = 1e-5;
/// Optimizer-limited equality claims.
pub const EQUALITY_TOL: f64 = 1e-5;
/// Arithmetic-limited inequality claims.
pub const INEQUALITY_TOL: f64 = 1e-9;
/// Exact algebraic identities.
pub const IDENTITY_TOL: f64 = 1e-11;

const STREAM_BLOCK: u64 = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub armijo: f64,
    pub shrink: f64,
    pub initial_step: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            restarts: 20,
            max_iter: 500,
            tol: 1e-9,
            armijo: 1e-4,
            shrink: 0.5,
            initial_step: 1.0,
        }
    }
}

impl OptimizerConfig {
    pub fn with_restarts(restarts: usize) -> Self {
        Self {
            restarts,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, why: &str| Err(QchanError::Usage(format!("{field} {why}")));
        if self.restarts < 1 {
            return bad("restarts", "must be >= 1");
        }
        if self.max_iter < 1 {
            return bad("max_iter", "must be >= 1");
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return bad("tol", "must be a positive finite number");
        }
        if !(self.armijo > 0.0 && self.armijo < 1.0) {
            return bad("armijo", "must lie in (0, 1)");
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return bad("shrink", "must lie in (0, 1)");
        }
        if !(self.initial_step > 0.0 && self.initial_step.is_finite()) {
            return bad("initial_step", "must be a positive finite number");
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct OptimizationResult {
    pub value: f64,
    pub argmin: PureState,
    pub restarts_used: usize,
    /// Iterations taken by each restart, in start order.
    pub iterations: Vec<usize>,
    /// Whether the best restart reached the gradient tolerance.
    pub converged: bool,
    pub gradient_norm_final: f64,
    pub best_restart: usize,
    /// Set when the spectrum floor was active at the best point.
    pub regularized: bool,
}

impl OptimizationResult {
    pub fn summary(&self) -> serde_json::Value {
        json!({
            "value": self.value,
            "restarts_used": self.restarts_used,
            "best_restart": self.best_restart,
            "iterations": self.iterations,
            "converged": self.converged,
            "gradient_norm_final": self.gradient_norm_final,
            "regularized": self.regularized,
        })
    }
}

/// Smooth objective on the unit sphere, minimized by [`minimize`].
#[derive(Clone, Copy)]
enum Objective<'a> {
    /// `S(c(ψψ†))`.
    Entropy(&'a KrausChannel),
    /// `−Tr(c(ψψ†)^p)`.
    NegPower(&'a KrausChannel, f64),
}

struct Evaluation {
    value: f64,
    /// Riemannian gradient.
    gradient: DVector<C64>,
    regularized: bool,
}

impl Objective<'_> {
    fn channel(&self) -> &KrausChannel {
        match self {
            Objective::Entropy(c) | Objective::NegPower(c, _) => c,
        }
    }

    fn value(&self, psi: &DVector<C64>) -> Result<f64> {
        let out = self.channel().apply_matrix(&ComplexMatrix::outer(psi));
        match *self {
            Objective::Entropy(_) => entropy_of_matrix(&out),
            Objective::NegPower(_, p) => {
                let eig = hermitian_eig(&out)?;
                let mut acc = 0.0;
                for &l in &eig.eigenvalues {
                    acc += clamp_eigenvalue(l, CLAMP_TOL)?.powf(p);
                }
                Ok(-acc)
            }
        }
    }

    fn evaluate(&self, psi: &DVector<C64>) -> Result<Evaluation> {
        let c = self.channel();
        let out = c.apply_matrix(&ComplexMatrix::outer(psi));
        let eig = hermitian_eig(&out)?;
        let mut regularized = false;
        let (value, weight, scale) = match *self {
            Objective::Entropy(_) => {
                let mut s = 0.0;
                let mut logs = Vec::with_capacity(eig.dim());
                for &l in &eig.eigenvalues {
                    let lc = clamp_eigenvalue(l, CLAMP_TOL)?;
                    s -= crate::numerics::xlogx(lc);
                    if l < SPECTRUM_FLOOR {
                        regularized = true;
                    }
                    logs.push(l.max(SPECTRUM_FLOOR).ln() + 1.0);
                }
                (s, eig.with_spectrum(&logs), -2.0)
            }
            Objective::NegPower(_, p) => {
                let mut acc = 0.0;
                let mut pows = Vec::with_capacity(eig.dim());
                for &l in &eig.eigenvalues {
                    let lc = clamp_eigenvalue(l, CLAMP_TOL)?;
                    acc += lc.powf(p);
                    pows.push(lc.powf(p - 1.0));
                }
                (-acc, eig.with_spectrum(&pows), -2.0 * p)
            }
        };
        let pulled = c.adjoint_apply_matrix(&weight);
        let euclid = (pulled.inner() * psi) * C64::new(scale, 0.0);
        let radial = psi.dotc(&euclid).re;
        let gradient = euclid - psi * C64::new(radial, 0.0);
        Ok(Evaluation {
            value,
            gradient,
            regularized,
        })
    }
}

struct RestartOutcome {
    value: f64,
    point: DVector<C64>,
    iterations: usize,
    converged: bool,
    gradient_norm: f64,
    regularized: bool,
}

fn descend(obj: Objective<'_>, start: DVector<C64>, cfg: &OptimizerConfig) -> Result<RestartOutcome> {
    let mut psi = start.normalize();
    let mut eval = obj.evaluate(&psi)?;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iter {
        let gnorm = eval.gradient.norm();
        if gnorm < cfg.tol {
            converged = true;
            break;
        }
        let mut step = cfg.initial_step;
        let mut accepted = None;
        while step > 1e-20 {
            let candidate = (&psi - &eval.gradient * C64::new(step, 0.0)).normalize();
            let v = obj.value(&candidate)?;
            if v <= eval.value - cfg.armijo * step * gnorm * gnorm {
                accepted = Some(candidate);
                break;
            }
            step *= cfg.shrink;
        }
        iterations += 1;
        match accepted {
            Some(next) => {
                psi = next;
                eval = obj.evaluate(&psi)?;
            }
            // no decrease available at machine precision
            None => break,
        }
    }
    let gradient_norm = eval.gradient.norm();
    converged |= gradient_norm < cfg.tol;
    Ok(RestartOutcome {
        value: eval.value,
        point: psi,
        iterations,
        converged,
        gradient_norm,
        regularized: eval.regularized,
    })
}

/// Values closer than this are treated as the same minimum.
const VALUE_TIE: f64 = 1e-12;

/// Runs one descent per start (random starts first, then `extra_starts`)
/// and keeps the lowest value. Among starts within `VALUE_TIE` of it a
/// converged one wins, then the earliest.
fn minimize(
    obj: Objective<'_>,
    cfg: &OptimizerConfig,
    seed: u64,
    stream_base: u64,
    extra_starts: Vec<DVector<C64>>,
) -> Result<OptimizationResult> {
    cfg.validate()?;
    let dim = obj.channel().dim();
    let mut starts: Vec<DVector<C64>> = (0..cfg.restarts)
        .map(|r| {
            let mut rng = rng_for(seed, stream_base + r as u64);
            random_pure_with(dim, &mut rng).amplitudes().clone()
        })
        .collect();
    starts.extend(extra_starts);

    let outcomes: Vec<Result<RestartOutcome>> = starts
        .into_par_iter()
        .map(|s| descend(obj, s, cfg))
        .collect();
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;
    let lowest = outcomes.iter().map(|o| o.value).fold(f64::INFINITY, f64::min);
    let (best, top) = outcomes
        .iter()
        .enumerate()
        .filter(|(_, o)| o.value <= lowest + VALUE_TIE)
        .min_by_key(|(i, o)| (!o.converged, *i))
        .expect("at least one start");
    let argmin = PureState::normalized(top.point.clone())?;
    // report the value recomputed at the returned point
    let value = obj.value(argmin.amplitudes())?;
    Ok(OptimizationResult {
        value,
        argmin,
        restarts_used: outcomes.len(),
        iterations: outcomes.iter().map(|o| o.iterations).collect(),
        converged: top.converged,
        gradient_norm_final: top.gradient_norm,
        best_restart: best,
        regularized: top.regularized,
    })
}

fn check_dim(c: &KrausChannel, psi: &PureState) -> Result<()> {
    if c.dim() != psi.dim() {
        return Err(QchanError::Usage(format!(
            "state dim {} does not match channel dim {}",
            psi.dim(),
            c.dim()
        )));
    }
    Ok(())
}

/// `S(c(|ψ⟩⟨ψ|))` in nats.
pub fn output_entropy(c: &KrausChannel, psi: &PureState) -> Result<f64> {
    check_dim(c, psi)?;
    Objective::Entropy(c).value(psi.amplitudes())
}

#[derive(Clone, Debug)]
pub struct EntropyGradient {
    pub gradient: DVector<C64>,
    pub norm: f64,
    /// The spectrum floor was applied.
    pub regularized: bool,
}

/// Riemannian gradient of `ψ ↦ S(c(ψψ†))`:
/// `−2 (Gψ − ⟨ψ, Gψ⟩ψ)` with `G = c†(log c(ψψ†) + I)`.
pub fn entropy_gradient(c: &KrausChannel, psi: &PureState) -> Result<EntropyGradient> {
    check_dim(c, psi)?;
    let e = Objective::Entropy(c).evaluate(psi.amplitudes())?;
    Ok(EntropyGradient {
        norm: e.gradient.norm(),
        gradient: e.gradient,
        regularized: e.regularized,
    })
}

/// Central differences of `ψ ↦ S(c(ψ'ψ'†))`, `ψ' = normalize(ψ ± h e)`,
/// along the `2d` real coordinates; returned as a complex vector.
pub fn finite_difference_gradient(c: &KrausChannel, psi: &PureState, h: f64) -> Result<DVector<C64>> {
    check_dim(c, psi)?;
    let obj = Objective::Entropy(c);
    let base = psi.amplitudes();
    let mut out = DVector::zeros(base.len());
    for i in 0..base.len() {
        let mut parts = [0.0; 2];
        for (k, dir) in [C64::new(h, 0.0), C64::new(0.0, h)].into_iter().enumerate() {
            let mut plus = base.clone();
            plus[i] += dir;
            let mut minus = base.clone();
            minus[i] -= dir;
            parts[k] = (obj.value(&plus.normalize())? - obj.value(&minus.normalize())?) / (2.0 * h);
        }
        out[i] = C64::new(parts[0], parts[1]);
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct GradientCheck {
    pub analytic_norm: f64,
    pub finite_difference_norm: f64,
    pub absolute_error: f64,
    /// `absolute_error / max(analytic_norm, 1e-8)`.
    pub relative_error: f64,
}

pub fn gradient_check(c: &KrausChannel, psi: &PureState) -> Result<GradientCheck> {
    let g = entropy_gradient(c, psi)?;
    let fd = finite_difference_gradient(c, psi, FD_STEP)?;
    let absolute_error = (&g.gradient - &fd).norm();
    Ok(GradientCheck {
        analytic_norm: g.norm,
        finite_difference_norm: fd.norm(),
        absolute_error,
        relative_error: absolute_error / g.norm.max(1e-8),
    })
}

/// Minimal output entropy (nats) over pure inputs.
pub fn min_output_entropy(c: &KrausChannel, cfg: &OptimizerConfig, seed: u64) -> Result<OptimizationResult> {
    minimize(Objective::Entropy(c), cfg, seed, 0, Vec::new())
}

#[derive(Clone, Debug, Serialize)]
pub struct AdditivityReport {
    pub s_min_a: f64,
    pub s_min_b: f64,
    pub s_min_joint: f64,
    /// `s_min_joint − (s_min_a + s_min_b)`.
    pub gap: f64,
    pub tolerance: f64,
    pub restarts: usize,
    pub seed: u64,
    /// Squared Schmidt coefficients of the joint minimizer.
    pub schmidt_weights: Vec<f64>,
    pub converged: [bool; 3],
}

impl AdditivityReport {
    pub fn to_report(&self, claim_id: &str) -> PropositionReport {
        PropositionReport::equality(claim_id, self.s_min_joint, self.s_min_a + self.s_min_b, self.tolerance)
            .with_witness(json!({
                "s_min_a": self.s_min_a,
                "s_min_b": self.s_min_b,
                "s_min_joint": self.s_min_joint,
                "gap": self.gap,
                "restarts": self.restarts,
                "schmidt_weights": self.schmidt_weights,
                "converged": self.converged,
            }))
            .with_seed(self.seed)
    }
}

/// Compares `s_min(a ⊗ b)` with `s_min(a) + s_min(b)`. The joint search
/// also starts from the product of the individual minimizers.
pub fn check_additivity(
    a: &KrausChannel,
    b: &KrausChannel,
    cfg: &OptimizerConfig,
    seed: u64,
) -> Result<AdditivityReport> {
    let ab = tensor(a, b)?;
    let ra = minimize(Objective::Entropy(a), cfg, seed, 0, Vec::new())?;
    let rb = minimize(Objective::Entropy(b), cfg, seed, STREAM_BLOCK, Vec::new())?;
    let product = ra.argmin.tensor(&rb.argmin).amplitudes().clone();
    let rj = minimize(Objective::Entropy(&ab), cfg, seed, 2 * STREAM_BLOCK, vec![product])?;
    let schmidt_weights = rj.argmin.schmidt_weights(a.dim(), b.dim())?;
    Ok(AdditivityReport {
        s_min_a: ra.value,
        s_min_b: rb.value,
        s_min_joint: rj.value,
        gap: rj.value - (ra.value + rb.value),
        tolerance: EQUALITY_TOL,
        restarts: cfg.restarts,
        seed,
        schmidt_weights,
        converged: [ra.converged, rb.converged, rj.converged],
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct MultiplicativityReport {
    pub p: f64,
    pub norm_a: f64,
    pub norm_b: f64,
    pub norm_joint: f64,
    /// `‖a ⊗ b‖_p − ‖a‖_p ‖b‖_p`.
    pub deviation: f64,
    pub tolerance: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl MultiplicativityReport {
    pub fn to_report(&self, claim_id: &str) -> PropositionReport {
        PropositionReport::equality(claim_id, self.norm_joint, self.norm_a * self.norm_b, self.tolerance)
            .with_witness(json!({
                "p": self.p,
                "norm_a": self.norm_a,
                "norm_b": self.norm_b,
                "norm_joint": self.norm_joint,
                "deviation": self.deviation,
                "restarts": self.restarts,
            }))
            .with_seed(self.seed)
    }
}

/// `‖c‖_p = (max_ψ Tr c(ψψ†)^p)^{1/p}` by the same restart optimizer.
pub fn output_p_norm(c: &KrausChannel, p: f64, cfg: &OptimizerConfig, seed: u64) -> Result<(f64, OptimizationResult)> {
    check_exponent(p)?;
    let r = minimize(Objective::NegPower(c, p), cfg, seed, 0, Vec::new())?;
    Ok(((-r.value).powf(1.0 / p), r))
}

fn check_exponent(p: f64) -> Result<()> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(QchanError::Usage(format!("p-norm exponent must be a finite p > 1, got {p}")));
    }
    Ok(())
}

pub fn check_multiplicativity(
    a: &KrausChannel,
    b: &KrausChannel,
    p: f64,
    cfg: &OptimizerConfig,
    seed: u64,
) -> Result<MultiplicativityReport> {
    check_exponent(p)?;
    let ab = tensor(a, b)?;
    let ra = minimize(Objective::NegPower(a, p), cfg, seed, 0, Vec::new())?;
    let rb = minimize(Objective::NegPower(b, p), cfg, seed, STREAM_BLOCK, Vec::new())?;
    let product = ra.argmin.tensor(&rb.argmin).amplitudes().clone();
    let rj = minimize(Objective::NegPower(&ab, p), cfg, seed, 2 * STREAM_BLOCK, vec![product])?;
    let norm = |v: f64| (-v).max(0.0).powf(1.0 / p);
    let (norm_a, norm_b, norm_joint) = (norm(ra.value), norm(rb.value), norm(rj.value));
    Ok(MultiplicativityReport {
        p,
        norm_a,
        norm_b,
        norm_joint,
        deviation: norm_joint - norm_a * norm_b,
        tolerance: EQUALITY_TOL,
        restarts: cfg.restarts,
        seed,
    })
}

/// `−Σ λ log λ` in nats.
pub fn shannon_entropy(weights: &[f64]) -> f64 {
    -weights.iter().map(|&w| crate::numerics::xlogx(w)).sum::<f64>()
}

/// `(Φ ⊗ Id_K)(x)` for `x` on `C^l ⊗ C^{dim_k}`.
fn apply_on_left(c: &KrausChannel, x: &ComplexMatrix, dim_k: usize) -> Result<ComplexMatrix> {
    let ext = tensor(c, &KrausChannel::identity(dim_k))?;
    Ok(ext.apply_matrix(x))
}

fn split_dim(x: &DensityMatrix, l: usize) -> Result<usize> {
    if l < 2 || !x.dim().is_multiple_of(l) {
        return Err(QchanError::Usage(format!(
            "state of dim {} is not on C^{l} ⊗ K",
            x.dim()
        )));
    }
    Ok(x.dim() / l)
}

fn simplex(name: &str, w: &[f64], n: usize) -> Result<()> {
    if w.len() != n {
        return Err(QchanError::Validation(format!("{name} needs {n} weights, got {}", w.len())));
    }
    crate::states::check_simplex(w).map_err(|e| QchanError::Validation(format!("{name}: {e}")))
}

/// Mixture over the whole Weyl group with `μ(s ⊕ k) = λ_k ε_s`: the coset
/// of the phase `0 ⊕ k` carries `λ_k`, spread over the shifts by `ε`.
pub fn coset_product_mixture(l: usize, lambda: &[f64], epsilon: &[f64]) -> Result<KrausChannel> {
    simplex("lambda", lambda, l)?;
    simplex("epsilon", epsilon, l)?;
    let weyl = WeylSystem::new(l);
    let mut weights = Vec::with_capacity(l * l);
    let mut unitaries = Vec::with_capacity(l * l);
    for s in 0..l {
        for k in 0..l {
            weights.push(lambda[k] * epsilon[s]);
            unitaries.push(weyl.unitary(WeylElement::new(s, k)).clone());
        }
    }
    mixture_of_unitaries(&MixtureWeights::new(weights)?, &unitaries)
}

/// `S((Φ ⊗ Id)(x)) ≥ S(Σ_k λ_k (U_{0⊕k} ⊗ I) x (U_{0⊕k} ⊗ I)†)` for the
/// mixture of [`coset_product_mixture`].
pub fn verify_prop1(l: usize, lambda: &[f64], epsilon: &[f64], x: &DensityMatrix) -> Result<PropositionReport> {
    let dim_k = split_dim(x, l)?;
    let phi = coset_product_mixture(l, lambda, epsilon)?;
    let weyl = WeylSystem::new(l);
    let cosets = family_mixture(&SubgroupFamily::g1(&weyl), lambda)?;
    let lhs = entropy_of_matrix(&apply_on_left(&phi, x.matrix(), dim_k)?)?;
    let rhs = entropy_of_matrix(&apply_on_left(&cosets, x.matrix(), dim_k)?)?;
    Ok(PropositionReport::inequality("prop1", lhs, rhs, INEQUALITY_TOL)
        .with_witness(json!({ "l": l, "dim_k": dim_k, "lambda": lambda, "epsilon": epsilon })))
}

/// `S((Φ ⊗ Id)(x)) ≥ H(λ) + Σ_k S(Tr_H((P_k ⊗ I) Ẽ(x))) − log l` with
/// `Φ = Σ λ_k Ad U_{g_k}` over the family, `Ẽ` its average tensored with
/// the identity and `P_k` the rank-one projections generating its
/// fixed-point algebra.
pub fn verify_prop2(family: &SubgroupFamily, lambda: &[f64], x: &DensityMatrix) -> Result<PropositionReport> {
    let l = family.l();
    let dim_k = split_dim(x, l)?;
    simplex("lambda", lambda, l)?;
    let resolution = fixed_point_resolution(family)?;
    let phi = family_mixture(family, lambda)?;
    let lhs = entropy_of_matrix(&apply_on_left(&phi, x.matrix(), dim_k)?)?;
    let averaged = apply_on_left(&conditional_expectation(family), x.matrix(), dim_k)?;
    let mut blocks = Vec::with_capacity(l);
    for p in &resolution.projections {
        let pk = crate::numerics::tensor_product(p, &ComplexMatrix::identity(dim_k))?;
        let y = partial_trace(&(&pk * &averaged), l, dim_k, Side::Left)?;
        blocks.push(subnormalized_entropy(&y.hermitian_part())?);
    }
    let weight_entropy = shannon_entropy(lambda);
    let rhs = weight_entropy + blocks.iter().sum::<f64>() - (l as f64).ln();
    Ok(PropositionReport::inequality("prop2", lhs, rhs, INEQUALITY_TOL).with_witness(json!({
        "family": family.label(),
        "lambda": lambda,
        "weight_entropy": weight_entropy,
        "block_entropies": blocks,
    })))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Prop3Mode {
    /// Follows the subgroup-decomposition argument; needs `Tr_K x = I/l`.
    Constructive,
    /// Scans rank-one projections `P` with `Tr((P ⊗ I) x) = 1/l`.
    Search { random_candidates: usize },
}

/// `h(p, l) = −(1 − (l−1)p/l) log(1 − (l−1)p/l) − (l−1)(p/l) log(p/l)`.
pub fn depolarizing_entropy_constant(l: usize, p: f64) -> f64 {
    let lf = l as f64;
    let top = 1.0 - (lf - 1.0) * p / lf;
    -crate::numerics::xlogx(top) - (lf - 1.0) * crate::numerics::xlogx(p / lf)
}

/// `ρ = l Tr_H((|φ⟩⟨φ| ⊗ I) x)`.
fn conditional_block(x: &ComplexMatrix, phi: &DVector<C64>, l: usize, dim_k: usize) -> Result<ComplexMatrix> {
    let pk = crate::numerics::tensor_product(&ComplexMatrix::outer(phi), &ComplexMatrix::identity(dim_k))?;
    Ok(partial_trace(&(&pk * x), l, dim_k, Side::Left)?.hermitian_part().scale(l as f64))
}

/// `S((Φ ⊗ Id)(x)) ≥ h(p, l) + S(ρ)` for the depolarizing channel with
/// `ρ = l Tr_H((P ⊗ I) x)` for a suitable rank-one `P`.
pub fn verify_prop3(l: usize, p: f64, x: &DensityMatrix, mode: Prop3Mode, seed: u64) -> Result<PropositionReport> {
    if !is_prime(l) {
        return Err(QchanError::Usage(format!("prop3 needs prime l, got {l}")));
    }
    let dim_k = split_dim(x, l)?;
    let params = DepolarizingParams::new(l, p)?;
    let h = depolarizing_entropy_constant(l, p);
    let lhs = entropy_of_matrix(&apply_on_left(&depolarizing(&params), x.matrix(), dim_k)?)?;
    let marginal = partial_trace(x.matrix(), l, dim_k, Side::Right)?;
    let report = match mode {
        Prop3Mode::Constructive => {
            let defect = marginal.distance(&ComplexMatrix::identity(l).scale(1.0 / l as f64));
            if defect > 1e-8 {
                return Err(QchanError::Mode(format!(
                    "constructive mode needs Tr_K(x) = I/l (defect {defect:e}); use search mode"
                )));
            }
            let lf = l as f64;
            let mut lambda = vec![p / lf; l];
            lambda[0] = 1.0 - (lf - 1.0) * p / lf;
            let weyl = WeylSystem::new(l);
            let mut branch = Vec::with_capacity(l);
            for k in 0..l {
                let phi_k = family_mixture(&SubgroupFamily::g0k(&weyl, k), &lambda)?;
                branch.push(entropy_of_matrix(&apply_on_left(&phi_k, x.matrix(), dim_k)?)?);
            }
            let k_star = argmin(&branch);
            let family = SubgroupFamily::g0k(&weyl, k_star);
            let resolution = fixed_point_resolution(&family)?;
            let mut blocks = Vec::with_capacity(l);
            for proj in &resolution.projections {
                let phi = principal_vector(proj)?;
                blocks.push(entropy_of_matrix(&conditional_block(x.matrix(), &phi, l, dim_k)?)?);
            }
            let j0 = argmin(&blocks);
            PropositionReport::inequality("prop3", lhs, h + blocks[j0], INEQUALITY_TOL).with_witness(json!({
                "mode": "constructive",
                "l": l,
                "p": p,
                "h": h,
                "branch_entropies": branch,
                "k_star": k_star,
                "block_entropies": blocks,
                "j0": j0,
                "rho_entropy": blocks[j0],
            }))
        }
        Prop3Mode::Search { random_candidates } => {
            let candidates = trace_compatible_vectors(&marginal, random_candidates, seed)?;
            let mut best: Option<(usize, f64)> = None;
            for (i, phi) in candidates.iter().enumerate() {
                let s = entropy_of_matrix(&conditional_block(x.matrix(), phi, l, dim_k)?)?;
                if best.is_none_or(|(_, b)| s < b) {
                    best = Some((i, s));
                }
            }
            let (idx, s_rho) = best.ok_or_else(|| QchanError::Numerical("no trace-compatible projection found".into()))?;
            PropositionReport::inequality("prop3", lhs, h + s_rho, INEQUALITY_TOL)
                .with_witness(json!({
                    "mode": "search",
                    "l": l,
                    "p": p,
                    "h": h,
                    "candidates": candidates.len(),
                    "best_candidate": idx,
                    "rho_entropy": s_rho,
                }))
                .with_seed(seed)
        }
    };
    Ok(report)
}

fn argmin(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| a.total_cmp(b).then(i.cmp(j)))
        .map(|(i, _)| i)
        .expect("nonempty")
}

/// Unit vector spanning a rank-one projection.
fn principal_vector(p: &ComplexMatrix) -> Result<DVector<C64>> {
    let eig = hermitian_eig(p)?;
    Ok(eig.eigenvector(eig.dim() - 1))
}

/// Unit vectors `φ` with `⟨φ|m|φ⟩ = 1/l` (within 1e-8): eigenvectors of
/// `m`, vectors from the Weyl subgroup bases, and points found by
/// bisection between random vectors and extremal eigenvectors.
fn trace_compatible_vectors(m: &ComplexMatrix, random: usize, seed: u64) -> Result<Vec<DVector<C64>>> {
    let l = m.dim();
    let target = 1.0 / l as f64;
    let f = |v: &DVector<C64>| v.dotc(&(m.inner() * v)).re - target;
    let mut out = Vec::new();
    let eig = hermitian_eig(m)?;
    for i in 0..l {
        out.push(eig.eigenvector(i));
    }
    let weyl = WeylSystem::new(l);
    let mut families: Vec<_> = (0..l).map(|k| SubgroupFamily::g0k(&weyl, k)).collect();
    families.push(SubgroupFamily::g1(&weyl));
    for fam in &families {
        if let Ok(res) = fixed_point_resolution(fam) {
            for p in &res.projections {
                out.push(principal_vector(p)?);
            }
        }
    }
    out.retain(|v| f(v).abs() <= 1e-8);

    let (lo, hi) = (eig.eigenvector(0), eig.eigenvector(l - 1));
    let mut rng = rng_for(seed, 3 * STREAM_BLOCK);
    for _ in 0..random {
        let start = random_pure_with(l, &mut rng).amplitudes().clone();
        let f0 = f(&start);
        let end = if f0 > 0.0 { &lo } else { &hi };
        let path = |t: f64| (&start * C64::new(1.0 - t, 0.0) + end * C64::new(t, 0.0)).normalize();
        let (mut a, mut b) = (0.0, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if (f(&path(mid)) > 0.0) == (f0 > 0.0) {
                a = mid;
            } else {
                b = mid;
            }
        }
        let v = path(0.5 * (a + b));
        if v.iter().all(|z| z.is_finite()) && f(&v).abs() <= 1e-8 {
            out.push(v);
        }
    }
    Ok(out)
}

/// Random state on `C^l ⊗ C^{dim_k}` whose `C^l` marginal is `I/l`:
/// the reduction of `(1/√l) Σ_i |i⟩ ⊗ V|i⟩` with `V` a random isometry
/// into `K ⊗ R`, `dim R = l`.
pub fn random_state_with_mixed_marginal<R: Rng>(l: usize, dim_k: usize, rng: &mut R) -> Result<DensityMatrix> {
    let env = l * dim_k;
    let v = random_isometry_with(env, l, rng);
    let n = l * env;
    let mut psi = DVector::<C64>::zeros(n);
    let amp = C64::new(1.0 / (l as f64).sqrt(), 0.0);
    for i in 0..l {
        for r in 0..env {
            psi[i * env + r] += amp * v[(r, i)];
        }
    }
    let pure = ComplexMatrix::outer(&psi);
    // order is H ⊗ K ⊗ R; trace out R
    let reduced = partial_trace(&pure, l * dim_k, l, Side::Right)?;
    density_from_matrix(reduced)
}

/// Random state of varying rank for instance batches.
fn random_instance_state<R: Rng>(dim: usize, index: usize, rng: &mut R) -> Result<DensityMatrix> {
    random_density_with(dim, 1 + index % dim, rng)
}

/// Runs `n` instances in parallel, instance `i` drawing from stream `i`.
fn batch<F>(n: usize, seed: u64, f: F) -> Result<Vec<PropositionReport>>
where
    F: Fn(usize, &mut rand_chacha::ChaCha20Rng) -> Result<PropositionReport> + Sync,
{
    let out: Vec<Result<PropositionReport>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(seed, i as u64);
            f(i, &mut rng)
        })
        .collect();
    out.into_iter().collect()
}

fn require_samples(n: usize) -> Result<()> {
    if n < 1 {
        return Err(QchanError::Usage("samples must be >= 1".into()));
    }
    Ok(())
}

fn worst(id: &str, reports: &[PropositionReport], seed: u64) -> PropositionReport {
    PropositionReport::worst_of(id, reports)
        .expect("nonempty batch")
        .with_seed(seed)
}

pub fn prop1_batch(l: usize, dim_k: usize, n: usize, seed: u64) -> Result<PropositionReport> {
    require_samples(n)?;
    let reports = batch(n, seed, |i, rng| {
        let lambda = random_simplex_with(l, rng);
        let epsilon = random_simplex_with(l, rng);
        let x = random_instance_state(l * dim_k, i, rng)?;
        verify_prop1(l, &lambda, &epsilon, &x)
    })?;
    Ok(worst("prop1", &reports, seed))
}

/// Families cycle through `G_{00} … G_{0,l−1}`, `G₁`.
pub fn prop2_batch(l: usize, dim_k: usize, n: usize, seed: u64) -> Result<PropositionReport> {
    require_samples(n)?;
    let weyl = WeylSystem::new(l);
    let reports = batch(n, seed, |i, rng| {
        let family = if i % (l + 1) == l {
            SubgroupFamily::g1(&weyl)
        } else {
            SubgroupFamily::g0k(&weyl, i % (l + 1))
        };
        let lambda = random_simplex_with(l, rng);
        let x = random_instance_state(l * dim_k, i, rng)?;
        verify_prop2(&family, &lambda, &x)
    })?;
    Ok(worst("prop2", &reports, seed))
}

/// Constructive mode on random states with maximally mixed marginal;
/// `p = None` draws `p` uniformly from `(0, 1]` per instance.
pub fn prop3_batch(l: usize, dim_k: usize, p: Option<f64>, n: usize, seed: u64) -> Result<PropositionReport> {
    require_samples(n)?;
    let reports = batch(n, seed, |_, rng| {
        let p = p.unwrap_or_else(|| 1.0 - rng.random::<f64>());
        let x = random_state_with_mixed_marginal(l, dim_k, rng)?;
        verify_prop3(l, p, &x, Prop3Mode::Constructive, seed)
    })?;
    Ok(worst("prop3", &reports, seed))
}

/// Search mode on unrestricted random states. Informational: the claim
/// for general states is probed, not established.
pub fn prop3_search_batch(l: usize, dim_k: usize, p: f64, n: usize, candidates: usize, seed: u64) -> Result<PropositionReport> {
    require_samples(n)?;
    let reports = batch(n, seed, |i, rng| {
        let x = random_instance_state(l * dim_k, i, rng)?;
        verify_prop3(l, p, &x, Prop3Mode::Search { random_candidates: candidates }, seed.wrapping_add(i as u64))
    })?;
    Ok(worst("prop3.search", &reports, seed))
}

#[derive(Clone, Debug, Serialize)]
pub struct Prop4Violation {
    pub q: Vec<f64>,
    pub min_eigenvalue: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConstantQCase {
    pub q: f64,
    pub min_eigenvalue: f64,
    /// `1 − Q`.
    pub expected: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Prop4Report {
    pub l: usize,
    pub samples: usize,
    /// Samples meeting `q_j ≤ q̄` for `1 ≤ j ≤ l−2`.
    pub accepted: usize,
    /// Minimum Schur eigenvalue over accepted samples.
    pub min_margin: f64,
    pub violations: Vec<Prop4Violation>,
    pub constant_q: Vec<ConstantQCase>,
    pub seed: u64,
}

impl Prop4Report {
    pub fn constant_q_pass(&self) -> bool {
        self.constant_q.iter().all(|c| c.pass)
    }

    pub fn to_report(&self) -> PropositionReport {
        let mut r = PropositionReport::inequality("prop4", self.min_margin, 0.0, CP_TOL);
        r.pass = r.pass && self.violations.is_empty() && self.constant_q_pass();
        r.with_witness(serde_json::to_value(self).expect("serializable")).with_seed(self.seed)
    }
}

/// `q_j ≤ (1 + Σ_{i=1}^{l−2} q_i)/(l − 1)` for `1 ≤ j ≤ l−2`.
pub fn prop4_condition(q: &[f64]) -> bool {
    let l = q.len() + 1;
    if l < 3 {
        return true;
    }
    let q_bar = (1.0 + q[..l - 2].iter().sum::<f64>()) / (l - 1) as f64;
    q[..l - 2].iter().all(|&qj| qj <= q_bar)
}

/// Samples `q ∈ [0,1]^{l−1}`, keeps those meeting the condition and tests
/// complete positivity through the smallest Schur eigenvalue. Also runs
/// the constant family `q_j = Q`, `Q ∈ {0, 0.1, …, 1}`.
pub fn verify_prop4(l: usize, samples: usize, seed: u64) -> Result<Prop4Report> {
    require_samples(samples)?;
    if l < 2 {
        return Err(QchanError::Usage(format!("l must be >= 2, got {l}")));
    }
    let draws: Vec<Result<Option<(Vec<f64>, f64)>>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(seed, i as u64);
            let q: Vec<f64> = (0..l - 1).map(|_| rng.random::<f64>()).collect();
            if !prop4_condition(&q) {
                return Ok(None);
            }
            let m = schur_matrix(&PhaseDampingParams::new(l, q.clone())?).min_eigenvalue;
            Ok(Some((q, m)))
        })
        .collect();
    let draws = draws.into_iter().collect::<Result<Vec<_>>>()?;
    let accepted: Vec<(Vec<f64>, f64)> = draws.into_iter().flatten().collect();
    let min_margin = accepted.iter().map(|(_, m)| *m).fold(f64::INFINITY, f64::min);
    let violations = accepted
        .iter()
        .filter(|(_, m)| *m < -CP_TOL)
        .map(|(q, m)| Prop4Violation {
            q: q.clone(),
            min_eigenvalue: *m,
        })
        .collect();
    let constant_q = (0..=10)
        .map(|i| {
            let q = i as f64 / 10.0;
            let m = schur_matrix(&PhaseDampingParams::new(l, vec![q; l - 1])?).min_eigenvalue;
            let expected = 1.0 - q;
            Ok(ConstantQCase {
                q,
                min_eigenvalue: m,
                expected,
                pass: m >= -CP_TOL && (m - expected).abs() <= 1e-12,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Prop4Report {
        l,
        samples,
        accepted: accepted.len(),
        min_margin,
        violations,
        constant_q,
        seed,
    })
}

#[derive(Clone, Debug)]
pub struct TheoremConfig {
    pub optimizer: OptimizerConfig,
    /// Random states per tensor power for the entropy comparison.
    pub states_per_power: usize,
    pub seed: u64,
}

impl Default for TheoremConfig {
    fn default() -> Self {
        Self {
            optimizer: OptimizerConfig::with_restarts(20),
            states_per_power: 50,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TheoremReport {
    pub checks: Vec<PropositionReport>,
    pub s_min_composed: f64,
    pub s_min_depolarizing: f64,
    pub additivity: AdditivityReport,
}

impl TheoremReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Checks for `Ξ = Ψ ∘ Φ` (phase damping after depolarizing):
/// basis projections keep their output entropy, `s_min(Ξ) = s_min(Φ)`,
/// `S(Ξ^{⊗n}(x)) ≥ S(Φ^{⊗n}(x))` for `n ∈ {1, 2}`, and additivity of
/// `Ξ ⊗ Ξ`.
pub fn verify_theorem(dep: &DepolarizingParams, damping: &PhaseDampingParams, cfg: &TheoremConfig) -> Result<TheoremReport> {
    let l = dep.l();
    if damping.l() != l {
        return Err(QchanError::Usage(format!(
            "phase damping acts on dim {} but depolarizing on {l}",
            damping.l()
        )));
    }
    let phi = depolarizing(dep);
    let xi = compose(&phase_damping(damping)?, &phi)?;
    let seed = cfg.seed;
    let mut checks = Vec::new();

    let mut worst_basis = 0.0f64;
    for j in 0..l {
        let q = PureState::basis(l, j);
        let d = (output_entropy(&xi, &q)? - output_entropy(&phi, &q)?).abs();
        worst_basis = worst_basis.max(d);
    }
    checks.push(PropositionReport::residual("theorem.basis_projections", worst_basis, IDENTITY_TOL));

    let r_xi = min_output_entropy(&xi, &cfg.optimizer, seed)?;
    let r_phi = min_output_entropy(&phi, &cfg.optimizer, seed)?;
    checks.push(
        PropositionReport::equality("theorem.s_min", r_xi.value, r_phi.value, 1e-6).with_witness(json!({
            "s_min_composed": r_xi.value,
            "s_min_depolarizing": r_phi.value,
            "closed_form": dep.pure_output_entropy(),
            "composed": r_xi.summary(),
        })),
    );

    for n in [1usize, 2] {
        let xi_n = tensor_power(&xi, n)?;
        let phi_n = tensor_power(&phi, n)?;
        let dim = xi_n.dim();
        let reports = batch(cfg.states_per_power.max(1), seed ^ (n as u64) << 32, |i, rng| {
            let x = if i % 2 == 0 {
                pure_to_density(&random_pure_with(dim, rng))
            } else {
                random_density_with(dim, 1 + i % dim, rng)?
            };
            let a = entropy_of_matrix(&xi_n.apply_matrix(x.matrix()))?;
            let b = entropy_of_matrix(&phi_n.apply_matrix(x.matrix()))?;
            Ok(PropositionReport::inequality("theorem.entropy_order", a, b, INEQUALITY_TOL))
        })?;
        checks.push(worst(&format!("theorem.entropy_order.n{n}"), &reports, seed));
    }

    let additivity = check_additivity(&xi, &xi, &cfg.optimizer, seed)?;
    checks.push(additivity.to_report("theorem.additivity"));
    Ok(TheoremReport {
        checks,
        s_min_composed: r_xi.value,
        s_min_depolarizing: r_phi.value,
        additivity,
    })
}

/// Random pair for the monotonicity suite; low ranks appear so that
/// infinite relative entropies are exercised.
fn random_pair<R: Rng>(dim: usize, index: usize, rng: &mut R) -> Result<(DensityMatrix, DensityMatrix)> {
    let r1 = 1 + index % dim;
    let r2 = 1 + (index / dim) % dim;
    Ok((random_density_with(dim, r1, rng)?, random_density_with(dim, r2, rng)?))
}

/// `S(ρ₁, ρ₂) − S(Ξρ₁, Ξρ₂)` on one pair; `+∞` when the input pair is
/// already unbounded.
pub fn monotonicity_margin(c: &KrausChannel, a: &DensityMatrix, b: &DensityMatrix) -> Result<PropositionReport> {
    let before = relative_entropy(a, b, Default::default())?;
    let after = relative_entropy(&c.apply(a)?, &c.apply(b)?, Default::default())?;
    let mut r = PropositionReport::inequality("monotonicity", before, after, INEQUALITY_TOL);
    if before.is_infinite() {
        r.margin = f64::INFINITY;
        r.pass = true;
    }
    Ok(r)
}

pub fn monotonicity_suite(c: &KrausChannel, pairs: usize, seed: u64) -> Result<PropositionReport> {
    require_samples(pairs)?;
    let dim = c.dim();
    let reports = batch(pairs, seed, |i, rng| {
        let (a, b) = random_pair(dim, i, rng)?;
        monotonicity_margin(c, &a, &b)
    })?;
    Ok(worst("monotonicity", &reports, seed))
}

/// `S(Ξ(ρ)) − S(ρ)` over random states; `c` must be unital.
pub fn entropy_increase_suite(c: &KrausChannel, states: usize, seed: u64) -> Result<PropositionReport> {
    require_samples(states)?;
    let report = c.structural_checks();
    if !report.unital {
        return Err(QchanError::Usage(format!(
            "entropy increase needs a unital channel (‖Φ(I) − I‖_F = {:e})",
            report.unitality_residual
        )));
    }
    let dim = c.dim();
    let reports = batch(states, seed, |i, rng| {
        let rho = random_instance_state(dim, i, rng)?;
        let before = entropy_of_matrix(rho.matrix())?;
        let after = entropy_of_matrix(&c.apply_matrix(rho.matrix()))?;
        Ok(PropositionReport::inequality("entropy_increase", after, before, INEQUALITY_TOL))
    })?;
    Ok(worst("entropy_increase", &reports, seed))
}

/// Resolution-of-identity residuals on `n` random states.
pub fn eq3_batch(l: usize, n: usize, seed: u64) -> Result<PropositionReport> {
    require_samples(n)?;
    let reports = batch(n, seed, |i, rng| {
        let x = random_instance_state(l, i, rng)?;
        crate::group_reps::resolution_of_identity_check(l, &x)
    })?;
    Ok(worst("eq3", &reports, seed))
}

/// Intertwining residuals for every family `G_{0k}`, `G₁` on `n` random
/// (weights, state) draws each.
pub fn eq5_batch(l: usize, n: usize, seed: u64) -> Result<PropositionReport> {
    require_samples(n)?;
    let weyl = WeylSystem::new(l);
    let mut families: Vec<_> = (0..l).map(|k| SubgroupFamily::g0k(&weyl, k)).collect();
    families.push(SubgroupFamily::g1(&weyl));
    let per = families.len();
    let reports = batch(n * per, seed, |i, rng| {
        let family = &families[i % per];
        let w = random_simplex_with(l, rng);
        let x = random_instance_state(l, i / per, rng)?;
        let [a, b] = crate::group_reps::intertwining_check(family, &w, &x)?;
        Ok(if a.margin <= b.margin { a } else { b })
    })?;
    Ok(worst("eq5", &reports, seed))
}

/// Reconstruction distance of the subgroup decomposition and the weight
/// identity `c₀ + (l−1)c₁ = 1/l`.
pub fn verify_eq9(l: usize, p: f64) -> Result<Vec<PropositionReport>> {
    let d = crate::group_reps::eq9_decomposition(l, p)?;
    let witness = json!({ "l": l, "p": p, "c0": d.c0, "c1": d.c1, "lambda": d.lambda });
    Ok(vec![
        PropositionReport::residual("eq9.reconstruction", d.reconstruction_distance, 1e-10).with_witness(witness.clone()),
        PropositionReport::residual("eq9.weights", d.normalization_defect(), 1e-12).with_witness(witness),
    ])
}

/// Worst Choi distance between the qubit channel `(λ₁, λ₁, λ₃)` and its
/// phase-damping-after-depolarizing factorization over an `n × n` grid
/// with `0 ≤ λ₁ ≤ λ₃ ≤ 1`.
pub fn factorization_grid(n: usize) -> Result<PropositionReport> {
    require_samples(n)?;
    let mut worst_distance = 0.0f64;
    let mut worst_at = (0.0, 0.0);
    for a in 0..n {
        for b in 0..n {
            let l3 = if n == 1 { 1.0 } else { b as f64 / (n - 1) as f64 };
            let l1 = if n == 1 { 0.0 } else { l3 * a as f64 / (n - 1) as f64 };
            if l3 == 0.0 {
                // λ₁ = λ₃ = 0 lies outside the factorization's domain
                continue;
            }
            let direct = crate::channels::pauli_qubit(&PauliQubitParams::new(l1, l1, l3))?;
            let factored = qubit_factorize(l1, l3)?.channel()?;
            let d = direct.choi_distance(&factored);
            if d > worst_distance {
                worst_distance = d;
                worst_at = (l1, l3);
            }
        }
    }
    Ok(PropositionReport::residual("factorization", worst_distance, 1e-12)
        .with_witness(json!({ "grid": n, "worst_lambda1": worst_at.0, "worst_lambda3": worst_at.1 })))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{pauli_matrices, random_channel_with};
    use crate::states::random_unitary_with;

    const H_QUBIT_HALF: f64 = 0.562_335_144_618_808_9;

    fn dep(l: usize, p: f64) -> KrausChannel {
        depolarizing(&DepolarizingParams::new(l, p).unwrap())
    }

    fn random_pauli<R: Rng>(rng: &mut R) -> KrausChannel {
        let w = random_simplex_with(4, rng);
        mixture_of_unitaries(&MixtureWeights::new(w).unwrap(), &pauli_matrices()).unwrap()
    }

    #[test]
    fn output_entropy_examples() {
        let mut rng = rng_for(1, 0);
        let psi = random_pure_with(3, &mut rng);
        assert!(output_entropy(&KrausChannel::identity(3), &psi).unwrap().abs() < 1e-12);
        let psi2 = random_pure_with(2, &mut rng);
        assert!((output_entropy(&dep(2, 0.5), &psi2).unwrap() - H_QUBIT_HALF).abs() < 1e-12);
        let pd = phase_damping(&PhaseDampingParams::new(3, vec![0.4, 0.6]).unwrap()).unwrap();
        assert!(output_entropy(&pd, &PureState::basis(3, 0)).unwrap().abs() < 1e-12);
        assert!(output_entropy(&pd, &psi2).is_err());
    }

    #[test]
    fn gradient_examples() {
        let mut rng = rng_for(2, 0);
        for _ in 0..5 {
            let psi = random_pure_with(3, &mut rng);
            assert!(entropy_gradient(&dep(3, 0.4), &psi).unwrap().norm <= 1e-8);
            assert!(entropy_gradient(&KrausChannel::identity(3), &psi).unwrap().norm <= 1e-12);
        }
        for _ in 0..10 {
            let c = random_pauli(&mut rng);
            let psi = random_pure_with(2, &mut rng);
            assert!(gradient_check(&c, &psi).unwrap().relative_error <= 1e-5);
        }
    }

    #[test]
    fn gradient_matches_finite_differences_across_dims() {
        let mut rng = rng_for(3, 0);
        for i in 0..30 {
            let dim = 2 + i % 3;
            let c = random_channel_with(dim, 1 + i % 4 + 1, &mut rng);
            let psi = random_pure_with(dim, &mut rng);
            let g = gradient_check(&c, &psi).unwrap();
            assert!(g.relative_error <= 1e-5, "draw {i}: {g:?}");
        }
    }

    #[test]
    fn gradient_is_tangent() {
        let mut rng = rng_for(4, 0);
        let c = random_channel_with(3, 2, &mut rng);
        let psi = random_pure_with(3, &mut rng);
        let g = entropy_gradient(&c, &psi).unwrap().gradient;
        // orthogonal to ψ and to the phase direction iψ
        assert!(psi.amplitudes().dotc(&g).norm() < 1e-13);
    }

    #[test]
    fn min_entropy_examples() {
        let cfg = OptimizerConfig::default();
        let r = min_output_entropy(&KrausChannel::identity(2), &cfg, 1).unwrap();
        assert!(r.value.abs() <= 1e-10);
        let r = min_output_entropy(&dep(2, 0.5), &cfg, 1).unwrap();
        assert!((r.value - H_QUBIT_HALF).abs() <= 1e-6);
        assert_eq!(r.restarts_used, 20);

        let pd = phase_damping(&PhaseDampingParams::new(2, vec![0.7]).unwrap()).unwrap();
        let xi = compose(&pd, &dep(2, 0.5)).unwrap();
        let r = min_output_entropy(&xi, &cfg, 1).unwrap();
        assert!((r.value - H_QUBIT_HALF).abs() <= 1e-6, "{}", r.value);
        // attained near a basis projection
        let w = r.argmin.amplitudes().map(|z| z.norm_sqr());
        assert!(w.max() > 1.0 - 1e-3);
        assert!((output_entropy(&xi, &r.argmin).unwrap() - r.value).abs() <= 1e-10);
    }

    #[test]
    fn optimizer_is_deterministic_and_validates() {
        let mut rng = rng_for(5, 0);
        let c = random_channel_with(3, 2, &mut rng);
        let cfg = OptimizerConfig::with_restarts(6);
        let a = min_output_entropy(&c, &cfg, 99).unwrap();
        let b = min_output_entropy(&c, &cfg, 99).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.argmin, b.argmin);
        assert_eq!(a.iterations, b.iterations);
        assert!(min_output_entropy(&c, &OptimizerConfig::with_restarts(0), 1).is_err());
        assert!(a.value >= 0.0 && a.value <= 3f64.ln());
    }

    #[test]
    fn descent_never_increases_the_objective() {
        let mut rng = rng_for(6, 0);
        let c = random_channel_with(3, 2, &mut rng);
        let obj = Objective::Entropy(&c);
        let cfg = OptimizerConfig::default();
        let mut psi = random_pure_with(3, &mut rng).amplitudes().clone();
        let mut prev = obj.value(&psi).unwrap();
        for _ in 0..40 {
            let one = OptimizerConfig { max_iter: 1, ..cfg };
            let r = descend(obj, psi.clone(), &one).unwrap();
            assert!(r.value <= prev + 1e-12);
            prev = r.value;
            psi = r.point;
        }
    }

    #[test]
    fn covariant_flatness() {
        let mut rng = rng_for(7, 0);
        let c = dep(3, 0.6);
        let vals: Vec<f64> = (0..100)
            .map(|_| output_entropy(&c, &random_pure_with(3, &mut rng)).unwrap())
            .collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (vals.len() - 1) as f64;
        assert!(var.sqrt() <= 1e-9);
    }

    #[test]
    fn additivity_examples() {
        let cfg = OptimizerConfig::with_restarts(10);
        let r = check_additivity(&KrausChannel::identity(2), &KrausChannel::identity(2), &cfg, 1).unwrap();
        assert!(r.s_min_a.abs() < 1e-10 && r.s_min_b.abs() < 1e-10 && r.s_min_joint.abs() < 1e-10);

        let d = dep(2, 0.5);
        let r = check_additivity(&d, &d, &cfg, 2).unwrap();
        assert!((r.s_min_joint - 2.0 * H_QUBIT_HALF).abs() <= 1e-5);
        assert!(r.gap.abs() <= 1e-5);
        assert!(r.to_report("additivity").pass);
    }

    #[test]
    fn multiplicativity_examples() {
        let cfg = OptimizerConfig::with_restarts(8);
        let r = check_multiplicativity(&KrausChannel::identity(2), &KrausChannel::identity(3), 2.5, &cfg, 1).unwrap();
        assert!((r.norm_joint - 1.0).abs() < 1e-9 && r.deviation.abs() < 1e-9);
        let d = dep(2, 0.5);
        let r = check_multiplicativity(&d, &d, 2.0, &cfg, 1).unwrap();
        assert!((r.norm_a - 0.625f64.sqrt()).abs() < 1e-9);
        assert!(r.deviation.abs() <= 1e-5);
        assert!(check_multiplicativity(&d, &d, 1.0, &cfg, 1).is_err());
    }

    #[test]
    fn prop1_examples() {
        let mut rng = rng_for(8, 0);
        // ε on the unit: Φ is the coset mixture itself
        let lambda = random_simplex_with(2, &mut rng);
        let x = random_density_with(4, 4, &mut rng).unwrap();
        let r = verify_prop1(2, &lambda, &[1.0, 0.0], &x).unwrap();
        assert!(r.margin.abs() <= 1e-10);

        let x = pure_to_density(&random_pure_with(4, &mut rng));
        let r = verify_prop1(2, &[0.5, 0.5], &[0.5, 0.5], &x).unwrap();
        assert!(r.pass);
        assert!(prop1_batch(3, 3, 40, 8).unwrap().pass);
        assert!(verify_prop1(2, &[0.5, 0.6], &[0.5, 0.5], &x).is_err());
    }

    #[test]
    fn prop2_examples() {
        let weyl = WeylSystem::new(3);
        let g0 = SubgroupFamily::g0(&weyl);
        let mixed = DensityMatrix::maximally_mixed(9);
        let r = verify_prop2(&g0, &[1.0 / 3.0; 3], &mixed).unwrap();
        assert!((r.lhs - 9f64.ln()).abs() < 1e-12);
        // each block is I/9 on K: 3 · S(I/9) with trace 1/3
        let rhs = 3f64.ln() + 3.0 * (3.0 * (1.0 / 9.0) * 9f64.ln()) - 3f64.ln();
        assert!((r.rhs - rhs).abs() < 1e-12 && r.margin >= 0.0);

        let w2 = WeylSystem::new(2);
        let mut rng = rng_for(9, 0);
        let lambda = random_simplex_with(2, &mut rng);
        let x = pure_to_density(&random_pure_with(4, &mut rng));
        assert!(verify_prop2(&SubgroupFamily::g1(&w2), &lambda, &x).unwrap().pass);
        let r = verify_prop2(&SubgroupFamily::g1(&w2), &[1.0, 0.0], &x).unwrap();
        assert!(r.witness["weight_entropy"].as_f64().unwrap() == 0.0 && r.pass);
        assert!(prop2_batch(3, 3, 40, 9).unwrap().pass);
    }

    #[test]
    fn prop3_examples() {
        let mut rng = rng_for(10, 0);
        // product (I/l) ⊗ σ
        for (l, p) in [(2, 0.5), (3, 0.3)] {
            let sigma = random_density_with(l, l, &mut rng).unwrap();
            let x = density_from_matrix(
                crate::numerics::tensor_product(&ComplexMatrix::identity(l).scale(1.0 / l as f64), sigma.matrix()).unwrap(),
            )
            .unwrap();
            let r = verify_prop3(l, p, &x, Prop3Mode::Constructive, 0).unwrap();
            let s_sigma = entropy_of_matrix(sigma.matrix()).unwrap();
            assert!((r.witness["rho_entropy"].as_f64().unwrap() - s_sigma).abs() < 1e-10);
            assert!((r.lhs - ((l as f64).ln() + s_sigma)).abs() < 1e-10);
            assert!(r.pass);
        }
        let x = random_state_with_mixed_marginal(2, 2, &mut rng).unwrap();
        assert!(verify_prop3(2, 0.5, &x, Prop3Mode::Constructive, 0).unwrap().pass);
        assert!(prop3_batch(3, 3, Some(0.3), 30, 10).unwrap().pass);

        let general = random_density_with(4, 2, &mut rng).unwrap();
        assert!(matches!(
            verify_prop3(2, 0.5, &general, Prop3Mode::Constructive, 0),
            Err(QchanError::Mode(_))
        ));
        let r = verify_prop3(2, 0.5, &general, Prop3Mode::Search { random_candidates: 20 }, 3).unwrap();
        assert!(r.witness["candidates"].as_u64().unwrap() > 0);
        assert!(verify_prop3(4, 0.5, &DensityMatrix::maximally_mixed(8), Prop3Mode::Constructive, 0).is_err());
    }

    #[test]
    fn mixed_marginal_generator() {
        let mut rng = rng_for(11, 0);
        for (l, k) in [(2, 2), (3, 3), (3, 2)] {
            let x = random_state_with_mixed_marginal(l, k, &mut rng).unwrap();
            let m = partial_trace(x.matrix(), l, k, Side::Right).unwrap();
            assert!(m.distance(&ComplexMatrix::identity(l).scale(1.0 / l as f64)) < 1e-12);
        }
    }

    #[test]
    fn prop4_examples() {
        let r = verify_prop4(4, 200, 1).unwrap();
        assert!(r.constant_q_pass());
        for c in &r.constant_q {
            assert!((c.min_eigenvalue - (1.0 - c.q)).abs() < 1e-12);
        }
        // at l = 4 the condition is exactly the PSD criterion
        assert!(r.violations.is_empty() && r.min_margin >= -CP_TOL);
        let r2 = verify_prop4(2, 50, 1).unwrap();
        assert_eq!(r2.accepted, 50);
        assert!(r2.to_report().pass);
        assert!(verify_prop4(4, 0, 1).is_err());
        assert!(prop4_condition(&[0.5, 0.5, 0.5]));
        assert!(!prop4_condition(&[1.0, 0.0, 0.3]));
    }

    #[test]
    fn theorem_trivial_and_qubit() {
        let cfg = TheoremConfig {
            optimizer: OptimizerConfig::with_restarts(10),
            states_per_power: 10,
            seed: 3,
        };
        let dp = DepolarizingParams::new(2, 0.5).unwrap();
        let r = verify_theorem(&dp, &PhaseDampingParams::new(2, vec![1.0]).unwrap(), &cfg).unwrap();
        assert!(r.pass(), "{:?}", r.checks);
        let r = verify_theorem(&dp, &PhaseDampingParams::new(2, vec![0.7]).unwrap(), &cfg).unwrap();
        assert!(r.pass(), "{:?}", r.checks);
        assert!((r.s_min_composed - H_QUBIT_HALF).abs() <= 1e-6);
    }

    #[test]
    fn monotonicity_examples() {
        let mut rng = rng_for(12, 0);
        let u = KrausChannel::unitary(&random_unitary_with(3, &mut rng)).unwrap();
        let a = random_density_with(3, 3, &mut rng).unwrap();
        let b = random_density_with(3, 3, &mut rng).unwrap();
        assert!(monotonicity_margin(&u, &a, &b).unwrap().margin.abs() <= 1e-10);
        assert!(monotonicity_suite(&dep(2, 0.5), 200, 1).unwrap().pass);

        // complete dephasing: |e₀⟩ against |+⟩ is infinite before, finite after
        let weyl = WeylSystem::new(2);
        let dephase = conditional_expectation(&SubgroupFamily::g1(&weyl));
        let plus = pure_to_density(&PureState::normalized(crate::numerics::cvec(&[(1.0, 0.0), (1.0, 0.0)])).unwrap());
        let e0 = DensityMatrix::basis_projection(2, 0);
        let r = monotonicity_margin(&dephase, &e0, &plus).unwrap();
        assert!(r.lhs.is_infinite() && r.rhs.is_finite() && r.pass);

        assert!(entropy_increase_suite(&dep(3, 0.3), 100, 2).unwrap().pass);
        let amp = KrausChannel::new(vec![
            ComplexMatrix::from_row_major(2, vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.5f64.sqrt(), 0.0)]).unwrap(),
            ComplexMatrix::from_row_major(2, vec![C64::new(0.0, 0.0), C64::new(0.5f64.sqrt(), 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)]).unwrap(),
        ])
        .unwrap();
        assert!(entropy_increase_suite(&amp, 10, 2).is_err());
    }

    #[test]
    fn structural_batches() {
        for l in [2, 3, 5] {
            assert!(eq3_batch(l, 20, 1).unwrap().pass);
            assert!(eq5_batch(l, 5, 1).unwrap().pass);
            assert!(verify_eq9(l, 0.4).unwrap().iter().all(|r| r.pass));
        }
        assert!(factorization_grid(10).unwrap().pass);
    }

    #[test]
    fn entropy_constant_matches_channel() {
        for (l, p) in [(2, 0.5), (2, 1.0), (3, 0.3), (5, 0.4)] {
            let d = DepolarizingParams::new(l, p).unwrap();
            assert!((depolarizing_entropy_constant(l, p) - d.pure_output_entropy()).abs() < 1e-14);
        }
    }
}
