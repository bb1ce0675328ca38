//! Entropy functionals: von Neumann and relative entropy, Holevo χ, the
//! one-shot capacity bound and the output `p`-norm objective.
//!
//! Everything is computed in nats; [`LogBase`] converts at the boundary.

use serde::{Deserialize, Serialize};

use crate::channels::KrausChannel;
use crate::error::{QchanError, Result};
use crate::numerics::{clamp_eigenvalue, hermitian_eig, xlogx, ComplexMatrix, CLAMP_TOL};
use crate::states::{DensityMatrix, PureState, StateEnsemble};

/// Kernel threshold for the support test in [`relative_entropy`].
pub const SUPPORT_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogBase {
    #[default]
    Natural,
    Two,
}

impl LogBase {
    /// Converts a value in nats to this base.
    pub fn from_nats(self, nats: f64) -> f64 {
        match self {
            LogBase::Natural => nats,
            LogBase::Two => nats / std::f64::consts::LN_2,
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            LogBase::Natural => "nats",
            LogBase::Two => "bits",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyValue {
    pub value: f64,
    pub log_base: LogBase,
}

impl EntropyValue {
    pub fn from_nats(nats: f64, log_base: LogBase) -> Self {
        Self {
            value: log_base.from_nats(nats),
            log_base,
        }
    }
}

/// `−Σ λ log λ` over the clamped spectrum of a PSD matrix, in nats.
pub fn entropy_of_matrix(m: &ComplexMatrix) -> Result<f64> {
    let eig = hermitian_eig(m)?;
    let mut s = 0.0;
    for &l in &eig.eigenvalues {
        s -= xlogx(clamp_eigenvalue(l, CLAMP_TOL)?);
    }
    // eigenvalues slightly above 1 would give −0
    Ok(s.max(0.0))
}

pub fn von_neumann(rho: &DensityMatrix, base: LogBase) -> EntropyValue {
    let nats = entropy_of_matrix(rho.matrix()).expect("validated state has a PSD spectrum");
    EntropyValue::from_nats(nats, base)
}

/// `Tr ρ log ρ − Tr ρ log σ`, or `+∞` when `ρ` has weight above
/// [`SUPPORT_TOL`] on the kernel of `σ`.
pub fn relative_entropy(rho: &DensityMatrix, sigma: &DensityMatrix, base: LogBase) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(QchanError::Usage(format!(
            "relative entropy of states with dims {} and {}",
            rho.dim(),
            sigma.dim()
        )));
    }
    let eig = hermitian_eig(sigma.matrix())?;
    let r = rho.matrix().inner();
    let mut cross = 0.0;
    let mut kernel_mass = 0.0;
    for (i, &l) in eig.eigenvalues.iter().enumerate() {
        let v = eig.eigenvector(i);
        let w = (v.adjoint() * r * &v)[(0, 0)].re;
        if l < SUPPORT_TOL {
            kernel_mass += w;
        } else {
            cross += w * l.ln();
        }
    }
    if kernel_mass > SUPPORT_TOL {
        return Ok(f64::INFINITY);
    }
    let neg_s = -entropy_of_matrix(rho.matrix())?;
    Ok(base.from_nats(neg_s - cross))
}

/// `−Tr(y log y)` for PSD `y` with `Tr y ≤ 1`, in nats.
pub fn subnormalized_entropy(y: &ComplexMatrix) -> Result<f64> {
    let trace = y.trace().re;
    if trace > 1.0 + 1e-10 {
        return Err(QchanError::Trace {
            trace,
            tolerance: 1e-10,
        });
    }
    if y.frobenius_norm() == 0.0 {
        return Ok(0.0);
    }
    entropy_of_matrix(y)
}

/// `S(Σ π_j Ψ(x_j)) − Σ π_j S(Ψ(x_j))`.
pub fn holevo_chi(c: &KrausChannel, e: &StateEnsemble, base: LogBase) -> Result<f64> {
    if e.dim() != c.dim() {
        return Err(QchanError::Usage(format!(
            "ensemble dim {} does not match channel dim {}",
            e.dim(),
            c.dim()
        )));
    }
    let mut avg = ComplexMatrix::zeros(c.dim());
    let mut mean_entropy = 0.0;
    for (&p, x) in e.probabilities().iter().zip(e.states()) {
        let out = c.apply_matrix(x.matrix());
        mean_entropy += p * entropy_of_matrix(&out)?;
        avg = &avg + &out.scale(p);
    }
    Ok(base.from_nats(entropy_of_matrix(&avg)? - mean_entropy))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum C1Kind {
    /// `C₁ ≤ value`.
    Bound,
    /// `C₁ = value` (covariant channels).
    Equality,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct C1Value {
    pub value: f64,
    pub kind: C1Kind,
    pub log_base: LogBase,
}

/// `log(dim) − s_min`, with `s_min` in nats.
pub fn c1_upper_bound(c: &KrausChannel, s_min: f64, base: LogBase) -> C1Value {
    C1Value {
        value: base.from_nats((c.dim() as f64).ln() - s_min),
        kind: C1Kind::Bound,
        log_base: base,
    }
}

/// Same value as [`c1_upper_bound`]; the caller vouches for covariance.
pub fn covariant_c1(c: &KrausChannel, s_min: f64, base: LogBase) -> C1Value {
    C1Value {
        kind: C1Kind::Equality,
        ..c1_upper_bound(c, s_min, base)
    }
}

/// `Tr(c(|ψ⟩⟨ψ|)^p)` for `p > 1`.
pub fn output_p_norm_value(c: &KrausChannel, psi: &PureState, p: f64) -> Result<f64> {
    if p.is_nan() || p <= 1.0 || !p.is_finite() {
        return Err(QchanError::Usage(format!("p-norm exponent must be a finite p > 1, got {p}")));
    }
    if psi.dim() != c.dim() {
        return Err(QchanError::Usage(format!(
            "state dim {} does not match channel dim {}",
            psi.dim(),
            c.dim()
        )));
    }
    let eig = hermitian_eig(&c.apply_matrix(&psi.projector()))?;
    let mut acc = 0.0;
    for &l in &eig.eigenvalues {
        acc += clamp_eigenvalue(l, CLAMP_TOL)?.powf(p);
    }
    Ok(acc)
}
