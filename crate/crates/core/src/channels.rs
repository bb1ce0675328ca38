//! Kraus-form channels and the channel families used throughout the crate.
//!
//! A [`KrausChannel`] caches two derived matrices at construction:
//!
//! * the transfer matrix `T = Σ K ⊗ K̄`, so that `vec(Φ(X)) = T vec(X)`
//!   under row-major vectorization, which is what `apply` uses;
//! * the Choi matrix `Σ_ij Φ(|i⟩⟨j|) ⊗ |i⟩⟨j|` (unnormalized, trace = dim),
//!   which decides complete positivity and channel equality.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;

use crate::error::{QchanError, Result};
use crate::group_reps::WeylSystem;
use crate::numerics::{hermitian_eig, ComplexMatrix, C64, TENSOR_DIM_CAP};
use crate::states::{check_simplex, density_from_matrix, random_isometry_with, DensityMatrix};

/// `‖Σ K†K − I‖_F` must stay below this times `dim`.
pub const TRACE_PRESERVATION_TOL: f64 = 1e-10;
/// Choi eigenvalues above `-CP_TOL` count as nonnegative.
pub const CP_TOL: f64 = 1e-10;
/// Choi distance below which two channels are reported equal.
pub const CHANNEL_EQUALITY_TOL: f64 = 1e-11;

/// A completely positive trace-preserving map in Kraus form.
#[derive(Clone, Debug)]
pub struct KrausChannel {
    dim: usize,
    kraus: Vec<ComplexMatrix>,
    transfer: DMatrix<C64>,
    choi: ComplexMatrix,
}

impl KrausChannel {
    /// Validates shapes and trace preservation.
    pub fn new(kraus: Vec<ComplexMatrix>) -> Result<Self> {
        let ch = Self::unvalidated(kraus)?;
        let report = structural_checks_of(ch.kraus());
        if !report.trace_preserving {
            return Err(QchanError::Validation(format!(
                "Kraus operators are not trace preserving: ‖Σ K†K − I‖_F = {:e}",
                report.tp_residual
            )));
        }
        Ok(ch)
    }

    fn unvalidated(kraus: Vec<ComplexMatrix>) -> Result<Self> {
        let dim = kraus
            .first()
            .ok_or_else(|| QchanError::Validation("channel needs at least one Kraus operator".into()))?
            .dim();
        if kraus.iter().any(|k| k.dim() != dim) {
            return Err(QchanError::Validation("Kraus operators differ in dimension".into()));
        }
        if dim * dim > TENSOR_DIM_CAP {
            return Err(QchanError::Capacity {
                dim: dim * dim,
                cap: TENSOR_DIM_CAP,
            });
        }
        let d2 = dim * dim;
        let mut transfer = DMatrix::<C64>::zeros(d2, d2);
        for k in &kraus {
            transfer += k.inner().kronecker(&k.inner().conjugate());
        }
        let choi = ComplexMatrix::from_fn(d2, |r, c| {
            let (a, i) = (r / dim, r % dim);
            let (b, j) = (c / dim, c % dim);
            transfer[(a * dim + b, i * dim + j)]
        });
        Ok(Self {
            dim,
            kraus,
            transfer,
            choi,
        })
    }

    pub fn identity(dim: usize) -> Self {
        Self::unvalidated(vec![ComplexMatrix::identity(dim)]).expect("identity is valid")
    }

    /// `ρ ↦ U ρ U†`.
    pub fn unitary(u: &ComplexMatrix) -> Result<Self> {
        if u.unitarity_defect() > 1e-10 {
            return Err(QchanError::Validation("matrix is not unitary".into()));
        }
        Self::new(vec![u.clone()])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    pub fn choi(&self) -> &ComplexMatrix {
        &self.choi
    }

    pub fn transfer(&self) -> &DMatrix<C64> {
        &self.transfer
    }

    /// `Σ K x K†` for an arbitrary square matrix; panics on dimension mismatch.
    pub fn apply_matrix(&self, x: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(x.dim(), self.dim, "dimension mismatch");
        let out = &self.transfer * row_major_vec(x.inner());
        unvec(&out, self.dim)
    }

    /// `Σ K† x K`, the Heisenberg-picture adjoint.
    pub fn adjoint_apply_matrix(&self, x: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(x.dim(), self.dim, "dimension mismatch");
        let out = self.transfer.ad_mul(&row_major_vec(x.inner()));
        unvec(&out, self.dim)
    }

    /// Applies the channel to a state and validates the output.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.dim() != self.dim {
            return Err(QchanError::Usage(format!(
                "state has dim {} but channel acts on dim {}",
                rho.dim(),
                self.dim
            )));
        }
        density_from_matrix(self.apply_matrix(rho.matrix()))
    }

    pub fn structural_checks(&self) -> StructuralReport {
        let mut report = structural_checks_of(&self.kraus);
        report.cp_min_eigenvalue = hermitian_eig(&self.choi)
            .map(|e| e.min_eigenvalue())
            .unwrap_or(f64::NAN);
        report.completely_positive = report.cp_min_eigenvalue >= -CP_TOL;
        report
    }

    /// Frobenius distance between Choi matrices.
    pub fn choi_distance(&self, other: &KrausChannel) -> f64 {
        if self.dim != other.dim {
            return f64::INFINITY;
        }
        self.choi.distance(&other.choi)
    }
}

fn row_major_vec(x: &DMatrix<C64>) -> DVector<C64> {
    let d = x.nrows();
    DVector::from_iterator(d * d, (0..d).flat_map(|i| (0..d).map(move |j| x[(i, j)])))
}

fn unvec(v: &DVector<C64>, d: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(d, |i, j| v[i * d + j])
}

/// Trace preservation, unitality and complete positivity margins.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StructuralReport {
    pub trace_preserving: bool,
    /// `‖Σ K†K − I‖_F`
    pub tp_residual: f64,
    pub unital: bool,
    /// `‖Σ KK† − I‖_F`
    pub unitality_residual: f64,
    pub completely_positive: bool,
    pub cp_min_eigenvalue: f64,
}

/// Structural checks on a raw Kraus list, valid or not.
pub fn structural_checks_of(kraus: &[ComplexMatrix]) -> StructuralReport {
    let dim = kraus[0].dim();
    let mut tp = ComplexMatrix::zeros(dim);
    let mut unital = ComplexMatrix::zeros(dim);
    for k in kraus {
        tp = &tp + &(&k.adjoint() * k);
        unital = &unital + &(k * &k.adjoint());
    }
    let id = ComplexMatrix::identity(dim);
    let tp_residual = tp.distance(&id);
    let unitality_residual = unital.distance(&id);
    let tol = TRACE_PRESERVATION_TOL * dim as f64;
    // Kraus form is completely positive by construction; the Choi
    // eigenvalue is filled in by `KrausChannel::structural_checks`.
    StructuralReport {
        trace_preserving: tp_residual <= tol,
        tp_residual,
        unital: unitality_residual <= tol,
        unitality_residual,
        completely_positive: true,
        cp_min_eigenvalue: f64::NAN,
    }
}

/// `a ∘ b`: apply `b` first, then `a`.
pub fn compose(a: &KrausChannel, b: &KrausChannel) -> Result<KrausChannel> {
    if a.dim != b.dim {
        return Err(QchanError::Usage(format!(
            "cannot compose channels of dims {} and {}",
            a.dim, b.dim
        )));
    }
    let kraus = a
        .kraus
        .iter()
        .flat_map(|ka| b.kraus.iter().map(move |kb| ka * kb))
        .collect();
    KrausChannel::unvalidated(kraus)
}

/// `a ⊗ b` with Kraus set `{A_i ⊗ B_j}`.
pub fn tensor(a: &KrausChannel, b: &KrausChannel) -> Result<KrausChannel> {
    let dim = a.dim * b.dim;
    if dim * dim > TENSOR_DIM_CAP {
        return Err(QchanError::Capacity {
            dim: dim * dim,
            cap: TENSOR_DIM_CAP,
        });
    }
    let kraus = a
        .kraus
        .iter()
        .flat_map(|ka| {
            b.kraus
                .iter()
                .map(move |kb| ComplexMatrix::new(ka.inner().kronecker(kb.inner())).expect("finite"))
        })
        .collect();
    KrausChannel::unvalidated(kraus)
}

/// `c ⊗ c ⊗ … ⊗ c` (`n ≥ 1` copies).
pub fn tensor_power(c: &KrausChannel, n: usize) -> Result<KrausChannel> {
    assert!(n >= 1, "tensor power needs n >= 1");
    let mut out = c.clone();
    for _ in 1..n {
        out = tensor(&out, c)?;
    }
    Ok(out)
}

/// `Φ(x) = (1 − p) x + (p / l) Tr(x) I` with `0 < p ≤ l²/(l² − 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DepolarizingParams {
    l: usize,
    p: f64,
}

impl DepolarizingParams {
    pub fn new(l: usize, p: f64) -> Result<Self> {
        if l < 2 {
            return Err(QchanError::Usage(format!("depolarizing dimension must be >= 2, got {l}")));
        }
        let max = max_depolarizing_p(l);
        if !(p > 0.0 && p <= max) {
            return Err(QchanError::Usage(format!(
                "depolarizing p = {p} is outside (0, {max}] for l = {l}"
            )));
        }
        Ok(Self { l, p })
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// `−(1−(l−1)p/l) ln(1−(l−1)p/l) − (l−1)(p/l) ln(p/l)`, the output
    /// entropy of any pure input.
    pub fn pure_output_entropy(&self) -> f64 {
        let l = self.l as f64;
        let big = 1.0 - (l - 1.0) * self.p / l;
        let small = self.p / l;
        -crate::numerics::xlogx(big) - (l - 1.0) * crate::numerics::xlogx(small)
    }
}

pub fn max_depolarizing_p(l: usize) -> f64 {
    let l2 = (l * l) as f64;
    l2 / (l2 - 1.0)
}

/// Depolarizing channel as a mixture of the `l²` Weyl unitaries, with
/// weight `1 − (l²−1)p/l²` on the identity and `p/l²` elsewhere.
pub fn depolarizing(params: &DepolarizingParams) -> KrausChannel {
    let l = params.l;
    let l2 = (l * l) as f64;
    let weyl = WeylSystem::new(l);
    let mut kraus = Vec::with_capacity(l * l);
    for g in weyl.elements() {
        let w = if g.is_identity() {
            1.0 - (l2 - 1.0) * params.p / l2
        } else {
            params.p / l2
        };
        // μ_e vanishes at the upper end of the range
        if w > 0.0 {
            kraus.push(weyl.unitary(g).scale(w.sqrt()));
        }
    }
    KrausChannel::unvalidated(kraus).expect("Weyl mixture is well formed")
}

/// Choi matrix of the depolarizing channel from its closed form
/// `(1−p) Σ|ii⟩⟨jj| + (p/l) I`, independent of any Kraus decomposition.
pub fn depolarizing_choi_closed_form(l: usize, p: f64) -> ComplexMatrix {
    ComplexMatrix::from_fn(l * l, |r, c| {
        let (a, i) = (r / l, r % l);
        let (b, j) = (c / l, c % l);
        let mut v = 0.0;
        if a == i && b == j {
            v += 1.0 - p;
        }
        if r == c {
            v += p / l as f64;
        }
        C64::new(v, 0.0)
    })
}

/// Coefficients `q_1 … q_{l−1}` of the Schur-multiplier map; `q_0 = 1`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseDampingParams {
    l: usize,
    q: Vec<f64>,
}

impl PhaseDampingParams {
    /// Checks `l ≥ 2`, `len(q) = l − 1` and `0 ≤ q_j ≤ 1`. Complete
    /// positivity is decided later by [`schur_matrix`].
    pub fn new(l: usize, q: Vec<f64>) -> Result<Self> {
        if l < 2 {
            return Err(QchanError::Usage(format!("phase damping dimension must be >= 2, got {l}")));
        }
        if q.len() != l - 1 {
            return Err(QchanError::Usage(format!(
                "phase damping on dim {l} needs {} coefficients q_1..q_{}, got {}",
                l - 1,
                l - 1,
                q.len()
            )));
        }
        if let Some((j, bad)) = q.iter().enumerate().find(|(_, x)| !(0.0..=1.0).contains(*x)) {
            return Err(QchanError::Usage(format!("q_{} = {bad} is outside [0, 1]", j + 1)));
        }
        Ok(Self { l, q })
    }

    pub fn l(&self) -> usize {
        self.l
    }

    /// `q_1 … q_{l−1}`.
    pub fn q(&self) -> &[f64] {
        &self.q
    }

    /// Coefficient applied to entry `(s, j)` (0-based).
    pub fn coefficient(&self, s: usize, j: usize) -> f64 {
        let d = s.abs_diff(j);
        if d == 0 {
            1.0
        } else if d < self.l - 1 {
            self.q[d - 1]
        } else {
            // corner entries (1, l) and (l, 1)
            self.q[0]
        }
    }
}

/// The Schur coefficient matrix and its smallest eigenvalue.
#[derive(Clone, Debug)]
pub struct SchurMatrix {
    pub matrix: ComplexMatrix,
    pub min_eigenvalue: f64,
}

impl SchurMatrix {
    pub fn is_psd(&self) -> bool {
        self.min_eigenvalue >= -CP_TOL
    }
}

pub fn schur_matrix(params: &PhaseDampingParams) -> SchurMatrix {
    let matrix = ComplexMatrix::from_fn(params.l, |s, j| C64::new(params.coefficient(s, j), 0.0));
    let min_eigenvalue = hermitian_eig(&matrix)
        .expect("real symmetric matrix")
        .min_eigenvalue();
    SchurMatrix {
        matrix,
        min_eigenvalue,
    }
}

/// Applies the coefficient map entrywise, whether or not it is CP.
pub fn schur_action(params: &PhaseDampingParams, x: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::from_fn(params.l, |s, j| x.get(s, j) * params.coefficient(s, j))
}

/// Phase damping channel with diagonal Kraus operators `√γ diag(v)` taken
/// from the eigendecomposition of the Schur matrix.
pub fn phase_damping(params: &PhaseDampingParams) -> Result<KrausChannel> {
    let schur = schur_matrix(params);
    if !schur.is_psd() {
        return Err(QchanError::NotCompletelyPositive {
            eigenvalue: schur.min_eigenvalue,
        });
    }
    let eig = hermitian_eig(&schur.matrix)?;
    let mut kraus = Vec::new();
    for (i, &gamma) in eig.eigenvalues.iter().enumerate() {
        if gamma <= 0.0 {
            continue;
        }
        let v = eig.eigenvector(i);
        let d = DVector::from_iterator(params.l, v.iter().map(|z| z * gamma.sqrt()));
        kraus.push(ComplexMatrix::new(DMatrix::from_diagonal(&d))?);
    }
    KrausChannel::unvalidated(kraus)
}

/// Qubit Pauli channel parameters `(λ₁, λ₂, λ₃)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PauliQubitParams {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
}

impl PauliQubitParams {
    pub fn new(lambda1: f64, lambda2: f64, lambda3: f64) -> Self {
        Self {
            lambda1,
            lambda2,
            lambda3,
        }
    }

    /// Mixing weights on `I, σx, σy, σz`.
    pub fn weights(&self) -> [f64; 4] {
        let (a, b, c) = (self.lambda1, self.lambda2, self.lambda3);
        [
            (1.0 + a + b + c) / 4.0,
            (1.0 + a - b - c) / 4.0,
            (1.0 - a + b - c) / 4.0,
            (1.0 - a - b + c) / 4.0,
        ]
    }
}

pub fn pauli_matrices() -> [ComplexMatrix; 4] {
    let z = C64::new(0.0, 0.0);
    let o = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    let m = |e: [C64; 4]| ComplexMatrix::from_row_major(2, e.to_vec()).expect("finite");
    [
        m([o, z, z, o]),
        m([z, o, o, z]),
        m([z, -i, i, z]),
        m([o, z, z, -o]),
    ]
}

/// Mixture of `I, σx, σy, σz`; errors when a weight is below `-1e-12`.
pub fn pauli_qubit(params: &PauliQubitParams) -> Result<KrausChannel> {
    let weights = params.weights();
    if let Some(&w) = weights.iter().find(|&&w| w < -1e-12) {
        return Err(QchanError::NotCompletelyPositive { eigenvalue: w });
    }
    let kraus = weights
        .iter()
        .zip(pauli_matrices())
        .filter(|(&w, _)| w > 0.0)
        .map(|(&w, s)| s.scale(w.sqrt()))
        .collect();
    KrausChannel::unvalidated(kraus)
}

/// `Ξ(λ₁, λ₁, λ₃) = Ψ ∘ Φ` with `Ψ` the qubit phase damping `q₁ = λ₁/λ₃`
/// and `Φ` the depolarizing channel with `1 − p = λ₃`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QubitFactorization {
    pub phase_damping: PhaseDampingParams,
    /// `None` when `λ₃ = 1`, i.e. the depolarizing factor is the identity.
    pub depolarizing: Option<DepolarizingParams>,
}

impl QubitFactorization {
    pub fn channel(&self) -> Result<KrausChannel> {
        let psi = phase_damping(&self.phase_damping)?;
        match &self.depolarizing {
            Some(d) => compose(&psi, &depolarizing(d)),
            None => Ok(psi),
        }
    }
}

pub fn qubit_factorize(lambda1: f64, lambda3: f64) -> Result<QubitFactorization> {
    if !(lambda3 > 0.0 && lambda3 <= 1.0 && lambda1.abs() <= lambda3) {
        return Err(QchanError::Usage(format!(
            "factorization needs |λ₁| ≤ λ₃ and 0 < λ₃ ≤ 1, got λ₁ = {lambda1}, λ₃ = {lambda3}"
        )));
    }
    let phase_damping = PhaseDampingParams::new(2, vec![lambda1 / lambda3])?;
    let p = 1.0 - lambda3;
    let depolarizing = if p > 0.0 {
        Some(DepolarizingParams::new(2, p)?)
    } else {
        None
    };
    Ok(QubitFactorization {
        phase_damping,
        depolarizing,
    })
}

/// Probability weights `μ_g` for a mixture of unitaries.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MixtureWeights(Vec<f64>);

impl MixtureWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(QchanError::Validation("mixture needs at least one weight".into()));
        }
        check_simplex(&weights)?;
        Ok(Self(weights))
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// `x ↦ Σ μ_g U_g x U_g†`.
pub fn mixture_of_unitaries(
    weights: &MixtureWeights,
    unitaries: &[ComplexMatrix],
) -> Result<KrausChannel> {
    if weights.0.len() != unitaries.len() {
        return Err(QchanError::Validation(format!(
            "{} weights for {} unitaries",
            weights.0.len(),
            unitaries.len()
        )));
    }
    if let Some((i, u)) = unitaries
        .iter()
        .enumerate()
        .find(|(_, u)| u.unitarity_defect() > 1e-10)
    {
        return Err(QchanError::Validation(format!(
            "operator {i} is not unitary (‖U†U − I‖_F = {:e})",
            u.unitarity_defect()
        )));
    }
    let mut kraus: Vec<ComplexMatrix> = weights
        .0
        .iter()
        .zip(unitaries)
        .filter(|(&w, _)| w > 0.0)
        .map(|(&w, u)| u.scale(w.sqrt()))
        .collect();
    if kraus.is_empty() {
        kraus.push(unitaries[0].clone());
    }
    KrausChannel::new(kraus)
}

/// Random channel with `kraus_count` operators from a Haar isometry.
pub fn random_channel_with<R: Rng>(dim: usize, kraus_count: usize, rng: &mut R) -> KrausChannel {
    let v = random_isometry_with(dim * kraus_count, dim, rng);
    let kraus = (0..kraus_count)
        .map(|i| ComplexMatrix::new(v.rows(i * dim, dim).into_owned()).expect("finite"))
        .collect();
    KrausChannel::new(kraus).expect("isometry gives a trace-preserving set")
}

/// One coefficient of the right-hand side of the difference representation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Eq12Entry {
    pub row: usize,
    pub col: usize,
    /// Coefficient produced by the difference representation.
    pub representation: f64,
    /// Coefficient of the Schur-multiplier definition.
    pub definition: f64,
}

/// Residual of `q̄ x + Σ (q̄ − q_s) D x D` against the Schur-multiplier map.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Eq12Report {
    pub l: usize,
    pub q: Vec<f64>,
    pub q_bar: f64,
    pub reconstruction_residual: f64,
    pub entries: Vec<Eq12Entry>,
}

/// Builds `q̄ x + Σ_{s=1}^{l−2} Σ_{r<j, j−r=s} (q̄ − q_s) D_rj x D_rj + (q̄ − q₁) D_1l x D_1l`
/// with `D_rj = |e_r⟩⟨e_r| − |e_j⟩⟨e_j|` and
/// `q̄ = (1 + Σ_{j=1}^{l−2} q_j)/(l − 1)`, evaluates it on every matrix
/// unit, and compares with the Schur-multiplier map.
pub fn eq12_representation(params: &PhaseDampingParams) -> Eq12Report {
    let l = params.l;
    let q = &params.q;
    let q_bar = (1.0 + q[..l - 2].iter().sum::<f64>()) / (l - 1) as f64;

    // (weight, r, j) for every D_rj term
    let mut terms: Vec<(f64, usize, usize)> = Vec::new();
    for s in 1..=l.saturating_sub(2) {
        for r in 0..l - s {
            terms.push((q_bar - q[s - 1], r, r + s));
        }
    }
    terms.push((q_bar - q[0], 0, l - 1));

    let diff = |r: usize, j: usize| {
        let mut d = vec![0.0; l];
        d[r] = 1.0;
        d[j] = -1.0;
        ComplexMatrix::from_real_diagonal(&d)
    };
    let representation = |x: &ComplexMatrix| {
        let mut out = x.scale(q_bar);
        for &(w, r, j) in &terms {
            let d = diff(r, j);
            out = &out + &(&(&d * x) * &d).scale(w);
        }
        out
    };

    let mut entries = Vec::with_capacity(l * l);
    let mut residual_sq = 0.0;
    for a in 0..l {
        for b in 0..l {
            let unit = ComplexMatrix::unit(l, a, b);
            let lhs = representation(&unit);
            let rhs = schur_action(params, &unit);
            residual_sq += lhs.distance(&rhs).powi(2);
            entries.push(Eq12Entry {
                row: a,
                col: b,
                representation: lhs.get(a, b).re,
                definition: rhs.get(a, b).re,
            });
        }
    }
    Eq12Report {
        l,
        q: q.clone(),
        q_bar,
        reconstruction_residual: residual_sq.sqrt(),
        entries,
    }
}
