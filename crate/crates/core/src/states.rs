//! Validated density matrices, pure states and reproducible sampling.
//!
//! All randomness flows through [`rng_for`], which derives a ChaCha20
//! substream from `(seed, stream)`. Batch samplers use the sample index
//! as the stream, so results do not depend on evaluation order.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::error::{QchanError, Result};
use crate::numerics::{hermitian_eig, clamp_eigenvalue, ComplexMatrix, C64, CLAMP_TOL, HERMITIAN_REL_TOL};

/// Tolerance on `|Tr ρ − 1|`.
pub const TRACE_TOL: f64 = 1e-10;
/// Tolerance on `|‖ψ‖ − 1|`.
pub const NORM_TOL: f64 = 1e-12;

/// Generator used for every stochastic operation: ChaCha20 keyed by the
/// seed, with `stream` selecting an independent substream.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// A Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
    note: Option<String>,
}

impl DensityMatrix {
    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// Set when validation clamped eigenvalues or renormalized the trace.
    pub fn note(&self) -> Option<&str> {
        self.note.as_deref()
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(dim).scale(1.0 / dim as f64),
            note: None,
        }
    }

    /// `|e_i⟩⟨e_i|`.
    pub fn basis_projection(dim: usize, i: usize) -> Self {
        Self {
            matrix: ComplexMatrix::unit(dim, i, i),
            note: None,
        }
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    /// Re-runs validation on the stored matrix.
    pub fn revalidate(&self) -> Result<DensityMatrix> {
        density_from_matrix(self.matrix.clone())
    }
}

/// Validates `m` as a state.
///
/// Eigenvalues in `[−1e-10, 0)` are clamped to zero and the trace is
/// renormalized; either adjustment is recorded in [`DensityMatrix::note`].
pub fn density_from_matrix(m: ComplexMatrix) -> Result<DensityMatrix> {
    if !m.is_hermitian(HERMITIAN_REL_TOL) {
        return Err(QchanError::Validation(format!(
            "state is not Hermitian (‖ρ − ρ†‖_F = {:e})",
            m.hermiticity_defect()
        )));
    }
    let eig = hermitian_eig(&m)?;
    let min = eig.min_eigenvalue();
    let clamped = eig
        .eigenvalues
        .iter()
        .map(|&l| clamp_eigenvalue(l, CLAMP_TOL))
        .collect::<Result<Vec<f64>>>()?;
    let trace = m.trace().re;
    if (trace - 1.0).abs() > TRACE_TOL {
        return Err(QchanError::Trace {
            trace,
            tolerance: TRACE_TOL,
        });
    }

    let n_clamped = eig.eigenvalues.iter().filter(|&&l| l < 0.0).count();
    let mut note = None;
    let matrix = if n_clamped > 0 {
        let total: f64 = clamped.iter().sum();
        let rebuilt = eig.map_spectrum(|l| l.max(0.0) / total);
        note = Some(format!(
            "clamped {n_clamped} eigenvalue(s) (min {min:e}) and renormalized trace {total}"
        ));
        rebuilt.hermitian_part()
    } else {
        if (trace - 1.0).abs() > 1e-14 {
            note = Some(format!("renormalized trace {trace}"));
            m.hermitian_part().scale(1.0 / trace)
        } else {
            // keeps validation idempotent, so stored states round-trip exactly
            m.hermitian_part()
        }
    };
    Ok(DensityMatrix { matrix, note })
}

/// A unit vector in `C^dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    amplitudes: DVector<C64>,
}

impl PureState {
    pub fn new(amplitudes: DVector<C64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(QchanError::Validation("pure state needs dim >= 1".into()));
        }
        let norm = amplitudes.norm();
        if !norm.is_finite() || (norm - 1.0).abs() > NORM_TOL {
            return Err(QchanError::Validation(format!(
                "pure state norm {norm} is not 1 within {NORM_TOL:e}"
            )));
        }
        Ok(Self { amplitudes })
    }

    /// Normalizes a nonzero vector.
    pub fn normalized(v: DVector<C64>) -> Result<Self> {
        let norm = v.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(QchanError::Validation("cannot normalize a zero vector".into()));
        }
        Ok(Self {
            amplitudes: v.unscale(norm),
        })
    }

    pub fn basis(dim: usize, i: usize) -> Self {
        let mut v = DVector::zeros(dim);
        v[i] = C64::new(1.0, 0.0);
        Self { amplitudes: v }
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn projector(&self) -> ComplexMatrix {
        ComplexMatrix::outer(&self.amplitudes)
    }

    /// `ψ_a ⊗ ψ_b` under the crate's Kronecker convention.
    pub fn tensor(&self, other: &PureState) -> PureState {
        PureState {
            amplitudes: self.amplitudes.kronecker(&other.amplitudes),
        }
    }

    /// Schmidt coefficients (descending squared weights) across
    /// `C^{dim_left} ⊗ C^{dim_right}`.
    pub fn schmidt_weights(&self, dim_left: usize, dim_right: usize) -> Result<Vec<f64>> {
        if dim_left * dim_right != self.dim() {
            return Err(QchanError::Usage(format!(
                "cannot factor dimension {} as {dim_left} x {dim_right}",
                self.dim()
            )));
        }
        let m = DMatrix::from_fn(dim_left, dim_right, |i, j| self.amplitudes[i * dim_right + j]);
        let reduced = ComplexMatrix::new(&m * m.adjoint())?;
        let mut w = hermitian_eig(&reduced)?
            .eigenvalues
            .into_iter()
            .map(|l| l.max(0.0))
            .collect::<Vec<_>>();
        w.reverse();
        Ok(w)
    }
}

/// `|ψ⟩⟨ψ|` as a validated state.
pub fn pure_to_density(psi: &PureState) -> DensityMatrix {
    DensityMatrix {
        matrix: psi.projector(),
        note: None,
    }
}

/// Probability-weighted list of states of equal dimension.
#[derive(Clone, Debug)]
pub struct StateEnsemble {
    probabilities: Vec<f64>,
    states: Vec<DensityMatrix>,
}

impl StateEnsemble {
    pub fn new(probabilities: Vec<f64>, states: Vec<DensityMatrix>) -> Result<Self> {
        if probabilities.is_empty() || probabilities.len() != states.len() {
            return Err(QchanError::Validation(format!(
                "ensemble has {} probabilities for {} states",
                probabilities.len(),
                states.len()
            )));
        }
        check_simplex(&probabilities)?;
        let dim = states[0].dim();
        if states.iter().any(|s| s.dim() != dim) {
            return Err(QchanError::Validation("ensemble states differ in dimension".into()));
        }
        Ok(Self {
            probabilities,
            states,
        })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn states(&self) -> &[DensityMatrix] {
        &self.states
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }
}

/// Checks nonnegativity and `|Σ − 1| ≤ 1e-12`.
pub fn check_simplex(p: &[f64]) -> Result<()> {
    if let Some(bad) = p.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
        return Err(QchanError::Validation(format!("negative or non-finite weight {bad}")));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(QchanError::Validation(format!("weights sum to {total}, not 1")));
    }
    Ok(())
}

fn complex_gaussian<R: Rng>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn gaussian_matrix<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<C64> {
    // Row-major fill keeps draws independent of nalgebra's storage order.
    let mut m = DMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = complex_gaussian(rng);
        }
    }
    m
}

/// Haar-random pure state from the given generator.
pub fn random_pure_with<R: Rng>(dim: usize, rng: &mut R) -> PureState {
    let v = DVector::from_iterator(dim, (0..dim).map(|_| complex_gaussian(rng)));
    PureState::normalized(v).expect("Gaussian vector is nonzero with probability one")
}

/// Haar-random pure state, deterministic in `(dim, seed)`.
pub fn random_pure(dim: usize, seed: u64) -> Result<PureState> {
    if dim == 0 {
        return Err(QchanError::Usage("dim must be >= 1".into()));
    }
    Ok(random_pure_with(dim, &mut rng_for(seed, 0)))
}

/// `GG† / Tr(GG†)` for a `dim × rank` complex Gaussian `G`.
pub fn random_density_with<R: Rng>(dim: usize, rank: usize, rng: &mut R) -> Result<DensityMatrix> {
    if rank == 0 || rank > dim {
        return Err(QchanError::Usage(format!(
            "rank must lie in 1..={dim}, got {rank}"
        )));
    }
    let g = gaussian_matrix(dim, rank, rng);
    let w = &g * g.adjoint();
    let tr = w.trace().re;
    let m = ComplexMatrix::new(w.unscale(tr))?;
    Ok(DensityMatrix {
        matrix: m.hermitian_part(),
        note: None,
    })
}

pub fn random_density(dim: usize, rank: usize, seed: u64) -> Result<DensityMatrix> {
    random_density_with(dim, rank, &mut rng_for(seed, 0))
}

/// Haar-random unitary (QR of a Gaussian matrix with the phase fix).
pub fn random_unitary_with<R: Rng>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let qr = gaussian_matrix(dim, dim, rng).qr();
    let (mut q, r) = qr.unpack();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    ComplexMatrix::new(q).expect("finite")
}

/// `dim × cols` matrix with orthonormal columns (Haar isometry).
pub fn random_isometry_with<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<C64> {
    assert!(cols <= rows, "isometry needs cols <= rows");
    let qr = gaussian_matrix(rows, cols, rng).qr();
    let (q, r) = qr.unpack();
    let mut q = q.columns(0, cols).into_owned();
    for j in 0..cols {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..rows {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Random point of the probability simplex (flat Dirichlet).
pub fn random_simplex_with<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    let e: Vec<f64> = (0..n)
        .map(|_| -(1.0 - rng.random::<f64>()).ln())
        .collect();
    let total: f64 = e.iter().sum();
    let mut w: Vec<f64> = e.iter().map(|x| x / total).collect();
    // absorb rounding so the simplex check at 1e-12 always passes
    let drift: f64 = 1.0 - w.iter().sum::<f64>();
    w[0] += drift;
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::hermitian_eig;

    #[test]
    fn maximally_mixed_is_accepted() {
        let rho = density_from_matrix(ComplexMatrix::identity(2).scale(0.5)).unwrap();
        assert!(rho.note().is_none());
        assert!((rho.purity() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn negative_spectrum_is_rejected() {
        let err = density_from_matrix(ComplexMatrix::from_real_diagonal(&[1.5, -0.5])).unwrap_err();
        assert!(matches!(err, QchanError::NotPositive { .. }));
    }

    #[test]
    fn trace_and_hermiticity_errors() {
        let err = density_from_matrix(ComplexMatrix::from_real_diagonal(&[0.5, 0.4])).unwrap_err();
        assert!(matches!(err, QchanError::Trace { .. }));
        let mut m = ComplexMatrix::identity(2).scale(0.5).into_inner();
        m[(0, 1)] = C64::new(0.3, 0.0);
        let err = density_from_matrix(ComplexMatrix::new(m).unwrap()).unwrap_err();
        assert!(matches!(err, QchanError::Validation(_)));
    }

    #[test]
    fn tolerance_boundary_is_clamped_and_renormalized() {
        let rho = density_from_matrix(ComplexMatrix::from_real_diagonal(&[0.7, 0.3 - 5e-11])).unwrap();
        assert!((rho.matrix().trace().re - 1.0).abs() < 1e-15);
        assert!(rho.note().is_some());

        // a genuine roundoff-negative eigenvalue gets clamped to zero
        let rho = density_from_matrix(ComplexMatrix::from_real_diagonal(&[1.0 + 5e-11, -5e-11])).unwrap();
        let eig = hermitian_eig(rho.matrix()).unwrap();
        assert_eq!(eig.eigenvalues[0], 0.0);
        assert!(rho.note().unwrap().contains("clamped 1"));
    }

    #[test]
    fn pure_state_projections() {
        let e1 = pure_to_density(&PureState::basis(3, 0));
        assert_eq!(e1.matrix(), &ComplexMatrix::from_real_diagonal(&[1.0, 0.0, 0.0]));

        let plus = PureState::normalized(crate::numerics::cvec(&[(1.0, 0.0), (1.0, 0.0)])).unwrap();
        let rho = pure_to_density(&plus);
        for z in rho.matrix().row_major() {
            assert!((z - C64::new(0.5, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn random_pure_purity_and_idempotence() {
        for seed in 0..20 {
            let psi = random_pure(4, seed).unwrap();
            let rho = pure_to_density(&psi);
            assert!((rho.purity() - 1.0).abs() < 1e-12);
            let sq = rho.matrix() * rho.matrix();
            assert!(sq.distance(rho.matrix()) < 1e-12);
        }
    }

    #[test]
    fn random_pure_dim_one_and_determinism() {
        let psi = random_pure(1, 99).unwrap();
        assert!((psi.amplitudes()[0].norm() - 1.0).abs() < 1e-15);
        assert_eq!(random_pure(5, 7).unwrap(), random_pure(5, 7).unwrap());
        assert_ne!(random_pure(5, 7).unwrap(), random_pure(5, 8).unwrap());
    }

    #[test]
    fn haar_first_moment() {
        // |⟨e1|ψ⟩|² ~ Beta(1, d − 1): mean 1/d, variance (d−1)/(d²(d+1))
        let n = 10_000;
        for dim in [2usize, 3, 5] {
            let mut rng = rng_for(2024, dim as u64);
            let mean = (0..n)
                .map(|_| random_pure_with(dim, &mut rng).amplitudes()[0].norm_sqr())
                .sum::<f64>()
                / n as f64;
            let d = dim as f64;
            let se = ((d - 1.0) / (d * d * (d + 1.0)) / n as f64).sqrt();
            assert!((mean - 1.0 / d).abs() <= 3.0 * se, "dim {dim}: mean {mean}");
            if dim == 2 {
                assert!((mean - 0.5).abs() <= 0.02);
            }
        }
    }

    #[test]
    fn random_density_rank_and_determinism() {
        let r1 = random_density(3, 1, 4).unwrap();
        assert!((r1.purity() - 1.0).abs() < 1e-12);
        let full = random_density(3, 3, 4).unwrap();
        assert!(hermitian_eig(full.matrix()).unwrap().min_eigenvalue() > 0.0);
        assert_eq!(random_density(3, 2, 9).unwrap(), random_density(3, 2, 9).unwrap());
        assert!(matches!(random_density(3, 4, 0), Err(QchanError::Usage(_))));
        assert!(matches!(random_density(3, 0, 0), Err(QchanError::Usage(_))));
    }

    #[test]
    fn constructed_states_pass_their_validator() {
        for seed in 0..10 {
            let rho = random_density(4, 1 + (seed as usize % 4), seed).unwrap();
            assert!(rho.revalidate().is_ok());
            assert!(pure_to_density(&random_pure(3, seed).unwrap()).revalidate().is_ok());
        }
    }

    #[test]
    fn ensemble_validation() {
        let s = DensityMatrix::maximally_mixed(2);
        assert!(StateEnsemble::new(vec![0.5, 0.5], vec![s.clone(), s.clone()]).is_ok());
        assert!(StateEnsemble::new(vec![0.6, 0.5], vec![s.clone(), s.clone()]).is_err());
        assert!(StateEnsemble::new(vec![1.0], vec![s.clone(), s.clone()]).is_err());
        assert!(StateEnsemble::new(vec![0.5, 0.5], vec![s, DensityMatrix::maximally_mixed(3)]).is_err());
    }

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = rng_for(1, 1);
        let u = random_unitary_with(4, &mut rng);
        assert!(u.unitarity_defect() < 1e-13);
        let v = random_isometry_with(6, 2, &mut rng);
        let g = v.adjoint() * &v;
        assert!(ComplexMatrix::new(g).unwrap().distance(&ComplexMatrix::identity(2)) < 1e-13);
    }

    #[test]
    fn schmidt_weights_of_product_and_bell() {
        let prod = PureState::basis(2, 0).tensor(&PureState::basis(2, 1));
        let w = prod.schmidt_weights(2, 2).unwrap();
        assert!((w[0] - 1.0).abs() < 1e-14 && w[1].abs() < 1e-14);
        let bell = PureState::normalized(crate::numerics::cvec(&[(1.0, 0.0), (0.0, 0.0), (0.0, 0.0), (1.0, 0.0)])).unwrap();
        let w = bell.schmidt_weights(2, 2).unwrap();
        assert!((w[0] - 0.5).abs() < 1e-14 && (w[1] - 0.5).abs() < 1e-14);
    }
}
