//! The discrete Weyl group `Z_l ⊕ Z_l`, its shift/phase representation,
//! subgroup families, conditional expectations and the subgroup
//! decomposition of the depolarizing channel.
//!
//! `U_{k⊕s} = X^k Z^s` with `X e_j = e_{(j+k) mod l}` and
//! `Z^s e_j = ω^{sj} e_j`, `ω = e^{2πi/l}`, basis indices starting at 0.
//! Projective phases are left exactly as this product produces them.

use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::json;

use crate::channels::{
    depolarizing_choi_closed_form, mixture_of_unitaries, DepolarizingParams, KrausChannel,
    MixtureWeights,
};
use crate::error::{QchanError, Result};
use crate::numerics::{hermitian_eig, ComplexMatrix, C64};
use crate::report::PropositionReport;
use crate::states::DensityMatrix;

/// Eigenvalue clustering tolerance for joint eigenspaces.
pub const CLUSTER_TOL: f64 = 1e-8;

/// Group element `shift ⊕ phase`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct WeylElement {
    pub shift: usize,
    pub phase: usize,
}

impl WeylElement {
    pub fn new(shift: usize, phase: usize) -> Self {
        Self { shift, phase }
    }

    pub fn is_identity(&self) -> bool {
        self.shift == 0 && self.phase == 0
    }

    pub fn add(&self, other: &WeylElement, l: usize) -> WeylElement {
        WeylElement {
            shift: (self.shift + other.shift) % l,
            phase: (self.phase + other.phase) % l,
        }
    }

    pub fn scale(&self, n: usize, l: usize) -> WeylElement {
        WeylElement {
            shift: (self.shift * n) % l,
            phase: (self.phase * n) % l,
        }
    }
}

/// `e^{2πi n / l}`, exact at quarter turns.
fn root_of_unity(n: usize, l: usize) -> C64 {
    let n = n % l;
    if (4 * n).is_multiple_of(l) {
        return match 4 * n / l {
            0 => C64::new(1.0, 0.0),
            1 => C64::new(0.0, 1.0),
            2 => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, -1.0),
        };
    }
    C64::from_polar(1.0, 2.0 * std::f64::consts::PI * n as f64 / l as f64)
}

/// All `l²` unitaries `U_{k⊕s}` of the Weyl representation.
#[derive(Clone, Debug)]
pub struct WeylSystem {
    l: usize,
    unitaries: Vec<ComplexMatrix>,
}

impl WeylSystem {
    /// Panics if `l < 2`; see [`weyl_system`] for the checked form.
    pub fn new(l: usize) -> Self {
        assert!(l >= 2, "Weyl system needs l >= 2");
        let mut unitaries = Vec::with_capacity(l * l);
        for k in 0..l {
            let shift = Self::shift_matrix(l, k);
            for s in 0..l {
                unitaries.push(&shift * &Self::phase_matrix(l, s));
            }
        }
        Self { l, unitaries }
    }

    pub fn shift_matrix(l: usize, k: usize) -> ComplexMatrix {
        let mut m = DMatrix::zeros(l, l);
        for j in 0..l {
            m[((j + k) % l, j)] = C64::new(1.0, 0.0);
        }
        ComplexMatrix::new(m).expect("finite")
    }

    pub fn phase_matrix(l: usize, s: usize) -> ComplexMatrix {
        ComplexMatrix::from_fn(l, |i, j| {
            if i == j {
                root_of_unity(s * j, l)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn elements(&self) -> impl Iterator<Item = WeylElement> + '_ {
        let l = self.l;
        (0..l).flat_map(move |k| (0..l).map(move |s| WeylElement::new(k, s)))
    }

    pub fn unitary(&self, g: WeylElement) -> &ComplexMatrix {
        &self.unitaries[(g.shift % self.l) * self.l + g.phase % self.l]
    }

    /// `‖(1/l²) Σ_g U_g x U_g† − Tr(x)/l · I‖_F`.
    pub fn irreducibility_residual(&self, x: &ComplexMatrix) -> f64 {
        let l = self.l;
        let mut acc = ComplexMatrix::zeros(l);
        for u in &self.unitaries {
            acc = &acc + &x.conjugate_by(u);
        }
        let avg = acc.scale(1.0 / (l * l) as f64);
        avg.distance(&ComplexMatrix::identity(l).scale_complex(x.trace() / l as f64))
    }

    /// Distance of `U_g U_h` from the nearest unit-modulus multiple of `U_{g+h}`.
    pub fn projectivity_defect(&self, g: WeylElement, h: WeylElement) -> f64 {
        let prod = self.unitary(g) * self.unitary(h);
        let target = self.unitary(g.add(&h, self.l));
        // overlap Tr(T† P)/l is the phase when P is proportional to T
        let overlap: C64 = (&target.adjoint() * &prod).trace() / self.l as f64;
        let phase = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { C64::new(1.0, 0.0) };
        prod.distance(&target.scale_complex(phase))
    }
}

pub fn weyl_system(l: usize) -> Result<WeylSystem> {
    if l < 2 {
        return Err(QchanError::Usage(format!("Weyl system needs l >= 2, got {l}")));
    }
    Ok(WeylSystem::new(l))
}

/// Which subgroup a [`SubgroupFamily`] represents.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FamilyLabel {
    /// `G_{0k} = {s ⊕ sk}`; `G0k(0)` is the shift subgroup `G₀`.
    G0k(usize),
    /// Phase subgroup `0 ⊕ Z_l`.
    G1,
    Custom,
}

/// An order-`l` subgroup of the Weyl group with its unitaries.
#[derive(Clone, Debug)]
pub struct SubgroupFamily {
    l: usize,
    label: FamilyLabel,
    elements: Vec<WeylElement>,
    unitaries: Vec<ComplexMatrix>,
}

impl SubgroupFamily {
    /// Validates that `elements` are `l` distinct group elements closed
    /// under addition.
    pub fn new(weyl: &WeylSystem, label: FamilyLabel, elements: Vec<WeylElement>) -> Result<Self> {
        let l = weyl.l();
        let mut sorted = elements.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != l || elements.len() != l {
            return Err(QchanError::Validation(format!(
                "family must have {l} distinct elements, got {} ({} distinct)",
                elements.len(),
                sorted.len()
            )));
        }
        for a in &elements {
            if a.shift >= l || a.phase >= l {
                return Err(QchanError::Validation(format!("element {a:?} is not in Z_{l} ⊕ Z_{l}")));
            }
            for b in &elements {
                let c = a.add(b, l);
                if sorted.binary_search(&c).is_err() {
                    return Err(QchanError::Validation(format!(
                        "family is not closed: {a:?} + {b:?} = {c:?} is missing"
                    )));
                }
            }
        }
        let unitaries = elements.iter().map(|&g| weyl.unitary(g).clone()).collect();
        Ok(Self {
            l,
            label,
            elements,
            unitaries,
        })
    }

    /// `G_{0k}`, listed as `s ⊕ sk` for `s = 0..l`.
    pub fn g0k(weyl: &WeylSystem, k: usize) -> Self {
        let l = weyl.l();
        let elements = (0..l).map(|s| WeylElement::new(s, (s * k) % l)).collect();
        Self::new(weyl, FamilyLabel::G0k(k % l), elements).expect("G_0k is a subgroup")
    }

    /// `G₀ = Z_l ⊕ 0`, the shifts.
    pub fn g0(weyl: &WeylSystem) -> Self {
        Self::g0k(weyl, 0)
    }

    /// `G₁ = 0 ⊕ Z_l`, the phases.
    pub fn g1(weyl: &WeylSystem) -> Self {
        let l = weyl.l();
        let elements = (0..l).map(|s| WeylElement::new(0, s)).collect();
        Self::new(weyl, FamilyLabel::G1, elements).expect("G_1 is a subgroup")
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn label(&self) -> FamilyLabel {
        self.label
    }

    pub fn elements(&self) -> &[WeylElement] {
        &self.elements
    }

    pub fn unitaries(&self) -> &[ComplexMatrix] {
        &self.unitaries
    }
}

/// `E(x) = (1/l) Σ_{g∈family} U_g x U_g†`.
pub fn conditional_expectation(family: &SubgroupFamily) -> KrausChannel {
    mixture_of_unitaries(&MixtureWeights::uniform(family.l), &family.unitaries)
        .expect("family unitaries are unitary")
}

/// `x ↦ Σ_k λ_k U_{g_k} x U_{g_k}†` over the family members, in order.
pub fn family_mixture(family: &SubgroupFamily, weights: &[f64]) -> Result<KrausChannel> {
    mixture_of_unitaries(&MixtureWeights::new(weights.to_vec())?, &family.unitaries)
}

/// Coset representatives `g_1 … g_l` for `G/G₀`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Transversal(Vec<WeylElement>);

impl Transversal {
    /// `{0 ⊕ k}`: the phase subgroup `G₁`.
    pub fn phases(l: usize) -> Self {
        Self((0..l).map(|k| WeylElement::new(0, k)).collect())
    }

    /// Any list hitting each `G₀` coset (each phase index) exactly once.
    pub fn new(l: usize, elements: Vec<WeylElement>) -> Result<Self> {
        let mut seen = vec![false; l];
        if elements.len() != l {
            return Err(QchanError::Validation(format!("transversal needs {l} elements")));
        }
        for g in &elements {
            if g.shift >= l || g.phase >= l || std::mem::replace(&mut seen[g.phase], true) {
                return Err(QchanError::Validation(format!(
                    "{g:?} does not extend a transversal of G/G0"
                )));
            }
        }
        Ok(Self(elements))
    }

    pub fn elements(&self) -> &[WeylElement] {
        &self.0
    }
}

/// Residual of `Σ_k U_{g_k} E₀(x) U_{g_k}† = I` with the default transversal.
pub fn resolution_of_identity_check(l: usize, x: &DensityMatrix) -> Result<PropositionReport> {
    resolution_of_identity_check_with(l, x, &Transversal::phases(l))
}

pub fn resolution_of_identity_check_with(
    l: usize,
    x: &DensityMatrix,
    transversal: &Transversal,
) -> Result<PropositionReport> {
    if x.dim() != l {
        return Err(QchanError::Usage(format!("state has dim {} but l = {l}", x.dim())));
    }
    let weyl = weyl_system(l)?;
    let e0 = conditional_expectation(&SubgroupFamily::g0(&weyl));
    let averaged = e0.apply_matrix(x.matrix());
    let mut total = ComplexMatrix::zeros(l);
    for &g in transversal.elements() {
        total = &total + &averaged.conjugate_by(weyl.unitary(g));
    }
    let residual = total.distance(&ComplexMatrix::identity(l));
    Ok(PropositionReport::residual("eq3", residual, 1e-11)
        .with_witness(json!({ "l": l, "transversal": transversal })))
}

/// Orthogonal rank-one projections generating a fixed-point algebra.
#[derive(Clone, Debug)]
pub struct OrthogonalResolution {
    pub projections: Vec<ComplexMatrix>,
}

impl OrthogonalResolution {
    /// `max_{k,m} ‖P_k P_m − δ_{km} P_k‖_F`.
    pub fn orthogonality_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, pk) in self.projections.iter().enumerate() {
            for (m, pm) in self.projections.iter().enumerate() {
                let prod = pk * pm;
                let target = if k == m { pk.clone() } else { ComplexMatrix::zeros(pk.dim()) };
                worst = worst.max(prod.distance(&target));
            }
        }
        worst
    }

    /// `‖Σ P_k − I‖_F`.
    pub fn completeness_residual(&self) -> f64 {
        let dim = self.projections[0].dim();
        let mut acc = ComplexMatrix::zeros(dim);
        for p in &self.projections {
            acc = &acc + p;
        }
        acc.distance(&ComplexMatrix::identity(dim))
    }
}

/// Projections onto the joint eigenspaces of the family; these generate
/// the algebra of operators fixed by conjugation with every member.
pub fn fixed_point_resolution(family: &SubgroupFamily) -> Result<OrthogonalResolution> {
    joint_eigenspaces(&family.unitaries)
}

/// Rank-one joint eigenprojections of a commuting set of unitaries.
///
/// Each member refines the current subspaces: the restriction is split by
/// the eigenvalues of its Hermitian part and, inside each cluster, of its
/// anti-Hermitian part, which together determine the unitary eigenvalue.
/// Fails when two members do not commute or a joint eigenspace has
/// dimension above one.
pub fn joint_eigenspaces(unitaries: &[ComplexMatrix]) -> Result<OrthogonalResolution> {
    let dim = unitaries
        .first()
        .ok_or_else(|| QchanError::Structure("empty family".into()))?
        .dim();
    for (i, a) in unitaries.iter().enumerate() {
        for (j, b) in unitaries.iter().enumerate().skip(i + 1) {
            let c = a.commutator_norm(b);
            if c > 1e-10 {
                return Err(QchanError::Structure(format!(
                    "fixed-point algebra is not abelian: ‖[U_{i}, U_{j}]‖_F = {c:e}"
                )));
            }
        }
    }

    let mut subspaces: Vec<DMatrix<C64>> = vec![DMatrix::identity(dim, dim)];
    for u in unitaries {
        let hermitian = u.hermitian_part();
        let anti = ComplexMatrix::new((u.inner() - u.inner().adjoint()) * C64::new(0.0, -0.5))
            .expect("finite");
        let mut next = Vec::new();
        for basis in subspaces {
            for cos_block in split_by(&hermitian, &basis)? {
                next.extend(split_by(&anti, &cos_block)?);
            }
        }
        subspaces = next;
    }

    if let Some(big) = subspaces.iter().find(|b| b.ncols() > 1) {
        return Err(QchanError::Structure(format!(
            "joint eigenspace has multiplicity {}; fixed-point algebra is not generated by rank-one projections",
            big.ncols()
        )));
    }
    let projections = subspaces
        .iter()
        .map(|b| ComplexMatrix::new(b * b.adjoint()).expect("finite"))
        .collect();
    Ok(OrthogonalResolution { projections })
}

/// Splits `span(basis)` into eigenspaces of `h` restricted to it.
fn split_by(h: &ComplexMatrix, basis: &DMatrix<C64>) -> Result<Vec<DMatrix<C64>>> {
    if basis.ncols() == 1 {
        return Ok(vec![basis.clone()]);
    }
    let restricted = ComplexMatrix::new(basis.adjoint() * h.inner() * basis)?;
    let eig = hermitian_eig(&restricted)?;
    let mut blocks = Vec::new();
    let mut start = 0;
    for i in 1..=eig.dim() {
        if i == eig.dim() || eig.eigenvalues[i] - eig.eigenvalues[i - 1] > CLUSTER_TOL {
            let cols = eig.eigenvectors.inner().columns(start, i - start);
            blocks.push(basis * cols);
            start = i;
        }
    }
    Ok(blocks)
}

/// True for primes `l ≥ 2`.
pub fn is_prime(l: usize) -> bool {
    l >= 2 && (2..).take_while(|d| d * d <= l).all(|d| !l.is_multiple_of(d))
}

/// Non-identity elements lying in none of `G_{00} … G_{0,l−1}`, `G₁`.
pub fn covering_gap(l: usize) -> Vec<WeylElement> {
    let weyl = WeylSystem::new(l);
    let mut covered = vec![0usize; l * l];
    let mut families: Vec<SubgroupFamily> = (0..l).map(|k| SubgroupFamily::g0k(&weyl, k)).collect();
    families.push(SubgroupFamily::g1(&weyl));
    for f in &families {
        for g in f.elements() {
            covered[g.shift * l + g.phase] += 1;
        }
    }
    weyl.elements()
        .filter(|g| !g.is_identity() && covered[g.shift * l + g.phase] == 0)
        .collect()
}

/// Number of families among `G_{00} … G_{0,l−1}`, `G₁` containing each
/// non-identity element.
pub fn covering_multiplicities(l: usize) -> Vec<(WeylElement, usize)> {
    let weyl = WeylSystem::new(l);
    let mut families: Vec<SubgroupFamily> = (0..l).map(|k| SubgroupFamily::g0k(&weyl, k)).collect();
    families.push(SubgroupFamily::g1(&weyl));
    weyl.elements()
        .filter(|g| !g.is_identity())
        .map(|g| (g, families.iter().filter(|f| f.elements().contains(&g)).count()))
        .collect()
}

/// Subgroup decomposition of the depolarizing channel:
/// `Φ = c₀ Σ_k Φ_k + c₁ Σ_k Σ_{s≥1} Ad(U_{0⊕s}) ∘ Φ_k` with
/// `Φ_k = Σ_s λ_s Ad(U_{s⊕sk})`.
#[derive(Clone, Debug)]
pub struct Eq9Decomposition {
    pub l: usize,
    pub p: f64,
    pub c0: f64,
    pub c1: f64,
    pub lambda: Vec<f64>,
    pub phi_k: Vec<KrausChannel>,
    pub reconstruction: KrausChannel,
    /// Choi distance from the closed-form depolarizing channel.
    pub reconstruction_distance: f64,
}

impl Eq9Decomposition {
    /// `|c₀ + (l−1)c₁ − 1/l|`.
    pub fn normalization_defect(&self) -> f64 {
        (self.c0 + (self.l as f64 - 1.0) * self.c1 - 1.0 / self.l as f64).abs()
    }
}

pub fn eq9_decomposition(l: usize, p: f64) -> Result<Eq9Decomposition> {
    if !is_prime(l) {
        let gap = if l >= 2 { covering_gap(l) } else { Vec::new() };
        let shown: Vec<String> = gap.iter().take(6).map(|g| format!("{}⊕{}", g.shift, g.phase)).collect();
        return Err(QchanError::Usage(format!(
            "the subgroup decomposition needs prime l; for l = {l} the subgroups G_0k and G_1 \
             miss {} non-identity element(s), e.g. {}",
            gap.len(),
            shown.join(", ")
        )));
    }
    let params = DepolarizingParams::new(l, p)?;
    let lf = l as f64;
    let denom = 1.0 - (lf - 1.0) * p / lf;
    let c0 = (1.0 / lf) * (1.0 - (lf * lf - 1.0) * p / (lf * lf)) / denom;
    let c1 = (1.0 / lf) * (p / (lf * lf)) / denom;
    let mut lambda = vec![p / lf; l];
    lambda[0] = denom;

    let weyl = WeylSystem::new(l);
    let phi_k = (0..l)
        .map(|k| family_mixture(&SubgroupFamily::g0k(&weyl, k), &lambda))
        .collect::<Result<Vec<_>>>()?;

    let mut kraus = Vec::with_capacity(l * l * l);
    for k in 0..l {
        for s in 0..l {
            let g = weyl.unitary(WeylElement::new(s, (s * k) % l));
            let w0 = c0 * lambda[s];
            if w0 > 0.0 {
                kraus.push(g.scale(w0.sqrt()));
            }
            let w1 = c1 * lambda[s];
            if w1 > 0.0 {
                for t in 1..l {
                    let h = weyl.unitary(WeylElement::new(0, t));
                    kraus.push((h * g).scale(w1.sqrt()));
                }
            }
        }
    }
    let reconstruction = KrausChannel::new(kraus)?;
    let reconstruction_distance = reconstruction
        .choi()
        .distance(&depolarizing_choi_closed_form(params.l(), params.p()));
    Ok(Eq9Decomposition {
        l,
        p,
        c0,
        c1,
        lambda,
        phi_k,
        reconstruction,
        reconstruction_distance,
    })
}

/// Residuals of `E(Φ(x)) = E(x)` and `Φ(E(x)) = E(x)` for
/// `Φ = Σ λ_k Ad(U_{g_k})` over the family and `E` its average.
pub fn intertwining_check(
    family: &SubgroupFamily,
    weights: &[f64],
    x: &DensityMatrix,
) -> Result<[PropositionReport; 2]> {
    if x.dim() != family.l {
        return Err(QchanError::Usage(format!(
            "state has dim {} but family acts on dim {}",
            x.dim(),
            family.l
        )));
    }
    let phi = family_mixture(family, weights)?;
    let e = conditional_expectation(family);
    let ex = e.apply_matrix(x.matrix());
    let e_phi = e.apply_matrix(&phi.apply_matrix(x.matrix())).distance(&ex);
    let phi_e = phi.apply_matrix(&ex).distance(&ex);
    let witness = json!({ "family": family.label, "weights": weights });
    Ok([
        PropositionReport::residual("eq5.e_after_phi", e_phi, 1e-11).with_witness(witness.clone()),
        PropositionReport::residual("eq5.phi_after_e", phi_e, 1e-11).with_witness(witness),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::depolarizing;
    use crate::states::{pure_to_density, random_density_with, random_pure_with, random_simplex_with, rng_for};

    #[test]
    fn qubit_generators() {
        let w = WeylSystem::new(2);
        let x = ComplexMatrix::from_row_major(2, vec![
            C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0),
        ]).unwrap();
        assert_eq!(w.unitary(WeylElement::new(1, 0)), &x);
        assert_eq!(w.unitary(WeylElement::new(0, 1)), &ComplexMatrix::from_real_diagonal(&[1.0, -1.0]));
        for l in 2..6 {
            assert_eq!(WeylSystem::new(l).unitary(WeylElement::new(0, 0)), &ComplexMatrix::identity(l));
        }
        assert!(weyl_system(1).is_err());
    }

    #[test]
    fn shift_and_phase_action_and_composition() {
        let l = 5;
        let w = WeylSystem::new(l);
        for k in 0..l {
            for s in 0..l {
                let u = w.unitary(WeylElement::new(k, s));
                let prod = &WeylSystem::shift_matrix(l, k) * &WeylSystem::phase_matrix(l, s);
                assert_eq!(u, &prod);
                for j in 0..l {
                    // U_{k⊕s} e_j = ω^{sj} e_{j+k}
                    let expect = C64::from_polar(1.0, 2.0 * std::f64::consts::PI * (s * j) as f64 / l as f64);
                    assert!((u.get((j + k) % l, j) - expect).norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn irreducibility_witness() {
        let mut rng = rng_for(3, 0);
        for l in [2, 3, 4] {
            let w = WeylSystem::new(l);
            let x = random_density_with(l, l, &mut rng).unwrap();
            assert!(w.irreducibility_residual(x.matrix()) <= 1e-12);
        }
    }

    #[test]
    fn projectivity_up_to_l5() {
        for l in 2..=5 {
            let w = WeylSystem::new(l);
            for g in w.elements() {
                for h in w.elements() {
                    assert!(w.projectivity_defect(g, h) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn family_validation() {
        let w = WeylSystem::new(3);
        let err = SubgroupFamily::new(&w, FamilyLabel::Custom, vec![WeylElement::new(0, 0); 3]).unwrap_err();
        assert!(matches!(err, QchanError::Validation(_)));
        let err = SubgroupFamily::new(
            &w,
            FamilyLabel::Custom,
            vec![WeylElement::new(0, 0), WeylElement::new(1, 0), WeylElement::new(0, 1)],
        )
        .unwrap_err();
        assert!(err.to_string().contains("not closed"));
        for k in 0..3 {
            assert_eq!(SubgroupFamily::g0k(&w, k).elements().len(), 3);
        }
    }

    #[test]
    fn phase_expectation_is_diagonal_part() {
        let w = WeylSystem::new(3);
        let e = conditional_expectation(&SubgroupFamily::g1(&w));
        let x = random_density_with(3, 3, &mut rng_for(9, 0)).unwrap();
        let y = e.apply_matrix(x.matrix());
        let diag = ComplexMatrix::from_fn(3, |i, j| if i == j { x.matrix().get(i, i) } else { C64::new(0.0, 0.0) });
        assert!(y.distance(&diag) < 1e-15);
    }

    #[test]
    fn shift_expectation_is_circulant() {
        let w = WeylSystem::new(2);
        let e = conditional_expectation(&SubgroupFamily::g0(&w));
        let y = e.apply_matrix(&ComplexMatrix::from_real_diagonal(&[1.0, 0.0]));
        assert!(y.distance(&ComplexMatrix::identity(2).scale(0.5)) < 1e-15);

        let w3 = WeylSystem::new(3);
        let e3 = conditional_expectation(&SubgroupFamily::g0(&w3));
        let x = random_density_with(3, 3, &mut rng_for(10, 0)).unwrap();
        let y = e3.apply_matrix(x.matrix());
        for i in 0..3 {
            for j in 0..3 {
                assert!((y.get(i, j) - y.get((i + 1) % 3, (j + 1) % 3)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn conditional_expectations_are_idempotent_unital_tp() {
        let w = WeylSystem::new(3);
        let mut fams: Vec<_> = (0..3).map(|k| SubgroupFamily::g0k(&w, k)).collect();
        fams.push(SubgroupFamily::g1(&w));
        for f in fams {
            let e = conditional_expectation(&f);
            let ee = crate::channels::compose(&e, &e).unwrap();
            assert!(e.choi_distance(&ee) <= 1e-11);
            let r = e.structural_checks();
            assert!(r.unital && r.trace_preserving);
            // fixes its own fixed-point algebra
            for p in fixed_point_resolution(&f).unwrap().projections {
                assert!(e.apply_matrix(&p).distance(&p) < 1e-12);
            }
        }
    }

    #[test]
    fn eq3_examples() {
        for l in [2, 3, 5] {
            let r = resolution_of_identity_check(l, &DensityMatrix::maximally_mixed(l)).unwrap();
            assert!(r.lhs < 1e-14 && r.pass);
        }
        let x = pure_to_density(&random_pure_with(3, &mut rng_for(11, 0)));
        assert!(resolution_of_identity_check(3, &x).unwrap().lhs <= 1e-11);
        let x = random_density_with(5, 3, &mut rng_for(11, 1)).unwrap();
        assert!(resolution_of_identity_check(5, &x).unwrap().lhs <= 1e-11);

        // another transversal: one representative with a nonzero shift per coset
        let t = Transversal::new(3, vec![WeylElement::new(2, 0), WeylElement::new(1, 1), WeylElement::new(0, 2)]).unwrap();
        assert!(resolution_of_identity_check_with(3, &x_of(3), &t).unwrap().lhs <= 1e-11);
        assert!(Transversal::new(3, vec![WeylElement::new(1, 0), WeylElement::new(2, 0), WeylElement::new(0, 1)]).is_err());
    }

    fn x_of(l: usize) -> DensityMatrix {
        random_density_with(l, l, &mut rng_for(77, l as u64)).unwrap()
    }

    #[test]
    fn fixed_point_resolutions() {
        for l in 2..=5 {
            let w = WeylSystem::new(l);
            let res = fixed_point_resolution(&SubgroupFamily::g1(&w)).unwrap();
            assert_eq!(res.projections.len(), l);
            for p in &res.projections {
                // each is a coordinate projection
                let k = (0..l).find(|&k| (p.get(k, k).re - 1.0).abs() < 1e-12).expect("coordinate projection");
                assert!(p.distance(&ComplexMatrix::unit(l, k, k)) < 1e-12);
            }
        }

        let w = WeylSystem::new(3);
        let res = fixed_point_resolution(&SubgroupFamily::g0(&w)).unwrap();
        for p in &res.projections {
            // Fourier projections have all entries of modulus 1/3
            for z in p.row_major() {
                assert!((z.norm() - 1.0 / 3.0).abs() < 1e-12);
            }
        }
        assert!(res.orthogonality_residual() < 1e-11 && res.completeness_residual() < 1e-11);

        let w = WeylSystem::new(2);
        let res = fixed_point_resolution(&SubgroupFamily::g0k(&w, 1)).unwrap();
        let u = w.unitary(WeylElement::new(1, 1));
        for p in &res.projections {
            // P is an eigenprojection of U_{1⊕1}: U P = λ P
            let up = u * p;
            let lam = (&p.adjoint() * &up).trace();
            assert!(up.distance(&p.scale_complex(lam)) < 1e-12);
        }
    }

    #[test]
    fn joint_eigenspace_errors() {
        let w = WeylSystem::new(2);
        let x = w.unitary(WeylElement::new(1, 0)).clone();
        let z = w.unitary(WeylElement::new(0, 1)).clone();
        assert!(matches!(joint_eigenspaces(&[x, z]), Err(QchanError::Structure(_))));
        let err = joint_eigenspaces(&[ComplexMatrix::identity(3)]).unwrap_err();
        assert!(err.to_string().contains("multiplicity 3"));
    }

    #[test]
    fn prime_covering() {
        for l in [2, 3, 5, 7] {
            assert!(is_prime(l));
            assert!(covering_gap(l).is_empty());
            assert!(covering_multiplicities(l).iter().all(|&(_, n)| n == 1));
        }
        assert!(!is_prime(4) && !is_prime(1) && !is_prime(9));
        assert!(covering_gap(4).contains(&WeylElement::new(2, 1)));
    }

    #[test]
    fn eq9_examples() {
        for (l, p) in [(2, 0.5), (3, 1.0), (5, 0.4), (3, 9.0 / 8.0)] {
            let d = eq9_decomposition(l, p).unwrap();
            assert!(d.reconstruction_distance <= 1e-10, "l={l} p={p}: {}", d.reconstruction_distance);
            assert!(d.normalization_defect() <= 1e-12);
            assert_eq!(d.phi_k.len(), l);
            let dep = depolarizing(&DepolarizingParams::new(l, p).unwrap());
            assert!(d.reconstruction.choi_distance(&dep) <= 1e-10);
        }
        let err = eq9_decomposition(4, 0.5).unwrap_err();
        assert!(err.to_string().contains("2⊕1"));
        assert!(matches!(eq9_decomposition(3, 2.0), Err(QchanError::Usage(_))));
    }

    #[test]
    fn intertwining_examples() {
        let w = WeylSystem::new(3);
        let g1 = SubgroupFamily::g1(&w);
        let mut rng = rng_for(12, 0);
        let x = random_density_with(3, 3, &mut rng).unwrap();
        let weights = random_simplex_with(3, &mut rng);
        let [a, b] = intertwining_check(&g1, &weights, &x).unwrap();
        assert!(a.pass && b.pass);

        let [_, b] = intertwining_check(&g1, &[1.0 / 3.0; 3], &x).unwrap();
        assert!(b.lhs < 1e-15);

        // x in the fixed algebra (diagonal): Φ(x) = x, E(x) = x
        let diag = crate::states::density_from_matrix(ComplexMatrix::from_real_diagonal(&[0.2, 0.3, 0.5])).unwrap();
        let phi = family_mixture(&g1, &weights).unwrap();
        assert!(phi.apply_matrix(diag.matrix()).distance(diag.matrix()) < 1e-15);
        assert!(conditional_expectation(&g1).apply_matrix(diag.matrix()).distance(diag.matrix()) < 1e-15);
    }
}
