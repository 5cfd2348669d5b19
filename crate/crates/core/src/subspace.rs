//! Operator subspaces of B(H_d) and Kraus channels.

use crate::error::{Error, Result};
use crate::linalg::{hs, kron, svd, CMat, C64};

/// Relative residual below which a generator is treated as dependent.
pub const DEPENDENCE_TOL: f64 = 1e-9;

/// Default cap on the number of generators of S^{⊗n}.
pub const DEFAULT_GENERATOR_CAP: usize = 4096;

/// A subspace of d×d operators with a Hilbert-Schmidt orthonormal basis.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorSubspace {
    dim_space: usize,
    basis: Vec<CMat>,
    generators: Vec<CMat>,
}

impl OperatorSubspace {
    /// Orthonormalizes a spanning set by modified Gram-Schmidt.
    pub fn from_generators(mats: &[CMat], d: usize) -> Result<Self> {
        for m in mats {
            if m.shape() != (d, d) {
                return Err(Error::dims(
                    format!("{d}x{d}"),
                    format!("{}x{}", m.rows(), m.cols()),
                ));
            }
        }
        let mut basis: Vec<CMat> = Vec::new();
        for g in mats {
            let scale = g.frobenius_norm().max(1.0);
            let mut r = g.clone();
            // two passes keep the basis orthonormal to roundoff
            for _ in 0..2 {
                for b in &basis {
                    let c = hs(b, &r);
                    r.axpy(-c, b);
                }
            }
            let norm = r.frobenius_norm();
            if norm > DEPENDENCE_TOL * scale && basis.len() < d * d {
                basis.push(r.scale_real(1.0 / norm));
            }
        }
        if basis.is_empty() {
            return Err(Error::AllZeroGenerators);
        }
        Ok(Self {
            dim_space: d,
            basis,
            generators: mats.to_vec(),
        })
    }

    /// S_{E,F} = span{E_j† F_k}.
    pub fn from_channel_pair(e: &KrausChannel, f: &KrausChannel) -> Result<Self> {
        if e.dim_in() != f.dim_in() || e.dim_out() != f.dim_out() {
            return Err(Error::dims(
                format!("{}->{}", e.dim_in(), e.dim_out()),
                format!("{}->{}", f.dim_in(), f.dim_out()),
            ));
        }
        let mut products = Vec::with_capacity(e.kraus().len() * f.kraus().len());
        for ej in e.kraus() {
            let ej_dag = ej.adjoint();
            for fk in f.kraus() {
                products.push(ej_dag.matmul(fk));
            }
        }
        Self::from_generators(&products, e.dim_in())
    }

    /// The side length d of the operators.
    pub fn dim_space(&self) -> usize {
        self.dim_space
    }

    /// Dimension of the subspace.
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[CMat] {
        &self.basis
    }

    pub fn generators(&self) -> &[CMat] {
        &self.generators
    }

    /// Orthogonal projection onto S.
    pub fn project(&self, m: &CMat) -> CMat {
        let mut p = CMat::zeros(self.dim_space, self.dim_space);
        for b in &self.basis {
            p.axpy(hs(b, m), b);
        }
        p
    }

    /// ‖m − Proj_S(m)‖_F.
    pub fn residual(&self, m: &CMat) -> f64 {
        (m - &self.project(m)).frobenius_norm()
    }

    /// Membership test, relative to max(1, ‖m‖_F).
    pub fn contains(&self, m: &CMat, tol: f64) -> bool {
        m.shape() == (self.dim_space, self.dim_space)
            && self.residual(m) <= tol * m.frobenius_norm().max(1.0)
    }

    /// Largest projection residual of either basis onto the other span.
    pub fn distance(&self, other: &OperatorSubspace) -> f64 {
        if self.dim_space != other.dim_space {
            return f64::INFINITY;
        }
        let a = self.basis.iter().map(|b| other.residual(b));
        let b = other.basis.iter().map(|b| self.residual(b));
        a.chain(b).fold(0.0, f64::max)
    }

    /// Equality as two-sided containment.
    pub fn same_span(&self, other: &OperatorSubspace, tol: f64) -> bool {
        self.dim() == other.dim() && self.distance(other) <= tol
    }

    /// True iff S = S†.
    pub fn is_hermitian_closed(&self) -> bool {
        self.basis
            .iter()
            .all(|b| self.residual(&b.adjoint()) <= DEPENDENCE_TOL)
    }

    /// A real-linear basis of the Hermitian operators in S, orthonormal over
    /// the reals. Empty if 0 is the only Hermitian element.
    pub fn hermitian_elements(&self) -> Vec<CMat> {
        let k = self.basis.len();
        let d = self.dim_space;
        // columns: real and imaginary coefficient of each basis element;
        // rows: real and imaginary parts of the entries of X − X†
        let mut system = CMat::zeros(2 * d * d, 2 * k);
        for (j, b) in self.basis.iter().enumerate() {
            for r in 0..d {
                for c in 0..d {
                    let row = 2 * (r * d + c);
                    // coefficient 1: X − X† gets b − b†
                    let re_part = b[(r, c)] - b[(c, r)].conj();
                    // coefficient i: X − X† gets i b + i b†
                    let im_part = C64::i() * (b[(r, c)] + b[(c, r)].conj());
                    system[(row, 2 * j)] = C64::new(re_part.re, 0.0);
                    system[(row + 1, 2 * j)] = C64::new(re_part.im, 0.0);
                    system[(row, 2 * j + 1)] = C64::new(im_part.re, 0.0);
                    system[(row + 1, 2 * j + 1)] = C64::new(im_part.im, 0.0);
                }
            }
        }
        let dec = svd(&system);
        let cutoff = DEPENDENCE_TOL * dec.sigma.first().copied().unwrap_or(0.0).max(1.0);
        let mut out = Vec::new();
        for (col, &s) in dec.sigma.iter().enumerate() {
            if s > cutoff {
                continue;
            }
            let mut x = CMat::zeros(d, d);
            for (j, b) in self.basis.iter().enumerate() {
                let coef = C64::new(dec.v[(2 * j, col)].re, dec.v[(2 * j + 1, col)].re);
                x.axpy(coef, b);
            }
            let x = x.hermitian_part();
            let n = x.frobenius_norm();
            if n > DEPENDENCE_TOL {
                out.push(x.scale_real(1.0 / n));
            }
        }
        out
    }
}

/// Generators of S^{⊗n}: all n-fold Kronecker products of basis elements.
///
/// The output is Hilbert-Schmidt orthonormal because the basis is.
pub fn tensor_power_generators(s: &OperatorSubspace, n: usize, cap: usize) -> Result<Vec<CMat>> {
    if n == 0 {
        return Err(Error::InvalidInput("tensor power must be at least 1".into()));
    }
    let required = (s.dim() as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if required > cap as u128 {
        return Err(Error::CapExceeded {
            what: "tensor power generators",
            required,
            cap: cap as u128,
        });
    }
    let mut level: Vec<CMat> = s.basis.clone();
    for _ in 1..n {
        level = level
            .iter()
            .flat_map(|p| s.basis.iter().map(move |b| kron(p, b)))
            .collect();
    }
    Ok(level)
}

/// A completely positive trace-preserving map given by Kraus operators.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausChannel {
    dim_in: usize,
    dim_out: usize,
    kraus: Vec<CMat>,
}

/// Tolerance on ‖Σ K†K − I‖_F.
pub const COMPLETENESS_TOL: f64 = 1e-9;

impl KrausChannel {
    pub fn new(kraus: Vec<CMat>) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| Error::InvalidInput("channel needs at least one Kraus operator".into()))?;
        let (dim_out, dim_in) = first.shape();
        for k in &kraus {
            if k.shape() != (dim_out, dim_in) {
                return Err(Error::dims(
                    format!("{dim_out}x{dim_in}"),
                    format!("{}x{}", k.rows(), k.cols()),
                ));
            }
        }
        let ch = Self {
            dim_in,
            dim_out,
            kraus,
        };
        let defect = ch.completeness_defect();
        if defect > COMPLETENESS_TOL {
            return Err(Error::KrausIncomplete { defect });
        }
        Ok(ch)
    }

    pub fn identity(d: usize) -> Self {
        Self {
            dim_in: d,
            dim_out: d,
            kraus: vec![CMat::identity(d)],
        }
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn kraus(&self) -> &[CMat] {
        &self.kraus
    }

    /// ‖Σ K_i†K_i − I‖_F.
    pub fn completeness_defect(&self) -> f64 {
        let mut sum = CMat::zeros(self.dim_in, self.dim_in);
        for k in &self.kraus {
            sum += &k.adjoint().matmul(k);
        }
        (&sum - &CMat::identity(self.dim_in)).frobenius_norm()
    }

    /// ρ ↦ Σ K ρ K†.
    pub fn apply(&self, rho: &CMat) -> CMat {
        let mut out = CMat::zeros(self.dim_out, self.dim_out);
        for k in &self.kraus {
            out += &k.matmul(rho).matmul(&k.adjoint());
        }
        out
    }
}

/// The two diagonal generators of S_α on H_3: |0⟩⟨0| + e^{iα}|1⟩⟨1| and
/// |1⟩⟨1| + e^{iα}|2⟩⟨2|. At α = π/2 this is the space with no positive
/// definite element that still admits no witness for any number of copies.
pub fn s_alpha_generators(alpha: f64) -> [CMat; 2] {
    let ph = C64::from_polar(1.0, alpha);
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    [
        CMat::from_diag(&[one, ph, zero]),
        CMat::from_diag(&[zero, one, ph]),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::testutil::*;
    use crate::linalg::{hs_inner, I, ONE, ZERO};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn thm5() -> OperatorSubspace {
        let g = s_alpha_generators(std::f64::consts::FRAC_PI_2);
        OperatorSubspace::from_generators(&g, 3).unwrap()
    }

    #[test]
    fn from_generators_examples() {
        let i2 = CMat::identity(2);
        let s = OperatorSubspace::from_generators(&[i2.clone(), i2], 2).unwrap();
        assert_eq!(s.dim(), 1);

        let a = CMat::from_diag(&[ONE, I]);
        let b = CMat::from_diag(&[ONE, -I]);
        assert_eq!(OperatorSubspace::from_generators(&[a, b], 2).unwrap().dim(), 2);

        let s = thm5();
        assert_eq!(s.dim(), 2);
        assert_eq!(s.generators().len(), 2);
    }

    #[test]
    fn from_generators_errors() {
        let z = CMat::zeros(2, 2);
        assert_eq!(
            OperatorSubspace::from_generators(&[z.clone(), z], 2).unwrap_err(),
            Error::AllZeroGenerators
        );
        assert!(OperatorSubspace::from_generators(&[], 2).is_err());
        assert!(matches!(
            OperatorSubspace::from_generators(&[CMat::identity(3)], 2),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn basis_is_orthonormal_and_spans_generators() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let gens: Vec<CMat> = (0..5).map(|_| random_matrix(&mut rng, 3, 3)).collect();
        let mut with_dep = gens.clone();
        let mut comb = gens[0].scale(C64::new(0.3, -1.2));
        comb.axpy(C64::new(2.0, 0.5), &gens[3]);
        with_dep.push(comb);
        let s = OperatorSubspace::from_generators(&with_dep, 3).unwrap();
        assert_eq!(s.dim(), 5);
        for (i, a) in s.basis().iter().enumerate() {
            for (j, b) in s.basis().iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((hs_inner(a, b).unwrap() - C64::new(want, 0.0)).norm() <= 1e-9);
            }
        }
        for g in &with_dep {
            assert!(s.residual(g) <= 1e-9);
        }
    }

    #[test]
    fn overcomplete_lists_cap_at_d_squared() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let gens: Vec<CMat> = (0..7).map(|_| random_matrix(&mut rng, 2, 2)).collect();
        assert_eq!(OperatorSubspace::from_generators(&gens, 2).unwrap().dim(), 4);
    }

    #[test]
    fn channel_pair_examples() {
        let id = KrausChannel::identity(2);
        let s = OperatorSubspace::from_channel_pair(&id, &id).unwrap();
        assert_eq!(s.dim(), 1);
        assert!(s.contains(&CMat::identity(2), 1e-12));

        let h = CMat::from_real_rows(&[vec![1.0, 1.0], vec![1.0, -1.0]]).scale_real(0.5f64.sqrt());
        let u = KrausChannel::new(vec![h.clone()]).unwrap();
        let v = KrausChannel::new(vec![pauli_z()]).unwrap();
        let s = OperatorSubspace::from_channel_pair(&u, &v).unwrap();
        assert_eq!(s.dim(), 1);
        assert!(s.contains(&h.adjoint().matmul(&pauli_z()), 1e-12));

        let w = KrausChannel::identity(3);
        assert!(matches!(
            OperatorSubspace::from_channel_pair(&u, &w),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn kraus_channel_validation() {
        let half = CMat::identity(2).scale_real(0.5);
        assert!(matches!(
            KrausChannel::new(vec![half.clone()]),
            Err(Error::KrausIncomplete { .. })
        ));
        let s = 0.5f64.sqrt();
        let ok = KrausChannel::new(vec![
            CMat::identity(2).scale_real(s),
            pauli_z().scale_real(s),
        ])
        .unwrap();
        let rho = CMat::from_real_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]);
        let out = ok.apply(&rho);
        assert!((out.trace().re - 1.0).abs() < 1e-14);
        assert!((out[(0, 1)]).norm() < 1e-14);
    }

    #[test]
    fn tensor_power_examples() {
        let a = CMat::from_diag(&[ONE, I]);
        let s = OperatorSubspace::from_generators(&[a], 2).unwrap();
        let g = tensor_power_generators(&s, 3, DEFAULT_GENERATOR_CAP).unwrap();
        assert_eq!(g.len(), 1);
        let b = &s.basis()[0];
        let expected = kron(&kron(b, b), b);
        assert!((&g[0] - &expected).frobenius_norm() < 1e-15);

        let g = tensor_power_generators(&thm5(), 2, DEFAULT_GENERATOR_CAP).unwrap();
        assert_eq!(g.len(), 4);
    }

    #[test]
    fn tensor_power_is_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let gens: Vec<CMat> = (0..3).map(|_| random_matrix(&mut rng, 2, 2)).collect();
        let s = OperatorSubspace::from_generators(&gens, 2).unwrap();
        let g = tensor_power_generators(&s, 2, DEFAULT_GENERATOR_CAP).unwrap();
        assert_eq!(g.len(), 9);
        for (i, a) in g.iter().enumerate() {
            for (j, b) in g.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((hs_inner(a, b).unwrap() - C64::new(want, 0.0)).norm() <= 1e-9);
            }
        }
    }

    #[test]
    fn tensor_power_cap() {
        let err = tensor_power_generators(&thm5(), 13, DEFAULT_GENERATOR_CAP).unwrap_err();
        assert_eq!(
            err,
            Error::CapExceeded {
                what: "tensor power generators",
                required: 8192,
                cap: 4096
            }
        );
    }

    #[test]
    fn hermitian_elements_examples() {
        let s = OperatorSubspace::from_generators(&[pauli_z()], 2).unwrap();
        let h = s.hermitian_elements();
        assert_eq!(h.len(), 1);
        assert!(s.contains(&h[0], 1e-12));
        assert!((h[0].frobenius_norm() - 1.0).abs() < 1e-12);

        let s = OperatorSubspace::from_generators(&[CMat::from_diag(&[ONE, I])], 2).unwrap();
        assert!(s.hermitian_elements().is_empty());

        // c1 A1 + c2 A2 = diag(c1, i c1 + c2, i c2) is Hermitian only for
        // c1 = t real, c2 = -i t, giving t·diag(1, 0, 1)
        let h = thm5().hermitian_elements();
        assert_eq!(h.len(), 1);
        let target = CMat::from_real_diag(&[1.0, 0.0, 1.0]).scale_real(0.5f64.sqrt());
        let diff_plus = (&h[0] - &target).frobenius_norm();
        let diff_minus = (&h[0] + &target).frobenius_norm();
        assert!(diff_plus.min(diff_minus) < 1e-10);
    }

    #[test]
    fn hermitian_elements_are_hermitian_and_independent() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..10 {
            let gens: Vec<CMat> = (0..3)
                .map(|i| {
                    if i == 0 {
                        random_hermitian(&mut rng, 3)
                    } else {
                        random_matrix(&mut rng, 3, 3)
                    }
                })
                .collect();
            let s = OperatorSubspace::from_generators(&gens, 3).unwrap();
            let h = s.hermitian_elements();
            assert!(!h.is_empty());
            for (i, a) in h.iter().enumerate() {
                assert!(a.asymmetry() <= 1e-10);
                assert!(s.contains(a, 1e-9));
                for b in &h[..i] {
                    assert!(crate::linalg::hs_re(a, b).abs() <= 1e-9);
                }
            }
        }
        // Hermitian-closed: real dimension equals complex dimension
        let gens: Vec<CMat> = (0..3).map(|_| random_hermitian(&mut rng, 3)).collect();
        let s = OperatorSubspace::from_generators(&gens, 3).unwrap();
        assert_eq!(s.hermitian_elements().len(), 3);
    }

    #[test]
    fn hermitian_closure_examples() {
        let s = OperatorSubspace::from_generators(&[pauli_z()], 2).unwrap();
        assert!(s.is_hermitian_closed());
        let s = OperatorSubspace::from_generators(&[CMat::from_diag(&[ONE, I])], 2).unwrap();
        assert!(!s.is_hermitian_closed());
        assert!(!thm5().is_hermitian_closed());
        let s = OperatorSubspace::from_generators(&[pauli_x(), pauli_y(), pauli_z()], 2).unwrap();
        assert!(s.is_hermitian_closed());
    }

    #[test]
    fn contains_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let gens: Vec<CMat> = (0..2).map(|_| random_matrix(&mut rng, 3, 3)).collect();
        let s = OperatorSubspace::from_generators(&gens, 3).unwrap();
        for g in &gens {
            assert!(s.contains(g, 1e-9));
        }
        let m = random_matrix(&mut rng, 3, 3);
        let perp = &m - &s.project(&m);
        assert!(!s.contains(&perp, 1e-9));
        let mut comb = CMat::zeros(3, 3);
        comb.axpy(C64::new(0.7, -2.0), &s.basis()[0]);
        comb.axpy(C64::new(-1.1, 0.4), &s.basis()[1]);
        assert!(s.contains(&comb, 1e-9));
        let _ = ZERO;
    }

    #[test]
    fn same_span_ignores_basis_choice() {
        let a = CMat::from_diag(&[ONE, I]);
        let b = CMat::from_diag(&[ONE, -I]);
        let s1 = OperatorSubspace::from_generators(&[a.clone(), b.clone()], 2).unwrap();
        let s2 = OperatorSubspace::from_generators(&[&a + &b, &a - &b], 2).unwrap();
        assert!(s1.same_span(&s2, 1e-12));
        let s3 = OperatorSubspace::from_generators(&[a], 2).unwrap();
        assert!(!s1.same_span(&s3, 1e-8));
    }
}
