//! Channel pairs realizing a prescribed operator subspace, and simulation of
//! the parallel discrimination scheme.
//!
//! Every T_i with T_i†T_i ≤ I factors as U_i†V_i with U_i, V_i isometries into
//! a 2d-dimensional space: block k holds |α_k⟩ = e_{2k} and
//! |β_k⟩ = σ_k e_{2k} + √(1 − σ_k²) e_{2k+1}, so ⟨α_k|β_k⟩ = σ_k. Tagging the
//! i-th isometry with an orthogonal label |i⟩ kills the cross terms.

use crate::error::{Error, Result};
use crate::linalg::{eigh, kron, svd, CMat, C64, ONE, ZERO};
use crate::subspace::{KrausChannel, OperatorSubspace};

/// Cap on the output dimension of the R ⊗ (channel output)^{⊗n} register
/// and on the number of Kraus tuples enumerated.
pub const SIMULATION_CAP: usize = 4096;

#[derive(Clone, Debug, PartialEq)]
pub struct ChannelPair {
    pub e: KrausChannel,
    pub f: KrausChannel,
    pub target: OperatorSubspace,
    /// E_i†F_i = scale_factors[i] · target.basis()[i].
    pub scale_factors: Vec<f64>,
}

/// Isometries U, V : C^d → C^{2d} with U†V = t, assuming ‖t‖₂ ≤ 1.
fn isometry_pair(t: &CMat) -> (CMat, CMat) {
    let d = t.rows();
    let dec = svd(t);
    let mut u = CMat::zeros(2 * d, d);
    let mut v = CMat::zeros(2 * d, d);
    for k in 0..d {
        let sigma = dec.sigma.get(k).copied().unwrap_or(0.0).min(1.0);
        let rest = (1.0 - sigma * sigma).max(0.0).sqrt();
        let psi = dec.u.column(k);
        let phi = dec.v.column(k);
        for col in 0..d {
            // |α⟩⟨ψ| and |β⟩⟨φ| contribute row 2k (and 2k+1 for β)
            let pc = psi[col].conj();
            let fc = phi[col].conj();
            u[(2 * k, col)] += pc;
            v[(2 * k, col)] += fc * sigma;
            v[(2 * k + 1, col)] += fc * rest;
        }
    }
    (u, v)
}

/// Builds E, F with span{E_j†F_k} = t.
pub fn channels_from_subspace(t: &OperatorSubspace) -> Result<ChannelPair> {
    let n_gen = t.dim();
    let norm = 1.0 / (n_gen as f64).sqrt();
    let mut e_kraus = Vec::with_capacity(n_gen);
    let mut f_kraus = Vec::with_capacity(n_gen);
    let mut scale_factors = Vec::with_capacity(n_gen);
    for (i, b) in t.basis().iter().enumerate() {
        let sigma_max = svd(b).sigma[0];
        let (u, v) = isometry_pair(&b.scale_real(1.0 / sigma_max));
        let label = CMat::from_fn(n_gen, 1, |r, _| if r == i { ONE } else { ZERO });
        e_kraus.push(kron(&u, &label).scale_real(norm));
        f_kraus.push(kron(&v, &label).scale_real(norm));
        scale_factors.push(1.0 / (sigma_max * n_gen as f64));
    }
    Ok(ChannelPair {
        e: KrausChannel::new(e_kraus)?,
        f: KrausChannel::new(f_kraus)?,
        target: t.clone(),
        scale_factors,
    })
}

/// Purification |φ⟩ = Σ_i |i⟩_R ⊗ ρ^{1/2}|i⟩_Q of a witness on n copies of C^d.
pub fn discrimination_input(rho: &CMat, d: usize, n: usize) -> Result<Vec<C64>> {
    let dim = d
        .checked_pow(n as u32)
        .filter(|&m| m <= SIMULATION_CAP)
        .ok_or(Error::CapExceeded {
            what: "input register dimension",
            required: (d as u128).saturating_pow(n as u32),
            cap: SIMULATION_CAP as u128,
        })?;
    if rho.shape() != (dim, dim) {
        return Err(Error::dims(
            format!("{dim}x{dim}"),
            format!("{}x{}", rho.rows(), rho.cols()),
        ));
    }
    let eig = eigh(rho).map_err(|_| Error::NotDensityOperator("not Hermitian".into()))?;
    let tr = rho.trace().re;
    if (tr - 1.0).abs() > 1e-9 {
        return Err(Error::NotDensityOperator(format!("trace {tr}")));
    }
    if eig.min() < -1e-9 {
        return Err(Error::NotDensityOperator(format!(
            "negative eigenvalue {}",
            eig.min()
        )));
    }
    let x = eig.reconstruct_with(|l| l.max(0.0).sqrt());
    let mut phi = vec![ZERO; dim * dim];
    for i in 0..dim {
        for q in 0..dim {
            phi[i * dim + q] = x[(q, i)];
        }
    }
    crate::linalg::normalize(&mut phi);
    Ok(phi)
}

/// (I_R ⊗ ch^{⊗n})(|φ⟩⟨φ|), with R of the same dimension as the input.
pub fn apply_parallel(ch: &KrausChannel, n: usize, phi: &[C64]) -> Result<CMat> {
    let din = ch.dim_in();
    let dout = ch.dim_out();
    let cap_err = |what, required: u128| Error::CapExceeded {
        what,
        required,
        cap: SIMULATION_CAP as u128,
    };
    let q_in = din
        .checked_pow(n as u32)
        .ok_or(cap_err("input register dimension", u128::MAX))?;
    let q_out = dout
        .checked_pow(n as u32)
        .ok_or(cap_err("output register dimension", u128::MAX))?;
    let total = q_in as u128 * q_out as u128;
    if total > SIMULATION_CAP as u128 {
        return Err(cap_err("output register dimension", total));
    }
    let tuples = (ch.kraus().len() as u128).pow(n as u32);
    if tuples > SIMULATION_CAP as u128 {
        return Err(cap_err("Kraus tuples", tuples));
    }
    if phi.len() != q_in * q_in {
        return Err(Error::dims(
            format!("state of length {}", q_in * q_in),
            format!("{}", phi.len()),
        ));
    }
    let size = q_in * q_out;
    let mut out = CMat::zeros(size, size);
    let k = ch.kraus().len();
    let mut idx = vec![0usize; n];
    for _ in 0..tuples {
        let op = crate::linalg::kron_all(idx.iter().map(|&i| &ch.kraus()[i]))
            .unwrap_or_else(|| CMat::identity(1));
        let mut psi = vec![ZERO; size];
        for r in 0..q_in {
            let block = &phi[r * q_in..(r + 1) * q_in];
            let image = op.mat_vec(block);
            psi[r * q_out..(r + 1) * q_out].copy_from_slice(&image);
        }
        out.axpy(ONE, &CMat::outer(&psi, &psi));
        // odometer over Kraus index tuples
        for slot in (0..n).rev() {
            idx[slot] += 1;
            if idx[slot] < k {
                break;
            }
            idx[slot] = 0;
        }
    }
    Ok(out)
}

/// tr(ρ_E ρ_F) of the two parallel outputs; zero means perfectly
/// distinguishable by projecting onto the support of one of them.
pub fn verify_orthogonal_outputs(pair: &ChannelPair, n: usize, phi: &[C64]) -> Result<f64> {
    let a = apply_parallel(&pair.e, n, phi)?;
    let b = apply_parallel(&pair.f, n, phi)?;
    Ok(crate::linalg::hs(&a, &b).re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::testutil::*;
    use crate::linalg::{I, vec_norm};
    use crate::subspace::s_alpha_generators;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_2;

    fn partial_trace_r(phi: &[C64], dim: usize) -> CMat {
        CMat::from_fn(dim, dim, |a, b| {
            (0..dim).map(|r| phi[r * dim + a] * phi[r * dim + b].conj()).sum()
        })
    }

    fn random_state(rng: &mut impl Rng, len: usize) -> Vec<C64> {
        let mut v: Vec<C64> = (0..len)
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        crate::linalg::normalize(&mut v);
        v
    }

    fn check_pair(pair: &ChannelPair) {
        assert!(pair.e.completeness_defect() <= 1e-10);
        assert!(pair.f.completeness_defect() <= 1e-10);
        let back = OperatorSubspace::from_channel_pair(&pair.e, &pair.f).unwrap();
        assert!(back.distance(&pair.target) <= 1e-8);
        for (i, (ek, fk)) in pair.e.kraus().iter().zip(pair.f.kraus()).enumerate() {
            let prod = ek.adjoint().matmul(fk);
            let expected = pair.target.basis()[i].scale_real(pair.scale_factors[i]);
            assert!((&prod - &expected).frobenius_norm() < 1e-12);
        }
    }

    #[test]
    fn unitary_generator() {
        let u = pauli_y();
        let t = OperatorSubspace::from_generators(&[u.clone()], 2).unwrap();
        let pair = channels_from_subspace(&t).unwrap();
        check_pair(&pair);
        let prod = pair.e.kraus()[0].adjoint().matmul(&pair.f.kraus()[0]);
        assert!((&prod - &u).frobenius_norm() < 1e-12);
    }

    #[test]
    fn rank_deficient_generator() {
        let t = OperatorSubspace::from_generators(&[CMat::from_real_diag(&[1.0, 0.0])], 2).unwrap();
        let pair = channels_from_subspace(&t).unwrap();
        check_pair(&pair);
        assert_eq!(pair.e.kraus()[0].shape(), (4, 2));
    }

    #[test]
    fn counterexample_space_shapes() {
        let t = OperatorSubspace::from_generators(&s_alpha_generators(FRAC_PI_2), 3).unwrap();
        let pair = channels_from_subspace(&t).unwrap();
        check_pair(&pair);
        assert_eq!(pair.e.kraus()[0].shape(), (12, 3));
        assert_eq!(pair.e.dim_out(), 12);
    }

    #[test]
    fn roundtrip_random_subspaces() {
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        for _ in 0..20 {
            let d = rng.gen_range(1..=4);
            let k = rng.gen_range(1..=4);
            let gens: Vec<CMat> = (0..k).map(|_| random_matrix(&mut rng, d, d)).collect();
            let t = OperatorSubspace::from_generators(&gens, d).unwrap();
            check_pair(&channels_from_subspace(&t).unwrap());
        }
    }

    #[test]
    fn discrimination_input_examples() {
        let phi = discrimination_input(&CMat::identity(3).scale_real(1.0 / 3.0), 3, 1).unwrap();
        let s = 1.0 / 3f64.sqrt();
        for i in 0..3 {
            for q in 0..3 {
                let expected = if i == q { s } else { 0.0 };
                assert!((phi[i * 3 + q] - C64::new(expected, 0.0)).norm() < 1e-12);
            }
        }
        let pure = CMat::from_real_diag(&[1.0, 0.0]);
        let phi = discrimination_input(&pure, 2, 1).unwrap();
        assert!((phi[0] - ONE).norm() < 1e-12);
        assert!((vec_norm(&phi) - 1.0).abs() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(51);
        let mut rho = random_pd(&mut rng, 4);
        rho = rho.scale_real(1.0 / rho.trace().re);
        let phi = discrimination_input(&rho, 2, 2).unwrap();
        assert!((&partial_trace_r(&phi, 4) - &rho).frobenius_norm() < 1e-12);

        assert!(matches!(
            discrimination_input(&CMat::identity(2), 2, 1),
            Err(Error::NotDensityOperator(_))
        ));
    }

    #[test]
    fn identity_channel_keeps_pure_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        let phi = random_state(&mut rng, 9);
        let out = apply_parallel(&KrausChannel::identity(3), 1, &phi).unwrap();
        assert!((&out - &CMat::outer(&phi, &phi)).frobenius_norm() < 1e-12);
    }

    #[test]
    fn outputs_have_unit_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let t = OperatorSubspace::from_generators(&[random_matrix(&mut rng, 2, 2), pauli_x()], 2).unwrap();
        let pair = channels_from_subspace(&t).unwrap();
        for n in 1..=2 {
            let phi = random_state(&mut rng, 4usize.pow(n as u32));
            let out = apply_parallel(&pair.e, n, &phi).unwrap();
            assert!((out.trace().re - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn sigma_z_pair_is_perfectly_distinguishable() {
        let t = OperatorSubspace::from_generators(&[pauli_z()], 2).unwrap();
        let pair = channels_from_subspace(&t).unwrap();
        let phi = discrimination_input(&CMat::identity(2).scale_real(0.5), 2, 1).unwrap();
        assert!(verify_orthogonal_outputs(&pair, 1, &phi).unwrap() <= 1e-8);
    }

    #[test]
    fn equal_channels_overlap_by_purity() {
        let mut rng = ChaCha8Rng::seed_from_u64(54);
        let t = OperatorSubspace::from_generators(&[random_matrix(&mut rng, 2, 2)], 2).unwrap();
        let pair = channels_from_subspace(&t).unwrap();
        let same = ChannelPair {
            f: pair.e.clone(),
            ..pair
        };
        let phi = random_state(&mut rng, 4);
        let out = apply_parallel(&same.e, 1, &phi).unwrap();
        let purity = crate::linalg::hs(&out, &out).re;
        let overlap = verify_orthogonal_outputs(&same, 1, &phi).unwrap();
        assert!((overlap - purity).abs() < 1e-12 && overlap > 0.0);
    }

    #[test]
    fn counterexample_pair_never_orthogonalizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let t = OperatorSubspace::from_generators(&s_alpha_generators(FRAC_PI_2), 3).unwrap();
        let pair = channels_from_subspace(&t).unwrap();
        for n in 1..=2 {
            for _ in 0..20 {
                let phi = random_state(&mut rng, 9usize.pow(n as u32));
                assert!(verify_orthogonal_outputs(&pair, n, &phi).unwrap() > 0.0);
            }
        }
    }

    #[test]
    fn diag_phase_pair_needs_two_copies() {
        let t = OperatorSubspace::from_generators(&[CMat::from_diag(&[ONE, I])], 2).unwrap();
        let pair = channels_from_subspace(&t).unwrap();
        let mut rho = CMat::zeros(4, 4);
        rho[(0, 0)] = C64::new(0.5, 0.0);
        rho[(3, 3)] = C64::new(0.5, 0.0);
        let phi = discrimination_input(&rho, 2, 2).unwrap();
        assert!(verify_orthogonal_outputs(&pair, 2, &phi).unwrap() <= 1e-8);
    }

    #[test]
    fn caps_are_enforced() {
        let t = OperatorSubspace::from_generators(&[pauli_x(), pauli_z()], 2).unwrap();
        let pair = channels_from_subspace(&t).unwrap();
        let phi = vec![ZERO; 2usize.pow(10)];
        assert!(matches!(
            apply_parallel(&pair.e, 5, &phi),
            Err(Error::CapExceeded { .. })
        ));
    }
}
