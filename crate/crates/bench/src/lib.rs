//! Fixed inputs shared by the benchmarks in `benches/`.

use paradis::subspace::{s_alpha_generators, tensor_power_generators, DEFAULT_GENERATOR_CAP};
use paradis::{CMat, OperatorSubspace, C64};

/// diag(1, e^{iθ}): field angle θ.
pub fn two_phase(theta: f64) -> CMat {
    CMat::from_diag(&[C64::new(1.0, 0.0), C64::from_polar(1.0, theta)])
}

/// Generators of S_α^{⊗n}.
pub fn s_alpha_power(n: usize, alpha: f64) -> Vec<CMat> {
    let s = OperatorSubspace::from_generators(&s_alpha_generators(alpha), 3).expect("nonzero generators");
    tensor_power_generators(&s, n, DEFAULT_GENERATOR_CAP).expect("within cap")
}
