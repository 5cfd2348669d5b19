//! Semidefinite feasibility: is there a density operator orthogonal to a
//! list of operators?
//!
//! Two searches run side by side. Dykstra's alternating projections look for
//! the density operator directly; projected supergradient ascent on
//! λ_min(Σ c_i H_i) looks for a positive definite combination of the
//! Hermitian constraints, which rules the density operator out.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{
    eigh_unchecked, hs, hs_re, min_eigenpair, psd_project_unchecked, CMat, C64,
};
use crate::subspace::{tensor_power_generators, OperatorSubspace, DEFAULT_GENERATOR_CAP};

/// Hermitian parts at or below this Frobenius norm are dropped.
const DROP_TOL: f64 = 1e-12;
/// Relative cutoff when orthonormalizing the constraint set.
const RANK_CUTOFF: f64 = 1e-10;
/// A combination counts as positive definite above this λ_min.
pub const PD_THRESHOLD: f64 = 1e-9;
const ASCENT_STEPS: usize = 300;

#[derive(Clone, Debug, PartialEq)]
pub struct FeasibilityOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub starts: usize,
    pub seed: u64,
    pub dim_cap: usize,
}

impl Default for FeasibilityOptions {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            max_iter: 20_000,
            starts: 16,
            seed: 0x5EED,
            dim_cap: 1024,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutcomeKind {
    Witness,
    Certificate,
    Indeterminate,
}

impl OutcomeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            OutcomeKind::Witness => "WITNESS",
            OutcomeKind::Certificate => "CERTIFICATE",
            OutcomeKind::Indeterminate => "INDETERMINATE",
        }
    }
}

/// A positive definite element Σ c_i H_i of the real span of `hermitians`.
#[derive(Clone, Debug, PartialEq)]
pub struct Certificate {
    pub coefficients: Vec<f64>,
    pub hermitians: Vec<CMat>,
    pub lambda_min: f64,
}

impl Certificate {
    pub fn combination(&self) -> CMat {
        combine(&self.hermitians, &self.coefficients)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WitnessResiduals {
    pub max_constraint: f64,
    pub lambda_min: f64,
    pub trace_error: f64,
}

/// Diagnostics when neither search concluded.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gap {
    /// Constraint residual of the last normalized primal iterate.
    pub projection_residual: f64,
    /// Best λ_min found on the unit sphere of coefficients.
    pub dual_best: f64,
    pub iterations: usize,
}

impl Gap {
    /// Dual supremum pinned at zero: the span holds a singular PSD element
    /// but, as far as floating point can tell, no definite one.
    pub fn is_boundary(&self) -> bool {
        self.dual_best.abs() <= PD_THRESHOLD
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeasibilityOutcome {
    pub kind: OutcomeKind,
    pub witness: Option<CMat>,
    pub residuals: Option<WitnessResiduals>,
    pub certificate: Option<Certificate>,
    pub gap: Option<Gap>,
}

impl FeasibilityOutcome {
    fn witness(rho: CMat, residuals: WitnessResiduals) -> Self {
        Self {
            kind: OutcomeKind::Witness,
            witness: Some(rho),
            residuals: Some(residuals),
            certificate: None,
            gap: None,
        }
    }

    fn certificate(c: Certificate) -> Self {
        Self {
            kind: OutcomeKind::Certificate,
            witness: None,
            residuals: None,
            certificate: Some(c),
            gap: None,
        }
    }

    fn indeterminate(gap: Gap) -> Self {
        Self {
            kind: OutcomeKind::Indeterminate,
            witness: None,
            residuals: None,
            certificate: None,
            gap: Some(gap),
        }
    }
}

fn combine(hs_list: &[CMat], c: &[f64]) -> CMat {
    let m = hs_list[0].rows();
    let mut out = CMat::zeros(m, m);
    for (h, &ci) in hs_list.iter().zip(c) {
        if ci != 0.0 {
            out.axpy(C64::new(ci, 0.0), h);
        }
    }
    out
}

/// Real-orthonormal basis Q of span_R{H_i} with Q_j = Σ_i r[j][i] H_i.
struct OrthoBasis {
    q: Vec<CMat>,
    r: Vec<Vec<f64>>,
}

fn orthonormalize(hermitians: &[CMat]) -> OrthoBasis {
    let k = hermitians.len();
    let mut q: Vec<CMat> = Vec::new();
    let mut r: Vec<Vec<f64>> = Vec::new();
    for (i, h) in hermitians.iter().enumerate() {
        let norm0 = h.frobenius_norm();
        let mut v = h.clone();
        let mut coef = vec![0.0; k];
        coef[i] = 1.0;
        for _ in 0..2 {
            for (qj, rj) in q.iter().zip(&r) {
                let p = hs_re(qj, &v);
                if p != 0.0 {
                    v.axpy(C64::new(-p, 0.0), qj);
                    for (c, x) in coef.iter_mut().zip(rj) {
                        *c -= p * x;
                    }
                }
            }
        }
        let nv = v.frobenius_norm();
        if nv <= RANK_CUTOFF * norm0.max(1.0) {
            continue;
        }
        q.push(v.scale_real(1.0 / nv));
        r.push(coef.iter().map(|c| c / nv).collect());
    }
    OrthoBasis { q, r }
}

fn check_square_family(mats: &[CMat]) -> Result<usize> {
    let Some(first) = mats.first() else {
        return Err(Error::InvalidInput("empty constraint list".into()));
    };
    let m = first.rows();
    for a in mats {
        if !a.is_square() || a.rows() != m {
            return Err(Error::dims(
                format!("{m}x{m}"),
                format!("{}x{}", a.rows(), a.cols()),
            ));
        }
    }
    Ok(m)
}

/// Hermitian constraint set: (M + M†)/2 and (M − M†)/(2i) for each M.
pub fn hermitian_split(constraints: &[CMat]) -> Vec<CMat> {
    let mut out = Vec::with_capacity(2 * constraints.len());
    for m in constraints {
        for h in [m.hermitian_part(), m.skew_part()] {
            if h.frobenius_norm() > DROP_TOL {
                out.push(h);
            }
        }
    }
    out
}

/// Searches the real span of `hermitians` for a positive definite element.
///
/// Returns the coefficient vector (unit norm with respect to an orthonormal
/// basis of the span) and the achieved λ_min when it exceeds 1e-9.
pub fn pd_in_span(hermitians: &[CMat]) -> Result<Option<(Vec<f64>, f64)>> {
    pd_in_span_with(hermitians, &FeasibilityOptions::default())
}

pub fn pd_in_span_with(
    hermitians: &[CMat],
    opts: &FeasibilityOptions,
) -> Result<Option<(Vec<f64>, f64)>> {
    check_square_family(hermitians)?;
    for h in hermitians {
        if !h.is_hermitian(crate::linalg::HERMITIAN_TOL) {
            return Err(Error::NotHermitian {
                asymmetry: h.asymmetry(),
            });
        }
    }
    let basis = orthonormalize(hermitians);
    let ascent = dual_ascent(&basis.q, opts);
    Ok(ascent.found.then(|| {
        let c = to_original(&basis, &ascent.gamma, hermitians.len());
        let lambda = min_eigenpair(&combine(hermitians, &c)).0;
        (c, lambda)
    }))
}

fn to_original(basis: &OrthoBasis, gamma: &[f64], k: usize) -> Vec<f64> {
    let mut c = vec![0.0; k];
    for (g, rj) in gamma.iter().zip(&basis.r) {
        for (ci, x) in c.iter_mut().zip(rj) {
            *ci += g * x;
        }
    }
    c
}

struct Ascent {
    gamma: Vec<f64>,
    best: f64,
    found: bool,
}

fn normalize_real(v: &mut [f64]) -> f64 {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

/// Maximizes λ_min(Σ γ_j Q_j) over the unit sphere, Q orthonormal.
fn dual_ascent(q: &[CMat], opts: &FeasibilityOptions) -> Ascent {
    let k = q.len();
    let mut best = Ascent {
        gamma: vec![0.0; k],
        best: f64::NEG_INFINITY,
        found: false,
    };
    if k == 0 {
        return best;
    }
    let m = q[0].rows();
    let mut starts: Vec<Vec<f64>> = Vec::with_capacity(opts.starts + 1);
    // projection of the identity onto the span is the natural first guess
    let mut toward_identity: Vec<f64> = q.iter().map(|qj| qj.trace().re).collect();
    if normalize_real(&mut toward_identity) > 1e-12 {
        starts.push(toward_identity);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.starts {
        let mut g: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect();
        normalize_real(&mut g);
        starts.push(g);
    }
    let step0 = 0.5 / (m as f64).sqrt().max(1.0);
    for start in starts {
        let mut gamma = start;
        let mut extra = 0usize;
        for t in 1..=ASCENT_STEPS {
            let (lambda, v) = min_eigenpair(&combine(q, &gamma));
            if lambda > best.best {
                best.best = lambda;
                best.gamma = gamma.clone();
            }
            if lambda > PD_THRESHOLD {
                best.found = true;
                // a few more steps widen the margin cheaply
                extra += 1;
                if extra > 10 {
                    break;
                }
            }
            let grad: Vec<f64> = q.iter().map(|qj| qj.quadratic_form(&v).re).collect();
            let radial: f64 = grad.iter().zip(&gamma).map(|(a, b)| a * b).sum();
            let step = step0 / (t as f64).sqrt();
            for (gi, di) in gamma.iter_mut().zip(&grad) {
                *gi += step * (di - radial * *gi);
            }
            normalize_real(&mut gamma);
        }
        if best.found {
            break;
        }
    }
    best
}

/// Projection onto {X : ⟨Q_j, X⟩ = 0 ∀j, tr X = 1} for orthonormal Q and the
/// unit vector `e` along the part of I orthogonal to span Q.
struct Affine<'a> {
    q: &'a [CMat],
    e: CMat,
    /// ⟨e, X⟩ on the affine set.
    level: f64,
}

impl Affine<'_> {
    fn project(&self, x: &CMat) -> CMat {
        let mut y = x.clone();
        for qj in self.q {
            let p = hs_re(qj, x);
            y.axpy(C64::new(-p, 0.0), qj);
        }
        let p = hs_re(&self.e, x) - self.level;
        y.axpy(C64::new(-p, 0.0), &self.e);
        y
    }
}

fn residuals(constraints: &[CMat], rho: &CMat) -> WitnessResiduals {
    let max_constraint = constraints
        .iter()
        .map(|m| hs(m, rho).norm())
        .fold(0.0, f64::max);
    WitnessResiduals {
        max_constraint,
        lambda_min: eigh_unchecked(rho).min(),
        trace_error: (rho.trace().re - 1.0).abs(),
    }
}

/// Is there a density operator ρ with tr(ρ M) = 0 for every constraint M?
pub fn density_in_complement(
    constraints: &[CMat],
    opts: &FeasibilityOptions,
) -> Result<FeasibilityOutcome> {
    let m = check_square_family(constraints)?;
    if m > opts.dim_cap {
        return Err(Error::CapExceeded {
            what: "feasibility dimension",
            required: m as u128,
            cap: opts.dim_cap as u128,
        });
    }
    let hermitians = hermitian_split(constraints);
    if hermitians.is_empty() {
        let rho = CMat::identity(m).scale_real(1.0 / m as f64);
        let res = residuals(constraints, &rho);
        return Ok(FeasibilityOutcome::witness(rho, res));
    }
    let basis = orthonormalize(&hermitians);

    let certify = |gamma: &[f64]| -> Option<Certificate> {
        let c = to_original(&basis, gamma, hermitians.len());
        let lambda_min = min_eigenpair(&combine(&hermitians, &c)).0;
        (lambda_min >= PD_THRESHOLD).then(|| Certificate {
            coefficients: c,
            hermitians: hermitians.clone(),
            lambda_min,
        })
    };

    // identity inside the span is a certificate on its own
    let identity = CMat::identity(m);
    let mut e = identity.clone();
    let mut along: Vec<f64> = Vec::with_capacity(basis.q.len());
    for qj in &basis.q {
        let p = hs_re(qj, &identity);
        along.push(p);
        e.axpy(C64::new(-p, 0.0), qj);
    }
    let e_norm = e.frobenius_norm();
    if e_norm <= RANK_CUTOFF * (m as f64).sqrt() {
        let mut gamma = along;
        normalize_real(&mut gamma);
        if let Some(c) = certify(&gamma) {
            return Ok(FeasibilityOutcome::certificate(c));
        }
    }

    let ascent = dual_ascent(&basis.q, opts);
    if ascent.found {
        if let Some(c) = certify(&ascent.gamma) {
            return Ok(FeasibilityOutcome::certificate(c));
        }
    }

    if e_norm <= RANK_CUTOFF * (m as f64).sqrt() {
        return Ok(FeasibilityOutcome::indeterminate(Gap {
            projection_residual: f64::INFINITY,
            dual_best: ascent.best,
            iterations: 0,
        }));
    }
    let affine = Affine {
        q: &basis.q,
        e: e.scale_real(1.0 / e_norm),
        level: 1.0 / e_norm,
    };

    let mut x = identity.scale_real(1.0 / m as f64);
    let mut p = CMat::zeros(m, m);
    let mut qd = CMat::zeros(m, m);
    let mut last_residual = f64::INFINITY;
    let mut iterations = 0;
    for it in 1..=opts.max_iter {
        iterations = it;
        let xp = &x + &p;
        let y = affine.project(&xp);
        p = &xp - &y;
        let yq = &y + &qd;
        let x_new = psd_project_unchecked(&yq);
        qd = &yq - &x_new;
        x = x_new;

        let tr = x.trace().re;
        if tr <= 0.0 {
            continue;
        }
        let rho = x.scale_real(1.0 / tr);
        let worst = basis
            .q
            .iter()
            .map(|qj| hs_re(qj, &rho).abs())
            .fold(0.0, f64::max);
        last_residual = worst;
        // cheap test in the orthonormal frame first, then the raw constraints
        if worst <= opts.tol * 1e-2 || (it % 16 == 0 && worst <= opts.tol) {
            let res = residuals(constraints, &rho);
            if res.max_constraint <= opts.tol && res.lambda_min >= -1e-9 && res.trace_error <= 1e-9 {
                return Ok(FeasibilityOutcome::witness(rho, res));
            }
        }
    }
    Ok(FeasibilityOutcome::indeterminate(Gap {
        projection_residual: last_residual,
        dual_best: ascent.best,
        iterations,
    }))
}

/// Parallel distinguishability of a Hermitian-closed space, settled at one
/// copy: a witness for S itself or a positive definite element of S.
pub fn hermitian_space_decision(
    s: &OperatorSubspace,
    opts: &FeasibilityOptions,
) -> Result<FeasibilityOutcome> {
    if !s.is_hermitian_closed() {
        return Err(Error::NotHermitianClosed);
    }
    // S = S† makes the Hermitian parts of the generators span its Hermitian
    // elements, and residuals stay in the units the caller supplied
    density_in_complement(s.generators(), opts)
}

/// Runs the feasibility decision on S^{⊗n} for n = 1..=n_max, stopping at
/// the first witness.
pub fn parallel_check(
    s: &OperatorSubspace,
    n_max: usize,
    opts: &FeasibilityOptions,
) -> Result<Vec<(usize, FeasibilityOutcome)>> {
    let d = s.dim_space() as u128;
    let k = s.dim() as u128;
    let dim = d.checked_pow(n_max as u32).unwrap_or(u128::MAX);
    if dim > opts.dim_cap as u128 {
        return Err(Error::CapExceeded {
            what: "tensor power dimension",
            required: dim,
            cap: opts.dim_cap as u128,
        });
    }
    let count = k.checked_pow(n_max as u32).unwrap_or(u128::MAX);
    if count > DEFAULT_GENERATOR_CAP as u128 {
        return Err(Error::CapExceeded {
            what: "tensor power generators",
            required: count,
            cap: DEFAULT_GENERATOR_CAP as u128,
        });
    }
    let mut out = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let gens = tensor_power_generators(s, n, DEFAULT_GENERATOR_CAP)?;
        let outcome = density_in_complement(&gens, opts)?;
        let stop = outcome.kind == OutcomeKind::Witness;
        out.push((n, outcome));
        if stop {
            break;
        }
    }
    Ok(out)
}
