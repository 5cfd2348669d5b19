//! The diagonal family S_α = span{diag(1, e^{iα}, 0), diag(0, 1, e^{iα})}.
//!
//! S_α^{⊗N} consists of diagonal operators, so a witness can be taken
//! diagonal and the semidefinite problem becomes a linear program over the
//! 3^N diagonal entries. Permutation symmetry of the N slots collapses those
//! entries to one variable p_{a,b,c} per digit count (a zeros, b ones,
//! c twos) via x_k = a!b!c!/N! · p_{a,b,c}, and the 2^N equations to N + 1.
//!
//! Row l of the reduced system is tr(A₂^{⊗l} ⊗ A₁^{⊗(N−l)} ρ) = 0, which
//! reads Σ_r e^{irα} Σ_s C(2s+r−l, s) p_{N−r−s, 2s+r−l, l−s} = 0 up to the
//! positive factor 1/C(N, l).

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::feasibility::{density_in_complement, FeasibilityOptions, OutcomeKind};
use crate::linalg::{CMat, C64};
use crate::simplex::phase_one;
use crate::subspace::{s_alpha_generators, tensor_power_generators, OperatorSubspace};

/// Phase-one objectives at or below this count as feasible.
pub const LP_TOL: f64 = 1e-12;
pub const MAX_SCAN_N: usize = 18;
pub const MAX_FULL_N: usize = 8;
/// Dense lifted density operators are built up to this many copies.
pub const MAX_DENSE_LIFT_N: usize = 6;
const BOUNDARY_BAND: f64 = 1e-6;

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * i as f64)
}

/// Conjectured threshold π/2 + π/(2N).
pub fn conjectured_threshold(n: usize) -> f64 {
    FRAC_PI_2 + PI / (2.0 * n as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SAlphaSystem {
    pub n: usize,
    pub alpha: f64,
    /// (a, b, c) per column: a descending, then b descending.
    pub vars: Vec<(usize, usize, usize)>,
    /// N + 1 complex rows, one per count l of A₂ factors.
    pub rows: Vec<Vec<C64>>,
}

impl SAlphaSystem {
    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn var_index(&self, a: usize, b: usize, c: usize) -> Option<usize> {
        if a + b + c != self.n {
            return None;
        }
        // a descending: blocks for a' > a come first, block a' has N − a' + 1 entries
        let before: usize = (a + 1..=self.n).map(|ap| self.n - ap + 1).sum();
        Some(before + (self.n - a - b))
    }

    /// Largest row modulus |Σ_j row_j p_j|.
    pub fn residual(&self, p: &[f64]) -> f64 {
        self.rows
            .iter()
            .map(|row| {
                row.iter()
                    .zip(p)
                    .map(|(c, &x)| c * x)
                    .sum::<C64>()
                    .norm()
            })
            .fold(0.0, f64::max)
    }
}

fn reduced_vars(n: usize) -> Vec<(usize, usize, usize)> {
    let mut vars = Vec::with_capacity((n + 1) * (n + 2) / 2);
    for a in (0..=n).rev() {
        for b in (0..=n - a).rev() {
            vars.push((a, b, n - a - b));
        }
    }
    vars
}

pub fn build_reduced_system(n: usize, alpha: f64) -> SAlphaSystem {
    let vars = reduced_vars(n);
    let mut sys = SAlphaSystem {
        n,
        alpha,
        vars,
        rows: Vec::with_capacity(n + 1),
    };
    for l in 0..=n {
        let mut row = vec![C64::new(0.0, 0.0); sys.vars.len()];
        for r in 0..=n {
            let phase = C64::from_polar(1.0, r as f64 * alpha);
            for s in 0..=n - r {
                // b = 2s + r − l ≥ s and c = l − s ≥ 0
                if s > l || s + r < l {
                    continue;
                }
                let (a, b, c) = (n - r - s, 2 * s + r - l, l - s);
                let col = sys.var_index(a, b, c).expect("index in range");
                row[col] += phase * binomial(b, s);
            }
        }
        sys.rows.push(row);
    }
    sys
}

/// The unreduced system: one row per placement pattern of A₂ factors
/// (bit set = A₂, slot 0 most significant), one column per ternary index.
#[derive(Clone, Debug, PartialEq)]
pub struct FullDiagonalSystem {
    pub n: usize,
    pub alpha: f64,
    pub rows: Vec<Vec<C64>>,
}

impl FullDiagonalSystem {
    pub fn residual(&self, x: &[f64]) -> f64 {
        self.rows
            .iter()
            .map(|row| row.iter().zip(x).map(|(c, &v)| c * v).sum::<C64>().norm())
            .fold(0.0, f64::max)
    }
}

fn ternary_digits(mut k: usize, n: usize) -> Vec<usize> {
    let mut digits = vec![0; n];
    for slot in (0..n).rev() {
        digits[slot] = k % 3;
        k /= 3;
    }
    digits
}

pub fn build_full_diagonal_system(n: usize, alpha: f64) -> Result<FullDiagonalSystem> {
    if n > MAX_FULL_N {
        return Err(Error::CapExceeded {
            what: "full diagonal system copies",
            required: n as u128,
            cap: MAX_FULL_N as u128,
        });
    }
    let cols = 3usize.pow(n as u32);
    let digits: Vec<Vec<usize>> = (0..cols).map(|k| ternary_digits(k, n)).collect();
    let rows = (0..1usize << n)
        .map(|pattern| {
            digits
                .iter()
                .map(|t| {
                    let mut shift = 0usize;
                    for (slot, &tk) in t.iter().enumerate() {
                        let bit = (pattern >> (n - 1 - slot)) & 1;
                        match tk.checked_sub(bit) {
                            Some(u @ 0..=1) => shift += u,
                            _ => return C64::new(0.0, 0.0),
                        }
                    }
                    C64::from_polar(1.0, shift as f64 * alpha)
                })
                .collect()
        })
        .collect();
    Ok(FullDiagonalSystem { n, alpha, rows })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LpOutcome {
    pub feasible: bool,
    pub objective: f64,
    /// Nonnegative solution normalized to Σ = 1, present iff feasible.
    pub solution: Option<Vec<f64>>,
}

/// Splits complex rows into real and imaginary parts, appends Σ x = 1 and
/// runs phase one.
fn solve_complex_rows(rows: &[Vec<C64>], width: usize) -> LpOutcome {
    let mut a: Vec<Vec<f64>> = Vec::with_capacity(2 * rows.len() + 1);
    let mut b: Vec<f64> = Vec::with_capacity(2 * rows.len() + 1);
    for row in rows {
        // phases like e^{iπ} carry ~1e-16 imaginary parts that row scaling
        // would otherwise blow up into genuine constraints
        let cutoff = 1e-12 * row.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let chop = |v: f64| if v.abs() <= cutoff { 0.0 } else { v };
        a.push(row.iter().map(|c| chop(c.re)).collect());
        b.push(0.0);
        a.push(row.iter().map(|c| chop(c.im)).collect());
        b.push(0.0);
    }
    a.push(vec![1.0; width]);
    b.push(1.0);
    let res = phase_one(&a, &b);
    let feasible = res.objective <= LP_TOL;
    let solution = feasible.then(|| {
        let s: f64 = res.x.iter().sum();
        res.x.iter().map(|x| x / s).collect()
    });
    LpOutcome {
        feasible,
        objective: res.objective,
        solution,
    }
}

pub fn solve_reduced(sys: &SAlphaSystem) -> LpOutcome {
    solve_complex_rows(&sys.rows, sys.num_vars())
}

/// Nonnegative p with Σ p = 1 (unit trace after lifting) solving the
/// reduced system, if one exists.
pub fn solve_nonneg(sys: &SAlphaSystem) -> Option<Vec<f64>> {
    solve_reduced(sys).solution
}

pub fn solve_full(sys: &FullDiagonalSystem) -> LpOutcome {
    let width = sys.rows.first().map_or(0, Vec::len);
    solve_complex_rows(&sys.rows, width)
}

/// Diagonal entries x_k = a!b!c!/N! · p_{a,b,c}, scaled to sum 1.
pub fn lift_diagonal(p: &[f64], n: usize) -> Result<Vec<f64>> {
    let vars = reduced_vars(n);
    if p.len() != vars.len() {
        return Err(Error::dims(
            format!("{} reduced variables", vars.len()),
            format!("{}", p.len()),
        ));
    }
    if let Some((index, &value)) = p.iter().enumerate().find(|(_, &v)| v < -1e-12) {
        return Err(Error::NegativeEntry { index, value });
    }
    if n > MAX_FULL_N {
        return Err(Error::CapExceeded {
            what: "lifted diagonal copies",
            required: n as u128,
            cap: MAX_FULL_N as u128,
        });
    }
    let probe = build_reduced_system(n, 0.0);
    let nf = factorial(n);
    let mut x: Vec<f64> = (0..3usize.pow(n as u32))
        .map(|k| {
            let t = ternary_digits(k, n);
            let counts = [0, 1, 2].map(|d| t.iter().filter(|&&v| v == d).count());
            let col = probe
                .var_index(counts[0], counts[1], counts[2])
                .expect("digit counts sum to n");
            factorial(counts[0]) * factorial(counts[1]) * factorial(counts[2]) / nf * p[col].max(0.0)
        })
        .collect();
    let total: f64 = x.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidInput("reduced solution is zero".into()));
    }
    x.iter_mut().for_each(|v| *v /= total);
    Ok(x)
}

/// The lifted diagonal density operator on (C³)^{⊗n}.
pub fn lift_solution(p: &[f64], n: usize) -> Result<CMat> {
    if n > MAX_DENSE_LIFT_N {
        return Err(Error::CapExceeded {
            what: "dense lifted density copies",
            required: n as u128,
            cap: MAX_DENSE_LIFT_N as u128,
        });
    }
    Ok(CMat::from_real_diag(&lift_diagonal(p, n)?))
}

/// Closed-form reduced solutions for three and four copies.
pub fn closed_form_solution(n: usize, alpha: f64) -> Result<Vec<f64>> {
    let sys = build_reduced_system(n, alpha);
    let mut p = vec![0.0; sys.num_vars()];
    let mut set = |a: usize, b: usize, c: usize, v: f64| {
        p[sys.var_index(a, b, c).expect("valid index")] = v;
    };
    let (s1, s2, s3) = (alpha.sin(), (2.0 * alpha).sin(), (3.0 * alpha).sin());
    match n {
        3 => {
            set(0, 3, 0, 0.0);
            for (a, b, c) in [(3, 0, 0), (0, 0, 3), (1, 2, 0), (0, 2, 1)] {
                set(a, b, c, s1);
            }
            set(2, 1, 0, -s2);
            set(0, 1, 2, -s2);
            set(1, 1, 1, -2.0 * s2);
            set(1, 0, 2, s3);
            set(2, 0, 1, s3);
        }
        4 => {
            for (a, b, c) in [(4, 0, 0), (0, 0, 4), (0, 4, 0)] {
                set(a, b, c, 1.0);
            }
            set(0, 2, 2, 2.0);
            set(2, 2, 0, 2.0);
            for (a, b, c) in [(0, 1, 3), (3, 1, 0), (0, 3, 1), (1, 3, 0)] {
                set(a, b, c, -2.0 * alpha.cos());
            }
            set(1, 1, 2, 2.0 * (3.0 * alpha).cos());
            set(2, 1, 1, 2.0 * (3.0 * alpha).cos());
            set(2, 0, 2, -2.0 * (4.0 * alpha).cos());
        }
        _ => {
            return Err(Error::InvalidInput(format!(
                "closed forms exist for 3 or 4 copies, not {n}"
            )))
        }
    }
    Ok(p)
}

/// The two-copy diagonal vector (1, −cos α, cos 2α, −cos α, 1, −cos α, cos 2α, −cos α, 1).
pub fn two_copy_closed_form(alpha: f64) -> Vec<f64> {
    let (c1, c2) = (alpha.cos(), (2.0 * alpha).cos());
    vec![1.0, -c1, c2, -c1, 1.0, -c1, c2, -c1, 1.0]
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClosedFormCheck {
    pub n: usize,
    pub alpha: f64,
    pub residual: f64,
    pub min_entry: f64,
    pub p: Vec<f64>,
}

pub fn verify_closed_form(n: usize, alpha: f64) -> Result<ClosedFormCheck> {
    let p = closed_form_solution(n, alpha)?;
    let sys = build_reduced_system(n, alpha);
    Ok(ClosedFormCheck {
        n,
        alpha,
        residual: sys.residual(&p),
        min_entry: p.iter().cloned().fold(f64::INFINITY, f64::min),
        p,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanPoint {
    pub alpha: f64,
    pub feasible: bool,
    pub objective: f64,
    /// Within 1e-6 of the conjectured threshold.
    pub boundary: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThresholdReport {
    pub n: usize,
    /// Refined threshold; absent if the profile is not of the form
    /// infeasible…feasible or has no feasible point.
    pub alpha_star: Option<f64>,
    pub monotone: bool,
    pub conjectured: f64,
    pub profile: Vec<ScanPoint>,
}

fn reduced_feasible(n: usize, alpha: f64) -> LpOutcome {
    solve_reduced(&build_reduced_system(n, alpha))
}

fn scan_grid(grid_step: f64) -> Vec<f64> {
    let steps = ((PI - FRAC_PI_2) / grid_step).floor() as usize;
    let mut grid: Vec<f64> = (0..=steps).map(|i| FRAC_PI_2 + i as f64 * grid_step).collect();
    if PI - grid[grid.len() - 1] > 1e-12 {
        grid.push(PI);
    } else {
        *grid.last_mut().expect("nonempty") = PI;
    }
    grid
}

/// Scans α over [π/2, π] and bisects the feasibility threshold.
pub fn threshold_alpha(n: usize, grid_step: f64, refine_tol: f64) -> Result<ThresholdReport> {
    if n == 0 || n > MAX_SCAN_N {
        return Err(Error::CapExceeded {
            what: "threshold scan copies",
            required: n as u128,
            cap: MAX_SCAN_N as u128,
        });
    }
    if !(grid_step > 0.0) || !(refine_tol > 0.0) {
        return Err(Error::InvalidInput("grid step and tolerance must be positive".into()));
    }
    let conjectured = conjectured_threshold(n);
    let profile: Vec<ScanPoint> = scan_grid(grid_step)
        .into_par_iter()
        .map(|alpha| {
            let lp = reduced_feasible(n, alpha);
            ScanPoint {
                alpha,
                feasible: lp.feasible,
                objective: lp.objective,
                boundary: (alpha - conjectured).abs() <= BOUNDARY_BAND,
            }
        })
        .collect();
    let first_feasible = profile.iter().position(|p| p.feasible);
    let monotone = match first_feasible {
        Some(i) => profile[i..].iter().all(|p| p.feasible),
        None => true,
    };
    let alpha_star = match first_feasible {
        Some(0) if monotone => Some(profile[0].alpha),
        Some(i) if monotone => {
            let (mut lo, mut hi) = (profile[i - 1].alpha, profile[i].alpha);
            while hi - lo > refine_tol {
                let mid = 0.5 * (lo + hi);
                if reduced_feasible(n, mid).feasible {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            Some(0.5 * (lo + hi))
        }
        _ => None,
    };
    Ok(ThresholdReport {
        n,
        alpha_star,
        monotone,
        conjectured,
        profile,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CounterexampleRow {
    pub n: usize,
    pub reduced_feasible: bool,
    pub reduced_objective: f64,
    pub full_feasible: bool,
    pub full_objective: f64,
    /// Outcome of the general semidefinite check, run for n ≤ 3.
    pub sdp: Option<&'static str>,
}

impl CounterexampleRow {
    pub fn consistent(&self) -> bool {
        !self.reduced_feasible
            && !self.full_feasible
            && self.sdp != Some(OutcomeKind::Witness.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CounterexampleReport {
    pub alpha: f64,
    pub rows: Vec<CounterexampleRow>,
    pub all_infeasible: bool,
}

/// Checks α = π/2 for every copy count up to `n_max`: no diagonal witness by
/// either LP, and no general witness for n ≤ 3.
pub fn counterexample_check(n_max: usize, opts: &FeasibilityOptions) -> Result<CounterexampleReport> {
    if n_max > MAX_FULL_N {
        return Err(Error::CapExceeded {
            what: "counterexample copies",
            required: n_max as u128,
            cap: MAX_FULL_N as u128,
        });
    }
    let alpha = FRAC_PI_2;
    let s = OperatorSubspace::from_generators(&s_alpha_generators(alpha), 3)?;
    let rows = (1..=n_max)
        .into_par_iter()
        .map(|n| -> Result<CounterexampleRow> {
            let reduced = reduced_feasible(n, alpha);
            let full = solve_full(&build_full_diagonal_system(n, alpha)?);
            let sdp = if n <= 3 {
                let gens = tensor_power_generators(&s, n, crate::subspace::DEFAULT_GENERATOR_CAP)?;
                Some(density_in_complement(&gens, opts)?.kind.as_str())
            } else {
                None
            };
            Ok(CounterexampleRow {
                n,
                reduced_feasible: reduced.feasible,
                reduced_objective: reduced.objective,
                full_feasible: full.feasible,
                full_objective: full.objective,
                sdp,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let all_infeasible = rows.iter().all(CounterexampleRow::consistent);
    Ok(CounterexampleReport {
        alpha,
        rows,
        all_infeasible,
    })
}
