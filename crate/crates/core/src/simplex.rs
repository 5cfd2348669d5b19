//! Dense phase-one simplex.
//!
//! Decides whether `A x = b, x ≥ 0` has a solution by minimizing the sum of
//! artificial variables. The rows of [A | b] are orthonormalized first, so the
//! returned objective is measured in those units.

use rayon::prelude::*;

/// Tableaux with at least this many entries are updated in parallel.
const PARALLEL_CELLS: usize = 1 << 18;
/// Reduced costs above −COST_TOL are treated as nonnegative.
const COST_TOL: f64 = 1e-10;
/// Pivot candidates smaller than this are ignored in the ratio test.
const PIVOT_TOL: f64 = 1e-11;
/// Rows whose residual after orthogonalization falls below this fraction
/// of their norm are treated as redundant.
const RANK_TOL: f64 = 1e-10;
/// Pivots between refactorizations, at least the row count.
const REFACTOR_EVERY: usize = 64;
/// Basic values this small are snapped to exact zero.
const ZERO_RHS: f64 = 1e-13;
const LEX_TOL: f64 = 1e-12;
/// Candidate pivots below this fraction of the largest one are skipped.
const REL_PIVOT: f64 = 1e-2;
const REPAIR_ROUNDS: usize = 3;
/// Basic values below −REPAIR_TOL times the largest one trigger a repair.
const REPAIR_TOL: f64 = 1e-14;
/// Repairs are only worth it when the artificials are already out.
const REPAIR_MAX_ARTIFICIAL: f64 = 1e-8;
/// Pivots without progress, as a multiple of the column count, before the
/// right hand side is perturbed.
const STALL_FACTOR: usize = 1;
/// Size of the perturbation added to each basic value.
const PERTURB: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseOne {
    /// Optimal sum of artificials (0 iff feasible, up to roundoff).
    pub objective: f64,
    /// Values of the original variables at the optimum, clipped at 0.
    pub x: Vec<f64>,
    pub pivots: usize,
}

/// Runs phase one on `A x = b, x ≥ 0`.
///
/// Deterministic: the most negative reduced cost enters (lowest index on
/// ties) and the lexicographic ratio test picks the leaving row, which
/// excludes cycling on the heavily degenerate systems met here.
pub fn phase_one(a: &[Vec<f64>], b: &[f64]) -> PhaseOne {
    let m = a.len();
    assert_eq!(m, b.len(), "row count mismatch");
    let n = a.first().map_or(0, Vec::len);
    assert!(a.iter().all(|r| r.len() == n), "ragged constraint matrix");

    let (rows, rhs) = orthonormal_rows(a, b, n);
    let m = rows.len();
    let width = n + m;
    let mut basis: Vec<usize> = (n..width).collect();
    let (mut pivots, stalled) = iterate(&rows, &rhs, &mut basis, n, true);
    if stalled {
        // long degenerate runs end once every basic value is distinct and
        // positive; the true right hand side then only needs a few pivots
        let perturbed = perturb(&rows, &rhs, &basis);
        pivots += iterate(&rows, &perturbed, &mut basis, n, false).0;
        pivots += iterate(&rows, &rhs, &mut basis, n, false).0;
    }
    for _ in 0..REPAIR_ROUNDS {
        match repair(&rows, &rhs, &basis, n) {
            Some((fixed, extra)) => {
                basis = fixed;
                pivots += extra;
            }
            None => break,
        }
    }

    let x_basic: Vec<f64> = match tableau(&rows, &rhs, &basis, n) {
        Some((fresh, _)) => fresh.iter().map(|r| r[width]).collect(),
        None => vec![0.0; m],
    };
    let mut x = vec![0.0; n];
    let mut objective = 0.0;
    for (i, &var) in basis.iter().enumerate() {
        let v = x_basic[i];
        if var < n {
            x[var] = v.max(0.0);
        } else {
            objective += v.abs();
        }
    }
    // a basis corrupted by roundoff must not pass for a solution
    let violation = rows
        .iter()
        .zip(&rhs)
        .map(|(r, bi)| (r.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>() - bi).abs())
        .sum::<f64>();
    objective = objective.max(violation);
    PhaseOne {
        objective,
        x,
        pivots,
    }
}

/// Simplex iterations from `basis` until no reduced cost is negative.
/// Columns `n..n + rows.len()` are the artificials. Returns the pivot count
/// and whether it gave up early on a stall (only when `stop_on_stall`).
fn iterate(rows: &[Vec<f64>], rhs: &[f64], basis: &mut [usize], n: usize, stop_on_stall: bool) -> (usize, bool) {
    let m = rows.len();
    let width = n + m;
    let Some((mut t, mut cost)) = tableau(rows, rhs, basis, n) else {
        return (0, false);
    };
    let mut pivots = 0;
    let mut best = f64::INFINITY;
    let mut since_best = 0;
    let max_steps = 50 * (width + 1) * (m + 1);
    let mut blocked = vec![false; width];
    let refactor_every = REFACTOR_EVERY.max(m);
    for _ in 0..max_steps {
        // Dantzig's rule; the ratio test below is what guards against cycling
        let mut enter: Option<usize> = None;
        for j in 0..width {
            if !blocked[j] && cost[j] < -COST_TOL && enter.map_or(true, |e| cost[j] < cost[e]) {
                enter = Some(j);
            }
        }
        let Some(enter) = enter else {
            break;
        };
        let Some(row) = ratio_test(&t, enter, n, width) else {
            // the phase-one objective is bounded below by zero, so an
            // unbounded column can only be roundoff
            blocked[enter] = true;
            continue;
        };
        pivot(&mut t, &mut cost, row, enter);
        basis[row] = enter;
        // degenerate ratios must tie exactly for the lexicographic rule
        for r in t.iter_mut() {
            if r[width].abs() <= ZERO_RHS {
                r[width] = 0.0;
            }
        }
        pivots += 1;
        // cost[width] is minus the objective
        let objective = -cost[width];
        if objective < best - 1e-12 * best.abs().max(1.0) {
            best = objective;
            since_best = 0;
        } else {
            since_best += 1;
            if stop_on_stall && since_best > STALL_FACTOR * width {
                return (pivots, true);
            }
        }
        if pivots % refactor_every == 0 {
            // rebuild from the original rows to shed accumulated roundoff
            if let Some(fresh) = tableau(rows, rhs, basis, n) {
                (t, cost) = fresh;
                blocked.iter_mut().for_each(|b| *b = false);
            }
        }
    }
    (pivots, false)
}

/// Right hand side b + Bε for distinct ε_i > 0, so the current basis stays
/// feasible with every basic value shifted up by ε_i.
fn perturb(rows: &[Vec<f64>], rhs: &[f64], basis: &[usize]) -> Vec<f64> {
    let n = rows.first().map_or(0, Vec::len);
    let m = rows.len();
    let mut out = rhs.to_vec();
    for (k, &var) in basis.iter().enumerate() {
        let eps = PERTURB * (1.0 + (k * 7919 % m.max(1)) as f64 / m.max(1) as f64);
        for (i, o) in out.iter_mut().enumerate() {
            *o += eps * if var < n { rows[i][var] } else if var - n == i { 1.0 } else { 0.0 };
        }
    }
    out
}

/// Restarts phase one when the final basis, evaluated at the exact right
/// hand side, has slightly negative basic values. The problem is rewritten
/// in the current basis, B⁻¹A x = B⁻¹b; rows with a negative value are
/// negated and given a fresh artificial, the others keep their basic
/// variable, whose column there is a unit vector. `None` when nothing
/// needs fixing.
fn repair(rows: &[Vec<f64>], rhs: &[f64], basis: &[usize], n: usize) -> Option<(Vec<usize>, usize)> {
    let m = rows.len();
    let width = n + m;
    let (t, _) = tableau(rows, rhs, basis, n)?;
    let values: Vec<f64> = t.iter().map(|r| r[width]).collect();
    let scale = values.iter().fold(0.0, |acc: f64, v| acc.max(v.abs()));
    let artificial: f64 = basis.iter().zip(&values).filter(|(&v, _)| v >= n).map(|(_, x)| x.abs()).sum();
    let negative = |i: usize| values[i] < -REPAIR_TOL * scale;
    if scale == 0.0 || artificial > REPAIR_MAX_ARTIFICIAL || !(0..m).any(negative) {
        return None;
    }
    let mut rows2 = Vec::with_capacity(m);
    let mut rhs2 = Vec::with_capacity(m);
    let mut basis2 = Vec::with_capacity(m);
    for i in 0..m {
        let sign = if negative(i) { -1.0 } else { 1.0 };
        rows2.push(t[i][..n].iter().map(|v| sign * v).collect::<Vec<f64>>());
        // feasibility is invariant under scaling b, and unit scale keeps the
        // snapping thresholds meaningful
        rhs2.push(sign * values[i] / scale);
        basis2.push(if negative(i) || basis[i] >= n { n + i } else { basis[i] });
    }
    let (extra, _) = iterate(&rows2, &rhs2, &mut basis2, n, false);
    // an artificial of the rewritten problem has the same column as the
    // variable that was basic in its row before
    let fixed = basis2
        .iter()
        .enumerate()
        .map(|(i, &v)| if v >= n { basis[i] } else { v })
        .collect();
    Some((fixed, extra))
}

/// Replaces the rows of [A | b] by an orthonormal basis of their span.
/// The solution set is unchanged; redundant rows, which would otherwise
/// leave degenerate artificials in the basis, disappear. Right-hand sides
/// come out nonnegative.
fn orthonormal_rows(a: &[Vec<f64>], b: &[f64], n: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for (row, &bi) in a.iter().zip(b) {
        let mut v: Vec<f64> = row.iter().copied().chain(std::iter::once(bi)).collect();
        let norm0 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm0 == 0.0 {
            continue;
        }
        for _ in 0..2 {
            for q in &basis {
                let p: f64 = q.iter().zip(&v).map(|(x, y)| x * y).sum();
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= p * qi;
                }
            }
        }
        let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nv <= RANK_TOL * norm0 {
            continue;
        }
        let sign = if v[n] < 0.0 { -1.0 } else { 1.0 };
        v.iter_mut().for_each(|x| *x *= sign / nv);
        basis.push(v);
    }
    let rhs = basis.iter_mut().map(|r| r.pop().expect("augmented row")).collect();
    (basis, rhs)
}

/// Leaving row for `enter`. Rows within ZERO_RHS of the minimum ratio are
/// candidates; of those, pivots far smaller than the largest are dropped so
/// a degenerate tie cannot hand the basis a near-zero pivot, and the
/// lexicographic rule decides among the rest.
fn ratio_test(t: &[Vec<f64>], enter: usize, n: usize, width: usize) -> Option<usize> {
    let eligible = || (0..t.len()).filter(|&i| t[i][enter] > PIVOT_TOL);
    let bound = eligible()
        .map(|i| (t[i][width].max(0.0) + ZERO_RHS) / t[i][enter])
        .fold(f64::INFINITY, f64::min);
    let near = || eligible().filter(|&i| t[i][width] / t[i][enter] <= bound);
    let largest = near().map(|i| t[i][enter]).fold(0.0, f64::max);
    let mut leave: Option<usize> = None;
    for i in near().filter(|&i| t[i][enter] >= REL_PIVOT * largest) {
        leave = match leave {
            Some(l) if !lex_less(&t[i], &t[l], enter, n, width) => Some(l),
            _ => Some(i),
        };
    }
    leave
}

/// Lexicographic comparison of (b_i, (B⁻¹)_i) / t[i][enter] against row l.
fn lex_less(ri: &[f64], rl: &[f64], enter: usize, n: usize, width: usize) -> bool {
    let (pi, pl) = (ri[enter], rl[enter]);
    let keys = std::iter::once(width).chain(n..width);
    for k in keys {
        let (a, b) = (ri[k] / pi, rl[k] / pl);
        if a < b - LEX_TOL {
            return true;
        }
        if a > b + LEX_TOL {
            return false;
        }
    }
    false
}

fn pivot(t: &mut [Vec<f64>], cost: &mut [f64], row: usize, col: usize) {
    let p = t[row][col];
    for v in t[row].iter_mut() {
        *v /= p;
    }
    let pivot_row = t[row].clone();
    let eliminate = |(i, r): (usize, &mut Vec<f64>)| {
        if i == row {
            return;
        }
        let f = r[col];
        if f != 0.0 {
            for (v, pv) in r.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            r[col] = 0.0;
        }
    };
    if t.len() * pivot_row.len() >= PARALLEL_CELLS {
        t.par_iter_mut().enumerate().for_each(eliminate);
    } else {
        t.iter_mut().enumerate().for_each(eliminate);
    }
    let f = cost[col];
    if f != 0.0 {
        for (v, pv) in cost.iter_mut().zip(&pivot_row) {
            *v -= f * pv;
        }
        cost[col] = 0.0;
    }
}

/// Tableau B⁻¹[A | I | b] for the given basis (row i holds basis[i]) and
/// the phase-one reduced costs. `None` if the basis is singular.
fn tableau(rows: &[Vec<f64>], rhs: &[f64], basis: &[usize], n: usize) -> Option<(Vec<Vec<f64>>, Vec<f64>)> {
    let m = rows.len();
    let width = n + m;
    let mut t: Vec<Vec<f64>> = rows
        .iter()
        .zip(rhs)
        .enumerate()
        .map(|(i, (row, &bi))| {
            let mut r = Vec::with_capacity(width + 1);
            r.extend_from_slice(row);
            r.extend((0..m).map(|k| if k == i { 1.0 } else { 0.0 }));
            r.push(bi);
            r
        })
        .collect();
    for (i, &col) in basis.iter().enumerate() {
        let p = (i..m).max_by(|&a, &b| t[a][col].abs().total_cmp(&t[b][col].abs()))?;
        if t[p][col].abs() < 1e-12 {
            return None;
        }
        t.swap(i, p);
        let pv = t[i][col];
        t[i].iter_mut().for_each(|v| *v /= pv);
        let pivot_row = t[i].clone();
        for (r, row) in t.iter_mut().enumerate() {
            if r == i {
                continue;
            }
            let f = row[col];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                row[col] = 0.0;
            }
        }
    }
    let mut cost = vec![0.0; width + 1];
    for j in n..width {
        cost[j] = 1.0;
    }
    for (row, &var) in t.iter().zip(basis) {
        if var >= n {
            for (c, v) in cost.iter_mut().zip(row) {
                *c -= v;
            }
        }
    }
    for &var in basis {
        cost[var] = 0.0;
    }
    Some((t, cost))
}
