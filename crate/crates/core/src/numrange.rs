//! Numerical range support data and the field angle Θ(A).
//!
//! For one-dimensional S = span{A}, a nonzero PSD operator orthogonal to
//! A^{⊗N} exists exactly when 0 ∈ W(A^{⊗N}), which happens for every
//! N ≥ ⌈π/Θ(A)⌉ unless A is a phase times a positive definite operator.
//!
//! All angle searches run on A/‖A‖_F. Then θ ↦ λ_min(Re(e^{−iθ}A)) is
//! 1-Lipschitz, which lets a grid certify that no separating direction was
//! missed.

use std::f64::consts::{PI, TAU};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    eigh_unchecked, inner, kron, kron_vec, normalize, pd_power, CMat, C64, ONE,
};

/// Marker value of `theta` when the angular numerical range is the whole plane.
pub const FULL_PLANE_THETA: f64 = TAU;

/// Largest witness dimension d^n that `onedim_witness` will build.
pub const MAX_WITNESS_DIM: usize = 1024;

const DEFAULT_GRID: usize = 2048;
const MAX_REFINE_LEVELS: u32 = 20;
const MAX_LIVE: usize = 2048;
/// Support values within this band of zero count as touching (normalized A).
const SUPPORT_EPS: f64 = 1e-12;
/// π/Θ within this distance of an integer k gives optimal_n = k.
const SNAP_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Classification {
    PointedCone,
    HalfPlane,
    FullPlane,
    /// W(A) lies on a line through 0.
    DegenerateLine,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CopyCount {
    Finite(usize),
    Never,
}

impl CopyCount {
    pub fn finite(self) -> Option<usize> {
        match self {
            CopyCount::Finite(n) => Some(n),
            CopyCount::Never => None,
        }
    }
}

impl Serialize for CopyCount {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            CopyCount::Finite(n) => s.serialize_u64(*n as u64),
            CopyCount::Never => s.serialize_str("never"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FieldAngleReport {
    /// Opening angle in radians; `FULL_PLANE_THETA` for the whole plane.
    pub theta: f64,
    pub classification: Classification,
    pub zero_in_range: bool,
    pub optimal_n: CopyCount,
    /// Open arc (lo, hi) of inner normals e^{iθ} strictly separating W(A)
    /// from 0, with lo < hi and hi − lo ≤ π. Present iff pointed.
    #[serde(skip)]
    pub separating_arc: Option<(f64, f64)>,
}

fn check_operand(a: &CMat) -> Result<()> {
    if !a.is_square() {
        return Err(Error::dims(
            "square matrix",
            format!("{}x{}", a.rows(), a.cols()),
        ));
    }
    if a.frobenius_norm() == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    Ok(())
}

/// λ_min of Re(e^{−iθ}A) = (e^{−iθ}A + e^{iθ}A†)/2.
///
/// A strictly positive value certifies that W(A) lies in the open half-plane
/// with inner normal e^{iθ}.
pub fn min_support(a: &CMat, theta: f64) -> Result<f64> {
    check_operand(a)?;
    Ok(Support::new(a, false).value(theta))
}

struct Support {
    a: CMat,
}

impl Support {
    fn new(a: &CMat, normalize: bool) -> Self {
        let a = if normalize {
            a.scale_real(1.0 / a.frobenius_norm())
        } else {
            a.clone()
        };
        Self { a }
    }

    fn rotated_hermitian(&self, theta: f64) -> CMat {
        self.a.scale(C64::from_polar(1.0, -theta)).hermitian_part()
    }

    fn value(&self, theta: f64) -> f64 {
        eigh_unchecked(&self.rotated_hermitian(theta)).min()
    }

    /// Support value and the boundary point ⟨v|A|v⟩ with its unit vector.
    fn boundary(&self, theta: f64) -> (f64, C64, Vec<C64>) {
        let e = eigh_unchecked(&self.rotated_hermitian(theta));
        let v = e.vector(0);
        (e.min(), self.a.quadratic_form(&v), v)
    }
}

struct Scan {
    /// (θ, support value), every grid point and refinement point evaluated.
    samples: Vec<(f64, f64)>,
    positive: Option<f64>,
    spacing: f64,
}

/// Grid scan with Lipschitz-certified refinement: a sample at θ with value
/// g(θ) ≤ −r rules out the whole interval of radius r around it.
fn scan(sup: &Support, grid: usize) -> Scan {
    let h = TAU / grid as f64;
    let mut samples: Vec<(f64, f64)> = (0..grid)
        .map(|k| {
            let t = k as f64 * h;
            (t, sup.value(t))
        })
        .collect();
    if let Some(&(t, _)) = samples.iter().filter(|s| s.1 > 0.0).max_by(|a, b| a.1.total_cmp(&b.1)) {
        return Scan {
            samples,
            positive: Some(t),
            spacing: h,
        };
    }
    let mut radius = h / 2.0;
    let mut live: Vec<f64> = samples
        .iter()
        .filter(|s| s.1 > -radius)
        .map(|s| s.0)
        .collect();
    for _ in 0..MAX_REFINE_LEVELS {
        if live.is_empty() {
            break;
        }
        radius /= 2.0;
        let mut next = Vec::with_capacity(2 * live.len());
        for &c in &live {
            for t in [c - radius, c + radius] {
                let g = sup.value(t);
                samples.push((t, g));
                if g > 0.0 {
                    return Scan {
                        samples,
                        positive: Some(t),
                        spacing: h,
                    };
                }
                if g > -radius {
                    next.push((g, t));
                }
            }
        }
        if next.len() > MAX_LIVE {
            // plateaus at 0 (0 a vertex of W) keep everything alive; the
            // highest samples are the ones nearest a possible needle arc
            next.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.total_cmp(&b.1)));
            next.truncate(MAX_LIVE);
        }
        live = next.into_iter().map(|x| x.1).collect();
    }
    Scan {
        samples,
        positive: None,
        spacing: h,
    }
}

/// Bisects for the boundary of {g > 0} between `inside` (g > 0) and
/// `outside` (g ≤ 0).
fn bisect_boundary(sup: &Support, mut inside: f64, mut outside: f64) -> f64 {
    for _ in 0..200 {
        if (inside - outside).abs() <= 1e-15 {
            break;
        }
        let mid = 0.5 * (inside + outside);
        if sup.value(mid) > 0.0 {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    0.5 * (inside + outside)
}

fn separating_arc(sup: &Support, start: f64, step: f64) -> (f64, f64) {
    let mut lo_in = start;
    let mut lo_out = start - step;
    while sup.value(lo_out) > 0.0 && start - lo_out < TAU {
        lo_in = lo_out;
        lo_out -= step;
    }
    let mut hi_in = start;
    let mut hi_out = start + step;
    while sup.value(hi_out) > 0.0 && hi_out - start < TAU {
        hi_in = hi_out;
        hi_out += step;
    }
    (bisect_boundary(sup, lo_in, lo_out), bisect_boundary(sup, hi_in, hi_out))
}

/// Golden-section refinement of the best sample; g need not be unimodal
/// globally, but the bracket is one grid cell wide.
fn refine_max(sup: &Support, center: f64, half_width: f64) -> (f64, f64) {
    let invphi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (center - half_width, center + half_width);
    let mut c = b - invphi * (b - a);
    let mut d = a + invphi * (b - a);
    let (mut gc, mut gd) = (sup.value(c), sup.value(d));
    for _ in 0..80 {
        if gc > gd {
            b = d;
            d = c;
            gd = gc;
            c = b - invphi * (b - a);
            gc = sup.value(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + invphi * (b - a);
            gd = sup.value(d);
        }
    }
    let best = [(center, sup.value(center)), (c, gc), (d, gd)]
        .into_iter()
        .max_by(|x, y| x.1.total_cmp(&y.1))
        .expect("nonempty");
    best
}

fn copies_for(theta: f64) -> usize {
    let ratio = PI / theta;
    let k = ratio.round();
    if (ratio - k).abs() <= SNAP_TOL {
        (k as usize).max(1)
    } else {
        ratio.ceil() as usize
    }
}

/// Field angle and minimal parallel copy count of span{A}.
pub fn field_angle(a: &CMat, tol: f64) -> Result<FieldAngleReport> {
    check_operand(a)?;
    let sup = Support::new(a, true);
    let sc = scan(&sup, DEFAULT_GRID);
    if let Some(start) = sc.positive {
        let (lo, hi) = separating_arc(&sup, start, sc.spacing);
        let width = (hi - lo).min(PI);
        let mut theta = (PI - width).max(0.0);
        if theta <= tol {
            theta = 0.0;
        }
        let optimal_n = if theta == 0.0 {
            CopyCount::Never
        } else {
            CopyCount::Finite(copies_for(theta))
        };
        return Ok(FieldAngleReport {
            theta,
            classification: Classification::PointedCone,
            zero_in_range: false,
            optimal_n,
            separating_arc: Some((lo, hi)),
        });
    }

    let &(t_best, _) = sc
        .samples
        .iter()
        .max_by(|x, y| x.1.total_cmp(&y.1))
        .expect("scan produces samples");
    let (t_star, g_star) = refine_max(&sup, t_best, sc.spacing);
    let (classification, theta) = if g_star >= -SUPPORT_EPS {
        if sup.value(t_star + PI) >= -SUPPORT_EPS {
            (Classification::DegenerateLine, PI)
        } else {
            (Classification::HalfPlane, PI)
        }
    } else {
        (Classification::FullPlane, FULL_PLANE_THETA)
    };
    Ok(FieldAngleReport {
        theta,
        classification,
        zero_in_range: true,
        optimal_n: CopyCount::Finite(1),
        separating_arc: None,
    })
}

/// A density operator orthogonal to A^{⊗n}, for any n ≥ optimal_n(A).
pub fn onedim_witness(a: &CMat, n: usize) -> Result<CMat> {
    check_operand(a)?;
    let report = field_angle(a, 1e-9)?;
    let needed = report.optimal_n.finite().ok_or(Error::NotDistinguishable)?;
    if n < needed {
        return Err(Error::InsufficientCopies { needed, given: n });
    }
    let d = a.rows();
    let size = (d as u128).saturating_pow(n as u32);
    if size > MAX_WITNESS_DIM as u128 {
        return Err(Error::CapExceeded {
            what: "witness dimension",
            required: size,
            cap: MAX_WITNESS_DIM as u128,
        });
    }
    let core = if report.zero_in_range {
        let psi = zero_vector(a)?;
        CMat::outer(&psi, &psi)
    } else {
        let (lo, hi) = report
            .separating_arc
            .expect("pointed cone carries its separating arc");
        cone_witness(a, 0.5 * (lo + hi), needed)?
    };
    let copies_in_core = if report.zero_in_range { 1 } else { needed };
    let mixed = CMat::identity(d).scale_real(1.0 / d as f64);
    let mut rho = core;
    for _ in copies_in_core..n {
        rho = kron(&rho, &mixed);
    }
    let tr = rho.trace().re;
    Ok(rho.scale_real(1.0 / tr).hermitian_part())
}

/// Witness for the pointed-cone case at exactly `n` copies.
///
/// Rotating A onto the cone's axis makes H = Re(A) positive definite; the
/// congruence H^{−1/2}·H^{−1/2} followed by the eigenbasis U of
/// H^{−1/2} G H^{−1/2} diagonalizes A to diag(1 + i a_k). Product vectors
/// built from the extreme columns of H^{−1/2}U then give values of A^{⊗n}
/// with phases spread over nΘ ≥ π, and 0 lies in the hull of three of them.
fn cone_witness(a: &CMat, axis: f64, n: usize) -> Result<CMat> {
    let rotated = a.scale(C64::from_polar(1.0 / a.frobenius_norm(), -axis));
    let h = rotated.hermitian_part();
    let g = rotated.skew_part();
    let h_inv_sqrt = pd_power(&h, -0.5)?;
    let k = h_inv_sqrt.matmul(&g).matmul(&h_inv_sqrt).hermitian_part();
    let e = eigh_unchecked(&k);
    let dim = e.dim();
    let w_min = h_inv_sqrt.mat_vec(&e.vector(0));
    let w_max = h_inv_sqrt.mat_vec(&e.vector(dim - 1));
    let z_min = rotated.quadratic_form(&w_min);
    let z_max = rotated.quadratic_form(&w_max);

    // j copies of w_max followed by n − j copies of w_min
    let value = |j: usize| z_max.powu(j as u32) * z_min.powu((n - j) as u32);
    let j_mid = (0..=n)
        .min_by(|&x, &y| value(x).arg().abs().total_cmp(&value(y).arg().abs()))
        .expect("n ≥ 1");
    let picks = [0, j_mid, n];
    let z: Vec<C64> = picks.iter().map(|&j| value(j)).collect();
    let w = hull_weights(&z).ok_or_else(|| {
        Error::InvalidInput("failed to enclose 0 in the tensor-power numerical range".into())
    })?;

    let size = dim.pow(n as u32);
    let mut rho = CMat::zeros(size, size);
    for (&j, &wj) in picks.iter().zip(&w) {
        if wj == 0.0 {
            continue;
        }
        let mut v = vec![ONE];
        for slot in 0..n {
            v = kron_vec(&v, if slot < j { &w_max } else { &w_min });
        }
        rho.axpy(C64::new(wj, 0.0), &CMat::outer(&v, &v));
    }
    Ok(rho)
}

/// Convex weights w ≥ 0, Σw = 1 with Σ w_k z_k = 0, for three points whose
/// hull contains 0 (possibly on an edge).
fn hull_weights(z: &[C64]) -> Option<Vec<f64>> {
    let scale = z.iter().map(|p| p.norm()).fold(0.0, f64::max);
    let p: Vec<C64> = z.iter().map(|&q| q / scale).collect();
    // barycentric coordinates of 0
    let det = (p[1] - p[0]).re * (p[2] - p[0]).im - (p[1] - p[0]).im * (p[2] - p[0]).re;
    let cross = |a: C64, b: C64| a.re * b.im - a.im * b.re;
    if det.abs() > 1e-9 {
        let w0 = cross(p[1], p[2]) / det;
        let w1 = cross(p[2], p[0]) / det;
        let w2 = cross(p[0], p[1]) / det;
        let w = [w0, w1, w2];
        if w.iter().all(|&x| x >= -1e-9) {
            let w: Vec<f64> = w.iter().map(|x| x.max(0.0)).collect();
            let s: f64 = w.iter().sum();
            return Some(w.iter().map(|x| x / s).collect());
        }
    }
    // collinear: pick the most nearly antipodal pair
    let mut best: Option<(f64, usize, usize)> = None;
    for i in 0..3 {
        for j in i + 1..3 {
            let (a, b) = (p[i], p[j]);
            if a.norm() == 0.0 || b.norm() == 0.0 {
                continue;
            }
            let c = (a.conj() * b).re / (a.norm() * b.norm());
            if best.map_or(true, |(bc, _, _)| c < bc) {
                best = Some((c, i, j));
            }
        }
    }
    if let Some(i) = p.iter().position(|q| q.norm() <= 1e-14) {
        let mut w = vec![0.0; 3];
        w[i] = 1.0;
        return Some(w);
    }
    let (c, i, j) = best?;
    if c > -1.0 + 1e-9 {
        return None;
    }
    let (ra, rb) = (p[i].norm(), p[j].norm());
    let mut w = vec![0.0; 3];
    w[i] = rb / (ra + rb);
    w[j] = ra / (ra + rb);
    Some(w)
}

/// Unit vector ψ with ⟨ψ|A|ψ⟩ = 0, assuming 0 ∈ W(A).
fn zero_vector(a: &CMat) -> Result<Vec<C64>> {
    let sup = Support::new(a, true);
    let an = &sup.a;
    let mut pts: Vec<(C64, Vec<C64>)> = (0..DEFAULT_GRID)
        .map(|k| {
            let (_, p, v) = sup.boundary(k as f64 * TAU / DEFAULT_GRID as f64);
            (p, v)
        })
        .collect();
    let near_zero = 1e-14;
    if let Some((_, v)) = pts.iter().find(|(p, _)| p.norm() <= near_zero) {
        return Ok(v.clone());
    }
    // anchor at the point of largest modulus for conditioning
    pts.sort_by(|x, y| y.0.norm().total_cmp(&x.0.norm()));
    let (p1, v1) = pts[0].clone();
    let offset = |p: C64| (p.arg() - p1.arg()).rem_euclid(TAU);
    let slack = 1e-9;
    let second = pts
        .iter()
        .filter(|(p, _)| offset(*p) <= PI + slack)
        .max_by(|x, y| offset(x.0).total_cmp(&offset(y.0)));
    let third = pts
        .iter()
        .filter(|(p, _)| offset(*p) >= PI - slack)
        .min_by(|x, y| offset(x.0).total_cmp(&offset(y.0)));
    let psi = match (second, third) {
        (Some((p2, v2)), _) if (offset(*p2) - PI).abs() <= slack => {
            value_on_pencil(an, &v1, v2, p1, *p2, C64::new(0.0, 0.0))
        }
        (Some((p2, v2)), Some((p3, v3))) => {
            // where the ray from p1 through 0 crosses the segment [p2, p3]
            let im = |q: C64| (p1.conj() * q).im;
            let denom = im(*p3 - *p2);
            let tau = if denom.abs() > 0.0 {
                (-im(*p2) / denom).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let z = *p2 + (*p3 - *p2) * tau;
            let w = value_on_pencil(an, v2, v3, *p2, *p3, z);
            let zw = an.quadratic_form(&w);
            value_on_pencil(an, &v1, &w, p1, zw, C64::new(0.0, 0.0))
        }
        _ => {
            return Err(Error::InvalidInput(
                "boundary samples do not surround 0".into(),
            ))
        }
    };
    let resid = an.quadratic_form(&psi).norm();
    if resid > 1e-10 {
        return Err(Error::InvalidInput(format!(
            "zero of the numerical range not located (residual {resid:.2e})"
        )));
    }
    Ok(psi)
}

/// Unit ψ in span{x, y} with ⟨ψ|A|ψ⟩ = target, where target lies on the
/// segment between px = ⟨x|A|x⟩ and py = ⟨y|A|y⟩.
///
/// With C = e^{−iω}(A − target) rotated so that ⟨x|C|x⟩ > 0 > ⟨y|C|y⟩, the
/// phase φ is chosen so the cross term of ψ = x + s e^{iφ} y is real, which
/// leaves a real quadratic in s with a positive root.
fn value_on_pencil(a: &CMat, x: &[C64], y: &[C64], px: C64, py: C64, target: C64) -> Vec<C64> {
    if (px - target).norm() <= 1e-15 {
        return x.to_vec();
    }
    if (py - target).norm() <= 1e-15 {
        return y.to_vec();
    }
    let rot = C64::from_polar(1.0, -(px - target).arg());
    let ax = a.mat_vec(x);
    let ay = a.mat_vec(y);
    let cxx = (rot * (px - target)).re;
    let cyy = (rot * (py - target)).re;
    let cxy = rot * (inner(x, &ay) - target * inner(x, y));
    let cyx = rot * (inner(y, &ax) - target * inner(y, x));
    let alpha = cxy.im + cyx.im;
    let beta = cxy.re - cyx.re;
    let phi = (-alpha).atan2(beta);
    let e = C64::from_polar(1.0, phi);
    let cross = (e * cxy + e.conj() * cyx).re;
    let s = if cyy < 0.0 {
        (-cross - (cross * cross - 4.0 * cyy * cxx).sqrt()) / (2.0 * cyy)
    } else {
        // degenerate: target at py up to roundoff
        -cxx / cross
    };
    let mut psi: Vec<C64> = x.iter().zip(y).map(|(&xi, &yi)| xi + e * s * yi).collect();
    normalize(&mut psi);
    psi
}
