//! Norm-function interpolation and the extrapolation weight constructor.
//!
//! Interpolation builds, per cell, the symmetric hull of the level set of
//! `u ↦ gauge(F0, u)^{1/p'} · support(F1, u)^{1/p}`, sampled on the shared
//! direction grid: each grid ray contributes the boundary point of the
//! level set, so the hull reproduces the target on the grid exactly while
//! staying inside the exact ball (which keeps the dual-side inequality
//! one-sided safe). Callers can append data rays; the weight constructor
//! adds the rays of its two input fields so the certificate chain
//! `ρ(x, f(x))^p <= ρ₀*(x, f(x))^{p-1} ρ₁(x, f(x))` holds pointwise.

use crate::convexgeom::{dirgrid, ConvexBody};
use crate::dyadic::CubeCollection;
use crate::fields::{kf, ConvexField, VectorField};
use crate::operators::{maximal_norm_estimate, rdf};
use crate::spaces::{
    dual_exponent, lp_norm, rho_dual_norm, rho_norm, LpWSpace, NormFunction,
};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// `1/p` with the convention `1/∞ = 0`.
fn inv(p: f64) -> f64 {
    if p.is_infinite() {
        0.0
    } else {
        1.0 / p
    }
}

/// Interpolated norm function of exponent `p` between the support norm of
/// `F1` (weight `1/p`) and the dual of the support norm of `F0` (weight
/// `1/p'`). Endpoints collapse: `p = 1` gives `ρ₁`, `p = ∞` gives `ρ₀*`.
pub fn interpolate_norm(f0: &ConvexField, f1: &ConvexField, p: f64) -> Result<NormFunction> {
    interpolate_norm_with_rays(f0, f1, p, &[])
}

/// As [`interpolate_norm`], with extra per-cell sample rays taken from the
/// given vector fields.
pub fn interpolate_norm_with_rays(
    f0: &ConvexField,
    f1: &ConvexField,
    p: f64,
    rays: &[&VectorField],
) -> Result<NormFunction> {
    if !(p >= 1.0) {
        return Err(Error::InvalidInput(format!("exponent {p} below 1")));
    }
    let grid = f0.grid;
    let n = f0.n;
    if f1.grid != grid || f1.n != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: f1.n,
        });
    }
    let a = inv(dual_exponent(p)); // exponent on gauge(F0, ·)
    let b = inv(p); // exponent on support(F1, ·)
    let dirs = dirgrid::directions(n);
    let mut balls = Vec::with_capacity(grid.cell_count());
    for c in 0..grid.cell_count() {
        // Rank preconditions, only on the factor that is actually used.
        if a > 0.0 && f0.at(c).rank() < n {
            return Err(Error::InvalidInput(format!(
                "interpolation factor F0 is rank-deficient at cell {c}"
            )));
        }
        if b > 0.0 && f1.at(c).rank() < n {
            return Err(Error::InvalidInput(format!(
                "interpolation factor F1 is rank-deficient at cell {c}"
            )));
        }
        let mut pts: Vec<DVector<f64>> = Vec::with_capacity(dirs.len() + rays.len());
        let push_ray = |d: &DVector<f64>, pts: &mut Vec<DVector<f64>>| {
            let g0 = if a > 0.0 { f0.at(c).gauge(d) } else { 1.0 };
            let s1 = if b > 0.0 { f1.at(c).support(d) } else { 1.0 };
            if !g0.is_finite() || s1 <= 0.0 {
                return; // zero-radius or unbounded ray: dropped
            }
            let phi = g0.powf(a) * s1.powf(b);
            if phi > 0.0 && phi.is_finite() {
                pts.push(d / phi);
            }
        };
        for d in dirs.iter() {
            push_ray(d, &mut pts);
        }
        for field in rays {
            let r = field.at(c);
            let norm = r.norm();
            if norm > 1e-13 {
                push_ray(&(r / norm), &mut pts);
            }
        }
        if pts.is_empty() {
            return Err(Error::InvalidInput(format!(
                "all interpolation directions dropped at cell {c}"
            )));
        }
        balls.push(ConvexBody::polytope(pts)?);
    }
    NormFunction::from_balls(grid, balls)
}

#[derive(Clone, Debug)]
pub struct RhoApReport {
    pub sup: f64,
    pub bracket_lo: f64,
    pub bracket_hi: f64,
}

/// Muckenhoupt estimate of a norm function: per cube, reducing matrices of
/// `u ↦ (Σ_{c⊆Q}|c| ρ(c,u)^p)^{1/p}` and its dual-side analogue, combined
/// as `|Q|^{-1}‖A A'‖` and supped over the family.
pub fn verify_rho_ap(rho: &NormFunction, p: f64, family: &CubeCollection) -> Result<RhoApReport> {
    if family.is_empty() {
        return Err(Error::InvalidInput("verify_rho_ap needs a nonempty family".into()));
    }
    let grid = rho.grid;
    let n = rho.n;
    let p_dual = dual_exponent(p);
    let cellm = grid.cell_measure();
    let mut sup = 0.0f64;
    for q in family.iter() {
        let cells = q.cells(&grid);
        let primal = |u: &DVector<f64>| -> f64 {
            if p.is_infinite() {
                cells.iter().map(|&c| rho.eval(c, u)).fold(0.0, f64::max)
            } else {
                cells
                    .iter()
                    .map(|&c| cellm * rho.eval(c, u).powf(p))
                    .sum::<f64>()
                    .powf(1.0 / p)
            }
        };
        let dual = |v: &DVector<f64>| -> f64 {
            if p_dual.is_infinite() {
                cells.iter().map(|&c| rho.eval_dual(c, v)).fold(0.0, f64::max)
            } else {
                cells
                    .iter()
                    .map(|&c| cellm * rho.eval_dual(c, v).powf(p_dual))
                    .sum::<f64>()
                    .powf(1.0 / p_dual)
            }
        };
        let a = reducing_of_norm(n, &primal)?;
        let a_dual = reducing_of_norm(n, &dual)?;
        let prod = &a * &a_dual;
        let sigma = prod.svd(false, false).singular_values.amax();
        sup = sup.max(sigma / q.measure());
    }
    Ok(RhoApReport {
        sup,
        bracket_lo: sup / n as f64,
        bracket_hi: sup * n as f64,
    })
}

/// Reducing matrix of an arbitrary norm on `R^n` given by a closure: Löwner
/// ellipsoid of the grid-sampled unit ball, inverted to the norm side and
/// pinned below the norm on the grid.
fn reducing_of_norm(n: usize, norm: &dyn Fn(&DVector<f64>) -> f64) -> Result<DMatrix<f64>> {
    if n == 1 {
        let r = norm(&DVector::from_element(1, 1.0));
        return Ok(DMatrix::from_element(1, 1, r));
    }
    let pts: Vec<DVector<f64>> = dirgrid::directions(n)
        .iter()
        .filter_map(|d| {
            let r = norm(d);
            if r > 0.0 && r.is_finite() {
                Some(d / r)
            } else {
                None
            }
        })
        .collect();
    let ball = ConvexBody::polytope(pts)?;
    let loewner = ball.loewner_ellipsoid(crate::operators::REDUCING_EPS)?;
    let lmat = loewner.ellipsoid_matrix().unwrap();
    let mut mat = lmat
        .clone()
        .cholesky()
        .ok_or_else(|| Error::InvalidInput("degenerate norm ball".into()))?
        .inverse();
    mat = (&mat + mat.transpose()) * 0.5;
    let mut worst: f64 = 0.0;
    for d in dirgrid::directions(n).iter() {
        worst = worst.max((&mat * d).norm() / norm(d));
    }
    if worst > 1.0 {
        mat /= worst;
    }
    Ok(mat)
}

/// Everything the extrapolation weight construction measures.
#[derive(Clone, Debug)]
pub struct ExtrapolationCertificate {
    pub p: f64,
    pub rho: NormFunction,
    pub truncation: usize,
    /// `[ρ]_p` estimate over the supplied family.
    pub ap_of_rho: RhoApReport,
    /// `‖f‖_{L^p_ρ} · ‖g‖_{L^{p'}_{ρ*}}`.
    pub product_lhs: f64,
    /// `‖f‖_X · ‖g‖_{X'}`.
    pub product_rhs: f64,
    /// Norm bounds used for the two Rubio de Francia runs.
    pub m_hat: f64,
    pub m_hat_dual: f64,
    /// `f(x) ∈ F0(x)` and `g(x) ∈ F1(x)` per cell (the selection facts the
    /// construction relies on).
    pub selection_ok: bool,
    /// `ap_of_rho.sup / ((2M̂)^{1/p'} (2M̂')^{1/p})`; the lemma predicts this
    /// stays within a dimensional constant.
    pub ap_ratio: f64,
}

impl ExtrapolationCertificate {
    /// The constant-2 product bound with a relative tolerance.
    pub fn product_bound_holds(&self, rel_tol: f64) -> bool {
        self.product_lhs <= 2.0 * self.product_rhs * (1.0 + rel_tol)
    }
}

/// Run the extrapolation construction for `f ∈ X`, `g ∈ X'` with
/// `X = L^{p0}_{W0}`: Rubio de Francia on both sides, interpolation at
/// exponent `p`, and evaluation of every certificate quantity.
pub fn construct_weight(
    f: &VectorField,
    g: &VectorField,
    base: &LpWSpace,
    collection: &CubeCollection,
    p: f64,
    k_trunc: usize,
    seed: u64,
) -> Result<ExtrapolationCertificate> {
    let dual = base.dual();
    let f_norm = lp_norm(f, base);
    let g_norm = lp_norm(g, &dual);
    if f_norm <= 0.0 || g_norm <= 0.0 {
        return Err(Error::InvalidInput(
            "construct_weight needs nonzero f and g".into(),
        ));
    }
    let probe_trials = 8;
    let m0 = maximal_norm_estimate(collection, base, probe_trials, seed)?;
    let m1 = maximal_norm_estimate(collection, &dual, probe_trials, seed ^ 1)?;
    let r0 = rdf(&kf(f), collection, base, k_trunc, m0.upper)?;
    let r1 = rdf(&kf(g), collection, &dual, k_trunc, m1.upper)?;

    let rho = interpolate_norm_with_rays(&r0.field, &r1.field, p, &[f, g])?;
    let p_dual = dual_exponent(p);
    let product_lhs = rho_norm(f, &rho, p) * rho_dual_norm(g, &rho, p_dual);
    let product_rhs = f_norm * g_norm;
    let ap_of_rho = verify_rho_ap(&rho, p, collection)?;

    let selection_ok = (0..f.grid.cell_count()).all(|c| {
        r0.field.at(c).gauge(f.at(c)) <= 1.0 + 1e-9
            && r1.field.at(c).gauge(g.at(c)) <= 1.0 + 1e-9
    });

    let c0 = 2.0 * r0.m_hat;
    let c1 = 2.0 * r1.m_hat;
    let ap_ratio = ap_of_rho.sup / (c0.powf(inv(dual_exponent(p))) * c1.powf(inv(p)));

    Ok(ExtrapolationCertificate {
        p,
        rho,
        truncation: k_trunc,
        ap_of_rho,
        product_lhs,
        product_rhs,
        m_hat: r0.m_hat,
        m_hat_dual: r1.m_hat,
        selection_ok,
        ap_ratio,
    })
}
