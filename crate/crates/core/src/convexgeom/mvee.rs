//! Minimum-volume enclosing ellipsoid of a symmetric point set.
//!
//! Central (origin-fixed) Khachiyan ascent with Wolfe-Atwood away steps:
//! maximize `log det Σ u_i v_i v_iᵀ` over the weight simplex. Antipodal pairs
//! collapse automatically since `v vᵀ = (-v)(-v)ᵀ`. At an `ε`-approximate
//! optimum (`max_i g_i <= r(1+ε)` and support weights within `r(1-ε)`),
//! `E = {x : xᵀ(rX)⁻¹x <= 1}` satisfies the symmetric John sandwich
//! `(1+ε)⁻¹ r^{-1/2} E ⊆ conv{±v_i} ⊆ (1+ε) E`.

use nalgebra::{DMatrix, DVector};

pub struct MveeResult {
    /// Symmetric PD matrix `A` with `E = {A z : |z| <= 1}`.
    pub mat: DMatrix<f64>,
    /// Final weights on the input points (diagnostic).
    #[allow(dead_code)]
    pub weights: Vec<f64>,
    #[allow(dead_code)]
    pub iterations: usize,
}

pub const DEFAULT_MAX_ITER: usize = 100_000;

/// Requires the points to span `R^r`. `eps` in `(0, 0.5]`.
pub fn mvee_symmetric(points: &[DVector<f64>], eps: f64, max_iter: usize) -> MveeResult {
    let r = points[0].len();
    let k = points.len();
    assert!(k >= r, "need at least r spanning points");
    let rf = r as f64;

    // Scale for conditioning; undone on output.
    let scale = points.iter().map(|p| p.norm()).fold(0.0, f64::max);
    let pts: Vec<DVector<f64>> = points.iter().map(|p| p / scale).collect();

    let mut u = vec![1.0 / k as f64; k];
    let mut iterations = 0;
    loop {
        iterations += 1;
        let mut x = DMatrix::zeros(r, r);
        for (w, p) in u.iter().zip(&pts) {
            if *w > 0.0 {
                x += *w * p * p.transpose();
            }
        }
        let x_inv = x
            .clone()
            .cholesky()
            .map(|c| c.inverse())
            .unwrap_or_else(|| x.clone().pseudo_inverse(1e-14).unwrap());
        let g: Vec<f64> = pts.iter().map(|p| (p.transpose() * &x_inv * p)[0]).collect();

        let (mut j_add, mut g_add) = (0, f64::NEG_INFINITY);
        let (mut j_away, mut g_away) = (0, f64::INFINITY);
        for (j, &gj) in g.iter().enumerate() {
            if gj > g_add {
                j_add = j;
                g_add = gj;
            }
            if u[j] > 1e-15 && gj < g_away {
                j_away = j;
                g_away = gj;
            }
        }

        let converged = g_add <= rf * (1.0 + eps) && g_away >= rf * (1.0 - eps);
        if converged || iterations >= max_iter {
            let a = (rf * &x).symmetric_eigen();
            let mut mat = DMatrix::zeros(r, r);
            for (i, &lam) in a.eigenvalues.iter().enumerate() {
                let col = a.eigenvectors.column(i);
                mat += lam.max(0.0).sqrt() * &col * col.transpose();
            }
            return MveeResult {
                mat: mat * scale,
                weights: u,
                iterations,
            };
        }

        // Choose the larger violation; step size maximizes log det along the
        // segment u + beta (e_j - u), clamped so weights stay nonnegative.
        let (j, gj, away) = if g_add - rf >= rf - g_away {
            (j_add, g_add, false)
        } else {
            (j_away, g_away, true)
        };
        let mut beta = (gj - rf) / (rf * (gj - 1.0));
        if away {
            // The stationary point is only valid for g > 1; for g <= 1 the
            // objective increases all the way to the drop step.
            let lower = -u[j] / (1.0 - u[j]).max(1e-300);
            beta = if gj > 1.0 + 1e-14 { beta.max(lower) } else { lower };
        }
        if beta.abs() < 1e-17 {
            // Numerically stuck; accept current iterate.
            let a = (rf * &x).symmetric_eigen();
            let mut mat = DMatrix::zeros(r, r);
            for (i, &lam) in a.eigenvalues.iter().enumerate() {
                let col = a.eigenvectors.column(i);
                mat += lam.max(0.0).sqrt() * &col * col.transpose();
            }
            return MveeResult {
                mat: mat * scale,
                weights: u,
                iterations,
            };
        }
        for w in u.iter_mut() {
            *w *= 1.0 - beta;
        }
        u[j] += beta;
        u[j] = u[j].max(0.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    #[test]
    fn axis_cross_gives_unit_ball() {
        let pts = vec![
            DVector::from_vec(vec![1.0, 0.0, 0.0]),
            DVector::from_vec(vec![0.0, 1.0, 0.0]),
            DVector::from_vec(vec![0.0, 0.0, 1.0]),
        ];
        let res = mvee_symmetric(&pts, 1e-8, DEFAULT_MAX_ITER);
        let eye = DMatrix::identity(3, 3);
        assert!((res.mat - eye).norm() < 1e-6);
    }

    #[test]
    fn square_gives_sqrt2_disk() {
        // [-1,1]^2 has circular MVEE of radius sqrt(2).
        let pts = vec![
            DVector::from_vec(vec![1.0, 1.0]),
            DVector::from_vec(vec![1.0, -1.0]),
        ];
        let res = mvee_symmetric(&pts, 1e-9, DEFAULT_MAX_ITER);
        let want = DMatrix::identity(2, 2) * 2f64.sqrt();
        assert!((res.mat - want).norm() < 1e-7);
    }

    #[test]
    fn containment_both_sides() {
        for trial in 0..30 {
            let mut rng = Rng::substream(0x3A, trial);
            let r = 2 + rng.below(3);
            let k = r + 2 + rng.below(10);
            let pts: Vec<DVector<f64>> = (0..k)
                .map(|_| DVector::from_fn(r, |_, _| rng.range(-2.0, 2.0)))
                .collect();
            let eps = 1e-7;
            let res = mvee_symmetric(&pts, eps, DEFAULT_MAX_ITER);
            let inv = res.mat.clone().cholesky().unwrap().inverse();
            // Outer: every point inside (1+eps)E.
            for p in &pts {
                assert!((&inv * p).norm() <= 1.0 + 2.0 * eps + 1e-9, "trial {trial}");
            }
            // Ellipsoid not too large: support of E within sqrt(r) of the
            // point-set support in a few random directions (John bound).
            for _ in 0..10 {
                let d = rng.unit_vector(r);
                let supp_e = (&res.mat * &d).norm();
                let supp_k = pts.iter().map(|p| p.dot(&d).abs()).fold(0.0, f64::max);
                assert!(supp_e <= (r as f64).sqrt() * supp_k * (1.0 + 10.0 * eps) + 1e-9);
            }
        }
    }
}
