//! Gauge of a symmetric polytope as a small linear program.
//!
//! For vertices `v_1..v_k` (one per antipodal pair) of `K = conv{±v_i}` the
//! Minkowski functional is
//!
//! ```text
//! gauge_K(u) = min { Σ_i |c_i| : Σ_i c_i v_i = u },
//! ```
//!
//! solved here as `min Σ(a_i + b_i)` over `a, b >= 0` with `V(a - b) = u` by
//! a dense two-phase revised simplex. Row counts are tiny (the span dimension,
//! at most the ambient `n`), so basis solves are cheap; Dantzig pricing with a
//! Bland fallback guarantees termination. The returned primal and dual
//! certificates let callers re-verify the value arithmetically:
//! `Σ c_i v_i = u`, `Σ|c_i| = value`, `|v_i · y| <= 1`, `u · y = value`.

use nalgebra::{DMatrix, DVector};

#[derive(Clone, Debug)]
pub struct L1Solution {
    /// Optimal value `Σ |c_i|` (the gauge).
    pub value: f64,
    /// Signed coefficients per column, `Σ c_i v_i = u`.
    #[allow(dead_code)] // certificate, validated in tests
    pub coeffs: Vec<f64>,
    /// Dual certificate: `|v_i · y| <= 1` and `u · y = value`.
    #[allow(dead_code)]
    pub dual: DVector<f64>,
}

const ENTER_TOL: f64 = 1e-11;
const RATIO_TOL: f64 = 1e-12;
const DANTZIG_CAP: usize = 2_000;
const ITER_CAP: usize = 20_000;

/// Minimum l1-norm decomposition of `target` over `columns`. Returns `None`
/// when `target` is not in the span of the columns (within `feas_tol`).
pub fn l1_decomposition(columns: &[DVector<f64>], target: &DVector<f64>) -> Option<L1Solution> {
    let r = target.len();
    let k = columns.len();
    debug_assert!(columns.iter().all(|c| c.len() == r));
    if k == 0 {
        return if target.norm() <= 1e-14 {
            Some(L1Solution {
                value: 0.0,
                coeffs: vec![],
                dual: DVector::zeros(r),
            })
        } else {
            None
        };
    }

    // Column j < k is +v_j, j in [k, 2k) is -v_{j-k}, j in [2k, 2k+r) is the
    // artificial for row j-2k with sign matching the target entry.
    let ncols = 2 * k + r;
    let art_sign: Vec<f64> = (0..r)
        .map(|i| if target[i] >= 0.0 { 1.0 } else { -1.0 })
        .collect();
    let column = |j: usize| -> DVector<f64> {
        if j < k {
            columns[j].clone()
        } else if j < 2 * k {
            -&columns[j - k]
        } else {
            let i = j - 2 * k;
            let mut e = DVector::zeros(r);
            e[i] = art_sign[i];
            e
        }
    };

    let scale = target.amax().max(columns.iter().map(|c| c.amax()).fold(0.0, f64::max));
    let feas_tol = 1e-10 * (1.0 + scale);

    let mut basis: Vec<usize> = (2 * k..ncols).collect();
    let mut phase_one = true;
    let mut iters = 0usize;

    loop {
        iters += 1;
        if iters > ITER_CAP {
            // Should not happen with Bland's rule; treat as no certificate.
            return None;
        }

        let b_mat = DMatrix::from_columns(&basis.iter().map(|&j| column(j)).collect::<Vec<_>>());
        let lu = b_mat.clone().lu();
        let x_b = lu.solve(target)?;

        let cost = |j: usize| -> f64 {
            if phase_one {
                if j >= 2 * k {
                    1.0
                } else {
                    0.0
                }
            } else if j >= 2 * k {
                // Artificials are forbidden in phase two.
                f64::INFINITY
            } else {
                1.0
            }
        };
        let c_b = DVector::from_iterator(r, basis.iter().map(|&j| cost(j)));
        let y = b_mat.transpose().lu().solve(&c_b)?;

        // Pricing: Dantzig early on, Bland afterwards for anti-cycling.
        let bland = iters > DANTZIG_CAP;
        let mut entering: Option<(usize, f64)> = None;
        for j in 0..ncols {
            if basis.contains(&j) {
                continue;
            }
            let cj = cost(j);
            if cj.is_infinite() {
                continue;
            }
            let reduced = cj - y.dot(&column(j));
            if reduced < -ENTER_TOL {
                match entering {
                    None => entering = Some((j, reduced)),
                    Some((_, best)) if !bland && reduced < best => entering = Some((j, reduced)),
                    _ => {}
                }
                if bland {
                    break;
                }
            }
        }

        let Some((enter, _)) = entering else {
            // Optimal for the current phase.
            if phase_one {
                let infeas: f64 = basis
                    .iter()
                    .zip(x_b.iter())
                    .filter(|(&j, _)| j >= 2 * k)
                    .map(|(_, &x)| x.abs())
                    .sum();
                if infeas > feas_tol {
                    return None; // target outside the span
                }
                phase_one = false;
                continue;
            }
            let mut coeffs = vec![0.0; k];
            for (&j, &x) in basis.iter().zip(x_b.iter()) {
                if j < k {
                    coeffs[j] += x;
                } else if j < 2 * k {
                    coeffs[j - k] -= x;
                }
            }
            let value = coeffs.iter().map(|c| c.abs()).sum();
            return Some(L1Solution {
                value,
                coeffs,
                dual: y,
            });
        };

        let d = lu.solve(&column(enter))?;
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..r {
            if d[i] > RATIO_TOL {
                let ratio = (x_b[i] / d[i]).max(0.0);
                match leave {
                    None => leave = Some((i, ratio)),
                    Some((li, best)) => {
                        if ratio < best - RATIO_TOL
                            || (ratio < best + RATIO_TOL && basis[i] < basis[li])
                        {
                            leave = Some((i, ratio));
                        }
                    }
                }
            }
        }
        let Some((leave_row, _)) = leave else {
            // Unbounded: cannot occur for the gauge LP (costs are positive),
            // so bail out defensively.
            return None;
        };
        basis[leave_row] = enter;
    }
}
