//! Weighted projection distance onto a symmetric polytope.
//!
//! Minimizes `f(m) = 1/2 |A(p - m)|^2` over `m ∈ conv{±v_i}` by Frank-Wolfe
//! with away steps and exact line search, stopping at duality gap `1e-8`.
//! Away steps keep convergence linear on polytope domains, which plain
//! conditional gradient loses when the projection lands on a face.

use nalgebra::{DMatrix, DVector};

pub const GAP_TOL: f64 = 1e-8;
const MAX_ITER: usize = 50_000;

/// Atom of the active set: signed vertex or the origin.
#[derive(Clone, Copy, PartialEq)]
enum Atom {
    Origin,
    Vertex(usize, bool), // index, positive sign
}

fn atom_vector(atom: Atom, verts: &[DVector<f64>], n: usize) -> DVector<f64> {
    match atom {
        Atom::Origin => DVector::zeros(n),
        Atom::Vertex(j, pos) => {
            if pos {
                verts[j].clone()
            } else {
                -&verts[j]
            }
        }
    }
}

/// Distance `min_{m ∈ conv{±verts}} |A (p - m)|`. `A` must be SPD.
pub fn dist_to_hull(a: &DMatrix<f64>, p: &DVector<f64>, verts: &[DVector<f64>]) -> f64 {
    if verts.is_empty() {
        return (a * p).norm();
    }
    let n = p.len();
    let q = a.transpose() * a; // f(m) = 1/2 (p-m)ᵀ Q (p-m)

    let mut m: DVector<f64> = DVector::zeros(n);
    let mut weights: Vec<(Atom, f64)> = vec![(Atom::Origin, 1.0)];

    for _ in 0..MAX_ITER {
        let grad = &q * (&m - p);

        // Linear minimization over {±v_i} ∪ {0}.
        let mut fw_atom = Atom::Origin;
        let mut fw_val = 0.0;
        for (j, v) in verts.iter().enumerate() {
            let g = grad.dot(v);
            if -g.abs() < fw_val {
                fw_val = -g.abs();
                fw_atom = Atom::Vertex(j, g <= 0.0);
            }
        }
        let s_fw = atom_vector(fw_atom, verts, n);
        let gap = grad.dot(&(&m - &s_fw));
        if gap <= GAP_TOL {
            break;
        }

        // Away atom: active atom with the largest gradient value.
        let (away_idx, _) = weights
            .iter()
            .enumerate()
            .max_by(|(_, (a1, _)), (_, (a2, _))| {
                let v1 = grad.dot(&atom_vector(*a1, verts, n));
                let v2 = grad.dot(&atom_vector(*a2, verts, n));
                v1.partial_cmp(&v2).unwrap()
            })
            .map(|(i, w)| (i, w.1))
            .unwrap();
        let away_vec = atom_vector(weights[away_idx].0, verts, n);
        let away_desc = grad.dot(&away_vec) - grad.dot(&m);

        let take_fw = gap >= away_desc;
        let (dir, gamma_max) = if take_fw {
            (&s_fw - &m, 1.0)
        } else {
            let w = weights[away_idx].1;
            (&m - &away_vec, w / (1.0 - w).max(1e-300))
        };

        let qd = &q * &dir;
        let denom = dir.dot(&qd);
        if denom <= 1e-300 {
            break;
        }
        let gamma = (-grad.dot(&dir) / denom).clamp(0.0, gamma_max);
        if gamma <= 0.0 {
            break;
        }

        if take_fw {
            for (_, w) in weights.iter_mut() {
                *w *= 1.0 - gamma;
            }
            if let Some(entry) = weights.iter_mut().find(|(a, _)| *a == fw_atom) {
                entry.1 += gamma;
            } else {
                weights.push((fw_atom, gamma));
            }
        } else {
            for (_, w) in weights.iter_mut() {
                *w *= 1.0 + gamma;
            }
            weights[away_idx].1 = (weights[away_idx].1 - gamma).max(0.0);
        }
        weights.retain(|(_, w)| *w > 1e-15);

        m += gamma * dir;
    }
    (a * (p - m)).norm()
}
