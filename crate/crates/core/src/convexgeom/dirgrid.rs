//! Shared direction grids, one representative per antipodal pair.
//!
//! Grid sizes are part of the module contract: 64 directions in the plane,
//! 194 for `n = 3` (icosphere refined twice plus seeded fill), and
//! `2n^2 + 2n` seeded symmetrized directions for `n >= 4`. The cache is
//! filled once per dimension and shared read-only afterwards.

use crate::rng::Rng;
use nalgebra::DVector;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

const SEED: u64 = 0x0D12_EC71_0;

static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Vec<DVector<f64>>>>>> = OnceLock::new();

/// Number of grid directions for dimension `n`.
pub fn grid_size(n: usize) -> usize {
    match n {
        0 => 0,
        1 => 1,
        2 => 64,
        3 => 194,
        _ => 2 * n * n + 2 * n,
    }
}

/// The shared direction grid for dimension `n`, unit vectors, one per
/// antipodal pair (canonical sign: first nonzero coordinate positive).
pub fn directions(n: usize) -> Arc<Vec<DVector<f64>>> {
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().unwrap();
    map.entry(n).or_insert_with(|| Arc::new(build(n))).clone()
}

fn build(n: usize) -> Vec<DVector<f64>> {
    match n {
        1 => vec![DVector::from_element(1, 1.0)],
        2 => (0..64)
            .map(|k| {
                let theta = std::f64::consts::PI * k as f64 / 64.0;
                DVector::from_vec(vec![theta.cos(), theta.sin()])
            })
            .map(|d| canonical_sign(d))
            .collect(),
        3 => {
            let mut dirs = icosphere_pairs(2);
            let target = grid_size(3);
            fill_random(&mut dirs, 3, target);
            dirs
        }
        _ => {
            let mut dirs: Vec<DVector<f64>> = Vec::new();
            for i in 0..n {
                let mut e = DVector::zeros(n);
                e[i] = 1.0;
                push_unique(&mut dirs, e);
            }
            for i in 0..n {
                for j in (i + 1)..n {
                    for s in [1.0, -1.0] {
                        let mut e = DVector::zeros(n);
                        e[i] = std::f64::consts::FRAC_1_SQRT_2;
                        e[j] = s * std::f64::consts::FRAC_1_SQRT_2;
                        push_unique(&mut dirs, canonical_sign(e));
                    }
                }
            }
            fill_random(&mut dirs, n, grid_size(n));
            dirs
        }
    }
}

fn fill_random(dirs: &mut Vec<DVector<f64>>, n: usize, target: usize) {
    let mut rng = Rng::new(SEED ^ n as u64);
    while dirs.len() < target {
        let v = canonical_sign(rng.unit_vector(n));
        push_unique(dirs, v);
    }
    dirs.truncate(target);
}

fn push_unique(dirs: &mut Vec<DVector<f64>>, v: DVector<f64>) {
    if dirs.iter().all(|d| (d - &v).norm() > 1e-9) {
        dirs.push(v);
    }
}

/// Flip so the first coordinate above 1e-12 in absolute value is positive.
pub fn canonical_sign(v: DVector<f64>) -> DVector<f64> {
    for i in 0..v.len() {
        if v[i].abs() > 1e-12 {
            return if v[i] < 0.0 { -v } else { v };
        }
    }
    v
}

/// Icosahedron refined `levels` times, antipodal representatives only.
fn icosphere_pairs(levels: usize) -> Vec<DVector<f64>> {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<[f64; 3]> = Vec::new();
    for &(a, b) in &[(1.0, phi), (1.0, -phi), (-1.0, phi), (-1.0, -phi)] {
        verts.push([0.0, a, b]);
        verts.push([a, b, 0.0]);
        verts.push([b, 0.0, a]);
    }
    for v in &mut verts {
        let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        *v = [v[0] / norm, v[1] / norm, v[2] / norm];
    }
    let mut faces: Vec<[usize; 3]> = icosahedron_faces(&verts);
    for _ in 0..levels {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut new_faces = Vec::with_capacity(faces.len() * 4);
        for f in &faces {
            let m01 = midpoint(&mut verts, &mut midpoints, f[0], f[1]);
            let m12 = midpoint(&mut verts, &mut midpoints, f[1], f[2]);
            let m20 = midpoint(&mut verts, &mut midpoints, f[2], f[0]);
            new_faces.push([f[0], m01, m20]);
            new_faces.push([f[1], m12, m01]);
            new_faces.push([f[2], m20, m12]);
            new_faces.push([m01, m12, m20]);
        }
        faces = new_faces;
    }
    let mut dirs: Vec<DVector<f64>> = Vec::new();
    for v in &verts {
        let d = canonical_sign(DVector::from_vec(vec![v[0], v[1], v[2]]));
        push_unique(&mut dirs, d);
    }
    dirs
}

fn midpoint(
    verts: &mut Vec<[f64; 3]>,
    cache: &mut HashMap<(usize, usize), usize>,
    a: usize,
    b: usize,
) -> usize {
    let key = (a.min(b), a.max(b));
    if let Some(&idx) = cache.get(&key) {
        return idx;
    }
    let (va, vb) = (verts[a], verts[b]);
    let mut m = [
        (va[0] + vb[0]) / 2.0,
        (va[1] + vb[1]) / 2.0,
        (va[2] + vb[2]) / 2.0,
    ];
    let norm = (m[0] * m[0] + m[1] * m[1] + m[2] * m[2]).sqrt();
    m = [m[0] / norm, m[1] / norm, m[2] / norm];
    verts.push(m);
    cache.insert(key, verts.len() - 1);
    verts.len() - 1
}

/// Faces by nearest-neighbour structure of the 12 icosahedron vertices.
fn icosahedron_faces(verts: &[[f64; 3]]) -> Vec<[usize; 3]> {
    let dot = |a: &[f64; 3], b: &[f64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    // Edges join vertices at the minimal pairwise angle.
    let mut best = -1.0f64;
    for i in 0..12 {
        for j in (i + 1)..12 {
            let d = dot(&verts[i], &verts[j]);
            if d < 0.999 && d > best {
                best = d;
            }
        }
    }
    let mut faces = Vec::new();
    for i in 0..12 {
        for j in (i + 1)..12 {
            if (dot(&verts[i], &verts[j]) - best).abs() > 1e-9 {
                continue;
            }
            for k in (j + 1)..12 {
                if (dot(&verts[i], &verts[k]) - best).abs() < 1e-9
                    && (dot(&verts[j], &verts[k]) - best).abs() < 1e-9
                {
                    faces.push([i, j, k]);
                }
            }
        }
    }
    faces
}
