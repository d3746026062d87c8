//! Origin-symmetric convex bodies in `R^n`.
//!
//! A body is a polytope (one stored vertex per antipodal pair), an ellipsoid
//! `{A z : |z| <= 1}` with symmetric PSD `A`, or the degenerate `{0}`. All
//! operations are pure; bodies are immutable after construction.
//!
//! Containment certificates run through the gauge, which for polytopes is an
//! exact small LP (see [`lp`]); Minkowski sums and hulls prune to extreme
//! vertices while the vertex count stays small and fall back to
//! support-maximizing selection on the shared direction grid above the cap,
//! which inner-approximates the body but preserves supports on the grid
//! exactly.

pub mod dirgrid;
pub mod frankwolfe;
mod lp;
mod mvee;

use crate::{Error, Result};
use dirgrid::{canonical_sign, directions};
use nalgebra::{DMatrix, DVector};

/// Hard cap on stored vertices per body.
pub const VERTEX_CAP: usize = 4096;
/// Candidate counts up to this bound are pruned exactly (LP per point in
/// rank >= 3); larger sets reduce to grid-selected support maximizers.
const EXACT_PRUNE_LIMIT: usize = 256;
pub const DEFAULT_MVEE_EPS: f64 = 1e-6;
pub const MVEE_MAX_ITER: usize = mvee::DEFAULT_MAX_ITER;

#[derive(Clone, Debug)]
enum Rep {
    Zero,
    Polytope {
        verts: Vec<DVector<f64>>,
        rank: usize,
        span: DMatrix<f64>, // dim x rank, orthonormal columns
    },
    Ellipsoid {
        mat: DMatrix<f64>, // symmetric PSD
        rank: usize,
    },
}

/// Origin-symmetric closed bounded convex body.
#[derive(Clone, Debug)]
pub struct ConvexBody {
    dim: usize,
    rep: Rep,
}

/// John decomposition of a body: orthonormal basis and semiaxes of the
/// inscribed ellipsoid `(1/sqrt(n)) · Loewner`.
#[derive(Clone, Debug)]
pub struct JohnPair {
    pub basis: DMatrix<f64>,
    pub semiaxes: Vec<f64>,
    pub inner_factor: f64,
}

impl JohnPair {
    /// The inscribed ellipsoid `{Σ u_k λ_k e_k : |u| <= 1}`.
    pub fn inscribed(&self) -> ConvexBody {
        let n = self.basis.nrows();
        let mut mat = DMatrix::zeros(n, n);
        for (k, &lam) in self.semiaxes.iter().enumerate() {
            let e = self.basis.column(k);
            mat += lam * &e * e.transpose();
        }
        let rank = self.semiaxes.iter().filter(|l| **l > 0.0).count();
        ConvexBody {
            dim: n,
            rep: Rep::Ellipsoid { mat, rank },
        }
    }
}

impl ConvexBody {
    pub fn zero(dim: usize) -> Self {
        ConvexBody {
            dim,
            rep: Rep::Zero,
        }
    }

    /// Smallest symmetric body containing the given points: `conv{±p_i}`
    /// with non-extreme vertices pruned. Empty or all-zero input gives the
    /// zero body.
    pub fn polytope(points: Vec<DVector<f64>>) -> Result<Self> {
        let Some(first) = points.first() else {
            return Err(Error::InvalidInput("polytope needs a dimension; got empty input".into()));
        };
        let dim = first.len();
        for p in &points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.len(),
                });
            }
        }
        Ok(Self::from_reps(dim, points))
    }

    /// Segment `conv{±u}`.
    pub fn segment(u: DVector<f64>) -> Self {
        let dim = u.len();
        Self::from_reps(dim, vec![u])
    }

    /// Ellipsoid `{A z : |z| <= 1}`; `A` must be symmetric positive definite
    /// (eigenvalue tolerance 1e-10 relative).
    pub fn ellipsoid(mat: DMatrix<f64>) -> Result<Self> {
        let n = mat.nrows();
        if mat.ncols() != n {
            return Err(Error::InvalidInput("ellipsoid matrix must be square".into()));
        }
        let asym = (&mat - mat.transpose()).amax();
        if asym > 1e-10 * (1.0 + mat.amax()) {
            return Err(Error::InvalidInput("ellipsoid matrix must be symmetric".into()));
        }
        let sym = (&mat + mat.transpose()) * 0.5;
        let eig = sym.clone().symmetric_eigen();
        let lmax = eig.eigenvalues.amax();
        if eig.eigenvalues.iter().any(|&l| l <= 1e-10 * lmax) || lmax <= 0.0 {
            return Err(Error::InvalidInput(
                "ellipsoid matrix must be positive definite (1e-10 eigenvalue tolerance)".into(),
            ));
        }
        Ok(ConvexBody {
            dim: n,
            rep: Rep::Ellipsoid { mat: sym, rank: n },
        })
    }

    pub(crate) fn ellipsoid_psd(mat: DMatrix<f64>, rank: usize) -> Self {
        let dim = mat.nrows();
        ConvexBody {
            dim,
            rep: Rep::Ellipsoid { mat, rank },
        }
    }

    pub fn unit_ball(dim: usize) -> Self {
        ConvexBody {
            dim,
            rep: Rep::Ellipsoid {
                mat: DMatrix::identity(dim, dim),
                rank: dim,
            },
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Linear dimension of the body (0 for the zero body).
    pub fn rank(&self) -> usize {
        match &self.rep {
            Rep::Zero => 0,
            Rep::Polytope { rank, .. } => *rank,
            Rep::Ellipsoid { rank, .. } => *rank,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.rep, Rep::Zero)
    }

    /// Stored vertex representatives (one per antipodal pair); `None` for
    /// ellipsoids.
    pub fn vertices(&self) -> Option<&[DVector<f64>]> {
        match &self.rep {
            Rep::Polytope { verts, .. } => Some(verts),
            Rep::Zero => Some(&[]),
            Rep::Ellipsoid { .. } => None,
        }
    }

    pub fn ellipsoid_matrix(&self) -> Option<&DMatrix<f64>> {
        match &self.rep {
            Rep::Ellipsoid { mat, .. } => Some(mat),
            _ => None,
        }
    }

    /// Support function `h_K(d) = sup_{u ∈ K} u·d`; nonnegative by symmetry.
    pub fn support(&self, d: &DVector<f64>) -> f64 {
        debug_assert_eq!(d.len(), self.dim);
        match &self.rep {
            Rep::Zero => 0.0,
            Rep::Polytope { verts, .. } => verts
                .iter()
                .map(|v| v.dot(d).abs())
                .fold(0.0, f64::max),
            Rep::Ellipsoid { mat, .. } => (mat * d).norm(),
        }
    }

    /// Signed extreme point attaining the support in direction `d`
    /// (polytopes only; ties resolved by stored order).
    fn support_argmax(&self, d: &DVector<f64>) -> Option<DVector<f64>> {
        let verts = self.vertices()?;
        let mut best: Option<(f64, DVector<f64>)> = None;
        for v in verts {
            let g = v.dot(d);
            let (val, pt) = if g >= 0.0 { (g, v.clone()) } else { (-g, -v) };
            if best.as_ref().map_or(true, |(b, _)| val > *b) {
                best = Some((val, pt));
            }
        }
        best.map(|(_, p)| p)
    }

    /// Minkowski gauge `inf{t > 0 : u/t ∈ K}`; `+inf` off the span.
    pub fn gauge(&self, u: &DVector<f64>) -> f64 {
        debug_assert_eq!(u.len(), self.dim);
        let unorm = u.norm();
        if unorm == 0.0 {
            return 0.0;
        }
        match &self.rep {
            Rep::Zero => f64::INFINITY,
            Rep::Polytope { verts, rank, span } => {
                let coords = span.transpose() * u;
                let residual = (u - span * &coords).norm();
                if residual > 1e-9 * unorm {
                    return f64::INFINITY;
                }
                if *rank == 1 {
                    let vmax = verts
                        .iter()
                        .map(|v| (span.transpose() * v)[0].abs())
                        .fold(0.0, f64::max);
                    return coords[0].abs() / vmax;
                }
                let cols: Vec<DVector<f64>> =
                    verts.iter().map(|v| span.transpose() * v).collect();
                match lp::l1_decomposition(&cols, &coords) {
                    Some(sol) => sol.value,
                    None => f64::INFINITY,
                }
            }
            Rep::Ellipsoid { mat, rank } => {
                if *rank == self.dim {
                    match mat.clone().cholesky() {
                        Some(chol) => chol.solve(u).norm(),
                        None => f64::INFINITY,
                    }
                } else {
                    let pinv = mat.clone().pseudo_inverse(1e-12).unwrap();
                    let z = &pinv * u;
                    let residual = (mat * &z - u).norm();
                    if residual > 1e-9 * unorm {
                        f64::INFINITY
                    } else {
                        z.norm()
                    }
                }
            }
        }
    }

    /// Whether every point of `self` lies in `(1 + tol) · outer`. Polytope
    /// arguments are checked at their vertices (exact); ellipsoids at the
    /// direction grid and their principal axes. A machine-epsilon floor of
    /// 1e-12 keeps reflexivity (`K ⊆ K` at `tol = 0`) stable under LP
    /// roundoff.
    pub fn contained_in(&self, outer: &ConvexBody, tol: f64) -> bool {
        debug_assert_eq!(self.dim, outer.dim);
        let bound = 1.0 + tol + 1e-12;
        match &self.rep {
            Rep::Zero => true,
            Rep::Polytope { verts, .. } => verts.iter().all(|v| outer.gauge(v) <= bound),
            Rep::Ellipsoid { mat, .. } => {
                let eig = mat.clone().symmetric_eigen();
                let axes = (0..self.dim).map(|i| {
                    let q = eig.eigenvectors.column(i).clone_owned();
                    q * eig.eigenvalues[i]
                });
                let grid = directions(self.dim);
                let grid_pts = grid.iter().map(|d| mat * d);
                axes.chain(grid_pts).all(|p| outer.gauge(&p) <= bound)
            }
        }
    }

    /// `λ K` (λ taken by absolute value; symmetric bodies ignore the sign).
    pub fn scale(&self, lambda: f64) -> ConvexBody {
        let l = lambda.abs();
        if l == 0.0 {
            return ConvexBody::zero(self.dim);
        }
        match &self.rep {
            Rep::Zero => ConvexBody::zero(self.dim),
            Rep::Polytope { verts, rank, span } => ConvexBody {
                dim: self.dim,
                rep: Rep::Polytope {
                    verts: verts.iter().map(|v| v * l).collect(),
                    rank: *rank,
                    span: span.clone(),
                },
            },
            Rep::Ellipsoid { mat, rank } => ConvexBody {
                dim: self.dim,
                rep: Rep::Ellipsoid {
                    mat: mat * l,
                    rank: *rank,
                },
            },
        }
    }

    /// Polytope view of the body; ellipsoids are discretized on the shared
    /// direction grid plus their principal axes.
    pub fn to_polytope(&self) -> ConvexBody {
        match &self.rep {
            Rep::Zero | Rep::Polytope { .. } => self.clone(),
            Rep::Ellipsoid { mat, .. } => {
                let mut pts: Vec<DVector<f64>> = directions(self.dim)
                    .iter()
                    .map(|d| mat * d)
                    .collect();
                let eig = mat.clone().symmetric_eigen();
                for i in 0..self.dim {
                    let lam = eig.eigenvalues[i];
                    if lam > 0.0 {
                        pts.push(eig.eigenvectors.column(i) * lam);
                    }
                }
                Self::from_reps(self.dim, pts)
            }
        }
    }

    /// Minkowski sum. Exact (vertex-materialized, extreme-pruned) while the
    /// candidate count is small; otherwise vertices are selected per grid
    /// direction as `argmax_K + argmax_L`, which keeps grid supports exact.
    pub fn minkowski_sum(&self, other: &ConvexBody) -> ConvexBody {
        debug_assert_eq!(self.dim, other.dim);
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        let a = self.to_polytope();
        let b = other.to_polytope();
        let va = a.vertices().unwrap();
        let vb = b.vertices().unwrap();
        let candidates = 2 * va.len() * vb.len();
        let limit = if self.dim <= 2 { VERTEX_CAP } else { EXACT_PRUNE_LIMIT };
        if candidates <= limit {
            let mut pts = Vec::with_capacity(candidates);
            for v in va {
                for w in vb {
                    pts.push(v + w);
                    pts.push(v - w);
                }
            }
            return Self::from_reps(self.dim, pts);
        }
        let mut pts = Vec::new();
        for d in directions(self.dim).iter() {
            if let (Some(x), Some(y)) = (a.support_argmax(d), b.support_argmax(d)) {
                pts.push(x + y);
            }
        }
        Self::from_reps(self.dim, pts)
    }

    /// Minkowski sum that additionally keeps `seed`'s vertices in the result,
    /// so `hull(seed) ⊆ sum` holds exactly even through grid reduction.
    pub(crate) fn minkowski_sum_keeping(
        &self,
        other: &ConvexBody,
        seed: &ConvexBody,
    ) -> ConvexBody {
        let sum = self.minkowski_sum(other);
        if seed.is_zero() {
            return sum;
        }
        match (&sum.rep, seed.to_polytope().vertices()) {
            (Rep::Polytope { verts, .. }, Some(seed_verts)) => {
                let mut pts = verts.clone();
                pts.extend_from_slice(seed_verts);
                Self::from_reps(sum.dim, pts)
            }
            _ => sum,
        }
    }

    /// Inner reduction to at most `cap` vertices by support selection on the
    /// direction grid; identity when already small or not a polytope.
    pub fn reduced_to_cap(&self, cap: usize) -> ConvexBody {
        match &self.rep {
            Rep::Polytope { verts, .. } if verts.len() > cap => {
                let mut pts = Vec::new();
                for d in directions(self.dim).iter() {
                    if let Some(v) = self.support_argmax(d) {
                        pts.push(v);
                    }
                }
                Self::from_reps(self.dim, pts)
            }
            _ => self.clone(),
        }
    }

    /// Weighted Hausdorff distance `max` over vertices of each body of the
    /// `|A·|`-distance to the other, computed by Frank-Wolfe projection.
    pub fn hausdorff(&self, other: &ConvexBody, weight: Option<&DMatrix<f64>>) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        let id = DMatrix::identity(self.dim, self.dim);
        let a = weight.unwrap_or(&id);
        let pa = self.to_polytope();
        let pb = other.to_polytope();
        let va = pa.vertices().unwrap();
        let vb = pb.vertices().unwrap();
        let d_ab = va
            .iter()
            .map(|v| frankwolfe::dist_to_hull(a, v, vb))
            .fold(0.0, f64::max);
        let d_ba = vb
            .iter()
            .map(|v| frankwolfe::dist_to_hull(a, v, va))
            .fold(0.0, f64::max);
        d_ab.max(d_ba)
    }

    /// Löwner (minimum-volume enclosing) ellipsoid; `K ⊆ (1+eps)·E` and
    /// `(1+eps)⁻¹ n^{-1/2} E ⊆ K`. Rank-deficient bodies yield a degenerate
    /// ellipsoid carrying the body's rank.
    pub fn loewner_ellipsoid(&self, eps: f64) -> Result<ConvexBody> {
        if !(eps > 0.0 && eps <= 0.5) {
            return Err(Error::InvalidInput(format!("loewner eps {eps} outside (0, 0.5]")));
        }
        match &self.rep {
            Rep::Zero => Ok(ConvexBody::ellipsoid_psd(
                DMatrix::zeros(self.dim, self.dim),
                0,
            )),
            Rep::Ellipsoid { .. } => Ok(self.clone()),
            Rep::Polytope { verts, rank, span } => {
                if *rank == 1 {
                    let axis = span.column(0).clone_owned();
                    let radius = verts
                        .iter()
                        .map(|v| v.dot(&axis).abs())
                        .fold(0.0, f64::max);
                    let mat = radius * &axis * axis.transpose();
                    return Ok(ConvexBody::ellipsoid_psd(mat, 1));
                }
                let coords: Vec<DVector<f64>> =
                    verts.iter().map(|v| span.transpose() * v).collect();
                let res = mvee::mvee_symmetric(&coords, eps, MVEE_MAX_ITER);
                let mat = span * res.mat * span.transpose();
                let mat = (&mat + mat.transpose()) * 0.5;
                Ok(ConvexBody::ellipsoid_psd(mat, *rank))
            }
        }
    }

    /// John basis of the body: eigen-decomposition of the Löwner matrix with
    /// semiaxes scaled by `1/sqrt(n)`, ordered nonincreasing, signs fixed by
    /// first nonzero coordinate, eigenvalue ties broken lexicographically.
    pub fn john_basis(&self, eps: f64) -> Result<JohnPair> {
        let loewner = self.loewner_ellipsoid(eps)?;
        let mat = loewner.ellipsoid_matrix().unwrap();
        let n = self.dim;
        let eig = mat.clone().symmetric_eigen();
        let mut items: Vec<(f64, DVector<f64>)> = (0..n)
            .map(|i| {
                let q = canonical_sign(eig.eigenvectors.column(i).clone_owned());
                (eig.eigenvalues[i].max(0.0), q)
            })
            .collect();
        items.sort_by(|(la, va), (lb, vb)| {
            match lb.partial_cmp(la).unwrap() {
                std::cmp::Ordering::Equal => lex_cmp(va, vb),
                ord => ord,
            }
        });
        let scale = 1.0 / (n as f64).sqrt();
        let basis = DMatrix::from_columns(&items.iter().map(|(_, v)| v.clone()).collect::<Vec<_>>());
        let semiaxes = items.iter().map(|(l, _)| l * scale).collect();
        Ok(JohnPair {
            basis,
            semiaxes,
            inner_factor: scale,
        })
    }

    /// Canonicalize, deduplicate, prune to extreme vertices (exactly while
    /// small, by grid selection above the cap), and fix the span.
    fn from_reps(dim: usize, points: Vec<DVector<f64>>) -> ConvexBody {
        let scale = points.iter().map(|p| p.amax()).fold(0.0, f64::max);
        if scale <= 0.0 || points.is_empty() {
            return ConvexBody::zero(dim);
        }
        let mut pts: Vec<DVector<f64>> = Vec::with_capacity(points.len());
        for p in points {
            if p.norm() > 1e-13 * scale {
                pts.push(canonical_sign(p));
            }
        }
        if pts.is_empty() {
            return ConvexBody::zero(dim);
        }
        pts.sort_by(|a, b| lex_cmp(a, b));
        pts.dedup_by(|a, b| (a.clone() - b.clone()).amax() <= 1e-12 * scale);

        // Span and rank via SVD of the vertex matrix.
        let vmat = DMatrix::from_columns(&pts.iter().cloned().collect::<Vec<_>>());
        let svd = vmat.svd(true, false);
        let smax = svd.singular_values.amax();
        let rank = svd
            .singular_values
            .iter()
            .filter(|s| **s > 1e-10 * smax)
            .count()
            .max(1);
        let u = svd.u.as_ref().unwrap();
        let span = u.columns(0, rank).into_owned();

        let coords: Vec<DVector<f64>> = pts.iter().map(|p| span.transpose() * p).collect();
        let keep = prune_extreme(&coords, rank);
        let mut verts: Vec<DVector<f64>> = keep.into_iter().map(|i| pts[i].clone()).collect();
        if verts.len() > VERTEX_CAP {
            let body = ConvexBody {
                dim,
                rep: Rep::Polytope {
                    verts: verts.clone(),
                    rank,
                    span: span.clone(),
                },
            };
            let mut selected: Vec<DVector<f64>> = Vec::new();
            for d in directions(dim).iter() {
                if let Some(v) = body.support_argmax(d) {
                    selected.push(canonical_sign(v));
                }
            }
            selected.sort_by(|a, b| lex_cmp(a, b));
            selected.dedup_by(|a, b| (a.clone() - b.clone()).amax() <= 1e-12 * scale);
            verts = selected;
        }
        verts.sort_by(|a, b| lex_cmp(a, b));
        ConvexBody {
            dim,
            rep: Rep::Polytope { verts, rank, span },
        }
    }
}

/// Convex hull of a family of bodies (symmetric hull of all vertices;
/// ellipsoids discretized).
pub fn hull_union(bodies: &[ConvexBody]) -> Result<ConvexBody> {
    let Some(first) = bodies.first() else {
        return Err(Error::InvalidInput("hull_union needs at least one body".into()));
    };
    let dim = first.dim();
    let mut pts: Vec<DVector<f64>> = Vec::new();
    for b in bodies {
        if b.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: b.dim(),
            });
        }
        if let Some(vs) = b.to_polytope().vertices() {
            pts.extend_from_slice(vs);
        }
    }
    Ok(ConvexBody::from_reps(dim, pts))
}

/// Indices of extreme points of `conv{±coords}` (coordinates already in the
/// span, `rank`-dimensional). Exact for rank <= 2 at any size and for small
/// sets in higher rank; otherwise a grid-selected subset (inner
/// approximation with exact grid supports).
fn prune_extreme(coords: &[DVector<f64>], rank: usize) -> Vec<usize> {
    let k = coords.len();
    if k <= 1 {
        return (0..k).collect();
    }
    match rank {
        1 => {
            let mut best = 0;
            for i in 1..k {
                if coords[i][0].abs() > coords[best][0].abs() {
                    best = i;
                }
            }
            vec![best]
        }
        2 => {
            // Exact planar hull over the signed point set.
            let mut signed: Vec<(f64, f64, usize)> = Vec::with_capacity(2 * k);
            for (i, c) in coords.iter().enumerate() {
                signed.push((c[0], c[1], i));
                signed.push((-c[0], -c[1], i));
            }
            signed.sort_by(|a, b| {
                a.0.partial_cmp(&b.0)
                    .unwrap()
                    .then(a.1.partial_cmp(&b.1).unwrap())
            });
            let cross = |o: &(f64, f64, usize), a: &(f64, f64, usize), b: &(f64, f64, usize)| {
                (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
            };
            let mut hull: Vec<(f64, f64, usize)> = Vec::new();
            for p in signed.iter().chain(signed.iter().rev()) {
                while hull.len() >= 2 && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= 0.0
                {
                    hull.pop();
                }
                hull.push(*p);
            }
            hull.pop();
            let mut keep: Vec<usize> = hull.iter().map(|(_, _, i)| *i).collect();
            keep.sort_unstable();
            keep.dedup();
            keep
        }
        _ => {
            if k > EXACT_PRUNE_LIMIT {
                // Grid selection: support maximizers per direction.
                let dirs = directions(rank);
                let mut keep = Vec::new();
                for d in dirs.iter() {
                    let mut best = 0;
                    let mut best_val = f64::NEG_INFINITY;
                    for (i, c) in coords.iter().enumerate() {
                        let v = c.dot(d).abs();
                        if v > best_val {
                            best_val = v;
                            best = i;
                        }
                    }
                    keep.push(best);
                }
                keep.sort_unstable();
                keep.dedup();
                keep
            } else {
                // Exact: drop any point inside the symmetric hull of the rest.
                let mut keep = Vec::new();
                for i in 0..k {
                    let others: Vec<DVector<f64>> = coords
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| *j != i)
                        .map(|(_, c)| c.clone())
                        .collect();
                    let inside = lp::l1_decomposition(&others, &coords[i])
                        .map_or(false, |sol| sol.value <= 1.0 + 1e-12);
                    if !inside {
                        keep.push(i);
                    }
                }
                keep
            }
        }
    }
}

fn lex_cmp(a: &DVector<f64>, b: &DVector<f64>) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        match x.partial_cmp(y).unwrap() {
            std::cmp::Ordering::Equal => continue,
            ord => return ord,
        }
    }
    std::cmp::Ordering::Equal
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn v(vals: &[f64]) -> DVector<f64> {
        DVector::from_vec(vals.to_vec())
    }

    fn e(i: usize, n: usize) -> DVector<f64> {
        let mut x = DVector::zeros(n);
        x[i] = 1.0;
        x
    }

    fn random_polytope(rng: &mut Rng, n: usize, pts: usize) -> ConvexBody {
        ConvexBody::polytope(
            (0..pts)
                .map(|_| DVector::from_fn(n, |_, _| rng.range(-1.0, 1.0)))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn polytope_basics() {
        // {e1} -> segment conv{±e1}.
        let seg = ConvexBody::polytope(vec![e(0, 2)]).unwrap();
        assert_eq!(seg.rank(), 1);
        assert_eq!(seg.vertices().unwrap().len(), 1);

        // Interior point pruned.
        let pruned = ConvexBody::polytope(vec![e(0, 2), e(0, 2) * 0.5]).unwrap();
        assert_eq!(pruned.vertices().unwrap().len(), 1);
        assert!((pruned.support(&e(0, 2)) - 1.0).abs() < 1e-12);

        // All-zero input is the zero body.
        assert!(ConvexBody::polytope(vec![v(&[0.0, 0.0])]).unwrap().is_zero());
        assert!(ConvexBody::polytope(vec![]).is_err());

        // Dimension mismatch rejected.
        assert!(ConvexBody::polytope(vec![e(0, 2), e(0, 3)]).is_err());
    }

    #[test]
    fn membership_after_construction() {
        // Every input point has gauge <= 1 + 1e-9 in the constructed hull.
        for trial in 0..20 {
            let mut rng = Rng::substream(0x5EED, trial);
            let pts: Vec<DVector<f64>> = (0..20)
                .map(|_| DVector::from_fn(3, |_, _| rng.range(-1.0, 1.0)))
                .collect();
            let body = ConvexBody::polytope(pts.clone()).unwrap();
            for p in &pts {
                assert!(body.gauge(p) <= 1.0 + 1e-9, "trial {trial}");
            }
        }
    }

    #[test]
    fn support_examples() {
        let seg = ConvexBody::segment(e(0, 2));
        assert!((seg.support(&e(0, 2)) - 1.0).abs() < 1e-12);

        let ell = ConvexBody::ellipsoid(DMatrix::from_diagonal(&v(&[2.0, 3.0]))).unwrap();
        assert!((ell.support(&e(1, 2)) - 3.0).abs() < 1e-12);

        assert_eq!(ConvexBody::zero(2).support(&e(0, 2)), 0.0);
    }

    #[test]
    fn support_matches_vertex_scan() {
        for trial in 0..50 {
            let mut rng = Rng::substream(0x5099, trial);
            let n = 2 + rng.below(3);
            let body = random_polytope(&mut rng, n, 8);
            let d = rng.unit_vector(n);
            let brute = body
                .vertices()
                .unwrap()
                .iter()
                .flat_map(|w| [w.dot(&d), -w.dot(&d)])
                .fold(f64::NEG_INFINITY, f64::max);
            assert!((body.support(&d) - brute).abs() < 1e-12);
        }
    }

    #[test]
    fn gauge_examples() {
        let ball = ConvexBody::unit_ball(2);
        assert!((ball.gauge(&(e(0, 2) * 2.0)) - 2.0).abs() < 1e-12);

        // Off-span direction has infinite gauge.
        let seg = ConvexBody::segment(e(0, 2));
        assert_eq!(seg.gauge(&e(1, 2)), f64::INFINITY);

        assert_eq!(ConvexBody::zero(2).gauge(&v(&[0.0, 0.0])), 0.0);
    }

    #[test]
    fn gauge_homogeneous_and_membership() {
        for trial in 0..40 {
            let mut rng = Rng::substream(0x6A, trial);
            let n = 2 + rng.below(2);
            let body = random_polytope(&mut rng, n, 6);
            let u = DVector::from_fn(n, |_, _| rng.range(-1.0, 1.0));
            let g = body.gauge(&u);
            if !g.is_finite() {
                continue;
            }
            let s = rng.range(0.1, 3.0);
            assert!((body.gauge(&(&u * s)) - s * g).abs() < 1e-8 * (1.0 + g));
            if g > 1e-9 {
                // u/g lies on the boundary: gauge 1.
                assert!((body.gauge(&(&u / g)) - 1.0).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn containment_basics() {
        let mut rng = Rng::new(3);
        let k = random_polytope(&mut rng, 2, 6);
        assert!(k.contained_in(&k, 0.0));
        assert!(!k.contained_in(&k.scale(0.5), 0.0));
        assert!(k.scale(0.5).contained_in(&k, 0.0));
        assert!(ConvexBody::zero(2).contained_in(&k, 0.0));
    }

    #[test]
    fn minkowski_sum_examples() {
        let seg0 = ConvexBody::segment(e(0, 2));
        let seg1 = ConvexBody::segment(e(1, 2));
        let square = seg0.minkowski_sum(&seg1);
        // conv{±e1±e2}: support in e1 is 1, along (1,1) is 2/sqrt(2).
        assert!((square.support(&e(0, 2)) - 1.0).abs() < 1e-12);
        let diag = v(&[1.0, 1.0]).normalize();
        assert!((square.support(&diag) - 2f64.sqrt()).abs() < 1e-12);

        // K + Zero = K.
        let k = random_polytope(&mut Rng::new(9), 2, 5);
        let same = k.minkowski_sum(&ConvexBody::zero(2));
        assert!(k.contained_in(&same, 1e-12) && same.contained_in(&k, 1e-12));
    }

    #[test]
    fn minkowski_support_additivity() {
        for trial in 0..30 {
            let mut rng = Rng::substream(0xADD, trial);
            let n = 2 + rng.below(2);
            let k = random_polytope(&mut rng, n, 5);
            let l = random_polytope(&mut rng, n, 5);
            let sum = k.minkowski_sum(&l);
            for _ in 0..100 {
                let d = rng.unit_vector(n);
                let lhs = sum.support(&d);
                let rhs = k.support(&d) + l.support(&d);
                assert!((lhs - rhs).abs() < 1e-9 * (1.0 + rhs), "trial {trial}");
            }
        }
    }

    #[test]
    fn hull_union_examples() {
        let seg0 = ConvexBody::segment(e(0, 2));
        let seg1 = ConvexBody::segment(e(1, 2));
        let cross = hull_union(&[seg0.clone(), seg1.clone()]).unwrap();
        assert_eq!(cross.vertices().unwrap().len(), 2);
        assert!(seg0.contained_in(&cross, 1e-9));
        assert!(seg1.contained_in(&cross, 1e-9));
        // Gauge of (1,1)/2 is 1 on the cross-polytope boundary.
        assert!((cross.gauge(&v(&[0.5, 0.5])) - 1.0).abs() < 1e-9);

        // Idempotence on a single body.
        let k = random_polytope(&mut Rng::new(11), 3, 8);
        let h = hull_union(&[k.clone()]).unwrap();
        assert!(k.contained_in(&h, 1e-9) && h.contained_in(&k, 1e-9));
    }

    #[test]
    fn hull_union_contains_inputs() {
        for trial in 0..20 {
            let mut rng = Rng::substream(0x41_1, trial);
            let n = 2 + rng.below(2);
            let bodies: Vec<ConvexBody> =
                (0..4).map(|_| random_polytope(&mut rng, n, 5)).collect();
            let h = hull_union(&bodies).unwrap();
            for b in &bodies {
                assert!(b.contained_in(&h, 1e-9), "trial {trial}");
            }
        }
    }

    #[test]
    fn loewner_fixed_point_and_square() {
        let mat = DMatrix::from_diagonal(&v(&[2.0, 3.0]));
        let ell = ConvexBody::ellipsoid(mat.clone()).unwrap();
        let rec = ell.loewner_ellipsoid(1e-6).unwrap();
        assert!((rec.ellipsoid_matrix().unwrap() - &mat).norm() < 1e-9);

        // Square [-1,1]^2: Löwner disk of radius sqrt(2).
        let square = ConvexBody::polytope(vec![v(&[1.0, 1.0]), v(&[1.0, -1.0])]).unwrap();
        let l = square.loewner_ellipsoid(1e-7).unwrap();
        let want = DMatrix::identity(2, 2) * 2f64.sqrt();
        assert!((l.ellipsoid_matrix().unwrap() - want).norm() < 1e-5);
    }

    #[test]
    fn john_sandwich_random() {
        let eps = 1e-6;
        for trial in 0..30 {
            let mut rng = Rng::substream(0x10_EB, trial);
            let n = 2 + rng.below(3);
            let k = random_polytope(&mut rng, n, n + 4);
            if k.rank() < n {
                continue;
            }
            let john = k.john_basis(eps).unwrap();
            let inner = john.inscribed();
            assert!(
                inner.scale(1.0 / (1.0 + eps)).contained_in(&k, 1e-5),
                "inner trial {trial}"
            );
            assert!(
                k.contained_in(&inner.scale((n as f64).sqrt() * (1.0 + eps)), 1e-5),
                "outer trial {trial}"
            );
        }
    }

    #[test]
    fn john_basis_axis_aligned() {
        // diag(2,3) ellipsoid: basis {e2, e1} (descending), semiaxes {3,2}/sqrt(2).
        let ell = ConvexBody::ellipsoid(DMatrix::from_diagonal(&v(&[2.0, 3.0]))).unwrap();
        let john = ell.john_basis(1e-6).unwrap();
        let s = 2f64.sqrt();
        assert!((john.semiaxes[0] - 3.0 / s).abs() < 1e-9);
        assert!((john.semiaxes[1] - 2.0 / s).abs() < 1e-9);
        assert!((john.basis.column(0).clone_owned() - e(1, 2)).norm() < 1e-9);
        assert!((john.inner_factor - 1.0 / s).abs() < 1e-15);

        // Unit ball: inscribed ellipsoid is ball/sqrt(n); sqrt(n)·it covers.
        let ball = ConvexBody::unit_ball(3);
        let john = ball.john_basis(1e-6).unwrap();
        let inner = john.inscribed();
        assert!(inner.contained_in(&ball, 1e-9));
        assert!(ball.contained_in(&inner.scale(3f64.sqrt()), 1e-9));
    }

    #[test]
    fn hausdorff_examples() {
        let mut rng = Rng::new(21);
        let k = random_polytope(&mut rng, 2, 6);
        assert!(k.hausdorff(&k, None) < 1e-7);

        let ball = ConvexBody::unit_ball(2).to_polytope();
        let double = ball.scale(2.0);
        let d = ball.hausdorff(&double, None);
        assert!((d - 1.0).abs() < 2e-3, "d = {d}"); // grid discretization error
    }

    #[test]
    fn hausdorff_vs_support_grid() {
        for trial in 0..10 {
            let mut rng = Rng::substream(0x4A05, trial);
            let k = random_polytope(&mut rng, 2, 6);
            let l = random_polytope(&mut rng, 2, 6);
            let d = k.hausdorff(&l, None);
            // Support-difference lower bound: sup_d |h_K - h_L| <= d_H.
            let grid_est = directions(2)
                .iter()
                .map(|dir| (k.support(dir) - l.support(dir)).abs())
                .fold(0.0, f64::max);
            assert!(d >= grid_est - 1e-7, "trial {trial}: {d} < {grid_est}");
            // And d_H is attained within the vertex set, so compare against a
            // dense signed-direction estimate as an upper sanity bound.
            assert!(d <= grid_est + 2.0, "trial {trial}");
        }
    }

    #[test]
    fn gauge_support_bipolar_inequality() {
        // |u·v| <= gauge(K,u) · support(K,v).
        for trial in 0..50 {
            let mut rng = Rng::substream(0xB190, trial);
            let n = 2 + rng.below(2);
            let k = random_polytope(&mut rng, n, 6);
            let u = DVector::from_fn(n, |_, _| rng.range(-1.0, 1.0));
            let w = DVector::from_fn(n, |_, _| rng.range(-1.0, 1.0));
            let g = k.gauge(&u);
            if !g.is_finite() {
                continue;
            }
            let lhs = u.dot(&w).abs();
            let rhs = g * k.support(&w);
            assert!(lhs <= rhs * (1.0 + 1e-8) + 1e-12, "trial {trial}");
        }
    }

    #[test]
    fn pruning_preserves_support() {
        for trial in 0..20 {
            let mut rng = Rng::substream(0x9211, trial);
            let n = 2 + rng.below(2);
            let pts: Vec<DVector<f64>> = (0..30)
                .map(|_| DVector::from_fn(n, |_, _| rng.range(-1.0, 1.0)))
                .collect();
            let body = ConvexBody::polytope(pts.clone()).unwrap();
            for _ in 0..200 {
                let d = rng.unit_vector(n);
                let raw = pts.iter().map(|p| p.dot(&d).abs()).fold(0.0, f64::max);
                assert!((body.support(&d) - raw).abs() < 1e-9, "trial {trial}");
            }
        }
    }

    #[test]
    fn vertex_cap_respected() {
        let mut rng = Rng::new(0xCAB);
        let pts: Vec<DVector<f64>> = (0..6000)
            .map(|_| rng.unit_vector(3))
            .collect();
        let body = ConvexBody::polytope(pts).unwrap();
        assert!(body.vertices().unwrap().len() <= VERTEX_CAP);
    }
}
