//! Piecewise-constant fields over the dyadic grid: vector fields, matrix
//! weights, and convex-set valued fields with their Aumann averages.
//!
//! Cell-sampled functions make every integral an exact sum; the Aumann
//! average of a convex field over a cube is the Minkowski sum of scaled cell
//! bodies, computed over a balanced binary tree so pruning error compounds
//! with tree depth rather than cell count.

use crate::convexgeom::ConvexBody;
use crate::dyadic::{DyadicCube, DyadicGrid};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use std::collections::HashMap;

/// Per-cell vector values on a grid.
#[derive(Clone, Debug)]
pub struct VectorField {
    pub grid: DyadicGrid,
    pub n: usize,
    values: Vec<DVector<f64>>,
}

impl VectorField {
    pub fn new(grid: DyadicGrid, values: Vec<DVector<f64>>) -> Result<Self> {
        if values.len() != grid.cell_count() {
            return Err(Error::InvalidInput(format!(
                "field has {} cells, grid needs {}",
                values.len(),
                grid.cell_count()
            )));
        }
        let n = values.first().map_or(0, |v| v.len());
        for (i, v) in values.iter().enumerate() {
            if v.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput(format!("non-finite entry at cell {i}")));
            }
        }
        Ok(VectorField { grid, n, values })
    }

    pub fn from_fn(grid: DyadicGrid, _n: usize, mut f: impl FnMut(usize) -> DVector<f64>) -> Self {
        let values = (0..grid.cell_count()).map(|c| f(c)).collect();
        VectorField::new(grid, values).expect("from_fn produced inconsistent field")
    }

    pub fn constant(grid: DyadicGrid, v: DVector<f64>) -> Self {
        let n = v.len();
        let count = grid.cell_count();
        VectorField {
            grid,
            n,
            values: vec![v; count],
        }
    }

    pub fn at(&self, cell: usize) -> &DVector<f64> {
        &self.values[cell]
    }

    pub fn values(&self) -> &[DVector<f64>] {
        &self.values
    }

    /// Mean over the cells of `q` (componentwise; exact sum).
    pub fn average(&self, q: &DyadicCube) -> DVector<f64> {
        let cells = q.cells(&self.grid);
        let mut sum = DVector::zeros(self.n);
        for &c in &cells {
            sum += &self.values[c];
        }
        sum / cells.len() as f64
    }

    /// Restriction `1_Q f` (zero outside the cube).
    pub fn restrict(&self, q: &DyadicCube) -> VectorField {
        let mut values = vec![DVector::zeros(self.n); self.values.len()];
        for c in q.cells(&self.grid) {
            values[c] = self.values[c].clone();
        }
        VectorField {
            grid: self.grid,
            n: self.n,
            values,
        }
    }
}

/// Per-cell convex bodies on a grid (all bounded by construction).
#[derive(Clone, Debug)]
pub struct ConvexField {
    pub grid: DyadicGrid,
    pub n: usize,
    values: Vec<ConvexBody>,
}

impl ConvexField {
    pub fn new(grid: DyadicGrid, values: Vec<ConvexBody>) -> Result<Self> {
        if values.len() != grid.cell_count() {
            return Err(Error::InvalidInput(format!(
                "field has {} cells, grid needs {}",
                values.len(),
                grid.cell_count()
            )));
        }
        let n = values.first().map_or(0, |b| b.dim());
        for b in &values {
            if b.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: b.dim(),
                });
            }
        }
        Ok(ConvexField { grid, n, values })
    }

    pub fn from_fn(grid: DyadicGrid, mut f: impl FnMut(usize) -> ConvexBody) -> Self {
        let values: Vec<ConvexBody> = (0..grid.cell_count()).map(|c| f(c)).collect();
        ConvexField::new(grid, values).expect("from_fn produced inconsistent field")
    }

    pub fn constant(grid: DyadicGrid, body: ConvexBody) -> Self {
        let count = grid.cell_count();
        ConvexField {
            grid,
            n: body.dim(),
            values: vec![body; count],
        }
    }

    pub fn at(&self, cell: usize) -> &ConvexBody {
        &self.values[cell]
    }

    pub fn values(&self) -> &[ConvexBody] {
        &self.values
    }

    pub fn map(&self, f: impl Fn(&ConvexBody) -> ConvexBody) -> ConvexField {
        ConvexField {
            grid: self.grid,
            n: self.n,
            values: self.values.iter().map(f).collect(),
        }
    }
}

/// `𝒦(f)`: the field of segments `conv{±f(x)}`.
pub fn kf(f: &VectorField) -> ConvexField {
    ConvexField {
        grid: f.grid,
        n: f.n,
        values: f
            .values
            .iter()
            .map(|v| ConvexBody::segment(v.clone()))
            .collect(),
    }
}

/// Directional domination `𝒦(g)(x) ⊆ 𝒦(f)(x)`: per cell, `g` collinear with
/// `f` and no longer. Returns the first violating cell.
pub fn domination_witness(f: &VectorField, g: &VectorField, tol: f64) -> Option<usize> {
    debug_assert_eq!(f.grid, g.grid);
    debug_assert_eq!(f.n, g.n);
    for c in 0..f.values.len() {
        let (fv, gv) = (&f.values[c], &g.values[c]);
        let (fn_, gn) = (fv.norm(), gv.norm());
        if gn <= tol * fn_.max(1.0) {
            continue; // zero dominates trivially
        }
        if gn > (1.0 + tol) * fn_ {
            return Some(c);
        }
        // Cross-component collinearity.
        let scale = fn_ * gn;
        for i in 0..f.n {
            for j in (i + 1)..f.n {
                if (fv[i] * gv[j] - fv[j] * gv[i]).abs() > tol * scale.max(1e-300) {
                    return Some(c);
                }
            }
        }
    }
    None
}

pub fn dominates(f: &VectorField, g: &VectorField, tol: f64) -> bool {
    domination_witness(f, g, tol).is_none()
}

/// Aumann average `⟨F⟩_Q = (1/|Q|) Σ_{c ⊆ Q} |c| F(c)` as a Minkowski sum
/// over a balanced binary tree.
pub fn aumann_average(field: &ConvexField, q: &DyadicCube) -> Result<ConvexBody> {
    if !q.in_grid(&field.grid) {
        return Err(Error::CubeOutsideGrid(q.to_string()));
    }
    if q.level == field.grid.depth {
        return Ok(field.at(field.grid.cell_index(&q.corner)).clone());
    }
    let children = q.children();
    let mut parts = Vec::with_capacity(children.len());
    for child in &children {
        parts.push(aumann_average(field, child)?);
    }
    Ok(balanced_sum(&parts).scale(1.0 / children.len() as f64))
}

fn balanced_sum(bodies: &[ConvexBody]) -> ConvexBody {
    match bodies.len() {
        0 => unreachable!("balanced_sum of empty list"),
        1 => bodies[0].clone(),
        k => {
            let (a, b) = bodies.split_at(k / 2);
            balanced_sum(a).minkowski_sum(&balanced_sum(b))
        }
    }
}

/// All dyadic Aumann averages of a field, computed bottom-up so a cube's
/// average is the scaled Minkowski sum of its children's.
pub struct AverageTable<'a> {
    pub field: &'a ConvexField,
    map: HashMap<DyadicCube, ConvexBody>,
}

impl<'a> AverageTable<'a> {
    pub fn new(field: &'a ConvexField) -> Self {
        let grid = field.grid;
        let mut map: HashMap<DyadicCube, ConvexBody> = HashMap::new();
        for level in (0..=grid.depth).rev() {
            for q in crate::dyadic::all_cubes(&grid, level, level)
                .expect("level within depth")
                .iter()
            {
                let body = if level == grid.depth {
                    field.at(grid.cell_index(&q.corner)).clone()
                } else {
                    let parts: Vec<ConvexBody> =
                        q.children().into_iter().map(|c| map[&c].clone()).collect();
                    balanced_sum(&parts).scale(1.0 / parts.len() as f64)
                };
                map.insert(q.clone(), body);
            }
        }
        AverageTable { field, map }
    }

    pub fn get(&self, q: &DyadicCube) -> &ConvexBody {
        &self.map[q]
    }
}

/// Per-cell `h(x) = sup_{u ∈ F(x)} |W(x) u|`; exact at polytope vertices,
/// spectral norm of `W·A` for ellipsoid cells.
pub fn sup_weighted_radius(field: &ConvexField, weight: &MatrixWeight) -> Vec<f64> {
    debug_assert_eq!(field.grid, weight.grid);
    (0..field.values.len())
        .map(|c| weighted_radius(field.at(c), weight.at(c)))
        .collect()
}

pub fn weighted_radius(body: &ConvexBody, w: &DMatrix<f64>) -> f64 {
    if body.is_zero() {
        return 0.0;
    }
    if let Some(verts) = body.vertices() {
        verts.iter().map(|v| (w * v).norm()).fold(0.0, f64::max)
    } else {
        let m = w * body.ellipsoid_matrix().unwrap();
        m.svd(false, false).singular_values.amax()
    }
}

/// Per-cell SPD matrices with cached inverses.
#[derive(Clone, Debug)]
pub struct MatrixWeight {
    pub grid: DyadicGrid,
    pub n: usize,
    values: Vec<DMatrix<f64>>,
    inverses: Vec<DMatrix<f64>>,
}

/// Eigenvalue floor for accepting a weight matrix.
pub const SPD_FLOOR: f64 = 1e-10;

impl MatrixWeight {
    pub fn new(grid: DyadicGrid, values: Vec<DMatrix<f64>>) -> Result<Self> {
        if values.len() != grid.cell_count() {
            return Err(Error::InvalidInput(format!(
                "weight has {} cells, grid needs {}",
                values.len(),
                grid.cell_count()
            )));
        }
        let n = values.first().map_or(0, |m| m.nrows());
        let mut inverses = Vec::with_capacity(values.len());
        for (i, m) in values.iter().enumerate() {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: m.nrows(),
                });
            }
            if (m - m.transpose()).amax() > 1e-12 * (1.0 + m.amax()) {
                return Err(Error::NotSpd {
                    cell: format!("cell {i}"),
                    reason: "not symmetric (1e-12 tolerance)".into(),
                });
            }
            let eig = m.clone().symmetric_eigen();
            let lmin = eig.eigenvalues.min();
            if lmin < SPD_FLOOR {
                return Err(Error::NotSpd {
                    cell: format!("cell {i}"),
                    reason: format!("eigenvalue {lmin} below floor {SPD_FLOOR}"),
                });
            }
            let inv = m
                .clone()
                .cholesky()
                .ok_or_else(|| Error::NotSpd {
                    cell: format!("cell {i}"),
                    reason: "Cholesky failed".into(),
                })?
                .inverse();
            inverses.push(inv);
        }
        Ok(MatrixWeight {
            grid,
            n,
            values,
            inverses,
        })
    }

    pub fn identity(grid: DyadicGrid, n: usize) -> Self {
        let count = grid.cell_count();
        MatrixWeight {
            grid,
            n,
            values: vec![DMatrix::identity(n, n); count],
            inverses: vec![DMatrix::identity(n, n); count],
        }
    }

    pub fn at(&self, cell: usize) -> &DMatrix<f64> {
        &self.values[cell]
    }

    pub fn inv_at(&self, cell: usize) -> &DMatrix<f64> {
        &self.inverses[cell]
    }

    /// The weight `W^{-1}` (houses the dual space).
    pub fn inverse(&self) -> MatrixWeight {
        MatrixWeight {
            grid: self.grid,
            n: self.n,
            values: self.inverses.clone(),
            inverses: self.values.clone(),
        }
    }
}

/// Deterministic weight generators for experiments.
#[derive(Clone, Debug)]
pub enum WeightKind {
    /// `W(x) = A` for a fixed SPD matrix.
    Constant(DMatrix<f64>),
    /// `W(x) = diag(x_axis^a, 1, …, 1)` evaluated at cell centers.
    Power { exponent: f64, axis: usize },
    /// `W(x) = R(ω x_1) diag(λ) R(ω x_1)ᵀ` with `R` a chain of Givens
    /// rotations through consecutive coordinate planes.
    Rotating { omega: f64, eigenvalues: Vec<f64> },
}

pub fn make_weight(kind: &WeightKind, grid: DyadicGrid, n: usize) -> Result<MatrixWeight> {
    let values: Vec<DMatrix<f64>> = match kind {
        WeightKind::Constant(a) => {
            if a.nrows() != n || a.ncols() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: a.nrows(),
                });
            }
            vec![a.clone(); grid.cell_count()]
        }
        WeightKind::Power { exponent, axis } => {
            if *axis >= grid.d {
                return Err(Error::InvalidInput(format!(
                    "power axis {axis} outside spatial dimension {}",
                    grid.d
                )));
            }
            (0..grid.cell_count())
                .map(|c| {
                    let x = grid.cell_center(c)[*axis];
                    let mut m = DMatrix::identity(n, n);
                    m[(0, 0)] = x.powf(*exponent);
                    m
                })
                .collect()
        }
        WeightKind::Rotating { omega, eigenvalues } => {
            if eigenvalues.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: eigenvalues.len(),
                });
            }
            (0..grid.cell_count())
                .map(|c| {
                    let theta = omega * grid.cell_center(c)[0];
                    let r = rotation_chain(n, theta);
                    let d = DMatrix::from_diagonal(&DVector::from_vec(eigenvalues.clone()));
                    &r * d * r.transpose()
                })
                .collect()
        }
    };
    MatrixWeight::new(grid, values)
}

/// Product of Givens rotations `G_{1,2}(θ) G_{2,3}(θ) ⋯ G_{n-1,n}(θ)`.
fn rotation_chain(n: usize, theta: f64) -> DMatrix<f64> {
    let mut r = DMatrix::identity(n, n);
    for i in 0..n.saturating_sub(1) {
        let mut g = DMatrix::identity(n, n);
        g[(i, i)] = theta.cos();
        g[(i + 1, i + 1)] = theta.cos();
        g[(i, i + 1)] = -theta.sin();
        g[(i + 1, i)] = theta.sin();
        r = r * g;
    }
    r
}
