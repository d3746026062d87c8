//! Matrix-weighted `L^p` norms, Köthe pairings, reducing matrices, and
//! general norm functions on the grid.
//!
//! Exponent conventions: `p ∈ [1, ∞]` with `f64::INFINITY` for the sup norm
//! and dual exponents `1' = ∞`, `∞' = 1`. All integrals are exact cell sums.

use crate::convexgeom::{dirgrid, ConvexBody};
use crate::dyadic::{DyadicCube, DyadicGrid};
use crate::fields::{sup_weighted_radius, ConvexField, MatrixWeight, VectorField};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Dual exponent `p' = p/(p-1)` with `1' = ∞` and `∞' = 1`.
pub fn dual_exponent(p: f64) -> f64 {
    if p.is_infinite() {
        1.0
    } else if p <= 1.0 {
        f64::INFINITY
    } else {
        p / (p - 1.0)
    }
}

/// The space `L^p_W` over a grid.
#[derive(Clone, Debug)]
pub struct LpWSpace {
    pub p: f64,
    pub weight: MatrixWeight,
}

impl LpWSpace {
    pub fn new(p: f64, weight: MatrixWeight) -> Result<Self> {
        if !(p >= 1.0) {
            return Err(Error::InvalidInput(format!("exponent {p} below 1")));
        }
        Ok(LpWSpace { p, weight })
    }

    pub fn grid(&self) -> DyadicGrid {
        self.weight.grid
    }

    pub fn n(&self) -> usize {
        self.weight.n
    }

    /// Köthe dual `(L^p_W)' = L^{p'}_{W^{-1}}`.
    pub fn dual(&self) -> LpWSpace {
        LpWSpace {
            p: dual_exponent(self.p),
            weight: self.weight.inverse(),
        }
    }
}

/// `(Σ_c |c| v_c^p)^{1/p}` over per-cell nonnegative scalars; max for `p=∞`.
pub fn scalar_norm(values: &[f64], grid: &DyadicGrid, p: f64) -> f64 {
    if p.is_infinite() {
        values.iter().copied().fold(0.0, f64::max)
    } else {
        let cell = grid.cell_measure();
        let sum: f64 = values.iter().map(|v| cell * v.powf(p)).sum();
        sum.powf(1.0 / p)
    }
}

/// `‖f‖_{L^p_W}`.
pub fn lp_norm(f: &VectorField, space: &LpWSpace) -> f64 {
    debug_assert_eq!(f.grid, space.grid());
    let vals: Vec<f64> = (0..f.grid.cell_count())
        .map(|c| (space.weight.at(c) * f.at(c)).norm())
        .collect();
    scalar_norm(&vals, &f.grid, space.p)
}

/// `‖1_Q f‖_{L^p_W}` without materializing the restricted field.
pub fn lp_norm_on(f: &VectorField, space: &LpWSpace, q: &DyadicCube) -> f64 {
    let cells = q.cells(&f.grid);
    if space.p.is_infinite() {
        cells
            .iter()
            .map(|&c| (space.weight.at(c) * f.at(c)).norm())
            .fold(0.0, f64::max)
    } else {
        let cell = f.grid.cell_measure();
        let sum: f64 = cells
            .iter()
            .map(|&c| cell * (space.weight.at(c) * f.at(c)).norm().powf(space.p))
            .sum();
        sum.powf(1.0 / space.p)
    }
}

/// `‖F‖_{X_W[𝒦]}`: the norm of the pointwise maximal weighted radius, which
/// is attained by a per-cell maximizing vertex selection.
pub fn body_norm(field: &ConvexField, space: &LpWSpace) -> f64 {
    let h = sup_weighted_radius(field, &space.weight);
    scalar_norm(&h, &field.grid, space.p)
}

/// Candidate-certified weak norm: `max_u ‖1_{{x : u ∈ F(x)}} u‖`. A lower
/// bound of the true weak norm; callers inject their proof witnesses into
/// the candidate set.
pub fn weak_body_norm(
    field: &ConvexField,
    space: &LpWSpace,
    candidates: &[DVector<f64>],
) -> Result<f64> {
    if candidates.is_empty() {
        return Err(Error::InvalidInput("weak norm needs candidate vectors".into()));
    }
    let grid = field.grid;
    let mut best = 0.0f64;
    for u in candidates {
        let vals: Vec<f64> = (0..grid.cell_count())
            .map(|c| {
                if field.at(c).gauge(u) <= 1.0 + 1e-9 {
                    (space.weight.at(c) * u).norm()
                } else {
                    0.0
                }
            })
            .collect();
        best = best.max(scalar_norm(&vals, &grid, space.p));
    }
    Ok(best)
}

/// Köthe pairing `∫ |f·g|`.
pub fn pairing(f: &VectorField, g: &VectorField) -> f64 {
    debug_assert_eq!(f.grid, g.grid);
    let cell = f.grid.cell_measure();
    (0..f.grid.cell_count())
        .map(|c| cell * f.at(c).dot(g.at(c)).abs())
        .sum()
}

/// Dual extremizer: `g` with `pairing(f, g) = ‖f‖_{p,W} ‖g‖_{p',W⁻¹}`,
/// `g = W (Wf) |Wf|^{p-2}` per cell. Needs `p ∈ (1, ∞)`.
pub fn holder_extremizer(f: &VectorField, space: &LpWSpace) -> Result<VectorField> {
    if space.p <= 1.0 || space.p.is_infinite() {
        return Err(Error::Unsupported(
            "extremizer needs p strictly between 1 and infinity".into(),
        ));
    }
    let values = (0..f.grid.cell_count())
        .map(|c| {
            let wf = space.weight.at(c) * f.at(c);
            let norm = wf.norm();
            if norm == 0.0 {
                DVector::zeros(f.n)
            } else {
                space.weight.at(c) * wf * norm.powf(space.p - 2.0)
            }
        })
        .collect();
    VectorField::new(f.grid, values)
}

/// Unit ball of `u ↦ ‖1_E u‖_X`: exact ellipsoid for `p = 2`, exact segment
/// for `n = 1`, grid-sampled polytope otherwise.
pub fn indicator_norm_ball(space: &LpWSpace, cube: &DyadicCube) -> Result<ConvexBody> {
    let grid = space.grid();
    if !cube.in_grid(&grid) {
        return Err(Error::CubeOutsideGrid(cube.to_string()));
    }
    let n = space.n();
    if n == 1 {
        let r = indicator_norm(space, cube, &DVector::from_element(1, 1.0));
        return Ok(ConvexBody::segment(DVector::from_element(1, 1.0 / r)));
    }
    if space.p == 2.0 {
        let gram = indicator_gram(space, cube);
        let eig = gram.symmetric_eigen();
        let mut mat = DMatrix::zeros(n, n);
        for (i, &lam) in eig.eigenvalues.iter().enumerate() {
            let q = eig.eigenvectors.column(i);
            mat += lam.max(1e-300).powf(-0.5) * &q * q.transpose();
        }
        return ConvexBody::ellipsoid(mat);
    }
    let pts: Vec<DVector<f64>> = dirgrid::directions(n)
        .iter()
        .map(|d| d / indicator_norm(space, cube, d))
        .collect();
    ConvexBody::polytope(pts)
}

/// `‖1_E u‖_X` for a fixed direction.
pub fn indicator_norm(space: &LpWSpace, cube: &DyadicCube, u: &DVector<f64>) -> f64 {
    let grid = space.grid();
    let cells = cube.cells(&grid);
    if space.p.is_infinite() {
        cells
            .iter()
            .map(|&c| (space.weight.at(c) * u).norm())
            .fold(0.0, f64::max)
    } else {
        let cell = grid.cell_measure();
        cells
            .iter()
            .map(|&c| cell * (space.weight.at(c) * u).norm().powf(space.p))
            .sum::<f64>()
            .powf(1.0 / space.p)
    }
}

/// `Σ_{c ⊆ E} |c| W(c)²` (the `p = 2` indicator-norm Gram matrix).
fn indicator_gram(space: &LpWSpace, cube: &DyadicCube) -> DMatrix<f64> {
    let grid = space.grid();
    let n = space.n();
    let cell = grid.cell_measure();
    let mut gram = DMatrix::zeros(n, n);
    for c in cube.cells(&grid) {
        let w = space.weight.at(c);
        gram += cell * w * w;
    }
    gram
}

/// Reducing matrix of a cube: SPD `A` with `|Au| <= ‖1_E u‖_X <=
/// sqrt(n)(1+ε)|Au|`, the left inequality pinned on the direction grid.
/// Exact for `p = 2` and `n = 1`.
#[derive(Clone, Debug)]
pub struct ReducingMatrix {
    pub cube: DyadicCube,
    pub mat: DMatrix<f64>,
}

pub fn reducing_matrix(space: &LpWSpace, cube: &DyadicCube, eps: f64) -> Result<ReducingMatrix> {
    let n = space.n();
    if n == 1 {
        let r = indicator_norm(space, cube, &DVector::from_element(1, 1.0));
        return Ok(ReducingMatrix {
            cube: cube.clone(),
            mat: DMatrix::from_element(1, 1, r),
        });
    }
    if space.p == 2.0 {
        let gram = indicator_gram(space, cube);
        let eig = gram.symmetric_eigen();
        let mut mat = DMatrix::zeros(n, n);
        for (i, &lam) in eig.eigenvalues.iter().enumerate() {
            let q = eig.eigenvectors.column(i);
            mat += lam.max(0.0).sqrt() * &q * q.transpose();
        }
        return Ok(ReducingMatrix {
            cube: cube.clone(),
            mat,
        });
    }
    let ball = indicator_norm_ball(space, cube)?;
    let loewner = ball.loewner_ellipsoid(eps)?;
    let lmat = loewner.ellipsoid_matrix().unwrap();
    let mut mat = lmat
        .clone()
        .cholesky()
        .ok_or_else(|| Error::InvalidInput("degenerate indicator-norm ball".into()))?
        .inverse();
    mat = (&mat + mat.transpose()) * 0.5;
    let mut worst: f64 = 0.0;
    for d in dirgrid::directions(n).iter() {
        let ratio = (&mat * d).norm() / indicator_norm(space, cube, d);
        worst = worst.max(ratio);
    }
    if worst > 1.0 {
        mat /= worst;
    }
    Ok(ReducingMatrix {
        cube: cube.clone(),
        mat,
    })
}

/// A norm per cell, represented by its (full-rank) unit ball; the dual norm
/// is the support function of the same ball.
#[derive(Clone, Debug)]
pub struct NormFunction {
    pub grid: DyadicGrid,
    pub n: usize,
    balls: Vec<ConvexBody>,
    dual_balls: Vec<ConvexBody>,
}

impl NormFunction {
    pub fn from_balls(grid: DyadicGrid, balls: Vec<ConvexBody>) -> Result<Self> {
        if balls.len() != grid.cell_count() {
            return Err(Error::InvalidInput(format!(
                "norm function has {} cells, grid needs {}",
                balls.len(),
                grid.cell_count()
            )));
        }
        let n = balls.first().map_or(0, |b| b.dim());
        for (c, b) in balls.iter().enumerate() {
            if b.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: b.dim(),
                });
            }
            if b.rank() < n {
                return Err(Error::InvalidInput(format!(
                    "norm ball at cell {c} is rank-deficient ({} < {n})",
                    b.rank()
                )));
            }
        }
        let dual_balls = balls.iter().map(polar_on_grid).collect();
        Ok(NormFunction {
            grid,
            n,
            balls,
            dual_balls,
        })
    }

    /// The norm function `ρ_W(x, u) = |W(x) u|` (balls `W(x)^{-1}·B^n`).
    pub fn from_weight(weight: &MatrixWeight) -> Self {
        let balls: Vec<ConvexBody> = (0..weight.grid.cell_count())
            .map(|c| ConvexBody::ellipsoid(weight.inv_at(c).clone()).expect("SPD inverse"))
            .collect();
        let dual_balls = balls.iter().map(polar_on_grid).collect();
        NormFunction {
            grid: weight.grid,
            n: weight.n,
            balls,
            dual_balls,
        }
    }

    pub fn ball(&self, cell: usize) -> &ConvexBody {
        &self.balls[cell]
    }

    pub fn dual_ball(&self, cell: usize) -> &ConvexBody {
        &self.dual_balls[cell]
    }

    /// `ρ(x, u)`.
    pub fn eval(&self, cell: usize, u: &DVector<f64>) -> f64 {
        self.balls[cell].gauge(u)
    }

    /// `ρ*(x, v) = sup_{u ∈ ball} |u·v|`.
    pub fn eval_dual(&self, cell: usize, v: &DVector<f64>) -> f64 {
        self.balls[cell].support(v)
    }

    /// Matrix weight `W` with `ρ_W <= ρ <= sqrt(n) ρ_W` (Löwner ellipsoid of
    /// each ball, inverted to the norm side).
    pub fn john_weight(&self, eps: f64) -> Result<MatrixWeight> {
        let values: Result<Vec<DMatrix<f64>>> = self
            .balls
            .iter()
            .map(|b| {
                let loewner = b.loewner_ellipsoid(eps)?;
                let lmat = loewner.ellipsoid_matrix().unwrap();
                let inv = lmat
                    .clone()
                    .cholesky()
                    .ok_or_else(|| Error::InvalidInput("degenerate norm ball".into()))?
                    .inverse();
                Ok((&inv + inv.transpose()) * 0.5)
            })
            .collect();
        MatrixWeight::new(self.grid, values?)
    }
}

/// Grid-sampled polar body `{v : support(B, v) <= 1}`.
fn polar_on_grid(ball: &ConvexBody) -> ConvexBody {
    let n = ball.dim();
    let pts: Vec<DVector<f64>> = dirgrid::directions(n)
        .iter()
        .filter_map(|d| {
            let s = ball.support(d);
            if s > 0.0 {
                Some(d / s)
            } else {
                None
            }
        })
        .collect();
    ConvexBody::polytope(pts).expect("polar of full-rank ball")
}

/// `‖f‖_{L^p_ρ} = (Σ_c |c| ρ(c, f(c))^p)^{1/p}`.
pub fn rho_norm(f: &VectorField, rho: &NormFunction, p: f64) -> f64 {
    debug_assert_eq!(f.grid, rho.grid);
    let vals: Vec<f64> = (0..f.grid.cell_count())
        .map(|c| rho.eval(c, f.at(c)))
        .collect();
    scalar_norm(&vals, &f.grid, p)
}

/// `‖g‖_{L^{p'}_{ρ*}}` for the dual norm of `rho`.
pub fn rho_dual_norm(g: &VectorField, rho: &NormFunction, p_dual: f64) -> f64 {
    debug_assert_eq!(g.grid, rho.grid);
    let vals: Vec<f64> = (0..g.grid.cell_count())
        .map(|c| rho.eval_dual(c, g.at(c)))
        .collect();
    scalar_norm(&vals, &g.grid, p_dual)
}

/// Both sides of the disjoint-cube Hölder sum
/// `Σ_Q ‖1_Q f‖_X ‖1_Q g‖_{X'} <= ‖f‖_X ‖g‖_{X'}` (property 𝒢 with `C = 1`
/// for `L^p_W`). Returns `(lhs, rhs)`.
pub fn property_g_sum(
    f: &VectorField,
    g: &VectorField,
    space: &LpWSpace,
    partition: &[DyadicCube],
) -> (f64, f64) {
    let dual = space.dual();
    let lhs: f64 = partition
        .iter()
        .map(|q| lp_norm_on(f, space, q) * lp_norm_on(g, &dual, q))
        .sum();
    let rhs = lp_norm(f, space) * lp_norm(g, &dual);
    (lhs, rhs)
}
