//! Stopping-time sparse domination of the convex-set valued maximal
//! operator over a finite dyadic family.
//!
//! For each selected cube the John basis of its Aumann average fixes `n`
//! directions; a subcube enters the child generation when its averaged
//! support in one of those directions exceeds `2n` times the parent's.
//! Child generations pack to at most half the parent by the same averaging
//! argument that makes the selection sparse, and the selected collection
//! dominates the full maximal operator at factor `2 n^{5/2}`.
//!
//! Thresholds compare exact per-cell support averages (plain scalar sums);
//! convex bodies enter only through the John bases and the final
//! containment verification.

use crate::convexgeom::JohnPair;
use crate::dyadic::{CubeCollection, DyadicCube, DyadicGrid};
use crate::fields::{AverageTable, ConvexField};
use crate::operators::maximal_with_table;
use crate::Result;
use nalgebra::DVector;

/// Khachiyan tolerance for the per-cube John bases.
pub const JOHN_EPS: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct StoppingNode {
    pub cube: DyadicCube,
    pub john: JohnPair,
    pub children: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct StoppingTree {
    pub nodes: Vec<StoppingNode>,
    pub roots: Vec<usize>,
    /// The selected sparse collection (all node cubes).
    pub collection: CubeCollection,
}

/// Exact scalar average of `support(F(·), dir)` over the cells of `q`.
pub fn avg_support(field: &ConvexField, q: &DyadicCube, dir: &DVector<f64>) -> f64 {
    let cells = q.cells(&field.grid);
    let sum: f64 = cells.iter().map(|&c| field.at(c).support(dir)).sum();
    sum / cells.len() as f64
}

/// Build the stopping tree of `field` over the finite family `family`.
pub fn sparse_dominate(field: &ConvexField, family: &CubeCollection) -> Result<StoppingTree> {
    let table = AverageTable::new(field);
    let n = field.n;
    let threshold_factor = 2.0 * n as f64;

    let mut nodes: Vec<StoppingNode> = Vec::new();
    let mut roots = Vec::new();
    let mut stack: Vec<(DyadicCube, Option<usize>)> = family
        .maximal_cubes()
        .into_iter()
        .rev()
        .map(|q| (q, None))
        .collect();

    while let Some((cube, parent)) = stack.pop() {
        let john = table.get(&cube).john_basis(JOHN_EPS)?;
        let thresholds: Vec<f64> = (0..n)
            .map(|k| threshold_factor * avg_support(field, &cube, &john.basis.column(k).clone_owned()))
            .collect();

        // Candidates scanned largest-first so selected children are maximal.
        let mut selected: Vec<DyadicCube> = Vec::new();
        for cand in family.iter() {
            if !cand.is_strict_subcube_of(&cube) {
                continue;
            }
            if selected.iter().any(|s| cand.is_subcube_of(s)) {
                continue;
            }
            let violates = (0..n).any(|k| {
                let dir = john.basis.column(k).clone_owned();
                avg_support(field, cand, &dir) > thresholds[k]
            });
            if violates {
                selected.push(cand.clone());
            }
        }

        let idx = nodes.len();
        nodes.push(StoppingNode {
            cube,
            john,
            children: Vec::new(),
        });
        match parent {
            None => roots.push(idx),
            Some(p) => nodes[p].children.push(idx),
        }
        for child in selected.into_iter().rev() {
            stack.push((child, Some(idx)));
        }
    }

    let collection = CubeCollection::new(nodes.iter().map(|nd| nd.cube.clone()).collect());
    Ok(StoppingTree {
        nodes,
        roots,
        collection,
    })
}

impl StoppingTree {
    /// Exact child packing: for every node, the children cover at most half
    /// of the parent's cells.
    pub fn packing_ok(&self, grid: &DyadicGrid) -> bool {
        self.nodes.iter().all(|node| {
            let covered: u64 = node
                .children
                .iter()
                .map(|&c| self.nodes[c].cube.cell_count(grid))
                .sum();
            2 * covered <= node.cube.cell_count(grid)
        })
    }

    /// Smallest selected cube containing `q`, if any.
    pub fn projection(&self, q: &DyadicCube) -> Option<&DyadicCube> {
        self.collection
            .iter()
            .filter(|s| q.is_subcube_of(s))
            .max_by_key(|s| s.level)
    }

    /// Indented dump: one cube per line with its John semiaxes.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        fn rec(tree: &StoppingTree, idx: usize, depth: usize, out: &mut String) {
            let node = &tree.nodes[idx];
            let axes: Vec<String> = node
                .john
                .semiaxes
                .iter()
                .map(|a| format!("{a:.6e}"))
                .collect();
            out.push_str(&format!(
                "{}{} semiaxes [{}]\n",
                "  ".repeat(depth),
                node.cube,
                axes.join(", ")
            ));
            for &c in &node.children {
                rec(tree, c, depth + 1, out);
            }
        }
        for &r in &self.roots {
            rec(self, r, 0, &mut out);
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct DominationReport {
    /// The claimed constant `2 n^{5/2}`.
    pub factor: f64,
    /// Smallest measured inflation `λ` with `M_𝒻F(x) ⊆ λ M_𝒮F(x)` at the
    /// worst cell.
    pub measured: f64,
    pub worst_cell: usize,
    pub pass: bool,
}

/// Check `M^𝒦_𝒻 F(x) ⊆ 2 n^{5/2} · M^𝒦_𝒮 F(x)` at every cell and measure
/// the actual inflation needed.
pub fn verify_domination(
    field: &ConvexField,
    family: &CubeCollection,
    tree: &StoppingTree,
    tol: f64,
) -> Result<DominationReport> {
    let n = field.n as f64;
    let factor = 2.0 * n.powf(2.5);
    let table = AverageTable::new(field);
    let lhs = maximal_with_table(field, family, &table)?;
    let rhs = maximal_with_table(field, &tree.collection, &table)?;
    let mut measured = 0.0f64;
    let mut worst_cell = 0;
    for c in 0..field.grid.cell_count() {
        let left = lhs.at(c);
        if left.is_zero() {
            continue;
        }
        let mut cell_lambda = 0.0f64;
        if let Some(verts) = left.vertices() {
            for v in verts {
                cell_lambda = cell_lambda.max(rhs.at(c).gauge(v));
            }
        }
        if cell_lambda > measured {
            measured = cell_lambda;
            worst_cell = c;
        }
    }
    Ok(DominationReport {
        factor,
        measured,
        worst_cell,
        pass: measured <= factor * (1.0 + tol),
    })
}

/// The between-stopping-cubes estimate: every family cube that projects to
/// a selected cube without being one of its children satisfies the stopping
/// inequality non-strictly in all John directions.
pub fn intermediate_bounds_ok(
    field: &ConvexField,
    family: &CubeCollection,
    tree: &StoppingTree,
) -> bool {
    let n = field.n;
    for q in family.iter() {
        let Some(pi) = tree.projection(q) else {
            continue;
        };
        if pi == q {
            continue;
        }
        let node = tree
            .nodes
            .iter()
            .find(|nd| &nd.cube == pi)
            .expect("projection is a node");
        for k in 0..n {
            let dir = node.john.basis.column(k).clone_owned();
            let child_avg = avg_support(field, q, &dir);
            let parent_avg = avg_support(field, pi, &dir);
            if child_avg > 2.0 * n as f64 * parent_avg * (1.0 + 1e-12) {
                return false;
            }
        }
    }
    true
}

/// The intermediate inclusion `⟨F⟩_{Q'} ⊆ 2 n^{5/2} ⟨F⟩_{π(Q')}`.
pub fn intermediate_inclusion_ok(
    field: &ConvexField,
    family: &CubeCollection,
    tree: &StoppingTree,
    tol: f64,
) -> bool {
    let n = field.n as f64;
    let factor = 2.0 * n.powf(2.5);
    let table = AverageTable::new(field);
    for q in family.iter() {
        let Some(pi) = tree.projection(q) else {
            continue;
        };
        let child = table.get(q);
        let parent = table.get(pi).scale(factor);
        if !child.contained_in(&parent, tol) {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convexgeom::ConvexBody;
    use crate::dyadic::all_cubes;
    use crate::fields::{kf, VectorField};
    use crate::rng::Rng;

    fn random_convex_field(rng: &mut Rng, grid: DyadicGrid, n: usize) -> ConvexField {
        ConvexField::from_fn(grid, |_| {
            ConvexBody::polytope(
                (0..n + 2)
                    .map(|_| DVector::from_fn(n, |_, _| rng.range(-1.0, 1.0)))
                    .collect(),
            )
            .unwrap()
        })
    }

    /// Independent scalar Calderón-Zygmund stopping recursion for n = 1.
    fn scalar_stopping_cubes(
        avgs: &dyn Fn(&DyadicCube) -> f64,
        family: &CubeCollection,
    ) -> Vec<DyadicCube> {
        let mut out = Vec::new();
        let mut stack: Vec<DyadicCube> = family.maximal_cubes();
        while let Some(q) = stack.pop() {
            out.push(q.clone());
            let threshold = 2.0 * avgs(&q);
            let mut selected: Vec<DyadicCube> = Vec::new();
            for cand in family.iter() {
                if !cand.is_strict_subcube_of(&q) {
                    continue;
                }
                if selected.iter().any(|s| cand.is_subcube_of(s)) {
                    continue;
                }
                if avgs(cand) > threshold {
                    selected.push(cand.clone());
                }
            }
            stack.extend(selected);
        }
        out.sort();
        out
    }

    #[test]
    fn constant_field_selects_roots_only() {
        let grid = DyadicGrid::new(1, 3);
        let body = ConvexBody::polytope(vec![
            DVector::from_vec(vec![1.0, 0.2]),
            DVector::from_vec(vec![-0.3, 0.9]),
        ])
        .unwrap();
        let field = ConvexField::constant(grid, body);
        let fam = all_cubes(&grid, 0, 3).unwrap();
        let tree = sparse_dominate(&field, &fam).unwrap();
        assert_eq!(tree.collection.len(), 1);
        assert_eq!(tree.collection.cubes[0], grid.root());
        let report = verify_domination(&field, &fam, &tree, 1e-7).unwrap();
        assert!(report.pass);
        assert!(report.measured <= 1.0 + 1e-9, "constant field measures 1");
    }

    #[test]
    fn zero_field_gives_leaf_roots() {
        let grid = DyadicGrid::new(1, 2);
        let field = ConvexField::constant(grid, ConvexBody::zero(2));
        let fam = all_cubes(&grid, 0, 2).unwrap();
        let tree = sparse_dominate(&field, &fam).unwrap();
        assert_eq!(tree.collection.len(), 1);
        assert!(tree.nodes[0].children.is_empty());
    }

    #[test]
    fn scalar_indicator_matches_classical_stopping() {
        // f = 1_{[0, 2^-m)}: compare against the independent scalar recursion.
        for m in 1..4 {
            let grid = DyadicGrid::new(1, 5);
            let cutoff = 1u64 << (grid.depth - m);
            let f = VectorField::from_fn(grid, 1, |c| {
                let coord = grid.cell_coords(c)[0];
                DVector::from_element(1, if coord < cutoff { 1.0 } else { 0.0 })
            });
            let field = kf(&f);
            let fam = all_cubes(&grid, 0, grid.depth).unwrap();
            let tree = sparse_dominate(&field, &fam).unwrap();

            let avgs = |q: &DyadicCube| -> f64 {
                let cells = q.cells(&grid);
                cells.iter().map(|&c| f.at(c)[0].abs()).sum::<f64>() / cells.len() as f64
            };
            let expected = scalar_stopping_cubes(&avgs, &fam);
            assert_eq!(tree.collection.cubes, expected, "m = {m}");
        }
    }

    #[test]
    fn scalar_random_matches_classical_stopping() {
        for trial in 0..20 {
            let mut rng = Rng::substream(0x5CA1A2, trial);
            let grid = DyadicGrid::new(1, 4);
            let f = VectorField::from_fn(grid, 1, |_| {
                DVector::from_element(1, rng.range(-1.0, 1.0))
            });
            let field = kf(&f);
            let fam = all_cubes(&grid, 0, grid.depth).unwrap();
            let tree = sparse_dominate(&field, &fam).unwrap();
            let avgs = |q: &DyadicCube| -> f64 {
                let cells = q.cells(&grid);
                cells.iter().map(|&c| f.at(c)[0].abs()).sum::<f64>() / cells.len() as f64
            };
            let expected = scalar_stopping_cubes(&avgs, &fam);
            assert_eq!(tree.collection.cubes, expected, "trial {trial}");
            // Scalar constant: measured inflation at most 2.
            let report = verify_domination(&field, &fam, &tree, 1e-7).unwrap();
            assert!(report.pass);
            assert!(report.measured <= 2.0 * (1.0 + 1e-9), "trial {trial}");
        }
    }

    #[test]
    fn random_instances_sparse_and_dominated() {
        for trial in 0..20 {
            let mut rng = Rng::substream(0xD011, trial);
            let n = 1 + rng.below(3);
            let (d, depth) = if rng.uniform() < 0.5 { (1, 4) } else { (2, 2) };
            let grid = DyadicGrid::new(d, depth);
            let field = random_convex_field(&mut rng, grid, n);
            let fam = all_cubes(&grid, 0, depth).unwrap();
            let tree = sparse_dominate(&field, &fam).unwrap();

            assert!(tree.collection.is_sparse(&grid), "trial {trial}: not sparse");
            assert!(tree.packing_ok(&grid), "trial {trial}: packing");
            assert!(
                intermediate_bounds_ok(&field, &fam, &tree),
                "trial {trial}: stopping bounds"
            );
            assert!(
                intermediate_inclusion_ok(&field, &fam, &tree, 1e-7),
                "trial {trial}: inclusion"
            );
            let report = verify_domination(&field, &fam, &tree, 1e-7).unwrap();
            assert!(
                report.pass,
                "trial {trial}: measured {} vs factor {}",
                report.measured, report.factor
            );
        }
    }

    #[test]
    fn dump_contains_all_cubes() {
        let mut rng = Rng::new(0xD2);
        let grid = DyadicGrid::new(1, 3);
        let field = random_convex_field(&mut rng, grid, 2);
        let fam = all_cubes(&grid, 0, 3).unwrap();
        let tree = sparse_dominate(&field, &fam).unwrap();
        let dump = tree.dump();
        assert_eq!(dump.lines().count(), tree.collection.len());
        assert!(dump.contains("semiaxes"));
    }
}
