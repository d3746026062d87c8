//! Dyadic cubes of `[0,1)^d` and collection predicates.
//!
//! All measures are integer counts of depth-`L` cells, so the sparse and
//! pairwise-disjoint predicates are exact: the `1/2|Q|` threshold never sees
//! floating point.

use crate::{Error, Result};
use std::collections::HashSet;
use std::sync::OnceLock;

/// Uniform dyadic grid on `[0,1)^d` refined to depth `L` (`2^{dL}` cells).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DyadicGrid {
    pub d: usize,
    pub depth: usize,
}

impl DyadicGrid {
    pub fn new(d: usize, depth: usize) -> Self {
        assert!(d >= 1, "spatial dimension must be at least 1");
        assert!(d * depth < 60, "grid too fine for 64-bit cell indices");
        DyadicGrid { d, depth }
    }

    pub fn cell_count(&self) -> usize {
        1usize << (self.d * self.depth)
    }

    /// Side length of a cell, `2^{-L}`.
    pub fn cell_side(&self) -> f64 {
        1.0 / (1u64 << self.depth) as f64
    }

    /// Lebesgue measure of one cell, `2^{-dL}`.
    pub fn cell_measure(&self) -> f64 {
        1.0 / self.cell_count() as f64
    }

    /// Linear index of the cell with integer corner `coords` (level `L`).
    pub fn cell_index(&self, coords: &[u64]) -> usize {
        debug_assert_eq!(coords.len(), self.d);
        let side = 1u64 << self.depth;
        let mut idx = 0u64;
        for &c in coords {
            debug_assert!(c < side);
            idx = idx * side + c;
        }
        idx as usize
    }

    /// Integer corner coordinates of cell `index`.
    pub fn cell_coords(&self, index: usize) -> Vec<u64> {
        let side = 1u64 << self.depth;
        let mut idx = index as u64;
        let mut coords = vec![0u64; self.d];
        for i in (0..self.d).rev() {
            coords[i] = idx % side;
            idx /= side;
        }
        coords
    }

    /// Center of cell `index` in `[0,1)^d`.
    pub fn cell_center(&self, index: usize) -> Vec<f64> {
        let h = self.cell_side();
        self.cell_coords(index)
            .iter()
            .map(|&c| (c as f64 + 0.5) * h)
            .collect()
    }

    /// The whole domain `[0,1)^d` as the level-0 cube.
    pub fn root(&self) -> DyadicCube {
        DyadicCube {
            level: 0,
            corner: vec![0; self.d],
        }
    }
}

/// Dyadic cube: level `j` and integer corner in `[0, 2^j)^d`; the cube is
/// `Π_i [corner_i 2^{-j}, (corner_i+1) 2^{-j})`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DyadicCube {
    pub level: usize,
    pub corner: Vec<u64>,
}

impl std::fmt::Display for DyadicCube {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Q(level={}, corner={:?})", self.level, self.corner)
    }
}

impl DyadicCube {
    pub fn new(level: usize, corner: Vec<u64>) -> Self {
        debug_assert!(corner.iter().all(|&c| c < (1u64 << level).max(1)));
        DyadicCube { level, corner }
    }

    pub fn dim(&self) -> usize {
        self.corner.len()
    }

    /// Lebesgue measure `2^{-jd}`.
    pub fn measure(&self) -> f64 {
        1.0 / (1u64 << (self.level * self.dim())) as f64
    }

    /// Number of depth-`L` cells covered (exact).
    pub fn cell_count(&self, grid: &DyadicGrid) -> u64 {
        debug_assert!(self.level <= grid.depth);
        1u64 << ((grid.depth - self.level) * grid.d)
    }

    pub fn parent(&self) -> Option<DyadicCube> {
        if self.level == 0 {
            return None;
        }
        Some(DyadicCube {
            level: self.level - 1,
            corner: self.corner.iter().map(|&c| c >> 1).collect(),
        })
    }

    /// The `2^d` children, corner-lexicographic.
    pub fn children(&self) -> Vec<DyadicCube> {
        let d = self.dim();
        (0..(1usize << d))
            .map(|mask| DyadicCube {
                level: self.level + 1,
                corner: (0..d)
                    .map(|i| 2 * self.corner[i] + ((mask >> (d - 1 - i)) & 1) as u64)
                    .collect(),
            })
            .collect()
    }

    /// `self ⊆ other` (dyadic cubes nest or are disjoint).
    pub fn is_subcube_of(&self, other: &DyadicCube) -> bool {
        if self.level < other.level {
            return false;
        }
        let shift = self.level - other.level;
        self.corner
            .iter()
            .zip(&other.corner)
            .all(|(&c, &o)| (c >> shift) == o)
    }

    pub fn is_strict_subcube_of(&self, other: &DyadicCube) -> bool {
        self.level > other.level && self.is_subcube_of(other)
    }

    /// Ancestor at `level` (requires `level <= self.level`).
    pub fn ancestor(&self, level: usize) -> DyadicCube {
        debug_assert!(level <= self.level);
        let shift = self.level - level;
        DyadicCube {
            level,
            corner: self.corner.iter().map(|&c| c >> shift).collect(),
        }
    }

    /// Whether the cube fits in `grid` (level within depth, dim matches).
    pub fn in_grid(&self, grid: &DyadicGrid) -> bool {
        self.dim() == grid.d && self.level <= grid.depth
    }

    /// Indices of the depth-`L` cells covered by this cube.
    pub fn cells(&self, grid: &DyadicGrid) -> Vec<usize> {
        debug_assert!(self.in_grid(grid));
        let shift = grid.depth - self.level;
        let span = 1u64 << shift;
        let base: Vec<u64> = self.corner.iter().map(|&c| c << shift).collect();
        let mut out = Vec::with_capacity((span as usize).pow(grid.d as u32));
        let mut offset = vec![0u64; grid.d];
        loop {
            let coords: Vec<u64> = base.iter().zip(&offset).map(|(&b, &o)| b + o).collect();
            out.push(grid.cell_index(&coords));
            // odometer increment over [0, span)^d
            let mut i = grid.d;
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                offset[i] += 1;
                if offset[i] < span {
                    break;
                }
                offset[i] = 0;
            }
        }
    }

    /// Cube of level `grid.depth` containing the cell `index`.
    pub fn of_cell(grid: &DyadicGrid, index: usize) -> DyadicCube {
        DyadicCube {
            level: grid.depth,
            corner: grid.cell_coords(index),
        }
    }
}

/// A finite set of dyadic cubes from one grid, with cached predicate results.
#[derive(Clone, Debug)]
pub struct CubeCollection {
    pub cubes: Vec<DyadicCube>,
    sparse: OnceLock<Option<DyadicCube>>,
    disjoint: OnceLock<Option<(DyadicCube, DyadicCube)>>,
}

impl CubeCollection {
    pub fn new(mut cubes: Vec<DyadicCube>) -> Self {
        cubes.sort();
        cubes.dedup();
        CubeCollection {
            cubes,
            sparse: OnceLock::new(),
            disjoint: OnceLock::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, DyadicCube> {
        self.cubes.iter()
    }

    /// Cubes of the collection that are maximal under inclusion.
    pub fn maximal_cubes(&self) -> Vec<DyadicCube> {
        self.cubes
            .iter()
            .filter(|q| {
                !self
                    .cubes
                    .iter()
                    .any(|p| q.is_strict_subcube_of(p))
            })
            .cloned()
            .collect()
    }

    /// Exact sparseness: for every `Q`, the cells covered by strict subcubes
    /// of `Q` in the collection number at most half of `Q`'s cells.
    pub fn is_sparse(&self, grid: &DyadicGrid) -> bool {
        self.sparse_violation(grid).is_none()
    }

    /// Witness cube violating the sparse condition, if any.
    pub fn sparse_violation(&self, grid: &DyadicGrid) -> Option<DyadicCube> {
        self.sparse
            .get_or_init(|| {
                for q in &self.cubes {
                    let strict: Vec<&DyadicCube> = self
                        .cubes
                        .iter()
                        .filter(|p| p.is_strict_subcube_of(q))
                        .collect();
                    // Union measure = sum over the maximal members, deduped.
                    let mut maximal: Vec<&DyadicCube> = strict
                        .iter()
                        .filter(|p| !strict.iter().any(|r| p.is_strict_subcube_of(r)))
                        .copied()
                        .collect();
                    maximal.sort();
                    maximal.dedup();
                    let covered: u64 = maximal.iter().map(|p| p.cell_count(grid)).sum();
                    if 2 * covered > q.cell_count(grid) {
                        return Some(q.clone());
                    }
                }
                None
            })
            .clone()
    }

    pub fn is_pairwise_disjoint(&self, grid: &DyadicGrid) -> bool {
        self.disjoint_violation(grid).is_none()
    }

    /// Witness pair of overlapping cubes, if any. Dyadic cubes overlap iff
    /// one contains the other, so an ancestor scan suffices.
    pub fn disjoint_violation(&self, grid: &DyadicGrid) -> Option<(DyadicCube, DyadicCube)> {
        let _ = grid;
        self.disjoint
            .get_or_init(|| {
                let set: HashSet<&DyadicCube> = self.cubes.iter().collect();
                for q in &self.cubes {
                    for level in 0..q.level {
                        let anc = q.ancestor(level);
                        if let Some(found) = set.get(&anc) {
                            return Some(((*found).clone(), q.clone()));
                        }
                    }
                }
                None
            })
            .clone()
    }
}

/// All dyadic cubes of the grid with level in `[min_level, max_level]`,
/// ordered by level then corner.
pub fn all_cubes(grid: &DyadicGrid, min_level: usize, max_level: usize) -> Result<CubeCollection> {
    if min_level > max_level || max_level > grid.depth {
        return Err(Error::LevelRange {
            min: min_level,
            max: max_level,
            depth: grid.depth,
        });
    }
    let mut cubes = Vec::new();
    for level in min_level..=max_level {
        let side = 1u64 << level;
        let mut corner = vec![0u64; grid.d];
        loop {
            cubes.push(DyadicCube::new(level, corner.clone()));
            let mut i = grid.d;
            loop {
                if i == 0 {
                    corner = vec![u64::MAX; grid.d];
                    break;
                }
                i -= 1;
                corner[i] += 1;
                if corner[i] < side {
                    break;
                }
                corner[i] = 0;
            }
            if corner[0] == u64::MAX {
                break;
            }
        }
    }
    Ok(CubeCollection::new(cubes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    #[test]
    fn all_cubes_counts() {
        let g1 = DyadicGrid::new(1, 2);
        assert_eq!(all_cubes(&g1, 0, 2).unwrap().len(), 7); // 1 + 2 + 4

        let g2 = DyadicGrid::new(2, 1);
        assert_eq!(all_cubes(&g2, 1, 1).unwrap().len(), 4);

        let g3 = DyadicGrid::new(2, 3);
        // Σ_j 4^j for j = 0..3
        assert_eq!(all_cubes(&g3, 0, 3).unwrap().len(), 1 + 4 + 16 + 64);
    }

    #[test]
    fn level_range_error() {
        let g = DyadicGrid::new(1, 2);
        assert!(all_cubes(&g, 1, 3).is_err());
        assert!(all_cubes(&g, 2, 1).is_err());
    }

    #[test]
    fn partition_identity_exact() {
        // Level-j cubes partition the domain: cell counts sum exactly.
        for (d, depth) in [(1, 4), (2, 3), (3, 2)] {
            let g = DyadicGrid::new(d, depth);
            for j in 0..=depth {
                let cubes = all_cubes(&g, j, j).unwrap();
                let total: u64 = cubes.iter().map(|q| q.cell_count(&g)).sum();
                assert_eq!(total, g.cell_count() as u64);
            }
        }
    }

    #[test]
    fn parent_child_consistency() {
        let g = DyadicGrid::new(2, 3);
        for q in all_cubes(&g, 1, 3).unwrap().iter() {
            let p = q.parent().unwrap();
            assert!(q.is_strict_subcube_of(&p));
            assert!(p.children().contains(q));
        }
    }

    #[test]
    fn cells_cover_cube() {
        let g = DyadicGrid::new(2, 3);
        let q = DyadicCube::new(1, vec![1, 0]);
        let cells = q.cells(&g);
        assert_eq!(cells.len() as u64, q.cell_count(&g));
        for &c in &cells {
            let cell_cube = DyadicCube::of_cell(&g, c);
            assert!(cell_cube.is_subcube_of(&q));
        }
    }

    #[test]
    fn disjoint_predicate() {
        let g = DyadicGrid::new(1, 3);
        let siblings = all_cubes(&g, 2, 2).unwrap();
        assert!(siblings.is_pairwise_disjoint(&g));

        let q = DyadicCube::new(1, vec![0]);
        let child = q.children()[0].clone();
        let bad = CubeCollection::new(vec![q, child]);
        assert!(!bad.is_pairwise_disjoint(&g));
        assert!(bad.disjoint_violation(&g).is_some());
    }

    #[test]
    fn disjoint_matches_brute_force() {
        // Random 100-cube samples vs O(k^2) overlap test.
        let g = DyadicGrid::new(2, 4);
        for trial in 0..20 {
            let mut rng = Rng::substream(0xD15C0, trial);
            let cubes: Vec<DyadicCube> = (0..100)
                .map(|_| {
                    let level = rng.below(g.depth + 1);
                    let side = 1u64 << level;
                    DyadicCube::new(
                        level,
                        (0..g.d).map(|_| rng.below(side as usize) as u64).collect(),
                    )
                })
                .collect();
            let coll = CubeCollection::new(cubes);
            let brute = coll.cubes.iter().enumerate().all(|(i, a)| {
                coll.cubes.iter().enumerate().all(|(j, b)| {
                    i == j || !(a.is_subcube_of(b) || b.is_subcube_of(a))
                })
            });
            assert_eq!(coll.is_pairwise_disjoint(&g), brute, "trial {trial}");
        }
    }

    #[test]
    fn sparse_examples() {
        let g = DyadicGrid::new(1, 3);
        // Pairwise disjoint collections are sparse.
        let disjoint = all_cubes(&g, 2, 2).unwrap();
        assert!(disjoint.is_sparse(&g));

        // Children covering the whole parent violate the half condition.
        let root = DyadicCube::new(0, vec![0]);
        let bad = CubeCollection::new(vec![
            root.clone(),
            DyadicCube::new(1, vec![0]),
            DyadicCube::new(1, vec![1]),
        ]);
        assert!(!bad.is_sparse(&g));
        assert_eq!(bad.sparse_violation(&g), Some(root));

        // One child covers exactly half: allowed.
        let ok = CubeCollection::new(vec![
            DyadicCube::new(0, vec![0]),
            DyadicCube::new(1, vec![0]),
        ]);
        assert!(ok.is_sparse(&g));
    }

    #[test]
    fn sparse_implies_carleson_packing() {
        // Σ_{Q'⊆Q} |Q'| ≤ 2|Q| for sparse collections, exactly.
        let g = DyadicGrid::new(2, 4);
        let mut tested = 0;
        for trial in 0..200 {
            let mut rng = Rng::substream(0xCA7, trial);
            let cubes: Vec<DyadicCube> = (0..12)
                .map(|_| {
                    let level = rng.below(g.depth + 1);
                    let side = 1u64 << level;
                    DyadicCube::new(
                        level,
                        (0..g.d).map(|_| rng.below(side as usize) as u64).collect(),
                    )
                })
                .collect();
            let coll = CubeCollection::new(cubes);
            if !coll.is_sparse(&g) {
                continue;
            }
            tested += 1;
            for q in coll.iter() {
                let packed: u64 = coll
                    .iter()
                    .filter(|p| p.is_subcube_of(q))
                    .map(|p| p.cell_count(&g))
                    .sum();
                assert!(packed <= 2 * q.cell_count(&g));
            }
        }
        assert!(tested > 10, "too few sparse samples: {tested}");
    }

    #[test]
    fn maximal_cubes_of_tree() {
        let g = DyadicGrid::new(1, 2);
        let coll = all_cubes(&g, 0, 2).unwrap();
        let max = coll.maximal_cubes();
        assert_eq!(max, vec![g.root()]);
    }
}
