//! Plain-text serialization: bodies, cube collections, vector fields, and
//! matrix weights. Decimals carry 17 significant digits so round trips are
//! bit-exact for finite values.

use crate::convexgeom::ConvexBody;
use crate::dyadic::{CubeCollection, DyadicCube, DyadicGrid};
use crate::fields::{MatrixWeight, VectorField};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// 17-significant-digit decimal, the canonical number format of all files
/// and CSV reports.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_f64(s: &str) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|e| Error::Parse(format!("bad decimal {s:?}: {e}")))
}

fn parse_usize(s: &str) -> Result<usize> {
    s.parse::<usize>()
        .map_err(|e| Error::Parse(format!("bad integer {s:?}: {e}")))
}

// ---------------------------------------------------------------------------
// Bodies: `polytope n k` + k vertex rows, or `ellipsoid n` + n matrix rows.
// The zero body is a polytope with zero vertices.
// ---------------------------------------------------------------------------

pub fn write_body(body: &ConvexBody) -> String {
    let mut out = String::new();
    if let Some(verts) = body.vertices() {
        out.push_str(&format!("polytope {} {}\n", body.dim(), verts.len()));
        for v in verts {
            let row: Vec<String> = v.iter().map(|x| fmt_f64(*x)).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
    } else {
        let mat = body.ellipsoid_matrix().unwrap();
        out.push_str(&format!("ellipsoid {}\n", body.dim()));
        for i in 0..body.dim() {
            let row: Vec<String> = (0..body.dim()).map(|j| fmt_f64(mat[(i, j)])).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
    }
    out
}

pub fn read_body(text: &str) -> Result<ConvexBody> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty body".into()))?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    match parts.as_slice() {
        ["polytope", n, k] => {
            let n = parse_usize(n)?;
            let k = parse_usize(k)?;
            if k == 0 {
                return Ok(ConvexBody::zero(n));
            }
            let mut verts = Vec::with_capacity(k);
            for _ in 0..k {
                let line = lines
                    .next()
                    .ok_or_else(|| Error::Parse("truncated polytope".into()))?;
                let coords: Result<Vec<f64>> =
                    line.split_whitespace().map(parse_f64).collect();
                let coords = coords?;
                if coords.len() != n {
                    return Err(Error::Parse(format!(
                        "vertex row has {} coordinates, expected {n}",
                        coords.len()
                    )));
                }
                verts.push(DVector::from_vec(coords));
            }
            ConvexBody::polytope(verts)
        }
        ["ellipsoid", n] => {
            let n = parse_usize(n)?;
            let mut mat = DMatrix::zeros(n, n);
            for i in 0..n {
                let line = lines
                    .next()
                    .ok_or_else(|| Error::Parse("truncated ellipsoid".into()))?;
                let row: Result<Vec<f64>> = line.split_whitespace().map(parse_f64).collect();
                let row = row?;
                if row.len() != n {
                    return Err(Error::Parse(format!(
                        "matrix row has {} entries, expected {n}",
                        row.len()
                    )));
                }
                for (j, x) in row.into_iter().enumerate() {
                    mat[(i, j)] = x;
                }
            }
            // Degenerate (PSD) ellipsoids round-trip through the rank path.
            match ConvexBody::ellipsoid(mat.clone()) {
                Ok(b) => Ok(b),
                Err(_) => {
                    let sym = (&mat + mat.transpose()) * 0.5;
                    let eig = sym.clone().symmetric_eigen();
                    let lmax = eig.eigenvalues.amax();
                    if eig.eigenvalues.iter().any(|&l| l < -1e-9 * lmax.max(1.0)) {
                        return Err(Error::Parse("ellipsoid matrix not PSD".into()));
                    }
                    let rank = eig
                        .eigenvalues
                        .iter()
                        .filter(|l| **l > 1e-10 * lmax)
                        .count();
                    Ok(ConvexBody::ellipsoid_psd(sym, rank))
                }
            }
        }
        _ => Err(Error::Parse(format!("unknown body header {header:?}"))),
    }
}

// ---------------------------------------------------------------------------
// Cube collections: one cube per line, `level c_1 … c_d`.
// ---------------------------------------------------------------------------

pub fn write_collection(coll: &CubeCollection) -> String {
    let mut out = String::new();
    for q in coll.iter() {
        out.push_str(&q.level.to_string());
        for c in &q.corner {
            out.push(' ');
            out.push_str(&c.to_string());
        }
        out.push('\n');
    }
    out
}

pub fn read_collection(text: &str) -> Result<CubeCollection> {
    let mut cubes = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let level = parse_usize(
            parts
                .next()
                .ok_or_else(|| Error::Parse("empty cube line".into()))?,
        )?;
        let corner: Result<Vec<u64>> = parts
            .map(|s| {
                s.parse::<u64>()
                    .map_err(|e| Error::Parse(format!("bad corner {s:?}: {e}")))
            })
            .collect();
        cubes.push(DyadicCube::new(level, corner?));
    }
    Ok(CubeCollection::new(cubes))
}

// ---------------------------------------------------------------------------
// Fields: header `field d L n vector`, then one row of n values per cell in
// cell-index order. Weights: header `weight d L n`, then n² row-major values
// per cell.
// ---------------------------------------------------------------------------

pub fn write_vector_field(f: &VectorField) -> String {
    let mut out = format!("field {} {} {} vector\n", f.grid.d, f.grid.depth, f.n);
    for c in 0..f.grid.cell_count() {
        let row: Vec<String> = f.at(c).iter().map(|x| fmt_f64(*x)).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn read_vector_field(text: &str) -> Result<VectorField> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty field file".into()))?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    let ["field", d, depth, n, "vector"] = parts.as_slice() else {
        return Err(Error::Parse(format!("unknown field header {header:?}")));
    };
    let grid = DyadicGrid::new(parse_usize(d)?, parse_usize(depth)?);
    let n = parse_usize(n)?;
    let mut values = Vec::with_capacity(grid.cell_count());
    for _ in 0..grid.cell_count() {
        let line = lines
            .next()
            .ok_or_else(|| Error::Parse("truncated field file".into()))?;
        let row: Result<Vec<f64>> = line.split_whitespace().map(parse_f64).collect();
        let row = row?;
        if row.len() != n {
            return Err(Error::Parse(format!(
                "cell row has {} values, expected {n}",
                row.len()
            )));
        }
        values.push(DVector::from_vec(row));
    }
    VectorField::new(grid, values)
}

pub fn write_weight(w: &MatrixWeight) -> String {
    let mut out = format!("weight {} {} {}\n", w.grid.d, w.grid.depth, w.n);
    for c in 0..w.grid.cell_count() {
        let m = w.at(c);
        let row: Vec<String> = (0..w.n)
            .flat_map(|i| (0..w.n).map(move |j| (i, j)))
            .map(|(i, j)| fmt_f64(m[(i, j)]))
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn read_weight(text: &str) -> Result<MatrixWeight> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty weight file".into()))?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    let ["weight", d, depth, n] = parts.as_slice() else {
        return Err(Error::Parse(format!("unknown weight header {header:?}")));
    };
    let grid = DyadicGrid::new(parse_usize(d)?, parse_usize(depth)?);
    let n = parse_usize(n)?;
    let mut values = Vec::with_capacity(grid.cell_count());
    for _ in 0..grid.cell_count() {
        let line = lines
            .next()
            .ok_or_else(|| Error::Parse("truncated weight file".into()))?;
        let row: Result<Vec<f64>> = line.split_whitespace().map(parse_f64).collect();
        let row = row?;
        if row.len() != n * n {
            return Err(Error::Parse(format!(
                "cell row has {} values, expected {}",
                row.len(),
                n * n
            )));
        }
        values.push(DMatrix::from_row_slice(n, n, &row));
    }
    MatrixWeight::new(grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;
    use proptest::prelude::*;

    #[test]
    fn body_round_trip_polytope() {
        let mut rng = Rng::new(0x10);
        let body = ConvexBody::polytope(
            (0..5)
                .map(|_| DVector::from_fn(3, |_, _| rng.range(-1.0, 1.0)))
                .collect(),
        )
        .unwrap();
        let text = write_body(&body);
        let back = read_body(&text).unwrap();
        assert_eq!(body.vertices().unwrap(), back.vertices().unwrap());
    }

    #[test]
    fn body_round_trip_ellipsoid_and_zero() {
        let mat = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let body = ConvexBody::ellipsoid(mat.clone()).unwrap();
        let back = read_body(&write_body(&body)).unwrap();
        assert!((back.ellipsoid_matrix().unwrap() - &mat).amax() < 1e-15);

        let zero = ConvexBody::zero(4);
        let back = read_body(&write_body(&zero)).unwrap();
        assert!(back.is_zero());
        assert_eq!(back.dim(), 4);
    }

    #[test]
    fn collection_round_trip() {
        let grid = DyadicGrid::new(2, 3);
        let coll = crate::dyadic::all_cubes(&grid, 1, 2).unwrap();
        let back = read_collection(&write_collection(&coll)).unwrap();
        assert_eq!(coll.cubes, back.cubes);
    }

    #[test]
    fn weight_round_trip() {
        let grid = DyadicGrid::new(1, 2);
        let w = crate::fields::make_weight(
            &crate::fields::WeightKind::Rotating {
                omega: 2.0,
                eigenvalues: vec![1.0, 3.0],
            },
            grid,
            2,
        )
        .unwrap();
        let back = read_weight(&write_weight(&w)).unwrap();
        for c in 0..grid.cell_count() {
            assert_eq!(w.at(c), back.at(c));
        }
    }

    #[test]
    fn rejects_malformed() {
        assert!(read_body("simplex 2 1\n1 0\n").is_err());
        assert!(read_body("polytope 2 2\n1 0\n").is_err());
        assert!(read_vector_field("field 1 1 2 tensor\n").is_err());
        assert!(read_weight("weight 1 1 2\n1 0 0\n").is_err());
    }

    proptest! {
        #[test]
        fn vector_field_round_trip_exact(seed in 0u64..500) {
            let mut rng = Rng::new(seed);
            let grid = DyadicGrid::new(1, 3);
            let n = 1 + (seed as usize % 3);
            let f = VectorField::from_fn(grid, n, |_| {
                DVector::from_fn(n, |_, _| rng.range(-1e3, 1e3))
            });
            let back = read_vector_field(&write_vector_field(&f)).unwrap();
            for c in 0..grid.cell_count() {
                prop_assert_eq!(f.at(c), back.at(c));
            }
        }
    }
}
