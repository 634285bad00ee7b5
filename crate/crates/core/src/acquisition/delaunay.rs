//! Delaunay triangulation by incremental Bowyer-Watson insertion, used to
//! pick the support simplex of a query point.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::domain::distance;
use crate::error::{Error, Result};

/// Largest dimension the triangulation is built for.
pub const MAX_DELAUNAY_DIM: usize = 4;

/// Simplices with a smaller volume are treated as degenerate.
pub const MIN_SIMPLEX_VOLUME: f64 = 1e-14;

struct Cell {
    vertices: Vec<usize>,
    center: Vec<f64>,
    radius_sq: f64,
}

fn circumsphere(pts: &[&[f64]]) -> (Vec<f64>, f64) {
    let n = pts[0].len();
    let p0 = pts[0];
    let a = DMatrix::from_fn(n, n, |i, j| 2.0 * (pts[i + 1][j] - p0[j]));
    let b = DVector::from_fn(n, |i, _| {
        pts[i + 1].iter().map(|v| v * v).sum::<f64>() - p0.iter().map(|v| v * v).sum::<f64>()
    });
    match a.lu().solve(&b) {
        Some(c) if c.iter().all(|v| v.is_finite()) => {
            let c: Vec<f64> = c.iter().cloned().collect();
            let r = distance(&c, p0).powi(2);
            (c, r)
        }
        // flat cell: let the next insertion remove it
        _ => (vec![0.0; n], f64::INFINITY),
    }
}

/// Volume of the simplex spanned by `n + 1` points in `n` dimensions.
pub fn simplex_volume(pts: &[&[f64]]) -> f64 {
    let n = pts[0].len();
    if pts.len() != n + 1 {
        return 0.0;
    }
    let t = DMatrix::from_fn(n, n, |i, j| pts[j + 1][i] - pts[0][i]);
    let fact: f64 = (1..=n).map(|k| k as f64).product();
    t.determinant().abs() / fact
}

struct Locator {
    vertices: Vec<usize>,
    origin: Vec<f64>,
    inverse: DMatrix<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

/// Triangulation of a point set; simplices reference input indices.
pub struct Delaunay {
    dim: usize,
    simplices: Vec<Vec<usize>>,
    locators: Vec<Locator>,
}

impl Delaunay {
    /// Triangulate `points` (rows of equal length `n <= 4`).
    pub fn new(points: &[Vec<f64>]) -> Result<Self> {
        let n = points.first().map_or(0, |p| p.len());
        if n == 0 || n > MAX_DELAUNAY_DIM {
            return Err(Error::Capacity(format!(
                "triangulation supports 1 <= n <= {MAX_DELAUNAY_DIM}, got n = {n}"
            )));
        }
        if points.len() < n + 1 {
            return Err(Error::Argument(format!(
                "triangulation needs at least {} points, got {}",
                n + 1,
                points.len()
            )));
        }

        // enclosing simplex {x >= a, sum(x - a) <= span} around the bounding box
        let mut lo = vec![f64::INFINITY; n];
        let mut hi = vec![f64::NEG_INFINITY; n];
        for p in points {
            for d in 0..n {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        let size = (0..n).map(|d| hi[d] - lo[d]).fold(0.0, f64::max).max(1e-12);
        let margin = 10.0 * size;
        let base: Vec<f64> = lo.iter().map(|v| v - margin).collect();
        let span = (n as f64) * (size + 2.0 * margin) + margin;
        let mut all: Vec<Vec<f64>> = points.to_vec();
        let first_super = all.len();
        all.push(base.clone());
        for d in 0..n {
            let mut v = base.clone();
            v[d] += span;
            all.push(v);
        }

        let make_cell = |vertices: Vec<usize>, all: &[Vec<f64>]| {
            let pts: Vec<&[f64]> = vertices.iter().map(|i| all[*i].as_slice()).collect();
            let (center, radius_sq) = circumsphere(&pts);
            Cell {
                vertices,
                center,
                radius_sq,
            }
        };
        let mut cells = vec![make_cell((first_super..first_super + n + 1).collect(), &all)];

        for p in 0..points.len() {
            let x = &all[p];
            let (bad, keep): (Vec<Cell>, Vec<Cell>) = cells.into_iter().partition(|c| {
                c.radius_sq.is_infinite()
                    || distance(x, &c.center).powi(2) < c.radius_sq * (1.0 - 1e-12)
            });
            cells = keep;
            let mut facets: HashMap<Vec<usize>, usize> = HashMap::new();
            for c in &bad {
                for skip in 0..=n {
                    let mut f: Vec<usize> = c
                        .vertices
                        .iter()
                        .enumerate()
                        .filter(|(k, _)| *k != skip)
                        .map(|(_, v)| *v)
                        .collect();
                    f.sort_unstable();
                    *facets.entry(f).or_insert(0) += 1;
                }
            }
            let mut boundary: Vec<Vec<usize>> = facets
                .into_iter()
                .filter(|(_, count)| *count == 1)
                .map(|(f, _)| f)
                .collect();
            boundary.sort();
            for mut f in boundary {
                f.push(p);
                cells.push(make_cell(f, &all));
            }
        }

        let simplices: Vec<Vec<usize>> = cells
            .into_iter()
            .filter(|c| c.vertices.iter().all(|v| *v < first_super))
            .map(|c| c.vertices)
            .collect();
        let locators = simplices
            .iter()
            .filter_map(|s| {
                let pts: Vec<&[f64]> = s.iter().map(|i| points[*i].as_slice()).collect();
                let t = DMatrix::from_fn(n, n, |i, j| pts[j + 1][i] - pts[0][i]);
                let inverse = t.try_inverse()?;
                let mut lo = pts[0].to_vec();
                let mut hi = pts[0].to_vec();
                for q in &pts[1..] {
                    for d in 0..n {
                        lo[d] = lo[d].min(q[d]);
                        hi[d] = hi[d].max(q[d]);
                    }
                }
                Some(Locator {
                    vertices: s.clone(),
                    origin: pts[0].to_vec(),
                    inverse,
                    lo,
                    hi,
                })
            })
            .collect();
        Ok(Self {
            dim: n,
            simplices,
            locators,
        })
    }

    pub fn simplices(&self) -> &[Vec<usize>] {
        &self.simplices
    }

    /// Vertices of a simplex containing `x`, if any.
    pub fn locate(&self, x: &[f64]) -> Option<&[usize]> {
        const TOL: f64 = 1e-10;
        let n = self.dim;
        'cells: for loc in &self.locators {
            for d in 0..n {
                let slack = TOL * (loc.hi[d] - loc.lo[d]).max(1.0);
                if x[d] < loc.lo[d] - slack || x[d] > loc.hi[d] + slack {
                    continue 'cells;
                }
            }
            let mut sum = 0.0;
            for i in 0..n {
                let mut l = 0.0;
                for j in 0..n {
                    l += loc.inverse[(i, j)] * (x[j] - loc.origin[j]);
                }
                if l < -TOL {
                    continue 'cells;
                }
                sum += l;
            }
            if sum <= 1.0 + TOL {
                return Some(&loc.vertices);
            }
        }
        None
    }
}
