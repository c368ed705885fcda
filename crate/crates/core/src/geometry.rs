//! Meshed domains, grid functions and pair quadrature.
//!
//! All double integrals are discretized with the centroid rule over ordered
//! pairs of distinct cells (or boundary facets). Coincident pairs are never
//! evaluated, which removes the kernel singularity; the scheme is first order.
//!
//! Pair sums follow a fixed reduction order: pairs are visited
//! lexicographically by `(i, j)`, every row `i` is summed sequentially in `j`,
//! and row sums are combined sequentially in `i`. Rows may be evaluated on any
//! number of threads without changing a single bit of the result.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    Interior,
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
    South,
    East,
    North,
    West,
}

#[derive(Debug, Clone)]
pub struct Cell {
    pub centroid: Point,
    pub measure: f64,
    pub lo: Point,
    pub hi: Point,
}

/// A boundary facet: an endpoint in 1D, an edge segment `a -> b` in 2D.
#[derive(Debug, Clone)]
pub struct Facet {
    pub centroid: Point,
    pub measure: f64,
    pub side: Side,
    /// The interior cell the facet belongs to.
    pub cell: usize,
    pub a: Point,
    pub b: Point,
}

#[derive(Debug, Clone, Copy)]
struct Grid {
    nx: usize,
    ny: usize,
    h: [f64; 2],
}

#[derive(Debug, Clone)]
pub struct Domain {
    dim: usize,
    lo: Point,
    hi: Point,
    cells: Vec<Cell>,
    facets: Vec<Facet>,
    diameter: f64,
    grid: Grid,
}

impl Domain {
    /// Uniform partition of `(a, b)` into `n` cells. The boundary is the two
    /// endpoints, each carrying unit counting measure.
    pub fn interval(a: f64, b: f64, n: usize) -> Result<Domain> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidDomain(format!("degenerate interval ({a}, {b})")));
        }
        if n < 2 {
            return Err(Error::InvalidDomain(format!("interval needs at least 2 cells, got {n}")));
        }
        let h = (b - a) / n as f64;
        let cells: Vec<Cell> = (0..n)
            .map(|i| {
                let lo = a + i as f64 * h;
                let hi = if i + 1 == n { b } else { a + (i + 1) as f64 * h };
                Cell { centroid: [a + (i as f64 + 0.5) * h, 0.0], measure: h, lo: [lo, 0.0], hi: [hi, 0.0] }
            })
            .collect();
        let facets = vec![
            Facet { centroid: [a, 0.0], measure: 1.0, side: Side::Left, cell: 0, a: [a, 0.0], b: [a, 0.0] },
            Facet { centroid: [b, 0.0], measure: 1.0, side: Side::Right, cell: n - 1, a: [b, 0.0], b: [b, 0.0] },
        ];
        let diameter = cells[n - 1].centroid[0] - cells[0].centroid[0];
        Ok(Domain { dim: 1, lo: [a, 0.0], hi: [b, 0.0], cells, facets, diameter, grid: Grid { nx: n, ny: 1, h: [h, 0.0] } })
    }

    /// Uniform `nx x ny` grid on the box `[lo, hi]`. Cells are numbered row by
    /// row (`j * nx + i`); facets run counterclockwise from the lower-left corner.
    pub fn rectangle(lo: Point, hi: Point, nx: usize, ny: usize) -> Result<Domain> {
        if !(lo.iter().chain(hi.iter()).all(|v| v.is_finite()) && lo[0] < hi[0] && lo[1] < hi[1]) {
            return Err(Error::InvalidDomain(format!("degenerate box {lo:?} - {hi:?}")));
        }
        if nx < 2 || ny < 2 {
            return Err(Error::InvalidDomain(format!("rectangle needs at least 2 cells per axis, got {nx}x{ny}")));
        }
        let h = [(hi[0] - lo[0]) / nx as f64, (hi[1] - lo[1]) / ny as f64];
        let edge = |axis: usize, k: usize, n: usize| -> f64 {
            if k == n {
                hi[axis]
            } else {
                lo[axis] + k as f64 * h[axis]
            }
        };
        let mut cells = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                cells.push(Cell {
                    centroid: [lo[0] + (i as f64 + 0.5) * h[0], lo[1] + (j as f64 + 0.5) * h[1]],
                    measure: h[0] * h[1],
                    lo: [edge(0, i, nx), edge(1, j, ny)],
                    hi: [edge(0, i + 1, nx), edge(1, j + 1, ny)],
                });
            }
        }
        let mut facets = Vec::with_capacity(2 * (nx + ny));
        for i in 0..nx {
            let (a, b) = ([edge(0, i, nx), lo[1]], [edge(0, i + 1, nx), lo[1]]);
            facets.push(Facet { centroid: [cells[i].centroid[0], lo[1]], measure: h[0], side: Side::South, cell: i, a, b });
        }
        for j in 0..ny {
            let cell = j * nx + nx - 1;
            let (a, b) = ([hi[0], edge(1, j, ny)], [hi[0], edge(1, j + 1, ny)]);
            facets.push(Facet { centroid: [hi[0], cells[cell].centroid[1]], measure: h[1], side: Side::East, cell, a, b });
        }
        for i in (0..nx).rev() {
            let cell = (ny - 1) * nx + i;
            let (a, b) = ([edge(0, i + 1, nx), hi[1]], [edge(0, i, nx), hi[1]]);
            facets.push(Facet { centroid: [cells[cell].centroid[0], hi[1]], measure: h[0], side: Side::North, cell, a, b });
        }
        for j in (0..ny).rev() {
            let cell = j * nx;
            let (a, b) = ([lo[0], edge(1, j + 1, ny)], [lo[0], edge(1, j, ny)]);
            facets.push(Facet { centroid: [lo[0], cells[cell].centroid[1]], measure: h[1], side: Side::West, cell, a, b });
        }
        let first = cells[0].centroid;
        let last = cells[nx * ny - 1].centroid;
        let diameter = distance(&first, &last);
        Ok(Domain { dim: 2, lo, hi, cells, facets, diameter, grid: Grid { nx, ny, h } })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    pub fn bounds(&self) -> (Point, Point) {
        (self.lo, self.hi)
    }

    /// Largest distance between two cell centroids.
    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// Diameter of the continuous domain (length or box diagonal).
    pub fn exact_diameter(&self) -> f64 {
        distance(&self.lo, &self.hi)
    }

    pub fn volume(&self) -> f64 {
        self.cells.iter().map(|c| c.measure).sum()
    }

    pub fn boundary_measure(&self) -> f64 {
        self.facets.iter().map(|f| f.measure).sum()
    }

    /// Grid resolution per axis (`ny = 1` for intervals).
    pub fn resolution(&self) -> (usize, usize) {
        (self.grid.nx, self.grid.ny)
    }

    /// Cell side lengths (second entry 0 for intervals).
    pub fn cell_size(&self) -> [f64; 2] {
        self.grid.h
    }

    pub fn len(&self, scope: Scope) -> usize {
        match scope {
            Scope::Interior => self.cells.len(),
            Scope::Boundary => self.facets.len(),
        }
    }

    pub fn points(&self, scope: Scope) -> Vec<Point> {
        match scope {
            Scope::Interior => self.cells.iter().map(|c| c.centroid).collect(),
            Scope::Boundary => self.facets.iter().map(|f| f.centroid).collect(),
        }
    }

    pub fn weights(&self, scope: Scope) -> Vec<f64> {
        match scope {
            Scope::Interior => self.cells.iter().map(|c| c.measure).collect(),
            Scope::Boundary => self.facets.iter().map(|f| f.measure).collect(),
        }
    }

    fn lattice_coords(&self, cell: usize) -> (i64, i64) {
        ((cell % self.grid.nx) as i64, (cell / self.grid.nx) as i64)
    }

    /// True when `p` lies in the closed domain.
    pub fn contains(&self, p: &Point) -> bool {
        (0..self.dim).all(|k| p[k] >= self.lo[k] && p[k] <= self.hi[k])
    }
}

pub fn distance(a: &Point, b: &Point) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    (dx * dx + dy * dy).sqrt()
}

/// Cell values of a function plus its boundary trace on the facets.
#[derive(Debug, Clone)]
pub struct GridFunction {
    domain: Arc<Domain>,
    interior: Vec<f64>,
    boundary: Vec<f64>,
}

impl GridFunction {
    pub fn new(domain: Arc<Domain>, interior: Vec<f64>, boundary: Vec<f64>) -> Result<GridFunction> {
        if interior.len() != domain.cells.len() || boundary.len() != domain.facets.len() {
            return Err(Error::MeshInconsistency(format!(
                "grid function has {} interior / {} boundary values, domain has {} cells / {} facets",
                interior.len(),
                boundary.len(),
                domain.cells.len(),
                domain.facets.len()
            )));
        }
        if let Some(v) = interior.iter().chain(boundary.iter()).find(|v| !v.is_finite()) {
            return Err(Error::Parameter(format!("grid function value {v} is not finite")));
        }
        Ok(GridFunction { domain, interior, boundary })
    }

    /// Samples `f` at cell centroids and facet centroids.
    pub fn from_fn(domain: Arc<Domain>, f: impl Fn(&Point) -> f64) -> Result<GridFunction> {
        let interior = domain.cells.iter().map(|c| f(&c.centroid)).collect();
        let boundary = domain.facets.iter().map(|fc| f(&fc.centroid)).collect();
        GridFunction::new(domain, interior, boundary)
    }

    /// Builds a function from cell values; each facet takes the value of its
    /// adjacent cell (piecewise-constant trace).
    pub fn from_interior(domain: Arc<Domain>, interior: Vec<f64>) -> Result<GridFunction> {
        if interior.len() != domain.cells.len() {
            return Err(Error::MeshInconsistency(format!(
                "{} values for {} cells",
                interior.len(),
                domain.cells.len()
            )));
        }
        let boundary = domain.facets.iter().map(|f| interior[f.cell]).collect();
        GridFunction::new(domain, interior, boundary)
    }

    pub fn zeros(domain: Arc<Domain>) -> GridFunction {
        let (m, k) = (domain.cells.len(), domain.facets.len());
        GridFunction { domain, interior: vec![0.0; m], boundary: vec![0.0; k] }
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn interior(&self) -> &[f64] {
        &self.interior
    }

    pub fn boundary(&self) -> &[f64] {
        &self.boundary
    }

    pub fn values(&self, scope: Scope) -> &[f64] {
        match scope {
            Scope::Interior => &self.interior,
            Scope::Boundary => &self.boundary,
        }
    }

    pub fn is_zero(&self, scope: Scope) -> bool {
        self.values(scope).iter().all(|&v| v == 0.0)
    }

    pub fn scaled(&self, c: f64) -> GridFunction {
        GridFunction {
            domain: self.domain.clone(),
            interior: self.interior.iter().map(|v| c * v).collect(),
            boundary: self.boundary.iter().map(|v| c * v).collect(),
        }
    }

    pub fn add(&self, other: &GridFunction) -> Result<GridFunction> {
        if !Arc::ptr_eq(&self.domain, &other.domain) && self.interior.len() != other.interior.len() {
            return Err(Error::MeshInconsistency("adding grid functions on different domains".into()));
        }
        Ok(GridFunction {
            domain: self.domain.clone(),
            interior: self.interior.iter().zip(&other.interior).map(|(a, b)| a + b).collect(),
            boundary: self.boundary.iter().zip(&other.boundary).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sup_norm(&self) -> f64 {
        self.interior.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Ordered pairs `(a, b)`, `a != b`, of quadrature nodes (cells or facets)
/// with weights `w_a * w_b` and centroid distances.
///
/// Pairs are generated on demand; nothing quadratic is stored.
#[derive(Debug, Clone)]
pub struct PairQuadrature {
    scope: Scope,
    dim: usize,
    members: Vec<usize>,
    points: Vec<Point>,
    weights: Vec<f64>,
    lattice: Option<Lattice>,
}

#[derive(Debug, Clone)]
struct Lattice {
    coords: Vec<(i64, i64)>,
    h: [f64; 2],
    extent: (usize, usize),
}

impl PairQuadrature {
    pub fn new(domain: &Domain, scope: Scope) -> Result<PairQuadrature> {
        let members: Vec<usize> = (0..domain.len(scope)).collect();
        PairQuadrature::restricted(domain, scope, members)
    }

    /// Pair quadrature over a subset of nodes, kept in the given order.
    pub fn restricted(domain: &Domain, scope: Scope, members: Vec<usize>) -> Result<PairQuadrature> {
        if scope == Scope::Boundary && domain.facets.is_empty() {
            return Err(Error::InvalidDomain("domain has no boundary facets".into()));
        }
        let all_points = domain.points(scope);
        let all_weights = domain.weights(scope);
        if let Some(&bad) = members.iter().find(|&&m| m >= all_points.len()) {
            return Err(Error::MeshInconsistency(format!("node {bad} out of range")));
        }
        let points: Vec<Point> = members.iter().map(|&m| all_points[m]).collect();
        let weights: Vec<f64> = members.iter().map(|&m| all_weights[m]).collect();
        let lattice = (scope == Scope::Interior).then(|| Lattice {
            coords: members.iter().map(|&m| domain.lattice_coords(m)).collect(),
            h: domain.grid.h,
            extent: (domain.grid.nx, domain.grid.ny),
        });
        let pq = PairQuadrature { scope, dim: domain.dim, members, points, weights, lattice };
        let floor = 1e-15 * domain.diameter.max(domain.exact_diameter());
        let min = pq.min_distance();
        if pq.nodes() > 1 && !(min > floor) {
            return Err(Error::MeshInconsistency(format!("pair distance {min:e} below {floor:e}")));
        }
        Ok(pq)
    }

    pub fn scope(&self) -> Scope {
        self.scope
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of ordered pairs.
    pub fn len(&self) -> usize {
        let m = self.nodes();
        m * m.saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of quadrature nodes.
    pub fn nodes(&self) -> usize {
        self.members.len()
    }

    /// Global cell (or facet) index of local node `a`.
    pub fn member(&self, a: usize) -> usize {
        self.members[a]
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn point(&self, a: usize) -> &Point {
        &self.points[a]
    }

    pub fn node_weight(&self, a: usize) -> f64 {
        self.weights[a]
    }

    pub fn weight(&self, a: usize, b: usize) -> f64 {
        self.weights[a] * self.weights[b]
    }

    /// Centroid distance. On uniform grids it is computed from the lattice
    /// offset, so it only depends on `(|di|, |dj|)`.
    pub fn distance(&self, a: usize, b: usize) -> f64 {
        match &self.lattice {
            Some(l) => {
                let (di, dj) = self.offset(l, a, b);
                let dx = di as f64 * l.h[0];
                let dy = dj as f64 * l.h[1];
                (dx * dx + dy * dy).sqrt()
            }
            None => distance(&self.points[a], &self.points[b]),
        }
    }

    fn offset(&self, l: &Lattice, a: usize, b: usize) -> (usize, usize) {
        let (ia, ja) = l.coords[a];
        let (ib, jb) = l.coords[b];
        ((ia - ib).unsigned_abs() as usize, (ja - jb).unsigned_abs() as usize)
    }

    /// Lattice offset `(|di|, |dj|)` and the offset table extent, when the nodes
    /// are cells of a uniform grid.
    pub fn lattice_offset(&self, a: usize, b: usize) -> Option<(usize, usize)> {
        self.lattice.as_ref().map(|l| self.offset(l, a, b))
    }

    pub fn lattice_extent(&self) -> Option<(usize, usize)> {
        self.lattice.as_ref().map(|l| l.extent)
    }

    /// Distance for a lattice offset (only meaningful when `lattice_extent` is `Some`).
    pub fn offset_distance(&self, di: usize, dj: usize) -> f64 {
        let h = self.lattice.as_ref().map_or([0.0; 2], |l| l.h);
        let dx = di as f64 * h[0];
        let dy = dj as f64 * h[1];
        (dx * dx + dy * dy).sqrt()
    }

    pub fn min_distance(&self) -> f64 {
        let m = self.nodes();
        if m < 2 {
            return f64::INFINITY;
        }
        if let Some(l) = &self.lattice {
            let mut best = f64::INFINITY;
            if l.extent.0 > 1 {
                best = best.min(l.h[0]);
            }
            if l.extent.1 > 1 {
                best = best.min(l.h[1]);
            }
            return best;
        }
        (0..m)
            .flat_map(|a| (a + 1..m).map(move |b| (a, b)))
            .map(|(a, b)| self.distance(a, b))
            .fold(f64::INFINITY, f64::min)
    }

    /// Iterates all ordered pairs in lexicographic order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let m = self.nodes();
        (0..m).flat_map(move |a| (0..m).filter(move |&b| b != a).map(move |b| (a, b)))
    }

    /// Deterministic sum of `term(a, b)` over all ordered pairs.
    pub fn sum<F>(&self, term: F) -> f64
    where
        F: Fn(usize, usize) -> f64 + Sync,
    {
        let m = self.nodes();
        ordered_sum(m, |a| {
            let mut acc = 0.0;
            for b in 0..m {
                if b != a {
                    acc += term(a, b);
                }
            }
            acc
        })
    }
}

/// Evaluates `block(i)` for `i in 0..count`, possibly in parallel, and adds
/// the results sequentially in index order.
pub fn ordered_sum<F>(count: usize, block: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let partial: Vec<f64> = (0..count).into_par_iter().map(|i| block(i)).collect();
    partial.iter().fold(0.0, |acc, v| acc + v)
}

/// Evaluates `item(i)` for `i in 0..count`, possibly in parallel, keeping index order.
pub fn ordered_map<T, F>(count: usize, item: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    (0..count).into_par_iter().map(|i| item(i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_cells() {
        let d = Domain::interval(0.0, 1.0, 4).unwrap();
        let c: Vec<f64> = d.cells().iter().map(|c| c.centroid[0]).collect();
        assert_eq!(c, vec![0.125, 0.375, 0.625, 0.875]);
        assert!(d.cells().iter().all(|c| c.measure == 0.25));
        assert_eq!(d.facets().len(), 2);
        assert_eq!(d.boundary_measure(), 2.0);
        assert_eq!(d.diameter(), 0.75);
        let d = Domain::interval(0.0, 2.0, 2).unwrap();
        assert!(d.cells().iter().all(|c| c.measure == 1.0));
        assert!(Domain::interval(1.0, 0.0, 4).is_err());
        assert!(Domain::interval(0.0, 1.0, 1).is_err());
    }

    #[test]
    fn rectangle_cells_and_facets() {
        let d = Domain::rectangle([0.0, 0.0], [1.0, 1.0], 8, 8).unwrap();
        assert_eq!(d.cells().len(), 64);
        assert!(d.cells().iter().all(|c| c.measure == 1.0 / 64.0));
        assert_eq!(d.facets().len(), 32);
        assert!(d.facets().iter().all(|f| f.measure == 0.125));
        assert!((d.boundary_measure() - 4.0).abs() <= 4.0 * 1e-12);
        assert!((d.volume() - 1.0).abs() <= 1e-12);
        assert!(d.diameter() <= d.exact_diameter());
        for f in d.facets() {
            let c = &d.cells()[f.cell];
            assert!((distance(&f.centroid, &c.centroid) - 1.0 / 16.0).abs() < 1e-15);
        }
        let d = Domain::rectangle([0.0, 0.0], [2.0, 1.0], 4, 2).unwrap();
        assert_eq!(d.cells().len(), 8);
        assert!(d.cells().iter().all(|c| c.measure == 0.25));
        assert!(Domain::rectangle([0.0, 0.0], [1.0, 1.0], 1, 1).is_err());
        assert!(Domain::rectangle([0.0, 1.0], [1.0, 1.0], 4, 4).is_err());
    }

    #[test]
    fn pair_counts() {
        let d = Domain::interval(0.0, 1.0, 4).unwrap();
        assert_eq!(PairQuadrature::new(&d, Scope::Interior).unwrap().len(), 12);
        let d = Domain::rectangle([0.0, 0.0], [1.0, 1.0], 8, 8).unwrap();
        let pq = PairQuadrature::new(&d, Scope::Interior).unwrap();
        assert_eq!(pq.len(), 4032);
        assert_eq!(pq.pairs().count(), 4032);
        assert!(pq.pairs().all(|(a, b)| a != b && pq.distance(a, b) > 0.0));
        assert_eq!(PairQuadrature::new(&d, Scope::Boundary).unwrap().len(), 992);
    }

    #[test]
    fn lattice_distance_matches_centroids() {
        let d = Domain::rectangle([0.0, 0.0], [2.0, 1.0], 5, 3).unwrap();
        let pq = PairQuadrature::new(&d, Scope::Interior).unwrap();
        for (a, b) in pq.pairs() {
            let direct = distance(pq.point(a), pq.point(b));
            assert!((pq.distance(a, b) - direct).abs() < 1e-14);
            assert_eq!(pq.distance(a, b).to_bits(), pq.distance(b, a).to_bits());
        }
    }

    #[test]
    fn pair_sum_of_weights() {
        let d = Domain::interval(0.0, 1.0, 10).unwrap();
        let pq = PairQuadrature::new(&d, Scope::Interior).unwrap();
        let total = pq.sum(|a, b| pq.weight(a, b));
        assert!((total - 0.9).abs() < 1e-14);
    }

    #[test]
    fn grid_function_trace_from_cells() {
        let d = Arc::new(Domain::rectangle([0.0, 0.0], [1.0, 1.0], 3, 3).unwrap());
        let u = GridFunction::from_interior(d.clone(), (0..9).map(f64::from).collect()).unwrap();
        for (f, v) in d.facets().iter().zip(u.boundary()) {
            assert_eq!(*v, f.cell as f64);
        }
        assert!(GridFunction::new(d.clone(), vec![0.0; 8], vec![0.0; 12]).is_err());
        assert!(GridFunction::new(d, vec![f64::NAN; 9], vec![0.0; 12]).is_err());
    }
}
