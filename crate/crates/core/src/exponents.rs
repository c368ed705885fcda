//! Variable exponent fields, critical trace exponents and the covering
//! certificate that freezes exponents on small boundary patches.
//!
//! Continuity of the exponents is only ever certified on samples: cell and
//! facet centroids, facet endpoints, and a refined sub-lattice controlled by a
//! refinement factor (default 2).

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::expr::{self, Definitions, Expr, Var};
use crate::geometry::{Domain, Point};

/// Where a field lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Arity {
    /// `f(x)` for `x` in the closed domain.
    Univariate,
    /// `f(x, y)` for pairs of points of the closed domain (or of its boundary).
    Bivariate,
    /// `f(x)` for `x` on the boundary.
    Boundary,
}

/// Which admissible range a field must satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    /// `p, q, r`: `1 < inf <= sup < inf`.
    Exponent,
    /// Exponents allowed to touch 1 (`1 <= inf`), as in Hölder's inequality.
    LebesgueExponent,
    /// Fractional orders `s, t`: `0 < inf <= sup < 1`.
    Order,
    /// Plain data: finite values.
    Data,
}

impl Role {
    fn name(self) -> &'static str {
        match self {
            Role::Exponent => "exponent",
            Role::LebesgueExponent => "lebesgue exponent",
            Role::Order => "order",
            Role::Data => "data",
        }
    }

    fn check(self, v: f64) -> Option<&'static str> {
        if !v.is_finite() {
            return Some("value is not finite");
        }
        match self {
            Role::Exponent if v <= 1.0 => Some("exponent must exceed 1"),
            Role::LebesgueExponent if v < 1.0 => Some("exponent must be at least 1"),
            Role::Order if v <= 0.0 || v >= 1.0 => Some("order must lie in (0, 1)"),
            _ => None,
        }
    }
}

/// A real number or `+inf`, kept as a distinct tag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    Infinite,
}

impl ExtReal {
    pub fn is_infinite(self) -> bool {
        matches!(self, ExtReal::Infinite)
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(v) => Some(v),
            ExtReal::Infinite => None,
        }
    }

    pub fn sub(self, v: f64) -> ExtReal {
        match self {
            ExtReal::Finite(a) => ExtReal::Finite(a - v),
            ExtReal::Infinite => ExtReal::Infinite,
        }
    }

    pub fn scale(self, c: f64) -> ExtReal {
        match self {
            ExtReal::Finite(a) => ExtReal::Finite(a * c),
            ExtReal::Infinite => ExtReal::Infinite,
        }
    }

    pub fn min(self, other: ExtReal) -> ExtReal {
        if self <= other {
            self
        } else {
            other
        }
    }
}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => a.partial_cmp(b),
            (ExtReal::Finite(_), ExtReal::Infinite) => Some(Ordering::Less),
            (ExtReal::Infinite, ExtReal::Finite(_)) => Some(Ordering::Greater),
            (ExtReal::Infinite, ExtReal::Infinite) => Some(Ordering::Equal),
        }
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Finite(v) => write!(f, "{v}"),
            ExtReal::Infinite => write!(f, "inf"),
        }
    }
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtReal::Finite(v) => serializer.serialize_f64(*v),
            ExtReal::Infinite => serializer.serialize_str("inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bounds {
    pub inf: f64,
    pub sup: f64,
}

#[derive(Debug, Clone)]
pub struct ExponentField {
    source: String,
    arity: Arity,
    expr: Expr,
    bounds: Option<Bounds>,
    symmetric: Option<bool>,
}

impl ExponentField {
    pub fn parse(source: &str, arity: Arity) -> Result<ExponentField> {
        ExponentField::parse_with(source, arity, &Definitions::new())
    }

    /// Parses with named univariate helpers that may be applied to `x` or `y`.
    pub fn parse_with(source: &str, arity: Arity, defs: &Definitions) -> Result<ExponentField> {
        let expr = expr::parse(source, arity == Arity::Bivariate, defs)?;
        Ok(ExponentField { source: source.to_string(), arity, expr, bounds: None, symmetric: None })
    }

    pub fn constant(value: f64, arity: Arity) -> ExponentField {
        ExponentField { source: format!("{value}"), arity, expr: Expr::Num(value), bounds: None, symmetric: None }
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn arity(&self) -> Arity {
        self.arity
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn constant_value(&self) -> Option<f64> {
        self.expr.constant_value()
    }

    /// Cached bounds, available after `validate_bounds`.
    pub fn bounds(&self) -> Option<Bounds> {
        self.bounds
    }

    /// Whether every sampled pair satisfied `f(x, y) == f(y, x)` (bivariate only).
    pub fn symmetric(&self) -> Option<bool> {
        self.symmetric
    }

    pub fn at(&self, x: &Point) -> f64 {
        self.expr.eval(x, x)
    }

    pub fn at_pair(&self, x: &Point, y: &Point) -> f64 {
        self.expr.eval(x, y)
    }

    /// `f(y, x)` as a new field.
    pub fn transposed(&self) -> ExponentField {
        ExponentField {
            source: format!("transpose({})", self.source),
            arity: self.arity,
            expr: self.expr.transposed(),
            bounds: self.bounds,
            symmetric: self.symmetric,
        }
    }

    pub fn check_dimension(&self, dim: usize) -> Result<()> {
        let mut bad = None;
        self.expr.any_var(&mut |v| {
            let name = match (v, dim) {
                (Var::X, 2) => Some("x"),
                (Var::Y, 2) => Some("y"),
                (Var::X2, 1) => Some("x2"),
                (Var::Y2, 1) => Some("y2"),
                _ => None,
            };
            if name.is_some() {
                bad = name;
            }
            name.is_some()
        });
        match bad {
            Some(name) => Err(Error::Dimension { name, dim }),
            None => Ok(()),
        }
    }

    /// Computes inf/sup over the domain's sample set, enforces the role's range
    /// and caches the result. Idempotent.
    pub fn validate_bounds(&mut self, domain: &Domain, role: Role, refinement: usize) -> Result<(f64, f64)> {
        self.check_dimension(domain.dim())?;
        let mut inf = f64::INFINITY;
        let mut sup = f64::NEG_INFINITY;
        let mut symmetric = true;
        let mut visit = |v: f64, at: &dyn Fn() -> Vec<f64>| -> Result<()> {
            if let Some(reason) = role.check(v) {
                return Err(Error::BoundViolation { role: role.name(), value: v, point: at(), reason });
            }
            inf = inf.min(v);
            sup = sup.max(v);
            Ok(())
        };
        if let Some(c) = self.constant_value() {
            let origin = domain.cells()[0].centroid;
            visit(c, &|| origin[..domain.dim()].to_vec())?;
        } else {
            match self.arity {
                Arity::Univariate => {
                    for x in domain_samples(domain, refinement) {
                        visit(self.at(&x), &|| x[..domain.dim()].to_vec())?;
                    }
                }
                Arity::Boundary => {
                    for x in boundary_samples(domain, refinement) {
                        visit(self.at(&x), &|| x[..domain.dim()].to_vec())?;
                    }
                }
                Arity::Bivariate => {
                    let nodes: Vec<Point> =
                        domain.cells().iter().map(|c| c.centroid).chain(domain.facets().iter().map(|f| f.centroid)).collect();
                    for x in &nodes {
                        for y in &nodes {
                            let v = self.at_pair(x, y);
                            let pair = || x[..domain.dim()].iter().chain(&y[..domain.dim()]).copied().collect();
                            visit(v, &pair)?;
                            if v != self.at_pair(y, x) {
                                symmetric = false;
                            }
                        }
                    }
                    for x in domain_samples(domain, refinement) {
                        visit(self.at(&x), &|| x[..domain.dim()].to_vec())?;
                    }
                }
            }
        }
        self.bounds = Some(Bounds { inf, sup });
        if self.arity == Arity::Bivariate {
            self.symmetric = Some(symmetric);
        }
        Ok((inf, sup))
    }
}

/// Points of the closed domain used to certify univariate fields: centroids of
/// every cell split `refinement` times per axis, cell centroids, facet
/// centroids and facet endpoints.
pub fn domain_samples(domain: &Domain, refinement: usize) -> Vec<Point> {
    let r = refinement.max(1);
    let dim = domain.dim();
    let mut out = Vec::new();
    for c in domain.cells() {
        out.push(c.centroid);
        let ry = if dim == 2 { r } else { 1 };
        for j in 0..ry {
            for i in 0..r {
                let fx = (i as f64 + 0.5) / r as f64;
                let fy = (j as f64 + 0.5) / ry as f64;
                out.push([c.lo[0] + fx * (c.hi[0] - c.lo[0]), c.lo[1] + fy * (c.hi[1] - c.lo[1])]);
            }
        }
    }
    out.extend(boundary_samples(domain, refinement));
    out
}

/// Boundary points: facet centroids, endpoints and `refinement - 1` interior
/// points per facet.
pub fn boundary_samples(domain: &Domain, refinement: usize) -> Vec<Point> {
    let r = refinement.max(1);
    let mut out = Vec::new();
    for f in domain.facets() {
        out.push(f.centroid);
        out.push(f.a);
        if f.a != f.b {
            out.push(f.b);
            for k in 1..r {
                let t = k as f64 / r as f64;
                out.push(lerp(&f.a, &f.b, t));
            }
        }
    }
    out
}

fn lerp(a: &Point, b: &Point, t: f64) -> Point {
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
}

/// `(n - 1) p / (n - s p)` when `n - s p > 0`, otherwise `+inf`.
pub fn critical_exponent(n: usize, p: f64, s: f64) -> ExtReal {
    let n = n as f64;
    let denom = n - s * p;
    if denom > 0.0 {
        ExtReal::Finite((n - 1.0) * p / denom)
    } else {
        ExtReal::Infinite
    }
}

/// Critical trace exponent at a boundary point, using the diagonals `p(x, x)`, `s(x, x)`.
pub fn critical_trace_exponent(p: &ExponentField, s: &ExponentField, n: usize, x: &Point) -> ExtReal {
    critical_exponent(n, p.at_pair(x, x), s.at_pair(x, x))
}

/// Uniform subcritical margin `k = min (p* - q)` over boundary samples.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Gap {
    pub k: ExtReal,
    /// Boundary sample where the minimum is attained.
    pub witness: Point,
}

pub fn subcritical_gap(
    p: &ExponentField,
    q: &ExponentField,
    s: &ExponentField,
    domain: &Domain,
    refinement: usize,
) -> Result<Gap> {
    for f in [p, q, s] {
        f.check_dimension(domain.dim())?;
    }
    let n = domain.dim();
    let mut best = Gap { k: ExtReal::Infinite, witness: domain.facets()[0].centroid };
    for x in boundary_samples(domain, refinement) {
        let p_star = critical_trace_exponent(p, s, n, &x);
        let qx = q.at(&x);
        let gap = p_star.sub(qx);
        if let ExtReal::Finite(g) = gap {
            if !(g > 0.0) {
                return Err(Error::NotSubcritical { point: x[..n].to_vec(), p_star, q: qx });
            }
        }
        if gap < best.k {
            best = Gap { k: gap, witness: x };
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy)]
pub struct CoveringOptions {
    pub refinement: usize,
    /// Initial patch diameter bound; must be below 1.
    pub epsilon: f64,
    /// Halvings allowed for each of epsilon and delta.
    pub max_retries: usize,
    /// Cap on sample lattice points per axis inside one patch.
    pub max_samples_per_axis: usize,
}

impl Default for CoveringOptions {
    fn default() -> Self {
        CoveringOptions { refinement: 2, epsilon: 0.5, max_retries: 6, max_samples_per_axis: 24 }
    }
}

/// A boundary patch: an axis-aligned box intersected with the closed domain.
#[derive(Debug, Clone, Serialize)]
pub struct Patch {
    pub lo: Point,
    pub hi: Point,
    pub diameter: f64,
    /// Cells whose centroids lie in the patch.
    pub cells: Vec<usize>,
    /// Facets whose centroids lie in the patch.
    pub facets: Vec<usize>,
    /// Frozen exponent, strictly below `inf p - delta` on the patch.
    pub p_i: f64,
    /// Frozen order, the infimum of `s` on the patch.
    pub s_i: f64,
    /// Auxiliary order `t < s_i` used by the seminorm-domination chain.
    pub t: f64,
    pub p_inf: f64,
    pub q_max: f64,
    pub critical_min: ExtReal,
    /// Margin `k/2` between every pair critical exponent and `q` on the patch.
    pub half_gap_ok: bool,
    /// Margin `k/3` between the frozen critical exponent and `q` on the patch.
    pub third_gap_ok: bool,
    /// Whether `s_i p_i > 1`; reported, not enforced.
    pub sp_above_one: bool,
}

impl Patch {
    pub fn contains(&self, x: &Point, dim: usize) -> bool {
        (0..dim).all(|k| x[k] >= self.lo[k] && x[k] <= self.hi[k])
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GapCertificate {
    pub gap_k: ExtReal,
    pub epsilon: f64,
    pub delta: f64,
    pub patches: Vec<Patch>,
    /// Number of epsilon/delta halvings performed.
    pub retries: usize,
}

impl GapCertificate {
    pub fn is_valid(&self) -> bool {
        self.patches.iter().all(|p| p.half_gap_ok && p.third_gap_ok) && self.epsilon < 1.0
    }
}

/// Checks the frozen-exponent margin `(n-1) p_i / (n - s_i p_i) >= k/3 + q`.
pub fn frozen_margin_holds(n: usize, p_i: f64, s_i: f64, k: ExtReal, q: f64) -> bool {
    critical_exponent(n, p_i, s_i) >= k.scale(1.0 / 3.0).sub(-q)
}

struct PatchSamples {
    pairs_points: Vec<Point>,
    boundary: Vec<Point>,
}

fn patch_samples(domain: &Domain, lo: &Point, hi: &Point, opts: &CoveringOptions) -> PatchSamples {
    let dim = domain.dim();
    let r = opts.refinement.max(1);
    let h = domain.cell_size();
    let mut pairs_points = Vec::new();
    let counts: Vec<usize> = (0..2)
        .map(|k| {
            if k >= dim {
                1
            } else {
                let cells = ((hi[k] - lo[k]) / h[k]).ceil().max(1.0) as usize;
                (cells * r).min(opts.max_samples_per_axis.max(1)) + 1
            }
        })
        .collect();
    for j in 0..counts[1] {
        for i in 0..counts[0] {
            let fx = if counts[0] > 1 { i as f64 / (counts[0] - 1) as f64 } else { 0.0 };
            let fy = if counts[1] > 1 { j as f64 / (counts[1] - 1) as f64 } else { 0.0 };
            pairs_points.push([lo[0] + fx * (hi[0] - lo[0]), lo[1] + fy * (hi[1] - lo[1])]);
        }
    }
    let inside = |x: &Point| (0..dim).all(|k| x[k] >= lo[k] && x[k] <= hi[k]);
    for c in domain.cells() {
        if inside(&c.centroid) {
            pairs_points.push(c.centroid);
        }
    }
    let mut boundary = Vec::new();
    for f in domain.facets() {
        if let Some((a, b)) = clip_segment(&f.a, &f.b, lo, hi, dim) {
            boundary.push(a);
            if a != b {
                boundary.push(b);
                for k in 1..r {
                    boundary.push(lerp(&a, &b, k as f64 / r as f64));
                }
            }
            if inside(&f.centroid) {
                boundary.push(f.centroid);
            }
        }
    }
    pairs_points.extend(boundary.iter().copied());
    PatchSamples { pairs_points, boundary }
}

/// Clips an axis-aligned segment to a closed box.
fn clip_segment(a: &Point, b: &Point, lo: &Point, hi: &Point, dim: usize) -> Option<(Point, Point)> {
    let mut ca = *a;
    let mut cb = *b;
    for k in 0..dim {
        let (mn, mx) = if ca[k] <= cb[k] { (ca[k], cb[k]) } else { (cb[k], ca[k]) };
        let nmn = mn.max(lo[k]);
        let nmx = mx.min(hi[k]);
        if nmn > nmx {
            return None;
        }
        if ca[k] <= cb[k] {
            ca[k] = nmn;
            cb[k] = nmx;
        } else {
            ca[k] = nmx;
            cb[k] = nmn;
        }
    }
    Some((ca, cb))
}

struct PatchGeometry {
    lo: Point,
    hi: Point,
    cells: Vec<usize>,
    facets: Vec<usize>,
    p_inf: f64,
    s_inf: f64,
    q_max: f64,
    critical_min: ExtReal,
}

fn build_patches(
    p: &ExponentField,
    q: &ExponentField,
    s: &ExponentField,
    domain: &Domain,
    epsilon: f64,
    opts: &CoveringOptions,
) -> Result<Vec<PatchGeometry>> {
    let dim = domain.dim();
    let side = 0.9 * epsilon / (dim as f64).sqrt();
    let (dlo, dhi) = domain.bounds();
    let mut boxes: Vec<(Point, Point)> = Vec::new();
    let in_box = |x: &Point, b: &(Point, Point)| (0..dim).all(|k| x[k] >= b.0[k] && x[k] <= b.1[k]);
    for f in domain.facets() {
        if boxes.iter().any(|b| in_box(&f.a, b) && in_box(&f.b, b)) {
            continue;
        }
        let mut lo = [0.0; 2];
        let mut hi = [0.0; 2];
        for k in 0..dim {
            lo[k] = (f.centroid[k] - side / 2.0).max(dlo[k]);
            hi[k] = (f.centroid[k] + side / 2.0).min(dhi[k]);
        }
        let b = (lo, hi);
        if !(in_box(&f.a, &b) && in_box(&f.b, &b)) {
            return Err(Error::Covering(format!(
                "patch side {side:e} is smaller than a boundary facet; refine the mesh or raise epsilon"
            )));
        }
        boxes.push(b);
    }
    let n = dim;
    let mut out = Vec::with_capacity(boxes.len());
    for (lo, hi) in boxes {
        let samples = patch_samples(domain, &lo, &hi, opts);
        let mut p_inf = f64::INFINITY;
        let mut s_inf = f64::INFINITY;
        let mut critical_min = ExtReal::Infinite;
        let constant = p.constant_value().zip(s.constant_value());
        match constant {
            Some((pc, sc)) => {
                p_inf = pc;
                s_inf = sc;
                critical_min = critical_exponent(n, pc, sc);
            }
            None => {
                for z in &samples.pairs_points {
                    for y in &samples.pairs_points {
                        let pv = p.at_pair(z, y);
                        let sv = s.at_pair(z, y);
                        p_inf = p_inf.min(pv);
                        s_inf = s_inf.min(sv);
                        critical_min = critical_min.min(critical_exponent(n, pv, sv));
                    }
                }
            }
        }
        let q_max = match q.constant_value() {
            Some(c) => c,
            None => samples.boundary.iter().map(|x| q.at(x)).fold(f64::NEG_INFINITY, f64::max),
        };
        let inside = |x: &Point| (0..dim).all(|k| x[k] >= lo[k] && x[k] <= hi[k]);
        let cells = (0..domain.cells().len()).filter(|&c| inside(&domain.cells()[c].centroid)).collect();
        let facets = (0..domain.facets().len()).filter(|&f| inside(&domain.facets()[f].centroid)).collect();
        out.push(PatchGeometry { lo, hi, cells, facets, p_inf, s_inf, q_max, critical_min });
    }
    Ok(out)
}

/// Covers the boundary with small patches on which `p` and `s` are frozen to
/// constants while preserving the subcritical gap `k` with margins `k/2`
/// (pairwise) and `k/3` (frozen).
///
/// `delta` starts at `min(0.1, (p_- - 1)/2)` and is halved when the frozen
/// margin fails; the patch size is halved when the pairwise margin fails.
pub fn covering_partition(
    p: &ExponentField,
    q: &ExponentField,
    s: &ExponentField,
    domain: &Domain,
    k: ExtReal,
    opts: &CoveringOptions,
) -> Result<GapCertificate> {
    if let ExtReal::Finite(kv) = k {
        if !(kv > 0.0) {
            return Err(Error::Parameter(format!("gap must be positive, got {kv}")));
        }
    }
    if !(opts.epsilon > 0.0 && opts.epsilon < 1.0) {
        return Err(Error::Parameter(format!("epsilon must lie in (0, 1), got {}", opts.epsilon)));
    }
    // the gap must actually hold; re-derive it so a stale k cannot slip through
    let gap = subcritical_gap(p, q, s, domain, opts.refinement)?;
    if gap.k < k {
        return Err(Error::Parameter(format!("requested gap {k} exceeds the sampled gap {}", gap.k)));
    }
    let n = domain.dim();
    let p_minus = match p.bounds() {
        Some(b) => b.inf,
        None => {
            let mut copy = p.clone();
            copy.validate_bounds(domain, Role::Exponent, opts.refinement)?.0
        }
    };
    let delta0 = 0.1f64.min((p_minus - 1.0) / 2.0);
    let mut epsilon = opts.epsilon;
    let mut retries = 0;
    loop {
        let geoms = build_patches(p, q, s, domain, epsilon, opts)?;
        let half_ok: Vec<bool> =
            geoms.iter().map(|g| g.critical_min.sub(g.q_max) >= k.scale(0.5)).collect();
        if half_ok.iter().all(|&b| b) {
            let mut delta = delta0;
            for _ in 0..=opts.max_retries {
                let frozen: Vec<(f64, bool)> = geoms
                    .iter()
                    .map(|g| {
                        let p_i = g.p_inf - 1.125 * delta;
                        let ok = p_i - 1.0 > delta && frozen_margin_holds(n, p_i, g.s_inf, k, g.q_max);
                        (p_i, ok)
                    })
                    .collect();
                if frozen.iter().all(|f| f.1) {
                    let patches = geoms
                        .into_iter()
                        .zip(frozen)
                        .map(|(g, (p_i, ok))| {
                            let diameter = distance_box(&g.lo, &g.hi, n);
                            Patch {
                                diameter,
                                p_i,
                                s_i: g.s_inf,
                                t: g.s_inf * (1.0 - delta),
                                p_inf: g.p_inf,
                                q_max: g.q_max,
                                critical_min: g.critical_min,
                                half_gap_ok: true,
                                third_gap_ok: ok,
                                sp_above_one: g.s_inf * p_i > 1.0,
                                lo: g.lo,
                                hi: g.hi,
                                cells: g.cells,
                                facets: g.facets,
                            }
                        })
                        .collect();
                    return Ok(GapCertificate { gap_k: k, epsilon, delta, patches, retries });
                }
                delta /= 2.0;
                retries += 1;
            }
        }
        if retries >= 2 * opts.max_retries + 1 || epsilon < 1e-12 {
            return Err(Error::Covering(format!(
                "margins k/2 and k/3 could not be met after {retries} retries (epsilon {epsilon:e})"
            )));
        }
        epsilon /= 2.0;
        retries += 1;
    }
}

fn distance_box(lo: &Point, hi: &Point, dim: usize) -> f64 {
    (0..dim).map(|k| (hi[k] - lo[k]).powi(2)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square(n: usize) -> Domain {
        Domain::rectangle([0.0, 0.0], [1.0, 1.0], n, n).unwrap()
    }

    #[test]
    fn parse_and_bounds() {
        let d = Domain::interval(0.0, 1.0, 8).unwrap();
        let mut p = ExponentField::parse("2", Arity::Univariate).unwrap();
        assert_eq!(p.validate_bounds(&d, Role::Exponent, 2).unwrap(), (2.0, 2.0));
        let mut p = ExponentField::parse("2 + x", Arity::Univariate).unwrap();
        assert_eq!(p.validate_bounds(&d, Role::Exponent, 2).unwrap(), (2.0, 3.0));
        assert_eq!(p.validate_bounds(&d, Role::Exponent, 2).unwrap(), (2.0, 3.0));
        let mut p = ExponentField::parse("0.5", Arity::Univariate).unwrap();
        let err = p.validate_bounds(&d, Role::Exponent, 2).unwrap_err();
        assert!(matches!(err, Error::BoundViolation { value, .. } if value == 0.5));
        let mut s = ExponentField::parse("1.5 - x", Arity::Univariate).unwrap();
        match s.validate_bounds(&d, Role::Order, 2).unwrap_err() {
            Error::BoundViolation { point, .. } => assert!(point[0] <= 0.5),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn dimension_checks() {
        let d2 = unit_square(4);
        let mut f = ExponentField::parse("2 + x", Arity::Univariate).unwrap();
        assert!(matches!(f.validate_bounds(&d2, Role::Exponent, 2), Err(Error::Dimension { .. })));
        let d1 = Domain::interval(0.0, 1.0, 4).unwrap();
        let mut f = ExponentField::parse("2 + x2", Arity::Univariate).unwrap();
        assert!(f.validate_bounds(&d1, Role::Exponent, 2).is_err());
        let mut f = ExponentField::parse("2 + x1", Arity::Univariate).unwrap();
        assert_eq!(f.validate_bounds(&d1, Role::Exponent, 1).unwrap(), (2.0, 3.0));
    }

    #[test]
    fn symmetric_extension_matches_diagonal() {
        let d = Domain::interval(0.0, 2.0, 16).unwrap();
        let mut defs = Definitions::new();
        defs.insert("p".into(), expr::parse("2 + x / 2", false, &defs).unwrap());
        let uni = ExponentField::parse_with("p(x)", Arity::Univariate, &defs).unwrap();
        let mut bi = ExponentField::parse_with("(p(x) + p(y)) / 2", Arity::Bivariate, &defs).unwrap();
        bi.validate_bounds(&d, Role::Exponent, 2).unwrap();
        assert_eq!(bi.symmetric(), Some(true));
        for x in domain_samples(&d, 2) {
            assert_eq!(bi.at_pair(&x, &x), uni.at(&x));
        }
        let mut asym = ExponentField::parse("2 + x", Arity::Bivariate).unwrap();
        asym.validate_bounds(&d, Role::Exponent, 2).unwrap();
        assert_eq!(asym.symmetric(), Some(false));
    }

    #[test]
    fn critical_exponents() {
        assert_eq!(critical_exponent(2, 2.0, 0.5), ExtReal::Finite(2.0));
        assert_eq!(critical_exponent(2, 3.0, 0.8), ExtReal::Infinite);
        assert_eq!(critical_exponent(3, 2.0, 0.5), ExtReal::Finite(2.0));
        assert_eq!(critical_exponent(2, 2.0, 1.0), ExtReal::Infinite);
        assert!(ExtReal::Infinite > ExtReal::Finite(1e300));
    }

    #[test]
    fn gap_examples() {
        let d = unit_square(8);
        let p = ExponentField::constant(2.0, Arity::Bivariate);
        let s = ExponentField::constant(0.5, Arity::Bivariate);
        let q = ExponentField::constant(1.5, Arity::Boundary);
        assert_eq!(subcritical_gap(&p, &q, &s, &d, 2).unwrap().k, ExtReal::Finite(0.5));
        let q = ExponentField::constant(3.0, Arity::Boundary);
        assert!(matches!(subcritical_gap(&p, &q, &s, &d, 2), Err(Error::NotSubcritical { .. })));
        let q = ExponentField::parse("1.2 + 0.5 * x1", Arity::Boundary).unwrap();
        let gap = subcritical_gap(&p, &q, &s, &d, 2).unwrap();
        let k = gap.k.finite().unwrap();
        assert!((k - 0.3).abs() < 1e-12);
        assert_eq!(gap.witness[0], 1.0);
    }

    #[test]
    fn frozen_margin_example() {
        // 1.9 / (2 - 0.95) = 1.8095 >= 0.5/3 + 1.5
        assert!(frozen_margin_holds(2, 1.9, 0.5, ExtReal::Finite(0.5), 1.5));
        assert!(!frozen_margin_holds(2, 1.5, 0.5, ExtReal::Finite(0.5), 1.5));
    }

    #[test]
    fn covering_constant_and_affine() {
        let d = unit_square(8);
        let mut p = ExponentField::constant(2.0, Arity::Bivariate);
        p.validate_bounds(&d, Role::Exponent, 2).unwrap();
        let s = ExponentField::constant(0.5, Arity::Bivariate);
        let q = ExponentField::constant(1.5, Arity::Boundary);
        let cert = covering_partition(&p, &q, &s, &d, ExtReal::Finite(0.5), &CoveringOptions::default()).unwrap();
        assert!(cert.is_valid());
        assert!(cert.patches.iter().all(|pt| pt.diameter < cert.epsilon && pt.p_i < 2.0 - cert.delta));
        for f in d.facets() {
            assert!(cert.patches.iter().any(|pt| pt.contains(&f.a, 2) && pt.contains(&f.b, 2)));
        }
        let q = ExponentField::parse("1.2 + 0.5 * x1", Arity::Boundary).unwrap();
        let cert = covering_partition(&p, &q, &s, &d, ExtReal::Finite(0.3), &CoveringOptions::default()).unwrap();
        assert!(cert.is_valid());
        assert!(cert.retries > 0);
        let q = ExponentField::constant(3.0, Arity::Boundary);
        assert!(covering_partition(&p, &q, &s, &d, ExtReal::Finite(0.5), &CoveringOptions::default()).is_err());
    }
}
