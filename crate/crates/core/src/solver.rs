//! Discrete nonlocal Neumann energy
//! `G(u) = sum K |u_a - u_b|^p / p + sum |c| |u|^pbar / pbar - sum |f| g u`
//! and its minimization.
//!
//! Unknowns are cell values; the trace on each facet is the value of the
//! adjacent cell. Gradients are Riesz representatives in the cell-mass inner
//! product `<u, v>_M = sum |c| u_c v_c`, so the residual does not shrink with
//! the mesh.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::{boundary_samples, critical_trace_exponent, Arity, ExponentField, ExtReal, Role};
use crate::geometry::{ordered_map, ordered_sum, Domain, GridFunction, PairQuadrature, Scope};
use crate::modular::full_norm;

const CACHE_LIMIT: usize = 1 << 23;

enum Pairs {
    /// Constant exponents on a full lattice: symmetric kernel by offset.
    Table { nx: usize, ny: usize, k: Vec<f64>, p: f64 },
    /// Per-row neighbour lists.
    Rows { start: Vec<usize>, col: Vec<u32>, k: Vec<f64>, p: Vec<f64> },
}

impl Pairs {
    #[inline]
    fn for_row(&self, a: usize, mut visit: impl FnMut(usize, f64, f64)) {
        match self {
            Pairs::Table { nx, ny, k, p } => {
                let (ia, ja) = (a % nx, a / nx);
                for jb in 0..*ny {
                    let row = &k[ja.abs_diff(jb) * nx..];
                    for ib in 0..*nx {
                        if ib == ia && jb == ja {
                            continue;
                        }
                        visit(jb * nx + ib, row[ia.abs_diff(ib)], *p);
                    }
                }
            }
            Pairs::Rows { start, col, k, p } => {
                for e in start[a]..start[a + 1] {
                    visit(col[e] as usize, k[e], p[e]);
                }
            }
        }
    }
}

/// `|z|^{p-2} z`, with value 0 at `z = 0`.
#[inline]
fn phi(z: f64, p: f64) -> f64 {
    if z == 0.0 {
        0.0
    } else if p == 2.0 {
        z
    } else {
        z.abs().powf(p - 1.0).copysign(z)
    }
}

#[inline]
fn pow_abs(z: f64, p: f64) -> f64 {
    if p == 2.0 {
        z * z
    } else {
        z.abs().powf(p)
    }
}

/// `|b|^p - |a|^p` without cancellation when `a` and `b` are close.
#[inline]
fn pow_diff(a: f64, b: f64, p: f64) -> f64 {
    if p == 2.0 {
        return (b - a) * (b + a);
    }
    if a == 0.0 || b == 0.0 || a.signum() != b.signum() {
        return pow_abs(b, p) - pow_abs(a, p);
    }
    let rel = (b - a) * a.signum() / a.abs();
    pow_abs(a, p) * (p * rel.ln_1p()).exp_m1()
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverOptions {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub accelerate: bool,
    /// Also require the residual not to grow when accepting a step.
    #[serde(default)]
    pub monotone_residual: bool,
}

fn default_tol() -> f64 {
    1e-8
}

fn default_max_iter() -> usize {
    5000
}

fn default_seed() -> u64 {
    42
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: default_tol(),
            max_iter: default_max_iter(),
            seed: default_seed(),
            accelerate: false,
            monotone_residual: false,
        }
    }
}

pub struct EnergyProblem {
    domain: Arc<Domain>,
    p: ExponentField,
    s: ExponentField,
    g: GridFunction,
    r: ExponentField,
    pairs: Pairs,
    mass: Vec<f64>,
    bulk_p: Vec<f64>,
    /// `sum |f| g_f` over the facets of each cell.
    load: Vec<f64>,
}

impl EnergyProblem {
    pub fn new(p: ExponentField, s: ExponentField, g: GridFunction, r: ExponentField) -> Result<EnergyProblem> {
        let domain = g.domain().clone();
        let mut p = p;
        let mut s = s;
        let mut r = r;
        p.validate_bounds(&domain, Role::Exponent, 2)?;
        s.validate_bounds(&domain, Role::Order, 2)?;
        r.validate_bounds(&domain, Role::Exponent, 2)?;
        if p.arity() == Arity::Bivariate && p.symmetric() != Some(true) {
            return Err(Error::Parameter("p must satisfy p(x, y) = p(y, x)".into()));
        }
        let n = domain.dim();
        // the critical exponent degenerates to 0 on the two endpoints of an interval
        let boundary = if n >= 2 { boundary_samples(&domain, 2) } else { Vec::new() };
        for x in boundary {
            let p_star = critical_trace_exponent(&p, &s, n, &x);
            let rx = r.at(&x);
            let conj = rx / (rx - 1.0);
            if let ExtReal::Finite(v) = p_star {
                if !(v > conj) {
                    return Err(Error::NotSubcritical { point: x[..n].to_vec(), p_star, q: conj });
                }
            }
        }
        let pq = PairQuadrature::new(&domain, Scope::Interior)?;
        let pairs = build_pairs(&pq, &p, &s)?;
        let cells = domain.cells();
        let mass: Vec<f64> = cells.iter().map(|c| c.measure).collect();
        let bulk_p: Vec<f64> = cells.iter().map(|c| p.at_pair(&c.centroid, &c.centroid)).collect();
        let mut load = vec![0.0; cells.len()];
        for (f, facet) in domain.facets().iter().enumerate() {
            load[facet.cell] += facet.measure * g.boundary()[f];
        }
        Ok(EnergyProblem { domain, p, s, g, r, pairs, mass, bulk_p, load })
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn p(&self) -> &ExponentField {
        &self.p
    }

    pub fn s(&self) -> &ExponentField {
        &self.s
    }

    pub fn g(&self) -> &GridFunction {
        &self.g
    }

    pub fn r(&self) -> &ExponentField {
        &self.r
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    /// Cell-mass inner product.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        self.mass.iter().zip(u).zip(v).fold(0.0, |acc, ((m, a), b)| acc + m * a * b)
    }

    fn check(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.len() {
            return Err(Error::MeshInconsistency(format!("{} values for {} cells", u.len(), self.len())));
        }
        Ok(())
    }

    pub fn energy_values(&self, u: &[f64]) -> Result<f64> {
        self.check(u)?;
        let pair = ordered_sum(u.len(), |a| {
            let ua = u[a];
            let mut acc = 0.0;
            self.pairs.for_row(a, |b, k, p| acc += k * pow_abs(ua - u[b], p) / p);
            acc
        });
        let mut bulk = 0.0;
        let mut boundary = 0.0;
        for c in 0..u.len() {
            bulk += self.mass[c] * pow_abs(u[c], self.bulk_p[c]) / self.bulk_p[c];
            boundary += self.load[c] * u[c];
        }
        Ok(0.5 * pair + bulk - boundary)
    }

    /// `sum |load_c u_c|`; with `|G|` it bounds the size of every energy term.
    fn load_magnitude(&self, u: &[f64]) -> f64 {
        self.load.iter().zip(u).map(|(l, v)| (l * v).abs()).sum()
    }

    /// `G(v) - G(u)`, evaluated term by term.
    pub fn energy_delta(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        self.check(u)?;
        self.check(v)?;
        let pair = ordered_sum(u.len(), |a| {
            let (ua, va) = (u[a], v[a]);
            let mut acc = 0.0;
            self.pairs.for_row(a, |b, k, p| acc += k * pow_diff(ua - u[b], va - v[b], p) / p);
            acc
        });
        let mut rest = 0.0;
        for c in 0..u.len() {
            rest += self.mass[c] * pow_diff(u[c], v[c], self.bulk_p[c]) / self.bulk_p[c];
            rest -= self.load[c] * (v[c] - u[c]);
        }
        Ok(0.5 * pair + rest)
    }

    /// Euclidean gradient `dG/du_c`.
    pub fn derivative_values(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check(u)?;
        Ok(ordered_map(u.len(), |a| {
            let ua = u[a];
            let mut acc = 0.0;
            self.pairs.for_row(a, |b, k, p| acc += k * phi(ua - u[b], p));
            acc + self.mass[a] * phi(ua, self.bulk_p[a]) - self.load[a]
        }))
    }

    /// Riesz representative of the derivative in the cell-mass inner product.
    pub fn gradient_values(&self, u: &[f64]) -> Result<Vec<f64>> {
        let mut d = self.derivative_values(u)?;
        for (v, m) in d.iter_mut().zip(&self.mass) {
            *v /= m;
        }
        Ok(d)
    }

    fn interior<'a>(&self, u: &'a GridFunction) -> Result<&'a [f64]> {
        if u.interior().len() != self.len() {
            return Err(Error::MeshInconsistency("function lives on a different mesh".into()));
        }
        Ok(u.interior())
    }

    pub fn function(&self, values: Vec<f64>) -> Result<GridFunction> {
        GridFunction::from_interior(self.domain.clone(), values)
    }
}

fn build_pairs(pq: &PairQuadrature, p: &ExponentField, s: &ExponentField) -> Result<Pairs> {
    let n = pq.dim() as f64;
    let m = pq.nodes();
    if let (Some(pc), Some(sc), Some((nx, ny))) = (p.constant_value(), s.constant_value(), pq.lattice_extent()) {
        let w = pq.weight(0, 1);
        let mut k = vec![0.0; nx * ny];
        for dj in 0..ny {
            for di in 0..nx {
                if di + dj > 0 {
                    k[dj * nx + di] = 2.0 * w * pq.offset_distance(di, dj).powf(-(n + sc * pc));
                }
            }
        }
        return Ok(Pairs::Table { nx, ny, k, p: pc });
    }
    if pq.len() > CACHE_LIMIT {
        return Err(Error::Parameter(format!(
            "{} pairs exceed the limit for variable exponents; use a coarser mesh",
            pq.len()
        )));
    }
    let rows: Vec<Vec<(u32, f64, f64)>> = ordered_map(m, |a| {
        let x = pq.point(a);
        (0..m)
            .filter(|&b| b != a)
            .map(|b| {
                let y = pq.point(b);
                let d = pq.distance(a, b);
                let pv = p.at_pair(x, y);
                let kab = pq.weight(a, b) * d.powf(-(n + s.at_pair(x, y) * pv));
                let kba = pq.weight(b, a) * d.powf(-(n + s.at_pair(y, x) * pv));
                (b as u32, kab + kba, pv)
            })
            .collect()
    });
    let mut start = Vec::with_capacity(m + 1);
    let (mut col, mut k, mut pv) = (Vec::new(), Vec::new(), Vec::new());
    start.push(0);
    for row in rows {
        for (b, kk, pp) in row {
            col.push(b);
            k.push(kk);
            pv.push(pp);
        }
        start.push(col.len());
    }
    Ok(Pairs::Rows { start, col, k, p: pv })
}

pub fn energy(u: &GridFunction, prob: &EnergyProblem) -> Result<f64> {
    prob.energy_values(prob.interior(u)?)
}

/// Riesz gradient as a grid function (facets carry their cell's value).
pub fn gradient(u: &GridFunction, prob: &EnergyProblem) -> Result<GridFunction> {
    let g = prob.gradient_values(prob.interior(u)?)?;
    prob.function(g)
}

pub fn el_residual(u: &GridFunction, prob: &EnergyProblem) -> Result<f64> {
    Ok(sup_norm(&prob.gradient_values(prob.interior(u)?)?))
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverStatus {
    Converged,
    Nonconverged,
}

#[derive(Debug, Clone, Serialize)]
pub struct HistoryEntry {
    pub iteration: usize,
    pub energy: f64,
    pub gradient_norm: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverReport {
    /// Cell values of the minimizer.
    pub minimizer: Vec<f64>,
    pub energy: f64,
    pub el_residual: f64,
    pub iterations: usize,
    pub history: Vec<HistoryEntry>,
    pub status: SolverStatus,
}

/// Deterministic random start with values in `[-1, 1]`.
pub fn random_start(prob: &EnergyProblem, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..prob.len()).map(|_| rng.gen_range(-1.0..=1.0)).collect()
}

pub fn minimize(prob: &EnergyProblem, opts: &SolverOptions) -> Result<SolverReport> {
    minimize_from(prob, opts, vec![0.0; prob.len()])
}

const LBFGS_MEMORY: usize = 8;
const MAX_SHRINKS: usize = 80;
/// Relative size below which energy differences are treated as rounding noise.
const ROUNDING_FLOOR: f64 = 1e-9;

/// Descent from `u0` with backtracking (Armijo 0.5, shrink 0.5); limited-memory
/// quasi-Newton directions when `opts.accelerate` is set.
pub fn minimize_from(prob: &EnergyProblem, opts: &SolverOptions, u0: Vec<f64>) -> Result<SolverReport> {
    prob.check(&u0)?;
    if !(opts.tol > 0.0) {
        return Err(Error::Parameter(format!("tolerance must be positive, got {}", opts.tol)));
    }
    let armijo = if opts.accelerate { 1e-4 } else { 0.5 };
    let mut u = u0;
    let mut gr = prob.gradient_values(&u)?;
    let mut res = sup_norm(&gr);
    let mut g_track = prob.energy_values(&u)?;
    let mut history = vec![HistoryEntry { iteration: 0, energy: g_track, gradient_norm: res }];
    let mut memory: Vec<(Vec<f64>, Vec<f64>, f64)> = Vec::new();
    let mut step: f64 = 1.0;
    let mut iterations = 0;
    while res > opts.tol && iterations < opts.max_iter {
        iterations += 1;
        let mut dir = if opts.accelerate { lbfgs_direction(prob, &gr, &memory) } else { neg(&gr) };
        let mut slope = prob.inner(&gr, &dir);
        if !(slope < 0.0) {
            memory.clear();
            dir = neg(&gr);
            slope = prob.inner(&gr, &dir);
        }
        let alpha0 = if opts.accelerate { 1.0 } else { (2.0 * step).min(1e12) };
        let scale = g_track.abs() + 2.0 * prob.load_magnitude(&u);
        let mut found = line_search(prob, &u, &dir, slope, alpha0, armijo, opts.monotone_residual.then_some(res), scale)?;
        if found.is_none() && !memory.is_empty() {
            // quasi-Newton direction rejected; fall back to steepest descent
            memory.clear();
            dir = neg(&gr);
            slope = prob.inner(&gr, &dir);
            found = line_search(prob, &u, &dir, slope, 1.0, armijo, opts.monotone_residual.then_some(res), scale)?;
        }
        let Some(Step { v, dg, gr_new, alpha }) = found else {
            return Err(Error::LineSearch(iterations));
        };
        step = alpha;
        if opts.accelerate {
            let sv: Vec<f64> = v.iter().zip(&u).map(|(a, b)| a - b).collect();
            let yv: Vec<f64> = gr_new.iter().zip(&gr).map(|(a, b)| a - b).collect();
            let sy = prob.inner(&sv, &yv);
            if sy > 1e-300 {
                if memory.len() == LBFGS_MEMORY {
                    memory.remove(0);
                }
                memory.push((sv, yv, sy));
            }
        }
        u = v;
        gr = gr_new;
        res = sup_norm(&gr);
        g_track += dg;
        history.push(HistoryEntry { iteration: iterations, energy: g_track, gradient_norm: res });
    }
    let status = if res <= opts.tol { SolverStatus::Converged } else { SolverStatus::Nonconverged };
    let energy = prob.energy_values(&u)?;
    Ok(SolverReport { minimizer: u, energy, el_residual: res, iterations, history, status })
}

struct Step {
    v: Vec<f64>,
    dg: f64,
    gr_new: Vec<f64>,
    alpha: f64,
}

/// Backtracking until `G(u + alpha d) - G(u) <= c alpha slope` and, when
/// `residual_cap` is given, the new residual does not exceed it.
///
/// Near the minimizer the energy difference drowns in rounding. There the
/// convexity bound `G(v) - G(u) <= alpha <G'(v), d>` certifies the decrease
/// from gradients alone.
fn line_search(
    prob: &EnergyProblem,
    u: &[f64],
    dir: &[f64],
    slope: f64,
    alpha0: f64,
    armijo: f64,
    residual_cap: Option<f64>,
    energy_scale: f64,
) -> Result<Option<Step>> {
    let mut alpha = alpha0;
    for _ in 0..MAX_SHRINKS {
        let v: Vec<f64> = u.iter().zip(dir).map(|(a, d)| a + alpha * d).collect();
        let mut dg = prob.energy_delta(u, &v)?;
        let target = armijo * alpha * slope;
        let mut gr_new = None;
        if dg > target && dg.abs() <= ROUNDING_FLOOR * energy_scale {
            let gr = prob.gradient_values(&v)?;
            let bound = alpha * prob.inner(&gr, dir);
            if bound <= target {
                dg = dg.min(bound);
            }
            gr_new = Some(gr);
        }
        if dg <= target {
            let gr_new = match gr_new {
                Some(g) => g,
                None => prob.gradient_values(&v)?,
            };
            if residual_cap.map_or(true, |cap| sup_norm(&gr_new) <= cap) {
                return Ok(Some(Step { v, dg, gr_new, alpha }));
            }
        }
        alpha *= 0.5;
    }
    Ok(None)
}

fn neg(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| -x).collect()
}

fn lbfgs_direction(prob: &EnergyProblem, gr: &[f64], memory: &[(Vec<f64>, Vec<f64>, f64)]) -> Vec<f64> {
    let mut q = gr.to_vec();
    let mut alphas = Vec::with_capacity(memory.len());
    for (s, y, sy) in memory.iter().rev() {
        let a = prob.inner(s, &q) / sy;
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((_, y, sy)) = memory.last() {
        let gamma = sy / prob.inner(y, y);
        for qi in q.iter_mut() {
            *qi *= gamma;
        }
    }
    for ((s, y, sy), a) in memory.iter().zip(alphas.iter().rev()) {
        let b = prob.inner(y, &q) / sy;
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    neg(&q)
}

#[derive(Debug, Clone, Serialize)]
pub struct CoercivityRow {
    pub tau: f64,
    pub energy: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoercivityReport {
    pub rows: Vec<CoercivityRow>,
    /// `None` for a single scale.
    pub increasing: Option<bool>,
}

/// `G(tau u) / ||tau u||_{s,p}` along a ray.
pub fn coercivity_probe(u: &GridFunction, prob: &EnergyProblem, scales: &[f64]) -> Result<CoercivityReport> {
    let values = prob.interior(u)?;
    if values.iter().all(|v| *v == 0.0) {
        return Err(Error::ZeroFunction);
    }
    let pq = PairQuadrature::new(&prob.domain, Scope::Interior)?;
    let base = prob.function(values.to_vec())?;
    let mut rows = Vec::with_capacity(scales.len());
    for &tau in scales {
        let scaled: Vec<f64> = values.iter().map(|v| tau * v).collect();
        let g = prob.energy_values(&scaled)?;
        let norm = full_norm(&base.scaled(tau), &prob.p, &prob.s, &pq)?.value;
        rows.push(CoercivityRow { tau, energy: g, ratio: g / norm });
    }
    let increasing = (rows.len() > 1).then(|| rows.windows(2).all(|w| w[1].ratio > w[0].ratio));
    Ok(CoercivityReport { rows, increasing })
}

/// `G(u)/2 + G(v)/2 - G((u + v)/2)`, positive by strict convexity.
pub fn midpoint_gap(prob: &EnergyProblem, u: &[f64], v: &[f64]) -> Result<f64> {
    let mid: Vec<f64> = u.iter().zip(v).map(|(a, b)| 0.5 * (a + b)).collect();
    // both halves as accurate differences from the midpoint
    let du = prob.energy_delta(&mid, u)?;
    let dv = prob.energy_delta(&mid, v)?;
    Ok(0.5 * (du + dv))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn problem(n: usize, p: &str, s: &str, g: f64) -> EnergyProblem {
        let d = Arc::new(Domain::rectangle([0.0, 0.0], [1.0, 1.0], n, n).unwrap());
        let g = GridFunction::from_fn(d, |_| g).unwrap();
        EnergyProblem::new(
            ExponentField::parse(p, Arity::Bivariate).unwrap(),
            ExponentField::parse(s, Arity::Bivariate).unwrap(),
            g,
            ExponentField::parse("5", Arity::Boundary).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn energy_examples() {
        let prob = problem(8, "2", "0.25", 1.0);
        assert_eq!(prob.energy_values(&vec![0.0; 64]).unwrap(), 0.0);
        let prob = problem(8, "2", "0.25", 0.0);
        let e = prob.energy_values(&vec![3.0; 64]).unwrap();
        assert!((e - 4.5).abs() < 1e-12);
        let d = Arc::new(Domain::interval(0.0, 1.0, 256).unwrap());
        let prob = EnergyProblem::new(
            ExponentField::parse("2", Arity::Bivariate).unwrap(),
            ExponentField::parse("0.25", Arity::Bivariate).unwrap(),
            GridFunction::zeros(d.clone()),
            ExponentField::parse("5", Arity::Boundary).unwrap(),
        )
        .unwrap();
        let u: Vec<f64> = d.cells().iter().map(|c| c.centroid[0]).collect();
        let e = prob.energy_values(&u).unwrap();
        assert!((e - (4.0 / 15.0 + 1.0 / 6.0)).abs() < 2e-3, "{e}");
    }

    #[test]
    fn pow_diff_matches_direct() {
        for (a, b, p) in [(0.3, 0.31, 2.5), (-1.2, -1.1, 1.7), (0.5, -0.5, 2.2), (0.0, 0.4, 1.6), (2.0, 2.0, 3.0)] {
            let direct = pow_abs(b, p) - pow_abs(a, p);
            assert!((pow_diff(a, b, p) - direct).abs() <= 1e-14 * (1.0 + direct.abs()));
        }
    }

    #[test]
    fn zero_data_gives_zero_minimizer() {
        let prob = problem(6, "2.3", "0.3", 0.0);
        let rep = minimize(&prob, &SolverOptions::default()).unwrap();
        assert_eq!(rep.status, SolverStatus::Converged);
        assert_eq!(rep.energy, 0.0);
        assert!(rep.minimizer.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn residual_of_zero_is_load() {
        let prob = problem(4, "2", "0.25", 2.0);
        let u = GridFunction::zeros(prob.domain().clone());
        let r = el_residual(&u, &prob).unwrap();
        // corner cells touch two facets of length 1/4 and have mass 1/16
        assert!((r - 2.0 * 2.0 * 0.25 / 0.0625).abs() < 1e-12);
    }

    #[test]
    fn rejects_asymmetric_or_supercritical() {
        let d = Arc::new(Domain::rectangle([0.0, 0.0], [1.0, 1.0], 4, 4).unwrap());
        let g = GridFunction::zeros(d);
        let bi = |s: &str| ExponentField::parse(s, Arity::Bivariate).unwrap();
        let five = ExponentField::parse("5", Arity::Boundary).unwrap();
        assert!(EnergyProblem::new(bi("2 + x1"), bi("0.25"), g.clone(), five.clone()).is_err());
        let r = ExponentField::parse("1.5", Arity::Boundary).unwrap();
        assert!(matches!(EnergyProblem::new(bi("2"), bi("0.25"), g, r), Err(Error::NotSubcritical { .. })));
    }

    #[test]
    fn coercivity_single_scale() {
        let prob = problem(4, "2", "0.25", 0.0);
        let u = GridFunction::from_interior(prob.domain().clone(), vec![1.0; 16]).unwrap();
        let rep = coercivity_probe(&u, &prob, &[1.0]).unwrap();
        assert_eq!(rep.rows.len(), 1);
        assert_eq!(rep.increasing, None);
        let rep = coercivity_probe(&u, &prob, &[1.0, 2.0, 4.0, 8.0]).unwrap();
        assert_eq!(rep.increasing, Some(true));
        assert!((rep.rows[3].ratio / rep.rows[0].ratio - 8.0).abs() < 1e-9);
    }
}
