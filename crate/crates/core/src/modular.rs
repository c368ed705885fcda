//! Modulars and Luxemburg norms: variable-exponent Lebesgue norms, Gagliardo
//! seminorms on the domain or its boundary, and the combined norm.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exponents::ExponentField;
use crate::geometry::{ordered_sum, GridFunction, PairQuadrature, Scope};

const MAX_BRACKET_STEPS: usize = 200;
const MAX_BISECTIONS: usize = 200;
/// A few ulps: the upper end must sit within 1e-12 of the root even at lambda ~ 2.
const RELATIVE_WIDTH: f64 = 4.0 * f64::EPSILON;
const OVERFLOW_RATIO: f64 = 1e100;
/// Variable-exponent pair terms are cached when there are at most this many pairs.
const CACHE_LIMIT: usize = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Converged,
    ZeroFunction,
}

#[derive(Debug, Clone, Serialize)]
pub struct LuxemburgResult {
    pub lambda_star: f64,
    pub modular_at_lambda: f64,
    pub bracket: (f64, f64),
    pub iterations: usize,
    pub status: Status,
}

impl LuxemburgResult {
    fn zero() -> LuxemburgResult {
        LuxemburgResult {
            lambda_star: 0.0,
            modular_at_lambda: 0.0,
            bracket: (0.0, 0.0),
            iterations: 0,
            status: Status::ZeroFunction,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.status == Status::ZeroFunction
    }
}

#[inline]
fn powp(x: f64, p: f64) -> f64 {
    if p == 2.0 {
        x * x
    } else {
        x.powf(p)
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveLambda(lambda))
    }
}

/// Finds the root of `modular(lambda) = 1` for a continuous, strictly
/// decreasing modular: geometric bracketing from 1, then bisection down to a
/// few ulps. Returns the upper end, where the modular is <= 1.
pub fn luxemburg_root(modular: impl Fn(f64) -> f64) -> Result<LuxemburgResult> {
    let mut iterations = 0;
    let (mut lo, mut hi, mut m_hi);
    let m1 = modular(1.0);
    if m1 > 1.0 {
        lo = 1.0;
        hi = 2.0;
        loop {
            m_hi = modular(hi);
            iterations += 1;
            if m_hi <= 1.0 {
                break;
            }
            if iterations >= MAX_BRACKET_STEPS || !hi.is_finite() {
                return Err(Error::BracketFailure(iterations));
            }
            lo = hi;
            hi *= 2.0;
        }
    } else {
        hi = 1.0;
        m_hi = m1;
        lo = 0.5;
        loop {
            let m_lo = modular(lo);
            iterations += 1;
            if m_lo > 1.0 {
                break;
            }
            if iterations >= MAX_BRACKET_STEPS || lo == 0.0 {
                return Err(Error::BracketFailure(iterations));
            }
            hi = lo;
            m_hi = m_lo;
            lo *= 0.5;
        }
    }
    let bracket = (lo, hi);
    let mut steps = 0;
    while hi - lo > RELATIVE_WIDTH * hi && steps < MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let m = modular(mid);
        if m > 1.0 {
            lo = mid;
        } else {
            hi = mid;
            m_hi = m;
        }
        steps += 1;
    }
    Ok(LuxemburgResult {
        lambda_star: hi,
        modular_at_lambda: m_hi,
        bracket,
        iterations: iterations + steps,
        status: Status::Converged,
    })
}

/// `sum_k w_k (|f_k| / lambda)^{p_k}` over explicit nodes.
pub fn lebesgue_modular_nodes(values: &[f64], weights: &[f64], exps: &[f64], lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    let ln_lambda = lambda.ln();
    let mut acc = 0.0;
    for k in 0..values.len() {
        let a = values[k].abs();
        if a == 0.0 {
            continue;
        }
        let r = a / lambda;
        let term = if r > OVERFLOW_RATIO {
            (exps[k] * (a.ln() - ln_lambda)).exp()
        } else {
            powp(r, exps[k])
        };
        acc += weights[k] * term;
    }
    Ok(acc)
}

/// Luxemburg norm over explicit nodes with per-node exponents.
pub fn lebesgue_norm_nodes(values: &[f64], weights: &[f64], exps: &[f64]) -> Result<LuxemburgResult> {
    if values.len() != weights.len() || values.len() != exps.len() {
        return Err(Error::MeshInconsistency("node arrays have different lengths".into()));
    }
    if values.iter().zip(weights).all(|(v, w)| *v == 0.0 || *w == 0.0) {
        return Ok(LuxemburgResult::zero());
    }
    luxemburg_root(|l| lebesgue_modular_nodes(values, weights, exps, l).unwrap_or(f64::NAN))
}

fn node_exponents(f: &GridFunction, p: &ExponentField, scope: Scope) -> Result<Vec<f64>> {
    p.check_dimension(f.domain().dim())?;
    Ok(f.domain().points(scope).iter().map(|x| p.at(x)).collect())
}

pub fn modular_lebesgue(f: &GridFunction, p: &ExponentField, scope: Scope, lambda: f64) -> Result<f64> {
    let exps = node_exponents(f, p, scope)?;
    lebesgue_modular_nodes(f.values(scope), &f.domain().weights(scope), &exps, lambda)
}

/// `||f||_{L^{p(.)}}` over the cells (interior) or facets (boundary). A
/// bivariate `p` is read on its diagonal.
pub fn luxemburg_norm(f: &GridFunction, p: &ExponentField, scope: Scope) -> Result<LuxemburgResult> {
    let exps = node_exponents(f, p, scope)?;
    lebesgue_norm_nodes(f.values(scope), &f.domain().weights(scope), &exps)
}

/// An exponent that is either a constant or a field evaluated on node pairs.
#[derive(Debug, Clone, Copy)]
pub enum PairExponent<'a> {
    Constant(f64),
    Field(&'a ExponentField),
}

impl PairExponent<'_> {
    fn constant(&self) -> Option<f64> {
        match self {
            PairExponent::Constant(c) => Some(*c),
            PairExponent::Field(f) => f.constant_value(),
        }
    }

    fn at(&self, x: &[f64; 2], y: &[f64; 2]) -> f64 {
        match self {
            PairExponent::Constant(c) => *c,
            PairExponent::Field(f) => f.at_pair(x, y),
        }
    }
}

/// Pair integrand `|f(x)-f(y)|^P / (lambda^P |x-y|^{n + s P}) * |x-y|^damping`.
///
/// `damping >= 0` multiplies the singular kernel by a factor at most 1 when
/// `|x-y| < 1`; it realizes weighted pair measures.
#[derive(Debug, Clone, Copy)]
pub struct PairKernel<'a> {
    pub p: PairExponent<'a>,
    pub s: PairExponent<'a>,
    pub damping: f64,
}

impl<'a> PairKernel<'a> {
    pub fn new(p: &'a ExponentField, s: &'a ExponentField) -> PairKernel<'a> {
        PairKernel { p: PairExponent::Field(p), s: PairExponent::Field(s), damping: 0.0 }
    }

    pub fn constant(p: f64, s: f64) -> PairKernel<'static> {
        PairKernel { p: PairExponent::Constant(p), s: PairExponent::Constant(s), damping: 0.0 }
    }
}

/// Quadrature weight times kernel for one pair at distance `d`.
#[inline]
fn kernel_weight(w: f64, d: f64, n: f64, p: f64, s: f64, damping: f64) -> f64 {
    let k = w * d.powf(-(n + s * p));
    if damping != 0.0 {
        k * d.powf(damping)
    } else {
        k
    }
}

/// `ln` of the pair term at `lambda = 1`, or `None` when `f(x) = f(y)`.
#[inline]
fn ln_term(w: f64, d: f64, df: f64, n: f64, p: f64, s: f64, damping: f64) -> Option<f64> {
    if df == 0.0 {
        return None;
    }
    let ln_d = d.ln();
    let lc = w.ln() + p * df.ln() - (n + s * p) * ln_d;
    Some(if damping != 0.0 { lc + damping * ln_d } else { lc })
}

enum Strategy {
    Zero,
    /// Constant exponent: modular(lambda) = sum * (scale / lambda)^p.
    Homogeneous { sum: f64, scale: f64, p: f64 },
    /// Per-row `(ln coefficient, exponent)` lists.
    Cached { rows: Vec<Vec<(f64, f64)>> },
    Direct,
}

/// A Gagliardo-type modular prepared for repeated evaluation in `lambda`.
pub struct PairModular<'a> {
    values: Vec<f64>,
    pq: &'a PairQuadrature,
    kernel: PairKernel<'a>,
    strategy: Strategy,
}

impl<'a> PairModular<'a> {
    /// `values[a]` is the function value at local node `a` of `pq`.
    pub fn new(values: Vec<f64>, pq: &'a PairQuadrature, kernel: PairKernel<'a>) -> Result<PairModular<'a>> {
        if values.len() != pq.nodes() {
            return Err(Error::MeshInconsistency(format!(
                "{} values for {} quadrature nodes",
                values.len(),
                pq.nodes()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("function values must be finite".into()));
        }
        if !(kernel.damping >= 0.0) {
            return Err(Error::Parameter(format!("kernel damping must be nonnegative, got {}", kernel.damping)));
        }
        let mut this = PairModular { values, pq, kernel, strategy: Strategy::Direct };
        this.strategy = this.prepare();
        Ok(this)
    }

    fn prepare(&self) -> Strategy {
        let (mn, mx) = self.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        if self.pq.nodes() < 2 || mx == mn {
            return Strategy::Zero;
        }
        match (self.kernel.p.constant(), self.kernel.s.constant()) {
            (Some(p), Some(s)) => {
                let scale = mx - mn;
                let sum = self.homogeneous_sum(p, s, scale);
                Strategy::Homogeneous { sum, scale, p }
            }
            _ if self.pq.len() <= CACHE_LIMIT => {
                let m = self.pq.nodes();
                let rows = crate::geometry::ordered_map(m, |a| {
                    (0..m)
                        .filter(|&b| b != a)
                        .filter_map(|b| self.pair_ln_term(a, b))
                        .collect::<Vec<_>>()
                });
                Strategy::Cached { rows }
            }
            _ => Strategy::Direct,
        }
    }

    fn pair_ln_term(&self, a: usize, b: usize) -> Option<(f64, f64)> {
        let pq = self.pq;
        let (x, y) = (pq.point(a), pq.point(b));
        let p = self.kernel.p.at(x, y);
        let s = self.kernel.s.at(x, y);
        let df = (self.values[a] - self.values[b]).abs();
        ln_term(pq.weight(a, b), pq.distance(a, b), df, pq.dim() as f64, p, s, self.kernel.damping).map(|lc| (lc, p))
    }

    /// `sum w K |df / scale|^p` with kernels tabulated by lattice offset when possible.
    fn homogeneous_sum(&self, p: f64, s: f64, scale: f64) -> f64 {
        let pq = self.pq;
        let m = pq.nodes();
        let n = pq.dim() as f64;
        let damping = self.kernel.damping;
        let inv = 1.0 / scale;
        let v = &self.values;
        if let Some((nx, ny)) = pq.lattice_extent() {
            // uniform grid: every pair weight is the same
            let w = pq.weight(0, 1);
            let mut table = vec![0.0; nx * ny];
            for dj in 0..ny {
                for di in 0..nx {
                    if di + dj > 0 {
                        table[dj * nx + di] = kernel_weight(w, pq.offset_distance(di, dj), n, p, s, damping);
                    }
                }
            }
            let full = m == nx * ny && pq.members().iter().enumerate().all(|(k, &g)| k == g);
            if full {
                return ordered_sum(m, |a| {
                    let (ia, ja) = (a % nx, a / nx);
                    let va = v[a];
                    let mut acc = 0.0;
                    for jb in 0..ny {
                        let row = &table[ja.abs_diff(jb) * nx..];
                        let vb = &v[jb * nx..(jb + 1) * nx];
                        for ib in 0..nx {
                            if jb == ja && ib == ia {
                                continue;
                            }
                            let x = (va - vb[ib]).abs() * inv;
                            acc += powp(x, p) * row[ia.abs_diff(ib)];
                        }
                    }
                    acc
                });
            }
            return pq.sum(|a, b| {
                let (di, dj) = pq.lattice_offset(a, b).unwrap_or((0, 0));
                powp((v[a] - v[b]).abs() * inv, p) * table[dj * nx + di]
            });
        }
        pq.sum(|a, b| {
            let k = kernel_weight(pq.weight(a, b), pq.distance(a, b), n, p, s, damping);
            powp((v[a] - v[b]).abs() * inv, p) * k
        })
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.strategy, Strategy::Zero)
    }

    pub fn modular(&self, lambda: f64) -> Result<f64> {
        check_lambda(lambda)?;
        Ok(self.eval(lambda))
    }

    fn eval(&self, lambda: f64) -> f64 {
        let ln_lambda = lambda.ln();
        match &self.strategy {
            Strategy::Zero => 0.0,
            Strategy::Homogeneous { sum, scale, p } => {
                let r = scale / lambda;
                if r > OVERFLOW_RATIO || r < 1.0 / OVERFLOW_RATIO {
                    (sum.ln() + p * (scale.ln() - ln_lambda)).exp()
                } else {
                    sum * powp(r, *p)
                }
            }
            Strategy::Cached { rows } => ordered_sum(rows.len(), |a| {
                rows[a].iter().fold(0.0, |acc, &(lc, p)| acc + (lc - p * ln_lambda).exp())
            }),
            Strategy::Direct => {
                let m = self.pq.nodes();
                ordered_sum(m, |a| {
                    (0..m)
                        .filter(|&b| b != a)
                        .filter_map(|b| self.pair_ln_term(a, b))
                        .fold(0.0, |acc, (lc, p)| acc + (lc - p * ln_lambda).exp())
                })
            }
        }
    }

    pub fn luxemburg(&self) -> Result<LuxemburgResult> {
        if self.is_zero() {
            return Ok(LuxemburgResult::zero());
        }
        luxemburg_root(|l| self.eval(l))
    }
}

/// Values of `f` at the nodes of `pq`, in local order.
pub fn node_values(f: &GridFunction, pq: &PairQuadrature) -> Result<Vec<f64>> {
    let all = f.values(pq.scope());
    pq.members()
        .iter()
        .map(|&g| all.get(g).copied().ok_or_else(|| Error::MeshInconsistency(format!("node {g} out of range"))))
        .collect()
}

fn check_pair_fields(f: &GridFunction, fields: &[&ExponentField]) -> Result<()> {
    for field in fields {
        field.check_dimension(f.domain().dim())?;
    }
    Ok(())
}

pub fn modular_gagliardo(
    f: &GridFunction,
    p: &ExponentField,
    s: &ExponentField,
    pq: &PairQuadrature,
    lambda: f64,
) -> Result<f64> {
    check_pair_fields(f, &[p, s])?;
    PairModular::new(node_values(f, pq)?, pq, PairKernel::new(p, s))?.modular(lambda)
}

/// `[f]_{s,p(.,.)}` over the nodes of `pq`.
pub fn gagliardo_seminorm(
    f: &GridFunction,
    p: &ExponentField,
    s: &ExponentField,
    pq: &PairQuadrature,
) -> Result<LuxemburgResult> {
    check_pair_fields(f, &[p, s])?;
    PairModular::new(node_values(f, pq)?, pq, PairKernel::new(p, s))?.luxemburg()
}

/// `[f]_{t(.,.),q(.,.)}` on the boundary, with surface pair weights.
pub fn boundary_gagliardo_seminorm(
    f: &GridFunction,
    q: &ExponentField,
    t: &ExponentField,
    pq: &PairQuadrature,
) -> Result<LuxemburgResult> {
    if pq.scope() != Scope::Boundary {
        return Err(Error::Parameter("boundary seminorm needs a boundary pair quadrature".into()));
    }
    gagliardo_seminorm(f, q, t, pq)
}

#[derive(Debug, Clone, Serialize)]
pub struct FullNorm {
    pub value: f64,
    pub lebesgue: LuxemburgResult,
    pub seminorm: LuxemburgResult,
}

/// `||f||_{L^{pbar}} + [f]_{s,p}` with `pbar(x) = p(x, x)`.
pub fn full_norm(f: &GridFunction, p: &ExponentField, s: &ExponentField, pq: &PairQuadrature) -> Result<FullNorm> {
    let lebesgue = luxemburg_norm(f, p, pq.scope())?;
    let seminorm = gagliardo_seminorm(f, p, s, pq)?;
    Ok(FullNorm { value: lebesgue.lambda_star + seminorm.lambda_star, lebesgue, seminorm })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::exponents::Arity;
    use crate::geometry::Domain;

    fn field(src: &str, arity: Arity) -> ExponentField {
        ExponentField::parse(src, arity).unwrap()
    }

    #[test]
    fn lebesgue_examples() {
        let sq = Arc::new(Domain::rectangle([0.0, 0.0], [1.0, 1.0], 8, 8).unwrap());
        let one = GridFunction::from_fn(sq.clone(), |_| 1.0).unwrap();
        let p = field("2", Arity::Univariate);
        assert!((modular_lebesgue(&one, &p, Scope::Interior, 1.0).unwrap() - 1.0).abs() < 1e-14);
        let q = field("1.5", Arity::Boundary);
        assert!((modular_lebesgue(&one, &q, Scope::Boundary, 1.0).unwrap() - 4.0).abs() < 1e-14);
        assert!(modular_lebesgue(&one, &p, Scope::Interior, 0.0).is_err());

        let line = Arc::new(Domain::interval(0.0, 1.0, 256).unwrap());
        let x = GridFunction::from_fn(line.clone(), |x| x[0]).unwrap();
        assert!((modular_lebesgue(&x, &p, Scope::Interior, 1.0).unwrap() - 1.0 / 3.0).abs() < 1e-4);
        let r = luxemburg_norm(&x, &p, Scope::Interior).unwrap();
        assert!((r.lambda_star - 1.0 / 3f64.sqrt()).abs() < 1e-4);
        assert!((r.modular_at_lambda - 1.0).abs() <= 1e-10);
        assert!(r.bracket.0 <= r.lambda_star && r.lambda_star <= r.bracket.1);
    }

    #[test]
    fn unit_measure_constant() {
        let line = Arc::new(Domain::interval(0.0, 1.0, 64).unwrap());
        let two = GridFunction::from_fn(line, |_| 2.0).unwrap();
        for src in ["2", "2 + x", "1.5 + sin(3 * x)^2"] {
            let r = luxemburg_norm(&two, &field(src, Arity::Univariate), Scope::Interior).unwrap();
            assert!((r.lambda_star - 2.0).abs() <= 1e-12, "{src}: {}", r.lambda_star);
        }
    }

    #[test]
    fn zero_function() {
        let line = Arc::new(Domain::interval(0.0, 1.0, 8).unwrap());
        let z = GridFunction::zeros(line.clone());
        let r = luxemburg_norm(&z, &field("2", Arity::Univariate), Scope::Interior).unwrap();
        assert_eq!((r.lambda_star, r.status), (0.0, Status::ZeroFunction));
        let c = GridFunction::from_fn(line.clone(), |_| 3.0).unwrap();
        let pq = PairQuadrature::new(&line, Scope::Interior).unwrap();
        let p = field("2", Arity::Bivariate);
        let s = field("0.25", Arity::Bivariate);
        assert_eq!(modular_gagliardo(&c, &p, &s, &pq, 0.7).unwrap(), 0.0);
        assert!(gagliardo_seminorm(&c, &p, &s, &pq).unwrap().is_zero());
    }

    #[test]
    fn gagliardo_linear() {
        let line = Arc::new(Domain::interval(0.0, 1.0, 256).unwrap());
        let x = GridFunction::from_fn(line.clone(), |x| x[0]).unwrap();
        let pq = PairQuadrature::new(&line, Scope::Interior).unwrap();
        let p = field("2", Arity::Bivariate);
        let s = field("0.25", Arity::Bivariate);
        let m = modular_gagliardo(&x, &p, &s, &pq, 1.0).unwrap();
        assert!((m - 8.0 / 15.0).abs() < 2e-3, "{m}");
        let lam = m.sqrt();
        assert!((modular_gagliardo(&x, &p, &s, &pq, lam).unwrap() - 1.0).abs() < 1e-13);
        let r = gagliardo_seminorm(&x, &p, &s, &pq).unwrap();
        assert!((r.lambda_star - lam).abs() <= 1e-11 * lam);
    }

    #[test]
    fn strategies_agree() {
        // a variable field that happens to be constant exercises the cached path
        let sq = Arc::new(Domain::rectangle([0.0, 0.0], [1.0, 1.0], 6, 6).unwrap());
        let f = GridFunction::from_fn(sq.clone(), |x| (3.0 * x[0]).sin() + x[1] * x[1]).unwrap();
        let pq = PairQuadrature::new(&sq, Scope::Interior).unwrap();
        let pc = field("2.5", Arity::Bivariate);
        let pv = field("2.5 + 0 * x1", Arity::Bivariate);
        let s = field("0.4", Arity::Bivariate);
        for lambda in [0.3, 1.0, 7.0] {
            let a = modular_gagliardo(&f, &pc, &s, &pq, lambda).unwrap();
            let b = modular_gagliardo(&f, &pv, &s, &pq, lambda).unwrap();
            assert!((a - b).abs() <= 1e-12 * a, "{a} {b}");
        }
        let sub = PairQuadrature::restricted(&sq, Scope::Interior, vec![0, 1, 6, 7, 14]).unwrap();
        let a = PairModular::new(node_values(&f, &sub).unwrap(), &sub, PairKernel::new(&pc, &s)).unwrap();
        let b = PairModular::new(node_values(&f, &sub).unwrap(), &sub, PairKernel::new(&pv, &s)).unwrap();
        assert!((a.modular(1.0).unwrap() - b.modular(1.0).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn damping_never_increases_terms() {
        let sq = Arc::new(Domain::rectangle([0.0, 0.0], [0.5, 0.5], 5, 5).unwrap());
        let f = GridFunction::from_fn(sq.clone(), |x| x[0] - 2.0 * x[1] * x[0]).unwrap();
        let pq = PairQuadrature::new(&sq, Scope::Interior).unwrap();
        let p = field("2 + x1 * y2", Arity::Bivariate);
        let s = field("0.6", Arity::Bivariate);
        let plain = PairModular::new(node_values(&f, &pq).unwrap(), &pq, PairKernel::new(&p, &s)).unwrap();
        let mut k = PairKernel::new(&p, &s);
        k.damping = 0.3;
        let damped = PairModular::new(node_values(&f, &pq).unwrap(), &pq, k).unwrap();
        for lambda in [0.01, 0.2, 1.0, 3.0] {
            assert!(damped.modular(lambda).unwrap() <= plain.modular(lambda).unwrap());
        }
    }

    #[test]
    fn full_norm_sums_parts() {
        let sq = Arc::new(Domain::rectangle([0.0, 0.0], [1.0, 1.0], 8, 8).unwrap());
        let one = GridFunction::from_fn(sq.clone(), |_| 1.0).unwrap();
        let pq = PairQuadrature::new(&sq, Scope::Interior).unwrap();
        let n = full_norm(&one, &field("2", Arity::Bivariate), &field("0.5", Arity::Bivariate), &pq).unwrap();
        assert!((n.value - 1.0).abs() < 1e-12);
        assert!(n.seminorm.is_zero());
    }

    #[test]
    fn bracket_failure_on_overflow_scale() {
        assert!(matches!(luxemburg_root(|_| f64::INFINITY), Err(Error::BracketFailure(_))));
    }
}
