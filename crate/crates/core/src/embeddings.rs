//! Empirical checks of the embedding and trace inequalities: Hölder, the
//! fractional-to-fractional embedding, trace ratios, the concentration sweep
//! and the patchwise seminorm-domination chain.

use std::fmt;
use std::sync::Arc;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::exponents::{
    boundary_samples, domain_samples, subcritical_gap, Arity, ExponentField, ExtReal, GapCertificate, Role,
};
use crate::geometry::{Domain, GridFunction, PairQuadrature, Point, Scope};
use crate::modular::{
    full_norm, gagliardo_seminorm, lebesgue_modular_nodes, lebesgue_norm_nodes, luxemburg_norm, node_values,
    LuxemburgResult, PairKernel, PairModular,
};

/// A quotient that is undefined when its denominator vanishes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ratio {
    Defined(f64),
    Undefined,
}

impl Ratio {
    pub fn of(num: f64, den: f64) -> Ratio {
        if den == 0.0 {
            Ratio::Undefined
        } else {
            Ratio::Defined(num / den)
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            Ratio::Defined(v) => Some(v),
            Ratio::Undefined => None,
        }
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ratio::Defined(v) => write!(f, "{v:.16e}"),
            Ratio::Undefined => write!(f, "undefined"),
        }
    }
}

impl Serialize for Ratio {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Ratio::Defined(v) => serializer.serialize_f64(*v),
            Ratio::Undefined => serializer.serialize_str("undefined"),
        }
    }
}

fn sample_points(domain: &Domain, scope: Scope) -> Vec<Point> {
    match scope {
        Scope::Interior => domain_samples(domain, 2),
        Scope::Boundary => boundary_samples(domain, 2),
    }
}

fn same_mesh(a: &Domain, b: &Domain) -> bool {
    a.dim() == b.dim() && a.resolution() == b.resolution() && a.bounds() == b.bounds()
}

fn validated(field: &ExponentField, domain: &Domain, role: Role) -> Result<ExponentField> {
    let mut f = field.clone();
    f.validate_bounds(domain, role, 2)?;
    Ok(f)
}

#[derive(Debug, Clone, Serialize)]
pub struct HolderReport {
    /// `||f g||_{r(.)}`
    pub lhs: f64,
    /// `||f||_{p(.)} ||g||_{q(.)}`
    pub rhs_product: f64,
    pub ratio: Ratio,
    pub conjugacy_residual: f64,
}

/// Worst `|1/r - 1/p - 1/q|` over the samples; fails above 1e-12.
pub fn check_conjugacy(p: &ExponentField, q: &ExponentField, r: &ExponentField, points: &[Point], dim: usize) -> Result<f64> {
    let mut worst = 0.0f64;
    let mut at = points[0];
    for x in points {
        let res = (1.0 / r.at(x) - 1.0 / p.at(x) - 1.0 / q.at(x)).abs();
        if !(res <= worst) {
            worst = res;
            at = *x;
        }
    }
    if !(worst <= 1e-12) {
        return Err(Error::Conjugacy { point: at[..dim].to_vec(), residual: worst });
    }
    Ok(worst)
}

pub fn holder_check(
    f: &GridFunction,
    g: &GridFunction,
    p: &ExponentField,
    q: &ExponentField,
    r: &ExponentField,
    scope: Scope,
) -> Result<HolderReport> {
    let domain = f.domain();
    if !Arc::ptr_eq(domain, g.domain()) && !same_mesh(domain, g.domain()) {
        return Err(Error::MeshInconsistency("f and g live on different domains".into()));
    }
    let p = validated(p, domain, Role::Exponent)?;
    let q = validated(q, domain, Role::Exponent)?;
    let r = validated(r, domain, Role::LebesgueExponent)?;
    let residual = check_conjugacy(&p, &q, &r, &sample_points(domain, scope), domain.dim())?;
    let fg: Vec<f64> = f.values(scope).iter().zip(g.values(scope)).map(|(a, b)| a * b).collect();
    let points = domain.points(scope);
    let weights = domain.weights(scope);
    let r_exps: Vec<f64> = points.iter().map(|x| r.at(x)).collect();
    let lhs = lebesgue_norm_nodes(&fg, &weights, &r_exps)?.lambda_star;
    let nf = luxemburg_norm(f, &p, scope)?.lambda_star;
    let ng = luxemburg_norm(g, &q, scope)?.lambda_star;
    let rhs_product = nf * ng;
    Ok(HolderReport { lhs, rhs_product, ratio: Ratio::of(lhs, rhs_product), conjugacy_residual: residual })
}

#[derive(Debug, Clone, Serialize)]
pub struct EmbeddingReport {
    /// `||f||_{L^r} / ||f||_{L^{pbar}}`
    pub lebesgue_ratio: Ratio,
    /// `[f]_{t,r} / [f]_{s,p}`
    pub seminorm_ratio: Ratio,
    /// Discrete `sum w |x-y|^{(s-t) r p / (p - r) - n}`.
    pub kernel_bound: f64,
    pub zero_function: bool,
}

/// Discrete value of the kernel integral whose finiteness drives the embedding
/// into `W^{t,r}`.
pub fn embedding_kernel(pq: &PairQuadrature, p: &ExponentField, s: &ExponentField, t: f64, r: f64) -> f64 {
    let n = pq.dim() as f64;
    pq.sum(|a, b| {
        let (x, y) = (pq.point(a), pq.point(b));
        let pv = p.at_pair(x, y);
        let e = (s.at_pair(x, y) - t) * r * pv / (pv - r) - n;
        pq.weight(a, b) * pq.distance(a, b).powf(e)
    })
}

pub fn embedding_check(
    f: &GridFunction,
    p: &ExponentField,
    s: &ExponentField,
    t: f64,
    r: f64,
    pq: &PairQuadrature,
) -> Result<EmbeddingReport> {
    let domain = f.domain();
    let p = validated(p, domain, Role::Exponent)?;
    let s = validated(s, domain, Role::Order)?;
    let (p_minus, s_minus) = (p.bounds().unwrap().inf, s.bounds().unwrap().inf);
    if !(t > 0.0 && t < s_minus) {
        return Err(Error::Parameter(format!("t = {t} must lie in (0, {s_minus})")));
    }
    if !(r > 1.0 && r < p_minus) {
        return Err(Error::Parameter(format!("r = {r} must lie in (1, {p_minus})")));
    }
    let scope = pq.scope();
    let r_field = ExponentField::constant(r, Arity::Bivariate);
    let t_field = ExponentField::constant(t, Arity::Bivariate);
    let lr = luxemburg_norm(f, &r_field, scope)?.lambda_star;
    let lp = luxemburg_norm(f, &p, scope)?.lambda_star;
    let sr = gagliardo_seminorm(f, &r_field, &t_field, pq)?.lambda_star;
    let sp = gagliardo_seminorm(f, &p, &s, pq)?.lambda_star;
    Ok(EmbeddingReport {
        lebesgue_ratio: Ratio::of(lr, lp),
        seminorm_ratio: Ratio::of(sr, sp),
        kernel_bound: embedding_kernel(pq, &p, &s, t, r),
        zero_function: sp == 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportStatus {
    Ok,
    ZeroFunction,
    Rejected,
    Skipped,
}

impl fmt::Display for ReportStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReportStatus::Ok => "ok",
            ReportStatus::ZeroFunction => "zero-function",
            ReportStatus::Rejected => "rejected",
            ReportStatus::Skipped => "skipped",
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceReport {
    pub boundary_norm: f64,
    pub full_norm: f64,
    pub ratio: Ratio,
    pub subcritical: bool,
    pub gap_k: Option<ExtReal>,
    pub status: ReportStatus,
}

/// `||f||_{L^{q(.)}(boundary)}` against `||f||_{s,p(.,.)}` on the domain.
pub fn trace_check(
    f: &GridFunction,
    p: &ExponentField,
    q: &ExponentField,
    s: &ExponentField,
    pq: &PairQuadrature,
) -> Result<TraceReport> {
    if pq.scope() != Scope::Interior {
        return Err(Error::Parameter("trace check needs an interior pair quadrature".into()));
    }
    let domain = f.domain();
    let gap = match subcritical_gap(p, q, s, domain, 2) {
        Ok(g) => Some(g.k),
        Err(Error::NotSubcritical { .. }) => None,
        Err(e) => return Err(e),
    };
    let boundary = luxemburg_norm(f, q, Scope::Boundary)?;
    let full = full_norm(f, p, s, pq)?;
    let status = if boundary.is_zero() && full.value == 0.0 { ReportStatus::ZeroFunction } else { ReportStatus::Ok };
    if full.value == 0.0 && !boundary.is_zero() {
        return Err(Error::MeshInconsistency("boundary values are nonzero while the full norm vanishes".into()));
    }
    Ok(TraceReport {
        boundary_norm: boundary.lambda_star,
        full_norm: full.value,
        ratio: Ratio::of(boundary.lambda_star, full.value),
        subcritical: gap.is_some(),
        gap_k: gap,
        status,
    })
}

/// Profile of a concentration family.
#[derive(Debug, Clone)]
pub enum Profile {
    /// `exp(1 / (|xi|^2 - 1))` inside the unit ball, 0 outside.
    Mollifier,
    /// A univariate field in the scaled variable.
    Field(ExponentField),
}

impl Profile {
    pub fn eval(&self, xi: &Point, dim: usize) -> f64 {
        match self {
            Profile::Mollifier => {
                let r2: f64 = xi[..dim].iter().map(|v| v * v).sum();
                if r2 < 1.0 {
                    (1.0 / (r2 - 1.0)).exp()
                } else {
                    0.0
                }
            }
            Profile::Field(f) => f.at(xi),
        }
    }
}

/// `f_k(x) = k^a g(k (x - x0))` for each scale `k`.
#[derive(Debug, Clone)]
pub struct ConcentrationFamily {
    pub profile: Profile,
    pub center: Point,
    pub a: f64,
    pub scales: Vec<f64>,
    /// Radius of the ball around the center where the exponent conditions are checked.
    pub radius: f64,
}

impl ConcentrationFamily {
    pub fn member(&self, domain: &Arc<Domain>, k: f64) -> Result<GridFunction> {
        let dim = domain.dim();
        let amp = k.powf(self.a);
        let c = self.center;
        GridFunction::from_fn(domain.clone(), |x| {
            let xi = [k * (x[0] - c[0]), k * (x[1] - c[1])];
            amp * self.profile.eval(&xi, dim)
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub k: f64,
    pub boundary_norm: f64,
    pub full_norm: f64,
    pub ratio: Ratio,
    pub subcritical: bool,
    pub status: ReportStatus,
    /// Width of the support in cells along its widest axis.
    pub support_cells: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    /// Whether `a q(x) - (n - 1) > 0` holds near the center.
    pub supercritical_family: bool,
    pub subcritical: bool,
    /// Ratios strictly increase along accepted scales.
    pub increasing: bool,
    /// Largest over smallest accepted ratio.
    pub spread: Ratio,
}

fn support_width(f: &GridFunction) -> usize {
    let domain = f.domain();
    let (nx, ny) = domain.resolution();
    let mut lo = [usize::MAX; 2];
    let mut hi = [0usize; 2];
    for (c, v) in f.interior().iter().enumerate() {
        if *v != 0.0 {
            let ij = [c % nx, c / nx.max(1)];
            for k in 0..2 {
                lo[k] = lo[k].min(ij[k]);
                hi[k] = hi[k].max(ij[k]);
            }
        }
    }
    if lo[0] == usize::MAX {
        return 0;
    }
    let axes = if domain.dim() == 2 && ny > 1 { 2 } else { 1 };
    (0..axes).map(|k| hi[k] - lo[k] + 1).max().unwrap_or(0)
}

/// Minimum number of cells the support must span.
pub const MIN_SUPPORT_CELLS: usize = 3;

pub fn sharpness_sweep(
    family: &ConcentrationFamily,
    p: &ExponentField,
    q: &ExponentField,
    s: &ExponentField,
    domain: &Arc<Domain>,
) -> Result<SweepReport> {
    let n = domain.dim() as f64;
    let dim = domain.dim();
    if !domain.facets().iter().any(|f| crate::geometry::distance(&f.centroid, &family.center) <= domain.diameter()) {
        return Err(Error::Parameter("center is far from the boundary".into()));
    }
    let near = |x: &Point| crate::geometry::distance(x, &family.center) <= family.radius;
    let pts: Vec<Point> = domain.cells().iter().map(|c| c.centroid).filter(|x| near(x)).collect();
    let check_pair = |pv: f64, sv: f64, at: &Point| -> Result<()> {
        let v = family.a * pv - n + sv * pv;
        if v > 1e-12 {
            return Err(Error::Parameter(format!(
                "family exponent a = {} violates a p - n + s p <= 0 at {:?} (value {v})",
                family.a,
                &at[..dim]
            )));
        }
        Ok(())
    };
    match (p.constant_value(), s.constant_value()) {
        (Some(pc), Some(sc)) => check_pair(pc, sc, &family.center)?,
        _ => {
            for x in &pts {
                for y in &pts {
                    check_pair(p.at_pair(x, y), s.at_pair(x, y), x)?;
                }
            }
        }
    }
    let supercritical_family = boundary_samples(domain, 2)
        .iter()
        .filter(|x| near(x))
        .all(|x| family.a * q.at(x) - (n - 1.0) > 0.0);
    let pq = PairQuadrature::new(domain, Scope::Interior)?;
    let mut rows = Vec::with_capacity(family.scales.len());
    let mut subcritical = true;
    for &k in &family.scales {
        if !(k > 0.0) {
            return Err(Error::Parameter(format!("scale must be positive, got {k}")));
        }
        let f = family.member(domain, k)?;
        let support_cells = support_width(&f);
        if support_cells < MIN_SUPPORT_CELLS {
            rows.push(SweepRow {
                k,
                boundary_norm: f64::NAN,
                full_norm: f64::NAN,
                ratio: Ratio::Undefined,
                subcritical: false,
                status: ReportStatus::Rejected,
                support_cells,
            });
            continue;
        }
        let rep = trace_check(&f, p, q, s, &pq)?;
        subcritical = rep.subcritical;
        rows.push(SweepRow {
            k,
            boundary_norm: rep.boundary_norm,
            full_norm: rep.full_norm,
            ratio: rep.ratio,
            subcritical: rep.subcritical,
            status: rep.status,
            support_cells,
        });
    }
    let ratios: Vec<f64> = rows.iter().filter(|r| r.status == ReportStatus::Ok).filter_map(|r| r.ratio.value()).collect();
    let increasing = ratios.windows(2).all(|w| w[1] > w[0]);
    let (mn, mx) = ratios.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let spread = if ratios.is_empty() { Ratio::Undefined } else { Ratio::of(mx, mn) };
    Ok(SweepReport { rows, supercritical_family, subcritical, increasing, spread })
}

#[derive(Debug, Clone, Serialize)]
pub struct PatchReport {
    pub patch: usize,
    pub cells: usize,
    pub status: ReportStatus,
    /// `[f]_{t,p_i}(B_i)`
    pub frozen_seminorm: f64,
    /// `||F||_{L^{p(.,.)}(B_i x B_i, mu)}` with `F = |f(x)-f(y)| / |x-y|^s`.
    pub weighted_norm: f64,
    /// `[f]_{s,p(.,.)}(B_i)`
    pub patch_seminorm: f64,
    /// `[f]_{s,p(.,.)}(domain)`
    pub domain_seminorm: f64,
    /// `[f]_{t,p_i}(B_i) / ||F||_mu`, the empirical chain constant.
    pub chain_ratio: Ratio,
    /// `||F||_mu <= [f]_{s,p}(B_i)`, checked as `modular_mu([f]_{s,p}(B_i)) <= 1`.
    pub weighted_bound_holds: bool,
    /// `[f]_{s,p}(B_i) <= [f]_{s,p}(domain)`, checked as `modular_B([f](domain)) <= 1`.
    pub monotone_holds: bool,
    /// `||f||_{L^{p_i}(B_i)} / ||f||_{L^{pbar}(domain)}`.
    pub lebesgue_ratio: Ratio,
}

/// Per-patch seminorm domination chain for a certificate.
pub fn proof_chain_check(
    f: &GridFunction,
    cert: &GapCertificate,
    p: &ExponentField,
    s: &ExponentField,
) -> Result<Vec<PatchReport>> {
    let domain = f.domain();
    let pq = PairQuadrature::new(domain, Scope::Interior)?;
    let whole = PairModular::new(node_values(f, &pq)?, &pq, PairKernel::new(p, s))?;
    let domain_seminorm = whole.luxemburg()?.lambda_star;
    let global_lebesgue = luxemburg_norm(f, p, Scope::Interior)?.lambda_star;
    let cells = domain.cells();
    let mut out = Vec::with_capacity(cert.patches.len());
    for (i, patch) in cert.patches.iter().enumerate() {
        let mut report = PatchReport {
            patch: i,
            cells: patch.cells.len(),
            status: ReportStatus::Ok,
            frozen_seminorm: 0.0,
            weighted_norm: 0.0,
            patch_seminorm: 0.0,
            domain_seminorm,
            chain_ratio: Ratio::Undefined,
            weighted_bound_holds: true,
            monotone_holds: true,
            lebesgue_ratio: Ratio::Undefined,
        };
        if patch.cells.len() < 2 {
            report.status = ReportStatus::Skipped;
            out.push(report);
            continue;
        }
        if !(patch.t < patch.s_i && patch.diameter < 1.0) {
            return Err(Error::Parameter(format!("patch {i} does not satisfy t < s_i and diameter < 1")));
        }
        let local = PairQuadrature::restricted(domain, Scope::Interior, patch.cells.clone())?;
        let values = node_values(f, &local)?;
        let weights: Vec<f64> = patch.cells.iter().map(|&c| cells[c].measure).collect();
        let frozen_exps = vec![patch.p_i; values.len()];
        report.lebesgue_ratio =
            Ratio::of(lebesgue_norm_nodes(&values, &weights, &frozen_exps)?.lambda_star, global_lebesgue);
        let seminorm = PairModular::new(values.clone(), &local, PairKernel::new(p, s))?;
        if seminorm.is_zero() {
            report.status = ReportStatus::ZeroFunction;
            out.push(report);
            continue;
        }
        let frozen = PairModular::new(values.clone(), &local, PairKernel::constant(patch.p_i, patch.t))?;
        let mut mu_kernel = PairKernel::new(p, s);
        mu_kernel.damping = (patch.s_i - patch.t) * patch.p_i;
        let weighted = PairModular::new(values, &local, mu_kernel)?;
        let lam_b = seminorm.luxemburg()?.lambda_star;
        let lam_mu = weighted.luxemburg()?.lambda_star;
        let lam_t = frozen.luxemburg()?.lambda_star;
        report.frozen_seminorm = lam_t;
        report.weighted_norm = lam_mu;
        report.patch_seminorm = lam_b;
        report.chain_ratio = Ratio::of(lam_t, lam_mu);
        report.weighted_bound_holds = weighted.modular(lam_b)? <= 1.0;
        report.monotone_holds = domain_seminorm > 0.0 && seminorm.modular(domain_seminorm)? <= 1.0;
        out.push(report);
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct PatchUnionReport {
    pub boundary_norm: f64,
    pub patch_norms: Vec<f64>,
    pub patch_sum: f64,
    /// `modular(sum of patch norms) <= 1`, i.e. the global norm is at most the sum.
    pub holds: bool,
}

/// Compares `||f||_{L^{q(.)}(boundary)}` with the sum of its patch restrictions.
pub fn patch_union_check(f: &GridFunction, cert: &GapCertificate, q: &ExponentField) -> Result<PatchUnionReport> {
    let domain = f.domain();
    let points = domain.points(Scope::Boundary);
    let weights = domain.weights(Scope::Boundary);
    let values = f.values(Scope::Boundary);
    let exps: Vec<f64> = points.iter().map(|x| q.at(x)).collect();
    let covered: Vec<bool> = (0..points.len()).map(|k| cert.patches.iter().any(|pt| pt.facets.contains(&k))).collect();
    if covered.iter().any(|c| !c) {
        return Err(Error::Covering("certificate patches miss a boundary facet".into()));
    }
    let global: LuxemburgResult = lebesgue_norm_nodes(values, &weights, &exps)?;
    let mut patch_norms = Vec::with_capacity(cert.patches.len());
    for pt in &cert.patches {
        let v: Vec<f64> = pt.facets.iter().map(|&k| values[k]).collect();
        let w: Vec<f64> = pt.facets.iter().map(|&k| weights[k]).collect();
        let e: Vec<f64> = pt.facets.iter().map(|&k| exps[k]).collect();
        patch_norms.push(lebesgue_norm_nodes(&v, &w, &e)?.lambda_star);
    }
    let patch_sum: f64 = patch_norms.iter().sum();
    let holds = global.is_zero() || (patch_sum > 0.0 && lebesgue_modular_nodes(values, &weights, &exps, patch_sum)? <= 1.0);
    Ok(PatchUnionReport { boundary_norm: global.lambda_star, patch_norms, patch_sum, holds })
}
