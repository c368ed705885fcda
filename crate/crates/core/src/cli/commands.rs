//! One function per subcommand; each returns a JSON result, a headline number
//! and optional CSV rows.

use serde::Serialize;
use serde_json::{json, Value};

use super::config::RunConfig;
use crate::embeddings::{
    embedding_check, holder_check, patch_union_check, proof_chain_check, sharpness_sweep, trace_check,
    ConcentrationFamily, Profile, Ratio, ReportStatus,
};
use crate::error::{Error, Result};
use crate::exponents::{covering_partition, subcritical_gap, Arity, ExponentField, ExtReal, Role};
use crate::geometry::{PairQuadrature, Scope};
use crate::modular::{boundary_gagliardo_seminorm, gagliardo_seminorm, luxemburg_norm};
use crate::solver::{coercivity_probe, minimize, EnergyProblem, SolverStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Norm,
    Seminorm,
    TraceCheck,
    Sharpness,
    Holder,
    Partition,
    Embed,
    Solve,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Norm => "norm",
            CommandKind::Seminorm => "seminorm",
            CommandKind::TraceCheck => "trace-check",
            CommandKind::Sharpness => "sharpness",
            CommandKind::Holder => "holder",
            CommandKind::Partition => "partition",
            CommandKind::Embed => "embed",
            CommandKind::Solve => "solve",
        }
    }
}

pub const CSV_HEADER: [&str; 7] = ["case_id", "k_or_patch", "boundary_norm", "full_norm", "ratio", "subcritical", "status"];

pub struct Outcome {
    pub result: Value,
    pub headline: Option<f64>,
    pub csv: Option<Vec<[String; 7]>>,
    pub nonconverged: bool,
}

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| Error::Config(format!("cannot serialize report: {e}")))
}

/// Floats with 17 significant digits; non-finite values are undefined.
pub fn fmt_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "undefined".into()
    }
}

fn validated(mut field: ExponentField, cfg: &RunConfig, domain: &crate::geometry::Domain, role: Role) -> Result<ExponentField> {
    field.validate_bounds(domain, role, cfg.refinement())?;
    Ok(field)
}

pub fn run(kind: CommandKind, cfg: &RunConfig) -> Result<Outcome> {
    let domain = cfg.build_domain()?;
    let defs = cfg.definitions()?;
    let dim = domain.dim();
    let field = |name: &str, arity: Arity, role: Role| -> Result<ExponentField> {
        validated(cfg.field(name, arity, &defs, dim)?, cfg, &domain, role)
    };
    let plain = |result: Value, headline: Option<f64>| Outcome { result, headline, csv: None, nonconverged: false };
    match kind {
        CommandKind::Norm => {
            let scope = cfg.scope();
            let (name, arity) = match scope {
                Scope::Boundary if cfg.has("q") => ("q", Arity::Boundary),
                Scope::Boundary => ("p", Arity::Boundary),
                Scope::Interior => ("p", Arity::Univariate),
            };
            let p = field(name, arity, Role::Exponent)?;
            let f = cfg.function("f", &domain, &defs)?;
            let r = luxemburg_norm(&f, &p, scope)?;
            Ok(plain(to_value(&r)?, Some(r.lambda_star)))
        }
        CommandKind::Seminorm => {
            let f = cfg.function("f", &domain, &defs)?;
            let r = match cfg.scope() {
                Scope::Interior => {
                    let p = field("p", Arity::Bivariate, Role::Exponent)?;
                    let s = field("s", Arity::Bivariate, Role::Order)?;
                    gagliardo_seminorm(&f, &p, &s, &PairQuadrature::new(&domain, Scope::Interior)?)?
                }
                Scope::Boundary => {
                    let q = field("q", Arity::Bivariate, Role::Exponent)?;
                    let t = field("t", Arity::Bivariate, Role::Order)?;
                    boundary_gagliardo_seminorm(&f, &q, &t, &PairQuadrature::new(&domain, Scope::Boundary)?)?
                }
            };
            Ok(plain(to_value(&r)?, Some(r.lambda_star)))
        }
        CommandKind::TraceCheck => {
            let p = field("p", Arity::Bivariate, Role::Exponent)?;
            let q = field("q", Arity::Boundary, Role::Exponent)?;
            let s = field("s", Arity::Bivariate, Role::Order)?;
            let f = cfg.function("f", &domain, &defs)?;
            let rep = trace_check(&f, &p, &q, &s, &PairQuadrature::new(&domain, Scope::Interior)?)?;
            Ok(plain(to_value(&rep)?, rep.ratio.value()))
        }
        CommandKind::Sharpness => {
            let spec = cfg.sharpness.as_ref().ok_or_else(|| Error::Config("sharpness section is required".into()))?;
            let p = field("p", Arity::Bivariate, Role::Exponent)?;
            let q = field("q", Arity::Boundary, Role::Exponent)?;
            let s = field("s", Arity::Bivariate, Role::Order)?;
            let profile = match spec.profile.as_deref() {
                None | Some("mollifier") => Profile::Mollifier,
                Some(src) => Profile::Field(
                    ExponentField::parse_with(src, Arity::Univariate, &defs)
                        .map_err(|e| Error::Config(format!("sharpness.profile: {e}")))?,
                ),
            };
            let family = ConcentrationFamily {
                profile,
                center: RunConfig::point(&spec.center, dim, "sharpness.center")?,
                a: spec.a,
                scales: spec.scales.clone(),
                radius: spec.radius,
            };
            let rep = sharpness_sweep(&family, &p, &q, &s, &domain)?;
            let rows = rep
                .rows
                .iter()
                .map(|r| {
                    [
                        cfg.case_id().to_string(),
                        fmt_float(r.k),
                        fmt_float(r.boundary_norm),
                        fmt_float(r.full_norm),
                        r.ratio.to_string(),
                        r.subcritical.to_string(),
                        r.status.to_string(),
                    ]
                })
                .collect();
            let headline = rep.rows.iter().rev().find(|r| r.status == ReportStatus::Ok).and_then(|r| r.ratio.value());
            Ok(Outcome { result: to_value(&rep)?, headline, csv: Some(rows), nonconverged: false })
        }
        CommandKind::Holder => {
            let scope = cfg.scope();
            let arity = if scope == Scope::Boundary { Arity::Boundary } else { Arity::Univariate };
            let p = cfg.field("p", arity, &defs, dim)?;
            let q = cfg.field("q", arity, &defs, dim)?;
            let r = cfg.field("r", arity, &defs, dim)?;
            let f = cfg.function("f", &domain, &defs)?;
            let g = cfg.function("g", &domain, &defs)?;
            let rep = holder_check(&f, &g, &p, &q, &r, scope)?;
            Ok(plain(to_value(&rep)?, rep.ratio.value()))
        }
        CommandKind::Partition => {
            let p = field("p", Arity::Bivariate, Role::Exponent)?;
            let q = field("q", Arity::Boundary, Role::Exponent)?;
            let s = field("s", Arity::Bivariate, Role::Order)?;
            let gap = subcritical_gap(&p, &q, &s, &domain, cfg.refinement())?;
            let k = match cfg.partition.as_ref().and_then(|p| p.gap) {
                Some(v) => ExtReal::Finite(v),
                None => gap.k,
            };
            let cert = covering_partition(&p, &q, &s, &domain, k, &cfg.covering_options())?;
            let mut result = json!({ "gap": to_value(&gap)?, "certificate": to_value(&cert)? });
            let mut rows = Vec::new();
            if cfg.has("f") {
                let f = cfg.function("f", &domain, &defs)?;
                let chain = proof_chain_check(&f, &cert, &p, &s)?;
                let union = patch_union_check(&f, &cert, &q)?;
                for (c, pt) in chain.iter().zip(&cert.patches) {
                    rows.push([
                        cfg.case_id().to_string(),
                        c.patch.to_string(),
                        fmt_float(union.patch_norms[c.patch]),
                        fmt_float(c.patch_seminorm),
                        c.chain_ratio.to_string(),
                        (pt.half_gap_ok && pt.third_gap_ok).to_string(),
                        c.status.to_string(),
                    ]);
                }
                result["chain"] = to_value(&chain)?;
                result["union"] = to_value(&union)?;
            } else {
                for (i, pt) in cert.patches.iter().enumerate() {
                    rows.push([
                        cfg.case_id().to_string(),
                        i.to_string(),
                        fmt_float(f64::NAN),
                        fmt_float(f64::NAN),
                        Ratio::Undefined.to_string(),
                        (pt.half_gap_ok && pt.third_gap_ok).to_string(),
                        ReportStatus::Skipped.to_string(),
                    ]);
                }
            }
            Ok(Outcome { result, headline: k.finite(), csv: Some(rows), nonconverged: false })
        }
        CommandKind::Embed => {
            let spec = cfg.embed.as_ref().ok_or_else(|| Error::Config("embed section is required".into()))?;
            let p = field("p", Arity::Bivariate, Role::Exponent)?;
            let s = field("s", Arity::Bivariate, Role::Order)?;
            let f = cfg.function("f", &domain, &defs)?;
            let rep = embedding_check(&f, &p, &s, spec.t, spec.r, &PairQuadrature::new(&domain, Scope::Interior)?)?;
            Ok(plain(to_value(&rep)?, rep.seminorm_ratio.value()))
        }
        CommandKind::Solve => {
            let p = cfg.field("p", Arity::Bivariate, &defs, dim)?;
            let s = cfg.field("s", Arity::Bivariate, &defs, dim)?;
            let r = cfg.field("r", Arity::Boundary, &defs, dim)?;
            let g = cfg.function("g", &domain, &defs)?;
            let opts = cfg.solver.unwrap_or_default();
            let prob = EnergyProblem::new(p, s, g, r)?;
            let rep = minimize(&prob, &opts)?;
            let mut result = json!({ "solver": to_value(&rep)? });
            if let Some(scales) = &cfg.coercivity {
                let base = if rep.minimizer.iter().any(|v| *v != 0.0) {
                    rep.minimizer.clone()
                } else {
                    vec![1.0; prob.len()]
                };
                let probe = coercivity_probe(&prob.function(base)?, &prob, scales)?;
                result["coercivity"] = to_value(&probe)?;
            }
            Ok(Outcome {
                result,
                headline: Some(rep.energy),
                csv: None,
                nonconverged: rep.status == SolverStatus::Nonconverged,
            })
        }
    }
}
