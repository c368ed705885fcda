//! JSON run configuration and its conversion into validated objects.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::{Arity, CoveringOptions, ExponentField};
use crate::expr::{self, Definitions};
use crate::geometry::{Domain, GridFunction, Point, Scope};
use crate::solver::SolverOptions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainKind {
    Interval,
    Rectangle,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    #[serde(rename = "type")]
    pub kind: DomainKind,
    /// `[a, b]` or `[x_lo, y_lo, x_hi, y_hi]`.
    pub bounds: Vec<f64>,
    /// `[N]` or `[Nx, Ny]`.
    pub resolution: Vec<usize>,
}

/// A field given as a number or as an expression.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Source {
    Number(f64),
    Text(String),
}

impl Source {
    fn text(&self) -> String {
        match self {
            Source::Number(v) => format!("{v:?}"),
            Source::Text(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSources {
    pub p: Option<Source>,
    pub q: Option<Source>,
    pub s: Option<Source>,
    pub r: Option<Source>,
    pub t: Option<Source>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionSources {
    pub f: Option<Source>,
    pub g: Option<Source>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SharpnessSpec {
    pub center: Vec<f64>,
    pub a: f64,
    pub scales: Vec<f64>,
    #[serde(default = "default_radius")]
    pub radius: f64,
    /// `"mollifier"` or an expression in the scaled variable.
    #[serde(default)]
    pub profile: Option<String>,
}

fn default_radius() -> f64 {
    0.25
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbedSpec {
    pub t: f64,
    pub r: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionSpec {
    pub epsilon: Option<f64>,
    pub max_retries: Option<usize>,
    /// Gap to certify; defaults to the sampled gap.
    pub gap: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub json: Option<String>,
    pub csv: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub case_id: Option<String>,
    pub domain: DomainSpec,
    /// Named univariate helpers usable as `name(x)` or `name(y)`.
    #[serde(default)]
    pub definitions: BTreeMap<String, String>,
    #[serde(default)]
    pub fields: FieldSources,
    #[serde(default)]
    pub functions: FunctionSources,
    #[serde(default)]
    pub scope: Option<Scope>,
    #[serde(default)]
    pub refinement: Option<usize>,
    #[serde(default)]
    pub sharpness: Option<SharpnessSpec>,
    #[serde(default)]
    pub embed: Option<EmbedSpec>,
    #[serde(default)]
    pub partition: Option<PartitionSpec>,
    #[serde(default)]
    pub solver: Option<SolverOptions>,
    #[serde(default)]
    pub coercivity: Option<Vec<f64>>,
    #[serde(default)]
    pub output: Option<OutputSpec>,
}

impl RunConfig {
    pub fn from_json(text: &str, origin: &str) -> Result<RunConfig> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("{origin}: {e}")))
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        RunConfig::from_json(&text, &path.display().to_string())
    }

    pub fn case_id(&self) -> &str {
        self.case_id.as_deref().unwrap_or("case")
    }

    pub fn refinement(&self) -> usize {
        self.refinement.unwrap_or(2).max(1)
    }

    pub fn scope(&self) -> Scope {
        self.scope.unwrap_or(Scope::Interior)
    }

    pub fn build_domain(&self) -> Result<Arc<Domain>> {
        let d = &self.domain;
        let bad = |what: &str| Error::Config(format!("domain: {what}"));
        let domain = match d.kind {
            DomainKind::Interval => {
                let [a, b] = d.bounds[..] else { return Err(bad("interval bounds must be [a, b]")) };
                let [n] = d.resolution[..] else { return Err(bad("interval resolution must be [N]")) };
                Domain::interval(a, b, n)?
            }
            DomainKind::Rectangle => {
                let [x0, y0, x1, y1] = d.bounds[..] else {
                    return Err(bad("rectangle bounds must be [x_lo, y_lo, x_hi, y_hi]"));
                };
                let [nx, ny] = d.resolution[..] else { return Err(bad("rectangle resolution must be [Nx, Ny]")) };
                Domain::rectangle([x0, y0], [x1, y1], nx, ny)?
            }
        };
        Ok(Arc::new(domain))
    }

    /// Parses the helper definitions, allowing them to refer to each other.
    pub fn definitions(&self) -> Result<Definitions> {
        let mut defs = Definitions::new();
        let mut pending: Vec<(&String, &String)> = self.definitions.iter().collect();
        while !pending.is_empty() {
            let before = pending.len();
            let mut last_err = None;
            pending.retain(|(name, src)| match expr::parse(src, false, &defs) {
                Ok(e) => {
                    defs.insert((*name).clone(), e);
                    false
                }
                Err(e) => {
                    last_err = Some(Error::Config(format!("definitions.{name}: {e}")));
                    true
                }
            });
            if pending.len() == before {
                return Err(last_err.expect("pending definitions failed"));
            }
        }
        Ok(defs)
    }

    fn source(&self, name: &str) -> Option<&Source> {
        let f = &self.fields;
        match name {
            "p" => f.p.as_ref(),
            "q" => f.q.as_ref(),
            "s" => f.s.as_ref(),
            "r" => f.r.as_ref(),
            "t" => f.t.as_ref(),
            "f" => self.functions.f.as_ref(),
            "g" => self.functions.g.as_ref(),
            _ => None,
        }
    }

    /// Parses a field, naming it in any diagnostic.
    pub fn field(&self, name: &str, arity: Arity, defs: &Definitions, dim: usize) -> Result<ExponentField> {
        let section = if matches!(name, "f" | "g") { "functions" } else { "fields" };
        let src = self.source(name).ok_or_else(|| Error::Config(format!("{section}.{name} is required")))?;
        let field = ExponentField::parse_with(&src.text(), arity, defs)
            .map_err(|e| Error::Config(format!("{section}.{name}: {e}")))?;
        field.check_dimension(dim).map_err(|e| Error::Config(format!("{section}.{name}: {e}")))?;
        Ok(field)
    }

    pub fn has(&self, name: &str) -> bool {
        self.source(name).is_some()
    }

    pub fn function(&self, name: &str, domain: &Arc<Domain>, defs: &Definitions) -> Result<GridFunction> {
        let field = self.field(name, Arity::Univariate, defs, domain.dim())?;
        GridFunction::from_fn(domain.clone(), |x| field.at(x))
    }

    pub fn covering_options(&self) -> CoveringOptions {
        let mut opts = CoveringOptions { refinement: self.refinement(), ..CoveringOptions::default() };
        if let Some(p) = &self.partition {
            if let Some(e) = p.epsilon {
                opts.epsilon = e;
            }
            if let Some(m) = p.max_retries {
                opts.max_retries = m;
            }
        }
        opts
    }

    pub fn point(values: &[f64], dim: usize, what: &str) -> Result<Point> {
        if values.len() != dim {
            return Err(Error::Config(format!("{what} must have {dim} coordinates")));
        }
        let mut p = [0.0; 2];
        p[..dim].copy_from_slice(values);
        Ok(p)
    }
}
