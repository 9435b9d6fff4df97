//! JSON model files.
//!
//! A single-process file:
//!
//! ```json
//! {"drift": -2.0, "sigma2": {"kind": "expression", "body": "1 + 0.5*exp(-x)"},
//!  "jumps": {"kind": "point_shift", "c": 1.0}, "lambda0": 2.0, "x_max": 50.0}
//! ```
//!
//! A pair file has `g_plus`, `g_minus`, `A` and `Lambda` instead. Errors
//! carry the JSON path of the offending field and the line and column.

use std::path::Path;

use serde::de::{self, Deserializer};
use serde::Deserialize;

use super::family::{JumpFamily, ScalarFn, SizeLaw};
use super::planar::{LineMeasure, PlanarJumpMeasure, Side};
use super::{DriftDiffusionSpec, RJDModel, DEFAULT_GRID_STEP, DEFAULT_X_MAX};
use crate::error::{Result, RjdError};
use crate::expr::Expr;
use crate::levy::LevyPairModel;

#[derive(Debug, Clone)]
pub struct FnSpec(ScalarFn);

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum TaggedFn {
    Constant { value: f64 },
    Expression { body: String },
}

impl<'de> Deserialize<'de> for FnSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        if let Some(c) = v.as_f64() {
            return Ok(FnSpec(ScalarFn::Constant(c)));
        }
        if !v.is_object() {
            return Err(de::Error::custom(
                "expected a number or an object with a \"kind\" field",
            ));
        }
        match TaggedFn::deserialize(v).map_err(de::Error::custom)? {
            TaggedFn::Constant { value } => Ok(FnSpec(ScalarFn::Constant(value))),
            TaggedFn::Expression { body } => {
                let e = Expr::parse(&body).map_err(de::Error::custom)?;
                Ok(FnSpec(ScalarFn::Expr(e)))
            }
        }
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum SizeLawSpec {
    Dirac { at: f64 },
    Exponential { rate: f64 },
    Uniform { lo: f64, hi: f64 },
    Discrete { atoms: Vec<(f64, f64)> },
}

impl From<SizeLawSpec> for SizeLaw {
    fn from(s: SizeLawSpec) -> Self {
        match s {
            SizeLawSpec::Dirac { at } => SizeLaw::Dirac(at),
            SizeLawSpec::Exponential { rate } => SizeLaw::Exponential { rate },
            SizeLawSpec::Uniform { lo, hi } => SizeLaw::Uniform { lo, hi },
            SizeLawSpec::Discrete { atoms } => SizeLaw::Discrete(atoms),
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
enum SideSpec {
    Positive,
    Negative,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum LineSpec {
    Zero,
    Dirac {
        at: f64,
        #[serde(default = "one")]
        mass: f64,
    },
    Atoms {
        atoms: Vec<(f64, f64)>,
    },
    Exponential {
        rate: f64,
        #[serde(default = "one")]
        mass: f64,
        side: SideSpec,
    },
}

impl From<LineSpec> for LineMeasure {
    fn from(s: LineSpec) -> Self {
        match s {
            LineSpec::Zero => LineMeasure::Zero,
            LineSpec::Dirac { at, mass } => LineMeasure::Atoms(vec![(at, mass)]),
            LineSpec::Atoms { atoms } => LineMeasure::Atoms(atoms),
            LineSpec::Exponential { rate, mass, side } => LineMeasure::Exponential {
                mass,
                rate,
                side: match side {
                    SideSpec::Positive => Side::Positive,
                    SideSpec::Negative => Side::Negative,
                },
            },
        }
    }
}

fn zero_line() -> LineSpec {
    LineSpec::Zero
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum PlanarSpec {
    Zero,
    Product {
        #[serde(default = "zero_line")]
        nu_plus: LineSpec,
        #[serde(default = "zero_line")]
        nu_minus: LineSpec,
    },
    PointMass {
        x_plus: f64,
        x_minus: f64,
        #[serde(default = "one")]
        intensity: f64,
    },
}

impl PlanarSpec {
    fn build(self) -> std::result::Result<PlanarJumpMeasure, String> {
        match self {
            PlanarSpec::Zero => Ok(PlanarJumpMeasure::zero()),
            PlanarSpec::Product { nu_plus, nu_minus } => PlanarJumpMeasure::product(nu_plus.into(), nu_minus.into()),
            PlanarSpec::PointMass {
                x_plus,
                x_minus,
                intensity,
            } => PlanarJumpMeasure::point_mass(x_plus, x_minus, intensity),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum JumpsSpec {
    None,
    PointShift {
        c: f64,
        #[serde(default = "one")]
        intensity: f64,
    },
    PointMap {
        psi: FnSpec,
        intensity: Option<FnSpec>,
    },
    ExpRightTail {
        rate: f64,
        #[serde(default = "one")]
        intensity: f64,
    },
    TranslationInvariant {
        intensity: f64,
        law: SizeLawSpec,
    },
    Pushforward {
        lambda: PlanarSpec,
    },
}

fn no_jumps() -> JumpsSpec {
    JumpsSpec::None
}

impl JumpsSpec {
    fn build(self) -> std::result::Result<JumpFamily, String> {
        Ok(match self {
            JumpsSpec::None => JumpFamily::None,
            JumpsSpec::PointShift { c, intensity } => JumpFamily::PointShift { shift: c, intensity },
            JumpsSpec::PointMap { psi, intensity } => JumpFamily::PointMap {
                map: psi.0,
                intensity: intensity.map_or(ScalarFn::Constant(1.0), |f| f.0),
            },
            JumpsSpec::ExpRightTail { rate, intensity } => JumpFamily::ExpRightTail { rate, intensity },
            JumpsSpec::TranslationInvariant { intensity, law } => JumpFamily::TranslationInvariant {
                intensity,
                law: law.into(),
            },
            JumpsSpec::Pushforward { lambda } => JumpFamily::Pushforward(lambda.build()?),
        })
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    #[serde(default)]
    #[allow(dead_code)]
    description: Option<String>,
    drift: FnSpec,
    sigma2: FnSpec,
    #[serde(default = "no_jumps")]
    jumps: JumpsSpec,
    lambda0: f64,
    #[serde(default)]
    x_max: Option<f64>,
    #[serde(default)]
    grid_step: Option<f64>,
    #[serde(default)]
    dominating: Option<JumpsSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PairDoc {
    #[serde(default)]
    #[allow(dead_code)]
    description: Option<String>,
    g_plus: f64,
    g_minus: f64,
    #[serde(rename = "A")]
    a: [[f64; 2]; 2],
    #[serde(rename = "Lambda", default = "zero_planar")]
    lambda: PlanarSpec,
    #[serde(default)]
    lambda0: Option<f64>,
    #[serde(default)]
    x_max: Option<f64>,
    #[serde(default)]
    grid_step: Option<f64>,
    #[serde(default)]
    dominating: Option<JumpsSpec>,
}

fn zero_planar() -> PlanarSpec {
    PlanarSpec::Zero
}

/// A parsed single-process file.
#[derive(Debug, Clone)]
pub struct ModelFile {
    pub model: RJDModel,
    /// Optional dominating family for the domination certificate.
    pub dominating: Option<JumpFamily>,
}

/// A parsed pair file.
#[derive(Debug, Clone)]
pub struct PairFile {
    pub pair: LevyPairModel,
    pub x_max: f64,
    pub grid_step: f64,
    pub dominating: Option<JumpFamily>,
}

impl PairFile {
    /// The gap model on the file's grid.
    pub fn gap_model(&self) -> Result<RJDModel> {
        self.pair.gap_model()?.with_grid(self.x_max, self.grid_step)
    }
}

#[derive(Debug, Clone)]
pub enum Document {
    Single(ModelFile),
    Pair(PairFile),
}

impl Document {
    /// The process whose rate is certified: the model itself, or the gap
    /// of a pair.
    pub fn rjd_model(&self) -> Result<RJDModel> {
        match self {
            Document::Single(m) => Ok(m.model.clone()),
            Document::Pair(p) => p.gap_model(),
        }
    }

    pub fn dominating(&self) -> Option<&JumpFamily> {
        match self {
            Document::Single(m) => m.dominating.as_ref(),
            Document::Pair(p) => p.dominating.as_ref(),
        }
    }
}

fn file_error(origin: &str, msg: impl Into<String>) -> RjdError {
    RjdError::ModelFile {
        path: origin.to_string(),
        msg: msg.into(),
    }
}

fn parse_typed<T: de::DeserializeOwned>(text: &str, origin: &str) -> Result<T> {
    let mut de = serde_json::Deserializer::from_str(text);
    let value: T = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        if field == "." {
            file_error(origin, inner.to_string())
        } else {
            file_error(origin, format!("field `{field}`: {inner}"))
        }
    })?;
    de.end().map_err(|e| file_error(origin, e.to_string()))?;
    Ok(value)
}

pub fn parse_model(text: &str, origin: &str) -> Result<ModelFile> {
    let doc: ModelDoc = parse_typed(text, origin)?;
    let jumps = doc
        .jumps
        .build()
        .map_err(|m| file_error(origin, format!("field `jumps`: {m}")))?;
    let dominating = doc
        .dominating
        .map(JumpsSpec::build)
        .transpose()
        .map_err(|m| file_error(origin, format!("field `dominating`: {m}")))?;
    let dd = DriftDiffusionSpec::new(doc.drift.0, doc.sigma2.0);
    let model = RJDModel::new(dd, jumps, doc.lambda0)
        .and_then(|m| {
            m.with_grid(
                doc.x_max.unwrap_or(DEFAULT_X_MAX),
                doc.grid_step.unwrap_or(DEFAULT_GRID_STEP),
            )
        })
        .map_err(|e| file_error(origin, e.to_string()))?;
    Ok(ModelFile { model, dominating })
}

pub fn parse_pair(text: &str, origin: &str) -> Result<PairFile> {
    let doc: PairDoc = parse_typed(text, origin)?;
    let [[a_pp, a_pm], [a_mp, a_mm]] = doc.a;
    if a_pm != a_mp {
        return Err(file_error(
            origin,
            format!("field `A`: matrix must be symmetric, got {a_pm} and {a_mp}"),
        ));
    }
    let lambda = doc
        .lambda
        .build()
        .map_err(|m| file_error(origin, format!("field `Lambda`: {m}")))?;
    let dominating = doc
        .dominating
        .map(JumpsSpec::build)
        .transpose()
        .map_err(|m| file_error(origin, format!("field `dominating`: {m}")))?;
    let pair = LevyPairModel::new(doc.g_plus, doc.g_minus, [a_pp, a_pm, a_mm], lambda, doc.lambda0)
        .map_err(|e| file_error(origin, e.to_string()))?;
    Ok(PairFile {
        pair,
        x_max: doc.x_max.unwrap_or(DEFAULT_X_MAX),
        grid_step: doc.grid_step.unwrap_or(DEFAULT_GRID_STEP),
        dominating,
    })
}

/// Parses either file shape; a top-level `g_plus` selects the pair form.
pub fn parse_document(text: &str, origin: &str) -> Result<Document> {
    let probe: serde_json::Value = serde_json::from_str(text).map_err(|e| file_error(origin, e.to_string()))?;
    if probe.get("g_plus").is_some() {
        parse_pair(text, origin).map(Document::Pair)
    } else {
        parse_model(text, origin).map(Document::Single)
    }
}

pub fn load_document(path: &Path) -> Result<Document> {
    let origin = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| file_error(&origin, e.to_string()))?;
    parse_document(&text, &origin)
}
