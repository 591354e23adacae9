//! Experiment configuration: one JSON document per experiment.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::averages::IndexBase;
use crate::error::{Error, Result};
use crate::nilseq::{HeisenbergElement, InvariantFunction, TableWeight, WeightSequence};
use crate::systems::{Observable, Param, Point, System, DEFAULT_MODULUS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    BirkhoffAvg,
    WwAvg,
    WwSup,
    DoubleAvg,
    WwdrAvg,
    PolyWwdrAvg,
    NilWwdrAvg,
    DualSystemAvg,
    CesaroNilseq,
    LocalSeminorm,
    GhkSeminorm,
    VanishingExperiment,
    ProductFormulaCheck,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 13] = [
        ExperimentKind::BirkhoffAvg,
        ExperimentKind::WwAvg,
        ExperimentKind::WwSup,
        ExperimentKind::DoubleAvg,
        ExperimentKind::WwdrAvg,
        ExperimentKind::PolyWwdrAvg,
        ExperimentKind::NilWwdrAvg,
        ExperimentKind::DualSystemAvg,
        ExperimentKind::CesaroNilseq,
        ExperimentKind::LocalSeminorm,
        ExperimentKind::GhkSeminorm,
        ExperimentKind::VanishingExperiment,
        ExperimentKind::ProductFormulaCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::BirkhoffAvg => "birkhoff_avg",
            ExperimentKind::WwAvg => "ww_avg",
            ExperimentKind::WwSup => "ww_sup",
            ExperimentKind::DoubleAvg => "double_avg",
            ExperimentKind::WwdrAvg => "wwdr_avg",
            ExperimentKind::PolyWwdrAvg => "poly_wwdr_avg",
            ExperimentKind::NilWwdrAvg => "nil_wwdr_avg",
            ExperimentKind::DualSystemAvg => "dual_system_avg",
            ExperimentKind::CesaroNilseq => "cesaro_nilseq",
            ExperimentKind::LocalSeminorm => "local_seminorm",
            ExperimentKind::GhkSeminorm => "ghk_seminorm",
            ExperimentKind::VanishingExperiment => "vanishing_experiment",
            ExperimentKind::ProductFormulaCheck => "product_formula_check",
        }
    }

    pub fn summary(self) -> &'static str {
        match self {
            ExperimentKind::BirkhoffAvg => "(1/N) Σ f(Tⁿx₀)",
            ExperimentKind::WwAvg => "(1/N) Σ f(Tⁿx₀) e(nt)",
            ExperimentKind::WwSup => "certified sup over t of |(1/N) Σ f(Tⁿx₀) e(nt)|",
            ExperimentKind::DoubleAvg => "(1/N) Σ f₁(T^{an}x₀) f₂(T^{bn}x₀)",
            ExperimentKind::WwdrAvg => "double average weighted by e(nt)",
            ExperimentKind::PolyWwdrAvg => "double average weighted by e(p(n))",
            ExperimentKind::NilWwdrAvg => "double average weighted by a nilsequence",
            ExperimentKind::DualSystemAvg => "L² norm over a rotation of the dual-system average",
            ExperimentKind::CesaroNilseq => "(1/N) Σ_{n<N} b_n for a weight sequence",
            ExperimentKind::LocalSeminorm => "‖b‖_k of a weight sequence at scale (H, N)",
            ExperimentKind::GhkSeminorm => "orbit estimate of the GHK seminorm of f",
            ExperimentKind::VanishingExperiment => "seminorm and weighted average of the projected product",
            ExperimentKind::ProductFormulaCheck => "double average against ∫E[f₁|I]E[f₂|I]",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemSpec {
    RotationTorus { alpha: Vec<Param> },
    AnzaiSkew { alpha: Param },
    ToralAutomorphism {
        matrix: [[i64; 2]; 2],
        #[serde(default = "default_modulus")]
        modulus: u64,
    },
}

fn default_modulus() -> u64 {
    DEFAULT_MODULUS
}

impl SystemSpec {
    pub fn build(&self) -> Result<System> {
        match self {
            SystemSpec::RotationTorus { alpha } => System::rotation(alpha.clone()),
            SystemSpec::AnzaiSkew { alpha } => System::anzai(*alpha),
            SystemSpec::ToralAutomorphism { matrix, modulus } => System::toral(*matrix, *modulus),
        }
    }

    pub fn has_rational_parameter(&self) -> bool {
        match self {
            SystemSpec::RotationTorus { alpha } => alpha.iter().any(Param::is_rational),
            SystemSpec::AnzaiSkew { alpha } => alpha.is_rational(),
            SystemSpec::ToralAutomorphism { .. } => false,
        }
    }
}

/// `[[frequency…], [re, im]]` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObservableSpec(pub Vec<(Vec<i64>, [f64; 2])>);

impl ObservableSpec {
    pub fn build(&self, dim: usize) -> Result<Observable> {
        Observable::new(
            dim,
            self.0
                .iter()
                .map(|(k, c)| (k.clone(), Complex64::new(c[0], c[1])))
                .collect(),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightSpec {
    ConstantOne,
    PolynomialPhase {
        coefficients: Vec<f64>,
    },
    TorusNilseq {
        alpha: Vec<f64>,
        f: ObservableSpec,
        base: Vec<f64>,
    },
    HeisenbergNilseq {
        g: HeisenbergElement,
        #[serde(default = "identity")]
        base: HeisenbergElement,
        f: InvariantFunction,
    },
    Product {
        left: Box<WeightSpec>,
        right: Box<WeightSpec>,
    },
    Scaled {
        factor: [f64; 2],
        inner: Box<WeightSpec>,
    },
    /// CSV with header `n,re,im`; a relative path resolves against the
    /// config file's directory.
    Table {
        path: PathBuf,
        sup_error_budget: f64,
    },
}

fn identity() -> HeisenbergElement {
    HeisenbergElement::IDENTITY
}

impl WeightSpec {
    pub fn build(&self, base_dir: &Path) -> Result<WeightSequence> {
        Ok(match self {
            WeightSpec::ConstantOne => WeightSequence::constant_one(),
            WeightSpec::PolynomialPhase { coefficients } => WeightSequence::polynomial(coefficients.clone())?,
            WeightSpec::TorusNilseq { alpha, f, base } => {
                WeightSequence::torus(alpha.clone(), f.build(alpha.len())?, base.clone())?
            }
            WeightSpec::HeisenbergNilseq { g, base, f } => {
                if let InvariantFunction::Theta { level, truncation, width } = *f {
                    InvariantFunction::theta_with(level, truncation, width)?;
                }
                WeightSequence::heisenberg(*g, *base, f.clone())
            }
            WeightSpec::Product { left, right } => {
                crate::nilseq::product_weight(left.build(base_dir)?, right.build(base_dir)?)
            }
            WeightSpec::Scaled { factor, inner } => {
                WeightSequence::scaled(Complex64::new(factor[0], factor[1]), inner.build(base_dir)?)
            }
            WeightSpec::Table { path, sup_error_budget } => {
                let p = if path.is_absolute() { path.clone() } else { base_dir.join(path) };
                WeightSequence::Table(TableWeight::from_csv(&p, *sup_error_budget)?)
            }
        })
    }

    fn numbers(&self, out: &mut Vec<f64>) {
        match self {
            WeightSpec::ConstantOne | WeightSpec::Table { .. } => {}
            WeightSpec::PolynomialPhase { coefficients } => out.extend(coefficients),
            WeightSpec::TorusNilseq { alpha, f, base } => {
                out.extend(alpha);
                out.extend(base);
                obs_numbers(f, out);
            }
            WeightSpec::HeisenbergNilseq { g, base, f } => {
                out.extend([g.a, g.b, g.c, base.a, base.b, base.c]);
                if let InvariantFunction::Theta { width, .. } = f {
                    out.push(*width);
                }
            }
            WeightSpec::Product { left, right } => {
                left.numbers(out);
                right.numbers(out);
            }
            WeightSpec::Scaled { factor, inner } => {
                out.extend(factor);
                inner.numbers(out);
            }
        }
    }
}

fn obs_numbers(o: &ObservableSpec, out: &mut Vec<f64>) {
    for (_, c) in &o.0 {
        out.extend(c);
    }
}

/// `H` as a fixed value or as `⌊√N⌋`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HRule {
    Fixed(usize),
    Named(String),
}

impl HRule {
    pub fn at(&self, n: u64) -> usize {
        match self {
            HRule::Fixed(h) => *h,
            HRule::Named(_) => {
                let mut r = (n as f64).sqrt() as u64;
                while r * r > n {
                    r -= 1;
                }
                while (r + 1) * (r + 1) <= n {
                    r += 1;
                }
                r as usize
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeminormSpec {
    pub k: usize,
    #[serde(default = "sqrt_rule")]
    pub h: HRule,
}

fn sqrt_rule() -> HRule {
    HRule::Named("sqrt".into())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DualSpec {
    pub system: SystemSpec,
    pub g_list: Vec<ObservableSpec>,
    #[serde(default = "default_nodes")]
    pub nodes_per_axis: usize,
}

fn default_nodes() -> usize {
    64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Re,
    Im,
    Abs,
    Sup,
    Seminorm,
    /// `|v(N') − v(N)|` with `N'` the next schedule entry.
    Delta,
    /// `|lhs − rhs|` of a product-formula check.
    Error,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cmp {
    Lt,
    Le,
    Gt,
    Ge,
}

impl Cmp {
    pub fn holds(self, x: f64, y: f64) -> bool {
        match self {
            Cmp::Lt => x < y,
            Cmp::Le => x <= y,
            Cmp::Gt => x > y,
            Cmp::Ge => x >= y,
        }
    }
}

/// A check applied to every sample point's series. A missing `n` means the
/// last schedule entry (the last one with a defined delta for `delta`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case", deny_unknown_fields)]
pub enum Assertion {
    Compare {
        metric: Metric,
        #[serde(default)]
        n: Option<u64>,
        op: Cmp,
        value: f64,
    },
    Range {
        metric: Metric,
        #[serde(default)]
        n: Option<u64>,
        lo: f64,
        hi: f64,
    },
    /// Every metric value at `N ≥ from`, at every schedule entry, is below
    /// the one before it.
    StrictlyDecreasing { metric: Metric, from: u64 },
    /// `metric(n) < metric(than)`.
    SmallerThanAt { metric: Metric, n: u64, than: u64 },
    /// `metric(N) op value` at every schedule entry where it is defined.
    Every { metric: Metric, op: Cmp, value: f64 },
    /// Every row of the metric is exactly zero.
    AllZero { metric: Metric },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub id: String,
    pub kind: ExperimentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub obs1: Option<ObservableSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub obs2: Option<ObservableSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<WeightSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub x0: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<i64>,
    #[serde(default = "default_schedule")]
    pub schedule: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seminorm: Option<SeminormSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dual: Option<DualSpec>,
    /// Frequency-grid accuracy; also turns on the `sup` column for averages.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// Product-formula tolerance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub index_base: IndexBase,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub assertions: Vec<Assertion>,
    /// Directory for relative table paths; not part of the document.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

pub fn default_schedule() -> Vec<u64> {
    (10..=16).map(|k| 1u64 << k).collect()
}

fn field(name: &str, message: impl Into<String>) -> Error {
    Error::Config {
        field: name.into(),
        message: message.into(),
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str, origin: &str) -> Result<ExperimentConfig> {
        let mut cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::ConfigParse {
            path: origin.into(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        cfg.base_dir = Path::new(origin).parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.validate()?;
        Ok(cfg)
    }

    /// Canonical JSON: sorted keys, defaults filled in, rationals as `"p/q"`.
    pub fn canonical_json(&self) -> Result<String> {
        let v = serde_json::to_value(self)?;
        Ok(serde_json::to_string(&v)?)
    }

    pub fn uses_rational_branch(&self) -> bool {
        self.system.as_ref().is_some_and(SystemSpec::has_rational_parameter)
    }

    fn needs(&self) -> (bool, bool, bool, bool) {
        use ExperimentKind::*;
        // (system + x0 + obs1, obs2 + a + b, weight, seminorm)
        match self.kind {
            BirkhoffAvg | WwAvg | WwSup => (true, false, false, false),
            DoubleAvg | WwdrAvg | DualSystemAvg | ProductFormulaCheck => (true, true, false, false),
            PolyWwdrAvg | NilWwdrAvg => (true, true, true, false),
            CesaroNilseq => (false, false, true, false),
            LocalSeminorm => (false, false, true, true),
            GhkSeminorm => (true, false, false, true),
            VanishingExperiment => (true, true, true, true),
        }
    }

    pub fn validate(&self) -> Result<()> {
        use ExperimentKind::*;
        if self.id.is_empty() || !self.id.chars().all(|c| c.is_ascii_alphanumeric() || "_-.".contains(c)) {
            return Err(field("id", "must be nonempty and use only [A-Za-z0-9_.-]"));
        }
        if self.schedule.is_empty() || self.schedule[0] == 0 || self.schedule.windows(2).any(|w| w[0] >= w[1]) {
            return Err(field("schedule", "must be a nonempty strictly increasing list of positive lengths"));
        }
        let (orbit, double, weight, seminorm) = self.needs();
        let system = if orbit {
            let spec = self.system.as_ref().ok_or_else(|| field("system", "required"))?;
            let system = spec.build().map_err(|e| field("system", e.to_string()))?;
            if self.x0.is_empty() {
                return Err(field("x0", "at least one sample point is required"));
            }
            for (i, p) in self.x0.iter().enumerate() {
                point_for(&system, p).map_err(|e| field(&format!("x0[{i}]"), e.to_string()))?;
            }
            let o1 = self.obs1.as_ref().ok_or_else(|| field("obs1", "required"))?;
            o1.build(system.dim()).map_err(|e| field("obs1", e.to_string()))?;
            Some(system)
        } else {
            None
        };
        if double {
            let system = system.as_ref().expect("orbit experiments build a system");
            let o2 = self.obs2.as_ref().ok_or_else(|| field("obs2", "required"))?;
            o2.build(system.dim()).map_err(|e| field("obs2", e.to_string()))?;
            let a = self.a.ok_or_else(|| field("a", "required"))?;
            let b = self.b.ok_or_else(|| field("b", "required"))?;
            if a == b {
                return Err(field("b", "exponents must be distinct"));
            }
            if a == 0 || b == 0 {
                return Err(field(if a == 0 { "a" } else { "b" }, "exponents must be nonzero"));
            }
        }
        if weight && self.weight.is_none() {
            return Err(field("weight", "required"));
        }
        if self.kind == PolyWwdrAvg && !matches!(self.weight, Some(WeightSpec::PolynomialPhase { .. })) {
            return Err(field("weight", "poly_wwdr_avg takes a polynomial_phase weight"));
        }
        if seminorm {
            let s = self.seminorm.as_ref().ok_or_else(|| field("seminorm", "required"))?;
            if s.k == 0 || s.k > crate::seminorms::MAX_ORDER {
                return Err(field("seminorm.k", "must be in 1..=4"));
            }
            match &s.h {
                HRule::Fixed(0) => return Err(field("seminorm.h", "must be positive")),
                HRule::Named(n) if n != "sqrt" => {
                    return Err(field("seminorm.h", "must be a positive integer or \"sqrt\""))
                }
                _ => {}
            }
        }
        if self.kind == VanishingExperiment && matches!(self.seminorm, Some(SeminormSpec { h: HRule::Fixed(_), .. })) {
            return Err(field("seminorm.h", "vanishing_experiment always uses H = floor(sqrt(N))"));
        }
        if matches!(self.kind, WwAvg | WwdrAvg) && self.frequency.is_none() {
            return Err(field("frequency", "required"));
        }
        if self.kind == WwSup && self.epsilon.is_none() {
            return Err(field("epsilon", "required"));
        }
        if let Some(e) = self.epsilon {
            if !(e > 0.0 && e.is_finite()) {
                return Err(field("epsilon", "must be positive and finite"));
            }
        }
        if let Some(t) = self.tolerance {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(field("tolerance", "must be nonnegative and finite"));
            }
        }
        if self.kind == DualSystemAvg {
            let d = self.dual.as_ref().ok_or_else(|| field("dual", "required"))?;
            let s = d.system.build().map_err(|e| field("dual.system", e.to_string()))?;
            if !(1..=3).contains(&d.g_list.len()) {
                return Err(field("dual.g_list", "takes 1 to 3 functions"));
            }
            for g in &d.g_list {
                g.build(s.dim()).map_err(|e| field("dual.g_list", e.to_string()))?;
            }
        }

        let mut nums: Vec<f64> = self.x0.iter().flatten().copied().collect();
        nums.extend(self.frequency);
        for o in [&self.obs1, &self.obs2].into_iter().flatten() {
            obs_numbers(o, &mut nums);
        }
        if let Some(w) = &self.weight {
            w.numbers(&mut nums);
        }
        if let Some(SystemSpec::RotationTorus { alpha }) = &self.system {
            nums.extend(alpha.iter().map(Param::value));
        }
        if let Some(SystemSpec::AnzaiSkew { alpha }) = &self.system {
            nums.push(alpha.value());
        }
        if nums.iter().any(|v| !v.is_finite()) {
            return Err(field("config", "all numeric fields must be finite"));
        }
        for (i, a) in self.assertions.iter().enumerate() {
            let ok = match a {
                Assertion::Compare { value, .. } | Assertion::Every { value, .. } => value.is_finite(),
                Assertion::Range { lo, hi, .. } => lo <= hi,
                _ => true,
            };
            if !ok {
                return Err(field(&format!("assertions[{i}]"), "thresholds must be finite with lo <= hi"));
            }
        }
        Ok(())
    }
}

/// Real coordinates, or integer residues for lattice systems.
pub fn point_for(system: &System, coords: &[f64]) -> Result<Point> {
    match system.modulus() {
        Some(q) => {
            if coords.len() != 2 || coords.iter().any(|c| c.fract() != 0.0 || *c < 0.0 || *c >= q as f64) {
                return Err(Error::InvalidPoint(format!(
                    "lattice points are two integer residues in [0, {q})"
                )));
            }
            Point::lattice(coords[0] as u64, coords[1] as u64, q)
        }
        None => Point::real(coords.to_vec()),
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    ExperimentConfig::from_json(&text, &path.to_string_lossy())
}
