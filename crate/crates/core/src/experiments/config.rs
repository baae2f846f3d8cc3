//! Scenario configuration. Every assertion threshold lives here.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::Exponent;
use crate::grid::Grid;
use crate::norms::NormConfig;
use crate::weights::Weight;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    NormSanity,
    NormLemmas,
    Holder,
    Pointwise,
    ApSweep,
    Characterization,
    Necessity,
    Sufficiency,
    CzdVerify,
    OneThird,
    SioDomination,
}

impl Scenario {
    pub const ALL: [Scenario; 11] = [
        Scenario::NormSanity,
        Scenario::NormLemmas,
        Scenario::Holder,
        Scenario::Pointwise,
        Scenario::ApSweep,
        Scenario::Characterization,
        Scenario::Necessity,
        Scenario::Sufficiency,
        Scenario::CzdVerify,
        Scenario::OneThird,
        Scenario::SioDomination,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Scenario::NormSanity => "norm-sanity",
            Scenario::NormLemmas => "norm-lemmas",
            Scenario::Holder => "holder",
            Scenario::Pointwise => "pointwise",
            Scenario::ApSweep => "ap-sweep",
            Scenario::Characterization => "characterization",
            Scenario::Necessity => "necessity",
            Scenario::Sufficiency => "sufficiency",
            Scenario::CzdVerify => "czd-verify",
            Scenario::OneThird => "one-third",
            Scenario::SioDomination => "sio-domination",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|s| s.name() == name)
            .ok_or_else(|| Error::InvalidParameter(format!("scenario: unknown scenario {name:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dim: usize,
    pub half_width: f64,
    pub cell_exponent: u32,
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid> {
        Grid::new(self.dim, self.half_width, self.cell_exponent)
    }

    pub fn with(&self, half_width: f64, cell_exponent: u32) -> GridSpec {
        GridSpec {
            half_width,
            cell_exponent,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ExponentSpec {
    Constant { p: f64 },
    SmoothBump { base: f64, amplitude: f64, frequency: f64 },
    RadialLog { p_infty: f64, amplitude: f64 },
    LogCusp { base: f64, amplitude: f64 },
    Piecewise { left: f64, right: f64 },
}

impl ExponentSpec {
    pub fn build(&self, grid: Grid) -> Result<Exponent> {
        match *self {
            ExponentSpec::Constant { p } => Exponent::constant(grid, p),
            ExponentSpec::SmoothBump {
                base,
                amplitude,
                frequency,
            } => Exponent::smooth_bump(grid, base, amplitude, frequency),
            ExponentSpec::RadialLog { p_infty, amplitude } => Exponent::radial_log(grid, p_infty, amplitude),
            ExponentSpec::LogCusp { base, amplitude } => Exponent::log_cusp(grid, base, amplitude),
            ExponentSpec::Piecewise { left, right } => Exponent::piecewise(grid, left, right),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, ExponentSpec::Constant { .. })
    }
}

fn shorthand_args(text: &str, arity: usize) -> Result<(&str, Vec<f64>)> {
    let (kind, rest) = text.split_once(':').unwrap_or((text, ""));
    let args: Vec<f64> = if rest.is_empty() {
        Vec::new()
    } else {
        rest.split(',')
            .map(|a| a.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::InvalidParameter(format!("{text:?}: {e}")))?
    };
    if args.len() != arity {
        return Err(Error::InvalidParameter(format!(
            "{text:?}: {kind} takes {arity} argument(s), got {}",
            args.len()
        )));
    }
    Ok((kind, args))
}

fn arity(kind: &str, table: &[(&str, usize)]) -> Result<usize> {
    table.iter().find(|t| t.0 == kind).map(|t| t.1).ok_or_else(|| {
        let names: Vec<&str> = table.iter().map(|t| t.0).collect();
        Error::InvalidParameter(format!("unknown kind {kind:?}, expected one of {}", names.join(", ")))
    })
}

/// `const:2`, `bump:2.5,0.8,1`, `radial-log:2,1`, `log-cusp:2,1`, `piecewise:1.5,4`.
impl std::str::FromStr for ExponentSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let kind = s.split(':').next().unwrap_or("");
        let n = arity(kind, &[("const", 1), ("bump", 3), ("radial-log", 2), ("log-cusp", 2), ("piecewise", 2)])?;
        let (kind, a) = shorthand_args(s, n)?;
        Ok(match kind {
            "const" => ExponentSpec::Constant { p: a[0] },
            "bump" => ExponentSpec::SmoothBump {
                base: a[0],
                amplitude: a[1],
                frequency: a[2],
            },
            "radial-log" => ExponentSpec::RadialLog {
                p_infty: a[0],
                amplitude: a[1],
            },
            "log-cusp" => ExponentSpec::LogCusp {
                base: a[0],
                amplitude: a[1],
            },
            _ => ExponentSpec::Piecewise { left: a[0], right: a[1] },
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WeightSpec {
    Constant { c: f64 },
    Power { a: f64 },
    ShiftedPower { a: f64 },
    PerturbedPower { a: f64, eps: f64, frequency: f64 },
}

impl WeightSpec {
    pub fn build(&self, grid: Grid) -> Result<Weight> {
        match *self {
            WeightSpec::Constant { c } => Weight::constant(grid, c),
            WeightSpec::Power { a } => Weight::power(grid, a),
            WeightSpec::ShiftedPower { a } => Weight::shifted_power(grid, a),
            WeightSpec::PerturbedPower { a, eps, frequency } => {
                Weight::power(grid, a)?.perturbed(eps, frequency)
            }
        }
    }
}

/// `const:1`, `power:0.25`, `shifted-power:0.5`, `perturbed:0.25,0.3,4`.
impl std::str::FromStr for WeightSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let kind = s.split(':').next().unwrap_or("");
        let n = arity(kind, &[("const", 1), ("power", 1), ("shifted-power", 1), ("perturbed", 3)])?;
        let (kind, a) = shorthand_args(s, n)?;
        Ok(match kind {
            "const" => WeightSpec::Constant { c: a[0] },
            "power" => WeightSpec::Power { a: a[0] },
            "shifted-power" => WeightSpec::ShiftedPower { a: a[0] },
            _ => WeightSpec::PerturbedPower {
                a: a[0],
                eps: a[1],
                frequency: a[2],
            },
        })
    }
}

/// A bilinear weight-exponent configuration `(w1, w2, p1, p2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TripleSpec {
    pub label: String,
    pub w1: WeightSpec,
    pub w2: WeightSpec,
    pub p1: ExponentSpec,
    pub p2: ExponentSpec,
}

impl TripleSpec {
    pub fn power(label: &str, a: f64, b: f64, p1: f64, p2: f64) -> Self {
        TripleSpec {
            label: label.to_string(),
            w1: WeightSpec::Power { a },
            w2: WeightSpec::Power { a: b },
            p1: ExponentSpec::Constant { p: p1 },
            p2: ExponentSpec::Constant { p: p2 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestFunctionKind {
    /// Sums of weighted dyadic indicators, mixed with the other kinds.
    Mixed,
    Indicators,
    Power,
    Bump,
}

/// Seeded test functions. Indicator sums use dyadic cubes of side at least
/// `2^-finest_level`, so they are identical on every grid with
/// `cell_exponent >= finest_level`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestFunctionSpec {
    pub kind: TestFunctionKind,
    pub terms: usize,
    pub finest_level: u32,
    /// Functions live inside `[-support, support)^dim`.
    pub support: f64,
    pub max_coefficient: f64,
}

impl Default for TestFunctionSpec {
    fn default() -> Self {
        Self {
            kind: TestFunctionKind::Mixed,
            terms: 6,
            finest_level: 2,
            support: 1.0,
            max_coefficient: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SioSpec {
    pub kernel: String,
    pub bump_radius: f64,
    pub delta: f64,
    /// Cells where the bilinear maximal function is at most this are skipped.
    pub floor: f64,
    pub kernel_samples: usize,
    pub exclusion: f64,
    pub truncation: Option<f64>,
    pub trials: usize,
}

impl Default for SioSpec {
    fn default() -> Self {
        Self {
            kernel: "odd".into(),
            bump_radius: 0.5,
            delta: 0.25,
            floor: 1e-12,
            kernel_samples: 20000,
            exclusion: 1.0,
            truncation: None,
            trials: 20,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CzdSpec {
    /// `None` selects `2^(2 dim + 1)`.
    pub base: Option<f64>,
}

/// Thresholds for every assertion a scenario makes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Thresholds {
    /// Relative error against closed-form norms.
    pub norm_rel_error: f64,
    /// Absolute error of the two-piece golden-ratio case.
    pub golden_abs_error: f64,
    /// Relative slack in the norm lemma checks.
    pub lemma_rel_tol: f64,
    /// Slack added to Hölder constants.
    pub holder_slack: f64,
    /// Absolute error of unit-weight constants.
    pub unit_constant_error: f64,
    /// Largest relative change per doubling for a finite constant.
    pub stable_change: f64,
    /// Smallest growth per domain doubling of a diverging weight constant.
    pub ap_growth: f64,
    /// Growth per doubling at or above which a constant is called divergent.
    pub divergence_growth: f64,
    /// Largest relative change of the coupling constants under refinement.
    pub coupling_change: f64,
    /// Smallest growth per doubling of the diverging necessity member.
    pub necessity_growth: f64,
    /// Largest relative change of the sufficiency ratio per refinement.
    pub sufficiency_change: f64,
    /// CZ density floor on interior cubes.
    pub czd_alpha: f64,
    /// Largest relative change of the one-third constant across refinements.
    pub one_third_change: f64,
    /// Factorization oracle agreement.
    pub factorization_error: f64,
    /// Largest relative change of the sharp-domination constant.
    pub sharp_change: f64,
    /// Recorded bound on the weighted singular integral ratio.
    pub weighted_sio_bound: f64,
    /// Recorded bound on the sharp-domination constant over random trials.
    pub sharp_trial_bound: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            norm_rel_error: 1e-8,
            golden_abs_error: 1e-8,
            lemma_rel_tol: 1e-8,
            holder_slack: 1e-8,
            unit_constant_error: 1e-6,
            stable_change: 0.10,
            ap_growth: 1.5,
            divergence_growth: 1.05,
            coupling_change: 0.25,
            necessity_growth: 1.3,
            sufficiency_change: 0.05,
            czd_alpha: 0.5,
            one_third_change: 0.10,
            factorization_error: 1e-12,
            sharp_change: 0.15,
            weighted_sio_bound: 2.0,
            sharp_trial_bound: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    pub dir: Option<PathBuf>,
    pub csv: bool,
    pub json: bool,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            dir: None,
            csv: true,
            json: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub seed: u64,
    pub grid: GridSpec,
    /// Cell exponents `m` for refinement studies.
    #[serde(default)]
    pub refinements: Vec<u32>,
    /// Half widths `L` for domain-doubling studies.
    #[serde(default)]
    pub domains: Vec<f64>,
    pub cases: usize,
    #[serde(default)]
    pub norm: NormConfig,
    #[serde(default)]
    pub exponents: Vec<ExponentSpec>,
    #[serde(default)]
    pub triples: Vec<TripleSpec>,
    /// Scalar weight exponents `a` of `|x|^a` for the power sweep.
    #[serde(default)]
    pub power_exponents: Vec<f64>,
    /// Members of `power_exponents` expected to stay bounded.
    #[serde(default)]
    pub stable_power_exponents: Vec<f64>,
    /// Members of `power_exponents` expected to blow up.
    #[serde(default)]
    pub divergent_power_exponents: Vec<f64>,
    #[serde(default)]
    pub test_functions: TestFunctionSpec,
    #[serde(default)]
    pub czd: CzdSpec,
    #[serde(default)]
    pub sio: SioSpec,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub output: OutputSpec,
}

fn lh_exponents() -> Vec<ExponentSpec> {
    vec![
        ExponentSpec::SmoothBump {
            base: 2.5,
            amplitude: 0.8,
            frequency: 1.0,
        },
        ExponentSpec::RadialLog {
            p_infty: 2.0,
            amplitude: 1.0,
        },
    ]
}

impl ScenarioConfig {
    /// The configuration each scenario runs with when no file is given.
    pub fn default_for(scenario: Scenario) -> Self {
        let base = ScenarioConfig {
            scenario,
            seed: 0,
            grid: GridSpec {
                dim: 1,
                half_width: 2.0,
                cell_exponent: 6,
            },
            refinements: Vec::new(),
            domains: Vec::new(),
            cases: 0,
            norm: NormConfig::default(),
            exponents: Vec::new(),
            triples: Vec::new(),
            power_exponents: Vec::new(),
            stable_power_exponents: Vec::new(),
            divergent_power_exponents: Vec::new(),
            test_functions: TestFunctionSpec::default(),
            czd: CzdSpec::default(),
            sio: SioSpec::default(),
            thresholds: Thresholds::default(),
            output: OutputSpec::default(),
        };
        match scenario {
            Scenario::NormSanity => ScenarioConfig { cases: 50, ..base },
            Scenario::NormLemmas | Scenario::Holder => ScenarioConfig {
                cases: 100,
                exponents: {
                    let mut e = lh_exponents();
                    e.push(ExponentSpec::LogCusp {
                        base: 2.0,
                        amplitude: 1.0,
                    });
                    e.push(ExponentSpec::Piecewise { left: 1.5, right: 4.0 });
                    e
                },
                ..base
            },
            Scenario::Pointwise => ScenarioConfig { cases: 50, ..base },
            Scenario::ApSweep | Scenario::Necessity => ScenarioConfig {
                grid: GridSpec {
                    dim: 1,
                    half_width: 1.0,
                    cell_exponent: 4,
                },
                domains: vec![1.0, 2.0, 4.0, 8.0],
                power_exponents: vec![0.0, 0.25, 0.5, 0.75],
                stable_power_exponents: vec![0.0, 0.25],
                divergent_power_exponents: vec![0.75],
                ..base
            },
            Scenario::Characterization => ScenarioConfig {
                grid: GridSpec {
                    dim: 1,
                    half_width: 1.0,
                    cell_exponent: 3,
                },
                domains: vec![1.0, 2.0, 4.0, 8.0],
                refinements: vec![3, 4],
                triples: [
                    ("finite-0", 0.0, 0.0),
                    ("finite-1", 0.1, -0.1),
                    ("finite-2", 0.25, 0.0),
                    ("finite-3", 0.2, 0.2),
                    ("finite-4", -0.3, 0.1),
                    ("finite-5", 0.3, -0.5),
                    ("divergent-0", 0.75, 0.0),
                    ("divergent-1", 0.0, 0.8),
                    ("divergent-2", -0.9, -0.6),
                    ("divergent-3", 0.7, 0.7),
                ]
                .into_iter()
                .map(|(l, a, b)| TripleSpec::power(l, a, b, 2.0, 2.0))
                .collect(),
                ..base
            },
            Scenario::Sufficiency => ScenarioConfig {
                cases: 30,
                refinements: vec![4, 5, 6],
                triples: vec![
                    TripleSpec::power("unweighted", 0.0, 0.0, 2.0, 2.0),
                    TripleSpec::power("power", 0.2, -0.1, 2.0, 3.0),
                    TripleSpec {
                        label: "variable".into(),
                        w1: WeightSpec::Power { a: 0.1 },
                        w2: WeightSpec::Constant { c: 1.0 },
                        p1: lh_exponents()[0],
                        p2: lh_exponents()[1],
                    },
                ],
                ..base
            },
            Scenario::CzdVerify => ScenarioConfig {
                cases: 20,
                triples: vec![TripleSpec::power("power", 0.2, -0.1, 2.0, 3.0)],
                ..base
            },
            Scenario::OneThird => ScenarioConfig {
                cases: 10,
                refinements: vec![4, 5, 6],
                ..base
            },
            Scenario::SioDomination => ScenarioConfig {
                grid: GridSpec {
                    dim: 1,
                    half_width: 2.0,
                    cell_exponent: 5,
                },
                cases: 10,
                refinements: vec![4, 5, 6],
                triples: vec![TripleSpec::power("power", 0.2, -0.1, 2.0, 3.0)],
                ..base
            },
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig =
            serde_json::from_str(text).map_err(|e| Error::InvalidParameter(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configs always serialize")
    }

    /// Checks field ranges; errors name the offending field path.
    pub fn validate(&self) -> Result<()> {
        let bad = |path: &str, msg: String| Err(Error::InvalidParameter(format!("{path}: {msg}")));
        if let Err(e) = self.grid.build() {
            return bad("grid", e.to_string());
        }
        for (i, &m) in self.refinements.iter().enumerate() {
            if let Err(e) = self.grid.with(self.grid.half_width, m).build() {
                return bad(&format!("refinements[{i}]"), e.to_string());
            }
        }
        for (i, &l) in self.domains.iter().enumerate() {
            if let Err(e) = self.grid.with(l, self.grid.cell_exponent).build() {
                return bad(&format!("domains[{i}]"), e.to_string());
            }
        }
        if !(self.norm.tol > 0.0) {
            return bad("norm.tol", format!("must be positive, got {}", self.norm.tol));
        }
        let grid = self.grid.build()?;
        for (i, e) in self.exponents.iter().enumerate() {
            if let Err(err) = e.build(grid) {
                return bad(&format!("exponents[{i}]"), err.to_string());
            }
        }
        for (i, t) in self.triples.iter().enumerate() {
            for (field, res) in [
                ("w1", t.w1.build(grid).map(|_| ())),
                ("w2", t.w2.build(grid).map(|_| ())),
                ("p1", t.p1.build(grid).map(|_| ())),
                ("p2", t.p2.build(grid).map(|_| ())),
            ] {
                if let Err(err) = res {
                    return bad(&format!("triples[{i}].{field}"), err.to_string());
                }
            }
        }
        for (field, list) in [
            ("stable_power_exponents", &self.stable_power_exponents),
            ("divergent_power_exponents", &self.divergent_power_exponents),
        ] {
            if let Some(i) = list.iter().position(|a| !self.power_exponents.contains(a)) {
                return bad(&format!("{field}[{i}]"), "must also appear in power_exponents".into());
            }
        }
        let tf = &self.test_functions;
        if !(tf.support > 0.0 && tf.support <= self.grid.half_width) {
            return bad(
                "test_functions.support",
                format!("must lie in (0, {}], got {}", self.grid.half_width, tf.support),
            );
        }
        if !(tf.max_coefficient > 0.0) {
            return bad("test_functions.max_coefficient", "must be positive".into());
        }
        if let Some(a) = self.czd.base {
            let min = 2f64.powi(2 * self.grid.dim as i32);
            if !(a > min) {
                return bad("czd.base", format!("must exceed {min}, got {a}"));
            }
        }
        if !(self.sio.delta > 0.0 && self.sio.delta < 0.5) {
            return bad("sio.delta", format!("must lie in (0, 1/2), got {}", self.sio.delta));
        }
        if !(self.sio.exclusion >= 0.0) {
            return bad("sio.exclusion", "must be nonnegative".into());
        }
        if !(self.thresholds.czd_alpha > 0.0 && self.thresholds.czd_alpha < 1.0) {
            return bad("thresholds.czd_alpha", "must lie in (0, 1)".into());
        }
        Ok(())
    }
}
