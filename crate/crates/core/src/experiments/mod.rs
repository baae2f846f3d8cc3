//! Reproducible numerical experiments with pass/fail verdicts.

pub mod config;
pub mod report;
pub mod scenarios;
pub mod testfns;

use serde::{Deserialize, Serialize};

pub use config::{Scenario, ScenarioConfig, Thresholds};
pub use report::{Assertion, Relation, Report, Row};
pub use scenarios::run_scenario;

use crate::error::Result;
use crate::exponents::{combine, Exponent};
use crate::grid::{CubeFamily, SampledFunction};
use crate::norms::{norm_on_cells, NormConfig};
use crate::weights::{max_over_cubes, VectorWeight, WeightConstant};

/// Test pair used to bound the averaging operator from below on one cube.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WitnessStrategy {
    /// `f_j = sigma_j chi_Q`, extremal for constant exponents.
    #[default]
    Sigma,
    /// `f_j = w_j^-1 chi_Q`.
    InverseWeight,
}

/// `sup_Q ||A_Q(f1, f2) w||_p / (||f1 w1||_p1 ||f2 w2||_p2)` over the given
/// witnesses. A lower bound for the norm of the averaging operators, which
/// is finite whenever the bilinear weight condition holds.
pub fn necessity_ratio(
    vw: &VectorWeight,
    p1: &Exponent,
    p2: &Exponent,
    families: &[CubeFamily],
    strategy: WitnessStrategy,
    cfg: &NormConfig,
) -> Result<WeightConstant> {
    let p = combine(p1, p2)?;
    let (f1, f2) = match strategy {
        WitnessStrategy::Sigma => (vw.sigma1.samples().clone(), vw.sigma2.samples().clone()),
        WitnessStrategy::InverseWeight => (vw.w1.recip()?.samples().clone(), vw.w2.recip()?.samples().clone()),
    };
    let g1 = f1.mul(vw.w1.samples())?;
    let g2 = f2.mul(vw.w2.samples())?;
    let w: &SampledFunction = vw.w.samples();
    max_over_cubes(families, |q| {
        let cells = q.cells();
        let n = cells.len() as f64;
        let a1 = cells.iter().map(|&c| f1.get(c)).sum::<f64>() / n;
        let a2 = cells.iter().map(|&c| f2.get(c)).sum::<f64>() / n;
        let num = a1 * a2 * norm_on_cells(w, cells, &p, cfg)?.value;
        let den = norm_on_cells(&g1, cells, p1, cfg)?.value * norm_on_cells(&g2, cells, p2, cfg)?.value;
        Ok(num / den)
    })
}
