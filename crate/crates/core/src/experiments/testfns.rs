//! Seeded test functions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{TestFunctionKind, TestFunctionSpec};
use crate::error::Result;
use crate::grid::{Grid, SampledFunction};

/// Generator for case `case`, slot `slot` (0 or 1 for a pair).
fn rng_for(seed: u64, case: usize, slot: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((case as u64) << 4 | slot as u64);
    rng
}

/// `sum c_i chi_{Q_i}` for random dyadic cubes `Q_i` inside the support.
pub fn indicator_sum(grid: Grid, spec: &TestFunctionSpec, rng: &mut impl Rng) -> Result<SampledFunction> {
    let dim = grid.dim();
    let coarsest = (-spec.support.log2()).ceil() as i32;
    let finest = (spec.finest_level as i32).max(coarsest);
    let terms: Vec<([f64; 2], f64, f64)> = (0..spec.terms.max(1))
        .map(|_| {
            let level = rng.gen_range(coarsest..=finest);
            let side = 2f64.powi(-level);
            let slots = ((2.0 * spec.support / side) as i64).max(1);
            let mut lower = [0.0; 2];
            for l in lower.iter_mut().take(dim) {
                *l = -spec.support + side * rng.gen_range(0..slots) as f64;
            }
            let c = rng.gen_range(0.0..spec.max_coefficient).max(1e-3);
            (lower, side, c)
        })
        .collect();
    SampledFunction::from_fn(grid, |x| {
        terms
            .iter()
            .filter(|(lo, side, _)| (0..dim).all(|i| x[i] >= lo[i] && x[i] < lo[i] + side))
            .fold(0.0, |acc, t| acc + t.2)
    })
}

/// `c |x - x0|^-beta` on a ball, with `beta < 1/2`.
pub fn power_profile(grid: Grid, spec: &TestFunctionSpec, rng: &mut impl Rng) -> Result<SampledFunction> {
    let beta = rng.gen_range(0.05..0.3);
    let c = rng.gen_range(0.2..spec.max_coefficient);
    let r = spec.support * rng.gen_range(0.25..1.0);
    SampledFunction::from_fn(grid, |x| {
        let d = x[..grid.dim()].iter().map(|v| v * v).sum::<f64>().sqrt();
        if d < r {
            c * d.powf(-beta)
        } else {
            0.0
        }
    })
}

/// `c cos^2(pi |x - x0| / (2 r))` on `|x - x0| < r`.
pub fn bump(grid: Grid, spec: &TestFunctionSpec, rng: &mut impl Rng) -> Result<SampledFunction> {
    let dim = grid.dim();
    let r = spec.support * rng.gen_range(0.2..0.6);
    let mut center = [0.0; 2];
    for v in center.iter_mut().take(dim) {
        *v = rng.gen_range(-spec.support + r..spec.support - r);
    }
    let c = rng.gen_range(0.2..spec.max_coefficient);
    SampledFunction::from_fn(grid, |x| {
        let d = (0..dim).map(|i| (x[i] - center[i]).powi(2)).sum::<f64>().sqrt();
        if d < r {
            c * (std::f64::consts::FRAC_PI_2 * d / r).cos().powi(2)
        } else {
            0.0
        }
    })
}

/// One test function. `Mixed` cycles indicators, indicators, power, bump.
pub fn test_function(
    grid: Grid,
    spec: &TestFunctionSpec,
    seed: u64,
    case: usize,
    slot: usize,
) -> Result<SampledFunction> {
    let mut rng = rng_for(seed, case, slot);
    let kind = match spec.kind {
        TestFunctionKind::Mixed => match (case + slot) % 4 {
            0 | 1 => TestFunctionKind::Indicators,
            2 => TestFunctionKind::Power,
            _ => TestFunctionKind::Bump,
        },
        k => k,
    };
    match kind {
        TestFunctionKind::Power => power_profile(grid, spec, &mut rng),
        TestFunctionKind::Bump => bump(grid, spec, &mut rng),
        _ => indicator_sum(grid, spec, &mut rng),
    }
}

pub fn test_pair(
    grid: Grid,
    spec: &TestFunctionSpec,
    seed: u64,
    case: usize,
) -> Result<(SampledFunction, SampledFunction)> {
    Ok((
        test_function(grid, spec, seed, case, 0)?,
        test_function(grid, spec, seed, case, 1)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_refinement_invariant() {
        let spec = TestFunctionSpec {
            kind: TestFunctionKind::Indicators,
            ..TestFunctionSpec::default()
        };
        let coarse = Grid::new(1, 2.0, 3).unwrap();
        let fine = Grid::new(1, 2.0, 5).unwrap();
        for case in 0..10 {
            let a = test_function(coarse, &spec, 11, case, 0).unwrap();
            let b = test_function(coarse, &spec, 11, case, 0).unwrap();
            assert_eq!(a, b);
            let f = test_function(fine, &spec, 11, case, 0).unwrap();
            for c in 0..fine.cell_count() {
                assert_eq!(f.get(c), a.get(c / 4));
            }
            assert!(a.values().iter().all(|&v| v >= 0.0));
        }
        let (x, y) = test_pair(coarse, &spec, 11, 0).unwrap();
        assert_ne!(x, y);
    }

    #[test]
    fn mixed_family_is_supported_and_nonnegative() {
        let spec = TestFunctionSpec::default();
        for dim in [1, 2] {
            let g = Grid::new(dim, 2.0, 3).unwrap();
            for case in 0..8 {
                let f = test_function(g, &spec, 3, case, 0).unwrap();
                assert!(f.max_abs() > 0.0);
                for c in 0..g.cell_count() {
                    let x = g.center(c);
                    if x[..dim].iter().any(|v| v.abs() > spec.support) {
                        assert_eq!(f.get(c), 0.0);
                    }
                    assert!(f.get(c) >= 0.0);
                }
            }
        }
    }
}
