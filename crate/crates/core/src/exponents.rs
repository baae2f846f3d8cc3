//! Variable exponents `p(.)` and their log-Hölder diagnostics.

use std::f64::consts::E;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, SampledFunction};

/// Estimated log-Hölder constants `(C_0, C_inf)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LhConstants {
    pub local: f64,
    pub infinity: f64,
}

/// Pair sampling used by [`Exponent::lh_diagnostics`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LhSampling {
    /// Only pairs closer than this enter the local estimate.
    pub window_radius: f64,
    /// Cap on the number of enumerated window pairs; base cells are
    /// strided once the cap would be exceeded.
    pub max_window_pairs: usize,
    /// Extra pairs drawn at random inside the window.
    pub random_pairs: usize,
    pub seed: u64,
}

impl Default for LhSampling {
    fn default() -> Self {
        Self {
            window_radius: 0.5,
            max_window_pairs: 4_000_000,
            random_pairs: 20_000,
            seed: 0x1b_5eed,
        }
    }
}

/// A sampled exponent with `0 < p_- <= p(x) <= p_+ < inf`.
#[derive(Debug, Clone)]
pub struct Exponent {
    samples: SampledFunction,
    p_minus: f64,
    p_plus: f64,
    p_infty: f64,
    lh: OnceLock<LhConstants>,
}

impl Exponent {
    /// Wraps positive samples; `p_inf` defaults to the mean over the
    /// outermost ring of cells.
    pub fn new(samples: SampledFunction) -> Result<Self> {
        if let Some(cell) = samples.values().iter().position(|&p| p <= 0.0) {
            return Err(Error::InvalidExponent(format!(
                "exponent must be positive, got {} at cell {cell}",
                samples.get(cell)
            )));
        }
        let grid = *samples.grid();
        let (sum, count) = (0..grid.cell_count())
            .filter(|&c| grid.is_boundary_cell(c))
            .fold((0.0, 0usize), |(s, n), c| (s + samples.get(c), n + 1));
        let p_infty = sum / count as f64;
        Ok(Self {
            p_minus: samples.min(),
            p_plus: samples.max(),
            p_infty,
            samples,
            lh: OnceLock::new(),
        })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        Self::new(SampledFunction::from_fn(grid, f)?)
    }

    /// Overrides the declared limit value at infinity.
    pub fn with_p_infty(mut self, p_infty: f64) -> Result<Self> {
        if !(p_infty.is_finite() && p_infty > 0.0) {
            return Err(Error::InvalidExponent(format!(
                "p_inf must be positive and finite, got {p_infty}"
            )));
        }
        self.p_infty = p_infty;
        self.lh = OnceLock::new();
        Ok(self)
    }

    pub fn constant(grid: Grid, p: f64) -> Result<Self> {
        Self::new(SampledFunction::constant(grid, p)?)?.with_p_infty(p)
    }

    /// `base + amplitude * cos(pi * frequency * |x|)`; Lipschitz, hence LH_0.
    pub fn smooth_bump(grid: Grid, base: f64, amplitude: f64, frequency: f64) -> Result<Self> {
        Self::from_fn(grid, |x| {
            base + amplitude * (std::f64::consts::PI * frequency * norm(x)).cos()
        })
    }

    /// `p_inf + amplitude / ln(e + |x|)`, the standard LH_inf profile.
    pub fn radial_log(grid: Grid, p_infty: f64, amplitude: f64) -> Result<Self> {
        Self::from_fn(grid, |x| p_infty + amplitude / (E + norm(x)).ln())?.with_p_infty(p_infty)
    }

    /// `base + amplitude / ln(e + 1/|x|)`: continuous at the origin with
    /// exactly logarithmic modulus there. See [`Exponent::log_cusp_bound`].
    pub fn log_cusp(grid: Grid, base: f64, amplitude: f64) -> Result<Self> {
        if amplitude < 0.0 || base <= 0.0 {
            return Err(Error::InvalidExponent(
                "log cusp needs base > 0 and amplitude >= 0".into(),
            ));
        }
        Self::from_fn(grid, |x| base + amplitude / (E + 1.0 / norm(x)).ln())
    }

    /// Upper bound for the local log-Hölder constant of [`Exponent::log_cusp`].
    ///
    /// `g(r) = 1/ln(e + 1/r)` is increasing and concave with `g(0) = 0`, so
    /// `|g(|x|) - g(|y|)| <= g(|x - y|)`, and `g(d) (-ln d) <= 1` for `d < 1`.
    /// With `|1/p - 1/q| <= |p - q| / base^2` this gives `amplitude / base^2`.
    pub fn log_cusp_bound(base: f64, amplitude: f64) -> f64 {
        amplitude / (base * base)
    }

    /// `left` where the first coordinate is negative, `right` elsewhere.
    /// Jumps across `x_1 = 0`, so it is not log-Hölder continuous.
    pub fn piecewise(grid: Grid, left: f64, right: f64) -> Result<Self> {
        Self::from_fn(grid, |x| if x[0] < 0.0 { left } else { right })
    }

    pub fn samples(&self) -> &SampledFunction {
        &self.samples
    }

    pub fn grid(&self) -> &Grid {
        self.samples.grid()
    }

    pub fn value(&self, cell: usize) -> f64 {
        self.samples.get(cell)
    }

    pub fn values(&self) -> &[f64] {
        self.samples.values()
    }

    pub fn p_minus(&self) -> f64 {
        self.p_minus
    }

    pub fn p_plus(&self) -> f64 {
        self.p_plus
    }

    pub fn p_infty(&self) -> f64 {
        self.p_infty
    }

    pub fn is_constant(&self) -> bool {
        self.p_minus == self.p_plus
    }

    /// `p_-(E)` over a cell set.
    pub fn min_on(&self, cells: &[usize]) -> f64 {
        cells
            .iter()
            .map(|&c| self.value(c))
            .fold(f64::INFINITY, f64::min)
    }

    /// `p_+(E)` over a cell set.
    pub fn max_on(&self, cells: &[usize]) -> f64 {
        cells
            .iter()
            .map(|&c| self.value(c))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `p'(x) = p(x) / (p(x) - 1)`.
    pub fn conjugate(&self) -> Result<Self> {
        if self.p_minus <= 1.0 {
            return Err(Error::InvalidExponent(format!(
                "conjugate exponent is unbounded for p_- = {} <= 1",
                self.p_minus
            )));
        }
        let samples = self.samples.map(conjugate_value)?;
        let p_infty = if self.p_infty > 1.0 {
            conjugate_value(self.p_infty)
        } else {
            conjugate_value(self.p_minus)
        };
        Self::new(samples)?.with_p_infty(p_infty)
    }

    /// Pointwise `s * p(x)` for `s > 0`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "exponent scale must be positive, got {s}"
            )));
        }
        Self::new(self.samples.map(|p| s * p)?)?.with_p_infty(s * self.p_infty)
    }

    /// Harmonic mean `p_Q` with `1/p_Q` the average of `1/p` over `cells`.
    pub fn harmonic_mean(&self, cells: &[usize]) -> f64 {
        let mut s = 0.0;
        for &c in cells {
            s += 1.0 / self.value(c);
        }
        cells.len() as f64 / s
    }

    /// Cached diagnostics with the default sampling.
    pub fn lh_constants(&self) -> LhConstants {
        *self
            .lh
            .get_or_init(|| self.lh_diagnostics(&LhSampling::default()))
    }

    /// Estimates `C_0` as the largest `|1/p(x) - 1/p(y)| (-ln|x - y|)` over
    /// sampled pairs with `|x - y| < window_radius`, and `C_inf` as the
    /// largest `|1/p(x) - 1/p_inf| ln(e + |x|)` over all cells.
    pub fn lh_diagnostics(&self, sampling: &LhSampling) -> LhConstants {
        let grid = *self.grid();
        let inv: Vec<f64> = self.values().iter().map(|p| 1.0 / p).collect();

        let infinity = (0..grid.cell_count())
            .map(|c| (inv[c] - 1.0 / self.p_infty).abs() * (E + grid.center_norm(c)).ln())
            .fold(0.0, f64::max);

        let offsets = window_offsets(&grid, sampling.window_radius);
        let n = grid.cells_per_axis() as i64;
        let pair_term = |a: usize, off: (i64, i64)| -> Option<f64> {
            let [i, j] = grid.axis_indices(a);
            let (bi, bj) = (i as i64 + off.0, j as i64 + off.1);
            if bi < 0 || bi >= n || bj < 0 || (grid.dim() == 2 && bj >= n) {
                return None;
            }
            let b = grid.cell_index([bi as usize, bj as usize]);
            let d = grid.distance(a, b);
            Some((inv[a] - inv[b]).abs() * -d.ln())
        };

        let mut local = 0.0f64;
        if !offsets.is_empty() {
            let total = grid.cell_count().saturating_mul(offsets.len());
            let stride = total.div_ceil(sampling.max_window_pairs.max(1)).max(1);
            for a in (0..grid.cell_count()).step_by(stride) {
                for &off in &offsets {
                    if let Some(t) = pair_term(a, off) {
                        local = local.max(t);
                    }
                }
            }
            let mut rng = ChaCha8Rng::seed_from_u64(sampling.seed);
            for _ in 0..sampling.random_pairs {
                let a = rng.gen_range(0..grid.cell_count());
                let off = offsets[rng.gen_range(0..offsets.len())];
                if let Some(t) = pair_term(a, off) {
                    local = local.max(t);
                }
            }
        }
        LhConstants { local, infinity }
    }
}

/// `1/p = 1/p1 + 1/p2` pointwise.
pub fn combine(p1: &Exponent, p2: &Exponent) -> Result<Exponent> {
    let samples = p1
        .samples
        .zip_map(&p2.samples, |_, a, b| 1.0 / (1.0 / a + 1.0 / b))?;
    let p_infty = 1.0 / (1.0 / p1.p_infty + 1.0 / p2.p_infty);
    Exponent::new(samples)?.with_p_infty(p_infty)
}

pub fn conjugate_value(p: f64) -> f64 {
    p / (p - 1.0)
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Lattice offsets in one half plane with Euclidean length below `radius`.
fn window_offsets(grid: &Grid, radius: f64) -> Vec<(i64, i64)> {
    let h = grid.cell_side();
    let r = (radius / h).ceil() as i64;
    let mut out = Vec::new();
    match grid.dim() {
        1 => {
            for dx in 1..=r {
                if (dx as f64) * h < radius {
                    out.push((dx, 0));
                }
            }
        }
        _ => {
            for dy in 0..=r {
                for dx in -r..=r {
                    if dy == 0 && dx <= 0 {
                        continue;
                    }
                    if (dx as f64).hypot(dy as f64) * h < radius {
                        out.push((dx, dy));
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn g1(m: u32) -> Grid {
        Grid::new(1, 2.0, m).unwrap()
    }

    #[test]
    fn conjugate_examples() {
        let g = g1(3);
        let p2 = Exponent::constant(g, 2.0).unwrap().conjugate().unwrap();
        assert!(p2.values().iter().all(|&v| v == 2.0));
        let p4 = Exponent::constant(g, 4.0).unwrap().conjugate().unwrap();
        assert!(p4.values().iter().all(|&v| (v - 4.0 / 3.0).abs() < 1e-15));
        assert!(Exponent::constant(g, 1.0).unwrap().conjugate().is_err());
    }

    #[test]
    fn conjugate_swaps_extremes() {
        let p = Exponent::smooth_bump(g1(4), 2.5, 0.8, 1.3).unwrap();
        let q = p.conjugate().unwrap();
        assert!((q.p_minus() - conjugate_value(p.p_plus())).abs() < 1e-14);
        assert!((q.p_plus() - conjugate_value(p.p_minus())).abs() < 1e-14);
    }

    #[test]
    fn combine_examples() {
        let g = g1(3);
        let two = Exponent::constant(g, 2.0).unwrap();
        assert!(combine(&two, &two).unwrap().values().iter().all(|&v| v == 1.0));
        let three = Exponent::constant(g, 3.0).unwrap();
        let six = Exponent::constant(g, 6.0).unwrap();
        let p = combine(&three, &six).unwrap();
        assert!(p.values().iter().all(|&v| (v - 2.0).abs() < 1e-15));
    }

    #[test]
    fn combine_rejects_grid_mismatch() {
        let a = Exponent::constant(g1(3), 2.0).unwrap();
        let b = Exponent::constant(g1(4), 2.0).unwrap();
        assert_eq!(combine(&a, &b).unwrap_err(), Error::GridMismatch);
    }

    #[test]
    fn harmonic_mean_two_values() {
        // p = 2 on the left half of Q and 4 on the right half.
        let g = Grid::new(1, 1.0, 2).unwrap();
        let p = Exponent::from_fn(g, |x| if x[0] < 0.5 { 2.0 } else { 4.0 }).unwrap();
        let cells: Vec<usize> = (4..8).collect();
        let expected = 1.0 / ((0.5 + 0.5 + 0.25 + 0.25) / 4.0);
        assert!((p.harmonic_mean(&cells) - expected).abs() < 1e-15);
        assert!((expected - 8.0 / 3.0).abs() < 1e-15);
        let c = Exponent::constant(g, 3.0).unwrap();
        assert_eq!(c.harmonic_mean(&cells), 3.0);
    }

    #[test]
    fn constant_has_zero_diagnostics() {
        let lh = Exponent::constant(g1(4), 2.5).unwrap().lh_constants();
        assert_eq!(lh, LhConstants { local: 0.0, infinity: 0.0 });
    }

    #[test]
    fn log_cusp_within_construction_bound() {
        let (base, amp) = (2.0, 1.0);
        for m in [4, 6] {
            let p = Exponent::log_cusp(g1(m), base, amp).unwrap();
            let lh = p.lh_constants();
            assert!(lh.local > 0.0);
            assert!(lh.local <= Exponent::log_cusp_bound(base, amp) * 1.05, "{lh:?}");
        }
    }

    #[test]
    fn jump_grows_under_refinement() {
        let est: Vec<f64> = [2, 3, 4]
            .iter()
            .map(|&m| Exponent::piecewise(g1(m), 2.0, 3.0).unwrap().lh_constants().local)
            .collect();
        assert!(est[0] < est[1] && est[1] < est[2]);
        assert!(est[2] / est[0] >= 1.5, "{est:?}");
        // Adjacent cells across the jump dominate: (1/2 - 1/3) * m ln 2.
        assert!((est[2] - 4.0 * 2f64.ln() / 6.0).abs() < 1e-12);
    }

    #[test]
    fn radial_log_infinity_constant() {
        let (p_inf, amp) = (3.0, 1.5);
        let p = Exponent::radial_log(Grid::new(1, 8.0, 3).unwrap(), p_inf, amp).unwrap();
        let lh = p.lh_constants();
        assert!(lh.infinity > 0.0 && lh.infinity <= amp / (p_inf * p_inf));
    }

    #[test]
    fn two_dimensional_diagnostics() {
        let g = Grid::new(2, 1.0, 3).unwrap();
        let p = Exponent::log_cusp(g, 2.0, 1.0).unwrap();
        assert!(p.lh_constants().local <= Exponent::log_cusp_bound(2.0, 1.0) * 1.05);
        let jump = Exponent::piecewise(g, 2.0, 3.0).unwrap();
        assert!(jump.lh_constants().local > 0.0);
    }

    #[test]
    fn default_p_infty_is_boundary_mean() {
        let p = Exponent::piecewise(g1(3), 2.0, 4.0).unwrap();
        assert_eq!(p.p_infty(), 3.0);
    }

    #[test]
    fn rejects_nonpositive() {
        assert!(Exponent::constant(g1(2), 0.0).is_err());
        assert!(Exponent::smooth_bump(g1(2), 1.0, 2.0, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn conjugate_is_an_involution(base in 1.3f64..4.0, amp in 0.0f64..0.25, freq in 0.1f64..3.0) {
            let p = Exponent::smooth_bump(g1(4), base, amp, freq).unwrap();
            let back = p.conjugate().unwrap().conjugate().unwrap();
            for (a, b) in p.values().iter().zip(back.values()) {
                prop_assert!((a - b).abs() <= 1e-14 * a.max(1.0) * 4.0);
            }
        }

        #[test]
        fn combine_is_symmetric(a in 1.1f64..5.0, b in 1.1f64..5.0, amp in 0.0f64..0.1) {
            let p1 = Exponent::smooth_bump(g1(3), a, amp, 1.0).unwrap();
            let p2 = Exponent::radial_log(g1(3), b, amp).unwrap();
            let l = combine(&p1, &p2).unwrap();
            let r = combine(&p2, &p1).unwrap();
            prop_assert_eq!(l.values(), r.values());
            prop_assert!(l.p_minus() > 0.5);
        }

        #[test]
        fn harmonic_mean_between_extremes(start in 0usize..60, len in 1usize..20, base in 1.2f64..3.0) {
            let p = Exponent::smooth_bump(g1(4), base, 0.15, 2.0).unwrap();
            let cells: Vec<usize> = (start..(start + len).min(p.samples().len())).collect();
            let pq = p.harmonic_mean(&cells);
            prop_assert!(pq >= p.min_on(&cells) * (1.0 - 1e-15));
            prop_assert!(pq <= p.max_on(&cells) * (1.0 + 1e-15));
        }

        #[test]
        fn conjugate_extremes_on_cubes(start in 0usize..60, len in 1usize..20) {
            let p = Exponent::smooth_bump(g1(4), 2.2, 0.6, 1.7).unwrap();
            let q = p.conjugate().unwrap();
            let cells: Vec<usize> = (start..(start + len).min(p.samples().len())).collect();
            prop_assert!((q.min_on(&cells) - conjugate_value(p.max_on(&cells))).abs() < 1e-14);
        }
    }
}
