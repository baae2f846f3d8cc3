//! Modulars and Luxemburg norms of sampled step functions.
//!
//! Every norm here is the exact norm of the step function carried by a
//! [`SampledFunction`]; there is no discretization error, only the
//! bisection tolerance.
//!
//! The modular `lambda -> rho(f / lambda)` is continuous and strictly
//! decreasing when `p_+ < inf`, so the norm is found by bracketing followed
//! by bisection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::Exponent;
use crate::grid::{Grid, SampledFunction};
use crate::weights::Weight;

/// Bisection controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormConfig {
    /// Relative bracket width (and modular residual) at which to stop.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NormConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormResult {
    pub value: f64,
    pub iterations: usize,
    pub bracket: (f64, f64),
    /// `|rho(f / value) - 1|`, zero for the zero function.
    pub residual: f64,
}

impl NormResult {
    fn zero() -> Self {
        Self {
            value: 0.0,
            iterations: 0,
            bracket: (0.0, 0.0),
            residual: 0.0,
        }
    }
}

/// Nonzero cells of a modular `sum v(x) |f(x)|^p(x) * vol`.
#[derive(Debug, Clone)]
pub(crate) struct ModularTerms {
    magnitude: Vec<f64>,
    exponent: Vec<f64>,
    measure: Vec<f64>,
    cell_volume: f64,
}

impl ModularTerms {
    /// Collects `(|f|, p, v)` over `cells`; `measure = None` means Lebesgue.
    pub(crate) fn gather(
        cells: impl IntoIterator<Item = usize>,
        f: impl Fn(usize) -> f64,
        p: &Exponent,
        measure: Option<&[f64]>,
    ) -> Self {
        let mut out = ModularTerms {
            magnitude: Vec::new(),
            exponent: Vec::new(),
            measure: Vec::new(),
            cell_volume: p.grid().cell_volume(),
        };
        for c in cells {
            let a = f(c).abs();
            let v = measure.map_or(1.0, |m| m[c]);
            if a > 0.0 && v > 0.0 {
                out.magnitude.push(a);
                out.exponent.push(p.value(c));
                out.measure.push(v);
            }
        }
        out
    }

    fn is_zero(&self) -> bool {
        self.magnitude.is_empty()
    }

    /// `rho(f / lambda)`, `+inf` on overflow.
    fn eval(&self, lambda: f64) -> f64 {
        let mut s = 0.0;
        for i in 0..self.magnitude.len() {
            s += self.measure[i] * (self.magnitude[i] / lambda).powf(self.exponent[i]);
        }
        let s = s * self.cell_volume;
        if s.is_finite() {
            s
        } else {
            f64::INFINITY
        }
    }

    pub(crate) fn norm(&self, cfg: &NormConfig) -> Result<NormResult> {
        if self.is_zero() {
            return Ok(NormResult::zero());
        }
        if !(cfg.tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "norm tolerance must be positive, got {}",
                cfg.tol
            )));
        }
        let max_mag = self.magnitude.iter().copied().fold(0.0, f64::max);
        let p_minus = self.exponent.iter().copied().fold(f64::INFINITY, f64::min);
        let support: f64 = self.measure.iter().sum::<f64>() * self.cell_volume;
        let mut hi = max_mag * support.powf(1.0 / p_minus);
        if !(hi.is_finite() && hi > 0.0) {
            hi = max_mag;
        }

        // Bracket: rho(f/hi) <= 1 < rho(f/lo).
        let mut iterations = 0;
        while self.eval(hi) > 1.0 {
            hi *= 2.0;
            iterations += 1;
            if iterations > 4096 || !hi.is_finite() {
                return Err(Error::NoConvergence {
                    iterations,
                    lo: hi / 2.0,
                    hi,
                });
            }
        }
        let mut lo = hi / 2.0;
        while self.eval(lo) <= 1.0 {
            hi = lo;
            lo /= 2.0;
            iterations += 1;
            if iterations > 4096 || lo == 0.0 {
                return Err(Error::NoConvergence { iterations, lo, hi });
            }
        }

        let mut steps = 0;
        loop {
            let rho_hi = self.eval(hi);
            let residual = (rho_hi - 1.0).abs();
            let width = (hi - lo) / hi;
            if width <= cfg.tol && residual <= cfg.tol || width <= 4.0 * f64::EPSILON {
                return Ok(NormResult {
                    value: hi,
                    iterations: iterations + steps,
                    bracket: (lo, hi),
                    residual,
                });
            }
            if steps >= cfg.max_iter {
                return Err(Error::NoConvergence {
                    iterations: iterations + steps,
                    lo,
                    hi,
                });
            }
            let mid = 0.5 * (lo + hi);
            if self.eval(mid) > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            steps += 1;
        }
    }
}

/// `rho_p(f) = h^dim * sum |f|^p`.
pub fn modular(f: &SampledFunction, p: &Exponent) -> Result<f64> {
    modular_with_measure(f, p, None)
}

/// `h^dim * sum |f|^p v`, or Lebesgue measure when `v` is `None`.
pub fn modular_with_measure(
    f: &SampledFunction,
    p: &Exponent,
    v: Option<&Weight>,
) -> Result<f64> {
    same_grid(f.grid(), p.grid())?;
    if let Some(v) = v {
        same_grid(f.grid(), v.grid())?;
    }
    let mut s = 0.0;
    for cell in 0..f.len() {
        let a = f.get(cell).abs();
        let term = if a == 0.0 {
            0.0
        } else {
            a.powf(p.value(cell)) * v.map_or(1.0, |w| w.value(cell))
        };
        if !term.is_finite() {
            return Err(Error::ModularOverflow { cell });
        }
        s += term;
    }
    let s = s * f.grid().cell_volume();
    if !s.is_finite() {
        return Err(Error::ModularOverflow { cell: f.len() - 1 });
    }
    Ok(s)
}

/// `||f||_p(.) = inf { lambda > 0 : rho(f / lambda) <= 1 }`.
pub fn luxemburg_norm(f: &SampledFunction, p: &Exponent, cfg: &NormConfig) -> Result<NormResult> {
    same_grid(f.grid(), p.grid())?;
    ModularTerms::gather(0..f.len(), |c| f.get(c), p, None).norm(cfg)
}

/// `||f chi_E||_p(.)` without materializing the restriction.
pub fn norm_on_cells(
    f: &SampledFunction,
    cells: &[usize],
    p: &Exponent,
    cfg: &NormConfig,
) -> Result<NormResult> {
    same_grid(f.grid(), p.grid())?;
    ModularTerms::gather(cells.iter().copied(), |c| f.get(c), p, None).norm(cfg)
}

/// `||chi_E||_p(.)`.
pub fn indicator_norm(cells: &[usize], p: &Exponent, cfg: &NormConfig) -> Result<f64> {
    Ok(ModularTerms::gather(cells.iter().copied(), |_| 1.0, p, None)
        .norm(cfg)?
        .value)
}

/// Norm in `L^p(.)(w)`, i.e. `||f w||_p(.)`.
pub fn weighted_norm(
    f: &SampledFunction,
    w: &Weight,
    p: &Exponent,
    cfg: &NormConfig,
) -> Result<NormResult> {
    same_grid(f.grid(), w.grid())?;
    same_grid(f.grid(), p.grid())?;
    ModularTerms::gather(0..f.len(), |c| f.get(c) * w.value(c), p, None).norm(cfg)
}

/// Norm in `L^p(.)_v`: the modular integrates against `v dx`.
pub fn measure_norm(
    f: &SampledFunction,
    p: &Exponent,
    v: &Weight,
    cfg: &NormConfig,
) -> Result<NormResult> {
    same_grid(f.grid(), v.grid())?;
    same_grid(f.grid(), p.grid())?;
    ModularTerms::gather(0..f.len(), |c| f.get(c), p, Some(v.values())).norm(cfg)
}

/// Relative gap between `|| |f|^s ||_p(.)` and `||f||_{s p(.)}^s`.
pub fn rescale_check(f: &SampledFunction, p: &Exponent, s: f64, cfg: &NormConfig) -> Result<f64> {
    let powered = f.map(|v| v.abs().powf(s))?;
    let lhs = luxemburg_norm(&powered, p, cfg)?.value;
    let rhs = luxemburg_norm(f, &p.scaled(s)?, cfg)?.value.powf(s);
    Ok((lhs - rhs).abs() / lhs.max(rhs).max(f64::MIN_POSITIVE))
}

/// `int |f g| / (||f||_p(.) ||g||_p'(.))`; zero when either norm vanishes.
pub fn holder_defect(
    f: &SampledFunction,
    g: &SampledFunction,
    p: &Exponent,
    cfg: &NormConfig,
) -> Result<f64> {
    let pc = p.conjugate()?;
    let nf = luxemburg_norm(f, p, cfg)?.value;
    let ng = luxemburg_norm(g, &pc, cfg)?.value;
    if nf == 0.0 || ng == 0.0 {
        return Ok(0.0);
    }
    let pairing = f.zip_map(g, |_, a, b| (a * b).abs())?.integral();
    Ok(pairing / (nf * ng))
}

/// `||f g||_p(.) / (||f||_p1(.) ||g||_p2(.))` with `1/p = 1/p1 + 1/p2`.
pub fn two_factor_holder_defect(
    f: &SampledFunction,
    g: &SampledFunction,
    p1: &Exponent,
    p2: &Exponent,
    cfg: &NormConfig,
) -> Result<f64> {
    let p = crate::exponents::combine(p1, p2)?;
    let n1 = luxemburg_norm(f, p1, cfg)?.value;
    let n2 = luxemburg_norm(g, p2, cfg)?.value;
    if n1 == 0.0 || n2 == 0.0 {
        return Ok(0.0);
    }
    Ok(luxemburg_norm(&f.mul(g)?, &p, cfg)?.value / (n1 * n2))
}

fn same_grid(a: &Grid, b: &Grid) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> NormConfig {
        NormConfig::default()
    }

    fn two_piece() -> (SampledFunction, Exponent) {
        let g = Grid::new(1, 2.0, 4).unwrap();
        let f = SampledFunction::indicator(g, |x| (0.0..2.0).contains(&x[0]));
        let p = Exponent::from_fn(g, |x| if x[0] < 1.0 { 1.0 } else { 2.0 }).unwrap();
        (f, p)
    }

    #[test]
    fn modular_examples() {
        let g = Grid::new(1, 1.0, 3).unwrap();
        let chi = SampledFunction::indicator(g, |x| (0.0..1.0).contains(&x[0]));
        let two = Exponent::constant(g, 2.0).unwrap();
        assert_eq!(modular(&chi, &two).unwrap(), 1.0);
        let one = Exponent::constant(g, 1.0).unwrap();
        assert_eq!(modular(&chi, &one).unwrap(), 1.0);

        let (f, p) = two_piece();
        assert_eq!(modular(&f, &p).unwrap(), 2.0);
    }

    #[test]
    fn modular_overflow_is_reported() {
        let g = Grid::new(1, 1.0, 2).unwrap();
        let f = SampledFunction::constant(g, 1e200).unwrap();
        let p = Exponent::constant(g, 3.0).unwrap();
        assert!(matches!(modular(&f, &p), Err(Error::ModularOverflow { .. })));
        // The norm itself is still fine.
        let n = luxemburg_norm(&f, &p, &cfg()).unwrap().value;
        assert!((n / (1e200 * 2f64.powf(1.0 / 3.0)) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn indicator_norm_is_one() {
        let g = Grid::new(1, 1.0, 3).unwrap();
        let chi = SampledFunction::indicator(g, |x| (0.0..1.0).contains(&x[0]));
        let r = luxemburg_norm(&chi, &Exponent::constant(g, 2.0).unwrap(), &cfg()).unwrap();
        assert!((r.value - 1.0).abs() <= 1e-10);
        assert!(r.residual <= 1e-10);
        assert!(r.bracket.0 <= r.value && r.value <= r.bracket.1);
    }

    #[test]
    fn constant_exponent_closed_form() {
        let g = Grid::new(1, 2.0, 4).unwrap();
        let f = SampledFunction::indicator(g, |x| (-0.5..1.25).contains(&x[0]))
            .scale(3.0)
            .unwrap();
        for p0 in [0.7, 1.0, 2.5, 6.0] {
            let p = Exponent::constant(g, p0).unwrap();
            let n = luxemburg_norm(&f, &p, &cfg()).unwrap().value;
            let expected = 3.0 * 1.75f64.powf(1.0 / p0);
            assert!((n / expected - 1.0).abs() <= 1e-8, "p = {p0}");
        }
    }

    #[test]
    fn golden_ratio_for_two_piece_exponent() {
        // 1/lambda + 1/lambda^2 = 1.
        let (f, p) = two_piece();
        let oracle = {
            // fine scan of the defining modular, independent of bisection
            let rho = |l: f64| 1.0 / l + 1.0 / (l * l);
            let mut best = 0.0;
            let mut l = 1.0;
            while l < 2.0 {
                if rho(l) <= 1.0 {
                    best = l;
                    break;
                }
                l += 1e-7;
            }
            best
        };
        let golden = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((oracle - golden).abs() < 2e-7);
        let n = luxemburg_norm(&f, &p, &cfg()).unwrap().value;
        assert!((n - golden).abs() <= 1e-8);
    }

    #[test]
    fn zero_function_has_zero_norm() {
        let g = Grid::new(1, 1.0, 2).unwrap();
        let r = luxemburg_norm(&SampledFunction::zeros(g), &Exponent::constant(g, 2.0).unwrap(), &cfg())
            .unwrap();
        assert_eq!(r, NormResult::zero());
    }

    #[test]
    fn weighted_norm_examples() {
        let g = Grid::new(1, 1.0, 3).unwrap();
        let chi = SampledFunction::indicator(g, |x| (0.0..1.0).contains(&x[0]));
        let p1 = Exponent::constant(g, 1.0).unwrap();
        let w2 = Weight::constant(g, 2.0).unwrap();
        let n = weighted_norm(&chi, &w2, &p1, &cfg()).unwrap().value;
        assert!((n - 2.0).abs() < 1e-9);
        let p = Exponent::smooth_bump(g, 2.0, 0.5, 1.0).unwrap();
        let one = Weight::constant(g, 1.0).unwrap();
        assert_eq!(
            weighted_norm(&chi, &one, &p, &cfg()).unwrap().value,
            luxemburg_norm(&chi, &p, &cfg()).unwrap().value
        );
    }

    #[test]
    fn measure_norm_reductions() {
        let g = Grid::new(1, 2.0, 4).unwrap();
        let f = SampledFunction::from_fn(g, |x| 1.0 + x[0].sin()).unwrap();
        let p = Exponent::smooth_bump(g, 2.0, 0.4, 0.7).unwrap();
        let one = Weight::constant(g, 1.0).unwrap();
        let a = measure_norm(&f, &p, &one, &cfg()).unwrap().value;
        let b = luxemburg_norm(&f, &p, &cfg()).unwrap().value;
        assert!((a - b).abs() <= 1e-10 * b);

        let v = Weight::power(g, 0.3).unwrap();
        let p0 = 2.5;
        let pc = Exponent::constant(g, p0).unwrap();
        let classical = (f
            .values()
            .iter()
            .zip(v.values())
            .map(|(a, w)| a.abs().powf(p0) * w)
            .sum::<f64>()
            * g.cell_volume())
        .powf(1.0 / p0);
        let n = measure_norm(&f, &pc, &v, &cfg()).unwrap().value;
        assert!((n / classical - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn sigma_identity_links_measure_and_weighted_norms() {
        // (sigma w)^p = sigma with sigma = w^{-p'}.
        let g = Grid::new(1, 2.0, 4).unwrap();
        let p = Exponent::smooth_bump(g, 2.5, 0.5, 1.0).unwrap();
        let w = Weight::power(g, 0.2).unwrap();
        let sigma = w.pow_exponent(&p.conjugate().unwrap(), -1.0).unwrap();
        let f = SampledFunction::from_fn(g, |x| (x[0] * 3.0).cos().abs() + 0.1).unwrap();
        let lhs = measure_norm(&f, &p, &sigma, &cfg()).unwrap().value;
        let fs = f.mul(sigma.samples()).unwrap();
        let rhs = weighted_norm(&fs, &w, &p, &cfg()).unwrap().value;
        assert!((lhs - rhs).abs() <= 2e-10 * lhs.max(rhs));
    }

    #[test]
    fn rescale_identity() {
        let g = Grid::new(1, 2.0, 4).unwrap();
        let f = SampledFunction::from_fn(g, |x| (2.0 * x[0]).sin() * 3.0).unwrap();
        let p = Exponent::smooth_bump(g, 2.0, 0.5, 1.5).unwrap();
        assert!(rescale_check(&f, &p, 1.0, &cfg()).unwrap() <= 1e-10);
        assert!(rescale_check(&f, &p, 0.5, &cfg()).unwrap() <= 1e-9);
        let chi = SampledFunction::indicator(g, |x| (0.0..1.0).contains(&x[0]));
        let two = Exponent::constant(g, 2.0).unwrap();
        assert!(rescale_check(&chi, &two, 2.0, &cfg()).unwrap() <= 2e-10);
    }

    #[test]
    fn holder_equality_for_indicators() {
        let g = Grid::new(1, 2.0, 4).unwrap();
        let chi = SampledFunction::indicator(g, |x| (0.0..1.5).contains(&x[0]));
        let two = Exponent::constant(g, 2.0).unwrap();
        let r = holder_defect(&chi, &chi, &two, &cfg()).unwrap();
        assert!((r - 1.0).abs() < 1e-9);
        let zero = SampledFunction::zeros(g);
        assert_eq!(holder_defect(&zero, &chi, &two, &cfg()).unwrap(), 0.0);
    }

    #[test]
    fn two_factor_holder_constant_case_is_classical() {
        let g = Grid::new(1, 2.0, 4).unwrap();
        let f = SampledFunction::from_fn(g, |x| 1.0 + x[0] * x[0]).unwrap();
        let h = SampledFunction::from_fn(g, |x| (x[0] + 0.3).abs()).unwrap();
        let p1 = Exponent::constant(g, 3.0).unwrap();
        let p2 = Exponent::constant(g, 6.0).unwrap();
        assert!(two_factor_holder_defect(&f, &h, &p1, &p2, &cfg()).unwrap() <= 1.0 + 1e-9);
    }

    #[test]
    fn rejects_bad_tolerance() {
        let g = Grid::new(1, 1.0, 2).unwrap();
        let f = SampledFunction::constant(g, 1.0).unwrap();
        let p = Exponent::constant(g, 2.0).unwrap();
        let bad = NormConfig { tol: 0.0, max_iter: 10 };
        assert!(matches!(luxemburg_norm(&f, &p, &bad), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn reports_non_convergence() {
        let g = Grid::new(1, 1.0, 2).unwrap();
        let f = SampledFunction::from_fn(g, |x| x[0] + 2.0).unwrap();
        let p = Exponent::smooth_bump(g, 2.0, 0.5, 1.0).unwrap();
        let strict = NormConfig { tol: 1e-12, max_iter: 3 };
        assert!(matches!(
            luxemburg_norm(&f, &p, &strict),
            Err(Error::NoConvergence { .. })
        ));
    }
}
