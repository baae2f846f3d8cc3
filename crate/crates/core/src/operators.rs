//! Maximal, averaging and sharp maximal operators on sampled functions.
//!
//! Cube averages are `cell_sum / cell_count`, summed in ascending cell
//! order. The one-dimensional interval sweeps accumulate in the same order,
//! so a dyadic interval gets a bitwise identical average either way and the
//! pointwise comparisons between operators hold without rounding slack.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::{combine, Exponent};
use crate::grid::{cell_sum, CubeFamily, CubeId, DyadicCube, Grid, SampledFunction, Translate};
use crate::norms::{indicator_norm, norm_on_cells, NormConfig};
use crate::weights::Weight;

fn norm_on(f: &SampledFunction, p: &Exponent, cells: &[usize], cfg: &NormConfig) -> Result<f64> {
    Ok(norm_on_cells(f, cells, p, cfg)?.value)
}

/// Where the supremum in an operator was taken.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum CubeSource {
    Families(Vec<Translate>),
    /// Every grid-aligned interval (dimension one only).
    AllIntervals,
}

/// A cube attaining a per-cell supremum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CubeRef {
    Dyadic { family: usize, cube: CubeId },
    Interval { start: usize, len: usize },
}

#[derive(Debug, Clone)]
pub struct OperatorOutput {
    pub result: SampledFunction,
    pub source: CubeSource,
    pub argmax: Option<Vec<CubeRef>>,
}

impl OperatorOutput {
    pub fn values(&self) -> &[f64] {
        self.result.values()
    }
}

fn check_families(grid: &Grid, families: &[CubeFamily]) -> Result<()> {
    if families.is_empty() {
        return Err(Error::InvalidParameter("no cube families supplied".into()));
    }
    if families.iter().any(|f| f.grid() != grid) {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

fn same_grid(a: &SampledFunction, b: &SampledFunction) -> Result<()> {
    if a.grid() == b.grid() {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

fn abs_values(f: &SampledFunction) -> Vec<f64> {
    f.values().iter().map(|v| v.abs()).collect()
}

fn mean(values: &[f64], cells: &[usize]) -> f64 {
    cell_sum(values, cells) / cells.len() as f64
}

/// Per-cell maximum of `per_cube` over the cubes containing the cell.
/// Ties keep the first cube (families in order, coarse to fine).
fn sweep<F>(grid: &Grid, families: &[CubeFamily], per_cube: F) -> (Vec<f64>, Vec<CubeRef>)
where
    F: Fn(&DyadicCube) -> f64 + Sync,
{
    let n = grid.cell_count();
    let mut out = vec![f64::NEG_INFINITY; n];
    let mut arg = vec![
        CubeRef::Interval {
            start: 0,
            len: 0
        };
        n
    ];
    for (fi, fam) in families.iter().enumerate() {
        for (li, level) in fam.levels().iter().enumerate() {
            let vals: Vec<f64> = level.cubes().par_iter().map(&per_cube).collect();
            for (ci, (cube, &v)) in level.cubes().iter().zip(&vals).enumerate() {
                for &c in cube.cells() {
                    if v > out[c] {
                        out[c] = v;
                        arg[c] = CubeRef::Dyadic {
                            family: fi,
                            cube: CubeId {
                                level_index: li,
                                cube: ci,
                            },
                        };
                    }
                }
            }
        }
    }
    (out, arg)
}

fn family_output(grid: Grid, families: &[CubeFamily], values: Vec<f64>, arg: Vec<CubeRef>) -> Result<OperatorOutput> {
    Ok(OperatorOutput {
        result: SampledFunction::new(grid, values)?,
        source: CubeSource::Families(families.iter().map(|f| f.translate()).collect()),
        argmax: Some(arg),
    })
}

/// `Mf(x) = sup_Q avg_Q |f|` over the cubes of `families` containing `x`.
pub fn maximal(f: &SampledFunction, families: &[CubeFamily]) -> Result<OperatorOutput> {
    let grid = *f.grid();
    check_families(&grid, families)?;
    let a = abs_values(f);
    let (out, arg) = sweep(&grid, families, |q| mean(&a, q.cells()));
    family_output(grid, families, out, arg)
}

/// `sup_Q avg_Q |f1| avg_Q |f2|` over the cubes of `families`.
pub fn bilinear_maximal(
    f1: &SampledFunction,
    f2: &SampledFunction,
    families: &[CubeFamily],
) -> Result<OperatorOutput> {
    same_grid(f1, f2)?;
    let grid = *f1.grid();
    check_families(&grid, families)?;
    let (a, b) = (abs_values(f1), abs_values(f2));
    let (out, arg) = sweep(&grid, families, |q| mean(&a, q.cells()) * mean(&b, q.cells()));
    family_output(grid, families, out, arg)
}

/// `M_sigma f(x) = sup_Q (int_Q |f| sigma) / sigma(Q)` over one family.
pub fn weighted_dyadic_maximal(
    f: &SampledFunction,
    sigma: &Weight,
    family: &CubeFamily,
) -> Result<OperatorOutput> {
    same_grid(f, sigma.samples())?;
    let grid = *f.grid();
    let families = std::slice::from_ref(family);
    check_families(&grid, families)?;
    let fs: Vec<f64> = f
        .values()
        .iter()
        .zip(sigma.values())
        .map(|(v, s)| v.abs() * s)
        .collect();
    let s = sigma.values();
    let (out, arg) = sweep(&grid, families, |q| cell_sum(&fs, q.cells()) / cell_sum(s, q.cells()));
    family_output(grid, families, out, arg)
}

fn require_dim1(grid: &Grid) -> Result<()> {
    if grid.dim() == 1 {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(grid.dim()))
    }
}

/// Per-cell max over all intervals `[s, e]` of `value(s, e, sum_a, sum_b)`.
fn interval_sweep(a: &[f64], b: &[f64], value: impl Fn(f64, f64, f64) -> f64 + Sync) -> Vec<f64> {
    let n = a.len();
    (0..n)
        .into_par_iter()
        .fold(
            || (vec![0.0f64; n], vec![0.0f64; n]),
            |(mut out, mut best), s| {
                let (mut sa, mut sb) = (0.0, 0.0);
                for e in s..n {
                    sa += a[e];
                    sb += b[e];
                    best[e] = value((e - s + 1) as f64, sa, sb);
                }
                let mut run = f64::NEG_INFINITY;
                for c in (s..n).rev() {
                    run = run.max(best[c]);
                    if run > out[c] {
                        out[c] = run;
                    }
                }
                (out, best)
            },
        )
        .map(|(out, _)| out)
        .reduce(
            || vec![0.0; n],
            |mut x, y| {
                for (u, v) in x.iter_mut().zip(y) {
                    *u = u.max(v);
                }
                x
            },
        )
}

/// Maximal function over every grid-aligned interval (dimension one).
pub fn maximal_all_intervals(f: &SampledFunction) -> Result<OperatorOutput> {
    require_dim1(f.grid())?;
    let a = abs_values(f);
    let out = interval_sweep(&a, &a, |len, sa, _| sa / len);
    Ok(OperatorOutput {
        result: SampledFunction::new(*f.grid(), out)?,
        source: CubeSource::AllIntervals,
        argmax: None,
    })
}

/// Bilinear maximal function over every grid-aligned interval.
pub fn bilinear_maximal_all_intervals(
    f1: &SampledFunction,
    f2: &SampledFunction,
) -> Result<OperatorOutput> {
    same_grid(f1, f2)?;
    require_dim1(f1.grid())?;
    let (a, b) = (abs_values(f1), abs_values(f2));
    let out = interval_sweep(&a, &b, |len, sa, sb| (sa / len) * (sb / len));
    Ok(OperatorOutput {
        result: SampledFunction::new(*f1.grid(), out)?,
        source: CubeSource::AllIntervals,
        argmax: None,
    })
}

/// Bilinear maximal function over the richest available cube set:
/// all intervals in dimension one, the translated families otherwise.
pub fn bilinear_maximal_full(
    f1: &SampledFunction,
    f2: &SampledFunction,
    families: &[CubeFamily],
) -> Result<OperatorOutput> {
    if f1.grid().dim() == 1 {
        bilinear_maximal_all_intervals(f1, f2)
    } else {
        bilinear_maximal(f1, f2, families)
    }
}

/// Measured domination of the full bilinear maximal function by the sum
/// of its translated dyadic versions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domination {
    pub constant: f64,
    pub cell: usize,
}

pub fn one_third_domination(f1: &SampledFunction, f2: &SampledFunction) -> Result<Domination> {
    same_grid(f1, f2)?;
    let grid = *f1.grid();
    let families = crate::grid::translated_families(&grid);
    let full = bilinear_maximal_full(f1, f2, &families)?;
    let mut sum = vec![0.0; grid.cell_count()];
    for fam in &families {
        let part = bilinear_maximal(f1, f2, std::slice::from_ref(fam))?;
        for (s, v) in sum.iter_mut().zip(part.values()) {
            *s += v;
        }
    }
    let mut best = Domination {
        constant: 0.0,
        cell: 0,
    };
    for (c, (&num, &den)) in full.values().iter().zip(&sum).enumerate() {
        if den > 0.0 && num / den > best.constant {
            best = Domination {
                constant: num / den,
                cell: c,
            };
        }
    }
    Ok(best)
}

/// `A_Q(f1, f2) = avg_Q f1 avg_Q f2 chi_Q`.
pub fn averaging_aq(
    q: &DyadicCube,
    f1: &SampledFunction,
    f2: &SampledFunction,
) -> Result<SampledFunction> {
    averaging_tq(&[q], f1, f2)
}

/// `T_Q(f1, f2) = sum over Q of A_Q(f1, f2)` for pairwise disjoint cubes.
pub fn averaging_tq(
    cubes: &[&DyadicCube],
    f1: &SampledFunction,
    f2: &SampledFunction,
) -> Result<SampledFunction> {
    same_grid(f1, f2)?;
    let grid = *f1.grid();
    let mut out = vec![0.0; grid.cell_count()];
    let mut covered = vec![false; grid.cell_count()];
    for q in cubes {
        let v = mean(f1.values(), q.cells()) * mean(f2.values(), q.cells());
        for &c in q.cells() {
            if covered[c] {
                return Err(Error::OverlappingCubes { cell: c });
            }
            covered[c] = true;
            out[c] = v;
        }
    }
    SampledFunction::new(grid, out)
}

/// `<h>_{p,Q} = ||h chi_Q||_p / ||chi_Q||_p`.
pub fn p_average(h: &SampledFunction, p: &Exponent, cells: &[usize], cfg: &NormConfig) -> Result<f64> {
    let num = norm_on(h, p, cells, cfg)?;
    let den = indicator_norm(cells, p, cfg)?;
    Ok(num / den)
}

fn disjoint_fill(
    grid: &Grid,
    cubes: &[&DyadicCube],
    mut per_cube: impl FnMut(&DyadicCube) -> Result<f64>,
) -> Result<SampledFunction> {
    let mut out = vec![0.0; grid.cell_count()];
    let mut covered = vec![false; grid.cell_count()];
    for q in cubes {
        let v = per_cube(q)?;
        for &c in q.cells() {
            if covered[c] {
                return Err(Error::OverlappingCubes { cell: c });
            }
            covered[c] = true;
            out[c] = v;
        }
    }
    SampledFunction::new(*grid, out)
}

/// `T_{p,Q} h = sum <h>_{p,Q} chi_Q` over disjoint cubes.
pub fn p_average_operator(
    h: &SampledFunction,
    p: &Exponent,
    cubes: &[&DyadicCube],
    cfg: &NormConfig,
) -> Result<SampledFunction> {
    disjoint_fill(h.grid(), cubes, |q| p_average(h, p, q.cells(), cfg))
}

/// `sum ||f1 chi_Q||_p1 ||f2 chi_Q||_p2 / ||chi_Q||_p chi_Q` over disjoint cubes.
pub fn bilinear_p_average_operator(
    f1: &SampledFunction,
    f2: &SampledFunction,
    p1: &Exponent,
    p2: &Exponent,
    cubes: &[&DyadicCube],
    cfg: &NormConfig,
) -> Result<SampledFunction> {
    same_grid(f1, f2)?;
    let p = combine(p1, p2)?;
    let one = SampledFunction::constant(*f1.grid(), 1.0)?;
    disjoint_fill(f1.grid(), cubes, |q| {
        let a = norm_on(f1, p1, q.cells(), cfg)?;
        let b = norm_on(f2, p2, q.cells(), cfg)?;
        let c = norm_on(&one, &p, q.cells(), cfg)?;
        Ok(a * b / c)
    })
}

/// Ratio of `sum ||f1 chi_Q||_p1 ||f2 chi_Q||_p2 ||h chi_Q||_p'` to
/// `||f1||_p1 ||f2||_p2 ||h||_p'` for one disjoint family.
pub fn property_g_ratio(
    f1: &SampledFunction,
    f2: &SampledFunction,
    h: &SampledFunction,
    p1: &Exponent,
    p2: &Exponent,
    cubes: &[&DyadicCube],
    cfg: &NormConfig,
) -> Result<f64> {
    let p = combine(p1, p2)?;
    if p.p_minus() < 1.0 {
        return Err(Error::InvalidExponent(format!(
            "summation property needs p_- >= 1, got {}",
            p.p_minus()
        )));
    }
    let pc = p.conjugate()?;
    let mut seen = vec![false; f1.grid().cell_count()];
    let mut sum = 0.0;
    for q in cubes {
        for &c in q.cells() {
            if std::mem::replace(&mut seen[c], true) {
                return Err(Error::OverlappingCubes { cell: c });
            }
        }
        sum += norm_on(f1, p1, q.cells(), cfg)?
            * norm_on(f2, p2, q.cells(), cfg)?
            * norm_on(h, &pc, q.cells(), cfg)?;
    }
    let all: Vec<usize> = (0..f1.grid().cell_count()).collect();
    let den = norm_on(f1, p1, &all, cfg)?
        * norm_on(f2, p2, &all, cfg)?
        * norm_on(h, &pc, &all, cfg)?;
    Ok(if den > 0.0 { sum / den } else { 0.0 })
}

/// Range of `||chi_Q||_p / |Q|^(1 / p_Q)` over the cubes of `families`.
pub fn harmonic_norm_range(
    p: &Exponent,
    families: &[CubeFamily],
    cfg: &NormConfig,
) -> Result<(f64, f64)> {
    let grid = *p.grid();
    let one = SampledFunction::constant(grid, 1.0)?;
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for fam in families {
        for q in fam.cubes() {
            let n = norm_on(&one, p, q.cells(), cfg)?;
            let r = n / q.measure(&grid).powf(1.0 / p.harmonic_mean(q.cells()));
            lo = lo.min(r);
            hi = hi.max(r);
        }
    }
    Ok((lo, hi))
}

/// Mean oscillation `|Q|^-1 int_Q |g - avg_Q g|`, written as twice the
/// mean positive excess so that it never exceeds twice the average.
fn oscillation(g: &[f64], cells: &[usize]) -> f64 {
    let first = g[cells[0]];
    if cells.iter().all(|&c| g[c] == first) {
        return 0.0;
    }
    let avg = mean(g, cells);
    let mut excess = 0.0;
    for &c in cells {
        if g[c] > avg {
            excess += g[c] - avg;
        }
    }
    2.0 * excess / cells.len() as f64
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")))
    }
}

fn delta_power(f: &SampledFunction, delta: f64) -> Vec<f64> {
    f.values()
        .iter()
        .map(|v| if delta == 1.0 { v.abs() } else { v.abs().powf(delta) })
        .collect()
}

/// `M#_delta f = M#(|f|^delta)^(1/delta)`; `delta = 1` gives `M#`.
pub fn sharp_maximal(
    f: &SampledFunction,
    delta: f64,
    families: &[CubeFamily],
) -> Result<OperatorOutput> {
    check_delta(delta)?;
    let grid = *f.grid();
    check_families(&grid, families)?;
    let g = delta_power(f, delta);
    let (mut out, arg) = sweep(&grid, families, |q| oscillation(&g, q.cells()));
    if delta != 1.0 {
        out.iter_mut().for_each(|v| *v = v.powf(1.0 / delta));
    }
    family_output(grid, families, out, arg)
}

/// [`sharp_maximal`] over every grid-aligned interval (dimension one).
pub fn sharp_maximal_all_intervals(f: &SampledFunction, delta: f64) -> Result<OperatorOutput> {
    check_delta(delta)?;
    require_dim1(f.grid())?;
    let g = delta_power(f, delta);
    let n = g.len();
    let out = (0..n)
        .into_par_iter()
        .fold(
            || vec![0.0f64; n],
            |mut out, s| {
                let mut cells = Vec::with_capacity(n - s);
                let mut best = vec![0.0; n];
                for (e, b) in best.iter_mut().enumerate().skip(s) {
                    cells.push(e);
                    *b = oscillation(&g, &cells);
                }
                let mut run = f64::NEG_INFINITY;
                for c in (s..n).rev() {
                    run = run.max(best[c]);
                    out[c] = out[c].max(run);
                }
                out
            },
        )
        .reduce(
            || vec![0.0; n],
            |mut x, y| {
                for (u, v) in x.iter_mut().zip(y) {
                    *u = u.max(v);
                }
                x
            },
        );
    let out = if delta == 1.0 {
        out
    } else {
        out.into_iter().map(|v| v.powf(1.0 / delta)).collect()
    };
    Ok(OperatorOutput {
        result: SampledFunction::new(*f.grid(), out)?,
        source: CubeSource::AllIntervals,
        argmax: None,
    })
}
