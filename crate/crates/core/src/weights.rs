//! Weights and weight-class constants.
//!
//! Every supremum over cubes is a maximum over the supplied cube families,
//! so each constant is a lower bound for the continuum one. Divergence is
//! read off from growth under domain doubling or refinement.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::{combine, Exponent};
use crate::grid::{cell_sum, CubeFamily, CubeId, DyadicCube, Grid, SampledFunction};
use crate::norms::{ModularTerms, NormConfig};

/// A sampled weight, `0 < w(x) < inf` on every cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Weight(SampledFunction);

impl Weight {
    pub fn new(samples: SampledFunction) -> Result<Self> {
        if let Some(cell) = samples.values().iter().position(|&v| v <= 0.0) {
            return Err(Error::InvalidWeight(format!(
                "weight must be positive, got {} at cell {cell}",
                samples.get(cell)
            )));
        }
        Ok(Self(samples))
    }

    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        Self::new(SampledFunction::from_fn(grid, f)?)
    }

    pub fn constant(grid: Grid, c: f64) -> Result<Self> {
        Self::new(SampledFunction::constant(grid, c)?)
    }

    /// `|x|^a`. Cell centers avoid the origin, so the cell at zero takes
    /// the value at its center.
    pub fn power(grid: Grid, a: f64) -> Result<Self> {
        Self::from_fn(grid, |x| norm(x).powf(a))
    }

    /// `(1 + |x|)^a`.
    pub fn shifted_power(grid: Grid, a: f64) -> Result<Self> {
        Self::from_fn(grid, |x| (1.0 + norm(x)).powf(a))
    }

    /// `w (1 + eps cos(pi freq x_1))` with `|eps| < 1`.
    pub fn perturbed(&self, eps: f64, freq: f64) -> Result<Self> {
        if eps.abs() >= 1.0 {
            return Err(Error::InvalidWeight(format!(
                "perturbation must satisfy |eps| < 1, got {eps}"
            )));
        }
        let grid = *self.grid();
        let values = (0..grid.cell_count())
            .map(|c| {
                let x = grid.center(c)[0];
                self.value(c) * (1.0 + eps * (std::f64::consts::PI * freq * x).cos())
            })
            .collect();
        Self::new(SampledFunction::new(grid, values)?)
    }

    pub fn product(&self, other: &Weight) -> Result<Self> {
        Self::new(self.0.mul(&other.0)?)
    }

    pub fn samples(&self) -> &SampledFunction {
        &self.0
    }

    pub fn grid(&self) -> &Grid {
        self.0.grid()
    }

    pub fn values(&self) -> &[f64] {
        self.0.values()
    }

    pub fn value(&self, cell: usize) -> f64 {
        self.0.get(cell)
    }

    /// `w^s`.
    pub fn powf(&self, s: f64) -> Result<Self> {
        Self::new(self.0.map(|v| v.powf(s))?)
    }

    pub fn recip(&self) -> Result<Self> {
        self.powf(-1.0)
    }

    /// `w(x)^(s p(x))`.
    pub fn pow_exponent(&self, p: &Exponent, s: f64) -> Result<Self> {
        let pow = self.0.zip_map(p.samples(), |_, w, q| w.powf(s * q))?;
        Self::new(pow)
    }

    /// `w(E) = int_E w`.
    pub fn mass(&self, cells: &[usize]) -> f64 {
        cell_sum(self.values(), cells) * self.grid().cell_volume()
    }
}

/// `(w1, w2, w = w1 w2)` with `u = w^p` and `sigma_l = w_l^(-p_l')`.
#[derive(Debug, Clone)]
pub struct VectorWeight {
    pub w1: Weight,
    pub w2: Weight,
    pub w: Weight,
    pub u: Weight,
    pub sigma1: Weight,
    pub sigma2: Weight,
}

impl VectorWeight {
    pub fn new(w1: Weight, w2: Weight, p1: &Exponent, p2: &Exponent) -> Result<Self> {
        let p = combine(p1, p2)?;
        let w = w1.product(&w2)?;
        let u = w.pow_exponent(&p, 1.0)?;
        let sigma1 = w1.pow_exponent(&p1.conjugate()?, -1.0)?;
        let sigma2 = w2.pow_exponent(&p2.conjugate()?, -1.0)?;
        Ok(Self {
            w1,
            w2,
            w,
            u,
            sigma1,
            sigma2,
        })
    }

    pub fn grid(&self) -> &Grid {
        self.w.grid()
    }
}

/// A maximum over cubes together with the cube that attains it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightConstant {
    pub value: f64,
    pub family: usize,
    pub cube: CubeId,
}

/// Maximizes `per_cube` over every cube of every family, in parallel.
/// Ties keep the first cube in enumeration order.
pub fn max_over_cubes<F>(families: &[CubeFamily], per_cube: F) -> Result<WeightConstant>
where
    F: Fn(&DyadicCube) -> Result<f64> + Sync,
{
    if families.is_empty() {
        return Err(Error::InvalidParameter("no cube families supplied".into()));
    }
    let ids: Vec<(usize, CubeId)> = families
        .iter()
        .enumerate()
        .flat_map(|(fi, fam)| fam.cube_ids().map(move |id| (fi, id)))
        .collect();
    let values: Vec<Result<f64>> = ids
        .par_iter()
        .map(|&(fi, id)| per_cube(families[fi].cube(id)))
        .collect();
    let mut best: Option<WeightConstant> = None;
    for ((fi, id), v) in ids.into_iter().zip(values) {
        let v = v?;
        if best.is_none_or(|b| v > b.value) {
            best = Some(WeightConstant {
                value: v,
                family: fi,
                cube: id,
            });
        }
    }
    best.ok_or_else(|| Error::InvalidParameter("cube families are empty".into()))
}

fn cube_norm(
    cube: &DyadicCube,
    f: impl Fn(usize) -> f64,
    p: &Exponent,
    cfg: &NormConfig,
) -> Result<f64> {
    Ok(ModularTerms::gather(cube.cells().iter().copied(), f, p, None)
        .norm(cfg)?
        .value)
}

/// `sup_Q |Q|^-1 ||w chi_Q||_p(.) ||w^-1 chi_Q||_p'(.)`.
pub fn ap_constant(
    w: &Weight,
    p: &Exponent,
    families: &[CubeFamily],
    cfg: &NormConfig,
) -> Result<WeightConstant> {
    ap_constant_with_dual(w, p, &p.conjugate()?, families, cfg)
}

/// [`ap_constant`] with the dual exponent supplied by the caller.
pub fn ap_constant_with_dual(
    w: &Weight,
    p: &Exponent,
    p_dual: &Exponent,
    families: &[CubeFamily],
    cfg: &NormConfig,
) -> Result<WeightConstant> {
    let grid = *w.grid();
    max_over_cubes(families, |q| {
        let a = cube_norm(q, |c| w.value(c), p, cfg)?;
        let b = cube_norm(q, |c| 1.0 / w.value(c), p_dual, cfg)?;
        Ok(a * b / q.measure(&grid))
    })
}

/// `|Q|^-2 ||w chi_Q||_p ||w1^-1 chi_Q||_p1' ||w2^-1 chi_Q||_p2'` on one cube.
pub fn vec_ap_quantity(
    vw: &VectorWeight,
    p: &Exponent,
    p1c: &Exponent,
    p2c: &Exponent,
    cube: &DyadicCube,
    cfg: &NormConfig,
) -> Result<f64> {
    let m = cube.measure(vw.grid());
    let a = cube_norm(cube, |c| vw.w.value(c), p, cfg)?;
    let b = cube_norm(cube, |c| 1.0 / vw.w1.value(c), p1c, cfg)?;
    let d = cube_norm(cube, |c| 1.0 / vw.w2.value(c), p2c, cfg)?;
    Ok(a * b * d / (m * m))
}

/// The bilinear constant: the maximum of [`vec_ap_quantity`] over cubes.
pub fn vec_ap_constant(
    vw: &VectorWeight,
    p1: &Exponent,
    p2: &Exponent,
    families: &[CubeFamily],
    cfg: &NormConfig,
) -> Result<WeightConstant> {
    let p = combine(p1, p2)?;
    let (p1c, p2c) = (p1.conjugate()?, p2.conjugate()?);
    max_over_cubes(families, |q| vec_ap_quantity(vw, &p, &p1c, &p2c, q, cfg))
}

/// The three scalar constants equivalent to the bilinear condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarCharacterization {
    /// `w1^(-1/2)` in the class of `2 p1'(.)`.
    pub c1: WeightConstant,
    /// `w2^(-1/2)` in the class of `2 p2'(.)`.
    pub c2: WeightConstant,
    /// `w^(1/2)` in the class of `2 p(.)`.
    pub c3: WeightConstant,
}

impl ScalarCharacterization {
    pub fn product(&self) -> f64 {
        self.c1.value * self.c2.value * self.c3.value
    }

    pub fn max(&self) -> f64 {
        self.c1.value.max(self.c2.value).max(self.c3.value)
    }
}

pub fn scalar_characterization(
    vw: &VectorWeight,
    p1: &Exponent,
    p2: &Exponent,
    families: &[CubeFamily],
    cfg: &NormConfig,
) -> Result<ScalarCharacterization> {
    let p = combine(p1, p2)?;
    let c1 = ap_constant(&vw.w1.powf(-0.5)?, &p1.conjugate()?.scaled(2.0)?, families, cfg)?;
    let c2 = ap_constant(&vw.w2.powf(-0.5)?, &p2.conjugate()?.scaled(2.0)?, families, cfg)?;
    let c3 = ap_constant(&vw.w.powf(0.5)?, &p.scaled(2.0)?, families, cfg)?;
    Ok(ScalarCharacterization { c1, c2, c3 })
}

/// Empirical `beta = min w(E) / w(Q)` over cubes with at least two cells
/// and subsets `E` with `|E| >= alpha |Q|`: contiguous slabs of the
/// minimal admissible thickness along each axis, and the complement of
/// each child cube.
pub fn ainfty_density(w: &Weight, families: &[CubeFamily], alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    let grid = *w.grid();
    let dim = grid.dim();
    let mut beta = 1.0f64;
    for fam in families {
        for id in fam.cube_ids() {
            let q = fam.cube(id);
            if q.cell_count() < 2 {
                continue;
            }
            let total = cell_sum(w.values(), q.cells());
            let need = (alpha * q.cell_count() as f64).ceil() as usize;

            // Slabs: group cells by their index along one axis.
            for axis in 0..dim {
                let mut coords: Vec<usize> =
                    q.cells().iter().map(|&c| grid.axis_indices(c)[axis]).collect();
                coords.sort_unstable();
                coords.dedup();
                let lo = coords[0];
                let span = coords.len();
                let mut layer = vec![0.0; span];
                let mut layer_count = vec![0usize; span];
                for &c in q.cells() {
                    let i = grid.axis_indices(c)[axis] - lo;
                    layer[i] += w.value(c);
                    layer_count[i] += 1;
                }
                for start in 0..span {
                    let (mut mass, mut count) = (0.0, 0usize);
                    for i in start..span {
                        mass += layer[i];
                        count += layer_count[i];
                        if count >= need {
                            beta = beta.min(mass / total);
                            break;
                        }
                    }
                }
            }

            // Complements of children.
            if let Some(next) = fam.levels().get(id.level_index + 1) {
                for child in fam.children(id) {
                    let cc = &next.cubes()[child];
                    if q.cell_count() - cc.cell_count() >= need {
                        let m = total - cell_sum(w.values(), cc.cells());
                        beta = beta.min(m / total);
                    }
                }
            }
        }
    }
    Ok(beta)
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}
