//! Bilinear Calderón–Zygmund kernels: bound checks, truncated quadrature
//! of `T(f1, f2)` and the shipped test kernels.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::{combine, Exponent};
use crate::grid::{translated_families, Grid, SampledFunction};
use crate::norms::{weighted_norm, NormConfig};
use crate::operators::{
    bilinear_maximal, bilinear_maximal_all_intervals, sharp_maximal, sharp_maximal_all_intervals,
    CubeSource, Domination, OperatorOutput,
};
use crate::weights::VectorWeight;

pub type Point = [f64; 2];

/// A kernel `K(x, y, z)` defined off the diagonal, with declared constants.
pub trait BilinearKernel: Sync {
    fn name(&self) -> &str;
    fn dim(&self) -> usize;
    fn eval(&self, x: &Point, y: &Point, z: &Point) -> f64;
    /// Declared constant `A`.
    fn constant(&self) -> f64;
    /// Declared smoothness exponent in `(0, 1]`.
    fn delta(&self) -> f64;
    /// `K(x, y, z) = 0` once `|x - y|` or `|x - z|` reaches this radius.
    fn support_radius(&self) -> Option<f64> {
        None
    }
    /// Bitwise `K(x, y, z) = K(x, z, y)`.
    fn symmetric(&self) -> bool {
        false
    }
}

fn dist(a: &Point, b: &Point, dim: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..dim {
        s += (a[i] - b[i]) * (a[i] - b[i]);
    }
    s.sqrt()
}

/// `|x - y| + |x - z| + |y - z|`.
pub fn spread(x: &Point, y: &Point, z: &Point, dim: usize) -> f64 {
    dist(x, y, dim) + dist(x, z, dim) + dist(y, z, dim)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroKernel {
    pub dim: usize,
}

impl BilinearKernel for ZeroKernel {
    fn name(&self) -> &str {
        "zero"
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, _: &Point, _: &Point, _: &Point) -> f64 {
        0.0
    }
    fn constant(&self) -> f64 {
        1.0
    }
    fn delta(&self) -> f64 {
        1.0
    }
    fn symmetric(&self) -> bool {
        true
    }
}

/// `sum_i ((x_i - y_i) + (x_i - z_i)) / S^(2 dim + 1)`, odd under
/// reflection through `x` and symmetric in `(y, z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OddTestKernel {
    pub dim: usize,
}

impl BilinearKernel for OddTestKernel {
    fn name(&self) -> &str {
        "odd"
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, x: &Point, y: &Point, z: &Point) -> f64 {
        let s = spread(x, y, z, self.dim);
        if s == 0.0 {
            return 0.0;
        }
        let mut num = 0.0;
        for i in 0..self.dim {
            num += (x[i] - y[i]) + (x[i] - z[i]);
        }
        num / s.powi(2 * self.dim as i32 + 1)
    }
    /// From the gradient bound on the half-spread neighbourhood.
    fn constant(&self) -> f64 {
        if self.dim == 1 {
            64.0
        } else {
            1024.0
        }
    }
    fn delta(&self) -> f64 {
        1.0
    }
    fn symmetric(&self) -> bool {
        true
    }
}

/// `phi(x - y) phi(x - z)` with `phi(u) = cos^2(pi |u| / (2 r))` on `|u| < r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BumpKernel {
    pub dim: usize,
    pub radius: f64,
}

impl BumpKernel {
    pub fn phi(&self, u: f64) -> f64 {
        if u < self.radius {
            let c = (std::f64::consts::FRAC_PI_2 * u / self.radius).cos();
            c * c
        } else {
            0.0
        }
    }
}

impl BilinearKernel for BumpKernel {
    fn name(&self) -> &str {
        "bump"
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, x: &Point, y: &Point, z: &Point) -> f64 {
        self.phi(dist(x, y, self.dim)) * self.phi(dist(x, z, self.dim))
    }
    /// Lipschitz constant `pi / r` times the largest spread on the support.
    fn constant(&self) -> f64 {
        let n = self.dim as i32;
        (std::f64::consts::PI / self.radius) * (8.0 * self.radius).powi(2 * n + 1)
    }
    fn delta(&self) -> f64 {
        1.0
    }
    fn support_radius(&self) -> Option<f64> {
        Some(self.radius)
    }
    fn symmetric(&self) -> bool {
        true
    }
}

/// `|x - y|^(-3)` in dimension one: too singular to be a kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularTestKernel;

impl BilinearKernel for SingularTestKernel {
    fn name(&self) -> &str {
        "singular"
    }
    fn dim(&self) -> usize {
        1
    }
    fn eval(&self, x: &Point, y: &Point, _: &Point) -> f64 {
        let d = (x[0] - y[0]).abs();
        if d == 0.0 {
            0.0
        } else {
            d.powi(-3)
        }
    }
    fn constant(&self) -> f64 {
        1.0
    }
    fn delta(&self) -> f64 {
        1.0
    }
}

/// Builds a shipped kernel by name: `zero`, `odd`, `bump` or `singular`.
pub fn kernel_by_name(name: &str, dim: usize, radius: f64) -> Result<Box<dyn BilinearKernel>> {
    match name {
        "zero" => Ok(Box::new(ZeroKernel { dim })),
        "odd" => Ok(Box::new(OddTestKernel { dim })),
        "bump" if radius > 0.0 => Ok(Box::new(BumpKernel { dim, radius })),
        "bump" => Err(Error::InvalidParameter(format!("bump radius must be positive, got {radius}"))),
        "singular" if dim == 1 => Ok(Box::new(SingularTestKernel)),
        "singular" => Err(Error::UnsupportedDimension(dim)),
        other => Err(Error::InvalidParameter(format!("unknown kernel {other:?}"))),
    }
}

/// `|K| S^(2 dim) / A` at one triple.
pub fn size_ratio<K: BilinearKernel + ?Sized>(k: &K, x: &Point, y: &Point, z: &Point) -> f64 {
    let s = spread(x, y, z, k.dim());
    k.eval(x, y, z).abs() * s.powi(2 * k.dim() as i32) / k.constant()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSampling {
    pub samples: usize,
    /// Smallest scale `2^-m`.
    pub finest: f64,
    /// Largest scale, typically `2 L`.
    pub coarsest: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelReport {
    pub size_ratio: f64,
    pub smoothness_ratio: f64,
    pub samples: usize,
    pub pass: bool,
}

fn random_offset(rng: &mut ChaCha8Rng, dim: usize, len: f64) -> Point {
    let mut u = [0.0; 2];
    if dim == 1 {
        u[0] = if rng.gen_bool(0.5) { len } else { -len };
    } else {
        let t = rng.gen_range(0.0..std::f64::consts::TAU);
        u = [len * t.cos(), len * t.sin()];
    }
    u
}

fn add(a: &Point, b: &Point) -> Point {
    [a[0] + b[0], a[1] + b[1]]
}

/// Samples triples across scales and reports the worst size and
/// smoothness ratios against the declared constants.
pub fn check_kernel_bounds<K: BilinearKernel + ?Sized>(k: &K, sampling: &KernelSampling) -> Result<KernelReport> {
    if sampling.samples == 0 {
        return Err(Error::InvalidParameter("sample count must be at least 1".into()));
    }
    if !(sampling.finest > 0.0 && sampling.coarsest >= sampling.finest) {
        return Err(Error::InvalidParameter("scale range must be positive and ordered".into()));
    }
    let dim = k.dim();
    let (a, delta) = (k.constant(), k.delta());
    let n2 = 2 * dim as i32;
    let mut rng = ChaCha8Rng::seed_from_u64(sampling.seed);
    let (lo, hi) = (sampling.finest.log2(), sampling.coarsest.log2());
    let mut size: f64 = 0.0;
    let mut smooth: f64 = 0.0;
    for _ in 0..sampling.samples {
        let r = 2f64.powf(rng.gen_range(lo..=hi));
        let mut x = [0.0; 2];
        for v in x.iter_mut().take(dim) {
            *v = rng.gen_range(-sampling.coarsest..sampling.coarsest) / 2.0;
        }
        let ry = r * rng.gen_range(0.0..=1.0f64).max(1e-3);
        let rz = r * rng.gen_range(0.0..=1.0f64);
        let y = add(&x, &random_offset(&mut rng, dim, ry));
        let z = add(&x, &random_offset(&mut rng, dim, rz));
        let s = spread(&x, &y, &z, dim);
        if s == 0.0 {
            continue;
        }
        size = size.max(size_ratio(k, &x, &y, &z));

        let reach = 0.5 * dist(&x, &y, dim).max(dist(&x, &z, dim));
        let len = reach * rng.gen_range(1e-3..=1.0f64);
        let step = random_offset(&mut rng, dim, len);
        let h = dist(&step, &[0.0; 2], dim);
        if h == 0.0 {
            continue;
        }
        let base = k.eval(&x, &y, &z);
        let scale = a * h.powf(delta) / s.powf(n2 as f64 + delta);
        let moved = [
            k.eval(&add(&x, &step), &y, &z),
            k.eval(&x, &add(&y, &step), &z),
            k.eval(&x, &y, &add(&z, &step)),
        ];
        for m in moved {
            smooth = smooth.max((m - base).abs() / scale);
        }
    }
    let tol = 1.0 + 1e-9;
    Ok(KernelReport {
        size_ratio: size,
        smoothness_ratio: smooth,
        samples: sampling.samples,
        pass: size <= tol && smooth <= tol,
    })
}

/// Truncation of the quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SioConfig {
    /// `y` or `z` closer to `x` than this many cell diameters is dropped.
    pub exclusion: f64,
    /// Optional cap on `|x - y|` and `|x - z|`.
    pub truncation: Option<f64>,
}

impl Default for SioConfig {
    fn default() -> Self {
        Self {
            exclusion: 1.0,
            truncation: None,
        }
    }
}

/// `T(f1, f2)(x) = h^(2 dim) sum K(x, y, z) f1(y) f2(z)` over cell centers,
/// dropping `(y, z)` with `|x - y| < eps` or `|x - z| < eps`.
/// Symmetric kernels are summed over unordered pairs so that swapping the
/// inputs gives a bitwise identical result.
pub fn apply_bilinear_sio<K: BilinearKernel + ?Sized>(
    k: &K,
    f1: &SampledFunction,
    f2: &SampledFunction,
    cfg: &SioConfig,
) -> Result<OperatorOutput> {
    let grid = *f1.grid();
    if f2.grid() != &grid {
        return Err(Error::GridMismatch);
    }
    if k.dim() != grid.dim() {
        return Err(Error::UnsupportedDimension(k.dim()));
    }
    let dim = grid.dim();
    // Shrunk by a relative 1e-9 so that centers exactly one diameter apart
    // are kept regardless of rounding.
    let eps = cfg.exclusion * grid.cell_side() * (dim as f64).sqrt() * (1.0 - 1e-9);
    let reach = match (cfg.truncation, k.support_radius()) {
        (Some(a), Some(b)) => a.min(b),
        (Some(a), None) | (None, Some(a)) => a,
        (None, None) => f64::INFINITY,
    };
    let centers: Vec<Point> = (0..grid.cell_count()).map(|c| grid.center(c)).collect();
    let support: Vec<usize> = (0..grid.cell_count())
        .filter(|&c| f1.get(c) != 0.0 || f2.get(c) != 0.0)
        .collect();
    let w = grid.cell_volume() * grid.cell_volume();
    let symmetric = k.symmetric();

    let out: Vec<f64> = (0..grid.cell_count())
        .into_par_iter()
        .map(|xc| {
            let x = &centers[xc];
            let near: Vec<usize> = support
                .iter()
                .copied()
                .filter(|&c| {
                    let d = dist(x, &centers[c], dim);
                    d >= eps && d < reach
                })
                .collect();
            let mut total = 0.0;
            if symmetric {
                for (i, &yc) in near.iter().enumerate() {
                    let y = &centers[yc];
                    total += k.eval(x, y, y) * (f1.get(yc) * f2.get(yc));
                    for &zc in &near[i + 1..] {
                        let pair = f1.get(yc) * f2.get(zc) + f1.get(zc) * f2.get(yc);
                        if pair != 0.0 {
                            total += k.eval(x, y, &centers[zc]) * pair;
                        }
                    }
                }
            } else {
                for &yc in &near {
                    let a = f1.get(yc);
                    if a == 0.0 {
                        continue;
                    }
                    let y = &centers[yc];
                    for &zc in &near {
                        let b = f2.get(zc);
                        if b != 0.0 {
                            total += k.eval(x, y, &centers[zc]) * (a * b);
                        }
                    }
                }
            }
            total * w
        })
        .collect();
    Ok(OperatorOutput {
        result: SampledFunction::new(grid, out)?,
        source: CubeSource::AllIntervals,
        argmax: None,
    })
}

/// `max M#_delta(T(f1, f2)) / M(f1, f2)` over cells where the bilinear
/// maximal function exceeds `floor`. Suprema run over every interval in
/// dimension one and over the translated families otherwise.
pub fn sharp_domination_test<K: BilinearKernel + ?Sized>(
    k: &K,
    f1: &SampledFunction,
    f2: &SampledFunction,
    delta: f64,
    floor: f64,
    cfg: &SioConfig,
) -> Result<Domination> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::InvalidParameter(format!(
            "delta must lie in (0, 1/2), got {delta}"
        )));
    }
    let t = apply_bilinear_sio(k, f1, f2, cfg)?;
    let grid = *f1.grid();
    let (sharp, maximal) = if grid.dim() == 1 {
        (
            sharp_maximal_all_intervals(&t.result, delta)?,
            bilinear_maximal_all_intervals(f1, f2)?,
        )
    } else {
        let fams = translated_families(&grid);
        (
            sharp_maximal(&t.result, delta, &fams)?,
            bilinear_maximal(f1, f2, &fams)?,
        )
    };
    let mut best = Domination {
        constant: 0.0,
        cell: 0,
    };
    for (c, (&s, &m)) in sharp.values().iter().zip(maximal.values()).enumerate() {
        if m > floor && s / m > best.constant {
            best = Domination {
                constant: s / m,
                cell: c,
            };
        }
    }
    Ok(best)
}

/// `||T(f1, f2) w||_p / (||f1 w1||_p1 ||f2 w2||_p2)`.
#[allow(clippy::too_many_arguments)]
pub fn weighted_sio_ratio<K: BilinearKernel + ?Sized>(
    k: &K,
    f1: &SampledFunction,
    f2: &SampledFunction,
    vw: &VectorWeight,
    p1: &Exponent,
    p2: &Exponent,
    sio: &SioConfig,
    cfg: &NormConfig,
) -> Result<f64> {
    let p = combine(p1, p2)?;
    let t = apply_bilinear_sio(k, f1, f2, sio)?;
    let num = weighted_norm(&t.result, &vw.w, &p, cfg)?.value;
    let den = weighted_norm(f1, &vw.w1, p1, cfg)?.value * weighted_norm(f2, &vw.w2, p2, cfg)?.value;
    Ok(if den > 0.0 { num / den } else { 0.0 })
}

/// Scale range `[2^-m, 2 L]` for a grid.
pub fn grid_sampling(grid: &Grid, samples: usize, seed: u64) -> KernelSampling {
    KernelSampling {
        samples,
        finest: grid.cell_side(),
        coarsest: 2.0 * grid.half_width(),
        seed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid1(l: f64, m: u32) -> Grid {
        Grid::new(1, l, m).unwrap()
    }

    fn random_fn(g: Grid, seed: u64) -> SampledFunction {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = (0..g.cell_count())
            .map(|_| if rng.gen_bool(0.3) { rng.gen_range(0.0..2.0) } else { 0.0 })
            .collect();
        SampledFunction::new(g, v).unwrap()
    }

    #[test]
    fn zero_kernel_passes() {
        let g = grid1(2.0, 5);
        let r = check_kernel_bounds(&ZeroKernel { dim: 1 }, &grid_sampling(&g, 1000, 1)).unwrap();
        assert!(r.pass && r.size_ratio == 0.0 && r.smoothness_ratio == 0.0);
    }

    #[test]
    fn odd_kernel_passes() {
        for dim in [1, 2] {
            let g = Grid::new(dim, 2.0, 5).unwrap();
            let r = check_kernel_bounds(&OddTestKernel { dim }, &grid_sampling(&g, 20000, 7)).unwrap();
            assert!(r.pass, "dim {dim}: {r:?}");
            assert!(r.smoothness_ratio > 0.01);
        }
    }

    #[test]
    fn bump_kernel_passes() {
        let g = grid1(2.0, 5);
        let r = check_kernel_bounds(&BumpKernel { dim: 1, radius: 1.0 }, &grid_sampling(&g, 20000, 3)).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn singular_kernel_fails() {
        let g = grid1(2.0, 6);
        let r = check_kernel_bounds(&SingularTestKernel, &grid_sampling(&g, 20000, 5)).unwrap();
        assert!(!r.pass);
        let k = SingularTestKernel;
        let at = |d: f64| size_ratio(&k, &[0.0, 0.0], &[d, 0.0], &[1.0, 0.0]);
        assert!(at(g.cell_side()) >= 10.0 * at(0.5));
    }

    #[test]
    fn zero_input_gives_zero() {
        let g = grid1(2.0, 4);
        let z = SampledFunction::zeros(g);
        let t = apply_bilinear_sio(&OddTestKernel { dim: 1 }, &z, &random_fn(g, 1), &SioConfig::default()).unwrap();
        assert!(t.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn bilinear_in_first_argument() {
        let g = grid1(2.0, 4);
        let k = OddTestKernel { dim: 1 };
        let cfg = SioConfig::default();
        let (f, gf, h) = (random_fn(g, 1), random_fn(g, 2), random_fn(g, 3));
        let comb = f.scale(2.0).unwrap().add(&gf.scale(-0.5).unwrap()).unwrap();
        let lhs = apply_bilinear_sio(&k, &comb, &h, &cfg).unwrap();
        let a = apply_bilinear_sio(&k, &f, &h, &cfg).unwrap();
        let b = apply_bilinear_sio(&k, &gf, &h, &cfg).unwrap();
        let scale = lhs.result.max_abs().max(1.0);
        for c in 0..g.cell_count() {
            let rhs = 2.0 * a.values()[c] - 0.5 * b.values()[c];
            assert!((lhs.values()[c] - rhs).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn symmetric_kernels_commute_exactly() {
        let g = grid1(2.0, 4);
        let (f, h) = (random_fn(g, 4), random_fn(g, 5));
        let cfg = SioConfig::default();
        for k in [&OddTestKernel { dim: 1 } as &dyn BilinearKernel, &BumpKernel { dim: 1, radius: 0.75 }] {
            let a = apply_bilinear_sio(k, &f, &h, &cfg).unwrap();
            let b = apply_bilinear_sio(k, &h, &f, &cfg).unwrap();
            assert_eq!(a.values(), b.values());
        }
    }

    #[test]
    fn bump_kernel_factorizes() {
        let g = grid1(2.0, 5);
        let k = BumpKernel { dim: 1, radius: 0.6 };
        let cfg = SioConfig::default();
        let (f1, f2) = (random_fn(g, 8), random_fn(g, 9));
        let t = apply_bilinear_sio(&k, &f1, &f2, &cfg).unwrap();
        let eps = 0.5 * g.cell_side();
        let conv = |f: &SampledFunction, x: usize| -> f64 {
            (0..g.cell_count())
                .filter(|&y| g.distance(x, y) >= eps)
                .map(|y| k.phi(g.distance(x, y)) * f.get(y))
                .sum::<f64>()
                * g.cell_side()
        };
        for x in 0..g.cell_count() {
            let oracle = conv(&f1, x) * conv(&f2, x);
            assert!((t.values()[x] - oracle).abs() <= 1e-12 * oracle.abs().max(1.0));
        }
    }

    #[test]
    fn compact_support_vanishes_far_away() {
        let g = grid1(4.0, 3);
        let f = SampledFunction::indicator(g, |x| (0.0..0.5).contains(&x[0]));
        let k = BumpKernel { dim: 1, radius: 0.5 };
        let t = apply_bilinear_sio(&k, &f, &f, &SioConfig::default()).unwrap();
        for c in 0..g.cell_count() {
            if !(-1.0..1.5).contains(&g.center(c)[0]) {
                assert_eq!(t.values()[c], 0.0);
            }
        }
    }

    #[test]
    fn sharp_domination_zero_input() {
        let g = grid1(2.0, 4);
        let z = SampledFunction::zeros(g);
        let d = sharp_domination_test(&OddTestKernel { dim: 1 }, &z, &z, 0.25, 0.0, &SioConfig::default()).unwrap();
        assert_eq!(d.constant, 0.0);
        assert!(sharp_domination_test(&OddTestKernel { dim: 1 }, &z, &z, 0.5, 0.0, &SioConfig::default()).is_err());
    }

    #[test]
    fn kernel_registry() {
        assert_eq!(kernel_by_name("odd", 1, 0.0).unwrap().name(), "odd");
        assert!(kernel_by_name("bump", 1, 0.0).is_err());
        assert!(kernel_by_name("singular", 2, 0.0).is_err());
        assert!(kernel_by_name("nope", 1, 1.0).is_err());
    }
}
