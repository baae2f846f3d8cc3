//! Bilinear Calderón–Zygmund cube decomposition and the level split of a
//! pair of functions.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{cell_sum, CubeFamily, CubeId, Grid, SampledFunction};

/// `h1 = f1 chi{f1 > 1}`, `h2 = f1 - h1`, and likewise `h3`, `h4` from `f2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitFunctions {
    pub h1: SampledFunction,
    pub h2: SampledFunction,
    pub h3: SampledFunction,
    pub h4: SampledFunction,
}

impl SplitFunctions {
    /// `h_i` for `i` in `1..=4`.
    pub fn get(&self, i: usize) -> &SampledFunction {
        match i {
            1 => &self.h1,
            2 => &self.h2,
            3 => &self.h3,
            4 => &self.h4,
            _ => panic!("split index {i} out of range 1..=4"),
        }
    }

    /// Which of the two inputs `h_i` came from.
    pub fn rho(i: usize) -> usize {
        if i <= 2 {
            1
        } else {
            2
        }
    }
}

pub fn split(f1: &SampledFunction, f2: &SampledFunction) -> Result<SplitFunctions> {
    if f1.grid() != f2.grid() {
        return Err(Error::GridMismatch);
    }
    let big = |f: &SampledFunction| f.map(|v| if v > 1.0 { v } else { 0.0 });
    let small = |f: &SampledFunction| f.map(|v| if v > 1.0 { 0.0 } else { v });
    Ok(SplitFunctions {
        h1: big(f1)?,
        h2: small(f1)?,
        h3: big(f2)?,
        h4: small(f2)?,
    })
}

/// `2^(2 dim + 1)`.
pub fn default_base(dim: usize) -> f64 {
    2f64.powi(2 * dim as i32 + 1)
}

/// One selected cube `Q_j^k` with its set `E_j^k = Q_j^k minus Omega_{k+1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedCube {
    pub level: i32,
    pub cube: CubeId,
    pub lower: [f64; 2],
    pub side: f64,
    pub cells: Vec<usize>,
    pub product: f64,
    pub parent_product: Option<f64>,
    pub e_cells: Vec<usize>,
    /// The whole-domain cube, which has no parent to test maximality on.
    pub boundary: bool,
}

impl SelectedCube {
    pub fn density(&self) -> f64 {
        self.e_cells.len() as f64 / self.cells.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CZDecomposition {
    pub base: f64,
    pub grid: Grid,
    pub levels: BTreeMap<i32, Vec<SelectedCube>>,
    pub omega: BTreeMap<i32, Vec<usize>>,
}

/// Decomposes the level sets of the dyadic bilinear maximal function of
/// `(g1, g2)` over the `t = 0` family into maximal cubes.
pub fn cz_decompose(
    g1: &SampledFunction,
    g2: &SampledFunction,
    a: f64,
    family: &CubeFamily,
) -> Result<CZDecomposition> {
    let grid = *g1.grid();
    if g2.grid() != &grid || family.grid() != &grid {
        return Err(Error::GridMismatch);
    }
    let threshold = 2f64.powi(2 * grid.dim() as i32);
    if !(a > threshold) || !a.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "base must exceed {threshold}, got {a}"
        )));
    }
    if let Some(c) = g1.values().iter().chain(g2.values()).position(|&v| v < 0.0) {
        return Err(Error::InvalidParameter(format!(
            "inputs must be nonnegative (cell {})",
            c % grid.cell_count()
        )));
    }

    let products: Vec<Vec<f64>> = family
        .levels()
        .iter()
        .map(|lvl| {
            lvl.cubes()
                .iter()
                .map(|q| {
                    let n = q.cell_count() as f64;
                    (cell_sum(g1.values(), q.cells()) / n) * (cell_sum(g2.values(), q.cells()) / n)
                })
                .collect()
        })
        .collect();

    let mut decomposition = CZDecomposition {
        base: a,
        grid,
        levels: BTreeMap::new(),
        omega: BTreeMap::new(),
    };
    let positive = products.iter().flatten().copied().filter(|&v| v > 0.0);
    let (lo, hi) = positive.fold((f64::INFINITY, 0.0f64), |(l, h), v| (l.min(v), h.max(v)));
    if hi == 0.0 {
        return Ok(decomposition);
    }
    let k_min = (lo.ln() / a.ln()).floor() as i32;
    let k_max = (hi.ln() / a.ln()).ceil() as i32;

    // Cubes are visited coarse to fine, so the first qualifying cube that
    // reaches a cell is the maximal one.
    let mut raw: BTreeMap<i32, Vec<(CubeId, f64)>> = BTreeMap::new();
    for k in k_min..=k_max {
        let ak = a.powi(k);
        let mut taken = vec![false; grid.cell_count()];
        let mut chosen = Vec::new();
        for (li, lvl) in family.levels().iter().enumerate() {
            for (ci, q) in lvl.cubes().iter().enumerate() {
                let v = products[li][ci];
                if v > ak && !taken[q.cells()[0]] {
                    q.cells().iter().for_each(|&c| taken[c] = true);
                    chosen.push((CubeId { level_index: li, cube: ci }, v));
                }
            }
        }
        if chosen.is_empty() {
            continue;
        }
        let omega: Vec<usize> = (0..grid.cell_count()).filter(|&c| taken[c]).collect();
        decomposition.omega.insert(k, omega);
        raw.insert(k, chosen);
    }

    for (&k, chosen) in &raw {
        let next: &[usize] = decomposition.omega.get(&(k + 1)).map_or(&[], |v| v);
        let cubes = chosen
            .iter()
            .map(|&(id, v)| {
                let q = family.cube(id);
                let parent_product = q.parent().map(|p| products[id.level_index - 1][p]);
                let e_cells = q
                    .cells()
                    .iter()
                    .copied()
                    .filter(|c| next.binary_search(c).is_err())
                    .collect();
                SelectedCube {
                    level: k,
                    cube: id,
                    lower: q.lower(),
                    side: q.side(),
                    cells: q.cells().to_vec(),
                    product: v,
                    parent_product,
                    e_cells,
                    boundary: parent_product.is_none(),
                }
            })
            .collect();
        decomposition.levels.insert(k, cubes);
    }
    Ok(decomposition)
}

/// Outcome of checking every structural invariant of a decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CzdCheck {
    pub nesting: bool,
    pub coverage: bool,
    pub disjoint_cubes: bool,
    pub sandwich: bool,
    pub maximality: bool,
    pub e_disjoint: bool,
    /// Smallest `|E| / |Q|` over interior cubes (1 when there are none).
    pub min_density: f64,
    pub interior_cubes: usize,
    pub boundary_cubes: usize,
}

impl CzdCheck {
    /// All exact invariants, excluding the density bound.
    pub fn structural(&self) -> bool {
        self.nesting
            && self.coverage
            && self.disjoint_cubes
            && self.sandwich
            && self.maximality
            && self.e_disjoint
    }

    pub fn density_at_least(&self, alpha: f64) -> bool {
        self.min_density >= alpha
    }
}

impl CZDecomposition {
    pub fn cube_count(&self) -> usize {
        self.levels.values().map(Vec::len).sum()
    }

    pub fn cubes(&self) -> impl Iterator<Item = &SelectedCube> {
        self.levels.values().flatten()
    }

    /// Verifies the invariants; sandwich and maximality are asserted on
    /// interior cubes only.
    pub fn check(&self) -> CzdCheck {
        let n = self.grid.cell_count();
        let ks: Vec<i32> = self.omega.keys().copied().collect();
        let nesting = ks.windows(2).all(|w| {
            let (outer, inner) = (&self.omega[&w[0]], &self.omega[&w[1]]);
            w[1] != w[0] + 1 || inner.iter().all(|c| outer.binary_search(c).is_ok())
        });

        let mut coverage = true;
        let mut disjoint_cubes = true;
        for (k, cubes) in &self.levels {
            let mut hit = vec![false; n];
            for q in cubes {
                for &c in &q.cells {
                    disjoint_cubes &= !std::mem::replace(&mut hit[c], true);
                }
            }
            let union: Vec<usize> = (0..n).filter(|&c| hit[c]).collect();
            coverage &= self.omega.get(k) == Some(&union);
        }

        let mut sandwich = true;
        let mut maximality = true;
        let mut min_density = 1.0f64;
        let mut interior = 0;
        let mut boundary = 0;
        for q in self.cubes() {
            let ak = self.base.powi(q.level);
            if q.boundary {
                boundary += 1;
                sandwich &= q.product > ak;
                continue;
            }
            interior += 1;
            sandwich &= ak < q.product && q.product <= self.base.powi(q.level + 1);
            maximality &= q.parent_product.is_some_and(|p| p <= ak);
            min_density = min_density.min(q.density());
        }

        let mut used = vec![false; n];
        let mut e_disjoint = true;
        for q in self.cubes() {
            for &c in &q.e_cells {
                e_disjoint &= !std::mem::replace(&mut used[c], true);
            }
        }

        CzdCheck {
            nesting,
            coverage,
            disjoint_cubes,
            sandwich,
            maximality,
            e_disjoint,
            min_density,
            interior_cubes: interior,
            boundary_cubes: boundary,
        }
    }

    /// Plain-text cube listing: one line per selected cube.
    pub fn dump_text(&self) -> String {
        let dim = self.grid.dim();
        let mut s = format!(
            "# base {} grid dim {} L {} m {}\n# level lower side cells |E| product parent boundary\n",
            self.base,
            dim,
            self.grid.half_width(),
            self.grid.cell_exponent()
        );
        for q in self.cubes() {
            let lower: Vec<String> = q.lower[..dim].iter().map(|v| format!("{v}")).collect();
            let _ = writeln!(
                s,
                "{} [{}] {} {} {} {:.6e} {} {}",
                q.level,
                lower.join(","),
                q.side,
                q.cells.len(),
                q.e_cells.len(),
                q.product,
                q.parent_product.map_or("-".to_string(), |p| format!("{p:.6e}")),
                q.boundary
            );
        }
        s
    }

    pub fn dump_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{dyadic_family, Translate};

    fn grid1(l: f64, m: u32) -> Grid {
        Grid::new(1, l, m).unwrap()
    }

    fn random_pair(g: Grid, seed: u64) -> (SampledFunction, SampledFunction) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut f = || {
            let v = (0..g.cell_count())
                .map(|_| if rng.gen_bool(0.25) { rng.gen_range(0.0..4.0) } else { 0.0 })
                .collect();
            SampledFunction::new(g, v).unwrap()
        };
        (f(), f())
    }

    #[test]
    fn split_examples() {
        let g = grid1(1.0, 3);
        let f1 = SampledFunction::from_fn(g, |x| if x[0] < 0.0 { 2.0 } else { 0.5 }).unwrap();
        let s = split(&f1, &SampledFunction::zeros(g)).unwrap();
        assert_eq!(s.h1, SampledFunction::from_fn(g, |x| if x[0] < 0.0 { 2.0 } else { 0.0 }).unwrap());
        assert_eq!(s.h2, SampledFunction::from_fn(g, |x| if x[0] < 0.0 { 0.0 } else { 0.5 }).unwrap());
        assert!(s.h3.values().iter().chain(s.h4.values()).all(|&v| v == 0.0));
        let small = SampledFunction::constant(g, 0.9).unwrap();
        let s = split(&small, &small).unwrap();
        assert!(s.h1.values().iter().all(|&v| v == 0.0));
        assert_eq!(s.h2, small);
        assert_eq!((SplitFunctions::rho(2), SplitFunctions::rho(3)), (1, 2));
    }

    #[test]
    fn split_invariants() {
        let g = grid1(2.0, 5);
        for seed in 0..10 {
            let (f1, f2) = random_pair(g, seed);
            let s = split(&f1, &f2).unwrap();
            for c in 0..g.cell_count() {
                for (hi, lo, f) in [(&s.h1, &s.h2, &f1), (&s.h3, &s.h4, &f2)] {
                    assert_eq!(hi.get(c) * lo.get(c), 0.0);
                    assert_eq!(hi.get(c) + lo.get(c), f.get(c));
                    assert!(hi.get(c) == 0.0 || hi.get(c) > 1.0);
                    assert!(lo.get(c) <= 1.0);
                }
            }
        }
    }

    #[test]
    fn zero_inputs_give_empty_decomposition() {
        let g = grid1(1.0, 3);
        let z = SampledFunction::zeros(g);
        let d = cz_decompose(&z, &z, 8.0, &dyadic_family(&g, Translate::ZERO)).unwrap();
        assert_eq!(d.cube_count(), 0);
        assert!(d.omega.is_empty());
    }

    #[test]
    fn unit_interval_levels() {
        let g = grid1(2.0, 4);
        let chi = SampledFunction::indicator(g, |x| (0.0..1.0).contains(&x[0]));
        let d = cz_decompose(&chi, &chi, 5.0, &dyadic_family(&g, Translate::ZERO)).unwrap();
        // Products: [-2,2) 1/16, [0,2) 1/4, [0,1) and its subcubes 1. No
        // power of 5 separates 1/4 from 1, so [0,1) is never maximal.
        assert!(!d.omega.contains_key(&0));
        assert_eq!(d.levels.keys().copied().collect::<Vec<_>>(), vec![-2, -1]);
        let top = &d.levels[&-1];
        assert_eq!(top.len(), 1);
        assert_eq!((top[0].lower[0], top[0].side), (0.0, 2.0));
        assert!(!top[0].boundary);
        let low = &d.levels[&-2];
        assert_eq!((low[0].lower[0], low[0].side), (-2.0, 4.0));
        assert!(low[0].boundary);
        let check = d.check();
        assert!(check.structural(), "{check:?}");
        assert!(d.dump_text().lines().count() == 4);
        assert!(d.dump_json().unwrap().contains("\"levels\""));
    }

    #[test]
    fn invariants_on_random_inputs() {
        for dim in [1, 2] {
            let g = Grid::new(dim, 2.0, if dim == 1 { 5 } else { 3 }).unwrap();
            let fam = dyadic_family(&g, Translate::ZERO);
            let a = default_base(dim);
            for seed in 0..5 {
                let (g1, g2) = random_pair(g, seed);
                let d = cz_decompose(&g1, &g2, a, &fam).unwrap();
                let c = d.check();
                assert!(c.structural(), "dim {dim} seed {seed}: {c:?}");
                // Provable density floor 1 - 2^dim / sqrt(a).
                let floor = 1.0 - 2f64.powi(dim as i32) / a.sqrt();
                assert!(c.min_density >= floor, "dim {dim} seed {seed}: {c:?}");
            }
        }
    }

    #[test]
    fn density_can_fall_below_one_minus_four_over_a() {
        // Q = [0, 1) carries g = 2.84 on its first 45 of 64 cells; its parent
        // [0, 2) averages just below 1, and the 45 cells all lie in cubes with
        // product 2.84^2 > 8 = a.
        let g = grid1(2.0, 6);
        let f = SampledFunction::from_fn(g, |x| {
            if (0.0..45.0 / 64.0).contains(&x[0]) {
                2.84
            } else {
                0.0
            }
        })
        .unwrap();
        let d = cz_decompose(&f, &f, 8.0, &dyadic_family(&g, Translate::ZERO)).unwrap();
        let q = d.levels[&0]
            .iter()
            .find(|q| q.lower[0] == 0.0 && q.side == 1.0)
            .unwrap();
        assert!(!q.boundary);
        assert_eq!(q.e_cells.len(), 19);
        let c = d.check();
        assert!(c.structural());
        assert!(c.min_density < 1.0 - 4.0 / 8.0);
        assert!(c.min_density >= 1.0 - 2.0 / 8f64.sqrt());
    }

    #[test]
    fn rejects_bad_parameters() {
        let g = grid1(1.0, 3);
        let fam = dyadic_family(&g, Translate::ZERO);
        let one = SampledFunction::constant(g, 1.0).unwrap();
        assert!(cz_decompose(&one, &one, 4.0, &fam).is_err());
        let neg = SampledFunction::constant(g, -1.0).unwrap();
        assert!(cz_decompose(&neg, &one, 8.0, &fam).is_err());
    }
}
