//! Truncated domains, sampled functions, and dyadic cube lattices.
//!
//! A [`Grid`] covers the box `[-L, L)^dim` with cells of side `h = 2^-m`.
//! Functions are step functions sampled at cell centers. All suprema over
//! "all cubes" in this crate are maxima over finite, enumerated cube
//! families built here, so reported constants are lower bounds of the
//! continuum quantities.
//!
//! Dyadic lattices are anchored at the lower corner `-L` of the domain.
//! For cube sides up to `L` this is the standard lattice through the
//! origin; at the single top level (side `2L`) it makes the whole domain
//! one cube instead of two half-empty ones.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default upper bound on the number of cells a grid may hold.
pub const DEFAULT_CELL_BUDGET: usize = 1 << 22;

/// Uniform cell lattice over `[-L, L)^dim` with `L = 2^half_width_log2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    half_width_log2: u32,
    cell_exponent: u32,
}

impl Grid {
    /// Builds the grid for `dim`, half width `L` and cell side `2^-m`.
    pub fn new(dim: usize, half_width: f64, cell_exponent: u32) -> Result<Self> {
        Self::with_budget(dim, half_width, cell_exponent, DEFAULT_CELL_BUDGET)
    }

    pub fn with_budget(
        dim: usize,
        half_width: f64,
        cell_exponent: u32,
        cell_budget: usize,
    ) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::UnsupportedDimension(dim));
        }
        if cell_exponent < 1 {
            return Err(Error::InvalidGrid(format!(
                "cell exponent must be at least 1, got {cell_exponent}"
            )));
        }
        if !(half_width.is_finite() && half_width >= 1.0) || half_width.fract() != 0.0 {
            return Err(Error::InvalidGrid(format!(
                "half width must be a power of two >= 1, got {half_width}"
            )));
        }
        let whole = half_width as u64;
        if !whole.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "half width must be a power of two >= 1, got {half_width}"
            )));
        }
        let half_width_log2 = whole.trailing_zeros();
        let axis_log2 = half_width_log2 + cell_exponent + 1;
        let total_log2 = axis_log2 as usize * dim;
        if total_log2 >= usize::BITS as usize - 1 {
            return Err(Error::CellBudget {
                cells: usize::MAX,
                budget: cell_budget,
            });
        }
        let cells = 1usize << total_log2;
        if cells > cell_budget {
            return Err(Error::CellBudget {
                cells,
                budget: cell_budget,
            });
        }
        Ok(Self {
            dim,
            half_width_log2,
            cell_exponent,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `L`, the half width of the domain.
    pub fn half_width(&self) -> f64 {
        (1u64 << self.half_width_log2) as f64
    }

    pub fn half_width_log2(&self) -> u32 {
        self.half_width_log2
    }

    /// `m`, with cell side `h = 2^-m`.
    pub fn cell_exponent(&self) -> u32 {
        self.cell_exponent
    }

    pub fn cell_side(&self) -> f64 {
        0.5f64.powi(self.cell_exponent as i32)
    }

    /// `h^dim`.
    pub fn cell_volume(&self) -> f64 {
        self.cell_side().powi(self.dim as i32)
    }

    pub fn cells_per_axis(&self) -> usize {
        1usize << (self.half_width_log2 + self.cell_exponent + 1)
    }

    pub fn cell_count(&self) -> usize {
        self.cells_per_axis().pow(self.dim as u32)
    }

    pub fn domain_measure(&self) -> f64 {
        (2.0 * self.half_width()).powi(self.dim as i32)
    }

    /// Center coordinate of the `i`-th cell along any axis.
    pub fn axis_coordinate(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.cell_side() - self.half_width()
    }

    /// Per-axis indices of a cell; the first axis varies fastest.
    pub fn axis_indices(&self, cell: usize) -> [usize; 2] {
        let n = self.cells_per_axis();
        match self.dim {
            1 => [cell, 0],
            _ => [cell % n, cell / n],
        }
    }

    pub fn cell_index(&self, axis: [usize; 2]) -> usize {
        match self.dim {
            1 => axis[0],
            _ => axis[0] + self.cells_per_axis() * axis[1],
        }
    }

    /// Cell center; the second coordinate is zero when `dim == 1`.
    pub fn center(&self, cell: usize) -> [f64; 2] {
        let [i, j] = self.axis_indices(cell);
        match self.dim {
            1 => [self.axis_coordinate(i), 0.0],
            _ => [self.axis_coordinate(i), self.axis_coordinate(j)],
        }
    }

    /// Euclidean norm of the cell center.
    pub fn center_norm(&self, cell: usize) -> f64 {
        let c = self.center(cell);
        c[0].hypot(c[1])
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        let (ca, cb) = (self.center(a), self.center(b));
        (ca[0] - cb[0]).hypot(ca[1] - cb[1])
    }

    /// Lebesgue measure of `count` cells.
    pub fn measure(&self, count: usize) -> f64 {
        count as f64 * self.cell_volume()
    }

    /// True when the cell lies in the outermost ring of the domain.
    pub fn is_boundary_cell(&self, cell: usize) -> bool {
        let n = self.cells_per_axis();
        let idx = self.axis_indices(cell);
        idx[..self.dim].iter().any(|&i| i == 0 || i == n - 1)
    }
}

/// Real-valued samples, one per cell, all finite.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl SampledFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.cell_count() {
            return Err(Error::LengthMismatch {
                expected: grid.cell_count(),
                actual: values.len(),
            });
        }
        if let Some(cell) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { cell });
        }
        Ok(Self { grid, values })
    }

    /// Samples `f` at every cell center (a slice of length `dim`).
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let dim = grid.dim();
        let values = (0..grid.cell_count())
            .map(|cell| f(&grid.center(cell)[..dim]))
            .collect();
        Self::new(grid, values)
    }

    pub fn constant(grid: Grid, c: f64) -> Result<Self> {
        Self::new(grid, vec![c; grid.cell_count()])
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.cell_count()],
        }
    }

    /// Characteristic function of the cells whose centers satisfy `pred`.
    pub fn indicator(grid: Grid, pred: impl Fn(&[f64]) -> bool) -> Self {
        let dim = grid.dim();
        let values = (0..grid.cell_count())
            .map(|cell| {
                if pred(&grid.center(cell)[..dim]) {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        Self { grid, values }
    }

    /// Characteristic function of a cell set.
    pub fn indicator_of_cells(grid: Grid, cells: &[usize]) -> Self {
        let mut values = vec![0.0; grid.cell_count()];
        for &c in cells {
            values[c] = 1.0;
        }
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, cell: usize) -> f64 {
        self.values[cell]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Cellwise combination; `f` receives the cell index and both samples.
    pub fn zip_map(&self, other: &Self, f: impl Fn(usize, f64, f64) -> f64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .enumerate()
            .map(|(i, (&a, &b))| f(i, a, b))
            .collect();
        Self::new(self.grid, values)
    }

    pub fn abs(&self) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v.abs()).collect(),
        }
    }

    pub fn scale(&self, c: f64) -> Result<Self> {
        self.map(|v| c * v)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |_, a, b| a + b)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |_, a, b| a * b)
    }

    /// Zero outside `cells`.
    pub fn restrict(&self, cells: &[usize]) -> Self {
        let mut values = vec![0.0; self.values.len()];
        for &c in cells {
            values[c] = self.values[c];
        }
        Self {
            grid: self.grid,
            values,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }
}

/// Riemann sum `h^dim * sum f(cell)` over `region`, summed in slice order.
pub fn integrate(f: &SampledFunction, region: &[usize]) -> f64 {
    cell_sum(f.values(), region) * f.grid().cell_volume()
}

/// Plain sum of `values` over `cells`, left to right.
pub(crate) fn cell_sum(values: &[f64], cells: &[usize]) -> f64 {
    let mut s = 0.0;
    for &c in cells {
        s += values[c];
    }
    s
}

/// Translate tag `t` in `{0, 1/3}^dim`, bit `i` set when `t_i = 1/3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Translate(u8);

impl Translate {
    pub const ZERO: Translate = Translate(0);

    pub fn from_mask(mask: u8) -> Self {
        Translate(mask & 0b11)
    }

    /// `t = (1/3, ..., 1/3)`.
    pub fn thirds(dim: usize) -> Self {
        Translate(((1u16 << dim) - 1) as u8)
    }

    /// All `2^dim` translates, starting with zero.
    pub fn all(dim: usize) -> Vec<Translate> {
        (0..(1u8 << dim)).map(Translate).collect()
    }

    pub fn mask(&self) -> u8 {
        self.0
    }

    pub fn component(&self, axis: usize) -> f64 {
        if self.0 >> axis & 1 == 1 {
            1.0 / 3.0
        } else {
            0.0
        }
    }

    pub fn label(&self, dim: usize) -> String {
        let parts: Vec<&str> = (0..dim)
            .map(|a| if self.0 >> a & 1 == 1 { "1/3" } else { "0" })
            .collect();
        if dim == 1 {
            parts[0].to_string()
        } else {
            format!("({})", parts.join(","))
        }
    }
}

/// A cube `-L + 2^-k([0,1)^dim + j + (-1)^k t)` with the cells whose
/// centers it contains.
#[derive(Debug, Clone, PartialEq)]
pub struct DyadicCube {
    level: i32,
    offset: [i64; 2],
    translate: Translate,
    lower: [f64; 2],
    side: f64,
    cells: Vec<usize>,
    parent: Option<usize>,
    inside_domain: bool,
}

impl DyadicCube {
    pub fn level(&self) -> i32 {
        self.level
    }

    pub fn offset(&self) -> [i64; 2] {
        self.offset
    }

    pub fn translate(&self) -> Translate {
        self.translate
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    /// Lower corner of the real cube (unused axes are zero).
    pub fn lower(&self) -> [f64; 2] {
        self.lower
    }

    /// Cells by center membership, ascending.
    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    /// Index of the parent cube in the next coarser level of the family.
    pub fn parent(&self) -> Option<usize> {
        self.parent
    }

    /// True when the real cube lies inside the domain.
    pub fn inside_domain(&self) -> bool {
        self.inside_domain
    }

    pub fn contains_cell(&self, cell: usize) -> bool {
        self.cells.binary_search(&cell).is_ok()
    }

    /// Measure of the cell set.
    pub fn measure(&self, grid: &Grid) -> f64 {
        grid.measure(self.cells.len())
    }

    /// Whether the cell set touches the outer ring of the domain.
    pub fn touches_boundary(&self, grid: &Grid) -> bool {
        self.cells.iter().any(|&c| grid.is_boundary_cell(c))
    }
}

/// Address of a cube inside a [`CubeFamily`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CubeId {
    pub level_index: usize,
    pub cube: usize,
}

/// One level of a family: cubes of equal side partitioning the cells.
#[derive(Debug, Clone)]
pub struct FamilyLevel {
    level: i32,
    cubes: Vec<DyadicCube>,
    owner: Vec<u32>,
}

impl FamilyLevel {
    pub fn level(&self) -> i32 {
        self.level
    }

    pub fn side(&self) -> f64 {
        2f64.powi(-self.level)
    }

    pub fn cubes(&self) -> &[DyadicCube] {
        &self.cubes
    }

    /// Index of the cube of this level that contains `cell`.
    pub fn owner(&self, cell: usize) -> usize {
        self.owner[cell] as usize
    }
}

/// Every cube of one translated dyadic lattice with side between `h` and
/// `2L` that contains at least one cell center.
#[derive(Debug, Clone)]
pub struct CubeFamily {
    grid: Grid,
    translate: Translate,
    levels: Vec<FamilyLevel>,
}

impl CubeFamily {
    pub fn new(grid: &Grid, translate: Translate) -> Self {
        let grid = *grid;
        let top = -(grid.half_width_log2() as i32) - 1;
        let bottom = grid.cell_exponent() as i32;
        let mut levels: Vec<FamilyLevel> = Vec::with_capacity((bottom - top + 1) as usize);
        for k in top..=bottom {
            let mut level = build_level(&grid, translate, k);
            if let Some(prev) = levels.last() {
                for cube in &mut level.cubes {
                    cube.parent = Some(prev.owner(cube.cells[0]));
                }
            }
            levels.push(level);
        }
        Self {
            grid,
            translate,
            levels,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn translate(&self) -> Translate {
        self.translate
    }

    /// Levels from the coarsest (side `2L`) to the finest (side `h`).
    pub fn levels(&self) -> &[FamilyLevel] {
        &self.levels
    }

    pub fn cube(&self, id: CubeId) -> &DyadicCube {
        &self.levels[id.level_index].cubes[id.cube]
    }

    pub fn cubes(&self) -> impl Iterator<Item = &DyadicCube> {
        self.levels.iter().flat_map(|l| l.cubes.iter())
    }

    pub fn cube_ids(&self) -> impl Iterator<Item = CubeId> + '_ {
        self.levels.iter().enumerate().flat_map(|(li, l)| {
            (0..l.cubes.len()).map(move |c| CubeId {
                level_index: li,
                cube: c,
            })
        })
    }

    pub fn cube_count(&self) -> usize {
        self.levels.iter().map(|l| l.cubes.len()).sum()
    }

    /// Cubes of the next finer level whose parent is `id`.
    pub fn children(&self, id: CubeId) -> Vec<usize> {
        let Some(next) = self.levels.get(id.level_index + 1) else {
            return Vec::new();
        };
        let mut out: Vec<usize> = self
            .cube(id)
            .cells
            .iter()
            .map(|&c| next.owner(c))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn all_levels_inside_domain(&self) -> bool {
        self.cubes().all(|c| c.inside_domain)
    }
}

/// `dyadic_family(grid, t)`: the lattice `D_t` restricted to the grid.
pub fn dyadic_family(grid: &Grid, translate: Translate) -> CubeFamily {
    CubeFamily::new(grid, translate)
}

/// One family per translate in `{0, 1/3}^dim`, zero first.
pub fn translated_families(grid: &Grid) -> Vec<CubeFamily> {
    Translate::all(grid.dim())
        .into_iter()
        .map(|t| CubeFamily::new(grid, t))
        .collect()
}

fn build_level(grid: &Grid, translate: Translate, k: i32) -> FamilyLevel {
    let dim = grid.dim();
    let n = grid.cells_per_axis();
    let h = grid.cell_side();
    let half = grid.half_width();
    let side = 2f64.powi(-k);
    let sign = if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };

    // Per axis: lattice index of each cell center, plus the index range.
    let mut axis_j: Vec<Vec<i64>> = Vec::with_capacity(dim);
    let mut shifts = [0.0; 2];
    for (axis, shift) in shifts.iter_mut().enumerate().take(dim) {
        *shift = sign * translate.component(axis);
        let js = (0..n)
            .map(|i| ((i as f64 + 0.5) * h / side - *shift).floor() as i64)
            .collect();
        axis_j.push(js);
    }
    let lo: Vec<i64> = axis_j.iter().map(|js| js[0]).collect();
    let span: Vec<usize> = axis_j
        .iter()
        .map(|js| (js[n - 1] - js[0] + 1) as usize)
        .collect();

    let slots = span.iter().product::<usize>();
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); slots];
    let mut slot_of_cell = vec![0usize; grid.cell_count()];
    for (cell, slot_ref) in slot_of_cell.iter_mut().enumerate() {
        let idx = grid.axis_indices(cell);
        let mut slot = 0;
        let mut stride = 1;
        for axis in 0..dim {
            slot += (axis_j[axis][idx[axis]] - lo[axis]) as usize * stride;
            stride *= span[axis];
        }
        buckets[slot].push(cell);
        *slot_ref = slot;
    }

    let mut remap = vec![u32::MAX; slots];
    let mut cubes = Vec::new();
    for (slot, cells) in buckets.into_iter().enumerate() {
        if cells.is_empty() {
            continue;
        }
        let mut offset = [0i64; 2];
        let mut lower = [0.0; 2];
        let mut inside = true;
        let mut rest = slot;
        for axis in 0..dim {
            let j = lo[axis] + (rest % span[axis]) as i64;
            rest /= span[axis];
            offset[axis] = j;
            lower[axis] = -half + side * (j as f64 + shifts[axis]);
            inside &= lower[axis] >= -half && lower[axis] + side <= half;
        }
        remap[slot] = cubes.len() as u32;
        cubes.push(DyadicCube {
            level: k,
            offset,
            translate,
            lower,
            side,
            cells,
            parent: None,
            inside_domain: inside,
        });
    }
    let owner = slot_of_cell.into_iter().map(|s| remap[s]).collect();
    FamilyLevel {
        level: k,
        cubes,
        owner,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_cell_counts() {
        assert_eq!(Grid::new(1, 1.0, 3).unwrap().cell_count(), 16);
        assert_eq!(Grid::new(1, 2.0, 1).unwrap().cell_count(), 8);
        assert_eq!(Grid::new(2, 1.0, 2).unwrap().cell_count(), 64);
    }

    #[test]
    fn grid_centers() {
        let g = Grid::new(1, 1.0, 3).unwrap();
        assert_eq!(g.center(0)[0], -15.0 / 16.0);
        assert_eq!(g.center(15)[0], 15.0 / 16.0);
        for c in 0..g.cell_count() {
            let x = g.center(c)[0];
            assert!((-1.0..1.0).contains(&x));
        }
    }

    #[test]
    fn grid_rejects_bad_parameters() {
        assert!(matches!(Grid::new(1, 3.0, 2), Err(Error::InvalidGrid(_))));
        assert!(matches!(Grid::new(1, 0.5, 2), Err(Error::InvalidGrid(_))));
        assert!(matches!(Grid::new(1, 1.0, 0), Err(Error::InvalidGrid(_))));
        assert!(matches!(Grid::new(3, 1.0, 2), Err(Error::UnsupportedDimension(3))));
        assert!(matches!(
            Grid::with_budget(2, 4.0, 6, 1000),
            Err(Error::CellBudget { .. })
        ));
    }

    #[test]
    fn dyadic_level_counts() {
        let g = Grid::new(1, 1.0, 2).unwrap();
        let fam = dyadic_family(&g, Translate::ZERO);
        let sides: Vec<f64> = fam.levels().iter().map(|l| l.side()).collect();
        let counts: Vec<usize> = fam.levels().iter().map(|l| l.cubes().len()).collect();
        assert_eq!(sides, vec![2.0, 1.0, 0.5, 0.25]);
        assert_eq!(counts, vec![1, 2, 4, 8]);
        assert!(fam.all_levels_inside_domain());
    }

    #[test]
    fn aligned_blocks_for_zero_translate() {
        let g = Grid::new(2, 1.0, 2).unwrap();
        let fam = dyadic_family(&g, Translate::ZERO);
        let h = g.cell_side();
        for level in fam.levels() {
            let per = (level.side() / h).round() as usize;
            for cube in level.cubes() {
                assert_eq!(cube.cell_count(), per * per);
            }
        }
    }

    #[test]
    fn one_third_translate_shifts_unit_cubes() {
        let g = Grid::new(1, 1.0, 2).unwrap();
        let fam = dyadic_family(&g, Translate::thirds(1));
        let unit = fam.levels().iter().find(|l| l.level() == 0).unwrap();
        // (-1)^0 * 1/3: lower corners at -1 + j + 1/3.
        let lowers: Vec<f64> = unit.cubes().iter().map(|c| c.lower()[0]).collect();
        assert_eq!(unit.cubes().len(), 3);
        assert!((lowers[0] - (-5.0 / 3.0)).abs() < 1e-15);
        assert!((lowers[1] - (-2.0 / 3.0)).abs() < 1e-15);
        let half = fam.levels().iter().find(|l| l.level() == 1).unwrap();
        // (-1)^1 * 1/3 at side 1/2: lower corners at -1 + (j - 1/3)/2.
        assert!(half
            .cubes()
            .iter()
            .any(|c| (c.lower()[0] - (-1.0 - 1.0 / 6.0)).abs() < 1e-15));
        for level in fam.levels() {
            for cube in level.cubes() {
                for &cell in cube.cells() {
                    let x = g.center(cell)[0];
                    assert!(x >= cube.lower()[0] && x < cube.lower()[0] + cube.side());
                }
            }
        }
    }

    #[test]
    fn levels_partition_cells() {
        for dim in [1, 2] {
            let g = Grid::new(dim, 1.0, 3).unwrap();
            for fam in translated_families(&g) {
                for level in fam.levels() {
                    let mut seen = vec![0u8; g.cell_count()];
                    for cube in level.cubes() {
                        for &c in cube.cells() {
                            seen[c] += 1;
                        }
                    }
                    assert!(seen.iter().all(|&s| s == 1));
                }
            }
        }
    }

    #[test]
    fn families_are_nested_or_disjoint() {
        for dim in [1, 2] {
            let g = Grid::new(dim, 1.0, 2).unwrap();
            for fam in translated_families(&g) {
                let cubes: Vec<&DyadicCube> = fam.cubes().collect();
                for a in &cubes {
                    for b in &cubes {
                        let inter = a.cells().iter().filter(|c| b.contains_cell(**c)).count();
                        let nested = inter == a.cell_count() || inter == b.cell_count();
                        assert!(inter == 0 || nested);
                    }
                }
            }
        }
    }

    #[test]
    fn parents_contain_children() {
        let g = Grid::new(2, 2.0, 2).unwrap();
        for fam in translated_families(&g) {
            for (li, level) in fam.levels().iter().enumerate().skip(1) {
                for cube in level.cubes() {
                    let parent = &fam.levels()[li - 1].cubes()[cube.parent().unwrap()];
                    assert!(cube.cells().iter().all(|&c| parent.contains_cell(c)));
                }
            }
            assert!(fam.levels()[0].cubes().iter().all(|c| c.parent().is_none()));
        }
    }

    #[test]
    fn one_third_family_has_outside_cubes() {
        let g = Grid::new(1, 1.0, 3).unwrap();
        assert!(!dyadic_family(&g, Translate::thirds(1)).all_levels_inside_domain());
    }

    #[test]
    fn integrate_indicator_and_linear() {
        let g = Grid::new(1, 1.0, 3).unwrap();
        let all: Vec<usize> = (0..g.cell_count()).collect();
        let chi = SampledFunction::indicator(g, |x| (0.0..1.0).contains(&x[0]));
        assert_eq!(integrate(&chi, &all), 1.0);

        let c = SampledFunction::constant(g, 3.0).unwrap();
        assert_eq!(integrate(&c, &all[..5]), 3.0 * 5.0 * g.cell_volume());

        let g4 = Grid::new(1, 1.0, 4).unwrap();
        let x = SampledFunction::from_fn(g4, |x| x[0]).unwrap();
        let right: Vec<usize> = (16..32).collect();
        assert_eq!(integrate(&x, &right), 0.5);
    }

    #[test]
    fn new_rejects_non_finite() {
        let g = Grid::new(1, 1.0, 1).unwrap();
        let mut v = vec![0.0; g.cell_count()];
        v[2] = f64::NAN;
        assert_eq!(
            SampledFunction::new(g, v).unwrap_err(),
            Error::NonFinite { cell: 2 }
        );
        assert!(matches!(
            SampledFunction::new(g, vec![0.0; 3]),
            Err(Error::LengthMismatch { .. })
        ));
    }
}
