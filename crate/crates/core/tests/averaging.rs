//! Norm identities of the averaging operators over random disjoint families.

use approx::assert_relative_eq;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use varlebesgue::exponents::Exponent;
use varlebesgue::grid::{dyadic_family, CubeFamily, CubeId, DyadicCube, Grid, SampledFunction, Translate};
use varlebesgue::norms::{luxemburg_norm, norm_on_cells, NormConfig};
use varlebesgue::operators::{averaging_tq, p_average_operator, property_g_ratio};

/// Random pairwise disjoint cubes: walk the tree from the root and either
/// stop, skip or descend.
fn disjoint_cubes<'a>(fam: &'a CubeFamily, rng: &mut ChaCha8Rng) -> Vec<&'a DyadicCube> {
    let root = fam.cube_ids().next().unwrap();
    let mut stack = vec![root];
    let mut out = Vec::new();
    while let Some(id) = stack.pop() {
        let kids = fam.children(id);
        let u: f64 = rng.gen();
        if kids.is_empty() || u < 0.3 {
            if u < 0.2 {
                out.push(fam.cube(id));
            }
            continue;
        }
        for k in kids {
            stack.push(CubeId {
                level_index: id.level_index + 1,
                cube: k,
            });
        }
    }
    out
}

fn random_function(grid: Grid, rng: &mut ChaCha8Rng) -> SampledFunction {
    let v = (0..grid.cell_count()).map(|_| rng.gen_range(-2.0..2.0)).collect();
    SampledFunction::new(grid, v).unwrap()
}

#[test]
fn p_averages_preserve_the_norm_for_constant_exponents() {
    let grid = Grid::new(1, 2.0, 5).unwrap();
    let fam = dyadic_family(&grid, Translate::ZERO);
    let cfg = NormConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for trial in 0..20 {
        let cubes = disjoint_cubes(&fam, &mut rng);
        if cubes.is_empty() {
            continue;
        }
        let p = Exponent::constant(grid, 1.2 + 0.2 * trial as f64).unwrap();
        let h = random_function(grid, &mut rng);
        let union: Vec<usize> = cubes.iter().flat_map(|q| q.cells().iter().copied()).collect();
        let t = p_average_operator(&h, &p, &cubes, &cfg).unwrap();
        let lhs = luxemburg_norm(&t, &p, &cfg).unwrap().value;
        let rhs = norm_on_cells(&h, &union, &p, &cfg).unwrap().value;
        assert_relative_eq!(lhs, rhs, max_relative = 1e-8);
    }
}

#[test]
fn summation_property_holds_with_constant_one_for_fixed_exponents() {
    let grid = Grid::new(1, 2.0, 5).unwrap();
    let fam = dyadic_family(&grid, Translate::ZERO);
    let cfg = NormConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let p1 = Exponent::constant(grid, 3.0).unwrap();
    let p2 = Exponent::constant(grid, 4.0).unwrap();
    for _ in 0..20 {
        let cubes = disjoint_cubes(&fam, &mut rng);
        let (f1, f2, h) = (
            random_function(grid, &mut rng),
            random_function(grid, &mut rng),
            random_function(grid, &mut rng),
        );
        let r = property_g_ratio(&f1, &f2, &h, &p1, &p2, &cubes, &cfg).unwrap();
        assert!(r <= 1.0 + 1e-8, "{r}");
    }
}

#[test]
fn tq_is_supported_on_the_union_and_factorizes() {
    let grid = Grid::new(1, 2.0, 4).unwrap();
    let fam = dyadic_family(&grid, Translate::ZERO);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20 {
        let cubes = disjoint_cubes(&fam, &mut rng);
        let f1 = random_function(grid, &mut rng);
        let f2 = random_function(grid, &mut rng);
        let t = averaging_tq(&cubes, &f1, &f2).unwrap();
        for c in 0..grid.cell_count() {
            match cubes.iter().find(|q| q.contains_cell(c)) {
                Some(q) => {
                    let n = q.cell_count() as f64;
                    let a1: f64 = q.cells().iter().map(|&i| f1.get(i)).sum::<f64>() / n;
                    let a2: f64 = q.cells().iter().map(|&i| f2.get(i)).sum::<f64>() / n;
                    assert_relative_eq!(t.get(c), a1 * a2, max_relative = 1e-12, epsilon = 1e-15);
                }
                None => assert_eq!(t.get(c), 0.0),
            }
        }
    }
}
