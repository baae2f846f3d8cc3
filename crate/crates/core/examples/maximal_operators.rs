//! Linear and bilinear maximal functions, averaging operators and the
//! sharp maximal function.

use varlebesgue::grid::{dyadic_family, translated_families, Grid, SampledFunction, Translate};
use varlebesgue::operators::{
    averaging_tq, bilinear_maximal, bilinear_maximal_all_intervals, maximal_all_intervals, sharp_maximal,
};

fn main() -> varlebesgue::Result<()> {
    let grid = Grid::new(1, 2.0, 5)?;
    let f1 = SampledFunction::indicator(grid, |x| (0.0..1.0).contains(&x[0]));
    let f2 = SampledFunction::from_fn(grid, |x| (1.0 - x[0].abs()).max(0.0))?;

    let full = bilinear_maximal_all_intervals(&f1, &f2)?;
    let dyadic = bilinear_maximal(&f1, &f2, &translated_families(&grid))?;
    let m1 = maximal_all_intervals(&f1)?;
    let m2 = maximal_all_intervals(&f2)?;
    let sharp = sharp_maximal(&f1, 1.0, &translated_families(&grid))?;
    println!("{:>8} {:>10} {:>10} {:>10} {:>10}", "x", "M(f1,f2)", "dyadic", "Mf1 Mf2", "M# f1");
    for c in (0..grid.cell_count()).step_by(8) {
        println!(
            "{:>8.4} {:>10.5} {:>10.5} {:>10.5} {:>10.5}",
            grid.center(c)[0],
            full.values()[c],
            dyadic.values()[c],
            m1.values()[c] * m2.values()[c],
            sharp.values()[c]
        );
    }

    // T_Q over the four disjoint cubes of side 1.
    let fam = dyadic_family(&grid, Translate::ZERO);
    let level = fam.levels().iter().find(|l| l.side() == 1.0).expect("unit level exists");
    let cubes: Vec<_> = level.cubes().iter().collect();
    let t = averaging_tq(&cubes, &f1, &f2)?;
    let per_cube = grid.cell_count() / cubes.len();
    let values: Vec<f64> = (0..cubes.len()).map(|k| t.get(k * per_cube)).collect();
    println!("T_Q(f1, f2) on the unit cubes: {values:?}");
    Ok(())
}
