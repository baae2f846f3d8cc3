//! The full bilinear maximal function against the sum of its translated
//! dyadic versions.

use varlebesgue::grid::{Grid, SampledFunction};
use varlebesgue::operators::one_third_domination;

fn main() -> varlebesgue::Result<()> {
    for m in [4, 5, 6, 7] {
        let grid = Grid::new(1, 2.0, m)?;
        let f1 = SampledFunction::indicator(grid, |x| (0.0..1.0).contains(&x[0]));
        let f2 = SampledFunction::indicator(grid, |x| (-0.5..0.25).contains(&x[0]));
        let d = one_third_domination(&f1, &f2)?;
        let one = SampledFunction::constant(grid, 1.0)?;
        let c = one_third_domination(&one, &one)?;
        println!(
            "m = {m}: constant {:.5} at x = {:.4}; constant input gives {}",
            d.constant,
            grid.center(d.cell)[0],
            c.constant
        );
    }
    Ok(())
}
