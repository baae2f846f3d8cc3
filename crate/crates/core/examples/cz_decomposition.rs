//! Calderón-Zygmund decomposition of a bilinear level-set structure, with
//! every invariant checked.

use varlebesgue::czd::{cz_decompose, default_base, split};
use varlebesgue::grid::{dyadic_family, Grid, SampledFunction, Translate};

fn main() -> varlebesgue::Result<()> {
    let grid = Grid::new(1, 2.0, 6)?;
    let f1 = SampledFunction::from_fn(grid, |x| 3.0 * (-4.0 * x[0] * x[0]).exp())?;
    let f2 = SampledFunction::from_fn(grid, |x| if x[0] > -0.5 { 2.5 } else { 0.5 })?;
    let h = split(&f1, &f2)?;
    let a = default_base(grid.dim());
    let d = cz_decompose(&h.h1, &h.h3, a, &dyadic_family(&grid, Translate::ZERO))?;
    print!("{}", d.dump_text());
    let chk = d.check();
    println!(
        "structural invariants hold: {}; smallest |E|/|Q| on interior cubes: {:.4}",
        chk.structural(),
        chk.min_density
    );
    Ok(())
}
