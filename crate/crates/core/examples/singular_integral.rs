//! A bilinear singular integral: kernel bound checks, the quadrature, and
//! pointwise control of its sharp maximal function by the bilinear maximal
//! function.

use varlebesgue::grid::{Grid, SampledFunction};
use varlebesgue::sio::{
    apply_bilinear_sio, check_kernel_bounds, grid_sampling, sharp_domination_test, BilinearKernel, OddTestKernel,
    SingularTestKernel, SioConfig,
};

fn main() -> varlebesgue::Result<()> {
    let kernel = OddTestKernel { dim: 1 };
    for m in [4, 5, 6] {
        let grid = Grid::new(1, 2.0, m)?;
        let r = check_kernel_bounds(&kernel, &grid_sampling(&grid, 20000, 7))?;
        let f = SampledFunction::indicator(grid, |x| (0.0..1.0).contains(&x[0]));
        let t = apply_bilinear_sio(&kernel, &f, &f, &SioConfig::default())?;
        let d = sharp_domination_test(&kernel, &f, &f, 0.25, 1e-12, &SioConfig::default())?;
        println!(
            "m = {m}: size {:.4}, smoothness {:.4}, max |T| {:.4}, sharp constant {:.5}",
            r.size_ratio,
            r.smoothness_ratio,
            t.result.max_abs(),
            d.constant
        );
    }
    let grid = Grid::new(1, 2.0, 6)?;
    let bad = check_kernel_bounds(&SingularTestKernel, &grid_sampling(&grid, 20000, 7))?;
    println!("{} passes the bounds: {}", SingularTestKernel.name(), bad.pass);
    Ok(())
}
