//! Luxemburg norms, modulars and the Hölder inequality on a grid.

use varlebesgue::exponents::{combine, Exponent};
use varlebesgue::grid::{Grid, SampledFunction};
use varlebesgue::norms::{holder_defect, luxemburg_norm, modular, rescale_check, two_factor_holder_defect, NormConfig};

fn main() -> varlebesgue::Result<()> {
    let grid = Grid::new(1, 2.0, 8)?;
    let cfg = NormConfig::default();

    // p jumps from 1 to 2 at x = 1; the norm of chi_[0,2) solves 1/t + 1/t^2 = 1.
    let p = Exponent::from_fn(grid, |x| if x[0] < 1.0 { 1.0 } else { 2.0 })?;
    let chi = SampledFunction::indicator(grid, |x| (0.0..2.0).contains(&x[0]));
    let n = luxemburg_norm(&chi, &p, &cfg)?;
    println!("||chi_[0,2)|| = {:.12} ({} bisection steps)", n.value, n.iterations);
    println!("golden ratio  = {:.12}", (1.0 + 5f64.sqrt()) / 2.0);

    let p = Exponent::smooth_bump(grid, 2.5, 0.8, 1.0)?;
    let f = SampledFunction::from_fn(grid, |x| (-x[0] * x[0]).exp())?;
    let g = SampledFunction::from_fn(grid, |x| 1.0 / (1.0 + x[0].abs()))?;
    println!(
        "gaussian: p in [{:.3}, {:.3}], rho = {:.6}, norm = {:.6}",
        p.p_minus(),
        p.p_plus(),
        modular(&f, &p)?,
        luxemburg_norm(&f, &p, &cfg)?.value
    );
    println!("rescaling gap at s = 1.7: {:.2e}", rescale_check(&f, &p, 1.7, &cfg)?);
    println!("Hölder ratio: {:.6}", holder_defect(&f, &g, &p, &cfg)?);

    let q = Exponent::radial_log(grid, 2.0, 1.0)?;
    let r = combine(&p, &q)?;
    println!(
        "two-factor ratio: {:.6} with combined exponent in [{:.3}, {:.3}]",
        two_factor_holder_defect(&f, &g, &p, &q, &cfg)?,
        r.p_minus(),
        r.p_plus()
    );
    Ok(())
}
