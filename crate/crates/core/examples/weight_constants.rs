//! Scalar and bilinear weight constants, and the growth of a power weight
//! outside the admissible range as the domain doubles.

use varlebesgue::exponents::Exponent;
use varlebesgue::grid::{translated_families, Grid};
use varlebesgue::norms::NormConfig;
use varlebesgue::weights::{ap_constant, scalar_characterization, vec_ap_constant, VectorWeight, Weight};

fn main() -> varlebesgue::Result<()> {
    let cfg = NormConfig::default();
    println!("{:>4} {:>12} {:>12}", "L", "|x|^0.25", "|x|^0.75");
    for l in [1.0, 2.0, 4.0, 8.0] {
        let grid = Grid::new(1, l, 4)?;
        let fams = translated_families(&grid);
        let p = Exponent::constant(grid, 2.0)?;
        let a = ap_constant(&Weight::power(grid, 0.25)?, &p, &fams, &cfg)?.value;
        let b = ap_constant(&Weight::power(grid, 0.75)?, &p, &fams, &cfg)?.value;
        println!("{l:>4} {a:>12.6} {b:>12.6}");
    }

    let grid = Grid::new(1, 2.0, 5)?;
    let fams = translated_families(&grid);
    let p1 = Exponent::smooth_bump(grid, 2.5, 0.8, 1.0)?;
    let p2 = Exponent::radial_log(grid, 2.0, 1.0)?;
    let vw = VectorWeight::new(Weight::power(grid, 0.1)?, Weight::power(grid, -0.1)?, &p1, &p2)?;
    let v = vec_ap_constant(&vw, &p1, &p2, &fams, &cfg)?;
    let sc = scalar_characterization(&vw, &p1, &p2, &fams, &cfg)?;
    println!("bilinear constant {:.6} attained in family {}", v.value, v.family);
    println!("scalar constants c1 = {:.6}, c2 = {:.6}, c3 = {:.6}", sc.c1.value, sc.c2.value, sc.c3.value);
    Ok(())
}
