//! Spherical harmonics, pointwise products and Poisson brackets in coefficient space.

use num_complex::Complex64;
use spincorr::sphere::{build_grid, eval_ylm, pointwise_product, poisson_bracket, HarmonicVector, SpherePoint};

fn main() -> spincorr::Result<()> {
    // theta is the azimuth, phi the polar angle
    let p = SpherePoint::new(0.3, 1.1)?;
    println!("Y_2^1(p) = {:.6}", eval_ylm(2, 1, &p)?);

    let x = HarmonicVector::ylm(1, 1)?;
    let z = HarmonicVector::ylm(1, 0)?;
    let xz = pointwise_product(&x, &z, None);
    for (l, m, v) in xz.iter().filter(|t| t.2.norm() > 1e-15) {
        println!("Y_1^1 Y_1^0 -> ({l},{m}): {v:.6}");
    }
    let direct = x.evaluate(&p) * z.evaluate(&p);
    println!("pointwise check: {:.1e}", (xz.evaluate(&p) - direct).norm());

    let br = poisson_bracket(&x, &z, None);
    println!("{{Y_1^1, Y_1^0}} has degree {}", br.degree());

    // unit mean square: (1/4pi) int |Y|^2 = 1
    let grid = build_grid(8);
    let ms = grid.integrate(|q| {
        let y = eval_ylm(3, -2, q).unwrap_or_default();
        Complex64::new(y.norm_sqr(), 0.0)
    });
    println!("mean square of Y_3^-2: {:.12}", ms.re / (4.0 * std::f64::consts::PI));
    Ok(())
}
