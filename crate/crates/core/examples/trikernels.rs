//! Integral trikernels: coefficient and invariant forms, the Berezin closed form, transforms.

use spincorr::correspondence::{family_chars, Family};
use spincorr::sphere::{build_grid, sample_points, HarmonicVector};
use spincorr::trikernel::{
    berezin_stratonovich, berezin_transform, integral_product_check, oriented_area, recursive_trikernel, trikernel_coeff, trikernel_invariant, wildberger_closed,
    wildberger_polar,
};

fn main() -> spincorr::Result<()> {
    let pts = sample_points(3, 11);
    let (a, b, c) = (&pts[0], &pts[1], &pts[2]);

    for fam in Family::NAMED {
        let ch = family_chars(&fam, 3)?;
        let coeff = trikernel_coeff(&ch, a, b, c)?;
        let inv = trikernel_invariant(&ch, a, b, c)?;
        println!("{:<17} {:.8}  gap {:.1e}", fam.name(), coeff, (coeff - inv).norm());
    }

    let n = 5;
    let ber = family_chars(&Family::BerezinStandard, n)?;
    let closed = wildberger_closed(n, a, b, c);
    // the closed form is the trikernel of the integral product, built from the twisted product recursively
    println!("Berezin n = {n}: closed {closed:.10}, series {:.10}", recursive_trikernel(&ber, a, b, c)?);
    let polar = wildberger_polar(n, a, b, c);
    println!("phase {:.8} = (n/2) area {:.8}", polar.phase, n as f64 / 2.0 * oriented_area(a, b, c));

    let f = HarmonicVector::random(n, 3, true);
    let bf = berezin_transform(&f, n)?;
    let twice = berezin_stratonovich(&berezin_stratonovich(&bf, n)?, n)?;
    println!("B f -> two B/S steps -> f: {:.1e}", twice.max_abs_diff(&f.with_cap(n)));

    let s = family_chars(&Family::StratonovichStandard, 2)?;
    let g = HarmonicVector::random(2, 4, false);
    let h = HarmonicVector::random(2, 5, false);
    let r = integral_product_check(&g, &h, &s, &build_grid(6))?;
    println!("integral product vs twisted product: {:.1e} over {} nodes", r.residual, r.grid_nodes);
    Ok(())
}
