//! Symbol correspondences: characteristic numbers, operator kernels and symbols.

use spincorr::correspondence::{
    family_chars, family_chars_exact, metric_identity_check, operator_kernel, operator_of, symbol_of, symbol_via_kernel, Family,
};
use spincorr::sphere::{sample_points, HarmonicVector};
use spincorr::su2_basis::j3_matrix;

fn main() -> spincorr::Result<()> {
    let n = 4;
    for fam in Family::NAMED {
        let exact: Vec<String> = family_chars_exact(&fam, n)?.iter().map(|c| c.to_string()).collect();
        println!("{:<17} {}", fam.name(), exact.join(" "));
    }

    // a custom family from any generator with c_0 = 1
    let custom = Family::custom("half-damped", |_, l| if l == 0 { 1.0 } else { 0.5 });
    let c = family_chars(&custom, n)?;
    println!("{}: {:?}", custom.name(), c.as_slice());

    let b = family_chars(&Family::BerezinStandard, n)?;
    let k = operator_kernel(&b)?;
    println!("Berezin kernel trace = {:.6}", k.trace().re);

    // the symbol of J3 is proportional to the height function
    let j3 = j3_matrix(n)?;
    let f = symbol_of(&j3, &b)?;
    println!("Berezin symbol of J3: {:?}", f.to_json());
    for p in sample_points(3, 7) {
        let via_kernel = symbol_via_kernel(&j3, &b, &p)?;
        println!("  at {:?}: {:.6} (kernel route {:.6})", p.cartesian(), f.evaluate(&p).re, via_kernel.re);
    }

    let back = operator_of(&f, &b)?;
    println!("roundtrip error: {:.1e}", back.max_abs_diff(&j3));

    let s = family_chars(&Family::StratonovichStandard, n)?;
    let q = operator_of(&HarmonicVector::ylm(2, 1)?, &s)?;
    let check = metric_identity_check(&j3, &q, &s)?;
    println!("metric identity residual: {:.1e}", check.residual);
    Ok(())
}
