//! Twisted products of symbols and their exact structure constants.

use num_complex::Complex64;
use spincorr::correspondence::{family_chars, Family};
use spincorr::sphere::{poisson_bracket, HarmonicVector};
use spincorr::twisted::{
    cartesian_identities_check, cartesian_symbols, twisted_basis_product_exact, twisted_commutator, twisted_product, verify_symbol_parity,
};

fn main() -> spincorr::Result<()> {
    let n = 6;
    for fam in [Family::StratonovichStandard, Family::BerezinStandard] {
        println!("{} at n = {n}", fam.name());
        for ((l, m), v) in twisted_basis_product_exact(&fam, n, 1, 1, 1, -1)? {
            println!("  Y_1^1 * Y_1^-1 -> Y_{l}^{m}: {v}");
        }
        let r = cartesian_identities_check(&fam, n)?;
        println!("  x*x + y*y + z*z = {:.12} (expected {:.12})", r.sum_of_squares, r.expected_sum_of_squares);
    }

    let c = family_chars(&Family::StratonovichStandard, n)?;
    let [x, y, z] = cartesian_symbols();
    let xy = twisted_product(&x, &y, &c)?;
    println!("x*y has degree {}", xy.degree());

    // (n/2)[f, g] approaches {f, g}
    let f = HarmonicVector::ylm(2, 1)?;
    let g = HarmonicVector::ylm(2, -1)?.add(&z);
    for m in [6, 24, 96] {
        let cm = family_chars(&Family::StratonovichStandard, m)?;
        let comm = twisted_commutator(&f, &g.with_cap(m), &cm)?.scale(Complex64::new(m as f64 / 2.0, 0.0));
        let br = poisson_bracket(&f, &g, Some(m));
        println!("n = {m:>3}: |(n/2)[f,g] - {{f,g}}| = {:.3e}", comm.max_abs_diff(&br));
    }

    let report = verify_symbol_parity(&c)?;
    for r in &report.rules {
        println!("{:<40} pairs {:>5}  defect {:.1e}", r.rule, r.pairs, r.max_defect);
    }
    Ok(())
}
