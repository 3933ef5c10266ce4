//! Large-n behaviour: the two-term expansion of product symbols and the sigma sums.

use spincorr::asymptotics::{
    asymptotic_coeff, expansion_residual, normalized_product_symbol, residual_slope, sigma0_closed, sigma1_brute, sigma1_closed,
    verify_sigma_identities,
};

fn main() -> spincorr::Result<()> {
    let (l1, m1, l2, m2, l3) = (2, 1, 1, -1, 2);
    println!("order 0: {}", asymptotic_coeff(l1, m1, l2, m2, l3, 0)?);
    println!("order 1: {}", asymptotic_coeff(l1, m1, l2, m2, l3, 1)?);
    for n in [10, 100, 1000] {
        let exact = normalized_product_symbol(l1, m1, l2, m2, l3, n)?;
        println!("n = {n:>4}: {:.12}  residual {:.3e}", exact.to_f64()?, expansion_residual(l1, m1, l2, m2, l3, n)?);
    }
    let ns = [50, 71, 100, 141, 200, 283, 400];
    if let Some(fit) = residual_slope(l1, m1, l2, m2, l3, &ns)? {
        println!("residual ~ n^{:.3}", fit.exponent);
    }

    println!("Sigma0(2,3,3) = {}", sigma0_closed(2, 3, 3)?);
    println!("Sigma1(2,3,4) = {} (defining sum {})", sigma1_closed(2, 3, 4)?, sigma1_brute(2, 3, 4)?);
    let sweep = verify_sigma_identities(40)?;
    println!("closed forms hold on {} triangles ({} with odd total)", sweep.triangles, sweep.odd_triangles);
    Ok(())
}
