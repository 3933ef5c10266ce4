//! The coupled basis e(l, m) of operators on the spin-j space and its product rule.

use spincorr::su2_basis::{coupled_basis, decompose, index_lm, product_in_coupled_basis, product_in_coupled_basis_exact, verify_parity};

fn main() -> spincorr::Result<()> {
    // j = 1
    let n = 2;
    for (l, m) in [(0, 0), (1, 0), (1, 1), (2, 0), (2, -2)] {
        let e = coupled_basis(n, l, m)?;
        let diag: Vec<String> = e.diag().iter().map(|x| x.to_string()).collect();
        println!("e({l},{m:>2}): offset {m:>2}, entries [{}]", diag.join(", "));
    }

    // e(1,1) e(1,-1) expanded exactly along e(l, 0)
    for (l, c) in product_in_coupled_basis_exact(n, 1, 1, 1, -1)? {
        println!("e(1,1) e(1,-1) -> e({l},0): {c}");
    }

    // the same product through dense multiplication
    let dense = coupled_basis(n, 1, 1)?.to_operator()?.mul(&coupled_basis(n, 1, -1)?.to_operator()?)?;
    let a = decompose(&dense)?;
    let b = product_in_coupled_basis(n, 1, 1, 1, -1)?;
    let gap = a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    println!("dense vs rule: {gap:.1e}");
    let (l, m) = index_lm(5);
    println!("coefficient slot 5 holds (l, m) = ({l}, {m})");

    let r = verify_parity(4)?;
    println!("parity rules at n = 4: pass = {}, {} pairs", r.pass, r.pairs_checked);
    Ok(())
}
