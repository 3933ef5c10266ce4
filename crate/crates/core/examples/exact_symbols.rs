//! Exact Clebsch-Gordan, 3jm and 6j values as signed square roots of rationals.

use spincorr::exact::{exact_sum, SqrtRational};
use spincorr::wigner::{clebsch_gordan, product_symbol, wigner_3jm, wigner_6j_jjj};

fn main() -> spincorr::Result<()> {
    // spins are doubled: 2 means j = 1, 1 means j = 1/2
    let cg = clebsch_gordan(2, 0, 2, 0, 0, 0)?;
    println!("C(1 0, 1 0 | 0 0) = {cg} = {}", cg.decimal_string());

    let three = wigner_3jm(1, 1, 1, -1, 2, 0)?;
    println!("(1/2 1/2 1; 1/2 -1/2 0) = {three}");

    for n in 1..=4 {
        println!("{{1 1 1; j j j}} at n = {n}: {}", wigner_6j_jjj(1, 1, 1, n)?);
    }

    // completeness: sum over m1 of C^2 for fixed j3, m3
    let squares: Vec<SqrtRational> = (-2..=2)
        .step_by(2)
        .map(|m1| clebsch_gordan(2, m1, 2, -m1, 2, 0).map(|c| &c * &c))
        .collect::<spincorr::Result<_>>()?;
    println!("sum of squares = {}", exact_sum(&squares)?);

    let p = product_symbol(1, 1, 1, -1, 2, 0, 3)?;
    println!("[1 1 2; 1 -1 0][3/2] = {p}");
    let parsed: SqrtRational = "-1*sqrt(1/3)".parse()?;
    assert_eq!(parsed, cg);
    Ok(())
}
