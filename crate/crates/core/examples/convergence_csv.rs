//! Writes a convergence table (n, sym_err, comm_err) as CSV for plotting.

use spincorr::asymptotics::convergence_study;
use spincorr::correspondence::Family;

fn main() -> spincorr::Result<()> {
    let fam = std::env::args().nth(1).map(|s| Family::from_name(&s)).transpose()?.unwrap_or(Family::BerezinStandard);
    let grid: Vec<usize> = (50..=400).step_by(50).collect();
    let study = convergence_study(&fam, 2, 1, 2, -1, &grid)?;
    print!("{}", study.to_csv());
    if let (Some(s), Some(c)) = (study.sym_fit, study.comm_fit) {
        eprintln!("{}: sym ~ n^{:.2}, comm ~ n^{:.2}", study.family, s.exponent, c.exponent);
    }
    Ok(())
}
