//! Numerical classification of sequences of correspondences as n grows.

use spincorr::asymptotics::classify_sequence;
use spincorr::correspondence::Family;

fn main() -> spincorr::Result<()> {
    let grid: Vec<usize> = (50..=400).step_by(50).collect();
    let mut families: Vec<Family> = Family::NAMED.to_vec();
    families.extend([Family::inverse_power(), Family::log_shift(), Family::mod3_sign()]);
    for fam in &families {
        let r = classify_sequence(fam, 6, &grid)?;
        let f = r.flags;
        let on: Vec<&str> = [
            ("poisson", f.poisson),
            ("anti-poisson", f.anti_poisson),
            ("pure", f.pure),
            ("limiting", f.limiting),
            ("pseudo", f.pseudo_classical),
            ("quasi", f.quasi_classical),
            ("strong", f.strong_limiting),
            ("bohr", f.bohr),
            ("anti-bohr", f.anti_bohr),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.then_some(k))
        .collect();
        println!("{:<17} {}", fam.name(), if on.is_empty() { "none".to_string() } else { on.join(" ") });
    }
    Ok(())
}
