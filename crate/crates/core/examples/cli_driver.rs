//! Drives the command-line front end in-process and captures its JSON.

fn main() {
    let runs: [&[&str]; 3] = [
        &["spincorr", "wigner", "cg", "--j1", "1/2", "--m1", "1/2", "--j2", "1/2", "--m2", "-1/2", "--j3", "1", "--m3", "0", "--exact"],
        &["spincorr", "basis", "matrix", "--n", "2", "--l", "2", "--m", "0", "--exact"],
        &["spincorr", "asym", "sigma", "--l", "1", "1", "1", "--which", "s1"],
    ];
    for argv in runs {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = spincorr::cli::run(argv.iter().copied(), &mut out, &mut err);
        print!("[{code}] {}", String::from_utf8_lossy(&out));
    }
}
