//! Seeded Monte Carlo runs against the exact value, with a transcript of the
//! first rounds.

use xzmip::code::steane;
use xzmip::evaluator::{exact_value, mc_estimate_with, with_threads, write_transcript, McOptions};
use xzmip::hamiltonian::XZHamiltonian;
use xzmip::protocol::ProtocolParams;
use xzmip::strategy::Strategy;

fn main() -> xzmip::error::Result<()> {
    let h = XZHamiltonian::from_words(&[(1.0, "XX"), (1.0, "ZZ")])?;
    let code = steane();
    let s = Strategy::honest(&h, &code)?;
    let params = ProtocolParams::new(0.5, code, h)?;
    let exact = exact_value(&s, &params)?;
    println!("exact {:.6}", exact.total);

    for seed in [1, 2, 3] {
        let opts = McOptions::new(40_000, seed);
        let (r, _) = mc_estimate_with(&s, &params, &opts)?;
        let z = (r.total - exact.total) / r.total_stderr.unwrap_or(f64::NAN);
        println!("seed {seed}: {:.6} ± {:.6} ({z:+.2} stderr)", r.total, r.total_stderr.unwrap_or(0.0));
    }

    let opts = McOptions::new(4096, 9);
    let one = with_threads(Some(1), || mc_estimate_with(&s, &params, &opts))??.0;
    let two = with_threads(Some(2), || mc_estimate_with(&s, &params, &opts))??.0;
    println!("same report on 1 and 2 workers: {}", one.to_json()? == two.to_json()?);

    let opts = McOptions { samples: 3, seed: 5, full_answers: true, transcript: true };
    let (_, records) = mc_estimate_with(&s, &params, &opts)?;
    write_transcript(&mut std::io::stdout(), &records)?;
    Ok(())
}
