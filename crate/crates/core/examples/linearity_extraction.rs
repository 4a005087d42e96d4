//! Fourier extraction of exactly linear observables from arbitrary families,
//! and the residual report for honest, classical and sign-flipped provers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use xzmip::analysis::{extract, quantum_linearity_report, FamilyLabel, ObservableFamily};
use xzmip::code::{steane, Basis};
use xzmip::dense::DenseOperator;
use xzmip::hamiltonian::XZHamiltonian;
use xzmip::pauli::BitString;
use xzmip::strategy::{Corruption, Strategy, WRule};

fn main() -> xzmip::error::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for n in 1..=2 {
        let members = (0..1 << n).map(|_| DenseOperator::random_observable(2, &mut rng)).collect();
        let family = ObservableFamily::new(FamilyLabel::Xhat, n, 2, vec![0, 1], members)?;
        let e = extract(&family)?;
        println!(
            "n = {n}: input linearity defect {:.3}, extracted {:.2e}, Parseval defect {:.2e}",
            family.linearity_residual(),
            e.linear.linearity_residual(),
            e.parseval_defect
        );
    }

    let h = XZHamiltonian::from_words(&[(1.0, "Z")])?;
    let code = steane();
    let honest = Strategy::honest(&h, &code)?;
    let classical = Strategy::classical_linear(BitString::zeros(1), BitString::zeros(1), WRule::FollowX, code.r)?;
    let flipped = honest.corrupted(&[Corruption::SignFlip { prover: 0, basis: Basis::X }])?;
    for s in [&honest, &classical, &flipped] {
        let r = quantum_linearity_report(s, 0)?;
        println!("{}:", s.label);
        for key in ["anticommutation", "anticommutation_odd", "commutation_even", "closeness_x", "closeness_z"] {
            println!("  {key:<20} {:.6}", r.value(key).unwrap_or(f64::NAN));
        }
    }
    Ok(())
}
