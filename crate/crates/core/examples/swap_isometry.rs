//! Swap isometry: exact for true Paulis, and the deviation as the
//! Z-observable is rotated away from anticommuting with X.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use xzmip::analysis::{isometry_deviation, swap_isometry, FamilyLabel, ObservableFamily};
use xzmip::code::Basis;
use xzmip::dense::DenseOperator;
use xzmip::state::StateVector;

fn main() -> xzmip::error::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for n in 1..=2 {
        // the register plus one environment qubit
        let psi = StateVector::random(n + 1, &mut rng)?;
        let x = ObservableFamily::paulis(FamilyLabel::Xlin, Basis::X, (0..n).collect(), n + 1)?;
        let z = ObservableFamily::paulis(FamilyLabel::Zlin, Basis::Z, (0..n).collect(), n + 1)?;
        let out = swap_isometry(&x, &z, &psi)?;
        let r = isometry_deviation(&out, &psi, &x, &z)?;
        println!(
            "n = {n}: pre-normalization norm {:.12}, max deviation {:.2e}",
            out.pre_norm,
            r.value("deviation_max").unwrap_or(f64::NAN)
        );
    }

    let psi = StateVector::random(1, &mut rng)?;
    let x = ObservableFamily::paulis(FamilyLabel::Xlin, Basis::X, vec![0], 1)?;
    println!("theta   max deviation   norm");
    for step in 0..=6 {
        let t = step as f64 * std::f64::consts::FRAC_PI_2 / 6.0;
        let zt = DenseOperator::from_real(2, &[t.cos(), t.sin(), t.sin(), -t.cos()]);
        let z = ObservableFamily::new(FamilyLabel::Zlin, 1, 1, vec![0], vec![DenseOperator::identity(2), zt])?;
        let out = swap_isometry(&x, &z, &psi)?;
        let r = isometry_deviation(&out, &psi, &x, &z)?;
        println!("{t:.3}   {:.6}        {:.6}", r.value("deviation_max").unwrap_or(f64::NAN), out.pre_norm);
    }
    Ok(())
}
