//! Gap amplification: the eigenvalue map and its check against the dense
//! spectrum of the expanded Hamiltonian.

use xzmip::hamiltonian::{amplify_map, expand_power, AmplificationSpec, XZHamiltonian};

fn main() -> xzmip::error::Result<()> {
    let spec = AmplificationSpec::new(4.0, 2.0)?;
    println!("p = 4, q = 2: a = {}", spec.a());
    for lambda in [0.0, 0.25, 0.5, 0.75, 1.0] {
        println!("  λ = {lambda:.2} -> {:.8}", amplify_map(lambda, spec.a()));
    }

    let h = XZHamiltonian::from_words(&[(0.5, "XI"), (0.5, "ZZ"), (-0.25, "IX")])?;
    let base = h.spectrum()?;
    for a in 1..=3 {
        let amp = expand_power(&h, a)?;
        let got: Vec<f64> = amp.hamiltonian.spectrum()?.iter().map(|v| v * amp.scale).collect();
        let mut want: Vec<f64> = vec![1.0];
        for _ in 0..a {
            want = want
                .iter()
                .flat_map(|t| base.iter().map(move |l| t * (1.0 + 1.0 / a as f64 - l)))
                .collect();
        }
        let mut want: Vec<f64> = want.iter().map(|t| 1.0 - t).collect();
        want.sort_by(f64::total_cmp);
        let err = got.iter().zip(&want).map(|(g, w)| (g - w).abs()).fold(0.0, f64::max);
        println!(
            "a = {a}: {} terms on {} qubits, λ_min {:+.6} -> {:+.6}, spectrum error {err:.2e}",
            amp.hamiltonian.m(),
            amp.hamiltonian.n(),
            base[0],
            got[0]
        );
    }
    Ok(())
}
