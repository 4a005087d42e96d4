//! Honest anticommutation-test value against the finite-n closed form.
//! n = 1, 2 exactly; n = 3 by Monte Carlo.

use xzmip::code::steane;
use xzmip::evaluator::{exact_test_value, mc_estimate, omega_ac, omega_ac_limit};
use xzmip::hamiltonian::XZHamiltonian;
use xzmip::protocol::{ProtocolParams, TestKind};
use xzmip::strategy::Strategy;

fn main() -> xzmip::error::Result<()> {
    let code = steane();
    let hams = [
        XZHamiltonian::from_words(&[(1.0, "Z")])?,
        XZHamiltonian::from_words(&[(1.0, "XX"), (1.0, "ZZ")])?,
        XZHamiltonian::from_words(&[(1.0, "ZZI"), (-0.5, "IXX")])?,
    ];
    for h in &hams {
        let n = h.n();
        let s = Strategy::honest(h, &code)?;
        let params = ProtocolParams::new(0.0, code.clone(), h.clone())?;
        if n <= 2 {
            let v = exact_test_value(&s, &params, TestKind::Anticommutation)?;
            println!("n = {n}: exact {v:.10}  closed form {:.10}", omega_ac(n));
        } else {
            let params = params.with_focus(Some(TestKind::Anticommutation));
            let r = mc_estimate(&s, &params, 20_000, 1)?;
            println!(
                "n = {n}: mc {:.5} ± {:.5}  closed form {:.10}",
                r.total,
                r.total_stderr.unwrap_or(0.0),
                omega_ac(n)
            );
        }
    }
    println!("large-n limit 3/4 + √2/8 = {:.10}", omega_ac_limit());
    Ok(())
}
