//! Exact acceptance of the honest strategy on the one-qubit Hamiltonian Z,
//! compared with the completeness formula.

use xzmip::code::steane;
use xzmip::evaluator::{completeness_formula, exact_value};
use xzmip::hamiltonian::XZHamiltonian;
use xzmip::protocol::ProtocolParams;
use xzmip::strategy::Strategy;

fn main() -> xzmip::error::Result<()> {
    let h = XZHamiltonian::from_words(&[(1.0, "Z")])?;
    let code = steane();
    let honest = Strategy::honest(&h, &code)?;
    println!("shared state: {} qubits over {} provers", honest.state().num_qubits(), honest.r());

    for p in [0.0, 0.25, 0.5, 1.0] {
        let params = ProtocolParams::new(p, code.clone(), h.clone())?;
        let report = exact_value(&honest, &params)?;
        let formula = completeness_formula(&h, p, 1)?;
        println!("p = {p:.2}: exact {:.10}", report.total);
        println!("          formula                 {:.10}", formula.finite_n);
        println!("          formula (measured rule) {:.10}", formula.finite_n_measured_rule);
        for (name, entry) in &report.per_test {
            println!("          {name:<20} weight {:.4} value {:.10}", entry.weight, entry.value);
        }
    }
    Ok(())
}
