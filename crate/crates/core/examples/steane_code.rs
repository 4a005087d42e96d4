//! Stabilizer group, complementary operators and encoding for the Steane code.

use xzmip::code::{steane, Basis};
use xzmip::dense::C64;
use xzmip::state::StateVector;

fn main() -> xzmip::error::Result<()> {
    let code = steane();
    let report = code.validate();
    println!("valid: {}", report.all_passed());
    for g in &code.generators {
        println!("generator {g}");
    }
    println!("logical X {}  logical Z {}", code.logical_x, code.logical_z);
    println!("stabilizer group size {}", code.stabilizer_group()?.len());

    for i in 0..code.r {
        for basis in [Basis::X, Basis::Z] {
            let c = code.complementary(i, basis)?;
            println!("position {i} {basis:?}: {} (rest {}, partners {:?})", c.stabilizer, c.restricted, c.partners);
        }
    }

    // |+⟩ encoded on one block: every generator has expectation +1
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let plus = StateVector::new(vec![C64::new(h, 0.0), C64::new(h, 0.0)])?;
    let enc = code.encode(&plus)?;
    let targets: Vec<usize> = (0..code.r).collect();
    for g in &code.generators {
        let v = enc.pauli_expectation(g, &targets)?;
        println!("<{g}> = {:+.12}", v.re);
    }
    println!("<X_L> = {:+.12}", enc.pauli_expectation(&code.logical_x, &targets)?.re);
    Ok(())
}
