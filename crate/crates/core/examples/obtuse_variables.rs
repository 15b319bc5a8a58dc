use std::error::Error;

use obtuse::obtuse::DEFAULT_TOL;
use obtuse::ObtuseVariable;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let x = ObtuseVariable::from_planar_chain(0.5, 1.0 / 3.0, 1.0 / 6.0)?;
    println!("{x}");
    let report = x.validate(DEFAULT_TOL);
    for (name, residual) in report.residuals() {
        println!("  {name:<24} {residual:.2e}");
    }
    assert!(report.passes());

    // Any strictly positive weights summing to one give an obtuse variable.
    let y = ObtuseVariable::from_probabilities(&[0.1, 0.2, 0.3, 0.4], Some(7))?;
    println!("{y}");
    println!(
        "unitary embedding defect {:.2e}",
        y.unitary_embedding().orthogonality_defect()
    );
    assert!(y.validate(DEFAULT_TOL).passes());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
