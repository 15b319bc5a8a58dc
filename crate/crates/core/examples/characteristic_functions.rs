use std::error::Error;

use obtuse::chain::operator_cf;
use obtuse::{exact_discrete_cf, tensor_of, ObtuseVariable, WalkScenario};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let x = ObtuseVariable::from_planar_chain(0.5, 0.05, 0.45)?;
    let t = tensor_of(&x);
    let h = 0.05;
    let scenario = WalkScenario::new(x, h, 1.0)?;
    for alpha in [[1.0, 0.0], [0.0, 1.0], [0.7, -0.3]] {
        let classical = exact_discrete_cf(&scenario, &alpha)?;
        let quantum = operator_cf(&t, &alpha, h, 1.0)?;
        println!(
            "α = {alpha:?}: walk {classical:.10}  operator {quantum:.10}  gap {:.1e}",
            (classical - quantum).norm()
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
