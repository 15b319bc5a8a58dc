use std::error::Error;

use obtuse::limit::{sample_limit_terminals, LimitSpec};
use obtuse::walks::{empirical_cf, sample_terminals_multinomial};
use obtuse::{exact_discrete_cf, limit_cf, ObtuseVariable, WalkScenario};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let h = 1e-3;
    let scenario = WalkScenario::new(ObtuseVariable::from_planar_chain(0.5, h, 0.5 - h)?, h, 1.0)?;
    let finals = sample_terminals_multinomial(&scenario, 2024, 20_000);
    let alpha = [0.3, 1.2];
    let mc = empirical_cf(&finals, &alpha)?;
    let exact = exact_discrete_cf(&scenario, &alpha)?;
    println!(
        "walk: empirical {:.4} ± {:.4}, exact {:.4}",
        mc.value, mc.stderr, exact
    );

    let spec = LimitSpec::brownian(2);
    let terminals = sample_limit_terminals(&spec, 1.0, 0.01, 2024, 20_000)?;
    let mc = empirical_cf(&terminals, &alpha)?;
    println!(
        "Brownian motion: empirical {:.4} ± {:.4}, exact {:.4}",
        mc.value,
        mc.stderr,
        limit_cf(&spec, &alpha, 1.0)?
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
