use std::error::Error;

use obtuse::limit::convergence_report;
use obtuse::{Affine, AffineFamily};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    // q = h: the second coordinate turns into a compensated Poisson process.
    let family = AffineFamily::Planar {
        p: Affine::constant(0.5),
        q: Affine::new(0.0, 1.0),
        r: Affine::new(0.5, -1.0),
    };
    let alphas = vec![vec![0.0, 1.0], vec![0.0, -1.0], vec![1.0, 1.0]];
    let report = convergence_report(&family, &[1e-1, 1e-2, 1e-3, 1e-4], &alphas, 1.0, 0)?;
    println!("limit tensor S^{{22}}_2 = {:.6}", report.estimate.tensor.get(1, 1, 1));
    for (h, e) in report.max_errors() {
        println!("h = {h:<8} max error {e:.3e}");
    }
    report.write_csv(std::io::stdout())?;
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
