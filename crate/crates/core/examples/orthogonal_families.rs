use std::error::Error;

use nalgebra::DVector;
use obtuse::tensor::{reconstruct, reconstruct_from_jumps};
use obtuse::{classify, diagonalize, limit_from_tensor};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    // Two orthogonal jumps in R^3 and one Brownian direction.
    let jumps = vec![
        DVector::from_vec(vec![1.0, 1.0, 0.0]),
        DVector::from_vec(vec![0.5, -0.5, 0.0]),
    ];
    let a = reconstruct_from_jumps(3, &jumps);
    println!("doubly symmetric: {}", classify(&a, 1e-12).doubly_symmetric);

    let family = diagonalize(&a, 11, 1e-12)?;
    for (e, l) in family.basis.iter().zip(&family.eigenvalues) {
        println!("  λ = {l:+.6}  e = {:?}", e.as_slice());
    }
    println!("reconstruction error {:.1e}", reconstruct(&family).max_abs_diff(&a));

    let spec = limit_from_tensor(&a, 11, 1e-12)?;
    println!("Brownian dimension {}", spec.brownian_dimension());
    for j in &spec.jumps {
        println!("  jump {:?} with intensity {:.3}", j.vector.as_slice(), j.intensity);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
