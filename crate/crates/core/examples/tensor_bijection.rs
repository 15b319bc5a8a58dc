use std::error::Error;

use obtuse::obtuse::DEFAULT_TOL;
use obtuse::tensor::{sets_match, structure_residual};
use obtuse::{classify, system_of, tensor_of, ObtuseVariable};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let x = ObtuseVariable::from_probabilities(&[0.15, 0.25, 0.6], Some(3))?;
    let t = tensor_of(&x);
    print!("T(v) =\n{t}");
    let class = classify(&t, 1e-10);
    println!(
        "sesqui-symmetric {} (residual {:.1e}), doubly symmetric {}",
        class.sesqui_symmetric, class.sesqui_residual, class.doubly_symmetric
    );
    println!("X ⊗ X = I + T(X) residual {:.1e}", structure_residual(&x, &t));

    let back = system_of(&t, DEFAULT_TOL)?;
    assert!(sets_match(x.values(), back.values(), 1e-8));
    for (v, p) in back.values().iter().zip(back.probs()) {
        println!("  recovered value {:?} with probability {p:.6}", v.as_slice());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
