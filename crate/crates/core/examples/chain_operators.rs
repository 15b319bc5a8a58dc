use std::error::Error;

use obtuse::chain::{decomposition, pointwise_mult_oracle, vacuum_moment};
use obtuse::{mult_op, site_op, tensor_of, ChainSpace, ObtuseVariable};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let x = ObtuseVariable::from_planar_chain(0.5, 1.0 / 3.0, 1.0 / 6.0)?;
    let t = tensor_of(&x);
    let space = ChainSpace::new(2, 4)?;
    println!("chain of {} sites, dimension {}", space.sites(), space.dim());

    let site = 2;
    let ops = mult_op(&t, site, space)?;
    for (c, op) in ops.iter().enumerate() {
        println!("X_{} = {}  ({} nonzeros)", c + 1, decomposition(&t, c), op.nnz());
    }

    let by_hand = site_op(1, 0, site, space)?
        .add(&site_op(0, 1, site, space)?)
        .sub(&site_op(2, 2, site, space)?);
    assert_eq!(by_hand.max_abs_diff(&ops[0]), 0.0);

    // Column by column against the pointwise product on the word basis.
    for col in 0..space.dim() {
        let mut want = pointwise_mult_oracle(&x, 1, site, space, col)?;
        let mut got = ops[1].column(col);
        want.sort_by_key(|e| e.0);
        got.sort_by_key(|e| e.0);
        assert_eq!(want, got);
    }
    println!("[X_1, X_2] = 0: {}", ops[0].commutator(&ops[1]).max_abs() == 0.0);
    for k in 1..=4 {
        println!("<Ω, X_2^{k} Ω> = {}", vacuum_moment(&ops[1], k));
    }

    let dump = ops[0].to_dump_string();
    println!("{}", dump.lines().take(4).collect::<Vec<_>>().join("\n"));
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
