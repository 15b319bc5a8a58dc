use std::error::Error;

use obtuse::cli::reproduce_example;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    for index in 1..=3 {
        let report = reproduce_example(index, 81)?;
        print!("{}", report.text);
        let flagged = report.comparisons.iter().filter(|c| !c.agrees).count();
        println!("{flagged} flagged\n");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
