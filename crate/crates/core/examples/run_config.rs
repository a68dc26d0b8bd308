// Drives the experiment runner from an inline TOML configuration and prints the
// resulting table with its metadata.

use superres::runner::{cmd_fisher, RunConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = RunConfig::from_toml_str(
        r#"
        seed = 5
        [crosstalk]
        alpha = 0.995
        beta = 0.999
        [epsilon]
        start = 0.0
        stop = 0.2
        step = 0.05
        "#,
    )?;
    let table = cmd_fisher(&cfg)?;
    print!("{}", table.to_csv());
    println!("config hash {}", table.meta.config_hash);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("run_config failed");
}
