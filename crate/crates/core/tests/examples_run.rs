mod fisher_bounds {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/fisher_bounds.rs"));
}

mod constrained_mle {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/constrained_mle.rs"));
}

mod exact_vs_monte_carlo {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/exact_vs_monte_carlo.rs"));
}

mod resolvability {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/resolvability.rs"));
}

mod bias_map {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/bias_map.rs"));
}

mod bootstrap_experiment {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/bootstrap_experiment.rs"));
}

mod calibrate_crosstalk {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/calibrate_crosstalk.rs"));
}

mod control_leakage {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/control_leakage.rs"));
}

mod pulse_predistortion {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/pulse_predistortion.rs"));
}

mod memory_efficiency {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/memory_efficiency.rs"));
}

mod run_config {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/run_config.rs"));
}

#[test]
fn fisher_bounds_runs() {
    fisher_bounds::run_example().expect("fisher_bounds example should run");
}

#[test]
fn constrained_mle_runs() {
    constrained_mle::run_example().expect("constrained_mle example should run");
}

#[test]
fn exact_vs_monte_carlo_runs() {
    exact_vs_monte_carlo::run_example().expect("exact_vs_monte_carlo example should run");
}

#[test]
fn resolvability_runs() {
    resolvability::run_example().expect("resolvability example should run");
}

#[test]
fn bias_map_runs() {
    bias_map::run_example().expect("bias_map example should run");
}

#[test]
fn bootstrap_experiment_runs() {
    bootstrap_experiment::run_example().expect("bootstrap_experiment example should run");
}

#[test]
fn calibrate_crosstalk_runs() {
    calibrate_crosstalk::run_example().expect("calibrate_crosstalk example should run");
}

#[test]
fn control_leakage_runs() {
    control_leakage::run_example().expect("control_leakage example should run");
}

#[test]
fn pulse_predistortion_runs() {
    pulse_predistortion::run_example().expect("pulse_predistortion example should run");
}

#[test]
fn memory_efficiency_runs() {
    memory_efficiency::run_example().expect("memory_efficiency example should run");
}

#[test]
fn run_config_runs() {
    run_config::run_example().expect("run_config example should run");
}
