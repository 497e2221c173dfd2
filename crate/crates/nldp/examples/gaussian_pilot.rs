//! Measures the noise-free Gaussian-design error floor used by the
//! acceptance suite and writes it as a fixture.
//!
//! cargo run --release -p nldp --example gaussian_pilot -- <out.toml>
use nldp::config::ExperimentConfig;
use nldp::harness::{aggregate, Sweep};

const N: usize = 2_000_000;
const TRIALS: usize = 10;
const SEED: u64 = 977;

fn main() {
    let out = std::env::args().nth(1).expect("output path");
    let text = format!(
        "mode = \"glm\"\nlink = \"logistic\"\ndesign = \"gaussian\"\nepsilon = \"inf\"\np = 10\nn = {N}\ntrials = {TRIALS}\nmetrics = \"rel_inf\"\nmaster_seed = {SEED}\n"
    );
    let sweep = Sweep::new(ExperimentConfig::from_toml(&text, None).unwrap()).unwrap();
    let records = sweep.run_all().unwrap();
    let agg = aggregate(records.iter().flat_map(|r| &r.rows));
    let row = &agg[0];
    assert_eq!(row.failures, 0, "pilot trials failed");
    let body = format!(
        "rel_inf_floor = {}\nse = {}\nn = {N}\ntrials = {TRIALS}\nmaster_seed = {SEED}\n",
        row.mean.unwrap(),
        row.se.unwrap()
    );
    std::fs::write(&out, body).unwrap();
    println!("wrote {out}");
}
