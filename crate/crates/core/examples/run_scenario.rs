//! Runs experiment scenarios with their default configurations.
//!
//! ```text
//! cargo run --release --example run_scenario -- one-third
//! cargo run --release --example run_scenario -- all
//! ```

use std::time::Instant;

use varlebesgue::experiments::{run_scenario, Scenario, ScenarioConfig};

fn main() -> varlebesgue::Result<()> {
    let arg = std::env::args().nth(1).unwrap_or_else(|| "norm-sanity".into());
    let scenarios = if arg == "all" {
        Scenario::ALL.to_vec()
    } else {
        vec![Scenario::parse(&arg)?]
    };
    for s in scenarios {
        let t = Instant::now();
        let report = run_scenario(&ScenarioConfig::default_for(s))?;
        print!("{}", report.render());
        for m in &report.metrics {
            println!("    {:<28} n={:<4} min={:.4e} median={:.4e} max={:.4e}", m.metric, m.count, m.min, m.median, m.max);
        }
        println!("    ({:.2?})", t.elapsed());
    }
    Ok(())
}
