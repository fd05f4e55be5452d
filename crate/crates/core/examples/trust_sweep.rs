//! Prints combined F-scores over the relative-trust grid for FD-only and
//! data-only perturbations of a synthetic instance.
//!
//! cargo run --release -p fdrepair --example trust_sweep -- [rows] [seeds]

use fdrepair::eval::{run_trial, synthetic, PerturbationSpec};
use fdrepair::fd::WeightKind;
use fdrepair::search::SearchConfig;

fn main() -> fdrepair::Result<()> {
    let mut args = std::env::args().skip(1);
    let rows: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(1200);
    let seeds: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(5);
    let grid = [0.0, 0.25, 0.5, 0.75, 1.0];
    for (label, data_rate, fd_rate) in [("fd-only", 0.0, 0.5), ("data-only", 0.01, 0.0)] {
        for seed in 0..seeds {
            let (clean, fds) = synthetic(rows, seed);
            let spec = PerturbationSpec {
                data_error_rate: data_rate,
                fd_error_rate: fd_rate,
                seed,
            };
            let start = std::time::Instant::now();
            let points = run_trial(&clean, &fds, spec, &grid, WeightKind::Distinct, SearchConfig::default())?;
            let row: Vec<String> = points
                .iter()
                .map(|p| format!("{:.3}{}", p.scores.combined_f, if p.repaired { "" } else { "*" }))
                .collect();
            println!("{label:10} seed {seed}: {}  ({:.1?})", row.join("  "), start.elapsed());
        }
    }
    Ok(())
}
