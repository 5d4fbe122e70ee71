//! Runs the simulation benchmark and prints the aggregate table.
//!
//! ```text
//! cargo run --release --example benchmark -- [scenario] [replicates] [methods] [lambda] [alpha] [tune]
//! cargo run --release --example benchmark -- 2 5 hd,pd,sd,madmm 1 3 false
//! ```

use sfpca::simbench::{run_benchmark, BenchConfig, Method};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let scenario: u8 = args.first().map_or(Ok(1), |s| s.parse())?;
    let replicates: usize = args.get(1).map_or(Ok(3), |s| s.parse())?;
    let methods = Method::parse_list(args.get(2).map_or("svd,hd,pd,sd,madmm", String::as_str))?;
    let mut cfg = BenchConfig::new(scenario, replicates, 2024, methods);
    if let Some(l) = args.get(3) {
        cfg.lambda_u = l.parse()?;
        cfg.lambda_v = cfg.lambda_u;
    }
    if let Some(a) = args.get(4) {
        cfg.alpha_u = a.parse()?;
        cfg.alpha_v = cfg.alpha_u;
    }
    cfg.tune = args.get(5).is_some_and(|t| t == "true");
    cfg.record_timing = true;
    let report = run_benchmark(&cfg)?;
    println!("{:<8} {:>4} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8} {:>9}", "method", "ok", "cpve1", "cpve2", "cpve3", "rss_u", "tpr_u", "fpr_u", "time[s]");
    for a in &report.aggregates {
        let c = |r: usize| a.cpve.get(r).and_then(|s| s.mean).unwrap_or(f64::NAN);
        println!(
            "{:<8} {:>4} {:>8.5} {:>8.5} {:>8.5} {:>8.4} {:>8.4} {:>8.4} {:>9.3}",
            a.method.token(),
            a.ok,
            c(0),
            c(1),
            c(2),
            a.rss_error_u.mean.unwrap_or(f64::NAN),
            a.tpr_u.mean.unwrap_or(f64::NAN),
            a.fpr_u.mean.unwrap_or(f64::NAN),
            a.wall_time.mean.unwrap_or(f64::NAN),
        );
    }
    for c in report.cells.iter().filter(|c| c.error.is_some()) {
        println!("replicate {} {} failed: {}", c.replicate, c.method, c.error.as_deref().unwrap_or(""));
    }
    Ok(())
}
