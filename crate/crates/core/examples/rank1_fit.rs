//! Rank-one SFPCA on a noisy smooth sparse signal, across a few penalty
//! settings, then a three-component Schur deflation pipeline.
//!
//! ```text
//! cargo run --release --example rank1_fit
//! ```

use sfpca::deflation::DeflationScheme;
use sfpca::pipeline::{fit_pipeline, PipelineConfig};
use sfpca::rank1::{fit_rank1, Rank1Config};
use sfpca::simbench::tune::SmootherCache;
use sfpca::simbench::{generate_scenario, ScenarioSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let gt = generate_scenario(&ScenarioSpec::new(1, 1.2, 3)?)?;
    let x = &gt.x_noisy;
    let (n, p) = x.shape();
    let mut cache = SmootherCache::new(2);

    println!("{:>6} {:>6} {:>10} {:>7} {:>7} {:>6} {:>10}", "lambda", "alpha", "d", "nnz(u)", "nnz(v)", "iters", "objective");
    for (lam, alpha) in [(0.0, 0.0), (0.0, 3.0), (1.0, 0.0), (1.0, 3.0), (3.0, 3.0)] {
        let cfg = Rank1Config::new(lam, lam, cache.get(n, alpha)?, cache.get(p, alpha)?);
        let fit = fit_rank1(x, &cfg)?;
        let nnz = |v: &sfpca::Vector| v.iter().filter(|&&a| a != 0.0).count();
        println!(
            "{lam:>6} {alpha:>6} {:>10.4} {:>7} {:>7} {:>6} {:>10.4}",
            fit.d,
            nnz(&fit.u),
            nnz(&fit.v),
            fit.iterations,
            fit.objective_trace.last().copied().unwrap_or(f64::NAN)
        );
    }

    let rank1 = Rank1Config::new(1.0, 1.0, cache.get(n, 3.0)?, cache.get(p, 3.0)?);
    let fit = fit_pipeline(
        x,
        &PipelineConfig {
            k: 3,
            rank1,
            scheme: DeflationScheme::schur(),
            tune: None,
            penalty_order: 2,
        },
    )?;
    println!("\nSchur pipeline, λ = 1, α = 3: d = {:?}", fit.d.as_slice());
    print!("{}", fit.state.orthogonality_report()?.to_table());
    Ok(())
}
