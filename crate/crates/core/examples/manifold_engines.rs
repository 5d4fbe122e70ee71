//! Fits the same rank-3 problem with the MADMM, ManPG and A-ManPG engines and
//! compares objective, feasibility and solver effort.
//!
//! ```text
//! cargo run --release --example manifold_engines -- [scenario] [lambda] [alpha]
//! ```

use std::time::Instant;

use sfpca::mansfpca::{fit_manifold, Engine, ManConfig};
use sfpca::simbench::tune::SmootherCache;
use sfpca::simbench::{generate_scenario, metric_cpve, ScenarioSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let scenario: u8 = args.first().map_or(Ok(1), |s| s.parse())?;
    let lam: f64 = args.get(1).map_or(Ok(1.0), |s| s.parse())?;
    let alpha: f64 = args.get(2).map_or(Ok(3.0), |s| s.parse())?;
    let gt = generate_scenario(&ScenarioSpec::new(scenario, ScenarioSpec::default_snr(scenario), 7)?)?;
    let x = &gt.x_noisy;
    let (n, p) = x.shape();
    let mut cache = SmootherCache::new(2);
    let (su, sv) = (cache.get(n, alpha)?, cache.get(p, alpha)?);

    println!(
        "{:<7} {:>12} {:>9} {:>9} {:>6} {:>7} {:>8} {:>8} {:>7}",
        "engine", "objective", "feas_u", "feas_v", "sweeps", "descent", "retract", "cpve3", "time[s]"
    );
    for engine in Engine::ALL {
        let cfg = ManConfig::new(3, lam, lam, su.clone(), sv.clone(), engine);
        let t = Instant::now();
        let fit = fit_manifold(x, &cfg)?;
        let secs = t.elapsed().as_secs_f64();
        let cpve = metric_cpve(&gt.x_clean, &fit.u, &fit.v)?;
        println!(
            "{:<7} {:>12.6} {:>9.1e} {:>9.1e} {:>6} {:>7} {:>8} {:>8.5} {:>7.2}{}",
            engine.name(),
            fit.final_objective,
            su.feasibility_residual(&fit.u),
            sv.feasibility_residual(&fit.v),
            fit.sweeps,
            fit.engine_stats.descent_solves,
            fit.engine_stats.retractions,
            cpve.last().copied().unwrap_or(f64::NAN),
            secs,
            if fit.converged { "" } else { "  (not converged)" }
        );
    }
    Ok(())
}
