//! BIC tuning of a rank-one fit over the default grid, followed by a tuned
//! three-component projection deflation pipeline.
//!
//! ```text
//! cargo run --release --example bic_tuning -- [scenario]
//! ```

use sfpca::deflation::DeflationScheme;
use sfpca::pipeline::{fit_pipeline, PipelineConfig};
use sfpca::rank1::Rank1Config;
use sfpca::simbench::{bic_tune, generate_scenario, metric_cpve, ScenarioSpec, SmootherCache, TuneGrid};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scenario: u8 = std::env::args().nth(1).map_or(Ok(2), |s| s.parse())?;
    let gt = generate_scenario(&ScenarioSpec::new(scenario, ScenarioSpec::default_snr(scenario), 5)?)?;
    let x = &gt.x_noisy;
    let (n, p) = x.shape();
    let grid = TuneGrid::default_for(x)?;
    println!("λu grid {:.3?}", grid.lambda_u);
    println!("α grid  {:.3?}", grid.alpha_u);

    let template = Rank1Config::plain(n, p);
    let mut cache = SmootherCache::new(2);
    let t = bic_tune(x, &grid, &template, &mut cache)?;
    println!(
        "first component: λu={:.4} λv={:.4} αu={:.3} αv={:.3} BIC={:.4} ({} fits)",
        t.params.lambda_u, t.params.lambda_v, t.params.alpha_u, t.params.alpha_v, t.params.bic, t.evaluations
    );

    let fit = fit_pipeline(
        x,
        &PipelineConfig {
            k: 3,
            rank1: template,
            scheme: DeflationScheme::projection(),
            tune: Some(grid),
            penalty_order: 2,
        },
    )?;
    for c in &fit.components {
        if let Some(tp) = &c.tuned {
            println!("component {}: d={:.3} λu={:.4} λv={:.4} αu={:.3} αv={:.3}", c.index, c.d, tp.lambda_u, tp.lambda_v, tp.alpha_u, tp.alpha_v);
        }
    }
    println!("CPVE = {:.5?}", metric_cpve(&gt.x_clean, &fit.u, &fit.v)?);
    Ok(())
}
