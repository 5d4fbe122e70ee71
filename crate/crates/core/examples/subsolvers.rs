//! The building blocks of the manifold engines on a small problem: the
//! generalized Procrustes closed form, the tangent-space descent direction,
//! an Armijo step along it, and the metric ℓ1 prox.
//!
//! ```text
//! cargo run --release --example subsolvers
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sfpca::linalg::{build_difference_penalty, build_smoother, l1_norm};
use sfpca::manifold::StiefelPoint;
use sfpca::simbench::scenario::gaussian_matrix;
use sfpca::subsolvers::{
    armijo_search, descent_objective, procrustes_objective, prox_l1_metric, solve_descent_direction,
    solve_procrustes, DescentOptions, DescentProblem, ProcrustesProblem,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (n, k) = (20, 2);
    let s = build_smoother(&build_difference_penalty(n, 2)?, 2.0)?;

    let prob = ProcrustesProblem {
        s: &s,
        a: gaussian_matrix(&mut rng, n, k),
        b: gaussian_matrix(&mut rng, n, k),
        rho: 0.5,
    };
    let x = solve_procrustes(&prob)?;
    println!(
        "Procrustes: objective {:.6}, ‖XᵀSX − I‖_F = {:.1e}",
        procrustes_objective(&prob, &x),
        s.feasibility_residual(&x)
    );

    let base = StiefelPoint::from_ambient(&gaussian_matrix(&mut rng, n, k), &s)?;
    let g = gaussian_matrix(&mut rng, n, k) * 3.0;
    let lambda = 0.5;
    let dp = DescentProblem {
        grad_term: &g,
        base: &base,
        lambda,
        trust: 0.5,
    };
    let sol = solve_descent_direction(&dp, &DescentOptions::default())?;
    println!(
        "descent: subproblem objective {:.6} (at D = 0: {:.6}), {} iterations, tangency {:.1e}",
        descent_objective(&dp, &sol.direction),
        descent_objective(&dp, &(sol.direction.clone() * 0.0)),
        sol.iterations,
        base.tangency_residual(&sol.direction)?
    );

    let f = |u: &sfpca::DenseMatrix| -g.dot(u) + lambda * l1_norm(u);
    let step = armijo_search(&base, &sol.direction, f);
    println!(
        "Armijo: step {:.4}, f {:.6} → {:.6}, feasibility {:.1e}",
        step.alpha,
        f(base.u()),
        f(step.next.u()),
        step.next.feasibility_residual()
    );

    let c = gaussian_matrix(&mut rng, n, k);
    let (w, iters) = prox_l1_metric(&s, &c, 0.8, None, 1e-12, 5000);
    let zeros = w.iter().filter(|&&a| a == 0.0).count();
    println!("metric prox: {zeros} exact zeros of {} after {iters} iterations", w.len());
    Ok(())
}
