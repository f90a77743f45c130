use netbandit::netgen::{sample_sbm, SbmParams};
use netbandit::optimize::{
    solve_bnb_with, solve_local_search_from, BnbOptions, Budget, BudgetedProblem,
};
use netbandit::reward::{sample_theta, ThetaGenSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::time::{Duration, Instant};

fn main() {
    let params = SbmParams::two_level(10, 0.3f64, 0.01).unwrap();
    let spec = ThetaGenSpec::new(10, 15).unwrap();
    let cases = 50u64;
    let mut best_known = Vec::new();
    let mut insts = Vec::new();
    for seed in 0..cases {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = sample_sbm(&params, 100, &mut rng).unwrap();
        let theta = sample_theta::<f64, _>(&spec, &mut rng);
        insts.push((g, theta));
    }
    // Reference incumbents: bnb with a generous-but-bounded proof budget.
    let t0 = Instant::now();
    for (g, theta) in &insts {
        let p = BudgetedProblem::new(g, theta, Budget::Limit(20)).unwrap();
        let opts = BnbOptions {
            time_limit: Duration::from_secs(5),
            gap_tolerance: 0.0,
            ..BnbOptions::default()
        };
        let r = solve_bnb_with(&p, &opts).unwrap();
        best_known.push(r.solution.objective);
    }
    println!("reference pass (bnb 5s gap0): {:?} total", t0.elapsed());

    for (label, restarts) in [("ls8+greedy", 8usize), ("ls3+greedy", 3)] {
        let mut worst = 0.0f64;
        let mut mean = 0.0f64;
        let t = Instant::now();
        for (i, (g, theta)) in insts.iter().enumerate() {
            let p = BudgetedProblem::new(g, theta, Budget::Limit(20)).unwrap();
            let mut lr = ChaCha8Rng::seed_from_u64(i as u64 + 1000);
            let ls = solve_local_search_from(&p, restarts, &[], &mut lr).unwrap();
            let rel = (best_known[i] - ls.objective) / best_known[i].abs().max(1.0);
            worst = worst.max(rel);
            mean += rel.max(0.0);
        }
        println!(
            "{label}: worst shortfall {:.4}%, mean {:.4}%, avg {:?}",
            100.0 * worst,
            100.0 * mean / cases as f64,
            t.elapsed() / cases as u32
        );
    }

    // bnb with 1% gap and a short cap: typical oracle configuration.
    let mut proven = 0;
    let mut worst = 0.0f64;
    let t = Instant::now();
    for (i, (g, theta)) in insts.iter().enumerate() {
        let p = BudgetedProblem::new(g, theta, Budget::Limit(20)).unwrap();
        let opts = BnbOptions {
            time_limit: Duration::from_millis(500),
            gap_tolerance: 0.01,
            ..BnbOptions::default()
        };
        let r = solve_bnb_with(&p, &opts).unwrap();
        if r.proven_gap <= 0.01 + 2e-9 {
            proven += 1;
        }
        let rel = (best_known[i] - r.solution.objective) / best_known[i].abs().max(1.0);
        worst = worst.max(rel);
    }
    println!(
        "bnb(0.5s, 1%): proven {proven}/{cases}, worst incumbent shortfall {:.4}%, avg {:?}",
        100.0 * worst,
        t.elapsed() / cases as u32
    );
}
