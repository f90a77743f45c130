//! Decision policies sharing one step interface: given the agent's belief
//! state and this round's graph, emit a budget-feasible treatment vector.
//!
//! - [`ts_step`]: Thompson sampling — draw parameters from the posterior,
//!   maximize the implied objective with the configured solver.
//! - [`ucl_step`]: UCB over a confidence ellipsoid for the parameters,
//!   exact on small graphs and candidate-set approximated beyond that.
//! - [`sum_linear_ts_step`]: the sum-collapsed linear-bandit baseline;
//!   identical action rule to Thompson sampling, but its posterior is fed
//!   one collapsed observation per round (see the harness).
//! - [`random_policy_step`], [`oracle_step`]: exploration floor and the
//!   regret reference policy.

use std::time::Duration;

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::netgen::{treated_count, treated_neighbor_counts, Graph, TreatmentVector};
use crate::optimize::{
    solve_bnb_with, solve_bruteforce, solve_local_search_from, BnbOptions, Budget,
    BudgetedProblem, Solution,
};
use crate::posterior::PosteriorState;
use crate::reward::{Theta, ThetaGenSpec};
use crate::scalar::Scalar;

/// The policies the harness can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgentKind {
    Thompson,
    NetworkUcl,
    SumLinearTs,
    RandomPolicy,
    Oracle,
}

impl AgentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            AgentKind::Thompson => "thompson",
            AgentKind::NetworkUcl => "network_ucl",
            AgentKind::SumLinearTs => "sum_linear_ts",
            AgentKind::RandomPolicy => "random",
            AgentKind::Oracle => "oracle",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "thompson" => Ok(AgentKind::Thompson),
            "network_ucl" => Ok(AgentKind::NetworkUcl),
            "sum_linear_ts" => Ok(AgentKind::SumLinearTs),
            "random" => Ok(AgentKind::RandomPolicy),
            "oracle" => Ok(AgentKind::Oracle),
            other => Err(Error::Config(format!("unknown agent kind '{other}'"))),
        }
    }
}

/// Which optimizer a policy uses for its per-round argmax.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolverChoice<S> {
    /// Exhaustive search up to 12 nodes, local search beyond.
    Auto,
    BruteForce,
    BranchAndBound {
        time_limit: Duration,
        gap_tolerance: S,
    },
    LocalSearch {
        restarts: usize,
    },
}

impl<S: Scalar> SolverChoice<S> {
    /// Solves the instance; `warm_starts` seed incumbent-capable solvers.
    pub fn solve<R: Rng + ?Sized>(
        &self,
        p: &BudgetedProblem<S>,
        warm_starts: &[TreatmentVector],
        rng: &mut R,
    ) -> Result<Solution<S>> {
        match self {
            SolverChoice::Auto => {
                if p.n() <= 12 {
                    solve_bruteforce(p)
                } else {
                    solve_local_search_from(p, 10, warm_starts, rng)
                }
            }
            SolverChoice::BruteForce => solve_bruteforce(p),
            SolverChoice::BranchAndBound {
                time_limit,
                gap_tolerance,
            } => {
                let opts = BnbOptions {
                    time_limit: *time_limit,
                    gap_tolerance: *gap_tolerance,
                    warm_starts: warm_starts.to_vec(),
                    ..BnbOptions::default()
                };
                Ok(solve_bnb_with(p, &opts)?.solution)
            }
            SolverChoice::LocalSearch { restarts } => {
                solve_local_search_from(p, *restarts, warm_starts, rng)
            }
        }
    }
}

/// Constants of the confidence-ellipsoid radius: `theta_norm_bound` caps
/// the parameter 2-norm, `noise_scale` is the sub-Gaussian scale of the
/// reward noise, `row_norm_bound` caps squared design-row norms, `delta`
/// is the failure probability, and `lambda` the ridge weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceParams<S> {
    pub theta_norm_bound: S,
    pub noise_scale: S,
    pub row_norm_bound: S,
    pub delta: S,
    pub lambda: S,
}

impl<S: Scalar> ConfidenceParams<S> {
    pub fn validate(&self) -> Result<()> {
        if self.theta_norm_bound <= S::zero()
            || self.noise_scale < S::zero()
            || self.row_norm_bound <= S::zero()
            || self.lambda <= S::zero()
        {
            return Err(Error::Config(
                "confidence parameters must be positive (noise scale >= 0)".into(),
            ));
        }
        if self.delta <= S::zero() || self.delta >= S::one() {
            return Err(Error::Config("delta must lie in (0, 1)".into()));
        }
        Ok(())
    }

    /// Defaults tied to the parameter generator: the norm bound is the
    /// generator's 3-sigma envelope, the noise scale comes from the
    /// environment, and the row bound `cutoff + 2` conservatively exceeds
    /// the tight value 2 for 0/1 design rows.
    pub fn default_for(gen: &ThetaGenSpec, noise_sigma: S, lambda: S) -> Self {
        let three = S::from_f64_lossy(3.0);
        let mut sq = S::from_usize_lossy(gen.k)
            * (S::from_f64_lossy(2.0) + three)
            * (S::from_f64_lossy(2.0) + three);
        for d in 0..=gen.cutoff {
            let v = S::from_usize_lossy(d) + three;
            sq += v * v;
        }
        Self {
            theta_norm_bound: sq.sqrt(),
            noise_scale: noise_sigma,
            row_norm_bound: S::from_usize_lossy(gen.cutoff + 2),
            delta: S::from_f64_lossy(0.05),
            lambda,
        }
    }

    /// Radius multiplier of the confidence ellipsoid after `t` rounds of
    /// `n` observations in dimension `dim`:
    /// `sqrt(lambda) S + R sqrt(2 ln(1/delta) + D ln(1 + n t L / (lambda D)))`.
    pub fn sqrt_beta(&self, dim: usize, n: usize, t: usize) -> S {
        let d = S::from_usize_lossy(dim);
        let nt = S::from_usize_lossy(n * t);
        let inner = S::from_f64_lossy(2.0) * (S::one() / self.delta).ln()
            + d * (S::one() + nt * self.row_norm_bound / (self.lambda * d)).ln();
        self.lambda.sqrt() * self.theta_norm_bound + self.noise_scale * inner.sqrt()
    }
}

/// Candidate-set policy for the UCB maximization beyond exhaustive scale.
/// The joint argmax over treatments and the ellipsoid is intractable, so
/// large instances score the union of: argmax solutions under inflated
/// posterior draws, greedy-by-UCB additions, and UCB hill climbing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UclCandidatePolicy {
    pub exact_max_n: usize,
    pub posterior_draws: usize,
    pub greedy: bool,
    pub local_restarts: usize,
}

impl Default for UclCandidatePolicy {
    fn default() -> Self {
        Self {
            exact_max_n: 12,
            posterior_draws: 10,
            greedy: true,
            local_restarts: 5,
        }
    }
}

/// Sum of design rows for a treatment vector without materializing the
/// matrix: per-group treated counts, then pooled-count bucket counts.
pub fn collapsed_features<S: Scalar>(
    g: &Graph,
    z: &[bool],
    k: usize,
    cutoff: usize,
) -> Result<Vec<S>> {
    let counts = treated_neighbor_counts(g, z)?;
    let mut x = vec![S::zero(); k + cutoff + 1];
    for i in 0..g.n() {
        if z[i] {
            x[g.group_of(i)] += S::one();
        }
        x[k + counts[i].min(cutoff)] += S::one();
    }
    Ok(x)
}

/// Thompson sampling step: maximize the objective under one posterior draw.
pub fn ts_step<S: Scalar, R: Rng + ?Sized>(
    state: &PosteriorState<S>,
    g: &Graph,
    budget: Budget,
    k: usize,
    cutoff: usize,
    solver: &SolverChoice<S>,
    rng: &mut R,
) -> Result<TreatmentVector> {
    if state.dim() != k + cutoff + 1 {
        return Err(Error::Contract(format!(
            "posterior dimension {} does not match k + cutoff + 1 = {}",
            state.dim(),
            k + cutoff + 1
        )));
    }
    let draw = state.sample(rng)?;
    let theta = Theta::from_vec(k, cutoff, &draw)?;
    let p = BudgetedProblem::new(g, &theta, budget)?;
    Ok(solver.solve(&p, &[], rng)?.z)
}

/// The sum-collapsed baseline shares the Thompson action rule; only its
/// update path differs (one collapsed observation per round).
pub fn sum_linear_ts_step<S: Scalar, R: Rng + ?Sized>(
    state: &PosteriorState<S>,
    g: &Graph,
    budget: Budget,
    k: usize,
    cutoff: usize,
    solver: &SolverChoice<S>,
    rng: &mut R,
) -> Result<TreatmentVector> {
    ts_step(state, g, budget, k, cutoff, solver, rng)
}

/// Uniformly random subset of exactly `min(B, n)` treated nodes.
pub fn random_policy_step<R: Rng + ?Sized>(g: &Graph, budget: Budget, rng: &mut R) -> TreatmentVector {
    let n = g.n();
    let cap = budget.cap(n);
    let mut order: Vec<usize> = (0..n).collect();
    for t in 0..cap {
        let pick = t + rng.random_range(0..n - t);
        order.swap(t, pick);
    }
    let mut z = vec![false; n];
    for &j in &order[..cap] {
        z[j] = true;
    }
    z
}

/// Solver argmax under the true parameters; the status tells the caller
/// whether the regret reference is exact or a lower bound.
pub fn oracle_step<S: Scalar, R: Rng + ?Sized>(
    theta_true: &Theta<S>,
    g: &Graph,
    budget: Budget,
    solver: &SolverChoice<S>,
    warm_starts: &[TreatmentVector],
    rng: &mut R,
) -> Result<Solution<S>> {
    let p = BudgetedProblem::new(g, theta_true, budget)?;
    solver.solve(&p, warm_starts, rng)
}

/// One UCB step: maximize `<x_z, theta_hat> + sqrt(beta_t) ||x_z||_{V^-1}`
/// where `x_z` is the collapsed feature vector of `z` and the ridge state
/// supplies `theta_hat` and `V^-1`.
pub fn ucl_step<S: Scalar, R: Rng + ?Sized>(
    ridge: &PosteriorState<S>,
    g: &Graph,
    budget: Budget,
    k: usize,
    cutoff: usize,
    params: &ConfidenceParams<S>,
    policy: &UclCandidatePolicy,
    rng: &mut R,
) -> Result<TreatmentVector> {
    let dim = k + cutoff + 1;
    if ridge.dim() != dim {
        return Err(Error::Contract(format!(
            "ridge dimension {} does not match k + cutoff + 1 = {dim}",
            ridge.dim()
        )));
    }
    params.validate()?;
    let n = g.n();
    let cap = budget.cap(n);
    if cap == 0 {
        return Ok(vec![false; n]);
    }
    let sqrt_beta = params.sqrt_beta(dim, n, ridge.rounds_seen());
    let ucb_of = |x: &[S]| -> S {
        let mean = dot(x, ridge.mean());
        let var = ridge.covariance().quadratic_form(x).max(S::zero());
        mean + sqrt_beta * var.sqrt()
    };

    if n <= policy.exact_max_n {
        let mut best: Option<(S, TreatmentVector)> = None;
        for mask in 0u64..(1 << n) {
            if (mask.count_ones() as usize) > cap {
                continue;
            }
            let z: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
            let x = collapsed_features(g, &z, k, cutoff)?;
            let u = ucb_of(&x);
            let replace = match &best {
                Some((bu, bz)) => u > *bu || (u == *bu && z < *bz),
                None => true,
            };
            if replace {
                best = Some((u, z));
            }
        }
        return Ok(best.expect("nonempty feasible set").1);
    }

    // Candidate set for large instances.
    let mut candidates: Vec<TreatmentVector> = Vec::new();
    for _ in 0..policy.posterior_draws {
        let draw = ridge.sample(rng)?;
        // Inflate to the ellipsoid scale: theta_hat + sqrt(beta) (draw - mean).
        let inflated: Vec<S> = ridge
            .mean()
            .iter()
            .zip(&draw)
            .map(|(&m, &d)| m + sqrt_beta * (d - m))
            .collect();
        let theta = Theta::from_vec(k, cutoff, &inflated)?;
        let p = BudgetedProblem::new(g, &theta, budget)?;
        candidates.push(solve_local_search_from(&p, 2, &[], rng)?.z);
    }
    if policy.greedy {
        candidates.push(greedy_ucb(g, k, cutoff, cap, &ucb_of)?);
    }
    for _ in 0..policy.local_restarts {
        let start = random_feasible(n, cap, rng);
        candidates.push(ucb_climb(g, k, cutoff, cap, start, &ucb_of)?);
    }
    candidates.push(vec![false; n]);

    let mut best: Option<(S, TreatmentVector)> = None;
    for z in candidates {
        let x = collapsed_features(g, &z, k, cutoff)?;
        let u = ucb_of(&x);
        let replace = match &best {
            Some((bu, bz)) => u > *bu || (u == *bu && z < *bz),
            None => true,
        };
        if replace {
            best = Some((u, z));
        }
    }
    Ok(best.expect("candidate set nonempty").1)
}

fn random_feasible<R: Rng + ?Sized>(n: usize, cap: usize, rng: &mut R) -> TreatmentVector {
    let size = rng.random_range(0..=cap);
    let mut order: Vec<usize> = (0..n).collect();
    for t in 0..size {
        let pick = t + rng.random_range(0..n - t);
        order.swap(t, pick);
    }
    let mut z = vec![false; n];
    for &j in &order[..size] {
        z[j] = true;
    }
    z
}

/// Adds the node with the best UCB gain until the budget is spent or no
/// addition helps.
fn greedy_ucb<S: Scalar>(
    g: &Graph,
    k: usize,
    cutoff: usize,
    cap: usize,
    ucb_of: &impl Fn(&[S]) -> S,
) -> Result<TreatmentVector> {
    let n = g.n();
    let mut z = vec![false; n];
    let mut counts = vec![0usize; n];
    let mut x = collapsed_features::<S>(g, &z, k, cutoff)?;
    let mut current = ucb_of(&x);
    for _ in 0..cap {
        let mut best: Option<(usize, S)> = None;
        for j in 0..n {
            if z[j] {
                continue;
            }
            let xp = features_after_add(&x, g, &counts, j, k, cutoff);
            let u = ucb_of(&xp);
            match best {
                Some((_, bu)) if bu >= u => {}
                _ => best = Some((j, u)),
            }
        }
        match best {
            Some((j, u)) if u > current => {
                x = features_after_add(&x, g, &counts, j, k, cutoff);
                z[j] = true;
                for &i in g.neighbors(j) {
                    counts[i] += 1;
                }
                current = u;
            }
            _ => break,
        }
    }
    Ok(z)
}

fn features_after_add<S: Scalar>(
    x: &[S],
    g: &Graph,
    counts: &[usize],
    j: usize,
    k: usize,
    cutoff: usize,
) -> Vec<S> {
    let mut xp = x.to_vec();
    xp[g.group_of(j)] += S::one();
    for &i in g.neighbors(j) {
        let old = counts[i].min(cutoff);
        let new = (counts[i] + 1).min(cutoff);
        if old != new {
            xp[k + old] -= S::one();
            xp[k + new] += S::one();
        }
    }
    xp
}

fn features_after_remove<S: Scalar>(
    x: &[S],
    g: &Graph,
    counts: &[usize],
    j: usize,
    k: usize,
    cutoff: usize,
) -> Vec<S> {
    let mut xp = x.to_vec();
    xp[g.group_of(j)] -= S::one();
    for &i in g.neighbors(j) {
        let old = counts[i].min(cutoff);
        let new = (counts[i] - 1).min(cutoff);
        if old != new {
            xp[k + old] -= S::one();
            xp[k + new] += S::one();
        }
    }
    xp
}

/// Best-improvement hill climbing directly on the UCB objective.
fn ucb_climb<S: Scalar>(
    g: &Graph,
    k: usize,
    cutoff: usize,
    cap: usize,
    start: TreatmentVector,
    ucb_of: &impl Fn(&[S]) -> S,
) -> Result<TreatmentVector> {
    let n = g.n();
    let mut z = start;
    let mut counts = treated_neighbor_counts(g, &z)?;
    let mut x = collapsed_features::<S>(g, &z, k, cutoff)?;
    let mut current = ucb_of(&x);
    loop {
        let mut best: Option<(Option<usize>, Option<usize>, Vec<S>, S)> = None;
        let used = treated_count(&z);
        let mut offer = |off: Option<usize>, on: Option<usize>, xp: Vec<S>, u: S| {
            if u > current + S::from_f64_lossy(1e-12) * current.tol_scale() {
                match &best {
                    Some((_, _, _, bu)) if *bu >= u => {}
                    _ => best = Some((off, on, xp, u)),
                }
            }
        };
        for j in 0..n {
            if z[j] {
                let xp = features_after_remove(&x, g, &counts, j, k, cutoff);
                let u = ucb_of(&xp);
                offer(Some(j), None, xp, u);
            } else if used < cap {
                let xp = features_after_add(&x, g, &counts, j, k, cutoff);
                let u = ucb_of(&xp);
                offer(None, Some(j), xp, u);
            }
        }
        // Swaps: remove a, add b, evaluated jointly.
        for a in 0..n {
            if !z[a] {
                continue;
            }
            let x_minus = features_after_remove(&x, g, &counts, a, k, cutoff);
            let mut counts_minus = counts.clone();
            for &i in g.neighbors(a) {
                counts_minus[i] -= 1;
            }
            for b in 0..n {
                if z[b] || b == a {
                    continue;
                }
                let xp = features_after_add(&x_minus, g, &counts_minus, b, k, cutoff);
                let u = ucb_of(&xp);
                offer(Some(a), Some(b), xp, u);
            }
        }
        match best {
            Some((off, on, xp, u)) => {
                if let Some(a) = off {
                    z[a] = false;
                    for &i in g.neighbors(a) {
                        counts[i] -= 1;
                    }
                }
                if let Some(b) = on {
                    z[b] = true;
                    for &i in g.neighbors(b) {
                        counts[i] += 1;
                    }
                }
                x = xp;
                current = u;
            }
            None => break,
        }
    }
    Ok(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::build_design;
    use crate::netgen::{sample_sbm, SbmParams};
    use crate::reward::sample_theta;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn small_world(seed: u64, n: usize, k: usize) -> Graph {
        let params = SbmParams::two_level(k, 0.5f64, 0.2).unwrap();
        sample_sbm(&params, n, &mut rng(seed)).unwrap()
    }

    #[test]
    fn ts_step_with_point_mass_posterior_matches_oracle() {
        let g = small_world(1, 9, 2);
        let spec = ThetaGenSpec::new(2, 3).unwrap();
        let theta: Theta<f64> = sample_theta(&spec, &mut rng(2));
        let mean = theta.to_vec();
        // Essentially zero-variance posterior centered at the truth.
        let mut state =
            PosteriorState::from_moments(mean, crate::linalg::Matrix::scaled_identity(6, 1e-24), 1.0)
                .unwrap();
        state = state; // immutable from here
        let budget = Budget::Limit(3);
        let z = ts_step(&state, &g, budget, 2, 3, &SolverChoice::BruteForce, &mut rng(3)).unwrap();
        let oracle = oracle_step(
            &theta,
            &g,
            budget,
            &SolverChoice::BruteForce,
            &[],
            &mut rng(3),
        )
        .unwrap();
        assert_eq!(z, oracle.z);
    }

    #[test]
    fn zero_budget_steps_are_all_untreated() {
        let g = small_world(4, 8, 1);
        let state = PosteriorState::init_prior(5, 1.0f64, 0.1, 1.0).unwrap();
        let z = ts_step(
            &state,
            &g,
            Budget::Limit(0),
            1,
            3,
            &SolverChoice::BruteForce,
            &mut rng(5),
        )
        .unwrap();
        assert!(z.iter().all(|&b| !b));
        let params = ConfidenceParams::default_for(&ThetaGenSpec::new(1, 3).unwrap(), 1.0, 0.1);
        let zu = ucl_step(
            &state,
            &g,
            Budget::Limit(0),
            1,
            3,
            &params,
            &UclCandidatePolicy::default(),
            &mut rng(6),
        )
        .unwrap();
        assert!(zu.iter().all(|&b| !b));
    }

    #[test]
    fn ts_step_replays_bit_identically() {
        let g = small_world(7, 10, 2);
        let state = PosteriorState::init_prior(7, 1.0f64, 0.1, 1.0).unwrap();
        let z1 = ts_step(&state, &g, Budget::Limit(4), 2, 4, &SolverChoice::Auto, &mut rng(8))
            .unwrap();
        let z2 = ts_step(&state, &g, Budget::Limit(4), 2, 4, &SolverChoice::Auto, &mut rng(8))
            .unwrap();
        assert_eq!(z1, z2);
    }

    #[test]
    fn random_policy_edge_budgets_and_marginals() {
        let g = small_world(9, 12, 1);
        let all = random_policy_step(&g, Budget::Unlimited, &mut rng(10));
        assert!(all.iter().all(|&b| b));
        let none = random_policy_step(&g, Budget::Limit(0), &mut rng(11));
        assert!(none.iter().all(|&b| !b));

        let mut r = rng(12);
        let draws = 10_000;
        let b = 3usize;
        let mut freq = vec![0usize; 12];
        for _ in 0..draws {
            let z = random_policy_step(&g, Budget::Limit(b), &mut r);
            assert_eq!(treated_count(&z), b);
            for (i, &zi) in z.iter().enumerate() {
                if zi {
                    freq[i] += 1;
                }
            }
        }
        let p = b as f64 / 12.0;
        let se = (p * (1.0 - p) / draws as f64).sqrt();
        for (i, &f) in freq.iter().enumerate() {
            let emp = f as f64 / draws as f64;
            assert!(
                (emp - p).abs() < 4.0 * se,
                "node {i} marginal {emp} vs {p}"
            );
        }
    }

    #[test]
    fn oracle_prefers_all_untreated_when_direct_effects_negative() {
        let g = small_world(13, 8, 1);
        let theta = Theta::new(vec![-1.0f64], vec![2.0, 2.0, 2.0]).unwrap();
        let s = oracle_step(
            &theta,
            &g,
            Budget::Unlimited,
            &SolverChoice::BruteForce,
            &[],
            &mut rng(14),
        )
        .unwrap();
        assert!(s.z.iter().all(|&b| !b));
    }

    #[test]
    fn oracle_upper_bounds_agent_choices() {
        let g = small_world(15, 10, 2);
        let spec = ThetaGenSpec::new(2, 3).unwrap();
        let theta: Theta<f64> = sample_theta(&spec, &mut rng(16));
        let budget = Budget::Limit(4);
        let oracle = oracle_step(&theta, &g, budget, &SolverChoice::BruteForce, &[], &mut rng(0))
            .unwrap();
        let state = PosteriorState::init_prior(6, 1.0f64, 0.1, 1.0).unwrap();
        let p = BudgetedProblem::new(&g, &theta, budget).unwrap();
        for seed in 0..20 {
            let z = ts_step(&state, &g, budget, 2, 3, &SolverChoice::BruteForce, &mut rng(seed))
                .unwrap();
            assert!(p.objective(&z).unwrap() <= oracle.objective + 1e-9);
        }
    }

    #[test]
    fn sqrt_beta_monotonicity() {
        let params = ConfidenceParams {
            theta_norm_bound: 5.0f64,
            noise_scale: 1.0,
            row_norm_bound: 4.0,
            delta: 0.05,
            lambda: 0.1,
        };
        let mut last = params.sqrt_beta(6, 10, 0);
        for t in 1..20 {
            let b = params.sqrt_beta(6, 10, t);
            assert!(b > last, "beta not strictly increasing at t = {t}");
            last = b;
        }
        let tight = ConfidenceParams {
            delta: 0.01,
            ..params
        };
        assert!(tight.sqrt_beta(6, 10, 5) > params.sqrt_beta(6, 10, 5));
    }

    #[test]
    fn ucl_cold_start_maximizes_feature_norm() {
        // theta_hat = 0 and V = lambda I collapse the UCB to
        // sqrt(beta / lambda) * ||x_z||_2.
        let g = small_world(17, 8, 1);
        let k = 1;
        let cutoff = 2;
        let lambda = 0.5f64;
        let ridge = PosteriorState::init_prior(4, 0.0, lambda, 1.0).unwrap();
        let params = ConfidenceParams {
            theta_norm_bound: 3.0,
            noise_scale: 1.0,
            row_norm_bound: 4.0,
            delta: 0.05,
            lambda,
        };
        let z = ucl_step(
            &ridge,
            &g,
            Budget::Limit(3),
            k,
            cutoff,
            &params,
            &UclCandidatePolicy::default(),
            &mut rng(18),
        )
        .unwrap();
        let norm_of = |z: &[bool]| -> f64 {
            let x = collapsed_features::<f64>(&g, z, k, cutoff).unwrap();
            dot(&x, &x)
        };
        let best = norm_of(&z);
        for mask in 0u32..(1 << 8) {
            if mask.count_ones() > 3 {
                continue;
            }
            let other: Vec<bool> = (0..8).map(|i| mask >> i & 1 == 1).collect();
            assert!(norm_of(&other) <= best + 1e-9);
        }
    }

    #[test]
    fn ucl_exact_path_matches_independent_exhaustive_scan() {
        let g = small_world(19, 9, 2);
        let k = 2;
        let cutoff = 2;
        let dim = 5;
        let mut ridge = PosteriorState::init_prior(dim, 0.0f64, 0.2, 1.0).unwrap();
        // Feed a few rounds of data so theta_hat is nontrivial.
        let spec = ThetaGenSpec::new(k, cutoff).unwrap();
        let theta: Theta<f64> = sample_theta(&spec, &mut rng(20));
        let mut r = rng(21);
        for _ in 0..4 {
            let z = random_policy_step(&g, Budget::Limit(4), &mut r);
            let x = build_design(&g, &z, k, cutoff).unwrap();
            let rewards = crate::reward::expected_rewards(&g, &z, &theta).unwrap();
            ridge = ridge.update(x.as_matrix(), &rewards).unwrap();
        }
        let params = ConfidenceParams::default_for(&spec, 1.0, 0.2);
        let budget = Budget::Limit(4);
        let chosen = ucl_step(
            &ridge,
            &g,
            budget,
            k,
            cutoff,
            &params,
            &UclCandidatePolicy::default(),
            &mut rng(22),
        )
        .unwrap();

        let sqrt_beta = params.sqrt_beta(dim, 9, ridge.rounds_seen());
        let ucb_of = |z: &[bool]| -> f64 {
            let x = collapsed_features::<f64>(&g, z, k, cutoff).unwrap();
            dot(&x, ridge.mean()) + sqrt_beta * ridge.covariance().quadratic_form(&x).max(0.0).sqrt()
        };
        let mut best = f64::NEG_INFINITY;
        let mut best_z = vec![false; 9];
        for mask in 0u32..(1 << 9) {
            if mask.count_ones() > 4 {
                continue;
            }
            let z: Vec<bool> = (0..9).map(|i| mask >> i & 1 == 1).collect();
            let u = ucb_of(&z);
            if u > best || (u == best && z < best_z) {
                best = u;
                best_z = z;
            }
        }
        assert_eq!(chosen, best_z);
        assert!((ucb_of(&chosen) - best).abs() < 1e-12);
    }
}
