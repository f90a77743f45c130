//! Experiment orchestration: the per-round loop (sample network, agent
//! acts, rewards realize, posterior updates), regret accounting against a
//! per-round oracle on the same graph, seeded replications in parallel,
//! aggregation, and parameter sweeps.
//!
//! ## Seeding
//!
//! Replication `r` owns three independent ChaCha streams of the master
//! seed: stream `4r` drives the environment (parameter draw, graphs,
//! noise), `4r + 1` the agent, and `4r + 2` the oracle solver. Stream
//! `u64::MAX` is reserved for the shared parameter draw when a run fixes
//! the true parameters across replications. Environment stream consumption
//! per round does not depend on the agent's actions, so sweep arms with a
//! shared master seed see identical environments (paired comparisons).
//!
//! Regret is computed on noiseless expected rewards for both the chosen
//! and the oracle action, which removes reward-noise variance from the
//! curves. The agent's chosen vector warm-starts the oracle solver, so the
//! recorded regret increment is nonnegative even when the oracle solver is
//! heuristic; heuristic rounds are flagged and aggregated curves built
//! from them are regret lower bounds.

use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::agents::{
    collapsed_features, oracle_step, random_policy_step, ts_step, ucl_step, AgentKind,
    ConfidenceParams, SolverChoice, UclCandidatePolicy,
};
use crate::design::build_design;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::netgen::{
    sample_latent_space, sample_sbm, treated_count, Graph, LatentSpaceParams, SbmParams,
    TreatmentVector,
};
use crate::optimize::{Budget, SolveStatus, Solution};
use crate::posterior::PosteriorState;
use crate::reward::{
    expected_rewards, expected_rewards_misspec, realize_rewards, sample_misspec_theta,
    sample_theta, MisspecTheta, NoiseSpec, Theta, ThetaGenSpec,
};
use crate::scalar::Scalar;

/// Exhaustive-oracle guard for the non-additive environment.
pub const MISSPEC_MAX_N: usize = 16;

/// Group count as a function of the network size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KRule {
    Fixed(usize),
    /// The protocol rule `ceil(n / 10)`.
    CeilNOver10,
}

impl KRule {
    pub fn k(&self, n: usize) -> usize {
        match self {
            KRule::Fixed(k) => *k,
            KRule::CeilNOver10 => n.div_ceil(10),
        }
    }
}

/// Across-group edge probability as a function of the network size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EdgeProbRule<S> {
    Fixed(S),
    /// The protocol rule `1 / n`.
    OneOverN,
}

impl<S: Scalar> EdgeProbRule<S> {
    pub fn prob(&self, n: usize) -> S {
        match self {
            EdgeProbRule::Fixed(p) => *p,
            EdgeProbRule::OneOverN => S::one() / S::from_usize_lossy(n.max(1)),
        }
    }
}

#[derive(Debug, Clone)]
pub enum NetworkModel<S> {
    /// Uniform-membership SBM with one within- and one across-group edge
    /// probability (the simulation protocol's network).
    SbmProtocol { within: S, across: EdgeProbRule<S> },
    /// Fully explicit SBM parameters.
    SbmExplicit(SbmParams<S>),
    /// Latent-space model; optional labels drive reward heterogeneity.
    Latent {
        params: LatentSpaceParams<S>,
        groups: Option<Vec<usize>>,
    },
}

/// Per-round treated-node cap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BudgetRule {
    Constant(usize),
    /// `floor(fraction * n)`.
    FractionOfN(f64),
    Unlimited,
}

impl BudgetRule {
    pub fn resolve(&self, n: usize) -> Budget {
        match self {
            BudgetRule::Constant(b) => Budget::Limit(*b),
            BudgetRule::FractionOfN(f) => Budget::Limit((f * n as f64).floor() as usize),
            BudgetRule::Unlimited => Budget::Unlimited,
        }
    }

    pub fn label(&self) -> String {
        match self {
            BudgetRule::Constant(b) => b.to_string(),
            BudgetRule::FractionOfN(f) => format!("{f}n"),
            BudgetRule::Unlimited => "unlimited".into(),
        }
    }
}

/// True-environment specification.
#[derive(Debug, Clone)]
pub enum EnvSpec<S> {
    /// Additive rewards with parameters drawn per replication.
    SaniaGenerated,
    /// Additive rewards with fixed parameters.
    SaniaFixed(Theta<S>),
    /// Non-additive rewards with parameters drawn per replication.
    MisspecGenerated,
    /// Non-additive rewards with fixed parameters.
    MisspecFixed(MisspecTheta<S>),
}

impl<S> EnvSpec<S> {
    pub fn is_misspec(&self) -> bool {
        matches!(self, EnvSpec::MisspecGenerated | EnvSpec::MisspecFixed(_))
    }
}

#[derive(Debug, Clone)]
pub struct AgentConfig<S> {
    pub kind: AgentKind,
    pub prior_mean: S,
    pub lambda: S,
    /// Confidence-set constants for the UCB agent; derived from the
    /// parameter generator when absent.
    pub confidence: Option<ConfidenceParams<S>>,
    pub ucl_policy: UclCandidatePolicy,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig<S> {
    pub n: usize,
    pub rounds: usize,
    pub replications: usize,
    pub master_seed: u64,
    pub network: NetworkModel<S>,
    pub k_rule: KRule,
    /// Learner-side pooling cutoff (the model dimension is
    /// `k + cutoff + 1`).
    pub cutoff: usize,
    /// Environment-side cutoff; defaults to the learner's. Setting it
    /// higher studies cutoff misspecification.
    pub env_cutoff: Option<usize>,
    pub env: EnvSpec<S>,
    pub noise_sigma: S,
    pub agent: AgentConfig<S>,
    pub budget: BudgetRule,
    pub agent_solver: SolverChoice<S>,
    pub oracle_solver: SolverChoice<S>,
    /// Draw one shared true parameter vector instead of one per
    /// replication (frequentist rather than Bayesian regret).
    pub fixed_theta_across_reps: bool,
    /// Snapshot the posterior mean each round into the records.
    pub record_posterior: bool,
}

impl<S: Scalar> ExperimentConfig<S> {
    pub fn k(&self) -> usize {
        self.k_rule.k(self.n)
    }

    /// Learner model dimension.
    pub fn dim(&self) -> usize {
        self.k() + self.cutoff + 1
    }

    pub fn env_cutoff(&self) -> usize {
        self.env_cutoff.unwrap_or(self.cutoff)
    }

    pub fn theta_gen_spec(&self) -> ThetaGenSpec {
        ThetaGenSpec {
            k: self.k(),
            cutoff: self.env_cutoff(),
        }
    }

    pub fn confidence_params(&self) -> ConfidenceParams<S> {
        self.agent.confidence.unwrap_or_else(|| {
            ConfidenceParams::default_for(&self.theta_gen_spec(), self.noise_sigma, self.agent.lambda)
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("n must be >= 1".into()));
        }
        if self.rounds == 0 {
            return Err(Error::Config("rounds must be >= 1".into()));
        }
        if self.replications == 0 {
            return Err(Error::Config("replications must be >= 1".into()));
        }
        if self.k() == 0 {
            return Err(Error::Config("k must be >= 1".into()));
        }
        if self.noise_sigma < S::zero() || !self.noise_sigma.is_finite() {
            return Err(Error::Config(format!(
                "noise sigma must be >= 0, got {}",
                self.noise_sigma
            )));
        }
        if self.agent.lambda <= S::zero() {
            return Err(Error::Config("lambda must be > 0".into()));
        }
        if let Some(env_c) = self.env_cutoff {
            if env_c < self.cutoff {
                return Err(Error::Config(format!(
                    "environment cutoff {env_c} below learner cutoff {}",
                    self.cutoff
                )));
            }
        }
        if let BudgetRule::FractionOfN(f) = self.budget {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::Config(format!(
                    "budget fraction {f} outside [0, 1]"
                )));
            }
        }
        match &self.network {
            NetworkModel::SbmProtocol { within, across } => {
                // Probe construction for early diagnostics.
                SbmParams::two_level(self.k(), *within, across.prob(self.n))?;
            }
            NetworkModel::SbmExplicit(params) => {
                if params.k() != self.k() {
                    return Err(Error::Config(format!(
                        "explicit SBM has {} groups, config expects {}",
                        params.k(),
                        self.k()
                    )));
                }
            }
            NetworkModel::Latent { params, groups } => {
                params.validate()?;
                if let Some(g) = groups {
                    if g.len() != self.n {
                        return Err(Error::Config(format!(
                            "latent group labels have length {}, expected {}",
                            g.len(),
                            self.n
                        )));
                    }
                    if g.iter().any(|&l| l >= self.k()) {
                        return Err(Error::Config("latent group label out of range".into()));
                    }
                } else if self.k() != 1 {
                    return Err(Error::Config(
                        "latent-space networks default to one group; supply labels for k > 1"
                            .into(),
                    ));
                }
            }
        }
        match &self.env {
            EnvSpec::SaniaFixed(theta) => {
                if theta.k() != self.k() || theta.cutoff() != self.env_cutoff() {
                    return Err(Error::Config(
                        "fixed theta shape does not match (k, env cutoff)".into(),
                    ));
                }
            }
            EnvSpec::MisspecFixed(m) => {
                if m.k() != self.k() || m.cutoff() != self.env_cutoff() {
                    return Err(Error::Config(
                        "fixed misspecified theta shape does not match (k, env cutoff)".into(),
                    ));
                }
            }
            _ => {}
        }
        if self.env.is_misspec() && self.n > MISSPEC_MAX_N {
            return Err(Error::Config(format!(
                "misspecified environment uses an exhaustive oracle; n must be <= {MISSPEC_MAX_N}"
            )));
        }
        if let Some(c) = &self.agent.confidence {
            c.validate()?;
        }
        Ok(())
    }

    /// FNV-1a over the debug rendering; stable within a build.
    pub fn hash(&self) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        for b in format!("{self:?}").bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        h
    }
}

/// Per-round bookkeeping.
#[derive(Debug, Clone)]
pub struct RoundRecord<S> {
    /// 1-based round index.
    pub t: usize,
    pub treated: usize,
    pub chosen_expected: S,
    pub oracle_expected: S,
    pub oracle_status: SolveStatus,
    pub regret_increment: S,
    pub realized_total: S,
    pub wall: Duration,
    pub graph_fingerprint: u64,
    pub posterior_mean: Option<Vec<S>>,
}

#[derive(Debug, Clone)]
pub struct RunResult<S> {
    pub rep: usize,
    pub records: Vec<RoundRecord<S>>,
    /// Prefix sums of the regret increments.
    pub cumulative_regret: Vec<S>,
    pub wall: Duration,
    pub config_hash: u64,
    pub master_seed: u64,
}

#[derive(Debug, Clone)]
pub struct Aggregate<S> {
    pub rounds: usize,
    pub reps: usize,
    pub mean_cum_regret: Vec<S>,
    /// Standard error (sample sd over replications / sqrt(reps)).
    pub se_cum_regret: Vec<S>,
    pub heuristic_round_fraction: f64,
}

impl<S: Scalar> Aggregate<S> {
    pub fn final_mean(&self) -> S {
        *self.mean_cum_regret.last().expect("at least one round")
    }

    pub fn final_se(&self) -> S {
        *self.se_cum_regret.last().expect("at least one round")
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentResult<S> {
    pub runs: Vec<RunResult<S>>,
    /// Replications that aborted, with their diagnostics. Never silently
    /// dropped: the aggregate covers only `runs`.
    pub failures: Vec<(usize, String)>,
    pub aggregate: Aggregate<S>,
}

fn stream_rng(master: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(stream);
    rng
}

/// The environment's true parameters for one replication.
enum EnvTheta<S> {
    Sania(Theta<S>),
    Misspec(MisspecTheta<S>),
}

impl<S: Scalar> EnvTheta<S> {
    fn draw(cfg: &ExperimentConfig<S>, rng: &mut ChaCha8Rng) -> Self {
        let spec = cfg.theta_gen_spec();
        match &cfg.env {
            EnvSpec::SaniaGenerated => EnvTheta::Sania(sample_theta(&spec, rng)),
            EnvSpec::SaniaFixed(t) => EnvTheta::Sania(t.clone()),
            EnvSpec::MisspecGenerated => EnvTheta::Misspec(sample_misspec_theta(&spec, rng)),
            EnvSpec::MisspecFixed(m) => EnvTheta::Misspec(m.clone()),
        }
    }

    fn expected(&self, g: &Graph, z: &[bool]) -> Result<Vec<S>> {
        match self {
            EnvTheta::Sania(t) => expected_rewards(g, z, t),
            EnvTheta::Misspec(m) => expected_rewards_misspec(g, z, m),
        }
    }

    fn oracle(
        &self,
        g: &Graph,
        budget: Budget,
        solver: &SolverChoice<S>,
        warm: &[TreatmentVector],
        rng: &mut ChaCha8Rng,
    ) -> Result<(TreatmentVector, S, SolveStatus)> {
        match self {
            EnvTheta::Sania(t) => {
                let s: Solution<S> = oracle_step(t, g, budget, solver, warm, rng)?;
                Ok((s.z, s.objective, s.status))
            }
            EnvTheta::Misspec(m) => misspec_oracle(g, m, budget),
        }
    }
}

/// Exhaustive oracle for the non-additive environment.
fn misspec_oracle<S: Scalar>(
    g: &Graph,
    m: &MisspecTheta<S>,
    budget: Budget,
) -> Result<(TreatmentVector, S, SolveStatus)> {
    let n = g.n();
    if n > MISSPEC_MAX_N {
        return Err(Error::TooLarge {
            what: "exhaustive misspecified oracle",
            n,
            max: MISSPEC_MAX_N,
        });
    }
    let cap = budget.cap(n);
    if cap == 0 {
        let z = vec![false; n];
        let total = expected_rewards_misspec(g, &z, m)?.into_iter().sum();
        return Ok((z, total, SolveStatus::ZeroBudget));
    }
    let mut best: Option<(S, TreatmentVector)> = None;
    for mask in 0u64..(1 << n) {
        if (mask.count_ones() as usize) > cap {
            continue;
        }
        let z: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
        let total: S = expected_rewards_misspec(g, &z, m)?.into_iter().sum();
        let replace = match &best {
            Some((b, bz)) => total > *b || (total == *b && z < *bz),
            None => true,
        };
        if replace {
            best = Some((total, z));
        }
    }
    let (obj, z) = best.expect("nonempty feasible set");
    Ok((z, obj, SolveStatus::Exact))
}

/// Agent state advanced by the per-round loop.
enum AgentState<S> {
    Thompson { posterior: PosteriorState<S> },
    SumLinear { posterior: PosteriorState<S> },
    Ucl { ridge: PosteriorState<S> },
    Random,
    Oracle,
}

impl<S: Scalar> AgentState<S> {
    fn build(cfg: &ExperimentConfig<S>) -> Result<Self> {
        let dim = cfg.dim();
        // The assumed observation noise is floored so conjugacy stays
        // well-defined in noiseless runs.
        let sigma2 = (cfg.noise_sigma * cfg.noise_sigma).max(S::from_f64_lossy(1e-12));
        match cfg.agent.kind {
            AgentKind::Thompson => Ok(AgentState::Thompson {
                posterior: PosteriorState::init_prior(
                    dim,
                    cfg.agent.prior_mean,
                    cfg.agent.lambda,
                    sigma2,
                )?,
            }),
            AgentKind::SumLinearTs => Ok(AgentState::SumLinear {
                // Summing n unit-variance noises gives variance n sigma^2.
                posterior: PosteriorState::init_prior(
                    dim,
                    cfg.agent.prior_mean,
                    cfg.agent.lambda,
                    sigma2 * S::from_usize_lossy(cfg.n),
                )?,
            }),
            AgentKind::NetworkUcl => Ok(AgentState::Ucl {
                ridge: PosteriorState::init_prior(
                    dim,
                    S::zero(),
                    cfg.confidence_params().lambda,
                    S::one(),
                )?,
            }),
            AgentKind::RandomPolicy => Ok(AgentState::Random),
            AgentKind::Oracle => Ok(AgentState::Oracle),
        }
    }

    fn step(
        &self,
        cfg: &ExperimentConfig<S>,
        env: &EnvTheta<S>,
        g: &Graph,
        budget: Budget,
        rng: &mut ChaCha8Rng,
    ) -> Result<TreatmentVector> {
        let k = cfg.k();
        let cutoff = cfg.cutoff;
        match self {
            AgentState::Thompson { posterior } => {
                ts_step(posterior, g, budget, k, cutoff, &cfg.agent_solver, rng)
            }
            AgentState::SumLinear { posterior } => {
                ts_step(posterior, g, budget, k, cutoff, &cfg.agent_solver, rng)
            }
            AgentState::Ucl { ridge } => ucl_step(
                ridge,
                g,
                budget,
                k,
                cutoff,
                &cfg.confidence_params(),
                &cfg.agent.ucl_policy,
                rng,
            ),
            AgentState::Random => Ok(random_policy_step(g, budget, rng)),
            AgentState::Oracle => {
                let (z, _, _) = env.oracle(g, budget, &cfg.agent_solver, &[], rng)?;
                Ok(z)
            }
        }
    }

    fn observe(
        &mut self,
        cfg: &ExperimentConfig<S>,
        g: &Graph,
        z: &[bool],
        rewards: &[S],
    ) -> Result<()> {
        let k = cfg.k();
        let cutoff = cfg.cutoff;
        match self {
            AgentState::Thompson { posterior } => {
                let x = build_design::<S>(g, z, k, cutoff)?;
                *posterior = posterior.update(x.as_matrix(), rewards)?;
            }
            AgentState::SumLinear { posterior } => {
                let row = collapsed_features::<S>(g, z, k, cutoff)?;
                let total: S = rewards.iter().copied().sum();
                let x = Matrix::from_rows(&[row]);
                *posterior = posterior.update(&x, &[total])?;
            }
            AgentState::Ucl { ridge } => {
                let x = build_design::<S>(g, z, k, cutoff)?;
                *ridge = ridge.update(x.as_matrix(), rewards)?;
            }
            AgentState::Random | AgentState::Oracle => {}
        }
        Ok(())
    }

    fn posterior_mean(&self) -> Option<Vec<S>> {
        match self {
            AgentState::Thompson { posterior } | AgentState::SumLinear { posterior } => {
                Some(posterior.mean().to_vec())
            }
            AgentState::Ucl { ridge } => Some(ridge.mean().to_vec()),
            _ => None,
        }
    }
}

fn sample_network<S: Scalar>(
    cfg: &ExperimentConfig<S>,
    rng: &mut ChaCha8Rng,
) -> Result<Graph> {
    match &cfg.network {
        NetworkModel::SbmProtocol { within, across } => {
            let params = SbmParams::two_level(cfg.k(), *within, across.prob(cfg.n))?;
            sample_sbm(&params, cfg.n, rng)
        }
        NetworkModel::SbmExplicit(params) => sample_sbm(params, cfg.n, rng),
        NetworkModel::Latent { params, groups } => {
            let g = sample_latent_space(params, cfg.n, rng)?;
            match groups {
                Some(labels) => g.with_groups(labels.clone()),
                None => Ok(g),
            }
        }
    }
}

/// Runs one seeded replication: fresh network each round, agent step,
/// realized rewards, belief update, regret against the per-round oracle.
pub fn run_replication<S: Scalar>(cfg: &ExperimentConfig<S>, rep: usize) -> Result<RunResult<S>> {
    cfg.validate()?;
    let started = Instant::now();
    let mut env_rng = stream_rng(cfg.master_seed, 4 * rep as u64);
    let mut agent_rng = stream_rng(cfg.master_seed, 4 * rep as u64 + 1);
    let mut oracle_rng = stream_rng(cfg.master_seed, 4 * rep as u64 + 2);

    let env = if cfg.fixed_theta_across_reps {
        let mut shared = stream_rng(cfg.master_seed, u64::MAX);
        EnvTheta::draw(cfg, &mut shared)
    } else {
        EnvTheta::draw(cfg, &mut env_rng)
    };

    let mut agent = AgentState::build(cfg)?;
    let noise = NoiseSpec::new(cfg.noise_sigma)?;
    let budget = cfg.budget.resolve(cfg.n);
    let cap = budget.cap(cfg.n);

    let mut records = Vec::with_capacity(cfg.rounds);
    let mut cumulative = Vec::with_capacity(cfg.rounds);
    let mut cum = S::zero();
    for t in 1..=cfg.rounds {
        let round_started = Instant::now();
        let g = sample_network(cfg, &mut env_rng)?;

        let z = agent.step(cfg, &env, &g, budget, &mut agent_rng)?;
        if z.len() != cfg.n || treated_count(&z) > cap {
            return Err(Error::Contract(format!(
                "agent emitted an infeasible treatment vector at round {t}"
            )));
        }

        let expected = env.expected(&g, &z)?;
        let chosen_expected: S = expected.iter().copied().sum();
        let realized = realize_rewards(&expected, &noise, &mut env_rng);
        let realized_total: S = realized.iter().copied().sum();

        agent.observe(cfg, &g, &z, &realized)?;

        let (_, oracle_expected, oracle_status) = env.oracle(
            &g,
            budget,
            &cfg.oracle_solver,
            std::slice::from_ref(&z),
            &mut oracle_rng,
        )?;
        let regret_increment = oracle_expected - chosen_expected;
        if matches!(oracle_status, SolveStatus::Exact | SolveStatus::ZeroBudget)
            && regret_increment < -S::from_f64_lossy(1e-9) * oracle_expected.tol_scale()
        {
            return Err(Error::Numerical(format!(
                "negative regret {regret_increment} under an exact oracle at round {t}"
            )));
        }
        cum += regret_increment;
        cumulative.push(cum);
        records.push(RoundRecord {
            t,
            treated: treated_count(&z),
            chosen_expected,
            oracle_expected,
            oracle_status,
            regret_increment,
            realized_total,
            wall: round_started.elapsed(),
            graph_fingerprint: g.fingerprint(),
            posterior_mean: if cfg.record_posterior {
                agent.posterior_mean()
            } else {
                None
            },
        });
    }

    Ok(RunResult {
        rep,
        records,
        cumulative_regret: cumulative,
        wall: started.elapsed(),
        config_hash: cfg.hash(),
        master_seed: cfg.master_seed,
    })
}

/// Runs all configured replications, optionally on a dedicated thread
/// pool of `jobs` workers. Results are deterministic for any parallelism
/// degree: replication seeds are fixed by index and aggregation reduces
/// in index order.
pub fn run_replications<S: Scalar>(
    cfg: &ExperimentConfig<S>,
    jobs: Option<usize>,
) -> Result<ExperimentResult<S>> {
    cfg.validate()?;
    let reps: Vec<usize> = (0..cfg.replications).collect();
    let run_all = || -> Vec<(usize, Result<RunResult<S>>)> {
        reps.par_iter()
            .map(|&rep| (rep, run_replication(cfg, rep)))
            .collect()
    };
    let outcomes = match jobs {
        Some(j) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(j.max(1))
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            pool.install(run_all)
        }
        None => run_all(),
    };

    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for (rep, outcome) in outcomes {
        match outcome {
            Ok(run) => runs.push(run),
            Err(e) => failures.push((rep, e.to_string())),
        }
    }
    if runs.is_empty() {
        return Err(Error::Numerical(format!(
            "every replication failed; first: {}",
            failures
                .first()
                .map(|(_, e)| e.as_str())
                .unwrap_or("none ran")
        )));
    }
    let aggregate = aggregate(&runs, cfg.rounds);
    Ok(ExperimentResult {
        runs,
        failures,
        aggregate,
    })
}

fn aggregate<S: Scalar>(runs: &[RunResult<S>], rounds: usize) -> Aggregate<S> {
    let reps = runs.len();
    let mut mean = vec![S::zero(); rounds];
    let mut se = vec![S::zero(); rounds];
    for t in 0..rounds {
        let mut sum = S::zero();
        for run in runs {
            sum += run.cumulative_regret[t];
        }
        let m = sum / S::from_usize_lossy(reps);
        mean[t] = m;
        if reps > 1 {
            let mut sq = S::zero();
            for run in runs {
                let d = run.cumulative_regret[t] - m;
                sq += d * d;
            }
            let var = sq / S::from_usize_lossy(reps - 1);
            se[t] = (var / S::from_usize_lossy(reps)).sqrt();
        }
    }
    let total_rounds = reps * rounds;
    let heuristic = runs
        .iter()
        .flat_map(|r| &r.records)
        .filter(|rec| rec.oracle_status == SolveStatus::Heuristic)
        .count();
    Aggregate {
        rounds,
        reps,
        mean_cum_regret: mean,
        se_cum_regret: se,
        heuristic_round_fraction: heuristic as f64 / total_rounds as f64,
    }
}

/// Axis of a parameter sweep.
#[derive(Debug, Clone)]
pub enum SweepSpec<S> {
    N(Vec<usize>),
    Budget(Vec<BudgetRule>),
    PriorMean(Vec<S>),
    Agent(Vec<AgentKind>),
}

#[derive(Debug)]
pub struct SweepArm<S> {
    pub label: String,
    pub config: ExperimentConfig<S>,
    pub result: ExperimentResult<S>,
}

/// Runs one experiment per axis value with a shared master seed, so arms
/// are paired: every arm sees identical environment draws wherever the
/// axis leaves the environment untouched.
pub fn sweep<S: Scalar>(
    base: &ExperimentConfig<S>,
    spec: &SweepSpec<S>,
    jobs: Option<usize>,
) -> Result<Vec<SweepArm<S>>> {
    let arms: Vec<(String, ExperimentConfig<S>)> = match spec {
        SweepSpec::N(values) => values
            .iter()
            .map(|&n| {
                let mut cfg = base.clone();
                cfg.n = n;
                (format!("n={n}"), cfg)
            })
            .collect(),
        SweepSpec::Budget(values) => values
            .iter()
            .map(|rule| {
                let mut cfg = base.clone();
                cfg.budget = *rule;
                (format!("budget={}", rule.label()), cfg)
            })
            .collect(),
        SweepSpec::PriorMean(values) => values
            .iter()
            .map(|&m| {
                let mut cfg = base.clone();
                cfg.agent.prior_mean = m;
                (format!("prior_mean={m}"), cfg)
            })
            .collect(),
        SweepSpec::Agent(values) => values
            .iter()
            .map(|&kind| {
                let mut cfg = base.clone();
                cfg.agent.kind = kind;
                (format!("agent={}", kind.as_str()), cfg)
            })
            .collect(),
    };
    let mut out = Vec::with_capacity(arms.len());
    for (label, config) in arms {
        let result = run_replications(&config, jobs)?;
        out.push(SweepArm {
            label,
            config,
            result,
        });
    }
    Ok(out)
}

/// Least-squares slope of `ln(series[t])` against `ln(t)` over the
/// 1-based round window `[t_lo, t_hi]`. Nonpositive values clamp to a
/// tiny floor so early zero-regret runs stay finite.
pub fn loglog_slope<S: Scalar>(series: &[S], t_lo: usize, t_hi: usize) -> f64 {
    let lo = t_lo.max(1);
    let hi = t_hi.min(series.len());
    let pts: Vec<(f64, f64)> = (lo..=hi)
        .map(|t| {
            let y = series[t - 1].to_f64_lossy().max(1e-9);
            ((t as f64).ln(), y.ln())
        })
        .collect();
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}
