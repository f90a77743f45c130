//! TOML experiment configuration.
//!
//! The file has one section per concern; see `configs/` at the repository
//! root for annotated examples. Size-dependent protocol rules are written
//! as strings: `k = "n/10"` for the group-count rule and `across = "1/n"`
//! for the across-group edge probability, so sweeps over `n` rescale them
//! automatically.
//!
//! ```toml
//! [experiment]
//! rounds = 100
//! replications = 50
//! seed = 42
//!
//! [network]
//! model = "sbm"        # sbm | sbm_explicit | latent
//! n = 100
//! k = "n/10"           # integer or "n/10"
//! within = 0.3
//! across = "1/n"       # number or "1/n"
//!
//! [reward]
//! cutoff = 15
//! sigma = 1.0
//! model = "sania"      # sania | misspec
//!
//! [agent]
//! kind = "thompson"    # thompson | sum_linear_ts | network_ucl | random | oracle
//! prior_mean = 1.0
//! lambda = 0.1
//!
//! [budget]
//! kind = "fraction"    # constant | fraction | unlimited
//! value = 0.2
//!
//! [solver]
//! agent = "local_search"
//! oracle = "bnb"
//! ```

use std::path::Path;
use std::time::Duration;

use netbandit::agents::{AgentKind, ConfidenceParams, SolverChoice, UclCandidatePolicy};
use netbandit::harness::{
    AgentConfig, BudgetRule, EdgeProbRule, EnvSpec, ExperimentConfig, KRule, NetworkModel,
};
use netbandit::netgen::{LatentSpaceParams, SbmParams};
use netbandit::reward::{MisspecTheta, Theta};
use toml::{Table, Value};

/// Configuration-level failure: maps to exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for ConfigError {}

type CResult<T> = Result<T, ConfigError>;

fn err<T>(msg: impl Into<String>) -> CResult<T> {
    Err(ConfigError(msg.into()))
}

pub fn load_config(path: &Path) -> CResult<ExperimentConfig<f64>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read config '{}': {e}", path.display())))?;
    let root: Table = text
        .parse()
        .map_err(|e| ConfigError(format!("config '{}': {e}", path.display())))?;
    parse_config(&root)
}

fn parse_config(root: &Table) -> CResult<ExperimentConfig<f64>> {
    for key in root.keys() {
        if !["experiment", "network", "reward", "agent", "budget", "solver"]
            .contains(&key.as_str())
        {
            return err(format!("unknown section [{key}]"));
        }
    }
    let experiment = section(root, "experiment")?;
    let network = section(root, "network")?;
    let reward = section(root, "reward")?;
    let agent = section(root, "agent")?;
    let budget = section(root, "budget")?;
    let solver = root.get("solver").map(as_table("solver")).transpose()?;

    check_keys(
        experiment,
        "experiment",
        &["rounds", "replications", "seed", "fixed_theta", "record_posterior"],
    )?;
    let rounds = req_usize(experiment, "experiment", "rounds")?;
    let replications = req_usize(experiment, "experiment", "replications")?;
    let master_seed = opt_u64(experiment, "experiment", "seed")?.unwrap_or(0);
    let fixed_theta = opt_bool(experiment, "experiment", "fixed_theta")?.unwrap_or(false);
    let record_posterior =
        opt_bool(experiment, "experiment", "record_posterior")?.unwrap_or(false);

    let n = req_usize(network, "network", "n")?;
    let k_rule = parse_k_rule(network)?;
    let network_model = parse_network(network, n)?;

    check_keys(
        reward,
        "reward",
        &["cutoff", "env_cutoff", "sigma", "model", "mu", "gamma", "gamma0", "gamma1"],
    )?;
    let cutoff = req_usize(reward, "reward", "cutoff")?;
    let env_cutoff = opt_usize(reward, "reward", "env_cutoff")?;
    let noise_sigma = req_f64(reward, "reward", "sigma")?;
    let env = parse_env(reward)?;

    let agent_cfg = parse_agent(agent, k_rule.k(n), env_cutoff.unwrap_or(cutoff), noise_sigma)?;
    let budget_rule = parse_budget(budget)?;
    let (agent_solver, oracle_solver) = parse_solvers(solver)?;

    let cfg = ExperimentConfig {
        n,
        rounds,
        replications,
        master_seed,
        network: network_model,
        k_rule,
        cutoff,
        env_cutoff,
        env,
        noise_sigma,
        agent: agent_cfg,
        budget: budget_rule,
        agent_solver,
        oracle_solver,
        fixed_theta_across_reps: fixed_theta,
        record_posterior,
    };
    cfg.validate().map_err(|e| ConfigError(e.to_string()))?;
    Ok(cfg)
}

fn section<'a>(root: &'a Table, name: &str) -> CResult<&'a Table> {
    match root.get(name) {
        Some(v) => as_table(name)(v),
        None => err(format!("missing section [{name}]")),
    }
}

fn as_table(name: &str) -> impl Fn(&Value) -> CResult<&Table> + '_ {
    move |v| {
        v.as_table()
            .ok_or_else(|| ConfigError(format!("[{name}] must be a table")))
    }
}

fn check_keys(t: &Table, sec: &str, allowed: &[&str]) -> CResult<()> {
    for key in t.keys() {
        if !allowed.contains(&key.as_str()) {
            return err(format!("unknown key '{key}' in [{sec}]"));
        }
    }
    Ok(())
}

fn req_f64(t: &Table, sec: &str, key: &str) -> CResult<f64> {
    opt_f64(t, sec, key)?.ok_or_else(|| ConfigError(format!("missing key '{key}' in [{sec}]")))
}

fn opt_f64(t: &Table, sec: &str, key: &str) -> CResult<Option<f64>> {
    match t.get(key) {
        None => Ok(None),
        Some(Value::Float(f)) => Ok(Some(*f)),
        Some(Value::Integer(i)) => Ok(Some(*i as f64)),
        Some(_) => err(format!("key '{key}' in [{sec}] must be a number")),
    }
}

fn req_usize(t: &Table, sec: &str, key: &str) -> CResult<usize> {
    opt_usize(t, sec, key)?.ok_or_else(|| ConfigError(format!("missing key '{key}' in [{sec}]")))
}

fn opt_usize(t: &Table, sec: &str, key: &str) -> CResult<Option<usize>> {
    match t.get(key) {
        None => Ok(None),
        Some(Value::Integer(i)) if *i >= 0 => Ok(Some(*i as usize)),
        Some(_) => err(format!("key '{key}' in [{sec}] must be a nonnegative integer")),
    }
}

fn opt_u64(t: &Table, sec: &str, key: &str) -> CResult<Option<u64>> {
    match t.get(key) {
        None => Ok(None),
        Some(Value::Integer(i)) if *i >= 0 => Ok(Some(*i as u64)),
        Some(_) => err(format!("key '{key}' in [{sec}] must be a nonnegative integer")),
    }
}

fn opt_bool(t: &Table, sec: &str, key: &str) -> CResult<Option<bool>> {
    match t.get(key) {
        None => Ok(None),
        Some(Value::Boolean(b)) => Ok(Some(*b)),
        Some(_) => err(format!("key '{key}' in [{sec}] must be a boolean")),
    }
}

fn opt_str<'a>(t: &'a Table, sec: &str, key: &str) -> CResult<Option<&'a str>> {
    match t.get(key) {
        None => Ok(None),
        Some(Value::String(s)) => Ok(Some(s)),
        Some(_) => err(format!("key '{key}' in [{sec}] must be a string")),
    }
}

fn req_str<'a>(t: &'a Table, sec: &str, key: &str) -> CResult<&'a str> {
    opt_str(t, sec, key)?.ok_or_else(|| ConfigError(format!("missing key '{key}' in [{sec}]")))
}

fn f64_array(t: &Table, sec: &str, key: &str) -> CResult<Option<Vec<f64>>> {
    match t.get(key) {
        None => Ok(None),
        Some(Value::Array(a)) => a
            .iter()
            .map(|v| match v {
                Value::Float(f) => Ok(*f),
                Value::Integer(i) => Ok(*i as f64),
                _ => err(format!("key '{key}' in [{sec}] must be an array of numbers")),
            })
            .collect::<CResult<Vec<f64>>>()
            .map(Some),
        Some(_) => err(format!("key '{key}' in [{sec}] must be an array of numbers")),
    }
}

fn parse_k_rule(network: &Table) -> CResult<KRule> {
    match network.get("k") {
        None => err("missing key 'k' in [network]"),
        Some(Value::Integer(i)) if *i >= 1 => Ok(KRule::Fixed(*i as usize)),
        Some(Value::String(s)) if s == "n/10" => Ok(KRule::CeilNOver10),
        Some(_) => err("key 'k' in [network] must be a positive integer or \"n/10\""),
    }
}

fn parse_network(network: &Table, n: usize) -> CResult<NetworkModel<f64>> {
    let model = req_str(network, "network", "model")?;
    match model {
        "sbm" => {
            check_keys(network, "network", &["model", "n", "k", "within", "across"])?;
            let within = req_f64(network, "network", "within")?;
            let across = match network.get("across") {
                None => return err("missing key 'across' in [network]"),
                Some(Value::String(s)) if s == "1/n" => EdgeProbRule::OneOverN,
                Some(Value::Float(f)) => EdgeProbRule::Fixed(*f),
                Some(Value::Integer(i)) => EdgeProbRule::Fixed(*i as f64),
                Some(_) => {
                    return err("key 'across' in [network] must be a number or \"1/n\"")
                }
            };
            Ok(NetworkModel::SbmProtocol { within, across })
        }
        "sbm_explicit" => {
            check_keys(network, "network", &["model", "n", "k", "p", "w"])?;
            let p = f64_array(network, "network", "p")?
                .ok_or_else(|| ConfigError("missing key 'p' in [network]".into()))?;
            let w = match network.get("w") {
                Some(Value::Array(rows)) => rows
                    .iter()
                    .map(|row| match row {
                        Value::Array(cells) => cells
                            .iter()
                            .map(|v| match v {
                                Value::Float(f) => Ok(*f),
                                Value::Integer(i) => Ok(*i as f64),
                                _ => err("key 'w' in [network] must be a matrix of numbers"),
                            })
                            .collect::<CResult<Vec<f64>>>(),
                        _ => err("key 'w' in [network] must be a matrix of numbers"),
                    })
                    .collect::<CResult<Vec<Vec<f64>>>>()?,
                _ => return err("missing or invalid key 'w' in [network]"),
            };
            let params =
                SbmParams::new(p, w).map_err(|e| ConfigError(format!("[network]: {e}")))?;
            Ok(NetworkModel::SbmExplicit(params))
        }
        "latent" => {
            check_keys(
                network,
                "network",
                &["model", "n", "k", "alpha", "latent_dim", "u_scale", "a_scale", "b_scale", "groups"],
            )?;
            let params = LatentSpaceParams {
                alpha: req_f64(network, "network", "alpha")?,
                latent_dim: req_usize(network, "network", "latent_dim")?,
                u_scale: opt_f64(network, "network", "u_scale")?.unwrap_or(1.0),
                a_scale: opt_f64(network, "network", "a_scale")?.unwrap_or(0.0),
                b_scale: opt_f64(network, "network", "b_scale")?.unwrap_or(0.0),
            };
            let groups = match network.get("groups") {
                None => None,
                Some(Value::Array(a)) => Some(
                    a.iter()
                        .map(|v| match v {
                            Value::Integer(i) if *i >= 0 => Ok(*i as usize),
                            _ => err("key 'groups' in [network] must be nonnegative integers"),
                        })
                        .collect::<CResult<Vec<usize>>>()?,
                ),
                Some(_) => return err("key 'groups' in [network] must be an array"),
            };
            let _ = n;
            Ok(NetworkModel::Latent { params, groups })
        }
        other => err(format!(
            "unknown network model '{other}' (expected sbm, sbm_explicit, or latent)"
        )),
    }
}

fn parse_env(reward: &Table) -> CResult<EnvSpec<f64>> {
    let model = opt_str(reward, "reward", "model")?.unwrap_or("sania");
    let mu = f64_array(reward, "reward", "mu")?;
    match model {
        "sania" => {
            let gamma = f64_array(reward, "reward", "gamma")?;
            match (mu, gamma) {
                (Some(mu), Some(gamma)) => {
                    let theta =
                        Theta::new(mu, gamma).map_err(|e| ConfigError(format!("[reward]: {e}")))?;
                    Ok(EnvSpec::SaniaFixed(theta))
                }
                (None, None) => Ok(EnvSpec::SaniaGenerated),
                _ => err("[reward]: fixed parameters need both 'mu' and 'gamma'"),
            }
        }
        "misspec" => {
            let gamma0 = f64_array(reward, "reward", "gamma0")?;
            let gamma1 = f64_array(reward, "reward", "gamma1")?;
            match (mu, gamma0, gamma1) {
                (Some(mu), Some(g0), Some(g1)) => {
                    let m = MisspecTheta::new(mu, g0, g1)
                        .map_err(|e| ConfigError(format!("[reward]: {e}")))?;
                    Ok(EnvSpec::MisspecFixed(m))
                }
                (None, None, None) => Ok(EnvSpec::MisspecGenerated),
                _ => err("[reward]: fixed misspecified parameters need 'mu', 'gamma0', 'gamma1'"),
            }
        }
        other => err(format!(
            "unknown reward model '{other}' (expected sania or misspec)"
        )),
    }
}

fn parse_agent(
    agent: &Table,
    k: usize,
    env_cutoff: usize,
    noise_sigma: f64,
) -> CResult<AgentConfig<f64>> {
    check_keys(
        agent,
        "agent",
        &[
            "kind",
            "prior_mean",
            "lambda",
            "delta",
            "theta_norm_bound",
            "noise_scale",
            "row_norm_bound",
            "ucl_exact_max_n",
            "ucl_posterior_draws",
            "ucl_greedy",
            "ucl_local_restarts",
        ],
    )?;
    let kind = AgentKind::parse(req_str(agent, "agent", "kind")?)
        .map_err(|e| ConfigError(e.to_string()))?;
    let prior_mean = opt_f64(agent, "agent", "prior_mean")?.unwrap_or(1.0);
    let lambda = opt_f64(agent, "agent", "lambda")?.unwrap_or(0.1);

    let delta = opt_f64(agent, "agent", "delta")?;
    let tnb = opt_f64(agent, "agent", "theta_norm_bound")?;
    let ns = opt_f64(agent, "agent", "noise_scale")?;
    let rnb = opt_f64(agent, "agent", "row_norm_bound")?;
    let confidence = if delta.is_some() || tnb.is_some() || ns.is_some() || rnb.is_some() {
        let gen = netbandit::reward::ThetaGenSpec::new(k, env_cutoff)
            .map_err(|e| ConfigError(e.to_string()))?;
        let mut c = ConfidenceParams::default_for(&gen, noise_sigma, lambda);
        if let Some(d) = delta {
            c.delta = d;
        }
        if let Some(v) = tnb {
            c.theta_norm_bound = v;
        }
        if let Some(v) = ns {
            c.noise_scale = v;
        }
        if let Some(v) = rnb {
            c.row_norm_bound = v;
        }
        c.validate().map_err(|e| ConfigError(e.to_string()))?;
        Some(c)
    } else {
        None
    };

    let mut ucl_policy = UclCandidatePolicy::default();
    if let Some(v) = opt_usize(agent, "agent", "ucl_exact_max_n")? {
        ucl_policy.exact_max_n = v;
    }
    if let Some(v) = opt_usize(agent, "agent", "ucl_posterior_draws")? {
        ucl_policy.posterior_draws = v;
    }
    if let Some(v) = opt_bool(agent, "agent", "ucl_greedy")? {
        ucl_policy.greedy = v;
    }
    if let Some(v) = opt_usize(agent, "agent", "ucl_local_restarts")? {
        ucl_policy.local_restarts = v;
    }

    Ok(AgentConfig {
        kind,
        prior_mean,
        lambda,
        confidence,
        ucl_policy,
    })
}

fn parse_budget(budget: &Table) -> CResult<BudgetRule> {
    check_keys(budget, "budget", &["kind", "value"])?;
    match req_str(budget, "budget", "kind")? {
        "constant" => Ok(BudgetRule::Constant(req_usize(budget, "budget", "value")?)),
        "fraction" => Ok(BudgetRule::FractionOfN(req_f64(budget, "budget", "value")?)),
        "unlimited" => Ok(BudgetRule::Unlimited),
        other => err(format!(
            "unknown budget kind '{other}' (expected constant, fraction, or unlimited)"
        )),
    }
}

fn parse_solvers(
    solver: Option<&Table>,
) -> CResult<(SolverChoice<f64>, SolverChoice<f64>)> {
    let Some(t) = solver else {
        return Ok((SolverChoice::Auto, SolverChoice::Auto));
    };
    check_keys(
        t,
        "solver",
        &["agent", "oracle", "agent_restarts", "oracle_restarts", "bnb_time_limit_ms", "bnb_gap"],
    )?;
    let bnb_ms = opt_u64(t, "solver", "bnb_time_limit_ms")?.unwrap_or(60_000);
    let bnb_gap = opt_f64(t, "solver", "bnb_gap")?.unwrap_or(0.01);
    let agent_restarts = opt_usize(t, "solver", "agent_restarts")?.unwrap_or(5);
    let oracle_restarts = opt_usize(t, "solver", "oracle_restarts")?.unwrap_or(10);
    let parse = |name: Option<&str>, restarts: usize| -> CResult<SolverChoice<f64>> {
        match name.unwrap_or("auto") {
            "auto" => Ok(SolverChoice::Auto),
            "brute_force" => Ok(SolverChoice::BruteForce),
            "bnb" => Ok(SolverChoice::BranchAndBound {
                time_limit: Duration::from_millis(bnb_ms),
                gap_tolerance: bnb_gap,
            }),
            "local_search" => Ok(SolverChoice::LocalSearch { restarts }),
            other => err(format!(
                "unknown solver '{other}' (expected auto, brute_force, bnb, or local_search)"
            )),
        }
    };
    Ok((
        parse(opt_str(t, "solver", "agent")?, agent_restarts)?,
        parse(opt_str(t, "solver", "oracle")?, oracle_restarts)?,
    ))
}

/// Sweep axis values from the command line.
pub fn parse_axis_values(axis: &str, values: &str) -> CResult<netbandit::harness::SweepSpec<f64>> {
    use netbandit::harness::SweepSpec;
    let tokens: Vec<&str> = values.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if tokens.is_empty() {
        return err("--values must list at least one value");
    }
    match axis {
        "n" => tokens
            .iter()
            .map(|t| {
                t.parse::<usize>()
                    .map_err(|_| ConfigError(format!("invalid n value '{t}'")))
            })
            .collect::<CResult<Vec<usize>>>()
            .map(SweepSpec::N),
        "budget" => tokens
            .iter()
            .map(|t| parse_budget_token(t))
            .collect::<CResult<Vec<BudgetRule>>>()
            .map(SweepSpec::Budget),
        "prior_mean" => tokens
            .iter()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| ConfigError(format!("invalid prior mean '{t}'")))
            })
            .collect::<CResult<Vec<f64>>>()
            .map(SweepSpec::PriorMean),
        "agent" => tokens
            .iter()
            .map(|t| AgentKind::parse(t).map_err(|e| ConfigError(e.to_string())))
            .collect::<CResult<Vec<AgentKind>>>()
            .map(SweepSpec::Agent),
        other => err(format!(
            "unknown axis '{other}' (expected n, budget, prior_mean, or agent)"
        )),
    }
}

/// Budget tokens: an integer cap, `unlimited`, or a fraction like `0.2n`.
fn parse_budget_token(token: &str) -> CResult<BudgetRule> {
    if token == "unlimited" {
        return Ok(BudgetRule::Unlimited);
    }
    if let Some(frac) = token.strip_suffix('n') {
        return frac
            .parse::<f64>()
            .map(BudgetRule::FractionOfN)
            .map_err(|_| ConfigError(format!("invalid budget fraction '{token}'")));
    }
    token
        .parse::<usize>()
        .map(BudgetRule::Constant)
        .map_err(|_| ConfigError(format!("invalid budget '{token}'")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> String {
        r#"
[experiment]
rounds = 5
replications = 2
seed = 7

[network]
model = "sbm"
n = 10
k = 2
within = 0.4
across = 0.1

[reward]
cutoff = 3
sigma = 1.0

[agent]
kind = "thompson"
prior_mean = 1.0
lambda = 0.1

[budget]
kind = "constant"
value = 3
"#
        .to_string()
    }

    #[test]
    fn minimal_config_parses() {
        let root: Table = minimal().parse().unwrap();
        let cfg = parse_config(&root).unwrap();
        assert_eq!(cfg.n, 10);
        assert_eq!(cfg.k(), 2);
        assert_eq!(cfg.dim(), 6);
    }

    #[test]
    fn protocol_rules_resolve_with_n() {
        let text = minimal()
            .replace("k = 2", "k = \"n/10\"")
            .replace("across = 0.1", "across = \"1/n\"")
            .replace("n = 10", "n = 100");
        let root: Table = text.parse().unwrap();
        let cfg = parse_config(&root).unwrap();
        assert_eq!(cfg.k(), 10);
    }

    #[test]
    fn unknown_keys_are_named() {
        let text = minimal().replace("sigma = 1.0", "sigma = 1.0\nsigmaa = 2.0");
        let root: Table = text.parse().unwrap();
        let e = parse_config(&root).unwrap_err();
        assert!(e.0.contains("sigmaa"), "{e}");
    }

    #[test]
    fn negative_sigma_is_rejected() {
        let text = minimal().replace("sigma = 1.0", "sigma = -1.0");
        let root: Table = text.parse().unwrap();
        assert!(parse_config(&root).is_err());
    }

    #[test]
    fn budget_tokens() {
        assert_eq!(parse_budget_token("25").unwrap(), BudgetRule::Constant(25));
        assert_eq!(parse_budget_token("unlimited").unwrap(), BudgetRule::Unlimited);
        assert!(matches!(
            parse_budget_token("0.2n").unwrap(),
            BudgetRule::FractionOfN(f) if (f - 0.2).abs() < 1e-12
        ));
        assert!(parse_budget_token("abc").is_err());
    }
}
