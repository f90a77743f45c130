//! Branch-and-bound over the integer-linear encoding.
//!
//! The per-node bound is a tightened form of the encoding's continuous
//! relaxation: for each graph node the count-selector block collapses to
//! the upper concave envelope of the pooled indirect-effect curve over
//! the counts that node can actually reach (the literal relaxation also
//! spends selector mass on counts above the node's degree, so the reduced
//! bound is never looser and often strictly tighter, while still bounding
//! every integer solution from above). Fixed treatments fold into
//! constants; count-range restrictions from branching shrink each
//! envelope's domain.
//!
//! Branching is on the most fractional treatment variable; when the LP
//! comes back integral in the treatments but an envelope still sits above
//! the true curve, the count range of the worst node is split instead,
//! which closes that gap finitely.
//!
//! Exploration is best-first, so the top of the heap is a global upper
//! bound and the proven gap is available at any stopping point. Hitting
//! the time or node limit returns the best incumbent with heuristic
//! status, never an error.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::netgen::TreatmentVector;
use crate::optimize::local::solve_local_search_from;
use crate::optimize::lp::{self, LinearProgram, LpOutcome, Relation};
use crate::optimize::{BudgetedProblem, Solution, SolveStatus};
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct BnbOptions<S> {
    pub time_limit: Duration,
    /// Relative optimality gap that still counts as proven:
    /// `upper - incumbent <= gap_tolerance * max(1, |incumbent|)`.
    pub gap_tolerance: S,
    pub node_limit: usize,
    /// Treatment vectors to seed the incumbent (the caller's best guesses).
    pub warm_starts: Vec<TreatmentVector>,
    /// Run a short deterministic local search for an initial incumbent.
    pub internal_warm_start: bool,
}

impl<S: Scalar> Default for BnbOptions<S> {
    fn default() -> Self {
        Self {
            time_limit: Duration::from_secs(60),
            gap_tolerance: S::from_f64_lossy(0.01),
            node_limit: usize::MAX,
            warm_starts: Vec::new(),
            internal_warm_start: true,
        }
    }
}

#[derive(Debug)]
pub struct BnbReport<S> {
    pub solution: Solution<S>,
    pub nodes_explored: usize,
    pub upper_bound: S,
    pub proven_gap: S,
}

/// Branch-and-bound with the given limits; `gap_tolerance = 0` demands a
/// full optimality proof (modulo a 1e-9 numerical slack).
pub fn solve_bnb<S: Scalar>(
    p: &BudgetedProblem<S>,
    time_limit: Duration,
    gap_tolerance: S,
) -> Result<Solution<S>> {
    let opts = BnbOptions {
        time_limit,
        gap_tolerance,
        ..BnbOptions::default()
    };
    Ok(solve_bnb_with(p, &opts)?.solution)
}

struct Node {
    bound: f64,
    id: u64,
    /// 0 = fixed untreated, 1 = fixed treated, 2 = free.
    z_state: Vec<u8>,
    cnt_lo: Vec<u32>,
    cnt_hi: Vec<u32>,
}

struct HeapEntry {
    bound: f64,
    id: u64,
    node: Node,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.bound == other.bound && self.id == other.id
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound
            .total_cmp(&other.bound)
            .then_with(|| other.id.cmp(&self.id))
    }
}

pub fn solve_bnb_with<S: Scalar>(
    p: &BudgetedProblem<S>,
    opts: &BnbOptions<S>,
) -> Result<BnbReport<S>> {
    let start_time = Instant::now();
    let n = p.n();
    let cap = p.cap();
    let g = p.graph();
    let theta = p.theta();

    if cap == 0 {
        let solution = Solution::checked(p, vec![false; n], None, SolveStatus::ZeroBudget)?;
        let ub = solution.objective;
        return Ok(BnbReport {
            solution,
            nodes_explored: 0,
            upper_bound: ub,
            proven_gap: S::zero(),
        });
    }

    let mut incumbent_z = vec![false; n];
    let mut incumbent_obj = p.objective(&incumbent_z)?;
    let tie = |obj: S| S::from_f64_lossy(1e-12) * obj.tol_scale();
    macro_rules! consider {
        ($z:expr) => {{
            let z: &[bool] = $z;
            if crate::netgen::treated_count(z) <= cap {
                let obj = p.objective(z)?;
                if obj > incumbent_obj + tie(incumbent_obj)
                    || ((obj - incumbent_obj).abs() <= tie(incumbent_obj)
                        && z < incumbent_z.as_slice())
                {
                    incumbent_obj = obj;
                    incumbent_z = z.to_vec();
                }
            }
        }};
    }

    for w in &opts.warm_starts {
        if w.len() == n {
            consider!(w);
        }
    }
    if opts.internal_warm_start {
        let mut rng = ChaCha8Rng::seed_from_u64(0x6e65_7462);
        let warm = solve_local_search_from(p, 3, &[], &mut rng)?;
        consider!(&warm.z);
    }

    let prune_threshold = |inc: S, gap: S| -> f64 {
        let slack = gap * inc.tol_scale() + S::from_f64_lossy(1e-9) * inc.tol_scale();
        (inc + slack).to_f64_lossy()
    };

    let root = Node {
        bound: f64::INFINITY,
        id: 0,
        z_state: vec![2; n],
        cnt_lo: vec![0; n],
        cnt_hi: (0..n).map(|i| g.degree(i) as u32).collect(),
    };
    let mut heap = BinaryHeap::new();
    heap.push(HeapEntry {
        bound: root.bound,
        id: root.id,
        node: root,
    });
    let mut next_id = 1u64;
    let mut nodes_explored = 0usize;
    let mut upper = f64::INFINITY;
    let mut proven = false;

    while let Some(entry) = heap.pop() {
        let node = entry.node;
        if node.bound <= prune_threshold(incumbent_obj, opts.gap_tolerance) {
            upper = node.bound.max(incumbent_obj.to_f64_lossy());
            proven = true;
            break;
        }
        if start_time.elapsed() > opts.time_limit || nodes_explored >= opts.node_limit {
            upper = node.bound;
            break;
        }
        nodes_explored += 1;

        let built = match build_node_lp(p, &node, cap) {
            Some(b) => b,
            None => continue, // branching constraints are contradictory
        };
        let outcome = lp::solve(&built.lp)?;
        let (lp_obj, x) = match outcome {
            LpOutcome::Optimal { objective, x } => (objective + built.constant, x),
            LpOutcome::Infeasible => continue,
        };
        let bound = node.bound.min(lp_obj.to_f64_lossy());
        if bound <= prune_threshold(incumbent_obj, opts.gap_tolerance) {
            continue;
        }

        // Rounding heuristic: fixed treatments plus the largest fractional
        // treatments that fit the budget.
        {
            let mut zr: Vec<bool> = (0..n).map(|j| node.z_state[j] == 1).collect();
            let mut budget_left = cap - zr.iter().filter(|&&b| b).count();
            let mut frac: Vec<(usize, S)> = built
                .z_cols
                .iter()
                .enumerate()
                .map(|(col, &j)| (j, x[col]))
                .filter(|&(_, v)| v > S::from_f64_lossy(0.5))
                .collect();
            frac.sort_by(|a, b| lp::cmp_scalar(b.1, a.1).then(a.0.cmp(&b.0)));
            for (j, _) in frac {
                if budget_left == 0 {
                    break;
                }
                zr[j] = true;
                budget_left -= 1;
            }
            consider!(&zr);
        }
        if bound <= prune_threshold(incumbent_obj, opts.gap_tolerance) {
            continue;
        }

        // Branch on the most fractional treatment variable if any.
        let int_tol = S::from_f64_lossy(1e-6);
        let mut most_frac: Option<(usize, S)> = None;
        for (col, &j) in built.z_cols.iter().enumerate() {
            let v = x[col];
            let frac = v.min(S::one() - v);
            if frac > int_tol {
                match most_frac {
                    Some((_, f)) if f >= frac => {}
                    _ => most_frac = Some((j, frac)),
                }
            }
        }
        if let Some((j, _)) = most_frac {
            for fix in [0u8, 1u8] {
                let mut child = Node {
                    bound,
                    id: next_id,
                    z_state: node.z_state.clone(),
                    cnt_lo: node.cnt_lo.clone(),
                    cnt_hi: node.cnt_hi.clone(),
                };
                next_id += 1;
                child.z_state[j] = fix;
                heap.push(HeapEntry {
                    bound,
                    id: child.id,
                    node: child,
                });
            }
            continue;
        }

        // Treatments are integral: take the candidate, then close any
        // remaining envelope overshoot by splitting a count range.
        let z_int: Vec<bool> = {
            let mut z: Vec<bool> = (0..n).map(|j| node.z_state[j] == 1).collect();
            for (col, &j) in built.z_cols.iter().enumerate() {
                z[j] = x[col] > S::from_f64_lossy(0.5);
            }
            z
        };
        consider!(&z_int);

        let counts = crate::netgen::treated_neighbor_counts(g, &z_int)?;
        let mut worst: Option<(usize, S)> = None;
        for &(i, t_col) in &built.t_cols {
            let slack = x[t_col] - theta.gamma_at(counts[i]);
            if slack > S::from_f64_lossy(1e-9) * x[t_col].tol_scale() {
                match worst {
                    Some((_, s)) if s >= slack => {}
                    _ => worst = Some((i, slack)),
                }
            }
        }
        match worst {
            None => continue, // bound equals the exact value here; done
            Some((i, _)) => {
                let split = counts[i] as u32;
                debug_assert!(split >= node.cnt_lo[i] && split < node.cnt_hi[i]);
                for upper_half in [false, true] {
                    let mut child = Node {
                        bound,
                        id: next_id,
                        z_state: node.z_state.clone(),
                        cnt_lo: node.cnt_lo.clone(),
                        cnt_hi: node.cnt_hi.clone(),
                    };
                    next_id += 1;
                    if upper_half {
                        child.cnt_lo[i] = split + 1;
                    } else {
                        child.cnt_hi[i] = split;
                    }
                    heap.push(HeapEntry {
                        bound,
                        id: child.id,
                        node: child,
                    });
                }
            }
        }
    }

    if heap.is_empty() && !proven {
        upper = incumbent_obj.to_f64_lossy();
        proven = true;
    }
    let upper_bound = S::from_f64_lossy(upper.max(incumbent_obj.to_f64_lossy()));
    let gap_num = (upper_bound - incumbent_obj).max(S::zero());
    let proven_gap = if upper.is_finite() {
        gap_num / incumbent_obj.tol_scale()
    } else {
        S::infinity()
    };
    let status = if proven || proven_gap <= opts.gap_tolerance + S::from_f64_lossy(2e-9) {
        SolveStatus::Exact
    } else {
        SolveStatus::Heuristic
    };
    let solution = Solution::checked(p, incumbent_z, Some(incumbent_obj), status)?;
    Ok(BnbReport {
        solution,
        nodes_explored,
        upper_bound,
        proven_gap,
    })
}

struct NodeLp<S> {
    lp: LinearProgram<S>,
    /// Graph node index per LP treatment column.
    z_cols: Vec<usize>,
    /// `(graph node, LP column)` of each envelope variable.
    t_cols: Vec<(usize, usize)>,
    constant: S,
}

/// Builds the reduced node LP; `None` when the node's branching state is
/// already contradictory.
fn build_node_lp<S: Scalar>(p: &BudgetedProblem<S>, node: &Node, cap: usize) -> Option<NodeLp<S>> {
    let g = p.graph();
    let theta = p.theta();
    let n = g.n();

    let mut z_cols = Vec::new();
    let mut col_of = vec![usize::MAX; n];
    for j in 0..n {
        if node.z_state[j] == 2 {
            col_of[j] = z_cols.len();
            z_cols.push(j);
        }
    }
    let used: usize = (0..n).filter(|&j| node.z_state[j] == 1).count();
    if used > cap {
        return None;
    }
    let remaining = cap - used;

    let mut objective = vec![S::zero(); z_cols.len()];
    let mut lower = vec![S::zero(); z_cols.len()];
    let mut upper = vec![S::one(); z_cols.len()];
    let mut rows: Vec<(Vec<(usize, S)>, Relation, S)> = Vec::new();
    let mut constant = S::zero();
    let mut t_cols = Vec::new();

    for (col, &j) in z_cols.iter().enumerate() {
        objective[col] = theta.direct(g.group_of(j));
    }
    for j in 0..n {
        if node.z_state[j] == 1 {
            constant += theta.direct(g.group_of(j));
        }
    }

    for i in 0..n {
        let fixed1 = g
            .neighbors(i)
            .iter()
            .filter(|&&j| node.z_state[j] == 1)
            .count() as u32;
        let free_nbrs: Vec<usize> = g
            .neighbors(i)
            .iter()
            .copied()
            .filter(|&j| node.z_state[j] == 2)
            .collect();
        let max_count = fixed1 + free_nbrs.len() as u32;
        let lo = node.cnt_lo[i].max(fixed1);
        let hi = node.cnt_hi[i].min(max_count);
        if lo > hi {
            return None;
        }

        // Branch-imposed count rows, expressed over the free neighbors.
        let nbr_terms = || -> Vec<(usize, S)> {
            free_nbrs.iter().map(|&j| (col_of[j], S::one())).collect()
        };
        if node.cnt_hi[i] < max_count {
            rows.push((
                nbr_terms(),
                Relation::Le,
                S::from_usize_lossy((node.cnt_hi[i] - fixed1) as usize),
            ));
        }
        if node.cnt_lo[i] > fixed1 {
            rows.push((
                nbr_terms(),
                Relation::Ge,
                S::from_usize_lossy((node.cnt_lo[i] - fixed1) as usize),
            ));
        }

        if lo == hi {
            constant += theta.gamma_at(lo as usize);
            continue;
        }

        // Envelope variable t_i with hypograph rows over the allowed range.
        let points: Vec<(S, S)> = (lo..=hi)
            .map(|c| (S::from_usize_lossy(c as usize), theta.gamma_at(c as usize)))
            .collect();
        let hull = upper_concave_hull(&points);
        let t_col = objective.len();
        let (mut t_lo, mut t_hi) = (S::infinity(), S::neg_infinity());
        for &(_, y) in &points {
            t_lo = t_lo.min(y);
            t_hi = t_hi.max(y);
        }
        objective.push(S::one());
        lower.push(t_lo);
        upper.push(t_hi);
        t_cols.push((i, t_col));
        let fixed1_s = S::from_usize_lossy(fixed1 as usize);
        for seg in hull.windows(2) {
            let (x1, y1) = seg[0];
            let (x2, y2) = seg[1];
            let slope = (y2 - y1) / (x2 - x1);
            let intercept = y1 - slope * x1;
            // t_i <= slope * (fixed1 + sum free z) + intercept.
            let mut terms = vec![(t_col, S::one())];
            for &j in &free_nbrs {
                terms.push((col_of[j], -slope));
            }
            rows.push((terms, Relation::Le, intercept + slope * fixed1_s));
        }
    }

    if remaining < z_cols.len() {
        let terms: Vec<(usize, S)> = (0..z_cols.len()).map(|c| (c, S::one())).collect();
        rows.push((terms, Relation::Le, S::from_usize_lossy(remaining)));
    }

    Some(NodeLp {
        lp: LinearProgram {
            objective,
            lower,
            upper,
            rows,
        },
        z_cols,
        t_cols,
        constant,
    })
}

/// Upper concave chain of points sorted by x (monotone-chain scan).
fn upper_concave_hull<S: Scalar>(points: &[(S, S)]) -> Vec<(S, S)> {
    let mut hull: Vec<(S, S)> = Vec::with_capacity(points.len());
    for &p3 in points {
        while hull.len() >= 2 {
            let p1 = hull[hull.len() - 2];
            let p2 = hull[hull.len() - 1];
            let cross = (p2.0 - p1.0) * (p3.1 - p1.1) - (p2.1 - p1.1) * (p3.0 - p1.0);
            if cross >= S::zero() {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p3);
    }
    hull
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgen::Graph;
    use crate::optimize::encoding::IlpEncoding;
    use crate::optimize::test_support::random_instance;
    use crate::optimize::{solve_bruteforce, Budget};
    use crate::reward::Theta;

    fn exact_opts() -> BnbOptions<f64> {
        BnbOptions {
            time_limit: Duration::from_secs(120),
            gap_tolerance: 0.0,
            ..BnbOptions::default()
        }
    }

    #[test]
    fn hull_of_peak_and_valley() {
        let peak = vec![(0.0f64, 0.0), (1.0, 5.0), (2.0, 0.0)];
        assert_eq!(upper_concave_hull(&peak).len(), 3);
        let valley = vec![(0.0f64, 0.0), (1.0, -5.0), (2.0, 0.0)];
        let hull = upper_concave_hull(&valley);
        assert_eq!(hull, vec![(0.0, 0.0), (2.0, 0.0)]);
    }

    #[test]
    fn matches_brute_force_on_random_instances() {
        for seed in 0..200 {
            let inst = random_instance(seed, 12);
            let p = BudgetedProblem::new(&inst.graph, &inst.theta, inst.budget).unwrap();
            let exact = solve_bruteforce(&p).unwrap();
            let report = solve_bnb_with(&p, &exact_opts()).unwrap();
            assert_ne!(report.solution.status, SolveStatus::Heuristic, "seed {seed}");
            assert!(
                (exact.objective - report.solution.objective).abs() < 1e-9,
                "seed {seed}: brute {} vs bnb {}",
                exact.objective,
                report.solution.objective
            );
        }
    }

    #[test]
    fn monotone_gamma_full_budget_treats_everyone() {
        let inst = random_instance(7, 10);
        let n = inst.graph.n();
        let k = inst.theta.k();
        let mu = vec![1.5f64; k];
        let gamma: Vec<f64> = (0..=inst.theta.cutoff()).map(|d| d as f64 * 0.7).collect();
        let theta = Theta::new(mu, gamma).unwrap();
        let p = BudgetedProblem::new(&inst.graph, &theta, Budget::Limit(n)).unwrap();
        let report = solve_bnb_with(&p, &exact_opts()).unwrap();
        assert!(report.solution.z.iter().all(|&b| b));
    }

    #[test]
    fn root_bound_is_sandwiched_between_optimum_and_encoding_relaxation() {
        // integer optimum <= reduced root bound <= literal encoding LP.
        for seed in 0..60 {
            let inst = random_instance(300 + seed, 9);
            let p = BudgetedProblem::new(&inst.graph, &inst.theta, inst.budget).unwrap();
            let exact = solve_bruteforce(&p).unwrap();
            let node = Node {
                bound: f64::INFINITY,
                id: 0,
                z_state: vec![2; inst.graph.n()],
                cnt_lo: vec![0; inst.graph.n()],
                cnt_hi: (0..inst.graph.n())
                    .map(|i| inst.graph.degree(i) as u32)
                    .collect(),
            };
            let built = build_node_lp(&p, &node, p.cap()).unwrap();
            let LpOutcome::Optimal { objective, .. } = lp::solve(&built.lp).unwrap() else {
                panic!("root LP infeasible");
            };
            let reduced = objective + built.constant;

            let enc = IlpEncoding::of(&p);
            let LpOutcome::Optimal {
                objective: full, ..
            } = lp::solve(&enc.lp_relaxation()).unwrap()
            else {
                panic!("encoding LP infeasible");
            };
            assert!(
                exact.objective <= reduced + 1e-7,
                "seed {seed}: optimum {} above bound {reduced}",
                exact.objective
            );
            assert!(
                reduced <= full + 1e-6,
                "seed {seed}: reduced {reduced} above encoding {full}"
            );
        }
    }

    #[test]
    fn reduced_bound_is_sandwiched_for_high_degree_nodes() {
        // Star with center degree above the cutoff: the reduced bound may
        // be tighter than the encoding relaxation but must stay above the
        // integer optimum.
        let g = Graph::from_edges(
            6,
            &[(0, 1), (0, 2), (0, 3), (0, 4), (0, 5)],
            vec![0; 6],
        )
        .unwrap();
        let theta = Theta::new(vec![0.3f64], vec![1.0, -4.0, 2.0]).unwrap();
        for budget in [Budget::Limit(2), Budget::Limit(4), Budget::Unlimited] {
            let p = BudgetedProblem::new(&g, &theta, budget).unwrap();
            let exact = solve_bruteforce(&p).unwrap();
            let node = Node {
                bound: f64::INFINITY,
                id: 0,
                z_state: vec![2; 6],
                cnt_lo: vec![0; 6],
                cnt_hi: (0..6).map(|i| g.degree(i) as u32).collect(),
            };
            let built = build_node_lp(&p, &node, p.cap()).unwrap();
            let LpOutcome::Optimal { objective, .. } = lp::solve(&built.lp).unwrap() else {
                panic!("root LP infeasible");
            };
            let reduced = objective + built.constant;
            let enc = IlpEncoding::of(&p);
            let LpOutcome::Optimal {
                objective: full, ..
            } = lp::solve(&enc.lp_relaxation()).unwrap()
            else {
                panic!("encoding LP infeasible");
            };
            assert!(reduced >= exact.objective - 1e-9);
            assert!(reduced <= full + 1e-6);

            let report = solve_bnb_with(&p, &exact_opts()).unwrap();
            assert!((report.solution.objective - exact.objective).abs() < 1e-9);
        }
    }

    #[test]
    fn time_limit_returns_incumbent_without_error() {
        let inst = random_instance(11, 12);
        let p = BudgetedProblem::new(&inst.graph, &inst.theta, inst.budget).unwrap();
        let opts = BnbOptions {
            time_limit: Duration::from_millis(0),
            gap_tolerance: 0.0,
            ..BnbOptions::default()
        };
        let report = solve_bnb_with(&p, &opts).unwrap();
        // All-zero is always a valid incumbent, so a solution exists.
        assert!(report.solution.treated() <= p.cap());
    }

    #[test]
    fn dominance_ordering_and_scale_equivariance() {
        use rand::SeedableRng;
        for seed in 0..60 {
            let inst = random_instance(500 + seed, 11);
            let p = BudgetedProblem::new(&inst.graph, &inst.theta, inst.budget).unwrap();
            let brute = solve_bruteforce(&p).unwrap();
            let bnb = solve_bnb_with(&p, &exact_opts()).unwrap();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let local = solve_local_search_from(&p, 10, &[], &mut rng).unwrap();
            assert!(brute.objective >= bnb.solution.objective - 1e-9);
            assert!(bnb.solution.objective >= local.objective - 1e-9);

            // Scaling theta by c > 0 preserves the argmax and scales the
            // objective by c.
            let c = 2.5f64;
            let scaled_theta = inst.theta.scaled(c);
            let ps = BudgetedProblem::new(&inst.graph, &scaled_theta, inst.budget).unwrap();
            let bnb_scaled = solve_bnb_with(&ps, &exact_opts()).unwrap();
            assert!(
                (bnb_scaled.solution.objective - c * bnb.solution.objective).abs()
                    < 1e-7 * bnb.solution.objective.abs().max(1.0),
                "seed {seed}"
            );
            assert_eq!(bnb_scaled.solution.z, bnb.solution.z, "seed {seed}");
            let mut rng2 = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let local_scaled = solve_local_search_from(&ps, 10, &[], &mut rng2).unwrap();
            assert_eq!(local_scaled.z, local.z, "seed {seed}");
        }
    }
}
