//! Best-improvement hill climbing over 1-flip and budget-preserving
//! 1-swap neighborhoods, with restarts from random feasible starts.
//!
//! Move deltas are evaluated incrementally from the treated-neighbor
//! counts; a swap costs `O(deg(a) + deg(b))` via a stamp array marking the
//! outgoing node's neighborhood.

use rand::Rng;

use crate::error::Result;
use crate::netgen::{treated_neighbor_counts, TreatmentVector};
use crate::optimize::{BudgetedProblem, Solution, SolveStatus};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy)]
enum Move {
    On(usize),
    Off(usize),
    Swap { off: usize, on: usize },
}

struct ClimbState<'a, 'p, S: Scalar> {
    p: &'a BudgetedProblem<'p, S>,
    z: Vec<bool>,
    counts: Vec<usize>,
    used: usize,
    obj: S,
    // Stamp array marking N(a) during swap scans.
    stamp: Vec<u32>,
    stamp_epoch: u32,
}

impl<'a, 'p, S: Scalar> ClimbState<'a, 'p, S> {
    fn new(p: &'a BudgetedProblem<'p, S>, z: TreatmentVector) -> Result<Self> {
        let counts = treated_neighbor_counts(p.graph(), &z)?;
        let obj = p.objective(&z)?;
        let used = crate::netgen::treated_count(&z);
        let n = p.n();
        Ok(Self {
            p,
            z,
            counts,
            used,
            obj,
            stamp: vec![0; n],
            stamp_epoch: 0,
        })
    }

    /// Objective change from treating currently-untreated `j`.
    fn delta_on(&self, j: usize) -> S {
        let theta = self.p.theta();
        let g = self.p.graph();
        let mut delta = theta.direct(g.group_of(j));
        for &i in g.neighbors(j) {
            let c = self.counts[i];
            delta += theta.gamma_at(c + 1) - theta.gamma_at(c);
        }
        delta
    }

    /// Objective change from untreating currently-treated `j`.
    fn delta_off(&self, j: usize) -> S {
        let theta = self.p.theta();
        let g = self.p.graph();
        let mut delta = -theta.direct(g.group_of(j));
        for &i in g.neighbors(j) {
            let c = self.counts[i];
            delta += theta.gamma_at(c - 1) - theta.gamma_at(c);
        }
        delta
    }

    /// Objective change from untreating `a` and treating `b`, evaluated
    /// jointly: nodes adjacent to both see their count dip before `b`'s
    /// contribution is added.
    fn delta_swap(&mut self, a: usize, d_off_a: S, b: usize) -> S {
        let theta = self.p.theta();
        let g = self.p.graph();
        self.stamp_epoch += 1;
        for &i in g.neighbors(a) {
            self.stamp[i] = self.stamp_epoch;
        }
        let mut delta = d_off_a + theta.direct(g.group_of(b));
        for &i in g.neighbors(b) {
            let c = if self.stamp[i] == self.stamp_epoch {
                self.counts[i] - 1
            } else {
                self.counts[i]
            };
            delta += theta.gamma_at(c + 1) - theta.gamma_at(c);
        }
        delta
    }

    fn apply(&mut self, mv: Move, delta: S) {
        match mv {
            Move::On(j) => {
                self.z[j] = true;
                self.used += 1;
                for &i in self.p.graph().neighbors(j) {
                    self.counts[i] += 1;
                }
            }
            Move::Off(j) => {
                self.z[j] = false;
                self.used -= 1;
                for &i in self.p.graph().neighbors(j) {
                    self.counts[i] -= 1;
                }
            }
            Move::Swap { off, on } => {
                self.apply(Move::Off(off), S::zero());
                self.apply(Move::On(on), S::zero());
            }
        }
        self.obj += delta;
    }
}

/// Best-improvement hill climb from `z0` until no flip or swap improves.
/// `on_move` observes `(z, incremental objective)` after every accepted
/// move, which is how the tests pin incremental-delta correctness.
pub fn climb<S: Scalar>(
    p: &BudgetedProblem<S>,
    z0: TreatmentVector,
    mut on_move: impl FnMut(&[bool], S),
) -> Result<(TreatmentVector, S)> {
    let cap = p.cap();
    let n = p.n();
    let mut st = ClimbState::new(p, z0)?;
    loop {
        let improve_tol = S::from_f64_lossy(1e-12) * st.obj.tol_scale();
        let mut best_delta = improve_tol;
        let mut best_move = None;

        let off_deltas: Vec<(usize, S)> = (0..n)
            .filter(|&j| st.z[j])
            .map(|j| (j, st.delta_off(j)))
            .collect();
        if st.used < cap {
            for j in 0..n {
                if !st.z[j] {
                    let d = st.delta_on(j);
                    if d > best_delta {
                        best_delta = d;
                        best_move = Some(Move::On(j));
                    }
                }
            }
        }
        for &(j, d) in &off_deltas {
            if d > best_delta {
                best_delta = d;
                best_move = Some(Move::Off(j));
            }
        }
        for &(a, d_off_a) in &off_deltas {
            for b in 0..n {
                if !st.z[b] {
                    let d = st.delta_swap(a, d_off_a, b);
                    if d > best_delta {
                        best_delta = d;
                        best_move = Some(Move::Swap { off: a, on: b });
                    }
                }
            }
        }

        match best_move {
            Some(mv) => {
                st.apply(mv, best_delta);
                on_move(&st.z, st.obj);
            }
            None => break,
        }
    }
    Ok((st.z, st.obj))
}

/// Hill climbing with `restarts` random feasible starts plus the all-zero
/// start. See [`solve_local_search_from`] to add deterministic warm starts.
pub fn solve_local_search<S: Scalar, R: Rng + ?Sized>(
    p: &BudgetedProblem<S>,
    restarts: usize,
    rng: &mut R,
) -> Result<Solution<S>> {
    solve_local_search_from(p, restarts, &[], rng)
}

/// Hill climbing from `extra_starts` (clamped to feasibility is the
/// caller's job; infeasible starts are rejected), two deterministic
/// starts (all-zero and greedy-by-gain), and `restarts` random feasible
/// starts. The best climb wins; ties resolve to the lexicographically
/// smallest treatment vector.
pub fn solve_local_search_from<S: Scalar, R: Rng + ?Sized>(
    p: &BudgetedProblem<S>,
    restarts: usize,
    extra_starts: &[TreatmentVector],
    rng: &mut R,
) -> Result<Solution<S>> {
    let n = p.n();
    let cap = p.cap();
    if cap == 0 {
        return Solution::checked(p, vec![false; n], None, SolveStatus::ZeroBudget);
    }

    let mut best: Option<(TreatmentVector, S)> = None;
    let mut consider = |z: TreatmentVector, obj: S| {
        let tie = S::from_f64_lossy(1e-12) * obj.tol_scale();
        match &best {
            Some((bz, bobj)) => {
                if obj > *bobj + tie || ((obj - *bobj).abs() <= tie && z < *bz) {
                    best = Some((z, obj));
                }
            }
            None => best = Some((z, obj)),
        }
    };

    for start in extra_starts {
        let (z, obj) = climb(p, start.clone(), |_, _| {})?;
        consider(z, obj);
    }
    let (z, obj) = climb(p, vec![false; n], |_, _| {})?;
    consider(z, obj);
    let (z, obj) = climb(p, greedy_start(p, cap)?, |_, _| {})?;
    consider(z, obj);

    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..restarts {
        let size = rng.random_range(0..=cap);
        for t in 0..size {
            let pick = t + rng.random_range(0..n - t);
            order.swap(t, pick);
        }
        let mut z = vec![false; n];
        for &j in &order[..size] {
            z[j] = true;
        }
        let (z, obj) = climb(p, z, |_, _| {})?;
        consider(z, obj);
    }

    let (z, obj) = best.expect("at least one climb ran");
    Solution::checked(p, z, Some(obj), SolveStatus::Heuristic)
}

/// Deterministic start: repeatedly treat the node with the largest
/// marginal gain while the gain is positive and budget remains.
fn greedy_start<S: Scalar>(p: &BudgetedProblem<S>, cap: usize) -> Result<TreatmentVector> {
    let n = p.n();
    let mut st = ClimbState::new(p, vec![false; n])?;
    for _ in 0..cap {
        let mut best: Option<(usize, S)> = None;
        for j in 0..n {
            if !st.z[j] {
                let d = st.delta_on(j);
                match best {
                    Some((_, bd)) if bd >= d => {}
                    _ => best = Some((j, d)),
                }
            }
        }
        match best {
            Some((j, d)) if d > S::zero() => st.apply(Move::On(j), d),
            _ => break,
        }
    }
    Ok(st.z)
}
