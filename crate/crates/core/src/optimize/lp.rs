//! Bounded-variable two-phase primal simplex.
//!
//! Small dense full-tableau implementation sized for the LP relaxations
//! branch-and-bound feeds it (a few hundred rows and columns). Every
//! variable must carry at least one finite bound; rows may be `<=`, `>=`,
//! or `=`. Phase 1 drives artificial variables out of infeasible rows,
//! phase 2 maximizes the real objective.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

impl Relation {
    pub fn as_str(&self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        }
    }
}

/// Maximization problem over box-bounded variables with sparse rows.
#[derive(Debug, Clone)]
pub struct LinearProgram<S> {
    /// Objective coefficient per structural variable (maximized).
    pub objective: Vec<S>,
    /// Per-variable lower bounds; `-inf` allowed if the upper bound is finite.
    pub lower: Vec<S>,
    /// Per-variable upper bounds; `+inf` allowed if the lower bound is finite.
    pub upper: Vec<S>,
    /// Constraint rows as `(terms, relation, rhs)` with sparse terms.
    pub rows: Vec<(Vec<(usize, S)>, Relation, S)>,
}

#[derive(Debug, Clone)]
pub enum LpOutcome<S> {
    Optimal { objective: S, x: Vec<S> },
    Infeasible,
}

struct Tableau<S> {
    m: usize,
    ncols: usize,
    /// Dense rows of `B^{-1} A`.
    tab: Vec<Vec<S>>,
    /// Current basic variable values, one per row.
    xb: Vec<S>,
    /// Basic variable index per row.
    basis: Vec<usize>,
    /// Current value of every nonbasic variable (stale for basic ones).
    val: Vec<S>,
    lower: Vec<S>,
    upper: Vec<S>,
    /// Reduced-cost row for the active objective.
    dj: Vec<S>,
    /// Columns barred from entering (spent artificials).
    barred: Vec<bool>,
    eps: S,
}

impl<S: Scalar> Tableau<S> {
    fn nonbasic_can_increase(&self, j: usize) -> bool {
        self.val[j] < self.upper[j] - self.eps
    }

    fn nonbasic_can_decrease(&self, j: usize) -> bool {
        self.val[j] > self.lower[j] + self.eps
    }

    /// One simplex phase on the current reduced costs. Returns false on an
    /// unbounded ray.
    fn optimize(&mut self, is_basic: &mut [bool]) -> Result<bool> {
        let iter_limit = 400 + 60 * (self.m + self.ncols);
        let mut degenerate_streak = 0usize;
        for _iter in 0..iter_limit {
            let bland = degenerate_streak > 40;
            let Some((enter, increase)) = self.choose_entering(is_basic, bland) else {
                return Ok(true);
            };
            let sigma = if increase { S::one() } else { -S::one() };

            // Ratio test: the entering variable moves by sigma * theta,
            // limited by its own opposite bound (a bound flip) or by the
            // first basic variable to hit a bound. Ties prefer the largest
            // pivot element for stability, lowest row index under Bland.
            let own_span = self.upper[enter] - self.lower[enter];
            let mut theta = own_span;
            let mut block: Option<usize> = None;
            for r in 0..self.m {
                let u = self.tab[r][enter];
                let delta = -sigma * u;
                if delta.abs() <= self.eps {
                    continue;
                }
                let b = self.basis[r];
                let limit = if delta > S::zero() {
                    if self.upper[b] == S::infinity() {
                        continue;
                    }
                    (self.upper[b] - self.xb[r]) / delta
                } else {
                    if self.lower[b] == S::neg_infinity() {
                        continue;
                    }
                    (self.lower[b] - self.xb[r]) / delta
                };
                let limit = limit.max(S::zero());
                if limit < theta - self.eps {
                    theta = limit;
                    block = Some(r);
                } else if (limit - theta).abs() <= self.eps {
                    if let Some(rb) = block {
                        let take = if bland {
                            self.basis[r] < self.basis[rb]
                        } else {
                            u.abs() > self.tab[rb][enter].abs()
                        };
                        if take {
                            theta = limit.min(theta);
                            block = Some(r);
                        }
                    }
                    // A tie against the bare bound-flip span keeps the flip:
                    // it is cheaper than a pivot.
                }
            }

            if theta == S::infinity() {
                return Ok(false);
            }
            if theta <= self.eps {
                degenerate_streak += 1;
            } else {
                degenerate_streak = 0;
            }

            match block {
                None => {
                    // Bound flip: entering variable crosses to its other bound.
                    for r in 0..self.m {
                        let u = self.tab[r][enter];
                        if u != S::zero() {
                            self.xb[r] -= sigma * theta * u;
                        }
                    }
                    self.val[enter] = if increase {
                        self.upper[enter]
                    } else {
                        self.lower[enter]
                    };
                }
                Some(r) => {
                    let new_val = self.val[enter] + sigma * theta;
                    let leave = self.basis[r];
                    let delta_leave = -sigma * self.tab[r][enter];
                    self.val[leave] = if delta_leave > S::zero() {
                        self.upper[leave]
                    } else {
                        self.lower[leave]
                    };
                    for rr in 0..self.m {
                        if rr != r {
                            let u = self.tab[rr][enter];
                            if u != S::zero() {
                                self.xb[rr] -= sigma * theta * u;
                            }
                        }
                    }
                    self.pivot(r, enter);
                    self.basis[r] = enter;
                    self.xb[r] = new_val;
                    is_basic[leave] = false;
                    is_basic[enter] = true;
                }
            }
        }
        Err(Error::Numerical("simplex iteration limit exceeded".into()))
    }

    fn choose_entering(&self, is_basic: &[bool], bland: bool) -> Option<(usize, bool)> {
        let mut best: Option<(usize, bool, S)> = None;
        for j in 0..self.ncols {
            if is_basic[j] || self.barred[j] {
                continue;
            }
            let d = self.dj[j];
            let candidate = if d > self.eps && self.nonbasic_can_increase(j) {
                Some((j, true, d))
            } else if d < -self.eps && self.nonbasic_can_decrease(j) {
                Some((j, false, -d))
            } else {
                None
            };
            if let Some(c) = candidate {
                if bland {
                    return Some((c.0, c.1));
                }
                match best {
                    Some((_, _, score)) if score >= c.2 => {}
                    _ => best = Some(c),
                }
            }
        }
        best.map(|(j, inc, _)| (j, inc))
    }

    /// Row-reduces the tableau and reduced costs around pivot `(r, e)`.
    fn pivot(&mut self, r: usize, e: usize) {
        let pe = self.tab[r][e];
        debug_assert!(pe.abs() > S::zero());
        let inv = S::one() / pe;
        for v in &mut self.tab[r] {
            *v *= inv;
        }
        let pivot_row = std::mem::take(&mut self.tab[r]);
        for (rr, row) in self.tab.iter_mut().enumerate() {
            if rr == r {
                continue;
            }
            let factor = row[e];
            if factor != S::zero() {
                for (v, &pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= factor * pv;
                }
                row[e] = S::zero();
            }
        }
        let factor = self.dj[e];
        if factor != S::zero() {
            for (v, &pv) in self.dj.iter_mut().zip(&pivot_row) {
                *v -= factor * pv;
            }
            self.dj[e] = S::zero();
        }
        self.tab[r] = pivot_row;
        self.tab[r][e] = S::one();
    }

    /// Recomputes reduced costs for objective `c` under the current basis.
    fn reset_costs(&mut self, c: &[S]) {
        // dj = c - c_B^T tab.
        self.dj = c.to_vec();
        for r in 0..self.m {
            let cb = c[self.basis[r]];
            if cb != S::zero() {
                for (d, &t) in self.dj.iter_mut().zip(&self.tab[r]) {
                    *d -= cb * t;
                }
            }
        }
    }
}

/// Solves the LP; see module docs for conventions.
pub fn solve<S: Scalar>(lp: &LinearProgram<S>) -> Result<LpOutcome<S>> {
    let nstruct = lp.objective.len();
    assert_eq!(lp.lower.len(), nstruct, "bounds length mismatch");
    assert_eq!(lp.upper.len(), nstruct, "bounds length mismatch");
    let m = lp.rows.len();
    let eps = S::from_f64_lossy(1e-9);

    for j in 0..nstruct {
        if lp.lower[j] > lp.upper[j] + eps {
            return Ok(LpOutcome::Infeasible);
        }
        if lp.lower[j] == S::neg_infinity() && lp.upper[j] == S::infinity() {
            return Err(Error::Numerical(format!(
                "variable {j} is free; every variable needs a finite bound"
            )));
        }
    }

    // Columns: structural, then one slack per row, then artificials.
    let ncols_base = nstruct + m;
    let mut lower = lp.lower.clone();
    let mut upper = lp.upper.clone();
    for (_, rel, _) in &lp.rows {
        match rel {
            Relation::Le => {
                lower.push(S::zero());
                upper.push(S::infinity());
            }
            Relation::Ge => {
                lower.push(S::neg_infinity());
                upper.push(S::zero());
            }
            Relation::Eq => {
                lower.push(S::zero());
                upper.push(S::zero());
            }
        }
    }

    // Nonbasic variables sit at a finite bound; prefer the one nearest zero.
    let start_val = |lo: S, up: S| -> S {
        if lo == S::neg_infinity() {
            up
        } else if up == S::infinity() {
            lo
        } else if lo.abs() <= up.abs() {
            lo
        } else {
            up
        }
    };
    let mut val: Vec<S> = (0..ncols_base)
        .map(|j| start_val(lower[j], upper[j]))
        .collect();

    // Residuals decide which rows need artificials.
    let mut tab: Vec<Vec<S>> = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut xb = Vec::with_capacity(m);
    let mut artificials = Vec::new();
    for (r, (terms, _rel, rhs)) in lp.rows.iter().enumerate() {
        let mut row = vec![S::zero(); ncols_base];
        for &(j, a) in terms {
            assert!(j < nstruct, "row term references unknown variable");
            row[j] += a;
        }
        row[nstruct + r] = S::one();
        let slack = nstruct + r;
        let mut resid = *rhs;
        for (j, &a) in row.iter().enumerate() {
            if j != slack && a != S::zero() {
                resid -= a * val[j];
            }
        }
        // Basic slack if the implied value fits its bounds; otherwise pin
        // the slack and absorb the residual into an artificial.
        if resid >= lower[slack] - eps && resid <= upper[slack] + eps {
            basis.push(slack);
            xb.push(resid.max(lower[slack]).min(upper[slack]));
        } else {
            let pinned = if resid < lower[slack] {
                lower[slack]
            } else {
                upper[slack]
            };
            val[slack] = pinned;
            let leftover = resid - pinned;
            artificials.push((r, leftover));
            basis.push(usize::MAX); // patched below once columns exist
            xb.push(leftover.abs());
        }
        tab.push(row);
    }

    let nart = artificials.len();
    let ncols = ncols_base + nart;
    for row in &mut tab {
        row.resize(ncols, S::zero());
    }
    val.resize(ncols, S::zero());
    for (a, &(r, leftover)) in artificials.iter().enumerate() {
        let col = ncols_base + a;
        let sign = if leftover >= S::zero() { S::one() } else { -S::one() };
        tab[r][col] = sign;
        // Normalize the row so the basis column is +1.
        if sign < S::zero() {
            for v in &mut tab[r] {
                *v = -*v;
            }
            tab[r][col] = S::one();
        }
        lower.push(S::zero());
        upper.push(S::infinity());
        basis[r] = col;
    }

    let mut t = Tableau {
        m,
        ncols,

        tab,
        xb,
        basis,
        val,
        lower,
        upper,
        dj: vec![S::zero(); ncols],
        barred: vec![false; ncols],
        eps,
    };
    let mut is_basic = vec![false; ncols];
    for &b in &t.basis {
        is_basic[b] = true;
    }

    // Phase 1: maximize minus the sum of artificials.
    if nart > 0 {
        let mut c1 = vec![S::zero(); ncols];
        for j in ncols_base..ncols {
            c1[j] = -S::one();
        }
        t.reset_costs(&c1);
        if !t.optimize(&mut is_basic)? {
            return Err(Error::Numerical("phase-1 problem reported unbounded".into()));
        }
        let infeas: S = (0..t.m)
            .filter(|&r| t.basis[r] >= ncols_base)
            .map(|r| t.xb[r])
            .sum::<S>()
            + (ncols_base..ncols)
                .filter(|&j| !is_basic[j])
                .map(|j| t.val[j])
                .sum::<S>();
        if infeas > S::from_f64_lossy(1e-7) {
            return Ok(LpOutcome::Infeasible);
        }
        // Drive lingering zero-valued artificials out of the basis when a
        // usable pivot exists; otherwise the row is redundant and the
        // artificial stays pinned at zero.
        for r in 0..t.m {
            if t.basis[r] < ncols_base {
                continue;
            }
            let pivot_col = (0..ncols_base)
                .find(|&j| !is_basic[j] && !t.barred[j] && t.tab[r][j].abs() > S::from_f64_lossy(1e-7));
            if let Some(j) = pivot_col {
                let leave = t.basis[r];
                let pinned = t.val[j];
                t.pivot(r, j);
                t.basis[r] = j;
                t.xb[r] = pinned;
                is_basic[leave] = false;
                is_basic[j] = true;
                t.val[leave] = S::zero();
            }
        }
        // Pin every artificial to zero so phase 2 can neither enter them
        // nor let a redundant-row artificial drift off zero.
        for j in ncols_base..ncols {
            t.barred[j] = true;
            t.val[j] = S::zero();
            t.upper[j] = S::zero();
        }
    }

    // Phase 2 on the real objective.
    let mut c2 = vec![S::zero(); ncols];
    c2[..nstruct].copy_from_slice(&lp.objective);
    t.reset_costs(&c2);
    if !t.optimize(&mut is_basic)? {
        return Err(Error::Numerical(
            "LP reported unbounded; callers must box every variable".into(),
        ));
    }

    let mut x = vec![S::zero(); nstruct];
    for j in 0..nstruct {
        x[j] = if is_basic[j] { S::zero() } else { t.val[j] };
    }
    for r in 0..t.m {
        if t.basis[r] < nstruct {
            x[t.basis[r]] = t.xb[r];
        }
    }
    // Clamp round-off straddle.
    for j in 0..nstruct {
        x[j] = x[j].max(lp.lower[j]).min(lp.upper[j]);
    }
    let objective = x
        .iter()
        .zip(&lp.objective)
        .map(|(&xi, &ci)| xi * ci)
        .sum();
    Ok(LpOutcome::Optimal { objective, x })
}

/// Total ordering adapter so callers can sort/heap by objective values.
pub fn cmp_scalar<S: Scalar>(a: S, b: S) -> Ordering {
    a.partial_cmp(&b).unwrap_or(Ordering::Equal)
}
