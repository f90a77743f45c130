//! Ground-truth reward environment: additive group/count rewards, the
//! non-additive variant used for misspecification studies, Gaussian noise,
//! and the random parameter generator from the simulation protocol.
//!
//! The expected reward of node `i` under treatment `z` is
//! `z_i * mu[group(i)] + gamma[min(d1_i, C)]` where `d1_i` counts treated
//! neighbors and `C` is the pooling cutoff: indirect effects with `C` or
//! more treated neighbors share one table entry.

use rand::Rng;

use crate::error::{Error, Result};
use crate::netgen::{treated_neighbor_counts, Graph};
use crate::scalar::Scalar;

/// Parameter vector of the additive reward model: per-group direct effects
/// and the pooled indirect-effect table (`gamma.len() == cutoff + 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct Theta<S> {
    mu: Vec<S>,
    gamma: Vec<S>,
}

impl<S: Scalar> Theta<S> {
    pub fn new(mu: Vec<S>, gamma: Vec<S>) -> Result<Self> {
        if mu.is_empty() {
            return Err(Error::Config("theta needs at least one group effect".into()));
        }
        if gamma.is_empty() {
            return Err(Error::Config("theta needs gamma entries for counts 0..=cutoff".into()));
        }
        if mu.iter().chain(&gamma).any(|v| !v.is_finite()) {
            return Err(Error::Config("theta entries must be finite".into()));
        }
        Ok(Self { mu, gamma })
    }

    pub fn k(&self) -> usize {
        self.mu.len()
    }

    pub fn cutoff(&self) -> usize {
        self.gamma.len() - 1
    }

    /// Total parameter dimension `k + cutoff + 1`.
    pub fn dim(&self) -> usize {
        self.mu.len() + self.gamma.len()
    }

    pub fn mu(&self) -> &[S] {
        &self.mu
    }

    pub fn gamma(&self) -> &[S] {
        &self.gamma
    }

    /// Indirect effect for a raw treated-neighbor count, pooled at the cutoff.
    pub fn gamma_at(&self, count: usize) -> S {
        self.gamma[count.min(self.cutoff())]
    }

    pub fn direct(&self, group: usize) -> S {
        self.mu[group]
    }

    /// Flattens to `[mu_0..mu_{k-1}, gamma_0..gamma_C]`, the column order
    /// every design-matrix consumer indexes by.
    pub fn to_vec(&self) -> Vec<S> {
        let mut v = Vec::with_capacity(self.dim());
        v.extend_from_slice(&self.mu);
        v.extend_from_slice(&self.gamma);
        v
    }

    /// Inverse of [`Theta::to_vec`] for a given `(k, cutoff)` split.
    pub fn from_vec(k: usize, cutoff: usize, v: &[S]) -> Result<Self> {
        if v.len() != k + cutoff + 1 {
            return Err(Error::Contract(format!(
                "parameter vector has length {}, expected {}",
                v.len(),
                k + cutoff + 1
            )));
        }
        Self::new(v[..k].to_vec(), v[k..].to_vec())
    }

    pub fn scaled(&self, c: S) -> Self {
        Self {
            mu: self.mu.iter().map(|&x| x * c).collect(),
            gamma: self.gamma.iter().map(|&x| x * c).collect(),
        }
    }
}

/// Parameters of the non-additive reward variant: treated nodes read
/// indirect effects from `gamma1`, untreated nodes from `gamma0`.
#[derive(Debug, Clone, PartialEq)]
pub struct MisspecTheta<S> {
    mu: Vec<S>,
    gamma0: Vec<S>,
    gamma1: Vec<S>,
}

impl<S: Scalar> MisspecTheta<S> {
    pub fn new(mu: Vec<S>, gamma0: Vec<S>, gamma1: Vec<S>) -> Result<Self> {
        if mu.is_empty() || gamma0.is_empty() {
            return Err(Error::Config("misspecified theta needs mu and gamma tables".into()));
        }
        if gamma0.len() != gamma1.len() {
            return Err(Error::Config(format!(
                "gamma tables must share one cutoff: lengths {} vs {}",
                gamma0.len(),
                gamma1.len()
            )));
        }
        if mu.iter().chain(&gamma0).chain(&gamma1).any(|v| !v.is_finite()) {
            return Err(Error::Config("theta entries must be finite".into()));
        }
        Ok(Self { mu, gamma0, gamma1 })
    }

    pub fn k(&self) -> usize {
        self.mu.len()
    }

    pub fn cutoff(&self) -> usize {
        self.gamma0.len() - 1
    }

    pub fn mu(&self) -> &[S] {
        &self.mu
    }

    pub fn gamma0(&self) -> &[S] {
        &self.gamma0
    }

    pub fn gamma1(&self) -> &[S] {
        &self.gamma1
    }
}

/// Additive Gaussian reward noise with standard deviation `sigma`.
#[derive(Debug, Clone, Copy)]
pub struct NoiseSpec<S> {
    sigma: S,
}

impl<S: Scalar> NoiseSpec<S> {
    pub fn new(sigma: S) -> Result<Self> {
        if sigma < S::zero() || !sigma.is_finite() {
            return Err(Error::Config(format!("noise sigma must be >= 0, got {sigma}")));
        }
        Ok(Self { sigma })
    }

    pub fn sigma(&self) -> S {
        self.sigma
    }
}

/// Random parameter generator from the simulation protocol:
/// `mu_j ~ N(2, 1)` and `gamma(d) ~ N(d, 1)` independently per entry.
/// The misspecified variant replaces the treated table by
/// `gamma1(d) ~ N(d/2, 1)`.
#[derive(Debug, Clone, Copy)]
pub struct ThetaGenSpec {
    pub k: usize,
    pub cutoff: usize,
}

impl ThetaGenSpec {
    pub fn new(k: usize, cutoff: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Config("theta generator needs k >= 1".into()));
        }
        Ok(Self { k, cutoff })
    }

    /// Parameter dimension of the generated additive model.
    pub fn dim(&self) -> usize {
        self.k + self.cutoff + 1
    }
}

const DIRECT_EFFECT_MEAN: f64 = 2.0;

/// Draws an additive parameter vector; `mu` entries first, then `gamma`
/// entries in count order, so a seed pins the whole vector.
pub fn sample_theta<S: Scalar, R: Rng + ?Sized>(spec: &ThetaGenSpec, rng: &mut R) -> Theta<S> {
    let mu = (0..spec.k)
        .map(|_| S::standard_normal(rng) + S::from_f64_lossy(DIRECT_EFFECT_MEAN))
        .collect();
    let gamma = (0..=spec.cutoff)
        .map(|d| S::standard_normal(rng) + S::from_usize_lossy(d))
        .collect();
    Theta { mu, gamma }
}

/// Draws a non-additive parameter set (`gamma1` centered at `d/2`).
pub fn sample_misspec_theta<S: Scalar, R: Rng + ?Sized>(
    spec: &ThetaGenSpec,
    rng: &mut R,
) -> MisspecTheta<S> {
    let mu = (0..spec.k)
        .map(|_| S::standard_normal(rng) + S::from_f64_lossy(DIRECT_EFFECT_MEAN))
        .collect();
    let gamma0 = (0..=spec.cutoff)
        .map(|d| S::standard_normal(rng) + S::from_usize_lossy(d))
        .collect();
    let gamma1 = (0..=spec.cutoff)
        .map(|d| S::standard_normal(rng) + S::from_usize_lossy(d) / S::from_f64_lossy(2.0))
        .collect();
    MisspecTheta { mu, gamma0, gamma1 }
}

fn check_labels<S: Scalar>(g: &Graph, k: usize) -> Result<()> {
    if let Some(&bad) = g.groups().iter().find(|&&label| label >= k) {
        return Err(Error::Contract(format!(
            "group label {bad} out of range for k = {k}"
        )));
    }
    Ok(())
}

/// Noiseless expected rewards of every node under the additive model.
pub fn expected_rewards<S: Scalar>(g: &Graph, z: &[bool], theta: &Theta<S>) -> Result<Vec<S>> {
    check_labels::<S>(g, theta.k())?;
    let counts = treated_neighbor_counts(g, z)?;
    Ok((0..g.n())
        .map(|i| {
            let direct = if z[i] { theta.direct(g.group_of(i)) } else { S::zero() };
            direct + theta.gamma_at(counts[i])
        })
        .collect())
}

/// Noiseless expected rewards under the non-additive variant:
/// `z_i * (mu[g(i)] + gamma1[min(d1_i, C)]) + (1 - z_i) * gamma0[min(d1_i, C)]`.
pub fn expected_rewards_misspec<S: Scalar>(
    g: &Graph,
    z: &[bool],
    mtheta: &MisspecTheta<S>,
) -> Result<Vec<S>> {
    check_labels::<S>(g, mtheta.k())?;
    let counts = treated_neighbor_counts(g, z)?;
    let cutoff = mtheta.cutoff();
    Ok((0..g.n())
        .map(|i| {
            let pooled = counts[i].min(cutoff);
            if z[i] {
                mtheta.mu[g.group_of(i)] + mtheta.gamma1[pooled]
            } else {
                mtheta.gamma0[pooled]
            }
        })
        .collect())
}

/// Adds independent `N(0, sigma^2)` noise entrywise.
pub fn realize_rewards<S: Scalar, R: Rng + ?Sized>(
    expected: &[S],
    noise: &NoiseSpec<S>,
    rng: &mut R,
) -> Vec<S> {
    expected
        .iter()
        .map(|&m| m + noise.sigma * S::standard_normal(rng))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgen::Graph;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn path3(groups: Vec<usize>) -> Graph {
        Graph::from_edges(3, &[(0, 1), (1, 2)], groups).unwrap()
    }

    #[test]
    fn generator_shapes_and_moments() {
        let spec = ThetaGenSpec::new(1, 0).unwrap();
        let theta: Theta<f64> = sample_theta(&spec, &mut rng(0));
        assert_eq!(theta.dim(), 2);

        let spec15 = ThetaGenSpec::new(3, 15).unwrap();
        let theta15: Theta<f64> = sample_theta(&spec15, &mut rng(0));
        assert_eq!(theta15.gamma().len(), 16);

        // Monte Carlo moments over 10^4 seeds: mu ~ N(2,1), gamma(0) ~ N(0,1).
        let mut r = rng(42);
        let reps = 10_000usize;
        let mut mu_sum = 0.0;
        let mut mu_sq = 0.0;
        let mut g0_sum = 0.0;
        for _ in 0..reps {
            let t: Theta<f64> = sample_theta(&spec, &mut r);
            mu_sum += t.mu()[0];
            mu_sq += t.mu()[0] * t.mu()[0];
            g0_sum += t.gamma()[0];
        }
        let mu_mean = mu_sum / reps as f64;
        let mu_var = mu_sq / reps as f64 - mu_mean * mu_mean;
        let g0_mean = g0_sum / reps as f64;
        let se = 1.0 / (reps as f64).sqrt();
        assert!((mu_mean - 2.0).abs() < 3.0 * se, "mu mean {mu_mean}");
        assert!((g0_mean - 0.0).abs() < 3.0 * se, "gamma0 mean {g0_mean}");
        assert!((mu_var - 1.0).abs() < 0.05, "mu variance {mu_var}");
    }

    #[test]
    fn expected_rewards_hand_examples() {
        let theta = Theta::new(vec![2.0f64], vec![0.0, 1.0, 3.0]).unwrap();
        let g = path3(vec![0, 0, 0]);

        let all_zero = expected_rewards(&g, &[false, false, false], &theta).unwrap();
        assert_eq!(all_zero, vec![0.0, 0.0, 0.0]);

        let r = expected_rewards(&g, &[true, false, true], &theta).unwrap();
        assert_eq!(r, vec![2.0, 3.0, 2.0]);

        // Star with center 0 and four leaves, leaves treated: the center's
        // count 4 pools down to the cutoff entry.
        let star = Graph::from_edges(5, &[(0, 1), (0, 2), (0, 3), (0, 4)], vec![0; 5]).unwrap();
        let theta_star = Theta::new(vec![2.0f64], vec![0.5, 1.0, 7.0]).unwrap();
        let r = expected_rewards(&star, &[false, true, true, true, true], &theta_star).unwrap();
        assert_eq!(r[0], 7.0);
    }

    #[test]
    fn expected_rewards_rejects_bad_labels() {
        let theta = Theta::new(vec![2.0f64], vec![0.0]).unwrap();
        let g = path3(vec![0, 1, 0]);
        assert!(expected_rewards(&g, &[false; 3], &theta).is_err());
    }

    #[test]
    fn misspec_hand_examples() {
        let mtheta =
            MisspecTheta::new(vec![2.0f64], vec![0.0, 5.0], vec![0.0, 1.0]).unwrap();
        let k2 = Graph::from_edges(2, &[(0, 1)], vec![0, 0]).unwrap();

        let untreated = expected_rewards_misspec(&k2, &[false, false], &mtheta).unwrap();
        assert_eq!(untreated, vec![0.0, 0.0]);

        let both = expected_rewards_misspec(&k2, &[true, true], &mtheta).unwrap();
        assert_eq!(both, vec![3.0, 3.0]);

        // gamma1 identically zero: treated nodes see direct effects only.
        let degenerate =
            MisspecTheta::new(vec![2.0f64], vec![0.0, 5.0], vec![0.0, 0.0]).unwrap();
        let r = expected_rewards_misspec(&k2, &[true, true], &degenerate).unwrap();
        assert_eq!(r, vec![2.0, 2.0]);
    }

    #[test]
    fn misspec_violates_additivity_when_tables_differ() {
        // Additivity would force r_i(z) - r_i(z with z_i = 0) to be
        // independent of the neighbors' treatments; with gamma1 != gamma0
        // the difference shifts with the treated-neighbor count.
        let mtheta =
            MisspecTheta::new(vec![2.0f64], vec![0.0, 5.0], vec![0.0, 1.0]).unwrap();
        let k2 = Graph::from_edges(2, &[(0, 1)], vec![0, 0]).unwrap();
        let with_nbr = expected_rewards_misspec(&k2, &[true, true], &mtheta).unwrap()[0]
            - expected_rewards_misspec(&k2, &[false, true], &mtheta).unwrap()[0];
        let without_nbr = expected_rewards_misspec(&k2, &[true, false], &mtheta).unwrap()[0]
            - expected_rewards_misspec(&k2, &[false, false], &mtheta).unwrap()[0];
        assert!((with_nbr - without_nbr).abs() > 1.0);
    }

    #[test]
    fn realize_rewards_zero_sigma_is_identity() {
        let noise = NoiseSpec::new(0.0f64).unwrap();
        let expected = vec![1.0, -2.0, 0.5];
        let realized = realize_rewards(&expected, &noise, &mut rng(0));
        assert_eq!(realized, expected);
    }

    #[test]
    fn realize_rewards_noise_moments_and_independence() {
        let noise = NoiseSpec::new(1.0f64).unwrap();
        let n = 100_000usize;
        let expected = vec![0.0f64; n];
        let realized = realize_rewards(&expected, &noise, &mut rng(8));
        let mean = realized.iter().sum::<f64>() / n as f64;
        let var = realized.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.02, "noise mean {mean}");
        assert!((var.sqrt() - 1.0).abs() < 0.02, "noise sd {}", var.sqrt());

        // Correlation between two fixed entries over repeated draws.
        let mut r = rng(9);
        let draws = 10_000usize;
        let (mut sx, mut sy, mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for _ in 0..draws {
            let v = realize_rewards(&[0.0, 0.0], &noise, &mut r);
            sx += v[0];
            sy += v[1];
            sxy += v[0] * v[1];
            sxx += v[0] * v[0];
            syy += v[1] * v[1];
        }
        let m = draws as f64;
        let cov = sxy / m - (sx / m) * (sy / m);
        let corr = cov / ((sxx / m - (sx / m).powi(2)) * (syy / m - (sy / m).powi(2))).sqrt();
        assert!(corr.abs() < 0.05, "cross-entry correlation {corr}");
    }

    #[test]
    fn sania_properties_on_random_instances() {
        use proptest::prelude::*;
        let mut runner = proptest::test_runner::TestRunner::default();
        runner
            .run(
                &(2usize..10, any::<u64>(), proptest::collection::vec(any::<bool>(), 10)),
                |(n, seed, zbits)| {
                    let mut r = rng(seed);
                    let params = crate::netgen::SbmParams::two_level(2, 0.6f64, 0.3).unwrap();
                    let g = crate::netgen::sample_sbm(&params, n, &mut r).unwrap();
                    let spec = ThetaGenSpec::new(2, 3).unwrap();
                    let theta: Theta<f64> = sample_theta(&spec, &mut r);
                    let z: Vec<bool> = (0..n).map(|i| zbits[i % zbits.len()]).collect();
                    let base = expected_rewards(&g, &z, &theta).unwrap();

                    for i in 0..n {
                        // Additivity: toggling z_i shifts entry i by exactly the
                        // direct effect, whatever the neighbors do.
                        let mut z_off = z.clone();
                        z_off[i] = false;
                        let off = expected_rewards(&g, &z_off, &theta).unwrap();
                        let direct = if z[i] { theta.direct(g.group_of(i)) } else { 0.0 };
                        prop_assert!((base[i] - off[i] - direct).abs() < 1e-12);

                        // Neighborhood interference: flipping a non-neighbor
                        // never moves entry i.
                        for j in 0..n {
                            if j != i && !g.has_edge(i, j) {
                                let mut z2 = z.clone();
                                z2[j] = !z2[j];
                                let r2 = expected_rewards(&g, &z2, &theta).unwrap();
                                prop_assert_eq!(r2[i], base[i]);
                            }
                        }

                        // Symmetry: swapping a treated neighbor for an
                        // untreated one keeps the count and hence entry i.
                        let nbrs = g.neighbors(i);
                        let treated = nbrs.iter().find(|&&j| z[j]);
                        let untreated = nbrs.iter().find(|&&j| !z[j]);
                        if let (Some(&a), Some(&b)) = (treated, untreated) {
                            let mut z2 = z.clone();
                            z2[a] = false;
                            z2[b] = true;
                            let r2 = expected_rewards(&g, &z2, &theta).unwrap();
                            prop_assert_eq!(r2[i], base[i]);
                        }
                    }
                    Ok(())
                },
            )
            .unwrap();
    }

    #[test]
    fn pooling_depends_only_on_cutoff() {
        // Stars of increasing size with all leaves treated: center reward is
        // constant once the count passes the cutoff.
        let theta = Theta::new(vec![1.0f64], vec![0.0, 2.0, 5.0]).unwrap();
        let mut seen = Vec::new();
        for leaves in 2..6 {
            let edges: Vec<(usize, usize)> = (1..=leaves).map(|j| (0, j)).collect();
            let g = Graph::from_edges(leaves + 1, &edges, vec![0; leaves + 1]).unwrap();
            let mut z = vec![true; leaves + 1];
            z[0] = false;
            let r = expected_rewards(&g, &z, &theta).unwrap();
            seen.push(r[0]);
        }
        assert!(seen.iter().all(|&v| v == 5.0));
    }
}
