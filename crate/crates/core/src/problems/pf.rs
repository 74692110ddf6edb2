//! Bootstrap particle filter with systematic resampling, and the
//! Fisher-identity score estimate from its ancestral paths.

use nalgebra::DVector;
use rand::{Rng, RngCore};

use crate::error::{Error, Result};

/// Scalar-state model as seen by the particle filter. Time indices are
/// 1-based: `sample_transition(x, t)` draws `x_{t+1} | x_t = x`.
pub trait StateSpaceModel {
    fn sample_initial(&self, rng: &mut dyn RngCore) -> f64;

    fn sample_transition(&self, x: f64, t: usize, rng: &mut dyn RngCore) -> f64;

    fn log_observation(&self, x: f64, y: f64, t: usize) -> f64;

    /// Length of the parameter score vector.
    fn score_dim(&self) -> usize;

    /// Adds `∇θ log p(x_{t+1} = x_next | x_t = x_prev)` into `out`.
    fn transition_score(&self, x_prev: f64, x_next: f64, t: usize, out: &mut [f64]);

    /// Adds `∇θ log p(y_t | x_t)` into `out`; zero when the observation
    /// density does not depend on the parameters.
    fn observation_score(&self, _x: f64, _y: f64, _t: usize, _out: &mut [f64]) {}
}

/// Particle history of one filter run.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSystem {
    /// `particles[t][i]`: particle `i` at time `t + 1`.
    pub particles: Vec<Vec<f64>>,
    /// Unnormalised log-weights at the final time.
    pub log_weights: Vec<f64>,
    /// `ancestors[t][i]`: index at time `t + 1` of the parent of particle `i`
    /// at time `t + 2`.
    pub ancestors: Vec<Vec<usize>>,
}

impl ParticleSystem {
    pub fn num_particles(&self) -> usize {
        self.log_weights.len()
    }

    /// Normalised final weights.
    pub fn weights(&self) -> Vec<f64> {
        normalize(&self.log_weights).0
    }

    /// Reconstructs the ancestral state path ending in final particle `i`.
    pub fn path(&self, i: usize) -> Vec<f64> {
        let n = self.particles.len();
        let mut out = vec![0.0; n];
        let mut idx = i;
        for t in (0..n).rev() {
            out[t] = self.particles[t][idx];
            if t > 0 {
                idx = self.ancestors[t - 1][idx];
            }
        }
        out
    }
}

/// Normalised weights and `log(mean(exp(log_w)))`, with the max-shift guard.
fn normalize(log_w: &[f64]) -> (Vec<f64>, f64) {
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = log_w.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = w.iter().sum();
    let lme = max + (sum / log_w.len() as f64).ln();
    (w.into_iter().map(|v| v / sum).collect(), lme)
}

/// Systematic resampling: one uniform, `M` evenly spaced pointers.
fn systematic_resample(weights: &[f64], rng: &mut dyn RngCore, out: &mut Vec<usize>) {
    let m = weights.len();
    out.clear();
    let u0: f64 = rng.random::<f64>() / m as f64;
    let mut cum = weights[0];
    let mut j = 0;
    for i in 0..m {
        let u = u0 + i as f64 / m as f64;
        while u > cum && j + 1 < m {
            j += 1;
            cum += weights[j];
        }
        out.push(j);
    }
}

/// Runs the bootstrap filter on `y` with `m` particles and returns the
/// log-likelihood estimate together with the stored particle history.
pub fn bootstrap_pf<S: StateSpaceModel + ?Sized>(
    model: &S,
    y: &[f64],
    m: usize,
    rng: &mut dyn RngCore,
) -> Result<(f64, ParticleSystem)> {
    if m < 2 {
        return Err(Error::InvalidArgument(
            "particle filter needs at least two particles".into(),
        ));
    }
    if y.is_empty() {
        return Err(Error::InvalidArgument("no observations".into()));
    }
    let n = y.len();
    let mut particles: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut ancestors: Vec<Vec<usize>> = Vec::with_capacity(n.saturating_sub(1));
    let mut current: Vec<f64> = (0..m).map(|_| model.sample_initial(rng)).collect();
    let mut log_w = vec![0.0; m];
    let mut loglik = 0.0;
    let mut idx = Vec::with_capacity(m);
    for t in 1..=n {
        if t > 1 {
            let (w, _) = normalize(&log_w);
            systematic_resample(&w, rng, &mut idx);
            let prev = particles.last().expect("previous particles");
            current = idx
                .iter()
                .map(|&a| model.sample_transition(prev[a], t - 1, rng))
                .collect();
            ancestors.push(idx.clone());
        }
        for (lw, &x) in log_w.iter_mut().zip(&current) {
            *lw = model.log_observation(x, y[t - 1], t);
        }
        let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(Error::Degeneracy { t });
        }
        let (_, lme) = normalize(&log_w);
        loglik += lme;
        particles.push(std::mem::take(&mut current));
    }
    Ok((
        loglik,
        ParticleSystem {
            particles,
            log_weights: log_w,
            ancestors,
        },
    ))
}

/// Fisher-identity score: the final-weighted average over ancestral paths
/// of the complete-data score `Σ_t ∇θ log p(x_{t+1} | x_t) + Σ_t ∇θ log p(y_t | x_t)`.
pub fn path_score<S: StateSpaceModel + ?Sized>(
    model: &S,
    system: &ParticleSystem,
    y: &[f64],
) -> DVector<f64> {
    let d = model.score_dim();
    let n = system.particles.len();
    let weights = system.weights();
    let mut total = vec![0.0; d];
    let mut path_score = vec![0.0; d];
    for (i, &w) in weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        path_score.iter_mut().for_each(|v| *v = 0.0);
        let mut idx = i;
        for t in (0..n).rev() {
            let x = system.particles[t][idx];
            model.observation_score(x, y[t], t + 1, &mut path_score);
            if t > 0 {
                let parent = system.ancestors[t - 1][idx];
                model.transition_score(system.particles[t - 1][parent], x, t, &mut path_score);
                idx = parent;
            }
        }
        for (acc, v) in total.iter_mut().zip(&path_score) {
            *acc += w * v;
        }
    }
    DVector::from_vec(total)
}

/// Log-likelihood estimate and Fisher-identity score from one filter run.
pub fn loglik_and_score<S: StateSpaceModel + ?Sized>(
    model: &S,
    y: &[f64],
    m: usize,
    rng: &mut dyn RngCore,
) -> Result<(f64, DVector<f64>)> {
    let (ll, system) = bootstrap_pf(model, y, m, rng)?;
    Ok((ll, path_score(model, &system, y)))
}

/// Fisher-identity gradient estimate of the log-likelihood.
pub fn fisher_gradient<S: StateSpaceModel + ?Sized>(
    model: &S,
    y: &[f64],
    m: usize,
    rng: &mut dyn RngCore,
) -> Result<DVector<f64>> {
    loglik_and_score(model, y, m, rng).map(|(_, g)| g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn systematic_resampling_is_proportional() {
        let w = [0.1, 0.2, 0.3, 0.4];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut idx = Vec::new();
        let mut counts = [0usize; 4];
        for _ in 0..1000 {
            systematic_resample(&w, &mut rng, &mut idx);
            assert_eq!(idx.len(), 4);
            for &i in &idx {
                counts[i] += 1;
            }
        }
        for (c, wi) in counts.iter().zip(w) {
            assert!(((*c as f64) / 4000.0 - wi).abs() < 0.02);
        }
    }

    #[test]
    fn normalize_guards_against_underflow() {
        let (w, lme) = normalize(&[-1000.0, -1000.0]);
        assert_eq!(w, vec![0.5, 0.5]);
        assert!((lme + 1000.0).abs() < 1e-12);
    }
}
