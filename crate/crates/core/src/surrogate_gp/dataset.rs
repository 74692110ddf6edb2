//! Global GP surrogate over cost and gradient observations.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::gp_core::{jittered_cholesky, unvech, SeJet, SeKernelParams, VechIndex};

pub const DEFAULT_CAPACITY: usize = 200;
/// Points with the lowest observed costs that eviction never removes.
pub const ELITE_COUNT: usize = 5;
/// Two points closer than this (Euclidean) are considered duplicates.
pub const DUPLICATE_TOL: f64 = 1e-10;

/// Posterior mean of `(f, ∇f, ∇²f)` at a query point, plus the cost variance.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogatePrediction {
    pub f_mean: f64,
    pub g_mean: DVector<f64>,
    pub h_mean: DMatrix<f64>,
    pub f_var: f64,
}

/// Lower Cholesky factor of `K + jitter·I` and the weights `(K + jitter·I)⁻¹ y`.
#[derive(Debug, Clone)]
struct Factor {
    l: DMatrix<f64>,
    jitter: f64,
    alpha: DVector<f64>,
}

/// Noisy `(f̂, ĝ)` observations with a zero-mean SE prior.
///
/// Each point contributes a block of `1 + n` rows to the Gram matrix, ordered
/// as the cost followed by the gradient. The Cholesky factor is kept current:
/// insertions append a block, evictions apply rank-one updates.
#[derive(Debug, Clone)]
pub struct SurrogateDataset {
    kernel: SeKernelParams,
    cost_var: f64,
    grad_cov: DMatrix<f64>,
    capacity: usize,
    points: Vec<DVector<f64>>,
    costs: Vec<f64>,
    grads: Vec<DVector<f64>>,
    factor: Option<Factor>,
}

impl SurrogateDataset {
    pub fn new(
        kernel: SeKernelParams,
        cost_var: f64,
        grad_cov: DMatrix<f64>,
        capacity: usize,
    ) -> Result<Self> {
        let n = kernel.dim();
        if !(cost_var >= 0.0) || !cost_var.is_finite() {
            return Err(Error::InvalidArgument(
                "cost noise variance must be finite and >= 0".into(),
            ));
        }
        if grad_cov.shape() != (n, n) || grad_cov.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "gradient noise covariance must be a finite {n}x{n} matrix"
            )));
        }
        if !crate::gp_core::is_symmetric_psd(&grad_cov) {
            return Err(Error::InvalidArgument(
                "gradient noise covariance must be PSD".into(),
            ));
        }
        if capacity <= ELITE_COUNT {
            return Err(Error::InvalidArgument(format!(
                "capacity must exceed the {ELITE_COUNT} protected points"
            )));
        }
        Ok(Self {
            kernel,
            cost_var,
            grad_cov,
            capacity,
            points: Vec::new(),
            costs: Vec::new(),
            grads: Vec::new(),
            factor: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.kernel.dim()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn kernel(&self) -> &SeKernelParams {
        &self.kernel
    }

    pub fn cost_var(&self) -> f64 {
        self.cost_var
    }

    pub fn grad_cov(&self) -> &DMatrix<f64> {
        &self.grad_cov
    }

    /// Points in insertion order (oldest first).
    pub fn points(&self) -> &[DVector<f64>] {
        &self.points
    }

    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    pub fn grads(&self) -> &[DVector<f64>] {
        &self.grads
    }

    /// Diagonal jitter currently added to the Gram matrix.
    pub fn jitter(&self) -> f64 {
        self.factor.as_ref().map_or(0.0, |f| f.jitter)
    }

    /// Index of an existing point within [`DUPLICATE_TOL`] of `x`.
    pub fn find_duplicate(&self, x: &DVector<f64>) -> Option<usize> {
        self.points
            .iter()
            .position(|p| (p - x).norm() <= DUPLICATE_TOL)
    }

    /// Adds one observation, evicting the oldest non-elite point when the
    /// capacity is exceeded.
    ///
    /// On error the dataset is left unchanged.
    pub fn add_observation(
        &mut self,
        x: &DVector<f64>,
        f_hat: f64,
        g_hat: &DVector<f64>,
    ) -> Result<()> {
        let n = self.dim();
        if x.len() != n || g_hat.len() != n {
            return Err(Error::InvalidArgument(format!(
                "observation must have dimension {n}"
            )));
        }
        if x.iter().chain(g_hat.iter()).any(|v| !v.is_finite()) || !f_hat.is_finite() {
            return Err(Error::InvalidArgument("observation must be finite".into()));
        }
        if let Some(index) = self.find_duplicate(x) {
            return Err(Error::DuplicatePoint {
                index,
                tol: DUPLICATE_TOL,
            });
        }

        let factor = self.appended_factor(x)?;
        self.points.push(x.clone());
        self.costs.push(f_hat);
        self.grads.push(g_hat.clone());
        self.factor = Some(factor);

        if self.points.len() > self.capacity {
            let victim = self.eviction_candidate();
            self.remove(victim);
        }
        self.refresh_alpha();
        Ok(())
    }

    /// The point [`add_observation`](Self::add_observation) would evict next:
    /// the oldest one not among the [`ELITE_COUNT`] lowest costs.
    fn eviction_candidate(&self) -> usize {
        let mut order: Vec<usize> = (0..self.costs.len()).collect();
        order.sort_by(|&a, &b| self.costs[a].total_cmp(&self.costs[b]).then(a.cmp(&b)));
        let elite = &order[..ELITE_COUNT.min(order.len())];
        (0..self.costs.len())
            .find(|i| !elite.contains(i))
            .expect("capacity exceeds the elite count")
    }

    fn block_len(&self) -> usize {
        1 + self.dim()
    }

    /// Prior covariance between the observation blocks at `xi` and `xj`.
    fn prior_block(&self, xi: &DVector<f64>, xj: &DVector<f64>) -> DMatrix<f64> {
        let n = self.dim();
        let jet = SeJet::new(xi, xj, &self.kernel);
        let mut b = DMatrix::zeros(1 + n, 1 + n);
        b[(0, 0)] = jet.k;
        let vg = jet.value_grad();
        b.view_mut((0, 1), (1, n)).copy_from(&vg.transpose());
        b.view_mut((1, 0), (n, 1)).copy_from(&jet.grad_value());
        b.view_mut((1, 1), (n, n)).copy_from(&jet.grad_grad());
        b
    }

    fn noise_block(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut b = DMatrix::zeros(1 + n, 1 + n);
        b[(0, 0)] = self.cost_var;
        b.view_mut((1, 1), (n, n)).copy_from(&self.grad_cov);
        b
    }

    /// Full noisy Gram matrix over the current points.
    pub fn gram(&self) -> DMatrix<f64> {
        let b = self.block_len();
        let total = b * self.len();
        let mut k = DMatrix::zeros(total, total);
        let noise = self.noise_block();
        for i in 0..self.len() {
            for j in 0..=i {
                let mut blk = self.prior_block(&self.points[i], &self.points[j]);
                if i == j {
                    blk += &noise;
                }
                k.view_mut((i * b, j * b), (b, b)).copy_from(&blk);
                if i != j {
                    k.view_mut((j * b, i * b), (b, b))
                        .copy_from(&blk.transpose());
                }
            }
        }
        k
    }

    fn observation_vector(&self) -> DVector<f64> {
        let b = self.block_len();
        let mut y = DVector::zeros(b * self.len());
        for (i, (f, g)) in self.costs.iter().zip(&self.grads).enumerate() {
            y[i * b] = *f;
            y.rows_mut(i * b + 1, b - 1).copy_from(g);
        }
        y
    }

    /// Factor of the Gram matrix with a block for `x` appended.
    fn appended_factor(&self, x: &DVector<f64>) -> Result<Factor> {
        let b = self.block_len();
        let jitter = self.jitter();
        let mut new_block = self.prior_block(x, x) + self.noise_block();
        new_block = (&new_block + new_block.transpose()) * 0.5;
        for d in 0..b {
            new_block[(d, d)] += jitter;
        }

        let old = self.factor.as_ref();
        let n_old = old.map_or(0, |f| f.l.nrows());
        let mut cross = DMatrix::zeros(n_old, b);
        for (i, p) in self.points.iter().enumerate() {
            cross
                .view_mut((i * b, 0), (b, b))
                .copy_from(&self.prior_block(p, x));
        }

        let l21t = match old {
            Some(f) => {
                f.l.solve_lower_triangular(&cross)
                    .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?
            }
            None => DMatrix::zeros(0, b),
        };
        let schur = &new_block - l21t.transpose() * &l21t;
        if let Some(l22) = nalgebra::Cholesky::new(schur) {
            let mut l = DMatrix::zeros(n_old + b, n_old + b);
            if let Some(f) = old {
                l.view_mut((0, 0), (n_old, n_old)).copy_from(&f.l);
            }
            l.view_mut((n_old, 0), (b, n_old))
                .copy_from(&l21t.transpose());
            l.view_mut((n_old, n_old), (b, b)).copy_from(&l22.l());
            return Ok(Factor {
                l,
                jitter,
                alpha: DVector::zeros(0),
            });
        }

        // The appended block is not positive definite at the current jitter:
        // refactor the whole Gram matrix under the escalation policy.
        let mut extended = self.clone();
        extended.points.push(x.clone());
        let k = extended.gram();
        let jc = jittered_cholesky(&k)?;
        Ok(Factor {
            l: jc.chol.l(),
            jitter: jc.jitter,
            alpha: DVector::zeros(0),
        })
    }

    /// Removes point `idx` and its rows from the factor.
    fn remove(&mut self, idx: usize) {
        let b = self.block_len();
        let factor = self
            .factor
            .as_mut()
            .expect("factor present while points exist");
        let total = factor.l.nrows();
        let r0 = idx * b;
        let tail = total - r0 - b;

        // With L = [L11 0 0; L21 L22 0; L31 L32 L33], dropping the middle block
        // leaves L33 L33ᵀ + L32 L32ᵀ to be refactored for the trailing rows.
        let mut l33 = factor.l.view((r0 + b, r0 + b), (tail, tail)).into_owned();
        let l32 = factor.l.view((r0 + b, r0), (tail, b)).into_owned();
        for c in 0..b {
            let mut v = l32.column(c).into_owned();
            rank_one_update(&mut l33, &mut v);
        }

        let mut l = DMatrix::zeros(total - b, total - b);
        l.view_mut((0, 0), (r0, r0))
            .copy_from(&factor.l.view((0, 0), (r0, r0)));
        l.view_mut((r0, 0), (tail, r0))
            .copy_from(&factor.l.view((r0 + b, 0), (tail, r0)));
        l.view_mut((r0, r0), (tail, tail)).copy_from(&l33);
        factor.l = l;

        self.points.remove(idx);
        self.costs.remove(idx);
        self.grads.remove(idx);
    }

    fn refresh_alpha(&mut self) {
        let y = self.observation_vector();
        if let Some(f) = self.factor.as_mut() {
            let z =
                f.l.solve_lower_triangular(&y)
                    .expect("factor has a positive diagonal");
            f.alpha =
                f.l.tr_solve_lower_triangular(&z)
                    .expect("factor has a positive diagonal");
        }
    }

    /// Prior cross-covariance between `(f, g, vech H)` at `x` and every
    /// observation block: `(1 + n + m) × (len · (1 + n))`.
    fn cross_covariance(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let n = self.dim();
        let m = VechIndex::new(n).len();
        let b = self.block_len();
        let mut out = DMatrix::zeros(1 + n + m, b * self.len());
        for (i, p) in self.points.iter().enumerate() {
            let jet = SeJet::new(x, p, &self.kernel);
            let c0 = i * b;
            out[(0, c0)] = jet.k;
            out.view_mut((0, c0 + 1), (1, n))
                .copy_from(&jet.value_grad().transpose());
            out.view_mut((1, c0), (n, 1)).copy_from(&jet.grad_value());
            out.view_mut((1, c0 + 1), (n, n))
                .copy_from(&jet.grad_grad());
            out.view_mut((1 + n, c0), (m, 1))
                .copy_from(&jet.hess_value());
            out.view_mut((1 + n, c0 + 1), (m, n))
                .copy_from(&jet.hess_grad());
        }
        out
    }

    /// Posterior means of cost, gradient and Hessian at `x` (no variance).
    pub fn predict_mean(&self, x: &DVector<f64>) -> Result<(f64, DVector<f64>, DMatrix<f64>)> {
        let factor = self.ready(x)?;
        let n = self.dim();
        let m = VechIndex::new(n).len();
        let mean = self.cross_covariance(x) * &factor.alpha;
        let g = mean.rows(1, n).into_owned();
        let h = unvech(&mean.rows(1 + n, m).into_owned());
        Ok((mean[0], g, h))
    }

    /// Posterior cost mean only; cheaper than [`predict_mean`](Self::predict_mean).
    pub fn predict_cost(&self, x: &DVector<f64>) -> Result<f64> {
        let factor = self.ready(x)?;
        let n = self.dim();
        let b = self.block_len();
        let mut f = 0.0;
        for (i, p) in self.points.iter().enumerate() {
            let jet = SeJet::new(x, p, &self.kernel);
            f += jet.k * factor.alpha[i * b];
            for d in 0..n {
                f += jet.u[d] * jet.k * factor.alpha[i * b + 1 + d];
            }
        }
        Ok(f)
    }

    pub fn predict(&self, x: &DVector<f64>) -> Result<SurrogatePrediction> {
        let (f_mean, g_mean, h_mean) = self.predict_mean(x)?;
        let factor = self.factor.as_ref().expect("checked by predict_mean");
        let cross_f = self.cross_covariance(x).row(0).transpose();
        let z = factor
            .l
            .solve_lower_triangular(&cross_f)
            .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
        let f_var = (self.kernel.sigma_sq() - z.norm_squared()).max(0.0);
        Ok(SurrogatePrediction {
            f_mean,
            g_mean,
            h_mean,
            f_var,
        })
    }

    fn ready(&self, x: &DVector<f64>) -> Result<&Factor> {
        if x.len() != self.dim() {
            return Err(Error::InvalidArgument(format!(
                "query must have dimension {}",
                self.dim()
            )));
        }
        self.factor
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("prediction needs a nonempty dataset".into()))
    }
}

/// In-place update of a lower Cholesky factor so that `L Lᵀ` gains `v vᵀ`.
fn rank_one_update(l: &mut DMatrix<f64>, v: &mut DVector<f64>) {
    let n = l.nrows();
    for k in 0..n {
        let lkk = l[(k, k)];
        let r = lkk.hypot(v[k]);
        let c = r / lkk;
        let s = v[k] / lkk;
        l[(k, k)] = r;
        for i in k + 1..n {
            l[(i, k)] = (l[(i, k)] + s * v[i]) / c;
            v[i] = c * v[i] - s * l[(i, k)];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    fn dataset(noise: f64, capacity: usize) -> SurrogateDataset {
        let kernel = SeKernelParams::isotropic(4.0, 0.5, 2).unwrap();
        SurrogateDataset::new(kernel, noise, DMatrix::identity(2, 2) * noise, capacity).unwrap()
    }

    fn quad(x: &DVector<f64>) -> (f64, DVector<f64>) {
        (x[0] * x[0] + 0.5 * x[1] * x[1], dvector![2.0 * x[0], x[1]])
    }

    #[test]
    fn single_observation_gram_is_self_block_plus_noise() {
        let mut ds = dataset(0.1, 10);
        let x = dvector![0.3, -0.2];
        let (f, g) = quad(&x);
        ds.add_observation(&x, f, &g).unwrap();
        let k = ds.gram();
        let mut expected = DMatrix::zeros(3, 3);
        expected[(0, 0)] = 4.0 + 0.1;
        expected[(1, 1)] = 4.0 * 0.5 + 0.1;
        expected[(2, 2)] = 4.0 * 0.5 + 0.1;
        assert!((k - expected).abs().max() < 1e-14);
    }

    #[test]
    fn near_duplicate_is_rejected() {
        let mut ds = dataset(0.1, 10);
        let x = dvector![1.0, 2.0];
        let (f, g) = quad(&x);
        ds.add_observation(&x, f, &g).unwrap();
        let x2 = &x + dvector![1e-12, 0.0];
        assert!(matches!(
            ds.add_observation(&x2, f, &g),
            Err(Error::DuplicatePoint { index: 0, .. })
        ));
        assert_eq!(ds.len(), 1);
    }

    #[test]
    fn factor_tracks_gram_through_appends_and_evictions() {
        let mut ds = dataset(1e-3, 8);
        for i in 0..14 {
            let x = dvector![(i as f64 * 0.37).sin() * 2.0, (i as f64 * 0.61).cos() * 2.0];
            let (f, g) = quad(&x);
            ds.add_observation(&x, f, &g).unwrap();
            let f = ds.factor.as_ref().unwrap();
            let mut k = ds.gram();
            for d in 0..k.nrows() {
                k[(d, d)] += f.jitter;
            }
            let err = (&f.l * f.l.transpose() - &k).abs().max();
            assert!(err < 1e-9 * k.abs().max(), "step {i}: {err}");
        }
        assert_eq!(ds.len(), 8);
    }

    #[test]
    fn eviction_spares_elite_points() {
        let mut ds = dataset(1e-2, 6);
        // Costs decrease with insertion index except the first, which is best.
        let costs = [-100.0, 6.0, 5.0, 4.0, 3.0, 2.0, 1.0];
        for (i, c) in costs.iter().enumerate() {
            let x = dvector![i as f64, 0.0];
            ds.add_observation(&x, *c, &dvector![0.0, 0.0]).unwrap();
        }
        // Best five before eviction: -100, 1, 2, 3, 4. Oldest outside: cost 6.
        assert_eq!(ds.len(), 6);
        assert!(ds.costs().contains(&-100.0));
        assert!(!ds.costs().contains(&6.0));
        assert_eq!(ds.points()[1], dvector![2.0, 0.0]);
    }

    #[test]
    fn zero_noise_interpolates() {
        let kernel = SeKernelParams::isotropic(4.0, 0.5, 2).unwrap();
        let mut ds =
            SurrogateDataset::new(kernel, 1e-12, DMatrix::identity(2, 2) * 1e-12, 50).unwrap();
        let pts = [dvector![0.0, 0.0], dvector![1.0, 0.5], dvector![-0.7, 1.2]];
        for x in &pts {
            let (f, g) = quad(x);
            ds.add_observation(x, f, &g).unwrap();
        }
        for x in &pts {
            let (f, g) = quad(x);
            let p = ds.predict(x).unwrap();
            assert!((p.f_mean - f).abs() < 1e-6);
            assert!((p.g_mean - g).abs().max() < 1e-5);
            assert!(p.f_var < 1e-6);
        }
    }

    #[test]
    fn cost_only_predictor_matches_full_prediction() {
        let mut ds = dataset(0.05, 20);
        for i in 0..5 {
            let x = dvector![i as f64 * 0.4 - 1.0, 0.3 * i as f64];
            let (f, g) = quad(&x);
            ds.add_observation(&x, f, &g).unwrap();
        }
        let q = dvector![0.2, 0.1];
        let (f, _, _) = ds.predict_mean(&q).unwrap();
        assert!((ds.predict_cost(&q).unwrap() - f).abs() < 1e-12);
    }

    #[test]
    fn empty_dataset_cannot_predict() {
        let ds = dataset(0.1, 10);
        assert!(ds.predict(&dvector![0.0, 0.0]).is_err());
    }
}
