//! Gaussian belief over the half-vectorised Hessian and its update from
//! line-integral observations of gradient differences.

use nalgebra::{DMatrix, DVector};

use super::quadrature::GaussLegendre;
use crate::error::{Error, Result};
use crate::gp_core::{
    condition_gaussian, duplication_matrix, is_symmetric_psd, nearest_psd, symmetrize, unvech,
    vech, GaussianBlock, SeKernelParams, VechIndex,
};

/// Belief `vech(B) ~ N(mean, cov)` carried between iterations, together with
/// the kernel applied along line segments and the observation noise `R`.
#[derive(Debug, Clone, PartialEq)]
pub struct HessianBelief {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub kernel: SeKernelParams,
    pub obs_noise: DMatrix<f64>,
}

impl HessianBelief {
    pub fn new(
        mean: DVector<f64>,
        cov: DMatrix<f64>,
        kernel: SeKernelParams,
        obs_noise: DMatrix<f64>,
    ) -> Result<Self> {
        let n = kernel.dim();
        let m = VechIndex::new(n).len();
        if mean.len() != m || cov.nrows() != m || cov.ncols() != m {
            return Err(Error::InvalidArgument(format!(
                "belief over {n}x{n} Hessians needs mean of length {m} and {m}x{m} covariance"
            )));
        }
        if obs_noise.nrows() != n || obs_noise.ncols() != n {
            return Err(Error::InvalidArgument(format!(
                "observation noise must be {n}x{n}"
            )));
        }
        if !is_symmetric_psd(&cov) || !is_symmetric_psd(&obs_noise) {
            return Err(Error::InvalidArgument(
                "belief covariance and observation noise must be symmetric PSD".into(),
            ));
        }
        Ok(Self {
            mean,
            cov,
            kernel,
            obs_noise,
        })
    }

    /// Prior `B ~ N(vech(b0), c0)` with `R = 0`.
    pub fn from_matrices(
        b0: &DMatrix<f64>,
        c0: DMatrix<f64>,
        kernel: SeKernelParams,
    ) -> Result<Self> {
        let n = kernel.dim();
        if b0.nrows() != n || b0.ncols() != n {
            return Err(Error::InvalidArgument(format!(
                "initial Hessian must be {n}x{n}"
            )));
        }
        Self::new(vech(&symmetrize(b0)), c0, kernel, DMatrix::zeros(n, n))
    }

    pub fn dim(&self) -> usize {
        self.kernel.dim()
    }

    /// Current Hessian estimate `unvech(mean)`.
    pub fn hessian(&self) -> DMatrix<f64> {
        unvech(&self.mean)
    }

    pub fn with_obs_noise(mut self, r: DMatrix<f64>) -> Self {
        self.obs_noise = r;
        self
    }
}

/// Segment `r(τ) = x_prev + τ s` between consecutive iterates, with the
/// gradient difference observed across it.
#[derive(Debug, Clone, PartialEq)]
pub struct LineSegment {
    x_prev: DVector<f64>,
    x_curr: DVector<f64>,
    s: DVector<f64>,
    y: DVector<f64>,
}

impl LineSegment {
    pub fn new(x_prev: DVector<f64>, x_curr: DVector<f64>, y: DVector<f64>) -> Result<Self> {
        if x_prev.len() != x_curr.len() || y.len() != x_curr.len() {
            return Err(Error::InvalidArgument("segment dimension mismatch".into()));
        }
        let s = &x_curr - &x_prev;
        if !(s.norm() > 0.0) {
            return Err(Error::InvalidArgument("segment has zero length".into()));
        }
        Ok(Self {
            x_prev,
            x_curr,
            s,
            y,
        })
    }

    pub fn x_prev(&self) -> &DVector<f64> {
        &self.x_prev
    }

    pub fn x_curr(&self) -> &DVector<f64> {
        &self.x_curr
    }

    pub fn s(&self) -> &DVector<f64> {
        &self.s
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    /// `r(τ)`.
    pub fn point(&self, tau: f64) -> DVector<f64> {
        &self.x_prev + &self.s * tau
    }
}

/// Scalar factor `s² exp(-½ r(τ)ᵀ V r(t))` of the line kernel, using the
/// bilinear expansion in `(τ, t)`.
#[derive(Debug, Clone, Copy)]
struct LineFactor {
    sigma_sq: f64,
    pvp: f64,
    svp: f64,
    svs: f64,
}

impl LineFactor {
    fn new(seg: &LineSegment, kernel: &SeKernelParams) -> Self {
        let v = kernel.inv_lengthscale();
        let vp = v * &seg.x_prev;
        let vs = v * &seg.s;
        Self {
            sigma_sq: kernel.sigma_sq(),
            pvp: seg.x_prev.dot(&vp),
            svp: seg.s.dot(&vp),
            svs: seg.s.dot(&vs),
        }
    }

    fn eval(&self, tau: f64, t: f64) -> f64 {
        let q = self.pvp + (tau + t) * self.svp + tau * t * self.svs;
        self.sigma_sq * (-0.5 * q).exp()
    }
}

/// `κ(τ, t) = s² C exp(-½ r(τ)ᵀ V r(t))`.
pub fn line_kernel(
    tau: f64,
    t: f64,
    seg: &LineSegment,
    belief: &HessianBelief,
) -> Result<DMatrix<f64>> {
    if !(0.0..=1.0).contains(&tau) || !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidArgument(format!(
            "line parameters must lie in [0, 1], got ({tau}, {t})"
        )));
    }
    check_segment(seg, belief)?;
    Ok(&belief.cov * LineFactor::new(seg, &belief.kernel).eval(tau, t))
}

/// `(sᵀ ⊗ I) D`: maps `vech(B)` to `B s`.
pub fn secant_operator(s: &DVector<f64>) -> DMatrix<f64> {
    let n = s.len();
    s.transpose().kronecker(&DMatrix::<f64>::identity(n, n)) * duplication_matrix(n)
}

/// Cross-covariance `γ` (m × n) between `vech B(r(1))` and the observation,
/// and the observation covariance `π` (n × n, including `R`).
pub fn integral_observation_operator(
    seg: &LineSegment,
    belief: &HessianBelief,
    quad_nodes: usize,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if quad_nodes < 2 {
        return Err(Error::InvalidArgument(
            "quadrature needs at least two nodes".into(),
        ));
    }
    check_segment(seg, belief)?;
    let rule = GaussLegendre::new(quad_nodes);
    let factor = LineFactor::new(seg, &belief.kernel);
    let single = rule.integrate(|t| factor.eval(1.0, t));
    let double = rule.integrate_2d(|tau, t| factor.eval(tau, t));
    let op = secant_operator(&seg.s);
    let c_opt = &belief.cov * op.transpose();
    let gamma = &c_opt * single;
    let pi = symmetrize(&(&op * c_opt * double + &belief.obs_noise));
    Ok((gamma, pi))
}

/// Posterior belief at the current iterate `r(1)` after observing the
/// gradient difference `obs_y` across `seg`.
pub fn update_belief(
    belief: &HessianBelief,
    seg: &LineSegment,
    obs_y: &DVector<f64>,
    quad_nodes: usize,
) -> Result<HessianBelief> {
    check_segment(seg, belief)?;
    if obs_y.len() != belief.dim() || obs_y.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "observation must be finite with one entry per coordinate".into(),
        ));
    }
    let (gamma, pi) = integral_observation_operator(seg, belief, quad_nodes)?;
    let factor_11 = LineFactor::new(seg, &belief.kernel).eval(1.0, 1.0);
    let prior = GaussianBlock {
        mean: belief.mean.clone(),
        cov: &belief.cov * factor_11,
    };
    let predicted = secant_operator(&seg.s) * &belief.mean;
    let post = condition_gaussian(&prior, &gamma, &pi, &predicted, obs_y)?;
    // Near-exact observations can push the subtraction-form covariance
    // slightly indefinite; clip it back so later updates stay factorable.
    Ok(HessianBelief {
        mean: post.mean,
        cov: nearest_psd(&post.cov),
        kernel: belief.kernel.clone(),
        obs_noise: belief.obs_noise.clone(),
    })
}

/// Posterior mean of `vech B(r(τ))` at an arbitrary `τ ∈ [0, 1]` given the
/// observation across `seg`. [`update_belief`] keeps only `τ = 1`.
pub fn posterior_line_mean(
    belief: &HessianBelief,
    seg: &LineSegment,
    obs_y: &DVector<f64>,
    tau: f64,
    quad_nodes: usize,
) -> Result<DVector<f64>> {
    let (_, pi) = integral_observation_operator(seg, belief, quad_nodes)?;
    let rule = GaussLegendre::new(quad_nodes);
    let factor = LineFactor::new(seg, &belief.kernel);
    let single = rule.integrate(|t| factor.eval(tau, t));
    let op = secant_operator(&seg.s);
    let gamma = &belief.cov * op.transpose() * single;
    let innovation = obs_y - &op * &belief.mean;
    let chol = crate::gp_core::jittered_cholesky(&pi)?;
    Ok(&belief.mean + gamma * chol.solve_vec(&innovation))
}

fn check_segment(seg: &LineSegment, belief: &HessianBelief) -> Result<()> {
    if seg.s.len() != belief.dim() {
        return Err(Error::InvalidArgument(format!(
            "segment in dimension {} but belief over dimension {}",
            seg.s.len(),
            belief.dim()
        )));
    }
    Ok(())
}
