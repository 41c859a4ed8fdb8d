//! Marginal and joint demand models.
//!
//! Five marginal kinds are supported. Weibull, Gamma and Gaussian are light
//! tailed (survival decays like `exp(-c x^γ)`); Pareto and Student-t are heavy
//! tailed (survival decays like `c x^{-γ}`). Each marginal reports its tail
//! index `gamma` and constant `c_const` relative to the reference rate
//! `λ(t) = t^γ` (light) or `λ(t) = t^{-γ}` (heavy).
//!
//! Tail functionals are available in log space (`ln_survival`,
//! `inverse_survival_ln`) because several callers work at levels far below
//! `f64::MIN_POSITIVE`.

use crate::linalg::{self, Mat};
use crate::rng::StreamRng;
use crate::special;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma_ur, ln_gamma};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("probability level {0} outside (0, 1)")]
    DomainError(f64),
    #[error("tail index {0} gives an infinite mean")]
    InfiniteMean(f64),
    #[error("matrix is not symmetric positive definite")]
    NotPositiveDefinite,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailClass {
    Light,
    Heavy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MarginalKind {
    Weibull { shape: f64, scale: f64 },
    Gamma { shape: f64, scale: f64 },
    Gaussian { mean: f64, sd: f64 },
    /// Survival `(1 + x/scale)^{-index}` on `x ≥ 0`.
    Pareto { index: f64, scale: f64 },
    StudentT {
        dof: f64,
        scale: f64,
        #[serde(default)]
        loc: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MarginalModel {
    pub kind: MarginalKind,
}

fn positive(name: &str, v: f64) -> Result<(), DistError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(DistError::InvalidParameter(format!("{name} must be positive and finite, got {v}")))
    }
}

/// Safeguarded Newton for `h(v) = target` with `h` decreasing on `[lo, hi]`.
/// `eval` returns `(h(v), h'(v))`.
fn solve_decreasing<F: Fn(f64) -> (f64, f64)>(eval: F, target: f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut v = 0.5 * (lo + hi);
    for _ in 0..300 {
        let (h, dh) = eval(v);
        let r = h - target;
        if r == 0.0 {
            return v;
        }
        if r > 0.0 {
            lo = v;
        } else {
            hi = v;
        }
        let mut next = if dh < 0.0 && dh.is_finite() { v - r / dh } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - v).abs() <= 1e-15 * (1.0 + v.abs()) || (hi - lo) <= 1e-15 * (1.0 + v.abs()) {
            return next;
        }
        v = next;
    }
    v
}

impl MarginalModel {
    pub fn new(kind: MarginalKind) -> Result<Self, DistError> {
        match &kind {
            MarginalKind::Weibull { shape, scale } => {
                positive("shape", *shape)?;
                positive("scale", *scale)?;
            }
            MarginalKind::Gamma { shape, scale } => {
                if !(*shape >= 1.0 && shape.is_finite()) {
                    return Err(DistError::InvalidParameter(format!("gamma shape must be ≥ 1, got {shape}")));
                }
                positive("scale", *scale)?;
            }
            MarginalKind::Gaussian { mean, sd } => {
                if !mean.is_finite() {
                    return Err(DistError::InvalidParameter("mean must be finite".into()));
                }
                positive("sd", *sd)?;
            }
            MarginalKind::Pareto { index, scale } => {
                if !(*index > 1.0 && index.is_finite()) {
                    return Err(DistError::InvalidParameter(format!("pareto index must exceed 1, got {index}")));
                }
                positive("scale", *scale)?;
            }
            MarginalKind::StudentT { dof, scale, loc } => {
                positive("dof", *dof)?;
                positive("scale", *scale)?;
                if !loc.is_finite() {
                    return Err(DistError::InvalidParameter("loc must be finite".into()));
                }
            }
        }
        Ok(MarginalModel { kind })
    }

    pub fn weibull(shape: f64, scale: f64) -> Result<Self, DistError> {
        Self::new(MarginalKind::Weibull { shape, scale })
    }
    pub fn gamma_dist(shape: f64, scale: f64) -> Result<Self, DistError> {
        Self::new(MarginalKind::Gamma { shape, scale })
    }
    pub fn gaussian(mean: f64, sd: f64) -> Result<Self, DistError> {
        Self::new(MarginalKind::Gaussian { mean, sd })
    }
    pub fn pareto(index: f64, scale: f64) -> Result<Self, DistError> {
        Self::new(MarginalKind::Pareto { index, scale })
    }
    pub fn student_t(dof: f64, scale: f64, loc: f64) -> Result<Self, DistError> {
        Self::new(MarginalKind::StudentT { dof, scale, loc })
    }

    pub fn validate(&self) -> Result<(), DistError> {
        Self::new(self.kind.clone()).map(|_| ())
    }

    pub fn tail_class(&self) -> TailClass {
        match self.kind {
            MarginalKind::Pareto { .. } | MarginalKind::StudentT { .. } => TailClass::Heavy,
            _ => TailClass::Light,
        }
    }

    /// Tail index γ.
    pub fn gamma(&self) -> f64 {
        match self.kind {
            MarginalKind::Weibull { shape, .. } => shape,
            MarginalKind::Gamma { .. } => 1.0,
            MarginalKind::Gaussian { .. } => 2.0,
            MarginalKind::Pareto { index, .. } => index,
            MarginalKind::StudentT { dof, .. } => dof,
        }
    }

    /// Tail constant c: `-ln F̄(x) ~ c x^γ` (light) or `F̄(x) ~ c x^{-γ}` (heavy).
    pub fn c_const(&self) -> f64 {
        match self.kind {
            MarginalKind::Weibull { shape, scale } => scale.powf(-shape),
            MarginalKind::Gamma { scale, .. } => 1.0 / scale,
            MarginalKind::Gaussian { sd, .. } => 0.5 / (sd * sd),
            MarginalKind::Pareto { index, scale } => scale.powf(index),
            MarginalKind::StudentT { dof, scale, .. } => {
                let ln_k = ln_gamma(0.5 * (dof + 1.0)) - ln_gamma(0.5 * dof) - 0.5 * (dof * std::f64::consts::PI).ln();
                (ln_k + 0.5 * (dof - 1.0) * dof.ln() + dof * scale.ln()).exp()
            }
        }
    }

    pub fn support_lower(&self) -> f64 {
        match self.kind {
            MarginalKind::Gaussian { .. } | MarginalKind::StudentT { .. } => f64::NEG_INFINITY,
            _ => 0.0,
        }
    }

    pub fn mean(&self) -> f64 {
        match self.kind {
            MarginalKind::Weibull { shape, scale } => scale * ln_gamma(1.0 + 1.0 / shape).exp(),
            MarginalKind::Gamma { shape, scale } => shape * scale,
            MarginalKind::Gaussian { mean, .. } => mean,
            MarginalKind::Pareto { index, scale } => scale / (index - 1.0),
            MarginalKind::StudentT { dof, loc, .. } => {
                if dof > 1.0 {
                    loc
                } else {
                    f64::NAN
                }
            }
        }
    }

    /// ln P(ξ > x).
    pub fn ln_survival(&self, x: f64) -> f64 {
        match self.kind {
            MarginalKind::Weibull { shape, scale } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(x / scale).powf(shape)
                }
            }
            MarginalKind::Gamma { shape, scale } => {
                if x <= 0.0 {
                    0.0
                } else if shape == 2.0 {
                    let y = x / scale;
                    y.ln_1p() - y
                } else {
                    special::ln_gamma_q(shape, x / scale)
                }
            }
            MarginalKind::Gaussian { mean, sd } => special::ln_norm_sf((x - mean) / sd),
            MarginalKind::Pareto { index, scale } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -index * (x / scale).ln_1p()
                }
            }
            MarginalKind::StudentT { dof, scale, loc } => special::t_ln_sf(dof, (x - loc) / scale),
        }
    }

    /// P(ξ > x); clamps to 1 below the support.
    pub fn survival(&self, x: f64) -> f64 {
        match self.kind {
            MarginalKind::Gaussian { mean, sd } => special::norm_sf((x - mean) / sd),
            MarginalKind::StudentT { dof, scale, loc } => special::t_sf(dof, (x - loc) / scale),
            MarginalKind::Gamma { shape, scale } if shape != 2.0 => {
                if x <= 0.0 {
                    1.0
                } else {
                    gamma_ur(shape, x / scale)
                }
            }
            _ => self.ln_survival(x).exp(),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        -self.ln_survival(x).exp_m1()
    }

    /// ln P(ξ ≤ x), accurate when the survival is tiny.
    pub fn ln_cdf(&self, x: f64) -> f64 {
        let ls = self.ln_survival(x);
        if ls < -std::f64::consts::LN_2 {
            (-ls.exp()).ln_1p()
        } else {
            (-ls.exp_m1()).ln()
        }
    }

    pub fn ln_density(&self, x: f64) -> f64 {
        match self.kind {
            MarginalKind::Weibull { shape, scale } => {
                if x < 0.0 {
                    return f64::NEG_INFINITY;
                }
                let y = x / scale;
                (shape / scale).ln() + (shape - 1.0) * y.ln() - y.powf(shape)
            }
            MarginalKind::Gamma { shape, scale } => {
                if x < 0.0 {
                    return f64::NEG_INFINITY;
                }
                let y = x / scale;
                (shape - 1.0) * y.ln() - y - ln_gamma(shape) - scale.ln()
            }
            MarginalKind::Gaussian { mean, sd } => {
                let z = (x - mean) / sd;
                -0.5 * z * z - special::LN_SQRT_2PI - sd.ln()
            }
            MarginalKind::Pareto { index, scale } => {
                if x < 0.0 {
                    return f64::NEG_INFINITY;
                }
                (index / scale).ln() - (index + 1.0) * (x / scale).ln_1p()
            }
            MarginalKind::StudentT { dof, scale, loc } => special::t_ln_pdf(dof, (x - loc) / scale) - scale.ln(),
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        self.ln_density(x).exp()
    }

    /// Smallest x with P(ξ > x) ≤ α.
    pub fn inverse_survival(&self, alpha: f64) -> Result<f64, DistError> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(DistError::DomainError(alpha));
        }
        Ok(self.inverse_survival_ln(alpha.ln()))
    }

    /// Inverse survival at level `exp(ln_alpha)`; `ln_alpha < 0`.
    pub fn inverse_survival_ln(&self, ln_alpha: f64) -> f64 {
        let l = -ln_alpha;
        match self.kind {
            MarginalKind::Weibull { shape, scale } => scale * l.powf(1.0 / shape),
            MarginalKind::Pareto { index, scale } => scale * (l / index).exp_m1(),
            MarginalKind::Gaussian { mean, sd } => mean + sd * special::norm_isf_ln(ln_alpha),
            MarginalKind::Gamma { shape, scale } => {
                let mut hi = 2.0 * l + 10.0 * shape + 10.0;
                while special::ln_gamma_q(shape, hi) > ln_alpha {
                    hi *= 2.0;
                }
                let y = solve_decreasing(
                    |y| {
                        if y <= 0.0 {
                            return (0.0, f64::NAN);
                        }
                        let lq = if shape == 2.0 { y.ln_1p() - y } else { special::ln_gamma_q(shape, y) };
                        let lpdf = (shape - 1.0) * y.ln() - y - ln_gamma(shape);
                        (lq, -(lpdf - lq).exp())
                    },
                    ln_alpha,
                    0.0,
                    hi,
                );
                scale * y
            }
            MarginalKind::StudentT { dof, scale, loc } => loc + scale * t_standard_isf_ln(dof, ln_alpha),
        }
    }

    /// ln of the inverse survival; finite even when the quantile overflows.
    /// Only meaningful for positive quantiles.
    pub fn ln_inverse_survival_ln(&self, ln_alpha: f64) -> f64 {
        let l = -ln_alpha;
        match self.kind {
            MarginalKind::Weibull { shape, scale } => scale.ln() + l.ln() / shape,
            MarginalKind::Pareto { index, scale } => {
                let y = l / index;
                let ln_expm1 = if y > 1.0 { y + (-(-y).exp_m1()).ln() } else { y.exp_m1().ln() };
                scale.ln() + ln_expm1
            }
            MarginalKind::StudentT { dof, scale, loc } if loc == 0.0 && ln_alpha < -std::f64::consts::LN_2 => {
                scale.ln() + t_standard_ln_isf_ln(dof, ln_alpha)
            }
            _ => self.inverse_survival_ln(ln_alpha).ln(),
        }
    }

    /// Conditional tail expectation E[ξ | ξ ≥ VaR_{1−α}].
    pub fn cvar(&self, alpha: f64) -> Result<f64, DistError> {
        let q = self.inverse_survival(alpha)?;
        let la = alpha.ln();
        match self.kind {
            MarginalKind::Pareto { index, scale } => Ok((index * q + scale) / (index - 1.0)),
            MarginalKind::Weibull { shape, scale } => {
                if shape == 1.0 {
                    return Ok(q + scale);
                }
                let a = 1.0 + 1.0 / shape;
                Ok((scale.ln() + ln_gamma(a) + special::ln_gamma_q(a, (q / scale).powf(shape)) - la).exp())
            }
            MarginalKind::Gamma { shape, scale } => {
                Ok((shape.ln() + scale.ln() + special::ln_gamma_q(shape + 1.0, q / scale) - la).exp())
            }
            MarginalKind::Gaussian { mean, sd } => {
                let z = (q - mean) / sd;
                Ok(mean + sd * (-0.5 * z * z - special::LN_SQRT_2PI - la).exp())
            }
            MarginalKind::StudentT { dof, scale, loc } => {
                if dof <= 1.0 {
                    return Err(DistError::InfiniteMean(dof));
                }
                let z = (q - loc) / scale;
                Ok(loc + scale * (dof + z * z) / (dof - 1.0) * (special::t_ln_pdf(dof, z) - la).exp())
            }
        }
    }

    /// E|ξ|^p by quadrature of p x^{p−1} P(|ξ| > x); infinite when the tail forbids it.
    pub fn abs_moment(&self, p: f64) -> f64 {
        if self.tail_class() == TailClass::Heavy && self.gamma() <= p {
            return f64::INFINITY;
        }
        let lower = self.support_lower();
        special::integrate_to_inf(
            |x| {
                if x <= 0.0 {
                    return 0.0;
                }
                let mut tail = self.survival(x);
                if lower < 0.0 {
                    tail += self.cdf(-x);
                }
                p * x.powf(p - 1.0) * tail
            },
            0.0,
            1e-12,
            1e-10,
        )
    }

    /// Law of t·ξ.
    pub fn scaled(&self, t: f64) -> MarginalModel {
        let kind = match self.kind {
            MarginalKind::Weibull { shape, scale } => MarginalKind::Weibull { shape, scale: scale * t },
            MarginalKind::Gamma { shape, scale } => MarginalKind::Gamma { shape, scale: scale * t },
            MarginalKind::Gaussian { mean, sd } => MarginalKind::Gaussian { mean: mean * t, sd: sd * t },
            MarginalKind::Pareto { index, scale } => MarginalKind::Pareto { index, scale: scale * t },
            MarginalKind::StudentT { dof, scale, loc } => MarginalKind::StudentT { dof, scale: scale * t, loc: loc * t },
        };
        MarginalModel { kind }
    }
}

fn t_standard_ln_isf_ln(dof: f64, ln_alpha: f64) -> f64 {
    // Solve in w = ln z so that astronomically large quantiles stay representable.
    let hi = (-ln_alpha + 50.0) / dof.min(1.0) + 10.0;
    solve_decreasing(
        |w| {
            let ls = special::t_ln_sf_at_ln(dof, w);
            let lpdf = special::t_ln_pdf_at_ln(dof, w);
            (ls, -(lpdf + w - ls).exp())
        },
        ln_alpha,
        -40.0,
        hi,
    )
}

fn t_standard_isf_ln(dof: f64, ln_alpha: f64) -> f64 {
    let half = -std::f64::consts::LN_2;
    if ln_alpha < half {
        t_standard_ln_isf_ln(dof, ln_alpha).exp()
    } else if ln_alpha == half {
        0.0
    } else {
        // Lower half: P(T > −z) = α  ⇔  P(T > z) = 1 − α.
        let other = (-ln_alpha.exp()).ln_1p();
        -t_standard_ln_isf_ln(dof, other).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Generator {
    Gaussian,
    StudentT { dof: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Copula {
    #[default]
    Independent,
    GaussianCopula { correlation: Mat },
    Elliptical {
        generator: Generator,
        location: Vec<f64>,
        dispersion: Mat,
    },
}

/// d marginals joined by a copula. Elliptical models carry their own marginals,
/// which are derived from the location and dispersion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointModel {
    #[serde(default)]
    pub marginals: Vec<MarginalModel>,
    #[serde(default)]
    pub copula: Copula,
}

/// Dominating tail behaviour of a joint model.
#[derive(Debug, Clone, PartialEq)]
pub struct TailProfile {
    pub class: TailClass,
    pub gamma: f64,
    /// Per-coordinate constants; coordinates with lighter tails carry `+∞`
    /// (light class) or `0` (heavy class).
    pub c: Vec<f64>,
}

/// Limit density φ* of the scaled joint density.
#[derive(Debug, Clone, PartialEq)]
pub enum PhiStar {
    /// Σ_j c_j |z_j|^γ; coordinates with nonnegative support are `+∞` off the orthant.
    LightSeparable { c: Vec<f64>, gamma: f64, nonneg: Vec<bool> },
    /// ½ wᵀR⁻¹w with w_j = √(2c_j) z_j^{γ/2} on the nonnegative orthant.
    LightGaussianCopula { c: Vec<f64>, gamma: f64, r_inv: Mat },
    /// ½ zᵀΣ⁻¹z.
    LightElliptical { sigma_inv: Mat },
    /// K (zᵀΣ⁻¹z)^{−(ν+d)/2}.
    HeavyElliptical { k: f64, sigma_inv: Mat, nu: f64 },
    /// Heavy independent tails: the limit measure lives on the axes and has no density.
    HeavyAxial { c: Vec<f64>, gamma: f64 },
}

impl PhiStar {
    pub fn eval(&self, z: &[f64]) -> Option<f64> {
        match self {
            PhiStar::LightSeparable { c, gamma, nonneg } => {
                let mut s = 0.0;
                for ((zj, cj), nn) in z.iter().zip(c).zip(nonneg) {
                    if *nn && *zj < 0.0 {
                        return Some(f64::INFINITY);
                    }
                    if *zj != 0.0 {
                        s += cj * zj.abs().powf(*gamma);
                    }
                }
                Some(s)
            }
            PhiStar::LightGaussianCopula { c, gamma, r_inv } => {
                if z.iter().any(|v| *v < 0.0) {
                    return Some(f64::INFINITY);
                }
                let w: Vec<f64> = z.iter().zip(c).map(|(zj, cj)| (2.0 * cj).sqrt() * zj.powf(0.5 * gamma)).collect();
                Some(0.5 * linalg::quad_form(r_inv, &w))
            }
            PhiStar::LightElliptical { sigma_inv } => Some(0.5 * linalg::quad_form(sigma_inv, z)),
            PhiStar::HeavyElliptical { k, sigma_inv, nu } => {
                let d = z.len() as f64;
                Some(k * linalg::quad_form(sigma_inv, z).powf(-0.5 * (nu + d)))
            }
            PhiStar::HeavyAxial { .. } => None,
        }
    }

    /// Degree of homogeneity: γ (light) or −(γ+d) (heavy).
    pub fn degree(&self, d: usize) -> f64 {
        match self {
            PhiStar::LightSeparable { gamma, .. } | PhiStar::LightGaussianCopula { gamma, .. } => *gamma,
            PhiStar::LightElliptical { .. } => 2.0,
            PhiStar::HeavyElliptical { nu, .. } => -(nu + d as f64),
            PhiStar::HeavyAxial { gamma, .. } => -(gamma + d as f64),
        }
    }
}

/// Row-major n×d sample matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    pub n: usize,
    pub d: usize,
    pub data: Vec<f64>,
}

impl Samples {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }
    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.data[i * self.d + j]).collect()
    }
}

/// Rows generated per counter stream.
pub const BLOCK_ROWS: usize = 4096;

impl JointModel {
    pub fn independent(marginals: Vec<MarginalModel>) -> Result<Self, DistError> {
        JointModel { marginals, copula: Copula::Independent }.checked()
    }

    pub fn gaussian_copula(marginals: Vec<MarginalModel>, correlation: Mat) -> Result<Self, DistError> {
        JointModel { marginals, copula: Copula::GaussianCopula { correlation } }.checked()
    }

    pub fn elliptical(generator: Generator, location: Vec<f64>, dispersion: Mat) -> Result<Self, DistError> {
        JointModel {
            marginals: Vec::new(),
            copula: Copula::Elliptical { generator, location, dispersion },
        }
        .checked()
    }

    /// Validate and, for elliptical models, derive the marginals.
    pub fn checked(mut self) -> Result<Self, DistError> {
        match &self.copula {
            Copula::Independent => {}
            Copula::GaussianCopula { correlation } => {
                let d = self.marginals.len();
                if correlation.len() != d || !linalg::is_symmetric(correlation, 1e-12) {
                    return Err(DistError::Dimension("correlation must be a symmetric d×d matrix".into()));
                }
                if correlation.iter().enumerate().any(|(i, r)| (r[i] - 1.0).abs() > 1e-12) {
                    return Err(DistError::InvalidParameter("correlation diagonal must be 1".into()));
                }
                linalg::cholesky(correlation).ok_or(DistError::NotPositiveDefinite)?;
            }
            Copula::Elliptical { generator, location, dispersion } => {
                let d = location.len();
                if dispersion.len() != d || !linalg::is_symmetric(dispersion, 1e-12) {
                    return Err(DistError::Dimension("dispersion must be a symmetric d×d matrix".into()));
                }
                linalg::cholesky(dispersion).ok_or(DistError::NotPositiveDefinite)?;
                let derived: Vec<MarginalModel> = (0..d)
                    .map(|j| {
                        let sd = dispersion[j][j].sqrt();
                        match generator {
                            Generator::Gaussian => MarginalModel::gaussian(location[j], sd),
                            Generator::StudentT { dof } => MarginalModel::student_t(*dof, sd, location[j]),
                        }
                    })
                    .collect::<Result<_, _>>()?;
                if !self.marginals.is_empty() && self.marginals != derived {
                    return Err(DistError::InvalidParameter(
                        "elliptical marginals are derived from location and dispersion; omit them".into(),
                    ));
                }
                self.marginals = derived;
            }
        }
        if self.marginals.is_empty() {
            return Err(DistError::Dimension("at least one marginal is required".into()));
        }
        for m in &self.marginals {
            m.validate()?;
        }
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.marginals.len()
    }

    pub fn tail_profile(&self) -> TailProfile {
        let heavy = self.marginals.iter().any(|m| m.tail_class() == TailClass::Heavy);
        let class = if heavy { TailClass::Heavy } else { TailClass::Light };
        let gamma = self
            .marginals
            .iter()
            .filter(|m| m.tail_class() == class)
            .map(|m| m.gamma())
            .fold(f64::INFINITY, f64::min);
        let c = self
            .marginals
            .iter()
            .map(|m| {
                if m.tail_class() == class && m.gamma() == gamma {
                    m.c_const()
                } else if class == TailClass::Light {
                    f64::INFINITY
                } else {
                    0.0
                }
            })
            .collect();
        TailProfile { class, gamma, c }
    }

    /// Multivariate normal parameters when the model is jointly Gaussian.
    pub fn gaussian_params(&self) -> Option<(Vec<f64>, Mat)> {
        let gauss: Option<Vec<(f64, f64)>> = self
            .marginals
            .iter()
            .map(|m| match m.kind {
                MarginalKind::Gaussian { mean, sd } => Some((mean, sd)),
                _ => None,
            })
            .collect();
        match &self.copula {
            Copula::Elliptical { generator: Generator::Gaussian, location, dispersion } => {
                Some((location.clone(), dispersion.clone()))
            }
            Copula::Elliptical { .. } => None,
            Copula::Independent => {
                let g = gauss?;
                let d = g.len();
                let mut s = vec![vec![0.0; d]; d];
                for (j, (_, sd)) in g.iter().enumerate() {
                    s[j][j] = sd * sd;
                }
                Some((g.iter().map(|p| p.0).collect(), s))
            }
            Copula::GaussianCopula { correlation } => {
                let g = gauss?;
                let s = (0..g.len())
                    .map(|i| (0..g.len()).map(|j| correlation[i][j] * g[i].1 * g[j].1).collect())
                    .collect();
                Some((g.iter().map(|p| p.0).collect(), s))
            }
        }
    }

    /// (standardized generator marginal, μ, Σ) for elliptical laws, including
    /// jointly Gaussian models expressed through other copula tags.
    pub fn elliptical_params(&self) -> Option<(MarginalModel, Vec<f64>, Mat)> {
        if let Copula::Elliptical { generator: Generator::StudentT { dof }, location, dispersion } = &self.copula {
            return Some((MarginalModel { kind: MarginalKind::StudentT { dof: *dof, scale: 1.0, loc: 0.0 } }, location.clone(), dispersion.clone()));
        }
        let (mu, sigma) = self.gaussian_params()?;
        Some((MarginalModel { kind: MarginalKind::Gaussian { mean: 0.0, sd: 1.0 } }, mu, sigma))
    }

    pub fn phi_star(&self) -> PhiStar {
        let prof = self.tail_profile();
        match (&self.copula, prof.class) {
            (Copula::Elliptical { generator: Generator::Gaussian, dispersion, .. }, _) => {
                let l = linalg::cholesky(dispersion).expect("validated");
                PhiStar::LightElliptical { sigma_inv: linalg::chol_inverse(&l) }
            }
            (Copula::Elliptical { generator: Generator::StudentT { dof }, dispersion, .. }, _) => {
                let l = linalg::cholesky(dispersion).expect("validated");
                let d = dispersion.len() as f64;
                let nu = *dof;
                let ln_k = ln_gamma(0.5 * (nu + d)) - ln_gamma(0.5 * nu) - 0.5 * d * (nu * std::f64::consts::PI).ln()
                    - 0.5 * linalg::chol_ln_det(&l)
                    + 0.5 * (nu + d) * nu.ln();
                PhiStar::HeavyElliptical { k: ln_k.exp(), sigma_inv: linalg::chol_inverse(&l), nu }
            }
            (Copula::GaussianCopula { correlation }, TailClass::Light) => {
                let l = linalg::cholesky(correlation).expect("validated");
                PhiStar::LightGaussianCopula { c: prof.c, gamma: prof.gamma, r_inv: linalg::chol_inverse(&l) }
            }
            (_, TailClass::Light) => PhiStar::LightSeparable {
                nonneg: self.marginals.iter().map(|m| m.support_lower() >= 0.0).collect(),
                c: prof.c,
                gamma: prof.gamma,
            },
            (_, TailClass::Heavy) => PhiStar::HeavyAxial { c: prof.c, gamma: prof.gamma },
        }
    }

    /// Fill `out` (rows × d) with the rows of block `block` of the stream `seed`.
    pub fn sample_block(&self, seed: u64, block: u64, out: &mut [f64]) {
        let d = self.dim();
        let rows = out.len() / d;
        let mut rng = StreamRng::new(seed, block);
        match &self.copula {
            Copula::Independent => {
                for v in out.chunks_mut(d) {
                    for (x, m) in v.iter_mut().zip(&self.marginals) {
                        *x = m.inverse_survival_ln(rng.open01().ln());
                    }
                }
            }
            Copula::GaussianCopula { correlation } => {
                let l = linalg::cholesky(correlation).expect("validated");
                let mut n = vec![0.0; d];
                for v in out.chunks_mut(d) {
                    for e in n.iter_mut() {
                        *e = StandardNormal.sample(&mut rng);
                    }
                    for j in 0..d {
                        let z: f64 = (0..=j).map(|k| l[j][k] * n[k]).sum();
                        v[j] = self.marginals[j].inverse_survival_ln(special::ln_norm_sf(z));
                    }
                }
            }
            Copula::Elliptical { generator, location, dispersion } => {
                let l = linalg::cholesky(dispersion).expect("validated");
                let chi_d = ChiSquared::new(d as f64).expect("d ≥ 1");
                let chi_nu = match generator {
                    Generator::StudentT { dof } => Some((ChiSquared::new(*dof).expect("dof > 0"), *dof)),
                    Generator::Gaussian => None,
                };
                let mut s = vec![0.0; d];
                for v in out.chunks_mut(d) {
                    for e in s.iter_mut() {
                        *e = StandardNormal.sample(&mut rng);
                    }
                    let norm = linalg::norm2(&s);
                    let mut r2: f64 = chi_d.sample(&mut rng);
                    if let Some((chi, nu)) = &chi_nu {
                        let w: f64 = chi.sample(&mut rng);
                        r2 /= w / nu;
                    }
                    let radial = r2.sqrt() / norm;
                    for j in 0..d {
                        let z: f64 = (0..=j).map(|k| l[j][k] * s[k]).sum();
                        v[j] = location[j] + radial * z;
                    }
                }
            }
        }
        debug_assert_eq!(rows * d, out.len());
    }

    /// n i.i.d. rows; deterministic in `seed` regardless of thread count.
    pub fn sample(&self, n: usize, seed: u64) -> Samples {
        let d = self.dim();
        let mut data = vec![0.0; n * d];
        data.par_chunks_mut(BLOCK_ROWS * d)
            .enumerate()
            .for_each(|(b, chunk)| self.sample_block(seed, b as u64, chunk));
        Samples { n, d, data }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("joint model serializes")
    }

    pub fn from_toml(s: &str) -> Result<Self, DistError> {
        let m: JointModel = toml::from_str(s).map_err(|e| DistError::InvalidParameter(e.to_string()))?;
        m.checked()
    }
}
