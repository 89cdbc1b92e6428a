//! Explicit radial supersolutions.
//!
//! Given a non-increasing, non-negative source `ξ`, the profile `ψ` solves
//!
//! ```text
//! (t^{k−1} e^{−h* t} ψ′)′ = e^{−h* t} t^{k−1} ξ,      t^{k−1} ψ′(t) → 0 as t → 0,
//! ```
//!
//! which integrates to
//!
//! ```text
//! ψ′(t) = e^{h* t} t^{1−k} ∫₀ᵗ e^{−h* s} s^{k−1} ξ(s) ds,      ψ(t) = ∫₀ᵗ ψ′.
//! ```
//!
//! For `hR < k` and `h* ≥ max{h, h/(k − hR)}` the radial function `w(x) = ψ(|x − x₀|)`
//! satisfies `F⁻ₖ[w] ≥ ξ(r)/(1 + h*R)` on `B_R(x₀)`. With `ξ(t) = k·S(t/a)` for a
//! cutoff `S` this is the barrier `u_{x₀}` used to assemble supersolutions.
//!
//! `ψ′` and `ψ` come from nested adaptive quadrature; `ψ″` is read off the
//! expanded equation `ψ″ = ξ + h*ψ′ − (k−1)ψ′/t` rather than differenced.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;
use crate::spectral::SymMatrix;

/// Below `SERIES_FRACTION · a` the profile switches to `ψ′ ≈ ξ(0) t / k`.
pub const SERIES_FRACTION: f64 = 1e-6;
/// Slack used by the pointwise invariant checks.
pub const INVARIANT_SLACK: f64 = 1e-8;
pub const DEFAULT_PROFILE_POINTS: usize = 10_000;

/// Scalar parameters shared by the radial profiles and barriers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierParams {
    /// Ambient dimension.
    pub n: usize,
    pub k: usize,
    pub h: f64,
    /// Outer radius `R`.
    #[serde(rename = "R")]
    pub radius: f64,
    pub hstar: f64,
    /// Barrier scale `a ∈ (0, R/e]`, only needed for cutoff-driven barriers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
}

impl BarrierParams {
    /// Parameters with the smallest admissible `h* = max{h, h/(k − hR)}`.
    pub fn new(n: usize, k: usize, h: f64, radius: f64) -> Result<Self> {
        let hstar = if k as f64 > h * radius {
            Self::min_hstar(k, h, radius)
        } else {
            f64::INFINITY
        };
        let p = Self {
            n,
            k,
            h,
            radius,
            hstar,
            a: None,
        };
        p.validate()?;
        Ok(p)
    }

    /// Same, parameterised by the dimensionless product `hR`.
    pub fn from_hr(n: usize, k: usize, h_r: f64, radius: f64) -> Result<Self> {
        Self::new(n, k, h_r / radius, radius)
    }

    pub fn min_hstar(k: usize, h: f64, radius: f64) -> f64 {
        h.max(h / (k as f64 - h * radius))
    }

    pub fn with_hstar(mut self, hstar: f64) -> Result<Self> {
        self.hstar = hstar;
        self.validate()?;
        Ok(self)
    }

    pub fn with_scale(mut self, a: f64) -> Result<Self> {
        self.a = Some(a);
        self.validate()?;
        Ok(self)
    }

    /// `1 + h*R`, the loss factor in the barrier inequality.
    pub fn loss_factor(&self) -> f64 {
        1.0 + self.hstar * self.radius
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k > self.n {
            return Err(Error::invalid(format!("k = {} outside [1, n = {}]", self.k, self.n)));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::invalid(format!("R = {} must be positive", self.radius)));
        }
        if !(self.h >= 0.0 && self.h.is_finite()) {
            return Err(Error::invalid(format!("h = {} must be finite and >= 0", self.h)));
        }
        if self.h * self.radius >= self.k as f64 {
            return Err(Error::precondition(format!(
                "hR = {} must be < k = {}",
                self.h * self.radius,
                self.k
            )));
        }
        let min = Self::min_hstar(self.k, self.h, self.radius);
        if !(self.hstar.is_finite() && self.hstar >= min * (1.0 - 1e-12)) {
            return Err(Error::precondition(format!(
                "h* = {} below max{{h, h/(k-hR)}} = {min}",
                self.hstar
            )));
        }
        if let Some(a) = self.a {
            let cap = self.radius / std::f64::consts::E;
            if !(a > 0.0 && a <= cap * (1.0 + 1e-12)) {
                return Err(Error::precondition(format!("a = {a} outside (0, R/e = {cap}]")));
            }
        }
        Ok(())
    }
}

/// Non-increasing cutoff with `S = 1` on `[0,1]` and `S = 0` on `[2,∞)`.
#[derive(Clone)]
pub struct CutoffS {
    name: String,
    profile: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for CutoffS {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CutoffS").field("name", &self.name).finish()
    }
}

impl Default for CutoffS {
    fn default() -> Self {
        Self::quintic()
    }
}

/// `10x³ − 15x⁴ + 6x⁵`: rises from 0 to 1 with vanishing first and second
/// derivatives at both ends.
fn quintic_step(x: f64) -> f64 {
    x * x * x * (10.0 + x * (-15.0 + 6.0 * x))
}

impl CutoffS {
    /// `S(t) = 1 − q(t − 1)` on `[1,2]` with `q` the quintic smoothstep; C² overall.
    pub fn quintic() -> Self {
        Self {
            name: "quintic".into(),
            profile: Arc::new(|t: f64| {
                if t <= 1.0 {
                    1.0
                } else if t >= 2.0 {
                    0.0
                } else {
                    1.0 - quintic_step(t - 1.0)
                }
            }),
        }
    }

    /// A caller-supplied cutoff; validated by [`CutoffS::check`].
    pub fn custom(name: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        let s = Self {
            name: name.into(),
            profile: Arc::new(f),
        };
        s.check()?;
        Ok(s)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        (self.profile)(t)
    }

    /// Checks `S ≡ 1` on `[0,1]`, `S ≡ 0` on `[2,∞)` and monotonicity on a 10⁴-point grid.
    pub fn check(&self) -> Result<()> {
        let m = 10_000;
        let mut prev = f64::INFINITY;
        for i in 0..=m {
            let t = 3.0 * i as f64 / m as f64;
            let v = self.eval(t);
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid(format!("S({t}) = {v} is not a finite non-negative value")));
            }
            if t <= 1.0 && v != 1.0 {
                return Err(Error::invalid(format!("S({t}) = {v}, expected 1 on [0,1]")));
            }
            if t >= 2.0 && v != 0.0 {
                return Err(Error::invalid(format!("S({t}) = {v}, expected 0 beyond 2")));
            }
            if v > prev {
                return Err(Error::invalid(format!("S increases near t = {t}")));
            }
            prev = v;
        }
        Ok(())
    }

    /// The moment `Ŝ` matching `k`:
    /// `∫S` (k = 1), `∫ t S max{1, |log t|}` (k = 2), `∫ t S` (k > 2).
    pub fn shat(&self, k: usize) -> Result<f64> {
        let s = |t: f64| self.eval(t);
        match k {
            0 => Err(Error::invalid("k must be >= 1")),
            1 => Ok(quad::integrate(s, 0.0, 1.0)? + quad::integrate(s, 1.0, 2.0)?),
            2 => {
                let inv_e = (-1.0f64).exp();
                let near = |t: f64| if t > 0.0 { -t * t.ln() * s(t) } else { 0.0 };
                let far = |t: f64| t * s(t);
                Ok(quad::integrate(near, 0.0, inv_e)?
                    + quad::integrate(far, inv_e, 1.0)?
                    + quad::integrate(far, 1.0, 2.0)?)
            }
            _ => {
                let far = |t: f64| t * s(t);
                Ok(quad::integrate(far, 0.0, 1.0)? + quad::integrate(far, 1.0, 2.0)?)
            }
        }
    }
}

/// The barrier constant `C₀(k, h*R)` read off the sup-norm estimates:
/// `k e^{h*R}` for k = 1, `2k e^{h*R}` for k = 2, `k e^{h*R}/(k − 2)` for k > 2.
pub fn barrier_constant(k: usize, hstar_r: f64) -> f64 {
    let e = hstar_r.exp();
    let kf = k as f64;
    match k {
        1 => kf * e,
        2 => 2.0 * kf * e,
        _ => kf * e / (kf - 2.0),
    }
}

/// The scale factor multiplying `C₀ Ŝ` in the sup bound: `Ra`, `a² log(R/a)` or `a²`.
pub fn scale_factor(k: usize, radius: f64, a: f64) -> f64 {
    match k {
        1 => radius * a,
        2 => a * a * (radius / a).ln(),
        _ => a * a,
    }
}

/// Proof-explicit bound on `‖u_{x₀}‖∞` over `B_R(x₀)`: `C₀(k, h*R) · Ŝ · scale_factor`.
pub fn barrier_sup_bound(params: &BarrierParams, s: &CutoffS) -> Result<f64> {
    params.validate()?;
    let a = params
        .a
        .ok_or_else(|| Error::invalid("barrier scale a is required for the sup bound"))?;
    Ok(barrier_constant(params.k, params.hstar * params.radius) * s.shat(params.k)? * scale_factor(params.k, params.radius, a))
}

/// Sample locations for a profile.
#[derive(Debug, Clone, PartialEq)]
pub enum GridSpec {
    /// `t_j = R j / m`, `j = 1..=m`.
    Uniform(usize),
    /// Explicit, strictly increasing points in `(0, R]`.
    Points(Vec<f64>),
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::Uniform(DEFAULT_PROFILE_POINTS)
    }
}

/// `(ψ, ψ′, ψ″)` at one radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialJet {
    pub psi: f64,
    pub dpsi: f64,
    pub ddpsi: f64,
}

pub type SourceFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A solved profile sampled on a radial grid.
#[derive(Clone)]
pub struct RadialProfile {
    params: BarrierParams,
    xi: SourceFn,
    xi0: f64,
    series_below: f64,
    grid: Vec<f64>,
    /// `∫₀^{t_j} e^{−h*s} s^{k−1} ξ(s) ds`
    inner: Vec<f64>,
    psi: Vec<f64>,
    dpsi: Vec<f64>,
    ddpsi: Vec<f64>,
    xi_values: Vec<f64>,
}

impl fmt::Debug for RadialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialProfile")
            .field("params", &self.params)
            .field("points", &self.grid.len())
            .finish()
    }
}

/// Solves for `ψ` on the requested grid.
///
/// Fails if the parameters are inadmissible, if `ξ` is negative or increasing
/// on the grid, or if a quadrature panel does not converge.
pub fn solve_psi(params: &BarrierParams, xi: SourceFn, grid: &GridSpec) -> Result<RadialProfile> {
    params.validate()?;
    let radius = params.radius;
    let grid: Vec<f64> = match grid {
        GridSpec::Uniform(m) => {
            if *m == 0 {
                return Err(Error::invalid("profile grid needs at least one point"));
            }
            (1..=*m).map(|j| radius * j as f64 / *m as f64).collect()
        }
        GridSpec::Points(p) => p.clone(),
    };
    for w in grid.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::invalid("profile grid must be strictly increasing"));
        }
    }
    if grid.is_empty() || !(grid[0] > 0.0) || *grid.last().unwrap() > radius * (1.0 + 1e-12) {
        return Err(Error::invalid("profile grid must lie in (0, R]"));
    }

    let xi0 = xi(0.0);
    let xi_values: Vec<f64> = grid.iter().map(|&t| xi(t)).collect();
    let mut prev = xi0;
    for (t, &v) in grid.iter().zip(&xi_values) {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::precondition(format!("source xi({t}) = {v} is negative or non-finite")));
        }
        if v > prev + 1e-14 * prev.abs().max(1.0) {
            return Err(Error::precondition(format!("source xi increases near t = {t}")));
        }
        prev = v;
    }

    let scale = params.a.unwrap_or(radius);
    let mut profile = RadialProfile {
        params: *params,
        xi,
        xi0,
        series_below: SERIES_FRACTION * scale,
        grid: Vec::new(),
        inner: Vec::with_capacity(grid.len()),
        psi: Vec::with_capacity(grid.len()),
        dpsi: Vec::with_capacity(grid.len()),
        ddpsi: Vec::with_capacity(grid.len()),
        xi_values,
    };

    let (mut t_prev, mut inner_prev, mut psi_prev) = (0.0, 0.0, 0.0);
    for (j, &t) in grid.iter().enumerate() {
        let (inner, psi) = profile.advance(t_prev, inner_prev, psi_prev, t)?;
        let dpsi = profile.dpsi_from_inner(t, inner);
        let ddpsi = profile.ddpsi_from(t, dpsi, profile.xi_values[j]);
        profile.inner.push(inner);
        profile.psi.push(psi);
        profile.dpsi.push(dpsi);
        profile.ddpsi.push(ddpsi);
        t_prev = t;
        inner_prev = inner;
        psi_prev = psi;
    }
    profile.grid = grid;
    Ok(profile)
}

impl RadialProfile {
    #[inline]
    fn weight(&self, s: f64) -> f64 {
        let k = self.params.k as i32;
        (-self.params.hstar * s).exp() * s.powi(k - 1) * (self.xi)(s)
    }

    fn dpsi_from_inner(&self, t: f64, inner: f64) -> f64 {
        if t < self.series_below {
            return self.xi0 * t / self.params.k as f64;
        }
        let k = self.params.k as i32;
        (self.params.hstar * t).exp() * inner / t.powi(k - 1)
    }

    fn ddpsi_from(&self, t: f64, dpsi: f64, xi: f64) -> f64 {
        if t < self.series_below {
            return self.xi0 / self.params.k as f64;
        }
        xi + self.params.hstar * dpsi - (self.params.k as f64 - 1.0) * dpsi / t
    }

    /// Integrates inner integral and `ψ` from an anchor `t0` to `t`.
    fn advance(&self, t0: f64, inner0: f64, psi0: f64, t: f64) -> Result<(f64, f64)> {
        if t == t0 {
            return Ok((inner0, psi0));
        }
        let inner = inner0 + quad::integrate(|s| self.weight(s), t0, t)?;
        let dpsi_at = |s: f64| -> f64 {
            if s < self.series_below {
                return self.xi0 * s / self.params.k as f64;
            }
            match quad::integrate(|u| self.weight(u), t0, s) {
                Ok(extra) => self.dpsi_from_inner(s, inner0 + extra),
                Err(_) => f64::NAN,
            }
        };
        let psi = psi0 + quad::integrate(dpsi_at, t0, t)?;
        Ok((inner, psi))
    }

    pub fn params(&self) -> &BarrierParams {
        &self.params
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn psi(&self) -> &[f64] {
        &self.psi
    }

    pub fn dpsi(&self) -> &[f64] {
        &self.dpsi
    }

    pub fn ddpsi(&self) -> &[f64] {
        &self.ddpsi
    }

    pub fn xi_values(&self) -> &[f64] {
        &self.xi_values
    }

    pub fn xi(&self, t: f64) -> f64 {
        (self.xi)(t)
    }

    /// `(ψ, ψ′, ψ″)` at an arbitrary radius in `[0, R]`, integrated from the
    /// nearest grid point below `r`.
    pub fn jet(&self, r: f64) -> Result<RadialJet> {
        if !(r >= 0.0) || r > self.params.radius * (1.0 + 1e-12) {
            return Err(Error::invalid(format!(
                "radius {r} outside [0, R = {}]",
                self.params.radius
            )));
        }
        if r < self.series_below {
            let k = self.params.k as f64;
            return Ok(RadialJet {
                psi: self.xi0 * r * r / (2.0 * k),
                dpsi: self.xi0 * r / k,
                ddpsi: self.xi0 / k,
            });
        }
        let idx = self.grid.partition_point(|&t| t <= r);
        let (t0, inner0, psi0) = if idx == 0 {
            (0.0, 0.0, 0.0)
        } else {
            (self.grid[idx - 1], self.inner[idx - 1], self.psi[idx - 1])
        };
        let (inner, psi) = self.advance(t0, inner0, psi0, r)?;
        let dpsi = self.dpsi_from_inner(r, inner);
        Ok(RadialJet {
            psi,
            dpsi,
            ddpsi: self.ddpsi_from(r, dpsi, self.xi(r)),
        })
    }

    /// `max ψ` over `[0, R]`; `ψ` is non-decreasing, so this is `ψ(R)`.
    pub fn sup_norm(&self) -> Result<f64> {
        let last = *self.grid.last().unwrap();
        if last == self.params.radius {
            Ok(*self.psi.last().unwrap())
        } else {
            Ok(self.jet(self.params.radius)?.psi)
        }
    }

    /// Checks the four pointwise properties of a valid profile on its grid:
    /// `ψ′ ≥ 0`, the limit condition at the smallest radius,
    /// `ψ″ ≤ (1 + h*R) ψ′/t` and `ψ′ ≥ t ξ(t)/k`.
    pub fn check_invariants(&self) -> Result<()> {
        let k = self.params.k as f64;
        let loss = self.params.loss_factor();
        let t_min = self.grid[0];
        let limit = t_min.powi(self.params.k as i32 - 1) * self.dpsi[0];
        if limit.abs() > 1e-6 * self.xi0.max(f64::MIN_POSITIVE) {
            return Err(Error::Numerical(format!(
                "t^(k-1) psi'(t) = {limit:e} at t = {t_min:e} does not vanish"
            )));
        }
        for j in 0..self.grid.len() {
            let t = self.grid[j];
            let (dp, ddp, xi) = (self.dpsi[j], self.ddpsi[j], self.xi_values[j]);
            if dp < 0.0 {
                return Err(Error::Numerical(format!("psi'({t}) = {dp} < 0")));
            }
            if ddp > loss * dp / t + INVARIANT_SLACK {
                return Err(Error::Numerical(format!(
                    "psi''({t}) = {ddp} exceeds (1 + h*R) psi'/t = {}",
                    loss * dp / t
                )));
            }
            if dp < t * xi / k - INVARIANT_SLACK {
                return Err(Error::Numerical(format!("psi'({t}) = {dp} below t xi / k = {}", t * xi / k)));
            }
        }
        Ok(())
    }

    /// Writes `t,psi,dpsi,ddpsi,xi,residual` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let residual = fk_residual_radial(self);
        writeln!(out, "t,psi,dpsi,ddpsi,xi,residual")?;
        for j in 0..self.grid.len() {
            writeln!(
                out,
                "{:e},{:e},{:e},{:e},{:e},{:e}",
                self.grid[j], self.psi[j], self.dpsi[j], self.ddpsi[j], self.xi_values[j], residual[j]
            )?;
        }
        Ok(())
    }
}

/// `P⁻ₖ − h|∇w|` for `w = ψ(r)` in `ℝⁿ`, from the radial jet.
///
/// The Hessian has eigenvalue `ψ″` once and `ψ′/r` with multiplicity `n − 1`.
pub fn radial_operator(n: usize, k: usize, h: f64, r: f64, jet: &RadialJet) -> f64 {
    let tangential = if r > 0.0 { jet.dpsi / r } else { jet.ddpsi };
    let kf = k as f64;
    let p = if k < n && jet.ddpsi > tangential {
        kf * tangential
    } else {
        jet.ddpsi + (kf - 1.0) * tangential
    };
    p - h * jet.dpsi.abs()
}

/// `F⁻ₖ[ψ(r)] − ξ(r)/(1 + h*R)` on the profile grid. Non-negative up to
/// quadrature error for every admissible profile.
pub fn fk_residual_radial(profile: &RadialProfile) -> Vec<f64> {
    let p = &profile.params;
    let loss = p.loss_factor();
    (0..profile.grid.len())
        .map(|j| {
            let jet = RadialJet {
                psi: profile.psi[j],
                dpsi: profile.dpsi[j],
                ddpsi: profile.ddpsi[j],
            };
            radial_operator(p.n, p.k, p.h, profile.grid[j], &jet) - profile.xi_values[j] / loss
        })
        .collect()
}

/// A profile placed at a center: `u(x) = ψ(|x − x₀|)`.
#[derive(Debug, Clone)]
pub struct RadialBarrier {
    center: Vec<f64>,
    profile: Arc<RadialProfile>,
    sup_norm: f64,
}

/// Value, gradient and Hessian of a barrier at one point.
#[derive(Debug, Clone)]
pub struct PointJet {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub hessian: SymMatrix,
}

impl RadialBarrier {
    pub fn new(center: Vec<f64>, profile: Arc<RadialProfile>) -> Result<Self> {
        if center.len() != profile.params.n {
            return Err(Error::DimensionMismatch {
                expected: profile.params.n,
                got: center.len(),
            });
        }
        let sup_norm = profile.sup_norm()?;
        Ok(Self {
            center,
            profile,
            sup_norm,
        })
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn profile(&self) -> &RadialProfile {
        &self.profile
    }

    /// `‖u‖∞` over `B_R(x₀)`.
    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    fn offset(&self, x: &[f64]) -> Result<(Vec<f64>, f64)> {
        if x.len() != self.center.len() {
            return Err(Error::DimensionMismatch {
                expected: self.center.len(),
                got: x.len(),
            });
        }
        let d: Vec<f64> = x.iter().zip(&self.center).map(|(a, b)| a - b).collect();
        let r = crate::spectral::norm(&d);
        Ok((d, r))
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        let (_, r) = self.offset(x)?;
        Ok(self.profile.jet(r)?.psi)
    }

    /// `∇u = ψ′ r̂` and `∇²u = ψ″ r̂r̂ᵀ + (ψ′/r)(I − r̂r̂ᵀ)`.
    pub fn point_jet(&self, x: &[f64]) -> Result<PointJet> {
        let (d, r) = self.offset(x)?;
        let jet = self.profile.jet(r)?;
        let n = d.len();
        let mut hessian = SymMatrix::zeros(n);
        if r < self.profile.series_below || r == 0.0 {
            hessian.add_identity(jet.ddpsi);
            let gradient = d.iter().map(|di| jet.ddpsi * di).collect();
            return Ok(PointJet {
                value: jet.psi,
                gradient,
                hessian,
            });
        }
        let unit: Vec<f64> = d.iter().map(|di| di / r).collect();
        let tangential = jet.dpsi / r;
        hessian.add_identity(tangential);
        hessian.add_outer(jet.ddpsi - tangential, &unit);
        Ok(PointJet {
            value: jet.psi,
            gradient: unit.iter().map(|u| jet.dpsi * u).collect(),
            hessian,
        })
    }
}

/// The source `ξ(t) = k S(t/a)` of a cutoff-driven barrier.
pub fn cutoff_source(k: usize, a: f64, s: &CutoffS) -> SourceFn {
    let s = s.clone();
    let kf = k as f64;
    Arc::new(move |t: f64| kf * s.eval(t / a))
}

/// Solves the cutoff-driven profile on a grid (shared by all barriers with the same `a`).
pub fn barrier_profile(params: &BarrierParams, s: &CutoffS, grid: &GridSpec) -> Result<Arc<RadialProfile>> {
    let a = params
        .a
        .ok_or_else(|| Error::invalid("barrier scale a is required"))?;
    Ok(Arc::new(solve_psi(params, cutoff_source(params.k, a, s), grid)?))
}

/// `u_{x₀}(x) = ψ(|x − x₀|)` with `ξ = k S(·/a)` on the default 10⁴-point grid.
pub fn build_barrier(x0: &[f64], params: &BarrierParams, s: &CutoffS) -> Result<RadialBarrier> {
    build_barrier_on(x0, params, s, &GridSpec::default())
}

pub fn build_barrier_on(x0: &[f64], params: &BarrierParams, s: &CutoffS, grid: &GridSpec) -> Result<RadialBarrier> {
    RadialBarrier::new(x0.to_vec(), barrier_profile(params, s, grid)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant(v: f64) -> SourceFn {
        Arc::new(move |_| v)
    }

    #[test]
    fn params_validation() {
        assert!(BarrierParams::new(3, 2, 1.0, 2.0).is_err()); // hR = k
        assert!(BarrierParams::new(3, 0, 0.0, 1.0).is_err());
        assert!(BarrierParams::new(3, 4, 0.0, 1.0).is_err());
        let p = BarrierParams::new(3, 2, 0.5, 1.0).unwrap();
        assert_eq!(p.hstar, 0.5f64.max(0.5 / 1.5));
        assert!(p.with_hstar(0.1).is_err());
        let p1 = BarrierParams::new(2, 1, 0.9, 1.0).unwrap();
        assert!((p1.hstar - 9.0).abs() < 1e-12);
        assert!(p.with_scale(0.5).is_err());
        assert!(p.with_scale(1.0 / std::f64::consts::E).is_ok());
    }

    #[test]
    fn quintic_cutoff_moments() {
        // Closed forms: ∫S = 3/2, ∫tS = 8/7, ∫tS max(1,|log t|) = 8/7 + 1/(4e²).
        let s = CutoffS::quintic();
        s.check().unwrap();
        let e2 = std::f64::consts::E.powi(2);
        assert!((s.shat(1).unwrap() - 1.5).abs() < 1e-10);
        assert!((s.shat(3).unwrap() - 8.0 / 7.0).abs() < 1e-10);
        assert!((s.shat(2).unwrap() - (8.0 / 7.0 + 0.25 / e2)).abs() < 1e-10);
    }

    #[test]
    fn custom_cutoff_rejected_when_invalid() {
        assert!(CutoffS::custom("late", |t| if t < 2.5 { 1.0 } else { 0.0 }).is_err());
        assert!(CutoffS::custom("bump", |t| if t < 1.0 { 1.0 } else if t < 1.5 { 1.2 } else { 0.0 }).is_err());
        assert!(CutoffS::custom("step", |t| if t <= 1.5 { 1.0 } else { 0.0 }).is_ok());
    }

    #[test]
    fn constant_source_without_drift_is_quadratic() {
        for k in 1..=5 {
            let p = BarrierParams::new(6, k, 0.0, 1.0).unwrap();
            let prof = solve_psi(&p, constant(k as f64), &GridSpec::Uniform(200)).unwrap();
            for (j, &t) in prof.grid().iter().enumerate() {
                assert!((prof.dpsi()[j] - t).abs() < 1e-11, "k={k} t={t}");
                assert!((prof.psi()[j] - 0.5 * t * t).abs() < 1e-11);
                assert!((prof.ddpsi()[j] - 1.0).abs() < 1e-9);
            }
            let res = fk_residual_radial(&prof);
            assert!(res.iter().all(|r| r.abs() < 1e-9));
        }
    }

    #[test]
    fn exponential_closed_form_for_k1() {
        // ψ′ = eᵗ − 1, ψ = eᵗ − 1 − t for k = 1, h* = 1, ξ ≡ 1.
        let p = BarrierParams::new(2, 1, 0.0, 1.0).unwrap().with_hstar(1.0).unwrap();
        let prof = solve_psi(&p, constant(1.0), &GridSpec::Uniform(1000)).unwrap();
        for (j, &t) in prof.grid().iter().enumerate() {
            assert!((prof.dpsi()[j] - t.exp_m1()).abs() < 1e-9);
            assert!((prof.psi()[j] - (t.exp_m1() - t)).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_bad_sources_and_grids() {
        let p = BarrierParams::new(3, 2, 0.0, 1.0).unwrap();
        let increasing: SourceFn = Arc::new(|t| t);
        assert!(matches!(
            solve_psi(&p, increasing, &GridSpec::Uniform(10)),
            Err(Error::Precondition(_))
        ));
        let negative: SourceFn = Arc::new(|_| -1.0);
        assert!(solve_psi(&p, negative, &GridSpec::Uniform(10)).is_err());
        assert!(solve_psi(&p, constant(1.0), &GridSpec::Points(vec![0.5, 0.2])).is_err());
        assert!(solve_psi(&p, constant(1.0), &GridSpec::Points(vec![0.5, 2.0])).is_err());
    }

    #[test]
    fn cutoff_profile_satisfies_invariants() {
        let r = 1.0;
        let a = 0.2;
        let p = BarrierParams::new(4, 3, 0.0, r).unwrap().with_hstar(0.5).unwrap().with_scale(a).unwrap();
        let prof = barrier_profile(&p, &CutoffS::quintic(), &GridSpec::Uniform(10_000)).unwrap();
        prof.check_invariants().unwrap();
        // ψ′ recovered by fourth-order central differences of ψ (uniform grid)
        let g = prof.grid();
        let step = g[1] - g[0];
        let psi = prof.psi();
        for j in (2..g.len() - 2).step_by(97) {
            let fd = (-psi[j + 2] + 8.0 * psi[j + 1] - 8.0 * psi[j - 1] + psi[j - 2]) / (12.0 * step);
            let rel = (fd - prof.dpsi()[j]).abs() / prof.dpsi()[j].abs().max(1e-300);
            assert!(rel < 1e-6, "t = {}: {fd} vs {}", g[j], prof.dpsi()[j]);
        }
    }

    #[test]
    fn residual_zero_where_source_vanishes_is_nonnegative() {
        let p = BarrierParams::from_hr(3, 2, 0.5, 1.0).unwrap().with_scale(0.1).unwrap();
        let prof = barrier_profile(&p, &CutoffS::quintic(), &GridSpec::Uniform(2000)).unwrap();
        let res = fk_residual_radial(&prof);
        for (t, r) in prof.grid().iter().zip(&res) {
            if *t >= 0.2 {
                // ξ = 0 here: F⁻ₖ[w] ≥ 0 up to rounding
                assert!(*r >= -1e-14, "t={t}: {r}");
            }
            assert!(*r >= -1e-8);
        }
    }

    #[test]
    fn jet_off_grid_matches_dense_profile() {
        let p = BarrierParams::from_hr(3, 2, 0.25, 1.0).unwrap().with_scale(0.1).unwrap();
        let s = CutoffS::quintic();
        let coarse = barrier_profile(&p, &s, &GridSpec::Uniform(50)).unwrap();
        let fine = barrier_profile(&p, &s, &GridSpec::Uniform(5000)).unwrap();
        for j in (0..5000).step_by(37) {
            let t = fine.grid()[j];
            let jet = coarse.jet(t).unwrap();
            assert!((jet.psi - fine.psi()[j]).abs() < 1e-11);
            assert!((jet.dpsi - fine.dpsi()[j]).abs() < 1e-10);
            assert!((jet.ddpsi - fine.ddpsi()[j]).abs() < 1e-9);
        }
        assert!(coarse.jet(1.5).is_err());
    }

    #[test]
    fn barrier_vanishes_only_at_center() {
        let a = 0.1;
        let p = BarrierParams::from_hr(3, 2, 0.5, 1.0).unwrap().with_scale(a).unwrap();
        let b = build_barrier(&[0.1, 0.2, 0.3], &p, &CutoffS::quintic()).unwrap();
        assert_eq!(b.value(&[0.1, 0.2, 0.3]).unwrap(), 0.0);
        for r in [a / 2.0, a, 2.0 * a, 1.0] {
            assert!(b.value(&[0.1 + r, 0.2, 0.3]).unwrap() > 0.0);
        }
        assert!(b.sup_norm() <= barrier_sup_bound(&p, &CutoffS::quintic()).unwrap());
    }

    #[test]
    fn sup_bound_plug_in_values() {
        // Ŝ is passed through the cutoff, so use constant-moment checks.
        let e = std::f64::consts::E;
        assert!((barrier_constant(1, 0.0) * 1.0 * scale_factor(1, 1.0, 1.0 / e) - 1.0 / e).abs() < 1e-15);
        assert!((barrier_constant(3, 0.0) * scale_factor(3, 1.0, 0.1) - 0.03).abs() < 1e-15);
        assert!((barrier_constant(2, 0.0) - 4.0).abs() < 1e-15);
    }

    #[test]
    fn point_jet_matches_finite_differences() {
        let p = BarrierParams::from_hr(3, 2, 0.5, 1.0).unwrap().with_scale(0.2).unwrap();
        let b = build_barrier_on(&[0.0; 3], &p, &CutoffS::quintic(), &GridSpec::Uniform(500)).unwrap();
        let x = [0.1, 0.15, -0.2];
        let jet = b.point_jet(&x).unwrap();
        let eps = 1e-4;
        for i in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[i] += eps;
            xm[i] -= eps;
            let g = (b.value(&xp).unwrap() - b.value(&xm).unwrap()) / (2.0 * eps);
            assert!((g - jet.gradient[i]).abs() < 1e-7);
            let gp = b.point_jet(&xp).unwrap().gradient;
            let gm = b.point_jet(&xm).unwrap().gradient;
            for l in 0..3 {
                let hfd = (gp[l] - gm[l]) / (2.0 * eps);
                assert!((hfd - jet.hessian.get(i, l)).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn csv_export_has_header_and_rows() {
        let p = BarrierParams::new(2, 1, 0.0, 1.0).unwrap().with_scale(0.2).unwrap();
        let prof = barrier_profile(&p, &CutoffS::quintic(), &GridSpec::Uniform(5)).unwrap();
        let mut buf = Vec::new();
        prof.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,psi,dpsi,ddpsi,xi,residual");
        assert_eq!(lines.len(), 6);
    }
}
