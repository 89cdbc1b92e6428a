//! Global negative supersolutions assembled from ball covers, and the
//! eigenvalue lower bound they certify.
//!
//! Given balls `B_{rᵢ}(xᵢ)` covering a set inside `Ω` (diameter at most `R`),
//! each ball contributes the cutoff barrier `uᵢ` with scale `a = rᵢ`, and
//!
//! ```text
//! w = ((1 + h*R)/k) Σᵢ (uᵢ − 2‖uᵢ‖∞)
//! ```
//!
//! is negative on `Ω̄` with `F⁻ₖ[w] ≥ 1` on the cover. Since `‖w‖∞ ≤ C₁Q`,
//! `F⁻ₖ[w] + w/(C₁Q) ≥ 0` there, so `1/(C₁Q)` bounds the principal eigenvalue
//! of the cover from below.

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covering::{cover_sum, BallCover, Gauge};
use crate::error::{Error, Result};
use crate::radial::{barrier_constant, barrier_profile, BarrierParams, CutoffS, GridSpec, RadialBarrier, RadialProfile};
use crate::spectral::{fk_value, Sign, SymMatrix};

/// Slack allowed in the supersolution inequality for quadrature error.
pub const VERIFY_TOL: f64 = 1e-6;

/// Relative slack when testing membership in `Ω̄`.
const DOMAIN_SLACK: f64 = 1e-12;

/// The ambient open set `Ω`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase", deny_unknown_fields)]
pub enum Region {
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

impl Region {
    pub fn dim(&self) -> usize {
        match self {
            Region::Ball { center, .. } => center.len(),
            Region::Box { lo, .. } => lo.len(),
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            Region::Ball { radius, .. } => 2.0 * radius,
            Region::Box { lo, hi } => lo.iter().zip(hi).map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt(),
        }
    }

    /// Membership in the closure `Ω̄`.
    pub fn contains_closure(&self, x: &[f64]) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        let slack = DOMAIN_SLACK * self.diameter().max(1.0);
        match self {
            Region::Ball { center, radius } => {
                let d2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                d2.sqrt() <= radius + slack
            }
            Region::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(v, (a, b))| *v >= a - slack && *v <= b + slack),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Region::Ball { center, radius } => {
                if center.is_empty() || !(*radius > 0.0 && radius.is_finite()) {
                    return Err(Error::invalid("ball region needs a center and a positive radius"));
                }
            }
            Region::Box { lo, hi } => {
                if lo.is_empty() || lo.len() != hi.len() || lo.iter().zip(hi).any(|(a, b)| !(a < b)) {
                    return Err(Error::invalid("box region needs lo < hi componentwise"));
                }
            }
        }
        Ok(())
    }

    pub fn scaled(&self, s: f64) -> Self {
        match self {
            Region::Ball { center, radius } => Region::Ball {
                center: center.iter().map(|c| c * s).collect(),
                radius: radius * s,
            },
            Region::Box { lo, hi } => Region::Box {
                lo: lo.iter().map(|c| c * s).collect(),
                hi: hi.iter().map(|c| c * s).collect(),
            },
        }
    }
}

/// An assembled supersolution together with its certified constants.
#[derive(Debug, Clone)]
pub struct SupersolutionCertificate {
    cover: BallCover,
    region: Region,
    params: BarrierParams,
    cutoff: CutoffS,
    barriers: Vec<RadialBarrier>,
    q: f64,
    c1: f64,
    sup_w: f64,
    eigen_lower: f64,
}

/// Serializable summary of a certificate; [`SupersolutionCertificate::from_record`] rebuilds the barriers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateRecord {
    pub cover: BallCover,
    pub region: Region,
    pub params: BarrierParams,
    pub cutoff: String,
    pub gauge: Gauge,
    #[serde(rename = "Q")]
    pub q: f64,
    #[serde(rename = "C1")]
    pub c1: f64,
    pub sup_w: f64,
    pub barrier_sup_norms: Vec<f64>,
    pub eigen_lower: f64,
}

/// Builds `w` for a cover of a set inside `region`.
///
/// `params` supplies `n, k, h, R, h*`; its scale `a` is ignored, each ball uses
/// its own radius. Barriers of equal radius share one radial profile.
pub fn assemble_supersolution(
    cover: &BallCover,
    region: &Region,
    params: &BarrierParams,
    s: &CutoffS,
) -> Result<SupersolutionCertificate> {
    assemble_on(cover, region, params, s, &GridSpec::default())
}

pub fn assemble_on(
    cover: &BallCover,
    region: &Region,
    params: &BarrierParams,
    s: &CutoffS,
    grid: &GridSpec,
) -> Result<SupersolutionCertificate> {
    if cover.is_empty() {
        return Err(Error::invalid("cover is empty"));
    }
    params.validate()?;
    region.validate()?;
    if region.dim() != params.n {
        return Err(Error::DimensionMismatch {
            expected: params.n,
            got: region.dim(),
        });
    }
    if region.diameter() > params.radius * (1.0 + DOMAIN_SLACK) {
        return Err(Error::precondition(format!(
            "diam(Ω) = {} exceeds R = {}",
            region.diameter(),
            params.radius
        )));
    }
    let gauge = Gauge::for_k(params.k, params.radius)?;
    let mut profiles: BTreeMap<u64, Arc<RadialProfile>> = BTreeMap::new();
    let mut barriers = Vec::with_capacity(cover.len());
    for ball in &cover.balls {
        if !region.contains_closure(&ball.center) {
            return Err(Error::precondition(format!("ball center {:?} lies outside Ω", ball.center)));
        }
        let key = ball.radius.to_bits();
        let profile = match profiles.get(&key) {
            Some(p) => p.clone(),
            None => {
                let p = barrier_profile(&params.with_scale(ball.radius)?, s, grid)?;
                profiles.insert(key, p.clone());
                p
            }
        };
        barriers.push(RadialBarrier::new(ball.center.clone(), profile)?);
    }
    let q = cover_sum(&gauge, cover)?;
    let weight = params.loss_factor() / params.k as f64;
    let c0 = barrier_constant(params.k, params.hstar * params.radius);
    let c1 = 2.0 * weight * c0 * s.shat(params.k)?;
    let sup_w = 2.0 * weight * barriers.iter().map(|b| b.sup_norm()).sum::<f64>();
    Ok(SupersolutionCertificate {
        cover: cover.clone(),
        region: region.clone(),
        params: *params,
        cutoff: s.clone(),
        barriers,
        q,
        c1,
        sup_w,
        eigen_lower: 1.0 / (c1 * q),
    })
}

/// Value, gradient and Hessian of `w` at a point.
#[derive(Debug, Clone)]
pub struct SupersolutionJet {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub hessian: SymMatrix,
}

impl SupersolutionCertificate {
    pub fn cover(&self) -> &BallCover {
        &self.cover
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn params(&self) -> &BarrierParams {
        &self.params
    }

    pub fn barriers(&self) -> &[RadialBarrier] {
        &self.barriers
    }

    /// `Σ Ψ(rᵢ)` in the gauge matching `k`.
    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn c1(&self) -> f64 {
        self.c1
    }

    /// `((1 + h*R)/k) · 2 Σ ‖uᵢ‖∞`, an upper bound for `‖w‖∞` on `Ω̄`.
    pub fn sup_w(&self) -> f64 {
        self.sup_w
    }

    fn weight(&self) -> f64 {
        self.params.loss_factor() / self.params.k as f64
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if !self.region.contains_closure(x) {
            return Err(Error::precondition(format!("point {x:?} lies outside the closure of Ω")));
        }
        Ok(())
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        let mut sum = 0.0;
        for b in &self.barriers {
            sum += b.value(x)? - 2.0 * b.sup_norm();
        }
        Ok(self.weight() * sum)
    }

    pub fn jet(&self, x: &[f64]) -> Result<SupersolutionJet> {
        self.check_point(x)?;
        let n = self.params.n;
        let mut value = 0.0;
        let mut gradient = vec![0.0; n];
        let mut hessian = SymMatrix::zeros(n);
        for b in &self.barriers {
            let j = b.point_jet(x)?;
            value += j.value - 2.0 * b.sup_norm();
            for (g, d) in gradient.iter_mut().zip(&j.gradient) {
                *g += d;
            }
            hessian = hessian.add(&j.hessian)?;
        }
        let wgt = self.weight();
        Ok(SupersolutionJet {
            value: wgt * value,
            gradient: gradient.into_iter().map(|g| wgt * g).collect(),
            hessian: hessian.scaled(wgt),
        })
    }

    /// `F⁻ₖ[w](x)`.
    pub fn operator_value(&self, x: &[f64]) -> Result<f64> {
        let j = self.jet(x)?;
        fk_value(&j.hessian, &j.gradient, self.params.k, self.params.h, Sign::Minus)
    }

    /// `(F⁻ₖ[Σ uᵢ](x), Σ F⁻ₖ[uᵢ](x))`; the first is never smaller by superadditivity.
    pub fn superadditivity_witness(&self, x: &[f64]) -> Result<(f64, f64)> {
        self.check_point(x)?;
        let (n, k, h) = (self.params.n, self.params.k, self.params.h);
        let mut gradient = vec![0.0; n];
        let mut hessian = SymMatrix::zeros(n);
        let mut parts = 0.0;
        for b in &self.barriers {
            let j = b.point_jet(x)?;
            parts += fk_value(&j.hessian, &j.gradient, k, h, Sign::Minus)?;
            for (g, d) in gradient.iter_mut().zip(&j.gradient) {
                *g += d;
            }
            hessian = hessian.add(&j.hessian)?;
        }
        Ok((fk_value(&hessian, &gradient, k, h, Sign::Minus)?, parts))
    }

    pub fn record(&self) -> CertificateRecord {
        CertificateRecord {
            cover: self.cover.clone(),
            region: self.region.clone(),
            params: self.params,
            cutoff: self.cutoff.name().to_string(),
            gauge: Gauge::for_k(self.params.k, self.params.radius).expect("validated at assembly"),
            q: self.q,
            c1: self.c1,
            sup_w: self.sup_w,
            barrier_sup_norms: self.barriers.iter().map(|b| b.sup_norm()).collect(),
            eigen_lower: self.eigen_lower,
        }
    }

    /// Re-assembles from a record, checking that the stored constants reproduce.
    pub fn from_record(rec: &CertificateRecord, s: &CutoffS) -> Result<Self> {
        if rec.cutoff != s.name() {
            return Err(Error::invalid(format!(
                "record was built with cutoff '{}', got '{}'",
                rec.cutoff,
                s.name()
            )));
        }
        let cert = assemble_supersolution(&rec.cover, &rec.region, &rec.params, s)?;
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs());
        if !(close(cert.q, rec.q) && close(cert.c1, rec.c1) && close(cert.sup_w, rec.sup_w)) {
            return Err(Error::invalid("certificate constants do not reproduce"));
        }
        Ok(cert)
    }
}

/// `1/(C₁Q)`.
pub fn eigen_lower_bound(cert: &SupersolutionCertificate) -> f64 {
    cert.eigen_lower
}

/// One probe of [`verify_strict_supersolution`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeResult {
    pub point: Vec<f64>,
    pub inside_cover: bool,
    pub w: f64,
    pub operator: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub probes: Vec<ProbeResult>,
    /// `min F⁻ₖ[w]` over probes inside the cover (`+∞` if none).
    pub min_inside: f64,
    /// `min F⁻ₖ[w]` over probes outside the cover (`+∞` if none).
    pub min_outside: f64,
    pub max_w: f64,
    pub passed: bool,
}

impl VerificationReport {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let dim = self.probes.first().map_or(0, |p| p.point.len());
        let mut header: Vec<String> = (0..dim).map(|i| format!("x{i}")).collect();
        header.extend(["inside", "w", "operator"].map(String::from));
        writeln!(out, "{}", header.join(","))?;
        for p in &self.probes {
            let coords: Vec<String> = p.point.iter().map(|v| format!("{v:.17e}")).collect();
            writeln!(
                out,
                "{},{},{:.17e},{:.17e}",
                coords.join(","),
                u8::from(p.inside_cover),
                p.w,
                p.operator
            )?;
        }
        Ok(())
    }
}

/// Evaluates `w` and `F⁻ₖ[w]` analytically at every probe and checks
/// `w < 0`, `F⁻ₖ[w] ≥ 1 − tol` on the cover and `≥ −tol` elsewhere.
pub fn verify_strict_supersolution(cert: &SupersolutionCertificate, probes: &[Vec<f64>]) -> Result<VerificationReport> {
    let probes: Vec<ProbeResult> = probes
        .par_iter()
        .map(|x| {
            let j = cert.jet(x)?;
            let op = fk_value(&j.hessian, &j.gradient, cert.params.k, cert.params.h, Sign::Minus)?;
            Ok(ProbeResult {
                point: x.clone(),
                inside_cover: cert.cover.contains(x),
                w: j.value,
                operator: op,
            })
        })
        .collect::<Result<_>>()?;
    let mut min_inside = f64::INFINITY;
    let mut min_outside = f64::INFINITY;
    let mut max_w = f64::NEG_INFINITY;
    for p in &probes {
        if p.inside_cover {
            min_inside = min_inside.min(p.operator);
        } else {
            min_outside = min_outside.min(p.operator);
        }
        max_w = max_w.max(p.w);
    }
    let passed = max_w < 0.0 && min_inside >= 1.0 - VERIFY_TOL && min_outside >= -VERIFY_TOL;
    Ok(VerificationReport {
        probes,
        min_inside,
        min_outside,
        max_w,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covering::{greedy_cover, Ball, CompactSetSample};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_ball3() -> Region {
        Region::Ball {
            center: vec![0.0; 3],
            radius: 0.5,
        }
    }

    fn single(k: usize, h: f64) -> SupersolutionCertificate {
        let params = BarrierParams::new(3, k, h, 1.0).unwrap();
        let cover = BallCover::new(vec![Ball {
            center: vec![0.0; 3],
            radius: 0.1,
        }])
        .unwrap();
        assemble_supersolution(&cover, &unit_ball3(), &params, &CutoffS::default()).unwrap()
    }

    fn random_in_ball(rng: &mut ChaCha8Rng, c: &[f64], r: f64) -> Vec<f64> {
        loop {
            let x: Vec<f64> = c.iter().map(|ci| ci + r * rng.gen_range(-1.0..1.0)).collect();
            let d2: f64 = x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum();
            if d2 <= r * r {
                return x;
            }
        }
    }

    #[test]
    fn single_ball_k3() {
        let cert = single(3, 0.0);
        let u = cert.barriers()[0].sup_norm();
        assert!((cert.value(&[0.0; 3]).unwrap() + 2.0 / 3.0 * u).abs() < 1e-15);
        assert!(cert.sup_w() <= cert.c1() * cert.q());
        assert_eq!(eigen_lower_bound(&cert), 1.0 / (cert.c1() * cert.q()));
    }

    #[test]
    fn center_and_far_probes() {
        let cert = single(2, 0.5);
        let rep = verify_strict_supersolution(&cert, &[vec![0.0; 3], vec![0.45, 0.0, 0.0]]).unwrap();
        assert!(rep.probes[0].operator >= 1.0);
        // ξ = 0 there: non-negative up to rounding
        assert!(rep.probes[1].operator >= -1e-12, "{}", rep.probes[1].operator);
        assert!(rep.passed);
    }

    #[test]
    fn rejects_bad_inputs() {
        let params = BarrierParams::new(3, 2, 0.5, 1.0).unwrap();
        let s = CutoffS::default();
        assert!(assemble_supersolution(&BallCover { balls: vec![] }, &unit_ball3(), &params, &s).is_err());
        let outside = BallCover::new(vec![Ball {
            center: vec![0.9, 0.0, 0.0],
            radius: 0.1,
        }])
        .unwrap();
        assert!(assemble_supersolution(&outside, &unit_ball3(), &params, &s).is_err());
        let too_big = BallCover::new(vec![Ball {
            center: vec![0.0; 3],
            radius: 0.5,
        }])
        .unwrap();
        assert!(assemble_supersolution(&too_big, &unit_ball3(), &params, &s).is_err());
        let wide = Region::Ball {
            center: vec![0.0; 3],
            radius: 0.6,
        };
        let ok = BallCover::new(vec![Ball {
            center: vec![0.0; 3],
            radius: 0.1,
        }])
        .unwrap();
        assert!(assemble_supersolution(&ok, &wide, &params, &s).is_err());
        let cert = single(2, 0.5);
        assert!(cert.value(&[0.6, 0.0, 0.0]).is_err());
    }

    #[test]
    fn three_ball_probe_sweep() {
        let params = BarrierParams::from_hr(3, 2, 0.5, 1.0).unwrap();
        let cover = BallCover::new(vec![
            Ball { center: vec![-0.2, 0.0, 0.0], radius: 0.1 },
            Ball { center: vec![0.0, 0.05, 0.0], radius: 0.1 },
            Ball { center: vec![0.2, 0.0, 0.03], radius: 0.1 },
        ])
        .unwrap();
        let cert = assemble_supersolution(&cover, &unit_ball3(), &params, &CutoffS::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut probes = Vec::new();
        for i in 0..10_000 {
            let b = &cover.balls[i % 3];
            probes.push(random_in_ball(&mut rng, &b.center, b.radius));
        }
        for _ in 0..2_000 {
            probes.push(random_in_ball(&mut rng, &[0.0; 3], 0.5));
        }
        let rep = verify_strict_supersolution(&cert, &probes).unwrap();
        assert!(rep.min_inside >= 1.0 - VERIFY_TOL, "{}", rep.min_inside);
        assert!(rep.min_outside >= -VERIFY_TOL, "{}", rep.min_outside);
        assert!(rep.max_w < 0.0);
        assert!(rep.passed);
        for x in probes.iter().step_by(97) {
            let (whole, parts) = cert.superadditivity_witness(x).unwrap();
            assert!(whole >= parts - 1e-12 * parts.abs().max(1.0));
        }
    }

    #[test]
    fn sup_w_within_certificate_along_segment_covers() {
        let e = CompactSetSample::segment(&[-0.2, 0.0, 0.0], &[0.2, 0.0, 0.0], 1e-3).unwrap();
        let params = BarrierParams::from_hr(3, 2, 0.5, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut prev = 0.0;
        for delta in [0.1, 0.05, 0.025] {
            let cover = greedy_cover(&e, delta).unwrap().inflated(e.sampling_gap);
            let cert = assemble_supersolution(&cover, &unit_ball3(), &params, &CutoffS::default()).unwrap();
            let mut measured: f64 = 0.0;
            for _ in 0..2_000 {
                let x = random_in_ball(&mut rng, &[0.0; 3], 0.5);
                let w = cert.value(&x).unwrap();
                assert!(w < 0.0);
                measured = measured.max(-w);
            }
            assert!(measured <= cert.sup_w());
            assert!(cert.sup_w() <= cert.c1() * cert.q());
            let lb = eigen_lower_bound(&cert);
            assert!(lb > prev, "bound must grow as the cover refines");
            prev = lb;
        }
    }

    #[test]
    fn scaling_law() {
        let e = CompactSetSample::segment(&[-0.2, 0.0, 0.0], &[0.2, 0.0, 0.0], 1e-3).unwrap();
        let cover = greedy_cover(&e, 0.05).unwrap().inflated(e.sampling_gap);
        for k in [1usize, 2, 3] {
            let base = BarrierParams::from_hr(3, k, 0.5, 1.0).unwrap();
            let cert = assemble_supersolution(&cover, &unit_ball3(), &base, &CutoffS::default()).unwrap();
            for s in [0.5, 2.0] {
                let scaled = BarrierParams::new(3, k, base.h / s, s).unwrap();
                let c2 = assemble_supersolution(&cover.scaled(s), &unit_ball3().scaled(s), &scaled, &CutoffS::default())
                    .unwrap();
                let ratio = eigen_lower_bound(&c2) * s * s / eigen_lower_bound(&cert);
                assert!((ratio - 1.0).abs() < 1e-12, "k={k} s={s} ratio={ratio}");
            }
        }
    }

    #[test]
    fn record_roundtrip() {
        let cert = single(2, 0.5);
        let json = serde_json::to_string(&cert.record()).unwrap();
        let rec: CertificateRecord = serde_json::from_str(&json).unwrap();
        let back = SupersolutionCertificate::from_record(&rec, &CutoffS::default()).unwrap();
        assert_eq!(back.record(), cert.record());
        let mut csv = Vec::new();
        verify_strict_supersolution(&cert, &[vec![0.0; 3]])
            .unwrap()
            .write_csv(&mut csv)
            .unwrap();
        assert!(String::from_utf8(csv).unwrap().starts_with("x0,x1,x2,inside,w,operator\n"));
    }
}
