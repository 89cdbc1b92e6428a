//! One function per subcommand. Each takes resolved parameters and returns an
//! [`Output`]; nothing here touches stdout or the filesystem except the
//! optional eigenfunction dump.

use std::collections::BTreeMap;
use std::f64::consts::E;
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use trunclap::covering::{
    greedy_cover, hausdorff_upper, headline_bound, BallCover, CompactSetSample, Gauge,
};
use trunclap::eigen::{
    flow_bisection, principal_eigenvalue, radial_shooting_oracle, EigenEstimate, FlowEstimate, ShootingEstimate,
    SolverConfig,
};
use trunclap::grid::{DomainSpec, FkOperator, GridDomain, StencilFrameSet};
use trunclap::radial::{
    barrier_constant, barrier_profile, barrier_sup_bound, fk_residual_radial, BarrierParams, CutoffS, GridSpec,
};
use trunclap::spectral::{
    eigenvalues_sorted, fk_value, pk_minus, pk_plus, trace_over_subspace, KFrame, Sign, SymMatrix,
};
use trunclap::supersol::{assemble_supersolution, eigen_lower_bound, verify_strict_supersolution, Region, SupersolutionCertificate, VERIFY_TOL};

use crate::error::{CliError, CliResult};
use crate::output::{num, Output, Table};
use crate::params::*;

/// Tolerance of every identity in the spectral suite.
pub const IDENTITY_TOL: f64 = 1e-10;
/// Floor on the radial residual `F⁻ₖ[ψ] − ξ/(1 + h*R)`.
pub const RESIDUAL_FLOOR: f64 = -1e-8;
/// Required growth of the certified bound per refinement step.
pub const BOUND_GROWTH: f64 = 1.5;
/// Relative tolerance of the scale law.
pub const SCALE_TOL: f64 = 0.01;

fn solver_tolerances(cfg: &SolverConfig) -> Value {
    serde_json::to_value(cfg).unwrap_or(Value::Null)
}

// ---------------------------------------------------------------- pk-eval

pub fn pk_eval(a: &PkEvalArgs) -> CliResult<Output> {
    if let Some(count) = a.suite {
        return spectral_suite(count, a.seed);
    }
    let m = a
        .matrix
        .as_ref()
        .ok_or_else(|| CliError::Usage("pk-eval needs --matrix or --suite".into()))?;
    let m = SymMatrix::from_rows(&m.0)?;
    let minus = pk_minus(&m, a.k)?;
    let plus = pk_plus(&m, a.k)?;
    let sign = match a.sign {
        SignArg::Minus => Sign::Minus,
        SignArg::Plus => Sign::Plus,
    };
    let value = match &a.gradient {
        Some(g) => fk_value(&m, g, a.k, a.h, sign)?,
        None if a.h != 0.0 => return Err(CliError::Usage("--h needs --gradient".into())),
        None => match sign {
            Sign::Minus => minus,
            Sign::Plus => plus,
        },
    };
    let mut table = Table::new(&["k", "pk_minus", "pk_plus", "value"]);
    table.push(vec![a.k.to_string(), num(minus), num(plus), num(value)]);
    Ok(Output {
        data: json!({
            "k": a.k,
            "eigenvalues": eigenvalues_sorted(&m).eigenvalues,
            "pk_minus": minus,
            "pk_plus": plus,
            "value": value,
        }),
        table: Some(table),
        text: Some(num(value)),
        ..Output::default()
    })
}

/// Largest violation of each identity over the suite.
#[derive(Debug, Clone, Serialize)]
pub struct IdentityViolations {
    pub duality: f64,
    pub trace_split: f64,
    pub homogeneity: f64,
    pub superadditivity: f64,
    pub monotonicity: f64,
    pub min_max: f64,
    pub averaging: f64,
}

impl IdentityViolations {
    fn rows(&self) -> [(&'static str, f64); 7] {
        [
            ("duality", self.duality),
            ("trace_split", self.trace_split),
            ("homogeneity", self.homogeneity),
            ("superadditivity", self.superadditivity),
            ("monotonicity", self.monotonicity),
            ("min_max", self.min_max),
            ("averaging", self.averaging),
        ]
    }

    pub fn worst(&self) -> f64 {
        self.rows().iter().map(|r| r.1).fold(0.0, f64::max)
    }
}

fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> CliResult<SymMatrix> {
    Ok(SymMatrix::new(n, (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect())?)
}

/// Checks the truncated-trace identities on `count` random symmetric matrices
/// with `n` uniform in 2..=8 and every `k` in 1..=n.
pub fn identity_violations(count: usize, seed: u64) -> CliResult<IdentityViolations> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = IdentityViolations {
        duality: 0.0,
        trace_split: 0.0,
        homogeneity: 0.0,
        superadditivity: 0.0,
        monotonicity: 0.0,
        min_max: 0.0,
        averaging: 0.0,
    };
    for _ in 0..count {
        let n = rng.gen_range(2..=8usize);
        let a = random_matrix(&mut rng, n)?;
        let b = random_matrix(&mut rng, n)?;
        let m = random_matrix(&mut rng, n)?;
        // MᵀM is positive semidefinite
        let psd_rows: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| (0..n).map(|l| m.get(l, i) * m.get(l, j)).sum()).collect())
            .collect();
        let psd = SymMatrix::from_rows(&psd_rows)?;
        let t = rng.gen_range(0.0..10.0);
        let neg = a.scaled(-1.0);
        let scaled = a.scaled(t);
        let sum = a.add(&b)?;
        let raised = a.add(&psd)?;
        let decomp = eigenvalues_sorted(&a);
        let tr = a.trace();
        for k in 1..=n {
            let pm = pk_minus(&a, k)?;
            v.duality = v.duality.max((pk_plus(&a, k)? + pk_minus(&neg, k)?).abs());
            if k < n {
                v.trace_split = v.trace_split.max((pm + pk_plus(&a, n - k)? - tr).abs());
            }
            v.homogeneity = v.homogeneity.max((pk_minus(&scaled, k)? - t * pm).abs());
            v.superadditivity = v.superadditivity.max(pm + pk_minus(&b, k)? - pk_minus(&sum, k)?);
            v.monotonicity = v.monotonicity.max(pm - pk_minus(&raised, k)?);
            let raw: Vec<Vec<f64>> = (0..k).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
            if let Ok(w) = KFrame::orthonormalize(n, &raw) {
                v.min_max = v.min_max.max(pm - trace_over_subspace(&a, &w)?);
            }
            let bottom = decomp.bottom_frame(k)?;
            v.min_max = v.min_max.max((trace_over_subspace(&a, &bottom)? - pm).abs());
            v.averaging = v.averaging.max(pm - k as f64 / n as f64 * tr);
        }
    }
    Ok(v)
}

fn spectral_suite(count: usize, seed: u64) -> CliResult<Output> {
    let v = identity_violations(count, seed)?;
    let mut table = Table::new(&["identity", "max_violation", "tolerance", "passed"]);
    for (name, worst) in v.rows() {
        table.push(vec![name.into(), num(worst), num(IDENTITY_TOL), (worst <= IDENTITY_TOL).to_string()]);
    }
    let passed = v.worst() <= IDENTITY_TOL;
    Ok(Output {
        data: json!({ "samples": count, "seed": seed, "violations": v, "tolerance": IDENTITY_TOL, "passed": passed }),
        text: Some(table.to_csv().trim_end().to_string()),
        table: Some(table),
        passed: Some(passed),
        tolerances: json!({ "identity": IDENTITY_TOL }),
        ..Output::default()
    })
}

// ---------------------------------------------------------------- barrier

/// One `(k, hR, a)` case of the radial residual check.
#[derive(Debug, Clone, Serialize)]
pub struct BarrierCase {
    pub n: usize,
    pub k: usize,
    #[serde(rename = "hR")]
    pub h_r: f64,
    pub a: f64,
    pub min_residual: f64,
    pub sup_norm: f64,
    pub sup_bound: f64,
    pub invariants_ok: bool,
    pub passed: bool,
}

pub fn barrier_case(n: usize, k: usize, h_r: f64, radius: f64, a: f64, points: usize) -> CliResult<BarrierCase> {
    let params = BarrierParams::from_hr(n, k, h_r, radius)?.with_scale(a)?;
    let s = CutoffS::quintic();
    let profile = barrier_profile(&params, &s, &GridSpec::Uniform(points))?;
    let min_residual = fk_residual_radial(&profile).into_iter().fold(f64::INFINITY, f64::min);
    let sup_norm = profile.sup_norm()?;
    let sup_bound = barrier_sup_bound(&params, &s)?;
    // reported only: the limit check at the first grid point is grid dependent for k = 1
    let invariants_ok = profile.check_invariants().is_ok();
    Ok(BarrierCase {
        n,
        k,
        h_r,
        a,
        min_residual,
        sup_norm,
        sup_bound,
        invariants_ok,
        passed: min_residual >= RESIDUAL_FLOOR && sup_norm <= sup_bound,
    })
}

pub fn barrier(a: &BarrierArgs) -> CliResult<Output> {
    let tolerances = json!({ "residual_floor": RESIDUAL_FLOOR, "points": a.points });
    if a.sweep {
        let mut cases = Vec::new();
        for k in [1usize, 2, 3, 5] {
            for h_r in [0.0, 0.25 * k as f64, 0.9 * k as f64] {
                for scale in [a.radius / E, a.radius / 10.0, a.radius / 100.0] {
                    cases.push(barrier_case(k + 1, k, h_r, a.radius, scale, a.points)?);
                }
            }
        }
        let mut table = Table::new(&["n", "k", "hR", "a", "min_residual", "sup_norm", "sup_bound", "passed"]);
        for c in &cases {
            table.push(vec![
                c.n.to_string(),
                c.k.to_string(),
                num(c.h_r),
                num(c.a),
                num(c.min_residual),
                num(c.sup_norm),
                num(c.sup_bound),
                c.passed.to_string(),
            ]);
        }
        let passed = cases.iter().all(|c| c.passed);
        return Ok(Output {
            data: json!({ "R": a.radius, "cases": cases, "passed": passed }),
            table: Some(table),
            passed: Some(passed),
            tolerances,
            ..Output::default()
        });
    }
    let n = a.n.unwrap_or(a.k + 1);
    let scale = a.a.unwrap_or(a.radius / E);
    let params = BarrierParams::from_hr(n, a.k, a.h_r, a.radius)?.with_scale(scale)?;
    let s = CutoffS::quintic();
    let profile = barrier_profile(&params, &s, &GridSpec::Uniform(a.points))?;
    let residual = fk_residual_radial(&profile);
    let case = barrier_case(n, a.k, a.h_r, a.radius, scale, a.points)?;
    let mut table = Table::new(&["t", "psi", "dpsi", "ddpsi", "xi", "residual"]);
    for j in 0..profile.grid().len() {
        table.push(vec![
            num(profile.grid()[j]),
            num(profile.psi()[j]),
            num(profile.dpsi()[j]),
            num(profile.ddpsi()[j]),
            num(profile.xi_values()[j]),
            num(residual[j]),
        ]);
    }
    Ok(Output {
        data: json!({ "params": params, "shat": s.shat(a.k)?, "summary": case }),
        table: Some(table),
        passed: Some(case.passed),
        tolerances,
        ..Output::default()
    })
}

// ---------------------------------------------------------------- cover

pub fn cover(a: &CoverArgs) -> CliResult<Output> {
    let e = a.set.value()?.sample()?;
    let gauge = Gauge::for_k(a.k, a.radius)?;
    let rows = hausdorff_upper(&e, &gauge, &a.deltas)?;
    let finest = a.deltas.iter().copied().fold(f64::INFINITY, f64::min);
    let cover = greedy_cover(&e, finest)?.inflated(e.sampling_gap);
    let mut table = Table::new(&["delta", "balls", "bound"]);
    for r in &rows {
        table.push(vec![num(r.delta), r.balls.to_string(), num(r.bound)]);
    }
    Ok(Output {
        data: json!({
            "gauge": gauge,
            "samples": e.points.len(),
            "sampling_gap": e.sampling_gap,
            "rows": rows,
            "headline": headline_bound(&rows),
            "cover": cover,
        }),
        table: Some(table),
        ..Output::default()
    })
}

// ---------------------------------------------------------------- certify

/// `Ω` and the barrier parameters shared by every cover of one set.
#[derive(Debug, Clone)]
pub struct CertificateSetup {
    pub sample: CompactSetSample,
    pub region: Region,
    pub params: BarrierParams,
}

/// Ω is the ball about the bounding center of `E` with `region_scale` times its
/// bounding radius, enlarged if needed so that `R = diam Ω` admits ball radii
/// up to `max_delta + gap` in the gauge.
pub fn certificate_setup(
    sample: CompactSetSample,
    k: usize,
    h_r: f64,
    max_delta: f64,
    region_scale: f64,
) -> CliResult<CertificateSetup> {
    if !(region_scale >= 1.0) {
        return Err(CliError::Usage("region_scale must be >= 1".into()));
    }
    let (center, rho) = sample.bounding_ball();
    let reach = max_delta + sample.sampling_gap;
    let radius = (region_scale * rho).max(0.5 * E * reach * (1.0 + 1e-9));
    let region = Region::Ball { center, radius };
    let params = BarrierParams::from_hr(sample.dim(), k, h_r, 2.0 * radius)?;
    Ok(CertificateSetup { sample, region, params })
}

pub fn certificate_at(setup: &CertificateSetup, delta: f64) -> CliResult<SupersolutionCertificate> {
    let cover = greedy_cover(&setup.sample, delta)?.inflated(setup.sample.sampling_gap);
    Ok(assemble_supersolution(&cover, &setup.region, &setup.params, &CutoffS::quintic())?)
}

fn uniform_in_ball(rng: &mut ChaCha8Rng, center: &[f64], radius: f64) -> Vec<f64> {
    loop {
        let v: Vec<f64> = center.iter().map(|_| rng.gen_range(-1.0..1.0)).collect();
        if v.iter().map(|x| x * x).sum::<f64>() <= 1.0 {
            return v.iter().zip(center).map(|(x, c)| c + radius * x).collect();
        }
    }
}

/// Ball centers, then alternately a uniform point of a random cover ball and a
/// uniform point of Ω.
pub fn probe_points(cover: &BallCover, region: &Region, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<Vec<f64>> = cover.balls.iter().map(|b| b.center.clone()).collect();
    while out.len() < count.max(cover.len()) {
        let x = if out.len() % 2 == 0 {
            let b = &cover.balls[rng.gen_range(0..cover.len())];
            uniform_in_ball(&mut rng, &b.center, b.radius)
        } else {
            match region {
                Region::Ball { center, radius } => uniform_in_ball(&mut rng, center, *radius),
                Region::Box { lo, hi } => lo.iter().zip(hi).map(|(a, b)| rng.gen_range(*a..=*b)).collect(),
            }
        };
        if region.contains_closure(&x) {
            out.push(x);
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationSummary {
    pub probes: usize,
    pub min_inside: f64,
    pub min_outside: f64,
    pub max_w: f64,
    pub passed: bool,
}

pub fn certify(a: &CertifyArgs) -> CliResult<Output> {
    let setup = certificate_setup(a.set.value()?.sample()?, a.k, a.h_r, a.delta, a.region_scale)?;
    let cert = certificate_at(&setup, a.delta)?;
    let probes = probe_points(cert.cover(), cert.region(), a.probes, a.seed);
    let report = verify_strict_supersolution(&cert, &probes)?;
    let dim = setup.params.n;
    let mut header: Vec<String> = (0..dim).map(|i| format!("x{i}")).collect();
    header.extend(["inside", "w", "operator"].map(String::from));
    let mut table = Table {
        header,
        rows: Vec::new(),
    };
    for p in &report.probes {
        let mut row: Vec<String> = p.point.iter().map(|v| num(*v)).collect();
        row.extend([u8::from(p.inside_cover).to_string(), num(p.w), num(p.operator)]);
        table.push(row);
    }
    let summary = VerificationSummary {
        probes: report.probes.len(),
        min_inside: report.min_inside,
        min_outside: report.min_outside,
        max_w: report.max_w,
        passed: report.passed,
    };
    Ok(Output {
        data: json!({
            "certificate": cert.record(),
            "verification": summary,
            "eigen_lower": eigen_lower_bound(&cert),
        }),
        table: Some(table),
        passed: Some(report.passed),
        tolerances: json!({ "verify": VERIFY_TOL }),
        ..Output::default()
    })
}

// ---------------------------------------------------------------- verify-bound

/// Lattice nodes at `spacing` strictly inside some ball of the cover.
pub fn cover_neighborhood(cover: &BallCover, spacing: f64) -> CliResult<GridDomain> {
    let dim = cover.dim().ok_or_else(|| CliError::Usage("empty cover".into()))?;
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for b in &cover.balls {
        for j in 0..dim {
            lo[j] = lo[j].min(b.center[j] - b.radius);
            hi[j] = hi[j].max(b.center[j] + b.radius);
        }
    }
    // snap to the global lattice spacing·ℤⁿ so refinements nest
    let origin: Vec<f64> = lo.iter().map(|v| ((v / spacing).floor() - 1.0) * spacing).collect();
    let extent: Vec<usize> = hi
        .iter()
        .zip(&origin)
        .map(|(h, o)| ((h - o) / spacing).ceil() as usize + 2)
        .collect();
    Ok(GridDomain::from_predicate(dim, spacing, origin, extent, |x| {
        cover.balls.iter().any(|b| {
            let d2: f64 = x.iter().zip(&b.center).map(|(p, c)| (p - c) * (p - c)).sum();
            d2 < b.radius * b.radius
        })
    })?)
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundRow {
    pub delta: f64,
    pub balls: usize,
    #[serde(rename = "Q")]
    pub q: f64,
    #[serde(rename = "C1")]
    pub c1: f64,
    pub sup_w: f64,
    pub bound: f64,
    pub verification: VerificationSummary,
    pub grid_spacing: f64,
    pub grid_nodes: usize,
    pub mu: f64,
    pub mu_residual: f64,
}

pub fn verify_bound(a: &VerifyBoundArgs) -> CliResult<Output> {
    if a.deltas.is_empty() || a.divisions == 0 {
        return Err(CliError::Usage("need at least one delta and divisions >= 1".into()));
    }
    let max_delta = a.deltas.iter().copied().fold(0.0, f64::max);
    let setup = certificate_setup(a.set.value()?.sample()?, a.k, a.h_r, max_delta, a.region_scale)?;
    let cfg = a.solver.config();
    let frames = StencilFrameSet::build(setup.params.n, a.k, 1)?;
    let mut rows = Vec::new();
    for (i, &delta) in a.deltas.iter().enumerate() {
        let cert = certificate_at(&setup, delta)?;
        let probes = probe_points(cert.cover(), cert.region(), a.probes, a.seed.wrapping_add(i as u64));
        let report = verify_strict_supersolution(&cert, &probes)?;
        let spacing = delta / a.divisions as f64;
        let domain = Arc::new(cover_neighborhood(cert.cover(), spacing)?);
        let est = principal_eigenvalue(&FkOperator::new(domain.clone(), &frames, setup.params.h)?, &cfg)?;
        rows.push(BoundRow {
            delta,
            balls: cert.cover().len(),
            q: cert.q(),
            c1: cert.c1(),
            sup_w: cert.sup_w(),
            bound: eigen_lower_bound(&cert),
            verification: VerificationSummary {
                probes: report.probes.len(),
                min_inside: report.min_inside,
                min_outside: report.min_outside,
                max_w: report.max_w,
                passed: report.passed,
            },
            grid_spacing: spacing,
            grid_nodes: domain.len(),
            mu: est.mu,
            mu_residual: est.residual,
        });
    }
    let q_decreasing = rows.windows(2).all(|w| w[1].q < w[0].q);
    let growth: Vec<f64> = rows.windows(2).map(|w| w[1].bound / w[0].bound).collect();
    let grows = growth.iter().all(|&g| g >= BOUND_GROWTH);
    let verified = rows.iter().all(|r| r.verification.passed);
    let below_mu = rows.iter().all(|r| r.bound <= r.mu);
    let passed = q_decreasing && grows && verified && below_mu;
    let mut table = Table::new(&["delta", "balls", "Q", "C1", "bound", "min_inside", "verified", "grid_nodes", "mu"]);
    for r in &rows {
        table.push(vec![
            num(r.delta),
            r.balls.to_string(),
            num(r.q),
            num(r.c1),
            num(r.bound),
            num(r.verification.min_inside),
            r.verification.passed.to_string(),
            r.grid_nodes.to_string(),
            num(r.mu),
        ]);
    }
    Ok(Output {
        data: json!({
            "region": setup.region,
            "params": setup.params,
            "rows": rows,
            "bound_growth": growth,
            "checks": {
                "q_decreasing": q_decreasing,
                "bound_growth_at_least": BOUND_GROWTH,
                "bound_grows": grows,
                "all_verified": verified,
                "bound_below_grid_mu": below_mu,
            },
            "passed": passed,
        }),
        table: Some(table),
        passed: Some(passed),
        tolerances: json!({ "verify": VERIFY_TOL, "solver": solver_tolerances(&cfg) }),
        ..Output::default()
    })
}

// ---------------------------------------------------------------- eig

fn ball_radius(spec: &DomainSpec) -> Option<f64> {
    (spec.shape == "ball").then(|| spec.params.get("radius").and_then(Value::as_f64)).flatten()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Results of the requested methods on one domain.
#[derive(Debug, Clone, Serialize)]
pub struct EigReport {
    pub nodes: usize,
    pub domain_hash: String,
    pub inverse_power: Option<trunclap::eigen::EigenSummary>,
    pub policy_updates: Option<usize>,
    pub flow: Option<FlowEstimate>,
    pub shooting: Option<ShootingEstimate>,
    /// `|flow − inverse power| / inverse power`.
    pub flow_rel_diff: Option<f64>,
    /// `|inverse power − shooting| / shooting`.
    pub shooting_rel_diff: Option<f64>,
}

pub fn eig_report(a: &EigArgs) -> CliResult<(EigReport, Option<EigenEstimate>)> {
    let spec = a.domain.value()?;
    let domain = Arc::new(GridDomain::from_spec(spec)?);
    let frames = StencilFrameSet::build(domain.dim(), a.k, a.width)?;
    let op = FkOperator::new(domain.clone(), &frames, a.h)?;
    let wants = |m: MethodArg| a.method.contains(&m);
    let need_ip = wants(MethodArg::InversePower)
        || (wants(MethodArg::Flow) && a.bracket.is_none())
        || (wants(MethodArg::Shooting) && wants(MethodArg::InversePower));
    let ip = if need_ip { Some(principal_eigenvalue(&op, &a.solver.config())?) } else { None };
    let flow = if wants(MethodArg::Flow) {
        let (lo, hi) = match (&a.bracket, &ip) {
            (Some(b), _) if b.len() == 2 => (b[0], b[1]),
            (Some(_), _) => return Err(CliError::Usage("--bracket takes two values".into())),
            (None, Some(e)) => (0.5 * e.mu, 2.0 * e.mu),
            (None, None) => unreachable!(),
        };
        Some(flow_bisection(&op, (lo, hi), a.flow_tol * hi.abs())?)
    } else {
        None
    };
    let shooting = if wants(MethodArg::Shooting) {
        let r = ball_radius(spec)
            .ok_or_else(|| CliError::Usage("the shooting oracle needs a ball domain with params.radius".into()))?;
        Some(radial_shooting_oracle(r, domain.dim(), a.k, a.h, a.shooting_tol)?)
    } else {
        None
    };
    let report = EigReport {
        nodes: domain.len(),
        domain_hash: domain.hash(),
        inverse_power: ip.as_ref().map(EigenEstimate::summary),
        policy_updates: ip.as_ref().map(|e| e.policy_updates),
        flow_rel_diff: flow.zip(ip.as_ref()).map(|(f, e)| rel(f.mu, e.mu)),
        shooting_rel_diff: shooting.zip(ip.as_ref()).map(|(s, e)| rel(e.mu, s.mu)),
        flow,
        shooting,
    };
    Ok((report, ip))
}

pub fn write_eigenfunction(est: &EigenEstimate, path: &Path) -> CliResult<()> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    if path.extension().is_some_and(|e| e == "bin") {
        est.eigenfunction.write_binary(file)?;
    } else {
        est.eigenfunction.write_csv(file)?;
    }
    Ok(())
}

pub fn eig(a: &EigArgs) -> CliResult<Output> {
    let (report, ip) = eig_report(a)?;
    let mut extra_files = Vec::new();
    if let Some(path) = &a.eigenfunction {
        let est = ip
            .as_ref()
            .ok_or_else(|| CliError::Usage("--eigenfunction needs the inverse-power method".into()))?;
        write_eigenfunction(est, path)?;
        extra_files.push(path.clone());
    }
    let mut table = Table::new(&["method", "mu", "residual", "iterations"]);
    if let Some(s) = &report.inverse_power {
        table.push(vec!["inverse_power".into(), num(s.mu), num(s.residual), s.iterations.to_string()]);
    }
    if let Some(f) = &report.flow {
        table.push(vec!["flow_bisection".into(), num(f.mu), String::new(), f.trials.to_string()]);
    }
    if let Some(s) = &report.shooting {
        table.push(vec!["shooting".into(), num(s.mu), num(s.step_change), s.steps.to_string()]);
    }
    let cfg = a.solver.config();
    Ok(Output {
        data: serde_json::to_value(&report)?,
        table: Some(table),
        tolerances: json!({ "solver": solver_tolerances(&cfg), "flow_tol": a.flow_tol, "shooting_tol": a.shooting_tol }),
        extra_files,
        ..Output::default()
    })
}

// ---------------------------------------------------------------- annulus

#[derive(Debug, Clone, Serialize)]
pub struct AnnulusRow {
    pub eps: f64,
    pub spacing: f64,
    pub nodes: usize,
    pub mu: f64,
    pub residual: f64,
    pub flow_mu: Option<f64>,
    pub flow_error: Option<String>,
}

pub fn annulus(a: &AnnulusArgs) -> CliResult<Output> {
    if a.divisions == 0 || a.eps.is_empty() {
        return Err(CliError::Usage("need eps values and divisions >= 1".into()));
    }
    let h = a.h.unwrap_or(a.k as f64 / a.mid_radius);
    let cfg = a.solver.config();
    let frames = StencilFrameSet::build(2, a.k, 1)?;
    let mut rows = Vec::new();
    for &eps in &a.eps {
        let spacing = eps / a.divisions as f64;
        let d = GridDomain::annulus(2, spacing, &[0.0, 0.0], a.mid_radius - eps, a.mid_radius + eps)?;
        let nodes = d.len();
        let op = FkOperator::new(Arc::new(d), &frames, h)?;
        let est = principal_eigenvalue(&op, &cfg)?;
        let (flow_mu, flow_error) = if a.flow {
            match flow_bisection(&op, (0.5 * est.mu, 2.0 * est.mu), 2e-3 * est.mu) {
                Ok(f) => (Some(f.mu), None),
                Err(e) => (None, Some(e.to_string())),
            }
        } else {
            (None, None)
        };
        rows.push(AnnulusRow {
            eps,
            spacing,
            nodes,
            mu: est.mu,
            residual: est.residual,
            flow_mu,
            flow_error,
        });
    }
    let decreasing = rows.windows(2).all(|w| w[1].mu < w[0].mu);
    let halved = rows.last().unwrap().mu < 0.5 * rows[0].mu;
    let passed = decreasing && halved;
    let mut table = Table::new(&["eps", "spacing", "nodes", "mu", "residual", "flow_mu"]);
    for r in &rows {
        table.push(vec![
            num(r.eps),
            num(r.spacing),
            r.nodes.to_string(),
            num(r.mu),
            num(r.residual),
            r.flow_mu.map(num).unwrap_or_default(),
        ]);
    }
    Ok(Output {
        data: json!({
            "k": a.k,
            "h": h,
            "mid_radius": a.mid_radius,
            "rows": rows,
            "strictly_decreasing": decreasing,
            "last_below_half_first": halved,
            "passed": passed,
        }),
        table: Some(table),
        passed: Some(passed),
        tolerances: json!({ "solver": solver_tolerances(&cfg) }),
        ..Output::default()
    })
}

// ---------------------------------------------------------------- scale-check

#[derive(Debug, Clone, Serialize)]
pub struct ScaleRow {
    pub quantity: &'static str,
    pub s: f64,
    pub base: f64,
    pub scaled: f64,
    /// `scaled · s² / base − 1`.
    pub rel_error: f64,
}

pub fn scale_check(a: &ScaleCheckArgs) -> CliResult<Output> {
    let cfg = a.solver.config();
    let frames = StencilFrameSet::build(2, a.disc_k, 1)?;
    let disc = GridDomain::ball(2, 1.0 / a.disc_divisions as f64, &[0.0, 0.0], 1.0)?;
    let h = a.disc_h_r;
    let base_mu = principal_eigenvalue(&FkOperator::new(Arc::new(disc.clone()), &frames, h)?, &cfg)?.mu;

    let setup = certificate_setup(a.set.value()?.sample()?, a.k, a.h_r, a.delta, a.region_scale)?;
    let cert = certificate_at(&setup, a.delta)?;
    let base_bound = eigen_lower_bound(&cert);

    let mut rows = Vec::new();
    for &s in &a.scales {
        if !(s > 0.0) {
            return Err(CliError::Usage("scales must be positive".into()));
        }
        let op = FkOperator::new(Arc::new(disc.scaled(s)?), &frames, h / s)?;
        let mu = principal_eigenvalue(&op, &cfg)?.mu;
        rows.push(ScaleRow {
            quantity: "disc_mu",
            s,
            base: base_mu,
            scaled: mu,
            rel_error: mu * s * s / base_mu - 1.0,
        });
        let p = &setup.params;
        let params = BarrierParams::new(p.n, p.k, p.h / s, p.radius * s)?;
        let scaled = assemble_supersolution(&cert.cover().scaled(s), &cert.region().scaled(s), &params, &CutoffS::quintic())?;
        let bound = eigen_lower_bound(&scaled);
        rows.push(ScaleRow {
            quantity: "certified_bound",
            s,
            base: base_bound,
            scaled: bound,
            rel_error: bound * s * s / base_bound - 1.0,
        });
    }
    let passed = rows.iter().all(|r| r.rel_error.abs() <= SCALE_TOL);
    let mut table = Table::new(&["quantity", "s", "base", "scaled", "rel_error"]);
    for r in &rows {
        table.push(vec![r.quantity.into(), num(r.s), num(r.base), num(r.scaled), num(r.rel_error)]);
    }
    Ok(Output {
        data: json!({ "rows": rows, "tolerance": SCALE_TOL, "passed": passed }),
        table: Some(table),
        passed: Some(passed),
        tolerances: json!({ "scale": SCALE_TOL, "solver": solver_tolerances(&cfg) }),
        ..Output::default()
    })
}

// ---------------------------------------------------------------- constants

/// The constants of the supersolution bound for given `k` and `hR`.
pub fn report_constants(k: usize, h_r: f64, radius: f64) -> CliResult<Value> {
    let params = BarrierParams::from_hr(k, k, h_r, radius)?;
    let hstar = params.hstar;
    let loss = params.loss_factor();
    let c0 = barrier_constant(k, hstar * radius);
    let shat = CutoffS::quintic().shat(k)?;
    let chat1 = c0 * shat;
    let c1 = 2.0 * loss / k as f64 * chat1;
    let (case, c0_formula) = match k {
        1 => ("k = 1", "C0 = k e^{h*R}, from ||u|| <= e^{h*R} R k S^ a"),
        2 => ("k = 2", "C0 = 2k e^{h*R}, from ||u|| <= 2k e^{h*R} S^ a^2 log(R/a)"),
        _ => ("k > 2", "C0 = k e^{h*R}/(k-2), from ||u|| <= e^{h*R} k S^/(k-2) a^2"),
    };
    let mut provenance = BTreeMap::new();
    provenance.insert("hstar", "h* = max{h, h/(k - hR)}, the drift absorbed by the radial barrier");
    provenance.insert("loss_factor", "1 + h*R, the loss in F[u] >= xi/(1 + h*R)");
    provenance.insert("C0", c0_formula);
    provenance.insert("S_hat", "S^ = moment of the quintic cutoff matching k");
    provenance.insert("C1_hat", "C1^ = C0 S^, the barrier constant");
    provenance.insert("C1", "C1 = 2((1 + h*R)/k) C1^, from ||w|| <= 2((1 + h*R)/k) C1^ Q");
    Ok(json!({
        "k": k,
        "hR": h_r,
        "R": radius,
        "h": params.h,
        "hstar": hstar,
        "loss_factor": loss,
        "C0_case": case,
        "C0": c0,
        "S_hat": shat,
        "C1_hat": chat1,
        "C1": c1,
        "provenance": provenance,
    }))
}

pub fn constants(a: &ConstantsArgs) -> CliResult<Output> {
    let data = report_constants(a.k, a.h_r, a.radius)?;
    let mut table = Table::new(&["name", "value"]);
    for key in ["hstar", "loss_factor", "C0", "S_hat", "C1_hat", "C1"] {
        table.push(vec![key.into(), num(data[key].as_f64().unwrap_or(f64::NAN))]);
    }
    Ok(Output {
        data,
        table: Some(table),
        ..Output::default()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pk_eval_example() {
        let a = PkEvalArgs {
            matrix: Some(Matrix(vec![vec![3.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 2.0]])),
            k: 2,
            h: 0.0,
            gradient: None,
            sign: SignArg::Minus,
            suite: None,
            seed: 0,
        };
        assert_eq!(pk_eval(&a).unwrap().text.as_deref(), Some("3"));
    }

    #[test]
    fn constants_plug_in() {
        let c = report_constants(2, 0.0, 1.0).unwrap();
        assert_eq!(c["hstar"], 0.0);
        let expect = c["C0"].as_f64().unwrap() * c["S_hat"].as_f64().unwrap();
        assert!((c["C1"].as_f64().unwrap() - expect).abs() < 1e-12 * expect);
        let c = report_constants(2, 1.0, 1.0).unwrap();
        assert!((c["hstar"].as_f64().unwrap() - 1.0).abs() < 1e-15);
        let c = report_constants(1, 0.9, 1.0).unwrap();
        assert!((c["hstar"].as_f64().unwrap() - 9.0).abs() < 1e-9);
        assert!(report_constants(1, 1.0, 1.0).is_err());
    }

    #[test]
    fn neighborhood_contains_only_cover_nodes() {
        let cover = BallCover::new(vec![trunclap::covering::Ball {
            center: vec![0.0, 0.0, 0.0],
            radius: 0.1,
        }])
        .unwrap();
        let d = cover_neighborhood(&cover, 0.02).unwrap();
        for i in 0..d.len() {
            assert!(cover.contains(&d.point(i)));
        }
        // 4/3 π (0.1/0.02)³ ≈ 524 lattice points
        assert!((400..650).contains(&d.len()), "{}", d.len());
    }

    #[test]
    fn probes_are_seeded_and_inside() {
        let setup = certificate_setup(
            trunclap::covering::CompactSetSample::segment(&[0.0, 0.0, 0.0], &[1.0, 0.0, 0.0], 0.01).unwrap(),
            2,
            0.5,
            0.1,
            2.0,
        )
        .unwrap();
        let cert = certificate_at(&setup, 0.1).unwrap();
        let p = probe_points(cert.cover(), cert.region(), 200, 3);
        assert_eq!(p, probe_points(cert.cover(), cert.region(), 200, 3));
        assert!(p.iter().all(|x| cert.region().contains_closure(x)));
        assert!(p.iter().filter(|x| cert.cover().contains(x)).count() >= 100);
    }
}
