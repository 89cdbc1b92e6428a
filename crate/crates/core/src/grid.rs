//! Lattice domains, grid functions and a monotone wide-stencil discretization
//! of `F⁻ₖ[u] = P⁻ₖ(∇²u) − h|∇u|`.
//!
//! `P⁻ₖ(A)` is the minimum of `tr_W A` over k-dimensional subspaces `W`. The
//! scheme replaces subspaces by k-tuples of mutually orthogonal lattice
//! directions and each `eᵀ∇²u e/|e|²` by a centered second difference along `e`.
//! The gradient norm is upwinded per axis (`max(D⁻, −D⁺, 0)`), so the discrete
//! operator is nonincreasing in the center value and nondecreasing in every
//! neighbor value.
//!
//! Lattice nodes are `origin + spacing·(i₀, …, i_{n−1})`, stored row-major
//! (last index fastest). Nodes outside the mask take the Dirichlet value.

use std::io::{BufRead, Read, Write};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::spectral::SymMatrix;

/// Marks a lattice neighbor that is not an interior node.
pub const OUTSIDE: u32 = u32::MAX;

/// Relative slack used when deciding strict membership of lattice points.
const SHAPE_SLACK: f64 = 1e-12;

const BINARY_MAGIC: &[u8; 4] = b"TLGF";
const BINARY_VERSION: u32 = 1;

/// A finite set of interior lattice nodes with Dirichlet data on the rest of the lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDomain {
    dim: usize,
    spacing: f64,
    origin: Vec<f64>,
    extent: Vec<usize>,
    mask: Vec<bool>,
    boundary_value: f64,
    interior: Vec<usize>,
    slot: Vec<u32>,
}

/// JSON description `{"dim":2,"spacing":h,"shape":"ball|annulus|box|mask","params":{...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub dim: usize,
    pub spacing: f64,
    pub shape: String,
    pub params: serde_json::Value,
    #[serde(default)]
    pub boundary_value: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BallShape {
    #[serde(default)]
    center: Option<Vec<f64>>,
    radius: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AnnulusShape {
    #[serde(default)]
    center: Option<Vec<f64>>,
    inner: f64,
    outer: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BoxShape {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MaskShape {
    origin: Vec<f64>,
    extent: Vec<usize>,
    /// Multi-indices of interior nodes.
    interior: Vec<Vec<usize>>,
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

impl GridDomain {
    pub fn new(
        dim: usize,
        spacing: f64,
        origin: Vec<f64>,
        extent: Vec<usize>,
        mask: Vec<bool>,
        boundary_value: f64,
    ) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return Err(Error::invalid(format!("lattice dimension {dim} not in {{2, 3}}")));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::invalid(format!("spacing {spacing} must be positive")));
        }
        if origin.len() != dim || extent.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: if origin.len() != dim { origin.len() } else { extent.len() },
            });
        }
        let total: usize = extent.iter().product();
        if mask.len() != total {
            return Err(Error::invalid(format!("mask has {} entries, lattice has {total}", mask.len())));
        }
        if total >= OUTSIDE as usize {
            return Err(Error::invalid("lattice too large"));
        }
        if !boundary_value.is_finite() || origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::invalid("origin and boundary value must be finite"));
        }
        let interior: Vec<usize> = (0..total).filter(|&i| mask[i]).collect();
        if interior.is_empty() {
            return Err(Error::invalid("domain has no interior nodes"));
        }
        let mut slot = vec![OUTSIDE; total];
        for (s, &i) in interior.iter().enumerate() {
            slot[i] = s as u32;
        }
        Ok(Self {
            dim,
            spacing,
            origin,
            extent,
            mask,
            boundary_value,
            interior,
            slot,
        })
    }

    /// Interior nodes are the lattice points `x` with `inside(x)`.
    pub fn from_predicate(
        dim: usize,
        spacing: f64,
        origin: Vec<f64>,
        extent: Vec<usize>,
        inside: impl Fn(&[f64]) -> bool,
    ) -> Result<Self> {
        let total: usize = extent.iter().product();
        let mut mask = vec![false; total];
        let mut idx = vec![0usize; dim];
        let mut x = vec![0.0; dim];
        for (lin, m) in mask.iter_mut().enumerate() {
            unravel(lin, &extent, &mut idx);
            for j in 0..dim {
                x[j] = origin[j] + spacing * idx[j] as f64;
            }
            *m = inside(&x);
        }
        Self::new(dim, spacing, origin, extent, mask, 0.0)
    }

    /// Lattice through `center` restricted to `|x − center| < radius`.
    pub fn ball(dim: usize, spacing: f64, center: &[f64], radius: f64) -> Result<Self> {
        Self::shell(dim, spacing, center, None, radius)
    }

    /// Lattice through `center` restricted to `inner < |x − center| < outer`.
    pub fn annulus(dim: usize, spacing: f64, center: &[f64], inner: f64, outer: f64) -> Result<Self> {
        if !(inner > 0.0 && inner < outer) {
            return Err(Error::invalid(format!("annulus radii must satisfy 0 < {inner} < {outer}")));
        }
        Self::shell(dim, spacing, center, Some(inner), outer)
    }

    fn shell(dim: usize, spacing: f64, center: &[f64], inner: Option<f64>, outer: f64) -> Result<Self> {
        if center.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: center.len(),
            });
        }
        if !(outer > 0.0 && outer.is_finite() && spacing > 0.0) {
            return Err(Error::invalid("ball radius and spacing must be positive"));
        }
        let m = (outer / spacing * (1.0 + SHAPE_SLACK)).floor() as usize;
        let origin: Vec<f64> = center.iter().map(|c| c - m as f64 * spacing).collect();
        let extent = vec![2 * m + 1; dim];
        let hi = outer * (1.0 - SHAPE_SLACK);
        let lo = inner.map(|r| r * (1.0 + SHAPE_SLACK));
        Self::from_predicate(dim, spacing, origin, extent, |x| {
            let d = dist(x, center);
            d < hi && lo.map_or(true, |l| d > l)
        })
    }

    /// Lattice anchored at `lo` restricted to the open box `(lo, hi)`.
    pub fn box_domain(spacing: f64, lo: &[f64], hi: &[f64]) -> Result<Self> {
        let dim = lo.len();
        if hi.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: hi.len() });
        }
        if lo.iter().zip(hi).any(|(a, b)| !(a < b)) {
            return Err(Error::invalid("box needs lo < hi componentwise"));
        }
        let extent: Vec<usize> = lo
            .iter()
            .zip(hi)
            .map(|(a, b)| ((b - a) / spacing * (1.0 + SHAPE_SLACK)).floor() as usize + 1)
            .collect();
        let slack = SHAPE_SLACK * spacing;
        Self::from_predicate(dim, spacing, lo.to_vec(), extent, |x| {
            x.iter()
                .zip(lo.iter().zip(hi))
                .all(|(v, (a, b))| *v > a + slack && *v < b - slack)
        })
    }

    pub fn from_spec(spec: &DomainSpec) -> Result<Self> {
        let dim = spec.dim;
        let params = spec.params.clone();
        let centre = |c: Option<Vec<f64>>| c.unwrap_or_else(|| vec![0.0; dim]);
        let d = match spec.shape.as_str() {
            "ball" => {
                let p: BallShape = serde_json::from_value(params)?;
                Self::ball(dim, spec.spacing, &centre(p.center), p.radius)?
            }
            "annulus" => {
                let p: AnnulusShape = serde_json::from_value(params)?;
                Self::annulus(dim, spec.spacing, &centre(p.center), p.inner, p.outer)?
            }
            "box" => {
                let p: BoxShape = serde_json::from_value(params)?;
                if p.lo.len() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, got: p.lo.len() });
                }
                Self::box_domain(spec.spacing, &p.lo, &p.hi)?
            }
            "mask" => {
                let p: MaskShape = serde_json::from_value(params)?;
                if p.extent.len() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, got: p.extent.len() });
                }
                let total: usize = p.extent.iter().product();
                let mut mask = vec![false; total];
                for mi in &p.interior {
                    if mi.len() != dim || mi.iter().zip(&p.extent).any(|(i, e)| i >= e) {
                        return Err(Error::invalid(format!("mask index {mi:?} outside the lattice")));
                    }
                    mask[ravel(mi, &p.extent)] = true;
                }
                Self::new(dim, spec.spacing, p.origin, p.extent, mask, 0.0)?
            }
            other => return Err(Error::invalid(format!("unknown domain shape '{other}'"))),
        };
        if d.dim != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: d.dim });
        }
        d.with_boundary_value(spec.boundary_value)
    }

    pub fn with_boundary_value(mut self, b: f64) -> Result<Self> {
        if !b.is_finite() {
            return Err(Error::invalid("boundary value must be finite"));
        }
        self.boundary_value = b;
        Ok(self)
    }

    /// Same lattice with spacing and origin multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        Self::new(
            self.dim,
            self.spacing * s,
            self.origin.iter().map(|o| o * s).collect(),
            self.extent.clone(),
            self.mask.clone(),
            self.boundary_value,
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn extent(&self) -> &[usize] {
        &self.extent
    }

    pub fn boundary_value(&self) -> f64 {
        self.boundary_value
    }

    /// Number of interior nodes.
    pub fn len(&self) -> usize {
        self.interior.len()
    }

    pub fn is_empty(&self) -> bool {
        self.interior.is_empty()
    }

    /// Row-major lattice index of interior node `i`.
    pub fn lattice_index(&self, i: usize) -> usize {
        self.interior[i]
    }

    /// Interior ordinal of a lattice index, if interior.
    pub fn slot_of(&self, lattice: usize) -> Option<usize> {
        self.slot
            .get(lattice)
            .copied()
            .filter(|&s| s != OUTSIDE)
            .map(|s| s as usize)
    }

    pub fn multi_index(&self, i: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim];
        unravel(self.interior[i], &self.extent, &mut idx);
        idx
    }

    pub fn point(&self, i: usize) -> Vec<f64> {
        self.multi_index(i)
            .iter()
            .zip(&self.origin)
            .map(|(&m, o)| o + self.spacing * m as f64)
            .collect()
    }

    /// Interior ordinal of `node + offset`, or [`OUTSIDE`].
    pub fn neighbor(&self, node: usize, offset: &[i64]) -> u32 {
        let mut lin = 0usize;
        let mut idx = vec![0usize; self.dim];
        unravel(self.interior[node], &self.extent, &mut idx);
        for j in 0..self.dim {
            let v = idx[j] as i64 + offset[j];
            if v < 0 || v >= self.extent[j] as i64 {
                return OUTSIDE;
            }
            lin = lin * self.extent[j] + v as usize;
        }
        self.slot[lin]
    }

    /// SHA-256 over the lattice geometry, mask and boundary value.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.dim as u64).to_le_bytes());
        h.update(self.spacing.to_bits().to_le_bytes());
        for o in &self.origin {
            h.update(o.to_bits().to_le_bytes());
        }
        for e in &self.extent {
            h.update((*e as u64).to_le_bytes());
        }
        h.update(self.mask.iter().map(|&m| u8::from(m)).collect::<Vec<u8>>());
        h.update(self.boundary_value.to_bits().to_le_bytes());
        hex::encode(h.finalize())
    }

    /// Whether every interior node of `self` is an interior node of `other`
    /// (same lattice required).
    pub fn is_subdomain_of(&self, other: &GridDomain) -> bool {
        if self.dim != other.dim || self.spacing != other.spacing {
            return false;
        }
        (0..self.len()).all(|i| {
            let x = self.point(i);
            other.locate(&x).is_some()
        })
    }

    /// Interior ordinal of the node at `x`, if `x` is (up to rounding) an interior lattice point.
    pub fn locate(&self, x: &[f64]) -> Option<usize> {
        let mut lin = 0usize;
        for j in 0..self.dim {
            let t = (x[j] - self.origin[j]) / self.spacing;
            let r = t.round();
            if (t - r).abs() > 1e-9 || r < 0.0 || r >= self.extent[j] as f64 {
                return None;
            }
            lin = lin * self.extent[j] + r as usize;
        }
        self.slot_of(lin)
    }
}

fn unravel(mut lin: usize, extent: &[usize], out: &mut [usize]) {
    for j in (0..extent.len()).rev() {
        out[j] = lin % extent[j];
        lin /= extent[j];
    }
}

fn ravel(idx: &[usize], extent: &[usize]) -> usize {
    idx.iter().zip(extent).fold(0, |acc, (i, e)| acc * e + i)
}

/// Values at the interior nodes of a domain, in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    domain: Arc<GridDomain>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(domain: Arc<GridDomain>, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.len() {
            return Err(Error::DimensionMismatch {
                expected: domain.len(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("grid function has non-finite values".into()));
        }
        Ok(Self { domain, values })
    }

    pub fn constant(domain: Arc<GridDomain>, v: f64) -> Self {
        let n = domain.len();
        Self {
            domain,
            values: vec![v; n],
        }
    }

    pub fn domain(&self) -> &Arc<GridDomain> {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Value at a neighbor ordinal, substituting the boundary datum outside.
    pub fn at(&self, slot: u32) -> f64 {
        if slot == OUTSIDE {
            self.domain.boundary_value
        } else {
            self.values[slot as usize]
        }
    }

    /// CSV with header `index,x0,x1[,x2],value`; `index` is the row-major lattice index.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let d = &self.domain;
        let mut header = vec!["index".to_string()];
        header.extend((0..d.dim).map(|j| format!("x{j}")));
        header.push("value".into());
        writeln!(out, "{}", header.join(","))?;
        for (i, v) in self.values.iter().enumerate() {
            let coords: Vec<String> = d.point(i).iter().map(|x| format!("{x:.17e}")).collect();
            writeln!(out, "{},{},{v:.17e}", d.interior[i], coords.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(domain: Arc<GridDomain>, input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines.next().ok_or_else(|| Error::invalid("empty CSV"))??;
        let cols = header.split(',').count();
        if cols != domain.dim + 2 || !header.starts_with("index,") || !header.ends_with(",value") {
            return Err(Error::invalid(format!("unexpected CSV header '{header}'")));
        }
        let mut values = vec![f64::NAN; domain.len()];
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != cols {
                return Err(Error::invalid(format!("bad CSV row '{line}'")));
            }
            let lattice: usize = fields[0]
                .parse()
                .map_err(|_| Error::invalid(format!("bad index '{}'", fields[0])))?;
            let slot = domain
                .slot_of(lattice)
                .ok_or_else(|| Error::invalid(format!("index {lattice} is not an interior node")))?;
            values[slot] = fields[cols - 1]
                .parse()
                .map_err(|_| Error::invalid(format!("bad value '{}'", fields[cols - 1])))?;
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::invalid("CSV does not cover every interior node"));
        }
        Self::new(domain, values)
    }

    /// Binary layout: magic `TLGF`, u32 version, u32 dim, u64 node count,
    /// 32-byte domain hash, then little-endian f64 values in row-major order.
    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(BINARY_MAGIC)?;
        out.write_all(&BINARY_VERSION.to_le_bytes())?;
        out.write_all(&(self.domain.dim as u32).to_le_bytes())?;
        out.write_all(&(self.values.len() as u64).to_le_bytes())?;
        out.write_all(&hex::decode(self.domain.hash()).expect("hash is hex"))?;
        for v in &self.values {
            out.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(domain: Arc<GridDomain>, mut input: R) -> Result<Self> {
        let mut head = [0u8; 4 + 4 + 4 + 8 + 32];
        input.read_exact(&mut head)?;
        if &head[0..4] != BINARY_MAGIC {
            return Err(Error::invalid("not a grid-function file"));
        }
        let version = u32::from_le_bytes(head[4..8].try_into().expect("4 bytes"));
        let dim = u32::from_le_bytes(head[8..12].try_into().expect("4 bytes")) as usize;
        let count = u64::from_le_bytes(head[12..20].try_into().expect("8 bytes")) as usize;
        if version != BINARY_VERSION || dim != domain.dim || count != domain.len() {
            return Err(Error::invalid("grid-function header does not match the domain"));
        }
        if hex::encode(&head[20..52]) != domain.hash() {
            return Err(Error::invalid("grid-function was written for a different domain"));
        }
        let mut values = Vec::with_capacity(count);
        let mut buf = [0u8; 8];
        for _ in 0..count {
            input.read_exact(&mut buf)?;
            values.push(f64::from_le_bytes(buf));
        }
        Self::new(domain, values)
    }
}

/// Evaluates `f` at every interior node.
pub fn sample_onto_grid<F>(f: F, d: &Arc<GridDomain>) -> Result<GridFunction>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let values = (0..d.len())
        .into_par_iter()
        .map(|i| f(&d.point(i)))
        .collect::<Result<Vec<f64>>>()?;
    GridFunction::new(d.clone(), values)
}

/// Lattice directions and the orthogonal k-tuples built from them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StencilFrameSet {
    pub dim: usize,
    pub k: usize,
    pub width: usize,
    /// Primitive vectors with max coordinate ≤ width, first nonzero coordinate
    /// positive, ordered by length and then reverse-lexicographically.
    pub directions: Vec<Vec<i64>>,
    /// Index tuples (increasing) into `directions`, pairwise orthogonal.
    pub kframes: Vec<Vec<usize>>,
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

impl StencilFrameSet {
    pub fn build(dim: usize, k: usize, width: usize) -> Result<Self> {
        if dim == 0 || k == 0 || k > dim {
            return Err(Error::invalid(format!("need 1 <= k <= dim, got k = {k}, dim = {dim}")));
        }
        if !(1..=2).contains(&width) {
            return Err(Error::invalid(format!("stencil width {width} not in {{1, 2}}")));
        }
        let w = width as i64;
        let side = (2 * w + 1) as usize;
        let mut directions = Vec::new();
        for lin in 0..side.pow(dim as u32) {
            let mut v = vec![0i64; dim];
            let mut r = lin;
            for j in (0..dim).rev() {
                v[j] = (r % side) as i64 - w;
                r /= side;
            }
            let first = v.iter().copied().find(|&c| c != 0);
            if first.map_or(true, |c| c < 0) {
                continue;
            }
            if v.iter().fold(0, |g, &c| gcd(g, c)) != 1 {
                continue;
            }
            directions.push(v);
        }
        directions.sort_by(|a, b| {
            let na: i64 = a.iter().map(|c| c * c).sum();
            let nb: i64 = b.iter().map(|c| c * c).sum();
            na.cmp(&nb).then_with(|| b.cmp(a))
        });
        let orth = |a: &[i64], b: &[i64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<i64>() == 0;
        let mut kframes = Vec::new();
        let mut stack: Vec<usize> = Vec::with_capacity(k);
        fn extend(
            start: usize,
            k: usize,
            dirs: &[Vec<i64>],
            orth: &dyn Fn(&[i64], &[i64]) -> bool,
            stack: &mut Vec<usize>,
            out: &mut Vec<Vec<usize>>,
        ) {
            if stack.len() == k {
                out.push(stack.clone());
                return;
            }
            for i in start..dirs.len() {
                if stack.iter().all(|&j| orth(&dirs[i], &dirs[j])) {
                    stack.push(i);
                    extend(i + 1, k, dirs, orth, stack, out);
                    stack.pop();
                }
            }
        }
        extend(0, k, &directions, &orth, &mut stack, &mut kframes);
        Ok(Self {
            dim,
            k,
            width,
            directions,
            kframes,
        })
    }

    /// Unit vectors only, with every k-subset of axes as a frame. For `k = dim`
    /// this is the single axis frame, i.e. the standard Laplacian stencil.
    pub fn coordinate(dim: usize, k: usize) -> Result<Self> {
        let full = Self::build(dim, k, 1)?;
        let directions: Vec<Vec<i64>> = full.directions[..dim].to_vec();
        let mut kframes = Vec::new();
        for mask in 0u32..(1 << dim) {
            if mask.count_ones() as usize == k {
                kframes.push((0..dim).filter(|j| mask & (1 << j) != 0).collect());
            }
        }
        kframes.sort();
        Ok(Self {
            dim,
            k,
            width: 1,
            directions,
            kframes,
        })
    }

    pub fn norm2(&self, d: usize) -> f64 {
        self.directions[d].iter().map(|c| (c * c) as f64).sum()
    }

    /// Index of the unit vector along `axis`.
    pub fn axis(&self, axis: usize) -> usize {
        self.directions
            .iter()
            .position(|v| v.iter().enumerate().all(|(j, &c)| c == i64::from(j == axis)))
            .expect("unit vectors are always present")
    }

    /// `min` over frames of `Σ eᵀAe/|e|²`; never below `P⁻ₖ(A)`.
    pub fn min_frame_trace(&self, a: &SymMatrix) -> Result<f64> {
        if a.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: a.dim(),
            });
        }
        let q: Vec<f64> = (0..self.directions.len())
            .map(|d| {
                let e: Vec<f64> = self.directions[d].iter().map(|&c| c as f64).collect();
                a.quadratic_form(&e) / self.norm2(d)
            })
            .collect();
        Ok(self
            .kframes
            .iter()
            .map(|f| f.iter().map(|&d| q[d]).sum::<f64>())
            .fold(f64::INFINITY, f64::min))
    }
}

/// Which linear member of the discrete operator is active at one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeChoice {
    pub frame: u32,
    /// Per axis: `-1` upwinds to the minus neighbor, `1` to the plus neighbor, `0` none.
    pub side: [i8; 3],
    /// Per axis weight `pⱼ/|p|` of the upwind difference in `|∇u|`.
    pub weight: [f64; 3],
}

/// The discrete operator bound to a domain: neighbor tables for every direction.
#[derive(Debug, Clone)]
pub struct FkOperator {
    domain: Arc<GridDomain>,
    frames: StencilFrameSet,
    h: f64,
    ndir: usize,
    plus: Vec<u32>,
    minus: Vec<u32>,
    inv_len2: Vec<f64>,
    axes: Vec<usize>,
}

impl FkOperator {
    pub fn new(domain: Arc<GridDomain>, frames: &StencilFrameSet, h: f64) -> Result<Self> {
        if frames.dim != domain.dim {
            return Err(Error::DimensionMismatch {
                expected: domain.dim,
                got: frames.dim,
            });
        }
        if !(h >= 0.0 && h.is_finite()) {
            return Err(Error::invalid(format!("h = {h} must be finite and >= 0")));
        }
        let ndir = frames.directions.len();
        let n = domain.len();
        let mut plus = vec![OUTSIDE; n * ndir];
        let mut minus = vec![OUTSIDE; n * ndir];
        let neg: Vec<Vec<i64>> = frames
            .directions
            .iter()
            .map(|e| e.iter().map(|c| -c).collect())
            .collect();
        plus.par_chunks_mut(ndir)
            .zip(minus.par_chunks_mut(ndir))
            .enumerate()
            .for_each(|(i, (p, m))| {
                for d in 0..ndir {
                    p[d] = domain.neighbor(i, &frames.directions[d]);
                    m[d] = domain.neighbor(i, &neg[d]);
                }
            });
        let s2 = domain.spacing * domain.spacing;
        let inv_len2 = (0..ndir).map(|d| 1.0 / (s2 * frames.norm2(d))).collect();
        let axes = (0..domain.dim).map(|j| frames.axis(j)).collect();
        Ok(Self {
            domain,
            frames: frames.clone(),
            h,
            ndir,
            plus,
            minus,
            inv_len2,
            axes,
        })
    }

    pub fn domain(&self) -> &Arc<GridDomain> {
        &self.domain
    }

    pub fn frames(&self) -> &StencilFrameSet {
        &self.frames
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.domain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domain.is_empty()
    }

    fn val(&self, u: &[f64], s: u32) -> f64 {
        if s == OUTSIDE {
            self.domain.boundary_value
        } else {
            u[s as usize]
        }
    }

    pub(crate) fn plus_neighbor(&self, i: usize, d: usize) -> u32 {
        self.plus[i * self.ndir + d]
    }

    pub(crate) fn minus_neighbor(&self, i: usize, d: usize) -> u32 {
        self.minus[i * self.ndir + d]
    }

    pub(crate) fn inv_len2(&self, d: usize) -> f64 {
        self.inv_len2[d]
    }

    pub(crate) fn axis_direction(&self, j: usize) -> usize {
        self.axes[j]
    }

    /// `(u(x+e) − 2u(x) + u(x−e)) / (spacing·|e|)²` for direction index `d`.
    pub fn second_difference(&self, u: &[f64], i: usize, d: usize) -> f64 {
        (self.val(u, self.plus_neighbor(i, d)) - 2.0 * u[i] + self.val(u, self.minus_neighbor(i, d))) * self.inv_len2[d]
    }

    /// Best frame value and index at node `i`; on ties the lower index, or `keep` if it ties.
    fn frame_min(&self, u: &[f64], i: usize, keep: Option<u32>) -> (f64, u32) {
        let mut dd = [0.0f64; 64];
        let dd: &mut [f64] = if self.ndir <= 64 {
            &mut dd[..self.ndir]
        } else {
            return self.frame_min_heap(u, i, keep);
        };
        for (d, v) in dd.iter_mut().enumerate() {
            *v = self.second_difference(u, i, d);
        }
        self.pick_frame(dd, keep)
    }

    fn frame_min_heap(&self, u: &[f64], i: usize, keep: Option<u32>) -> (f64, u32) {
        let dd: Vec<f64> = (0..self.ndir).map(|d| self.second_difference(u, i, d)).collect();
        self.pick_frame(&dd, keep)
    }

    fn pick_frame(&self, dd: &[f64], keep: Option<u32>) -> (f64, u32) {
        let mut best = (f64::INFINITY, 0u32);
        for (f, frame) in self.frames.kframes.iter().enumerate() {
            let s: f64 = frame.iter().map(|&d| dd[d]).sum();
            if s < best.0 {
                best = (s, f as u32);
            }
        }
        if let Some(kf) = keep {
            let s: f64 = self.frames.kframes[kf as usize].iter().map(|&d| dd[d]).sum();
            if s <= best.0 {
                best = (s, kf);
            }
        }
        best
    }

    /// Upwind gradient norm and the per-axis choices that realize it.
    fn upwind(&self, u: &[f64], i: usize) -> (f64, [i8; 3], [f64; 3]) {
        let inv = 1.0 / self.domain.spacing;
        let mut p = [0.0f64; 3];
        let mut side = [0i8; 3];
        for j in 0..self.domain.dim {
            let d = self.axes[j];
            let back = (u[i] - self.val(u, self.minus_neighbor(i, d))) * inv;
            let fwd = (u[i] - self.val(u, self.plus_neighbor(i, d))) * inv;
            if back >= fwd && back > 0.0 {
                p[j] = back;
                side[j] = -1;
            } else if fwd > 0.0 {
                p[j] = fwd;
                side[j] = 1;
            }
        }
        let norm = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        let mut weight = [0.0; 3];
        if norm > 0.0 {
            for j in 0..3 {
                weight[j] = p[j] / norm;
            }
        }
        (norm, side, weight)
    }

    pub fn node_value(&self, u: &[f64], i: usize) -> f64 {
        let (m, _) = self.frame_min(u, i, None);
        if self.h == 0.0 {
            return m;
        }
        m - self.h * self.upwind(u, i).0
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        (0..self.len()).into_par_iter().map(|i| self.node_value(u, i)).collect()
    }

    /// The minimizing linear member at every node, keeping `current` where it ties.
    pub fn choose(&self, u: &[f64], current: Option<&[NodeChoice]>) -> Vec<NodeChoice> {
        (0..self.len())
            .into_par_iter()
            .map(|i| {
                let keep = current.map(|c| c[i].frame);
                let (_, frame) = self.frame_min(u, i, keep);
                let (_, side, weight) = if self.h == 0.0 {
                    (0.0, [0; 3], [0.0; 3])
                } else {
                    self.upwind(u, i)
                };
                NodeChoice { frame, side, weight }
            })
            .collect()
    }
}

/// Nodewise discrete `F⁻ₖ[u]`.
pub fn discrete_fk_minus(u: &GridFunction, frames: &StencilFrameSet, h: f64) -> Result<GridFunction> {
    let op = FkOperator::new(u.domain.clone(), frames, h)?;
    GridFunction::new(u.domain.clone(), op.apply(&u.values))
}

/// Second difference of `u` along the lattice vector `e` at interior node `node`.
pub fn directional_second_difference(u: &GridFunction, node: usize, e: &[i64]) -> Result<f64> {
    let d = &u.domain;
    if e.len() != d.dim || e.iter().all(|&c| c == 0) {
        return Err(Error::invalid("direction must be a nonzero lattice vector of the domain dimension"));
    }
    if node >= d.len() {
        return Err(Error::invalid(format!("node {node} out of range")));
    }
    let neg: Vec<i64> = e.iter().map(|c| -c).collect();
    let len2: f64 = e.iter().map(|&c| (c * c) as f64).sum::<f64>() * d.spacing * d.spacing;
    Ok((u.at(d.neighbor(node, e)) - 2.0 * u.values[node] + u.at(d.neighbor(node, &neg))) / len2)
}
