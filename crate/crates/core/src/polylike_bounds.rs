use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::Serialize;

use crate::complex_pullback::{k_cycle_pullback, poincare_angle, BranchPolicy, Trust};
use crate::error::{Error, Result};
use crate::interval_dynamics::{tau_geom, OrientedInterval};
use crate::map_model::{AnalyticMap, Sign};
use crate::real_bounds::{interval_hierarchy, postcritical_gap, postcritical_orbit, POSTCRITICAL_POINTS};
use crate::renormalization::RenormLevel;

pub const CONTRACTION_TARGET: f64 = 0.1;
const SCALE_RANGE: (f64, f64) = (2.0, 1e3);

/// Planar region with the queries the modulus estimators need.
pub trait Region: Sync {
    fn contains(&self, z: C64) -> bool;
    /// Distance from an interior point to the boundary.
    fn boundary_dist(&self, z: C64) -> f64;
    /// Largest distance from `c` to a point of the closure.
    fn max_dist(&self, c: C64) -> f64;
    fn bbox(&self) -> (C64, C64);
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Disk {
    pub centre: (f64, f64),
    pub radius: f64,
}

impl Disk {
    pub fn new(centre: C64, radius: f64) -> Self {
        Disk { centre: (centre.re, centre.im), radius }
    }

    fn c(&self) -> C64 {
        C64::new(self.centre.0, self.centre.1)
    }
}

impl Region for Disk {
    fn contains(&self, z: C64) -> bool {
        (z - self.c()).norm() < self.radius
    }
    fn boundary_dist(&self, z: C64) -> f64 {
        (self.radius - (z - self.c()).norm()).abs()
    }
    fn max_dist(&self, c: C64) -> f64 {
        (c - self.c()).norm() + self.radius
    }
    fn bbox(&self) -> (C64, C64) {
        let r = C64::new(self.radius, self.radius);
        (self.c() - r, self.c() + r)
    }
}

/// Disk about a real centre with the real line outside `gap` removed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SlitDisk {
    pub centre: f64,
    pub radius: f64,
    pub gap: OrientedInterval,
}

impl SlitDisk {
    fn on_slit(&self, z: C64) -> bool {
        z.im == 0.0 && !self.gap.interior_contains(z.re)
    }

    fn slit_lengths(&self) -> (f64, f64) {
        (self.gap.lo() - (self.centre - self.radius), self.centre + self.radius - self.gap.hi())
    }

    /// Closed counterclockwise loop along the boundary; slit sides are offset by `eta` off the axis.
    pub fn boundary_loop(&self, n: usize, eta: f64) -> Vec<C64> {
        let (ll, lr) = self.slit_lengths();
        let arc = PI * self.radius;
        let total = 2.0 * arc + 2.0 * ll + 2.0 * lr;
        let share = |len: f64| ((n as f64 * len / total).round() as usize).max(4);
        let (na, nl, nr) = (share(arc), share(ll), share(lr));
        let c = C64::new(self.centre, 0.0);
        let x_at = |t: f64, from: f64, to: f64| from + t * (to - from);
        let mid = |i: usize, m: usize| (i as f64 + 0.5) / m as f64;
        let mut out = Vec::new();
        for i in 0..na {
            out.push(c + C64::from_polar(self.radius, PI * mid(i, na)));
        }
        let left_outer = self.centre - self.radius;
        for i in 0..nl {
            out.push(C64::new(x_at(mid(i, nl), left_outer, self.gap.lo()), eta));
        }
        for i in 0..nl {
            out.push(C64::new(x_at(mid(i, nl), self.gap.lo(), left_outer), -eta));
        }
        for i in 0..na {
            out.push(c + C64::from_polar(self.radius, PI + PI * mid(i, na)));
        }
        let right_outer = self.centre + self.radius;
        for i in 0..nr {
            out.push(C64::new(x_at(mid(i, nr), right_outer, self.gap.hi()), -eta));
        }
        for i in 0..nr {
            out.push(C64::new(x_at(mid(i, nr), self.gap.hi(), right_outer), eta));
        }
        out
    }
}

impl Region for SlitDisk {
    fn contains(&self, z: C64) -> bool {
        (z - C64::new(self.centre, 0.0)).norm() < self.radius && !self.on_slit(z)
    }
    fn boundary_dist(&self, z: C64) -> f64 {
        let circle = (self.radius - (z - C64::new(self.centre, 0.0)).norm()).abs();
        let seg = |lo: f64, hi: f64| {
            let x = z.re.clamp(lo, hi);
            (z - C64::new(x, 0.0)).norm()
        };
        circle
            .min(seg(self.centre - self.radius, self.gap.lo()))
            .min(seg(self.gap.hi(), self.centre + self.radius))
    }
    fn max_dist(&self, c: C64) -> f64 {
        (c - C64::new(self.centre, 0.0)).norm() + self.radius
    }
    fn bbox(&self) -> (C64, C64) {
        (C64::new(self.centre - self.radius, -self.radius), C64::new(self.centre + self.radius, self.radius))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JordanPolyline {
    pub vertices: Vec<(f64, f64)>,
}

impl JordanPolyline {
    /// Closed polyline, reoriented counterclockwise.
    pub fn new(vertices: Vec<C64>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::PullbackFailure("polyline needs at least 3 vertices".into()));
        }
        let mut p = JordanPolyline { vertices: vertices.iter().map(|z| (z.re, z.im)).collect() };
        if p.signed_area() < 0.0 {
            p.vertices.reverse();
        }
        Ok(p)
    }

    pub fn circle(centre: C64, radius: f64, n: usize) -> Self {
        Self::new((0..n).map(|i| centre + C64::from_polar(radius, 2.0 * PI * i as f64 / n as f64)).collect()).unwrap()
    }

    /// Axis-aligned square with `per_side` vertices on each side.
    pub fn square(centre: C64, half: f64, per_side: usize) -> Self {
        let corners = [C64::new(-half, -half), C64::new(half, -half), C64::new(half, half), C64::new(-half, half)];
        let mut v = Vec::new();
        for s in 0..4 {
            let (a, b) = (corners[s], corners[(s + 1) % 4]);
            for i in 0..per_side {
                v.push(centre + a + (b - a) * (i as f64 / per_side as f64));
            }
        }
        Self::new(v).unwrap()
    }

    pub fn points(&self) -> Vec<C64> {
        self.vertices.iter().map(|&(x, y)| C64::new(x, y)).collect()
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn signed_area(&self) -> f64 {
        let v = &self.vertices;
        (0..v.len())
            .map(|i| {
                let (a, b) = (v[i], v[(i + 1) % v.len()]);
                a.0 * b.1 - b.0 * a.1
            })
            .sum::<f64>()
            / 2.0
    }

    pub fn diameter(&self) -> f64 {
        let p = self.points();
        let mut d: f64 = 0.0;
        for i in 0..p.len() {
            for j in i + 1..p.len() {
                d = d.max((p[i] - p[j]).norm());
            }
        }
        d
    }

    fn edges(&self) -> impl Iterator<Item = (C64, C64)> + '_ {
        let p = self.points();
        let n = p.len();
        (0..n).map(move |i| (p[i], p[(i + 1) % n]))
    }

    /// No two non-adjacent edges meet within `tol`.
    pub fn is_simple(&self, tol: f64) -> bool {
        let e: Vec<(C64, C64)> = self.edges().collect();
        let n = e.len();
        for i in 0..n {
            for j in i + 2..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                if segment_dist(e[i], e[j]) <= tol {
                    return false;
                }
            }
        }
        true
    }
}

fn cross(a: C64, b: C64) -> f64 {
    a.re * b.im - a.im * b.re
}

fn point_segment_dist(z: C64, (a, b): (C64, C64)) -> f64 {
    let d = b - a;
    let t = if d.norm_sqr() == 0.0 { 0.0 } else { (((z - a) * d.conj()).re / d.norm_sqr()).clamp(0.0, 1.0) };
    (z - (a + d * t)).norm()
}

fn segment_dist(s: (C64, C64), t: (C64, C64)) -> f64 {
    let (a, b) = s;
    let (c, d) = t;
    let o1 = cross(b - a, c - a);
    let o2 = cross(b - a, d - a);
    let o3 = cross(d - c, a - c);
    let o4 = cross(d - c, b - c);
    if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
        return 0.0;
    }
    point_segment_dist(a, t).min(point_segment_dist(b, t)).min(point_segment_dist(c, s)).min(point_segment_dist(d, s))
}

impl Region for JordanPolyline {
    fn contains(&self, z: C64) -> bool {
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.im > z.im) != (b.im > z.im) {
                let x = a.re + (z.im - a.im) * (b.re - a.re) / (b.im - a.im);
                if z.re < x {
                    inside = !inside;
                }
            }
        }
        inside
    }
    fn boundary_dist(&self, z: C64) -> f64 {
        self.edges().map(|e| point_segment_dist(z, e)).fold(f64::INFINITY, f64::min)
    }
    fn max_dist(&self, c: C64) -> f64 {
        self.points().iter().map(|p| (p - c).norm()).fold(0.0, f64::max)
    }
    fn bbox(&self) -> (C64, C64) {
        let p = self.points();
        let lo = p.iter().fold(C64::new(f64::INFINITY, f64::INFINITY), |m, z| C64::new(m.re.min(z.re), m.im.min(z.im)));
        let hi = p.iter().fold(C64::new(f64::NEG_INFINITY, f64::NEG_INFINITY), |m, z| C64::new(m.re.max(z.re), m.im.max(z.im)));
        (lo, hi)
    }
}

/// `max over centres of log(r_out / r_in) / 2pi`, clipped at 0.
pub fn round_modulus_bound(outer: &dyn Region, inner: &dyn Region, centres: &[C64]) -> f64 {
    centres
        .iter()
        .filter(|c| outer.contains(**c))
        .map(|&c| {
            let (r_out, r_in) = (outer.boundary_dist(c), inner.max_dist(c));
            if r_in > 0.0 && r_out > r_in {
                (r_out / r_in).ln() / (2.0 * PI)
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridSpec {
    pub lo: (f64, f64),
    pub hi: (f64, f64),
    pub nodes: usize,
}

impl GridSpec {
    pub fn square(centre: C64, half: f64, nodes: usize) -> Self {
        GridSpec { lo: (centre.re - half, centre.im - half), hi: (centre.re + half, centre.im + half), nodes }
    }

    pub fn node(&self, i: usize, j: usize) -> C64 {
        let t = |k: usize, a: f64, b: f64| a + (b - a) * k as f64 / (self.nodes - 1) as f64;
        C64::new(t(i, self.lo.0, self.hi.0), t(j, self.lo.1, self.hi.1))
    }

    pub fn refined(&self) -> Self {
        GridSpec { nodes: 2 * self.nodes - 1, ..*self }
    }
}

fn dilate(mask: &[bool], n: usize) -> Vec<bool> {
    let mut out = mask.to_vec();
    for j in 0..n {
        for i in 0..n {
            if mask[j * n + i] {
                for dj in -1i64..=1 {
                    for di in -1i64..=1 {
                        let (a, b) = (i as i64 + di, j as i64 + dj);
                        if a >= 0 && b >= 0 && (a as usize) < n && (b as usize) < n {
                            out[b as usize * n + a as usize] = true;
                        }
                    }
                }
            }
        }
    }
    out
}

/// Lower bound `1/E` from the Dirichlet energy of the discrete harmonic function that is 0 on
/// the (dilated) inner mask and 1 on the (dilated) outer mask and the grid frame.
pub fn grid_modulus_bound(inner: &[bool], outer: &[bool], n: usize) -> Result<f64> {
    let zero = dilate(inner, n);
    let mut one = outer.to_vec();
    for k in 0..n {
        one[k] = true;
        one[(n - 1) * n + k] = true;
        one[k * n] = true;
        one[k * n + n - 1] = true;
    }
    let one = dilate(&one, n);
    if zero.iter().zip(&one).any(|(a, b)| *a && *b) {
        return Err(Error::NotNested);
    }
    if !zero.iter().any(|&x| x) {
        return Err(Error::NotNested);
    }
    let free: Vec<bool> = zero.iter().zip(&one).map(|(a, b)| !a && !b).collect();
    let mut u: Vec<f64> = one.iter().map(|&o| if o { 1.0 } else { 0.0 }).collect();
    let idx = |i: usize, j: usize| j * n + i;
    let nbrs = |k: usize| {
        let (i, j) = (k % n, k / n);
        [idx(i + 1, j), idx(i - 1, j), idx(i, j + 1), idx(i, j - 1)]
    };
    // A x = b on free nodes with A the 5-point Laplacian and fixed values moved to b.
    let apply = |x: &[f64], out: &mut [f64]| {
        for (k, o) in out.iter_mut().enumerate() {
            *o = if free[k] { 4.0 * x[k] - nbrs(k).iter().filter(|&&m| free[m]).map(|&m| x[m]).sum::<f64>() } else { 0.0 };
        }
    };
    let b: Vec<f64> = (0..n * n)
        .map(|k| if free[k] { nbrs(k).iter().filter(|&&m| !free[m]).map(|&m| u[m]).sum() } else { 0.0 })
        .collect();
    let mut x = vec![0.0; n * n];
    let mut r = b.clone();
    let mut p = r.clone();
    let mut ap = vec![0.0; n * n];
    let dot = |a: &[f64], c: &[f64]| a.iter().zip(c).map(|(x, y)| x * y).sum::<f64>();
    let mut rr = dot(&r, &r);
    let stop = 1e-20 * rr.max(1e-300);
    for _ in 0..20 * n {
        if rr <= stop {
            break;
        }
        apply(&p, &mut ap);
        let alpha = rr / dot(&p, &ap);
        x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi += alpha * pi);
        r.iter_mut().zip(&ap).for_each(|(ri, ai)| *ri -= alpha * ai);
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        p.iter_mut().zip(&r).for_each(|(pi, ri)| *pi = ri + beta * *pi);
        rr = rr_new;
    }
    for k in 0..n * n {
        if free[k] {
            u[k] = x[k];
        }
    }
    let mut energy = 0.0;
    for j in 0..n {
        for i in 0..n {
            if i + 1 < n {
                energy += (u[idx(i + 1, j)] - u[idx(i, j)]).powi(2);
            }
            if j + 1 < n {
                energy += (u[idx(i, j + 1)] - u[idx(i, j)]).powi(2);
            }
        }
    }
    Ok(1.0 / energy)
}

pub fn region_mask(region: &dyn Region, grid: &GridSpec) -> Vec<bool> {
    let n = grid.nodes;
    (0..n * n).into_par_iter().map(|k| region.contains(grid.node(k % n, k / n))).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ModulusEstimate {
    pub round: f64,
    pub grid: Option<f64>,
    pub lower_bound: f64,
}

/// Both lower bounds for `mod(outer \ inner)` and their maximum.
pub fn modulus_lower_bound(outer: &dyn Region, inner: &dyn Region, centres: &[C64], grid: Option<&GridSpec>) -> Result<ModulusEstimate> {
    let round = round_modulus_bound(outer, inner, centres);
    let grid_value = match grid {
        Some(g) => {
            let inside = region_mask(inner, g);
            let outside: Vec<bool> = region_mask(outer, g).into_iter().map(|b| !b).collect();
            Some(grid_modulus_bound(&inside, &outside, g.nodes)?)
        }
        None => None,
    };
    Ok(ModulusEstimate { round, grid: grid_value, lower_bound: grid_value.map_or(round, |g| g.max(round)) })
}

fn fold_count(map: &AnalyticMap, level: &RenormLevel) -> usize {
    level.involved.iter().filter(|q| map.critical_points().iter().any(|c| c.position == q.position)).count().max(1)
}

/// Every fold-sign sequence for the k-cycle, `2^m` for `m` folds.
pub fn sign_combinations(folds: usize) -> Vec<Vec<Sign>> {
    (0..1usize << folds)
        .map(|bits| (0..folds).map(|i| if bits >> i & 1 == 1 { Sign::Minus } else { Sign::Plus }).collect())
        .collect()
}

/// Largest `(dist(z_{-N}, P)/|P|) / (dist(z, P)/|P|)` over `samples` points of the circle, all branches.
pub fn contraction_factor(map: &AnalyticMap, level: &RenormLevel, radius: f64, samples: usize) -> Result<f64> {
    let p = level.interval;
    let c = C64::new(p.mid(), 0.0);
    let combos = sign_combinations(fold_count(map, level));
    (0..samples)
        .into_par_iter()
        .map(|s| {
            let z = c + C64::from_polar(radius, 2.0 * PI * (s as f64 + 0.5) / samples as f64);
            let mut worst: f64 = 0.0;
            for signs in &combos {
                let o = k_cycle_pullback(map, level, z, &BranchPolicy::Explicit(signs.clone()), Trust::Unbounded)?;
                worst = worst.max(p.dist_complex(o.last()) / p.dist_complex(z));
            }
            Ok(worst)
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DiskScale {
    /// Disk radius over `|P|`.
    pub scale: f64,
    pub contraction: f64,
    pub verified_contraction: f64,
}

/// Smallest radius factor in `[2, 1e3]` with contraction at most 1/10, padded by 20% and
/// rechecked on twice the samples.
pub fn fit_disk_scale(map: &AnalyticMap, level: &RenormLevel, samples: usize) -> Result<DiskScale> {
    let len = level.interval.len();
    let factor = |c: f64, s: usize| contraction_factor(map, level, c * len, s);
    let (lo0, hi0) = SCALE_RANGE;
    let at_hi = factor(hi0, samples)?;
    if at_hi > CONTRACTION_TARGET {
        return Err(Error::ContractionUnattainable { best: at_hi });
    }
    let mut scale = if factor(lo0, samples)? <= CONTRACTION_TARGET {
        lo0
    } else {
        let (mut lo, mut hi) = (lo0, hi0);
        while hi / lo > 1.01 {
            let mid = (lo * hi).sqrt();
            if factor(mid, samples)? <= CONTRACTION_TARGET {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi * 1.2
    };
    loop {
        let verified = factor(scale, 2 * samples)?;
        if verified <= CONTRACTION_TARGET {
            return Ok(DiskScale { scale, contraction: factor(scale, samples)?, verified_contraction: verified });
        }
        scale *= 1.2;
        if scale > hi0 {
            return Err(Error::ContractionUnattainable { best: verified });
        }
    }
}

/// `T'` gap of the outer domain: the hierarchy of `p` clipped to the disk.
pub fn outer_domain(map: &AnalyticMap, tower: &[RenormLevel], k: usize, scale: f64) -> Result<SlitDisk> {
    if k < 2 || k > tower.len() {
        return Err(Error::PullbackFailure(format!("extension needs levels k - 1 and k, got k = {k}")));
    }
    let level = &tower[k - 1];
    let h = interval_hierarchy(map, level, &tower[k - 2], 0)?;
    let p = level.interval;
    let radius = scale * p.len();
    let gap = h.t_prime;
    if gap.lo() <= p.mid() - radius || gap.hi() >= p.mid() + radius {
        return Err(Error::PullbackFailure(format!("disk of scale {scale} does not cover T'")));
    }
    Ok(SlitDisk { centre: p.mid(), radius, gap })
}

/// Membership in the chain-lift component of the preimage of `v` under the return map.
pub struct ReturnDomain<'a> {
    pub map: &'a AnalyticMap,
    pub level: &'a RenormLevel,
    pub v: SlitDisk,
    combos: Vec<Vec<Sign>>,
}

impl<'a> ReturnDomain<'a> {
    pub fn new(map: &'a AnalyticMap, level: &'a RenormLevel, v: SlitDisk) -> Self {
        ReturnDomain { map, level, v, combos: sign_combinations(fold_count(map, level)) }
    }

    pub fn return_map(&self, z: C64) -> C64 {
        self.map.iterate_complex(z, self.level.period)
    }
}

impl Region for ReturnDomain<'_> {
    fn contains(&self, z: C64) -> bool {
        if !self.v.contains(z) {
            return false;
        }
        let w = self.return_map(z);
        if !w.re.is_finite() || !self.v.contains(w) {
            return false;
        }
        let tol = 1e-9 * self.level.interval.len();
        self.combos.iter().any(|s| {
            k_cycle_pullback(self.map, self.level, w, &BranchPolicy::Explicit(s.clone()), Trust::Unbounded)
                .is_ok_and(|o| (o.last() - z).norm() <= tol)
        })
    }
    fn boundary_dist(&self, z: C64) -> f64 {
        self.v.boundary_dist(z)
    }
    fn max_dist(&self, c: C64) -> f64 {
        self.v.max_dist(c)
    }
    fn bbox(&self) -> (C64, C64) {
        self.v.bbox()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExtensionConfig {
    pub boundary_points: usize,
    pub contraction_samples: usize,
    /// Fixed disk scale; fitted when absent.
    pub disk_scale: Option<f64>,
    pub grid_nodes: usize,
    /// Half-width of the modulus grid over `|P|`.
    pub grid_half_width: f64,
    pub julia_grid: usize,
    pub julia_horizon: usize,
    pub slit_offset: f64,
}

impl Default for ExtensionConfig {
    fn default() -> Self {
        ExtensionConfig {
            boundary_points: 64,
            contraction_samples: 64,
            disk_scale: None,
            grid_nodes: 257,
            grid_half_width: 1.5,
            julia_grid: 64,
            julia_horizon: 500,
            slit_offset: 1e-7,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PolyLikeExtension {
    pub k: usize,
    pub period: usize,
    pub p: OrientedInterval,
    pub v: SlitDisk,
    pub v_boundary: Vec<(f64, f64)>,
    pub u: JordanPolyline,
    pub disk_scale: DiskScale,
    pub modulus: ModulusEstimate,
    pub diam_ratio: f64,
    /// Largest `|f^N(z) - w|` over boundary vertices `z` lifted from `w`.
    pub boundary_residual: f64,
    pub inner_margin: f64,
}

/// Lifts of a boundary loop through every fold-sign sequence, stitched by nearest continuation
/// and traversed once per sheet. The loop is lifted at `oversample` times the vertex count and
/// the result resampled evenly by arclength.
fn lift_loop(map: &AnalyticMap, level: &RenormLevel, v: &SlitDisk, vertices: usize, eta: f64, oversample: usize) -> Result<(Vec<C64>, Vec<C64>)> {
    let combos = sign_combinations(fold_count(map, level));
    let sheets = combos.len();
    let loop_pts = v.boundary_loop(oversample * vertices / sheets, eta);
    let lifts: Vec<Vec<C64>> = loop_pts
        .par_iter()
        .map(|&w| {
            combos
                .iter()
                .map(|s| k_cycle_pullback(map, level, w, &BranchPolicy::Explicit(s.clone()), Trust::Unbounded).map(|o| o.last()))
                .collect::<Result<Vec<C64>>>()
        })
        .collect::<Result<_>>()?;
    let mut dense = Vec::with_capacity(sheets * loop_pts.len());
    let mut prev = lifts[0][0];
    for _ in 0..sheets {
        for (i, cands) in lifts.iter().enumerate() {
            let next = *cands
                .iter()
                .min_by(|a, b| (*a - prev).norm().partial_cmp(&(*b - prev).norm()).unwrap())
                .unwrap();
            dense.push((next, loop_pts[i]));
            prev = next;
        }
    }
    let mut arc = vec![0.0];
    for i in 1..=dense.len() {
        let d = (dense[i % dense.len()].0 - dense[i - 1].0).norm();
        arc.push(arc[i - 1] + d);
    }
    let total = *arc.last().unwrap();
    let mut verts = Vec::with_capacity(vertices);
    let mut images = Vec::with_capacity(vertices);
    let mut at = 0;
    for j in 0..vertices {
        let target = total * j as f64 / vertices as f64;
        while at + 1 < dense.len() && arc[at + 1] <= target {
            at += 1;
        }
        let pick = if at + 1 < dense.len() && arc[at + 1] - target < target - arc[at] { at + 1 } else { at };
        if verts.last() != Some(&dense[pick].0) {
            verts.push(dense[pick].0);
            images.push(dense[pick].1);
        }
    }
    Ok((verts, images))
}

pub fn construct_extension(map: &AnalyticMap, tower: &[RenormLevel], k: usize, cfg: &ExtensionConfig) -> Result<PolyLikeExtension> {
    let level = tower.get(k.wrapping_sub(1)).ok_or_else(|| Error::PullbackFailure(format!("level {k} not in tower")))?;
    let p = level.interval;
    let disk_scale = match cfg.disk_scale {
        Some(scale) => {
            let c = contraction_factor(map, level, scale * p.len(), cfg.contraction_samples)?;
            DiskScale { scale, contraction: c, verified_contraction: contraction_factor(map, level, scale * p.len(), 2 * cfg.contraction_samples)? }
        }
        None => fit_disk_scale(map, level, cfg.contraction_samples)?,
    };
    let v = outer_domain(map, tower, k, disk_scale.scale)?;
    let eta = cfg.slit_offset * p.len();
    let (verts, images) = lift_loop(map, level, &v, cfg.boundary_points, eta, 8)?;
    let boundary_residual = verts
        .iter()
        .zip(&images)
        .map(|(z, w)| (map.iterate_complex(*z, level.period) - w).norm())
        .fold(0.0, f64::max);
    let inner_margin = verts.iter().map(|z| if v.contains(*z) { v.boundary_dist(*z) } else { 0.0 }).fold(f64::INFINITY, f64::min);
    if inner_margin <= tau_geom(map) * 2.0 * v.radius {
        return Err(Error::NotNested);
    }
    let u = JordanPolyline::new(verts)?;
    let centres: Vec<C64> = (0..=32).map(|i| C64::new(p.lo() + p.len() * i as f64 / 32.0, 0.0)).collect();
    let grid = GridSpec::square(C64::new(p.mid(), 0.0), cfg.grid_half_width * p.len(), cfg.grid_nodes);
    let modulus = modulus_lower_bound(&v, &u, &centres, Some(&grid))?;
    Ok(PolyLikeExtension {
        k,
        period: level.period,
        p,
        v,
        v_boundary: v.boundary_loop(cfg.boundary_points, eta).iter().map(|z| (z.re, z.im)).collect(),
        diam_ratio: 2.0 * v.radius / p.len(),
        u,
        disk_scale,
        modulus,
        boundary_residual,
        inner_margin,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JuliaContainment {
    /// Smallest Poincare angle of a neighborhood of `P` holding every sample of `K`.
    pub beta: f64,
    /// Largest angle at the periodic boundary point between a nearby sample and the ray into `P`.
    pub sector_at_u: f64,
    pub grid_samples: usize,
    pub grid_non_escaping: usize,
    /// Samples of `K`: non-escaping grid nodes followed by backward-iteration points.
    pub points: Vec<(f64, f64)>,
}

/// Whether `horizon` returns of `z` under `f^period` all land in `domain`.
pub fn stays_in(map: &AnalyticMap, period: usize, domain: &dyn Region, z: C64, horizon: usize) -> bool {
    let mut w = z;
    for _ in 0..horizon {
        for _ in 0..period {
            w = map.evaluate(w);
            if w.norm_sqr() > 1e12 || !w.re.is_finite() {
                return false;
            }
        }
        if !domain.contains(w) {
            return false;
        }
    }
    true
}

/// Points accumulating on the Julia set: `depth` k-cycle pullbacks with random fold signs, starting
/// on the circle of half the radius of `v`.
pub fn julia_backward_samples(map: &AnalyticMap, level: &RenormLevel, v: &SlitDisk, count: usize, depth: usize, seed: u64) -> Result<Vec<C64>> {
    let combos = sign_combinations(fold_count(map, level));
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = StdRng::seed_from_u64(seed.wrapping_add(i as u64));
            let phi = rng.gen_range(0.05..PI - 0.05) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let mut z = C64::new(v.centre, 0.0) + C64::from_polar(0.5 * v.radius, phi);
            for _ in 0..depth {
                let signs = combos[rng.gen_range(0..combos.len())].clone();
                z = k_cycle_pullback(map, level, z, &BranchPolicy::Explicit(signs), Trust::Unbounded)?.last();
            }
            Ok(z)
        })
        .collect()
}

/// Escape-time classification on an `n x n` grid over the bounding box of `U`, joined with
/// backward-iteration samples (the filled Julia set of an infinitely renormalizable map has no
/// interior, so the grid alone may find nothing).
pub fn julia_containment(map: &AnalyticMap, level: &RenormLevel, ext: &PolyLikeExtension, n: usize, horizon: usize, backward: usize) -> Result<JuliaContainment> {
    let (lo, hi) = ext.u.bbox();
    let node = |k: usize| {
        let (i, j) = (k % n, k / n);
        // half-step offsets keep samples off the real axis
        C64::new(lo.re + (hi.re - lo.re) * (i as f64 + 0.5) / n as f64, lo.im + (hi.im - lo.im) * (j as f64 + 0.5) / n as f64)
    };
    let mut kept: Vec<C64> = (0..n * n)
        .into_par_iter()
        .map(node)
        .filter(|z| z.im != 0.0 && ext.u.contains(*z) && stays_in(map, ext.period, &ext.u, *z, horizon))
        .collect();
    let grid_non_escaping = kept.len();
    kept.extend(julia_backward_samples(map, level, &ext.v, backward, 16, 0x5eed)?);
    let p = ext.p;
    let beta = kept.iter().map(|z| poincare_angle(&p, *z)).fold(0.0, f64::max);
    let u = C64::new(p.a, 0.0);
    let inward = C64::new(p.b - p.a, 0.0);
    let sector_at_u = kept
        .iter()
        .filter(|z| (**z - u).norm() < 0.25 * p.len())
        .map(|z| ((*z - u) / inward).arg().abs())
        .fold(0.0, f64::max);
    Ok(JuliaContainment { beta, sector_at_u, grid_samples: n * n, grid_non_escaping, points: kept.iter().map(|z| (z.re, z.im)).collect() })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GrowthConstants {
    pub ell: u32,
    pub c: f64,
    pub c1: f64,
    pub c2: f64,
}

/// Fit of `dist(z,P)/|P| <= C1 (dist(z^ell, M)/|M|)^(1/ell) + C2` for `P = [-1, 1]` and intervals
/// `M` containing `[0, 1]` with `|M| <= c`.
pub fn quad_growth_bound_check(ell: u32, c: f64, samples: usize, radius: f64, seed: u64) -> GrowthConstants {
    assert!(ell >= 2 && ell % 2 == 0 && c >= 1.0);
    let p = OrientedInterval::new(-1.0, 1.0);
    let ms: Vec<OrientedInterval> = [0.0, 0.5, 1.0].iter().map(|s| OrientedInterval::new(-s * (c - 1.0), 1.0 + (1.0 - s) * (c - 1.0))).collect();
    let mut rng = StdRng::seed_from_u64(seed);
    let pts: Vec<(f64, f64)> = (0..samples)
        .flat_map(|_| {
            let z = C64::from_polar(radius * rng.gen_range(0.0f64..1.0).sqrt(), rng.gen_range(0.0..2.0 * PI));
            let fz = z.powu(ell);
            let lhs = p.dist_complex(z) / p.len();
            ms.iter().map(move |m| (lhs, (m.dist_complex(fz) / m.len()).powf(1.0 / ell as f64))).collect::<Vec<_>>()
        })
        .collect();
    let c1 = pts.iter().filter(|(_, t)| *t >= 1.0).map(|(l, t)| l / t).fold(0.0, f64::max);
    let c2 = pts.iter().map(|(l, t)| (l - c1 * t).max(0.0)).fold(0.0, f64::max);
    GrowthConstants { ell, c, c1, c2 }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct UnbranchedCheck {
    /// Largest relative `delta` with no postcritical point in `delta-P` outside `P`.
    pub delta: f64,
    pub margin: f64,
    pub unbranched: bool,
}

/// Modulus of `V \ K` with `V` slit outside `delta-P`; `K` is `P` plus the Julia samples snapped
/// to grid nodes.
pub fn unbranched_check(map: &AnalyticMap, level: &RenormLevel, ext: &PolyLikeExtension, julia: &JuliaContainment, grid_nodes: usize) -> Result<UnbranchedCheck> {
    let orbit = postcritical_orbit(map, level, POSTCRITICAL_POINTS);
    let delta = postcritical_gap(&ext.p, &orbit);
    if !(delta > 0.0) || !delta.is_finite() {
        return Ok(UnbranchedCheck { delta: if delta.is_finite() { delta } else { 0.0 }, margin: 0.0, unbranched: false });
    }
    let gap = ext.p.neighborhood(delta).intersect(&ext.v.gap).ok_or(Error::NotNested)?;
    let v = SlitDisk { gap, ..ext.v };
    let (lo, hi) = ext.u.bbox();
    let half = 0.6 * (hi.re - lo.re).max(hi.im - lo.im);
    let grid = GridSpec::square(C64::new(ext.p.mid(), 0.0), half, grid_nodes);
    let n = grid.nodes;
    let mut inner: Vec<bool> = (0..n * n)
        .map(|k| {
            let z = grid.node(k % n, k / n);
            z.im == 0.0 && ext.p.contains(z.re)
        })
        .collect();
    let step = (grid.hi.0 - grid.lo.0) / (n - 1) as f64;
    for &(x, y) in &julia.points {
        let i = ((x - grid.lo.0) / step).round();
        let j = ((y - grid.lo.1) / step).round();
        if i >= 0.0 && j >= 0.0 && (i as usize) < n && (j as usize) < n {
            inner[j as usize * n + i as usize] = true;
        }
    }
    let outer: Vec<bool> = region_mask(&v, &grid).into_iter().map(|b| !b).collect();
    let margin = match grid_modulus_bound(&inner, &outer, n) {
        Ok(m) => m,
        Err(Error::NotNested) => 0.0,
        Err(e) => return Err(e),
    };
    Ok(UnbranchedCheck { delta, margin, unbranched: margin > 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn round_annuli_are_exact() {
        let o = C64::new(0.3, -0.2);
        let inner = Disk::new(o, 1.0);
        for (r, m) in [((2.0 * PI).exp(), 1.0), (PI.exp(), 0.5)] {
            let est = round_modulus_bound(&Disk::new(o, r), &inner, &[o]);
            assert_relative_eq!(est, m, max_relative = 1e-12);
        }
    }

    #[test]
    fn square_annulus_bounds() {
        let c = C64::new(0.0, 0.0);
        let outer = JordanPolyline::square(c, 2.0, 8);
        let inner = JordanPolyline::square(c, 0.5, 8);
        let round = round_modulus_bound(&outer, &inner, &[c]);
        assert_relative_eq!(round, (2.0 / 0.5f64.hypot(0.5)).ln() / (2.0 * PI), max_relative = 1e-12);
        assert!((round - 0.1655).abs() < 1e-4);
        let est = modulus_lower_bound(&outer, &inner, &[c], Some(&GridSpec::square(c, 2.2, 129))).unwrap();
        assert!(est.grid.unwrap() >= round, "{est:?}");
    }

    #[test]
    fn grid_bound_below_exact_round_value() {
        let c = C64::new(0.0, 0.0);
        let est = modulus_lower_bound(&Disk::new(c, 4.0), &Disk::new(c, 1.0), &[], Some(&GridSpec::square(c, 4.2, 257))).unwrap();
        let exact = 4f64.ln() / (2.0 * PI);
        let g = est.grid.unwrap();
        assert!(g <= exact && g > 0.8 * exact, "{g} vs {exact}");
    }

    #[test]
    fn nested_check() {
        let c = C64::new(0.0, 0.0);
        assert!(matches!(
            modulus_lower_bound(&Disk::new(c, 1.0), &Disk::new(c, 2.0), &[c], Some(&GridSpec::square(c, 2.5, 33))),
            Err(Error::NotNested)
        ));
    }

    #[test]
    fn polyline_queries() {
        let sq = JordanPolyline::new(vec![C64::new(1.0, 1.0), C64::new(1.0, -1.0), C64::new(-1.0, -1.0), C64::new(-1.0, 1.0)]).unwrap();
        assert!(sq.signed_area() > 0.0);
        assert!(sq.contains(C64::new(0.2, 0.9)) && !sq.contains(C64::new(1.2, 0.0)));
        assert_relative_eq!(sq.boundary_dist(C64::new(0.5, 0.0)), 0.5);
        assert!(sq.is_simple(1e-12));
        let bow = JordanPolyline::new(vec![C64::new(0.0, 0.0), C64::new(1.0, 1.0), C64::new(1.0, 0.0), C64::new(0.0, 1.0)]).unwrap();
        assert!(!bow.is_simple(1e-12));
    }

    #[test]
    fn slit_disk_membership() {
        let v = SlitDisk { centre: 0.0, radius: 10.0, gap: OrientedInterval::new(-2.0, 3.0) };
        assert!(v.contains(C64::new(0.0, 0.0)));
        assert!(!v.contains(C64::new(5.0, 0.0)));
        assert!(v.contains(C64::new(5.0, 1e-9)));
        assert!(!v.contains(C64::new(0.0, 10.5)));
        assert_relative_eq!(v.boundary_dist(C64::new(4.0, 0.5)), 0.5);
        let lp = v.boundary_loop(64, 1e-6);
        assert!(lp.len() >= 64);
        assert!(lp.iter().all(|z| v.boundary_dist(*z) <= 1e-6 + 1e-12));
    }

    #[test]
    fn quadratic_growth_example() {
        let p = OrientedInterval::new(-1.0, 1.0);
        let m = OrientedInterval::new(0.0, 1.0);
        let z = C64::new(0.0, 2.0);
        assert_relative_eq!(p.dist_complex(z) / p.len(), 1.0);
        assert_relative_eq!((m.dist_complex(z * z) / m.len()).sqrt(), 2.0);
        let g = quad_growth_bound_check(2, 1.0, 4000, 10.0, 5);
        assert!(2.0 * g.c1 + g.c2 >= 1.0 - 1e-3, "{g:?}");
        assert!((g.c1 - 0.5).abs() < 0.01);
    }

    #[test]
    fn sign_combination_count() {
        assert_eq!(sign_combinations(1), vec![vec![Sign::Plus], vec![Sign::Minus]]);
        assert_eq!(sign_combinations(3).len(), 8);
    }
}
