use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::interval_dynamics::{image, images, tau_geom, OrientedInterval};
use crate::map_model::{AnalyticMap, CriticalPoint, Sign, TAU_NEWTON};
use crate::renormalization::RenormLevel;

pub const DEFAULT_EPSILON: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PoincareNbhd {
    pub j: OrientedInterval,
    pub theta: f64,
}

/// Angle `(a, z, b)` under which `J` is seen from `z`, in `[0, pi]`.
pub fn subtended_angle(j: &OrientedInterval, z: C64) -> f64 {
    let (a, b) = (C64::new(j.lo(), 0.0), C64::new(j.hi(), 0.0));
    if z.im == 0.0 {
        return if j.interior_contains(z.re) { PI } else { 0.0 };
    }
    ((a - z) / (b - z)).arg().abs()
}

/// Smallest `theta'` with `z` in the closure of `D_theta'(J)`.
pub fn poincare_angle(j: &OrientedInterval, z: C64) -> f64 {
    PI - subtended_angle(j, z)
}

impl PoincareNbhd {
    pub fn new(j: OrientedInterval, theta: f64) -> Self {
        assert!(theta > 0.0 && theta < PI, "internal angle must lie in (0, pi)");
        PoincareNbhd { j, theta }
    }

    pub fn contains(&self, z: C64) -> bool {
        subtended_angle(&self.j, z) > PI - self.theta
    }

    /// Point on the upper boundary arc, `s` in `(0, 1)` running from `hi` to `lo`.
    pub fn boundary_point(&self, s: f64) -> C64 {
        let r = 0.5 * self.j.len();
        let phi = PI - self.theta;
        let d = r / phi.tan();
        let centre = C64::new(self.j.mid(), d);
        let radius = r / phi.sin();
        let a0 = (-d).atan2(r);
        let a1 = PI - a0;
        centre + C64::from_polar(radius, a0 + s * (a1 - a0))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SectorAngle {
    pub at_lo: f64,
    pub at_hi: f64,
    pub min: f64,
}

/// Angles between `[a_i, z]` and the real rays from the endpoints pointing away from `J`.
pub fn angle_to_interval(z: C64, j: &OrientedInterval) -> SectorAngle {
    let at_hi = (z - C64::new(j.hi(), 0.0)).arg().abs();
    let at_lo = PI - (z - C64::new(j.lo(), 0.0)).arg().abs();
    SectorAngle { at_lo, at_hi, min: at_lo.min(at_hi) }
}

/// Jump angle: the sector angle, with points on the real line counted as angle 0.
pub fn jump_angle(z: C64, j: &OrientedInterval) -> f64 {
    if z.im == 0.0 {
        0.0
    } else {
        angle_to_interval(z, j).min
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BranchTag {
    Lap(usize),
    Fold(Sign),
}

#[derive(Clone, Debug, PartialEq)]
pub enum BranchPolicy {
    /// Fold signs follow the real itinerary.
    Real,
    /// One sign per fold step, in backward order.
    Explicit(Vec<Sign>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Trust {
    /// Points must stay within half the distance to off-chain critical values.
    Local,
    /// No radius check; for entire maps.
    Unbounded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BackwardOrbit {
    pub base: OrientedInterval,
    pub n: usize,
    /// `z_0, z_{-1}, .., z_{-n}`.
    pub points: Vec<C64>,
    /// Tag of the step `z_{-i} -> z_{-(i+1)}`.
    pub tags: Vec<BranchTag>,
    /// `f^{n-i}(J)` for `i = 0..=n`.
    pub chain: Vec<OrientedInterval>,
    /// Poincare angle of `z_{-i}` relative to `chain[i]`.
    pub angles: Vec<f64>,
    pub jumps: Vec<bool>,
}

impl BackwardOrbit {
    pub fn last(&self) -> C64 {
        *self.points.last().unwrap()
    }

    /// Largest `|f(z_{-(i+1)}) - z_{-i}|` along the orbit.
    pub fn forward_residual(&self, map: &AnalyticMap) -> f64 {
        self.points.windows(2).map(|w| (map.evaluate(w[1]) - w[0]).norm()).fold(0.0, f64::max)
    }

    pub fn fold_signs(&self) -> Vec<Sign> {
        self.tags
            .iter()
            .filter_map(|t| match t {
                BranchTag::Fold(s) => Some(*s),
                BranchTag::Lap(_) => None,
            })
            .collect()
    }

    /// `(i, re, im, tag, angle, jump)` per point.
    pub fn dump_rows(&self) -> Vec<(usize, f64, f64, String, f64, bool)> {
        self.points
            .iter()
            .enumerate()
            .map(|(i, z)| {
                let tag = match self.tags.get(i) {
                    Some(BranchTag::Lap(l)) => format!("lap{l}"),
                    Some(BranchTag::Fold(Sign::Plus)) => "fold+".to_string(),
                    Some(BranchTag::Fold(Sign::Minus)) => "fold-".to_string(),
                    None => "end".to_string(),
                };
                (i, z.re, z.im, tag, self.angles[i], self.jumps[i])
            })
            .collect()
    }
}

fn crit_in(map: &AnalyticMap, j: &OrientedInterval, tol: f64) -> Option<CriticalPoint> {
    map.critical_points().iter().copied().find(|c| c.position >= j.lo() - tol && c.position <= j.hi() + tol)
}

/// Half the distance from `image` to critical values lying on no chain interval, capped at a
/// quarter of the lap.
fn trust_radius(map: &AnalyticMap, chain: &[OrientedInterval], image: &OrientedInterval, lap_len: f64, tol: f64) -> f64 {
    let d = map
        .critical_values()
        .iter()
        .filter(|&&v| chain.iter().all(|c| v < c.lo() - tol || v > c.hi() + tol))
        .map(|&v| image.dist(v))
        .fold(f64::INFINITY, f64::min);
    (0.5 * d).min(0.25 * lap_len)
}

/// Inverse of `f` on `lap` at `w`, continued along the segment from the real anchor `x0`.
pub fn lap_inverse(map: &AnalyticMap, x0: f64, w: C64) -> Result<C64> {
    let w0 = C64::new(map.eval_real(x0), 0.0);
    let mut z = C64::new(x0, 0.0);
    let mut s = 0.0;
    let mut ds: f64 = 1.0;
    let scale = w.norm().max(1.0);
    while s < 1.0 {
        let sn = (s + ds).min(1.0);
        let wp = w0 + (w - w0) * s;
        let wn = w0 + (w - w0) * sn;
        let d = map.eval_d1(z).1;
        if d.norm() == 0.0 {
            return Err(Error::CriticalPointSingularity { x: z.re, deriv: 0.0 });
        }
        let pred = z + (wn - wp) / d;
        match map.newton(wn, pred, 50) {
            Some(zn) if (zn - pred).norm() <= 0.3 * (pred - z).norm() + TAU_NEWTON * scale / d.norm() => {
                z = zn;
                s = sn;
                ds = (ds * 2.0).min(1.0);
            }
            _ => {
                ds *= 0.5;
                if ds < 1e-12 {
                    return Err(Error::NewtonDivergence(format!("lap continuation stalled at s = {s}")));
                }
            }
        }
    }
    Ok(z)
}

/// One monotone backward step from `w` onto the lap of `target`, anchored at the real preimage.
fn monotone_step(map: &AnalyticMap, target: &OrientedInterval, image: &OrientedInterval, w: C64) -> Result<(C64, usize)> {
    let lap = map.lap_of(target.mid());
    let re = w.re.clamp(image.lo(), image.hi());
    if w.im == 0.0 && re != w.re {
        return Err(Error::BranchCutViolation { re: w.re, im: w.im });
    }
    let x0 = map
        .invert_on_lap(lap, re)
        .ok_or_else(|| Error::BranchBlocked(format!("{re} outside the image of lap {lap}")))?;
    if w.im == 0.0 {
        return Ok((C64::new(x0, 0.0), lap));
    }
    Ok((lap_inverse(map, x0, w)?, lap))
}

pub fn backward_orbit_along(
    map: &AnalyticMap,
    j: &OrientedInterval,
    n: usize,
    z: C64,
    policy: &BranchPolicy,
    trust: Trust,
    eps: f64,
) -> Result<BackwardOrbit> {
    let tol = tau_geom(map);
    let fwd = images(map, j, n);
    let chain: Vec<OrientedInterval> = fwd.iter().rev().copied().collect();
    let mut points = vec![z];
    let mut tags = Vec::with_capacity(n);
    let mut signs = match policy {
        BranchPolicy::Explicit(s) => s.iter().copied(),
        BranchPolicy::Real => [].iter().copied(),
    };
    let mut cur = z;
    for i in 0..n {
        let image = chain[i];
        let target = chain[i + 1];
        let next = if let Some(q) = crit_in(map, &target, tol) {
            let sign = match policy {
                BranchPolicy::Real => Sign::of(target.mid() - q.position),
                BranchPolicy::Explicit(_) => signs
                    .next()
                    .ok_or_else(|| Error::PullbackFailure(format!("no fold sign left at step {i}")))?,
            };
            tags.push(BranchTag::Fold(sign));
            map.inverse_branch_near_critical_value(&q, sign, cur)?
        } else {
            if trust == Trust::Local {
                let lap = map.lap_of(target.mid());
                let (lo, hi) = map.lap_bounds(lap);
                if image.dist_complex(cur) > trust_radius(map, &chain, &image, hi - lo, tol) {
                    return Err(Error::TrustRegionExit { step: i });
                }
            }
            let (zn, lap) = monotone_step(map, &target, &image, cur)?;
            tags.push(BranchTag::Lap(lap));
            zn
        };
        let resid = (map.evaluate(next) - cur).norm();
        if !(resid <= TAU_NEWTON * cur.norm().max(1.0)) {
            return Err(Error::NewtonDivergence(format!("residual {resid:e} at step {i}")));
        }
        points.push(next);
        cur = next;
    }
    let angles = points.iter().zip(&chain).map(|(z, c)| poincare_angle(c, *z)).collect();
    let jumps = points.iter().zip(&chain).map(|(z, c)| jump_angle(*z, c) > eps).collect();
    Ok(BackwardOrbit { base: *j, n, points, tags, chain, angles, jumps })
}

/// Indices `i` where `z_{-i}` sits at sector angle above `eps` from `chain[i]`.
pub fn epsilon_jump_scan(points: &[C64], chain: &[OrientedInterval], eps: f64) -> Vec<usize> {
    points.iter().zip(chain).enumerate().filter(|(_, (z, c))| jump_angle(**z, c) > eps).map(|(i, _)| i).collect()
}

/// Pullback of `z` along the full cycle of `P^k`, `N_k` steps.
pub fn k_cycle_pullback(map: &AnalyticMap, level: &RenormLevel, z: C64, policy: &BranchPolicy, trust: Trust) -> Result<BackwardOrbit> {
    backward_orbit_along(map, &level.interval, level.period, z, policy, trust, DEFAULT_EPSILON)
}

/// Tags that the real boundary point `x` of `P` produces along the cycle.
pub fn boundary_itinerary(map: &AnalyticMap, level: &RenormLevel, x: f64) -> Vec<BranchTag> {
    let tol = tau_geom(map);
    let fwd = images(map, &level.interval, level.period);
    let n = level.period;
    let orbit: Vec<f64> = (0..n).scan(x, |y, _| {
        let c = *y;
        *y = map.eval_real(c);
        Some(c)
    }).collect();
    (0..n)
        .map(|i| {
            let t = n - i - 1;
            match crit_in(map, &fwd[t], tol) {
                Some(q) => BranchTag::Fold(Sign::of(orbit[t] - q.position)),
                None => BranchTag::Lap(map.lap_of(orbit[t])),
            }
        })
        .collect()
}

/// True when the orbit's branch tags match the itinerary of one of the endpoints of `P`.
pub fn never_jump_itinerary_check(map: &AnalyticMap, orbit: &BackwardOrbit, level: &RenormLevel) -> bool {
    [level.interval.a, level.interval.b].iter().any(|&x| boundary_itinerary(map, level, x) == orbit.tags)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PoincareSample {
    pub theta: f64,
    pub theta_measured: f64,
    pub length_sum: f64,
}

/// Pulls back `samples` upper-boundary points of `D_theta(f^n(J))` along `J` and reports the largest
/// Poincare angle reached around `J`.
pub fn pullback_poincare_angle(map: &AnalyticMap, j: &OrientedInterval, n: usize, theta: f64, samples: usize) -> Result<PoincareSample> {
    let fwd = images(map, j, n);
    let length_sum: f64 = fwd.iter().map(|x| x.len()).sum();
    if n == 0 {
        return Ok(PoincareSample { theta, theta_measured: theta, length_sum });
    }
    let d = PoincareNbhd::new(fwd[n], theta);
    let mut worst: f64 = 0.0;
    for s in 0..samples {
        let z = d.boundary_point((s as f64 + 0.5) / samples as f64);
        let orb = backward_orbit_along(map, j, n, z, &BranchPolicy::Real, Trust::Unbounded, DEFAULT_EPSILON)?;
        worst = worst.max(poincare_angle(j, orb.last()));
    }
    Ok(PoincareSample { theta, theta_measured: worst, length_sum })
}

/// Smallest `K` with `theta_measured <= theta exp(K sum)` on every sample; may be negative.
pub fn poincare_envelope(samples: &[PoincareSample]) -> f64 {
    samples
        .iter()
        .filter(|s| s.length_sum > 0.0)
        .map(|s| (s.theta_measured / s.theta).ln() / s.length_sum)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Nonnegative constant of the almost-preserved bound: the envelope clipped at 0.
pub fn fit_poincare_constant(samples: &[PoincareSample]) -> f64 {
    poincare_envelope(samples).max(0.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PoincareBoundCheck {
    pub theta_measured: f64,
    pub theta_bound: f64,
    pub k_fit: f64,
}

pub fn pullback_poincare_bound_check(
    map: &AnalyticMap,
    j: &OrientedInterval,
    n: usize,
    theta: f64,
    samples: usize,
    k_fit: f64,
) -> Result<PoincareBoundCheck> {
    let s = pullback_poincare_angle(map, j, n, theta, samples)?;
    Ok(PoincareBoundCheck { theta_measured: s.theta_measured, theta_bound: theta * (k_fit * s.length_sum).exp(), k_fit })
}

/// Random monotone sub-chains `(R_{-i}, n)` of a level, `1 <= n <= i`.
pub fn random_monotone_chains(level: &RenormLevel, count: usize, seed: u64) -> Vec<(OrientedInterval, usize)> {
    let mut rng = StdRng::seed_from_u64(seed);
    let pool: Vec<(OrientedInterval, usize)> = level
        .involved
        .iter()
        .flat_map(|q| q.chain.iter().enumerate().skip(1).map(|(i, c)| (*c, i)))
        .collect();
    (0..count)
        .map(|_| {
            let (c, i) = pool[rng.gen_range(0..pool.len())];
            (c, rng.gen_range(1..=i))
        })
        .collect()
}

/// `(dist(z_{-n}, J)/|J|) / (dist(z, f^n J)/|f^n J|)` along a monotone chain.
pub fn distortion_ratio(map: &AnalyticMap, j: &OrientedInterval, n: usize, z: C64) -> Result<f64> {
    let orb = backward_orbit_along(map, j, n, z, &BranchPolicy::Real, Trust::Unbounded, DEFAULT_EPSILON)?;
    let img = orb.chain[0];
    Ok((j.dist_complex(orb.last()) / j.len()) / (img.dist_complex(z) / img.len()))
}

/// Angle between `[v, w]` and the ray from `v` in direction `dir`.
fn ray_angle(v: f64, w: C64, dir: Sign) -> f64 {
    let a = (w - C64::new(v, 0.0)).arg().abs();
    match dir {
        Sign::Plus => a,
        Sign::Minus => PI - a,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SectorScan {
    pub checked: usize,
    /// Smallest `eps` at which some sample violates the dichotomy.
    pub eps_floor: f64,
    pub violations: Vec<(f64, f64)>,
}

/// Samples `J = [a, b]` and `z` near `q` and records the smallest `eps` that breaks
/// "`angle(f z, f a, f J) <= eps` implies `angle(z, b, J) > eps`" over intervals with `q` outside,
/// oriented so that `b` is the endpoint farther from `q`. Otherwise the implication fails (see tests).
pub fn fold_sector_scan(map: &AnalyticMap, q: &CriticalPoint, scale: f64, samples: usize, eps: f64, seed: u64) -> SectorScan {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut floor = f64::INFINITY;
    let mut violations = Vec::new();
    let mut checked = 0;
    for _ in 0..samples {
        let a = q.position + scale * rng.gen_range(-1.0..1.0);
        let b = q.position + scale * rng.gen_range(-1.0..1.0);
        let z = C64::new(q.position + scale * rng.gen_range(-2.0..2.0), scale * rng.gen_range(-2.0..2.0));
        if (a - b).abs() < 1e-6 * scale || z.im == 0.0 {
            continue;
        }
        let (a, b) = if (a - q.position).abs() <= (b - q.position).abs() { (a, b) } else { (b, a) };
        let j = OrientedInterval::new(a, b);
        if j.contains(q.position) {
            continue;
        }
        let fj = image(map, &j);
        let fa = map.eval_real(a);
        let away_f = if fa == fj.lo() { Sign::Minus } else { Sign::Plus };
        let away_j = if b >= a { Sign::Plus } else { Sign::Minus };
        let threshold = ray_angle(fa, map.evaluate(z), away_f).max(ray_angle(b, z, away_j));
        checked += 1;
        floor = floor.min(threshold);
        if threshold <= eps {
            violations.push((z.re, z.im));
        }
    }
    SectorScan { checked, eps_floor: floor, violations }
}

/// Smallest `eps` breaking the first bullet near a fold: a small angle of `f(z)` at `f(q)` on the
/// side away from the image forces a large angle of `z` at `q` on both sides.
pub fn critical_value_sector_scan(map: &AnalyticMap, q: &CriticalPoint, scale: f64, samples: usize, seed: u64) -> f64 {
    let mut rng = StdRng::seed_from_u64(seed);
    let v = map.eval_real(q.position);
    let is_max = map.eval_real(q.position + 1e-3 * scale) < v;
    let away = if is_max { Sign::Plus } else { Sign::Minus };
    let mut floor = f64::INFINITY;
    for _ in 0..samples {
        let z = C64::new(q.position + scale * rng.gen_range(-1.0..1.0), scale * rng.gen_range(-1.0..1.0));
        if z.im == 0.0 {
            continue;
        }
        let lhs = ray_angle(v, map.evaluate(z), away);
        let rhs = ray_angle(q.position, z, Sign::Plus).min(ray_angle(q.position, z, Sign::Minus));
        floor = floor.min(lhs.max(rhs));
    }
    floor
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthSample {
    pub z: (f64, f64),
    pub input_ratio: f64,
    pub output_ratio: f64,
    pub jumps: usize,
}

impl GrowthSample {
    pub fn ratio(&self) -> f64 {
        self.output_ratio / self.input_ratio
    }
}

/// Points at relative distance in `[rmin, rmax]` from `j`, upper half plane.
pub fn points_at_relative_distance(j: &OrientedInterval, rmin: f64, rmax: f64, count: usize, seed: u64) -> Vec<C64> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let rho = rng.gen_range(rmin..=rmax) * j.len();
            let phi: f64 = rng.gen_range(0.02..PI - 0.02);
            let base = if phi < PI / 2.0 { j.hi() } else { j.lo() };
            let t = rng.gen_range(0.0..1.0);
            let base = if phi.sin() > 0.999 { j.lo() + t * j.len() } else { base };
            C64::new(base, 0.0) + C64::from_polar(rho, phi)
        })
        .collect()
}

/// Distance growth along the monotone chain of `slot`: `z` near `Q_0` pulled back by `f^{n^q - 1}`.
pub fn linear_growth(map: &AnalyticMap, level: &RenormLevel, slot: usize, zs: &[C64]) -> Result<Vec<GrowthSample>> {
    let chain = level.chain(slot)?;
    let n = chain.len() - 1;
    let q0 = chain[0];
    let start = chain[n];
    zs.par_iter()
        .map(|&z| {
            let orb = backward_orbit_along(map, &start, n, z, &BranchPolicy::Real, Trust::Unbounded, DEFAULT_EPSILON)?;
            Ok(GrowthSample {
                z: (z.re, z.im),
                input_ratio: q0.dist_complex(z) / q0.len(),
                output_ratio: start.dist_complex(orb.last()) / start.len(),
                jumps: orb.jumps.iter().filter(|&&j| j).count(),
            })
        })
        .collect()
}

/// Smallest `C` valid for every sample.
pub fn growth_constant(samples: &[GrowthSample]) -> f64 {
    samples.iter().map(GrowthSample::ratio).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit() -> OrientedInterval {
        OrientedInterval::new(-1.0, 1.0)
    }

    #[test]
    fn poincare_membership_examples() {
        let d = PoincareNbhd::new(unit(), PI / 2.0);
        assert!(d.contains(C64::new(0.0, 0.5)));
        assert!(!d.contains(C64::new(0.0, 2.0)));
        assert!(d.contains(C64::new(0.3, 0.0)));
        assert!(!d.contains(C64::new(1.3, 0.0)));
        let wide = PoincareNbhd::new(unit(), 3.0 * PI / 4.0);
        assert!(wide.contains(C64::new(0.0, 1.2)));
        // arc through +-1 with inscribed angle pi/4 peaks at cot(pi/8) + csc(pi/8)
        let top = 1.0 / (PI / 8.0).tan() * 0.0 + (1.0 + 2f64.sqrt());
        assert!(wide.contains(C64::new(0.0, top * 0.999)));
        assert!(!wide.contains(C64::new(0.0, top * 1.001)));
    }

    #[test]
    fn boundary_points_lie_on_the_arc() {
        for theta in [0.3, PI / 2.0, 2.5] {
            let d = PoincareNbhd::new(OrientedInterval::new(0.2, 1.7), theta);
            for s in [0.1, 0.5, 0.9] {
                let z = d.boundary_point(s);
                assert!(z.im > 0.0);
                assert_relative_eq!(poincare_angle(&d.j, z), theta, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn sector_angle_examples() {
        let s = angle_to_interval(C64::new(2.0, 1.0), &unit());
        assert_relative_eq!(s.at_hi, PI / 4.0, max_relative = 1e-14);
        assert_eq!(angle_to_interval(C64::new(3.0, 0.0), &unit()).at_hi, 0.0);
        assert_relative_eq!(angle_to_interval(C64::new(1.0, 1e-9), &unit()).at_hi, PI / 2.0, max_relative = 1e-12);
        let z = C64::new(-0.4, 0.7);
        let a = angle_to_interval(z, &unit());
        let b = angle_to_interval(z.conj(), &unit());
        assert_eq!(a, b);
    }

    #[test]
    fn empty_and_real_pullbacks() {
        let f = AnalyticMap::quadratic(-1.0).unwrap();
        let j = OrientedInterval::new(0.3, 0.5);
        let z = C64::new(0.1, 0.2);
        let o = backward_orbit_along(&f, &j, 0, z, &BranchPolicy::Real, Trust::Local, 0.05).unwrap();
        assert_eq!(o.points, vec![z]);
        let fj = images(&f, &j, 2)[2];
        let w = C64::new(fj.mid(), 0.0);
        let o = backward_orbit_along(&f, &j, 2, w, &BranchPolicy::Real, Trust::Local, 0.05).unwrap();
        assert!(j.interior_contains(o.last().re) && o.last().im == 0.0);
        assert!(o.jumps.iter().all(|j| !j));
        assert!((f.iterate(o.last().re, 2) - w.re).abs() < 1e-12);
    }

    #[test]
    fn fold_step_is_principal_sqrt() {
        let f = AnalyticMap::polynomial(vec![0.0, 0.0, 1.0], (-1.0, 1.0)).unwrap();
        let j = OrientedInterval::new(-0.5, 0.9);
        let z = C64::new(0.5, 0.1);
        let o = backward_orbit_along(&f, &j, 1, z, &BranchPolicy::Explicit(vec![Sign::Plus]), Trust::Unbounded, 0.05).unwrap();
        assert_eq!(o.tags, vec![BranchTag::Fold(Sign::Plus)]);
        assert!((o.last() - z.sqrt()).norm() < 1e-12);
        assert!((f.evaluate(o.last()) - z).norm() < TAU_NEWTON);
    }

    #[test]
    fn affine_chain_preserves_angle() {
        let f = AnalyticMap::kernel_only(crate::map_model::Representation::Polynomial(vec![0.1, -2.0]));
        let j = OrientedInterval::new(0.1, 0.3);
        let s = pullback_poincare_angle(&f, &j, 1, 1.0, 32).unwrap();
        assert_relative_eq!(s.theta_measured, 1.0, max_relative = 1e-9);
    }

    #[test]
    fn jump_scan_examples() {
        let chain = vec![OrientedInterval::new(0.0, 1e-3); 3];
        let real = vec![C64::new(5e-4, 0.0); 3];
        assert!(epsilon_jump_scan(&real, &chain, 0.05).is_empty());
        let pts = vec![C64::new(5e-4, 0.0), C64::new(5e-4, 1.0), C64::new(5e-4, 0.0)];
        assert_eq!(epsilon_jump_scan(&pts, &chain, 0.05), vec![1]);
    }

    #[test]
    fn trust_region_exit_far_from_chain() {
        let f = AnalyticMap::quadratic(-1.0).unwrap();
        let j = OrientedInterval::new(-1.25, -1.1);
        let z = C64::new(0.3, 5.0);
        assert!(matches!(
            backward_orbit_along(&f, &j, 1, z, &BranchPolicy::Real, Trust::Local, 0.05),
            Err(Error::TrustRegionExit { step: 0 })
        ));
    }

    #[test]
    fn sector_implication_needs_critical_point_outside() {
        let f = AnalyticMap::polynomial(vec![0.0, 0.0, 1.0], (-1.0, 1.0)).unwrap();
        let j = OrientedInterval::new(-0.5, 0.3);
        let z = C64::new(0.6, 0.001);
        let fj = image(&f, &j);
        assert_eq!(fj.hi(), f.eval_real(j.a));
        assert!(ray_angle(j.b, z, Sign::Plus) < 0.01);
        assert!(ray_angle(f.eval_real(j.a), f.evaluate(z), Sign::Plus) < 0.02);
        // near endpoint as b: the outward ray crosses q and meets the mirror image of z
        let j = OrientedInterval::new(-0.9, -0.8);
        let z = C64::new(1.4, 0.001);
        assert!(ray_angle(j.b, z, Sign::Plus) < 0.01);
        assert!(ray_angle(f.eval_real(j.a), f.evaluate(z), Sign::Plus) < 0.01);
        let q = f.critical_points()[0];
        let scan = fold_sector_scan(&f, &q, 0.5, 20000, 0.5, 3);
        assert!(scan.checked > 5000 && scan.violations.is_empty(), "{:?}", scan.eps_floor);
        assert!(critical_value_sector_scan(&f, &q, 0.5, 20000, 3) > 0.5);
    }
}
