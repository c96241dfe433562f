use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map_model::{AnalyticMap, CriticalPoint, TAU_ROOT};

/// Interval whose endpoint order carries an orientation; `a` need not be below `b`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrientedInterval {
    pub a: f64,
    pub b: f64,
}

impl OrientedInterval {
    pub fn new(a: f64, b: f64) -> Self {
        debug_assert!(a != b, "degenerate interval");
        OrientedInterval { a, b }
    }

    pub fn sorted(lo: f64, hi: f64) -> Self {
        OrientedInterval { a: lo.min(hi), b: lo.max(hi) }
    }

    pub fn lo(&self) -> f64 {
        self.a.min(self.b)
    }

    pub fn hi(&self) -> f64 {
        self.a.max(self.b)
    }

    pub fn len(&self) -> f64 {
        (self.b - self.a).abs()
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.a + self.b)
    }

    pub fn is_increasing(&self) -> bool {
        self.b > self.a
    }

    pub fn reversed(&self) -> Self {
        OrientedInterval { a: self.b, b: self.a }
    }

    /// Same point set, endpoints in increasing order.
    pub fn ascending(&self) -> Self {
        OrientedInterval { a: self.lo(), b: self.hi() }
    }

    /// Rebuilds an interval with `lo`/`hi` in place of the current ones, keeping orientation.
    pub fn with_bounds(&self, lo: f64, hi: f64) -> Self {
        if self.is_increasing() {
            OrientedInterval { a: lo, b: hi }
        } else {
            OrientedInterval { a: hi, b: lo }
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo() && x <= self.hi()
    }

    pub fn interior_contains(&self, x: f64) -> bool {
        x > self.lo() && x < self.hi()
    }

    pub fn contains_interval(&self, other: &OrientedInterval, tol: f64) -> bool {
        other.lo() >= self.lo() - tol && other.hi() <= self.hi() + tol
    }

    /// Length of the intersection; negative values are the gap between the intervals.
    pub fn overlap(&self, other: &OrientedInterval) -> f64 {
        self.hi().min(other.hi()) - self.lo().max(other.lo())
    }

    pub fn hull(&self, other: &OrientedInterval) -> OrientedInterval {
        OrientedInterval::sorted(self.lo().min(other.lo()), self.hi().max(other.hi()))
    }

    pub fn intersect(&self, other: &OrientedInterval) -> Option<OrientedInterval> {
        let lo = self.lo().max(other.lo());
        let hi = self.hi().min(other.hi());
        (hi > lo).then(|| self.with_bounds(lo, hi))
    }

    pub fn dist(&self, x: f64) -> f64 {
        if x < self.lo() {
            self.lo() - x
        } else if x > self.hi() {
            x - self.hi()
        } else {
            0.0
        }
    }

    pub fn dist_complex(&self, z: C64) -> f64 {
        let x = z.re.clamp(self.lo(), self.hi());
        (z - C64::new(x, 0.0)).norm()
    }

    /// `delta`-neighborhood: points within `delta |J|` of `J`.
    pub fn neighborhood(&self, delta: f64) -> OrientedInterval {
        let r = delta * self.len();
        self.with_bounds(self.lo() - r, self.hi() + r)
    }

    /// Largest `delta` with `delta`-`self` inside `outer`; negative if not contained.
    pub fn margin_in(&self, outer: &OrientedInterval) -> f64 {
        (self.lo() - outer.lo()).min(outer.hi() - self.hi()) / self.len()
    }
}

pub fn tau_geom(map: &AnalyticMap) -> f64 {
    1e-11 * map.interval_len()
}

pub fn domain(map: &AnalyticMap) -> OrientedInterval {
    let (lo, hi) = map.interval();
    OrientedInterval::new(lo, hi)
}

/// `f(J)`: orientation follows the endpoints when no critical point lies in `J`.
pub fn image(map: &AnalyticMap, j: &OrientedInterval) -> OrientedInterval {
    let fa = map.eval_real(j.a);
    let fb = map.eval_real(j.b);
    let inner: Vec<f64> = map
        .critical_points()
        .iter()
        .filter(|c| j.interior_contains(c.position))
        .map(|c| map.eval_real(c.position))
        .collect();
    if inner.is_empty() {
        return OrientedInterval { a: fa, b: fb };
    }
    let lo = inner.iter().fold(fa.min(fb), |m, &v| m.min(v));
    let hi = inner.iter().fold(fa.max(fb), |m, &v| m.max(v));
    OrientedInterval::sorted(lo, hi)
}

pub fn images(map: &AnalyticMap, j: &OrientedInterval, n: usize) -> Vec<OrientedInterval> {
    let mut out = Vec::with_capacity(n + 1);
    let mut cur = *j;
    out.push(cur);
    for _ in 0..n {
        cur = image(map, &cur);
        out.push(cur);
    }
    out
}

/// Farthest point from `x0` towards `limit` such that `pred` holds on the way, found by
/// doubling steps followed by bisection down to adjacent floats.
pub(crate) fn grow<P: Fn(f64) -> bool>(x0: f64, limit: f64, step0: f64, pred: P) -> f64 {
    let dir = (limit - x0).signum();
    if dir == 0.0 {
        return x0;
    }
    let span = (limit - x0).abs();
    let mut good = x0;
    let mut step = step0.min(span).max(f64::MIN_POSITIVE);
    let bad;
    loop {
        let y = if step >= span { limit } else { x0 + dir * step };
        if pred(y) {
            good = y;
            if y == limit {
                return limit;
            }
            step *= 2.0;
        } else {
            bad = y;
            break;
        }
    }
    bisect_boundary(good, bad, &pred)
}

pub(crate) fn bisect_boundary<P: Fn(f64) -> bool>(mut good: f64, mut bad: f64, pred: &P) -> f64 {
    let floor = 1e-17 * (good.abs() + bad.abs()).max(1e-300);
    loop {
        let m = 0.5 * (good + bad);
        if m == good || m == bad || (good - bad).abs() <= floor {
            return good;
        }
        if pred(m) {
            good = m;
        } else {
            bad = m;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NiceSet {
    pub components: Vec<OrientedInterval>,
}

impl NiceSet {
    pub fn new(mut components: Vec<OrientedInterval>) -> Self {
        components.sort_by(|x, y| x.lo().partial_cmp(&y.lo()).unwrap());
        NiceSet { components }
    }

    pub fn interior_index(&self, x: f64) -> Option<usize> {
        self.components.iter().position(|c| c.interior_contains(x))
    }

    /// Disjoint components, one critical point inside each, and boundary orbits that stay
    /// out of the interior up to `horizon`.
    pub fn is_nice(&self, map: &AnalyticMap, horizon: usize) -> bool {
        let tol = tau_geom(map);
        for w in self.components.windows(2) {
            if w[0].overlap(&w[1]) > tol {
                return false;
            }
        }
        for c in &self.components {
            let n = map.critical_points().iter().filter(|q| c.interior_contains(q.position)).count();
            if n != 1 {
                return false;
            }
            for x0 in [c.a, c.b] {
                let mut y = x0;
                for _ in 0..horizon {
                    y = map.eval_real(y);
                    if self.components.iter().any(|w| y > w.lo() + tol && y < w.hi() - tol) {
                        return false;
                    }
                }
            }
        }
        true
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntryDomain {
    pub interval: OrientedInterval,
    pub time: usize,
    pub target: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Entry {
    Domain(EntryDomain),
    NoEntry,
}

fn entry_time(map: &AnalyticMap, w: &NiceSet, x: f64, horizon: usize) -> Option<(usize, usize)> {
    let mut y = x;
    for n in 1..=horizon {
        y = map.eval_real(y);
        if let Some(i) = w.interior_index(y) {
            return Some((n, i));
        }
    }
    None
}

pub fn first_entry(map: &AnalyticMap, w: &NiceSet, x: f64, horizon: usize) -> Result<Entry> {
    if w.interior_index(x).is_some() {
        return Err(Error::InsideNiceSet(x));
    }
    let Some((n, target)) = entry_time(map, w, x, horizon) else {
        return Ok(Entry::NoEntry);
    };
    let dom = domain(map);
    let pred = |y: f64| w.interior_index(y).is_none() && entry_time(map, w, y, n) == Some((n, target));
    let step0 = 1e-9 * map.interval_len();
    let mut interval = OrientedInterval::sorted(grow(x, dom.lo(), step0, pred), grow(x, dom.hi(), step0, pred));
    if !entry_domain_consistent(map, w, &interval, n, target) {
        // A doubling step jumped over a foreign domain; retry with small steps.
        let lo = creep(x, dom.lo(), &pred, map.interval_len());
        let hi = creep(x, dom.hi(), &pred, map.interval_len());
        interval = OrientedInterval::sorted(lo, hi);
    }
    Ok(Entry::Domain(EntryDomain { interval, time: n, target }))
}

fn creep<P: Fn(f64) -> bool>(x0: f64, limit: f64, pred: &P, scale: f64) -> f64 {
    let dir = (limit - x0).signum();
    let step = 1e-6 * scale;
    let mut good = x0;
    loop {
        let y = good + dir * step;
        if (y - limit) * dir >= 0.0 {
            return if pred(limit) { limit } else { bisect_boundary(good, limit, pred) };
        }
        if !pred(y) {
            return bisect_boundary(good, y, pred);
        }
        good = y;
    }
}

fn entry_domain_consistent(map: &AnalyticMap, w: &NiceSet, j: &OrientedInterval, n: usize, target: usize) -> bool {
    let mut cur = *j;
    for _ in 1..n {
        cur = image(map, &cur);
        if w.components.iter().any(|c| c.overlap(&cur) > 0.0) {
            return false;
        }
    }
    cur = image(map, &cur);
    w.components[target].contains_interval(&cur, tau_geom(map))
}

fn lap_itinerary(map: &AnalyticMap, x: f64, n: usize) -> Vec<usize> {
    let mut y = x;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        out.push(map.lap_of(y));
        y = map.eval_real(y);
    }
    out
}

/// Component of the complement of the first `n` critical preimages that contains `x`.
pub fn maximal_monotone_interval(map: &AnalyticMap, x: f64, n: usize) -> Result<OrientedInterval> {
    let dom = domain(map);
    if n == 0 {
        return Ok(dom);
    }
    let tol = TAU_ROOT * map.interval_len();
    let mut y = x;
    for step in 0..n {
        if map.critical_points().iter().any(|c| (y - c.position).abs() < tol) {
            return Err(Error::CriticalOrbit { x, step });
        }
        y = map.eval_real(y);
    }
    let it = lap_itinerary(map, x, n);
    let pred = |y: f64| lap_itinerary(map, y, n) == it;
    let step0 = 1e-9 * map.interval_len();
    Ok(OrientedInterval::sorted(grow(x, dom.lo(), step0, pred), grow(x, dom.hi(), step0, pred)))
}

/// Symmetric interval `L` around `c` with `f(L) = f(J)`, orientation of `J` kept.
pub fn symmetrize(map: &AnalyticMap, j: &OrientedInterval, c: &CriticalPoint) -> Result<OrientedInterval> {
    let tol = tau_geom(map);
    if c.position < j.lo() - tol || c.position > j.hi() + tol {
        return Err(Error::NotLocallyUnimodal(format!("critical point {} not in J", c.position)));
    }
    let cps = map.critical_points();
    let idx = cps
        .iter()
        .position(|q| q.position == c.position)
        .ok_or_else(|| Error::NotLocallyUnimodal("unknown critical point".into()))?;
    if cps.iter().enumerate().any(|(i, q)| i != idx && q.position > j.lo() - tol && q.position < j.hi() + tol) {
        return Err(Error::NotLocallyUnimodal("J contains another critical point".into()));
    }
    let v = map.eval_real(c.position);
    let (ea, eb) = (map.eval_real(j.a), map.eval_real(j.b));
    let far = if (ea - v).abs() >= (eb - v).abs() { ea } else { eb };
    let left = map
        .invert_on_lap(idx, far)
        .ok_or_else(|| Error::NotLocallyUnimodal(format!("value {far} not attained left of {}", c.position)))?;
    let right = map
        .invert_on_lap(idx + 1, far)
        .ok_or_else(|| Error::NotLocallyUnimodal(format!("value {far} not attained right of {}", c.position)))?;
    Ok(j.with_bounds(left, right))
}

/// Monotone preimage of `u` on the lap containing `lap_hint`; `Ũ.a` maps to `U.a`.
pub fn pullback_monotone(map: &AnalyticMap, u: &OrientedInterval, lap_hint: f64) -> Result<OrientedInterval> {
    let lap = map.lap_of(lap_hint);
    let (lo, hi) = map.lap_bounds(lap);
    let (flo, fhi) = (map.eval_real(lo), map.eval_real(hi));
    let (vmin, vmax) = (flo.min(fhi), flo.max(fhi));
    let tol = tau_geom(map);
    let crit_values = map.critical_values();
    for &v in &crit_values {
        if u.lo() - tol <= v && v <= u.hi() + tol && (v - vmin).abs().min((v - vmax).abs()) <= tol {
            return Err(Error::BranchBlocked(format!("critical value {v} meets U = [{}, {}]", u.lo(), u.hi())));
        }
    }
    if u.lo() < vmin - tol || u.hi() > vmax + tol {
        return Err(Error::BranchBlocked(format!(
            "U = [{}, {}] exceeds the lap image [{vmin}, {vmax}]",
            u.lo(),
            u.hi()
        )));
    }
    let inv = |y: f64| map.invert_on_lap(lap, y.clamp(vmin, vmax)).unwrap();
    Ok(OrientedInterval::new(inv(u.a), inv(u.b)))
}

/// True when at most one member of `family` sits inside `j` (containment up to `tol`).
pub fn star_k(family: &[OrientedInterval], j: &OrientedInterval, tol: f64) -> bool {
    family.iter().filter(|a| j.contains_interval(a, tol)).count() <= 1
}
