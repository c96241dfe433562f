//! Oracles that only use `x*x + c` and plain bisection, never the library's own search code.
#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn quad(c: f64, x: f64) -> f64 {
    x * x + c
}

pub fn quad_iter(c: f64, x: f64, n: usize) -> f64 {
    (0..n).fold(x, |y, _| quad(c, y))
}

/// Bisection to adjacent floats on a sign change of `g` over `[a, b]`.
pub fn bisect_root(g: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut ga = g(a);
    loop {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            return m;
        }
        let gm = g(m);
        if gm == 0.0 {
            return m;
        }
        if (gm < 0.0) == (ga < 0.0) {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
}

/// Last point of `[good, bad]` where `pred` still holds, to adjacent floats.
pub fn bisect_edge(pred: impl Fn(f64) -> bool, mut good: f64, mut bad: f64) -> f64 {
    loop {
        let m = 0.5 * (good + bad);
        if m == good || m == bad {
            return good;
        }
        if pred(m) {
            good = m;
        } else {
            bad = m;
        }
    }
}

/// Parameters where `0` has period `2^n`, for `n = 0..=levels`.
pub fn superstable_parameters(levels: usize) -> Vec<f64> {
    let mut cs = vec![0.0, -1.0];
    let mut ratio = 4.0;
    while cs.len() <= levels {
        let n = cs.len();
        let step = cs[n - 1] - cs[n - 2];
        let guess = cs[n - 1] + step / ratio;
        let period = 1usize << n;
        let g = |c: f64| quad_iter(c, 0.0, period);
        let lo = cs[n - 1] + 0.5 * step / ratio;
        let hi = cs[n - 1] + 1.6 * step / ratio;
        assert!(g(lo).signum() != g(hi).signum() || g(guess) == 0.0, "no bracket at period {period}");
        let c = bisect_root(g, lo, hi);
        ratio = step / (c - cs[n - 1]);
        cs.push(c);
    }
    cs
}

/// Accumulation point of the period-doubling cascade, by Aitken extrapolation of the
/// superstable parameters.
pub fn feigenbaum_parameter() -> f64 {
    let cs = superstable_parameters(13);
    let n = cs.len() - 1;
    let (a, b, c) = (cs[n - 2], cs[n - 1], cs[n]);
    c - (c - b) * (c - b) / ((c - b) - (b - a))
}

/// Periodic point of period dividing `m` nearest to 0 within `radius`, by grid scan and bisection.
pub fn nearest_periodic_point(c: f64, m: usize, radius: f64, grid: usize) -> f64 {
    let g = |x: f64| quad_iter(c, x, m) - x;
    let xs: Vec<f64> = (0..=grid).map(|i| -radius + 2.0 * radius * i as f64 / grid as f64).collect();
    let mut best = f64::INFINITY;
    let mut prev = g(xs[0]);
    for w in xs.windows(2) {
        let cur = g(w[1]);
        if prev.signum() != cur.signum() {
            let r = bisect_root(g, w[0], w[1]);
            if r.abs() < best.abs() {
                best = r;
            }
        }
        prev = cur;
    }
    best
}

/// `|Q^k_0|` for `k = 1..=levels` by direct iteration: twice the distance from 0 to the nearest
/// periodic point of period `2^(k-1)`.
pub fn central_lengths(c: f64, levels: usize) -> Vec<f64> {
    let mut out = Vec::new();
    let mut radius = 2.0;
    for k in 1..=levels {
        let p = nearest_periodic_point(c, 1 << (k - 1), radius, 200_000);
        out.push(2.0 * p.abs());
        radius = 1.05 * p.abs();
    }
    out
}

const INSIDE: i64 = -1;
const NO_ENTRY: i64 = -2;

/// First-entry labels `(time, target)` of a uniform grid, for a quadratic map and a set of open
/// target intervals.
pub struct EntryGrid {
    pub c: f64,
    pub targets: Vec<(f64, f64)>,
    pub horizon: usize,
    pub lo: f64,
    pub hi: f64,
    h: f64,
    nodes: usize,
    labels: Vec<i64>,
    run_end: Vec<usize>,
    run_start: Vec<usize>,
}

impl EntryGrid {
    pub fn new(c: f64, targets: Vec<(f64, f64)>, domain: (f64, f64), horizon: usize, nodes: usize) -> Self {
        let (lo, hi) = domain;
        let h = (hi - lo) / (nodes - 1) as f64;
        let mut g = EntryGrid { c, targets, horizon, lo, hi, h, nodes, labels: Vec::new(), run_end: Vec::new(), run_start: Vec::new() };
        g.labels = (0..nodes).map(|i| g.label(g.node(i))).collect();
        g.run_end = vec![0; nodes];
        g.run_start = vec![0; nodes];
        for i in (0..nodes).rev() {
            g.run_end[i] = if i + 1 < nodes && g.labels[i + 1] == g.labels[i] { g.run_end[i + 1] } else { i };
        }
        for i in 0..nodes {
            g.run_start[i] = if i > 0 && g.labels[i - 1] == g.labels[i] { g.run_start[i - 1] } else { i };
        }
        g
    }

    fn node(&self, i: usize) -> f64 {
        if i + 1 == self.nodes {
            self.hi
        } else {
            self.lo + i as f64 * self.h
        }
    }

    fn inside(&self, y: f64) -> Option<usize> {
        self.targets.iter().position(|&(a, b)| a < y && y < b)
    }

    pub fn label(&self, x: f64) -> i64 {
        if self.inside(x).is_some() {
            return INSIDE;
        }
        let mut y = x;
        for n in 1..=self.horizon {
            y = quad(self.c, y);
            if let Some(t) = self.inside(y) {
                return (n * 1000 + t) as i64;
            }
        }
        NO_ENTRY
    }

    /// `(time, target, lo, hi)` of the entry domain holding `x`, or `None` when `x` is inside a
    /// target or never enters.
    pub fn domain_of(&self, x: f64) -> Option<(usize, usize, f64, f64)> {
        let l = self.label(x);
        if l < 0 {
            return None;
        }
        let pred = |y: f64| self.label(y) == l;
        let n = self.labels.len();
        let g = (((x - self.lo) / self.h).floor() as usize).min(n - 1);
        let right = if g + 1 < n && self.labels[g + 1] == l {
            let e = self.run_end[g + 1];
            if e + 1 < n {
                bisect_edge(pred, self.node(e), self.node(e + 1))
            } else {
                self.hi
            }
        } else if g + 1 < n {
            bisect_edge(pred, x, self.node(g + 1))
        } else {
            self.hi
        };
        let left = if self.labels[g] == l && self.node(g) <= x {
            let s = self.run_start[g];
            if s > 0 {
                bisect_edge(pred, self.node(s), self.node(s - 1))
            } else {
                self.lo
            }
        } else {
            bisect_edge(pred, x, self.node(g))
        };
        Some(((l / 1000) as usize, (l % 1000) as usize, left, right))
    }
}

/// Interval image under `x*x + c` as `(lo, hi)`.
pub fn quad_image(c: f64, (lo, hi): (f64, f64)) -> (f64, f64) {
    let (a, b) = (quad(c, lo), quad(c, hi));
    if lo <= 0.0 && 0.0 <= hi {
        (c, a.max(b))
    } else {
        (a.min(b), a.max(b))
    }
}

/// Real backward orbit of `z` along `j, f(j), .., f^n(j)`: at a fold the preimage is taken on
/// the side of 0 holding the midpoint of the interval. Returns `z_0, z_{-1}, .., z_{-n}` and the
/// interval each one belongs to.
pub fn real_backward_orbit(c: f64, j: (f64, f64), n: usize, z: f64) -> (Vec<f64>, Vec<(f64, f64)>) {
    let mut chain = vec![j];
    for _ in 0..n {
        chain.push(quad_image(c, *chain.last().unwrap()));
    }
    chain.reverse();
    let mut pts = vec![z];
    let mut w = z;
    for i in 0..n {
        let (lo, hi) = chain[i + 1];
        let (a, b) = if lo <= 0.0 && 0.0 <= hi {
            if 0.5 * (lo + hi) >= 0.0 {
                (0.0, hi)
            } else {
                (lo, 0.0)
            }
        } else {
            (lo, hi)
        };
        let g = |x: f64| quad(c, x) - w;
        let x = if g(a).signum() == g(b).signum() {
            if g(a).abs() < g(b).abs() {
                a
            } else {
                b
            }
        } else {
            bisect_root(g, a, b)
        };
        pts.push(x);
        w = x;
    }
    (pts, chain)
}

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut StdRng, lo: f64, hi: f64) -> f64 {
    rng.gen_range(lo..hi)
}

use renorm_lab::complex_pullback::{backward_orbit_along, BranchPolicy, Trust, DEFAULT_EPSILON};
use renorm_lab::interval_dynamics::{first_entry, Entry, OrientedInterval};
use renorm_lab::map_model::AnalyticMap;
use renorm_lab::renormalization::RenormLevel;

/// `|a - b| <= 1e-9 * scale`, with a floor of a few ulps of the values themselves.
pub fn close(a: f64, b: f64, scale: f64) -> bool {
    (a - b).abs() <= 1e-9 * scale + 8.0 * f64::EPSILON * a.abs().max(b.abs())
}

#[derive(Debug, Default)]
pub struct Agreement {
    pub checked: usize,
    pub skipped: usize,
    pub mismatches: Vec<String>,
}

impl Agreement {
    pub fn ok(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Entry domains of `count` random points against the grid oracle, with the level's nice set as
/// target. Points inside the set or never entering it are drawn again.
pub fn compare_first_entry(map: &AnalyticMap, c: f64, level: &RenormLevel, count: usize, horizon: usize, seed: u64) -> Agreement {
    let w = level.nice_set();
    let (lo, hi) = map.interval();
    let grid = EntryGrid::new(c, w.components.iter().map(|j| (j.lo(), j.hi())).collect(), (lo, hi), horizon, 1 << 22);
    let mut rng = rng(seed);
    let mut out = Agreement::default();
    while out.checked < count && out.skipped < 10 * count {
        let x = uniform(&mut rng, lo, hi);
        let oracle = grid.domain_of(x);
        let lib = first_entry(map, &w, x, horizon);
        match (oracle, lib) {
            (None, Err(_)) | (None, Ok(Entry::NoEntry)) => out.skipped += 1,
            (Some((n, t, a, b)), Ok(Entry::Domain(d))) => {
                out.checked += 1;
                let len = b - a;
                if d.time != n || d.target != t || !close(d.interval.lo(), a, len) || !close(d.interval.hi(), b, len) {
                    out.mismatches.push(format!(
                        "x={x:.17e}: oracle ({n},{t}) [{a:.17e}, {b:.17e}] vs ({},{}) [{:.17e}, {:.17e}]",
                        d.time,
                        d.target,
                        d.interval.lo(),
                        d.interval.hi()
                    ));
                }
            }
            (o, l) => {
                out.checked += 1;
                out.mismatches.push(format!("x={x:.17e}: oracle {o:?} vs {l:?}"));
            }
        }
    }
    out
}

/// Real backward orbits from random points of `f^n(J)` against the bisection oracle, over the
/// full cycle of `P` and over sub-chains of the slot chains.
pub fn compare_real_orbits(map: &AnalyticMap, c: f64, levels: &[RenormLevel], count: usize, seed: u64) -> Agreement {
    let mut rng = rng(seed);
    let mut out = Agreement::default();
    while out.checked < count {
        let level = &levels[rng.gen_range(0..levels.len())];
        let (j, n) = if rng.gen_bool(0.5) {
            (level.interval, level.period)
        } else {
            let chain = &level.involved[0].chain;
            let i = rng.gen_range(1..chain.len());
            (chain[i], rng.gen_range(1..=i))
        };
        let (_, chain) = real_backward_orbit(c, (j.lo(), j.hi()), n, 0.0);
        let (zlo, zhi) = chain[0];
        let z = zlo + (zhi - zlo) * rng.gen_range(1e-6..1.0 - 1e-6);
        let (pts, chain) = real_backward_orbit(c, (j.lo(), j.hi()), n, z);
        out.checked += 1;
        match backward_orbit_along(map, &j, n, num_complex::Complex64::new(z, 0.0), &BranchPolicy::Real, Trust::Unbounded, DEFAULT_EPSILON) {
            Ok(orb) => {
                for (i, (p, q)) in orb.points.iter().zip(&pts).enumerate() {
                    let scale = chain[i].1 - chain[i].0;
                    if !close(p.re, *q, scale) || p.im.abs() > 1e-9 * scale {
                        out.mismatches.push(format!("k={} n={n} z={z:.17e} step {i}: {p} vs {q:.17e}", level.k));
                        break;
                    }
                }
            }
            Err(e) => out.mismatches.push(format!("k={} n={n} z={z:.17e}: {e}", level.k)),
        }
    }
    out
}

pub fn interval(j: &OrientedInterval) -> (f64, f64) {
    (j.lo(), j.hi())
}
