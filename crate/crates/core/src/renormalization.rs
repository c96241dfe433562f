use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval_dynamics::{
    bisect_boundary, domain, image, images, pullback_monotone, symmetrize, tau_geom, NiceSet, OrientedInterval,
};
use crate::map_model::AnalyticMap;

pub const SEARCH_GRID: usize = 2048;

/// Critical point met by the renormalization cycle, with its cycle data at one level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvolvedPoint {
    pub crit: usize,
    pub position: f64,
    /// First `i` with the critical point in `f^i(P)`.
    pub hit_time: usize,
    /// Iterates from the predecessor's `Q0` into this point's `Q0`.
    pub transit: usize,
    pub q0: OrientedInterval,
    /// `R_{-i}` for `i = 0..transit`, `f(R_{-(i+1)}) = R_{-i}`.
    pub chain: Vec<OrientedInterval>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenormLevel {
    pub k: usize,
    pub period: usize,
    pub p_index: usize,
    /// `a` is the periodic boundary point.
    pub interval: OrientedInterval,
    /// Cycle order, starting at `p`.
    pub involved: Vec<InvolvedPoint>,
    pub boundary_orbit: Vec<f64>,
    pub chain_error: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FamilyMember {
    pub slot: usize,
    pub i: usize,
    pub interval: OrientedInterval,
}

impl RenormLevel {
    pub fn successor(&self, slot: usize) -> usize {
        (slot + 1) % self.involved.len()
    }

    pub fn predecessor(&self, slot: usize) -> usize {
        (slot + self.involved.len() - 1) % self.involved.len()
    }

    pub fn slot_of(&self, crit: usize) -> Option<usize> {
        self.involved.iter().position(|q| q.crit == crit)
    }

    pub fn cycle(&self, map: &AnalyticMap) -> Vec<OrientedInterval> {
        let mut v = images(map, &self.interval, self.period);
        v.pop();
        v
    }

    pub fn chain(&self, slot: usize) -> Result<&[OrientedInterval]> {
        if let Some(e) = &self.chain_error {
            return Err(Error::ChainBroken(e.clone()));
        }
        Ok(&self.involved[slot].chain)
    }

    /// `f^i(Q0^q)` for `0 < i <= n^{q'}` over all involved `q`.
    pub fn family(&self, map: &AnalyticMap) -> Vec<FamilyMember> {
        let mut out = Vec::new();
        for (slot, q) in self.involved.iter().enumerate() {
            let n = self.involved[self.successor(slot)].transit;
            for (i, j) in images(map, &q.q0, n).into_iter().enumerate().skip(1) {
                out.push(FamilyMember { slot, i, interval: j });
            }
        }
        out
    }

    pub fn nice_set(&self) -> NiceSet {
        NiceSet::new(self.involved.iter().map(|q| q.q0).collect())
    }

    pub fn max_cycle_len(&self, map: &AnalyticMap) -> f64 {
        self.cycle(map).iter().map(|j| j.len()).fold(0.0, f64::max)
    }
}

fn overlap_sweep(ivs: &[OrientedInterval]) -> f64 {
    let mut v: Vec<(f64, f64)> = ivs.iter().map(|j| (j.lo(), j.hi())).collect();
    v.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    let mut worst = f64::NEG_INFINITY;
    let mut max_hi = f64::NEG_INFINITY;
    for (lo, hi) in v {
        worst = worst.max(max_hi - lo);
        max_hi = max_hi.max(hi);
    }
    worst
}

fn periodic_roots(map: &AnalyticMap, parent: &OrientedInterval, n: usize) -> Vec<f64> {
    let g = |x: f64| map.iterate(x, n) - x;
    let (lo, hi) = (parent.lo(), parent.hi());
    let xs: Vec<f64> = (0..=SEARCH_GRID).map(|i| lo + (hi - lo) * i as f64 / SEARCH_GRID as f64).collect();
    let vals: Vec<f64> = xs.iter().map(|&x| g(x)).collect();
    let mut roots = Vec::new();
    for i in 0..SEARCH_GRID {
        if vals[i] == 0.0 {
            roots.push(xs[i]);
        } else if vals[i] * vals[i + 1] < 0.0 {
            let s = vals[i] > 0.0;
            roots.push(bisect_boundary(xs[i], xs[i + 1], &|x| (g(x) > 0.0) == s));
        }
    }
    if vals[SEARCH_GRID] == 0.0 {
        roots.push(xs[SEARCH_GRID]);
    }
    roots
}

/// Largest admissible restrictive interval of period `n` around critical point `p_index`.
fn candidate_for_period(map: &AnalyticMap, p_index: usize, parent: &OrientedInterval, n: usize) -> Option<OrientedInterval> {
    let cp = map.critical_points()[p_index];
    let p = cp.position;
    let tol = tau_geom(map);
    let mut best: Option<OrientedInterval> = None;
    for u in periodic_roots(map, parent, n) {
        if (u - p).abs() < 1e-12 * parent.len() {
            continue;
        }
        let Ok(s) = symmetrize(map, &OrientedInterval::new(u, p), &cp) else {
            continue;
        };
        let cand = OrientedInterval { a: u, b: s.b };
        if !cand.interior_contains(p) || !parent.contains_interval(&cand, tol) {
            continue;
        }
        if best.is_some_and(|b| b.len() >= cand.len()) {
            continue;
        }
        let its = images(map, &cand, n);
        if !cand.contains_interval(&its[n], tol) || overlap_sweep(&its[..n]) > tol {
            continue;
        }
        best = Some(cand);
    }
    best
}

fn build_level(map: &AnalyticMap, k: usize, p_index: usize, n: usize, interval: OrientedInterval) -> RenormLevel {
    let tol = tau_geom(map);
    let cycle = {
        let mut v = images(map, &interval, n);
        v.pop();
        v
    };
    let mut hits: Vec<(usize, usize)> = Vec::new();
    for (ci, c) in map.critical_points().iter().enumerate() {
        if let Some(i) = cycle.iter().position(|j| c.position >= j.lo() - tol && c.position <= j.hi() + tol) {
            hits.push((i, ci));
        }
    }
    hits.sort();
    if let Some(pos) = hits.iter().position(|&(_, ci)| ci == p_index) {
        hits.rotate_left(pos);
    }
    let boundary_orbit: Vec<f64> = (0..n).scan(interval.a, |y, _| {
        let cur = *y;
        *y = map.eval_real(cur);
        Some(cur)
    }).collect();

    let m = hits.len();
    let mut involved: Vec<InvolvedPoint> = hits
        .iter()
        .enumerate()
        .map(|(j, &(t, ci))| {
            let prev_t = hits[(j + m - 1) % m].0;
            let transit = if m == 1 { n } else { (t + n - prev_t) % n };
            let cp = map.critical_points()[ci];
            let img = cycle[t];
            let q0 = symmetrize(map, &img.ascending(), &cp).unwrap_or(img.ascending());
            let near = |x: f64| boundary_orbit.iter().map(|y| (x - y).abs()).fold(f64::INFINITY, f64::min);
            let q0 = if near(q0.a) <= near(q0.b) { q0 } else { q0.reversed() };
            InvolvedPoint { crit: ci, position: cp.position, hit_time: t, transit, q0, chain: Vec::new() }
        })
        .collect();

    let mut chain_error = None;
    for slot in 0..m {
        let pred = involved[(slot + m - 1) % m].q0;
        let r0 = involved[slot].q0;
        let nr = involved[slot].transit;
        let fwd = images(map, &pred, nr);
        let mut chain = vec![r0];
        for i in 1..nr {
            let hint = fwd[nr - i].mid();
            match pullback_monotone(map, &chain[i - 1], hint) {
                Ok(j) => chain.push(j),
                Err(e) => {
                    chain_error.get_or_insert(format!("slot {slot}, step {i}: {e}"));
                    break;
                }
            }
        }
        involved[slot].chain = chain;
    }
    RenormLevel { k, period: n, p_index, interval, involved, boundary_orbit, chain_error }
}

fn check_precision(map: &AnalyticMap, parent: &OrientedInterval, deepest: usize) -> Result<()> {
    if parent.len() < 1e3 * f64::EPSILON * map.interval_len() {
        return Err(Error::PrecisionExhausted { deepest });
    }
    Ok(())
}

pub fn detect_renormalization(map: &AnalyticMap, p_index: usize, max_period: usize) -> Result<RenormLevel> {
    let dom = domain(map);
    let periods: Vec<usize> = (2..=max_period).collect();
    periods
        .par_iter()
        .find_map_first(|&n| candidate_for_period(map, p_index, &dom, n).map(|j| (n, j)))
        .map(|(n, j)| build_level(map, 1, p_index, n, j))
        .ok_or(Error::NotRenormalizable { max_period })
}

/// Renormalization inside `prev`, with period `m * N` for `m` in `2..=max_ratio`.
pub fn deepen(map: &AnalyticMap, prev: &RenormLevel, max_ratio: usize) -> Result<RenormLevel> {
    check_precision(map, &prev.interval, prev.k)?;
    let ms: Vec<usize> = (2..=max_ratio).collect();
    ms.par_iter()
        .find_map_first(|&m| {
            candidate_for_period(map, prev.p_index, &prev.interval, m * prev.period).map(|j| (m * prev.period, j))
        })
        .map(|(n, j)| build_level(map, prev.k + 1, prev.p_index, n, j))
        .ok_or(Error::NotRenormalizable { max_period: max_ratio * prev.period })
        .and_then(|lvl| {
            check_precision(map, &lvl.interval, prev.k)?;
            Ok(lvl)
        })
}

/// Levels `1..=depth` as far as they exist, and the reason the tower stopped early, if it did.
pub fn build_tower_until(
    map: &AnalyticMap,
    p_index: usize,
    depth: usize,
    max_period: usize,
    max_ratio: usize,
) -> (Vec<RenormLevel>, Option<Error>) {
    let mut levels: Vec<RenormLevel> = Vec::new();
    while levels.len() < depth {
        let next = match levels.last() {
            None => detect_renormalization(map, p_index, max_period),
            Some(prev) => deepen(map, prev, max_ratio),
        };
        match next {
            Ok(l) => levels.push(l),
            Err(e) => return (levels, Some(e)),
        }
    }
    (levels, None)
}

/// Like [`build_tower_until`], but only running out of precision is an error once level 1 exists.
pub fn build_tower(
    map: &AnalyticMap,
    p_index: usize,
    depth: usize,
    max_period: usize,
    max_ratio: usize,
) -> Result<Vec<RenormLevel>> {
    match build_tower_until(map, p_index, depth, max_period, max_ratio) {
        (levels, None) => Ok(levels),
        (levels, Some(e)) if levels.is_empty() => Err(e),
        (_, Some(e @ Error::PrecisionExhausted { .. })) => Err(e),
        (levels, Some(_)) => Ok(levels),
    }
}

/// Intervals of a real pullback along the k-cycle: `u[r]`, `v[r]` per slot and the final `tilde`.
#[derive(Clone, Debug, PartialEq)]
pub struct KCyclePullback {
    pub u: Vec<Option<OrientedInterval>>,
    pub v: Vec<Option<OrientedInterval>>,
    pub tilde: OrientedInterval,
}

/// Symmetric interval about `q` whose image is `[f(q), e]`, `e` the end of `v` on the side of `f(dQ0)`.
pub fn fold_pullback(map: &AnalyticMap, q: &InvolvedPoint, v: &OrientedInterval) -> Result<OrientedInterval> {
    let fq = map.eval_real(q.position);
    let fb = map.eval_real(q.q0.a);
    let e = if fb > fq { v.hi() } else { v.lo() };
    if (e - fq).abs() < (fb - fq).abs() {
        return Err(Error::PullbackObstructed(format!("V does not cover f(Q0) at critical point {}", q.position)));
    }
    let left = map.invert_on_lap(q.crit, e);
    let right = map.invert_on_lap(q.crit + 1, e);
    match (left, right) {
        (Some(l), Some(r)) => Ok(q.q0.with_bounds(l, r)),
        _ => Err(Error::PullbackObstructed(format!("value {e} not attained on both sides of {}", q.position))),
    }
}

pub fn kcycle_pullback(map: &AnalyticMap, level: &RenormLevel, slot: usize, u: &OrientedInterval) -> Result<KCyclePullback> {
    let m = level.involved.len();
    let mut us = vec![None; m];
    let mut vs = vec![None; m];
    us[slot] = Some(*u);
    let mut cur = slot;
    let mut cur_u = *u;
    for _ in 0..m {
        let chain = level.chain(cur)?;
        let mut v = cur_u;
        for j in &chain[1..] {
            v = pullback_monotone(map, &v, j.mid()).map_err(|e| Error::PullbackObstructed(e.to_string()))?;
        }
        vs[cur] = Some(v);
        let pred = level.predecessor(cur);
        let folded = fold_pullback(map, &level.involved[pred], &v)?;
        if pred == slot {
            return Ok(KCyclePullback { u: us, v: vs, tilde: folded });
        }
        us[pred] = Some(folded);
        cur = pred;
        cur_u = folded;
    }
    unreachable!("cycle closes after {m} folds")
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionCheck {
    pub name: &'static str,
    pub pass: bool,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StandardConditions {
    pub checks: Vec<ConditionCheck>,
}

impl StandardConditions {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failing(&self) -> Vec<&'static str> {
        self.checks.iter().filter(|c| !c.pass).map(|c| c.name).collect()
    }
}

pub fn verify_standard_conditions(map: &AnalyticMap, level: &RenormLevel) -> StandardConditions {
    let tol = tau_geom(map);
    let cps = map.critical_points();
    let cycle = level.cycle(map);
    let mut checks = Vec::with_capacity(6);

    // critical points on the cycle sit strictly inside their interval, so f^N|P has no extra critical values
    let mut crit_margin = f64::INFINITY;
    for j in &cycle {
        for c in cps.iter().filter(|c| j.contains(c.position)) {
            crit_margin = crit_margin.min((c.position - j.lo()).min(j.hi() - c.position) / j.len());
        }
    }
    checks.push(ConditionCheck { name: "critical_values_involved", pass: crit_margin > 1e-9, value: crit_margin });

    let asym = level
        .involved
        .iter()
        .map(|q| {
            let (fa, fb) = (map.eval_real(q.q0.a), map.eval_real(q.q0.b));
            (fa - fb).abs() / image(map, &q.q0).len()
        })
        .fold(0.0, f64::max);
    checks.push(ConditionCheck { name: "q0_symmetric", pass: asym <= 1e-9, value: asym });

    let counts: Vec<usize> = level
        .involved
        .iter()
        .map(|q| cps.iter().filter(|c| q.q0.contains(c.position)).count())
        .collect();
    let worst = counts.iter().copied().map(|c| if c == 1 { 1 } else { c.max(2) }).max().unwrap_or(0);
    checks.push(ConditionCheck {
        name: "one_critical_point_per_q0",
        pass: counts.iter().all(|&c| c == 1),
        value: worst as f64,
    });

    let orbit_gap = level
        .involved
        .iter()
        .map(|q| {
            let d = |x: f64| level.boundary_orbit.iter().map(|y| (x - y).abs()).fold(f64::INFINITY, f64::min);
            d(q.q0.a).min(d(q.q0.b)) / q.q0.len()
        })
        .fold(0.0, f64::max);
    checks.push(ConditionCheck { name: "periodic_boundary_point", pass: orbit_gap <= 1e-8, value: orbit_gap });

    let mut ret_margin = f64::INFINITY;
    for slot in 0..level.involved.len() {
        let r = &level.involved[level.successor(slot)];
        let img = images(map, &level.involved[slot].q0, r.transit)[r.transit];
        let contain = (img.lo() - r.q0.lo() + tol).min(r.q0.hi() + tol - img.hi()) / r.q0.len();
        let inside = (r.position - img.lo()).min(img.hi() - r.position) / img.len();
        ret_margin = ret_margin.min(contain.min(inside));
    }
    checks.push(ConditionCheck { name: "return_into_successor", pass: ret_margin > 0.0, value: ret_margin });

    let mut fam = Vec::new();
    for (slot, q) in level.involved.iter().enumerate() {
        let n = level.involved[level.successor(slot)].transit;
        let mut v = images(map, &q.q0, n);
        v.pop();
        fam.extend(v);
    }
    let min_len = fam.iter().map(|j| j.len()).fold(f64::INFINITY, f64::min);
    let ov = overlap_sweep(&fam) / min_len;
    checks.push(ConditionCheck { name: "family_disjoint", pass: ov * min_len <= tol, value: ov });

    StandardConditions { checks }
}

/// First level (1-based `k`) at which all six standard conditions hold.
pub fn first_standard_level(map: &AnalyticMap, levels: &[RenormLevel]) -> Option<usize> {
    levels.iter().find(|l| verify_standard_conditions(map, l).all_pass()).map(|l| l.k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn x2m1_period_two() {
        let f = AnalyticMap::quadratic(-1.0).unwrap();
        let lvl = detect_renormalization(&f, 0, 8).unwrap();
        assert_eq!(lvl.period, 2);
        let bp = (1.0 - 5f64.sqrt()) / 2.0;
        assert!((lvl.interval.a - bp).abs() < 1e-12);
        assert!((lvl.interval.b + bp).abs() < 1e-12);
        assert_eq!(lvl.involved.len(), 1);
        assert_eq!(lvl.involved[0].transit, 2);
        let chain = lvl.chain(0).unwrap();
        assert_eq!(chain.len(), 2);
        assert_relative_eq!(chain[1].lo(), -(1.0 - bp).sqrt(), max_relative = 1e-12);
        assert_relative_eq!(chain[1].hi(), bp, max_relative = 1e-12);
        let (levels, stop) = build_tower_until(&f, 0, 4, 8, 4);
        assert_eq!(levels.len(), 1);
        assert!(matches!(stop, Some(Error::NotRenormalizable { .. })));
        assert!(build_tower(&f, 0, 0, 8, 4).unwrap().is_empty());
    }

    #[test]
    fn non_renormalizable_examples() {
        let cheb = AnalyticMap::quadratic(-2.0).unwrap();
        assert_eq!(detect_renormalization(&cheb, 0, 16), Err(Error::NotRenormalizable { max_period: 16 }));
        let sq = AnalyticMap::quadratic(0.0).unwrap();
        assert!(matches!(detect_renormalization(&sq, 0, 16), Err(Error::NotRenormalizable { .. })));
    }

    #[test]
    fn odd_cubic_two_cycle_involves_both_critical_points() {
        let f = AnalyticMap::polynomial(vec![0.0, -1.5, 0.0, 2.5], (-1.0, 1.0)).unwrap();
        let p = f.critical_points().iter().position(|c| c.position > 0.0).unwrap();
        let lvl = detect_renormalization(&f, p, 8).unwrap();
        assert_eq!(lvl.period, 2);
        assert_eq!(lvl.involved.len(), 2);
        assert_eq!(lvl.involved.iter().map(|q| q.transit).sum::<usize>(), 2);
        assert_eq!(lvl.involved[0].crit, p);
    }
}
