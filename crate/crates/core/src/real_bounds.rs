use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::interval_dynamics::{
    bisect_boundary, domain, grow, images, maximal_monotone_interval, star_k, tau_geom, OrientedInterval,
};
use crate::map_model::AnalyticMap;
use crate::renormalization::{kcycle_pullback, RenormLevel};

pub const PHI_GRID: usize = 4096;
pub const SCHWARZIAN_GRID: usize = 1024;
pub const POSTCRITICAL_POINTS: usize = 100_000;
const FOLD_EXCLUSION: f64 = 1e-6;

/// Affine chart `J -> [-1, 1]` sending `J.a` to `-1`.
pub fn chart(j: &OrientedInterval, x: f64) -> f64 {
    -1.0 + 2.0 * (x - j.a) / (j.b - j.a)
}

pub fn chart_inv(j: &OrientedInterval, t: f64) -> f64 {
    j.a + 0.5 * (t + 1.0) * (j.b - j.a)
}

fn check_chart(j: &OrientedInterval) -> Result<()> {
    if j.len() < 100.0 * f64::EPSILON {
        return Err(Error::ChartDegenerate(j.len()));
    }
    Ok(())
}

fn grid(n: usize, offset: f64) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| -1.0 + 2.0 * (i as f64 + offset) / (n - 1) as f64)
}

/// `|D f^n|` at `x`, by the chain rule.
pub fn iterate_derivative(map: &AnalyticMap, x: f64, n: usize) -> f64 {
    let mut y = x;
    let mut d = 1.0;
    for _ in 0..n {
        let (fy, dy) = map.eval_d1_real(y);
        d *= dy;
        y = fy;
    }
    d
}

/// Extremes of `|D(A_tgt o f^steps o A_dom^{-1})|` over a grid of `[-1, 1]`.
pub fn phi_derivative_range(
    map: &AnalyticMap,
    dom: &OrientedInterval,
    tgt: &OrientedInterval,
    steps: usize,
    n_grid: usize,
) -> Result<(f64, f64)> {
    check_chart(dom)?;
    check_chart(tgt)?;
    let scale = ((dom.b - dom.a) / (tgt.b - tgt.a)).abs();
    let (lo, hi) = grid(n_grid, 0.0)
        .map(|t| iterate_derivative(map, chart_inv(dom, t), steps).abs() * scale)
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), d| (lo.min(d), hi.max(d)));
    Ok((lo, hi))
}

pub fn monotone_part_stats(map: &AnalyticMap, level: &RenormLevel, slot: usize) -> Result<(f64, f64)> {
    let chain = level.chain(slot)?;
    let n = chain.len();
    if n == 1 {
        check_chart(&chain[0])?;
        return Ok((1.0, 1.0));
    }
    phi_derivative_range(map, &chain[n - 1], &chain[0], n - 1, PHI_GRID)
}

/// Smallest `K` with `|D psi(t)| <= K |t - c~|^(ell-1)` on the grid, `psi = A_target o f o A_domain^{-1}`.
pub fn fold_constant(
    map: &AnalyticMap,
    domain: &OrientedInterval,
    target: &OrientedInterval,
    c: f64,
    ell: u32,
    n_grid: usize,
) -> f64 {
    fold_ratios(map, domain, target, c, ell, n_grid, 0.0).fold(0.0, f64::max)
}

fn fold_ratios<'a>(
    map: &'a AnalyticMap,
    domain: &'a OrientedInterval,
    target: &'a OrientedInterval,
    c: f64,
    ell: u32,
    n_grid: usize,
    offset: f64,
) -> impl Iterator<Item = f64> + 'a {
    let ct = chart(domain, c);
    let scale = ((domain.b - domain.a) / (target.b - target.a)).abs();
    grid(n_grid, offset).filter(move |t| (t - ct).abs() >= FOLD_EXCLUSION && *t <= 1.0).map(move |t| {
        let d = map.eval_d1_real(chart_inv(domain, t)).1.abs() * scale;
        d / (t - ct).abs().powi(ell as i32 - 1)
    })
}

/// Worst ratio `|D psi| / (K |t - c~|^(ell-1))` on a grid offset from the fitting one.
pub fn fold_bound_check(
    map: &AnalyticMap,
    domain: &OrientedInterval,
    target: &OrientedInterval,
    c: f64,
    ell: u32,
    k: f64,
    n_grid: usize,
) -> f64 {
    fold_ratios(map, domain, target, c, ell, n_grid, 0.5).fold(0.0, f64::max) / k
}

pub fn fold_target<'a>(level: &'a RenormLevel, slot: usize) -> Result<&'a OrientedInterval> {
    let r = level.successor(slot);
    let chain = level.chain(r)?;
    Ok(&chain[chain.len() - 1])
}

pub fn folding_part_constant(map: &AnalyticMap, level: &RenormLevel, slot: usize) -> Result<f64> {
    let q = &level.involved[slot];
    let target = fold_target(level, slot)?;
    check_chart(&q.q0)?;
    check_chart(target)?;
    let ell = map.critical_points()[q.crit].ell;
    Ok(fold_constant(map, &q.q0, target, q.position, ell, PHI_GRID))
}

/// `S f^n (x)` via the cocycle `sum_t Sf(f^t x) |Df^t x|^2`.
pub fn schwarzian_of_iterate(map: &AnalyticMap, x: f64, n: usize) -> Result<f64> {
    let mut y = x;
    let mut d = 1.0;
    let mut s = 0.0;
    for _ in 0..n {
        s += map.schwarzian(y)? * d * d;
        let (fy, dy) = map.eval_d1_real(y);
        d *= dy;
        y = fy;
    }
    Ok(s)
}

/// Maximum of `S f^{n^q}` over a cell-centred grid of `Q_{-(n^q - 1)}`.
pub fn schwarzian_max(map: &AnalyticMap, level: &RenormLevel, slot: usize) -> Result<f64> {
    let chain = level.chain(slot)?;
    let dom = chain[chain.len() - 1];
    let n = chain.len();
    let mut best = f64::NEG_INFINITY;
    for i in 0..SCHWARZIAN_GRID {
        let x = dom.lo() + dom.len() * (i as f64 + 0.5) / SCHWARZIAN_GRID as f64;
        best = best.max(schwarzian_of_iterate(map, x, n)?);
    }
    Ok(best)
}

pub fn scaling_ratio(level: &RenormLevel, next: &RenormLevel, slot: usize) -> Option<f64> {
    let q = &level.involved[slot];
    let s = next.slot_of(q.crit)?;
    Some(next.involved[s].q0.len() / q.q0.len())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Hierarchy {
    pub q0: OrientedInterval,
    pub m: OrientedInterval,
    pub l: OrientedInterval,
    pub t: OrientedInterval,
    /// `T` pulled halfway towards `L` on both sides.
    pub t_prime: OrientedInterval,
    pub s: OrientedInterval,
    pub parent: OrientedInterval,
    /// Margins of `Q0 in S`, `S in L`, `L in T'`, `T' in Q0^{k-1}`.
    pub margins: [f64; 4],
    pub s_in_m: bool,
}

/// Maximal interval around `q0` with at most one member of `family` inside.
pub fn star_hull(map: &AnalyticMap, q0: &OrientedInterval, family: &[OrientedInterval]) -> OrientedInterval {
    let dom = domain(map);
    let tol = tau_geom(map);
    let step = 1e-3 * q0.len();
    let lo = grow(q0.lo(), dom.lo(), step, |x| star_k(family, &OrientedInterval::sorted(x, q0.hi()), tol));
    let hi = grow(q0.hi(), dom.hi(), step, |x| star_k(family, &OrientedInterval::sorted(lo, x), tol));
    q0.with_bounds(lo, hi)
}

/// Maximal `L` around `Q0` with `f^N` free of critical points on `L \ Q0`.
pub fn monotone_hull(map: &AnalyticMap, q0: &OrientedInterval, n: usize) -> Result<OrientedInterval> {
    let left = maximal_monotone_interval(map, q0.lo(), n)?;
    let right = maximal_monotone_interval(map, q0.hi(), n)?;
    Ok(q0.with_bounds(left.lo(), right.hi()))
}

pub fn interval_hierarchy(map: &AnalyticMap, level: &RenormLevel, parent: &RenormLevel, slot: usize) -> Result<Hierarchy> {
    let q = &level.involved[slot];
    let parent_q0 = parent.slot_of(q.crit).map(|s| parent.involved[s].q0).ok_or(Error::NotNested)?;
    let family: Vec<OrientedInterval> = level.family(map).iter().map(|m| m.interval).collect();
    let m = star_hull(map, &q.q0, &family);
    let t = m.intersect(&parent_q0).ok_or(Error::NotNested)?;
    let l = monotone_hull(map, &q.q0, level.period)?;
    let t_prime = q.q0.with_bounds(0.5 * (l.lo() + t.lo()), 0.5 * (l.hi() + t.hi()));
    let s = kcycle_pullback(map, level, slot, &t_prime)?.tilde;
    let margins = [q.q0.margin_in(&s), s.margin_in(&l), l.margin_in(&t_prime), t_prime.margin_in(&parent_q0)];
    let s_in_m = m.contains_interval(&s, tau_geom(map));
    Ok(Hierarchy { q0: q.q0, m, l, t, t_prime, s, parent: parent_q0, margins, s_in_m })
}

/// Postcritical points of the involved critical points, `total` in all.
pub fn postcritical_orbit(map: &AnalyticMap, level: &RenormLevel, total: usize) -> Vec<f64> {
    let per = total / level.involved.len().max(1);
    let mut out = Vec::with_capacity(total);
    for q in &level.involved {
        let mut y = map.eval_real(q.position);
        for _ in 0..per {
            out.push(y);
            y = map.eval_real(y);
        }
    }
    out
}

/// Largest `delta` with no postcritical point in `delta-Q0 \ Q0`.
pub fn postcritical_gap(q0: &OrientedInterval, orbit: &[f64]) -> f64 {
    orbit
        .iter()
        .filter(|&&x| x < q0.lo() || x > q0.hi())
        .map(|&x| q0.dist(x) / q0.len())
        .fold(f64::INFINITY, f64::min)
}

/// Multiplier `|Df^N|` at the periodic boundary point of `P`.
pub fn boundary_multiplier(map: &AnalyticMap, level: &RenormLevel) -> f64 {
    iterate_derivative(map, level.interval.a, level.period).abs()
}

/// Period and multiplier of an attracting cycle found from `x0`, if any.
pub fn attracting_cycle(map: &AnalyticMap, x0: f64, max_period: usize, transient: usize) -> Option<(usize, f64)> {
    let mut y = x0;
    for _ in 0..transient {
        y = map.eval_real(y);
    }
    let tol = 1e-9 * map.interval_len();
    (1..=max_period).find_map(|n| {
        let mult = iterate_derivative(map, y, n).abs();
        ((map.iterate(y, n) - y).abs() < tol && mult < 1.0).then_some((n, mult))
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CommensurabilityStats {
    pub k: usize,
    /// Largest `(|R^j_0| / |Q^k_{-l}|) / (|Q^j_0| / |Q^k_0|)` over `j < k`, `l < 2 N_j`.
    pub chain_commensurability: Option<f64>,
    /// Smallest relative distance of `f^i(q)` to the ends of `R_{-(n^r - i)}`.
    pub boundary_cut: f64,
    /// Smallest relative distance of a critical point of `f^N` to the ends of `f^i(Q0)`.
    pub critical_cut: f64,
    /// Smallest `|f^i(Q0^k)| / |R0^{k-1}|` over members inside a previous-level `Q0`.
    pub return_ratio: Option<f64>,
    /// Margin of the monotone interval of `f^N` at the periodic point inside its image.
    pub expansion_margin: f64,
    pub parent_gap: Option<f64>,
    pub mutual_gap: Option<f64>,
    pub cycle_length_sum: f64,
}

fn all_chain_intervals(level: &RenormLevel) -> Vec<OrientedInterval> {
    level.involved.iter().flat_map(|q| q.chain.iter().copied()).collect()
}

fn cut_ratio(j: &OrientedInterval, x: f64) -> f64 {
    (x - j.lo()).min(j.hi() - x) / j.len()
}

fn chain_commensurability(levels: &[RenormLevel], idx: usize) -> Option<f64> {
    let lk = &levels[idx];
    let mut best: Option<f64> = None;
    for lj in &levels[..idx] {
        for (slot, q) in lk.involved.iter().enumerate() {
            let Some(sj) = lj.slot_of(q.crit) else { continue };
            let qj0 = lj.involved[sj].q0.len();
            let chain = &lk.involved[slot].chain;
            for l in 0..chain.len().min(2 * lj.period) {
                let c = chain[l];
                if let Some(r) = lj.involved.iter().find(|r| r.q0.contains_interval(&c, 0.0)) {
                    let v = (r.q0.len() / c.len()) / (qj0 / q.q0.len());
                    best = Some(best.map_or(v, |b: f64| b.max(v)));
                }
            }
        }
    }
    best
}

fn boundary_cut(map: &AnalyticMap, level: &RenormLevel) -> f64 {
    let mut worst = f64::INFINITY;
    for (slot, r) in level.involved.iter().enumerate() {
        let q = &level.involved[level.predecessor(slot)];
        let mut y = q.position;
        for i in 1..=r.transit {
            y = map.eval_real(y);
            worst = worst.min(cut_ratio(&r.chain[r.transit - i], y));
        }
    }
    worst
}

fn critical_cut(map: &AnalyticMap, level: &RenormLevel) -> f64 {
    let n = level.period;
    let jobs: Vec<(usize, usize)> = level
        .involved
        .iter()
        .enumerate()
        .flat_map(|(slot, _)| (1..level.involved[level.successor(slot)].transit).map(move |i| (slot, i)))
        .collect();
    jobs.par_iter()
        .map(|&(slot, i)| {
            let q = &level.involved[slot];
            let j = images(map, &q.q0, i)[i];
            let fiq = map.iterate(q.position, i);
            let g = |x: f64| map.iterate(x, n - i) - q.position;
            let m = 2048;
            let xs: Vec<f64> = (0..=m).map(|t| j.lo() + j.len() * t as f64 / m as f64).collect();
            let vs: Vec<f64> = xs.iter().map(|&x| g(x)).collect();
            let mut closest: Option<f64> = None;
            for t in 0..m {
                let b = if vs[t] == 0.0 {
                    xs[t]
                } else if vs[t] * vs[t + 1] < 0.0 {
                    let s = vs[t] > 0.0;
                    bisect_boundary(xs[t], xs[t + 1], &|x| (g(x) > 0.0) == s)
                } else {
                    continue;
                };
                if closest.is_none_or(|c| (b - fiq).abs() < (c - fiq).abs()) {
                    closest = Some(b);
                }
            }
            closest.map_or(0.0, |b| cut_ratio(&j, b))
        })
        .reduce(|| f64::INFINITY, f64::min)
}

fn return_ratio(map: &AnalyticMap, level: &RenormLevel, parent: &RenormLevel) -> Option<f64> {
    let mut worst: Option<f64> = None;
    for (slot, q) in level.involved.iter().enumerate() {
        let n = level.involved[level.successor(slot)].transit;
        for j in images(map, &q.q0, n).iter().skip(1) {
            if let Some(r) = parent.involved.iter().find(|r| r.q0.contains_interval(j, tau_geom(map))) {
                let v = j.len() / r.q0.len();
                worst = Some(worst.map_or(v, |w: f64| w.min(v)));
            }
        }
    }
    worst
}

fn expansion_margin(map: &AnalyticMap, level: &RenormLevel) -> Result<f64> {
    let u = level.interval.a;
    let j = maximal_monotone_interval(map, u, level.period)?;
    let img = OrientedInterval::sorted(map.iterate(j.lo(), level.period), map.iterate(j.hi(), level.period));
    Ok(j.margin_in(&img))
}

fn geometry_gaps(level: &RenormLevel, parent: &RenormLevel, tol: f64) -> (Option<f64>, Option<f64>) {
    let kids = all_chain_intervals(level);
    let parents = all_chain_intervals(parent);
    let mut pgap: Option<f64> = None;
    let mut groups: Vec<Vec<OrientedInterval>> = vec![Vec::new(); parents.len()];
    for c in &kids {
        if let Some(pi) = parents.iter().position(|p| p.contains_interval(c, tol)) {
            let v = c.margin_in(&parents[pi]);
            pgap = Some(pgap.map_or(v, |g: f64| g.min(v)));
            groups[pi].push(*c);
        }
    }
    let mut mgap: Option<f64> = None;
    for g in &groups {
        for (i, x) in g.iter().enumerate() {
            for y in &g[i + 1..] {
                let share = [x.a, x.b].iter().any(|&e| (e - y.a).abs() <= tol || (e - y.b).abs() <= tol);
                if share {
                    continue;
                }
                let v = -x.overlap(y) / x.len().max(y.len());
                mgap = Some(mgap.map_or(v, |m: f64| m.min(v)));
            }
        }
    }
    (pgap, mgap)
}

pub fn commensurability_suite(map: &AnalyticMap, levels: &[RenormLevel]) -> Vec<CommensurabilityStats> {
    let tol = tau_geom(map);
    (0..levels.len())
        .into_par_iter()
        .map(|idx| {
            let lvl = &levels[idx];
            let parent = idx.checked_sub(1).map(|p| &levels[p]);
            let (parent_gap, mutual_gap) = parent.map_or((None, None), |p| geometry_gaps(lvl, p, tol));
            CommensurabilityStats {
                k: lvl.k,
                chain_commensurability: chain_commensurability(levels, idx),
                boundary_cut: boundary_cut(map, lvl),
                critical_cut: critical_cut(map, lvl),
                return_ratio: parent.and_then(|p| return_ratio(map, lvl, p)),
                expansion_margin: expansion_margin(map, lvl).unwrap_or(f64::NAN),
                parent_gap,
                mutual_gap,
                cycle_length_sum: all_chain_intervals(lvl).iter().map(|j| j.len()).sum(),
            }
        })
        .collect()
}

/// Geometric rate of `values` by least squares on `ln value` against the index.
pub fn geometric_fit_ratio(values: &[f64]) -> Option<f64> {
    if values.len() < 2 {
        return None;
    }
    let n = values.len() as f64;
    let xs: Vec<f64> = (0..values.len()).map(|i| i as f64).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Some((sxy / sxx).exp())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlotBounds {
    pub k: usize,
    pub crit: usize,
    pub phi_deriv_min: f64,
    pub phi_deriv_max: f64,
    pub psi_fold_constant: f64,
    pub scaling_ratio: Option<f64>,
    pub nesting_margins: Option<[f64; 4]>,
    pub s_in_m: Option<bool>,
    pub schwarzian_max: f64,
    pub postcritical_gap: f64,
    pub errors: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundsReport {
    pub slots: Vec<SlotBounds>,
    pub levels: Vec<CommensurabilityStats>,
    pub cycle_length_fit_ratio: Option<f64>,
    pub boundary_multipliers: Vec<f64>,
}

fn slot_bounds(map: &AnalyticMap, levels: &[RenormLevel], idx: usize, slot: usize) -> SlotBounds {
    let lvl = &levels[idx];
    let q = &lvl.involved[slot];
    let mut errors = Vec::new();
    let mut note = |e: Error| errors.push(e.to_string());
    let (phi_deriv_min, phi_deriv_max) = monotone_part_stats(map, lvl, slot).unwrap_or_else(|e| {
        note(e);
        (f64::NAN, f64::NAN)
    });
    let psi_fold_constant = folding_part_constant(map, lvl, slot).unwrap_or_else(|e| {
        note(e);
        f64::NAN
    });
    let schwarzian = schwarzian_max(map, lvl, slot).unwrap_or_else(|e| {
        note(e);
        f64::NAN
    });
    let hierarchy = idx.checked_sub(1).map(|p| interval_hierarchy(map, lvl, &levels[p], slot));
    let (nesting_margins, s_in_m) = match hierarchy {
        Some(Ok(h)) => (Some(h.margins), Some(h.s_in_m)),
        Some(Err(e)) => {
            note(e);
            (None, None)
        }
        None => (None, None),
    };
    let orbit = postcritical_orbit(map, lvl, POSTCRITICAL_POINTS);
    SlotBounds {
        k: lvl.k,
        crit: q.crit,
        phi_deriv_min,
        phi_deriv_max,
        psi_fold_constant,
        scaling_ratio: levels.get(idx + 1).and_then(|next| scaling_ratio(lvl, next, slot)),
        nesting_margins,
        s_in_m,
        schwarzian_max: schwarzian,
        postcritical_gap: postcritical_gap(&q.q0, &orbit),
        errors,
    }
}

pub fn bounds_report(map: &AnalyticMap, levels: &[RenormLevel]) -> BoundsReport {
    let jobs: Vec<(usize, usize)> =
        levels.iter().enumerate().flat_map(|(i, l)| (0..l.involved.len()).map(move |s| (i, s))).collect();
    let slots: Vec<SlotBounds> = jobs.par_iter().map(|&(i, s)| slot_bounds(map, levels, i, s)).collect();
    let stats = commensurability_suite(map, levels);
    let sums: Vec<f64> = stats.iter().map(|s| s.cycle_length_sum).collect();
    BoundsReport {
        slots,
        cycle_length_fit_ratio: geometric_fit_ratio(&sums),
        levels: stats,
        boundary_multipliers: levels.iter().map(|l| boundary_multiplier(map, l)).collect(),
    }
}

impl BoundsReport {
    /// One `(k, crit, quantity, value)` row per measured number; level-wide rows have no `crit`.
    pub fn rows(&self) -> Vec<(usize, Option<usize>, String, f64)> {
        let mut out = Vec::new();
        for s in &self.slots {
            let mut push = |name: &str, v: f64| out.push((s.k, Some(s.crit), name.to_string(), v));
            push("phi_deriv_min", s.phi_deriv_min);
            push("phi_deriv_max", s.phi_deriv_max);
            push("psi_fold_constant", s.psi_fold_constant);
            if let Some(r) = s.scaling_ratio {
                push("scaling_ratio", r);
            }
            if let Some(m) = s.nesting_margins {
                for (name, v) in ["margin_q0_s", "margin_s_l", "margin_l_t", "margin_t_parent"].iter().zip(m) {
                    push(name, v);
                }
            }
            if let Some(b) = s.s_in_m {
                push("s_in_m", if b { 1.0 } else { 0.0 });
            }
            push("schwarzian_max", s.schwarzian_max);
            push("postcritical_gap", s.postcritical_gap);
        }
        for (l, mult) in self.levels.iter().zip(&self.boundary_multipliers) {
            let mut push = |name: &str, v: Option<f64>| {
                if let Some(v) = v {
                    out.push((l.k, None, name.to_string(), v));
                }
            };
            push("chain_commensurability", l.chain_commensurability);
            push("boundary_cut", Some(l.boundary_cut));
            push("critical_cut", Some(l.critical_cut));
            push("return_ratio", l.return_ratio);
            push("expansion_margin", Some(l.expansion_margin));
            push("parent_gap", l.parent_gap);
            push("mutual_gap", l.mutual_gap);
            push("cycle_length_sum", Some(l.cycle_length_sum));
            push("boundary_multiplier", Some(*mult));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map_model::Representation;
    use approx::assert_relative_eq;

    #[test]
    fn fold_constant_models() {
        let unit = OrientedInterval::new(-1.0, 1.0);
        let sq = AnalyticMap::polynomial(vec![0.0, 0.0, 1.0], (-1.0, 1.0)).unwrap();
        assert_relative_eq!(fold_constant(&sq, &unit, &unit, 0.0, 2, 4097), 2.0, max_relative = 1e-12);
        let quart = AnalyticMap::polynomial(vec![0.0, 0.0, 0.0, 0.0, 1.0], (-1.0, 1.0)).unwrap();
        assert_eq!(quart.critical_points()[0].ell, 4);
        assert_relative_eq!(fold_constant(&quart, &unit, &unit, 0.0, 4, 4097), 4.0, max_relative = 1e-9);
        assert!(fold_bound_check(&quart, &unit, &unit, 0.0, 4, 4.0, 4097) <= 1.0 + 1e-9);
    }

    #[test]
    fn chart_sends_periodic_end_to_minus_one() {
        let j = OrientedInterval::new(3.0, 1.0);
        assert_eq!(chart(&j, 3.0), -1.0);
        assert_eq!(chart(&j, 1.0), 1.0);
        assert_eq!(chart_inv(&j, chart(&j, 2.5)), 2.5);
    }

    #[test]
    fn degenerate_chart_rejected() {
        let f = AnalyticMap::quadratic(-1.0).unwrap();
        let tiny = OrientedInterval::new(0.1, 0.1 + 1e-15);
        assert!(matches!(phi_derivative_range(&f, &tiny, &tiny, 1, 16), Err(Error::ChartDegenerate(_))));
    }

    #[test]
    fn schwarzian_cocycle_matches_composed_polynomial() {
        let f = AnalyticMap::quadratic(-1.3).unwrap();
        let f2 = AnalyticMap::kernel_only(Representation::Polynomial(vec![-1.3 * -1.3 - 1.3, 0.0, 2.0 * -1.3, 0.0, 1.0]));
        for x in [0.2, 0.45, -0.7] {
            assert_relative_eq!(schwarzian_of_iterate(&f, x, 2).unwrap(), f2.schwarzian(x).unwrap(), max_relative = 1e-6);
        }
    }

    #[test]
    fn single_step_schwarzian_negative_on_lap() {
        let f = AnalyticMap::quadratic(-1.0).unwrap();
        for i in 1..100 {
            let x = 1.6 * i as f64 / 100.0;
            assert!(schwarzian_of_iterate(&f, x, 1).unwrap() < 0.0);
        }
    }

    #[test]
    fn geometric_fit_recovers_rate() {
        let v: Vec<f64> = (0..6).map(|i| 3.0 * 0.4f64.powi(i)).collect();
        assert_relative_eq!(geometric_fit_ratio(&v).unwrap(), 0.4, max_relative = 1e-12);
    }

    #[test]
    fn superstable_cubic_has_attracting_cycle() {
        let f = AnalyticMap::polynomial(vec![0.0, -1.5, 0.0, 2.5], (-1.0, 1.0)).unwrap();
        let c = f.critical_points()[1].position;
        let (n, mult) = attracting_cycle(&f, c + 1e-3, 8, 2000).unwrap();
        assert_eq!(n, 2);
        assert!(mult < 1e-6);
    }
}
