use std::ops::{Add, Div, Mul, Sub};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TAU_ROOT: f64 = 1e-13;
pub const TAU_NEWTON: f64 = 1e-12;
pub const TAU_BOUNDARY: f64 = 1e-8;

/// Arithmetic needed by the evaluation kernels; implemented by `f64` and `Complex64`.
pub trait Scalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + From<f64>
{
}

impl<T> Scalar for T where
    T: Copy + Add<Output = T> + Sub<Output = T> + Mul<Output = T> + Div<Output = T> + From<f64>
{
}

fn powu<T: Scalar>(x: T, n: u32) -> T {
    let mut acc = T::from(1.0);
    let mut base = x;
    let mut e = n;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base;
        }
        base = base * base;
        e >>= 1;
    }
    acc
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub fn of(x: f64) -> Sign {
        if x >= 0.0 {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

/// One fold piece `x -> c * (a x + b)^ell + d`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fold {
    pub a: f64,
    pub b: f64,
    pub ell: u32,
    pub c: f64,
    pub d: f64,
}

impl Fold {
    fn apply<T: Scalar>(&self, x: T) -> T {
        T::from(self.c) * powu(T::from(self.a) * x + T::from(self.b), self.ell) + T::from(self.d)
    }
}

/// Polynomial coefficients are in increasing degree. Folds are applied in listed order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Representation {
    Polynomial(Vec<f64>),
    Folds(Vec<Fold>),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub position: f64,
    pub ell: u32,
    /// Radius around the critical value where the local inverse branches are trusted.
    pub delta_loc: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnalyticMap {
    repr: Representation,
    interval: (f64, f64),
    critical: Vec<CriticalPoint>,
}

impl AnalyticMap {
    pub fn new(repr: Representation, interval: (f64, f64)) -> Result<Self> {
        let (lo, hi) = (interval.0.min(interval.1), interval.0.max(interval.1));
        if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidMap("degenerate domain interval".into()));
        }
        match &repr {
            Representation::Polynomial(c) => {
                if c.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidMap("non-finite coefficient".into()));
                }
                if trimmed(c).len() < 3 {
                    return Err(Error::InvalidMap("polynomial degree must be at least 2".into()));
                }
            }
            Representation::Folds(fs) => {
                if fs.is_empty() {
                    return Err(Error::InvalidMap("empty fold list".into()));
                }
                for f in fs {
                    if f.ell < 2 || f.ell % 2 != 0 {
                        return Err(Error::InvalidMap(format!("fold exponent {} is not even", f.ell)));
                    }
                    if f.a == 0.0 || f.c == 0.0 {
                        return Err(Error::InvalidMap("fold with zero scale".into()));
                    }
                }
            }
        }
        let mut map = AnalyticMap { repr, interval: (lo, hi), critical: Vec::new() };
        map.check_boundary()?;
        map.critical = map.locate_critical_points()?;
        map.check_monotone_laps()?;
        map.assign_local_radii();
        Ok(map)
    }

    pub fn polynomial(coeffs: Vec<f64>, interval: (f64, f64)) -> Result<Self> {
        Self::new(Representation::Polynomial(coeffs), interval)
    }

    pub fn folds(folds: Vec<Fold>, interval: (f64, f64)) -> Result<Self> {
        Self::new(Representation::Folds(folds), interval)
    }

    /// `x^2 + c` on `[-beta, beta]` with `beta` the orientation-preserving fixed point.
    pub fn quadratic(c: f64) -> Result<Self> {
        let beta = (1.0 + (1.0 - 4.0 * c).sqrt()) / 2.0;
        Self::polynomial(vec![c, 0.0, 1.0], (-beta, beta))
    }

    /// Evaluation kernel without the interval-map checks, for maps that fail them (odd
    /// critical points, no invariant interval). Critical point data is empty.
    pub fn kernel_only(repr: Representation) -> Self {
        AnalyticMap { repr, interval: (f64::NEG_INFINITY, f64::INFINITY), critical: Vec::new() }
    }

    pub fn representation(&self) -> &Representation {
        &self.repr
    }

    pub fn interval(&self) -> (f64, f64) {
        self.interval
    }

    pub fn interval_len(&self) -> f64 {
        self.interval.1 - self.interval.0
    }

    pub fn critical_points(&self) -> &[CriticalPoint] {
        &self.critical
    }

    pub fn critical_values(&self) -> Vec<f64> {
        self.critical.iter().map(|c| self.eval_real(c.position)).collect()
    }

    pub fn degree_hint(&self) -> usize {
        match &self.repr {
            Representation::Polynomial(c) => trimmed(c).len().saturating_sub(1),
            Representation::Folds(fs) => fs.iter().map(|f| f.ell as usize).product(),
        }
    }

    fn eval_generic<T: Scalar>(&self, x: T) -> T {
        match &self.repr {
            Representation::Polynomial(c) => {
                let mut acc = T::from(0.0);
                for &ci in c.iter().rev() {
                    acc = acc * x + T::from(ci);
                }
                acc
            }
            Representation::Folds(fs) => fs.iter().fold(x, |y, f| f.apply(y)),
        }
    }

    fn eval_d1_generic<T: Scalar>(&self, x: T) -> (T, T) {
        match &self.repr {
            Representation::Polynomial(c) => {
                let mut p = T::from(0.0);
                let mut dp = T::from(0.0);
                for &ci in c.iter().rev() {
                    dp = dp * x + p;
                    p = p * x + T::from(ci);
                }
                (p, dp)
            }
            Representation::Folds(fs) => {
                let mut y = x;
                let mut d = T::from(1.0);
                for f in fs {
                    let u = T::from(f.a) * y + T::from(f.b);
                    let um = powu(u, f.ell - 1);
                    d = d * T::from(f.c * f.ell as f64 * f.a) * um;
                    y = T::from(f.c) * um * u + T::from(f.d);
                }
                (y, d)
            }
        }
    }

    /// Taylor coefficients `f^(m)(x)/m!` for `m = 0..=order`.
    fn taylor_generic<T: Scalar>(&self, x: T, order: usize) -> Vec<T> {
        match &self.repr {
            Representation::Polynomial(c) => {
                let mut work: Vec<T> = c.iter().map(|&v| T::from(v)).collect();
                let n = work.len();
                let mut out = Vec::with_capacity(order + 1);
                for m in 0..=order {
                    if m >= n {
                        out.push(T::from(0.0));
                        continue;
                    }
                    for i in (m..n - 1).rev() {
                        work[i] = work[i] + x * work[i + 1];
                    }
                    out.push(work[m]);
                }
                out
            }
            Representation::Folds(fs) => {
                let mut s = vec![T::from(0.0); order + 1];
                s[0] = x;
                if order >= 1 {
                    s[1] = T::from(1.0);
                }
                for f in fs {
                    let mut u: Vec<T> = s.iter().map(|&v| T::from(f.a) * v).collect();
                    u[0] = u[0] + T::from(f.b);
                    let mut p = u.clone();
                    for _ in 1..f.ell {
                        p = series_mul(&p, &u);
                    }
                    s = p.iter().map(|&v| T::from(f.c) * v).collect();
                    s[0] = s[0] + T::from(f.d);
                }
                s
            }
        }
    }

    pub fn eval_real(&self, x: f64) -> f64 {
        self.eval_generic(x)
    }

    pub fn eval_d1_real(&self, x: f64) -> (f64, f64) {
        self.eval_d1_generic(x)
    }

    /// Real inputs take the real kernel, so the output is real by construction.
    pub fn evaluate(&self, z: C64) -> C64 {
        if z.im == 0.0 {
            C64::new(self.eval_real(z.re), 0.0)
        } else {
            self.eval_generic(z)
        }
    }

    pub fn eval_d1(&self, z: C64) -> (C64, C64) {
        if z.im == 0.0 {
            let (v, d) = self.eval_d1_real(z.re);
            (C64::new(v, 0.0), C64::new(d, 0.0))
        } else {
            self.eval_d1_generic(z)
        }
    }

    pub fn taylor(&self, x: f64, order: usize) -> Vec<f64> {
        self.taylor_generic(x, order)
    }

    pub fn taylor_complex(&self, z: C64, order: usize) -> Vec<C64> {
        if z.im == 0.0 {
            self.taylor(z.re, order).into_iter().map(|v| C64::new(v, 0.0)).collect()
        } else {
            self.taylor_generic(z, order)
        }
    }

    pub fn derivative(&self, z: C64, order: usize) -> C64 {
        let jet = self.taylor_complex(z, order);
        jet[order] * factorial(order)
    }

    pub fn derivative_real(&self, x: f64, order: usize) -> f64 {
        self.taylor(x, order)[order] * factorial(order)
    }

    pub fn iterate(&self, x: f64, n: usize) -> f64 {
        (0..n).fold(x, |y, _| self.eval_real(y))
    }

    pub fn iterate_complex(&self, z: C64, n: usize) -> C64 {
        (0..n).fold(z, |y, _| self.evaluate(y))
    }

    pub fn schwarzian(&self, x: f64) -> Result<f64> {
        let c = self.taylor(x, 3);
        if c[1].abs() < TAU_ROOT {
            return Err(Error::CriticalPointSingularity { x, deriv: c[1] });
        }
        let r = 2.0 * c[2] / c[1];
        Ok(6.0 * c[3] / c[1] - 1.5 * r * r)
    }

    /// Number of critical points strictly below `x`; laps are numbered left to right.
    pub fn lap_of(&self, x: f64) -> usize {
        self.critical.iter().take_while(|c| c.position < x).count()
    }

    /// Closed lap `lap` intersected with the domain interval.
    pub fn lap_bounds(&self, lap: usize) -> (f64, f64) {
        let lo = if lap == 0 { self.interval.0 } else { self.critical[lap - 1].position };
        let hi = if lap >= self.critical.len() { self.interval.1 } else { self.critical[lap].position };
        (lo, hi)
    }

    /// Lap bounds, with infinite ends pulled in to a finite point whose image passes `y`.
    fn bracket_lap(&self, lap: usize, y: f64) -> (f64, f64) {
        let (lo, hi) = self.lap_bounds(lap);
        let base = if lo.is_finite() { lo } else if hi.is_finite() { hi } else { 0.0 };
        let reach = |dir: f64| {
            let fb = self.eval_real(base);
            let mut step = 1.0f64;
            while (self.eval_real(base + dir * step) - y) * (fb - y) > 0.0 && step < 1e150 {
                step *= 2.0;
            }
            base + dir * step
        };
        (if lo.is_finite() { lo } else { reach(-1.0) }, if hi.is_finite() { hi } else { reach(1.0) })
    }

    /// Real solution of `f(x) = y` on the given lap, if `y` lies in the lap image.
    pub fn invert_on_lap(&self, lap: usize, y: f64) -> Option<f64> {
        let (lo, hi) = self.bracket_lap(lap, y);
        let (flo, fhi) = (self.eval_real(lo), self.eval_real(hi));
        let (vmin, vmax) = (flo.min(fhi), flo.max(fhi));
        let slack = 1e-14 * (vmax - vmin).abs().max(1e-300);
        if y < vmin - slack || y > vmax + slack {
            return None;
        }
        if y <= vmin {
            return Some(if flo <= fhi { lo } else { hi });
        }
        if y >= vmax {
            return Some(if flo >= fhi { lo } else { hi });
        }
        Some(monotone_solve(|x| self.eval_d1_real(x), y, lo, hi, flo < fhi))
    }

    /// Newton iteration for `f(z) = w` from `z0`; `None` if it fails to settle.
    pub fn newton(&self, w: C64, z0: C64, max_iter: usize) -> Option<C64> {
        let mut z = z0;
        let scale = w.norm().max(1.0);
        for _ in 0..max_iter {
            let (v, d) = self.eval_d1(z);
            let r = v - w;
            if r.norm() <= 0.25 * TAU_NEWTON * scale {
                return Some(z);
            }
            if d.norm() == 0.0 || !d.norm().is_finite() {
                return None;
            }
            let dz = r / d;
            z -= dz;
            if !z.re.is_finite() || !z.im.is_finite() {
                return None;
            }
            if dz.norm() <= 4.0 * f64::EPSILON * z.norm().max(1e-300) {
                let rr = (self.evaluate(z) - w).norm();
                return if rr <= TAU_NEWTON * scale { Some(z) } else { None };
            }
        }
        let rr = (self.evaluate(z) - w).norm();
        if rr <= TAU_NEWTON * scale {
            Some(z)
        } else {
            None
        }
    }

    /// Local inverse `f_q^{+/-}` near the critical value `f(q)`. The `+` branch is the side
    /// `z > q` on the real line.
    pub fn inverse_branch_near_critical_value(&self, q: &CriticalPoint, sign: Sign, w: C64) -> Result<C64> {
        let ell = q.ell as usize;
        let jet = self.taylor(q.position, ell);
        let v = jet[0];
        let amp = jet[ell];
        let t = (w - v) / amp;
        if t.norm() == 0.0 {
            return Ok(C64::new(q.position, 0.0));
        }
        if t.im.abs() <= 1e-12 * t.norm() && t.re < 0.0 {
            return Err(Error::BranchAmbiguity { re: w.re, im: w.im });
        }
        let root = fold_branch(q.ell, sign, t)?;
        let qz = C64::new(q.position, 0.0);
        let seed = qz + root;
        if let Some(z) = self.newton(w, seed, 60) {
            if (z - seed).norm() <= 0.5 * root.norm() {
                return Ok(z);
            }
        }
        // Continuation in u = s^(1/ell) along w(s) = v + s (w - v).
        let target = |u: f64| C64::new(v, 0.0) + (w - v) * u.powi(ell as i32);
        let mut u = 1e-3;
        let mut z = qz + root * u;
        z = self.newton(target(u), z, 60).ok_or_else(|| Error::NewtonDivergence("model seed".into()))?;
        let mut du = 0.05;
        while u < 1.0 {
            let un = (u + du).min(1.0);
            let pred = qz + (z - qz) * (un / u);
            match self.newton(target(un), pred, 60) {
                Some(zn) if (zn - pred).norm() <= 0.25 * (pred - qz).norm() => {
                    z = zn;
                    u = un;
                    du = (du * 1.5).min(0.25);
                }
                _ => {
                    du *= 0.5;
                    if du < 1e-10 {
                        return Err(Error::NewtonDivergence(format!("continuation stalled at u = {u}")));
                    }
                }
            }
        }
        Ok(z)
    }

    fn check_boundary(&self) -> Result<()> {
        let (lo, hi) = self.interval;
        let tol = TAU_BOUNDARY * (hi - lo);
        for x in [lo, hi] {
            let y = self.eval_real(x);
            if (y - lo).abs() > tol && (y - hi).abs() > tol {
                return Err(Error::InvalidMap(format!("f({x}) = {y} is not an endpoint of the interval")));
            }
        }
        Ok(())
    }

    fn locate_critical_points(&self) -> Result<Vec<CriticalPoint>> {
        let (lo, hi) = self.interval;
        let mut pts = match &self.repr {
            Representation::Polynomial(c) => poly_roots_in(&poly_derivative(trimmed(c)), lo, hi),
            Representation::Folds(fs) => self.fold_critical_points(fs, lo, hi),
        };
        let edge = 1e-12 * (hi - lo);
        pts.retain(|&x| x > lo + edge && x < hi - edge);
        let order = self.degree_hint().clamp(2, 64) + 1;
        let mut out = Vec::new();
        for x in pts {
            let jet = self.taylor(x, order);
            let scale: f64 = jet[1..].iter().map(|v| v.abs()).sum();
            let ell = (1..=order).find(|&m| jet[m].abs() > 1e-9 * scale);
            match ell {
                None => return Err(Error::InvalidMap(format!("flat critical point at {x}"))),
                Some(1) => continue,
                Some(m) if m % 2 == 1 => {
                    return Err(Error::InvalidMap(format!("critical point at {x} has odd criticality {m}")))
                }
                Some(m) => out.push(CriticalPoint { position: x, ell: m as u32, delta_loc: 0.0 }),
            }
        }
        Ok(out)
    }

    fn fold_critical_points(&self, fs: &[Fold], lo: f64, hi: f64) -> Vec<f64> {
        let mut crit: Vec<f64> = Vec::new();
        for j in 0..fs.len() {
            let partial = |x: f64| -> (f64, f64) {
                let mut y = x;
                let mut d = 1.0;
                for f in &fs[..j] {
                    let u = f.a * y + f.b;
                    d *= f.c * f.ell as f64 * f.a * u.powi(f.ell as i32 - 1);
                    y = f.c * u.powi(f.ell as i32) + f.d;
                }
                (y, d)
            };
            let target = -fs[j].b / fs[j].a;
            let mut breaks = vec![lo];
            breaks.extend(crit.iter().copied());
            breaks.push(hi);
            let mut found = Vec::new();
            for w in breaks.windows(2) {
                let (x0, x1) = (w[0], w[1]);
                let (y0, y1) = (partial(x0).0, partial(x1).0);
                let tol = 1e3 * f64::EPSILON * (y0.abs() + y1.abs() + target.abs()).max(1.0);
                if (y0 - target).abs() <= tol {
                    found.push(x0);
                }
                if (y1 - target).abs() <= tol {
                    found.push(x1);
                }
                if (y0 - target) * (y1 - target) < 0.0 {
                    found.push(monotone_solve(partial, target, x0, x1, y0 < y1));
                }
            }
            crit.extend(found);
            crit.sort_by(|a, b| a.partial_cmp(b).unwrap());
            crit.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (hi - lo));
        }
        crit
    }

    fn check_monotone_laps(&self) -> Result<()> {
        for lap in 0..=self.critical.len() {
            let (a, b) = self.lap_bounds(lap);
            let mut sign = 0.0;
            for i in 1..256 {
                let x = a + (b - a) * i as f64 / 256.0;
                let (_, d) = self.eval_d1_real(x);
                let s = d.signum();
                if d.abs() < TAU_ROOT {
                    continue;
                }
                if sign == 0.0 {
                    sign = s;
                } else if s != sign {
                    return Err(Error::InvalidMap(format!("derivative changes sign inside lap {lap}")));
                }
            }
        }
        Ok(())
    }

    fn assign_local_radii(&mut self) {
        let (lo, hi) = self.interval;
        let values = self.critical_values();
        let mut image = (self.eval_real(lo).min(self.eval_real(hi)), self.eval_real(lo).max(self.eval_real(hi)));
        for &v in &values {
            image = (image.0.min(v), image.1.max(v));
        }
        let tiny = 1e-12 * (hi - lo);
        for (i, cp) in self.critical.iter_mut().enumerate() {
            let v = values[i];
            let mut d = f64::INFINITY;
            for (j, &w) in values.iter().enumerate() {
                if j != i && (w - v).abs() > tiny {
                    d = d.min((w - v).abs());
                }
            }
            for e in [image.0, image.1] {
                if (e - v).abs() > tiny {
                    d = d.min((e - v).abs());
                }
            }
            cp.delta_loc = if d.is_finite() { 0.5 * d } else { 0.5 * (hi - lo) };
        }
    }
}

/// Branch of the `ell`-th root on the plane slit along the negative reals, with
/// `Fol^+(1) = 1` and `Fol^- = -Fol^+`.
pub fn fold_branch(ell: u32, sign: Sign, w: C64) -> Result<C64> {
    if w.norm() == 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }
    if w.re < 0.0 && w.im.abs() <= 1e-14 * w.norm() {
        return Err(Error::BranchCutViolation { re: w.re, im: w.im });
    }
    let root = if w.im == 0.0 {
        C64::new(w.re.powf(1.0 / ell as f64), 0.0)
    } else {
        let (r, theta) = w.to_polar();
        C64::from_polar(r.powf(1.0 / ell as f64), theta / ell as f64)
    };
    Ok(root * sign.factor())
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn series_mul<T: Scalar>(p: &[T], q: &[T]) -> Vec<T> {
    let n = p.len();
    let mut out = vec![T::from(0.0); n];
    for i in 0..n {
        for j in 0..n - i {
            out[i + j] = out[i + j] + p[i] * q[j];
        }
    }
    out
}

fn trimmed(c: &[f64]) -> &[f64] {
    let mut n = c.len();
    while n > 0 && c[n - 1] == 0.0 {
        n -= 1;
    }
    &c[..n]
}

fn poly_derivative(c: &[f64]) -> Vec<f64> {
    c.iter().enumerate().skip(1).map(|(i, &v)| i as f64 * v).collect()
}

fn poly_eval(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &v| acc * x + v)
}

fn poly_near_zero(c: &[f64], x: f64) -> bool {
    let mag: f64 = c.iter().rev().fold(0.0, |acc, &v| acc * x.abs() + v.abs());
    poly_eval(c, x).abs() <= 1e3 * f64::EPSILON * mag
}

/// Real roots in `[lo, hi]`, isolated by recursing on the derivative: between consecutive
/// roots of `p'` the polynomial is monotone and has at most one root.
pub(crate) fn poly_roots_in(c: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let c = trimmed(c);
    if c.len() <= 1 {
        return Vec::new();
    }
    if c.len() == 2 {
        let r = -c[0] / c[1];
        return if r >= lo && r <= hi { vec![r] } else { Vec::new() };
    }
    let turning = poly_roots_in(&poly_derivative(c), lo, hi);
    let mut breaks = vec![lo];
    breaks.extend(turning.iter().copied().filter(|&x| x > lo && x < hi));
    breaks.push(hi);
    let mut roots = Vec::new();
    for &x in &breaks {
        if poly_near_zero(c, x) {
            roots.push(x);
        }
    }
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        if poly_near_zero(c, a) || poly_near_zero(c, b) {
            continue;
        }
        let (pa, pb) = (poly_eval(c, a), poly_eval(c, b));
        if pa * pb < 0.0 {
            let d = poly_derivative(c);
            roots.push(monotone_solve(|x| (poly_eval(c, x), poly_eval(&d, x)), 0.0, a, b, pa < pb));
        }
    }
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (hi - lo).max(1e-300));
    roots
}

/// Solves `g(x) = y` for monotone `g` on `[lo, hi]` with safeguarded Newton steps.
pub(crate) fn monotone_solve<F: Fn(f64) -> (f64, f64)>(g: F, y: f64, lo: f64, hi: f64, increasing: bool) -> f64 {
    let (mut a, mut b) = (lo, hi);
    let mut x = 0.5 * (a + b);
    for _ in 0..200 {
        let (v, d) = g(x);
        let r = v - y;
        if r == 0.0 {
            return x;
        }
        if (r < 0.0) == increasing {
            a = x;
        } else {
            b = x;
        }
        let newton = x - r / d;
        let next = if d != 0.0 && newton > a && newton < b { newton } else { 0.5 * (a + b) };
        if next == x || next == a || next == b {
            let m = 0.5 * (a + b);
            if m == a || m == b {
                return x;
            }
            x = m;
        } else {
            x = next;
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn x2m1() -> AnalyticMap {
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        AnalyticMap::polynomial(vec![-1.0, 0.0, 1.0], (-phi, phi)).unwrap()
    }

    #[test]
    fn evaluate_quadratic() {
        let f = x2m1();
        assert_eq!(f.evaluate(C64::new(0.0, 0.0)), C64::new(-1.0, 0.0));
        assert_eq!(f.evaluate(C64::new(0.0, 1.0)), C64::new(-2.0, 0.0));
        // golden ratio solves x^2 - x - 1 = 0
        let g = (1.0 + 5f64.sqrt()) / 2.0;
        assert_relative_eq!(f.evaluate(C64::new(g, 0.0)).re, g, max_relative = 1e-15);
        assert_eq!(f.evaluate(C64::new(0.3, 0.0)).im, 0.0);
    }

    #[test]
    fn derivative_examples() {
        let f = x2m1();
        assert_eq!(f.derivative(C64::new(0.0, 0.0), 1), C64::new(0.0, 0.0));
        assert_eq!(f.derivative(C64::new(3.0, 0.0), 1), C64::new(6.0, 0.0));
        let g = AnalyticMap::polynomial(vec![0.0, -3.0, 0.0, 1.0], (-2.0, 2.0)).unwrap();
        assert_eq!(g.derivative(C64::new(1.0, 0.0), 1), C64::new(0.0, 0.0));
        assert_eq!(g.critical_points().len(), 2);
    }

    #[test]
    fn schwarzian_examples() {
        let sq = AnalyticMap::polynomial(vec![0.0, 0.0, 1.0], (-1.0, 1.0)).unwrap();
        assert_relative_eq!(sq.schwarzian(1.0).unwrap(), -1.5, max_relative = 1e-15);
        assert_relative_eq!(sq.schwarzian(2.0).unwrap(), -0.375, max_relative = 1e-15);
        assert!(matches!(sq.schwarzian(0.0), Err(Error::CriticalPointSingularity { .. })));
        let cube = AnalyticMap::kernel_only(Representation::Polynomial(vec![0.0, 0.0, 0.0, 1.0]));
        let s = cube.schwarzian(1.0).unwrap();
        assert_relative_eq!(s, -4.0, max_relative = 1e-15);
        // finite differences at h = 1e-5
        let h = 1e-5;
        let f = |x: f64| cube.eval_real(x);
        let d1 = (f(1.0 + h) - f(1.0 - h)) / (2.0 * h);
        let d2 = (f(1.0 + h) - 2.0 * f(1.0) + f(1.0 - h)) / (h * h);
        let h3 = 1e-3;
        let d3 = (f(1.0 + 2.0 * h3) - 2.0 * f(1.0 + h3) + 2.0 * f(1.0 - h3) - f(1.0 - 2.0 * h3)) / (2.0 * h3 * h3 * h3);
        let fd = d3 / d1 - 1.5 * (d2 / d1).powi(2);
        assert!((fd - s).abs() < 1e-3);
    }

    #[test]
    fn fold_branch_examples() {
        assert_eq!(fold_branch(2, Sign::Plus, C64::new(4.0, 0.0)).unwrap(), C64::new(2.0, 0.0));
        assert_eq!(fold_branch(2, Sign::Minus, C64::new(4.0, 0.0)).unwrap(), C64::new(-2.0, 0.0));
        let r = fold_branch(2, Sign::Plus, C64::new(0.0, 1.0)).unwrap();
        let e = C64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
        assert!((r - e).norm() < 1e-15);
        assert!(matches!(fold_branch(2, Sign::Plus, C64::new(-1.0, 0.0)), Err(Error::BranchCutViolation { .. })));
    }

    #[test]
    fn inverse_branch_examples() {
        let sq = AnalyticMap::polynomial(vec![0.0, 0.0, 1.0], (-1.0, 1.0)).unwrap();
        let q = sq.critical_points()[0];
        let w = C64::new(4.0, 0.0);
        assert_eq!(sq.inverse_branch_near_critical_value(&q, Sign::Plus, w).unwrap(), C64::new(2.0, 0.0));
        assert_eq!(sq.inverse_branch_near_critical_value(&q, Sign::Minus, w).unwrap(), C64::new(-2.0, 0.0));
        let f = x2m1();
        let q = f.critical_points()[0];
        let z = f.inverse_branch_near_critical_value(&q, Sign::Plus, C64::new(-0.75, 0.0)).unwrap();
        assert_relative_eq!(z.re, 0.5, max_relative = 1e-15);
        assert_eq!(z.im, 0.0);
        assert!(matches!(
            f.inverse_branch_near_critical_value(&q, Sign::Plus, C64::new(-1.5, 0.0)),
            Err(Error::BranchAmbiguity { .. })
        ));
    }

    #[test]
    fn critical_points_of_cubic_and_quartic() {
        let g = AnalyticMap::polynomial(vec![0.0, -3.0, 0.0, 1.0], (-2.0, 2.0)).unwrap();
        let cps: Vec<f64> = g.critical_points().iter().map(|c| c.position).collect();
        assert_relative_eq!(cps[0], -1.0, max_relative = 1e-14);
        assert_relative_eq!(cps[1], 1.0, max_relative = 1e-14);
        assert!(g.critical_points().iter().all(|c| c.ell == 2));
        let quartic = AnalyticMap::polynomial(vec![0.0, 0.0, 0.0, 0.0, 1.0], (-1.0, 1.0)).unwrap();
        assert_eq!(quartic.critical_points().len(), 1);
        assert_eq!(quartic.critical_points()[0].ell, 4);
        // x^3 has an odd critical point
        assert!(AnalyticMap::polynomial(vec![0.0, 0.0, 0.0, 1.0], (-1.0, 1.0)).is_err());
        // f(1) = 2 is not an endpoint
        assert!(AnalyticMap::polynomial(vec![1.0, 0.0, 1.0], (-1.0, 1.0)).is_err());
    }

    #[test]
    fn fold_composition_matches_polynomial() {
        // (x^2 - 1)^2 - 1 composed from two folds
        let f1 = Fold { a: 1.0, b: 0.0, ell: 2, c: 1.0, d: -1.0 };
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let m = AnalyticMap::folds(vec![f1, f1], (-phi, phi)).unwrap();
        let p = x2m1();
        for &x in &[-1.3, -0.2, 0.4, 1.1] {
            assert_relative_eq!(m.eval_real(x), p.iterate(x, 2), max_relative = 1e-14);
        }
        let cps: Vec<f64> = m.critical_points().iter().map(|c| c.position).collect();
        assert_eq!(cps.len(), 3);
        assert_relative_eq!(cps[0], -1.0, max_relative = 1e-14);
        assert!(cps[1].abs() < 1e-14);
        assert_relative_eq!(cps[2], 1.0, max_relative = 1e-14);
        let jet = m.taylor(0.3, 4);
        // f(x) = x^4 - 2x^2 at x = 0.3
        assert_relative_eq!(jet[1], 4.0 * 0.027 - 4.0 * 0.3, max_relative = 1e-13);
        assert_relative_eq!(jet[4], 1.0, max_relative = 1e-13);
    }

    #[test]
    fn coincident_folds_multiply_criticality() {
        let f1 = Fold { a: 1.0, b: 0.0, ell: 2, c: 1.0, d: 0.0 };
        let m = AnalyticMap::folds(vec![f1, f1], (-1.0, 1.0)).unwrap();
        assert_eq!(m.critical_points().len(), 1);
        assert_eq!(m.critical_points()[0].ell, 4);
    }

    #[test]
    fn local_radius_is_half_gap_to_far_image_end() {
        let f = x2m1();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert_relative_eq!(f.critical_points()[0].delta_loc, 0.5 * (phi + 1.0), max_relative = 1e-14);
    }

    #[test]
    fn lap_inversion() {
        let f = x2m1();
        assert_relative_eq!(f.invert_on_lap(1, -0.75).unwrap(), 0.5, max_relative = 1e-15);
        assert_relative_eq!(f.invert_on_lap(0, -0.75).unwrap(), -0.5, max_relative = 1e-15);
        assert!(f.invert_on_lap(0, -1.5).is_none());
    }
}
