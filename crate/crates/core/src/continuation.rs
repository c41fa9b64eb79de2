//! Following levels through parameter space.
//!
//! A sweep scans the spectrum on a parameter grid and links roots at
//! neighbouring grid points into tracks. Two adjacent tracks that disappear
//! together have merged into a complex pair; the merger is then pinned down
//! as a double root of the secular function.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::ScaledParams;
use crate::secular::{eval_n_scaled, secular_det_r, secular_det_r_derivative, secular_magnitude, SigmaTau};
use crate::spectrum::{golden_min, scan_roots, scan_roots_with, ScanOptions, Spectrum, Stability};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Parameter {
    #[serde(rename = "Z")]
    Z,
    #[serde(rename = "lambda")]
    Lambda,
}

impl Parameter {
    pub fn get(&self, p: &ScaledParams) -> f64 {
        match self {
            Parameter::Z => p.z,
            Parameter::Lambda => p.lambda,
        }
    }

    pub fn set(&self, p: &ScaledParams, v: f64) -> ScaledParams {
        match self {
            Parameter::Z => p.with_z(v),
            Parameter::Lambda => p.with_lambda(v),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Parameter::Z => "Z",
            Parameter::Lambda => "lambda",
        }
    }
}

impl fmt::Display for Parameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Parameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Z" | "z" => Ok(Parameter::Z),
            "lambda" | "Lambda" => Ok(Parameter::Lambda),
            _ => Err(invalid(format!("unknown parameter '{s}', expected Z or lambda"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrackStatus {
    Real,
    Merged { at: f64, partner: usize },
    Exited { at: f64 },
    Gap { at: f64 },
}

impl TrackStatus {
    pub fn label(&self) -> &'static str {
        match self {
            TrackStatus::Real => "real",
            TrackStatus::Merged { .. } => "merged",
            TrackStatus::Exited { .. } => "exited",
            TrackStatus::Gap { .. } => "gap",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Initial,
    Pair,
    Window,
    Gap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Track {
    pub id: usize,
    pub origin: Origin,
    /// `(parameter, R)` in sweep order.
    pub points: Vec<(f64, f64)>,
    pub status: TrackStatus,
}

impl Track {
    pub fn last(&self) -> (f64, f64) {
        *self.points.last().expect("tracks are never empty")
    }
}

/// Two tracks appearing or disappearing together between `lo` and `hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairEvent {
    pub lo: f64,
    pub hi: f64,
    pub r: f64,
    pub tracks: (usize, usize),
}

impl PairEvent {
    pub fn at(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub parameter: Parameter,
    pub base: ScaledParams,
    pub r_max: f64,
    /// Every parameter value that was scanned, refinements included.
    pub grid: Vec<f64>,
    pub tracks: Vec<Track>,
    pub mergers: Vec<PairEvent>,
    pub births: Vec<PairEvent>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub max_depth: usize,
    pub scan: ScanOptions,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions { max_depth: 10, scan: ScanOptions::default() }
    }
}

pub fn sweep(params0: &ScaledParams, which: Parameter, range: (f64, f64), steps: usize, r_max: f64) -> Result<Branch> {
    sweep_with(params0, which, range, steps, r_max, &SweepOptions::default())
}

pub fn sweep_with(
    params0: &ScaledParams,
    which: Parameter,
    range: (f64, f64),
    steps: usize,
    r_max: f64,
    opts: &SweepOptions,
) -> Result<Branch> {
    let (a, b) = range;
    if steps < 2 {
        return Err(invalid("a sweep needs at least 2 steps"));
    }
    if !(a.is_finite() && b.is_finite() && a >= 0.0 && b >= 0.0 && a != b) {
        return Err(invalid(format!("invalid sweep range ({a}, {b})")));
    }
    if !(r_max > 0.0) {
        return Err(invalid("R_max must be positive"));
    }
    which.set(params0, a).validate()?;

    let grid: Vec<f64> =
        (0..steps).map(|i| if i + 1 == steps { b } else { a + (b - a) * i as f64 / (steps - 1) as f64 }).collect();
    let scans: Vec<Vec<f64>> =
        grid.par_iter().map(|&p| scan_roots_with(&which.set(params0, p), r_max, &opts.scan).r_values()).collect();

    let mut w = Walker {
        params0: *params0,
        which,
        r_max,
        opts: *opts,
        tracks: Vec::new(),
        active: Vec::new(),
        mergers: Vec::new(),
        births: Vec::new(),
        grid: vec![grid[0]],
    };
    for &r in &scans[0] {
        let id = w.new_track(Origin::Initial, grid[0], r);
        w.active.push(id);
    }
    for i in 1..grid.len() {
        w.advance(grid[i - 1], &scans[i - 1], grid[i], &scans[i], 0);
    }
    Ok(Branch {
        parameter: which,
        base: *params0,
        r_max,
        grid: w.grid,
        tracks: w.tracks,
        mergers: w.mergers,
        births: w.births,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Step {
    Match(usize, usize),
    Merge(usize),
    Birth(usize),
    Exit(usize),
    Entry(usize),
}

/// Order-preserving alignment of two sorted root lists at minimal total
/// displacement. Roots vanish or appear in adjacent pairs, or singly through
/// the top of the window.
fn align(a: &[f64], b: &[f64], r_max: f64) -> Vec<Step> {
    let (m, n) = (a.len(), b.len());
    let idx = |i: usize, j: usize| i * (n + 1) + j;
    let mut cost = vec![f64::INFINITY; (m + 1) * (n + 1)];
    let mut from: Vec<Option<(usize, usize, Step)>> = vec![None; (m + 1) * (n + 1)];
    cost[idx(0, 0)] = 0.0;
    const EVENT: f64 = 1e-12;
    for i in 0..=m {
        for j in 0..=n {
            let c = cost[idx(i, j)];
            if !c.is_finite() {
                continue;
            }
            let mut relax = |ni: usize, nj: usize, add: f64, s: Step| {
                let k = idx(ni, nj);
                if c + add < cost[k] {
                    cost[k] = c + add;
                    from[k] = Some((i, j, s));
                }
            };
            if i < m && j < n {
                relax(i + 1, j + 1, (a[i] - b[j]).abs(), Step::Match(i, j));
            }
            if i + 1 < m {
                relax(i + 2, j, a[i + 1] - a[i] + EVENT, Step::Merge(i));
            }
            if j + 1 < n {
                relax(i, j + 2, b[j + 1] - b[j] + EVENT, Step::Birth(j));
            }
            if i < m && j == n {
                relax(i + 1, j, (r_max - a[i]).abs() + EVENT, Step::Exit(i));
            }
            if j < n && i == m {
                relax(i, j + 1, (r_max - b[j]).abs() + EVENT, Step::Entry(j));
            }
        }
    }
    let mut steps = Vec::new();
    let (mut i, mut j) = (m, n);
    while let Some((pi, pj, s)) = from[idx(i, j)] {
        steps.push(s);
        i = pi;
        j = pj;
    }
    steps.reverse();
    steps
}

fn spacing(v: &[f64], i: usize, fallback: f64) -> f64 {
    let mut s = fallback;
    if i > 0 {
        s = s.min(v[i] - v[i - 1]);
    }
    if i + 1 < v.len() {
        s = s.min(v[i + 1] - v[i]);
    }
    s
}

struct Walker {
    params0: ScaledParams,
    which: Parameter,
    r_max: f64,
    opts: SweepOptions,
    tracks: Vec<Track>,
    /// Track ids ordered by their current `R`.
    active: Vec<usize>,
    mergers: Vec<PairEvent>,
    births: Vec<PairEvent>,
    grid: Vec<f64>,
}

impl Walker {
    fn new_track(&mut self, origin: Origin, p: f64, r: f64) -> usize {
        let id = self.tracks.len();
        self.tracks.push(Track { id, origin, points: vec![(p, r)], status: TrackStatus::Real });
        id
    }

    fn slope(&self, id: usize) -> Option<f64> {
        let pts = &self.tracks[id].points;
        let n = pts.len();
        if n < 2 {
            return None;
        }
        let (p0, r0) = pts[n - 2];
        let (p1, r1) = pts[n - 1];
        Some((r1 - r0) / (p1 - p0))
    }

    /// Matches whose displacement exceeds the gate, with a flag for those that
    /// are outright ambiguous (comparable to the root spacing).
    fn suspicious(&self, a: &[f64], b: &[f64], steps: &[Step], dp: f64) -> (bool, Vec<bool>) {
        let mut any = false;
        let mut ambiguous = vec![false; steps.len()];
        for (k, s) in steps.iter().enumerate() {
            match *s {
                Step::Match(i, j) => {
                    let disp = (a[i] - b[j]).abs();
                    let local = spacing(a, i, self.r_max).min(spacing(b, j, self.r_max));
                    let gate =
                        self.slope(self.active[i]).map_or(f64::INFINITY, |s| 3.0 * s.abs() * dp).max(0.05 * local);
                    if disp > gate {
                        any = true;
                    }
                    // simple real roots cannot pass each other, so a match is only
                    // in doubt when the new root sits closer to a neighbour
                    let closer = |n: usize| (a[n] - b[j]).abs() < disp;
                    if (i > 0 && closer(i - 1)) || (i + 1 < a.len() && closer(i + 1)) {
                        any = true;
                        ambiguous[k] = true;
                    }
                }
                _ => any = true,
            }
        }
        (any, ambiguous)
    }

    fn advance(&mut self, p0: f64, a: &[f64], p1: f64, b: &[f64], depth: usize) {
        let steps = align(a, b, self.r_max);
        let (refine, ambiguous) = self.suspicious(a, b, &steps, (p1 - p0).abs());
        if refine && depth < self.opts.max_depth {
            let pm = 0.5 * (p0 + p1);
            let mid = scan_roots_with(&self.which.set(&self.params0, pm), self.r_max, &self.opts.scan).r_values();
            self.advance(p0, a, pm, &mid, depth + 1);
            self.advance(pm, &mid, p1, b, depth + 1);
            return;
        }
        self.grid.push(p1);
        let at = 0.5 * (p0 + p1);
        let mut next = Vec::with_capacity(b.len());
        for (k, s) in steps.iter().enumerate() {
            match *s {
                Step::Match(i, j) => {
                    let id = self.active[i];
                    if ambiguous[k] {
                        self.tracks[id].status = TrackStatus::Gap { at };
                        let nid = self.new_track(Origin::Gap, p1, b[j]);
                        next.push(nid);
                    } else {
                        self.tracks[id].points.push((p1, b[j]));
                        next.push(id);
                    }
                }
                Step::Merge(i) => {
                    let (t0, t1) = (self.active[i], self.active[i + 1]);
                    self.tracks[t0].status = TrackStatus::Merged { at, partner: t1 };
                    self.tracks[t1].status = TrackStatus::Merged { at, partner: t0 };
                    self.mergers.push(PairEvent {
                        lo: p0.min(p1),
                        hi: p0.max(p1),
                        r: 0.5 * (a[i] + a[i + 1]),
                        tracks: (t0, t1),
                    });
                }
                Step::Birth(j) => {
                    let t0 = self.new_track(Origin::Pair, p1, b[j]);
                    let t1 = self.new_track(Origin::Pair, p1, b[j + 1]);
                    next.push(t0);
                    next.push(t1);
                    self.births.push(PairEvent {
                        lo: p0.min(p1),
                        hi: p0.max(p1),
                        r: 0.5 * (b[j] + b[j + 1]),
                        tracks: (t0, t1),
                    });
                }
                Step::Exit(i) => {
                    let id = self.active[i];
                    self.tracks[id].status = TrackStatus::Exited { at };
                }
                Step::Entry(j) => {
                    let id = self.new_track(Origin::Window, p1, b[j]);
                    next.push(id);
                }
            }
        }
        self.active = next;
    }
}

/// A coalescence of two real levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExceptionalPoint {
    pub lambda: f64,
    pub z: f64,
    pub free: Parameter,
    pub r_double: f64,
    /// Level ordinals of the pair just on the real side.
    pub pair_indices: Option<(usize, usize)>,
    /// `|D|` and `|dD/dR|` at the solution, relative to the size of their terms.
    pub residual_value: f64,
    pub residual_derivative: f64,
    pub second_derivative: f64,
    /// `+1` if the pair is real above the exceptional value of the free
    /// parameter, `-1` if below.
    pub real_side: f64,
    pub iterations: usize,
}

impl ExceptionalPoint {
    pub fn params(&self, scale: f64) -> ScaledParams {
        ScaledParams { lambda: self.lambda, z: self.z, scale }
    }

    pub fn free_value(&self) -> f64 {
        match self.free {
            Parameter::Z => self.z,
            Parameter::Lambda => self.lambda,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpOptions {
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for EpOptions {
    fn default() -> Self {
        EpOptions { max_iterations: 100, tolerance: 1e-9 }
    }
}

struct DoubleRoot<'a> {
    base: &'a ScaledParams,
    free: Parameter,
}

impl DoubleRoot<'_> {
    fn at(&self, p: f64) -> ScaledParams {
        self.free.set(self.base, p)
    }

    fn raw(&self, r: f64, p: f64) -> [f64; 2] {
        let q = self.at(p);
        [secular_det_r(r, &q), secular_det_r_derivative(r, &q)]
    }

    fn scales(&self, r: f64, p: f64) -> [f64; 2] {
        let q = self.at(p);
        let m = secular_magnitude(r, &q).max(f64::MIN_POSITIVE);
        [m, m * (2.0 + 2.0 * q.lambda)]
    }

    fn normalized(&self, r: f64, p: f64) -> [f64; 2] {
        let f = self.raw(r, p);
        let s = self.scales(r, p);
        [f[0] / s[0], f[1] / s[1]]
    }
}

pub fn find_exceptional(params_hint: &ScaledParams, r_hint: f64, free: Parameter) -> Result<ExceptionalPoint> {
    find_exceptional_with(params_hint, r_hint, free, &EpOptions::default())
}

/// Damped Newton on `D(R; p) = 0`, `dD/dR (R; p) = 0` with central-difference
/// Jacobian.
pub fn find_exceptional_with(
    params_hint: &ScaledParams,
    r_hint: f64,
    free: Parameter,
    opts: &EpOptions,
) -> Result<ExceptionalPoint> {
    params_hint.validate()?;
    if !(r_hint > 0.0 && r_hint.is_finite()) {
        return Err(invalid(format!("R hint must be positive, got {r_hint}")));
    }
    let sys = DoubleRoot { base: params_hint, free };
    let p_hint = free.get(params_hint);
    let (mut r, mut p) = (r_hint, p_hint);
    let norm = |v: [f64; 2]| v[0].hypot(v[1]);
    let mut fn_ = sys.normalized(r, p);
    let r_reach = 0.5 * r_hint.max(1.0);
    let p_reach = 0.5 * p_hint.abs().max(1.0);

    for it in 0..opts.max_iterations {
        if fn_[0].abs() < opts.tolerance && fn_[1].abs() < opts.tolerance {
            return Ok(finish(&sys, r, p, fn_, it));
        }
        let hr = 1e-6 * r.abs().max(1.0);
        let hp = 1e-6 * p.abs().max(1.0);
        let fr1 = sys.raw(r + hr, p);
        let fr0 = sys.raw(r - hr, p);
        let fp1 = sys.raw(r, p + hp);
        let fp0 = sys.raw(r, p - hp);
        let j = [
            [(fr1[0] - fr0[0]) / (2.0 * hr), (fp1[0] - fp0[0]) / (2.0 * hp)],
            [(fr1[1] - fr0[1]) / (2.0 * hr), (fp1[1] - fp0[1]) / (2.0 * hp)],
        ];
        let f = sys.raw(r, p);
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == 0.0 || !det.is_finite() {
            return Err(Error::HintTooFar(format!("singular Jacobian at R = {r}, {free} = {p}")));
        }
        let dr = -(f[0] * j[1][1] - f[1] * j[0][1]) / det;
        let dp = -(j[0][0] * f[1] - j[1][0] * f[0]) / det;

        let current = norm(fn_);
        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-6 {
            let (nr, np) = (r + t * dr, p + t * dp);
            if nr > 0.0 && np >= 0.0 {
                let trial = sys.normalized(nr, np);
                if norm(trial) < current {
                    r = nr;
                    p = np;
                    fn_ = trial;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            return Err(Error::HintTooFar(format!("no descent from R = {r}, {free} = {p}: no double root nearby")));
        }
        if (r - r_hint).abs() > r_reach || (p - p_hint).abs() > p_reach {
            return Err(Error::HintTooFar(format!(
                "iterate wandered to R = {r}, {free} = {p} from hint R = {r_hint}, {free} = {p_hint}"
            )));
        }
    }
    if fn_[0].abs() < opts.tolerance && fn_[1].abs() < opts.tolerance {
        return Ok(finish(&sys, r, p, fn_, opts.max_iterations));
    }
    Err(Error::NoConvergence { iterations: opts.max_iterations, r, param: p, residual: norm(fn_) })
}

fn finish(sys: &DoubleRoot<'_>, r: f64, p: f64, fn_: [f64; 2], iterations: usize) -> ExceptionalPoint {
    let q = sys.at(p);
    let hr = 1e-5 * r.abs().max(1.0);
    let hp = 1e-5 * p.abs().max(1.0);
    let g_rr = (secular_det_r_derivative(r + hr, &q) - secular_det_r_derivative(r - hr, &q)) / (2.0 * hr);
    let g_p = (sys.raw(r, p + hp)[0] - sys.raw(r, p - hp)[0]) / (2.0 * hp);
    // locally D ~ g_p (p - p*) + g_rr (R - R*)^2 / 2
    let real_side = -(g_p * g_rr).signum();

    let delta = 1e-4 * p.abs().max(1.0);
    let side = sys.at((p + real_side * delta).max(0.0));
    let window = (r + 1.0).max(crate::spectrum::default_r_max(side.lambda));
    let spec = scan_roots(&side, window);
    let mut near: Vec<_> = spec.roots.iter().filter(|x| (x.r - r).abs() < 0.1).collect();
    near.sort_by(|x, y| (x.r - r).abs().total_cmp(&(y.r - r).abs()));
    let pair_indices = if near.len() >= 2 {
        let (i, j) = (near[0].index, near[1].index);
        Some((i.min(j), i.max(j)))
    } else {
        None
    };

    ExceptionalPoint {
        lambda: q.lambda,
        z: q.z,
        free: sys.free,
        r_double: r,
        pair_indices,
        residual_value: fn_[0].abs(),
        residual_derivative: fn_[1].abs(),
        second_derivative: g_rr / sys.scales(r, p)[1],
        real_side,
        iterations,
    }
}

/// Picks a starting `R` for [`find_exceptional`]: the bottom of the shallowest
/// same-sign dip if the scan saw one, otherwise the midpoint of the closest
/// adjacent pair of roots.
pub fn locate_hint(params: &ScaledParams, r_max: f64) -> Result<f64> {
    let s = scan_roots(params, r_max);
    if let Some(ne) = s.diagnostics.near_exceptional.iter().min_by(|a, b| a.relative_value.total_cmp(&b.relative_value))
    {
        return Ok(ne.r);
    }
    s.roots
        .windows(2)
        .min_by(|a, b| (a[1].r - a[0].r).total_cmp(&(b[1].r - b[0].r)))
        .map(|w| 0.5 * (w[0].r + w[1].r))
        .ok_or_else(|| Error::HintTooFar(format!("fewer than two real roots below R = {r_max}")))
}

/// Refines every merger recorded in a sweep into an exceptional point.
pub fn exceptional_from_branch(branch: &Branch) -> Vec<Result<ExceptionalPoint>> {
    branch
        .mergers
        .iter()
        .map(|m| {
            let hint = branch.parameter.set(&branch.base, m.at());
            find_exceptional(&hint, m.r, branch.parameter)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifyOptions {
    /// Largest step in `Z` on the continuation grid.
    pub max_step: f64,
    /// Continuation window; defaults to `max(R_max, 2 R_top + pi)`.
    pub window: Option<f64>,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions { max_step: 0.25, window: None }
    }
}

pub fn classify_levels(params: &ScaledParams, z_cap: f64, r_max: f64) -> Result<Spectrum> {
    classify_levels_with(params, z_cap, r_max, &ClassifyOptions::default())
}

/// Continues every level in `Z` up to `z_cap`. Levels still real at the cap
/// are robust, levels that merge on the way are fragile.
pub fn classify_levels_with(params: &ScaledParams, z_cap: f64, r_max: f64, opts: &ClassifyOptions) -> Result<Spectrum> {
    params.validate()?;
    if !(z_cap > params.z) {
        return Err(invalid(format!("Z_cap = {z_cap} must exceed Z = {}", params.z)));
    }
    if !(opts.max_step > 0.0) {
        return Err(invalid("continuation step must be positive"));
    }
    let mut spectrum = scan_roots(params, r_max);
    if spectrum.is_empty() {
        return Ok(spectrum);
    }
    let top = spectrum.roots.last().map(|r| r.r).unwrap_or(0.0);
    let window = opts.window.unwrap_or_else(|| r_max.max(2.0 * top + PI));
    let steps = ((z_cap - params.z) / opts.max_step).ceil() as usize + 1;
    let branch = sweep(params, Parameter::Z, (params.z, z_cap), steps.max(2), window)?;

    for root in &mut spectrum.roots {
        let track = branch
            .tracks
            .iter()
            .filter(|t| t.origin == Origin::Initial)
            .min_by(|a, b| (a.points[0].1 - root.r).abs().total_cmp(&(b.points[0].1 - root.r).abs()));
        let Some(track) = track.filter(|t| (t.points[0].1 - root.r).abs() < 1e-7 * root.r.max(1.0)) else {
            continue;
        };
        match track.status {
            TrackStatus::Real => root.stability = Stability::Robust,
            TrackStatus::Merged { at, .. } => {
                root.stability = Stability::Fragile;
                root.critical_z = Some(at);
            }
            TrackStatus::Exited { .. } | TrackStatus::Gap { .. } => root.stability = Stability::Unknown,
        }
    }
    Ok(spectrum)
}

/// Value of the doubled shift ratio `2 ell / (L - ell)` at which the pole
/// hyperbola with index `k` first touches the singularity oval of band `N`.
pub fn touching_lambda_in(n: u32, k: u32) -> Result<f64> {
    if n == 0 {
        return Err(invalid("band index N must be at least 1"));
    }
    Ok((4.0 * k as f64 + 2.0) / (4.0 * n as f64 - 1.0))
}

/// Lower estimate of the detachment value: the pole hyperbola `k - 1` passes
/// through the bottom end of the oval.
pub fn touching_lambda_out_estimate(n: u32, k: u32) -> Result<f64> {
    if n == 0 || k == 0 {
        return Err(invalid("touching values need N >= 1 and k >= 1"));
    }
    Ok((4.0 * k as f64 - 2.0) / (4.0 * n as f64 - 3.0))
}

/// Smallest value of `exp(-2 sigma) N(sigma, tau)` along the pole hyperbola
/// `lambda2 R = (pole + 1/2) pi` inside the stripe of band `n`; negative while
/// the hyperbola cuts into the oval, `+1` when it misses the stripe.
fn oval_contact(n: u32, pole: u32, lambda2: f64) -> f64 {
    let rh = (pole as f64 + 0.5) * PI / lambda2;
    let t_lo = (n as f64 - 0.75) * PI;
    let t_hi = (n as f64 - 0.25) * PI;
    if rh >= t_hi {
        return 1.0;
    }
    let s_lo = (t_lo * t_lo - rh * rh).max(0.0).sqrt();
    let s_hi = (t_hi * t_hi - rh * rh).sqrt();
    let f = |s: f64| eval_n_scaled(SigmaTau::new(s, (rh * rh + s * s).sqrt()));
    let samples = 400;
    let (mut best, mut at) = (f64::INFINITY, 0usize);
    for i in 0..=samples {
        let s = s_lo + (s_hi - s_lo) * i as f64 / samples as f64;
        let v = f(s);
        if v < best {
            best = v;
            at = i;
        }
    }
    let h = (s_hi - s_lo) / samples as f64;
    let lo = (s_lo + h * at.saturating_sub(1) as f64).max(s_lo);
    let hi = (s_lo + h * (at + 1) as f64).min(s_hi);
    let s = golden_min(f, lo, hi);
    best.min(f(s))
}

fn bisect_contact(n: u32, pole: u32, lo: f64, hi: f64, entering: bool) -> Result<f64> {
    let inside = |l: f64| oval_contact(n, pole, l) < 0.0;
    let (mut a, mut b) = (lo, hi);
    if inside(a) == entering || inside(b) != entering {
        return Err(Error::NoDetachment { lo, hi });
    }
    while b - a > 1e-13 * b {
        let m = 0.5 * (a + b);
        if inside(m) == entering {
            b = m;
        } else {
            a = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Numeric counterpart of [`touching_lambda_in`]: bisection on first contact
/// between the pole hyperbola and the oval.
pub fn verify_touching_in(n: u32, k: u32) -> Result<f64> {
    let guess = touching_lambda_in(n, k)?;
    bisect_contact(n, k, 0.9 * guess, 1.1 * guess, true)
}

/// Doubled shift ratio at which pole hyperbola `k - 1` loses contact with the
/// oval of band `N`, searched inside `bracket`.
pub fn touching_lambda_out(n: u32, k: u32, bracket: (f64, f64)) -> Result<f64> {
    touching_lambda_out_estimate(n, k)?;
    let (lo, hi) = bracket;
    if !(lo > 0.0 && hi > lo) {
        return Err(invalid(format!("invalid bracket ({lo}, {hi})")));
    }
    bisect_contact(n, k - 1, lo, hi, false)
}
