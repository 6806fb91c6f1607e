//! Continuation of eigenvalue branches across a parameter grid, with
//! reality labelling and exceptional-point detection.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::contour::{ContourOptions, Rect, RootLocator};
use super::roots::{find_double_root, newton, ExceptionalPoint, SpectralFunction};
use crate::error::{Result, SpectralError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SegmentLabel {
    Real,
    ComplexPair,
}

/// `|Im z| ≤ 1e-8 max(1, |z|)`.
pub fn reality_tolerance(z: Complex64) -> f64 {
    1e-8 * z.norm().max(1.0)
}

pub fn classify(z: Complex64) -> SegmentLabel {
    if z.im.abs() <= reality_tolerance(z) {
        SegmentLabel::Real
    } else {
        SegmentLabel::ComplexPair
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralBranch {
    pub parameter_name: String,
    pub points: Vec<(f64, Complex64)>,
    pub segment_labels: Vec<SegmentLabel>,
    pub branch_id: usize,
    /// Conjugate partner during the most recent complex-pair segment.
    pub partner_id: Option<usize>,
}

impl SpectralBranch {
    pub fn last(&self) -> Option<(f64, Complex64)> {
        self.points.last().copied()
    }

    pub fn eigenvalue_at(&self, parameter: f64) -> Option<Complex64> {
        self.points
            .iter()
            .find(|(p, _)| *p == parameter)
            .map(|(_, z)| *z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackOptions {
    /// Newton tolerance relative to `max(1, |z|)`.
    pub root_rel_tol: f64,
    pub max_iter: usize,
    /// Two roots closer than this fraction of the local spacing trigger an
    /// exceptional-point refinement.
    pub coalescence_factor: f64,
    /// Maximum number of parameter-step halvings before a branch is lost.
    pub max_halvings: usize,
    /// Tolerance passed to the double-root solver.
    pub ep_tol: f64,
    pub refine_exceptional_points: bool,
}

impl Default for TrackOptions {
    fn default() -> Self {
        Self {
            root_rel_tol: 1e-11,
            max_iter: 50,
            coalescence_factor: 1e-4,
            max_halvings: 8,
            ep_tol: 1e-7,
            refine_exceptional_points: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackResult {
    pub branches: Vec<SpectralBranch>,
    pub exceptional_points: Vec<ExceptionalPoint>,
    /// `BranchLost`, `DuplicateRoot` and failed refinements, in grid order.
    pub diagnostics: Vec<SpectralError>,
}

impl TrackResult {
    /// Renumbers the branches in reverse so that id 0 is the branch that
    /// started with the largest real part.
    pub fn reverse_levels(&mut self) {
        let n = self.branches.len();
        let flip = |id: usize| if id < n { n - 1 - id } else { id };
        self.branches.reverse();
        for b in &mut self.branches {
            b.branch_id = flip(b.branch_id);
            b.partner_id = b.partner_id.map(flip);
        }
        for d in &mut self.diagnostics {
            match d {
                SpectralError::BranchLost { branch_id, .. } => *branch_id = flip(*branch_id),
                SpectralError::DuplicateRoot { first, second, .. } => {
                    (*first, *second) = (flip(*second), flip(*first));
                }
                _ => {}
            }
        }
    }
}

#[derive(Clone)]
struct Active {
    index: usize,
    hist: Vec<(f64, Complex64)>,
}

impl Active {
    fn last(&self) -> (f64, Complex64) {
        *self.hist.last().unwrap()
    }

    fn predict(&self, p: f64) -> Complex64 {
        let n = self.hist.len();
        let (p1, z1) = self.hist[n - 1];
        if n < 2 {
            return z1;
        }
        let (p0, z0) = self.hist[n - 2];
        z1 + (z1 - z0) * ((p - p1) / (p1 - p0))
    }

    fn push(&mut self, p: f64, z: Complex64) {
        self.hist.push((p, z));
        if self.hist.len() > 2 {
            self.hist.remove(0);
        }
    }
}

struct Tracker<'a, S: SpectralFunction + ?Sized> {
    family: &'a S,
    opts: TrackOptions,
}

fn scale(z: Complex64) -> f64 {
    z.norm().max(1.0)
}

fn same_root(a: Complex64, b: Complex64) -> bool {
    (a - b).norm() <= 1e-7 * scale(a)
}

/// Greedy assignment on sorted distances; returns the candidate index for
/// each prediction, if any.
fn greedy_assign(preds: &[Complex64], cands: &[Complex64]) -> Vec<Option<usize>> {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(preds.len() * cands.len());
    for (i, p) in preds.iter().enumerate() {
        for (j, c) in cands.iter().enumerate() {
            pairs.push(((p - c).norm(), i, j));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut out = vec![None; preds.len()];
    let mut used = vec![false; cands.len()];
    for (_, i, j) in pairs {
        if out[i].is_none() && !used[j] {
            out[i] = Some(j);
            used[j] = true;
        }
    }
    out
}

impl<'a, S: SpectralFunction + ?Sized> Tracker<'a, S> {
    fn tol(&self, z: Complex64) -> f64 {
        self.opts.root_rel_tol * scale(z)
    }

    fn nearest_distance(active: &[Active], i: usize) -> f64 {
        let zi = active[i].last().1;
        active
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != i)
            .map(|(_, a)| (a.last().1 - zi).norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// One continuation step to `p`; `None` marks branches that could not be
    /// continued even after local re-solving.
    fn try_step(&self, active: &[Active], p: f64) -> Vec<Option<Complex64>> {
        let n = active.len();
        let preds: Vec<Complex64> = active.iter().map(|a| a.predict(p)).collect();
        let corrected: Vec<Option<Complex64>> = preds
            .par_iter()
            .map(|&z| {
                newton(self.family, p, z, self.tol(z), self.opts.max_iter)
                    .ok()
                    .filter(|r| r.root.re.is_finite() && r.root.im.is_finite())
                    .map(|r| r.root)
            })
            .collect();

        let mut problem = vec![false; n];
        for i in 0..n {
            let Some(z) = corrected[i] else {
                problem[i] = true;
                continue;
            };
            let last = active[i].last().1;
            let nn = Self::nearest_distance(active, i);
            let limit = (3.0 * (preds[i] - last).norm()).max(if nn.is_finite() {
                0.5 * nn
            } else {
                0.1 * scale(last)
            });
            if (z - last).norm() > limit {
                problem[i] = true;
            }
            for k in 0..i {
                if let Some(w) = corrected[k] {
                    if same_root(z, w) {
                        problem[i] = true;
                        problem[k] = true;
                    }
                }
            }
        }
        if !problem.iter().any(|&b| b) {
            return corrected;
        }

        let mut group = problem.clone();
        for i in 0..n {
            if problem[i] {
                let zi = active[i].last().1;
                if let Some(k) = (0..n).filter(|&k| k != i).min_by(|&a, &b| {
                    (active[a].last().1 - zi)
                        .norm()
                        .total_cmp(&(active[b].last().1 - zi).norm())
                }) {
                    group[k] = true;
                }
            }
        }
        let members: Vec<usize> = (0..n).filter(|&i| group[i]).collect();
        let others: Vec<Complex64> = (0..n)
            .filter(|&i| !group[i])
            .filter_map(|i| corrected[i])
            .collect();
        let mut out = corrected.clone();
        match self.local_resolve(active, &preds, &members, &others, p) {
            Some(found) => {
                for (m, z) in members.iter().zip(found) {
                    out[*m] = Some(z);
                }
            }
            None => {
                for &m in &members {
                    if problem[m] {
                        out[m] = None;
                    }
                }
            }
        }
        out
    }

    fn local_resolve(
        &self,
        active: &[Active],
        preds: &[Complex64],
        members: &[usize],
        others: &[Complex64],
        p: f64,
    ) -> Option<Vec<Complex64>> {
        let pts: Vec<Complex64> = members
            .iter()
            .flat_map(|&m| [preds[m], active[m].last().1])
            .collect();
        let (mut lo, mut hi) = (pts[0], pts[0]);
        for z in &pts {
            lo = Complex64::new(lo.re.min(z.re), lo.im.min(z.im));
            hi = Complex64::new(hi.re.max(z.re), hi.im.max(z.im));
        }
        let motion = members
            .iter()
            .map(|&m| (preds[m] - active[m].last().1).norm())
            .fold(0.0, f64::max);
        let centre = (lo + hi) * 0.5;
        let mut margin = (0.5 * (hi - lo).norm())
            .max(2.0 * motion)
            .max(1e-6 * scale(centre));
        let locator = RootLocator::new(
            self.family,
            p,
            ContourOptions {
                root_rel_tol: self.opts.root_rel_tol,
                ..ContourOptions::default()
            },
        );
        for attempt in 0..3 {
            // Slight asymmetry keeps successive contours off previous roots.
            let shift = Complex64::new(0.0137, 0.0071) * margin * attempt as f64;
            let rect = Rect::new(
                lo - Complex64::new(margin, margin) + shift,
                hi + Complex64::new(margin, margin) + shift,
            );
            if let Ok(roots) = locator.roots(rect) {
                let cands: Vec<Complex64> = roots
                    .into_iter()
                    .filter(|z| !others.iter().any(|w| same_root(*z, *w)))
                    .collect();
                if cands.len() >= members.len() {
                    let mp: Vec<Complex64> = members.iter().map(|&m| preds[m]).collect();
                    let assign = greedy_assign(&mp, &cands);
                    return assign.into_iter().map(|a| a.map(|j| cands[j])).collect();
                }
            }
            margin *= 1.6;
        }
        None
    }

    /// Advances all branches to `p`, halving the parameter step on failure.
    fn advance(&self, active: &mut [Active], p: f64, depth: usize) -> Vec<Option<Complex64>> {
        let result = self.try_step(active, p);
        if result.iter().all(Option::is_some) || depth >= self.opts.max_halvings {
            return result;
        }
        let p_prev = active[0].last().0;
        let mid = 0.5 * (p_prev + p);
        let mut trial: Vec<Active> = active.to_vec();
        let half = self.advance(&mut trial, mid, depth + 1);
        if half.iter().any(Option::is_none) {
            return merge(result, half);
        }
        for (a, z) in trial.iter_mut().zip(&half) {
            a.push(mid, z.unwrap());
        }
        let full = self.advance(&mut trial, p, depth + 1);
        if full.iter().all(Option::is_some) {
            for (a, t) in active.iter_mut().zip(trial) {
                a.hist = t.hist;
            }
        }
        full
    }

    fn refine_ep(
        &self,
        (pa, za1, za2): (f64, Complex64, Complex64),
        (pb, zb1, zb2): (f64, Complex64, Complex64),
    ) -> Result<ExceptionalPoint> {
        let da = (za1 - za2) * (za1 - za2);
        let db = (zb1 - zb2) * (zb1 - zb2);
        let t = if (da.re - db.re).abs() > 0.0 {
            (da.re / (da.re - db.re)).clamp(0.0, 1.0)
        } else {
            0.5
        };
        let p_seed = pa + t * (pb - pa);
        let z_seed = (za1 + za2) * 0.5 * (1.0 - t) + (zb1 + zb2) * 0.5 * t;
        let ep = find_double_root(
            self.family,
            Complex64::new(z_seed.re, 0.0),
            p_seed,
            self.opts.ep_tol,
        )?;
        let (plo, phi) = (pa.min(pb), pa.max(pb));
        let dp = phi - plo;
        let reach = 4.0
            * (za1 - za2)
                .norm()
                .max((zb1 - zb2).norm())
                .max(1e-6 * scale(z_seed));
        if ep.parameter < plo - dp
            || ep.parameter > phi + dp
            || (ep.eigenvalue - z_seed).norm() > reach
        {
            return Err(SpectralError::NoConvergence {
                iterations: 0,
                last: ep.eigenvalue,
                step: (ep.parameter - p_seed).abs(),
            });
        }
        Ok(ep)
    }
}

fn merge(a: Vec<Option<Complex64>>, b: Vec<Option<Complex64>>) -> Vec<Option<Complex64>> {
    a.into_iter()
        .zip(b)
        .map(|(x, y)| if y.is_none() { None } else { x })
        .collect()
}

fn is_conjugate_pair(a: Complex64, b: Complex64) -> bool {
    classify(a) == SegmentLabel::ComplexPair && (a - b.conj()).norm() <= 1e-6 * scale(a)
}

/// Follows each seed across `grid` by linear prediction and Newton
/// correction. Branches that cannot be continued are truncated and reported
/// as `BranchLost`; coinciding branches without a detected coalescence are
/// reported as `DuplicateRoot`. Exceptional points are located wherever a
/// pair of real eigenvalues turns into a conjugate pair (or back), or where
/// two roots nearly coincide.
pub fn track_branches<S: SpectralFunction + ?Sized>(
    family: &S,
    parameter_name: &str,
    grid: &[f64],
    seeds: &[Complex64],
    opts: &TrackOptions,
) -> Result<TrackResult> {
    if grid.is_empty() {
        return Err(SpectralError::InvalidParameter(
            "empty parameter grid".into(),
        ));
    }
    let increasing = grid.len() < 2 || grid[1] > grid[0];
    if grid
        .windows(2)
        .any(|w| (w[1] > w[0]) != increasing || w[1] == w[0])
    {
        return Err(SpectralError::InvalidParameter(
            "parameter grid must be strictly monotone".into(),
        ));
    }
    let tracker = Tracker {
        family,
        opts: *opts,
    };
    let p0 = grid[0];
    let mut diagnostics = Vec::new();

    let polished: Vec<Result<Complex64>> = seeds
        .par_iter()
        .map(|&z| newton(family, p0, z, tracker.tol(z), opts.max_iter).map(|r| r.root))
        .collect();
    let mut start: Vec<Complex64> = Vec::new();
    for (i, r) in polished.into_iter().enumerate() {
        match r {
            Ok(z) => start.push(z),
            Err(e) => diagnostics.push(SpectralError::BranchLost {
                branch_id: i,
                parameter: p0,
                reason: e.to_string(),
            }),
        }
    }
    super::contour::sort_spectrum(&mut start);
    let mut branches: Vec<SpectralBranch> = Vec::new();
    let mut active: Vec<Active> = Vec::new();
    for z in start {
        if let Some(b) = branches.iter().find(|b| same_root(b.points[0].1, z)) {
            diagnostics.push(SpectralError::DuplicateRoot {
                first: b.branch_id,
                second: branches.len(),
                root: z,
                parameter: p0,
            });
            continue;
        }
        let id = branches.len();
        branches.push(SpectralBranch {
            parameter_name: parameter_name.to_string(),
            points: vec![(p0, z)],
            segment_labels: vec![classify(z)],
            branch_id: id,
            partner_id: None,
        });
        active.push(Active {
            index: id,
            hist: vec![(p0, z)],
        });
    }
    update_partners(&mut branches, &active);

    let mut eps: Vec<ExceptionalPoint> = Vec::new();
    for &p in &grid[1..] {
        if active.is_empty() {
            break;
        }
        let before: Vec<(usize, Complex64)> =
            active.iter().map(|a| (a.index, a.last().1)).collect();
        let pa = active[0].last().0;
        let result = tracker.advance(&mut active, p, 0);

        let mut survivors = Vec::with_capacity(active.len());
        for (mut a, z) in active.drain(..).zip(result) {
            match z {
                Some(z) => {
                    a.push(p, z);
                    let b = &mut branches[a.index];
                    b.points.push((p, z));
                    b.segment_labels.push(classify(z));
                    survivors.push(a);
                }
                None => diagnostics.push(SpectralError::BranchLost {
                    branch_id: a.index,
                    parameter: p,
                    reason: "corrector diverged after step halving".into(),
                }),
            }
        }
        active = survivors;

        // Coinciding branches: a genuine coalescence only if the double-root
        // test confirms it, otherwise the later branch is truncated.
        let mut drop = vec![false; active.len()];
        for i in 0..active.len() {
            for k in 0..i {
                let (zi, zk) = (active[i].last().1, active[k].last().1);
                if drop[k] || !same_root(zi, zk) {
                    continue;
                }
                let jet = family.jet(zi, p, 2).ok();
                let confirmed = jet.is_some_and(|j| {
                    let (rf, rdf) = super::roots::double_root_residuals(&j);
                    rf.max(rdf) <= 1e-3 * scale(zi)
                });
                if !confirmed {
                    drop[i] = true;
                    diagnostics.push(SpectralError::DuplicateRoot {
                        first: active[k].index,
                        second: active[i].index,
                        root: zi,
                        parameter: p,
                    });
                }
            }
        }
        let mut k = 0;
        active.retain(|_| {
            k += 1;
            !drop[k - 1]
        });

        if opts.refine_exceptional_points {
            detect_exceptional_points(
                &tracker,
                &before,
                pa,
                &active,
                p,
                &mut eps,
                &mut diagnostics,
            );
        }
        update_partners(&mut branches, &active);
    }

    eps.sort_by(|a, b| {
        a.parameter
            .total_cmp(&b.parameter)
            .then(a.eigenvalue.re.total_cmp(&b.eigenvalue.re))
    });
    eps.dedup_by(|a, b| {
        (a.parameter - b.parameter).abs() <= 1e-7 * a.parameter.abs().max(1.0)
            && same_root(a.eigenvalue, b.eigenvalue)
    });
    Ok(TrackResult {
        branches,
        exceptional_points: eps,
        diagnostics,
    })
}

fn update_partners(branches: &mut [SpectralBranch], active: &[Active]) {
    for i in 0..active.len() {
        for k in 0..active.len() {
            if i != k && is_conjugate_pair(active[i].last().1, active[k].last().1) {
                branches[active[i].index].partner_id = Some(active[k].index);
            }
        }
    }
}

fn detect_exceptional_points<S: SpectralFunction + ?Sized>(
    tracker: &Tracker<'_, S>,
    before: &[(usize, Complex64)],
    pa: f64,
    active: &[Active],
    pb: f64,
    eps: &mut Vec<ExceptionalPoint>,
    diagnostics: &mut Vec<SpectralError>,
) {
    let prev = |id: usize| before.iter().find(|(i, _)| *i == id).map(|(_, z)| *z);
    let spacing = |i: usize, k: usize| -> f64 {
        let zi = active[i].last().1;
        active
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i && *j != k)
            .map(|(_, a)| (a.last().1 - zi).norm())
            .fold(f64::INFINITY, f64::min)
    };
    for i in 0..active.len() {
        for k in i + 1..active.len() {
            let (zi, zk) = (active[i].last().1, active[k].last().1);
            let (Some(yi), Some(yk)) = (prev(active[i].index), prev(active[k].index)) else {
                continue;
            };
            let now_pair = is_conjugate_pair(zi, zk);
            let was_pair = is_conjugate_pair(yi, yk);
            let now_real = classify(zi) == SegmentLabel::Real && classify(zk) == SegmentLabel::Real;
            let was_real = classify(yi) == SegmentLabel::Real && classify(yk) == SegmentLabel::Real;
            let sp = spacing(i, k);
            let close = sp.is_finite() && (zi - zk).norm() < tracker.opts.coalescence_factor * sp;
            if (was_real && now_pair) || (was_pair && now_real) || close {
                match tracker.refine_ep((pa, yi, yk), (pb, zi, zk)) {
                    Ok(ep) => eps.push(ep),
                    Err(e) => diagnostics.push(e),
                }
            }
        }
    }
}
