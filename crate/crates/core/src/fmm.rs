//! Adaptive quadtree fast multipole method for `conj V = q / (2 pi (z - z_v))`
//! sums, with curved panels entering through their outgoing expansions.
//!
//! Expansions are stored scaled by the cell radius `rho` (half the box
//! diagonal): a cell multipole is `conj V = 1/(2 pi) sum F_n rho^{n-1} / (z - c)^n`
//! and a local expansion is `conj V = 1/(2 pi) sum G_m ((z - c)/rho)^m`.
//! Cells interact through their expansions when
//! `|c_A - c_B| >= kappa (rho_A + r_B)`, with `r_B` the radius of the sources
//! actually held by `B` (panels may reach out of their box). The default
//! `kappa = sqrt 2` accepts equal point-only boxes exactly when one box lies
//! between them.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};
use crate::eval::{outgoing_coefficients, PanelEvaluator};
use crate::flux::{flux_from_local, flux_from_point, flux_panel_to_panel, LocalExpansion};
use crate::panel::Panel;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

pub const DEFAULT_LEAF_CAPACITY: usize = 35;
pub const DEFAULT_MAX_DEPTH: usize = 40;
/// Limit on recursive halving of one panel during placement.
const MAX_PANEL_SPLITS: usize = 10;

/// Point source/vortex: `conj V = strength / (2 pi (z - position))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointBody {
    pub position: Complex64,
    pub strength: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FmmConfig {
    pub tolerance: f64,
    pub leaf_capacity: usize,
    pub max_depth: usize,
    /// Separation factor `kappa` of the acceptance test.
    pub separation: f64,
}

impl FmmConfig {
    pub fn new(tolerance: f64) -> Self {
        Self { tolerance, leaf_capacity: DEFAULT_LEAF_CAPACITY, max_depth: DEFAULT_MAX_DEPTH, separation: SQRT_2 }
    }
}

/// Expansion terms for tolerance `eps`: `ceil(log2(1/eps)) + 3`.
pub fn fmm_order(eps: f64) -> usize {
    (-eps.log2()).ceil().max(1.0) as usize + 3
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FmmStats {
    pub cells: usize,
    pub leaves: usize,
    pub max_leaf_points: usize,
    pub panel_pieces: usize,
    pub m2l: usize,
    pub near_pairs: usize,
    /// Evaluations that fell back to direct summation.
    pub direct_fallbacks: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Group {
    /// Bodies attached to the cell itself.
    Own(usize),
    /// Everything in the cell's subtree.
    Full(usize),
}

#[derive(Debug, Clone)]
struct Cell {
    center: Complex64,
    half: f64,
    children: Vec<usize>,
    points: Vec<usize>,
    panels: Vec<usize>,
    own_radius: f64,
    full_radius: f64,
    full_count: usize,
    own_mp: Vec<Complex64>,
    full_mp: Vec<Complex64>,
    local: Vec<Complex64>,
    m2l: Vec<Group>,
    near: Vec<usize>,
}

impl Cell {
    fn new(center: Complex64, half: f64) -> Self {
        Self {
            center,
            half,
            children: Vec::new(),
            points: Vec::new(),
            panels: Vec::new(),
            own_radius: 0.0,
            full_radius: 0.0,
            full_count: 0,
            own_mp: Vec::new(),
            full_mp: Vec::new(),
            local: Vec::new(),
            m2l: Vec::new(),
            near: Vec::new(),
        }
    }

    fn rho(&self) -> f64 {
        self.half * SQRT_2
    }

    fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    fn own_count(&self) -> usize {
        self.points.len() + self.panels.len()
    }

    fn contains(&self, z: Complex64) -> bool {
        (z.re - self.center.re).abs() <= self.half && (z.im - self.center.im).abs() <= self.half
    }

    fn quadrant(&self, z: Complex64) -> usize {
        usize::from(z.re >= self.center.re) + 2 * usize::from(z.im >= self.center.im)
    }
}

/// Built and fully translated tree.
#[derive(Debug, Clone)]
pub struct FmmTree {
    cells: Vec<Cell>,
    points: Vec<PointBody>,
    pieces: Vec<PanelEvaluator>,
    /// Index of the input panel each piece came from.
    pub piece_origin: Vec<usize>,
    order: usize,
    binom: Vec<Vec<f64>>,
    /// `C(k + m - 1, m)` at `[m * order + k - 1]`.
    binom_m2l: Vec<f64>,
    pub config: FmmConfig,
    pub stats: FmmStats,
}

fn binomials(n: usize) -> Vec<Vec<f64>> {
    let mut b = vec![vec![0.0; n + 1]; n + 1];
    for i in 0..=n {
        b[i][0] = 1.0;
        for j in 1..=i {
            b[i][j] = b[i - 1][j - 1] + if j < i { b[i - 1][j] } else { 0.0 };
        }
    }
    b
}

fn powers(x: Complex64, n: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut p = Complex64::new(1.0, 0.0);
    for _ in 0..=n {
        out.push(p);
        p *= x;
    }
    out
}

pub fn build_tree(points: &[PointBody], panels: &[Panel], config: FmmConfig) -> Result<FmmTree> {
    if !(config.tolerance > 0.0 && config.tolerance < 1.0) || config.leaf_capacity == 0 || !(config.separation > 1.0) {
        return Err(Error::InvalidInput("FMM needs tolerance in (0, 1), positive leaf capacity and separation above 1".into()));
    }
    if points.iter().any(|p| !p.position.is_finite() || !p.strength.is_finite()) {
        return Err(Error::InvalidInput("non-finite point body".into()));
    }
    let order = fmm_order(config.tolerance);
    let circles: Vec<(Complex64, f64)> = panels.iter().map(|p| p.bounding_circle()).collect();

    // root square
    let (mut lo, mut hi) = (Complex64::new(f64::INFINITY, f64::INFINITY), Complex64::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
    let mut grow = |z: Complex64, r: f64| {
        lo = Complex64::new(lo.re.min(z.re - r), lo.im.min(z.im - r));
        hi = Complex64::new(hi.re.max(z.re + r), hi.im.max(z.im + r));
    };
    points.iter().for_each(|p| grow(p.position, 0.0));
    circles.iter().for_each(|&(c, r)| grow(c, r));
    let (center, half) = if lo.re.is_finite() {
        let side = (hi.re - lo.re).max(hi.im - lo.im);
        let scale = hi.norm().max(lo.norm()).max(1e-300);
        let half = if side > 0.0 { 0.5 * side * (1.0 + 1e-12) + 1e-15 * scale } else { 0.5 * scale.max(1.0) };
        ((lo + hi) * 0.5, half)
    } else {
        (ZERO, 1.0)
    };

    let mut cells = vec![Cell::new(center, half)];
    // subdivision by point positions and panel centres
    let mut stack: Vec<(usize, Vec<usize>, Vec<usize>, usize)> =
        vec![(0, (0..points.len()).collect(), (0..panels.len()).collect(), 0)];
    while let Some((id, pts, pans, depth)) = stack.pop() {
        if pts.len() + pans.len() <= config.leaf_capacity {
            cells[id].points = pts;
            continue;
        }
        if depth >= config.max_depth {
            return Err(Error::Geometry(format!(
                "quadtree depth limit {} reached with {} bodies in one cell (coincident points?)",
                config.max_depth,
                pts.len() + pans.len()
            )));
        }
        let (c, h) = (cells[id].center, cells[id].half * 0.5);
        let first = cells.len();
        for q in 0..4 {
            let off = Complex64::new(if q & 1 == 1 { h } else { -h }, if q & 2 == 2 { h } else { -h });
            cells.push(Cell::new(c + off, h));
        }
        cells[id].children = (first..first + 4).collect();
        let mut split_pts = vec![Vec::new(); 4];
        let mut split_pans = vec![Vec::new(); 4];
        for i in pts {
            split_pts[cells[id].quadrant(points[i].position)].push(i);
        }
        for i in pans {
            split_pans[cells[id].quadrant(circles[i].0)].push(i);
        }
        for (q, (p, s)) in split_pts.into_iter().zip(split_pans).enumerate().rev() {
            stack.push((first + q, p, s, depth + 1));
        }
    }

    // panel placement, splitting pieces that only fit a non-leaf cell
    let mut pieces = Vec::new();
    let mut piece_origin = Vec::new();
    let mut work: Vec<(Panel, usize, usize)> = panels.iter().cloned().enumerate().map(|(i, p)| (p, i, 0)).rev().collect();
    while let Some((piece, origin, splits)) = work.pop() {
        let (pc, pr) = piece.bounding_circle();
        let mut id = 0;
        while !cells[id].is_leaf() {
            let child = cells[id].children[cells[id].quadrant(pc)];
            if cells[child].half < pr {
                break;
            }
            id = child;
        }
        if cells[id].is_leaf() || splits >= MAX_PANEL_SPLITS {
            cells[id].panels.push(pieces.len());
            pieces.push(PanelEvaluator::new(piece, config.tolerance)?);
            piece_origin.push(origin);
        } else {
            for half_piece in piece.split_uniform(2).into_iter().rev() {
                work.push((half_piece, origin, splits + 1));
            }
        }
    }

    let binom = binomials(2 * order + 2);
    let mut tree = FmmTree {
        cells,
        points: points.to_vec(),
        pieces,
        piece_origin,
        order,
        binom_m2l: (0..=order).flat_map(|m| (1..=order).map(move |k| (m, k))).map(|(m, k)| binom[k + m - 1][m]).collect(),
        binom,
        config,
        stats: FmmStats::default(),
    };
    tree.upward();
    tree.interactions();
    tree.downward();
    let leaves: Vec<&Cell> = tree.cells.iter().filter(|c| c.is_leaf()).collect();
    tree.stats.cells = tree.cells.len();
    tree.stats.leaves = leaves.len();
    tree.stats.max_leaf_points = leaves.iter().map(|c| c.points.len()).max().unwrap_or(0);
    tree.stats.panel_pieces = tree.pieces.len();
    Ok(tree)
}

impl FmmTree {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn point_count(&self) -> usize {
        self.points.len()
    }

    pub fn pieces(&self) -> impl Iterator<Item = &Panel> {
        self.pieces.iter().map(|e| &e.panel)
    }

    fn own_multipole(&self, id: usize) -> (Vec<Complex64>, f64) {
        let cell = &self.cells[id];
        let (c, rho, p) = (cell.center, cell.rho(), self.order);
        let mut mp = vec![ZERO; p];
        let mut radius = 0.0f64;
        for &i in &cell.points {
            let b = self.points[i];
            let x = (b.position - c) / rho;
            radius = radius.max((b.position - c).norm());
            let mut xp = b.strength;
            for m in mp.iter_mut() {
                *m += xp;
                xp *= x;
            }
        }
        for &k in &cell.panels {
            let panel = &self.pieces[k].panel;
            let (pc, pr) = panel.bounding_circle();
            radius = radius.max((pc - c).norm() + pr);
            let mut scale = 1.0;
            for (m, f) in mp.iter_mut().zip(outgoing_coefficients(panel, c, p)) {
                *m += f / scale;
                scale *= rho;
            }
        }
        (mp, radius)
    }

    fn upward(&mut self) {
        let own: Vec<(Vec<Complex64>, f64)> = (0..self.cells.len()).into_par_iter().map(|id| self.own_multipole(id)).collect();
        for (cell, (mp, r)) in self.cells.iter_mut().zip(own) {
            cell.own_mp = mp;
            cell.own_radius = r;
        }
        // children always come after their parent
        for id in (0..self.cells.len()).rev() {
            let mut full = self.cells[id].own_mp.clone();
            let mut radius = self.cells[id].own_radius;
            let mut count = self.cells[id].own_count();
            let (c0, rho0) = (self.cells[id].center, self.cells[id].rho());
            for &ch in &self.cells[id].children {
                let child = &self.cells[ch];
                if child.full_count == 0 {
                    continue;
                }
                count += child.full_count;
                radius = radius.max((child.center - c0).norm() + child.full_radius);
                self.m2m(&child.full_mp, child.center, child.rho(), c0, rho0, &mut full);
            }
            let cell = &mut self.cells[id];
            cell.full_mp = full;
            cell.full_radius = radius;
            cell.full_count = count;
        }
    }

    fn m2m(&self, src: &[Complex64], c1: Complex64, rho1: f64, c0: Complex64, rho0: f64, out: &mut [Complex64]) {
        let p = self.order;
        let dp = powers((c1 - c0) / rho0, p);
        let rp = powers(Complex64::new(rho1 / rho0, 0.0), p);
        for n in 1..=p {
            let mut s = ZERO;
            for k in 1..=n {
                s += src[k - 1] * rp[k - 1] * dp[n - k] * self.binom[n - 1][k - 1];
            }
            out[n - 1] += s;
        }
    }

    fn m2l(&self, src: &[Complex64], cb: Complex64, rho_b: f64, ca: Complex64, rho_a: f64, out: &mut [Complex64]) {
        let p = self.order;
        let d = cb - ca;
        let inv = 1.0 / d;
        let ratio_b = inv * rho_b;
        let mut scale = -Complex64::new(1.0, 0.0);
        let h: Vec<Complex64> = src[..p]
            .iter()
            .map(|&f| {
                let t = f * scale;
                scale *= -ratio_b;
                t
            })
            .collect();
        let ratio_a = inv * rho_a;
        let mut ap = inv;
        for (m, o) in out.iter_mut().enumerate().take(p + 1) {
            let row = &self.binom_m2l[m * p..(m + 1) * p];
            let mut s = ZERO;
            for (c, hk) in row.iter().zip(&h) {
                s += hk * *c;
            }
            *o += s * ap;
            ap *= ratio_a;
        }
    }

    fn l2l(&self, src: &[Complex64], c0: Complex64, rho0: f64, c1: Complex64, rho1: f64, out: &mut [Complex64]) {
        let p = self.order;
        let ep = powers((c1 - c0) / rho0, p);
        let rp = powers(Complex64::new(rho1 / rho0, 0.0), p);
        for j in 0..=p {
            let mut s = ZERO;
            for m in j..=p {
                s += src[m] * self.binom[m][j] * ep[m - j];
            }
            out[j] += s * rp[j];
        }
    }

    fn separated(&self, a: usize, center: Complex64, radius: f64) -> bool {
        let ca = &self.cells[a];
        (ca.center - center).norm() >= self.config.separation * (ca.rho() + radius)
    }

    fn interactions(&mut self) {
        let mut m2l: Vec<Vec<Group>> = vec![Vec::new(); self.cells.len()];
        let mut near: Vec<Vec<usize>> = vec![Vec::new(); self.cells.len()];
        self.interact(0, 0, &mut m2l, &mut near);
        self.stats.m2l = m2l.iter().map(Vec::len).sum();
        self.stats.near_pairs = near.iter().map(Vec::len).sum();
        for (cell, (m, n)) in self.cells.iter_mut().zip(m2l.into_iter().zip(near)) {
            cell.m2l = m;
            cell.near = n;
        }
    }

    fn interact(&self, a: usize, b: usize, m2l: &mut [Vec<Group>], near: &mut [Vec<usize>]) {
        let cb = &self.cells[b];
        if cb.full_count == 0 {
            return;
        }
        if self.separated(a, cb.center, cb.full_radius) {
            m2l[a].push(Group::Full(b));
            return;
        }
        let ca = &self.cells[a];
        if cb.is_leaf() && ca.is_leaf() {
            near[a].push(b);
            return;
        }
        if ca.is_leaf() || (!cb.is_leaf() && cb.half >= ca.half) {
            if cb.own_count() > 0 {
                self.interact_own(a, b, m2l, near);
            }
            for &ch in &cb.children {
                self.interact(a, ch, m2l, near);
            }
        } else {
            for &ch in &ca.children {
                self.interact(ch, b, m2l, near);
            }
        }
    }

    fn interact_own(&self, a: usize, b: usize, m2l: &mut [Vec<Group>], near: &mut [Vec<usize>]) {
        let cb = &self.cells[b];
        if self.separated(a, cb.center, cb.own_radius) {
            m2l[a].push(Group::Own(b));
        } else if self.cells[a].is_leaf() {
            near[a].push(b);
        } else {
            for &ch in &self.cells[a].children {
                self.interact_own(ch, b, m2l, near);
            }
        }
    }

    fn downward(&mut self) {
        let p = self.order;
        let locals: Vec<Vec<Complex64>> = (0..self.cells.len())
            .into_par_iter()
            .map(|a| {
                let ca = &self.cells[a];
                let mut loc = vec![ZERO; p + 1];
                for g in &ca.m2l {
                    let (id, mp) = match *g {
                        Group::Own(id) => (id, &self.cells[id].own_mp),
                        Group::Full(id) => (id, &self.cells[id].full_mp),
                    };
                    let cb = &self.cells[id];
                    self.m2l(mp, cb.center, cb.rho(), ca.center, ca.rho(), &mut loc);
                }
                loc
            })
            .collect();
        for (cell, loc) in self.cells.iter_mut().zip(locals) {
            cell.local = loc;
        }
        for id in 0..self.cells.len() {
            let children = self.cells[id].children.clone();
            for ch in children {
                let mut loc = std::mem::take(&mut self.cells[ch].local);
                let (parent, child) = (&self.cells[id], &self.cells[ch]);
                self.l2l(&parent.local, parent.center, parent.rho(), child.center, child.rho(), &mut loc);
                self.cells[ch].local = loc;
            }
        }
    }

    fn leaf_of(&self, z: Complex64) -> Option<usize> {
        if !self.cells[0].contains(z) {
            return None;
        }
        let mut id = 0;
        while !self.cells[id].is_leaf() {
            id = self.cells[id].children[self.cells[id].quadrant(z)];
        }
        Some(id)
    }

    fn eval_local(&self, id: usize, z: Complex64) -> Complex64 {
        let cell = &self.cells[id];
        let x = (z - cell.center) / cell.rho();
        cell.local.iter().rev().fold(ZERO, |acc, &g| acc * x + g) / (2.0 * PI)
    }

    fn eval_multipole(&self, id: usize, mp: &[Complex64], z: Complex64) -> Complex64 {
        let cell = &self.cells[id];
        let d = z - cell.center;
        let x = cell.rho() / d;
        mp.iter().rev().fold(ZERO, |acc, &f| acc * x + f) / (2.0 * PI * d)
    }

    /// Targets closer than this to a point body are singular.
    fn singular_radius(&self) -> f64 {
        1e-14 * (self.cells[0].center.norm() + self.cells[0].rho())
    }

    fn point_velocity(&self, i: usize, z: Complex64) -> Result<Complex64> {
        let b = self.points[i];
        let d = z - b.position;
        let limit = self.singular_radius();
        if d.norm() <= limit {
            return Err(Error::NearSingularity { distance: d.norm(), limit });
        }
        Ok(b.strength / (2.0 * PI * d))
    }

    fn own_direct(&self, id: usize, z: Complex64, skip: Option<usize>) -> Result<Complex64> {
        let cell = &self.cells[id];
        let limit = self.singular_radius();
        let mut v = ZERO;
        for &i in &cell.points {
            if Some(i) == skip {
                continue;
            }
            let b = &self.points[i];
            let d = z - b.position;
            let r2 = d.norm_sqr();
            if r2 <= limit * limit {
                return Err(Error::NearSingularity { distance: r2.sqrt(), limit });
            }
            v += b.strength * d.conj() / r2;
        }
        v /= 2.0 * PI;
        for &k in &cell.panels {
            v += self.pieces[k].velocity(z)?;
        }
        Ok(v)
    }

    /// Barnes-Hut style evaluation for targets outside the root box.
    fn eval_outside(&self, z: Complex64) -> Result<Complex64> {
        let mut v = ZERO;
        let mut stack = vec![0];
        while let Some(id) = stack.pop() {
            let cell = &self.cells[id];
            if cell.full_count == 0 {
                continue;
            }
            if (z - cell.center).norm() >= 2.0 * cell.full_radius.max(cell.rho()) {
                v += self.eval_multipole(id, &cell.full_mp, z);
                continue;
            }
            if cell.own_count() > 0 {
                v += self.own_direct(id, z, None)?;
            }
            stack.extend(cell.children.iter().rev());
        }
        Ok(v)
    }

    fn velocity_at(&self, z: Complex64, skip: Option<usize>) -> Result<Complex64> {
        match self.leaf_of(z) {
            None => self.eval_outside(z),
            Some(leaf) => {
                let mut v = self.eval_local(leaf, z);
                for &b in &self.cells[leaf].near {
                    v += self.own_direct(b, z, skip)?;
                }
                Ok(v)
            }
        }
    }

    /// `conj V` at arbitrary targets.
    pub fn evaluate_targets(&self, targets: &[Complex64]) -> Result<Vec<Complex64>> {
        targets.par_iter().map(|&z| self.velocity_at(z, None)).collect()
    }

    /// `conj V` at every point body, leaving out its own contribution.
    pub fn evaluate_points(&self) -> Result<Vec<Complex64>> {
        (0..self.points.len()).into_par_iter().map(|i| self.velocity_at(self.points[i].position, Some(i))).collect()
    }

    /// Plain `O(n)` sum over all bodies at `z`.
    pub fn direct_velocity(&self, z: Complex64) -> Result<Complex64> {
        let mut v = ZERO;
        for i in 0..self.points.len() {
            v += self.point_velocity(i, z)?;
        }
        for e in &self.pieces {
            v += e.velocity(z)?;
        }
        Ok(v)
    }

    fn subtree(&self, id: usize, out: &mut BTreeSet<usize>) {
        let mut stack = vec![id];
        while let Some(c) = stack.pop() {
            out.insert(c);
            stack.extend(&self.cells[c].children);
        }
    }

    /// Cells whose own bodies are not represented in the local expansion of `a`.
    fn complement(&self, a: usize) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        let mut stack = vec![a];
        while let Some(d) = stack.pop() {
            let cell = &self.cells[d];
            if d != a {
                for g in &cell.m2l {
                    match *g {
                        Group::Own(id) => {
                            out.insert(id);
                        }
                        Group::Full(id) => self.subtree(id, &mut out),
                    }
                }
            }
            out.extend(&cell.near);
            stack.extend(&cell.children);
        }
        out
    }

    fn own_flux(&self, id: usize, target: &Panel) -> Result<Complex64> {
        let cell = &self.cells[id];
        let mut g = ZERO;
        for &i in &cell.points {
            g += flux_from_point(self.points[i].strength, self.points[i].position, target)?;
        }
        for &k in &cell.panels {
            g += flux_panel_to_panel(&self.pieces[k].panel, target)?;
        }
        Ok(g)
    }

    /// Direct flux from every body through `target`.
    pub fn direct_flux(&self, target: &Panel) -> Result<Complex64> {
        (0..self.cells.len()).try_fold(ZERO, |acc, id| Ok(acc + self.own_flux(id, target)?))
    }

    fn panel_flux(&self, target: &Panel, fallbacks: &std::sync::atomic::AtomicUsize) -> Result<Complex64> {
        let (z1, z2) = (target.start_point(), target.end_point());
        if !(self.cells[0].contains(z1) && self.cells[0].contains(z2)) {
            fallbacks.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
            return self.direct_flux(target);
        }
        let mut a = 0;
        while !self.cells[a].is_leaf() {
            let ch = self.cells[a].children[self.cells[a].quadrant(z1)];
            if !self.cells[ch].contains(z2) {
                break;
            }
            a = ch;
        }
        let cell = &self.cells[a];
        let rho = cell.rho();
        let mut scale = 2.0 * PI;
        let coeffs = cell
            .local
            .iter()
            .map(|&g| {
                let p = g / scale;
                scale *= rho;
                p
            })
            .collect();
        let exp = LocalExpansion { center: cell.center, coeffs, radius: rho * (1.0 + 1e-12) };
        let far = match flux_from_local(&exp, z1, z2) {
            Ok(g) => g,
            Err(_) => {
                fallbacks.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                return self.direct_flux(target);
            }
        };
        self.complement(a).into_iter().try_fold(far, |acc, id| Ok(acc + self.own_flux(id, target)?))
    }

    /// Complex flow `G` through each target panel (see [`crate::flux`]).
    pub fn evaluate_panel_fluxes(&self, targets: &[Panel]) -> Result<(Vec<Complex64>, usize)> {
        let fallbacks = std::sync::atomic::AtomicUsize::new(0);
        let out = targets.par_iter().map(|t| self.panel_flux(t, &fallbacks)).collect::<Result<Vec<_>>>()?;
        Ok((out, fallbacks.into_inner()))
    }
}
