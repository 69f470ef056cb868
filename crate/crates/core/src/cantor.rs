//! Iterated quad-splitting of convex planar pieces: nested families of
//! `4^i` convex pieces, membership queries and complement domains.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::complexgrid::{build_domain, point_in_polygon, signed_area, Curve, DomainSpec, GridError, PlanarDomain};
use crate::C64;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum CantorError {
    #[error("gap fraction must lie in (0, 1), got {0}")]
    InvalidGamma(f64),
    #[error("piece {0} has no area")]
    DegeneratePiece(String),
    #[error("piece {0} is not a convex polygon")]
    NotConvex(String),
    #[error("depth must be at least 1")]
    ZeroDepth,
    #[error("level {0} not built")]
    LevelOutOfRange(usize),
    #[error("outer boundary does not strictly contain the root piece")]
    OuterDoesNotContainRoot,
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Convex polygon (counterclockwise) with its descent path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexPiece {
    pub polygon: Vec<C64>,
    /// Digits 1-4: bottom-left, top-left, bottom-right, top-right child.
    pub id: String,
    pub level: usize,
}

impl ConvexPiece {
    pub fn root(polygon: Vec<C64>) -> Result<Self, CantorError> {
        let mut polygon = polygon;
        if signed_area(&polygon) < 0.0 {
            polygon.reverse();
        }
        let p = Self {
            polygon,
            id: String::new(),
            level: 0,
        };
        if !(p.area() > 0.0) {
            return Err(CantorError::DegeneratePiece(p.id));
        }
        if !is_convex(&p.polygon) {
            return Err(CantorError::NotConvex(p.id));
        }
        Ok(p)
    }

    pub fn unit_square() -> Self {
        Self::rectangle(0.0, 0.0, 1.0, 1.0)
    }

    pub fn rectangle(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self {
            polygon: vec![
                C64::new(x0, y0),
                C64::new(x1, y0),
                C64::new(x1, y1),
                C64::new(x0, y1),
            ],
            id: String::new(),
            level: 0,
        }
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.polygon)
    }

    pub fn bbox(&self) -> (C64, C64) {
        bbox(&self.polygon)
    }

    pub fn diameter(&self) -> f64 {
        let p = &self.polygon;
        let mut d: f64 = 0.0;
        for i in 0..p.len() {
            for j in i + 1..p.len() {
                d = d.max((p[i] - p[j]).norm());
            }
        }
        d
    }

    pub fn centroid(&self) -> C64 {
        let p = &self.polygon;
        let mut acc = C64::new(0.0, 0.0);
        let mut a2 = 0.0;
        for i in 0..p.len() {
            let (u, v) = (p[i], p[(i + 1) % p.len()]);
            let c = u.re * v.im - v.re * u.im;
            acc += (u + v) * c;
            a2 += c;
        }
        acc / (3.0 * a2)
    }

    /// Closed containment.
    pub fn contains(&self, z: C64) -> bool {
        let p = &self.polygon;
        (0..p.len()).all(|i| {
            let (a, b) = (p[i], p[(i + 1) % p.len()]);
            cross(b - a, z - a) >= 0.0
        })
    }

    /// Strict containment with margin: every edge line at distance > `margin`.
    pub fn contains_strictly(&self, z: C64, margin: f64) -> bool {
        let p = &self.polygon;
        (0..p.len()).all(|i| {
            let (a, b) = (p[i], p[(i + 1) % p.len()]);
            cross(b - a, z - a) / (b - a).norm() > margin
        })
    }

    fn scaled_about_centroid(&self, s: f64) -> Vec<C64> {
        let c = self.centroid();
        self.polygon.iter().map(|&z| c + (z - c) * s).collect()
    }
}

/// Result of one quad split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadSplit {
    pub children: [ConvexPiece; 4],
    /// Vertical gap, then the horizontal gaps of the left and right halves.
    pub gaps: [Vec<C64>; 3],
}

/// Remove the vertical strip of width `γ·width` about the equal-width line,
/// then in each half the horizontal strip of height `γ·height` about its
/// equal-height line.
pub fn quad_split(piece: &ConvexPiece, gamma: f64) -> Result<QuadSplit, CantorError> {
    check_gamma(gamma)?;
    split_polygon(&piece.polygon, &piece.id, piece.level, gamma)
}

fn check_gamma(gamma: f64) -> Result<(), CantorError> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(CantorError::InvalidGamma(gamma));
    }
    Ok(())
}

fn split_polygon(poly: &[C64], id: &str, level: usize, gamma: f64) -> Result<QuadSplit, CantorError> {
    let (lo, hi) = bbox(poly);
    let w = hi.re - lo.re;
    if !(signed_area(poly) > 0.0) || !(w > 0.0) {
        return Err(CantorError::DegeneratePiece(id.to_string()));
    }
    let xm = 0.5 * (lo.re + hi.re);
    let (xl, xr) = (xm - 0.5 * gamma * w, xm + 0.5 * gamma * w);
    let left = clip(poly, |z| z.re, xl, true);
    let right = clip(poly, |z| z.re, xr, false);
    let gap_v = clip(&clip(poly, |z| z.re, xl, false), |z| z.re, xr, true);
    let mut children = Vec::with_capacity(4);
    let mut gaps = vec![gap_v];
    for (k, half) in [left, right].into_iter().enumerate() {
        let (hlo, hhi) = bbox(&half);
        let hgt = hhi.im - hlo.im;
        if !(hgt > 0.0) || !(signed_area(&half) > 0.0) {
            return Err(CantorError::DegeneratePiece(id.to_string()));
        }
        let ym = 0.5 * (hlo.im + hhi.im);
        let (yb, yt) = (ym - 0.5 * gamma * hgt, ym + 0.5 * gamma * hgt);
        let bottom = clip(&half, |z| z.im, yb, true);
        let top = clip(&half, |z| z.im, yt, false);
        gaps.push(clip(&clip(&half, |z| z.im, yb, false), |z| z.im, yt, true));
        for (m, p) in [bottom, top].into_iter().enumerate() {
            let cid = format!("{id}{}", 2 * k + m + 1);
            if p.len() < 3 || !(signed_area(&p) > 0.0) {
                return Err(CantorError::DegeneratePiece(cid));
            }
            children.push(ConvexPiece {
                polygon: p,
                id: cid,
                level: level + 1,
            });
        }
    }
    Ok(QuadSplit {
        children: children.try_into().unwrap(),
        gaps: gaps.try_into().unwrap(),
    })
}

/// Keep the part of a convex polygon with `coord(z) ≤ c` (`below`) or `≥ c`.
fn clip(poly: &[C64], coord: impl Fn(C64) -> f64, c: f64, below: bool) -> Vec<C64> {
    let inside = |z: C64| if below { coord(z) <= c } else { coord(z) >= c };
    let mut out: Vec<C64> = Vec::with_capacity(poly.len() + 2);
    for i in 0..poly.len() {
        let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
        let (ia, ib) = (inside(a), inside(b));
        if ia {
            out.push(a);
        }
        if ia != ib {
            let t = (c - coord(a)) / (coord(b) - coord(a));
            let mut p = a + (b - a) * t;
            // pin the cut coordinate exactly
            if coord(C64::new(1.0, 0.0)) == 1.0 {
                p.re = c;
            } else {
                p.im = c;
            }
            out.push(p);
        }
    }
    out.dedup_by(|a, b| (*a - *b).norm() == 0.0);
    if out.len() > 1 && out.first() == out.last() {
        out.pop();
    }
    out
}

/// Nested levels `X_1 ⊃ X_2 ⊃ …` of convex pieces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CantorTree {
    pub root: ConvexPiece,
    /// `levels[i]` holds the `4^(i+1)` pieces of level `i + 1`, in id order.
    pub levels: Vec<Vec<ConvexPiece>>,
    pub gamma: f64,
    pub depth: usize,
    /// Each parent is scaled about its centroid by this factor before the
    /// split, which keeps children strictly inside it.
    pub inset: f64,
}

/// Build the tree to `depth` levels. Each piece is first scaled about its
/// centroid by `1 − γ/2` and then quad split.
pub fn build_cantor_tree(root: &ConvexPiece, gamma: f64, depth: usize) -> Result<CantorTree, CantorError> {
    check_gamma(gamma)?;
    if depth == 0 {
        return Err(CantorError::ZeroDepth);
    }
    let root = ConvexPiece::root(root.polygon.clone())?;
    let inset = 1.0 - 0.5 * gamma;
    let mut levels: Vec<Vec<ConvexPiece>> = Vec::with_capacity(depth);
    let mut current = vec![root.clone()];
    for _ in 0..depth {
        let next: Vec<ConvexPiece> = current
            .par_iter()
            .map(|p| split_polygon(&p.scaled_about_centroid(inset), &p.id, p.level, gamma).map(|s| s.children))
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .flatten()
            .collect();
        levels.push(next.clone());
        current = next;
    }
    Ok(CantorTree {
        root,
        levels,
        gamma,
        depth,
        inset,
    })
}

/// Where a point sits relative to the tree.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Membership {
    /// In the level-`level` piece `id` and every ancestor.
    Contained { level: usize, id: String },
    /// In a piece at level `level − 1` but in none of its children, so in
    /// the complement `K_level` (level 0: outside the root).
    Escaped { level: usize },
}

impl CantorTree {
    pub fn level(&self, i: usize) -> Result<&[ConvexPiece], CantorError> {
        match i {
            0 => Ok(std::slice::from_ref(&self.root)),
            i if i <= self.depth => Ok(&self.levels[i - 1]),
            _ => Err(CantorError::LevelOutOfRange(i)),
        }
    }

    /// Index range of the children of `levels[i][k]` in `levels[i + 1]`.
    pub fn children_of(&self, k: usize) -> std::ops::Range<usize> {
        4 * k..4 * k + 4
    }

    pub fn membership(&self, z: C64) -> Membership {
        if !self.root.contains(z) {
            return Membership::Escaped { level: 0 };
        }
        let mut range = 0..4;
        let mut found = None;
        for lvl in 1..=self.depth {
            let pieces = &self.levels[lvl - 1];
            match range.clone().find(|&k| pieces[k].contains(z)) {
                Some(k) => {
                    found = Some(k);
                    range = self.children_of(k);
                }
                None => return Membership::Escaped { level: lvl },
            }
        }
        let k = found.expect("depth ≥ 1");
        Membership::Contained {
            level: self.depth,
            id: self.levels[self.depth - 1][k].id.clone(),
        }
    }

    pub fn max_diameter(&self, i: usize) -> Result<f64, CantorError> {
        Ok(self.level(i)?.iter().map(|p| p.diameter()).fold(0.0, f64::max))
    }

    /// Pairs of pieces at level `i` whose polygons intersect. Candidate pairs
    /// come from a sweep over bounding boxes, so no intersecting pair is missed.
    pub fn intersecting_pairs(&self, i: usize) -> Result<Vec<(usize, usize)>, CantorError> {
        let pieces = self.level(i)?;
        let boxes: Vec<(C64, C64)> = pieces.iter().map(|p| p.bbox()).collect();
        let mut order: Vec<usize> = (0..pieces.len()).collect();
        order.sort_by(|&a, &b| boxes[a].0.re.total_cmp(&boxes[b].0.re));
        let mut out = Vec::new();
        for (n, &a) in order.iter().enumerate() {
            for &b in &order[n + 1..] {
                if boxes[b].0.re > boxes[a].1.re {
                    break;
                }
                let y_overlap = boxes[a].0.im <= boxes[b].1.im && boxes[b].0.im <= boxes[a].1.im;
                if y_overlap && convex_intersect(&pieces[a].polygon, &pieces[b].polygon) {
                    out.push((a.min(b), a.max(b)));
                }
            }
        }
        out.sort_unstable();
        Ok(out)
    }

    /// Children at level `i + 1` not strictly inside their parent.
    pub fn nesting_violations(&self, i: usize) -> Result<Vec<usize>, CantorError> {
        let parents = self.level(i)?;
        let children = self.level(i + 1)?;
        Ok((0..children.len())
            .filter(|&c| {
                let parent = &parents[c / 4];
                !children[c].polygon.iter().all(|&z| parent.contains_strictly(z, 0.0))
            })
            .collect())
    }

    /// JSON document `{gamma, depth, levels: [[polygon, …], …]}` with level 0
    /// the root and polygons as `[[x, y], …]`.
    pub fn to_json(&self) -> serde_json::Value {
        let poly = |p: &ConvexPiece| -> Vec<[f64; 2]> { p.polygon.iter().map(|z| [z.re, z.im]).collect() };
        let mut levels = vec![vec![poly(&self.root)]];
        levels.extend(self.levels.iter().map(|l| l.iter().map(poly).collect::<Vec<_>>()));
        serde_json::json!({
            "gamma": self.gamma,
            "depth": self.depth,
            "inset": self.inset,
            "levels": levels,
        })
    }

    /// SVG drawing of one level over the root outline.
    pub fn to_svg(&self, i: usize, width_px: f64) -> Result<String, CantorError> {
        let pieces = self.level(i)?;
        let (lo, hi) = self.root.bbox();
        let scale = width_px / (hi.re - lo.re);
        let height_px = scale * (hi.im - lo.im);
        let pt = |z: &C64| format!("{:.4},{:.4}", (z.re - lo.re) * scale, (hi.im - z.im) * scale);
        let mut s = String::new();
        writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width_px}" height="{height_px}" viewBox="0 0 {width_px} {height_px}">"#
        )
        .unwrap();
        let root: Vec<String> = self.root.polygon.iter().map(pt).collect();
        writeln!(s, r##"<polygon points="{}" fill="none" stroke="#444" stroke-width="1"/>"##, root.join(" ")).unwrap();
        for p in pieces {
            let pts: Vec<String> = p.polygon.iter().map(pt).collect();
            writeln!(s, r##"<polygon points="{}" fill="#1f4e79" data-id="{}"/>"##, pts.join(" "), p.id).unwrap();
        }
        s.push_str("</svg>\n");
        Ok(s)
    }
}

/// Planar model of `K_j`: the region inside `outer` minus the open level-`j`
/// pieces (`j = 0`: minus the root). Boundaries of pieces at levels
/// `curve_levels` (each `< j`) are added as interior mesh curves.
pub fn complement_domain(
    tree: &CantorTree,
    j: usize,
    outer: &Curve,
    h: f64,
    curve_levels: &[usize],
) -> Result<PlanarDomain, CantorError> {
    let pieces = tree.level(j)?;
    let root_inside = tree.root.polygon.iter().all(|&z| outer.contains(z))
        && match outer {
            Curve::Polygon { points } => {
                tree.root.polygon.iter().all(|&z| point_in_polygon(z, points))
                    && points.iter().all(|&p| !tree.root.contains(p))
            }
            Curve::Circle { center, radius } => tree.root.polygon.iter().all(|&z| (z - center).norm() < *radius),
        };
    if !root_inside {
        return Err(CantorError::OuterDoesNotContainRoot);
    }
    let holes: Vec<Curve> = pieces.iter().map(|p| Curve::polygon(p.polygon.clone())).collect();
    let mut curves = Vec::new();
    for &lvl in curve_levels {
        if lvl >= j {
            return Err(CantorError::LevelOutOfRange(lvl));
        }
        curves.extend(tree.level(lvl)?.iter().map(|p| Curve::polygon(p.polygon.clone())));
    }
    let spec = DomainSpec {
        outer: outer.clone(),
        holes,
        curves,
        h,
    };
    Ok(build_domain(&spec)?)
}

fn cross(a: C64, b: C64) -> f64 {
    a.re * b.im - a.im * b.re
}

fn bbox(p: &[C64]) -> (C64, C64) {
    let mut lo = C64::new(f64::INFINITY, f64::INFINITY);
    let mut hi = C64::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for z in p {
        lo.re = lo.re.min(z.re);
        lo.im = lo.im.min(z.im);
        hi.re = hi.re.max(z.re);
        hi.im = hi.im.max(z.im);
    }
    (lo, hi)
}

fn is_convex(p: &[C64]) -> bool {
    let n = p.len();
    n >= 3
        && (0..n).all(|i| {
            let (a, b, c) = (p[i], p[(i + 1) % n], p[(i + 2) % n]);
            cross(b - a, c - b) >= 0.0
        })
}

/// Separating-axis test for closed convex polygons (touching counts as
/// intersecting).
pub fn convex_intersect(p: &[C64], q: &[C64]) -> bool {
    for poly in [p, q] {
        for i in 0..poly.len() {
            let e = poly[(i + 1) % poly.len()] - poly[i];
            let n = C64::new(-e.im, e.re);
            let proj = |s: &[C64]| {
                s.iter()
                    .map(|z| n.re * z.re + n.im * z.im)
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)))
            };
            let (a, b) = (proj(p), proj(q));
            if a.1 < b.0 || b.1 < a.0 {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rect_of(p: &ConvexPiece) -> (f64, f64, f64, f64) {
        let (lo, hi) = p.bbox();
        (lo.re, lo.im, hi.re, hi.im)
    }

    #[test]
    fn unit_square_half_gap() {
        let s = quad_split(&ConvexPiece::unit_square(), 0.5).unwrap();
        let want = [
            (0.0, 0.0, 0.25, 0.25),
            (0.0, 0.75, 0.25, 1.0),
            (0.75, 0.0, 1.0, 0.25),
            (0.75, 0.75, 1.0, 1.0),
        ];
        for (c, w) in s.children.iter().zip(want) {
            assert_eq!(rect_of(c), w);
            assert_eq!(c.polygon.len(), 4);
        }
        let ids: Vec<&str> = s.children.iter().map(|c| c.id.as_str()).collect();
        assert_eq!(ids, ["1", "2", "3", "4"]);
    }

    #[test]
    fn unit_square_fifth_gap() {
        let s = quad_split(&ConvexPiece::unit_square(), 0.2).unwrap();
        let area: f64 = s.children.iter().map(|c| c.area()).sum();
        for c in &s.children {
            let (x0, y0, x1, y1) = rect_of(c);
            assert!((x1 - x0 - 0.4).abs() < 1e-15 && (y1 - y0 - 0.4).abs() < 1e-15);
        }
        assert!((area - 0.64).abs() < 1e-14);
        let gaps: f64 = s.gaps.iter().map(|g| signed_area(g)).sum();
        assert!((area + gaps - 1.0).abs() < 1e-14);
    }

    #[test]
    fn small_gap_tiles_parent() {
        let tri = ConvexPiece::root(vec![C64::new(0.0, 0.0), C64::new(2.0, 0.0), C64::new(0.5, 1.5)]).unwrap();
        let s = quad_split(&tri, 1e-9).unwrap();
        let area: f64 = s.children.iter().map(|c| c.area()).sum();
        assert!((area - tri.area()).abs() < 1e-8);
    }

    #[test]
    fn bad_gamma() {
        let sq = ConvexPiece::unit_square();
        assert_eq!(quad_split(&sq, 1.0), Err(CantorError::InvalidGamma(1.0)));
        assert_eq!(quad_split(&sq, 1.5), Err(CantorError::InvalidGamma(1.5)));
        assert_eq!(build_cantor_tree(&sq, 0.2, 0), Err(CantorError::ZeroDepth));
    }

    #[test]
    fn level_counts_and_invariants() {
        let t = build_cantor_tree(&ConvexPiece::unit_square(), 0.2, 4).unwrap();
        for i in 1..=4 {
            assert_eq!(t.level(i).unwrap().len(), 4usize.pow(i as u32));
            assert!(t.intersecting_pairs(i).unwrap().is_empty());
            assert!(t.nesting_violations(i - 1).unwrap().is_empty());
            let bound = 2f64.sqrt() * 0.4f64.powi(i as i32);
            assert!(t.max_diameter(i).unwrap() <= bound);
        }
        assert_eq!(build_cantor_tree(&ConvexPiece::unit_square(), 0.7, 1).unwrap().levels[0].len(), 4);
    }

    #[test]
    fn membership_cases() {
        let t = build_cantor_tree(&ConvexPiece::unit_square(), 0.2, 5).unwrap();
        assert_eq!(t.membership(t.root.centroid()), Membership::Escaped { level: 1 });
        assert_eq!(t.membership(C64::new(1.5, 0.5)), Membership::Escaped { level: 0 });
        let deepest = &t.levels[4][0];
        assert_eq!(deepest.id, "11111");
        let z = deepest.polygon[0];
        assert_eq!(
            t.membership(z),
            Membership::Contained {
                level: 5,
                id: "11111".into()
            }
        );
    }

    #[test]
    fn general_convex_root() {
        let hex: Vec<C64> = (0..6).map(|k| C64::from_polar(1.0, k as f64 * std::f64::consts::PI / 3.0)).collect();
        let t = build_cantor_tree(&ConvexPiece::root(hex).unwrap(), 0.3, 3).unwrap();
        for i in 1..=3 {
            assert!(t.intersecting_pairs(i).unwrap().is_empty());
            assert!(t.nesting_violations(i - 1).unwrap().is_empty());
            assert!(t.level(i).unwrap().iter().all(|p| is_convex(&p.polygon)));
        }
    }

    #[test]
    fn complements() {
        let t = build_cantor_tree(&ConvexPiece::unit_square(), 0.2, 2).unwrap();
        let outer = Curve::circle(C64::new(0.5, 0.5), 1.2);
        let k0 = complement_domain(&t, 0, &outer, 0.1, &[]).unwrap();
        assert_eq!(k0.num_boundary_components(), 2);
        let k1 = complement_domain(&t, 1, &outer, 0.05, &[0]).unwrap();
        assert_eq!(k1.num_boundary_components(), 5);
        assert_eq!(k1.mesh.curve_loops.len(), 1);
        let tiny = Curve::circle(C64::new(0.5, 0.5), 0.6);
        assert_eq!(
            complement_domain(&t, 1, &tiny, 0.05, &[]),
            Err(CantorError::OuterDoesNotContainRoot)
        );
    }

    #[test]
    fn json_and_svg() {
        let t = build_cantor_tree(&ConvexPiece::unit_square(), 0.2, 2).unwrap();
        let j = t.to_json();
        assert_eq!(j["levels"][2].as_array().unwrap().len(), 16);
        assert_eq!(j["depth"], 2);
        let svg = t.to_svg(2, 400.0).unwrap();
        assert_eq!(svg.matches("<polygon").count(), 17);
    }

    #[test]
    fn sat_detects_overlap() {
        let a = ConvexPiece::rectangle(0.0, 0.0, 1.0, 1.0).polygon;
        let b = ConvexPiece::rectangle(0.5, 0.5, 2.0, 2.0).polygon;
        let c = ConvexPiece::rectangle(1.5, 0.0, 2.0, 0.4).polygon;
        assert!(convex_intersect(&a, &b));
        assert!(!convex_intersect(&a, &c));
    }

    proptest! {
        #[test]
        fn membership_monotone(x in -0.2..1.2f64, y in -0.2..1.2f64, g in 0.05..0.6f64) {
            let t = build_cantor_tree(&ConvexPiece::unit_square(), g, 3).unwrap();
            let z = C64::new(x, y);
            // number of levels (counting the root) that contain z
            let depth_in = match t.membership(z) {
                Membership::Contained { level, .. } => level + 1,
                Membership::Escaped { level } => level,
            };
            for lvl in 0..=t.depth {
                let any = t.level(lvl).unwrap().iter().any(|p| p.contains(z));
                prop_assert_eq!(any, lvl < depth_in);
            }
        }

        #[test]
        fn split_area_accounting(g in 0.01..0.95f64, w in 0.1..5.0f64, h in 0.1..5.0f64) {
            let s = quad_split(&ConvexPiece::rectangle(0.0, 0.0, w, h), g).unwrap();
            let kids: f64 = s.children.iter().map(|c| c.area()).sum();
            let gaps: f64 = s.gaps.iter().map(|q| signed_area(q)).sum();
            prop_assert!((kids + gaps - w * h).abs() < 1e-12 * w * h);
            prop_assert!((kids - w * h * (1.0 - g).powi(2)).abs() < 1e-12 * w * h);
        }
    }
}
