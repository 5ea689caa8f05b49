//! Paths in the x-plane: line segments, circular arcs and lasso loops.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::systems::NumericSystem;
use crate::Complex64;

/// A piece of path, parameterized by arclength.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum Segment {
    Line {
        from: Complex64,
        to: Complex64,
    },
    /// `center + radius e^{i (start + s sweep / |sweep|)}`; `sweep > 0` is
    /// counterclockwise.
    Arc {
        center: Complex64,
        radius: f64,
        start: f64,
        sweep: f64,
    },
}

impl Segment {
    pub fn line(from: Complex64, to: Complex64) -> Self {
        Segment::Line { from, to }
    }

    /// Full positive circle around `center` starting (and ending) at `at`.
    pub fn circle_through(center: Complex64, at: Complex64) -> Self {
        let d = at - center;
        Segment::Arc {
            center,
            radius: d.norm(),
            start: d.arg(),
            sweep: TAU,
        }
    }

    pub fn length(&self) -> f64 {
        match *self {
            Segment::Line { from, to } => (to - from).norm(),
            Segment::Arc { radius, sweep, .. } => radius * sweep.abs(),
        }
    }

    /// Point at arclength `s`.
    pub fn point(&self, s: f64) -> Complex64 {
        match *self {
            Segment::Line { from, to } => {
                let l = (to - from).norm();
                if l == 0.0 {
                    from
                } else {
                    from + (to - from) * (s / l)
                }
            }
            Segment::Arc {
                center,
                radius,
                start,
                sweep,
            } => center + Complex64::from_polar(radius, start + sweep.signum() * s / radius),
        }
    }

    /// Unit tangent `dx/ds`.
    pub fn tangent(&self, s: f64) -> Complex64 {
        match *self {
            Segment::Line { from, to } => {
                let d = to - from;
                if d.norm() == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    d / d.norm()
                }
            }
            Segment::Arc {
                radius,
                start,
                sweep,
                ..
            } => {
                let sg = sweep.signum();
                Complex64::from_polar(1.0, start + sg * s / radius) * Complex64::new(0.0, sg)
            }
        }
    }

    pub fn start(&self) -> Complex64 {
        self.point(0.0)
    }

    pub fn end(&self) -> Complex64 {
        self.point(self.length())
    }

    /// Distance from `p` to the nearest point of the segment.
    pub fn distance_to(&self, p: Complex64) -> f64 {
        match *self {
            Segment::Line { from, to } => {
                let d = to - from;
                let l2 = d.norm_sqr();
                if l2 == 0.0 {
                    return (p - from).norm();
                }
                let s = ((p - from) * d.conj()).re / l2;
                (p - (from + d * s.clamp(0.0, 1.0))).norm()
            }
            Segment::Arc {
                center,
                radius,
                start,
                sweep,
            } => {
                let v = p - center;
                if v.norm() == 0.0 {
                    return radius;
                }
                if sweep.abs() >= TAU {
                    return (v.norm() - radius).abs();
                }
                // angle of p measured from the start in the sweep direction
                let rel = (sweep.signum() * (v.arg() - start)).rem_euclid(TAU);
                if rel <= sweep.abs() {
                    (v.norm() - radius).abs()
                } else {
                    (p - self.start()).norm().min((p - self.end()).norm())
                }
            }
        }
    }
}

/// Smallest distance from any point of `path` to pole `j` of `ns`, as
/// `(distance, j)`.
pub fn path_clearance(ns: &NumericSystem, path: &[Segment]) -> Option<(f64, usize)> {
    let poles = ns.pole_locations();
    let mut best: Option<(f64, usize)> = None;
    for seg in path {
        for (j, a) in poles.iter().enumerate() {
            let d = seg.distance_to(*a);
            if best.is_none_or(|(b, _)| d < b) {
                best = Some((d, j));
            }
        }
    }
    best
}

/// How products of loops are read.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Composition {
    /// `gamma . delta` traverses `delta` first: `M_{gamma delta} = M_gamma M_delta`.
    #[default]
    RightFirst,
    /// `gamma . delta` traverses `gamma` first: `M_{gamma delta} = M_delta M_gamma`.
    LeftFirst,
}

/// One lasso: a polyline from the base point to a circle around `pole`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopSpec {
    pub pole: usize,
    /// Intermediate points; the last one is where the circle starts. Empty
    /// means a straight approach to a circle of the default radius.
    #[serde(default)]
    pub waypoints: Vec<Complex64>,
}

/// Base point and one loop per singularity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathPlan {
    pub base: Complex64,
    pub loops: Vec<LoopSpec>,
    /// Required distance from the path to every pole; by default half of the
    /// smallest circle radius.
    #[serde(default)]
    pub clearance: Option<f64>,
    #[serde(default)]
    pub composition: Composition,
}

/// A lasso made concrete at one parameter point.
#[derive(Clone, Debug, PartialEq)]
pub struct Lasso {
    pub pole: usize,
    pub approach: Vec<Segment>,
    pub circle: Segment,
}

impl Lasso {
    /// Approach, circle and the approach reversed.
    pub fn segments(&self) -> Vec<Segment> {
        let mut out = self.approach.clone();
        out.push(self.circle);
        for s in self.approach.iter().rev() {
            out.push(Segment::line(s.end(), s.start()));
        }
        out
    }
}

/// Base point below the poles, one unit further than their spread.
pub fn default_base(poles: &[Complex64]) -> Complex64 {
    if poles.is_empty() {
        return Complex64::new(0.0, 0.0);
    }
    let c = poles.iter().sum::<Complex64>() / poles.len() as f64;
    let spread = poles.iter().map(|a| (a - c).norm()).fold(0.0, f64::max);
    c - Complex64::new(0.0, spread + 1.0)
}

/// Pole indices ordered by decreasing argument as seen from `base`, starting
/// after the widest angular gap (reversed for [`Composition::LeftFirst`]).
/// With this order the product of the loops is the big positive loop.
pub fn loop_order(base: Complex64, poles: &[Complex64], composition: Composition) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..poles.len()).collect();
    let ang: Vec<f64> = poles.iter().map(|a| (a - base).arg()).collect();
    idx.sort_by(|&i, &j| ang[j].total_cmp(&ang[i]));
    if idx.len() > 1 {
        let k = idx.len();
        let mut widest = (ang[idx[k - 1]] + TAU - ang[idx[0]], 0);
        for m in 0..k - 1 {
            let gap = ang[idx[m]] - ang[idx[m + 1]];
            if gap > widest.0 {
                widest = (gap, m + 1);
            }
        }
        idx.rotate_left(widest.1);
    }
    if composition == Composition::LeftFirst {
        idx.reverse();
    }
    idx
}

impl PathPlan {
    /// Default lassos from `base` in the order of [`loop_order`].
    pub fn lassos(base: Complex64, order: Vec<usize>) -> Self {
        PathPlan {
            base,
            loops: order
                .into_iter()
                .map(|pole| LoopSpec {
                    pole,
                    waypoints: Vec::new(),
                })
                .collect(),
            clearance: None,
            composition: Composition::RightFirst,
        }
    }

    /// Default geometry for the pole positions of `ns`.
    pub fn default_for(ns: &NumericSystem) -> Self {
        let poles = ns.pole_locations();
        let base = default_base(&poles);
        Self::lassos(base, loop_order(base, &poles, Composition::RightFirst))
    }

    /// The loops at the pole positions of `ns`, checked against the
    /// clearance and the one-pole-per-circle condition.
    pub fn realize(&self, ns: &NumericSystem) -> Result<Vec<Lasso>> {
        let poles = ns.pole_locations();
        let mut out = Vec::with_capacity(self.loops.len());
        for spec in &self.loops {
            let a = *poles.get(spec.pole).ok_or_else(|| {
                Error::InvalidInput(format!("loop around missing pole {}", spec.pole))
            })?;
            let (points, start) = match spec.waypoints.last() {
                Some(&w) => (spec.waypoints.clone(), w),
                None => {
                    let others = poles
                        .iter()
                        .enumerate()
                        .filter(|&(j, _)| j != spec.pole)
                        .map(|(_, b)| (b - a).norm())
                        .fold(f64::INFINITY, f64::min);
                    let to_base = (self.base - a).norm();
                    if to_base == 0.0 {
                        return Err(Error::PathTooCloseToPole {
                            pole: spec.pole,
                            distance: 0.0,
                            clearance: 0.0,
                        });
                    }
                    let r = 0.5 * others.min(to_base);
                    let start = a + (self.base - a) * (r / to_base);
                    (vec![start], start)
                }
            };
            let mut approach = Vec::with_capacity(points.len());
            let mut prev = self.base;
            for &p in &points {
                if p != prev {
                    approach.push(Segment::line(prev, p));
                }
                prev = p;
            }
            let circle = Segment::circle_through(a, start);
            let r = (start - a).norm();
            for (j, b) in poles.iter().enumerate() {
                if j != spec.pole && (b - a).norm() <= r {
                    return Err(Error::InvalidInput(format!(
                        "loop around pole {} also encloses pole {j}",
                        spec.pole
                    )));
                }
            }
            out.push(Lasso {
                pole: spec.pole,
                approach,
                circle,
            });
        }
        let clearance = self.clearance.unwrap_or_else(|| {
            0.5 * out
                .iter()
                .map(|l| match l.circle {
                    Segment::Arc { radius, .. } => radius,
                    Segment::Line { .. } => f64::INFINITY,
                })
                .fold(f64::INFINITY, f64::min)
        });
        for l in &out {
            let mut path = l.approach.clone();
            path.push(l.circle);
            if let Some((d, j)) = path_clearance(ns, &path) {
                if d < clearance {
                    return Err(Error::PathTooCloseToPole {
                        pole: j,
                        distance: d,
                        clearance,
                    });
                }
            }
        }
        Ok(out)
    }
}

/// Big positive circle around every pole, reached radially from `base`.
pub fn big_loop(base: Complex64, poles: &[Complex64]) -> Vec<Segment> {
    let c = if poles.is_empty() {
        Complex64::new(0.0, 0.0)
    } else {
        poles.iter().sum::<Complex64>() / poles.len() as f64
    };
    let reach = poles
        .iter()
        .map(|a| (a - c).norm())
        .fold((base - c).norm(), f64::max);
    let radius = 2.0 * reach + 1.0;
    let dir = if (base - c).norm() > 0.0 {
        (base - c) / (base - c).norm()
    } else {
        Complex64::from_polar(1.0, -PI / 2.0)
    };
    let start = c + dir * radius;
    vec![
        Segment::line(base, start),
        Segment::circle_through(c, start),
        Segment::line(start, base),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    #[test]
    fn arc_geometry() {
        let s = Segment::circle_through(c(1.0, 0.0), c(1.0, -0.5));
        assert!((s.length() - PI).abs() < 1e-15);
        assert!((s.end() - c(1.0, -0.5)).norm() < 1e-15);
        assert!((s.point(s.length() / 4.0) - c(1.5, 0.0)).norm() < 1e-15);
        assert!((s.tangent(0.0) - c(1.0, 0.0)).norm() < 1e-15);
        assert!((s.distance_to(c(1.0, 0.0)) - 0.5).abs() < 1e-15);
        let half = Segment::Arc {
            center: c(0.0, 0.0),
            radius: 1.0,
            start: 0.0,
            sweep: PI,
        };
        assert!((half.distance_to(c(0.0, 2.0)) - 1.0).abs() < 1e-15);
        assert!((half.distance_to(c(0.0, -2.0)) - 5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn line_distance() {
        let s = Segment::line(c(0.0, 0.0), c(2.0, 0.0));
        assert_eq!(s.distance_to(c(1.0, 0.5)), 0.5);
        assert_eq!(s.distance_to(c(3.0, 0.0)), 1.0);
    }

    #[test]
    fn loops_are_ordered_by_decreasing_argument() {
        let poles = [c(0.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)];
        let base = default_base(&poles);
        assert_eq!(base, c(1.0, -2.0));
        assert_eq!(
            loop_order(base, &poles, Composition::RightFirst),
            vec![0, 1, 2]
        );
        assert_eq!(
            loop_order(base, &poles, Composition::LeftFirst),
            vec![2, 1, 0]
        );
        // base in the middle of the poles: start after the widest gap
        let ring = [c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0)];
        assert_eq!(
            loop_order(c(0.0, 0.0), &ring, Composition::RightFirst),
            vec![2, 1, 0]
        );
    }

    #[test]
    fn lasso_with_clearance() {
        let ns = NumericSystem::fuchsian(
            &[c(0.0, 0.0), c(1.0, 0.0)],
            &[crate::CMatrix::zeros(1, 1), crate::CMatrix::zeros(1, 1)],
        )
        .unwrap();
        let plan = PathPlan::default_for(&ns);
        let loops = plan.realize(&ns).unwrap();
        assert_eq!(loops.len(), 2);
        for l in &loops {
            let segs = l.segments();
            assert!((segs[0].start() - plan.base).norm() < 1e-15);
            assert!((segs.last().unwrap().end() - plan.base).norm() < 1e-15);
        }
        // a waypoint path passing over the other pole is refused
        let bad = PathPlan {
            base: c(-1.0, 0.0),
            loops: vec![LoopSpec {
                pole: 1,
                waypoints: vec![c(0.0, 0.0), c(0.8, 0.0)],
            }],
            clearance: Some(0.05),
            composition: Composition::RightFirst,
        };
        assert!(matches!(
            bad.realize(&ns),
            Err(Error::PathTooCloseToPole { pole: 0, .. })
        ));
        let enclosing = PathPlan {
            base: c(0.5, -2.0),
            loops: vec![LoopSpec {
                pole: 0,
                waypoints: vec![c(0.0, -1.5)],
            }],
            clearance: None,
            composition: Composition::RightFirst,
        };
        assert!(matches!(
            enclosing.realize(&ns),
            Err(Error::InvalidInput(_))
        ));
    }
}
