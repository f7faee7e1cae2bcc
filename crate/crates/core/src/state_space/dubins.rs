//! Shortest Dubins curves between planar poses.
//!
//! Each of the six candidate words is solved in closed form in a frame where
//! the start is at the origin, the goal lies on the +x axis and lengths are
//! measured in turning radii.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::wrap_angle;

/// Planar pose. `yaw` is kept in `(-pi, pi]` by constructors in this crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
}

impl Pose2 {
    pub fn new(x: f64, y: f64, yaw: f64) -> Self {
        Self {
            x,
            y,
            yaw: wrap_angle(yaw),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[allow(clippy::upper_case_acronyms)]
pub enum DubinsWord {
    LSL,
    RSR,
    LSR,
    RSL,
    RLR,
    LRL,
}

impl DubinsWord {
    pub const ALL: [DubinsWord; 6] = [
        DubinsWord::LSL,
        DubinsWord::RSR,
        DubinsWord::LSR,
        DubinsWord::RSL,
        DubinsWord::RLR,
        DubinsWord::LRL,
    ];

    pub fn segments(self) -> [Steer; 3] {
        use Steer::*;
        match self {
            DubinsWord::LSL => [Left, Straight, Left],
            DubinsWord::RSR => [Right, Straight, Right],
            DubinsWord::LSR => [Left, Straight, Right],
            DubinsWord::RSL => [Right, Straight, Left],
            DubinsWord::RLR => [Right, Left, Right],
            DubinsWord::LRL => [Left, Right, Left],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Steer {
    Left,
    Straight,
    Right,
}

/// A Dubins curve from `start` with turning radius `rho`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DubinsPath {
    pub start: Pose2,
    pub rho: f64,
    pub word: DubinsWord,
    /// Segment lengths in units of `rho` (radians for arcs).
    pub params: [f64; 3],
}

impl DubinsPath {
    pub fn length(&self) -> f64 {
        self.rho * (self.params[0] + self.params[1] + self.params[2])
    }

    /// Segment lengths in meters.
    pub fn segment_lengths(&self) -> [f64; 3] {
        self.params.map(|p| p * self.rho)
    }

    /// Pose after travelling `s` meters along the curve (clamped to its length).
    pub fn sample(&self, s: f64) -> Pose2 {
        let mut t = (s / self.rho).clamp(0.0, self.params.iter().sum());
        // normalized frame: unit turning radius, start at origin
        let (mut x, mut y, mut th) = (0.0, 0.0, self.start.yaw);
        for (steer, &len) in self.word.segments().iter().zip(&self.params) {
            let d = t.min(len);
            (x, y, th) = advance(x, y, th, *steer, d);
            t -= d;
            if t <= 0.0 {
                break;
            }
        }
        Pose2::new(self.start.x + x * self.rho, self.start.y + y * self.rho, th)
    }

    pub fn end(&self) -> Pose2 {
        self.sample(self.length())
    }
}

fn advance(x: f64, y: f64, th: f64, steer: Steer, d: f64) -> (f64, f64, f64) {
    match steer {
        Steer::Straight => (x + d * th.cos(), y + d * th.sin(), th),
        Steer::Left => (
            x + (th + d).sin() - th.sin(),
            y - (th + d).cos() + th.cos(),
            th + d,
        ),
        Steer::Right => (
            x - (th - d).sin() + th.sin(),
            y + (th - d).cos() - th.cos(),
            th - d,
        ),
    }
}

/// Slack for discriminants that are zero in exact arithmetic, e.g. when the
/// goal lies on a single arc from the start.
const ROUNDING: f64 = 1e-10;

fn mod2pi(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    // a full turn and no turn reach the same pose; prefer no turn
    if TAU - r < 1e-10 {
        0.0
    } else {
        r
    }
}

struct Frame {
    alpha: f64,
    beta: f64,
    d: f64,
    sa: f64,
    sb: f64,
    ca: f64,
    cb: f64,
    c_ab: f64,
}

impl Frame {
    fn new(a: &Pose2, b: &Pose2, rho: f64) -> Self {
        let (dx, dy) = (b.x - a.x, b.y - a.y);
        let d = dx.hypot(dy) / rho;
        let theta = if d > 0.0 { mod2pi(dy.atan2(dx)) } else { 0.0 };
        let alpha = mod2pi(a.yaw - theta);
        let beta = mod2pi(b.yaw - theta);
        Self {
            alpha,
            beta,
            d,
            sa: alpha.sin(),
            sb: beta.sin(),
            ca: alpha.cos(),
            cb: beta.cos(),
            c_ab: (alpha - beta).cos(),
        }
    }

    fn solve(&self, word: DubinsWord) -> Option<[f64; 3]> {
        let Frame {
            alpha,
            beta,
            d,
            sa,
            sb,
            ca,
            cb,
            c_ab,
        } = *self;
        let d2 = d * d;
        match word {
            DubinsWord::LSL => {
                let p2 = 2.0 + d2 - 2.0 * c_ab + 2.0 * d * (sa - sb);
                if p2 < -ROUNDING {
                    return None;
                }
                let p2 = p2.max(0.0);
                let tmp = (cb - ca).atan2(d + sa - sb);
                Some([mod2pi(tmp - alpha), p2.sqrt(), mod2pi(beta - tmp)])
            }
            DubinsWord::RSR => {
                let p2 = 2.0 + d2 - 2.0 * c_ab + 2.0 * d * (sb - sa);
                if p2 < -ROUNDING {
                    return None;
                }
                let p2 = p2.max(0.0);
                let tmp = (ca - cb).atan2(d - sa + sb);
                Some([mod2pi(alpha - tmp), p2.sqrt(), mod2pi(tmp - beta)])
            }
            DubinsWord::LSR => {
                let p2 = -2.0 + d2 + 2.0 * c_ab + 2.0 * d * (sa + sb);
                if p2 < -ROUNDING {
                    return None;
                }
                let p2 = p2.max(0.0);
                let p = p2.sqrt();
                let tmp = (-ca - cb).atan2(d + sa + sb) - (-2.0f64).atan2(p);
                Some([mod2pi(tmp - alpha), p, mod2pi(tmp - beta)])
            }
            DubinsWord::RSL => {
                let p2 = -2.0 + d2 + 2.0 * c_ab - 2.0 * d * (sa + sb);
                if p2 < -ROUNDING {
                    return None;
                }
                let p2 = p2.max(0.0);
                let p = p2.sqrt();
                let tmp = (ca + cb).atan2(d - sa - sb) - 2.0f64.atan2(p);
                Some([mod2pi(alpha - tmp), p, mod2pi(beta - tmp)])
            }
            DubinsWord::RLR => {
                let tmp = (6.0 - d2 + 2.0 * c_ab + 2.0 * d * (sa - sb)) / 8.0;
                if tmp.abs() > 1.0 + ROUNDING {
                    return None;
                }
                let tmp = tmp.clamp(-1.0, 1.0);
                let phi = (ca - cb).atan2(d - sa + sb);
                let p = mod2pi(TAU - tmp.acos());
                let t = mod2pi(alpha - phi + p / 2.0);
                Some([t, p, mod2pi(alpha - beta - t + p)])
            }
            DubinsWord::LRL => {
                let tmp = (6.0 - d2 + 2.0 * c_ab + 2.0 * d * (sb - sa)) / 8.0;
                if tmp.abs() > 1.0 + ROUNDING {
                    return None;
                }
                let tmp = tmp.clamp(-1.0, 1.0);
                let phi = (ca - cb).atan2(d + sa - sb);
                let p = mod2pi(TAU - tmp.acos());
                let t = mod2pi(-alpha - phi + p / 2.0);
                Some([t, p, mod2pi(beta - alpha - t + p)])
            }
        }
    }
}

/// The curve of one specific word, if that word can connect `a` to `b`.
pub fn dubins_word_path(a: Pose2, b: Pose2, rho: f64, word: DubinsWord) -> Option<DubinsPath> {
    let frame = Frame::new(&a, &b, rho);
    frame.solve(word).map(|params| DubinsPath {
        start: a,
        rho,
        word,
        params,
    })
}

/// Shortest of the six Dubins words. Ties go to the earlier word in
/// [`DubinsWord::ALL`].
///
/// # Panics
/// If `rho` is not positive.
pub fn dubins_shortest_path(a: Pose2, b: Pose2, rho: f64) -> DubinsPath {
    assert!(rho > 0.0, "turning radius must be positive");
    let frame = Frame::new(&a, &b, rho);
    let mut best: Option<DubinsPath> = None;
    for word in DubinsWord::ALL {
        if let Some(params) = frame.solve(word) {
            let cand = DubinsPath {
                start: a,
                rho,
                word,
                params,
            };
            if best.is_none_or(|b| cand.length() < b.length()) {
                best = Some(cand);
            }
        }
    }
    // LSL and RSR are solvable for every pose pair
    best.expect("Dubins: no admissible word")
}
