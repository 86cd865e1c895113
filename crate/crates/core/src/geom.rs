//! Shared geometric primitives.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn midpoint(self, other: Point) -> Point {
        Point::new(0.5 * (self.x + other.x), 0.5 * (self.y + other.y))
    }

    /// Manhattan distance, which is the HPWL of a two-point net.
    pub fn manhattan(self, other: Point) -> f64 {
        (self.x - other.x).abs() + (self.y - other.y).abs()
    }
}

impl std::ops::Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl std::ops::Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl std::ops::Mul<f64> for Point {
    type Output = Point;
    fn mul(self, rhs: f64) -> Point {
        Point::new(self.x * rhs, self.y * rhs)
    }
}

/// Fixed placement region, anchored at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Outline {
    pub width: f64,
    pub height: f64,
}

impl Outline {
    pub const fn new(width: f64, height: f64) -> Self {
        Self { width, height }
    }

    pub fn center(&self) -> Point {
        Point::new(0.5 * self.width, 0.5 * self.height)
    }

    pub fn clamp(&self, p: Point) -> Point {
        Point::new(p.x.clamp(0.0, self.width), p.y.clamp(0.0, self.height))
    }

    /// Midpoint of one outline side; IO bundles are anchored here.
    pub fn side_anchor(&self, side: Side) -> Point {
        match side {
            Side::N => Point::new(0.5 * self.width, self.height),
            Side::S => Point::new(0.5 * self.width, 0.0),
            Side::E => Point::new(self.width, 0.5 * self.height),
            Side::W => Point::new(0.0, 0.5 * self.height),
        }
    }
}

/// Outline side an IO pad is pinned to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Side {
    N,
    S,
    E,
    W,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::N, Side::S, Side::E, Side::W];
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Side::N => "N",
            Side::S => "S",
            Side::E => "E",
            Side::W => "W",
        };
        f.write_str(s)
    }
}

/// Macro orientation restricted to axis mirrors.
///
/// Naming follows the dataflow-flipping convention, which differs from DEF:
/// `FN` mirrors across the macro's horizontal centerline (pins move up/down),
/// `FS` mirrors across its vertical centerline (pins move left/right), and
/// `S` applies both. Convert at the serializer if DEF semantics are needed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Orientation {
    #[default]
    N,
    FN,
    FS,
    S,
}

impl Orientation {
    pub fn mirrors_x(self) -> bool {
        matches!(self, Orientation::FS | Orientation::S)
    }

    pub fn mirrors_y(self) -> bool {
        matches!(self, Orientation::FN | Orientation::S)
    }

    fn from_mirrors(mx: bool, my: bool) -> Self {
        match (mx, my) {
            (false, false) => Orientation::N,
            (false, true) => Orientation::FN,
            (true, false) => Orientation::FS,
            (true, true) => Orientation::S,
        }
    }

    /// Applies `flip` on top of `self`. Mirrors commute, so this is XOR per axis.
    pub fn then(self, flip: Orientation) -> Orientation {
        Orientation::from_mirrors(
            self.mirrors_x() ^ flip.mirrors_x(),
            self.mirrors_y() ^ flip.mirrors_y(),
        )
    }

    /// Maps a pin offset (relative to the lower-left corner, unflipped) into this orientation.
    pub fn apply(self, offset: Point, width: f64, height: f64) -> Point {
        Point::new(
            if self.mirrors_x() { width - offset.x } else { offset.x },
            if self.mirrors_y() { height - offset.y } else { offset.y },
        )
    }
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Orientation::N => "N",
            Orientation::FN => "FN",
            Orientation::FS => "FS",
            Orientation::S => "S",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for Orientation {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "N" => Ok(Orientation::N),
            "FN" => Ok(Orientation::FN),
            "FS" => Ok(Orientation::FS),
            "S" => Ok(Orientation::S),
            other => Err(format!("unknown orientation `{other}`")),
        }
    }
}
