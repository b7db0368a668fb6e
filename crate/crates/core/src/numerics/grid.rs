use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Which wall a boundary layer is attached to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Bottom,
    Top,
}

impl Orientation {
    /// +1 at the bottom wall, -1 at the top wall.
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Bottom => 1.0,
            Orientation::Top => -1.0,
        }
    }

    pub fn wall(self) -> f64 {
        match self {
            Orientation::Bottom => 0.0,
            Orientation::Top => 2.0,
        }
    }

    /// Distance of `y` from this wall.
    pub fn distance(self, y: f64) -> f64 {
        match self {
            Orientation::Bottom => y,
            Orientation::Top => 2.0 - y,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Orientation::Bottom => "bottom",
            Orientation::Top => "top",
        }
    }
}

/// Uniform nodal grid on (0,L)x(0,2).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysicalGrid {
    pub length: f64,
    pub nx: usize,
    pub ny: usize,
}

impl PhysicalGrid {
    pub fn new(length: f64, nx: usize, ny: usize) -> Result<Self> {
        if nx < 8 || ny < 8 {
            return Err(Error::InvalidGrid(format!("need nx, ny >= 8, got {nx}x{ny}")));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!("length must be positive, got {length}")));
        }
        Ok(Self { length, nx, ny })
    }

    pub fn hx(&self) -> f64 {
        self.length / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        2.0 / self.ny as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        if i == self.nx {
            self.length
        } else {
            i as f64 * self.hx()
        }
    }

    pub fn y(&self, j: usize) -> f64 {
        if j == self.ny {
            2.0
        } else {
            j as f64 * self.hy()
        }
    }
}

/// Uniform grid in (x, Y) for a boundary layer, Y the stretched wall distance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryLayerGrid {
    pub length: f64,
    pub nx: usize,
    pub y_max: f64,
    pub n_y: usize,
    pub orientation: Orientation,
}

impl BoundaryLayerGrid {
    pub fn new(length: f64, nx: usize, y_max: f64, n_y: usize, orientation: Orientation) -> Result<Self> {
        if nx < 8 || n_y < 8 {
            return Err(Error::InvalidGrid(format!("need nx, nY >= 8, got {nx}x{n_y}")));
        }
        if !(y_max >= 20.0 && y_max.is_finite()) {
            return Err(Error::InvalidGrid(format!("Ymax must be >= 20, got {y_max}")));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!("length must be positive, got {length}")));
        }
        Ok(Self { length, nx, y_max, n_y, orientation })
    }

    /// Grid whose Y nodes sit exactly on the physical y nodes (refined `refine` times),
    /// covering at least `y_max_min` and the whole channel.
    pub fn aligned(phys: &PhysicalGrid, eps: f64, y_max_min: f64, refine: usize, orientation: Orientation) -> Result<Self> {
        let refine = refine.max(1);
        let h_y = phys.hy() / (refine as f64 * eps.sqrt());
        let needed = y_max_min.max(2.0 / eps.sqrt()).max(20.0);
        let n_y = (needed / h_y - 1e-9).ceil() as usize;
        Self::new(phys.length, phys.nx, n_y as f64 * h_y, n_y, orientation)
    }

    pub fn hx(&self) -> f64 {
        self.length / self.nx as f64
    }

    pub fn h_y(&self) -> f64 {
        self.y_max / self.n_y as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        if i == self.nx {
            self.length
        } else {
            i as f64 * self.hx()
        }
    }

    pub fn big_y(&self, k: usize) -> f64 {
        if k == self.n_y {
            self.y_max
        } else {
            k as f64 * self.h_y()
        }
    }

    /// Physical y of stretched coordinate `big_y`.
    pub fn physical_y(&self, big_y: f64, eps: f64) -> f64 {
        match self.orientation {
            Orientation::Bottom => eps.sqrt() * big_y,
            Orientation::Top => 2.0 - eps.sqrt() * big_y,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Grid {
    Physical(PhysicalGrid),
    Layer(BoundaryLayerGrid),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    /// Stretched boundary-layer coordinate.
    StretchedY,
}

impl Grid {
    pub fn nx(&self) -> usize {
        match self {
            Grid::Physical(g) => g.nx,
            Grid::Layer(g) => g.nx,
        }
    }

    /// Cells in the second direction (y or Y).
    pub fn n2(&self) -> usize {
        match self {
            Grid::Physical(g) => g.ny,
            Grid::Layer(g) => g.n_y,
        }
    }

    pub fn len(&self) -> usize {
        (self.nx() + 1) * (self.n2() + 1)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * (self.nx() + 1) + i
    }

    pub fn length(&self) -> f64 {
        match self {
            Grid::Physical(g) => g.length,
            Grid::Layer(g) => g.length,
        }
    }

    pub fn hx(&self) -> f64 {
        self.length() / self.nx() as f64
    }

    pub fn h2(&self) -> f64 {
        match self {
            Grid::Physical(g) => g.hy(),
            Grid::Layer(g) => g.h_y(),
        }
    }

    pub fn coord1(&self, i: usize) -> f64 {
        match self {
            Grid::Physical(g) => g.x(i),
            Grid::Layer(g) => g.x(i),
        }
    }

    pub fn coord2(&self, j: usize) -> f64 {
        match self {
            Grid::Physical(g) => g.y(j),
            Grid::Layer(g) => g.big_y(j),
        }
    }

    /// Resolve an axis to (is_second_direction, node count - 1, spacing).
    pub(crate) fn axis_info(&self, axis: Axis) -> Result<(bool, usize, f64)> {
        match (self, axis) {
            (_, Axis::X) => Ok((false, self.nx(), self.hx())),
            (Grid::Physical(g), Axis::Y) => Ok((true, g.ny, g.hy())),
            (Grid::Layer(g), Axis::StretchedY) => Ok((true, g.n_y, g.h_y())),
            (Grid::Physical(_), Axis::StretchedY) => {
                Err(Error::Dimension("axis Y is not present on a physical grid".into()))
            }
            (Grid::Layer(_), Axis::Y) => {
                Err(Error::Dimension("axis y is not present on a boundary-layer grid".into()))
            }
        }
    }

    pub fn physical(&self) -> Option<&PhysicalGrid> {
        match self {
            Grid::Physical(g) => Some(g),
            Grid::Layer(_) => None,
        }
    }

    pub fn layer(&self) -> Option<&BoundaryLayerGrid> {
        match self {
            Grid::Layer(g) => Some(g),
            Grid::Physical(_) => None,
        }
    }
}

impl From<PhysicalGrid> for Grid {
    fn from(g: PhysicalGrid) -> Self {
        Grid::Physical(g)
    }
}

impl From<BoundaryLayerGrid> for Grid {
    fn from(g: BoundaryLayerGrid) -> Self {
        Grid::Layer(g)
    }
}
