use super::grid::{BoundaryLayerGrid, Grid, Orientation, PhysicalGrid};
use crate::error::{Error, Result};
use std::io::{BufRead, Write};
use std::ops::{Add, Mul, Neg, Sub};

/// Nodal values on a grid, stored with the x index fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct Field2D {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl Field2D {
    pub fn zeros(grid: impl Into<Grid>) -> Self {
        let grid = grid.into();
        Self { values: vec![0.0; grid.len()], grid }
    }

    pub fn constant(grid: impl Into<Grid>, c: f64) -> Self {
        let grid = grid.into();
        Self { values: vec![c; grid.len()], grid }
    }

    pub fn from_values(grid: impl Into<Grid>, values: Vec<f64>) -> Result<Self> {
        let grid = grid.into();
        if values.len() != grid.len() {
            return Err(Error::Dimension(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    /// Sample `f(coord1, coord2)` at every node.
    pub fn from_fn(grid: impl Into<Grid>, f: impl Fn(f64, f64) -> f64) -> Self {
        let grid = grid.into();
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..=grid.n2() {
            let c2 = grid.coord2(j);
            for i in 0..=grid.nx() {
                values.push(f(grid.coord1(i), c2));
            }
        }
        Self { grid, values }
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.grid.idx(i, j);
        self.values[k] = v;
    }

    pub fn nx(&self) -> usize {
        self.grid.nx()
    }

    pub fn n2(&self) -> usize {
        self.grid.n2()
    }

    /// Values along the line of constant second coordinate index `j`.
    pub fn row(&self, j: usize) -> &[f64] {
        let n = self.nx() + 1;
        &self.values[j * n..(j + 1) * n]
    }

    /// Values along the line of constant x index `i`.
    pub fn column(&self, i: usize) -> Vec<f64> {
        (0..=self.n2()).map(|j| self.at(i, j)).collect()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.grid, other.grid, "fields live on different grids");
        Self {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn ensure_finite(&self, what: &str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::Dimension(format!("{what} contains non-finite values")))
        }
    }

    /// Max over nodes with 0 < i < nx and 0 < j < n2.
    pub fn interior_max_abs(&self) -> f64 {
        let mut m = 0.0_f64;
        for j in 1..self.n2() {
            for i in 1..self.nx() {
                m = m.max(self.at(i, j).abs());
            }
        }
        m
    }

    pub fn write_csv<W: Write>(&self, mut w: W, extra_header: &[String]) -> Result<()> {
        for line in extra_header {
            writeln!(w, "# {line}")?;
        }
        match &self.grid {
            Grid::Physical(g) => writeln!(w, "# grid: {},{},{}", g.nx, g.ny, g.length)?,
            Grid::Layer(g) => {
                writeln!(w, "# grid: {},{},{}", g.nx, g.n_y, g.length)?;
                writeln!(w, "# layer-grid: {},{}", g.y_max, g.orientation.name())?;
            }
        }
        writeln!(w, "i,j,x,y,value")?;
        for j in 0..=self.n2() {
            let c2 = self.grid.coord2(j);
            for i in 0..=self.nx() {
                writeln!(w, "{},{},{:e},{:e},{:e}", i, j, self.grid.coord1(i), c2, self.at(i, j))?;
            }
        }
        Ok(())
    }

    pub fn to_csv_string(&self, extra_header: &[String]) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf, extra_header).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut dims: Option<(usize, usize, f64)> = None;
        let mut layer: Option<(f64, Orientation)> = None;
        let mut values = Vec::new();
        let bad = |m: &str| Error::Parse(m.to_string());
        for line in r.lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("# grid:") {
                let p: Vec<&str> = rest.trim().split(',').collect();
                if p.len() != 3 {
                    return Err(bad("grid header needs nx,ny,L"));
                }
                let nx = p[0].parse().map_err(|_| bad("nx"))?;
                let ny = p[1].parse().map_err(|_| bad("ny"))?;
                let l = p[2].parse().map_err(|_| bad("L"))?;
                dims = Some((nx, ny, l));
            } else if let Some(rest) = line.strip_prefix("# layer-grid:") {
                let p: Vec<&str> = rest.trim().split(',').collect();
                if p.len() != 2 {
                    return Err(bad("layer-grid header needs Ymax,orientation"));
                }
                let ymax = p[0].parse().map_err(|_| bad("Ymax"))?;
                let o = match p[1] {
                    "bottom" => Orientation::Bottom,
                    "top" => Orientation::Top,
                    _ => return Err(bad("orientation")),
                };
                layer = Some((ymax, o));
            } else if line.starts_with('#') || line.starts_with("i,") {
                continue;
            } else {
                let v = line.rsplit(',').next().ok_or_else(|| bad("row"))?;
                values.push(v.parse::<f64>().map_err(|_| bad("value"))?);
            }
        }
        let (nx, ny, l) = dims.ok_or_else(|| bad("missing grid header"))?;
        let grid: Grid = match layer {
            None => PhysicalGrid::new(l, nx, ny)?.into(),
            Some((ymax, o)) => BoundaryLayerGrid::new(l, nx, ymax, ny, o)?.into(),
        };
        Self::from_values(grid, values)
    }
}

impl Add for &Field2D {
    type Output = Field2D;
    fn add(self, rhs: &Field2D) -> Field2D {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl Sub for &Field2D {
    type Output = Field2D;
    fn sub(self, rhs: &Field2D) -> Field2D {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl Mul for &Field2D {
    type Output = Field2D;
    fn mul(self, rhs: &Field2D) -> Field2D {
        self.zip_map(rhs, |a, b| a * b)
    }
}

impl Neg for &Field2D {
    type Output = Field2D;
    fn neg(self) -> Field2D {
        self.map(|a| -a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_roundtrip_is_exact() {
        let g = PhysicalGrid::new(0.5, 8, 8).unwrap();
        let f = Field2D::from_fn(g, |x, y| (x * 3.7).sin() + y.exp() / 3.0);
        let s = f.to_csv_string(&["layer: euler, tier: 1".into()]);
        assert!(s.starts_with("# layer: euler, tier: 1\n# grid: 8,8,0.5\n"));
        let back = Field2D::read_csv(s.as_bytes()).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn layer_csv_roundtrip() {
        let g = BoundaryLayerGrid::new(0.5, 8, 24.0, 12, Orientation::Top).unwrap();
        let f = Field2D::from_fn(g, |x, yy| x * yy);
        let back = Field2D::read_csv(f.to_csv_string(&[]).as_bytes()).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn wrong_length_rejected() {
        let g = PhysicalGrid::new(1.0, 8, 8).unwrap();
        assert!(Field2D::from_values(g, vec![0.0; 10]).is_err());
    }
}
