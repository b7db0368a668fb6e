use super::field::Field2D;
use super::grid::Axis;
use crate::error::{Error, Result};

/// Up to five taps `(node, weight)` of a 1-D finite-difference stencil.
#[derive(Clone, Copy, Debug)]
pub struct Stencil {
    pub taps: [(usize, f64); 5],
    pub len: usize,
}

impl Stencil {
    fn new(t: &[(usize, f64)]) -> Self {
        let mut taps = [(0, 0.0); 5];
        taps[..t.len()].copy_from_slice(t);
        Self { taps, len: t.len() }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.taps[..self.len].iter().copied()
    }

    pub fn apply(&self, f: impl Fn(usize) -> f64) -> f64 {
        self.iter().map(|(k, w)| w * f(k)).sum()
    }

    fn mirrored(&self, n: usize, sign: f64) -> Self {
        let t: Vec<(usize, f64)> = self.iter().map(|(k, w)| (n - k, sign * w)).collect();
        Self::new(&t)
    }
}

/// First-derivative stencil at node `k` of a line with nodes `0..=n`.
/// Boundary nodes use the central formula with a cubic-extrapolated ghost value,
/// so their leading error matches the interior stencil.
pub fn d1_stencil(n: usize, k: usize, h: f64) -> Stencil {
    let c = 0.5 / h;
    let left = if n >= 3 {
        Stencil::new(&[(0, -4.0 * c), (1, 7.0 * c), (2, -4.0 * c), (3, c)])
    } else {
        Stencil::new(&[(0, -3.0 * c), (1, 4.0 * c), (2, -c)])
    };
    if k == 0 {
        left
    } else if k == n {
        left.mirrored(n, -1.0)
    } else {
        Stencil::new(&[(k - 1, -c), (k + 1, c)])
    }
}

/// Second-derivative stencil at node `k` of a line with nodes `0..=n`.
/// Boundary nodes use a quartic-extrapolated ghost value.
pub fn d2_stencil(n: usize, k: usize, h: f64) -> Stencil {
    let c = 1.0 / (h * h);
    let left = if n >= 4 {
        Stencil::new(&[(0, 3.0 * c), (1, -9.0 * c), (2, 10.0 * c), (3, -5.0 * c), (4, c)])
    } else if n == 3 {
        Stencil::new(&[(0, 2.0 * c), (1, -5.0 * c), (2, 4.0 * c), (3, -c)])
    } else {
        Stencil::new(&[(0, c), (1, -2.0 * c), (2, c)])
    };
    if k == 0 {
        left
    } else if k == n {
        left.mirrored(n, 1.0)
    } else {
        Stencil::new(&[(k - 1, c), (k, -2.0 * c), (k + 1, c)])
    }
}

pub fn stencil(order: u8, n: usize, k: usize, h: f64) -> Stencil {
    match order {
        1 => d1_stencil(n, k, h),
        _ => d2_stencil(n, k, h),
    }
}

/// Derivative of a 1-D sample vector.
pub fn diff_1d(f: &[f64], h: f64, order: u8) -> Vec<f64> {
    let n = f.len() - 1;
    (0..=n).map(|k| stencil(order, n, k, h).apply(|m| f[m])).collect()
}

/// Finite-difference derivative along `axis`.
pub fn diff(f: &Field2D, axis: Axis, order: u8) -> Result<Field2D> {
    if !(1..=2).contains(&order) {
        return Err(Error::Dimension(format!("derivative order {order} unsupported")));
    }
    let (second, n, h) = f.grid.axis_info(axis)?;
    if n < 2 {
        return Err(Error::Dimension("need at least 3 nodes along the axis".into()));
    }
    let nx = f.nx();
    let n2 = f.n2();
    let mut out = vec![0.0; f.values.len()];
    if second {
        let stencils: Vec<Stencil> = (0..=n).map(|k| stencil(order, n, k, h)).collect();
        for (j, s) in stencils.iter().enumerate() {
            let dst = &mut out[j * (nx + 1)..(j + 1) * (nx + 1)];
            for (m, w) in s.iter() {
                for (d, v) in dst.iter_mut().zip(f.row(m)) {
                    *d += w * v;
                }
            }
        }
    } else {
        let stencils: Vec<Stencil> = (0..=n).map(|k| stencil(order, n, k, h)).collect();
        for j in 0..=n2 {
            let row = f.row(j);
            let dst = &mut out[j * (nx + 1)..(j + 1) * (nx + 1)];
            for (i, s) in stencils.iter().enumerate() {
                dst[i] = s.apply(|m| row[m]);
            }
        }
    }
    Ok(Field2D { grid: f.grid, values: out })
}

/// Trapezoid weights for a uniform line with nodes `0..=n`.
pub fn trapezoid_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; n + 1];
    w[0] = 0.5 * h;
    w[n] = 0.5 * h;
    w
}

pub fn trapz(f: &[f64], h: f64) -> f64 {
    let n = f.len() - 1;
    let inner: f64 = f[1..n].iter().sum();
    h * (inner + 0.5 * (f[0] + f[n]))
}

/// Running trapezoid integral from node 0.
pub fn cumtrapz(f: &[f64], h: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(f.len());
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..f.len() {
        acc += 0.5 * h * (f[k - 1] + f[k]);
        out.push(acc);
    }
    out
}

/// Running trapezoid integral from the last node backwards: out[k] = int_{k}^{n}.
pub fn cumtrapz_rev(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    for k in (0..n - 1).rev() {
        out[k] = out[k + 1] + 0.5 * h * (f[k] + f[k + 1]);
    }
    out
}

/// Where a running integral is anchored.
#[derive(Clone, Copy, Debug)]
pub enum Anchor {
    Start,
    End,
    Node(usize),
}

/// Running integral along `axis`, zero at the anchor node.
pub fn cumulative(f: &Field2D, axis: Axis, anchor: Anchor) -> Result<Field2D> {
    let (second, n, h) = f.grid.axis_info(axis)?;
    let k0 = match anchor {
        Anchor::Start => 0,
        Anchor::End => n,
        Anchor::Node(k) if k <= n => k,
        Anchor::Node(k) => return Err(Error::OffGrid(format!("anchor node {k} beyond {n}"))),
    };
    let mut out = Field2D::zeros(f.grid);
    let line = |f: &[f64]| -> Vec<f64> {
        let fwd = cumtrapz(f, h);
        fwd.iter().map(|v| v - fwd[k0]).collect()
    };
    if second {
        for i in 0..=f.nx() {
            let c = line(&f.column(i));
            for (j, v) in c.into_iter().enumerate() {
                out.set(i, j, v);
            }
        }
    } else {
        for j in 0..=f.n2() {
            let c = line(f.row(j));
            for (i, v) in c.into_iter().enumerate() {
                out.set(i, j, v);
            }
        }
    }
    Ok(out)
}

/// Integration regions that lie on grid lines.
#[derive(Clone, Copy, Debug)]
pub enum Region {
    Full,
    /// The line x = c over the whole second coordinate range.
    LineX(f64),
    /// The line y = c (or Y = c) over 0 <= x <= L.
    LineY(f64),
    /// The half-line {x = x0, Y >= from} on a boundary-layer grid.
    HalfLine { x: f64, from: f64 },
}

fn node_of(c: f64, h: f64, n: usize, what: &str) -> Result<usize> {
    let r = c / h;
    let k = r.round();
    if k < 0.0 || k > n as f64 || (r - k).abs() > 1e-9 * (1.0 + r.abs()) {
        return Err(Error::OffGrid(format!("{what} = {c} is not a grid line")));
    }
    Ok(k as usize)
}

pub fn integrate(f: &Field2D, region: Region) -> Result<f64> {
    let g = &f.grid;
    let (nx, n2, hx, h2) = (g.nx(), g.n2(), g.hx(), g.h2());
    match region {
        Region::Full => {
            let wx = trapezoid_weights(nx, hx);
            let wy = trapezoid_weights(n2, h2);
            let mut s = 0.0;
            for (j, wj) in wy.iter().enumerate() {
                let row = f.row(j);
                let r: f64 = row.iter().zip(&wx).map(|(v, w)| v * w).sum();
                s += wj * r;
            }
            Ok(s)
        }
        Region::LineX(c) => {
            let i = node_of(c, hx, nx, "x")?;
            Ok(trapz(&f.column(i), h2))
        }
        Region::LineY(c) => {
            let j = node_of(c, h2, n2, "y")?;
            Ok(trapz(f.row(j), hx))
        }
        Region::HalfLine { x, from } => {
            if g.layer().is_none() {
                return Err(Error::Dimension("half-line integrals need a boundary-layer grid".into()));
            }
            let i = node_of(x, hx, nx, "x")?;
            let k = node_of(from, h2, n2, "Y")?;
            let col = f.column(i);
            if k == n2 {
                return Ok(0.0);
            }
            Ok(trapz(&col[k..], h2))
        }
    }
}

/// Linear interpolation of samples on a uniform line `0, h, ..., n h`; zero beyond the end.
pub fn interp_uniform(f: &[f64], h: f64, t: f64) -> f64 {
    let n = f.len() - 1;
    if t <= 0.0 {
        return f[0];
    }
    let r = t / h;
    let k = r.floor() as usize;
    if k >= n {
        return if (r - n as f64).abs() < 1e-9 { f[n] } else { 0.0 };
    }
    let a = r - k as f64;
    if a < 1e-9 {
        return f[k];
    }
    if a > 1.0 - 1e-9 {
        return f[k + 1];
    }
    (1.0 - a) * f[k] + a * f[k + 1]
}
