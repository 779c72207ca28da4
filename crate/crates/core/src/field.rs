//! Sampled function values on 1-D and 2-D grids with symmetry flags.

use crate::numerics::Grid1D;

/// Parity of a sampled field under reflection of one coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symmetry {
    Even,
    Odd,
    None,
}

/// Function samples on a 1-D grid.
#[derive(Debug, Clone)]
pub struct Field1D {
    pub grid: Grid1D,
    pub values: Vec<f64>,
    pub symmetry: Symmetry,
}

impl Field1D {
    pub fn new(grid: Grid1D, values: Vec<f64>, symmetry: Symmetry) -> Self {
        assert_eq!(values.len(), grid.n(), "field/grid size mismatch");
        Field1D { grid, values, symmetry }
    }

    pub fn from_fn(grid: Grid1D, symmetry: Symmetry, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.nodes().iter().map(|&x| f(x)).collect();
        Field1D::new(grid, values, symmetry)
    }

    /// Linear interpolation, honoring the symmetry flag for de-reflected
    /// arguments left of the grid when the grid starts at 0.
    pub fn interp_linear(&self, x: f64) -> f64 {
        let x = self.reflected_arg(x);
        let i = self.grid.cell_of(x);
        let nodes = self.grid.nodes();
        let t = (x - nodes[i]) / (nodes[i + 1] - nodes[i]);
        let t = t.clamp(0.0, 1.0);
        let v = self.values[i] * (1.0 - t) + self.values[i + 1] * t;
        self.sign_for(x) * v
    }

    fn reflected_arg(&self, x: f64) -> f64 {
        if x < self.grid.lower && self.grid.lower == 0.0 && self.symmetry != Symmetry::None {
            -x
        } else {
            x
        }
    }

    fn sign_for(&self, _x: f64) -> f64 {
        1.0
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Function samples on a tensor-product (X, Z) grid, row-major in Z.
#[derive(Debug, Clone)]
pub struct Field2D {
    pub xgrid: Grid1D,
    pub zgrid: Grid1D,
    /// values[jz * nx + ix]
    pub values: Vec<f64>,
    pub sym_x: Symmetry,
    pub sym_z: Symmetry,
}

impl Field2D {
    pub fn new(xgrid: Grid1D, zgrid: Grid1D, values: Vec<f64>, sym_x: Symmetry, sym_z: Symmetry) -> Self {
        assert_eq!(values.len(), xgrid.n() * zgrid.n());
        Field2D { xgrid, zgrid, values, sym_x, sym_z }
    }

    pub fn from_fn(
        xgrid: Grid1D,
        zgrid: Grid1D,
        sym_x: Symmetry,
        sym_z: Symmetry,
        f: impl Fn(f64, f64) -> f64,
    ) -> Self {
        let nx = xgrid.n();
        let mut values = Vec::with_capacity(nx * zgrid.n());
        for &z in zgrid.nodes() {
            for &x in xgrid.nodes() {
                values.push(f(x, z));
            }
        }
        Field2D::new(xgrid, zgrid, values, sym_x, sym_z)
    }

    pub fn at(&self, ix: usize, jz: usize) -> f64 {
        self.values[jz * self.xgrid.n() + ix]
    }

    pub fn at_mut(&mut self, ix: usize, jz: usize) -> &mut f64 {
        let nx = self.xgrid.n();
        &mut self.values[jz * nx + ix]
    }

    pub fn row(&self, jz: usize) -> &[f64] {
        let nx = self.xgrid.n();
        &self.values[jz * nx..(jz + 1) * nx]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Re-imposes the declared parities exactly, assuming grids symmetric
    /// about 0 with the origin as a node.
    pub fn resymmetrize(&mut self) {
        let nx = self.xgrid.n();
        let nz = self.zgrid.n();
        if self.sym_x != Symmetry::None {
            let sign = if self.sym_x == Symmetry::Odd { -1.0 } else { 1.0 };
            for jz in 0..nz {
                for ix in 0..nx / 2 {
                    let mirror = nx - 1 - ix;
                    let a = self.at(ix, jz);
                    let b = self.at(mirror, jz);
                    let sym = 0.5 * (a + sign * b);
                    *self.at_mut(ix, jz) = sym;
                    *self.at_mut(mirror, jz) = sign * sym;
                }
                if self.sym_x == Symmetry::Odd && nx % 2 == 1 {
                    *self.at_mut(nx / 2, jz) = 0.0;
                }
            }
        }
        if self.sym_z != Symmetry::None {
            let sign = if self.sym_z == Symmetry::Odd { -1.0 } else { 1.0 };
            for jz in 0..nz / 2 {
                let mirror = nz - 1 - jz;
                for ix in 0..nx {
                    let a = self.at(ix, jz);
                    let b = self.at(ix, mirror);
                    let sym = 0.5 * (a + sign * b);
                    *self.at_mut(ix, jz) = sym;
                    *self.at_mut(ix, mirror) = sign * sym;
                }
            }
            if self.sym_z == Symmetry::Odd && nz % 2 == 1 {
                for ix in 0..nx {
                    *self.at_mut(ix, nz / 2) = 0.0;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resymmetrize_odd_even() {
        let xg = Grid1D::uniform(-2.0, 2.0, 5);
        let zg = Grid1D::uniform(-1.0, 1.0, 5);
        let mut f = Field2D::from_fn(xg, zg, Symmetry::Odd, Symmetry::Even, |x, z| {
            x + 0.1 * z + 0.01 * x * x
        });
        f.resymmetrize();
        let nx = f.xgrid.n();
        let nz = f.zgrid.n();
        for jz in 0..nz {
            for ix in 0..nx {
                let v = f.at(ix, jz);
                let vx = f.at(nx - 1 - ix, jz);
                let vz = f.at(ix, nz - 1 - jz);
                assert_eq!(v, -vx);
                assert_eq!(v, vz);
            }
        }
        assert_eq!(f.at(2, 1), 0.0);
    }

    #[test]
    fn field1d_interp_even_reflection() {
        let g = Grid1D::uniform(0.0, 4.0, 9);
        let f = Field1D::from_fn(g, Symmetry::Even, |y| y * y);
        assert!((f.interp_linear(-1.0) - f.interp_linear(1.0)).abs() < 1e-15);
    }
}
