//! Manufactured Stokes solutions on the unit square and the unit cube.

use std::f64::consts::PI;

use crate::mesh::Point;

/// An exact solution `(u, p)` with `f = -nu lap u + grad p` and `g = u`.
#[derive(Clone, Copy, Debug)]
pub struct ManufacturedCase {
    pub name: &'static str,
    pub dim: usize,
    pub nu: f64,
    u: fn(&Point) -> [f64; 3],
    lap_u: fn(&Point) -> [f64; 3],
    p: fn(&Point) -> f64,
    grad_p: fn(&Point) -> [f64; 3],
}

impl ManufacturedCase {
    /// A case from closed-form `u`, `lap u`, `p` and `grad p`.
    pub fn new(
        name: &'static str,
        dim: usize,
        nu: f64,
        u: fn(&Point) -> [f64; 3],
        lap_u: fn(&Point) -> [f64; 3],
        p: fn(&Point) -> f64,
        grad_p: fn(&Point) -> [f64; 3],
    ) -> Self {
        Self {
            name,
            dim,
            nu,
            u,
            lap_u,
            p,
            grad_p,
        }
    }

    pub fn u(&self, x: &Point) -> [f64; 3] {
        (self.u)(x)
    }

    pub fn p(&self, x: &Point) -> f64 {
        (self.p)(x)
    }

    pub fn grad_p(&self, x: &Point) -> [f64; 3] {
        (self.grad_p)(x)
    }

    pub fn f(&self, x: &Point) -> [f64; 3] {
        let l = (self.lap_u)(x);
        let g = (self.grad_p)(x);
        [
            -self.nu * l[0] + g[0],
            -self.nu * l[1] + g[1],
            -self.nu * l[2] + g[2],
        ]
    }

    /// Dirichlet data.
    pub fn g(&self, x: &Point) -> [f64; 3] {
        (self.u)(x)
    }

    /// The same solution with another viscosity.
    pub fn with_nu(mut self, nu: f64) -> Self {
        self.nu = nu;
        self
    }

    /// Characteristic size of `u` used for oracle tolerances.
    pub fn velocity_scale(&self) -> f64 {
        if self.dim == 2 {
            2.0 * PI
        } else {
            1.0
        }
    }
}

fn p_common(x: &Point) -> f64 {
    ((4.0 * PI * x[0]).cos() - (4.0 * PI * x[1]).cos()) / 4.0
}

fn grad_p_common(x: &Point) -> [f64; 3] {
    [
        -PI * (4.0 * PI * x[0]).sin(),
        PI * (4.0 * PI * x[1]).sin(),
        0.0,
    ]
}

fn u_2d(x: &Point) -> [f64; 3] {
    let (sx, cx) = (2.0 * PI * x[0]).sin_cos();
    let (sy, cy) = (2.0 * PI * x[1]).sin_cos();
    [-2.0 * PI * sx * sy, -2.0 * PI * cx * cy, 0.0]
}

fn lap_u_2d(x: &Point) -> [f64; 3] {
    let u = u_2d(x);
    let s = -8.0 * PI * PI;
    [s * u[0], s * u[1], 0.0]
}

/// Curl of the stream function `-sin(2 pi x) cos(2 pi y)`.
pub fn case_2d(nu: f64) -> ManufacturedCase {
    ManufacturedCase {
        name: "unit-square",
        dim: 2,
        nu,
        u: u_2d,
        lap_u: lap_u_2d,
        p: p_common,
        grad_p: grad_p_common,
    }
}

fn u_3d(x: &Point) -> [f64; 3] {
    [x[2].sin(), -x[0].cos(), -x[1].cos()]
}

fn lap_u_3d(x: &Point) -> [f64; 3] {
    let u = u_3d(x);
    [-u[0], -u[1], -u[2]]
}

/// Curl of `(sin y, cos z, sin x)` with `nu = 1`.
pub fn case_3d() -> ManufacturedCase {
    ManufacturedCase {
        name: "unit-cube",
        dim: 3,
        nu: 1.0,
        u: u_3d,
        lap_u: lap_u_3d,
        p: p_common,
        grad_p: grad_p_common,
    }
}

pub fn case_for(dim: usize, nu: f64) -> ManufacturedCase {
    if dim == 2 {
        case_2d(nu)
    } else {
        case_3d().with_nu(nu)
    }
}
