//! Closed-form initial data and forcings addressable by name.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::Vec3;
use crate::wave::{Forcing, VectorFn, WaveData};

/// Names accepted for `g0` and `g1`.
pub const FIELDS: &[&str] = &["zero", "cavity", "benchmark"];

/// Names accepted for the forcing.
pub const FORCINGS: &[&str] = &["zero", "smooth"];

/// `(−cos πx sin πy, sin πx cos πy)`, times `sin πz` in 3D with a zero third
/// component. Divergence free with vanishing tangential trace; for unit
/// coefficients it oscillates with `ω² = dπ²`.
pub fn cavity_mode(dim: usize, x: &Vec3<f64>) -> Vec3<f64> {
    let (sx, cx) = (PI * x[0]).sin_cos();
    let (sy, cy) = (PI * x[1]).sin_cos();
    let sz = if dim == 3 { (PI * x[2]).sin() } else { 1.0 };
    [-cx * sy * sz, sx * cy * sz, 0.0]
}

/// `(−½ cos πx sin πy, 3/2 sin πx cos πy)`, times `sin πz` in 3D.
pub fn benchmark_velocity(dim: usize, x: &Vec3<f64>) -> Vec3<f64> {
    let (sx, cx) = (PI * x[0]).sin_cos();
    let (sy, cy) = (PI * x[1]).sin_cos();
    let sz = if dim == 3 { (PI * x[2]).sin() } else { 1.0 };
    [-0.5 * cx * sy * sz, 1.5 * sx * cy * sz, 0.0]
}

/// Spatial part of the `smooth` forcing: `(sin πy, sin πx)` in 2D and
/// `(sin πy sin πz, sin πz sin πx, sin πx sin πy)` in 3D.
pub fn smooth_load(dim: usize, x: &Vec3<f64>) -> Vec3<f64> {
    let s = [(PI * x[0]).sin(), (PI * x[1]).sin(), (PI * x[2]).sin()];
    if dim == 2 {
        [s[1], s[0], 0.0]
    } else {
        [s[1] * s[2], s[2] * s[0], s[0] * s[1]]
    }
}

pub fn field(name: &str, dim: usize) -> Result<VectorFn<f64>> {
    Ok(match name {
        "zero" => Arc::new(|_: &Vec3<f64>| [0.0; 3]),
        "cavity" => Arc::new(move |x: &Vec3<f64>| cavity_mode(dim, x)),
        "benchmark" => Arc::new(move |x: &Vec3<f64>| benchmark_velocity(dim, x)),
        _ => return Err(Error::Config(format!("unknown field `{name}`"))),
    })
}

/// `smooth` is `cos(πt)` times [`smooth_load`].
pub fn forcing(name: &str, dim: usize) -> Result<Forcing<f64>> {
    Ok(match name {
        "zero" => Forcing::Zero,
        "smooth" => Forcing::Separable {
            theta: Arc::new(|t: f64| (PI * t).cos()),
            field: Arc::new(move |x: &Vec3<f64>| smooth_load(dim, x)),
        },
        _ => return Err(Error::Config(format!("unknown forcing `{name}`"))),
    })
}

pub fn wave_data(g0: &str, g1: &str, forcing_name: &str, dim: usize) -> Result<WaveData<f64>> {
    Ok(WaveData { g0: field(g0, dim)?, g1: field(g1, dim)?, forcing: forcing(forcing_name, dim)? })
}
