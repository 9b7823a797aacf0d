//! Reference shape functions on one cell with local coordinates `ξ ∈ [0,1]^d`
//! and physical widths `h`.
//!
//! Edge functions are normalised so that the degree of freedom is the
//! tangential line integral: `φ_e = ψ(other coordinates) / h_dir · e_dir`.

use crate::mesh::{local_edge, local_edges, local_nodes};
use crate::scalar::{cross3, Real, Vec3};

#[inline]
fn hat<T: Real>(bit: usize, t: T) -> T {
    if bit == 0 {
        T::one() - t
    } else {
        t
    }
}

#[inline]
fn dhat<T: Real>(bit: usize) -> T {
    if bit == 0 {
        -T::one()
    } else {
        T::one()
    }
}

#[inline]
fn node_bits(l: usize) -> [usize; 3] {
    [l & 1, (l >> 1) & 1, (l >> 2) & 1]
}

/// Multilinear nodal function of local node `l`.
pub fn q1_value<T: Real>(dim: usize, l: usize, xi: &Vec3<T>) -> T {
    let b = node_bits(l);
    (0..dim).fold(T::one(), |acc, a| acc * hat(b[a], xi[a]))
}

/// Physical gradient of local nodal function `l`.
pub fn q1_grad<T: Real>(dim: usize, l: usize, xi: &Vec3<T>, h: &Vec3<T>) -> Vec3<T> {
    let b = node_bits(l);
    let mut g = [T::zero(); 3];
    for (a, ga) in g.iter_mut().enumerate().take(dim) {
        let mut v = dhat::<T>(b[a]) / h[a];
        for c in (0..dim).filter(|&c| c != a) {
            v *= hat(b[c], xi[c]);
        }
        *ga = v;
    }
    g
}

/// Value of local edge function `e`.
pub fn edge_value<T: Real>(dim: usize, e: usize, xi: &Vec3<T>, h: &Vec3<T>) -> Vec3<T> {
    let (dir, off) = local_edge(dim, e);
    let psi = (0..dim).filter(|&b| b != dir).fold(T::one(), |acc, b| acc * hat(off[b], xi[b]));
    let mut v = [T::zero(); 3];
    v[dir] = psi / h[dir];
    v
}

/// Curl of local edge function `e`; in 2D the scalar curl is stored in component 0.
pub fn edge_curl<T: Real>(dim: usize, e: usize, xi: &Vec3<T>, h: &Vec3<T>) -> Vec3<T> {
    let (dir, off) = local_edge(dim, e);
    if dim == 2 {
        let c = if dir == 0 {
            -dhat::<T>(off[1]) / (h[0] * h[1])
        } else {
            dhat::<T>(off[0]) / (h[0] * h[1])
        };
        return [c, T::zero(), T::zero()];
    }
    let mut grad = [T::zero(); 3];
    for b in (0..3).filter(|&b| b != dir) {
        let mut v = dhat::<T>(off[b]) / h[b];
        for c in (0..3).filter(|&c| c != dir && c != b) {
            v *= hat(off[c], xi[c]);
        }
        grad[b] = v;
    }
    let mut unit = [T::zero(); 3];
    unit[dir] = T::one() / h[dir];
    cross3(&grad, &unit)
}

/// Value and curl of the edge field with local coefficients `dofs`.
pub fn edge_field<T: Real>(dim: usize, dofs: &[T], xi: &Vec3<T>, h: &Vec3<T>) -> (Vec3<T>, Vec3<T>) {
    let mut v = [T::zero(); 3];
    let mut c = [T::zero(); 3];
    for (e, &d) in dofs.iter().enumerate().take(local_edges(dim)) {
        if d == T::zero() {
            continue;
        }
        let ve = edge_value(dim, e, xi, h);
        let ce = edge_curl(dim, e, xi, h);
        for k in 0..3 {
            v[k] += d * ve[k];
            c[k] += d * ce[k];
        }
    }
    (v, c)
}

/// Physical derivatives of an edge field: `(∂_a u_k, ∂_a (curl u)_k)`
/// indexed `[k][a]`. The 2D curl is constant on a cell.
pub fn edge_field_gradients<T: Real>(dim: usize, dofs: &[T], xi: &Vec3<T>, h: &Vec3<T>) -> ([[T; 3]; 3], [[T; 3]; 3]) {
    let mut du = [[T::zero(); 3]; 3];
    let mut dc = [[T::zero(); 3]; 3];
    for (e, &d) in dofs.iter().enumerate().take(local_edges(dim)) {
        if d == T::zero() {
            continue;
        }
        let (dir, off) = local_edge(dim, e);
        for a in (0..dim).filter(|&a| a != dir) {
            let mut v = dhat::<T>(off[a]) / h[a];
            for c in (0..dim).filter(|&c| c != dir && c != a) {
                v *= hat(off[c], xi[c]);
            }
            du[dir][a] += d * v / h[dir];
        }
        if dim == 3 {
            let mut unit = [T::zero(); 3];
            unit[dir] = T::one() / h[dir];
            for c in (0..3).filter(|&c| c != dir) {
                let mut dgrad = [T::zero(); 3];
                for b in (0..3).filter(|&b| b != dir && b != c) {
                    dgrad[b] = dhat::<T>(off[b]) / h[b] * dhat::<T>(off[c]) / h[c];
                }
                let cc = cross3(&dgrad, &unit);
                for k in 0..3 {
                    dc[k][c] += d * cc[k];
                }
            }
        }
    }
    (du, dc)
}

/// Value and physical gradient of the nodal field with local values `vals`.
pub fn q1_field<T: Real>(dim: usize, vals: &[T], xi: &Vec3<T>, h: &Vec3<T>) -> (T, Vec3<T>) {
    let mut v = T::zero();
    let mut g = [T::zero(); 3];
    for (l, &d) in vals.iter().enumerate().take(local_nodes(dim)) {
        v += d * q1_value(dim, l, xi);
        let gl = q1_grad(dim, l, xi, h);
        for k in 0..3 {
            g[k] += d * gl[k];
        }
    }
    (v, g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::quadrature::gauss_legendre;

    fn tangential_integral(dim: usize, e: usize, f: usize, h: &Vec3<f64>) -> f64 {
        // ∫ φ_e · t over edge f, with 3-point Gauss along the edge
        let (dir, off) = local_edge(dim, f);
        let (p, w) = gauss_legendre::<f64>(3);
        let mut s = 0.0;
        for (t, wt) in p.iter().zip(&w) {
            let mut xi = [off[0] as f64, off[1] as f64, off[2] as f64];
            xi[dir] = *t;
            s += wt * h[dir] * edge_value(dim, e, &xi, h)[dir];
        }
        s
    }

    #[test]
    fn edge_dofs_are_kronecker() {
        for dim in [2, 3] {
            let h = [0.5, 0.25, 0.125];
            for e in 0..local_edges(dim) {
                for f in 0..local_edges(dim) {
                    let v = tangential_integral(dim, e, f, &h);
                    let expect = if e == f { 1.0 } else { 0.0 };
                    assert!((v - expect).abs() < 1e-14, "dim {dim} e {e} f {f}: {v}");
                }
            }
        }
    }

    #[test]
    fn curls_2d_signs() {
        let h = [1.0, 1.0, 1.0];
        let xi = [0.3, 0.6, 0.0];
        let c: Vec<f64> = (0..4).map(|e| edge_curl(2, e, &xi, &h)[0]).collect();
        assert_eq!(c, vec![1.0, -1.0, -1.0, 1.0]);
    }

    #[test]
    fn stokes_on_the_cell_3d() {
        // ∫_cell curl φ_e = ∮ n × φ_e, checked against a finite difference curl
        let h = [0.5, 0.25, 0.2];
        let xi = [0.3, 0.6, 0.45];
        let d = 1e-6;
        for e in 0..12 {
            let mut jac = [[0.0_f64; 3]; 3];
            for a in 0..3 {
                let mut xp = xi;
                let mut xm = xi;
                xp[a] += d;
                xm[a] -= d;
                let vp = edge_value(3, e, &xp, &h);
                let vm = edge_value(3, e, &xm, &h);
                for k in 0..3 {
                    jac[k][a] = (vp[k] - vm[k]) / (2.0 * d * h[a]);
                }
            }
            let fd = [jac[2][1] - jac[1][2], jac[0][2] - jac[2][0], jac[1][0] - jac[0][1]];
            let c = edge_curl(3, e, &xi, &h);
            for k in 0..3 {
                assert!((fd[k] - c[k]).abs() < 1e-6, "edge {e} comp {k}: {} vs {}", fd[k], c[k]);
            }
        }
    }

    #[test]
    fn q1_partition_of_unity() {
        let xi = [0.2, 0.7, 0.4];
        let h = [0.5, 0.5, 0.5];
        for dim in [2, 3] {
            let s: f64 = (0..local_nodes(dim)).map(|l| q1_value(dim, l, &xi)).sum();
            assert!((s - 1.0).abs() < 1e-15);
            let mut g = [0.0; 3];
            for l in 0..local_nodes(dim) {
                let gl = q1_grad(dim, l, &xi, &h);
                for k in 0..3 {
                    g[k] += gl[k];
                }
            }
            assert!(g.iter().all(|v| v.abs() < 1e-15));
        }
    }

    #[test]
    fn edge_gradients_match_finite_differences() {
        for dim in [2, 3] {
            let h = [0.5, 0.25, 0.2];
            let dofs: Vec<f64> = (0..local_edges(dim)).map(|e| 0.3 + (e as f64 * 0.71).sin()).collect();
            let xi = [0.3, 0.6, 0.45];
            let (du, dc) = edge_field_gradients(dim, &dofs, &xi, &h);
            let step = 1e-6;
            for a in 0..dim {
                let mut p = xi;
                let mut m = xi;
                p[a] += step;
                m[a] -= step;
                let (vp, cp) = edge_field(dim, &dofs, &p, &h);
                let (vm, cm) = edge_field(dim, &dofs, &m, &h);
                for k in 0..3 {
                    let fd_u = (vp[k] - vm[k]) / (2.0 * step * h[a]);
                    let fd_c = (cp[k] - cm[k]) / (2.0 * step * h[a]);
                    assert!((du[k][a] - fd_u).abs() < 1e-6, "dim {dim} u{k},{a}");
                    assert!((dc[k][a] - fd_c).abs() < 1e-6, "dim {dim} c{k},{a}");
                }
            }
        }
    }
}
