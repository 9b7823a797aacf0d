//! Global assembly of nodal stiffness, edge curl-curl and edge mass matrices.
//!
//! Element matrices are computed on the upper triangle and mirrored, and
//! cells are scattered in index order, so every assembled matrix is
//! symmetric bit for bit and reproducible.

use std::sync::Arc;

use super::element::{edge_curl, edge_value, q1_grad};
use super::quadrature::TensorRule;
use super::sparse::{CsrMatrix, CsrPattern};
use super::{Constraints, Nullspace, SparseSymSystem};
use crate::error::Result;
use crate::mesh::{local_edges, local_nodes, CellMesh, Grid};
use crate::scalar::{dot3, Real, Vec3};
use crate::tensor::SymMat;

type Local<T> = [[T; 12]; 12];

/// Sparsity of nodal unknowns on a periodic cell mesh.
pub fn nodal_pattern<T: Real>(mesh: &CellMesh<T>) -> Arc<CsrPattern> {
    let nl = local_nodes(mesh.dim());
    Arc::new(CsrPattern::from_cells(mesh.num_nodes(), mesh.num_cells(), |c, out| {
        out.extend_from_slice(&mesh.cell_nodes(c)[..nl]);
    }))
}

/// Sparsity of edge unknowns; eliminated edges are skipped.
pub fn edge_pattern<T: Real, G: Grid<T>>(mesh: &G) -> Arc<CsrPattern> {
    let ne = local_edges(mesh.dim());
    Arc::new(CsrPattern::from_cells(mesh.num_edge_dofs(), mesh.num_cells(), |c, out| {
        out.extend(mesh.cell_edges(c)[..ne].iter().filter_map(|&e| mesh.edge_dof(e)));
    }))
}

fn physical<T: Real>(origin: &Vec3<T>, xi: &Vec3<T>, h: &Vec3<T>) -> Vec3<T> {
    [origin[0] + xi[0] * h[0], origin[1] + xi[1] * h[1], origin[2] + xi[2] * h[2]]
}

fn widths<T: Real, G: Grid<T>>(mesh: &G) -> Vec3<T> {
    let mut h = [T::one(); 3];
    for (a, v) in h.iter_mut().enumerate().take(mesh.dim()) {
        *v = mesh.h(a);
    }
    h
}

fn mirror<T: Real>(k: &mut Local<T>, n: usize) {
    for i in 0..n {
        for j in 0..i {
            k[i][j] = k[j][i];
        }
    }
}

fn scatter_edges<T: Real, G: Grid<T>>(
    mesh: &G,
    pattern: Arc<CsrPattern>,
    mut element: impl FnMut(usize, &Vec3<T>, &mut Local<T>) -> Result<()>,
) -> Result<CsrMatrix<T>> {
    let ne = local_edges(mesh.dim());
    let mut a = CsrMatrix::zeros(pattern);
    let mut k = [[T::zero(); 12]; 12];
    for c in 0..mesh.num_cells() {
        let origin = mesh.cell_origin(c);
        for row in k.iter_mut() {
            row.iter_mut().for_each(|v| *v = T::zero());
        }
        element(c, &origin, &mut k)?;
        mirror(&mut k, ne);
        let edges = mesh.cell_edges(c);
        let dofs: Vec<Option<usize>> = edges[..ne].iter().map(|&e| mesh.edge_dof(e)).collect();
        for i in 0..ne {
            let Some(di) = dofs[i] else { continue };
            for j in 0..ne {
                if let Some(dj) = dofs[j] {
                    a.add(di, dj, k[i][j]);
                }
            }
        }
    }
    Ok(a)
}

/// `∫_Y b ∇φᵢ·∇φⱼ` with multilinear nodal elements; `coef` receives cell points.
pub fn assemble_scalar_stiffness<T: Real>(
    mesh: &CellMesh<T>,
    coef: impl Fn(&Vec3<T>) -> Result<SymMat<T>>,
    qpts: usize,
) -> Result<SparseSymSystem<T>> {
    let dim = mesh.dim();
    let nl = local_nodes(dim);
    let h = widths(mesh);
    let vol = mesh.cell_volume();
    let rule = TensorRule::<T>::new(dim, qpts);
    let grads: Vec<Vec<Vec3<T>>> =
        rule.points.iter().map(|xi| (0..nl).map(|l| q1_grad(dim, l, xi, &h)).collect()).collect();
    let mut a = CsrMatrix::zeros(nodal_pattern(mesh));
    let mut k = [[T::zero(); 12]; 12];
    for c in 0..mesh.num_cells() {
        let origin = mesh.cell_origin(c);
        for row in k.iter_mut() {
            row.iter_mut().for_each(|v| *v = T::zero());
        }
        for (q, xi) in rule.points.iter().enumerate() {
            let b = coef(&physical(&origin, xi, &h))?;
            let w = rule.weights[q] * vol;
            for i in 0..nl {
                let bg = b.mul_vec(&grads[q][i]);
                for j in i..nl {
                    k[i][j] += w * dot3(&bg, &grads[q][j]);
                }
            }
        }
        mirror(&mut k, nl);
        let nodes = mesh.cell_nodes(c);
        for i in 0..nl {
            for j in 0..nl {
                a.add(nodes[i], nodes[j], k[i][j]);
            }
        }
    }
    Ok(SparseSymSystem { matrix: a, nullspace: Nullspace::Constants, constraints: Constraints::Periodic })
}

/// `∫ a curl φᵢ · curl φⱼ` with lowest-order edge elements.
///
/// In 2D the discrete curl is constant on each cell, and the coefficient is
/// taken at the cell centre; in 3D a `qpts`-point Gauss product rule is used.
pub fn assemble_curl_stiffness<T: Real, G: Grid<T>>(
    mesh: &G,
    coef: impl Fn(&Vec3<T>) -> Result<SymMat<T>>,
    qpts: usize,
    periodic: bool,
) -> Result<SparseSymSystem<T>> {
    let m = assemble_curl_matrix(mesh, edge_pattern(mesh), coef, qpts)?;
    Ok(edge_system(mesh, m, periodic))
}

pub(crate) fn edge_system<T: Real, G: Grid<T>>(mesh: &G, matrix: CsrMatrix<T>, periodic: bool) -> SparseSymSystem<T> {
    if periodic {
        SparseSymSystem {
            matrix,
            nullspace: Nullspace::DiscreteGradients { dim: mesh.dim(), n: mesh.n() },
            constraints: Constraints::Periodic,
        }
    } else {
        SparseSymSystem {
            matrix,
            nullspace: Nullspace::None,
            constraints: Constraints::EssentialBoundary { eliminated: mesh.num_edges() - mesh.num_edge_dofs() },
        }
    }
}

pub(crate) fn assemble_curl_matrix<T: Real, G: Grid<T>>(
    mesh: &G,
    pattern: Arc<CsrPattern>,
    coef: impl Fn(&Vec3<T>) -> Result<SymMat<T>>,
    qpts: usize,
) -> Result<CsrMatrix<T>> {
    let dim = mesh.dim();
    let ne = local_edges(dim);
    let h = widths(mesh);
    let vol = mesh.cell_volume();
    let rule = if dim == 2 {
        TensorRule { points: vec![[T::lit(0.5), T::lit(0.5), T::zero()]], weights: vec![T::one()] }
    } else {
        TensorRule::<T>::new(dim, qpts)
    };
    let curls: Vec<Vec<Vec3<T>>> =
        rule.points.iter().map(|xi| (0..ne).map(|e| edge_curl(dim, e, xi, &h)).collect()).collect();
    scatter_edges(mesh, pattern, |_, origin, k| {
        for (q, xi) in rule.points.iter().enumerate() {
            let a = coef(&physical(origin, xi, &h))?;
            let w = rule.weights[q] * vol;
            for i in 0..ne {
                let ac = a.mul_vec(&curls[q][i]);
                for j in i..ne {
                    k[i][j] += w * dot3(&ac, &curls[q][j]);
                }
            }
        }
        Ok(())
    })
}

/// `∫ b φᵢ·φⱼ` with lowest-order edge elements.
pub fn assemble_vector_mass<T: Real, G: Grid<T>>(
    mesh: &G,
    coef: impl Fn(&Vec3<T>) -> Result<SymMat<T>>,
    qpts: usize,
    periodic: bool,
) -> Result<SparseSymSystem<T>> {
    let m = assemble_mass_matrix(mesh, edge_pattern(mesh), coef, qpts)?;
    let mut s = edge_system(mesh, m, periodic);
    s.nullspace = Nullspace::None;
    Ok(s)
}

pub(crate) fn assemble_mass_matrix<T: Real, G: Grid<T>>(
    mesh: &G,
    pattern: Arc<CsrPattern>,
    coef: impl Fn(&Vec3<T>) -> Result<SymMat<T>>,
    qpts: usize,
) -> Result<CsrMatrix<T>> {
    let dim = mesh.dim();
    let ne = local_edges(dim);
    let h = widths(mesh);
    let vol = mesh.cell_volume();
    let rule = TensorRule::<T>::new(dim, qpts);
    let vals: Vec<Vec<Vec3<T>>> =
        rule.points.iter().map(|xi| (0..ne).map(|e| edge_value(dim, e, xi, &h)).collect()).collect();
    scatter_edges(mesh, pattern, |_, origin, k| {
        for (q, xi) in rule.points.iter().enumerate() {
            let b = coef(&physical(origin, xi, &h))?;
            let w = rule.weights[q] * vol;
            for i in 0..ne {
                let bv = b.mul_vec(&vals[q][i]);
                for j in i..ne {
                    k[i][j] += w * dot3(&bv, &vals[q][j]);
                }
            }
        }
        Ok(())
    })
}

/// Load vector `Fᵢ = ∫ f·φᵢ` over the edge unknowns.
pub fn assemble_edge_load<T: Real, G: Grid<T>>(mesh: &G, f: impl Fn(&Vec3<T>) -> Vec3<T>, qpts: usize) -> Vec<T> {
    let dim = mesh.dim();
    let ne = local_edges(dim);
    let h = widths(mesh);
    let vol = mesh.cell_volume();
    let rule = TensorRule::<T>::new(dim, qpts);
    let vals: Vec<Vec<Vec3<T>>> =
        rule.points.iter().map(|xi| (0..ne).map(|e| edge_value(dim, e, xi, &h)).collect()).collect();
    let mut out = vec![T::zero(); mesh.num_edge_dofs()];
    for c in 0..mesh.num_cells() {
        let origin = mesh.cell_origin(c);
        let edges = mesh.cell_edges(c);
        let mut local = [T::zero(); 12];
        for (q, xi) in rule.points.iter().enumerate() {
            let fx = f(&physical(&origin, xi, &h));
            let w = rule.weights[q] * vol;
            for (e, l) in local.iter_mut().enumerate().take(ne) {
                *l += w * dot3(&fx, &vals[q][e]);
            }
        }
        for e in 0..ne {
            if let Some(d) = mesh.edge_dof(edges[e]) {
                out[d] += local[e];
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::DomainMesh;

    fn one<T: Real>(d: usize) -> impl Fn(&Vec3<T>) -> Result<SymMat<T>> {
        move |_| Ok(SymMat::identity(d))
    }

    #[test]
    fn periodic_q1_laplacian_matches_hand_assembly() {
        let mesh = CellMesh::<f64>::new(2, 2).unwrap();
        let s = assemble_scalar_stiffness(&mesh, one(2), 2).unwrap();
        let a = s.matrix.to_dense();
        // node (0,0): diagonal 8/3, x/y neighbours -2/3 each, diagonal neighbour -4/3
        let ids = |i: i64, j: i64| mesh.node_id([i, j, 0]);
        let d = &a[ids(0, 0)];
        assert!((d[ids(0, 0)] - 8.0 / 3.0).abs() < 1e-14);
        assert!((d[ids(1, 0)] + 2.0 / 3.0).abs() < 1e-14);
        assert!((d[ids(0, 1)] + 2.0 / 3.0).abs() < 1e-14);
        assert!((d[ids(1, 1)] + 4.0 / 3.0).abs() < 1e-14);
        for row in &a {
            assert!(row.iter().sum::<f64>().abs() < 1e-14);
        }
        assert!(s.matrix.is_symmetric());
        let s2 = assemble_scalar_stiffness(&mesh, |_| Ok(SymMat::scalar(2, 2.0)), 2).unwrap();
        assert_eq!(s2.matrix.values(), s.matrix.scaled(2.0).values());
    }

    #[test]
    fn single_periodic_cell_curl_matrix_vanishes() {
        // both x-edges of the only cell are the same unknown, with opposite curls
        let mesh = CellMesh::<f64>::new(2, 1).unwrap();
        let s = assemble_curl_stiffness(&mesh, one(1), 2, true).unwrap();
        assert_eq!(s.matrix.to_dense(), vec![vec![0.0, 0.0], vec![0.0, 0.0]]);
    }

    #[test]
    fn single_domain_cell_curl_matrix() {
        // one cell with h = 1: curls (+1, -1, -1, +1)
        let mesh = DomainMesh::<f64>::unit(2, 1).unwrap();
        assert_eq!(mesh.num_edge_dofs(), 0);
        let s = assemble_curl_stiffness(&mesh, one(1), 2, false).unwrap();
        assert_eq!(s.matrix.n(), 0);
        let mesh = CellMesh::<f64>::new(2, 2).unwrap();
        let s = assemble_curl_stiffness(&mesh, one(1), 2, true).unwrap();
        let twice = assemble_curl_stiffness(&mesh, |_| Ok(SymMat::scalar(1, 2.0)), 2, true).unwrap();
        assert_eq!(twice.matrix.values(), s.matrix.scaled(2.0).values());
        // curl of an edge: two cells, each contributing (1/h²)² h² = 4
        for i in 0..s.matrix.n() {
            assert!((s.matrix.get(i, i) - 8.0).abs() < 1e-13);
        }
    }

    #[test]
    fn domain_mass_is_positive() {
        let mesh = DomainMesh::<f64>::unit(3, 2).unwrap();
        let m = assemble_vector_mass(&mesh, one(3), 2, false).unwrap();
        assert!(m.matrix.is_symmetric());
        let x: Vec<f64> = (0..m.matrix.n()).map(|i| (i as f64 * 0.37).sin()).collect();
        assert!(crate::scalar::dot(&x, &m.matrix.mul(&x)) > 0.0);
    }

    #[test]
    fn load_of_constant_field() {
        // ∫ e_x · φ_e over the unit square equals the x-extent share of edge e
        let mesh = DomainMesh::<f64>::unit(2, 4).unwrap();
        let f = assemble_edge_load(&mesh, |_| [1.0, 0.0, 0.0], 2);
        for (k, &e) in mesh.interior_edges().iter().enumerate() {
            let (dir, _) = mesh.edge_start(e);
            let expect = if dir == 0 { 0.25 } else { 0.0 };
            assert!((f[k] - expect).abs() < 1e-14);
        }
    }
}
