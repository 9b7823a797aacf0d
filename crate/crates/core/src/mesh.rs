//! Uniform tensor-product grids: the periodic unit cell and the box domain.
//!
//! Local numbering inside a cell. Nodes: local index `l` has offsets
//! `(l & 1, (l >> 1) & 1, (l >> 2) & 1)`. Edges in 2D: `0` = x-edge at
//! η=0, `1` = x-edge at η=1, `2` = y-edge at ξ=0, `3` = y-edge at ξ=1.
//! Edges in 3D: x-edges over (η,ζ) ∈ {00,10,01,11}, then y-edges over
//! (ξ,ζ), then z-edges over (ξ,η). Every edge is oriented along its
//! positive axis.

use crate::error::{Error, Result};
use crate::scalar::{Real, Vec3};

/// Kind of a degree of freedom.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DofKind {
    Nodal,
    Edge,
}

/// Number of local nodes / edges of a cell.
pub const fn local_nodes(dim: usize) -> usize {
    1 << dim
}

pub const fn local_edges(dim: usize) -> usize {
    if dim == 2 {
        4
    } else {
        12
    }
}

/// Direction and start-node offset of local edge `e`.
pub fn local_edge(dim: usize, e: usize) -> (usize, [usize; 3]) {
    if dim == 2 {
        match e {
            0 => (0, [0, 0, 0]),
            1 => (0, [0, 1, 0]),
            2 => (1, [0, 0, 0]),
            _ => (1, [1, 0, 0]),
        }
    } else {
        let dir = e / 4;
        let (p, q) = (e & 1, (e >> 1) & 1);
        let mut off = [0; 3];
        let others = other_axes(dir);
        off[others[0]] = p;
        off[others[1]] = q;
        (dir, off)
    }
}

/// The two axes different from `a` in increasing order (3D).
#[inline]
pub fn other_axes(a: usize) -> [usize; 2] {
    match a {
        0 => [1, 2],
        1 => [0, 2],
        _ => [0, 1],
    }
}

/// Common read-only interface of the structured meshes used by assembly.
pub trait Grid<T: Real>: Sync {
    fn dim(&self) -> usize;
    /// Subdivisions per axis.
    fn n(&self) -> usize;
    fn h(&self, axis: usize) -> T;
    fn num_nodes(&self) -> usize;
    fn num_edges(&self) -> usize;
    /// Global node ids of the cell (first `2^d` entries valid).
    fn cell_nodes(&self, cell: usize) -> [usize; 8];
    /// Global edge ids of the cell (first `local_edges(d)` entries valid).
    fn cell_edges(&self, cell: usize) -> [usize; 12];
    /// Unknown index of a global edge, `None` for eliminated edges.
    fn edge_dof(&self, edge: usize) -> Option<usize>;
    fn num_edge_dofs(&self) -> usize;

    fn num_cells(&self) -> usize {
        self.n().pow(self.dim() as u32)
    }

    fn cell_ijk(&self, cell: usize) -> [usize; 3] {
        let n = self.n();
        let mut ijk = [0; 3];
        let mut c = cell;
        for v in ijk.iter_mut().take(self.dim()) {
            *v = c % n;
            c /= n;
        }
        ijk
    }

    fn cell_index(&self, ijk: &[usize; 3]) -> usize {
        let n = self.n();
        (0..self.dim()).rev().fold(0, |acc, a| acc * n + ijk[a])
    }

    fn cell_origin(&self, cell: usize) -> Vec3<T> {
        let ijk = self.cell_ijk(cell);
        let mut o = [T::zero(); 3];
        for a in 0..self.dim() {
            o[a] = T::from_usize_exact(ijk[a]) * self.h(a);
        }
        o
    }

    fn cell_volume(&self) -> T {
        (0..self.dim()).fold(T::one(), |acc, a| acc * self.h(a))
    }
}

/// Cell index along one axis and the local coordinate in `[0, 1]`.
/// Points on an inner face go to the lower cell.
fn locate_axis<T: Real>(s: T, n: usize) -> (usize, T) {
    let c = s.ceil().to_f64_lossy() as i64 - 1;
    let c = c.clamp(0, n as i64 - 1) as usize;
    let local = (s - T::from_usize_exact(c)).max(T::zero()).min(T::one());
    (c, local)
}

/// Periodic mesh of the unit cell `Y = [0,1)^d`.
#[derive(Debug, Clone)]
pub struct CellMesh<T> {
    dim: usize,
    n: usize,
    h: T,
}

impl<T: Real> CellMesh<T> {
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyMesh);
        }
        if !(2..=3).contains(&dim) {
            return Err(Error::DimensionMismatch(format!("dimension must be 2 or 3, got {dim}")));
        }
        Ok(Self { dim, n, h: T::one() / T::from_usize_exact(n) })
    }

    /// Periodic node id of lattice point `ijk` (any integers).
    #[inline]
    pub fn node_id(&self, ijk: [i64; 3]) -> usize {
        let n = self.n as i64;
        (0..self.dim).rev().fold(0usize, |acc, a| acc * self.n + ijk[a].rem_euclid(n) as usize)
    }

    /// Periodic edge id of the edge starting at lattice point `ijk` along `dir`.
    #[inline]
    pub fn edge_id(&self, dir: usize, ijk: [i64; 3]) -> usize {
        dir * self.n.pow(self.dim as u32) + self.node_id(ijk)
    }

    /// Lattice coordinates of a node id.
    pub fn node_ijk(&self, node: usize) -> [usize; 3] {
        self.cell_ijk(node)
    }

    /// Locates `y` (wrapped into `[0,1)^d`).
    pub fn locate(&self, y: &Vec3<T>) -> (usize, Vec3<T>) {
        let mut ijk = [0; 3];
        let mut local = [T::zero(); 3];
        let nn = T::from_usize_exact(self.n);
        for a in 0..self.dim {
            let (c, l) = locate_axis(y[a].frac() * nn, self.n);
            ijk[a] = c;
            local[a] = l;
        }
        (self.cell_index(&ijk), local)
    }
}

impl<T: Real> Grid<T> for CellMesh<T> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn n(&self) -> usize {
        self.n
    }

    fn h(&self, _axis: usize) -> T {
        self.h
    }

    fn num_nodes(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    fn num_edges(&self) -> usize {
        self.dim * self.num_nodes()
    }

    fn cell_nodes(&self, cell: usize) -> [usize; 8] {
        let ijk = self.cell_ijk(cell);
        let mut out = [0; 8];
        for (l, slot) in out.iter_mut().enumerate().take(local_nodes(self.dim)) {
            let p = [
                (ijk[0] + (l & 1)) as i64,
                (ijk[1] + ((l >> 1) & 1)) as i64,
                (ijk[2] + ((l >> 2) & 1)) as i64,
            ];
            *slot = self.node_id(p);
        }
        out
    }

    fn cell_edges(&self, cell: usize) -> [usize; 12] {
        let ijk = self.cell_ijk(cell);
        let mut out = [0; 12];
        for (e, slot) in out.iter_mut().enumerate().take(local_edges(self.dim)) {
            let (dir, off) = local_edge(self.dim, e);
            let p = [(ijk[0] + off[0]) as i64, (ijk[1] + off[1]) as i64, (ijk[2] + off[2]) as i64];
            *slot = self.edge_id(dir, p);
        }
        out
    }

    fn edge_dof(&self, edge: usize) -> Option<usize> {
        Some(edge)
    }

    fn num_edge_dofs(&self) -> usize {
        self.num_edges()
    }
}

/// Mesh of the box `[0,L₁]×…×[0,L_d]` with `N` cells per axis. Edges
/// lying on the boundary carry the essential condition `u×ν = 0` and are
/// eliminated from the unknowns.
#[derive(Debug, Clone)]
pub struct DomainMesh<T> {
    dim: usize,
    n: usize,
    extents: Vec3<T>,
    h: Vec3<T>,
    edge_offset: [usize; 4],
    boundary: Vec<bool>,
    interior: Vec<Option<usize>>,
    interior_edges: Vec<usize>,
}

impl<T: Real> DomainMesh<T> {
    pub fn new(dim: usize, n: usize, extents: &[T]) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyMesh);
        }
        if !(2..=3).contains(&dim) || extents.len() != dim {
            return Err(Error::DimensionMismatch(format!(
                "dimension {dim} with {} extents",
                extents.len()
            )));
        }
        if extents.iter().any(|&l| !(l > T::zero())) {
            return Err(Error::DimensionMismatch("extents must be positive".into()));
        }
        let mut ext = [T::one(); 3];
        let mut h = [T::one(); 3];
        for a in 0..dim {
            ext[a] = extents[a];
            h[a] = extents[a] / T::from_usize_exact(n);
        }
        let per_dir = n * (n + 1).pow(dim as u32 - 1);
        let mut edge_offset = [0; 4];
        for a in 0..dim {
            edge_offset[a + 1] = edge_offset[a] + per_dir;
        }
        let total = edge_offset[dim];
        let mut mesh = Self {
            dim,
            n,
            extents: ext,
            h,
            edge_offset,
            boundary: vec![false; total],
            interior: vec![None; total],
            interior_edges: Vec::new(),
        };
        for e in 0..total {
            let (dir, start) = mesh.edge_start(e);
            let on_boundary = (0..dim).filter(|&b| b != dir).any(|b| start[b] == 0 || start[b] == n);
            mesh.boundary[e] = on_boundary;
            if !on_boundary {
                mesh.interior[e] = Some(mesh.interior_edges.len());
                mesh.interior_edges.push(e);
            }
        }
        Ok(mesh)
    }

    /// Unit square or cube.
    pub fn unit(dim: usize, n: usize) -> Result<Self> {
        Self::new(dim, n, &vec![T::one(); dim])
    }

    pub fn extents(&self) -> &[T] {
        &self.extents[..self.dim]
    }

    pub fn extent(&self, axis: usize) -> T {
        self.extents[axis]
    }

    pub fn node_id(&self, ijk: [usize; 3]) -> usize {
        let m = self.n + 1;
        (0..self.dim).rev().fold(0, |acc, a| acc * m + ijk[a])
    }

    pub fn node_ijk(&self, node: usize) -> [usize; 3] {
        let m = self.n + 1;
        let mut ijk = [0; 3];
        let mut r = node;
        for v in ijk.iter_mut().take(self.dim) {
            *v = r % m;
            r /= m;
        }
        ijk
    }

    pub fn node_position(&self, node: usize) -> Vec3<T> {
        let ijk = self.node_ijk(node);
        let mut p = [T::zero(); 3];
        for a in 0..self.dim {
            p[a] = T::from_usize_exact(ijk[a]) * self.h[a];
        }
        p
    }

    /// Edge id of the edge along `dir` starting at lattice point `ijk`.
    pub fn edge_id(&self, dir: usize, ijk: [usize; 3]) -> usize {
        let mut idx = 0;
        for a in (0..self.dim).rev() {
            let size = if a == dir { self.n } else { self.n + 1 };
            idx = idx * size + ijk[a];
        }
        self.edge_offset[dir] + idx
    }

    /// Direction and start lattice point of an edge.
    pub fn edge_start(&self, edge: usize) -> (usize, [usize; 3]) {
        let dir = (0..self.dim).find(|&a| edge < self.edge_offset[a + 1]).expect("edge id in range");
        let mut r = edge - self.edge_offset[dir];
        let mut ijk = [0; 3];
        for (a, v) in ijk.iter_mut().enumerate().take(self.dim) {
            let size = if a == dir { self.n } else { self.n + 1 };
            *v = r % size;
            r /= size;
        }
        (dir, ijk)
    }

    /// Midpoint and unit direction index of an edge.
    pub fn edge_midpoint(&self, edge: usize) -> (usize, Vec3<T>) {
        let (dir, ijk) = self.edge_start(edge);
        let mut p = [T::zero(); 3];
        for a in 0..self.dim {
            p[a] = T::from_usize_exact(ijk[a]) * self.h[a];
        }
        p[dir] += T::lit(0.5) * self.h[dir];
        (dir, p)
    }

    pub fn is_boundary_edge(&self, edge: usize) -> bool {
        self.boundary[edge]
    }

    pub fn boundary_edge_count(&self) -> usize {
        self.boundary.iter().filter(|&&b| b).count()
    }

    /// Global edge ids of the unknowns, in unknown order.
    pub fn interior_edges(&self) -> &[usize] {
        &self.interior_edges
    }

    /// Locates `x`; points within a relative `1e-12` of the box are clamped.
    pub fn locate(&self, x: &Vec3<T>) -> Result<(usize, Vec3<T>)> {
        let mut ijk = [0; 3];
        let mut local = [T::zero(); 3];
        for a in 0..self.dim {
            let tol = T::lit(1e-12) * self.extents[a];
            if !(x[a] >= -tol && x[a] <= self.extents[a] + tol) {
                return Err(Error::OutsideMesh { point: x[..self.dim].iter().map(|v| v.to_f64_lossy()).collect() });
            }
            let (c, l) = locate_axis(x[a] / self.h[a], self.n);
            ijk[a] = c;
            local[a] = l;
        }
        Ok((self.cell_index(&ijk), local))
    }
}

impl<T: Real> Grid<T> for DomainMesh<T> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn n(&self) -> usize {
        self.n
    }

    fn h(&self, axis: usize) -> T {
        self.h[axis]
    }

    fn num_nodes(&self) -> usize {
        (self.n + 1).pow(self.dim as u32)
    }

    fn num_edges(&self) -> usize {
        self.edge_offset[self.dim]
    }

    fn cell_nodes(&self, cell: usize) -> [usize; 8] {
        let ijk = self.cell_ijk(cell);
        let mut out = [0; 8];
        for (l, slot) in out.iter_mut().enumerate().take(local_nodes(self.dim)) {
            *slot = self.node_id([ijk[0] + (l & 1), ijk[1] + ((l >> 1) & 1), ijk[2] + ((l >> 2) & 1)]);
        }
        out
    }

    fn cell_edges(&self, cell: usize) -> [usize; 12] {
        let ijk = self.cell_ijk(cell);
        let mut out = [0; 12];
        for (e, slot) in out.iter_mut().enumerate().take(local_edges(self.dim)) {
            let (dir, off) = local_edge(self.dim, e);
            *slot = self.edge_id(dir, [ijk[0] + off[0], ijk[1] + off[1], ijk[2] + off[2]]);
        }
        out
    }

    fn edge_dof(&self, edge: usize) -> Option<usize> {
        self.interior[edge]
    }

    fn num_edge_dofs(&self) -> usize {
        self.interior_edges.len()
    }
}

/// Values attached to mesh entities of one kind.
#[derive(Debug, Clone, PartialEq)]
pub struct DofField<T> {
    pub kind: DofKind,
    pub values: Vec<T>,
}

impl<T: Real> DofField<T> {
    pub fn new(kind: DofKind, expected_len: usize, values: Vec<T>) -> Result<Self> {
        if values.len() != expected_len {
            return Err(Error::DimensionMismatch(format!(
                "field has {} values, mesh has {expected_len} {kind:?} unknowns",
                values.len()
            )));
        }
        Ok(Self { kind, values })
    }

    pub fn zeros(kind: DofKind, len: usize) -> Self {
        Self { kind, values: vec![T::zero(); len] }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_mesh_counts() {
        let m = CellMesh::<f64>::new(2, 1).unwrap();
        assert_eq!((m.num_nodes(), m.num_edges()), (1, 2));
        let m = CellMesh::<f64>::new(2, 2).unwrap();
        assert_eq!((m.num_nodes(), m.num_edges()), (4, 8));
        let m = CellMesh::<f64>::new(3, 2).unwrap();
        assert_eq!((m.num_nodes(), m.num_edges()), (8, 24));
        assert!(matches!(CellMesh::<f64>::new(2, 0), Err(Error::EmptyMesh)));
    }

    #[test]
    fn domain_mesh_counts() {
        let m = DomainMesh::<f64>::unit(2, 1).unwrap();
        assert_eq!((m.num_edges(), m.boundary_edge_count(), m.num_edge_dofs()), (4, 4, 0));
        let m = DomainMesh::<f64>::unit(2, 2).unwrap();
        assert_eq!((m.num_edges(), m.boundary_edge_count(), m.num_edge_dofs()), (12, 8, 4));
        let m = DomainMesh::<f64>::unit(3, 1).unwrap();
        assert_eq!((m.num_edges(), m.boundary_edge_count()), (12, 12));
        assert!(matches!(DomainMesh::<f64>::unit(3, 0), Err(Error::EmptyMesh)));
    }

    #[test]
    fn exhaustive_counts_up_to_eight() {
        for n in 1..=8usize {
            let c2 = CellMesh::<f64>::new(2, n).unwrap();
            assert_eq!(c2.num_edges(), 2 * n * n);
            let c3 = CellMesh::<f64>::new(3, n).unwrap();
            assert_eq!(c3.num_edges(), 3 * n * n * n);
            let d2 = DomainMesh::<f64>::unit(2, n).unwrap();
            assert_eq!(d2.num_edges(), 2 * n * (n + 1));
            assert_eq!(d2.num_edge_dofs() + d2.boundary_edge_count(), d2.num_edges());
            assert_eq!(d2.num_edge_dofs(), 2 * n * (n - 1));
            let d3 = DomainMesh::<f64>::unit(3, n).unwrap();
            assert_eq!(d3.num_edges(), 3 * n * (n + 1) * (n + 1));
            assert_eq!(d3.num_edge_dofs(), 3 * n * (n - 1) * (n - 1));
            // every periodic edge id is reached from some cell
            for mesh in [&c2 as &dyn Grid<f64>, &c3] {
                let mut seen = vec![false; mesh.num_edges()];
                for c in 0..mesh.num_cells() {
                    for &e in &mesh.cell_edges(c)[..local_edges(mesh.dim())] {
                        seen[e] = true;
                    }
                }
                assert!(seen.iter().all(|&s| s));
            }
        }
    }

    #[test]
    fn domain_edge_roundtrip_and_flags() {
        let m = DomainMesh::<f64>::unit(3, 3).unwrap();
        for e in 0..m.num_edges() {
            let (dir, ijk) = m.edge_start(e);
            assert_eq!(m.edge_id(dir, ijk), e);
            let (_, mid) = m.edge_midpoint(e);
            let on = (0..3).filter(|&b| b != dir).any(|b| mid[b] == 0.0 || mid[b] == 1.0);
            assert_eq!(on, m.is_boundary_edge(e));
        }
    }

    #[test]
    fn locate_examples() {
        let m = DomainMesh::<f64>::unit(2, 4).unwrap();
        let (c, l) = m.locate(&[0.3, 0.3, 0.0]).unwrap();
        assert_eq!(m.cell_ijk(c), [1, 1, 0]);
        assert!((l[0] - 0.2).abs() < 1e-12 && (l[1] - 0.2).abs() < 1e-12);
        let (c, l) = m.locate(&[0.5, 0.1, 0.0]).unwrap();
        assert_eq!(m.cell_ijk(c)[0], 1);
        assert_eq!(l[0], 1.0);
        let (c, l) = m.locate(&[1.0, 1.0, 0.0]).unwrap();
        assert_eq!(m.cell_ijk(c), [3, 3, 0]);
        assert_eq!(&l[..2], &[1.0, 1.0]);
        assert!(m.locate(&[1.1, 0.5, 0.0]).is_err());
        assert!(m.locate(&[-0.1, 0.5, 0.0]).is_err());
    }

    #[test]
    fn cell_mesh_wraps() {
        let m = CellMesh::<f64>::new(2, 4).unwrap();
        assert_eq!(m.node_id([4, -1, 0]), m.node_id([0, 3, 0]));
        let (c, _) = m.locate(&[1.3, -0.7, 0.0]);
        assert_eq!(m.cell_ijk(c), [1, 1, 0]);
        // edges of the last cell reuse the first column and row
        let last = m.cell_index(&[3, 3, 0]);
        let e = m.cell_edges(last);
        assert_eq!(e[1], m.edge_id(0, [3, 0, 0]));
        assert_eq!(e[3], m.edge_id(1, [0, 3, 0]));
    }
}
