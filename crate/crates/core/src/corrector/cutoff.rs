//! Boundary cut-off `τ^ε` and the boundary-aware corrector `w₁^ε`.

use rayon::prelude::*;

use super::{widths, CorrectorErrors, RunRef, CHUNK};
use crate::cells::HomogenizationResult;
use crate::coeffs::{curl_dim, ScaleSchedule, Which};
use crate::error::{Error, Result};
use crate::fem::element::{edge_field, edge_field_gradients, q1_field};
use crate::fem::quadrature::TensorRule;
use crate::mesh::{local_nodes, DomainMesh, Grid};
use crate::scalar::{cross3, Real, Vec3};
use crate::wave::{cell_dofs, interpolate_interior};

fn boundary_distance<T: Real>(mesh: &DomainMesh<T>, x: &Vec3<T>) -> T {
    (0..mesh.dim()).fold(T::infinity(), |m, a| m.min(x[a]).min(mesh.extent(a) - x[a]))
}

/// Nodal values of `τ^ε = min(1, dist(x, ∂D)/ε)`.
pub fn cutoff_field<T: Real>(mesh: &DomainMesh<T>, eps: T) -> Result<Vec<T>> {
    let hmax = (0..mesh.dim()).map(|a| mesh.h(a)).fold(T::zero(), |m, h| m.max(h));
    if !(eps >= T::lit(2.0) * hmax * (T::one() - T::lit(1e-12))) {
        return Err(Error::LayerTooThin { epsilon: eps.to_f64_lossy(), h: hmax.to_f64_lossy() });
    }
    Ok((0..mesh.num_nodes())
        .map(|i| (boundary_distance(mesh, &mesh.node_position(i)) / eps).min(T::one()))
        .collect())
}

/// Value and gradient of a multilinear nodal field at `x`.
pub fn eval_nodal<T: Real>(mesh: &DomainMesh<T>, values: &[T], x: &Vec3<T>) -> Result<(T, Vec3<T>)> {
    let (cell, xi) = mesh.locate(x)?;
    Ok(nodal_in_cell(mesh, values, cell, &xi))
}

fn nodal_in_cell<T: Real>(mesh: &DomainMesh<T>, values: &[T], cell: usize, xi: &Vec3<T>) -> (T, Vec3<T>) {
    let nodes = mesh.cell_nodes(cell);
    let mut local = [T::zero(); 8];
    for l in 0..local_nodes(mesh.dim()) {
        local[l] = values[nodes[l]];
    }
    q1_field(mesh.dim(), &local, xi, &widths(mesh))
}

/// `‖φ‖_{L²(D^ε)}` over the layer `{x : dist(x, ∂D) < ε}`, with the
/// indicator sampled at the quadrature points.
pub fn boundary_layer_norm<T: Real>(
    mesh: &DomainMesh<T>,
    phi: &(dyn Fn(&Vec3<T>) -> T + Sync),
    eps: T,
    qpts: usize,
) -> T {
    let rule = TensorRule::<T>::new(mesh.dim(), qpts);
    let h = widths(mesh);
    let vol = mesh.cell_volume();
    let mut acc = T::zero();
    for c in 0..mesh.num_cells() {
        let o = mesh.cell_origin(c);
        for (xi, &w) in rule.points.iter().zip(&rule.weights) {
            let x = [o[0] + xi[0] * h[0], o[1] + xi[1] * h[1], o[2] + xi[2] * h[2]];
            if boundary_distance(mesh, &x) < eps {
                let v = phi(&x);
                acc += w * vol * v * v;
            }
        }
    }
    acc.sqrt()
}

fn cross<T: Real>(dim: usize, a: &Vec3<T>, b: &Vec3<T>) -> Vec3<T> {
    if dim == 2 {
        [a[0] * b[1] - a[1] * b[0], T::zero(), T::zero()]
    } else {
        cross3(a, b)
    }
}

/// Error series of `w₁^ε = u₀ + ετ^ε Nʳ(curl u₀)ᵣ + ε∇[τ^ε 𝔲₁]` against a
/// fine run. Supports one fast scale and coefficients that do not depend
/// on `x`.
#[allow(clippy::too_many_arguments)]
pub fn cutoff_corrector_error<T: Real>(
    fine: RunRef<'_, T>,
    u0: RunRef<'_, T>,
    hom: &HomogenizationResult<T>,
    schedule: &ScaleSchedule<T>,
    g0: &(dyn Fn(&Vec3<T>) -> Vec3<T> + Sync),
    g1: &(dyn Fn(&Vec3<T>) -> Vec3<T> + Sync),
    qpts: usize,
) -> Result<CorrectorErrors<T>> {
    super::check_inputs(&u0, hom, schedule, fine.mesh)?;
    super::check_g0(u0.mesh, g0)?;
    if hom.levels() != 1 || hom.depends_on_x() {
        return Err(Error::Unsupported(
            "the cut-off corrector needs one fast scale and x-independent coefficients".into(),
        ));
    }
    let eps = schedule.base();
    let dim = hom.dim();
    let cd = curl_dim(dim);
    let mesh = fine.mesh;
    let tau = cutoff_field(mesh, eps)?;
    let g1d = interpolate_interior(u0.mesh, g1, "g1")?;
    let traj = fine.traj;
    let cm = u0.mesh;
    let hc = widths(cm);
    let h = widths(mesh);
    let rule = TensorRule::<T>::new(dim, qpts);
    let vol = mesh.cell_volume();
    let bl = hom.level(Which::B, 1);
    let al = hom.level(Which::A, 1);
    let origin = [T::zero(); 3];
    let tol = T::lit(1e-9) * u0.traj.times.last().copied().unwrap_or(T::one()).abs().max(T::one());
    let cells = mesh.num_cells();
    let mut out = CorrectorErrors::default();
    for k in 0..traj.times.len() {
        let t = traj.times[k];
        let kc = u0
            .traj
            .times
            .iter()
            .position(|&s| (s - t).abs() <= tol)
            .ok_or_else(|| Error::GridMismatch(format!("no homogenized stamp at t = {t}")))?;
        let (uf, vf) = (&traj.u[k], &traj.v[k]);
        let (uc, vc) = (&u0.traj.u[kc], &u0.traj.v[kc]);
        if uf.len() != mesh.num_edge_dofs() {
            return Err(Error::GridMismatch("fine state does not match its mesh".into()));
        }
        let partial: Vec<(T, T)> = (0..cells.div_ceil(CHUNK))
            .into_par_iter()
            .map(|chunk| {
                let mut ev = T::zero();
                let mut ec = T::zero();
                for c in chunk * CHUNK..((chunk + 1) * CHUNK).min(cells) {
                    let lu = cell_dofs(mesh, uf, c);
                    let lv = cell_dofs(mesh, vf, c);
                    let o = mesh.cell_origin(c);
                    for (xi, &wq) in rule.points.iter().zip(&rule.weights) {
                        let x = [o[0] + xi[0] * h[0], o[1] + xi[1] * h[1], o[2] + xi[2] * h[2]];
                        let (_, fc) = edge_field(dim, &lu, xi, &h);
                        let (fv, _) = edge_field(dim, &lv, xi, &h);
                        let (tv, tg) = nodal_in_cell(mesh, &tau, c, xi);

                        let (cc, cxi) = cm.locate(&x)?;
                        let du = cell_dofs(cm, uc, cc);
                        let dv = cell_dofs(cm, vc, cc);
                        let dg = cell_dofs(cm, &g1d, cc);
                        let (_, c0) = edge_field(dim, &du, &cxi, &hc);
                        let (_, dc0) = edge_field_gradients(dim, &du, &cxi, &hc);
                        let (vel, cdot) = edge_field(dim, &dv, &cxi, &hc);
                        let (dvel, _) = edge_field_gradients(dim, &dv, &cxi, &hc);
                        let (g, _) = edge_field(dim, &dg, &cxi, &hc);
                        let (dgr, _) = edge_field_gradients(dim, &dg, &cxi, &hc);

                        let y = schedule.fast_points(dim, &x).remove(0);
                        let jb = bl.jacobian(&origin, &[], &y);
                        let ja = al.jacobian(&origin, &[], &y);
                        let w: Vec<T> = (0..dim).map(|r| bl.value(r, &origin, &[], &y)[0]).collect();
                        let nv: Vec<Vec3<T>> = (0..cd).map(|r| al.value(r, &origin, &[], &y)).collect();

                        let mut wv = vel;
                        for a in 0..dim {
                            for r in 0..cd {
                                wv[a] += eps * tv * nv[r][a] * cdot[r];
                            }
                            for r in 0..dim {
                                let diff = vel[r] - g[r];
                                wv[a] += (eps * w[r] * tg[a] + tv * jb[a][r]) * diff;
                                wv[a] += eps * tv * w[r] * (dvel[r][a] - dgr[r][a]);
                            }
                        }
                        let mut wc = c0;
                        for r in 0..cd {
                            for a in 0..cd {
                                wc[a] += tv * ja[a][r] * c0[r];
                            }
                            let mut grad = [T::zero(); 3];
                            for a in 0..dim {
                                grad[a] = eps * (tg[a] * c0[r] + tv * dc0[r][a]);
                            }
                            let x = cross(dim, &grad, &nv[r]);
                            for a in 0..cd {
                                wc[a] += x[a];
                            }
                        }
                        let wt = wq * vol;
                        ev += wt * (0..dim).map(|a| (fv[a] - wv[a]) * (fv[a] - wv[a])).sum::<T>();
                        ec += wt * (0..cd).map(|a| (fc[a] - wc[a]) * (fc[a] - wc[a])).sum::<T>();
                    }
                }
                Ok((ev, ec))
            })
            .collect::<Result<_>>()?;
        let (mut ev, mut ec) = (T::zero(), T::zero());
        for (a, b) in partial {
            ev += a;
            ec += b;
        }
        out.times.push(t);
        out.velocity.push(ev.sqrt());
        out.curl.push(ec.sqrt());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn too_thin_layer_is_rejected() {
        let mesh = DomainMesh::<f64>::unit(2, 8).unwrap();
        assert!(matches!(cutoff_field(&mesh, 0.2), Err(Error::LayerTooThin { .. })));
        assert!(cutoff_field(&mesh, 0.25).is_ok());
    }

    #[test]
    fn half_width_layer_has_no_plateau_and_bounded_gradient() {
        let mesh = DomainMesh::<f64>::unit(2, 16).unwrap();
        let eps = 0.5;
        let tau = cutoff_field(&mesh, eps).unwrap();
        let centre = tau[mesh.node_id([8, 8, 0])];
        assert_eq!(centre, 1.0);
        assert!(tau.iter().filter(|&&v| v == 1.0).count() == 1);
        for i in 0..40 {
            for j in 0..40 {
                let x = [(i as f64 + 0.5) / 40.0, (j as f64 + 0.5) / 40.0, 0.0];
                let (v, g) = eval_nodal(&mesh, &tau, &x).unwrap();
                assert!((0.0..=1.0).contains(&v));
                assert!((g[0] * g[0] + g[1] * g[1]).sqrt() <= 2.0 / eps + 1e-12);
            }
        }
    }

    #[test]
    fn layer_measure_matches_frame_area() {
        let mesh = DomainMesh::<f64>::unit(2, 32).unwrap();
        for eps in [1.0 / 16.0, 0.125, 0.25] {
            let n = boundary_layer_norm(&mesh, &|_| 1.0, eps, 2);
            assert!((n * n - (4.0 * eps - 4.0 * eps * eps)).abs() < 1e-12, "eps {eps}");
        }
    }
}
