//! Quadrature assembly of the double-phase energy, its nodal gradient, and the
//! diagonal preconditioner.
//!
//! Cartesian grids use bilinear elements with 2x2 tensor Gauss points per
//! cell; radial grids use linear elements with two Gauss points per cell and
//! the shell weight `sigma_{n-1} r^{n-1}`. The gradient magnitude is smoothed
//! as `s = sqrt(|grad u|^2 + eps^2)`.

use crate::geometry::{unit_sphere_area, Grid, GridKind};

pub(crate) struct Problem<'a> {
    pub grid: &'a Grid,
    pub p: &'a [f64],
    pub q: &'a [f64],
    pub a: &'a [f64],
    pub f: &'a [f64],
    pub eps: f64,
}

const GAUSS: f64 = 0.577_350_269_189_625_8; // 1/sqrt(3)

/// Below this squared magnitude the flux `s^{p-2} grad u` and the energy
/// density `s^p` both vanish in the limit, so the phase contributes nothing.
const S2_FLOOR: f64 = 1e-280;

#[inline]
fn phase(s2: f64, p: f64) -> (f64, f64) {
    // Returns (s^{p-2}, s^p) written through s^2.
    if s2 <= S2_FLOOR {
        return (0.0, 0.0);
    }
    if (p - 2.0).abs() < 1e-13 {
        (1.0, s2)
    } else {
        let w = s2.powf(0.5 * (p - 2.0));
        (w, w * s2)
    }
}

/// Assembles the discrete energy. When `grad` is given it receives the nodal
/// gradient and the diagonal preconditioner; when `split` is given it receives
/// the flux part and the load part of the gradient separately
/// (`gradient = flux - load`). Entries at non-interior nodes are zeroed
/// (preconditioner entries set to 1).
pub(crate) fn assemble(
    prob: &Problem,
    u: &[f64],
    mut grad: Option<(&mut [f64], &mut [f64])>,
    mut split: Option<(&mut [f64], &mut [f64])>,
) -> f64 {
    if let Some((g, d)) = grad.as_mut() {
        g.fill(0.0);
        d.fill(0.0);
    }
    if let Some((ga, gl)) = split.as_mut() {
        ga.fill(0.0);
        gl.fill(0.0);
    }

    let mut energy = 0.0;
    match prob.grid.kind() {
        GridKind::Cartesian2d => {
            let h = prob.grid.spacing();
            let (cx, cy) = prob.grid.cell_shape();
            // Reference shape data at the four Gauss points, with physical
            // derivative scaling 2/h folded in.
            let signs = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)];
            let mut gp: [([f64; 4], [f64; 4], [f64; 4]); 4] =
                [([0.0; 4], [0.0; 4], [0.0; 4]); 4];
            for (g, &(gx, gy)) in signs.iter().enumerate() {
                let (xi, eta) = (gx * GAUSS, gy * GAUSS);
                for k in 0..4 {
                    let (sx, sy) = signs[k];
                    gp[g].0[k] = 0.25 * (1.0 + sx * xi) * (1.0 + sy * eta);
                    gp[g].1[k] = 0.25 * sx * (1.0 + sy * eta) * (2.0 / h);
                    gp[g].2[k] = 0.25 * sy * (1.0 + sx * xi) * (2.0 / h);
                }
            }
            let w = h * h / 4.0;

            for cj in 0..cy {
                for ci in 0..cx {
                    if !prob.grid.cell_active(ci, cj) {
                        continue;
                    }
                    let nodes = prob.grid.cell_nodes(ci, cj);
                    let uv = [u[nodes[0]], u[nodes[1]], u[nodes[2]], u[nodes[3]]];
                    for (n_sh, dx_sh, dy_sh) in gp.iter() {
                        let mut ug = 0.0;
                        let mut gxv = 0.0;
                        let mut gyv = 0.0;
                        let mut pg = 0.0;
                        let mut qg = 0.0;
                        let mut ag = 0.0;
                        let mut fg = 0.0;
                        for k in 0..4 {
                            let n = n_sh[k];
                            ug += n * uv[k];
                            gxv += dx_sh[k] * uv[k];
                            gyv += dy_sh[k] * uv[k];
                            pg += n * prob.p[nodes[k]];
                            qg += n * prob.q[nodes[k]];
                            ag += n * prob.a[nodes[k]];
                            fg += n * prob.f[nodes[k]];
                        }
                        let s2 = gxv * gxv + gyv * gyv + prob.eps * prob.eps;
                        let (pw2, pw) = phase(s2, pg);
                        let (qw2, qw) = if ag > 0.0 { phase(s2, qg) } else { (0.0, 0.0) };
                        energy += w * (pw / pg + ag * qw / qg - fg * ug);
                        let coef = pw2 + ag * qw2;
                        if let Some((g, d)) = grad.as_mut() {
                            for k in 0..4 {
                                let dot = gxv * dx_sh[k] + gyv * dy_sh[k];
                                g[nodes[k]] += w * (coef * dot - fg * n_sh[k]);
                                d[nodes[k]] +=
                                    w * coef * (dx_sh[k] * dx_sh[k] + dy_sh[k] * dy_sh[k]);
                            }
                        }
                        if let Some((ga, gl)) = split.as_mut() {
                            for k in 0..4 {
                                let dot = gxv * dx_sh[k] + gyv * dy_sh[k];
                                ga[nodes[k]] += w * coef * dot;
                                gl[nodes[k]] += w * fg * n_sh[k];
                            }
                        }
                    }
                }
            }
        }
        GridKind::Radial => {
            let h = prob.grid.spacing();
            let n = prob.grid.dim();
            let sigma = unit_sphere_area(n);
            let cells = prob.grid.cell_shape().0;
            for ci in 0..cells {
                let r0 = ci as f64 * h;
                let u0 = u[ci];
                let u1 = u[ci + 1];
                let du = (u1 - u0) / h;
                for gxi in [-GAUSS, GAUSS] {
                    let t = 0.5 * (1.0 + gxi); // local coordinate in [0, 1]
                    let rg = r0 + t * h;
                    let wq = 0.5 * h * sigma * rg.powi(n as i32 - 1);
                    let n0 = 1.0 - t;
                    let n1 = t;
                    let pg = n0 * prob.p[ci] + n1 * prob.p[ci + 1];
                    let qg = n0 * prob.q[ci] + n1 * prob.q[ci + 1];
                    let ag = n0 * prob.a[ci] + n1 * prob.a[ci + 1];
                    let fg = n0 * prob.f[ci] + n1 * prob.f[ci + 1];
                    let ug = n0 * u0 + n1 * u1;
                    let s2 = du * du + prob.eps * prob.eps;
                    let (pw2, pw) = phase(s2, pg);
                    let (qw2, qw) = if ag > 0.0 { phase(s2, qg) } else { (0.0, 0.0) };
                    energy += wq * (pw / pg + ag * qw / qg - fg * ug);
                    let coef = pw2 + ag * qw2;
                    let dsh = [-1.0 / h, 1.0 / h];
                    let nsh = [n0, n1];
                    if let Some((g, d)) = grad.as_mut() {
                        for k in 0..2 {
                            g[ci + k] += wq * (coef * du * dsh[k] - fg * nsh[k]);
                            d[ci + k] += wq * coef * dsh[k] * dsh[k];
                        }
                    }
                    if let Some((ga, gl)) = split.as_mut() {
                        for k in 0..2 {
                            ga[ci + k] += wq * coef * du * dsh[k];
                            gl[ci + k] += wq * fg * nsh[k];
                        }
                    }
                }
            }
        }
    }

    for idx in 0..prob.grid.node_count() {
        if !prob.grid.is_interior(idx) {
            if let Some((g, d)) = grad.as_mut() {
                g[idx] = 0.0;
                d[idx] = 1.0;
            }
            if let Some((ga, gl)) = split.as_mut() {
                ga[idx] = 0.0;
                gl[idx] = 0.0;
            }
        }
    }
    if let Some((_, d)) = grad.as_mut() {
        let dmax = d.iter().cloned().fold(0.0f64, f64::max);
        let floor = (1e-14 * dmax).max(1e-300);
        for v in d.iter_mut() {
            if *v < floor {
                *v = floor;
            }
        }
    }

    energy
}
