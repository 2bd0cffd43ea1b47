//! Physics residuals and the training losses.

use crate::error::{CtflowError, Result};
use crate::pinn::net::{FieldNetwork, OutputJet, ParamGrads, N_STREAMS};
use ndarray::Array2;

/// Field indices in the network output.
pub const C: usize = 0;
pub const U: usize = 1;
pub const V: usize = 2;
pub const P: usize = 3;

/// Stream indices of the jet.
pub const VAL: usize = 0;
pub const DT: usize = 1;
pub const DX: usize = 2;
pub const DY: usize = 3;
pub const DXX: usize = 4;
pub const DYY: usize = 5;

/// Transport, momentum and continuity residuals per point, from an output
/// jet:
///   e1 = c_t + u c_x + v c_y
///   e2 = u_t + u u_x + v u_y + p_x - (u_xx + u_yy)/Re
///   e3 = v_t + u v_x + v v_y + p_y - (v_xx + v_yy)/Re
///   e4 = u_x + v_y
pub fn residuals_from_jet(jet: &OutputJet, re: f64) -> [Vec<f64>; 4] {
    let b = jet.data[0].ncols();
    let g = |s: usize, f: usize, k: usize| jet.data[s][[f, k]];
    let mut e1 = vec![0.0; b];
    let mut e2 = vec![0.0; b];
    let mut e3 = vec![0.0; b];
    let mut e4 = vec![0.0; b];
    for k in 0..b {
        let (u, v) = (g(VAL, U, k), g(VAL, V, k));
        e1[k] = g(DT, C, k) + u * g(DX, C, k) + v * g(DY, C, k);
        e2[k] = g(DT, U, k) + u * g(DX, U, k) + v * g(DY, U, k) + g(DX, P, k)
            - (g(DXX, U, k) + g(DYY, U, k)) / re;
        e3[k] = g(DT, V, k) + u * g(DX, V, k) + v * g(DY, V, k) + g(DY, P, k)
            - (g(DXX, V, k) + g(DYY, V, k)) / re;
        e4[k] = g(DX, U, k) + g(DY, V, k);
    }
    [e1, e2, e3, e4]
}

/// Physics residuals of the network at the given points.
pub fn physics_residuals(
    net: &FieldNetwork,
    points: &[(f64, f64, f64)],
    re: f64,
) -> Result<[Vec<f64>; 4]> {
    let (jet, _) = net.forward_jet(points, false)?;
    Ok(residuals_from_jet(&jet, re))
}

/// Mean of e1^2 + e2^2 + e3^2 + e4^2 over the batch.
pub fn loss_physics(net: &FieldNetwork, points: &[(f64, f64, f64)], re: f64) -> Result<f64> {
    if points.is_empty() {
        return Err(CtflowError::Domain("empty physics batch".into()));
    }
    let [e1, e2, e3, e4] = physics_residuals(net, points, re)?;
    let b = points.len() as f64;
    Ok((0..e1.len())
        .map(|k| e1[k] * e1[k] + e2[k] * e2[k] + e3[k] * e3[k] + e4[k] * e4[k])
        .sum::<f64>()
        / b)
}

/// Physics loss and its parameter gradient in one pass.
pub fn loss_physics_grad(
    net: &FieldNetwork,
    points: &[(f64, f64, f64)],
    re: f64,
) -> Result<(f64, ParamGrads)> {
    if points.is_empty() {
        return Err(CtflowError::Domain("empty physics batch".into()));
    }
    let (jet, states) = net.forward_jet(points, true)?;
    let states = states.expect("state kept");
    let [e1, e2, e3, e4] = residuals_from_jet(&jet, re);
    let b = points.len();
    let bf = b as f64;
    let loss = (0..b)
        .map(|k| e1[k] * e1[k] + e2[k] * e2[k] + e3[k] * e3[k] + e4[k] * e4[k])
        .sum::<f64>()
        / bf;

    // cotangents of every output stream
    let mut bar: [Array2<f64>; N_STREAMS] =
        std::array::from_fn(|_| Array2::zeros((4, b)));
    let g = |s: usize, f: usize, k: usize| jet.data[s][[f, k]];
    for k in 0..b {
        let (u, v) = (g(VAL, U, k), g(VAL, V, k));
        let w1 = 2.0 * e1[k] / bf;
        let w2 = 2.0 * e2[k] / bf;
        let w3 = 2.0 * e3[k] / bf;
        let w4 = 2.0 * e4[k] / bf;
        // e1 = c_t + u c_x + v c_y
        bar[DT][[C, k]] += w1;
        bar[DX][[C, k]] += w1 * u;
        bar[DY][[C, k]] += w1 * v;
        bar[VAL][[U, k]] += w1 * g(DX, C, k);
        bar[VAL][[V, k]] += w1 * g(DY, C, k);
        // e2 = u_t + u u_x + v u_y + p_x - (u_xx + u_yy)/Re
        bar[DT][[U, k]] += w2;
        bar[DX][[U, k]] += w2 * u;
        bar[DY][[U, k]] += w2 * v;
        bar[VAL][[U, k]] += w2 * g(DX, U, k);
        bar[VAL][[V, k]] += w2 * g(DY, U, k);
        bar[DX][[P, k]] += w2;
        bar[DXX][[U, k]] -= w2 / re;
        bar[DYY][[U, k]] -= w2 / re;
        // e3 = v_t + u v_x + v v_y + p_y - (v_xx + v_yy)/Re
        bar[DT][[V, k]] += w3;
        bar[DX][[V, k]] += w3 * u;
        bar[DY][[V, k]] += w3 * v;
        bar[VAL][[U, k]] += w3 * g(DX, V, k);
        bar[VAL][[V, k]] += w3 * g(DY, V, k);
        bar[DY][[P, k]] += w3;
        bar[DXX][[V, k]] -= w3 / re;
        bar[DYY][[V, k]] -= w3 / re;
        // e4 = u_x + v_y
        bar[DX][[U, k]] += w4;
        bar[DY][[V, k]] += w4;
    }
    let grads = net.backward_jet(&states, &bar);
    Ok((loss, grads))
}

/// A point with its measured concentration from the reconstructed movie.
#[derive(Debug, Clone, Copy)]
pub struct ImagePoint {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub c_ct: f64,
}

/// lambda0 * mean squared concentration misfit.
pub fn loss_imageflow_data(
    net: &FieldNetwork,
    points: &[ImagePoint],
    lambda0: f64,
) -> Result<f64> {
    if points.is_empty() {
        return Err(CtflowError::Domain("empty data batch".into()));
    }
    let coords: Vec<(f64, f64, f64)> = points.iter().map(|p| (p.t, p.x, p.y)).collect();
    let out = net.evaluate_fields(&coords)?;
    let b = points.len() as f64;
    Ok(lambda0
        * points
            .iter()
            .zip(&out)
            .map(|(p, o)| (o[C] - p.c_ct).powi(2))
            .sum::<f64>()
        / b)
}

/// ImageFlow data loss and gradient.
pub fn loss_imageflow_grad(
    net: &FieldNetwork,
    points: &[ImagePoint],
    lambda0: f64,
) -> Result<(f64, ParamGrads)> {
    if points.is_empty() {
        return Err(CtflowError::Domain("empty data batch".into()));
    }
    let coords: Vec<(f64, f64, f64)> = points.iter().map(|p| (p.t, p.x, p.y)).collect();
    for &(t, x, y) in &coords {
        if !net.norm.contains(t, x, y) {
            return Err(CtflowError::Domain(format!(
                "data point (t={t}, x={x}, y={y}) outside the field domain"
            )));
        }
    }
    let input = input_matrix(net, &coords);
    let (out, state) = net.forward_values_training(&input);
    let b = points.len();
    let bf = b as f64;
    let mut loss = 0.0;
    let mut out_bar = Array2::zeros((4, b));
    for (k, p) in points.iter().enumerate() {
        let misfit = out[[C, k]] - p.c_ct;
        loss += lambda0 * misfit * misfit / bf;
        out_bar[[C, k]] = lambda0 * 2.0 * misfit / bf;
    }
    let grads = net.backward_values(&state, &out_bar);
    Ok((loss, grads))
}

fn input_matrix(net: &FieldNetwork, coords: &[(f64, f64, f64)]) -> Array2<f64> {
    let b = coords.len();
    let mut m = Array2::zeros((3, b));
    for (k, &(t, x, y)) in coords.iter().enumerate() {
        m[[0, k]] = net.norm.t.apply(t);
        m[[1, k]] = net.norm.x.apply(x);
        m[[2, k]] = net.norm.y.apply(y);
    }
    m
}

/// One sinogram ray prepared for rendering: the active (in-lumen)
/// quadrature points at the view time, the segment length, and the
/// measured line integral.
#[derive(Debug, Clone)]
pub struct RenderRay {
    /// (t, x, y) in nondimensional units, one per active quadrature point.
    pub points: Vec<(f64, f64, f64)>,
    /// Quadrature segment length [cm].
    pub dl_cm: f64,
    /// Measured line integral [concentration * cm].
    pub g_measured: f64,
}

/// lambda1 * mean squared sinogram misfit over a ray batch;
/// lambda1 = 1 / n_p.
pub fn loss_sinoflow_data(net: &FieldNetwork, rays: &[RenderRay], n_p: usize) -> Result<f64> {
    if rays.is_empty() {
        return Err(CtflowError::Domain("empty ray batch".into()));
    }
    let lambda1 = 1.0 / n_p as f64;
    let mut loss = 0.0;
    for ray in rays {
        let g_hat = render_ray(net, ray)?;
        loss += (g_hat - ray.g_measured).powi(2);
    }
    Ok(lambda1 * loss / rays.len() as f64)
}

/// Quadrature rendering of one ray with the network field.
pub fn render_ray(net: &FieldNetwork, ray: &RenderRay) -> Result<f64> {
    if ray.points.is_empty() {
        return Ok(0.0);
    }
    let out = net.evaluate_fields(&ray.points)?;
    Ok(out.iter().map(|o| o[C]).sum::<f64>() * ray.dl_cm)
}

/// SinoFlow data loss and gradient: all rays' active points are batched
/// through one forward/backward pass.
pub fn loss_sinoflow_grad(
    net: &FieldNetwork,
    rays: &[RenderRay],
    n_p: usize,
) -> Result<(f64, ParamGrads)> {
    if rays.is_empty() {
        return Err(CtflowError::Domain("empty ray batch".into()));
    }
    let lambda1 = 1.0 / n_p as f64;
    let coords: Vec<(f64, f64, f64)> = rays.iter().flat_map(|r| r.points.iter().copied()).collect();
    let nb = rays.len() as f64;
    if coords.is_empty() {
        // every ray missed the lumen: loss is the measured-data residual
        // with zero prediction and no gradient
        let loss = lambda1
            * rays.iter().map(|r| r.g_measured * r.g_measured).sum::<f64>()
            / nb;
        return Ok((loss, ParamGrads::zeros_like(net)));
    }
    for &(t, x, y) in &coords {
        if !net.norm.contains(t, x, y) {
            return Err(CtflowError::Domain(format!(
                "ray point (t={t}, x={x}, y={y}) outside the field domain"
            )));
        }
    }
    let input = input_matrix(net, &coords);
    let (out, state) = net.forward_values_training(&input);
    let mut loss = 0.0;
    let mut out_bar = Array2::zeros((4, coords.len()));
    let mut offset = 0;
    for ray in rays {
        let n = ray.points.len();
        let g_hat: f64 = (0..n).map(|k| out[[C, offset + k]]).sum::<f64>() * ray.dl_cm;
        let misfit = g_hat - ray.g_measured;
        loss += lambda1 * misfit * misfit / nb;
        let w = lambda1 * 2.0 * misfit * ray.dl_cm / nb;
        for k in 0..n {
            out_bar[[C, offset + k]] = w;
        }
        offset += n;
    }
    let grads = net.backward_values(&state, &out_bar);
    Ok((loss, grads))
}
