use crate::{FlowError, FlowField};

/// Rigid/similarity maps realizable as dense flows. Rotation and zoom act
/// about the image center at pixel-center coordinates
/// `((W-1)/2, (H-1)/2)`, which keeps quarter-turn rotations exact
/// permutations on square grids.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FlowKind {
    Translate { dx: f64, dy: f64 },
    /// Angle in radians, positive rotating x towards y (y points down).
    Rotate { angle: f64 },
    /// Uniform scale about the center; `scale > 1` moves content outward.
    Zoom { scale: f64 },
}

/// Dense flow sending each pixel center through the named map.
pub fn make_synthetic_flow(
    kind: FlowKind,
    width: usize,
    height: usize,
) -> Result<FlowField, FlowError> {
    match kind {
        FlowKind::Translate { dx, dy } => {
            if !dx.is_finite() || !dy.is_finite() {
                return Err(FlowError::InvalidParam("translate offsets must be finite".into()));
            }
        }
        FlowKind::Rotate { angle } => {
            if !angle.is_finite() {
                return Err(FlowError::InvalidParam("rotation angle must be finite".into()));
            }
        }
        FlowKind::Zoom { scale } => {
            if !scale.is_finite() || scale <= 0.0 {
                return Err(FlowError::InvalidParam(format!(
                    "zoom scale must be finite and positive, got {scale}"
                )));
            }
        }
    }
    let cx = (width as f64 - 1.0) / 2.0;
    let cy = (height as f64 - 1.0) / 2.0;
    let n = width * height;
    let mut u = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n);
    for y in 0..height {
        for x in 0..width {
            let (px, py) = (x as f64, y as f64);
            let (tx, ty) = match kind {
                FlowKind::Translate { dx, dy } => (px + dx, py + dy),
                FlowKind::Rotate { angle } => {
                    let (s, c) = angle.sin_cos();
                    let (rx, ry) = (px - cx, py - cy);
                    (cx + c * rx - s * ry, cy + s * rx + c * ry)
                }
                FlowKind::Zoom { scale } => (cx + scale * (px - cx), cy + scale * (py - cy)),
            };
            u.push((tx - px) as f32);
            v.push((ty - py) as f32);
        }
    }
    FlowField::new(width, height, u, v)
}

/// Composes two consecutive forward flows into the flow a→c:
/// `out(p) = f_ab(p) + f_bc(p + f_ab(p))`, sampling `f_bc` bilinearly with
/// border clamping.
pub fn compose_flow(f_ab: &FlowField, f_bc: &FlowField) -> Result<FlowField, FlowError> {
    if !f_ab.same_dims(f_bc) {
        return Err(FlowError::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            f_ab.width(),
            f_ab.height(),
            f_bc.width(),
            f_bc.height()
        )));
    }
    let (w, h) = (f_ab.width(), f_ab.height());
    let mut u = Vec::with_capacity(w * h);
    let mut v = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let (du, dv) = f_ab.at(x, y);
            let (mx, my) = (x as f32 + du, y as f32 + dv);
            let (eu, ev) = f_bc.sample(mx, my);
            u.push(du + eu);
            v.push(dv + ev);
        }
    }
    FlowField::new(w, h, u, v)
}
