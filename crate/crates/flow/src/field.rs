use crate::FlowError;

/// Dense forward flow: pixel `(x, y)` in the source frame moves by
/// `(u, v)` pixels to its position in the next frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    width: usize,
    height: usize,
    u: Vec<f32>,
    v: Vec<f32>,
}

impl FlowField {
    pub fn new(width: usize, height: usize, u: Vec<f32>, v: Vec<f32>) -> Result<Self, FlowError> {
        if width == 0 || height == 0 {
            return Err(FlowError::InvalidParam(format!(
                "flow dimensions must be at least 1x1, got {width}x{height}"
            )));
        }
        if u.len() != width * height || v.len() != width * height {
            return Err(FlowError::DimensionMismatch(format!(
                "component length {}/{} does not match {width}x{height}",
                u.len(),
                v.len()
            )));
        }
        if u.iter().chain(v.iter()).any(|c| !c.is_finite()) {
            return Err(FlowError::NonFinite);
        }
        Ok(Self { width, height, u, v })
    }

    /// All-zero flow (identity transport).
    pub fn zeros(width: usize, height: usize) -> Self {
        Self::new(width, height, vec![0.0; width * height], vec![0.0; width * height])
            .expect("zero flow is always valid")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn u(&self) -> &[f32] {
        &self.u
    }

    pub fn v(&self) -> &[f32] {
        &self.v
    }

    pub fn same_dims(&self, other: &FlowField) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Flow vector stored at integer pixel `(x, y)`.
    pub fn at(&self, x: usize, y: usize) -> (f32, f32) {
        let i = y * self.width + x;
        (self.u[i], self.v[i])
    }

    /// Bilinear flow sample at real coordinates, clamped to the border.
    pub fn sample(&self, x: f32, y: f32) -> (f32, f32) {
        let (i0, i1, j0, j1, fx, fy) = bilinear_taps(x, y, self.width, self.height);
        let tap = |i: usize, j: usize| -> (f32, f32) {
            let k = j * self.width + i;
            (self.u[k], self.v[k])
        };
        let (u00, v00) = tap(i0, j0);
        let (u10, v10) = tap(i1, j0);
        let (u01, v01) = tap(i0, j1);
        let (u11, v11) = tap(i1, j1);
        let lerp = |a: f32, b: f32, t: f32| a + (b - a) * t;
        let u = lerp(lerp(u00, u10, fx), lerp(u01, u11, fx), fy);
        let v = lerp(lerp(v00, v10, fx), lerp(v01, v11, fx), fy);
        (u, v)
    }

    /// Forward transport of a point: `p + flow(p)` with the flow sampled
    /// bilinearly at `p`.
    pub fn transport(&self, x: f32, y: f32) -> (f32, f32) {
        let (du, dv) = self.sample(x, y);
        (x + du, y + dv)
    }
}

/// Shared bilinear tap/weight computation with border clamping.
pub(crate) fn bilinear_taps(
    x: f32,
    y: f32,
    width: usize,
    height: usize,
) -> (usize, usize, usize, usize, f32, f32) {
    let xc = x.clamp(0.0, (width - 1) as f32);
    let yc = y.clamp(0.0, (height - 1) as f32);
    let i0 = xc.floor() as usize;
    let j0 = yc.floor() as usize;
    let i1 = (i0 + 1).min(width - 1);
    let j1 = (j0 + 1).min(height - 1);
    (i0, i1, j0, j1, xc - i0 as f32, yc - j0 as f32)
}

/// Per-target-pixel count of transported sub-pixel samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageMap {
    pub width: usize,
    pub height: usize,
    pub count: Vec<u32>,
}

impl CoverageMap {
    pub fn at(&self, x: usize, y: usize) -> u32 {
        self.count[y * self.width + x]
    }

    /// Total number of sub-samples that landed in-image.
    pub fn total(&self) -> u64 {
        self.count.iter().map(|&c| c as u64).sum()
    }
}

/// Canonical sub-pixel centers of pixel `(px, py)` on an `s`-fold grid.
pub(crate) fn sub_centers(px: usize, py: usize, subdiv: usize) -> impl Iterator<Item = (f32, f32)> {
    let s = subdiv as f32;
    let x0 = px as f32 - 0.5;
    let y0 = py as f32 - 0.5;
    (0..subdiv * subdiv).map(move |k| {
        let ix = (k % subdiv) as f32;
        let iy = (k / subdiv) as f32;
        (x0 + (ix + 0.5) / s, y0 + (iy + 0.5) / s)
    })
}

/// Nearest pixel containing a real coordinate, `None` if off-image.
pub(crate) fn bin_point(x: f32, y: f32, width: usize, height: usize) -> Option<(usize, usize)> {
    let px = (x + 0.5).floor();
    let py = (y + 0.5).floor();
    if px < 0.0 || py < 0.0 || px >= width as f32 || py >= height as f32 {
        return None;
    }
    Some((px as usize, py as usize))
}

/// Counts, for every target pixel, how many of the `subdiv`² sub-pixel
/// centers per source pixel land there after forward transport.
/// Off-image samples are dropped, not clamped.
pub fn coverage_map(flow: &FlowField, subdiv: usize) -> CoverageMap {
    assert!(subdiv >= 1, "subdiv must be at least 1");
    let (w, h) = (flow.width(), flow.height());
    let mut count = vec![0u32; w * h];
    for py in 0..h {
        for px in 0..w {
            for (sx, sy) in sub_centers(px, py, subdiv) {
                let (tx, ty) = flow.transport(sx, sy);
                if let Some((bx, by)) = bin_point(tx, ty, w, h) {
                    count[by * w + bx] += 1;
                }
            }
        }
    }
    CoverageMap { width: w, height: h, count }
}

/// Source/target pixel pairs whose transport is clean: every sub-sample of
/// the source lands in one target pixel and that target receives nothing
/// else. These are the pixels whose noise lineage survives one warp step
/// intact.
pub fn lineage_pairs(flow: &FlowField, subdiv: usize) -> Vec<(usize, usize)> {
    let (w, h) = (flow.width(), flow.height());
    let coverage = coverage_map(flow, subdiv);
    let full = (subdiv * subdiv) as u32;
    let mut pairs = Vec::new();
    for py in 0..h {
        for px in 0..w {
            let mut target = None;
            let mut clean = true;
            for (sx, sy) in sub_centers(px, py, subdiv) {
                match bin_point(flow.transport(sx, sy).0, flow.transport(sx, sy).1, w, h) {
                    Some(t) => {
                        if target.is_none() {
                            target = Some(t);
                        } else if target != Some(t) {
                            clean = false;
                            break;
                        }
                    }
                    None => {
                        clean = false;
                        break;
                    }
                }
            }
            if let (true, Some((tx, ty))) = (clean, target) {
                if coverage.at(tx, ty) == full {
                    pairs.push((py * w + px, ty * w + tx));
                }
            }
        }
    }
    pairs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{make_synthetic_flow, FlowKind};

    #[test]
    fn rejects_empty_and_mismatched() {
        assert!(FlowField::new(0, 3, vec![], vec![]).is_err());
        assert!(FlowField::new(2, 2, vec![0.0; 3], vec![0.0; 4]).is_err());
        assert!(FlowField::new(1, 1, vec![f32::NAN], vec![0.0]).is_err());
    }

    #[test]
    fn coverage_identity_counts_all_subsamples() {
        let flow = FlowField::zeros(5, 4);
        let cov = coverage_map(&flow, 2);
        assert!(cov.count.iter().all(|&c| c == 4));
        assert_eq!(cov.total(), 4 * 20);
    }

    #[test]
    fn coverage_integer_shift_drops_exiting_column() {
        // Sources 0..3 move one pixel right; column 3 exits, column 0 starves.
        let flow = make_synthetic_flow(FlowKind::Translate { dx: 1.0, dy: 0.0 }, 4, 4).unwrap();
        let cov = coverage_map(&flow, 1);
        for y in 0..4 {
            assert_eq!(cov.at(0, y), 0);
            for x in 1..4 {
                assert_eq!(cov.at(x, y), 1);
            }
        }
        assert_eq!(cov.total(), 12);
    }

    #[test]
    fn coverage_zoom_conserves_and_leaves_holes() {
        let (w, h, s) = (8usize, 8usize, 2usize);
        let flow = make_synthetic_flow(FlowKind::Zoom { scale: 2.0 }, w, h).unwrap();
        let cov = coverage_map(&flow, s);

        // Independent enumeration of all sub-centers through the analytic
        // zoom map, binned the same way.
        let mut expect = vec![0u32; w * h];
        let (cx, cy) = ((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0);
        for py in 0..h {
            for px in 0..w {
                for k in 0..s * s {
                    let sx = px as f64 - 0.5 + ((k % s) as f64 + 0.5) / s as f64;
                    let sy = py as f64 - 0.5 + ((k / s) as f64 + 0.5) / s as f64;
                    let tx = cx + 2.0 * (sx - cx);
                    let ty = cy + 2.0 * (sy - cy);
                    let bx = (tx + 0.5).floor();
                    let by = (ty + 0.5).floor();
                    if bx >= 0.0 && by >= 0.0 && bx < w as f64 && by < h as f64 {
                        expect[by as usize * w + bx as usize] += 1;
                    }
                }
            }
        }
        assert_eq!(cov.count, expect);
        assert!(cov.total() <= (s * s * w * h) as u64);
    }

    #[test]
    fn coverage_zoom_at_unit_subdiv_leaves_holes() {
        // Doubling spreads unit-subdiv samples two pixels apart, so
        // interior target pixels between them receive nothing.
        let flow = make_synthetic_flow(FlowKind::Zoom { scale: 2.0 }, 8, 8).unwrap();
        let cov = coverage_map(&flow, 1);
        assert!(cov.total() <= 64);
        let holes = (1..7)
            .flat_map(|y| (1..7).map(move |x| (x, y)))
            .filter(|&(x, y)| cov.at(x, y) == 0)
            .count();
        assert!(holes > 0, "zoom-out at subdiv 1 must leave interior holes");
    }

    #[test]
    fn lineage_pairs_for_integer_shift() {
        let flow = make_synthetic_flow(FlowKind::Translate { dx: 1.0, dy: 0.0 }, 4, 3).unwrap();
        let pairs = lineage_pairs(&flow, 2);
        // Every in-image move (x -> x+1) is clean; the exiting column is not.
        assert_eq!(pairs.len(), 3 * 3);
        for (src, dst) in pairs {
            assert_eq!(dst, src + 1);
        }
    }
}
