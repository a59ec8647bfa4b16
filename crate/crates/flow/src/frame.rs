use crate::field::bilinear_taps;
use crate::FlowError;

/// Single-channel image of real values, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl Frame {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self, FlowError> {
        if width == 0 || height == 0 {
            return Err(FlowError::InvalidParam(format!(
                "frame dimensions must be at least 1x1, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(FlowError::DimensionMismatch(format!(
                "data length {} does not match {width}x{height}",
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::new(width, height, vec![0.0; width * height]).expect("valid dims")
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f32) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn at(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: f32) {
        self.data[y * self.width + x] = value;
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Bilinear sample at real coordinates with border clamping.
    pub fn sample(&self, x: f32, y: f32) -> f32 {
        let (i0, i1, j0, j1, fx, fy) = bilinear_taps(x, y, self.width, self.height);
        let g = |i: usize, j: usize| self.data[j * self.width + i];
        let top = g(i0, j0) + (g(i1, j0) - g(i0, j0)) * fx;
        let bottom = g(i0, j1) + (g(i1, j1) - g(i0, j1)) * fx;
        top + (bottom - top) * fy
    }
}
