//! Real-valued transverse intensity images with a physical pixel pitch.

use crate::error::{invalid, Error, Result};

/// Grid dimensions and pixel pitch (m).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub width: usize,
    pub height: usize,
    pub pitch: f64,
}

impl GridSpec {
    pub fn new(width: usize, height: usize, pitch: f64) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(invalid("grid must have at least one pixel"));
        }
        if !(pitch > 0.0 && pitch.is_finite()) {
            return Err(invalid("pixel pitch must be positive"));
        }
        Ok(GridSpec { width, height, pitch })
    }

    pub fn zeros(&self) -> ImageField {
        ImageField {
            width: self.width,
            height: self.height,
            pitch: self.pitch,
            values: vec![0.0; self.width * self.height],
        }
    }
}

/// A 2D real intensity grid, row-major (`y` is the row index).
#[derive(Debug, Clone, PartialEq)]
pub struct ImageField {
    width: usize,
    height: usize,
    pitch: f64,
    values: Vec<f64>,
}

impl ImageField {
    pub fn new(width: usize, height: usize, pitch: f64, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(invalid("image dimensions must be at least 1x1"));
        }
        if !(pitch > 0.0 && pitch.is_finite()) {
            return Err(invalid(format!("pixel pitch must be positive, got {pitch}")));
        }
        if values.len() != width * height {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {width}x{height} image",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("image contains non-finite values"));
        }
        Ok(ImageField {
            width,
            height,
            pitch,
            values,
        })
    }

    pub fn zeros(width: usize, height: usize, pitch: f64) -> Result<Self> {
        Self::new(width, height, pitch, vec![0.0; width * height])
    }

    /// Builds an image from `f(x, y)` evaluated at each pixel index.
    pub fn from_fn(
        width: usize,
        height: usize,
        pitch: f64,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                values.push(f(x, y));
            }
        }
        Self::new(width, height, pitch, values)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.values[y * self.width + x] = v;
    }

    pub fn row(&self, y: usize) -> &[f64] {
        &self.values[y * self.width..(y + 1) * self.width]
    }

    pub fn same_shape(&self, other: &ImageField) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn same_grid(&self, other: &ImageField) -> bool {
        self.same_shape(other) && self.pitch == other.pitch
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Σ values · pitch².
    pub fn total_power(&self) -> f64 {
        self.sum() * self.pitch * self.pitch
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn scaled(&self, factor: f64) -> ImageField {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= factor);
        out
    }

    /// `self += factor * other`.
    pub fn add_scaled(&mut self, other: &ImageField, factor: f64) -> Result<()> {
        if !self.same_shape(other) {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += factor * b;
        }
        Ok(())
    }

    /// Sets the pixel pitch to `pitch * magnification`, keeping the pixel
    /// count and rescaling values so the total power is unchanged.
    pub fn resample(&self, magnification: f64) -> Result<ImageField> {
        if !(magnification > 0.0 && magnification.is_finite()) {
            return Err(invalid(format!(
                "magnification must be positive, got {magnification}"
            )));
        }
        if magnification == 1.0 {
            return Ok(self.clone());
        }
        let gain = 1.0 / (magnification * magnification);
        let mut out = self.scaled(gain);
        out.pitch = self.pitch * magnification;
        Ok(out)
    }

    /// Zero-pads `margin` pixels on every side.
    pub fn padded(&self, margin: usize) -> ImageField {
        let w = self.width + 2 * margin;
        let h = self.height + 2 * margin;
        let mut values = vec![0.0; w * h];
        for y in 0..self.height {
            let dst = (y + margin) * w + margin;
            values[dst..dst + self.width].copy_from_slice(self.row(y));
        }
        ImageField {
            width: w,
            height: h,
            pitch: self.pitch,
            values,
        }
    }

    /// Extracts the `width x height` window whose top-left pixel is `(x0, y0)`.
    pub fn cropped(&self, x0: usize, y0: usize, width: usize, height: usize) -> Result<ImageField> {
        if x0 + width > self.width || y0 + height > self.height {
            return Err(Error::ShapeMismatch(format!(
                "crop {width}x{height}+{x0}+{y0} outside {}x{}",
                self.width, self.height
            )));
        }
        let mut values = Vec::with_capacity(width * height);
        for y in y0..y0 + height {
            values.extend_from_slice(&self.row(y)[x0..x0 + width]);
        }
        ImageField::new(width, height, self.pitch, values)
    }

    pub fn transpose(&self) -> ImageField {
        let mut values = vec![0.0; self.values.len()];
        for y in 0..self.height {
            for x in 0..self.width {
                values[x * self.height + y] = self.get(x, y);
            }
        }
        ImageField {
            width: self.height,
            height: self.width,
            pitch: self.pitch,
            values,
        }
    }

    /// Counter-clockwise quarter turn about the image center.
    pub fn rotate90(&self) -> ImageField {
        let (w, h) = (self.height, self.width);
        let mut values = vec![0.0; self.values.len()];
        for y in 0..h {
            for x in 0..w {
                // new(x, y) = old(w-1-y.., ..): standard rot90 on (row, col)
                values[y * w + x] = self.get(self.width - 1 - y, x);
            }
        }
        ImageField {
            width: w,
            height: h,
            pitch: self.pitch,
            values,
        }
    }

    /// Sum over rows `y_range` for every column.
    pub fn column_profile(&self, y_range: std::ops::Range<usize>) -> Vec<f64> {
        let mut profile = vec![0.0; self.width];
        for y in y_range {
            for (p, v) in profile.iter_mut().zip(self.row(y)) {
                *p += v;
            }
        }
        profile
    }

    /// Sum over columns `x_range` for every row.
    pub fn row_profile(&self, x_range: std::ops::Range<usize>) -> Vec<f64> {
        (0..self.height)
            .map(|y| self.row(y)[x_range.clone()].iter().sum())
            .collect()
    }

    pub fn grid(&self) -> GridSpec {
        GridSpec {
            width: self.width,
            height: self.height,
            pitch: self.pitch,
        }
    }

    /// Relative L2 distance ‖self − reference‖ / ‖reference‖.
    pub fn relative_l2(&self, reference: &ImageField) -> Result<f64> {
        if !self.same_shape(reference) {
            return Err(Error::ShapeMismatch("relative_l2 operands differ in shape".into()));
        }
        let (mut num, mut den) = (0.0, 0.0);
        for (a, b) in self.values.iter().zip(&reference.values) {
            num += (a - b) * (a - b);
            den += b * b;
        }
        Ok((num / den).sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(w: usize, h: usize) -> ImageField {
        ImageField::from_fn(w, h, 1e-5, |x, y| (x + 10 * y) as f64).unwrap()
    }

    #[test]
    fn rejects_bad_geometry() {
        assert!(ImageField::new(0, 3, 1.0, vec![]).is_err());
        assert!(ImageField::new(1, 1, 0.0, vec![1.0]).is_err());
        assert!(ImageField::new(2, 2, 1.0, vec![1.0; 3]).is_err());
        assert!(ImageField::new(1, 1, 1.0, vec![f64::NAN]).is_err());
    }

    #[test]
    fn resample_scales_pitch_and_keeps_power() {
        let img = ramp(8, 5);
        let out = img.resample(0.75).unwrap();
        assert!((out.pitch() - 7.5e-6).abs() < 1e-18);
        assert_eq!(out.width(), 8);
        assert_eq!(out.height(), 5);
        let rel = (out.total_power() - img.total_power()).abs() / img.total_power();
        assert!(rel < 1e-12);
        assert_eq!(img.resample(1.0).unwrap(), img);
        assert!(img.resample(0.0).is_err());
        assert!(img.resample(-1.0).is_err());
    }

    #[test]
    fn rotate_four_times_is_identity() {
        let img = ramp(7, 4);
        let r = img.rotate90();
        assert_eq!((r.width(), r.height()), (4, 7));
        assert_eq!(r.rotate90().rotate90().rotate90(), img);
        // top-right corner moves to top-left
        assert_eq!(r.get(0, 0), img.get(6, 0));
    }

    #[test]
    fn pad_then_crop() {
        let img = ramp(5, 3);
        let p = img.padded(4);
        assert_eq!((p.width(), p.height()), (13, 11));
        assert_eq!(p.sum(), img.sum());
        assert_eq!(p.cropped(4, 4, 5, 3).unwrap(), img);
    }
}
