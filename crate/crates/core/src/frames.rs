//! Time-gated camera frames.

use crate::error::{invalid, Error, Result};
use crate::image::ImageField;

/// Envelope weight of one incoherent component over one sub-window.
#[derive(Debug, Clone, PartialEq)]
pub struct SubWindow {
    /// Sub-window midpoint (s after the flip).
    pub t: f64,
    /// ∫|E_k|² dt over the sub-window, per component.
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    /// Window start, seconds after the flip.
    pub t_start: f64,
    pub duration: f64,
    pub image: ImageField,
    pub sub_windows: Vec<SubWindow>,
}

impl Frame {
    pub fn t_mid(&self) -> f64 {
        self.t_start + 0.5 * self.duration
    }

    /// Total envelope energy of component `k` inside the frame.
    pub fn component_energy(&self, k: usize) -> f64 {
        self.sub_windows.iter().map(|s| s.weights[k]).sum()
    }
}

/// Ordered frames sharing one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSet {
    frames: Vec<Frame>,
}

impl FrameSet {
    pub fn new(frames: Vec<Frame>) -> Result<Self> {
        for pair in frames.windows(2) {
            if !pair[0].image.same_grid(&pair[1].image) {
                return Err(Error::ShapeMismatch("frames must share one grid".into()));
            }
            if pair[1].t_start < pair[0].t_start + pair[0].duration - 1e-15 {
                return Err(invalid(format!(
                    "frames overlap at t = {:.3e} s",
                    pair[1].t_start
                )));
            }
        }
        for f in &frames {
            if !(f.duration > 0.0) {
                return Err(invalid("frame duration must be positive"));
            }
        }
        Ok(FrameSet { frames })
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// True when each frame starts where the previous one ended.
    pub fn is_contiguous(&self) -> bool {
        self.frames.windows(2).all(|p| {
            let end = p[0].t_start + p[0].duration;
            (p[1].t_start - end).abs() <= 1e-12 * end.abs().max(1e-9)
        })
    }
}
