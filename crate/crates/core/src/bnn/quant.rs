//! Dead-zone weight quantizer.
//!
//! Magnitudes below the dead zone snap to exactly zero. Everything else
//! snaps to a uniform grid of `2^(bits-1)` levels per sign spanning
//! `[deadzone, range]`, so the largest-to-smallest nonzero magnitude ratio
//! is bounded by `range / deadzone`.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantSpec {
    pub bits: u8,
    pub deadzone: f64,
    pub range: f64,
}

impl Default for QuantSpec {
    fn default() -> Self {
        Self { bits: 8, deadzone: 0.1, range: 1.0 }
    }
}

impl QuantSpec {
    /// Grid levels available per sign.
    pub fn levels(&self) -> u32 {
        1u32 << (self.bits.saturating_sub(1))
    }

    fn step(&self) -> f64 {
        (self.range - self.deadzone) / (self.levels() - 1) as f64
    }

    /// Grid value of level `k` (0 = `deadzone`, `levels-1` = `range`).
    pub fn level_value(&self, k: u32) -> f64 {
        let top = self.levels() - 1;
        match k {
            0 => self.deadzone,
            k if k >= top => self.range,
            k => self.deadzone + k as f64 * self.step(),
        }
    }

    /// Grid level for a magnitude at or above the dead zone.
    pub fn level_of(&self, magnitude: f64) -> u32 {
        let top = self.levels() - 1;
        let k = ((magnitude.min(self.range) - self.deadzone) / self.step()).round();
        (k.max(0.0) as u32).min(top)
    }

    pub fn quantize(&self, w: f64) -> f64 {
        let w = w.clamp(-self.range, self.range);
        let m = w.abs();
        if m < self.deadzone {
            return 0.0;
        }
        self.level_value(self.level_of(m)).copysign(w)
    }

    /// Whether `w` already lies on the grid (or is zero).
    pub fn is_on_grid(&self, w: f64) -> bool {
        w == 0.0 || self.quantize(w) == w
    }
}
