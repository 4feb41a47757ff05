use crate::error::{Error, Result};

/// Axis-aligned box `lower <= x <= upper`. Either bound may be infinite.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxRegion {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxRegion {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::InvalidParameter(format!(
                "box bounds have different lengths ({} and {})",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (&lo, &hi)) in lower.iter().zip(&upper).enumerate() {
            if lo.is_nan() || hi.is_nan() || !(lo < hi) {
                return Err(Error::InvalidParameter(format!(
                    "box coordinate {i}: lower bound {lo} must be below upper bound {hi}"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// `[-half_width, half_width]` in every coordinate.
    pub fn symmetric(dim: usize, half_width: f64) -> Result<Self> {
        Self::new(vec![-half_width; dim], vec![half_width; dim])
    }

    pub fn unbounded(dim: usize) -> Self {
        Self { lower: vec![f64::NEG_INFINITY; dim], upper: vec![f64::INFINITY; dim] }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (lo, hi))| lo <= v && v <= hi)
    }

    pub fn is_bounded(&self) -> bool {
        self.lower.iter().chain(&self.upper).all(|v| v.is_finite())
    }

    pub fn volume(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(lo, hi)| hi - lo).product()
    }

    pub fn intersect(&self, other: &BoxRegion) -> Result<BoxRegion> {
        if self.dim() != other.dim() {
            return Err(Error::InvalidParameter("intersecting boxes of different dimension".into()));
        }
        let lower = self.lower.iter().zip(&other.lower).map(|(a, b)| a.max(*b)).collect();
        let upper = self.upper.iter().zip(&other.upper).map(|(a, b)| a.min(*b)).collect();
        BoxRegion::new(lower, upper)
    }

    /// `true` if `other` lies entirely inside `self`.
    pub fn encloses(&self, other: &BoxRegion) -> bool {
        self.dim() == other.dim()
            && self.lower.iter().zip(&other.lower).all(|(a, b)| a <= b)
            && self.upper.iter().zip(&other.upper).all(|(a, b)| a >= b)
    }
}
