use crate::error::{Error, Result};

/// Axis-aligned box `[lower_j, upper_j]` in `R^d`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct BoxDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::InvalidArgument(format!(
                "box bounds must be non-empty and of equal length ({} vs {})",
                lower.len(),
                upper.len()
            )));
        }
        for (j, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidArgument(format!(
                    "coordinate {j}: need finite lower < upper, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo], vec![hi])
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

    pub fn width(&self, j: usize) -> f64 {
        self.upper[j] - self.lower[j]
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|j| self.width(j)).product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for (j, v) in x.iter_mut().enumerate() {
            *v = v.clamp(self.lower[j], self.upper[j]);
        }
    }

    /// Whether `x` lies within `tol` (per coordinate) of a face of the box.
    pub fn near_boundary(&self, x: &[f64], tol: f64) -> bool {
        x.iter()
            .enumerate()
            .any(|(j, v)| (v - self.lower[j]).abs() <= tol || (self.upper[j] - v).abs() <= tol)
    }
}

impl TryFrom<Vec<[f64; 2]>> for BoxDomain {
    type Error = Error;

    fn try_from(bounds: Vec<[f64; 2]>) -> Result<Self> {
        let (lower, upper) = bounds.into_iter().map(|[a, b]| (a, b)).unzip();
        Self::new(lower, upper)
    }
}

impl From<BoxDomain> for Vec<[f64; 2]> {
    fn from(b: BoxDomain) -> Self {
        b.lower.into_iter().zip(b.upper).map(|(a, b)| [a, b]).collect()
    }
}
