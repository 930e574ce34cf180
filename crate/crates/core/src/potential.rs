//! Nearest-neighbour repulsion laws.
//!
//! A [`PairLaw`] supplies the pair force `f(r) = -dV/dr`, its inverse and
//! the pair potential `V(r)`. Every law here is strictly positive and
//! strictly decreasing in `r`; the shooting solver depends on that to invert
//! the force balance of each particle uniquely.
//!
//! Two kinds are supported:
//!
//! - the power law `f(r) = alpha * r^(-a)` with `a > 1`, for which
//!   `V(r) = alpha * r^(1-a) / (a-1)` (normalised so that `V(inf) = 0`);
//! - a tabulated law, linear between samples, whose potential is the
//!   integral of the table from `r` to its last sample plus a declared tail.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PairLawSpec", into = "PairLawSpec")]
pub enum PairLaw {
    Power(PowerLaw),
    Table(TabulatedLaw),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLaw {
    alpha: f64,
    exponent: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedLaw {
    r: Vec<f64>,
    f: Vec<f64>,
    tail: f64,
    // integral of f from r[i] to the last sample
    cumulative: Vec<f64>,
}

impl PowerLaw {
    pub fn new(alpha: f64, exponent: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::domain(format!("alpha must be positive, got {alpha}")));
        }
        if !(exponent.is_finite() && exponent > 1.0) {
            return Err(Error::domain(format!("exponent a must exceed 1, got {exponent}")));
        }
        Ok(Self { alpha, exponent })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }
}

impl TabulatedLaw {
    /// Builds a law from `(r, f(r))` samples. `r` must be strictly increasing,
    /// `f` strictly decreasing and positive. `tail` is `V` at the last sample.
    pub fn new(points: &[(f64, f64)], tail: f64) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::domain("tabulated law needs at least two points"));
        }
        if !tail.is_finite() {
            return Err(Error::domain("tail value must be finite"));
        }
        for w in points.windows(2) {
            let ((r0, f0), (r1, f1)) = (w[0], w[1]);
            if !(r1 > r0) {
                return Err(Error::domain(format!("table radii not increasing at r = {r1}")));
            }
            if !(f1 < f0) {
                return Err(Error::domain(format!(
                    "table force not strictly decreasing at r = {r1}"
                )));
            }
        }
        let (r, f): (Vec<f64>, Vec<f64>) = points.iter().copied().unzip();
        if r[0] <= 0.0 || !r.iter().all(|v| v.is_finite()) {
            return Err(Error::domain("table radii must be finite and positive"));
        }
        if !(f[f.len() - 1] > 0.0) || !f.iter().all(|v| v.is_finite()) {
            return Err(Error::domain("table forces must be finite and positive"));
        }
        let mut cumulative = vec![0.0; r.len()];
        for i in (0..r.len() - 1).rev() {
            cumulative[i] = cumulative[i + 1] + 0.5 * (f[i] + f[i + 1]) * (r[i + 1] - r[i]);
        }
        Ok(Self { r, f, tail, cumulative })
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.r.iter().copied().zip(self.f.iter().copied())
    }

    pub fn tail(&self) -> f64 {
        self.tail
    }

    fn r_range(&self) -> (f64, f64) {
        (self.r[0], self.r[self.r.len() - 1])
    }

    fn f_range(&self) -> (f64, f64) {
        (self.f[self.f.len() - 1], self.f[0])
    }

    /// Index `i` of the segment `[r[i], r[i+1]]` holding `r`.
    fn segment(&self, r: f64) -> Result<usize> {
        let (lo, hi) = self.r_range();
        if !(lo..=hi).contains(&r) {
            return Err(Error::Range { value: r, min: lo, max: hi });
        }
        let i = self.r.partition_point(|&ri| ri <= r);
        Ok(i.saturating_sub(1).min(self.r.len() - 2))
    }

    fn force(&self, r: f64) -> Result<f64> {
        let i = self.segment(r)?;
        let t = (r - self.r[i]) / (self.r[i + 1] - self.r[i]);
        Ok(self.f[i] + t * (self.f[i + 1] - self.f[i]))
    }

    fn inverse(&self, y: f64) -> Result<f64> {
        let (lo, hi) = self.f_range();
        if !(lo..=hi).contains(&y) {
            return Err(Error::Range { value: y, min: lo, max: hi });
        }
        // f is decreasing: bisect on the sample index, then solve the segment.
        let i = self.f.partition_point(|&fi| fi > y);
        if i == 0 {
            return Ok(self.r[0]);
        }
        let i = (i - 1).min(self.f.len() - 2);
        let t = (self.f[i] - y) / (self.f[i] - self.f[i + 1]);
        Ok(self.r[i] + t * (self.r[i + 1] - self.r[i]))
    }

    fn potential(&self, r: f64) -> Result<f64> {
        let i = self.segment(r)?;
        let fr = self.force(r)?;
        let partial = 0.5 * (fr + self.f[i + 1]) * (self.r[i + 1] - r);
        Ok(self.tail + self.cumulative[i + 1] + partial)
    }
}

impl PairLaw {
    pub fn power(alpha: f64, exponent: f64) -> Result<Self> {
        PowerLaw::new(alpha, exponent).map(PairLaw::Power)
    }

    /// `f(r) = r^(-a)`, the normalisation used by all asymptotic checks.
    pub fn unit_power(exponent: f64) -> Result<Self> {
        Self::power(1.0, exponent)
    }

    pub fn table(points: &[(f64, f64)], tail: f64) -> Result<Self> {
        TabulatedLaw::new(points, tail).map(PairLaw::Table)
    }

    /// Exponent `a` of the power law, `None` for tabulated laws.
    pub fn exponent(&self) -> Option<f64> {
        match self {
            PairLaw::Power(p) => Some(p.exponent),
            PairLaw::Table(_) => None,
        }
    }

    /// Pair force `f(r)`.
    pub fn force(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::domain(format!("pair distance must be positive, got {r}")));
        }
        match self {
            PairLaw::Power(p) => Ok(p.alpha * r.powf(-p.exponent)),
            PairLaw::Table(t) => t.force(r),
        }
    }

    /// The distance `r` with `f(r) = y`.
    pub fn inverse_force(&self, y: f64) -> Result<f64> {
        if !(y > 0.0) {
            return Err(Error::NoSolution(format!(
                "pair force is strictly positive, cannot equal {y}"
            )));
        }
        match self {
            PairLaw::Power(p) => Ok((y / p.alpha).powf(-1.0 / p.exponent)),
            PairLaw::Table(t) => t.inverse(y),
        }
    }

    /// Pair potential `V(r)`.
    pub fn potential(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::domain(format!("pair distance must be positive, got {r}")));
        }
        match self {
            PairLaw::Power(p) => {
                let m = p.exponent - 1.0;
                Ok(p.alpha * r.powf(-m) / m)
            }
            PairLaw::Table(t) => t.potential(r),
        }
    }

    /// `-f'(r)`, the local pair stiffness. Tabulated laws use the slope of
    /// the enclosing segment.
    pub fn stiffness(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::domain(format!("pair distance must be positive, got {r}")));
        }
        match self {
            PairLaw::Power(p) => Ok(p.alpha * p.exponent * r.powf(-p.exponent - 1.0)),
            PairLaw::Table(t) => {
                let i = t.segment(r)?;
                Ok((t.f[i] - t.f[i + 1]) / (t.r[i + 1] - t.r[i]))
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum PairLawSpec {
    Power {
        #[serde(default = "default_alpha")]
        alpha: f64,
        a: f64,
    },
    Table {
        points: Vec<(f64, f64)>,
        #[serde(default)]
        tail: f64,
    },
}

fn default_alpha() -> f64 {
    1.0
}

impl TryFrom<PairLawSpec> for PairLaw {
    type Error = Error;

    fn try_from(spec: PairLawSpec) -> Result<Self> {
        match spec {
            PairLawSpec::Power { alpha, a } => PairLaw::power(alpha, a),
            PairLawSpec::Table { points, tail } => PairLaw::table(&points, tail),
        }
    }
}

impl From<PairLaw> for PairLawSpec {
    fn from(law: PairLaw) -> Self {
        match law {
            PairLaw::Power(p) => PairLawSpec::Power { alpha: p.alpha, a: p.exponent },
            PairLaw::Table(t) => PairLawSpec::Table {
                points: t.points().collect(),
                tail: t.tail,
            },
        }
    }
}
