use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::special::f_survival;
use crate::error::{param, Error, Result};

/// Running count, mean and sum of squared deviations. Partial results from
/// different workers combine with [`Moments::merge`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub count: usize,
    pub mean: f64,
    pub m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(self, other: Moments) -> Moments {
        if self.count == 0 {
            return other;
        }
        if other.count == 0 {
            return self;
        }
        let n = self.count + other.count;
        let (na, nb) = (self.count as f64, other.count as f64);
        let delta = other.mean - self.mean;
        Moments {
            count: n,
            mean: (na * self.mean + nb * other.mean) / n as f64,
            m2: self.m2 + other.m2 + delta * delta * na * nb / n as f64,
        }
    }

    /// Sample standard deviation (n − 1 denominator); 0 for a single value.
    pub fn sample_std(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2.max(0.0) / (self.count - 1) as f64).sqrt()
        }
    }
}

impl FromIterator<f64> for Moments {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut m = Moments::default();
        for x in iter {
            m.push(x);
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `counts.len() + 1` bin edges; bins are `[edge_i, edge_{i+1})`.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

/// Fixed-width histogram over `range`; values outside fall into the end bins.
pub fn histogram(scores: &[f64], bin_width: f64, range: (f64, f64)) -> Result<Histogram> {
    let (lo, hi) = range;
    if !(bin_width > 0.0) {
        return Err(param("bin_width", "must be > 0"));
    }
    if !(hi > lo) {
        return Err(param("range", "upper bound must exceed lower bound"));
    }
    let bins = ((hi - lo) / bin_width).round().max(1.0) as usize;
    let edges: Vec<f64> = (0..=bins).map(|i| lo + i as f64 * bin_width).collect();
    let mut counts = vec![0usize; bins];
    for &s in scores {
        let mut idx = ((s - lo) / bin_width).floor().clamp(0.0, (bins - 1) as f64) as usize;
        // settle rounding against the emitted edges
        while idx + 1 < bins && s >= edges[idx + 1] {
            idx += 1;
        }
        while idx > 0 && s < edges[idx] {
            idx -= 1;
        }
        counts[idx] += 1;
    }
    Ok(Histogram { edges, counts })
}

/// One-way ANOVA result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Anova {
    /// `+inf` when all within-group variance is zero but group means differ.
    #[serde(serialize_with = "ser_f64_ext", deserialize_with = "de_f64_ext")]
    pub f: f64,
    pub df_between: usize,
    pub df_within: usize,
    pub p_value: f64,
}

fn ser_f64_ext<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if *v > 0.0 {
        s.serialize_str("inf")
    } else if *v < 0.0 {
        s.serialize_str("-inf")
    } else {
        s.serialize_str("nan")
    }
}

fn de_f64_ext<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }
    match Repr::deserialize(d)? {
        Repr::Num(v) => Ok(v),
        Repr::Text(t) => match t.as_str() {
            "inf" => Ok(f64::INFINITY),
            "-inf" => Ok(f64::NEG_INFINITY),
            "nan" => Ok(f64::NAN),
            other => Err(serde::de::Error::custom(format!("bad float `{other}`"))),
        },
    }
}

/// One-way ANOVA F test of equal group means.
pub fn anova_f(groups: &[Vec<f64>]) -> Result<Anova> {
    if groups.len() < 2 {
        return Err(Error::Statistics(format!(
            "ANOVA: ≥2 groups required, got {}",
            groups.len()
        )));
    }
    if let Some(small) = groups.iter().position(|g| g.len() < 2) {
        return Err(Error::Statistics(format!(
            "ANOVA group {small} has fewer than 2 samples"
        )));
    }
    let stats: Vec<Moments> = groups.iter().map(|g| g.iter().copied().collect()).collect();
    let total = stats.iter().fold(Moments::default(), |a, b| a.merge(*b));
    let g = groups.len();
    let n = total.count;
    let ss_between: f64 = stats
        .iter()
        .map(|m| m.count as f64 * (m.mean - total.mean).powi(2))
        .sum();
    let ss_within: f64 = stats.iter().map(|m| m.m2).sum();
    let df_between = g - 1;
    let df_within = n - g;
    let ms_between = ss_between / df_between as f64;
    let ms_within = ss_within / df_within as f64;

    // exact ties produce round-off sized sums of squares; treat them as zero
    let scale = groups
        .iter()
        .flatten()
        .map(|x| x * x)
        .sum::<f64>()
        .max(f64::MIN_POSITIVE);
    let eps = 1e-24 * scale;
    let between_zero = ss_between <= eps;
    let within_zero = ss_within <= eps;

    let (f, p_value) = match (between_zero, within_zero) {
        (true, true) | (true, false) => (0.0, 1.0),
        (false, true) => (f64::INFINITY, 0.0),
        (false, false) => {
            let f = ms_between / ms_within;
            (f, f_survival(f, df_between as f64, df_within as f64))
        }
    };
    Ok(Anova {
        f,
        df_between,
        df_within,
        p_value,
    })
}
