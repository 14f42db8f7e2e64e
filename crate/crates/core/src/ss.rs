//! ANOVA sums of squares.
//!
//! The total sum of squares is reported as the sum of its components, so the
//! partition identity holds by construction. The direct computation
//! `sum (y - grand_mean)^2` is exposed separately for checking.

use serde::Serialize;

use crate::data::{OneWayDataset, TwoWayDataset};

/// Neumaier compensated summation.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::default();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

fn sum(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().collect::<CompensatedSum>().value()
}

fn mean(values: &[f64]) -> f64 {
    sum(values.iter().copied()) / values.len() as f64
}

fn squared_deviations(values: impl IntoIterator<Item = f64>, center: f64) -> f64 {
    sum(values.into_iter().map(|v| (v - center) * (v - center)))
}

/// Within (`w_e`), between (`w_h`) and total (`w_t`) sums of squares.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OneWaySS {
    pub w_t: f64,
    pub w_e: f64,
    pub w_h: f64,
}

impl OneWaySS {
    /// Builds the decomposition from its two components.
    pub fn from_components(w_e: f64, w_h: f64) -> Self {
        OneWaySS {
            w_t: w_e + w_h,
            w_e,
            w_h,
        }
    }

    /// `W_E / W_T`, formed as `w_e / (w_e + w_h)` so it never exceeds one.
    pub fn within_ratio(&self) -> f64 {
        self.w_e / (self.w_e + self.w_h)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoWaySS {
    pub w_t: f64,
    pub w_a: f64,
    pub w_b: f64,
    pub w_ab: f64,
    pub w_e: f64,
}

impl TwoWaySS {
    pub fn from_components(w_a: f64, w_b: f64, w_ab: f64, w_e: f64) -> Self {
        TwoWaySS {
            w_t: w_a + w_b + w_ab + w_e,
            w_a,
            w_b,
            w_ab,
            w_e,
        }
    }
}

pub fn one_way_ss(d: &OneWayDataset) -> OneWaySS {
    let r = d.r() as f64;
    let level_means: Vec<f64> = d.rows().map(mean).collect();
    let grand = mean(d.values());

    let w_e = sum(d
        .rows()
        .zip(&level_means)
        .map(|(row, &m)| squared_deviations(row.iter().copied(), m)));
    let w_h = r * squared_deviations(level_means.iter().copied(), grand);
    OneWaySS::from_components(w_e, w_h)
}

pub fn two_way_ss(d: &TwoWayDataset) -> TwoWaySS {
    let (p, q) = (d.p(), d.q());
    let r = d.r() as f64;

    let cell_means: Vec<f64> = (0..p)
        .flat_map(|i| (0..q).map(move |j| (i, j)))
        .map(|(i, j)| mean(d.cell(i, j)))
        .collect();
    let cell_mean = |i: usize, j: usize| cell_means[i * q + j];

    // Balanced design: marginal means are means of the cell means.
    let a_means: Vec<f64> = (0..p)
        .map(|i| sum((0..q).map(|j| cell_mean(i, j))) / q as f64)
        .collect();
    let b_means: Vec<f64> = (0..q)
        .map(|j| sum((0..p).map(|i| cell_mean(i, j))) / p as f64)
        .collect();
    let grand = mean(d.values());

    let w_a = (q as f64 * r) * squared_deviations(a_means.iter().copied(), grand);
    let w_b = (p as f64 * r) * squared_deviations(b_means.iter().copied(), grand);
    let w_ab = r * sum((0..p).flat_map(|i| {
        let (a_means, b_means) = (&a_means, &b_means);
        let cell_means = &cell_means;
        (0..q).map(move |j| {
            let dev = cell_means[i * q + j] - a_means[i] - b_means[j] + grand;
            dev * dev
        })
    }));
    let w_e = sum((0..p).flat_map(|i| {
        (0..q).map(move |j| squared_deviations(d.cell(i, j).iter().copied(), cell_mean(i, j)))
    }));
    TwoWaySS::from_components(w_a, w_b, w_ab, w_e)
}

/// `sum (y - mean(y))^2` computed directly from the observations.
pub fn total_ss_direct(values: &[f64]) -> f64 {
    squared_deviations(values.iter().copied(), mean(values))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_way_separated_groups() {
        let d = OneWayDataset::from_rows(vec![vec![1.0, 1.0], vec![2.0, 2.0]]).unwrap();
        assert_eq!(one_way_ss(&d), OneWaySS::from_components(0.0, 1.0));
    }

    #[test]
    fn one_way_equal_means() {
        let d = OneWayDataset::from_rows(vec![vec![0.0, 2.0], vec![0.0, 2.0]]).unwrap();
        let ss = one_way_ss(&d);
        assert_eq!((ss.w_e, ss.w_h, ss.w_t), (4.0, 0.0, 4.0));
    }

    #[test]
    fn two_way_a_only() {
        let a = [3.0, -1.0, 7.5];
        let cells = a.iter().map(|&ai| vec![vec![ai; 2]; 2]).collect::<Vec<_>>();
        let d = TwoWayDataset::from_cells(cells).unwrap();
        let ss = two_way_ss(&d);
        assert_eq!((ss.w_b, ss.w_ab, ss.w_e), (0.0, 0.0, 0.0));
        assert!(ss.w_a > 0.0);
        assert_eq!(ss.w_t, ss.w_a);
    }

    #[test]
    fn two_way_constant() {
        let d = TwoWayDataset::from_cells(vec![vec![vec![4.2; 3]; 2]; 2]).unwrap();
        assert_eq!(
            two_way_ss(&d),
            TwoWaySS::from_components(0.0, 0.0, 0.0, 0.0)
        );
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let s: CompensatedSum = [1e16, 1.0, -1e16, 1.0].into_iter().collect();
        assert_eq!(s.value(), 2.0);
    }
}
