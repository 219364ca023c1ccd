use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Observed multivariate series with a missingness mask.
///
/// Row `t` (0-based) holds `y_{t+1}`. Missing cells store `NaN` in `y` and
/// `false` in the mask; the mask is authoritative.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesData {
    y: DMatrix<f64>,
    observed: Vec<bool>,
    names: Vec<String>,
    time: Option<Vec<String>>,
}

impl SeriesData {
    /// `observed` is row-major with `T·n` entries.
    pub fn new(y: DMatrix<f64>, observed: Vec<bool>) -> Result<Self> {
        let (t, n) = y.shape();
        if t == 0 || n == 0 {
            return Err(Error::Insufficient("series must have at least one row and column".into()));
        }
        if observed.len() != t * n {
            return Err(Error::Dimension(format!(
                "mask has {} entries, expected {}",
                observed.len(),
                t * n
            )));
        }
        let mut y = y;
        for row in 0..t {
            for col in 0..n {
                if observed[row * n + col] {
                    if !y[(row, col)].is_finite() {
                        return Err(Error::param(
                            format!("y[{},{}]", row + 1, col + 1),
                            "observed value must be finite",
                        ));
                    }
                } else {
                    y[(row, col)] = f64::NAN;
                }
            }
        }
        if !observed.iter().any(|&o| o) {
            return Err(Error::Insufficient("no observed cells".into()));
        }
        let names = (1..=n).map(|i| format!("Y{i}")).collect();
        Ok(Self {
            y,
            observed,
            names,
            time: None,
        })
    }

    /// Fully observed data.
    pub fn complete(y: DMatrix<f64>) -> Result<Self> {
        let len = y.len();
        Self::new(y, vec![true; len])
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.n() {
            return Err(Error::Dimension("one name per series required".into()));
        }
        self.names = names;
        Ok(self)
    }

    pub fn with_time(mut self, time: Vec<String>) -> Result<Self> {
        if time.len() != self.len() {
            return Err(Error::Dimension("one time label per row required".into()));
        }
        self.time = Some(time);
        Ok(self)
    }

    /// Number of time points `T`.
    pub fn len(&self) -> usize {
        self.y.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.y.nrows() == 0
    }

    pub fn n(&self) -> usize {
        self.y.ncols()
    }

    pub fn y(&self) -> &DMatrix<f64> {
        &self.y
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn time(&self) -> Option<&[String]> {
        self.time.as_deref()
    }

    pub fn mask(&self) -> &[bool] {
        &self.observed
    }

    pub fn is_observed(&self, t: usize, i: usize) -> bool {
        self.observed[t * self.n() + i]
    }

    pub fn value(&self, t: usize, i: usize) -> Option<f64> {
        self.is_observed(t, i).then(|| self.y[(t, i)])
    }

    /// Observation vector at row `t` (missing cells are `NaN`).
    pub fn row(&self, t: usize) -> DVector<f64> {
        self.y.row(t).transpose()
    }

    /// Indices of observed components at row `t`.
    pub fn observed_indices(&self, t: usize) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.is_observed(t, i)).collect()
    }

    pub fn missing_cells(&self) -> Vec<(usize, usize)> {
        let n = self.n();
        (0..self.len())
            .flat_map(|t| (0..n).map(move |i| (t, i)))
            .filter(|&(t, i)| !self.is_observed(t, i))
            .collect()
    }

    pub fn n_observed(&self) -> usize {
        self.observed.iter().filter(|&&o| o).count()
    }

    /// First `len` rows.
    pub fn truncated(&self, len: usize) -> Result<Self> {
        let len = len.min(self.len());
        let n = self.n();
        let mut out = Self::new(
            self.y.rows(0, len).into_owned(),
            self.observed[..len * n].to_vec(),
        )?;
        out.names = self.names.clone();
        out.time = self.time.as_ref().map(|t| t[..len].to_vec());
        Ok(out)
    }
}

/// Combine `data`'s mask with `mask` (row-major `T·n`); a cell stays observed
/// only if both agree.
pub fn apply_missingness(data: &SeriesData, mask: &[bool]) -> Result<SeriesData> {
    if mask.len() != data.observed.len() {
        return Err(Error::Dimension(format!(
            "mask has {} entries, data has {}",
            mask.len(),
            data.observed.len()
        )));
    }
    let combined: Vec<bool> = data
        .observed
        .iter()
        .zip(mask)
        .map(|(&a, &b)| a && b)
        .collect();
    let mut out = SeriesData::new(data.y.clone(), combined)?;
    out.names = data.names.clone();
    out.time = data.time.clone();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SeriesData {
        SeriesData::complete(DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0])).unwrap()
    }

    #[test]
    fn all_true_mask_is_identity() {
        let d = sample();
        let out = apply_missingness(&d, &[true; 6]).unwrap();
        assert_eq!(out, d);
    }

    #[test]
    fn all_false_row() {
        let d = sample();
        let out = apply_missingness(&d, &[true, true, false, false, true, true]).unwrap();
        assert!(out.observed_indices(1).is_empty());
        assert_eq!(out.value(1, 0), None);
        assert_eq!(out.value(2, 1), Some(6.0));
        assert_eq!(out.missing_cells(), vec![(1, 0), (1, 1)]);
    }

    #[test]
    fn shape_mismatch_and_empty() {
        let d = sample();
        assert!(apply_missingness(&d, &[true; 5]).is_err());
        assert!(apply_missingness(&d, &[false; 6]).is_err());
    }

    #[test]
    fn missing_cells_stored_as_nan() {
        let d = SeriesData::new(DMatrix::from_row_slice(1, 2, &[1.0, 99.0]), vec![true, false]).unwrap();
        assert!(d.y()[(0, 1)].is_nan());
    }
}
