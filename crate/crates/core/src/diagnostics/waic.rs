use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// WAIC on the higher-is-better scale: `waic = lppd − p_waic`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaicReport {
    pub lppd: f64,
    pub p_waic: f64,
    pub waic: f64,
    /// Per-time contributions `2·mean_s lp − log mean_s exp(lp)`; they sum to `waic`.
    pub per_point: Vec<f64>,
    pub n_draws: usize,
}

impl WaicReport {
    /// `p_waic` below −0.01 signals Monte-Carlo noise or a broken input.
    pub fn negative_penalty(&self) -> bool {
        self.p_waic < -0.01
    }
}

/// WAIC from a `draws × T` matrix of pointwise log predictive densities.
///
/// Per time point, with `M = max_s lp_s`:
/// `log mean exp(lp) = M + log(Σ exp(lp_s − M) / S)` and
/// `mean lp = M + Σ (lp_s − M) / S`, so identical draws give `p_waic = 0`
/// exactly.
pub fn waic(pointwise_lp: &DMatrix<f64>) -> Result<WaicReport> {
    let (s, t_len) = pointwise_lp.shape();
    if s < 2 {
        return Err(Error::Insufficient(format!("WAIC needs at least 2 draws, got {s}")));
    }
    if let Some(pos) = pointwise_lp.iter().position(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!(
            "non-finite pointwise log density at draw {}, time {}",
            pos % s + 1,
            pos / s + 1
        )));
    }
    let sf = s as f64;
    let mut lppd = 0.0;
    let mut p_waic = 0.0;
    let mut per_point = Vec::with_capacity(t_len);
    for col in pointwise_lp.column_iter() {
        let max = col.max();
        let (mut sum_exp, mut sum_dev) = (0.0, 0.0);
        for &v in col.iter() {
            sum_exp += (v - max).exp();
            sum_dev += v - max;
        }
        let log_mean = max + (sum_exp / sf).ln();
        let mean_log = max + sum_dev / sf;
        let pen = 2.0 * (log_mean - mean_log);
        lppd += log_mean;
        p_waic += pen;
        per_point.push(log_mean - pen);
    }
    Ok(WaicReport {
        lppd,
        p_waic,
        waic: lppd - p_waic,
        per_point,
        n_draws: s,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedModel {
    pub name: String,
    pub waic: f64,
    /// `waic − best waic` (zero for the top model, negative otherwise).
    pub delta: f64,
}

/// Models sorted by decreasing WAIC.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelRanking {
    pub ranked: Vec<RankedModel>,
    /// `(a, b, waic_a − waic_b)` for every pair in ranked order.
    pub differences: Vec<(String, String, f64)>,
    /// The top two models have equal WAIC.
    pub tie: bool,
}

impl ModelRanking {
    /// Name of the selected model, `None` on a tie.
    pub fn selected(&self) -> Option<&str> {
        (!self.tie).then(|| self.ranked[0].name.as_str())
    }
}

/// Rank models by WAIC (higher is better); ties keep name order.
pub fn compare_models(reports: &[(String, WaicReport)]) -> Result<ModelRanking> {
    if reports.len() < 2 {
        return Err(Error::Insufficient("model comparison needs at least 2 reports".into()));
    }
    let t_len = reports[0].1.per_point.len();
    if let Some((name, _)) = reports.iter().find(|(_, r)| r.per_point.len() != t_len) {
        return Err(Error::Dimension(format!(
            "report `{name}` covers a different number of time points"
        )));
    }
    let mut order: Vec<&(String, WaicReport)> = reports.iter().collect();
    order.sort_by(|a, b| b.1.waic.total_cmp(&a.1.waic).then_with(|| a.0.cmp(&b.0)));
    let best = order[0].1.waic;
    let ranked: Vec<RankedModel> = order
        .iter()
        .map(|(name, r)| RankedModel {
            name: name.clone(),
            waic: r.waic,
            delta: r.waic - best,
        })
        .collect();
    let mut differences = Vec::new();
    for i in 0..ranked.len() {
        for j in (i + 1)..ranked.len() {
            differences.push((ranked[i].name.clone(), ranked[j].name.clone(), ranked[i].waic - ranked[j].waic));
        }
    }
    let tie = ranked[0].waic == ranked[1].waic;
    Ok(ModelRanking {
        ranked,
        differences,
        tie,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn report(name: &str, waic_value: f64) -> (String, WaicReport) {
        (
            name.to_string(),
            WaicReport {
                lppd: waic_value,
                p_waic: 0.0,
                waic: waic_value,
                per_point: vec![waic_value],
                n_draws: 2,
            },
        )
    }

    #[test]
    fn identical_draws_have_zero_penalty() {
        let row = [-1.3, -0.2, -7.7, -2.0];
        let m = DMatrix::from_fn(5, 4, |_, t| row[t]);
        let r = waic(&m).unwrap();
        assert_eq!(r.p_waic, 0.0);
        assert_eq!(r.waic, row.iter().sum::<f64>());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(waic(&DMatrix::zeros(1, 3)).is_err());
        let mut m = DMatrix::zeros(3, 3);
        m[(1, 2)] = f64::NAN;
        assert!(waic(&m).is_err());
    }

    #[test]
    fn montreal_values_select_garch() {
        let ranking = compare_models(&[report("standard", -24676.52), report("garch", -23958.42)]).unwrap();
        assert_eq!(ranking.selected(), Some("garch"));
        assert!((ranking.differences[0].2 - 718.10).abs() < 1e-6);
    }

    #[test]
    fn ties_are_stable_by_name() {
        let ranking = compare_models(&[report("b", -5.0), report("a", -5.0)]).unwrap();
        assert!(ranking.tie);
        assert_eq!(ranking.selected(), None);
        assert_eq!(ranking.ranked[0].name, "a");
    }

    #[test]
    fn mismatched_lengths_rejected() {
        let mut b = report("b", 1.0);
        b.1.per_point.push(0.0);
        assert!(compare_models(&[report("a", 1.0), b]).is_err());
    }

    proptest! {
        #[test]
        fn identity_forms_agree(vals in proptest::collection::vec(-50.0f64..5.0, 12)) {
            let m = DMatrix::from_column_slice(4, 3, &vals);
            let r = waic(&m).unwrap();
            let mut two_mean_log = 0.0;
            let mut log_mean = 0.0;
            for col in m.column_iter() {
                two_mean_log += 2.0 * col.mean();
                log_mean += (col.iter().map(|v| v.exp()).sum::<f64>() / 4.0).ln();
            }
            prop_assert!((r.waic - (r.lppd - r.p_waic)).abs() < 1e-10);
            prop_assert!((r.waic - (two_mean_log - log_mean)).abs() < 1e-10);
            prop_assert!((r.per_point.iter().sum::<f64>() - r.waic).abs() < 1e-10);
            prop_assert!(r.p_waic >= -1e-12);
        }

        #[test]
        fn shift_is_additive(vals in proptest::collection::vec(-50.0f64..5.0, 12)) {
            let m = DMatrix::from_column_slice(4, 3, &vals);
            let shifted = m.map(|v| v + 1000.0);
            let a = waic(&m).unwrap();
            let b = waic(&shifted).unwrap();
            prop_assert!((b.waic - a.waic - 3000.0).abs() < 1e-9);
        }

        #[test]
        fn ranking_invariant_to_common_shift(
            a in proptest::collection::vec(-20.0f64..0.0, 6),
            b in proptest::collection::vec(-20.0f64..0.0, 6),
            shift in proptest::collection::vec(-100.0f64..100.0, 3),
        ) {
            let ma = DMatrix::from_column_slice(2, 3, &a);
            let mb = DMatrix::from_column_slice(2, 3, &b);
            let add = |m: &DMatrix<f64>| DMatrix::from_fn(2, 3, |s, t| m[(s, t)] + shift[t]);
            let before = compare_models(&[("a".into(), waic(&ma).unwrap()), ("b".into(), waic(&mb).unwrap())]).unwrap();
            let after = compare_models(&[("a".into(), waic(&add(&ma)).unwrap()), ("b".into(), waic(&add(&mb)).unwrap())]).unwrap();
            // Equal up to rounding: only compare when the gap is not at noise level.
            if before.differences[0].2.abs() > 1e-8 {
                prop_assert_eq!(&before.ranked[0].name, &after.ranked[0].name);
            }
        }
    }
}
