//! Accuracy and sample-efficiency scores, and their aggregation over runs.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficient of determination of `y_pred` against `y_true`.
pub fn r2(y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
    if y_true.len() != y_pred.len() {
        return Err(Error::DimensionMismatch {
            expected: y_true.len(),
            got: y_pred.len(),
        });
    }
    if y_true.len() < 2 {
        return Err(Error::Argument("R² needs at least two samples".into()));
    }
    let mean = y_true.iter().sum::<f64>() / y_true.len() as f64;
    let ss_tot: f64 = y_true.iter().map(|y| (y - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(Error::UndefinedMetric("R² of a constant target".into()));
    }
    let ss_res: f64 = y_true.iter().zip(y_pred).map(|(y, p)| (y - p).powi(2)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Normalized area under a clamped R² history `r2[0..=s]`.
///
/// Composite Simpson over an even number of intervals; when `s` is odd the
/// first interval is integrated with the trapezoid rule instead. For `s = 1`
/// the Simpson part is empty and only the trapezoid contributes.
pub fn r2_area(history: &[f64]) -> Result<f64> {
    if history.len() < 2 {
        return Err(Error::Argument(
            "R² area needs at least two history entries (s >= 1)".into(),
        ));
    }
    let s = history.len() - 1;
    let xi = s % 2;
    let trapezoid = if xi == 1 {
        0.5 * (history[0] + history[1])
    } else {
        0.0
    };
    let half = (s - xi) / 2;
    let simpson = if half == 0 {
        0.0
    } else {
        let inner_even: f64 = (1..half).map(|k| history[2 * k + xi]).sum();
        let odd: f64 = (1..=half).map(|k| history[2 * k - 1 + xi]).sum();
        (history[xi] + 2.0 * inner_even + history[s] + 4.0 * odd) / 3.0
    };
    Ok((simpson + trapezoid) / s as f64)
}

/// Scores of one finished run, as consumed by [`aggregate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunScores {
    pub function: String,
    pub dim: usize,
    pub strategy: String,
    pub rep: usize,
    /// Rolled, clamped R² per iteration.
    pub history: Vec<f64>,
}

impl RunScores {
    pub fn best_r2(&self) -> f64 {
        self.history.iter().cloned().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub function: String,
    pub dim: usize,
    pub strategy: String,
    pub rep: usize,
    pub best_r2: f64,
    pub r2_area: f64,
    pub rank_r2: f64,
    pub rank_r2area: f64,
}

/// Mean and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategySummary {
    pub strategy: String,
    pub rank_r2: MeanSe,
    pub rank_r2area: MeanSe,
    pub best_r2: MeanSe,
    pub r2_area: MeanSe,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveSummary {
    pub function: String,
    pub strategy: String,
    /// Median over repetitions of the R² value at each iteration.
    pub median_curve: Vec<f64>,
    /// Interquartile distance of per-run bin means, one entry per bin.
    pub bin_iqd: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub rows: Vec<SummaryRow>,
    pub strategies: Vec<StrategySummary>,
    pub curves: Vec<CurveSummary>,
}

pub const IQD_BINS: usize = 5;

/// Average ranks (1 = largest value); ties share the mean of their ranks.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|a, b| values[*b].total_cmp(&values[*a]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            ranks[order[k]] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Linear-interpolation quantile of unsorted data.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    if v.is_empty() {
        return f64::NAN;
    }
    let pos = q * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

pub fn mean_se(values: &[f64]) -> MeanSe {
    let n = values.len() as f64;
    if values.is_empty() {
        return MeanSe {
            mean: f64::NAN,
            se: f64::NAN,
        };
    }
    let mean = values.iter().sum::<f64>() / n;
    let se = if values.len() > 1 {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    MeanSe { mean, se }
}

/// Contiguous equal-size index bins over a history of length `len`.
fn bins(len: usize, k: usize) -> Vec<std::ops::Range<usize>> {
    (0..k).map(|b| (b * len / k)..((b + 1) * len / k)).collect()
}

/// Scores, ranks and curve statistics for a set of runs.
///
/// Ranks are assigned per (function, repetition) among the strategies present
/// and then pooled over all (function, repetition) pairs.
pub fn aggregate(results: &[RunScores]) -> Result<Summary> {
    if results.is_empty() {
        return Err(Error::Argument("nothing to aggregate".into()));
    }
    let mut rows: Vec<SummaryRow> = results
        .iter()
        .map(|r| {
            Ok(SummaryRow {
                function: r.function.clone(),
                dim: r.dim,
                strategy: r.strategy.clone(),
                rep: r.rep,
                best_r2: r.best_r2(),
                r2_area: r2_area(&r.history)?,
                rank_r2: 0.0,
                rank_r2area: 0.0,
            })
        })
        .collect::<Result<_>>()?;

    let mut groups: BTreeMap<(String, usize), Vec<usize>> = BTreeMap::new();
    for (i, r) in rows.iter().enumerate() {
        groups.entry((r.function.clone(), r.rep)).or_default().push(i);
    }
    for idx in groups.values() {
        let best: Vec<f64> = idx.iter().map(|i| rows[*i].best_r2).collect();
        let area: Vec<f64> = idx.iter().map(|i| rows[*i].r2_area).collect();
        for (k, (rb, ra)) in average_ranks(&best).into_iter().zip(average_ranks(&area)).enumerate() {
            rows[idx[k]].rank_r2 = rb;
            rows[idx[k]].rank_r2area = ra;
        }
    }

    let mut by_strategy: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, r) in rows.iter().enumerate() {
        by_strategy.entry(r.strategy.clone()).or_default().push(i);
    }
    let strategies = by_strategy
        .iter()
        .map(|(s, idx)| {
            let pick = |f: fn(&SummaryRow) -> f64| idx.iter().map(|i| f(&rows[*i])).collect::<Vec<_>>();
            StrategySummary {
                strategy: s.clone(),
                rank_r2: mean_se(&pick(|r| r.rank_r2)),
                rank_r2area: mean_se(&pick(|r| r.rank_r2area)),
                best_r2: mean_se(&pick(|r| r.best_r2)),
                r2_area: mean_se(&pick(|r| r.r2_area)),
            }
        })
        .collect();

    let mut by_cell: BTreeMap<(String, String), Vec<&RunScores>> = BTreeMap::new();
    for r in results {
        by_cell
            .entry((r.function.clone(), r.strategy.clone()))
            .or_default()
            .push(r);
    }
    let curves = by_cell
        .into_iter()
        .map(|((function, strategy), runs)| {
            let len = runs.iter().map(|r| r.history.len()).min().unwrap_or(0);
            let median_curve = (0..len)
                .map(|t| median(&runs.iter().map(|r| r.history[t]).collect::<Vec<_>>()))
                .collect();
            let bin_iqd = bins(len, IQD_BINS)
                .into_iter()
                .map(|range| {
                    if range.is_empty() {
                        return f64::NAN;
                    }
                    let means: Vec<f64> = runs
                        .iter()
                        .map(|r| r.history[range.clone()].iter().sum::<f64>() / range.len() as f64)
                        .collect();
                    quantile(&means, 0.75) - quantile(&means, 0.25)
                })
                .collect();
            CurveSummary {
                function,
                strategy,
                median_curve,
                bin_iqd,
            }
        })
        .collect();

    Ok(Summary {
        rows,
        strategies,
        curves,
    })
}

/// Format with 10 significant digits, `%.10g` style.
pub fn fmt_sig10(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{v:.9e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..10).contains(&exp) {
        let mantissa = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        strip_zeros(&format!("{:.*}", (9 - exp) as usize, v))
    }
}

fn strip_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

pub const SUMMARY_HEADER: [&str; 8] = [
    "function",
    "dim",
    "strategy",
    "rep",
    "best_r2",
    "r2_area",
    "rank_r2",
    "rank_r2area",
];

/// Per-run summary CSV.
pub fn write_summary_csv<W: Write>(summary: &Summary, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(SUMMARY_HEADER).map_err(io)?;
    for r in &summary.rows {
        w.write_record([
            r.function.clone(),
            r.dim.to_string(),
            r.strategy.clone(),
            r.rep.to_string(),
            fmt_sig10(r.best_r2),
            fmt_sig10(r.r2_area),
            fmt_sig10(r.rank_r2),
            fmt_sig10(r.rank_r2area),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

/// Per-strategy mean ranks and scores with standard errors.
pub fn write_rank_table_csv<W: Write>(summary: &Summary, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record([
        "strategy",
        "mean_rank_r2",
        "se_rank_r2",
        "mean_rank_r2area",
        "se_rank_r2area",
        "mean_best_r2",
        "se_best_r2",
        "mean_r2_area",
        "se_r2_area",
    ])
    .map_err(io)?;
    for s in &summary.strategies {
        let mut rec = vec![s.strategy.clone()];
        for m in [s.rank_r2, s.rank_r2area, s.best_r2, s.r2_area] {
            rec.push(fmt_sig10(m.mean));
            rec.push(fmt_sig10(m.se));
        }
        w.write_record(rec).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn r2_examples() {
        let y = [1.0, 2.0, 3.0];
        assert_eq!(r2(&y, &y).unwrap(), 1.0);
        assert_eq!(r2(&y, &[2.0, 2.0, 2.0]).unwrap(), 0.0);
        assert_eq!(r2(&y, &[1.0, 2.0, 4.0]).unwrap(), 0.5);
        assert!(r2(&y, &[10.0, -4.0, 0.0]).unwrap() < 0.0);
        assert!(matches!(
            r2(&[1.0, 1.0], &[1.0, 2.0]),
            Err(Error::UndefinedMetric(_))
        ));
        assert!(r2(&[1.0], &[1.0]).is_err());
        assert!(r2(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn r2_area_examples() {
        assert_eq!(r2_area(&[0.0, 1.0, 1.0]).unwrap(), 5.0 / 6.0);
        assert_eq!(r2_area(&[0.0, 1.0]).unwrap(), 0.5);
        for s in 1..12 {
            assert!((r2_area(&vec![1.0; s + 1]).unwrap() - 1.0).abs() <= 1e-12);
        }
        assert!(r2_area(&[0.4]).is_err());
    }

    #[test]
    fn ranks_with_ties() {
        assert_eq!(average_ranks(&[0.9, 0.8, 0.9]), vec![1.5, 3.0, 1.5]);
        assert_eq!(average_ranks(&[0.1]), vec![1.0]);
    }

    #[test]
    fn aggregate_single_and_dominant() {
        let run = |s: &str, rep, v: f64| RunScores {
            function: "branin".into(),
            dim: 2,
            strategy: s.into(),
            rep,
            history: vec![v * 0.5, v, v],
        };
        let one = aggregate(&[run("guess", 0, 0.9), run("guess", 1, 0.8)]).unwrap();
        assert!(one.rows.iter().all(|r| r.rank_r2 == 1.0 && r.rank_r2area == 1.0));

        let two = aggregate(&[
            run("guess", 0, 0.9),
            run("lhs", 0, 0.5),
            run("guess", 1, 0.95),
            run("lhs", 1, 0.7),
        ])
        .unwrap();
        let g = two.strategies.iter().find(|s| s.strategy == "guess").unwrap();
        let l = two.strategies.iter().find(|s| s.strategy == "lhs").unwrap();
        assert_eq!((g.rank_r2.mean, g.rank_r2.se), (1.0, 0.0));
        assert_eq!((l.rank_r2.mean, l.rank_r2.se), (2.0, 0.0));
        assert_eq!(l.rank_r2area.mean, 2.0);
        assert_eq!(two.curves.len(), 2);
        assert_eq!(two.curves[0].median_curve.len(), 3);
        assert!(aggregate(&[]).is_err());
    }

    #[test]
    fn iqd_over_bins() {
        let runs: Vec<RunScores> = (0..5)
            .map(|rep| RunScores {
                function: "f".into(),
                dim: 1,
                strategy: "s".into(),
                rep,
                history: vec![rep as f64 / 10.0; 10],
            })
            .collect();
        let s = aggregate(&runs).unwrap();
        let c = &s.curves[0];
        assert_eq!(c.bin_iqd.len(), IQD_BINS);
        for v in &c.bin_iqd {
            assert!((v - 0.2).abs() < 1e-12);
        }
        assert!((c.median_curve[0] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn sig10_formatting() {
        assert_eq!(fmt_sig10(0.0), "0");
        assert_eq!(fmt_sig10(1.0), "1");
        assert_eq!(fmt_sig10(1.5), "1.5");
        assert_eq!(fmt_sig10(2.0 / 3.0), "0.6666666667");
        assert_eq!(fmt_sig10(123456.789), "123456.789");
        assert_eq!(fmt_sig10(1e-5), "1e-05");
        assert_eq!(fmt_sig10(-1.234e12), "-1.234e+12");
        assert_eq!(fmt_sig10(9.99999999999), "10");
        assert_eq!(fmt_sig10(0.0001), "0.0001");
    }

    #[test]
    fn csv_output() {
        let s = aggregate(&[RunScores {
            function: "branin".into(),
            dim: 2,
            strategy: "guess".into(),
            rep: 0,
            history: vec![0.0, 1.0, 1.0],
        }])
        .unwrap();
        let mut buf = Vec::new();
        write_summary_csv(&s, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "function,dim,strategy,rep,best_r2,r2_area,rank_r2,rank_r2area\nbranin,2,guess,0,1,0.8333333333,1,1\n"
        );
        let mut buf = Vec::new();
        write_rank_table_csv(&s, &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("strategy,mean_rank_r2"));
    }

    proptest! {
        #[test]
        fn r2_affine_invariance(
            y in prop::collection::vec(-100.0f64..100.0, 3..30),
            noise in prop::collection::vec(-1.0f64..1.0, 30),
            a in prop_oneof![-10.0f64..-0.1, 0.1f64..10.0],
            b in -50.0f64..50.0,
        ) {
            let mean = y.iter().sum::<f64>() / y.len() as f64;
            prop_assume!(y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() > 1e-3);
            let p: Vec<f64> = y.iter().zip(&noise).map(|(v, e)| v + e).collect();
            let ya: Vec<f64> = y.iter().map(|v| a * v + b).collect();
            let pa: Vec<f64> = p.iter().map(|v| a * v + b).collect();
            let base = r2(&y, &p).unwrap();
            prop_assert!((base - r2(&ya, &pa).unwrap()).abs() <= 1e-12 * base.abs().max(1.0));
        }

        #[test]
        fn ranks_sum_to_triangular_number(vals in prop::collection::vec(0i32..5, 1..12)) {
            let v: Vec<f64> = vals.into_iter().map(f64::from).collect();
            let k = v.len() as f64;
            let sum: f64 = average_ranks(&v).iter().sum();
            prop_assert!((sum - k * (k + 1.0) / 2.0).abs() < 1e-9);
        }
    }
}
