//! Descriptives, paired and Welch t-tests, percent change, report tables.

mod dist;
mod table;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use dist::{inc_beta, ln_gamma, student_t_cdf, student_t_quantile, student_t_two_sided_p};
pub use table::{render_table, TableFormat, TableOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Paired,
    Welch,
}

impl std::str::FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "paired" => Ok(Family::Paired),
            "welch" => Ok(Family::Welch),
            other => Err(format!("unknown test family {other:?}")),
        }
    }
}

/// One questionnaire item under one test. `t` is ±∞ when the differences have
/// zero spread but a nonzero mean; `p` is then 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub item_name: String,
    pub mean_a: f64,
    pub sd_a: f64,
    pub mean_b: f64,
    pub sd_b: f64,
    pub t: f64,
    pub df: f64,
    pub p: f64,
    pub ci95: (f64, f64),
    pub family: Family,
}

impl TestReport {
    pub fn named(mut self, item: impl Into<String>) -> Self {
        self.item_name = item.into();
        self
    }
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Mean and sample standard deviation (n − 1 denominator).
pub fn mean_sd(v: &[f64]) -> Result<(f64, f64)> {
    if v.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 values for a standard deviation, got {}",
            v.len()
        )));
    }
    let m = mean(v);
    let ss: f64 = v.iter().map(|x| (x - m) * (x - m)).sum();
    Ok((m, (ss / (v.len() - 1) as f64).sqrt()))
}

/// t, p and CI from a difference estimate, its standard error and df.
fn t_parts(diff: f64, se: f64, df: f64) -> (f64, f64, (f64, f64)) {
    if se == 0.0 {
        return if diff == 0.0 {
            (0.0, 1.0, (0.0, 0.0))
        } else {
            (diff.signum() * f64::INFINITY, 0.0, (diff, diff))
        };
    }
    let t = diff / se;
    let p = student_t_two_sided_p(t, df);
    let half = student_t_quantile(0.975, df) * se;
    (t, p, (diff - half, diff + half))
}

/// Paired-sample t-test on d = a − b.
pub fn paired_t(a: &[f64], b: &[f64]) -> Result<TestReport> {
    if a.len() != b.len() {
        return Err(Error::InvalidArgument(format!(
            "paired samples differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let (mean_a, sd_a) = mean_sd(a)?;
    let (mean_b, sd_b) = mean_sd(b)?;
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let (md, sdd) = mean_sd(&d)?;
    let n = d.len() as f64;
    let df = n - 1.0;
    let (t, p, ci95) = t_parts(md, sdd / n.sqrt(), df);
    Ok(TestReport {
        item_name: String::new(),
        mean_a,
        sd_a,
        mean_b,
        sd_b,
        t,
        df,
        p,
        ci95,
        family: Family::Paired,
    })
}

/// Welch two-sample t-test on mean(a) − mean(b).
pub fn welch_t(a: &[f64], b: &[f64]) -> Result<TestReport> {
    let (ma, sa) = mean_sd(a)?;
    let (mb, sb) = mean_sd(b)?;
    Ok(welch_from_summary(ma, sa, a.len(), mb, sb, b.len()))
}

/// Welch test from group summaries, for checking published tables.
pub fn welch_from_summary(ma: f64, sa: f64, na: usize, mb: f64, sb: f64, nb: usize) -> TestReport {
    let (na_f, nb_f) = (na as f64, nb as f64);
    let va = sa * sa / na_f;
    let vb = sb * sb / nb_f;
    let se = (va + vb).sqrt();
    let df = if se == 0.0 {
        na_f + nb_f - 2.0
    } else {
        (va + vb).powi(2) / (va * va / (na_f - 1.0) + vb * vb / (nb_f - 1.0))
    };
    let (t, p, ci95) = t_parts(ma - mb, se, df);
    TestReport {
        item_name: String::new(),
        mean_a: ma,
        sd_a: sa,
        mean_b: mb,
        sd_b: sb,
        t,
        df,
        p,
        ci95,
        family: Family::Welch,
    }
}

/// 100 · (to − from) / from.
pub fn percent_change(mean_from: f64, mean_to: f64) -> Result<f64> {
    if mean_from == 0.0 {
        return Err(Error::InvalidArgument("percent change from a zero baseline".into()));
    }
    Ok(100.0 * (mean_to - mean_from) / mean_from)
}

pub fn significance_stars(p: f64) -> &'static str {
    if p < 0.001 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        ""
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn mean_sd_basics() {
        assert_eq!(mean_sd(&[1.0, 2.0, 3.0]).unwrap(), (2.0, 1.0));
        assert_eq!(mean_sd(&[4.0; 5]).unwrap().1, 0.0);
        assert!(mean_sd(&[1.0]).is_err());
    }

    #[test]
    fn paired_identical_vectors() {
        let v = [1.0, 5.0, 2.0, 7.0];
        let r = paired_t(&v, &v).unwrap();
        assert_eq!((r.t, r.p, r.ci95), (0.0, 1.0, (0.0, 0.0)));
    }

    #[test]
    fn paired_constant_difference_is_the_infinite_sentinel() {
        let r = paired_t(&[2.0, 3.0, 4.0, 5.0], &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(r.t, f64::INFINITY);
        assert_eq!(r.p, 0.0);
        let r = paired_t(&[1.0, 2.0], &[2.0, 3.0]).unwrap();
        assert_eq!(r.t, f64::NEG_INFINITY);
    }

    #[test]
    fn paired_reference_values() {
        // values from an independent statistics package
        let x = [4.0, 2.0, 3.0, 2.0, 4.0, 3.0, 5.0, 1.0];
        let y = [6.0, 3.0, 3.0, 5.0, 6.0, 4.0, 6.0, 2.0];
        let r = paired_t(&x, &y).unwrap();
        assert!(close(r.t, -4.245_147_417_433_778, 1e-12));
        assert!(close(r.p, 0.003_815_944_055_804_592, 1e-9));
        assert_eq!(r.df, 7.0);
        assert!(close(r.ci95.0, -2.140_899_985_613_585, 1e-9));
        assert!(close(r.ci95.1, -0.609_100_014_386_415, 1e-9));
        assert!(paired_t(&x, &y[..7]).is_err());
    }

    #[test]
    fn welch_reference_values() {
        let r = welch_t(&[1.0, 2.0, 3.0, 4.0], &[2.0, 3.0, 4.0, 5.0]).unwrap();
        assert!(close(r.t, -1.095_445_115_010_332_4, 1e-12));
        assert!(close(r.df, 6.0, 1e-12));
        assert!(close(r.p, 0.315_333_596_201_229_6, 1e-9));
        assert!(close(r.ci95.0, -3.233_714_695_164_704_4, 1e-9));
        assert!(close(r.ci95.1, 1.233_714_695_164_704_4, 1e-9));
        let same = welch_t(&[1.0, 2.0, 4.0], &[1.0, 2.0, 4.0]).unwrap();
        assert_eq!(same.t, 0.0);
        assert!(welch_t(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn welch_df_drops_under_variance_imbalance() {
        let a = [1.0, 1.1, 0.9, 1.05, 0.95];
        let b = [0.0, 10.0, -10.0, 20.0, -20.0, 5.0];
        let r = welch_t(&a, &b).unwrap();
        assert!(close(r.df, 5.000_367_345_251_359, 1e-9));
        assert!(close(r.t, 0.028_570_903_804_545_276, 1e-9));
        assert!(r.df < (a.len() + b.len() - 2) as f64);
    }

    #[test]
    fn percent_change_claims() {
        assert!((percent_change(3.88, 6.35).unwrap() - 63.66).abs() <= 0.01);
        assert!((percent_change(3.06, 1.47).unwrap() + 51.96).abs() <= 0.01);
        let sat = percent_change(4.00, 6.47).unwrap();
        assert!((61.5..=62.0).contains(&sat));
        let will = percent_change(3.53, 6.29).unwrap();
        assert!((78.0..=78.5).contains(&will));
        assert_eq!(percent_change(2.5, 2.5).unwrap(), 0.0);
        assert!(percent_change(0.0, 1.0).is_err());
    }

    #[test]
    fn stars() {
        assert_eq!(significance_stars(0.004), "**");
        assert_eq!(significance_stars(0.0004), "***");
        assert_eq!(significance_stars(0.03), "*");
        assert_eq!(significance_stars(0.05), "");
    }

    fn sample() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-50.0f64..50.0, 3..15)
    }

    proptest! {
        #[test]
        fn paired_antisymmetric_and_invariant(pairs in prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 3..15), shift in -100.0f64..100.0, scale in 0.1f64..10.0) {
            let a: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let b: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let r = paired_t(&a, &b).unwrap();
            prop_assume!(r.t.is_finite() && r.t.abs() > 1e-6);
            prop_assert!(close(paired_t(&b, &a).unwrap().t, -r.t, 1e-12));
            let sa: Vec<f64> = a.iter().map(|x| x + shift).collect();
            let sb: Vec<f64> = b.iter().map(|x| x + shift).collect();
            prop_assert!(close(paired_t(&sa, &sb).unwrap().t, r.t, 1e-6));
            let ka: Vec<f64> = a.iter().map(|x| x * scale).collect();
            let kb: Vec<f64> = b.iter().map(|x| x * scale).collect();
            prop_assert!(close(paired_t(&ka, &kb).unwrap().t, r.t, 1e-9));
            let md = r.mean_a - r.mean_b;
            prop_assert!(r.ci95.0 <= md && md <= r.ci95.1);
            prop_assert!((0.0..=1.0).contains(&r.p));
        }

        #[test]
        fn welch_antisymmetric_and_ci_contains_estimate(a in sample(), b in sample()) {
            let r = welch_t(&a, &b).unwrap();
            let s = welch_t(&b, &a).unwrap();
            prop_assert!(close(s.t, -r.t, 1e-12));
            prop_assert!(close(s.df, r.df, 1e-12));
            let md = r.mean_a - r.mean_b;
            prop_assert!(r.ci95.0 <= md && md <= r.ci95.1);
            prop_assert!(r.ci95.0 <= r.ci95.1);
        }
    }
}
