//! One-way ANOVA, Tukey-Kramer HSD and t confidence intervals over trial samples.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use statrs::function::{beta::beta_reg, erf::erfc, gamma::ln_gamma};

use crate::error::{Error, Result};

/// Named groups of scalar observations, typically one value per trial.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub groups: Vec<(String, Vec<f64>)>,
}

impl SampleSet {
    pub fn new() -> Self {
        SampleSet::default()
    }

    pub fn push(&mut self, name: impl Into<String>, values: Vec<f64>) -> &mut Self {
        self.groups.push((name.into(), values));
        self
    }

    fn check(&self) -> Result<()> {
        if self.groups.len() < 2 {
            return Err(Error::invalid("need at least two groups"));
        }
        for (name, v) in &self.groups {
            if v.len() < 2 {
                return Err(Error::invalid(format!("group {name} has fewer than 2 observations")));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid(format!("group {name} has a non-finite observation")));
            }
        }
        Ok(())
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Anova {
    pub f: f64,
    pub p: f64,
    pub df_between: usize,
    pub df_within: usize,
    pub ms_within: f64,
    /// Within-group variance is zero, so `f` is 0 or infinite by convention.
    pub degenerate: bool,
}

pub fn one_way_anova(samples: &SampleSet) -> Result<Anova> {
    samples.check()?;
    let all: Vec<f64> = samples.groups.iter().flat_map(|(_, v)| v.iter().copied()).collect();
    let grand = mean(&all);
    let (mut ssb, mut ssw) = (0.0, 0.0);
    for (_, v) in &samples.groups {
        let m = mean(v);
        ssb += v.len() as f64 * (m - grand).powi(2);
        ssw += v.iter().map(|x| (x - m).powi(2)).sum::<f64>();
    }
    let df_between = samples.groups.len() - 1;
    let df_within = all.len() - samples.groups.len();
    let ms_within = ssw / df_within as f64;
    // relative guards keep constant offsets from producing rounding-noise F values
    let scale = all.iter().map(|x| x * x).sum::<f64>().max(f64::MIN_POSITIVE);
    let ssb_zero = ssb <= 1e-24 * scale;
    if ssw <= 1e-24 * scale {
        let (f, p) = if ssb_zero { (0.0, 1.0) } else { (f64::INFINITY, 0.0) };
        return Ok(Anova { f, p, df_between, df_within, ms_within: 0.0, degenerate: true });
    }
    let f = if ssb_zero { 0.0 } else { (ssb / df_between as f64) / ms_within };
    Ok(Anova {
        f,
        p: f_sf(f, df_between as f64, df_within as f64),
        df_between,
        df_within,
        ms_within,
        degenerate: false,
    })
}

/// Survival function of the F distribution via the regularized incomplete beta.
pub fn f_sf(f: f64, d1: f64, d2: f64) -> f64 {
    if f <= 0.0 {
        return 1.0;
    }
    if f.is_infinite() {
        return 0.0;
    }
    beta_reg(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f)).clamp(0.0, 1.0)
}

pub fn f_cdf(f: f64, d1: f64, d2: f64) -> f64 {
    if f <= 0.0 {
        return 0.0;
    }
    beta_reg(d1 / 2.0, d2 / 2.0, d1 * f / (d1 * f + d2)).clamp(0.0, 1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TukeyPair {
    pub a: String,
    pub b: String,
    /// `mean(a) - mean(b)`
    pub mean_diff: f64,
    pub q: f64,
    pub p: f64,
    pub significant: bool,
}

/// Tukey-Kramer pairwise comparisons with p values from the studentized range.
pub fn tukey_hsd(samples: &SampleSet, alpha: f64) -> Result<Vec<TukeyPair>> {
    let anova = one_way_anova(samples)?;
    let k = samples.groups.len();
    let mut out = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            let (na, va) = &samples.groups[i];
            let (nb, vb) = &samples.groups[j];
            let diff = mean(va) - mean(vb);
            let se = (anova.ms_within / 2.0 * (1.0 / va.len() as f64 + 1.0 / vb.len() as f64)).sqrt();
            let q = if diff.abs() <= 1e-12 * (mean(va).abs() + mean(vb).abs()) || diff == 0.0 {
                0.0
            } else if se == 0.0 {
                f64::INFINITY
            } else {
                diff.abs() / se
            };
            let p = (1.0 - ptukey(q, k, anova.df_within as f64)).clamp(0.0, 1.0);
            out.push(TukeyPair {
                a: na.clone(),
                b: nb.clone(),
                mean_diff: diff,
                q,
                p,
                significant: p < alpha,
            });
        }
    }
    Ok(out)
}

fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for m in 2..=n {
                let p2 = ((2 * m - 1) as f64 * z * p1 - (m - 1) as f64 * p0) / m as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

fn gl15() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(15))
}

fn gl_panel(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (x, w) = gl15();
    let (c, h) = ((a + b) / 2.0, (b - a) / 2.0);
    h * x.iter().zip(w).map(|(xi, wi)| wi * f(c + h * xi)).sum::<f64>()
}

fn adaptive(f: &impl Fn(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = (a + b) / 2.0;
    let (l, r) = (gl_panel(f, a, m), gl_panel(f, m, b));
    if depth == 0 || (l + r - whole).abs() <= tol {
        l + r
    } else {
        adaptive(f, a, m, l, tol / 2.0, depth - 1) + adaptive(f, m, b, r, tol / 2.0, depth - 1)
    }
}

/// Adaptive Gauss-Legendre over `panels` equal starting panels.
fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize, tol: f64) -> f64 {
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|i| {
            let (lo, hi) = (a + i as f64 * h, a + (i + 1) as f64 * h);
            adaptive(&f, lo, hi, gl_panel(&f, lo, hi), tol / panels as f64, 12)
        })
        .sum()
}

fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Range of `k` iid standard normals: `P(R <= w)`.
fn prange(w: f64, k: usize) -> f64 {
    if w <= 0.0 {
        return 0.0;
    }
    let kf = k as f64;
    let inner = integrate(
        |z| norm_pdf(z) * (norm_cdf(z) - norm_cdf(z - w)).max(0.0).powi(k as i32 - 1),
        -8.0,
        8.0 + w.min(8.0),
        16,
        1e-11,
    );
    (kf * inner).clamp(0.0, 1.0)
}

/// CDF of the studentized range distribution with `k` groups and `df` degrees of freedom.
pub fn ptukey(q: f64, k: usize, df: f64) -> f64 {
    if q <= 0.0 || k < 2 {
        return 0.0;
    }
    if q.is_infinite() {
        return 1.0;
    }
    if df > 1e5 {
        return prange(q, k);
    }
    // s = chi_df / sqrt(df) has density proportional to s^(df-1) exp(-df s^2 / 2)
    let log_norm = df / 2.0 * df.ln() - ln_gamma(df / 2.0) - (df / 2.0 - 1.0) * 2f64.ln();
    let sd = 1.0 / (2.0 * df).sqrt();
    let (lo, hi) = ((1.0 - 12.0 * sd).max(0.0), 1.0 + 14.0 * sd);
    integrate(
        |s| {
            if s <= 0.0 {
                return 0.0;
            }
            let dens = (log_norm + (df - 1.0) * s.ln() - df * s * s / 2.0).exp();
            dens * prange(q * s, k)
        },
        lo,
        hi,
        8,
        1e-9,
    )
    .clamp(0.0, 1.0)
}

/// Sample mean and the half-width of its two-sided t confidence interval.
pub fn mean_ci(values: &[f64], level: f64) -> Result<(f64, f64)> {
    if values.len() < 2 {
        return Err(Error::invalid("confidence interval needs n >= 2"));
    }
    if !(0.0 < level && level < 1.0) {
        return Err(Error::invalid(format!("confidence level {level} outside (0, 1)")));
    }
    let n = values.len() as f64;
    let m = mean(values);
    let var = values.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    let t = StudentsT::new(0.0, 1.0, n - 1.0)
        .map_err(|e| Error::invalid(e.to_string()))?
        .inverse_cdf(0.5 + level / 2.0);
    Ok((m, t * (var / n).sqrt()))
}

pub fn std_dev(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    (values.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (values.len() - 1) as f64).sqrt()
}

pub fn stars(p: f64) -> &'static str {
    match p {
        p if p <= 1e-4 => "****",
        p if p <= 1e-3 => "***",
        p if p <= 1e-2 => "**",
        p if p <= 0.05 => "*",
        _ => "",
    }
}

/// Table cell in `(mean, std)` style.
pub fn format_cell(values: &[f64]) -> String {
    if values.is_empty() {
        return "(-, -)".into();
    }
    format!("({:.2}, {:.2})", mean(values), std_dev(values))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(groups: &[&[f64]]) -> SampleSet {
        let mut s = SampleSet::new();
        for (i, g) in groups.iter().enumerate() {
            s.push(format!("g{i}"), g.to_vec());
        }
        s
    }

    #[test]
    fn hand_dataset() {
        let a = one_way_anova(&set(&[&[1., 2., 3.], &[2., 3., 4.], &[3., 4., 5.]])).unwrap();
        assert!((a.f - 3.0).abs() < 1e-12);
        assert_eq!((a.df_between, a.df_within), (2, 6));
        // F(2, 6) survival at 3 is (1 + 3 * 2 / 6)^-3 = 1/8
        assert!((a.p - 0.125).abs() < 1e-12);
    }

    #[test]
    fn identical_groups() {
        let s = set(&[&[1., 2., 3.], &[1., 2., 3.]]);
        let a = one_way_anova(&s).unwrap();
        assert_eq!((a.f, a.p), (0.0, 1.0));
        let t = tukey_hsd(&s, 0.05).unwrap();
        assert_eq!((t[0].q, t[0].p), (0.0, 1.0));
    }

    #[test]
    fn degenerate_variance() {
        let a = one_way_anova(&set(&[&[1., 1.], &[2., 2.]])).unwrap();
        assert!(a.degenerate);
        assert_eq!(a.p, 0.0);
        assert!(one_way_anova(&set(&[&[1., 2.]])).is_err());
        assert!(one_way_anova(&set(&[&[1., 2.], &[3.]])).is_err());
    }

    #[test]
    fn f_distribution_closed_forms() {
        // F(2, d2) has survival (1 + 2f/d2)^(-d2/2)
        for &(f, d2) in &[(0.5f64, 4.0f64), (3.0, 10.0), (7.5, 2.0)] {
            let want = (1.0 + 2.0 * f / d2).powf(-d2 / 2.0);
            assert!((f_sf(f, 2.0, d2) - want).abs() < 1e-13);
            assert!((f_cdf(f, 2.0, d2) + want - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn two_group_range_is_scaled_t() {
        // for k = 2 the studentized range is sqrt(2)|T|
        for &(q, df) in &[(0.5, 3.0), (2.0, 8.0), (4.0, 20.0)] {
            let t = StudentsT::new(0.0, 1.0, df).unwrap();
            let want = 2.0 * t.cdf(q / 2f64.sqrt()) - 1.0;
            assert!((ptukey(q, 2, df) - want).abs() < 1e-7, "q={q} df={df}");
        }
    }

    #[test]
    fn intervals() {
        let (m, h) = mean_ci(&[4.0; 5], 0.95).unwrap();
        assert_eq!((m, h), (4.0, 0.0));
        let (m, _) = mean_ci(&[1., 2., 3.], 0.95).unwrap();
        assert_eq!(m, 2.0);
        assert_eq!(std_dev(&[1., 2., 3.]), 1.0);
        assert!(mean_ci(&[1.0], 0.95).is_err());
    }

    #[test]
    fn star_thresholds() {
        assert_eq!(stars(0.004), "**");
        assert_eq!(stars(0.05), "*");
        assert_eq!(stars(0.0001), "****");
        assert_eq!(stars(0.2), "");
        assert_eq!(format_cell(&[0.5, 0.7]), "(0.60, 0.14)");
    }
}
