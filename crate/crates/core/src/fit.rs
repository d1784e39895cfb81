//! Scaling-law fits by ordinary least squares in linearizing coordinates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    /// `y = c x^e`
    PowerXy,
    /// `T = c (N/k)^e`
    PowerRatio,
    /// `y = exp(c + e x)`
    Exponential,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitParam {
    pub name: String,
    pub value: f64,
    /// One-sigma regression standard error; infinite with two points.
    pub std_err: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitPoint {
    pub x: f64,
    pub observed: f64,
    pub fitted: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: FitModel,
    pub params: Vec<FitParam>,
    /// RMS residual in the space where the regression is linear.
    pub rmse: f64,
    /// RMS residual of the back-transformed model against the data.
    pub rmse_data: f64,
    pub n_points: usize,
    /// Observed against fitted values (parity data).
    pub points: Vec<FitPoint>,
    pub warnings: Vec<String>,
}

impl FitResult {
    pub fn param(&self, name: &str) -> Option<&FitParam> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn value(&self, name: &str) -> f64 {
        self.param(name).map_or(f64::NAN, |p| p.value)
    }
}

struct Line {
    intercept: f64,
    slope: f64,
    se_intercept: f64,
    se_slope: f64,
    rmse: f64,
}

/// `v = a + b u` by least squares.
fn regress(u: &[f64], v: &[f64]) -> Result<Line> {
    let n = u.len();
    if n < 2 {
        return Err(Error::InvalidParameter(format!("a fit needs at least 2 points, got {n}")));
    }
    let nf = n as f64;
    let mu = u.iter().sum::<f64>() / nf;
    let mv = v.iter().sum::<f64>() / nf;
    let sxx: f64 = u.iter().map(|x| (x - mu).powi(2)).sum();
    let scale = u.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1.0);
    if sxx <= (1e-12 * scale).powi(2) * nf {
        return Err(Error::InvalidParameter("abscissae have no spread".into()));
    }
    let sxy: f64 = u.iter().zip(v).map(|(x, y)| (x - mu) * (y - mv)).sum();
    let slope = sxy / sxx;
    let intercept = mv - slope * mu;
    let ssr: f64 = u.iter().zip(v).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let (se_intercept, se_slope) = if n > 2 {
        let s2 = ssr / (nf - 2.0);
        ((s2 * (1.0 / nf + mu * mu / sxx)).sqrt(), (s2 / sxx).sqrt())
    } else {
        (f64::INFINITY, f64::INFINITY)
    };
    Ok(Line {
        intercept,
        slope,
        se_intercept,
        se_slope,
        rmse: (ssr / nf).sqrt(),
    })
}

fn require_positive(what: &str, xs: &[f64]) -> Result<()> {
    match xs.iter().find(|x| !(**x > 0.0) || !x.is_finite()) {
        Some(x) => Err(Error::InvalidParameter(format!("{what} must be positive and finite, got {x}"))),
        None => Ok(()),
    }
}

fn require_finite(what: &str, xs: &[f64]) -> Result<()> {
    match xs.iter().find(|x| !x.is_finite()) {
        Some(x) => Err(Error::InvalidParameter(format!("{what} must be finite, got {x}"))),
        None => Ok(()),
    }
}

fn same_len(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::LengthMismatch { expected: a, got: b });
    }
    Ok(())
}

fn finish(
    model: FitModel,
    params: Vec<FitParam>,
    line: &Line,
    xs: &[f64],
    ys: &[f64],
    predict: impl Fn(f64) -> f64,
) -> FitResult {
    let points: Vec<FitPoint> = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| FitPoint {
            x,
            observed: y,
            fitted: predict(x),
        })
        .collect();
    let rmse_data = (points.iter().map(|p| (p.observed - p.fitted).powi(2)).sum::<f64>() / xs.len() as f64).sqrt();
    let mut warnings = Vec::new();
    if xs.len() == 2 {
        warnings.push("two points determine the fit exactly; confidence intervals are infinite".into());
    }
    FitResult {
        model,
        params,
        rmse: line.rmse,
        rmse_data,
        n_points: xs.len(),
        points,
        warnings,
    }
}

fn power_law(model: FitModel, names: [&str; 2], xs: &[f64], ys: &[f64]) -> Result<FitResult> {
    same_len(xs.len(), ys.len())?;
    require_positive("x", xs)?;
    require_positive("y", ys)?;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let line = regress(&lx, &ly)?;
    let c = line.intercept.exp();
    let params = vec![
        FitParam {
            name: names[0].into(),
            value: c,
            // Delta method on exp(intercept).
            std_err: c * line.se_intercept,
        },
        FitParam {
            name: names[1].into(),
            value: line.slope,
            std_err: line.se_slope,
        },
    ];
    let e = line.slope;
    Ok(finish(model, params, &line, xs, ys, |x| c * x.powf(e)))
}

/// `y = gamma x^delta` by regression of `ln y` on `ln x`.
pub fn fit_power(xs: &[f64], ys: &[f64]) -> Result<FitResult> {
    power_law(FitModel::PowerXy, ["gamma", "delta"], xs, ys)
}

/// `y = exp(Gamma + Delta x)` by regression of `ln y` on `x`.
pub fn fit_exponential(xs: &[f64], ys: &[f64]) -> Result<FitResult> {
    same_len(xs.len(), ys.len())?;
    require_finite("x", xs)?;
    require_positive("y", ys)?;
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let line = regress(xs, &ly)?;
    let params = vec![
        FitParam {
            name: "Gamma".into(),
            value: line.intercept,
            std_err: line.se_intercept,
        },
        FitParam {
            name: "Delta".into(),
            value: line.slope,
            std_err: line.se_slope,
        },
    ];
    let (a, b) = (line.intercept, line.slope);
    Ok(finish(FitModel::Exponential, params, &line, xs, ys, |x| (a + b * x).exp()))
}

/// `T = alpha (N/k)^beta`; the points carry `x = N/k`.
pub fn fit_power_ratio(ns: &[f64], ks: &[f64], ts: &[f64]) -> Result<FitResult> {
    same_len(ns.len(), ks.len())?;
    same_len(ns.len(), ts.len())?;
    require_positive("N", ns)?;
    require_positive("k", ks)?;
    let ratio: Vec<f64> = ns.iter().zip(ks).map(|(n, k)| n / k).collect();
    power_law(FitModel::PowerRatio, ["alpha", "beta"], &ratio, ts)
}

/// `r = a N^b`.
pub fn fit_cycles(ns: &[f64], rs: &[f64]) -> Result<FitResult> {
    power_law(FitModel::PowerXy, ["a", "b"], ns, rs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn exact_power() {
        let xs = [1.0, 2.0, 3.0, 5.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 2.0 * x.powi(3)).collect();
        let f = fit_power(&xs, &ys).unwrap();
        assert!(rel(f.value("gamma"), 2.0) < 1e-10);
        assert!(rel(f.value("delta"), 3.0) < 1e-10);
        assert!(f.rmse < 1e-12 && f.rmse_data < 1e-9);
        assert!(fit_power(&[2.0], &[3.0]).is_err());
        assert!(fit_power(&[1.0, 2.0, 3.0], &[1.0, 0.0, 2.0]).is_err());
    }

    #[test]
    fn exact_exponential() {
        let xs = [0.0f64, 0.5, 1.0, 1.5];
        let ys: Vec<f64> = xs.iter().map(|x| (1.0 + 2.0 * x).exp()).collect();
        let f = fit_exponential(&xs, &ys).unwrap();
        assert!(rel(f.value("Gamma"), 1.0) < 1e-10);
        assert!(rel(f.value("Delta"), 2.0) < 1e-10);
        let c = fit_exponential(&xs, &[4.0; 4]).unwrap();
        assert!(rel(c.value("Gamma"), 4f64.ln()) < 1e-12);
        assert!(c.value("Delta").abs() < 1e-14);
    }

    #[test]
    fn ratio_and_cycles() {
        let ns = [10.0f64, 12.0, 20.0, 30.0];
        let ks = [2.0f64, 3.0, 2.5, 5.0];
        let ts: Vec<f64> = ns.iter().zip(&ks).map(|(n, k)| 3.0 * (n / k).sqrt()).collect();
        let f = fit_power_ratio(&ns, &ks, &ts).unwrap();
        assert!(rel(f.value("alpha"), 3.0) < 1e-10 && rel(f.value("beta"), 0.5) < 1e-10);
        assert_eq!(f.points.len(), 4);
        assert!(fit_power_ratio(&[4.0, 6.0, 8.0], &[2.0, 3.0, 4.0], &[1.0, 1.0, 1.0]).is_err());

        let ns = [3.0, 5.0, 7.0, 9.0];
        let rs: Vec<f64> = ns.iter().map(|n: &f64| 0.7 * n.powf(3.12)).collect();
        let f = fit_cycles(&ns, &rs).unwrap();
        assert!(rel(f.value("a"), 0.7) < 1e-10 && rel(f.value("b"), 3.12) < 1e-10);
        let two = fit_cycles(&[3.0, 5.0], &[10.0, 40.0]).unwrap();
        assert!(two.param("b").unwrap().std_err.is_infinite());
        assert_eq!(two.warnings.len(), 1);
    }

    #[test]
    fn standard_errors_match_textbook() {
        // v = 1 + 2u with residuals (+1, -1, -1, +1) about the fitted line.
        let u = [0.0, 1.0, 2.0, 3.0];
        let v = [2.0, 2.0, 4.0, 8.0];
        let l = regress(&u, &v).unwrap();
        assert!((l.slope - 2.0).abs() < 1e-14 && (l.intercept - 1.0).abs() < 1e-14);
        // s^2 = 4 / 2, Sxx = 5.
        assert!((l.se_slope - (2.0f64 / 5.0).sqrt()).abs() < 1e-14);
        assert!((l.se_intercept - (2.0f64 * (0.25 + 2.25 / 5.0)).sqrt()).abs() < 1e-14);
        assert!((l.rmse - 1.0).abs() < 1e-14);
    }
}
