//! Least-squares scaling fits of mean age against `n`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingModel {
    /// `A = c * n^a`, fitted in log-log space.
    PowerLaw,
    /// `A = c * ln(n) + b`.
    Logarithmic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub model: ScalingModel,
    /// `c` in either model.
    pub coefficient: f64,
    /// Power-law exponent `a`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exponent: Option<f64>,
    /// Logarithmic offset `b`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub offset: Option<f64>,
    /// Coefficient of determination in the regression space.
    pub r_squared: f64,
    /// Residuals in the regression space, in input order.
    pub residuals: Vec<f64>,
}

impl ScalingFit {
    pub fn predict(&self, n: f64) -> f64 {
        match self.model {
            ScalingModel::PowerLaw => self.coefficient * n.powf(self.exponent.unwrap_or(0.0)),
            ScalingModel::Logarithmic => self.coefficient * n.ln() + self.offset.unwrap_or(0.0),
        }
    }
}

struct Line {
    slope: f64,
    intercept: f64,
    r_squared: f64,
    residuals: Vec<f64>,
}

fn ols(xs: &[f64], ys: &[f64]) -> Line {
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| y - (intercept + slope * x)).collect();
    let ss_res: f64 = residuals.iter().map(|r| r * r).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Line {
        slope,
        intercept,
        r_squared,
        residuals,
    }
}

/// Fits `model` to `(n, mean)` points. Needs at least three distinct `n`.
pub fn fit_scaling(points: &[(f64, f64)], model: ScalingModel) -> Result<ScalingFit> {
    let mut distinct: Vec<f64> = points.iter().map(|p| p.0).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::Fit(format!("need at least 3 distinct n values, got {}", distinct.len())));
    }
    if let Some(bad) = points.iter().find(|p| !(p.0 > 1.0 && p.0.is_finite())) {
        return Err(Error::Fit(format!("n = {} is not usable on a log scale", bad.0)));
    }
    let log_n: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    match model {
        ScalingModel::PowerLaw => {
            if let Some(bad) = points.iter().find(|p| p.1.is_nan() || p.1 <= 0.0) {
                return Err(Error::Fit(format!(
                    "power-law fit needs positive means, got {} at n = {}",
                    bad.1, bad.0
                )));
            }
            let log_a: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
            let line = ols(&log_n, &log_a);
            Ok(ScalingFit {
                model,
                coefficient: line.intercept.exp(),
                exponent: Some(line.slope),
                offset: None,
                r_squared: line.r_squared,
                residuals: line.residuals,
            })
        }
        ScalingModel::Logarithmic => {
            let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
            let line = ols(&log_n, &ys);
            Ok(ScalingFit {
                model,
                coefficient: line.slope,
                exponent: None,
                offset: Some(line.intercept),
                r_squared: line.r_squared,
                residuals: line.residuals,
            })
        }
    }
}

/// Both fits plus growth-ratio diagnostics between the extreme `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelComparison {
    pub power_law: ScalingFit,
    pub logarithmic: ScalingFit,
    pub preferred: ScalingModel,
    pub n_min: f64,
    pub n_max: f64,
    /// `mean(n_max) / mean(n_min)`.
    pub observed_growth: f64,
    /// `ln(n_max) / ln(n_min)`.
    pub log_growth_prediction: f64,
    /// `(n_max / n_min)^a` with the fitted exponent.
    pub power_growth_prediction: f64,
}

/// Fits both models and prefers the one with the higher R^2 (ties go to
/// the logarithmic model).
pub fn compare_models(points: &[(f64, f64)]) -> Result<ModelComparison> {
    let power_law = fit_scaling(points, ScalingModel::PowerLaw)?;
    let logarithmic = fit_scaling(points, ScalingModel::Logarithmic)?;
    let lo = points.iter().min_by(|a, b| a.0.total_cmp(&b.0)).expect("non-empty");
    let hi = points.iter().max_by(|a, b| a.0.total_cmp(&b.0)).expect("non-empty");
    let preferred = if power_law.r_squared > logarithmic.r_squared {
        ScalingModel::PowerLaw
    } else {
        ScalingModel::Logarithmic
    };
    Ok(ModelComparison {
        preferred,
        n_min: lo.0,
        n_max: hi.0,
        observed_growth: hi.1 / lo.1,
        log_growth_prediction: hi.0.ln() / lo.0.ln(),
        power_growth_prediction: (hi.0 / lo.0).powf(power_law.exponent.unwrap_or(0.0)),
        power_law,
        logarithmic,
    })
}
