//! Numerical checks that a norm admits consistent fine-graining.
//!
//! A permutation-invariant norm that composes over disjoint supports,
//! `||v + w|| = ||(||v||, ||w||)||`, is determined by `f(n) = ||1^(n)||`.
//! Composition forces `f(nm) = f(n) f(m)` and monotonicity, hence
//! `f(n) = n^(1/p)`, and the norm agrees with the p-norm on vectors with
//! rational magnitudes. Everything here is `f64`; the tolerances separate
//! genuine p-norms from perturbed ones.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fraction::{approximate, format_fraction, frac, int, parse_fraction, to_f64, Rational};

pub const COMPOSITION_TOL: f64 = 1e-10;
pub const SPREAD_TOL: f64 = 1e-6;
pub const POWER_LAW_TOL: f64 = 1e-10;
pub const RATIONAL_TOL: f64 = 1e-10;
pub const ESTIMATE_POINTS: [usize; 5] = [2, 3, 5, 7, 10];

/// A norm on finite nonnegative vectors.
pub trait Norm: Send + Sync {
    fn name(&self) -> String;
    fn eval(&self, v: &[f64]) -> f64;
    fn declared_p(&self) -> Option<Rational> {
        None
    }
}

#[derive(Debug, Clone)]
pub struct PNorm {
    p: Rational,
    pf: f64,
}

impl PNorm {
    pub fn new(p: Rational) -> Result<Self> {
        if p < int(1) {
            return Err(Error::InvalidExponent(format_fraction(&p)));
        }
        let pf = to_f64(&p);
        Ok(Self { p, pf })
    }
}

impl Norm for PNorm {
    fn name(&self) -> String {
        format!("p{}", format_fraction(&self.p))
    }

    fn eval(&self, v: &[f64]) -> f64 {
        if self.pf == 1.0 {
            return v.iter().map(|x| x.abs()).sum();
        }
        v.iter().map(|x| x.abs().powf(self.pf)).sum::<f64>().powf(1.0 / self.pf)
    }

    fn declared_p(&self) -> Option<Rational> {
        Some(self.p.clone())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MaxNorm;

impl Norm for MaxNorm {
    fn name(&self) -> String {
        "max".into()
    }

    fn eval(&self, v: &[f64]) -> f64 {
        v.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// `sum_i w_i |x_i|`, with weight 1 past the end of `weights`. Not
/// permutation invariant.
#[derive(Debug, Clone)]
pub struct WeightedNorm {
    pub weights: Vec<f64>,
}

impl Norm for WeightedNorm {
    fn name(&self) -> String {
        "weighted".into()
    }

    fn eval(&self, v: &[f64]) -> f64 {
        v.iter()
            .enumerate()
            .map(|(i, x)| self.weights.get(i).copied().unwrap_or(1.0) * x.abs())
            .sum()
    }
}

/// Another norm multiplied by a constant factor.
pub struct ScaledNorm {
    pub inner: Box<dyn Norm>,
    pub factor: f64,
}

impl Norm for ScaledNorm {
    fn name(&self) -> String {
        format!("{}*{}", self.inner.name(), self.factor)
    }

    fn eval(&self, v: &[f64]) -> f64 {
        self.factor * self.inner.eval(v)
    }
}

pub const REGISTERED_NORMS: [&str; 7] = ["p1", "p3/2", "p2", "p3", "max", "weighted", "perturbed-p2"];

/// Looks a norm up by name: `p<rational>` (e.g. `p2`, `p3/2`, `p1.5`),
/// `max`, `weighted` (weights 1, 2, 1) or `perturbed-p2` (the 2-norm
/// scaled by `1 + 1e-3`).
pub fn norm_by_name(name: &str) -> Result<Box<dyn Norm>> {
    let n = name.trim().to_ascii_lowercase();
    match n.as_str() {
        "max" | "inf" => Ok(Box::new(MaxNorm)),
        "weighted" => Ok(Box::new(WeightedNorm {
            weights: vec![1.0, 2.0, 1.0],
        })),
        "perturbed-p2" => Ok(Box::new(ScaledNorm {
            inner: Box::new(PNorm::new(int(2))?),
            factor: 1.0 + 1e-3,
        })),
        _ => {
            let p = n
                .strip_prefix('p')
                .and_then(|rest| parse_fraction(rest).ok())
                .ok_or_else(|| Error::UnknownNorm(name.to_string()))?;
            Ok(Box::new(PNorm::new(p)?))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompositionCheck {
    pub combined: f64,
    pub composed: f64,
    pub residual: f64,
    pub passed: bool,
}

/// `| ||v + w|| - ||(||v||, ||w||)|| |` for disjointly supported `v`, `w`.
pub fn check_disjoint_composition(norm: &dyn Norm, v: &[f64], w: &[f64]) -> Result<CompositionCheck> {
    let len = v.len().max(w.len());
    let at = |x: &[f64], i: usize| x.get(i).copied().unwrap_or(0.0);
    if let Some(i) = (0..len).find(|&i| at(v, i) != 0.0 && at(w, i) != 0.0) {
        return Err(Error::OverlappingSupport(i));
    }
    let sum: Vec<f64> = (0..len).map(|i| at(v, i) + at(w, i)).collect();
    let combined = norm.eval(&sum);
    let composed = norm.eval(&[norm.eval(v), norm.eval(w)]);
    let residual = (combined - composed).abs();
    let scale = combined.abs().max(composed.abs()).max(f64::MIN_POSITIVE);
    Ok(CompositionCheck {
        combined,
        composed,
        residual,
        passed: residual / scale <= COMPOSITION_TOL,
    })
}

/// Fixed disjoint pairs exercising composition at several sizes.
pub fn standard_composition_pairs() -> Vec<(Vec<f64>, Vec<f64>)> {
    vec![
        (vec![1.0, 0.0], vec![0.0, 1.0]),
        (vec![3.0, 0.0, 0.0], vec![0.0, 4.0, 0.0]),
        (vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]),
        (vec![0.5, 2.0, 0.0, 0.0], vec![0.0, 0.0, 1.5, 0.25]),
        (vec![0.0, 0.0, 7.0], vec![1.0, 1.0, 0.0]),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FTable {
    /// `direct[n - 1] = ||1^(n)||`.
    pub direct: Vec<f64>,
    /// `recursive[0] = f(1)`, `recursive[n] = ||(1, recursive[n - 1])||`.
    pub recursive: Vec<f64>,
    pub agree: bool,
}

pub fn f_direct(norm: &dyn Norm, n: usize) -> f64 {
    norm.eval(&vec![1.0; n])
}

pub fn f_table(norm: &dyn Norm, n_max: usize) -> Result<FTable> {
    if n_max < 2 {
        return Err(Error::InvalidArgument("n_max must be at least 2".into()));
    }
    let direct: Vec<f64> = (1..=n_max).map(|n| f_direct(norm, n)).collect();
    let mut recursive = vec![direct[0]];
    for _ in 1..n_max {
        let prev = *recursive.last().expect("nonempty");
        recursive.push(norm.eval(&[1.0, prev]));
    }
    let agree = direct
        .iter()
        .zip(&recursive)
        .all(|(a, b)| (a - b).abs() <= COMPOSITION_TOL * a.abs().max(1.0));
    Ok(FTable {
        direct,
        recursive,
        agree,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PEstimate {
    /// `(n, log n / log f(n))` for each evaluation point.
    pub per_point: Vec<(usize, f64)>,
    pub mean: f64,
    pub spread: f64,
    #[serde(with = "crate::fraction::serde_fraction")]
    pub rational: Rational,
    pub spread_ok: bool,
    /// `f(n^k) = f(n)^k` for `n` in {2, 3}, `k` in {2, 3}.
    pub power_law_ok: bool,
    /// `f(n + 1) >= f(n)` on `1..=64`.
    pub monotone_ok: bool,
}

impl PEstimate {
    pub fn passed(&self) -> bool {
        self.spread_ok && self.power_law_ok && self.monotone_ok
    }
}

/// Recovers `p` from `f(n) = n^(1/p)`.
pub fn estimate_p(norm: &dyn Norm) -> Result<PEstimate> {
    let f2 = f_direct(norm, 2);
    if (f2 - 1.0).abs() < 1e-12 {
        return Err(Error::DegenerateNorm);
    }
    let per_point: Vec<(usize, f64)> = ESTIMATE_POINTS
        .iter()
        .map(|&n| (n, (n as f64).ln() / f_direct(norm, n).ln()))
        .collect();
    let values = per_point.iter().map(|(_, e)| *e);
    let mean = values.clone().sum::<f64>() / per_point.len() as f64;
    let spread = values.clone().fold(f64::NEG_INFINITY, f64::max) - values.fold(f64::INFINITY, f64::min);
    let power_law_ok = [2usize, 3].iter().all(|&n| {
        [2u32, 3].iter().all(|&k| {
            let lhs = f_direct(norm, n.pow(k));
            let rhs = f_direct(norm, n).powi(k as i32);
            (lhs - rhs).abs() <= POWER_LAW_TOL * lhs.abs()
        })
    });
    let f: Vec<f64> = (1..=64).map(|n| f_direct(norm, n)).collect();
    let monotone_ok = f.windows(2).all(|w| w[1] >= w[0]);
    let rational = if mean.is_finite() {
        approximate(mean, 1000)?
    } else {
        Rational::from_integer(0.into())
    };
    Ok(PEstimate {
        per_point,
        mean,
        spread,
        rational,
        spread_ok: spread < SPREAD_TOL,
        power_law_ok,
        monotone_ok,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RationalCheck {
    pub checked: usize,
    pub max_relative_error: f64,
    pub passed: bool,
}

/// `||(1, m/n)||` for these `m/n`, the step that pins the norm on pairs.
pub fn rational_step_points() -> Vec<Rational> {
    vec![frac(1, 2), frac(2, 3), frac(3, 4), frac(5, 7), int(2), frac(7, 3)]
}

/// Compares `norm` with `(sum |c_i|^p)^(1/p)` on vectors of rational
/// magnitudes, plus the pairs `(1, m/n)`.
pub fn verify_rational_vectors(norm: &dyn Norm, p: &Rational, samples: &[Vec<Rational>]) -> RationalCheck {
    let pf = to_f64(p);
    let formula = |c: &[f64]| c.iter().map(|x| x.abs().powf(pf)).sum::<f64>().powf(1.0 / pf);
    let steps = rational_step_points().into_iter().map(|q| vec![int(1), q]);
    let mut checked = 0;
    let mut worst = 0.0f64;
    for c in samples.iter().cloned().chain(steps) {
        let v: Vec<f64> = c.iter().map(to_f64).collect();
        let expected = formula(&v);
        let got = norm.eval(&v);
        let rel = (got - expected).abs() / expected.abs().max(f64::MIN_POSITIVE);
        worst = worst.max(rel);
        checked += 1;
    }
    RationalCheck {
        checked,
        max_relative_error: worst,
        passed: worst <= RATIONAL_TOL,
    }
}

/// Fixed rational-magnitude vectors used by the CLI report.
pub fn standard_rational_samples() -> Vec<Vec<Rational>> {
    vec![
        vec![frac(1, 2), frac(1, 3)],
        vec![frac(3, 5), frac(4, 5)],
        vec![int(1), frac(2, 3)],
        vec![frac(1, 7), frac(5, 2), int(3), frac(9, 11)],
    ]
}

/// Everything `normcheck` reports about one norm.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormReport {
    pub norm: String,
    pub composition_ok: bool,
    pub max_composition_residual: f64,
    pub f_table: FTable,
    pub estimate: Option<PEstimate>,
    pub estimate_error: Option<String>,
    pub rational_check: Option<RationalCheck>,
    pub is_p_norm: bool,
}

pub fn norm_report(norm: &dyn Norm) -> NormReport {
    let checks: Vec<CompositionCheck> = standard_composition_pairs()
        .iter()
        .map(|(v, w)| check_disjoint_composition(norm, v, w).expect("standard pairs are disjoint"))
        .collect();
    let composition_ok = checks.iter().all(|c| c.passed);
    let max_composition_residual = checks.iter().map(|c| c.residual).fold(0.0, f64::max);
    let f_table = f_table(norm, 16).expect("n_max >= 2");
    let (estimate, estimate_error) = match estimate_p(norm) {
        Ok(e) => (Some(e), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let rational_check = estimate
        .as_ref()
        .filter(|e| e.passed())
        .map(|e| verify_rational_vectors(norm, &e.rational, &standard_rational_samples()));
    let is_p_norm = composition_ok
        && estimate.as_ref().is_some_and(|e| e.passed())
        && rational_check.as_ref().is_some_and(|r| r.passed);
    NormReport {
        norm: norm.name(),
        composition_ok,
        max_composition_residual,
        f_table,
        estimate,
        estimate_error,
        rational_check,
        is_p_norm,
    }
}
