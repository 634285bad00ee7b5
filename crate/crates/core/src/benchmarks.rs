//! Analytic test functions standing in for expensive simulations.
//!
//! Some variants are non-standard on purpose: Rosenbrock is negated, the hump
//! functions are modified and DropWave uses a narrow box. Schwefel's `sin(sqrt(x))`
//! is evaluated as `sin(sqrt(|x|))` so it stays real on `[-5, 5]`.

use std::f64::consts::{E, PI};

use crate::domain::DesignDomain;
use crate::error::{Error, Result};

/// Hartmann 6-D weights.
pub const HARTMANN_ALPHA: [f64; 4] = [1.0, 1.2, 3.0, 3.2];

pub const HARTMANN_A: [[f64; 6]; 4] = [
    [10.0, 3.0, 17.0, 3.5, 1.7, 8.0],
    [0.05, 10.0, 17.0, 0.1, 8.0, 14.0],
    [3.0, 3.5, 1.7, 10.0, 17.0, 7.0],
    [17.0, 8.0, 0.05, 10.0, 0.01, 14.0],
];

/// Hartmann centres before the `1e-4` scaling.
pub const HARTMANN_P_RAW: [[f64; 6]; 4] = [
    [1312.0, 1696.0, 5569.0, 124.0, 8283.0, 5886.0],
    [2329.0, 4135.0, 8307.0, 3736.0, 1004.0, 9991.0],
    [2348.0, 1451.0, 3522.0, 2883.0, 3047.0, 6650.0],
    [4047.0, 8828.0, 8732.0, 5743.0, 1091.0, 381.0],
];

pub const HARTMANN_P_SCALE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FunctionKind {
    HumpSingle,
    HumpTwo,
    GramLee,
    BekerLogan,
    Eggholder,
    Himmelblau,
    Branin,
    DropWave,
    Ishigami,
    Hartmann,
    Rosenbrock,
    Ackley,
    Michalewicz,
    Schwefel,
    StyblinskiTang,
}

impl FunctionKind {
    const ALL: [FunctionKind; 15] = [
        FunctionKind::HumpSingle,
        FunctionKind::HumpTwo,
        FunctionKind::GramLee,
        FunctionKind::BekerLogan,
        FunctionKind::Eggholder,
        FunctionKind::Himmelblau,
        FunctionKind::Branin,
        FunctionKind::DropWave,
        FunctionKind::Ishigami,
        FunctionKind::Hartmann,
        FunctionKind::Rosenbrock,
        FunctionKind::Ackley,
        FunctionKind::Michalewicz,
        FunctionKind::Schwefel,
        FunctionKind::StyblinskiTang,
    ];

    pub fn base_name(self) -> &'static str {
        match self {
            FunctionKind::HumpSingle => "humpsingle",
            FunctionKind::HumpTwo => "humptwo",
            FunctionKind::GramLee => "gramlee",
            FunctionKind::BekerLogan => "bekerlogan",
            FunctionKind::Eggholder => "eggholder",
            FunctionKind::Himmelblau => "himmelblau",
            FunctionKind::Branin => "branin",
            FunctionKind::DropWave => "dropwave",
            FunctionKind::Ishigami => "ishigami",
            FunctionKind::Hartmann => "hartmann",
            FunctionKind::Rosenbrock => "rosenbrock",
            FunctionKind::Ackley => "ackley",
            FunctionKind::Michalewicz => "michalewicz",
            FunctionKind::Schwefel => "schwefel",
            FunctionKind::StyblinskiTang => "styblinskitang",
        }
    }

    /// Fixed input dimension, or `None` for dimension-generic functions.
    pub fn fixed_dim(self) -> Option<usize> {
        match self {
            FunctionKind::HumpSingle | FunctionKind::HumpTwo | FunctionKind::GramLee => Some(1),
            FunctionKind::BekerLogan
            | FunctionKind::Eggholder
            | FunctionKind::Himmelblau
            | FunctionKind::Branin
            | FunctionKind::DropWave => Some(2),
            FunctionKind::Ishigami => Some(3),
            FunctionKind::Hartmann => Some(6),
            _ => None,
        }
    }

    fn bounds(self) -> (f64, f64) {
        match self {
            FunctionKind::HumpSingle => (-1.5, 5.0),
            FunctionKind::HumpTwo => (-0.5, 5.0),
            FunctionKind::GramLee => (-1.5, 1.0),
            FunctionKind::BekerLogan => (-10.0, 10.0),
            FunctionKind::Eggholder => (-512.0, 512.0),
            FunctionKind::Himmelblau => (-6.0, 6.0),
            FunctionKind::Branin => (-5.0, 10.0),
            FunctionKind::DropWave => (-0.6, 0.9),
            FunctionKind::Ishigami => (-PI, PI),
            FunctionKind::Hartmann => (0.0, 1.0),
            FunctionKind::Michalewicz => (0.0, PI),
            FunctionKind::Rosenbrock
            | FunctionKind::Ackley
            | FunctionKind::Schwefel
            | FunctionKind::StyblinskiTang => (-5.0, 5.0),
        }
    }
}

/// A benchmark function with its input box.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkFunction {
    kind: FunctionKind,
    dim: usize,
    domain: DesignDomain,
}

impl BenchmarkFunction {
    pub fn new(kind: FunctionKind, dim: usize) -> Result<Self> {
        if let Some(fixed) = kind.fixed_dim() {
            if fixed != dim {
                return Err(Error::DimensionMismatch {
                    expected: fixed,
                    got: dim,
                });
            }
        }
        let min_dim = if kind == FunctionKind::Rosenbrock { 2 } else { 1 };
        if dim < min_dim {
            return Err(Error::Argument(format!(
                "{} needs at least {min_dim} dimensions",
                kind.base_name()
            )));
        }
        let (lo, hi) = kind.bounds();
        Ok(Self {
            kind,
            dim,
            domain: DesignDomain::uniform(dim, lo, hi)?,
        })
    }

    /// Look a function up by its catalog name, e.g. `branin`, `hartmann` or
    /// `rosenbrock-4`. Case, `_` and interior `-` in the base name are ignored.
    pub fn by_name(name: &str) -> Result<Self> {
        let lowered = name.trim().to_ascii_lowercase();
        let (base, dim) = match lowered.rsplit_once('-') {
            Some((b, d)) if !d.is_empty() && d.chars().all(|c| c.is_ascii_digit()) => {
                (b.to_string(), d.parse::<usize>().ok())
            }
            _ => (lowered.clone(), None),
        };
        let base: String = base.chars().filter(|c| *c != '-' && *c != '_').collect();
        let unknown = || Error::UnknownFunction(name.to_string());
        let kind = FunctionKind::ALL
            .into_iter()
            .find(|k| k.base_name() == base)
            .ok_or_else(unknown)?;
        let dim = match (kind.fixed_dim(), dim) {
            (Some(f), None) => f,
            (Some(f), Some(d)) if f == d => f,
            (None, Some(d)) => d,
            _ => return Err(unknown()),
        };
        Self::new(kind, dim).map_err(|_| unknown())
    }

    pub fn kind(&self) -> FunctionKind {
        self.kind
    }

    /// Catalog name; dimension-generic functions carry a `-n` suffix.
    pub fn name(&self) -> String {
        match self.kind.fixed_dim() {
            Some(_) => self.kind.base_name().to_string(),
            None => format!("{}-{}", self.kind.base_name(), self.dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain(&self) -> &DesignDomain {
        &self.domain
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self.domain.check(x)?;
        Ok(self.eval_unchecked(x))
    }

    /// Evaluate without the domain check.
    pub fn eval_unchecked(&self, x: &[f64]) -> f64 {
        let n = x.len() as f64;
        match self.kind {
            FunctionKind::HumpSingle => {
                let x = x[0];
                0.05 / ((x - 4.75).powi(2) + 0.004) - 0.09 / ((x - 4.45).powi(2) + 0.05) - 6.0
                    + 3.0 * x
            }
            FunctionKind::HumpTwo => {
                let x = x[0];
                5.0 * x + 0.05 / ((x - 4.5).powi(2) + 0.002) - 0.5 / ((x - 3.5).powi(2) + 3.5) - 6.0
            }
            FunctionKind::GramLee => {
                let x = x[0];
                60.0 * (6.0 * PI * x).sin() / (2.0 * x.cos()) + (x - 1.0).powi(4)
            }
            FunctionKind::BekerLogan => (x[0].abs() - 5.0).powi(2) + (x[1].abs() - 5.0).powi(2),
            FunctionKind::Eggholder => {
                let (x1, x2) = (x[0], x[1]);
                -(x2 + 47.0) * (x2 + 0.5 * x1 + 47.0).abs().sqrt().sin()
                    - x1 * (x1 - (x2 + 47.0)).abs().sqrt().sin()
            }
            FunctionKind::Himmelblau => {
                let (x1, x2) = (x[0], x[1]);
                (x1 * x1 + x2 - 11.0).powi(2) + (x1 + x2 * x2 - 7.0).powi(2)
            }
            FunctionKind::Branin => {
                let (x1, x2) = (x[0], x[1]);
                (x2 - 5.1 / (4.0 * PI * PI) * x1 * x1 + 5.0 / PI * x1 - 6.0).powi(2)
                    + 10.0 * (1.0 - 1.0 / (8.0 * PI)) * x1.cos()
                    + 10.0
            }
            FunctionKind::DropWave => {
                let r2 = x[0] * x[0] + x[1] * x[1];
                -(1.0 + (12.0 * r2.sqrt()).cos()) / (0.5 * r2 + 2.0)
            }
            FunctionKind::Ishigami => {
                x[0].sin() + 7.0 * x[1].sin().powi(2) + 0.1 * x[2].powi(4) * x[0].sin()
            }
            FunctionKind::Hartmann => {
                let mut total = 0.0;
                for i in 0..4 {
                    let inner: f64 = (0..6)
                        .map(|j| {
                            HARTMANN_A[i][j] * (x[j] - HARTMANN_P_SCALE * HARTMANN_P_RAW[i][j]).powi(2)
                        })
                        .sum();
                    total += HARTMANN_ALPHA[i] * (-inner).exp();
                }
                -total
            }
            FunctionKind::Rosenbrock => -x
                .windows(2)
                .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (w[0] - 1.0).powi(2))
                .sum::<f64>(),
            FunctionKind::Ackley => {
                let sq = x.iter().map(|v| v * v).sum::<f64>() / n;
                let cs = x.iter().map(|v| (2.0 * PI * v).cos()).sum::<f64>() / n;
                -20.0 * (-0.2 * sq.sqrt()).exp() - cs.exp() + 20.0 + E
            }
            FunctionKind::Michalewicz => -x
                .iter()
                .enumerate()
                .map(|(i, v)| v.sin() * ((i + 1) as f64 * v * v / PI).sin().powi(10))
                .sum::<f64>(),
            FunctionKind::Schwefel => {
                418.9829 * n - x.iter().map(|v| v * v.abs().sqrt().sin()).sum::<f64>()
            }
            FunctionKind::StyblinskiTang => {
                0.5 * x.iter().map(|v| v.powi(4) - 16.0 * v * v + 5.0 * v).sum::<f64>()
            }
        }
    }
}

/// Filter for [`list_benchmarks`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BenchmarkFilter {
    All,
    Dim(usize),
    Name(String),
}

/// Dimension suites used by the comparison study.
pub fn suite(dim: usize) -> Vec<BenchmarkFunction> {
    let names: &[&str] = match dim {
        1 => &["gramlee", "humpsingle", "humptwo"],
        2 => &[
            "bekerlogan",
            "eggholder",
            "himmelblau",
            "branin",
            "dropwave",
            "michalewicz-2",
            "schwefel-2",
        ],
        3 => &["ackley-3", "rosenbrock-3", "michalewicz-3", "ishigami"],
        4 => &["ackley-4", "rosenbrock-4", "michalewicz-4", "styblinskitang-4"],
        6 => &["ackley-6", "rosenbrock-6", "michalewicz-6", "hartmann"],
        8 => &["ackley-8", "rosenbrock-8", "michalewicz-8", "styblinskitang-8"],
        _ => &[],
    };
    names
        .iter()
        .map(|n| BenchmarkFunction::by_name(n).expect("suite names are valid"))
        .collect()
}

pub const SUITE_DIMS: [usize; 6] = [1, 2, 3, 4, 6, 8];

pub fn list_benchmarks(filter: &BenchmarkFilter) -> Result<Vec<BenchmarkFunction>> {
    match filter {
        BenchmarkFilter::All => Ok(SUITE_DIMS.iter().flat_map(|d| suite(*d)).collect()),
        BenchmarkFilter::Dim(d) => Ok(suite(*d)),
        BenchmarkFilter::Name(n) => Ok(vec![BenchmarkFunction::by_name(n)?]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(name: &str) -> BenchmarkFunction {
        BenchmarkFunction::by_name(name).unwrap()
    }

    #[test]
    fn known_values() {
        assert_eq!(f("himmelblau").evaluate(&[3.0, 2.0]).unwrap(), 0.0);
        for n in [1, 2, 3, 4, 6, 8] {
            let v = f(&format!("ackley-{n}")).evaluate(&vec![0.0; n]).unwrap();
            assert!(v.abs() <= 1e-12, "{v}");
        }
        let b = f("branin").evaluate(&[PI, 2.275]).unwrap();
        assert!((b - 10.0 / (8.0 * PI)).abs() < 1e-12);
        assert!((b - 0.3979).abs() < 1e-4);
        assert_eq!(f("ishigami").evaluate(&[0.0, 0.0, 0.0]).unwrap(), 0.0);
        for n in [1usize, 4, 8] {
            let v = f(&format!("styblinskitang-{n}"))
                .evaluate(&vec![-2.903534; n])
                .unwrap();
            assert!((v - -39.16617 * n as f64).abs() < 1e-3 * n as f64, "{v}");
        }
        assert_eq!(f("rosenbrock-3").evaluate(&[1.0, 1.0, 1.0]).unwrap(), 0.0);
        assert!(f("rosenbrock-2").evaluate(&[0.0, 1.0]).unwrap() < 0.0);
    }

    #[test]
    fn hartmann_global_minimum() {
        // A[2][5] = 7 and A[3][4] = 0.01 move the optimum slightly away from
        // the commonly quoted -3.32237
        let x = [0.20169, 0.150011, 0.476874, 0.275332, 0.311652, 0.6573];
        let v = f("hartmann").evaluate(&x).unwrap();
        assert!((v - -3.3225403022).abs() < 1e-9, "{v}");
    }

    #[test]
    fn names_and_lookup() {
        assert_eq!(f("Rosenbrock-4").name(), "rosenbrock-4");
        assert_eq!(f("styblinski-tang-4").name(), "styblinskitang-4");
        assert_eq!(f("BRANIN").name(), "branin");
        assert!(BenchmarkFunction::by_name("rosenbrock").is_err());
        assert!(BenchmarkFunction::by_name("branin-3").is_err());
        assert!(matches!(
            BenchmarkFunction::by_name("nope"),
            Err(Error::UnknownFunction(_))
        ));
    }

    #[test]
    fn suites() {
        assert_eq!(suite(1).len(), 3);
        assert_eq!(suite(2).len(), 7);
        assert_eq!(suite(3).len(), 4);
        assert_eq!(suite(4).len(), 4);
        let six = suite(6);
        assert_eq!(six.len(), 4);
        assert!(six.iter().any(|b| b.name() == "hartmann"));
        assert_eq!(suite(8).len(), 4);
        for d in SUITE_DIMS {
            assert!(suite(d).iter().all(|b| b.dim() == d));
        }
        assert_eq!(list_benchmarks(&BenchmarkFilter::All).unwrap().len(), 26);
        assert!(list_benchmarks(&BenchmarkFilter::Name("unknown".into())).is_err());
    }

    #[test]
    fn out_of_domain_is_rejected() {
        assert!(matches!(
            f("dropwave").evaluate(&[1.0, 0.0]),
            Err(Error::DomainViolation { .. })
        ));
        assert!(f("branin").evaluate(&[0.0]).is_err());
    }

    #[test]
    fn ishigami_is_even_in_x3() {
        let g = f("ishigami");
        for (a, b, c) in [(0.3, -1.2, 2.0), (-2.9, 0.1, 0.7), (1.0, 3.0, -3.1)] {
            let d = g.evaluate(&[a, b, c]).unwrap() - g.evaluate(&[a, b, -c]).unwrap();
            assert!(d.abs() <= 1e-12);
        }
    }
}
