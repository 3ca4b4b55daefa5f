//! Built-in models for studies: analytic test functions and the grid
//! resilience model.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::basis::{eval_multivariate, BasisSet, MultiIndex};
use crate::distributions::{joint_recurrences, JointInput, Marginal, RecurrenceCoeffs};
use crate::error::{Error, Result};
use crate::grid::{failure_time_marginals, simulate_event, FragilityCurve, NetworkCase, WeatherEvent};

/// A scalar response of random inputs.
pub trait Model: Send + Sync {
    fn name(&self) -> &str;
    fn input(&self) -> &JointInput;
    fn eval(&self, x: &[f64]) -> Result<f64>;
    /// Exact mean and standard deviation, when known.
    fn analytic_moments(&self) -> Option<(f64, f64)> {
        None
    }
}

#[derive(Debug, Clone)]
pub struct ConstantModel {
    joint: JointInput,
    value: f64,
}

impl ConstantModel {
    pub fn new(value: f64, dim: usize) -> Result<Self> {
        Ok(ConstantModel { joint: JointInput::iid(Marginal::uniform(0.0, 1.0)?, dim)?, value })
    }
}

impl Model for ConstantModel {
    fn name(&self) -> &str {
        "constant"
    }
    fn input(&self) -> &JointInput {
        &self.joint
    }
    fn eval(&self, _x: &[f64]) -> Result<f64> {
        Ok(self.value)
    }
    fn analytic_moments(&self) -> Option<(f64, f64)> {
        Some((self.value, 0.0))
    }
}

/// A finite expansion in the orthonormal basis of its inputs.
#[derive(Debug, Clone)]
pub struct SparsePolynomial {
    joint: JointInput,
    basis: BasisSet,
    coefficients: Vec<f64>,
    recurrences: Vec<RecurrenceCoeffs>,
}

impl SparsePolynomial {
    pub fn new(joint: JointInput, terms: Vec<(MultiIndex, f64)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidParameter("polynomial needs at least one term".into()));
        }
        if let Some((a, _)) = terms.iter().find(|(a, _)| a.dim() != joint.dim()) {
            return Err(Error::Shape(format!("term {a} does not match input dimension {}", joint.dim())));
        }
        let p = terms.iter().map(|(a, _)| a.total_degree()).max().unwrap_or(0);
        let recurrences = joint_recurrences(&joint, p)?;
        let (indices, coefficients) = terms.into_iter().unzip();
        let basis = BasisSet { indices, p, q: 1.0 };
        Ok(SparsePolynomial { joint, basis, coefficients, recurrences })
    }

    /// Degree-3 fixture in four uniform inputs with six active terms.
    pub fn standard() -> Self {
        let joint = JointInput::new(vec![
            Marginal::uniform(-1.0, 1.0).unwrap(),
            Marginal::uniform(0.0, 2.0).unwrap(),
            Marginal::uniform(-1.0, 1.0).unwrap(),
            Marginal::uniform(1.0, 3.0).unwrap(),
        ])
        .unwrap();
        let terms = vec![
            (MultiIndex(vec![0, 0, 0, 0]), 1.5),
            (MultiIndex(vec![1, 0, 0, 0]), 2.0),
            (MultiIndex(vec![0, 1, 0, 0]), -1.0),
            (MultiIndex(vec![0, 0, 1, 1]), 0.7),
            (MultiIndex(vec![2, 0, 0, 0]), 0.5),
            (MultiIndex(vec![0, 0, 0, 3]), 0.3),
        ];
        Self::new(joint, terms).unwrap()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, f64)> {
        self.basis.indices.iter().zip(self.coefficients.iter().copied())
    }
}

impl Model for SparsePolynomial {
    fn name(&self) -> &str {
        "sparse_polynomial"
    }
    fn input(&self) -> &JointInput {
        &self.joint
    }
    fn eval(&self, x: &[f64]) -> Result<f64> {
        let psi = eval_multivariate(&self.basis, &self.recurrences, x)?;
        Ok(psi.iter().zip(&self.coefficients).map(|(p, c)| p * c).sum())
    }
    fn analytic_moments(&self) -> Option<(f64, f64)> {
        let mean = self.terms().filter(|(a, _)| a.is_zero()).map(|(_, c)| c).sum();
        let var: f64 = self.terms().filter(|(a, _)| !a.is_zero()).map(|(_, c)| c * c).sum();
        Some((mean, var.sqrt()))
    }
}

/// `sin x1 + a sin^2 x2 + b x3^4 sin x1` on three uniform(-pi, pi) inputs.
#[derive(Debug, Clone)]
pub struct Ishigami {
    joint: JointInput,
    pub a: f64,
    pub b: f64,
}

impl Ishigami {
    pub fn new(a: f64, b: f64) -> Self {
        Ishigami { joint: JointInput::iid(Marginal::uniform(-PI, PI).unwrap(), 3).unwrap(), a, b }
    }

    pub fn mean(&self) -> f64 {
        self.a / 2.0
    }

    pub fn variance(&self) -> f64 {
        let (a, b) = (self.a, self.b);
        a * a / 8.0 + b * PI.powi(4) / 5.0 + b * b * PI.powi(8) / 18.0 + 0.5
    }
}

impl Default for Ishigami {
    fn default() -> Self {
        Self::new(7.0, 0.1)
    }
}

impl Model for Ishigami {
    fn name(&self) -> &str {
        "ishigami"
    }
    fn input(&self) -> &JointInput {
        &self.joint
    }
    fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != 3 {
            return Err(Error::Shape(format!("Ishigami takes 3 inputs, got {}", x.len())));
        }
        Ok(x[0].sin() + self.a * x[1].sin().powi(2) + self.b * x[2].powi(4) * x[0].sin())
    }
    fn analytic_moments(&self) -> Option<(f64, f64)> {
        Some((self.mean(), self.variance().sqrt()))
    }
}

/// Load-served rate of a network under a storm, as a function of the failure
/// hours of its exposed branches.
#[derive(Debug, Clone)]
pub struct GridStudy {
    pub case: NetworkCase,
    pub fragility: FragilityCurve,
    pub weather: WeatherEvent,
    joint: JointInput,
}

impl GridStudy {
    pub fn new(case: NetworkCase, fragility: FragilityCurve, weather: WeatherEvent) -> Result<Self> {
        weather.validate_for(&case)?;
        if weather.n_exposed() == 0 {
            return Err(Error::InvalidParameter("weather event exposes no branches".into()));
        }
        let joint = JointInput::new(failure_time_marginals(&fragility, &weather)?)?;
        Ok(GridStudy { case, fragility, weather, joint })
    }

    /// The bundled 39-bus case under the synthetic default storm.
    pub fn default_study() -> Self {
        let case = crate::grid::parse_case(crate::grid::CASE39).expect("bundled case parses");
        let weather = WeatherEvent::default_windstorm(&case);
        Self::new(case, FragilityCurve::default_windstorm(), weather).expect("bundled study is valid")
    }
}

impl Model for GridStudy {
    fn name(&self) -> &str {
        "grid"
    }
    fn input(&self) -> &JointInput {
        &self.joint
    }
    fn eval(&self, x: &[f64]) -> Result<f64> {
        Ok(simulate_event(&self.case, x, &self.weather)?.phi_ls)
    }
}

/// Serializable model choice for study configurations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    Constant {
        value: f64,
        #[serde(default = "default_dim")]
        dim: usize,
    },
    SparsePolynomial,
    Ishigami {
        #[serde(default = "default_a")]
        a: f64,
        #[serde(default = "default_b")]
        b: f64,
    },
    Grid,
}

fn default_dim() -> usize {
    2
}
fn default_a() -> f64 {
    7.0
}
fn default_b() -> f64 {
    0.1
}

impl ModelSpec {
    /// Total degree used when a study does not set one.
    pub fn default_degree(&self) -> usize {
        match self {
            ModelSpec::Constant { .. } => 1,
            ModelSpec::SparsePolynomial | ModelSpec::Grid => 3,
            ModelSpec::Ishigami { .. } => 5,
        }
    }

    /// Builds the model. `grid` supplies the network study when requested.
    pub fn build(&self, grid: impl FnOnce() -> Result<GridStudy>) -> Result<Box<dyn Model>> {
        Ok(match self {
            ModelSpec::Constant { value, dim } => Box::new(ConstantModel::new(*value, *dim)?),
            ModelSpec::SparsePolynomial => Box::new(SparsePolynomial::standard()),
            ModelSpec::Ishigami { a, b } => Box::new(Ishigami::new(*a, *b)),
            ModelSpec::Grid => Box::new(grid()?),
        })
    }
}
