use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smoothness of a Matérn kernel. Only the half-integer values with closed
/// forms are supported.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub enum MaternNu {
    Half,
    ThreeHalves,
    FiveHalves,
}

impl TryFrom<f64> for MaternNu {
    type Error = String;

    fn try_from(nu: f64) -> std::result::Result<Self, String> {
        match nu {
            x if x == 0.5 => Ok(MaternNu::Half),
            x if x == 1.5 => Ok(MaternNu::ThreeHalves),
            x if x == 2.5 => Ok(MaternNu::FiveHalves),
            other => Err(format!(
                "matern smoothness must be one of 0.5, 1.5, 2.5 (got {other})"
            )),
        }
    }
}

impl From<MaternNu> for f64 {
    fn from(nu: MaternNu) -> f64 {
        match nu {
            MaternNu::Half => 0.5,
            MaternNu::ThreeHalves => 1.5,
            MaternNu::FiveHalves => 2.5,
        }
    }
}

/// Which coordinates of the joint input a product factor sees.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Selector {
    /// The whole input.
    #[default]
    All,
    /// Contiguous coordinates `start..end`.
    Range { start: usize, end: usize },
    /// An arbitrary projection.
    Indices { indices: Vec<usize> },
    /// Element-wise sum of two equally long blocks, `x[first] + x[second]`.
    /// Used for kernels on `own action + aggregate opponent load`.
    SumOfRanges {
        first_start: usize,
        second_start: usize,
        len: usize,
    },
}

impl Selector {
    fn required_len(&self) -> usize {
        match self {
            Selector::All => 0,
            Selector::Range { end, .. } => *end,
            Selector::Indices { indices } => indices.iter().map(|i| i + 1).max().unwrap_or(0),
            Selector::SumOfRanges {
                first_start,
                second_start,
                len,
            } => (first_start + len).max(second_start + len),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Selector::Range { start, end } if start >= end => Err(Error::input(format!(
                "empty coordinate range {start}..{end}"
            ))),
            Selector::Indices { indices } if indices.is_empty() => {
                Err(Error::input("empty coordinate index list"))
            }
            Selector::SumOfRanges { len: 0, .. } => Err(Error::input("empty summed block")),
            _ => Ok(()),
        }
    }

    fn apply<'a>(&self, x: &'a [f64], buf: &'a mut Vec<f64>) -> &'a [f64] {
        match self {
            Selector::All => x,
            Selector::Range { start, end } => &x[*start..*end],
            Selector::Indices { indices } => {
                buf.clear();
                buf.extend(indices.iter().map(|&i| x[i]));
                buf
            }
            Selector::SumOfRanges {
                first_start,
                second_start,
                len,
            } => {
                buf.clear();
                buf.extend(
                    x[*first_start..first_start + len]
                        .iter()
                        .zip(&x[*second_start..second_start + len])
                        .map(|(a, b)| a + b),
                );
                buf
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelFactor {
    pub kernel: KernelSpec,
    #[serde(default)]
    pub select: Selector,
}

/// Declarative kernel description.
///
/// `s = ‖a − a′‖₂` for the stationary families. SE and Matérn satisfy
/// `k(a, a) = 1`; wrap them in [`KernelSpec::Scaled`] for another prior variance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum KernelSpec {
    /// `exp(−s² / 2l²)`
    SquaredExponential { lengthscale: f64 },
    /// Closed-form Matérn for ν ∈ {1/2, 3/2, 5/2}.
    Matern { lengthscale: f64, nu: MaternNu },
    /// `(b + a·a′ / l)^n`
    Polynomial {
        lengthscale: f64,
        degree: u32,
        #[serde(default)]
        offset: f64,
    },
    /// `a·a′ / l`
    Linear {
        #[serde(default = "unit")]
        lengthscale: f64,
    },
    /// `1` if the inputs are identical, else `0` (independent outputs per index).
    Diagonal,
    /// `variance · k(a, a′)`
    Scaled {
        variance: f64,
        kernel: Box<KernelSpec>,
    },
    /// Product of factors, each evaluated on its own coordinate selection.
    Product { factors: Vec<KernelFactor> },
}

fn unit() -> f64 {
    1.0
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::input(format!("{name} must be positive and finite (got {value})")))
    }
}

impl KernelSpec {
    pub fn squared_exponential(lengthscale: f64) -> Self {
        KernelSpec::SquaredExponential { lengthscale }
    }

    pub fn matern(lengthscale: f64, nu: MaternNu) -> Self {
        KernelSpec::Matern { lengthscale, nu }
    }

    pub fn polynomial(lengthscale: f64, degree: u32, offset: f64) -> Self {
        KernelSpec::Polynomial {
            lengthscale,
            degree,
            offset,
        }
    }

    pub fn linear(lengthscale: f64) -> Self {
        KernelSpec::Linear { lengthscale }
    }

    pub fn scaled(variance: f64, kernel: KernelSpec) -> Self {
        KernelSpec::Scaled {
            variance,
            kernel: Box::new(kernel),
        }
    }

    pub fn product(factors: Vec<(KernelSpec, Selector)>) -> Self {
        KernelSpec::Product {
            factors: factors
                .into_iter()
                .map(|(kernel, select)| KernelFactor { kernel, select })
                .collect(),
        }
    }

    /// Same kernel with its lengthscale replaced; looks through `Scaled`.
    /// `None` for families without a single lengthscale.
    pub fn with_lengthscale(&self, l: f64) -> Option<KernelSpec> {
        let mut k = self.clone();
        match &mut k {
            KernelSpec::SquaredExponential { lengthscale }
            | KernelSpec::Matern { lengthscale, .. }
            | KernelSpec::Polynomial { lengthscale, .. }
            | KernelSpec::Linear { lengthscale } => *lengthscale = l,
            KernelSpec::Scaled { kernel, .. } => **kernel = kernel.with_lengthscale(l)?,
            KernelSpec::Diagonal | KernelSpec::Product { .. } => return None,
        }
        Some(k)
    }

    pub fn family(&self) -> &'static str {
        match self {
            KernelSpec::SquaredExponential { .. } => "squared-exponential",
            KernelSpec::Matern { .. } => "matern",
            KernelSpec::Polynomial { .. } => "polynomial",
            KernelSpec::Linear { .. } => "linear",
            KernelSpec::Diagonal => "diagonal",
            KernelSpec::Scaled { .. } => "scaled",
            KernelSpec::Product { .. } => "product",
        }
    }

    /// Checks hyperparameter domains.
    pub fn validate(&self) -> Result<()> {
        match self {
            KernelSpec::SquaredExponential { lengthscale }
            | KernelSpec::Matern { lengthscale, .. }
            | KernelSpec::Linear { lengthscale } => positive("lengthscale", *lengthscale),
            KernelSpec::Polynomial {
                lengthscale,
                degree,
                offset,
            } => {
                positive("lengthscale", *lengthscale)?;
                if *degree == 0 {
                    return Err(Error::input("polynomial degree must be at least 1"));
                }
                if !(offset.is_finite() && *offset >= 0.0) {
                    return Err(Error::input(format!(
                        "polynomial offset must be nonnegative (got {offset})"
                    )));
                }
                Ok(())
            }
            KernelSpec::Diagonal => Ok(()),
            KernelSpec::Scaled { variance, kernel } => {
                positive("variance", *variance)?;
                kernel.validate()
            }
            KernelSpec::Product { factors } => {
                if factors.is_empty() {
                    return Err(Error::input("product kernel needs at least one factor"));
                }
                for f in factors {
                    f.select.validate()?;
                    f.kernel.validate()?;
                }
                Ok(())
            }
        }
    }

    /// Smallest input dimension this kernel can be evaluated on.
    pub fn min_input_dim(&self) -> usize {
        match self {
            KernelSpec::Scaled { kernel, .. } => kernel.min_input_dim(),
            KernelSpec::Product { factors } => factors
                .iter()
                .map(|f| f.select.required_len().max(f.kernel.min_input_dim()))
                .max()
                .unwrap_or(0),
            _ => 0,
        }
    }

    /// Evaluates `k(a, a′)`, checking dimensions and finiteness.
    pub fn eval(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        if a.len() != b.len() {
            return Err(Error::input(format!(
                "kernel inputs differ in dimension ({} vs {})",
                a.len(),
                b.len()
            )));
        }
        let need = self.min_input_dim();
        if a.len() < need {
            return Err(Error::input(format!(
                "kernel expects at least {need} coordinates, got {}",
                a.len()
            )));
        }
        if a.iter().chain(b).any(|x| !x.is_finite()) {
            return Err(Error::input("non-finite kernel input coordinate"));
        }
        Ok(self.eval_unchecked(a, b))
    }

    /// Evaluation without input validation; callers guarantee equal,
    /// sufficient dimensions and finite coordinates.
    pub(crate) fn eval_unchecked(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            KernelSpec::SquaredExponential { lengthscale } => {
                (-sq_dist(a, b) / (2.0 * lengthscale * lengthscale)).exp()
            }
            KernelSpec::Matern { lengthscale, nu } => {
                let r = sq_dist(a, b).sqrt() / lengthscale;
                match nu {
                    MaternNu::Half => (-r).exp(),
                    MaternNu::ThreeHalves => {
                        let z = 3f64.sqrt() * r;
                        (1.0 + z) * (-z).exp()
                    }
                    MaternNu::FiveHalves => {
                        let z = 5f64.sqrt() * r;
                        (1.0 + z + z * z / 3.0) * (-z).exp()
                    }
                }
            }
            KernelSpec::Polynomial {
                lengthscale,
                degree,
                offset,
            } => (offset + dot(a, b) / lengthscale).powi(*degree as i32),
            KernelSpec::Linear { lengthscale } => dot(a, b) / lengthscale,
            KernelSpec::Diagonal => {
                if a == b {
                    1.0
                } else {
                    0.0
                }
            }
            KernelSpec::Scaled { variance, kernel } => variance * kernel.eval_unchecked(a, b),
            KernelSpec::Product { factors } => {
                let mut buf_a = Vec::new();
                let mut buf_b = Vec::new();
                let mut acc = 1.0;
                for f in factors {
                    let xa = f.select.apply(a, &mut buf_a);
                    let xb = f.select.apply(b, &mut buf_b);
                    acc *= f.kernel.eval_unchecked(xa, xb);
                    if acc == 0.0 {
                        break;
                    }
                }
                acc
            }
        }
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelSpec::SquaredExponential { lengthscale } => write!(f, "se(l={lengthscale})"),
            KernelSpec::Matern { lengthscale, nu } => {
                write!(f, "matern(l={lengthscale}, nu={})", f64::from(*nu))
            }
            KernelSpec::Polynomial {
                lengthscale,
                degree,
                offset,
            } => write!(f, "poly(l={lengthscale}, n={degree}, b={offset})"),
            KernelSpec::Linear { lengthscale } => write!(f, "linear(l={lengthscale})"),
            KernelSpec::Diagonal => write!(f, "diagonal"),
            KernelSpec::Scaled { variance, kernel } => write!(f, "{variance}*{kernel}"),
            KernelSpec::Product { factors } => {
                for (i, factor) in factors.iter().enumerate() {
                    if i > 0 {
                        write!(f, " x ")?;
                    }
                    write!(f, "{}", factor.kernel)?;
                }
                Ok(())
            }
        }
    }
}

/// Dense row-major kernel matrix over `points`.
pub fn gram_matrix(kernel: &KernelSpec, points: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = points.len();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let v = kernel.eval(&points[i], &points[j])?;
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    Ok(k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn se_at_zero_distance_is_one() {
        let k = KernelSpec::squared_exponential(0.7);
        assert_eq!(k.eval(&[0.3, -1.0], &[0.3, -1.0]).unwrap(), 1.0);
    }

    #[test]
    fn polynomial_linear_case_orthogonal_inputs() {
        let k = KernelSpec::polynomial(1.0, 1, 0.0);
        assert_eq!(k.eval(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn matern_half_is_exponential() {
        let k = KernelSpec::matern(1.0, MaternNu::Half);
        let v = k.eval(&[0.0], &[2.0]).unwrap();
        assert!((v - (-2.0f64).exp()).abs() < 1e-15);
        assert!((v - 0.1353).abs() < 1e-4);
    }

    #[test]
    fn matern_unit_diagonal() {
        for nu in [MaternNu::Half, MaternNu::ThreeHalves, MaternNu::FiveHalves] {
            let k = KernelSpec::matern(2.0, nu);
            assert_eq!(k.eval(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 1.0);
        }
    }

    #[test]
    fn dimension_mismatch_and_nan_rejected() {
        let k = KernelSpec::squared_exponential(1.0);
        assert!(matches!(k.eval(&[0.0], &[0.0, 1.0]), Err(Error::Input(_))));
        assert!(matches!(k.eval(&[f64::NAN], &[0.0]), Err(Error::Input(_))));
    }

    #[test]
    fn product_uses_selected_coordinates() {
        let k = KernelSpec::product(vec![
            (KernelSpec::linear(1.0), Selector::Range { start: 0, end: 2 }),
            (
                KernelSpec::polynomial(1.0, 2, 1.0),
                Selector::SumOfRanges {
                    first_start: 0,
                    second_start: 2,
                    len: 2,
                },
            ),
        ]);
        let a = [1.0, 0.0, 2.0, 1.0];
        let b = [1.0, 1.0, 0.0, 0.0];
        // linear part: 1; summed blocks (3,1)·(1,1) = 4 → (1+4)^2 = 25
        assert_eq!(k.eval(&a, &b).unwrap(), 25.0);
        assert!(k.eval(&[1.0, 0.0, 2.0], &[1.0, 1.0, 0.0]).is_err());
    }

    #[test]
    fn diagonal_kernel_in_product() {
        let k = KernelSpec::product(vec![
            (KernelSpec::linear(1.0), Selector::Range { start: 0, end: 2 }),
            (KernelSpec::Diagonal, Selector::Range { start: 2, end: 3 }),
        ]);
        assert_eq!(k.eval(&[1.0, 2.0, 3.0], &[3.0, 1.0, 3.0]).unwrap(), 5.0);
        assert_eq!(k.eval(&[1.0, 2.0, 3.0], &[3.0, 1.0, 4.0]).unwrap(), 0.0);
    }

    #[test]
    fn invalid_hyperparameters() {
        assert!(KernelSpec::squared_exponential(0.0).validate().is_err());
        assert!(KernelSpec::polynomial(1.0, 0, 0.0).validate().is_err());
        assert!(KernelSpec::polynomial(1.0, 2, -1.0).validate().is_err());
        assert!(KernelSpec::Product { factors: vec![] }.validate().is_err());
        assert!(MaternNu::try_from(1.0).is_err());
    }

    #[test]
    fn toml_round_trip() {
        let text = r#"
family = "product"
[[factors]]
kernel = { family = "linear" }
select = { kind = "range", start = 0, end = 3 }
[[factors]]
kernel = { family = "matern", lengthscale = 2.0, nu = 1.5 }
"#;
        let spec: KernelSpec = toml::from_str(text).unwrap();
        let again: KernelSpec = toml::from_str(&toml::to_string(&spec).unwrap()).unwrap();
        assert_eq!(spec, again);
        assert_eq!(spec.min_input_dim(), 3);
    }
}
