use std::collections::BTreeMap;
use std::fmt;

use crate::error::{CapacityError, Result};
use crate::prob::{ProbVec, TransitionMatrix};

use super::{Classical, LambdaSearch, Matz, Proximal, ProximalSettings, StepSchedule};

/// Result of one outer update `p_k -> p_{k+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub prior: ProbVec,
    /// Step-size parameter used (1 for the classical update).
    pub lambda: f64,
    pub inner_iterations: usize,
    /// The implicit update failed and an explicit step was taken instead.
    pub fallback: bool,
}

/// One capacity iteration scheme.
///
/// `iteration` is the 1-based index of the update being computed, which lets
/// scheduled step sizes vary over the run.
pub trait CapacityIteration: Send + Sync {
    fn name(&self) -> &'static str;

    fn step(
        &self,
        prior: &ProbVec,
        channel: &TransitionMatrix,
        iteration: usize,
    ) -> Result<StepOutcome>;

    /// Mutual information never decreases along the iterates.
    fn is_monotone(&self) -> bool {
        true
    }
}

impl fmt::Debug for dyn CapacityIteration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CapacityIteration({})", self.name())
    }
}

/// Knobs a factory may consult when building an iteration by name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VariantOptions {
    /// Fixed step size (Matz).
    pub lambda: Option<f64>,
    /// Per-iteration step sizes (Matz); the last one repeats.
    pub lambda_schedule: Option<Vec<f64>>,
    /// Search interval for the step size (proximal).
    pub lambda_range: Option<(f64, f64)>,
    pub lambda_tolerance: Option<f64>,
    pub inner_tolerance: Option<f64>,
    pub inner_max_iterations: Option<usize>,
}

type Factory = Box<dyn Fn(&VariantOptions) -> Result<Box<dyn CapacityIteration>> + Send + Sync>;

/// Name-to-factory table of capacity iterations.
pub struct Registry {
    factories: BTreeMap<&'static str, Factory>,
}

impl Registry {
    pub fn empty() -> Self {
        Self {
            factories: BTreeMap::new(),
        }
    }

    /// `classical`, `matz` and `proximal`.
    pub fn with_builtin() -> Self {
        let mut registry = Self::empty();
        registry.register("classical", |_| Ok(Box::new(Classical)));
        registry.register("matz", |opts| {
            let schedule = match (&opts.lambda_schedule, opts.lambda) {
                (Some(values), _) => StepSchedule::PerIteration(values.clone()),
                (None, Some(lambda)) => StepSchedule::Fixed(lambda),
                (None, None) => StepSchedule::default(),
            };
            Ok(Box::new(Matz::new(schedule)?))
        });
        registry.register("proximal", |opts| {
            let mut settings = ProximalSettings::default();
            if let Some((lo, hi)) = opts.lambda_range {
                settings.search = LambdaSearch {
                    lo,
                    hi,
                    ..settings.search
                };
            }
            if let Some(tol) = opts.lambda_tolerance {
                settings.search.tol = tol;
            }
            if let Some(tol) = opts.inner_tolerance {
                settings.inner_tolerance = tol;
            }
            if let Some(max) = opts.inner_max_iterations {
                settings.inner_max_iterations = max;
            }
            Ok(Box::new(Proximal::new(settings)?))
        });
        registry
    }

    /// Adds or replaces a factory.
    pub fn register<F>(&mut self, name: &'static str, factory: F)
    where
        F: Fn(&VariantOptions) -> Result<Box<dyn CapacityIteration>> + Send + Sync + 'static,
    {
        self.factories.insert(name, Box::new(factory));
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.factories.keys().copied()
    }

    pub fn create(
        &self,
        name: &str,
        options: &VariantOptions,
    ) -> Result<Box<dyn CapacityIteration>> {
        let factory = self.factories.get(name).ok_or_else(|| {
            let known: Vec<_> = self.names().collect();
            CapacityError::InvalidParameter(format!(
                "unknown variant '{name}' (known: {})",
                known.join(", ")
            ))
        })?;
        factory(options)
    }
}

impl Default for Registry {
    fn default() -> Self {
        Self::with_builtin()
    }
}
