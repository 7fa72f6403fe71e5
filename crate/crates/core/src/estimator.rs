use crate::error::Result;
use crate::intervals::{
    bounds, poisson_bounds, score_bounds, trained_bounds, trained_poisson_bounds, Bounds, IntervalSpec,
    ShiftedPoissonModel, TrainedKind, TrainedModel,
};
use crate::numerics::z_from_alpha;

/// Any interval estimator, evaluated at an ℓ₂ value.
#[derive(Clone, Debug, PartialEq)]
pub enum Estimator {
    BoxCox { lambda: f64, shift: f64 },
    Score,
    Poisson,
    TrainedBoxCox(TrainedModel),
    TrainedScore(TrainedModel),
    TrainedPoisson(TrainedModel),
}

impl Estimator {
    pub fn boxcox(lambda: f64) -> Self {
        Estimator::BoxCox { lambda, shift: 0.0 }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Estimator::BoxCox { shift, .. } if *shift != 0.0 => "boxcox-shifted",
            Estimator::BoxCox { .. } => "boxcox",
            Estimator::Score => "score",
            Estimator::Poisson => "poisson",
            Estimator::TrainedBoxCox(_) => "trained-boxcox",
            Estimator::TrainedScore(_) => "trained-score",
            Estimator::TrainedPoisson(_) => "trained-poisson",
        }
    }

    pub fn lambda(&self) -> Option<f64> {
        match self {
            Estimator::BoxCox { lambda, .. } => Some(*lambda),
            Estimator::TrainedBoxCox(m) | Estimator::TrainedScore(m) | Estimator::TrainedPoisson(m) => Some(m.lambda),
            Estimator::Score | Estimator::Poisson => None,
        }
    }

    pub fn bounds(&self, ell2: f64, alpha: f64) -> Result<Bounds> {
        match self {
            Estimator::BoxCox { lambda, shift } => {
                bounds(&IntervalSpec::from_alpha(*lambda, alpha)?.with_shift(*shift), ell2)
            }
            Estimator::Score => score_bounds(z_from_alpha(alpha)?, ell2),
            Estimator::Poisson => poisson_bounds(alpha, ell2, &ShiftedPoissonModel::IDENTITY, None),
            Estimator::TrainedBoxCox(m) => trained_bounds(m, ell2, alpha, TrainedKind::BoxCox),
            Estimator::TrainedScore(m) => trained_bounds(m, ell2, alpha, TrainedKind::Score),
            Estimator::TrainedPoisson(m) => trained_poisson_bounds(m, ell2, alpha),
        }
    }
}
