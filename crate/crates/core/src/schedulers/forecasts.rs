use crate::environment::Environment;
use crate::error::Result;
use crate::forecast::{fit_gmm, Gmm};

/// Point forecasts of future slots for lookahead policies.
pub trait Forecaster: Send {
    /// Expected energy offered to every node in slot `slot`.
    fn arrivals(&self, slot: usize) -> Vec<f64>;
    /// Expected link gain of every device in slot `slot`.
    fn gains(&self, slot: usize) -> Vec<f64>;
}

/// Mixture means fitted on the pre-episode history, constant over time.
#[derive(Debug, Clone)]
pub struct GmmForecaster {
    pub arrival_models: Vec<Gmm>,
    /// Fitted on fading draws; the gain forecast rescales by path gain.
    pub fading_models: Vec<Gmm>,
    arrivals: Vec<f64>,
    gains: Vec<f64>,
}

impl GmmForecaster {
    pub fn train(env: &Environment) -> Result<Self> {
        let s = &env.config.scheduling;
        let fit = |samples: &Vec<f64>| fit_gmm(samples, s.gmm_components, s.em_max_iterations, s.em_tolerance);
        let arrival_models = env.training_arrivals.iter().map(fit).collect::<Result<Vec<_>>>()?;
        let fading_models = env.training_fading.iter().map(fit).collect::<Result<Vec<_>>>()?;
        let arrivals = arrival_models.iter().map(|g| g.predict_mean().max(0.0)).collect();
        let gains = fading_models
            .iter()
            .enumerate()
            .map(|(d, g)| env.network.device_gain(d, g.predict_mean().max(0.0)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            arrival_models,
            fading_models,
            arrivals,
            gains,
        })
    }

    pub fn mean_arrivals(&self) -> &[f64] {
        &self.arrivals
    }
}

impl Forecaster for GmmForecaster {
    fn arrivals(&self, _slot: usize) -> Vec<f64> {
        self.arrivals.clone()
    }

    fn gains(&self, _slot: usize) -> Vec<f64> {
        self.gains.clone()
    }
}

/// The realized future itself. Non-causal; for perfect-information runs.
#[derive(Debug, Clone)]
pub struct TraceForecaster {
    pub arrivals: Vec<Vec<f64>>,
    pub gains: Vec<Vec<f64>>,
}

impl TraceForecaster {
    pub fn of(env: &Environment) -> Self {
        Self {
            arrivals: env.arrivals.clone(),
            gains: env.gains.clone(),
        }
    }
}

impl Forecaster for TraceForecaster {
    fn arrivals(&self, slot: usize) -> Vec<f64> {
        self.arrivals[slot].clone()
    }

    fn gains(&self, slot: usize) -> Vec<f64> {
        self.gains[slot].clone()
    }
}
