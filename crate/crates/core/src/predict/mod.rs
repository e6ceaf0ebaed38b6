//! Neighborhood-based forecasting: tableaux, preprocessing features,
//! regressors, model selection and stepwise reconstruction.

mod features;
mod regressor;
mod scoring;
mod stepwise;
mod tableau;

pub use features::{preprocess_features, structure_key, ErrorHistory, FeatureMethod, FeatureSpec, FeatureVector};
pub use regressor::{train_regressor, Net, NetConfig, Regressor, RegressorKind, MAX_HIDDEN};
pub use scoring::{
    composite_j, e_psi, local_predict, local_predict_where, local_stability, select_prediction, LocalStability, PredictorModel, Selection,
};
pub use stepwise::{stability_features, stepwise_reconstruct, ConfigScore, FeatureSeries, StepwiseConfig, StepwiseResult};
pub use tableau::{build_tableau, Layout, Mask, NeighborhoodTableau};
