pub mod analyticity;
pub mod bump;
pub mod nonuniform;

pub use analyticity::{run_analyticity, AnalyticityParams, AnalyticityReport};
pub use bump::{estimate_lipschitz, make_bump, nodal_swirl, support_leak, BumpSpec};
pub use nonuniform::{
    norm_localization_check, run_nonuniform, ExperimentRecord, LocalizationReport, NonuniformConfig, NonuniformReport,
};
