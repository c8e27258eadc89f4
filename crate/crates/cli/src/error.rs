use std::path::PathBuf;

use menshov_core::analysis::AnalysisError;
use menshov_core::approximator::FitError;
use menshov_core::correction::CorrectionError;
use menshov_core::representer::StageError;
use menshov_core::spectrum::SpectrumError;
use serde_json::{json, Value};
use thiserror::Error;

/// Process exit status for a clean run.
pub const EXIT_OK: i32 = 0;
/// Bad flags, unreadable inputs, invalid parameters.
pub const EXIT_USAGE: i32 = 1;
/// The algorithm ran and could not meet its targets.
pub const EXIT_ALGORITHMIC: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error(transparent)]
    Correction(#[from] CorrectionError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Stage(#[from] StageError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

fn spectrum_is_algorithmic(e: &SpectrumError) -> bool {
    matches!(
        e,
        SpectrumError::NoAdmissibleL { .. }
            | SpectrumError::WitnessOverlap { .. }
            | SpectrumError::SupportIncompatible { .. }
            | SpectrumError::PlantOutOfSupport { .. }
    )
}

fn fit_is_algorithmic(e: &FitError) -> bool {
    matches!(e, FitError::BudgetUnmet { .. } | FitError::Singular(_))
}

fn correction_is_algorithmic(e: &CorrectionError) -> bool {
    !matches!(e, CorrectionError::InvalidParameter(_))
}

fn fit_details(e: &FitError) -> Value {
    match e {
        FitError::BudgetUnmet { budget, max_degree, best } => json!({
            "budget": budget,
            "max_degree": max_degree,
            "best_report": best.report,
        }),
        FitError::Singular(d) => json!({ "degree": d }),
        _ => Value::Null,
    }
}

fn correction_details(e: &CorrectionError) -> Value {
    match e {
        CorrectionError::BudgetExceeded {
            strategy,
            budget,
            required_degree,
            best,
        } => json!({
            "strategy": strategy,
            "budget": budget,
            "required_degree": required_degree,
            "best": best,
        }),
        _ => Value::Null,
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        let algorithmic = match self {
            CliError::Usage(_) | CliError::Io { .. } | CliError::Parse { .. } | CliError::Analysis(_) => false,
            CliError::Spectrum(e) => spectrum_is_algorithmic(e),
            CliError::Correction(e) => correction_is_algorithmic(e),
            CliError::Fit(e) => fit_is_algorithmic(e),
            CliError::Stage(e) => match e {
                StageError::Config(_) => false,
                StageError::Fit { source, .. } => fit_is_algorithmic(source),
                StageError::Correction { source, .. } => correction_is_algorithmic(source),
                StageError::Witness { .. } | StageError::FrequencyOverflow { .. } | StageError::Poly { .. } => true,
            },
        };
        if algorithmic {
            EXIT_ALGORITHMIC
        } else {
            EXIT_USAGE
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Io { .. } => "io",
            CliError::Parse { .. } => "parse",
            CliError::Spectrum(_) => "witness",
            CliError::Correction(_) => "correction",
            CliError::Fit(_) => "fit",
            CliError::Stage(_) => "stage",
            CliError::Analysis(_) => "analysis",
        }
    }

    /// Machine-readable form written to stderr and to `failure.json`.
    pub fn to_json(&self) -> Value {
        let (stage, details) = match self {
            CliError::Fit(e) => (None, fit_details(e)),
            CliError::Correction(e) => (None, correction_details(e)),
            CliError::Stage(e) => {
                let details = match e {
                    StageError::Fit { source, .. } => fit_details(source),
                    StageError::Correction { source, .. } => correction_details(source),
                    StageError::FrequencyOverflow { k, l, .. } => json!({ "k": k, "l": l }),
                    _ => Value::Null,
                };
                (e.stage(), details)
            }
            _ => (None, Value::Null),
        };
        json!({
            "error": self.kind(),
            "message": self.to_string(),
            "exit_code": self.exit_code(),
            "stage": stage,
            "details": details,
        })
    }
}
