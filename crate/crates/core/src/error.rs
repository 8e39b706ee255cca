use crate::expr::{EvalError, ParseError, Point};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("expression parse error: {0}")]
    Parse(#[from] ParseError),

    #[error("evaluation failed at {point}: {source}")]
    Eval { point: Point, source: EvalError },

    #[error("invalid chart: {0}")]
    InvalidChart(String),

    #[error("metric is not positive-definite at {point}")]
    NotPositiveDefinite { point: Point },

    #[error("metric is singular at {point}")]
    SingularMetric { point: Point },

    #[error("degenerate {what} at {point}")]
    Degenerate { what: String, point: Point },

    #[error("frame is not orthonormal at {point} (Gram deviation {deviation:.3e})")]
    NotOrthonormal { point: Point, deviation: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("distribution is not contact: |<[X,Y],n>| = {min_abs:.3e} at {point}")]
    NotContact { min_abs: f64, point: Point },

    #[error("no positive root for the stretch factor{}: {detail}", fmt_at(.point))]
    NoPositiveRoot { point: Option<Point>, detail: String },

    #[error("linear stretch equation has no positive solution{}: {detail}", fmt_at(.point))]
    NonpositiveSolution { point: Option<Point>, detail: String },

    #[error("search schedule exhausted at {last}")]
    ScheduleExhausted { last: f64 },

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("schema violation in `{field}`: {reason}")]
    Schema { field: String, reason: String },

    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },

    #[error("verification failed: max residual {max:.3e} exceeds {tolerance:.1e} at {point}")]
    VerificationFailed { max: f64, tolerance: f64, point: Point },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn fmt_at(point: &Option<Point>) -> String {
    match point {
        Some(p) => format!(" at {p}"),
        None => String::new(),
    }
}

/// Attaches the evaluation point to an [`EvalError`].
pub(crate) fn at(point: &Point) -> impl FnOnce(EvalError) -> Error + '_ {
    move |source| Error::Eval { point: *point, source }
}
