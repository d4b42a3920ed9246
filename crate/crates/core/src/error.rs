use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("size mismatch: {what} is {got_w}x{got_h}, expected {want_w}x{want_h}")]
    SizeMismatch {
        what: &'static str,
        want_w: usize,
        want_h: usize,
        got_w: usize,
        got_h: usize,
    },

    #[error("feature dimension mismatch: {0} vs {1}")]
    FeatureDimMismatch(usize, usize),

    #[error("scene has no primitives")]
    SceneEmpty,

    #[error("frame sequence is empty")]
    EmptySequence,

    #[error("ground truth has no valid pixel")]
    EmptyGroundTruth,

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("malformed PFM header: {0}")]
    MalformedHeader(String),

    #[error("truncated PFM payload: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: usize, found: usize },

    #[error("guidance file missing for stage `{stage}` (scene {scene}): {}", path.display())]
    GuideMissing {
        stage: &'static str,
        scene: String,
        path: PathBuf,
    },

    #[error("stage `{stage}` failed for scene {scene}: {source}")]
    Stage {
        stage: &'static str,
        scene: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{}: {source}", path.display())]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),
}

impl Error {
    pub(crate) fn size(
        what: &'static str,
        want: (usize, usize),
        got: (usize, usize),
    ) -> Self {
        Error::SizeMismatch {
            what,
            want_w: want.0,
            want_h: want.1,
            got_w: got.0,
            got_h: got.1,
        }
    }

    /// Wraps `self` with the pipeline stage and scene it came from.
    /// Errors that already name their stage pass through unchanged.
    pub fn in_stage(self, stage: &'static str, scene: &str) -> Self {
        match self {
            e @ (Error::Stage { .. } | Error::GuideMissing { .. }) => e,
            e => Error::Stage {
                stage,
                scene: scene.to_string(),
                source: Box::new(e),
            },
        }
    }
}

pub(crate) fn ensure_same_size(
    what: &'static str,
    want: (usize, usize),
    got: (usize, usize),
) -> Result<()> {
    if want == got {
        Ok(())
    } else {
        Err(Error::size(what, want, got))
    }
}
