use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = VgaError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum VgaError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("I/O error: {0}")]
    RawIo(#[from] io::Error),

    #[error("invalid GeoJSON in {path}: {msg}")]
    GeoJson { path: PathBuf, msg: String },

    #[error("degenerate boundary polygon (area {area})")]
    DegenerateBoundary { area: f64 },

    #[error("zero active cells: every grid centre lies outside the boundary or inside a building")]
    ZeroActiveCells,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("HLL precision {0} out of range [4, 16]")]
    PrecisionOutOfRange(u32),

    #[error("graph has no nodes")]
    EmptyGraph,

    #[error("truncated LEB128 varint at byte {0}")]
    TruncatedVarint(usize),

    #[error("malformed LEB128 varint at byte {0}: longer than 10 bytes")]
    OverlongVarint(usize),

    #[error("neighbour list of node {node} is not strictly increasing")]
    UnsortedNeighbors { node: u32 },

    #[error("neighbour {neighbor} of node {node} is out of range (N = {n})")]
    NeighborOutOfRange { node: u32, neighbor: u64, n: usize },

    #[error("node {node} lists itself as a neighbour")]
    SelfLoop { node: u32 },

    #[error("rows appended out of order: expected node {expected}, got {got}")]
    OutOfOrder { expected: u32, got: u32 },

    #[error("graph builder finished after {got} of {expected} rows")]
    IncompleteGraph { expected: usize, got: usize },

    #[error("corrupt neighbour stream for node {node}: {msg}")]
    CorruptStream { node: u32, msg: String },

    #[error("bad magic {0:?}: not a VGACSR file")]
    BadMagic([u8; 8]),

    #[error("unsupported VGACSR version {found:?} (expected \"VGACSR03\")")]
    VersionMismatch { found: String },

    #[error("file truncated: needed {needed} bytes at offset {offset}, file has {len}")]
    Truncated {
        offset: usize,
        needed: usize,
        len: usize,
    },

    #[error("checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    ChecksumMismatch { stored: u32, computed: u32 },

    #[error("inconsistent graph file: {0}")]
    Inconsistent(String),

    #[error("grid {rows}x{cols} exceeds the supported Hilbert order")]
    HilbertTooLarge { rows: u32, cols: u32 },

    #[error("node sets do not match: {0}")]
    NodeSetMismatch(String),

    #[error("CSV error: {0}")]
    Csv(String),
}

impl VgaError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        VgaError::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by user input (bad files, bad flags) rather
    /// than by the runtime environment.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            VgaError::GeoJson { .. }
                | VgaError::DegenerateBoundary { .. }
                | VgaError::ZeroActiveCells
                | VgaError::InvalidParameter(_)
                | VgaError::PrecisionOutOfRange(_)
                | VgaError::BadMagic(_)
                | VgaError::VersionMismatch { .. }
                | VgaError::Truncated { .. }
                | VgaError::ChecksumMismatch { .. }
                | VgaError::Inconsistent(_)
                | VgaError::NodeSetMismatch(_)
        )
    }
}
