//! Delta-compressed CSR adjacency.
//!
//! Each node's sorted neighbour list is stored as its first id (absolute)
//! followed by successive differences, all as unsigned LEB128 varints, in
//! one contiguous byte stream. A `u64` offset array (length `N + 1`) and a
//! `u32` degree array locate each row. Because nodes are raster-ordered,
//! same-row neighbours differ by 1 or 2 and most entries take a single byte.
//!
//! The stream lives on the heap for small graphs. During construction it
//! spills to an anonymous temporary file past a configurable size and is
//! memory-mapped on finish; graphs loaded with `mmap = true` likewise keep
//! the stream file-backed.

pub mod format;
pub mod hilbert;
pub mod leb128;

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::sync::Arc;

use memmap2::Mmap;
use rayon::prelude::*;

use crate::components::{Components, UnionFind};
use crate::error::{Result, VgaError};
use crate::geometry::GridSpec;

pub use format::{load_vgacsr, save_vgacsr};
pub use hilbert::hilbert_reorder;

/// Default stream size above which construction spills to a temp file.
pub const DEFAULT_SPILL_THRESHOLD: u64 = 4 << 30;
/// Default number of rows produced per construction batch.
pub const DEFAULT_BATCH_SIZE: usize = 10_000;

/// The compressed neighbour byte stream, heap- or file-backed.
#[derive(Clone)]
pub enum ByteStream {
    Heap(Vec<u8>),
    Mapped {
        map: Arc<Mmap>,
        start: usize,
        len: usize,
    },
}

impl ByteStream {
    #[inline]
    pub fn as_slice(&self) -> &[u8] {
        match self {
            ByteStream::Heap(v) => v,
            ByteStream::Mapped { map, start, len } => &map[*start..*start + *len],
        }
    }

    pub fn len(&self) -> usize {
        self.as_slice().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_mapped(&self) -> bool {
        matches!(self, ByteStream::Mapped { .. })
    }
}

impl fmt::Debug for ByteStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = if self.is_mapped() { "mapped" } else { "heap" };
        write!(f, "ByteStream({kind}, {} bytes)", self.len())
    }
}

/// Grid metadata carried with a graph: the lattice and each node's cell.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphGrid {
    pub spec: GridSpec,
    pub cell_of_node: Vec<u32>,
}

impl GraphGrid {
    /// Trivial `1 x n` lattice for graphs built without geometry.
    pub fn line(n: usize) -> Self {
        Self {
            spec: GridSpec::line(n),
            cell_of_node: (0..n as u32).collect(),
        }
    }
}

/// Immutable delta-compressed adjacency with component metadata.
#[derive(Debug, Clone)]
pub struct CompressedCsr {
    edge_count: u64,
    offsets: Vec<u64>,
    degrees: Vec<u32>,
    stream: ByteStream,
    components: Components,
    hilbert_inverse: Option<Vec<u32>>,
    grid: GraphGrid,
}

impl PartialEq for CompressedCsr {
    fn eq(&self, other: &Self) -> bool {
        self.edge_count == other.edge_count
            && self.offsets == other.offsets
            && self.degrees == other.degrees
            && self.stream.as_slice() == other.stream.as_slice()
            && self.components == other.components
            && self.hilbert_inverse == other.hilbert_inverse
            && self.grid == other.grid
    }
}

impl CompressedCsr {
    pub fn node_count(&self) -> usize {
        self.degrees.len()
    }

    /// Directed edge count (sum of degrees).
    pub fn edge_count(&self) -> u64 {
        self.edge_count
    }

    pub fn offsets(&self) -> &[u64] {
        &self.offsets
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    #[inline]
    pub fn degree(&self, v: u32) -> u32 {
        self.degrees[v as usize]
    }

    pub fn stream(&self) -> &ByteStream {
        &self.stream
    }

    pub fn stream_len(&self) -> u64 {
        self.stream.len() as u64
    }

    pub fn components(&self) -> &Components {
        &self.components
    }

    pub fn component_id(&self, v: u32) -> u32 {
        self.components.component_id[v as usize]
    }

    /// Exact size of `v`'s connected component.
    pub fn component_size(&self, v: u32) -> u32 {
        self.components.size_of(v)
    }

    pub fn hilbert_inverse(&self) -> Option<&[u32]> {
        self.hilbert_inverse.as_deref()
    }

    /// Id of `v` before any reordering.
    #[inline]
    pub fn original_id(&self, v: u32) -> u32 {
        match &self.hilbert_inverse {
            Some(inv) => inv[v as usize],
            None => v,
        }
    }

    pub fn grid(&self) -> &GraphGrid {
        &self.grid
    }

    /// Lazy decoder over `v`'s neighbours.
    #[inline]
    pub fn neighbors(&self, v: u32) -> NeighborCursor<'_> {
        let lo = self.offsets[v as usize] as usize;
        NeighborCursor {
            bytes: self.stream.as_slice(),
            pos: lo,
            prev: 0,
            remaining: self.degrees[v as usize],
            first: true,
        }
    }

    /// Bytes a flat CSR with 4-byte neighbour ids would need.
    pub fn flat_size(&self) -> u64 {
        self.edge_count * 4
    }

    /// Decodes the whole graph into plain adjacency lists.
    pub fn to_adjacency(&self) -> Vec<Vec<u32>> {
        (0..self.node_count() as u32)
            .map(|v| self.neighbors(v).collect())
            .collect()
    }

    /// Full structural check: every row decodes to exactly `degree` strictly
    /// increasing in-range ids within its byte range, and component labels
    /// agree with the edges.
    pub fn validate(&self) -> Result<()> {
        let n = self.node_count();
        if self.offsets.len() != n + 1 {
            return Err(VgaError::Inconsistent("offset array length".into()));
        }
        if self.offsets[n] != self.stream.len() as u64 || self.offsets[0] != 0 {
            return Err(VgaError::Inconsistent(
                "offsets do not span the stream".into(),
            ));
        }
        if self.offsets.windows(2).any(|w| w[0] > w[1]) {
            return Err(VgaError::Inconsistent("offsets decrease".into()));
        }
        let deg_sum: u64 = self.degrees.iter().map(|&d| d as u64).sum();
        if deg_sum != self.edge_count {
            return Err(VgaError::Inconsistent(format!(
                "degree sum {deg_sum} != edge count {}",
                self.edge_count
            )));
        }
        let comps = &self.components;
        if comps.component_id.len() != n
            || comps.sizes.iter().map(|&s| s as u64).sum::<u64>() != n as u64
            || comps
                .component_id
                .iter()
                .any(|&c| c as usize >= comps.sizes.len())
        {
            return Err(VgaError::Inconsistent("component metadata".into()));
        }
        if self.grid.cell_of_node.len() != n
            || self
                .grid
                .cell_of_node
                .iter()
                .any(|&c| c as usize >= self.grid.spec.cell_count())
        {
            return Err(VgaError::Inconsistent("grid metadata".into()));
        }
        if let Some(inv) = &self.hilbert_inverse {
            let mut seen = vec![false; n];
            for &o in inv {
                if o as usize >= n || std::mem::replace(&mut seen[o as usize], true) {
                    return Err(VgaError::Inconsistent(
                        "hilbert_inverse is not a permutation".into(),
                    ));
                }
            }
        }
        let stream = self.stream.as_slice();
        (0..n as u32).into_par_iter().try_for_each(|v| {
            let end = self.offsets[v as usize + 1] as usize;
            let mut cur = self.neighbors(v);
            cur.bytes = &stream[..end];
            let mut last: Option<u32> = None;
            while let Some(w) = cur.try_next_checked(v, n)? {
                if last.is_some_and(|l| w <= l) {
                    return Err(VgaError::UnsortedNeighbors { node: v });
                }
                if comps.component_id[w as usize] != comps.component_id[v as usize] {
                    return Err(VgaError::Inconsistent(format!(
                        "edge {v} -> {w} crosses components"
                    )));
                }
                last = Some(w);
            }
            if cur.pos != end {
                return Err(VgaError::CorruptStream {
                    node: v,
                    msg: format!("row ends at byte {} but range ends at {end}", cur.pos),
                });
            }
            Ok(())
        })
    }

    /// Builds a graph from explicit sorted adjacency lists.
    pub fn from_adjacency(adj: &[Vec<u32>]) -> Result<Self> {
        let mut b = CsrBuilder::new(adj.len());
        for (v, row) in adj.iter().enumerate() {
            b.push_row(v as u32, row)?;
        }
        b.finish()
    }
}

/// Streaming decoder over one neighbour row.
#[derive(Debug, Clone)]
pub struct NeighborCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    prev: u64,
    remaining: u32,
    first: bool,
}

/// Name used by callers that only iterate.
pub type NeighborIter<'a> = NeighborCursor<'a>;

impl NeighborCursor<'_> {
    /// Byte position of the next varint in the stream.
    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> u32 {
        self.remaining
    }

    /// Checked decode: errors on truncated or malformed varints and on ids
    /// outside `0..n`.
    pub fn try_next_checked(&mut self, node: u32, n: usize) -> Result<Option<u32>> {
        if self.remaining == 0 {
            return Ok(None);
        }
        let delta =
            leb128::decode(self.bytes, &mut self.pos).map_err(|e| VgaError::CorruptStream {
                node,
                msg: e.to_string(),
            })?;
        let id = if self.first {
            delta
        } else {
            if delta == 0 {
                return Err(VgaError::UnsortedNeighbors { node });
            }
            self.prev
                .checked_add(delta)
                .ok_or(VgaError::CorruptStream {
                    node,
                    msg: "delta overflow".into(),
                })?
        };
        if id >= n as u64 {
            return Err(VgaError::NeighborOutOfRange {
                node,
                neighbor: id,
                n,
            });
        }
        self.first = false;
        self.prev = id;
        self.remaining -= 1;
        Ok(Some(id as u32))
    }
}

impl Iterator for NeighborCursor<'_> {
    type Item = u32;

    #[inline]
    fn next(&mut self) -> Option<u32> {
        if self.remaining == 0 {
            return None;
        }
        // single-byte fast path; validated graphs never hit the error arm
        let b = *self.bytes.get(self.pos)?;
        let delta = if b < 0x80 {
            self.pos += 1;
            b as u64
        } else {
            match leb128::decode(self.bytes, &mut self.pos) {
                Ok(d) => d,
                Err(_) => {
                    self.remaining = 0;
                    return None;
                }
            }
        };
        self.prev = if self.first { delta } else { self.prev + delta };
        self.first = false;
        self.remaining -= 1;
        Some(self.prev as u32)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining as usize, Some(self.remaining as usize))
    }
}

impl ExactSizeIterator for NeighborCursor<'_> {}

/// Encodes a strictly increasing id list: first id absolute, then deltas.
pub fn encode_neighbor_row(sorted_ids: &[u32]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    encode_neighbor_row_into(u32::MAX, sorted_ids, &mut out)?;
    Ok(out)
}

fn encode_neighbor_row_into(node: u32, sorted_ids: &[u32], out: &mut Vec<u8>) -> Result<()> {
    let mut prev: Option<u32> = None;
    for &id in sorted_ids {
        match prev {
            None => leb128::encode_into(id as u64, out),
            Some(p) if id > p => leb128::encode_into((id - p) as u64, out),
            Some(_) => return Err(VgaError::UnsortedNeighbors { node }),
        }
        prev = Some(id);
    }
    Ok(())
}

enum StreamSink {
    Memory(Vec<u8>),
    Spilled { writer: BufWriter<File>, len: u64 },
}

impl StreamSink {
    fn len(&self) -> u64 {
        match self {
            StreamSink::Memory(v) => v.len() as u64,
            StreamSink::Spilled { len, .. } => *len,
        }
    }

    fn append(&mut self, bytes: &[u8], threshold: u64) -> Result<()> {
        if let StreamSink::Memory(v) = self {
            if v.len() as u64 + bytes.len() as u64 <= threshold {
                v.extend_from_slice(bytes);
                return Ok(());
            }
            let file = tempfile::tempfile()?;
            let mut writer = BufWriter::with_capacity(1 << 20, file);
            writer.write_all(v)?;
            let len = v.len() as u64;
            *self = StreamSink::Spilled { writer, len };
        }
        if let StreamSink::Spilled { writer, len } = self {
            writer.write_all(bytes)?;
            *len += bytes.len() as u64;
        }
        Ok(())
    }

    fn finish(self) -> Result<ByteStream> {
        match self {
            StreamSink::Memory(v) => Ok(ByteStream::Heap(v)),
            StreamSink::Spilled { writer, len } => {
                let file = writer.into_inner().map_err(|e| e.into_error())?;
                if len == 0 {
                    return Ok(ByteStream::Heap(Vec::new()));
                }
                // SAFETY: the file is an unlinked temporary owned by this
                // process; nothing else can modify it while mapped.
                let map = unsafe { Mmap::map(&file)? };
                Ok(ByteStream::Mapped {
                    map: Arc::new(map),
                    start: 0,
                    len: len as usize,
                })
            }
        }
    }
}

/// Ordered appender for compressed rows. Rows must arrive for nodes
/// `0, 1, 2, ...` in turn; unions for component tracking happen here.
pub struct CsrBuilder {
    n: usize,
    grid: GraphGrid,
    offsets: Vec<u64>,
    degrees: Vec<u32>,
    sink: StreamSink,
    spill_threshold: u64,
    uf: UnionFind,
    edge_count: u64,
    scratch: Vec<u8>,
}

impl CsrBuilder {
    pub fn new(n: usize) -> Self {
        Self::with_grid(GraphGrid::line(n))
    }

    pub fn with_grid(grid: GraphGrid) -> Self {
        let n = grid.cell_of_node.len();
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        Self {
            n,
            grid,
            offsets,
            degrees: Vec::with_capacity(n),
            sink: StreamSink::Memory(Vec::new()),
            spill_threshold: DEFAULT_SPILL_THRESHOLD,
            uf: UnionFind::new(n),
            edge_count: 0,
            scratch: Vec::new(),
        }
    }

    /// Stream size (bytes) above which rows spill to a temporary file.
    pub fn spill_threshold(mut self, bytes: u64) -> Self {
        self.spill_threshold = bytes;
        self
    }

    pub fn next_node(&self) -> u32 {
        self.degrees.len() as u32
    }

    pub fn push_row(&mut self, v: u32, neighbors: &[u32]) -> Result<()> {
        let mut bytes = std::mem::take(&mut self.scratch);
        bytes.clear();
        let res = encode_neighbor_row_into(v, neighbors, &mut bytes)
            .and_then(|()| self.push_encoded(v, neighbors, &bytes));
        self.scratch = bytes;
        res
    }

    fn push_encoded(&mut self, v: u32, neighbors: &[u32], bytes: &[u8]) -> Result<()> {
        let expected = self.next_node();
        if v != expected {
            return Err(VgaError::OutOfOrder { expected, got: v });
        }
        if v as usize >= self.n {
            return Err(VgaError::NeighborOutOfRange {
                node: v,
                neighbor: v as u64,
                n: self.n,
            });
        }
        if let Some(&last) = neighbors.last() {
            if last as usize >= self.n {
                return Err(VgaError::NeighborOutOfRange {
                    node: v,
                    neighbor: last as u64,
                    n: self.n,
                });
            }
        }
        if neighbors.binary_search(&v).is_ok() {
            return Err(VgaError::SelfLoop { node: v });
        }
        self.sink.append(bytes, self.spill_threshold)?;
        for &w in neighbors {
            self.uf.union(v, w);
        }
        self.degrees.push(neighbors.len() as u32);
        self.offsets.push(self.sink.len());
        self.edge_count += neighbors.len() as u64;
        Ok(())
    }

    pub fn finish(self) -> Result<CompressedCsr> {
        if self.degrees.len() != self.n {
            return Err(VgaError::IncompleteGraph {
                expected: self.n,
                got: self.degrees.len(),
            });
        }
        Ok(CompressedCsr {
            edge_count: self.edge_count,
            offsets: self.offsets,
            degrees: self.degrees,
            stream: self.sink.finish()?,
            components: self.uf.finalize(),
            hilbert_inverse: None,
            grid: self.grid,
        })
    }
}

/// Options for [`build_from_source`].
#[derive(Debug, Clone, Copy)]
pub struct BuildOptions {
    pub batch_size: usize,
    pub spill_threshold: u64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            batch_size: DEFAULT_BATCH_SIZE,
            spill_threshold: DEFAULT_SPILL_THRESHOLD,
        }
    }
}

/// Builds a graph by calling `producer(v)` for every node, batches of rows
/// in parallel, appending each batch in node order.
pub fn build_from_source<F>(
    grid: GraphGrid,
    opts: BuildOptions,
    producer: F,
) -> Result<CompressedCsr>
where
    F: Fn(u32) -> Vec<u32> + Sync,
{
    let n = grid.cell_of_node.len();
    let mut builder = CsrBuilder::with_grid(grid).spill_threshold(opts.spill_threshold);
    let batch = opts.batch_size.max(1);
    let mut start = 0usize;
    while start < n {
        let end = (start + batch).min(n);
        let rows: Vec<Result<(Vec<u32>, Vec<u8>)>> = (start..end)
            .into_par_iter()
            .map(|v| {
                let ids = producer(v as u32);
                let mut bytes = Vec::with_capacity(ids.len() + ids.len() / 8);
                encode_neighbor_row_into(v as u32, &ids, &mut bytes)?;
                Ok((ids, bytes))
            })
            .collect();
        for (i, row) in rows.into_iter().enumerate() {
            let (ids, bytes) = row?;
            builder.push_encoded((start + i) as u32, &ids, &bytes)?;
        }
        start = end;
    }
    builder.finish()
}
