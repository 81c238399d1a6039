//! VGACSR03 persistence.
//!
//! Little-endian throughout:
//!
//! ```text
//! magic      "VGACSR03"                 8 bytes
//! flags      u32                        bit 0: hilbert_inverse present
//! N          u64
//! |E|        u64                        directed edges (sum of degrees)
//! stream_len u64
//! origin     f64 x 2
//! spacing    f64
//! rows, cols u32 x 2
//! cell index u32 x N
//! offsets    u64 x (N + 1)
//! degrees    u32 x N
//! stream     stream_len bytes
//! C          u32                        component count
//! comp id    u32 x N
//! comp size  u32 x C
//! hilbert    u32 x N                    only if flags bit 0
//! crc32      u32                        over every preceding byte
//! ```

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use memmap2::Mmap;

use super::{ByteStream, CompressedCsr, GraphGrid};
use crate::components::Components;
use crate::error::{Result, VgaError};
use crate::geometry::{GridSpec, WorldPoint};

pub const MAGIC: &[u8; 8] = b"VGACSR03";
const MAGIC_FAMILY: &[u8; 6] = b"VGACSR";
pub const FLAG_HILBERT: u32 = 1;
const HEADER_LEN: usize = 8 + 4 + 8 + 8 + 8;

struct CrcWriter<W: Write> {
    inner: W,
    hasher: crc32fast::Hasher,
}

impl<W: Write> CrcWriter<W> {
    fn put(&mut self, bytes: &[u8]) -> std::io::Result<()> {
        self.hasher.update(bytes);
        self.inner.write_all(bytes)
    }

    fn put_u32s(&mut self, xs: &[u32]) -> std::io::Result<()> {
        for chunk in xs.chunks(8192) {
            let buf: Vec<u8> = chunk.iter().flat_map(|x| x.to_le_bytes()).collect();
            self.put(&buf)?;
        }
        Ok(())
    }

    fn put_u64s(&mut self, xs: &[u64]) -> std::io::Result<()> {
        for chunk in xs.chunks(8192) {
            let buf: Vec<u8> = chunk.iter().flat_map(|x| x.to_le_bytes()).collect();
            self.put(&buf)?;
        }
        Ok(())
    }
}

pub fn save_vgacsr(csr: &CompressedCsr, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| VgaError::io(path, e))?;
    write_vgacsr(csr, BufWriter::with_capacity(1 << 20, file)).map_err(|e| VgaError::io(path, e))
}

pub fn write_vgacsr<W: Write>(csr: &CompressedCsr, out: W) -> std::io::Result<()> {
    let mut w = CrcWriter {
        inner: out,
        hasher: crc32fast::Hasher::new(),
    };
    let n = csr.node_count() as u64;
    let flags = if csr.hilbert_inverse.is_some() {
        FLAG_HILBERT
    } else {
        0
    };
    w.put(MAGIC)?;
    w.put(&flags.to_le_bytes())?;
    w.put(&n.to_le_bytes())?;
    w.put(&csr.edge_count.to_le_bytes())?;
    w.put(&(csr.stream.len() as u64).to_le_bytes())?;

    let g = &csr.grid.spec;
    w.put(&g.origin.x.to_le_bytes())?;
    w.put(&g.origin.y.to_le_bytes())?;
    w.put(&g.spacing.to_le_bytes())?;
    w.put(&g.rows.to_le_bytes())?;
    w.put(&g.cols.to_le_bytes())?;
    w.put_u32s(&csr.grid.cell_of_node)?;

    w.put_u64s(&csr.offsets)?;
    w.put_u32s(&csr.degrees)?;
    w.put(csr.stream.as_slice())?;

    w.put(&(csr.components.sizes.len() as u32).to_le_bytes())?;
    w.put_u32s(&csr.components.component_id)?;
    w.put_u32s(&csr.components.sizes)?;
    if let Some(inv) = &csr.hilbert_inverse {
        w.put_u32s(inv)?;
    }
    let crc = w.hasher.clone().finalize();
    w.inner.write_all(&crc.to_le_bytes())?;
    w.inner.flush()
}

/// Serializes to an in-memory buffer.
pub fn to_bytes(csr: &CompressedCsr) -> Vec<u8> {
    let mut buf = Vec::new();
    write_vgacsr(csr, &mut buf).expect("writing to a Vec cannot fail");
    buf
}

/// Loads a VGACSR03 file. With `mmap = true` the neighbour stream stays
/// file-backed; only offsets, degrees and metadata are copied to the heap.
pub fn load_vgacsr(path: &Path, mmap: bool) -> Result<CompressedCsr> {
    let file = File::open(path).map_err(|e| VgaError::io(path, e))?;
    if mmap {
        // SAFETY: graph files are treated as immutable while loaded; the CRC
        // check below rejects files modified before mapping.
        let map = unsafe { Mmap::map(&file) }.map_err(|e| VgaError::io(path, e))?;
        let map = Arc::new(map);
        let parsed = parse(&map)?;
        let stream = ByteStream::Mapped {
            map: Arc::clone(&map),
            start: parsed.stream_start,
            len: parsed.stream_len,
        };
        finish(parsed, stream)
    } else {
        let bytes = std::fs::read(path).map_err(|e| VgaError::io(path, e))?;
        from_bytes(&bytes)
    }
}

pub fn from_bytes(bytes: &[u8]) -> Result<CompressedCsr> {
    let parsed = parse(bytes)?;
    let stream = ByteStream::Heap(
        bytes[parsed.stream_start..parsed.stream_start + parsed.stream_len].to_vec(),
    );
    finish(parsed, stream)
}

struct Parsed {
    edge_count: u64,
    grid: GraphGrid,
    offsets: Vec<u64>,
    degrees: Vec<u32>,
    stream_start: usize,
    stream_len: usize,
    components: Components,
    hilbert_inverse: Option<Vec<u32>>,
}

fn finish(p: Parsed, stream: ByteStream) -> Result<CompressedCsr> {
    let csr = CompressedCsr {
        edge_count: p.edge_count,
        offsets: p.offsets,
        degrees: p.degrees,
        stream,
        components: p.components,
        hilbert_inverse: p.hilbert_inverse,
        grid: p.grid,
    };
    csr.validate()?;
    Ok(csr)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(len).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(VgaError::Truncated {
                offset: self.pos,
                needed: len,
                len: self.bytes.len(),
            }),
        }
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn u32s(&mut self, count: usize) -> Result<Vec<u32>> {
        let raw = self.take(count.checked_mul(4).ok_or_else(too_big)?)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn u64s(&mut self, count: usize) -> Result<Vec<u64>> {
        let raw = self.take(count.checked_mul(8).ok_or_else(too_big)?)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

fn too_big() -> VgaError {
    VgaError::Inconsistent("array length overflows".into())
}

fn check_magic(bytes: &[u8]) -> Result<()> {
    if bytes.len() < 8 {
        return Err(VgaError::Truncated {
            offset: 0,
            needed: 8,
            len: bytes.len(),
        });
    }
    let magic: [u8; 8] = bytes[..8].try_into().unwrap();
    if &magic == MAGIC {
        Ok(())
    } else if magic.starts_with(MAGIC_FAMILY) {
        Err(VgaError::VersionMismatch {
            found: String::from_utf8_lossy(&magic).into_owned(),
        })
    } else {
        Err(VgaError::BadMagic(magic))
    }
}

/// Total file length implied by the header, if it can be read.
fn implied_len(bytes: &[u8]) -> Option<usize> {
    let mut r = Reader { bytes, pos: 8 };
    let flags = r.u32().ok()?;
    let n = usize::try_from(r.u64().ok()?).ok()?;
    let _ = r.u64().ok()?;
    let stream_len = usize::try_from(r.u64().ok()?).ok()?;
    let before_c = HEADER_LEN
        .checked_add(8 * 3 + 4 * 2)?
        .checked_add(n.checked_mul(4)?)?
        .checked_add(n.checked_add(1)?.checked_mul(8)?)?
        .checked_add(n.checked_mul(4)?)?
        .checked_add(stream_len)?;
    let mut r = Reader {
        bytes,
        pos: before_c,
    };
    let c = r.u32().ok()? as usize;
    let hilbert = if flags & FLAG_HILBERT != 0 { n * 4 } else { 0 };
    before_c
        .checked_add(4)?
        .checked_add(n.checked_mul(4)?)?
        .checked_add(c.checked_mul(4)?)?
        .checked_add(hilbert)?
        .checked_add(4)
}

fn parse(bytes: &[u8]) -> Result<Parsed> {
    check_magic(bytes)?;
    if bytes.len() < HEADER_LEN + 4 {
        return Err(VgaError::Truncated {
            offset: 8,
            needed: HEADER_LEN + 4,
            len: bytes.len(),
        });
    }
    let body = &bytes[..bytes.len() - 4];
    let stored = u32::from_le_bytes(bytes[bytes.len() - 4..].try_into().unwrap());
    let computed = crc32fast::hash(body);
    if stored != computed {
        // distinguish a cut-off file from in-place corruption
        return match implied_len(bytes) {
            Some(want) if want > bytes.len() => Err(VgaError::Truncated {
                offset: bytes.len(),
                needed: want - bytes.len(),
                len: bytes.len(),
            }),
            None => Err(VgaError::Truncated {
                offset: bytes.len(),
                needed: 4,
                len: bytes.len(),
            }),
            _ => Err(VgaError::ChecksumMismatch { stored, computed }),
        };
    }

    let mut r = Reader {
        bytes: body,
        pos: 8,
    };
    let flags = r.u32()?;
    if flags & !FLAG_HILBERT != 0 {
        return Err(VgaError::Inconsistent(format!("unknown flags {flags:#x}")));
    }
    let n = usize::try_from(r.u64()?).map_err(|_| too_big())?;
    let edge_count = r.u64()?;
    let stream_len = usize::try_from(r.u64()?).map_err(|_| too_big())?;

    let ox = r.f64()?;
    let oy = r.f64()?;
    let spacing = r.f64()?;
    let rows = r.u32()?;
    let cols = r.u32()?;
    let spec = GridSpec::new(WorldPoint::new(ox, oy), spacing, rows, cols)
        .map_err(|e| VgaError::Inconsistent(e.to_string()))?;
    let cell_of_node = r.u32s(n)?;
    let offsets = r.u64s(n.checked_add(1).ok_or_else(too_big)?)?;
    let degrees = r.u32s(n)?;
    let stream_start = r.pos;
    r.take(stream_len)?;
    let c = r.u32()? as usize;
    let component_id = r.u32s(n)?;
    let sizes = r.u32s(c)?;
    let hilbert_inverse = if flags & FLAG_HILBERT != 0 {
        Some(r.u32s(n)?)
    } else {
        None
    };
    if r.pos != body.len() {
        return Err(VgaError::Inconsistent(format!(
            "{} trailing bytes before checksum",
            body.len() - r.pos
        )));
    }
    Ok(Parsed {
        edge_count,
        grid: GraphGrid { spec, cell_of_node },
        offsets,
        degrees,
        stream_start,
        stream_len,
        components: Components {
            component_id,
            sizes,
        },
        hilbert_inverse,
    })
}
