//! The `MTS1` sample format.
//!
//! ```text
//! offset  size      content
//! 0       4         magic "MTS1"
//! 4       4         u32 LE format version (1)
//! 8       16        u32 LE nx, ny, nz, nf
//! 24      4·nxnynz  f32 LE model, log10 Ωm, x fastest, then y, then z
//! ...     4·nxnynf  f32 LE rho_xy (Ωm), x fastest, then y, then frequency
//! ...               rho_yx, phi_xy (deg), phi_yx in the same layout
//! ```
//!
//! Frequencies, spacing and provenance live in a JSON sidecar ([`SampleMeta`]).

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::femsolver::{Channel, ResponseVolume};
use crate::geomodel::{Provenance, ResistivityModel};

pub const MAGIC: [u8; 4] = *b"MTS1";
pub const FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Units {
    pub model: String,
    pub rho: String,
    pub phi: String,
    pub freq: String,
    pub spacing: String,
}

impl Default for Units {
    fn default() -> Self {
        Self {
            model: "log10_ohm_m".into(),
            rho: "ohm_m".into(),
            phi: "deg".into(),
            freq: "Hz".into(),
            spacing: "m".into(),
        }
    }
}

/// Sidecar metadata, stored as `<id>.json` next to `<id>.mts`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub id: String,
    pub format_version: u32,
    /// `[nx, ny, nz, nf]`.
    pub dims: [usize; 4],
    pub spacing_m: [f64; 3],
    pub freqs: Vec<f64>,
    pub seed: Option<u64>,
    pub alpha: Option<f64>,
    pub rho_bounds: Option<[f64; 2]>,
    pub noise_level: f64,
    #[serde(default)]
    pub noise_seed: Option<u64>,
    #[serde(default)]
    pub units: Units,
}

/// A resistivity model with its response: the unit of a dataset.
///
/// Values are held at `f32` precision so that a record survives a trip
/// through the file format unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub model: ResistivityModel,
    pub response: ResponseVolume,
    pub meta: SampleMeta,
}

fn quantize(v: &mut [f64]) -> Result<()> {
    for x in v.iter_mut() {
        let q = *x as f32;
        if !q.is_finite() {
            return Err(invalid(format!("value {x} is not representable as f32")));
        }
        *x = q as f64;
    }
    Ok(())
}

impl SampleRecord {
    pub fn new(
        id: impl Into<String>,
        mut model: ResistivityModel,
        mut response: ResponseVolume,
    ) -> Result<Self> {
        let [nx, ny, nz] = model.dims;
        let [rx, ry, nf] = response.dims;
        if [rx, ry] != [nx, ny] {
            return Err(invalid(format!(
                "response stations {rx}x{ry} do not match model surface {nx}x{ny}"
            )));
        }
        if response.frequencies.len() != nf {
            return Err(invalid("response frequency count does not match its dims"));
        }
        quantize(&mut model.log10_rho)?;
        for c in Channel::ALL {
            quantize(response.channel_mut(c))?;
        }
        let prov = model.provenance;
        let meta = SampleMeta {
            id: id.into(),
            format_version: FORMAT_VERSION,
            dims: [nx, ny, nz, nf],
            spacing_m: model.spacing,
            freqs: response.frequencies.clone(),
            seed: prov.map(|p| p.seed),
            alpha: prov.map(|p| p.alpha),
            rho_bounds: prov.map(|p| p.rho_bounds),
            noise_level: 0.0,
            noise_seed: None,
            units: Units::default(),
        };
        Ok(Self {
            model,
            response,
            meta,
        })
    }

    pub fn id(&self) -> &str {
        &self.meta.id
    }
}

/// Parsed fixed header.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleHeader {
    pub version: u32,
    pub dims: [usize; 4],
}

impl SampleHeader {
    pub fn parse(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 || bytes[..4] != MAGIC {
            return Err(Error::Format {
                offset: 0,
                message: "bad magic, expected \"MTS1\"".into(),
            });
        }
        if bytes.len() < HEADER_LEN {
            return Err(Error::Format {
                offset: bytes.len(),
                message: format!("truncated header: {} of {HEADER_LEN} bytes", bytes.len()),
            });
        }
        let word =
            |o: usize| u32::from_le_bytes([bytes[o], bytes[o + 1], bytes[o + 2], bytes[o + 3]]);
        let version = word(4);
        if version != FORMAT_VERSION {
            return Err(Error::Format {
                offset: 4,
                message: format!("unsupported version {version}"),
            });
        }
        let mut dims = [0usize; 4];
        for (n, d) in dims.iter_mut().enumerate() {
            *d = word(8 + 4 * n) as usize;
            if *d == 0 {
                return Err(Error::Format {
                    offset: 8 + 4 * n,
                    message: "zero dimension".into(),
                });
            }
        }
        Ok(Self { version, dims })
    }

    /// Total file length implied by the dimensions.
    pub fn file_len(&self) -> Option<usize> {
        let [nx, ny, nz, nf] = self.dims;
        let plane = nx.checked_mul(ny)?;
        let model = plane.checked_mul(nz)?;
        let resp = plane.checked_mul(nf)?.checked_mul(4)?;
        model
            .checked_add(resp)?
            .checked_mul(4)?
            .checked_add(HEADER_LEN)
    }
}

pub fn encode_sample(record: &SampleRecord) -> Vec<u8> {
    let [nx, ny, nz] = record.model.dims;
    let nf = record.response.dims[2];
    let n = HEADER_LEN + 4 * (nx * ny * nz + 4 * nx * ny * nf);
    let mut out = Vec::with_capacity(n);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    for d in [nx, ny, nz, nf] {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    let mut put = |v: &[f64]| {
        for x in v {
            out.extend_from_slice(&(*x as f32).to_le_bytes());
        }
    };
    put(&record.model.log10_rho);
    for c in Channel::ALL {
        put(record.response.channel(c));
    }
    out
}

/// Decodes a sample file, taking frequencies, spacing and provenance from
/// its sidecar `meta`.
pub fn decode_sample(bytes: &[u8], meta: SampleMeta) -> Result<SampleRecord> {
    let header = SampleHeader::parse(bytes)?;
    let expected = header.file_len().ok_or_else(|| Error::Format {
        offset: 8,
        message: "dimensions overflow".into(),
    })?;
    if bytes.len() < expected {
        return Err(Error::Format {
            offset: bytes.len(),
            message: format!("payload truncated: header implies {expected} bytes"),
        });
    }
    if bytes.len() > expected {
        return Err(Error::Format {
            offset: expected,
            message: format!("{} trailing bytes after payload", bytes.len() - expected),
        });
    }
    if header.dims != meta.dims {
        return Err(Error::Format {
            offset: 8,
            message: format!(
                "header dims {:?} disagree with sidecar {:?}",
                header.dims, meta.dims
            ),
        });
    }
    if meta.freqs.len() != header.dims[3] {
        return Err(Error::Format {
            offset: 20,
            message: format!(
                "nf = {} but sidecar lists {} frequencies",
                header.dims[3],
                meta.freqs.len()
            ),
        });
    }
    let [nx, ny, nz, nf] = header.dims;
    let mut cursor = HEADER_LEN;
    let mut take = |count: usize| -> Result<Vec<f64>> {
        let start = cursor;
        let v: Vec<f64> = bytes[start..start + 4 * count]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        if let Some(p) = v.iter().position(|x| !x.is_finite()) {
            return Err(Error::Format {
                offset: start + 4 * p,
                message: "non-finite value".into(),
            });
        }
        cursor += 4 * count;
        Ok(v)
    };
    let log10_rho = take(nx * ny * nz)?;
    let mut response = ResponseVolume::zeros([nx, ny, nf], meta.freqs.clone());
    for c in Channel::ALL {
        *response.channel_mut(c) = take(nx * ny * nf)?;
    }
    let provenance = match (meta.seed, meta.alpha, meta.rho_bounds) {
        (Some(seed), Some(alpha), Some(rho_bounds)) => Some(Provenance {
            seed,
            alpha,
            rho_bounds,
        }),
        _ => None,
    };
    let model = ResistivityModel {
        dims: [nx, ny, nz],
        spacing: meta.spacing_m,
        log10_rho,
        provenance,
    };
    Ok(SampleRecord {
        model,
        response,
        meta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn record() -> SampleRecord {
        let mut model = ResistivityModel::uniform([2, 3, 4], [10.0, 20.0, 30.0], 100.0);
        model.log10_rho[5] = 0.123_456_789;
        model.provenance = Some(Provenance {
            seed: 7,
            alpha: 8.0,
            rho_bounds: [1.0, 1e4],
        });
        let mut r = ResponseVolume::zeros([2, 3, 2], vec![0.1, 1.0]);
        for (n, c) in Channel::ALL.into_iter().enumerate() {
            for (i, v) in r.channel_mut(c).iter_mut().enumerate() {
                *v = 1.0 + (n * 100 + i) as f64 / 7.0;
            }
        }
        SampleRecord::new("a8_00000", model, r).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let rec = record();
        let bytes = encode_sample(&rec);
        assert_eq!(&bytes[..4], b"MTS1");
        assert_eq!(bytes.len(), 24 + 4 * (24 + 4 * 12));
        let back = decode_sample(&bytes, rec.meta.clone()).unwrap();
        assert_eq!(back, rec);
    }

    #[test]
    fn header_layout() {
        let bytes = encode_sample(&record());
        let h = SampleHeader::parse(&bytes).unwrap();
        assert_eq!(h.dims, [2, 3, 4, 2]);
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        // First model value sits right after the header.
        assert_eq!(f32::from_le_bytes(bytes[24..28].try_into().unwrap()), 2.0);
    }

    fn offset_of(e: Error) -> usize {
        match e {
            Error::Format { offset, .. } => offset,
            other => panic!("expected a format error, got {other:?}"),
        }
    }

    #[test]
    fn corrupt_files_name_the_offset() {
        let rec = record();
        let bytes = encode_sample(&rec);
        let meta = rec.meta.clone();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert_eq!(offset_of(decode_sample(&bad, meta.clone()).unwrap_err()), 0);
        let mut bad = bytes.clone();
        bad[4] = 2;
        assert_eq!(offset_of(decode_sample(&bad, meta.clone()).unwrap_err()), 4);
        assert_eq!(
            offset_of(decode_sample(&bytes[..10], meta.clone()).unwrap_err()),
            10
        );
        assert_eq!(
            offset_of(decode_sample(&bytes[..100], meta.clone()).unwrap_err()),
            100
        );
        let mut long = bytes.clone();
        long.push(0);
        assert_eq!(
            offset_of(decode_sample(&long, meta.clone()).unwrap_err()),
            bytes.len()
        );
        let mut bad = bytes.clone();
        bad[12] = 4; // ny 3 -> 4: payload no longer matches
        assert!(matches!(
            decode_sample(&bad, meta.clone()),
            Err(Error::Format { .. })
        ));
        let mut bad = bytes.clone();
        bad[20] = 0;
        assert_eq!(
            offset_of(decode_sample(&bad, meta.clone()).unwrap_err()),
            20
        );
        let mut other = meta.clone();
        other.freqs.pop();
        other.dims[3] = 1;
        assert_eq!(offset_of(decode_sample(&bytes, other).unwrap_err()), 8);
        let mut other = meta;
        other.freqs.push(10.0);
        assert_eq!(offset_of(decode_sample(&bytes, other).unwrap_err()), 20);
    }

    #[test]
    fn mismatched_record_is_rejected() {
        let model = ResistivityModel::uniform([2, 2, 2], [1.0; 3], 10.0);
        let r = ResponseVolume::zeros([3, 2, 1], vec![1.0]);
        assert!(SampleRecord::new("x", model, r).is_err());
    }
}
