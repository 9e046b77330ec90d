//! `.evb` binary event files.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! header (16 bytes): "EVB1" | width u16 | height u16 | count u64
//! record (13 bytes): t u64 (µs) | x u16 | y u16 | p i8 (+1 / -1)
//! ```

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::event::{validate_stream, Event, EventStream, Polarity};

pub const MAGIC: &[u8; 4] = b"EVB1";
pub const HEADER_LEN: usize = 16;
pub const RECORD_LEN: usize = 13;

/// Exact file size for `n` events.
pub fn encoded_len(n: usize) -> usize {
    HEADER_LEN + RECORD_LEN * n
}

pub fn encode_events(stream: &EventStream) -> Result<Vec<u8>> {
    let report = validate_stream(stream);
    if !report.is_ok() {
        let first = report.violations[0];
        return Err(Error::InvalidArgument(format!(
            "refusing to write invalid stream: {:?} at event {}",
            first.kind, first.index
        )));
    }
    let mut out = Vec::with_capacity(encoded_len(stream.len()));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&stream.width.to_le_bytes());
    out.extend_from_slice(&stream.height.to_le_bytes());
    out.extend_from_slice(&(stream.len() as u64).to_le_bytes());
    for e in &stream.events {
        out.extend_from_slice(&e.t.to_le_bytes());
        out.extend_from_slice(&e.x.to_le_bytes());
        out.extend_from_slice(&e.y.to_le_bytes());
        out.push(e.p.sign() as u8);
    }
    Ok(out)
}

/// Writes `stream` and returns the number of bytes written.
pub fn write_events<W: Write>(stream: &EventStream, mut dst: W) -> Result<usize> {
    let bytes = encode_events(stream)?;
    dst.write_all(&bytes)?;
    dst.flush()?;
    Ok(bytes.len())
}

pub fn read_events<R: Read>(mut src: R) -> Result<EventStream> {
    let mut bytes = Vec::new();
    src.read_to_end(&mut bytes)?;
    decode_events(&bytes)
}

fn le_u16(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn le_u64(b: &[u8], at: usize) -> u64 {
    let mut a = [0u8; 8];
    a.copy_from_slice(&b[at..at + 8]);
    u64::from_le_bytes(a)
}

/// Decodes a complete `.evb` image. Errors carry the byte offset of the
/// offending field or record.
pub fn decode_events(bytes: &[u8]) -> Result<EventStream> {
    if bytes.len() < MAGIC.len() || &bytes[..4] != MAGIC {
        return Err(Error::format(0, "bad magic, expected \"EVB1\""));
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::format(
            bytes.len() as u64,
            format!("truncated header ({} of {HEADER_LEN} bytes)", bytes.len()),
        ));
    }
    let width = le_u16(bytes, 4);
    let height = le_u16(bytes, 6);
    let count = le_u64(bytes, 8);
    let body = (bytes.len() - HEADER_LEN) as u64;
    let available = body / RECORD_LEN as u64;
    if available < count {
        let at = HEADER_LEN as u64 + available * RECORD_LEN as u64;
        return Err(Error::format(
            at,
            format!("truncated record {available}: header declares {count} events"),
        ));
    }
    let expected_len = HEADER_LEN as u64 + count * RECORD_LEN as u64;
    if (bytes.len() as u64) != expected_len {
        return Err(Error::format(
            expected_len,
            "trailing bytes after the declared records",
        ));
    }

    let mut events = Vec::with_capacity(count as usize);
    let mut prev_t = 0u64;
    for (k, rec) in bytes[HEADER_LEN..].chunks_exact(RECORD_LEN).enumerate() {
        let at = (HEADER_LEN + k * RECORD_LEN) as u64;
        let t = le_u64(rec, 0);
        let x = le_u16(rec, 8);
        let y = le_u16(rec, 10);
        let p = Polarity::from_i8(rec[12] as i8)
            .ok_or_else(|| Error::format(at + 12, format!("polarity byte {:#04x} is not +1/-1", rec[12])))?;
        if x >= width || y >= height {
            return Err(Error::format(
                at + 8,
                format!("pixel ({x}, {y}) outside {width}x{height} sensor"),
            ));
        }
        if k > 0 && t < prev_t {
            return Err(Error::format(at, format!("timestamp {t} precedes {prev_t}")));
        }
        prev_t = t;
        events.push(Event { t, x, y, p });
    }
    Ok(EventStream::new(width, height, events))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn three() -> EventStream {
        EventStream::new(
            640,
            480,
            vec![
                Event::new(10, 0, 0, Polarity::Positive),
                Event::new(250, 639, 479, Polarity::Negative),
                Event::new(250, 320, 17, Polarity::Positive),
            ],
        )
    }

    #[test]
    fn empty_stream_is_header_only() {
        let mut buf = Vec::new();
        let n = write_events(&EventStream::empty(640, 480), &mut buf).unwrap();
        assert_eq!(n, 16);
        assert_eq!(buf.len(), 16);
        assert_eq!(&buf[..4], b"EVB1");
    }

    #[test]
    fn one_event_is_29_bytes() {
        let s = EventStream::new(4, 4, vec![Event::new(1, 2, 3, Polarity::Negative)]);
        let mut buf = Vec::new();
        assert_eq!(write_events(&s, &mut buf).unwrap(), 29);
        assert_eq!(buf[28], 0xff);
    }

    #[test]
    fn header_fields_little_endian() {
        let bytes = encode_events(&three()).unwrap();
        assert_eq!(&bytes[4..6], &[0x80, 0x02]);
        assert_eq!(&bytes[6..8], &[0xe0, 0x01]);
        assert_eq!(&bytes[8..16], &[3, 0, 0, 0, 0, 0, 0, 0]);
    }

    #[test]
    fn corrupted_magic_reported_at_zero() {
        let mut bytes = encode_events(&three()).unwrap();
        bytes[1] = b'X';
        match decode_events(&bytes) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, 0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn truncated_record_reported_at_boundary() {
        let bytes = encode_events(&three()).unwrap();
        let cut = &bytes[..bytes.len() - 5];
        match decode_events(cut) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, (16 + 2 * 13) as u64),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn out_of_range_pixel_rejected() {
        let mut bytes = encode_events(&three()).unwrap();
        // x of the first record := 640
        bytes[16 + 8..16 + 10].copy_from_slice(&640u16.to_le_bytes());
        match decode_events(&bytes) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, 24),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_polarity_rejected() {
        let mut bytes = encode_events(&three()).unwrap();
        bytes[16 + 12] = 0;
        assert!(matches!(
            decode_events(&bytes),
            Err(Error::Format { offset: 28, .. })
        ));
    }

    #[test]
    fn trailing_garbage_rejected() {
        let mut bytes = encode_events(&three()).unwrap();
        bytes.push(0);
        assert!(matches!(decode_events(&bytes), Err(Error::Format { .. })));
    }

    #[test]
    fn invalid_stream_not_written() {
        let s = EventStream::new(4, 4, vec![Event::new(1, 9, 0, Polarity::Positive)]);
        assert!(matches!(encode_events(&s), Err(Error::InvalidArgument(_))));
    }

    fn arb_stream() -> impl Strategy<Value = EventStream> {
        (1u16..700, 1u16..500).prop_flat_map(|(w, h)| {
            proptest::collection::vec((0u64..1_000_000, 0..w, 0..h, any::<bool>()), 0..200).prop_map(
                move |mut raw| {
                    raw.sort_by_key(|r| r.0);
                    let events = raw
                        .into_iter()
                        .map(|(t, x, y, pos)| {
                            Event::new(
                                t,
                                x,
                                y,
                                if pos {
                                    Polarity::Positive
                                } else {
                                    Polarity::Negative
                                },
                            )
                        })
                        .collect();
                    EventStream::new(w, h, events)
                },
            )
        })
    }

    proptest! {
        #[test]
        fn round_trip_is_identity(s in arb_stream()) {
            let bytes = encode_events(&s).unwrap();
            prop_assert_eq!(bytes.len(), encoded_len(s.len()));
            let back = decode_events(&bytes).unwrap();
            prop_assert_eq!(&back, &s);
            prop_assert_eq!(encode_events(&back).unwrap(), bytes);
        }

        #[test]
        fn decoder_never_panics(bytes in proptest::collection::vec(any::<u8>(), 0..128)) {
            let _ = decode_events(&bytes);
        }
    }
}
