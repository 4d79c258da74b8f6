//! Length-prefixed message framing for the stdio transport.

use std::io::{self, ErrorKind, Read, Write};

/// Refuse frames above this size; a corrupt prefix would otherwise allocate gigabytes.
pub const MAX_FRAME_LEN: usize = 256 << 20;

pub fn write_frame(mut w: impl Write, payload: &[u8]) -> io::Result<()> {
    let len = u32::try_from(payload.len())
        .ok()
        .filter(|&n| n as usize <= MAX_FRAME_LEN)
        .ok_or_else(|| io::Error::new(ErrorKind::InvalidInput, "frame too large"))?;
    w.write_all(&len.to_be_bytes())?;
    w.write_all(payload)?;
    w.flush()
}

/// Reads one frame. `Ok(None)` on a clean end of stream before any prefix byte.
pub fn read_frame(mut r: impl Read) -> io::Result<Option<Vec<u8>>> {
    let mut prefix = [0u8; 4];
    let mut filled = 0;
    while filled < 4 {
        match r.read(&mut prefix[filled..]) {
            Ok(0) if filled == 0 => return Ok(None),
            Ok(0) => return Err(io::Error::new(ErrorKind::UnexpectedEof, "truncated length prefix")),
            Ok(n) => filled += n,
            Err(e) if e.kind() == ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    let len = u32::from_be_bytes(prefix) as usize;
    if len > MAX_FRAME_LEN {
        return Err(io::Error::new(
            ErrorKind::InvalidData,
            format!("frame of {len} bytes exceeds limit"),
        ));
    }
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    Ok(Some(buf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn prefix_is_big_endian() {
        let mut out = Vec::new();
        write_frame(&mut out, b"{}").unwrap();
        assert_eq!(out, [0, 0, 0, 2, b'{', b'}']);
    }

    #[test]
    fn eof_handling() {
        assert!(read_frame(&[][..]).unwrap().is_none());
        assert!(read_frame(&[0, 0][..]).is_err());
        assert!(read_frame(&[0, 0, 0, 5, 1][..]).is_err());
        assert!(read_frame(&[0xff, 0xff, 0xff, 0xff][..]).is_err());
    }

    proptest! {
        #[test]
        fn frames_roundtrip(msgs in proptest::collection::vec(proptest::collection::vec(any::<u8>(), 0..64), 0..8)) {
            let mut buf = Vec::new();
            for m in &msgs {
                write_frame(&mut buf, m).unwrap();
            }
            let mut r = &buf[..];
            let mut got = Vec::new();
            while let Some(f) = read_frame(&mut r).unwrap() {
                got.push(f);
            }
            prop_assert_eq!(got, msgs);
        }
    }
}
