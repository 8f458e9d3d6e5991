//! Length-prefixed frames: `[u32 LE payload length][u8 type][payload]`.

use std::io::{Read, Write};

use crate::error::{Error, Result, Shape};

use super::EnvDescriptor;

pub const MAX_PAYLOAD: usize = 64 << 20;

pub const HELLO: u8 = 0x01;
pub const DESCRIBE: u8 = 0x02;
pub const SET_INPUT: u8 = 0x03;
pub const MEASURE: u8 = 0x04;
pub const BATCH: u8 = 0x05;
pub const INPUT_SET: u8 = 0x83;
pub const IMAGE: u8 = 0x84;
pub const IMAGES: u8 = 0x85;
pub const ERROR: u8 = 0x7F;

/// Error codes carried by [`Message::Error`].
pub mod code {
    pub const MALFORMED: u16 = 1;
    pub const UNKNOWN_TYPE: u16 = 2;
    pub const DIMENSION: u16 = 3;
    pub const VERSION: u16 = 4;
    pub const HANDSHAKE: u16 = 5;
    pub const INTERNAL: u16 = 6;
}

#[derive(Clone, Debug, PartialEq)]
pub enum Message {
    Hello { version: u32 },
    Describe(EnvDescriptor),
    /// An empty array clears the input phase.
    SetInput(Vec<f32>),
    Measure(Vec<f32>),
    Batch(Vec<Vec<f32>>),
    /// Acknowledges `SetInput`.
    InputSet,
    Image(Vec<f32>),
    Images(Vec<Vec<f32>>),
    Error { code: u16, message: String },
}

impl Message {
    pub fn msg_type(&self) -> u8 {
        match self {
            Message::Hello { .. } => HELLO,
            Message::Describe(_) => DESCRIBE,
            Message::SetInput(_) => SET_INPUT,
            Message::Measure(_) => MEASURE,
            Message::Batch(_) => BATCH,
            Message::InputSet => INPUT_SET,
            Message::Image(_) => IMAGE,
            Message::Images(_) => IMAGES,
            Message::Error { .. } => ERROR,
        }
    }
}

fn put_f32s(buf: &mut Vec<u8>, values: &[f32]) {
    buf.extend(values.iter().flat_map(|v| v.to_le_bytes()));
}

fn put_arrays(buf: &mut Vec<u8>, arrays: &[Vec<f32>]) -> Result<()> {
    let len = arrays.first().map_or(0, Vec::len);
    if arrays.iter().any(|a| a.len() != len) {
        return Err(Error::Protocol("batch arrays must share one length".into()));
    }
    buf.extend_from_slice(&(arrays.len() as u32).to_le_bytes());
    arrays.iter().for_each(|a| put_f32s(buf, a));
    Ok(())
}

/// Payload bytes of a message (without the 5-byte header).
pub fn encode_payload(msg: &Message) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    match msg {
        Message::Hello { version } => buf.extend_from_slice(&version.to_le_bytes()),
        Message::Describe(d) => {
            for v in [d.shape.rows, d.shape.cols, d.levels as usize, d.sensor.rows, d.sensor.cols] {
                buf.extend_from_slice(&(v as u32).to_le_bytes());
            }
        }
        Message::SetInput(v) | Message::Measure(v) | Message::Image(v) => put_f32s(&mut buf, v),
        Message::Batch(a) | Message::Images(a) => put_arrays(&mut buf, a)?,
        Message::InputSet => {}
        Message::Error { code, message } => {
            buf.extend_from_slice(&code.to_le_bytes());
            buf.extend_from_slice(message.as_bytes());
        }
    }
    if buf.len() > MAX_PAYLOAD {
        return Err(Error::Protocol(format!("payload of {} bytes exceeds 64 MiB", buf.len())));
    }
    Ok(buf)
}

/// Complete frame bytes.
pub fn encode(msg: &Message) -> Result<Vec<u8>> {
    let payload = encode_payload(msg)?;
    let mut out = Vec::with_capacity(5 + payload.len());
    out.extend_from_slice(&(payload.len() as u32).to_le_bytes());
    out.push(msg.msg_type());
    out.extend_from_slice(&payload);
    Ok(out)
}

fn f32s(bytes: &[u8]) -> Result<Vec<f32>> {
    if bytes.len() % 4 != 0 {
        return Err(Error::Protocol(format!("f32 array of {} bytes is not a multiple of 4", bytes.len())));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

fn arrays(bytes: &[u8]) -> Result<Vec<Vec<f32>>> {
    let count = u32_at(bytes, 0)? as usize;
    let rest = &bytes[4..];
    if count == 0 {
        return if rest.is_empty() {
            Ok(Vec::new())
        } else {
            Err(Error::Protocol("empty batch with trailing bytes".into()))
        };
    }
    if rest.len() % (4 * count) != 0 {
        return Err(Error::Protocol(format!(
            "{} bytes do not split into {count} f32 arrays",
            rest.len()
        )));
    }
    let each = rest.len() / count;
    if each == 0 {
        return Ok(vec![Vec::new(); count]);
    }
    rest.chunks_exact(each).map(f32s).collect()
}

fn u32_at(bytes: &[u8], offset: usize) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_le_bytes(b.try_into().unwrap()))
        .ok_or_else(|| Error::Protocol(format!("payload too short for a u32 at byte {offset}")))
}

/// Parse a payload of the given type.
pub fn decode(msg_type: u8, payload: &[u8]) -> Result<Message> {
    let exact = |n: usize| {
        if payload.len() == n {
            Ok(())
        } else {
            Err(Error::Protocol(format!(
                "message type {msg_type:#04x} needs {n} payload bytes, got {}",
                payload.len()
            )))
        }
    };
    Ok(match msg_type {
        HELLO => {
            exact(4)?;
            Message::Hello {
                version: u32_at(payload, 0)?,
            }
        }
        DESCRIBE => {
            exact(20)?;
            let v: Vec<usize> = (0..5).map(|i| u32_at(payload, 4 * i).map(|x| x as usize)).collect::<Result<_>>()?;
            Message::Describe(EnvDescriptor {
                shape: Shape::new(v[0], v[1]),
                levels: v[2] as u32,
                sensor: Shape::new(v[3], v[4]),
                version: super::PROTOCOL_VERSION,
            })
        }
        SET_INPUT => Message::SetInput(f32s(payload)?),
        MEASURE => Message::Measure(f32s(payload)?),
        BATCH => Message::Batch(arrays(payload)?),
        INPUT_SET => {
            exact(0)?;
            Message::InputSet
        }
        IMAGE => Message::Image(f32s(payload)?),
        IMAGES => Message::Images(arrays(payload)?),
        ERROR => {
            if payload.len() < 2 {
                return Err(Error::Protocol("ERROR frame lacks its code".into()));
            }
            Message::Error {
                code: u16::from_le_bytes([payload[0], payload[1]]),
                message: String::from_utf8_lossy(&payload[2..]).into_owned(),
            }
        }
        other => return Err(Error::Protocol(format!("unknown message type {other:#04x}"))),
    })
}

/// Read one raw frame. Oversized lengths are rejected before allocation.
pub fn read_frame<R: Read>(r: &mut R) -> Result<(u8, Vec<u8>)> {
    let mut header = [0u8; 5];
    r.read_exact(&mut header)?;
    read_frame_body(r, header)
}

pub(crate) fn read_frame_body<R: Read>(r: &mut R, header: [u8; 5]) -> Result<(u8, Vec<u8>)> {
    let len = u32::from_le_bytes(header[..4].try_into().unwrap()) as usize;
    if len > MAX_PAYLOAD {
        return Err(Error::Protocol(format!("frame length {len} exceeds the 64 MiB limit")));
    }
    let mut payload = vec![0u8; len];
    r.read_exact(&mut payload)?;
    Ok((header[4], payload))
}

pub fn write_message<W: Write>(w: &mut W, msg: &Message) -> Result<()> {
    w.write_all(&encode(msg)?)?;
    w.flush()?;
    Ok(())
}
