use std::io::{BufReader, BufWriter};
use std::net::{TcpStream, ToSocketAddrs};
use std::time::Duration;

use super::frame::{self, read_frame, read_frame_body, write_message, Message};
use super::{EnvDescriptor, Instrument, PROTOCOL_VERSION};
use crate::error::{Error, Result, Shape};
use crate::optics::{IntensityImage, PhaseMap};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

/// Frame prefix every DESCRIBE reply starts with.
const DESCRIBE_MAGIC: [u8; 5] = [20, 0, 0, 0, frame::DESCRIBE];

fn io_to_instrument(e: Error) -> Error {
    match e {
        Error::Io(io) => match io.kind() {
            std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut => {
                Error::Instrument("timed out waiting for the instrument".into())
            }
            _ => Error::Instrument(format!("connection failed: {io}")),
        },
        other => other,
    }
}

/// Send HELLO and wait for DESCRIBE.
pub fn handshake<S: std::io::Read + std::io::Write>(stream: &mut S) -> Result<EnvDescriptor> {
    write_message(stream, &Message::Hello {
        version: PROTOCOL_VERSION,
    })
    .map_err(io_to_instrument)?;
    let mut header = [0u8; 5];
    stream.read_exact(&mut header).map_err(|e| io_to_instrument(e.into()))?;
    if header[4] == frame::ERROR {
        let (_, payload) = read_frame_body(stream, header)?;
        return match frame::decode(frame::ERROR, &payload)? {
            Message::Error { code, message } => {
                Err(Error::Protocol(format!("instrument refused handshake (code {code}): {message}")))
            }
            _ => unreachable!(),
        };
    }
    if header != DESCRIBE_MAGIC {
        return Err(Error::Protocol(format!(
            "expected DESCRIBE frame starting {DESCRIBE_MAGIC:02x?}, got {header:02x?}"
        )));
    }
    let (t, payload) = read_frame_body(stream, header).map_err(io_to_instrument)?;
    match frame::decode(t, &payload)? {
        Message::Describe(d) => Ok(d),
        _ => unreachable!(),
    }
}

/// Instrument reached over TCP.
pub struct RemoteInstrument {
    reader: BufReader<TcpStream>,
    writer: BufWriter<TcpStream>,
    descriptor: EnvDescriptor,
    input: Option<Vec<f32>>,
    count: u64,
}

impl std::fmt::Debug for RemoteInstrument {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemoteInstrument")
            .field("descriptor", &self.descriptor)
            .field("count", &self.count)
            .finish_non_exhaustive()
    }
}

impl RemoteInstrument {
    pub fn connect<A: ToSocketAddrs>(addr: A, timeout: Duration) -> Result<Self> {
        let addrs: Vec<_> = addr
            .to_socket_addrs()
            .map_err(|e| Error::Instrument(format!("bad instrument address: {e}")))?
            .collect();
        let first = addrs
            .first()
            .ok_or_else(|| Error::Instrument("instrument address resolved to nothing".into()))?;
        let stream = TcpStream::connect_timeout(first, timeout)
            .map_err(|e| Error::Instrument(format!("cannot reach instrument at {first}: {e}")))?;
        stream.set_read_timeout(Some(timeout))?;
        stream.set_write_timeout(Some(timeout))?;
        stream.set_nodelay(true)?;
        let mut both = stream.try_clone()?;
        let descriptor = handshake(&mut both)?;
        Ok(RemoteInstrument {
            reader: BufReader::new(stream.try_clone()?),
            writer: BufWriter::new(stream),
            descriptor,
            input: None,
            count: 0,
        })
    }

    fn request(&mut self, msg: &Message) -> Result<Message> {
        write_message(&mut self.writer, msg).map_err(io_to_instrument)?;
        let (t, payload) = read_frame(&mut self.reader).map_err(io_to_instrument)?;
        match frame::decode(t, &payload)? {
            Message::Error { code, message } => {
                Err(Error::Instrument(format!("instrument error {code}: {message}")))
            }
            other => Ok(other),
        }
    }

    fn frame_to_image(&self, data: Vec<f32>) -> Result<IntensityImage> {
        let sensor = self.descriptor.sensor;
        if data.len() != sensor.len() {
            return Err(Error::Protocol(format!(
                "image of {} values for a {sensor} sensor",
                data.len()
            )));
        }
        IntensityImage::new(sensor, data.into_iter().map(f64::from).collect())
    }

    fn set_input(&mut self, input: Option<&PhaseMap>) -> Result<()> {
        let wanted = input.map(|p| p.data().iter().map(|&v| v as f32).collect::<Vec<f32>>());
        if wanted == self.input {
            return Ok(());
        }
        let payload = wanted.clone().unwrap_or_default();
        match self.request(&Message::SetInput(payload))? {
            Message::InputSet => {
                self.input = wanted;
                Ok(())
            }
            other => Err(Error::Protocol(format!(
                "expected INPUT_SET, got type {:#04x}",
                other.msg_type()
            ))),
        }
    }
}

impl Instrument for RemoteInstrument {
    fn descriptor(&self) -> EnvDescriptor {
        self.descriptor
    }

    fn evaluate_batch(&mut self, input: Option<&PhaseMap>, phases: &[PhaseMap]) -> Result<Vec<IntensityImage>> {
        let shape: Shape = self.descriptor.shape;
        if let Some(inp) = input {
            Error::check_shape(shape, inp.shape())?;
        }
        phases.iter().try_for_each(|p| Error::check_shape(shape, p.shape()))?;
        if phases.is_empty() {
            return Ok(Vec::new());
        }
        self.set_input(input)?;
        let arrays = phases
            .iter()
            .map(|p| p.data().iter().map(|&v| v as f32).collect())
            .collect();
        match self.request(&Message::Batch(arrays))? {
            Message::Images(frames) if frames.len() == phases.len() => {
                self.count += frames.len() as u64;
                frames.into_iter().map(|f| self.frame_to_image(f)).collect()
            }
            other => Err(Error::Protocol(format!(
                "expected {} IMAGES, got type {:#04x}",
                phases.len(),
                other.msg_type()
            ))),
        }
    }

    fn measurements(&self) -> u64 {
        self.count
    }

    fn measure(&mut self, input: Option<&PhaseMap>, phase: &PhaseMap) -> Result<IntensityImage> {
        Error::check_shape(self.descriptor.shape, phase.shape())?;
        self.set_input(input)?;
        let data = phase.data().iter().map(|&v| v as f32).collect();
        match self.request(&Message::Measure(data))? {
            Message::Image(f) => {
                self.count += 1;
                self.frame_to_image(f)
            }
            other => Err(Error::Protocol(format!(
                "expected IMAGE, got type {:#04x}",
                other.msg_type()
            ))),
        }
    }
}
