use std::io::{BufReader, BufWriter, Read};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};

use super::frame::{self, code, read_frame_body, write_message, Message, MAX_PAYLOAD};
use super::{descriptor_of, Instrument, LocalInstrument, PROTOCOL_VERSION};
use crate::error::{Error, Result};
use crate::optics::{Bench, BenchConfig, PhaseMap};

/// First five bytes of a valid HELLO frame.
const HELLO_MAGIC: [u8; 5] = [4, 0, 0, 0, frame::HELLO];

/// Simulator behind the framed protocol. Each accepted connection gets its
/// own noise stream, numbered from 0 in accept order; all connections share
/// one measurement counter.
pub struct SimServer {
    listener: TcpListener,
    bench: Bench,
    counter: Arc<AtomicU64>,
    version: u32,
}

impl SimServer {
    pub fn bind<A: ToSocketAddrs>(config: BenchConfig, addr: A) -> Result<Self> {
        let bench = Bench::new(config)?;
        let listener = TcpListener::bind(addr)
            .map_err(|e| Error::Instrument(format!("cannot listen: {e}")))?;
        Ok(SimServer {
            listener,
            bench,
            counter: Arc::new(AtomicU64::new(0)),
            version: PROTOCOL_VERSION,
        })
    }

    /// Speak a different protocol version (for exercising mismatch handling).
    pub fn with_protocol_version(mut self, version: u32) -> Self {
        self.version = version;
        self
    }

    pub fn local_addr(&self) -> Result<SocketAddr> {
        Ok(self.listener.local_addr()?)
    }

    /// Frames served across all connections.
    pub fn counter(&self) -> Arc<AtomicU64> {
        Arc::clone(&self.counter)
    }

    /// Accept connections until the listener fails.
    pub fn run(self) -> Result<()> {
        for (index, stream) in self.listener.incoming().enumerate() {
            let stream = match stream {
                Ok(s) => s,
                Err(_) => continue,
            };
            let bench = self.bench.clone();
            let counter = Arc::clone(&self.counter);
            let version = self.version;
            thread::spawn(move || {
                // Per-connection failures end only that connection.
                let _ = serve_connection(stream, bench, index as u64, counter, version);
            });
        }
        Ok(())
    }

    /// Run on a background thread; returns the bound address.
    pub fn spawn(self) -> Result<(SocketAddr, JoinHandle<Result<()>>)> {
        let addr = self.local_addr()?;
        Ok((addr, thread::spawn(move || self.run())))
    }
}

/// Serve `config` on `addr` until terminated.
pub fn serve_sim<A: ToSocketAddrs>(config: BenchConfig, addr: A) -> Result<()> {
    SimServer::bind(config, addr)?.run()
}

fn error_frame(code: u16, message: impl Into<String>) -> Message {
    Message::Error {
        code,
        message: message.into(),
    }
}

fn phase_from(values: Vec<f32>, inst: &LocalInstrument) -> std::result::Result<PhaseMap, Message> {
    let shape = inst.bench().shape();
    if values.len() != shape.len() {
        return Err(error_frame(
            code::DIMENSION,
            format!("expected {} phase values for {shape}, got {}", shape.len(), values.len()),
        ));
    }
    PhaseMap::new(shape, values.into_iter().map(f64::from).collect())
        .map_err(|e| error_frame(code::MALFORMED, e.to_string()))
}

fn serve_connection(
    stream: TcpStream,
    bench: Bench,
    index: u64,
    counter: Arc<AtomicU64>,
    version: u32,
) -> Result<()> {
    stream.set_nodelay(true)?;
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut writer = BufWriter::new(stream);

    let mut header = [0u8; 5];
    reader.read_exact(&mut header)?;
    if header != HELLO_MAGIC {
        let msg = format!("expected HELLO magic {HELLO_MAGIC:02x?}, got {header:02x?}");
        write_message(&mut writer, &error_frame(code::HANDSHAKE, msg))?;
        return Ok(());
    }
    let mut v = [0u8; 4];
    reader.read_exact(&mut v)?;
    let client = u32::from_le_bytes(v);
    if client != version {
        let msg = format!("protocol version mismatch: server speaks {version}, client {client}");
        write_message(&mut writer, &error_frame(code::VERSION, msg))?;
        return Ok(());
    }
    write_message(&mut writer, &Message::Describe(descriptor_of(&bench)))?;

    let mut inst = LocalInstrument::with_stream(bench, index);
    let mut input: Option<PhaseMap> = None;
    loop {
        let mut header = [0u8; 5];
        match reader.read_exact(&mut header) {
            Ok(()) => {}
            Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => return Ok(()),
            Err(e) => return Err(e.into()),
        }
        let len = u32::from_le_bytes(header[..4].try_into().unwrap()) as usize;
        if len > MAX_PAYLOAD {
            // Cannot resynchronise past an unread oversized payload.
            let msg = format!("frame length {len} exceeds the 64 MiB limit");
            write_message(&mut writer, &error_frame(code::MALFORMED, msg))?;
            return Ok(());
        }
        let (t, payload) = read_frame_body(&mut reader, header)?;
        let reply = match frame::decode(t, &payload) {
            Err(e) => {
                let c = if matches!(t, 0x01..=0x05 | 0x7F | 0x83..=0x85) {
                    code::MALFORMED
                } else {
                    code::UNKNOWN_TYPE
                };
                error_frame(c, e.to_string())
            }
            Ok(msg) => handle(msg, &mut inst, &mut input, &counter),
        };
        write_message(&mut writer, &reply)?;
    }
}

fn handle(msg: Message, inst: &mut LocalInstrument, input: &mut Option<PhaseMap>, counter: &AtomicU64) -> Message {
    let result = (|| -> std::result::Result<Message, Message> {
        match msg {
            Message::SetInput(values) => {
                *input = if values.is_empty() {
                    None
                } else {
                    Some(phase_from(values, inst)?)
                };
                Ok(Message::InputSet)
            }
            Message::Measure(values) => {
                let phase = phase_from(values, inst)?;
                let mut frames = inst
                    .evaluate_batch(input.as_ref(), std::slice::from_ref(&phase))
                    .map_err(|e| error_frame(code::INTERNAL, e.to_string()))?;
                counter.fetch_add(1, Ordering::SeqCst);
                let img = frames.pop().unwrap_or_else(|| unreachable!());
                Ok(Message::Image(img.data().iter().map(|&v| v as f32).collect()))
            }
            Message::Batch(arrays) => {
                let phases = arrays
                    .into_iter()
                    .map(|a| phase_from(a, inst))
                    .collect::<std::result::Result<Vec<_>, _>>()?;
                let frames = inst
                    .evaluate_batch(input.as_ref(), &phases)
                    .map_err(|e| error_frame(code::INTERNAL, e.to_string()))?;
                counter.fetch_add(frames.len() as u64, Ordering::SeqCst);
                Ok(Message::Images(
                    frames
                        .iter()
                        .map(|f| f.data().iter().map(|&v| v as f32).collect())
                        .collect(),
                ))
            }
            other => Err(error_frame(
                code::MALFORMED,
                format!("unexpected message type {:#04x} from a client", other.msg_type()),
            )),
        }
    })();
    result.unwrap_or_else(|e| e)
}
