use std::io::{Cursor, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::Ordering;
use std::time::Duration;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use insitu::blackbox::frame::{self, code, decode, encode, read_frame, write_message, Message};
use insitu::blackbox::{handshake, EnvDescriptor, Instrument, LocalInstrument, RemoteInstrument, SimServer, PROTOCOL_VERSION};
use insitu::optics::{BenchConfig, IntensityImage, PhaseMap};
use insitu::{Error, Shape};

const TIMEOUT: Duration = Duration::from_secs(10);

fn bench(noise: bool) -> BenchConfig {
    let base = BenchConfig {
        rows: 16,
        cols: 16,
        distance_mm: 5.0,
        seed: 42,
        ..BenchConfig::default()
    };
    if noise {
        base
    } else {
        base.noise_free()
    }
}

fn phases(n: usize, seed: u64) -> Vec<PhaseMap> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| PhaseMap::new(Shape::new(16, 16), (0..256).map(|_| rng.random_range(-4.0..4.0)).collect()).unwrap())
        .collect()
}

fn serve(config: BenchConfig) -> (std::net::SocketAddr, std::sync::Arc<std::sync::atomic::AtomicU64>) {
    let server = SimServer::bind(config, "127.0.0.1:0").unwrap();
    let counter = server.counter();
    let (addr, _handle) = server.spawn().unwrap();
    (addr, counter)
}

fn bits(images: &[IntensityImage]) -> Vec<Vec<u64>> {
    images.iter().map(|i| i.data().iter().map(|v| v.to_bits()).collect()).collect()
}

/// Exercise an instrument with a fixed script of inputs and batches.
fn script(inst: &mut dyn Instrument) -> Vec<IntensityImage> {
    let ps = phases(7, 1);
    let input = &phases(1, 2)[0];
    let mut out = inst.evaluate_batch(None, &ps[..3]).unwrap();
    out.push(inst.measure(Some(input), &ps[3]).unwrap());
    out.extend(inst.evaluate_batch(Some(input), &ps[4..]).unwrap());
    out.push(inst.measure(None, &ps[0]).unwrap());
    out
}

#[test]
fn local_and_loopback_are_bit_identical() {
    for noise in [false, true] {
        let mut local = LocalInstrument::new(bench(noise)).unwrap();
        let (addr, _) = serve(bench(noise));
        let mut remote = RemoteInstrument::connect(addr, TIMEOUT).unwrap();
        assert_eq!(local.descriptor(), remote.descriptor());
        let a = script(&mut local);
        let b = script(&mut remote);
        assert_eq!(bits(&a), bits(&b), "noise {noise}");
        assert_eq!(local.measurements(), 8);
        assert_eq!(remote.measurements(), 8);
    }
}

#[test]
fn descriptor_advertises_grid_levels_and_version() {
    let (addr, _) = serve(bench(true));
    let remote = RemoteInstrument::connect(addr, TIMEOUT).unwrap();
    assert_eq!(
        remote.descriptor(),
        EnvDescriptor {
            shape: Shape::new(16, 16),
            levels: 256,
            sensor: Shape::new(16, 16),
            version: PROTOCOL_VERSION,
        }
    );
}

#[test]
fn counters_track_batches() {
    let (addr, counter) = serve(bench(true));
    let mut remote = RemoteInstrument::connect(addr, TIMEOUT).unwrap();
    let mut local = LocalInstrument::new(bench(true)).unwrap();
    for inst in [&mut remote as &mut dyn Instrument, &mut local] {
        assert!(inst.evaluate_batch(None, &[]).unwrap().is_empty());
        assert_eq!(inst.measurements(), 0);
        inst.evaluate_batch(None, &phases(5, 3)).unwrap();
        inst.evaluate_batch(None, &phases(5, 4)).unwrap();
        assert_eq!(inst.measurements(), 10);
    }
    assert_eq!(counter.load(Ordering::SeqCst), 10);
}

#[test]
fn noise_free_remeasurement_is_identical() {
    let (addr, _) = serve(bench(false));
    let mut remote = RemoteInstrument::connect(addr, TIMEOUT).unwrap();
    let p = &phases(1, 5)[0];
    assert_eq!(remote.measure(None, p).unwrap(), remote.measure(None, p).unwrap());
}

#[test]
fn shape_mismatch_is_dimension_error() {
    let wrong = PhaseMap::zeros(Shape::new(8, 8));
    let mut local = LocalInstrument::new(bench(true)).unwrap();
    assert!(matches!(local.evaluate_batch(None, &[wrong.clone()]), Err(Error::Dimension { .. })));
    let (addr, _) = serve(bench(true));
    let mut remote = RemoteInstrument::connect(addr, TIMEOUT).unwrap();
    assert!(matches!(remote.evaluate_batch(None, &[wrong]), Err(Error::Dimension { .. })));
    assert_eq!(remote.measurements(), 0);
}

#[test]
fn newer_server_version_is_refused() {
    let server = SimServer::bind(bench(true), "127.0.0.1:0")
        .unwrap()
        .with_protocol_version(PROTOCOL_VERSION + 1);
    let (addr, _) = server.spawn().unwrap();
    match RemoteInstrument::connect(addr, TIMEOUT) {
        Err(Error::Protocol(msg)) => assert!(msg.contains("version"), "{msg}"),
        other => panic!("expected a protocol error, got {other:?}"),
    }
}

/// Scripted byte stream: reads come from `incoming`, writes are recorded.
struct Duplex {
    incoming: Cursor<Vec<u8>>,
    sent: Vec<u8>,
}

impl Read for Duplex {
    fn read(&mut self, buf: &mut [u8]) -> std::io::Result<usize> {
        self.incoming.read(buf)
    }
}

impl Write for Duplex {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        self.sent.write(buf)
    }

    fn flush(&mut self) -> std::io::Result<()> {
        Ok(())
    }
}

#[test]
fn garbage_reply_names_expected_magic() {
    let mut stream = Duplex {
        incoming: Cursor::new(b"HTTP/1.1 400 Bad Request\r\n\r\n".to_vec()),
        sent: Vec::new(),
    };
    match handshake(&mut stream) {
        Err(Error::Protocol(msg)) => assert!(msg.contains("expected DESCRIBE frame starting"), "{msg}"),
        other => panic!("expected a protocol error, got {other:?}"),
    }
    assert_eq!(stream.sent, encode(&Message::Hello { version: PROTOCOL_VERSION }).unwrap());
}

fn raw_connection(addr: std::net::SocketAddr) -> TcpStream {
    let s = TcpStream::connect(addr).unwrap();
    s.set_read_timeout(Some(TIMEOUT)).unwrap();
    s
}

fn reply(stream: &mut TcpStream) -> Message {
    let (t, payload) = read_frame(stream).unwrap();
    decode(t, &payload).unwrap()
}

#[test]
fn server_rejects_garbage_greeting_with_magic() {
    let (addr, _) = serve(bench(true));
    let mut s = raw_connection(addr);
    s.write_all(b"GET / HTTP/1.1\r\n\r\n").unwrap();
    match reply(&mut s) {
        Message::Error { code: c, message } => {
            assert_eq!(c, code::HANDSHAKE);
            assert!(message.contains("HELLO magic"), "{message}");
        }
        other => panic!("{other:?}"),
    }
    // The server closes the connection after refusing.
    let mut rest = Vec::new();
    assert_eq!(s.read_to_end(&mut rest).unwrap(), 0);
}

#[test]
fn malformed_frames_get_errors_and_connection_survives() {
    let (addr, counter) = serve(bench(false));
    let mut s = raw_connection(addr);
    write_message(&mut s, &Message::Hello { version: PROTOCOL_VERSION }).unwrap();
    assert!(matches!(reply(&mut s), Message::Describe(_)));

    let mut expect_error = |bytes: &[u8], want: u16| {
        s.write_all(bytes).unwrap();
        match reply(&mut s) {
            Message::Error { code: c, .. } => assert_eq!(c, want, "{bytes:?}"),
            other => panic!("{other:?}"),
        }
    };
    expect_error(&[0, 0, 0, 0, 0x42], code::UNKNOWN_TYPE);
    expect_error(&[3, 0, 0, 0, frame::MEASURE, 1, 2, 3], code::MALFORMED);
    expect_error(&encode(&Message::Measure(vec![0.0; 5])).unwrap(), code::DIMENSION);
    expect_error(&encode(&Message::Image(vec![0.0; 256])).unwrap(), code::MALFORMED);

    write_message(&mut s, &Message::Measure(vec![0.5; 256])).unwrap();
    match reply(&mut s) {
        Message::Image(v) => assert_eq!(v.len(), 256),
        other => panic!("{other:?}"),
    }
    write_message(&mut s, &Message::SetInput(vec![0.1; 256])).unwrap();
    assert_eq!(reply(&mut s), Message::InputSet);
    assert_eq!(counter.load(Ordering::SeqCst), 1);
}

#[test]
fn connections_get_independent_reproducible_streams() {
    let run = || {
        let (addr, _) = serve(bench(true));
        let mut a = RemoteInstrument::connect(addr, TIMEOUT).unwrap();
        let mut b = RemoteInstrument::connect(addr, TIMEOUT).unwrap();
        let ps = phases(3, 6);
        (
            bits(&a.evaluate_batch(None, &ps).unwrap()),
            bits(&b.evaluate_batch(None, &ps).unwrap()),
        )
    };
    let (a1, b1) = run();
    let (a2, b2) = run();
    assert_ne!(a1, b1);
    assert_eq!((a1, b1), (a2, b2));
}

#[test]
fn silent_instrument_times_out() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    match RemoteInstrument::connect(addr, Duration::from_millis(200)) {
        Err(Error::Instrument(msg)) => assert!(msg.contains("timed out"), "{msg}"),
        other => panic!("expected an instrument error, got {other:?}"),
    }
    drop(listener);
}

#[test]
fn unreachable_instrument_is_instrument_error() {
    let addr = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap();
    assert!(matches!(
        RemoteInstrument::connect(addr, Duration::from_millis(500)),
        Err(Error::Instrument(_))
    ));
}

fn f32_vec(max: usize) -> impl Strategy<Value = Vec<f32>> {
    prop::collection::vec(-1e6f32..1e6, 0..max)
}

fn arrays() -> impl Strategy<Value = Vec<Vec<f32>>> {
    (0usize..5, 0usize..9).prop_flat_map(|(n, len)| prop::collection::vec(prop::collection::vec(-1e6f32..1e6, len), n))
}

fn message() -> impl Strategy<Value = Message> {
    prop_oneof![
        any::<u32>().prop_map(|version| Message::Hello { version }),
        (1usize..512, 1usize..512, 1u32..65536, 1usize..512, 1usize..512).prop_map(|(r, c, levels, sr, sc)| {
            Message::Describe(EnvDescriptor {
                shape: Shape::new(r, c),
                levels,
                sensor: Shape::new(sr, sc),
                version: PROTOCOL_VERSION,
            })
        }),
        f32_vec(64).prop_map(Message::SetInput),
        f32_vec(64).prop_map(Message::Measure),
        arrays().prop_map(Message::Batch),
        Just(Message::InputSet),
        f32_vec(64).prop_map(Message::Image),
        arrays().prop_map(Message::Images),
        (any::<u16>(), ".{0,40}").prop_map(|(code, message)| Message::Error { code, message }),
    ]
}

proptest! {
    #[test]
    fn frames_round_trip(msg in message()) {
        let bytes = encode(&msg).unwrap();
        let len = u32::from_le_bytes(bytes[..4].try_into().unwrap()) as usize;
        prop_assert_eq!(len + 5, bytes.len());
        prop_assert_eq!(bytes[4], msg.msg_type());
        let (t, payload) = read_frame(&mut &bytes[..]).unwrap();
        prop_assert_eq!(decode(t, &payload).unwrap(), msg);
    }
}
