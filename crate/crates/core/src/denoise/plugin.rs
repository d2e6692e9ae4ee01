//! External denoisers running in a child process.
//!
//! The parent talks to the child over its standard streams; every integer is
//! little-endian and every value an IEEE-754 f64:
//!
//! ```text
//! handshake  parent → child   b"DNP1" | u32 dim
//!            child  → parent  b"DNP1" | u32 dim        (must match)
//! request    parent → child   0x01 | u32 k | f64 sigma | k·dim × f64 (row-major)
//! response   child  → parent  0x02 | u32 k | k·dim × f64 (row-major)
//! shutdown   parent → child   0xFF                     (child exits 0)
//! ```
//!
//! A [`PluginDenoiser`] owns one session and is not meant to be shared
//! across threads; requests are strictly serialized.

use std::cell::RefCell;
use std::collections::VecDeque;
use std::io::{self, BufWriter, Read, Write};
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};

use super::Denoiser;
use crate::error::{Error, PluginError, Result};

pub const PLUGIN_MAGIC: &[u8; 4] = b"DNP1";
pub const TAG_REQUEST: u8 = 0x01;
pub const TAG_RESPONSE: u8 = 0x02;
pub const TAG_SHUTDOWN: u8 = 0xFF;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

/// Upper bound on values preallocated from an untrusted length field.
const MAX_PREALLOC: usize = 1 << 16;

fn map_io(e: io::Error) -> PluginError {
    match e.kind() {
        io::ErrorKind::UnexpectedEof | io::ErrorKind::BrokenPipe => PluginError::Exited { status: None },
        _ => PluginError::Io(e),
    }
}

fn read_array<const N: usize>(r: &mut impl Read) -> Result<[u8; N], PluginError> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf).map_err(map_io)?;
    Ok(buf)
}

fn read_u32(r: &mut impl Read) -> Result<u32, PluginError> {
    Ok(u32::from_le_bytes(read_array(r)?))
}

fn read_f64(r: &mut impl Read) -> Result<f64, PluginError> {
    Ok(f64::from_le_bytes(read_array(r)?))
}

fn read_values(r: &mut impl Read, k: usize, dim: usize) -> Result<DMatrix<f64>, PluginError> {
    let count = k
        .checked_mul(dim)
        .ok_or_else(|| PluginError::Protocol(format!("batch of {k} × {dim} overflows")))?;
    let mut values = Vec::with_capacity(count.min(MAX_PREALLOC));
    for _ in 0..count {
        values.push(read_f64(r)?);
    }
    Ok(DMatrix::from_row_slice(k, dim, &values))
}

fn write_values(w: &mut impl Write, batch: &DMatrix<f64>) -> io::Result<()> {
    for i in 0..batch.nrows() {
        for j in 0..batch.ncols() {
            w.write_all(&batch[(i, j)].to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn write_handshake(w: &mut impl Write, dim: u32) -> io::Result<()> {
    w.write_all(PLUGIN_MAGIC)?;
    w.write_all(&dim.to_le_bytes())
}

/// Reads `DNP1 | u32 dim` and returns the dimension.
pub fn read_handshake(r: &mut impl Read) -> Result<u32, PluginError> {
    let magic: [u8; 4] = read_array(r)?;
    if &magic != PLUGIN_MAGIC {
        return Err(PluginError::Protocol(format!("bad handshake magic {magic:?}")));
    }
    read_u32(r)
}

pub fn write_request(w: &mut impl Write, sigma: f64, batch: &DMatrix<f64>) -> io::Result<()> {
    w.write_all(&[TAG_REQUEST])?;
    w.write_all(&(batch.nrows() as u32).to_le_bytes())?;
    w.write_all(&sigma.to_le_bytes())?;
    write_values(w, batch)
}

pub fn write_response(w: &mut impl Write, batch: &DMatrix<f64>) -> io::Result<()> {
    w.write_all(&[TAG_RESPONSE])?;
    w.write_all(&(batch.nrows() as u32).to_le_bytes())?;
    write_values(w, batch)
}

pub fn write_shutdown(w: &mut impl Write) -> io::Result<()> {
    w.write_all(&[TAG_SHUTDOWN])
}

/// A parent-to-child message as seen by the plugin.
#[derive(Debug, Clone, PartialEq)]
pub enum Frame {
    Request { sigma: f64, batch: DMatrix<f64> },
    Shutdown,
}

/// Server side: next frame from the parent, or `None` on a clean end of
/// stream at a frame boundary.
pub fn read_frame(r: &mut impl Read, dim: usize) -> Result<Option<Frame>, PluginError> {
    let mut tag = [0u8; 1];
    loop {
        match r.read(&mut tag) {
            Ok(0) => return Ok(None),
            Ok(_) => break,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
            Err(e) => return Err(map_io(e)),
        }
    }
    match tag[0] {
        TAG_REQUEST => {
            let k = read_u32(r)? as usize;
            let sigma = read_f64(r)?;
            let batch = read_values(r, k, dim)?;
            Ok(Some(Frame::Request { sigma, batch }))
        }
        TAG_SHUTDOWN => Ok(Some(Frame::Shutdown)),
        other => Err(PluginError::Protocol(format!("unexpected frame tag {other:#04x}"))),
    }
}

/// Client side: a response frame, checked against the request's row count.
pub fn read_response(r: &mut impl Read, dim: usize, expected_rows: usize) -> Result<DMatrix<f64>, PluginError> {
    let [tag] = read_array::<1>(r)?;
    if tag != TAG_RESPONSE {
        return Err(PluginError::Protocol(format!("expected response tag 0x02, got {tag:#04x}")));
    }
    let k = read_u32(r)? as usize;
    if k != expected_rows {
        return Err(PluginError::DimensionMismatch {
            expected: expected_rows,
            got: k,
        });
    }
    read_values(r, k, dim)
}

/// What a plugin process answers requests with.
pub enum ServeTarget<'a> {
    /// Returns every batch unchanged and accepts any dimension.
    Echo,
    Denoiser(&'a dyn Denoiser),
}

/// Run the child side of the protocol until shutdown or end of input.
pub fn serve(mut input: impl Read, output: impl Write, target: ServeTarget<'_>) -> Result<(), PluginError> {
    let mut output = BufWriter::new(output);
    let requested = read_handshake(&mut input)?;
    let dim = match &target {
        ServeTarget::Echo => requested as usize,
        ServeTarget::Denoiser(d) => d.dim(),
    };
    write_handshake(&mut output, dim as u32)?;
    output.flush()?;
    if dim != requested as usize {
        // The parent rejects the session; wait for it to hang up.
        let _ = io::copy(&mut input, &mut io::sink());
        return Ok(());
    }
    while let Some(frame) = read_frame(&mut input, dim)? {
        match frame {
            Frame::Shutdown => break,
            Frame::Request { sigma, batch } => {
                let out = match &target {
                    ServeTarget::Echo => batch,
                    ServeTarget::Denoiser(d) => d
                        .denoise_batch(&batch, sigma)
                        .map_err(|e| PluginError::Protocol(format!("denoiser failed: {e}")))?,
                };
                write_response(&mut output, &out)?;
                output.flush()?;
            }
        }
    }
    output.flush()?;
    Ok(())
}

/// Byte stream fed by a background thread so reads can time out.
struct TimedReader {
    rx: Receiver<io::Result<Vec<u8>>>,
    pending: VecDeque<u8>,
    timeout: Duration,
    closed: bool,
}

impl TimedReader {
    fn spawn(mut source: impl Read + Send + 'static, timeout: Duration) -> Self {
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            let mut buf = vec![0u8; 64 * 1024];
            loop {
                match source.read(&mut buf) {
                    Ok(0) => break,
                    Ok(n) => {
                        if tx.send(Ok(buf[..n].to_vec())).is_err() {
                            break;
                        }
                    }
                    Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
                    Err(e) => {
                        let _ = tx.send(Err(e));
                        break;
                    }
                }
            }
        });
        Self {
            rx,
            pending: VecDeque::new(),
            timeout,
            closed: false,
        }
    }
}

impl Read for TimedReader {
    fn read(&mut self, out: &mut [u8]) -> io::Result<usize> {
        if out.is_empty() {
            return Ok(0);
        }
        if self.pending.is_empty() && !self.closed {
            match self.rx.recv_timeout(self.timeout) {
                Ok(Ok(chunk)) => self.pending.extend(chunk),
                Ok(Err(e)) => return Err(e),
                Err(RecvTimeoutError::Timeout) => {
                    return Err(io::Error::new(io::ErrorKind::TimedOut, "plugin read timed out"))
                }
                Err(RecvTimeoutError::Disconnected) => self.closed = true,
            }
        }
        let n = out.len().min(self.pending.len());
        for (slot, byte) in out.iter_mut().zip(self.pending.drain(..n)) {
            *slot = byte;
        }
        Ok(n)
    }
}

struct Session {
    child: Option<Child>,
    writer: BufWriter<Box<dyn Write + Send>>,
    reader: TimedReader,
    failed: bool,
}

impl Session {
    fn classify(&mut self, err: PluginError) -> PluginError {
        self.failed = true;
        match err {
            PluginError::Io(e) if e.kind() == io::ErrorKind::TimedOut => PluginError::Timeout(self.reader.timeout),
            PluginError::Exited { .. } => PluginError::Exited {
                status: self.wait_status(Duration::from_secs(2)),
            },
            other => other,
        }
    }

    fn wait_status(&mut self, grace: Duration) -> Option<i32> {
        let child = self.child.as_mut()?;
        let deadline = Instant::now() + grace;
        loop {
            match child.try_wait() {
                Ok(Some(status)) => return status.code(),
                Ok(None) if Instant::now() < deadline => thread::sleep(Duration::from_millis(10)),
                _ => return None,
            }
        }
    }

    fn round_trip(&mut self, batch: &DMatrix<f64>, sigma: f64, dim: usize) -> Result<DMatrix<f64>, PluginError> {
        if self.failed {
            return Err(PluginError::Protocol("session already failed".into()));
        }
        let sent = write_request(&mut self.writer, sigma, batch)
            .and_then(|_| self.writer.flush())
            .map_err(map_io);
        if let Err(e) = sent {
            return Err(self.classify(e));
        }
        read_response(&mut self.reader, dim, batch.nrows()).map_err(|e| self.classify(e))
    }
}

impl Drop for Session {
    fn drop(&mut self) {
        if !self.failed {
            let _ = write_shutdown(&mut self.writer).and_then(|_| self.writer.flush());
        }
        if self.wait_status(Duration::from_secs(1)).is_none() {
            if let Some(child) = self.child.as_mut() {
                let _ = child.kill();
                let _ = child.wait();
            }
        }
    }
}

/// Client handle to an external denoiser process.
pub struct PluginDenoiser {
    session: RefCell<Session>,
    dim: usize,
}

impl std::fmt::Debug for PluginDenoiser {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PluginDenoiser").field("dim", &self.dim).finish()
    }
}

impl PluginDenoiser {
    /// Launch `command_line` (split with POSIX shell quoting rules) and perform
    /// the handshake.
    pub fn spawn(command_line: &str, dim: usize, timeout: Duration) -> Result<Self, PluginError> {
        let argv = shlex::split(command_line)
            .filter(|a| !a.is_empty())
            .ok_or_else(|| PluginError::Protocol(format!("cannot parse plugin command `{command_line}`")))?;
        let mut child = Command::new(&argv[0])
            .args(&argv[1..])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|source| PluginError::Spawn {
                command: command_line.to_string(),
                source,
            })?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        Self::start(Some(child), Box::new(stdin), stdout, dim, timeout)
    }

    /// Run the protocol over arbitrary streams, e.g. an in-process server.
    pub fn from_streams(
        reader: impl Read + Send + 'static,
        writer: impl Write + Send + 'static,
        dim: usize,
        timeout: Duration,
    ) -> Result<Self, PluginError> {
        Self::start(None, Box::new(writer), reader, dim, timeout)
    }

    fn start(
        child: Option<Child>,
        writer: Box<dyn Write + Send>,
        reader: impl Read + Send + 'static,
        dim: usize,
        timeout: Duration,
    ) -> Result<Self, PluginError> {
        let mut session = Session {
            child,
            writer: BufWriter::new(writer),
            reader: TimedReader::spawn(reader, timeout),
            failed: false,
        };
        let sent = write_handshake(&mut session.writer, dim as u32)
            .and_then(|_| session.writer.flush())
            .map_err(map_io);
        if let Err(e) = sent {
            return Err(session.classify(e));
        }
        let echoed = read_handshake(&mut session.reader).map_err(|e| session.classify(e))?;
        if echoed as usize != dim {
            session.failed = true;
            return Err(PluginError::DimensionMismatch {
                expected: dim,
                got: echoed as usize,
            });
        }
        Ok(Self {
            session: RefCell::new(session),
            dim,
        })
    }

    /// One request/response round trip for a k × dim batch.
    pub fn evaluate(&self, batch: &DMatrix<f64>, sigma: f64) -> Result<DMatrix<f64>, PluginError> {
        if batch.ncols() != self.dim {
            return Err(PluginError::DimensionMismatch {
                expected: self.dim,
                got: batch.ncols(),
            });
        }
        self.session.borrow_mut().round_trip(batch, sigma, self.dim)
    }
}

impl Denoiser for PluginDenoiser {
    fn dim(&self) -> usize {
        self.dim
    }

    fn denoise(&self, x: &DVector<f64>, sigma: f64) -> Result<DVector<f64>> {
        let out = self.evaluate(&DMatrix::from_row_slice(1, x.len(), x.as_slice()), sigma)?;
        Ok(out.row(0).transpose())
    }

    fn denoise_batch(&self, batch: &DMatrix<f64>, sigma: f64) -> Result<DMatrix<f64>> {
        Ok(self.evaluate(batch, sigma)?)
    }
}

pub fn external_denoise(endpoint: &PluginDenoiser, batch: &DMatrix<f64>, sigma: f64) -> Result<DMatrix<f64>> {
    if !(sigma > 0.0) {
        return Err(Error::invalid(format!("plugin sigma must be positive, got {sigma}")));
    }
    Ok(endpoint.evaluate(batch, sigma)?)
}
