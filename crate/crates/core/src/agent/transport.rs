use std::io::{self, BufRead, BufReader, Read, Write};
use std::net::{Shutdown, TcpStream};
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, TryRecvError};
use std::thread;
use std::time::Duration;

use super::protocol::Transport;

type Connector = Box<dyn FnMut() -> io::Result<Connection> + Send>;

struct Connection {
    writer: Box<dyn Write + Send>,
    lines: Receiver<io::Result<String>>,
    child: Option<Child>,
    socket: Option<TcpStream>,
}

impl Drop for Connection {
    fn drop(&mut self) {
        if let Some(child) = self.child.as_mut() {
            kill_tree(child);
            let _ = child.wait();
        }
        if let Some(socket) = self.socket.as_ref() {
            let _ = socket.shutdown(Shutdown::Both);
        }
    }
}

/// Kill the agent and anything it started. Agents run in their own process
/// group, so a shell wrapper cannot leave orphans holding our stdio open.
#[cfg(unix)]
fn kill_tree(child: &mut Child) {
    if let Ok(pid) = libc::pid_t::try_from(child.id()) {
        // SAFETY: plain signal delivery to a process group we created
        unsafe {
            libc::killpg(pid, libc::SIGKILL);
        }
    }
    let _ = child.kill();
}

#[cfg(not(unix))]
fn kill_tree(child: &mut Child) {
    let _ = child.kill();
}

/// Read `\n`-terminated lines on a background thread. Invalid UTF-8 is
/// replaced rather than rejected; EOF is delivered as `UnexpectedEof`.
fn spawn_reader<R: Read + Send + 'static>(source: R) -> Receiver<io::Result<String>> {
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        let mut reader = BufReader::new(source);
        let mut buf = Vec::new();
        loop {
            buf.clear();
            let item = match reader.read_until(b'\n', &mut buf) {
                Ok(0) => Err(io::Error::new(io::ErrorKind::UnexpectedEof, "agent closed its output")),
                Ok(_) => {
                    while matches!(buf.last(), Some(b'\n' | b'\r')) {
                        buf.pop();
                    }
                    Ok(String::from_utf8_lossy(&buf).into_owned())
                }
                Err(e) => Err(e),
            };
            let done = item.is_err();
            if tx.send(item).is_err() || done {
                break;
            }
        }
    });
    rx
}

/// Transport over a byte stream: a child process's stdio or a TCP socket.
pub struct StreamTransport {
    connect: Connector,
    conn: Option<Connection>,
    pending_error: Option<io::Error>,
}

impl StreamTransport {
    fn with_connector(mut connect: Connector) -> io::Result<Self> {
        let conn = connect()?;
        Ok(Self {
            connect,
            conn: Some(conn),
            pending_error: None,
        })
    }

    /// Run `command` through `sh -c` and talk over its stdin/stdout.
    pub fn spawn(command: &str) -> io::Result<Self> {
        let command = command.to_string();
        Self::with_connector(Box::new(move || {
            let mut cmd = Command::new("sh");
            cmd.arg("-c")
                .arg(&command)
                .stdin(Stdio::piped())
                .stdout(Stdio::piped())
                .stderr(Stdio::inherit());
            #[cfg(unix)]
            {
                use std::os::unix::process::CommandExt;
                cmd.process_group(0);
            }
            let mut child = cmd.spawn()?;
            let stdin = child.stdin.take().expect("stdin is piped");
            let stdout = child.stdout.take().expect("stdout is piped");
            Ok(Connection {
                writer: Box::new(stdin),
                lines: spawn_reader(stdout),
                child: Some(child),
                socket: None,
            })
        }))
    }

    /// Connect to an agent listening on `addr` (`host:port`).
    pub fn tcp(addr: &str) -> io::Result<Self> {
        let addr = addr.to_string();
        Self::with_connector(Box::new(move || {
            let stream = TcpStream::connect(&addr)?;
            stream.set_nodelay(true)?;
            let reader = stream.try_clone()?;
            let socket = stream.try_clone()?;
            Ok(Connection {
                writer: Box::new(stream),
                lines: spawn_reader(reader),
                child: None,
                socket: Some(socket),
            })
        }))
    }

    fn conn(&mut self) -> io::Result<&mut Connection> {
        self.conn
            .as_mut()
            .ok_or_else(|| io::Error::new(io::ErrorKind::NotConnected, "agent channel is closed"))
    }
}

impl Transport for StreamTransport {
    fn send_line(&mut self, line: &str) -> io::Result<()> {
        let conn = self.conn()?;
        conn.writer.write_all(line.as_bytes())?;
        conn.writer.write_all(b"\n")?;
        conn.writer.flush()
    }

    fn recv_line(&mut self, timeout: Duration) -> io::Result<Option<String>> {
        if let Some(e) = self.pending_error.take() {
            return Err(e);
        }
        match self.conn()?.lines.recv_timeout(timeout) {
            Ok(Ok(line)) => Ok(Some(line)),
            Ok(Err(e)) => Err(e),
            Err(RecvTimeoutError::Timeout) => Ok(None),
            Err(RecvTimeoutError::Disconnected) => {
                Err(io::Error::new(io::ErrorKind::BrokenPipe, "agent reader stopped"))
            }
        }
    }

    fn discard_pending(&mut self) {
        let Some(conn) = self.conn.as_mut() else {
            return;
        };
        loop {
            match conn.lines.try_recv() {
                Ok(Ok(_stale)) => continue,
                Ok(Err(e)) => {
                    self.pending_error = Some(e);
                    break;
                }
                Err(TryRecvError::Empty) => break,
                Err(TryRecvError::Disconnected) => {
                    self.pending_error =
                        Some(io::Error::new(io::ErrorKind::BrokenPipe, "agent reader stopped"));
                    break;
                }
            }
        }
    }

    fn reconnect(&mut self) -> io::Result<()> {
        self.conn = None;
        self.pending_error = None;
        self.conn = Some((self.connect)()?);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::protocol::serve_lines;
    use std::net::TcpListener;

    #[test]
    fn child_process_round_trip() {
        let mut t = StreamTransport::spawn("while read line; do echo '{\"type\":\"decision\",\"text\":\"DECISION: idle\"}'; done").unwrap();
        t.send_line("{}").unwrap();
        let reply = t.recv_line(Duration::from_secs(5)).unwrap().unwrap();
        assert!(reply.contains("DECISION: idle"));
    }

    #[test]
    fn child_exit_is_a_transport_error() {
        let mut t = StreamTransport::spawn("exit 0").unwrap();
        let _ = t.send_line("{}");
        let err = t.recv_line(Duration::from_secs(5)).unwrap_err();
        assert_eq!(err.kind(), io::ErrorKind::UnexpectedEof);
        t.reconnect().unwrap();
    }

    #[test]
    fn silent_child_times_out() {
        let mut t = StreamTransport::spawn("sleep 5").unwrap();
        t.send_line("{}").unwrap();
        assert!(t.recv_line(Duration::from_millis(50)).unwrap().is_none());
    }

    #[test]
    fn tcp_round_trip() {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let server = thread::spawn(move || {
            let (stream, _) = listener.accept().unwrap();
            let reader = BufReader::new(stream.try_clone().unwrap());
            serve_lines(reader, stream, |_| "DECISION: accelerate".to_string()).unwrap()
        });
        let mut t = StreamTransport::tcp(&addr.to_string()).unwrap();
        let req = r#"{"type":"decision_request","frame":0,"system":"","scene":"","task":"","lidar":null,"history":[]}"#;
        t.send_line(req).unwrap();
        let reply = t.recv_line(Duration::from_secs(5)).unwrap().unwrap();
        assert!(reply.contains("accelerate"));
        drop(t);
        assert_eq!(server.join().unwrap(), 1);
    }
}
