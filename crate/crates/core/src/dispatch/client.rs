use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::thread;
use std::time::{Duration, Instant};

use super::protocol::{JobRequest, JobStatus, Reply, Request};
use super::DispatchError;

/// Blocking line-protocol client; one request in flight at a time.
pub struct Client {
    reader: BufReader<TcpStream>,
    writer: TcpStream,
}

impl Client {
    pub fn connect(addr: &str) -> Result<Self, DispatchError> {
        let stream = TcpStream::connect(addr)
            .map_err(|e| DispatchError::Io(format!("connect {addr}: {e}")))?;
        Ok(Client {
            writer: stream.try_clone()?,
            reader: BufReader::new(stream),
        })
    }

    /// Sends one raw line (a newline is appended) and reads one reply line.
    pub fn send_line(&mut self, line: &str) -> Result<String, DispatchError> {
        self.writer.write_all(line.as_bytes())?;
        self.writer.write_all(b"\n")?;
        self.writer.flush()?;
        let mut reply = String::new();
        if self.reader.read_line(&mut reply)? == 0 {
            return Err(DispatchError::Protocol("connection closed".into()));
        }
        Ok(reply.trim_end().to_string())
    }

    pub fn request(&mut self, req: &Request) -> Result<Reply, DispatchError> {
        let line =
            serde_json::to_string(req).map_err(|e| DispatchError::Protocol(e.to_string()))?;
        let reply = self.send_line(&line)?;
        serde_json::from_str(&reply).map_err(|e| DispatchError::Protocol(format!("{e}: {reply}")))
    }

    pub fn submit(&mut self, job: &JobRequest) -> Result<u64, DispatchError> {
        let reply = self.request(&Request::Submit(job.clone()))?;
        match (reply.ok, reply.job_id) {
            (true, Some(id)) => Ok(id),
            _ => Err(DispatchError::Server(
                reply.error.unwrap_or_else(|| "submit rejected".into()),
            )),
        }
    }

    pub fn poll(&mut self, job_id: u64) -> Result<Reply, DispatchError> {
        self.request(&Request::Poll { job_id })
    }

    pub fn fetch(&mut self, job_id: u64) -> Result<Reply, DispatchError> {
        self.request(&Request::Fetch { job_id })
    }

    /// Polls until the job is done or failed, then fetches it.
    pub fn wait(&mut self, job_id: u64, timeout: Duration) -> Result<Reply, DispatchError> {
        let deadline = Instant::now() + timeout;
        loop {
            let p = self.poll(job_id)?;
            if !p.ok {
                return Err(DispatchError::Server(p.error.unwrap_or_default()));
            }
            if matches!(p.status, Some(JobStatus::Done | JobStatus::Failed)) {
                return self.fetch(job_id);
            }
            if Instant::now() > deadline {
                return Err(DispatchError::Server(format!("job {job_id} timed out")));
            }
            thread::sleep(Duration::from_millis(5));
        }
    }

    pub fn shutdown(&mut self) -> Result<(), DispatchError> {
        let reply = self.request(&Request::Shutdown)?;
        if reply.ok {
            Ok(())
        } else {
            Err(DispatchError::Server(reply.error.unwrap_or_default()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispatch::{serve, Mode, ServerConfig};

    #[test]
    fn round_trip_and_errors() {
        let server = serve("127.0.0.1:0", ServerConfig { workers: 2 }).unwrap();
        let addr = server.local_addr().to_string();
        let mut c = Client::connect(&addr).unwrap();
        let job = JobRequest {
            circuit: "OPENQASM 2.0;\nqreg q[2];\nh q[0];\ncx q[0],q[1];\n".into(),
            observable: serde_json::json!([{"coeff": 1.0, "pauli": "ZZ"}]),
            mode: Mode::Exact,
        };
        let id = c.submit(&job).unwrap();
        let r = c.wait(id, Duration::from_secs(10)).unwrap();
        assert!((r.result.unwrap().expectation.unwrap() - 1.0).abs() < 1e-12);
        let unknown = c.poll(999).unwrap();
        assert_eq!(
            (unknown.ok, unknown.error.as_deref()),
            (false, Some("unknown job"))
        );
        let garbage = c.send_line("{not json").unwrap();
        assert!(garbage.starts_with(r#"{"ok":false"#));
        c.shutdown().unwrap();
        assert!(c.submit(&job).is_err());
        server.join();
    }
}
