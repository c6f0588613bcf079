use std::collections::VecDeque;
use std::io::{BufRead, BufReader, ErrorKind, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Condvar, Mutex, MutexGuard};
use std::thread::{self, JoinHandle};
use std::time::Duration;

use super::protocol::{execute_job, prepare, JobOutput, JobRequest, JobStatus, Reply, Request};
use super::DispatchError;

/// Longest accepted request line in bytes; longer lines close the connection.
pub const MAX_LINE: usize = 1 << 22;

const TICK: Duration = Duration::from_millis(20);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ServerConfig {
    pub workers: usize,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            workers: thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1),
        }
    }
}

struct Job {
    request: JobRequest,
    status: JobStatus,
    result: Option<JobOutput>,
    error: Option<String>,
}

struct Store {
    jobs: Vec<Job>,
    queue: VecDeque<usize>,
    draining: bool,
}

struct Shared {
    store: Mutex<Store>,
    work: Condvar,
    stopped: AtomicBool,
}

impl Shared {
    fn lock(&self) -> MutexGuard<'_, Store> {
        self.store.lock().unwrap_or_else(|p| p.into_inner())
    }

    fn begin_drain(&self) {
        self.lock().draining = true;
        self.work.notify_all();
    }
}

pub struct ServerHandle {
    addr: SocketAddr,
    shared: Arc<Shared>,
    threads: Vec<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Stops accepting submissions; queued jobs still run.
    pub fn shutdown(&self) {
        self.shared.begin_drain();
    }

    pub fn is_stopped(&self) -> bool {
        self.shared.stopped.load(Ordering::SeqCst)
    }

    /// Blocks until a shutdown has been requested and the queue drained.
    /// Connections that are already open keep answering poll and fetch
    /// until their clients disconnect.
    pub fn join(mut self) {
        for t in self.threads.drain(..) {
            let _ = t.join();
        }
    }
}

/// Binds `addr` and starts the acceptor and worker threads.
pub fn serve(addr: &str, config: ServerConfig) -> Result<ServerHandle, DispatchError> {
    let listener =
        TcpListener::bind(addr).map_err(|e| DispatchError::Server(format!("bind {addr}: {e}")))?;
    listener.set_nonblocking(true)?;
    let local = listener.local_addr()?;
    let shared = Arc::new(Shared {
        store: Mutex::new(Store {
            jobs: Vec::new(),
            queue: VecDeque::new(),
            draining: false,
        }),
        work: Condvar::new(),
        stopped: AtomicBool::new(false),
    });
    let workers: Vec<JoinHandle<()>> = (0..config.workers.max(1))
        .map(|_| {
            let s = shared.clone();
            thread::spawn(move || worker(&s))
        })
        .collect();
    let monitor = {
        let s = shared.clone();
        thread::spawn(move || {
            for w in workers {
                let _ = w.join();
            }
            s.stopped.store(true, Ordering::SeqCst);
        })
    };
    let acceptor = {
        let s = shared.clone();
        thread::spawn(move || accept_loop(listener, &s))
    };
    Ok(ServerHandle {
        addr: local,
        shared,
        threads: vec![monitor, acceptor],
    })
}

fn worker(shared: &Shared) {
    loop {
        let (id, request) = {
            let mut store = shared.lock();
            loop {
                if let Some(id) = store.queue.pop_front() {
                    store.jobs[id].status = JobStatus::Running;
                    break (id, store.jobs[id].request.clone());
                }
                if store.draining {
                    return;
                }
                store = shared.work.wait(store).unwrap_or_else(|p| p.into_inner());
            }
        };
        let outcome = catch_unwind(AssertUnwindSafe(|| execute_job(&request)))
            .unwrap_or_else(|_| Err("internal error while executing job".into()));
        let mut store = shared.lock();
        let job = &mut store.jobs[id];
        match outcome {
            Ok(out) => {
                job.result = Some(out);
                job.status = JobStatus::Done;
            }
            Err(e) => {
                job.error = Some(e);
                job.status = JobStatus::Failed;
            }
        }
    }
}

fn accept_loop(listener: TcpListener, shared: &Arc<Shared>) {
    while !shared.stopped.load(Ordering::SeqCst) {
        match listener.accept() {
            Ok((stream, _)) => {
                let s = shared.clone();
                thread::spawn(move || {
                    let _ = handle_connection(stream, &s);
                });
            }
            Err(e) if e.kind() == ErrorKind::WouldBlock => thread::sleep(TICK),
            Err(_) => thread::sleep(TICK),
        }
    }
}

fn handle_connection(stream: TcpStream, shared: &Shared) -> std::io::Result<()> {
    stream.set_nonblocking(false)?;
    stream.set_read_timeout(Some(TICK))?;
    let mut writer = stream.try_clone()?;
    let mut reader = BufReader::new(stream);
    let mut buf = Vec::new();
    loop {
        match reader.read_until(b'\n', &mut buf) {
            Ok(0) => return Ok(()),
            Ok(_) => {}
            Err(e) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => {
                if buf.len() > MAX_LINE {
                    return send(&mut writer, &Reply::error("request line too long"));
                }
                continue;
            }
            Err(e) => return Err(e),
        }
        if buf.last() != Some(&b'\n') && buf.len() <= MAX_LINE {
            // EOF without a trailing newline still completes the request
            let reply = handle_line(&buf, shared);
            return send(&mut writer, &reply);
        }
        if buf.len() > MAX_LINE {
            return send(&mut writer, &Reply::error("request line too long"));
        }
        let reply = handle_line(&buf, shared);
        buf.clear();
        send(&mut writer, &reply)?;
    }
}

fn send(w: &mut TcpStream, reply: &Reply) -> std::io::Result<()> {
    let mut line = serde_json::to_vec(reply).expect("reply serialises");
    line.push(b'\n');
    w.write_all(&line)?;
    w.flush()
}

fn handle_line(raw: &[u8], shared: &Shared) -> Reply {
    let Ok(text) = std::str::from_utf8(raw) else {
        return Reply::error("request is not valid UTF-8");
    };
    let text = text.trim_end_matches(['\n', '\r']);
    if text.trim().is_empty() {
        return Reply::error("empty request");
    }
    match serde_json::from_str::<Request>(text) {
        Ok(req) => dispatch(req, shared),
        Err(e) => Reply::error(format!("bad request: {e}")),
    }
}

fn dispatch(req: Request, shared: &Shared) -> Reply {
    match req {
        Request::Submit(job) => {
            let mut store = shared.lock();
            if store.draining {
                return Reply::error("server shutting down");
            }
            let id = store.jobs.len();
            let (status, error) = match prepare(&job) {
                Ok(_) => (JobStatus::Queued, None),
                Err(e) => (JobStatus::Failed, Some(e)),
            };
            store.jobs.push(Job {
                request: job,
                status,
                result: None,
                error,
            });
            if status == JobStatus::Queued {
                store.queue.push_back(id);
                shared.work.notify_one();
            }
            Reply {
                ok: true,
                job_id: Some(id as u64 + 1),
                ..Default::default()
            }
        }
        Request::Poll { job_id } => with_job(shared, job_id, |job| Reply {
            ok: true,
            job_id: Some(job_id),
            status: Some(job.status),
            error: job.error.clone(),
            ..Default::default()
        }),
        Request::Fetch { job_id } => with_job(shared, job_id, |job| match job.status {
            JobStatus::Done => Reply {
                ok: true,
                job_id: Some(job_id),
                status: Some(job.status),
                result: job.result.clone(),
                ..Default::default()
            },
            JobStatus::Failed => Reply {
                job_id: Some(job_id),
                status: Some(job.status),
                ..Reply::error(job.error.clone().unwrap_or_default())
            },
            _ => Reply {
                job_id: Some(job_id),
                status: Some(job.status),
                ..Reply::error("job not done")
            },
        }),
        Request::Shutdown => {
            shared.begin_drain();
            Reply {
                ok: true,
                ..Default::default()
            }
        }
    }
}

fn with_job(shared: &Shared, job_id: u64, f: impl FnOnce(&Job) -> Reply) -> Reply {
    let store = shared.lock();
    match job_id
        .checked_sub(1)
        .and_then(|i| store.jobs.get(i as usize))
    {
        Some(job) => f(job),
        None => Reply::error("unknown job"),
    }
}
