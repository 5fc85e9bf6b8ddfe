//! Deterministic stand-ins for the network, the model and the clock, used by
//! the test suites and benchmarks.

use std::collections::{HashMap, VecDeque};
use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use crate::fetch::{Document, FetchError, FetchLimits, Fetcher};
use crate::llm::{Backend, CallError, Completion, GenerationParams};
use crate::retrieval::Summarize;
use crate::runner::Clock;

/// A request received by [`FixtureServer`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordedRequest {
    pub method: String,
    /// Path including the query string.
    pub path: String,
    pub body: String,
}

/// Minimal HTTP/1.1 server on 127.0.0.1 answering fixed routes. Routes match
/// on the path without query string; anything else is a 404.
pub struct FixtureServer {
    addr: std::net::SocketAddr,
    requests: Arc<Mutex<Vec<RecordedRequest>>>,
    stop: Arc<AtomicBool>,
}

type Route = (u16, String, String);

impl FixtureServer {
    pub fn start(routes: Vec<(&str, u16, &str, String)>) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind fixture server");
        let addr = listener.local_addr().expect("local addr");
        let routes: Arc<HashMap<String, Route>> = Arc::new(
            routes
                .into_iter()
                .map(|(p, s, ct, body)| (p.to_string(), (s, ct.to_string(), body)))
                .collect(),
        );
        let requests = Arc::new(Mutex::new(Vec::new()));
        let stop = Arc::new(AtomicBool::new(false));
        let (reqs, stop_flag) = (requests.clone(), stop.clone());
        thread::spawn(move || {
            for stream in listener.incoming() {
                if stop_flag.load(Ordering::SeqCst) {
                    break;
                }
                let Ok(stream) = stream else { continue };
                let (routes, reqs) = (routes.clone(), reqs.clone());
                thread::spawn(move || {
                    let _ = serve(stream, &routes, &reqs);
                });
            }
        });
        Self { addr, requests, stop }
    }

    pub fn url(&self, path: &str) -> String {
        format!("http://{}{}", self.addr, path)
    }

    pub fn requests(&self) -> Vec<RecordedRequest> {
        self.requests.lock().expect("request list poisoned").clone()
    }
}

impl Drop for FixtureServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        let _ = TcpStream::connect(self.addr);
    }
}

fn serve(
    stream: TcpStream,
    routes: &HashMap<String, Route>,
    requests: &Mutex<Vec<RecordedRequest>>,
) -> std::io::Result<()> {
    stream.set_read_timeout(Some(Duration::from_secs(5)))?;
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut request_line = String::new();
    reader.read_line(&mut request_line)?;
    let mut parts = request_line.split_whitespace();
    let method = parts.next().unwrap_or("").to_string();
    let path = parts.next().unwrap_or("/").to_string();
    let mut content_length = 0usize;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line)? == 0 || line.trim().is_empty() {
            break;
        }
        if let Some((k, v)) = line.split_once(':') {
            if k.trim().eq_ignore_ascii_case("content-length") {
                content_length = v.trim().parse().unwrap_or(0);
            }
        }
    }
    let mut body = vec![0; content_length];
    reader.read_exact(&mut body)?;
    requests.lock().expect("request list poisoned").push(RecordedRequest {
        method,
        path: path.clone(),
        body: String::from_utf8_lossy(&body).into_owned(),
    });
    let route_path = path.split('?').next().unwrap_or("");
    let (status, content_type, body) = routes
        .get(route_path)
        .cloned()
        .unwrap_or((404, "text/plain".into(), "not found".into()));
    let mut stream = stream;
    write!(
        stream,
        "HTTP/1.1 {status} X\r\nContent-Type: {content_type}\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    )?;
    stream.flush()
}

type Responder = dyn Fn(&str) -> Result<String, CallError> + Send + Sync;

enum Script {
    Sequence(Mutex<VecDeque<Result<String, CallError>>>),
    Function(Box<Responder>),
}

/// Scripted generation backend. Counts calls, records prompts and tracks
/// the highest number of concurrent calls.
pub struct ScriptedModel {
    script: Script,
    delay: Duration,
    calls: AtomicUsize,
    active: AtomicUsize,
    peak: AtomicUsize,
    prompts: Mutex<Vec<String>>,
}

impl ScriptedModel {
    fn with_script(script: Script) -> Self {
        Self {
            script,
            delay: Duration::ZERO,
            calls: AtomicUsize::new(0),
            active: AtomicUsize::new(0),
            peak: AtomicUsize::new(0),
            prompts: Mutex::new(Vec::new()),
        }
    }

    /// Replies in order; once exhausted every call fails as a server error.
    pub fn sequence(replies: Vec<Result<String, CallError>>) -> Self {
        Self::with_script(Script::Sequence(Mutex::new(replies.into())))
    }

    pub fn from_fn(f: impl Fn(&str) -> Result<String, CallError> + Send + Sync + 'static) -> Self {
        Self::with_script(Script::Function(Box::new(f)))
    }

    pub fn echo() -> Self {
        Self::from_fn(|p| Ok(p.to_string()))
    }

    pub fn fixed(reply: &str) -> Self {
        let reply = reply.to_string();
        Self::from_fn(move |_| Ok(reply.clone()))
    }

    pub fn fixed_error(err: CallError) -> Self {
        Self::from_fn(move |_| Err(err.clone()))
    }

    pub fn with_delay(mut self, delay: Duration) -> Self {
        self.delay = delay;
        self
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn peak_concurrency(&self) -> usize {
        self.peak.load(Ordering::SeqCst)
    }

    pub fn prompts(&self) -> Vec<String> {
        self.prompts.lock().expect("prompt list poisoned").clone()
    }
}

impl Backend for ScriptedModel {
    fn complete(&self, prompt: &str, _params: &GenerationParams) -> Result<Completion, CallError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let now = self.active.fetch_add(1, Ordering::SeqCst) + 1;
        self.peak.fetch_max(now, Ordering::SeqCst);
        self.prompts.lock().expect("prompt list poisoned").push(prompt.to_string());
        if !self.delay.is_zero() {
            thread::sleep(self.delay);
        }
        let reply = match &self.script {
            Script::Sequence(q) => q.lock().expect("script poisoned").pop_front().unwrap_or(Err(CallError::Server(599))),
            Script::Function(f) => f(prompt),
        };
        self.active.fetch_sub(1, Ordering::SeqCst);
        reply.map(|text| Completion { text, truncated: false })
    }
}

/// Fetcher serving canned documents by URL; unknown URLs are 404s.
#[derive(Default)]
pub struct MapFetcher {
    pages: HashMap<String, Result<Document, FetchError>>,
    fetches: AtomicUsize,
}

impl MapFetcher {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn page(mut self, url: &str, response: Result<Document, FetchError>) -> Self {
        self.pages.insert(url.to_string(), response);
        self
    }

    pub fn fetch_count(&self) -> usize {
        self.fetches.load(Ordering::SeqCst)
    }
}

impl Fetcher for MapFetcher {
    fn fetch(&self, url: &str, _limits: &FetchLimits) -> Result<Document, FetchError> {
        self.fetches.fetch_add(1, Ordering::SeqCst);
        self.pages.get(url).cloned().unwrap_or(Err(FetchError::Status(404)))
    }
}

/// Summarizer returning the first sentence of the page.
#[derive(Default)]
pub struct CountingSummarizer {
    calls: AtomicUsize,
}

impl CountingSummarizer {
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl Summarize for CountingSummarizer {
    fn summarize(&self, article: &str, _focus: Option<&str>) -> Result<String, String> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        Ok(article.split('.').next().unwrap_or("").trim().to_string())
    }
}

/// Clock that always reports the same instant.
#[derive(Debug, Clone)]
pub struct FixedClock(pub String);

impl Default for FixedClock {
    fn default() -> Self {
        Self("2025-01-01T00:00:00Z".into())
    }
}

impl Clock for FixedClock {
    fn now_rfc3339(&self) -> String {
        self.0.clone()
    }
}
