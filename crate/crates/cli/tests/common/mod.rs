#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::Path;
use std::process::{Command, Output};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use vtg_core::eval::Annotation;
use vtg_core::io::{write_jsonl, write_track};
use vtg_core::pipeline::TrackStore;
use vtg_core::planner::QueryPlan;
use vtg_core::synth::PlantedFixture;

pub fn vtg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vtg"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("vtg binary runs")
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 temp path")
}

/// What the stub endpoint does with one request.
#[derive(Debug, Clone)]
pub enum Reply {
    /// 200 with a chat completion whose message content is the given text.
    Content(String),
    /// 200 with a body that is not a chat completion.
    Garbage,
    /// Accept, wait, then close without answering.
    Hang(Duration),
}

/// Chat-completions stand-in on a loopback port, counting requests.
pub struct StubServer {
    pub url: String,
    hits: Arc<AtomicUsize>,
}

impl StubServer {
    pub fn start(reply: Reply) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind loopback");
        let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
        let hits = Arc::new(AtomicUsize::new(0));
        let counter = Arc::clone(&hits);
        thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(stream) = stream else { continue };
                counter.fetch_add(1, Ordering::SeqCst);
                let reply = reply.clone();
                thread::spawn(move || serve(stream, reply));
            }
        });
        Self { url, hits }
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }
}

fn serve(stream: TcpStream, reply: Reply) {
    let mut reader = BufReader::new(stream);
    let mut length = 0usize;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line).unwrap_or(0) == 0 {
            return;
        }
        let line = line.trim_end();
        if line.is_empty() {
            break;
        }
        if let Some((name, value)) = line.split_once(':') {
            if name.eq_ignore_ascii_case("content-length") {
                length = value.trim().parse().unwrap_or(0);
            }
        }
    }
    let mut body = vec![0; length];
    if reader.read_exact(&mut body).is_err() {
        return;
    }
    let payload = match reply {
        Reply::Content(text) => serde_json::json!({
            "choices": [{"index": 0, "message": {"role": "assistant", "content": text}}]
        })
        .to_string(),
        Reply::Garbage => "{\"unexpected\": true}".to_string(),
        Reply::Hang(d) => {
            thread::sleep(d);
            return;
        }
    };
    let mut stream = reader.into_inner();
    let _ = write!(
        stream,
        "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
        payload.len(),
        payload
    );
    let _ = stream.flush();
}

/// A well-formed two-step plan as a model would return it.
pub fn two_step_reply() -> String {
    r#"Here is the plan:
{"reasoning": "opening comes before taking", "relation": "sequentially",
 "sub_events": [{"description": "opens the fridge", "order": 0},
                {"description": "takes out milk", "order": 1}]}"#
        .to_string()
}

/// Writes fixtures as a track store plus annotation file. Each track goes to
/// the per-sub-event path of the single-event plan for its query.
pub fn write_fixtures(fixtures: &[PlantedFixture], tracks: &Path, annotations: &Path, ext: &str) {
    let store = TrackStore::new(tracks);
    for f in fixtures {
        let plan = QueryPlan::fallback(&f.annotation.query);
        let path = store.sub_event_path(&f.annotation.video_id, &plan.sub_events[0].description, ext);
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        write_track(&f.track, &path).unwrap();
    }
    let anns: Vec<Annotation> = fixtures.iter().map(|f| f.annotation.clone()).collect();
    write_jsonl(annotations, &anns).unwrap();
}
