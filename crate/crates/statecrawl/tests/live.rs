use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread;

use statecrawl::live::{request_url, LiveArchive, LiveConfig};
use statecrawl_core::{ArchiveBackend, LookupError, UriR};

fn timemap(original: &str, n: usize) -> String {
    let mut body = format!("<{original}>; rel=\"original\"");
    for i in 0..n {
        body.push_str(&format!(
            ",\n<http://archive.test/20{:02}0101000000/{original}>; rel=\"memento\"; datetime=\"Sun, 01 Jan 20{:02} 00:00:00 GMT\"",
            10 + i,
            10 + i
        ));
    }
    body
}

/// Routes on the looked-up URI's path: `ok/N/..` with N mementos, `missing`
/// 404, `flaky` 503 once then 2 mementos, `forbidden` 403, `broken` bad body.
fn serve() -> (String, Arc<Mutex<BTreeMap<String, u32>>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let hits = Arc::new(Mutex::new(BTreeMap::new()));
    let seen = hits.clone();
    thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            let seen = seen.clone();
            thread::spawn(move || {
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                loop {
                    let mut header = String::new();
                    if reader.read_line(&mut header).unwrap() == 0 || header == "\r\n" {
                        break;
                    }
                }
                let path = line.split_whitespace().nth(1).unwrap_or("/").to_string();
                let count = {
                    let mut hits = seen.lock().unwrap();
                    let c = hits.entry(path.clone()).or_insert(0);
                    *c += 1;
                    *c
                };
                let route = path.rsplit_once(".test/").map_or("", |(_, r)| r);
                let segments: Vec<&str> = route.splitn(3, '/').collect();
                let (status, body) = match segments[0] {
                    "ok" => (200, timemap("http://x.test/", segments[1].parse().unwrap())),
                    "missing" => (404, String::new()),
                    "flaky" if count == 1 => (503, String::new()),
                    "flaky" => (200, timemap("http://x.test/", 2)),
                    "forbidden" => (403, String::new()),
                    "broken" => (200, "<http://x.test/; rel=memento".to_string()),
                    _ => (500, String::new()),
                };
                let reply = format!(
                    "HTTP/1.1 {status} X\r\nContent-Type: application/link-format\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                    body.len()
                );
                let _ = stream.write_all(reply.as_bytes());
            });
        }
    });
    (format!("http://{addr}"), hits)
}

fn config() -> LiveConfig {
    LiveConfig {
        timeout_secs: 5.0,
        attempts: 3,
        backoff_ms: 10,
        politeness_ms: 0,
        ..LiveConfig::default()
    }
}

fn uri(s: &str) -> UriR {
    UriR::new(s).unwrap()
}

#[test]
fn request_url_template() {
    let u = uri("HTTP://Example.test/a?b=1#frag");
    assert_eq!(request_url("http://wb.test/timemap/link/", &u), "http://wb.test/timemap/link/http://example.test/a?b=1");
    assert_eq!(
        request_url("http://wb.test/tm?url={uri}&x=1", &u),
        "http://wb.test/tm?url=http://example.test/a?b=1&x=1"
    );
}

#[test]
fn status_codes_map_to_counts_and_errors() {
    let (base, hits) = serve();
    let archive = LiveArchive::new(format!("{base}/"), config());
    let lookup = |route: &str| archive.lookup(&uri(&format!("http://h.test/{route}")));
    let requests = |before: u64| archive.requests() - before;

    assert_eq!(lookup("ok/3/page"), Ok(3));
    assert_eq!(lookup("ok/0/page"), Ok(0));
    assert_eq!(lookup("missing/page"), Ok(0));

    let before = archive.requests();
    assert_eq!(lookup("flaky/page"), Ok(2));
    assert_eq!(requests(before), 2);

    let before = archive.requests();
    assert_eq!(lookup("forbidden/page"), Err(LookupError::Status(403)));
    assert_eq!(requests(before), 1);

    assert!(matches!(lookup("broken/page"), Err(LookupError::Parse(_))));

    let before = archive.requests();
    assert_eq!(lookup("elsewhere"), Err(LookupError::Status(500)));
    assert_eq!(requests(before), 3);
    assert_eq!(hits.lock().unwrap()["/http://h.test/elsewhere"], 3);
}

#[test]
fn unreachable_endpoint_is_a_network_error() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let archive = LiveArchive::new(format!("http://127.0.0.1:{port}/"), LiveConfig { attempts: 2, ..config() });
    assert!(matches!(archive.lookup(&uri("http://h.test/")), Err(LookupError::Network(_))));
    assert_eq!(archive.requests(), 2);
}

#[test]
fn lookup_all_preserves_order() {
    let (base, _) = serve();
    let archive = LiveArchive::new(format!("{base}/"), LiveConfig { workers: 4, ..config() });
    let paths: Vec<String> = (0..24)
        .map(|i| match i % 3 {
            0 => format!("ok/{}/p{i}", i % 5),
            1 => format!("missing/p{i}"),
            _ => format!("forbidden/p{i}"),
        })
        .collect();
    let uris: Vec<UriR> = paths.iter().map(|p| uri(&format!("http://h.test/{p}"))).collect();
    let per_uri = LiveArchive::new(format!("{base}/"), config());
    let one_by_one: Vec<_> = uris.iter().map(|u| per_uri.lookup(u)).collect();
    let all = archive.lookup_all(&uris);
    assert_eq!(all, one_by_one);
    assert_eq!(all.len(), 24);
    assert_eq!(all[1..4], [Ok(0), Err(LookupError::Status(403)), Ok(3)]);
    assert_eq!(all[21], Ok(1));
}
