//! Segmentation client against a local HTTP stub.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use hoicue::backends::{Backend, BackendConfig, BackendKind};
use hoicue::dataset::{make_synthetic_suite, Suite};
use hoicue::evaluator::{Harness, RunConfig};
use hoicue::masks::{fetch_masks_remote, RemoteMaskClient};
use hoicue::prompting::StrategyFlags;
use hoicue::{Error, Frame};

/// Serves `replies` in a loop and records every request body.
fn stub(status: u16, body: String) -> (String, Arc<Mutex<Vec<Vec<u8>>>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/segment", listener.local_addr().unwrap());
    let seen = Arc::new(Mutex::new(Vec::new()));
    let log = seen.clone();
    thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { break };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut length = 0usize;
            loop {
                let mut line = String::new();
                if reader.read_line(&mut line).unwrap_or(0) == 0 {
                    break;
                }
                let line = line.trim_end();
                if line.is_empty() {
                    break;
                }
                if let Some((k, v)) = line.split_once(':') {
                    if k.eq_ignore_ascii_case("content-length") {
                        length = v.trim().parse().unwrap_or(0);
                    }
                }
            }
            let mut payload = vec![0; length];
            let _ = reader.read_exact(&mut payload);
            log.lock().unwrap().push(payload);
            let reply = format!(
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            );
            let _ = stream.write_all(reply.as_bytes());
        }
    });
    (url, seen)
}

fn rle_for(width: u32, height: u32) -> String {
    let total = width * height;
    format!(
        r#"{{"width":{width},"height":{height},"regions":[{{"id":3,"counts":[0,{half},{rest}]}},{{"id":5,"counts":[{half},{rest}]}}]}}"#,
        half = total / 2,
        rest = total - total / 2
    )
}

#[test]
fn fetches_and_decodes_masks() {
    let (url, seen) = stub(200, rle_for(8, 4));
    let frame = Frame::filled(8, 4, [10, 20, 30], 0.0);
    let masks = fetch_masks_remote(&url, &frame, Duration::from_secs(5)).unwrap();
    assert_eq!(masks.len(), 2);
    assert_eq!(masks.regions()[0].area(), 16);
    let bodies = seen.lock().unwrap();
    assert_eq!(bodies.len(), 1);
    assert!(bodies[0].starts_with(b"\x89PNG"), "frame is posted as PNG");
}

#[test]
fn dimension_mismatch_is_rejected() {
    let (url, _) = stub(200, rle_for(4, 4));
    let frame = Frame::filled(8, 4, [0, 0, 0], 0.0);
    let err = fetch_masks_remote(&url, &frame, Duration::from_secs(5)).unwrap_err();
    assert!(matches!(err, Error::Contract(_)), "{err:?}");
}

#[test]
fn server_errors_surface() {
    let (url, _) = stub(503, "{}".into());
    let frame = Frame::filled(8, 4, [0, 0, 0], 0.0);
    let err = fetch_masks_remote(&url, &frame, Duration::from_secs(5)).unwrap_err();
    assert!(err.is_retryable(), "{err:?}");
    let (url, _) = stub(400, "bad image".into());
    let err = fetch_masks_remote(&url, &frame, Duration::from_secs(5)).unwrap_err();
    assert!(matches!(err, Error::Rejected { .. }), "{err:?}");
}

#[test]
fn harness_uses_remote_masks_for_som() {
    let dir = tempfile::tempdir().unwrap();
    make_synthetic_suite(3, 4, dir.path()).unwrap();
    let suite = Suite::open(dir.path()).unwrap();
    let (url, seen) = stub(200, rle_for(64, 64));
    let backend = BackendConfig::mock(BackendKind::MockRandom);
    let harness = Harness::new(
        Arc::new(Backend::new(backend.clone()).unwrap()),
        Arc::new(RemoteMaskClient::new(url, Duration::from_secs(5))),
    );
    let mut config = RunConfig {
        backend,
        ..RunConfig::default()
    };
    let report = harness.run_eval(&suite, suite.records(), &config).unwrap();
    assert_eq!(report.cells[0].failure_count, 0);
    assert_eq!(seen.lock().unwrap().len(), 3);

    config.strategy = StrategyFlags::GAZE;
    harness.run_eval(&suite, suite.records(), &config).unwrap();
    assert_eq!(seen.lock().unwrap().len(), 3, "no segmentation calls without SoM");
}
