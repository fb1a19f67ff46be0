//! The live catalog provider against a throwaway local HTTP server.

use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use delta_lca_core::catalog::{lookup, CatalogProvider, HttpProvider, RecordSource};
use delta_lca_core::config::{CatalogSettings, Config, ProviderKind};
use delta_lca_core::inventory::{BoardSpec, Category, DesignInventory, Part, PartId};
use delta_lca_core::Engine;

#[derive(Debug, Clone)]
struct Seen {
    query: String,
    authorization: Option<String>,
}

type Handler = dyn Fn(&str, usize) -> (u16, String) + Send + Sync;

/// Serves until the test process exits. The handler gets the decoded `q`
/// parameter and the 0-based request number.
fn serve(handler: Box<Handler>) -> (String, Arc<Mutex<Vec<Seen>>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let seen = Arc::new(Mutex::new(Vec::new()));
    let log = seen.clone();
    let count = AtomicUsize::new(0);
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut request_line = String::new();
            reader.read_line(&mut request_line).unwrap();
            let mut authorization = None;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if line.trim().is_empty() {
                    break;
                }
                if let Some((k, v)) = line.split_once(':') {
                    if k.eq_ignore_ascii_case("authorization") {
                        authorization = Some(v.trim().to_string());
                    }
                }
            }
            let target = request_line.split_whitespace().nth(1).unwrap_or("/");
            let url = url::Url::parse(&format!("http://local{target}")).unwrap();
            let query = url.query_pairs().find(|(k, _)| k == "q").map(|(_, v)| v.into_owned()).unwrap_or_default();
            log.lock().unwrap().push(Seen {
                query: query.clone(),
                authorization,
            });
            let n = count.fetch_add(1, Ordering::SeqCst);
            let (status, body) = if url.path() == "/api/search" { handler(&query, n) } else { (404, String::new()) };
            let _ = write!(
                stream,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            );
        }
    });
    (format!("http://{addr}/api"), seen)
}

fn settings(base_url: &str) -> CatalogSettings {
    CatalogSettings {
        provider: ProviderKind::Http,
        base_url: base_url.to_string(),
        timeout_ms: 2000,
        retry_budget: 2,
        ..CatalogSettings::default()
    }
}

const RECORD: &str = r#"[{"matched_name": "ATMEGA32U4", "attributes": {"Speed": "16MHz", "Active Current per MHz": "0.55 mA/MHz", "Supplier Device Package": "44-TQFP (10x10)"}}]"#;

#[test]
fn suffix_stripping_reaches_the_base_name() {
    let (base, seen) = serve(Box::new(|q, _| {
        if q == "ATMEGA32U4" {
            (200, RECORD.to_string())
        } else {
            (200, "[]".to_string())
        }
    }));
    let provider = HttpProvider::new(&settings(&base)).unwrap();
    let record = lookup("ATMEGA32U4-AU", &provider).unwrap().unwrap();
    assert_eq!(record.matched_name, "ATMEGA32U4");
    assert_eq!(record.source, RecordSource::LiveHttp);
    assert_eq!(record.attributes["Speed"], "16MHz");
    let queries: Vec<String> = seen.lock().unwrap().iter().map(|s| s.query.clone()).collect();
    assert_eq!(queries, ["ATMEGA32U4-AU", "ATMEGA32U4"]);
}

#[test]
fn token_comes_from_the_named_environment_variable() {
    let (base, seen) = serve(Box::new(|_, _| (200, "[]".to_string())));
    std::env::set_var("DELTA_LCA_TEST_CATALOG_TOKEN", "s3cret");
    let mut s = settings(&base);
    s.credentials_env = Some("DELTA_LCA_TEST_CATALOG_TOKEN".into());
    let provider = HttpProvider::new(&s).unwrap();
    assert!(provider.search("LM358").unwrap().is_empty());
    let seen = seen.lock().unwrap();
    assert_eq!(seen[0].authorization.as_deref(), Some("Bearer s3cret"));
}

#[test]
fn server_errors_are_retried_within_budget() {
    let (base, seen) = serve(Box::new(|_, n| if n < 2 { (503, String::new()) } else { (200, RECORD.to_string()) }));
    let provider = HttpProvider::new(&settings(&base)).unwrap();
    let records = provider.search("ATMEGA32U4").unwrap();
    assert_eq!(records.len(), 1);
    assert_eq!(seen.lock().unwrap().len(), 3);

    let (base, seen) = serve(Box::new(|_, _| (500, String::new())));
    let provider = HttpProvider::new(&settings(&base)).unwrap();
    assert!(provider.search("X").is_err());
    assert_eq!(seen.lock().unwrap().len(), 3, "one try plus two retries");
}

#[test]
fn client_errors_and_garbage_are_not_retried() {
    let (base, seen) = serve(Box::new(|_, _| (200, "{not json".to_string())));
    let provider = HttpProvider::new(&settings(&base)).unwrap();
    assert!(provider.search("X").is_err());
    assert_eq!(seen.lock().unwrap().len(), 1);

    // 404 means "nothing found", not failure.
    let (base, _) = serve(Box::new(|_, _| (404, String::new())));
    let provider = HttpProvider::new(&settings(&base)).unwrap();
    assert!(lookup("NOPE-123", &provider).unwrap().is_none());
}

fn one_ic_design() -> DesignInventory {
    let mut ic = Part::new("U1", "ATMEGA32U4-AU", Category::Ic).with_package("QFP", 100.0);
    ic.package_dims = Some([10.0, 10.0]);
    DesignInventory {
        design_id: "one".into(),
        source_file: String::new(),
        board: BoardSpec::new(400.0, 2),
        parts: vec![ic],
    }
}

#[test]
fn enrichment_through_the_live_provider() {
    let (base, _) = serve(Box::new(|q, _| {
        if q.starts_with("ATMEGA32U4") {
            (200, RECORD.to_string())
        } else {
            (200, "[]".to_string())
        }
    }));
    let engine = Engine::with_provider(Config::builtin(), Box::new(HttpProvider::new(&settings(&base)).unwrap()));
    let built = engine.complete(one_ic_design()).unwrap();
    let ic = built.inventory.part(&PartId::new("U1")).unwrap();
    assert_eq!(ic.attributes.process_node, Some(350));
    // 10×10 QFP body: 25 mm² die at 6.0 g/mm²
    assert!((ic.known_footprint().unwrap() - 150.0).abs() < 1e-9);
}

#[test]
fn outage_leaves_parts_unenriched_with_a_warning() {
    let addr = {
        let l = TcpListener::bind("127.0.0.1:0").unwrap();
        l.local_addr().unwrap()
    };
    let mut s = settings(&format!("http://{addr}/api"));
    s.retry_budget = 0;
    let engine = Engine::with_provider(Config::builtin(), Box::new(HttpProvider::new(&s).unwrap()));
    let built = engine.complete(one_ic_design()).unwrap();
    assert!(built.warnings.iter().any(|w| w.contains("catalog unavailable")), "{:?}", built.warnings);
    let ic = built.inventory.part(&PartId::new("U1")).unwrap();
    assert_eq!(ic.attributes.process_node, None);
    assert!(ic.known_footprint().is_none());
}
