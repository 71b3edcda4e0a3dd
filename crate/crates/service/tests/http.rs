use std::collections::HashSet;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use topks_api::{CreateSession, KeystrokeEvent, TopKResponse};
use topks_client::Client;
use topks_core::eval::{write_synthetic, SynthSpec};
use topks_core::fixtures::{RUNNING_EDGES, RUNNING_TRIPLES};
use topks_service::{load_dataset, serve, AppState, ServiceConfig};

struct Server {
    client: Client,
    state: Arc<AppState>,
    _dir: tempfile::TempDir,
}

fn running_files(dir: &Path) -> ServiceConfig {
    let mut t = std::fs::File::create(dir.join("triples.tsv")).unwrap();
    for (u, i, tag) in RUNNING_TRIPLES {
        writeln!(t, "{u}\t{i}\t{tag}").unwrap();
    }
    let mut e = std::fs::File::create(dir.join("edges.tsv")).unwrap();
    for (a, b, w) in RUNNING_EDGES {
        writeln!(e, "{a}\t{b}\t{w}").unwrap();
    }
    ServiceConfig {
        default_budget: None,
        ..ServiceConfig::new(dir.join("triples.tsv"), Some(dir.join("edges.tsv")))
    }
}

async fn start(dir: tempfile::TempDir, cfg: ServiceConfig) -> Server {
    let ds = load_dataset(&cfg).unwrap();
    let state = AppState::new(Arc::new(ds), cfg);
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(serve(listener, state.clone()));
    Server {
        client: Client::new(format!("http://{addr}")),
        state,
        _dir: dir,
    }
}

async fn running(tweak: impl FnOnce(&mut ServiceConfig)) -> Server {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = running_files(dir.path());
    tweak(&mut cfg);
    start(dir, cfg).await
}

fn names(r: &TopKResponse) -> Vec<&str> {
    r.items.iter().map(|i| i.item.as_str()).collect()
}

#[tokio::test]
async fn create_validates_params() {
    let s = running(|_| {}).await;
    let a = s.client.create_session(&CreateSession::new("Alice")).await.unwrap();
    let b = s.client.create_session(&CreateSession::new("Alice")).await.unwrap();
    assert_ne!(a, b);
    let zero_k = CreateSession {
        k: Some(0),
        ..CreateSession::new("Alice")
    };
    assert_eq!(
        s.client
            .create_session(&zero_k)
            .await
            .unwrap_err()
            .status()
            .map(|c| c.as_u16()),
        Some(400)
    );
    let bad_alpha = CreateSession {
        alpha: Some(1.5),
        ..CreateSession::new("Alice")
    };
    assert_eq!(
        s.client
            .create_session(&bad_alpha)
            .await
            .unwrap_err()
            .status()
            .map(|c| c.as_u16()),
        Some(400)
    );
    let nobody = s
        .client
        .create_session(&CreateSession::new("Nobody"))
        .await
        .unwrap_err();
    assert_eq!(nobody.status().map(|c| c.as_u16()), Some(404));
    // In the corpus but outside the network.
    s.client.create_session(&CreateSession::new("Zoe")).await.unwrap();
}

#[tokio::test]
async fn unknown_seekers_allowed_when_configured() {
    let s = running(|c| c.allow_unknown = true).await;
    let id = s
        .client
        .create_session(&CreateSession {
            alpha: Some(1.0),
            ..CreateSession::new("Nobody")
        })
        .await
        .unwrap();
    let r = s.client.type_text(&id, "style").await.unwrap();
    assert_eq!(names(r.last().unwrap()), ["i4", "i2", "i6"]);
}

#[tokio::test]
async fn typing_st_returns_items_completing_st() {
    let s = running(|_| {}).await;
    let id = s
        .client
        .create_session(&CreateSession {
            alpha: Some(0.5),
            ..CreateSession::new("Alice")
        })
        .await
        .unwrap();
    s.client.keystroke(&id, &KeystrokeEvent::char('s')).await.unwrap();
    let r = s.client.keystroke(&id, &KeystrokeEvent::char('t')).await.unwrap();
    let ds = load_dataset(s.state.config()).unwrap();
    let mut cur = ds.index().open_cursor("st").unwrap();
    let allowed: HashSet<String> = std::iter::from_fn(|| cur.advance(ds.index()))
        .map(|e| ds.corpus().item_name(e.item).to_string())
        .collect();
    assert!(!r.items.is_empty());
    assert!(r.exact);
    for item in &r.items {
        assert!(allowed.contains(&item.item), "{} has no tag completing st", item.item);
    }
}

#[tokio::test]
async fn style_gl_matches_the_worked_example() {
    let s = running(|_| {}).await;
    let id = s
        .client
        .create_session(&CreateSession {
            k: Some(2),
            ..CreateSession::new("Alice")
        })
        .await
        .unwrap();
    let r = s.client.type_text(&id, "style gl").await.unwrap();
    assert_eq!(r.len(), 8);
    let last = r.last().unwrap();
    assert_eq!(names(last), ["i6", "i4"]);
    assert!(last.exact);
    let raw = s.client.result_raw(&id).await.unwrap();
    assert!(
        raw.contains(r#""item":"i6","min":2.400000,"max":2.400000,"status":"guaranteed""#),
        "{raw}"
    );
}

#[tokio::test]
async fn new_term_first_and_backspace_to_empty() {
    let s = running(|_| {}).await;
    let id = s.client.create_session(&CreateSession::new("Alice")).await.unwrap();
    let r = s.client.keystroke(&id, &KeystrokeEvent::NewTerm).await.unwrap();
    assert!(r.items.is_empty());
    s.client.type_text(&id, "gl").await.unwrap();
    let g = s.client.keystroke(&id, &KeystrokeEvent::Backspace).await.unwrap();
    assert_eq!(names(&g)[..2], ["i6", "i4"]);
    s.client.keystroke(&id, &KeystrokeEvent::Backspace).await.unwrap();
    let r = s.client.keystroke(&id, &KeystrokeEvent::Backspace).await.unwrap();
    assert!(r.items.is_empty());
    let r = s.client.keystroke(&id, &KeystrokeEvent::Backspace).await.unwrap();
    assert!(r.items.is_empty());
}

#[tokio::test]
async fn backspace_equals_retyping() {
    let s = running(|_| {}).await;
    let a = s.client.create_session(&CreateSession::new("Alice")).await.unwrap();
    s.client.type_text(&a, "style gx").await.unwrap();
    let back = s.client.keystroke(&a, &KeystrokeEvent::Backspace).await.unwrap();
    let b = s.client.create_session(&CreateSession::new("Alice")).await.unwrap();
    let fresh = s.client.type_text(&b, "style g").await.unwrap();
    assert_eq!(names(&back), names(fresh.last().unwrap()));
    assert_eq!(back.items, fresh.last().unwrap().items);
}

#[tokio::test]
async fn result_repeats_keystroke_body() {
    let s = running(|_| {}).await;
    let id = s.client.create_session(&CreateSession::new("Alice")).await.unwrap();
    let empty = s.client.result(&id).await.unwrap();
    assert!(empty.items.is_empty());
    for c in "sty".chars() {
        let body = s.client.keystroke_raw(&id, &KeystrokeEvent::char(c)).await.unwrap();
        assert_eq!(body, s.client.result_raw(&id).await.unwrap());
    }
}

#[tokio::test]
async fn bad_keystrokes_and_unknown_sessions() {
    let s = running(|_| {}).await;
    let id = s.client.create_session(&CreateSession::new("Alice")).await.unwrap();
    let empty = KeystrokeEvent::Char { value: String::new() };
    assert_eq!(
        s.client
            .keystroke(&id, &empty)
            .await
            .unwrap_err()
            .status()
            .map(|c| c.as_u16()),
        Some(400)
    );
    let two = KeystrokeEvent::Char { value: "ab".into() };
    assert_eq!(
        s.client
            .keystroke(&id, &two)
            .await
            .unwrap_err()
            .status()
            .map(|c| c.as_u16()),
        Some(400)
    );
    let e = s
        .client
        .keystroke("nope", &KeystrokeEvent::char('a'))
        .await
        .unwrap_err();
    assert_eq!(e.status().map(|c| c.as_u16()), Some(404));
    assert_eq!(
        s.client.result("nope").await.unwrap_err().status().map(|c| c.as_u16()),
        Some(404)
    );
}

#[tokio::test]
async fn idle_sessions_expire() {
    let s = running(|c| c.session_ttl = Duration::from_millis(200)).await;
    let id = s.client.create_session(&CreateSession::new("Alice")).await.unwrap();
    s.client.keystroke(&id, &KeystrokeEvent::char('s')).await.unwrap();
    tokio::time::sleep(Duration::from_millis(400)).await;
    assert_eq!(
        s.client.result(&id).await.unwrap_err().status().map(|c| c.as_u16()),
        Some(404)
    );
    assert_eq!(s.client.health().await.unwrap().sessions, 0);
}

fn count_lines(p: &Path) -> usize {
    std::fs::read_to_string(p)
        .unwrap()
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .count()
}

#[tokio::test]
async fn health_counts_match_files() {
    let s = running(|_| {}).await;
    let h = s.client.health().await.unwrap();
    let cfg = s.state.config();
    assert_eq!(h.triples, count_lines(&cfg.triples));
    assert_eq!(h.edges, count_lines(cfg.edges.as_ref().unwrap()));
    assert_eq!(h.status, "ok");
}

fn synthetic(dir: &Path, spec: &SynthSpec) -> ServiceConfig {
    let t = std::fs::File::create(dir.join("triples.tsv")).unwrap();
    let e = std::fs::File::create(dir.join("edges.tsv")).unwrap();
    write_synthetic(spec, t, e).unwrap();
    ServiceConfig::new(dir.join("triples.tsv"), Some(dir.join("edges.tsv")))
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn interleaved_sessions_are_isolated() {
    let dir = tempfile::tempdir().unwrap();
    let spec = SynthSpec {
        users: 300,
        items: 400,
        tags: 120,
        triples: 5000,
        ..SynthSpec::default()
    };
    let cfg = ServiceConfig {
        default_budget: None,
        ..synthetic(dir.path(), &spec)
    };
    let s = start(dir, cfg).await;
    let h = s.client.health().await.unwrap();
    assert_eq!(h.triples, 5000);
    let ds = load_dataset(s.state.config()).unwrap();
    let tags = ds.corpus().tags().names();
    let texts = [
        format!("{} {}", tags[0], &tags[1][..2]),
        format!("{} {}", tags[2], &tags[3][..3]),
    ];
    let seekers = ["u000001", "u000123"];

    let mut alone = Vec::new();
    for (seeker, text) in seekers.iter().zip(&texts) {
        let id = s.client.create_session(&CreateSession::new(*seeker)).await.unwrap();
        alone.push(s.client.type_text(&id, text).await.unwrap());
    }

    let ids = [
        s.client.create_session(&CreateSession::new(seekers[0])).await.unwrap(),
        s.client.create_session(&CreateSession::new(seekers[1])).await.unwrap(),
    ];
    let events: Vec<Vec<KeystrokeEvent>> = texts.iter().map(|t| KeystrokeEvent::typing(t)).collect();
    let mut together: [Vec<TopKResponse>; 2] = [Vec::new(), Vec::new()];
    for step in 0..events[0].len().max(events[1].len()) {
        let fa = async {
            match events[0].get(step) {
                Some(e) => Some(s.client.keystroke(&ids[0], e).await.unwrap()),
                None => None,
            }
        };
        let fb = async {
            match events[1].get(step) {
                Some(e) => Some(s.client.keystroke(&ids[1], e).await.unwrap()),
                None => None,
            }
        };
        let (ra, rb) = tokio::join!(fa, fb);
        together[0].extend(ra);
        together[1].extend(rb);
    }
    for j in 0..2 {
        let a: Vec<_> = alone[j].iter().map(|r| &r.items).collect();
        let b: Vec<_> = together[j].iter().map(|r| &r.items).collect();
        assert_eq!(a, b, "session {j}");
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn keystrokes_answer_within_budget() {
    let dir = tempfile::tempdir().unwrap();
    let spec = SynthSpec {
        seed: 3,
        users: 20_000,
        items: 40_000,
        tags: 4_000,
        triples: 200_000,
        ..SynthSpec::default()
    };
    let cfg = synthetic(dir.path(), &spec);
    let s = start(dir, cfg).await;
    let ds = load_dataset(s.state.config()).unwrap();
    let mut times = Vec::new();
    for n in 0..20 {
        let t = ds.corpus().triples()[n * 997];
        let req = CreateSession {
            budget_ms: Some(20),
            ..CreateSession::new(ds.corpus().user_name(t.user))
        };
        let id = s.client.create_session(&req).await.unwrap();
        for c in ds.corpus().tag_name(t.tag).chars().take(4) {
            let start = std::time::Instant::now();
            s.client.keystroke(&id, &KeystrokeEvent::char(c)).await.unwrap();
            times.push(start.elapsed());
        }
    }
    times.sort();
    let p50 = times[times.len() / 2];
    assert!(p50 <= Duration::from_millis(30), "p50 {p50:?}");
}
