//! Serves the JSON API on a local port, posts a run to it and reads the
//! leaderboard back over real HTTP.
//!
//! ```text
//! cargo run --example http_service
//! ```

use std::path::PathBuf;
use std::sync::Arc;

use covquest::service::{http::router, Engine};
use serde_json::json;
use std::io::{Read, Write};
use std::net::{SocketAddr, TcpStream};

use tokio::net::TcpListener;

/// A plain HTTP/1.1 exchange, as any client would make it.
fn exchange(addr: SocketAddr, method: &str, path: &str, body: Option<String>) -> std::io::Result<String> {
    let mut stream = TcpStream::connect(addr)?;
    let body = body.unwrap_or_default();
    let head = format!(
        "{method} {path} HTTP/1.1\r\nHost: localhost\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
        body.len()
    );
    stream.write_all(head.as_bytes())?;
    stream.write_all(body.as_bytes())?;
    let mut response = String::new();
    stream.read_to_string(&mut response)?;
    Ok(response)
}

async fn request(addr: SocketAddr, method: &'static str, path: &'static str, body: Option<String>) -> std::io::Result<String> {
    tokio::task::spawn_blocking(move || exchange(addr, method, path, body)).await.expect("client thread")
}

fn body_of(response: &str) -> &str {
    response.split_once("\r\n\r\n").map_or("", |(_, b)| b)
}

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let listener = TcpListener::bind("127.0.0.1:0").await?;
    let addr = listener.local_addr()?;
    let app = router(Arc::new(Engine::in_memory()), None);
    tokio::spawn(async move { axum::serve(listener, app).await });
    println!("serving on http://{addr} (dashboard at /ui/)");

    let fixtures = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/reports");
    let manifest = json!({
        "run_id": 1,
        "status": "success",
        "inline": {
            "commits": [{
                "hash": "a1",
                "author": "ann",
                "timestamp": "2024-05-06T10:00:00Z",
                "changed_paths": ["src/main/java/com/acme/Cart.java"]
            }],
            "files": {
                "src/main/java/com/acme/Cart.java": "import java.util.List;\nclass Cart {\n  int add(int a) {\n    if (a > 10) return a + 1;\n    return a;\n  }\n  void remove() {\n    log();\n  }\n}\n"
            }
        },
        "coverage": [fixtures.join("lcov.info")],
        "tests": [fixtures.join("TEST-*.xml")],
        "seed": 3
    });
    let posted = request(addr, "POST", "/projects/demo/runs", Some(manifest.to_string())).await?;
    println!("POST /projects/demo/runs -> {}", posted.lines().next().unwrap_or(""));
    println!("{}", body_of(&posted));

    for path in ["/projects/demo/leaderboard", "/projects/demo/users/ann/challenges"] {
        let res = request(addr, "GET", path, None).await?;
        let value: serde_json::Value = serde_json::from_str(body_of(&res))?;
        println!("GET {path}\n{}", serde_json::to_string_pretty(&value)?);
    }
    Ok(())
}
