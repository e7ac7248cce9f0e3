//! Exercises the HTTP API in process: creates a session from inline rows, runs the stages
//! through `/commands` and reads a few views. Pass `--serve ADDR` to listen instead.

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

async fn call(app: &axum::Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, String) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or_else(Body::empty, |b| Body::from(b.to_string())))
        .unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    (status, String::from_utf8_lossy(&bytes).into_owned())
}

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    if args.next().as_deref() == Some("--serve") {
        let addr = args.next().unwrap_or_else(|| "127.0.0.1:8080".into()).parse()?;
        println!("listening on {addr}");
        return Ok(chainclust_server::serve(addr).await?);
    }

    let app = chainclust_server::router();
    // two tight groups of three points on a line
    let rows: Vec<Vec<f64>> = [0.0, 0.1, 0.2, 5.0, 5.1, 5.2].iter().map(|&x| vec![x, 0.0]).collect();
    let (status, body) = call(&app, "POST", "/sessions", Some(json!({"rows": rows, "truth": [0, 0, 0, 1, 1, 1]}))).await;
    println!("{status} {body}");

    // asking for merges before a cut is a stage conflict
    let (status, body) = call(&app, "POST", "/sessions/1/commands", Some(json!({"type": "apply_merges"}))).await;
    println!("{status} {body}");

    for cmd in [
        json!({"type": "reorder", "starts": {"kind": "all"}, "stencil_pct": 34.0}),
        json!({"type": "profile"}),
        json!({"type": "scan"}),
        json!({"type": "propose_merges"}),
        json!({"type": "apply_merges"}),
        json!({"type": "expand", "keep_no_noise": true}),
    ] {
        let (status, _) = call(&app, "POST", "/sessions/1/commands", Some(cmd.clone())).await;
        println!("{status} <- {cmd}");
    }
    for view in ["delta", "clusters", "confusion", "export/labels", "matrix/tile?x=0&y=0"] {
        let (status, body) = call(&app, "GET", &format!("/sessions/1/{view}"), None).await;
        println!("GET {view}: {status}\n{body}");
    }
    Ok(())
}
