//! Live-server harness and image generators.
#![allow(dead_code)]

use std::io::Cursor;
use std::net::SocketAddr;
use std::sync::Arc;

use geofault_core::builtin_schema;
use geofault_service::{spawn, Service};
use image::{ImageFormat, RgbImage};
use serde_json::{json, Value};

pub struct Server {
    pub base: String,
    pub client: reqwest::Client,
    pub dir: tempfile::TempDir,
    pub service: Arc<Service>,
}

pub async fn start() -> Server {
    let dir = tempfile::tempdir().unwrap();
    start_in(dir).await
}

pub async fn start_in(dir: tempfile::TempDir) -> Server {
    start_with(dir, None).await
}

/// Starts a server that also serves UI assets from `static_dir`.
pub async fn start_with(dir: tempfile::TempDir, static_dir: Option<std::path::PathBuf>) -> Server {
    let service = Arc::new(Service::open(dir.path(), builtin_schema()).unwrap());
    let addr: SocketAddr = "127.0.0.1:0".parse().unwrap();
    let (bound, _handle) = spawn(service.clone(), addr, static_dir).await.unwrap();
    Server { base: format!("http://{bound}"), client: reqwest::Client::new(), dir, service }
}

pub struct Reply {
    pub status: u16,
    pub body: Value,
    pub text: String,
}

impl Server {
    pub fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    async fn finish(resp: reqwest::Response) -> Reply {
        let status = resp.status().as_u16();
        let text = resp.text().await.unwrap();
        let body = serde_json::from_str(&text).unwrap_or(Value::Null);
        Reply { status, body, text }
    }

    pub async fn get(&self, path: &str) -> Reply {
        Self::finish(self.client.get(self.url(path)).send().await.unwrap()).await
    }

    pub async fn post(&self, path: &str, body: Value) -> Reply {
        Self::finish(self.client.post(self.url(path)).json(&body).send().await.unwrap()).await
    }

    pub async fn post_bytes(&self, path: &str, bytes: Vec<u8>, mime: &str) -> Reply {
        let req = self.client.post(self.url(path)).header("content-type", mime).body(bytes);
        Self::finish(req.send().await.unwrap()).await
    }

    pub async fn project(&self, name: &str) -> String {
        let r = self.post("/projects", json!({ "name": name })).await;
        assert_eq!(r.status, 201, "{}", r.text);
        r.body["id"].as_str().unwrap().to_string()
    }

    /// Uploads a `w`x`h` PNG and returns its image id.
    pub async fn image(&self, pid: &str, w: u32, h: u32) -> String {
        let r = self.post_bytes(&format!("/projects/{pid}/images"), png(w, h), "image/png").await;
        assert!(r.status == 201 || r.status == 200, "{}", r.text);
        r.body["id"].as_str().unwrap().to_string()
    }

    /// Annotates a point with `class` and returns the annotation id.
    pub async fn annotate(&self, pid: &str, image: &str, class: &str) -> String {
        let r = self
            .post(
                &format!("/projects/{pid}/annotations"),
                json!({ "image": image, "region": { "type": "point", "x": 1, "y": 1 }, "class": class }),
            )
            .await;
        assert_eq!(r.status, 201, "{}", r.text);
        r.body["id"].as_str().unwrap().to_string()
    }

    pub async fn link(&self, pid: &str, from: &str, relation: &str, to: &str) -> Reply {
        self.post(&format!("/projects/{pid}/links"), json!({ "from": from, "relation": relation, "to": to })).await
    }

    pub async fn suggest(&self, pid: &str, from: &str, to: &str) -> Vec<String> {
        let r = self.post(&format!("/projects/{pid}/links:suggest"), json!({ "from": from, "to": to })).await;
        assert_eq!(r.status, 200, "{}", r.text);
        r.body["relations"].as_array().unwrap().iter().map(|r| r["term"].as_str().unwrap().to_string()).collect()
    }
}

fn encode(img: &RgbImage, format: ImageFormat) -> Vec<u8> {
    let mut out = Cursor::new(Vec::new());
    img.write_to(&mut out, format).unwrap();
    out.into_inner()
}

pub fn png(w: u32, h: u32) -> Vec<u8> {
    encode(&RgbImage::from_fn(w, h, |x, y| image::Rgb([x as u8, y as u8, 7])), ImageFormat::Png)
}

pub fn jpeg(w: u32, h: u32) -> Vec<u8> {
    encode(&RgbImage::from_fn(w, h, |x, y| image::Rgb([(x * 9) as u8, (y * 5) as u8, 90])), ImageFormat::Jpeg)
}

pub fn error_code(r: &Reply) -> &str {
    r.body["error"]["code"].as_str().unwrap_or_else(|| panic!("not an error payload: {}", r.text))
}
