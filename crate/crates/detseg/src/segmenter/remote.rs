//! HTTP client for an external model server.

use std::io::Cursor;
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use base64::Engine;
use image::ImageFormat;

use super::wire::{Health, WirePrompt, WireRequest, WireResponse};
use super::{Backend, SegmentRequest, SegmentResponse};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct RemoteConfig {
    /// Tries per request, including the first.
    pub attempts: u32,
    /// Wait before the second try; doubles after each failure.
    pub backoff: Duration,
    pub max_in_flight: usize,
    pub timeout: Duration,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        Self {
            attempts: 3,
            backoff: Duration::from_secs(1),
            max_in_flight: 4,
            timeout: Duration::from_secs(300),
        }
    }
}

/// Counting semaphore bounding concurrent requests.
struct Slots {
    free: Mutex<usize>,
    cv: Condvar,
}

struct SlotGuard<'a>(&'a Slots);

impl Slots {
    fn new(n: usize) -> Self {
        Self {
            free: Mutex::new(n.max(1)),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> SlotGuard<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.cv.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        SlotGuard(self)
    }
}

impl Drop for SlotGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.cv.notify_one();
    }
}

pub struct RemoteBackend {
    base: String,
    agent: ureq::Agent,
    cfg: RemoteConfig,
    slots: Slots,
}

impl RemoteBackend {
    pub fn new(base_url: &str, cfg: RemoteConfig) -> Result<Self> {
        if cfg.attempts == 0 {
            return Err(Error::Config("remote backend needs at least one attempt".into()));
        }
        let agent = ureq::AgentBuilder::new().timeout(cfg.timeout).build();
        Ok(Self {
            base: base_url.trim_end_matches('/').to_string(),
            agent,
            slots: Slots::new(cfg.max_in_flight),
            cfg,
        })
    }

    fn classify(e: ureq::Error) -> Error {
        match e {
            ureq::Error::Status(code, resp) => {
                let body = resp.into_string().unwrap_or_default();
                if code >= 500 || code == 429 {
                    Error::Transport(format!("HTTP {code}: {body}"))
                } else {
                    Error::Protocol(format!("HTTP {code}: {body}"))
                }
            }
            ureq::Error::Transport(t) => Error::Transport(t.to_string()),
        }
    }

    /// Run `call` up to `attempts` times while it fails with a retryable
    /// error.
    fn with_retries<T>(&self, what: &str, mut call: impl FnMut() -> Result<T>) -> Result<T> {
        let mut wait = self.cfg.backoff;
        let mut attempt = 1;
        loop {
            match call() {
                Err(e) if e.is_retryable() && attempt < self.cfg.attempts => {
                    log::warn!("{what}: attempt {attempt} failed: {e}; retrying in {wait:?}");
                    std::thread::sleep(wait);
                    wait *= 2;
                    attempt += 1;
                }
                other => return other,
            }
        }
    }

    fn encode_png(req: &SegmentRequest) -> Result<String> {
        let mut buf = Cursor::new(Vec::new());
        req.image
            .write_to(&mut buf, ImageFormat::Png)
            .map_err(|e| Error::Protocol(format!("cannot encode tile {}: {e}", req.id)))?;
        Ok(base64::engine::general_purpose::STANDARD.encode(buf.into_inner()))
    }

    fn decode(req: &SegmentRequest, body: &str) -> Result<SegmentResponse> {
        let resp: WireResponse = serde_json::from_str(body)
            .map_err(|e| Error::Protocol(format!("malformed response: {e}")))?;
        if resp.id != req.id {
            return Err(Error::Protocol(format!(
                "response id {:?} does not echo request id {:?}",
                resp.id, req.id
            )));
        }
        if resp.results.len() != req.prompts.len() {
            return Err(Error::Protocol(format!(
                "{} results for {} prompts",
                resp.results.len(),
                req.prompts.len()
            )));
        }
        let (w, h) = req.dims();
        let results = resp
            .results
            .into_iter()
            .map(|r| {
                r.candidates
                    .into_iter()
                    .map(|c| c.into_candidate(w, h))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SegmentResponse { id: resp.id, results })
    }
}

impl Backend for RemoteBackend {
    fn name(&self) -> String {
        self.base.clone()
    }

    fn health(&self) -> Result<()> {
        let url = format!("{}/v1/health", self.base);
        let health: Health = self.with_retries("health check", || {
            let _slot = self.slots.acquire();
            let body = self
                .agent
                .get(&url)
                .call()
                .map_err(Self::classify)?
                .into_string()
                .map_err(|e| Error::Transport(e.to_string()))?;
            serde_json::from_str(&body).map_err(|e| Error::Protocol(format!("malformed health response: {e}")))
        })
        .map_err(|e| Error::Unhealthy(format!("{url}: {e}")))?;
        if !health.ready {
            return Err(Error::Unhealthy(format!("model {} is not ready", health.model)));
        }
        log::info!("backend {} serving {}", self.base, health.model);
        Ok(())
    }

    fn segment(&self, req: &SegmentRequest) -> Result<SegmentResponse> {
        req.check()?;
        if req.prompts.is_empty() {
            return Ok(SegmentResponse {
                id: req.id.clone(),
                results: Vec::new(),
            });
        }
        let body = serde_json::to_string(&WireRequest {
            id: req.id.clone(),
            image_png_b64: Self::encode_png(req)?,
            multimask: req.multimask,
            prompts: req.prompts.iter().map(WirePrompt::from).collect(),
        })?;
        let url = format!("{}/v1/segment", self.base);
        let text = self.with_retries(&req.id, || {
            let _slot = self.slots.acquire();
            self.agent
                .post(&url)
                .set("Content-Type", "application/json")
                .send_string(&body)
                .map_err(Self::classify)?
                .into_string()
                .map_err(|e| Error::Transport(e.to_string()))
        })?;
        Self::decode(req, &text)
    }
}
