#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;

use scisimp_core::semantic::{EmbedError, EmbeddedText, EmbeddingProvider};

// ---------------------------------------------------------------------------
// SARI brute-force oracle. Texts are whitespace-separated words.

fn grams(text: &str, n: usize) -> Vec<Vec<String>> {
    let words: Vec<String> = text.split_whitespace().map(|w| w.to_lowercase()).collect();
    let mut out: Vec<Vec<String>> = Vec::new();
    if words.len() >= n {
        for i in 0..=words.len() - n {
            let g = words[i..i + n].to_vec();
            if !out.contains(&g) {
                out.push(g);
            }
        }
    }
    out
}

fn inter(a: &[Vec<String>], b: &[Vec<String>]) -> Vec<Vec<String>> {
    a.iter().filter(|g| b.contains(g)).cloned().collect()
}

fn minus(a: &[Vec<String>], b: &[Vec<String>]) -> Vec<Vec<String>> {
    a.iter().filter(|g| !b.contains(g)).cloned().collect()
}

fn frac(num: usize, den: usize, good_empty: bool) -> f64 {
    match (den, good_empty) {
        (0, true) => 1.0,
        (0, false) => 0.0,
        _ => num as f64 / den as f64,
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Returns (total, f_add, f_keep, p_del).
pub fn sari_oracle(input: &str, output: &str, reference: &str) -> (f64, f64, f64, f64) {
    let (mut add, mut keep, mut del) = (0.0, 0.0, 0.0);
    for n in 1..=4 {
        let i = grams(input, n);
        let o = grams(output, n);
        let r = grams(reference, n);

        let io = inter(&i, &o);
        let ir = inter(&i, &r);
        let ior = inter(&io, &r);
        let kp = frac(ior.len(), io.len(), ir.is_empty());
        let kr = frac(ior.len(), ir.len(), true);
        keep += harmonic(kp, kr);

        let o_i = minus(&o, &i);
        let r_i = minus(&r, &i);
        let good_add = inter(&o_i, &r_i);
        let ap = frac(good_add.len(), o_i.len(), r_i.is_empty());
        let ar = frac(good_add.len(), r_i.len(), true);
        add += harmonic(ap, ar);

        let i_o = minus(&i, &o);
        let i_r = minus(&i, &r);
        let good_del = inter(&i_o, &i_r);
        del += frac(good_del.len(), i_o.len(), i_r.is_empty());
    }
    let (add, keep, del) = (add / 4.0, keep / 4.0, del / 4.0);
    (100.0 * (add + keep + del) / 3.0, add, keep, del)
}

// ---------------------------------------------------------------------------
// Greedy-matching oracle over raw vectors.

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let mut ab = 0.0;
    let mut aa = 0.0;
    let mut bb = 0.0;
    for k in 0..a.len() {
        ab += a[k] * b[k];
        aa += a[k] * a[k];
        bb += b[k] * b[k];
    }
    ab / (aa.sqrt() * bb.sqrt())
}

/// Returns (precision, recall, f1).
pub fn bertscore_oracle(cand: &[Vec<f64>], refs: &[Vec<f64>]) -> (f64, f64, f64) {
    let mut p = 0.0;
    for c in cand {
        let mut best = f64::NEG_INFINITY;
        for r in refs {
            best = best.max(cosine(c, r));
        }
        p += best;
    }
    p /= cand.len() as f64;
    let mut r = 0.0;
    for x in refs {
        let mut best = f64::NEG_INFINITY;
        for c in cand {
            best = best.max(cosine(c, x));
        }
        r += best;
    }
    r /= refs.len() as f64;
    let f = if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    };
    (p, r, f)
}

pub fn embedded(vectors: Vec<Vec<f64>>, provider: &str) -> EmbeddedText {
    let n = vectors.len();
    EmbeddedText::new(
        (0..n).map(|i| format!("w{i}")).collect(),
        vectors,
        vec![false; n],
        18,
        provider,
    )
    .unwrap()
}

// ---------------------------------------------------------------------------
// Closed-form Student t tails.

pub fn p_df1(t: f64) -> f64 {
    1.0 - 2.0 * t.abs().atan() / std::f64::consts::PI
}

pub fn p_df2(t: f64) -> f64 {
    1.0 - t.abs() / (2.0 + t * t).sqrt()
}

// ---------------------------------------------------------------------------
// Deterministic in-process embedder: one vector per lowercased word, derived
// from a hash of the word, bracketed by two special tokens.

pub struct HashEmbedder {
    pub id: String,
    pub dim: usize,
}

impl HashEmbedder {
    pub fn new(dim: usize) -> Self {
        HashEmbedder {
            id: "hash-mock".into(),
            dim,
        }
    }

    pub fn vector(&self, word: &str) -> Vec<f64> {
        let mut h: u64 = 0xcbf29ce484222325;
        for b in word.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        (0..self.dim)
            .map(|k| {
                let x = h.rotate_left((k * 7) as u32) ^ (k as u64).wrapping_mul(0x9e3779b97f4a7c15);
                (x % 2001) as f64 / 1000.0 - 1.0 + 1e-3
            })
            .collect()
    }
}

impl EmbeddingProvider for HashEmbedder {
    fn provider_id(&self) -> &str {
        &self.id
    }

    fn layer(&self) -> u32 {
        18
    }

    fn embed(&self, text: &str) -> Result<EmbeddedText, EmbedError> {
        let words: Vec<String> = text.split_whitespace().map(|w| w.to_lowercase()).collect();
        if words.is_empty() {
            return Err(EmbedError::EmptyText);
        }
        let mut tokens = vec!["[CLS]".to_string()];
        let mut vectors = vec![vec![1.0; self.dim]];
        for w in &words {
            tokens.push(w.clone());
            vectors.push(self.vector(w));
        }
        tokens.push("[SEP]".into());
        vectors.push(vec![-1.0; self.dim]);
        let mut special = vec![false; tokens.len()];
        special[0] = true;
        *special.last_mut().unwrap() = true;
        EmbeddedText::new(tokens, vectors, special, 18, self.id.clone())
            .map_err(|e| EmbedError::InvalidResponse(e.to_string()))
    }
}

// ---------------------------------------------------------------------------
// Minimal HTTP/1.1 server for client tests. Each connection carries one
// request; the handler maps (method, path, body) to (status, body).

pub struct Request {
    pub method: String,
    pub path: String,
    pub headers: Vec<(String, String)>,
    pub body: String,
}

pub struct MockServer {
    pub url: String,
    pub hits: Arc<AtomicUsize>,
}

impl MockServer {
    pub fn start<F>(handler: F) -> MockServer
    where
        F: Fn(&Request) -> (u16, String) + Send + Sync + 'static,
    {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}", listener.local_addr().unwrap());
        let hits = Arc::new(AtomicUsize::new(0));
        let counter = hits.clone();
        let handler = Arc::new(handler);
        thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(stream) = stream else { break };
                let handler = handler.clone();
                let counter = counter.clone();
                thread::spawn(move || {
                    if let Some(req) = read_request(&stream) {
                        counter.fetch_add(1, Ordering::SeqCst);
                        let (status, body) = handler(&req);
                        write_response(stream, status, &body);
                    }
                });
            }
        });
        MockServer { url, hits }
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }
}

fn read_request(stream: &TcpStream) -> Option<Request> {
    let mut reader = BufReader::new(stream);
    let mut line = String::new();
    reader.read_line(&mut line).ok()?;
    let mut parts = line.split_whitespace();
    let method = parts.next()?.to_string();
    let path = parts.next()?.to_string();
    let mut headers = Vec::new();
    let mut length = 0usize;
    loop {
        let mut h = String::new();
        reader.read_line(&mut h).ok()?;
        let h = h.trim_end();
        if h.is_empty() {
            break;
        }
        if let Some((k, v)) = h.split_once(':') {
            let (k, v) = (k.trim().to_ascii_lowercase(), v.trim().to_string());
            if k == "content-length" {
                length = v.parse().ok()?;
            }
            headers.push((k, v));
        }
    }
    let mut body = vec![0u8; length];
    reader.read_exact(&mut body).ok()?;
    Some(Request {
        method,
        path,
        headers,
        body: String::from_utf8_lossy(&body).into_owned(),
    })
}

fn write_response(mut stream: TcpStream, status: u16, body: &str) {
    let reason = match status {
        200 => "OK",
        400 => "Bad Request",
        413 => "Payload Too Large",
        429 => "Too Many Requests",
        500 => "Internal Server Error",
        503 => "Service Unavailable",
        _ => "Status",
    };
    let _ = write!(
        stream,
        "HTTP/1.1 {status} {reason}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    );
    let _ = stream.flush();
}

/// A URL with nothing listening on it.
pub fn dead_url() -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    drop(listener);
    url
}
