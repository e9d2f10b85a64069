#![allow(dead_code)]

use std::path::{Path, PathBuf};

use factcheck_core::corpus::{ClaimRecord, RawRecord, SourceSite, VeracityLabel};
use factcheck_core::pipeline::PipelineConfig;
use factcheck_core::veracity::{BaselineModel, FeatureConfig, Features, MacroAverage, TrainingExample, NUM_LABELS};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn raw_fixture(name: &str) -> Vec<RawRecord> {
    std::fs::read_to_string(fixture(name))
        .unwrap()
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

/// Pipeline configuration over a fixture corpus writing into `out`.
pub fn fixture_config(raw: &str, out: &Path) -> PipelineConfig {
    PipelineConfig {
        raw_corpus: Some(fixture(raw)),
        annotations: Some(fixture("annotations.csv")),
        out_dir: out.to_path_buf(),
        ..PipelineConfig::default()
    }
}

pub fn record(id: &str, claim: &str, article: &str) -> ClaimRecord {
    ClaimRecord {
        claim_id: id.into(),
        claim_text: claim.into(),
        article_text: article.into(),
        explanation_text: "An explanation that is long enough to keep.".into(),
        label: VeracityLabel::True,
        date_published: None,
        tags: vec![],
        fact_checkers: vec![],
        source_site: SourceSite::Snopes,
        source_urls: vec![],
    }
}

pub fn tokens(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_string).collect()
}

/// Lexicon terms found in `text` by substring search over a space-padded,
/// punctuation-blanked copy of the text.
pub fn window_match_count(text: &str, terms: &[String]) -> usize {
    let blank = |s: &str| {
        let mapped: String = s
            .to_lowercase()
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() { c } else { ' ' })
            .collect();
        format!(" {} ", mapped.split_whitespace().collect::<Vec<_>>().join(" "))
    };
    let haystack = blank(text);
    let mut found: Vec<&String> = terms
        .iter()
        .filter(|t| {
            let needle = blank(t);
            !needle.trim().is_empty() && haystack.contains(&needle)
        })
        .collect();
    found.sort();
    found.dedup();
    found.len()
}

/// Synthetic health corpus: `n` records whose article and claim draw a
/// controlled number of distinct terms from `terms`, padded with filler.
pub fn synthetic_filter_corpus(n: usize, terms: &[String], seed: u64) -> Vec<ClaimRecord> {
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    let filler = ["the", "report", "said", "on", "monday", "that", "officials", "were", "asked", "about", "it", "again"];
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let text = |rng: &mut rand_chacha::ChaCha8Rng, k: usize| {
        let mut words: Vec<String> = terms.choose_multiple(rng, k).cloned().collect();
        // repeats must not inflate the distinct count
        if k > 0 && rng.gen_bool(0.5) {
            words.push(words[0].clone());
        }
        for _ in 0..rng.gen_range(3..15) {
            words.push(filler.choose(rng).unwrap().to_string());
        }
        words.shuffle(rng);
        let mut s = words.join(if rng.gen_bool(0.5) { " " } else { ", " });
        s.push('.');
        s
    };
    (0..n)
        .map(|i| {
            let (ka, kc) = (rng.gen_range(0..7), rng.gen_range(0..6));
            let article = text(&mut rng, ka);
            let claim = text(&mut rng, kc);
            record(&format!("s{i:03}"), &claim, &article)
        })
        .collect()
}

/// Clipped n-gram overlap by removing each matched reference n-gram from a
/// pool: `(matched, candidate n-grams, reference n-grams)`.
pub fn ngram_overlap_oracle(candidate: &[String], reference: &[String], n: usize) -> (usize, usize, usize) {
    let grams = |t: &[String]| -> Vec<Vec<String>> {
        if t.len() < n { vec![] } else { (0..=t.len() - n).map(|i| t[i..i + n].to_vec()).collect() }
    };
    let cand = grams(candidate);
    let mut pool = grams(reference);
    let total_ref = pool.len();
    let mut matched = 0;
    for g in &cand {
        if let Some(pos) = pool.iter().position(|r| r == g) {
            pool.swap_remove(pos);
            matched += 1;
        }
    }
    (matched, cand.len(), total_ref)
}

/// Full-table LCS.
pub fn lcs_oracle(a: &[String], b: &[String]) -> usize {
    let mut t = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            t[i][j] = if a[i - 1] == b[j - 1] { t[i - 1][j - 1] + 1 } else { t[i - 1][j].max(t[i][j - 1]) };
        }
    }
    t[a.len()][b.len()]
}

/// `(precision, recall, f1)` from overlap counts, zero when either side is empty.
pub fn prf_oracle(matched: usize, cand: usize, reference: usize) -> (f64, f64, f64) {
    if cand == 0 || reference == 0 {
        return (0.0, 0.0, 0.0);
    }
    let p = matched as f64 / cand as f64;
    let r = matched as f64 / reference as f64;
    let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    (p, r, f)
}

/// Random token sequence pairs over a small vocabulary, lengths 0..=20.
pub fn random_token_pairs(count: usize, seed: u64) -> Vec<(Vec<String>, Vec<String>)> {
    use rand::{Rng, SeedableRng};
    let vocab = ["the", "cat", "sat", "on", "mat", "a", "dog", "ran", "fast", "home"];
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let seq = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<String> {
        let len = rng.gen_range(0..=20);
        let v = rng.gen_range(2..=vocab.len());
        (0..len).map(|_| vocab[rng.gen_range(0..v)].to_string()).collect()
    };
    (0..count).map(|_| (seq(&mut rng), seq(&mut rng))).collect()
}

/// Questionnaire CSV with the given per-item rating lists for one question.
pub fn annotation_csv(question: &str, arity: usize, items: &[Vec<usize>]) -> String {
    let mut out = String::from("item_id,annotator_id,question_id,arity,choice\n");
    for (i, ratings) in items.iter().enumerate() {
        for (a, choice) in ratings.iter().enumerate() {
            out.push_str(&format!("item{i:03},ann{a},{question},{arity},{choice}\n"));
        }
    }
    out
}

/// 50 binary items with two raters, 31 of which agree: P_o = 0.62.
pub fn binary_study() -> Vec<Vec<usize>> {
    (0..50)
        .map(|i| if i < 31 { vec![i % 2, i % 2] } else { vec![0, 1] })
        .collect()
}

/// 25 ternary items with five raters. Agreeing rater pairs per item are 10
/// for four items, 6 for twenty and 4 for one: 164 of 250, P_o = 0.656.
pub fn ternary_study() -> Vec<Vec<usize>> {
    let mut items = vec![];
    for i in 0..4 {
        items.push(vec![i % 3; 5]);
    }
    for i in 0..20 {
        let (a, b) = (i % 3, (i + 1) % 3);
        items.push(vec![a, a, b, a, a]);
    }
    items.push(vec![2, 0, 2, 0, 2]);
    items
}

/// Minimal HTTP server answering every request with `handler(method, path, body)`.
pub struct MockServer {
    server: std::sync::Arc<tiny_http::Server>,
    thread: Option<std::thread::JoinHandle<()>>,
    pub requests: std::sync::Arc<std::sync::Mutex<Vec<(String, serde_json::Value)>>>,
}

type Handler = dyn Fn(&str, &str, &serde_json::Value) -> (u16, String) + Send + Sync;

impl MockServer {
    pub fn start(handler: impl Fn(&str, &str, &serde_json::Value) -> (u16, String) + Send + Sync + 'static) -> Self {
        let server = std::sync::Arc::new(tiny_http::Server::http("127.0.0.1:0").unwrap());
        let requests = std::sync::Arc::new(std::sync::Mutex::new(Vec::new()));
        let handler: Box<Handler> = Box::new(handler);
        let (srv, log) = (server.clone(), requests.clone());
        let thread = std::thread::spawn(move || {
            for mut req in srv.incoming_requests() {
                let mut body = String::new();
                let _ = req.as_reader().read_to_string(&mut body);
                let json: serde_json::Value = serde_json::from_str(&body).unwrap_or(serde_json::Value::Null);
                let (method, path) = (req.method().to_string(), req.url().to_string());
                log.lock().unwrap().push((path.clone(), json.clone()));
                let (status, reply) = handler(&method, &path, &json);
                let header = tiny_http::Header::from_bytes("Content-Type", "application/json").unwrap();
                let _ = req.respond(tiny_http::Response::from_string(reply).with_status_code(status).with_header(header));
            }
        });
        MockServer { server, thread: Some(thread), requests }
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.server.server_addr().to_ip().unwrap())
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}


fn hashed_dense(text: &str, dim: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    for t in tokens(text) {
        let h = t.bytes().fold(2166136261u32, |h, b| (h ^ b as u32).wrapping_mul(16777619));
        v[h as usize % dim] += 1.0;
    }
    v
}

/// Deterministic stand-in for the inference service implementing every endpoint.
pub fn fake_service() -> MockServer {
    use serde_json::json;
    MockServer::start(|method, path, body| {
        let texts = |key: &str| body[key].as_array().cloned().unwrap_or_default();
        let reply = match (method, path) {
            ("GET", "/v1/health") => json!({"status": "ok", "models": {"embed": "fake-embed-1", "nli": "fake-nli-1"}}),
            ("POST", "/v1/embed") => {
                let vectors: Vec<Vec<f64>> = texts("texts")
                    .iter()
                    .map(|t| hashed_dense(t.as_str().unwrap_or(""), 64))
                    .collect();
                json!({"vectors": vectors, "dim": 64})
            }
            ("POST", "/v1/nli") => {
                let relations: Vec<&str> = texts("pairs")
                    .iter()
                    .map(|p| {
                        let premise = p["premise"].as_str().unwrap_or("");
                        if premise.contains("not") { "contradicts" } else { "entails" }
                    })
                    .collect();
                json!({"relations": relations})
            }
            ("POST", "/v1/classify") => {
                let n = texts("items").len();
                json!({"probs": vec![vec![0.7, 0.1, 0.1, 0.1]; n], "labels": vec!["true"; n]})
            }
            ("POST", "/v1/summarize") => {
                let summaries: Vec<Vec<String>> = texts("items")
                    .iter()
                    .map(|it| {
                        let first = it["sentences"][0].as_str().unwrap_or("nothing to summarize").to_string();
                        vec![first]
                    })
                    .collect();
                json!({"summaries": summaries})
            }
            _ => return (404, "{\"error\":\"not found\"}".into()),
        };
        (200, reply.to_string())
    })
}

pub fn random_instance(rng: &mut ChaCha8Rng) -> (BaselineModel, Vec<(Features, VeracityLabel)>) {
    let dim = rng.gen_range(2..10);
    let lambda = if rng.gen_bool(0.5) { 0.0 } else { rng.gen_range(1e-3..1.0) };
    let mut model = BaselineModel::zeros(FeatureConfig { max_ngram: 1, hash_dim: dim }, lambda);
    for w in model.weights_mut() {
        *w = rng.gen_range(-2.0..2.0);
    }
    for b in model.bias_mut() {
        *b = rng.gen_range(-1.0..1.0);
    }
    let n = rng.gen_range(1..8);
    let data = (0..n)
        .map(|_| {
            let mut entries = Vec::new();
            for j in 0..dim as u32 {
                if rng.gen_bool(0.6) {
                    entries.push((j, rng.gen_range(-1.5..1.5)));
                }
            }
            (Features::from_entries(entries), VeracityLabel::from_index(rng.gen_range(0..NUM_LABELS)).unwrap())
        })
        .collect();
    (model, data)
}

pub fn params(m: &BaselineModel) -> Vec<f64> {
    m.weights().iter().chain(m.bias().iter()).copied().collect()
}

pub fn set_params(m: &mut BaselineModel, p: &[f64]) {
    let nw = m.weights().len();
    m.weights_mut().copy_from_slice(&p[..nw]);
    m.bias_mut().copy_from_slice(&p[nw..]);
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Norm-relative error between the analytic gradient and central differences.
pub fn gradient_relative_error(model: &mut BaselineModel, data: &[(Features, VeracityLabel)]) -> f64 {
    let (_, grad) = model.loss_and_gradient(data);
    let analytic: Vec<f64> = grad.weights.iter().chain(grad.bias.iter()).copied().collect();
    let base = params(model);
    let h = 1e-6;
    let mut numeric = Vec::with_capacity(base.len());
    for i in 0..base.len() {
        let mut p = base.clone();
        p[i] += h;
        set_params(model, &p);
        let up = model.loss(data);
        p[i] -= 2.0 * h;
        set_params(model, &p);
        let down = model.loss(data);
        numeric.push((up - down) / (2.0 * h));
    }
    set_params(model, &base);
    let diff: Vec<f64> = analytic.iter().zip(&numeric).map(|(a, b)| a - b).collect();
    norm(&diff) / norm(&analytic).max(norm(&numeric)).max(1e-12)
}

/// Ten examples per label, each carrying that label's cue words.
pub fn separable_examples() -> Vec<TrainingExample> {
    let cues = [
        ("confirmed by trials", VeracityLabel::True),
        ("debunked hoax", VeracityLabel::False),
        ("partly accurate", VeracityLabel::Mixture),
        ("insufficient data", VeracityLabel::Unproven),
    ];
    let topics = ["vaccine", "diet", "cancer", "flu", "insulin", "aspirin", "measles", "coffee", "sugar", "masks"];
    cues.iter()
        .flat_map(|(cue, label)| {
            topics.iter().map(move |t| TrainingExample {
                claim: format!("claim about {t}"),
                evidence: vec![format!("experts call the {t} story {cue}")],
                label: *label,
            })
        })
        .collect()
}

pub struct Oracle {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
}

pub fn metrics_oracle(preds: &[VeracityLabel], golds: &[VeracityLabel], avg: MacroAverage) -> Oracle {
    let mut m = [[0usize; 4]; 4];
    for (p, g) in preds.iter().zip(golds) {
        m[g.index()][p.index()] += 1;
    }
    let mut ps = vec![];
    let mut rs = vec![];
    let mut fs = vec![];
    for c in 0..4 {
        let tp = m[c][c] as f64;
        let fp: usize = (0..4).filter(|&g| g != c).map(|g| m[g][c]).sum();
        let fn_: usize = (0..4).filter(|&p| p != c).map(|p| m[c][p]).sum();
        let support = m[c][c] + fn_;
        if avg == MacroAverage::GoldLabels && support == 0 {
            continue;
        }
        let p = if tp + fp as f64 > 0.0 { tp / (tp + fp as f64) } else { 0.0 };
        let r = if support > 0 { tp / support as f64 } else { 0.0 };
        ps.push(p);
        rs.push(r);
        fs.push(if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 });
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let correct = (0..4).map(|c| m[c][c]).sum::<usize>();
    Oracle {
        precision: mean(&ps),
        recall: mean(&rs),
        f1: mean(&fs),
        accuracy: correct as f64 / preds.len() as f64,
    }
}

pub fn random_labels(rng: &mut ChaCha8Rng, n: usize, classes: usize) -> Vec<VeracityLabel> {
    (0..n).map(|_| VeracityLabel::from_index(rng.gen_range(0..classes)).unwrap()).collect()
}


pub const WORDS: &[&str] = &[
    "vaccine", "doctors", "said", "the", "trial", "patients", "risk", "flu", "study", "found", "no", "evidence",
    "cancer", "diet", "heart", "children", "hospital", "reported", "cases", "virus",
];

pub fn random_sentence(rng: &mut ChaCha8Rng) -> String {
    let n = rng.gen_range(1..12);
    (0..n).map(|_| WORDS[rng.gen_range(0..WORDS.len())]).collect::<Vec<_>>().join(" ")
}

pub fn random_article(rng: &mut ChaCha8Rng, max: usize) -> factcheck_core::evidence::SentenceList {
    let n = rng.gen_range(0..=max);
    factcheck_core::evidence::SentenceList::from_sentences((0..n).map(|_| random_sentence(rng)))
}

pub fn check_ranking_shape(ranked: &[usize], scores: &[f64], n: usize) {
    let mut sorted = ranked.to_vec();
    sorted.sort_unstable();
    assert_eq!(sorted, (0..n).collect::<Vec<_>>());
    for w in 0..ranked.len().saturating_sub(1) {
        assert!(scores[w] >= scores[w + 1]);
        if scores[w] == scores[w + 1] {
            assert!(ranked[w] < ranked[w + 1]);
        }
    }
}

