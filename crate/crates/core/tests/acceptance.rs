//! Acceptance checks, one line per criterion.
//!
//! Fixture-dependent checks read these environment variables and report
//! NOT EVALUATED when they are unset:
//!
//! - `SCISIMP_SASS_CORPUS`: corpus JSONL (all splits)
//! - `SCISIMP_VOA_LIST`, `SCISIMP_FREQ_TABLE`: optional resource overrides
//! - `SCISIMP_SYSTEM_OUTPUTS`: system outputs JSONL (`{"id", "text"}`) for the test split
//! - `SCISIMP_SYSTEM_NAME`: published system those outputs belong to (e.g. Gemma-7B, GPT-4o)
//! - `SCISIMP_EMBED_ENDPOINT`: embedding service base URL, enables the BS cell

mod common;

use std::collections::HashMap;
use std::env;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{bertscore_oracle, embedded, p_df1, p_df2, sari_oracle};
use scisimp_core::corpus::{
    corpus_stats, filter_split, load_corpus, render_inference_prompt, render_training_example,
    SassRecord, Split,
};
use scisimp_core::lexicon::{load_frequency_table, load_voa, FrequencyTable, VoaLexicon};
use scisimp_core::metrics::{Metric, Resources, SURFACE_METRICS};
use scisimp_core::pipeline::{
    emit_corpus_stats, emit_report, evaluate_batch, load_outputs, BatchOptions, ReportFormat,
};
use scisimp_core::readability::{ari, flesch_kincaid};
use scisimp_core::sari::sari;
use scisimp_core::semantic::{bertscore, HttpEmbeddingProvider, DEFAULT_LAYER};
use scisimp_core::simplifier::{extract_simplified, ExtractError};
use scisimp_core::stats::{paired_t_test, student_t_two_tailed_p, TestOutcome};
use scisimp_core::text::analyze;
use scisimp_core::Error;

enum Verdict {
    Pass(String),
    Fail(String),
    NotEvaluated(String),
}

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn within(got: f64, want: f64, tol: f64) -> bool {
    (got - want).abs() <= tol
}

// ---------------------------------------------------------------------------

fn formula_exactness() -> Verdict {
    let doc = analyze("The cat sat on the mat.").unwrap();
    let a = ari(&doc).unwrap();
    let f = flesch_kincaid(&doc).unwrap();
    check(
        within(a, -5.085, 1e-9) && within(f, -1.45, 1e-9),
        format!("ARI {a:.12}, F-K {f:.12}"),
    )
}

fn random_words(rng: &mut ChaCha8Rng, min: usize) -> String {
    const VOCAB: [&str; 6] = ["a", "B", "c", "D", "e", "F"];
    let len = rng.gen_range(min..=5);
    (0..len)
        .map(|_| VOCAB[rng.gen_range(0..VOCAB.len())])
        .collect::<Vec<_>>()
        .join(" ")
}

fn sari_oracle_equivalence() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(20240601);
    let mut mismatches = 0;
    let mut first = String::new();
    for _ in 0..1000 {
        let i = random_words(&mut rng, 1);
        let o = random_words(&mut rng, 0);
        let r = random_words(&mut rng, 0);
        let got = sari(&i, &o, &r).unwrap();
        let (total, add, keep, del) = sari_oracle(&i, &o, &r);
        if got.total != total || got.f_add != add || got.f_keep != keep || got.p_del != del {
            mismatches += 1;
            if first.is_empty() {
                first = format!("; first: ({i:?}, {o:?}, {r:?}) {} vs {total}", got.total);
            }
        }
    }
    check(
        mismatches == 0,
        format!("{mismatches}/1000 mismatches{first}"),
    )
}

fn statistics() -> Verdict {
    let p1 = student_t_two_tailed_p(1.0, 1).unwrap();
    let p2 = student_t_two_tailed_p(3.4641, 2).unwrap();
    let pn = student_t_two_tailed_p(1.959964, 1_000_000).unwrap();
    // The published 0.0742 is rounded; the closed form at t = 3.4641 is 0.074180...
    let ok = within(p1, 0.5, 1e-6)
        && within(p1, p_df1(1.0), 1e-6)
        && within(p2, p_df2(3.4641), 1e-6)
        && format!("{p2:.4}") == "0.0742"
        && within(pn, 0.05, 1e-4);
    check(
        ok,
        format!(
            "p(1,1)={p1:.9}, p(3.4641,2)={p2:.9} (closed form {:.9}), p(1.959964,1e6)={pn:.7}",
            p_df2(3.4641)
        ),
    )
}

fn bertscore_properties() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let vecs = |rng: &mut ChaCha8Rng| -> Vec<Vec<f64>> {
        let n = rng.gen_range(1..=4);
        (0..n)
            .map(|_| loop {
                let v: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
                if v.iter().map(|x| x * x).sum::<f64>() > 1e-3 {
                    break v;
                }
            })
            .collect()
    };
    let mut failures = Vec::new();
    for case in 0..500 {
        let c = vecs(&mut rng);
        let r = vecs(&mut rng);
        let a = embedded(c.clone(), "mock");
        let b = embedded(r.clone(), "mock");
        let ab = bertscore(&a, &b).unwrap();
        let ba = bertscore(&b, &a).unwrap();
        let (p, rec, _) = bertscore_oracle(&c, &r);
        if bertscore(&a, &a).unwrap().f1 != 1.0 {
            failures.push(format!("case {case}: self F1 != 1"));
        }
        if ab.precision != ba.recall || ab.recall != ba.precision || ab.f1 != ba.f1 {
            failures.push(format!("case {case}: swap asymmetry"));
        }
        if !within(ab.precision, p, 1e-12) || !within(ab.recall, rec, 1e-12) {
            failures.push(format!("case {case}: oracle mismatch"));
        }
    }
    check(
        failures.is_empty(),
        format!(
            "500 mock cases, {} failures{}",
            failures.len(),
            failures
                .first()
                .map(|f| format!(", first: {f}"))
                .unwrap_or_default()
        ),
    )
}

fn template_bytes() -> Verdict {
    let rec = SassRecord {
        id: "t1".into(),
        abstract_text: "Enzymes catalyze reactions.".into(),
        significance: "Enzymes speed up chemistry in cells.".into(),
        discipline: "Biochemistry".into(),
        split: Split::Train,
    };
    let training = render_training_example(&rec);
    let want = "Rewrite this abstract in plain English for middle school students: \
                Enzymes catalyze reactions.\nLay summary: Enzymes speed up chemistry in cells.";
    let prompt = render_inference_prompt(&rec.abstract_text).unwrap();
    let ok = training.as_bytes() == want.as_bytes()
        && training.starts_with(&prompt)
        && prompt.ends_with("Lay summary:");
    check(
        ok,
        format!(
            "{} training bytes, {} prompt bytes",
            training.len(),
            prompt.len()
        ),
    )
}

fn json_contract() -> Verdict {
    let ok = extract_simplified(br#"{"simplified_version": "Plain words."}"#).as_deref()
        == Ok("Plain words.")
        && matches!(
            extract_simplified(br#"{"simplified_version": {"text": "x"}}"#),
            Err(ExtractError::NestedStructure(_))
        )
        && extract_simplified(br#"{"answer": "x"}"#) == Err(ExtractError::MissingKey);
    check(ok, "flat accepted; nested and missing-key rejected".into())
}

fn no_bad_numbers(bytes: &[u8]) -> bool {
    let s = String::from_utf8_lossy(bytes);
    !s.contains("NaN") && !s.contains("inf")
}

fn degenerate_suite() -> Verdict {
    let res = Resources::bundled();
    let rec = |id: &str, a: &str, s: &str| SassRecord {
        id: id.into(),
        abstract_text: a.into(),
        significance: s.into(),
        discipline: "X".into(),
        split: Split::Test,
    };
    let mut notes = Vec::new();
    let mut ok = true;
    let mut expect = |cond: bool, what: &str| {
        if !cond {
            ok = false;
            notes.push(what.to_string());
        }
    };

    expect(
        matches!(analyze(""), Err(Error::DegenerateDocument(_))),
        "empty doc",
    );
    expect(
        matches!(analyze(" ... !? "), Err(Error::DegenerateDocument(_))),
        "punctuation-only doc",
    );
    expect(
        matches!(sari("", "a", "b"), Err(Error::DegenerateDocument(_))),
        "empty SARI input",
    );
    expect(
        matches!(
            corpus_stats(&[rec("a", "One two.", "Three.")], &res, 0.05),
            Err(Error::InsufficientData { needed: 2, got: 1 })
        ),
        "single-record corpus",
    );
    expect(
        matches!(
            paired_t_test(&[2.0, 3.0, 4.0], &[1.0, 2.0, 3.0]),
            Err(Error::DegenerateVariance { .. })
        ),
        "constant shift t-test",
    );
    expect(
        TestOutcome::run(&[1.0, 2.0], &[1.0, 2.0], 6, 0.05).unwrap() == TestOutcome::NoChange,
        "zero differences",
    );

    let voa = VoaLexicon::from_words(["cats", "eat", "fish"], "tiny");
    let freq = FrequencyTable::from_pairs([("cats", 1e4)], 1.0, "tiny");
    let small = Resources::new(&voa, &freq);
    let all_voa = [
        rec("a", "Cats eat fish.", "Cats eat fish. Cats eat."),
        rec("b", "Fish eat.", "Cats eat fish."),
    ];
    match corpus_stats(&all_voa, &small, 0.05) {
        Ok(stats) => {
            let finite = stats
                .metrics
                .iter()
                .all(|m| m.abstracts.mean.is_finite() && m.significance.mean.is_finite());
            expect(finite, "all-VOA values finite");
            for f in [
                ReportFormat::Markdown,
                ReportFormat::Csv,
                ReportFormat::Json,
            ] {
                expect(
                    no_bad_numbers(&emit_corpus_stats(&stats, f)),
                    "all-VOA report cells",
                );
            }
        }
        Err(e) => expect(false, &format!("all-VOA corpus: {e}")),
    }

    let records = [
        rec("a", "Cells divide quickly.", "Cells split."),
        rec("b", "Stars emit light.", "Stars shine."),
    ];
    let echo: HashMap<String, String> = records
        .iter()
        .map(|r| (r.id.clone(), r.abstract_text.clone()))
        .collect();
    match evaluate_batch(&records, &echo, "echo", &res, &BatchOptions::default()) {
        Ok(report) => {
            for f in [
                ReportFormat::Markdown,
                ReportFormat::Csv,
                ReportFormat::Json,
            ] {
                expect(
                    no_bad_numbers(&emit_report(std::slice::from_ref(&report), f)),
                    "echo report cells",
                );
            }
        }
        Err(e) => expect(false, &format!("echo batch: {e}")),
    }
    let single = evaluate_batch(&records[..1], &echo, "one", &res, &BatchOptions::default());
    expect(
        single.is_ok_and(|r| {
            r.metric(Metric::Ari).unwrap().test == Some(TestOutcome::InsufficientData { n: 1 })
        }),
        "single-record batch",
    );

    check(
        ok,
        if notes.is_empty() {
            "all degenerate cases defined".into()
        } else {
            notes.join(", ")
        },
    )
}

// ---------------------------------------------------------------------------
// Fixture-dependent checks.

fn resources_from_env() -> Result<(VoaLexicon, FrequencyTable), String> {
    let voa = match env::var_os("SCISIMP_VOA_LIST") {
        Some(p) => load_voa(&PathBuf::from(p)).map_err(|e| e.to_string())?,
        None => VoaLexicon::bundled().clone(),
    };
    let freq = match env::var_os("SCISIMP_FREQ_TABLE") {
        Some(p) => load_frequency_table(&PathBuf::from(p)).map_err(|e| e.to_string())?,
        None => FrequencyTable::bundled().clone(),
    };
    Ok((voa, freq))
}

fn corpus_from_env() -> Option<Result<Vec<SassRecord>, String>> {
    let path = env::var_os("SCISIMP_SASS_CORPUS")?;
    Some(load_corpus(&PathBuf::from(path)).map_err(|e| e.to_string()))
}

const PUBLISHED_ABSTRACT_MEANS: [(Metric, f64, f64); 6] = [
    (Metric::Ari, 18.9, 0.5),
    (Metric::Fk, 19.2, 0.5),
    (Metric::Voa, -0.43, 0.05),
    (Metric::Sl, 25.4, 0.5),
    (Metric::Wa, 12.0, 0.1),
    (Metric::Wl, 5.3, 0.1),
];

fn corpus_reproduction() -> Verdict {
    let corpus = match corpus_from_env() {
        None => return Verdict::NotEvaluated("set SCISIMP_SASS_CORPUS to the corpus JSONL".into()),
        Some(Err(e)) => return Verdict::Fail(e),
        Some(Ok(c)) => c,
    };
    let (voa, freq) = match resources_from_env() {
        Ok(r) => r,
        Err(e) => return Verdict::Fail(e),
    };
    let res = Resources::new(&voa, &freq);
    let train = filter_split(&corpus, Split::Train);
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let stats = match pool.install(|| corpus_stats(&train, &res, 0.05)) {
        Ok(s) => s,
        Err(e) => return Verdict::Fail(e.to_string()),
    };
    let elapsed = start.elapsed();
    let mut ok = elapsed < Duration::from_secs(120);
    let mut cells = Vec::new();
    for (metric, want, tol) in PUBLISHED_ABSTRACT_MEANS {
        let m = stats.metrics.iter().find(|m| m.metric == metric).unwrap();
        let good = within(m.abstracts.mean, want, tol);
        let sig = m.test.is_significant();
        ok &= good && sig;
        cells.push(format!(
            "{} {:.3} vs {want}±{tol}{}{}",
            metric.label(),
            m.abstracts.mean,
            if good { "" } else { " OUT" },
            if sig { "*" } else { " (not significant)" }
        ));
    }
    check(
        ok,
        format!(
            "n={} skipped={} [{}] in {:.1}s (voa: {}, freq: {})",
            stats.n_records,
            stats.skipped.len(),
            cells.join("; "),
            elapsed.as_secs_f64(),
            stats.voa_source,
            stats.freq_source
        ),
    )
}

// ARI, F-K, SARI, VOA, SL, WA, WL, BS
const PUBLISHED_SYSTEMS: [(&str, [f64; 8]); 6] = [
    ("OLMo-1B", [16.1, 17.0, 37.6, -0.29, 22.2, 11.9, 5.1, 0.63]),
    ("Gemma-2B", [15.5, 16.5, 39.1, -0.26, 20.6, 11.9, 5.2, 0.64]),
    ("Phi-2", [12.5, 14.3, 37.7, -0.03, 21.1, 12.5, 4.5, 0.53]),
    ("Gemma-7B", [16.3, 17.1, 43.7, -0.27, 21.9, 12.0, 5.2, 0.67]),
    ("GPT-3.5", [9.4, 9.7, 36.8, 0.27, 16.8, 12.5, 4.4, 0.58]),
    ("GPT-4o", [8.5, 8.9, 37.5, 0.10, 14.5, 12.2, 4.4, 0.59]),
];

const SYSTEM_COLUMNS: [Metric; 8] = [
    Metric::Ari,
    Metric::Fk,
    Metric::Sari,
    Metric::Voa,
    Metric::Sl,
    Metric::Wa,
    Metric::Wl,
    Metric::Bs,
];

fn system_tolerance(metric: Metric) -> Option<f64> {
    match metric {
        Metric::Ari | Metric::Fk | Metric::Sl | Metric::Wl => Some(0.5),
        Metric::Sari => Some(3.0),
        Metric::Bs => Some(0.05),
        Metric::Voa | Metric::Wa => None,
    }
}

fn system_reproduction() -> Verdict {
    let (Some(outputs_path), Some(system)) = (
        env::var_os("SCISIMP_SYSTEM_OUTPUTS"),
        env::var("SCISIMP_SYSTEM_NAME").ok(),
    ) else {
        return Verdict::NotEvaluated(
            "set SCISIMP_SYSTEM_OUTPUTS and SCISIMP_SYSTEM_NAME (and SCISIMP_SASS_CORPUS)".into(),
        );
    };
    let Some(row) = PUBLISHED_SYSTEMS
        .iter()
        .find(|(name, _)| name.eq_ignore_ascii_case(&system))
    else {
        return Verdict::Fail(format!("unknown system `{system}`"));
    };
    let corpus = match corpus_from_env() {
        None => return Verdict::NotEvaluated("SCISIMP_SASS_CORPUS is unset".into()),
        Some(Err(e)) => return Verdict::Fail(e),
        Some(Ok(c)) => c,
    };
    let outputs = match load_outputs(&PathBuf::from(outputs_path)) {
        Ok(o) => o,
        Err(e) => return Verdict::Fail(e.to_string()),
    };
    let (voa, freq) = match resources_from_env() {
        Ok(r) => r,
        Err(e) => return Verdict::Fail(e),
    };
    let embedder = match env::var("SCISIMP_EMBED_ENDPOINT") {
        Ok(url) => {
            match HttpEmbeddingProvider::connect(&url, DEFAULT_LAYER, Duration::from_secs(120)) {
                Ok(p) => Some(p),
                Err(e) => return Verdict::Fail(format!("embedding service: {e}")),
            }
        }
        Err(_) => None,
    };
    let mut res = Resources::new(&voa, &freq);
    if let Some(p) = &embedder {
        res = res.with_embedder(p);
    }
    let test = filter_split(&corpus, Split::Test);
    let report = match evaluate_batch(&test, &outputs, row.0, &res, &BatchOptions::default()) {
        Ok(r) => r,
        Err(e) => return Verdict::Fail(e.to_string()),
    };

    let mut ok = true;
    let mut cells = Vec::new();
    for (metric, want) in SYSTEM_COLUMNS.iter().zip(row.1) {
        let Some(m) = report.metric(*metric) else {
            cells.push(format!("{} not evaluated", metric.label()));
            continue;
        };
        let mut cell = format!("{} {:.3} vs {want}", metric.label(), m.system.mean);
        if let Some(tol) = system_tolerance(*metric) {
            let good = within(m.system.mean, want, tol);
            ok &= good;
            cell.push_str(&format!("±{tol}{}", if good { "" } else { " OUT" }));
        }
        if SURFACE_METRICS.contains(metric) {
            let sig = m.test.is_some_and(|t| t.is_significant());
            ok &= sig;
            cell.push_str(if sig { "*" } else { " (not significant)" });
        }
        cells.push(cell);
    }
    check(
        ok,
        format!(
            "{} n={} failures={} [{}]",
            row.0,
            report.n_records,
            report.failures.len(),
            cells.join("; ")
        ),
    )
}

type Criterion = (&'static str, fn() -> Verdict);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("formula exactness", formula_exactness),
        ("corpus statistics reproduction", corpus_reproduction),
        ("SARI oracle equivalence", sari_oracle_equivalence),
        ("t distribution tails", statistics),
        ("BERTScore with mock provider", bertscore_properties),
        ("prompt template bytes", template_bytes),
        ("JSON output contract", json_contract),
        ("degenerate inputs", degenerate_suite),
        ("system evaluation reproduction", system_reproduction),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let (tag, detail) = match run() {
            Verdict::Pass(d) => ("PASS", d),
            Verdict::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Verdict::NotEvaluated(d) => ("NOT EVALUATED", d),
        };
        println!("{tag:<13} {name}: {detail}");
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
