//! Random instance generators shared by the oracle tests.

use rand::Rng;

use crate::Box4;

/// Integer-coordinate box inside `[0, size]²`.
pub fn int_box<R: Rng>(rng: &mut R, size: u32) -> Box4 {
    let (x0, x1) = span(rng, size);
    let (y0, y1) = span(rng, size);
    [x0, y0, x1, y1]
}

fn span<R: Rng>(rng: &mut R, size: u32) -> (f64, f64) {
    let a = rng.gen_range(0..size);
    let b = rng.gen_range(a + 1..=size);
    (f64::from(a), f64::from(b))
}

pub fn int_boxes<R: Rng>(rng: &mut R, max: usize, size: u32) -> Vec<Box4> {
    let n = rng.gen_range(0..=max);
    (0..n).map(|_| int_box(rng, size)).collect()
}

/// A prediction near `gt`: each coordinate nudged by up to `jitter`.
pub fn jittered<R: Rng>(rng: &mut R, gt: Box4, jitter: u32, size: u32) -> Box4 {
    let j = i64::from(jitter);
    let mv = |v: f64, rng: &mut R| (v as i64 + rng.gen_range(-j..=j)).clamp(0, i64::from(size)) as f64;
    let (mut x0, mut y0, mut x1, mut y1) = (mv(gt[0], rng), mv(gt[1], rng), mv(gt[2], rng), mv(gt[3], rng));
    if x0 > x1 {
        std::mem::swap(&mut x0, &mut x1);
    }
    if y0 > y1 {
        std::mem::swap(&mut y0, &mut y1);
    }
    if x0 == x1 {
        if x1 < f64::from(size) {
            x1 += 1.0
        } else {
            x0 -= 1.0
        }
    }
    if y0 == y1 {
        if y1 < f64::from(size) {
            y1 += 1.0
        } else {
            y0 -= 1.0
        }
    }
    [x0, y0, x1, y1]
}

/// Predictions for one image: some near-duplicates of gts, some random.
pub fn detection_case<R: Rng>(rng: &mut R, max_boxes: usize, size: u32) -> (Vec<Box4>, Vec<Box4>) {
    let gts = int_boxes(rng, max_boxes, size);
    let n = rng.gen_range(0..=max_boxes);
    let preds = (0..n)
        .map(|_| {
            if !gts.is_empty() && rng.gen_bool(0.6) {
                let g = gts[rng.gen_range(0..gts.len())];
                jittered(rng, g, 3, size)
            } else {
                int_box(rng, size)
            }
        })
        .collect();
    (preds, gts)
}

pub fn mask<R: Rng>(rng: &mut R, h: usize, w: usize, density: f64) -> Vec<bool> {
    (0..h * w).map(|_| rng.gen_bool(density)).collect()
}

const VOCAB: [&str; 10] = ["the", "cells", "show", "nuclear", "atypia", "with", "mitoses", "and", "no", "necrosis"];

/// Lowercase sentence of up to `max_len` tokens drawn from a small vocabulary,
/// so n-gram overlap is common.
pub fn sentence<R: Rng>(rng: &mut R, max_len: usize) -> Vec<String> {
    let n = rng.gen_range(0..=max_len);
    (0..n).map(|_| VOCAB[rng.gen_range(0..VOCAB.len())].to_string()).collect()
}

/// A copy of `tokens` with some words replaced, dropped or inserted.
pub fn perturbed<R: Rng>(rng: &mut R, tokens: &[String]) -> Vec<String> {
    let mut out = Vec::with_capacity(tokens.len() + 2);
    for t in tokens {
        match rng.gen_range(0..10) {
            0 => {}
            1 => out.push(VOCAB[rng.gen_range(0..VOCAB.len())].to_string()),
            2 => {
                out.push(t.clone());
                out.push(VOCAB[rng.gen_range(0..VOCAB.len())].to_string());
            }
            _ => out.push(t.clone()),
        }
    }
    out
}

fn box_list(v: &[Box4]) -> String {
    let inner: Vec<String> = v.iter().map(|b| format!("[{},{},{},{}]", b[0], b[1], b[2], b[3])).collect();
    format!("[{}]", inner.join(", "))
}

/// Wrap `answer` in the response template, or a randomly broken variant.
fn wrap<R: Rng>(rng: &mut R, answer: &str) -> String {
    match rng.gen_range(0..6) {
        0 => answer.to_string(),
        1 => format!("<think>looking</think>{answer}"),
        2 => format!("<answer>{answer}</answer><think>late</think>"),
        3 => format!("  <think>x</think><think>y</think><answer>{answer}</answer>"),
        _ => format!("\n<think>{}</think>\n<answer>{answer}</answer>\n", sentence(rng, 6).join(" ")),
    }
}

/// Run-length encoding of a row-major mask, starting with a zero run.
pub fn rle(bits: &[bool]) -> Vec<usize> {
    let mut runs = Vec::new();
    let mut current = false;
    let mut len = 0;
    for &b in bits {
        if b == current {
            len += 1;
        } else {
            runs.push(len);
            current = b;
            len = 1;
        }
    }
    runs.push(len);
    runs
}

/// A random scoring request as a JSON object string (task, response, gt and
/// any context the task needs), covering every task and both well-formed and
/// malformed responses.
pub fn score_request_json<R: Rng>(rng: &mut R) -> String {
    let lambda =
        if rng.gen_bool(0.2) { format!(r#","lambda":{}"#, rng.gen_range(0..4) as f64 * 0.5) } else { String::new() };
    match rng.gen_range(0..5) {
        0 => {
            let letters = ['A', 'B', 'C', 'D'];
            let truth = letters[rng.gen_range(0..4)];
            let said = match rng.gen_range(0..4) {
                0 => format!("({})", letters[rng.gen_range(0..4)]),
                1 => letters[rng.gen_range(0..4)].to_string(),
                2 => "carcinoma".to_string(),
                _ => format!("The answer is ({truth}) carcinoma"),
            };
            format!(
                r#"{{"task":"cls","prompt":"Classify this pathological image. (A) carcinoma, (B) normal, (C) adenoma, (D) other","response":"{}","gt":{{"label":"{truth}"}}{lambda}}}"#,
                wrap(rng, &said).replace('\n', "\\n")
            )
        }
        1 => {
            let (preds, gts) = detection_case(rng, 5, 64);
            let answer = if rng.gen_bool(0.1) { "no boxes".to_string() } else { box_list(&preds) };
            format!(
                r#"{{"task":"det","response":"{}","gt":{{"boxes":{}}}{lambda}}}"#,
                wrap(rng, &answer).replace('\n', "\\n"),
                box_list(&gts)
            )
        }
        2 => {
            let h = rng.gen_range(1..=32);
            let w = rng.gen_range(1..=32);
            let density = rng.gen_range(0.0..0.5);
            let gt = mask(rng, h, w, density);
            let n = rng.gen_range(0..=3);
            let preds: Vec<Box4> = (0..n).map(|_| int_box(rng, 32)).collect();
            let runs: Vec<String> = rle(&gt).iter().map(|r| r.to_string()).collect();
            format!(
                r#"{{"task":"seg","response":"{}","gt":{{"mask":{{"size":[{h},{w}],"rle":[{}]}}}},"image":{{"h":{h},"w":{w}}}{lambda}}}"#,
                wrap(rng, &box_list(&preds)).replace('\n', "\\n"),
                runs.join(",")
            )
        }
        3 => {
            let truth = ["A", "B", "yes", "no"][rng.gen_range(0..4)];
            let said = ["(A)", "B", "yes", "No.", "maybe"][rng.gen_range(0..5)];
            format!(
                r#"{{"task":"vqa_closed","prompt":"Is there necrosis? (A) yes, (B) no","response":"{}","gt":{{"answer":"{truth}"}}{lambda}}}"#,
                wrap(rng, said).replace('\n', "\\n")
            )
        }
        _ => {
            let reference = sentence(rng, 20);
            let cand = if rng.gen_bool(0.5) { perturbed(rng, &reference) } else { sentence(rng, 20) };
            format!(
                r#"{{"task":"vqa_open","response":"{}","gt":{{"reference":"{}"}}{lambda}}}"#,
                wrap(rng, &cand.join(" ")).replace('\n', "\\n"),
                reference.join(" ")
            )
        }
    }
}
