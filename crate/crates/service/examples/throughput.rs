//! Single-thread scoring throughput per task, through the same handler the
//! HTTP routes use (no socket). `cargo run --release -p pathreward-service --example throughput`

use std::time::Instant;

use pathreward_core::reward::{RewardConfig, Scorer};
use pathreward_service::{handle_score, ScoreRequest};
use serde_json::json;

fn main() {
    let scorer = Scorer::new(RewardConfig::default()).expect("default config is valid");
    let mask_rle: Vec<usize> = vec![64 * 20, 24, 40, 24, 40, 24, 64 * 41 - 24];
    let cases = [
        ("cls", json!({"task": "cls", "response": "<think>dense nuclei</think><answer>(B)</answer>", "gt": {"label": "B"}})),
        (
            "det",
            json!({"task": "det", "response": "<think>.</think><answer>[[1,1,20,20],[30,30,50,50],[5,40,15,60]]</answer>",
                   "gt": {"boxes": [[0,0,20,20],[30,31,50,52]]}}),
        ),
        (
            "seg 64x64",
            json!({"task": "seg", "response": "<think>.</think><answer>[[20,20,44,44]]</answer>",
                   "gt": {"mask": {"size": [64, 64], "rle": mask_rle}}, "image": {"h": 64, "w": 64}}),
        ),
        (
            "vqa_open",
            json!({"task": "vqa_open", "response": "<think>.</think><answer>sheets of atypical cells with prominent nucleoli</answer>",
                   "gt": {"reference": "the section shows sheets of atypical cells with prominent nucleoli"}}),
        ),
    ];
    for (name, body) in cases {
        let req: ScoreRequest = serde_json::from_value(body).expect("valid request");
        let n = 200_000;
        let start = Instant::now();
        let mut sink = 0.0;
        for _ in 0..n {
            sink += handle_score(&scorer, &req).expect("scores").total;
        }
        let secs = start.elapsed().as_secs_f64();
        println!("{name:<10} {:>10.0} scores/s  (checksum {sink})", n as f64 / secs);
    }
}
