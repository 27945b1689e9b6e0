//! Backend call accounting and mode agreement for the order-robustness metric.

use std::sync::atomic::{AtomicUsize, Ordering};

use amsc_core::backend::{build_prompt, McqaPrompt, MockBackend, OptionScores, QuestionSource};
use amsc_core::data::{symptom_view, ViewMode};
use amsc_core::error::BackendError;
use amsc_core::eval::{ppa, PpaMode};
use amsc_core::fixture::synthesize_fixture;
use amsc_core::ScoreBackend;

struct Counting<B> {
    inner: B,
    calls: AtomicUsize,
}

impl<B: ScoreBackend> ScoreBackend for Counting<B> {
    fn id(&self) -> String {
        self.inner.id()
    }
    fn model_name(&self) -> &str {
        self.inner.model_name()
    }
    fn option_scores(&self, prompt: &McqaPrompt) -> Result<OptionScores, BackendError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.option_scores(prompt)
    }
}

fn setup(n: usize, bias: f64) -> (Counting<MockBackend>, Vec<McqaPrompt>) {
    let (dataset, profiles) = synthesize_fixture(n, 3, 0.5, 4).unwrap();
    let backend = Counting {
        inner: MockBackend::new(4, bias, &profiles),
        calls: AtomicUsize::new(0),
    };
    let prompts = dataset
        .records
        .iter()
        .map(|r| {
            let view = symptom_view(r, ViewMode::ExplicitOnly);
            build_prompt(QuestionSource::Symptoms(&view), &dataset.diseases, None, "default").unwrap()
        })
        .collect();
    (backend, prompts)
}

#[test]
fn exhaustive_scores_every_order_once() {
    for n in 2..=5 {
        let (backend, prompts) = setup(n, 0.0);
        let r = ppa(&backend, &prompts[0], PpaMode::Exhaustive).unwrap();
        let fact: usize = (1..=n).product();
        assert_eq!(backend.calls.load(Ordering::SeqCst), fact);
        assert_eq!(r.permutations, fact);
    }
}

#[test]
fn sampled_calls_equal_sample_size() {
    let (backend, prompts) = setup(5, 0.0);
    ppa(&backend, &prompts[0], PpaMode::Sampled { k: 17, seed: 3 }).unwrap();
    assert_eq!(backend.calls.load(Ordering::SeqCst), 17);
}

#[test]
fn sampling_every_order_equals_exhaustive() {
    for bias in [0.0, 2.0] {
        let (backend, prompts) = setup(4, bias);
        for p in &prompts {
            let full = ppa(&backend, p, PpaMode::Exhaustive).unwrap();
            for seed in 0..3 {
                let sampled = ppa(&backend, p, PpaMode::Sampled { k: 24, seed }).unwrap();
                assert_eq!(sampled, full);
            }
        }
    }
}

#[test]
fn oversized_sample_is_capped_at_all_orders() {
    let (backend, prompts) = setup(3, 1.0);
    let r = ppa(&backend, &prompts[0], PpaMode::Sampled { k: 1000, seed: 0 }).unwrap();
    assert_eq!(r.permutations, 6);
    assert_eq!(backend.calls.load(Ordering::SeqCst), 6);
}
