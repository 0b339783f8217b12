use clinsum_core::faithfulness::{
    fa_f_beta, faithfulness_scores, venn_regions, EntitySet, Gazetteer, Origin, DEFAULT_BETA,
};
use clinsum_core::text::Tokenizer;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn set_from_mask(mask: u16, origin: Origin) -> EntitySet {
    EntitySet::new(
        origin,
        (0..12)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| format!("e{i}")),
    )
}

#[test]
fn regions_match_bitmask_algebra() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..2000 {
        let (s, r, y): (u16, u16, u16) = (
            rng.gen::<u16>() & 0xfff,
            rng.gen::<u16>() & 0xfff,
            rng.gen::<u16>() & 0xfff,
        );
        let v = venn_regions(
            &set_from_mask(s, Origin::Source),
            &set_from_mask(r, Origin::Reference),
            &set_from_mask(y, Origin::System),
        );
        let n = |m: u16| m.count_ones() as usize;
        assert_eq!(v.b(), n((r & s) & !y));
        assert_eq!(v.c(), n(s & r & y));
        assert_eq!(v.f(), n((y & r) & !s));
        assert_eq!(v.g(), n(y & !(s | r)));
        assert_eq!(v.f() + v.g(), n(y & !s));
        assert_eq!(v.system_total(), n(y));
        assert_eq!(v.source_total(), n(s));
        assert_eq!(v.reference_total(), n(r));

        let sc = faithfulness_scores(&v, DEFAULT_BETA).unwrap();
        if n(y) > 0 {
            assert!((sc.fa_precision * n(y) as f64 - v.c() as f64).abs() < 1e-12);
            assert_eq!(sc.incorrect_hallucination_rate, v.g() as f64 / n(y) as f64);
        }
        if v.b() + v.c() > 0 {
            assert!((sc.fa_recall * (v.b() + v.c()) as f64 - v.c() as f64).abs() < 1e-12);
        }
    }
}

#[test]
fn worked_example() {
    let s = EntitySet::new(Origin::Source, ["a", "b", "d"]);
    let r = EntitySet::new(Origin::Reference, ["a", "b", "c"]);
    let y = EntitySet::new(Origin::System, ["a", "c", "z"]);
    let v = venn_regions(&s, &r, &y);
    assert_eq!((v.b(), v.c(), v.g(), v.system_total()), (1, 1, 1, 3));
    let sc = faithfulness_scores(&v, 3.0).unwrap();
    assert!((sc.fa_f_beta - 0.4762).abs() < 1e-4);
    assert_eq!(sc.incorrect_hallucination_rate, 1.0 / 3.0);
}

#[test]
fn beta_limits() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..1000 {
        let p: f64 = rng.gen_range(0.05..1.0);
        let r: f64 = rng.gen_range(0.0..1.0);
        assert_eq!(fa_f_beta(p, p, 3.0), p);
        assert!((fa_f_beta(p, r, 1e6) - r).abs() < 1e-6);
        let want = 10.0 * p * r / (9.0 * p + r);
        assert!((fa_f_beta(p, r, 3.0) - want).abs() < 1e-12);
    }
}

const TERMS: [&str; 8] = [
    "chest pain",
    "pain",
    "heart failure",
    "failure",
    "aspirin",
    "pneumonia",
    "acute kidney injury",
    "kidney",
];

const FILLER: [&str; 6] = ["patient", "with", "treated", "noted", "and", "of"];

fn random_sentence(rng: &mut ChaCha8Rng) -> String {
    let n = rng.gen_range(1..8);
    let mut words: Vec<&str> = Vec::new();
    for _ in 0..n {
        if rng.gen_bool(0.4) {
            words.push(TERMS[rng.gen_range(0..TERMS.len())]);
        } else {
            words.push(FILLER[rng.gen_range(0..FILLER.len())]);
        }
    }
    let end = [".", "!", "?", ""][rng.gen_range(0..4)];
    format!("{}{end}", words.join(" "))
}

#[test]
fn extractive_summaries_never_hallucinate() {
    let tok = Tokenizer::default();
    let gaz = Gazetteer::new(TERMS, tok).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..300 {
        let n = rng.gen_range(1..15);
        let sentences: Vec<String> = (0..n).map(|_| random_sentence(&mut rng)).collect();
        let source = sentences.join(if rng.gen_bool(0.5) { " " } else { "\n" });
        let pool = tok.split_sentences(&source);
        let k = rng.gen_range(0..=pool.len());
        let mut picked: Vec<&str> = pool
            .choose_multiple(&mut rng, k)
            .map(|s| s.raw_text.as_str())
            .collect();
        picked.shuffle(&mut rng);
        let summary = picked.join("\n");
        let reference = random_sentence(&mut rng);

        let s = gaz.extract(&source, Origin::Source);
        let y = gaz.extract(&summary, Origin::System);
        for e in y.iter() {
            assert!(
                s.contains(e),
                "{e:?} from {summary:?} missing in {source:?}"
            );
        }
        let r = gaz.extract(&reference, Origin::Reference);
        let sc = faithfulness_scores(&venn_regions(&s, &r, &y), DEFAULT_BETA).unwrap();
        assert_eq!(sc.incorrect_hallucination_rate, 0.0);
    }
}
