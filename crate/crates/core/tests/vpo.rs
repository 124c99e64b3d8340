mod common;

use std::collections::BTreeMap;

use avs_core::annotations::ClassTable;
use avs_core::audio::{apply_pan, trim, write_wav, PanCoefficient, PanLaw, Waveform, CLIP_SECONDS, SAMPLE_RATE};
use avs_core::labels::{ClassId, BACKGROUND};
use avs_core::rng::{item_stream, stream};
use avs_core::vpo::*;
use common::*;

fn class(table: &ClassTable, label: &str) -> u8 {
    table.by_label(label).unwrap().id.0
}

#[test]
fn ms_eligibility_rules() {
    let t = ClassTable::vpo();
    let (dog, cat, car) = (class(&t, "dog"), class(&t, "cat"), class(&t, "car"));
    let three = rect_scene(1, 8, 8, &[(1, dog, 0, 0, 2, 2), (2, cat, 3, 3, 5, 5), (3, car, 6, 6, 8, 8)]);
    let k = score_image(&three, Mode::Ms);
    assert!(k.eligible);
    assert_eq!(k.diversity, 3);
    let dogs = rect_scene(2, 8, 8, &[(1, dog, 0, 0, 2, 2), (2, dog, 3, 3, 5, 5)]);
    assert!(!score_image(&dogs, Mode::Ms).eligible);
    assert!(score_image(&dogs, Mode::Msmi).eligible);
    assert!(!score_image(&three, Mode::Msmi).eligible);
}

#[test]
fn ss_priority_matches_explicit_sort() {
    let corpus = random_corpus(11, 5, 6);
    let mut keyed: Vec<PriorityKey> = corpus.iter().map(|s| score_image(s, Mode::Ss)).collect();
    keyed.sort();
    let mut oracle: Vec<(usize, u64)> = corpus.iter().map(|s| (s.distinct_classes().len(), s.image_id)).collect();
    oracle.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    assert_eq!(keyed.iter().map(|k| k.image_id).collect::<Vec<_>>(), oracle.iter().map(|o| o.1).collect::<Vec<_>>());
}

#[test]
fn ss_selection_is_uniform() {
    let t = ClassTable::vpo();
    let pool = full_pool(&t);
    let s = rect_scene(5, 8, 8, &[(1, class(&t, "dog"), 0, 0, 4, 4), (2, class(&t, "cat"), 4, 4, 8, 8)]);
    let mut dog = 0;
    let trials = 10_000;
    for i in 0..trials {
        let e = assign_audio(&s, Mode::Ss, &mut item_stream(7, "ss-test", i), &pool, &t, &AssignConfig::default()).unwrap();
        validate_entry(&e, Some(&s)).unwrap();
        if e.sounding[0].instance_id == 1 {
            dog += 1;
        }
    }
    assert!(within_3_sigma(dog, trials as usize, 0.5), "{dog}");
}

#[test]
fn missing_clips_name_the_tag() {
    let t = ClassTable::vpo();
    let s = rect_scene(5, 8, 8, &[(1, class(&t, "zebra"), 0, 0, 4, 4)]);
    let err = assign_audio(&s, Mode::Ss, &mut stream(0), &AudioPool::default(), &t, &AssignConfig::default()).unwrap_err();
    assert!(err.to_string().contains("zebra braying"), "{err}");
}

fn entry_with(n: usize) -> ManifestEntry {
    ManifestEntry {
        image_id: 1,
        subset: Mode::Ms,
        split: Split::Train,
        sounding: (0..n as u64)
            .map(|i| SoundingSource {
                instance_id: i,
                class_id: ClassId(i as u8 + 1),
                tag: String::new(),
                clip: String::new(),
                alpha: 0.5,
                gains: [0.5, 0.5],
            })
            .collect(),
        silent_instances: vec![],
        mixed_audio: String::new(),
        label_raster: String::new(),
    }
}

#[test]
fn drop_boundaries() {
    let two = drop_sounds(entry_with(2), &mut stream(1), 1.0, 2);
    assert_eq!(two.sounding.len(), 2);
    let five = drop_sounds(entry_with(5), &mut stream(1), 1.0, 2);
    assert_eq!(five.sounding.len(), 1);
    assert_eq!(five.silent_instances.len(), 4);
    let none = drop_sounds(entry_with(5), &mut stream(1), 0.0, 2);
    assert_eq!(none.sounding.len(), 5);
}

#[test]
fn drop_keep_rate_matches_expectation() {
    let trials = 10_000;
    let mut kept = [0usize; 4];
    for i in 0..trials {
        let e = drop_sounds(entry_with(4), &mut item_stream(3, "drop", i), 0.5, 2);
        assert!(!e.sounding.is_empty());
        for s in &e.sounding {
            kept[s.instance_id as usize] += 1;
        }
    }
    // One of four is always kept; each other survives with probability 1/2.
    let p = 0.25 + 0.75 * 0.5;
    for k in kept {
        assert!(within_3_sigma(k, trials as usize, p), "{kept:?}");
    }
}

#[test]
fn split_counts_and_determinism() {
    let mut entries: Vec<ManifestEntry> = (0..100)
        .map(|i| {
            let mut e = entry_with(1);
            e.image_id = i;
            e.sounding[0].class_id = ClassId((i % 4) as u8 + 1);
            e
        })
        .collect();
    split(&mut entries, 0.1, 9).unwrap();
    let test: Vec<u64> = entries.iter().filter(|e| e.split == Split::Test).map(|e| e.image_id).collect();
    assert_eq!(test.len(), 10);
    let mut again = entries.clone();
    split(&mut again, 0.1, 9).unwrap();
    assert_eq!(again, entries);
    // Each class holds 25 entries; its share of the test set is 2.5 ± 1.
    let mut per_class: BTreeMap<ClassId, usize> = BTreeMap::new();
    for e in entries.iter().filter(|e| e.split == Split::Test) {
        *per_class.entry(e.sounding[0].class_id).or_default() += 1;
    }
    for n in per_class.values() {
        assert!((*n as f64 - 2.5).abs() <= 1.0);
    }
    assert!(matches!(split(&mut entries, 1.0, 9), Err(BuildError::Fraction(_))));
    assert!(matches!(split(&mut [], 0.5, 9), Err(BuildError::NoEntries)));
}

#[test]
fn dominant_class_ties_to_smaller_id() {
    let mut e = entry_with(3);
    e.sounding[0].class_id = ClassId(7);
    e.sounding[1].class_id = ClassId(3);
    e.sounding[2].class_id = ClassId(7);
    assert_eq!(dominant_class(&e), ClassId(7));
    e.sounding[2].class_id = ClassId(9);
    assert_eq!(dominant_class(&e), ClassId(3));
    assert_eq!(dominant_class(&entry_with(0)), BACKGROUND);
}

#[test]
fn stats_ratio_and_tally() {
    let mut manifest = Vec::new();
    for i in 0..90 {
        let mut e = entry_with(1);
        e.image_id = i;
        e.sounding[0].class_id = ClassId(if i < 10 { 1 } else { 2 });
        manifest.push(e);
    }
    let st = stats(&manifest);
    assert_eq!(st.imbalance_ratio, 8.0);
    assert_eq!(st.class_counts[&ClassId(1)], 10);
    assert_eq!(stats(&manifest[..10]).imbalance_ratio, 1.0);
    assert_eq!(stats(&[]).imbalance_ratio, 1.0);

    let t = ClassTable::vpo();
    let corpus = random_corpus(4, 40, 8);
    let out = build_manifest(&corpus, &full_pool(&t), &t, &BuildConfig::new(Mode::Msmi, 4), 2).unwrap();
    let st = stats(&out.entries);
    let mut oracle: BTreeMap<ClassId, usize> = BTreeMap::new();
    for e in &out.entries {
        for s in &e.sounding {
            *oracle.entry(s.class_id).or_default() += 1;
        }
    }
    assert_eq!(st.class_counts, oracle);
    assert_eq!(st.subset_counts[&Mode::Msmi], out.entries.len());
}

#[test]
fn build_is_thread_independent_and_valid() {
    let t = ClassTable::vpo();
    let pool = full_pool(&t);
    let corpus = random_corpus(21, 60, 10);
    for mode in Mode::ALL {
        let cfg = BuildConfig::new(mode, 7);
        let one = build_manifest(&corpus, &pool, &t, &cfg, 1).unwrap();
        let four = build_manifest(&corpus, &pool, &t, &cfg, 4).unwrap();
        let text = write_manifest(&one.entries);
        assert_eq!(text, write_manifest(&four.entries));
        assert_eq!(parse_manifest(&text).unwrap(), one.entries);
        assert_eq!(one.entries.len() + one.ineligible, corpus.len());
        validate_manifest(&one.entries, |id| corpus.iter().find(|s| s.image_id == id)).unwrap();
    }
}

fn tone(freq: f64, seconds: f64) -> Waveform {
    let n = (seconds * SAMPLE_RATE as f64) as usize;
    Waveform::mono((0..n).map(|i| 0.5 * (2.0 * std::f64::consts::PI * freq * i as f64 / SAMPLE_RATE as f64).sin()).collect())
}

#[test]
fn render_single_centered_source() {
    let t = ClassTable::vpo();
    let dog = class(&t, "dog");
    let s = rect_scene(3, 10, 10, &[(1, dog, 2, 3, 8, 7), (2, class(&t, "cat"), 0, 0, 2, 2)]);
    let clip = tone(440.0, 2.0);
    let mut e = entry_with(1);
    e.image_id = 3;
    e.subset = Mode::Ss;
    e.sounding[0].instance_id = 1;
    e.sounding[0].class_id = ClassId(dog);
    e.silent_instances = vec![2];
    validate_entry(&e, Some(&s)).unwrap();
    let out = render_entry(&e, &s, |_| Ok(clip.clone()), PanLaw::Linear).unwrap();
    let trimmed = trim(&clip, CLIP_SECONDS).unwrap();
    let panned = apply_pan(&trimmed, PanCoefficient::CENTER, PanLaw::Linear).unwrap();
    assert_eq!(out.audio, panned);
    // The silent cat's pixels stay background.
    assert_eq!(out.labels.get(0, 0), BACKGROUND);
    assert_eq!(out.labels.get(4, 4), ClassId(dog));
    assert!(out.audio_labels.contains(ClassId(dog)));
    assert_eq!(out.mask.area(), 24);
}

#[test]
fn render_man_left_dog_right() {
    let t = ClassTable::vpo();
    let (man, dog) = (class(&t, "male"), class(&t, "dog"));
    let s = rect_scene(9, 20, 40, &[(1, man, 2, 2, 18, 10), (2, dog, 8, 28, 18, 38)]);
    let pool = full_pool(&t);
    let e = assign_audio(&s, Mode::Ms, &mut stream(0), &pool, &t, &AssignConfig::default()).unwrap();
    assert_eq!(e.sounding.len(), 2);
    let (m, d) = (&e.sounding[0], &e.sounding[1]);
    assert!(m.alpha < 0.5 && 0.5 < d.alpha);
    assert!(d.gains[1] > d.gains[0]);

    let dir = tempfile::tempdir().unwrap();
    std::fs::create_dir_all(dir.path().join("clips")).unwrap();
    for src in &e.sounding {
        std::fs::write(dir.path().join(&src.clip), write_wav(&tone(300.0, 1.0))).unwrap();
    }
    let out = render_entry(&e, &s, |p| load_clip(dir.path(), p), PanLaw::Linear).unwrap();
    assert_eq!(out.audio.num_channels(), 2);
    assert!(out.audio.peak() <= 1.0 + 1e-9);
    let missing = render_entry(&e, &s, |p| load_clip(&dir.path().join("nope"), p), PanLaw::Linear).unwrap_err();
    assert!(missing.to_string().contains("nope"));
}
