use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use avs_core::annotations::SceneSample;
use avs_core::audio::{load_wav, log_mel, write_wav, PanLaw};
use avs_core::blob::write_mel;
use avs_core::cavp::{dump_sets, parse_pool, partition_anchors, LabelMatch, MiningConfig};
use avs_core::metrics::{evaluate, tally, ConfusionTallies};
use avs_core::toytrain::{run as run_toy, write_trace, ToyRunConfig};
use avs_core::vpo::{
    build_manifest, load_clip, parse_manifest, render_entry, stats, validate_manifest, write_manifest, AudioPool,
    BuildConfig, ManifestEntry, Mode,
};
use serde_json::json;

use crate::io::{self, prepare_out, read_text, write};
use crate::{Cli, Command, MatchArg, ModeArg, PanArg};

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Ss => Mode::Ss,
            ModeArg::Ms => Mode::Ms,
            ModeArg::Msmi => Mode::Msmi,
        }
    }
}

impl From<PanArg> for PanLaw {
    fn from(p: PanArg) -> Self {
        match p {
            PanArg::Linear => PanLaw::Linear,
            PanArg::ConstantPower => PanLaw::ConstantPower,
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let threads = cli.threads.max(1);
    match cli.command {
        Command::Build {
            scene,
            audio_index,
            mode,
            seed,
            p_drop,
            max_sources,
            test_fraction,
            limit,
            pan_law,
            no_render,
            out,
        } => {
            let table = io::class_table(scene.classes.as_deref())?;
            let corpus = io::corpus(&scene.scenes, &table)?;
            let pool = AudioPool::parse(&read_text(&audio_index)?, &table).with_context(|| format!("audio index {}", audio_index.display()))?;
            let mut cfg = BuildConfig::new(mode.into(), seed);
            cfg.assign.pan_law = pan_law.into();
            if let Some(p) = p_drop {
                cfg.assign.p_drop = p;
            }
            if let Some(m) = max_sources {
                cfg.assign.max_sources = m;
            }
            cfg.test_fraction = test_fraction;
            cfg.limit = limit;
            prepare_out(&out.out, out.force)?;
            let built = build_manifest(&corpus.samples, &pool, &table, &cfg, threads)?;
            log::info!("{} {} entries, {} ineligible images", built.entries.len(), cfg.mode, built.ineligible);
            if built.entries.is_empty() {
                log::warn!("no image in {} is eligible for {}; the manifest is empty", scene.scenes.display(), cfg.mode);
            }
            write(&out.out.join("manifest.jsonl"), write_manifest(&built.entries))?;
            write(&out.out.join("build.toml"), toml::to_string(&cfg)?)?;
            if !no_render {
                let root = io::clips_root(scene.clips_root.as_deref(), &audio_index);
                render_all(&built.entries, &corpus.samples, &root, cfg.assign.pan_law, &out.out, threads)?;
            }
            Ok(())
        }
        Command::Mel { wav, window, out } => {
            let bytes = std::fs::read(&wav).with_context(|| format!("reading {}", wav.display()))?;
            let w = load_wav(&bytes).with_context(|| format!("decoding {}", wav.display()))?;
            let mel = log_mel(&w, window)?;
            prepare_out(&out.out, out.force)?;
            let stem = wav.file_stem().context("input has no file name")?;
            write_mel(&out.out.join(stem), &mel)?;
            log::info!("{} frames × {} bands", mel.frames, mel.bands);
            Ok(())
        }
        Command::Stereo { manifest, scene, pan_law, out } => {
            let table = io::class_table(scene.classes.as_deref())?;
            let corpus = io::corpus(&scene.scenes, &table)?;
            let entries = parse_manifest(&read_text(&manifest)?)?;
            validate_manifest(&entries, |id| corpus.samples.iter().find(|s| s.image_id == id))?;
            prepare_out(&out.out, out.force)?;
            let root = io::clips_root(scene.clips_root.as_deref(), &manifest);
            render_all(&entries, &corpus.samples, &root, pan_law.into(), &out.out, threads)
        }
        Command::Mine { pool, dump, label_match, include_unknown } => {
            let records = parse_pool(&read_text(&pool)?).with_context(|| format!("pool {}", pool.display()))?;
            let cfg = MiningConfig {
                label_match: match label_match {
                    MatchArg::Membership => LabelMatch::Membership,
                    MatchArg::Equality => LabelMatch::Equality,
                },
                exclude_unknown: !include_unknown,
            };
            let partition = partition_anchors(&records, &cfg);
            log::info!(
                "{} records: {} fg, {} unknown, {} bg",
                records.len(),
                partition.foreground.len(),
                partition.unknown.len(),
                partition.background.len()
            );
            write(&dump, dump_sets(&records, &partition, &cfg)?)
        }
        Command::Eval { pred, gt, classes, report, beta2, names } => {
            let preds = io::pgm_files(&pred)?;
            let gts: BTreeMap<String, _> = io::pgm_files(&gt)?.into_iter().collect();
            if preds.is_empty() {
                bail!("no prediction rasters in {}", pred.display());
            }
            let single = preds.len() == 1 && gts.len() == 1;
            let mut total = ConfusionTallies::new(classes);
            for (name, p) in &preds {
                let g = if single { gts.values().next() } else { gts.get(name) };
                let g = g.with_context(|| format!("no ground truth for {name}"))?;
                let t = tally(&io::read_pgm(p)?, &io::read_pgm(g)?, classes).with_context(|| name.clone())?;
                total.merge(&t)?;
            }
            let labels: Vec<String> = match names {
                Some(path) => {
                    let table = io::class_table(Some(&path))?;
                    (0..classes).map(|c| table.label(avs_core::ClassId(c as u8)).to_string()).collect()
                }
                None => vec![],
            };
            let r = evaluate(&total, beta2, &labels)?;
            log::info!("{} images: mIoU {:.4}, F {:.4}", preds.len(), r.miou, r.f_beta);
            write(&report, format!("{}\n{}", r.to_lines(), r.to_table()))
        }
        Command::TrainToy { config, seed, out } => {
            let mut cfg: ToyRunConfig = toml::from_str(&read_text(&config)?).with_context(|| format!("config {}", config.display()))?;
            cfg.scenes.seed = seed;
            cfg.train.seed = seed;
            prepare_out(&out.out, out.force)?;
            let outcome = run_toy(&cfg)?;
            for r in &outcome.trace {
                log::info!("epoch {} lr {:.3e} ce {:.4} cp {:.4} mIoU {:.4}", r.epoch, r.lr, r.ce, r.cp, r.miou);
            }
            write(&out.out.join("config.toml"), toml::to_string(&cfg)?)?;
            write(&out.out.join("trace.jsonl"), write_trace(&outcome.trace))?;
            write(&out.out.join("summary.json"), serde_json::to_string_pretty(&json!({ "mode": cfg.mode, "final_miou": outcome.final_miou }))? + "\n")
        }
        Command::Stats { manifest, classes, report } => {
            let table = io::class_table(classes.as_deref())?;
            let entries = parse_manifest(&read_text(&manifest)?)?;
            let s = stats(&entries);
            let counts: BTreeMap<&str, usize> = s.class_counts.iter().map(|(c, n)| (table.label(*c), *n)).collect();
            let body = serde_json::to_string_pretty(&json!({
                "entries": entries.len(),
                "class_counts": counts,
                "imbalance_ratio": s.imbalance_ratio,
                "subset_counts": s.subset_counts,
                "split_counts": s.split_counts,
            }))? + "\n";
            match report {
                Some(path) => write(&path, body),
                None => {
                    print!("{body}");
                    Ok(())
                }
            }
        }
    }
}

fn render_all(entries: &[ManifestEntry], scenes: &[SceneSample], root: &Path, law: PanLaw, out: &Path, threads: usize) -> Result<()> {
    let by_id: BTreeMap<u64, &SceneSample> = scenes.iter().map(|s| (s.image_id, s)).collect();
    let chunk = entries.len().div_ceil(threads).max(1);
    std::thread::scope(|scope| {
        let workers: Vec<_> = entries
            .chunks(chunk)
            .map(|part| {
                let by_id = &by_id;
                scope.spawn(move || -> Result<()> {
                    for e in part {
                        let scene = by_id.get(&e.image_id).with_context(|| format!("image {} is not in the corpus", e.image_id))?;
                        let r = render_entry(e, scene, |rel| load_clip(root, rel), law)?;
                        write(&out.join(&e.mixed_audio), write_wav(&r.audio))?;
                        write(&out.join(&e.label_raster), r.labels.to_pgm())?;
                    }
                    Ok(())
                })
            })
            .collect();
        workers.into_iter().try_for_each(|w| w.join().expect("render worker panicked"))
    })?;
    log::info!("rendered {} entries into {}", entries.len(), out.display());
    Ok(())
}
