use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use eqnorm_core::dataset::{
    self, load_math23k, preprocess, read_jsonl_file, score_predictions, summarize_processed, write_jsonl,
    PredictionRow, PreprocessOptions, ProcessedRecord,
};
use eqnorm_core::ensemble::{group_by_problem, select, Candidate, CandidateRow, EnsembleConfig, SelectionRow};
use eqnorm_core::oracle::oracle_report;
use eqnorm_core::{normalize, parse_infix, parse_postorder_str, to_infix, to_postorder, NormalizeConfig};

use crate::Command;

pub enum Failure {
    Input(anyhow::Error),
    Internal(anyhow::Error),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 1,
            Failure::Internal(_) => 2,
        }
    }

    pub fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Input(e) | Failure::Internal(e) => e,
        }
    }
}

type Outcome = Result<(), Failure>;

trait Classify<T> {
    fn input(self) -> Result<T, Failure>;
    fn internal(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn input(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Input(e.into()))
    }

    fn internal(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Internal(e.into()))
    }
}

fn require_file(path: &Path) -> Outcome {
    if path.is_file() {
        Ok(())
    } else {
        Err(Failure::Input(anyhow!("input file {} does not exist", path.display())))
    }
}

fn require_out_dir(path: &Path) -> Outcome {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() && !dir.is_dir() => {
            Err(Failure::Input(anyhow!("output directory {} does not exist", dir.display())))
        }
        _ => Ok(()),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path).map(BufWriter::new).with_context(|| format!("creating {}", path.display())).internal()
}

fn write_json_line(path: Option<&Path>, value: &impl serde::Serialize) -> Outcome {
    let line = serde_json::to_string(value).internal()?;
    match path {
        Some(p) => {
            let mut w = create(p)?;
            writeln!(w, "{line}").and_then(|_| w.flush()).internal()
        }
        None => {
            println!("{line}");
            Ok(())
        }
    }
}

fn read_processed(path: &Path) -> Result<Vec<ProcessedRecord>, Failure> {
    read_jsonl_file(path).with_context(|| format!("reading {}", path.display())).input()
}

fn stats_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".stats.json");
    out.with_file_name(name)
}

pub fn run(command: Command) -> Outcome {
    match command {
        Command::Preprocess { input, out, stats, passes, seed, tolerance, trials, lenient, drop_uncovered } => {
            let stats = stats.unwrap_or_else(|| stats_path(&out));
            require_file(&input)?;
            require_out_dir(&out)?;
            require_out_dir(&stats)?;
            if tolerance.is_nan() || tolerance < 0.0 {
                return Err(Failure::Input(anyhow!("tolerance must be >= 0")));
            }
            let opts = PreprocessOptions { normalize: passes.config(), seed, tolerance, trials, drop_uncovered };
            run_preprocess(&input, &out, &stats, &opts, lenient)
        }
        Command::Normalize { expr, input, passes } => run_normalize(expr, input, passes.config()),
        Command::Score { gold, pred, tolerance, out } => {
            require_file(&gold)?;
            require_file(&pred)?;
            if let Some(o) = &out {
                require_out_dir(o)?;
            }
            run_score(&gold, &pred, tolerance, out.as_deref())
        }
        Command::Ensemble { inputs, out, priority, gold } => {
            for p in inputs.iter().chain(gold.as_ref()) {
                require_file(p)?;
            }
            require_out_dir(&out)?;
            run_ensemble(&inputs, &out, priority, gold.as_deref())
        }
        Command::Stats { input, out } => {
            require_file(&input)?;
            if let Some(o) = &out {
                require_out_dir(o)?;
            }
            let records = read_processed(&input)?;
            let summary = summarize_processed(&records);
            let t = &summary.templates;
            eprintln!(
                "records {} | coverage {:.1}% | distinct raw {} / normalized {}",
                summary.records,
                summary.coverage_rate * 100.0,
                t.distinct_raw,
                t.distinct_normalized
            );
            eprintln!(
                "distinct with one pass: SE {} (-{}) | OE {} (-{}) | EB {} (-{})",
                t.distinct_se_only, t.delta_se, t.distinct_oe_only, t.delta_oe, t.distinct_eb_only, t.delta_eb
            );
            let histogram: Vec<String> = t.length_histogram.iter().map(|(len, n)| format!("{len}:{n}")).collect();
            eprintln!("template length histogram: {}", histogram.join(" "));
            write_json_line(out.as_deref(), &summary)
        }
        Command::Split { input, test, validation_size, seed, out_dir } => {
            require_file(&input)?;
            if let Some(t) = &test {
                require_file(t)?;
            }
            if !out_dir.is_dir() {
                return Err(Failure::Input(anyhow!("output directory {} does not exist", out_dir.display())));
            }
            run_split(&input, test.as_deref(), validation_size, seed, &out_dir)
        }
        Command::OracleCheck { a, b, input, trials, seed } => match (a, b, input) {
            (Some(a), Some(b), None) => run_oracle_pair(&a, &b, trials, seed),
            (None, None, Some(path)) => {
                require_file(&path)?;
                run_oracle_file(&path, trials, seed)
            }
            _ => Err(Failure::Input(anyhow!("give either --a and --b, or --in"))),
        },
    }
}

fn run_preprocess(input: &Path, out: &Path, stats_out: &Path, opts: &PreprocessOptions, lenient: bool) -> Outcome {
    let loaded = load_math23k(input, lenient).with_context(|| format!("loading {}", input.display())).input()?;
    for issue in &loaded.issues {
        eprintln!("{}:{}: skipped malformed record: {}", input.display(), issue.line, issue.message);
    }
    let result = preprocess(&loaded.records, opts);
    for f in &result.failures {
        eprintln!("record {}: {:?}: {}", f.id, f.kind, f.message);
    }
    let mut w = create(out)?;
    write_jsonl(&mut w, &result.records).internal()?;
    write_json_line(Some(stats_out), &result.stats)?;
    let s = &result.stats;
    eprintln!(
        "preprocess [{}]: {} read, {} processed, {} failed, coverage {:.1}%, distinct templates raw {} / normalized {}",
        opts.normalize.label(),
        s.records_in,
        s.processed,
        result.failures.len(),
        s.coverage_rate * 100.0,
        s.templates.distinct_raw,
        s.templates.distinct_normalized
    );
    if s.oracle_mismatches > 0 || s.answer_mismatches > 0 {
        eprintln!(
            "warning: {} templates disagree with their gold answer, {} normalized templates failed the oracle",
            s.answer_mismatches, s.oracle_mismatches
        );
    }
    Ok(())
}

fn normalize_line(text: &str, cfg: NormalizeConfig) -> Result<(String, String), Failure> {
    let tree = parse_infix(text).with_context(|| format!("parsing {text:?}")).input()?;
    let normalized = normalize(&tree, cfg);
    Ok((to_postorder(&normalized).to_string(), to_infix(&normalized)))
}

fn run_normalize(expr: Option<String>, input: Option<PathBuf>, cfg: NormalizeConfig) -> Outcome {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    if let Some(text) = expr {
        let (post, inf) = normalize_line(&text, cfg)?;
        return writeln!(out, "{post}\n{inf}").internal();
    }
    let path = input.expect("clap enforces --expr or --in");
    require_file(&path)?;
    let reader = BufReader::new(File::open(&path).input()?);
    for (i, line) in reader.lines().enumerate() {
        let line = line.input()?;
        if line.trim().is_empty() {
            continue;
        }
        let (post, inf) =
            normalize_line(&line, cfg).map_err(|f| Failure::Input(anyhow!("line {}: {:#}", i + 1, f.error())))?;
        writeln!(out, "{post}\t{inf}").internal()?;
    }
    Ok(())
}

fn run_score(gold: &Path, pred: &Path, tolerance: f64, out: Option<&Path>) -> Outcome {
    if tolerance.is_nan() || tolerance < 0.0 {
        return Err(Failure::Input(anyhow!("tolerance must be >= 0")));
    }
    let records = read_processed(gold)?;
    let predictions: Vec<PredictionRow> =
        read_jsonl_file(pred).with_context(|| format!("reading {}", pred.display())).input()?;
    let report = score_predictions(&records, &predictions, tolerance);
    if let Some(path) = out {
        let mut w = create(path)?;
        write_jsonl(&mut w, &report.verdicts).internal()?;
    }
    eprintln!(
        "accuracy {:.2}% ({}/{}) | wrong value {} | invalid {} | eval error {} | missing {}",
        report.accuracy * 100.0,
        report.correct,
        report.total,
        report.wrong_value,
        report.invalid,
        report.eval_error,
        report.missing
    );
    write_json_line(None, &report)
}

fn run_ensemble(inputs: &[PathBuf], out: &Path, priority: Vec<String>, gold: Option<&Path>) -> Outcome {
    let cfg = EnsembleConfig::new(priority).input()?;
    let mut candidates = Vec::new();
    for path in inputs {
        let rows: Vec<CandidateRow> =
            read_jsonl_file(path).with_context(|| format!("reading {}", path.display())).input()?;
        for (i, row) in rows.into_iter().enumerate() {
            let c =
                Candidate::try_from(row).with_context(|| format!("{}: candidate {}", path.display(), i + 1)).input()?;
            candidates.push(c);
        }
    }
    let mut groups = group_by_problem(candidates);
    if let Some(g) = gold {
        for r in read_processed(g)? {
            groups.entry(r.id).or_default();
        }
    }
    let selection = select(&groups, &cfg);
    let rows: Vec<SelectionRow> = selection.chosen.iter().map(SelectionRow::from).collect();
    let mut w = create(out)?;
    write_jsonl(&mut w, &rows).internal()?;
    let models: BTreeSet<&str> = selection.chosen.iter().map(|c| c.model.as_str()).collect();
    for m in models {
        let n = selection.chosen.iter().filter(|c| c.model == m).count();
        eprintln!("model {m}: selected for {n} problems");
    }
    if !selection.missing.is_empty() {
        eprintln!("{} problems have no candidate: {}", selection.missing.len(), selection.missing.join(", "));
    }
    Ok(())
}

fn read_lines(path: &Path) -> Result<Vec<String>, Failure> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).input()?;
    Ok(text.lines().filter(|l| !l.trim().is_empty()).map(str::to_owned).collect())
}

fn run_split(input: &Path, test: Option<&Path>, validation_size: usize, seed: u64, out_dir: &Path) -> Outcome {
    let train = read_lines(input)?;
    let test = match test {
        Some(t) => read_lines(t)?,
        None => Vec::new(),
    };
    let parts = dataset::split(train, test, validation_size, seed).input()?;
    for (name, lines) in [("train", &parts.train), ("valid", &parts.validation), ("test", &parts.test)] {
        let path = out_dir.join(format!("{name}.jsonl"));
        let mut w = create(&path)?;
        for line in lines.iter() {
            writeln!(w, "{line}").internal()?;
        }
        w.flush().internal()?;
    }
    eprintln!(
        "split (seed {seed}): train {} | valid {} | test {}",
        parts.train.len(),
        parts.validation.len(),
        parts.test.len()
    );
    Ok(())
}

fn run_oracle_pair(a: &str, b: &str, trials: usize, seed: u64) -> Outcome {
    let ta = parse_infix(a).with_context(|| format!("parsing {a:?}")).input()?;
    let tb = parse_infix(b).with_context(|| format!("parsing {b:?}")).input()?;
    let report = oracle_report(&ta, &tb, trials, seed).input()?;
    println!("{}", if report.equivalent() { "equivalent" } else { "not equivalent" });
    eprintln!("trials: {} completed, {} agreed, {} skipped", report.completed, report.agreed, report.skipped);
    Ok(())
}

fn run_oracle_file(path: &Path, trials: usize, seed: u64) -> Outcome {
    let records = read_processed(path)?;
    let (mut equivalent, mut different, mut undecided) = (0usize, 0usize, 0usize);
    for (i, r) in records.iter().enumerate() {
        let raw = parse_infix(&r.infix).with_context(|| format!("record {}: infix", r.id)).input()?;
        let norm = parse_postorder_str(&r.postorder).with_context(|| format!("record {}: postorder", r.id)).input()?;
        match oracle_report(&raw, &norm, trials, seed.wrapping_add(i as u64)) {
            Ok(rep) if rep.equivalent() => equivalent += 1,
            Ok(_) => {
                different += 1;
                eprintln!("record {}: {} is not equivalent to {}", r.id, r.infix, r.postorder);
            }
            Err(_) => undecided += 1,
        }
    }
    eprintln!("oracle: {equivalent} equivalent, {different} different, {undecided} undecided");
    let summary = serde_json::json!({
        "records": records.len(),
        "equivalent": equivalent,
        "different": different,
        "undecided": undecided,
        "trials": trials,
        "seed": seed,
    });
    write_json_line(None, &summary)
}
