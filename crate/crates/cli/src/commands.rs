use std::fmt::Write as _;
use std::path::Path;

use riffle::condition::{noise_coefficients, NoiseConfig};
use riffle::io::{load_hierarchy, load_model, parse_dataset, save_mixture, save_model, write_dataset};
use riffle::lab::{hierarchy_residual, mallows_dense, pspan as form_pspan, Census, DEFAULT_TOLERANCE};
use riffle::learn::{censor_dataset, random_completions, IterationLog};
use riffle::model::NodeKind;
use riffle::structure::learn_structure_weighted;
use riffle::{
    condition_noisy, em_fit, loglik, pr_condition, uniform_fillin, Dataset, EmConfig, EmMode, Exec, FitResult,
    Hierarchy, Interleaving, ItemSet, ItemUniverse, MixtureModel, RiffleModel, StructureConfig,
};

use crate::run::{with_suffix, Failure, Outcome, Run, EXIT_NOT_CONVERGED, EXIT_OK};
use crate::{ConditionArgs, Mode, TrainArgs};

fn load_data(path: &Path, run: &mut Run) -> Result<Dataset, Failure> {
    let text = run.read(path)?;
    parse_dataset(&text).map_err(Failure::in_file(path))
}

fn load_model_file(path: &Path, run: &mut Run) -> Result<RiffleModel, Failure> {
    let text = run.read(path)?;
    load_model(&text).map_err(Failure::in_file(path))
}

fn labels(u: &ItemUniverse, s: ItemSet) -> String {
    s.iter().map(|i| u.label(i)).collect::<Vec<_>>().join(",")
}

/// Records with at most this many completions are expanded exactly;
/// larger ones are sampled.
const EXACT_COMPLETIONS: f64 = 720.0;

/// Structure search on uniform completions of the data, each record's
/// completions sharing its count so the total weight equals the record count.
fn auto_structure(data: &Dataset, samples: usize, seed: u64) -> Result<(Hierarchy, bool), Failure> {
    let mut weighted = Vec::new();
    let mut sampled = Dataset::new(data.universe().clone());
    for r in data.records() {
        if r.observation.cardinality() <= EXACT_COMPLETIONS {
            let members = r.observation.members();
            let w = r.count as f64 / members.len() as f64;
            weighted.extend(members.into_iter().map(|s| (s, w)));
        } else {
            sampled.push(r.observation.clone(), r.count)?;
        }
    }
    if !sampled.is_empty() {
        let completed = random_completions(&sampled, samples, seed)?;
        weighted.extend(
            completed
                .records()
                .iter()
                .map(|r| (r.observation.as_ranking().expect("completions are full"), r.count as f64 / samples as f64)),
        );
    }
    let found = learn_structure_weighted(&weighted, data.universe().all(), &StructureConfig::default())?;
    Ok((found.hierarchy, found.insufficient_data))
}

pub fn train(a: &TrainArgs, run: &mut Run) -> Outcome {
    run.seed = Some(a.seed);
    let data = load_data(&a.data, run)?;
    let universe = data.universe().clone();
    let (hierarchy, insufficient) = if a.structure == "auto" {
        auto_structure(&data, a.samples.max(1), a.seed)?
    } else {
        let path = Path::new(&a.structure);
        let text = run.read(path)?;
        (load_hierarchy(&text, &universe).map_err(Failure::in_file(path))?, false)
    };
    let fit = match a.mode {
        Mode::Fillin => {
            let model = uniform_fillin(&data, &hierarchy, a.lambda)?;
            let ll = loglik(&model, &data)?.value;
            FitResult {
                log: vec![IterationLog { iteration: 0, loglik: ll, structure: model.hierarchy().clone() }],
                model,
                loglik_trace: vec![ll],
                objective_trace: vec![],
                iterations: 0,
                converged: true,
                insufficient_data: insufficient,
            }
        }
        Mode::Fixed | Mode::Structural => {
            let cfg = EmConfig {
                max_iters: a.max_iters,
                samples_per_obs: a.samples,
                lambda: a.lambda,
                seed: a.seed,
                mode: if a.mode == Mode::Fixed { EmMode::Fixed } else { EmMode::Structural },
                ..EmConfig::default()
            };
            let init = RiffleModel::uniform(universe.clone(), hierarchy)?;
            let mut fit = em_fit(&data, &init, &cfg)?;
            fit.insufficient_data |= insufficient;
            fit
        }
    };
    run.write(&a.out, &save_model(&fit.model))?;
    let log_path = a.log.clone().unwrap_or_else(|| with_suffix(&a.out, ".log.tsv"));
    run.write(&log_path, &fit.log_tsv())?;

    let final_ll = *fit.loglik_trace.last().expect("trace is never empty");
    run.note("structure", fit.model.hierarchy().render(&universe));
    run.note("iterations", fit.iterations);
    run.note("converged", fit.converged);
    run.note("loglik", final_ll);
    run.note("insufficient_data", fit.insufficient_data);
    if fit.insufficient_data {
        eprintln!("riffle: warning: fewer records than free parameters of the sparsest hierarchy");
    }
    if !fit.converged {
        eprintln!("riffle: no convergence within {} iterations", a.max_iters);
        return Ok(EXIT_NOT_CONVERGED);
    }
    Ok(EXIT_OK)
}

/// Interleaving table of every internal node, averaged over the mixture,
/// keeping only entries with positive mass.
fn interleaving_report(u: &ItemUniverse, mix: &MixtureModel) -> String {
    let first = &mix.components()[0].1;
    let mut out = String::from("node\tleft\tright\tinterleaving\tprobability\n");
    for (k, node) in first.nodes().iter().enumerate() {
        let NodeKind::Split { left_items, .. } = &node.kind else { continue };
        let right_items = node.items.difference(*left_items);
        let (a, b) = (left_items.len(), right_items.len());
        for idx in 0..node.table_len() {
            let p: f64 = mix.components().iter().map(|(w, m)| w * m.table(k)[idx]).sum();
            if p > 0.0 {
                let tau = Interleaving::from_index(idx, a, b).render_with("L", "R");
                let _ =
                    writeln!(out, "{}\t{}\t{}\t{tau}\t{p}", node.path, labels(u, *left_items), labels(u, right_items));
            }
        }
    }
    out
}

pub fn condition(a: &ConditionArgs, run: &mut Run) -> Outcome {
    let model = load_model_file(&a.model, run)?;
    let u = model.universe().clone();
    let obs = u
        .parse_observation(&a.observation)
        .map_err(|e| Failure::Invalid(format!("observation {:?}: {e}", a.observation)))?;
    let (mix, mass, document) = match a.noisy {
        None => {
            let res = pr_condition(&model, &obs)?;
            let doc = save_model(&res.posterior);
            (MixtureModel::single(res.posterior), res.evidence_mass, doc)
        }
        Some(eps) => {
            let mix = condition_noisy(&model, &obs, eps)?;
            let (c0, c1) = noise_coefficients(&obs, u.len(), eps, NoiseConfig::default().denominator)?;
            let mass = c0 + c1 * model.partial_ranking_mass(&obs)?;
            let doc = save_mixture(&mix);
            (mix, mass, doc)
        }
    };
    if let Some(out) = &a.out {
        run.write(out, &document)?;
    }
    run.note("observation", u.render_partial(&obs));
    run.note("evidence_mass", mass);
    run.note("components", mix.components().len());
    let mut report = format!("# observation: {}\n# evidence mass: {mass}\n", u.render_partial(&obs));
    if a.noisy.is_some() {
        for (w, _) in mix.components() {
            let _ = writeln!(report, "# component weight: {w}");
        }
    }
    report.push_str(&interleaving_report(&u, &mix));
    run.stdout.push_str(&report);
    Ok(EXIT_OK)
}

pub fn eval(model: &Path, data: &Path, run: &mut Run) -> Outcome {
    let m = load_model_file(model, run)?;
    let d = load_data(data, run)?;
    if m.universe() != d.universe() {
        return Err(Failure::Invalid(format!("{} and {} are over different items", model.display(), data.display())));
    }
    let total = loglik(&m, &d)?;
    let mut out = format!("# loglik: {}\nrecord\tobservation\tcount\tlog_mass\n", total.value);
    for (k, r) in d.records().iter().enumerate() {
        let mass = m.partial_ranking_mass(&r.observation)?;
        let _ = writeln!(out, "{k}\t{}\t{}\t{}", d.universe().render_partial(&r.observation), r.count, mass.ln());
    }
    run.stdout.push_str(&out);
    run.note("loglik", total.value);
    run.note("records", d.len());
    run.note("total_count", d.total_count());
    run.note("zero_mass_records", total.zero_mass_records);
    Ok(EXIT_OK)
}

pub fn sample(model: &Path, count: usize, seed: u64, out: Option<&Path>, run: &mut Run) -> Outcome {
    run.seed = Some(seed);
    let m = load_model_file(model, run)?;
    let mut text = String::new();
    for s in m.sample_many(count, seed) {
        text.push_str(&m.universe().render_ranking(&s));
        text.push('\n');
    }
    run.emit(out, &text)?;
    run.note("count", count);
    Ok(EXIT_OK)
}

/// Reads one ranking or partial ranking per line. Items come from an
/// optional `items:` header, otherwise from first appearance.
fn read_rankings(text: &str) -> Result<(ItemUniverse, Vec<(usize, String)>), Failure> {
    let mut header = None;
    let mut lines = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim().trim_start_matches('\u{feff}');
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("items:") {
            if header.is_some() || !lines.is_empty() {
                return Err(Failure::Invalid(format!("line {}: items header must come first", k + 1)));
            }
            header = Some(rest.split(',').map(|s| s.trim().to_string()).collect::<Vec<_>>());
            continue;
        }
        lines.push((k + 1, line.to_string()));
    }
    let names = match header {
        Some(h) => h,
        None => {
            let mut seen: Vec<String> = Vec::new();
            for (_, l) in &lines {
                for tok in l.split(['|', ',']).map(str::trim) {
                    if !tok.is_empty() && !seen.iter().any(|s| s == tok) {
                        seen.push(tok.to_string());
                    }
                }
            }
            seen
        }
    };
    Ok((ItemUniverse::new(&names)?, lines))
}

pub fn pspan(path: &Path, run: &mut Run) -> Outcome {
    let text = run.read(path)?;
    let (u, lines) = read_rankings(&text)?;
    if lines.is_empty() {
        return Err(Failure::Invalid(format!("{}: no rankings", path.display())));
    }
    let mut xs = Vec::with_capacity(lines.len());
    for (line, l) in &lines {
        let pr = u.parse_partial(l).map_err(|e| Failure::Invalid(format!("{} line {line}: {e}", path.display())))?;
        xs.push(pr);
    }
    let span = form_pspan(&xs)?;
    run.stdout.push_str(&u.render_partial(&span));
    run.stdout.push('\n');
    run.note("inputs", xs.len());
    run.note("blocks", span.len());
    Ok(EXIT_OK)
}

pub fn census(n: usize, run: &mut Run) -> Outcome {
    if n == 0 {
        return Err(Failure::Invalid("census needs at least one item".into()));
    }
    let u = ItemUniverse::numbered(n)?;
    let c = Census::new(u.all(), DEFAULT_TOLERANCE, Exec::default())?;
    let subsets = c.rows().len();
    let decomposable = c.decomposable_count();
    let agree = c.classes_agree();
    let mut out = format!(
        "# items: {}\n# nonempty subsets: {subsets}\n# completely decomposable: {decomposable}\n\
         # completely decomposable subsets are exactly the partial rankings: {agree}\n",
        u.labels().join(", ")
    );
    out.push_str(&c.to_tsv());
    run.stdout.push_str(&out);
    run.note("nonempty_subsets", subsets);
    run.note("completely_decomposable", decomposable);
    run.note("classes_agree", agree);
    if !agree {
        return Err(Failure::Invalid("completely decomposable subsets differ from the partial rankings".into()));
    }
    Ok(EXIT_OK)
}

pub fn mallows(sigma0: &str, phi: f64, out: Option<&Path>, run: &mut Run) -> Outcome {
    let names: Vec<&str> = sigma0.split('|').map(str::trim).collect();
    let u = ItemUniverse::new(&names).map_err(|e| Failure::Invalid(format!("--sigma0 {sigma0:?}: {e}")))?;
    let center = u.parse_ranking(sigma0)?;
    let p = mallows_dense(&center, phi)?;
    let residual = hierarchy_residual(&p, &Hierarchy::chain(&center)?)?;
    let mut text = format!("# chain residual: {residual}\nranking\tprobability\n");
    for (s, q) in p.iter() {
        let _ = writeln!(text, "{}\t{q}", u.render_ranking(&s));
    }
    run.emit(out, &text)?;
    run.note("chain_residual", residual);
    Ok(EXIT_OK)
}

pub fn censor(data: &Path, k_dist: &[f64], seed: u64, out: Option<&Path>, run: &mut Run) -> Outcome {
    run.seed = Some(seed);
    let d = load_data(data, run)?;
    let censored = censor_dataset(&d, k_dist, seed)?;
    run.emit(out, &write_dataset(&censored))?;
    run.note("records", censored.len());
    run.note("total_count", censored.total_count());
    Ok(EXIT_OK)
}
