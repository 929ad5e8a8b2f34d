use std::fs;
use std::path::Path;

use aaa_mdp::analysis::{
    bias_experiment, compare_summary, policy_from_grid_csv, policy_grid, qaly_gain_map, qaly_map,
    sensitivity_ratio, solve_parameters, GridReport,
};
use aaa_mdp::mdp::{evaluate_policy, Horizon, Policy};
use aaa_mdp::model::{build_process, clinical_policy_55, ModelOptions};
use aaa_mdp::params::{
    digest_bytes, parse_bins, parse_parameters, ParamError, ParameterFamily, ParameterSet,
    PerturbationSpec,
};
use anyhow::{anyhow, bail, Result};

use crate::manifest::RunManifest;
use crate::Common;

/// A parameter file as read from disk, with the digest of its exact bytes.
struct Loaded {
    params: ParameterSet,
    digest: String,
}

fn load(path: &Path) -> Result<Loaded> {
    let bytes = fs::read(path).map_err(|source| ParamError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| anyhow!("{} is not valid UTF-8", path.display()))?;
    let params = parse_parameters(&text).map_err(|e| anyhow!("{}: {e}", path.display()))?;
    Ok(Loaded {
        params,
        digest: digest_bytes(&bytes),
    })
}

fn horizon(params: &ParameterSet) -> Result<Horizon> {
    Ok(Horizon::new(params.start_age, params.max_age)?)
}

struct Run {
    loaded: Loaded,
    options: ModelOptions,
    manifest: RunManifest,
    out: std::path::PathBuf,
}

impl Run {
    fn start(command: &str, common: &Common) -> Result<Self> {
        let loaded = load(&common.params)?;
        let options = ModelOptions {
            terminal: common.terminal,
            composition: common.events.into(),
        };
        let manifest = RunManifest::new(
            command,
            &common.params,
            loaded.digest.clone(),
            (loaded.params.start_age, loaded.params.max_age),
            &options,
        );
        fs::create_dir_all(&common.out)
            .map_err(|e| anyhow!("cannot create {}: {e}", common.out.display()))?;
        Ok(Self {
            loaded,
            options,
            manifest,
            out: common.out.clone(),
        })
    }

    fn params(&self) -> &ParameterSet {
        &self.loaded.params
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.out.join(name);
        fs::write(&path, contents).map_err(|e| anyhow!("cannot write {}: {e}", path.display()))?;
        self.manifest.outputs.push(name.to_string());
        Ok(())
    }

    fn write_grid(&mut self, stem: &str, grid: GridReport) -> Result<()> {
        let grid = grid.with_digest(self.loaded.digest.clone());
        self.write(&format!("{stem}.csv"), &grid.to_csv())?;
        self.write(&format!("{stem}.json"), &grid.to_json())
    }

    fn finish(mut self) -> Result<()> {
        self.manifest.outputs.push("manifest.json".into());
        let path = self.out.join("manifest.json");
        fs::write(&path, self.manifest.to_json())
            .map_err(|e| anyhow!("cannot write {}: {e}", path.display()))?;
        Ok(())
    }
}

pub fn solve(common: &Common) -> Result<()> {
    let mut run = Run::start("solve", common)?;
    let (policy, values) = solve_parameters(run.params(), &run.options)?;
    let grid = policy_grid(&policy)?;
    print!("{}", grid.to_ascii());
    run.write_grid("policy", grid)?;
    run.write_grid("values", qaly_map(&values)?)?;
    run.finish()
}

fn resolve_policy(spec: &str, params: &ParameterSet, options: &ModelOptions) -> Result<Policy> {
    match spec {
        "opt" => Ok(solve_parameters(params, options)?.0),
        "p55" => Ok(clinical_policy_55(horizon(params)?)),
        path => {
            let text = fs::read_to_string(path)
                .map_err(|e| anyhow!("cannot read policy file {path}: {e}"))?;
            policy_from_grid_csv(&text, horizon(params)?).map_err(|e| match e {
                aaa_mdp::analysis::AnalysisError::IncompletePolicy(missing) => {
                    let listed: Vec<String> = missing
                        .iter()
                        .map(|(age, s)| format!("age {age} state {s}"))
                        .collect();
                    anyhow!(
                        "policy file {path} is incomplete; missing: {}",
                        listed.join(", ")
                    )
                }
                other => anyhow!("policy file {path}: {other}"),
            })
        }
    }
}

pub fn evaluate(common: &Common, policy_spec: &str) -> Result<()> {
    let mut run = Run::start("evaluate", common)?;
    run.manifest.policy = Some(policy_spec.to_string());
    let policy = resolve_policy(policy_spec, run.params(), &run.options)?;
    let process = build_process::<f64>(run.params(), &run.options)?;
    let values = evaluate_policy(&process, &policy)?;
    let grid = policy_grid(&policy)?;
    print!("{}", grid.to_ascii());
    run.write_grid("policy", grid)?;
    run.write_grid("values", qaly_map(&values)?)?;
    run.finish()
}

pub fn compare(common: &Common) -> Result<()> {
    let mut run = Run::start("compare", common)?;
    let process = build_process::<f64>(run.params(), &run.options)?;
    let (optimal, v_opt) = solve_parameters(run.params(), &run.options)?;
    let baseline = clinical_policy_55(horizon(run.params())?);
    let v_base = evaluate_policy(&process, &baseline)?;

    let gain = qaly_gain_map(&v_opt, &v_base)?;
    let opt_grid = policy_grid(&optimal)?;
    let base_grid = policy_grid(&baseline)?;
    let summary = compare_summary(&gain, &opt_grid, &base_grid);
    println!("{summary}");

    run.write_grid("gain", gain)?;
    run.write_grid("policy_opt", opt_grid)?;
    run.write_grid("policy_p55", base_grid)?;
    run.write("summary.txt", &format!("{summary}\n"))?;
    let mut json = serde_json::to_string_pretty(&summary)?;
    json.push('\n');
    run.write("summary.json", &json)?;
    run.finish()
}

fn parse_widths(raw: &[String]) -> Result<Vec<(ParameterFamily, f64)>> {
    if raw.is_empty() {
        return Ok(vec![(ParameterFamily::RuptureProb, 0.25)]);
    }
    raw.iter()
        .map(|item| {
            let (family, width) = item
                .split_once('=')
                .ok_or_else(|| anyhow!("--width expects FAMILY=FRACTION, got {item:?}"))?;
            let family: ParameterFamily = family.parse()?;
            let width: f64 = width
                .trim()
                .parse()
                .map_err(|_| anyhow!("--width {item:?}: {width:?} is not a number"))?;
            Ok((family, width))
        })
        .collect()
}

pub fn sensitivity(common: &Common, seed: u64, replicates: usize, widths: &[String]) -> Result<()> {
    let widths = parse_widths(widths)?;
    let mut spec = PerturbationSpec::new(replicates, seed);
    for &(family, width) in &widths {
        spec = spec.with_width(family, width);
    }
    spec.validate()?;

    let mut run = Run::start("sensitivity", common)?;
    run.manifest.seed = Some(seed);
    run.manifest.replicates = Some(replicates);
    run.manifest.widths = spec
        .widths
        .iter()
        .map(|(f, w)| (f.name().to_string(), *w))
        .collect();
    let grid = sensitivity_ratio(run.params(), &spec, &run.options)?;
    print!("{}", grid.to_ascii());
    run.write_grid("ratio", grid)?;
    run.finish()
}

pub fn bias(common: &Common, factors: &[f64], bins: &[String]) -> Result<()> {
    let bins = parse_bins(bins.iter().map(String::as_str))?;
    if bins.is_empty() {
        bail!("--bins must name at least one diameter bin");
    }
    if factors.is_empty() {
        bail!("--factors must list at least one factor");
    }
    let mut run = Run::start("bias", common)?;
    run.manifest.factors = factors.to_vec();
    run.manifest.bins = bins.iter().map(|b| b.label()).collect();
    for (factor, grid) in bias_experiment(run.params(), factors, &bins, &run.options)? {
        println!("factor {factor}");
        print!("{}", grid.to_ascii());
        run.write_grid(&format!("policy_factor_{factor}"), grid)?;
    }
    run.finish()
}

pub fn validate(path: &Path) -> Result<()> {
    let loaded = load(path)?;
    println!(
        "{}: parameters are valid (sha256 {})",
        path.display(),
        loaded.digest
    );
    Ok(())
}
