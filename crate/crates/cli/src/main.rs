use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Arg, ArgMatches, Command};
use kgalign_tool::alloc::TrackingAllocator;
use kgalign_tool::config::{known_keys, read_config};
use kgalign_tool::pipeline::write_synthetic_dataset;
use kgalign_tool::{run_sampler_study, run_through, PipelineConfig, PipelineError, Stage};

#[global_allocator]
static ALLOC: TrackingAllocator = TrackingAllocator;

const BOOL_KEYS: [&str; 3] = ["deterministic", "residual", "detach-stats"];

fn common_args(cmd: Command) -> Command {
    let cmd = cmd.arg(
        Arg::new("config")
            .long("config")
            .value_name("FILE")
            .value_parser(clap::value_parser!(PathBuf))
            .help("Config file of [section] key = value lines"),
    );
    known_keys().fold(cmd, |cmd, key| {
        let arg = Arg::new(key).long(key).value_name("VALUE");
        let arg = if BOOL_KEYS.contains(&key) {
            arg.num_args(0..=1).default_missing_value("true")
        } else {
            arg
        };
        cmd.arg(arg)
    })
}

fn cli() -> Command {
    let sub =
        |name: &'static str, about: &'static str| common_args(Command::new(name).about(about));
    Command::new("kgalign")
        .about("Entity alignment between two knowledge graphs")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .subcommand(sub(
            "synth",
            "Write a synthetic dataset to the output directory",
        ))
        .subcommand(sub("train", "Prepare data and train embeddings"))
        .subcommand(sub(
            "sample",
            "Compute batch assignments from saved embeddings",
        ))
        .subcommand(sub(
            "fuse",
            "Fuse local and global similarity from saved assignments",
        ))
        .subcommand(sub("eval", "Evaluate the saved fused matrix"))
        .subcommand(sub("run", "Run the whole pipeline"))
        .subcommand(
            sub("study", "Sampler overlap and runtime across batch counts").arg(
                Arg::new("k-values")
                    .long("k-values")
                    .value_name("LIST")
                    .value_delimiter(',')
                    .value_parser(clap::value_parser!(usize))
                    .default_value("5,10,15,20,25"),
            ),
        )
}

fn config_from(m: &ArgMatches) -> Result<PipelineConfig, PipelineError> {
    let mut pairs = match m.get_one::<PathBuf>("config") {
        Some(path) => read_config(path)?,
        None => Vec::new(),
    };
    for key in known_keys() {
        if let Some(v) = m.get_one::<String>(key) {
            pairs.push((key.to_owned(), v.clone()));
        }
    }
    Ok(PipelineConfig::from_pairs(
        pairs.iter().map(|(k, v)| (k.as_str(), v.as_str())),
    )?)
}

fn run(name: &str, m: &ArgMatches) -> Result<(), PipelineError> {
    let mut cfg = config_from(m)?;
    let last = match name {
        "synth" => {
            for p in write_synthetic_dataset(&cfg)? {
                println!("{}", p.display());
            }
            return Ok(());
        }
        "study" => {
            let ks: Vec<usize> = m.get_many::<usize>("k-values").unwrap().copied().collect();
            let rows = run_sampler_study(&cfg, &ks)?;
            print!("{}", kgalign_tool::study::to_csv(&rows));
            return Ok(());
        }
        "train" => Stage::Train,
        "sample" => Stage::Sample,
        "fuse" => Stage::Fuse,
        "eval" => Stage::Eval,
        _ => Stage::Eval,
    };
    if name != "run" && name != "train" && cfg.resume_from.is_none() {
        cfg.resume_from = Some(last);
    }
    let (_, report) = run_through(&cfg, last)?;
    if last == Stage::Eval {
        print!("{}", report.to_key_values());
    } else {
        for (stage, s) in &report.stage_seconds {
            println!("seconds.{stage}={s:.3}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let matches = cli().get_matches();
    let (name, sub) = matches.subcommand().expect("a subcommand is required");
    match run(name, sub) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("kgalign: {e}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_definition_is_consistent() {
        cli().debug_assert();
    }

    #[test]
    fn flags_override_the_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.conf");
        std::fs::write(&path, "[train]\nepochs = 3\ndim = 16\n").unwrap();
        let m = cli()
            .try_get_matches_from([
                "kgalign",
                "run",
                "--config",
                path.to_str().unwrap(),
                "--epochs",
                "7",
                "--deterministic",
            ])
            .unwrap();
        let cfg = config_from(m.subcommand_matches("run").unwrap()).unwrap();
        assert_eq!(cfg.train.epochs, 7);
        assert_eq!(cfg.train.dim, 16);
        assert!(cfg.train.deterministic);
    }

    fn invoke(args: &[&str]) -> Result<(), PipelineError> {
        let m = cli()
            .try_get_matches_from(std::iter::once("kgalign").chain(args.iter().copied()))
            .unwrap();
        let (name, sub) = m.subcommand().unwrap();
        run(name, sub)
    }

    #[test]
    fn synthetic_files_feed_a_file_based_run() {
        let dir = tempfile::tempdir().unwrap();
        let data = dir.path().join("data");
        let d = |f: &str| data.join(f).to_string_lossy().into_owned();
        invoke(&["synth", "--entities", "200", "--output", &d("")]).unwrap();
        let run_dir = dir.path().join("run");
        let conf = dir.path().join("run.conf");
        std::fs::write(
            &conf,
            format!(
                "[data]\nsource = {}\ntarget = {}\nlinks = {}\nsource-entities = {}\ntarget-entities = {}\n[train]\nepochs = 10\n",
                d("rel_triples_1"),
                d("rel_triples_2"),
                d("ent_links"),
                d("ent_list_1"),
                d("ent_list_2"),
            ),
        )
        .unwrap();
        invoke(&[
            "run",
            "--config",
            conf.to_str().unwrap(),
            "--epochs",
            "12",
            "--output",
            run_dir.to_str().unwrap(),
        ])
        .unwrap();
        let report = std::fs::read_to_string(run_dir.join("report.txt")).unwrap();
        assert!(report.contains("test_pairs=140"), "{report}");
    }

    #[test]
    fn failures_carry_the_stage_name() {
        let e = invoke(&["run", "--dim", "many"]).unwrap_err();
        assert!(e.to_string().starts_with("[config]"), "{e}");

        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("nothing");
        let e = invoke(&["eval", "--output", missing.to_str().unwrap()]).unwrap_err();
        assert_eq!(e.stage(), Some(Stage::Data));
        assert!(e.to_string().starts_with("[data]"), "{e}");

        let e = invoke(&[
            "run",
            "--source",
            "/no/such/file",
            "--target",
            "x",
            "--links",
            "y",
        ])
        .unwrap_err();
        assert!(e.to_string().starts_with("[data]"), "{e}");
    }

    #[test]
    fn stage_subcommands_resume_from_their_own_stage() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap();
        let common = [
            "--entities",
            "150",
            "--epochs",
            "5",
            "--deterministic",
            "--output",
            out,
        ];
        let with = |cmd: &'static str| [&[cmd][..], &common[..]].concat();
        invoke(&with("train")).unwrap();
        assert!(dir.path().join("embeddings.bin").exists());
        assert!(!dir.path().join("assignments").exists());
        invoke(&with("sample")).unwrap();
        assert!(dir.path().join("assignments/cmcs.source.tsv").exists());
        invoke(&with("fuse")).unwrap();
        assert!(dir.path().join("m_f.bin").exists());
        invoke(&with("eval")).unwrap();
        assert!(dir.path().join("report.json").exists());
    }
}
