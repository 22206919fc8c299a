use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use poi_cli::pipeline::{self, Method, PipelineOptions};
use poi_cli::synth::{self, presets};
use poi_cli::{config, records, score, Error, Result};
use poi_core::PipelineConfig;

/// Stay points, POIs and environment labels from phone location and sensor logs.
#[derive(Parser)]
#[command(name = "poi", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate, deduplicate and noise-normalize the raw logs.
    Preprocess {
        #[arg(long)]
        location: PathBuf,
        #[arg(long)]
        sensors: Option<PathBuf>,
        /// Output directory for cleaned logs and rejects.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Detect stay points in a location log.
    Staypoints {
        #[arg(long)]
        location: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Skip the dropout validity check (baseline detector).
        #[arg(long)]
        no_validation: bool,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Group stay points into POIs.
    Cluster {
        #[arg(long)]
        stay_points: PathBuf,
        /// Output directory for labeled stay points and POI GeoJSON.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        cluster: ClusterArgs,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Turn clustered stay points into visit sequences.
    Trajectory {
        #[arg(long)]
        stay_points: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Label each visited POI from the sensor streams.
    Classify {
        #[arg(long)]
        trajectory: PathBuf,
        #[arg(long)]
        location: PathBuf,
        #[arg(long)]
        sensors: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Combine the slots of all users per cluster id.
        #[arg(long)]
        pool_users: bool,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Run every stage and write all artifacts plus a manifest.
    Pipeline {
        #[arg(long)]
        location: PathBuf,
        #[arg(long)]
        sensors: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        no_validation: bool,
        #[command(flatten)]
        cluster: ClusterArgs,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Generate a seeded synthetic trace with ground truth.
    Synth {
        /// Built-in scenario: two-poi, tunnel, threshold-sweep, daily.
        #[arg(
            long,
            conflicts_with = "scenario",
            required_unless_present = "scenario"
        )]
        preset: Option<String>,
        /// Scenario description in JSON.
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Override the scenario's accuracy floor, meters.
        #[arg(long)]
        accuracy_floor: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare a pipeline run against ground truth.
    Score {
        /// Directory written by `pipeline`.
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
}

/// Configuration file plus per-field overrides.
#[derive(Args)]
struct ConfigArgs {
    /// Key-value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Minimum stay duration, seconds.
    #[arg(long)]
    min_stay: Option<f64>,
    /// Largest sample gap inside a valid stay, seconds.
    #[arg(long)]
    theta_t_gap: Option<f64>,
    /// Largest step inside a valid stay, meters.
    #[arg(long)]
    theta_d: Option<f64>,
    /// Cap on the accuracy-derived radius, meters.
    #[arg(long)]
    theta_l: Option<f64>,
    /// GPS accuracy threshold, meters.
    #[arg(long)]
    th_g: Option<f64>,
    /// Normalized noise threshold.
    #[arg(long)]
    th_n: Option<f64>,
    /// Light threshold, lux.
    #[arg(long)]
    th_l: Option<f64>,
    /// Slot length, seconds.
    #[arg(long)]
    slot_len: Option<i64>,
    /// Any other field as KEY=VALUE; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(p) => config::load(p)?,
            None => PipelineConfig::default(),
        };
        let overrides = [
            ("theta_t_min_stay", self.min_stay.map(|v| v.to_string())),
            ("theta_t_gap", self.theta_t_gap.map(|v| v.to_string())),
            ("theta_d_valid", self.theta_d.map(|v| v.to_string())),
            ("theta_l_eps_cap", self.theta_l.map(|v| v.to_string())),
            ("th_g", self.th_g.map(|v| v.to_string())),
            ("th_n", self.th_n.map(|v| v.to_string())),
            ("th_l", self.th_l.map(|v| v.to_string())),
            ("slot_len", self.slot_len.map(|v| v.to_string())),
        ];
        for (key, value) in overrides {
            if let Some(v) = value {
                config::set(&mut cfg, key, &v)?;
            }
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("expected KEY=VALUE, got {kv:?}")))?;
            config::set(&mut cfg, k.trim(), v.trim())?;
        }
        cfg.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct ClusterArgs {
    #[arg(long, default_value = "dbscan")]
    method: Method,
    /// Single-linkage cut, meters (hierarchical only).
    #[arg(long)]
    cut_distance: Option<f64>,
    /// Largest k tried by k-means.
    #[arg(long, default_value_t = 10)]
    k_max: usize,
    /// Cluster stay points of all users together.
    #[arg(long)]
    pool_users: bool,
}

impl ClusterArgs {
    fn options(&self, validate: bool) -> Result<PipelineOptions> {
        let opts = PipelineOptions {
            method: self.method,
            validate,
            pool_users: self.pool_users,
            k_max: self.k_max,
            cut_distance: self.cut_distance,
        };
        opts.validate()?;
        Ok(opts)
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(Error::io(dir))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Preprocess {
            location,
            sensors,
            out,
            cfg,
        } => {
            let cfg = cfg.resolve()?;
            let inputs = pipeline::load_inputs(&location, sensors.as_deref())?;
            let prepared = pipeline::preprocess(inputs.locations, inputs.sensors, &cfg);
            create_dir(&out)?;
            let loc: Vec<_> = prepared.locations.values().flatten().cloned().collect();
            let sen: Vec<_> = prepared.sensors.values().flatten().cloned().collect();
            records::write_locations(&out.join("location.csv"), &loc)?;
            records::write_sensors(&out.join("sensors.csv"), &sen)?;
            records::write_rejects(&out.join(pipeline::REJECTS_FILE), &inputs.rejects)?;
            eprintln!(
                "kept {} of {} location and {} of {} sensor rows, {} rejected",
                loc.len(),
                inputs.location_rows,
                sen.len(),
                inputs.sensor_rows,
                inputs.rejects.len()
            );
        }
        Command::Staypoints {
            location,
            out,
            no_validation,
            cfg,
        } => {
            let cfg = cfg.resolve()?;
            let inputs = pipeline::load_inputs(&location, None)?;
            let prepared = pipeline::preprocess(inputs.locations, Vec::new(), &cfg);
            let stays = pipeline::detect_stay_points(&prepared, &cfg, !no_validation);
            let rows = pipeline::stay_point_rows(&stays, None);
            records::write_stay_points(&out, &rows)?;
            eprintln!("{} stay points", rows.len());
        }
        Command::Cluster {
            stay_points,
            out,
            cluster,
            cfg,
        } => {
            let cfg = cfg.resolve()?;
            let opts = cluster.options(true)?;
            let (stays, _) = pipeline::stays_from_rows(&records::read_stay_points(&stay_points)?)?;
            let scopes = pipeline::cluster_users(&stays, &cfg, &opts)?;
            let labels = pipeline::labels(&stays, &scopes);
            let fc = pipeline::features(&stays, &scopes, &[]);
            create_dir(&out)?;
            records::write_stay_points(
                &out.join(pipeline::STAY_POINTS_FILE),
                &pipeline::stay_point_rows(&stays, Some(&labels)),
            )?;
            poi_cli::geojson::write(&out.join(pipeline::CLUSTERS_FILE), &fc)?;
            eprintln!("{} clusters", fc.features.len());
        }
        Command::Trajectory {
            stay_points,
            out,
            cfg,
        } => {
            let cfg = cfg.resolve()?;
            let (stays, labels) =
                pipeline::stays_from_rows(&records::read_stay_points(&stay_points)?)?;
            let trajs = pipeline::trajectories(&stays, &labels, &cfg);
            let rows = pipeline::visit_rows(&trajs);
            records::write_trajectory(&out, &rows)?;
            eprintln!("{} visits", rows.len());
        }
        Command::Classify {
            trajectory,
            location,
            sensors,
            out,
            pool_users,
            cfg,
        } => {
            let cfg = cfg.resolve()?;
            let trajs = pipeline::trajectories_from_rows(&records::read_trajectory(&trajectory)?);
            let inputs = pipeline::load_inputs(&location, Some(&sensors))?;
            let prepared = pipeline::preprocess(inputs.locations, inputs.sensors, &cfg);
            let reports = pipeline::classify(&trajs, &prepared, &cfg, pool_users);
            let rows: Vec<_> = reports
                .iter()
                .map(|(s, r)| records::EnvReportRow::new(s, r))
                .collect();
            records::write_env_reports(&out, &rows)?;
            eprintln!("{} POIs classified", rows.len());
        }
        Command::Pipeline {
            location,
            sensors,
            out,
            no_validation,
            cluster,
            cfg,
        } => {
            let cfg = cfg.resolve()?;
            let opts = cluster.options(!no_validation)?;
            let m = pipeline::run_pipeline(&location, &sensors, &cfg, &opts, &out)?;
            let c = m.counts;
            eprintln!(
                "{} users, {} stay points, {} clusters, {} POIs classified, {} rows rejected",
                c.users, c.stay_points, c.clusters, c.pois_classified, c.rejected_rows
            );
        }
        Command::Synth {
            preset,
            scenario,
            seed,
            accuracy_floor,
            out,
        } => {
            let mut sc = match (preset, scenario) {
                (Some(name), _) => presets::by_name(&name, seed.unwrap_or(0)).ok_or_else(|| {
                    Error::Input(format!(
                        "unknown preset {name:?}; choose one of {}",
                        presets::NAMES.join(", ")
                    ))
                })?,
                (None, Some(path)) => synth::load_scenario(&path)?,
                (None, None) => unreachable!("clap requires one of --preset or --scenario"),
            };
            if let Some(s) = seed {
                sc.seed = s;
            }
            if let Some(f) = accuracy_floor {
                sc.accuracy_floor = f;
            }
            let data = synth::generate(&sc)?;
            synth::write(&data, &out)?;
            eprintln!(
                "{} location rows, {} ground-truth POIs",
                data.location.len(),
                data.truth.pois.len()
            );
        }
        Command::Score { run, truth, cfg } => {
            let cfg = cfg.resolve()?;
            let truth = synth::load_truth(&truth)?;
            let m = score::score_run(&run, &truth, &cfg)?;
            let json = serde_json::to_string_pretty(&m).expect("metrics serialize");
            println!("{json}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("poi: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
