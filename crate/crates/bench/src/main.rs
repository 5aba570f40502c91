// Copyright 2026 The SIVF Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;
use sivf_bench::config::{BenchConfig, DatasetSpec, Scenario};
use sivf_bench::emit_csv;
use sivf_bench::summary::{render, summarize};

/// Streaming IVF benchmark harness. Unset options take the scenario's
/// desk-scale defaults; list options accept comma-separated values.
#[derive(Debug, Parser)]
#[command(name = "sivf-bench", version)]
struct Cli {
    /// add, search, delete, sliding, memory or sensitivity.
    #[arg(long)]
    scenario: Scenario,
    /// Base vectors in fvecs format; synthetic uniform data when omitted.
    /// Relative paths resolve against $SIVF_DATA_DIR.
    #[arg(long)]
    base: Option<PathBuf>,
    /// Query vectors in fvecs format.
    #[arg(long, requires = "base")]
    queries_file: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    nlist: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    nprobe: Option<Vec<usize>>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    batch: Option<Vec<usize>>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    maxvec_factor: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    slab_factor: Option<Vec<f64>>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of query vectors.
    #[arg(long)]
    queries: Option<usize>,
    #[arg(long)]
    train_iters: Option<usize>,
    #[arg(long)]
    train_per_list: Option<usize>,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Skip the summary table on stderr.
    #[arg(long)]
    quiet: bool,
}

impl Cli {
    fn config(&self) -> BenchConfig {
        let mut c = BenchConfig::defaults_for(self.scenario);
        if let Some(base) = &self.base {
            c.dataset = DatasetSpec::Fvecs {
                base: base.clone(),
                queries: self.queries_file.clone(),
            };
        }
        macro_rules! set {
            ($($field:ident),*) => {
                $(if let Some(v) = &self.$field { c.$field = v.clone(); })*
            };
        }
        set!(
            n,
            dim,
            nlist,
            nprobe,
            k,
            batch,
            window,
            steps,
            repeats,
            maxvec_factor,
            slab_factor,
            threads,
            seed,
            queries,
            train_iters,
            train_per_list
        );
        c
    }
}

fn run(cli: &Cli) -> Result<()> {
    let config = cli.config();
    config.validate()?;
    // Fail on an unwritable path before spending minutes on the run.
    let file = File::create(&cli.out).with_context(|| format!("creating {}", cli.out.display()))?;
    let records = match sivf_bench::run(&config) {
        Ok(r) => r,
        Err(e) => {
            drop(file);
            let _ = std::fs::remove_file(&cli.out);
            return Err(e);
        }
    };
    emit_csv(BufWriter::new(file), &records)?;
    if !cli.quiet {
        eprint!("{}", render(&summarize(&records)));
    }
    eprintln!("wrote {} rows to {}", records.len(), cli.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
