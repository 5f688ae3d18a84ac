//! Golden fixtures bundled with the crate.
//!
//! Each fixture is a set of input files, a list of CLI invocations and the
//! exact bytes those invocations must produce. File arguments are written
//! as `@name` and resolve inside the directory the fixture is materialised
//! into. The files live under `fixtures/` in the crate root.

use std::fs;
use std::path::Path;

use crate::cli;

#[derive(Debug, Clone, Copy)]
pub struct Fixture {
    pub name: &'static str,
    pub inputs: &'static [(&'static str, &'static str)],
    pub commands: &'static [&'static [&'static str]],
    pub expected: &'static [(&'static str, &'static str)],
}

macro_rules! fixture_file {
    ($dir:literal, $file:literal) => {
        ($file, include_str!(concat!("../fixtures/", $dir, "/", $file)))
    };
}

const BAM_WALKTHROUGH: Fixture = Fixture {
    name: "bam_walkthrough",
    inputs: &[fixture_file!("bam_walkthrough", "features.csv")],
    commands: &[
        &["train", "--features", "@features.csv", "--method", "bam", "--model-out", "@model.json"],
        &["predict", "--features", "@features.csv", "--model", "@model.json", "--out", "@predictions.csv"],
    ],
    expected: &[
        fixture_file!("bam_walkthrough", "model.json"),
        fixture_file!("bam_walkthrough", "predictions.csv"),
    ],
};

const STATIC_TRACK: Fixture = Fixture {
    name: "static_track",
    inputs: &[
        fixture_file!("static_track", "tracks.csv"),
        fixture_file!("static_track", "meta.csv"),
        fixture_file!("static_track", "ages.csv"),
    ],
    commands: &[&[
        "features", "--tracks", "@tracks.csv", "--meta", "@meta.csv", "--ages", "@ages.csv", "--out", "@features.csv",
    ]],
    expected: &[fixture_file!("static_track", "features.csv")],
};

const BC_MEAN: Fixture = Fixture {
    name: "bc_mean",
    inputs: &[fixture_file!("bc_mean", "features.csv")],
    commands: &[&["train", "--features", "@features.csv", "--method", "bc", "--model-out", "@model.json"]],
    expected: &[fixture_file!("bc_mean", "model.json")],
};

pub fn fixture_suite() -> Vec<Fixture> {
    vec![BAM_WALKTHROUGH, STATIC_TRACK, BC_MEAN]
}

impl Fixture {
    /// Writes the inputs into `dir`, runs every command and returns the
    /// produced bytes of each expected file, in `expected` order.
    pub fn regenerate(&self, dir: &Path) -> Result<Vec<(&'static str, String)>, String> {
        for (name, body) in self.inputs {
            fs::write(dir.join(name), body).map_err(|e| format!("{name}: {e}"))?;
        }
        for command in self.commands {
            let args: Vec<String> = command
                .iter()
                .map(|a| match a.strip_prefix('@') {
                    Some(file) => dir.join(file).to_string_lossy().into_owned(),
                    None => a.to_string(),
                })
                .collect();
            let (mut out, mut err) = (Vec::new(), Vec::new());
            let code = cli::run(std::iter::once("hrbase".to_string()).chain(args), &mut out, &mut err);
            if code != cli::EXIT_OK {
                return Err(format!(
                    "{}: `{}` exited {code}: {}",
                    self.name,
                    command.join(" "),
                    String::from_utf8_lossy(&err)
                ));
            }
        }
        self.expected
            .iter()
            .map(|(name, _)| {
                fs::read_to_string(dir.join(name))
                    .map(|text| (*name, text))
                    .map_err(|e| format!("{name}: {e}"))
            })
            .collect()
    }
}
