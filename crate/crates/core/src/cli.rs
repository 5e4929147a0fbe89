//! Command-line front end: `build`, `verify`, `homs` and `limitset`.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 computational failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::builder::{
    build_case_a_with, build_case_b_with, realize_subgroup_with_depth, BuildError, BuildOptions, OrigamiSchottkyGroup,
};
use crate::limitset::{
    default_bbox, disc_tree_report, limit_point_cloud, nesting_report, points_outside, render_pgm, to_csv, LimitSeeds,
    RenderOptions, MAX_DEPTH,
};
use crate::moebius::MAX_ELLIPTIC_ORDER;
use crate::presentation::{
    enumerate_homs, presentation_case_a, presentation_case_b, subgroup_words_a4, subgroup_words_even,
    subgroup_words_odd, todd_coxeter, FiniteGroup, Presentation, PresentationError, Word, DEFAULT_MAX_COSETS,
};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "ORIGAMI_SCHOTTKY_OUT_DIR";

#[derive(Parser, Debug)]
#[command(
    name = "origami-schottky",
    version,
    about = "Origami-Schottky groups: construction, certificates and coset enumeration"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(tag = "command", rename_all = "snake_case")]
enum Command {
    /// Build and certify a group; writes its JSON description.
    Build(BuildArgs),
    /// Realize a subgroup: index, normality, quotient, genus and word certificates.
    Verify(VerifyArgs),
    /// Enumerate homomorphisms onto a finite group.
    Homs(HomsArgs),
    /// Write a limit-set point cloud as CSV and optionally a PGM image.
    Limitset(LimitsetArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum CaseArg {
    /// Dihedral vertex group D_n
    A,
    /// Tetrahedral vertex group A_4
    B,
}

#[derive(Args, Debug, Serialize)]
struct GroupArgs {
    /// Construction: `a` (dihedral, needs --n) or `b` (tetrahedral).
    #[arg(long, value_enum)]
    case: Option<CaseArg>,
    /// Order of the dihedral rotation (case a).
    #[arg(long)]
    n: Option<u32>,
    /// Circle parameter in (0, 1); adaptive when omitted.
    #[arg(long)]
    r: Option<f64>,
    /// λ grid override, comma separated; entries are `x` or `re:im`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    lambda: Option<Vec<String>>,
    /// Read the group from a `build` JSON artifact instead of rebuilding it.
    #[arg(long)]
    from: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct BuildArgs {
    #[command(flatten)]
    #[serde(flatten)]
    group: GroupArgs,
    /// Output JSON path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum SubgroupArg {
    Odd,
    Even,
    A4,
    Custom,
}

#[derive(Args, Debug, Serialize)]
struct VerifyArgs {
    #[command(flatten)]
    #[serde(flatten)]
    group: GroupArgs,
    #[arg(long, value_enum)]
    subgroup: SubgroupArg,
    /// Subgroup generators for `--subgroup custom`, separated by `;`.
    #[arg(long)]
    words: Option<String>,
    /// Word length for the freeness and loxodromy certificates.
    #[arg(long)]
    depth: Option<usize>,
    /// Coset limit for the enumeration.
    #[arg(long, default_value_t = DEFAULT_MAX_COSETS)]
    max_cosets: usize,
    /// Also export the coset table as CSV.
    #[arg(long)]
    coset_csv: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct HomsArgs {
    #[arg(long, value_enum)]
    case: CaseArg,
    #[arg(long)]
    n: Option<u32>,
    /// Target group: `Zm`, `Dm` or `A4`.
    #[arg(long)]
    target: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum SeedArg {
    FixedPoints,
    Centers,
}

#[derive(Args, Debug, Serialize)]
struct LimitsetArgs {
    #[command(flatten)]
    #[serde(flatten)]
    group: GroupArgs,
    #[arg(long, default_value_t = 5)]
    depth: usize,
    #[arg(long, value_enum, default_value_t = SeedArg::FixedPoints)]
    seeds: SeedArg,
    /// CSV output path (`re,im,depth`).
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Grayscale image output path.
    #[arg(long)]
    ppm: Option<PathBuf>,
    #[arg(long, default_value_t = 512)]
    width: usize,
    #[arg(long, default_value_t = 512)]
    height: usize,
    /// xmin,xmax,ymin,ymax; defaults to the certificate circles.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, num_args = 4)]
    bbox: Option<Vec<f64>>,
    /// Exit 2 unless every point lies in the certified discs.
    #[arg(long)]
    check_containment: bool,
    /// Summary JSON path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Compute(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Compute(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Compute(m) => m,
        }
    }
}

impl From<BuildError> for Failure {
    fn from(e: BuildError) -> Self {
        match e {
            BuildError::InvalidParameter(_) => Failure::Usage(e.to_string()),
            _ => Failure::Compute(e.to_string()),
        }
    }
}

impl From<PresentationError> for Failure {
    fn from(e: PresentationError) -> Self {
        match e {
            PresentationError::InvalidParameter(_)
            | PresentationError::Parse { .. }
            | PresentationError::ScanTooLarge(_) => Failure::Usage(e.to_string()),
            _ => Failure::Compute(e.to_string()),
        }
    }
}

/// Contents of a `build` artifact.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildArtifact {
    pub config: serde_json::Value,
    pub group: OrigamiSchottkyGroup,
    pub orbit_circle_count: usize,
}

/// Parses and runs one invocation; returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{e}");
                    0
                }
                _ => 1,
            };
        }
    };
    let config = serde_json::to_value(&cli.command).unwrap_or(serde_json::Value::Null);
    let result = match &cli.command {
        Command::Build(a) => cmd_build(a, config, stdout),
        Command::Verify(a) => cmd_verify(a, config, stdout),
        Command::Homs(a) => cmd_homs(a, config, stdout),
        Command::Limitset(a) => cmd_limitset(a, config, stdout),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message());
            f.code()
        }
    }
}

fn parse_lambda(s: &str) -> Result<Complex64, Failure> {
    let bad = || Failure::Usage(format!("bad λ value `{s}`"));
    let z = match s.split_once(':') {
        Some((re, im)) => Complex64::new(
            re.trim().parse().map_err(|_| bad())?,
            im.trim().parse().map_err(|_| bad())?,
        ),
        None => Complex64::new(s.trim().parse().map_err(|_| bad())?, 0.0),
    };
    if !(z.re.is_finite() && z.im.is_finite()) || z.norm() == 0.0 {
        return Err(bad());
    }
    Ok(z)
}

fn check_n(case: CaseArg, n: Option<u32>) -> Result<Option<u32>, Failure> {
    match (case, n) {
        (CaseArg::A, None) => Err(Failure::Usage("--case a requires --n".into())),
        (CaseArg::A, Some(n)) if !(2..=MAX_ELLIPTIC_ORDER).contains(&n) => Err(Failure::Usage(format!(
            "--n must be in 2..={MAX_ELLIPTIC_ORDER}, got {n}"
        ))),
        (CaseArg::A, Some(n)) => Ok(Some(n)),
        (CaseArg::B, Some(_)) => Err(Failure::Usage("--n is not used with --case b".into())),
        (CaseArg::B, None) => Ok(None),
    }
}

fn load_group(g: &GroupArgs) -> Result<OrigamiSchottkyGroup, Failure> {
    if let Some(path) = &g.from {
        if g.case.is_some() || g.n.is_some() || g.r.is_some() || g.lambda.is_some() {
            return Err(Failure::Usage(
                "--from cannot be combined with construction flags".into(),
            ));
        }
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
        let artifact: BuildArtifact = serde_json::from_str(&text)
            .map_err(|e| Failure::Usage(format!("invalid build artifact {}: {e}", path.display())))?;
        artifact.group.check()?;
        return Ok(artifact.group);
    }
    let case = g
        .case
        .ok_or_else(|| Failure::Usage("one of --case or --from is required".into()))?;
    let n = check_n(case, g.n)?;
    if let Some(r) = g.r {
        if !(r > 0.0 && r < 1.0) {
            return Err(Failure::Usage(format!("--r must be in (0, 1), got {r}")));
        }
    }
    let lambdas = match &g.lambda {
        Some(v) if v.is_empty() => return Err(Failure::Usage("empty λ grid".into())),
        Some(v) => Some(v.iter().map(|s| parse_lambda(s)).collect::<Result<Vec<_>, _>>()?),
        None => None,
    };
    let mut opts = BuildOptions {
        r: g.r,
        ..Default::default()
    };
    match case {
        CaseArg::A => {
            if let Some(l) = lambdas {
                if l.iter().any(|z| z.im != 0.0) {
                    return Err(Failure::Usage("case a takes a real λ grid".into()));
                }
                opts.dihedral_grid = Some(l.iter().map(|z| z.re).collect());
            }
            Ok(build_case_a_with(n.expect("checked"), &opts)?)
        }
        CaseArg::B => {
            opts.a4_grid = lambdas;
            Ok(build_case_b_with(&opts)?)
        }
    }
}

fn default_path(explicit: &Option<PathBuf>, name: &str) -> Option<PathBuf> {
    explicit
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(|d| Path::new(&d).join(name)))
}

/// Writes through a temporary file in the target directory, then renames.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let io = |e: std::io::Error| Failure::Compute(format!("cannot write {}: {e}", path.display()));
    std::fs::create_dir_all(&dir).map_err(io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn emit(value: &impl Serialize, path: Option<PathBuf>, stdout: &mut dyn Write) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::Compute(e.to_string()))?;
    text.push('\n');
    match path {
        Some(p) => write_atomic(&p, text.as_bytes()),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Compute(e.to_string())),
    }
}

fn cmd_build(a: &BuildArgs, config: serde_json::Value, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let group = load_group(&a.group)?;
    let verdict = group.certificate.verdict;
    let artifact = BuildArtifact {
        config,
        orbit_circle_count: group.certificate.circles.len(),
        group,
    };
    emit(&artifact, default_path(&a.out, "build.json"), stdout)?;
    Ok(if verdict { 0 } else { 2 })
}

#[derive(Serialize)]
struct VerifyOutput {
    config: serde_json::Value,
    report: crate::builder::SubgroupReport,
    passed: bool,
}

fn subgroup_words(a: &VerifyArgs, p: &Presentation, group: &OrigamiSchottkyGroup) -> Result<Vec<Word>, Failure> {
    use crate::presentation::Family;
    let n = match group.kind {
        Family::CaseA { n } => Some(n),
        Family::CaseB => None,
    };
    let need_a = || n.ok_or_else(|| Failure::Usage("this subgroup family needs --case a".into()));
    if a.words.is_some() && a.subgroup != SubgroupArg::Custom {
        return Err(Failure::Usage("--words needs --subgroup custom".into()));
    }
    Ok(match a.subgroup {
        SubgroupArg::Odd => subgroup_words_odd(need_a()?)?,
        SubgroupArg::Even => subgroup_words_even(need_a()?)?,
        SubgroupArg::A4 => {
            if n.is_some() {
                return Err(Failure::Usage("--subgroup a4 needs --case b".into()));
            }
            subgroup_words_a4()
        }
        SubgroupArg::Custom => {
            let text = a
                .words
                .as_ref()
                .ok_or_else(|| Failure::Usage("--subgroup custom needs --words".into()))?;
            let words = text
                .split(';')
                .filter(|s| !s.trim().is_empty())
                .map(|s| p.word(s))
                .collect::<Result<Vec<_>, _>>()?;
            if words.is_empty() || words.iter().any(Word::is_empty) {
                return Err(Failure::Usage("custom subgroup words must be nonempty".into()));
            }
            words
        }
    })
}

fn cmd_verify(a: &VerifyArgs, config: serde_json::Value, stdout: &mut dyn Write) -> Result<i32, Failure> {
    if a.max_cosets < 1 {
        return Err(Failure::Usage("--max-cosets must be ≥ 1".into()));
    }
    if let Some(d) = a.depth {
        if !(1..=12).contains(&d) {
            return Err(Failure::Usage(format!("--depth must be in 1..=12, got {d}")));
        }
    }
    let group = load_group(&a.group)?;
    let words = subgroup_words(a, &group.presentation, &group)?;
    // Enumerate first so that overflow under a custom limit is reported as such.
    let table = todd_coxeter(&group.presentation, &words, a.max_cosets)?;
    if let Some(path) = &a.coset_csv {
        write_atomic(path, table.to_csv().as_bytes())?;
    }
    let report = realize_subgroup_with_depth(&group, &words, a.depth)?;
    let passed = report.passed();
    emit(
        &VerifyOutput { config, report, passed },
        default_path(&a.out, "verify.json"),
        stdout,
    )?;
    Ok(if passed { 0 } else { 2 })
}

#[derive(Serialize)]
struct HomsOutput {
    config: serde_json::Value,
    target: String,
    target_order: usize,
    count: usize,
    surjective_count: usize,
    surjective_torsion_free_count: usize,
    homs: Vec<crate::presentation::Homomorphism>,
}

fn cmd_homs(a: &HomsArgs, config: serde_json::Value, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let n = check_n(a.case, a.n)?;
    let p = match n {
        Some(n) => presentation_case_a(n)?,
        None => presentation_case_b(),
    };
    let target = FiniteGroup::by_name(&a.target)?;
    let homs = enumerate_homs(&p, &target)?;
    let out = HomsOutput {
        config,
        target: a.target.clone(),
        target_order: target.order(),
        count: homs.len(),
        surjective_count: homs.iter().filter(|h| h.surjective).count(),
        surjective_torsion_free_count: homs
            .iter()
            .filter(|h| h.surjective && h.torsion_free_kernel == Some(true))
            .count(),
        homs,
    };
    emit(&out, default_path(&a.out, "homs.json"), stdout)?;
    Ok(0)
}

#[derive(Serialize)]
struct LimitsetSummary {
    config: serde_json::Value,
    point_count: usize,
    dropped_near_infinity: usize,
    points_outside_discs: usize,
    word_length_radii: crate::limitset::NestingReport,
    nested_disc_radii: crate::limitset::NestingReport,
    csv: Option<PathBuf>,
    ppm: Option<PathBuf>,
}

fn cmd_limitset(a: &LimitsetArgs, config: serde_json::Value, stdout: &mut dyn Write) -> Result<i32, Failure> {
    if !(1..=MAX_DEPTH).contains(&a.depth) {
        return Err(Failure::Usage(format!(
            "--depth must be in 1..={MAX_DEPTH}, got {}",
            a.depth
        )));
    }
    if a.width == 0 || a.height == 0 || a.width > 8192 || a.height > 8192 {
        return Err(Failure::Usage("image size must be in 1..=8192".into()));
    }
    if let Some(b) = &a.bbox {
        if !(b.len() == 4 && b.iter().all(|v| v.is_finite()) && b[0] < b[1] && b[2] < b[3]) {
            return Err(Failure::Usage("--bbox needs xmin<xmax and ymin<ymax".into()));
        }
    }
    let group = load_group(&a.group)?;
    let seeds = match a.seeds {
        SeedArg::FixedPoints => LimitSeeds::FixedPointsOfT,
        SeedArg::Centers => LimitSeeds::CircleCenters,
    };
    let compute = |e: crate::limitset::LimitSetError| Failure::Compute(e.to_string());
    let cloud = limit_point_cloud(&group, a.depth, seeds).map_err(compute)?;
    let discs = &group.certificate.circles;
    let outside = points_outside(&cloud.points, discs, 1e-9);
    let csv_path = default_path(&a.csv, "limitset.csv");
    let csv = to_csv(&cloud.points);
    let ppm_path = a.ppm.clone();
    if let Some(p) = &ppm_path {
        let bbox = match &a.bbox {
            Some(b) => [b[0], b[1], b[2], b[3]],
            None => default_bbox(discs),
        };
        let img = render_pgm(
            &cloud.points,
            &RenderOptions {
                width: a.width,
                height: a.height,
                bbox,
            },
        );
        write_atomic(p, &img)?;
    }
    let summary = LimitsetSummary {
        config,
        point_count: cloud.points.len(),
        dropped_near_infinity: cloud.dropped_near_infinity,
        points_outside_discs: outside,
        word_length_radii: nesting_report(&group, a.depth).map_err(compute)?,
        nested_disc_radii: disc_tree_report(&group, a.depth.min(5)).map_err(compute)?,
        csv: csv_path.clone(),
        ppm: ppm_path,
    };
    match &csv_path {
        Some(p) => {
            write_atomic(p, csv.as_bytes())?;
            emit(&summary, a.out.clone(), stdout)?;
        }
        None => {
            stdout
                .write_all(csv.as_bytes())
                .map_err(|e| Failure::Compute(e.to_string()))?;
            if let Some(p) = &a.out {
                emit(&summary, Some(p.clone()), stdout)?;
            }
        }
    }
    Ok(if a.check_containment && outside > 0 { 2 } else { 0 })
}
