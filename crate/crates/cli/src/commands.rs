use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use hptree::analytic::{self, Analytic, ApproxParams};
use hptree::bloom::{self, BloomFilter};
use hptree::codec::{self, EncodedTree};
use hptree::hashstream::{ingest, Corpus, InputFormat};
use hptree::sim::{self, Execution, Summary};
use hptree::{PrefixTree, StreamKey, TreeKind, Verdict};
use rand::Rng;

use crate::format::{parse_range, sig};
use crate::*;

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Format(String),
    Capacity(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Format(_) => 3,
            CliError::Capacity(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) | CliError::Format(m) | CliError::Capacity(m) => f.write_str(m),
        }
    }
}

impl From<hptree::Error> for CliError {
    fn from(e: hptree::Error) -> Self {
        use hptree::Error as E;
        let msg = e.to_string();
        match e {
            E::Format(_) | E::Truncated | E::MalformedTree(_) => CliError::Format(msg),
            E::Capacity { .. } => CliError::Capacity(msg),
            _ => CliError::Input(msg),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

type Res<T> = std::result::Result<T, CliError>;

pub fn run(cmd: Cmd) -> Res<()> {
    match cmd {
        Cmd::Table(a) => table(a),
        Cmd::Oscillation(a) => oscillation(a),
        Cmd::Encode(a) => encode(a),
        Cmd::Decode(a) => decode(a),
        Cmd::Query(a) => query(a),
        Cmd::Fpsim(a) => fpsim(a),
        Cmd::Rate(a) => rate(a),
        Cmd::Bloomcmp(a) => bloomcmp(a),
    }
}

const TABLE_NS: [u64; 20] = [
    1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 20, 50, 100, 200, 500, 1000, 2000, 5000, 10_000, 100_000,
];

fn open_out(path: Option<&Path>) -> Res<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn csv_out(output: &OutputArgs) -> Res<csv::Writer<Box<dyn Write>>> {
    Ok(csv::Writer::from_writer(open_out(output.out.as_deref())?))
}

fn grid(g: &GridArgs, default: &[u64]) -> Res<Vec<u64>> {
    let mut ns = g.n.clone();
    if let Some(r) = &g.n_range {
        ns.extend(parse_range(r).map_err(CliError::Input)?);
    }
    if ns.is_empty() && g.n_range.is_none() {
        ns = default.to_vec();
    }
    if ns.contains(&0) {
        return Err(CliError::Input("element counts must be >= 1".into()));
    }
    Ok(ns)
}

fn tree_kind(k: &KindArgs) -> Res<TreeKind> {
    match (k.kind, k.depth) {
        (KindArg::Minimal, None) => Ok(TreeKind::Minimal),
        (KindArg::Reduced, None) => Ok(TreeKind::Reduced),
        (KindArg::Depth, Some(d)) if d >= 1 => Ok(TreeKind::MinDepth(d)),
        (KindArg::Depth, _) => Err(CliError::Input("--kind depth needs --depth >= 1".into())),
        (_, Some(_)) => Err(CliError::Input("--depth only applies to --kind depth".into())),
    }
}

fn kind_name(kind: TreeKind) -> &'static str {
    match kind {
        TreeKind::Minimal => "minimal",
        TreeKind::MinDepth(_) => "depth",
        TreeKind::Reduced => "reduced",
    }
}

/// Analytic size of a tree of `kind` over `n` elements, in bits.
fn entropy_of(a: &Analytic, n: u64, kind: TreeKind) -> f64 {
    match kind {
        TreeKind::Minimal => a.tree_entropy(n),
        TreeKind::MinDepth(d) => a.min_depth_entropy_auto(n, d as u64),
        TreeKind::Reduced => a.reduced_entropy_auto(n),
    }
}

fn false_positive_of(a: &Analytic, n: u64, kind: TreeKind) -> f64 {
    match kind {
        TreeKind::Minimal => a.false_positive(n, 0),
        TreeKind::MinDepth(d) => a.false_positive(n, d as u64),
        TreeKind::Reduced => 1.0,
    }
}

fn check_count(n: u64) -> Res<usize> {
    if n == 0 {
        return Err(CliError::Input("n must be >= 1".into()));
    }
    if n > u32::MAX as u64 {
        return Err(CliError::Capacity(format!("n = {n} exceeds 2^32 - 1 elements")));
    }
    Ok(n as usize)
}

fn table(a: TableArgs) -> Res<()> {
    let ns = grid(&a.grid, &TABLE_NS)?;
    let digits = a.output.digits.unwrap_or(4);
    let an = Analytic::default();
    let p = ApproxParams::default();
    let mut w = csv_out(&a.output)?;
    let mut header: Vec<String> = ["n", "h_red", "h", "h_approx", "H_red", "H", "H_bar"]
        .map(String::from)
        .to_vec();
    header.extend(a.depth.iter().map(|d| format!("H{d}")));
    header.extend(["lg_fact", "D", "F"].map(String::from));
    header.extend(a.depth.iter().map(|d| format!("F{d}")));
    header.extend(a.depth.iter().map(|d| format!("B{d}")));
    header.push("method".into());
    w.write_record(&header)?;
    let cap = an.config().n_max_exact;
    for &n in &ns {
        let f = |x: f64| sig(x, digits);
        let mut row = vec![n.to_string()];
        row.push(f(analytic::reduced_split_entropy(n)?));
        row.push(f(analytic::split_entropy(n)));
        row.push(f(analytic::approx_split_entropy(n)));
        row.push(f(an.reduced_entropy_auto(n)));
        row.push(f(an.tree_entropy(n)));
        row.push(f(analytic::approx_tree_entropy(n, &p)?));
        for &d in &a.depth {
            row.push(f(an.min_depth_entropy_auto(n, d)));
        }
        row.push(f(analytic::lg_factorial(n)));
        let depth = an.avg_depth_recurrence(n).unwrap_or_else(|_| an.avg_depth_sum(n));
        row.push(f(depth));
        row.push(f(an.false_positive(n, 0)));
        let fps: Vec<f64> = a.depth.iter().map(|&d| an.false_positive(n, d)).collect();
        row.extend(fps.iter().map(|&x| f(x)));
        for &fp in &fps {
            row.push(bloom::bloom_bits(n, fp).map(f).unwrap_or_default());
        }
        row.push(if n <= cap { "recurrence" } else { "closed-form" }.into());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn oscillation(a: OscArgs) -> Res<()> {
    let ns = grid(&a.grid, &[])?;
    let digits = a.output.digits.unwrap_or(6);
    let an = Analytic::default();
    let p = ApproxParams::default();
    let mut w = csv_out(&a.output)?;
    w.write_record(["n", "exact", "smooth", "residual"])?;
    for &n in &ns {
        let (exact, smooth) = match a.quantity {
            QuantityArg::H => (an.tree_entropy(n), analytic::solved_tree_entropy(n, &p)),
            QuantityArg::D => (an.avg_depth_sum(n), analytic::smooth_avg_depth(n, &p)),
            QuantityArg::F => (an.false_positive(n, 0), analytic::FALSE_POSITIVE_LIMIT),
        };
        w.write_record([n.to_string(), sig(exact, digits), sig(smooth, digits), sig(exact - smooth, digits)])?;
    }
    w.flush()?;
    Ok(())
}

fn input_format(f: FormatArg) -> InputFormat {
    match f {
        FormatArg::Lines => InputFormat::Lines,
        FormatArg::RawU64 => InputFormat::RawU64,
    }
}

fn read_corpus(inputs: &[PathBuf], args: &CorpusArgs) -> Res<Corpus> {
    let key = StreamKey(args.key);
    let format = input_format(args.format);
    let stdin_only = [PathBuf::from("-")];
    let inputs = if inputs.is_empty() { &stdin_only[..] } else { inputs };
    let mut corpus = Corpus::default();
    for path in inputs {
        let part = if path.as_os_str() == "-" {
            ingest(io::stdin().lock(), format, key)?
        } else {
            let file = File::open(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            ingest(file, format, key).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?
        };
        corpus.streams.extend(part.streams);
        corpus.labels.extend(part.labels);
    }
    let distinct: HashSet<u64> = corpus.streams.iter().map(|s| s.digest).collect();
    corpus.duplicates = corpus.streams.len() - distinct.len();
    Ok(corpus)
}

fn encode(a: EncodeArgs) -> Res<()> {
    let kind = tree_kind(&a.kind)?;
    let corpus = read_corpus(&a.inputs, &a.corpus)?;
    if corpus.duplicates > 0 {
        return Err(CliError::Input(format!("{} duplicate elements in input", corpus.duplicates)));
    }
    check_count(corpus.streams.len() as u64)?;
    let tree = PrefixTree::build(&corpus.streams, kind)?;
    let (encoded, report) = codec::encode_with_report(&tree, a.scale_bits)?;
    let mut out = open_out(a.out.as_deref())?;
    encoded.write_to(&mut out)?;
    out.flush()?;
    let n = tree.len();
    let bound = entropy_of(&Analytic::default(), n, kind);
    eprintln!(
        "n={n} kind={} d={} payload_bits={} model_bits={:.1} bits_per_element={:.4} analytic_bits={:.1}",
        kind_name(kind),
        kind.min_depth(),
        report.payload_bits,
        report.model_bits,
        report.payload_bits as f64 / n as f64,
        bound
    );
    Ok(())
}

fn load_tree(path: &Path) -> Res<(EncodedTree, PrefixTree)> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let encoded = EncodedTree::from_bytes(&bytes)?;
    let tree = codec::decode(&encoded)?;
    Ok((encoded, tree))
}

fn decode(a: DecodeArgs) -> Res<()> {
    let (encoded, tree) = load_tree(&a.input)?;
    let digits = a.digits.unwrap_or(6);
    let st = tree.stats();
    let mut w = csv::Writer::from_writer(open_out(None)?);
    w.write_record([
        "kind", "n", "d", "scale_bits", "payload_bits", "nodes", "leaves", "degree1", "degree2", "extension",
        "avg_depth", "max_depth",
    ])?;
    let leaves: u64 = st.leaf_depth_histogram.values().sum();
    let max_depth = st.leaf_depth_histogram.keys().next_back().copied().unwrap_or(0);
    w.write_record([
        kind_name(tree.kind()).to_string(),
        tree.len().to_string(),
        tree.kind().min_depth().to_string(),
        encoded.scale_bits.to_string(),
        encoded.payload_bits().to_string(),
        st.total_nodes.to_string(),
        leaves.to_string(),
        st.degree1_nodes.to_string(),
        st.degree2_nodes.to_string(),
        st.extension_nodes.to_string(),
        sig(st.avg_depth, digits),
        max_depth.to_string(),
    ])?;
    w.flush()?;
    if let Some(path) = &a.out {
        let canonical = codec::encode(&tree, encoded.scale_bits)?;
        let mut out = open_out(Some(path))?;
        canonical.write_to(&mut out)?;
        out.flush()?;
    }
    Ok(())
}

fn query(a: QueryArgs) -> Res<()> {
    let (_, tree) = load_tree(&a.tree)?;
    let corpus = read_corpus(&a.inputs, &a.corpus)?;
    let mut w = csv::Writer::from_writer(open_out(a.out.as_deref())?);
    w.write_record(["element", "verdict"])?;
    for (s, label) in corpus.streams.iter().zip(&corpus.labels) {
        let v = match tree.query(s) {
            Verdict::PresentOrFalsePositive => "PresentOrFalsePositive",
            Verdict::DefinitelyAbsent => "DefinitelyAbsent",
        };
        w.write_record([label.as_str(), v])?;
    }
    w.flush()?;
    Ok(())
}

/// Share of `total` handed to part `i` of `parts`.
fn share(total: u64, parts: u64, i: u64) -> u64 {
    total / parts + (i < total % parts) as u64
}

fn fpsim(a: SimArgs) -> Res<()> {
    let kind = tree_kind(&a.kind)?;
    let n = check_count(a.n)?;
    if a.trials == 0 || a.probes == 0 {
        return Err(CliError::Input("--trials and --probes must be >= 1".into()));
    }
    let digits = a.output.digits.unwrap_or(6);
    let runs = sim::run_trials(a.trials, a.seed, Execution::Parallel, |i, rng| {
        let (tree, streams) = sim::random_tree(n, kind, rng);
        let probes = share(a.probes, a.trials, i);
        let probe_seed: u64 = rng.gen();
        let rate = tree.simulate_false_positive(streams[0].key, &streams, probes, probe_seed, Execution::Parallel);
        ((rate * probes as f64).round() as u64, probes)
    });
    let hits: u64 = runs.iter().map(|r| r.0).sum();
    let rates = Summary::of(runs.iter().filter(|r| r.1 > 0).map(|r| r.0 as f64 / r.1 as f64));
    let empirical = hits as f64 / a.probes as f64;
    let binomial = (empirical * (1.0 - empirical) / a.probes as f64).sqrt();
    let se = if rates.count > 1 { rates.std_err().max(binomial) } else { binomial };
    let analytic = false_positive_of(&Analytic::default(), a.n, kind);
    let z = if se > 0.0 { (empirical - analytic) / se } else { 0.0 };
    let mut w = csv_out(&a.output)?;
    w.write_record(["n", "kind", "d", "trials", "probes", "hits", "empirical", "std_err", "analytic", "z"])?;
    w.write_record([
        a.n.to_string(),
        kind_name(kind).into(),
        kind.min_depth().to_string(),
        a.trials.to_string(),
        a.probes.to_string(),
        hits.to_string(),
        sig(empirical, digits),
        sig(se, digits),
        sig(analytic, digits),
        sig(z, digits),
    ])?;
    w.flush()?;
    Ok(())
}

fn rate(a: RateArgs) -> Res<()> {
    let kind = tree_kind(&a.kind)?;
    if a.trials == 0 {
        return Err(CliError::Input("--trials must be >= 1".into()));
    }
    let digits = a.output.digits.unwrap_or(6);
    let an = Analytic::default();
    let mut w = csv_out(&a.output)?;
    w.write_record([
        "n", "kind", "d", "trials", "payload_bits", "payload_std", "model_bits", "model_std", "bits_per_element",
        "analytic_bits", "excess_bits",
    ])?;
    for &n in &a.n {
        let nn = check_count(n)?;
        let r = codec::measure_rate(nn, kind, a.trials, a.seed, a.scale_bits, Execution::Parallel)?;
        let h = entropy_of(&an, n, kind);
        w.write_record([
            n.to_string(),
            kind_name(kind).into(),
            kind.min_depth().to_string(),
            a.trials.to_string(),
            sig(r.payload_bits.mean, digits),
            sig(r.payload_bits.std, digits),
            sig(r.model_bits.mean, digits),
            sig(r.model_bits.std, digits),
            sig(r.bits_per_element(), digits),
            sig(h, digits),
            sig(r.payload_bits.mean - h, digits),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn bloomcmp(a: BloomArgs) -> Res<()> {
    if a.trials == 0 {
        return Err(CliError::Input("--trials must be >= 1".into()));
    }
    let digits = a.output.digits.unwrap_or(6);
    let an = Analytic::default();
    let mut w = csv_out(&a.output)?;
    w.write_record([
        "n", "d", "H_d", "B", "F_d", "encoded_bits", "bloom_m", "bloom_k", "bloom_fp", "bloom_fp_empirical",
        "ratio_analytic", "ratio_measured",
    ])?;
    for (row, &(n, d)) in a
        .n
        .iter()
        .flat_map(|&n| a.depth.iter().map(move |&d| (n, d)))
        .collect::<Vec<_>>()
        .iter()
        .enumerate()
    {
        let nn = check_count(n)?;
        if d == 0 {
            return Err(CliError::Input("--depth values must be >= 1".into()));
        }
        let seed = sim::item_rng(a.seed, row as u64).gen::<u64>();
        let h = an.min_depth_entropy_auto(n, d as u64);
        let fp = an.false_positive(n, d as u64);
        let b = bloom::bloom_bits(n, fp)?;
        let rate = codec::measure_rate(nn, TreeKind::MinDepth(d), a.trials, seed, 16, Execution::Parallel)?;
        let template = BloomFilter::with_rate(n, fp, StreamKey(0))?;
        let (m, k) = (template.m(), template.k());
        let hits: u64 = sim::run_trials(a.trials, seed ^ 0xB100, Execution::Parallel, |i, rng| {
            let mut f = BloomFilter::new(m, k, StreamKey(rng.gen())).unwrap();
            for _ in 0..n {
                f.insert(rng.gen());
            }
            (0..share(a.probes, a.trials, i)).filter(|_| f.contains(rng.gen())).count() as u64
        })
        .iter()
        .sum();
        w.write_record([
            n.to_string(),
            d.to_string(),
            sig(h, digits),
            sig(b, digits),
            sig(fp, digits),
            sig(rate.payload_bits.mean, digits),
            m.to_string(),
            k.to_string(),
            sig(bloom::bloom_fp(m, n, k), digits),
            sig(hits as f64 / a.probes.max(1) as f64, digits),
            sig(h / b, digits),
            sig(rate.payload_bits.mean / m as f64, digits),
        ])?;
    }
    w.flush()?;
    Ok(())
}

