use std::collections::BTreeMap;
use std::io::{self, IsTerminal, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use audit_trail::chain::{generate_keypair, load_key, save_key, TrustStore, WriterKey};
use audit_trail::event::{parse_timestamp, EventDraft, EventRecord, EventType, ScopeKey};
use audit_trail::federation::{
    export_evidence, publish_pointer, verify_package, verify_pointer, EvidencePackage, ExportOptions,
    SignedPointer,
};
use audit_trail::governance::{
    prompt_decision, record_decision, suggest_identifiers, DecisionInput, DecisionKind, PromptConfig,
};
use audit_trail::ledger::{read_records, EventStore, Ledger};
use audit_trail::profile::{evaluate, load_profile};
use audit_trail::query::{diff_releases, filter_events, order_check, timeline, EventFilter};
use audit_trail::verify::Verifier;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "audit-trail", version, about = "Tamper-evident audit trail for model lifecycle events")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Create an empty ledger and its header sidecar.
    Init {
        #[arg(long)]
        log: PathBuf,
    },
    /// Append one event.
    Append(AppendArgs),
    /// Generate a signing key.
    Keygen {
        #[arg(long)]
        out: PathBuf,
        /// Also write the public half here (default: <out>.pub.json).
        #[arg(long)]
        public_out: Option<PathBuf>,
        /// Derive the key from this seed instead of randomly.
        #[arg(long)]
        seed: Option<String>,
    },
    /// Replay the hash chain and signatures. Exit status 0 iff valid.
    Verify {
        #[arg(long)]
        log: PathBuf,
        /// Directory of trusted public key files.
        #[arg(long)]
        trust: Option<PathBuf>,
        #[arg(long)]
        json: bool,
        /// Accept lines that are valid JSON but not in canonical form.
        #[arg(long)]
        allow_noncanonical: bool,
    },
    /// Filter events.
    Query {
        #[arg(long)]
        log: PathBuf,
        #[command(flatten)]
        filter: FilterArgs,
        #[command(flatten)]
        format: FormatArgs,
    },
    /// Compact timeline for one scope, e.g. --scope deployment_id=prod.
    Timeline {
        #[arg(long)]
        log: PathBuf,
        #[arg(long, value_parser = parse_scope)]
        scope: (ScopeKey, String),
        #[command(flatten)]
        format: FormatArgs,
    },
    /// Structural diff of two events' details.
    Diff {
        #[arg(long)]
        log: PathBuf,
        a: String,
        b: String,
        #[arg(long)]
        json: bool,
    },
    /// Check that every event matching --later has an earlier one matching --earlier.
    Order {
        #[arg(long)]
        log: PathBuf,
        #[arg(long, value_parser = parse_filter_expr)]
        earlier: EventFilter,
        #[arg(long, value_parser = parse_filter_expr)]
        later: EventFilter,
    },
    /// Evaluate a compliance profile. Exit status 0 iff no violations.
    Check {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        profile: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Record an Approval.
    Approve(DecisionArgs),
    /// Record a RiskWaiver.
    Waive(DecisionArgs),
    /// Record an Attestation.
    Attest(DecisionArgs),
    /// Publish or verify signed pointers.
    Pointer {
        #[command(subcommand)]
        command: PointerCommand,
    },
    /// Export the smallest contiguous slice covering a filter.
    Export {
        #[arg(long)]
        log: PathBuf,
        #[command(flatten)]
        filter: FilterArgs,
        #[arg(long)]
        sign_key: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Replace details of non-matching records inside the slice.
        #[arg(long)]
        redact: bool,
        #[arg(long, default_value_t = default_actor())]
        requested_by: String,
    },
    /// Verify an evidence package. Exit status 0 iff it checks out.
    VerifyPackage {
        package: PathBuf,
        /// Publisher public key; checks the head attestation.
        #[arg(long)]
        key: Option<PathBuf>,
        #[arg(long)]
        trust: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Run the HTTP ingestion service.
    Serve {
        #[arg(long)]
        log: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: SocketAddr,
        /// Environment variable holding the bearer token.
        #[arg(long)]
        token_env: Option<String>,
        #[arg(long)]
        sign_key: Option<PathBuf>,
        #[arg(long, default_value_t = audit_trail_server::DEFAULT_MAX_DETAILS_BYTES)]
        max_details_bytes: usize,
    },
    /// Append every draft of a JSONL spool file, all or nothing.
    Ingest {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        spool: PathBuf,
        #[arg(long)]
        sign_key: Option<PathBuf>,
    },
}

#[derive(Args)]
struct AppendArgs {
    #[arg(long)]
    log: PathBuf,
    #[arg(long = "type")]
    event_type: String,
    #[arg(long, default_value = "cli")]
    system: String,
    #[arg(long, default_value_t = default_actor())]
    actor: String,
    #[command(flatten)]
    scope: ScopeArgs,
    /// JSON text, or @path to read it from a file.
    #[arg(long)]
    details: Option<String>,
    #[arg(long)]
    timestamp: Option<String>,
    #[arg(long)]
    event_id: Option<String>,
    #[arg(long)]
    sign_key: Option<PathBuf>,
}

#[derive(Args, Default)]
struct ScopeArgs {
    #[arg(long)]
    model_id: Option<String>,
    #[arg(long)]
    dataset_id: Option<String>,
    #[arg(long)]
    deployment_id: Option<String>,
}

impl ScopeArgs {
    fn pairs(&self) -> impl Iterator<Item = (ScopeKey, &String)> {
        [
            (ScopeKey::ModelId, &self.model_id),
            (ScopeKey::DatasetId, &self.dataset_id),
            (ScopeKey::DeploymentId, &self.deployment_id),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.as_ref().map(|v| (k, v)))
    }
}

#[derive(Args)]
struct FilterArgs {
    #[command(flatten)]
    scope: ScopeArgs,
    /// Event type; repeat or comma-separate for several.
    #[arg(long = "type", value_delimiter = ',')]
    types: Vec<String>,
    /// Inclusive lower bound (RFC3339 UTC).
    #[arg(long)]
    from: Option<String>,
    /// Exclusive upper bound (RFC3339 UTC).
    #[arg(long)]
    to: Option<String>,
    #[arg(long)]
    actor: Option<String>,
    #[arg(long)]
    system: Option<String>,
}

impl FilterArgs {
    fn to_filter(&self) -> Result<EventFilter> {
        let mut f = EventFilter::new();
        for (k, v) in self.scope.pairs() {
            f = f.scope(k, v.clone());
        }
        if !self.types.is_empty() {
            f.event_types = Some(self.types.iter().map(|t| EventType::parse_lossy(t)).collect());
        }
        let ts = |s: &Option<String>| {
            s.as_deref()
                .map(|t| parse_timestamp(t).map_err(|e| anyhow!("{t}: {e}")))
                .transpose()
        };
        f.time_from = ts(&self.from)?;
        f.time_to = ts(&self.to)?;
        f.actor = self.actor.clone();
        f.system = self.system.clone();
        f.validate()?;
        Ok(f)
    }
}

#[derive(Args)]
#[group(multiple = false)]
struct FormatArgs {
    #[arg(long)]
    json: bool,
    /// Aligned text columns (the default).
    #[arg(long)]
    table: bool,
}

#[derive(Args)]
struct DecisionArgs {
    #[arg(long)]
    log: PathBuf,
    #[arg(long)]
    owner: Option<String>,
    #[arg(long, visible_alias = "statement")]
    rationale: Option<String>,
    #[command(flatten)]
    scope: ScopeArgs,
    /// Extra scope entry such as jurisdiction=EU.
    #[arg(long = "scope", value_parser = parse_pair)]
    extra_scope: Vec<(String, String)>,
    #[arg(long = "constraint")]
    constraints: Vec<String>,
    #[arg(long = "ref")]
    references: Vec<String>,
    #[arg(long)]
    expires: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    sign_key: Option<PathBuf>,
    #[arg(long)]
    timestamp: Option<String>,
    #[arg(long)]
    event_id: Option<String>,
}

impl DecisionArgs {
    fn has_content(&self) -> bool {
        self.owner.is_some()
            || self.rationale.is_some()
            || self.scope.pairs().next().is_some()
            || !self.extra_scope.is_empty()
            || !self.constraints.is_empty()
            || !self.references.is_empty()
            || self.expires.is_some()
    }

    fn input(&self) -> DecisionInput {
        let mut scope: BTreeMap<String, String> = self.extra_scope.iter().cloned().collect();
        for (k, v) in self.scope.pairs() {
            scope.insert(k.as_str().to_string(), v.clone());
        }
        DecisionInput {
            owner: self.owner.clone(),
            rationale_or_statement: self.rationale.clone(),
            scope,
            constraints: self.constraints.clone(),
            references: self.references.clone(),
            expires: self.expires.clone(),
            timestamp: self.timestamp.clone(),
            event_id: self.event_id.clone(),
        }
    }
}

#[derive(Subcommand)]
enum PointerCommand {
    /// Sign a pointer to one event and log the publication.
    Publish {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        event: String,
        /// Detail path to include in the summary; repeatable.
        #[arg(long = "summary")]
        summary: Vec<String>,
        #[arg(long)]
        sign_key: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = default_actor())]
        actor: String,
    },
    /// Check a pointer's signature, and the event it names if a package is given.
    Verify {
        pointer: PathBuf,
        /// Publisher public key file.
        #[arg(long)]
        key: PathBuf,
        /// Evidence package holding the referenced event.
        #[arg(long)]
        event_from: Option<PathBuf>,
    },
}

fn default_actor() -> String {
    std::env::var("USER").ok().filter(|u| !u.is_empty()).unwrap_or_else(|| "cli".into())
}

fn parse_pair(s: &str) -> Result<(String, String), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=value, got {s}"))?;
    if k.is_empty() || v.is_empty() {
        return Err(format!("expected key=value, got {s}"));
    }
    Ok((k.to_string(), v.to_string()))
}

fn parse_scope(s: &str) -> Result<(ScopeKey, String), String> {
    let (k, v) = parse_pair(s)?;
    Ok((k.parse::<ScopeKey>().map_err(|e| e.to_string())?, v))
}

/// `type=Approval,model_id=m1` style filter for `order`.
fn parse_filter_expr(s: &str) -> Result<EventFilter, String> {
    let mut f = EventFilter::new();
    for part in s.split(',') {
        let (k, v) = parse_pair(part)?;
        match k.as_str() {
            "type" => f.event_types.get_or_insert_with(Vec::new).push(EventType::parse_lossy(&v)),
            "actor" => f.actor = Some(v),
            "system" => f.system = Some(v),
            other => f = f.scope(other.parse::<ScopeKey>().map_err(|e| e.to_string())?, v),
        }
    }
    Ok(f)
}

fn open_existing(log: &Path, sign_key: Option<&Path>) -> Result<Ledger> {
    let key = sign_key.map(load_key).transpose().context("loading signing key")?;
    Ledger::open(log, key, false).with_context(|| format!("opening {}", log.display()))
}

fn records_of(log: &Path) -> Result<Vec<EventRecord>> {
    let out = read_records(log).with_context(|| format!("reading {}", log.display()))?;
    for e in &out.errors {
        eprintln!("warning: line {}: {}", e.line, e.message);
    }
    Ok(out.records)
}

fn load_trust(dir: Option<&Path>) -> Result<TrustStore> {
    match dir {
        Some(d) => TrustStore::load_dir(d).with_context(|| format!("loading trust anchors from {}", d.display())),
        None => Ok(TrustStore::new()),
    }
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn print_json(value: &impl serde::Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn scope_cell(r: &EventRecord) -> String {
    ScopeKey::ALL
        .iter()
        .filter_map(|k| r.scope(*k).map(|v| format!("{k}={v}")))
        .collect::<Vec<_>>()
        .join(" ")
}

fn print_table(header: &[&str], rows: &[Vec<String>]) {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let last = cells.len() - 1;
        let parts: Vec<String> = cells
            .iter()
            .enumerate()
            .map(|(i, c)| if i == last { c.to_string() } else { format!("{c:<w$}", w = widths[i]) })
            .collect();
        println!("{}", parts.join("  "));
    };
    line(header.to_vec());
    for row in rows {
        line(row.iter().map(String::as_str).collect());
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Init { log } => {
            let l = Ledger::init(&log).with_context(|| format!("creating {}", log.display()))?;
            println!("{} log_id={}", log.display(), l.log_id());
        }

        Command::Append(a) => {
            let mut ledger = open_existing(&a.log, a.sign_key.as_deref())?;
            let details = match a.details.as_deref() {
                None => serde_json::json!({}),
                Some(s) => {
                    let text = match s.strip_prefix('@') {
                        Some(p) => std::fs::read_to_string(p).with_context(|| format!("reading {p}"))?,
                        None => s.to_string(),
                    };
                    serde_json::from_str(&text).context("--details is not JSON")?
                }
            };
            let mut draft = EventDraft::new(EventType::parse_lossy(&a.event_type), a.system, a.actor).with_details(details);
            for (k, v) in a.scope.pairs() {
                *draft.scope_mut(k) = Some(v.clone());
            }
            draft.timestamp = a.timestamp;
            draft.event_id = a.event_id;
            let rec = ledger.append(draft)?;
            println!("{}", serde_json::to_string(&rec)?);
        }

        Command::Keygen { out, public_out, seed } => {
            let key = generate_keypair(seed.as_deref().map(str::as_bytes));
            save_key(&out, &key, true)?;
            let public_out = public_out.unwrap_or_else(|| {
                let mut s = out.as_os_str().to_owned();
                s.push(".pub.json");
                PathBuf::from(s)
            });
            save_key(&public_out, &key, false)?;
            println!("key_id={}", key.key_id);
            println!("private: {}", out.display());
            println!("public:  {}", public_out.display());
        }

        Command::Verify { log, trust, json, allow_noncanonical } => {
            let report = Verifier::new()
                .trust(load_trust(trust.as_deref())?)
                .require_canonical(!allow_noncanonical)
                .verify_log(&log)
                .with_context(|| format!("reading {}", log.display()))?;
            if json {
                print_json(&report)?;
            } else if report.valid {
                println!("valid: {} events checked", report.events_checked);
                println!("note: removal of records from the end cannot be detected from the chain alone");
            } else {
                println!(
                    "INVALID: {} mismatch at index {} ({} events verified before it)",
                    report.mismatch_kind.map(|k| format!("{k:?}").to_lowercase()).unwrap_or_default(),
                    report.first_mismatch.unwrap_or_default(),
                    report.events_checked
                );
                if let Some(d) = &report.detail {
                    println!("  {d}");
                }
            }
            for k in &report.key_warnings {
                eprintln!("warning: no trust anchor for signer {k}");
            }
            return Ok(if report.valid { ExitCode::SUCCESS } else { ExitCode::from(1) });
        }

        Command::Query { log, filter, format } => {
            let records = records_of(&log)?;
            let hits = filter_events(&records, &filter.to_filter()?);
            if format.json {
                print_json(&hits)?;
            } else {
                let rows: Vec<Vec<String>> = hits
                    .iter()
                    .map(|r| {
                        vec![
                            r.timestamp.clone(),
                            r.event_type.to_string(),
                            r.event_id.clone(),
                            r.actor.clone(),
                            scope_cell(r),
                        ]
                    })
                    .collect();
                print_table(&["TIMESTAMP", "TYPE", "EVENT_ID", "ACTOR", "SCOPE"], &rows);
            }
        }

        Command::Timeline { log, scope, format } => {
            let records = records_of(&log)?;
            let rows = timeline(&records, scope.0, &scope.1);
            if format.json {
                print_json(&rows)?;
            } else {
                let cells: Vec<Vec<String>> = rows
                    .iter()
                    .map(|r| vec![r.timestamp.clone(), r.event_type.to_string(), r.event_id.clone(), r.summary.clone()])
                    .collect();
                print_table(&["TIMESTAMP", "TYPE", "EVENT_ID", "SUMMARY"], &cells);
            }
        }

        Command::Diff { log, a, b, json } => {
            let records = records_of(&log)?;
            let d = diff_releases(&records, &a, &b)?;
            if json {
                print_json(&d)?;
            } else if d.is_empty() {
                println!("no differences in details");
            } else {
                for c in &d.changed {
                    println!("~ {}: {} -> {}", c.path, c.before, c.after);
                }
                for x in &d.added {
                    println!("+ {}: {}", x.path, x.value);
                }
                for x in &d.removed {
                    println!("- {}: {}", x.path, x.value);
                }
            }
        }

        Command::Order { log, earlier, later } => {
            let records = records_of(&log)?;
            let ok = order_check(&records, &earlier, &later);
            println!("{}", if ok { "ok" } else { "violated" });
            return Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) });
        }

        Command::Check { log, profile, json } => {
            let p = load_profile(&profile)?;
            let records = records_of(&log)?;
            let violations = evaluate(&p, &records);
            if json {
                print_json(&violations)?;
            } else {
                for v in &violations {
                    println!("[{}] {}", v.rule_name, v.description);
                }
                println!("{}: {} violation(s)", p.name, violations.len());
            }
            return Ok(if violations.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(1) });
        }

        Command::Approve(d) => decide(DecisionKind::Approval, d)?,
        Command::Waive(d) => decide(DecisionKind::RiskWaiver, d)?,
        Command::Attest(d) => decide(DecisionKind::Attestation, d)?,

        Command::Pointer { command } => match command {
            PointerCommand::Publish { log, event, summary, sign_key, out, actor } => {
                let key = load_key(&sign_key)?;
                let mut ledger = open_existing(&log, None)?;
                let p = publish_pointer(&mut ledger, &event, &summary, &key, &actor)?;
                write_json(&out, &p)?;
                println!("pointer to {} written to {}", p.event_id, out.display());
            }
            PointerCommand::Verify { pointer, key, event_from } => {
                let p: SignedPointer = read_json(&pointer)?;
                let key: WriterKey = load_key(&key)?;
                let event = match event_from {
                    Some(pkg) => {
                        let pkg: EvidencePackage = read_json(&pkg)?;
                        pkg.records.into_iter().find(|r| r.event_id == p.event_id)
                    }
                    None => None,
                };
                let check = verify_pointer(&p, &key.public_key, event.as_ref());
                print_json(&check)?;
                let ok = check.sig_ok && check.event_ok != Some(false);
                return Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) });
            }
        },

        Command::Export { log, filter, sign_key, out, redact, requested_by } => {
            let key = load_key(&sign_key)?;
            let mut ledger = open_existing(&log, None)?;
            let opts = ExportOptions { redact_non_matching: redact, actor: requested_by };
            let pkg = export_evidence(&mut ledger, &filter.to_filter()?, &key, &opts)?;
            write_json(&out, &pkg)?;
            println!(
                "{} records exported to {} (anchor {})",
                pkg.records.len(),
                out.display(),
                pkg.anchor_prev_hash
            );
        }

        Command::VerifyPackage { package, key, trust, json } => {
            let pkg: EvidencePackage = read_json(&package)?;
            let key = key.as_deref().map(load_key).transpose()?;
            let trust = load_trust(trust.as_deref())?;
            let report = verify_package(&pkg, key.as_ref().map(|k| k.public_key.as_slice()), Some(&trust));
            if json {
                print_json(&report)?;
            } else {
                println!(
                    "segment: {} ({} of {} records checked)",
                    if report.segment.valid { "valid" } else { "INVALID" },
                    report.segment.events_checked,
                    pkg.records.len()
                );
                match report.attestation_ok {
                    Some(true) => println!("head attestation: valid"),
                    Some(false) => println!("head attestation: INVALID"),
                    None => println!("head attestation: not checked (no --key)"),
                }
                if !pkg.redacted_event_ids.is_empty() {
                    println!(
                        "redacted records: {} (details withheld; their other fields are only covered by the head attestation)",
                        pkg.redacted_event_ids.len()
                    );
                }
            }
            return Ok(if report.ok() { ExitCode::SUCCESS } else { ExitCode::from(1) });
        }

        Command::Serve { log, bind, token_env, sign_key, max_details_bytes } => {
            let token = match token_env {
                Some(var) => Some(std::env::var(&var).with_context(|| format!("{var} is not set"))?),
                None => None,
            };
            let config = audit_trail_server::ServiceConfig {
                bind,
                ledger_path: log,
                sign_key,
                token,
                max_details_bytes,
            };
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(audit_trail_server::serve(config))?;
        }

        Command::Ingest { log, spool, sign_key } => {
            let mut ledger = open_existing(&log, sign_key.as_deref())?;
            let recs = ledger.ingest_spool(&spool)?;
            println!("ingested {} events; head {}", recs.len(), ledger.head().last_hash);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn decide(kind: DecisionKind, args: DecisionArgs) -> Result<()> {
    let config = match &args.config {
        Some(p) => PromptConfig::load(p)?,
        None => PromptConfig::default(),
    };
    let mut ledger = open_existing(&args.log, args.sign_key.as_deref())?;
    let inputs = if args.has_content() {
        args.input()
    } else {
        let mut suggestions = BTreeMap::new();
        for key in ScopeKey::ALL {
            suggestions.insert(key, suggest_identifiers(&ledger, key)?);
        }
        let stdin = io::stdin();
        if stdin.is_terminal() {
            eprintln!("recording {} ({}); * marks required fields", kind.event_type(), kind.command());
        }
        let mut input = prompt_decision(kind, &config, &suggestions, &mut stdin.lock(), &mut io::stderr())?;
        input.timestamp = args.timestamp.clone();
        input.event_id = args.event_id.clone();
        input
    };
    let rec = record_decision(kind, &inputs, &mut ledger, &config)?;
    io::stderr().flush().ok();
    println!("{}", serde_json::to_string(&rec)?);
    Ok(())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_writer(io::stderr)
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
        )
        .init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if let Some(audit_trail::ledger::LedgerError::ValidationFailed(vs)) =
                e.downcast_ref::<audit_trail::ledger::LedgerError>()
            {
                for v in vs {
                    eprintln!("  {v}");
                }
            }
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn filter_expr() {
        let f = parse_filter_expr("type=Approval,model_id=m1").unwrap();
        assert_eq!(f.event_types, Some(vec![EventType::Approval]));
        assert_eq!(f.model_id.as_deref(), Some("m1"));
        assert!(parse_filter_expr("colour=red").is_err());
        assert!(parse_filter_expr("model_id").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
