use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use spinchain::catalan::{
    catalan_triangle, lemma41_partial, srw_first_passage, theorem2_constant, theorem3_table,
    write_lemma41_csv, write_theorem2_csv, write_theorem3_csv, MOMENT_CLOSED_FORM_MAX_SITES,
};
use spinchain::kernels::Kernel;
use spinchain::montecarlo::{
    tunneling_time, write_samples_csv, write_summary_csv, RngSeed, MAX_SIMULATED_SITES,
};
use spinchain::perturbation::{
    expansion_terms, theorem1_scan, write_terms_csv, write_theorem1_csv, HIGHER_ORDER_MAX_SITES,
    SCAN_MAX_SITES,
};
use spinchain::stationary::{
    currents as edge_currents, exact_stationary, gibbs, kolmogorov_check, stationarity_residual,
};
use spinchain::stationary::KOLMOGOROV_MAX_SITES;
use spinchain::stats::{linear_fit, power_law_fit};
use spinchain::{tv_distance, Distribution64, KernelKind, Params64};

use crate::error::{CliError, CliResult};
use crate::{
    CatalanArgs, Chain, CurrentsArgs, ExpansionArgs, Output, StationaryArgs, Theorem1Args,
    Theorem2Args, Theorem3Args, TunnelArgs,
};

/// Longest chain for the exact solver.
const EXACT_MAX_SITES: usize = 22;

type Echo = Vec<(&'static str, String)>;

fn open(output: &Output) -> CliResult<BufWriter<Box<dyn Write>>> {
    let sink: Box<dyn Write> = match &output.out {
        Some(path) => Box::new(File::create(path)?),
        None => Box::new(io::stdout().lock()),
    };
    Ok(BufWriter::new(sink))
}

fn write_echo<W: Write>(out: &mut W, command: &str, echo: &Echo, output: &Output) -> io::Result<()> {
    writeln!(out, "# command={command}")?;
    for (k, v) in echo {
        writeln!(out, "# {k}={v}")?;
    }
    if let Some(p) = &output.out {
        writeln!(out, "# out={}", display_path(p))?;
    }
    Ok(())
}

fn display_path(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

fn cap(what: &str, length: usize, max: usize) -> CliResult<()> {
    if length > max {
        Err(CliError::Resource(format!("{what} is capped at L <= {max}, got L = {length}")))
    } else if length == 0 {
        Err(CliError::Usage("L must be positive".into()))
    } else {
        Ok(())
    }
}

fn chain_params(chain: &Chain, default_coupling: f64) -> CliResult<(Params64, Echo)> {
    let coupling = chain.coupling(default_coupling);
    let params = Params64::new(chain.length, coupling, chain.bc)?;
    let mut echo: Echo = vec![("L", chain.length.to_string()), ("J", coupling.to_string())];
    if let Some(c) = chain.c {
        echo.push(("c", c.to_string()));
    }
    echo.push(("bc", chain.bc.to_string()));
    Ok((params, echo))
}

fn require_stochastic(kind: KernelKind) -> CliResult<()> {
    match kind {
        KernelKind::Irreversible | KernelKind::Glauber => Ok(()),
        other => Err(CliError::Usage(format!(
            "kind {other} has no unique stationary measure; use irreversible or glauber"
        ))),
    }
}

pub fn stationary(a: StationaryArgs) -> CliResult<()> {
    cap("the exact solver", a.chain.length, EXACT_MAX_SITES)?;
    require_stochastic(a.kind)?;
    let (params, mut echo) = chain_params(&a.chain, 1.0)?;
    echo.push(("kind", a.kind.to_string()));
    let compare = match a.compare.as_deref() {
        None | Some("none") => None,
        Some("gibbs") => Some("gibbs"),
        Some(other) => {
            let kind: KernelKind = other.parse()?;
            require_stochastic(kind)?;
            Some(kind.name())
        }
    };
    echo.push(("compare", compare.unwrap_or("none").to_string()));

    let pi = exact_stationary(a.kind, &params)?;
    let residual = stationarity_residual(&pi, &Kernel::new(a.kind, &params)?)?;
    let other: Option<Distribution64> = match compare {
        None => None,
        Some("gibbs") => Some(gibbs(&params)?),
        Some(name) => Some(exact_stationary(name.parse()?, &params)?),
    };

    let mut out = open(&a.output)?;
    write_echo(&mut out, "stationary", &echo, &a.output)?;
    match &other {
        None => writeln!(out, "index,config,prob")?,
        Some(_) => writeln!(out, "index,config,prob,compare")?,
    }
    for (sigma, p) in pi.iter() {
        match &other {
            None => writeln!(out, "{},{},{}", sigma.index(), sigma, p)?,
            Some(q) => writeln!(out, "{},{},{},{}", sigma.index(), sigma, p, q.get(&sigma))?,
        }
    }
    writeln!(out, "# residual={residual:e}")?;
    if let Some(q) = &other {
        writeln!(out, "# tv={:e}", tv_distance(&pi, q)?)?;
    }
    out.flush()?;
    Ok(())
}

pub fn currents(a: CurrentsArgs) -> CliResult<()> {
    let max = if a.kolmogorov.is_some() {
        KOLMOGOROV_MAX_SITES
    } else {
        EXACT_MAX_SITES
    };
    cap("currents", a.chain.length, max)?;
    require_stochastic(a.kind)?;
    let (params, mut echo) = chain_params(&a.chain, 1.0)?;
    echo.push(("kind", a.kind.to_string()));
    echo.push((
        "kolmogorov",
        a.kolmogorov.map_or("none".to_string(), |n| n.to_string()),
    ));

    let pi = exact_stationary(a.kind, &params)?;
    let report = edge_currents(&pi, a.kind, &params)?;
    let violation = match a.kolmogorov {
        Some(n) => Some(kolmogorov_check(a.kind, &params, n)?),
        None => None,
    };

    let mut out = open(&a.output)?;
    write_echo(&mut out, "currents", &echo, &a.output)?;
    writeln!(out, "from,to,current")?;
    for e in &report.edges {
        writeln!(out, "{},{},{}", e.from, e.to, e.value)?;
    }
    writeln!(out, "# max_current={:e}", report.max_abs_current())?;
    writeln!(out, "# max_divergence={:e}", report.max_abs_divergence())?;
    match violation {
        None => {}
        Some(None) => writeln!(out, "# kolmogorov_loop=none")?,
        Some(Some(l)) => {
            let states: Vec<String> = l.states.iter().map(|s| s.to_string()).collect();
            writeln!(out, "# kolmogorov_loop={}", states.join(" "))?;
            writeln!(out, "# kolmogorov_forward={:e}", l.forward)?;
            writeln!(out, "# kolmogorov_backward={:e}", l.backward)?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn expansion(a: ExpansionArgs) -> CliResult<()> {
    let max = if a.k >= 2 {
        HIGHER_ORDER_MAX_SITES
    } else {
        EXACT_MAX_SITES
    };
    cap("the expansion", a.chain.length, max)?;
    let (params, mut echo) = chain_params(&a.chain, 1.0)?;
    echo.push(("k", a.k.to_string()));
    let terms = expansion_terms(&params, a.k)?;
    let mut out = open(&a.output)?;
    write_echo(&mut out, "expansion", &echo, &a.output)?;
    write_terms_csv(&terms, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn theorem1(a: Theorem1Args) -> CliResult<()> {
    cap("theorem1", a.length, SCAN_MAX_SITES)?;
    if a.length < 2 {
        return Err(CliError::Usage("theorem1 needs L >= 2".into()));
    }
    let log_l = (a.length as f64).ln();
    let c_values: Vec<f64> = match (&a.c, &a.couplings) {
        (Some(c), _) => c.0.clone(),
        (None, Some(j)) => j.0.iter().map(|j| j / log_l).collect(),
        (None, None) => (0..=6).map(|k| (1.5 + 0.25 * k as f64) / log_l).collect(),
    };
    let rows = theorem1_scan(a.length, &c_values)?;
    let mut echo: Echo = vec![("L", a.length.to_string())];
    echo.push((
        "c",
        c_values.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(","),
    ));
    let mut out = open(&a.output)?;
    write_echo(&mut out, "theorem1", &echo, &a.output)?;
    write_theorem1_csv(&rows, &mut out)?;
    if rows.len() >= 2 {
        let js: Vec<f64> = rows.iter().map(|r| r.coupling).collect();
        let logs: Vec<f64> = rows.iter().map(|r| r.dtv.ln()).collect();
        if let Ok(fit) = linear_fit(&js, &logs) {
            writeln!(out, "# slope_log_dtv_vs_J={}", fit.slope)?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn theorem2(a: Theorem2Args) -> CliResult<()> {
    if a.m.0.iter().chain(&a.i.0).any(|&x| x == 0) {
        return Err(CliError::Usage("m and i values must be >= 1".into()));
    }
    let mut rows = Vec::new();
    for &m in &a.m.0 {
        rows.extend(theorem2_constant(m, &a.i.0)?);
    }
    let echo: Echo = vec![("m", a.m.to_string()), ("i", a.i.to_string())];
    let mut out = open(&a.output)?;
    write_echo(&mut out, "theorem2", &echo, &a.output)?;
    write_theorem2_csv(&rows, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn theorem3(a: Theorem3Args) -> CliResult<()> {
    for &l in &a.lengths.0 {
        cap("theorem3", l, MOMENT_CLOSED_FORM_MAX_SITES)?;
    }
    let rows = theorem3_table(&a.lengths.0)?;
    let echo: Echo = vec![("L", a.lengths.to_string()), ("J", "log L".to_string())];
    let mut out = open(&a.output)?;
    write_echo(&mut out, "theorem3", &echo, &a.output)?;
    write_theorem3_csv(&rows, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn tunnel(a: TunnelArgs) -> CliResult<()> {
    for &l in &a.lengths.0 {
        cap("simulation", l, MAX_SIMULATED_SITES)?;
    }
    if a.samples && a.lengths.0.len() != 1 {
        return Err(CliError::Usage("--samples needs a single L".into()));
    }
    match a.kind {
        KernelKind::Irreversible | KernelKind::Glauber | KernelKind::ZeroTemperature => {}
        other => return Err(CliError::Usage(format!("cannot simulate kind {other}"))),
    }
    if a.replicas < 30 {
        eprintln!("spinchain: warning: {} replicas; 30 or more recommended", a.replicas);
    }
    let mut rows = Vec::new();
    for &l in &a.lengths.0 {
        let params = Params64::new(l, a.coupling, a.bc)?;
        rows.push(tunneling_time(a.kind, &params, a.replicas, RngSeed::new(a.seed), a.budget)?);
    }
    let echo: Echo = vec![
        ("kind", a.kind.to_string()),
        ("L", a.lengths.to_string()),
        ("J", a.coupling.to_string()),
        ("bc", a.bc.to_string()),
        ("replicas", a.replicas.to_string()),
        ("seed", a.seed.to_string()),
        ("budget", a.budget.to_string()),
        ("samples", a.samples.to_string()),
    ];
    let mut out = open(&a.output)?;
    write_echo(&mut out, "tunnel", &echo, &a.output)?;
    if a.samples {
        write_samples_csv(&rows[0], &mut out)?;
    } else {
        write_summary_csv(&rows, &mut out)?;
        if rows.len() >= 2 && rows.iter().all(|r| r.mean > 0.0) {
            let xs: Vec<f64> = rows.iter().map(|r| r.length as f64).collect();
            let ys: Vec<f64> = rows.iter().map(|r| r.mean).collect();
            if let Ok(fit) = power_law_fit(&xs, &ys) {
                writeln!(out, "# exponent={}", fit.slope)?;
            }
        }
    }
    let censored: usize = rows.iter().map(|r| r.censored).sum();
    if censored > 0 {
        writeln!(out, "# censored_total={censored}")?;
        eprintln!("spinchain: warning: {censored} replica(s) hit the step budget");
    }
    out.flush()?;
    Ok(())
}

pub fn catalan(a: CatalanArgs) -> CliResult<()> {
    let mut out = open(&a.output)?;
    if let Some(n_max) = a.triangle {
        if n_max > 1000 {
            return Err(CliError::Resource(format!("triangle is capped at 1000 rows, got {n_max}")));
        }
        write_echo(&mut out, "catalan", &vec![("triangle", n_max.to_string())], &a.output)?;
        writeln!(out, "n,k,value")?;
        for n in 0..=n_max {
            for k in 0..=n {
                writeln!(out, "{n},{k},{}", catalan_triangle(n, k)?)?;
            }
        }
    } else if let Some(m) = a.lemma {
        let mut rows = Vec::new();
        for &l in &a.lmax.0 {
            rows.push((m, l, lemma41_partial(m, l)?));
        }
        let echo: Echo = vec![("lemma", m.to_string()), ("lmax", a.lmax.to_string())];
        write_echo(&mut out, "catalan", &echo, &a.output)?;
        write_lemma41_csv(&rows, &mut out)?;
    } else if let Some(m) = a.first_passage {
        let table = srw_first_passage(m, a.nmax)?;
        let echo: Echo = vec![("first-passage", m.to_string()), ("nmax", a.nmax.to_string())];
        write_echo(&mut out, "catalan", &echo, &a.output)?;
        writeln!(out, "n,pmf,exact")?;
        for n in 0..=a.nmax {
            let p = table.pmf(n);
            writeln!(out, "{n},{},{p}", spinchain::Scalar::to_f64_lossy(&p))?;
        }
    } else {
        return Err(CliError::Usage(
            "catalan needs one of --triangle, --lemma or --first-passage".into(),
        ));
    }
    out.flush()?;
    Ok(())
}
