//! Scenario runners. Each returns a [`Report`] whose assertions are computed
//! from its rows and thresholds from the configuration.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{ExponentSpec, Scenario, ScenarioConfig, TestFunctionKind, TripleSpec, WeightSpec};
use super::report::{Assertion, Relation, Report, Row};
use super::testfns::{test_function, test_pair};
use super::{necessity_ratio, WitnessStrategy};
use crate::czd::{cz_decompose, default_base, split};
use crate::error::{Error, Result};
use crate::exponents::{combine, Exponent};
use crate::grid::{dyadic_family, translated_families, Grid, SampledFunction, Translate};
use crate::norms::{luxemburg_norm, modular, rescale_check, two_factor_holder_defect, holder_defect, weighted_norm};
use crate::operators::{
    averaging_aq, bilinear_maximal, bilinear_maximal_all_intervals, maximal, maximal_all_intervals,
    one_third_domination,
};
use crate::sio::{
    apply_bilinear_sio, check_kernel_bounds, grid_sampling, kernel_by_name, sharp_domination_test,
    weighted_sio_ratio, BumpKernel, SingularTestKernel, SioConfig,
};
use crate::weights::{scalar_characterization, vec_ap_constant, ap_constant, VectorWeight, Weight};

/// Runs one scenario. Per-case failures are recorded in the report and
/// fail it; only configuration errors are returned as `Err`.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<Report> {
    cfg.validate()?;
    let mut out = Collector::default();
    match cfg.scenario {
        Scenario::NormSanity => norm_sanity(cfg, &mut out),
        Scenario::NormLemmas => norm_lemmas(cfg, &mut out),
        Scenario::Holder => holder(cfg, &mut out),
        Scenario::Pointwise => pointwise(cfg, &mut out),
        Scenario::ApSweep => ap_sweep(cfg, &mut out),
        Scenario::Characterization => characterization(cfg, &mut out),
        Scenario::Necessity => necessity(cfg, &mut out),
        Scenario::Sufficiency => sufficiency(cfg, &mut out),
        Scenario::CzdVerify => czd_verify(cfg, &mut out),
        Scenario::OneThird => one_third(cfg, &mut out),
        Scenario::SioDomination => sio_domination(cfg, &mut out),
    }
    Ok(Report::new(cfg.scenario.name(), cfg.seed, out.rows, out.assertions, out.errors))
}

#[derive(Default)]
struct Collector {
    rows: Vec<Row>,
    assertions: Vec<Assertion>,
    errors: Vec<String>,
}

impl Collector {
    fn absorb(&mut self, label: &str, r: Result<Vec<Row>>) {
        match r {
            Ok(rows) => self.rows.extend(rows),
            Err(e) => self.errors.push(format!("{label}: {e}")),
        }
    }

    /// Runs `n` independent cases in parallel, keeping case order.
    fn cases(&mut self, prefix: &str, n: usize, f: impl Fn(usize) -> Result<Vec<Row>> + Sync) {
        let results: Vec<Result<Vec<Row>>> = (0..n).into_par_iter().map(&f).collect();
        for (i, r) in results.into_iter().enumerate() {
            self.absorb(&format!("{prefix}{i}"), r);
        }
    }

    fn assert(&mut self, name: impl Into<String>, observed: f64, relation: Relation, threshold: f64) {
        self.assertions.push(Assertion::new(name, observed, relation, threshold));
    }

    fn select(&self, metric: &str) -> impl Iterator<Item = &Row> {
        let metric = metric.to_string();
        self.rows.iter().filter(move |r| r.metric == metric)
    }

    /// Largest value of `metric`; NaN counts as infinite, which fails any bound.
    fn max(&self, metric: &str) -> f64 {
        self.select(metric)
            .map(|r| if r.value.is_nan() { f64::INFINITY } else { r.value })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn sum(&self, metric: &str) -> f64 {
        self.select(metric).map(|r| r.value).sum()
    }

    /// Values of `(case, metric)` ordered along the given axis.
    fn series(&self, case: &str, metric: &str, by_domain: bool) -> Vec<f64> {
        let mut v: Vec<(f64, f64)> = self
            .select(metric)
            .filter(|r| r.case == case)
            .map(|r| {
                let key = if by_domain { r.half_width } else { r.cell_exponent as f64 };
                (key, r.value)
            })
            .collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        v.into_iter().map(|t| t.1).collect()
    }
}

fn row(case: impl Into<String>, family: &str, grid: &Grid, metric: &str, value: f64) -> Row {
    Row {
        case: case.into(),
        family: family.to_string(),
        dim: grid.dim(),
        half_width: grid.half_width(),
        cell_exponent: grid.cell_exponent(),
        metric: metric.to_string(),
        value,
    }
}

fn factors(v: &[f64]) -> Vec<f64> {
    v.windows(2).map(|w| w[1] / w[0]).collect()
}

/// Largest `|v_{i+1} / v_i - 1|`, or infinity when a value is not finite.
fn max_change(v: &[f64]) -> f64 {
    if v.iter().any(|x| !x.is_finite()) {
        return f64::INFINITY;
    }
    factors(v).iter().map(|f| (f - 1.0).abs()).fold(0.0, f64::max)
}

fn case_rng(seed: u64, case: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x005e_ed0f_ca5e);
    rng.set_stream(case as u64);
    rng
}

fn exponent_at(cfg: &ScenarioConfig, grid: Grid, i: usize) -> Result<Exponent> {
    match cfg.exponents.len() {
        0 => Err(Error::InvalidParameter("exponents: at least one exponent is required".into())),
        n => cfg.exponents[i % n].build(grid),
    }
}

struct Triple {
    vw: VectorWeight,
    p1: Exponent,
    p2: Exponent,
}

fn build_triple(t: &TripleSpec, grid: Grid) -> Result<Triple> {
    let p1 = t.p1.build(grid)?;
    let p2 = t.p2.build(grid)?;
    let vw = VectorWeight::new(t.w1.build(grid)?, t.w2.build(grid)?, &p1, &p2)?;
    Ok(Triple { vw, p1, p2 })
}

fn refinements(cfg: &ScenarioConfig) -> Vec<u32> {
    if cfg.refinements.is_empty() {
        vec![cfg.grid.cell_exponent]
    } else {
        cfg.refinements.clone()
    }
}

fn domains(cfg: &ScenarioConfig) -> Vec<f64> {
    if cfg.domains.is_empty() {
        vec![cfg.grid.half_width]
    } else {
        cfg.domains.clone()
    }
}

// ---------------------------------------------------------------- norms

fn norm_sanity(cfg: &ScenarioConfig, out: &mut Collector) {
    let grid = match cfg.grid.build() {
        Ok(g) => g,
        Err(e) => return out.errors.push(format!("grid: {e}")),
    };
    out.cases("case-", cfg.cases, |i| {
        let p = 0.5 + 5.5 * case_rng(cfg.seed, i).gen::<f64>();
        let f = test_function(grid, &cfg.test_functions, cfg.seed, i, 0)?;
        let n = luxemburg_norm(&f, &Exponent::constant(grid, p)?, &cfg.norm)?.value;
        let closed = (grid.cell_volume() * f.values().iter().map(|v| v.abs().powf(p)).sum::<f64>()).powf(1.0 / p);
        let case = format!("case-{i}");
        Ok(vec![
            row(&case, "-", &grid, "p", p),
            row(&case, "-", &grid, "norm", n),
            row(&case, "-", &grid, "closed_form", closed),
            row(&case, "-", &grid, "rel_error", (n - closed).abs() / closed),
        ])
    });

    // p = 1 on [0, 1) and 2 on [1, 2): rho(chi / lambda) = 1/lambda + 1/lambda^2.
    let golden = (|| {
        let g = cfg.grid.with(cfg.grid.half_width.max(2.0), cfg.grid.cell_exponent).build()?;
        if g.dim() != 1 {
            return Ok(Vec::new());
        }
        let p = Exponent::from_fn(g, |x| if x[0] < 1.0 { 1.0 } else { 2.0 })?;
        let f = SampledFunction::indicator(g, |x| (0.0..2.0).contains(&x[0]));
        let n = luxemburg_norm(&f, &p, &cfg.norm)?.value;
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        Ok(vec![
            row("golden", "-", &g, "norm", n),
            row("golden", "-", &g, "golden_abs_error", (n - phi).abs()),
        ])
    })();
    out.absorb("golden", golden);

    out.assert("max-rel-error", out.max("rel_error"), Relation::AtMost, cfg.thresholds.norm_rel_error);
    if cfg.grid.dim == 1 {
        out.assert(
            "golden-abs-error",
            out.max("golden_abs_error"),
            Relation::AtMost,
            cfg.thresholds.golden_abs_error,
        );
    }
}

fn norm_lemmas(cfg: &ScenarioConfig, out: &mut Collector) {
    let grid = match cfg.grid.build() {
        Ok(g) => g,
        Err(e) => return out.errors.push(format!("grid: {e}")),
    };
    let nc = &cfg.norm;
    out.cases("case-", cfg.cases, |i| {
        let mut rng = case_rng(cfg.seed, i);
        let p = exponent_at(cfg, grid, i)?;
        let f = test_function(grid, &cfg.test_functions, cfg.seed, i, 0)?.scale(10f64.powf(rng.gen_range(-1.0..1.0)))?;
        let g = f.abs().add(&test_function(grid, &cfg.test_functions, cfg.seed, i, 1)?)?;
        let norm = |h: &SampledFunction, q: &Exponent| -> Result<f64> { Ok(luxemburg_norm(h, q, nc)?.value) };
        let nf = norm(&f, &p)?;

        let c = rng.gen_range(0.1..10.0) * if rng.gen_bool(0.5) { -1.0 } else { 1.0 };
        let homogeneity = (norm(&f.scale(c)?, &p)? - c.abs() * nf).abs() / (c.abs() * nf);

        let monotonicity = (nf - norm(&g, &p)?).max(0.0) / nf;

        let rho = modular(&f, &p)?;
        let (lo, hi) = if nf > 1.0 {
            (rho.powf(1.0 / p.p_plus()), rho.powf(1.0 / p.p_minus()))
        } else {
            (rho.powf(1.0 / p.p_minus()), rho.powf(1.0 / p.p_plus()))
        };
        let bridge = (lo - nf).max(nf - hi).max(0.0) / nf;

        let rescale = rescale_check(&f, &p, rng.gen_range(0.5..3.0), nc)?;

        // Oscillating sequence f_k = f (1 + (-1)^k 2^-k): the tail infimum of the
        // norms must not fall below ||f|| by more than the tail perturbation.
        let k_max = 20;
        let mut tail = f64::INFINITY;
        for k in k_max / 2..=k_max {
            let s = 1.0 + (-1f64).powi(k) * 2f64.powi(-k);
            tail = tail.min(norm(&f.scale(s)?, &p)?);
        }
        let fatou = (nf * (1.0 - 2f64.powi(-k_max / 2)) - tail).max(0.0) / nf;

        // Increasing truncations to growing cell prefixes.
        let steps = 8;
        let mut prev = 0.0;
        let mut truncation: f64 = 0.0;
        for k in 1..=steps {
            let cut = grid.cell_count() * k / steps;
            let fk = f.zip_map(&f, |c, v, _| if c < cut { v } else { 0.0 })?;
            let nk = norm(&fk, &p)?;
            truncation = truncation.max((prev - nk).max(0.0) / nf);
            prev = nk;
        }
        truncation = truncation.max((prev - nf).abs() / nf);

        let case = format!("case-{i}");
        let fam = "-";
        Ok(vec![
            row(&case, fam, &grid, "norm", nf),
            row(&case, fam, &grid, "homogeneity_error", homogeneity),
            row(&case, fam, &grid, "monotonicity_excess", monotonicity),
            row(&case, fam, &grid, "bridge_excess", bridge),
            row(&case, fam, &grid, "rescale_error", rescale),
            row(&case, fam, &grid, "fatou_gap", fatou),
            row(&case, fam, &grid, "truncation_gap", truncation),
        ])
    });
    let tol = cfg.thresholds.lemma_rel_tol;
    for m in [
        "homogeneity_error",
        "monotonicity_excess",
        "bridge_excess",
        "rescale_error",
        "fatou_gap",
        "truncation_gap",
    ] {
        out.assert(format!("max-{m}"), out.max(m), Relation::AtMost, tol);
    }
}

fn holder(cfg: &ScenarioConfig, out: &mut Collector) {
    let grid = match cfg.grid.build() {
        Ok(g) => g,
        Err(e) => return out.errors.push(format!("grid: {e}")),
    };
    out.cases("case-", cfg.cases, |i| {
        let p = exponent_at(cfg, grid, i)?;
        if p.p_minus() <= 1.0 {
            return Err(Error::InvalidExponent(format!("Hölder checks need p_- > 1, got {}", p.p_minus())));
        }
        let (f, g) = test_pair(grid, &cfg.test_functions, cfg.seed, i)?;
        let defect = holder_defect(&f, &g, &p, &cfg.norm)?;
        let bound = 1.0 + 1.0 / p.p_minus() - 1.0 / p.p_plus();

        let p2 = exponent_at(cfg, grid, i + 1)?;
        let q = combine(&p, &p2)?;
        let sup_ratio = |a: &Exponent| (0..grid.cell_count()).map(|c| q.value(c) / a.value(c)).fold(0.0, f64::max);
        let two_bound = (sup_ratio(&p) + sup_ratio(&p2)).max(1.0).powf(1.0 / q.p_minus());
        let two = two_factor_holder_defect(&f, &g, &p, &p2, &cfg.norm)?;

        let case = format!("case-{i}");
        Ok(vec![
            row(&case, "-", &grid, "holder_defect", defect),
            row(&case, "-", &grid, "holder_bound", bound),
            row(&case, "-", &grid, "holder_excess", defect - bound),
            row(&case, "-", &grid, "two_factor_defect", two),
            row(&case, "-", &grid, "two_factor_bound", two_bound),
            row(&case, "-", &grid, "two_factor_excess", two - two_bound),
        ])
    });
    let slack = cfg.thresholds.holder_slack;
    out.assert("max-holder-excess", out.max("holder_excess"), Relation::AtMost, slack);
    out.assert("max-two-factor-excess", out.max("two_factor_excess"), Relation::AtMost, slack);
}

// ------------------------------------------------------------ operators

fn pointwise(cfg: &ScenarioConfig, out: &mut Collector) {
    let grid = match cfg.grid.build() {
        Ok(g) => g,
        Err(e) => return out.errors.push(format!("grid: {e}")),
    };
    let fams = translated_families(&grid);
    let family = if grid.dim() == 1 { "all-intervals" } else { "translated" };
    out.cases("case-", cfg.cases, |i| {
        let (f1, f2) = test_pair(grid, &cfg.test_functions, cfg.seed, i)?;
        let (m1, m2, b) = if grid.dim() == 1 {
            (
                maximal_all_intervals(&f1)?,
                maximal_all_intervals(&f2)?,
                bilinear_maximal_all_intervals(&f1, &f2)?,
            )
        } else {
            (maximal(&f1, &fams)?, maximal(&f2, &fams)?, bilinear_maximal(&f1, &f2, &fams)?)
        };
        let product = (0..grid.cell_count())
            .filter(|&c| b.values()[c] > m1.values()[c] * m2.values()[c])
            .count();
        let mut averaging = 0;
        for fam in &fams {
            for q in fam.cubes() {
                let a = averaging_aq(q, &f1, &f2)?;
                averaging += q.cells().iter().filter(|&&c| a.get(c).abs() > b.values()[c]).count();
            }
        }
        let case = format!("case-{i}");
        Ok(vec![
            row(&case, family, &grid, "product_violations", product as f64),
            row(&case, family, &grid, "averaging_violations", averaging as f64),
        ])
    });
    out.assert("product-violations", out.sum("product_violations"), Relation::AtMost, 0.0);
    out.assert("averaging-violations", out.sum("averaging_violations"), Relation::AtMost, 0.0);
}

// -------------------------------------------------------------- weights

fn power_label(a: f64) -> String {
    format!("a={a}")
}

fn ap_sweep(cfg: &ScenarioConfig, out: &mut Collector) {
    let th = &cfg.thresholds;

    let unit = (|| {
        let grid = cfg.grid.build()?;
        let fams = translated_families(&grid);
        let one = Weight::constant(grid, 1.0)?;
        let mut rows = Vec::new();
        for p in [1.5, 2.0, 3.0] {
            let v = ap_constant(&one, &Exponent::constant(grid, p)?, &fams, &cfg.norm)?.value;
            rows.push(row(format!("unit-p={p}"), "translated", &grid, "unit_error", (v - 1.0).abs()));
        }
        for (q1, q2) in [(2.0, 2.0), (1.5, 3.0)] {
            let (p1, p2) = (Exponent::constant(grid, q1)?, Exponent::constant(grid, q2)?);
            let vw = VectorWeight::new(one.clone(), one.clone(), &p1, &p2)?;
            let v = vec_ap_constant(&vw, &p1, &p2, &fams, &cfg.norm)?.value;
            rows.push(row(format!("unit-vec-{q1}-{q2}"), "translated", &grid, "unit_error", (v - 1.0).abs()));
        }
        Ok(rows)
    })();
    out.absorb("unit", unit);

    let jobs: Vec<(f64, f64)> = cfg
        .power_exponents
        .iter()
        .flat_map(|&a| domains(cfg).into_iter().map(move |l| (a, l)))
        .collect();
    out.cases("sweep-", jobs.len(), |j| {
        let (a, l) = jobs[j];
        let grid = cfg.grid.with(l, cfg.grid.cell_exponent).build()?;
        let fams = translated_families(&grid);
        let v = ap_constant(&Weight::power(grid, a)?, &Exponent::constant(grid, 2.0)?, &fams, &cfg.norm)?.value;
        Ok(vec![row(power_label(a), "translated", &grid, "ap_constant", v)])
    });

    out.assert("unit-constant-error", out.max("unit_error"), Relation::AtMost, th.unit_constant_error);
    for &a in &cfg.stable_power_exponents {
        let s = out.series(&power_label(a), "ap_constant", true);
        out.assert(format!("{}: max-change-per-doubling", power_label(a)), max_change(&s), Relation::AtMost, th.stable_change);
    }
    for &a in &cfg.divergent_power_exponents {
        let s = out.series(&power_label(a), "ap_constant", true);
        let g = factors(&s).into_iter().fold(f64::INFINITY, f64::min);
        out.assert(format!("{}: min-growth-per-doubling", power_label(a)), g, Relation::AtLeast, th.ap_growth);
    }
}

fn characterization(cfg: &ScenarioConfig, out: &mut Collector) {
    let th = &cfg.thresholds;
    let ms = refinements(cfg);
    let ls = domains(cfg);
    let mut jobs: Vec<(usize, u32, f64)> = Vec::new();
    for t in 0..cfg.triples.len() {
        for &m in &ms {
            jobs.extend(ls.iter().map(|&l| (t, m, l)));
        }
    }
    out.cases("job-", jobs.len(), |j| {
        let (t, m, l) = jobs[j];
        let spec = &cfg.triples[t];
        let grid = cfg.grid.with(l, m).build()?;
        let fams = translated_families(&grid);
        let tr = build_triple(spec, grid)?;
        let vec = vec_ap_constant(&tr.vw, &tr.p1, &tr.p2, &fams, &cfg.norm)?.value;
        let sc = scalar_characterization(&tr.vw, &tr.p1, &tr.p2, &fams, &cfg.norm)?;
        let case = &spec.label;
        Ok(vec![
            row(case, "translated", &grid, "vec", vec),
            row(case, "translated", &grid, "c1", sc.c1.value),
            row(case, "translated", &grid, "c2", sc.c2.value),
            row(case, "translated", &grid, "c3", sc.c3.value),
        ])
    });

    // Verdicts from the growth over the last domain doubling.
    let last_growth = |rows: &[Row], case: &str, metric: &str, m: u32| -> f64 {
        let mut v: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.case == case && r.metric == metric && r.cell_exponent == m)
            .map(|r| (r.half_width, r.value))
            .collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        match v.len() {
            0 | 1 => f64::NAN,
            n => v[n - 1].1 / v[n - 2].1,
        }
    };
    let mut verdict_rows = Vec::new();
    let mut disagreements = 0;
    let mut finite: Vec<(u32, String)> = Vec::new();
    let l_max = ls.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for &m in &ms {
        let grid = match cfg.grid.with(l_max, m).build() {
            Ok(g) => g,
            Err(_) => continue,
        };
        for t in &cfg.triples {
            let gv = last_growth(&out.rows, &t.label, "vec", m);
            let gc = ["c1", "c2", "c3"]
                .iter()
                .map(|c| last_growth(&out.rows, &t.label, c, m))
                .fold(f64::NEG_INFINITY, f64::max);
            let dv = !(gv < th.divergence_growth);
            let dc = !(gc < th.divergence_growth);
            if dv != dc {
                disagreements += 1;
            }
            if !dv && !dc {
                finite.push((m, t.label.clone()));
            }
            verdict_rows.push(row(&t.label, "translated", &grid, "vec_growth", gv));
            verdict_rows.push(row(&t.label, "translated", &grid, "char_growth", gc));
            verdict_rows.push(row(&t.label, "translated", &grid, "vec_divergent", dv as u8 as f64));
            verdict_rows.push(row(&t.label, "translated", &grid, "char_divergent", dc as u8 as f64));
        }
    }
    out.rows.extend(verdict_rows);

    // Coupling constants over the finite members at the largest domain.
    let mut couplings: Vec<(f64, f64)> = Vec::new();
    for &m in &ms {
        let at = |case: &str, metric: &str| {
            out.rows
                .iter()
                .find(|r| r.case == case && r.metric == metric && r.cell_exponent == m && r.half_width == l_max)
                .map(|r| r.value)
        };
        let (mut a_emp, mut b_emp) = (0.0f64, 0.0f64);
        for (_, label) in finite.iter().filter(|f| f.0 == m) {
            if let (Some(v), Some(c1), Some(c2), Some(c3)) = (at(label, "vec"), at(label, "c1"), at(label, "c2"), at(label, "c3")) {
                a_emp = a_emp.max(v / (c1 * c2 * c3).powi(2));
                b_emp = b_emp.max(c1.max(c2).max(c3) / v.sqrt());
            }
        }
        if let Ok(grid) = cfg.grid.with(l_max, m).build() {
            out.rows.push(row("coupling", "translated", &grid, "A_emp", a_emp));
            out.rows.push(row("coupling", "translated", &grid, "B_emp", b_emp));
        }
        couplings.push((a_emp, b_emp));
    }
    out.assert("verdict-disagreements", disagreements as f64, Relation::AtMost, 0.0);
    let a: Vec<f64> = couplings.iter().map(|c| c.0).collect();
    let b: Vec<f64> = couplings.iter().map(|c| c.1).collect();
    out.assert("A_emp-change", max_change(&a), Relation::AtMost, th.coupling_change);
    out.assert("B_emp-change", max_change(&b), Relation::AtMost, th.coupling_change);
}

fn necessity(cfg: &ScenarioConfig, out: &mut Collector) {
    let th = &cfg.thresholds;
    let ls = domains(cfg);
    let jobs: Vec<(f64, f64)> = cfg
        .power_exponents
        .iter()
        .flat_map(|&a| ls.iter().map(move |&l| (a, l)))
        .collect();
    out.cases("job-", jobs.len(), |j| {
        let (a, l) = jobs[j];
        let grid = cfg.grid.with(l, cfg.grid.cell_exponent).build()?;
        let fams = translated_families(&grid);
        let spec = TripleSpec {
            label: power_label(a),
            w1: WeightSpec::Power { a },
            w2: WeightSpec::Constant { c: 1.0 },
            p1: ExponentSpec::Constant { p: 2.0 },
            p2: ExponentSpec::Constant { p: 2.0 },
        };
        let tr = build_triple(&spec, grid)?;
        let vec = vec_ap_constant(&tr.vw, &tr.p1, &tr.p2, &fams, &cfg.norm)?.value;
        let sig = necessity_ratio(&tr.vw, &tr.p1, &tr.p2, &fams, WitnessStrategy::Sigma, &cfg.norm)?.value;
        let inv = necessity_ratio(&tr.vw, &tr.p1, &tr.p2, &fams, WitnessStrategy::InverseWeight, &cfg.norm)?.value;
        Ok(vec![
            row(&spec.label, "translated", &grid, "vec", vec),
            row(&spec.label, "translated", &grid, "necessity", sig),
            row(&spec.label, "translated", &grid, "necessity_inverse_weight", inv),
        ])
    });

    let sign = |x: f64, y: f64| -> i32 {
        if (x - y).abs() <= 1e-9 * x.abs().max(y.abs()) {
            0
        } else if x > y {
            1
        } else {
            -1
        }
    };
    let at = |case: &str, metric: &str, l: f64| {
        out.rows
            .iter()
            .find(|r| r.case == case && r.metric == metric && r.half_width == l)
            .map(|r| r.value)
    };
    let mut disagreements = 0;
    for &l in &ls {
        let pts: Vec<(f64, f64)> = cfg
            .power_exponents
            .iter()
            .filter_map(|&a| Some((at(&power_label(a), "vec", l)?, at(&power_label(a), "necessity", l)?)))
            .collect();
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                if sign(pts[i].0, pts[j].0) * sign(pts[i].1, pts[j].1) < 0 {
                    disagreements += 1;
                }
            }
        }
    }
    // Hölder bounds every witness by the constant when exponents are fixed.
    let exceed = out
        .rows
        .iter()
        .filter(|r| r.metric == "necessity")
        .filter(|r| at(&r.case, "vec", r.half_width).is_none_or(|v| r.value > v * (1.0 + 1e-8)))
        .count();
    out.assert("rank-disagreements", disagreements as f64, Relation::AtMost, 0.0);
    out.assert("necessity-above-constant", exceed as f64, Relation::AtMost, 0.0);
    for &a in &cfg.divergent_power_exponents {
        for metric in ["vec", "necessity"] {
            let s = out.series(&power_label(a), metric, true);
            let g = factors(&s).into_iter().fold(f64::INFINITY, f64::min);
            out.assert(
                format!("{}: {metric}-min-growth-per-doubling", power_label(a)),
                g,
                Relation::AtLeast,
                th.necessity_growth,
            );
        }
    }
}

fn sufficiency(cfg: &ScenarioConfig, out: &mut Collector) {
    let ms = refinements(cfg);
    for t in &cfg.triples {
        for &m in &ms {
            let grid = match cfg.grid.with(cfg.grid.half_width, m).build() {
                Ok(g) => g,
                Err(e) => {
                    out.errors.push(format!("{}: {e}", t.label));
                    continue;
                }
            };
            let tr = match build_triple(t, grid) {
                Ok(tr) => tr,
                Err(e) => {
                    out.errors.push(format!("{}: {e}", t.label));
                    continue;
                }
            };
            let fam = [dyadic_family(&grid, Translate::ZERO)];
            let start = out.rows.len();
            out.cases(&format!("{}/m={m}/", t.label), cfg.cases, |i| {
                let p = combine(&tr.p1, &tr.p2)?;
                let (f1, f2) = test_pair(grid, &cfg.test_functions, cfg.seed, i)?;
                let b = bilinear_maximal(&f1, &f2, &fam)?;
                let num = weighted_norm(&b.result, &tr.vw.w, &p, &cfg.norm)?.value;
                let den = weighted_norm(&f1, &tr.vw.w1, &tr.p1, &cfg.norm)?.value
                    * weighted_norm(&f2, &tr.vw.w2, &tr.p2, &cfg.norm)?.value;
                let ratio = if den > 0.0 { num / den } else { 0.0 };
                Ok(vec![row(format!("{}/{i}", t.label), "t0", &grid, "ratio", ratio)])
            });
            let worst = out.rows[start..]
                .iter()
                .map(|r| if r.value.is_nan() { f64::INFINITY } else { r.value })
                .fold(0.0, f64::max);
            out.rows.push(row(&t.label, "t0", &grid, "max_ratio", worst));
        }
        let s = out.series(&t.label, "max_ratio", false);
        out.assert(
            format!("{}: max-ratio-change-per-refinement", t.label),
            max_change(&s),
            Relation::AtMost,
            cfg.thresholds.sufficiency_change,
        );
    }
}

// ------------------------------------------------------------------ czd

fn czd_verify(cfg: &ScenarioConfig, out: &mut Collector) {
    let grid = match cfg.grid.build() {
        Ok(g) => g,
        Err(e) => return out.errors.push(format!("grid: {e}")),
    };
    let a = cfg.czd.base.unwrap_or_else(|| default_base(grid.dim()));
    let unit = TripleSpec::power("unweighted", 0.0, 0.0, 2.0, 2.0);
    let tr = match build_triple(cfg.triples.first().unwrap_or(&unit), grid) {
        Ok(tr) => tr,
        Err(e) => return out.errors.push(format!("triple: {e}")),
    };
    let fam = dyadic_family(&grid, Translate::ZERO);
    let floor = 1.0 - 2f64.powi(grid.dim() as i32) / a.sqrt();
    out.cases("case-", cfg.cases, |i| {
        let (f1, f2) = test_pair(grid, &cfg.test_functions, cfg.seed, i)?;
        let h = split(&f1, &f2)?;
        let g1 = h.h1.mul(tr.vw.sigma1.samples())?;
        let g2 = h.h3.mul(tr.vw.sigma2.samples())?;
        let case = format!("case-{i}");
        if g1.max_abs() == 0.0 || g2.max_abs() == 0.0 {
            return Ok(vec![row(&case, "t0", &grid, "cubes", 0.0)]);
        }
        let d = cz_decompose(&g1, &g2, a, &fam)?;
        let chk = d.check();
        let violations = [
            chk.nesting,
            chk.coverage,
            chk.disjoint_cubes,
            chk.sandwich,
            chk.maximality,
            chk.e_disjoint,
        ]
        .iter()
        .filter(|ok| !**ok)
        .count();
        Ok(vec![
            row(&case, "t0", &grid, "cubes", d.cube_count() as f64),
            row(&case, "t0", &grid, "interior_cubes", chk.interior_cubes as f64),
            row(&case, "t0", &grid, "structural_violations", violations as f64),
            row(&case, "t0", &grid, "min_density", chk.min_density),
        ])
    });
    out.rows.push(row("provable", "t0", &grid, "density_floor", floor));
    let min_density = out.select("min_density").map(|r| r.value).fold(1.0, f64::min);
    out.assert("structural-violations", out.sum("structural_violations"), Relation::AtMost, 0.0);
    out.assert("non-trivial-cases", out.sum("interior_cubes").min(1.0), Relation::AtLeast, 1.0);
    out.assert("min-density-provable", min_density, Relation::AtLeast, floor);
    out.assert("min-density", min_density, Relation::AtLeast, cfg.thresholds.czd_alpha);
}

fn one_third(cfg: &ScenarioConfig, out: &mut Collector) {
    for &m in &refinements(cfg) {
        let grid = match cfg.grid.with(cfg.grid.half_width, m).build() {
            Ok(g) => g,
            Err(e) => {
                out.errors.push(format!("m={m}: {e}"));
                continue;
            }
        };
        let start = out.rows.len();
        out.cases(&format!("m={m}/case-"), cfg.cases, |i| {
            let (f1, f2) = test_pair(grid, &cfg.test_functions, cfg.seed, i)?;
            let d = one_third_domination(&f1, &f2)?;
            Ok(vec![row(format!("case-{i}"), "translated", &grid, "constant", d.constant)])
        });
        let worst = out.rows[start..].iter().map(|r| r.value).fold(0.0, f64::max);
        out.rows.push(row("max", "translated", &grid, "max_constant", worst));
        let constant = (|| {
            let one = SampledFunction::constant(grid, 1.0)?;
            let d = one_third_domination(&one, &one)?;
            let expected = 2f64.powi(-(grid.dim() as i32));
            Ok(vec![row("constant-input", "translated", &grid, "constant_input_error", (d.constant - expected).abs())])
        })();
        out.absorb(&format!("m={m}/constant-input"), constant);
    }
    let s = out.series("max", "max_constant", false);
    out.assert("max-constant-change", max_change(&s), Relation::AtMost, cfg.thresholds.one_third_change);
    out.assert("constant-input-error", out.max("constant_input_error"), Relation::AtMost, 0.0);
}

// ------------------------------------------------------------------ sio

fn sio_domination(cfg: &ScenarioConfig, out: &mut Collector) {
    let th = &cfg.thresholds;
    let sc = &cfg.sio;
    let sio = SioConfig {
        exclusion: sc.exclusion,
        truncation: sc.truncation,
    };
    let grid = match cfg.grid.build() {
        Ok(g) => g,
        Err(e) => return out.errors.push(format!("grid: {e}")),
    };
    let dim = grid.dim();
    let kernel = match kernel_by_name(&sc.kernel, dim, sc.bump_radius) {
        Ok(k) => k,
        Err(e) => return out.errors.push(format!("sio.kernel: {e}")),
    };
    let bump = BumpKernel {
        dim,
        radius: sc.bump_radius,
    };

    let bounds = (|| {
        let s = grid_sampling(&grid, sc.kernel_samples, cfg.seed);
        let r = check_kernel_bounds(kernel.as_ref(), &s)?;
        let mut rows = vec![
            row(kernel.name(), "-", &grid, "size_ratio", r.size_ratio),
            row(kernel.name(), "-", &grid, "smoothness_ratio", r.smoothness_ratio),
            row(kernel.name(), "-", &grid, "bounds_fail", (!r.pass) as u8 as f64),
        ];
        if dim == 1 {
            let bad = check_kernel_bounds(&SingularTestKernel, &s)?;
            rows.push(row("singular", "-", &grid, "singular_accepted", bad.pass as u8 as f64));
        }
        Ok(rows)
    })();
    out.absorb("kernel-bounds", bounds);

    // K = phi(x - y) phi(x - z) factors into two linear convolutions.
    let factorization = (|| {
        let (f1, f2) = test_pair(grid, &cfg.test_functions, cfg.seed, 0)?;
        let t = apply_bilinear_sio(&bump, &f1, &f2, &sio)?;
        let eps = sio.exclusion * grid.cell_side() * (dim as f64).sqrt() * (1.0 - 1e-6);
        let reach = sio.truncation.unwrap_or(f64::INFINITY).min(sc.bump_radius);
        let conv = |f: &SampledFunction, x: usize| -> f64 {
            (0..grid.cell_count())
                .map(|y| {
                    let d = grid.distance(x, y);
                    if d >= eps && d < reach {
                        bump.phi(d) * f.get(y) * grid.cell_volume()
                    } else {
                        0.0
                    }
                })
                .sum()
        };
        let oracle: Vec<f64> = (0..grid.cell_count()).map(|x| conv(&f1, x) * conv(&f2, x)).collect();
        let scale = oracle.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        let err = t
            .values()
            .iter()
            .zip(&oracle)
            .map(|(a, b)| (a - b).abs() / scale)
            .fold(0.0, f64::max);
        Ok(vec![row("bump", "-", &grid, "factorization_error", err)])
    })();
    out.absorb("factorization", factorization);

    for &m in &refinements(cfg) {
        let r = (|| {
            let g = cfg.grid.with(cfg.grid.half_width, m).build()?;
            let unit = SampledFunction::indicator(g, |x| x[..dim].iter().all(|v| (0.0..1.0).contains(v)));
            let d = sharp_domination_test(kernel.as_ref(), &unit, &unit, sc.delta, sc.floor, &sio)?;
            Ok(vec![row("unit-cube", "-", &g, "sharp_constant", d.constant)])
        })();
        out.absorb(&format!("sharp/m={m}"), r);
    }

    let indicators = super::config::TestFunctionSpec {
        kind: TestFunctionKind::Indicators,
        ..cfg.test_functions
    };
    out.cases("trial-", sc.trials, |i| {
        let (f1, f2) = test_pair(grid, &indicators, cfg.seed, i)?;
        let d = sharp_domination_test(&bump, &f1, &f2, sc.delta, sc.floor, &sio)?;
        Ok(vec![row(format!("trial-{i}"), "-", &grid, "trial_constant", d.constant)])
    });

    if let Some(t) = cfg.triples.first() {
        for &m in &refinements(cfg) {
            let g = match cfg.grid.with(cfg.grid.half_width, m).build() {
                Ok(g) => g,
                Err(e) => {
                    out.errors.push(format!("weighted/m={m}: {e}"));
                    continue;
                }
            };
            let tr = match build_triple(t, g) {
                Ok(tr) => tr,
                Err(e) => {
                    out.errors.push(format!("weighted/m={m}: {e}"));
                    continue;
                }
            };
            let k = kernel.as_ref();
            out.cases(&format!("weighted/m={m}/"), cfg.cases, |i| {
                let (f1, f2) = test_pair(g, &cfg.test_functions, cfg.seed, i)?;
                let r = weighted_sio_ratio(k, &f1, &f2, &tr.vw, &tr.p1, &tr.p2, &sio, &cfg.norm)?;
                Ok(vec![row(format!("{}/{i}", t.label), "-", &g, "weighted_ratio", r)])
            });
        }
    }

    out.assert("kernel-bounds-violated", out.max("bounds_fail"), Relation::AtMost, 0.0);
    if dim == 1 {
        out.assert("singular-kernel-accepted", out.max("singular_accepted"), Relation::AtMost, 0.0);
    }
    out.assert("factorization-error", out.max("factorization_error"), Relation::AtMost, th.factorization_error);
    let s = out.series("unit-cube", "sharp_constant", false);
    out.assert("sharp-constant-change", max_change(&s), Relation::AtMost, th.sharp_change);
    out.assert("max-trial-constant", out.max("trial_constant"), Relation::AtMost, th.sharp_trial_bound);
    if !cfg.triples.is_empty() {
        out.assert("max-weighted-ratio", out.max("weighted_ratio"), Relation::AtMost, th.weighted_sio_bound);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(s: Scenario) -> ScenarioConfig {
        let mut c = ScenarioConfig::default_for(s);
        c.cases = c.cases.min(3);
        c
    }

    #[test]
    fn exact_scenarios_pass_on_small_runs() {
        for s in [Scenario::NormSanity, Scenario::NormLemmas, Scenario::Holder, Scenario::Pointwise] {
            let r = run_scenario(&small(s)).unwrap();
            assert!(r.pass, "{}", r.render());
            assert!(!r.rows.is_empty());
        }
    }

    #[test]
    fn reports_are_deterministic() {
        let c = small(Scenario::OneThird);
        assert_eq!(run_scenario(&c).unwrap(), run_scenario(&c).unwrap());
    }

    #[test]
    fn case_errors_fail_the_report() {
        let mut c = small(Scenario::Holder);
        c.exponents = vec![ExponentSpec::Constant { p: 0.8 }];
        let r = run_scenario(&c).unwrap();
        assert!(!r.pass);
        assert_eq!(r.errors.len(), 3);
        assert!(!r.assertion("case-errors").unwrap().pass);
    }

    #[test]
    fn max_change_flags_non_finite_series() {
        assert_eq!(max_change(&[1.0, 1.1]), 0.10000000000000009);
        assert!(max_change(&[1.0, f64::INFINITY]).is_infinite());
    }
}
