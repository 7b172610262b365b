use std::fs;
use std::path::Path;

use vlab_core::catalog::{self, CatalogEntry};
use vlab_core::designs::{self, Strength};
use vlab_core::enumerate::{self, EnumOptions, LayersJson};
use vlab_core::extremality::{self, ClassifyOptions, ExtremalityClass};
use vlab_core::invariants::{self, GroupGenSet};
use vlab_core::linalg::{EchelonBasis, RatMatrix};
use vlab_core::rat::{self, JsonRat, Rat};
use vlab_core::spaces::{self, Point, SpaceDescriptor};
use vlab_core::zeta;
use vlab_core::{Error, QForm, Result};

use crate::args::{CheckArg, Command, Common, FormSource, SpaceArg, SpaceArgs};
use crate::report::{Analysis, CatalogSummary, DesignLayer, InputDescriptor, Report, SpaceJson};

/// Largest box the brute-force oracle may scan during layer verification.
const VERIFY_BOX_LIMIT: u64 = 5_000_000;

pub struct Ctx {
    pub opts: EnumOptions,
    pub verify: bool,
}

impl Ctx {
    pub fn new(c: &Common) -> Self {
        let mut opts = EnumOptions::default();
        if let Some(b) = c.node_budget {
            opts.node_budget = b;
        }
        Ctx { opts, verify: c.verify }
    }
}

struct Loaded {
    form: QForm,
    entry: Option<CatalogEntry>,
    input: InputDescriptor,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn load(src: &FormSource) -> Result<Loaded> {
    load_parts(src.catalog.as_deref(), src.file.as_deref())
}

fn load_parts(catalog_name: Option<&str>, file: Option<&Path>) -> Result<Loaded> {
    if let Some(name) = catalog_name {
        let entry = catalog::lookup(name)?;
        let form = entry.form.clone();
        let input = InputDescriptor { source: "catalog".into(), name: Some(entry.name.clone()), form: form.to_json() };
        return Ok(Loaded { form, entry: Some(entry), input });
    }
    let path = file.ok_or_else(|| Error::InvalidArgument("give --catalog or --file".into()))?;
    let form = QForm::parse_json(&read(path)?)?;
    let input = InputDescriptor { source: "file".into(), name: form.name().map(String::from), form: form.to_json() };
    Ok(Loaded { form, entry: None, input })
}

fn parse_bound(s: &str) -> Result<Rat> {
    let b = rat::parse(s)?;
    if b <= rat::zero() {
        return Err(Error::InvalidArgument("bound must be positive".into()));
    }
    Ok(b)
}

fn generators(loaded: &Loaded, path: Option<&Path>) -> Result<GroupGenSet> {
    let mut set = match path {
        Some(p) => GroupGenSet::parse_json(&read(p)?)?,
        None => {
            let gens = loaded.entry.as_ref().and_then(|e| e.generators.clone()).ok_or_else(|| {
                Error::InvalidArgument("no generators: pass --generators or use a catalog lattice that has them".into())
            })?;
            GroupGenSet::new(loaded.form.dim(), gens)
        }
    };
    set.check(&loaded.form)?;
    Ok(set)
}

pub fn execute(cmd: &Command, ctx: &Ctx) -> Result<Report> {
    match cmd {
        Command::Minvec { form } => {
            let l = load(form)?;
            let layer = enumerate::minimal_vectors_with(&l.form, ctx.opts)?;
            let mut r = Report::new("minvec", Some(l.input));
            r.analyses.push(Analysis::Layers { layers: LayersJson::from_layers(&[layer]) });
            finish(r, &l.form, ctx)
        }
        Command::Layers { form, bound } => {
            let l = load(form)?;
            let layers = enumerate::vectors_up_to_with(&l.form, &parse_bound(bound)?, ctx.opts)?;
            let mut r = Report::new("layers", Some(l.input));
            r.analyses.push(Analysis::Layers { layers: LayersJson::from_layers(&layers) });
            finish(r, &l.form, ctx)
        }
        Command::Extremality { form, space, subset_limit } => {
            let l = load(form)?;
            let s = build_space(&l, space, ctx)?;
            let mut r = Report::new("extremality", Some(l.input.clone()));
            r.analyses.push(extremality_analysis(&s, *subset_limit)?);
            finish(r, &l.form, ctx)
        }
        Command::DualExtreme { form, subset_limit } => {
            let l = load(form)?;
            let s = spaces::duality_product_space(&l.form, ctx.opts)?;
            let mut r = Report::new("dual-extreme", Some(l.input.clone()));
            r.analyses.push(extremality_analysis(&s, *subset_limit)?);
            finish(r, &l.form, ctx)
        }
        Command::Design { form, strength, bound, m, samples, seed } => {
            let l = load(form)?;
            let strength = Strength::parse(strength)?;
            let mut r = Report::new("design", Some(l.input.clone()));
            if *m > 1 {
                let b = match bound {
                    Some(b) => parse_bound(b)?,
                    None => enumerate::minimum(&l.form)?,
                };
                let s = spaces::exterior_power_space(&l.form, *m, &b, ctx.opts)?;
                let result = designs::monte_carlo_design(&l.form, &s, strength, *samples, *seed)?;
                r.analyses.push(Analysis::MonteCarloDesign { space: SpaceJson::from_space(&s), result });
            } else {
                let layers = match bound {
                    Some(b) => enumerate::vectors_up_to_with(&l.form, &parse_bound(b)?, ctx.opts)?,
                    None => vec![enumerate::minimal_vectors_with(&l.form, ctx.opts)?],
                };
                r.analyses.push(design_analysis(&l.form, &layers, strength)?);
            }
            finish(r, &l.form, ctx)
        }
        Command::Zeta { form, s, bound, check, probe, directions, step, seed } => {
            let l = load(form)?;
            let bound = parse_bound(bound)?;
            let mut r = Report::new("zeta", Some(l.input.clone()));
            match check {
                Some(CheckArg::Delone) => {
                    r.analyses.push(Analysis::ZetaCheck { result: zeta::delone_ryshkov_check_with(&l.form, &bound, ctx.opts)? })
                }
                Some(CheckArg::Coulangeon) => {
                    r.analyses.push(Analysis::ZetaCheck { result: zeta::coulangeon_check_with(&l.form, &bound, ctx.opts)? })
                }
                None => {
                    let s = s.ok_or_else(|| Error::InvalidArgument("--s is required".into()))?;
                    if *probe {
                        let result = zeta::zeta_local_probe(&l.form, s, *directions, *step, *seed, &bound)?;
                        r.analyses.push(Analysis::Probe { result });
                    } else {
                        r.analyses.push(Analysis::Zeta { result: zeta::zeta_direct_with(&l.form, s, &bound, ctx.opts)? });
                    }
                }
            }
            finish(r, &l.form, ctx)
        }
        Command::Invariant { form, generators: path } => {
            let l = load(form)?;
            let g = generators(&l, path.as_deref())?;
            let result = invariants::invariance_criterion(&g)?;
            let mut r = Report::new("invariant", Some(l.input.clone()));
            r.analyses.push(Analysis::Invariance { generators: g, result });
            finish(r, &l.form, ctx)
        }
        Command::Rankin { form, m, bound } => {
            let l = load(form)?;
            let b = match bound {
                Some(b) => parse_bound(b)?,
                None => enumerate::minimum(&l.form)?,
            };
            let result = spaces::rankin_invariant(&l.form, *m, &b, ctx.opts)?;
            let mut r = Report::new("rankin", Some(l.input.clone()));
            r.analyses.push(Analysis::Rankin { result });
            Ok(r)
        }
        Command::Catalog => {
            let mut r = Report::new("catalog", None);
            r.analyses.push(Analysis::Catalog { entries: catalog::all().iter().map(CatalogSummary::new).collect() });
            Ok(r)
        }
        Command::Report { input: Some(path), .. } => {
            let mut r: Report = serde_json::from_str(&read(path)?).map_err(|e| Error::Parse(e.to_string()))?;
            if ctx.verify {
                let i = r.input.as_ref().ok_or_else(|| Error::Parse("report has no input form to verify against".into()))?;
                let form = QForm::from_json(&i.form)?;
                r.verified = Some(verify_report(&r, &form)?);
            }
            Ok(r)
        }
        Command::Report { input: None, catalog: c, file } => {
            let l = load_parts(c.as_deref(), file.as_deref())?;
            let mut r = Report::new("report", Some(l.input.clone()));
            let min = enumerate::minimal_vectors_with(&l.form, ctx.opts)?;
            r.analyses.push(Analysis::Layers { layers: LayersJson::from_layers(std::slice::from_ref(&min)) });
            let s = spaces::classic_space_from_layer(&l.form, &min)?;
            r.analyses.push(extremality_analysis(&s, extremality::DEFAULT_SUBSET_SEARCH_LIMIT)?);
            r.analyses.push(design_analysis(&l.form, std::slice::from_ref(&min), Strength::Four)?);
            if l.entry.as_ref().is_some_and(|e| e.generators.is_some()) {
                let g = generators(&l, None)?;
                let result = invariants::invariance_criterion(&g)?;
                r.analyses.push(Analysis::Invariance { generators: g, result });
            }
            finish(r, &l.form, ctx)
        }
    }
}

fn finish(mut r: Report, form: &QForm, ctx: &Ctx) -> Result<Report> {
    if ctx.verify {
        r.verified = Some(verify_report(&r, form)?);
    }
    Ok(r)
}

fn build_space(l: &Loaded, a: &SpaceArgs, ctx: &Ctx) -> Result<SpaceDescriptor> {
    let q = &l.form;
    let minimal_points = || -> Result<Vec<Point>> {
        Ok(SpaceDescriptor::points_from_layer(&enumerate::minimal_vectors_with(q, ctx.opts)?))
    };
    match a.space {
        SpaceArg::Classic => spaces::classic_space(q, minimal_points()?),
        SpaceArg::Invariant => {
            let g = generators(l, a.generators.as_deref())?;
            spaces::invariant_family_space(q, minimal_points()?, &g.generators)
        }
        SpaceArg::Isodual => {
            let path = a.sigma.as_deref().ok_or_else(|| Error::InvalidArgument("--sigma is required for the isodual family".into()))?;
            let sigma: RatMatrix = serde_json::from_str(&read(path)?).map_err(|e| Error::Parse(e.to_string()))?;
            spaces::isodual_family_space(q, minimal_points()?, &sigma)
        }
        SpaceArg::DualProduct => spaces::duality_product_space(q, ctx.opts),
        SpaceArg::Exterior => {
            let b = match &a.bound {
                Some(b) => parse_bound(b)?,
                None => enumerate::minimum(q)?,
            };
            spaces::exterior_power_space(q, a.m, &b, ctx.opts)
        }
    }
}

fn extremality_analysis(s: &SpaceDescriptor, subset_limit: usize) -> Result<Analysis> {
    let result = extremality::classify_extremality(s, ClassifyOptions { subset_search_limit: subset_limit })?;
    Ok(Analysis::Extremality { space: SpaceJson::from_space(s), result })
}

fn design_analysis(q: &QForm, layers: &[vlab_core::Layer], strength: Strength) -> Result<Analysis> {
    let mut out = Vec::new();
    for l in layers {
        let verdict = designs::test_design(&spaces::classic_space_from_layer(q, l)?, strength, None)?;
        out.push(DesignLayer { radius: JsonRat(l.radius.clone()), vectors: l.vectors.clone(), verdict });
    }
    let all_hold = out.iter().all(|l| l.verdict.holds);
    Ok(Analysis::Design { strength, layers: out, all_hold })
}

/// Replays every certificate in the report against `form`.
pub fn verify_report(r: &Report, form: &QForm) -> Result<bool> {
    let mut ok = true;
    for a in &r.analyses {
        ok &= match a {
            Analysis::Layers { layers } => verify_layers(form, layers)?,
            Analysis::Extremality { space, result } => {
                let s = space.to_space()?;
                let consistent = match result.verdict {
                    ExtremalityClass::StrictlyExtreme => result.eutaxy.eutactic && result.perfection.perfect,
                    ExtremalityClass::Extreme => {
                        result.eutaxy.eutactic && result.perfection.weakly_perfect
                            || result.subset_search.as_ref().is_some_and(|x| x.witness.is_some())
                    }
                    ExtremalityClass::NotExtreme => {
                        !(result.eutaxy.eutactic && result.perfection.weakly_perfect)
                            && result.subset_search.as_ref().is_some_and(|x| x.exhaustive && x.witness.is_none())
                    }
                    ExtremalityClass::Inconclusive => true,
                };
                consistent && extremality::verify_eutaxy(&s, &result.eutaxy)? && extremality::verify_perfection(&s, &result.perfection)?
            }
            Analysis::Design { layers, all_hold, .. } => {
                let mut good = *all_hold == layers.iter().all(|l| l.verdict.holds);
                for l in layers {
                    let points = l.vectors.iter().map(|c| Point::new(form, c.clone())).collect::<Result<Vec<_>>>()?;
                    good &= points.iter().all(|p| p.value == l.radius.0);
                    good &= designs::verify_design(&spaces::classic_space(form, points)?, &l.verdict)?;
                }
                good
            }
            Analysis::MonteCarloDesign { space, result } => {
                let s = space.to_space()?;
                designs::monte_carlo_design(form, &s, result.strength, result.samples, result.seed)? == *result
            }
            Analysis::Invariance { generators, result } => {
                let mut g = generators.clone();
                g.check(form)?;
                verify_invariants(&g, 2, &result.invariants_2)? && verify_invariants(&g, 4, &result.invariants_4)?
            }
            Analysis::ZetaCheck { result } => verify_zeta_check(form, result)?,
            Analysis::Zeta { .. } | Analysis::Probe { .. } | Analysis::Rankin { .. } | Analysis::Catalog { .. } => true,
        };
    }
    Ok(ok)
}

fn verify_layers(form: &QForm, layers: &LayersJson) -> Result<bool> {
    let parsed = match layers.to_layers(form) {
        Ok(l) => l,
        Err(_) => return Ok(false),
    };
    let Some(last) = parsed.last() else { return Ok(true) };
    match enumerate::brute_force_oracle_with_limit(form, &last.radius, VERIFY_BOX_LIMIT) {
        Ok(oracle) => {
            // The stored layers must be exactly the oracle layers at those radii.
            let mut good = true;
            for l in &parsed {
                let mut mine = l.vectors.clone();
                mine.sort();
                good &= oracle.iter().find(|o| o.radius == l.radius).is_some_and(|o| {
                    let mut theirs = o.vectors.clone();
                    theirs.sort();
                    theirs == mine
                });
            }
            Ok(good)
        }
        Err(e) if e.is_resource() => Ok(true),
        Err(e) => Err(e),
    }
}

/// Each listed invariant is fixed by every generator, and the rows of the
/// actions leave no room for further invariants.
fn verify_invariants(g: &GroupGenSet, d: usize, basis: &[Vec<Rat>]) -> Result<bool> {
    let size = invariants::monomials(g.dim, d).len();
    let actions = g.generators.iter().map(|m| invariants::sym_power_action(m, d)).collect::<Result<Vec<_>>>()?;
    for v in basis {
        for a in &actions {
            if a.mul_vec(v)? != *v {
                return Ok(false);
            }
        }
    }
    if vlab_core::linalg::rank_of(basis) != basis.len() {
        return Ok(false);
    }
    let target = size - basis.len();
    let mut ech = EchelonBasis::new(size);
    for a in &actions {
        let diff = a.sub(&RatMatrix::identity(size));
        for r in 0..size {
            if ech.rank() == target {
                return Ok(true);
            }
            ech.insert(diff.row(r));
        }
    }
    Ok(ech.rank() == target)
}

fn verify_zeta_check(form: &QForm, v: &zeta::ZetaVerdict) -> Result<bool> {
    let layers = enumerate::vectors_up_to(form, &v.certified_bound)?;
    let first_fail = match v.kind {
        zeta::CheckKind::Coulangeon => {
            let mut fail = None;
            for l in &layers {
                let s = spaces::classic_space_from_layer(form, l)?;
                let d = designs::test_design(&s, Strength::Four, None)?;
                if !designs::verify_design(&s, &d)? {
                    return Ok(false);
                }
                if !d.holds {
                    fail = Some(l.radius.clone());
                    break;
                }
            }
            fail
        }
        zeta::CheckKind::DeloneRyshkov => {
            let first = &layers[0];
            let s = spaces::classic_space_from_layer(form, first)?;
            let p = extremality::test_perfection(&s)?;
            if !extremality::verify_perfection(&s, &p)? {
                return Ok(false);
            }
            if !p.perfect {
                Some(first.radius.clone())
            } else {
                let mut fail = None;
                for l in &layers {
                    let s = spaces::classic_space_from_layer(form, l)?;
                    let e = extremality::test_eutaxy(&s)?;
                    if !extremality::verify_eutaxy(&s, &e)? {
                        return Ok(false);
                    }
                    if !e.strongly_eutactic {
                        fail = Some(l.radius.clone());
                        break;
                    }
                }
                fail
            }
        }
    };
    Ok(first_fail == v.failing_layer && v.holds_to_bound == first_fail.is_none())
}
