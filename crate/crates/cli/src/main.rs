//! Command-line surface for the external-angle library: exact membership
//! tests, opening tables, interval hierarchies, the angle function and its
//! inverse, tuning, dimension reports, ray tracing, and figure emitters.
//!
//! Exit codes: 0 success, 1 domain error, 2 usage error. Data goes to
//! stdout, logs to stderr; outputs are byte-deterministic for fixed inputs.

mod svg;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use realrays::angle::{Angle, BinaryWord};
use realrays::biaccess::{dim_report, s_c_membership, ComponentTable};
use realrays::kneading::{
    nonrecurrence_depth, parabolic_locate, pi, tau, RealParam, DEFAULT_PREC,
};
use realrays::ksigma::{boxdim_estimate, build_level, dim_lower_bound, verify_structure, SigmaParam};
use realrays::raytrace::{escape_time_image, trace_ray, verify_landing, verify_landing_at};
use realrays::realslice::{
    boxcount_dimension, cover_r, enumerate_openings, in_r, in_r_depth, openings_length_sum,
    DepthOutcome,
};
use realrays::tuning::{words_from_opening, TuneImage};
use realrays::{parse_decimal, rat_to_f64, Rat};

#[derive(Parser)]
#[command(
    name = "realrays",
    about = "Exact combinatorics of external angles for real quadratic polynomials",
    version
)]
struct Cli {
    /// Worker threads for parallel enumeration (output order is canonical
    /// regardless).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Seed for randomized sampling subcommands; deterministic outputs
    /// either way.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Decide membership of an angle in the real-ray angle set.
    InR(InRArgs),
    /// Enumerate openings of real hyperbolic components (JSON lines).
    Openings {
        #[arg(long, value_parser = parse_period)]
        max_period: u32,
        /// json | csv | svg
        #[arg(long, default_value = "json")]
        format: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact sum of opening lengths up to a period bound.
    OpeningSum {
        #[arg(long, value_parser = parse_period)]
        max_period: u32,
    },
    /// Closed complementary cover of the real-ray angle set (CSV).
    Cover {
        #[arg(long, value_parser = parse_period)]
        max_period: u32,
        /// Also fit a box-count slope over these generations, `lo..hi`.
        #[arg(long)]
        scales: Option<String>,
    },
    /// Build one level of the interval hierarchy (CSV).
    KsigmaBuild {
        #[command(flatten)]
        sigma: SigmaArgs,
        #[arg(long)]
        level: u32,
    },
    /// Mechanized check of the hierarchy's structure clauses (JSON).
    KsigmaVerify {
        /// Dyadic exponent: sigma = 2^-p.
        #[arg(long)]
        p: u32,
        #[arg(long, default_value_t = 10)]
        max_level: u32,
    },
    /// Interval-count dimension estimate and the closed-form lower bound.
    KsigmaDim {
        #[command(flatten)]
        sigma: SigmaArgs,
        #[arg(long, default_value_t = 6)]
        lo: u32,
        #[arg(long, default_value_t = 16)]
        hi: u32,
    },
    /// Angle word of a real parameter from its certified itinerary.
    Tau {
        /// Decimal parameter in [-2, 0.25].
        #[arg(long, allow_hyphen_values = true, value_parser = parse_c)]
        c: Rat,
        #[arg(long, default_value_t = 32)]
        bits: usize,
    },
    /// Invert the angle function: locate the landing parameter of an angle.
    Pi {
        #[arg(long, value_parser = parse_angle)]
        t: Angle,
        /// Decimal tolerance, e.g. 1e-10.
        #[arg(long, default_value = "1e-10", value_parser = parse_tol)]
        tol: Rat,
    },
    /// Certified minimum distance of the critical orbit to the origin.
    Nonrec {
        #[arg(long, allow_hyphen_values = true, value_parser = parse_c)]
        c: Rat,
        #[arg(long, default_value_t = 100)]
        steps: usize,
    },
    /// Tune an angle through a component's substitution words.
    Tune {
        #[arg(long)]
        p: u32,
        #[arg(long)]
        n: u64,
        #[arg(long, value_parser = parse_angle)]
        t: Angle,
    },
    /// Staircase inverse of the tuning substitution.
    Psi {
        #[arg(long)]
        p: u32,
        #[arg(long)]
        n: u64,
        #[arg(long, value_parser = parse_angle)]
        s: Angle,
    },
    /// Box-count slope of the tuned invariant set (expected 1/p).
    CantorDim {
        #[arg(long)]
        p: u32,
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 0)]
        depth: u32,
        /// Estimate the tuned cover of the real-ray set instead, at this
        /// period bound.
        #[arg(long)]
        cover_period: Option<u32>,
    },
    /// Membership of an angle in the spine-landing set for a given angle
    /// parameter.
    #[command(name = "s-c")]
    SC {
        #[arg(long, value_parser = parse_angle)]
        t: Option<Angle>,
        #[arg(long, value_parser = parse_angle)]
        tau_c: Angle,
        /// Sample this many random angles instead of --t.
        #[arg(long)]
        random: Option<usize>,
        #[arg(long, default_value_t = 1000)]
        den_max: u64,
    },
    /// Dimension-bound report for one parameter or a sweep (CSV).
    DimReport {
        #[arg(long, allow_hyphen_values = true, value_parser = parse_c)]
        c: Option<Rat>,
        /// Sweep: lo hi steps (decimals).
        #[arg(long, num_args = 3, allow_hyphen_values = true)]
        sweep: Option<Vec<String>>,
        /// Period bound of the component table used for locating parameters.
        #[arg(long, default_value_t = 4)]
        table_period: u32,
    },
    /// Trace a dynamic ray by inverse iteration (CSV of points).
    TraceRay {
        #[arg(long, allow_hyphen_values = true, value_parser = parse_c)]
        c: Rat,
        #[arg(long, value_parser = parse_angle)]
        t: Angle,
        #[arg(long, default_value_t = 40)]
        depth: usize,
        #[arg(long, default_value_t = 100.0)]
        r0: f64,
        /// csv | svg | ppm
        #[arg(long, default_value = "csv")]
        format: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Verify that the ray at the parameter's angle lands at its target.
    VerifyLanding {
        #[arg(long, allow_hyphen_values = true, value_parser = parse_c)]
        c: Option<Rat>,
        #[arg(long, default_value_t = 60)]
        bits: usize,
        #[arg(long, default_value_t = 40)]
        depth: usize,
        /// Parabolic route: use the root of the opening with this angle.
        #[arg(long, value_parser = parse_angle)]
        root_angle: Option<Angle>,
    },
    /// Regenerate the standard figures into a directory.
    Figures {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct InRArgs {
    /// Exact rational angle num/den.
    #[arg(long, value_parser = parse_angle)]
    t: Option<Angle>,
    /// High-precision binary word (0/1 string) for the finite-depth test.
    #[arg(long)]
    word: Option<String>,
    #[arg(long, default_value_t = 32)]
    depth: usize,
}

#[derive(Args)]
struct SigmaArgs {
    /// Dyadic exponent: sigma = 2^-p.
    #[arg(long)]
    p: Option<u32>,
    /// General rational sigma, num/den.
    #[arg(long)]
    sigma: Option<String>,
}

impl SigmaArgs {
    fn build(&self) -> Result<SigmaParam, String> {
        match (self.p, &self.sigma) {
            (Some(p), None) => {
                if p < 2 {
                    Err("dyadic exponent must be >= 2".into())
                } else {
                    Ok(SigmaParam::dyadic(p))
                }
            }
            (None, Some(s)) => {
                let r = parse_rat(s)?;
                SigmaParam::rational(r).map_err(|e| e.to_string())
            }
            _ => Err("specify exactly one of --p or --sigma".into()),
        }
    }
}

fn parse_angle(s: &str) -> Result<Angle, String> {
    s.parse::<Angle>().map_err(|e| e.to_string())
}

fn parse_rat(s: &str) -> Result<Rat, String> {
    let a: Angle = s.parse().map_err(|_| format!("not a rational: {}", s))?;
    let _ = &a;
    // angles normalize mod 1; re-parse as a plain fraction
    let (n, d) = s
        .split_once('/')
        .ok_or_else(|| format!("expected num/den: {}", s))?;
    let n: realrays::Int = n.trim().parse().map_err(|_| "bad numerator".to_string())?;
    let d: realrays::Int = d.trim().parse().map_err(|_| "bad denominator".to_string())?;
    Ok(Rat::new(n, d))
}

fn parse_c(s: &str) -> Result<Rat, String> {
    let v = parse_decimal(s).ok_or_else(|| format!("expected a decimal parameter: {}", s))?;
    Ok(v)
}

fn parse_tol(s: &str) -> Result<Rat, String> {
    // accept 1e-10 style and plain decimals
    if let Some(v) = parse_decimal(s) {
        return Ok(v);
    }
    let (m, e) = s
        .split_once(['e', 'E'])
        .ok_or_else(|| format!("bad tolerance: {}", s))?;
    let mantissa = parse_decimal(m).ok_or("bad tolerance mantissa")?;
    let exp: i32 = e.parse().map_err(|_| "bad tolerance exponent")?;
    let ten = Rat::new(10.into(), 1.into());
    let mut v = mantissa;
    if exp >= 0 {
        for _ in 0..exp {
            v = v * &ten;
        }
    } else {
        for _ in 0..(-exp) {
            v = v / &ten;
        }
    }
    Ok(v)
}

fn parse_period(s: &str) -> Result<u32, String> {
    let p: u32 = s.parse().map_err(|_| "expected a positive integer")?;
    if (1..=24).contains(&p) {
        Ok(p)
    } else {
        Err("period bound must lie in 1..=24".into())
    }
}

fn precision_override() -> Option<u32> {
    std::env::var("RAYS_PRECISION_BITS")
        .ok()
        .and_then(|v| v.parse().ok())
}

fn real_param(c: Rat) -> Result<RealParam, String> {
    let rp = RealParam::new(c).map_err(|e| e.to_string())?;
    Ok(match precision_override() {
        Some(bits) => rp.with_prec(bits),
        None => rp.with_prec(DEFAULT_PREC),
    })
}

fn emit<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string(value).expect("serializable"));
}

fn write_out(path: &Option<PathBuf>, bytes: &[u8]) -> Result<(), String> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| e.to_string()),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| e.to_string()),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    match run(cli) {
        Ok(()) => {}
        Err(msg) => {
            eprintln!("error: {}", msg);
            std::process::exit(1);
        }
    }
}

fn run(cli: Cli) -> Result<(), String> {
    match cli.cmd {
        Cmd::InR(args) => {
            match (&args.t, &args.word) {
                (Some(t), None) => {
                    #[derive(Serialize)]
                    struct Out<'a> {
                        t: &'a Angle,
                        in_r: bool,
                    }
                    emit(&Out {
                        t,
                        in_r: in_r(t),
                    });
                }
                (None, Some(w)) => {
                    let word: BinaryWord = w.parse().map_err(|_| "word must be 0/1".to_string())?;
                    let outcome = in_r_depth(&word, args.depth).map_err(|e| e.to_string())?;
                    #[derive(Serialize)]
                    struct Out {
                        word_bits: usize,
                        depth: usize,
                        outcome: DepthOutcome,
                    }
                    emit(&Out {
                        word_bits: word.len(),
                        depth: args.depth,
                        outcome,
                    });
                }
                _ => return Err("specify exactly one of --t or --word".into()),
            }
            Ok(())
        }
        Cmd::Openings {
            max_period,
            format,
            out,
        } => {
            let openings = enumerate_openings(max_period);
            match format.as_str() {
                "json" => {
                    let mut buf = String::new();
                    for o in &openings {
                        buf.push_str(&serde_json::to_string(o).unwrap());
                        buf.push('\n');
                    }
                    write_out(&out, buf.as_bytes())
                }
                "csv" => {
                    let mut buf = String::from("p,n,theta_minus,omega_minus,length\n");
                    for o in &openings {
                        buf.push_str(&format!(
                            "{},{},{},{},{}\n",
                            o.p, o.n, o.theta_minus, o.omega_minus, o.length
                        ));
                    }
                    write_out(&out, buf.as_bytes())
                }
                "svg" => write_out(&out, svg::openings_circle(&openings).as_bytes()),
                other => Err(format!("unknown format: {}", other)),
            }
        }
        Cmd::OpeningSum { max_period } => {
            #[derive(Serialize)]
            struct Out {
                max_period: u32,
                #[serde(with = "realrays::rat_serde")]
                sum: Rat,
                sum_decimal: f64,
            }
            let sum = openings_length_sum(max_period);
            let sum_decimal = rat_to_f64(&sum);
            emit(&Out {
                max_period,
                sum,
                sum_decimal,
            });
            Ok(())
        }
        Cmd::Cover { max_period, scales } => {
            let cover = cover_r(max_period);
            print!("{}", svg::interval_csv(cover.intervals()));
            if let Some(sc) = scales {
                let (lo, hi) = sc
                    .split_once("..")
                    .ok_or_else(|| "scales must be lo..hi".to_string())?;
                let lo: u32 = lo.parse().map_err(|_| "bad scale".to_string())?;
                let hi: u32 = hi.parse().map_err(|_| "bad scale".to_string())?;
                let bc = boxcount_dimension(&cover, &(lo..=hi).collect::<Vec<_>>())
                    .map_err(|e| e.to_string())?;
                eprintln!("box-count slope over {}..{}: {:.6}", lo, hi, bc.slope);
            }
            Ok(())
        }
        Cmd::KsigmaBuild { sigma, level } => {
            let sp = sigma.build()?;
            let lvl = build_level(&sp, level).map_err(|e| e.to_string())?;
            print!("{}", svg::interval_csv(lvl.set.intervals()));
            Ok(())
        }
        Cmd::KsigmaVerify { p, max_level } => {
            if p < 2 {
                return Err("dyadic exponent must be >= 2".into());
            }
            let sp = SigmaParam::dyadic(p);
            let report = verify_structure(&sp, max_level).map_err(|e| e.to_string())?;
            for check in &report.checks {
                emit(check);
            }
            #[derive(Serialize)]
            struct Summary {
                p: u32,
                n_max: u32,
                all_pass: bool,
                distinguished_ratio_attained: bool,
                boundary_case_ratio_attained: bool,
            }
            emit(&Summary {
                p: report.p,
                n_max: report.n_max,
                all_pass: report.all_pass,
                distinguished_ratio_attained: report.distinguished_ratio_attained,
                boundary_case_ratio_attained: report.boundary_case_ratio_attained,
            });
            Ok(())
        }
        Cmd::KsigmaDim { sigma, lo, hi } => {
            let sp = sigma.build()?;
            let est = boxdim_estimate(&sp, lo, hi).map_err(|e| e.to_string())?;
            #[derive(Serialize)]
            struct Out {
                sigma: f64,
                lo: u32,
                hi: u32,
                slope: f64,
                lower_bound: f64,
                counts: Vec<(u32, u64)>,
            }
            emit(&Out {
                sigma: sp.sigma_f64(),
                lo,
                hi,
                slope: est.slope,
                lower_bound: dim_lower_bound(&sp),
                counts: est.counts,
            });
            Ok(())
        }
        Cmd::Tau { c, bits } => {
            let rp = real_param(c.clone())?;
            let word = tau(&rp, bits).map_err(|e| e.to_string())?;
            #[derive(Serialize)]
            struct Out {
                c: f64,
                bits: usize,
                word: String,
                value: f64,
                certified_bits: usize,
            }
            emit(&Out {
                c: rp.to_f64(),
                bits,
                word: word.to_string(),
                value: word.to_f64(),
                certified_bits: bits,
            });
            Ok(())
        }
        Cmd::Pi { t, tol } => {
            let r = pi(&t, &tol).map_err(|e| e.to_string())?;
            #[derive(Serialize)]
            struct Out<'a> {
                t: &'a Angle,
                result: &'a realrays::kneading::PiResult,
                c_decimal: f64,
            }
            let c_decimal = rat_to_f64(&r.c);
            emit(&Out {
                t: &t,
                result: &r,
                c_decimal,
            });
            Ok(())
        }
        Cmd::Nonrec { c, steps } => {
            let rp = real_param(c)?;
            let d = nonrecurrence_depth(&rp, steps).map_err(|e| e.to_string())?;
            #[derive(Serialize)]
            struct Out {
                c: f64,
                steps: usize,
                min_distance: f64,
            }
            emit(&Out {
                c: rp.to_f64(),
                steps,
                min_distance: d,
            });
            Ok(())
        }
        Cmd::Tune { p, n, t } => {
            let words = tuning_words(p, n)?;
            #[derive(Serialize)]
            struct Out<'a> {
                p: u32,
                n: u64,
                t: &'a Angle,
                zeros_tail: Angle,
                ones_tail: Angle,
                dyadic: bool,
            }
            let img = words.tune_angle(&t);
            let (z, o, dy) = match img {
                TuneImage::Single(a) => (a.clone(), a, false),
                TuneImage::Pair {
                    zeros_tail,
                    ones_tail,
                } => (zeros_tail, ones_tail, true),
            };
            emit(&Out {
                p,
                n,
                t: &t,
                zeros_tail: z,
                ones_tail: o,
                dyadic: dy,
            });
            Ok(())
        }
        Cmd::Psi { p, n, s } => {
            let words = tuning_words(p, n)?;
            let v = words.staircase_psi(&s).map_err(|e| e.to_string())?;
            #[derive(Serialize)]
            struct Out<'a> {
                p: u32,
                n: u64,
                s: &'a Angle,
                #[serde(with = "realrays::rat_serde")]
                value: Rat,
                on_gap: bool,
            }
            emit(&Out {
                p,
                n,
                s: &s,
                value: v.value,
                on_gap: v.on_gap,
            });
            Ok(())
        }
        Cmd::CantorDim {
            p,
            n,
            depth,
            cover_period,
        } => {
            let words = tuning_words(p, n)?;
            let (slope, of) = match cover_period {
                Some(pp) => {
                    let cov = words.tuned_r_cover(pp);
                    let scales: Vec<u32> = (2..=7).map(|j| j * p).collect();
                    let bc =
                        boxcount_dimension(&cov, &scales).map_err(|e| e.to_string())?;
                    (bc.slope, "tuned-cover")
                }
                None => {
                    let d = if depth == 0 { 12 * p } else { depth };
                    let bc = words.cantor_boxdim(d).map_err(|e| e.to_string())?;
                    (bc.slope, "invariant-set")
                }
            };
            #[derive(Serialize)]
            struct Out {
                p: u32,
                n: u64,
                of: &'static str,
                slope: f64,
                expected: f64,
            }
            emit(&Out {
                p,
                n,
                of,
                slope,
                expected: 1.0 / p as f64,
            });
            Ok(())
        }
        Cmd::SC {
            t,
            tau_c,
            random,
            den_max,
        } => {
            match (t, random) {
                (Some(t), None) => {
                    let member = s_c_membership(&t, &tau_c).map_err(|e| e.to_string())?;
                    #[derive(Serialize)]
                    struct Out<'a> {
                        t: &'a Angle,
                        tau_c: &'a Angle,
                        member: bool,
                    }
                    emit(&Out {
                        t: &t,
                        tau_c: &tau_c,
                        member,
                    });
                }
                (None, Some(count)) => {
                    // deterministic splitmix sampling from the global seed
                    let mut state = cli.seed.wrapping_add(0x9e3779b97f4a7c15);
                    let mut next = || {
                        state = state.wrapping_add(0x9e3779b97f4a7c15);
                        let mut z = state;
                        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
                        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
                        z ^ (z >> 31)
                    };
                    for _ in 0..count {
                        let den = 2 + next() % (den_max - 1);
                        let num = next() % den;
                        let t = Angle::new(num as i64, den as i64);
                        let member = s_c_membership(&t, &tau_c).map_err(|e| e.to_string())?;
                        #[derive(Serialize)]
                        struct Out<'a> {
                            t: &'a Angle,
                            tau_c: &'a Angle,
                            member: bool,
                        }
                        emit(&Out {
                            t: &t,
                            tau_c: &tau_c,
                            member,
                        });
                    }
                }
                _ => return Err("specify exactly one of --t or --random".into()),
            }
            Ok(())
        }
        Cmd::DimReport {
            c,
            sweep,
            table_period,
        } => {
            let tol = parse_tol("1e-9")?;
            let table = ComponentTable::build(table_period, &tol).map_err(|e| e.to_string())?;
            let params: Vec<Rat> = match (c, sweep) {
                (Some(c), None) => vec![c],
                (None, Some(sw)) => {
                    let lo = parse_c(&sw[0])?;
                    let hi = parse_c(&sw[1])?;
                    let steps: usize = sw[2].parse().map_err(|_| "bad step count")?;
                    if steps < 2 {
                        return Err("sweep needs at least 2 steps".into());
                    }
                    (0..steps)
                        .map(|k| {
                            &lo + (&hi - &lo) * Rat::new((k as i64).into(), ((steps - 1) as i64).into())
                        })
                        .collect()
                }
                _ => return Err("specify exactly one of --c or --sweep".into()),
            };
            println!("c,regime,rho,sigma,ell,ell_prime,box_exponent,boxdim_estimate,flags");
            for cv in params {
                let rp = real_param(cv)?;
                match dim_report(&rp, &table) {
                    Ok(rep) => {
                        let fmt_opt = |x: Option<f64>| {
                            x.map(|v| format!("{:.9}", v)).unwrap_or_default()
                        };
                        let flags = match rep.regime {
                            realrays::biaccess::DimRegime::Chebyshev => "dimension-1-exact",
                            realrays::biaccess::DimRegime::Bounded => "bound",
                            realrays::biaccess::DimRegime::NoBoundKnown => "no-lower-bound;open-problem",
                            realrays::biaccess::DimRegime::Vanishing => "dimension-0",
                        };
                        println!(
                            "{:.12},{:?},{},{},{},{},{},{},{}",
                            rep.c,
                            rep.regime,
                            fmt_opt(rep.rho),
                            fmt_opt(rep.sigma),
                            fmt_opt(rep.lower),
                            fmt_opt(rep.ell_prime),
                            rep.box_exponent.map(|p| p.to_string()).unwrap_or_default(),
                            fmt_opt(rep.boxdim_estimate),
                            flags
                        );
                    }
                    Err(e) => {
                        println!(",,,,,,,,unresolved:{}", e);
                    }
                }
            }
            Ok(())
        }
        Cmd::TraceRay {
            c,
            t,
            depth,
            r0,
            format,
            out,
        } => {
            let ray = trace_ray(&c, &t, depth, r0).map_err(|e| e.to_string())?;
            match format.as_str() {
                "csv" => {
                    let mut buf = String::from("re,im,angle_num,angle_den\n");
                    for (pt, a) in ray.points.iter().zip(ray.angles.iter()) {
                        buf.push_str(&format!(
                            "{:.15},{:.15},{},{}\n",
                            pt.0,
                            pt.1,
                            a.numer(),
                            a.denom()
                        ));
                    }
                    write_out(&out, buf.as_bytes())
                }
                "svg" => write_out(&out, svg::ray_overlay(&[ray], 2.4).as_bytes()),
                "ppm" => {
                    let cf = ray.c;
                    let img = escape_time_image(cf, (0.0, 0.0), 2.2, 400, 400, 96);
                    write_out(&out, &svg::ppm_gray(400, 400, &img))
                }
                other => Err(format!("unknown format: {}", other)),
            }
        }
        Cmd::VerifyLanding {
            c,
            bits,
            depth,
            root_angle,
        } => match (c, root_angle) {
            (Some(c), None) => {
                let rp = real_param(c)?;
                let rep = verify_landing(&rp, bits, depth).map_err(|e| e.to_string())?;
                emit(&rep);
                Ok(())
            }
            (None, Some(t)) => {
                let tol = parse_tol("1e-12")?;
                let found = parabolic_locate(&t, &tol).map_err(|e| e.to_string())?;
                let target = rat_to_f64(&found.dynamic_root);
                let rep = verify_landing_at(&found.c, &t.fold_to_half(), (target, 0.0), depth)
                    .map_err(|e| e.to_string())?;
                emit(&rep);
                Ok(())
            }
            _ => Err("specify exactly one of --c or --root-angle".into()),
        },
        Cmd::Figures { out } => {
            std::fs::create_dir_all(&out).map_err(|e| e.to_string())?;
            let openings = enumerate_openings(7);
            std::fs::write(
                out.join("openings_circle.svg"),
                svg::openings_circle(&openings),
            )
            .map_err(|e| e.to_string())?;
            let sp = SigmaParam::dyadic(3);
            std::fs::write(out.join("ksigma_hierarchy.svg"), svg::ksigma_stack(&sp, 9))
                .map_err(|e| e.to_string())?;
            let c = parse_decimal("-2").unwrap();
            let rays: Vec<_> = [
                Angle::zero(),
                Angle::half(),
                Angle::new(1, 3),
                Angle::new(5, 12),
            ]
            .iter()
            .map(|t| trace_ray(&c, t, 28, 100.0).map_err(|e| e.to_string()))
            .collect::<Result<_, _>>()?;
            std::fs::write(out.join("ray_overlay.svg"), svg::ray_overlay(&rays, 2.4))
                .map_err(|e| e.to_string())?;
            eprintln!("wrote 3 figures to {}", out.display());
            Ok(())
        }
    }
}

fn tuning_words(p: u32, n: u64) -> Result<realrays::tuning::TuningWords, String> {
    let openings = enumerate_openings(p);
    let o = openings
        .iter()
        .find(|o| o.p == p && o.n == n)
        .ok_or_else(|| format!("({}, {}) is not a real component", p, n))?;
    words_from_opening(o).map_err(|e| e.to_string())
}
