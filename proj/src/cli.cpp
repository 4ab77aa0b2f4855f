#include "corrbin/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "corrbin/bench.hpp"
#include "corrbin/verify.hpp"

namespace corrbin::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Options shared by every subcommand that needs a (p, spec) pair.
struct ProblemOptions {
  std::string structure;
  std::string p_list;
  std::size_t m = 0;
  std::string p_file;
  std::string p_uniform;
  std::string rho;
  std::vector<std::string> bands;
  std::string corr_file;
  std::vector<std::string> rho_entries;
  std::string alg = "auto";
};

void add_problem_options(CLI::App* cmd, ProblemOptions& o) {
  cmd->add_option("--structure", o.structure,
                  "exchangeable | decaying (ar1) | one-dep | k-dep | general");
  cmd->add_option("--p", o.p_list, "marginal probabilities, comma separated");
  cmd->add_option("--m", o.m, "dimension; repeats a single --p value m times");
  cmd->add_option("--p-file", o.p_file, "file of marginal probabilities");
  cmd->add_option("--p-uniform", o.p_uniform, "lo,hi,m,pseed: m draws from U(lo,hi)");
  cmd->add_option("--rho", o.rho, "correlation value(s); a single value is repeated");
  cmd->add_option("--band", o.bands, "k-dep band l (repeat for l = 1..K)");
  cmd->add_option("--corr-file", o.corr_file, "square CSV correlation matrix");
  cmd->add_option("--rho-entry", o.rho_entries, "general entry 'i,j,v' (1-based) or 'v' for every pair");
  cmd->add_option("--alg", o.alg, "auto | 1..5 | construction name");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<double> numbers_or_usage(const std::string& text, const std::string& what) {
  try {
    return parse_number_list(text);
  } catch (const std::invalid_argument& e) {
    throw UsageError(what + ": " + e.what());
  }
}

std::vector<double> broadcast(std::vector<double> v, std::size_t n, const std::string& what) {
  if (v.size() == 1 && n != 1) return std::vector<double>(n, v.front());
  if (v.size() != n) {
    throw UsageError(what + ": expected " + std::to_string(n) + " values, got " + std::to_string(v.size()));
  }
  return v;
}

MarginalVector build_marginals(const ProblemOptions& o) {
  const int sources = !o.p_list.empty() + !o.p_file.empty() + !o.p_uniform.empty();
  if (sources != 1) throw UsageError("give exactly one of --p, --p-file, --p-uniform");
  std::vector<double> p;
  if (!o.p_uniform.empty()) {
    const std::vector<double> rule = numbers_or_usage(o.p_uniform, "--p-uniform");
    if (rule.size() != 4 || rule[2] < 1 || rule[2] != std::floor(rule[2]) || rule[3] < 0 ||
        rule[3] != std::floor(rule[3])) {
      throw UsageError("--p-uniform expects lo,hi,m,pseed with integer m >= 1 and pseed >= 0");
    }
    const double lo = rule[0], hi = rule[1];
    if (!(0.0 < lo && lo <= hi && hi < 1.0)) throw UsageError("--p-uniform needs 0 < lo <= hi < 1");
    RandomStream stream(static_cast<std::uint64_t>(rule[3]));
    for (std::size_t i = 0; i < static_cast<std::size_t>(rule[2]); ++i) p.push_back(lo + (hi - lo) * stream.uniform());
    if (lo == hi) std::fill(p.begin(), p.end(), lo);
  } else {
    p = o.p_file.empty() ? numbers_or_usage(o.p_list, "--p") : numbers_or_usage(read_file(o.p_file), o.p_file);
    if (o.m > 0) p = broadcast(std::move(p), o.m, "--p");
  }
  if (p.empty()) throw UsageError("no marginal probabilities given");
  try {
    return MarginalVector(std::move(p));
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

std::string normalize_structure(const std::string& s) {
  if (s == "exchangeable") return "exchangeable";
  if (s == "decaying" || s == "decaying-product" || s == "ar1") return "decaying";
  if (s == "one-dep" || s == "1-dep" || s == "one-dependent") return "one-dep";
  if (s == "k-dep" || s == "k-dependent") return "k-dep";
  if (s == "general") return "general";
  throw UsageError("unknown --structure '" + s + "'");
}

Matrix build_general(const ProblemOptions& o, std::size_t m) {
  Matrix r = Matrix::identity(m);
  if (!o.corr_file.empty()) {
    try {
      r = parse_matrix_csv(read_file(o.corr_file));
    } catch (const std::invalid_argument& e) {
      throw UsageError(o.corr_file + ": " + e.what());
    }
    if (r.size() != m) {
      throw UsageError("--corr-file is " + std::to_string(r.size()) + "x" + std::to_string(r.size()) +
                       " but m = " + std::to_string(m));
    }
  }
  for (const std::string& entry : o.rho_entries) {
    const std::vector<double> v = numbers_or_usage(entry, "--rho-entry");
    if (v.size() == 1) {
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
          if (i != j) r(i, j) = v[0];
        }
      }
    } else if (v.size() == 3) {
      const double i = v[0], j = v[1];
      if (i < 1 || j < 1 || i > m || j > m || i == j || i != std::floor(i) || j != std::floor(j)) {
        throw UsageError("--rho-entry '" + entry + "': indices must be distinct integers in 1.." + std::to_string(m));
      }
      const auto a = static_cast<std::size_t>(i) - 1, b = static_cast<std::size_t>(j) - 1;
      r(a, b) = r(b, a) = v[2];
    } else {
      throw UsageError("--rho-entry expects 'i,j,v' or 'v'");
    }
  }
  return r;
}

CorrelationSpec build_spec(const ProblemOptions& o, std::size_t m) {
  if (o.structure.empty()) throw UsageError("--structure is required");
  const std::string s = normalize_structure(o.structure);
  if (s == "general") {
    if (!o.rho.empty() || !o.bands.empty()) throw UsageError("general structure takes --corr-file / --rho-entry");
    return General{build_general(o, m)};
  }
  if (!o.corr_file.empty() || !o.rho_entries.empty()) {
    throw UsageError("--corr-file and --rho-entry apply to --structure general only");
  }
  if (s == "k-dep") {
    if (o.bands.empty()) throw UsageError("k-dep structure needs at least one --band");
    KDependent k;
    for (std::size_t l = 1; l <= o.bands.size(); ++l) {
      if (l >= m) throw UsageError("k-dep: K must be at most m - 1");
      k.bands.push_back(broadcast(numbers_or_usage(o.bands[l - 1], "--band"), m - l, "--band " + std::to_string(l)));
    }
    return k;
  }
  if (!o.bands.empty()) throw UsageError("--band applies to --structure k-dep only");
  if (o.rho.empty()) throw UsageError("--rho is required for structure " + s);
  std::vector<double> rho = numbers_or_usage(o.rho, "--rho");
  if (s == "exchangeable") {
    if (rho.size() != 1) throw UsageError("exchangeable structure takes a single --rho");
    return Exchangeable{rho[0]};
  }
  if (m < 2) throw UsageError(s + " structure needs m >= 2");
  rho = broadcast(std::move(rho), m - 1, "--rho");
  if (s == "decaying") return DecayingProduct{std::move(rho)};
  return OneDependent{std::move(rho)};
}

std::optional<Algorithm> build_algorithm(const std::string& text) {
  if (text.empty() || text == "auto") return std::nullopt;
  const auto alg = parse_algorithm(text);
  if (!alg) throw UsageError("unknown --alg '" + text + "'");
  return alg;
}

struct Problem {
  MarginalVector p;
  CorrelationSpec spec;
  std::optional<Algorithm> alg;
};

Problem build_problem(const ProblemOptions& o) {
  MarginalVector p = build_marginals(o);
  CorrelationSpec spec = build_spec(o, p.size());
  try {
    validate(p, spec);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  auto alg = build_algorithm(o.alg);
  if (alg && !supports(*alg, spec)) {
    throw UsageError(std::string(algorithm_name(*alg)) + " cannot realize a " + std::string(structure_name(spec)) +
                     " structure");
  }
  return {std::move(p), std::move(spec), alg};
}

fs::path default_output_dir() {
  const char* env = std::getenv(kOutputDirEnv);
  return (env && *env) ? fs::path(env) : fs::path(".");
}

void write_file(const fs::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f << text;
  f.close();
  if (!f) throw IoError("write failed for " + path.string());
}

// Human-readable lines for the correlation violations, one per pair.
void print_report_summary(const FeasibilityReport& rep, std::ostream& err) {
  err << "infeasible: " << verdict_name(rep.verdict);
  if (!rep.notes.empty()) err << " (" << rep.notes << ")";
  err << '\n' << std::setprecision(17);
  for (const Violation& v : rep.violations) {
    if (v.kind == Violation::Kind::Correlation) {
      err << "  r_" << v.i + 1 << ',' << v.j + 1 << " = " << v.value << " outside "
          << (rep.verdict == Verdict::PrenticeViolated ? "Prentice range [" : "admissible range [")
          << v.admissible.lo << ", " << v.admissible.hi << "]\n";
    } else {
      err << "  " << v.parameter << " (index " << v.i + 1 << ") = " << v.value << " outside [" << v.admissible.lo
          << ", " << v.admissible.hi << "]\n";
    }
  }
  for (const auto& [name, value] : rep.hints) err << "  hint " << name << " = " << value << '\n';
  if (rep.truncated) err << "  (further violations omitted)\n";
}

// Feasibility of the structure, then applicability of the chosen construction.
std::pair<std::optional<GenerationPlan>, FeasibilityReport> assess(const Problem& pr) {
  FeasibilityReport rep = check_feasibility(pr.p, pr.spec);
  if (!rep.feasible()) return {std::nullopt, rep};
  try {
    GenerationPlan plan = make_plan(pr.p, pr.spec, pr.alg);
    rep.checked_algorithm = plan.algorithm;
    return {std::move(plan), rep};
  } catch (FeasibilityError& e) {
    FeasibilityReport failed = e.report();
    if (std::holds_alternative<OneDependent>(pr.spec) && pr.p.size() >= 2 && failed.hints.empty() &&
        failed.verdict == Verdict::AlgorithmInapplicable) {
      failed.hints["rho_max_alg3_equal"] = rho_max_alg3_equal(pr.p);
      failed.hints["rho_max_alg4_equal"] = rho_max_alg4_equal(pr.p.size());
    }
    return {std::nullopt, std::move(failed)};
  }
}

int cmd_gen(const ProblemOptions& po, std::size_t n, std::uint64_t seed, const std::string& out_path,
            const std::string& meta_path, const std::string& format, bool no_header, unsigned threads,
            std::ostream& out, std::ostream& err) {
  if (n == 0) throw UsageError("--n must be at least 1");
  if (format != "csv" && format != "json") throw UsageError("--format must be csv or json");
  if (threads == 0) throw UsageError("--threads must be at least 1");
  const Problem pr = build_problem(po);
  auto [plan, rep] = assess(pr);
  if (!plan) {
    print_report_summary(rep, err);
    out << report_to_json(rep).dump(2) << '\n';
    return kExitInfeasible;
  }
  const SampleMatrix samples = generate(*plan, n, seed, threads);
  const std::string body = format == "csv" ? samples_to_csv(samples, !no_header) : samples_to_json(samples);
  const json meta = sample_metadata(samples, *plan, !no_header, format);

  if (out_path == "-") {
    out << body;
    if (!meta_path.empty()) write_file(meta_path, meta.dump(2) + "\n");
    return kExitOk;
  }
  const fs::path target = out_path.empty() ? default_output_dir() / ("samples." + format) : fs::path(out_path);
  write_file(target, body);
  const fs::path meta_target = meta_path.empty() ? fs::path(target.string() + ".meta.json") : fs::path(meta_path);
  write_file(meta_target, meta.dump(2) + "\n");
  err << "wrote " << n << " x " << samples.m << " samples to " << target.string() << " (algorithm "
      << algorithm_number(samples.algorithm) << ", digest " << samples.spec_digest << ")\n";
  return kExitOk;
}

int cmd_check(const ProblemOptions& po, std::ostream& out, std::ostream& err) {
  const Problem pr = build_problem(po);
  auto [plan, rep] = assess(pr);
  json j = report_to_json(rep);
  j["structure"] = std::string(structure_name(pr.spec));
  j["m"] = pr.p.size();
  const FeasibilityReport pd = check_positive_definite(pr.p.size(), pr.spec);
  j["positive_definite"] = pd.feasible();
  out << j.dump(2) << '\n';
  if (!plan) {
    print_report_summary(rep, err);
    return kExitInfeasible;
  }
  return kExitOk;
}

bool all_equal(const MarginalVector& p) { return p.min() == p.max(); }

int cmd_bounds(const ProblemOptions& po, std::ostream& out) {
  const MarginalVector p = build_marginals(po);
  const std::size_t m = p.size();
  const std::string s = po.structure.empty() ? std::string("pairwise") : normalize_structure(po.structure);
  json j;
  j["m"] = m;
  j["structure"] = s;
  if (m >= 2) {
    double lowest = 1.0;
    json table = json::array();
    for (std::size_t a = 0; a < m; ++a) {
      for (std::size_t b = a + 1; b < m; ++b) {
        const double u = prentice_upper(p[a], p[b]);
        lowest = std::min(lowest, u);
        if (m <= 100) table.push_back({{"i", a + 1}, {"j", b + 1}, {"upper", u}});
      }
    }
    j["prentice_min"] = lowest;
    if (m <= 100) j["prentice"] = std::move(table);
  }
  if (s == "one-dep" && m >= 2) {
    j["rho_max_alg3_equal"] = rho_max_alg3_equal(p);
    j["rho_max_alg4_equal"] = rho_max_alg4_equal(m);
    j["alg4_bound_assumes_equal_marginals"] = true;
    j["equal_marginals"] = all_equal(p);
    const Interval pd = pd_bound_1dep_equal(m);
    j["pd_bound_1dep_equal"] = {{"lo", pd.lo}, {"hi", pd.hi}};
  }
  out << j.dump(2) << '\n';
  return kExitOk;
}

const char* status(bool ok) { return ok ? "PASS" : "FAIL"; }

int cmd_verify(const ProblemOptions& po, std::size_t n_max, std::size_t seed_count, std::uint64_t seed,
               double oracle_tol, double envelope_factor, const std::string& out_path, std::ostream& out,
               std::ostream& err) {
  if (n_max == 0) throw UsageError("--n must be at least 1");
  if (seed_count == 0) throw UsageError("--seeds must be at least 1");
  const Problem pr = build_problem(po);
  auto [plan, rep] = assess(pr);
  if (!plan) {
    print_report_summary(rep, err);
    return kExitInfeasible;
  }
  bool failed = false;
  out << std::setprecision(6);
  out << "algorithm " << algorithm_number(plan->algorithm) << " (" << algorithm_name(plan->algorithm) << "), m = "
      << plan->m() << '\n';

  if (plan->draws_per_row() <= kOracleMaxDraws) {
    const ExactMoments ex = exact_oracle(*plan);
    const Matrix target = materialize_correlation(plan->spec, plan->m());
    double mean_err = 0.0, corr_err = 0.0;
    for (std::size_t i = 0; i < plan->m(); ++i) {
      mean_err = std::max(mean_err, std::abs(ex.mean[i] - plan->p[i]));
      for (std::size_t k = 0; k < plan->m(); ++k) corr_err = std::max(corr_err, std::abs(ex.corr(i, k) - target(i, k)));
    }
    out << status(mean_err <= oracle_tol) << " oracle_mean max_abs_error=" << mean_err << '\n';
    out << status(corr_err <= oracle_tol) << " oracle_corr max_abs_error=" << corr_err << '\n';
    failed |= mean_err > oracle_tol || corr_err > oracle_tol;
  } else {
    out << "SKIPPED oracle (" << plan->draws_per_row() << " draws per row exceeds " << kOracleMaxDraws << ")\n";
  }

  const std::vector<std::size_t> ladder = default_ladder(n_max);
  if (ladder.size() < 2) {
    out << "SKIPPED convergence (needs n >= 10000 for two ladder points; got n = " << n_max << ")\n";
    return failed ? kExitCheckFailed : kExitOk;
  }
  std::vector<std::uint64_t> seeds(seed_count);
  for (std::size_t s = 0; s < seed_count; ++s) seeds[s] = seed + s;
  std::vector<ConvergencePoint> pts;
  try {
    pts = run_convergence(*plan, ladder, seeds);
  } catch (const DegenerateColumnError& e) {
    out << "FAIL convergence (" << e.what() << ")\n";
    return kExitCheckFailed;
  }

  bool mean_dec = true, corr_dec = true;
  for (std::size_t k = 1; k < pts.size(); ++k) {
    mean_dec &= pts[k].mean_l2 < pts[k - 1].mean_l2;
    corr_dec &= pts[k].corr_frobenius < pts[k - 1].corr_frobenius;
  }
  const ConvergencePoint& last = pts.back();
  const bool mean_env = last.mean_l2 < envelope_factor * last.envelope.mean_l2;
  const bool corr_env = last.corr_frobenius < envelope_factor * last.envelope.corr_frobenius;
  out << status(mean_dec) << " mean_l2_decreasing\n";
  out << status(corr_dec) << " corr_frobenius_decreasing\n";
  out << status(mean_env) << " mean_l2_within_envelope error=" << last.mean_l2
      << " bound=" << envelope_factor * last.envelope.mean_l2 << '\n';
  out << status(corr_env) << " corr_frobenius_within_envelope error=" << last.corr_frobenius
      << " bound=" << envelope_factor * last.envelope.corr_frobenius << '\n';
  failed |= !(mean_dec && corr_dec && mean_env && corr_env);

  std::ostringstream csv;
  csv << "n,mean_l2,corr_frobenius,median_mean_l2,median_corr_frobenius,mean_envelope,corr_envelope\n"
      << std::setprecision(17);
  for (const auto& pt : pts) {
    csv << pt.n << ',' << pt.mean_l2 << ',' << pt.corr_frobenius << ',' << pt.median_mean_l2 << ','
        << pt.median_corr_frobenius << ',' << pt.envelope.mean_l2 << ',' << pt.envelope.corr_frobenius << '\n';
  }
  const fs::path target = out_path.empty() ? default_output_dir() / "verify.csv" : fs::path(out_path);
  write_file(target, csv.str());
  err << "wrote convergence table to " << target.string() << '\n';
  return failed ? kExitCheckFailed : kExitOk;
}

struct BenchOptions {
  std::string alg;
  std::string dims;
  std::size_t reps = 10;
  std::size_t warmup = 2;
  double p = 0.5;
  double rho = 0.2;
  std::size_t k = 0;
  std::uint64_t seed = 0;
  std::string out;
  std::optional<double> min_slope;
  std::optional<double> max_slope;
};

int cmd_bench(const BenchOptions& b, std::ostream& out, std::ostream& err) {
  const auto alg = parse_algorithm(b.alg);
  if (!alg) throw UsageError("--alg must name one of the five constructions");
  std::vector<std::size_t> dims;
  for (double d : numbers_or_usage(b.dims, "--dims")) {
    if (d < 2 || d != std::floor(d)) throw UsageError("--dims must be integers >= 2");
    dims.push_back(static_cast<std::size_t>(d));
  }
  if (dims.empty()) throw UsageError("--dims is required");
  if (!(b.p > 0.0 && b.p < 1.0)) throw UsageError("--p must lie in (0,1)");
  if (!(b.rho >= 0.0 && b.rho < 1.0)) throw UsageError("--rho must lie in [0,1)");

  const double p = b.p, rho = b.rho;
  const std::size_t k = b.k;
  MarginalProfile p_profile = [p](std::size_t m) { return MarginalVector(std::vector<double>(m, p)); };
  SpecProfile spec_profile;
  switch (*alg) {
    case Algorithm::Exchangeable:
      spec_profile = [rho](std::size_t) -> CorrelationSpec { return Exchangeable{rho}; };
      break;
    case Algorithm::DecayingProduct:
      spec_profile = [rho](std::size_t m) -> CorrelationSpec { return DecayingProduct{std::vector<double>(m - 1, rho)}; };
      break;
    case Algorithm::OneDepProduct:
    case Algorithm::OneDepThinned:
      spec_profile = [rho](std::size_t m) -> CorrelationSpec { return OneDependent{std::vector<double>(m - 1, rho)}; };
      break;
    case Algorithm::KDependent:
      spec_profile = [rho, k](std::size_t m) -> CorrelationSpec {
        if (k == 0) {
          Matrix r = Matrix::identity(m);
          for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = i + 1; j < m; ++j) r(i, j) = r(j, i) = std::pow(rho, static_cast<double>(j - i));
          }
          return General{std::move(r)};
        }
        KDependent kd;
        for (std::size_t l = 1; l <= std::min(k, m - 1); ++l) {
          kd.bands.emplace_back(m - l, std::pow(rho, static_cast<double>(l)));
        }
        return kd;
      };
      break;
  }

  ScalingOptions opts;
  opts.reps = b.reps;
  opts.warmup = b.warmup;
  opts.seed = b.seed;
  ScalingResult res;
  try {
    res = run_scaling(*alg, p_profile, spec_profile, dims, opts);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const fs::path target = b.out.empty() ? default_output_dir() / "bench.csv" : fs::path(b.out);
  try {
    std::error_code ec;
    if (target.has_parent_path()) fs::create_directories(target.parent_path(), ec);
    emit_scaling_csv(res, target.string());
  } catch (const std::runtime_error& e) {
    throw IoError(e.what());
  }

  json j;
  j["algorithm"] = algorithm_number(*alg);
  j["dims"] = res.dims;
  j["median_seconds_per_row"] = res.times;
  j["derive_seconds"] = res.derive_times;
  j["reps"] = res.reps;
  if (dims.size() >= 2) {
    j["slope"] = res.slope;
    j["r2"] = res.r2;
  }
  j["csv"] = target.string();
  out << j.dump(2) << '\n';

  bool ok = true;
  if ((b.min_slope || b.max_slope) && dims.size() < 2) {
    err << "slope bounds need at least two dimensions\n";
    return kExitUsage;
  }
  if (b.min_slope && res.slope < *b.min_slope) ok = false;
  if (b.max_slope && res.slope > *b.max_slope) ok = false;
  if (b.min_slope || b.max_slope) out << status(ok) << " slope=" << res.slope << '\n';
  return ok ? kExitOk : kExitCheckFailed;
}

}  // namespace

std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> out;
  std::string token;
  auto flush = [&] {
    if (token.empty()) return;
    char* end = nullptr;
    const double v = std::strtod(token.c_str(), &end);
    if (end != token.c_str() + token.size() || !std::isfinite(v)) {
      throw std::invalid_argument("not a number: '" + token + "'");
    }
    out.push_back(v);
    token.clear();
  };
  for (char c : text) {
    if (c == ',' || c == ';' || std::isspace(static_cast<unsigned char>(c))) {
      flush();
    } else {
      token.push_back(c);
    }
  }
  flush();
  return out;
}

Matrix parse_matrix_csv(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    rows.push_back(parse_number_list(line));
  }
  const std::size_t m = rows.size();
  if (m == 0) throw std::invalid_argument("empty correlation matrix");
  for (const auto& r : rows) {
    if (r.size() != m) throw std::invalid_argument("correlation matrix is not square");
  }
  Matrix r(m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (std::abs(rows[i][j] - rows[j][i]) > 1e-12) {
        throw std::invalid_argument("correlation matrix is not symmetric at (" + std::to_string(i + 1) + "," +
                                    std::to_string(j + 1) + ")");
      }
      r(i, j) = i == j ? rows[i][i] : 0.5 * (rows[i][j] + rows[j][i]);
    }
  }
  return r;
}

json report_to_json(const FeasibilityReport& report) {
  json j;
  j["verdict"] = std::string(verdict_name(report.verdict));
  j["feasible"] = report.feasible();
  if (report.checked_algorithm) {
    j["algorithm"] = algorithm_number(*report.checked_algorithm);
    j["algorithm_name"] = std::string(algorithm_name(*report.checked_algorithm));
  } else {
    j["algorithm"] = nullptr;
  }
  json vs = json::array();
  for (const Violation& v : report.violations) {
    const char* kind = v.kind == Violation::Kind::Correlation ? "correlation"
                       : v.kind == Violation::Kind::Parameter ? "parameter"
                                                              : "pivot";
    vs.push_back({{"kind", kind},
                  {"parameter", v.parameter},
                  {"i", v.i + 1},
                  {"j", v.j + 1},
                  {"value", v.value},
                  {"admissible", {{"lo", v.admissible.lo}, {"hi", v.admissible.hi}}}});
  }
  j["violations"] = std::move(vs);
  j["truncated"] = report.truncated;
  j["notes"] = report.notes;
  j["hints"] = json::object();
  for (const auto& [name, value] : report.hints) j["hints"][name] = value;
  return j;
}

json spec_to_json(const CorrelationSpec& spec) {
  json j;
  j["structure"] = std::string(structure_name(spec));
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Exchangeable>) {
          j["rho"] = s.rho;
        } else if constexpr (std::is_same_v<T, DecayingProduct> || std::is_same_v<T, OneDependent>) {
          j["rho"] = s.rho;
        } else if constexpr (std::is_same_v<T, KDependent>) {
          j["bands"] = s.bands;
        } else {
          json rows = json::array();
          for (std::size_t i = 0; i < s.r.size(); ++i) {
            json row = json::array();
            for (std::size_t k = 0; k < s.r.size(); ++k) row.push_back(s.r(i, k));
            rows.push_back(std::move(row));
          }
          j["matrix"] = std::move(rows);
        }
      },
      spec);
  return j;
}

CorrelationSpec spec_from_json(const json& j, std::size_t m) {
  const std::string s = j.at("structure").get<std::string>();
  CorrelationSpec spec;
  if (s == "exchangeable") {
    spec = Exchangeable{j.at("rho").get<double>()};
  } else if (s == "decaying-product") {
    spec = DecayingProduct{j.at("rho").get<std::vector<double>>()};
  } else if (s == "one-dependent") {
    spec = OneDependent{j.at("rho").get<std::vector<double>>()};
  } else if (s == "k-dependent") {
    spec = KDependent{j.at("bands").get<std::vector<std::vector<double>>>()};
  } else if (s == "general") {
    const auto rows = j.at("matrix").get<std::vector<std::vector<double>>>();
    if (rows.size() != m) throw std::invalid_argument("spec_from_json: matrix dimension mismatch");
    Matrix r(m);
    for (std::size_t i = 0; i < m; ++i) {
      if (rows[i].size() != m) throw std::invalid_argument("spec_from_json: matrix is not square");
      for (std::size_t k = 0; k < m; ++k) r(i, k) = rows[i][k];
    }
    spec = General{std::move(r)};
  } else {
    throw std::invalid_argument("spec_from_json: unknown structure '" + s + "'");
  }
  return spec;
}

json sample_metadata(const SampleMatrix& samples, const GenerationPlan& plan, bool header, const std::string& format) {
  json j;
  j["seed"] = samples.seed;
  j["spec_digest"] = samples.spec_digest;
  j["algorithm"] = algorithm_number(samples.algorithm);
  j["algorithm_name"] = std::string(algorithm_name(samples.algorithm));
  j["n"] = samples.n;
  j["m"] = samples.m;
  j["p"] = std::vector<double>(plan.p.values().begin(), plan.p.values().end());
  j["spec"] = spec_to_json(plan.spec);
  j["format"] = format;
  j["header"] = header;
  return j;
}

std::string samples_to_csv(const SampleMatrix& samples, bool header) {
  std::string s;
  s.reserve((samples.n + 1) * samples.m * 2);
  if (header) {
    for (std::size_t c = 0; c < samples.m; ++c) {
      if (c) s += ',';
      s += 'x';
      s += std::to_string(c + 1);
    }
    s += '\n';
  }
  for (std::size_t r = 0; r < samples.n; ++r) {
    for (std::size_t c = 0; c < samples.m; ++c) {
      if (c) s += ',';
      s += samples(r, c) ? '1' : '0';
    }
    s += '\n';
  }
  return s;
}

std::string samples_to_json(const SampleMatrix& samples) {
  json rows = json::array();
  for (std::size_t r = 0; r < samples.n; ++r) {
    const auto row = samples.row(r);
    rows.push_back(std::vector<int>(row.begin(), row.end()));
  }
  json j;
  j["n"] = samples.n;
  j["m"] = samples.m;
  j["rows"] = std::move(rows);
  return j.dump() + "\n";
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"corrbin: correlated binary vectors with given marginals and correlations"};
  app.require_subcommand(1);

  ProblemOptions gen_po, check_po, bounds_po, verify_po;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::string out_path, meta_path, format = "csv";
  bool no_header = false;
  unsigned threads = 1;
  auto* gen = app.add_subcommand("gen", "generate samples");
  add_problem_options(gen, gen_po);
  gen->add_option("--n", n, "number of rows")->required();
  gen->add_option("--seed", seed, "stream seed (default 0)");
  gen->add_option("--out", out_path, "output file, '-' for stdout (default $CORRBIN_OUTPUT_DIR/samples.<format>)");
  gen->add_option("--meta", meta_path, "metadata sidecar (default <out>.meta.json)");
  gen->add_option("--format", format, "csv | json");
  gen->add_flag("--no-header", no_header, "omit the x1,...,xm header row");
  gen->add_option("--threads", threads, "worker threads; output does not depend on it");

  auto* check = app.add_subcommand("check", "feasibility report as JSON");
  add_problem_options(check, check_po);

  auto* bounds = app.add_subcommand("bounds", "maximal correlation bounds as JSON");
  add_problem_options(bounds, bounds_po);

  std::size_t v_n = 100000, v_seeds = 10;
  std::uint64_t v_seed = 0;
  double v_tol = 1e-12, v_factor = 5.0;
  std::string v_out;
  auto* ver = app.add_subcommand("verify", "exact and sampled moment checks");
  add_problem_options(ver, verify_po);
  ver->add_option("--n", v_n, "largest sample size on the 10^3..10^6 ladder");
  ver->add_option("--seeds", v_seeds, "number of seeds averaged per ladder point");
  ver->add_option("--seed", v_seed, "first seed");
  ver->add_option("--oracle-tol", v_tol, "entrywise tolerance for the exact oracle");
  ver->add_option("--envelope-factor", v_factor, "final errors must fall below this multiple of the CLT scale");
  ver->add_option("--out", v_out, "convergence CSV (default $CORRBIN_OUTPUT_DIR/verify.csv)");

  BenchOptions bo;
  double min_slope = NAN, max_slope = NAN;
  auto* bench = app.add_subcommand("bench", "per-row timing across dimensions");
  bench->add_option("--alg", bo.alg, "construction 1..5")->required();
  bench->add_option("--dims", bo.dims, "dimensions, comma separated and increasing")->required();
  bench->add_option("--reps", bo.reps, "timed repetitions per dimension");
  bench->add_option("--warmup", bo.warmup, "untimed repetitions per dimension");
  bench->add_option("--p", bo.p, "common marginal probability");
  bench->add_option("--rho", bo.rho, "correlation parameter");
  bench->add_option("--k", bo.k, "construction 5 bandwidth; 0 = general matrix rho^|i-j|");
  bench->add_option("--seed", bo.seed, "stream seed");
  bench->add_option("--out", bo.out, "CSV path (default $CORRBIN_OUTPUT_DIR/bench.csv)");
  bench->add_option("--min-slope", min_slope, "fail when the log-log slope is below this");
  bench->add_option("--max-slope", max_slope, "fail when the log-log slope is above this");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen) return cmd_gen(gen_po, n, seed, out_path, meta_path, format, no_header, threads, out, err);
    if (*check) return cmd_check(check_po, out, err);
    if (*bounds) return cmd_bounds(bounds_po, out);
    if (*ver) return cmd_verify(verify_po, v_n, v_seeds, v_seed, v_tol, v_factor, v_out, out, err);
    if (!std::isnan(min_slope)) bo.min_slope = min_slope;
    if (!std::isnan(max_slope)) bo.max_slope = max_slope;
    return cmd_bench(bo, out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const IoError& e) {
    err << "io error: " << e.what() << '\n';
    return kExitIo;
  } catch (const FeasibilityError& e) {
    print_report_summary(e.report(), err);
    return kExitInfeasible;
  } catch (const std::invalid_argument& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  }
}

}  // namespace corrbin::cli
