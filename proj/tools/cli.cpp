#include "cli.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "zlab/arcs.hpp"
#include "zlab/census.hpp"
#include "zlab/cf.hpp"
#include "zlab/dimension.hpp"
#include "zlab/ensemble.hpp"
#include "zlab/error.hpp"
#include "zlab/format.hpp"
#include "zlab/verifier.hpp"

namespace zlab::cli {

namespace {

using json = nlohmann::json;

struct Common {
  std::string format = "json";
  std::string output;
  std::string constants;
  unsigned threads = 0;
  std::uint64_t seed = 0;
  bool reproducible = false;
};

struct Outcome {
  json config = json::object();
  json results;
  json diagnostics = json::object();
  std::string csv;
  int code = kOk;
};

using ConstantsFile = std::map<std::string, double>;

const std::vector<std::string> kConstantKeys = {
    "eps0",         "q1",           "window_divisor", "prefix_lower", "prefix_upper",
    "suffix_lower", "suffix_upper", "spread",         "h_factor"};

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

ConstantsFile read_constants(const std::string& path) {
  ConstantsFile out;
  if (path.empty()) return out;
  std::ifstream in(path);
  if (!in) throw InputError("cannot open constants file " + path);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InputError("constants file line " + std::to_string(number) + ": expected key = value");
    }
    std::string key = trim(line.substr(0, eq));
    if (key == "window_slack") key = "window_divisor";
    if (std::find(kConstantKeys.begin(), kConstantKeys.end(), key) == kConstantKeys.end()) {
      throw InputError("constants file line " + std::to_string(number) + ": unknown key '" + key + "'");
    }
    const std::string value = trim(line.substr(eq + 1));
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (value.empty() || *end != '\0') {
      throw InputError("constants file line " + std::to_string(number) + ": bad number '" + value + "'");
    }
    out[key] = v;
  }
  return out;
}

// Flag value when given on the command line, else the constants file, else the default.
double pick(const CLI::Option* opt, double value, const ConstantsFile& file, const std::string& key) {
  if (opt->count() > 0) return value;
  const auto it = file.find(key);
  return it == file.end() ? value : it->second;
}

unsigned default_threads() {
  if (const char* env = std::getenv("ZLAB_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return 0;
}

std::string metric_csv(const json& flat) {
  std::ostringstream out;
  out << "metric,value\n";
  for (const auto& [k, v] : flat.items()) {
    if (v.is_structured()) continue;
    out << k << ',';
    if (v.is_number_float()) out << format_double(v.get<double>());
    else if (v.is_string()) out << v.get<std::string>();
    else out << v.dump();
    out << '\n';
  }
  return out.str();
}

json parameters_json(const ensemble::ParameterChoice& p) {
  return {{"alpha", p.alpha},          {"beta", p.beta},
          {"strategy", ensemble::to_string(p.used)},
          {"M1", p.m1},                {"M2_raw", p.m2_raw},
          {"M4_raw", p.m4_raw},        {"M2", p.m2},
          {"M4", p.m4},                {"product_within_limit", p.product_within_limit},
          {"resolved_within_limit", p.resolved_within_limit},
          {"M1_in_range", p.m1_in_range}, {"tag", p.tag}};
}

json window_json(const ensemble::WindowReport& w) {
  return {{"tuples", w.tuples},
          {"truncated", w.truncated},
          {"sandwich_checks", w.sandwich_checks},
          {"sandwich_violations", w.sandwich_violations},
          {"prefix_samples", w.prefix_samples},
          {"prefix_inside", w.prefix_inside},
          {"suffix_samples", w.suffix_samples},
          {"suffix_inside", w.suffix_inside}};
}

json spread_json(const ensemble::SpreadReport& s) {
  return {{"min_norm", s.min_norm}, {"max_norm", s.max_norm}, {"ratio", s.ratio},
          {"bound", s.bound},       {"within", s.within}};
}

// Options shared by every command that builds an ensemble.
struct EnsembleArgs {
  std::string alphabet = "1,2";
  double limit = 1e4;
  double eps0 = 0.5;
  double q1 = 0;
  bool sample = false;
  std::size_t cap = 200;
  double window_divisor = 0;
  std::size_t enumeration_cap = 5'000'000;
  ensemble::EnsembleConstants constants;
  std::map<std::string, CLI::Option*> opts;

  void add(CLI::App* app) {
    app->add_option("--alphabet", alphabet, "Letters, e.g. 1,2,3");
    app->add_option("--limit,-N", limit, "N")->check(CLI::PositiveNumber);
    opts["eps0"] = app->add_option("--eps0", eps0, "eps_0 in (0, 1)");
    opts["q1"] = app->add_option("--q1", q1, "Override Q_1 (> 1)");
    app->add_flag("--sample", sample, "Sample factors instead of exhaustive windows");
    app->add_option("--factor-cap", cap, "Per-factor size cap");
    opts["window_divisor"] = app->add_option("--window-divisor,--window-slack", window_divisor,
                                             "Lower window edge R / divisor (0: 2A)");
    app->add_option("--enumeration-cap", enumeration_cap, "Cap on enumerated window words");
    opts["prefix_lower"] = app->add_option("--prefix-lower", constants.prefix_lower);
    opts["prefix_upper"] = app->add_option("--prefix-upper", constants.prefix_upper);
    opts["suffix_lower"] = app->add_option("--suffix-lower", constants.suffix_lower);
    opts["suffix_upper"] = app->add_option("--suffix-upper", constants.suffix_upper);
    opts["spread"] = app->add_option("--spread", constants.spread);
    opts["h_factor"] = app->add_option("--h-factor", constants.h_factor);
  }

  void resolve(const ConstantsFile& file) {
    eps0 = pick(opts["eps0"], eps0, file, "eps0");
    q1 = pick(opts["q1"], q1, file, "q1");
    window_divisor = pick(opts["window_divisor"], window_divisor, file, "window_divisor");
    constants.prefix_lower = pick(opts["prefix_lower"], constants.prefix_lower, file, "prefix_lower");
    constants.prefix_upper = pick(opts["prefix_upper"], constants.prefix_upper, file, "prefix_upper");
    constants.suffix_lower = pick(opts["suffix_lower"], constants.suffix_lower, file, "suffix_lower");
    constants.suffix_upper = pick(opts["suffix_upper"], constants.suffix_upper, file, "suffix_upper");
    constants.spread = pick(opts["spread"], constants.spread, file, "spread");
    constants.h_factor = pick(opts["h_factor"], constants.h_factor, file, "h_factor");
  }

  ensemble::Ladder ladder() const {
    const Alphabet a = Alphabet::parse(alphabet);
    return ensemble::build_ladder(limit, eps0, a.max_letter(),
                                  q1 > 0 ? std::optional<double>(q1) : std::nullopt);
  }

  ensemble::Ensemble build(std::uint64_t seed) const {
    ensemble::SamplingPolicy policy;
    policy.exhaustive = !sample;
    policy.cap = cap;
    policy.seed = seed;
    policy.window_divisor = window_divisor;
    policy.enumeration_cap = enumeration_cap;
    return ensemble::build_preensembles(ladder(), Alphabet::parse(alphabet), policy);
  }

  json config(std::uint64_t seed) const {
    return {{"alphabet", Alphabet::parse(alphabet).to_string()},
            {"N", limit},
            {"eps0", eps0},
            {"Q1_override", q1 > 0 ? json(q1) : json(nullptr)},
            {"exhaustive", !sample},
            {"factor_cap", cap},
            {"window_divisor", window_divisor},
            {"enumeration_cap", enumeration_cap},
            {"seed", seed},
            {"constants",
             {{"prefix_lower", constants.prefix_lower},
              {"prefix_upper", constants.prefix_upper},
              {"suffix_lower", constants.suffix_lower},
              {"suffix_upper", constants.suffix_upper},
              {"spread", constants.spread},
              {"h_factor", constants.h_factor}}}};
  }
};

struct ParamArgs {
  int alpha = 0;
  int beta = 0;
  std::string strategy = "auto";
  double m1 = 0, m2 = 0, m4 = 0;
  std::size_t product_cap = 2'000'000;

  void add(CLI::App* app) {
    app->add_option("--alpha", alpha, "Window index of q")->check(CLI::NonNegativeNumber);
    app->add_option("--beta", beta, "Window index of |l|")->check(CLI::NonNegativeNumber);
    app->add_option("--strategy", strategy, "auto|major|minor");
    app->add_option("--m1", m1, "Override M1");
    app->add_option("--m2", m2, "Override M2");
    app->add_option("--m4", m4, "Override M4");
    app->add_option("--product-cap", product_cap, "Cap on set products");
  }

  json config() const {
    return {{"alpha", alpha},
            {"beta", beta},
            {"strategy", strategy},
            {"M1_override", m1 > 0 ? json(m1) : json(nullptr)},
            {"M2_override", m2 > 0 ? json(m2) : json(nullptr)},
            {"M4_override", m4 > 0 ? json(m4) : json(nullptr)},
            {"product_cap", product_cap}};
  }
};

struct Factored {
  ensemble::Ensemble ensemble;
  ensemble::ParameterChoice choice;
  ensemble::Factorization factorization;
};

Factored factor(const EnsembleArgs& ea, const ParamArgs& pa, std::uint64_t seed) {
  Factored out{ea.build(seed), {}, {}};
  const Letter a = out.ensemble.alphabet.max_letter();
  out.choice = ensemble::choose_parameters(pa.alpha, pa.beta, out.ensemble.ladder, a,
                                           ensemble::parse_strategy(pa.strategy));
  out.factorization = ensemble::factorize(out.ensemble, pa.m1 > 0 ? pa.m1 : out.choice.m1,
                                          pa.m2 > 0 ? pa.m2 : out.choice.m2,
                                          pa.m4 > 0 ? pa.m4 : out.choice.m4, ea.constants,
                                          pa.product_cap);
  return out;
}

struct ZArgs {
  std::int64_t kappa = -1;
  double lambda = 0;
  std::size_t size = 0;
  std::size_t cap = 100'000;

  void add(CLI::App* app) {
    app->add_option("--kappa", kappa, "Class residue l mod T1 (-1: most populated)");
    app->add_option("--lambda", lambda, "lambda in (-1/4, 1/4]");
    app->add_option("--z-size", size, "Keep the first k class members (0: all)");
    app->add_option("--z-cap", cap, "Cap on class members");
  }

  std::vector<arcs::ArcPoint> build(const ensemble::Ladder& lad, int alpha, int beta,
                                    std::int64_t& kappa_used) const {
    kappa_used = kappa;
    if (kappa_used < 0) {
      const auto pops = arcs::class_populations(lad, alpha, beta);
      if (pops.empty()) {
        throw InputError("cell (alpha=" + std::to_string(alpha) + ", beta=" +
                         std::to_string(beta) + ") holds no arcs");
      }
      std::size_t best = 0;
      for (const auto& [k, n] : pops) {
        if (n > best) {
          best = n;
          kappa_used = k;
        }
      }
    }
    auto z = arcs::arc_class_members(lad, alpha, beta, kappa_used, lambda, cap);
    if (z.empty()) throw InputError("empty arc class");
    if (size > 0 && z.size() > size) z.resize(size);
    return z;
  }

  json config() const {
    return {{"kappa", kappa}, {"lambda", lambda}, {"z_size", size}, {"z_cap", cap}};
  }
};

json z_json(const std::vector<arcs::ArcPoint>& z, std::int64_t kappa) {
  json pts = json::array();
  for (const auto& p : z) pts.push_back(arcs::to_json(p));
  return {{"kappa", kappa}, {"size", z.size()}, {"members", pts}};
}

std::vector<std::uint64_t> default_checkpoints(std::uint64_t limit) {
  std::vector<std::uint64_t> out;
  for (std::uint64_t n = 10; n < limit; n *= 10) out.push_back(n);
  out.push_back(limit);
  return out;
}

void write_text(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot open output file " + path);
  f << text;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Continued-fraction denominator census and ensemble toolkit", "zlab"};
  app.require_subcommand(1);
  app.fallthrough();

  Common common;
  common.threads = default_threads();
  app.add_option("--format", common.format, "csv|json")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--output,-o", common.output, "Write to a file instead of stdout");
  app.add_option("--constants", common.constants, "key = value file of constants");
  app.add_option("--threads", common.threads, "Worker threads (default $ZLAB_THREADS)");
  app.add_option("--seed", common.seed, "Seed for all sampling");
  app.add_flag("--reproducible", common.reproducible, "Report elapsed_seconds as 0");

  std::string command;
  std::function<Outcome()> handler;

  // census
  struct {
    std::string alphabet;
    std::uint64_t limit = 0;
    std::vector<std::uint64_t> checkpoints;
    std::string bitmap;
    bool multiplicity = false;
    std::size_t max_missing = 100;
    std::uint64_t budget = std::uint64_t{1} << 30;
  } cs;
  auto* census_cmd = app.add_subcommand("census", "Denominators of the finite-alphabet continued fractions");
  census_cmd->add_option("--alphabet", cs.alphabet)->required();
  census_cmd->add_option("--limit,-N", cs.limit)->required()->check(CLI::PositiveNumber);
  census_cmd->add_option("--checkpoints", cs.checkpoints, "Table rows (default powers of ten)")
      ->delimiter(',');
  census_cmd->add_option("--bitmap", cs.bitmap, "Write the ZDCB bitmap here");
  census_cmd->add_flag("--multiplicity", cs.multiplicity, "Also count r(d)");
  census_cmd->add_option("--max-missing", cs.max_missing, "Missing denominators listed");
  census_cmd->add_option("--memory-budget", cs.budget, "Bytes");
  census_cmd->callback([&] {
    command = "census";
    handler = [&] {
      Outcome o;
      const Alphabet a = Alphabet::parse(cs.alphabet);
      census::CensusOptions opt;
      opt.collect_multiplicity = cs.multiplicity;
      opt.threads = common.threads;
      opt.memory_budget_bytes = cs.budget;
      std::vector<std::uint64_t> points = cs.checkpoints.empty() ? default_checkpoints(cs.limit) : cs.checkpoints;
      for (auto p : points) {
        if (p < 1 || p > cs.limit) throw InputError("checkpoints must lie in [1, limit]");
      }
      o.config = {{"alphabet", a.to_string()}, {"N", cs.limit}, {"checkpoints", points},
                  {"multiplicity", cs.multiplicity}, {"max_missing", cs.max_missing}};
      const census::CensusResult r = census::enumerate_denominators(a, cs.limit, opt);
      std::vector<census::ProportionRow> rows;
      json table = json::array();
      for (auto p : points) {
        const std::uint64_t c = r.present.count_upto(p);
        rows.push_back({p, c, static_cast<double>(c) / static_cast<double>(p)});
        table.push_back({{"N", p}, {"count", c}, {"ratio", rows.back().ratio}});
      }
      const auto missing = census::missing_denominators(r);
      std::vector<std::uint64_t> listed(missing.begin(),
                                        missing.begin() + static_cast<std::ptrdiff_t>(std::min(missing.size(), cs.max_missing)));
      o.results = {{"count", r.count},
                   {"ratio", static_cast<double>(r.count) / static_cast<double>(cs.limit)},
                   {"table", table},
                   {"missing_count", missing.size()},
                   {"missing", listed}};
      if (r.multiplicity) {
        std::uint32_t best = 0;
        std::uint64_t arg = 0, words = 0;
        for (std::uint64_t d = 1; d <= cs.limit; ++d) {
          words += r.r(d);
          if (r.r(d) > best) {
            best = r.r(d);
            arg = d;
          }
        }
        o.results["multiplicity"] = {{"max", best}, {"argmax", arg}, {"total", words}};
      }
      o.diagnostics = {{"words_visited", r.words_visited},
                       {"bitmap_bytes", census::DenominatorBitmap::storage_bytes(cs.limit)}};
      if (!cs.bitmap.empty()) {
        std::ofstream f(cs.bitmap, std::ios::binary);
        if (!f) throw InputError("cannot open bitmap file " + cs.bitmap);
        r.present.write(f);
        o.diagnostics["bitmap"] = cs.bitmap;
      }
      o.csv = census::proportion_csv(rows);
      return o;
    };
  });

  // dimension
  struct {
    std::vector<std::string> alphabets;
    double tol = 1e-8;
    dimension::DimensionOptions opt;
  } ds;
  auto* dim_cmd = app.add_subcommand("dimension", "Hausdorff dimension of the Cantor set E_A");
  dim_cmd->add_option("--alphabet", ds.alphabets, "Repeat for a sweep")->required();
  dim_cmd->add_option("--tol", ds.tol)->check(CLI::PositiveNumber);
  dim_cmd->add_option("--initial-mesh", ds.opt.initial_mesh);
  dim_cmd->add_option("--max-mesh", ds.opt.max_mesh);
  dim_cmd->add_option("--max-iterations", ds.opt.max_power_iterations);
  dim_cmd->callback([&] {
    command = "dimension";
    handler = [&] {
      Outcome o;
      std::vector<dimension::DimensionEstimate> rows;
      json names = json::array();
      for (const auto& s : ds.alphabets) {
        const Alphabet a = Alphabet::parse(s);
        names.push_back(a.to_string());
        rows.push_back(dimension::hausdorff_dimension(a, ds.tol, ds.opt));
      }
      o.config = {{"alphabets", names}, {"tol", ds.tol}, {"initial_mesh", ds.opt.initial_mesh},
                  {"max_mesh", ds.opt.max_mesh}, {"max_iterations", ds.opt.max_power_iterations}};
      json res = json::array();
      std::size_t solves = 0;
      for (const auto& e : rows) {
        res.push_back({{"alphabet", e.alphabet.to_string()}, {"delta", e.delta},
                       {"gamma", e.gamma()}, {"residual", e.residual}, {"mesh", e.mesh_size},
                       {"mesh_drift", e.mesh_drift}});
        solves += static_cast<std::size_t>(e.eigen_solves);
      }
      o.results = res.size() == 1 ? res[0] : res;
      o.diagnostics = {{"eigen_solves", solves}};
      o.csv = dimension::sweep_csv(rows);
      return o;
    };
  });

  // ladder
  struct {
    double limit = 0;
    double eps0 = 0.1;
    std::string alphabet = "1,2";
    double q1 = 0;
    CLI::Option* eps_opt = nullptr;
    CLI::Option* q1_opt = nullptr;
  } ls;
  auto* ladder_cmd = app.add_subcommand("ladder", "Rung sequence N_j and Q_j");
  ladder_cmd->add_option("--limit,-N", ls.limit)->required()->check(CLI::PositiveNumber);
  ls.eps_opt = ladder_cmd->add_option("--eps0", ls.eps0);
  ladder_cmd->add_option("--alphabet", ls.alphabet);
  ls.q1_opt = ladder_cmd->add_option("--q1", ls.q1);
  ladder_cmd->callback([&] {
    command = "ladder";
    handler = [&] {
      Outcome o;
      const ConstantsFile file = read_constants(common.constants);
      ls.eps0 = pick(ls.eps_opt, ls.eps0, file, "eps0");
      ls.q1 = pick(ls.q1_opt, ls.q1, file, "q1");
      const Alphabet a = Alphabet::parse(ls.alphabet);
      const auto lad = ensemble::build_ladder(ls.limit, ls.eps0, a.max_letter(),
                                              ls.q1 > 0 ? std::optional<double>(ls.q1) : std::nullopt);
      const auto chk = ensemble::check_ladder(lad);
      o.config = {{"N", ls.limit}, {"eps0", ls.eps0}, {"alphabet", a.to_string()},
                  {"Q1_override", ls.q1 > 0 ? json(ls.q1) : json(nullptr)}};
      o.results = ensemble::to_json(lad);
      o.results["check"] = {{"pairs_checked", chk.pairs_checked}, {"violations", chk.violations},
                            {"max_branch_mismatch", chk.max_branch_mismatch},
                            {"top_exact", chk.top_exact}, {"increasing", chk.increasing}};
      std::ostringstream csv;
      csv << "j,N_j,Q_j\n";
      for (int j = lad.lowest_index(); j <= lad.highest_index(); ++j) {
        csv << j << ',' << format_double(lad.rung(j)) << ',';
        if (j >= 0) csv << format_double(lad.q(j));
        csv << '\n';
      }
      o.csv = csv.str();
      return o;
    };
  });

  // ensemble
  EnsembleArgs es;
  ParamArgs ps;
  std::size_t diagnose_cap = 100'000;
  std::string words_path;
  auto* ens_cmd = app.add_subcommand("ensemble", "Pre-ensembles, factorization and window diagnostics");
  es.add(ens_cmd);
  ps.add(ens_cmd);
  ens_cmd->add_option("--diagnose-cap", diagnose_cap, "Factor tuples walked by the diagnostics");
  ens_cmd->add_option("--words", words_path, "Write the words of Omega_N here");
  ens_cmd->callback([&] {
    command = "ensemble";
    handler = [&] {
      Outcome o;
      es.resolve(read_constants(common.constants));
      o.config = es.config(common.seed);
      o.config["parameters"] = ps.config();
      o.config["diagnose_cap"] = diagnose_cap;
      const Factored fx = factor(es, ps, common.seed);
      const auto& e = fx.ensemble;
      const auto win = ensemble::diagnose(e, es.constants, diagnose_cap);
      const auto tail = fx.factorization.tail(ps.product_cap);
      o.results = {{"ensemble", ensemble::to_json(e)},
                   {"parameters", parameters_json(fx.choice)},
                   {"factorization", ensemble::to_json(fx.factorization)},
                   {"windows", window_json(win)},
                   {"spread", spread_json(ensemble::spread_report(tail, e.alphabet.max_letter(), es.constants))}};
      if (!words_path.empty()) {
        const auto all = e.product(1, e.factor_count() + 1, ps.product_cap);
        std::ofstream f(words_path);
        if (!f) throw InputError("cannot open words file " + words_path);
        ensemble::write_word_list(f, all);
        o.diagnostics["words_written"] = all.size();
      }
      std::ostringstream csv;
      csv << "factor,window_lo,window_hi,population,cardinality\n";
      for (int j = 1; j <= e.factor_count(); ++j) {
        csv << j << ',' << format_double(e.windows[j - 1].first) << ','
            << format_double(e.windows[j - 1].second) << ',' << e.window_population[j - 1] << ','
            << e.factor(j).size() << '\n';
      }
      o.csv = csv.str();
      return o;
    };
  });

  // arcs
  EnsembleArgs as;
  struct {
    std::string mode = "label";
    std::vector<double> thetas;
    int grid = 64;
    int points = 0;
    double Q = 0;
    std::size_t triple_cap = 2'000'000;
    std::size_t product_cap = 2'000'000;
  } ar;
  auto* arcs_cmd = app.add_subcommand("arcs", "Arc labels and trigonometric sums over the ensemble");
  as.add(arcs_cmd);
  arcs_cmd->add_option("--mode", ar.mode, "label|profile|parseval|sigma")
      ->check(CLI::IsMember({"label", "profile", "parseval", "sigma"}));
  arcs_cmd->add_option("--theta", ar.thetas, "Frequencies in [0, 1)")->delimiter(',');
  arcs_cmd->add_option("--grid", ar.grid, "Profile points k / grid when no --theta")->check(CLI::PositiveNumber);
  arcs_cmd->add_option("--points", ar.points, "Quadrature points (0: 2 max norm + 1)");
  arcs_cmd->add_option("--Q", ar.Q, "Threshold of max{q, |l|}");
  arcs_cmd->add_option("--triple-cap", ar.triple_cap);
  arcs_cmd->add_option("--product-cap", ar.product_cap);
  arcs_cmd->callback([&] {
    command = "arcs";
    handler = [&] {
      Outcome o;
      as.resolve(read_constants(common.constants));
      o.config = as.config(common.seed);
      o.config["mode"] = ar.mode;
      if (ar.mode == "label") {
        const auto lad = as.ladder();
        o.config["thetas"] = ar.thetas;
        json res = json::array();
        std::ostringstream csv;
        csv << "theta,a,q,K,l,lambda,alpha,beta,kappa\n";
        for (double t : ar.thetas) {
          const auto p = arcs::label(t, lad);
          json j = arcs::to_json(p);
          j["cell_condition"] = arcs::cell_condition(p.alpha, p.beta, lad);
          res.push_back(j);
          csv << format_double(t) << ',' << p.a << ',' << p.q << ',' << format_double(p.K) << ','
              << p.l << ',' << format_double(p.lambda) << ',' << p.alpha << ',' << p.beta << ','
              << p.kappa << '\n';
        }
        o.results = res;
        o.csv = csv.str();
        return o;
      }
      const auto e = as.build(common.seed);
      const auto omega = e.product(1, e.factor_count() + 1, ar.product_cap);
      const auto h = arcs::NormHistogram::from_set(omega);
      const int points = ar.points > 0 ? ar.points : static_cast<int>(2 * h.max_norm() + 1);
      o.diagnostics = {{"omega_size", h.total()}, {"distinct_norms", h.distinct()},
                       {"max_norm", h.max_norm()}};
      if (ar.mode == "profile") {
        std::vector<double> thetas = ar.thetas;
        if (thetas.empty()) {
          for (int k = 0; k < ar.grid; ++k) thetas.push_back(static_cast<double>(k) / ar.grid);
        }
        o.config["thetas"] = thetas;
        json res = json::array();
        for (double t : thetas) {
          const auto s = arcs::trig_sum(h, t);
          res.push_back({{"theta", t}, {"re", s.real()}, {"im", s.imag()}, {"abs", std::abs(s)}});
        }
        o.results = res;
        o.csv = arcs::profile_csv(h, thetas);
      } else if (ar.mode == "parseval") {
        o.config["points"] = points;
        const auto r = arcs::parseval_check(h, points, e.ladder.limit);
        o.results = arcs::to_json(r);
        o.results["distinct_norms"] = h.distinct();
        o.results["omega_size"] = h.total();
        o.csv = metric_csv(o.results);
      } else {
        o.config["points"] = points;
        o.config["Q"] = ar.Q;
        const auto r = arcs::sigma_N_of_Q(h, e.ladder, ar.Q, points, ar.triple_cap);
        o.results = arcs::to_json(r);
        std::ostringstream csv;
        csv << "alpha,beta,value\n";
        for (const auto& [ab, v] : r.cells) csv << ab.first << ',' << ab.second << ',' << format_double(v) << '\n';
        o.csv = csv.str();
      }
      return o;
    };
  });

  // verify
  auto* verify_cmd = app.add_subcommand("verify", "Exhaustive checks of the lemmas");
  verify_cmd->require_subcommand(1);

  struct {
    std::string alphabet = "1,2,3,4";
    std::size_t max_len = 3;
    int max_d = -1;
  } l5;
  auto* lemma5 = verify_cmd->add_subcommand("lemma5", "Separation bound over all (D, T, W)");
  lemma5->add_option("--alphabet", l5.alphabet);
  lemma5->add_option("--max-len", l5.max_len, "Maximal |T| = |W|");
  lemma5->add_option("--max-d", l5.max_d, "Maximal |D| (default --max-len)");
  lemma5->callback([&] {
    command = "verify lemma5";
    handler = [&] {
      Outcome o;
      const Alphabet a = Alphabet::parse(l5.alphabet);
      const std::size_t md = l5.max_d < 0 ? l5.max_len : static_cast<std::size_t>(l5.max_d);
      o.config = {{"alphabet", a.to_string()}, {"max_len", l5.max_len}, {"max_d", md}};
      const auto s = separation_sweep(a, md, l5.max_len);
      o.results = {{"triples", s.triples}, {"violations", s.violations},
                   {"min_ratio", s.triples ? s.min_ratio.get_d() : 0.0}};
      if (s.first_violation) {
        o.results["first_violation"] = {(*s.first_violation)[0].to_string(),
                                        (*s.first_violation)[1].to_string(),
                                        (*s.first_violation)[2].to_string()};
      }
      o.csv = metric_csv(o.results);
      o.code = s.violations ? kCounterexample : kOk;
      return o;
    };
  });

  struct {
    std::string alphabet = "1,2,3";
    std::size_t max_len = 6;
  } ct;
  auto* cont = verify_cmd->add_subcommand("continuant", "Fusion identity and sandwich over word pairs");
  cont->add_option("--alphabet", ct.alphabet);
  cont->add_option("--max-len", ct.max_len);
  cont->callback([&] {
    command = "verify continuant";
    handler = [&] {
      Outcome o;
      const Alphabet a = Alphabet::parse(ct.alphabet);
      o.config = {{"alphabet", a.to_string()}, {"max_len", ct.max_len}};
      const auto s = continuant_sweep(a, ct.max_len);
      o.results = {{"pairs", s.pairs}, {"equality_violations", s.equality_violations},
                   {"inequality_violations", s.inequality_violations}};
      if (s.first_violation) {
        o.results["first_violation"] = {s.first_violation->first.to_string(),
                                        s.first_violation->second.to_string()};
      }
      o.csv = metric_csv(o.results);
      o.code = s.equality_violations + s.inequality_violations ? kCounterexample : kOk;
      return o;
    };
  });

  EnsembleArgs vs;
  ParamArgs vp;
  ZArgs vz;
  verifier::EnumerationOptions ven;
  auto* incl = verify_cmd->add_subcommand("inclusion", "N(g3) within M(g3) over every quadruple");
  vs.add(incl);
  vp.add(incl);
  vz.add(incl);
  incl->add_option("--cap", ven.cap, "Quadruple cap");
  incl->add_flag("--sample-on-overflow", ven.sample_on_overflow, "Sample past the cap instead of failing");

  EnsembleArgs cs2;
  ParamArgs cp;
  ZArgs cz;
  std::size_t card_cap = 1'000'000;
  int g3_index = -1;
  auto* card = verify_cmd->add_subcommand("cardinality", "|M(g3)| against |Omega2||Omega4||Z|");
  cs2.add(card);
  cp.add(card);
  cz.add(card);
  card->add_option("--cap", card_cap, "Quadruple cap per g3");
  card->add_option("--g3", g3_index, "Index into Omega^(3) (-1: all)");

  incl->callback([&] {
    command = "verify inclusion";
    handler = [&] {
      Outcome o;
      vs.resolve(read_constants(common.constants));
      o.config = vs.config(common.seed);
      o.config["parameters"] = vp.config();
      o.config["Z"] = vz.config();
      o.config["cap"] = ven.cap;
      o.config["sample_on_overflow"] = ven.sample_on_overflow;
      const Factored fx = factor(vs, vp, common.seed);
      std::int64_t kappa = 0;
      const auto z = vz.build(fx.ensemble.ladder, vp.alpha, vp.beta, kappa);
      verifier::EnumerationOptions en = ven;
      en.seed = common.seed;
      en.threads = static_cast<int>(census::resolve_threads(common.threads));
      const auto r = verifier::inclusion_report(fx.factorization, fx.ensemble.ladder,
                                                fx.ensemble.alphabet.max_letter(), z,
                                                fx.choice.used, en);
      o.results = verifier::to_json(r, fx.factorization);
      o.results["parameters"] = parameters_json(fx.choice);
      o.results["factorization"] = ensemble::to_json(fx.factorization);
      o.results["Z"] = z_json(z, kappa);
      o.csv = metric_csv(o.results);
      const bool refuted = (r.violations > 0 && r.hypotheses_hold()) || r.y_zero_mismatch > 0 ||
                           r.diagonal_failures > 0;
      o.code = refuted ? kCounterexample : kOk;
      return o;
    };
  });

  card->callback([&] {
    command = "verify cardinality";
    handler = [&] {
      Outcome o;
      cs2.resolve(read_constants(common.constants));
      o.config = cs2.config(common.seed);
      o.config["parameters"] = cp.config();
      o.config["Z"] = cz.config();
      o.config["cap"] = card_cap;
      o.config["g3"] = g3_index;
      const Factored fx = factor(cs2, cp, common.seed);
      std::int64_t kappa = 0;
      const auto z = cz.build(fx.ensemble.ladder, cp.alpha, cp.beta, kappa);
      const auto& omega3 = fx.factorization.omega[2];
      if (g3_index >= static_cast<int>(omega3.size())) throw InputError("--g3 out of range");
      json per = json::array();
      std::size_t measured = 0, predicted = 0, unequal = 0, below = 0, refuting = 0;
      const std::size_t lo = g3_index < 0 ? 0 : static_cast<std::size_t>(g3_index);
      const std::size_t hi = g3_index < 0 ? omega3.size() : lo + 1;
      for (std::size_t g = lo; g < hi; ++g) {
        const auto r = verifier::M_cardinality_check(fx.factorization, fx.ensemble.ladder,
                                                     fx.ensemble.alphabet.max_letter(), omega3[g], z,
                                                     card_cap);
        measured += r.measured;
        predicted += r.predicted;
        unequal += !r.equal;
        below += !r.lower_bound_holds;
        refuting += !r.equal && r.hypotheses_hold();
        json j = verifier::to_json(r, fx.factorization);
        j["g3"] = omega3[g].word.to_string();
        per.push_back(j);
      }
      o.results = {{"measured", measured},
                   {"predicted", predicted},
                   {"g3_checked", hi - lo},
                   {"unequal", unequal},
                   {"lower_bound_failures", below},
                   {"per_g3", per},
                   {"parameters", parameters_json(fx.choice)},
                   {"factorization", ensemble::to_json(fx.factorization)},
                   {"Z", z_json(z, kappa)}};
      o.csv = metric_csv(o.results);
      o.code = below > 0 || refuting > 0 ? kCounterexample : kOk;
      return o;
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    err << "error: " << e.what() << "\n\n" << app.help();
    return kInputError;
  }

  const auto start = std::chrono::steady_clock::now();
  try {
    Outcome o = handler();
    const double elapsed = common.reproducible
                               ? 0.0
                               : std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (common.format == "csv") {
      write_text(common.output, o.csv, out);
    } else {
      const json doc = {{"command", command},
                        {"config", o.config},
                        {"results", o.results},
                        {"diagnostics", o.diagnostics},
                        {"elapsed_seconds", elapsed}};
      write_text(common.output, doc.dump(2) + "\n", out);
    }
    return o.code;
  } catch (const InputError& e) {
    err << "input error: " << e.what() << '\n';
    return kInputError;
  } catch (const ResourceError& e) {
    err << "resource error: " << e.what() << '\n';
    return kResourceError;
  } catch (const ConvergenceError& e) {
    err << "convergence error: " << e.what() << '\n';
    return kResourceError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"zlab"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace zlab::cli
