#include "deepls/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace deepls {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

// Shortest text that parses back to the same double.
std::string format_double(double v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

double parse_double(std::string_view key, std::string_view text) {
  const std::string s = trim(text);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v)) {
    throw ConfigError("'" + std::string(key) + "': expected a number, got '" + s + "'");
  }
  return v;
}

long long parse_integer(std::string_view key, std::string_view text) {
  const std::string s = trim(text);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError("'" + std::string(key) + "': expected an integer, got '" + s + "'");
  }
  return v;
}

std::vector<int> parse_widths(std::string_view key, std::string_view text) {
  std::vector<int> widths;
  for (const std::string& part : split(text, ',')) {
    widths.push_back(static_cast<int>(parse_integer(key, part)));
  }
  return widths;
}

std::string join(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

std::string join(const std::vector<std::uint64_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

void write_file(const fs::path& path, const std::string& contents) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  os << contents;
  if (!os) throw IoError("failed writing '" + path.string() + "'");
}

json optional_number(const std::optional<double>& v) {
  if (!v || !std::isfinite(*v)) return nullptr;
  return *v;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json metrics_json(const ErrorReport& r, std::uint64_t seed, double wall_time_s) {
  json j;
  j["rel_l2_u"] = number_or_null(r.rel_l2_u);
  j["rel_h1semi_u"] = number_or_null(r.rel_h1semi_u);
  j["rel_energy_u"] = optional_number(r.rel_energy_u);
  j["rel_l2_sigma"] = optional_number(r.rel_l2_sigma);
  j["rel_functional"] = optional_number(r.rel_functional);
  j["denominator_kind"] = to_string(r.denominator_kind);
  j["eval_points"] = r.eval_points;
  j["seed"] = seed;
  j["wall_time_s"] = wall_time_s;
  return j;
}

std::string history_csv(const TrainResult& r) {
  std::string out = "iteration,lr,loss\n";
  for (std::size_t t = 0; t < r.loss_history.size(); ++t) {
    out += std::to_string(t) + ',' + format_double(r.lr_history[t]) + ',' + format_double(r.loss_history[t]) + '\n';
  }
  return out;
}

std::string solution_csv(const TrainResult& r, const ProblemSpec& problem, std::size_t n_eval) {
  const Partition grid = uniform_partition(problem.left, problem.right, n_eval);
  const std::vector<double> x = grid.midpoints();
  std::vector<double> u(x.size()), s(x.size());
  r.net.evaluate(Branch::Upper, x, u);
  r.net.evaluate(Branch::Lower, x, s);
  std::string out = "x,u_exact,u_pred,sigma_exact,sigma_pred\n";
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double ue = problem.exact ? problem.exact->u(x[i]) : std::numeric_limits<double>::quiet_NaN();
    const double se = problem.exact ? problem.exact->sigma(x[i]) : std::numeric_limits<double>::quiet_NaN();
    out += format_double(x[i]) + ',' + format_double(ue) + ',' + format_double(u[i]) + ',' + format_double(se) +
           ',' + format_double(s[i]) + '\n';
  }
  return out;
}

}  // namespace

std::string refine_to_string(const RefineSchedule& schedule) {
  if (const auto* local = std::get_if<RefineLocal>(&schedule)) {
    return "local:" + std::to_string(local->every) + ":" + format_double(local->fraction);
  }
  if (const auto* global = std::get_if<RefineGlobalOnce>(&schedule)) {
    return "global:" + std::to_string(global->at);
  }
  return "none";
}

RefineSchedule parse_refine(std::string_view text) {
  const std::string s = trim(text);
  if (s == "none" || s.empty()) return std::monostate{};
  const std::vector<std::string> parts = split(s, ':');
  if (parts[0] == "local" && parts.size() == 3) {
    const RefineLocal r{static_cast<long>(parse_integer("refine", parts[1])), parse_double("refine", parts[2])};
    if (r.every <= 0 || !(r.fraction > 0.0 && r.fraction <= 1.0)) {
      throw ConfigError("'refine': local needs every > 0 and 0 < fraction <= 1");
    }
    return r;
  }
  if (parts[0] == "global" && parts.size() == 2) {
    const RefineGlobalOnce r{static_cast<long>(parse_integer("refine", parts[1]))};
    if (r.at <= 0) throw ConfigError("'refine': global needs at > 0");
    return r;
  }
  throw ConfigError("'refine': expected none, local:<every>:<fraction> or global:<at>, got '" + s + "'");
}

void set_config_value(ExperimentConfig& c, std::string_view key, std::string_view value) {
  const std::string v = trim(value);
  try {
    if (key == "problem") {
      c.problem = v;
    } else if (key == "epsilon") {
      c.epsilon = parse_double(key, v);
    } else if (key == "k") {
      c.k = parse_double(key, v);
    } else if (key == "loss") {
      c.loss = parse_loss_kind(v);
    } else if (key == "alpha_d") {
      c.alpha_d = parse_double(key, v);
    } else if (key == "alpha_n") {
      c.alpha_n = parse_double(key, v);
    } else if (key == "boundary_scale") {
      c.boundary_scale = parse_boundary_scale(v);
    } else if (key == "activation") {
      c.activation = parse_activation(v);
    } else if (key == "init") {
      c.init = parse_init_scheme(v);
    } else if (key == "upper_widths") {
      c.upper_widths = parse_widths(key, v);
    } else if (key == "lower_widths") {
      c.lower_widths = parse_widths(key, v);
    } else if (key == "points") {
      const long long n = parse_integer(key, v);
      if (n < 1) throw ConfigError("'points' must be at least 1");
      c.points = static_cast<std::size_t>(n);
      c.h.reset();
    } else if (key == "h") {
      if (v == "none") {
        c.h.reset();
      } else {
        c.h = parse_double(key, v);
      }
    } else if (key == "iterations") {
      c.iterations = static_cast<long>(parse_integer(key, v));
    } else if (key == "lr") {
      c.lr = parse_double(key, v);
    } else if (key == "decay_every") {
      const long long k = parse_integer(key, v);
      if (k < 0) throw ConfigError("'decay_every' must be non-negative");
      c.decay_every = k == 0 ? std::nullopt : std::optional<long>(static_cast<long>(k));
    } else if (key == "refine") {
      c.refine = parse_refine(v);
    } else if (key == "seeds") {
      c.seeds.clear();
      for (const std::string& part : split(v, ',')) {
        const long long s = parse_integer(key, part);
        if (s < 0) throw ConfigError("'seeds' must be non-negative");
        c.seeds.push_back(static_cast<std::uint64_t>(s));
      }
    } else if (key == "denominator") {
      c.denominator = parse_denominator_kind(v);
    } else if (key == "eval_points") {
      const long long n = parse_integer(key, v);
      if (n < 0) throw ConfigError("'eval_points' must be non-negative");
      c.eval_points = static_cast<std::size_t>(n);
    } else if (key == "out") {
      c.out_dir = v;
    } else {
      throw ConfigError("unknown config key '" + std::string(key) + "'");
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

std::string to_config_text(const ExperimentConfig& c) {
  std::ostringstream os;
  os << "problem = " << c.problem << '\n';
  os << "epsilon = " << format_double(c.epsilon) << '\n';
  os << "k = " << format_double(c.k) << '\n';
  os << "loss = " << to_string(c.loss) << '\n';
  os << "alpha_d = " << format_double(c.alpha_d) << '\n';
  os << "alpha_n = " << format_double(c.alpha_n) << '\n';
  os << "boundary_scale = " << to_string(c.boundary_scale) << '\n';
  os << "activation = " << to_string(c.activation) << '\n';
  os << "init = " << to_string(c.init) << '\n';
  os << "upper_widths = " << join(c.upper_widths) << '\n';
  os << "lower_widths = " << join(c.lower_widths) << '\n';
  os << "points = " << c.points << '\n';
  os << "h = " << (c.h ? format_double(*c.h) : std::string("none")) << '\n';
  os << "iterations = " << c.iterations << '\n';
  os << "lr = " << format_double(c.lr) << '\n';
  os << "decay_every = " << c.decay_every.value_or(0) << '\n';
  os << "refine = " << refine_to_string(c.refine) << '\n';
  os << "seeds = " << join(c.seeds) << '\n';
  os << "denominator = " << to_string(c.denominator) << '\n';
  os << "eval_points = " << c.eval_points << '\n';
  os << "out = " << c.out_dir << '\n';
  return os.str();
}

ExperimentConfig parse_config_text(std::string_view text) {
  ExperimentConfig c;
  std::istringstream is{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    set_config_value(c, trim(std::string_view(t).substr(0, eq)), std::string_view(t).substr(eq + 1));
  }
  validate(c);
  return c;
}

ExperimentConfig load_config(const fs::path& file) {
  std::ifstream is(file, std::ios::binary);
  if (!is) throw IoError("cannot read config '" + file.string() + "'");
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_config_text(buf.str());
}

std::size_t training_points(const ExperimentConfig& c) {
  if (!c.h) return c.points;
  const ProblemSpec p = make_problem(c.problem, c.epsilon, c.k);
  return uniform_partition_h(p.left, p.right, *c.h).size();
}

void validate(const ExperimentConfig& c) {
  try {
    if (!is_known_problem(c.problem)) throw ConfigError("unknown problem '" + c.problem + "'");
    const ProblemSpec problem = make_problem(c.problem, c.epsilon, c.k);
    TwoBranchNet probe(Architecture{c.upper_widths, c.lower_widths}, c.activation);
    (void)probe;
    if (c.points < 1) throw ConfigError("points must be at least 1");
    const std::size_t n = training_points(c);
    if (c.loss == LossKind::LS && c.activation == Activation::LeakyReLU) {
      throw ConfigError("the LS loss needs a smooth activation (use sigmoid)");
    }
    if (c.loss == LossKind::Energy && problem.has_convection()) {
      throw ConfigError("the energy loss needs a problem without convection");
    }
    if (c.alpha_d < 0.0 || c.alpha_n < 0.0) throw ConfigError("alpha_d and alpha_n must be non-negative");
    TrainConfig train;
    train.iterations = c.iterations;
    train.lr0 = c.lr;
    train.halve_every = c.decay_every;
    train.refine = c.refine;
    train.seeds = c.seeds;
    validate(train);
    if (c.seeds.empty() || c.seeds.size() % 2 == 0) throw ConfigError("need an odd number of seeds");
    if (c.eval_points != 0 && c.eval_points < 10 * n) {
      throw ConfigError("eval_points must be at least 10x the number of training points");
    }
    if (c.out_dir.empty()) throw ConfigError("output directory is empty");
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

bool is_preset(std::string_view name) {
  return name == "table1" || name == "table2" || name == "table3" || name == "table4" || name == "table5";
}

ExperimentConfig preset(std::string_view name, std::string_view mode) {
  ExperimentConfig c;
  c.out_dir = std::string(name);
  if (name == "table1") {
    c.problem = "poisson";
    c.loss = LossKind::FOSLS;
    c.activation = Activation::LeakyReLU;
    c.upper_widths = c.lower_widths = {24, 14, 14, 1};
    c.points = 800;
    c.iterations = 10000;
    c.lr = 5e-4;
  } else if (name == "table2") {
    c = preset("table1");
    c.out_dir = "table2";
    c.activation = Activation::Sigmoid;
    c.points = 200;
  } else if (name == "table3" || name == "table4") {
    c.loss = LossKind::FOSLS;
    c.activation = Activation::Sigmoid;
    c.upper_widths = c.lower_widths = {32, 24, 24, 1};
    c.iterations = 20000;
    c.lr = 1e-3;
    c.decay_every = 5000;
    if (name == "table3") {
      c.problem = "reaction-diffusion";
      c.epsilon = 0.01;
      c.points = 2000;
    } else {
      c.problem = "interface";
      c.k = 10.0;
      c.h = 0.002;
    }
    c.out_dir = std::string(name);
  } else if (name == "table5") {
    c = preset("table1");
    c.denominator = DenominatorKind::ComputedPair;
    c.points = 200;
    if (mode == "local") {
      c.refine = RefineLocal{2000, 0.1};
    } else if (mode == "global") {
      c.refine = RefineGlobalOnce{5000};
    } else if (mode == "uniform") {
      c.points = 292;
    } else {
      throw ConfigError("table5 mode must be local, global or uniform");
    }
    c.out_dir = "table5-" + std::string(mode);
  } else {
    throw ConfigError("unknown preset '" + std::string(name) + "'");
  }
  return c;
}

std::size_t worker_limit() {
  if (const char* env = std::getenv("DEEPLS_WORKERS")) {
    const long long n = std::atoll(env);
    if (n > 0) return static_cast<std::size_t>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

ReplicaSetup replica_setup(const ExperimentConfig& c) {
  validate(c);
  ReplicaSetup setup;
  setup.arch = Architecture{c.upper_widths, c.lower_widths};
  setup.activation = c.activation;
  setup.init = c.init;
  setup.problem = make_problem(c.problem, c.epsilon, c.k);
  setup.partition = c.h ? uniform_partition_h(setup.problem.left, setup.problem.right, *c.h)
                        : uniform_partition(setup.problem.left, setup.problem.right, c.points);
  setup.loss = LossSpec{c.loss, c.alpha_d, c.alpha_n, c.boundary_scale};
  setup.train.iterations = c.iterations;
  setup.train.lr0 = c.lr;
  setup.train.halve_every = c.decay_every;
  setup.train.refine = c.refine;
  setup.train.seeds = c.seeds;
  setup.report.flux_trained = c.loss == LossKind::FOSLS;
  setup.report.denominator = c.denominator;
  setup.report.eval_points = c.eval_points > 0 ? c.eval_points : default_eval_points(setup.partition.size());
  setup.report.functional = LossSpec{LossKind::FOSLS, c.alpha_d, c.alpha_n, c.boundary_scale};
  setup.workers = worker_limit();
  return setup;
}

ExperimentOutcome run_experiment(const ExperimentConfig& c) {
  const ReplicaSetup setup = replica_setup(c);

  const fs::path out(c.out_dir);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create output directory '" + out.string() + "': " + ec.message());
  write_file(out / "config.txt", to_config_text(c));

  ExperimentOutcome outcome;
  outcome.replicated = run_replicated(setup);
  const ReplicatedResult& rr = outcome.replicated;

  for (std::size_t i = 0; i < rr.replicas.size(); ++i) {
    const TrainResult& r = rr.replicas[i];
    const fs::path dir = out / ("replica_" + std::to_string(r.seed));
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
    write_file(dir / "history.csv", history_csv(r));
    write_file(dir / "metrics.json", metrics_json(rr.reports[i], r.seed, r.wall_time_s).dump(2) + "\n");
  }

  const TrainResult& best = rr.selected();
  outcome.report = rr.selected_report();
  outcome.seed = best.seed;
  outcome.wall_time_s = best.wall_time_s;
  outcome.final_points = best.partition.size();
  write_file(out / "metrics.json", metrics_json(outcome.report, best.seed, best.wall_time_s).dump(2) + "\n");
  write_file(out / "solution.csv", solution_csv(best, setup.problem, setup.report.eval_points));
  if (!std::holds_alternative<std::monostate>(c.refine)) {
    std::ostringstream os;
    write_csv(os, best.partition);
    write_file(out / "partition.csv", os.str());
  }
  return outcome;
}

std::string ComparisonTable::to_text() const {
  std::vector<std::size_t> width(header.size(), 0);
  for (std::size_t j = 0; j < header.size(); ++j) width[j] = header[j].size();
  for (const auto& row : rows) {
    for (std::size_t j = 0; j < row.size(); ++j) width[j] = std::max(width[j], row[j].size());
  }
  auto line = [&](const std::vector<std::string>& cells) {
    std::string s;
    for (std::size_t j = 0; j < cells.size(); ++j) {
      s += (j ? " | " : "") + cells[j] + std::string(width[j] - cells[j].size(), ' ');
    }
    return s + '\n';
  };
  std::string out = line(header);
  std::size_t total = 0;
  for (std::size_t w : width) total += w;
  out += std::string(total + 3 * (width.size() - 1), '-') + '\n';
  for (const auto& row : rows) out += line(row);
  return out;
}

std::string ComparisonTable::to_csv() const {
  auto line = [](const std::vector<std::string>& cells) {
    std::string s;
    for (std::size_t j = 0; j < cells.size(); ++j) s += (j ? "," : "") + cells[j];
    return s + '\n';
  };
  std::string out = line(header);
  for (const auto& row : rows) out += line(row);
  return out;
}

ComparisonTable compare_runs(const std::vector<fs::path>& dirs) {
  if (dirs.empty()) throw ConfigError("compare: no run directories given");
  static const char* const kColumns[] = {"rel_l2_u", "rel_h1semi_u", "rel_energy_u", "rel_l2_sigma",
                                         "rel_functional"};
  ComparisonTable table;
  table.header.push_back("run");
  for (const char* col : kColumns) table.header.emplace_back(col);
  for (const fs::path& dir : dirs) {
    const fs::path file = dir / "metrics.json";
    std::ifstream is(file);
    if (!is) throw IoError("cannot read '" + file.string() + "'");
    json j;
    try {
      is >> j;
    } catch (const json::exception& e) {
      throw IoError("malformed '" + file.string() + "': " + e.what());
    }
    std::vector<std::string> row;
    std::string name = dir.filename().string();
    if (name.empty()) name = dir.parent_path().filename().string();
    row.push_back(name);
    for (const char* col : kColumns) {
      const auto it = j.find(col);
      row.push_back(it == j.end() || it->is_null() ? std::string("---") : it->dump());
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace deepls
