// fracpos: command line front end for the positivity experiments.
//
// Exit codes: 0 success, 1 numerical failure, 2 usage or parse error.
// Environment: FRACPOS_OUT_DIR (output directory for `reproduce`),
// FRACPOS_THREADS (worker count for `reproduce`), FRACPOS_MESH_DIR
// (directory holding the imported L-shape and disk meshes).

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "fracpos/fracpos.hpp"

#ifndef FRACPOS_DEFAULT_MESH_DIR
#define FRACPOS_DEFAULT_MESH_DIR "data/meshes"
#endif

namespace fs = std::filesystem;
using namespace fracpos;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// --- formatting ---------------------------------------------------------------

std::string num(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

/// Three significant digits with a compact exponent, e.g. 1.96e-4.
std::string sig3(double x) {
  if (!std::isfinite(x)) return num(x);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", x);
  std::string s(buf);
  const auto e = s.find('e');
  std::string mant = s.substr(0, e);
  const int exp = std::stoi(s.substr(e + 1));
  return mant + "e" + std::to_string(exp);
}

std::string fixed3(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", x);
  return buf;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// --- configuration --------------------------------------------------------------

/// Flat `key = value` text with `[section]` headers; keys become
/// "section.key". `#` and `;` start comments.
class Config {
 public:
  static Config parse(std::istream& in, const std::string& where) {
    Config cfg;
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto cut = line.find_first_of("#;");
      if (cut != std::string::npos) line.erase(cut);
      const std::string t = trim(line);
      if (t.empty()) continue;
      if (t.front() == '[') {
        if (t.back() != ']' || t.size() < 3) {
          throw ParseError(where + ":" + std::to_string(lineno) + ": bad section header");
        }
        section = trim(t.substr(1, t.size() - 2));
        continue;
      }
      const auto eq = t.find('=');
      if (eq == std::string::npos) {
        throw ParseError(where + ":" + std::to_string(lineno) + ": expected key = value");
      }
      const std::string key = trim(t.substr(0, eq));
      if (key.empty()) throw ParseError(where + ":" + std::to_string(lineno) + ": empty key");
      cfg.set((section.empty() ? "" : section + ".") + key, trim(t.substr(eq + 1)));
    }
    return cfg;
  }

  static Config load(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw ParseError("cannot open config " + file.string());
    return parse(in, file.string());
  }

  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }

  [[nodiscard]] std::optional<std::string> get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
  }

  [[nodiscard]] std::string canonical() const {
    std::string out;
    for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
    return out;
  }

 private:
  static std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
  }

  std::map<std::string, std::string> values_;
};

double parse_double(const std::string& s, const std::string& what) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) {
    throw UsageError(what + ": not a number: '" + s + "'");
  }
  return v;
}

std::vector<double> parse_list(const std::string& s, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(std::remove_if(item.begin(), item.end(), ::isspace), item.end());
    if (!item.empty()) out.push_back(parse_double(item, what));
  }
  if (out.empty()) throw UsageError(what + ": empty list");
  return out;
}

std::vector<int> parse_int_list(const std::string& s, const std::string& what) {
  std::vector<int> out;
  for (double v : parse_list(s, what)) {
    if (v != std::floor(v)) throw UsageError(what + ": expected integers");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

// --- shared option groups -------------------------------------------------------------

struct OperatorOptions {
  std::string alpha;    // single exponent or comma list (multi-term)
  std::string weights;  // multi-term weights, leading 1
  std::string mu;       // distributed density name
  int order = FracOperator::kDefaultQuadratureOrder;

  void attach(CLI::App* app) {
    app->add_option("--alpha", alpha, "exponent, or comma list for a multi-term operator");
    app->add_option("--weights", weights, "multi-term weights (default all 1)");
    app->add_option("--mu", mu, "distributed order density: exp, one, linear");
    app->add_option("--order", order, "Gauss-Legendre order for --mu");
  }

  [[nodiscard]] FracOperator build() const {
    if (!mu.empty()) {
      if (!alpha.empty()) throw UsageError("--alpha and --mu are exclusive");
      return distributed_by_name(mu, order);
    }
    if (alpha.empty()) throw UsageError("need --alpha or --mu");
    const auto exps = parse_list(alpha, "--alpha");
    std::vector<double> ws(exps.size(), 1.0);
    if (!weights.empty()) ws = parse_list(weights, "--weights");
    if (ws.size() != exps.size()) throw UsageError("--weights must match --alpha");
    std::vector<FracTerm> terms;
    for (std::size_t k = 0; k < exps.size(); ++k) terms.push_back({ws[k], exps[k]});
    return FracOperator::multi(std::move(terms));
  }

  static FracOperator distributed_by_name(const std::string& name, int order) {
    if (name == "exp") {
      return FracOperator::distributed([](double a) { return std::exp(a); }, name, order);
    }
    if (name == "one") return FracOperator::distributed([](double) { return 1.0; }, name, order);
    if (name == "linear") {
      return FracOperator::distributed([](double a) { return 1.0 + a; }, name, order);
    }
    throw UsageError("unknown density '" + name + "' (exp, one, linear)");
  }
};

struct MeshOptions {
  std::string family;
  int m = 10;
  double eps = 1e-3;
  std::string node, ele;

  void attach(CLI::App* app, bool files) {
    app->add_option("--family", family, "uniform, nondelaunay-b, nondelaunay-e, equilateral");
    app->add_option("--M", m, "subdivision count");
    app->add_option("--eps", eps, "offset for nondelaunay-e");
    if (files) {
      app->add_option("--node", node, "Triangle .node file");
      app->add_option("--ele", ele, "Triangle .ele file");
    }
  }

  [[nodiscard]] TriMesh build() const {
    if (!node.empty() || !ele.empty()) {
      if (node.empty() || ele.empty()) throw UsageError("--node and --ele go together");
      return load_triangle_format(node, ele);
    }
    if (family.empty()) throw UsageError("need --family or --node/--ele");
    return make_family(family, m, eps);
  }

  static TriMesh make_family(const std::string& family, int m, double eps) {
    if (family == "uniform") return uniform_square(m);
    if (family == "nondelaunay-b") return nondelaunay_b(m);
    if (family == "nondelaunay-e") return nondelaunay_e(m, eps);
    if (family == "equilateral") return equilateral(m);
    throw UsageError("unknown mesh family '" + family + "'");
  }
};

struct ScanOptions {
  double lo = 1e-8;
  double hi = 1e2;
  int per_decade = 25;
  std::optional<double> tol;

  void attach(CLI::App* app) {
    app->add_option("--lo", lo, "scan start");
    app->add_option("--hi", hi, "scan end");
    app->add_option("--per-decade", per_decade, "scan points per decade");
    app->add_option("--tol", tol, "negativity tolerance (default 1e-12 N)");
  }

  [[nodiscard]] ScanSpec spec() const {
    if (!(lo > 0.0 && hi > lo) || per_decade < 1) {
      throw UsageError("scan range must satisfy 0 < lo < hi and per-decade >= 1");
    }
    return {lo, hi, per_decade};
  }
};

FemMethod method_of(const std::string& s) {
  try {
    return parse_method(s);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

void write_header(std::ostream& out, const std::string& config_text) {
  out << "# fracpos " << kVersion << " config " << hex(fnv1a(config_text)) << "\n";
}

/// Header hash over the effective arguments of a direct subcommand.
std::string argument_text(const CLI::App* app) {
  std::string text = app->get_name() + "\n";
  for (const auto* opt : app->get_options()) {
    if (opt->count() == 0) continue;
    text += opt->get_name() + "=";
    for (const auto& r : opt->results()) text += r + ",";
    text += "\n";
  }
  return text;
}

// --- thread pool ---------------------------------------------------------------------

int thread_count(std::optional<int> requested) {
  int n = 0;
  if (requested) {
    n = *requested;
  } else if (const char* env = std::getenv("FRACPOS_THREADS")) {
    n = static_cast<int>(parse_double(env, "FRACPOS_THREADS"));
  } else {
    n = static_cast<int>(std::thread::hardware_concurrency());
  }
  return std::clamp(n, 1, 64);
}

/// Runs jobs[0..n) on at most `workers` threads; each job writes its own slot.
void run_pool(std::size_t jobs, int workers, const std::function<void(std::size_t)>& job) {
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < jobs; k = next++) job(k);
  };
  const int n = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(workers), jobs));
  std::vector<std::thread> pool;
  for (int i = 1; i < n; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
}

// --- mesh ------------------------------------------------------------------------------

std::string delaunay_line(const TriMesh& mesh) {
  const auto edges = delaunay_edges(mesh);
  int bad = 0, vertical = 0;
  for (const auto& e : edges) {
    if (e.is_delaunay) continue;
    ++bad;
    const auto& a = mesh.nodes[e.endpoints.first];
    const auto& b = mesh.nodes[e.endpoints.second];
    if (std::abs(a.x - b.x) < 1e-12) ++vertical;
  }
  if (bad == 0) return "delaunay: true";
  if (vertical == bad) return "delaunay: false (vertical edges)";
  return "delaunay: false (" + std::to_string(bad) + " edges)";
}

void mesh_report(std::ostream& out, const TriMesh& mesh) {
  const auto normal = is_normal(mesh);
  out << "nodes: " << mesh.node_count() << "\n";
  out << "triangles: " << mesh.triangle_count() << "\n";
  out << "interior: " << mesh.interior_count << "\n";
  out << "h: " << fixed3(mesh_size(mesh)) << "\n";
  if (mesh.h0) out << "h0: " << fixed3(*mesh.h0) << "\n";
  out << "area: " << num(total_area(mesh)) << "\n";
  out << delaunay_line(mesh) << "\n";
  out << "normal: " << (normal.normal ? "true" : "false");
  if (normal.witness) out << " (witness node " << *normal.witness + 1 << ")";
  out << "\n";
}

// --- output sinks ----------------------------------------------------------------------

class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw UsageError("cannot write " + path);
    }
  }
  std::ostream& out() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

 private:
  std::ofstream file_;
};

std::vector<double> times_from(const std::string& list, const ScanOptions& scan, bool use_scan) {
  if (!list.empty()) return parse_list(list, "--t");
  if (use_scan) return scan.spec().grid();
  throw UsageError("need --t or a scan range");
}

// --- reproduce ------------------------------------------------------------------------

struct ReproSettings {
  int table = 0;
  int figure = 0;
  std::vector<int> levels;
  double h0 = 0.1;
  ScanSpec scan;
  std::optional<double> tol;
  fs::path out_dir = "out";
  fs::path mesh_dir = FRACPOS_DEFAULT_MESH_DIR;
  int threads = 1;
  bool long_run = false;
};

struct OperatorColumn {
  std::string label;
  FracOperator op;
};

std::vector<OperatorColumn> table_operators(int table) {
  const auto dist = OperatorOptions::distributed_by_name("exp", FracOperator::kDefaultQuadratureOrder);
  std::vector<OperatorColumn> ops = {{"single(0.5)", FracOperator::single(0.5)}};
  const bool full = table == 1 || table == 3 || table == 4;
  if (full) ops.push_back({"single(0.75)", FracOperator::single(0.75)});
  ops.push_back({"multi(0.5,0.2)", FracOperator::multi({{1.0, 0.5}, {1.0, 0.2}})});
  if (full) ops.push_back({"multi(0.75,0.2)", FracOperator::multi({{1.0, 0.75}, {1.0, 0.2}})});
  ops.push_back({"dist(exp)", dist});
  return ops;
}

std::vector<FemMethod> table_methods(int table) {
  if (table == 2) return {FemMethod::SG, FemMethod::LM, FemMethod::FVE};
  return {FemMethod::SG, FemMethod::FVE};
}

TriMesh table_mesh(int table, int level, const ReproSettings& s) {
  switch (table) {
    case 1: return uniform_square(level);
    case 2: return nondelaunay_b(level);
    case 3:
    case 4: {
      const std::string stem = (table == 3 ? "lshape_" : "disk_") + std::to_string(level);
      return load_triangle_format(s.mesh_dir / (stem + ".node"), s.mesh_dir / (stem + ".ele"));
    }
    case 5: return nondelaunay_e(level, 1e-3);
    default: throw UsageError("table must be 1..5");
  }
}

std::vector<int> default_levels(int table) {
  switch (table) {
    case 1: return {10};
    case 2: return {5};
    case 3:
    case 4: return {1};
    default: return {10};
  }
}

/// Levels whose dense systems take hours to scan need the long-run flag.
constexpr int kLongRunInteriorNodes = 1000;

std::string cell_text(const ThresholdReport& r) {
  if (r.found()) return sig3(r.value);
  return "FAIL(" + std::string(to_string(r.status)) + ")";
}

int reproduce_table(const ReproSettings& s, const std::string& config_text) {
  const auto ops = table_operators(s.table);
  const auto methods = table_methods(s.table);
  const auto levels = s.levels.empty() ? default_levels(s.table) : s.levels;

  struct Level {
    std::optional<TriMesh> mesh;
    std::string error;
  };
  std::vector<Level> meshes(levels.size());
  for (std::size_t l = 0; l < levels.size(); ++l) {
    try {
      meshes[l].mesh = table_mesh(s.table, levels[l], s);
      if (meshes[l].mesh->interior_count > kLongRunInteriorNodes && !s.long_run) {
        meshes[l].error = "long run; pass --long";
      }
    } catch (const UsageError&) {
      throw;
    } catch (const std::exception& e) {
      meshes[l].error = e.what();
    }
  }

  // systems per (level, method), then cells per (level, method, op, SD/FD)
  const std::size_t nm = methods.size(), no = ops.size();
  std::vector<std::optional<FemSystem>> systems(levels.size() * nm);
  std::vector<std::string> system_error(systems.size());
  run_pool(systems.size(), s.threads, [&](std::size_t k) {
    const auto& lv = meshes[k / nm];
    if (!lv.mesh || !lv.error.empty()) {
      system_error[k] = lv.error;
      return;
    }
    try {
      systems[k] = build_fem_system(*lv.mesh, methods[k % nm]);
    } catch (const std::exception& e) {
      system_error[k] = e.what();
    }
  });

  std::vector<std::string> cells(systems.size() * no * 2);
  run_pool(cells.size(), s.threads, [&](std::size_t k) {
    const std::size_t sys_index = k / (no * 2);
    const std::size_t op_index = (k / 2) % no;
    const bool fully = k % 2 == 1;
    if (!systems[sys_index]) {
      cells[k] = "FAIL(" + system_error[sys_index] + ")";
      return;
    }
    try {
      const auto& sys = *systems[sys_index];
      const auto& op = ops[op_index].op;
      cells[k] = cell_text(fully ? fd_positivity_threshold(sys, op, s.scan, s.tol)
                                 : positivity_threshold(sys, op, s.scan, s.tol));
    } catch (const std::exception& e) {
      cells[k] = std::string("FAIL(") + e.what() + ")";
    }
  });

  fs::create_directories(s.out_dir);
  const fs::path file = s.out_dir / ("table" + std::to_string(s.table) + ".csv");
  std::ostringstream csv;
  write_header(csv, config_text);
  csv << "method,level,h0,h,operator,semidiscrete,fully_discrete\n";
  bool any_fail = false;
  for (std::size_t l = 0; l < levels.size(); ++l) {
    const auto& mesh = meshes[l].mesh;
    const std::string h0 = mesh && mesh->h0 ? fixed3(*mesh->h0) : "";
    const std::string h = mesh ? fixed3(mesh_size(*mesh)) : "";
    for (std::size_t m = 0; m < nm; ++m) {
      for (std::size_t o = 0; o < no; ++o) {
        const std::size_t base = ((l * nm + m) * no + o) * 2;
        csv << to_string(methods[m]) << "," << levels[l] << "," << h0 << "," << h << ","
            << ops[o].label << "," << cells[base] << "," << cells[base + 1] << "\n";
        any_fail = any_fail || cells[base].starts_with("FAIL") ||
                   cells[base + 1].starts_with("FAIL");
      }
    }
  }
  std::ofstream(file) << csv.str();
  std::cout << csv.str();
  std::cerr << "wrote " << file.string() << "\n";
  return any_fail ? 1 : 0;
}

int reproduce_figure(const ReproSettings& s, const std::string& config_text) {
  fs::create_directories(s.out_dir);
  const fs::path file = s.out_dir / ("figure" + std::to_string(s.figure) + ".csv");
  std::ostringstream csv;
  write_header(csv, config_text);
  const int m = static_cast<int>(std::lround(1.0 / s.h0));
  const auto grid = s.scan.grid();
  bool ok = true;

  if (s.figure == 2) {
    const TriMesh mesh = uniform_square(m);
    const std::vector<FemMethod> methods = {FemMethod::SG, FemMethod::LM, FemMethod::FVE};
    const auto ops = table_operators(2);  // single(0.5), multi(0.5,0.2), dist(exp)
    std::vector<FemSystem> systems(methods.size());
    run_pool(methods.size(), s.threads,
             [&](std::size_t k) { systems[k] = build_fem_system(mesh, methods[k]); });
    std::vector<std::vector<std::pair<double, double>>> curves(methods.size() * ops.size());
    run_pool(curves.size(), s.threads, [&](std::size_t k) {
      curves[k] = min_entry_curve(systems[k % methods.size()], ops[k / methods.size()].op, grid);
    });
    csv << "operator,t,SG,LM,FVE\n";
    std::vector<double> lowest(methods.size(), 0.0);
    for (std::size_t o = 0; o < ops.size(); ++o) {
      for (std::size_t i = 0; i < grid.size(); ++i) {
        csv << ops[o].label << "," << num(grid[i]);
        for (std::size_t k = 0; k < methods.size(); ++k) {
          const double v = curves[o * methods.size() + k][i].second;
          lowest[k] = std::min(lowest[k], v);
          csv << "," << num(v);
        }
        csv << "\n";
      }
    }
    std::ofstream(file) << csv.str();
    for (std::size_t k = 0; k < methods.size(); ++k) {
      std::cout << to_string(methods[k]) << " min entry: " << num(lowest[k]) << "\n";
    }
    std::cout << "LM nonnegative: " << (lowest[1] >= -1e-12 ? "true" : "false") << "\n";
    ok = lowest[1] >= -1e-12;
  } else if (s.figure == 3) {
    const TriMesh mesh = nondelaunay_e(m, 1e-3);
    const FemSystem lm = build_fem_system(mesh, FemMethod::LM);
    const auto heat = FracOperator::single(1.0);
    const auto half = FracOperator::single(0.5);
    csv << "t,heat,subdiffusion,first_step\n";
    std::vector<std::array<double, 3>> rows(grid.size());
    run_pool(grid.size(), s.threads, [&](std::size_t i) {
      const double t = grid[i];
      rows[i] = {solution_min_entry(lm, heat, t), solution_min_entry(lm, half, t),
                 first_step_min_entry(lm, half, t)};
    });
    double sub_max = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid.size(); ++i) {
      csv << num(grid[i]) << "," << num(rows[i][0]) << "," << num(rows[i][1]) << ","
          << num(rows[i][2]) << "\n";
      sub_max = std::max(sub_max, rows[i][1]);
    }
    std::ofstream(file) << csv.str();
    std::cout << "heat final min entry: " << num(rows.back()[0]) << "\n";
    std::cout << "subdiffusion max of min entry: " << num(sub_max) << "\n";
    std::cout << "subdiffusion threshold: "
              << (sub_max < -default_tolerance(lm) ? "none" : "exists") << "\n";
  } else {
    throw UsageError("figure must be 2 or 3");
  }
  std::cerr << "wrote " << file.string() << "\n";
  return ok ? 0 : 1;
}

// --- main ------------------------------------------------------------------------------

int run(int argc, char** argv) {
  CLI::App app{"Positivity of fractional diffusion discretizations"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  // mesh
  auto* mesh = app.add_subcommand("mesh", "generate or inspect triangulations");
  mesh->require_subcommand(1);
  MeshOptions gen_opts;
  std::string gen_out;
  auto* mesh_gen = mesh->add_subcommand("gen", "build a structured mesh family");
  gen_opts.attach(mesh_gen, false);
  mesh_gen->add_option("--out", gen_out, "write <stem>.node and <stem>.ele");
  MeshOptions info_opts;
  auto* mesh_info = mesh->add_subcommand("info", "report properties of a mesh");
  info_opts.attach(mesh_info, true);

  // kernel
  auto* kernel = app.add_subcommand("kernel", "scalar kernels");
  kernel->require_subcommand(1);
  OperatorOptions ul_op;
  double ul_lambda = 1.0;
  std::string ul_t, ul_out;
  ScanOptions ul_scan;
  bool ul_grid = false;
  auto* k_ulambda = kernel->add_subcommand("ulambda", "u_lambda(t) by contour quadrature");
  ul_op.attach(k_ulambda);
  k_ulambda->add_option("--lambda", ul_lambda, "eigenvalue");
  k_ulambda->add_option("--t", ul_t, "time or comma list");
  k_ulambda->add_flag("--grid", ul_grid, "use the log grid --lo..--hi instead of --t");
  ul_scan.attach(k_ulambda);
  k_ulambda->add_option("--out", ul_out, "CSV file (default stdout)");

  OperatorOptions w_op;
  double w_tau = 1.0;
  int w_n = 10;
  std::string w_out;
  auto* k_weights = kernel->add_subcommand("weights", "convolution quadrature weights");
  w_op.attach(k_weights);
  k_weights->add_option("--tau", w_tau, "step size");
  k_weights->add_option("--n", w_n, "last index");
  k_weights->add_option("--out", w_out, "CSV file (default stdout)");

  double ml_alpha = 0.5;
  std::string ml_x, ml_out;
  auto* k_mittag = kernel->add_subcommand("mittag", "Mittag-Leffler E_alpha(x)");
  k_mittag->add_option("--alpha", ml_alpha, "order")->required();
  k_mittag->add_option("--x", ml_x, "argument or comma list")->required();
  k_mittag->add_option("--out", ml_out, "CSV file (default stdout)");

  // semi / fully share mesh, method, operator and scan options
  struct Study {
    MeshOptions mesh;
    OperatorOptions op;
    ScanOptions scan;
    std::string method = "SG";
    std::string out;
  };
  auto attach_study = [](CLI::App* sub, Study& st) {
    st.mesh.attach(sub, true);
    st.op.attach(sub);
    st.scan.attach(sub);
    sub->add_option("--method", st.method, "SG, LM or FVE");
    sub->add_option("--out", st.out, "output file (default stdout)");
  };

  auto* semi = app.add_subcommand("semi", "semidiscrete solution matrix E(t)");
  semi->require_subcommand(1);
  Study s_curve, s_thr, s_cert;
  auto* semi_curve = semi->add_subcommand("curve", "smallest entry of E(t) on the scan grid");
  attach_study(semi_curve, s_curve);
  auto* semi_thr = semi->add_subcommand("threshold", "positivity threshold t0");
  attach_study(semi_thr, s_thr);
  auto* semi_cert = semi->add_subcommand("certify", "structural positivity certificates");
  s_cert.mesh.attach(semi_cert, true);
  semi_cert->add_option("--method", s_cert.method, "SG, LM or FVE");

  auto* fully = app.add_subcommand("fully", "fully discrete solution matrices E_{n,tau}");
  fully->require_subcommand(1);
  Study f_thr, f_conv, f_con;
  auto* fully_thr = fully->add_subcommand("threshold", "positivity threshold tau0 of E_{1,tau}");
  attach_study(fully_thr, f_thr);
  double conv_t = 0.1;
  int conv_from = 4, conv_to = 10;
  auto* fully_conv = fully->add_subcommand("converge", "error of E_{n,t/n} against E(t)");
  attach_study(fully_conv, f_conv);
  fully_conv->add_option("--t", conv_t, "final time");
  fully_conv->add_option("--from", conv_from, "smallest log2 n");
  fully_conv->add_option("--to", conv_to, "largest log2 n");
  std::string con_taus = "1e-4,1e-2,1";
  int con_n = 100;
  auto* fully_con = fully->add_subcommand("contractivity", "max-norm of E_{n,tau}");
  attach_study(fully_con, f_con);
  fully_con->add_option("--taus", con_taus, "step sizes");
  fully_con->add_option("--n", con_n, "largest step count");

  // reproduce
  auto* repro = app.add_subcommand("reproduce", "threshold tables and smallest-entry curves");
  std::string repro_config, repro_levels, repro_out;
  std::optional<int> repro_table, repro_figure, repro_threads;
  std::optional<double> repro_h0;
  bool repro_long = false;
  repro->add_option("--config", repro_config, "key = value file with [sections]");
  repro->add_option("--table", repro_table, "table number 1..5");
  repro->add_option("--figure", repro_figure, "figure number 2 or 3");
  repro->add_option("--levels", repro_levels, "refinement levels (M, or file level for 3 and 4)");
  repro->add_option("--h0", repro_h0, "mesh parameter for figures");
  repro->add_option("--out-dir", repro_out, "output directory");
  repro->add_option("--threads", repro_threads, "worker threads");
  repro->add_flag("--long", repro_long, "allow levels with more than 1000 interior nodes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  // mesh --------------------------------------------------------------------------------
  if (*mesh_gen) {
    if (gen_opts.family.empty()) throw UsageError("mesh gen needs --family");
    const TriMesh m = gen_opts.build();
    std::cout << "family: " << gen_opts.family << "\n";
    mesh_report(std::cout, m);
    if (!gen_out.empty()) save_triangle_format(m, gen_out + ".node", gen_out + ".ele");
    return 0;
  }
  if (*mesh_info) {
    mesh_report(std::cout, info_opts.build());
    return 0;
  }

  // kernel ------------------------------------------------------------------------------
  if (*k_ulambda) {
    const auto op = ul_op.build();
    if (!(ul_lambda > 0.0)) throw UsageError("--lambda must be positive");
    const auto ts = times_from(ul_t, ul_scan, ul_grid);
    Sink sink(ul_out);
    write_header(sink.out(), argument_text(k_ulambda));
    sink.out() << "t,u_lambda\n";
    for (double t : ts) {
      if (t < 0.0) throw UsageError("--t must be >= 0");
      sink.out() << num(t) << "," << num(u_lambda(op, ul_lambda, t)) << "\n";
    }
    return 0;
  }
  if (*k_weights) {
    const auto op = w_op.build();
    if (!(w_tau > 0.0) || w_n < 0) throw UsageError("need --tau > 0 and --n >= 0");
    Sink sink(w_out);
    write_header(sink.out(), argument_text(k_weights));
    sink.out() << "j,omega\n";
    const auto w = cq_weights(op, w_tau, w_n);
    for (std::size_t j = 0; j < w.size(); ++j) sink.out() << j << "," << num(w[j]) << "\n";
    return 0;
  }
  if (*k_mittag) {
    if (!(ml_alpha > 0.0 && ml_alpha <= 1.0)) throw UsageError("--alpha must lie in (0, 1]");
    Sink sink(ml_out);
    write_header(sink.out(), argument_text(k_mittag));
    sink.out() << "x,E_alpha\n";
    for (double x : parse_list(ml_x, "--x")) {
      sink.out() << num(x) << "," << num(mittag_leffler(ml_alpha, x)) << "\n";
    }
    return 0;
  }

  // semi / fully -----------------------------------------------------------------------------
  auto threshold_report = [](std::ostream& out, const ThresholdReport& r, const char* name) {
    out << "status: " << to_string(r.status) << "\n";
    if (r.found()) {
      out << name << ": " << sig3(r.value) << "\n";
      out << "bracket: " << num(r.bracket.first) << " " << num(r.bracket.second) << "\n";
    }
    out << "tolerance: " << num(r.tolerance) << "\n";
  };

  if (*semi_curve) {
    const auto sys = build_fem_system(s_curve.mesh.build(), method_of(s_curve.method));
    const auto op = s_curve.op.build();
    Sink sink(s_curve.out);
    write_header(sink.out(), argument_text(semi_curve));
    sink.out() << "t,min_entry\n";
    for (const auto& [t, m] : min_entry_curve(sys, op, s_curve.scan.spec().grid())) {
      sink.out() << num(t) << "," << num(m) << "\n";
    }
    return 0;
  }
  if (*semi_thr) {
    const auto sys = build_fem_system(s_thr.mesh.build(), method_of(s_thr.method));
    const auto r = positivity_threshold(sys, s_thr.op.build(), s_thr.scan.spec(), s_thr.scan.tol);
    Sink sink(s_thr.out);
    threshold_report(sink.out(), r, "t0");
    return 0;
  }
  if (*semi_cert) {
    const TriMesh m = s_cert.mesh.build();
    const auto method = method_of(s_cert.method);
    const auto sys = build_fem_system(m, method);
    const bool delaunay = is_delaunay(m);
    const bool stieltjes = is_stieltjes(sys.stiffness);
    const auto inv = h_inverse_positive(sys);
    const auto power = h_eventually_positive(sys, 8);
    std::cout << "method: " << to_string(method) << "\n";
    std::cout << "delaunay: " << (delaunay ? "true" : "false") << "\n";
    std::cout << "stiffness stieltjes: " << (stieltjes ? "true" : "false") << "\n";
    std::cout << "stiffness diagonally dominant: "
              << (is_diagonally_dominant(sys.stiffness) ? "true" : "false") << "\n";
    std::cout << "H^-1 positive: " << (inv.positive ? "true" : "false")
              << " (min entry " << num(inv.min_entry) << ")\n";
    std::cout << "H^-k positive from k: " << (power ? std::to_string(*power) : "none up to 8")
              << "\n";
    const char* verdict = "no certificate";
    if (method == FemMethod::LM && delaunay) {
      verdict = "nonnegative for all t";
    } else if (inv.positive) {
      verdict = "nonnegative for large t";
    }
    std::cout << "verdict: " << verdict << "\n";
    return 0;
  }
  if (*fully_thr) {
    const auto sys = build_fem_system(f_thr.mesh.build(), method_of(f_thr.method));
    const auto r =
        fd_positivity_threshold(sys, f_thr.op.build(), f_thr.scan.spec(), f_thr.scan.tol);
    Sink sink(f_thr.out);
    threshold_report(sink.out(), r, "tau0");
    const auto bound = first_step_positivity_omega(sys, f_thr.scan.tol);
    const char* status = bound.status == OmegaBound::Status::Bounded     ? "bounded"
                         : bound.status == OmegaBound::Status::Unbounded ? "unbounded"
                                                                         : "never";
    sink.out() << "omega_max: " << status;
    if (bound.status == OmegaBound::Status::Bounded) sink.out() << " " << num(bound.omega_max);
    sink.out() << "\n";
    sink.out() << "omega bound (min over pairs): " << num(bound.certified_min_form) << "\n";
    sink.out() << "omega bound (max over pairs): " << num(bound.printed_max_form) << "\n";
    if (bound.certified_min_form != bound.printed_max_form) {
      sink.out() << "note: the min form is the one that certifies E_1 >= 0\n";
    }
    return 0;
  }
  if (*fully_conv) {
    if (conv_from < 0 || conv_to <= conv_from || conv_to > 20) {
      throw UsageError("need 0 <= --from < --to <= 20");
    }
    const auto sys = build_fem_system(f_conv.mesh.build(), method_of(f_conv.method));
    std::vector<int> steps;
    for (int k = conv_from; k <= conv_to; ++k) steps.push_back(1 << k);
    const auto r = convergence_rate(sys, f_conv.op.build(), conv_t, steps);
    Sink sink(f_conv.out);
    write_header(sink.out(), argument_text(fully_conv));
    sink.out() << "n,error\n";
    for (std::size_t k = 0; k < steps.size(); ++k) {
      sink.out() << steps[k] << "," << num(r.errors[k]) << "\n";
    }
    sink.out() << "# rate " << num(r.rate) << "\n";
    return 0;
  }
  if (*fully_con) {
    const auto sys = build_fem_system(f_con.mesh.build(), method_of(f_con.method));
    const auto r = max_norm_contractivity_check(sys, f_con.op.build(),
                                                parse_list(con_taus, "--taus"), con_n);
    Sink sink(f_con.out);
    write_header(sink.out(), argument_text(fully_con));
    sink.out() << "tau,max_norm,worst_step\n";
    for (const auto& row : r.rows) {
      sink.out() << num(row.tau) << "," << num(row.max_norm) << "," << row.worst_step << "\n";
    }
    sink.out() << "# diagonally dominant " << (r.diagonally_dominant ? "true" : "false")
               << ", contractive " << (r.implication_holds ? "true" : "false") << "\n";
    return r.implication_holds ? 0 : 1;
  }

  // reproduce -------------------------------------------------------------------------------
  if (*repro) {
    Config cfg;
    if (!repro_config.empty()) cfg = Config::load(repro_config);
    if (repro_table) cfg.set("run.table", std::to_string(*repro_table));
    if (repro_figure) cfg.set("run.figure", std::to_string(*repro_figure));
    if (!repro_levels.empty()) cfg.set("mesh.levels", repro_levels);
    if (repro_h0) cfg.set("mesh.h0", num(*repro_h0));
    if (repro_long) cfg.set("run.long", "true");

    ReproSettings s;
    auto number = [&](const std::string& key, double fallback) {
      const auto v = cfg.get(key);
      return v ? parse_double(*v, key) : fallback;
    };
    s.table = static_cast<int>(number("run.table", 0));
    s.figure = static_cast<int>(number("run.figure", 0));
    if ((s.table == 0) == (s.figure == 0)) throw UsageError("give exactly one of table or figure");
    if (s.table && (s.table < 1 || s.table > 5)) throw UsageError("table must be 1..5");
    if (s.figure && s.figure != 2 && s.figure != 3) throw UsageError("figure must be 2 or 3");
    if (auto v = cfg.get("mesh.levels")) s.levels = parse_int_list(*v, "levels");
    s.h0 = number("mesh.h0", 0.1);
    if (!(s.h0 > 0.0 && s.h0 <= 0.5)) throw UsageError("h0 must lie in (0, 1/2]");
    s.scan.lo = number("scan.lo", s.figure == 3 ? 1e-8 : 1e-8);
    s.scan.hi = number("scan.hi", s.figure == 3 ? 1e3 : 1e2);
    s.scan.per_decade = static_cast<int>(number("scan.per_decade", 25));
    if (!(s.scan.lo > 0.0 && s.scan.hi > s.scan.lo) || s.scan.per_decade < 1) {
      throw UsageError("scan range must satisfy 0 < lo < hi");
    }
    if (auto v = cfg.get("scan.tol")) s.tol = parse_double(*v, "scan.tol");
    if (auto v = cfg.get("run.long")) s.long_run = *v == "true" || *v == "1";
    if (auto v = cfg.get("mesh.dir")) {
      s.mesh_dir = *v;
    } else if (const char* env = std::getenv("FRACPOS_MESH_DIR")) {
      s.mesh_dir = env;
    }
    // output location and thread count do not change results, so they stay out of the hash
    const std::string config_text = cfg.canonical();
    if (!repro_out.empty()) {
      s.out_dir = repro_out;
    } else if (auto v = cfg.get("output.dir")) {
      s.out_dir = *v;
    } else if (const char* env = std::getenv("FRACPOS_OUT_DIR")) {
      s.out_dir = env;
    }
    std::optional<int> threads = repro_threads;
    if (!threads) {
      if (auto v = cfg.get("run.threads")) threads = static_cast<int>(parse_double(*v, "threads"));
    }
    s.threads = thread_count(threads);
    return s.table ? reproduce_table(s, config_text) : reproduce_figure(s, config_text);
  }
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "ParseError: " << e.what() << "\n";
    return 2;
  } catch (const InvalidParameter& e) {
    std::cerr << "InvalidParameter: " << e.what() << "\n";
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "DomainError: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
